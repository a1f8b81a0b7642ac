//! Baseband transmit/receive chain: mapping, OFDM, PN framing, propagation,
//! PN removal, overlap-and-add and one-tap equalization.

mod constellation;
mod frame;

pub use constellation::{demap_hard, map_bits, Constellation, Modulation};
pub use frame::{
    assemble, equalize, ofdm_demodulate, ofdm_modulate, ola, propagate, remove_pn, Equalized,
    TimeSignal,
};
