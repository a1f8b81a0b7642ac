use crate::C64;

/// What a [`Grid`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridRole {
    /// Transmitted frequency-domain symbols `X[i,k]`.
    TxFreq,
    /// Received frequency-domain samples `Y[i,k]` after overlap-and-add.
    RxFreq,
    /// Equalized symbols `Z[i,k]`.
    Equalized,
    /// True channel frequency response.
    Cfr,
    /// Any estimate of the channel frequency response.
    CfrEstimate,
}

/// Time-frequency array indexed `[symbol, subcarrier]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    role: GridRole,
    data: Vec<C64>,
}

impl Grid {
    pub fn zeros(rows: usize, cols: usize, role: GridRole) -> Self {
        Self {
            rows,
            cols,
            role,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<C64>>, role: GridRole) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "grid rows must be rectangular");
        Self {
            rows: rows.len(),
            cols,
            role,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn role(&self) -> GridRole {
        self.role
    }

    pub fn with_role(mut self, role: GridRole) -> Self {
        self.role = role;
        self
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, k: usize) -> C64 {
        self.data[i * self.cols + k]
    }

    pub fn set(&mut self, i: usize, k: usize, v: C64) {
        self.data[i * self.cols + k] = v;
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[C64]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
}
