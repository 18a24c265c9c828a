//! Learning-rate grid, weight matrices over (expert x learning rate) and the
//! truncated-simplex mirror-descent step.
//!
//! Each pair `(i, j)` of an expert `i` and a grid index `j` is treated as a
//! virtual expert. A [`WeightMatrix`] stores one row per expert and one column
//! per learning rate, row-major.

mod bregman;
mod solver;

pub use bregman::{bregman_divergence, negentropy_potential};
pub use solver::{
    excess_mass, kkt_residual, solve_truncated_omd, solve_truncated_omd_with_report, OmdProblem,
    SolveReport, BRACKET_TOLERANCE, MASS_TOLERANCE, MAX_ITERATIONS,
};

use crate::error::{OomdError, Result};
use crate::ExpertId;

/// Geometric learning-rate grid `eta(j) = 2^j / (16 T)` for `j = 1..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningRateGrid {
    horizon: usize,
    eta: Vec<f64>,
}

impl LearningRateGrid {
    /// Builds the grid for horizon `horizon`. Without an override the size is
    /// `ceil(log2 T^2)`.
    pub fn new(horizon: usize, m_override: Option<usize>) -> Result<Self> {
        if horizon < 2 {
            return Err(OomdError::HorizonTooShort(horizon));
        }
        let m = match m_override {
            Some(0) => return Err(OomdError::EmptyGrid),
            Some(m) => m,
            None => Self::theoretical_size(horizon),
        };
        let denom = 16.0 * horizon as f64;
        let eta = (1..=m).map(|j| 2f64.powi(j as i32) / denom).collect();
        Ok(Self { horizon, eta })
    }

    /// Smallest `M` with `2^M >= T^2`, i.e. `ceil(log2 T^2)`.
    pub fn theoretical_size(horizon: usize) -> usize {
        let sq = (horizon as u128) * (horizon as u128);
        if sq <= 1 {
            return 0;
        }
        (128 - (sq - 1).leading_zeros()) as usize
    }

    /// Keeps only the leading grid points with `eta <= max_eta`. At least the
    /// first point is always kept.
    pub fn truncated(&self, max_eta: f64) -> Self {
        let keep = self.eta.iter().take_while(|&&e| e <= max_eta).count().max(1);
        Self {
            horizon: self.horizon,
            eta: self.eta[..keep].to_vec(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    /// Learning rate at zero-based column `col` (grid index `j = col + 1`).
    pub fn eta(&self, col: usize) -> f64 {
        self.eta[col]
    }

    pub fn etas(&self) -> &[f64] {
        &self.eta
    }
}

/// Subset of grid columns that currently carry usable weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSet {
    mask: Vec<bool>,
}

impl ActiveSet {
    pub fn full(m: usize) -> Self {
        Self {
            mask: vec![true; m],
        }
    }

    pub fn empty(m: usize) -> Self {
        Self {
            mask: vec![false; m],
        }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        Self { mask }
    }

    /// Builds a set from zero-based column indices.
    pub fn from_members(m: usize, members: &[usize]) -> Self {
        let mut mask = vec![false; m];
        for &c in members {
            mask[c] = true;
        }
        Self { mask }
    }

    pub fn contains(&self, col: usize) -> bool {
        self.mask[col]
    }

    pub fn insert(&mut self, col: usize) {
        self.mask[col] = true;
    }

    pub fn remove(&mut self, col: usize) {
        self.mask[col] = false;
    }

    /// Zero-based indices of active columns in increasing order.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(c, &a)| a.then_some(c))
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&a| a).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&a| a)
    }

    /// Size of the ambient grid.
    pub fn grid_len(&self) -> usize {
        self.mask.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Bitmask string, column 1 first (`"1101"`).
    pub fn to_bitstring(&self) -> String {
        self.mask.iter().map(|&a| if a { '1' } else { '0' }).collect()
    }
}

/// Nonnegative weights over (expert x grid column), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    ids: Vec<ExpertId>,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(ids: Vec<ExpertId>, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != ids.len() * cols {
            return Err(OomdError::DimensionMismatch(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                ids.len(),
                cols
            )));
        }
        if let Some((k, &v)) = data.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(OomdError::Infeasible(format!(
                "negative or NaN weight {v} at ({}, {})",
                k / cols.max(1),
                k % cols.max(1)
            )));
        }
        Ok(Self { ids, cols, data })
    }

    pub fn filled(ids: Vec<ExpertId>, cols: usize, value: f64) -> Self {
        let n = ids.len() * cols;
        Self {
            ids,
            cols,
            data: vec![value; n],
        }
    }

    pub fn from_fn(ids: Vec<ExpertId>, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let rows = ids.len();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { ids, cols, data }
    }

    pub fn ids(&self) -> &[ExpertId] {
        &self.ids
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_parts(self) -> (Vec<ExpertId>, usize, Vec<f64>) {
        (self.ids, self.cols, self.data)
    }

    pub fn row_of(&self, id: ExpertId) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.data.iter().copied())
    }

    pub fn row_total(&self, row: usize) -> f64 {
        compensated_sum(self.row(row).iter().copied())
    }

    pub fn column_total(&self, col: usize) -> f64 {
        compensated_sum((0..self.rows()).map(|r| self.get(r, col)))
    }

    pub(crate) fn check_positive(&self) -> Result<()> {
        match self.data.iter().position(|&v| !(v > 0.0)) {
            Some(k) => Err(OomdError::NonPositiveWeight {
                row: k / self.cols,
                col: k % self.cols,
                value: self.data[k],
            }),
            None => Ok(()),
        }
    }
}

/// Neumaier-compensated summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
