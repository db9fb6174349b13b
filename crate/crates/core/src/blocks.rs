//! Excitation blocks of the total Hamiltonian.
//!
//! `H = ½(AA† + A†A) + ω(b†b + ½) + χ b†²b² + γ(A†b + Ab†)` conserves the
//! total quantum number `n + m`. In the block with `n + m = N`, ordered by the
//! atomic occupation `m = 0..=N`, it is real symmetric tridiagonal.

use std::collections::HashMap;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::qalgebra::{box_n, ladder_down_element, ladder_up_element, DeformationParam};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Atomic natural frequency.
    pub omega: f64,
    /// Kerr nonlinearity.
    pub chi: f64,
    /// Field–atom coupling; negative values are allowed.
    pub gamma: f64,
    pub q: DeformationParam,
}

impl SystemParams {
    pub fn new(omega: f64, chi: f64, gamma: f64, q: DeformationParam) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega must be positive, got {omega}"
            )));
        }
        if !(chi.is_finite() && chi >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "chi must be non-negative, got {chi}"
            )));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be finite, got {gamma}"
            )));
        }
        Ok(Self {
            omega,
            chi,
            gamma,
            q,
        })
    }

    pub fn with_q(self, q: DeformationParam) -> Self {
        Self { q, ..self }
    }
}

/// Tridiagonal block for total excitation `n`; entry `m` of `diag` belongs to
/// `|n−m⟩_q ⊗ |m⟩_a` and `offdiag[m−1]` couples `m−1` with `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    pub n: usize,
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl BlockMatrix {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let d: f64 = self.diag.iter().map(|x| x * x).sum();
        let o: f64 = self.offdiag.iter().map(|x| x * x).sum();
        (d + 2.0 * o).sqrt()
    }
}

pub fn build_block(params: &SystemParams, n: usize) -> BlockMatrix {
    let q = params.q;
    let diag = (0..=n)
        .map(|m| {
            let field = n - m;
            let mf = m as f64;
            0.5 * (box_n(field, q) + box_n(field + 1, q))
                + params.omega * (mf + 0.5)
                + params.chi * mf * (mf - 1.0)
        })
        .collect();
    // A†b takes (n−m, m) to (n−m+1, m−1) with amplitude √m·√[n−m+1]
    let offdiag = (1..=n)
        .map(|m| params.gamma * (m as f64).sqrt() * box_n(n - m + 1, q).sqrt())
        .collect();
    BlockMatrix { n, diag, offdiag }
}

pub fn block_matrix_dense(block: &BlockMatrix) -> Array2<f64> {
    let dim = block.dim();
    let mut out = Array2::zeros((dim, dim));
    for (i, &d) in block.diag.iter().enumerate() {
        out[[i, i]] = d;
    }
    for (i, &g) in block.offdiag.iter().enumerate() {
        out[[i, i + 1]] = g;
        out[[i + 1, i]] = g;
    }
    out
}

/// Product basis `(n, m)` with `n + m ≤ n_max`, ordered by `n + m` then `m`.
pub fn triangle_basis(n_max: usize) -> Vec<(usize, usize)> {
    (0..=n_max)
        .flat_map(|total| (0..=total).map(move |m| (total - m, m)))
        .collect()
}

/// Product basis `(n, m)` with `n ≤ n_cut` and `m ≤ m_cut`, row-major in `n`.
pub fn box_basis(n_cut: usize, m_cut: usize) -> Vec<(usize, usize)> {
    (0..=n_cut)
        .flat_map(|n| (0..=m_cut).map(move |m| (n, m)))
        .collect()
}

/// Dense Hamiltonian on an arbitrary truncated product basis, assembled
/// directly from the ladder-operator actions. Transitions leaving the basis
/// are dropped.
pub fn two_mode_hamiltonian(params: &SystemParams, basis: &[(usize, usize)]) -> Array2<f64> {
    let q: DeformationParam = params.q;
    let index: HashMap<(usize, usize), usize> =
        basis.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let dim = basis.len();
    let mut h = Array2::zeros((dim, dim));
    for (col, &(n, m)) in basis.iter().enumerate() {
        let up = ladder_up_element(n, q);
        let down = if n > 0 {
            ladder_down_element(n, q).unwrap_or(0.0)
        } else {
            0.0
        };
        let mf = m as f64;
        // ½(AA† + A†A)
        h[[col, col]] += 0.5 * (up * up + down * down);
        // ω(b†b + ½) + χ b†²b²
        h[[col, col]] += params.omega * (mf + 0.5) + params.chi * mf * (mf - 1.0);
        // γ A† b
        if m > 0 {
            if let Some(&row) = index.get(&(n + 1, m - 1)) {
                h[[row, col]] += params.gamma * up * mf.sqrt();
            }
        }
        // γ A b†
        if n > 0 {
            if let Some(&row) = index.get(&(n - 1, m + 1)) {
                h[[row, col]] += params.gamma * down * (mf + 1.0).sqrt();
            }
        }
    }
    h
}
