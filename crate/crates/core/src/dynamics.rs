//! State preparation, spectral propagation, partial traces and entropies.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::blocks::{build_block, triangle_basis, two_mode_hamiltonian, SystemParams};
use crate::eigen::{eigh_hermitian, eigh_tridiagonal, eigvalsh_hermitian, BlockSpectrum};
use crate::error::{Error, Result};
use crate::qalgebra::{coherent_amplitudes_auto, CoherentSpec, DeformationParam};

const DENSITY_HERMITIAN_TOL: f64 = 1e-12;
const DENSITY_TRACE_TOL: f64 = 1e-10;
const NEGATIVE_EIGEN_TOL: f64 = 1e-10;
const MAX_DENSE_REFERENCE_N: usize = 20;

/// Pure two-mode state truncated to total excitation `n + m ≤ n_max`.
///
/// Amplitudes are stored per excitation block: `blocks[N][m] = ψ(N − m, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    blocks: Vec<Array1<Complex64>>,
}

impl TwoModeState {
    /// All-zero table; not a valid state until filled.
    fn zeros(n_max: usize) -> Self {
        Self {
            blocks: (0..=n_max).map(|n| Array1::zeros(n + 1)).collect(),
        }
    }

    /// Builds a state from `f(n, m)` over the triangle `n + m ≤ n_max`.
    pub fn from_fn(n_max: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self {
            blocks: (0..=n_max)
                .map(|total| (0..=total).map(|m| f(total - m, m)).collect())
                .collect(),
        }
    }

    pub fn n_max(&self) -> usize {
        self.blocks.len() - 1
    }

    /// `ψ(n, m)`, zero outside the retained triangle.
    pub fn amplitude(&self, n: usize, m: usize) -> Complex64 {
        self.blocks
            .get(n + m)
            .map(|b| b[m])
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    pub fn block(&self, total: usize) -> Option<&Array1<Complex64>> {
        self.blocks.get(total)
    }

    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter(
                "cannot normalize a zero state".into(),
            ));
        }
        for b in &mut self.blocks {
            b.mapv_inplace(|c| c / norm);
        }
        Ok(self)
    }

    /// Amplitude table `ψ[n, m]` of shape `(n_max+1, n_max+1)`.
    pub fn to_table(&self) -> Array2<Complex64> {
        let dim = self.n_max() + 1;
        let mut table = Array2::zeros((dim, dim));
        for (total, b) in self.blocks.iter().enumerate() {
            for (m, &c) in b.iter().enumerate() {
                table[[total - m, m]] = c;
            }
        }
        table
    }

    /// Largest componentwise difference; states of different size are padded with zeros.
    pub fn max_abs_diff(&self, other: &TwoModeState) -> f64 {
        let n_max = self.n_max().max(other.n_max());
        let mut worst = 0.0_f64;
        for total in 0..=n_max {
            for m in 0..=total {
                let n = total - m;
                worst = worst.max((self.amplitude(n, m) - other.amplitude(n, m)).norm());
            }
        }
        worst
    }
}

/// `|N⟩_q ⊗ |0⟩_a`.
pub fn prepare_fock(n: usize) -> TwoModeState {
    let mut state = TwoModeState::zeros(n);
    state.blocks[n][0] = Complex64::new(1.0, 0.0);
    state
}

/// `|α⟩_q ⊗ |0⟩_a`, truncated where the relative tail weight drops below `tail_tol`.
pub fn prepare_coherent(
    spec: &CoherentSpec,
    q: DeformationParam,
    tail_tol: f64,
) -> Result<TwoModeState> {
    let amps = coherent_amplitudes_auto(spec, q, tail_tol)?;
    let mut state = TwoModeState::zeros(amps.len() - 1);
    for (n, c) in amps.into_iter().enumerate() {
        state.blocks[n][0] = c;
    }
    Ok(state)
}

/// Block spectra for `N = 0..=n_max` under one parameter set. Immutable once built.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    params: SystemParams,
    spectra: Vec<BlockSpectrum>,
}

impl SpectralCache {
    pub fn new(params: SystemParams, n_max: usize) -> Result<Self> {
        let spectra = (0..=n_max)
            .into_par_iter()
            .map(|n| {
                let block = build_block(&params, n);
                eigh_tridiagonal(&block.diag, &block.offdiag).map_err(|e| match e {
                    Error::EigenNotConverged { iterations, .. } => Error::EigenNotConverged {
                        block: n,
                        iterations,
                    },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { params, spectra })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn n_max(&self) -> usize {
        self.spectra.len() - 1
    }

    pub fn spectrum(&self, n: usize) -> Option<&BlockSpectrum> {
        self.spectra.get(n)
    }

    pub fn spectra(&self) -> &[BlockSpectrum] {
        &self.spectra
    }

    /// Largest `‖H v − λ v‖₂ / max(1, ‖H‖_F)` over every eigenpair in the cache.
    pub fn max_residual_ratio(&self) -> f64 {
        self.spectra
            .iter()
            .map(|spec| {
                let block = build_block(&self.params, spec.n);
                let h = crate::blocks::block_matrix_dense(&block);
                let scale = block.frobenius_norm().max(1.0);
                (0..spec.dim())
                    .map(|j| {
                        let v = spec.eigenvectors.column(j);
                        let r = h.dot(&v) - &(&v * spec.eigenvalues[j]);
                        r.dot(&r).sqrt() / scale
                    })
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// Propagates `state0` by `exp(−i H t)` block by block in the eigenbasis.
pub fn evolve(state0: &TwoModeState, cache: &SpectralCache, t: f64) -> Result<TwoModeState> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time must be finite, got {t}"
        )));
    }
    if let Some(n) = (0..=state0.n_max()).find(|&n| cache.spectrum(n).is_none()) {
        return Err(Error::MissingBlock(n));
    }
    if t == 0.0 {
        return Ok(state0.clone());
    }
    let blocks = state0
        .blocks
        .iter()
        .enumerate()
        .map(|(n, a0)| {
            let spec = cache.spectrum(n).ok_or(Error::MissingBlock(n))?;
            if a0.iter().all(|c| c.norm_sqr() == 0.0) {
                return Ok(a0.clone());
            }
            let v = &spec.eigenvectors;
            // projections onto the eigenvectors, phased by e^{−iλt}
            let coeffs: Array1<Complex64> = v
                .columns()
                .into_iter()
                .zip(spec.eigenvalues.iter())
                .map(|(col, &lambda)| {
                    let overlap: Complex64 = col.iter().zip(a0.iter()).map(|(&c, &a)| a * c).sum();
                    overlap * Complex64::from_polar(1.0, -lambda * t)
                })
                .collect();
            Ok((0..a0.len())
                .map(|m| {
                    v.row(m)
                        .iter()
                        .zip(coeffs.iter())
                        .map(|(&c, &k)| k * c)
                        .sum::<Complex64>()
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TwoModeState { blocks })
}

/// Independent propagator: diagonalizes the full truncated two-mode
/// Hamiltonian as one dense Hermitian matrix and ignores the block structure.
pub fn dense_reference_evolve(
    state0: &TwoModeState,
    params: &SystemParams,
    t: f64,
) -> Result<TwoModeState> {
    let n_max = state0.n_max();
    if n_max > MAX_DENSE_REFERENCE_N {
        return Err(Error::InvalidParameter(format!(
            "dense reference limited to n_max ≤ {MAX_DENSE_REFERENCE_N}, got {n_max}"
        )));
    }
    let basis = triangle_basis(n_max);
    let h = two_mode_hamiltonian(params, &basis).mapv(|x| Complex64::new(x, 0.0));
    let (values, vectors) = eigh_hermitian(&h)?;
    let psi0: Array1<Complex64> = basis.iter().map(|&(n, m)| state0.amplitude(n, m)).collect();
    let proj = vectors.t().mapv(|c| c.conj()).dot(&psi0);
    let phased: Array1<Complex64> = proj
        .iter()
        .zip(values.iter())
        .map(|(&p, &lambda)| p * Complex64::from_polar(1.0, -lambda * t))
        .collect();
    let psi_t = vectors.dot(&phased);
    let mut out = TwoModeState::zeros(n_max);
    for (&(n, m), &c) in basis.iter().zip(psi_t.iter()) {
        out.blocks[n + m][m] = c;
    }
    Ok(out)
}

/// Hermitian, unit-trace reduced density operator of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: Array2<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e−12) and unit trace (1e−10).
    pub fn new(entries: Array2<Complex64>) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols || rows == 0 {
            return Err(Error::Dimension(format!(
                "density matrix must be square and nonempty, got {rows}×{cols}"
            )));
        }
        let mut worst = 0.0_f64;
        for i in 0..rows {
            for j in 0..rows {
                worst = worst.max((entries[[i, j]] - entries[[j, i]].conj()).norm());
            }
        }
        if worst > DENSITY_HERMITIAN_TOL {
            return Err(Error::NotHermitian(worst));
        }
        let rho = Self { entries };
        let tr = rho.trace();
        if (tr - 1.0).abs() > DENSITY_TRACE_TOL {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace is {tr}"
            )));
        }
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.diag().iter().map(|c| c.re).sum()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst = 0.0_f64;
        for ((i, j), c) in self.entries.indexed_iter() {
            if i != j {
                worst = worst.max(c.norm());
            }
        }
        worst
    }
}

/// `(ρ_q)_{n,n′} = Σ_m ψ(n, m) ψ*(n′, m)`.
pub fn reduced_field(state: &TwoModeState) -> Result<DensityMatrix> {
    let table = state.to_table();
    DensityMatrix::new(table.dot(&table.t().mapv(|c| c.conj())))
}

/// `(ρ_a)_{m,m′} = Σ_n ψ(n, m) ψ*(n, m′)`.
pub fn reduced_atom(state: &TwoModeState) -> Result<DensityMatrix> {
    let table = state.to_table();
    DensityMatrix::new(table.t().dot(&table.mapv(|c| c.conj())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    Two,
    E,
}

impl LogBase {
    pub fn value(self) -> f64 {
        match self {
            LogBase::Two => 2.0,
            LogBase::E => std::f64::consts::E,
        }
    }

    fn ln(self) -> f64 {
        match self {
            LogBase::Two => std::f64::consts::LN_2,
            LogBase::E => 1.0,
        }
    }
}

impl FromStr for LogBase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "2" => Ok(LogBase::Two),
            "e" => Ok(LogBase::E),
            other => Err(format!("log base must be 2 or e, got {other:?}")),
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogBase::Two => f.write_str("2"),
            LogBase::E => f.write_str("e"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyResult {
    pub value: f64,
    pub log_base: LogBase,
}

/// `S = −Σ λ log λ` over the spectrum of `rho`, with `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix, log_base: LogBase) -> Result<EntropyResult> {
    let eigenvalues = eigvalsh_hermitian(&rho.entries)?;
    let mut s = 0.0;
    for lambda in eigenvalues {
        if lambda < -NEGATIVE_EIGEN_TOL {
            return Err(Error::NotPositive(lambda));
        }
        if lambda > 0.0 {
            s -= lambda * lambda.ln();
        }
    }
    Ok(EntropyResult {
        value: (s / log_base.ln()).max(0.0),
        log_base,
    })
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}
