//! Experiment drivers behind the `qkerr` command line: entropy-vs-q sweeps,
//! entropy time series, optimal-deformation search and revival detection.
//!
//! Everything here returns plain data; CSV encoding lives in [`csv`].

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::blocks::SystemParams;
use crate::dynamics::{
    evolve, prepare_coherent, prepare_fock, reduced_atom, reduced_field, von_neumann_entropy,
    LogBase, SpectralCache, TwoModeState,
};
use crate::error::{Error, Result};
use crate::qalgebra::{CoherentSpec, DeformationParam};

/// Relative distance from a multiple of the revival time still counted as "near".
pub const REVIVAL_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    /// `|N⟩_q ⊗ |0⟩_a`
    Fock(usize),
    /// `|α⟩_q ⊗ |0⟩_a`
    Coherent { spec: CoherentSpec, tail_tol: f64 },
}

impl InitialState {
    pub fn prepare(&self, q: DeformationParam) -> Result<TwoModeState> {
        match *self {
            InitialState::Fock(n) => Ok(prepare_fock(n)),
            InitialState::Coherent { spec, tail_tol } => prepare_coherent(&spec, q, tail_tol),
        }
    }
}

/// One row of an entropy time series, plus the invariants checked alongside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySample {
    pub t: f64,
    pub gamma_t: f64,
    pub s_field: f64,
    pub s_atom: f64,
    pub purity_field: f64,
    pub norm: f64,
    pub trace_field: f64,
    pub trace_atom: f64,
}

/// Evolves `state0` to time `t` and measures both reduced states.
pub fn sample_at(
    state0: &TwoModeState,
    cache: &SpectralCache,
    t: f64,
    log_base: LogBase,
) -> Result<EntropySample> {
    let state = evolve(state0, cache, t)?;
    let rho_q = reduced_field(&state)?;
    let rho_a = reduced_atom(&state)?;
    Ok(EntropySample {
        t,
        gamma_t: cache.params().gamma * t,
        s_field: von_neumann_entropy(&rho_q, log_base)?.value,
        s_atom: von_neumann_entropy(&rho_a, log_base)?.value,
        purity_field: rho_q.purity(),
        norm: state.norm(),
        trace_field: rho_q.trace(),
        trace_atom: rho_a.trace(),
    })
}

/// Entropy time series over `times`; the block spectra are computed once.
pub fn entropy_series(
    initial: &InitialState,
    params: &SystemParams,
    times: &[f64],
    log_base: LogBase,
) -> Result<Vec<EntropySample>> {
    let run = || -> Result<Vec<EntropySample>> {
        let state0 = initial.prepare(params.q)?;
        let cache = SpectralCache::new(*params, state0.n_max())?;
        times
            .par_iter()
            .map(|&t| sample_at(&state0, &cache, t, log_base))
            .collect()
    };
    run().map_err(|e| at_q(params.q, e))
}

/// Field entropy at a fixed time for each `q` in the grid, as `(q, S_field)`.
pub fn sweep_q(
    initial: &InitialState,
    params: &SystemParams,
    qs: &[f64],
    t: f64,
    log_base: LogBase,
) -> Result<Vec<(f64, f64)>> {
    qs.par_iter()
        .map(|&q| {
            let s = field_entropy_at(initial, params, q, t, log_base)?;
            Ok((q, s))
        })
        .collect()
}

fn field_entropy_at(
    initial: &InitialState,
    params: &SystemParams,
    q: f64,
    t: f64,
    log_base: LogBase,
) -> Result<f64> {
    let q = DeformationParam::new(q)?;
    let params = params.with_q(q);
    let run = || -> Result<f64> {
        let state0 = initial.prepare(q)?;
        let cache = SpectralCache::new(params, state0.n_max())?;
        Ok(sample_at(&state0, &cache, t, log_base)?.s_field)
    };
    run().map_err(|e| at_q(q, e))
}

fn at_q(q: DeformationParam, e: Error) -> Error {
    match e {
        e @ Error::AtDeformation { .. } => e,
        e => Error::AtDeformation {
            q: q.value(),
            source: Box::new(e),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalQ {
    pub q_star: f64,
    pub s_star: f64,
    /// Coarse scan as `(q, S_field)`.
    pub scan: Vec<(f64, f64)>,
}

/// Maximizes the field entropy over `q` at fixed `t`: a grid scan followed by
/// successive parabolic interpolation inside the bracket around the best grid
/// point. Ties on the grid go to the smaller `q`.
pub fn find_optimal_q(
    initial: &InitialState,
    params: &SystemParams,
    qs: &[f64],
    t: f64,
    log_base: LogBase,
) -> Result<OptimalQ> {
    let scan = sweep_q(initial, params, qs, t, log_base)?;
    let mut best = 0;
    for (i, &(_, s)) in scan.iter().enumerate() {
        if s > scan[best].1 {
            best = i;
        }
    }
    let (mut q_star, mut s_star) = scan[best];
    if best > 0 && best + 1 < scan.len() {
        let f = |q: f64| field_entropy_at(initial, params, q, t, log_base);
        (q_star, s_star) = parabolic_refine(scan[best - 1], scan[best], scan[best + 1], f)?;
    }
    Ok(OptimalQ {
        q_star,
        s_star,
        scan,
    })
}

/// Successive parabolic interpolation on a bracket `a < b < c` with
/// `f(b) ≥ f(a), f(c)`; returns the best point found.
pub fn parabolic_refine(
    mut a: (f64, f64),
    mut b: (f64, f64),
    mut c: (f64, f64),
    f: impl Fn(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    for _ in 0..100 {
        if c.0 - a.0 < 1e-11 {
            break;
        }
        let p = (b.0 - a.0) * (b.1 - c.1);
        let r = (b.0 - c.0) * (b.1 - a.1);
        let denom = p - r;
        if denom == 0.0 {
            break;
        }
        let x = b.0 - 0.5 * ((b.0 - a.0) * p - (b.0 - c.0) * r) / denom;
        if !(x > a.0 && x < c.0) || (x - b.0).abs() < 1e-13 {
            break;
        }
        let fx = (x, f(x)?);
        if fx.1 > b.1 {
            if x < b.0 {
                c = b;
            } else {
                a = b;
            }
            b = fx;
        } else if x < b.0 {
            a = fx;
        } else {
            c = fx;
        }
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DipKind {
    NearRevival,
    FractionalRevivalCandidate,
}

impl DipKind {
    pub fn label(self) -> &'static str {
        match self {
            DipKind::NearRevival => "near-revival",
            DipKind::FractionalRevivalCandidate => "fractional-revival-candidate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dip {
    pub t: f64,
    pub gamma_t: f64,
    pub entropy: f64,
    pub kind: DipKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevivalReport {
    pub dips: Vec<Dip>,
    /// Absolute entropy threshold, `threshold × max S`.
    pub threshold: f64,
}

/// Indices of strict local minima of a sampled series (endpoints excluded).
pub fn strict_local_minima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] < values[i - 1] && values[i] < values[i + 1])
        .collect()
}

/// Classifies `t` against the Kerr revival time `2π/χ`.
pub fn classify_dip(t: f64, chi: f64) -> Option<DipKind> {
    let full = 2.0 * PI / chi;
    let k = (t / full).round();
    if k >= 1.0 && (t - k * full).abs() <= REVIVAL_TOLERANCE * k * full {
        return Some(DipKind::NearRevival);
    }
    let half = PI / chi;
    let j = (t / half).round();
    if j >= 1.0 && j % 2.0 == 1.0 && (t - j * half).abs() <= REVIVAL_TOLERANCE * j * half {
        return Some(DipKind::FractionalRevivalCandidate);
    }
    None
}

/// Finds classified strict local minima of `S_field` below
/// `threshold × max S_field` with `γt` inside `window`.
pub fn detect_revivals(
    series: &[EntropySample],
    chi: f64,
    threshold: f64,
    window: (f64, f64),
) -> Result<RevivalReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if !(chi > 0.0 && chi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "revival classification needs chi > 0, got {chi}"
        )));
    }
    if !(window.0 <= window.1) {
        return Err(Error::InvalidParameter(format!(
            "empty window [{}, {}]",
            window.0, window.1
        )));
    }
    let entropies: Vec<f64> = series.iter().map(|s| s.s_field).collect();
    let max = entropies.iter().copied().fold(0.0, f64::max);
    let level = threshold * max;
    let dips = strict_local_minima(&entropies)
        .into_iter()
        .map(|i| &series[i])
        .filter(|s| s.gamma_t >= window.0 && s.gamma_t <= window.1 && s.s_field < level)
        .filter_map(|s| {
            classify_dip(s.t, chi).map(|kind| Dip {
                t: s.t,
                gamma_t: s.gamma_t,
                entropy: s.s_field,
                kind,
            })
        })
        .collect();
    Ok(RevivalReport {
        dips,
        threshold: level,
    })
}

/// `points` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (points - 1) as f64;
            (0..points)
                .map(|i| {
                    if i + 1 == points {
                        hi
                    } else {
                        lo + step * i as f64
                    }
                })
                .collect()
        }
    }
}

pub mod csv {
    //! CSV encoding: header row, comma separator, 12 significant digits.

    use std::io::{self, BufRead, Write};

    use super::{EntropySample, RevivalReport};

    pub const EVOLVE_HEADER: &str = "t,gamma_t,S_field,S_atom,purity_field";
    pub const SWEEP_HEADER: &str = "q,S_field";
    pub const REVIVAL_HEADER: &str = "t,gamma_t,S,classification";

    /// Formats like C's `%.12g`.
    pub fn fmt_sig(x: f64) -> String {
        if x == 0.0 {
            return "0".into();
        }
        if !x.is_finite() {
            return x.to_string();
        }
        let sci = format!("{x:.11e}");
        let (mantissa, exp) = sci.split_once('e').expect("exponent present");
        let exp: i32 = exp.parse().expect("integer exponent");
        if !(-4..12).contains(&exp) {
            let mantissa = trim_zeros(mantissa);
            let sign = if exp < 0 { '-' } else { '+' };
            format!("{mantissa}e{sign}{:02}", exp.abs())
        } else {
            let decimals = (11 - exp) as usize;
            trim_zeros(&format!("{x:.decimals$}")).to_string()
        }
    }

    fn trim_zeros(s: &str) -> &str {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            s
        }
    }

    pub fn write_series<W: Write>(mut w: W, series: &[EntropySample]) -> io::Result<()> {
        writeln!(w, "{EVOLVE_HEADER}")?;
        for s in series {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_sig(s.t),
                fmt_sig(s.gamma_t),
                fmt_sig(s.s_field),
                fmt_sig(s.s_atom),
                fmt_sig(s.purity_field)
            )?;
        }
        Ok(())
    }

    pub fn write_sweep<W: Write>(mut w: W, rows: &[(f64, f64)]) -> io::Result<()> {
        writeln!(w, "{SWEEP_HEADER}")?;
        for (q, s) in rows {
            writeln!(w, "{},{}", fmt_sig(*q), fmt_sig(*s))?;
        }
        Ok(())
    }

    pub fn write_revivals<W: Write>(mut w: W, report: &RevivalReport) -> io::Result<()> {
        writeln!(w, "{REVIVAL_HEADER}")?;
        for d in &report.dips {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_sig(d.t),
                fmt_sig(d.gamma_t),
                fmt_sig(d.entropy),
                d.kind.label()
            )?;
        }
        Ok(())
    }

    #[derive(Debug, thiserror::Error)]
    pub enum ReadError {
        #[error(transparent)]
        Io(#[from] io::Error),
        #[error("line {line}: {msg}")]
        Malformed { line: usize, msg: String },
    }

    /// Reads a series written by [`write_series`]. Invariant columns that the
    /// file does not carry are filled with their ideal values.
    pub fn read_series<R: BufRead>(r: R) -> Result<Vec<EntropySample>, ReadError> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.ok_or(ReadError::Malformed {
            line: 1,
            msg: "empty file".into(),
        })?;
        if header.trim() != EVOLVE_HEADER {
            return Err(ReadError::Malformed {
                line: 1,
                msg: format!("expected header {EVOLVE_HEADER:?}, got {:?}", header.trim()),
            });
        }
        let mut out = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| ReadError::Malformed {
                    line: lineno,
                    msg: e.to_string(),
                })?;
            if fields.len() != 5 {
                return Err(ReadError::Malformed {
                    line: lineno,
                    msg: format!("expected 5 columns, got {}", fields.len()),
                });
            }
            out.push(EntropySample {
                t: fields[0],
                gamma_t: fields[1],
                s_field: fields[2],
                s_atom: fields[3],
                purity_field: fields[4],
                norm: 1.0,
                trace_field: 1.0,
                trace_atom: 1.0,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::csv::fmt_sig;
    use super::*;

    fn sample(t: f64, s: f64) -> EntropySample {
        EntropySample {
            t,
            gamma_t: t,
            s_field: s,
            s_atom: s,
            purity_field: 1.0,
            norm: 1.0,
            trace_field: 1.0,
            trace_atom: 1.0,
        }
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(2.19819241104309), "2.19819241104");
        assert_eq!(fmt_sig(-0.5), "-0.5");
        assert_eq!(fmt_sig(628.318530717958), "628.318530718");
        assert_eq!(fmt_sig(1e-7), "1e-07");
        assert_eq!(fmt_sig(0.0001234), "0.0001234");
        assert_eq!(fmt_sig(1.5e13), "1.5e+13");
        assert_eq!(fmt_sig(999999999999.9), "1e+12");
    }

    #[test]
    fn grid() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
        let g = linspace(0.5, 1.0, 200);
        assert_eq!(g.len(), 200);
        assert_eq!(*g.last().unwrap(), 1.0);
    }

    #[test]
    fn local_minima() {
        assert!(strict_local_minima(&[1.0; 10]).is_empty());
        assert_eq!(
            strict_local_minima(&[3.0, 1.0, 2.0, 2.0, 0.5, 4.0]),
            vec![1, 4]
        );
        // plateau bottoms are not strict
        assert!(strict_local_minima(&[2.0, 1.0, 1.0, 2.0]).is_empty());
    }

    #[test]
    fn dip_classification() {
        let chi = 0.01;
        let full = 2.0 * PI / chi;
        assert_eq!(classify_dip(full, chi), Some(DipKind::NearRevival));
        assert_eq!(classify_dip(1.04 * full, chi), Some(DipKind::NearRevival));
        assert_eq!(classify_dip(2.0 * full, chi), Some(DipKind::NearRevival));
        assert_eq!(
            classify_dip(0.5 * full, chi),
            Some(DipKind::FractionalRevivalCandidate)
        );
        assert_eq!(
            classify_dip(1.5 * full, chi),
            Some(DipKind::FractionalRevivalCandidate)
        );
        assert_eq!(classify_dip(0.75 * full, chi), None);
        assert_eq!(classify_dip(1.0, chi), None);
    }

    #[test]
    fn constant_series_has_no_dips() {
        let series: Vec<_> = (0..100).map(|i| sample(i as f64 * 10.0, 1.0)).collect();
        let report = detect_revivals(&series, 0.01, 0.2, (0.0, 1000.0)).unwrap();
        assert!(report.dips.is_empty());
    }

    #[test]
    fn synthetic_dip_detected() {
        let chi = 0.01;
        let full = 2.0 * PI / chi;
        let series: Vec<_> = (0..1000)
            .map(|i| {
                let t = i as f64;
                let s = if (t - full.round()).abs() < 0.5 {
                    0.05
                } else {
                    1.0 + 0.001 * t
                };
                sample(t, s)
            })
            .collect();
        let report = detect_revivals(&series, chi, 0.2, (0.9 * full, 1.1 * full)).unwrap();
        assert_eq!(report.dips.len(), 1);
        assert_eq!(report.dips[0].kind, DipKind::NearRevival);
        assert_eq!(report.dips[0].t, full.round());
    }

    #[test]
    fn revival_argument_checks() {
        let series = vec![sample(0.0, 1.0)];
        assert!(detect_revivals(&series, 0.01, 0.0, (0.0, 1.0)).is_err());
        assert!(detect_revivals(&series, 0.01, 1.0, (0.0, 1.0)).is_err());
        assert!(detect_revivals(&series, 0.0, 0.2, (0.0, 1.0)).is_err());
        assert!(detect_revivals(&series, 0.01, 0.2, (2.0, 1.0)).is_err());
    }

    #[test]
    fn parabola_vertex_found() -> Result<()> {
        let f = |x: f64| Ok(2.0 - (x - 0.3712).powi(2) - (x - 0.3712).powi(4));
        let (x, y) = parabolic_refine((0.3, f(0.3)?), (0.35, f(0.35)?), (0.4, f(0.4)?), f)?;
        assert!((x - 0.3712).abs() < 1e-6, "{x}");
        assert!((y - 2.0).abs() < 1e-12);
        Ok(())
    }

    #[test]
    fn csv_round_trip() {
        let series = vec![sample(0.0, 0.0), sample(0.05, 0.125)];
        let mut buf = Vec::new();
        csv::write_series(&mut buf, &series).unwrap();
        let back = csv::read_series(buf.as_slice()).unwrap();
        assert_eq!(back, series);
        assert!(csv::read_series("t,S\n1,2\n".as_bytes()).is_err());
        assert!(
            csv::read_series(format!("{}\n1,2,x,4,5\n", csv::EVOLVE_HEADER).as_bytes()).is_err()
        );
    }
}
