#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qkerr::harness::{self, csv, InitialState};
use qkerr::qalgebra::DEFAULT_TAIL_TOL;
use qkerr::{CoherentSpec, DeformationParam, Error, LogBase, SystemParams};

/// Smallest q the command line accepts.
const CLI_MIN_Q: f64 = 0.05;

const FOCK_GAMMA_T_MAX: f64 = 700.0;
const FOCK_STEPS: usize = 14_000;
const COHERENT_GAMMA_T_MAX: f64 = 1400.0;
const COHERENT_STEPS: usize = 28_000;

#[derive(Parser)]
#[command(
    name = "qkerr",
    version,
    about = "Entanglement dynamics of a q-deformed field in a Kerr medium"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Field entropy against q at a fixed time.
    SweepQ {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        initial: Initial,
        #[command(flatten)]
        qgrid: QGrid,
        /// Evaluation time.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        t: f64,
    },
    /// Entropy time series.
    Evolve {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        initial: Initial,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        /// First time sample.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t_min: f64,
        /// Last time sample [default: γt = 700 (fock) or 1400 (coherent)].
        #[arg(long, allow_negative_numbers = true)]
        t_max: Option<f64>,
        /// Number of intervals; the grid has steps + 1 samples
        /// [default: 14000 (fock) or 28000 (coherent)].
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Grid scan plus parabolic refinement for the q that maximizes the field entropy.
    FindOptimalQ {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        initial: Initial,
        #[command(flatten)]
        qgrid: QGrid,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        t: f64,
    },
    /// Revival dips in a series written by `evolve`.
    Revivals {
        /// Series CSV produced by `evolve`.
        #[arg(long)]
        input: PathBuf,
        /// Kerr nonlinearity that sets the revival time 2π/χ.
        #[arg(long)]
        chi: f64,
        /// Fraction of the series maximum below which a minimum counts as a dip.
        #[arg(long, default_value_t = 0.2)]
        threshold: f64,
        /// Lower edge of the γt window.
        #[arg(long, default_value_t = 0.0)]
        window_lo: f64,
        /// Upper edge of the γt window.
        #[arg(long, default_value_t = f64::INFINITY)]
        window_hi: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Shared {
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 0.0)]
    chi: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    gamma: f64,
    #[arg(long, default_value = "2", value_parser = parse_log_base)]
    log_base: LogBase,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitialKind {
    Fock,
    Coherent,
}

#[derive(Args)]
struct Initial {
    #[arg(long, value_enum, default_value = "fock")]
    initial: InitialKind,
    #[arg(long, default_value_t = 5)]
    fock_n: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha_sq: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha_phase: f64,
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    tail_tol: f64,
}

#[derive(Args)]
struct QGrid {
    #[arg(long, default_value_t = 0.5)]
    q_min: f64,
    #[arg(long, default_value_t = 1.0)]
    q_max: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 200)]
    q_steps: usize,
}

fn parse_log_base(s: &str) -> Result<LogBase, String> {
    s.parse()
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_invalid_argument() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn io_failure(e: io::Error) -> Failure {
    Failure::Numerical(format!("write failed: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::SweepQ {
            shared,
            initial,
            qgrid,
            t,
        } => {
            let params = system_params(&shared, 1.0)?;
            let initial = initial_state(&initial)?;
            let qs = q_grid(&qgrid)?;
            check_time(t)?;
            let rows = harness::sweep_q(&initial, &params, &qs, t, shared.log_base)?;
            with_output(&shared.out, |w| csv::write_sweep(w, &rows))
        }
        Command::Evolve {
            shared,
            initial,
            q,
            t_min,
            t_max,
            steps,
        } => {
            let params = system_params(&shared, q)?;
            let initial = initial_state(&initial)?;
            let (default_gt, default_steps) = match initial {
                InitialState::Fock(_) => (FOCK_GAMMA_T_MAX, FOCK_STEPS),
                InitialState::Coherent { .. } => (COHERENT_GAMMA_T_MAX, COHERENT_STEPS),
            };
            let t_max = match t_max {
                Some(t) => t,
                None if params.gamma != 0.0 => default_gt / params.gamma.abs(),
                None => return Err(usage("--t-max is required when gamma = 0")),
            };
            let steps = steps.unwrap_or(default_steps);
            check_time(t_min)?;
            check_time(t_max)?;
            if steps == 0 || !(t_max > t_min) {
                return Err(usage("time grid needs t_max > t_min and steps ≥ 1"));
            }
            let times = harness::linspace(t_min, t_max, steps + 1);
            let series = harness::entropy_series(&initial, &params, &times, shared.log_base)?;
            with_output(&shared.out, |w| csv::write_series(w, &series))
        }
        Command::FindOptimalQ {
            shared,
            initial,
            qgrid,
            t,
        } => {
            let params = system_params(&shared, 1.0)?;
            let initial = initial_state(&initial)?;
            let qs = q_grid(&qgrid)?;
            check_time(t)?;
            let best = harness::find_optimal_q(&initial, &params, &qs, t, shared.log_base)?;
            println!("q_star,S_star");
            println!(
                "{},{}",
                csv::fmt_sig(best.q_star),
                csv::fmt_sig(best.s_star)
            );
            match &shared.out {
                Some(_) => with_output(&shared.out, |w| csv::write_sweep(w, &best.scan)),
                None => Ok(()),
            }
        }
        Command::Revivals {
            input,
            chi,
            threshold,
            window_lo,
            window_hi,
            out,
        } => {
            let file = File::open(&input)
                .map_err(|e| usage(&format!("cannot open {}: {e}", input.display())))?;
            let series = csv::read_series(BufReader::new(file))
                .map_err(|e| usage(&format!("{}: {e}", input.display())))?;
            let report = harness::detect_revivals(&series, chi, threshold, (window_lo, window_hi))?;
            with_output(&out, |w| csv::write_revivals(w, &report))
        }
    }
}

fn usage(msg: &str) -> Failure {
    Failure::Usage(msg.to_string())
}

fn cli_q(q: f64) -> Result<DeformationParam, Failure> {
    if !(q > CLI_MIN_Q) {
        return Err(usage(&format!("q must exceed {CLI_MIN_Q}, got {q}")));
    }
    Ok(DeformationParam::new(q)?)
}

fn system_params(shared: &Shared, q: f64) -> Result<SystemParams, Failure> {
    Ok(SystemParams::new(
        shared.omega,
        shared.chi,
        shared.gamma,
        cli_q(q)?,
    )?)
}

fn initial_state(args: &Initial) -> Result<InitialState, Failure> {
    Ok(match args.initial {
        InitialKind::Fock => InitialState::Fock(args.fock_n),
        InitialKind::Coherent => {
            if !(args.tail_tol > 0.0 && args.tail_tol < 1.0) {
                return Err(usage("--tail-tol must lie in (0, 1)"));
            }
            InitialState::Coherent {
                spec: CoherentSpec::new(args.alpha_sq, args.alpha_phase)?,
                tail_tol: args.tail_tol,
            }
        }
    })
}

fn q_grid(grid: &QGrid) -> Result<Vec<f64>, Failure> {
    cli_q(grid.q_min)?;
    cli_q(grid.q_max)?;
    if grid.q_steps == 0 {
        return Err(usage("--q-steps must be at least 1"));
    }
    if grid.q_steps > 1 && !(grid.q_max > grid.q_min) {
        return Err(usage("q grid needs q_max > q_min"));
    }
    Ok(harness::linspace(grid.q_min, grid.q_max, grid.q_steps))
}

fn check_time(t: f64) -> Result<(), Failure> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(usage(&format!("time must be finite, got {t}")))
    }
}

fn with_output(
    path: &Option<PathBuf>,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(io_failure)?;
            let mut w = BufWriter::new(file);
            write(&mut w).map_err(io_failure)?;
            w.flush().map_err(io_failure)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w).map_err(io_failure)
        }
    }
}
