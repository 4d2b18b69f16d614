//! The `experiment` and `bench` subcommands: a seeded convergence study of
//! the restarted solvers (per-cycle CSV, summary table, optional SVG chart)
//! and a scheme/operator timing benchmark.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use num_complex::Complex64 as C64;

use ttensor::bfomfom::{restarted_bfomfom_observed, RestartOptions, RestartStatus};
use ttensor::krylov::{BlockOperator, FourierDiagOperator, InnerProductScheme};
use ttensor::matfun::ScalarFunction;
use ttensor::netcomm::random_network_tensor;
use ttensor::spectral::{face_diagonalize, forward_block_transform, BcircOperator};
use ttensor::tensor::{identity_tensor, BlockVector, Tensor3};
use ttensor::tfunc::{t_function, Backend, KrylovRepresentation};
use ttensor::{CMat, Error, Result};

use crate::ops::{case_name, parse_case, parse_scheme, scheme_name};
use crate::svg::{line_chart, Series};

#[derive(Args)]
pub(crate) struct ExperimentArgs {
    /// Nodes per slice of the generated network tensor.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Number of slices.
    #[arg(long, default_value_t = 50)]
    pub p: usize,
    /// Edge probability in (0, 1).
    #[arg(long, default_value_t = 0.1)]
    pub density: f64,
    /// RNG seed of the network tensor.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Restart lengths to sweep, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5")]
    pub m: Vec<usize>,
    /// Convergence tolerance on the relative cycle update.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Inner-product schemes to run, comma separated (classical, global).
    #[arg(long, value_delimiter = ',', default_value = "classical,global")]
    pub scheme: Vec<String>,
    /// Operator cases to run, comma separated (bcirc, fourier-d).
    #[arg(long = "case", value_delimiter = ',', default_value = "bcirc,fourier-d")]
    pub case: Vec<String>,
    /// Oracle backend for the true-error column: auto, dense, or facewise.
    #[arg(long, default_value = "auto")]
    pub backend: String,
    /// Restart cycle budget.
    #[arg(long, default_value_t = 50)]
    pub max_cycles: usize,
    /// Output directory; receives convergence.csv and summary.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write convergence.svg, a log-scale error-vs-cycle chart.
    #[arg(long)]
    pub svg: bool,
}

/// One (m, scheme, case) combination of the sweep.
struct Combination {
    m: usize,
    scheme: InnerProductScheme,
    case: KrylovRepresentation,
}

/// A finished combination: per-cycle records plus the terminal status.
struct RunResult {
    rows: Vec<CycleRow>,
    cycles: usize,
    status: RestartStatus,
}

struct CycleRow {
    cycle: usize,
    update_norm: f64,
    true_rel_error: f64,
    wall_ms: f64,
}

fn status_label(status: &RestartStatus) -> &'static str {
    match status {
        RestartStatus::Converged => "converged",
        RestartStatus::MaxCycles => "max-cycles",
        RestartStatus::QuadratureSaturated { .. } => "saturated",
    }
}

fn oracle_backend(name: &str) -> Result<Backend> {
    match name {
        "auto" => Ok(Backend::Auto),
        "dense" => Ok(Backend::Dense),
        "facewise" => Ok(Backend::Facewise),
        other => Err(Error::InvalidArgument(format!(
            "oracle backend must be auto, dense, or facewise, got '{other}'"
        ))),
    }
}

/// The problem every combination shares: the network tensor, the identity
/// right-hand side, and the oracle solution in both operator bases.
struct Problem {
    a: Tensor3,
    rhs_standard: BlockVector,
    rhs_fourier: BlockVector,
    oracle_standard: CMat,
    oracle_fourier: CMat,
    oracle_norm: f64,
    n: usize,
    p: usize,
}

impl Problem {
    fn build(args: &ExperimentArgs) -> Result<Self> {
        let net = random_network_tensor(args.n, args.p, args.density, args.seed)?;
        let a = net.tensor().clone();
        let b = identity_tensor(args.n, args.p)?;
        let rhs_standard = b.unfold();

        let oracle = t_function(
            &ScalarFunction::Exp,
            &a,
            &b,
            oracle_backend(&args.backend)?,
        )?;
        let oracle_standard = oracle.unfold().mat;
        let oracle_norm = oracle_standard.norm();

        // The Fourier-domain operator iterates in the coordinates of the
        // unitary W = (F kron I)/sqrt(p); transform the right-hand side and
        // the oracle there once. Unitarity keeps relative errors comparable
        // across the two bases.
        let sqrt_p = (args.p as f64).sqrt();
        let rhs_fourier = BlockVector::new(
            forward_block_transform(&rhs_standard.mat, args.n)? / C64::new(sqrt_p, 0.0),
            args.n,
        )?;
        let oracle_fourier =
            forward_block_transform(&oracle_standard, args.n)? / C64::new(sqrt_p, 0.0);

        Ok(Problem {
            a,
            rhs_standard,
            rhs_fourier,
            oracle_standard,
            oracle_fourier,
            oracle_norm,
            n: args.n,
            p: args.p,
        })
    }

    /// Runs one combination, recording the true relative error after every
    /// cycle against the oracle in the operator's own basis.
    fn run(&self, comb: &Combination, tol: f64, max_cycles: usize) -> Result<RunResult> {
        let s = self.rhs_standard.mat.ncols();
        let m_cap = ((self.n * self.p) + s - 1) / s;
        let opts = RestartOptions {
            m: comb.m.clamp(1, m_cap.max(1)),
            tol,
            max_cycles,
            scheme: comb.scheme,
        };

        let mut errors: Vec<f64> = Vec::new();
        let outcome = match comb.case {
            KrylovRepresentation::Bcirc => {
                let op = BcircOperator::new(&self.a);
                self.run_observed(&op, &self.rhs_standard, &self.oracle_standard, &opts, &mut errors)?
            }
            KrylovRepresentation::FourierDiag => {
                let fd = face_diagonalize(&self.a);
                let op = FourierDiagOperator::new(&fd)?;
                self.run_observed(&op, &self.rhs_fourier, &self.oracle_fourier, &opts, &mut errors)?
            }
        };

        let rows = outcome
            .history
            .iter()
            .zip(&errors)
            .map(|(rec, err)| CycleRow {
                cycle: rec.cycle,
                update_norm: rec.update_rel,
                true_rel_error: *err,
                wall_ms: rec.wall_ms,
            })
            .collect();
        Ok(RunResult {
            rows,
            cycles: outcome.cycles(),
            status: outcome.status,
        })
    }

    fn run_observed(
        &self,
        op: &dyn BlockOperator,
        rhs: &BlockVector,
        oracle: &CMat,
        opts: &RestartOptions,
        errors: &mut Vec<f64>,
    ) -> Result<ttensor::bfomfom::RestartOutcome> {
        let denom = self.oracle_norm.max(f64::MIN_POSITIVE);
        restarted_bfomfom_observed(&ScalarFunction::Exp, op, rhs, opts, |_cycle, iterate| {
            errors.push((iterate - oracle).norm() / denom);
        })
    }
}

pub(crate) fn run_experiment(args: &ExperimentArgs) -> Result<crate::Outcome> {
    if args.tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            args.tol
        )));
    }
    if args.m.is_empty() || args.scheme.is_empty() || args.case.is_empty() {
        return Err(Error::InvalidArgument(
            "the m, scheme, and case lists must be nonempty".into(),
        ));
    }
    if let Some(bad) = args.m.iter().find(|&&m| m == 0) {
        return Err(Error::InvalidArgument(format!(
            "restart length must be at least 1, got {bad}"
        )));
    }
    let schemes: Vec<InnerProductScheme> = args
        .scheme
        .iter()
        .map(|s| parse_scheme(s))
        .collect::<Result<_>>()?;
    let cases: Vec<KrylovRepresentation> = args
        .case
        .iter()
        .map(|c| parse_case(c))
        .collect::<Result<_>>()?;

    fs::create_dir_all(&args.out)?;
    let problem = Problem::build(args)?;

    let mut convergence = String::from(
        "cycle,scheme,case,m,update_norm,true_rel_error,wall_time_ms\n",
    );
    let mut summary = String::from("m,scheme,case,cycles,status\n");
    let mut chart: Vec<Series> = Vec::new();

    for &m in &args.m {
        for &scheme in &schemes {
            for &case in &cases {
                let comb = Combination { m, scheme, case };
                let result = problem.run(&comb, args.tol, args.max_cycles)?;
                let scheme_s = scheme_name(scheme);
                let case_s = case_name(case);
                for row in &result.rows {
                    convergence.push_str(&format!(
                        "{},{},{},{},{:.12e},{:.12e},{:.3}\n",
                        row.cycle, scheme_s, case_s, m, row.update_norm, row.true_rel_error,
                        row.wall_ms
                    ));
                }
                summary.push_str(&format!(
                    "{},{},{},{},{}\n",
                    m,
                    scheme_s,
                    case_s,
                    result.cycles,
                    status_label(&result.status)
                ));
                let final_err = result.rows.last().map_or(f64::NAN, |r| r.true_rel_error);
                println!(
                    "m={m} scheme={scheme_s} case={case_s}: {} after {} cycles (true error {final_err:.3e})",
                    status_label(&result.status),
                    result.cycles
                );
                chart.push(Series {
                    label: format!("{scheme_s}/{case_s} m={m}"),
                    points: result
                        .rows
                        .iter()
                        .map(|r| (r.cycle as f64, r.true_rel_error))
                        .collect(),
                });
            }
        }
    }

    let conv_path = args.out.join("convergence.csv");
    let summary_path = args.out.join("summary.csv");
    fs::write(&conv_path, convergence)?;
    fs::write(&summary_path, summary)?;
    println!("wrote {}", conv_path.display());
    println!("wrote {}", summary_path.display());

    if args.svg {
        let svg_path = args.out.join("convergence.svg");
        fs::write(
            &svg_path,
            line_chart("relative error per restart cycle", &chart),
        )?;
        println!("wrote {}", svg_path.display());
    }

    // Saturation and cycle-budget exits are per-combination facts here and
    // live in the summary table; the sweep itself succeeded.
    Ok(crate::Outcome::Ok)
}

#[derive(Args)]
pub(crate) struct BenchArgs {
    /// Nodes per slice.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Number of slices.
    #[arg(long, default_value_t = 50)]
    pub p: usize,
    /// Edge probability in (0, 1).
    #[arg(long, default_value_t = 0.1)]
    pub density: f64,
    /// RNG seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Restart length.
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    /// Convergence tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Restart cycle budget.
    #[arg(long, default_value_t = 50)]
    pub max_cycles: usize,
    /// Operator sizes (n = p) for the application-scaling rows.
    #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
    pub sizes: Vec<usize>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Mean per-cycle wall time of a scheme, ignoring the first cycle (it
/// carries no quadrature and would bias the comparison downward).
pub(crate) fn mean_cycle_ms(
    a: &Tensor3,
    rhs: &BlockVector,
    scheme: InnerProductScheme,
    m: usize,
    tol: f64,
    max_cycles: usize,
) -> Result<(f64, usize)> {
    let opts = RestartOptions {
        m,
        tol,
        max_cycles,
        scheme,
    };
    let op = BcircOperator::new(a);
    let outcome =
        restarted_bfomfom_observed(&ScalarFunction::Exp, &op, rhs, &opts, |_, _| {})?;
    let tail: Vec<f64> = outcome
        .history
        .iter()
        .skip(1)
        .map(|r| r.wall_ms)
        .collect();
    let mean = if tail.is_empty() {
        outcome.history.first().map_or(0.0, |r| r.wall_ms)
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    };
    Ok((mean, outcome.cycles()))
}

/// Mean wall time of one operator application at `n = p = size` against an
/// `n`-column right-hand side.
fn apply_ms(size: usize, density: f64, seed: u64) -> Result<f64> {
    let net = random_network_tensor(size, size, density, seed)?;
    let op = BcircOperator::new(net.tensor());
    let x = identity_tensor(size, size)?.unfold();
    op.apply(&x.mat)?; // warm-up: FFT plans, allocator
    const REPS: usize = 5;
    let start = Instant::now();
    for _ in 0..REPS {
        op.apply(&x.mat)?;
    }
    Ok(start.elapsed().as_secs_f64() * 1e3 / REPS as f64)
}

pub(crate) fn run_bench(args: &BenchArgs) -> Result<crate::Outcome> {
    if args.tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            args.tol
        )));
    }
    if args.m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let net = random_network_tensor(args.n, args.p, args.density, args.seed)?;
    let rhs = identity_tensor(args.n, args.p)?.unfold();

    let mut csv = String::from("metric,scheme,n,p,m,value_ms\n");
    let mut per_cycle = Vec::new();
    for scheme in [InnerProductScheme::Classical, InnerProductScheme::Global] {
        let (mean, cycles) = mean_cycle_ms(
            net.tensor(),
            &rhs,
            scheme,
            args.m,
            args.tol,
            args.max_cycles,
        )?;
        csv.push_str(&format!(
            "cycle_mean,{},{},{},{},{:.3}\n",
            scheme_name(scheme),
            args.n,
            args.p,
            args.m,
            mean
        ));
        println!(
            "{}: mean cycle {:.3} ms over {} cycles",
            scheme_name(scheme),
            mean,
            cycles
        );
        per_cycle.push(mean);
    }
    if let [classical, global] = per_cycle[..] {
        let verdict = if global < classical { "holds" } else { "does not hold" };
        println!(
            "per-cycle ordering global < classical: {verdict} ({global:.3} ms vs {classical:.3} ms)"
        );
    }

    for &size in &args.sizes {
        let ms = apply_ms(size, args.density, args.seed)?;
        csv.push_str(&format!("apply_bcirc,,{size},{size},,{ms:.3}\n"));
        println!("apply_bcirc n=p={size}: {ms:.3} ms");
    }

    match &args.out {
        Some(path) => {
            fs::write(path, csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(crate::Outcome::Ok)
}
