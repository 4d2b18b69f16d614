//! The single-evaluation subcommands: `gen`, `texp`, `tfunc`, `comm`.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use num_complex::Complex64 as C64;

use ttensor::io::{load_tensor, save_tensor, save_tensor_sparse};
use ttensor::matfun::ScalarFunction;
use ttensor::netcomm::{random_network_tensor, AdjacencyTensor, LayerSemantics, NetworkExponential};
use ttensor::tensor::{identity_tensor, Tensor3};
use ttensor::tfunc::{
    t_function, t_function_krylov, Backend, KrylovOptions, KrylovRepresentation,
};
use ttensor::krylov::InnerProductScheme;
use ttensor::{Error, Result};

use crate::Outcome;

/// Parses a backend flag value; Krylov parameters are attached by the
/// caller where they apply.
fn parse_backend(name: &str) -> Result<Backend> {
    match name {
        "auto" => Ok(Backend::Auto),
        "dense" => Ok(Backend::Dense),
        "facewise" => Ok(Backend::Facewise),
        "krylov" => Ok(Backend::Krylov(KrylovOptions::default())),
        other => Err(Error::InvalidArgument(format!(
            "unknown backend '{other}' (expected auto, dense, facewise, or krylov)"
        ))),
    }
}

pub(crate) fn parse_scheme(name: &str) -> Result<InnerProductScheme> {
    match name {
        "classical" => Ok(InnerProductScheme::Classical),
        "global" => Ok(InnerProductScheme::Global),
        other => Err(Error::InvalidArgument(format!(
            "unknown scheme '{other}' (expected classical or global)"
        ))),
    }
}

pub(crate) fn parse_case(name: &str) -> Result<KrylovRepresentation> {
    match name {
        "bcirc" => Ok(KrylovRepresentation::Bcirc),
        "fourier-d" | "fourier" => Ok(KrylovRepresentation::FourierDiag),
        other => Err(Error::InvalidArgument(format!(
            "unknown operator case '{other}' (expected bcirc or fourier-d)"
        ))),
    }
}

pub(crate) fn case_name(case: KrylovRepresentation) -> &'static str {
    match case {
        KrylovRepresentation::Bcirc => "bcirc",
        KrylovRepresentation::FourierDiag => "fourier-d",
    }
}

pub(crate) fn scheme_name(scheme: InnerProductScheme) -> &'static str {
    match scheme {
        InnerProductScheme::Classical => "classical",
        InnerProductScheme::Global => "global",
    }
}

/// Parses the function flag: `exp`, `inverse`, `sqrt`, or
/// `poly:c0,c1,...` (ascending coefficients).
fn parse_function(name: &str) -> Result<ScalarFunction> {
    match name {
        "exp" => Ok(ScalarFunction::Exp),
        "inverse" => Ok(ScalarFunction::Inverse),
        "sqrt" => Ok(ScalarFunction::Sqrt),
        other => {
            if let Some(list) = other.strip_prefix("poly:") {
                let coeffs: Result<Vec<C64>> = list
                    .split(',')
                    .map(|tok| {
                        tok.trim()
                            .parse::<f64>()
                            .map(|v| C64::new(v, 0.0))
                            .map_err(|_| {
                                Error::InvalidArgument(format!(
                                    "polynomial coefficient '{tok}' is not a decimal value"
                                ))
                            })
                    })
                    .collect();
                let coeffs = coeffs?;
                if coeffs.is_empty() {
                    return Err(Error::InvalidArgument(
                        "poly: needs at least one coefficient".into(),
                    ));
                }
                Ok(ScalarFunction::polynomial(&coeffs))
            } else {
                Err(Error::InvalidArgument(format!(
                    "unknown function '{other}' (expected exp, inverse, sqrt, or poly:c0,c1,...)"
                )))
            }
        }
    }
}

#[derive(Args)]
pub(crate) struct GenArgs {
    /// Number of nodes per slice.
    #[arg(long)]
    pub n: usize,
    /// Number of slices.
    #[arg(long)]
    pub p: usize,
    /// Edge probability in (0, 1).
    #[arg(long, default_value_t = 0.1)]
    pub density: f64,
    /// RNG seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output TNS3 path.
    #[arg(long)]
    pub out: PathBuf,
    /// Write the dense variant instead of the sparse one.
    #[arg(long)]
    pub dense: bool,
}

pub(crate) fn gen(a: &GenArgs) -> Result<Outcome> {
    let net = random_network_tensor(a.n, a.p, a.density, a.seed)?;
    if a.dense {
        save_tensor(&a.out, net.tensor())?;
    } else {
        save_tensor_sparse(&a.out, net.tensor())?;
    }
    println!(
        "wrote {}x{}x{} network tensor with {} edges to {}",
        a.n,
        a.p,
        a.p,
        net.edge_count(),
        a.out.display()
    );
    Ok(Outcome::Ok)
}

/// Shared Krylov tuning flags.
#[derive(Args)]
pub(crate) struct KrylovFlags {
    /// Arnoldi steps per restart cycle (krylov backend).
    #[arg(long, default_value_t = 20)]
    pub m: usize,
    /// Convergence tolerance (krylov backend).
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Restart cycle budget (krylov backend).
    #[arg(long, default_value_t = 50)]
    pub max_cycles: usize,
    /// Inner-product scheme: classical or global (krylov backend).
    #[arg(long, default_value = "classical")]
    pub scheme: String,
    /// Operator case: bcirc or fourier-d (krylov backend).
    #[arg(long = "case", default_value = "bcirc")]
    pub case: String,
}

impl KrylovFlags {
    fn to_options(&self) -> Result<KrylovOptions> {
        if self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.m == 0 {
            return Err(Error::InvalidArgument("m must be at least 1".into()));
        }
        Ok(KrylovOptions {
            scheme: parse_scheme(&self.scheme)?,
            m: self.m,
            tol: self.tol,
            max_cycles: self.max_cycles,
            representation: parse_case(&self.case)?,
        })
    }
}

#[derive(Args)]
pub(crate) struct TexpArgs {
    /// TNS3 file holding the square-faced tensor A.
    #[arg(long)]
    pub a: PathBuf,
    /// TNS3 file holding B; the identity tensor when omitted.
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// Time parameter of exp(A t).
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Backend: auto, dense, facewise, or krylov.
    #[arg(long, default_value = "auto")]
    pub backend: String,
    #[command(flatten)]
    pub krylov: KrylovFlags,
    /// Output TNS3 path for the result.
    #[arg(long)]
    pub out: PathBuf,
}

pub(crate) fn texp(args: &TexpArgs) -> Result<Outcome> {
    let f = ScalarFunction::Exp;
    let a = load_tensor(&args.a)?.scale(C64::new(args.t, 0.0));
    let b = match &args.b {
        Some(path) => load_tensor(path)?,
        None => identity_tensor(a.n2(), a.p())?,
    };
    evaluate_and_save(&f, &a, &b, &args.backend, &args.krylov, &args.out)
}

#[derive(Args)]
pub(crate) struct TfuncArgs {
    /// Scalar function: exp, inverse, sqrt, or poly:c0,c1,...
    #[arg(long = "function", short = 'f')]
    pub function: String,
    /// TNS3 file holding the square-faced tensor A.
    #[arg(long)]
    pub a: PathBuf,
    /// TNS3 file holding B; the identity tensor when omitted.
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// Backend: auto, dense, facewise, or krylov.
    #[arg(long, default_value = "auto")]
    pub backend: String,
    #[command(flatten)]
    pub krylov: KrylovFlags,
    /// Output TNS3 path for the result.
    #[arg(long)]
    pub out: PathBuf,
}

pub(crate) fn tfunc(args: &TfuncArgs) -> Result<Outcome> {
    let f = parse_function(&args.function)?;
    let a = load_tensor(&args.a)?;
    let b = match &args.b {
        Some(path) => load_tensor(path)?,
        None => identity_tensor(a.n2(), a.p())?,
    };
    evaluate_and_save(&f, &a, &b, &args.backend, &args.krylov, &args.out)
}

/// Evaluates `f(A) * B`, writes the (real-cast) result, and reports the
/// iteration status for the exit-code mapping when the Krylov backend ran.
fn evaluate_and_save(
    f: &ScalarFunction,
    a: &Tensor3,
    b: &Tensor3,
    backend: &str,
    krylov: &KrylovFlags,
    out: &PathBuf,
) -> Result<Outcome> {
    let backend = parse_backend(backend)?;
    let (result, status) = match backend {
        Backend::Krylov(_) => {
            let opts = krylov.to_options()?;
            let (tensor, outcome) = t_function_krylov(f, a, b, &opts)?;
            (tensor, Some(outcome.status))
        }
        other => (t_function(f, a, b, other)?, None),
    };
    // Real inputs give real results up to round-off; save the cast. A
    // genuinely complex result is reported rather than silently truncated.
    save_tensor(out, &result.cast_real()?)?;
    println!("wrote {} ({} x {} x {})", out.display(), result.n1(), result.n2(), result.p());
    Ok(match status {
        Some(s) => Outcome::Iteration(s),
        None => Outcome::Ok,
    })
}

#[derive(Args)]
pub(crate) struct CommArgs {
    /// TNS3 file holding the adjacency tensor.
    #[arg(long)]
    pub input: PathBuf,
    /// How many top-central nodes to list.
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    /// Layer semantics recorded in the report: multilayer or temporal.
    #[arg(long, default_value = "multilayer")]
    pub semantics: String,
    /// Backend: auto, dense, or facewise.
    #[arg(long, default_value = "auto")]
    pub backend: String,
    /// Triples "i,j,k" (1-based) whose communicability to report; repeatable.
    #[arg(long = "triple")]
    pub triples: Vec<String>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_triple(spec: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "triple '{spec}' must be 'i,j,k'"
        )));
    }
    let mut idx = [0usize; 3];
    for (slot, tok) in idx.iter_mut().zip(&parts) {
        *slot = tok.trim().parse().map_err(|_| {
            Error::InvalidArgument(format!("triple index '{tok}' is not a positive integer"))
        })?;
        if *slot == 0 {
            return Err(Error::InvalidArgument(
                "triple indices are 1-based; 0 is out of range".into(),
            ));
        }
    }
    Ok((idx[0], idx[1], idx[2]))
}

pub(crate) fn comm(args: &CommArgs) -> Result<Outcome> {
    let semantics = match args.semantics.as_str() {
        "multilayer" => LayerSemantics::Multilayer,
        "temporal" => LayerSemantics::Temporal,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown semantics '{other}' (expected multilayer or temporal)"
            )))
        }
    };
    let tensor = load_tensor(&args.input)?;
    let net = AdjacencyTensor::new(tensor, semantics)?;
    let backend = parse_backend(&args.backend)?;
    let e = NetworkExponential::compute(&net, backend)?;

    let mut report = String::new();
    report.push_str(&format!(
        "# communicability report: {} nodes, {} slices, {} semantics, {} edges\n",
        net.n(),
        net.p(),
        net.semantics.name(),
        net.edge_count()
    ));
    report.push_str("section,node,i,j,k,value\n");
    for (node, value) in e.ranking().into_iter().take(args.top_k) {
        report.push_str(&format!(
            "centrality,{},{},{},{},{}\n",
            node + 1,
            node + 1,
            node + 1,
            node + 1,
            value
        ));
    }
    for spec in &args.triples {
        let (i, j, k) = parse_triple(spec)?;
        if i > net.n() || j > net.n() || k > net.p() {
            return Err(Error::IndexOutOfRange(format!(
                "triple ({i}, {j}, {k}) outside a {}x{}x{} tensor",
                net.n(),
                net.n(),
                net.p()
            )));
        }
        let v = e.communicability(i - 1, j - 1, k - 1)?;
        report.push_str(&format!("communicability,,{i},{j},{k},{v}\n"));
    }

    match &args.out {
        Some(path) => fs::write(path, report)?,
        None => print!("{report}"),
    }
    Ok(Outcome::Ok)
}
