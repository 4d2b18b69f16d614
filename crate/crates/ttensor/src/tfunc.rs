//! Public tensor t-function API.
//!
//! A function of a third-order tensor acting on another,
//! `f(A) * B = fold(f(bcirc(A)) unfold(B))`, with a selectable evaluation
//! backend:
//!
//! * **dense** — materializes `bcirc(A)` and calls the dense matrix-function
//!   kernel; the reference backend the others are tested against;
//! * **facewise** — block-diagonalizes through the DFT and evaluates `f` on
//!   the `p` Fourier faces independently;
//! * **krylov** — restarted block-FOM iteration against the block-circulant
//!   operator, for `f` in {exp, inverse} on problems too large to
//!   materialize.
//!
//! `f(A)` itself (without a right-hand side) is the action on the identity
//! tensor, and the t-exponential `t_exp` specializes to `f = exp` with a
//! time scaling. An eigendecomposition-based evaluation `t_function_eig` is
//! provided as a cross-check for diagonalizable tensors.

use crate::bfomfom::{restarted_bfomfom, RestartOptions, RestartOutcome, RestartStatus};
use crate::error::{Error, Result};
use crate::krylov::{FourierDiagOperator, InnerProductScheme};
use crate::linalg::C64;
use crate::matfun::{funm, ScalarFunction};
use crate::spectral::{
    face_diagonalize, forward_block_transform, inverse_block_transform, spectrum_bcirc,
    t_function_facewise, t_eig_facewise, BcircOperator,
};
use crate::tensor::{fold, identity_tensor, BlockVector, FDiagonalTensor, Tensor3};

/// Problem size (`n * p`) up to which the dense backend is the automatic
/// choice and the spectrum precheck runs.
pub const DENSE_AUTO_LIMIT: usize = 200;
/// Face size up to which the facewise backend is the automatic choice.
pub const FACEWISE_AUTO_LIMIT: usize = 500;

/// Operator representation used by the Krylov backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KrylovRepresentation {
    /// Apply `bcirc(A)` itself (through its FFT factorization).
    #[default]
    Bcirc,
    /// Work on the unitarily equivalent block-diagonal Fourier form: the
    /// right-hand side is transformed once, the iteration applies the
    /// `p` diagonal faces, and the result is transformed back.
    FourierDiag,
}

/// Options of the Krylov backend.
#[derive(Debug, Clone)]
pub struct KrylovOptions {
    /// Inner-product scheme of the block Arnoldi process.
    pub scheme: InnerProductScheme,
    /// Arnoldi steps per restart cycle (capped so `m s` cannot exceed the
    /// operator dimension).
    pub m: usize,
    /// Relative convergence tolerance.
    pub tol: f64,
    /// Restart cycle budget.
    pub max_cycles: usize,
    /// Operator representation.
    pub representation: KrylovRepresentation,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            scheme: InnerProductScheme::Classical,
            m: 20,
            tol: 1e-10,
            max_cycles: 50,
            representation: KrylovRepresentation::Bcirc,
        }
    }
}

/// Evaluation backend of [`t_function`].
#[derive(Debug, Clone, Default)]
pub enum Backend {
    /// Choose by problem size: dense up to `n p <= 200`, facewise up to
    /// faces of size 500, Krylov beyond that (for supported `f`).
    #[default]
    Auto,
    /// Materialized `bcirc(A)` and dense matrix function.
    Dense,
    /// Fourier-face evaluation.
    Facewise,
    /// Restarted block Krylov iteration (`f` in {exp, inverse}).
    Krylov(KrylovOptions),
}

/// Validates shapes and, for small problems, that `f` is defined on the
/// spectrum of `bcirc(a)`.
fn precheck(f: &ScalarFunction, a: &Tensor3, b: &Tensor3) -> Result<()> {
    if !a.has_square_faces() {
        return Err(Error::DimensionMismatch(format!(
            "t-function requires square slices, got {}x{}x{}",
            a.n1(),
            a.n2(),
            a.p()
        )));
    }
    if b.n1() != a.n2() || b.p() != a.p() {
        return Err(Error::DimensionMismatch(format!(
            "operand is {}x{}x{}, tensor has slices of order {} with {} slices",
            b.n1(),
            b.n2(),
            b.p(),
            a.n2(),
            a.p()
        )));
    }
    let np = a.n1() * a.p();
    if np <= DENSE_AUTO_LIMIT {
        let spectrum = spectrum_bcirc(a)?;
        let max_abs = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let min_abs = spectrum.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        let near_singular = min_abs <= 1e-13 * max_abs.max(1.0);
        match f {
            ScalarFunction::Inverse if near_singular => {
                return Err(Error::MatrixFunction(
                    "inverse of a (numerically) singular block-circulant".into(),
                ));
            }
            ScalarFunction::Sqrt if near_singular => {
                return Err(Error::MatrixFunction(
                    "square root at a (numerically) zero eigenvalue".into(),
                ));
            }
            _ => {}
        }
    }
    Ok(())
}

/// Resolves `Auto` against the problem size and function.
fn resolve_backend(f: &ScalarFunction, a: &Tensor3, backend: Backend) -> Backend {
    match backend {
        Backend::Auto => {
            if a.n1() * a.p() <= DENSE_AUTO_LIMIT {
                Backend::Dense
            } else if a.n1() <= FACEWISE_AUTO_LIMIT
                || !matches!(f, ScalarFunction::Exp | ScalarFunction::Inverse)
            {
                Backend::Facewise
            } else {
                Backend::Krylov(KrylovOptions::default())
            }
        }
        other => other,
    }
}

/// Dense reference evaluation: `fold(funm(bcirc(a)) unfold(b))`.
fn t_function_dense(f: &ScalarFunction, a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    let big = a.bcirc();
    let fb = funm(f, &big)?;
    let unf = b.unfold();
    let out = fb * &unf.mat;
    Ok(fold(&BlockVector::new(out, b.n1())?))
}

/// Krylov evaluation returning the full restart outcome alongside the
/// result tensor, so callers can inspect status and per-cycle history. The
/// result is the best available iterate even when the status is not
/// `Converged`.
pub fn t_function_krylov(
    f: &ScalarFunction,
    a: &Tensor3,
    b: &Tensor3,
    opts: &KrylovOptions,
) -> Result<(Tensor3, RestartOutcome)> {
    precheck(f, a, b)?;
    let n = a.n1();
    let p = a.p();
    let s = b.n2();
    // Cap m so the Krylov space cannot be asked to exceed the operator
    // dimension; the right-hand side is never partitioned.
    let m_cap = ((n * p) + s - 1) / s;
    let ropts = RestartOptions {
        m: opts.m.clamp(1, m_cap.max(1)),
        tol: opts.tol,
        max_cycles: opts.max_cycles,
        scheme: opts.scheme,
    };
    let unf = b.unfold();
    let outcome = match opts.representation {
        KrylovRepresentation::Bcirc => {
            let op = BcircOperator::new(a);
            restarted_bfomfom(f, &op, &unf, &ropts)?
        }
        KrylovRepresentation::FourierDiag => {
            // W bcirc(a) W^H is block diagonal for the unitary
            // W = (F_p kron I)/sqrt(p); transform the right-hand side into
            // that basis, iterate there, transform the iterate back.
            let fd = face_diagonalize(a);
            let op = FourierDiagOperator::new(&fd)?;
            let sqrt_p = (p as f64).sqrt();
            let bt = forward_block_transform(&unf.mat, n)? / C64::new(sqrt_p, 0.0);
            let mut outcome = restarted_bfomfom(
                f,
                &op,
                &BlockVector::new(bt, n)?,
                &ropts,
            )?;
            let back = inverse_block_transform(&outcome.f.mat, n)? * C64::new(sqrt_p, 0.0);
            outcome.f = BlockVector::new(back, n)?;
            outcome
        }
    };
    let tensor = fold(&outcome.f);
    Ok((tensor, outcome))
}

/// Formats a non-converged status for the error path.
fn status_message(outcome: &RestartOutcome) -> String {
    match outcome.status {
        RestartStatus::Converged => unreachable!("converged outcome is not an error"),
        RestartStatus::MaxCycles => format!(
            "cycle budget exhausted after {} cycles (last relative update {:.3e})",
            outcome.cycles(),
            outcome.history.last().map_or(f64::NAN, |r| r.update_rel)
        ),
        RestartStatus::QuadratureSaturated { cycle } => format!(
            "quadrature saturated at cycle {} (last relative update {:.3e})",
            cycle,
            outcome.history.last().map_or(f64::NAN, |r| r.update_rel)
        ),
    }
}

/// Evaluates `f(A) * B` with the chosen backend.
///
/// With the Krylov backend a non-converged run is an error; use
/// [`t_function_krylov`] to receive the best iterate and the status
/// instead.
pub fn t_function(
    f: &ScalarFunction,
    a: &Tensor3,
    b: &Tensor3,
    backend: Backend,
) -> Result<Tensor3> {
    precheck(f, a, b)?;
    match resolve_backend(f, a, backend) {
        Backend::Auto => unreachable!("resolve_backend returns a concrete backend"),
        Backend::Dense => t_function_dense(f, a, b),
        Backend::Facewise => t_function_facewise(f, a, b),
        Backend::Krylov(opts) => {
            let (tensor, outcome) = t_function_krylov(f, a, b, &opts)?;
            if outcome.status == RestartStatus::Converged {
                Ok(tensor)
            } else {
                Err(Error::NotConverged(status_message(&outcome)))
            }
        }
    }
}

/// Evaluates `f(A)` itself: the action on the identity tensor,
/// `fold(f(bcirc(A)) E_1)`.
pub fn t_function_of(f: &ScalarFunction, a: &Tensor3, backend: Backend) -> Result<Tensor3> {
    let id = identity_tensor(a.n2(), a.p())?;
    t_function(f, a, &id, backend)
}

/// The tensor t-exponential action `exp(A t) * B`.
pub fn t_exp(a: &Tensor3, t: f64, b: &Tensor3) -> Result<Tensor3> {
    t_function(
        &ScalarFunction::Exp,
        &a.scale(C64::new(t, 0.0)),
        b,
        Backend::Auto,
    )
}

/// Applies `f` to an f-diagonal tensor tube by tube; each tube is a
/// `1x1xp` t-function evaluated through its Fourier coefficients.
pub fn f_diagonal_function(f: &ScalarFunction, d: &FDiagonalTensor) -> Result<FDiagonalTensor> {
    let p = d.p();
    let id1 = identity_tensor(1, p)?;
    let mut out = FDiagonalTensor::zeros(d.n(), p)?;
    for i in 0..d.n() {
        let mut tube_tensor = Tensor3::zeros(1, 1, p)?;
        for (k, &v) in d.tube(i)?.iter().enumerate() {
            tube_tensor.set(0, 0, k, v)?;
        }
        let ft = t_function_facewise(f, &tube_tensor, &id1)?;
        let tube: Vec<C64> = (0..p).map(|k| ft.get(0, 0, k).unwrap()).collect();
        out.set_tube(i, &tube)?;
    }
    Ok(out)
}

/// Evaluates `f(A)` through the t-product eigendecomposition
/// `A = X * D * X^-1`: `f(A) = X * f(D) * X^-1` with `f` applied to the
/// eigentubes of `D`. Requires `a` to be diagonalizable face by face; the
/// accuracy degrades with the conditioning of `X`.
pub fn t_function_eig(f: &ScalarFunction, a: &Tensor3) -> Result<Tensor3> {
    let eig = t_eig_facewise(a)?;
    let fd = f_diagonal_function(f, &eig.d)?;
    eig.x.t_product(&fd.to_tensor3())?.t_product(&eig.xinv)
}
