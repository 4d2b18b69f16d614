//! Block FOM approximation of matrix functions acting on block vectors,
//! with restarts.
//!
//! A single cycle projects `f(A) b` onto a block Krylov space:
//! `F_m = V_m f(H_m) E_1 B`. Restarting keeps the space small: after each
//! cycle only the Hessenberg data and the trailing basis block are kept, and
//! the error of the accumulated approximation is itself a matrix function —
//! of the same operator, against the next basis block — representable
//! through the Cauchy–Stieltjes integral of `f`. Each restart cycle
//! evaluates that error integral by quadrature over the stored Hessenberg
//! history and adds it as a correction `Delta`:
//!
//! ```text
//! F^(k+1) = F^(k) + sum_j w_j (t_j I - H^(k+1))^-1 E_1 B^(k+1) . P^(k)(t_j)
//! P^(k)(t)  = Xi_k(t) ... Xi_1(t),
//! Xi_j(t)   = H_tail^(j) E_m^H (t I - H^(j))^-1 E_1 B^(j)
//! ```
//!
//! For `f = exp` the nodes discretize a left-opening parabolic contour
//! enclosing the accumulated Ritz values (midpoint rule, adaptive node
//! count); for `f = inverse` the integral collapses to the exact single pole
//! `t = 0` with weight -1 and needs no adaptivity.
//!
//! ## Adaptive quadrature policy
//!
//! An update is evaluated with `N` and `2N` nodes and accepted when the
//! relative difference `||S_2N - S_N||` is at most a tenth of the
//! requested tolerance times `||S_2N||` (doubling otherwise, starting from
//! `N = 32` up to the node cap). Alongside each value sum the rule
//! accumulates the *magnitude sum* — the same quadrature with every factor
//! replaced by its norm — whose product with machine epsilon is the
//! round-off floor of the evaluation: the accuracy working precision can
//! deliver at best. Every evaluation reports `max(||S_2N - S_N||, floor)`
//! as its **uncertainty**, and the restart loop's convergence measure is
//! `(||delta|| + uncertainty) / ||F||`, so a cycle only counts as
//! converged when the applied step *plus* everything the quadrature left
//! unresolved fits under the tolerance — a run cannot talk itself into
//! convergence on steps made of quadrature noise.
//!
//! Near and past convergence the plain N-vs-2N test needs help, and three
//! further cases are distinguished:
//!
//! * **stop-certification**: if `||S_2N|| + ||S_2N - S_N||` is already
//!   below the stopping threshold, both resolutions agree the update
//!   cannot matter and it is accepted as certified. This can never fire
//!   for an update above the stopping threshold, so it cannot mask
//!   progress the iteration still had to make.
//! * **round-off shelf**: if the disagreement lands on the round-off
//!   floor (within a small band) with the certification target still
//!   unmet, the rule is exact to working precision and still not good
//!   enough — more nodes provably cannot sharpen it. The evaluation stops
//!   immediately (doubling past a shelf only stirs round-off) and returns
//!   its best value *uncertified*, uncertainty charged.
//! * **cap with progress**: per-node round-off scattered across `N`
//!   independent nodes averages out like `1/sqrt(N)`, so ill-conditioned
//!   cascade solves can drag the *certified* digits far below the
//!   *delivered* digits and leave the disagreement decaying slowly while
//!   still orders above the floor. If the node cap arrives in that state,
//!   the evaluation likewise returns its best value uncertified with its
//!   uncertainty charged: the value is typically accurate to many digits
//!   even though the rule cannot prove it to the relative target.
//!
//! Uncertified updates are still applied — their unresolved mass is in the
//! convergence measure, so they cannot fake convergence. Shelf-limited
//! cycles are in fact routine while a healthy run converges: a smooth
//! integrand resolves to working precision at small node counts, parking
//! the disagreement on the floor while the shrinking update keeps the
//! relative target below it; such cycles still contract the convergence
//! measure by orders of magnitude and the run closes out via
//! stop-certification. Saturation is the other face: shelf-limited cycles
//! that have *stopped contracting*. When several consecutive cycles come
//! back on the round-off floor while each fails to meaningfully reduce
//! the convergence measure, the quadrature can no longer certify any
//! further progress and the run stops with a quadrature-saturation status
//! carrying the first cycle of the streak. This is the failure mode of
//! narrow-subspace runs (small `m`), whose long restart cascades stall
//! the update against the floor for good.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::krylov::{
    BlockArnoldiDecomposition, BlockOperator, InnerProductScheme, block_arnoldi,
};
use crate::linalg::{C64, CMat, schur, shifted_upper_triangular_solve_mut};
use crate::matfun::{ScalarFunction, funm};
use crate::tensor::BlockVector;

/// Starting node count of the adaptive quadrature.
pub const QUAD_NODES_INITIAL: usize = 32;
/// Node cap of the adaptive quadrature.
pub const QUAD_NODES_CAP: usize = 4096;
/// Nodes are summed in fixed-size runs (parallel across runs, sequential
/// within), so the summation order is independent of thread scheduling.
const QUAD_CHUNK: usize = 32;
/// An N-vs-2N disagreement within this factor of the summation round-off
/// floor counts as sitting on the floor: refinement past it only stirs
/// round-off.
const QUAD_FLOOR_BAND: f64 = 8.0;
/// Number of consecutive stalled shelf-limited cycles after which the
/// restart is declared quadrature-saturated. Shelf-limited alone is
/// routine mid-convergence (smooth integrands resolve to working
/// precision at small node counts while the relative target sits below
/// the floor); the saturation signature is shelving *without
/// contraction* of the convergence measure, sustained across a streak.
const QUAD_SHELF_STREAK: usize = 3;
/// A shelf-limited cycle counts as stalled when its convergence measure
/// is at least this fraction of the previous cycle's: it failed to shave
/// even a tenth off the measure. Healthy restarts contract by orders of
/// magnitude per cycle.
const QUAD_STALL_FACTOR: f64 = 0.9;

/// Quadrature representation of the Cauchy–Stieltjes integral of `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadratureRule {
    /// Left-opening parabola `t(u) = x0 - a u^2 + i u`, `u` in
    /// `[-u_max, u_max]`, discretized by the midpoint rule. Used for the
    /// exponential.
    Parabola {
        /// Real-axis crossing; right of the enclosed spectral region.
        x0: f64,
        /// Opening coefficient.
        a: f64,
        /// Truncation half-width (the integrand decays like
        /// `exp(-a u^2)` relative to the crossing).
        u_max: f64,
    },
    /// Exact single-pole representation of `f(z) = 1/z`: one node at
    /// `t = 0` with weight -1; no discretization error.
    SinglePole,
}

impl QuadratureRule {
    /// The rule for a supported function and a set of Ritz values
    /// estimating the spectral region. Fails for functions without restart
    /// support.
    pub fn for_function(f: &ScalarFunction, ritz: &[C64]) -> Result<QuadratureRule> {
        match f {
            ScalarFunction::Exp => Ok(QuadratureRule::parabola_enclosing(ritz)),
            ScalarFunction::Inverse => Ok(QuadratureRule::SinglePole),
            other => Err(Error::InvalidArgument(format!(
                "restart quadrature is implemented for exp and inverse, not '{}'",
                other.name()
            ))),
        }
    }

    /// A parabola through `max Re(ritz) + 1` whose opening keeps every Ritz
    /// value, padded by 10% in imaginary direction, strictly inside.
    pub fn parabola_enclosing(ritz: &[C64]) -> QuadratureRule {
        let x0 = ritz.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max) + 1.0;
        let mut a: f64 = 1.0;
        for lam in ritz {
            let y = lam.im.abs() * 1.1;
            if y > 1e-12 {
                // Containment: x0 - a y^2 >= (Re lam + x0)/2, i.e. the
                // parabola stays half the margin right of the eigenvalue.
                a = a.min(0.5 * (x0 - lam.re) / (y * y));
            }
        }
        a = a.max(1e-8);
        // Truncate where exp(-a u^2) has decayed below 1e-18.
        let u_max = (41.45 / a).sqrt();
        QuadratureRule::Parabola { x0, a, u_max }
    }

    /// Midpoint nodes and weights; `n` is ignored by the single-pole rule,
    /// which always returns its one exact node.
    pub fn nodes(&self, n: usize) -> Vec<(C64, C64)> {
        match *self {
            QuadratureRule::SinglePole => vec![(C64::new(0.0, 0.0), C64::new(-1.0, 0.0))],
            QuadratureRule::Parabola { x0, a, u_max } => {
                let h = 2.0 * u_max / n as f64;
                (0..n)
                    .map(|i| {
                        let u = -u_max + (i as f64 + 0.5) * h;
                        let t = C64::new(x0 - a * u * u, u);
                        let dt = C64::new(-2.0 * a * u, 1.0);
                        // w = e^t dt h / (2 pi i)
                        let w = t.exp() * dt * C64::new(0.0, -h / (2.0 * std::f64::consts::PI));
                        (t, w)
                    })
                    .collect()
            }
        }
    }

    /// Whether the rule adapts its node count (the single pole is exact).
    pub fn is_adaptive(&self) -> bool {
        matches!(self, QuadratureRule::Parabola { .. })
    }
}

/// Options of the restarted iteration.
#[derive(Debug, Clone)]
pub struct RestartOptions {
    /// Arnoldi steps per cycle.
    pub m: usize,
    /// Convergence tolerance on the relative cycle update
    /// `||Delta||_F / ||F^(k+1)||_F`.
    pub tol: f64,
    /// Maximum number of cycles (the first approximation counts as cycle 1).
    pub max_cycles: usize,
    /// Inner-product scheme.
    pub scheme: InnerProductScheme,
}

impl RestartOptions {
    /// Options with the default cycle budget of 50.
    pub fn new(scheme: InnerProductScheme, m: usize, tol: f64) -> Self {
        RestartOptions {
            m,
            tol,
            max_cycles: 50,
            scheme,
        }
    }
}

/// Terminal status of a restarted run. The best iterate is returned in all
/// three cases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RestartStatus {
    /// The relative cycle update reached the tolerance.
    Converged,
    /// The cycle budget ran out first.
    MaxCycles,
    /// Two consecutive cycles hit the quadrature node cap while the update
    /// stopped shrinking; carries the cycle at which the rule gave up.
    QuadratureSaturated {
        /// Cycle index (1-based) at which saturation was declared.
        cycle: usize,
    },
}

/// Per-cycle convergence record.
#[derive(Debug, Clone)]
pub struct CycleRecord {
    /// Cycle index, 1-based; cycle 1 is the initial approximation.
    pub cycle: usize,
    /// `(||Delta||_F + q) / ||F^(k+1)||_F` where `q` is the quadrature's
    /// unresolved uncertainty for the cycle (1.0 for cycle 1, whose
    /// "update" is the whole approximation and has no quadrature).
    pub update_rel: f64,
    /// Quadrature nodes of the final evaluation (0 when no quadrature ran
    /// in this cycle).
    pub quad_nodes: usize,
    /// True if this cycle's quadrature could not certify the update to its
    /// target — it ran to the node cap or onto its round-off floor. The
    /// best estimate was still applied with its uncertainty charged to
    /// `update_rel`; a streak of floor-limited cycles ends the run with a
    /// quadrature-saturation status.
    pub quad_capped: bool,
    /// Wall-clock time of the cycle in milliseconds.
    pub wall_ms: f64,
}

/// Result of a restarted run: final iterate, status, per-cycle history.
#[derive(Debug, Clone)]
pub struct RestartOutcome {
    /// Best available approximation of `f(A) b`.
    pub f: BlockVector,
    /// Why the iteration stopped.
    pub status: RestartStatus,
    /// One record per completed cycle.
    pub history: Vec<CycleRecord>,
}

impl RestartOutcome {
    /// Number of cycles run.
    pub fn cycles(&self) -> usize {
        self.history.len()
    }
}

/// One cycle's worth of Hessenberg data, Schur-factored once so every
/// quadrature node costs only triangular solves.
struct QuadHistoryEntry {
    /// Triangular Schur factor of the square Hessenberg.
    t: CMat,
    /// `Q^H E_1 B` — the transformed right-hand side (`dim x w`).
    g: CMat,
    /// `E_m^H Q` — the last `w` rows of `Q` (`w x dim`).
    w_rows: CMat,
    /// Subdiagonal tail block (`w x w`).
    tail: CMat,
}

/// Width of the coefficient objects: `s` for classical, 1 for global
/// (whose Hessenberg is scalar).
fn coeff_width(scheme: InnerProductScheme, s: usize) -> usize {
    match scheme {
        InnerProductScheme::Classical => s,
        InnerProductScheme::Global => 1,
    }
}

impl QuadHistoryEntry {
    /// Schur-factors the cycle's Hessenberg and caches the pieces the node
    /// loop needs. Also returns the cycle's Ritz values and the full Schur
    /// basis `Q` (needed once, to map the update coefficient back).
    fn build(dec: &BlockArnoldiDecomposition) -> Result<(Self, Vec<C64>, CMat)> {
        let hm = dec.hessenberg_square();
        let (q, t) = schur(&hm)?;
        let ritz: Vec<C64> = (0..t.nrows()).map(|i| t[(i, i)]).collect();
        let w = coeff_width(dec.scheme, dec.s);
        // E_1 B has B in its first w rows: Q^H E_1 B = (first w rows of Q)^H B.
        let b = match dec.scheme {
            InnerProductScheme::Classical => dec.b_norm.clone(),
            InnerProductScheme::Global => CMat::from_element(1, 1, dec.b_norm[(0, 0)]),
        };
        let g = q.rows(0, w).adjoint() * b;
        let dim = t.nrows();
        let w_rows = q.rows(dim - w, w).into_owned();
        Ok((
            QuadHistoryEntry {
                t,
                g,
                w_rows,
                tail: dec.tail(),
            },
            ritz,
            q,
        ))
    }
}

/// Sums the restart-update integrand over the given nodes, in the Schur
/// basis of the newest Hessenberg. Deterministic: nodes are processed in
/// fixed-size runs, parallel across runs, summed in run order.
///
/// Besides the value sum, returns the *magnitude sum*: the same quadrature
/// sum with every cascade factor replaced by its Frobenius norm and every
/// weight by its modulus. The magnitude sum never cancels, so machine
/// epsilon times it estimates the round-off floor under the value sum; the
/// ratio of the two is the cancellation the quadrature relies on.
fn eval_node_sum(
    nodes: &[(C64, C64)],
    hist: &[QuadHistoryEntry],
    new_t: &CMat,
    new_g: &CMat,
) -> Result<(CMat, f64)> {
    let w = new_g.ncols();
    let dim = new_t.nrows();
    let partials: Vec<Result<(CMat, f64)>> = nodes
        .par_chunks(QUAD_CHUNK)
        .map(|chunk| {
            let mut acc = CMat::zeros(dim, w);
            let mut mag = 0.0f64;
            for &(t, weight) in chunk {
                // Cofactor cascade P(t) = Xi_k ... Xi_1 over the history.
                let mut p = CMat::identity(w, w);
                let mut p_mag = 1.0f64;
                for h in hist {
                    let mut y = h.g.clone();
                    if !shifted_upper_triangular_solve_mut(&h.t, t, &mut y) {
                        return Err(Error::MatrixFunction(
                            "quadrature node coincides with a Ritz value".into(),
                        ));
                    }
                    let xi = &h.tail * (&h.w_rows * y);
                    p_mag *= xi.norm();
                    p = xi * p;
                }
                let mut y = new_g.clone();
                if !shifted_upper_triangular_solve_mut(new_t, t, &mut y) {
                    return Err(Error::MatrixFunction(
                        "quadrature node coincides with a Ritz value".into(),
                    ));
                }
                mag += y.norm() * p_mag * weight.norm();
                acc += y * p * weight;
            }
            Ok((acc, mag))
        })
        .collect();
    let mut total = CMat::zeros(dim, w);
    let mut mag_total = 0.0f64;
    for part in partials {
        let (acc, mag) = part?;
        total += acc;
        mag_total += mag;
    }
    Ok((total, mag_total))
}

/// Outcome of one adaptive quadrature evaluation.
struct QuadOutcome {
    /// Coefficient of the update in the newest cycle's basis (`dim x w`).
    coeff: CMat,
    /// Node count of the final evaluation.
    nodes: usize,
    /// True when an accept rule certified the evaluation (relative target
    /// met, or the whole update certified below the stopping threshold).
    /// False when it ended uncertified — node cap reached, or disagreement
    /// pinned to the round-off floor — with `coeff` the best available
    /// estimate and `uncertainty` charging what is unresolved.
    certified: bool,
    /// True for an uncertified evaluation whose N-vs-2N disagreement sat
    /// on the summation round-off floor: more nodes provably cannot
    /// sharpen it. Distinguishes a hard resolution shelf from a
    /// still-shrinking disagreement that merely ran out of node budget.
    floor_limited: bool,
    /// Unresolved N-vs-2N disagreement of the final evaluation, floored by
    /// the summation round-off estimate, in the same Frobenius scale as
    /// `coeff` (the basis mapping is unitary). This is the part of the
    /// update the quadrature could not pin down; the restart loop counts it
    /// against the update when judging convergence.
    uncertainty: f64,
}

/// Evaluates the restart update coefficient with the adaptive N-vs-2N
/// policy described in the module docs.
fn quad_update(
    rule: &QuadratureRule,
    hist: &[QuadHistoryEntry],
    new_t: &CMat,
    new_q: &CMat,
    new_g: &CMat,
    tol_rel: f64,
    stop_floor: f64,
) -> Result<QuadOutcome> {
    if !rule.is_adaptive() {
        let (sum, mag) = eval_node_sum(&rule.nodes(1), hist, new_t, new_g)?;
        return Ok(QuadOutcome {
            coeff: new_q * sum,
            nodes: 1,
            certified: true,
            floor_limited: false,
            uncertainty: f64::EPSILON * mag,
        });
    }
    let mut n = QUAD_NODES_INITIAL;
    let (mut s1, _) = eval_node_sum(&rule.nodes(n), hist, new_t, new_g)?;
    loop {
        let n2 = 2 * n;
        let (s2, mag) = eval_node_sum(&rule.nodes(n2), hist, new_t, new_g)?;
        let num = (&s2 - &s1).norm();
        let den = s2.norm();
        // Summation round-off floor: the value sum cannot be more accurate
        // than machine epsilon times its cancellation-free magnitude.
        let floor = f64::EPSILON * mag;
        let unc = num.max(floor);
        if den == 0.0 || num <= tol_rel * den {
            return Ok(QuadOutcome {
                coeff: new_q * s2,
                nodes: n2,
                certified: true,
                floor_limited: false,
                uncertainty: unc,
            });
        }
        // Stop-certified: both resolutions put the whole update below the
        // stopping threshold, so its unresolved fine structure is moot.
        if den + num <= stop_floor {
            return Ok(QuadOutcome {
                coeff: new_q * s2,
                nodes: n2,
                certified: true,
                floor_limited: false,
                uncertainty: unc,
            });
        }
        // The disagreement has reached the round-off floor with the target
        // unmet: the rule is exact to working precision and still not good
        // enough. More nodes provably cannot sharpen a round-off shelf, so
        // return the best value now, uncertified.
        if num <= QUAD_FLOOR_BAND * floor {
            return Ok(QuadOutcome {
                coeff: new_q * s2,
                nodes: n2,
                certified: false,
                floor_limited: true,
                uncertainty: unc,
            });
        }
        n = n2;
        if 2 * n > QUAD_NODES_CAP {
            return Ok(QuadOutcome {
                coeff: new_q * s2,
                nodes: n2,
                certified: false,
                floor_limited: false,
                uncertainty: unc,
            });
        }
        s1 = s2;
    }
}

/// Expands a coefficient matrix into the block-vector approximation
/// `sum_j V_j c_j`.
fn expand(dec: &BlockArnoldiDecomposition, coeff: &CMat) -> CMat {
    match dec.scheme {
        InnerProductScheme::Classical => {
            let vm = dec.basis_matrix(dec.m);
            vm * coeff
        }
        InnerProductScheme::Global => {
            let rows = dec.basis[0].nrows();
            let mut f = CMat::zeros(rows, dec.s);
            for j in 0..dec.m {
                f += &dec.basis[j] * coeff[(j, 0)];
            }
            f
        }
    }
}

/// Computes the single-cycle approximation `V_m f(H_m) E_1 B` from a
/// decomposition.
fn single_approximation(f: &ScalarFunction, dec: &BlockArnoldiDecomposition) -> Result<CMat> {
    let hm = dec.hessenberg_square();
    let fh = funm(f, &hm)?;
    let w = coeff_width(dec.scheme, dec.s);
    let b = match dec.scheme {
        InnerProductScheme::Classical => dec.b_norm.clone(),
        InnerProductScheme::Global => CMat::from_element(1, 1, dec.b_norm[(0, 0)]),
    };
    let coeff = fh.columns(0, w) * b;
    Ok(expand(dec, &coeff))
}

/// One cycle of the block-FOM matrix-function approximation:
/// `F_m = V_m f(H_m) E_1 B`. On Arnoldi breakdown at step `k < m` the
/// `k`-step result is returned, which is then exact.
pub fn bfomfom_single(
    f: &ScalarFunction,
    op: &dyn BlockOperator,
    b: &BlockVector,
    scheme: InnerProductScheme,
    m: usize,
) -> Result<(BlockVector, BlockArnoldiDecomposition)> {
    let dec = block_arnoldi(op, &b.mat, scheme, m)?;
    let fmat = single_approximation(f, &dec)?;
    Ok((BlockVector::new(fmat, b.block_rows)?, dec))
}

/// Restarted block-FOM approximation of `f(A) b` for `f` in {exp, inverse}.
///
/// Runs until the relative cycle update reaches `opts.tol`, the cycle
/// budget is exhausted, or the adaptive quadrature saturates; the returned
/// outcome carries the best iterate and the per-cycle history in every
/// case. Usage errors (unsupported function, dimension mismatch, initial
/// breakdown) are hard errors.
pub fn restarted_bfomfom(
    f: &ScalarFunction,
    op: &dyn BlockOperator,
    b: &BlockVector,
    opts: &RestartOptions,
) -> Result<RestartOutcome> {
    restarted_bfomfom_observed(f, op, b, opts, |_, _| {})
}

/// [`restarted_bfomfom`] with an observer called after every cycle with the
/// cycle index and the current stacked iterate — the hook drivers use to
/// record true errors against an oracle.
pub fn restarted_bfomfom_observed(
    f: &ScalarFunction,
    op: &dyn BlockOperator,
    b: &BlockVector,
    opts: &RestartOptions,
    mut observer: impl FnMut(usize, &CMat),
) -> Result<RestartOutcome> {
    if !matches!(f, ScalarFunction::Exp | ScalarFunction::Inverse) {
        return Err(Error::InvalidArgument(format!(
            "restarted evaluation supports exp and inverse, not '{}'",
            f.name()
        )));
    }
    if opts.tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if opts.max_cycles == 0 {
        return Err(Error::InvalidArgument("at least one cycle".into()));
    }
    let s = b.mat.ncols();
    let sqrt_s = (s as f64).sqrt();

    // Cycle 1: plain block FOM.
    let t0 = Instant::now();
    let mut dec = block_arnoldi(op, &b.mat, opts.scheme, opts.m)?;
    let mut fmat = single_approximation(f, &dec)?;
    observer(1, &fmat);
    let (entry, mut ritz, _) = QuadHistoryEntry::build(&dec)?;
    let mut hist = vec![entry];
    let mut records = vec![CycleRecord {
        cycle: 1,
        update_rel: 1.0,
        quad_nodes: 0,
        quad_capped: false,
        wall_ms: t0.elapsed().as_secs_f64() * 1e3,
    }];

    if dec.breakdown.is_some() {
        // The Krylov space closed: the cycle-1 result is exact and there is
        // no trailing block to restart from.
        records[0].update_rel = 0.0;
        return Ok(RestartOutcome {
            f: BlockVector::new(fmat, b.block_rows)?,
            status: RestartStatus::Converged,
            history: records,
        });
    }

    let mut status = RestartStatus::MaxCycles;
    // Consecutive stalled shelf-limited cycles and the first cycle of the
    // streak; see the module docs on persistent shelves.
    let mut shelf_streak = 0usize;
    let mut shelf_start = 0usize;
    let mut prev_upd = 1.0f64;
    for cycle in 2..=opts.max_cycles {
        let t0 = Instant::now();
        let b_next = dec.basis.last().expect("non-breakdown cycle has m+1 blocks");
        let dec_new = block_arnoldi(op, b_next, opts.scheme, opts.m)?;
        let (entry, ritz_new, new_q) = QuadHistoryEntry::build(&dec_new)?;
        ritz.extend(ritz_new);
        let rule = QuadratureRule::for_function(f, &ritz)?;
        // Stopping threshold in coefficient scale: classical coefficients
        // share the iterate's Frobenius norm; global basis blocks have norm
        // sqrt(s), so coefficients are a factor sqrt(s) smaller.
        let stop_floor = opts.tol * fmat.norm()
            / match opts.scheme {
                InnerProductScheme::Classical => 1.0,
                InnerProductScheme::Global => sqrt_s,
            };
        let quad = quad_update(
            &rule,
            &hist,
            &entry.t,
            &new_q,
            &entry.g,
            opts.tol / 10.0,
            stop_floor,
        )?;
        // Coefficient-to-iterate scale conversion: global basis blocks have
        // Frobenius norm sqrt(s), classical bases are orthonormal.
        let scale = match opts.scheme {
            InnerProductScheme::Classical => 1.0,
            InnerProductScheme::Global => sqrt_s,
        };
        let delta = expand(&dec_new, &quad.coeff);
        fmat += &delta;
        observer(cycle, &fmat);
        let fnorm = fmat.norm();
        let dnorm = delta.norm();
        // The convergence measure charges the unresolved quadrature mass
        // against the update: a cycle only counts as converged when the
        // applied step plus everything the quadrature failed to resolve
        // fits under tol.
        let unc = quad.uncertainty * scale;
        let upd = if fnorm > 0.0 {
            (dnorm + unc) / fnorm
        } else if dnorm + unc > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if quad.floor_limited && upd >= QUAD_STALL_FACTOR * prev_upd {
            if shelf_streak == 0 {
                shelf_start = cycle;
            }
            shelf_streak += 1;
        } else {
            shelf_streak = 0;
        }
        prev_upd = upd;
        records.push(CycleRecord {
            cycle,
            update_rel: upd,
            quad_nodes: quad.nodes,
            quad_capped: !quad.certified,
            wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        });
        hist.push(entry);
        let broke_down = dec_new.breakdown.is_some();
        dec = dec_new;
        if upd <= opts.tol {
            status = RestartStatus::Converged;
            break;
        }
        if broke_down {
            // The error function's Krylov space closed, so the last update
            // was exact within this subspace and no further direction
            // exists; the iterate cannot be improved by more cycles.
            status = RestartStatus::Converged;
            break;
        }
        if shelf_streak >= QUAD_SHELF_STREAK {
            // The quadrature has been pinned to its round-off floor for
            // several cycles running with its certification target unmet:
            // no node count can certify further progress. The iterate keeps
            // the shelved updates — each was applied with its uncertainty
            // charged — but the run cannot honestly continue.
            status = RestartStatus::QuadratureSaturated { cycle: shelf_start };
            break;
        }
    }

    Ok(RestartOutcome {
        f: BlockVector::new(fmat, b.block_rows)?,
        status,
        history: records,
    })
}
