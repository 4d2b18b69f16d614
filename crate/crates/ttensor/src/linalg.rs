//! Shared dense linear algebra kernels over complex matrices.
//!
//! Everything in the crate works on `DMatrix<Complex64>`. This module wraps
//! the decompositions we rely on (economy QR with a sign convention, complex
//! Schur, LU solves) and provides the small triangular kernels that the
//! matrix-function and Krylov code build on.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
/// Dynamically sized complex matrix.
pub type CMat = DMatrix<C64>;
/// Dynamically sized complex column vector.
pub type CVec = DVector<C64>;

/// Machine epsilon for `f64`, spelled once.
pub const EPS: f64 = f64::EPSILON;

/// Returns the identity matrix of order `n`.
pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Economy-size QR factorization `m = q * r` with `q` of shape
/// `nrows x ncols` (for a tall matrix) and `r` square upper triangular with
/// **real non-negative diagonal**.
///
/// The diagonal convention makes the factorization unique for full-rank
/// input, which the block Arnoldi normalization relies on for
/// reproducibility.
pub fn thin_qr_nonneg(m: &CMat) -> (CMat, CMat) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    let k = r.nrows().min(r.ncols());
    for i in 0..k {
        let d = r[(i, i)];
        let a = d.norm();
        if a > 0.0 {
            let phase = d / a;
            // m = (q Phi)(Phi^* r) with Phi unitary diagonal.
            let pc = phase.conj();
            for c in i..r.ncols() {
                r[(i, c)] *= pc;
            }
            r[(i, i)] = C64::new(r[(i, i)].re, 0.0); // exact by construction
            for rr in 0..q.nrows() {
                q[(rr, i)] *= phase;
            }
        }
    }
    (q, r)
}

/// Complex Schur decomposition `m = q * t * q^H` with `t` upper triangular
/// and `q` unitary. Runs the QR iteration to convergence.
pub fn schur(m: &CMat) -> Result<(CMat, CMat)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "Schur decomposition requires a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok((CMat::zeros(0, 0), CMat::zeros(0, 0)));
    }
    // An already upper-triangular matrix is its own Schur form. Besides
    // saving work, this sidesteps the QR iteration's failure to converge on
    // degenerate inputs such as the exact zero matrix.
    let already_triangular =
        (1..n).all(|i| (0..i).all(|j| m[(i, j)] == C64::new(0.0, 0.0)));
    if already_triangular {
        return Ok((identity(n), m.clone()));
    }
    // The QR iteration can stall on exactly structured inputs (zero
    // diagonal with symmetric couplings, e.g. path-graph adjacency
    // matrices), where its shift strategy cycles without deflating. A
    // diagonal shift breaks the structure at no cost to exactness:
    // M - s I = Q T Q^H implies M = Q (T + s I) Q^H identically, so a
    // retried decomposition is returned with the shift added back. The
    // iteration cap per attempt follows the usual 30n LAPACK budget,
    // padded for small orders.
    let scale = m.norm().max(1.0);
    let shifts = [
        C64::new(0.0, 0.0),
        C64::new(0.0137, 0.0089) * scale,
        C64::new(0.071, -0.033) * scale,
        C64::new(0.251, 0.107) * scale,
    ];
    for shift in shifts {
        let shifted = if shift == C64::new(0.0, 0.0) {
            m.clone()
        } else {
            let mut sm = m.clone();
            for i in 0..n {
                sm[(i, i)] -= shift;
            }
            sm
        };
        if let Some(s) = nalgebra::linalg::Schur::try_new(shifted, EPS, 30 * n + 1000) {
            let (q, mut t) = s.unpack();
            for i in 0..n {
                t[(i, i)] += shift;
            }
            return Ok((q, t));
        }
    }
    Err(Error::Eigendecomposition(format!(
        "Schur QR iteration did not converge for a {n}x{n} matrix"
    )))
}

/// Eigenvalues of a general complex matrix, via the Schur form. The order
/// follows the diagonal of the triangular factor.
pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let (_, t) = schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Right eigenvectors of an upper triangular matrix, one column per diagonal
/// entry, computed by back-substitution. The `j`-th column `x` satisfies
/// `(t - t_jj I) x = 0` with `x[j] = 1` and `x[i] = 0` for `i > j`; near-equal
/// diagonal entries are perturbed at scale `eps * ||t||` so the substitution
/// stays finite (the caller decides whether the result is accurate enough).
pub fn eigvecs_upper_triangular(t: &CMat) -> CMat {
    let n = t.nrows();
    let scale = t.norm().max(1.0);
    let mut x = CMat::zeros(n, n);
    for j in 0..n {
        let lambda = t[(j, j)];
        x[(j, j)] = C64::new(1.0, 0.0);
        for i in (0..j).rev() {
            let mut s = C64::new(0.0, 0.0);
            for k in (i + 1)..=j {
                s += t[(i, k)] * x[(k, j)];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < EPS * scale {
                d = C64::new(EPS * scale, 0.0);
            }
            x[(i, j)] = -s / d;
        }
        // Normalize each eigenvector to unit length for predictable scaling.
        let nrm = x.column(j).norm();
        if nrm > 0.0 {
            for i in 0..=j {
                x[(i, j)] /= C64::new(nrm, 0.0);
            }
        }
    }
    x
}

/// Solves `a * x = b` by LU factorization with partial pivoting.
pub fn lu_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "LU solve requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "LU solve: matrix is {}x{} but right-hand side has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::MatrixFunction("LU solve of a singular matrix".into()))
}

/// Inverse via LU; fails on (numerically) singular input.
pub fn lu_inverse(a: &CMat) -> Result<CMat> {
    lu_solve(a, &identity(a.nrows()))
}

/// Solves `(shift I - t) x = b` for upper triangular `t` by in-place
/// back-substitution, overwriting `b` with the solution. Used per quadrature
/// node, where `t` is a Schur factor shared across many shifts.
///
/// Returns `false` if a pivot is exactly zero (shift equal to an eigenvalue).
pub fn shifted_upper_triangular_solve_mut(t: &CMat, shift: C64, b: &mut CMat) -> bool {
    let n = t.nrows();
    debug_assert_eq!(n, b.nrows());
    let s = b.ncols();
    for c in 0..s {
        for i in (0..n).rev() {
            let mut acc = b[(i, c)];
            for k in (i + 1)..n {
                // (shift I - t) has -t off the diagonal.
                acc += t[(i, k)] * b[(k, c)];
            }
            let piv = shift - t[(i, i)];
            if piv.norm() == 0.0 {
                return false;
            }
            b[(i, c)] = acc / piv;
        }
    }
    true
}

/// Smallest and largest singular values of a (small) complex matrix.
pub fn singular_value_extent(m: &CMat) -> Result<(f64, f64)> {
    let svd = m
        .clone()
        .try_svd(false, false, EPS, 0)
        .ok_or_else(|| Error::Eigendecomposition("SVD did not converge".into()))?;
    let sv = &svd.singular_values;
    if sv.is_empty() {
        return Ok((0.0, 0.0));
    }
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for v in sv.iter() {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    Ok((lo, hi))
}

/// Relative Frobenius distance `||a - b|| / max(||b||, floor)`, the error
/// measure used by most tests.
pub fn rel_frob(a: &CMat, b: &CMat) -> f64 {
    let d = (a - b).norm();
    let n = b.norm();
    if n > 0.0 {
        d / n
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_cmat(n: usize, m: usize, rng: &mut ChaCha12Rng) -> CMat {
        CMat::from_fn(n, m, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn qr_reconstructs_with_nonneg_diagonal() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let m = random_cmat(40, 6, &mut rng);
        let (q, r) = thin_qr_nonneg(&m);
        assert_eq!(q.shape(), (40, 6));
        assert_eq!(r.shape(), (6, 6));
        assert!(rel_frob(&(&q * &r), &m) < 1e-13);
        let qtq = q.adjoint() * &q;
        assert!(rel_frob(&qtq, &identity(6)) < 1e-13);
        for i in 0..6 {
            assert!(r[(i, i)].im == 0.0 && r[(i, i)].re >= 0.0);
            for j in 0..i {
                assert_eq!(r[(i, j)], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn schur_is_triangular_and_reconstructs() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let m = random_cmat(25, 25, &mut rng);
        let (q, t) = schur(&m).unwrap();
        for i in 0..25 {
            for j in 0..i {
                assert_eq!(t[(i, j)], C64::new(0.0, 0.0));
            }
        }
        let recon = &q * &t * q.adjoint();
        assert!(rel_frob(&recon, &m) < 1e-12);
    }

    #[test]
    fn triangular_eigvecs_diagonalize() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let mut t = random_cmat(12, 12, &mut rng);
        for i in 0..12 {
            for j in 0..i {
                t[(i, j)] = C64::new(0.0, 0.0);
            }
            // Spread the diagonal so the eigenproblem is well conditioned.
            t[(i, i)] += C64::new(3.0 * i as f64, 0.0);
        }
        let x = eigvecs_upper_triangular(&t);
        let tx = &t * &x;
        for j in 0..12 {
            let lam = t[(j, j)];
            let resid: f64 = (tx.column(j) - x.column(j).map(|v| v * lam)).norm();
            assert!(resid < 1e-12, "column {j} residual {resid:.3e}");
        }
    }

    #[test]
    fn shifted_solve_matches_lu() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let mut t = random_cmat(9, 9, &mut rng);
        for i in 0..9 {
            for j in 0..i {
                t[(i, j)] = C64::new(0.0, 0.0);
            }
        }
        let b = random_cmat(9, 3, &mut rng);
        let shift = C64::new(11.0, 4.0);
        let mut x = b.clone();
        assert!(shifted_upper_triangular_solve_mut(&t, shift, &mut x));
        let a = CMat::from_fn(9, 9, |i, j| {
            let base = if i == j { shift } else { C64::new(0.0, 0.0) };
            base - t[(i, j)]
        });
        let x_ref = lu_solve(&a, &b).unwrap();
        assert!(rel_frob(&x, &x_ref) < 1e-12);
    }

    #[test]
    fn singular_extent_brackets_spectrum() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let m = random_cmat(6, 6, &mut rng);
        let (lo, hi) = singular_value_extent(&m).unwrap();
        assert!(lo >= 0.0 && hi >= lo);
        // ||m||_F^2 between hi^2 and 6 * hi^2.
        let f2 = m.norm().powi(2);
        assert!(f2 >= hi * hi - 1e-12 && f2 <= 6.0 * hi * hi + 1e-12);
    }
}
