//! Block Arnoldi processes with classical and global inner products.
//!
//! Both schemes expand a block Krylov space `span{B, AB, A^2 B, ...}` block
//! by block, orthogonalizing with modified block Gram–Schmidt plus one full
//! reorthogonalization pass. They differ in the inner product on block
//! vectors (`s` columns each):
//!
//! * **classical**: `<<X, Y>> = X^H Y` (an `s x s` matrix), normalization by
//!   economy QR with real non-negative diagonal — blocks get orthonormal
//!   columns;
//! * **global**: `<<X, Y>> = (1/s) tr(X^H Y) I_s` (a scalar multiple of the
//!   identity), normalization by `(1/sqrt(s)) ||X||_F I_s` — blocks are
//!   mutually orthogonal in the Frobenius sense and the block Hessenberg
//!   matrix collapses to scalar entries.
//!
//! The classical scheme extracts more information per cycle; the global
//! scheme makes every Hessenberg operation `s^2`-fold cheaper. Both feed the
//! restarted approximation of matrix functions in [`crate::bfomfom`].

use crate::error::{Error, Result};
use crate::linalg::{C64, CMat, EPS, singular_value_extent, thin_qr_nonneg};
use crate::spectral::{BcircOperator, FaceDiagonalization};

/// Inner-product scheme for block vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerProductScheme {
    /// Matrix-valued inner product `X^H Y`.
    Classical,
    /// Scaled-trace inner product `(1/s) tr(X^H Y) I`.
    Global,
}

impl InnerProductScheme {
    /// Lowercase display name (matches CLI flags and result files).
    pub fn name(&self) -> &'static str {
        match self {
            InnerProductScheme::Classical => "classical",
            InnerProductScheme::Global => "global",
        }
    }
}

/// A linear operator on stacked block vectors (`rows x s` matrices).
///
/// The Krylov code only needs products against the operator, its row count,
/// and a Frobenius-scale norm estimate for breakdown thresholds.
pub trait BlockOperator: Sync {
    /// Number of rows the operator acts on.
    fn rows(&self) -> usize;
    /// Computes `A x`.
    fn apply(&self, x: &CMat) -> Result<CMat>;
    /// Frobenius norm (or a faithful estimate) of the operator matrix.
    fn norm_est(&self) -> f64;
}

/// A dense matrix as a block operator; mainly for tests and small oracles.
pub struct DenseOperator(pub CMat);

impl BlockOperator for DenseOperator {
    fn rows(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &CMat) -> Result<CMat> {
        if x.nrows() != self.0.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{} but operand has {} rows",
                self.0.nrows(),
                self.0.ncols(),
                x.nrows()
            )));
        }
        Ok(&self.0 * x)
    }
    fn norm_est(&self) -> f64 {
        self.0.norm()
    }
}

impl BlockOperator for BcircOperator {
    fn rows(&self) -> usize {
        self.face_diagonalization().n1() * self.face_diagonalization().p()
    }
    fn apply(&self, x: &CMat) -> Result<CMat> {
        self.apply_mat(x)
    }
    fn norm_est(&self) -> f64 {
        self.norm_f()
    }
}

/// The block-diagonal operator `blockdiag(D_1, ..., D_p)` of Fourier faces:
/// the unitarily transformed image of a block circulant. Applying it costs
/// `p` independent face products and no FFT.
pub struct FourierDiagOperator {
    faces: Vec<CMat>,
    n: usize,
}

impl FourierDiagOperator {
    /// Wraps the faces of a square-faced tensor's diagonalization.
    pub fn new(fd: &FaceDiagonalization) -> Result<Self> {
        if fd.n1() != fd.n2() {
            return Err(Error::DimensionMismatch(format!(
                "block-diagonal operator requires square faces, got {}x{}",
                fd.n1(),
                fd.n2()
            )));
        }
        Ok(FourierDiagOperator {
            faces: fd.faces().to_vec(),
            n: fd.n1(),
        })
    }
}

impl BlockOperator for FourierDiagOperator {
    fn rows(&self) -> usize {
        self.n * self.faces.len()
    }
    fn apply(&self, x: &CMat) -> Result<CMat> {
        if x.nrows() != self.rows() {
            return Err(Error::DimensionMismatch(format!(
                "operator acts on {} rows but operand has {}",
                self.rows(),
                x.nrows()
            )));
        }
        let mut y = CMat::zeros(x.nrows(), x.ncols());
        for (k, d) in self.faces.iter().enumerate() {
            let xk = x.rows(k * self.n, self.n);
            y.rows_mut(k * self.n, self.n).copy_from(&(d * xk));
        }
        Ok(y)
    }
    fn norm_est(&self) -> f64 {
        self.faces.iter().map(|f| f.norm().powi(2)).sum::<f64>().sqrt()
    }
}

/// Block inner product `<<x, y>>` under the given scheme; always an
/// `s x s` matrix (the global product is a scalar multiple of the identity).
pub fn ip(scheme: InnerProductScheme, x: &CMat, y: &CMat) -> Result<CMat> {
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch(format!(
            "inner product of {}x{} and {}x{} blocks",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    let s = x.ncols();
    match scheme {
        InnerProductScheme::Classical => Ok(x.adjoint() * y),
        InnerProductScheme::Global => {
            let t = x.dotc(y) / C64::new(s as f64, 0.0);
            Ok(CMat::identity(s, s) * t)
        }
    }
}

/// Result of normalizing a candidate block.
#[derive(Debug, Clone)]
pub enum Normalized {
    /// Full-rank candidate: `x = q n` with `q` normalized under the scheme
    /// and `n` the `s x s` normalization factor (upper triangular with real
    /// non-negative diagonal for classical, `nu I` for global).
    Full { q: CMat, n: CMat },
    /// The candidate is numerically rank deficient — for classical, the
    /// smallest singular value of its triangular factor is at most
    /// `s * eps` times the largest; for global, its Frobenius norm is at or
    /// below `breakdown_floor`. The Arnoldi loop treats this as
    /// invariant-subspace termination.
    RankDeficient,
}

/// Normalizes a block under the scheme, detecting breakdown.
///
/// `breakdown_floor` is the absolute Frobenius scale below which a global
/// candidate counts as zero (callers pass `eps * ||A|| * ||V_k||`; pass 0.0
/// to only catch exact zeros).
pub fn normalize(
    scheme: InnerProductScheme,
    x: &CMat,
    breakdown_floor: f64,
) -> Result<Normalized> {
    let s = x.ncols();
    match scheme {
        InnerProductScheme::Classical => {
            // A block that vanished entirely is round-off noise and looks
            // numerically full rank to the singular-value ratio, so the
            // absolute floor must be checked first.
            if x.norm() <= breakdown_floor {
                return Ok(Normalized::RankDeficient);
            }
            let (q, r) = thin_qr_nonneg(x);
            let (lo, hi) = singular_value_extent(&r)?;
            if lo <= s as f64 * EPS * hi {
                return Ok(Normalized::RankDeficient);
            }
            Ok(Normalized::Full { q, n: r })
        }
        InnerProductScheme::Global => {
            let norm = x.norm();
            if norm <= breakdown_floor {
                return Ok(Normalized::RankDeficient);
            }
            let nu = norm / (s as f64).sqrt();
            Ok(Normalized::Full {
                q: x / C64::new(nu, 0.0),
                n: CMat::identity(s, s) * C64::new(nu, 0.0),
            })
        }
    }
}

/// A block Arnoldi decomposition `A V_m = V_{m+1} H` (underlined Hessenberg).
///
/// For the classical scheme the Hessenberg factor is block-structured,
/// `(m+1)s x ms`; for the global scheme it is scalar, `(m+1) x m`, and the
/// block relation uses its Kronecker expansion `H (x) I_s`.
#[derive(Debug, Clone)]
pub struct BlockArnoldiDecomposition {
    /// Inner-product scheme the decomposition was built under.
    pub scheme: InnerProductScheme,
    /// Block width `s`.
    pub s: usize,
    /// Completed Arnoldi steps (equals the requested `m` unless the
    /// iteration terminated on an invariant subspace).
    pub m: usize,
    /// Basis blocks `V_1, ..., V_{m+1}` (only `m` blocks after breakdown).
    pub basis: Vec<CMat>,
    /// Hessenberg entries: `(m+1)s x ms` (classical) or `(m+1) x m` (global).
    /// After breakdown the final block row is zero.
    pub hess: CMat,
    /// Normalization factor of the initial block, `b = V_1 B`.
    pub b_norm: CMat,
    /// `Some(k)` if normalization at step `k` (1-based) found the candidate
    /// rank deficient, terminating the expansion on an invariant subspace.
    pub breakdown: Option<usize>,
}

impl BlockArnoldiDecomposition {
    /// The square Hessenberg part `H_m` (`ms x ms` classical, `m x m`
    /// global).
    pub fn hessenberg_square(&self) -> CMat {
        let d = self.hess.ncols();
        self.hess.view((0, 0), (d, d)).into_owned()
    }

    /// The subdiagonal tail block `H_{m+1,m}` (`s x s` classical, `1 x 1`
    /// global); zero after breakdown.
    pub fn tail(&self) -> CMat {
        let (rows_per, d) = match self.scheme {
            InnerProductScheme::Classical => (self.s, self.m * self.s),
            InnerProductScheme::Global => (1, self.m),
        };
        self.hess
            .view((d, d - rows_per.min(d)), (rows_per, rows_per.min(d)))
            .into_owned()
    }

    /// The stacked basis `[V_1 | ... | V_j]` for the first `j` blocks.
    pub fn basis_matrix(&self, j: usize) -> CMat {
        let rows = self.basis[0].nrows();
        let mut v = CMat::zeros(rows, j * self.s);
        for (i, b) in self.basis.iter().take(j).enumerate() {
            v.columns_mut(i * self.s, self.s).copy_from(b);
        }
        v
    }

    /// Kronecker expansion `hess (x) I_s` of a global Hessenberg matrix so
    /// both schemes can be compared through the same block relation; returns
    /// the Hessenberg unchanged for the classical scheme.
    pub fn hessenberg_expanded(&self) -> CMat {
        match self.scheme {
            InnerProductScheme::Classical => self.hess.clone(),
            InnerProductScheme::Global => self.hess.kronecker(&CMat::identity(self.s, self.s)),
        }
    }
}

/// Runs `m` steps of block Arnoldi for `op` starting from block `b`, with
/// modified block Gram–Schmidt and one full reorthogonalization pass.
///
/// A rank-deficient candidate at step `k` terminates the expansion early
/// (the span is an invariant subspace); the decomposition then has `m = k`,
/// a zero tail, and `breakdown = Some(k)`. A rank-deficient *initial* block
/// is an error.
pub fn block_arnoldi(
    op: &dyn BlockOperator,
    b: &CMat,
    scheme: InnerProductScheme,
    m: usize,
) -> Result<BlockArnoldiDecomposition> {
    if m == 0 {
        return Err(Error::InvalidArgument("at least one Arnoldi step".into()));
    }
    if b.nrows() != op.rows() {
        return Err(Error::DimensionMismatch(format!(
            "operator acts on {} rows but the initial block has {}",
            op.rows(),
            b.nrows()
        )));
    }
    let s = b.ncols();
    if s == 0 {
        return Err(Error::InvalidArgument("initial block has no columns".into()));
    }
    let op_norm = op.norm_est();

    let (v1, b_norm) = match normalize(scheme, b, EPS * op_norm.max(1.0) * b.norm())? {
        Normalized::Full { q, n } => (q, n),
        Normalized::RankDeficient => {
            return Err(Error::Breakdown {
                step: 0,
                reason: "initial block is rank deficient".into(),
            });
        }
    };

    let (hrows_per, hcols_per) = match scheme {
        InnerProductScheme::Classical => (s, s),
        InnerProductScheme::Global => (1, 1),
    };
    let mut hess = CMat::zeros((m + 1) * hrows_per, m * hcols_per);
    let mut basis = vec![v1];
    let mut breakdown = None;
    let mut completed = 0usize;

    for k in 1..=m {
        let vk = &basis[k - 1];
        let mut w = op.apply(vk)?;
        // Modified block Gram-Schmidt, then one full reorthogonalization.
        for pass in 0..2 {
            for (i, vi) in basis.iter().enumerate() {
                let c = ip(scheme, vi, &w)?;
                w -= vi * &c;
                let h = hess.view((i * hrows_per, (k - 1) * hcols_per), (hrows_per, hcols_per))
                    .into_owned();
                let add = match scheme {
                    InnerProductScheme::Classical => c,
                    InnerProductScheme::Global => CMat::from_element(1, 1, c[(0, 0)]),
                };
                let _ = pass; // both passes accumulate into H identically
                hess.view_mut((i * hrows_per, (k - 1) * hcols_per), (hrows_per, hcols_per))
                    .copy_from(&(h + add));
            }
        }
        let floor = EPS * op_norm * vk.norm();
        match normalize(scheme, &w, floor)? {
            Normalized::Full { q, n } => {
                let tail = match scheme {
                    InnerProductScheme::Classical => n,
                    InnerProductScheme::Global => CMat::from_element(1, 1, n[(0, 0)]),
                };
                hess.view_mut((k * hrows_per, (k - 1) * hcols_per), (hrows_per, hcols_per))
                    .copy_from(&tail);
                basis.push(q);
                completed = k;
            }
            Normalized::RankDeficient => {
                breakdown = Some(k);
                completed = k;
                break;
            }
        }
    }

    // Trim storage to what was actually built.
    let mm = completed;
    let hess = hess
        .view((0, 0), ((mm + 1) * hrows_per, mm * hcols_per))
        .into_owned();
    Ok(BlockArnoldiDecomposition {
        scheme,
        s,
        m: mm,
        basis,
        hess,
        b_norm,
        breakdown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rel_frob;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_cmat(n: usize, m: usize, rng: &mut ChaCha12Rng) -> CMat {
        CMat::from_fn(n, m, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn check_arnoldi_relation(op: &DenseOperator, dec: &BlockArnoldiDecomposition) {
        let vm = dec.basis_matrix(dec.m);
        let vmp1 = dec.basis_matrix(dec.basis.len());
        let lhs = &op.0 * &vm;
        let h = dec.hessenberg_expanded();
        let h_used = h.view((0, 0), (dec.basis.len() * dec.s, dec.m * dec.s));
        let rhs = vmp1 * h_used;
        let err = (lhs - rhs).norm() / op.0.norm();
        assert!(err < 1e-12, "Arnoldi relation violated: {err:.3e}");
    }

    #[test]
    fn classical_arnoldi_relation_and_orthonormality() {
        let mut rng = ChaCha12Rng::seed_from_u64(51);
        let a = random_cmat(40, 40, &mut rng);
        let b = random_cmat(40, 3, &mut rng);
        let op = DenseOperator(a);
        let dec = block_arnoldi(&op, &b, InnerProductScheme::Classical, 6).unwrap();
        assert_eq!(dec.m, 6);
        assert!(dec.breakdown.is_none());
        check_arnoldi_relation(&op, &dec);
        let v = dec.basis_matrix(dec.basis.len());
        let gram = v.adjoint() * &v;
        assert!(rel_frob(&gram, &CMat::identity(21, 21)) < 1e-12);
        // b = V_1 B with B upper triangular, non-negative real diagonal.
        let recon = &dec.basis[0] * &dec.b_norm;
        assert!(rel_frob(&recon, &b) < 1e-12);
        for i in 0..3 {
            assert!(dec.b_norm[(i, i)].im == 0.0 && dec.b_norm[(i, i)].re >= 0.0);
        }
    }

    #[test]
    fn global_arnoldi_relation_and_orthogonality() {
        let mut rng = ChaCha12Rng::seed_from_u64(52);
        let a = random_cmat(30, 30, &mut rng);
        let b = random_cmat(30, 4, &mut rng);
        let op = DenseOperator(a);
        let dec = block_arnoldi(&op, &b, InnerProductScheme::Global, 5).unwrap();
        assert_eq!(dec.hess.shape(), (6, 5));
        check_arnoldi_relation(&op, &dec);
        // Blocks are Frobenius-orthogonal with norm sqrt(s).
        for i in 0..dec.basis.len() {
            for j in 0..dec.basis.len() {
                let g = dec.basis[i].dotc(&dec.basis[j]) / C64::new(4.0, 0.0);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (g - C64::new(expect, 0.0)).norm() < 1e-12,
                    "gram({i},{j}) = {g}"
                );
            }
        }
    }

    #[test]
    fn global_scheme_equals_vectorized_scalar_arnoldi() {
        // The global process on (A, B) is standard Arnoldi on I_s (x) A
        // applied to vec(B): Hessenberg entries agree to round-off.
        let mut rng = ChaCha12Rng::seed_from_u64(53);
        let n = 4 * 3; // n * p <= 4 * 4 scale
        let s = 2;
        let a = random_cmat(n, n, &mut rng);
        let b = random_cmat(n, s, &mut rng);
        let m = 5;
        let dec = block_arnoldi(&DenseOperator(a.clone()), &b, InnerProductScheme::Global, m)
            .unwrap();

        // Column-stacked vectorization turns X -> vec(X) and A X -> (I (x) A) vec(X).
        let kron = CMat::identity(s, s).kronecker(&a);
        let vecb = CMat::from_fn(n * s, 1, |r, _| b[(r % n, r / n)]);
        // Plain scalar Arnoldi with reorthogonalization.
        let mut vs: Vec<CMat> = vec![&vecb / C64::new(vecb.norm(), 0.0)];
        let mut h = CMat::zeros(m + 1, m);
        for k in 0..m {
            let mut w = &kron * &vs[k];
            for _ in 0..2 {
                for (i, vi) in vs.iter().enumerate() {
                    let c = vi.dotc(&w);
                    w -= vi * c;
                    h[(i, k)] += c;
                }
            }
            let nrm = w.norm();
            h[(k + 1, k)] = C64::new(nrm, 0.0);
            vs.push(&w / C64::new(nrm, 0.0));
        }
        assert!(rel_frob(&dec.hess, &h) < 1e-12);
    }

    #[test]
    fn scaled_identity_breaks_down_as_invariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(54);
        let alpha = C64::new(2.5, -1.25);
        let a = CMat::identity(12, 12) * alpha;
        let b = random_cmat(12, 3, &mut rng);
        for scheme in [InnerProductScheme::Classical, InnerProductScheme::Global] {
            let dec = block_arnoldi(&DenseOperator(a.clone()), &b, scheme, 3).unwrap();
            assert_eq!(dec.breakdown, Some(1), "{scheme:?}");
            assert_eq!(dec.m, 1);
            assert_eq!(dec.basis.len(), 1);
            let hsq = dec.hessenberg_square();
            // H_11 = alpha I (classical) or alpha (global); tail zero.
            for i in 0..hsq.nrows() {
                for j in 0..hsq.ncols() {
                    let expect = if i == j { alpha } else { C64::new(0.0, 0.0) };
                    assert!((hsq[(i, j)] - expect).norm() < 1e-13);
                }
            }
            assert!(dec.tail().norm() < 1e-13);
        }
    }

    #[test]
    fn rank_deficient_initial_block_is_an_error() {
        let mut rng = ChaCha12Rng::seed_from_u64(55);
        let a = random_cmat(10, 10, &mut rng);
        let col = random_cmat(10, 1, &mut rng);
        let mut b = CMat::zeros(10, 2);
        b.column_mut(0).copy_from(&col);
        b.column_mut(1).copy_from(&(col * C64::new(2.0, 0.0)));
        let err = block_arnoldi(&DenseOperator(a), &b, InnerProductScheme::Classical, 3)
            .unwrap_err();
        assert!(matches!(err, Error::Breakdown { step: 0, .. }));
    }

    #[test]
    fn fourier_diag_operator_matches_bcirc_operator_spectra() {
        use crate::spectral::{BcircOperator, face_diagonalize};
        use crate::tensor::Tensor3;
        let mut rng = ChaCha12Rng::seed_from_u64(56);
        let a = Tensor3::random(3, 3, 4, &mut rng).unwrap();
        let bc = BcircOperator::new(&a);
        let fd = FourierDiagOperator::new(&face_diagonalize(&a)).unwrap();
        assert_eq!(bc.rows(), 12);
        assert_eq!(fd.rows(), 12);
        assert!((bc.norm_est() - fd.norm_est()).abs() < 1e-10 * bc.norm_est());
        // Same operator up to the unitary block-DFT similarity: equal traces
        // of powers.
        let x = CMat::identity(12, 12);
        let bcirc_full = bc.apply(&x).unwrap();
        let diag_full = fd.apply(&x).unwrap();
        let t1: C64 = (0..12).map(|i| bcirc_full[(i, i)]).sum();
        let t2: C64 = (0..12).map(|i| diag_full[(i, i)]).sum();
        assert!((t1 - t2).norm() < 1e-10);
    }
}
