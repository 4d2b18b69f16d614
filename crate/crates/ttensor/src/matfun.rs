//! Dense matrix functions `f(M)` for complex matrices.
//!
//! Three specialized paths — scaling-and-squaring Padé for the exponential,
//! LU for the inverse, Björck–Hammarling recurrence for the principal square
//! root — plus a general Schur–Parlett evaluator for arbitrary scalar
//! functions given through [`ScalarFunction`]. The general path clusters
//! close eigenvalues, reorders the triangular Schur factor so clusters are
//! contiguous, evaluates each diagonal cluster block by a Taylor expansion
//! around the cluster mean, and fills the off-diagonal blocks with the block
//! Parlett recurrence (triangular Sylvester solves).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{
    self, C64, CMat, EPS, identity, lu_inverse, schur, shifted_upper_triangular_solve_mut,
};

/// Absolute eigenvalue gap below which two eigenvalues belong to the same
/// Parlett cluster (chained: clusters are connected components under this
/// distance).
pub const CLUSTER_GAP: f64 = 0.1;

/// Maximum number of Taylor terms for one diagonal cluster block.
pub const MAX_TAYLOR_TERMS: usize = 25;

/// Padé-13 threshold for scaling and squaring of the matrix exponential.
const PADE13_THETA: f64 = 5.371920351148152;

/// A scalar function `f` together with the derivative information the
/// matrix-function algorithms need.
///
/// The built-in variants carry closed-form derivatives of every order. A
/// [`ScalarFunction::generic`] function evaluates anywhere on the complex
/// plane but cannot be used on clustered (non-diagonalizable or nearly so)
/// spectra unless derivatives are supplied via
/// [`ScalarFunction::generic_with_derivatives`].
#[derive(Clone)]
pub enum ScalarFunction {
    /// `f(z) = exp(z)`.
    Exp,
    /// `f(z) = 1/z`.
    Inverse,
    /// Principal square root, `f(z) = z^(1/2)`.
    Sqrt,
    /// User-supplied function.
    Generic(GenericFunction),
}

/// A user-supplied scalar function: an evaluator, an optional derivative
/// evaluator (`deriv(k, z) = f^(k)(z)`, with `deriv(0, z) = f(z)`), and a
/// display name.
#[derive(Clone)]
pub struct GenericFunction {
    name: String,
    eval: Arc<dyn Fn(C64) -> C64 + Send + Sync>,
    deriv: Option<Arc<dyn Fn(usize, C64) -> C64 + Send + Sync>>,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFunction({})", self.name())
    }
}

impl ScalarFunction {
    /// The exponential.
    pub fn exp() -> Self {
        ScalarFunction::Exp
    }

    /// The reciprocal.
    pub fn inverse() -> Self {
        ScalarFunction::Inverse
    }

    /// The principal square root.
    pub fn sqrt() -> Self {
        ScalarFunction::Sqrt
    }

    /// A generic function without derivative information. Matrix-function
    /// evaluation fails (rather than degrading) if the spectrum clusters.
    pub fn generic(
        name: impl Into<String>,
        eval: impl Fn(C64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        ScalarFunction::Generic(GenericFunction {
            name: name.into(),
            eval: Arc::new(eval),
            deriv: None,
        })
    }

    /// A generic function with a derivative evaluator `deriv(k, z) = f^(k)(z)`.
    pub fn generic_with_derivatives(
        name: impl Into<String>,
        eval: impl Fn(C64) -> C64 + Send + Sync + 'static,
        deriv: impl Fn(usize, C64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        ScalarFunction::Generic(GenericFunction {
            name: name.into(),
            eval: Arc::new(eval),
            deriv: Some(Arc::new(deriv)),
        })
    }

    /// The polynomial `c[0] + c[1] z + ... + c[d] z^d`, with exact
    /// derivatives of every order.
    pub fn polynomial(coeffs: &[C64]) -> Self {
        let c: Arc<[C64]> = coeffs.into();
        let c_eval = Arc::clone(&c);
        let c_deriv = Arc::clone(&c);
        let name = format!("polynomial(degree {})", coeffs.len().saturating_sub(1));
        ScalarFunction::Generic(GenericFunction {
            name,
            eval: Arc::new(move |z| horner(&c_eval, z)),
            deriv: Some(Arc::new(move |k, z| poly_derivative(&c_deriv, k, z))),
        })
    }

    /// Display name of the function.
    pub fn name(&self) -> &str {
        match self {
            ScalarFunction::Exp => "exp",
            ScalarFunction::Inverse => "inverse",
            ScalarFunction::Sqrt => "sqrt",
            ScalarFunction::Generic(g) => &g.name,
        }
    }

    /// Evaluates `f(z)`.
    pub fn eval(&self, z: C64) -> C64 {
        match self {
            ScalarFunction::Exp => z.exp(),
            ScalarFunction::Inverse => z.inv(),
            ScalarFunction::Sqrt => z.sqrt(),
            ScalarFunction::Generic(g) => (g.eval)(z),
        }
    }

    /// Evaluates the `k`-th derivative `f^(k)(z)` if available (`k = 0`
    /// is the function itself). Returns `None` for a generic function
    /// without a derivative evaluator and `k >= 1`.
    pub fn deriv(&self, k: usize, z: C64) -> Option<C64> {
        if k == 0 {
            return Some(self.eval(z));
        }
        match self {
            ScalarFunction::Exp => Some(z.exp()),
            ScalarFunction::Inverse => {
                // d^k/dz^k z^-1 = (-1)^k k! z^-(k+1)
                let mut c = 1.0;
                for i in 1..=k {
                    c *= i as f64;
                }
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                Some(z.powi(-(k as i32 + 1)) * C64::new(sign * c, 0.0))
            }
            ScalarFunction::Sqrt => {
                // d^k/dz^k z^(1/2) = (1/2)(1/2 - 1)...(1/2 - k + 1) z^(1/2 - k)
                let mut c = C64::new(1.0, 0.0);
                for i in 0..k {
                    c *= C64::new(0.5 - i as f64, 0.0);
                }
                Some(c * z.powc(C64::new(0.5 - k as f64, 0.0)))
            }
            ScalarFunction::Generic(g) => g.deriv.as_ref().map(|d| d(k, z)),
        }
    }
}

fn horner(coeffs: &[C64], z: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

fn poly_derivative(coeffs: &[C64], k: usize, z: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (j, &c) in coeffs.iter().enumerate().skip(k) {
        // j! / (j - k)! falling factorial
        let mut fall = 1.0;
        for i in (j - k + 1)..=j {
            fall *= i as f64;
        }
        acc += c * C64::new(fall, 0.0) * z.powi((j - k) as i32);
    }
    acc
}

/// Evaluates the matrix function `f(m)`, routing to the specialized
/// algorithm for the built-in functions and to Schur–Parlett otherwise.
pub fn funm(f: &ScalarFunction, m: &CMat) -> Result<CMat> {
    require_square(m)?;
    match f {
        ScalarFunction::Exp => expm(m),
        ScalarFunction::Inverse => lu_inverse(m),
        ScalarFunction::Sqrt => sqrtm(m),
        ScalarFunction::Generic(_) => funm_parlett(f, m),
    }
}

fn require_square(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "matrix function of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn one_norm(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).iter().map(|v| v.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Matrix exponential by Padé-13 approximation with scaling and squaring.
pub fn expm(m: &CMat) -> Result<CMat> {
    require_square(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let norm = one_norm(m);
    let mut squarings = 0usize;
    let mut a = m.clone();
    if norm > PADE13_THETA {
        squarings = (norm / PADE13_THETA).log2().ceil() as usize;
        let scale = C64::new((0.5f64).powi(squarings as i32), 0.0);
        a *= scale;
    }
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let w1 = &a6 * C64::new(B[13], 0.0) + &a4 * C64::new(B[11], 0.0) + &a2 * C64::new(B[9], 0.0);
    let w2 = &a6 * C64::new(B[7], 0.0)
        + &a4 * C64::new(B[5], 0.0)
        + &a2 * C64::new(B[3], 0.0)
        + &id * C64::new(B[1], 0.0);
    let z1 = &a6 * C64::new(B[12], 0.0) + &a4 * C64::new(B[10], 0.0) + &a2 * C64::new(B[8], 0.0);
    let z2 = &a6 * C64::new(B[6], 0.0)
        + &a4 * C64::new(B[4], 0.0)
        + &a2 * C64::new(B[2], 0.0)
        + &id * C64::new(B[0], 0.0);
    let w = &a6 * &w1 + &w2;
    let u = &a * &w;
    let v = &a6 * &z1 + &z2;
    let num = &v + &u;
    let den = &v - &u;
    let mut r = linalg::lu_solve(&den, &num)
        .map_err(|_| Error::MatrixFunction("singular Padé denominator in expm".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// Principal matrix square root via the Schur form and the
/// Björck–Hammarling recurrence. Fails if an eigenvalue pair makes the
/// recurrence singular (in particular for a singular matrix whose square
/// root does not exist).
pub fn sqrtm(m: &CMat) -> Result<CMat> {
    require_square(m)?;
    let (q, t) = schur(m)?;
    let n = t.nrows();
    let mut u = CMat::zeros(n, n);
    let scale = t.norm().max(1.0);
    for i in 0..n {
        u[(i, i)] = t[(i, i)].sqrt();
    }
    for off in 1..n {
        for i in 0..(n - off) {
            let j = i + off;
            let mut s = t[(i, j)];
            for k in (i + 1)..j {
                s -= u[(i, k)] * u[(k, j)];
            }
            let d = u[(i, i)] + u[(j, j)];
            if d.norm() < EPS * scale {
                return Err(Error::MatrixFunction(format!(
                    "square root recurrence singular for eigenvalue pair ({}, {})",
                    t[(i, i)],
                    t[(j, j)]
                )));
            }
            u[(i, j)] = s / d;
        }
    }
    Ok(&q * &u * q.adjoint())
}

/// Evaluates `f(m)` by the Schur–Parlett algorithm regardless of `f`'s
/// variant. [`funm`] calls this for generic functions; it is public so the
/// specialized paths can be cross-validated against it.
pub fn funm_parlett(f: &ScalarFunction, m: &CMat) -> Result<CMat> {
    require_square(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let (mut q, mut t) = schur(m)?;

    // Cluster eigenvalues by chaining with the absolute gap threshold.
    let eigs: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let clusters = chain_clusters(&eigs, CLUSTER_GAP);

    // Bring each cluster to a contiguous diagonal range (stable order:
    // clusters appear in order of their first member).
    let mut cluster_of: Vec<usize> = clusters.clone();
    let num_clusters = cluster_of.iter().copied().max().unwrap_or(0) + 1;
    let mut counts = vec![0usize; num_clusters];
    for &c in &cluster_of {
        counts[c] += 1;
    }
    let mut pos = 0usize;
    for cl in 0..num_clusters {
        for _ in 0..counts[cl] {
            let idx = (pos..n)
                .find(|&i| cluster_of[i] == cl)
                .expect("cluster member count mismatch");
            for kswap in (pos..idx).rev() {
                swap_adjacent_schur(&mut t, &mut q, kswap);
                cluster_of.swap(kswap, kswap + 1);
            }
            pos += 1;
        }
    }

    // Contiguous cluster ranges (start, len) in the reordered form.
    let mut ranges: Vec<(usize, usize)> = Vec::with_capacity(num_clusters);
    let mut start = 0usize;
    while start < n {
        let cl = cluster_of[start];
        let mut end = start;
        while end < n && cluster_of[end] == cl {
            end += 1;
        }
        ranges.push((start, end - start));
        start = end;
    }

    // Diagonal cluster blocks by Taylor expansion around the cluster mean.
    let mut ft = CMat::zeros(n, n);
    for &(s0, len) in &ranges {
        let block = t.view((s0, s0), (len, len)).into_owned();
        let fb = atomic_block(f, &block)?;
        ft.view_mut((s0, s0), (len, len)).copy_from(&fb);
    }

    // Off-diagonal blocks by the block Parlett recurrence, in order of
    // increasing cluster separation.
    for sep in 1..ranges.len() {
        for bi in 0..(ranges.len() - sep) {
            let bj = bi + sep;
            let (i0, ilen) = ranges[bi];
            let (j0, jlen) = ranges[bj];
            let tij = t.view((i0, j0), (ilen, jlen));
            let fii = ft.view((i0, i0), (ilen, ilen));
            let fjj = ft.view((j0, j0), (jlen, jlen));
            // rhs = F_II T_IJ - T_IJ F_JJ + sum_{I<K<J} (F_IK T_KJ - T_IK F_KJ)
            let mut rhs = &fii * &tij - &tij * &fjj;
            for bk in (bi + 1)..bj {
                let (k0, klen) = ranges[bk];
                let fik = ft.view((i0, k0), (ilen, klen));
                let tkj = t.view((k0, j0), (klen, jlen));
                let tik = t.view((i0, k0), (ilen, klen));
                let fkj = ft.view((k0, j0), (klen, jlen));
                rhs += &fik * &tkj - &tik * &fkj;
            }
            // Solve T_II X - X T_JJ = rhs column by column; pivots are
            // separated by more than the cluster gap by construction.
            let tii = t.view((i0, i0), (ilen, ilen)).into_owned();
            let tjj = t.view((j0, j0), (jlen, jlen));
            let mut x = CMat::zeros(ilen, jlen);
            for c in 0..jlen {
                let mut col = rhs.column(c).into_owned();
                for cp in 0..c {
                    let w = tjj[(cp, c)];
                    col += x.column(cp) * w;
                }
                // (T_II - t_cc I) y = col  <=>  y = -solve((t_cc I - T_II), col)
                let mut y = CMat::from_column_slice(ilen, 1, col.as_slice());
                if !shifted_upper_triangular_solve_mut(&tii, tjj[(c, c)], &mut y) {
                    return Err(Error::MatrixFunction(
                        "Parlett recurrence pivot vanished between clusters".into(),
                    ));
                }
                for r in 0..ilen {
                    x[(r, c)] = -y[(r, 0)];
                }
            }
            ft.view_mut((i0, j0), (ilen, jlen)).copy_from(&x);
        }
    }

    Ok(&q * &ft * q.adjoint())
}

/// Connected components of the eigenvalue set under distance <= gap,
/// labeled in order of first appearance.
fn chain_clusters(eigs: &[C64], gap: f64) -> Vec<usize> {
    let n = eigs.len();
    // Union-find over indices.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        let mut root = i;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = i;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (eigs[i] - eigs[j]).norm() <= gap {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut label_of_root = std::collections::HashMap::new();
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let r = find(&mut parent, i);
        let next = label_of_root.len();
        let l = *label_of_root.entry(r).or_insert(next);
        labels.push(l);
    }
    labels
}

/// Swaps the diagonal entries `t[k]` and `t[k+1]` of the triangular Schur
/// factor by a unitary similarity (a complex Givens rotation), updating `q`
/// accordingly and keeping `t` upper triangular.
fn swap_adjacent_schur(t: &mut CMat, q: &mut CMat, k: usize) {
    let a = t[(k, k)];
    let b = t[(k, k + 1)];
    let d = t[(k + 1, k + 1)];
    // Eigenvector of [[a, b], [0, d]] for eigenvalue d is (b, d - a).
    let x1 = b;
    let x2 = d - a;
    let nrm = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
    if nrm == 0.0 {
        return; // equal eigenvalues with no coupling: nothing to do
    }
    let u1 = x1 / nrm;
    let u2 = x2 / nrm;
    // G = [[u1, -conj(u2)], [u2, conj(u1)]] is unitary with first column the
    // eigenvector, so G^* T22 G = [[d, *], [0, a]].
    let g11 = u1;
    let g12 = -u2.conj();
    let g21 = u2;
    let g22 = u1.conj();
    let n = t.nrows();
    // Columns k, k+1 of T (rows 0..k+2 are affected in a triangular matrix).
    for r in 0..(k + 2).min(n) {
        let c1 = t[(r, k)];
        let c2 = t[(r, k + 1)];
        t[(r, k)] = c1 * g11 + c2 * g21;
        t[(r, k + 1)] = c1 * g12 + c2 * g22;
    }
    // Rows k, k+1 of T (columns k..n), applying G^* from the left.
    for c in k..n {
        let r1 = t[(k, c)];
        let r2 = t[(k + 1, c)];
        t[(k, c)] = g11.conj() * r1 + g21.conj() * r2;
        t[(k + 1, c)] = g12.conj() * r1 + g22.conj() * r2;
    }
    t[(k + 1, k)] = C64::new(0.0, 0.0);
    // Q <- Q G.
    for r in 0..n {
        let c1 = q[(r, k)];
        let c2 = q[(r, k + 1)];
        q[(r, k)] = c1 * g11 + c2 * g21;
        q[(r, k + 1)] = c1 * g12 + c2 * g22;
    }
}

/// Evaluates `f` on one (small) triangular cluster block by a Taylor
/// expansion around the mean of its eigenvalues.
fn atomic_block(f: &ScalarFunction, block: &CMat) -> Result<CMat> {
    let len = block.nrows();
    let mu = block.diagonal().sum() / C64::new(len as f64, 0.0);
    let f0 = f
        .deriv(0, mu)
        .expect("derivative order 0 is always available");
    if len == 1 {
        return Ok(CMat::from_element(1, 1, f0));
    }
    let nmat = block - identity(len) * mu;
    let mut sum = identity(len) * f0;
    let mut pow = identity(len); // N^k / k!
    for k in 1..=MAX_TAYLOR_TERMS {
        pow = (&pow * &nmat) / C64::new(k as f64, 0.0);
        let coef = f.deriv(k, mu).ok_or_else(|| {
            Error::MatrixFunction(format!(
                "function '{}' has no derivative evaluator but the spectrum clusters \
                 ({len} eigenvalues within the gap threshold)",
                f.name()
            ))
        })?;
        let term = &pow * coef;
        let tnorm = term.norm();
        sum += term;
        if tnorm <= EPS * sum.norm() {
            return Ok(sum);
        }
    }
    Err(Error::MatrixFunction(format!(
        "Taylor expansion for a cluster of {len} eigenvalues did not converge \
         within {MAX_TAYLOR_TERMS} terms",
    )))
}
