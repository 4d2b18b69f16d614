//! Third-order tensors and the t-product algebra.
//!
//! A tensor `A` of shape `n1 x n2 x p` is a stack of `p` frontal slices
//! `A^(1), ..., A^(p)`, each an `n1 x n2` complex matrix. The t-product of
//! two tensors is defined through the block circulant of the slices:
//!
//! ```text
//! A * B = fold(bcirc(A) . unfold(B))
//! ```
//!
//! where `unfold` stacks the frontal slices vertically, `fold` is its
//! inverse, and `bcirc(A)` is the `n1 p x n2 p` block circulant matrix whose
//! block `(i, j)` is the slice `A^(((i - j) mod p) + 1)`. Equivalently each
//! frontal slice of `A * B` is a circular convolution of the slices of `A`
//! and `B` along the third axis, which is what the implementation computes.
//!
//! Storage is slice-major: slice `k` occupies one contiguous column-major
//! `n1 x n2` block, so a frontal slice converts to and from a dense matrix
//! without any striding.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{C64, CMat};

/// Relative tolerance used by [`Tensor3::cast_real`]: imaginary mass up to
/// this multiple of the Frobenius norm is considered round-off residue.
pub const REAL_CAST_RTOL: f64 = 1e-10;

/// Dense third-order complex tensor of shape `n1 x n2 x p`.
///
/// Entries are stored slice-major (all of slice `k` before slice `k + 1`)
/// and column-major within a slice: entry `(i, j, k)` lives at
/// `data[k * n1 * n2 + j * n1 + i]`, all indices 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n1: usize,
    n2: usize,
    p: usize,
    data: Vec<C64>,
}

impl Tensor3 {
    /// Creates the zero tensor of shape `n1 x n2 x p`.
    ///
    /// All dimensions must be positive.
    pub fn zeros(n1: usize, n2: usize, p: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 || p == 0 {
            return Err(Error::InvalidArgument(format!(
                "tensor dimensions must be positive, got {n1}x{n2}x{p}"
            )));
        }
        Ok(Tensor3 {
            n1,
            n2,
            p,
            data: vec![C64::new(0.0, 0.0); n1 * n2 * p],
        })
    }

    /// Builds a tensor by evaluating `f(i, j, k)` for every entry
    /// (0-based indices).
    pub fn from_fn(
        n1: usize,
        n2: usize,
        p: usize,
        mut f: impl FnMut(usize, usize, usize) -> C64,
    ) -> Result<Self> {
        let mut t = Tensor3::zeros(n1, n2, p)?;
        for k in 0..p {
            for j in 0..n2 {
                for i in 0..n1 {
                    t.data[k * n1 * n2 + j * n1 + i] = f(i, j, k);
                }
            }
        }
        Ok(t)
    }

    /// Builds a tensor from `p` frontal slices of identical shape.
    pub fn from_slices(slices: &[CMat]) -> Result<Self> {
        let p = slices.len();
        if p == 0 {
            return Err(Error::InvalidArgument(
                "at least one frontal slice is required".into(),
            ));
        }
        let (n1, n2) = slices[0].shape();
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (n1, n2) {
                return Err(Error::DimensionMismatch(format!(
                    "slice {} has shape {}x{}, expected {n1}x{n2}",
                    k + 1,
                    s.nrows(),
                    s.ncols()
                )));
            }
        }
        let mut t = Tensor3::zeros(n1, n2, p)?;
        for (k, s) in slices.iter().enumerate() {
            t.set_face(k, s)?;
        }
        Ok(t)
    }

    /// Random tensor with entries whose real and imaginary parts are drawn
    /// uniformly from `[-1, 1)`.
    pub fn random(n1: usize, n2: usize, p: usize, rng: &mut impl Rng) -> Result<Self> {
        Tensor3::from_fn(n1, n2, p, |_, _, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    /// Random tensor with real entries drawn uniformly from `[-1, 1)`.
    pub fn random_real(n1: usize, n2: usize, p: usize, rng: &mut impl Rng) -> Result<Self> {
        Tensor3::from_fn(n1, n2, p, |_, _, _| C64::new(rng.gen_range(-1.0..1.0), 0.0))
    }

    /// Number of rows of each frontal slice.
    pub fn n1(&self) -> usize {
        self.n1
    }

    /// Number of columns of each frontal slice.
    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Number of frontal slices.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Shape as `(n1, n2, p)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.p)
    }

    /// True if every frontal slice is square.
    pub fn has_square_faces(&self) -> bool {
        self.n1 == self.n2
    }

    /// Raw slice-major entry storage.
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    fn check_index(&self, i: usize, j: usize, k: usize) -> Result<usize> {
        if i >= self.n1 || j >= self.n2 || k >= self.p {
            return Err(Error::IndexOutOfRange(format!(
                "entry ({i}, {j}, {k}) of a {}x{}x{} tensor",
                self.n1, self.n2, self.p
            )));
        }
        Ok(k * self.n1 * self.n2 + j * self.n1 + i)
    }

    /// Entry `(i, j, k)`, 0-based.
    pub fn get(&self, i: usize, j: usize, k: usize) -> Result<C64> {
        Ok(self.data[self.check_index(i, j, k)?])
    }

    /// Sets entry `(i, j, k)`, 0-based.
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: C64) -> Result<()> {
        let idx = self.check_index(i, j, k)?;
        self.data[idx] = v;
        Ok(())
    }

    /// Frontal slice `k` (0-based) as a dense matrix.
    pub fn face(&self, k: usize) -> Result<CMat> {
        if k >= self.p {
            return Err(Error::IndexOutOfRange(format!(
                "frontal slice {k} of a tensor with {} slices",
                self.p
            )));
        }
        let start = k * self.n1 * self.n2;
        Ok(CMat::from_column_slice(
            self.n1,
            self.n2,
            &self.data[start..start + self.n1 * self.n2],
        ))
    }

    /// Overwrites frontal slice `k` (0-based).
    pub fn set_face(&mut self, k: usize, face: &CMat) -> Result<()> {
        if k >= self.p {
            return Err(Error::IndexOutOfRange(format!(
                "frontal slice {k} of a tensor with {} slices",
                self.p
            )));
        }
        if face.shape() != (self.n1, self.n2) {
            return Err(Error::DimensionMismatch(format!(
                "slice has shape {}x{}, expected {}x{}",
                face.nrows(),
                face.ncols(),
                self.n1,
                self.n2
            )));
        }
        let start = k * self.n1 * self.n2;
        self.data[start..start + self.n1 * self.n2].copy_from_slice(face.as_slice());
        Ok(())
    }

    /// The tube `(i, j, :)` as a length-`p` vector.
    pub fn tube(&self, i: usize, j: usize) -> Result<Vec<C64>> {
        if i >= self.n1 || j >= self.n2 {
            return Err(Error::IndexOutOfRange(format!(
                "tube ({i}, {j}) of a {}x{}x{} tensor",
                self.n1, self.n2, self.p
            )));
        }
        Ok((0..self.p)
            .map(|k| self.data[k * self.n1 * self.n2 + j * self.n1 + i])
            .collect())
    }

    /// Applies `f` entrywise, producing a new tensor.
    pub fn map(&self, f: impl Fn(C64) -> C64) -> Tensor3 {
        Tensor3 {
            n1: self.n1,
            n2: self.n2,
            p: self.p,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Scales every entry by `alpha`.
    pub fn scale(&self, alpha: C64) -> Tensor3 {
        self.map(|v| v * alpha)
    }

    /// Entrywise sum; shapes must match.
    pub fn add(&self, other: &Tensor3) -> Result<Tensor3> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Entrywise difference; shapes must match.
    pub fn sub(&self, other: &Tensor3) -> Result<Tensor3> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Tensor3, f: impl Fn(C64, C64) -> C64) -> Result<Tensor3> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "tensors of shape {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Tensor3 {
            n1: self.n1,
            n2: self.n2,
            p: self.p,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Frobenius norm (square root of the sum of squared entry magnitudes).
    pub fn norm_f(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest imaginary magnitude over all entries.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.im.abs()))
    }

    /// Drops round-off-level imaginary parts, keeping the real part of every
    /// entry. Fails if the largest imaginary magnitude exceeds
    /// `REAL_CAST_RTOL` times the Frobenius norm of the tensor, which would
    /// indicate genuinely complex data rather than residue.
    pub fn cast_real(&self) -> Result<Tensor3> {
        let imag_max = self.max_imag();
        let tol = REAL_CAST_RTOL * self.norm_f();
        if imag_max > tol {
            return Err(Error::RealCast { imag_max, tol });
        }
        Ok(self.map(|v| C64::new(v.re, 0.0)))
    }

    /// Stacks the frontal slices vertically into an `n1 p x n2` block vector
    /// (slice 1 on top).
    pub fn unfold(&self) -> BlockVector {
        let mut mat = CMat::zeros(self.n1 * self.p, self.n2);
        for k in 0..self.p {
            for j in 0..self.n2 {
                for i in 0..self.n1 {
                    mat[(k * self.n1 + i, j)] = self.data[k * self.n1 * self.n2 + j * self.n1 + i];
                }
            }
        }
        BlockVector {
            mat,
            block_rows: self.n1,
        }
    }

    /// The `n1 p x n2 p` block circulant matrix of the frontal slices:
    /// block `(i, j)` is slice `((i - j) mod p) + 1` (1-based slice labels).
    pub fn bcirc(&self) -> CMat {
        let (n1, n2, p) = self.shape();
        let mut m = CMat::zeros(n1 * p, n2 * p);
        for bj in 0..p {
            for bi in 0..p {
                let k = (bi + p - bj) % p;
                let base = k * n1 * n2;
                for j in 0..n2 {
                    for i in 0..n1 {
                        m[(bi * n1 + i, bj * n2 + j)] = self.data[base + j * n1 + i];
                    }
                }
            }
        }
        m
    }

    /// Tensor transpose: each frontal slice is conjugate-transposed and the
    /// order of slices `2..p` is reversed, so that
    /// `bcirc(A^H) = bcirc(A)^H`.
    pub fn t_transpose(&self) -> Tensor3 {
        let (n1, n2, p) = self.shape();
        let mut out = Tensor3 {
            n1: n2,
            n2: n1,
            p,
            data: vec![C64::new(0.0, 0.0); n1 * n2 * p],
        };
        for k in 0..p {
            let src = if k == 0 { 0 } else { p - k };
            let base_in = src * n1 * n2;
            let base_out = k * n1 * n2;
            for j in 0..n2 {
                for i in 0..n1 {
                    // entry (j, i) of the output slice = conj of entry (i, j).
                    out.data[base_out + i * n2 + j] = self.data[base_in + j * n1 + i].conj();
                }
            }
        }
        out
    }

    /// T-product `self * other`, defined as
    /// `fold(bcirc(self) . unfold(other))` and computed directly as the
    /// circular convolution of frontal slices along the third axis.
    pub fn t_product(&self, other: &Tensor3) -> Result<Tensor3> {
        if self.n2 != other.n1 || self.p != other.p {
            return Err(Error::DimensionMismatch(format!(
                "t-product of {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let p = self.p;
        let a_faces: Vec<CMat> = (0..p).map(|k| self.face(k).expect("in range")).collect();
        let b_faces: Vec<CMat> = (0..p).map(|k| other.face(k).expect("in range")).collect();
        let mut out = Tensor3::zeros(self.n1, other.n2, p)?;
        for k in 0..p {
            let mut acc = CMat::zeros(self.n1, other.n2);
            for j in 0..p {
                // slice labels satisfy c_k = sum_j a_j . b_{(k - j) mod p}
                acc += &a_faces[j] * &b_faces[(k + p - j) % p];
            }
            out.set_face(k, &acc)?;
        }
        Ok(out)
    }

    /// T-product power `self^j` for square-faced tensors, with
    /// `self^0` defined as the identity tensor.
    pub fn t_power(&self, j: usize) -> Result<Tensor3> {
        if !self.has_square_faces() {
            return Err(Error::DimensionMismatch(format!(
                "t-product power requires square frontal slices, got {}x{}",
                self.n1, self.n2
            )));
        }
        let mut acc = identity_tensor(self.n1, self.p)?;
        for _ in 0..j {
            acc = acc.t_product(self)?;
        }
        Ok(acc)
    }
}

/// Folds an `n1 p x n2` block vector back into an `n1 x n2 x p` tensor;
/// inverse of [`Tensor3::unfold`].
pub fn fold(v: &BlockVector) -> Tensor3 {
    let n1 = v.block_rows;
    let p = v.num_blocks();
    let n2 = v.mat.ncols();
    let mut t = Tensor3 {
        n1,
        n2,
        p,
        data: vec![C64::new(0.0, 0.0); n1 * n2 * p],
    };
    for k in 0..p {
        for j in 0..n2 {
            for i in 0..n1 {
                t.data[k * n1 * n2 + j * n1 + i] = v.mat[(k * n1 + i, j)];
            }
        }
    }
    t
}

/// Identity tensor `I` of shape `n x n x p`: first frontal slice the identity
/// matrix, all other slices zero. It is the two-sided unit of the t-product.
pub fn identity_tensor(n: usize, p: usize) -> Result<Tensor3> {
    let mut t = Tensor3::zeros(n, n, p)?;
    for i in 0..n {
        t.data[i * n + i] = C64::new(1.0, 0.0);
    }
    Ok(t)
}

/// Block unit vector `E_k` of shape `n p x n`: the `k`-th (1-based) block is
/// the `n x n` identity, all other blocks zero. `E_1` plays the role of the
/// first canonical block column, so `fold(f(bcirc(A)) . E_1)` extracts a
/// tensor from a block-circulant matrix function.
pub fn block_unit_vector(k: usize, n: usize, p: usize) -> Result<BlockVector> {
    if k == 0 || k > p {
        return Err(Error::IndexOutOfRange(format!(
            "block unit vector index {k} with {p} blocks (1-based)"
        )));
    }
    let mut mat = CMat::zeros(n * p, n);
    for i in 0..n {
        mat[((k - 1) * n + i, i)] = C64::new(1.0, 0.0);
    }
    Ok(BlockVector { mat, block_rows: n })
}

/// An f-diagonal tensor: `n x n x p` with every frontal slice diagonal,
/// stored as `n` tubes of length `p`. These play the role diagonal matrices
/// play for ordinary matrix algebra — the t-product eigendecomposition
/// factors a tensor as `X * D * X^-1` with `D` f-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct FDiagonalTensor {
    n: usize,
    p: usize,
    /// `tubes[i]` is the tube `(i, i, :)`.
    tubes: Vec<Vec<C64>>,
}

impl FDiagonalTensor {
    /// Zero f-diagonal tensor of shape `n x n x p`.
    pub fn zeros(n: usize, p: usize) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidArgument(format!(
                "f-diagonal dimensions must be positive, got {n}x{n}x{p}"
            )));
        }
        Ok(FDiagonalTensor {
            n,
            p,
            tubes: vec![vec![C64::new(0.0, 0.0); p]; n],
        })
    }

    /// Builds from explicit diagonal tubes; all tubes must share one length.
    pub fn from_tubes(tubes: Vec<Vec<C64>>) -> Result<Self> {
        let n = tubes.len();
        if n == 0 {
            return Err(Error::InvalidArgument("at least one tube is required".into()));
        }
        let p = tubes[0].len();
        if p == 0 {
            return Err(Error::InvalidArgument("tubes must be non-empty".into()));
        }
        for (i, t) in tubes.iter().enumerate() {
            if t.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "tube {i} has length {}, expected {p}",
                    t.len()
                )));
            }
        }
        Ok(FDiagonalTensor { n, p, tubes })
    }

    /// Extracts the f-diagonal structure of a tensor, failing if any
    /// off-diagonal entry is nonzero beyond `rtol * ||t||_F`.
    pub fn try_from_tensor3(t: &Tensor3, rtol: f64) -> Result<Self> {
        if !t.has_square_faces() {
            return Err(Error::DimensionMismatch(format!(
                "f-diagonal tensors have square slices, got {}x{}",
                t.n1, t.n2
            )));
        }
        let tol = rtol * t.norm_f();
        let n = t.n1;
        let mut fd = FDiagonalTensor::zeros(n, t.p)?;
        for k in 0..t.p {
            for j in 0..n {
                for i in 0..n {
                    let v = t.data[k * n * n + j * n + i];
                    if i == j {
                        fd.tubes[i][k] = v;
                    } else if v.norm() > tol {
                        return Err(Error::InvalidArgument(format!(
                            "entry ({i}, {j}, {k}) = {v} is off-diagonal and nonzero"
                        )));
                    }
                }
            }
        }
        Ok(fd)
    }

    /// Diagonal dimension `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of frontal slices.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Tube `(i, i, :)`.
    pub fn tube(&self, i: usize) -> Result<&[C64]> {
        self.tubes
            .get(i)
            .map(|t| t.as_slice())
            .ok_or_else(|| Error::IndexOutOfRange(format!("diagonal tube {i} of {}", self.n)))
    }

    /// Overwrites tube `(i, i, :)`.
    pub fn set_tube(&mut self, i: usize, tube: &[C64]) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange(format!(
                "diagonal tube {i} of {}",
                self.n
            )));
        }
        if tube.len() != self.p {
            return Err(Error::DimensionMismatch(format!(
                "tube of length {}, expected {}",
                tube.len(),
                self.p
            )));
        }
        self.tubes[i].copy_from_slice(tube);
        Ok(())
    }

    /// Expands to a dense [`Tensor3`] with diagonal frontal slices.
    pub fn to_tensor3(&self) -> Tensor3 {
        let (n, p) = (self.n, self.p);
        let mut t = Tensor3 {
            n1: n,
            n2: n,
            p,
            data: vec![C64::new(0.0, 0.0); n * n * p],
        };
        for i in 0..n {
            for k in 0..p {
                t.data[k * n * n + i * n + i] = self.tubes[i][k];
            }
        }
        t
    }
}

/// A block vector: an `n p x s` matrix understood as `p` stacked `n x s`
/// blocks. Produced by [`Tensor3::unfold`] and consumed by [`fold`], and the
/// working format of the block Krylov methods.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    /// The stacked matrix, `n p` rows by `s` columns.
    pub mat: CMat,
    /// Rows per block (`n`).
    pub block_rows: usize,
}

impl BlockVector {
    /// Wraps a matrix as a block vector with `block_rows` rows per block;
    /// the row count must be a multiple of `block_rows`.
    pub fn new(mat: CMat, block_rows: usize) -> Result<Self> {
        if block_rows == 0 || mat.nrows() % block_rows != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} rows do not divide into blocks of {block_rows}",
                mat.nrows()
            )));
        }
        Ok(BlockVector { mat, block_rows })
    }

    /// Number of stacked blocks.
    pub fn num_blocks(&self) -> usize {
        self.mat.nrows() / self.block_rows
    }

    /// Number of columns `s`.
    pub fn block_cols(&self) -> usize {
        self.mat.ncols()
    }

    /// Block `k` (0-based) as a dense `block_rows x s` matrix.
    pub fn block(&self, k: usize) -> Result<CMat> {
        if k >= self.num_blocks() {
            return Err(Error::IndexOutOfRange(format!(
                "block {k} of a block vector with {} blocks",
                self.num_blocks()
            )));
        }
        Ok(self
            .mat
            .rows(k * self.block_rows, self.block_rows)
            .into_owned())
    }

    /// Frobenius norm of the stacked matrix.
    pub fn norm_f(&self) -> f64 {
        self.mat.norm()
    }
}
