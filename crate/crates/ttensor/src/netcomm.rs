//! Third-order network communicability and centrality.
//!
//! A collection of `p` undirected, unweighted graphs on `n` shared nodes —
//! the layers of a multilayer network or the snapshots of a temporal one —
//! forms an adjacency tensor whose frontal slices are the per-layer
//! adjacency matrices. The communicability of a node triple is the
//! corresponding entry of the tensor exponential, `exp(A)_{ijk}`, summing
//! walks between `i` and `j` weighted inversely by factorial length, with
//! the third index tracking the layer dimension through the t-product; the
//! centrality of node `i` is the diagonal entry `exp(A)_{iii}`.
//!
//! The exponential is computed once per network and shared by all entry
//! queries. Although every slice is symmetric, the block-circulant of the
//! tensor is not, so no symmetry in `(i, j)` is assumed anywhere; what is
//! checked instead is that entries of the exponential of a real tensor are
//! real up to round-off.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::tensor::Tensor3;
use crate::tfunc::{t_function_of, Backend};
use crate::matfun::ScalarFunction;

/// Interpretation of the third tensor dimension. Purely descriptive — the
/// algebra is identical — but part of a network's identity in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSemantics {
    /// Slices are simultaneous layers of one multilayer network.
    Multilayer,
    /// Slices are snapshots of one evolving network.
    Temporal,
}

impl LayerSemantics {
    /// Lower-case display name.
    pub fn name(self) -> &'static str {
        match self {
            LayerSemantics::Multilayer => "multilayer",
            LayerSemantics::Temporal => "temporal",
        }
    }
}

/// A validated third-order adjacency tensor: square slices, each symmetric
/// and binary with a zero diagonal.
#[derive(Debug, Clone)]
pub struct AdjacencyTensor {
    tensor: Tensor3,
    /// Interpretation of the slice dimension.
    pub semantics: LayerSemantics,
}

impl AdjacencyTensor {
    /// Validates and wraps a tensor. The error names the first offending
    /// entry as `(i, j, k)` in 1-based indices.
    pub fn new(tensor: Tensor3, semantics: LayerSemantics) -> Result<Self> {
        if !tensor.has_square_faces() {
            return Err(Error::InvalidAdjacency(format!(
                "adjacency slices must be square, got {}x{}",
                tensor.n1(),
                tensor.n2()
            )));
        }
        let n = tensor.n1();
        for k in 0..tensor.p() {
            for j in 0..n {
                for i in 0..n {
                    let v = tensor.get(i, j, k)?;
                    if v.im != 0.0 || (v.re != 0.0 && v.re != 1.0) {
                        return Err(Error::InvalidAdjacency(format!(
                            "entry ({}, {}, {}) is {}, expected 0 or 1",
                            i + 1,
                            j + 1,
                            k + 1,
                            v
                        )));
                    }
                    if i == j && v.re != 0.0 {
                        return Err(Error::InvalidAdjacency(format!(
                            "diagonal entry ({}, {}, {}) is {}, a node cannot link to itself",
                            i + 1,
                            j + 1,
                            k + 1,
                            v.re
                        )));
                    }
                    if tensor.get(j, i, k)? != v {
                        return Err(Error::InvalidAdjacency(format!(
                            "entry ({}, {}, {}) breaks slice symmetry",
                            i + 1,
                            j + 1,
                            k + 1
                        )));
                    }
                }
            }
        }
        Ok(AdjacencyTensor { tensor, semantics })
    }

    /// The underlying tensor.
    pub fn tensor(&self) -> &Tensor3 {
        &self.tensor
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.tensor.n1()
    }

    /// Number of slices (layers or snapshots).
    pub fn p(&self) -> usize {
        self.tensor.p()
    }

    /// Number of edges summed over slices.
    pub fn edge_count(&self) -> usize {
        let mut count = 0;
        for k in 0..self.p() {
            for j in 0..self.n() {
                for i in 0..j {
                    if self.tensor.get(i, j, k).unwrap().re != 0.0 {
                        count += 1;
                    }
                }
            }
        }
        count
    }
}

/// The tensor exponential of a network, computed once and queried for
/// communicabilities and centralities. Entries are validated to be real on
/// construction and stored as a real tensor.
#[derive(Debug, Clone)]
pub struct NetworkExponential {
    exp: Tensor3,
}

impl NetworkExponential {
    /// Evaluates `exp(A)` with the chosen backend and casts it to real.
    pub fn compute(a: &AdjacencyTensor, backend: Backend) -> Result<Self> {
        let exp = t_function_of(&ScalarFunction::Exp, a.tensor(), backend)?.cast_real()?;
        Ok(NetworkExponential { exp })
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.exp.n1()
    }

    /// Number of slices.
    pub fn p(&self) -> usize {
        self.exp.p()
    }

    /// Communicability of the triple: `exp(A)_{ijk}`, 0-based indices.
    pub fn communicability(&self, i: usize, j: usize, k: usize) -> Result<f64> {
        Ok(self.exp.get(i, j, k)?.re)
    }

    /// Centrality of node `i`: `exp(A)_{iii}`. Requires the node index to
    /// be valid in the slice dimension too (`i < p`), as the diagonal runs
    /// through all three modes.
    pub fn centrality(&self, i: usize) -> Result<f64> {
        Ok(self.exp.get(i, i, i)?.re)
    }

    /// Centralities of all nodes `0 .. min(n, p)`.
    pub fn centralities(&self) -> Vec<f64> {
        (0..self.n().min(self.p()))
            .map(|i| self.exp.get(i, i, i).unwrap().re)
            .collect()
    }

    /// Nodes ranked by descending centrality; exact ties keep ascending
    /// node order, so the ranking is deterministic.
    pub fn ranking(&self) -> Vec<(usize, f64)> {
        let mut r: Vec<(usize, f64)> = self.centralities().into_iter().enumerate().collect();
        r.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        r
    }
}

/// Communicability `exp(A)_{ijk}` of one triple (0-based). For repeated
/// queries on one network, compute a [`NetworkExponential`] instead.
pub fn communicability(
    a: &AdjacencyTensor,
    i: usize,
    j: usize,
    k: usize,
    backend: Backend,
) -> Result<f64> {
    NetworkExponential::compute(a, backend)?.communicability(i, j, k)
}

/// Centrality `exp(A)_{iii}` of one node (0-based). For repeated queries
/// on one network, compute a [`NetworkExponential`] instead.
pub fn centrality(a: &AdjacencyTensor, i: usize, backend: Backend) -> Result<f64> {
    NetworkExponential::compute(a, backend)?.centrality(i)
}

/// A seeded random network tensor: each slice an independent
/// Erdős–Rényi-style symmetric binary matrix with zero diagonal and edge
/// probability `density`. Deterministic in `(n, p, density, seed)`: edges
/// are drawn slice by slice, upper triangle in column order.
pub fn random_network_tensor(
    n: usize,
    p: usize,
    density: f64,
    seed: u64,
) -> Result<AdjacencyTensor> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "a network needs at least 2 nodes, got {n}"
        )));
    }
    if !(0.0..1.0).contains(&density) || density <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "density must lie in (0, 1), got {density}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let one = C64::new(1.0, 0.0);
    let mut t = Tensor3::zeros(n, n, p)?;
    for k in 0..p {
        for j in 0..n {
            for i in 0..j {
                if rng.gen::<f64>() < density {
                    t.set(i, j, k, one)?;
                    t.set(j, i, k, one)?;
                }
            }
        }
    }
    AdjacencyTensor::new(t, LayerSemantics::Multilayer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::expm;
    use crate::tensor::identity_tensor;

    fn toy_network() -> AdjacencyTensor {
        // 3 nodes, 2 slices: a path 1-2-3 in slice 1, edge 1-3 in slice 2.
        let mut t = Tensor3::zeros(3, 3, 2).unwrap();
        let one = C64::new(1.0, 0.0);
        for &(i, j, k) in &[(0usize, 1usize, 0usize), (1, 2, 0), (0, 2, 1)] {
            t.set(i, j, k, one).unwrap();
            t.set(j, i, k, one).unwrap();
        }
        AdjacencyTensor::new(t, LayerSemantics::Multilayer).unwrap()
    }

    #[test]
    fn zero_network_has_identity_exponential() {
        let t = Tensor3::zeros(4, 4, 3).unwrap();
        let a = AdjacencyTensor::new(t, LayerSemantics::Multilayer).unwrap();
        let e = NetworkExponential::compute(&a, Backend::Dense).unwrap();
        // exp(O) = identity tensor: the first-slice diagonal is all ones,
        // every other entry zero.
        for i in 0..4 {
            for j in 0..4 {
                let c = e.communicability(i, j, 0).unwrap();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((c - expected).abs() < 1e-12);
                for k in 1..3 {
                    assert!(e.communicability(i, j, k).unwrap().abs() < 1e-12);
                }
            }
        }
        // The triple-diagonal entries: (1,1,1) sits on the identity's
        // first-slice diagonal; deeper slices of the identity are zero.
        let cents = e.centralities();
        assert_eq!(cents.len(), 3); // min(n, p)
        assert!((cents[0] - 1.0).abs() < 1e-12);
        for &c in &cents[1..] {
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn single_slice_matches_matrix_communicability() {
        let mut t = Tensor3::zeros(3, 3, 1).unwrap();
        let one = C64::new(1.0, 0.0);
        for &(i, j) in &[(0usize, 1usize), (1, 2)] {
            t.set(i, j, 0, one).unwrap();
            t.set(j, i, 0, one).unwrap();
        }
        let a = AdjacencyTensor::new(t.clone(), LayerSemantics::Multilayer).unwrap();
        let e = NetworkExponential::compute(&a, Backend::Dense).unwrap();
        let em = expm(&t.face(0).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let c = e.communicability(i, j, 0).unwrap();
                assert!((c - em[(i, j)].re).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn toy_network_matches_dense_oracle_entry() {
        let a = toy_network();
        let e = NetworkExponential::compute(&a, Backend::Facewise).unwrap();
        // Dense oracle: exp of the materialized block-circulant applied to
        // the identity's unfolding, folded back.
        let big = a.tensor().bcirc();
        let eb = expm(&big).unwrap();
        let id = identity_tensor(3, 2).unwrap();
        let folded = eb * &id.unfold().mat;
        for k in 0..2 {
            for j in 0..3 {
                for i in 0..3 {
                    let c = e.communicability(i, j, k).unwrap();
                    assert!((c - folded[(k * 3 + i, j)].re).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn centrality_ranking_is_deterministic_and_real() {
        let a = toy_network();
        let e = NetworkExponential::compute(&a, Backend::Dense).unwrap();
        let r = e.ranking();
        assert_eq!(r.len(), 2); // min(n, p) diagonal entries exist
        assert!(r[0].1 >= r[1].1);
        for (_, v) in r {
            assert!(v.is_finite());
        }
    }

    #[test]
    fn validation_rejects_asymmetry_self_loops_and_weights() {
        let one = C64::new(1.0, 0.0);
        let mut asym = Tensor3::zeros(3, 3, 1).unwrap();
        asym.set(0, 1, 0, one).unwrap();
        let err = AdjacencyTensor::new(asym, LayerSemantics::Multilayer).unwrap_err();
        assert!(matches!(err, Error::InvalidAdjacency(ref m) if m.contains("symmetry")));

        let mut diag = Tensor3::zeros(3, 3, 1).unwrap();
        diag.set(1, 1, 0, one).unwrap();
        let err = AdjacencyTensor::new(diag, LayerSemantics::Multilayer).unwrap_err();
        assert!(matches!(err, Error::InvalidAdjacency(ref m) if m.contains("(2, 2, 1)")));

        let mut weighted = Tensor3::zeros(3, 3, 1).unwrap();
        weighted.set(0, 1, 0, C64::new(0.5, 0.0)).unwrap();
        weighted.set(1, 0, 0, C64::new(0.5, 0.0)).unwrap();
        let err = AdjacencyTensor::new(weighted, LayerSemantics::Multilayer).unwrap_err();
        assert!(matches!(err, Error::InvalidAdjacency(ref m) if m.contains("expected 0 or 1")));
    }

    #[test]
    fn random_network_is_valid_and_reproducible() {
        for seed in 0..25u64 {
            let a = random_network_tensor(8, 3, 0.3, seed).unwrap();
            // Construction validated the invariants; spot-check determinism.
            let b = random_network_tensor(8, 3, 0.3, seed).unwrap();
            assert_eq!(a.tensor(), b.tensor());
            assert!(a.edge_count() > 0 || seed % 5 == 0); // density 0.3 on 84 pairs
        }
        let a = random_network_tensor(8, 3, 0.3, 1).unwrap();
        let c = random_network_tensor(8, 3, 0.3, 2).unwrap();
        assert_ne!(a.tensor(), c.tensor());
    }

    #[test]
    fn random_network_bcirc_has_block_circulant_pattern() {
        let n = 10;
        let p = 4;
        let a = random_network_tensor(n, p, 0.2, 7).unwrap();
        let big = a.tensor().bcirc();
        // Block (bi, bj) must equal slice (bi - bj) mod p.
        for bi in 0..p {
            for bj in 0..p {
                let k = (bi + p - bj) % p;
                let face = a.tensor().face(k).unwrap();
                for j in 0..n {
                    for i in 0..n {
                        assert_eq!(big[(bi * n + i, bj * n + j)], face[(i, j)]);
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_generator_arguments_are_rejected() {
        assert!(random_network_tensor(1, 2, 0.5, 0).is_err());
        assert!(random_network_tensor(4, 2, 0.0, 0).is_err());
        assert!(random_network_tensor(4, 2, 1.0, 0).is_err());
    }
}
