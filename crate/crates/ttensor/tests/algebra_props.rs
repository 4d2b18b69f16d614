//! Property tests of the t-product algebra: the block-circulant lemma
//! (unfolding, adjoint, product homomorphism, powers, product transpose),
//! fold/unfold round trips, linearity, and the identity laws.

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use ttensor::tensor::{block_unit_vector, fold, identity_tensor, Tensor3};
use ttensor::CMat;

/// Strategy over complex entries with unit-scale real and imaginary parts.
fn entry() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im))
}

/// Strategy over tensors with the given shape.
fn tensor_with(n1: usize, n2: usize, p: usize) -> impl Strategy<Value = Tensor3> {
    prop::collection::vec(entry(), n1 * n2 * p).prop_map(move |vals| {
        let mut it = vals.into_iter();
        Tensor3::from_fn(n1, n2, p, |_, _, _| it.next().expect("sized above")).expect("valid dims")
    })
}

/// Strategy over small tensors of arbitrary shape.
fn tensor() -> impl Strategy<Value = Tensor3> {
    (1usize..=4, 1usize..=4, 1usize..=4)
        .prop_flat_map(|(n1, n2, p)| tensor_with(n1, n2, p))
}

/// Strategy over square-faced tensors.
fn square_tensor() -> impl Strategy<Value = Tensor3> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(n, p)| tensor_with(n, n, p))
}

/// Strategy over conformal t-product pairs: `(m x n x p, n x s x p)`.
fn conformal_pair() -> impl Strategy<Value = (Tensor3, Tensor3)> {
    (1usize..=3, 1usize..=3, 1usize..=3, 1usize..=3)
        .prop_flat_map(|(m, n, s, p)| (tensor_with(m, n, p), tensor_with(n, s, p)))
}

fn rel_err(x: &CMat, y: &CMat) -> f64 {
    (x - y).norm() / y.norm().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// fold is the exact inverse of unfold, bit for bit.
    #[test]
    fn fold_unfold_round_trip_is_bitwise(a in tensor()) {
        prop_assert_eq!(&fold(&a.unfold()), &a);
    }

    /// The first block column of the block circulant stacks the slices:
    /// bcirc(A) . E_1 = unfold(A), exactly.
    #[test]
    fn bcirc_times_e1_is_unfold(a in tensor()) {
        let e1 = block_unit_vector(1, a.n2(), a.p()).unwrap();
        let lhs = a.bcirc() * &e1.mat;
        prop_assert_eq!(lhs, a.unfold().mat);
    }

    /// bcirc commutes with the t-transpose: bcirc(A^*) = bcirc(A)^*,
    /// exactly (conjugation and slice reversal are bit-exact).
    #[test]
    fn bcirc_of_t_transpose_is_adjoint(a in tensor()) {
        prop_assert_eq!(a.t_transpose().bcirc(), a.bcirc().adjoint());
    }

    /// bcirc is a homomorphism of products:
    /// bcirc(A * B) = bcirc(A) . bcirc(B).
    #[test]
    fn bcirc_is_product_homomorphism((a, b) in conformal_pair()) {
        let lhs = a.t_product(&b).unwrap().bcirc();
        let rhs = a.bcirc() * b.bcirc();
        let bound = 1e-13 * a.bcirc().norm() * b.bcirc().norm();
        prop_assert!((&lhs - &rhs).norm() <= bound.max(1e-14),
            "homomorphism defect {} above {}", (&lhs - &rhs).norm(), bound);
    }

    /// Powers pass through bcirc: bcirc(A)^j = bcirc(A^j), j = 0..3,
    /// with A^0 the identity tensor.
    #[test]
    fn bcirc_of_powers_matches_matrix_powers(a in square_tensor()) {
        let ba = a.bcirc();
        let mut bj = CMat::identity(ba.nrows(), ba.ncols());
        for j in 0..=3usize {
            let aj = a.t_power(j).unwrap().bcirc();
            prop_assert!(rel_err(&bj, &aj) <= 1e-12,
                "power {} disagrees by {}", j, rel_err(&bj, &aj));
            bj = &bj * &ba;
        }
    }

    /// The t-transpose reverses products: (A * B)^* = B^* * A^*.
    #[test]
    fn t_transpose_reverses_products((a, b) in conformal_pair()) {
        let lhs = a.t_product(&b).unwrap().t_transpose();
        let rhs = b.t_transpose().t_product(&a.t_transpose()).unwrap();
        let defect = lhs.sub(&rhs).unwrap().norm_f();
        prop_assert!(defect <= 1e-13 * rhs.norm_f().max(1.0),
            "product transpose defect {}", defect);
    }

    /// The t-transpose is an involution, bit for bit.
    #[test]
    fn t_transpose_is_involution(a in tensor()) {
        prop_assert_eq!(&a.t_transpose().t_transpose(), &a);
    }

    /// fold, unfold, and bcirc are linear, exactly: each combines the
    /// same scalar products entry by entry on both sides.
    #[test]
    fn unfold_and_bcirc_are_linear(
        (a, b) in (1usize..=3, 1usize..=3, 1usize..=3)
            .prop_flat_map(|(n1, n2, p)| (tensor_with(n1, n2, p), tensor_with(n1, n2, p))),
        alpha in entry(),
        beta in entry(),
    ) {
        let combo = a.scale(alpha).add(&b.scale(beta)).unwrap();
        let unf = {
            let mut m = a.unfold().mat * alpha;
            m += b.unfold().mat * beta;
            m
        };
        prop_assert_eq!(combo.unfold().mat, unf);
        let bc = a.bcirc() * alpha + b.bcirc() * beta;
        prop_assert_eq!(combo.bcirc(), bc);
    }

    /// The identity tensor is a two-sided unit of the t-product.
    #[test]
    fn identity_tensor_is_two_sided_unit(a in square_tensor()) {
        let id = identity_tensor(a.n1(), a.p()).unwrap();
        let left = id.t_product(&a).unwrap();
        let right = a.t_product(&id).unwrap();
        let tol = 1e-14 * (1.0 + a.norm_f());
        prop_assert!(left.sub(&a).unwrap().norm_f() <= tol);
        prop_assert!(right.sub(&a).unwrap().norm_f() <= tol);
    }

    /// bcirc of the identity tensor is the identity matrix; its unfolding
    /// is E_1.
    #[test]
    fn identity_tensor_structure((n, p) in (1usize..=5, 1usize..=5)) {
        let id = identity_tensor(n, p).unwrap();
        prop_assert_eq!(id.bcirc(), CMat::identity(n * p, n * p));
        let e1 = block_unit_vector(1, n, p).unwrap();
        prop_assert_eq!(id.unfold().mat, e1.mat);
    }

    /// Shifted block unit vectors pick out circularly shifted slices:
    /// bcirc(A) . E_k = unfold of A with slices rotated by k - 1.
    #[test]
    fn bcirc_times_ek_is_shifted_unfold(
        a in tensor(),
        k in 1usize..=4,
    ) {
        let p = a.p();
        let k = (k - 1) % p + 1;
        let ek = block_unit_vector(k, a.n2(), p).unwrap();
        let lhs = a.bcirc() * &ek.mat;
        // Row block i of the product is slice ((i - (k-1)) mod p) + 1.
        let shifted = Tensor3::from_fn(a.n1(), a.n2(), p, |i, j, s| {
            a.get(i, j, (s + p - (k - 1)) % p).unwrap()
        })
        .unwrap();
        prop_assert_eq!(lhs, shifted.unfold().mat);
    }
}

/// The slice-reversal convention of the t-transpose, pinned on a concrete
/// 4-slice example: slice 1 stays, slices 2..p reverse.
#[test]
fn t_transpose_slice_convention() {
    let a = Tensor3::from_fn(2, 3, 4, |i, j, k| {
        C64::new((100 * (k + 1) + 10 * (i + 1) + (j + 1)) as f64, 1.0)
    })
    .unwrap();
    let at = a.t_transpose();
    assert_eq!(at.shape(), (3, 2, 4));
    // slice 1 of the transpose is the conjugate transpose of slice 1.
    assert_eq!(at.get(2, 1, 0).unwrap(), C64::new(123.0, -1.0));
    // slice k >= 2 of the transpose comes from slice p + 2 - k.
    assert_eq!(at.get(0, 0, 1).unwrap(), C64::new(411.0, -1.0));
    assert_eq!(at.get(0, 0, 2).unwrap(), C64::new(311.0, -1.0));
    assert_eq!(at.get(0, 0, 3).unwrap(), C64::new(211.0, -1.0));
}

/// With p = 1 every t-operation collapses to its matrix counterpart.
#[test]
fn p_equals_one_collapses_to_matrices() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
    let a = Tensor3::random(3, 3, 1, &mut rng).unwrap();
    let b = Tensor3::random(3, 3, 1, &mut rng).unwrap();
    let prod = a.t_product(&b).unwrap();
    let dense = a.face(0).unwrap() * b.face(0).unwrap();
    assert!((prod.face(0).unwrap() - dense).norm() <= 1e-14);
    assert_eq!(a.t_transpose().face(0).unwrap(), a.face(0).unwrap().adjoint());
    assert_eq!(a.bcirc(), a.face(0).unwrap());
}
