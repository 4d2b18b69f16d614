use ttensor::{CMat, C64};
use ttensor::linalg::schur;
use std::time::Instant;

fn main() {
    for n in [250usize, 500, 750] {
        // block upper Hessenberg with s = 50 subdiagonal band, like the
        // classical-scheme Hessenbergs of the restart cycles
        let s = 50usize;
        let mut h = CMat::zeros(n, n);
        let mut state = 88172645463325252u64;
        let mut next = || {
            state ^= state << 13; state ^= state >> 7; state ^= state << 17;
            (state as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        for j in 0..n {
            for i in 0..(j + s + 1).min(n) {
                h[(i, j)] = C64::new(next(), next());
            }
        }
        let start = Instant::now();
        let (q, t) = schur(&h).expect("schur");
        let elapsed = start.elapsed().as_secs_f64();
        let resid = (&q * &t * q.adjoint() - &h).norm() / h.norm();
        println!("n={n}: {elapsed:.2}s residual {resid:.2e}");
    }
}
