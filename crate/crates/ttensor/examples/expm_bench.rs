use ttensor::{CMat, C64};
use ttensor::matfun::expm;
use std::time::Instant;

fn main() {
    for n in [250usize, 500, 750] {
        let mut state = 88172645463325252u64;
        let mut next = || {
            state ^= state << 13; state ^= state >> 7; state ^= state << 17;
            (state as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        // scale like a restart Hessenberg of the network experiment: one-norm ~10
        let h = CMat::from_fn(n, n, |i, j| {
            if i <= j + 50 { C64::new(next(), next()) * C64::new(10.0 / n as f64, 0.0) } else { C64::new(0.0, 0.0) }
        });
        let start = Instant::now();
        let e = expm(&h).expect("expm");
        println!("n={n}: {:.2}s (norm {:.2e})", start.elapsed().as_secs_f64(), e.norm());
    }
}
