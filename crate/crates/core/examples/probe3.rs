use critheat_core::heat_tail::{polar_kernel, radial_kernel};
use std::time::Instant;

fn main() {
    // cost of the polar kernel after tabulation
    let t0 = Instant::now();
    let mut acc = 0.0;
    for i in 0..1_000_000 {
        acc += polar_kernel(0.001 * i as f64);
    }
    eprintln!("1e6 polar_kernel calls: {:?} (acc {acc:.3})", t0.elapsed());

    let t0 = Instant::now();
    let mut acc2 = 0.0;
    for i in 0..1_000_000 {
        let rho = 300.0 + 0.0001 * i as f64;
        acc2 += radial_kernel(316.0, rho, 1.0e-6);
    }
    eprintln!("1e6 radial_kernel calls: {:?} (acc {acc2:.3e})", t0.elapsed());
}
