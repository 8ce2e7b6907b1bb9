use critheat_core::duhamel::*;
use std::time::Instant;

fn main() {
    let spec = ForcingSpec::new(1.5, -1.0, 1.0, ForcingRegion::Inner, 20.0).unwrap();
    let t0 = Instant::now();
    let u = duhamel_eval(&spec, 10.0, 2.0e3).unwrap();
    eprintln!("inner x=10: u = {u:.6e}, wall {:?}", t0.elapsed());

    let spec2 = ForcingSpec::new(2.0, -1.0, 1.0, ForcingRegion::Outer, 10.0).unwrap();
    let t0 = Instant::now();
    let u2 = duhamel_eval(&spec2, 10.0 * (1.0e3_f64).sqrt(), 1.0e3).unwrap();
    eprintln!("outer x=10sqrt(t): u = {u2:.6e}, wall {:?}", t0.elapsed());
}
