use critheat_core::duhamel::*;
use std::time::Instant;

fn main() {
    let spec = ForcingSpec::new(2.0, -1.0, 1.0, ForcingRegion::Outer, 10.0).unwrap();
    let t: f64 = 1.0e3;
    let x = 10.0 * t.sqrt();
    // probe across the v bands used by the near half and the sigma half
    for &v in &[500.0, 100.0, 1.0, 1e-3, 1e-6, 1e-9, 1e-12, 1e-15] {
        let s = t - v;
        let t0 = Instant::now();
        let g = smoothed_forcing(&spec, x, s, v);
        eprintln!("v = {v:.1e}: g = {g:.6e}, wall {:?}", t0.elapsed());
    }
    for &s in &[10.5, 20.0, 100.0, 400.0] {
        let t0 = Instant::now();
        let g = smoothed_forcing(&spec, x, s, t - s);
        eprintln!("s = {s:.1e}: g = {g:.6e}, wall {:?}", t0.elapsed());
    }
}
