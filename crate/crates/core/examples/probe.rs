use critheat_core::heat_tail::{build_theta0, RadialDatum};
use critheat_core::pde_sim::*;

fn main() {
    let datum = build_theta0(0.75).unwrap();
    let cfg = SimConfig {
        grid_h0: 0.01,
        grid_growth: 0.01,
        r_max: 80.0,
        t_start: 0.0,
        horizon: 4.0,
        dt_init: 5e-5,
        dt_rel_tol: 3e-7,
        kappa: 0.25,
        inner_scale: 10.0,
        refine: 1,
        nonlinear: false,
    };
    let grid = cfg.build_grid().unwrap();
    eprintln!("nodes: {}", grid.len());
    let op = RadialHeat::new(grid.clone(), false).unwrap();
    let mut u0: Vec<f64> = grid.iter().map(|&r| datum.eval(r)).collect();
    let n = u0.len();
    u0[n - 1] = 0.0;
    let mut state = SimState { t: 0.0, u: u0, dt: cfg.dt_init, accepted: 0, rejected: 0 };
    let guard = 1e6 * 0.135;
    let t0 = std::time::Instant::now();
    while state.t < 4.0 && state.accepted < 20000 {
        state.dt = state.dt.min(4.0 - state.t);
        step(&op, &mut state, cfg.dt_rel_tol, guard).unwrap();
        if state.accepted % 1000 == 0 {
            eprintln!(
                "acc {} rej {} t {:.6e} dt {:.3e} wall {:?}",
                state.accepted,
                state.rejected,
                state.t,
                state.dt,
                t0.elapsed()
            );
        }
    }
    eprintln!("final acc {} rej {} t {:.6e} wall {:?}", state.accepted, state.rejected, state.t, t0.elapsed());
}
