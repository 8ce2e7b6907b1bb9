//! Radial method-of-lines solver for u_t = Delta u + |u|u in six dimensions.
//!
//! The discretization is a finite-volume form of the radial Laplacian in
//! the r^5-weighted measure (symmetric, M-matrix), stepped by first-order
//! splitting: the nonlinearity explicit, the diffusion by backward Euler.
//! Step sizes adapt through step-doubling. On top of the raw solver sit
//! the glued-ansatz assembly, a residual probe, and the short-horizon
//! oscillation demo that checks the modulation law
//! d(log lambda)/dt = (5/4) b(t) against the full nonlinear flow.
//!
//! The core lambda^-2 Q(x/lambda) carries one linearly unstable mode (the
//! ground-state eigenvalue of the linearization is positive), with rate
//! e0 / lambda^2. Any long run must start close to the stable manifold,
//! so the demo can optionally remove the discrete unstable component from
//! its initial data; the horizon is then sized in e-folds of that rate.

use crate::error::{CoreError, Result};
use crate::grid::{sim_grid, RadialProfile};
use crate::heat_tail::{theta_at, theta_origin_scaled, PiecewiseRadialDatum};
use crate::profiles::{eval_cutoff, eval_q};
use crate::scaling_dynamics::ScaledBTable;
use std::f64::consts::PI;

/// Configuration of a single run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// uniform spacing near the origin (about lambda/50 for core runs)
    pub grid_h0: f64,
    /// geometric growth rate of the outer grid (halved by refinement)
    pub grid_growth: f64,
    pub r_max: f64,
    pub t_start: f64,
    pub horizon: f64,
    pub dt_init: f64,
    /// relative step-doubling tolerance
    pub dt_rel_tol: f64,
    /// cutoff exponent in (0, 1/2)
    pub kappa: f64,
    /// inner-zone scale R (zones r < R lambda)
    pub inner_scale: f64,
    /// grid refinement factor (2 halves both h0 and growth)
    pub refine: u32,
    /// false disables |u|u (pure heat)
    pub nonlinear: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa < 0.5) {
            return Err(CoreError::Config(format!(
                "kappa must lie in (0, 1/2), got {}",
                self.kappa
            )));
        }
        if !(self.t_start >= 0.0 && self.horizon > 0.0) {
            return Err(CoreError::Config("need t_start >= 0 and horizon > 0".into()));
        }
        if !(self.dt_rel_tol > 0.0 && self.dt_init > 0.0) {
            return Err(CoreError::Config("time-step controls must be positive".into()));
        }
        let needed = 20.0 * (self.t_start + self.horizon).sqrt();
        if self.r_max < needed {
            return Err(CoreError::Config(format!(
                "r_max = {:.3e} too small: the outer Dirichlet boundary must sit at \
                 >= 20 sqrt(t_end) = {needed:.3e}",
                self.r_max
            )));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Vec<f64>> {
        sim_grid(self.grid_h0, self.grid_growth, self.r_max, self.refine)
    }
}

/// Discrete radial heat operator on a graded grid (Dirichlet at the last
/// node, zero-flux regularity at the origin).
pub struct RadialHeat {
    grid: Vec<f64>,
    /// face conductances r_{i+1/2}^5 / (r_{i+1} - r_i), one per interior face
    face_w: Vec<f64>,
    /// exact cell volumes int r^5 dr over the dual cells
    vol: Vec<f64>,
    pub nonlinear: bool,
}

impl RadialHeat {
    pub fn new(grid: Vec<f64>, nonlinear: bool) -> Result<Self> {
        if grid.len() < 16 || grid[0] != 0.0 {
            return Err(CoreError::Config("operator grid must start at 0 with >= 16 nodes".into()));
        }
        let n = grid.len();
        let mut face_w = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let rf = 0.5 * (grid[i] + grid[i + 1]);
            face_w.push(rf.powi(5) / (grid[i + 1] - grid[i]));
        }
        let mut vol = Vec::with_capacity(n);
        for i in 0..n {
            let lo = if i == 0 { 0.0 } else { 0.5 * (grid[i - 1] + grid[i]) };
            let hi = if i == n - 1 { grid[n - 1] } else { 0.5 * (grid[i] + grid[i + 1]) };
            vol.push((hi.powi(6) - lo.powi(6)) / 6.0);
        }
        Ok(Self { grid, face_w, vol, nonlinear })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Finite-volume Laplacian; the last node is Dirichlet and reports 0.
    pub fn laplacian_apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let mut out = vec![0.0; n];
        for i in 0..n - 1 {
            let flux_r = self.face_w[i] * (u[i + 1] - u[i]);
            let flux_l = if i == 0 { 0.0 } else { self.face_w[i - 1] * (u[i] - u[i - 1]) };
            out[i] = (flux_r - flux_l) / self.vol[i];
        }
        out
    }

    fn reaction(&self, u: f64) -> f64 {
        if self.nonlinear {
            u.abs() * u
        } else {
            0.0
        }
    }

    /// One splitting step: explicit reaction, then backward-Euler diffusion.
    pub fn split_step(&self, u: &[f64], dt: f64) -> Vec<f64> {
        let n = self.grid.len();
        let mut rhs: Vec<f64> = (0..n).map(|i| u[i] + dt * self.reaction(u[i])).collect();
        rhs[n - 1] = 0.0;
        // Thomas solve of (I - dt L) u' = rhs with Dirichlet last row
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = 1.0 + dt * self.face_w[0] / self.vol[0];
        c[0] = -dt * self.face_w[0] / self.vol[0] / denom;
        d[0] = rhs[0] / denom;
        for i in 1..n - 1 {
            let wl = self.face_w[i - 1];
            let wr = self.face_w[i];
            let a_i = -dt * wl / self.vol[i];
            let b_i = 1.0 + dt * (wl + wr) / self.vol[i];
            let c_i = -dt * wr / self.vol[i];
            denom = b_i - a_i * c[i - 1];
            c[i] = c_i / denom;
            d[i] = (rhs[i] - a_i * d[i - 1]) / denom;
        }
        // Dirichlet: u'(r_max) = 0
        let mut out = vec![0.0; n];
        out[n - 1] = 0.0;
        for i in (0..n - 1).rev() {
            out[i] = d[i] - c[i] * out[i + 1];
        }
        out
    }

    /// Discrete energy (1/2) |grad u|^2 - (1/3) |u|^3 in the full 6D
    /// measure (the angular factor |S^5| = pi^3 included).
    pub fn energy(&self, u: &[f64]) -> f64 {
        let n = self.grid.len();
        let mut grad = 0.0;
        for i in 0..n - 1 {
            let h = self.grid[i + 1] - self.grid[i];
            let rf = 0.5 * (self.grid[i] + self.grid[i + 1]);
            let du = (u[i + 1] - u[i]) / h;
            grad += rf.powi(5) * du * du * h;
        }
        let mut pot = 0.0;
        for i in 0..n {
            pot += self.vol[i] * u[i].abs().powi(3);
        }
        PI.powi(3) * (0.5 * grad - pot / 3.0)
    }

    /// V-weighted inner product.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.vol).map(|((x, y), v)| x * y * v).sum()
    }

    /// Leading (most unstable) eigenpair of the linearization
    /// v -> Lap v + 2 |core| v with Dirichlet at r_max: returns the growth
    /// rate and the V-normalized mode. Bisection on the symmetric form plus
    /// inverse iteration.
    pub fn unstable_mode(&self, core: &[f64]) -> Result<(f64, Vec<f64>)> {
        let n = self.grid.len() - 1; // interior nodes 0..n (last is Dirichlet)
        // symmetric form: A_ij = S^{-1} (-Lap - 2|core|) S, S = diag(sqrt V)
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for i in 0..n {
            let wl = if i == 0 { 0.0 } else { self.face_w[i - 1] };
            let wr = self.face_w[i];
            diag[i] = (wl + wr) / self.vol[i] - 2.0 * core[i].abs();
        }
        for i in 0..n - 1 {
            off[i] = -self.face_w[i] / (self.vol[i] * self.vol[i + 1]).sqrt();
        }
        let mu = tridiag_smallest_eigenvalue(&diag, &off);
        let w = tridiag_inverse_iteration(&diag, &off, mu)?;
        // back to u-coordinates, V-normalized
        let mut v: Vec<f64> = (0..self.grid.len())
            .map(|i| if i < n { w[i] / self.vol[i].sqrt() } else { 0.0 })
            .collect();
        let norm = self.inner(&v, &v).sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
        Ok((-mu, v))
    }
}

fn tridiag_smallest_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let spread = match (i > 0, i + 1 < n) {
            (true, true) => off[i - 1].abs() + off[i].abs(),
            (true, false) => off[i - 1].abs(),
            (false, true) => off[i].abs(),
            (false, false) => 0.0,
        };
        lo = lo.min(diag[i] - spread);
        hi = hi.max(diag[i] + spread);
    }
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut d = diag[0] - x;
        if d < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let denom = if d.abs() < 1e-300 { 1e-300_f64.copysign(d) } else { d };
            d = diag[i] - x - off[i - 1] * off[i - 1] / denom;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(mid) > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 * hi.abs().max(1e-14) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn tridiag_inverse_iteration(diag: &[f64], off: &[f64], mu: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    let shift = mu - 1e-10 * (1.0 + mu.abs());
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i * 37 % 101) as f64 / 101.0)).collect();
    for _ in 0..50 {
        // Thomas solve (A - shift) w = v
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = diag[0] - shift;
        if denom.abs() < 1e-300 {
            denom = 1e-300;
        }
        c[0] = if n > 1 { off[0] / denom } else { 0.0 };
        d[0] = v[0] / denom;
        for i in 1..n {
            let m = diag[i] - shift - off[i - 1] * c[i - 1];
            let m = if m.abs() < 1e-300 { 1e-300_f64.copysign(m) } else { m };
            if i < n - 1 {
                c[i] = off[i] / m;
            }
            d[i] = (v[i] - off[i - 1] * d[i - 1]) / m;
        }
        let mut w = vec![0.0; n];
        w[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            w[i] = d[i] - c[i] * w[i + 1];
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(CoreError::Numeric("inverse iteration for the unstable mode failed".into()));
        }
        for x in w.iter_mut() {
            *x /= norm;
        }
        // residual
        let mut res: f64 = 0.0;
        for i in 0..n {
            let mut aw = (diag[i] - mu) * w[i];
            if i > 0 {
                aw += off[i - 1] * w[i - 1];
            }
            if i + 1 < n {
                aw += off[i] * w[i + 1];
            }
            res = res.max(aw.abs());
        }
        v = w;
        if res < 1e-10 * (1.0 + mu.abs()) {
            return Ok(v);
        }
    }
    Ok(v)
}

/// Instantaneous solver state.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u: Vec<f64>,
    pub dt: f64,
    pub accepted: usize,
    pub rejected: usize,
}

/// Diagnostics recorded per accepted step.
#[derive(Debug, Clone, Copy)]
pub struct RunRecord {
    pub t: f64,
    pub u0: f64,
    pub lambda_est: f64,
    pub energy: f64,
    pub dt: f64,
}

/// Full run output.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub records: Vec<RunRecord>,
    pub final_state: SimState,
    pub dt_min: f64,
    pub dt_max: f64,
}

/// Blow-up guard factor: a run halts once sup|u| exceeds this multiple of
/// the initial sup (the equation genuinely admits finite-time blow-up).
pub const BLOWUP_FACTOR: f64 = 1e6;

/// Estimate the core scale from the center value (Q(0) = 1).
pub fn extract_lambda(u0: f64) -> Result<f64> {
    if !(u0 > 0.0) {
        return Err(CoreError::Numeric(format!(
            "center value {u0:.3e} is not positive: profile is no longer ground-state-like"
        )));
    }
    Ok(u0.powf(-0.5))
}

/// One adaptive step (step-doubling control). Returns the error estimate
/// of the accepted step; `state.dt` is updated for the next call.
pub fn step(op: &RadialHeat, state: &mut SimState, rel_tol: f64, guard_sup: f64) -> Result<f64> {
    let scale = state.u.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    loop {
        let dt = state.dt;
        let full = op.split_step(&state.u, dt);
        let half = op.split_step(&op.split_step(&state.u, 0.5 * dt), 0.5 * dt);
        let mut err: f64 = 0.0;
        for (a, b) in full.iter().zip(half.iter()) {
            err = err.max((a - b).abs());
        }
        let rel = err / scale;
        if rel > rel_tol && dt > 1e-14 * (1.0 + state.t) {
            state.dt *= 0.5;
            state.rejected += 1;
            continue;
        }
        let sup = half.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if sup > guard_sup {
            return Err(CoreError::BlowUp { t: state.t + dt, guard: guard_sup });
        }
        state.u = half;
        state.t += dt;
        state.accepted += 1;
        if rel < 0.25 * rel_tol {
            state.dt *= 1.4;
        }
        return Ok(err);
    }
}

/// Run from `initial` over the configured horizon, recording diagnostics
/// at every accepted step.
pub fn run(cfg: &SimConfig, op: &RadialHeat, initial: Vec<f64>) -> Result<RunTrace> {
    cfg.validate()?;
    if initial.len() != op.len() {
        return Err(CoreError::Config(format!(
            "initial data has {} samples for a grid of {}",
            initial.len(),
            op.len()
        )));
    }
    let sup0 = initial.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(sup0 > 0.0) {
        return Err(CoreError::Config("initial data is identically zero".into()));
    }
    let guard = BLOWUP_FACTOR * sup0;
    let t_end = cfg.t_start + cfg.horizon;
    let mut state = SimState {
        t: cfg.t_start,
        u: initial,
        dt: cfg.dt_init,
        accepted: 0,
        rejected: 0,
    };
    let mut records = Vec::new();
    let mut dt_min = f64::INFINITY;
    let mut dt_max = 0.0_f64;
    records.push(RunRecord {
        t: state.t,
        u0: state.u[0],
        lambda_est: extract_lambda(state.u[0]).unwrap_or(f64::NAN),
        energy: op.energy(&state.u),
        dt: state.dt,
    });
    while state.t < t_end {
        state.dt = state.dt.min(t_end - state.t);
        let dt_used = state.dt;
        step(op, &mut state, cfg.dt_rel_tol, guard)?;
        dt_min = dt_min.min(dt_used);
        dt_max = dt_max.max(dt_used);
        records.push(RunRecord {
            t: state.t,
            u0: state.u[0],
            lambda_est: extract_lambda(state.u[0]).unwrap_or(f64::NAN),
            energy: op.energy(&state.u),
            dt: dt_used,
        });
        if state.accepted > 5_000_000 {
            return Err(CoreError::Numeric("run exceeded its step budget".into()));
        }
    }
    Ok(RunTrace { records, final_state: state, dt_min, dt_max })
}

/// Sup-norm residual of the flow, by zone: inner |x| < R lambda,
/// intermediate, outer |x| > sqrt t (the Dirichlet boundary itself is
/// excluded). `u_prev` held equal to `u` probes stationarity.
pub fn residual_zones(
    op: &RadialHeat,
    u: &[f64],
    u_prev: &[f64],
    dt: f64,
    r_inner: f64,
    r_outer: f64,
) -> (f64, f64, f64) {
    let lap = op.laplacian_apply(u);
    let n = op.len();
    let mut zones = (0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..n - 1 {
        let r = op.grid()[i];
        let res = ((u[i] - u_prev[i]) / dt - lap[i] - op.reaction(u[i])).abs();
        if r < r_inner {
            zones.0 = zones.0.max(res);
        } else if r <= r_outer {
            zones.1 = zones.1.max(res);
        } else if r < 0.9 * op.grid()[n - 1] {
            zones.2 = zones.2.max(res);
        }
    }
    zones
}

/// Glued initial profile: rescaled core + matching term + outer tail,
/// u = lambda^-2 Q(r/lambda) chi1 + (5b/4) T1(r/lambda) chi1 + theta (1-chi1)
/// with chi1 = chi(r / (lambda^kappa (sqrt t)^(1-kappa))).
#[allow(clippy::too_many_arguments)]
pub fn assemble_ansatz(
    grid: &[f64],
    lambda: f64,
    b: f64,
    t1: &RadialProfile,
    theta: Option<&RadialProfile>,
    kappa: f64,
    t: f64,
) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(CoreError::Config(format!("lambda must be positive, got {lambda}")));
    }
    if !(kappa > 0.0 && kappa < 0.5) {
        return Err(CoreError::Config(format!("kappa must lie in (0, 1/2), got {kappa}")));
    }
    let seam = lambda.powf(kappa) * t.sqrt().powf(1.0 - kappa);
    let mut u = Vec::with_capacity(grid.len());
    for &r in grid {
        let c1 = eval_cutoff(r / seam);
        let mut v = 0.0;
        if c1 > 0.0 {
            let y = r / lambda;
            v += (eval_q(y)? / (lambda * lambda) + 1.25 * b * t1.eval(y)) * c1;
        }
        if c1 < 1.0 {
            let th = match theta {
                Some(p) => {
                    if !p.covers(r) && r > p.r_max() {
                        return Err(CoreError::Range(format!(
                            "outer profile reaches r = {:.3e} but the grid needs {r:.3e}",
                            p.r_max()
                        )));
                    }
                    p.eval(r)
                }
                None => 0.0,
            };
            v += th * (1.0 - c1);
        }
        u.push(v);
    }
    Ok(u)
}

// ---------------------------------------------------------------------------
// oscillation demo
// ---------------------------------------------------------------------------

/// Parameters of the short-horizon modulation-trend run.
#[derive(Debug, Clone)]
pub struct DemoConfig {
    pub beta: f64,
    /// radius schedule of the alternating datum
    pub window_radii: Vec<f64>,
    /// which sign window to run in (1-based)
    pub window_j: usize,
    /// start position within the window, as a fraction of its log-sqrt-t span
    pub start_frac: f64,
    /// seam position in core units y = r/lambda (sets lambda from t)
    pub seam_y: f64,
    /// horizon measured in e-folds of the unstable rate e0/lambda^2
    pub horizon_efolds: f64,
    /// fraction of the horizon discarded before trend counting
    pub settle_frac: f64,
    pub kappa: f64,
    pub dt_rel_tol: f64,
    /// remove the discrete unstable component from the initial data
    pub project_unstable: bool,
    pub refine: u32,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            beta: 0.75,
            window_radii: vec![100.0, 1.0e5, 1.0e8, 1.0e12],
            window_j: 1,
            start_frac: 0.25,
            seam_y: 45.0,
            horizon_efolds: 1.5,
            settle_frac: 0.15,
            kappa: 0.25,
            dt_rel_tol: 1e-8,
            project_unstable: true,
            refine: 1,
        }
    }
}

/// Outcome of the trend run.
#[derive(Debug, Clone)]
pub struct DemoReport {
    pub t_start: f64,
    pub horizon: f64,
    pub lambda0: f64,
    pub unstable_rate: f64,
    /// steps counted after the settling period
    pub counted_steps: usize,
    /// of which this many matched sign(d log lambda) = sign((5/4) b)
    pub agreeing_steps: usize,
    pub agreement: f64,
    pub d_log_lambda: f64,
    /// integral of (5/4) b dt over the counted span
    pub predicted_d_log_lambda: f64,
    /// sign of b across the window
    pub expected_sign: f64,
    /// center value of the linear control run at the end
    pub control_u0: Option<f64>,
    /// pure-heat quadrature of the same initial data at the end
    pub control_quadrature: Option<f64>,
}

/// Run the full nonlinear flow from the glued ansatz inside one sign
/// window and compare the drift of log lambda_est against the modulation
/// law. Optionally repeats the run with the nonlinearity disabled and
/// checks the center value against kernel quadrature of the same data.
pub fn oscillation_demo(
    demo: &DemoConfig,
    t1: &RadialProfile,
    with_control: bool,
) -> Result<DemoReport> {
    let datum = PiecewiseRadialDatum::alternating(demo.beta, &demo.window_radii)?;
    let window = crate::heat_tail::window_of(&datum, demo.window_j)?;
    let ls = window.lo + (window.hi - window.lo) * demo.start_frac;
    let t0 = (2.0 * ls).exp();
    if !t0.is_finite() {
        return Err(CoreError::Config(format!(
            "window {} opens beyond floating range (log t = {:.1})",
            demo.window_j,
            2.0 * ls
        )));
    }
    let lambda0 = t0.sqrt() / demo.seam_y.powf(1.0 / (1.0 - demo.kappa));
    let seam = lambda0.powf(demo.kappa) * t0.sqrt().powf(1.0 - demo.kappa);

    // horizon from the unstable rate, clipped to the window
    let e0_over_l2 = 0.2817 / (lambda0 * lambda0); // refined below from the grid
    let mut horizon = demo.horizon_efolds / e0_over_l2;
    let t_window_end = (2.0 * window.hi).exp();
    horizon = horizon.min(0.9 * (t_window_end - t0));

    let cfg = SimConfig {
        grid_h0: lambda0 / 50.0,
        grid_growth: 0.02,
        r_max: 20.0 * (t0 + horizon).sqrt(),
        t_start: t0,
        horizon,
        dt_init: 0.02 / e0_over_l2 / 50.0,
        dt_rel_tol: demo.dt_rel_tol,
        kappa: demo.kappa,
        inner_scale: demo.seam_y,
        refine: demo.refine,
        nonlinear: true,
    };
    cfg.validate()?;
    let grid = cfg.build_grid()?;
    let op = RadialHeat::new(grid.clone(), true)?;

    // outer tail profile at t0 (needed beyond the seam only)
    let b_table = ScaledBTable::from_datum(&datum, (t0 * 0.99).ln(), (t0 + horizon).ln() + 0.01, 17)?;
    let b0 = b_table.eval(t0.ln())? / t0;
    let mut theta_vals = Vec::with_capacity(grid.len());
    for &r in &grid {
        if r > 0.5 * seam {
            theta_vals.push(theta_at(&datum, r, t0)?.value);
        } else {
            theta_vals.push(0.0);
        }
    }
    let theta_profile = RadialProfile::new(grid.clone(), theta_vals)?;
    let mut u0 = assemble_ansatz(&grid, lambda0, b0, t1, Some(&theta_profile), demo.kappa, t0)?;
    u0[grid.len() - 1] = 0.0;

    // measure the true discrete unstable rate and optionally project the
    // mode out of the initial perturbation
    let core: Vec<f64> =
        grid.iter().map(|&r| eval_q(r / lambda0).unwrap() / (lambda0 * lambda0)).collect();
    let (rate, mode) = op.unstable_mode(&core)?;
    if demo.project_unstable {
        let pert: Vec<f64> = u0.iter().zip(&core).map(|(a, b)| a - b).collect();
        let coef = op.inner(&pert, &mode);
        for (ui, mi) in u0.iter_mut().zip(&mode) {
            *ui -= coef * mi;
        }
    }

    let trace = run(&cfg, &op, u0.clone())?;

    // trend statistics after settling
    let t_settle = t0 + demo.settle_frac * horizon;
    let mut counted = 0usize;
    let mut agreeing = 0usize;
    let mut first_counted: Option<&RunRecord> = None;
    let mut prev: Option<&RunRecord> = None;
    for rec in &trace.records {
        if let Some(p) = prev {
            if rec.t > t_settle {
                let d = rec.lambda_est.ln() - p.lambda_est.ln();
                let b_here = b_table.eval(rec.t.ln())? / rec.t;
                counted += 1;
                if d.signum() == (1.25 * b_here).signum() {
                    agreeing += 1;
                }
                if first_counted.is_none() {
                    first_counted = Some(p);
                }
            }
        }
        prev = Some(rec);
    }
    let last = trace.records.last().unwrap();
    let first = first_counted.unwrap_or(&trace.records[0]);
    let d_log_lambda = last.lambda_est.ln() - first.lambda_est.ln();
    // predicted drift: integral of (5/4) b dt = (5/4) int [t b] d log t
    let mut predicted = 0.0;
    let n_pred = 200;
    for k in 0..n_pred {
        let tau0 = first.t.ln() + (last.t.ln() - first.t.ln()) * k as f64 / n_pred as f64;
        let tau1 = first.t.ln() + (last.t.ln() - first.t.ln()) * (k + 1) as f64 / n_pred as f64;
        let mid = 0.5 * (tau0 + tau1);
        predicted += 1.25 * b_table.eval(mid)? * (tau1 - tau0);
    }
    let expected_sign = if demo.window_j % 2 == 1 { -1.0 } else { 1.0 };

    let (control_u0, control_quadrature) = if with_control {
        let op_lin = RadialHeat::new(grid.clone(), false)?;
        let trace_lin = run(&cfg, &op_lin, u0.clone())?;
        let profile0 = RadialProfile::new(grid.clone(), u0)?;
        let datum0 = crate::heat_tail::ProfileDatum { profile: &profile0 };
        let quad = theta_origin_scaled(&datum0, (t0 + horizon).ln()).value;
        (Some(trace_lin.final_state.u[0]), Some(quad))
    } else {
        (None, None)
    };

    Ok(DemoReport {
        t_start: t0,
        horizon,
        lambda0,
        unstable_rate: rate,
        counted_steps: counted,
        agreeing_steps: agreeing,
        agreement: if counted > 0 { agreeing as f64 / counted as f64 } else { 0.0 },
        d_log_lambda,
        predicted_d_log_lambda: predicted,
        expected_sign,
        control_u0,
        control_quadrature,
    })
}
