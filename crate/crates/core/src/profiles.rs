//! Closed-form and quadrature-built radial profiles.
//!
//! Everything here is specialized to six space dimensions, where the
//! critical nonlinearity is |u|u and the ground state is
//! Q(r) = (1 + r^2/24)^-2. The linearization is H = Delta + V with
//! V = 2Q; its radial kernel is spanned by LambdaQ = (2 + r d/dr)Q,
//! and Gamma denotes the second (singular) solution of H g = 0,
//! normalized so the Wronskian r^5 (LambdaQ Gamma' - Gamma LambdaQ')
//! equals +1. T1 is the bounded solution of H T1 + LambdaQ = 0 built
//! from the pair by variation of parameters; it tends to 4/5.

use crate::error::{CoreError, Result};
use crate::grid::{geometric_grid, RadialProfile};
use crate::quad::gauss16;

/// Fixed dimensional data of the critical problem.
///
/// Only n = 6 is supported; the constructor rejects anything else so the
/// closed forms below can never be applied out of context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundStateKit {
    dimension: u32,
}

impl GroundStateKit {
    pub fn new(dimension: u32) -> Result<Self> {
        if dimension != 6 {
            return Err(CoreError::Config(format!(
                "only dimension 6 is supported, got {dimension}"
            )));
        }
        Ok(Self { dimension })
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    /// Critical exponent p = (n+2)/(n-2) = 2.
    pub fn exponent(&self) -> f64 {
        2.0
    }
}

impl Default for GroundStateKit {
    fn default() -> Self {
        Self { dimension: 6 }
    }
}

/// Ground state Q(r) = (1 + r^2/24)^-2.
pub fn eval_q(r: f64) -> Result<f64> {
    check_radius(r)?;
    let u = 1.0 + r * r / 24.0;
    Ok(1.0 / (u * u))
}

/// dQ/dr = -(r/6)(1 + r^2/24)^-3.
pub fn eval_q_deriv(r: f64) -> Result<f64> {
    check_radius(r)?;
    let u = 1.0 + r * r / 24.0;
    Ok(-(r / 6.0) / (u * u * u))
}

/// Potential of the linearized operator, V(r) = p Q^{p-1} = 2 Q(r).
pub fn eval_v(r: f64) -> Result<f64> {
    Ok(2.0 * eval_q(r)?)
}

/// Scaling generator applied to Q: LambdaQ(r) = 2 (1 - r^2/24)(1 + r^2/24)^-3.
pub fn eval_lambda_q(r: f64) -> Result<f64> {
    check_radius(r)?;
    let u = r * r / 24.0;
    let d = 1.0 + u;
    Ok(2.0 * (1.0 - u) / (d * d * d))
}

/// d(LambdaQ)/dr = -(r/3)(2 - r^2/24)(1 + r^2/24)^-4.
pub fn eval_lambda_q_deriv(r: f64) -> Result<f64> {
    check_radius(r)?;
    let u = r * r / 24.0;
    let d = 1.0 + u;
    Ok(-(r / 3.0) * (2.0 - u) / (d * d * d * d))
}

fn check_radius(r: f64) -> Result<()> {
    if r < 0.0 || !r.is_finite() {
        return Err(CoreError::Domain(format!("radius must be finite and >= 0, got {r}")));
    }
    Ok(())
}

/// Smooth cutoff: 1 on [0,1], 0 on [2,inf), exponential-bump blend between.
///
/// chi(s) = phi(2-s) / (phi(2-s) + phi(s-1)) with phi(t) = exp(-1/t) for
/// t > 0 and 0 otherwise, so all derivatives vanish at both plateau edges.
pub fn eval_cutoff(s: f64) -> f64 {
    if s <= 1.0 {
        return 1.0;
    }
    if s >= 2.0 {
        return 0.0;
    }
    let a = bump(2.0 - s);
    let b = bump(s - 1.0);
    a / (a + b)
}

fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Asymptotic plateau value of Gamma: -(2n/(n-2)) (n(n-2))^{-n/2} = -1/4608.
pub const GAMMA_INFINITY: f64 = -1.0 / 4608.0;

/// Limit of T1 at infinity.
pub const T1_INFINITY: f64 = 0.8;

/// The homogeneous pair (LambdaQ, Gamma) and the T1 profile built on a
/// shared geometric grid.
#[derive(Debug, Clone)]
pub struct ProfileSet {
    pub gamma: RadialProfile,
    pub t1: RadialProfile,
    /// Wronskian r^5 (LambdaQ Gamma' - Gamma LambdaQ') measured at the
    /// reference node after normalization; equals 1 up to solver error.
    pub wronskian: f64,
}

/// Number of nodes in the default profile grid.
pub const PROFILE_NODES: usize = 2048;
const PROFILE_R_MIN: f64 = 1e-3;

/// Build Gamma by backward integration of H g = 0 from `r_max`, seeded with
/// the tail expansion Gamma = c0 (1 + 288/r^2), Gamma' = -576 c0 / r^3,
/// then rescaled so the Wronskian is exactly +1 at the reference node.
///
/// The ODE is integrated in s = log r (the grid is geometric, so nodes are
/// equally spaced in s), where it reads g_ss + 4 g_s + 2 Q e^{2s} g = 0.
/// Backward in s the singular branch r^-4 is the growing one, so the sweep
/// is numerically stable all the way down to r_min = 1e-3.
pub fn build_gamma(r_max: f64, tol: f64) -> Result<RadialProfile> {
    if r_max < 100.0 {
        return Err(CoreError::Config(format!("r_max must be >= 100, got {r_max}")));
    }
    if !(tol > 0.0) {
        return Err(CoreError::Config("tolerance must be positive".into()));
    }
    let grid = geometric_grid(PROFILE_R_MIN, r_max, PROFILE_NODES)?;
    let n = grid.len();
    let ds = (grid[1] / grid[0]).ln();

    // state [g, dg/ds] at the top node
    let c0 = GAMMA_INFINITY;
    let mut g = c0 * (1.0 + 288.0 / (r_max * r_max));
    let mut gs = -576.0 * c0 / (r_max * r_max);
    let mut vals = vec![0.0; n];
    let mut ders = vec![0.0; n];
    vals[n - 1] = g;
    ders[n - 1] = gs / r_max;

    // RK4 sub-steps per cell, backward in s
    let sub = 8usize;
    let h = -ds / sub as f64;
    let rhs = |s: f64, y: [f64; 2]| -> [f64; 2] {
        let r = s.exp();
        let q = eval_q(r).unwrap();
        [y[1], -4.0 * y[1] - 2.0 * q * r * r * y[0]]
    };
    let mut s = r_max.ln();
    for i in (0..n - 1).rev() {
        for _ in 0..sub {
            let y = [g, gs];
            let k1 = rhs(s, y);
            let k2 = rhs(s + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = rhs(s + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = rhs(s + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            g += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            gs += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            s += h;
        }
        vals[i] = g;
        ders[i] = gs / grid[i];
    }

    // normalize: Wronskian at the node closest to r = 1 becomes exactly +1
    let iref = grid.partition_point(|&r| r < 1.0).min(n - 1);
    let w_ref = wronskian_at(grid[iref], vals[iref], ders[iref])?;
    if !w_ref.is_finite() || w_ref.abs() < 1e-12 {
        return Err(CoreError::Numeric(format!(
            "degenerate Wronskian {w_ref:.3e} at r = {:.3e}",
            grid[iref]
        )));
    }
    for (v, d) in vals.iter_mut().zip(ders.iter_mut()) {
        *v /= w_ref;
        *d /= w_ref;
    }

    // integration quality: the normalized Wronskian must be constant
    let mut drift: f64 = 0.0;
    for (i, &r) in grid.iter().enumerate() {
        if r < 0.1 || r > 0.5 * r_max {
            continue;
        }
        let w = wronskian_at(r, vals[i], ders[i])?;
        drift = drift.max((w - 1.0).abs());
    }
    if drift > tol.max(1e-9) {
        return Err(CoreError::Numeric(format!(
            "Wronskian drift {drift:.3e} exceeds tolerance {tol:.3e} over [0.1, r_max/2]"
        )));
    }

    RadialProfile::with_derivatives(grid, vals, ders)
}

/// Wronskian r^5 (LambdaQ g' - g LambdaQ') for a candidate second solution.
pub fn wronskian_at(r: f64, g: f64, g_deriv: f64) -> Result<f64> {
    let lq = eval_lambda_q(r)?;
    let lqp = eval_lambda_q_deriv(r)?;
    Ok(r.powi(5) * (lq * g_deriv - g * lqp))
}

/// Build T1 from a normalized Gamma by variation of parameters:
/// T1 = -Gamma * A + LambdaQ * B with A = int_0^r (LambdaQ)^2 s^5 ds and
/// B = int_0^r Gamma LambdaQ s^5 ds. Derivatives come for free since the
/// quadrature terms cancel. `T1(r_max) ~ 4/5` is checked and a mismatch is
/// reported as a configuration error: it means the supplied Gamma carries
/// the wrong Wronskian sign and should be flipped.
pub fn build_t1(gamma: &RadialProfile, r_max: f64, tol: f64) -> Result<RadialProfile> {
    if r_max < 100.0 {
        return Err(CoreError::Config(format!("r_max must be >= 100, got {r_max}")));
    }
    if gamma.r_max() < r_max * (1.0 - 1e-12) {
        return Err(CoreError::Range(format!(
            "Gamma profile reaches {:.3e} but r_max = {r_max:.3e}",
            gamma.r_max()
        )));
    }
    let grid: Vec<f64> = gamma
        .grid()
        .iter()
        .copied()
        .filter(|&r| r <= r_max * (1.0 + 1e-12))
        .collect();
    let n = grid.len();
    let r0 = grid[0];

    // Accumulate A and B cell by cell. Below the first node, LambdaQ is
    // closed-form and Gamma is taken on its singular branch
    // Gamma(s) ~ Gamma(r0) (r0/s)^4, accurate to O(r0^4) relative.
    let mut a = gauss16(0.0, r0, |s| {
        let lq = eval_lambda_q(s).unwrap();
        lq * lq * s.powi(5)
    });
    let g0 = gamma.eval(r0) * r0.powi(4);
    let mut b = gauss16(0.0, r0, |s| g0 * eval_lambda_q(s).unwrap() * s);

    let mut vals = vec![0.0; n];
    let mut ders = vec![0.0; n];
    let push = |i: usize, a: f64, b: f64, vals: &mut Vec<f64>, ders: &mut Vec<f64>| {
        let r = grid[i];
        let lq = eval_lambda_q(r).unwrap();
        let lqp = eval_lambda_q_deriv(r).unwrap();
        let g = gamma.eval(r);
        let gp = gamma.eval_deriv(r);
        vals[i] = -g * a + lq * b;
        ders[i] = -gp * a + lqp * b;
    };
    push(0, a, b, &mut vals, &mut ders);
    for i in 1..n {
        a += gauss16(grid[i - 1], grid[i], |s| {
            let lq = eval_lambda_q(s).unwrap();
            lq * lq * s.powi(5)
        });
        b += gauss16(grid[i - 1], grid[i], |s| {
            gamma.eval(s) * eval_lambda_q(s).unwrap() * s.powi(5)
        });
        push(i, a, b, &mut vals, &mut ders);
    }

    let tail = vals[n - 1];
    if (tail - T1_INFINITY).abs() > 0.05 {
        return Err(CoreError::Config(format!(
            "T1(r_max) = {tail:.6} is far from 4/5: Gamma appears to carry the wrong \
             Wronskian normalization; flip its sign and rebuild"
        )));
    }
    let _ = tol;
    RadialProfile::with_derivatives(grid, vals, ders)
}

/// Build the full profile set (Gamma, T1) on the default grid.
pub fn build_profile_set(r_max: f64, tol: f64) -> Result<ProfileSet> {
    let gamma = build_gamma(r_max, tol)?;
    let t1 = build_t1(&gamma, r_max, tol)?;
    let iref = gamma.grid().partition_point(|&r| r < 1.0);
    let wronskian = wronskian_at(
        gamma.grid()[iref],
        gamma.values()[iref],
        gamma.derivs().unwrap()[iref],
    )?;
    Ok(ProfileSet { gamma, t1, wronskian })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::apply_h;

    #[test]
    fn q_closed_form_values() {
        assert_eq!(eval_q(0.0).unwrap(), 1.0);
        let r = 24.0_f64.sqrt();
        assert!((eval_q(r).unwrap() - 0.25).abs() < 1e-15);
        assert!(eval_q(-1.0).is_err());
    }

    #[test]
    fn q_tail_power() {
        // r^4 Q -> 576
        let r: f64 = 1.0e4;
        let v = r.powi(4) * eval_q(r).unwrap();
        assert!((v - 576.0).abs() / 576.0 < 0.01, "r^4 Q = {v}");
    }

    #[test]
    fn lambda_q_closed_form_values() {
        assert_eq!(eval_lambda_q(0.0).unwrap(), 2.0);
        let r = 24.0_f64.sqrt();
        assert!(eval_lambda_q(r).unwrap().abs() < 1e-15);
        assert!(eval_lambda_q(-0.5).is_err());
    }

    #[test]
    fn lambda_q_tail_power() {
        // r^4 LambdaQ -> -1152
        let r: f64 = 1.0e4;
        let v = r.powi(4) * eval_lambda_q(r).unwrap();
        assert!((v + 1152.0).abs() / 1152.0 < 0.01, "r^4 LambdaQ = {v}");
    }

    #[test]
    fn v_equals_twice_q_pointwise() {
        for i in 0..200 {
            let r = 0.05 * i as f64;
            assert_eq!(eval_v(r).unwrap(), 2.0 * eval_q(r).unwrap());
        }
    }

    #[test]
    fn derivative_formulas_match_finite_differences() {
        let h = 1e-5;
        for &r in &[0.3, 1.0, 4.9, 24.0_f64.sqrt(), 11.0] {
            let fd_q = (eval_q(r + h).unwrap() - eval_q(r - h).unwrap()) / (2.0 * h);
            assert!((fd_q - eval_q_deriv(r).unwrap()).abs() < 1e-9);
            let fd_l = (eval_lambda_q(r + h).unwrap() - eval_lambda_q(r - h).unwrap()) / (2.0 * h);
            assert!((fd_l - eval_lambda_q_deriv(r).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn cutoff_plateaus_and_midpoint() {
        assert_eq!(eval_cutoff(0.5), 1.0);
        assert_eq!(eval_cutoff(3.0), 0.0);
        assert!((eval_cutoff(1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cutoff_monotone_and_flat_at_edges() {
        let mut prev = 1.0;
        for i in 0..=400 {
            let s = 0.005 * i as f64;
            let c = eval_cutoff(s);
            assert!(c <= prev + 1e-15, "not monotone at s = {s}");
            if s > 1.0 && s < 2.0 {
                assert!((0.0..=1.0).contains(&c));
            }
            // strictly interior once the bump is representable
            if (1.05..=1.95).contains(&s) {
                assert!(c > 0.0 && c < 1.0, "chi({s}) = {c}");
            }
            prev = c;
        }
        // first two derivatives vanish at the plateau edges
        let h = 1e-3;
        for &s in &[1.0, 2.0] {
            let d1 = (eval_cutoff(s + h) - eval_cutoff(s - h)) / (2.0 * h);
            let d2 = (eval_cutoff(s + h) - 2.0 * eval_cutoff(s) + eval_cutoff(s - h)) / (h * h);
            assert!(d1.abs() < 1e-8, "chi'({s}) = {d1:.3e}");
            assert!(d2.abs() < 1e-8, "chi''({s}) = {d2:.3e}");
        }
    }

    #[test]
    fn kit_rejects_other_dimensions() {
        assert!(GroundStateKit::new(5).is_err());
        assert!(GroundStateKit::new(7).is_err());
        let kit = GroundStateKit::new(6).unwrap();
        assert_eq!(kit.exponent(), 2.0);
    }

    #[test]
    fn gamma_plateau_and_wronskian() {
        let gamma = build_gamma(2.0e4, 1e-8).unwrap();
        // plateau value at r = 1e4 within 0.1%
        let v = gamma.eval(1.0e4);
        assert!(
            (v - GAMMA_INFINITY).abs() / GAMMA_INFINITY.abs() < 1e-3,
            "Gamma(1e4) = {v:.8e}"
        );
        // Wronskian at r = 1 and r = 50 agree to 1e-6 relative
        let w1 = wronskian_at(1.0, gamma.eval(1.0), gamma.eval_deriv(1.0)).unwrap();
        let w50 = wronskian_at(50.0, gamma.eval(50.0), gamma.eval_deriv(50.0)).unwrap();
        assert!((w1 - w50).abs() / w1.abs() < 1e-6, "w1 = {w1}, w50 = {w50}");
        assert!((w1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gamma_solves_the_ode() {
        // Gamma is singular at the origin, so the finite-difference oracle
        // judges H Gamma against the local cancellation scale.
        let gamma = build_gamma(400.0, 1e-8).unwrap();
        for &r in &[0.5, 1.0, 2.0, 5.0, 11.0, 40.0, 150.0] {
            let (res, scale) = crate::stencil::apply_h_with_scale(|x| gamma.eval(x), r);
            assert!(
                res.abs() <= 5e-5 * scale,
                "residual {res:.3e} vs scale {scale:.3e} at r = {r}"
            );
        }
    }

    #[test]
    fn t1_limit_and_derivative_decay() {
        let set = build_profile_set(2.0e4, 1e-8).unwrap();
        let t1 = &set.t1;
        // T1(1e3) -> 4/5 within 1e-4
        let v = t1.eval(1.0e3);
        assert!((v - 0.8).abs() < 1e-4, "T1(1e3) = {v:.8}");
        // |r^3 T1'| < 1e3 over [10, 1e3]
        for i in 0..40 {
            let r = 10.0 * (1.0e2_f64).powf(i as f64 / 39.0);
            let d = t1.eval_deriv(r) * r.powi(3);
            assert!(d.abs() < 1.0e3, "r^3 T1' = {d:.3} at r = {r:.3}");
        }
    }

    #[test]
    fn t1_tail_slope_is_minus_two() {
        let set = build_profile_set(2.0e4, 1e-8).unwrap();
        // least-squares slope of log|T1 - 4/5| vs log r over [10, 100]
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..=20 {
            let r = 10.0_f64 * 10.0_f64.powf(i as f64 / 20.0);
            xs.push(r.ln());
            ys.push((set.t1.eval(r) - 0.8).abs().ln());
        }
        let slope = ls_slope(&xs, &ys);
        assert!((slope + 2.0).abs() < 0.3, "slope = {slope:.3}");
    }

    #[test]
    fn t1_solves_its_equation_against_the_stencil() {
        let set = build_profile_set(2.0e4, 1e-8).unwrap();
        let sup_lq = 2.0;
        let mut worst: f64 = 0.0;
        for &r in &[0.5, 1.0, 3.0, 8.0, 30.0, 200.0, 900.0] {
            let res = apply_h(|x| set.t1.eval(x), r) + eval_lambda_q(r).unwrap();
            worst = worst.max(res.abs());
        }
        assert!(worst <= 1e-6 * sup_lq, "residual sup = {worst:.3e}");
    }

    #[test]
    fn lambda_q_spans_the_kernel_of_h() {
        // independent stencil applied to the closed form
        let mut worst: f64 = 0.0;
        for i in 1..200 {
            let r = 0.5 + 0.05 * i as f64;
            worst = worst.max(apply_h(|x| eval_lambda_q(x).unwrap(), r).abs());
        }
        assert!(worst <= 1e-6 * 2.0, "kernel residual {worst:.3e}");
    }

    #[test]
    fn t1_rejects_flipped_gamma() {
        let gamma = build_gamma(400.0, 1e-8).unwrap();
        let flipped = RadialProfile::with_derivatives(
            gamma.grid().to_vec(),
            gamma.values().iter().map(|v| -v).collect(),
            gamma.derivs().unwrap().iter().map(|d| -d).collect(),
        )
        .unwrap();
        let err = build_t1(&flipped, 400.0, 1e-8);
        assert!(matches!(err, Err(CoreError::Config(_))), "{err:?}");
    }

    fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }
}
