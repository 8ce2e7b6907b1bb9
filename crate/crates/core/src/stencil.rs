//! Independent finite-difference application of the linearized operator.
//!
//! This is the cross-check side of the dual-route design: profiles are
//! built by ODE integration and quadrature, and verified here with plain
//! five-point central differences that share no code with the builders.

use crate::profiles::eval_v;

/// Step used by the 5-point stencils, proportional to the radius: the
/// profiles here vary on the scale of r itself, so h = 0.02 r keeps the
/// truncation term (h/r)^4 and the interpolation noise (amplified by
/// 1/h^2) simultaneously below the residual budgets.
pub fn stencil_step(r: f64) -> f64 {
    0.02 * r
}

/// Fourth-order first derivative.
pub fn d1<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Fourth-order second derivative.
pub fn d2<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
        / (12.0 * h * h)
}

/// Apply H = d^2/dr^2 + (5/r) d/dr + V(r) to a radial function at `r > 0`.
pub fn apply_h<F: Fn(f64) -> f64 + Copy>(f: F, r: f64) -> f64 {
    apply_h_with_scale(f, r).0
}

/// Apply H and also return the cancellation scale
/// |f''| + |(5/r) f'| + |V f| at the same point. Residuals of singular
/// solutions (which vanish only through cancellation of large terms)
/// should be judged against this scale rather than against sup|f|.
pub fn apply_h_with_scale<F: Fn(f64) -> f64 + Copy>(f: F, r: f64) -> (f64, f64) {
    let h = stencil_step(r);
    let second = d2(f, r, h);
    let first = 5.0 / r * d1(f, r, h);
    let zeroth = eval_v(r).unwrap() * f(r);
    (second + first + zeroth, second.abs() + first.abs() + zeroth.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_are_fourth_order_on_analytic_data() {
        let f = |x: f64| (0.7 * x).sin() * (-0.1 * x).exp();
        let fp = |x: f64| {
            0.7 * (0.7 * x).cos() * (-0.1 * x).exp() - 0.1 * (0.7 * x).sin() * (-0.1 * x).exp()
        };
        for &x in &[0.9, 2.3, 7.7] {
            let h = 0.01;
            assert!((d1(f, x, h) - fp(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn apply_h_reproduces_known_identity() {
        // H Q = Delta Q + 2 Q^2, and -Delta Q = Q^2, so H Q = Q^2.
        for &r in &[0.6, 1.4, 3.0, 9.0] {
            let q = crate::profiles::eval_q(r).unwrap();
            let res = apply_h(|x| crate::profiles::eval_q(x).unwrap(), r) - q * q;
            assert!(res.abs() < 1e-7, "residual {res:.3e} at r = {r}");
        }
    }
}
