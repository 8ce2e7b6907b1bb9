//! Free heat evolution of slowly decaying radial data, by exact quadrature.
//!
//! The data of interest decay like |x|^-gamma (log|x|)^-beta with gamma = 2
//! in six dimensions, possibly with alternating sign on a sparse radius
//! schedule. Their heat evolution at the origin behaves like
//! +/- A1 / (t (log sqrt t)^beta) on matching time windows, where
//! A1 = (4 pi)^-3 int e^{-|z|^2/4} |z|^-2 dz = 1/8. Everything is computed
//! by Gauss panels on the radial kernel; evaluations at astronomically
//! large times go through a scaled form that never materializes t itself.
//!
//! In six dimensions the angular reduction of the heat kernel uses
//! |S^5| = pi^3 and |S^4| = 8 pi^2 / 3, with the polar integral
//! Phi(a) = int_0^pi e^{a cos phi} sin^4 phi dphi kept in the stable form
//! e^{-a} Phi(a).

use crate::error::{CoreError, Result};
use crate::grid::RadialProfile;
use crate::profiles::eval_cutoff;
use crate::quad::{adaptive_panels, fixed_panels, noise_floor, QuadResult};
use std::f64::consts::PI;

/// Scaled evaluation floor: below this magnitude, absolute quadrature error
/// no longer needs to track the relative target.
pub const VALUE_FLOOR: f64 = 1e-300;

/// One evaluated point of the heat evolution.
#[derive(Debug, Clone, Copy)]
pub struct HeatSample {
    /// log of the evaluation time
    pub log_t: f64,
    /// radius of the evaluation point
    pub x: f64,
    pub value: f64,
    /// estimated absolute quadrature error
    pub quad_error: f64,
}

/// Radial initial datum usable by the kernel quadrature.
pub trait RadialDatum {
    /// Pointwise value at radius r >= 0.
    fn eval(&self, r: f64) -> f64;

    /// Tail power gamma such that r^gamma * eval(r) stays O(1) as r grows.
    fn gamma(&self) -> f64 {
        2.0
    }

    /// r^gamma * eval(r), taken at log r so huge radii never overflow.
    fn scaled_shape(&self, log_r: f64) -> f64 {
        let r = log_r.exp();
        r.powf(self.gamma()) * self.eval(r)
    }

    /// Log-radii where the datum has kinks or sign blends; quadrature
    /// panels are split there.
    fn breaks_log(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Supremum of |eval| (for maximum-principle checks).
    fn sup(&self) -> f64;
}

/// Sign pattern of a piecewise datum.
#[derive(Debug, Clone, PartialEq)]
pub enum DatumKind {
    /// Single-sign datum: plateau inside r = e, pure decay outside.
    Monotone,
    /// Alternating datum: sign flips across blend zones (R_j, 2 R_j),
    /// starting positive. Radii stored as logs.
    Alternating { log_radii: Vec<f64> },
    /// Pure power r^-gamma with no plateau and no log factor; exactly
    /// self-similar under the heat flow (test datum, beta ignored).
    PurePower,
}

/// Piecewise radial initial datum
/// `+/- |x|^-gamma (log|x|)^-beta` outside the plateau `|x| < e`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseRadialDatum {
    pub beta: f64,
    pub gamma: f64,
    pub kind: DatumKind,
}

impl PiecewiseRadialDatum {
    /// Single-sign datum with the default tail power gamma = 2.
    pub fn monotone(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self { beta, gamma: 2.0, kind: DatumKind::Monotone })
    }

    /// Single-sign datum with explicit tail power gamma in (0, 6).
    pub fn monotone_with_gamma(beta: f64, gamma: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(gamma > 0.0 && gamma < 6.0) {
            return Err(CoreError::Config(format!("gamma must lie in (0, 6), got {gamma}")));
        }
        Ok(Self { beta, gamma, kind: DatumKind::Monotone })
    }

    /// Alternating datum on the given ascending radius schedule. The
    /// schedule must leave room for the sign windows:
    /// (2 R_j) log(2 R_j) < R_{j+1} / log R_{j+1}, and every R_j > e.
    pub fn alternating(beta: f64, radii: &[f64]) -> Result<Self> {
        check_beta(beta)?;
        let log_radii: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
        Self::alternating_from_log(beta, log_radii)
    }

    /// Alternating datum with the schedule already in log form.
    pub fn alternating_from_log(beta: f64, log_radii: Vec<f64>) -> Result<Self> {
        check_beta(beta)?;
        if log_radii.is_empty() {
            return Err(CoreError::Config("alternating datum needs at least one radius".into()));
        }
        for (j, w) in log_radii.iter().enumerate() {
            if *w <= 1.0 {
                return Err(CoreError::Config(format!(
                    "schedule radius R_{} = e^{:.3} must exceed e",
                    j + 1,
                    w
                )));
            }
        }
        for (j, w) in log_radii.windows(2).enumerate() {
            let (la, lb) = (w[0], w[1]);
            // log[(2R_j) log(2R_j)] < log[R_{j+1} / log R_{j+1}]
            let lhs = la + 2f64.ln() + (la + 2f64.ln()).ln();
            let rhs = lb - lb.ln();
            if lhs >= rhs {
                return Err(CoreError::Config(format!(
                    "schedule pair (R_{}, R_{}) violates the window condition: \
                     (2R)log(2R) = e^{lhs:.4} is not below R'/log R' = e^{rhs:.4}",
                    j + 1,
                    j + 2
                )));
            }
        }
        Ok(Self { beta, gamma: 2.0, kind: DatumKind::Alternating { log_radii } })
    }

    /// Exactly self-similar comparison datum r^-2.
    pub fn pure_power() -> Self {
        Self { beta: 0.0, gamma: 2.0, kind: DatumKind::PurePower }
    }

    /// Sign and blend factor at log-radius (ignoring the radial envelope):
    /// +1 on positive stretches, -1 on negative ones, smooth in between.
    fn sign_blend(&self, log_r: f64) -> f64 {
        match &self.kind {
            DatumKind::Monotone | DatumKind::PurePower => 1.0,
            DatumKind::Alternating { log_radii } => {
                let mut sign = 1.0;
                for &lr in log_radii {
                    if log_r < lr {
                        break;
                    }
                    let ratio = (log_r - lr).exp();
                    if ratio < 2.0 {
                        // inside the blend zone (R_j, 2 R_j)
                        let c = eval_cutoff(ratio);
                        return sign * (2.0 * c - 1.0);
                    }
                    sign = -sign;
                }
                sign
            }
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.5 && beta < 1.0) {
        return Err(CoreError::Config(format!("beta must lie in (1/2, 1), got {beta}")));
    }
    Ok(())
}

impl RadialDatum for PiecewiseRadialDatum {
    fn eval(&self, r: f64) -> f64 {
        if matches!(self.kind, DatumKind::PurePower) {
            return if r > 0.0 { r.powf(-self.gamma) } else { f64::INFINITY };
        }
        if r <= std::f64::consts::E {
            return (-self.gamma).exp();
        }
        let lr = r.ln();
        self.sign_blend(lr) * r.powf(-self.gamma) * lr.powf(-self.beta)
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn scaled_shape(&self, log_r: f64) -> f64 {
        if matches!(self.kind, DatumKind::PurePower) {
            return 1.0;
        }
        if log_r <= 1.0 {
            // r^gamma e^-gamma, written in logs so tiny r underflows cleanly
            return (self.gamma * (log_r - 1.0)).exp();
        }
        self.sign_blend(log_r) * log_r.powf(-self.beta)
    }

    fn breaks_log(&self) -> Vec<f64> {
        let mut b = vec![1.0];
        if let DatumKind::Alternating { log_radii } = &self.kind {
            for &lr in log_radii {
                b.push(lr);
                b.push(lr + 2f64.ln());
            }
        }
        b
    }

    fn sup(&self) -> f64 {
        match self.kind {
            DatumKind::PurePower => f64::INFINITY,
            _ => (-self.gamma).exp(),
        }
    }
}

/// A tabulated radial profile used as initial datum (profile values are
/// clamped outside the table, so keep the table wide enough that the tail
/// is negligible).
pub struct ProfileDatum<'a> {
    pub profile: &'a RadialProfile,
}

impl RadialDatum for ProfileDatum<'_> {
    fn eval(&self, r: f64) -> f64 {
        self.profile.eval(r)
    }

    fn gamma(&self) -> f64 {
        0.0
    }

    fn sup(&self) -> f64 {
        self.profile.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Monotone datum builder (tail power 2).
pub fn build_theta0(beta: f64) -> Result<PiecewiseRadialDatum> {
    PiecewiseRadialDatum::monotone(beta)
}

/// Alternating datum builder on an explicit radius schedule.
pub fn build_big_theta0(beta: f64, radii: &[f64]) -> Result<PiecewiseRadialDatum> {
    PiecewiseRadialDatum::alternating(beta, radii)
}

// ---------------------------------------------------------------------------
// angular kernel
// ---------------------------------------------------------------------------

/// Stable polar integral e^{-a} int_0^pi e^{a cos phi} sin^4 phi dphi,
/// computed by direct panel quadrature.
///
/// For small a this is integrated directly; for large a the mass sits in a
/// boundary layer of width a^{-1/2} at phi = 0, resolved by the substitution
/// u = phi sqrt(a). Fixed panels keep it deterministic.
pub fn polar_kernel_direct(a: f64) -> f64 {
    debug_assert!(a >= 0.0);
    if a == 0.0 {
        return 3.0 * PI / 8.0;
    }
    if a <= POLAR_SPLIT {
        fixed_panels(0.0, PI, 16, &mut |p: f64| {
            let s = (0.5 * p).sin();
            (-2.0 * a * s * s).exp() * p.sin().powi(4)
        })
    } else {
        let sqrt_a = a.sqrt();
        let upper = (PI * sqrt_a).min(40.0);
        fixed_panels(0.0, upper, 20, &mut |u: f64| {
            let phi = u / sqrt_a;
            let s = (0.5 * phi).sin();
            (-2.0 * a * s * s).exp() * phi.sin().powi(4) / sqrt_a
        })
    }
}

/// Derivative counterpart: e^{-a} int_0^pi cos phi e^{a cos phi} sin^4 dphi.
pub fn polar_kernel_d_direct(a: f64) -> f64 {
    debug_assert!(a >= 0.0);
    if a == 0.0 {
        return 0.0;
    }
    if a <= POLAR_SPLIT {
        fixed_panels(0.0, PI, 16, &mut |p: f64| {
            let s = (0.5 * p).sin();
            p.cos() * (-2.0 * a * s * s).exp() * p.sin().powi(4)
        })
    } else {
        let sqrt_a = a.sqrt();
        let upper = (PI * sqrt_a).min(40.0);
        fixed_panels(0.0, upper, 20, &mut |u: f64| {
            let phi = u / sqrt_a;
            let s = (0.5 * phi).sin();
            phi.cos() * (-2.0 * a * s * s).exp() * phi.sin().powi(4) / sqrt_a
        })
    }
}

const POLAR_SPLIT: f64 = 30.0;
const POLAR_LOW_CELLS: usize = 6000;
const POLAR_HIGH_CELLS: usize = 3000;

struct PolarTable {
    /// direct values on a uniform grid over [0, POLAR_SPLIT]
    low: Vec<f64>,
    low_d: Vec<f64>,
    /// a^{5/2}-rescaled values against u = POLAR_SPLIT / a on (0, 1]
    high: Vec<f64>,
    high_d: Vec<f64>,
}

fn build_polar_table() -> PolarTable {
    let low: Vec<f64> = (0..=POLAR_LOW_CELLS)
        .map(|i| polar_kernel_direct(POLAR_SPLIT * i as f64 / POLAR_LOW_CELLS as f64))
        .collect();
    let low_d: Vec<f64> = (0..=POLAR_LOW_CELLS)
        .map(|i| polar_kernel_d_direct(POLAR_SPLIT * i as f64 / POLAR_LOW_CELLS as f64))
        .collect();
    // h(u) = a^{5/2} Phi(a) with u = POLAR_SPLIT/a: analytic down to u = 0,
    // where the boundary-layer limit is 3 sqrt(pi/2)
    let limit = 3.0 * (PI / 2.0).sqrt();
    let h_at = |u: f64| -> f64 {
        if u == 0.0 {
            limit
        } else {
            let a = POLAR_SPLIT / u;
            polar_kernel_direct(a) * a.powf(2.5)
        }
    };
    let hd_at = |u: f64| -> f64 {
        if u == 0.0 {
            limit
        } else {
            let a = POLAR_SPLIT / u;
            polar_kernel_d_direct(a) * a.powf(2.5)
        }
    };
    let high: Vec<f64> =
        (0..=POLAR_HIGH_CELLS).map(|i| h_at(i as f64 / POLAR_HIGH_CELLS as f64)).collect();
    let high_d: Vec<f64> =
        (0..=POLAR_HIGH_CELLS).map(|i| hd_at(i as f64 / POLAR_HIGH_CELLS as f64)).collect();
    PolarTable { low, low_d, high, high_d }
}

static POLAR_TABLE: std::sync::OnceLock<PolarTable> = std::sync::OnceLock::new();

/// Cubic interpolation on a uniform table; `x` in units of the cell index.
fn table_cubic(table: &[f64], x: f64) -> f64 {
    let n = table.len();
    let i = (x.floor() as usize).min(n - 2);
    let s = (i.saturating_sub(1)).min(n - 4);
    let t = x - s as f64;
    // 4-point Lagrange on nodes s..s+3
    let y = &table[s..s + 4];
    let c0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let c1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let c2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let c3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    c0 * y[0] + c1 * y[1] + c2 * y[2] + c3 * y[3]
}

/// Tabulated polar integral (errors ~ 1e-12 relative; the direct version
/// stays available as the build and cross-check path).
pub fn polar_kernel(a: f64) -> f64 {
    debug_assert!(a >= 0.0);
    let t = POLAR_TABLE.get_or_init(build_polar_table);
    if a <= POLAR_SPLIT {
        table_cubic(&t.low, a / POLAR_SPLIT * POLAR_LOW_CELLS as f64)
    } else {
        let u = POLAR_SPLIT / a;
        table_cubic(&t.high, u * POLAR_HIGH_CELLS as f64) * a.powf(-2.5)
    }
}

/// Tabulated derivative counterpart.
pub fn polar_kernel_d(a: f64) -> f64 {
    debug_assert!(a >= 0.0);
    let t = POLAR_TABLE.get_or_init(build_polar_table);
    if a <= POLAR_SPLIT {
        table_cubic(&t.low_d, a / POLAR_SPLIT * POLAR_LOW_CELLS as f64)
    } else {
        let u = POLAR_SPLIT / a;
        table_cubic(&t.high_d, u * POLAR_HIGH_CELLS as f64) * a.powf(-2.5)
    }
}

/// Radial reduction of the 6D heat kernel: the weight against which a
/// radial datum is integrated in rho to produce the evolution at radius x
/// after time v. Includes the full angular measure.
pub fn radial_kernel(x: f64, rho: f64, v: f64) -> f64 {
    let d = x - rho;
    (4.0 * PI * v).powi(-3) * (8.0 * PI * PI / 3.0)
        * rho.powi(5)
        * (-d * d / (4.0 * v)).exp()
        * polar_kernel(x * rho / (2.0 * v))
}

// ---------------------------------------------------------------------------
// evolution at the origin (overflow-free scaled form)
// ---------------------------------------------------------------------------

/// t^{gamma/2} * theta(0, t), evaluated from log t. This is the natural
/// normalization: for the default data it stays within a factor of
/// (log sqrt t)^-beta of A1 for all reachable times.
pub fn theta_origin_scaled<D: RadialDatum>(datum: &D, log_t: f64) -> QuadResult {
    let log_sqrt_t = 0.5 * log_t;
    let gamma = datum.gamma();
    let mut breaks: Vec<f64> = vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 30.0, 45.0, 60.0];
    for b in datum.breaks_log() {
        let z = (b - log_sqrt_t).exp();
        if z > 1e-290 && z < 60.0 {
            breaks.push(z);
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * b.abs().max(1e-290));
    let mut f = |z: f64| -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        (-z * z / 4.0).exp() * z.powf(5.0 - gamma) * datum.scaled_shape(z.ln() + log_sqrt_t)
    };
    let floor = noise_floor(&breaks, 1e-15, &mut f);
    let q = adaptive_panels(&breaks, 1e-10, floor, &mut f);
    QuadResult { value: q.value / 64.0, abs_error: q.abs_error / 64.0 }
}

/// theta(0, t) as a [`HeatSample`]. For log t beyond ~690 the unscaled
/// value underflows; use [`theta_origin_scaled`] in that regime.
pub fn theta_origin<D: RadialDatum>(datum: &D, t: f64) -> Result<HeatSample> {
    if !(t > 0.0) {
        return Err(CoreError::Domain(format!("time must be positive, got {t}")));
    }
    let log_t = t.ln();
    let scaled = theta_origin_scaled(datum, log_t);
    let scale = (-0.5 * datum.gamma() * log_t).exp();
    let sample = HeatSample {
        log_t,
        x: 0.0,
        value: scaled.value * scale,
        quad_error: scaled.abs_error * scale,
    };
    check_sample(&sample)?;
    Ok(sample)
}

fn check_sample(s: &HeatSample) -> Result<()> {
    if !s.value.is_finite() {
        return Err(CoreError::Numeric(format!(
            "non-finite heat sample at log t = {:.3}, x = {:.3e}",
            s.log_t, s.x
        )));
    }
    if s.value.abs() > VALUE_FLOOR && s.quad_error > 1e-3 * s.value.abs() {
        return Err(CoreError::Numeric(format!(
            "quadrature error {:.3e} exceeds 1e-3 of |value| = {:.3e} at log t = {:.3}, x = {:.3e}",
            s.quad_error,
            s.value.abs(),
            s.log_t,
            s.x
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// evolution away from the origin
// ---------------------------------------------------------------------------

fn xi_breaks<D: RadialDatum>(datum: &D, x: f64, t: f64) -> Vec<f64> {
    let st = t.sqrt();
    let lo = (-x / (2.0 * st)).max(-60.0);
    let mut breaks: Vec<f64> = Vec::with_capacity(140);
    breaks.push(lo);
    let mut z = lo.floor() + 1.0;
    while z < 60.0 {
        if z > lo {
            breaks.push(z);
        }
        z += 1.0;
    }
    breaks.push(60.0);
    for b in datum.breaks_log() {
        // feature radius rho = e^b maps to xi = (rho - x)/(2 sqrt t)
        if b < 400.0 {
            let xi = (b.exp() - x) / (2.0 * st);
            if xi > lo && xi < 60.0 {
                breaks.push(xi);
            }
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    breaks
}

/// theta(x, t) by 2D (radial x polar) kernel quadrature.
pub fn theta_at<D: RadialDatum>(datum: &D, x: f64, t: f64) -> Result<HeatSample> {
    if !(t > 0.0) || x < 0.0 {
        return Err(CoreError::Domain(format!("need t > 0 and x >= 0, got t = {t}, x = {x}")));
    }
    if x == 0.0 {
        return theta_origin(datum, t);
    }
    let st = t.sqrt();
    let breaks = xi_breaks(datum, x, t);
    let pref = (4.0 * PI * t).powi(-3) * (8.0 * PI * PI / 3.0) * 2.0 * st;
    let mut f = |xi: f64| -> f64 {
        let rho = x + 2.0 * st * xi;
        if rho <= 0.0 {
            return 0.0;
        }
        rho.powi(5) * datum.eval(rho) * (-xi * xi).exp() * polar_kernel(x * rho / (2.0 * t))
    };
    let floor = noise_floor(&breaks, 1e-15, &mut f);
    let q = adaptive_panels(&breaks, 1e-9, floor, &mut f);
    let sample = HeatSample {
        log_t: t.ln(),
        x,
        value: pref * q.value,
        quad_error: pref * q.abs_error,
    };
    check_sample(&sample)?;
    Ok(sample)
}

/// Radial derivative d theta / dx by differentiating the kernel under the
/// integral. Exactly zero at x = 0 by symmetry.
pub fn grad_theta<D: RadialDatum>(datum: &D, x: f64, t: f64) -> Result<HeatSample> {
    if !(t > 0.0) || x < 0.0 {
        return Err(CoreError::Domain(format!("need t > 0 and x >= 0, got t = {t}, x = {x}")));
    }
    if x == 0.0 {
        return Ok(HeatSample { log_t: t.ln(), x, value: 0.0, quad_error: 0.0 });
    }
    let st = t.sqrt();
    let breaks = xi_breaks(datum, x, t);
    let pref = (4.0 * PI * t).powi(-3) * (8.0 * PI * PI / 3.0) * 2.0 * st;
    let mut f = |xi: f64| -> f64 {
        let rho = x + 2.0 * st * xi;
        if rho <= 0.0 {
            return 0.0;
        }
        let a = x * rho / (2.0 * t);
        let radial = (-x * polar_kernel(a) + rho * polar_kernel_d(a)) / (2.0 * t);
        rho.powi(5) * datum.eval(rho) * (-xi * xi).exp() * radial
    };
    let floor = noise_floor(&breaks, 1e-15, &mut f);
    let q = adaptive_panels(&breaks, 1e-8, floor, &mut f);
    Ok(HeatSample { log_t: t.ln(), x, value: pref * q.value, quad_error: pref * q.abs_error })
}

/// d theta / dt at the origin by centered differencing in log t.
pub fn dt_theta_origin<D: RadialDatum>(datum: &D, t: f64) -> Result<f64> {
    let h = 1e-4;
    let log_t = t.ln();
    let plus = theta_origin_scaled(datum, log_t + h).value;
    let minus = theta_origin_scaled(datum, log_t - h).value;
    let g = datum.gamma();
    // d/dt [t^{g/2} theta] = t^{g/2} (theta_t + (g/2) theta / t)
    let scaled_dt = (plus - minus) / (2.0 * h) / t; // d/dt of the scaled value
    let theta0 = theta_origin_scaled(datum, log_t).value;
    Ok((scaled_dt - 0.5 * g * theta0 / t) * (-0.5 * g * log_t).exp())
}

// ---------------------------------------------------------------------------
// A1 and window reports
// ---------------------------------------------------------------------------

/// Build the lemma time schedule (t_j, R_j, t_j^+/-) in log-time from the
/// base count n1. Thin wrapper so the schedule can be constructed from the
/// heat-tail side where its radii originate.
pub fn make_schedule(n1: u32, beta: f64, jmax: usize) -> Result<crate::scaling_dynamics::TimeSchedule> {
    crate::scaling_dynamics::TimeSchedule::new(n1, beta, jmax)
}

/// The tail constant A1 = (4 pi)^-3 |S^5| int_0^inf e^{-r^2/4} r^3 dr,
/// computed by quadrature. Its closed form is 1/8.
pub fn a1_constant() -> f64 {
    let q = adaptive_panels(&[0.0, 4.0, 10.0, 60.0], 1e-13, 1e-16, &mut |r: f64| {
        (-r * r / 4.0).exp() * r.powi(3)
    });
    (4.0 * PI).powi(-3) * PI.powi(3) * q.value
}

/// Closed-form value of A1 for cross-checks.
pub const A1_CLOSED_FORM: f64 = 0.125;

/// Sign-window description for an alternating datum: on window j
/// (1-based), sqrt t runs over (2 R_j log 2 R_j, R_{j+1} / log R_{j+1})
/// and theta(0, t) holds the sign (-1)^j.
#[derive(Debug, Clone, Copy)]
pub struct Window {
    pub j: usize,
    /// log sqrt t at the opening
    pub lo: f64,
    /// log sqrt t at the closing
    pub hi: f64,
}

/// Window j of the datum's schedule, in log sqrt t.
pub fn window_of(datum: &PiecewiseRadialDatum, j: usize) -> Result<Window> {
    let DatumKind::Alternating { log_radii } = &datum.kind else {
        return Err(CoreError::Config("windows require an alternating datum".into()));
    };
    if j == 0 || j >= log_radii.len() {
        return Err(CoreError::Config(format!(
            "window {j} not available: schedule has {} radii",
            log_radii.len()
        )));
    }
    let la = log_radii[j - 1];
    let lb = log_radii[j];
    let lo = la + 2f64.ln() + (la + 2f64.ln()).ln();
    let hi = lb - lb.ln();
    if lo >= hi {
        return Err(CoreError::Config(format!("window {j} is empty: [{lo:.3}, {hi:.3}]")));
    }
    Ok(Window { j, lo, hi })
}

/// One sampled row of a window check.
#[derive(Debug, Clone, Copy)]
pub struct WindowRow {
    pub j: usize,
    pub log_sqrt_t: f64,
    pub sign: f64,
    /// t theta(0,t) (log sqrt t)^beta / A1, signed
    pub ratio_to_a1: f64,
    /// |ratio - expected sign| * log t
    pub deviation_times_logt: f64,
    /// fitted prefactor against the (log t)^-beta shape
    pub prefactor_logt_norm: f64,
}

/// Sample theta(0, t) across window j and report sign and deviation data.
pub fn window_check(
    datum: &PiecewiseRadialDatum,
    j: usize,
    samples: usize,
) -> Result<Vec<WindowRow>> {
    let w = window_of(datum, j)?;
    if w.lo * 2.0 > 700.0 {
        return Err(CoreError::Config(format!(
            "window {j} opens at log t = {:.1}, beyond the floating range of the quadrature",
            w.lo * 2.0
        )));
    }
    let expected = if j % 2 == 1 { -1.0 } else { 1.0 };
    let a1 = a1_constant();
    let mut rows = Vec::with_capacity(samples);
    for i in 0..samples {
        let ls = w.lo + (w.hi - w.lo) * (i as f64 + 0.5) / samples as f64;
        let log_t = 2.0 * ls;
        let scaled = theta_origin_scaled(datum, log_t).value; // t theta(0,t)
        let ratio = scaled * ls.powf(datum.beta) / a1;
        rows.push(WindowRow {
            j,
            log_sqrt_t: ls,
            sign: scaled.signum(),
            ratio_to_a1: ratio,
            deviation_times_logt: (ratio - expected).abs() * log_t,
            prefactor_logt_norm: scaled * log_t.powf(datum.beta) * expected,
        });
    }
    let _ = expected;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn monotone_datum_values() {
        let d = build_theta0(0.75).unwrap();
        // continuity at the plateau edge: (log e)^-beta = 1
        assert!((d.eval(E) - (-2.0_f64).exp()).abs() < 1e-12);
        // direct formula at e^2
        let v = d.eval(E * E);
        let want = (E * E).powf(-2.0) * 2.0_f64.powf(-0.75);
        assert!((v - want).abs() < 1e-15);
        assert!(build_theta0(0.4).is_err());
        assert!(build_theta0(1.0).is_err());
    }

    #[test]
    fn monotone_datum_is_inside_its_envelope() {
        let d = build_theta0(0.6).unwrap();
        for i in 0..400 {
            let r = 0.05 * (i as f64 + 1.0);
            let envelope = if r > E { r.powf(-2.0) * r.ln().powf(-0.6) } else { (-2.0_f64).exp() };
            assert!(d.eval(r).abs() <= envelope + 1e-15, "datum exceeds envelope at r = {r}");
        }
    }

    #[test]
    fn alternating_datum_blend_and_signs() {
        let d = build_big_theta0(0.75, &[1e3, 1e7, 1e11]).unwrap();
        // midpoint of the first blend: chi(1.5) = 1/2 makes the value vanish
        assert!(d.eval(1.5e3).abs() < 1e-18);
        // on (2 R_1, R_2) the datum equals -f0
        let r: f64 = 1e5;
        let f0 = r.powf(-2.0) * r.ln().powf(-0.75);
        assert!((d.eval(r) + f0).abs() < 1e-18);
        // |datum| <= f0 everywhere beyond e
        for i in 1..2000 {
            let r = (0.01 * i as f64).exp() * E;
            if r.ln() > 26.0 {
                break;
            }
            let f0 = r.powf(-2.0) * r.ln().powf(-0.75);
            assert!(d.eval(r).abs() <= f0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn alternating_rejects_bad_schedule() {
        let err = build_big_theta0(0.75, &[1e3, 1e4]); // too close
        match err {
            Err(CoreError::Config(msg)) => assert!(msg.contains("R_1") && msg.contains("R_2"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn a1_matches_closed_form() {
        assert!((a1_constant() - 0.125).abs() < 1e-10);
    }

    #[test]
    fn polar_kernel_limits() {
        // a = 0: the full sin^4 moment
        assert!((polar_kernel(0.0) - 3.0 * PI / 8.0).abs() < 1e-14);
        // frozen reference value (independent adaptive quadrature)
        assert!(
            (polar_kernel(30.0) - 7.157754901656e-4).abs() < 1e-13,
            "kernel(30) = {:.12e}",
            polar_kernel(30.0)
        );
        // the two branches agree at the switch point
        let below = polar_kernel(30.0 - 1e-9);
        let above = polar_kernel(30.0 + 1e-9);
        assert!((below - above).abs() / below < 1e-9, "{below} vs {above}");
        // large-a asymptote: a^{5/2} e^{-a} Phi ~ int_0^inf u^4 e^{-u^2/2} du = 3 sqrt(pi/2)
        let a: f64 = 4.0e4;
        let lim = polar_kernel(a) * a.powf(2.5);
        let want = 3.0 * (PI / 2.0_f64).sqrt();
        assert!((lim - want).abs() / want < 1e-3, "{lim} vs {want}");
    }

    #[test]
    fn origin_and_offset_paths_agree() {
        let d = build_theta0(0.75).unwrap();
        let t = 1.0e4;
        let at = theta_at(&d, 1e-9, t).unwrap().value;
        let origin = theta_origin(&d, t).unwrap().value;
        assert!((at - origin).abs() / origin.abs() < 1e-6, "{at} vs {origin}");
    }

    #[test]
    fn pure_power_datum_is_self_similar() {
        let d = PiecewiseRadialDatum::pure_power();
        let mut vals = Vec::new();
        for &t in &[1.0e2_f64, 1.0e4, 1.0e6, 1.0e8] {
            vals.push(theta_origin_scaled(&d, t.ln()).value);
        }
        for w in vals.windows(2) {
            assert!((w[1] - w[0]).abs() / w[0] < 1e-4, "t*theta drifted: {vals:?}");
        }
        // the constant is exactly A1
        assert!((vals[0] - 0.125).abs() < 1e-6, "t*theta = {}", vals[0]);
    }

    #[test]
    fn gradient_vanishes_at_origin_and_matches_fd() {
        let d = build_theta0(0.75).unwrap();
        let t = 1.0e4;
        assert_eq!(grad_theta(&d, 0.0, t).unwrap().value, 0.0);
        let x = 30.0;
        let h = 0.05;
        let fd = (theta_at(&d, x + h, t).unwrap().value - theta_at(&d, x - h, t).unwrap().value)
            / (2.0 * h);
        let g = grad_theta(&d, x, t).unwrap().value;
        assert!((fd - g).abs() <= 1e-6 * g.abs().max(1e-18), "fd {fd:.6e} vs {g:.6e}");
    }

    #[test]
    fn linearity_of_the_evolution() {
        // theta[a f] = a theta[f]: scale the monotone datum through gamma trick
        let d = build_theta0(0.75).unwrap();
        struct Scaled<'a>(&'a PiecewiseRadialDatum, f64);
        impl RadialDatum for Scaled<'_> {
            fn eval(&self, r: f64) -> f64 {
                self.1 * self.0.eval(r)
            }
            fn gamma(&self) -> f64 {
                self.0.gamma()
            }
            fn scaled_shape(&self, log_r: f64) -> f64 {
                self.1 * self.0.scaled_shape(log_r)
            }
            fn breaks_log(&self) -> Vec<f64> {
                self.0.breaks_log()
            }
            fn sup(&self) -> f64 {
                self.1 * self.0.sup()
            }
        }
        let a = 3.7;
        let t = 2.0e5;
        let lhs = theta_origin(&Scaled(&d, a), t).unwrap().value;
        let rhs = a * theta_origin(&d, t).unwrap().value;
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }

    #[test]
    fn window_signs_alternate() {
        let d = build_big_theta0(0.75, &[100.0, 1e5, 1e8, 1e12]).unwrap();
        for j in 1..=3 {
            let rows = window_check(&d, j, 7).unwrap();
            let expected = if j % 2 == 1 { -1.0 } else { 1.0 };
            for row in &rows {
                assert_eq!(row.sign, expected, "window {j} at log sqrt t = {}", row.log_sqrt_t);
            }
        }
    }

    #[test]
    fn monotone_positivity_is_preserved() {
        let d = build_theta0(0.8).unwrap();
        for &lt in &[2.0, 8.0, 20.0, 80.0, 300.0] {
            assert!(theta_origin_scaled(&d, lt).value > 0.0, "theta < 0 at log t = {lt}");
        }
    }

    #[test]
    fn maximum_principle_at_scattered_points() {
        let d = build_theta0(0.75).unwrap();
        let sup = d.sup();
        for &(x, t) in &[(0.0, 0.5), (3.0, 2.0), (10.0, 50.0), (100.0, 1e4)] {
            let v = theta_at(&d, x, t).unwrap().value;
            assert!(v.abs() <= sup * (1.0 + 1e-9), "|theta({x},{t})| = {v} > sup = {sup}");
        }
    }

    #[test]
    fn semigroup_property_through_a_tabulated_profile() {
        let d = build_theta0(0.75).unwrap();
        let (t0, t1): (f64, f64) = (100.0, 150.0);
        let r_cut = 60.0 * (t0 + t1 + 10.0).sqrt();
        let grid = crate::grid::geometric_grid(1e-3, r_cut, 1500).unwrap();
        let mut vals = Vec::with_capacity(grid.len());
        for &r in &grid {
            vals.push(theta_at(&d, r, t0).unwrap().value);
        }
        let profile = RadialProfile::new(grid, vals).unwrap();
        let datum2 = ProfileDatum { profile: &profile };
        let two_step = theta_origin(&datum2, t1).unwrap();
        let direct = theta_origin(&d, t0 + t1).unwrap();
        let tol = 10.0 * (two_step.quad_error + direct.quad_error) + 1e-9 * direct.value.abs();
        assert!(
            (two_step.value - direct.value).abs() <= tol,
            "semigroup mismatch: {} vs {}",
            two_step.value,
            direct.value
        );
    }

    #[test]
    fn origin_bound_with_logt_normalization() {
        // |theta(0,t)| stays below 2 A1 / (t (log t)^beta) at large times
        let d = build_theta0(0.75).unwrap();
        for &t in &[1.0e6_f64, 1.0e8, 1.0e10] {
            let scaled = theta_origin_scaled(&d, t.ln()).value;
            let bound = 2.0 * 0.125 / t.ln().powf(0.75);
            assert!(scaled.abs() < bound, "t theta = {scaled} vs bound {bound} at t = {t:e}");
        }
    }
}
