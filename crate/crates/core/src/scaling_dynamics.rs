//! Dynamics of the scaling parameter lambda(t) in log-time.
//!
//! On the sign windows (t_j^+, t_{j+1}^-) the rate is
//! dot-lambda / lambda = (-1)^j (1-beta) q1 / (t (log t)^beta) + D_j(t)
//! with |D_j| <= C1 / (t (log t)^beta'), and on the gap windows
//! (t_j^-, t_j^+) only the envelope |rate| <= 2 (1-beta) q1 / (t (log t)^beta)
//! is known. Every quantity here is carried in tau = log t: the schedule
//! times reach e^{n1^{j/(1-beta)}}, far beyond floating range, but their
//! logs are ordinary numbers and all increments integrate in closed form
//! (q1 tau^{1-beta} is the antiderivative of the main rate).

use crate::error::{CoreError, Result};
use crate::heat_tail::{theta_origin_scaled, RadialDatum};
use crate::quad::fixed_panels;
use crate::spectrum::EigenPair;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Convention for the window-opening times t_j^+.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlusConvention {
    /// t_j^+ = (2 R_j log 2 R_j)^2: matches the opening of the sign
    /// windows of the alternating heat tail.
    #[default]
    DoubledRadius,
    /// t_j^+ = (R_j log R_j)^2: the alternative convention that appears in
    /// the fixed-point setup; provided as a switch.
    PlainRadius,
}

/// Window times for the lemma schedule, all stored as logs.
///
/// For large j the anchor p_j = n1^{j/(1-beta)} dwarfs the logarithmic
/// window offsets (at n1 = 16, beta = 3/4, p_4 ~ 1.8e19 has a ULP above
/// 2000 while the offsets are ~90), so each window time is kept as the
/// pair (p_j, offset) and combined only through the stable helpers below.
/// The rounded sums in `log_tj_minus` / `log_tj_plus` remain the exported
/// values; they coincide with p_j once the offset falls below roundoff,
/// which is fine everywhere the sums are consumed directly.
#[derive(Debug, Clone)]
pub struct TimeSchedule {
    pub n1: u32,
    pub beta: f64,
    pub jmax: usize,
    /// log t_j = p_j = n1^{j/(1-beta)}, index 0 <-> j = 1
    pub log_tj: Vec<f64>,
    /// log t_j^+ = p_j + 2 log 2 + 2 log(p_j/2 + log 2) (doubled-radius form)
    pub log_tj_plus: Vec<f64>,
    /// log t_j^- = p_j - 2 log(p_j/2)
    pub log_tj_minus: Vec<f64>,
    /// exact window offsets: log t_j^- = p_j + delta_minus[j]
    pub delta_minus: Vec<f64>,
    /// exact window offsets: log t_j^+ = p_j + delta_plus[j]
    pub delta_plus: Vec<f64>,
    /// log t_I = log t_1^-
    pub log_ti: f64,
}

/// (p + d)^alpha without losing d to roundoff when |d| << ULP(p).
pub fn pow_anchored(p: f64, d: f64, alpha: f64) -> f64 {
    if d.abs() > 1e-8 * p {
        (p + d).powf(alpha)
    } else {
        p.powf(alpha) * (1.0 + alpha * d / p)
    }
}

/// (p + db)^alpha - (p + da)^alpha, stable against cancellation of the
/// shared anchor.
pub fn pow_anchored_diff(p: f64, da: f64, db: f64, alpha: f64) -> f64 {
    if (db - da).abs() > 1e-8 * p {
        (p + db).powf(alpha) - (p + da).powf(alpha)
    } else {
        // second-order expansion around the anchor
        alpha * p.powf(alpha - 1.0) * (db - da) * (1.0 + 0.5 * (alpha - 1.0) * (da + db) / p)
    }
}

impl TimeSchedule {
    pub fn new(n1: u32, beta: f64, jmax: usize) -> Result<Self> {
        Self::with_convention(n1, beta, jmax, PlusConvention::DoubledRadius)
    }

    pub fn with_convention(
        n1: u32,
        beta: f64,
        jmax: usize,
        convention: PlusConvention,
    ) -> Result<Self> {
        if n1 < 4 {
            return Err(CoreError::Config(format!("n1 must be >= 4, got {n1}")));
        }
        if !(beta > 0.5 && beta < 1.0) {
            return Err(CoreError::Config(format!("beta must lie in (1/2, 1), got {beta}")));
        }
        if jmax == 0 || jmax > 8 {
            return Err(CoreError::Config(format!("jmax must lie in 1..=8, got {jmax}")));
        }
        let ln2 = 2f64.ln();
        let mut log_tj = Vec::with_capacity(jmax);
        let mut log_tj_plus = Vec::with_capacity(jmax);
        let mut log_tj_minus = Vec::with_capacity(jmax);
        let mut delta_minus = Vec::with_capacity(jmax);
        let mut delta_plus = Vec::with_capacity(jmax);
        for j in 1..=jmax {
            let p = (n1 as f64).powf(j as f64 / (1.0 - beta));
            if !p.is_finite() {
                return Err(CoreError::Config(format!(
                    "p_{j} = n1^{{j/(1-beta)}} overflows for n1 = {n1}, beta = {beta}"
                )));
            }
            let dm = -2.0 * (0.5 * p).ln();
            let dp = match convention {
                PlusConvention::DoubledRadius => 2.0 * ln2 + 2.0 * (0.5 * p + ln2).ln(),
                PlusConvention::PlainRadius => 2.0 * (0.5 * p).ln(),
            };
            log_tj.push(p);
            log_tj_minus.push(p + dm);
            log_tj_plus.push(p + dp);
            delta_minus.push(dm);
            delta_plus.push(dp);
        }
        // ordering log t_j^- < log t_j < log t_j^+ < log t_{j+1}^-, checked
        // on the exact offsets
        for j in 0..jmax {
            if !(delta_minus[j] < 0.0 && 0.0 < delta_plus[j]) {
                return Err(CoreError::Config(format!(
                    "window {} ordering failed: n1 = {n1} is too small",
                    j + 1
                )));
            }
            if j + 1 < jmax {
                let gap = (log_tj[j + 1] - log_tj[j]) + (delta_minus[j + 1] - delta_plus[j]);
                if gap <= 0.0 {
                    return Err(CoreError::Config(format!(
                        "windows {} and {} overlap: n1 = {n1} is too small",
                        j + 1,
                        j + 2
                    )));
                }
            }
        }
        // the radius schedule R_j = sqrt(t_j) must leave room for the sign
        // windows: (2 R_j) log(2 R_j) < R_{j+1} / log R_{j+1}
        for j in 0..jmax.saturating_sub(1) {
            let la = 0.5 * log_tj[j];
            let lb = 0.5 * log_tj[j + 1];
            // compare offsets against the exactly computed anchor gap
            let lhs_off = ln2 + (la + ln2).ln();
            let rhs_off = -lb.ln();
            if (lb - la) + (rhs_off - lhs_off) <= 0.0 {
                return Err(CoreError::Config(format!(
                    "radius schedule violates the window condition at pair ({}, {})",
                    j + 1,
                    j + 2
                )));
            }
        }
        let log_ti = log_tj_minus[0];
        Ok(Self {
            n1,
            beta,
            jmax,
            log_tj,
            log_tj_plus,
            log_tj_minus,
            delta_minus,
            delta_plus,
            log_ti,
        })
    }

    /// log R_j = p_j / 2 (1-based j).
    pub fn log_radius(&self, j: usize) -> f64 {
        0.5 * self.log_tj[j - 1]
    }

    /// (log t_j^-)^alpha through the anchored form (1-based j).
    pub fn pow_minus(&self, j: usize, alpha: f64) -> f64 {
        pow_anchored(self.log_tj[j - 1], self.delta_minus[j - 1], alpha)
    }

    /// (log t_j^+)^alpha through the anchored form (1-based j).
    pub fn pow_plus(&self, j: usize, alpha: f64) -> f64 {
        pow_anchored(self.log_tj[j - 1], self.delta_plus[j - 1], alpha)
    }

    /// Width of the gap window j in the tau^alpha scale:
    /// (log t_j^+)^alpha - (log t_j^-)^alpha, 1-based j.
    pub fn gap_width_pow(&self, j: usize, alpha: f64) -> f64 {
        pow_anchored_diff(self.log_tj[j - 1], self.delta_minus[j - 1], self.delta_plus[j - 1], alpha)
    }
}

/// Rate data for the piecewise system.
#[derive(Debug, Clone, Copy)]
pub struct PiecewiseRate {
    /// q1 = 5 A1 / (4 (1 - beta))
    pub q1: f64,
    /// amplitude of the admissible perturbation D
    pub c1: f64,
    /// log exponent of D: |D| <= c1 / (t (log t)^beta_prime), beta_prime > 1
    pub beta_prime: f64,
}

impl PiecewiseRate {
    pub fn new(beta: f64, c1: f64, beta_prime: f64) -> Result<Self> {
        if !(beta > 0.5 && beta < 1.0) {
            return Err(CoreError::Config(format!("beta must lie in (1/2, 1), got {beta}")));
        }
        if !(beta_prime > 1.0 && beta_prime < beta + 1.0) {
            return Err(CoreError::Config(format!(
                "beta_prime must lie in (1, 1 + beta) = (1, {}), got {beta_prime}",
                1.0 + beta
            )));
        }
        if c1 < 0.0 {
            return Err(CoreError::Config("c1 must be nonnegative".into()));
        }
        let q1 = 5.0 * crate::heat_tail::A1_CLOSED_FORM / (4.0 * (1.0 - beta));
        Ok(Self { q1, c1, beta_prime })
    }
}

/// Choice of the perturbation D on sign windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DChoice {
    Zero,
    /// D at its envelope, positive sign.
    EnvelopePlus,
    /// D at its envelope, negative sign.
    EnvelopeMinus,
    /// Piecewise-constant random fraction of the envelope, seeded.
    Random { seed: u64 },
}

/// Choice of the (envelope-constrained) rate on gap windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapChoice {
    Zero,
    /// Full envelope with the sign of the following sign window.
    AlternatingEnvelope,
    /// Fixed fraction of the envelope in [-1, 1].
    Scaled(f64),
}

/// Which rate branch produced a trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Gap window (t_j^-, t_j^+), 1-based j.
    Gap(usize),
    /// Sign window (t_j^+, t_{j+1}^-), 1-based j.
    Sign(usize),
    /// Produced by the b(t)-driven matched integration.
    Matched,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Gap(j) => write!(f, "gap{j}"),
            Branch::Sign(j) => write!(f, "sign{j}"),
            Branch::Matched => write!(f, "matched"),
        }
    }
}

/// One sample of a lambda trajectory in log-log coordinates.
#[derive(Debug, Clone, Copy)]
pub struct TrajectorySample {
    pub tau: f64,
    pub log_lambda: f64,
    pub branch: Branch,
    /// Integral of D from the current window opening up to tau (0 on gaps).
    pub d_integral: f64,
    /// Position within the producing segment, 0 at its opening, 1 at its
    /// close (lets checks reconstruct window offsets that are below the
    /// roundoff of tau itself).
    pub frac: f64,
}

/// Bookkeeping of the perturbation on one sign window.
#[derive(Debug, Clone, Copy)]
pub struct WindowPerturbation {
    /// 1-based sign-window index
    pub j: usize,
    /// int D over the whole window
    pub d_total: f64,
    /// int |D| over the whole window
    pub abs_d_total: f64,
}

/// Sampled trajectory of log lambda against tau = log t.
#[derive(Debug, Clone)]
pub struct LambdaTrajectory {
    pub samples: Vec<TrajectorySample>,
    pub window_d: Vec<WindowPerturbation>,
    /// log lambda at each t_j^- (index 0 <-> j = 1)
    pub log_lambda_at_minus: Vec<f64>,
    /// log lambda at each t_j^+ (index 0 <-> j = 1; one entry per sign window)
    pub log_lambda_at_plus: Vec<f64>,
}

impl LambdaTrajectory {
    pub fn log_lambda_end(&self) -> f64 {
        self.samples.last().map(|s| s.log_lambda).unwrap_or(f64::NAN)
    }

    pub fn assert_finite(&self) -> Result<()> {
        if self.samples.iter().any(|s| !s.log_lambda.is_finite() || !s.tau.is_finite()) {
            return Err(CoreError::Numeric("trajectory contains non-finite samples".into()));
        }
        Ok(())
    }
}

const SAMPLES_PER_SEGMENT: usize = 16;
const RANDOM_PANELS: usize = 16;

/// Integrate the piecewise system across the schedule, exactly in tau.
///
/// Sign-window increments are q1 * Delta(tau^{1-beta}) with the window's
/// sign, plus the chosen D integrated in closed form panel by panel. Gap
/// windows use `gap` (a fraction of the admissible envelope). The initial
/// value is log lambda(t_1^-) = q1 (log t_1^-)^{1-beta}.
pub fn integrate_piecewise(
    schedule: &TimeSchedule,
    rate: &PiecewiseRate,
    d_choice: DChoice,
    gap: GapChoice,
) -> Result<LambdaTrajectory> {
    if let GapChoice::Scaled(f) = gap {
        if !(f.is_finite() && f.abs() <= 1.0) {
            return Err(CoreError::Config(format!(
                "gap rate fraction {f} exceeds the admissible envelope"
            )));
        }
    }
    let beta = schedule.beta;
    let alpha = 1.0 - beta;
    let q1 = rate.q1;
    let mut rng = match d_choice {
        DChoice::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };

    let mut samples = Vec::new();
    let mut window_d = Vec::new();
    let mut log_lambda_at_minus = Vec::with_capacity(schedule.jmax);
    let mut log_lambda_at_plus = Vec::with_capacity(schedule.jmax);

    let mut log_lambda = q1 * schedule.pow_minus(1, alpha);
    log_lambda_at_minus.push(log_lambda);
    samples.push(TrajectorySample {
        tau: schedule.log_ti,
        log_lambda,
        branch: Branch::Gap(1),
        d_integral: 0.0,
        frac: 0.0,
    });

    for j in 1..schedule.jmax {
        // gap window (t_j^-, t_j^+): both endpoints share the anchor p_j,
        // so all tau^alpha differences go through the anchored form
        let p = schedule.log_tj[j - 1];
        let (dm, dp) = (schedule.delta_minus[j - 1], schedule.delta_plus[j - 1]);
        let sign_of_next = if j % 2 == 1 { -1.0 } else { 1.0 };
        let frac_env = match gap {
            GapChoice::Zero => 0.0,
            GapChoice::AlternatingEnvelope => sign_of_next,
            GapChoice::Scaled(f) => f,
        };
        let base = log_lambda;
        for k in 1..=SAMPLES_PER_SEGMENT {
            let frac = k as f64 / SAMPLES_PER_SEGMENT as f64;
            let d_here = dm + (dp - dm) * frac;
            let ll = base + frac_env * 2.0 * q1 * pow_anchored_diff(p, dm, d_here, alpha);
            samples.push(TrajectorySample {
                tau: p + d_here,
                log_lambda: ll,
                branch: Branch::Gap(j),
                d_integral: 0.0,
                frac,
            });
        }
        log_lambda = base + frac_env * 2.0 * q1 * schedule.gap_width_pow(j, alpha);
        log_lambda_at_plus.push(log_lambda);

        // sign window (t_j^+, t_{j+1}^-): the endpoints sit on different
        // anchors and are far apart, plain arithmetic is stable here
        let (a, b) = (schedule.log_tj_plus[j - 1], schedule.log_tj_minus[j]);
        let base = log_lambda;
        let pa = schedule.pow_plus(j, alpha);
        // the D-perturbation, exact per panel in the antiderivative variable
        let nu = |tau: f64| tau.powf(1.0 - rate.beta_prime);
        let mut d_panels = Vec::with_capacity(RANDOM_PANELS);
        for k in 0..RANDOM_PANELS {
            let t0 = a + (b - a) * k as f64 / RANDOM_PANELS as f64;
            let t1 = a + (b - a) * (k + 1) as f64 / RANDOM_PANELS as f64;
            let mass = rate.c1 * (nu(t0) - nu(t1)) / (rate.beta_prime - 1.0);
            let eta: f64 = match d_choice {
                DChoice::Zero => 0.0,
                DChoice::EnvelopePlus => 1.0,
                DChoice::EnvelopeMinus => -1.0,
                DChoice::Random { .. } => rng.as_mut().unwrap().gen_range(-1.0..=1.0),
            };
            d_panels.push((t0, t1, eta, mass));
        }
        let d_at = |tau: f64| -> (f64, f64) {
            let mut total = 0.0;
            let mut abs_total = 0.0;
            for &(t0, t1, eta, mass) in &d_panels {
                if tau <= t0 {
                    break;
                }
                let covered = if tau >= t1 {
                    mass
                } else {
                    rate.c1 * (nu(t0) - nu(tau)) / (rate.beta_prime - 1.0)
                };
                total += eta * covered;
                abs_total += eta.abs() * covered;
            }
            (total, abs_total)
        };
        for k in 1..=SAMPLES_PER_SEGMENT {
            let frac = k as f64 / SAMPLES_PER_SEGMENT as f64;
            let tau = a + (b - a) * frac;
            let (d_int, _) = d_at(tau);
            let ll = base + sign_of_next * q1 * (tau.powf(alpha) - pa) + d_int;
            samples.push(TrajectorySample {
                tau,
                log_lambda: ll,
                branch: Branch::Sign(j),
                d_integral: d_int,
                frac,
            });
        }
        let (d_total, abs_d_total) = d_at(b);
        window_d.push(WindowPerturbation { j, d_total, abs_d_total });
        log_lambda =
            base + sign_of_next * q1 * (schedule.pow_minus(j + 1, alpha) - pa) + d_total;
        log_lambda_at_minus.push(log_lambda);
    }

    let traj = LambdaTrajectory { samples, window_d, log_lambda_at_minus, log_lambda_at_plus };
    traj.assert_finite()?;
    Ok(traj)
}

/// One verdict of a bound check.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub name: String,
    pub j: usize,
    /// "even", "odd" or "all"
    pub parity: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// true when the bound holds with the stated orientation
    pub pass: bool,
}

/// Check the window-endpoint bounds of the perturbed system: for even j the
/// drop bound, for odd j the growth bound, plus the global doubled-rate
/// envelope along every sample.
pub fn check_window_bounds(
    traj: &LambdaTrajectory,
    schedule: &TimeSchedule,
    rate: &PiecewiseRate,
) -> Vec<Verdict> {
    let q1 = rate.q1;
    let n1 = schedule.n1 as f64;
    let beta = schedule.beta;
    let d_term = rate.c1 / (rate.beta_prime - 1.0) * schedule.log_ti.powf(1.0 - rate.beta_prime);
    let base = traj.log_lambda_at_minus[0];
    let mut verdicts = Vec::new();
    for j in 2..=schedule.jmax {
        let lhs = traj.log_lambda_at_minus[j - 1] - base;
        if j % 2 == 0 {
            let rhs = -0.5 * q1 * n1.powi(j as i32) + 6.0 * q1 * n1.powi(j as i32 - 1) + d_term;
            verdicts.push(Verdict {
                name: format!("window_drop_bound_j{j}"),
                j,
                parity: "even",
                lhs,
                rhs,
                pass: lhs < rhs,
            });
        } else {
            let rhs = 0.5 * q1 * n1.powi(j as i32) - 6.0 * q1 * n1.powi(j as i32 - 1) - d_term;
            verdicts.push(Verdict {
                name: format!("window_growth_bound_j{j}"),
                j,
                parity: "odd",
                lhs,
                rhs,
                pass: lhs > rhs,
            });
        }
    }
    // global envelope: log lambda(t) <= log lambda(t_I) + 2 q1 (tau^{1-b} - tau_I^{1-b})
    let pow = |tau: f64| tau.powf(1.0 - beta);
    let mut worst_excess = f64::NEG_INFINITY;
    for s in &traj.samples {
        let bound = base + 2.0 * q1 * (pow(s.tau) - pow(schedule.log_ti));
        worst_excess = worst_excess.max(s.log_lambda - bound);
    }
    verdicts.push(Verdict {
        name: "global_doubling_envelope".into(),
        j: 0,
        parity: "all",
        lhs: worst_excess,
        rhs: 1e-9,
        pass: worst_excess <= 1e-9,
    });
    verdicts
}

/// Check the four two-sided telescoping bounds at each window endpoint,
/// using the numerically accumulated int |D|.
pub fn check_telescoping(
    traj: &LambdaTrajectory,
    schedule: &TimeSchedule,
    rate: &PiecewiseRate,
) -> Vec<Verdict> {
    let q1 = rate.q1;
    let beta = schedule.beta;
    let pow = |tau: f64| tau.powf(1.0 - beta);
    let base = traj.log_lambda_at_minus[0];
    let mut verdicts = Vec::new();
    for j in 2..=schedule.jmax {
        let lhs = traj.log_lambda_at_minus[j - 1] - base;
        let abs_d: f64 = traj.window_d.iter().take(j - 1).map(|w| w.abs_d_total).sum();
        let pj_minus = pow(schedule.log_tj_minus[j - 1]);
        let pjm1_plus = pow(schedule.log_tj_plus[j - 2]);
        if j % 2 == 0 {
            let upper = -q1 * pj_minus + 3.0 * q1 * pjm1_plus + abs_d;
            let lower = -q1 * pj_minus - q1 * pjm1_plus - abs_d;
            verdicts.push(Verdict {
                name: format!("telescoping_upper_even_j{j}"),
                j,
                parity: "even",
                lhs,
                rhs: upper,
                pass: lhs < upper,
            });
            verdicts.push(Verdict {
                name: format!("telescoping_lower_even_j{j}"),
                j,
                parity: "even",
                lhs,
                rhs: lower,
                pass: lhs > lower,
            });
        } else {
            let upper = q1 * pj_minus + q1 * pjm1_plus + abs_d;
            let lower = q1 * pj_minus - 3.0 * q1 * pjm1_plus - abs_d;
            verdicts.push(Verdict {
                name: format!("telescoping_upper_odd_j{j}"),
                j,
                parity: "odd",
                lhs,
                rhs: upper,
                pass: lhs < upper,
            });
            verdicts.push(Verdict {
                name: format!("telescoping_lower_odd_j{j}"),
                j,
                parity: "odd",
                lhs,
                rhs: lower,
                pass: lhs > lower,
            });
        }
    }
    verdicts
}

/// Slack of the coarser window-endpoint bound minus slack of the sharper
/// telescoping bound; nonnegative when the window bound really is the
/// looser of the two.
pub fn bound_gap_report(
    traj: &LambdaTrajectory,
    schedule: &TimeSchedule,
    rate: &PiecewiseRate,
) -> Vec<Verdict> {
    let window = check_window_bounds(traj, schedule, rate);
    let tele = check_telescoping(traj, schedule, rate);
    let mut out = Vec::new();
    for j in 2..=schedule.jmax {
        let w = window.iter().find(|v| v.j == j).unwrap();
        let t = if j % 2 == 0 {
            tele.iter().find(|v| v.j == j && v.name.contains("upper")).unwrap()
        } else {
            tele.iter().find(|v| v.j == j && v.name.contains("lower")).unwrap()
        };
        // upper bounds: slack = rhs - lhs; lower bounds: slack = lhs - rhs
        let (ws, ts) = if j % 2 == 0 {
            (w.rhs - w.lhs, t.rhs - t.lhs)
        } else {
            (w.lhs - w.rhs, t.lhs - t.rhs)
        };
        out.push(Verdict {
            name: format!("bound_gap_j{j}"),
            j,
            parity: if j % 2 == 0 { "even" } else { "odd" },
            lhs: ws - ts,
            rhs: 0.0,
            pass: ws - ts >= 0.0,
        });
    }
    out
}

/// Verify the gap envelope and the sign-window identity along the stored
/// samples, to the stated tolerance.
pub fn check_sample_identities(
    traj: &LambdaTrajectory,
    schedule: &TimeSchedule,
    rate: &PiecewiseRate,
    tol: f64,
) -> Vec<Verdict> {
    let q1 = rate.q1;
    let alpha = 1.0 - schedule.beta;
    let mut worst_gap: f64 = f64::NEG_INFINITY;
    let mut worst_sign: f64 = 0.0;
    for s in &traj.samples {
        match s.branch {
            Branch::Gap(j) => {
                let ll_minus = traj.log_lambda_at_minus[j - 1];
                let p = schedule.log_tj[j - 1];
                let dm = schedule.delta_minus[j - 1];
                let d_here = dm + (schedule.delta_plus[j - 1] - dm) * s.frac;
                let bound = 2.0 * q1 * pow_anchored_diff(p, dm, d_here, alpha);
                worst_gap = worst_gap.max((s.log_lambda - ll_minus).abs() - bound);
            }
            Branch::Sign(j) => {
                let ll_plus = traj.log_lambda_at_plus[j - 1];
                let sign = if j % 2 == 1 { -1.0 } else { 1.0 };
                let main = sign * q1 * (s.tau.powf(alpha) - schedule.pow_plus(j, alpha));
                let defect = s.log_lambda - ll_plus - main - s.d_integral;
                worst_sign = worst_sign.max(defect.abs());
            }
            Branch::Matched => {}
        }
    }
    vec![
        Verdict {
            name: "gap_envelope_identity".into(),
            j: 0,
            parity: "all",
            lhs: worst_gap,
            rhs: tol,
            pass: worst_gap <= tol,
        },
        Verdict {
            name: "sign_window_identity".into(),
            j: 0,
            parity: "all",
            lhs: worst_sign,
            rhs: tol,
            pass: worst_sign <= tol,
        },
    ]
}

// ---------------------------------------------------------------------------
// synthetic outer field and the modulation projection
// ---------------------------------------------------------------------------

/// A field evaluated at (radius, log time).
pub trait OuterField {
    fn eval_at(&self, x: f64, log_t: f64) -> f64;
}

/// The admissible outer envelope: t^-1 (log t)^-beta' inside |x| < sqrt t,
/// |x|^-2 (log |x|^2)^-beta' outside. Both branches agree at the seam
/// |x| = sqrt t; `seam_ratio` records the measured ratio there.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticOuterField {
    pub beta_prime: f64,
}

impl SyntheticOuterField {
    pub fn new(beta_prime: f64) -> Result<Self> {
        if !(beta_prime > 1.0) {
            return Err(CoreError::Config(format!("beta_prime must exceed 1, got {beta_prime}")));
        }
        Ok(Self { beta_prime })
    }

    /// Ratio of the inner to the outer branch at the seam |x| = sqrt t.
    pub fn seam_ratio(&self, log_t: f64) -> f64 {
        let inner = (-log_t).exp() * log_t.powf(-self.beta_prime);
        let x = (0.5 * log_t).exp();
        let outer = x.powf(-2.0) * (2.0 * x.ln()).powf(-self.beta_prime);
        inner / outer
    }
}

impl OuterField for SyntheticOuterField {
    fn eval_at(&self, x: f64, log_t: f64) -> f64 {
        let log_x = if x > 0.0 { x.ln() } else { f64::NEG_INFINITY };
        if log_x < 0.5 * log_t {
            (-log_t).exp() * log_t.powf(-self.beta_prime)
        } else {
            (-2.0 * log_x).exp() * (2.0 * log_x).powf(-self.beta_prime)
        }
    }
}

/// A zero field, for linearity checks.
pub struct ZeroField;

impl OuterField for ZeroField {
    fn eval_at(&self, _x: f64, _log_t: f64) -> f64 {
        0.0
    }
}

/// Right-hand side of the modulation equation: the projection of the outer
/// field against the second Dirichlet eigenfunction,
/// -<2 Q w(lambda y, t), psi2> / <LambdaQ, psi2>, with r^5-weighted inner
/// products over the ball of radius `radius`.
pub fn modulation_rhs<F: OuterField>(
    field: &F,
    lambda: f64,
    log_t: f64,
    psi2: &EigenPair,
    radius: f64,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(CoreError::Config(format!("lambda must be positive, got {lambda}")));
    }
    if lambda.ln() + radius.ln() >= 0.5 * log_t {
        return Err(CoreError::Config(format!(
            "precondition lambda R < sqrt t violated: lambda = {lambda:.3e}, R = {radius}, \
             log t = {log_t:.3}"
        )));
    }
    let den = fixed_panels(0.0, radius, 64, &mut |y: f64| {
        crate::profiles::eval_lambda_q(y).unwrap() * psi2.psi.eval(y) * y.powi(5)
    });
    if den.abs() < 1e-10 {
        return Err(CoreError::Config(format!(
            "projection denominator <LambdaQ, psi2> = {den:.3e} is numerically zero; \
             the supplied eigenfunction is not the expected second mode"
        )));
    }
    let num = fixed_panels(0.0, radius, 64, &mut |y: f64| {
        2.0 * crate::profiles::eval_q(y).unwrap()
            * field.eval_at(lambda * y, log_t)
            * psi2.psi.eval(y)
            * y.powi(5)
    });
    Ok(-num / den)
}

// ---------------------------------------------------------------------------
// matched integration driven by tabulated b(t)
// ---------------------------------------------------------------------------

/// Table of t * theta(0, t) against tau = log t, interpolated linearly in
/// tau (the scaled values vary on the tau scale, so a reasonably fine
/// table keeps interpolation error negligible).
#[derive(Debug, Clone)]
pub struct ScaledBTable {
    taus: Vec<f64>,
    scaled: Vec<f64>,
}

impl ScaledBTable {
    pub fn new(taus: Vec<f64>, scaled: Vec<f64>) -> Result<Self> {
        if taus.len() != scaled.len() || taus.len() < 2 {
            return Err(CoreError::Config("b table needs matching arrays of length >= 2".into()));
        }
        if taus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::Config("b table times must be ascending".into()));
        }
        Ok(Self { taus, scaled })
    }

    /// Tabulate t * theta(0, t) from a datum by kernel quadrature,
    /// log-uniform in t.
    pub fn from_datum<D: RadialDatum>(
        datum: &D,
        tau_lo: f64,
        tau_hi: f64,
        n: usize,
    ) -> Result<Self> {
        if !(tau_hi > tau_lo) || n < 2 {
            return Err(CoreError::Config("need tau_hi > tau_lo and n >= 2".into()));
        }
        let taus: Vec<f64> =
            (0..n).map(|i| tau_lo + (tau_hi - tau_lo) * i as f64 / (n - 1) as f64).collect();
        let scaled = taus.iter().map(|&tau| theta_origin_scaled(datum, tau).value).collect();
        Self::new(taus, scaled)
    }

    /// t * b(t) at tau = log t.
    pub fn eval(&self, tau: f64) -> Result<f64> {
        if tau < self.taus[0] - 1e-12 || tau > *self.taus.last().unwrap() + 1e-12 {
            return Err(CoreError::Range(format!(
                "tau = {tau:.6} outside the tabulated window [{:.6}, {:.6}]",
                self.taus[0],
                self.taus.last().unwrap()
            )));
        }
        let i = match self.taus.binary_search_by(|t| t.partial_cmp(&tau).unwrap()) {
            Ok(i) => return Ok(self.scaled[i]),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.taus.len() - 2),
        };
        let w = (tau - self.taus[i]) / (self.taus[i + 1] - self.taus[i]);
        Ok(self.scaled[i] * (1.0 - w) + self.scaled[i + 1] * w)
    }

    pub fn tau_range(&self) -> (f64, f64) {
        (self.taus[0], *self.taus.last().unwrap())
    }
}

/// Integrate d(log lambda)/d tau = (5/4) * [t b(t)] (+ correction(tau))
/// over [tau_lo, tau_hi] by adaptive step-doubling RK4 in tau.
#[allow(clippy::too_many_arguments)]
pub fn integrate_matched(
    b: &ScaledBTable,
    correction: Option<&dyn Fn(f64) -> f64>,
    tau_lo: f64,
    tau_hi: f64,
    log_lambda0: f64,
    tol: f64,
) -> Result<LambdaTrajectory> {
    let (blo, bhi) = b.tau_range();
    if tau_lo < blo - 1e-12 || tau_hi > bhi + 1e-12 {
        return Err(CoreError::Range(format!(
            "integration window [{tau_lo:.4}, {tau_hi:.4}] not covered by the b table \
             [{blo:.4}, {bhi:.4}]"
        )));
    }
    let rate = |tau: f64| -> Result<f64> {
        let mut r = 1.25 * b.eval(tau.min(bhi).max(blo))?;
        if let Some(c) = correction {
            r += c(tau);
        }
        Ok(r)
    };
    let rk4 = |tau: f64, h: f64, y: f64| -> Result<f64> {
        let k1 = rate(tau)?;
        let k2 = rate(tau + 0.5 * h)?;
        let k3 = k2;
        let k4 = rate(tau + h)?;
        Ok(y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    };
    let mut samples = vec![TrajectorySample {
        tau: tau_lo,
        log_lambda: log_lambda0,
        branch: Branch::Matched,
        d_integral: 0.0,
    }];
    let mut tau = tau_lo;
    let mut y = log_lambda0;
    let mut h = (tau_hi - tau_lo) / 64.0;
    let mut guard = 0usize;
    while tau < tau_hi {
        guard += 1;
        if guard > 2_000_000 {
            return Err(CoreError::Numeric("matched integration exceeded its step budget".into()));
        }
        let h_step = h.min(tau_hi - tau);
        let full = rk4(tau, h_step, y)?;
        let half = rk4(tau + 0.5 * h_step, 0.5 * h_step, rk4(tau, 0.5 * h_step, y)?)?;
        let err = (full - half).abs();
        if err > tol && h_step > 1e-12 * (tau_hi - tau_lo) {
            h = 0.5 * h_step;
            continue;
        }
        tau += h_step;
        y = half;
        samples.push(TrajectorySample {
            tau,
            log_lambda: y,
            branch: Branch::Matched,
            d_integral: 0.0,
        });
        if err < 0.1 * tol {
            h = 1.5 * h_step;
        }
    }
    let traj = LambdaTrajectory {
        samples,
        window_d: Vec::new(),
        log_lambda_at_minus: Vec::new(),
        log_lambda_at_plus: Vec::new(),
    };
    traj.assert_finite()?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule16() -> TimeSchedule {
        TimeSchedule::new(16, 0.75, 5).unwrap()
    }

    fn rate_default() -> PiecewiseRate {
        PiecewiseRate::new(0.75, 1.0, 1.2).unwrap()
    }

    #[test]
    fn schedule_log_arithmetic() {
        let s = schedule16();
        // n1 = 16, beta = 3/4: p_1 = 16^4 = 65536
        assert_eq!(s.log_tj[0], 65536.0);
        let want = 65536.0 - 2.0 * (32768.0_f64).ln();
        assert!((s.log_tj_minus[0] - want).abs() < 1e-9);
        assert_eq!(s.log_ti, s.log_tj_minus[0]);
        for j in 0..s.jmax {
            assert!(s.log_tj_minus[j] < s.log_tj[j]);
            assert!(s.log_tj[j] < s.log_tj_plus[j]);
            if j + 1 < s.jmax {
                assert!(s.log_tj_plus[j] < s.log_tj_minus[j + 1]);
            }
        }
        assert!(TimeSchedule::new(3, 0.75, 5).is_err());
        assert!(TimeSchedule::new(16, 0.75, 9).is_err());
    }

    #[test]
    fn q1_value_at_three_quarters() {
        let r = rate_default();
        assert!((r.q1 - 0.625).abs() < 1e-12);
        assert!(PiecewiseRate::new(0.75, 1.0, 2.0).is_err()); // beta' outside (1, 1+beta)
    }

    #[test]
    fn unperturbed_increment_is_closed_form() {
        let s = schedule16();
        let r = PiecewiseRate::new(0.75, 0.0, 1.2).unwrap();
        let traj = integrate_piecewise(&s, &r, DChoice::Zero, GapChoice::Zero).unwrap();
        let pow = |tau: f64| tau.powf(0.25);
        let want = -r.q1 * (pow(s.log_tj_minus[1]) - pow(s.log_tj_plus[0]));
        let got = traj.log_lambda_at_minus[1] - traj.log_lambda_at_minus[0];
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn window_bounds_pass_for_all_d_choices() {
        let s = schedule16();
        let r = rate_default();
        for d in [
            DChoice::Zero,
            DChoice::EnvelopePlus,
            DChoice::EnvelopeMinus,
            DChoice::Random { seed: 7 },
        ] {
            let traj = integrate_piecewise(&s, &r, d, GapChoice::AlternatingEnvelope).unwrap();
            for v in check_window_bounds(&traj, &s, &r) {
                assert!(v.pass, "{} failed for {d:?}: lhs {} rhs {}", v.name, v.lhs, v.rhs);
            }
        }
    }

    #[test]
    fn telescoping_bounds_hold_with_zero_and_random_d() {
        let s = schedule16();
        let r = rate_default();
        let traj = integrate_piecewise(&s, &r, DChoice::Zero, GapChoice::Zero).unwrap();
        for v in check_telescoping(&traj, &s, &r) {
            assert!(v.pass, "{} failed: lhs {} rhs {}", v.name, v.lhs, v.rhs);
        }
        for seed in [1u64, 2, 3, 4, 5] {
            let traj = integrate_piecewise(
                &s,
                &r,
                DChoice::Random { seed },
                GapChoice::AlternatingEnvelope,
            )
            .unwrap();
            for v in check_telescoping(&traj, &s, &r) {
                assert!(v.pass, "{} failed at seed {seed}", v.name);
            }
        }
    }

    #[test]
    fn window_bound_is_coarser_than_telescoping() {
        let s = schedule16();
        let r = rate_default();
        let traj =
            integrate_piecewise(&s, &r, DChoice::EnvelopePlus, GapChoice::AlternatingEnvelope)
                .unwrap();
        for v in bound_gap_report(&traj, &s, &r) {
            assert!(v.pass, "{}: slack difference {}", v.name, v.lhs);
        }
    }

    #[test]
    fn sample_identities_hold_to_tolerance() {
        let s = schedule16();
        let r = rate_default();
        for d in [DChoice::EnvelopeMinus, DChoice::Random { seed: 42 }] {
            let traj = integrate_piecewise(&s, &r, d, GapChoice::Scaled(0.4)).unwrap();
            for v in check_sample_identities(&traj, &s, &r, 1e-10) {
                assert!(v.pass, "{}: worst defect {:.3e}", v.name, v.lhs);
            }
        }
    }

    #[test]
    fn endpoint_magnitudes_alternate_and_grow() {
        let s = schedule16();
        let r = rate_default();
        let traj = integrate_piecewise(&s, &r, DChoice::Zero, GapChoice::Zero).unwrap();
        let base = traj.log_lambda_at_minus[0];
        let mut prev_mag = 0.0;
        for j in 2..=s.jmax {
            let v = traj.log_lambda_at_minus[j - 1] - base;
            let expected_sign = if j % 2 == 0 { -1.0 } else { 1.0 };
            assert!(v * expected_sign > 0.0, "sign at j = {j}: {v}");
            assert!(v.abs() > 8.0 * prev_mag, "magnitude not growing geometrically at j = {j}");
            prev_mag = v.abs();
        }
    }

    #[test]
    fn seeded_random_is_bitwise_reproducible() {
        let s = schedule16();
        let r = rate_default();
        let a = integrate_piecewise(&s, &r, DChoice::Random { seed: 99 }, GapChoice::Zero).unwrap();
        let b = integrate_piecewise(&s, &r, DChoice::Random { seed: 99 }, GapChoice::Zero).unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        for (x, y) in a.samples.iter().zip(b.samples.iter()) {
            assert_eq!(x.log_lambda.to_bits(), y.log_lambda.to_bits());
        }
    }

    #[test]
    fn gap_fraction_outside_envelope_is_rejected() {
        let s = schedule16();
        let r = rate_default();
        let err = integrate_piecewise(&s, &r, DChoice::Zero, GapChoice::Scaled(1.5));
        assert!(matches!(err, Err(CoreError::Config(_))));
    }

    #[test]
    fn matched_integration_recovers_closed_form() {
        // t b(t) = -A1 tau^-beta exactly: log lambda drops by q1 Delta(tau^{1/4})
        let beta = 0.75;
        let taus: Vec<f64> = (0..2000).map(|i| 100.0 + 0.1 * i as f64).collect();
        let scaled: Vec<f64> = taus.iter().map(|&t| -0.125 * t.powf(-beta)).collect();
        let table = ScaledBTable::new(taus, scaled).unwrap();
        let traj = integrate_matched(&table, None, 100.0, 280.0, 0.0, 1e-12).unwrap();
        let q1 = 0.625;
        let want = -q1 * (280.0_f64.powf(0.25) - 100.0_f64.powf(0.25));
        let got = traj.log_lambda_end();
        assert!((got - want).abs() < 1e-7, "{got} vs {want}");
    }

    #[test]
    fn matched_integration_respects_envelope_rate() {
        // |t b| <= 2 A1 tau^-beta implies |dloglambda/dtau| <= (5/2) A1 tau^-beta
        let beta = 0.75;
        let taus: Vec<f64> = (0..1000).map(|i| 50.0 + 0.1 * i as f64).collect();
        let scaled: Vec<f64> =
            taus.iter().map(|&t| 2.0 * 0.125 * t.powf(-beta) * (0.3 * t).sin()).collect();
        let table = ScaledBTable::new(taus, scaled).unwrap();
        let traj = integrate_matched(&table, None, 50.0, 140.0, 0.0, 1e-10).unwrap();
        for w in traj.samples.windows(2) {
            let dt = w[1].tau - w[0].tau;
            if dt < 1e-9 {
                continue;
            }
            let rate = (w[1].log_lambda - w[0].log_lambda) / dt;
            let bound = 2.5 * 0.125 * w[0].tau.powf(-beta);
            assert!(rate.abs() <= bound * (1.0 + 1e-6), "rate {rate} vs bound {bound}");
        }
    }

    #[test]
    fn matched_integration_requires_coverage() {
        let table = ScaledBTable::new(vec![10.0, 20.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            integrate_matched(&table, None, 5.0, 15.0, 0.0, 1e-10),
            Err(CoreError::Range(_))
        ));
    }

    #[test]
    fn synthetic_field_seam_is_continuous() {
        let w = SyntheticOuterField::new(1.2).unwrap();
        let ratio = w.seam_ratio(40.0);
        assert!((ratio - 1.0).abs() < 1e-12, "seam ratio {ratio}");
        // inside the seam the field is constant in x
        let a = w.eval_at(1.0, 40.0);
        let b = w.eval_at(100.0, 40.0);
        assert_eq!(a, b);
    }
}
