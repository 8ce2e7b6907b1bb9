//! Radial Dirichlet eigenvalue problem for the linearized operator on B_R.
//!
//! The problem -H psi = mu psi on the ball of radius R, with psi radial,
//! regular at the origin and vanishing at R, is reduced to a symmetric
//! tridiagonal matrix through the substitution w = r^{5/2} psi, which turns
//! the radial operator into a Schroedinger form with effective potential
//! 15/(4 r^2) - V(r) and natural condition w(0) = 0. Eigenvalues come from
//! Sturm-sequence bisection, eigenvectors from shifted inverse iteration.

use crate::error::{CoreError, Result};
use crate::grid::RadialProfile;
use crate::profiles::eval_v;

/// Coefficient of the centrifugal term produced by w = r^{(n-1)/2} u at
/// n = 6: (n-1)(n-3)/4.
pub const CENTRIFUGAL: f64 = 15.0 / 4.0;

/// Symmetric tridiagonal discretization of -H on B_R in the r^5-weighted
/// space (uniform step; second-order accurate).
#[derive(Debug, Clone)]
pub struct DirichletOperator {
    radius: f64,
    /// Interior nodes r_i = i h, i = 1..=N.
    nodes: Vec<f64>,
    /// Main diagonal of the symmetric matrix.
    diag: Vec<f64>,
    /// Off diagonal (length N-1).
    off: f64,
    step: f64,
}

/// An eigenvalue with its eigenfunction, normalized so psi(0) = 1.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub mu: f64,
    pub psi: RadialProfile,
}

impl DirichletOperator {
    /// Uniform-grid discretization with `n` interior nodes; requires at
    /// least 20 nodes per unit radius so the core is resolved.
    pub fn discretize(radius: f64, n: usize) -> Result<Self> {
        if radius < 5.0 {
            return Err(CoreError::Config(format!("radius must be >= 5, got {radius}")));
        }
        if n < 500 {
            return Err(CoreError::Config(format!("node count must be >= 500, got {n}")));
        }
        if (n as f64) < 20.0 * radius {
            return Err(CoreError::Config(format!(
                "{n} nodes give fewer than 20 nodes per unit radius near the origin for R = {radius}"
            )));
        }
        let h = radius / (n + 1) as f64;
        let nodes: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
        let diag: Vec<f64> = nodes
            .iter()
            .map(|&r| 2.0 / (h * h) + CENTRIFUGAL / (r * r) - eval_v(r).unwrap())
            .collect();
        Ok(Self { radius, nodes, diag, off: -1.0 / (h * h), step: h })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Apply the operator to samples of a radial function u (given at the
    /// interior nodes, with u(0) finite and u(R) from the supplied closure),
    /// returning -H u at each interior node. Used for smoke checks against
    /// functions with known images under H.
    pub fn apply<F: Fn(f64) -> f64>(&self, u: F) -> Vec<f64> {
        let n = self.nodes.len();
        let h = self.step;
        let mut out = vec![0.0; n];
        let w = |r: f64| -> f64 {
            if r <= 0.0 {
                0.0
            } else {
                r.powf(2.5) * u(r)
            }
        };
        for i in 0..n {
            let r = self.nodes[i];
            let wl = if i == 0 { w(r - h) } else { w(self.nodes[i - 1]) };
            let wr = if i + 1 == n { w(r + h) } else { w(self.nodes[i + 1]) };
            let lap = (wl - 2.0 * w(r) + wr) / (h * h);
            out[i] = (-lap + (CENTRIFUGAL / (r * r) - eval_v(r).unwrap()) * w(r)) / r.powf(2.5);
        }
        out
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    fn count_below(&self, x: f64) -> usize {
        let n = self.diag.len();
        let off2 = self.off * self.off;
        let mut count = 0usize;
        let mut d = self.diag[0] - x;
        if d < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let denom = if d.abs() < 1e-300 { 1e-300_f64.copysign(d) } else { d };
            d = self.diag[i] - x - off2 / denom;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// First `k` eigenpairs, ordered, with psi normalized to psi(0) = 1 by
    /// quadratic extrapolation (in r^2) from the three smallest nodes.
    pub fn eig(&self, k: usize) -> Result<Vec<EigenPair>> {
        if k > 10 {
            return Err(CoreError::Config(format!("at most 10 eigenpairs supported, got {k}")));
        }
        let n = self.diag.len();
        // Gershgorin bounds
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let spread = if i == 0 || i + 1 == n { self.off.abs() } else { 2.0 * self.off.abs() };
            lo = lo.min(self.diag[i] - spread);
            hi = hi.max(self.diag[i] + spread);
        }
        let mut pairs = Vec::with_capacity(k);
        for j in 0..k {
            let mu = self.bisect_eigenvalue(j, lo, hi);
            let w = self.inverse_iteration(mu)?;
            pairs.push(self.pair_from_vector(mu, &w)?);
        }
        // near-degenerate vectors from inverse iteration may lose mutual
        // orthogonality; restore it in the discrete L^2(w) inner product
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
        for (j, p) in pairs.iter().enumerate() {
            let mut w: Vec<f64> = self
                .nodes
                .iter()
                .map(|&r| p.psi.eval(r) * r.powf(2.5))
                .collect();
            for prev in vectors.iter().take(j) {
                let c = dot(&w, prev) / dot(prev, prev);
                for (wi, pi) in w.iter_mut().zip(prev.iter()) {
                    *wi -= c * pi;
                }
            }
            vectors.push(w);
        }
        for (j, w) in vectors.iter().enumerate() {
            pairs[j] = self.pair_from_vector(pairs[j].mu, w)?;
        }
        Ok(pairs)
    }

    fn bisect_eigenvalue(&self, index: usize, mut lo: f64, mut hi: f64) -> f64 {
        // eigenvalue #index (0-based): smallest x with count_below(x) > index
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
            if (hi - lo) < 1e-13 * hi.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn inverse_iteration(&self, mu: f64) -> Result<Vec<f64>> {
        let n = self.diag.len();
        let shift = mu + 1e-11 * (1.0 + mu.abs());
        let mut v: Vec<f64> = self
            .nodes
            .iter()
            .map(|&r| (r / self.radius * std::f64::consts::PI).sin())
            .collect();
        normalize(&mut v);
        let mut last_residual = f64::INFINITY;
        for iter in 0..60 {
            let mut w = self.solve_shifted(shift, &v)?;
            normalize(&mut w);
            // residual |(A - mu) w|
            let mut res: f64 = 0.0;
            for i in 0..n {
                let mut aw = (self.diag[i] - mu) * w[i];
                if i > 0 {
                    aw += self.off * w[i - 1];
                }
                if i + 1 < n {
                    aw += self.off * w[i + 1];
                }
                res = res.max(aw.abs());
            }
            v = w;
            if res < 1e-9 * (1.0 + mu.abs()) {
                return Ok(v);
            }
            last_residual = res;
            let _ = iter;
        }
        Err(CoreError::Numeric(format!(
            "inverse iteration did not converge after 60 iterations (residual {last_residual:.3e})"
        )))
    }

    /// Thomas solve of (A - shift) x = b with partial regularization.
    fn solve_shifted(&self, shift: f64, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0] - shift;
        if denom.abs() < 1e-12 {
            denom = 1e-12;
        }
        c[0] = self.off / denom;
        d[0] = b[0] / denom;
        for i in 1..n {
            let mut m = self.diag[i] - shift - self.off * c[i - 1];
            if m.abs() < 1e-300 {
                m = 1e-300_f64.copysign(m);
            }
            c[i] = self.off / m;
            d[i] = (b[i] - self.off * d[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::Numeric("shifted tridiagonal solve produced non-finite values".into()));
        }
        Ok(x)
    }

    fn pair_from_vector(&self, mu: f64, w: &[f64]) -> Result<EigenPair> {
        // psi = w / r^{5/2}; extrapolate quadratically (in r^2) to r = 0
        let psi: Vec<f64> = self
            .nodes
            .iter()
            .zip(w.iter())
            .map(|(&r, &wi)| wi / r.powf(2.5))
            .collect();
        let (r0, r1, r2) = (self.nodes[0], self.nodes[1], self.nodes[2]);
        let (x0, x1, x2) = (r0 * r0, r1 * r1, r2 * r2);
        let (y0, y1, y2) = (psi[0], psi[1], psi[2]);
        // Lagrange at x = 0
        let at0 = y0 * (x1 * x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (x0 * x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (x0 * x1) / ((x2 - x0) * (x2 - x1));
        if at0.abs() < 1e-300 {
            return Err(CoreError::Numeric("eigenfunction vanishes at the origin; cannot normalize".into()));
        }
        let mut grid = Vec::with_capacity(self.nodes.len() + 1);
        let mut vals = Vec::with_capacity(self.nodes.len() + 1);
        grid.push(0.0);
        vals.push(1.0);
        for (&r, &p) in self.nodes.iter().zip(psi.iter()) {
            grid.push(r);
            vals.push(p / at0);
        }
        Ok(EigenPair { mu, psi: RadialProfile::new(grid, vals)? })
    }

    /// Discrete r^5-weighted inner product of two eigenfunctions.
    pub fn inner_product(&self, a: &EigenPair, b: &EigenPair) -> f64 {
        let h = self.step;
        self.nodes
            .iter()
            .map(|&r| a.psi.eval(r) * b.psi.eval(r) * r.powi(5) * h)
            .sum()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// One row of the scaling report.
#[derive(Debug, Clone)]
pub struct ScalingRow {
    pub radius: f64,
    pub n: usize,
    pub mu1: f64,
    /// mu2 * R^4 (n - 2 = 4 at n = 6)
    pub mu2_r4: f64,
    /// mu3 * R^3 (n / 2 = 3 at n = 6)
    pub mu3_r3: f64,
    /// fitted exponent of psi1 decay after removing the exponential factor
    pub psi1_decay_fit: f64,
    /// fitted power-law exponent of psi2 decay
    pub psi2_decay_fit: f64,
}

/// Eigenvalue scaling survey across ball radii. `n_per_r` nodes are used
/// per unit radius (so N = n_per_r * R for each row).
pub fn scaling_report(radii: &[f64], n_per_r: usize) -> Result<Vec<ScalingRow>> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CoreError::Config("radii must be ascending".into()));
    }
    if radii.iter().any(|&r| r < 10.0) {
        return Err(CoreError::Config("each radius must be >= 10".into()));
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &radius in radii {
        let n = (n_per_r as f64 * radius).round() as usize;
        let op = DirichletOperator::discretize(radius, n)?;
        let pairs = op.eig(3)?;
        let (mu1, mu2, mu3) = (pairs[0].mu, pairs[1].mu, pairs[2].mu);

        // psi1 ~ (1+r)^p e^{-r sqrt(-mu1)}: fit p over (5, R/2)
        let root = (-mu1).max(0.0).sqrt();
        let psi1_fit = fit_power(&pairs[0], 5.0, radius / 2.0, |r, v| {
            (v.abs().max(1e-280)).ln() + root * r
        });
        // psi2 ~ (1+r)^p: fit p over (5, R/2)
        let psi2_fit = fit_power(&pairs[1], 5.0, radius / 2.0, |_, v| (v.abs().max(1e-280)).ln());

        rows.push(ScalingRow {
            radius,
            n,
            mu1,
            mu2_r4: mu2 * radius.powi(4),
            mu3_r3: mu3 * radius.powi(3),
            psi1_decay_fit: psi1_fit,
            psi2_decay_fit: psi2_fit,
        });
    }
    Ok(rows)
}

fn fit_power<F: Fn(f64, f64) -> f64>(pair: &EigenPair, r_lo: f64, r_hi: f64, transform: F) -> f64 {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..=32 {
        let r = r_lo * (r_hi / r_lo).powf(i as f64 / 32.0);
        xs.push((1.0 + r).ln());
        ys.push(transform(r, pair.psi.eval(r)));
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::eval_lambda_q;

    #[test]
    fn constructor_contract() {
        let op = DirichletOperator::discretize(20.0, 4000).unwrap();
        assert_eq!(op.node_count(), 4000);
        assert!(DirichletOperator::discretize(20.0, 300).is_err());
        assert!(DirichletOperator::discretize(50.0, 600).is_err()); // < 20 nodes per unit radius
    }

    #[test]
    fn sign_structure_and_first_eigenvalues() {
        let op = DirichletOperator::discretize(20.0, 2000).unwrap();
        let pairs = op.eig(3).unwrap();
        assert!(pairs[0].mu < 0.0, "mu1 = {}", pairs[0].mu);
        assert!(pairs[1].mu > 0.0, "mu2 = {}", pairs[1].mu);
        assert!(pairs[1].mu <= pairs[2].mu);
        // psi1 positive on (0, R)
        for i in 0..200 {
            let r = 0.1 + i as f64 * 0.099;
            assert!(pairs[0].psi.eval(r) > 0.0, "psi1({r}) <= 0");
        }
        // psi(0) = 1 normalization
        assert_eq!(pairs[0].psi.eval(0.0), 1.0);
        assert_eq!(pairs[1].psi.eval(0.0), 1.0);
    }

    #[test]
    fn mu1_converges_in_radius() {
        let mut mus = Vec::new();
        for &(r, n) in &[(10.0, 1000), (20.0, 2000), (40.0, 4000)] {
            let op = DirichletOperator::discretize(r, n).unwrap();
            mus.push(op.eig(1).unwrap()[0].mu);
        }
        for w in mus.windows(2) {
            assert!((w[1] - w[0]).abs() / w[0].abs() < 0.02, "mu1 sequence {mus:?}");
        }
    }

    #[test]
    fn operator_annihilates_lambda_q_in_the_interior() {
        let op = DirichletOperator::discretize(20.0, 4000).unwrap();
        let res = op.apply(|r| eval_lambda_q(r).unwrap());
        let h = op.step();
        // away from the Dirichlet end (LambdaQ is not Dirichlet at R)
        let mut worst: f64 = 0.0;
        for (i, &r) in op.nodes().iter().enumerate() {
            if r > 1.0 && r < 10.0 {
                worst = worst.max(res[i].abs());
            }
        }
        assert!(worst < 40.0 * h * h, "interior residual {worst:.3e} at h = {h:.3e}");
    }

    #[test]
    fn operator_apply_is_finite_on_tail_test_function() {
        let op = DirichletOperator::discretize(20.0, 1000).unwrap();
        let res = op.apply(|r| (std::f64::consts::PI * r / 20.0).sin() / (r * r));
        assert!(res.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn eigenfunctions_are_orthogonal() {
        let op = DirichletOperator::discretize(15.0, 1500).unwrap();
        let pairs = op.eig(4).unwrap();
        for i in 0..pairs.len() {
            for j in (i + 1)..pairs.len() {
                let ip = op.inner_product(&pairs[i], &pairs[j]);
                let ni = op.inner_product(&pairs[i], &pairs[i]);
                let nj = op.inner_product(&pairs[j], &pairs[j]);
                assert!(
                    ip.abs() / (ni * nj).sqrt() < 1e-8,
                    "<psi{i}, psi{j}> = {ip:.3e}"
                );
            }
        }
    }

    #[test]
    fn domain_monotonicity_of_eigenvalues() {
        let small = DirichletOperator::discretize(10.0, 1000).unwrap().eig(3).unwrap();
        let large = DirichletOperator::discretize(20.0, 2000).unwrap().eig(3).unwrap();
        for j in 0..3 {
            assert!(
                large[j].mu <= small[j].mu + 1e-12,
                "mu{j}: {} vs {}",
                large[j].mu,
                small[j].mu
            );
        }
    }

    #[test]
    fn mu1_grid_convergence_is_second_order() {
        let r = 20.0;
        let mu = |n: usize| DirichletOperator::discretize(r, n).unwrap().eig(1).unwrap()[0].mu;
        let (a, b, c) = (mu(1000), mu(2000), mu(4000));
        let coarse = (a - b).abs();
        let fine = (b - c).abs();
        assert!(coarse <= 4.4 * fine, "diffs {coarse:.3e} vs {fine:.3e}");
        assert!(coarse >= 2.5 * fine, "diffs {coarse:.3e} vs {fine:.3e}");
    }

    #[test]
    fn psi1_exponential_bound() {
        let op = DirichletOperator::discretize(20.0, 2000).unwrap();
        let p1 = &op.eig(1).unwrap()[0];
        let root = (-p1.mu).sqrt();
        // log psi1 + r sqrt(-mu1) bounded above on (5, R/2)
        let mut sup = f64::NEG_INFINITY;
        for i in 0..50 {
            let r = 5.0 + i as f64 * 0.1;
            sup = sup.max(p1.psi.eval(r).abs().ln() + root * r);
        }
        assert!(sup < 2.0, "exponential bound violated: sup = {sup}");
    }
}
