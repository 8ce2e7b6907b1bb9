//! Sampled radial functions and the graded grids they live on.

use crate::error::{CoreError, Result};
use std::io::Write;

/// A radial function sampled on an ascending grid, with optional nodal
/// derivatives. Evaluation between nodes uses cubic Hermite interpolation
/// when derivatives are stored and a local cubic Lagrange fit otherwise;
/// either way the rule is deterministic and C^0.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: Vec<f64>,
    values: Vec<f64>,
    derivs: Option<Vec<f64>>,
}

impl RadialProfile {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::validate(&grid, &values)?;
        Ok(Self { grid, values, derivs: None })
    }

    /// Profile with stored derivative samples (enables Hermite evaluation).
    pub fn with_derivatives(grid: Vec<f64>, values: Vec<f64>, derivs: Vec<f64>) -> Result<Self> {
        Self::validate(&grid, &values)?;
        if derivs.len() != grid.len() {
            return Err(CoreError::Config(format!(
                "derivative count {} does not match grid size {}",
                derivs.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, derivs: Some(derivs) })
    }

    fn validate(grid: &[f64], values: &[f64]) -> Result<()> {
        if grid.len() < 4 {
            return Err(CoreError::Config("profile needs at least 4 nodes".into()));
        }
        if grid.len() != values.len() {
            return Err(CoreError::Config(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if grid[0] < 0.0 {
            return Err(CoreError::Config("grid must start at r >= 0".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::Config("grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::Config("profile values must be finite".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> Option<&[f64]> {
        self.derivs.as_deref()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.grid[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Index of the last node `<= r` (clamped to a valid cell).
    fn cell_of(&self, r: f64) -> usize {
        match self.grid.binary_search_by(|g| g.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(self.grid.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.grid.len() - 2),
        }
    }

    /// Evaluate at radius `r`. Outside the grid the value is clamped to the
    /// nearest endpoint sample; callers that need strict coverage should
    /// check [`RadialProfile::covers`] first.
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.grid[0] {
            return self.values[0];
        }
        if r >= self.r_max() {
            return *self.values.last().unwrap();
        }
        let i = self.cell_of(r);
        match &self.derivs {
            Some(d) => hermite(self.grid[i], self.grid[i + 1], self.values[i], self.values[i + 1], d[i], d[i + 1], r),
            None => self.lagrange4(i, r),
        }
    }

    /// Derivative at radius `r` (Hermite slope when derivatives are stored,
    /// otherwise the derivative of the local cubic fit).
    pub fn eval_deriv(&self, r: f64) -> f64 {
        let r = r.clamp(self.grid[0], self.r_max());
        let i = self.cell_of(r);
        match &self.derivs {
            Some(d) => {
                hermite_deriv(self.grid[i], self.grid[i + 1], self.values[i], self.values[i + 1], d[i], d[i + 1], r)
            }
            None => self.lagrange4_deriv(i, r),
        }
    }

    pub fn covers(&self, r: f64) -> bool {
        r >= self.grid[0] && r <= self.r_max()
    }

    /// Cubic Lagrange through the 4 nodes around cell `i`.
    fn stencil4(&self, i: usize) -> usize {
        let n = self.grid.len();
        if i == 0 {
            0
        } else if i + 2 >= n {
            n - 4
        } else {
            i - 1
        }
    }

    fn lagrange4(&self, i: usize, r: f64) -> f64 {
        let s = self.stencil4(i);
        let x = &self.grid[s..s + 4];
        let y = &self.values[s..s + 4];
        let mut acc = 0.0;
        for j in 0..4 {
            let mut l = y[j];
            for k in 0..4 {
                if k != j {
                    l *= (r - x[k]) / (x[j] - x[k]);
                }
            }
            acc += l;
        }
        acc
    }

    fn lagrange4_deriv(&self, i: usize, r: f64) -> f64 {
        let s = self.stencil4(i);
        let x = &self.grid[s..s + 4];
        let y = &self.values[s..s + 4];
        let mut acc = 0.0;
        for j in 0..4 {
            let mut dsum = 0.0;
            for m in 0..4 {
                if m == j {
                    continue;
                }
                let mut prod = 1.0 / (x[j] - x[m]);
                for k in 0..4 {
                    if k != j && k != m {
                        prod *= (r - x[k]) / (x[j] - x[k]);
                    }
                }
                dsum += prod;
            }
            acc += y[j] * dsum;
        }
        acc
    }

    /// Write the profile as CSV (`r,value` header, 17 significant digits).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,value")?;
        for (r, v) in self.grid.iter().zip(self.values.iter()) {
            writeln!(out, "{:.16e},{:.16e}", r, v)?;
        }
        Ok(())
    }
}

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, r: f64) -> f64 {
    let h = x1 - x0;
    let s = (r - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
        + d0 * h * (s3 - 2.0 * s2 + s)
        + y1 * (-2.0 * s3 + 3.0 * s2)
        + d1 * h * (s3 - s2)
}

fn hermite_deriv(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, r: f64) -> f64 {
    let h = x1 - x0;
    let s = (r - x0) / h;
    let s2 = s * s;
    (y0 * (6.0 * s2 - 6.0 * s) + d0 * h * (3.0 * s2 - 4.0 * s + 1.0)
        + y1 * (-6.0 * s2 + 6.0 * s)
        + d1 * h * (3.0 * s2 - 2.0 * s))
        / h
}

/// Geometric grid `r_i = r_min * rho^i`, with `rho` chosen so that `n` nodes
/// reach `r_max`. Uniform in log r, which is what the profile builders and
/// the backward ODE integration both want.
pub fn geometric_grid(r_min: f64, r_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(CoreError::Config("need 0 < r_min < r_max".into()));
    }
    if n < 8 {
        return Err(CoreError::Config("geometric grid needs at least 8 nodes".into()));
    }
    let step = (r_max / r_min).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| r_min * (step * i as f64).exp()).collect())
}

/// Grid used by the time-dependent solver: a uniform zone of spacing `h0`
/// near the origin (starting at r = 0), blended into a geometric zone with
/// ratio `1 + growth` out to `r_max`. `refine = 2` halves both `h0` and
/// `growth`, which is what makes grid-halving studies second order.
pub fn sim_grid(h0: f64, growth: f64, r_max: f64, refine: u32) -> Result<Vec<f64>> {
    if !(h0 > 0.0 && growth > 0.0 && r_max > 10.0 * h0) {
        return Err(CoreError::Config("sim grid needs h0 > 0, growth > 0, r_max > 10 h0".into()));
    }
    let f = f64::from(refine.max(1));
    let h0 = h0 / f;
    let growth = growth / f;
    let r_uniform = h0 / growth;
    let mut grid = vec![0.0];
    let mut r = 0.0;
    while r < r_uniform && r < r_max {
        r += h0;
        grid.push(r);
    }
    while r < r_max {
        r *= 1.0 + growth;
        grid.push(r);
    }
    if grid.len() < 16 {
        return Err(CoreError::Config("sim grid degenerate: fewer than 16 nodes".into()));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubic_exactly() {
        let f = |x: f64| 2.0 * x * x * x - x * x + 3.0;
        let fp = |x: f64| 6.0 * x * x - 2.0 * x;
        let grid: Vec<f64> = (0..10).map(|i| 0.3 * i as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        let ders: Vec<f64> = grid.iter().map(|&x| fp(x)).collect();
        let p = RadialProfile::with_derivatives(grid, vals, ders).unwrap();
        for &x in &[0.11, 0.77, 1.93, 2.5] {
            assert!((p.eval(x) - f(x)).abs() < 1e-12);
            assert!((p.eval_deriv(x) - fp(x)).abs() < 1e-11);
        }
    }

    #[test]
    fn lagrange_fallback_is_fourth_order() {
        let f = |x: f64| (1.5 * x).sin();
        let grid: Vec<f64> = (0..200).map(|i| 0.02 * i as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        let p = RadialProfile::new(grid, vals).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..400 {
            let x = 0.005 + i as f64 * 0.0099;
            worst = worst.max((p.eval(x) - f(x)).abs());
        }
        assert!(worst < 5e-8, "worst = {worst:.3e}");
    }

    #[test]
    fn rejects_non_monotone_grid() {
        let err = RadialProfile::new(vec![0.0, 1.0, 1.0, 2.0], vec![0.0; 4]);
        assert!(err.is_err());
    }

    #[test]
    fn sim_grid_spacing_is_continuous_at_the_blend() {
        let g = sim_grid(0.02, 0.02, 50.0, 1).unwrap();
        let spacings: Vec<f64> = g.windows(2).map(|w| w[1] - w[0]).collect();
        for w in spacings.windows(2) {
            assert!(w[1] / w[0] < 1.05, "spacing jump {} -> {}", w[0], w[1]);
            assert!(w[1] / w[0] > 0.95);
        }
        assert!(*g.last().unwrap() >= 50.0);
    }
}
