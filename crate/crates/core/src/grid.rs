//! Radial grids, finite-difference weights and the f = √r·a substitution.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{simpson_weights, trapezoid_weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Uniform,
    Log,
}

/// `n` nodes from `r_min` to `r_max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
    pub spacing: Spacing,
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, n: usize, spacing: Spacing) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "radial grid needs 0 < r_min < r_max < ∞, got [{r_min}, {r_max}]"
            )));
        }
        if n < 16 {
            return Err(Error::InvalidArgument(format!("radial grid needs n ≥ 16 nodes, got {n}")));
        }
        Ok(Self { r_min, r_max, n, spacing })
    }

    pub fn uniform(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        Self::new(r_min, r_max, n, Spacing::Uniform)
    }

    pub fn log(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        Self::new(r_min, r_max, n, Spacing::Log)
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = self.n;
        let last = (n - 1) as f64;
        let mut r: Vec<f64> = match self.spacing {
            Spacing::Uniform => {
                let h = (self.r_max - self.r_min) / last;
                (0..n).map(|i| self.r_min + h * i as f64).collect()
            }
            Spacing::Log => {
                let q = (self.r_max / self.r_min).ln() / last;
                (0..n).map(|i| self.r_min * (q * i as f64).exp()).collect()
            }
        };
        r[n - 1] = self.r_max;
        r
    }

    /// Quadrature weights for ∫ g(r) dr on the nodes: composite Simpson in
    /// r (uniform) or in ln r (log spacing).
    pub fn weights(&self) -> Vec<f64> {
        let r = self.nodes();
        match self.spacing {
            Spacing::Uniform => {
                let h = (self.r_max - self.r_min) / (self.n - 1) as f64;
                simpson_weights(self.n, h).unwrap_or_else(|_| trapezoid_weights(&r))
            }
            Spacing::Log => {
                let q = (self.r_max / self.r_min).ln() / (self.n - 1) as f64;
                let w = simpson_weights(self.n, q).unwrap_or_else(|_| trapezoid_weights(&r));
                w.iter().zip(&r).map(|(w, r)| w * r).collect()
            }
        }
    }

    /// ‖a‖² in L²(r dr).
    pub fn norm_sq_rdr(&self, a: &[C64]) -> f64 {
        let r = self.nodes();
        self.weights().iter().zip(&r).zip(a).map(|((w, r), a)| w * r * a.norm_sqr()).sum()
    }

    /// ‖f‖² in L²(dr).
    pub fn norm_sq_dr(&self, f: &[C64]) -> f64 {
        self.weights().iter().zip(f).map(|(w, f)| w * f.norm_sqr()).sum()
    }

    /// f = √r·a.
    pub fn substitute(&self, a: &[C64]) -> Vec<C64> {
        self.nodes().iter().zip(a).map(|(r, a)| a * r.sqrt()).collect()
    }

    /// a = f/√r.
    pub fn unsubstitute(&self, f: &[C64]) -> Vec<C64> {
        self.nodes().iter().zip(f).map(|(r, f)| f / r.sqrt()).collect()
    }

    /// Derivative of samples on the nodes with a 7-point stencil (sixth
    /// order; one-sided near the ends).
    pub fn derivative(&self, f: &[C64]) -> Result<Vec<C64>> {
        derivative(&self.nodes(), f, 7)
    }
}

/// Fornberg's recursion for finite-difference weights of the first
/// `m`-th derivatives at `z` from nodes `x`. Returns weights for derivative
/// order `m`.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

/// First derivative on arbitrary increasing nodes with `width`-point
/// stencils, centred where possible.
pub fn derivative(x: &[f64], f: &[C64], width: usize) -> Result<Vec<C64>> {
    let n = x.len();
    if f.len() != n {
        return Err(Error::InvalidArgument("sample and node counts differ".into()));
    }
    if n < width || width < 2 {
        return Err(Error::InvalidArgument(format!("need at least {width} nodes for the stencil")));
    }
    let half = width / 2;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let start = i.saturating_sub(half).min(n - width);
        let w = fornberg_weights(x[i], &x[start..start + width], 1);
        out.push(w.iter().zip(&f[start..start + width]).map(|(w, f)| f * *w).sum());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(RadialGrid::uniform(0.0, 1.0, 32).is_err());
        assert!(RadialGrid::uniform(1.0, 0.5, 32).is_err());
        assert!(RadialGrid::uniform(0.1, 1.0, 15).is_err());
    }

    #[test]
    fn nodes_are_increasing() {
        for g in [RadialGrid::uniform(0.01, 3.0, 40).unwrap(), RadialGrid::log(1e-4, 30.0, 64).unwrap()] {
            let r = g.nodes();
            assert_eq!(r.len(), g.n);
            assert!(r.windows(2).all(|w| w[1] > w[0]));
            assert_eq!(r[0], g.r_min);
            assert_eq!(r[g.n - 1], g.r_max);
        }
    }

    #[test]
    fn substitution_preserves_norm() {
        let g = RadialGrid::log(1e-3, 10.0, 200).unwrap();
        let a: Vec<C64> = g.nodes().iter().map(|r| C64::new((-r).exp(), r.sin())).collect();
        let f = g.substitute(&a);
        let (na, nf) = (g.norm_sq_rdr(&a), g.norm_sq_dr(&f));
        assert!((na - nf).abs() <= 1e-12 * na);
        let back = g.unsubstitute(&f);
        assert!(back.iter().zip(&a).all(|(x, y)| (x - y).norm() < 1e-14));
    }

    #[test]
    fn sixth_order_derivative() {
        let g = RadialGrid::log(1e-2, 5.0, 400).unwrap();
        let f: Vec<C64> = g.nodes().iter().map(|r| C64::new(r.sin(), r * r)).collect();
        let d = g.derivative(&f).unwrap();
        let err = g
            .nodes()
            .iter()
            .zip(&d)
            .map(|(r, d)| (d - C64::new(r.cos(), 2.0 * r)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn log_weights_integrate() {
        let g = RadialGrid::log(1e-3, 2.0, 301).unwrap();
        let v: f64 = g.weights().iter().zip(g.nodes()).map(|(w, r)| w * r * r).sum();
        assert!((v - (8.0 - 1e-9) / 3.0).abs() < 1e-6);
    }
}
