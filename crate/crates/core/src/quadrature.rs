//! Quadrature rules: adaptive tanh-sinh, Gauss–Legendre and composite
//! rules for sampled data.

use std::f64::consts::FRAC_PI_2;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const MAX_LEVEL: usize = 9;
const T_MAX: f64 = 6.5;
const MAX_DEPTH: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// One tanh-sinh estimate sequence on [a, b]. Returns the last estimate,
/// its error estimate and whether the tolerance was met.
fn tanh_sinh_panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> (f64, f64, bool, usize) {
    let half = 0.5 * (b - a);
    let width = b - a;
    let mut evals = 0;
    let node = |t: f64, f: &mut F, evals: &mut usize| -> Option<f64> {
        let s = t.sinh();
        let u = FRAC_PI_2 * s;
        let ch = u.cosh();
        let w = half * FRAC_PI_2 * t.cosh() / (ch * ch);
        if !(w > 0.0) || !w.is_finite() {
            return None;
        }
        // distance from the nearer endpoint, computed without cancellation
        let x = if u < 0.0 {
            let d = width / (1.0 + (-2.0 * u).exp());
            if d <= 0.0 || a + d == a {
                return None;
            }
            a + d
        } else {
            let d = width / (1.0 + (2.0 * u).exp());
            if d <= 0.0 || b - d == b {
                return None;
            }
            b - d
        };
        *evals += 1;
        Some(w * f(x))
    };

    let mut h = 1.0;
    let mut sum = node(0.0, f, &mut evals).unwrap_or(0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        if t > T_MAX {
            break;
        }
        let p = node(t, f, &mut evals);
        let m = node(-t, f, &mut evals);
        if p.is_none() && m.is_none() {
            break;
        }
        sum += p.unwrap_or(0.0) + m.unwrap_or(0.0);
        k += 1;
    }
    let mut est = sum * h;
    for _level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > T_MAX {
                break;
            }
            let p = node(t, f, &mut evals);
            let m = node(-t, f, &mut evals);
            if p.is_none() && m.is_none() {
                break;
            }
            sum += p.unwrap_or(0.0) + m.unwrap_or(0.0);
            k += 2;
        }
        let next = sum * h;
        let err = (next - est).abs();
        est = next;
        if err <= rel_tol * est.abs() || err <= abs_tol {
            return (est, err, true, evals);
        }
    }
    (est, f64::INFINITY, false, evals)
}

fn adapt<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, rel_tol: f64, abs_tol: f64, depth: usize, out: &mut Quad) -> bool {
    let (v, e, ok, n) = tanh_sinh_panel(f, a, b, rel_tol, abs_tol);
    out.evaluations += n;
    if ok || depth >= MAX_DEPTH {
        out.value += v;
        out.error += e;
        return ok;
    }
    let mid = 0.5 * (a + b);
    let l = adapt(f, a, mid, rel_tol, 0.5 * abs_tol, depth + 1, out);
    let r = adapt(f, mid, b, rel_tol, 0.5 * abs_tol, depth + 1, out);
    l && r
}

/// Adaptive tanh-sinh quadrature of a smooth (or endpoint-singular)
/// integrand over a finite interval.
pub fn tanh_sinh<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<Quad> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument("tanh-sinh needs finite limits".into()));
    }
    if a == b {
        return Ok(Quad { value: 0.0, error: 0.0, evaluations: 0 });
    }
    if a > b {
        let q = tanh_sinh(f, b, a, rel_tol, abs_tol)?;
        return Ok(Quad { value: -q.value, ..q });
    }
    let mut out = Quad { value: 0.0, error: 0.0, evaluations: 0 };
    if adapt(&mut f, a, b, rel_tol, abs_tol, 0, &mut out) {
        Ok(out)
    } else {
        Err(Error::NonConvergence(format!(
            "tanh-sinh on [{a}, {b}] stalled with error estimate {:.3e}",
            out.error
        )))
    }
}

/// Gauss–Legendre rule of the given degree.
pub fn gauss_legendre(degree: usize) -> Result<GaussLegendre> {
    let d = NonZeroUsize::new(degree).ok_or_else(|| Error::InvalidArgument("degree must be positive".into()))?;
    Ok(GaussLegendre::new(d))
}

/// Nodes and weights of the Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_nodes(degree: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let rule = gauss_legendre(degree)?;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let (x, w): (Vec<f64>, Vec<f64>) = rule.iter().map(|(x, w)| (mid + half * x, half * w)).unzip();
    Ok((x, w))
}

/// Complex integrand over [a, b] with a Gauss–Legendre rule.
pub fn gauss_legendre_complex<F: FnMut(f64) -> C64>(degree: usize, a: f64, b: f64, mut f: F) -> Result<C64> {
    let (x, w) = gauss_legendre_nodes(degree, a, b)?;
    Ok(x.iter().zip(&w).map(|(&xi, &wi)| f(xi) * wi).sum())
}

/// Composite Simpson weights for `n` equally spaced samples with spacing
/// `h`. An even number of intervals uses plain Simpson; otherwise the last
/// three intervals use the 3/8 rule.
pub fn simpson_weights(n: usize, h: f64) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("Simpson needs at least 3 samples, got {n}")));
    }
    let intervals = n - 1;
    let mut w = vec![0.0; n];
    let simpson_end = if intervals.is_multiple_of(2) { intervals } else { intervals - 3 };
    let mut i = 0;
    while i < simpson_end {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
    if simpson_end < intervals {
        let s = simpson_end;
        w[s] += 3.0 * h / 8.0;
        w[s + 1] += 9.0 * h / 8.0;
        w[s + 2] += 9.0 * h / 8.0;
        w[s + 3] += 3.0 * h / 8.0;
    }
    Ok(w)
}

/// Trapezoid weights on an arbitrary increasing set of nodes.
pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = x[i + 1] - x[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}
