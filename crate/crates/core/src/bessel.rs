//! Modified Bessel functions of the second kind for real order.
//!
//! K_ν(r) is evaluated from ∫₀^∞ e^{−r cosh t} cosh(νt) dt in log space,
//! with the integrand normalized at its peak t* = asinh(ν/r).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::tanh_sinh;

/// ln of the largest finite f64.
pub const LOG_MAX: f64 = 709.782_712_893_384;
/// ln of the smallest positive normal f64.
pub const LOG_MIN: f64 = -708.396_418_532_264;

/// Order of a K-function, canonicalized to |ν| since K_ν = K_{−ν}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselOrder {
    nu: f64,
}

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(Error::InvalidArgument(format!("order {nu} is not finite")));
        }
        Ok(Self { nu: nu.abs() })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        bessel_k(self.nu, r)
    }
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::OutOfDomain(format!("K_ν(r) needs 0 < r < ∞, got r = {r}")));
    }
    Ok(())
}

/// ln K_ν(r). Never overflows; fails only for r outside (0, ∞).
pub fn bessel_k_ln(nu: f64, r: f64) -> Result<f64> {
    check_r(r)?;
    let nu = BesselOrder::new(nu)?.nu();
    let tstar = (nu / r).asinh();
    let phi = |t: f64| -r * t.cosh() + nu * t;
    let peak = phi(tstar);
    // cosh(νt) e^{−νt} = (1 + e^{−2νt})/2
    let g = |t: f64| (phi(t) - peak).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp());

    // tail cut where the integrand has dropped below e^{−60} of its peak
    let mut upper = tstar + 1.0;
    while phi(upper) - peak > -60.0 {
        upper += (upper - tstar).max(1.0);
    }
    let mut total = 0.0;
    let mut edges = vec![0.0];
    if tstar > 0.0 {
        edges.push(tstar);
    }
    // panels of unit width just beyond the peak, then one long tail panel
    let mut t = tstar;
    for _ in 0..4 {
        t += 1.0;
        if t >= upper {
            break;
        }
        edges.push(t);
    }
    edges.push(upper);
    for w in edges.windows(2) {
        let q = tanh_sinh(g, w[0], w[1], 1e-14, 1e-16)?;
        total += q.value;
    }
    Ok(peak + total.ln())
}

/// K_ν(r) for real ν and r > 0.
///
/// Returns [`Error::Overflow`] when the value exceeds the f64 range and
/// [`Error::OutOfDomain`] when it underflows or r ≤ 0.
pub fn bessel_k(nu: f64, r: f64) -> Result<f64> {
    let l = bessel_k_ln(nu, r)?;
    if l > LOG_MAX {
        return Err(Error::Overflow { nu, r, threshold: LOG_MAX });
    }
    if l < LOG_MIN {
        return Err(Error::OutOfDomain(format!("K_{nu}({r}) underflows (ln K = {l})")));
    }
    Ok(l.exp())
}

/// K'_ν(r) = −(K_{ν−1}(r) + K_{ν+1}(r))/2.
pub fn bessel_k_derivative(nu: f64, r: f64) -> Result<f64> {
    Ok(-0.5 * (bessel_k(nu - 1.0, r)? + bessel_k(nu + 1.0, r)?))
}

/// Leading small-argument form: Γ(ν)/2 (r/2)^{−ν} for ν > 0, −ln r for ν = 0.
pub fn bessel_k_asym_small(nu: f64, r: f64) -> Result<f64> {
    check_r(r)?;
    if nu < 0.0 || !nu.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "order {nu} must be canonicalized to |ν| before the asymptotic form"
        )));
    }
    if nu == 0.0 {
        return Ok(-r.ln());
    }
    Ok((ln_gamma(nu)? - std::f64::consts::LN_2 - nu * (0.5 * r).ln()).exp())
}

/// Leading large-argument form (π/(2r))^{1/2} e^{−r}.
pub fn bessel_k_asym_large(r: f64) -> f64 {
    (PI / (2.0 * r)).sqrt() * (-r).exp()
}

/// |K'_{|ν|}(r) + (|ν|/r)K_{|ν|}(r) + K_{|ν|−1}(r)| with K' from the
/// two-sided recurrence.
pub fn bessel_k_recurrence_residual(nu: f64, r: f64) -> Result<f64> {
    let nu = nu.abs();
    let kp = bessel_k_derivative(nu, r)?;
    Ok((kp + nu / r * bessel_k(nu, r)? + bessel_k(nu - 1.0, r)?).abs())
}

// Lanczos coefficients, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("ln Γ needs x > 0, got {x}")));
    }
    if x < 0.5 {
        // reflection: Γ(x)Γ(1−x) = π / sin(πx)
        return Ok((PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)?);
    }
    let z = x - 1.0;
    let mut a = LANCZOS[0];
    let t = z + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln())
}

/// Γ(x) for x > 0 (overflows to an error beyond x ≈ 171).
pub fn gamma(x: f64) -> Result<f64> {
    let l = ln_gamma(x)?;
    if l > LOG_MAX {
        return Err(Error::InvalidArgument(format!("Γ({x}) overflows")));
    }
    Ok(l.exp())
}
