//! Selection criteria among the self-adjoint extensions D^γ of a
//! non-convex sector: charge conjugation, the dilation flow on γ and
//! H^{1/2} membership of the generator components.

use serde::{Deserialize, Serialize};

use crate::angular::SectorGeometry;
use crate::bessel::{bessel_k, bessel_k_derivative};
use crate::error::{Error, Result};
use crate::fiber::{ExtensionParameter, PHASE_TOL};
use crate::fit::{geomspace, linear_fit, loglog_slope};
use crate::quadrature::tanh_sinh;

fn require_nonconvex(geom: &SectorGeometry) -> Result<()> {
    if geom.is_convex() {
        return Err(Error::Precondition(format!(
            "ω = {} ≤ π/2: operator already self-adjoint, no choice needed",
            geom.omega()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFlow {
    pub alpha: f64,
    pub s_in: f64,
    pub s_out: f64,
}

/// Parameter of V_α D^γ V_α^*: tan(s̃/2) = tan(s/2)/α^{λ₀}.
pub fn scaled_gamma(gamma: &ExtensionParameter, alpha: f64, geom: &SectorGeometry) -> Result<ExtensionParameter> {
    require_nonconvex(geom)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("scaling factor α = {alpha} must be positive")));
    }
    if gamma.is_minus_one() {
        return Ok(ExtensionParameter::MINUS_ONE);
    }
    // half-angle kept in [0, π) so the branch of arctan is continuous
    let half = 0.5 * gamma.phase();
    let t = half.sin().atan2(half.cos() * alpha.powf(geom.lambda0()));
    ExtensionParameter::from_phase(2.0 * t)
}

pub fn scaling_flow(gamma: &ExtensionParameter, alpha: f64, geom: &SectorGeometry) -> Result<ScalingFlow> {
    let out = scaled_gamma(gamma, alpha, geom)?;
    Ok(ScalingFlow { alpha, s_in: gamma.phase(), s_out: out.phase() })
}

/// C maps D(D^γ) into itself iff γ is real.
pub fn charge_conj_admissible(gamma: &ExtensionParameter) -> bool {
    gamma.is_one() || gamma.is_minus_one()
}

/// Scales probed when testing dilation invariance.
pub const PROBE_SCALES: [f64; 3] = [0.5, 2.0, 10.0];

pub fn is_scale_invariant(gamma: &ExtensionParameter, geom: &SectorGeometry) -> Result<bool> {
    for a in PROBE_SCALES {
        if scaled_gamma(gamma, a, geom)?.phase_distance(gamma) > PHASE_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Leading small-r ratio of the generator b/a after V_α, relative to the
/// unscaled one. Expected value α^{−λ₀}; fitted over r ∈ [1e−10, 1e−8].
pub fn scaled_generator_ratio(geom: &SectorGeometry, alpha: f64) -> Result<f64> {
    require_nonconvex(geom)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("scaling factor α = {alpha} must be positive")));
    }
    let nu0 = geom.nu0();
    let rs = geomspace(1e-10, 1e-8, 5);
    let mut logs = Vec::with_capacity(rs.len());
    for &r in &rs {
        let ratio = |x: f64| -> Result<f64> { Ok(bessel_k(nu0 + 1.0, x)? / bessel_k(nu0.abs(), x)?) };
        logs.push((ratio(alpha * r)? / ratio(r)?).ln());
    }
    // constant plus a small power correction: extrapolate linearly in r^{2|ν₀|}
    let xs: Vec<f64> = rs.iter().map(|r| r.powf(2.0 * nu0.abs())).collect();
    let (_, c) = linear_fit(&xs, &logs)?;
    Ok(c.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorComponent {
    /// K_{ν₀}(r)u₀(θ).
    Nu0Part,
    /// K_{ν₀+1}(r)u₋₁(θ).
    Nu0PlusOnePart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub component: GeneratorComponent,
    pub member: bool,
    /// Integrability exponent p of the test (4 for L⁴, 4/3 for W^{1,p}).
    pub p: f64,
    /// Upper end of the W^{1,p} window, 2/(|ν₀|+1).
    pub p_threshold: f64,
    /// Predicted small-r exponent e of the integrand ∝ r^{−e}, when it diverges.
    pub exponent_expected: Option<f64>,
    pub exponent_fitted: Option<f64>,
    /// Slope of the dyadic shell integrals ∫_ε^{2ε} in ε.
    pub shell_slope: f64,
}

/// p used for the W^{1,p} ⊂ H^{1/2} test.
pub const SOBOLEV_P: f64 = 4.0 / 3.0;

fn shell_slope<F: Fn(f64) -> Result<f64>>(integrand: F) -> Result<f64> {
    let eps = geomspace(1e-6, 1e-2, 9);
    let mut vals = Vec::with_capacity(eps.len());
    for &e in &eps {
        let mut err = None;
        let q = tanh_sinh(
            |r| match integrand(r) {
                Ok(v) => v,
                Err(x) => {
                    err.get_or_insert(x);
                    0.0
                }
            },
            e,
            2.0 * e,
            1e-12,
            0.0,
        )?;
        if let Some(x) = err {
            return Err(x);
        }
        vals.push(q.value);
    }
    loglog_slope(&eps, &vals)
}

pub fn h_half_membership(geom: &SectorGeometry, component: GeneratorComponent) -> Result<Membership> {
    require_nonconvex(geom)?;
    let nu0 = geom.nu0();
    let omega = geom.omega();
    let p_threshold = 2.0 / (nu0.abs() + 1.0);
    match component {
        GeneratorComponent::Nu0PlusOnePart => {
            // |u₋₁|⁴ integrates to 2ω/(2ω)² over the aperture
            let ang = 1.0 / (2.0 * omega);
            let slope = shell_slope(|r| Ok(ang * bessel_k(nu0 + 1.0, r)?.powi(4) * r))?;
            let e = 1.0 - slope;
            Ok(Membership {
                component,
                member: slope > 0.0,
                p: 4.0,
                p_threshold,
                exponent_expected: Some(4.0 * (nu0 + 1.0) - 1.0),
                exponent_fitted: Some(e),
                shell_slope: slope,
            })
        }
        GeneratorComponent::Nu0Part => {
            let p = SOBOLEV_P;
            let nu = nu0.abs();
            let norm = 1.0 / (2.0 * omega).sqrt();
            let slope = shell_slope(|r| {
                let k = bessel_k(nu, r)?;
                let kp = bessel_k_derivative(nu, r)?;
                let g = norm * (kp * kp + nu * nu * k * k / (r * r)).sqrt();
                Ok(2.0 * omega * g.powf(p) * r)
            })?;
            Ok(Membership {
                component,
                member: slope > 0.0 && p < p_threshold,
                p,
                p_threshold,
                exponent_expected: None,
                exponent_fitted: None,
                shell_slope: slope,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionAudit {
    pub omega: f64,
    pub gamma_phase: f64,
    pub charge_conjugation: bool,
    pub scale_invariant: bool,
    pub h_half: bool,
    pub distinguished: bool,
}

/// The generator is (1+γ)K_{ν₀}u₀ − i(1−γ)K_{ν₀+1}u₋₁; it lies in H^{1/2}
/// iff every component with a nonzero coefficient does.
pub fn audit_extension(geom: &SectorGeometry, gamma: &ExtensionParameter) -> Result<ExtensionAudit> {
    require_nonconvex(geom)?;
    let charge_conjugation = charge_conj_admissible(gamma);
    let scale_invariant = is_scale_invariant(gamma, geom)?;
    let g = gamma.gamma();
    let mut h_half = true;
    if (1.0 + g).norm() > PHASE_TOL {
        h_half &= h_half_membership(geom, GeneratorComponent::Nu0Part)?.member;
    }
    if (1.0 - g).norm() > PHASE_TOL {
        h_half &= h_half_membership(geom, GeneratorComponent::Nu0PlusOnePart)?.member;
    }
    Ok(ExtensionAudit {
        omega: geom.omega(),
        gamma_phase: gamma.phase(),
        charge_conjugation,
        scale_invariant,
        h_half,
        distinguished: charge_conjugation && scale_invariant && h_half,
    })
}

/// γ = 1 together with its audit.
pub fn distinguished_extension(geom: &SectorGeometry) -> Result<(ExtensionParameter, ExtensionAudit)> {
    let g = ExtensionParameter::ONE;
    let audit = audit_extension(geom, &g)?;
    Ok((g, audit))
}
