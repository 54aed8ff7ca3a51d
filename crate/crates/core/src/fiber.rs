//! Radial fiber operators d^κ_ω, their self-adjointness classification,
//! deficiency elements of the κ = 0 channel and the staggered radial
//! discretization shared with the full sector assembly.
//!
//! In the unknowns (a, b) of v = a·u_κ + b·u_{−(κ+1)} the fiber operator is
//!
//!   d^κ = (−1)^κ [[0, ∂r + (λ_κ+1)/(2r)], [−∂r + (λ_κ−1)/(2r), 0]],
//!
//! and after f = √r·a, g = √r·b it becomes (−1)^κ[iσ₂∂r + σ₁λ_κ/(2r)].
//! The discretization puts f on grid nodes and g on cell midpoints.
//! Near r = 0 the second Bessel family I_ν is never square integrable, so
//! only the K-functions enter the deficiency spaces.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::angular::{SectorGeometry, Truncation, coupling_matrix, lambda_kappa, mode_unchecked};
use crate::bessel::bessel_k;
use crate::error::{Error, Result};
use crate::fit::{geomspace, loglog_slope};
use crate::grid::RadialGrid;
use crate::linalg::BlockTridiag;
use crate::quadrature::tanh_sinh;
use crate::spinor::{Spinor, SpinorField};

/// Phase tolerance used when comparing extension parameters.
pub const PHASE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiberClass {
    SelfAdjoint,
    DeficiencyOne,
}

/// γ = e^{is}, stored through s ∈ [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionParameter {
    s: f64,
}

impl ExtensionParameter {
    pub const ONE: Self = Self { s: 0.0 };
    pub const MINUS_ONE: Self = Self { s: PI };

    pub fn from_phase(s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::InvalidArgument(format!("phase {s} is not finite")));
        }
        let mut w = s.rem_euclid(TAU);
        if w >= TAU {
            w = 0.0;
        }
        Ok(Self { s: w })
    }

    /// Accepts γ with |γ| = 1 up to 1e−12.
    pub fn from_gamma(gamma: C64) -> Result<Self> {
        if !((gamma.norm() - 1.0).abs() <= 1e-12) {
            return Err(Error::InvalidArgument(format!("|γ| = {} ≠ 1", gamma.norm())));
        }
        Self::from_phase(gamma.arg())
    }

    pub fn phase(&self) -> f64 {
        self.s
    }

    pub fn gamma(&self) -> C64 {
        C64::from_polar(1.0, self.s)
    }

    /// Distance of the phases on the circle.
    pub fn phase_distance(&self, other: &Self) -> f64 {
        let d = (self.s - other.s).rem_euclid(TAU);
        d.min(TAU - d)
    }

    pub fn is_one(&self) -> bool {
        self.phase_distance(&Self::ONE) <= PHASE_TOL
    }

    pub fn is_minus_one(&self) -> bool {
        self.phase_distance(&Self::MINUS_ONE) <= PHASE_TOL
    }

    /// Ratio b/a of the generator a₊ + γσ₃a₊ relative to the Bessel pair:
    /// −i(1−γ)/(1+γ) = −tan(s/2). Infinite for γ = −1.
    pub fn generator_ratio(&self) -> f64 {
        -(0.5 * self.s).tan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberOperator {
    pub kappa: i64,
    pub geometry: SectorGeometry,
    pub lambda: f64,
}

impl FiberOperator {
    pub fn new(geometry: SectorGeometry, kappa: i64) -> Result<Self> {
        if kappa < 0 {
            return Err(Error::InvalidArgument(format!(
                "κ = {kappa} < 0; negative channels are paired with κ ≥ 0"
            )));
        }
        Ok(Self { kappa, geometry, lambda: lambda_kappa(kappa, &geometry) })
    }

    pub fn sign(&self) -> f64 {
        if self.kappa % 2 == 0 { 1.0 } else { -1.0 }
    }

    /// Coefficients (c_b, c_a) of the substituted form: the off-diagonal
    /// entries are sign·(±∂r + λ/(2r)).
    pub fn substituted_potential(&self, r: f64) -> f64 {
        self.lambda / (2.0 * r)
    }

    /// Applies the continuous operator to samples (a, b) on a radial grid,
    /// differentiating with sixth-order stencils.
    pub fn apply(&self, grid: &RadialGrid, a: &[C64], b: &[C64]) -> Result<(Vec<C64>, Vec<C64>)> {
        let r = grid.nodes();
        if a.len() != r.len() || b.len() != r.len() {
            return Err(Error::InvalidArgument("samples do not match the grid".into()));
        }
        let da = grid.derivative(a)?;
        let db = grid.derivative(b)?;
        let s = self.sign();
        let lam = self.lambda;
        let top = (0..r.len()).map(|i| (db[i] + b[i] * ((lam + 1.0) / (2.0 * r[i]))) * s).collect();
        let bottom = (0..r.len()).map(|i| (-da[i] + a[i] * ((lam - 1.0) / (2.0 * r[i]))) * s).collect();
        Ok((top, bottom))
    }
}

/// Self-adjoint iff λ_κ ≥ 1, i.e. κ ≥ 1 or ω ≤ π/2.
pub fn classify_self_adjoint(geom: &SectorGeometry, kappa: i64) -> Result<FiberClass> {
    if kappa < 0 {
        return Err(Error::InvalidArgument(format!("κ = {kappa} < 0 is covered by the paired channel")));
    }
    if kappa >= 1 || geom.is_convex() {
        Ok(FiberClass::SelfAdjoint)
    } else {
        Ok(FiberClass::DeficiencyOne)
    }
}

/// Total deficiency over all fibers: 0 for convex sectors, 1 otherwise.
pub fn deficiency_count(geom: &SectorGeometry) -> usize {
    usize::from(!geom.is_convex())
}

fn require_deficient(geom: &SectorGeometry) -> Result<()> {
    if geom.is_convex() {
        return Err(Error::Precondition(format!(
            "fiber already self-adjoint (ω = {} ≤ π/2)",
            geom.omega()
        )));
    }
    Ok(())
}

/// A pair of radial functions (a, b) sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPair {
    pub grid: RadialGrid,
    pub a: Vec<C64>,
    pub b: Vec<C64>,
}

pub type DeficiencyElement = RadialPair;

impl RadialPair {
    /// ‖(a, b)‖² in L²(r dr) over the node range [lo, hi).
    pub fn norm_sq_range(&self, lo: usize, hi: usize) -> f64 {
        let r = self.grid.nodes();
        let w = self.grid.weights();
        (lo..hi).map(|i| w[i] * r[i] * (self.a[i].norm_sqr() + self.b[i].norm_sqr())).sum()
    }

    pub fn sigma3(&self) -> RadialPair {
        RadialPair { grid: self.grid, a: self.a.clone(), b: self.b.iter().map(|z| -z).collect() }
    }

    pub fn combine(&self, other: &RadialPair, c: C64) -> RadialPair {
        RadialPair {
            grid: self.grid,
            a: self.a.iter().zip(&other.a).map(|(x, y)| x + c * y).collect(),
            b: self.b.iter().zip(&other.b).map(|(x, y)| x + c * y).collect(),
        }
    }
}

/// a₊ = (K_{|ν₀|}, −iK_{ν₀+1}), the solution of (d⁰)*a = i·a.
pub fn deficiency_element(geom: &SectorGeometry, grid: &RadialGrid) -> Result<DeficiencyElement> {
    require_deficient(geom)?;
    let nu0 = geom.nu0();
    let r = grid.nodes();
    let mut a = Vec::with_capacity(r.len());
    let mut b = Vec::with_capacity(r.len());
    for &ri in &r {
        a.push(C64::new(bessel_k(nu0.abs(), ri)?, 0.0));
        b.push(C64::new(0.0, -bessel_k(nu0 + 1.0, ri)?));
    }
    Ok(RadialPair { grid: *grid, a, b })
}

/// a₊ + γσ₃a₊.
pub fn extension_generator(geom: &SectorGeometry, grid: &RadialGrid, gamma: &ExtensionParameter) -> Result<RadialPair> {
    let ap = deficiency_element(geom, grid)?;
    Ok(ap.combine(&ap.sigma3(), gamma.gamma()))
}

/// Fitted small-r power laws of the two components of a₊, returned as
/// (p_a, p_b) with |a| ∝ r^{p_a}, |b| ∝ r^{p_b}; expected −|ν₀| and
/// −(1 − |ν₀|). The window [1e−16, 1e−13] keeps the r^{2|ν₀|} correction
/// of K_{|ν₀|} below one percent for |ν₀| ≥ 1/12.
pub fn small_r_exponents(geom: &SectorGeometry) -> Result<(f64, f64)> {
    require_deficient(geom)?;
    let nu0 = geom.nu0();
    let rs = geomspace(1e-16, 1e-13, 7);
    let a = rs.iter().map(|&r| bessel_k(nu0.abs(), r)).collect::<Result<Vec<_>>>()?;
    let b = rs.iter().map(|&r| bessel_k(nu0 + 1.0, r)).collect::<Result<Vec<_>>>()?;
    Ok((loglog_slope(&rs, &a)?, loglog_slope(&rs, &b)?))
}

/// Relative interior residual ‖(d − z)p‖/‖p‖ over nodes [skip, n − skip).
pub fn eigen_residual(op: &FiberOperator, p: &RadialPair, z: C64, skip: usize) -> Result<f64> {
    let (ta, tb) = op.apply(&p.grid, &p.a, &p.b)?;
    let n = p.a.len();
    if n <= 2 * skip {
        return Err(Error::InvalidArgument("grid too short for the requested interior".into()));
    }
    let res = RadialPair {
        grid: p.grid,
        a: ta.iter().zip(&p.a).map(|(t, a)| t - z * a).collect(),
        b: tb.iter().zip(&p.b).map(|(t, b)| t - z * b).collect(),
    };
    Ok((res.norm_sq_range(skip, n - skip) / p.norm_sq_range(skip, n - skip)).sqrt())
}

/// v₊(r, θ) = K_{ν₀}(r)u₀(θ) − iK_{ν₀+1}(r)u₋₁(θ) and
/// v₋(r, θ) = K_{ν₀}(r)u₀(θ) + iK_{ν₀+1}(r)u₋₁(θ).
pub fn extension_pair_at(geom: &SectorGeometry, r: f64, theta: f64) -> Result<(Spinor, Spinor)> {
    require_deficient(geom)?;
    if theta.abs() > geom.omega() {
        return Err(Error::OutOfDomain(format!("θ = {theta} outside the sector")));
    }
    let nu0 = geom.nu0();
    let k0 = bessel_k(nu0, r)?;
    let k1 = bessel_k(nu0 + 1.0, r)?;
    let u0 = mode_unchecked(0, geom, theta);
    let um = mode_unchecked(-1, geom, theta);
    let i = C64::new(0.0, 1.0);
    let plus = u0.scale(C64::new(k0, 0.0)) + um.scale(-i * k1);
    let minus = u0.scale(C64::new(k0, 0.0)) + um.scale(i * k1);
    Ok((plus, minus))
}

/// v₊ and v₋ sampled on the polar grid (radial nodes × `n_theta` uniform angles).
pub fn sector_extension_pair(geom: &SectorGeometry, grid: &RadialGrid, n_theta: usize) -> Result<(SpinorField, SpinorField)> {
    require_deficient(geom)?;
    if n_theta < 3 {
        return Err(Error::InvalidArgument("need at least 3 angular samples".into()));
    }
    let omega = geom.omega();
    let theta: Vec<f64> = (0..n_theta).map(|j| -omega + 2.0 * omega * j as f64 / (n_theta - 1) as f64).collect();
    let tw = crate::quadrature::simpson_weights(n_theta, 2.0 * omega / (n_theta - 1) as f64)?;
    let r = grid.nodes();
    let rw = grid.weights();
    let mut plus = Vec::with_capacity(r.len() * n_theta);
    let mut minus = Vec::with_capacity(r.len() * n_theta);
    for &ri in &r {
        for &t in &theta {
            let (p, m) = extension_pair_at(geom, ri, t.clamp(-omega, omega))?;
            plus.push(p);
            minus.push(m);
        }
    }
    let field = |values| SpinorField {
        omega,
        theta0: geom.theta0(),
        r: r.clone(),
        r_weights: rw.clone(),
        theta: theta.clone(),
        theta_weights: tw.clone(),
        values,
    };
    Ok((field(plus), field(minus)))
}

/// Outer boundary of the truncated radial interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuterWall {
    /// a(r_max) = 0, the channel-local wall compatible with the mass term.
    InfiniteMass,
    /// Natural condition b(r_max) = 0.
    None,
}

/// Everything the staggered assembly needs besides the grid.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ChannelLayout<'a> {
    pub geom: SectorGeometry,
    pub kappas: Vec<i64>,
    /// σ₃ compressed to the paired modes, ordered [κ…, −(κ+1)…].
    pub coupling: Option<&'a DMatrix<f64>>,
    pub mass: f64,
    /// Include the derivative and centrifugal part.
    pub kinetic: bool,
    pub gamma: Option<ExtensionParameter>,
    pub outer: OuterWall,
}

/// Staggered assembly in orthonormal coordinates. Slab i holds
/// [f_i^κ…, g_i^κ…]; f_i lives on node r_i, g_i on the midpoint of
/// [r_i, r_{i+1}].
pub(crate) fn assemble_staggered(grid: &RadialGrid, lay: &ChannelLayout<'_>) -> Result<BlockTridiag> {
    let nch = lay.kappas.len();
    // re-validate: the fields are public
    RadialGrid::new(grid.r_min, grid.r_max, grid.n, grid.spacing)?;
    if nch == 0 {
        return Err(Error::InvalidArgument("no channels to assemble".into()));
    }
    let r = grid.nodes();
    let cells = r.len() - 1;
    let h: Vec<f64> = r.windows(2).map(|w| w[1] - w[0]).collect();
    let mid: Vec<f64> = r.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let n_f = match lay.outer {
        OuterWall::InfiniteMass => cells,
        OuterWall::None => cells + 1,
    };
    let wf: Vec<f64> = (0..n_f)
        .map(|i| match i {
            0 => 0.5 * h[0],
            i if i == cells => 0.5 * h[cells - 1],
            i => 0.5 * (h[i - 1] + h[i]),
        })
        .collect();
    let lam: Vec<f64> = lay.kappas.iter().map(|&k| lambda_kappa(k, &lay.geom)).collect();
    let sgn: Vec<f64> = lay.kappas.iter().map(|&k| if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 }).collect();
    let m = lay.mass;
    let coupling = lay.coupling.filter(|_| m != 0.0);

    let n_slabs = n_f;
    let mut diag = Vec::with_capacity(n_slabs);
    let mut off = Vec::with_capacity(n_slabs.saturating_sub(1));
    for i in 0..n_slabs {
        let has_g = i < cells;
        let size = if has_g { 2 * nch } else { nch };
        let mut d = DMatrix::zeros(size, size);
        if let Some(s) = coupling {
            for k in 0..nch {
                for l in 0..nch {
                    d[(k, l)] = m * s[(k, l)];
                    if has_g {
                        d[(nch + k, nch + l)] = m * s[(nch + k, nch + l)];
                    }
                }
            }
        }
        if has_g {
            let c = (h[i] / wf[i]).sqrt();
            for k in 0..nch {
                if lay.kinetic {
                    let v = lam[k] / (2.0 * mid[i]);
                    let e = sgn[k] * (1.0 / h[i] + 0.5 * v) * c;
                    d[(nch + k, k)] += e;
                    d[(k, nch + k)] += e;
                }
                if let Some(s) = coupling {
                    for l in 0..nch {
                        let e = m * s[(nch + k, l)] * 0.5 * c;
                        d[(nch + k, l)] += e;
                        d[(l, nch + k)] += e;
                    }
                }
            }
        }
        diag.push(d);
        if i + 1 < n_slabs {
            let next = if i + 1 < cells { 2 * nch } else { nch };
            let mut e = DMatrix::zeros(size, next);
            let c = (h[i] / wf[i + 1]).sqrt();
            for k in 0..nch {
                if lay.kinetic {
                    let v = lam[k] / (2.0 * mid[i]);
                    e[(nch + k, k)] = sgn[k] * (-1.0 / h[i] + 0.5 * v) * c;
                }
                if let Some(s) = coupling {
                    for l in 0..nch {
                        e[(nch + k, l)] += m * s[(nch + k, l)] * 0.5 * c;
                    }
                }
            }
            off.push(e);
        }
    }

    // extension condition on the κ = 0 channel at r_min
    if let Some(gamma) = lay.gamma {
        let ch = lay.kappas.iter().position(|&k| k == 0).ok_or_else(|| {
            Error::Configuration("an extension parameter needs the κ = 0 channel".into())
        })?;
        if gamma.is_minus_one() {
            // generator has vanishing a-component: drop f_0 of that channel
            let keep: Vec<usize> = (0..diag[0].nrows()).filter(|&j| j != ch).collect();
            diag[0] = diag[0].select_rows(&keep).select_columns(&keep);
            if !off.is_empty() {
                off[0] = off[0].select_rows(&keep);
            }
        } else if lay.kinetic {
            let nu0 = lay.geom.nu0();
            let ratio = bessel_k(nu0 + 1.0, grid.r_min)? / bessel_k(nu0.abs(), grid.r_min)?;
            let rho = gamma.generator_ratio() * ratio;
            diag[0][(ch, ch)] -= sgn[ch] * rho / wf[0];
        }
    }
    BlockTridiag::new(diag, off)
}

/// Discretization of a single fiber d^κ_ω on the staggered grid.
///
/// For a deficient fiber (κ = 0, ω > π/2) an extension parameter must be
/// supplied; it is imposed through the ratio b/a of the generator at r_min.
pub fn fiber_matrix(
    op: &FiberOperator,
    grid: &RadialGrid,
    outer: OuterWall,
    gamma: Option<ExtensionParameter>,
) -> Result<BlockTridiag> {
    let class = classify_self_adjoint(&op.geometry, op.kappa)?;
    let gamma = match (class, gamma) {
        (FiberClass::DeficiencyOne, None) => {
            return Err(Error::Precondition(
                "the κ = 0 fiber of a non-convex sector needs an extension parameter".into(),
            ));
        }
        (FiberClass::DeficiencyOne, g) => g,
        (FiberClass::SelfAdjoint, _) => None,
    };
    let lay = ChannelLayout {
        geom: op.geometry,
        kappas: vec![op.kappa],
        coupling: None,
        mass: 0.0,
        kinetic: true,
        gamma,
        outer,
    };
    assemble_staggered(grid, &lay)
}

/// Coupling matrix helper re-exported for callers that assemble by hand.
pub fn paired_coupling(n_modes: usize, truncation: Truncation) -> DMatrix<f64> {
    coupling_matrix(n_modes, truncation)
}

/// Orthonormal-coordinate vector of the fiber unknowns for samples of
/// (a, b) given as functions of r.
pub fn fiber_coordinates<FA, FB>(grid: &RadialGrid, outer: OuterWall, fa: FA, fb: FB) -> Vec<f64>
where
    FA: Fn(f64) -> f64,
    FB: Fn(f64) -> f64,
{
    let r = grid.nodes();
    let cells = r.len() - 1;
    let n_f = match outer {
        OuterWall::InfiniteMass => cells,
        OuterWall::None => cells + 1,
    };
    let mut x = Vec::with_capacity(n_f + cells);
    for i in 0..n_f {
        let w = match i {
            0 => 0.5 * (r[1] - r[0]),
            i if i == cells => 0.5 * (r[cells] - r[cells - 1]),
            i => 0.5 * (r[i + 1] - r[i - 1]),
        };
        x.push(w.sqrt() * r[i].sqrt() * fa(r[i]));
        if i < cells {
            let h = r[i + 1] - r[i];
            let rm = 0.5 * (r[i] + r[i + 1]);
            x.push(h.sqrt() * rm.sqrt() * fb(rm));
        }
    }
    x
}

/// Dyadic-shell probe of ∫_ε^1 K_ν(r)² r dr as ε → 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityProbe {
    pub nu: f64,
    /// Fitted exponent β of the shell integrals ∫_ε^{2ε} ∝ ε^β.
    pub shell_exponent: f64,
    /// β > 0: the integral converges as ε → 0.
    pub bounded: bool,
}

/// Slope threshold separating convergent from divergent shell sums.
pub const SHELL_SLOPE_THRESHOLD: f64 = 1e-2;

pub fn kernel_integrability(nu: f64) -> Result<IntegrabilityProbe> {
    let eps = geomspace(1e-6, 1e-2, 9);
    let mut shells = Vec::with_capacity(eps.len());
    for &e in &eps {
        let mut err = None;
        let q = tanh_sinh(
            |r| match bessel_k(nu, r) {
                Ok(k) => k * k * r,
                Err(x) => {
                    err = Some(x);
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
        shells.push(q.value);
    }
    let beta = loglog_slope(&eps, &shells)?;
    Ok(IntegrabilityProbe { nu, shell_exponent: beta, bounded: beta > SHELL_SLOPE_THRESHOLD })
}
