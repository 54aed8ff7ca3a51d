//! Massive Dirac operator on a truncated sector: channel × radial
//! assembly, eigen-solves, Weyl-sequence quotients, the virial and
//! square-norm identities, and the radial reality identity.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::angular::{SectorGeometry, Truncation, coupling_matrix};
use crate::error::{Error, Result};
use crate::fiber::{ChannelLayout, ExtensionParameter, OuterWall, assemble_staggered};
use crate::grid::{RadialGrid, derivative};
use crate::linalg::{BlockTridiag, ConvergenceTag, EigenOptions, EigenSolution, dot, eigs_nearest};
use crate::quadrature::tanh_sinh;
use crate::spinor::{Mat2, Spinor, SpinorField, UnitVector2, boundary_matrix};

/// Compressed-σ₃ default: the involutive form keeps the mass gap of the
/// truncated problem intact for m > 0; for m ≤ 0 there is no gap to keep.
pub fn default_truncation(mass: f64) -> Truncation {
    if mass > 0.0 { Truncation::Involutive } else { Truncation::Galerkin }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParameters {
    pub omega: f64,
    pub mass: f64,
    /// Phase s of γ = e^{is}; absent for convex sectors.
    pub gamma_phase: Option<f64>,
    pub n_modes: usize,
    pub grid: RadialGrid,
    pub truncation: Truncation,
    pub outer: OuterWall,
}

/// Assembled operator together with the discrete σ₃ on the same unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorAssembly {
    pub matrix: BlockTridiag,
    pub sigma3: BlockTridiag,
    pub params: SpectralParameters,
}

/// Assembles D with the default truncation and an infinite-mass outer wall.
pub fn assemble_sector(
    geom: &SectorGeometry,
    mass: f64,
    gamma: Option<ExtensionParameter>,
    n_modes: usize,
    grid: &RadialGrid,
) -> Result<SectorAssembly> {
    assemble_sector_with(geom, mass, gamma, n_modes, grid, default_truncation(mass), OuterWall::InfiniteMass)
}

pub fn assemble_sector_with(
    geom: &SectorGeometry,
    mass: f64,
    gamma: Option<ExtensionParameter>,
    n_modes: usize,
    grid: &RadialGrid,
    truncation: Truncation,
    outer: OuterWall,
) -> Result<SectorAssembly> {
    if n_modes < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 channels, got {n_modes}")));
    }
    if !mass.is_finite() {
        return Err(Error::InvalidArgument(format!("mass {mass} is not finite")));
    }
    match (geom.is_convex(), gamma) {
        (false, None) => {
            return Err(Error::Configuration(format!(
                "ω = {} > π/2 needs an extension parameter γ",
                geom.omega()
            )));
        }
        (true, Some(_)) => {
            return Err(Error::Configuration(format!(
                "ω = {} ≤ π/2: operator already self-adjoint, γ does not apply",
                geom.omega()
            )));
        }
        _ => {}
    }
    let s = coupling_matrix(n_modes, truncation);
    let kappas: Vec<i64> = (0..n_modes as i64).collect();
    let lay = ChannelLayout {
        geom: *geom,
        kappas: kappas.clone(),
        coupling: Some(&s),
        mass,
        kinetic: true,
        gamma,
        outer,
    };
    let matrix = assemble_staggered(grid, &lay)?;
    let sigma3 = assemble_staggered(grid, &ChannelLayout { mass: 1.0, kinetic: false, ..lay })?;
    Ok(SectorAssembly {
        matrix,
        sigma3,
        params: SpectralParameters {
            omega: geom.omega(),
            mass,
            gamma_phase: gamma.map(|g| g.phase()),
            n_modes,
            grid: *grid,
            truncation,
            outer,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub parameters: SpectralParameters,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub min_abs_eig: f64,
    pub residual_norms: Vec<f64>,
    pub convergence_tag: ConvergenceTag,
    pub method: String,
    /// Set for m < 0 when eigenvalues fall inside (−|m|, |m|).
    pub gap_note: Option<String>,
}

pub const GAP_NOTE: &str = "eigenvalues inside (-|m|, |m|) for m < 0 are reported as candidates only; \
whether point spectrum exists there is unresolved";

impl SpectralReport {
    pub fn from_solution(parameters: SpectralParameters, sol: &EigenSolution) -> Self {
        let min_abs_eig = sol.values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        let m = parameters.mass;
        let gap_note = (m < 0.0 && sol.values.iter().any(|v| v.abs() < m.abs())).then(|| GAP_NOTE.to_string());
        Self {
            parameters,
            eigenvalues: sol.values.clone(),
            min_abs_eig,
            residual_norms: sol.residuals.clone(),
            convergence_tag: sol.tag,
            method: sol.method.clone(),
            gap_note,
        }
    }
}

/// `k` eigenpairs nearest 0 with residual certification.
pub fn eigen_solve(matrix: &BlockTridiag, k: usize, opts: &EigenOptions) -> Result<EigenSolution> {
    eigs_nearest(matrix, k, 0.0, opts)
}

pub fn sector_spectrum(asm: &SectorAssembly, k: usize, opts: &EigenOptions) -> Result<(SpectralReport, EigenSolution)> {
    let sol = eigen_solve(&asm.matrix, k, opts)?;
    Ok((SpectralReport::from_solution(asm.params, &sol), sol))
}

/// Largest distance between consecutive points of {lo, eigenvalues in (lo, hi), hi}.
pub fn max_gap(values: &[f64], lo: f64, hi: f64) -> f64 {
    let mut pts: Vec<f64> = values.iter().copied().filter(|v| *v > lo && *v < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

// ---------------------------------------------------------------- Weyl probes

/// Smooth cut-off: 1 below 1, 0 above 2, exp(1 − 1/(1−t²)) with t = x − 1 between.
pub fn weyl_chi(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        1.0
    } else if x >= 2.0 {
        0.0
    } else {
        let t = x - 1.0;
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// dχ/dx for x ≥ 0.
pub fn weyl_chi_prime(x: f64) -> f64 {
    if x <= 1.0 || x >= 2.0 {
        return 0.0;
    }
    let t = x - 1.0;
    let q = 1.0 - t * t;
    -weyl_chi(x) * 2.0 * t / (q * q)
}

/// (∫_ℝ χ(|t|)² dt, ∫_ℝ χ′(|t|)² dt).
pub fn weyl_chi_integrals() -> (f64, f64) {
    static CELL: OnceLock<(f64, f64)> = OnceLock::new();
    *CELL.get_or_init(|| {
        let c2 = tanh_sinh(|x| weyl_chi(x).powi(2), 1.0, 2.0, 1e-15, 0.0).map(|q| q.value).unwrap_or(f64::NAN);
        let d2 = tanh_sinh(|x| weyl_chi_prime(x).powi(2), 1.0, 2.0, 1e-15, 0.0).map(|q| q.value).unwrap_or(f64::NAN);
        (2.0 * (1.0 + c2), 2.0 * d2)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylProbe {
    pub n: u32,
    pub mass: f64,
    pub lambda_target: f64,
    pub quotient: f64,
}

/// Plane-wave spinor (((λ+m)/(λ−m))^{1/2}, 1) of the m ≥ 0 probe.
pub fn weyl_spinor_positive(m: f64, lambda: f64) -> Spinor {
    Spinor::real(((lambda + m) / (lambda - m)).sqrt(), 1.0)
}

/// u_n(x) = spinor·e^{ix₁k}χ(|x₁|/n)χ(|x₂|/n), k = (λ² − m²)^{1/2}.
pub fn weyl_probe_positive(n: u32, m: f64, lambda: f64, x: [f64; 2]) -> Spinor {
    let k = (lambda * lambda - m * m).sqrt();
    let nf = f64::from(n);
    let amp = weyl_chi(x[0] / nf) * weyl_chi(x[1] / nf);
    weyl_spinor_positive(m, lambda).scale(C64::from_polar(amp, k * x[0]))
}

/// ‖(D − λ)u_n‖/‖u_n‖ for the whole-plane probe, from the closed-form
/// integrals: (1/n)(2∫χ′²/∫χ²)^{1/2}.
pub fn weyl_quotient_positive_mass(n: u32, m: f64, lambda: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("probe scale n must be ≥ 1".into()));
    }
    if !(m >= 0.0) || !(lambda > m) {
        return Err(Error::InvalidArgument(format!("need m ≥ 0 and λ > m, got m = {m}, λ = {lambda}")));
    }
    let (c2, d2) = weyl_chi_integrals();
    // |σ·∇φ w|² = |∇φ|²|w|², and |w|² cancels against ‖u_n‖²
    Ok((2.0 * d2 / c2).sqrt() / f64::from(n))
}

/// u_n(x) = (1, −i)e^{m x₁ − iλx₂}χ(|x₂|/n) on the half-plane x₁ > 0.
pub fn weyl_probe_negative(n: u32, m: f64, lambda: f64, x: [f64; 2]) -> Spinor {
    let amp = (m * x[0]).exp() * weyl_chi(x[1] / f64::from(n));
    Spinor::new(C64::new(1.0, 0.0), C64::new(0.0, -1.0)).scale(C64::from_polar(amp, -lambda * x[1]))
}

/// Boundary matrix on the edge x₁ = 0 of the half-plane probe.
pub fn weyl_negative_boundary() -> Mat2 {
    boundary_matrix(&UnitVector2::new(-1.0, 0.0).expect("unit vector"))
}

/// ‖(D − λ)u_n‖/‖u_n‖ for the half-plane probe: (1/n)(∫χ′²/∫χ²)^{1/2}.
pub fn weyl_quotient_negative_mass(n: u32, m: f64, lambda: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("probe scale n must be ≥ 1".into()));
    }
    if !(m < 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("need m < 0 and finite λ, got m = {m}, λ = {lambda}")));
    }
    let w = Spinor::new(C64::new(1.0, 0.0), C64::new(0.0, -1.0));
    let bw = weyl_negative_boundary().apply(&w);
    if bw != w {
        return Err(Error::Precondition(format!("boundary condition violated by {}", bw.max_diff(&w))));
    }
    let (c2, d2) = weyl_chi_integrals();
    let num = d2 / (-m * f64::from(n));
    let den = f64::from(n) / -m * c2;
    Ok((num / den).sqrt())
}

pub fn weyl_probe(n: u32, m: f64, lambda: f64) -> Result<WeylProbe> {
    let quotient = if m < 0.0 {
        weyl_quotient_negative_mass(n, m, lambda)?
    } else {
        weyl_quotient_positive_mass(n, m, lambda)?
    };
    Ok(WeylProbe { n, mass: m, lambda_target: lambda, quotient })
}

// --------------------------------------------------------------------- virial

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirialEntry {
    pub lambda: f64,
    /// |λ‖v‖² − m⟨σ₃v, v⟩|.
    pub defect: f64,
    /// defect / (|λ|‖v‖²).
    pub relative_defect: f64,
    pub within_gap: bool,
    pub flagged_continuum: bool,
}

/// Flagging threshold on the relative defect.
pub const VIRIAL_FLAG: f64 = 0.05;

/// |λ‖v‖² − m⟨σ₃v, v⟩| with σ₃ given in the same unknowns as v.
pub fn virial_check(sigma3: &BlockTridiag, v: &[f64], lambda: f64, m: f64) -> f64 {
    (lambda * dot(v, v) - m * sigma3.bilinear(v, v)).abs()
}

pub fn virial_entry(sigma3: &BlockTridiag, v: &[f64], lambda: f64, m: f64) -> VirialEntry {
    let defect = virial_check(sigma3, v, lambda, m);
    let nv = dot(v, v);
    let relative_defect = if lambda == 0.0 { 0.0 } else { defect / (lambda.abs() * nv) };
    VirialEntry {
        lambda,
        defect,
        relative_defect,
        within_gap: lambda.abs() <= m.abs(),
        flagged_continuum: relative_defect >= VIRIAL_FLAG,
    }
}

/// One entry per eigenpair of `sol`.
pub fn virial_table(asm: &SectorAssembly, sol: &EigenSolution) -> Vec<VirialEntry> {
    sol.values
        .iter()
        .zip(&sol.vectors)
        .map(|(&l, v)| virial_entry(&asm.sigma3, v, l, asm.params.mass))
        .collect()
}

// ------------------------------------------------------------ square identity

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareIdentity {
    pub du_sq: f64,
    pub sigma_grad_sq: f64,
    pub grad_sq: f64,
    pub u_sq: f64,
    pub boundary_sq: f64,
    /// |‖Du‖² − ‖σ·∇u‖² − m²‖u‖² − m‖u‖²_∂|.
    pub residual: f64,
    /// |‖σ·∇u‖² − ‖∇u‖²|.
    pub gradient_residual: f64,
}

/// Tolerance on the edge condition B_n u = u, relative to max |u|.
pub const BC_TOL: f64 = 1e-10;

/// Evaluates both sides of ‖Du‖² = ‖σ·∇u‖² + m²‖u‖² + m‖u‖²_∂ on a polar
/// sample. The angular samples must include both edges θ = ±ω.
pub fn square_identity(field: &SpinorField, m: f64) -> Result<SquareIdentity> {
    let nr = field.r.len();
    let nt = field.theta.len();
    if nr < 7 || nt < 7 || field.values.len() != nr * nt {
        return Err(Error::InvalidArgument("polar sample too small or inconsistent".into()));
    }
    let omega = field.omega;
    if (field.theta[0] + omega).abs() > 1e-12 || (field.theta[nt - 1] - omega).abs() > 1e-12 {
        return Err(Error::InvalidArgument("angular samples must end on the sector edges".into()));
    }
    // edge condition
    let scale = field.values.iter().map(|u| u.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let normals = [
        (0, UnitVector2::from_angle(field.theta0 - omega - PI / 2.0)),
        (nt - 1, UnitVector2::from_angle(field.theta0 + omega + PI / 2.0)),
    ];
    let mut violation: f64 = 0.0;
    for &(j, n) in &normals {
        let b = boundary_matrix(&n);
        for i in 0..nr {
            let u = field.values[i * nt + j];
            violation = violation.max(b.apply(&u).max_diff(&u) / scale);
        }
    }
    if violation > BC_TOL {
        return Err(Error::Precondition(format!("boundary condition violated, max |B_n u − u| = {violation:e}")));
    }

    let comp = |f: fn(&Spinor) -> C64| -> Vec<C64> { field.values.iter().map(f).collect() };
    let c1 = comp(|s| s.c1);
    let c2 = comp(|s| s.c2);
    let d_r = |c: &[C64]| -> Result<Vec<C64>> {
        let mut out = vec![C64::new(0.0, 0.0); nr * nt];
        for j in 0..nt {
            let col: Vec<C64> = (0..nr).map(|i| c[i * nt + j]).collect();
            for (i, v) in derivative(&field.r, &col, 7)?.into_iter().enumerate() {
                out[i * nt + j] = v;
            }
        }
        Ok(out)
    };
    let d_t = |c: &[C64]| -> Result<Vec<C64>> {
        let mut out = Vec::with_capacity(nr * nt);
        for i in 0..nr {
            out.extend(derivative(&field.theta, &c[i * nt..(i + 1) * nt], 7)?);
        }
        Ok(out)
    };
    let (r1, r2, t1, t2) = (d_r(&c1)?, d_r(&c2)?, d_t(&c1)?, d_t(&c2)?);
    let s1 = Mat2::sigma1();
    let s2 = Mat2::sigma2();
    let s3 = Mat2::sigma3();
    let i_unit = C64::new(0.0, 1.0);
    let (mut du, mut sg, mut gr, mut uu) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..nr {
        let r = field.r[i];
        for j in 0..nt {
            let k = i * nt + j;
            let (sn, cs) = (field.theta[j] + field.theta0).sin_cos();
            let ur = Spinor::new(r1[k], r2[k]);
            let ut = Spinor::new(t1[k], t2[k]);
            let dx = ur.scale(C64::new(cs, 0.0)) - ut.scale(C64::new(sn / r, 0.0));
            let dy = ur.scale(C64::new(sn, 0.0)) + ut.scale(C64::new(cs / r, 0.0));
            let sgrad = s1.apply(&dx) + s2.apply(&dy);
            let u = field.values[k];
            let d = sgrad.scale(-i_unit) + s3.apply(&u).scale(C64::new(m, 0.0));
            let w = field.r_weights[i] * field.theta_weights[j] * r;
            du += w * d.norm_sqr();
            sg += w * sgrad.norm_sqr();
            gr += w * (dx.norm_sqr() + dy.norm_sqr());
            uu += w * u.norm_sqr();
        }
    }
    let bnd: f64 = (0..nr)
        .map(|i| field.r_weights[i] * (field.values[i * nt].norm_sqr() + field.values[i * nt + nt - 1].norm_sqr()))
        .sum();
    Ok(SquareIdentity {
        du_sq: du,
        sigma_grad_sq: sg,
        grad_sq: gr,
        u_sq: uu,
        boundary_sq: bnd,
        residual: (du - sg - m * m * uu - m * bnd).abs(),
        gradient_residual: (sg - gr).abs(),
    })
}

pub fn square_identity_residual(field: &SpinorField, m: f64) -> Result<f64> {
    Ok(square_identity(field, m)?.residual)
}

// ------------------------------------------------------------ radial identity

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialReality {
    /// Re ∫ conj(ȧ)(a/r) r dr over the grid.
    pub value: f64,
    /// |value|.
    pub defect: f64,
    /// 2|value|, which equals |a(r_min)|² − |a(r_max)|² for smooth a.
    pub boundary_trace_sq: f64,
}

/// The radial reality integral for samples of a on `grid`; ȧ is taken
/// from `a_dot` when given, otherwise differentiated numerically.
pub fn radial_reality(grid: &RadialGrid, a: &[C64], a_dot: Option<&[C64]>) -> Result<RadialReality> {
    if a.len() != grid.n || a_dot.is_some_and(|d| d.len() != grid.n) {
        return Err(Error::InvalidArgument("samples do not match the grid".into()));
    }
    let owned;
    let ad = match a_dot {
        Some(d) => d,
        None => {
            owned = grid.derivative(a)?;
            &owned
        }
    };
    let value: f64 = grid.weights().iter().zip(ad).zip(a).map(|((w, d), a)| w * (d.conj() * a).re).sum();
    Ok(RadialReality { value, defect: value.abs(), boundary_trace_sq: 2.0 * value.abs() })
}

pub fn radial_reality_check(grid: &RadialGrid, a: &[C64], a_dot: Option<&[C64]>) -> Result<f64> {
    Ok(radial_reality(grid, a, a_dot)?.defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigenvalues_dense;

    #[test]
    fn chi_profile() {
        assert_eq!(weyl_chi(0.5), 1.0);
        assert_eq!(weyl_chi(2.5), 0.0);
        assert!((weyl_chi(1.5) - (1.0f64 - 1.0 / 0.75).exp()).abs() < 1e-15);
        let h = 1e-6;
        let fd = (weyl_chi(1.3 + h) - weyl_chi(1.3 - h)) / (2.0 * h);
        assert!((fd - weyl_chi_prime(1.3)).abs() < 1e-8);
    }

    #[test]
    fn quotient_domain_errors() {
        assert!(weyl_quotient_positive_mass(1, 1.0, 0.5).is_err());
        assert!(weyl_quotient_negative_mass(1, 0.0, 0.5).is_err());
        assert!(weyl_quotient_positive_mass(0, 1.0, 2.0).is_err());
    }

    #[test]
    fn massless_assembly_is_block_diagonal() {
        let geom = SectorGeometry::new(1.0).unwrap();
        let grid = RadialGrid::uniform(1e-3, 8.0, 40).unwrap();
        let asm = assemble_sector(&geom, 0.0, None, 3, &grid).unwrap();
        let mut all = eigenvalues_dense(&asm.matrix);
        let mut union = Vec::new();
        for k in 0..3 {
            let op = crate::fiber::FiberOperator::new(geom, k).unwrap();
            let f = crate::fiber::fiber_matrix(&op, &grid, OuterWall::InfiniteMass, None).unwrap();
            union.extend(eigenvalues_dense(&f));
        }
        union.sort_by(f64::total_cmp);
        all.sort_by(f64::total_cmp);
        assert_eq!(all.len(), union.len());
        assert!(all.iter().zip(&union).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn gamma_configuration_errors() {
        let grid = RadialGrid::uniform(1e-3, 8.0, 40).unwrap();
        let wide = SectorGeometry::new(2.0).unwrap();
        assert!(matches!(assemble_sector(&wide, 1.0, None, 2, &grid), Err(Error::Configuration(_))));
        let narrow = SectorGeometry::new(1.0).unwrap();
        assert!(assemble_sector(&narrow, 1.0, Some(ExtensionParameter::ONE), 2, &grid).is_err());
        assert!(assemble_sector(&narrow, 1.0, None, 1, &grid).is_err());
    }

    #[test]
    fn synthetic_virial() {
        let s = BlockTridiag::from_dense(nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]))).unwrap();
        let v = [2.0, 0.0];
        assert!((virial_check(&s, &v, 3.0, 1.0) - 2.0 * 4.0).abs() < 1e-15);
    }

    #[test]
    fn max_gap_includes_edges() {
        assert!((max_gap(&[-0.2, 0.1], -0.5, 0.5) - 0.4).abs() < 1e-15);
        assert_eq!(max_gap(&[], -0.5, 0.5), 1.0);
    }
}
