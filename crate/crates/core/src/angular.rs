//! The angular operator K = σ₃(−2i∂θ) + 1 on a sector with infinite-mass
//! edges: eigenvalues, eigenspinors and the σ₃ coupling between modes.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_complex;
use crate::spinor::{Mat2, Spinor, UnitVector2, sigma_dot};

/// Tolerance below which a half-aperture counts as exactly π/2.
pub const CONVEXITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorGeometry {
    omega: f64,
    theta0: f64,
}

impl SectorGeometry {
    pub fn new(omega: f64) -> Result<Self> {
        Self::rotated(omega, 0.0)
    }

    pub fn rotated(omega: f64, theta0: f64) -> Result<Self> {
        if !(omega > 0.0 && omega < PI) {
            return Err(Error::InvalidArgument(format!("half-aperture ω = {omega} must lie in (0, π)")));
        }
        if !theta0.is_finite() {
            return Err(Error::InvalidArgument("rotation angle must be finite".into()));
        }
        Ok(Self { omega, theta0 })
    }

    /// ω = pπ/q.
    pub fn from_fraction(p: f64, q: f64) -> Result<Self> {
        if q == 0.0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        Self::new(p * PI / q)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    /// ω ≤ π/2, with the boundary tolerance [`CONVEXITY_TOL`].
    pub fn is_convex(&self) -> bool {
        self.omega <= FRAC_PI_2 + CONVEXITY_TOL
    }

    /// λ₀ = π/(2ω).
    pub fn lambda0(&self) -> f64 {
        lambda_kappa(0, self)
    }

    /// ν₀ = (π − 2ω)/(4ω).
    pub fn nu0(&self) -> f64 {
        (PI - 2.0 * self.omega) / (4.0 * self.omega)
    }

    pub fn mode(&self, kappa: i64) -> AngularMode {
        AngularMode { kappa, lambda: lambda_kappa(kappa, self), geometry: *self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularMode {
    pub kappa: i64,
    pub lambda: f64,
    pub geometry: SectorGeometry,
}

impl AngularMode {
    pub fn eval(&self, theta: f64) -> Result<Spinor> {
        mode_function(self.kappa, &self.geometry, theta)
    }
}

/// λ_κ = π(1 + 2κ)/(2ω).
pub fn lambda_kappa(kappa: i64, geom: &SectorGeometry) -> f64 {
    PI * (1.0 + 2.0 * kappa as f64) / (2.0 * geom.omega)
}

fn parity(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 }
}

/// u_κ(θ) without the domain check.
pub(crate) fn mode_unchecked(kappa: i64, geom: &SectorGeometry, theta: f64) -> Spinor {
    let mu = 0.5 * (lambda_kappa(kappa, geom) - 1.0);
    let c = 1.0 / (2.0 * geom.omega.sqrt());
    let up = C64::from_polar(c, theta * mu);
    let down = C64::new(0.0, parity(kappa + 1) * c) * C64::from_polar(1.0, -theta * mu);
    Spinor::new(up, down)
}

/// Normalized eigenspinor u_κ of K at angle θ ∈ [−ω, ω].
pub fn mode_function(kappa: i64, geom: &SectorGeometry, theta: f64) -> Result<Spinor> {
    if !(theta.abs() <= geom.omega) {
        return Err(Error::OutOfDomain(format!("θ = {theta} outside [−{0}, {0}]", geom.omega)));
    }
    Ok(mode_unchecked(kappa, geom, theta))
}

/// Gauss–Legendre degree that integrates products of modes up to |κ| ≤ `kmax` to round-off.
pub fn mode_quadrature_degree(kmax: i64, geom: &SectorGeometry) -> usize {
    let freq = lambda_kappa(kmax.abs() + 1, geom).abs();
    48 + (2.0 * freq * geom.omega).ceil() as usize
}

/// ⟨u_j, u_κ⟩ over (−ω, ω) by Gauss–Legendre quadrature.
pub fn mode_inner_product(j: i64, kappa: i64, geom: &SectorGeometry) -> Result<C64> {
    let deg = mode_quadrature_degree(j.abs().max(kappa.abs()), geom);
    gauss_legendre_complex(deg, -geom.omega, geom.omega, |t| {
        mode_unchecked(j, geom, t).inner(&mode_unchecked(kappa, geom, t))
    })
}

/// Applies K = σ₃(−2i∂θ) + 1 to samples on the uniform grid
/// θ_k = −ω + 2ωk/(n−1), using fourth-order differences with one-sided
/// closures at the edges.
pub fn apply_k(field: &[Spinor], geom: &SectorGeometry) -> Result<Vec<Spinor>> {
    let n = field.len();
    if n < 8 {
        return Err(Error::InvalidArgument(format!("apply_K needs at least 8 samples, got {n}")));
    }
    let h = 2.0 * geom.omega / (n - 1) as f64;
    let d1 = |sel: &dyn Fn(&Spinor) -> C64| -> Vec<C64> {
        let f: Vec<C64> = field.iter().map(sel).collect();
        fd4(&f, h)
    };
    let du1 = d1(&|s| s.c1);
    let du2 = d1(&|s| s.c2);
    let m2i = C64::new(0.0, -2.0);
    Ok(field
        .iter()
        .enumerate()
        .map(|(k, u)| Spinor::new(m2i * du1[k] + u.c1, -(m2i * du2[k]) + u.c2))
        .collect())
}

/// Fourth-order first derivative on a uniform grid.
fn fd4(f: &[C64], h: f64) -> Vec<C64> {
    let n = f.len();
    let mut d = vec![C64::new(0.0, 0.0); n];
    let inv = 1.0 / h;
    // one-sided five-point stencils at the two outermost nodes on each side
    let fwd0 = [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -1.0 / 4.0];
    let fwd1 = [-1.0 / 4.0, -5.0 / 6.0, 3.0 / 2.0, -1.0 / 2.0, 1.0 / 12.0];
    for k in 0..5 {
        d[0] += f[k] * fwd0[k];
        d[1] += f[k] * fwd1[k];
        d[n - 1] -= f[n - 1 - k] * fwd0[k];
        d[n - 2] -= f[n - 1 - k] * fwd1[k];
    }
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - f[i - 1] * 8.0 + f[i + 1] * 8.0 - f[i + 2]) / 12.0;
    }
    d.iter().map(|z| z * inv).collect()
}

/// Uniform θ-grid used by [`apply_k`].
pub fn uniform_theta_grid(n: usize, geom: &SectorGeometry) -> Vec<f64> {
    let h = 2.0 * geom.omega / (n - 1) as f64;
    (0..n).map(|k| if k == n - 1 { geom.omega } else { -geom.omega + h * k as f64 }).collect()
}

/// ⟨u_j, σ₃u_κ⟩ in closed form; real, symmetric and independent of ω.
pub fn sigma3_coupling_real(j: i64, kappa: i64) -> f64 {
    let n = kappa - j;
    if n.rem_euclid(2) == 0 {
        return 0.0;
    }
    let sign = parity((n - 1) / 2);
    2.0 * sign / (PI * n as f64)
}

pub fn sigma3_coupling(j: i64, kappa: i64, _geom: &SectorGeometry) -> C64 {
    C64::new(sigma3_coupling_real(j, kappa), 0.0)
}

/// How the σ₃ coupling is compressed onto finitely many channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truncation {
    /// Plain Galerkin block of σ₃.
    Galerkin,
    /// The Galerkin block with its eigenvalues replaced by their signs, so
    /// the compressed σ₃ remains a unitary involution.
    Involutive,
}

/// Order of the modes in a truncated coupling matrix: κ = 0..N−1 followed
/// by their partners −(κ+1).
pub fn paired_modes(n_modes: usize) -> Vec<i64> {
    let n = n_modes as i64;
    (0..n).chain((0..n).map(|k| -(k + 1))).collect()
}

/// σ₃ compressed to span{u_κ, u_{−(κ+1)} : 0 ≤ κ < N}, ordered as in
/// [`paired_modes`].
pub fn coupling_matrix(n_modes: usize, truncation: Truncation) -> DMatrix<f64> {
    let modes = paired_modes(n_modes);
    let dim = modes.len();
    let s = DMatrix::from_fn(dim, dim, |a, b| sigma3_coupling_real(modes[a], modes[b]));
    match truncation {
        Truncation::Galerkin => s,
        Truncation::Involutive => {
            let eig = SymmetricEigen::new(s);
            let signs = eig.eigenvalues.map(|w| if w > 0.0 { 1.0 } else if w < 0.0 { -1.0 } else { 0.0 });
            let q = &eig.eigenvectors;
            let mut out = q * DMatrix::from_diagonal(&signs) * q.transpose();
            // exact symmetry
            let t = out.transpose();
            out = (out + t) * 0.5;
            out
        }
    }
}

/// σ·e_rad(θ) as a matrix.
pub fn sigma_rad(theta: f64) -> Mat2 {
    sigma_dot(&UnitVector2::e_rad(theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinor::boundary_matrix;

    fn geom(w: f64) -> SectorGeometry {
        SectorGeometry::new(w).unwrap()
    }

    #[test]
    fn geometry_validation_and_derived() {
        assert!(SectorGeometry::new(0.0).is_err());
        assert!(SectorGeometry::new(PI).is_err());
        assert!(SectorGeometry::new(f64::NAN).is_err());
        for w in [0.1, 1.0, 1.5, 2.0, 3.0] {
            let g = geom(w);
            assert!((g.nu0() - (g.lambda0() - 1.0) / 2.0).abs() < 1e-15);
        }
        assert!(geom(FRAC_PI_2).is_convex());
        assert!(!geom(1.6).is_convex());
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda_kappa(0, &geom(FRAC_PI_2)), 1.0);
        assert!((lambda_kappa(0, &geom(PI / 3.0)) - 1.5).abs() < 1e-15);
        assert_eq!(lambda_kappa(1, &geom(FRAC_PI_2)), 3.0);
        assert_eq!(lambda_kappa(-2, &geom(FRAC_PI_2)), -3.0);
    }

    #[test]
    fn mode_domain_and_gauge() {
        let g = geom(1.0);
        assert!(mode_function(0, &g, 1.0 + 1e-9).is_err());
        let u = mode_function(3, &g, 0.0).unwrap();
        assert_eq!(u.c1, C64::new(1.0 / (2.0 * 1.0f64.sqrt()), 0.0));
        for k in -4..4 {
            let u = mode_function(k, &g, 0.37).unwrap();
            assert!((u.norm_sqr() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn mode_boundary_conditions() {
        let g = geom(0.7 * PI);
        let bp = boundary_matrix(&UnitVector2::e_ang(g.omega()));
        let bm = boundary_matrix(&UnitVector2::e_ang(-g.omega()).neg());
        for k in -5..5 {
            let up = mode_function(k, &g, g.omega()).unwrap();
            let um = mode_function(k, &g, -g.omega()).unwrap();
            assert!(bp.apply(&up).max_diff(&up) < 1e-13);
            assert!(bm.apply(&um).max_diff(&um) < 1e-13);
        }
    }

    #[test]
    fn pairing_identity() {
        let g = geom(1.2);
        let k = 2;
        let lhs = mode_function(-(k + 1), &g, 0.4).unwrap();
        let rhs = sigma_rad(0.4).apply(&mode_function(k, &g, 0.4).unwrap()).scale(C64::new(0.0, parity(k)));
        assert!(lhs.max_diff(&rhs) < 1e-13);
    }

    #[test]
    fn k_eigenrelation() {
        let g = geom(1.0);
        let th = uniform_theta_grid(512, &g);
        let u: Vec<Spinor> = th.iter().map(|&t| mode_function(0, &g, t).unwrap()).collect();
        let ku = apply_k(&u, &g).unwrap();
        let lam = g.lambda0();
        let err = ku
            .iter()
            .zip(&u)
            .map(|(a, b)| a.max_diff(&b.scale(C64::new(lam, 0.0))) / b.norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        assert!(apply_k(&u[..7], &g).is_err());
    }

    #[test]
    fn coupling_closed_form() {
        assert_eq!(sigma3_coupling_real(4, 4), 0.0);
        assert!((sigma3_coupling_real(0, 1) - 2.0 / PI).abs() < 1e-15);
        assert!((sigma3_coupling_real(0, 3) + 2.0 / (3.0 * PI)).abs() < 1e-15);
        assert_eq!(sigma3_coupling_real(2, 5), sigma3_coupling_real(5, 2));
    }

    #[test]
    fn involutive_truncation_squares_to_one() {
        let s = coupling_matrix(12, Truncation::Involutive);
        let sq = &s * &s;
        let id = DMatrix::<f64>::identity(24, 24);
        assert!((sq - id).amax() < 1e-12);
    }
}
