//! Two-component spinors, 2×2 complex matrices and the Pauli algebra.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Tolerance for accepting a vector as unit length.
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spinor {
    pub c1: C64,
    pub c2: C64,
}

impl Spinor {
    pub const fn new(c1: C64, c2: C64) -> Self {
        Self { c1, c2 }
    }

    pub fn real(a: f64, b: f64) -> Self {
        Self::new(C64::new(a, 0.0), C64::new(b, 0.0))
    }

    pub fn zero() -> Self {
        Self::new(ZERO, ZERO)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c1.norm_sqr() + self.c2.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// ⟨self, other⟩, antilinear in the first slot.
    pub fn inner(&self, other: &Spinor) -> C64 {
        self.c1.conj() * other.c1 + self.c2.conj() * other.c2
    }

    pub fn scale(&self, s: C64) -> Spinor {
        Spinor::new(self.c1 * s, self.c2 * s)
    }

    pub fn conj(&self) -> Spinor {
        Spinor::new(self.c1.conj(), self.c2.conj())
    }

    /// Largest componentwise modulus of `self - other`.
    pub fn max_diff(&self, other: &Spinor) -> f64 {
        (self.c1 - other.c1).norm().max((self.c2 - other.c2).norm())
    }
}

impl Add for Spinor {
    type Output = Spinor;
    fn add(self, o: Spinor) -> Spinor {
        Spinor::new(self.c1 + o.c1, self.c2 + o.c2)
    }
}

impl Sub for Spinor {
    type Output = Spinor;
    fn sub(self, o: Spinor) -> Spinor {
        Spinor::new(self.c1 - o.c1, self.c2 - o.c2)
    }
}

impl Neg for Spinor {
    type Output = Spinor;
    fn neg(self) -> Spinor {
        Spinor::new(-self.c1, -self.c2)
    }
}

impl Mul<Spinor> for C64 {
    type Output = Spinor;
    fn mul(self, s: Spinor) -> Spinor {
        s.scale(self)
    }
}

impl Mul<Spinor> for f64 {
    type Output = Spinor;
    fn mul(self, s: Spinor) -> Spinor {
        s.scale(C64::new(self, 0.0))
    }
}

/// Row-major 2×2 complex matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self { a, b, c, d }
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn sigma1() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn sigma2() -> Self {
        Self::new(ZERO, C64::new(0.0, -1.0), I, ZERO)
    }

    pub const fn sigma3() -> Self {
        Self::new(ONE, ZERO, ZERO, C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, s: C64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn adjoint(&self) -> Mat2 {
        Mat2::new(self.a.conj(), self.c.conj(), self.b.conj(), self.d.conj())
    }

    pub fn trace(&self) -> C64 {
        self.a + self.d
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, u: &Spinor) -> Spinor {
        Spinor::new(self.a * u.c1 + self.b * u.c2, self.c * u.c1 + self.d * u.c2)
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        [self.a, self.b, self.c, self.d]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()).sqrt()
    }

    pub fn max_diff(&self, other: &Mat2) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_diff(&self.adjoint()) <= tol
    }

    pub fn commutator(&self, o: &Mat2) -> Mat2 {
        *self * *o - *o * *self
    }

    pub fn anticommutator(&self, o: &Mat2) -> Mat2 {
        *self * *o + *o * *self
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.a.re + self.d.re);
        let half = 0.5 * (self.a.re - self.d.re);
        let r = (half * half + self.b.norm_sqr()).sqrt();
        [mean - r, mean + r]
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl Mul<Spinor> for Mat2 {
    type Output = Spinor;
    fn mul(self, u: Spinor) -> Spinor {
        self.apply(&u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitVector2 {
    vx: f64,
    vy: f64,
}

impl UnitVector2 {
    pub fn new(vx: f64, vy: f64) -> Result<Self> {
        let n2 = vx * vx + vy * vy;
        if !n2.is_finite() || (n2 - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidArgument(format!(
                "({vx}, {vy}) is not a unit vector (|v|² = {n2})"
            )));
        }
        Ok(Self { vx, vy })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(vx: f64, vy: f64) -> Result<Self> {
        let n = vx.hypot(vy);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero vector".into()));
        }
        Ok(Self { vx: vx / n, vy: vy / n })
    }

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { vx: c, vy: s }
    }

    /// Radial unit vector (cos θ, sin θ).
    pub fn e_rad(theta: f64) -> Self {
        Self::from_angle(theta)
    }

    /// Angular unit vector (−sin θ, cos θ), the θ-derivative of `e_rad`.
    pub fn e_ang(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { vx: -s, vy: c }
    }

    pub fn vx(&self) -> f64 {
        self.vx
    }

    pub fn vy(&self) -> f64 {
        self.vy
    }

    pub fn neg(&self) -> Self {
        Self { vx: -self.vx, vy: -self.vy }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.vx, self.vy]
    }
}

/// σ·a for a real vector with two or three components.
pub fn pauli_dot(a: &[f64]) -> Result<Mat2> {
    match a.len() {
        2 => Ok(pauli_dot2(a[0], a[1])),
        3 => Ok(pauli_dot2(a[0], a[1]) + Mat2::sigma3().scale(C64::new(a[2], 0.0))),
        n => Err(Error::InvalidArgument(format!(
            "pauli_dot expects 2 or 3 components, got {n}"
        ))),
    }
}

/// σ₁x + σ₂y.
pub fn pauli_dot2(x: f64, y: f64) -> Mat2 {
    Mat2::new(ZERO, C64::new(x, -y), C64::new(x, y), ZERO)
}

pub fn sigma_dot(v: &UnitVector2) -> Mat2 {
    pauli_dot2(v.vx, v.vy)
}

/// B_v = −iσ₃(σ·v).
pub fn boundary_matrix(v: &UnitVector2) -> Mat2 {
    (Mat2::sigma3() * sigma_dot(v)).scale(-I)
}

/// Checked variant for raw components.
pub fn boundary_matrix_xy(vx: f64, vy: f64) -> Result<Mat2> {
    Ok(boundary_matrix(&UnitVector2::new(vx, vy)?))
}

/// Normalized spinor spanning ker(B_v − sign·1₂), first nonzero component
/// real and positive.
pub fn bc_eigenvector(v: &UnitVector2, sign: i32) -> Result<Spinor> {
    let s = match sign {
        1 => 1.0,
        -1 => -1.0,
        _ => return Err(Error::InvalidArgument(format!("sign must be ±1, got {sign}"))),
    };
    // projector (1 + sB)/2 onto the requested eigenspace
    let p = (Mat2::identity() + boundary_matrix(v).scale(C64::new(s, 0.0))).scale(C64::new(0.5, 0.0));
    let col0 = Spinor::new(p.a, p.c);
    let col1 = Spinor::new(p.b, p.d);
    let col = if col0.norm_sqr() >= col1.norm_sqr() { col0 } else { col1 };
    let col = col.scale(C64::new(1.0 / col.norm(), 0.0));
    let lead = if col.c1.norm() > 1e-15 { col.c1 } else { col.c2 };
    let phase = lead.conj() / lead.norm();
    Ok(col.scale(phase))
}

/// Charge conjugation Cu = σ₁ū.
pub fn charge_conjugate(u: &Spinor) -> Spinor {
    Spinor::new(u.c2.conj(), u.c1.conj())
}

/// e^{iφσ₃} in closed form.
pub fn sigma3_phase(phi: f64) -> Mat2 {
    let e = C64::from_polar(1.0, phi);
    Mat2::new(e, ZERO, ZERO, e.conj())
}

/// e^{−iσ₂θ} = [[cos θ, −sin θ], [sin θ, cos θ]], the planar rotation by θ.
pub fn rotation(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, -s], [s, c]]
}

pub fn rotate_vec(theta: f64, x: [f64; 2]) -> [f64; 2] {
    let r = rotation(theta);
    [r[0][0] * x[0] + r[0][1] * x[1], r[1][0] * x[0] + r[1][1] * x[1]]
}

/// Spinor field sampled on a polar tensor grid of a (possibly rotated)
/// sector, together with the quadrature weights that define its L² norm.
///
/// Samples are stored r-major: `values[i * theta.len() + j]` sits at
/// radius `r[i]` and polar angle `theta[j] + theta0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinorField {
    pub omega: f64,
    pub theta0: f64,
    pub r: Vec<f64>,
    pub r_weights: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_weights: Vec<f64>,
    pub values: Vec<Spinor>,
}

impl SpinorField {
    /// Samples `f(r, θ)` (θ relative to the sector axis) on the given grid.
    pub fn sample<F>(
        omega: f64,
        theta0: f64,
        r: Vec<f64>,
        r_weights: Vec<f64>,
        theta: Vec<f64>,
        theta_weights: Vec<f64>,
        mut f: F,
    ) -> Result<Self>
    where
        F: FnMut(f64, f64) -> Spinor,
    {
        if r.len() != r_weights.len() || theta.len() != theta_weights.len() {
            return Err(Error::InvalidArgument("grid and weight lengths differ".into()));
        }
        if let Some(t) = theta.iter().find(|t| t.abs() > omega * (1.0 + 1e-14)) {
            return Err(Error::OutOfDomain(format!("angle {t} outside (−{omega}, {omega})")));
        }
        let mut values = Vec::with_capacity(r.len() * theta.len());
        for &ri in &r {
            for &tj in &theta {
                values.push(f(ri, tj));
            }
        }
        Ok(Self { omega, theta0, r, r_weights, theta, theta_weights, values })
    }

    /// L² norm with the polar measure r dr dθ.
    pub fn norm(&self) -> f64 {
        let nt = self.theta.len();
        let mut acc = 0.0;
        for (i, (&ri, &wr)) in self.r.iter().zip(&self.r_weights).enumerate() {
            for (j, &wt) in self.theta_weights.iter().enumerate() {
                acc += wr * wt * ri * self.values[i * nt + j].norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Cartesian position of sample (i, j).
    pub fn position(&self, i: usize, j: usize) -> [f64; 2] {
        let (s, c) = (self.theta[j] + self.theta0).sin_cos();
        [self.r[i] * c, self.r[i] * s]
    }
}

/// Pulls a field on the sector rotated by `theta0` back to the standard
/// sector: (U v)(x) = e^{i(θ₀/2)σ₃} v(e^{−iσ₂θ₀} x).
pub fn rotate_field(theta0: f64, field: &SpinorField) -> Result<SpinorField> {
    if !(0.0..=2.0 * std::f64::consts::PI).contains(&theta0) {
        return Err(Error::InvalidArgument(format!("θ₀ = {theta0} outside [0, 2π]")));
    }
    if (field.theta0 - theta0).abs() > 1e-14 {
        return Err(Error::InvalidArgument(format!(
            "field lives on the sector rotated by {}, not {theta0}",
            field.theta0
        )));
    }
    let u = sigma3_phase(0.5 * theta0);
    let mut out = field.clone();
    out.theta0 = 0.0;
    for v in out.values.iter_mut() {
        *v = u.apply(v);
    }
    Ok(out)
}

/// Applies −iσ·∇ + mσ₃ with second-order centered differences on the
/// interior of a uniform Cartesian grid (row-major, `nx` columns). Boundary
/// rows are left at zero.
pub fn apply_dirac_cartesian(values: &[Spinor], nx: usize, ny: usize, h: f64, m: f64) -> Vec<Spinor> {
    let mut out = vec![Spinor::zero(); values.len()];
    let s1 = Mat2::sigma1();
    let s2 = Mat2::sigma2();
    let s3 = Mat2::sigma3().scale(C64::new(m, 0.0));
    let inv = 1.0 / (2.0 * h);
    for iy in 1..ny.saturating_sub(1) {
        for ix in 1..nx.saturating_sub(1) {
            let k = iy * nx + ix;
            let dx = inv * (values[k + 1] - values[k - 1]);
            let dy = inv * (values[k + nx] - values[k - nx]);
            let grad = s1.apply(&dx) + s2.apply(&dy);
            out[k] = grad.scale(-I) + s3.apply(&values[k]);
        }
    }
    out
}
