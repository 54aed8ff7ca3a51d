//! Polygonal domains: corner apertures, edge boundary matrices and the
//! corner-wise self-adjointness classification.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::angular::SectorGeometry;
use crate::error::{Error, Result};
use crate::fiber::{FiberClass, classify_self_adjoint};
use crate::spinor::{Mat2, UnitVector2, boundary_matrix, rotate_vec};

/// Half-apertures within this distance above π/2 count as convex.
pub const CONVEXITY_TOL: f64 = 1e-12;

/// Label attached to counts of extension parameters for non-convex polygons.
pub const REFLEX_HEURISTIC: &str = "one unit-circle parameter per reflex corner (localization heuristic)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonDomain {
    /// Counterclockwise.
    vertices: Vec<[f64; 2]>,
    normals: Vec<UnitVector2>,
    angles: Vec<f64>,
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(sub(q2, q1), sub(p1, q1));
    let d2 = cross(sub(q2, q1), sub(p2, q1));
    let d3 = cross(sub(p2, p1), sub(q1, p1));
    let d4 = cross(sub(p2, p1), sub(q2, p1));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: [f64; 2], b: [f64; 2], c: [f64; 2], d: f64| {
        d == 0.0 && c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

impl PolygonDomain {
    /// Validates and normalizes to counterclockwise order.
    pub fn new(mut vertices: Vec<[f64; 2]>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidGeometry(format!("a polygon needs at least 3 vertices, got {n}")));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite vertex coordinate".into()));
        }
        let area2: f64 = (0..n).map(|i| cross(vertices[i], vertices[(i + 1) % n])).sum();
        if area2 < 0.0 {
            vertices.reverse();
        }
        let scale = vertices.iter().flatten().fold(0.0f64, |m, c| m.max(c.abs())).max(1.0);
        for i in 0..n {
            let a = vertices[(i + n - 1) % n];
            let b = vertices[i];
            let c = vertices[(i + 1) % n];
            let (u, v) = (sub(b, a), sub(c, b));
            let lu = u[0].hypot(u[1]);
            let lv = v[0].hypot(v[1]);
            if lu <= 1e-14 * scale || lv <= 1e-14 * scale {
                return Err(Error::InvalidGeometry(format!("repeated vertex at index {i}")));
            }
            if (cross(u, v) / (lu * lv)).abs() <= 1e-12 {
                return Err(Error::InvalidGeometry(format!("collinear vertex triple at index {i}")));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_intersect(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n]) {
                    return Err(Error::InvalidGeometry(format!("edges {i} and {j} intersect")));
                }
            }
        }
        let mut normals = Vec::with_capacity(n);
        for i in 0..n {
            let e = sub(vertices[(i + 1) % n], vertices[i]);
            // outward for counterclockwise order: rotate the edge by −π/2
            normals.push(UnitVector2::normalized(e[1], -e[0])?);
        }
        let mut angles = Vec::with_capacity(n);
        let mut turn_sum = 0.0;
        for i in 0..n {
            let u = sub(vertices[i], vertices[(i + n - 1) % n]);
            let v = sub(vertices[(i + 1) % n], vertices[i]);
            let turn = cross(u, v).atan2(u[0] * v[0] + u[1] * v[1]);
            turn_sum += turn;
            angles.push(PI - turn);
        }
        if (turn_sum - TAU).abs() > 1e-10 {
            return Err(Error::InvalidGeometry(format!("exterior angles sum to {turn_sum}, not 2π")));
        }
        Ok(Self { vertices, normals, angles })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Vec<[f64; 2]> = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        Self::new(v)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Outward unit normal of edge i (from vertex i to i+1).
    pub fn normals(&self) -> &[UnitVector2] {
        &self.normals
    }

    /// Interior angle at each vertex, in (0, 2π).
    pub fn interior_angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn reflex_flags(&self) -> Vec<bool> {
        self.angles.iter().map(|a| 0.5 * a > FRAC_PI_2 + CONVEXITY_TOL).collect()
    }

    pub fn rotated(&self, theta: f64) -> Result<Self> {
        Self::new(self.vertices.iter().map(|&v| rotate_vec(theta, v)).collect())
    }
}

pub fn corner_half_apertures(poly: &PolygonDomain) -> Vec<f64> {
    poly.angles.iter().map(|a| 0.5 * a).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "count")]
pub enum PolygonClass {
    SelfAdjoint,
    ExtensionsRequired(usize),
}

impl PolygonClass {
    pub fn is_heuristic(&self) -> bool {
        matches!(self, PolygonClass::ExtensionsRequired(_))
    }
}

/// A single corner of half-aperture ω, classified through its fibers.
pub fn classify_corner(omega: f64) -> Result<PolygonClass> {
    let geom = SectorGeometry::new(omega)?;
    let deficient = (0..3)
        .map(|k| classify_self_adjoint(&geom, k))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|c| *c == FiberClass::DeficiencyOne)
        .count();
    Ok(if deficient == 0 { PolygonClass::SelfAdjoint } else { PolygonClass::ExtensionsRequired(deficient) })
}

pub fn classify_polygon(poly: &PolygonDomain) -> PolygonClass {
    match poly.reflex_flags().iter().filter(|f| **f).count() {
        0 => PolygonClass::SelfAdjoint,
        k => PolygonClass::ExtensionsRequired(k),
    }
}

pub fn edge_boundary_matrix(poly: &PolygonDomain, edge: usize) -> Result<Mat2> {
    let n = poly.normals.get(edge).ok_or_else(|| {
        Error::InvalidArgument(format!("edge {edge} out of range for {} edges", poly.normals.len()))
    })?;
    Ok(boundary_matrix(n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerRow {
    pub vertex: [f64; 2],
    pub interior_angle: f64,
    pub half_aperture: f64,
    pub reflex: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonReport {
    pub classification: PolygonClass,
    pub note: Option<String>,
    pub corners: Vec<CornerRow>,
}

pub fn polygon_report(poly: &PolygonDomain) -> PolygonReport {
    let classification = classify_polygon(poly);
    let flags = poly.reflex_flags();
    let corners = poly
        .vertices
        .iter()
        .zip(&poly.angles)
        .zip(flags)
        .map(|((&vertex, &a), reflex)| CornerRow { vertex, interior_angle: a, half_aperture: 0.5 * a, reflex })
        .collect();
    PolygonReport {
        classification,
        note: classification.is_heuristic().then(|| REFLEX_HEURISTIC.to_string()),
        corners,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> PolygonDomain {
        PolygonDomain::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    fn l_shape() -> PolygonDomain {
        PolygonDomain::new(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]]).unwrap()
    }

    #[test]
    fn square_apertures() {
        let h = corner_half_apertures(&square());
        assert!(h.iter().all(|a| (a - PI / 4.0).abs() < 1e-15));
        assert_eq!(classify_polygon(&square()), PolygonClass::SelfAdjoint);
    }

    #[test]
    fn l_shape_has_one_reflex_corner() {
        let l = l_shape();
        let h = corner_half_apertures(&l);
        assert_eq!(h.iter().filter(|a| (*a - 0.75 * PI).abs() < 1e-14).count(), 1);
        assert_eq!(classify_polygon(&l), PolygonClass::ExtensionsRequired(1));
    }

    #[test]
    fn clockwise_input_is_normalized() {
        let cw = PolygonDomain::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(cw.interior_angles().len(), 4);
        assert_eq!(classify_polygon(&cw), PolygonClass::SelfAdjoint);
        let b = edge_boundary_matrix(&square(), 0).unwrap();
        assert!((b * b).max_diff(&Mat2::identity()) < 1e-15);
        assert!(edge_boundary_matrix(&square(), 4).is_err());
    }

    #[test]
    fn invalid_inputs() {
        assert!(PolygonDomain::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        assert!(PolygonDomain::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1.0]]).is_err());
        let bowtie = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(PolygonDomain::new(bowtie), Err(Error::InvalidGeometry(_))));
        assert!(matches!(PolygonDomain::from_json("[[0,0],[1,0]"), Err(Error::Parse(_))));
    }
}
