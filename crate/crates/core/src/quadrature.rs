//! Quadrature on reference simplices.
//!
//! Reference interval is [0, 1], reference triangle has vertices (0,0), (1,0),
//! (0,1) and the reference tetrahedron adds (0,0,1). Weights sum to the
//! reference measure. Low degrees use the classical symmetric rules; degrees
//! 3 and 4 use collapsed Gauss-Legendre products, which keep every point
//! inside the simplex with positive weights.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub dim: usize,
    pub degree: usize,
    /// Reference coordinates (first `dim` entries used).
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Barycentric coordinates of point `q`, vertex 0 first.
    pub fn barycentric(&self, q: usize) -> Vec<f64> {
        let p = &self.points[q][..self.dim];
        let mut b = Vec::with_capacity(self.dim + 1);
        b.push(1.0 - p.iter().sum::<f64>());
        b.extend_from_slice(p);
        b
    }

    /// Sum of weights, equal to the reference measure.
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, t);
            dp = d;
            let step = p / d;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, t);
        if d != 0.0 {
            dp = d;
        }
        x[m - 1 - i] = 0.5 * (1.0 + t);
        w[m - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

/// P_n(t) and its derivative.
fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (t * p1 - p0) / (t * t - 1.0))
}

fn check(dim: usize, degree: usize, lowest_dim: usize) -> Result<()> {
    if !(lowest_dim..=3).contains(&dim) {
        return Err(Error::invalid(format!(
            "unsupported quadrature dimension {dim}"
        )));
    }
    if degree > MAX_DEGREE {
        return Err(Error::invalid(format!(
            "quadrature degree {degree} exceeds {MAX_DEGREE}"
        )));
    }
    Ok(())
}

/// Rule on the reference simplex of dimension `dim` (1, 2 or 3).
fn reference_rule(dim: usize, degree: usize) -> QuadRule {
    let (points, weights) = match (dim, degree) {
        (1, _) => {
            let (x, w) = gauss_legendre(degree / 2 + 1);
            (x.iter().map(|&s| [s, 0.0, 0.0]).collect(), w)
        }
        (2, 0 | 1) => (vec![[1.0 / 3.0, 1.0 / 3.0, 0.0]], vec![0.5]),
        (2, 2) => {
            let (a, b) = (1.0 / 6.0, 2.0 / 3.0);
            (
                vec![[a, a, 0.0], [b, a, 0.0], [a, b, 0.0]],
                vec![1.0 / 6.0; 3],
            )
        }
        (3, 0 | 1) => (vec![[0.25; 3]], vec![1.0 / 6.0]),
        (3, 2) => {
            let a = (5.0 - 5f64.sqrt()) / 20.0;
            let b = (5.0 + 3.0 * 5f64.sqrt()) / 20.0;
            (
                vec![[a, a, a], [b, a, a], [a, b, a], [a, a, b]],
                vec![1.0 / 24.0; 4],
            )
        }
        (2, _) => collapsed_triangle(degree),
        _ => collapsed_tetrahedron(degree),
    };
    QuadRule {
        dim,
        degree,
        points,
        weights,
    }
}

/// Duffy map x = s, y = (1 - s) t with Jacobian (1 - s).
fn collapsed_triangle(degree: usize) -> (Vec<[f64; 3]>, Vec<f64>) {
    let (xs, ws) = gauss_legendre((degree + 2) / 2 + 1);
    let (xt, wt) = gauss_legendre(degree / 2 + 1);
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    for (s, a) in xs.iter().zip(&ws) {
        for (t, b) in xt.iter().zip(&wt) {
            pts.push([*s, (1.0 - s) * t, 0.0]);
            wts.push(a * b * (1.0 - s));
        }
    }
    (pts, wts)
}

/// x = s, y = (1 - s) t, z = (1 - s)(1 - t) u with Jacobian (1 - s)^2 (1 - t).
fn collapsed_tetrahedron(degree: usize) -> (Vec<[f64; 3]>, Vec<f64>) {
    let (xs, ws) = gauss_legendre((degree + 3) / 2 + 1);
    let (xt, wt) = gauss_legendre((degree + 2) / 2 + 1);
    let (xu, wu) = gauss_legendre(degree / 2 + 1);
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    for (s, a) in xs.iter().zip(&ws) {
        for (t, b) in xt.iter().zip(&wt) {
            for (u, c) in xu.iter().zip(&wu) {
                pts.push([*s, (1.0 - s) * t, (1.0 - s) * (1.0 - t) * u]);
                wts.push(a * b * c * (1.0 - s) * (1.0 - s) * (1.0 - t));
            }
        }
    }
    (pts, wts)
}

/// Rule exact to `degree` on the reference triangle (dim 2) or tetrahedron (dim 3).
pub fn simplex_rule(dim: usize, degree: usize) -> Result<QuadRule> {
    check(dim, degree, 2)?;
    Ok(reference_rule(dim, degree))
}

/// Rule on the reference facet of a `dim`-dimensional cell: the unit
/// interval in 2D, the reference triangle in 3D.
pub fn facet_rule(dim: usize, degree: usize) -> Result<QuadRule> {
    check(dim, degree, 2)?;
    Ok(reference_rule(dim - 1, degree))
}
