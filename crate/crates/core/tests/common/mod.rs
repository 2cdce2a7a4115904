//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Four-point Gauss-Legendre rule on [-1, 1].
fn gauss_legendre_4() -> [(f64, f64); 4] {
    let s = (6.0f64 / 5.0).sqrt();
    let x_in = (3.0 / 7.0 - 2.0 / 7.0 * s).sqrt();
    let x_out = (3.0 / 7.0 + 2.0 / 7.0 * s).sqrt();
    let w_in = (18.0 + 30f64.sqrt()) / 36.0;
    let w_out = (18.0 - 30f64.sqrt()) / 36.0;
    [(-x_out, w_out), (-x_in, w_in), (x_in, w_in), (x_out, w_out)]
}

/// Gauss-Legendre on [0, 1].
fn gl01() -> Vec<(f64, f64)> {
    gauss_legendre_4()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// Collapsed-coordinate tensor rule on the reference simplex: points in
/// reference coordinates and weights summing to `1 / d!`.
pub fn duffy_rule(dim: usize) -> Vec<(Vec<f64>, f64)> {
    let g = gl01();
    let mut out = Vec::new();
    match dim {
        1 => {
            for &(u, wu) in &g {
                out.push((vec![u], wu));
            }
        }
        2 => {
            for &(u, wu) in &g {
                for &(v, wv) in &g {
                    out.push((vec![u, v * (1.0 - u)], wu * wv * (1.0 - u)));
                }
            }
        }
        3 => {
            for &(u, wu) in &g {
                for &(v, wv) in &g {
                    for &(w, ww) in &g {
                        let y = v * (1.0 - u);
                        let z = w * (1.0 - u) * (1.0 - v);
                        out.push((vec![u, y, z], wu * wv * ww * (1.0 - u).powi(2) * (1.0 - v)));
                    }
                }
            }
        }
        _ => panic!("unsupported dimension {dim}"),
    }
    out
}

/// Affine simplex geometry computed with nalgebra.
pub struct Simplex {
    pub dim: usize,
    /// `|det J|` of the reference map.
    pub jac_det: f64,
    /// Gradients of the barycentric coordinates, one column per vertex.
    pub grads: DMatrix<f64>,
}

impl Simplex {
    pub fn new(dim: usize, pts: &[Vec<f64>]) -> Simplex {
        let j = DMatrix::from_fn(dim, dim, |r, c| pts[c + 1][r] - pts[0][r]);
        let det = j.determinant();
        let jinv_t = j.try_inverse().expect("degenerate simplex").transpose();
        let mut grads = DMatrix::zeros(dim, dim + 1);
        for k in 0..dim {
            let mut e = DVector::zeros(dim);
            e[k] = 1.0;
            let g = &jinv_t * e;
            grads.set_column(k + 1, &g);
        }
        let g0 = -grads.columns(1, dim).column_sum();
        grads.set_column(0, &g0);
        Simplex {
            dim,
            jac_det: det.abs(),
            grads,
        }
    }

    /// Integral of `f(barycentric)` over the physical cell.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        duffy_rule(self.dim)
            .iter()
            .map(|(xi, w)| {
                let mut bary = vec![1.0 - xi.iter().sum::<f64>()];
                bary.extend_from_slice(xi);
                w * f(&bary)
            })
            .sum::<f64>()
            * self.jac_det
    }

    /// Gradient of the vector basis function `lambda_a e_i`, row-major `d x d`.
    fn basis_grad(&self, a: usize, i: usize) -> DMatrix<f64> {
        let d = self.dim;
        let mut g = DMatrix::zeros(d, d);
        for k in 0..d {
            g[(i, k)] = self.grads[(k, a)];
        }
        g
    }
}

pub struct Lame {
    pub lambda: f64,
    pub mu: f64,
    pub laplacian: bool,
}

/// Displacement block, local dof `a * d + i`.
pub fn oracle_elasticity(s: &Simplex, lame: &Lame) -> DMatrix<f64> {
    let d = s.dim;
    let n = (d + 1) * d;
    DMatrix::from_fn(n, n, |r, c| {
        let (ga, gb) = (s.basis_grad(r / d, r % d), s.basis_grad(c / d, c % d));
        let v = if lame.laplacian {
            ga.dot(&gb)
        } else {
            let ea = 0.5 * (&ga + ga.transpose());
            let eb = 0.5 * (&gb + gb.transpose());
            2.0 * lame.mu * ea.dot(&eb) + lame.lambda * ga.trace() * gb.trace()
        };
        s.integrate(|_| v)
    })
}

/// `int kinv (lambda_a e_i) . (lambda_b e_j)`.
pub fn oracle_darcy_mass(s: &Simplex, kinv: &DMatrix<f64>) -> DMatrix<f64> {
    let d = s.dim;
    let n = (d + 1) * d;
    DMatrix::from_fn(n, n, |r, c| {
        let (a, i, b, j) = (r / d, r % d, c / d, c % d);
        kinv[(i, j)] * s.integrate(|l| l[a] * l[b])
    })
}

/// `-int div(lambda_a e_i)` per local dof.
pub fn oracle_divergence(s: &Simplex) -> Vec<f64> {
    let d = s.dim;
    (0..(d + 1) * d)
        .map(|r| {
            let g = s.basis_grad(r / d, r % d);
            let div = g.trace();
            -s.integrate(|_| div)
        })
        .collect()
}

/// Measure of a facet given by `d` points in `d` dimensions.
pub fn facet_measure(pts: &[Vec<f64>]) -> f64 {
    let d = pts[0].len();
    let k = pts.len() - 1;
    let e = DMatrix::from_fn(d, k, |r, c| pts[c + 1][r] - pts[0][r]);
    let gram = e.transpose() * &e;
    let reference: f64 = duffy_rule(k).iter().map(|(_, w)| w).sum();
    gram.determinant().sqrt() * reference
}

pub fn longest_edge(pts: &[Vec<f64>]) -> f64 {
    let mut h: f64 = 0.0;
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let l: f64 = pts[a]
                .iter()
                .zip(&pts[b])
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            h = h.max(l);
        }
    }
    h
}

/// Random simplex with bounded shape quality, scaled and shifted.
pub fn random_simplex<R: Rng>(rng: &mut R, dim: usize) -> Vec<Vec<f64>> {
    loop {
        let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
        let shift: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let pts: Vec<Vec<f64>> = (0..=dim)
            .map(|_| {
                (0..dim)
                    .map(|k| shift[k] + scale * rng.gen_range(0.0..1.0))
                    .collect()
            })
            .collect();
        let j = DMatrix::from_fn(dim, dim, |r, c| pts[c + 1][r] - pts[0][r]);
        let h = longest_edge(&pts);
        if j.determinant().abs() > 0.02 * h.powi(dim as i32) {
            return pts;
        }
    }
}

/// Random symmetric positive definite `d x d` matrix.
pub fn random_spd<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    &g * g.transpose() + DMatrix::identity(dim, dim) * rng.gen_range(0.1..2.0)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Largest entrywise difference relative to the largest reference entry.
pub fn rel_diff(got: &DMatrix<f64>, want: &DMatrix<f64>) -> f64 {
    max_abs(&(got - want)) / max_abs(want).max(f64::MIN_POSITIVE)
}

/// `J0` by its power series `sum (-x^2/4)^k / (k!)^2`.
pub fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..120 {
        term *= q / (k as f64 * k as f64);
        sum += term;
    }
    sum
}

/// `J1` by its power series `(x/2) sum (-x^2/4)^k / (k! (k+1)!)`.
pub fn j1_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for k in 1..120 {
        term *= q / (k as f64 * (k + 1) as f64);
        sum += term;
    }
    sum
}

/// Bisection on a bracketing interval until it stops shrinking.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "interval does not bracket a root");
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if f(mid) * flo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}
