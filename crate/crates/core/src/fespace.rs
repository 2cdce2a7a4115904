//! Finite element spaces: continuous vector P1 for displacement and flux,
//! piecewise constant pressure, their numbering in the monolithic vector,
//! and evaluation of analytic data on them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::simplex_rule;

pub type Point = [f64; 3];

type ScalarFn = dyn Fn(&Point, f64) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&Point, f64) -> [f64; 3] + Send + Sync;
type TensorFn = dyn Fn(&Point, f64) -> [[f64; 3]; 3] + Send + Sync;
type FluxFn = dyn Fn(&Point, &[f64; 3], f64) -> f64 + Send + Sync;

/// Scalar function of position and time, optionally with its spatial gradient.
#[derive(Clone)]
pub struct ScalarField {
    value: Arc<ScalarFn>,
    gradient: Option<Arc<VectorFn>>,
}

impl ScalarField {
    pub fn new(f: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            value: Arc::new(f),
            gradient: None,
        }
    }

    pub fn with_gradient(
        mut self,
        g: impl Fn(&Point, f64) -> [f64; 3] + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::new(move |_, _| c).with_gradient(|_, _| [0.0; 3])
    }

    pub fn zero() -> Self {
        ScalarField::constant(0.0)
    }

    pub fn eval(&self, x: &Point, t: f64) -> f64 {
        (self.value)(x, t)
    }

    pub fn gradient(&self, x: &Point, t: f64) -> Option<[f64; 3]> {
        self.gradient.as_ref().map(|g| g(x, t))
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("gradient", &self.gradient.is_some())
            .finish()
    }
}

/// Vector function (padded to three components) with optional Jacobian
/// `J[i][j] = d v_i / d x_j`.
#[derive(Clone)]
pub struct VectorField {
    value: Arc<VectorFn>,
    jacobian: Option<Arc<TensorFn>>,
}

impl VectorField {
    pub fn new(f: impl Fn(&Point, f64) -> [f64; 3] + Send + Sync + 'static) -> Self {
        VectorField {
            value: Arc::new(f),
            jacobian: None,
        }
    }

    pub fn with_jacobian(
        mut self,
        j: impl Fn(&Point, f64) -> [[f64; 3]; 3] + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn constant(c: [f64; 3]) -> Self {
        VectorField::new(move |_, _| c).with_jacobian(|_, _| [[0.0; 3]; 3])
    }

    pub fn zero() -> Self {
        VectorField::constant([0.0; 3])
    }

    pub fn eval(&self, x: &Point, t: f64) -> [f64; 3] {
        (self.value)(x, t)
    }

    pub fn jacobian(&self, x: &Point, t: f64) -> Option<[[f64; 3]; 3]> {
        self.jacobian.as_ref().map(|j| j(x, t))
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("jacobian", &self.jacobian.is_some())
            .finish()
    }
}

/// Prescribed normal flux `q(x, n, t)`.
#[derive(Clone)]
pub struct NormalFlux(Arc<FluxFn>);

impl NormalFlux {
    pub fn new(f: impl Fn(&Point, &[f64; 3], f64) -> f64 + Send + Sync + 'static) -> Self {
        NormalFlux(Arc::new(f))
    }

    pub fn zero() -> Self {
        NormalFlux::new(|_, _, _| 0.0)
    }

    /// Normal component of a prescribed flux vector field.
    pub fn from_vector(z: VectorField) -> Self {
        NormalFlux::new(move |x, n, t| {
            let v = z.eval(x, t);
            v[0] * n[0] + v[1] * n[1] + v[2] * n[2]
        })
    }

    pub fn eval(&self, x: &Point, n: &[f64; 3], t: f64) -> f64 {
        (self.0)(x, n, t)
    }
}

impl fmt::Debug for NormalFlux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("NormalFlux")
    }
}

/// Gradients of the barycentric coordinates of a simplex, one per vertex.
///
/// `points` holds the d+1 vertices padded to 3D; only the first `dim`
/// components of each gradient are meaningful.
pub fn p1_gradients(dim: usize, points: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    let mut grads = vec![[0.0; 3]; dim + 1];
    let e = |i: usize, k: usize| points[i][k] - points[0][k];
    let scale = (1..=dim)
        .map(|i| (0..dim).map(|k| e(i, k).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    if dim == 2 {
        let det = e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0);
        if !(det.abs() > 1e-14 * scale * scale) {
            return Err(Error::DegenerateCell {
                cell: usize::MAX,
                measure: det / 2.0,
            });
        }
        // rows of the inverse of [e1 e2]
        grads[1] = [e(2, 1) / det, -e(2, 0) / det, 0.0];
        grads[2] = [-e(1, 1) / det, e(1, 0) / det, 0.0];
    } else {
        let a = [
            [e(1, 0), e(2, 0), e(3, 0)],
            [e(1, 1), e(2, 1), e(3, 1)],
            [e(1, 2), e(2, 2), e(3, 2)],
        ];
        let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        if !(det.abs() > 1e-14 * scale.powi(3)) {
            return Err(Error::DegenerateCell {
                cell: usize::MAX,
                measure: det / 6.0,
            });
        }
        // gradient of lambda_i is row i-1 of inv(a)
        let cof = |r: usize, c: usize| {
            let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
            let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
            a[r1][c1] * a[r2][c2] - a[r1][c2] * a[r2][c1]
        };
        for i in 0..3 {
            for k in 0..3 {
                grads[i + 1][k] = cof(k, i) / det;
            }
        }
    }
    for k in 0..dim {
        grads[0][k] = -(1..=dim).map(|i| grads[i][k]).sum::<f64>();
    }
    Ok(grads)
}

/// Same as [`p1_gradients`] for a mesh cell, with the cell index in errors.
pub fn cell_gradients(mesh: &Mesh, c: usize) -> Result<Vec<[f64; 3]>> {
    p1_gradients(mesh.dim(), &mesh.cell_points(c)).map_err(|e| match e {
        Error::DegenerateCell { measure, .. } => Error::DegenerateCell { cell: c, measure },
        other => other,
    })
}

/// Maps reference barycentric coordinates to a physical point.
pub fn map_point(points: &[[f64; 3]], bary: &[f64]) -> Point {
    let mut x = [0.0; 3];
    for (p, &b) in points.iter().zip(bary) {
        for k in 0..3 {
            x[k] += b * p[k];
        }
    }
    x
}

/// Numbering of the monolithic unknown vector `[u | z | p | (mean multiplier)]`.
///
/// Vector unknowns are vertex-major: component `c` of vertex `v` sits at
/// `offset + v * dim + c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofLayout {
    pub dim: usize,
    pub n_vertices: usize,
    pub n_cells: usize,
    pub mean_pressure: bool,
}

impl DofLayout {
    pub fn new(mesh: &Mesh, mean_pressure: bool) -> Self {
        DofLayout {
            dim: mesh.dim(),
            n_vertices: mesh.num_vertices(),
            n_cells: mesh.num_cells(),
            mean_pressure,
        }
    }

    pub fn n_u(&self) -> usize {
        self.dim * self.n_vertices
    }

    pub fn n_z(&self) -> usize {
        self.dim * self.n_vertices
    }

    pub fn n_p(&self) -> usize {
        self.n_cells
    }

    pub fn u_offset(&self) -> usize {
        0
    }

    pub fn z_offset(&self) -> usize {
        self.n_u()
    }

    pub fn p_offset(&self) -> usize {
        self.n_u() + self.n_z()
    }

    /// Index of the mean-pressure multiplier, when active.
    pub fn multiplier(&self) -> Option<usize> {
        self.mean_pressure.then(|| self.p_offset() + self.n_p())
    }

    pub fn size(&self) -> usize {
        self.p_offset() + self.n_p() + usize::from(self.mean_pressure)
    }

    pub fn u_dof(&self, vertex: usize, comp: usize) -> usize {
        vertex * self.dim + comp
    }

    pub fn z_dof(&self, vertex: usize, comp: usize) -> usize {
        self.z_offset() + vertex * self.dim + comp
    }

    pub fn p_dof(&self, cell: usize) -> usize {
        self.p_offset() + cell
    }

    pub fn u_range(&self) -> std::ops::Range<usize> {
        0..self.n_u()
    }

    pub fn z_range(&self) -> std::ops::Range<usize> {
        self.z_offset()..self.p_offset()
    }

    pub fn p_range(&self) -> std::ops::Range<usize> {
        self.p_offset()..self.p_offset() + self.n_p()
    }
}

/// Nodal interpolant of a vector field: `dim` coefficients per vertex.
pub fn interpolate_p1(mesh: &Mesh, field: &VectorField, t: f64) -> Vec<f64> {
    let d = mesh.dim();
    let mut out = Vec::with_capacity(d * mesh.num_vertices());
    for v in 0..mesh.num_vertices() {
        let val = field.eval(&mesh.point(v), t);
        out.extend_from_slice(&val[..d]);
    }
    out
}

/// Nodal interpolant of a scalar field.
pub fn interpolate_p1_scalar(mesh: &Mesh, field: &ScalarField, t: f64) -> Vec<f64> {
    (0..mesh.num_vertices())
        .map(|v| field.eval(&mesh.point(v), t))
        .collect()
}

/// Cell averages (the L2 projection onto piecewise constants), degree-4 quadrature.
pub fn project_p0(mesh: &Mesh, field: &ScalarField, t: f64) -> Vec<f64> {
    let rule = simplex_rule(mesh.dim(), 4).expect("degree 4 is supported");
    let bary: Vec<Vec<f64>> = (0..rule.len()).map(|q| rule.barycentric(q)).collect();
    let ref_measure = rule.measure();
    (0..mesh.num_cells())
        .map(|c| {
            let pts = mesh.cell_points(c);
            let s: f64 = bary
                .iter()
                .zip(&rule.weights)
                .map(|(b, w)| w * field.eval(&map_point(&pts, b), t))
                .sum();
            s / ref_measure
        })
        .collect()
}

/// Evaluates a P1 vector coefficient vector at barycentric point `bary` of cell `c`.
pub fn eval_p1(mesh: &Mesh, coeffs: &[f64], c: usize, bary: &[f64]) -> [f64; 3] {
    let d = mesh.dim();
    let mut out = [0.0; 3];
    for (&v, &b) in mesh.cell(c).iter().zip(bary) {
        for k in 0..d {
            out[k] += b * coeffs[v * d + k];
        }
    }
    out
}

/// Prescribed value for one unknown of the monolithic vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofConstraint {
    pub dof: usize,
    pub value: f64,
}

/// `z(vertex) · normal = value` for a continuous P1 flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalConstraint {
    pub vertex: usize,
    pub normal: [f64; 3],
    pub value: f64,
}

fn check_tags(mesh: &Mesh, tags: &[u32]) -> Result<()> {
    for &t in tags {
        if !mesh.has_marker(t) {
            return Err(Error::invalid(format!("unknown boundary marker {t}")));
        }
    }
    Ok(())
}

/// Displacement constraints on every vertex of the tagged facets.
///
/// Only the listed `components` are constrained; the rest stay free.
pub fn collect_dirichlet(
    mesh: &Mesh,
    layout: &DofLayout,
    tags: &[u32],
    components: &[usize],
    field: &VectorField,
    t: f64,
) -> Result<Vec<DofConstraint>> {
    check_tags(mesh, tags)?;
    if let Some(&c) = components.iter().find(|&&c| c >= mesh.dim()) {
        return Err(Error::invalid(format!("component {c} out of range")));
    }
    let mut out = Vec::new();
    for v in mesh.vertices_on(tags) {
        let val = field.eval(&mesh.point(v), t);
        for &c in components {
            out.push(DofConstraint {
                dof: layout.u_offset() + layout.u_dof(v, c),
                value: val[c],
            });
        }
    }
    Ok(out)
}

/// Normal-flux constraints on every vertex of the tagged facets, using the
/// measure-weighted average of the adjacent tagged facet normals.
pub fn collect_normal_flux(
    mesh: &Mesh,
    tags: &[u32],
    flux: &NormalFlux,
    t: f64,
) -> Result<Vec<NormalConstraint>> {
    check_tags(mesh, tags)?;
    let mut acc: BTreeMap<usize, [f64; 3]> = BTreeMap::new();
    for (_, f) in mesh.facets_with_markers(tags) {
        for &v in &f.vertices {
            let e = acc.entry(v).or_insert([0.0; 3]);
            for k in 0..3 {
                e[k] += f.measure * f.normal[k];
            }
        }
    }
    let mut out = Vec::with_capacity(acc.len());
    for (v, n) in acc {
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if len < 1e-12 {
            return Err(Error::Topology(format!(
                "vertex {v}: adjacent boundary normals cancel"
            )));
        }
        let normal = n.map(|x| x / len);
        let value = flux.eval(&mesh.point(v), &normal, t);
        out.push(NormalConstraint {
            vertex: v,
            normal,
            value,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{markers, unit_cube_mesh, unit_square_mesh};
    use std::f64::consts::PI;

    #[test]
    fn reference_triangle_gradients() {
        let pts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let g = p1_gradients(2, &pts).unwrap();
        assert_eq!(g[0], [-1.0, -1.0, 0.0]);
        assert_eq!(g[1], [1.0, 0.0, 0.0]);
        assert_eq!(g[2], [0.0, 1.0, 0.0]);
    }

    #[test]
    fn repeated_vertex_is_degenerate() {
        let pts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
        assert!(matches!(
            p1_gradients(2, &pts),
            Err(Error::DegenerateCell { .. })
        ));
        let pts = [[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        assert!(matches!(
            p1_gradients(3, &pts),
            Err(Error::DegenerateCell { .. })
        ));
    }

    #[test]
    fn gradients_partition_of_unity_and_linear_reproduction() {
        for mesh in [unit_square_mesh(3).unwrap(), unit_cube_mesh(2).unwrap()] {
            let d = mesh.dim();
            for c in 0..mesh.num_cells() {
                let g = cell_gradients(&mesh, c).unwrap();
                let pts = mesh.cell_points(c);
                for k in 0..d {
                    let s: f64 = g.iter().map(|x| x[k]).sum();
                    assert!(s.abs() < 1e-13);
                }
                // grad lambda_i . (x_j - x_0) = delta_ij - delta_i0
                for (i, gi) in g.iter().enumerate() {
                    for j in 1..=d {
                        let dx: f64 = (0..d).map(|k| gi[k] * (pts[j][k] - pts[0][k])).sum();
                        let expect = if i == j {
                            1.0
                        } else if i == 0 {
                            -1.0
                        } else {
                            0.0
                        };
                        assert!((dx - expect).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn layout_blocks_cover_range() {
        let m = unit_square_mesh(3).unwrap();
        for mean in [false, true] {
            let l = DofLayout::new(&m, mean);
            assert_eq!(l.size(), 2 * 16 + 2 * 16 + 18 + usize::from(mean));
            assert_eq!(l.u_range().end, l.z_range().start);
            assert_eq!(l.z_range().end, l.p_range().start);
            assert_eq!(l.multiplier().is_some(), mean);
        }
    }

    #[test]
    fn interpolation_reproduces_constants_and_linears() {
        let m = unit_square_mesh(4).unwrap();
        let c = interpolate_p1(&m, &VectorField::constant([2.5, -1.0, 0.0]), 0.0);
        assert!(c.chunks(2).all(|v| v == [2.5, -1.0]));
        let lin = VectorField::new(|x, _| [1.0 + 2.0 * x[0] - x[1], 3.0 * x[1], 0.0]);
        let coef = interpolate_p1(&m, &lin, 0.0);
        let bary = [0.2, 0.3, 0.5];
        for cell in 0..m.num_cells() {
            let x = map_point(&m.cell_points(cell), &bary);
            let got = eval_p1(&m, &coef, cell, &bary);
            let exact = lin.eval(&x, 0.0);
            assert!((got[0] - exact[0]).abs() < 1e-14 && (got[1] - exact[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn p0_projection() {
        let m = unit_cube_mesh(2).unwrap();
        assert!(project_p0(&m, &ScalarField::constant(4.0), 0.0)
            .iter()
            .all(|&v| (v - 4.0).abs() < 1e-14));
        let lin = ScalarField::new(|x, t| 1.0 + x[0] - 2.0 * x[1] + 0.5 * x[2] + t);
        let p = project_p0(&m, &lin, 2.0);
        for c in 0..m.num_cells() {
            let x = m.cell_centroid(c);
            assert!((p[c] - lin.eval(&x, 2.0)).abs() < 1e-13);
        }
        // smooth field: cell average within O(h^2) of the centroid value
        let s = ScalarField::new(|x, _| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
        for n in [4, 8, 16] {
            let m = unit_square_mesh(n).unwrap();
            let p = project_p0(&m, &s, 0.0);
            let h = 1.0 / n as f64;
            for c in 0..m.num_cells() {
                let x = m.cell_centroid(c);
                assert!((p[c] - s.eval(&x, 0.0)).abs() < 4.0 * PI * PI * h * h);
            }
        }
    }

    #[test]
    fn dirichlet_collection() {
        let n = 5;
        let m = unit_square_mesh(n).unwrap();
        let l = DofLayout::new(&m, false);
        let cons = collect_dirichlet(&m, &l, &[markers::LEFT], &[0, 1], &VectorField::zero(), 0.0)
            .unwrap();
        assert_eq!(cons.len(), 2 * (n + 1));
        assert!(cons.iter().all(|c| c.value == 0.0));

        let all = [markers::LEFT, markers::RIGHT, markers::BOTTOM, markers::TOP];
        let cons = collect_dirichlet(&m, &l, &all, &[0, 1], &VectorField::zero(), 0.0).unwrap();
        assert_eq!(cons.len(), 2 * 4 * n);

        let f = VectorField::new(|x, t| [x[1] * t, 0.0, 0.0]);
        let c1 = collect_dirichlet(&m, &l, &[markers::LEFT], &[0], &f, 1.0).unwrap();
        let c2 = collect_dirichlet(&m, &l, &[markers::LEFT], &[0], &f, 2.0).unwrap();
        for (a, b) in c1.iter().zip(&c2) {
            assert_eq!(a.dof, b.dof);
            assert!((b.value - 2.0 * a.value).abs() < 1e-15);
        }
        assert!(collect_dirichlet(&m, &l, &[77], &[0], &f, 0.0).is_err());
    }

    #[test]
    fn vertex_normals_average_at_corners() {
        let m = unit_square_mesh(2).unwrap();
        let all = [markers::LEFT, markers::RIGHT, markers::BOTTOM, markers::TOP];
        let cons = collect_normal_flux(&m, &all, &NormalFlux::zero(), 0.0).unwrap();
        assert_eq!(cons.len(), 8);
        let corner = cons.iter().find(|c| c.vertex == 0).unwrap();
        let s = 0.5f64.sqrt();
        assert!((corner.normal[0] + s).abs() < 1e-15 && (corner.normal[1] + s).abs() < 1e-15);
        let mid = cons.iter().find(|c| c.vertex == 1).unwrap();
        assert!((mid.normal[1] + 1.0).abs() < 1e-15);
        assert!(collect_normal_flux(&m, &[42], &NormalFlux::zero(), 0.0).is_err());
    }
}
