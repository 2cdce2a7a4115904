//! Global matrices and load vectors.
//!
//! * `A`: elasticity, `2 mu eps(u):eps(v) + lambda div u div v` or the vector Laplacian
//! * `M`: Darcy mass with the inverse permeability
//! * `B`: `-(psi_i, div phi_j)`, rows are cells
//! * `Q`: pressure mass, diagonal with the cell volumes
//! * `J`: interior-facet pressure jump penalty `delta * h_f * |f| * [p][q]`
//!
//! Vector unknowns use the vertex-major numbering of [`DofLayout`]; the
//! matrices here are block-local (no offsets).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fespace::{
    cell_gradients, map_point, DofConstraint, DofLayout, NormalConstraint, ScalarField, VectorField,
};
use crate::mesh::Mesh;
use crate::quadrature::{facet_rule, simplex_rule};
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Quadrature degree used for load vectors.
pub const LOAD_DEGREE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Permeability {
    Scalar(f64),
    /// Symmetric positive definite tensor (upper-left `dim x dim` block used).
    Tensor([[f64; 3]; 3]),
}

impl Permeability {
    pub fn tensor(&self, dim: usize) -> [[f64; 3]; 3] {
        let mut t = [[0.0; 3]; 3];
        match *self {
            Permeability::Scalar(k) => (0..dim).for_each(|i| t[i][i] = k),
            Permeability::Tensor(m) => {
                for i in 0..dim {
                    t[i][..dim].copy_from_slice(&m[i][..dim]);
                }
            }
        }
        t
    }

    /// Inverse permeability, or an error if the tensor is not SPD.
    pub fn inverse(&self, dim: usize) -> Result<[[f64; 3]; 3]> {
        let k = self.tensor(dim);
        for i in 0..dim {
            for j in 0..i {
                if (k[i][j] - k[j][i]).abs() > 1e-14 * (k[i][i].abs() + k[j][j].abs()) {
                    return Err(Error::invalid("permeability tensor is not symmetric"));
                }
            }
        }
        // Cholesky factor doubles as the SPD test
        let mut l = [[0.0; 3]; 3];
        for i in 0..dim {
            for j in 0..=i {
                let s: f64 = k[i][j] - (0..j).map(|m| l[i][m] * l[j][m]).sum::<f64>();
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::invalid("permeability must be positive definite"));
                    }
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        let mut inv = [[0.0; 3]; 3];
        for col in 0..dim {
            let mut y = [0.0; 3];
            for i in 0..dim {
                let e = if i == col { 1.0 } else { 0.0 };
                y[i] = (e - (0..i).map(|m| l[i][m] * y[m]).sum::<f64>()) / l[i][i];
            }
            for i in (0..dim).rev() {
                inv[i][col] =
                    (y[i] - (i + 1..dim).map(|m| l[m][i] * inv[m][col]).sum::<f64>()) / l[i][i];
            }
        }
        Ok(inv)
    }
}

/// Which operator the displacement block discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorMode {
    /// `2 mu eps(u) : eps(v) + lambda div u div v`
    FullBiot,
    /// `grad u : grad v`
    VectorLaplacian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Lamé first parameter.
    pub lambda: f64,
    /// Shear modulus.
    pub mu_s: f64,
    pub kappa: Permeability,
    /// Biot-Willis coefficient.
    pub alpha: f64,
    /// Storage coefficient.
    pub c0: f64,
    /// Jump penalty.
    pub delta: f64,
    pub mode: OperatorMode,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            lambda: 1.0,
            mu_s: 1.0,
            kappa: Permeability::Scalar(1.0),
            alpha: 1.0,
            c0: 0.0,
            delta: 1.0,
            mode: OperatorMode::FullBiot,
        }
    }
}

/// `(lambda, mu_s)` from Young's modulus and Poisson ratio.
pub fn lame_from_young(e: f64, nu: f64) -> (f64, f64) {
    let mu = e / (2.0 * (1.0 + nu));
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    (lambda, mu)
}

impl MaterialParams {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let finite = [self.lambda, self.mu_s, self.alpha, self.c0, self.delta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("material parameters must be finite"));
        }
        if !(self.mu_s > 0.0) {
            return Err(Error::invalid(format!(
                "mu_s must be positive, got {}",
                self.mu_s
            )));
        }
        if self.lambda < 0.0 {
            return Err(Error::invalid(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.c0 < 0.0 {
            return Err(Error::invalid(format!("c0 must be >= 0, got {}", self.c0)));
        }
        if self.delta < 0.0 {
            return Err(Error::invalid(format!(
                "delta must be >= 0, got {}",
                self.delta
            )));
        }
        self.kappa.inverse(dim).map(|_| ())
    }
}

/// Dense element matrix for the displacement block, local dof `a * dim + i`.
pub fn elasticity_element(
    dim: usize,
    grads: &[[f64; 3]],
    vol: f64,
    params: &MaterialParams,
) -> Vec<f64> {
    let n = (dim + 1) * dim;
    let mut k = vec![0.0; n * n];
    for a in 0..=dim {
        for b in 0..=dim {
            let ga = &grads[a];
            let gb = &grads[b];
            let gab: f64 = (0..dim).map(|m| ga[m] * gb[m]).sum();
            for i in 0..dim {
                for j in 0..dim {
                    let v = match params.mode {
                        OperatorMode::VectorLaplacian => {
                            if i == j {
                                gab
                            } else {
                                0.0
                            }
                        }
                        OperatorMode::FullBiot => {
                            let delta_ij = if i == j { gab } else { 0.0 };
                            params.mu_s * (delta_ij + ga[j] * gb[i]) + params.lambda * ga[i] * gb[j]
                        }
                    };
                    k[(a * dim + i) * n + b * dim + j] = vol * v;
                }
            }
        }
    }
    k
}

/// Dense Darcy mass element matrix, `int kinv phi_i . phi_j`.
pub fn darcy_mass_element(dim: usize, vol: f64, kinv: &[[f64; 3]; 3]) -> Vec<f64> {
    let n = (dim + 1) * dim;
    let mut m = vec![0.0; n * n];
    // int lambda_a lambda_b = vol (1 + delta_ab) / ((d + 1)(d + 2))
    let base = vol / ((dim + 1) * (dim + 2)) as f64;
    for a in 0..=dim {
        for b in 0..=dim {
            let s = if a == b { 2.0 * base } else { base };
            for i in 0..dim {
                for j in 0..dim {
                    m[(a * dim + i) * n + b * dim + j] = s * kinv[i][j];
                }
            }
        }
    }
    m
}

/// Row of `B` for one cell: `-vol * d lambda_a / d x_i` at local dof `a * dim + i`.
pub fn divergence_element(dim: usize, grads: &[[f64; 3]], vol: f64) -> Vec<f64> {
    let mut row = Vec::with_capacity((dim + 1) * dim);
    for g in grads.iter().take(dim + 1) {
        for gi in g.iter().take(dim) {
            row.push(-vol * gi);
        }
    }
    row
}

fn local_dofs(mesh: &Mesh, c: usize) -> Vec<usize> {
    let d = mesh.dim();
    mesh.cell(c)
        .iter()
        .flat_map(|&v| (0..d).map(move |i| v * d + i))
        .collect()
}

fn assemble_vector_block<F>(mesh: &Mesh, mut element: F) -> Result<CsrMatrix>
where
    F: FnMut(usize, &[[f64; 3]], f64) -> Vec<f64>,
{
    let d = mesh.dim();
    let n = d * mesh.num_vertices();
    let nl = (d + 1) * d;
    let mut t = TripletBuilder::with_capacity(n, n, nl * nl * mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let g = cell_gradients(mesh, c)?;
        let k = element(c, &g, mesh.cell_volume(c));
        let dofs = local_dofs(mesh, c);
        for (r, &gr) in dofs.iter().enumerate() {
            for (s, &gs) in dofs.iter().enumerate() {
                let v = k[r * nl + s];
                if v != 0.0 {
                    t.add(gr, gs, v);
                }
            }
        }
    }
    Ok(t.to_csr())
}

pub fn assemble_elasticity(mesh: &Mesh, params: &MaterialParams) -> Result<CsrMatrix> {
    let d = mesh.dim();
    assemble_vector_block(mesh, |_, g, vol| elasticity_element(d, g, vol, params))
}

pub fn assemble_darcy_mass(mesh: &Mesh, params: &MaterialParams) -> Result<CsrMatrix> {
    let d = mesh.dim();
    let kinv = params.kappa.inverse(d)?;
    assemble_vector_block(mesh, |_, _, vol| darcy_mass_element(d, vol, &kinv))
}

/// `B` with one row per cell and one column per vector-P1 dof.
pub fn assemble_divergence(mesh: &Mesh) -> Result<CsrMatrix> {
    let d = mesh.dim();
    let mut t = TripletBuilder::with_capacity(
        mesh.num_cells(),
        d * mesh.num_vertices(),
        (d + 1) * d * mesh.num_cells(),
    );
    for c in 0..mesh.num_cells() {
        let g = cell_gradients(mesh, c)?;
        let row = divergence_element(d, &g, mesh.cell_volume(c));
        for (&dof, &v) in local_dofs(mesh, c).iter().zip(&row) {
            t.add(c, dof, v);
        }
    }
    Ok(t.to_csr())
}

pub fn assemble_pressure_mass(mesh: &Mesh) -> CsrMatrix {
    let n = mesh.num_cells();
    let mut t = TripletBuilder::with_capacity(n, n, n);
    for c in 0..n {
        t.add(c, c, mesh.cell_volume(c));
    }
    t.to_csr()
}

/// Weight `delta * h_f * |f|` of an interior facet.
pub fn jump_weight(mesh: &Mesh, facet: usize, delta: f64) -> f64 {
    let f = mesh.facet(facet);
    delta * f.size * f.measure
}

pub fn assemble_jump_stabilization(mesh: &Mesh, delta: f64) -> Result<CsrMatrix> {
    if !(delta >= 0.0) {
        return Err(Error::invalid(format!("delta must be >= 0, got {delta}")));
    }
    let n = mesh.num_cells();
    let mut t = TripletBuilder::with_capacity(n, n, 4 * mesh.facets().len());
    if delta > 0.0 {
        for (fi, f) in mesh.interior_facets() {
            let w = jump_weight(mesh, fi, delta);
            let (a, b) = (f.inner, f.outer.expect("interior facet"));
            t.add(a, a, w);
            t.add(b, b, w);
            t.add(a, b, -w);
            t.add(b, a, -w);
        }
    }
    Ok(t.to_csr())
}

/// Matrix-free `J p`, summed facet by facet. Constant `p` gives exactly zero.
pub fn apply_jump(mesh: &Mesh, delta: f64, p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.num_cells()];
    for (fi, f) in mesh.interior_facets() {
        let (a, b) = (f.inner, f.outer.expect("interior facet"));
        let flux = jump_weight(mesh, fi, delta) * (p[a] - p[b]);
        out[a] += flux;
        out[b] -= flux;
    }
    out
}

/// The five operators of one problem, assembled once and reused every step.
#[derive(Debug, Clone)]
pub struct Operators {
    pub a: CsrMatrix,
    pub m: CsrMatrix,
    pub b: CsrMatrix,
    pub q: CsrMatrix,
    pub j: CsrMatrix,
}

impl Operators {
    pub fn assemble(mesh: &Mesh, params: &MaterialParams) -> Result<Self> {
        params.validate(mesh.dim())?;
        Ok(Operators {
            a: assemble_elasticity(mesh, params)?,
            m: assemble_darcy_mass(mesh, params)?,
            b: assemble_divergence(mesh)?,
            q: assemble_pressure_mass(mesh),
            j: assemble_jump_stabilization(mesh, params.delta)?,
        })
    }
}

/// Right-hand-side data of the three equations.
#[derive(Debug, Clone)]
pub struct LoadData {
    /// Body force on the mixture.
    pub f: VectorField,
    /// Body force on the fluid.
    pub b: VectorField,
    /// Fluid source.
    pub g: ScalarField,
    /// Prescribed tractions per set of boundary tags.
    pub tractions: Vec<(Vec<u32>, VectorField)>,
    /// Prescribed pressures per set of boundary tags.
    pub pressures: Vec<(Vec<u32>, ScalarField)>,
}

impl Default for LoadData {
    fn default() -> Self {
        LoadData {
            f: VectorField::zero(),
            b: VectorField::zero(),
            g: ScalarField::zero(),
            tractions: Vec::new(),
            pressures: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loads {
    pub f_u: Vec<f64>,
    pub f_z: Vec<f64>,
    pub f_p: Vec<f64>,
}

pub fn assemble_loads(mesh: &Mesh, layout: &DofLayout, data: &LoadData, t: f64) -> Result<Loads> {
    let d = mesh.dim();
    let mut f_u = vec![0.0; layout.n_u()];
    let mut f_z = vec![0.0; layout.n_z()];
    let mut f_p = vec![0.0; layout.n_p()];

    let rule = simplex_rule(d, LOAD_DEGREE)?;
    let scale = 1.0 / rule.measure();
    let bary: Vec<Vec<f64>> = (0..rule.len()).map(|q| rule.barycentric(q)).collect();
    for c in 0..mesh.num_cells() {
        let pts = mesh.cell_points(c);
        let vol = mesh.cell_volume(c);
        let cell = mesh.cell(c);
        for (b, &w) in bary.iter().zip(&rule.weights) {
            let x = map_point(&pts, b);
            let jw = w * scale * vol;
            let fv = data.f.eval(&x, t);
            let bv = data.b.eval(&x, t);
            f_p[c] += jw * data.g.eval(&x, t);
            for (a, &v) in cell.iter().enumerate() {
                for i in 0..d {
                    f_u[v * d + i] += jw * fv[i] * b[a];
                    f_z[v * d + i] += jw * bv[i] * b[a];
                }
            }
        }
    }

    let frule = facet_rule(d, LOAD_DEGREE)?;
    let fscale = 1.0 / frule.measure();
    let fbary: Vec<Vec<f64>> = (0..frule.len()).map(|q| frule.barycentric(q)).collect();
    let surface = |tags: &[u32],
                   out: &mut Vec<f64>,
                   eval: &dyn Fn(&[f64; 3], &[f64; 3]) -> [f64; 3]|
     -> Result<()> {
        for &tag in tags {
            if !mesh.has_marker(tag) {
                return Err(Error::invalid(format!(
                    "boundary load on unmarked region {tag}"
                )));
            }
        }
        for (_, f) in mesh.facets_with_markers(tags) {
            let pts: Vec<[f64; 3]> = f.vertices.iter().map(|&v| mesh.point(v)).collect();
            for (b, &w) in fbary.iter().zip(&frule.weights) {
                let x = map_point(&pts, b);
                let val = eval(&x, &f.normal);
                let jw = w * fscale * f.measure;
                for (a, &v) in f.vertices.iter().enumerate() {
                    for i in 0..d {
                        out[v * d + i] += jw * val[i] * b[a];
                    }
                }
            }
        }
        Ok(())
    };
    for (tags, tn) in &data.tractions {
        surface(tags, &mut f_u, &|x, _| tn.eval(x, t))?;
    }
    for (tags, pd) in &data.pressures {
        // -(p_D, w . n)
        surface(tags, &mut f_z, &|x, n| {
            let p = pd.eval(x, t);
            [-p * n[0], -p * n[1], -p * n[2]]
        })?;
    }
    Ok(Loads { f_u, f_z, f_p })
}

/// Orthonormal local frames on the flux dofs of vertices carrying a
/// normal constraint. The first frame vector is the constraint normal, so
/// after rotation the constraint becomes an ordinary dof constraint.
///
/// With `R` the block-diagonal change of basis (`x = R y`), the rotated
/// matrix is `R^T K R`, which stays symmetric.
#[derive(Debug, Clone, Default)]
pub struct FrameRotation {
    /// base dof -> frame rows (each row a unit basis vector).
    frames: BTreeMap<usize, [[f64; 3]; 3]>,
    dim: usize,
}

fn complete_frame(n: [f64; 3], dim: usize) -> [[f64; 3]; 3] {
    if dim == 2 {
        return [[n[0], n[1], 0.0], [-n[1], n[0], 0.0], [0.0, 0.0, 1.0]];
    }
    // pick the axis least aligned with n
    let k = (0..3)
        .min_by(|&a, &b| n[a].abs().partial_cmp(&n[b].abs()).unwrap())
        .unwrap();
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let dot = n[k];
    let mut t1 = [e[0] - dot * n[0], e[1] - dot * n[1], e[2] - dot * n[2]];
    let len = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]).sqrt();
    t1 = t1.map(|x| x / len);
    let t2 = [
        n[1] * t1[2] - n[2] * t1[1],
        n[2] * t1[0] - n[0] * t1[2],
        n[0] * t1[1] - n[1] * t1[0],
    ];
    [n, t1, t2]
}

impl FrameRotation {
    pub fn new(layout: &DofLayout, normals: &[NormalConstraint]) -> Self {
        let frames = normals
            .iter()
            .map(|c| {
                (
                    layout.z_dof(c.vertex, 0),
                    complete_frame(c.normal, layout.dim),
                )
            })
            .collect();
        FrameRotation {
            frames,
            dim: layout.dim,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Dof holding the normal component after rotation.
    pub fn normal_dof(layout: &DofLayout, c: &NormalConstraint) -> usize {
        layout.z_dof(c.vertex, 0)
    }

    fn lookup(&self, dof: usize) -> Option<(usize, &[[f64; 3]; 3])> {
        let (&base, frame) = self.frames.range(..=dof).next_back()?;
        (dof < base + self.dim).then_some((base, frame))
    }

    /// `R^T K R`.
    pub fn rotate_matrix(&self, k: &CsrMatrix) -> CsrMatrix {
        if self.frames.is_empty() {
            return k.clone();
        }
        let d = self.dim;
        let mut t = TripletBuilder::with_capacity(k.nrows(), k.ncols(), k.nnz() * 2);
        for (i, j, v) in k.iter() {
            // x_a = sum_k frame[k][a] y_k
            let rows: Vec<(usize, f64)> = match self.lookup(i) {
                Some((base, fr)) => (0..d).map(|r| (base + r, fr[r][i - base])).collect(),
                None => vec![(i, 1.0)],
            };
            let cols: Vec<(usize, f64)> = match self.lookup(j) {
                Some((base, fr)) => (0..d).map(|s| (base + s, fr[s][j - base])).collect(),
                None => vec![(j, 1.0)],
            };
            for &(r, a) in &rows {
                for &(s, b) in &cols {
                    let w = a * v * b;
                    if w != 0.0 {
                        t.add(r, s, w);
                    }
                }
            }
        }
        t.to_csr()
    }

    /// `R^T x` (global to local components).
    pub fn to_local(&self, x: &mut [f64]) {
        for (&base, fr) in &self.frames {
            let old: Vec<f64> = x[base..base + self.dim].to_vec();
            for r in 0..self.dim {
                x[base + r] = (0..self.dim).map(|a| fr[r][a] * old[a]).sum();
            }
        }
    }

    /// `R y` (local to global components).
    pub fn to_global(&self, y: &mut [f64]) {
        for (&base, fr) in &self.frames {
            let old: Vec<f64> = y[base..base + self.dim].to_vec();
            for a in 0..self.dim {
                y[base + a] = (0..self.dim).map(|r| fr[r][a] * old[r]).sum();
            }
        }
    }
}

/// Symmetric elimination of constrained dofs: rows and columns zeroed, unit
/// diagonal, known columns moved to the right-hand side.
#[derive(Debug, Clone)]
pub struct Elimination {
    pub matrix: CsrMatrix,
    constrained: Vec<bool>,
    /// For each constrained dof, the original column entries in free rows.
    columns: BTreeMap<usize, Vec<(usize, f64)>>,
}

/// Sorted, deduplicated constraint map. Conflicting values are an error.
pub fn merge_constraints(cons: &[DofConstraint], n: usize) -> Result<BTreeMap<usize, f64>> {
    let mut map = BTreeMap::new();
    for c in cons {
        if c.dof >= n {
            return Err(Error::invalid(format!(
                "constrained dof {} out of range",
                c.dof
            )));
        }
        if let Some(&old) = map.get(&c.dof) {
            let tol = 1e-12 * (1.0 + f64::abs(old));
            if (old - c.value).abs() > tol {
                return Err(Error::invalid(format!(
                    "conflicting constraints on dof {}: {old} vs {}",
                    c.dof, c.value
                )));
            }
        } else {
            map.insert(c.dof, c.value);
        }
    }
    Ok(map)
}

pub fn apply_dirichlet(k: &CsrMatrix, cons: &[DofConstraint]) -> Result<Elimination> {
    let n = k.nrows();
    let map = merge_constraints(cons, n)?;
    let mut constrained = vec![false; n];
    for &d in map.keys() {
        constrained[d] = true;
    }
    let mut columns: BTreeMap<usize, Vec<(usize, f64)>> =
        map.keys().map(|&d| (d, Vec::new())).collect();
    let mut t = TripletBuilder::with_capacity(n, n, k.nnz());
    for (i, j, v) in k.iter() {
        match (constrained[i], constrained[j]) {
            (false, false) => t.add(i, j, v),
            (false, true) => columns.get_mut(&j).unwrap().push((i, v)),
            _ => {}
        }
    }
    for &d in map.keys() {
        t.add(d, d, 1.0);
    }
    Ok(Elimination {
        matrix: t.to_csr(),
        constrained,
        columns,
    })
}

impl Elimination {
    /// Adjusts `rhs` for the given constraint values (same dof set as at construction).
    pub fn apply_rhs(&self, rhs: &mut [f64], cons: &[DofConstraint]) -> Result<()> {
        let map = merge_constraints(cons, rhs.len())?;
        for (&d, &g) in &map {
            let col = self.columns.get(&d).ok_or_else(|| {
                Error::invalid(format!(
                    "dof {d} was not constrained when the system was built"
                ))
            })?;
            for &(i, v) in col {
                rhs[i] -= v * g;
            }
        }
        for (&d, &g) in &map {
            rhs[d] = g;
        }
        if map.len() != self.columns.len() {
            return Err(Error::invalid("constraint set changed after elimination"));
        }
        Ok(())
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    pub fn num_constrained(&self) -> usize {
        self.columns.len()
    }
}
