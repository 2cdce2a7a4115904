//! Monolithic block system, sparse direct solves and backward-Euler time
//! stepping.
//!
//! One step solves the symmetric indefinite system
//!
//! ```text
//! [ A      0       alpha B^T ] [u]   [ F_u                                   ]
//! [ 0      dt M    dt B^T    ] [z] = [ dt F_z                                ]
//! [ alpha B dt B  -(c0 Q + J)] [p]   [ -dt G + alpha B u' - (c0 Q + J) p'    ]
//! ```
//!
//! where primes denote the previous step. With the zero-mean pressure
//! multiplier active, one extra row and column `(vol_K)_K` is appended.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::perm::PermRef;
use faer::prelude::*;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, IntranodeLbltRef, LdltRef,
    SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::linalg::SupernodalThreshold;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Par, Side};

use crate::assembly::{
    apply_dirichlet, assemble_loads, Elimination, FrameRotation, Loads, MaterialParams,
    OperatorMode, Operators, LOAD_DEGREE,
};
use crate::error::{Error, Result};
use crate::fespace::{
    collect_dirichlet, collect_normal_flux, interpolate_p1, map_point, project_p0, DofConstraint,
    DofLayout, NormalConstraint,
};
use crate::mesh::Mesh;
use crate::problem::{InitialLoading, ProblemDefinition};
use crate::quadrature::simplex_rule;
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Relative residual every solve must reach.
pub const RESIDUAL_TOL: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 4;
/// Residual at which refinement stops early.
const TARGET_RESIDUAL: f64 = 1e-13;
const GMRES_TARGET: f64 = 1e-2 * RESIDUAL_TOL;
const GMRES_RESTART: usize = 60;
const GMRES_MAX_ITER: usize = 600;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub p: Vec<f64>,
}

impl State {
    pub fn zero(layout: &DofLayout, t: f64) -> Self {
        State {
            t,
            u: vec![0.0; layout.n_u()],
            z: vec![0.0; layout.n_z()],
            p: vec![0.0; layout.n_p()],
        }
    }

    fn from_vector(layout: &DofLayout, t: f64, x: &[f64]) -> Self {
        State {
            t,
            u: x[layout.u_range()].to_vec(),
            z: x[layout.z_range()].to_vec(),
            p: x[layout.p_range()].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u
            .iter()
            .chain(&self.z)
            .chain(&self.p)
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory is never empty")
    }
}

enum Backend {
    /// Symmetric `L D L^T` with AMD ordering and sign-guided dynamic
    /// regularization of tiny pivots (corrected by refinement).
    Ldlt {
        symbolic: SymbolicCholesky<usize>,
        values: Vec<f64>,
    },
    /// Symmetric indefinite `L B L^T` with AMD ordering and Bunch-Kaufman
    /// pivoting inside supernodes.
    Lblt {
        symbolic: SymbolicCholesky<usize>,
        values: Vec<f64>,
        subdiag: Vec<f64>,
        perm_fwd: Vec<usize>,
        perm_inv: Vec<usize>,
    },
    Lu(faer::sparse::linalg::solvers::Lu<usize, f64>),
}

/// Sparse direct factorization with iterative refinement: symmetric
/// indefinite `L B L^T` first, partial-pivoting LU when that is inaccurate.
pub struct Factorization {
    backend: Backend,
    n: usize,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.backend {
            Backend::Ldlt { .. } => "ldlt",
            Backend::Lblt { .. } => "lblt",
            Backend::Lu(_) => "lu",
        };
        f.debug_struct("Factorization")
            .field("n", &self.n)
            .field("kind", &kind)
            .finish()
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(k: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    k.matvec(x).iter().zip(b).map(|(kx, bi)| bi - kx).collect()
}

/// Probe-solve accuracy below which the symmetric factorization is kept.
const SYMMETRIC_ACCEPT: f64 = 1e-12;

fn symbolic_cholesky(lower: &SparseColMat<usize, f64>) -> Option<SymbolicCholesky<usize>> {
    let params = CholeskySymbolicParams {
        supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL,
        ..Default::default()
    };
    factorize_symbolic_cholesky(
        lower.symbolic(),
        Side::Lower,
        SymmetricOrdering::Amd,
        params,
    )
    .ok()
}

fn ldlt_backend(k: &CsrMatrix, lower: &SparseColMat<usize, f64>) -> Option<Backend> {
    let symbolic = symbolic_cholesky(lower)?;
    let diag = k.diagonal();
    let scale = diag
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let signs: Vec<i8> = diag.iter().map(|&d| if d > 0.0 { 1 } else { -1 }).collect();
    let reg = LdltRegularization {
        dynamic_regularization_signs: Some(&signs),
        dynamic_regularization_delta: 1e-8 * scale,
        dynamic_regularization_epsilon: 1e-13 * scale,
    };
    let mut values = vec![0.0; symbolic.len_val()];
    let par = Par::Seq;
    let mut mem =
        MemBuffer::try_new(symbolic.factorize_numeric_ldlt_scratch::<f64>(par, Default::default()))
            .ok()?;
    symbolic
        .factorize_numeric_ldlt(
            &mut values,
            lower.as_ref(),
            Side::Lower,
            reg,
            par,
            MemStack::new(&mut mem),
            Default::default(),
        )
        .ok()?;
    Some(Backend::Ldlt { symbolic, values })
}

fn lblt_backend(n: usize, lower: &SparseColMat<usize, f64>) -> Option<Backend> {
    let symbolic = symbolic_cholesky(lower)?;
    let mut values = vec![0.0; symbolic.len_val()];
    let mut subdiag = vec![0.0; n];
    let mut perm_fwd = vec![0usize; n];
    let mut perm_inv = vec![0usize; n];
    let par = Par::Seq;
    let mut mem = MemBuffer::try_new(
        symbolic.factorize_numeric_intranode_lblt_scratch::<f64>(par, Default::default()),
    )
    .ok()?;
    symbolic.factorize_numeric_intranode_lblt(
        &mut values,
        &mut subdiag,
        &mut perm_fwd,
        &mut perm_inv,
        lower.as_ref(),
        Side::Lower,
        par,
        MemStack::new(&mut mem),
        Default::default(),
    );
    Some(Backend::Lblt {
        symbolic,
        values,
        subdiag,
        perm_fwd,
        perm_inv,
    })
}

impl Factorization {
    pub fn new(k: &CsrMatrix) -> Result<Self> {
        let n = k.nrows();
        if n != k.ncols() {
            return Err(Error::invalid("matrix must be square"));
        }
        if let Some((i, j, _)) = k.iter().find(|(_, _, v)| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite matrix entry at ({i}, {j})"
            )));
        }
        if let Some(i) = (0..n).find(|&i| k.row(i).all(|(_, v)| v == 0.0)) {
            return Err(Error::Singular(format!("row {i} is structurally zero")));
        }
        let build = |lower_only: bool| {
            let trips: Vec<Triplet<usize, usize, f64>> = k
                .iter()
                .filter(|(i, j, _)| !lower_only || i >= j)
                .map(|(i, j, v)| Triplet::new(i, j, v))
                .collect();
            SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
                .map_err(|e| Error::invalid(format!("sparse matrix construction failed: {e:?}")))
        };
        if k.is_symmetric(1e-13 * k.max_abs()) {
            let lower = build(true)?;
            let candidates: [&dyn Fn() -> Option<Backend>; 2] =
                [&|| lblt_backend(n, &lower), &|| ldlt_backend(k, &lower)];
            for backend in candidates.iter().filter_map(|make| make()) {
                let f = Factorization { backend, n };
                if f.probe(k) <= SYMMETRIC_ACCEPT {
                    return Ok(f);
                }
            }
        }
        let lu = build(false)?
            .sp_lu()
            .map_err(|e| Error::Singular(format!("LU factorization failed: {e:?}")))?;
        Ok(Factorization {
            backend: Backend::Lu(lu),
            n,
        })
    }

    /// Relative residual of a refined solve (no GMRES) with a fixed
    /// pseudo-random right-hand side.
    fn probe(&self, k: &CsrMatrix) -> f64 {
        let b: Vec<f64> = (0..self.n)
            .map(|i| {
                let s = (i as f64 * 12.9898 + 78.233).sin() * 43758.5453;
                s - s.floor() - 0.5
            })
            .collect();
        let bn = norm2(&b);
        if bn == 0.0 {
            return 0.0;
        }
        let (_, _, rel) = self.refine(k, &b, bn, false);
        if rel.is_finite() {
            rel
        } else {
            f64::INFINITY
        }
    }

    /// Whether the symmetric indefinite factorization is in use.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self.backend, Backend::Lu(_))
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        match &self.backend {
            Backend::Lu(lu) => {
                let x = lu.solve(&rhs);
                return (0..self.n).map(|i| x[(i, 0)]).collect();
            }
            Backend::Ldlt { symbolic, values } => {
                let f = LdltRef::new(symbolic, values);
                let par = Par::Seq;
                let mut mem = MemBuffer::new(symbolic.solve_in_place_scratch::<f64>(1, par));
                f.solve_in_place_with_conj(
                    faer::Conj::No,
                    rhs.as_mut(),
                    par,
                    MemStack::new(&mut mem),
                );
            }
            Backend::Lblt {
                symbolic,
                values,
                subdiag,
                perm_fwd,
                perm_inv,
            } => {
                let perm = PermRef::new_checked(perm_fwd, perm_inv, self.n);
                let f = IntranodeLbltRef::new(symbolic, values, subdiag, perm);
                let par = Par::Seq;
                let mut mem = MemBuffer::new(symbolic.solve_in_place_scratch::<f64>(1, par));
                f.solve_in_place_with_conj(
                    faer::Conj::No,
                    rhs.as_mut(),
                    par,
                    MemStack::new(&mut mem),
                );
            }
        }
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }

    /// Solves `k x = b` (`k` must be the factored matrix) and returns the
    /// solution with its relative residual.
    pub fn solve_with_residual(&self, k: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
        if b.len() != self.n {
            return Err(Error::invalid("right-hand side length mismatch"));
        }
        if let Some(i) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite right-hand side at dof {i}"
            )));
        }
        let bn = norm2(b);
        if bn == 0.0 {
            return Ok((vec![0.0; self.n], 0.0));
        }
        let (x, r, rel) = self.refine(k, b, bn, true);
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Singular(format!(
                "non-finite solution, suspect dof {i}"
            )));
        }
        if !(rel <= RESIDUAL_TOL) {
            let worst = r
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map_or(0, |(i, _)| i);
            return Err(Error::Singular(format!(
                "relative residual {rel:e} after refinement, suspect dof {worst}"
            )));
        }
        Ok((x, rel))
    }

    /// Factor solve, a few steps of iterative refinement and, when the
    /// factorization is not accurate enough, preconditioned GMRES.
    fn refine(
        &self,
        k: &CsrMatrix,
        b: &[f64],
        bn: f64,
        allow_gmres: bool,
    ) -> (Vec<f64>, Vec<f64>, f64) {
        let mut x = self.raw_solve(b);
        let mut r = residual(k, &x, b);
        let mut rel = norm2(&r) / bn;
        for _ in 0..REFINEMENT_STEPS {
            if !rel.is_finite() || rel <= TARGET_RESIDUAL {
                break;
            }
            let dx = self.raw_solve(&r);
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let rc = residual(k, &cand, b);
            let rel_c = norm2(&rc) / bn;
            if !(rel_c < rel) {
                break;
            }
            x = cand;
            r = rc;
            rel = rel_c;
        }
        if allow_gmres && !(rel <= RESIDUAL_TOL) {
            if !rel.is_finite() {
                x = vec![0.0; self.n];
            }
            self.gmres(k, b, &mut x, bn);
            r = residual(k, &x, b);
            rel = norm2(&r) / bn;
        }
        (x, r, rel)
    }

    /// Restarted GMRES, right-preconditioned with the factorization.
    fn gmres(&self, k: &CsrMatrix, b: &[f64], x: &mut [f64], bn: f64) {
        let m = GMRES_RESTART;
        let mut total = 0;
        while total < GMRES_MAX_ITER {
            let r = residual(k, x, b);
            let beta = norm2(&r);
            if !beta.is_finite() || beta / bn <= GMRES_TARGET {
                return;
            }
            let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
            let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
            let mut h = vec![vec![0.0; m]; m + 1];
            let mut cs = vec![0.0; m];
            let mut sn = vec![0.0; m];
            let mut g = vec![0.0; m + 1];
            g[0] = beta;
            let mut used = 0;
            for j in 0..m {
                let zj = self.raw_solve(&v[j]);
                let mut w = k.matvec(&zj);
                z.push(zj);
                for i in 0..=j {
                    let hij: f64 = w.iter().zip(&v[i]).map(|(a, b)| a * b).sum();
                    h[i][j] = hij;
                    for (wk, vk) in w.iter_mut().zip(&v[i]) {
                        *wk -= hij * vk;
                    }
                }
                let hn = norm2(&w);
                h[j + 1][j] = hn;
                for i in 0..j {
                    let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                    h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                    h[i][j] = t;
                }
                let d = h[j][j].hypot(h[j + 1][j]);
                if d == 0.0 || !d.is_finite() {
                    break;
                }
                cs[j] = h[j][j] / d;
                sn[j] = h[j + 1][j] / d;
                h[j][j] = d;
                h[j + 1][j] = 0.0;
                g[j + 1] = -sn[j] * g[j];
                g[j] *= cs[j];
                used = j + 1;
                total += 1;
                if g[j + 1].abs() / bn <= 0.1 * GMRES_TARGET || hn == 0.0 || total >= GMRES_MAX_ITER
                {
                    break;
                }
                v.push(w.iter().map(|wk| wk / hn).collect());
            }
            if used == 0 {
                return;
            }
            let mut y = vec![0.0; used];
            for i in (0..used).rev() {
                let s: f64 = (i + 1..used).map(|l| h[i][l] * y[l]).sum();
                y[i] = (g[i] - s) / h[i][i];
            }
            for (yi, zi) in y.iter().zip(&z) {
                for (xk, zk) in x.iter_mut().zip(zi) {
                    *xk += yi * zk;
                }
            }
        }
    }

    pub fn solve(&self, k: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_with_residual(k, b).map(|(x, _)| x)
    }
}

/// One-shot factor and solve.
pub fn sparse_solve(k: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Factorization::new(k)?.solve(k, b)
}

/// Monolithic system of one backward-Euler step (before constraints).
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub layout: DofLayout,
    pub dt: f64,
}

fn check_layout(mesh: &Mesh, ops: &Operators, layout: &DofLayout) -> Result<()> {
    let ok = layout.dim == mesh.dim()
        && layout.n_vertices == mesh.num_vertices()
        && layout.n_cells == mesh.num_cells()
        && ops.a.nrows() == layout.n_u()
        && ops.m.nrows() == layout.n_z()
        && ops.b.nrows() == layout.n_p()
        && ops.b.ncols() == layout.n_u()
        && ops.q.nrows() == layout.n_p()
        && ops.j.nrows() == layout.n_p();
    if ok {
        Ok(())
    } else {
        Err(Error::invalid("operators, mesh and layout do not match"))
    }
}

/// Symmetric step matrix. `dt = 0` is allowed for the undrained limit.
pub fn build_block_matrix(
    mesh: &Mesh,
    ops: &Operators,
    params: &MaterialParams,
    layout: &DofLayout,
    dt: f64,
) -> Result<CsrMatrix> {
    check_layout(mesh, ops, layout)?;
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let n = layout.size();
    let nnz = ops.a.nnz() + ops.m.nnz() + 4 * ops.b.nnz() + ops.q.nnz() + ops.j.nnz();
    let mut t = TripletBuilder::with_capacity(n, n, nnz + 2 * layout.n_p());
    let (zo, po) = (layout.z_offset(), layout.p_offset());
    let alpha = params.alpha;
    t.add_block(&ops.a, 0, 0, 1.0);
    t.add_block_transposed(&ops.b, 0, po, alpha);
    if dt > 0.0 {
        t.add_block(&ops.m, zo, zo, dt);
        t.add_block_transposed(&ops.b, zo, po, dt);
        t.add_block(&ops.b, po, zo, dt);
    }
    t.add_block(&ops.b, po, 0, alpha);
    if params.c0 != 0.0 {
        t.add_block(&ops.q, po, po, -params.c0);
    }
    t.add_block(&ops.j, po, po, -1.0);
    if let Some(m) = layout.multiplier() {
        for c in 0..layout.n_p() {
            let v = mesh.cell_volume(c);
            t.add(po + c, m, v);
            t.add(m, po + c, v);
        }
    }
    Ok(t.to_csr())
}

/// Right-hand side of one step.
pub fn build_block_rhs(
    ops: &Operators,
    params: &MaterialParams,
    layout: &DofLayout,
    loads: &Loads,
    prev: &State,
    dt: f64,
) -> Result<Vec<f64>> {
    if prev.u.len() != layout.n_u() || prev.z.len() != layout.n_z() || prev.p.len() != layout.n_p()
    {
        return Err(Error::invalid("previous state does not match the layout"));
    }
    let mut rhs = vec![0.0; layout.size()];
    rhs[layout.u_range()].copy_from_slice(&loads.f_u);
    for (r, f) in rhs[layout.z_range()].iter_mut().zip(&loads.f_z) {
        *r = dt * f;
    }
    let bu = ops.b.matvec(&prev.u);
    let jp = ops.j.matvec(&prev.p);
    let po = layout.p_offset();
    for c in 0..layout.n_p() {
        let qp = ops.q.get(c, c) * prev.p[c];
        rhs[po + c] = -dt * loads.f_p[c] + params.alpha * bu[c] - params.c0 * qp - jp[c];
    }
    Ok(rhs)
}

pub fn build_block_system(
    mesh: &Mesh,
    ops: &Operators,
    params: &MaterialParams,
    layout: &DofLayout,
    loads: &Loads,
    prev: &State,
    dt: f64,
) -> Result<BlockSystem> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    Ok(BlockSystem {
        matrix: build_block_matrix(mesh, ops, params, layout, dt)?,
        rhs: build_block_rhs(ops, params, layout, loads, prev, dt)?,
        layout: *layout,
        dt,
    })
}

/// `a(u, u) + J(p, p)`.
pub fn energy(ops: &Operators, state: &State) -> f64 {
    ops.a.bilinear(&state.u, &state.u) + ops.j.bilinear(&state.p, &state.p)
}

fn displacement_constraints(
    problem: &ProblemDefinition,
    layout: &DofLayout,
    t: f64,
) -> Result<Vec<DofConstraint>> {
    let mut out = Vec::new();
    for bc in &problem.displacement {
        out.extend(collect_dirichlet(
            &problem.mesh,
            layout,
            &bc.tags,
            &bc.components,
            &bc.value,
            t,
        )?);
    }
    for pin in &problem.pins {
        out.push(DofConstraint {
            dof: layout.u_dof(pin.vertex, pin.component),
            value: pin.value,
        });
    }
    Ok(out)
}

fn normal_constraints(problem: &ProblemDefinition, t: f64) -> Result<Vec<NormalConstraint>> {
    let mut out: Vec<NormalConstraint> = Vec::new();
    for bc in &problem.flux {
        out.extend(collect_normal_flux(&problem.mesh, &bc.tags, &bc.value, t)?);
    }
    let mut seen = std::collections::BTreeSet::new();
    for c in &out {
        if !seen.insert(c.vertex) {
            return Err(Error::invalid(format!(
                "vertex {} belongs to two flux conditions; merge their tags into one",
                c.vertex
            )));
        }
    }
    Ok(out)
}

/// Factored step operator with its constraint machinery; reused for every
/// step of a run.
pub struct Stepper<'a> {
    problem: &'a ProblemDefinition,
    ops: &'a Operators,
    layout: DofLayout,
    dt: f64,
    undrained: bool,
    rotation: FrameRotation,
    elimination: Elimination,
    factor: Factorization,
}

impl<'a> Stepper<'a> {
    /// Time-step operator with step `dt`, or the undrained operator when
    /// `undrained` is set (flux fixed at zero, no storage from `dt`).
    pub fn new(
        problem: &'a ProblemDefinition,
        ops: &'a Operators,
        dt: f64,
        undrained: bool,
    ) -> Result<Self> {
        let layout = DofLayout::new(&problem.mesh, problem.uses_mean_pressure());
        let k = build_block_matrix(
            &problem.mesh,
            ops,
            &problem.params,
            &layout,
            if undrained { 0.0 } else { dt },
        )?;
        let rotation = if undrained {
            FrameRotation::default()
        } else {
            FrameRotation::new(&layout, &normal_constraints(problem, 0.0)?)
        };
        let mut stepper = Stepper {
            problem,
            ops,
            layout,
            dt,
            undrained,
            rotation,
            elimination: apply_dirichlet(&CsrMatrix::identity(1), &[])?,
            factor: Factorization::new(&CsrMatrix::identity(1))?,
        };
        let cons = stepper.constraints(0.0)?;
        let kr = stepper.rotation.rotate_matrix(&k);
        stepper.elimination = apply_dirichlet(&kr, &cons)?;
        stepper.factor = Factorization::new(&stepper.elimination.matrix)?;
        Ok(stepper)
    }

    pub fn layout(&self) -> &DofLayout {
        &self.layout
    }

    /// Constraints in rotated coordinates at time `t`.
    fn constraints(&self, t: f64) -> Result<Vec<DofConstraint>> {
        let mut cons = displacement_constraints(self.problem, &self.layout, t)?;
        if self.undrained {
            cons.extend(
                self.layout
                    .z_range()
                    .map(|dof| DofConstraint { dof, value: 0.0 }),
            );
        } else {
            for c in normal_constraints(self.problem, t)? {
                cons.push(DofConstraint {
                    dof: FrameRotation::normal_dof(&self.layout, &c),
                    value: c.value,
                });
            }
        }
        Ok(cons)
    }

    /// Solves for the state at `t` from `prev`.
    pub fn step(&self, prev: &State, t: f64) -> Result<State> {
        let loads = assemble_loads(&self.problem.mesh, &self.layout, &self.problem.loads, t)?;
        let dt = if self.undrained { 0.0 } else { self.dt };
        let mut rhs = build_block_rhs(
            self.ops,
            &self.problem.params,
            &self.layout,
            &loads,
            prev,
            dt,
        )?;
        self.rotation.to_local(&mut rhs);
        self.elimination
            .apply_rhs(&mut rhs, &self.constraints(t)?)?;
        let mut x = self.factor.solve(&self.elimination.matrix, &rhs)?;
        self.rotation.to_global(&mut x);
        Ok(State::from_vector(&self.layout, t, &x))
    }
}

/// Cell averages of the initial displacement gradient, or `None` without a Jacobian.
fn a_projection_rhs(mesh: &Mesh, problem: &ProblemDefinition) -> Result<Option<Vec<f64>>> {
    let field = &problem.initial_u;
    if !field.has_jacobian() {
        return Ok(None);
    }
    let d = mesh.dim();
    let params = &problem.params;
    let rule = simplex_rule(d, LOAD_DEGREE)?;
    let scale = 1.0 / rule.measure();
    let mut rhs = vec![0.0; d * mesh.num_vertices()];
    for c in 0..mesh.num_cells() {
        let pts = mesh.cell_points(c);
        let mut avg = [[0.0; 3]; 3];
        for q in 0..rule.len() {
            let x = map_point(&pts, &rule.barycentric(q));
            let jac = field.jacobian(&x, 0.0).expect("jacobian present");
            for i in 0..3 {
                for j in 0..3 {
                    avg[i][j] += rule.weights[q] * scale * jac[i][j];
                }
            }
        }
        let g = crate::fespace::cell_gradients(mesh, c)?;
        let vol = mesh.cell_volume(c);
        let div: f64 = (0..d).map(|i| avg[i][i]).sum();
        for (a, &v) in mesh.cell(c).iter().enumerate() {
            for i in 0..d {
                let val = match params.mode {
                    OperatorMode::VectorLaplacian => {
                        (0..d).map(|j| avg[i][j] * g[a][j]).sum::<f64>()
                    }
                    OperatorMode::FullBiot => {
                        let eps: f64 = (0..d)
                            .map(|j| 0.5 * (avg[i][j] + avg[j][i]) * g[a][j])
                            .sum();
                        2.0 * params.mu_s * eps + params.lambda * div * g[a][i]
                    }
                };
                rhs[v * d + i] += vol * val;
            }
        }
    }
    Ok(Some(rhs))
}

/// Initial state: elliptic projection of `u0`, L2 projection of `p0`,
/// nodal interpolation of `z0`.
pub fn project_initial(problem: &ProblemDefinition, ops: &Operators) -> Result<State> {
    let mesh = &problem.mesh;
    let layout = DofLayout::new(mesh, problem.uses_mean_pressure());
    let mut state = State::zero(&layout, 0.0);
    state.p = project_p0(mesh, &problem.initial_p, 0.0);
    state.z = interpolate_p1(mesh, &problem.initial_z, 0.0);

    let nodal = interpolate_p1(mesh, &problem.initial_u, 0.0);
    let mut rhs = match a_projection_rhs(mesh, problem)? {
        Some(r) => r,
        None => ops.a.matvec(&nodal),
    };
    if nodal.iter().chain(&rhs).all(|&v| v == 0.0) {
        return Ok(state);
    }
    // constrained dofs take the nodal values of u0
    let mut cons = displacement_constraints(problem, &layout, 0.0)?;
    if cons.is_empty() {
        return Err(Error::Singular(
            "initial displacement projection has no displacement constraints; \
             add a displacement condition or pins to remove rigid modes"
                .into(),
        ));
    }
    for c in &mut cons {
        c.value = nodal[c.dof];
    }
    let elim = apply_dirichlet(&ops.a, &cons)?;
    elim.apply_rhs(&mut rhs, &cons)?;
    state.u = sparse_solve(&elim.matrix, &rhs).map_err(|e| match e {
        Error::Singular(m) => Error::Singular(format!(
            "initial displacement projection: {m}; constrain rigid-body modes with pins"
        )),
        e => e,
    })?;
    Ok(state)
}

/// State at `t = 0` according to [`ProblemDefinition::initial_loading`].
pub fn initial_state(problem: &ProblemDefinition, ops: &Operators) -> Result<State> {
    let projected = project_initial(problem, ops)?;
    match problem.initial_loading {
        InitialLoading::Projected => Ok(projected),
        InitialLoading::Undrained => Stepper::new(problem, ops, problem.dt, true)
            .and_then(|s| s.step(&projected, 0.0))
            .map_err(|e| Error::Step {
                step: 0,
                source: Box::new(e),
            }),
    }
}

/// Runs backward Euler over `[0, T]`, calling `observer(n, state)` for
/// every state including the initial one. Returns the final state.
pub fn run_with_observer<F>(problem: &ProblemDefinition, mut observer: F) -> Result<State>
where
    F: FnMut(usize, &State) -> Result<()>,
{
    problem.validate()?;
    let steps = problem.num_steps()?;
    let ops = Operators::assemble(&problem.mesh, &problem.params)?;
    let mut state = initial_state(problem, &ops)?;
    observer(0, &state)?;
    if steps == 0 {
        return Ok(state);
    }
    let stepper = Stepper::new(problem, &ops, problem.dt, false).map_err(|e| Error::Step {
        step: 1,
        source: Box::new(e),
    })?;
    for n in 1..=steps {
        let t = n as f64 * problem.dt;
        state = stepper.step(&state, t).map_err(|e| Error::Step {
            step: n,
            source: Box::new(e),
        })?;
        observer(n, &state)?;
    }
    Ok(state)
}

/// Full trajectory of `N + 1` states.
pub fn backward_euler_run(problem: &ProblemDefinition) -> Result<Trajectory> {
    let mut states = Vec::new();
    run_with_observer(problem, |_, s| {
        states.push(s.clone());
        Ok(())
    })?;
    Ok(Trajectory {
        dt: problem.dt,
        states,
    })
}
