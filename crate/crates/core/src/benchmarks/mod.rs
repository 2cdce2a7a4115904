//! Ready-made benchmark problems.
//!
//! * manufactured solutions on the unit square and cube
//! * cantilever bracket with locking-prone parameters
//! * unconfined compression of a cylinder, with the analytic series in [`armstrong`]

pub mod armstrong;
pub mod bessel;

use std::f64::consts::PI;
use std::sync::Arc;

use crate::analysis::ExactSolution;
use crate::assembly::{lame_from_young, MaterialParams, OperatorMode, Permeability};
use crate::error::{Error, Result};
use crate::fespace::{NormalFlux, ScalarField, VectorField};
use crate::mesh::{cylinder_mesh, markers, unit_cube_mesh, unit_square_mesh, Mesh};
use crate::problem::{DisplacementBc, FluxBc, InitialLoading, Pin, ProblemDefinition};

pub use armstrong::{characteristic_roots, ArmstrongModel};
pub use bessel::{bessel_j0, bessel_j0_zeros, bessel_j1};

/// Displacement amplitude of the 2D manufactured solution.
pub const C2D: f64 = -1.0 / (4.0 * PI);
/// Displacement amplitude of the 3D manufactured solution.
pub const C3D: f64 = -1.0 / (6.0 * PI);

const TAU: f64 = 2.0 * PI;

fn s(v: f64) -> f64 {
    (TAU * v).sin()
}

fn c(v: f64) -> f64 {
    (TAU * v).cos()
}

/// Exact fields of the manufactured solution in `dim` dimensions:
/// `p = prod sin(2 pi x_i) sin(2 pi t)`, `z = -grad p`,
/// `u_i = C cos(2 pi x_i) prod_{j != i} sin(2 pi x_j) sin(2 pi t)`.
pub fn manufactured_exact(dim: usize) -> ExactSolution {
    let d = dim;
    let amp = if d == 2 { C2D } else { C3D };
    // product of sines with factor i replaced by cos
    let prod = move |x: &[f64; 3], cos_at: &[usize]| -> f64 {
        (0..d)
            .map(|k| {
                if cos_at.contains(&k) {
                    c(x[k])
                } else {
                    s(x[k])
                }
            })
            .product()
    };
    // d/dx_j of prod with cos at i
    let dprod = move |x: &[f64; 3], i: usize, j: usize| -> f64 {
        (0..d)
            .map(|k| {
                let is_cos = k == i;
                if k == j {
                    if is_cos {
                        -TAU * s(x[k])
                    } else {
                        TAU * c(x[k])
                    }
                } else if is_cos {
                    c(x[k])
                } else {
                    s(x[k])
                }
            })
            .product()
    };
    let u = VectorField::new(move |x, t| {
        let mut v = [0.0; 3];
        for (i, vi) in v.iter_mut().enumerate().take(d) {
            *vi = amp * prod(x, &[i]) * s(t);
        }
        v
    })
    .with_jacobian(move |x, t| {
        let mut j = [[0.0; 3]; 3];
        for (i, row) in j.iter_mut().enumerate().take(d) {
            for (k, e) in row.iter_mut().enumerate().take(d) {
                *e = amp * dprod(x, i, k) * s(t);
            }
        }
        j
    });
    let p = ScalarField::new(move |x, t| prod(x, &[]) * s(t)).with_gradient(move |x, t| {
        let mut g = [0.0; 3];
        for (i, gi) in g.iter_mut().enumerate().take(d) {
            *gi = TAU * prod(x, &[i]) * s(t);
        }
        g
    });
    // z = -grad p, dz_i/dx_j = -d^2 p / dx_i dx_j
    let z = VectorField::new(move |x, t| {
        let mut v = [0.0; 3];
        for (i, vi) in v.iter_mut().enumerate().take(d) {
            *vi = -TAU * prod(x, &[i]) * s(t);
        }
        v
    })
    .with_jacobian(move |x, t| {
        let mut j = [[0.0; 3]; 3];
        for (i, row) in j.iter_mut().enumerate().take(d) {
            for (k, e) in row.iter_mut().enumerate().take(d) {
                *e = -TAU * dprod(x, i, k) * s(t);
            }
        }
        j
    });
    ExactSolution { u, z, p }
}

/// Fluid source of the manufactured solution.
pub fn manufactured_source(dim: usize) -> ScalarField {
    let lap = if dim == 2 { 8.0 } else { 12.0 } * PI * PI;
    ScalarField::new(move |x, t| {
        let sp: f64 = (0..dim).map(|k| s(x[k])).product();
        TAU * sp * c(t) + lap * sp * s(t)
    })
}

/// Manufactured-solution problem on the unit square (`dim = 2`) or cube
/// (`dim = 3`) with `n` subdivisions per side.
pub fn manufactured(
    dim: usize,
    n: usize,
    delta: f64,
    dt: f64,
    t_final: f64,
) -> Result<(ProblemDefinition, ExactSolution)> {
    let (mesh, tags): (Mesh, Vec<u32>) = match dim {
        2 => (
            unit_square_mesh(n)?,
            vec![markers::LEFT, markers::RIGHT, markers::BOTTOM, markers::TOP],
        ),
        3 => (
            unit_cube_mesh(n)?,
            (markers::X_MIN..=markers::Z_MAX).collect(),
        ),
        _ => {
            return Err(Error::invalid(format!(
                "dimension must be 2 or 3, got {dim}"
            )))
        }
    };
    let params = MaterialParams {
        lambda: 0.0,
        mu_s: 1.0,
        kappa: Permeability::Scalar(1.0),
        alpha: 1.0,
        c0: 0.0,
        delta,
        mode: OperatorMode::VectorLaplacian,
    };
    let exact = manufactured_exact(dim);
    let mut p = ProblemDefinition::new(
        format!("manufactured{dim}d"),
        Arc::new(mesh),
        params,
        dt,
        t_final,
    );
    p.loads.g = manufactured_source(dim);
    p.displacement
        .push(DisplacementBc::full(dim, tags.clone(), exact.u.clone()));
    p.flux.push(FluxBc {
        tags,
        value: NormalFlux::from_vector(exact.z.clone()),
    });
    p.initial_u = exact.u.clone();
    p.initial_z = exact.z.clone();
    p.initial_p = exact.p.clone();
    Ok((p, exact))
}

pub fn manufactured_2d(
    n: usize,
    delta: f64,
    dt: f64,
    t_final: f64,
) -> Result<(ProblemDefinition, ExactSolution)> {
    manufactured(2, n, delta, dt, t_final)
}

pub fn manufactured_3d(
    n: usize,
    delta: f64,
    dt: f64,
    t_final: f64,
) -> Result<(ProblemDefinition, ExactSolution)> {
    manufactured(3, n, delta, dt, t_final)
}

/// Locking-prone material data of the cantilever test.
pub mod cantilever {
    pub const E: f64 = 1e5;
    pub const NU: f64 = 0.4;
    pub const ALPHA: f64 = 0.93;
    pub const KAPPA: f64 = 1e-7;
    pub const DT: f64 = 1e-3;
    pub const T_FINAL: f64 = 5e-3;
    pub const DELTA: f64 = 5e-6;
    /// Downward traction on the top edge.
    pub const TRACTION: f64 = 1.0;
    pub const N: usize = 48;
}

/// Unit square clamped on the left, pulled down on the top, sealed everywhere.
pub fn cantilever_setup(n: usize, delta: f64, dt: f64, t_final: f64) -> Result<ProblemDefinition> {
    use cantilever::*;
    let (lambda, mu_s) = lame_from_young(E, NU);
    let params = MaterialParams {
        lambda,
        mu_s,
        kappa: Permeability::Scalar(KAPPA),
        alpha: ALPHA,
        c0: 0.0,
        delta,
        mode: OperatorMode::FullBiot,
    };
    let mesh = Arc::new(unit_square_mesh(n)?);
    let mut p = ProblemDefinition::new("cantilever", mesh, params, dt, t_final);
    p.displacement.push(DisplacementBc::full(
        2,
        vec![markers::LEFT],
        VectorField::zero(),
    ));
    p.loads.tractions.push((
        vec![markers::TOP],
        VectorField::constant([0.0, -TRACTION, 0.0]),
    ));
    p.flux.push(FluxBc {
        tags: vec![markers::LEFT, markers::RIGHT, markers::BOTTOM, markers::TOP],
        value: NormalFlux::zero(),
    });
    Ok(p)
}

/// Unconfined compression data.
pub mod unconfined {
    pub const E: f64 = 1000.0;
    pub const NU: f64 = 0.15;
    pub const KAPPA: f64 = 0.1;
    pub const RADIUS: f64 = 5.0;
    pub const HEIGHT: f64 = 5.0;
    /// Axial strain.
    pub const EPS0: f64 = 0.01;
    pub const DT: f64 = 0.1;
    pub const T_FINAL: f64 = 10.0;
    pub const N_RADIAL: usize = 3;
    pub const N_AXIAL: usize = 5;
}

/// Cylinder compressed by `EPS0 * HEIGHT` between frictionless impermeable
/// plates, free-draining on the lateral surface. The state at `t = 0` is the
/// undrained response; the displacement is then held.
pub fn unconfined_setup(
    n_radial: usize,
    n_axial: usize,
    delta: f64,
    dt: f64,
    t_final: f64,
) -> Result<ProblemDefinition> {
    unconfined_setup_ramped(n_radial, n_axial, delta, dt, t_final, 0.0)
}

/// As [`unconfined_setup`], but the plate displacement grows linearly over
/// `[0, ramp]` instead of being applied at once. `ramp = 0` is the step load.
pub fn unconfined_setup_ramped(
    n_radial: usize,
    n_axial: usize,
    delta: f64,
    dt: f64,
    t_final: f64,
    ramp: f64,
) -> Result<ProblemDefinition> {
    use unconfined::*;
    if !(ramp >= 0.0) || !ramp.is_finite() {
        return Err(Error::invalid(format!(
            "ramp time must be >= 0, got {ramp}"
        )));
    }
    let (lambda, mu_s) = lame_from_young(E, NU);
    let params = MaterialParams {
        lambda,
        mu_s,
        kappa: Permeability::Scalar(KAPPA),
        alpha: 1.0,
        c0: 0.0,
        delta,
        mode: OperatorMode::FullBiot,
    };
    let mesh = cylinder_mesh(RADIUS, HEIGHT, n_radial, n_axial)?;
    let (centre, axis) = bottom_pins(&mesh)?;
    let mut p = ProblemDefinition::new("unconfined", Arc::new(mesh), params, dt, t_final);
    p.displacement.push(DisplacementBc {
        tags: vec![markers::CYL_TOP],
        components: vec![2],
        value: if ramp > 0.0 {
            VectorField::new(move |_, t| [0.0, 0.0, -EPS0 * HEIGHT * (t / ramp).min(1.0)])
        } else {
            VectorField::constant([0.0, 0.0, -EPS0 * HEIGHT])
        },
    });
    p.displacement.push(DisplacementBc {
        tags: vec![markers::CYL_BOTTOM],
        components: vec![2],
        value: VectorField::zero(),
    });
    p.pins = vec![
        Pin {
            vertex: centre,
            component: 0,
            value: 0.0,
        },
        Pin {
            vertex: centre,
            component: 1,
            value: 0.0,
        },
        Pin {
            vertex: axis,
            component: 1,
            value: 0.0,
        },
    ];
    p.flux.push(FluxBc {
        tags: vec![markers::CYL_BOTTOM, markers::CYL_TOP],
        value: NormalFlux::zero(),
    });
    p.loads
        .pressures
        .push((vec![markers::CYL_LATERAL], ScalarField::zero()));
    p.initial_loading = InitialLoading::Undrained;
    Ok(p)
}

/// Bottom centre vertex and the outermost bottom vertex on the positive x axis.
fn bottom_pins(mesh: &Mesh) -> Result<(usize, usize)> {
    let tol = 1e-9;
    let bottom = mesh.vertices_on(&[markers::CYL_BOTTOM]);
    let centre = bottom
        .iter()
        .copied()
        .find(|&v| {
            let x = mesh.point(v);
            x[0].abs() < tol && x[1].abs() < tol
        })
        .ok_or_else(|| Error::Topology("no vertex at the bottom centre".into()))?;
    let axis = bottom
        .iter()
        .copied()
        .filter(|&v| {
            let x = mesh.point(v);
            x[1].abs() < tol && x[0] > tol
        })
        .max_by(|&a, &b| mesh.point(a)[0].total_cmp(&mesh.point(b)[0]))
        .ok_or_else(|| Error::Topology("no bottom vertex on the x axis".into()))?;
    Ok((centre, axis))
}

/// Mean of `u_r / r` over the lateral-surface vertices (equals `u_r / a` there).
pub fn normalized_radial_displacement(mesh: &Mesh, u: &[f64]) -> f64 {
    let lateral = mesh.vertices_on(&[markers::CYL_LATERAL]);
    let sum: f64 = lateral
        .iter()
        .map(|&v| {
            let x = mesh.point(v);
            let r2 = x[0] * x[0] + x[1] * x[1];
            (u[3 * v] * x[0] + u[3 * v + 1] * x[1]) / r2
        })
        .sum();
    sum / lateral.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn pointwise_values() {
        let e = manufactured_exact(2);
        assert!((e.p.eval(&[0.25, 0.25, 0.0], 0.25) - 1.0).abs() < 1e-15);
        let g = manufactured_source(2);
        assert!((g.eval(&[0.25, 0.25, 0.0], 0.25) - 8.0 * PI * PI).abs() < 1e-12);
        let g3 = manufactured_source(3);
        assert!((g3.eval(&[0.25; 3], 0.25) - 12.0 * PI * PI).abs() < 1e-12);
        let e3 = manufactured_exact(3);
        for t in [0.0, 0.5] {
            let u = e3.u.eval(&[0.3, 0.7, 0.1], t);
            assert!(u.iter().all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let mut seed = 7;
        for dim in [2, 3] {
            let e = manufactured_exact(dim);
            for _ in 0..10 {
                let x = [lcg(&mut seed), lcg(&mut seed), lcg(&mut seed)];
                let t = lcg(&mut seed);
                let ju = e.u.jacobian(&x, t).unwrap();
                let jz = e.z.jacobian(&x, t).unwrap();
                let gp = e.p.gradient(&x, t).unwrap();
                let h = 1e-6;
                for k in 0..dim {
                    let mut xp = x;
                    let mut xm = x;
                    xp[k] += h;
                    xm[k] -= h;
                    let (up, um) = (e.u.eval(&xp, t), e.u.eval(&xm, t));
                    let (zp, zm) = (e.z.eval(&xp, t), e.z.eval(&xm, t));
                    let fd_p = (e.p.eval(&xp, t) - e.p.eval(&xm, t)) / (2.0 * h);
                    assert!((fd_p - gp[k]).abs() < 1e-7);
                    for i in 0..dim {
                        assert!(((up[i] - um[i]) / (2.0 * h) - ju[i][k]).abs() < 1e-7);
                        assert!(((zp[i] - zm[i]) / (2.0 * h) - jz[i][k]).abs() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn cantilever_parameters() {
        let p =
            cantilever_setup(4, cantilever::DELTA, cantilever::DT, cantilever::T_FINAL).unwrap();
        assert!((p.params.mu_s - 35714.285714285714).abs() < 1e-8);
        assert!((p.params.lambda - 142857.14285714286).abs() < 1e-7);
        p.validate().unwrap();
        assert_eq!(p.num_steps().unwrap(), 5);
        assert!(!p.uses_mean_pressure());
    }

    #[test]
    fn unconfined_parameters() {
        let p = unconfined_setup(2, 2, 0.001, 0.1, 1.0).unwrap();
        p.validate().unwrap();
        assert!((p.params.mu_s - 434.78260869565219).abs() < 1e-9);
        assert!((p.params.lambda - 186.33540372670808).abs() < 1e-9);
        assert!((p.params.lambda + 2.0 * p.params.mu_s - 1055.9006).abs() < 1e-3);
        assert!(!p.uses_mean_pressure());
        assert_eq!(p.pins.len(), 3);
    }

    #[test]
    fn manufactured_problem_uses_mean_constraint() {
        let (p, _) = manufactured_2d(4, 1.0, 1.0 / 16.0, 0.25).unwrap();
        p.validate().unwrap();
        assert!(p.uses_mean_pressure());
        assert!(manufactured(4, 2, 1.0, 0.1, 0.1).is_err());
    }
}
