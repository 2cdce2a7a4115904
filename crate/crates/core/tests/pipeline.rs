mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use porofem::analysis::ConvergenceTable;
use porofem::assembly::{assemble_darcy_mass, assemble_elasticity, Operators};
use porofem::benchmarks::{manufactured_exact, manufactured_source};
use porofem::experiments::{convergence_study, unconfined_run_ramped};
use porofem::fespace::{eval_p1, interpolate_p1};
use porofem::io::mesh_file::{mesh_to_string, parse_mesh};
use porofem::io::vtk::{vtk_string, write_vtk};
use porofem::mesh::{markers, unit_cube_mesh, unit_square_mesh};
use porofem::problem::{DisplacementBc, FluxBc};
use porofem::solver::{backward_euler_run, build_block_matrix};
use porofem::{
    DofLayout, Error, MaterialParams, Mesh, NormalFlux, OperatorMode, Permeability,
    ProblemDefinition, VectorField,
};

use common::*;

fn fd_point(x: &[f64; 3], k: usize, h: f64) -> [f64; 3] {
    let mut y = *x;
    y[k] += h;
    y
}

#[test]
fn manufactured_data_satisfies_the_equations() {
    let h = 1e-4;
    for dim in [2, 3] {
        let ex = manufactured_exact(dim);
        let g = manufactured_source(dim);
        for (x, t) in [([0.13, 0.71, 0.37], 0.21), ([0.6, 0.3, 0.8], 0.07)] {
            // mass: d/dt div u + div z = g
            let div = |f: &VectorField, x: &[f64; 3], t: f64| -> f64 {
                (0..dim)
                    .map(|k| {
                        (f.eval(&fd_point(x, k, h), t)[k] - f.eval(&fd_point(x, k, -h), t)[k])
                            / (2.0 * h)
                    })
                    .sum()
            };
            let ddt_div = (div(&ex.u, &x, t + h) - div(&ex.u, &x, t - h)) / (2.0 * h);
            let lhs = ddt_div + div(&ex.z, &x, t);
            let rhs = g.eval(&x, t);
            assert!(
                (lhs - rhs).abs() < 1e-5 * (1.0 + rhs.abs()),
                "mass {dim}D: {lhs} vs {rhs}"
            );

            // Darcy with unit permeability: z + grad p = 0
            for k in 0..dim {
                let dp = (ex.p.eval(&fd_point(&x, k, h), t) - ex.p.eval(&fd_point(&x, k, -h), t))
                    / (2.0 * h);
                assert!((ex.z.eval(&x, t)[k] + dp).abs() < 1e-6);
            }

            // momentum, vector Laplacian: -lap u + grad p = 0
            let hh = 1e-3;
            for i in 0..dim {
                let mut lap = 0.0;
                for k in 0..dim {
                    lap += (ex.u.eval(&fd_point(&x, k, hh), t)[i] - 2.0 * ex.u.eval(&x, t)[i]
                        + ex.u.eval(&fd_point(&x, k, -hh), t)[i])
                        / (hh * hh);
                }
                let dp = (ex.p.eval(&fd_point(&x, i, h), t) - ex.p.eval(&fd_point(&x, i, -h), t))
                    / (2.0 * h);
                assert!(
                    (-lap + dp).abs() < 1e-4,
                    "momentum {dim}D comp {i}: {}",
                    -lap + dp
                );
            }
        }
    }
}

#[test]
fn p1_interpolation_is_second_order_at_centroids() {
    let f = VectorField::new(|x, _| [(3.0 * x[0]).sin() * x[1], (x[0] * x[1]).exp(), 0.0]);
    let err = |n: usize| {
        let mesh = unit_square_mesh(n).unwrap();
        let c = interpolate_p1(&mesh, &f, 0.0);
        (0..mesh.num_cells())
            .map(|k| {
                let got = eval_p1(&mesh, &c, k, &[1.0 / 3.0; 3]);
                let want = f.eval(&mesh.cell_centroid(k), 0.0);
                (0..2).map(|i| (got[i] - want[i]).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    };
    let rate = (err(8) / err(16)).log2();
    assert!((rate - 2.0).abs() < 0.15, "rate {rate}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn elasticity_and_darcy_elements_match_oracle(seed in any::<u64>(), three in any::<bool>()) {
        let dim = if three { 3 } else { 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = random_simplex(&mut rng, dim);
        let mesh = Mesh::new(dim, pts.iter().flatten().copied().collect(), (0..=dim).collect()).unwrap();
        let s = Simplex::new(dim, &pts);
        let params = MaterialParams { lambda: 3.0, mu_s: 0.5, kappa: Permeability::Scalar(2.0), ..Default::default() };
        let a = assemble_elasticity(&mesh, &params).unwrap();
        let a = nalgebra::DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a.get(i, j));
        let want = oracle_elasticity(&s, &Lame { lambda: 3.0, mu: 0.5, laplacian: false });
        prop_assert!(rel_diff(&a, &want) < 1e-12);
        let m = assemble_darcy_mass(&mesh, &params).unwrap();
        let m = nalgebra::DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m.get(i, j));
        let kinv = nalgebra::DMatrix::identity(dim, dim) * 0.5;
        prop_assert!(rel_diff(&m, &oracle_darcy_mass(&s, &kinv)) < 1e-12);
    }
}

#[test]
fn mesh_text_round_trip_keeps_markers() {
    for mesh in [unit_square_mesh(3).unwrap(), unit_cube_mesh(2).unwrap()] {
        let back = parse_mesh(&mesh_to_string(&mesh)).unwrap();
        assert_eq!(back.coords(), mesh.coords());
        assert_eq!(back.num_cells(), mesh.num_cells());
        assert_eq!(back.boundary_markers().len(), mesh.boundary_markers().len());
        assert_eq!(mesh_to_string(&back), mesh_to_string(&mesh));
    }
    assert!(parse_mesh("porofem-mesh v1 2\n3\n0 0\n1 0\n2 0\n1\n0 1 2\n").is_err());
}

#[test]
fn block_matrix_is_symmetric() {
    let mesh = unit_square_mesh(3).unwrap();
    let params = MaterialParams {
        c0: 0.3,
        delta: 0.5,
        ..Default::default()
    };
    let ops = Operators::assemble(&mesh, &params).unwrap();
    for mean in [false, true] {
        let layout = DofLayout::new(&mesh, mean);
        let k = build_block_matrix(&mesh, &ops, &params, &layout, 0.1).unwrap();
        assert_eq!(k.nrows(), layout.size());
        assert!(k.is_symmetric(1e-14 * k.max_abs()));
    }
}

#[test]
fn small_run_converges_and_writes_vtk() {
    let study = convergence_study(2, &[4, 8], 1.0, 0.25, 0.125).unwrap();
    let rates = study.table.rates().unwrap();
    assert!(rates[0][0] > 0.5, "{rates:?}");
    let csv = study.table.to_csv().unwrap();
    assert_eq!(ConvergenceTable::from_csv(&csv).unwrap(), study.table);

    let run = &study.runs[1];
    let mesh = unit_square_mesh(8).unwrap();
    let text = vtk_string(&mesh, &run.final_state).unwrap();
    assert!(text.contains("DATASET UNSTRUCTURED_GRID"));
    assert!(text.contains(&format!(
        "CELLS {} {}",
        mesh.num_cells(),
        4 * mesh.num_cells()
    )));
    assert!(text.contains("SCALARS p double 1"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.vtk");
    write_vtk(&mesh, &run.final_state, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn traction_free_problem_without_pins_is_reported_singular() {
    let mesh = Arc::new(unit_square_mesh(2).unwrap());
    let mut p = ProblemDefinition::new("free", mesh, MaterialParams::default(), 0.1, 0.2);
    p.loads
        .tractions
        .push((vec![markers::TOP], VectorField::constant([0.0, -1.0, 0.0])));
    p.flux.push(FluxBc {
        tags: vec![markers::LEFT],
        value: NormalFlux::zero(),
    });
    let err = backward_euler_run(&p).unwrap_err();
    assert!(matches!(err, Error::Step { .. }), "{err}");
}

#[test]
fn time_interval_must_be_a_multiple_of_dt() {
    let mesh = Arc::new(unit_square_mesh(2).unwrap());
    let mut p = ProblemDefinition::new("bad", mesh, MaterialParams::default(), 0.3, 1.0);
    p.displacement.push(DisplacementBc::full(
        2,
        vec![markers::LEFT],
        VectorField::zero(),
    ));
    assert!(matches!(
        backward_euler_run(&p),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn ramped_compression_starts_unloaded_and_reaches_drained_state() {
    let run = unconfined_run_ramped(2, 3, 0.001, 0.5, 20.0, 2.0, None).unwrap();
    assert!(run.simulated[0].abs() < 1e-12);
    let last = *run.simulated.last().unwrap();
    assert!((last - 0.15 * 0.01).abs() < 0.05 * 0.0015, "{last}");
}

#[test]
fn vector_laplacian_mode_ignores_lame_parameters() {
    let mesh = unit_cube_mesh(1).unwrap();
    let a = |lambda| {
        let p = MaterialParams {
            lambda,
            mode: OperatorMode::VectorLaplacian,
            ..Default::default()
        };
        assemble_elasticity(&mesh, &p).unwrap()
    };
    assert_eq!(a(1.0), a(100.0));
}
