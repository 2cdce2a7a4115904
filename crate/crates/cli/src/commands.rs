use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use porofem::analysis::{
    fmt, oscillation_indicator, ConvergenceRow, ConvergenceTable, ERROR_COLUMNS,
};
use porofem::assembly::{lame_from_young, Operators};
use porofem::benchmarks::{cantilever, unconfined};
use porofem::experiments::{
    armstrong_reference, cantilever_run, manufactured_run, unconfined_run_ramped, Observer,
};
use porofem::io::{read_mesh, write_vtk};
use porofem::mesh::{unit_cube_mesh, unit_square_mesh};
use porofem::problem::{DisplacementBc, FluxBc};
use porofem::solver::{energy, run_with_observer, State};
use porofem::{
    MaterialParams, Mesh, NormalFlux, OperatorMode, Permeability, ProblemDefinition, ScalarField,
    VectorField,
};

use crate::args::{Command, RunArgs};
use crate::config::{RunConfig, RunSection};
use crate::error::{invalid, CliError};

/// Largest jump of the manufactured pressure between neighbouring cells,
/// relative to its range, is about `pi / n` for a smooth field; runs above
/// this factor times that level are flagged.
const OSCILLATION_FLAG: f64 = 1.5;

#[derive(Debug, PartialEq)]
pub enum Status {
    Passed,
    BelowThreshold(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub deltas: Vec<f64>,
    pub dt: f64,
    pub t_final: f64,
    pub res: Vec<usize>,
    pub out: PathBuf,
    pub vtk_every: Option<usize>,
    pub threshold: f64,
    pub ramp: f64,
}

struct Defaults {
    deltas: &'static [f64],
    dt: f64,
    t_final: f64,
    res: &'static [usize],
    threshold: f64,
}

const CONVERGE2D: Defaults = Defaults {
    deltas: &[1.0, 10.0, 100.0],
    dt: 0.25,
    t_final: 0.25,
    res: &[8, 16, 32, 64],
    threshold: 0.9,
};

const CONVERGE3D: Defaults = Defaults {
    deltas: &[0.001, 0.01, 0.1],
    dt: 0.25,
    t_final: 0.25,
    res: &[4, 8, 16],
    threshold: 0.8,
};

const CANTILEVER: Defaults = Defaults {
    deltas: &[cantilever::DELTA],
    dt: cantilever::DT,
    t_final: cantilever::T_FINAL,
    res: &[cantilever::N],
    threshold: 0.0,
};

const UNCONFINED: Defaults = Defaults {
    deltas: &[0.001, 0.1, 1.0],
    dt: unconfined::DT,
    t_final: unconfined::T_FINAL,
    res: &[unconfined::N_RADIAL, unconfined::N_AXIAL],
    threshold: 2e-3,
};

/// Flags (and their environment variables) over config values over defaults.
fn resolve(
    args: &RunArgs,
    cfg: Option<&RunSection>,
    d: &Defaults,
    default_out: &str,
) -> Result<Settings, CliError> {
    let cfg = cfg.cloned().unwrap_or_default();
    let pick_vec = |flag: &Vec<f64>, c: Option<Vec<f64>>, def: &[f64]| {
        if !flag.is_empty() {
            flag.clone()
        } else {
            c.unwrap_or_else(|| def.to_vec())
        }
    };
    let res = if !args.res.is_empty() {
        args.res.clone()
    } else {
        cfg.res.unwrap_or_else(|| d.res.to_vec())
    };
    let s = Settings {
        deltas: pick_vec(&args.delta, cfg.delta, d.deltas),
        dt: args.dt.or(cfg.dt).unwrap_or(d.dt),
        t_final: args.t_final.or(cfg.t_final).unwrap_or(d.t_final),
        res,
        out: args
            .out
            .clone()
            .or(cfg.out)
            .unwrap_or_else(|| PathBuf::from(default_out)),
        vtk_every: args.vtk_every.or(cfg.vtk_every),
        threshold: args.threshold.or(cfg.threshold).unwrap_or(d.threshold),
        ramp: args.ramp.or(cfg.ramp).unwrap_or(0.0),
    };
    validate(&s)?;
    Ok(s)
}

fn validate(s: &Settings) -> Result<(), CliError> {
    if s.res.is_empty() {
        return Err(invalid("at least one resolution is required"));
    }
    if s.res.contains(&0) {
        return Err(invalid("resolutions must be >= 1"));
    }
    if s.deltas.is_empty() {
        return Err(invalid("at least one delta is required"));
    }
    if let Some(d) = s.deltas.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
        return Err(invalid(format!("delta must be finite and >= 0, got {d}")));
    }
    if !(s.dt > 0.0) || !s.dt.is_finite() {
        return Err(invalid(format!("dt must be positive, got {}", s.dt)));
    }
    if !(s.t_final >= 0.0) || !s.t_final.is_finite() {
        return Err(invalid(format!("T must be >= 0, got {}", s.t_final)));
    }
    if s.vtk_every == Some(0) {
        return Err(invalid("--vtk-every must be >= 1"));
    }
    if !(s.ramp >= 0.0) || !s.ramp.is_finite() {
        return Err(invalid(format!("ramp must be >= 0, got {}", s.ramp)));
    }
    Ok(())
}

pub fn dispatch(cmd: Command) -> Result<Status, CliError> {
    match cmd {
        Command::Converge2d(a) => converge(2, &resolve(&a, None, &CONVERGE2D, "out")?),
        Command::Converge3d(a) => converge(3, &resolve(&a, None, &CONVERGE3D, "out")?),
        Command::Cantilever(a) => cantilever_cmd(&resolve(&a, None, &CANTILEVER, "out")?),
        Command::Unconfined(a) => unconfined_cmd(&resolve(&a, None, &UNCONFINED, "out")?),
        Command::Run { config, args } => run_config(&config, &args),
    }
}

fn run_config(path: &Path, args: &RunArgs) -> Result<Status, CliError> {
    let cfg = RunConfig::load(path)?;
    let run = Some(&cfg.run);
    match cfg.run.benchmark.as_str() {
        "converge2d" => converge(2, &resolve(args, run, &CONVERGE2D, "out")?),
        "converge3d" => converge(3, &resolve(args, run, &CONVERGE3D, "out")?),
        "cantilever" => cantilever_cmd(&resolve(args, run, &CANTILEVER, "out")?),
        "unconfined" => unconfined_cmd(&resolve(args, run, &UNCONFINED, "out")?),
        "custom" => custom(&cfg, args),
        other => Err(invalid(format!(
            "unknown benchmark `{other}` (expected converge2d, converge3d, cantilever, unconfined or custom)"
        ))),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// File-name friendly rendering of a parameter value.
fn tag(v: f64) -> String {
    format!("{v}")
}

/// Runs `f` with an observer writing `<prefix>_<step>.vtk` every `every` steps.
fn with_snapshots<R>(
    dir: &Path,
    prefix: &str,
    every: Option<usize>,
    f: impl FnOnce(Option<Observer>) -> R,
) -> R {
    match every {
        None => f(None),
        Some(k) => {
            let mut obs = |step: usize, mesh: &Mesh, s: &State| -> porofem::Result<()> {
                if step % k == 0 {
                    write_vtk(mesh, s, dir.join(format!("{prefix}_{step:05}.vtk")))?;
                }
                Ok(())
            };
            f(Some(&mut obs))
        }
    }
}

fn converge(dim: usize, s: &Settings) -> Result<Status, CliError> {
    if s.res.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("resolutions must be strictly increasing"));
    }
    create_dir(&s.out)?;
    let name = format!("converge{dim}d");
    let mut failures = Vec::new();
    for &delta in &s.deltas {
        println!("{name} delta={delta}");
        let head: Vec<String> = ERROR_COLUMNS.iter().map(|c| format!("{c:>11}")).collect();
        println!("  {:>4} {:>10} {} {:>7}", "n", "dt", head.join(" "), "osc");
        let mut table = ConvergenceTable::default();
        let mut osc = 0.0;
        for &n in &s.res {
            let dt = s.dt / n as f64;
            let prefix = format!("{name}_delta_{}_n{n}", tag(delta));
            let run = with_snapshots(&s.out, &prefix, s.vtk_every, |obs| {
                manufactured_run(dim, n, delta, dt, s.t_final, obs)
            })?;
            let errors = run.report.aggregates()?.columns();
            let cols: Vec<String> = errors.iter().map(|e| format!("{e:>11.3e}")).collect();
            println!(
                "  {n:>4} {dt:>10.3e} {} {:>7.3}",
                cols.join("  "),
                run.oscillation
            );
            osc = run.oscillation * n as f64 / std::f64::consts::PI;
            table.push(ConvergenceRow {
                h: run.h,
                dt,
                errors,
            })?;
        }
        let path = s.out.join(format!("{name}_delta_{}.csv", tag(delta)));
        table.write_csv(&path)?;
        if osc > OSCILLATION_FLAG {
            println!(
                "  note: finest-mesh pressure jumps are {osc:.2}x the smooth-field level (oscillating pressure)"
            );
        }
        if table.rows.len() >= 2 {
            let min = table.min_rates()?;
            let r: Vec<String> = min.iter().map(|v| format!("{v:>11.3}")).collect();
            println!("  {:>15} {}", "smallest rate", r.join(" "));
            for (k, &v) in min.iter().enumerate() {
                if !(v >= s.threshold) {
                    failures.push(format!(
                        "delta={delta} {} rate {v:.3} < {}",
                        ERROR_COLUMNS[k], s.threshold
                    ));
                }
            }
        }
        println!("  wrote {}", path.display());
    }
    Ok(if failures.is_empty() {
        Status::Passed
    } else {
        Status::BelowThreshold(failures.join("; "))
    })
}

fn cantilever_cmd(s: &Settings) -> Result<Status, CliError> {
    create_dir(&s.out)?;
    let n = s.res[0];
    let mesh = unit_square_mesh(n)?;
    let mut deltas = vec![0.0];
    deltas.extend(s.deltas.iter().copied().filter(|&d| d != 0.0));
    let mut report = String::from("delta,oscillation\n");
    let mut indicators = Vec::new();
    for &delta in &deltas {
        let prefix = format!("cantilever_delta_{}", tag(delta));
        let run = with_snapshots(&s.out, &prefix, s.vtk_every, |obs| {
            cantilever_run(n, delta, s.dt, s.t_final, obs)
        })?;
        let path = s.out.join(format!("{prefix}.vtk"));
        write_vtk(&mesh, &run.final_state, &path)?;
        println!(
            "cantilever n={n} delta={delta}: oscillation {:.4} at t={} -> {}",
            run.oscillation,
            run.final_state.t,
            path.display()
        );
        report.push_str(&format!("{},{}\n", fmt(delta), fmt(run.oscillation)));
        indicators.push((delta, run.oscillation));
    }
    let path = s.out.join("cantilever_report.csv");
    write_text(&path, &report)?;
    println!("wrote {}", path.display());
    let plain = indicators[0].1;
    let worse: Vec<String> = indicators[1..]
        .iter()
        .filter(|(_, o)| !(*o < plain))
        .map(|(d, o)| format!("delta={d}: {o:.4} >= {plain:.4}"))
        .collect();
    Ok(if worse.is_empty() {
        Status::Passed
    } else {
        Status::BelowThreshold(format!(
            "stabilized indicator not below the unstabilized one ({})",
            worse.join("; ")
        ))
    })
}

fn unconfined_cmd(s: &Settings) -> Result<Status, CliError> {
    let [rings, layers] = s.res[..] else {
        return Err(invalid("unconfined takes --res rings,layers"));
    };
    create_dir(&s.out)?;
    let mut summary = String::from("delta,rmse,num_cells\n");
    let mut rmse = Vec::new();
    for &delta in &s.deltas {
        let prefix = format!("unconfined_delta_{}", tag(delta));
        let run = with_snapshots(&s.out, &prefix, s.vtk_every, |obs| {
            unconfined_run_ramped(rings, layers, delta, s.dt, s.t_final, s.ramp, obs)
        })?;
        let path = s.out.join(format!("{prefix}.csv"));
        write_text(&path, &run.to_csv()?)?;
        println!(
            "unconfined delta={delta}: {} tets, RMSE {:.4e}, u/a(0)={:.6}, u/a(T)={:.7} -> {}",
            run.num_cells,
            run.rmse,
            run.simulated[0],
            run.simulated.last().copied().unwrap_or(f64::NAN),
            path.display()
        );
        summary.push_str(&format!(
            "{},{},{}\n",
            fmt(delta),
            fmt(run.rmse),
            run.num_cells
        ));
        rmse.push((delta, run.rmse));
    }
    let model = armstrong_reference()?;
    let mut curve = String::from("t,t_over_tg,u_over_a\n");
    let samples = 400;
    for i in 0..=samples {
        let t = s.t_final * i as f64 / samples as f64;
        curve.push_str(&format!(
            "{},{},{}\n",
            fmt(t),
            fmt(t / model.t_g()),
            fmt(model.radial_displacement(t))
        ));
    }
    let curve_path = s.out.join("armstrong.csv");
    write_text(&curve_path, &curve)?;
    let path = s.out.join("unconfined_rmse.csv");
    write_text(&path, &summary)?;
    println!("wrote {} and {}", path.display(), curve_path.display());
    let (d, e) = rmse
        .iter()
        .copied()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one delta");
    Ok(if e <= s.threshold {
        Status::Passed
    } else {
        Status::BelowThreshold(format!(
            "RMSE {e:.4e} for delta={d} exceeds {}",
            s.threshold
        ))
    })
}

fn material(cfg: &RunConfig, delta: f64) -> Result<MaterialParams, CliError> {
    let m = cfg.material.clone().unwrap_or_default();
    let (lambda, mu_s) = match (m.young, m.nu, m.lambda, m.mu) {
        (Some(e), Some(nu), None, None) => lame_from_young(e, nu),
        (None, None, Some(l), Some(mu)) => (l, mu),
        (None, None, None, None) => (1.0, 1.0),
        _ => {
            return Err(invalid(
                "[material] needs either E and nu, or lambda and mu",
            ))
        }
    };
    let mode = match m.mode.as_str() {
        "full_biot" => OperatorMode::FullBiot,
        "vector_laplacian" => OperatorMode::VectorLaplacian,
        other => {
            return Err(invalid(format!(
                "unknown mode `{other}` (expected full_biot or vector_laplacian)"
            )))
        }
    };
    Ok(MaterialParams {
        lambda,
        mu_s,
        kappa: Permeability::Scalar(m.kappa),
        alpha: m.alpha,
        c0: m.c0,
        delta,
        mode,
    })
}

fn custom_mesh(cfg: &RunConfig, n: usize) -> Result<Mesh, CliError> {
    let m = cfg
        .mesh
        .clone()
        .ok_or_else(|| invalid("custom runs need a [mesh] section"))?;
    match (m.generator.as_deref(), m.file) {
        (Some("square"), None) => Ok(unit_square_mesh(n)?),
        (Some("cube"), None) => Ok(unit_cube_mesh(n)?),
        (None, Some(file)) => read_mesh(&file).map_err(|e| match e {
            porofem::Error::Io { path, source } => CliError::Read { path, source },
            e => e.into(),
        }),
        (Some(g), None) => Err(invalid(format!(
            "unknown mesh generator `{g}` (expected square or cube)"
        ))),
        _ => Err(invalid("[mesh] needs exactly one of generator and file")),
    }
}

fn custom(cfg: &RunConfig, args: &RunArgs) -> Result<Status, CliError> {
    let defaults = Defaults {
        deltas: &[1.0],
        dt: f64::NAN,
        t_final: f64::NAN,
        res: &[8],
        threshold: 0.0,
    };
    if args.dt.or(cfg.run.dt).is_none() || args.t_final.or(cfg.run.t_final).is_none() {
        return Err(invalid("custom runs need dt and T"));
    }
    let s = resolve(args, Some(&cfg.run), &defaults, "out")?;
    let mesh = Arc::new(custom_mesh(cfg, s.res[0])?);
    let d = mesh.dim();
    let bc = cfg.boundary.clone().unwrap_or_default();
    create_dir(&s.out)?;
    for &delta in &s.deltas {
        let params = material(cfg, delta)?;
        let mut p = ProblemDefinition::new("custom", mesh.clone(), params, s.dt, s.t_final);
        if !bc.fixed.is_empty() {
            p.displacement.push(DisplacementBc::full(
                d,
                bc.fixed.clone(),
                VectorField::zero(),
            ));
        }
        if !bc.sealed.is_empty() {
            p.flux.push(FluxBc {
                tags: bc.sealed.clone(),
                value: NormalFlux::zero(),
            });
        }
        if let Some(t) = bc.traction {
            if bc.traction_tags.is_empty() {
                return Err(invalid("traction given without traction_tags"));
            }
            p.loads
                .tractions
                .push((bc.traction_tags.clone(), VectorField::constant(t)));
        }
        if bc.pressure != 0.0 {
            let drained: Vec<u32> = mesh
                .boundary_markers()
                .values()
                .copied()
                .filter(|t| !bc.sealed.contains(t))
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            p.loads
                .pressures
                .push((drained, ScalarField::constant(bc.pressure)));
        }
        if let Some(f) = bc.body_force {
            p.loads.f = VectorField::constant(f);
        }
        p.loads.g = ScalarField::constant(bc.source);
        p.validate()?;

        let ops = Operators::assemble(&mesh, &params)?;
        let prefix = format!("custom_delta_{}", tag(delta));
        let every = s.vtk_every;
        let mut history = String::from("t,energy,oscillation,p_min,p_max\n");
        let last = run_with_observer(&p, |step, st| {
            let (lo, hi) =
                st.p.iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                        (l.min(v), h.max(v))
                    });
            history.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt(st.t),
                fmt(energy(&ops, st)),
                fmt(oscillation_indicator(&mesh, &st.p)),
                fmt(lo),
                fmt(hi)
            ));
            if let Some(k) = every {
                if step % k == 0 {
                    write_vtk(&mesh, st, s.out.join(format!("{prefix}_{step:05}.vtk")))?;
                }
            }
            Ok(())
        })?;
        let vtk = s.out.join(format!("{prefix}.vtk"));
        write_vtk(&mesh, &last, &vtk)?;
        let csv = s.out.join(format!("{prefix}_history.csv"));
        write_text(&csv, &history)?;
        println!(
            "custom delta={delta}: {} cells, t={} -> {}, {}",
            mesh.num_cells(),
            last.t,
            vtk.display(),
            csv.display()
        );
    }
    Ok(Status::Passed)
}
