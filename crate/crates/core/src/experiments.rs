//! Drivers for the benchmark studies: convergence tables, cantilever
//! oscillation comparison and unconfined compression against the analytic
//! series.

use crate::analysis::{
    error_norms, oscillation_indicator, ConvergenceRow, ConvergenceTable, ErrorReport, StepErrors,
};
use crate::benchmarks::{
    self, cantilever_setup, manufactured, normalized_radial_displacement, unconfined_setup_ramped,
    ArmstrongModel,
};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::solver::{run_with_observer, State};

/// Per-state callback: step index, mesh, state.
pub type Observer<'a> = &'a mut dyn FnMut(usize, &Mesh, &State) -> Result<()>;

/// Convergence runs use `dt = h_side * DT_PER_H` with `h_side = 1 / n`.
pub const DT_PER_H: f64 = 0.25;
pub const CONVERGENCE_T: f64 = 0.25;

/// Result of one manufactured-solution run.
#[derive(Debug, Clone)]
pub struct ManufacturedRun {
    pub n: usize,
    pub h: f64,
    pub report: ErrorReport,
    pub final_state: State,
    pub oscillation: f64,
}

pub fn manufactured_run(
    dim: usize,
    n: usize,
    delta: f64,
    dt: f64,
    t_final: f64,
    observer: Option<Observer>,
) -> Result<ManufacturedRun> {
    let (problem, exact) = manufactured(dim, n, delta, dt, t_final)?;
    let mesh = problem.mesh.clone();
    let mut steps: Vec<StepErrors> = Vec::new();
    let mut obs = observer;
    let final_state = run_with_observer(&problem, |k, s| {
        if k > 0 {
            steps.push(error_norms(&mesh, s, &exact, delta)?);
        }
        if let Some(o) = obs.as_mut() {
            o(k, &mesh, s)?;
        }
        Ok(())
    })?;
    Ok(ManufacturedRun {
        n,
        h: mesh.h(),
        oscillation: oscillation_indicator(&mesh, &final_state.p),
        report: ErrorReport { dt, steps },
        final_state,
    })
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub dim: usize,
    pub delta: f64,
    pub table: ConvergenceTable,
    pub runs: Vec<ManufacturedRun>,
}

/// Manufactured runs on `resolutions` (strictly increasing) with
/// `dt = dt_per_h / n` and final time `t_final`.
pub fn convergence_study(
    dim: usize,
    resolutions: &[usize],
    delta: f64,
    dt_per_h: f64,
    t_final: f64,
) -> Result<ConvergenceStudy> {
    if resolutions.is_empty() {
        return Err(Error::invalid("no resolutions given"));
    }
    if resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("resolutions must be strictly increasing"));
    }
    let mut table = ConvergenceTable::default();
    let mut runs = Vec::new();
    for &n in resolutions {
        if n == 0 {
            return Err(Error::invalid("resolution must be >= 1"));
        }
        let dt = dt_per_h / n as f64;
        let run = manufactured_run(dim, n, delta, dt, t_final, None)?;
        let agg = run.report.aggregates()?;
        table.push(ConvergenceRow {
            h: run.h,
            dt,
            errors: agg.columns(),
        })?;
        runs.push(run);
    }
    Ok(ConvergenceStudy {
        dim,
        delta,
        table,
        runs,
    })
}

#[derive(Debug, Clone)]
pub struct CantileverRun {
    pub delta: f64,
    pub final_state: State,
    pub oscillation: f64,
}

pub fn cantilever_run(
    n: usize,
    delta: f64,
    dt: f64,
    t_final: f64,
    observer: Option<Observer>,
) -> Result<CantileverRun> {
    let problem = cantilever_setup(n, delta, dt, t_final)?;
    let mesh = problem.mesh.clone();
    let mut obs = observer;
    let final_state = run_with_observer(&problem, |k, s| match obs.as_mut() {
        Some(o) => o(k, &mesh, s),
        None => Ok(()),
    })?;
    Ok(CantileverRun {
        delta,
        oscillation: oscillation_indicator(&mesh, &final_state.p),
        final_state,
    })
}

/// Number of series terms used for the analytic reference.
pub const ARMSTRONG_TERMS: usize = 200;

#[derive(Debug, Clone)]
pub struct UnconfinedRun {
    pub delta: f64,
    pub num_cells: usize,
    pub t_g: f64,
    pub times: Vec<f64>,
    /// Simulated `u_r / a`.
    pub simulated: Vec<f64>,
    /// Analytic `u_r / a`.
    pub analytic: Vec<f64>,
    /// Root-mean-square difference over all output times including `t = 0`.
    pub rmse: f64,
}

pub fn armstrong_reference() -> Result<ArmstrongModel> {
    use benchmarks::unconfined::*;
    ArmstrongModel::new(NU, E, KAPPA, RADIUS, EPS0, ARMSTRONG_TERMS)
}

pub fn unconfined_run(
    n_radial: usize,
    n_axial: usize,
    delta: f64,
    dt: f64,
    t_final: f64,
    observer: Option<Observer>,
) -> Result<UnconfinedRun> {
    unconfined_run_ramped(n_radial, n_axial, delta, dt, t_final, 0.0, observer)
}

/// Unconfined run with the plate displacement ramped over `[0, ramp]`.
pub fn unconfined_run_ramped(
    n_radial: usize,
    n_axial: usize,
    delta: f64,
    dt: f64,
    t_final: f64,
    ramp: f64,
    observer: Option<Observer>,
) -> Result<UnconfinedRun> {
    let problem = unconfined_setup_ramped(n_radial, n_axial, delta, dt, t_final, ramp)?;
    let model = armstrong_reference()?;
    let mesh = problem.mesh.clone();
    let mut times = Vec::new();
    let mut simulated = Vec::new();
    let mut obs = observer;
    run_with_observer(&problem, |k, s| {
        times.push(s.t);
        simulated.push(normalized_radial_displacement(&mesh, &s.u));
        match obs.as_mut() {
            Some(o) => o(k, &mesh, s),
            None => Ok(()),
        }
    })?;
    let analytic: Vec<f64> = times
        .iter()
        .map(|&t| model.radial_displacement(t))
        .collect();
    Ok(UnconfinedRun {
        delta,
        num_cells: mesh.num_cells(),
        t_g: model.t_g(),
        rmse: rmse(&simulated, &analytic),
        times,
        simulated,
        analytic,
    })
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

impl UnconfinedRun {
    /// CSV with columns `t,t_over_tg,u_over_a,armstrong`.
    pub fn to_csv(&self) -> Result<String> {
        use crate::analysis::fmt;
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::invalid(e.to_string());
        w.write_record(["t", "t_over_tg", "u_over_a", "armstrong"])
            .map_err(io)?;
        for i in 0..self.times.len() {
            w.write_record([
                fmt(self.times[i]),
                fmt(self.times[i] / self.t_g),
                fmt(self.simulated[i]),
                fmt(self.analytic[i]),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
