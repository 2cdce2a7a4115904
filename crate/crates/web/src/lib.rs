//! Browser bindings: pressure fields of the 2D benchmarks and the
//! unconfined-compression curve, returned as flat typed arrays.

use porofem::benchmarks::unconfined;
use porofem::experiments::{
    armstrong_reference, cantilever_run, manufactured_run, unconfined_run, CONVERGENCE_T, DT_PER_H,
};
use porofem::mesh::unit_square_mesh;
use porofem::Mesh;
use wasm_bindgen::prelude::*;

/// Largest mesh resolution accepted from the page.
pub const MAX_N: usize = 64;

/// Piecewise-constant pressure on a triangle mesh.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct PressureField {
    vertices: Vec<f64>,
    triangles: Vec<u32>,
    pressure: Vec<f64>,
    oscillation: f64,
    time: f64,
}

#[wasm_bindgen]
impl PressureField {
    /// `x0, y0, x1, y1, ...`
    #[wasm_bindgen(getter)]
    pub fn vertices(&self) -> Vec<f64> {
        self.vertices.clone()
    }

    /// Three vertex indices per triangle.
    #[wasm_bindgen(getter)]
    pub fn triangles(&self) -> Vec<u32> {
        self.triangles.clone()
    }

    /// One value per triangle.
    #[wasm_bindgen(getter)]
    pub fn pressure(&self) -> Vec<f64> {
        self.pressure.clone()
    }

    /// Largest neighbour jump relative to the pressure range.
    #[wasm_bindgen(getter)]
    pub fn oscillation(&self) -> f64 {
        self.oscillation
    }

    #[wasm_bindgen(getter)]
    pub fn time(&self) -> f64 {
        self.time
    }
}

impl PressureField {
    fn new(mesh: &Mesh, p: Vec<f64>, oscillation: f64, time: f64) -> Self {
        PressureField {
            vertices: (0..mesh.num_vertices())
                .flat_map(|v| mesh.vertex(v).to_vec())
                .collect(),
            triangles: mesh.cells().flatten().map(|&v| v as u32).collect(),
            pressure: p,
            oscillation,
            time,
        }
    }
}

fn check(n: usize, delta: f64) -> Result<(), String> {
    if n == 0 || n > MAX_N {
        return Err(format!("resolution must lie in 1..={MAX_N}, got {n}"));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(format!("delta must be finite and >= 0, got {delta}"));
    }
    Ok(())
}

pub fn manufactured_field(n: usize, delta: f64) -> Result<PressureField, String> {
    check(n, delta)?;
    let run = manufactured_run(2, n, delta, DT_PER_H / n as f64, CONVERGENCE_T, None)
        .map_err(|e| e.to_string())?;
    let mesh = unit_square_mesh(n).map_err(|e| e.to_string())?;
    Ok(PressureField::new(
        &mesh,
        run.final_state.p,
        run.oscillation,
        run.final_state.t,
    ))
}

pub fn cantilever_field(n: usize, delta: f64) -> Result<PressureField, String> {
    use porofem::benchmarks::cantilever::{DT, T_FINAL};
    check(n, delta)?;
    let run = cantilever_run(n, delta, DT, T_FINAL, None).map_err(|e| e.to_string())?;
    let mesh = unit_square_mesh(n).map_err(|e| e.to_string())?;
    Ok(PressureField::new(
        &mesh,
        run.final_state.p,
        run.oscillation,
        run.final_state.t,
    ))
}

/// Simulated and analytic normalized radial displacement.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct CompressionCurve {
    times: Vec<f64>,
    simulated: Vec<f64>,
    analytic: Vec<f64>,
    rmse: f64,
    cells: usize,
}

#[wasm_bindgen]
impl CompressionCurve {
    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn simulated(&self) -> Vec<f64> {
        self.simulated.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn analytic(&self) -> Vec<f64> {
        self.analytic.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn rmse(&self) -> f64 {
        self.rmse
    }

    #[wasm_bindgen(getter)]
    pub fn cells(&self) -> usize {
        self.cells
    }
}

pub fn compression_curve(rings: usize, delta: f64) -> Result<CompressionCurve, String> {
    if !(1..=unconfined::N_RADIAL).contains(&rings) {
        return Err(format!(
            "rings must lie in 1..={}, got {rings}",
            unconfined::N_RADIAL
        ));
    }
    check(1, delta)?;
    let layers = (rings * unconfined::N_AXIAL).div_ceil(unconfined::N_RADIAL);
    let run = unconfined_run(
        rings,
        layers,
        delta,
        unconfined::DT,
        unconfined::T_FINAL,
        None,
    )
    .map_err(|e| e.to_string())?;
    let model = armstrong_reference().map_err(|e| e.to_string())?;
    // denser analytic curve for plotting
    let samples = 400;
    let times: Vec<f64> = (0..=samples)
        .map(|i| unconfined::T_FINAL * i as f64 / samples as f64)
        .collect();
    let analytic = times
        .iter()
        .map(|&t| model.radial_displacement(t))
        .collect();
    Ok(CompressionCurve {
        simulated: run
            .times
            .iter()
            .zip(&run.simulated)
            .flat_map(|(t, u)| [*t, *u])
            .collect(),
        times,
        analytic,
        rmse: run.rmse,
        cells: run.num_cells,
    })
}

/// Pressure of the manufactured solution at `t = 0.25` on an `n x n` mesh.
#[wasm_bindgen(js_name = manufacturedPressure)]
pub fn manufactured_pressure(n: usize, delta: f64) -> Result<PressureField, JsError> {
    manufactured_field(n, delta).map_err(|e| JsError::new(&e))
}

/// Pressure of the locking-prone cantilever after five steps.
#[wasm_bindgen(js_name = cantileverPressure)]
pub fn cantilever_pressure(n: usize, delta: f64) -> Result<PressureField, JsError> {
    cantilever_field(n, delta).map_err(|e| JsError::new(&e))
}

/// Radial displacement of the compressed cylinder; `simulated` holds
/// `(t, u/a)` pairs, `analytic` matches `times`.
#[wasm_bindgen(js_name = compressionCurve)]
pub fn compression_curve_js(rings: usize, delta: f64) -> Result<CompressionCurve, JsError> {
    compression_curve(rings, delta).map_err(|e| JsError::new(&e))
}
