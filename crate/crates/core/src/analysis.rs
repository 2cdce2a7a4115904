//! Error norms against analytic solutions, time aggregates, convergence
//! tables and pressure-oscillation measures.

use std::path::Path;

use crate::assembly::jump_weight;
use crate::error::{Error, Result};
use crate::fespace::{cell_gradients, eval_p1, map_point, ScalarField, VectorField};
use crate::mesh::Mesh;
use crate::quadrature::simplex_rule;
use crate::solver::State;

/// Degree of the quadrature used for error norms.
pub const NORM_DEGREE: usize = 4;

/// Exact fields of a benchmark. `u` and `z` need Jacobians for the H1 and
/// divergence errors.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub u: VectorField,
    pub z: VectorField,
    pub p: ScalarField,
}

/// Errors of one state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepErrors {
    pub t: f64,
    /// Full H1 norm of `u - u_h`.
    pub u_h1: f64,
    pub z_l2: f64,
    /// L2 norm of `div(z - z_h)`.
    pub z_div: f64,
    /// `sqrt(z_l2^2 + z_div^2)`.
    pub z_hdiv: f64,
    pub p_l2: f64,
    /// `|p_h - Pi_0 p|_J` with the cell averages of the exact pressure.
    pub p_jump: f64,
}

pub fn error_norms(
    mesh: &Mesh,
    state: &State,
    exact: &ExactSolution,
    delta: f64,
) -> Result<StepErrors> {
    if !exact.u.has_jacobian() || !exact.z.has_jacobian() {
        return Err(Error::invalid(
            "exact displacement and flux need Jacobians for H1 and Hdiv errors",
        ));
    }
    let d = mesh.dim();
    let t = state.t;
    let rule = simplex_rule(d, NORM_DEGREE)?;
    let scale = 1.0 / rule.measure();
    let bary: Vec<Vec<f64>> = (0..rule.len()).map(|q| rule.barycentric(q)).collect();

    let (mut u_l2, mut u_semi, mut z_l2, mut z_div, mut p_l2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut p_avg = vec![0.0; mesh.num_cells()];
    for c in 0..mesh.num_cells() {
        let pts = mesh.cell_points(c);
        let vol = mesh.cell_volume(c);
        let g = cell_gradients(mesh, c)?;
        // constant discrete gradients on the cell
        let mut grad_u = [[0.0; 3]; 3];
        let mut div_z = 0.0;
        for (a, &v) in mesh.cell(c).iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    grad_u[i][j] += state.u[v * d + i] * g[a][j];
                }
                div_z += state.z[v * d + i] * g[a][i];
            }
        }
        for (b, &w) in bary.iter().zip(&rule.weights) {
            let x = map_point(&pts, b);
            let jw = w * scale * vol;
            let ue = exact.u.eval(&x, t);
            let uh = eval_p1(mesh, &state.u, c, b);
            let ju = exact.u.jacobian(&x, t).expect("checked");
            let ze = exact.z.eval(&x, t);
            let zh = eval_p1(mesh, &state.z, c, b);
            let jz = exact.z.jacobian(&x, t).expect("checked");
            let pe = exact.p.eval(&x, t);
            let mut du = 0.0;
            let mut dz = 0.0;
            let mut dg = 0.0;
            let mut dive = 0.0;
            for i in 0..d {
                du += (ue[i] - uh[i]).powi(2);
                dz += (ze[i] - zh[i]).powi(2);
                dive += jz[i][i];
                for j in 0..d {
                    dg += (ju[i][j] - grad_u[i][j]).powi(2);
                }
            }
            u_l2 += jw * du;
            u_semi += jw * dg;
            z_l2 += jw * dz;
            z_div += jw * (dive - div_z).powi(2);
            p_l2 += jw * (pe - state.p[c]).powi(2);
            p_avg[c] += jw * pe / vol;
        }
    }
    let diff: Vec<f64> = state.p.iter().zip(&p_avg).map(|(a, b)| a - b).collect();
    let z_l2 = z_l2.sqrt();
    let z_div = z_div.sqrt();
    Ok(StepErrors {
        t,
        u_h1: (u_l2 + u_semi).sqrt(),
        z_l2,
        z_div,
        z_hdiv: z_l2.hypot(z_div),
        p_l2: p_l2.sqrt(),
        p_jump: jump_seminorm(mesh, delta, &diff),
    })
}

/// `|p|_J = sqrt(J(p, p))`.
pub fn jump_seminorm(mesh: &Mesh, delta: f64, p: &[f64]) -> f64 {
    mesh.interior_facets()
        .map(|(fi, f)| {
            let jump = p[f.inner] - p[f.outer.expect("interior facet")];
            jump_weight(mesh, fi, delta) * jump * jump
        })
        .sum::<f64>()
        .sqrt()
}

/// Time aggregates of a series sampled at `t_1 .. t_N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAggregate {
    /// `max_n e_n`
    pub linf: f64,
    /// `sqrt(sum_n dt e_n^2)`
    pub l2: f64,
}

pub fn aggregate_in_time(series: &[f64], dt: f64) -> Result<TimeAggregate> {
    if series.is_empty() {
        return Err(Error::invalid("cannot aggregate an empty series"));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    Ok(TimeAggregate {
        linf: series.iter().copied().fold(0.0, f64::max),
        l2: (dt * series.iter().map(|v| v * v).sum::<f64>()).sqrt(),
    })
}

/// Per-step errors of a run plus the aggregates used in convergence tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub dt: f64,
    /// Errors at `t_1 .. t_N` (the initial state is excluded).
    pub steps: Vec<StepErrors>,
}

/// Aggregates of an [`ErrorReport`], one per table column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorAggregates {
    pub u_h1_linf: f64,
    pub z_l2_l2: f64,
    pub z_div_l2: f64,
    pub z_hdiv_l2: f64,
    pub p_l2_linf: f64,
    pub p_l2_l2: f64,
    pub p_jump_linf: f64,
}

impl ErrorAggregates {
    pub fn columns(&self) -> [f64; 5] {
        [
            self.u_h1_linf,
            self.z_l2_l2,
            self.z_div_l2,
            self.z_hdiv_l2,
            self.p_l2_linf,
        ]
    }
}

impl ErrorReport {
    pub fn aggregates(&self) -> Result<ErrorAggregates> {
        let col = |f: fn(&StepErrors) -> f64| -> Result<TimeAggregate> {
            let v: Vec<f64> = self.steps.iter().map(f).collect();
            aggregate_in_time(&v, self.dt)
        };
        Ok(ErrorAggregates {
            u_h1_linf: col(|s| s.u_h1)?.linf,
            z_l2_l2: col(|s| s.z_l2)?.l2,
            z_div_l2: col(|s| s.z_div)?.l2,
            z_hdiv_l2: col(|s| s.z_hdiv)?.l2,
            p_l2_linf: col(|s| s.p_l2)?.linf,
            p_l2_l2: col(|s| s.p_l2)?.l2,
            p_jump_linf: col(|s| s.p_jump)?.linf,
        })
    }
}

/// Observed order between consecutive refinements; `+inf` when the finer
/// error is exactly zero.
pub fn convergence_rate(h: (f64, f64), e: (f64, f64)) -> f64 {
    if e.1 == 0.0 {
        return f64::INFINITY;
    }
    (e.0 / e.1).ln() / (h.0 / h.1).ln()
}

pub const ERROR_COLUMNS: [&str; 5] = [
    "err_u_H1",
    "err_z_L2",
    "err_z_div",
    "err_z_Hdiv",
    "err_p_L2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub dt: f64,
    pub errors: [f64; 5],
}

/// Errors per refinement level, columns as in [`ERROR_COLUMNS`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn push(&mut self, row: ConvergenceRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if !(row.h < last.h) {
                return Err(Error::invalid("mesh size must decrease down the table"));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    /// `rates()[i][k]`: rate of column `k` between rows `i` and `i + 1`.
    pub fn rates(&self) -> Result<Vec<[f64; 5]>> {
        if self.rows.len() < 2 {
            return Err(Error::invalid("need at least two rows for rates"));
        }
        Ok(self
            .rows
            .windows(2)
            .map(|w| {
                std::array::from_fn(|k| {
                    convergence_rate((w[0].h, w[1].h), (w[0].errors[k], w[1].errors[k]))
                })
            })
            .collect())
    }

    /// Smallest rate per column.
    pub fn min_rates(&self) -> Result<[f64; 5]> {
        let r = self.rates()?;
        Ok(std::array::from_fn(|k| {
            r.iter().map(|row| row[k]).fold(f64::INFINITY, f64::min)
        }))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["h".to_string(), "dt".to_string()];
        header.extend(ERROR_COLUMNS.iter().map(|c| c.to_string()));
        header.extend(ERROR_COLUMNS.iter().map(|c| format!("rate_{}", &c[4..])));
        w.write_record(&header).map_err(csv_err)?;
        let rates = if self.rows.len() >= 2 {
            self.rates()?
        } else {
            Vec::new()
        };
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec = vec![fmt(row.h), fmt(row.dt)];
            rec.extend(row.errors.iter().map(|&e| fmt(e)));
            match i.checked_sub(1).and_then(|k| rates.get(k)) {
                Some(r) => rec.extend(r.iter().map(|&v| fmt(v))),
                None => rec.extend(std::iter::repeat_n(String::new(), 5)),
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let headers = r.headers().map_err(csv_err)?.clone();
        if headers.len() < 7 || &headers[0] != "h" || &headers[1] != "dt" {
            return Err(Error::Parse {
                line: 1,
                msg: "unexpected convergence table header".into(),
            });
        }
        let mut table = ConvergenceTable::default();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let num = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Parse {
                        line: i + 2,
                        msg: format!("bad number in column {k}"),
                    })
            };
            let errors = [num(2)?, num(3)?, num(4)?, num(5)?, num(6)?];
            table
                .push(ConvergenceRow {
                    h: num(0)?,
                    dt: num(1)?,
                    errors,
                })
                .map_err(|e| Error::Parse {
                    line: i + 2,
                    msg: e.to_string(),
                })?;
        }
        Ok(table)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_csv(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

/// 17 significant digits.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Largest interior pressure jump relative to the pressure range.
pub fn oscillation_indicator(mesh: &Mesh, p: &[f64]) -> f64 {
    let (lo, hi) = p
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    if p.is_empty() {
        return 0.0;
    }
    let jump = mesh
        .interior_facets()
        .map(|(_, f)| (p[f.inner] - p[f.outer.expect("interior facet")]).abs())
        .fold(0.0, f64::max);
    jump / (hi - lo + f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_jump_stabilization;
    use crate::fespace::{interpolate_p1, DofLayout};
    use crate::mesh::unit_square_mesh;
    use std::f64::consts::PI;

    fn zero_exact() -> ExactSolution {
        ExactSolution {
            u: VectorField::new(|_, _| [0.0; 3]).with_jacobian(|_, _| [[0.0; 3]; 3]),
            z: VectorField::new(|_, _| [0.0; 3]).with_jacobian(|_, _| [[0.0; 3]; 3]),
            p: ScalarField::zero(),
        }
    }

    #[test]
    fn interpolated_linear_fields_have_zero_error() {
        let mesh = unit_square_mesh(4).unwrap();
        let lin = VectorField::new(|x, _| [x[0] - 2.0 * x[1], 3.0 * x[0], 0.0])
            .with_jacobian(|_, _| [[1.0, -2.0, 0.0], [3.0, 0.0, 0.0], [0.0; 3]]);
        let exact = ExactSolution {
            u: lin.clone(),
            z: lin.clone(),
            p: ScalarField::constant(1.5),
        };
        let layout = DofLayout::new(&mesh, false);
        let mut s = State::zero(&layout, 0.0);
        s.u = interpolate_p1(&mesh, &lin, 0.0);
        s.z = s.u.clone();
        s.p = vec![1.5; mesh.num_cells()];
        let e = error_norms(&mesh, &s, &exact, 1.0).unwrap();
        assert!(e.u_h1 < 1e-12 && e.z_hdiv < 1e-12 && e.p_l2 < 1e-12 && e.p_jump < 1e-12);
    }

    #[test]
    fn zero_discrete_state_gives_exact_norm() {
        // u = (sin(pi x) sin(pi y), 0): ||u||^2 = 1/4, |u|_1^2 = pi^2/2
        let mesh = unit_square_mesh(16).unwrap();
        let exact = ExactSolution {
            u: VectorField::new(|x, _| [(PI * x[0]).sin() * (PI * x[1]).sin(), 0.0, 0.0])
                .with_jacobian(|x, _| {
                    [
                        [
                            PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
                            PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
                            0.0,
                        ],
                        [0.0; 3],
                        [0.0; 3],
                    ]
                }),
            ..zero_exact()
        };
        let s = State::zero(&DofLayout::new(&mesh, false), 0.0);
        let e = error_norms(&mesh, &s, &exact, 1.0).unwrap();
        let expect = (0.25 + PI * PI / 2.0).sqrt();
        assert!(
            (e.u_h1 - expect).abs() < 1e-6 * expect,
            "{} vs {expect}",
            e.u_h1
        );
    }

    #[test]
    fn missing_jacobian_rejected() {
        let mesh = unit_square_mesh(1).unwrap();
        let exact = ExactSolution {
            u: VectorField::new(|_, _| [0.0; 3]),
            ..zero_exact()
        };
        let s = State::zero(&DofLayout::new(&mesh, false), 0.0);
        assert!(error_norms(&mesh, &s, &exact, 1.0).is_err());
    }

    #[test]
    fn centroid_pressure_error_is_first_order() {
        let p = ScalarField::new(|x, _| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
        let exact = ExactSolution {
            p: p.clone(),
            ..zero_exact()
        };
        let err = |n: usize| {
            let mesh = unit_square_mesh(n).unwrap();
            let mut s = State::zero(&DofLayout::new(&mesh, false), 0.0);
            s.p = (0..mesh.num_cells())
                .map(|c| p.eval(&mesh.cell_centroid(c), 0.0))
                .collect();
            error_norms(&mesh, &s, &exact, 1.0).unwrap().p_l2
        };
        let (a, b, c) = (err(8), err(16), err(32));
        assert!(
            (a / b - 2.0).abs() < 0.2 && (b / c - 2.0).abs() < 0.1,
            "{a} {b} {c}"
        );
    }

    #[test]
    fn jump_seminorm_examples() {
        let mesh = unit_square_mesh(1).unwrap();
        assert_eq!(jump_seminorm(&mesh, 1.0, &[3.0, 3.0]), 0.0);
        assert!((jump_seminorm(&mesh, 1.0, &[1.0, 0.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert!((jump_seminorm(&mesh, 1.0, &[-3.0, 0.0]) - 3.0 * 2f64.sqrt()).abs() < 1e-14);

        let mesh = unit_square_mesh(5).unwrap();
        let j = assemble_jump_stabilization(&mesh, 0.4).unwrap();
        let p: Vec<f64> = (0..mesh.num_cells())
            .map(|c| ((c * 7919) % 13) as f64 - 6.0)
            .collect();
        let a = jump_seminorm(&mesh, 0.4, &p).powi(2);
        assert!((a - j.bilinear(&p, &p)).abs() <= 1e-12 * a);
    }

    #[test]
    fn time_aggregates() {
        let a = aggregate_in_time(&[3.0, 4.0], 1.0).unwrap();
        assert_eq!((a.linf, a.l2), (4.0, 5.0));
        let a = aggregate_in_time(&[2.0; 16], 0.25).unwrap();
        assert_eq!(a.linf, 2.0);
        assert!((a.l2 - 2.0 * 4f64.sqrt()).abs() < 1e-15);
        let a = aggregate_in_time(&[7.0], 0.01).unwrap();
        assert!((a.l2 - 0.7).abs() < 1e-15);
        assert!(aggregate_in_time(&[], 1.0).is_err());
    }

    #[test]
    fn rates() {
        assert!((convergence_rate((0.1, 0.05), (0.1, 0.05)) - 1.0).abs() < 1e-12);
        assert!((convergence_rate((0.2, 0.1), (0.04, 0.01)) - 2.0).abs() < 1e-12);
        assert_eq!(convergence_rate((0.2, 0.1), (0.04, 0.0)), f64::INFINITY);
        let mut t = ConvergenceTable::default();
        for h in [0.4, 0.2, 0.1] {
            t.push(ConvergenceRow {
                h,
                dt: h / 4.0,
                errors: [3.0 * h; 5],
            })
            .unwrap();
        }
        for r in t.rates().unwrap() {
            assert!(r.iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
        assert!(t
            .push(ConvergenceRow {
                h: 0.2,
                dt: 0.1,
                errors: [1.0; 5]
            })
            .is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut t = ConvergenceTable::default();
        t.push(ConvergenceRow {
            h: 0.125,
            dt: 1.0 / 32.0,
            errors: [0.1, 0.2, 0.3, 1.0 / 3.0, 0.5],
        })
        .unwrap();
        t.push(ConvergenceRow {
            h: 0.0625,
            dt: 1.0 / 64.0,
            errors: [0.05, 0.1, 0.15, 1.0 / 6.0, 0.25],
        })
        .unwrap();
        let text = t.to_csv().unwrap();
        assert!(text.starts_with("h,dt,err_u_H1,err_z_L2,err_z_div,err_z_Hdiv,err_p_L2,rate_u_H1"));
        assert_eq!(ConvergenceTable::from_csv(&text).unwrap(), t);
        assert!(ConvergenceTable::from_csv("x,y\n1,2\n").is_err());
    }

    #[test]
    fn oscillation_indicator_examples() {
        let mesh = unit_square_mesh(16).unwrap();
        assert_eq!(
            oscillation_indicator(&mesh, &vec![2.0; mesh.num_cells()]),
            0.0
        );
        // cells 2k and 2k+1 share the diagonal of one square
        let checker: Vec<f64> = (0..mesh.num_cells())
            .map(|c| if c % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        assert!((oscillation_indicator(&mesh, &checker) - 1.0).abs() < 1e-12);
        let lin: Vec<f64> = (0..mesh.num_cells())
            .map(|c| mesh.cell_centroid(c)[0])
            .collect();
        assert!(oscillation_indicator(&mesh, &lin) <= 2.0 / 16.0);
    }
}
