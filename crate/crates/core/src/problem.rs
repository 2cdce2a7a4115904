//! Problem definitions: mesh, coefficients, boundary data, initial data and
//! time interval.
//!
//! Boundary conventions per tagged boundary region:
//!
//! * mixture: displacement components listed in a [`DisplacementBc`] are
//!   essential; every other component carries the traction from
//!   [`LoadData::tractions`] (zero when absent)
//! * fluid: regions in a [`FluxBc`] get `z . n = q_D`; every other region is
//!   a pressure boundary with `p_D` from [`LoadData::pressures`] (zero when absent)

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::assembly::{LoadData, MaterialParams};
use crate::error::{Error, Result};
use crate::fespace::{NormalFlux, ScalarField, VectorField};
use crate::mesh::Mesh;

/// Essential displacement on the listed components of the tagged regions.
#[derive(Debug, Clone)]
pub struct DisplacementBc {
    pub tags: Vec<u32>,
    pub components: Vec<usize>,
    pub value: VectorField,
}

impl DisplacementBc {
    /// All components prescribed.
    pub fn full(dim: usize, tags: Vec<u32>, value: VectorField) -> Self {
        DisplacementBc {
            tags,
            components: (0..dim).collect(),
            value,
        }
    }
}

/// Single displacement component fixed at one vertex (removes rigid modes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pin {
    pub vertex: usize,
    pub component: usize,
    pub value: f64,
}

/// Essential normal flux on the tagged regions.
#[derive(Debug, Clone)]
pub struct FluxBc {
    pub tags: Vec<u32>,
    pub value: NormalFlux,
}

/// How the state at `t = 0` is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialLoading {
    /// Elliptic projection of the initial displacement, L2 projection of the
    /// initial pressure.
    #[default]
    Projected,
    /// Instantaneous (undrained) response to the boundary data at `t = 0`:
    /// zero flux, no fluid exchange, starting from the projected initial data.
    Undrained,
}

#[derive(Debug, Clone)]
pub struct ProblemDefinition {
    pub name: String,
    pub mesh: Arc<Mesh>,
    pub params: MaterialParams,
    pub loads: LoadData,
    pub displacement: Vec<DisplacementBc>,
    pub pins: Vec<Pin>,
    pub flux: Vec<FluxBc>,
    pub initial_u: VectorField,
    pub initial_z: VectorField,
    pub initial_p: ScalarField,
    pub initial_loading: InitialLoading,
    /// Zero-mean pressure multiplier; `None` picks it automatically.
    pub mean_pressure: Option<bool>,
    pub dt: f64,
    pub t_final: f64,
}

impl ProblemDefinition {
    /// Problem with zero data, traction-free and pressure-free boundary.
    pub fn new(
        name: impl Into<String>,
        mesh: Arc<Mesh>,
        params: MaterialParams,
        dt: f64,
        t_final: f64,
    ) -> Self {
        ProblemDefinition {
            name: name.into(),
            mesh,
            params,
            loads: LoadData::default(),
            displacement: Vec::new(),
            pins: Vec::new(),
            flux: Vec::new(),
            initial_u: VectorField::zero(),
            initial_z: VectorField::zero(),
            initial_p: ScalarField::zero(),
            initial_loading: InitialLoading::Projected,
            mean_pressure: None,
            dt,
            t_final,
        }
    }

    /// Number of time steps `N` with `t_final = N dt`.
    pub fn num_steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::invalid(format!(
                "T must be >= 0, got {}",
                self.t_final
            )));
        }
        let n = (self.t_final / self.dt).round();
        if (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final.max(self.dt) {
            return Err(Error::invalid(format!(
                "T = {} is not an integer multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(n as usize)
    }

    /// Whether the zero-mean pressure multiplier is used: explicit choice,
    /// otherwise exactly when no boundary region carries a traction or a
    /// pressure condition (constant pressures are then in the kernel).
    pub fn uses_mean_pressure(&self) -> bool {
        if let Some(m) = self.mean_pressure {
            return m;
        }
        let d = self.mesh.dim();
        let full_u: Vec<u32> = self
            .displacement
            .iter()
            .filter(|bc| (0..d).all(|c| bc.components.contains(&c)))
            .flat_map(|bc| bc.tags.iter().copied())
            .collect();
        let flux: Vec<u32> = self
            .flux
            .iter()
            .flat_map(|bc| bc.tags.iter().copied())
            .collect();
        self.mesh
            .boundary_facets()
            .all(|(f, _)| match self.mesh.marker(f) {
                Some(tag) => full_u.contains(&tag) && flux.contains(&tag),
                None => false,
            })
    }

    pub fn validate(&self) -> Result<()> {
        let mesh = &self.mesh;
        let d = mesh.dim();
        self.params.validate(d)?;
        self.num_steps()?;

        let known = |tag: u32, what: &str| -> Result<()> {
            if mesh.has_marker(tag) {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{what} on unknown boundary marker {tag}"
                )))
            }
        };

        // tag -> constrained displacement components
        let mut comps: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for bc in &self.displacement {
            for &c in &bc.components {
                if c >= d {
                    return Err(Error::invalid(format!(
                        "displacement component {c} out of range"
                    )));
                }
            }
            for &t in &bc.tags {
                known(t, "displacement condition")?;
                comps.entry(t).or_default().extend(&bc.components);
            }
        }
        for (tags, _) in &self.loads.tractions {
            for &t in tags {
                known(t, "traction")?;
                if comps
                    .get(&t)
                    .is_some_and(|c| (0..d).all(|k| c.contains(&k)))
                {
                    return Err(Error::invalid(format!(
                        "region {t} has both a full displacement condition and a traction"
                    )));
                }
            }
        }

        let mut fluid: BTreeMap<u32, usize> = BTreeMap::new();
        for bc in &self.flux {
            for &t in &bc.tags {
                known(t, "flux condition")?;
                *fluid.entry(t).or_default() += 1;
            }
        }
        for (tags, _) in &self.loads.pressures {
            for &t in tags {
                known(t, "pressure condition")?;
                *fluid.entry(t).or_default() += 1;
            }
        }
        if let Some((t, _)) = fluid.iter().find(|(_, &n)| n > 1) {
            return Err(Error::invalid(format!(
                "region {t} carries more than one fluid boundary condition"
            )));
        }

        for p in &self.pins {
            if p.vertex >= mesh.num_vertices() || p.component >= d {
                return Err(Error::invalid(format!(
                    "pin on vertex {} component {} out of range",
                    p.vertex, p.component
                )));
            }
        }
        Ok(())
    }
}
