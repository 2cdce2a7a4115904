//! Analytic radial displacement for unconfined compression of a poroelastic
//! cylinder between frictionless impermeable plates.

use super::bessel::{bessel_j0, bessel_j1, positive_roots};
use crate::assembly::lame_from_young;
use crate::error::{Error, Result};

/// Left-hand side of the characteristic equation
/// `J1(x) - (1 - nu) x J0(x) / (1 - 2 nu) = 0`.
pub fn characteristic(nu: f64, x: f64) -> f64 {
    bessel_j1(x) - (1.0 - nu) * x * bessel_j0(x) / (1.0 - 2.0 * nu)
}

/// First `n` positive roots of the characteristic equation.
pub fn characteristic_roots(nu: f64, n: usize) -> Result<Vec<f64>> {
    if !(0.0..0.5).contains(&nu) {
        return Err(Error::invalid(format!(
            "Poisson ratio must lie in [0, 0.5), got {nu}"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("at least one root requested"));
    }
    Ok(positive_roots(|x| characteristic(nu, x), n))
}

/// Parameters of the analytic solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmstrongModel {
    pub nu: f64,
    /// Young's modulus.
    pub e: f64,
    /// Permeability.
    pub k: f64,
    /// Cylinder radius.
    pub a: f64,
    /// Applied axial strain.
    pub eps0: f64,
    /// Aggregate modulus `lambda + 2 mu_s`.
    pub h_a: f64,
    pub roots: Vec<f64>,
}

/// Series value with truncation information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    /// Normalized radial displacement `u / a` at `r = a`.
    pub value: f64,
    pub terms_used: usize,
    /// Set at `t = 0` when fewer than 50 terms are available.
    pub unconverged: bool,
}

impl ArmstrongModel {
    pub fn new(nu: f64, e: f64, k: f64, a: f64, eps0: f64, n_terms: usize) -> Result<Self> {
        if !(e > 0.0 && k > 0.0 && a > 0.0) {
            return Err(Error::invalid("E, k and a must be positive"));
        }
        let (lambda, mu) = lame_from_young(e, nu);
        Ok(ArmstrongModel {
            nu,
            e,
            k,
            a,
            eps0,
            h_a: lambda + 2.0 * mu,
            roots: characteristic_roots(nu, n_terms)?,
        })
    }

    /// Characteristic diffusion time `a^2 / (H_A k)`.
    pub fn t_g(&self) -> f64 {
        self.a * self.a / (self.h_a * self.k)
    }

    pub fn n_terms(&self) -> usize {
        self.roots.len()
    }

    pub fn evaluate(&self, t: f64) -> Result<SeriesValue> {
        if !(t >= 0.0) {
            return Err(Error::invalid(format!("time must be >= 0, got {t}")));
        }
        let nu = self.nu;
        let rate = self.h_a * self.k / (self.a * self.a);
        let mut sum = 0.0;
        let mut used = 0;
        for &al in &self.roots {
            let a2 = al * al;
            let term = (-a2 * rate * t).exp() / (a2 * (1.0 - nu).powi(2) - (1.0 - 2.0 * nu));
            sum += term;
            used += 1;
            if term.abs() < 1e-14 {
                break;
            }
        }
        Ok(SeriesValue {
            value: self.eps0 * (nu + (1.0 - 2.0 * nu) * (1.0 - nu) * sum),
            terms_used: used,
            unconverged: t == 0.0 && self.roots.len() < 50,
        })
    }

    /// Normalized radial displacement `u / a` at time `t`.
    pub fn radial_displacement(&self, t: f64) -> f64 {
        self.evaluate(t).map_or(f64::NAN, |v| v.value)
    }
}
