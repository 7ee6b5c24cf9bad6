//! Radiative energy balance on a mesh: insolation, scattered visible and
//! infrared fluxes, equilibrium temperatures, and time-dependent runs with
//! one-dimensional subsurface conduction under every face.

mod analytic;
mod conduction;
mod flux;
mod simulate;
mod trajectory;

pub use analytic::{analytic_cap_field, analytic_cap_temperature, cap_b, cap_view_fraction};
pub use conduction::{cn_step, cn_step_insulated, LayerGrid};
pub use flux::{direct_flux, equilibrium, EquilibriumReport, EQ_MAX_ITER, EQ_TOL};
pub use simulate::{simulate, InitialTemperature, SimConfig, SimReport, SimState, Simulation, Snapshot};
pub use trajectory::{circular_sun_trajectory, SunSample, SunTrajectory};

use std::io::{self, Write};

use thiserror::Error;

use crate::linalg::LinalgError;

/// Stefan-Boltzmann constant, W m^-2 K^-4.
pub const SIGMA_SB: f64 = 5.670374419e-8;

#[derive(Debug, Error)]
pub enum ThermalError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("nonpositive temperature {value} K at layer {layer}")]
    NonPositiveTemperature { layer: usize, value: f64 },
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Albedo {
    Uniform(f64),
    PerFace(Vec<f64>),
}

impl Albedo {
    pub fn at(&self, face: usize) -> f64 {
        match self {
            Albedo::Uniform(a) => *a,
            Albedo::PerFace(v) => v[face],
        }
    }

    pub fn uniform(&self) -> Option<f64> {
        match self {
            Albedo::Uniform(a) => Some(*a),
            Albedo::PerFace(_) => None,
        }
    }
}

/// Material and illumination parameters, SI units except the sun distance
/// (AU).
#[derive(Debug, Clone, PartialEq)]
pub struct PhysParams {
    pub albedo: Albedo,
    pub emissivity: f64,
    /// Solar constant at 1 AU, W/m^2.
    pub solar_constant: f64,
    pub sun_distance: f64,
    /// Heat flux entering the bottom of every subsurface column, W/m^2.
    pub geothermal_flux: f64,
    /// Volumetric heat capacity, J m^-3 K^-1.
    pub rho_c: f64,
    /// Thermal conductivity, W m^-1 K^-1.
    pub conductivity: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            albedo: Albedo::Uniform(0.3),
            emissivity: 0.99,
            solar_constant: 1361.0,
            sun_distance: 1.0,
            geothermal_flux: 0.0,
            rho_c: 1.2e6,
            conductivity: 2.5e-3,
        }
    }
}

impl PhysParams {
    /// Checks ranges, and that a per-face albedo has `n` entries.
    pub fn validate(&self, n: usize) -> Result<(), ThermalError> {
        let bad = |msg: &str| Err(ThermalError::InvalidParams(msg.into()));
        match &self.albedo {
            Albedo::Uniform(a) if !(0.0..1.0).contains(a) => return bad("albedo must lie in [0, 1)"),
            Albedo::PerFace(v) => {
                if v.len() != n {
                    return Err(ThermalError::DimensionMismatch {
                        expected: n,
                        found: v.len(),
                    });
                }
                if v.iter().any(|a| !(0.0..1.0).contains(a)) {
                    return bad("albedo must lie in [0, 1)");
                }
            }
            _ => {}
        }
        if !(self.emissivity > 0.0 && self.emissivity <= 1.0) {
            return bad("emissivity must lie in (0, 1]");
        }
        if !(self.solar_constant >= 0.0 && self.solar_constant.is_finite()) {
            return bad("solar constant must be nonnegative");
        }
        if !(self.sun_distance > 0.0 && self.sun_distance.is_finite()) {
            return bad("sun distance must be positive");
        }
        if !(self.geothermal_flux >= 0.0 && self.geothermal_flux.is_finite()) {
            return bad("geothermal flux must be nonnegative");
        }
        if !(self.rho_c > 0.0 && self.rho_c.is_finite()) {
            return bad("volumetric heat capacity must be positive");
        }
        if !(self.conductivity > 0.0 && self.conductivity.is_finite()) {
            return bad("conductivity must be positive");
        }
        Ok(())
    }

    pub fn albedo_vec(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.albedo.at(i)).collect()
    }
}

/// Per-face fluxes (W/m^2) and surface temperatures (K).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FluxState {
    pub q_direct: Vec<f64>,
    pub q_refl: Vec<f64>,
    pub q_ir: Vec<f64>,
    pub q_abs: Vec<f64>,
    pub q_rad: Vec<f64>,
    pub t: Vec<f64>,
}

impl FluxState {
    pub fn zeros(n: usize) -> Self {
        Self {
            q_direct: vec![0.0; n],
            q_refl: vec![0.0; n],
            q_ir: vec![0.0; n],
            q_abs: vec![0.0; n],
            q_rad: vec![0.0; n],
            t: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Writes `face,Q_direct,Q_refl,Q_IR,Q_abs,T` records.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "face,Q_direct,Q_refl,Q_IR,Q_abs,T")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                i, self.q_direct[i], self.q_refl[i], self.q_ir[i], self.q_abs[i], self.t[i]
            )?;
        }
        Ok(())
    }
}

pub(crate) fn clamp_nonnegative(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}
