//! Closed-form single-quantum transition weights with recoil, and the
//! associated Unruh and Hawking temperatures.
//!
//! For a transition with acceleration change δa around the midpoint
//! a = (a₁+a₂)/2 the weight is
//!
//! ```text
//! P₂₁ = Q²a²L / (4f|δa|) · σ(δa) / (1 − e^{−x}),   x = 2πf δa / (ħa³)
//! ```
//!
//! which is positive on both branches: emission (δa > 0) keeps the
//! spontaneous n = 0 term, absorption (δa < 0) carries the extra Boltzmann
//! factor. The weight is a first-order rate times a window and is not
//! clamped to one.

use std::f64::consts::PI;

use serde::Serialize;

use crate::detector::{Constants, ForceLaw, Mode, TransitionSpec};
use crate::error::{require_positive, Error, Result, Warning};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Emission,
    Absorption,
}

impl Direction {
    pub fn of(da: f64) -> Option<Self> {
        if da > 0.0 {
            Some(Direction::Emission)
        } else if da < 0.0 {
            Some(Direction::Absorption)
        } else {
            None
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Emission => "emission",
            Direction::Absorption => "absorption",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionResult {
    pub p21: f64,
    /// Boltzmann exponent 2πf|δa|/(ħa³).
    pub x: f64,
    pub direction: Direction,
    /// Q²a²L/(4f|δa|).
    pub prefactor: f64,
    /// Unruh temperature at the midpoint acceleration (Hawking in black-hole mode).
    pub temperature: f64,
    /// Energy of the quantum, ħω = f|δa|/a².
    pub homega: f64,
    #[serde(skip)]
    pub warnings: Vec<Warning>,
}

/// x = 2πf|δa|/(ħa³) at the midpoint acceleration.
pub fn boltzmann_exponent(spec: &TransitionSpec, c: &Constants, law: &ForceLaw) -> f64 {
    let a = spec.a_mid();
    2.0 * PI * law.f() * spec.da().abs() / (c.hbar() * a * a * a)
}

/// Q²a²L/(4f|δa|), the weight carried by each pole of the ladder.
pub fn pole_prefactor(spec: &TransitionSpec, law: &ForceLaw) -> f64 {
    let a = spec.a_mid();
    spec.coupling().powi(2) * a * a * spec.window() / (4.0 * law.f() * spec.da().abs())
}

/// 1/(1 − e^{−x}), stable for x → 0.
pub fn emission_factor(x: f64) -> f64 {
    -1.0 / (-x).exp_m1()
}

/// e^{−x}/(1 − e^{−x}) = 1/(e^x − 1), the Planck occupation.
pub fn planck_occupation(x: f64) -> f64 {
    1.0 / x.exp_m1()
}

pub fn p21_closed_form(spec: &TransitionSpec, c: &Constants, law: &ForceLaw) -> Result<TransitionResult> {
    let direction = Direction::of(spec.da()).ok_or(Error::SpontaneousPole)?;
    let x = boltzmann_exponent(spec, c, law);
    let prefactor = pole_prefactor(spec, law);
    let p21 = prefactor
        * match direction {
            Direction::Emission => emission_factor(x),
            Direction::Absorption => planck_occupation(x),
        };
    let a = spec.a_mid();
    let mut warnings = Vec::new();
    if p21 > 1.0 {
        warnings.push(Warning::PerturbationStrained { p21 });
    }
    Ok(TransitionResult {
        p21,
        x,
        direction,
        prefactor,
        temperature: unruh_temperature(a, c),
        homega: law.f() * spec.da().abs() / (a * a),
        warnings,
    })
}

/// P(emission, |δa|) / P(absorption, |δa|); equals e^x.
pub fn detailed_balance_ratio(spec: &TransitionSpec, c: &Constants, law: &ForceLaw) -> Result<f64> {
    let here = p21_closed_form(spec, c, law)?;
    let there = p21_closed_form(&spec.reversed(), c, law)?;
    Ok(match here.direction {
        Direction::Emission => here.p21 / there.p21,
        Direction::Absorption => there.p21 / here.p21,
    })
}

/// ħa/2π.
pub fn unruh_temperature(a: f64, c: &Constants) -> f64 {
    c.hbar() * a / (2.0 * PI)
}

/// ħ/(8πGm). Defined only in black-hole mode.
pub fn hawking_temperature(m: f64, c: &Constants) -> Result<f64> {
    let m = require_positive("mass", m)?;
    match (c.mode(), c.g()) {
        (Mode::BlackHole, Some(g)) => Ok(c.hbar() / (8.0 * PI * g * m)),
        _ => Err(Error::Config("Hawking temperature requires black-hole mode (set G)".into())),
    }
}
