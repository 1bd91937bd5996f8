//! Units, constants, and the constant-force law tying a detector's mass to
//! its proper acceleration.
//!
//! Units have c = 1 and Boltzmann's constant = 1. The defaults are reduced
//! units with ħ = 1 and f = 1; every formula downstream is homogeneous in
//! these so dimensionless tests stay meaningful. All types validate on
//! construction and are immutable afterwards.

use serde::Serialize;

use crate::error::{require_finite, require_positive, Error, Result};

/// How outputs are labelled and how the force constant is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Generic accelerated detector driven by an external force f.
    Unruh,
    /// Horizon identification: f = 1/(4G).
    BlackHole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    hbar: f64,
    g: Option<f64>,
}

impl Constants {
    pub fn new(hbar: f64) -> Result<Self> {
        Ok(Self { hbar: require_positive("hbar", hbar)?, g: None })
    }

    /// Constants with Newton's constant set, which activates black-hole mode.
    pub fn black_hole(hbar: f64, g: f64) -> Result<Self> {
        Ok(Self { hbar: require_positive("hbar", hbar)?, g: Some(require_positive("G", g)?) })
    }

    /// ħ = 1, no gravitational constant.
    pub fn reduced() -> Self {
        Self { hbar: 1.0, g: None }
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn g(&self) -> Option<f64> {
        self.g
    }

    pub fn mode(&self) -> Mode {
        if self.g.is_some() {
            Mode::BlackHole
        } else {
            Mode::Unruh
        }
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::reduced()
    }
}

/// The constant force f = m·a.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForceLaw {
    f: f64,
}

impl ForceLaw {
    pub fn new(f: f64) -> Result<Self> {
        Ok(Self { f: require_positive("f", f)? })
    }

    /// f = 1/(4G), the surface-gravity identification. Needs black-hole constants.
    pub fn black_hole(c: &Constants) -> Result<Self> {
        match c.g() {
            Some(g) => Self::new(0.25 / g),
            None => Err(Error::Config("black-hole force law requires Newton's constant G".into())),
        }
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn acceleration(&self, m: f64) -> Result<f64> {
        force_law(m, self.f)
    }

    pub fn mass(&self, a: f64) -> Result<f64> {
        force_law(a, self.f)
    }
}

impl Default for ForceLaw {
    fn default() -> Self {
        Self { f: 1.0 }
    }
}

/// Proper acceleration a = f/m of a detector of mass `m` under force `f`.
///
/// The relation is symmetric, so `force_law(a, f)` returns the mass.
pub fn force_law(m: f64, f: f64) -> Result<f64> {
    let m = require_positive("mass", m)?;
    let f = require_positive("force f", f)?;
    Ok(f / m)
}

/// Mass change δm = −m·δa/a demanded by energy conservation.
pub fn consistent_dm(m: f64, a: f64, da: f64) -> Result<f64> {
    let m = require_positive("mass", m)?;
    let a = require_positive("acceleration", a)?;
    let da = require_finite("da", da)?;
    Ok(-m * da / a)
}

/// A detector on a single hyperbolic branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorState {
    pub m: f64,
    pub a: f64,
    pub b: f64,
    pub tau: f64,
}

impl DetectorState {
    pub fn new(law: &ForceLaw, a: f64, b: f64, tau: f64) -> Result<Self> {
        let m = law.mass(a)?;
        Ok(Self { m, a, b: require_positive("packet width b", b)?, tau: require_finite("tau", tau)? })
    }

    /// Classical position z = cosh(aτ)/a; never below 1/a.
    pub fn classical_position(&self) -> f64 {
        (self.a * self.tau).cosh() / self.a
    }
}

/// A transition (a₁, m₁) → (a₂, m₂) observed over a window of length `window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionSpec {
    a1: f64,
    m1: f64,
    a2: f64,
    m2: f64,
    window: f64,
    coupling: f64,
}

impl TransitionSpec {
    pub fn new(a1: f64, m1: f64, a2: f64, m2: f64, window: f64, coupling: f64) -> Result<Self> {
        let spec = Self {
            a1: require_positive("a1", a1)?,
            m1: require_positive("m1", m1)?,
            a2: require_positive("a2", a2)?,
            m2: require_positive("m2", m2)?,
            window: require_positive("window L", window)?,
            coupling: require_positive("coupling Q", coupling)?,
        };
        if spec.dm() * spec.da() > 0.0 {
            return Err(Error::Domain(format!(
                "mass and acceleration must change in opposite directions (da={}, dm={})",
                spec.da(),
                spec.dm()
            )));
        }
        Ok(spec)
    }

    /// Branch pair centred on `a_mid`, split by `da`, with both masses on the force law.
    pub fn on_force_law(law: &ForceLaw, a_mid: f64, da: f64, window: f64, coupling: f64) -> Result<Self> {
        let a_mid = require_positive("a_mid", a_mid)?;
        let da = require_finite("da", da)?;
        let a1 = a_mid - 0.5 * da;
        let a2 = a_mid + 0.5 * da;
        if a1 <= 0.0 || a2 <= 0.0 {
            return Err(Error::Domain(format!(
                "|da|={} too large for a_mid={a_mid}: a branch acceleration is not positive",
                da.abs()
            )));
        }
        Self::new(a1, law.mass(a1)?, a2, law.mass(a2)?, window, coupling)
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn a2(&self) -> f64 {
        self.a2
    }
    pub fn m1(&self) -> f64 {
        self.m1
    }
    pub fn m2(&self) -> f64 {
        self.m2
    }
    pub fn window(&self) -> f64 {
        self.window
    }
    pub fn coupling(&self) -> f64 {
        self.coupling
    }
    pub fn da(&self) -> f64 {
        self.a2 - self.a1
    }
    pub fn dm(&self) -> f64 {
        self.m2 - self.m1
    }
    pub fn a_mid(&self) -> f64 {
        0.5 * (self.a1 + self.a2)
    }
    pub fn m_mid(&self) -> f64 {
        0.5 * (self.m1 + self.m2)
    }

    /// Same window and coupling with the roles of the two branches swapped.
    pub fn reversed(&self) -> Self {
        Self { a1: self.a2, m1: self.m2, a2: self.a1, m2: self.m1, ..*self }
    }

    pub fn with_window(&self, window: f64) -> Result<Self> {
        Ok(Self { window: require_positive("window L", window)?, ..*self })
    }
}
