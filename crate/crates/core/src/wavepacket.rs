//! Gaussian detector wavepackets on a uniformly accelerated trajectory.
//!
//! Two evaluations are provided: the full packet that starts as a Gaussian of
//! width `b` at τ = 0, and its semiclassical limit (ħ → 0 at fixed `b`). The
//! transition helpers work with the product ψ₂*ψ₁ of the semiclassical packets
//! of two neighbouring branches.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::detector::{Constants, TransitionSpec};
use crate::error::{require_finite, require_positive, Error, Result, Warning};
use crate::quad::Integrator;

/// Wavefunction value at a point.
pub type Amplitude = Complex64;

/// Half-width of the z window used for moments, in packet widths.
const DOMAIN_WIDTHS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketParams {
    pub m: f64,
    pub a: f64,
    pub b: f64,
    pub hbar: f64,
}

impl PacketParams {
    pub fn new(m: f64, a: f64, b: f64, hbar: f64) -> Result<Self> {
        Ok(Self {
            m: require_positive("m", m)?,
            a: require_positive("a", a)?,
            b: require_positive("b", b)?,
            hbar: require_positive("hbar", hbar)?,
        })
    }

    /// β(τ) = −m a / (ħ sinh aτ); infinite at τ = 0.
    pub fn beta(&self, tau: f64) -> f64 {
        -self.m * self.a / (self.hbar * (self.a * tau).sinh())
    }

    /// α(τ) = 2bβ / (1 + 4b⁴β² cosh² aτ)^{1/2}.
    pub fn alpha(&self, tau: f64) -> f64 {
        let beta = self.beta(tau);
        let ch = (self.a * tau).cosh();
        2.0 * self.b * beta / (1.0 + 4.0 * self.b.powi(4) * beta * beta * ch * ch).sqrt()
    }

    /// Centre of both packets, the classical position cosh(aτ)/a.
    pub fn center(&self, tau: f64) -> f64 {
        (self.a * tau).cosh() / self.a
    }

    /// Spatial width of the semiclassical packet, b cosh aτ.
    pub fn semiclassical_width(&self, tau: f64) -> f64 {
        self.b * (self.a * tau).cosh()
    }

    /// Width 1/|α| of the full packet (b at τ = 0).
    pub fn exact_width(&self, tau: f64) -> f64 {
        if tau == 0.0 {
            self.b
        } else {
            1.0 / self.alpha(tau).abs()
        }
    }
}

fn initial_gaussian(p: &PacketParams, z: f64) -> Amplitude {
    let norm = (p.b * PI.sqrt()).powf(-0.5);
    let d = z - 1.0 / p.a;
    Complex64::new(norm * (-d * d / (2.0 * p.b * p.b)).exp(), 0.0)
}

/// Full packet ψ(z, τ) evolved from a width-`b` Gaussian centred at 1/a.
///
/// τ = 0 returns the initial Gaussian directly, where β diverges. Square
/// roots are principal; on each half-line τ > 0 and τ < 0 the arguments stay
/// off the negative real axis so the result is continuous there.
pub fn eval_exact(p: &PacketParams, z: f64, tau: f64) -> Amplitude {
    if tau == 0.0 {
        return initial_gaussian(p, z);
    }
    let (sh, ch) = ((p.a * tau).sinh(), (p.a * tau).cosh());
    let beta = -p.m * p.a / (p.hbar * sh);
    let b2 = p.b * p.b;
    let b4beta2 = 4.0 * b2 * b2 * beta * beta;
    let denom = 1.0 + b4beta2 * ch * ch;
    let alpha2 = 4.0 * b2 * beta * beta / denom;

    let i = Complex64::i();
    let pre =
        (Complex64::new(beta, 0.0) / (i * p.b * PI.sqrt())).sqrt() / (Complex64::new(0.5 / b2, -beta * ch)).sqrt();

    // β[z² cosh + (α²/4b²β²)(cosh/a² − 2z/a − 4z²β²b⁴ cosh)], with α²/4b²β² = 1/denom
    let quad = z * z * ch * (1.0 + b4beta2 * sh * sh) / denom;
    let lin = (ch / (p.a * p.a) - 2.0 * z / p.a) / denom;
    let phase = beta * (quad + lin);

    let d = z - ch / p.a;
    let envelope = -0.5 * alpha2 * d * d;
    pre * Complex64::new(envelope, phase).exp()
}

/// Semiclassical packet: normalisation (b√π cosh aτ)^{−1/2}, phase
/// −(m a z²/ħ) tanh aτ and a Gaussian envelope of width b cosh aτ centred on
/// the classical trajectory.
pub fn eval_semiclassical(p: &PacketParams, z: f64, tau: f64) -> Amplitude {
    Complex64::new(log_semiclassical_modulus(p, z, tau), semiclassical_phase(p, z, tau)).exp()
}

fn log_semiclassical_modulus(p: &PacketParams, z: f64, tau: f64) -> f64 {
    let ch = (p.a * tau).cosh();
    let d = z - ch / p.a;
    let width = p.b * ch;
    -0.5 * (p.b * PI.sqrt() * ch).ln() - d * d / (2.0 * width * width)
}

fn semiclassical_phase(p: &PacketParams, z: f64, tau: f64) -> f64 {
    -p.m * p.a * z * z * (p.a * tau).tanh() / p.hbar
}

fn moment_integrator() -> Integrator {
    Integrator::with_tolerance(1e-10, 1e-300).max_panels(2000)
}

fn window(p: &PacketParams, tau: f64, width: f64) -> (f64, f64) {
    let c = p.center(tau);
    (c - DOMAIN_WIDTHS * width, c + DOMAIN_WIDTHS * width)
}

fn converged(est: &crate::quad::Estimate<f64>, what: &str) -> Result<f64> {
    if est.converged {
        Ok(est.value)
    } else {
        Err(Error::NonConvergence {
            message: format!("{what}: quadrature error {:e} after {} evaluations", est.error, est.evaluations),
            last_values: vec![est.value],
        })
    }
}

/// ∫|ψ|² dz of the full packet over the classical position ± 10 widths.
pub fn norm_exact(p: &PacketParams, tau: f64) -> Result<f64> {
    let width = p.semiclassical_width(tau).max(p.exact_width(tau));
    let (lo, hi) = window(p, tau, width);
    let est = moment_integrator().integrate(|z| eval_exact(p, z, tau).norm_sqr(), lo, hi, &[p.center(tau)]);
    converged(&est, "exact packet normalisation")
}

/// ∫|ψ|² dz of the semiclassical packet.
pub fn norm_semiclassical(p: &PacketParams, tau: f64) -> Result<f64> {
    let (lo, hi) = window(p, tau, p.semiclassical_width(tau));
    let est =
        moment_integrator().integrate(|z| (2.0 * log_semiclassical_modulus(p, z, tau)).exp(), lo, hi, &[p.center(tau)]);
    converged(&est, "semiclassical packet normalisation")
}

/// ⟨H⟩ = m[(ħ²/4m²)⟨ψ|∂²_z|ψ⟩ + a²⟨z²⟩] for the semiclassical packet, by quadrature.
///
/// Only in the narrow-packet limit does this equal m; finite width adds
/// m·a²b²/2 − ħ²/(8 m b² cosh² aτ).
pub fn energy_expectation(p: &PacketParams, tau: f64) -> Result<f64> {
    let tau = require_finite("tau", tau)?;
    let (sh, ch) = ((p.a * tau).sinh(), (p.a * tau).cosh());
    let c = ch / p.a;
    let sigma2 = (p.b * ch).powi(2);
    let k = p.m * p.a * (sh / ch) / p.hbar;
    let (lo, hi) = window(p, tau, p.b * ch);
    let integrator = moment_integrator();

    // ψ = exp(φ) with φ' = −2ikz − (z−c)/σ², φ'' = −2ik − 1/σ², so
    // conj(ψ) ψ'' = |ψ|² (φ'' + φ'²) and the oscillating phase drops out.
    let second = integrator.integrate(
        |z| {
            let rho = (2.0 * log_semiclassical_modulus(p, z, tau)).exp();
            let dphi = Complex64::new(-(z - c) / sigma2, -2.0 * k * z);
            let ddphi = Complex64::new(-1.0 / sigma2, -2.0 * k);
            rho * (ddphi + dphi * dphi).re
        },
        lo,
        hi,
        &[c],
    );
    let z2 = integrator.integrate(|z| (2.0 * log_semiclassical_modulus(p, z, tau)).exp() * z * z, lo, hi, &[c]);
    let second = converged(&second, "<d^2/dz^2>")?;
    let z2 = converged(&z2, "<z^2>")?;
    Ok(p.m * (p.hbar * p.hbar / (4.0 * p.m * p.m) * second + p.a * p.a * z2))
}

/// ln(ψ₂*ψ₁) for the semiclassical packets of the two branches of `spec`.
///
/// Both envelope centres follow the spatial trajectory cosh(a_iτ)/a_i.
pub fn overlap_exponent(spec: &TransitionSpec, b: f64, z: f64, tau: f64, c: &Constants) -> Complex64 {
    let (a1, a2) = (spec.a1(), spec.a2());
    let (ch1, ch2) = ((a1 * tau).cosh(), (a2 * tau).cosh());
    let d1 = z - ch1 / a1;
    let d2 = z - ch2 / a2;
    let re = -(d1 * d1 / (ch1 * ch1) + d2 * d2 / (ch2 * ch2)) / (2.0 * b * b) - 0.5 * (b * b * PI * ch1 * ch2).ln();
    let im = z * z * (spec.m2() * a2 * (a2 * tau).tanh() - spec.m1() * a1 * (a1 * tau).tanh()) / c.hbar();
    Complex64::new(re, im)
}

/// Midpoint of the two envelope centres; the peak of |ψ₂*ψ₁| up to O(δa²).
pub fn overlap_peak(spec: &TransitionSpec, tau: f64) -> f64 {
    let (a1, a2) = (spec.a1(), spec.a2());
    0.5 * ((a1 * tau).cosh() / a1 + (a2 * tau).cosh() / a2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionPhase {
    /// Purely imaginary exponent.
    pub value: Complex64,
    pub warning: Option<Warning>,
}

/// |δa·τ| above this flags the phase expansion as strained.
pub const PHASE_EXPANSION_LIMIT: f64 = 0.1;

/// Imaginary part of ln ψ₂*ψ₁ at the peak, to first order in δa and δm:
/// (i/2ħa)[(δm + m δa/a) sinh 2aτ + 2 m δa τ].
pub fn transition_phase(m: f64, a: f64, da: f64, dm: f64, tau: f64, hbar: f64) -> TransitionPhase {
    let bracket = (dm + m * da / a) * (2.0 * a * tau).sinh() + 2.0 * m * da * tau;
    let da_tau = (da * tau).abs();
    TransitionPhase {
        value: Complex64::new(0.0, bracket / (2.0 * hbar * a)),
        warning: (da_tau > PHASE_EXPANSION_LIMIT).then_some(Warning::ExpansionStrained { da_tau }),
    }
}
