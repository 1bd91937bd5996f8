//! Independent numerical checks of the closed-form transition weight.
//!
//! [`integral_p21`] evaluates the regulated double integral
//!
//! ```text
//! P = −Q²/(8πħ) ∫₀^L dT′ ∫_{−w(T′)}^{w(T′)} dt e^{iκt} ln[(2/a) sinh(a(t − iε)/2)],
//! w(T′) = L − 2|T′ − L/2|,   κ = fδa/(ħa²)
//! ```
//!
//! by nested adaptive quadrature at each regulator in a sweep and extrapolates
//! ε → 0⁺. [`pole_sum_p21`] sums the residue ladder term by term. Neither path
//! calls the closed form.
//!
//! The log is continued along the real t axis: with ε applied as a rigid shift,
//! Im sinh(a(t − iε)/2) = −cosh(at/2)·sin(aε/2) < 0, so the argument never
//! reaches the principal cut while 0 < aε < 2π. The constant iπ/2 is added so
//! that the kernel satisfies K(−t) = conj K(t), the symmetry of the vacuum
//! two-point function; the real part of P does not depend on this constant.

use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::detector::{Constants, ForceLaw, TransitionSpec};
use crate::error::{Error, Result, Warning};
use crate::quad::Integrator;
use crate::transition::{boltzmann_exponent, pole_prefactor, Direction};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureConfig {
    /// Regulator used when `eps_sweep` is empty.
    pub eps: f64,
    /// Tolerance on the returned value. Quadrature panels are refined to a
    /// hundredth of it so that the ε extrapolation is not noise-limited.
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Cap on the number of residue terms.
    pub n_max: usize,
    /// Decreasing regulators for extrapolation to ε → 0⁺.
    pub eps_sweep: Vec<f64>,
    /// Evaluate even when the transient bound marks the window invalid.
    pub override_validity: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            rel_tol: 1e-5,
            abs_tol: 1e-15,
            n_max: 1_000_000,
            eps_sweep: vec![1e-3, 5e-4, 2.5e-4],
            override_validity: false,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.rel_tol >= 1e-12) {
            return bad(format!("rel_tol must be >= 1e-12, got {}", self.rel_tol));
        }
        if !(self.abs_tol >= 0.0) {
            return bad(format!("abs_tol must be >= 0, got {}", self.abs_tol));
        }
        if self.n_max < 1 {
            return bad("n_max must be at least 1".into());
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if self.eps_sweep.iter().any(|&e| !(e > 0.0)) {
            return bad("eps_sweep entries must be positive".into());
        }
        if self.eps_sweep.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps_sweep must be strictly decreasing".into());
        }
        Ok(())
    }

    fn regulators(&self) -> Vec<f64> {
        if self.eps_sweep.is_empty() {
            vec![self.eps]
        } else {
            self.eps_sweep.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowStatus {
    Ok,
    Marginal,
    Invalid,
}

/// Size of the contour contributions neglected by the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransientBound {
    /// e^{−fδaL/(ħa²)}, used as the relative transient estimate.
    pub bound: f64,
    /// fδaL/(ħa²).
    pub exponent: f64,
    /// ħ/(|ṁ|L²) with ṁ = δm/L; must be ≪ 1.
    pub contour_ratio: f64,
    /// fL²|ṁ|/m²; must be ≪ 1.
    pub recoil_ratio: f64,
    pub status: WindowStatus,
}

pub fn transient_bound(spec: &TransitionSpec, c: &Constants, law: &ForceLaw) -> TransientBound {
    let a = spec.a_mid();
    let l = spec.window();
    let exponent = law.f() * spec.da().abs() * l / (c.hbar() * a * a);
    let mdot = spec.dm().abs() / l;
    let contour_ratio = c.hbar() / (mdot * l * l);
    let recoil_ratio = law.f() * l * l * mdot / spec.m_mid().powi(2);
    let status = if exponent < 1.0 || recoil_ratio > 1.0 {
        WindowStatus::Invalid
    } else if exponent < 10.0 || recoil_ratio > 0.1 {
        WindowStatus::Marginal
    } else {
        WindowStatus::Ok
    };
    TransientBound { bound: (-exponent).exp(), exponent, contour_ratio, recoil_ratio, status }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepLevel {
    pub eps: f64,
    pub value: f64,
    pub imag: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub value: f64,
    /// Imaginary part of the (extrapolated) integral; zero for a real weight.
    pub imag: f64,
    pub estimated_error: f64,
    /// Smallest regulator actually evaluated (0 for the residue sum).
    pub eps_used: f64,
    pub converged: bool,
    /// Relative size of the neglected transient terms.
    pub transient_estimate: f64,
    pub sweep: Vec<SweepLevel>,
    /// Linear-in-ε extrapolations from successive sweep pairs.
    pub extrapolations: Vec<f64>,
    /// Residue terms summed (0 for the integral).
    pub terms: usize,
    #[serde(skip)]
    pub warnings: Vec<Warning>,
}

impl OracleResult {
    /// Whether successive sweep values approach each other monotonically.
    pub fn sweep_is_monotone(&self) -> bool {
        let gaps: Vec<f64> = self.sweep.windows(2).map(|w| (w[1].value - w[0].value).abs()).collect();
        gaps.windows(2).all(|g| g[1] < g[0])
    }
}

/// ln[(2/a) sinh(a(t − iε)/2)] + iπ/2 on the continued branch.
///
/// Returns `None` if the sinh argument leaves the lower half plane, which
/// would put the principal log on the wrong sheet.
pub fn log_kernel(t: f64, a: f64, eps: f64) -> Option<Complex64> {
    let x = 0.5 * a * t;
    let y = 0.5 * a * eps;
    let (sy, cy) = y.sin_cos();
    if !(sy > 0.0) {
        return None;
    }
    let log_sinh = if x.abs() > 20.0 {
        // sinh x ≈ cosh x ≈ sign(x)·e^{|x|}/2 to double precision
        Complex64::new(x.abs() - LN_2, 0.0) + Complex64::new(x.signum() * cy, -sy).ln()
    } else {
        Complex64::new(x.sinh() * cy, -x.cosh() * sy).ln()
    };
    Some(log_sinh + Complex64::new((2.0 / a).ln(), FRAC_PI_2))
}

/// Switches for checking the integration geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegrandParts {
    pub oscillation: bool,
    pub kernel: bool,
}

impl IntegrandParts {
    pub const FULL: Self = Self { oscillation: true, kernel: true };
}

struct RhombusOutcome {
    value: Complex64,
    error: f64,
    converged: bool,
}

/// ∫₀^L dT′ ∫_{−w(T′)}^{w(T′)} dt [e^{iκt}] [K(t)] over the rhombus, without
/// the coupling prefactor. Bracketed factors are controlled by `parts`.
fn rhombus(
    a: f64,
    kappa: f64,
    l: f64,
    eps: f64,
    parts: IntegrandParts,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<RhombusOutcome> {
    let panel = if kappa != 0.0 && parts.oscillation { (1.0 / (8.0 * kappa.abs())).min(l / 4.0) } else { l / 4.0 };
    let cut = Cell::new(None::<f64>);
    let inner_err = Cell::new(0.0f64);
    let inner_ok = Cell::new(true);

    let integrand = |t: f64| -> Complex64 {
        let k = if parts.kernel {
            match log_kernel(t, a, eps) {
                Some(k) => k,
                None => {
                    cut.set(Some(t));
                    Complex64::new(0.0, 0.0)
                }
            }
        } else {
            Complex64::new(1.0, 0.0)
        };
        if parts.oscillation {
            Complex64::new(0.0, kappa * t).exp() * k
        } else {
            k
        }
    };

    let inner = Integrator::with_tolerance(rel_tol, abs_tol).max_panel_width(panel).max_panels(20_000);
    let outer_integrand = |tp: f64| -> Complex64 {
        let w = l - 2.0 * (tp - 0.5 * l).abs();
        if w <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let est = inner.integrate(integrand, -w, w, &[0.0]);
        inner_err.set(inner_err.get().max(est.error));
        if !est.converged {
            inner_ok.set(false);
        }
        est.value
    };
    let outer = Integrator::with_tolerance(rel_tol, abs_tol).max_panel_width(panel).max_panels(20_000).integrate(
        outer_integrand,
        0.0,
        l,
        &[0.5 * l],
    );

    if let Some(t) = cut.get() {
        return Err(Error::BranchCut { t });
    }
    Ok(RhombusOutcome {
        value: outer.value,
        error: outer.error + l * inner_err.get(),
        converged: outer.converged && inner_ok.get(),
    })
}

/// Raw rhombus integral with selectable factors, for geometry checks.
pub fn rhombus_integral(
    spec: &TransitionSpec,
    c: &Constants,
    law: &ForceLaw,
    eps: f64,
    parts: IntegrandParts,
) -> Result<Complex64> {
    let a = spec.a_mid();
    let kappa = law.f() * spec.da() / (c.hbar() * a * a);
    Ok(rhombus(a, kappa, spec.window(), eps, parts, 1e-9, 1e-15)?.value)
}

/// Probability weight from the regulated double integral, extrapolated in ε.
pub fn integral_p21(
    spec: &TransitionSpec,
    c: &Constants,
    law: &ForceLaw,
    q: &QuadratureConfig,
) -> Result<OracleResult> {
    q.validate()?;
    if spec.da() == 0.0 {
        return Err(Error::SpontaneousPole);
    }
    let tb = transient_bound(spec, c, law);
    let mut warnings = Vec::new();
    match (tb.status, q.override_validity) {
        (WindowStatus::Invalid, false) => {
            return Err(Error::Validity(format!(
                "transients dominate: fδaL/(ħa²)={:.4} (needs >> 1), δa·L={:.4} (needs << 1)",
                tb.exponent, tb.recoil_ratio
            )))
        }
        (WindowStatus::Invalid, true) => warnings.push(Warning::ValidityOverridden {
            detail: format!("oracle evaluated outside its window (fδaL/ħa²={:.4})", tb.exponent),
        }),
        (WindowStatus::Marginal, _) => warnings.push(Warning::ValidityMarginal {
            detail: format!(
                "fδaL/(ħa²)={:.4}, δa·L={:.4}; transient terms may be visible",
                tb.exponent, tb.recoil_ratio
            ),
        }),
        (WindowStatus::Ok, _) => {}
    }

    let a = spec.a_mid();
    let kappa = law.f() * spec.da() / (c.hbar() * a * a);
    let scale = -spec.coupling().powi(2) / (8.0 * PI * c.hbar());
    let quad_rel = (0.01 * q.rel_tol).max(1e-13);
    let quad_abs = 0.01 * q.abs_tol / scale.abs();

    let regulators = q.regulators();
    let levels: Vec<Result<(SweepLevel, bool)>> = regulators
        .par_iter()
        .map(|&eps| {
            let out = rhombus(a, kappa, spec.window(), eps, IntegrandParts::FULL, quad_rel, quad_abs)?;
            let v = out.value * scale;
            Ok((SweepLevel { eps, value: v.re, imag: v.im, error: out.error * scale.abs() }, out.converged))
        })
        .collect();
    let mut sweep = Vec::with_capacity(levels.len());
    let mut quad_converged = true;
    for level in levels {
        let (lvl, ok) = level?;
        quad_converged &= ok;
        sweep.push(lvl);
    }

    // leading error linear in ε: v(0) ≈ (ε₁v₂ − ε₂v₁)/(ε₁ − ε₂)
    let richardson = |x: f64, y: f64, e1: f64, e2: f64| (e1 * y - e2 * x) / (e1 - e2);
    let extrapolations: Vec<f64> =
        sweep.windows(2).map(|w| richardson(w[0].value, w[1].value, w[0].eps, w[1].eps)).collect();
    let imag_extrapolations: Vec<f64> =
        sweep.windows(2).map(|w| richardson(w[0].imag, w[1].imag, w[0].eps, w[1].eps)).collect();
    let last = *sweep.last().expect("at least one regulator");
    let quad_error = sweep.iter().map(|s| s.error).fold(0.0, f64::max);

    let (value, imag, extrapolation_change) = match extrapolations.len() {
        0 => (last.value, last.imag, 0.0),
        1 => {
            let prev = &sweep[sweep.len() - 2];
            // only one extrapolant: the raw sweep step bounds the residual
            (extrapolations[0], imag_extrapolations[0], (last.value - prev.value).abs())
        }
        n => (extrapolations[n - 1], imag_extrapolations[n - 1], (extrapolations[n - 1] - extrapolations[n - 2]).abs()),
    };
    // two-point extrapolation amplifies quadrature error by up to (ε₁+ε₂)/(ε₁−ε₂)
    let amplification = match sweep.len() {
        0 | 1 => 1.0,
        n => (sweep[n - 2].eps + sweep[n - 1].eps) / (sweep[n - 2].eps - sweep[n - 1].eps),
    };
    let estimated_error = extrapolation_change + amplification * quad_error;
    let converged = quad_converged && estimated_error <= q.rel_tol * value.abs() + q.abs_tol;
    if !converged {
        let tail: Vec<f64> = if extrapolations.len() >= 2 {
            extrapolations[extrapolations.len() - 2..].to_vec()
        } else {
            sweep.iter().rev().take(2).rev().map(|s| s.value).collect()
        };
        return Err(Error::NonConvergence {
            message: format!(
                "double integral: estimated error {estimated_error:e} exceeds rel_tol {:e} / abs_tol {:e} at value {value:e}",
                q.rel_tol, q.abs_tol
            ),
            last_values: tail,
        });
    }

    Ok(OracleResult {
        value,
        imag,
        estimated_error,
        eps_used: last.eps,
        converged,
        transient_estimate: tb.bound,
        sweep,
        extrapolations,
        terms: 0,
        warnings,
    })
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Residue ladder Σ e^{−xn} times Q²a²L/(4f|δa|).
///
/// Emission closes above the real axis and picks up n = 0, 1, 2, …;
/// absorption closes below and the spontaneous pole at 0 + iε is excluded,
/// so the sum starts at n = 1.
pub fn pole_sum_p21(
    spec: &TransitionSpec,
    c: &Constants,
    law: &ForceLaw,
    q: &QuadratureConfig,
) -> Result<OracleResult> {
    q.validate()?;
    let direction = Direction::of(spec.da()).ok_or(Error::SpontaneousPole)?;
    let x = boltzmann_exponent(spec, c, law);
    let prefactor = pole_prefactor(spec, law);
    let start = match direction {
        Direction::Emission => 0usize,
        Direction::Absorption => 1,
    };

    let mut acc = CompensatedSum::default();
    let mut prev_term = f64::NAN;
    let mut terms = 0;
    let mut n = start;
    let tail = loop {
        if terms >= q.n_max {
            return Err(Error::Truncation { terms, last_term: prev_term });
        }
        let term = (-x * n as f64).exp();
        acc.add(term);
        terms += 1;
        // the ladder is geometric, so the unsummed remainder is term·r/(1 − r)
        let ratio = term / prev_term;
        let tail = if ratio.is_finite() && ratio < 1.0 { term * ratio / (1.0 - ratio) } else { term };
        if term == 0.0 || tail <= q.abs_tol * acc.total() {
            break tail;
        }
        prev_term = term;
        n += 1;
    };
    let value = prefactor * acc.total();

    Ok(OracleResult {
        value,
        imag: 0.0,
        estimated_error: prefactor * tail,
        eps_used: 0.0,
        converged: true,
        transient_estimate: transient_bound(spec, c, law).bound,
        sweep: Vec::new(),
        extrapolations: Vec::new(),
        terms,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transition::p21_closed_form;

    fn unit_spec(da: f64) -> TransitionSpec {
        TransitionSpec::on_force_law(&ForceLaw::default(), 1.0, da, 1.0, 1.0).unwrap()
    }

    #[test]
    fn kernel_is_hermitian() {
        for &t in &[0.3, 1.7, 25.0, 60.0] {
            let k = log_kernel(t, 1.3, 1e-3).unwrap();
            let m = log_kernel(-t, 1.3, 1e-3).unwrap();
            assert!((k - m.conj()).norm() < 1e-12, "t={t}: {k} vs {m}");
        }
    }

    #[test]
    fn kernel_matches_direct_log_away_from_origin() {
        // far from t = 0 the regulator is negligible: ln|2 sinh(t/2)| + iπ/2·sign(t)
        for &t in &[0.5, -0.5, 3.0, -3.0] {
            let k = log_kernel(t, 1.0, 1e-9).unwrap();
            let expected = Complex64::new((2.0 * (0.5f64 * t).sinh()).abs().ln(), FRAC_PI_2 * t.signum());
            assert!((k - expected).norm() < 1e-8, "{t}");
        }
        // asymptotic branch agrees with the direct one at the switch
        let direct = Complex64::new((20.0f64).sinh() * (0.001f64).cos(), -(20.0f64).cosh() * (0.001f64).sin()).ln();
        let via = log_kernel(40.0 + 1e-12, 1.0, 0.002).unwrap() - Complex64::new(2f64.ln(), FRAC_PI_2);
        assert!((direct - via).norm() < 1e-12);
    }

    #[test]
    fn oversized_regulator_is_a_branch_error() {
        assert!(log_kernel(0.1, 1.0, 2.0 * PI + 0.1).is_none());
        let spec = unit_spec(0.1);
        let err = rhombus_integral(&spec, &Constants::reduced(), &ForceLaw::default(), 7.0, IntegrandParts::FULL)
            .unwrap_err();
        assert!(matches!(err, Error::BranchCut { .. }));
    }

    #[test]
    fn rhombus_area() {
        let spec = unit_spec(0.1).with_window(2.0).unwrap();
        let flat = IntegrandParts { oscillation: false, kernel: false };
        let area = rhombus_integral(&spec, &Constants::reduced(), &ForceLaw::default(), 1e-3, flat).unwrap();
        assert!((area.re - 4.0).abs() < 1e-12, "{area}");
        assert_eq!(area.im, 0.0);
    }

    #[test]
    fn rhombus_reduces_to_triangle_weight() {
        // ∫∫ over the rhombus of g(t) = ∫_{-L}^{L} (L − |t|) g(t) dt
        let spec = unit_spec(0.1).with_window(1.5).unwrap();
        let (c, law) = (Constants::reduced(), ForceLaw::default());
        let eps = 1e-2;
        let no_osc = IntegrandParts { oscillation: false, kernel: true };
        let nested = rhombus_integral(&spec, &c, &law, eps, no_osc).unwrap();
        let a = spec.a_mid();
        let single = Integrator::with_tolerance(1e-12, 1e-15).integrate(
            |t: f64| log_kernel(t, a, eps).unwrap() * (1.5 - t.abs()),
            -1.5,
            1.5,
            &[0.0],
        );
        assert!((nested - single.value).norm() < 1e-9, "{nested} vs {}", single.value);
    }

    #[test]
    fn pole_sum_examples() {
        let (c, law) = (Constants::reduced(), ForceLaw::default());
        let q = QuadratureConfig::default();
        let em = pole_sum_p21(&unit_spec(0.1), &c, &law, &q).unwrap();
        assert!((em.value - 5.358_920).abs() < 1e-6);
        let ab = pole_sum_p21(&unit_spec(-0.1), &c, &law, &q).unwrap();
        assert!((ab.value - 2.858_920).abs() < 1e-6);
        assert!((em.value - ab.value - 2.5).abs() < 1e-12);
        assert!(em.terms > 50 && em.terms < 100, "{}", em.terms);
    }

    #[test]
    fn pole_sum_truncation_is_reported() {
        let q = QuadratureConfig { n_max: 5, ..QuadratureConfig::default() };
        let err = pole_sum_p21(&unit_spec(0.1), &Constants::reduced(), &ForceLaw::default(), &q).unwrap_err();
        assert!(matches!(err, Error::Truncation { terms: 5, .. }));
    }

    #[test]
    fn pole_sum_matches_closed_form_across_exponents() {
        let (c, q) = (Constants::reduced(), QuadratureConfig::default());
        for &x in &[0.01, 0.1, 1.0, 7.5, 50.0] {
            // choose f so that x = 2πf·0.1
            let law = ForceLaw::new(x / (2.0 * PI * 0.1)).unwrap();
            for da in [0.1, -0.1] {
                let spec = TransitionSpec::on_force_law(&law, 1.0, da, 1.0, 1.0).unwrap();
                let closed = p21_closed_form(&spec, &c, &law).unwrap().p21;
                let poles = pole_sum_p21(&spec, &c, &law, &q).unwrap().value;
                assert!(((poles - closed) / closed).abs() < 1e-12, "x={x} da={da}");
            }
        }
    }

    #[test]
    fn transient_bound_examples() {
        let c = Constants::reduced();
        let law = ForceLaw::new(100.0).unwrap();
        let spec = TransitionSpec::on_force_law(&law, 1.0, 0.05, 2.0, 1.0).unwrap();
        let tb = transient_bound(&spec, &c, &law);
        assert!((tb.bound - (-10.0f64).exp()).abs() < 1e-12);
        assert!((tb.bound - 4.54e-5).abs() < 1e-7);

        // exponent exactly one: fδaL/(ħa²) with f=10, δa=0.1, L=1
        let law = ForceLaw::new(10.0).unwrap();
        let spec = TransitionSpec::on_force_law(&law, 1.0, 0.1, 1.0, 1.0).unwrap();
        let tb = transient_bound(&spec, &c, &law);
        assert!((tb.bound - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(tb.status, WindowStatus::Marginal);

        // degenerate: no acceleration change
        let spec = TransitionSpec::on_force_law(&law, 1.0, 0.0, 1.0, 1.0).unwrap();
        let tb = transient_bound(&spec, &c, &law);
        assert_eq!(tb.bound, 1.0);
        assert_eq!(tb.status, WindowStatus::Invalid);
    }

    #[test]
    fn oracle_refuses_invalid_window_without_override() {
        let (c, law) = (Constants::reduced(), ForceLaw::default());
        let spec = unit_spec(0.1); // fδaL/ħa² = 0.1
        let err = integral_p21(&spec, &c, &law, &QuadratureConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Validity(_)));
        let err = integral_p21(&unit_spec(0.0), &c, &law, &QuadratureConfig::default()).unwrap_err();
        assert_eq!(err, Error::SpontaneousPole);
    }

    // ε → 0 values of the regulated integral from an independent
    // arbitrary-precision evaluation
    const EMISSION_REFERENCE: f64 = 0.104_638_883_780_357_94;
    const ABSORPTION_REFERENCE: f64 = -0.000_801_327_328_535_762;

    #[test]
    fn integral_matches_reference_values() {
        let c = Constants::reduced();
        let law = ForceLaw::new(100.0).unwrap();
        let emission = TransitionSpec::on_force_law(&law, 1.0, 0.05, 2.0, 1.0).unwrap();
        let q = QuadratureConfig { abs_tol: 1e-6, ..QuadratureConfig::default() };

        let r = integral_p21(&emission, &c, &law, &q).unwrap();
        assert!(r.converged);
        assert!((r.value / EMISSION_REFERENCE - 1.0).abs() < 1e-5, "{}", r.value);
        assert!(r.sweep_is_monotone());
        assert!(r.imag.abs() <= 10.0 * r.estimated_error);
        let closed = p21_closed_form(&emission, &c, &law).unwrap().p21;
        assert!((r.value / closed - 1.0).abs() <= 0.05f64.max(3.0 * r.transient_estimate));
        assert!(r.warnings.iter().any(|w| w.code() == "validity-marginal"));

        let r = integral_p21(&emission.reversed(), &c, &law, &q).unwrap();
        assert!((r.value - ABSORPTION_REFERENCE).abs() < 1e-7, "{}", r.value);
    }

    #[test]
    fn config_validation() {
        let mut q = QuadratureConfig { eps_sweep: vec![1e-3, 2e-3], ..QuadratureConfig::default() };
        assert!(matches!(q.validate(), Err(Error::Config(_))));
        q.eps_sweep.clear();
        q.rel_tol = 1e-14;
        assert!(q.validate().is_err());
        q.rel_tol = 1e-6;
        q.n_max = 0;
        assert!(q.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn ladder_matches_closed_form(log_x in -4.0f64..4.0, emission in proptest::bool::ANY) {
            let x = 10f64.powf(log_x);
            let c = Constants::new(2.0 * PI * 0.1 / x).unwrap();
            let da = if emission { 0.1 } else { -0.1 };
            let law = ForceLaw::default();
            let spec = unit_spec(da);
            let closed = p21_closed_form(&spec, &c, &law).unwrap().p21;
            let q = QuadratureConfig { n_max: 10_000_000, ..QuadratureConfig::default() };
            let ladder = pole_sum_p21(&spec, &c, &law, &q).unwrap().value;
            proptest::prop_assume!(closed > 1e-300);
            proptest::prop_assert!((ladder / closed - 1.0).abs() <= 1e-12);
        }
    }
}
