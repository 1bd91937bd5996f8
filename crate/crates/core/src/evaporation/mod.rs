//! Evaporation of the accelerated detector under its own emission.
//!
//! Emission-only mass loss with a sharp infrared cutoff x_min gives
//!
//! ```text
//! ṁ = −Q² f I(x_min) / (8π m),   I(x) = ∫_x^∞ dy/(e^y − 1) = −ln(1 − e^{−x})
//! m(τ) = m₀ (1 − τ/τ_d)^{1/2},   a(τ) = f/m(τ),   τ_d = 4π m₀² / (f Q² I)
//! ```
//!
//! The trajectory is then replaced by N straight segments of proper-time
//! length L, one emitted quantum per segment, and the cascade weight is the
//! product of the single-transition weights.

pub mod sampling;

use std::f64::consts::PI;

use serde::Serialize;

use crate::detector::{Constants, ForceLaw, TransitionSpec};
use crate::error::{require_positive, Error, Result, Warning};
use crate::transition::{p21_closed_form, unruh_temperature};

pub use sampling::{named_stream, PlanckSampler};

/// Bound on each validity ratio for "≪ 1".
pub const VALIDITY_THRESHOLD: f64 = 0.1;

/// G(x) = −ln(1 − e^{−x}), accurate at both ends.
pub(crate) fn planck_tail(x: f64) -> f64 {
    if x > std::f64::consts::LN_2 {
        -(-(-x).exp()).ln_1p()
    } else {
        -(-(-x).exp_m1()).ln()
    }
}

/// ∫_{x_min}^∞ dx/(e^x − 1) = −ln(1 − e^{−x_min}).
pub fn ir_integral(x_min: f64) -> Result<f64> {
    if !(x_min > 0.0) {
        return Err(Error::Domain(format!(
            "infrared cutoff x_min must be positive (the Planck integral diverges at 0), got {x_min}"
        )));
    }
    Ok(planck_tail(x_min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvaporationParams {
    pub m0: f64,
    pub f: f64,
    pub coupling: f64,
    pub x_min: f64,
    pub hbar: f64,
}

impl EvaporationParams {
    pub fn new(m0: f64, law: &ForceLaw, coupling: f64, x_min: f64, c: &Constants) -> Result<Self> {
        ir_integral(x_min)?;
        Ok(Self {
            m0: require_positive("m0", m0)?,
            f: law.f(),
            coupling: require_positive("coupling Q", coupling)?,
            x_min,
            hbar: c.hbar(),
        })
    }

    pub fn force_law(&self) -> ForceLaw {
        ForceLaw::new(self.f).expect("validated on construction")
    }

    /// τ_d = 4π m₀² / (f Q² I(x_min)).
    pub fn decay_time(&self) -> f64 {
        4.0 * PI * self.m0 * self.m0 / (self.f * self.coupling.powi(2) * planck_tail(self.x_min))
    }
}

/// Rate of mass change ṁ = −Q² f I(x_min)/(8π m). Always negative.
pub fn mass_loss_rate(m: f64, p: &EvaporationParams) -> Result<f64> {
    let m = require_positive("mass", m)?;
    Ok(-p.coupling.powi(2) * p.f * ir_integral(p.x_min)? / (8.0 * PI * m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub tau: f64,
    pub m: f64,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaporationTrajectory {
    pub params: EvaporationParams,
    pub tau_d: f64,
    /// Last proper time covered; a fixed fraction of τ_d below 1.
    pub tau_end: f64,
    pub samples: Vec<TrajectorySample>,
}

impl EvaporationTrajectory {
    pub fn mass_at(&self, tau: f64) -> f64 {
        self.params.m0 * (1.0 - tau / self.tau_d).sqrt()
    }

    pub fn acceleration_at(&self, tau: f64) -> f64 {
        self.params.f / self.mass_at(tau)
    }

    /// ħa/2π; numerically the Hawking temperature ħ/(8πGm) when f = 1/(4G).
    pub fn temperature_at(&self, tau: f64, c: &Constants) -> f64 {
        unruh_temperature(self.acceleration_at(tau), c)
    }
}

/// Sample `n_samples` equally spaced proper times from 0 to
/// `tau_end_fraction`·τ_d. The endpoint τ_d itself is excluded since a diverges there.
pub fn trajectory(p: &EvaporationParams, n_samples: usize, tau_end_fraction: f64) -> Result<EvaporationTrajectory> {
    if !(tau_end_fraction > 0.0 && tau_end_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "tau_end_fraction must lie in (0, 1); the acceleration diverges at tau_d (got {tau_end_fraction})"
        )));
    }
    if n_samples == 0 {
        return Err(Error::Domain("at least one trajectory sample is required".into()));
    }
    let tau_d = p.decay_time();
    let tau_end = tau_end_fraction * tau_d;
    let mut traj = EvaporationTrajectory { params: *p, tau_d, tau_end, samples: Vec::with_capacity(n_samples) };
    let step = if n_samples > 1 { tau_end / (n_samples - 1) as f64 } else { 0.0 };
    for k in 0..n_samples {
        let tau = if k + 1 == n_samples && n_samples > 1 { tau_end } else { step * k as f64 };
        let m = traj.mass_at(tau);
        traj.samples.push(TrajectorySample { tau, m, a: p.f / m });
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioStatus {
    Ok,
    Marginal,
    Violated,
}

impl RatioStatus {
    fn of(ratio: f64) -> Self {
        if ratio <= VALIDITY_THRESHOLD {
            RatioStatus::Ok
        } else if ratio <= 1.0 {
            RatioStatus::Marginal
        } else {
            RatioStatus::Violated
        }
    }
}

/// Check of ħ/|ṁ| ≪ L² ≪ m²/(f|ṁ|) for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityReport {
    /// ħ/(|ṁ| L²): contour (transient) terms negligible.
    pub contour_ratio: f64,
    /// f L² |ṁ| / m²: δa·L small.
    pub recoil_ratio: f64,
    pub contour: RatioStatus,
    pub recoil: RatioStatus,
    /// m²/f ≤ 10ħ.
    pub planck_regime: bool,
    /// Range of L where both ratios are ≤ the threshold, if any.
    pub window: Option<(f64, f64)>,
}

impl ValidityReport {
    pub fn ok(&self) -> bool {
        self.contour == RatioStatus::Ok && self.recoil == RatioStatus::Ok
    }

    pub fn violated(&self) -> bool {
        self.contour == RatioStatus::Violated || self.recoil == RatioStatus::Violated
    }

    pub fn window_nonempty(&self) -> bool {
        self.window.is_some()
    }

    fn describe(&self) -> String {
        let mut parts = Vec::new();
        if self.contour != RatioStatus::Ok {
            parts.push(format!("hbar/|mdot| << L^2 fails (ratio {:.4})", self.contour_ratio));
        }
        if self.recoil != RatioStatus::Ok {
            parts.push(format!("L^2 << m^2/(f|mdot|) fails (ratio {:.4})", self.recoil_ratio));
        }
        parts.join("; ")
    }
}

pub fn validity_check(m: f64, mdot: f64, f: f64, l: f64, c: &Constants) -> ValidityReport {
    let rate = mdot.abs();
    let hbar = c.hbar();
    let contour_ratio = hbar / (rate * l * l);
    let recoil_ratio = f * l * l * rate / (m * m);
    let mass_scale = m * m / f;
    // the product of the two ratios is ħf/m², independent of L, so both can
    // sit below the threshold only if m²/f > ħ/threshold² = 100ħ
    let window = (mass_scale > 100.0 * hbar)
        .then(|| ((hbar / (VALIDITY_THRESHOLD * rate)).sqrt(), (VALIDITY_THRESHOLD * m * m / (f * rate)).sqrt()));
    ValidityReport {
        contour_ratio,
        recoil_ratio,
        contour: RatioStatus::of(contour_ratio),
        recoil: RatioStatus::of(recoil_ratio),
        planck_regime: mass_scale <= 10.0 * hbar,
        window,
    }
}

/// What to do when a step falls outside the validity window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidityPolicy {
    Enforce,
    /// Proceed, recording a warning per offending step.
    Override,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub specs: Vec<TransitionSpec>,
    pub step: f64,
    pub warnings: Vec<Warning>,
}

/// Replace the trajectory by `n` segments of length `l`: segment r joins
/// (a, m) at (r−1)L to (a, m) at rL.
pub fn discretize(
    traj: &EvaporationTrajectory,
    l: f64,
    n: usize,
    c: &Constants,
    policy: ValidityPolicy,
) -> Result<Discretization> {
    let l = require_positive("step L", l)?;
    if n == 0 {
        return Err(Error::Domain("step count N must be at least 1".into()));
    }
    if l * n as f64 > traj.tau_end {
        return Err(Error::Domain(format!(
            "N*L = {} exceeds the trajectory end {} (= {} tau_d)",
            l * n as f64,
            traj.tau_end,
            traj.tau_end / traj.tau_d
        )));
    }
    let p = &traj.params;
    let mut specs = Vec::with_capacity(n);
    let mut warnings = Vec::new();
    let mut prev_m = traj.mass_at(0.0);
    for r in 1..=n {
        let report = validity_check(prev_m, mass_loss_rate(prev_m, p)?, p.f, l, c);
        if !report.ok() {
            let detail = format!("step {r}: {}", report.describe());
            match (policy, report.violated()) {
                (ValidityPolicy::Enforce, true) => return Err(Error::Validity(detail)),
                (ValidityPolicy::Override, true) => warnings.push(Warning::ValidityOverridden { detail }),
                (_, false) => warnings.push(Warning::ValidityMarginal { detail }),
            }
        }
        let m = traj.mass_at(l * r as f64);
        let spec = TransitionSpec::new(p.f / prev_m, prev_m, p.f / m, m, l, p.coupling)
            .map_err(|e| Error::Step { index: r, source: Box::new(e) })?;
        specs.push(spec);
        prev_m = m;
    }
    Ok(Discretization { specs, step: l, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadeStep {
    pub r: usize,
    pub a_mid: f64,
    pub da: f64,
    pub dm: f64,
    /// β_r ħω_r.
    pub x: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeResult {
    pub steps: Vec<CascadeStep>,
    /// Π P_r; underflows to 0 long before `log_product_weight` does.
    pub product_weight: f64,
    pub log_product_weight: f64,
    /// max_r |x_r − x̄| / x̄.
    pub x_constancy: f64,
    #[serde(skip)]
    pub warnings: Vec<Warning>,
}

pub fn cascade_probability(specs: &[TransitionSpec], c: &Constants, law: &ForceLaw) -> Result<CascadeResult> {
    if specs.is_empty() {
        return Err(Error::Domain("cascade needs at least one step".into()));
    }
    let mut steps = Vec::with_capacity(specs.len());
    let mut product = 1.0;
    let mut log_product = 0.0;
    let mut warnings = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let r = i + 1;
        let t = p21_closed_form(spec, c, law).map_err(|e| Error::Step { index: r, source: Box::new(e) })?;
        product *= t.p21;
        log_product += t.p21.ln();
        warnings.extend(t.warnings);
        steps.push(CascadeStep { r, a_mid: spec.a_mid(), da: spec.da(), dm: spec.dm(), x: t.x, p: t.p21 });
    }
    let mean_x = steps.iter().map(|s| s.x).sum::<f64>() / steps.len() as f64;
    let x_constancy = steps.iter().map(|s| (s.x - mean_x).abs() / mean_x).fold(0.0, f64::max);
    Ok(CascadeResult { steps, product_weight: product, log_product_weight: log_product, x_constancy, warnings })
}

/// Comparison of the cascade with the constant-exponent form
/// (4πm₀/f)/(e^{x₁} − 1) · (1 − rL/τ_d)^{1/2} per step.
///
/// The two agree only up to a per-quantum constant, so this reports ratios
/// rather than asserting equality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonForm {
    pub log_form: f64,
    /// ln(Π P_r) − log_form.
    pub log_ratio: f64,
    /// exp(log_ratio / N): the constant each quantum contributes.
    pub per_quantum_ratio: f64,
    pub step_ratios: Vec<f64>,
    /// max_r |ratio_r − mean| / mean.
    pub ratio_spread: f64,
}

pub fn comparison_form(result: &CascadeResult, traj: &EvaporationTrajectory, l: f64) -> ComparisonForm {
    let p = &traj.params;
    let x1 = result.steps[0].x;
    let per_step_log = (4.0 * PI * p.m0 / p.f).ln() - x1.exp_m1().ln();
    let mut log_form = 0.0;
    let mut step_ratios = Vec::with_capacity(result.steps.len());
    for s in &result.steps {
        let shrink = 0.5 * (1.0 - s.r as f64 * l / traj.tau_d).ln();
        log_form += per_step_log + shrink;
        step_ratios.push((s.p.ln() - per_step_log - shrink).exp());
    }
    let n = result.steps.len() as f64;
    let log_ratio = result.log_product_weight - log_form;
    let mean = step_ratios.iter().sum::<f64>() / n;
    let ratio_spread = step_ratios.iter().map(|r| (r - mean).abs() / mean).fold(0.0, f64::max);
    ComparisonForm { log_form, log_ratio, per_quantum_ratio: (log_ratio / n).exp(), step_ratios, ratio_spread }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::Integrator;

    fn params(m0: f64, q: f64) -> EvaporationParams {
        EvaporationParams::new(m0, &ForceLaw::default(), q, 0.1, &Constants::reduced()).unwrap()
    }

    #[test]
    fn ir_integral_examples() {
        let closed = ir_integral(0.1).unwrap();
        assert!((closed - 2.352_168_4).abs() < 1e-7);
        let quad =
            Integrator::with_tolerance(1e-12, 1e-14).integrate(|x: f64| 1.0 / x.exp_m1(), 0.1, 60.0, &[1.0, 5.0]);
        assert!((quad.value - closed).abs() < 1e-10, "{} vs {closed}", quad.value);
        assert!((ir_integral(std::f64::consts::LN_2).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let x = 40.0;
        assert!((ir_integral(x).unwrap() / (-x).exp() - 1.0).abs() < 1e-15);
        assert!(matches!(ir_integral(0.0), Err(Error::Domain(_))));
        assert!(ir_integral(-1.0).is_err());
    }

    #[test]
    fn mass_loss_rate_examples() {
        let p = params(1.0, 1.0);
        let rate = mass_loss_rate(1.0, &p).unwrap();
        assert!((rate + 2.352_168_461 / (8.0 * PI)).abs() < 1e-9);
        assert!((rate + 0.093_589_8).abs() < 1e-7, "{rate}");
        assert!((mass_loss_rate(2.0, &p).unwrap() - rate / 2.0).abs() < 1e-16);
    }

    #[test]
    fn decay_time_and_profile() {
        let p = params(1.0, 1.0);
        assert!((p.decay_time() - 4.0 * PI / 2.352_168_461_044_09).abs() < 1e-12);
        let traj = trajectory(&p, 5, 0.5).unwrap();
        let td = traj.tau_d;
        assert!((traj.mass_at(td / 4.0) - 0.75f64.sqrt()).abs() < 1e-15);
        let half = td / 2.0;
        assert!((traj.acceleration_at(half) * traj.mass_at(half) - 1.0).abs() < 1e-15);

        let bh = Constants::black_hole(1.0, 0.5).unwrap();
        let law = ForceLaw::black_hole(&bh).unwrap();
        let pb = EvaporationParams::new(3.0, &law, 0.7, 0.1, &bh).unwrap();
        let expected = 16.0 * PI * 0.5 * 9.0 / (0.49 * ir_integral(0.1).unwrap());
        assert!((pb.decay_time() / expected - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trajectory_samples() {
        let traj = trajectory(&params(1.0, 1.0), 3, 0.5).unwrap();
        assert_eq!(traj.samples.len(), 3);
        assert_eq!(traj.samples[0].tau, 0.0);
        assert_eq!(traj.samples[0].m, 1.0);
        assert_eq!(traj.samples[2].tau, traj.tau_end);
        for w in traj.samples.windows(2) {
            assert!(w[1].m < w[0].m && w[1].a > w[0].a);
        }
        for s in &traj.samples {
            assert!((s.m * s.m + s.tau / traj.tau_d - 1.0).abs() < 1e-10);
            assert!((s.a * s.m - 1.0).abs() < 1e-12);
        }
        assert!(trajectory(&params(1.0, 1.0), 3, 1.0).is_err());
        assert!(trajectory(&params(1.0, 1.0), 3, 0.0).is_err());
        assert!(trajectory(&params(1.0, 1.0), 0, 0.5).is_err());
    }

    #[test]
    fn temperature_follows_hawking_in_black_hole_mode() {
        let bh = Constants::black_hole(1.0, 2.0).unwrap();
        let law = ForceLaw::black_hole(&bh).unwrap();
        let p = EvaporationParams::new(5.0, &law, 1.0, 0.1, &bh).unwrap();
        let traj = trajectory(&p, 4, 0.9).unwrap();
        for s in &traj.samples {
            let hawking = crate::transition::hawking_temperature(s.m, &bh).unwrap();
            assert!((traj.temperature_at(s.tau, &bh) / hawking - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn validity_examples() {
        let c = Constants::reduced();
        let r = validity_check(10.0, -9.36e-4, 1.0, 100.0, &c);
        assert!((r.contour_ratio - 0.106_837).abs() < 1e-5, "{}", r.contour_ratio);
        assert!((r.recoil_ratio - 0.0936).abs() < 1e-12);
        assert_eq!(r.contour, RatioStatus::Marginal);
        assert_eq!(r.recoil, RatioStatus::Ok);
        assert!(!r.ok() && !r.violated());

        let planck = validity_check(1.0, -0.01, 1.0, 1.0, &c);
        assert!(planck.planck_regime);
        assert!(!planck.window_nonempty());

        // the rate for (m=10, f=1, Q=0.1, x_min=0.1) is an order of magnitude smaller
        let rate = mass_loss_rate(10.0, &params(10.0, 0.1)).unwrap();
        assert!((rate + 9.358_98e-5).abs() < 1e-9, "{rate}");
    }

    #[test]
    fn discretize_telescopes_and_emits() {
        let traj = trajectory(&params(10.0, 0.1), 2, 0.5).unwrap();
        let c = Constants::reduced();
        let d = discretize(&traj, 1.0, 5, &c, ValidityPolicy::Override).unwrap();
        assert_eq!(d.specs.len(), 5);
        assert!(!d.warnings.is_empty());
        let total: f64 = d.specs.iter().map(|s| s.dm()).sum();
        assert_eq!(total, traj.mass_at(5.0) - traj.params.m0);
        for s in &d.specs {
            assert!(s.dm() < 0.0 && s.da() > 0.0);
        }
        let err = discretize(&traj, 1.0, 5, &c, ValidityPolicy::Enforce).unwrap_err();
        assert!(matches!(err, Error::Validity(ref m) if m.contains("step 1") && m.contains("hbar/|mdot|")));
        assert!(discretize(&traj, traj.tau_end, 2, &c, ValidityPolicy::Override).is_err());
    }

    #[test]
    fn discretize_inside_window_is_clean() {
        // m0 = 1e3, Q = 1: |mdot| ≈ 9.4e-5, window L ∈ (326, 3.3e3)
        let traj = trajectory(&params(1000.0, 1.0), 2, 0.5).unwrap();
        let d = discretize(&traj, 1000.0, 10, &Constants::reduced(), ValidityPolicy::Enforce).unwrap();
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn single_step_cascade_is_the_transition_weight() {
        let traj = trajectory(&params(10.0, 0.1), 2, 0.5).unwrap();
        let c = Constants::reduced();
        let law = ForceLaw::default();
        let d = discretize(&traj, 1.0, 1, &c, ValidityPolicy::Override).unwrap();
        let cas = cascade_probability(&d.specs, &c, &law).unwrap();
        let single = p21_closed_form(&d.specs[0], &c, &law).unwrap();
        assert_eq!(cas.product_weight, single.p21);
        assert_eq!(cas.x_constancy, 0.0);
    }

    #[test]
    fn cascade_step_errors_name_the_step() {
        let law = ForceLaw::default();
        let good = TransitionSpec::on_force_law(&law, 1.0, 0.1, 1.0, 1.0).unwrap();
        let bad = TransitionSpec::on_force_law(&law, 1.0, 0.0, 1.0, 1.0).unwrap();
        let err = cascade_probability(&[good, bad], &Constants::reduced(), &law).unwrap_err();
        assert!(matches!(err, Error::Step { index: 2, .. }));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn comparison_ratio_is_constant_per_quantum() {
        let traj = trajectory(&params(10.0, 0.1), 2, 0.5).unwrap();
        let c = Constants::reduced();
        let law = ForceLaw::default();
        let mut per_quantum = Vec::new();
        for n in 1..=5 {
            let d = discretize(&traj, 1.0, n, &c, ValidityPolicy::Override).unwrap();
            let cas = cascade_probability(&d.specs, &c, &law).unwrap();
            let cmp = comparison_form(&cas, &traj, 1.0);
            assert!(cmp.ratio_spread < 0.05);
            per_quantum.push(cmp.per_quantum_ratio);
        }
        let first = per_quantum[0];
        for r in &per_quantum {
            assert!((r / first - 1.0).abs() < 0.05, "{per_quantum:?}");
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::test_runner::Config::with_cases(64))]

        #[test]
        fn trajectory_invariants(m0 in 0.1f64..1e3, f in 0.1f64..10.0, q in 0.01f64..2.0, x_min in 1e-3f64..3.0) {
            let c = Constants::reduced();
            let p = EvaporationParams::new(m0, &ForceLaw::new(f).unwrap(), q, x_min, &c).unwrap();
            let traj = trajectory(&p, 17, 0.95).unwrap();
            for s in &traj.samples {
                proptest::prop_assert!(((s.m / m0).powi(2) + s.tau / traj.tau_d - 1.0).abs() < 1e-10);
                proptest::prop_assert!((s.a * s.m / f - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn cascade_invariants(m0 in 5.0f64..200.0, q in 0.05f64..1.0, n in 1usize..12, frac in 1e-4f64..0.04) {
            let c = Constants::reduced();
            let law = ForceLaw::default();
            let p = EvaporationParams::new(m0, &law, q, 0.1, &c).unwrap();
            let traj = trajectory(&p, 2, 0.5).unwrap();
            // N·L covers `frac`·τ_d, inside the first half of the trajectory
            let l = frac * traj.tau_d / n as f64;
            let d = discretize(&traj, l, n, &c, ValidityPolicy::Override).unwrap();
            let total: f64 = d.specs.iter().map(|s| s.dm()).sum();
            proptest::prop_assert_eq!(total, traj.mass_at(l * n as f64) - m0);
            let cas = cascade_probability(&d.specs, &c, &law).unwrap();
            proptest::prop_assert!(cas.x_constancy <= 4.0 * l / traj.tau_d);
            proptest::prop_assert!(cas.product_weight > 0.0);
            proptest::prop_assert!((cas.product_weight.ln() - cas.log_product_weight).abs() < 1e-10 * cas.log_product_weight.abs().max(1.0));
        }
    }
}
