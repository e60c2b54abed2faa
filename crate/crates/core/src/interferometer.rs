//! The post-selected two-component state and its diagnostics.
//!
//! A single photon is split over arms `a` and `b`; arm `b` imprints a cross-Kerr phase `phi0` on
//! the coherent probe `|alpha>`, and detecting the photon behind a variable beam splitter
//! `(t, r)` leaves the probe in
//!
//! ```text
//! t |alpha e^{i phi0}> - r e^{i delta} |alpha>
//! ```
//!
//! up to normalization. `delta` is a compensating phase on the unshifted arm.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::amplitude::{
    coherent_overlap_with_separation, quadrature_log_shift, quadrature_log_wavefunction, wrap_phase, CoherentLabel,
    LogAmplitude, SqueezeTarget, SqueezedKernel,
};
use crate::error::{Error, Result};

/// Lower edge of the transmissivity range.
pub const MIN_TRANSMISSIVITY: f64 = FRAC_1_SQRT_2;
/// Squared norms below this are treated as perfect destructive interference.
pub const DEGENERATE_NORM: f64 = 1e-300;

/// Phase applied to the unshifted arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Compensation {
    /// Cancel the back-action phase `|alpha|^2 sin(phi0)`.
    Auto,
    #[serde(untagged)]
    Fixed(f64),
}

impl std::fmt::Display for Compensation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Compensation::Auto => write!(f, "auto"),
            Compensation::Fixed(d) => write!(f, "{d}"),
        }
    }
}

impl std::str::FromStr for Compensation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Compensation::Auto);
        }
        s.parse::<f64>()
            .ok()
            .filter(|d| d.is_finite())
            .map(Compensation::Fixed)
            .ok_or_else(|| format!("expected 'auto' or a finite number, got '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerConfig {
    alpha: f64,
    phi0: f64,
    t: f64,
    delta: Compensation,
}

impl InterferometerConfig {
    pub fn new(alpha: f64, phi0: f64, t: f64, delta: Compensation) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        if !(phi0.is_finite() && phi0 >= 0.0) {
            return Err(Error::Domain(format!("phi0 must be finite and >= 0, got {phi0}")));
        }
        // accept 1/sqrt(2) written with a few digits of rounding
        if !(t.is_finite() && (MIN_TRANSMISSIVITY - 1e-12..=1.0).contains(&t)) {
            return Err(Error::Domain(format!("t must lie in [1/sqrt(2), 1], got {t}")));
        }
        if let Compensation::Fixed(d) = delta {
            if !d.is_finite() {
                return Err(Error::Domain("compensation phase must be finite".into()));
            }
        }
        Ok(Self {
            alpha,
            phi0,
            t: t.max(MIN_TRANSMISSIVITY),
            delta,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `r = sqrt(1 - t^2)`.
    pub fn r(&self) -> f64 {
        ((1.0 - self.t) * (1.0 + self.t)).sqrt()
    }

    pub fn compensation(&self) -> Compensation {
        self.delta
    }

    /// Resolved compensation phase.
    pub fn delta(&self) -> f64 {
        match self.delta {
            Compensation::Auto => back_action_phase(self.alpha, self.phi0),
            Compensation::Fixed(d) => d,
        }
    }

    pub fn with_t(&self, t: f64) -> Result<Self> {
        Self::new(self.alpha, self.phi0, t, self.delta)
    }

    /// `t - r` without cancellation near `t = r`; exactly zero at the rounded balanced point.
    fn t_minus_r(&self) -> f64 {
        let t = self.t;
        let imbalance = (2.0 * t).mul_add(t, -1.0);
        if imbalance.abs() <= 4.0 * f64::EPSILON {
            return 0.0;
        }
        imbalance / (t + self.r())
    }

    /// `alpha e^{i phi0} - alpha`.
    fn separation(&self) -> Complex64 {
        let half = 0.5 * self.phi0;
        let s = half.sin();
        Complex64::new(-2.0 * s * s, self.phi0.sin()) * self.alpha
    }
}

/// `|alpha|^2 sin(phi0)` wrapped to `(-pi, pi]`.
pub fn back_action_phase(alpha: f64, phi0: f64) -> f64 {
    wrap_phase(alpha * alpha * phi0.sin())
}

/// `c1 |beta1> + c2 |beta2>` with its squared norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatState {
    c1: Complex64,
    c2: Complex64,
    beta1: Complex64,
    beta2: Complex64,
    /// `beta1 - beta2`.
    separation: Complex64,
    /// `c1 + c2 <beta1|beta2>`, the amplitude that survives interference.
    coherence: Complex64,
    overlap: LogAmplitude,
    norm: f64,
}

impl CatState {
    /// Superposition of arbitrary coherent components. Coefficients need not be normalized.
    pub fn new(c1: Complex64, beta1: CoherentLabel, c2: Complex64, beta2: CoherentLabel) -> Result<Self> {
        let (b1, b2) = (beta1.amplitude(), beta2.amplitude());
        let separation = b1 - b2;
        let overlap = coherent_overlap_with_separation(b1, b2, separation);
        let coherence = c1 + c2 * overlap.to_complex()?;
        Self::assemble(c1, c2, b1, b2, separation, overlap, coherence)
    }

    fn assemble(
        c1: Complex64,
        c2: Complex64,
        beta1: Complex64,
        beta2: Complex64,
        separation: Complex64,
        overlap: LogAmplitude,
        coherence: Complex64,
    ) -> Result<Self> {
        // |c1|^2 + |c2|^2 + 2 Re(c1^* c2 o) = |c1 + c2 o|^2 + |c2|^2 (1 - |o|^2)
        let distinct = -(2.0 * overlap.log_mag()).exp_m1();
        let norm = coherence.norm_sqr() + c2.norm_sqr() * distinct;
        if norm.is_nan() || norm < DEGENERATE_NORM {
            return Err(Error::DegeneratePostSelection { norm });
        }
        Ok(Self {
            c1,
            c2,
            beta1,
            beta2,
            separation,
            coherence,
            overlap,
            norm,
        })
    }

    pub fn c1(&self) -> Complex64 {
        self.c1
    }

    pub fn c2(&self) -> Complex64 {
        self.c2
    }

    pub fn beta1(&self) -> Complex64 {
        self.beta1
    }

    pub fn beta2(&self) -> Complex64 {
        self.beta2
    }

    /// Squared norm of `c1 |beta1> + c2 |beta2>`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Coefficients scaled so the state has unit norm.
    pub fn normalized_coefficients(&self) -> (Complex64, Complex64) {
        let s = self.norm.sqrt();
        (self.c1 / s, self.c2 / s)
    }

    /// `<beta1|beta2>`.
    pub fn component_overlap(&self) -> LogAmplitude {
        self.overlap
    }

    /// `<psi|psi>` of the normalized state, with `|beta2>` split into its projection on `|beta1>`
    /// and the orthogonal remainder. The textbook four-term expansion cancels catastrophically when
    /// the components nearly coincide.
    pub fn normalization_check(&self) -> f64 {
        let s = self.norm.sqrt();
        let along = self.coherence / s;
        let across = (self.c2 / s).norm_sqr() * -(2.0 * self.overlap.log_mag()).exp_m1();
        along.norm_sqr() + across
    }
}

/// The post-selected probe state for `cfg`.
pub fn build_cat(cfg: &InterferometerConfig) -> Result<CatState> {
    let (t, r, delta) = (cfg.t, cfg.r(), cfg.delta());
    let beta2 = Complex64::new(cfg.alpha, 0.0);
    let separation = cfg.separation();
    let beta1 = beta2 + separation;
    let overlap = coherent_overlap_with_separation(beta1, beta2, separation);
    let c1 = Complex64::new(t, 0.0);
    let c2 = -Complex64::from_polar(r, delta);
    // coherence = t - r q e^{i psi}, psi = delta + arg<beta1|beta2>
    let q = overlap.magnitude();
    let psi = wrap_phase(delta + overlap.phase());
    let s = (0.5 * psi).sin();
    let one_minus_q_cos = -overlap.log_mag().exp_m1() + 2.0 * q * s * s;
    let coherence = Complex64::new(cfg.t_minus_r() + r * one_minus_q_cos, -r * q * psi.sin());
    CatState::assemble(c1, c2, beta1, beta2, separation, overlap, coherence)
}

/// Probability that the photon exits the selected port.
pub fn success_probability(cfg: &InterferometerConfig) -> f64 {
    let r = cfg.r();
    let overlap = coherent_overlap_with_separation(
        Complex64::new(cfg.alpha, 0.0) + cfg.separation(),
        Complex64::new(cfg.alpha, 0.0),
        cfg.separation(),
    );
    let q = overlap.magnitude();
    let psi = wrap_phase(cfg.delta() + overlap.phase());
    let s = (0.5 * psi).sin();
    let one_minus_q_cos = -overlap.log_mag().exp_m1() + 2.0 * q * s * s;
    let tmr = cfg.t_minus_r();
    // (1 - 2 t r q cos psi) / 2 = ((t - r)^2 + 2 t r (1 - q cos psi)) / 2
    0.5 * (tmr * tmr + 2.0 * cfg.t * r * one_minus_q_cos)
}

/// `|<T|psi>|` for the normalized cat.
pub fn fidelity(cat: &CatState, target: &SqueezeTarget) -> Result<f64> {
    let envelope = crate::amplitude::PRECISION_ENVELOPE;
    if cat.beta1.norm_sqr() > envelope || cat.beta2.norm_sqr() > envelope {
        return Err(Error::Precision("cat component outside the trusted envelope".into()));
    }
    let kernel = SqueezedKernel::new(target);
    Ok(fidelity_with_kernel(cat, &kernel))
}

pub(crate) fn fidelity_with_kernel(cat: &CatState, kernel: &SqueezedKernel) -> f64 {
    let e2 = kernel.exponent(cat.beta2);
    let shift = kernel.exponent_shift(cat.beta2, cat.separation);
    let log_amp = combine(cat.c1, cat.c2, e2, shift);
    (log_amp - 0.5 * cat.norm.ln()).exp()
}

/// `log|c1 e^{e2 + shift} + c2 e^{e2}|`, factoring out the larger term.
fn combine(c1: Complex64, c2: Complex64, e2: Complex64, shift: Complex64) -> f64 {
    if c1 == Complex64::default() {
        return e2.re + c2.norm().ln();
    }
    if c2 == Complex64::default() {
        return e2.re + shift.re + c1.norm().ln();
    }
    if shift.re > 0.0 {
        let bracket = c1 + c2 * (-shift).exp();
        e2.re + shift.re + bracket.norm().ln()
    } else {
        let bracket = c2 + c1 * shift.exp();
        e2.re + bracket.norm().ln()
    }
}

/// `|<p|psi>|^2` for the normalized cat.
pub fn quadrature_density(cat: &CatState, p: f64) -> f64 {
    let e2 = quadrature_log_wavefunction(cat.beta2, p);
    let shift = quadrature_log_shift(cat.beta2, cat.separation, p);
    let log_amp = combine(cat.c1, cat.c2, e2, shift);
    (2.0 * log_amp - cat.norm.ln()).exp()
}

/// First and second quadrature moments. `cov_xp` is the symmetrized covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureMoments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub cov_xp: f64,
}

/// Central moments of `a` about the mean: `(<a>, <da^2>, <da^dag da>)`.
fn central_ladder_moments(cat: &CatState) -> (Complex64, Complex64, f64) {
    // Moments of b = a - beta2: only |beta1> contributes, so every sum collapses onto the
    // surviving amplitude `coherence`.
    let d = cat.separation;
    let m = cat.c1 * d * cat.coherence.conj() / cat.norm;
    let q = cat.c1 * d * d * cat.coherence.conj() / cat.norm;
    let n = cat.c1.norm_sqr() * d.norm_sqr() / cat.norm;
    (cat.beta2 + m, q - m * m, n - m.norm_sqr())
}

pub fn quadrature_moments(cat: &CatState) -> QuadratureMoments {
    let (mean, da2, dn) = central_ladder_moments(cat);
    QuadratureMoments {
        mean_x: std::f64::consts::SQRT_2 * mean.re,
        mean_p: std::f64::consts::SQRT_2 * mean.im,
        var_x: 0.5 + dn + da2.re,
        var_p: 0.5 + dn - da2.re,
        cov_xp: da2.im,
    }
}

/// Smallest variance of `x_lambda = (a e^{-i lambda} + a^dag e^{i lambda})/sqrt(2)` and the
/// angle `lambda` in `[0, pi)` attaining it.
pub fn min_quadrature_variance(cat: &CatState) -> (f64, f64) {
    let (_, da2, dn) = central_ladder_moments(cat);
    let variance = 0.5 + dn - da2.norm();
    if da2.norm() == 0.0 {
        return (variance, 0.0);
    }
    // Var(x_lambda) = 1/2 + dn + Re(da2 e^{-2 i lambda}); minimal where the last term is -|da2|.
    let angle = (0.5 * (da2.arg() + PI)).rem_euclid(PI);
    (variance, angle)
}
