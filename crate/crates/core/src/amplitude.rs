//! Closed-form amplitudes for coherent and squeezed coherent states.
//!
//! Conventions (fixed for the whole crate):
//!
//! * `hbar = 1`, `x = (a + a^dag)/sqrt(2)`, `p = (a - a^dag)/(i sqrt(2))`, vacuum variance 1/2.
//! * `S(zeta) = exp((zeta^* a^2 - zeta a^dag^2)/2)` with `zeta = x e^{i varphi}`, so
//!   `S^dag a S = a cosh x - a^dag e^{i varphi} sinh x`. `varphi = pi` squeezes `p` for real
//!   displacements.
//! * Targets are `R(theta) S(zeta) |gamma>` with `R(theta) = exp(i theta n)` and real `gamma >= 0`.
//!
//! Inner products are returned as [`LogAmplitude`] because the magnitudes and phases involved
//! at `|alpha|^2 ~ 10^6` overflow or cancel in naive complex arithmetic. Every exponent is
//! assembled from differences of labels, never from `|beta|^2` intermediates.

use std::f64::consts::{LN_10, PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Planck constant (CODATA 2018, exact), J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum (exact), m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Largest `|beta|^2` for which squeezed overlaps are trusted.
pub const PRECISION_ENVELOPE: f64 = 1e8;

/// Quadrature scaling shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConvention;

impl QuadratureConvention {
    pub const HBAR: f64 = 1.0;
    pub const VACUUM_VARIANCE: f64 = 0.5;

    /// Mean of `x` for the coherent state `|beta>`.
    pub fn mean_x(beta: Complex64) -> f64 {
        SQRT_2 * beta.re
    }

    /// Mean of `p` for the coherent state `|beta>`.
    pub fn mean_p(beta: Complex64) -> f64 {
        SQRT_2 * beta.im
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_phase(angle: f64) -> f64 {
    if !angle.is_finite() {
        return angle;
    }
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// A complex number stored as natural-log magnitude and wrapped phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAmplitude {
    log_mag: f64,
    phase: f64,
}

impl LogAmplitude {
    pub fn new(log_mag: f64, phase: f64) -> Self {
        if log_mag == f64::NEG_INFINITY {
            return Self::zero();
        }
        Self {
            log_mag,
            phase: wrap_phase(phase),
        }
    }

    pub fn zero() -> Self {
        Self {
            log_mag: f64::NEG_INFINITY,
            phase: 0.0,
        }
    }

    pub fn one() -> Self {
        Self {
            log_mag: 0.0,
            phase: 0.0,
        }
    }

    /// `exp(z)` for a complex exponent `z`.
    pub fn from_exponent(z: Complex64) -> Self {
        Self::new(z.re, z.im)
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z == Complex64::new(0.0, 0.0) {
            return Self::zero();
        }
        Self::new(z.norm().ln(), z.arg())
    }

    pub fn log_mag(&self) -> f64 {
        self.log_mag
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn is_zero(&self) -> bool {
        self.log_mag == f64::NEG_INFINITY
    }

    pub fn magnitude(&self) -> f64 {
        self.log_mag.exp()
    }

    pub fn conj(&self) -> Self {
        if self.is_zero() {
            return *self;
        }
        Self {
            log_mag: self.log_mag,
            phase: if self.phase == PI { PI } else { -self.phase },
        }
    }

    /// Converts to a plain complex value; fails instead of overflowing.
    pub fn to_complex(&self) -> Result<Complex64> {
        if self.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if self.log_mag > 700.0 {
            return Err(Error::Overflow { log_mag: self.log_mag });
        }
        Ok(Complex64::from_polar(self.log_mag.exp(), self.phase))
    }
}

impl std::ops::Mul for LogAmplitude {
    type Output = LogAmplitude;

    fn mul(self, rhs: LogAmplitude) -> LogAmplitude {
        if self.is_zero() || rhs.is_zero() {
            return LogAmplitude::zero();
        }
        LogAmplitude::new(self.log_mag + rhs.log_mag, self.phase + rhs.phase)
    }
}

/// Label of a coherent state `|beta>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentLabel(Complex64);

impl CoherentLabel {
    pub fn new(amplitude: Complex64) -> Result<Self> {
        if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
            return Err(Error::Domain(format!("non-finite coherent amplitude {amplitude}")));
        }
        Ok(Self(amplitude))
    }

    pub fn real(amplitude: f64) -> Result<Self> {
        Self::new(Complex64::new(amplitude, 0.0))
    }

    pub fn from_polar(magnitude: f64, phase: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(magnitude, phase))
    }

    pub fn amplitude(&self) -> Complex64 {
        self.0
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.0.norm_sqr()
    }
}

/// Parameters of the target state `R(theta) S(x e^{i varphi}) |gamma>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeTarget {
    x: f64,
    varphi: f64,
    theta: f64,
    gamma: f64,
}

impl SqueezeTarget {
    pub fn new(x: f64, varphi: f64, theta: f64, gamma: f64) -> Result<Self> {
        if !(x.is_finite() && varphi.is_finite() && theta.is_finite() && gamma.is_finite()) {
            return Err(Error::Domain("non-finite squeeze target".into()));
        }
        if x < 0.0 || gamma < 0.0 {
            return Err(Error::Domain(format!(
                "squeeze target needs x >= 0 and gamma >= 0, got x = {x}, gamma = {gamma}"
            )));
        }
        Ok(Self {
            x,
            varphi,
            theta,
            gamma,
        })
    }

    /// Target whose `gamma` is fixed by the mean photon number `nbar`.
    pub fn with_photon_number(x: f64, varphi: f64, theta: f64, nbar: f64) -> Result<Self> {
        let gamma = gamma_for_photon_number(x, varphi, nbar)?;
        Self::new(x, varphi, theta, gamma)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn varphi(&self) -> f64 {
        self.varphi
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `<a>` of the unrotated state `S(zeta)|gamma>`.
    pub fn unrotated_mean(&self) -> Complex64 {
        let e = Complex64::from_polar(1.0, self.varphi);
        (Complex64::new(self.x.cosh(), 0.0) - e * self.x.sinh()) * self.gamma
    }
}

/// `<b1|b2>` for coherent states.
pub fn overlap_coherent(b1: CoherentLabel, b2: CoherentLabel) -> Result<LogAmplitude> {
    let diff = b1.0 - b2.0;
    if !(diff.re.is_finite() && diff.im.is_finite()) {
        return Err(Error::Domain("coherent labels too large to difference".into()));
    }
    Ok(coherent_overlap_with_separation(b1.0, b2.0, diff))
}

/// `<b1|b2>` given `separation = b1 - b2` computed by the caller without cancellation.
pub(crate) fn coherent_overlap_with_separation(b1: Complex64, b2: Complex64, separation: Complex64) -> LogAmplitude {
    // Im(b1^* b2) = Re(b1) Im(b2) - Im(b1) Re(b2); the two products are formed separately so
    // that swapping arguments flips the sign bitwise.
    let phase = b1.re * b2.im - b1.im * b2.re;
    LogAmplitude::new(-0.5 * separation.norm_sqr(), phase)
}

/// `<alpha|alpha e^{i phi0}>` for real `alpha`, with the magnitude from `sin^2(phi0/2)`.
pub fn overlap_phase_shifted(alpha: f64, phi0: f64) -> LogAmplitude {
    let s = (0.5 * phi0).sin();
    LogAmplitude::new(-2.0 * alpha * alpha * s * s, alpha * alpha * phi0.sin())
}

/// Precomputed pieces of `<R(theta) S(zeta) gamma | . >`.
///
/// Uses `S(zeta)|gamma> = D(mu) S(zeta)|0>` with `mu = gamma (cosh x - e^{i varphi} sinh x)`, so
/// `<S gamma | beta> = exp(i Im(mu^* beta)) <S 0 | beta - mu>` and the Gaussian part only sees the
/// small difference `beta - mu`.
#[derive(Debug, Clone, Copy)]
pub struct SqueezedKernel {
    half_log_sech: f64,
    tanh_conj_phase: Complex64,
    mu: Complex64,
    unrotate: Complex64,
}

impl SqueezedKernel {
    pub fn new(target: &SqueezeTarget) -> Self {
        let x = target.x;
        Self {
            half_log_sech: -0.5 * x.cosh().ln(),
            tanh_conj_phase: Complex64::from_polar(x.tanh(), -target.varphi),
            mu: target.unrotated_mean(),
            unrotate: Complex64::from_polar(1.0, -target.theta),
        }
    }

    /// Complex log of `<T|beta>` (phase not wrapped).
    pub fn exponent(&self, beta: Complex64) -> Complex64 {
        let b = beta * self.unrotate;
        let d = b - self.mu;
        let phase = self.mu.re * b.im - self.mu.im * b.re;
        Complex64::new(self.half_log_sech, phase) - 0.5 * d.norm_sqr() - 0.5 * self.tanh_conj_phase * d * d
    }

    /// `log<T|beta + offset> - log<T|beta>`, formed without differencing large exponents.
    pub fn exponent_shift(&self, beta: Complex64, offset: Complex64) -> Complex64 {
        let b = beta * self.unrotate;
        let o = offset * self.unrotate;
        let d = b - self.mu;
        let phase = self.mu.re * o.im - self.mu.im * o.re;
        let gauss = 2.0 * (d.conj() * o).re + o.norm_sqr();
        Complex64::new(-0.5 * gauss, phase) - 0.5 * self.tanh_conj_phase * o * (2.0 * d + o)
    }
}

fn check_envelope(b: CoherentLabel) -> Result<()> {
    let n = b.mean_photon_number();
    if n > PRECISION_ENVELOPE {
        return Err(Error::Precision(format!(
            "|beta|^2 = {n:e} exceeds the trusted envelope {PRECISION_ENVELOPE:e}"
        )));
    }
    Ok(())
}

/// `<R(theta) S(zeta) gamma | b>`.
pub fn overlap_squeezed_coherent(target: &SqueezeTarget, b: CoherentLabel) -> Result<LogAmplitude> {
    check_envelope(b)?;
    if target.gamma * target.gamma > PRECISION_ENVELOPE {
        return Err(Error::Precision(format!(
            "gamma^2 = {:e} exceeds the trusted envelope",
            target.gamma * target.gamma
        )));
    }
    Ok(LogAmplitude::from_exponent(SqueezedKernel::new(target).exponent(b.0)))
}

/// Complex log of the momentum wavefunction `<p|beta>`.
pub fn quadrature_log_wavefunction(beta: Complex64, p: f64) -> Complex64 {
    let xm = QuadratureConvention::mean_x(beta);
    let pm = QuadratureConvention::mean_p(beta);
    let dp = p - pm;
    Complex64::new(-0.25 * PI.ln() - 0.5 * dp * dp, -xm * p + 0.5 * xm * pm)
}

/// `log<p|beta + offset> - log<p|beta>`.
pub(crate) fn quadrature_log_shift(beta: Complex64, offset: Complex64, p: f64) -> Complex64 {
    let pm = QuadratureConvention::mean_p(beta);
    let dpm = SQRT_2 * offset.im;
    let dxm = SQRT_2 * offset.re;
    // x_mean * p_mean = Im(beta^2); its change is Im(offset (2 beta + offset)).
    let dprod = (offset * (2.0 * beta + offset)).im;
    Complex64::new(dpm * (2.0 * (p - pm) - dpm) * 0.5, -dxm * p + 0.5 * dprod)
}

/// `<p|b>` for a coherent state.
pub fn quadrature_wavefunction_coherent(b: CoherentLabel, p: f64) -> Result<Complex64> {
    if !p.is_finite() {
        return Err(Error::Domain("non-finite quadrature value".into()));
    }
    Ok(quadrature_log_wavefunction(b.0, p).exp())
}

/// Mean photon number of `R(theta) S(zeta) |gamma>`; independent of `theta`.
pub fn mean_photon_squeezed(target: &SqueezeTarget) -> f64 {
    let sh = target.x.sinh();
    target.gamma * target.gamma * displacement_gain(target.x, target.varphi) + sh * sh
}

/// `|cosh x - e^{i varphi} sinh x|^2 = cosh 2x - sinh 2x cos varphi`.
fn displacement_gain(x: f64, varphi: f64) -> f64 {
    (2.0 * x).cosh() - (2.0 * x).sinh() * varphi.cos()
}

/// The `gamma >= 0` giving mean photon number `nbar` at squeezing `x e^{i varphi}`.
pub fn gamma_for_photon_number(x: f64, varphi: f64, nbar: f64) -> Result<f64> {
    if !(x.is_finite() && varphi.is_finite() && nbar.is_finite()) || x < 0.0 {
        return Err(Error::Domain("gamma_for_photon_number needs finite x >= 0".into()));
    }
    let sh = x.sinh();
    let floor = sh * sh;
    if nbar < floor {
        return Err(Error::Infeasible { nbar, floor });
    }
    Ok(((nbar - floor) / displacement_gain(x, varphi)).sqrt())
}

/// Squeezing in decibels, `10 log10(e^{2x})`.
pub fn squeeze_db(x: f64) -> f64 {
    20.0 * x / LN_10
}

fn photon_energy(wavelength: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / wavelength
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::Domain(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

/// Optical power (W) carried by a photon flux (1/s) at a vacuum wavelength (m).
pub fn photon_flux_power(flux: f64, wavelength: f64) -> Result<f64> {
    check_positive("photon flux", flux)?;
    check_positive("wavelength", wavelength)?;
    Ok(flux * photon_energy(wavelength))
}

/// Photon flux (1/s) for an optical power (W) at a vacuum wavelength (m).
pub fn power_photon_flux(power: f64, wavelength: f64) -> Result<f64> {
    check_positive("power", power)?;
    check_positive("wavelength", wavelength)?;
    Ok(power / photon_energy(wavelength))
}

/// Peak power of a pulse holding `photons` photons over `duration` seconds.
pub fn pulse_peak_power(photons: f64, duration: f64, wavelength: f64) -> Result<f64> {
    check_positive("photon number", photons)?;
    check_positive("pulse duration", duration)?;
    photon_flux_power(photons / duration, wavelength)
}
