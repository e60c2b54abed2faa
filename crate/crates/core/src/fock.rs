//! Truncated number-basis oracle.
//!
//! Everything here is brute force and only valid at small amplitude. It exists so that the
//! closed forms in [`crate::amplitude`] and [`crate::interferometer`] can be checked against an
//! independent route before they are used at `|alpha|^2 ~ 10^6`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::amplitude::SqueezeTarget;
use crate::error::{Error, Result};

pub const DEFAULT_CUTOFF: usize = 100;
/// Largest coherent amplitude the oracle accepts.
pub const MAX_AMPLITUDE: f64 = 5.0;
const TAIL_TOLERANCE: f64 = 1e-14;
const NORM_TOLERANCE: f64 = 1e-12;
const PATH_TOLERANCE: f64 = 1e-10;

/// State vector in the number basis `|0>, ..., |cutoff>`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    coeffs: Vec<Complex64>,
}

/// Operators supported by [`expectation_fock`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Number,
    Annihilation,
    AnnihilationSquared,
}

impl FockVector {
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Domain("empty Fock vector".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn tail_mass(&self) -> f64 {
        self.coeffs[self.cutoff()].norm_sqr()
    }

    /// Normalized `c1 |v1> + c2 |v2>`.
    pub fn superpose(c1: Complex64, v1: &FockVector, c2: Complex64, v2: &FockVector) -> Result<Self> {
        if v1.cutoff() != v2.cutoff() {
            return Err(Error::CutoffMismatch(v1.cutoff(), v2.cutoff()));
        }
        let coeffs: Vec<Complex64> = v1.coeffs.iter().zip(&v2.coeffs).map(|(a, b)| c1 * a + c2 * b).collect();
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-150 {
            return Err(Error::DegeneratePostSelection { norm: norm * norm });
        }
        Ok(Self {
            coeffs: coeffs.into_iter().map(|c| c / norm).collect(),
        })
    }

    fn accept(self) -> Result<Self> {
        let tail = self.tail_mass();
        if tail.is_nan() || tail >= TAIL_TOLERANCE {
            return Err(Error::Truncation {
                cutoff: self.cutoff(),
                tail,
            });
        }
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Truncation {
                cutoff: self.cutoff(),
                tail: (norm - 1.0).abs(),
            });
        }
        Ok(self)
    }

    fn rotate(mut self, theta: f64) -> Self {
        for (n, c) in self.coeffs.iter_mut().enumerate() {
            *c *= Complex64::from_polar(1.0, theta * n as f64);
        }
        self
    }
}

fn check_amplitude(beta: Complex64, cutoff: usize) -> Result<()> {
    let mag = beta.norm();
    if !mag.is_finite() || mag > MAX_AMPLITUDE {
        return Err(Error::OracleRange(format!("|beta| = {mag} exceeds {MAX_AMPLITUDE}")));
    }
    if mag * mag > cutoff as f64 / 4.0 {
        return Err(Error::OracleRange(format!(
            "|beta|^2 = {} exceeds cutoff/4 = {}",
            mag * mag,
            cutoff as f64 / 4.0
        )));
    }
    Ok(())
}

/// `e^{-|beta|^2/2} beta^n / sqrt(n!)` by upward recursion.
pub fn coherent_fock(beta: Complex64, cutoff: usize) -> Result<FockVector> {
    check_amplitude(beta, cutoff)?;
    let mut coeffs = Vec::with_capacity(cutoff + 1);
    let mut c = Complex64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    coeffs.push(c);
    for n in 0..cutoff {
        c = c * beta / ((n + 1) as f64).sqrt();
        coeffs.push(c);
    }
    FockVector { coeffs }.accept()
}

/// `R(theta) S(zeta) |gamma>` built twice: by exponentiating the truncated squeeze generator and
/// by the two-term recursion that the state satisfies. The two must agree.
pub fn squeezed_coherent_fock(target: &SqueezeTarget, cutoff: usize) -> Result<FockVector> {
    if target.x() > 1.0 {
        return Err(Error::OracleRange(format!("x = {} exceeds 1", target.x())));
    }
    check_amplitude(Complex64::new(target.gamma(), 0.0), cutoff)?;
    let via_exp = squeezed_by_matrix_exponential(target, cutoff)?.accept()?;
    let via_rec = squeezed_by_recursion(target, cutoff);
    let diff = via_exp
        .coeffs
        .iter()
        .zip(&via_rec.coeffs)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if diff > PATH_TOLERANCE {
        return Err(Error::PathDisagreement { diff });
    }
    Ok(via_exp)
}

/// Matrix-exponential route. The generator is exponentiated on twice the requested space and
/// the result truncated, so the artificial boundary sits far out in the tail. Squeezing conserves
/// photon-number parity, so the even and odd blocks are exponentiated separately.
pub fn squeezed_by_matrix_exponential(target: &SqueezeTarget, cutoff: usize) -> Result<FockVector> {
    let dim = 2 * (cutoff + 1);
    let zeta = Complex64::from_polar(target.x(), target.varphi());
    let coherent = coherent_fock(Complex64::new(target.gamma(), 0.0), dim - 1)?;
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for parity in 0..2 {
        let index: Vec<usize> = (parity..dim).step_by(2).collect();
        let m = index.len();
        // G = (zeta^* a^2 - zeta a^dag^2) / 2 restricted to one parity
        let mut generator = DMatrix::<Complex64>::zeros(m, m);
        for k in 0..m.saturating_sub(1) {
            let n = index[k];
            let elem = (((n + 1) * (n + 2)) as f64).sqrt();
            generator[(k, k + 1)] = 0.5 * zeta.conj() * elem;
            generator[(k + 1, k)] = -0.5 * zeta * elem;
        }
        let v = nalgebra::DVector::from_iterator(m, index.iter().map(|&n| coherent.coeffs[n]));
        let block = generator.exp() * v;
        for (k, &n) in index.iter().enumerate() {
            out[n] = block[k];
        }
    }
    out.truncate(cutoff + 1);
    Ok(FockVector { coeffs: out }.rotate(target.theta()))
}

/// Recursion route: `D(mu) S(zeta)|0>` is annihilated by
/// `cosh x (a - mu) + e^{i varphi} sinh x (a^dag - mu^*)`.
pub fn squeezed_by_recursion(target: &SqueezeTarget, cutoff: usize) -> FockVector {
    let x = target.x();
    let (ch, sh) = (x.cosh(), x.sinh());
    let e = Complex64::from_polar(1.0, target.varphi());
    let mu = target.unrotated_mean();
    let kappa = mu * ch + mu.conj() * e * sh;
    let c0 = (1.0 / ch).sqrt() * (-0.5 * mu.norm_sqr() - 0.5 * e * x.tanh() * mu.conj() * mu.conj()).exp();
    let mut coeffs = Vec::with_capacity(cutoff + 1);
    coeffs.push(c0);
    if cutoff >= 1 {
        coeffs.push(kappa * c0 / ch);
    }
    for n in 1..cutoff {
        let next = (kappa * coeffs[n] - e * sh * (n as f64).sqrt() * coeffs[n - 1]) / (ch * ((n + 1) as f64).sqrt());
        coeffs.push(next);
    }
    FockVector { coeffs }.rotate(target.theta())
}

/// `sum_n conj(v1_n) v2_n`.
pub fn overlap_fock(v1: &FockVector, v2: &FockVector) -> Result<Complex64> {
    if v1.cutoff() != v2.cutoff() {
        return Err(Error::CutoffMismatch(v1.cutoff(), v2.cutoff()));
    }
    Ok(v1.coeffs.iter().zip(&v2.coeffs).map(|(a, b)| a.conj() * b).sum())
}

/// Orthonormal Hermite functions `psi_0(q) .. psi_cutoff(q)`.
pub fn hermite_functions(q: f64, cutoff: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(cutoff + 1);
    psi.push(PI.powf(-0.25) * (-0.5 * q * q).exp());
    if cutoff >= 1 {
        psi.push(std::f64::consts::SQRT_2 * q * psi[0]);
    }
    for n in 1..cutoff {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * q * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
        psi.push(next);
    }
    psi
}

/// `<p|v>` using `<p|n> = (-i)^n psi_n(p)`.
pub fn quadrature_wavefunction_fock(v: &FockVector, p: f64) -> Complex64 {
    let psi = hermite_functions(p, v.cutoff());
    const PHASES: [Complex64; 4] = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    v.coeffs
        .iter()
        .zip(psi)
        .enumerate()
        .map(|(n, (c, h))| c * PHASES[n % 4] * h)
        .sum()
}

/// `|<p|v>|^2`.
pub fn quadrature_density_fock(v: &FockVector, p: f64) -> f64 {
    quadrature_wavefunction_fock(v, p).norm_sqr()
}

/// `<v|O|v>` for number, `a` and `a^2`.
pub fn expectation_fock(v: &FockVector, which: Observable) -> Complex64 {
    let c = &v.coeffs;
    match which {
        Observable::Number => c
            .iter()
            .enumerate()
            .map(|(n, a)| Complex64::new(n as f64 * a.norm_sqr(), 0.0))
            .sum(),
        Observable::Annihilation => (0..c.len().saturating_sub(1))
            .map(|n| c[n].conj() * ((n + 1) as f64).sqrt() * c[n + 1])
            .sum(),
        Observable::AnnihilationSquared => (0..c.len().saturating_sub(2))
            .map(|n| c[n].conj() * (((n + 1) * (n + 2)) as f64).sqrt() * c[n + 2])
            .sum(),
    }
}
