//! End-to-end check of the fidelity maximizer: a brute-force grid search over the Fock-space
//! oracle must find nothing better.

use std::f64::consts::{FRAC_PI_2, PI};

use kerr_squeeze::amplitude::SqueezeTarget;
use kerr_squeeze::estimator::{linear_grid, maximize_fidelity};
use kerr_squeeze::fock::{self, FockVector, DEFAULT_CUTOFF};
use kerr_squeeze::interferometer::{build_cat, Compensation, InterferometerConfig};
use kerr_squeeze::optimize::{nelder_mead, NelderMeadOptions};
use rayon::prelude::*;

const ALPHA: f64 = 2.0;
const PHI0: f64 = 0.05;

fn oracle_fidelity(psi: &FockVector, x: f64, varphi: f64, theta: f64) -> f64 {
    let Ok(target) = SqueezeTarget::with_photon_number(x, varphi, theta, ALPHA * ALPHA) else {
        return 0.0;
    };
    let tv = fock::squeezed_by_recursion(&target, DEFAULT_CUTOFF);
    if tv.tail_mass() > 1e-14 {
        return 0.0;
    }
    fock::overlap_fock(&tv, psi).unwrap().norm()
}

/// Best point of a `points^3` grid over the box `lo..hi`.
fn grid_search(psi: &FockVector, lo: [f64; 3], hi: [f64; 3], points: usize) -> ([f64; 3], f64) {
    let axes: Vec<Vec<f64>> = (0..3).map(|k| linear_grid(lo[k], hi[k], points)).collect();
    axes[0]
        .par_iter()
        .map(|&x| {
            let mut best = ([x, 0.0, 0.0], f64::NEG_INFINITY);
            for &varphi in &axes[1] {
                for &theta in &axes[2] {
                    let f = oracle_fidelity(psi, x, varphi, theta);
                    if f > best.1 {
                        best = ([x, varphi, theta], f);
                    }
                }
            }
            best
        })
        .reduce(|| ([0.0; 3], f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
}

fn check(t: f64) {
    let cfg = InterferometerConfig::new(ALPHA, PHI0, t, Compensation::Fixed(0.0)).unwrap();
    let cat = build_cat(&cfg).unwrap();
    let v1 = fock::coherent_fock(cat.beta1(), DEFAULT_CUTOFF).unwrap();
    let v2 = fock::coherent_fock(cat.beta2(), DEFAULT_CUTOFF).unwrap();
    let psi = FockVector::superpose(cat.c1(), &v1, cat.c2(), &v2).unwrap();

    let (mut best, mut f) = grid_search(&psi, [0.0, 0.0, -FRAC_PI_2], [1.0, 2.0 * PI, FRAC_PI_2], 100);
    let refined = nelder_mead(
        |p| -oracle_fidelity(&psi, p[0].abs(), p[1], p[2]),
        &best,
        &[0.01, 2.0 * PI / 99.0, PI / 99.0],
        &NelderMeadOptions::default(),
    );
    if -refined.f > f {
        f = -refined.f;
        best = [refined.x[0].abs(), refined.x[1], refined.x[2]];
    }

    let est = maximize_fidelity(&cfg).unwrap();
    assert!(
        (est.fidelity - f).abs() < 1e-6,
        "t={t}: estimator {} vs grid {f} at {best:?}",
        est.fidelity
    );
    let free = est.unconstrained.unwrap();
    assert!(
        (free.fidelity - f).abs() < 1e-6,
        "t={t}: free {} vs grid {f}",
        free.fidelity
    );
    let oracle_at_estimate = oracle_fidelity(&psi, est.x_est, est.varphi_est, est.theta_est);
    assert!((oracle_at_estimate - est.fidelity).abs() < 1e-8);
}

#[test]
fn estimator_matches_exhaustive_oracle_search() {
    for t in [0.75, 0.9] {
        check(t);
    }
}
