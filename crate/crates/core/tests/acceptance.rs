//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::process::{Command, ExitCode};
use std::time::Instant;

use kerr_squeeze::amplitude::{
    overlap_phase_shifted, overlap_squeezed_coherent, photon_flux_power, pulse_peak_power, CoherentLabel,
    QuadratureConvention, SqueezeTarget,
};
use kerr_squeeze::estimator::{
    classify_phase_squeezed, find_transmissivity, linear_grid, maximize_fidelity, sweep, EstimatorOptions,
};
use kerr_squeeze::fock::{self, FockVector, Observable, DEFAULT_CUTOFF};
use kerr_squeeze::harness::{strip_timestamp, Experiment};
use kerr_squeeze::interferometer::{
    build_cat, fidelity, min_quadrature_variance, quadrature_density, quadrature_moments, Compensation,
    InterferometerConfig,
};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Collects failed checks so a criterion reports all of them at once.
#[derive(Default)]
struct Checks(Vec<String>);

impl Checks {
    fn abs(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        let within = (got - want).abs() <= tol;
        if !within {
            self.0
                .push(format!("{what} = {got:.6e}, want {want:.6e} +/- {tol:.1e}"));
        }
    }

    fn rel(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        let within = (got - want).abs() <= tol * want.abs();
        if !within {
            self.0
                .push(format!("{what} = {got:.6e}, want {want:.6e} +/- {:.0}%", tol * 100.0));
        }
    }

    fn holds(&mut self, what: &str, ok: bool) {
        if !ok {
            self.0.push(what.to_string());
        }
    }

    fn finish(self, summary: String) -> Outcome {
        if self.0.is_empty() {
            Ok(summary)
        } else {
            Err(self.0.join("; "))
        }
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

const ALPHA: f64 = 316.227_766_016_837_94;

fn table_config(t: f64) -> InterferometerConfig {
    InterferometerConfig::new(ALPHA, 2.0 * PI * 1e-5, t, Compensation::Fixed(0.0)).unwrap()
}

fn table1() -> Outcome {
    let mut c = Checks::default();
    // t, F, F tol, x, theta, theta rel tol, P, P rel tol
    let rows = [
        (FRAC_1_SQRT_2, 0.69, 0.005, 0.55, 2.61e-3, 0.02, 9.87e-5, 0.01),
        (0.717, 0.99, 0.002, 0.24, 1.60e-3, 0.05, 2.95e-4, 0.05),
        (0.724, 0.999, 0.001, 0.13, 1.15e-3, 0.05, 6.75e-4, 0.05),
    ];
    let mut summary = Vec::new();
    for (t, f, f_tol, x, theta, theta_tol, p, p_tol) in rows {
        let est = maximize_fidelity(&table_config(t)).map_err(fail)?;
        c.abs(&format!("F(t={t:.4})"), est.fidelity, f, f_tol);
        c.abs(&format!("x(t={t:.4})"), est.x_est, x, 0.01);
        c.rel(&format!("theta(t={t:.4})"), est.theta_est, theta, theta_tol);
        c.rel(&format!("P(t={t:.4})"), est.p_suc, p, p_tol);
        summary.push(format!(
            "t={t:.4}: F={:.4} x={:.3} P={:.3e}",
            est.fidelity, est.x_est, est.p_suc
        ));
    }
    let est = maximize_fidelity(&table_config(1.0)).map_err(fail)?;
    c.holds("F(t=1) >= 1 - 1e-10", est.fidelity >= 1.0 - 1e-10);
    c.holds("x(t=1) < 1e-6", est.x_est < 1e-6);
    c.abs("theta(t=1)", est.theta_est, 2.0 * PI * 1e-5, 1e-9);
    c.holds("P(t=1) == 0.5", est.p_suc == 0.5);
    c.finish(summary.join(", "))
}

fn feasibility() -> Outcome {
    let mut c = Checks::default();
    let alpha = 3e6f64.sqrt();
    let mut summary = Vec::new();
    for (target, t, x, db, theta, p) in [
        (0.99, 0.70719, 0.24, Some(2.08), 2.88e-4, 2.19e-8),
        (0.999, 0.70725, 0.13, None, 2.06e-4, 5.06e-8),
    ] {
        let (t_found, est) = find_transmissivity(target, alpha, 1e-7, Compensation::Auto).map_err(fail)?;
        c.abs(&format!("t(F={target})"), t_found, t, 5e-5);
        c.abs(&format!("x(F={target})"), est.x_est, x, 0.01);
        if let Some(db) = db {
            c.abs(&format!("dB(F={target})"), est.squeezing_db, db, 0.09);
        }
        c.rel(&format!("theta(F={target})"), est.theta_est, theta, 0.05);
        c.rel(&format!("P(F={target})"), est.p_suc, p, 0.05);
        summary.push(format!("F={target}: t={t_found:.5} P={:.3e}", est.p_suc));
    }
    c.finish(summary.join(", "))
}

fn working_point() -> Outcome {
    let mut c = Checks::default();
    let (t, est) = find_transmissivity(0.99, ALPHA, 0.1 / ALPHA, Compensation::Auto).map_err(fail)?;
    c.abs("t", t, 0.753, 1e-3);
    c.abs("x", est.x_est, 0.24, 0.01);
    c.rel("P", est.p_suc, 7.08e-3, 0.05);
    c.finish(format!("t={t:.5} x={:.3} P={:.3e}", est.x_est, est.p_suc))
}

fn no_squeezing() -> Outcome {
    let mut c = Checks::default();
    let phi0 = 1.2566e-2;
    let q = overlap_phase_shifted(ALPHA, phi0).magnitude();
    c.rel("overlap magnitude", q, 3.72e-4, 0.02);
    let template = InterferometerConfig::new(ALPHA, phi0, 1.0, Compensation::Auto).map_err(fail)?;
    let rows = sweep(
        &template,
        &linear_grid(FRAC_1_SQRT_2, 1.0, 50),
        &EstimatorOptions::default(),
    )
    .map_err(fail)?;
    let mut squeezed = 0;
    for row in &rows {
        match row
            .estimate
            .as_ref()
            .map_err(fail)
            .and_then(|e| classify_phase_squeezed(e).map_err(fail))
        {
            Ok(false) => {}
            Ok(true) => squeezed += 1,
            Err(e) => c.holds(&format!("t={}: {e}", row.t), false),
        }
    }
    c.holds(&format!("{squeezed} grid points classified as squeezed"), squeezed == 0);
    c.finish(format!("overlap {q:.3e}, 0/{} points squeezed", rows.len()))
}

fn power() -> Outcome {
    let mut c = Checks::default();
    let a = photon_flux_power(5e18, 802e-9).map_err(fail)?;
    let b = photon_flux_power(1e6, 860e-9).map_err(fail)?;
    let d = photon_flux_power(8.6e14, 1064e-9).map_err(fail)?;
    let e = pulse_peak_power(3e6, 0.6e-12, 802e-9).map_err(fail)?;
    c.rel("5e18/s at 802 nm", a, 1.24, 0.01);
    c.rel("1e6/s at 860 nm", b, 0.23e-12, 0.05);
    c.rel("8.6e14/s at 1064 nm", d, 0.16e-3, 0.03);
    c.rel("3e6 photons in 0.6 ps at 802 nm", e, 1.24, 0.02);
    c.finish(format!("{a:.3} W, {b:.3e} W, {d:.3e} W, peak {e:.3} W"))
}

#[derive(Debug, Clone)]
struct Instance {
    cfg: InterferometerConfig,
    target: SqueezeTarget,
    label: Complex64,
    p: f64,
}

fn instance() -> impl Strategy<Value = Instance> {
    (
        (0.2..3.0f64, 0.0..PI, FRAC_1_SQRT_2..1.0f64, -PI..PI, any::<bool>()),
        (0.0..0.6f64, 0.0..2.0 * PI, -PI..PI, 0.0..2.0f64),
        (0.0..3.0f64, 0.0..2.0 * PI, -5.0..5.0f64),
    )
        .prop_map(
            |((alpha, phi0, t, delta, auto), (x, varphi, theta, gamma), (r, a, p))| Instance {
                cfg: InterferometerConfig::new(
                    alpha,
                    phi0,
                    t,
                    if auto {
                        Compensation::Auto
                    } else {
                        Compensation::Fixed(delta)
                    },
                )
                .unwrap(),
                target: SqueezeTarget::new(x, varphi, theta, gamma).unwrap(),
                label: Complex64::from_polar(r, a),
                p,
            },
        )
}

/// Largest closed-form vs oracle discrepancy for one instance, and the dual-path discrepancy.
fn oracle_discrepancy(inst: &Instance) -> Result<(f64, f64), String> {
    let exp_route = fock::squeezed_coherent_fock(&inst.target, DEFAULT_CUTOFF).map_err(fail)?;
    let rec_route = fock::squeezed_by_recursion(&inst.target, DEFAULT_CUTOFF);
    let dual = exp_route
        .coeffs()
        .iter()
        .zip(rec_route.coeffs())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    let mut worst = 0.0f64;
    let vb = fock::coherent_fock(inst.label, DEFAULT_CUTOFF).map_err(fail)?;
    let closed = overlap_squeezed_coherent(&inst.target, CoherentLabel::new(inst.label).map_err(fail)?)
        .and_then(|o| o.to_complex())
        .map_err(fail)?;
    worst = worst.max((closed - fock::overlap_fock(&exp_route, &vb).map_err(fail)?).norm());

    let Ok(cat) = build_cat(&inst.cfg) else {
        return Ok((worst, dual));
    };
    let v1 = fock::coherent_fock(cat.beta1(), DEFAULT_CUTOFF).map_err(fail)?;
    let v2 = fock::coherent_fock(cat.beta2(), DEFAULT_CUTOFF).map_err(fail)?;
    let psi = FockVector::superpose(cat.c1(), &v1, cat.c2(), &v2).map_err(fail)?;
    let f = fidelity(&cat, &inst.target).map_err(fail)?;
    worst = worst.max((f - fock::overlap_fock(&exp_route, &psi).map_err(fail)?.norm()).abs());
    worst = worst.max((quadrature_density(&cat, inst.p) - fock::quadrature_density_fock(&psi, inst.p)).abs());

    let m = quadrature_moments(&cat);
    let a = fock::expectation_fock(&psi, Observable::Annihilation);
    let a2 = fock::expectation_fock(&psi, Observable::AnnihilationSquared) - a * a;
    let n = fock::expectation_fock(&psi, Observable::Number).re - a.norm_sqr();
    for (closed, oracle) in [
        (m.mean_x, SQRT_2 * a.re),
        (m.mean_p, SQRT_2 * a.im),
        (m.var_x, 0.5 + n + a2.re),
        (m.var_p, 0.5 + n - a2.re),
        (m.cov_xp, a2.im),
    ] {
        worst = worst.max((closed - oracle).abs());
    }
    Ok((worst, dual))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let config = Config {
        cases: 200,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let worst = std::cell::Cell::new((0.0f64, 0.0f64));
    runner
        .run(&instance(), |inst| {
            let (w, d) = oracle_discrepancy(&inst).map_err(TestCaseError::fail)?;
            let (bw, bd) = worst.get();
            worst.set((bw.max(w), bd.max(d)));
            prop_assert!(w < 1e-8, "closed form vs oracle: {w:.3e}");
            prop_assert!(d < 1e-10, "dual construction paths: {d:.3e}");
            Ok(())
        })
        .map_err(fail)?;
    let elapsed = start.elapsed().as_secs_f64();
    let (w, d) = worst.get();
    let mut c = Checks::default();
    c.holds(&format!("runtime {elapsed:.1}s exceeds 120s"), elapsed < 120.0);
    c.finish(format!(
        "200 instances, worst {w:.2e}, dual paths {d:.2e}, {elapsed:.1}s"
    ))
}

fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> f64 {
    let h = (hi - lo) / (points - 1) as f64;
    let inner: f64 = (1..points - 1).map(|i| f(lo + h * i as f64)).sum();
    h * (inner + 0.5 * (f(lo) + f(hi)))
}

fn structural() -> Outcome {
    let mut c = Checks::default();
    let w = 12.0 * QuadratureConvention::VACUUM_VARIANCE.sqrt();
    for t in linear_grid(FRAC_1_SQRT_2, 1.0, 50) {
        let cat = build_cat(&table_config(t)).map_err(fail)?;
        c.abs(&format!("cat norm t={t:.4}"), cat.normalization_check(), 1.0, 1e-12);
    }
    for t in [FRAC_1_SQRT_2, 0.717, 0.724, 1.0] {
        let cat = build_cat(&table_config(t)).map_err(fail)?;
        let centre = QuadratureConvention::mean_p(cat.beta2());
        let total = integrate(|p| quadrature_density(&cat, p), centre - w, centre + w, 4001);
        c.abs(&format!("density integral t={t:.4}"), total, 1.0, 1e-8);
    }

    let template = table_config(1.0);
    let rows = sweep(
        &template,
        &linear_grid(FRAC_1_SQRT_2, 1.0, 50),
        &EstimatorOptions::default(),
    )
    .map_err(fail)?;
    let mut last = f64::NEG_INFINITY;
    let mut worst_phase = 0.0f64;
    for row in &rows {
        let est = row.estimate.as_ref().map_err(fail)?;
        c.holds(&format!("F drops at t={:.5}", row.t), est.fidelity >= last);
        last = est.fidelity;
        if est.x_est >= 0.01 {
            let off = (est.varphi_est - PI + PI).rem_euclid(2.0 * PI) - PI;
            worst_phase = worst_phase.max(off.abs());
        }
    }
    c.holds(&format!("varphi_est off pi by {worst_phase:.2e}"), worst_phase < 1e-3);

    let (v717, _) = min_quadrature_variance(&build_cat(&table_config(0.717)).map_err(fail)?);
    let (v1, _) = min_quadrature_variance(&build_cat(&table_config(1.0)).map_err(fail)?);
    c.holds(&format!("min variance {v717} at t=0.717 not below 0.5"), v717 < 0.5);
    c.abs("min variance at t=1", v1, 0.5, 1e-10);

    // shape: two equal peaks around a node when balanced and compensated; one Gaussian at t=1
    for phi0 in [2.0 * PI * 1e-5, 1.2566e-2] {
        let cat = build_cat(&InterferometerConfig::new(ALPHA, phi0, FRAC_1_SQRT_2, Compensation::Auto).map_err(fail)?)
            .map_err(fail)?;
        let (p1, p2) = (
            QuadratureConvention::mean_p(cat.beta1()),
            QuadratureConvention::mean_p(cat.beta2()),
        );
        let grid = linear_grid(p1.min(p2) - 6.0, p1.max(p2) + 6.0, 2001);
        let density: Vec<f64> = grid.iter().map(|&p| quadrature_density(&cat, p)).collect();
        let peaks: Vec<usize> = (1..grid.len() - 1)
            .filter(|&i| density[i] > density[i - 1] && density[i] >= density[i + 1])
            .collect();
        let node = quadrature_density(&cat, 0.5 * (p1 + p2));
        let tallest = density.iter().cloned().fold(0.0, f64::max);
        c.holds(&format!("phi0={phi0}: {} peaks", peaks.len()), peaks.len() == 2);
        if peaks.len() == 2 {
            c.rel(
                &format!("phi0={phi0}: peak balance"),
                density[peaks[0]],
                density[peaks[1]],
                1e-3,
            );
        }
        c.holds(&format!("phi0={phi0}: no node ({node:.3e})"), node < 1e-6 * tallest);
    }
    let coherent = build_cat(&table_config(1.0)).map_err(fail)?;
    let centre = QuadratureConvention::mean_p(coherent.beta1());
    for dp in [-1.5f64, -0.5, 0.0, 0.7, 2.0] {
        let gaussian = (-dp * dp).exp() / PI.sqrt();
        c.abs(
            &format!("coherent density at {dp}"),
            quadrature_density(&coherent, centre + dp),
            gaussian,
            1e-12,
        );
    }

    let free = rows
        .iter()
        .filter_map(|r| r.estimate.as_ref().ok())
        .filter_map(|e| e.unconstrained.map(|u| u.fidelity - e.fidelity))
        .fold(0.0f64, f64::max);
    c.finish(format!(
        "50-point sweep monotone, varphi within {worst_phase:.1e} of pi, min var {v717:.4} at t=0.717, free-phase gain <= {free:.1e}"
    ))
}

fn determinism() -> Outcome {
    let mut c = Checks::default();
    let exe = env!("CARGO_BIN_EXE_kerr-squeeze");
    for experiment in Experiment::ALL {
        let mut args = vec![experiment.name()];
        if experiment == Experiment::FindT {
            args.extend(["--fidelity-target", "0.99"]);
        }
        for format in ["csv", "json"] {
            let render = || -> Result<String, String> {
                let out = Command::new(exe)
                    .args(&args)
                    .args(["--format", format])
                    .output()
                    .map_err(fail)?;
                if !out.status.success() {
                    return Err(String::from_utf8_lossy(&out.stderr).into_owned());
                }
                Ok(strip_timestamp(&String::from_utf8_lossy(&out.stdout)))
            };
            match (render(), render()) {
                (Ok(a), Ok(b)) => c.holds(&format!("{} {format} differs between runs", experiment.name()), a == b),
                (Err(e), _) | (_, Err(e)) => c.holds(&format!("{} {format}: {e}", experiment.name()), false),
            }
        }
    }
    c.finish(format!(
        "{} experiments x 2 formats byte-identical",
        Experiment::ALL.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("table1 reproduction", table1),
        ("feasibility reproduction", feasibility),
        ("alpha*phi0 = 0.1 working point", working_point),
        ("no-squeezing regime", no_squeezing),
        ("power conversions", power),
        ("oracle equivalence", oracle_equivalence),
        ("structural invariants", structural),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
