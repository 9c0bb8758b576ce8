//! Acceptance criteria 1-10. Each test prints one `criterion N: PASS|FAIL`
//! line with the measured values, then asserts.

use std::time::{Duration, Instant};

use relaxtr_core::experiments::{
    growth_orders, reconstruct, resolution_width, run_kappa_sweep, run_resolution_study,
    ExperimentConfig, PUBLISHED_RESOLUTION_M,
};
use relaxtr_core::spectral::{cubic_residual, log_grid, vieta_residuals};
use relaxtr_core::transform::{
    apply_multiplier, gaussian_phantom, propdelta_check, relative_l2_on, relative_linf_on,
    time_reversal_image,
};
use relaxtr_core::{
    amplitudes, cardano_roots, dc_constant, derive_medium, image_multiplier, solve_vandermonde,
    GridSpec, InteriorRegion, Medium, RawParams,
};

fn water() -> Medium {
    derive_medium(&RawParams::WATER).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn report(n: u32, ok: bool, elapsed: Duration, limit: Duration, detail: String) {
    let within = elapsed <= limit;
    println!(
        "criterion {n}: {} | {detail} | runtime {:.3}s (limit {}s)",
        if ok && within { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(ok, "criterion {n} failed: {detail}");
    assert!(within, "criterion {n} exceeded its runtime limit");
}

fn out_config(extra: &[&str]) -> (tempfile::TempDir, ExperimentConfig) {
    let dir = tempfile::tempdir().unwrap();
    let mut o: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
    o.push(format!("out_dir={:?}", dir.path().display().to_string()));
    let cfg = ExperimentConfig::from_toml_str("", &o).unwrap();
    (dir, cfg)
}

#[test]
fn criterion_01_water_constants() {
    let start = Instant::now();
    let m = water();
    let far = cardano_roots(&m, 1e3 * m.k_c()).unwrap();
    let d_tau0 = rel(m.tau0(), 4.7e-10);
    let d_l0 = rel(far.lambda0.re, 1e9);
    let d_mu = rel(far.mu.re, 5.625e8);
    let ok = d_tau0 <= 0.01 && d_l0 <= 0.005 && d_mu <= 0.005;
    report(
        1,
        ok,
        start.elapsed(),
        Duration::from_secs(1),
        format!(
            "tau0={:.6e} (dev {d_tau0:.2e}, tol 1e-2) lambda0={:.6e} (dev {d_l0:.2e}, tol 5e-3) mu={:.6e} (dev {d_mu:.2e}, tol 5e-3)",
            m.tau0(),
            far.lambda0.re,
            far.mu.re
        ),
    );
}

#[test]
fn criterion_02_dc_constant() {
    let start = Instant::now();
    let m = water();
    let c = dc_constant(&m);
    let formula = 2.0 * (1.0 - m.tau1() / m.tau0()).powi(2) + 1.0;
    let at_zero = image_multiplier(&m, 0.0, 1e-3, false).unwrap();
    let ok = rel(c, formula) <= 1e-14 && (c - 3.5313).abs() <= 5e-5 && rel(c, 3.5) <= 0.015;
    report(
        2,
        ok,
        start.elapsed(),
        Duration::from_secs(1),
        format!("C={c:.6} formula={formula:.6} vs 3.5 dev {:.2e}; multiplier(0) without zeta3 = {at_zero:.6}", rel(c, 3.5)),
    );
}

#[test]
fn criterion_03_root_amplitude_properties() {
    let start = Instant::now();
    let m = water();
    let (mut res, mut vieta, mut moment, mut paths) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut neg_conj, mut conj, mut a0_im) = (0.0f64, 0.0f64, 0.0f64);
    for k in log_grid(1e-3 * m.k_c(), 1e3 * m.k_c(), 200) {
        let r = cardano_roots(&m, k).unwrap();
        for l in r.lambdas() {
            res = res.max(cubic_residual(&m, k, l));
        }
        for v in vieta_residuals(&m, &r) {
            vieta = vieta.max(v);
        }
        let a = amplitudes(&r, &m).unwrap();
        let v = solve_vandermonde(&r, &m).unwrap();
        for x in a.moment_residuals(&r, &m) {
            moment = moment.max(x);
        }
        for (x, y) in a.as_array().iter().zip(v.as_array()) {
            paths = paths.max((x - y).norm() / y.norm());
        }
        let n1 = a.a1_coef.norm();
        neg_conj = neg_conj.max((a.a2_coef + a.a1_coef.conj()).norm() / n1);
        conj = conj.max((a.a2_coef - a.a1_coef.conj()).norm() / n1);
        a0_im = a0_im.max(a.a0_coef.im.abs() / a.a0_coef.norm());
    }
    let ok = res <= 1e-9
        && vieta <= 1e-9
        && moment <= 1e-9
        && paths <= 1e-8
        && neg_conj <= 1e-10
        && a0_im <= 1e-10;
    report(
        3,
        ok,
        start.elapsed(),
        Duration::from_secs(5),
        format!(
            "cubic {res:.2e} vieta {vieta:.2e} moments {moment:.2e} closed-vs-vandermonde {paths:.2e} \
             |A2+conj(A1)|/|A1| {neg_conj:.2e} (tol 1e-10) |A2-conj(A1)|/|A1| {conj:.2e} Im(A0) {a0_im:.2e}"
        ),
    );
}

#[test]
fn criterion_04_dissipation_free_identity() {
    let start = Instant::now();
    let m = Medium::nondimensional(1.0).unwrap();
    let g = GridSpec::new(1, 4096, 64.0).unwrap();
    let phi = gaussian_phantom(&g, 0.5).unwrap();
    let region = InteriorRegion::new(2.0).unwrap();
    let t = 4.0;
    region.check_travel_time(m.c0(), t).unwrap();
    let image = time_reversal_image(&m, &phi, t, true).unwrap();
    let err = relative_linf_on(&image, &phi, &region.mask(&g));
    report(
        4,
        err <= 1e-3,
        start.elapsed(),
        Duration::from_secs(10),
        format!("L-inf error on region {err:.3e} (tol 1e-3)"),
    );
}

#[test]
fn criterion_05_propdelta() {
    let start = Instant::now();
    let m = Medium::nondimensional(1.0).unwrap();
    let g = GridSpec::new(1, 4096, 64.0).unwrap();
    let phi = gaussian_phantom(&g, 0.5).unwrap();
    let region = InteriorRegion::new(2.0).unwrap();
    let full = propdelta_check(&phi, &m, 8.0, &region).unwrap();
    let half = propdelta_check(&phi, &m, 4.0, &region).unwrap();
    let ok = full.residual <= 1e-3 && half.residual <= 1e-3 && !full.aliasing && !half.aliasing;
    report(
        5,
        ok,
        start.elapsed(),
        Duration::from_secs(10),
        format!(
            "residual T=8 {:.3e}, T/2=4 {:.3e} (tol 1e-3)",
            full.residual, half.residual
        ),
    );
}

#[test]
fn criterion_06_water_reconstruction() {
    let start = Instant::now();
    let m = water();
    let g = GridSpec::new(1, 1 << 17, 8.0).unwrap();
    let t = 4.0 * 0.5 / m.c_inf();
    let e = reconstruct(&m, &g, resolution_width(&m), t).unwrap();
    report(
        6,
        e.linf_vs_c_phi <= 0.02,
        start.elapsed(),
        Duration::from_secs(30),
        format!(
            "L-inf error vs {:.5}*phi on support {:.3e} (tol 2e-2)",
            e.dc, e.linf_vs_c_phi
        ),
    );
}

#[test]
fn criterion_07_kappa_sweep() {
    let start = Instant::now();
    let (_dir, cfg) = out_config(&[]);
    let r = run_kappa_sweep(&cfg).unwrap();
    let errors: Vec<String> = (0..=5)
        .map(|j| format!("{:.3e}", r.value(&format!("error_j{j}")).unwrap()))
        .collect();
    report(
        7,
        r.passed(),
        start.elapsed(),
        Duration::from_secs(120),
        format!("errors vs phi [{}] (final tol 5e-3, strictly decreasing)", errors.join(", ")),
    );
}

#[test]
fn criterion_08_zeta3_negligibility() {
    let start = Instant::now();
    let g = GridSpec::new(1, 4096, 64.0).unwrap();
    let phi = gaussian_phantom(&g, 0.01).unwrap();
    let region = InteriorRegion::new(1.0).unwrap();
    let mask = region.mask(&g);
    let all = vec![true; g.len()];
    let t = 4.0;

    let m = Medium::nondimensional(0.9999).unwrap();
    let mut pipeline_dev: f64 = 0.0;
    let mut images = Vec::new();
    for include in [false, true] {
        let a = time_reversal_image(&m, &phi, t, include).unwrap();
        let b = apply_multiplier(&phi, |k| image_multiplier(&m, k, t, include)).unwrap();
        pipeline_dev = pipeline_dev.max(relative_l2_on(&a, &b, &all));
        images.push(a);
    }
    let zeta3_change = relative_l2_on(&images[1], &images[0], &mask);

    // same geometry at the water ratio, recorded only
    let w = Medium::nondimensional(1.0 / 2.125).unwrap();
    let water_change = match (
        time_reversal_image(&w, &phi, t, false),
        time_reversal_image(&w, &phi, t, true),
    ) {
        (Ok(a), Ok(b)) => format!("{:.3e}", relative_l2_on(&b, &a, &mask)),
        (_, Err(e)) | (Err(e), _) => format!("not representable ({e})"),
    };

    let ok = pipeline_dev <= 1e-6 && zeta3_change <= 1e-3;
    report(
        8,
        ok,
        start.elapsed(),
        Duration::from_secs(30),
        format!(
            "ratio 0.9999: pipeline vs multiplier L2 {pipeline_dev:.3e} (tol 1e-6), zeta3 effect on region {zeta3_change:.3e} (tol 1e-3); \
             water ratio zeta3 effect (informational) {water_change}"
        ),
    );
}

#[test]
fn criterion_09_growth_orders() {
    let start = Instant::now();
    let m = water();
    let t = 4.0 * 0.5 / m.c_inf();
    let a = growth_orders(&m, t, 1).unwrap();
    let b = growth_orders(&m, t, 1).unwrap();
    let values = [a.a0_k2, a.a1_k, a.zeta1, a.zeta2];
    let again = [b.a0_k2, b.a1_k, b.zeta1, b.zeta2];
    let finite = values.iter().all(|v| v.is_finite());
    let stable = values.iter().zip(&again).all(|(x, y)| rel(*x, *y) <= 1e-6);
    report(
        9,
        finite && stable,
        start.elapsed(),
        Duration::from_secs(5),
        format!(
            "sup|A0|k^2={:.6e} sup|A1|k={:.6e} sup|zeta1|={:.6e} sup|zeta2|={:.6e} stable={stable}",
            a.a0_k2, a.a1_k, a.zeta1, a.zeta2
        ),
    );
}

#[test]
fn criterion_10_resolution_study() {
    let start = Instant::now();
    let (_dir, cfg) = out_config(&[]);
    let r = run_resolution_study(&cfg).unwrap();
    let sigma = r.value("sigma").unwrap();
    report(
        10,
        r.passed(),
        start.elapsed(),
        Duration::from_secs(1),
        format!(
            "D0={:.4e} m^2 sigma={:.4e} m, published {:.1e} m, factor {:.2}",
            r.value("D0").unwrap(),
            sigma,
            PUBLISHED_RESOLUTION_M,
            sigma / PUBLISHED_RESOLUTION_M
        ),
    );
}
