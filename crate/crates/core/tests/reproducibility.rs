use std::fs;

use relaxtr_core::experiments::{run_all, ExperimentConfig};

#[test]
fn reports_and_csvs_are_bit_identical_across_runs() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let reports: Vec<_> = dirs
        .iter()
        .map(|d| {
            let cfg = ExperimentConfig::from_toml_str(
                "",
                &[format!("out_dir={:?}", d.path().display().to_string())],
            )
            .unwrap();
            run_all(&cfg).unwrap()
        })
        .collect();
    assert!(reports[0].passed());
    assert_eq!(reports[0].entries, reports[1].entries);
    assert_eq!(reports[0].csv_paths.len(), reports[1].csv_paths.len());
    for (a, b) in reports[0].csv_paths.iter().zip(&reports[1].csv_paths) {
        assert_eq!(a.file_name(), b.file_name());
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "{}", a.display());
    }
}

#[test]
fn tolerances_are_echoed() {
    let d = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml_str(
        "tol_reconstruction = 0.03",
        &[format!("out_dir={:?}", d.path().display().to_string())],
    )
    .unwrap();
    let text = relaxtr_core::experiments::run_reconstruction(&cfg).unwrap().render();
    let tol: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("linf_vs_c_phi.tolerance="))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(tol, 0.03);
}
