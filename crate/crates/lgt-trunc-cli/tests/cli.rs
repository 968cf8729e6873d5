use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lgt-trunc"))
}

#[test]
fn presets_lists_all_names() {
    let out = bin().arg("presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "fig1", "fig2", "fig3", "fig4", "fig5", "fig6_7", "fig8", "table1", "table2", "eigenscan",
    ] {
        assert!(text.contains(name), "missing preset {name}");
    }
}

#[test]
fn unknown_preset_exits_2() {
    let out = bin()
        .args(["run", "--preset", "nosuch", "--out", "/tmp/lgt_cli_test_bad"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("\"kind\":\"validation\""));
}

#[test]
fn eigenscan_run_is_deterministic_and_round_trips() {
    let dir_a = std::env::temp_dir().join("lgt_cli_test_a");
    let dir_b = std::env::temp_dir().join("lgt_cli_test_b");
    for d in [&dir_a, &dir_b] {
        let _ = fs::remove_dir_all(d);
    }

    let out = bin()
        .args(["run", "--preset", "eigenscan", "--out"])
        .arg(&dir_a)
        .output()
        .unwrap();
    assert!(out.status.success(), "run failed: {out:?}");

    // Re-run from the emitted provenance config; results must be byte-identical.
    let cfg = dir_a.join("eigenscan").join("run.json");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir_b)
        .output()
        .unwrap();
    assert!(out.status.success(), "round-trip run failed: {out:?}");

    let csv_a = fs::read_to_string(dir_a.join("eigenscan/eigenscan.csv")).unwrap();
    let csv_b = fs::read_to_string(dir_b.join("eigenscan/eigenscan.csv")).unwrap();
    assert_eq!(csv_a, csv_b);

    let svg = fs::read_to_string(dir_a.join("eigenscan/convergence.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn compare_detects_violations_with_exit_4() {
    let dir = std::env::temp_dir().join("lgt_cli_test_cmp");
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    let bounds = dir.join("b.csv");
    let meas = dir.join("m.csv");
    fs::write(&bounds, "lambda,bound\n1,1.0e-3\n2,1.0e-5\n").unwrap();
    fs::write(&meas, "lambda,measured\n1,5.0e-2\n2,2.0e-6\n").unwrap();

    let out = bin()
        .arg("compare")
        .arg(&bounds)
        .arg(&meas)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    let report = fs::read_to_string(dir.join("compare.csv")).unwrap();
    assert!(report.contains("FAIL"));
    assert!(report.contains("PASS"));
}
