//! End-to-end tests of the binary: generate / analyze round trips, curve
//! emission, config files, and the exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

fn epsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epsim"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn generate_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = epsim(
        dir.path(),
        &[
            "eprb",
            "generate",
            "--events",
            "50000",
            "--angles1",
            "0,45",
            "--angles2",
            "22.5,67.5",
            "--d",
            "2",
            "--seed",
            "6",
            "--out-prefix",
            "run",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("run.station1.txt").exists());
    assert!(dir.path().join("run.station2.txt").exists());

    let out = epsim(
        dir.path(),
        &[
            "eprb",
            "analyze",
            "--station1",
            "run.station1.txt",
            "--station2",
            "run.station2.txt",
            "--window",
            "0.01",
            "--out",
            "table.csv",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("coincidences:"), "{text}");
    assert!(text.contains("CHSH: Smax ="), "{text}");
    let table = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert!(table.contains("# config_digest = "));
    assert!(table.contains("m1,m2,alpha_deg,beta_deg,coincidences,e1,e2,e,rho"));
}

#[test]
fn generated_files_embed_header_and_reload() {
    let dir = tempfile::tempdir().unwrap();
    let out = epsim(
        dir.path(),
        &[
            "eprb", "generate", "--events", "100", "--settings", "3", "--seed", "9",
            "--out-prefix", "tiny",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("tiny.station1.txt")).unwrap();
    assert!(text.starts_with("epsim-station-dataset v1"));
    assert!(text.contains("events = 100"));
    assert!(text.contains("config_digest = "));
    let ds = epsim_core::dataset::read_dataset(dir.path().join("tiny.station1.txt")).unwrap();
    assert_eq!(ds.records.len(), 100);
}

#[test]
fn smax_sweep_and_histogram_emit_curves() {
    let dir = tempfile::tempdir().unwrap();
    epsim(
        dir.path(),
        &[
            "eprb", "generate", "--events", "30000", "--angles1", "0,45", "--angles2",
            "22.5,67.5", "--seed", "4", "--out-prefix", "run",
        ],
    );
    let out = epsim(
        dir.path(),
        &[
            "smax-sweep",
            "--station1",
            "run.station1.txt",
            "--station2",
            "run.station2.txt",
            "--windows",
            "0.001,0.01,0.1",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let curve = std::fs::read_to_string(dir.path().join("smax.csv")).unwrap();
    assert!(curve.contains("W,Smax,n_coincidences"));
    assert_eq!(curve.lines().filter(|l| !l.starts_with('#')).count(), 4);

    let out = epsim(
        dir.path(),
        &[
            "histogram",
            "--station1",
            "run.station1.txt",
            "--station2",
            "run.station2.txt",
            "--x",
            "1",
            "--y",
            "-1",
            "--bin-width",
            "0.1",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let hist = std::fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
    assert!(hist.contains("bin_center,count,normalized_count"));
}

#[test]
fn mzi_and_oracle_emit_expected_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let out = epsim(
        dir.path(),
        &[
            "mzi",
            "--events-per-point",
            "1000",
            "--phi0-step",
            "10",
            "--seed",
            "5",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let curve = std::fs::read_to_string(dir.path().join("mzi.csv")).unwrap();
    assert!(curve.contains("phi0_deg,phi_deg,n0_frac,n2_frac,quantum_ref"));
    assert_eq!(curve.lines().filter(|l| !l.starts_with('#')).count(), 37);

    let out = epsim(dir.path(), &["oracle", "--grid-step", "10"]);
    assert!(out.status.success());
    let table = std::fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
    assert_eq!(table.lines().filter(|l| !l.starts_with('#')).count(), 37);
}

#[test]
fn auto_delta_recovers_injected_shift() {
    let dir = tempfile::tempdir().unwrap();
    epsim(
        dir.path(),
        &[
            "eprb", "generate", "--events", "100000", "--seed", "11", "--out-prefix", "run",
        ],
    );
    // Shift station-2 tags by rewriting the file.
    let path = dir.path().join("run.station2.txt");
    let mut ds = epsim_core::dataset::read_dataset(&path).unwrap();
    for r in &mut ds.records {
        r.t += 0.002;
    }
    // Shifted tags exceed t0; bump the unit so the file stays valid.
    ds.t0 = 1.01;
    epsim_core::dataset::write_dataset(&path, &ds).unwrap();

    let out = epsim(
        dir.path(),
        &[
            "eprb",
            "analyze",
            "--station1",
            "run.station1.txt",
            "--station2",
            "run.station2.txt",
            "--auto-delta",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("estimated clock shift delta = -0.002"),
        "{text}"
    );
}

#[test]
fn run_config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "# comment line\nkind = oracle\ngrid_step_deg = 30\nout = table.csv\n",
    )
    .unwrap();
    let out = epsim(dir.path(), &["run-config", "run.cfg"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("table.csv").exists());
}

#[test]
fn exit_codes_distinguish_error_classes() {
    let dir = tempfile::tempdir().unwrap();

    // Config error: 2.
    let out = epsim(dir.path(), &["bs", "--p0", "1.5"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    // Data error (missing file): 3, and the path is named.
    let out = epsim(
        dir.path(),
        &[
            "eprb", "analyze", "--station1", "nope.txt", "--station2", "nope.txt",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("nope.txt"));

    // Data error (malformed file): 3 with a line number.
    std::fs::write(dir.path().join("bad.txt"), "epsim-station-dataset v1\nbogus\n").unwrap();
    let out = epsim(
        dir.path(),
        &[
            "eprb", "analyze", "--station1", "bad.txt", "--station2", "bad.txt",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));

    // Config error from a config file: 2.
    std::fs::write(dir.path().join("bad.cfg"), "tau = 0.5\nwindow = 0.1\n").unwrap();
    let out = epsim(dir.path(), &["run-config", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}
