//! Command-line behavior: exit codes, error reporting, config overrides.

use std::io::Write;
use std::process::Command;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hothand"));
    cmd.env_remove("HOTHAND_CONFIG");
    cmd
}

#[test]
fn help_exits_zero_and_lists_subcommands() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "celtics",
        "ingest-check",
        "pair-stats",
        "trip-table",
        "repeat-trips",
        "recover-gvt",
        "fit-model1",
        "posterior",
        "power",
        "fit-model2",
        "fit-model3",
        "smooth",
        "trends",
        "corr-stats",
        "simulate",
    ] {
        assert!(text.contains(sub), "help missing `{sub}`");
    }
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = bin().arg("bogus").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_flag_value_is_usage_error() {
    let out = bin()
        .args([
            "simulate",
            "--players",
            "2",
            "--games",
            "1",
            "--p1",
            "0.7",
            "--p2",
            "0.8",
            "--trips-per-game",
            "1:bogus",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_row_is_data_error_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(
        f,
        "game_id,player_id,elapsed_seconds,shot_in_trip,shots_in_trip,made"
    )
    .unwrap();
    writeln!(f, "G1,P1,10,1,2,1").unwrap();
    writeln!(f, "G1,P1,11,2,2,7").unwrap();
    drop(f);

    let out = bin().args(["pair-stats"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "stderr: {err}");
}

#[test]
fn missing_input_file_is_data_error() {
    let out = bin()
        .args(["ingest-check", "/nonexistent/nope.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stdin_piping_works() {
    use std::process::Stdio;
    let celtics = bin().arg("celtics").output().unwrap();
    assert!(celtics.status.success());

    let mut child = bin()
        .args(["pair-stats", "-", "--pooled", "--format", "csv"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(&celtics.stdout)
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Total,2049,1473,1590"), "{text}");
}

#[test]
fn config_file_overrides_default_se_formula() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"se_formula": "mcnemar"}"#).unwrap();
    let data = dir.path().join("celtics.csv");
    assert!(bin()
        .args(["celtics", "--output"])
        .arg(&data)
        .output()
        .unwrap()
        .status
        .success());

    let run = |env: Option<&std::path::Path>| -> String {
        let mut cmd = bin();
        cmd.args(["pair-stats", "--pooled", "--format", "csv"])
            .arg(&data);
        if let Some(path) = env {
            cmd.env("HOTHAND_CONFIG", path);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        String::from_utf8_lossy(&out.stdout).to_string()
    };
    let default = run(None);
    let mcnemar = run(Some(&config));
    assert_ne!(
        default, mcnemar,
        "config se_formula should change the z column"
    );

    // z column under the paired formula is ~4.32 for the Celtics total.
    let z: f64 = mcnemar
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .next_back()
        .unwrap()
        .parse()
        .unwrap();
    assert!((z - 4.3235).abs() < 1e-3, "mcnemar z {z}");
}

#[test]
fn bad_config_file_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, "{ not json").unwrap();
    let out = bin()
        .arg("celtics")
        .env("HOTHAND_CONFIG", &config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
