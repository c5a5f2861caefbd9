use std::fs;
use std::process::Command;

use wva_cli::commands::{cmd_dump, cmd_optimize, cmd_shift, cmd_sweep};
use wva_cli::config::ScenarioConfig;

const OPTIMAL: &str = "g = 0.1\naw_re = 1.7320508075688772\naw_im = 3.4641016151377544\nprobe = optimal\n";

fn wva(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wva"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(k).unwrap_or("").to_string())
        .collect()
}

#[test]
fn shift_matches_gaussian_closed_form() {
    let (code, out, err) = wva(&["shift", "--g", "0.5", "--aw-re", "2", "--probe", "gaussian", "--w", "1"]);
    assert_eq!(code, 0, "{err}");
    let dq: f64 = column(&out, "delta_q")[0].parse().unwrap();
    let reference: f64 = column(&out, "analytic_delta_q")[0].parse().unwrap();
    assert!((dq - reference).abs() < 1e-10);
}

#[test]
fn optimal_shift_reaches_max_shift() {
    let c = ScenarioConfig::parse(OPTIMAL).unwrap();
    let out = cmd_shift(&c).unwrap();
    let dq: f64 = column(&out, "delta_q")[0].parse().unwrap();
    assert!((dq - 0.4618802153517006).abs() < 1e-9);
}

#[test]
fn errors_name_the_failure_and_exit_nonzero() {
    let (code, _, err) = wva(&["shift", "--g", "0.1", "--aw-re", "0", "--aw-im", "1", "--probe", "optimal"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: ZeroRealPart:"), "{err}");

    let (code, _, err) = wva(&["shift", "--g", "0.1", "--aw-re", "2", "--probe", "gaussian"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: ConfigError:"), "{err}");

    let (code, _, err) = wva(&["shift", "--g", "0.1", "--aw-re", "2", "--probe", "file", "--probe-file", "/nonexistent/probe.csv"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: IoError:"), "{err}");

    let (code, _, _) = wva(&["no-such-command"]);
    assert_eq!(code, 2);
}

#[test]
fn config_file_errors_report_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, "g = 0.1\naw_re = two\nprobe = optimal\n").unwrap();
    let (code, _, err) = wva(&["shift", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 2") && err.contains("aw_re"), "{err}");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.cfg");
    fs::write(&path, "g = 0.1\naw_re = 2\nprobe = gaussian\nw = 1\n").unwrap();
    let (_, base, _) = wva(&["shift", "--config", path.to_str().unwrap()]);
    let (_, over, _) = wva(&["shift", "--config", path.to_str().unwrap(), "--g", "0.2"]);
    let (_, direct, _) = wva(&["shift", "--g", "0.2", "--aw-re", "2", "--probe", "gaussian", "--w", "1"]);
    assert_ne!(base, over);
    assert_eq!(over, direct);
}

#[test]
fn dumped_probe_round_trips_through_probe_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("probe.csv");
    let c = ScenarioConfig::parse(OPTIMAL).unwrap();
    fs::write(&path, cmd_dump(&c).unwrap()).unwrap();

    let text = format!(
        "g = 0.1\naw_re = 1.7320508075688772\naw_im = 3.4641016151377544\nprobe = file\nprobe_file = {}\n",
        path.display()
    );
    let from_file = ScenarioConfig::parse(&text).unwrap();
    let a: f64 = column(&cmd_shift(&c).unwrap(), "delta_q")[0].parse().unwrap();
    let b: f64 = column(&cmd_shift(&from_file).unwrap(), "delta_q")[0].parse().unwrap();
    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
}

#[test]
fn config_text_round_trips() {
    let c = ScenarioConfig::parse(OPTIMAL).unwrap();
    let again = ScenarioConfig::parse(&c.to_config_text()).unwrap();
    assert_eq!(cmd_shift(&c).unwrap(), cmd_shift(&again).unwrap());
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let text = format!("{OPTIMAL}axis = smoothing_s\nvalues = 10, 20, 50\n").replace("optimal", "smoothed");
    let c = ScenarioConfig::parse(&text).unwrap();
    let (a, fa) = cmd_sweep(&c).unwrap();
    let (b, fb) = cmd_sweep(&c).unwrap();
    assert_eq!((a.clone(), fa), (b, fb));

    let args = ["sweep", "--g", "0.1", "--aw-re", "2", "--probe", "smoothed", "--axis", "smoothing_s", "--values", "10,20,50"];
    let one = Command::new(env!("CARGO_BIN_EXE_wva"))
        .args(args)
        .env("WVA_THREADS", "1")
        .output()
        .unwrap();
    let one = String::from_utf8(one.stdout).unwrap();
    let (_, many, _) = wva(&args);
    assert_eq!(one, many);
}

#[test]
fn sweep_reports_failed_rows_and_exits_one() {
    let (code, out, _) = wva(&[
        "sweep", "--g", "0.1", "--aw-re", "1", "--probe", "optimal", "--axis", "postselection_angle",
        "--values", "2.3561944901923448,2.3571944901923448",
    ]);
    assert_eq!(code, 1);
    let errors = column(&out, "error");
    assert_eq!(errors[0], "OrthogonalSelection");
    assert_eq!(errors[1], "");
}

#[test]
fn optimize_with_one_iteration_is_not_converged() {
    let text = "g = 0.1\naw_re = 2\nprobe = gaussian\nw = 1\nmax_iters = 1\n";
    let out = cmd_optimize(&ScenarioConfig::parse(text).unwrap()).unwrap();
    assert!(!out.converged);
    assert_eq!(out.trace_csv.lines().count(), 2);
    assert_eq!(column(&out.comparison_csv, "converged")[0], "false");
}

#[test]
fn optimize_writes_trace_and_probe_files() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let probe = dir.path().join("probe.csv");
    let (code, out, err) = wva(&[
        "optimize", "--g", "0.1", "--aw-re", "2", "--probe", "gaussian", "--w", "1", "--max-iters", "5",
        "--output", trace.to_str().unwrap(), "--probe-output", probe.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("converged,"));
    assert_eq!(fs::read_to_string(&trace).unwrap().lines().count(), 6);
    assert!(fs::read_to_string(&probe).unwrap().starts_with("space,coordinate,re,im\n"));
}

#[test]
fn mach_zehnder_row() {
    let (code, out, _) = wva(&["mach-zehnder", "--chi", "0.5235987755982988", "--phi", "0.5235987755982988"]);
    assert_eq!(code, 0);
    let c: f64 = column(&out, "c_w_re")[0].parse().unwrap();
    let a: f64 = column(&out, "a_w_re")[0].parse().unwrap();
    assert!((c + 0.5).abs() < 1e-10 && (a + 2.0).abs() < 1e-10);
}
