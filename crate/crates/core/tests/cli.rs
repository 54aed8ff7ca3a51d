use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use sector_dirac::cli::{RunOutput, from_json};
use sector_dirac::spectra::SpectralReport;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sector-dirac"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn classify_convex_and_nonconvex() {
    let o = run(&["classify", "--omega", "1.0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("convex; self-adjoint; λ₀ = 1.5707963267948966"));
    let v = json(&o);
    assert_eq!(v["result"]["convex"], true);
    assert_eq!(v["config"]["omega"], 1.0);

    let o = run(&["classify", "--omega", "2.4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).starts_with("non-convex; one-parameter family"));
    let nu0 = json(&o)["result"]["nu0"].as_f64().unwrap();
    assert!((nu0 - (PI - 4.8) / 9.6).abs() < 1e-15);
}

#[test]
fn omega_fraction_hits_the_convexity_threshold_exactly() {
    let v = json(&run(&["classify", "--omega-frac", "1", "2"]));
    assert_eq!(v["result"]["convex"], true);
    assert_eq!(v["result"]["fibers"][0]["class"], "self-adjoint");
}

#[test]
fn input_errors_exit_two_without_panicking() {
    for args in [
        vec!["classify", "--omega", "4.0"],
        vec!["classify", "--omega", "-1"],
        vec!["classify"],
        vec!["extension", "--omega", "1.0", "--gamma-phase", "0"],
        vec!["spectrum", "--omega", "1.0", "--n-r", "3"],
        vec!["bessel", "--nu", "0.5", "--r", "-1"],
        vec!["frobnicate"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).contains("panicked"));
    }
    let o = run(&["extension", "--omega", "1.0", "--gamma-phase", "0"]);
    assert!(stderr(&o).contains("already self-adjoint"));
}

#[test]
#[allow(clippy::approx_constant)]
fn extension_audit_and_scaling() {
    let v = json(&run(&["extension", "--omega", "2.0", "--gamma-phase", "0"]));
    let a = &v["result"]["audit"];
    for key in ["charge_conjugation", "scale_invariant", "h_half", "distinguished"] {
        assert_eq!(a[key], true, "{key}");
    }
    let v = json(&run(&["extension", "--omega", "2.0", "--gamma-phase", "1.5707963", "--alpha", "2"]));
    let got = v["result"]["scaling"]["s_out"].as_f64().unwrap();
    let lambda0 = PI / 4.0;
    let want = 2.0 * ((1.5707963f64 / 2.0).tan() / 2f64.powf(lambda0)).atan();
    assert!((got - want).abs() < 1e-12);
}

fn write_polygon(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn polygon_files() {
    let dir = tempfile::tempdir().unwrap();
    let square = write_polygon(dir.path(), "square.json", "[[0,0],[1,0],[1,1],[0,1]]");
    let v = json(&run(&["polygon", &square]));
    assert_eq!(v["result"]["classification"]["kind"], "self-adjoint");

    let l = write_polygon(dir.path(), "l.json", "[[0,0],[2,0],[2,1],[1,1],[1,2],[0,2]]");
    let v = json(&run(&["polygon", &l]));
    assert_eq!(v["result"]["classification"]["kind"], "extensions-required");
    assert_eq!(v["result"]["classification"]["count"], 1);

    let bowtie = write_polygon(dir.path(), "bowtie.json", "[[0,0],[1,1],[1,0],[0,1]]");
    assert_eq!(run(&["polygon", &bowtie]).status.code(), Some(2));

    let broken = write_polygon(dir.path(), "broken.json", "[[0,0],\n[1,0],\n[1,");
    let o = run(&["polygon", &broken]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn spectrum_json_round_trips_and_is_deterministic() {
    let args = ["spectrum", "--omega-frac", "1", "3", "--mass", "1", "--r-max", "10", "--n-r", "200", "--n-modes", "4"];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let parsed: RunOutput<SpectralReport> = from_json(&text).unwrap();
    assert!(parsed.result.min_abs_eig >= 0.95 && parsed.result.min_abs_eig <= 1.10);
    assert_eq!(parsed.config.n_modes, Some(4));
    assert_eq!(sector_dirac::cli::to_json(&parsed).unwrap().trim(), text.trim());
}

#[test]
fn negative_and_zero_mass_spectra() {
    let v = json(&run(&["spectrum", "--omega-frac", "1", "3", "--mass", "-1", "--r-max", "20", "--n-r", "300"]));
    let ev: Vec<f64> = v["result"]["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(ev.iter().any(|x| x.abs() < 0.5));
    assert!(v["result"]["gap_note"].is_string());

    let v = json(&run(&["spectrum", "--omega-frac", "1", "3", "--mass", "0", "--r-max", "10", "--n-r", "200"]));
    let ev: Vec<f64> = v["result"]["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let n = ev.len();
    for i in 0..n / 2 {
        assert!((ev[i] + ev[n - 1 - i]).abs() < 1e-9);
    }
}

#[test]
fn csv_output_and_atomic_files() {
    let o = run(&["spectrum", "--omega", "1.0", "--r-max", "10", "--n-r", "200", "--format", "csv"]);
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,eigenvalue"));
    for (i, line) in lines.enumerate() {
        let (idx, val) = line.split_once(',').unwrap();
        assert_eq!(idx.parse::<usize>().unwrap(), i);
        let mantissa = val.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
    }

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.json");
    let o = run(&["spectrum", "--omega", "1.0", "--r-max", "10", "--n-r", "200", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let parsed: RunOutput<SpectralReport> = from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert_eq!(csv.lines().count(), parsed.result.eigenvalues.len() + 1);
}

#[test]
fn sweep_respects_thread_cap_and_rejects_bad_values() {
    let args = ["spectrum", "--omega", "1.0", "--r-max", "8", "--n-r", "120", "--n-modes", "2", "--sweep", "mass=0.5,1,2"];
    let o = run_env(&args, &[("SECTOR_DIRAC_THREADS", "2")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let runs = v.as_array().expect("one entry per sweep value");
    assert_eq!(runs.len(), 3);
    let masses: Vec<f64> = runs.iter().map(|r| r["config"]["mass"].as_f64().unwrap()).collect();
    assert_eq!(masses, vec![0.5, 1.0, 2.0]);

    let o = run_env(&args, &[("SECTOR_DIRAC_THREADS", "zero")]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["spectrum", "--omega", "1.0", "--sweep", "color=red"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn weyl_virial_modes_bessel_fiber() {
    let v = json(&run(&["weyl", "--n", "4", "--mass", "1", "--lambda", "2"]));
    let q4 = v["result"]["quotient"].as_f64().unwrap();
    let v = json(&run(&["weyl", "--n", "8", "--mass", "1", "--lambda", "2"]));
    assert!((v["result"]["quotient"].as_f64().unwrap() * 2.0 - q4).abs() < 1e-15);

    let v = json(&run(&["virial", "--omega", "1.0", "--r-max", "10", "--n-r", "200"]));
    assert!(v["result"].to_string().contains("relative_defect"));

    let v = json(&run(&["modes", "--omega-frac", "1", "2", "--kmax", "2"]));
    assert!(v["result"].to_string().contains("lambda"));

    let v = json(&run(&["bessel", "--nu", "0.5", "--r", "1,2"]));
    let first = &v["result"][0];
    let want = (PI / 2.0).sqrt() * (-1f64).exp();
    assert!((first["value"].as_f64().unwrap() - want).abs() < 1e-15);

    let o = run(&["fiber", "--omega", "2.4", "--gamma-phase", "0", "--r-max", "10", "--n-r", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
