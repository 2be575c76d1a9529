use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dynakernel"));
    c.env_remove("DYNAKERNEL_THREADS");
    c
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(cmd: &str, config: &Path, sets: &[&str]) -> Output {
    let mut c = bin();
    c.arg(cmd).arg("--config").arg(config);
    for s in sets {
        c.arg("--set").arg(s);
    }
    c.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.take_while(|l| !l.is_empty()).map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn poisson_at_origin_is_uniform() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(d.path(), "p.json", r#"{"n": 2, "kernel": "P", "x": [[0.0, 0.0]], "y_sphere": 4}"#);
    let o = run("eval", &cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let vals = column(&stdout(&o), "value");
    assert_eq!(vals.len(), 4);
    for v in vals {
        let v: f64 = v.parse().unwrap();
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
    }
}

#[test]
fn single_evaluation_is_a_json_object() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(
        d.path(),
        "b.json",
        r#"{"n": 2, "kernel": "bound_h", "x": [[0.0, 0.0]], "y": [[0.0, 0.0]], "t": [2.0], "format": "json"}"#,
    );
    let o = run("eval", &cfg, &[]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["value"].as_f64(), Some(0.5));
    // overrides replace config values
    let o = run("eval", &cfg, &["t=[0.5]"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["value"].as_f64(), Some(1.0));
}

#[test]
fn csv_uses_seventeen_significant_digits() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(d.path(), "p.json", r#"{"n": 2, "kernel": "P", "x": [[0.1, 0.0]], "y_sphere": 1}"#);
    let o = run("eval", &cfg, &[]);
    let v = &column(&stdout(&o), "value")[0];
    let mantissa = v.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{v}");
}

#[test]
fn config_errors_exit_one() {
    let d = TempDir::new().unwrap();
    let bad = write_config(d.path(), "bad.json", r#"{"n": 2, "kernel": "P", "colour": 1}"#);
    let o = run("eval", &bad, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));

    let ok = write_config(d.path(), "ok.json", r#"{"n": 2, "kernel": "P", "x": [[0.0, 0.0]], "y_sphere": 2}"#);
    assert_eq!(run("eval", &ok, &["truncation.lmax=500"]).status.code(), Some(1));
    assert_eq!(run("eval", &ok, &["quadrature.nonsense=3"]).status.code(), Some(1));
    assert_eq!(run("eval", &ok, &["n=4"]).status.code(), Some(1));
    assert_eq!(run("eval", &d.path().join("missing.json"), &[]).status.code(), Some(1));
    // G_heat is a half-space kernel
    assert_eq!(run("eval", &ok, &["kernel=G_heat", "t=[0.5]"]).status.code(), Some(1));
    assert_eq!(run("mc", &ok, &["domain=halfspace", "x=[[0.0,0.5]]", "y=[[0.1,0.2]]", "t=[0.5]"]).status.code(), Some(1));
    let o = bin().args(["eval", "--config"]).arg(&ok).env("DYNAKERNEL_THREADS", "0").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn failed_rows_exit_two_and_keep_the_header() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(
        d.path(),
        "g.json",
        r#"{"n": 2, "kernel": "Gamma_D", "x": [[0.3, 0.0]], "y": [[0.1, 0.2]], "t": [0.5, 0.001]}"#,
    );
    let o = run("eval", &cfg, &[]);
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    assert!(out.starts_with("x0,x1,y0,y1,t,value,error,code,message\n"), "{out}");
    let codes = column(&out, "code");
    assert_eq!(codes[0], "");
    assert_eq!(codes[1], "TRUNCATION_INSUFFICIENT");
}

#[test]
fn identities_pass_at_default_points() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(d.path(), "i.json", r#"{"n": 2, "t": [0.5]}"#);
    let o = run("identities", &cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(column(&out, "pass").iter().all(|p| p == "true"));
    let names = column(&out, "identity");
    for want in ["poisson", "k1", "f1_gamma1_mass", "g1dyn_mass"] {
        assert!(names.iter().any(|n| n == want), "{want}");
    }
    let hs = write_config(d.path(), "h.json", r#"{"n": 2, "domain": "halfspace", "t": [0.25]}"#);
    let o = run("identities", &hs, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(column(&stdout(&o), "identity").iter().all(|n| n == "g_plus_mass"));
}

#[test]
fn eigen_tables_with_sidecar() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("eig.csv");
    let cfg = write_config(
        d.path(),
        "e.json",
        &format!(
            r#"{{"n": 3, "eigen": "dirichlet", "truncation": {{"lmax": 3, "kmax": 3}}, "output": {}}}"#,
            serde_json::to_string(&out).unwrap()
        ),
    );
    let o = run("eigen", &cfg, &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let csv = fs::read_to_string(&out).unwrap();
    let lam: Vec<f64> = column(&csv, "lambda").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(lam.len(), 12);
    assert!((lam[0] - std::f64::consts::PI.powi(2)).abs() < 1e-10);
    assert!(lam.windows(2).all(|w| w[0] <= w[1]));
    let js: Value = serde_json::from_str(&fs::read_to_string(d.path().join("eig.json")).unwrap()).unwrap();
    assert_eq!(js["modes"].as_array().unwrap().len(), 12);

    let o = run("eigen", &cfg, &["eigen=wentzell", "n=2", "output=null", "format=json"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let (js, csv) = text.split_once("\n\n").unwrap();
    let js: Value = serde_json::from_str(js).unwrap();
    assert!(js.is_object());
    let first = csv.lines().nth(1).unwrap();
    assert!(first.starts_with("0,0,0.0000000000000000e0,"), "{first}");
}

#[test]
fn residual_rejects_increasing_times_and_reports_verdicts() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(d.path(), "r.json", r#"{"n": 2, "residual": {"which": "u"}}"#);
    assert_eq!(run("residual", &cfg, &["t=[0.1, 0.2]"]).status.code(), Some(1));
    assert_eq!(run("residual", &cfg, &["t=[0.2, -0.1]"]).status.code(), Some(1));

    let out = d.path().join("res.csv");
    let o = run("residual", &cfg, &[&format!("output={}", serde_json::to_string(&out).unwrap())]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("x0,x1,t,residual,component\n"));
    let verdicts = fs::read_to_string(d.path().join("res_verdicts.csv")).unwrap();
    assert_eq!(verdicts, "report,component,verdict\nu,Ftilde,true\nu,Gtilde,true\n");

    // the first approximation's trend does not hold, so the run reports failure
    let o = run("residual", &cfg, &["residual.which=g1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("g1,F,false"));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_caps() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(
        d.path(),
        "m.json",
        r#"{"n": 2, "x": [[0.3, 0.0], [0.0, 0.0]], "y": [[0.1, 0.2]], "t": [0.5],
            "mc": {"paths": 3000, "dt": 1e-3, "seed": 7}}"#,
    );
    let run_with = |threads: &str| {
        let o = bin().args(["mc", "--config"]).arg(&cfg).env("DYNAKERNEL_THREADS", threads).output().unwrap();
        assert!(matches!(o.status.code(), Some(0 | 2)));
        o.stdout
    };
    let a = run_with("1");
    assert_eq!(a, run_with("1"));
    assert_eq!(a, run_with("3"));
    let seeds = run("mc", &cfg, &["mc.seed=8"]);
    assert_ne!(a, seeds.stdout);
}
