use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fouberry_cli::{run, Cli, RunConfig};
use clap::Parser;
use serde_json::Value;

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fouberry-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn fouberry(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fouberry"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn limits_report_exact_constants() {
    let out = scratch("limits");
    let o = fouberry(&["limits", "--hurst", "0.25", "--theta", "1"], &out);
    assert_eq!(o.status.code(), Some(0));
    let j = read_json(out.join("limits.json"));
    let pi = std::f64::consts::PI;
    let s2 = j["values"]["sigma2"].as_f64().unwrap();
    let a = j["values"]["a_limit"].as_f64().unwrap();
    assert!((s2 - 2.0 / pi).abs() < 1e-12);
    assert!((a - pi.sqrt() / 4.0).abs() < 1e-12);
    assert_eq!(j["schema_version"], 1);
    assert_eq!(j["inputs"]["hurst"], 0.25);
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn bt_residual_check_passes_on_its_ladder() {
    let out = scratch("l32");
    let o = fouberry(&["lemmas", "--id", "L32", "--hurst", "0.3", "--tladder", "25,50,100,200"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let j = read_json(out.join("lemmas.json"));
    let r = &j["values"]["reports"][0];
    assert_eq!(r["passed"], true);
    assert!(r["fitted_exponent"].as_f64().unwrap() <= -0.75);
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn csv_values_equal_json_series() {
    let out = scratch("roundtrip");
    let o = fouberry(&["psi", "--tladder", "2,4"], &out);
    assert_eq!(o.status.code(), Some(0));
    let j = read_json(out.join("psi.json"));
    let mut rdr = csv::Reader::from_path(out.join("psi.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(Value::from(header.clone()), j["series"]["columns"]);
    let rows = j["series"]["rows"].as_array().unwrap();
    let records: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), rows.len());
    for (rec, row) in records.iter().zip(rows) {
        for (field, cell) in rec.iter().zip(row.as_array().unwrap()) {
            if let Some(x) = cell.as_f64() {
                assert_eq!(field.parse::<f64>().unwrap(), x, "{field} vs {cell}");
            }
        }
    }
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn exit_codes() {
    let out = scratch("codes");
    assert_eq!(fouberry(&["limits", "--hurst", "0.7"], &out).status.code(), Some(2));
    assert_eq!(fouberry(&["nonsense"], &out).status.code(), Some(2));
    assert_eq!(fouberry(&["berry-esseen", "--paths", "50"], &out).status.code(), Some(2));
    assert_eq!(fouberry(&["lemmas", "--tladder", "5,10,30,40"], &out).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_fouberry"))
        .args(["limits", "--out"])
        .arg(&out)
        .env("FOUBERRY_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    // no horizon pair can separate its distances at this sample size
    let o = fouberry(&["berry-esseen", "--tladder", "1,2,3", "--paths", "100", "--bias-subsample", "10"], &out);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL decay_resolved"));
    assert_eq!(fouberry(&["limits", "--tol", "1e-300"], &out).status.code(), Some(4));
    let _ = std::fs::remove_dir_all(out);
}

#[test]
fn library_run_ignores_pool_size() {
    let cli = Cli::parse_from(["fouberry", "berry-esseen", "--tladder", "1,2,4", "--paths", "300", "--seed", "5"]);
    let cfg = RunConfig::from_cli(cli).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| run(&cfg)).unwrap();
    let b = four.install(|| run(&cfg)).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    assert!(!a.to_json().contains("wall"));
}

#[test]
fn sample_dumps_feed_the_monte_carlo_run() {
    let out = scratch("dumps");
    let o = fouberry(&["sample", "--tladder", "2", "--grid-n", "100", "--paths", "300", "--dump"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let dump = out.join("paths_T2.bin");
    assert!(dump.exists());
    let dump_arg = dump.to_str().unwrap();
    let args = ["berry-esseen", "--tladder", "1,2,4", "--paths", "300", "--bias-subsample", "10"];
    let mut with = args.to_vec();
    with.extend(["--batch", dump_arg]);
    let a = fouberry(&with, &out.join("with"));
    assert!(matches!(a.status.code(), Some(0) | Some(3)));
    let j = read_json(out.join("with").join("berry-esseen.json"));
    let pts = j["values"]["points"].as_array().unwrap();
    assert_eq!(pts[1]["presampled"], true);
    assert_eq!(pts[0]["presampled"], false);
    std::fs::remove_dir_all(out).unwrap();
}
