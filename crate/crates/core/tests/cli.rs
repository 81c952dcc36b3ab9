//! End-to-end runs of the `dlcz` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dlcz::dataset::RecordLine;
use dlcz::{ClickDataset, Measured};
use serde_json::Value;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn dlcz(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlcz"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("DLCZ_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> Output {
    let o = dlcz(out, args);
    assert!(
        o.status.success(),
        "dlcz {args:?} exited {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const SMALL_SIM: &str = r#"
seed = 3
[simulation]
n_sequences = 100000
record_time_tags = true
[simulation.model]
mu = 0.05
lambda_a = 1e-4
lambda_b = 4e-3
eta_x = 0.05
eta_y = 0.1
g2_bb = 1.5
[sweep]
no_write_sequences = 50000
"#;

#[test]
fn runs_are_byte_identical_for_a_fixed_seed() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "sim.toml", SMALL_SIM);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for dir in [&a, &b] {
        ok(dir, &["--config", cfg.to_str().unwrap(), "simulate"]);
        let manifest = dir.join("manifest.json");
        ok(dir, &["analyze", manifest.to_str().unwrap(), "--window", "40", "--histogram", "5"]);
    }
    for file in ["manifest.json", "dataset.jsonl", "results.json", "histogram.csv"] {
        assert!(fs::read(a.join(file)).unwrap() == fs::read(b.join(file)).unwrap(), "{file} differs");
    }
    ok(&c, &["--config", cfg.to_str().unwrap(), "--seed", "4", "simulate"]);
    assert!(fs::read(a.join("dataset.jsonl")).unwrap() != fs::read(c.join("dataset.jsonl")).unwrap());
    let manifest = json(&c.join("manifest.json"));
    assert_eq!(manifest["seed"], 4);
    assert_eq!(manifest["schema_version"], 1);
}

#[test]
fn analysis_reports_every_statistic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "sim.toml", SMALL_SIM);
    ok(tmp.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    let manifest = tmp.path().join("manifest.json");
    ok(tmp.path(), &["--format", "csv", "analyze", manifest.to_str().unwrap(), "--window", "40"]);
    let csv = fs::read_to_string(tmp.path().join("results.csv")).unwrap();
    assert!(csv.starts_with("file,delay_us,window_us,statistic,value,std_err,n_sequences_used,conditioning"));
    ok(tmp.path(), &["analyze", manifest.to_str().unwrap(), "--window", "40"]);
    let report = json(&tmp.path().join("results.json"));
    let blocks = report["datasets"][0]["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 2);
    assert!(blocks[0]["window_us"].is_null());
    assert_eq!(blocks[1]["window_us"], 40.0);
    for block in blocks {
        assert_eq!(block["results"].as_array().unwrap().len(), 10, "{block}");
    }
}

#[test]
fn noise_only_dataset_lists_heralded_statistics_as_unavailable() {
    let tmp = TempDir::new().unwrap();
    let recs = (0..1000u32).map(|i| RecordLine {
        write_clicks: (i % 97 == 0) as u32,
        read_clicks: (i % 31 == 0) as u32 + (i % 500 == 0) as u32,
        delay_us: 10.0,
        write_pulse_present: false,
        read_time_tags: None,
    });
    let ds = ClickDataset::from_records(recs, 130.0).unwrap();
    let path = tmp.path().join("noise.jsonl");
    ds.write_jsonl(fs::File::create(&path).unwrap()).unwrap();
    ok(tmp.path(), &["analyze", path.to_str().unwrap()]);
    let report = json(&tmp.path().join("results.json"));
    let block = &report["datasets"][0]["blocks"][0];
    let names = |key: &str| -> Vec<String> {
        block[key]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["statistic"].as_str().unwrap().to_string())
            .collect()
    };
    let available = names("results");
    assert!(available.contains(&"mean_read_noise".to_string()));
    assert!(available.contains(&"g2_read_noise".to_string()));
    let unavailable = names("unavailable");
    for s in ["g2_cross", "g2_conditional", "retrieval_efficiency", "cauchy_schwarz"] {
        assert!(unavailable.contains(&s.to_string()), "{s} missing from {unavailable:?}");
    }
}

#[test]
fn malformed_inputs_exit_with_data_error_and_line_number() {
    let tmp = TempDir::new().unwrap();
    let bad = write(tmp.path(), "bad.csv", "x,y,err\n10,5.0,0.5\n110,oops,0.5\n");
    let o = dlcz(tmp.path(), &["fit", "decay", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&o.stderr));

    let bad = write(tmp.path(), "bad.jsonl", "{\"write_clicks\":0,\"read_clicks\":0,\"delay_us\":10.0,\"write_pulse_present\":true}\nnot json\n");
    let o = dlcz(tmp.path(), &["analyze", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"), "{}", String::from_utf8_lossy(&o.stderr));

    let o = dlcz(tmp.path(), &["analyze", tmp.path().join("missing.jsonl").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(dlcz(tmp.path(), &["frobnicate"]).status.code(), Some(2));
    let bad_cfg = write(tmp.path(), "bad.toml", "[simulation]\nn_sequences = 10\nunknown = 1\n");
    assert_eq!(
        dlcz(tmp.path(), &["--config", bad_cfg.to_str().unwrap(), "simulate"]).status.code(),
        Some(2)
    );
    let toy = data("toy_two_level.scheme");
    let o = dlcz(tmp.path(), &["magic", toy.to_str().unwrap(), "--range", "3", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = dlcz(tmp.path(), &["magic", toy.to_str().unwrap(), "--range", "2", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn magic_command_finds_toy_zero_and_cesium_minimum() {
    let tmp = TempDir::new().unwrap();
    let toy = data("toy_two_level.scheme");
    ok(tmp.path(), &["magic", toy.to_str().unwrap(), "--range", "0.5", "1.5", "--step", "0.01"]);
    let report = json(&tmp.path().join("magic_report.json"));
    let zero = report["static_zero_mhz"].as_f64().unwrap();
    assert!((zero - 1.0).abs() < 1e-9, "{zero}");
    let table = json(&tmp.path().join("coupling_table.json"));
    assert_eq!(table.as_array().unwrap().len(), 101);

    let cs = tmp.path().join("cs");
    ok(&cs, &["--format", "csv", "magic", "--cesium"]);
    let report = json(&cs.join("magic_report.json"));
    assert_eq!(report["magic"]["outside_doppler_width"], true);
    let csv = fs::read_to_string(cs.join("coupling_table.csv")).unwrap();
    assert!(csv.starts_with("detuning_mhz,static_coupling,doppler_re,doppler_im,doppler_abs"));

    let file = tmp.path().join("file");
    let scheme = data("cs_d1.scheme");
    ok(&file, &["magic", scheme.to_str().unwrap(), "--range", "-3000", "3000"]);
    let from_file = json(&file.join("magic_report.json"));
    let a = from_file["magic"]["detuning_mhz"].as_f64().unwrap();
    let b = report["magic"]["detuning_mhz"].as_f64().unwrap();
    assert!((a - b).abs() < 0.01, "{a} vs {b}");
}

fn validate_report(schema: &Value, path: &Path) {
    let report = json(path);
    let validator = jsonschema::validator_for(schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{}: {errors:?}", path.display());
}

#[test]
fn fit_reports_follow_the_schema() {
    let tmp = TempDir::new().unwrap();
    let schema = json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("docs/fit_report.schema.json"));
    let decay = write(
        tmp.path(),
        "decay.csv",
        &(0..11)
            .map(|i| {
                let t = 10.0 + 100.0 * i as f64;
                let y = 1.0 + 9.0 * (-t / 400.0f64).exp() * (1.0 + 0.03 * ((i * 7 % 5) as f64 - 2.0));
                format!("{t},{y},{}\n", 0.05 * y)
            })
            .fold("x,y,err\n".to_string(), |a, b| a + &b),
    );
    ok(
        tmp.path(),
        &["--format", "csv", "fit", "decay", decay.to_str().unwrap(), "--threshold", "5.7", "--averages", "1.9", "1.6"],
    );
    validate_report(&schema, &tmp.path().join("decay_report.json"));
    let report = json(&tmp.path().join("decay_report.json"));
    let crossings = report["derived"]["crossings"].as_array().unwrap();
    assert_eq!(crossings.len(), 2);
    assert_eq!(crossings[1]["quantity"], "cauchy_schwarz");
    let plot = fs::read_to_string(tmp.path().join("decay_plot.csv")).unwrap();
    assert!(plot.starts_with("series,x,y,err,model,residual"));
    assert_eq!(plot.lines().count(), 12);
    assert!(tmp.path().join("decay_parameters.csv").exists());

    let noise = write(tmp.path(), "noise.csv", "x,y,err\n1e-4,7e-5,5e-6\n5e-4,1e-4,6e-6\n1e-3,1.4e-4,8e-6\n2e-3,2.2e-4,1e-5\n");
    ok(tmp.path(), &["fit", "noise-line", noise.to_str().unwrap()]);
    validate_report(&schema, &tmp.path().join("noise_line_report.json"));

    let mut scan = "detuning_mhz,counts_with_write\n".to_string();
    let p = dlcz::fit::WriteSpectrumParams {
        a_narr: 8200.0,
        a_broad: 1800.0,
        a_lkg: 3000.0,
        a_bg: 100.0,
        width_1: 0.5,
        width_2: 1.1,
        width_broad: 5.0,
    };
    for i in 0..241 {
        let x = -6.0 + 0.05 * i as f64;
        scan += &format!("{x},{}\n", dlcz::fit::write_spectrum_model(&p, 2.4, x).round());
    }
    let scan = write(tmp.path(), "write.csv", &scan);
    ok(tmp.path(), &["fit", "write-spectrum", scan.to_str().unwrap()]);
    validate_report(&schema, &tmp.path().join("write_spectrum_report.json"));
    let report = json(&tmp.path().join("write_spectrum_report.json"));
    let eta = report["derived"]["write_efficiency"]["value"].as_f64().unwrap();
    assert!((eta - 0.82).abs() < 0.01, "{eta}");
}

#[test]
fn unreachable_crossing_is_a_numerical_failure_after_the_report() {
    let tmp = TempDir::new().unwrap();
    let decay = write(tmp.path(), "d.csv", "x,y,err\n10,9,0.5\n100,7,0.5\n200,5.6,0.5\n400,3.4,0.4\n");
    let o = dlcz(tmp.path(), &["fit", "decay", decay.to_str().unwrap(), "--threshold", "0.5"]);
    assert_eq!(o.status.code(), Some(4));
    let report = json(&tmp.path().join("decay_report.json"));
    assert!(report["derived"]["crossings"][0]["error"].is_string());
}

fn within_2_sigma(m: &Value, truth: f64) -> bool {
    let m = Measured::new(m["value"].as_f64().unwrap(), m["std_err"].as_f64().unwrap());
    (m.value - truth).abs() <= 2.0 * m.std_err
}

fn parameter<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["parameters"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"] == name)
        .unwrap()
}

#[test]
fn pipeline_recovers_injected_efficiencies_and_memory_time() {
    let tmp = TempDir::new().unwrap();

    let power = write(
        tmp.path(),
        "power.toml",
        r#"
seed = 5
[simulation]
n_sequences = 1000000
[simulation.model]
mu = 0.02
lambda_a = 0.0
lambda_b = 4.0e-3
eta_x = 0.029
eta_y = 0.060
g2_bb = 1.5
[sweep]
mu = [0.02, 0.05, 0.1, 0.2, 0.3, 0.5]
no_write_sequences = 500000
[noise_line]
offset = 6.0e-5
slope = 0.08
"#,
    );
    let dir = tmp.path().join("power");
    ok(&dir, &["--config", power.to_str().unwrap(), "--format", "csv", "simulate"]);
    ok(&dir, &["analyze", dir.join("manifest.json").to_str().unwrap()]);
    let curves = dir.join("efficiency_curves.csv");
    let cal = data("calibration.toml");
    ok(&dir, &["fit", "efficiencies", curves.to_str().unwrap(), "--calibration", cal.to_str().unwrap()]);
    let report = json(&dir.join("efficiencies_report.json"));
    assert!(within_2_sigma(parameter(&report, "eta_x"), 0.029), "{}", parameter(&report, "eta_x"));
    assert!(within_2_sigma(parameter(&report, "eta_y"), 0.060), "{}", parameter(&report, "eta_y"));

    let delays = write(
        tmp.path(),
        "delays.toml",
        r#"
seed = 11
[simulation]
n_sequences = 1000000
memory_tau_us = 400.0
[simulation.model]
mu = 0.05
lambda_a = 1.0e-4
lambda_b = 4.0e-3
eta_x = 0.029
eta_y = 0.060
g2_bb = 1.5
[simulation.noise_growth]
linear_rate = 2.0e-4
[sweep]
delays_us = [10, 110, 210, 310, 410, 510, 610, 710, 810, 910, 1010]
no_write_sequences = 500000
"#,
    );
    let dir = tmp.path().join("delays");
    ok(&dir, &["--config", delays.to_str().unwrap(), "--format", "csv", "simulate"]);
    ok(&dir, &["analyze", dir.join("manifest.json").to_str().unwrap()]);
    let eta = dir.join("decay_retrieval_efficiency.csv");
    ok(&dir, &["fit", "decay", eta.to_str().unwrap(), "--model", "plain-exp"]);
    let report = json(&dir.join("decay_report.json"));
    assert!(within_2_sigma(parameter(&report, "tau_us"), 400.0), "{}", parameter(&report, "tau_us"));

    let g2: Vec<(f64, f64)> = fs::read_to_string(dir.join("decay_g2_cross.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
            (v[1], v[2])
        })
        .collect();
    assert_eq!(g2.len(), 11);
    // Decays by many standard errors from the first to the last delay.
    let (first, last) = (g2[0], g2[10]);
    assert!(first.0 - last.0 > 5.0 * first.1.hypot(last.1));
}
