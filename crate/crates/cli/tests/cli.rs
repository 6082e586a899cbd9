use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn erpwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_erpwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn json(p: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn csv_column(text: &str, col: usize) -> Vec<String> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap_or("").to_string())
        .collect()
}

#[test]
fn synth_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    for out in [&a, &b] {
        assert!(erpwave(&["synth", "--count", "10", "--seed", "7", "--out", out]).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(path(&dir, "a.truth.csv")).unwrap(),
        fs::read(path(&dir, "b.truth.csv")).unwrap()
    );
}

#[test]
fn empty_corpus_writes_headers_only() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "e.csv");
    let truth = path(&dir, "t.csv");
    let o = erpwave(&["synth", "--count", "0", "--out", &out, "--truth-out", &truth]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&out).unwrap(), "# sampling_rate=512\ntrial_id,channel,onset_index\n");
    assert_eq!(fs::read_to_string(&truth).unwrap(), "trial_id,has_erp,n1_index\n");
}

#[test]
fn n1_outside_window_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = erpwave(&["synth", "--count", "2", "--n1-latency", "300", "--out", &path(&dir, "x.csv")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n1_latency"));
}

#[test]
fn zero_trial_is_reported_absent() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "z.csv");
    let header: Vec<String> = (0..512).map(|k| format!("sample_{k}")).collect();
    let zeros = vec!["0"; 512].join(",");
    fs::write(
        &input,
        format!("# sampling_rate=512\ntrial_id,channel,onset_index,{}\nz,Cz,102,{zeros}\n", header.join(",")),
    )
    .unwrap();
    let out = path(&dir, "z.json");
    assert!(erpwave(&["detect", "--input", &input, "--out", &out]).status.success());
    let v = json(&out);
    let t = &v["per_trial"][0];
    assert_eq!(t["present"], false);
    assert_eq!(t["start_ms"], 0.0);
    assert_eq!(t["end_ms"], 0.0);
    for key in ["p1", "n1", "p2", "score"] {
        assert!(t[key].is_null());
    }
    assert!(v["report"].is_null());
}

#[test]
fn malformed_row_cites_its_line() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "bad.csv");
    let mut rows = String::from("# sampling_rate=512\ntrial_id,channel,index,amplitude_uV\n");
    for i in 0..300 {
        rows.push_str(&format!("a,Cz,{i},0.5\n"));
    }
    rows.push_str("a,Cz,300,abc\n");
    fs::write(&input, rows).unwrap();
    let o = erpwave(&["detect", "--input", &input]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 303"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_config_names_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "c.json");
    fs::write(&cfg, r#"{"gaussian_sigma_ms": -1}"#).unwrap();
    let input = path(&dir, "in.csv");
    assert!(erpwave(&["synth", "--count", "1", "--out", &input]).status.success());
    let o = erpwave(&["detect", "--input", &input, "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gaussian_sigma_ms"));
    assert_eq!(erpwave(&["detect", "--bogus"]).status.code(), Some(1));
    assert_eq!(erpwave(&["--help"]).status.code(), Some(0));
}

#[test]
fn synth_round_trips_through_detect() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "r.csv");
    assert!(erpwave(&["synth", "--positives", "4", "--negatives", "3", "--seed", "3", "--out", &input])
        .status
        .success());
    let text = fs::read_to_string(&input).unwrap();
    let body: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(body.len(), 7);

    let file = erpwave::io::read_trials(text.as_bytes(), None).unwrap();
    let corpus = erpwave::synth::make_corpus(&erpwave::synth::CorpusSpec {
        base: erpwave::TrialSpec::default(),
        positives: 4,
        negatives: 3,
        n1_range_ms: None,
        seed: 3,
    })
    .unwrap();
    for (rec, trial) in file.trials.iter().zip(&corpus) {
        for (a, b) in rec.signal.samples.iter().zip(&trial.signal.samples) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    let out = path(&dir, "r.json");
    let truth = path(&dir, "r.truth.csv");
    assert!(erpwave(&["detect", "--input", &input, "--truth", &truth, "--c-tau", "25", "--out", &out])
        .status
        .success());
    let v = json(&out);
    let ids: Vec<&str> = v["per_trial"].as_array().unwrap().iter().map(|t| t["trial_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["0", "1", "2", "3", "4", "5", "6"]);
    let report = &v["report"];
    assert_eq!(report["tp"].as_u64().unwrap() + report["fn"].as_u64().unwrap(), 4);
    assert_eq!(report["tn"].as_u64().unwrap() + report["fp"].as_u64().unwrap(), 3);
}

#[test]
fn config_echo_materializes_effective_settings() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "i.csv");
    assert!(erpwave(&["synth", "--count", "1", "--out", &input]).status.success());
    let cfg = path(&dir, "c.json");
    fs::write(&cfg, r#"{"padding_ms": 12, "c_tau": 3, "n_trials": 20}"#).unwrap();
    let out = path(&dir, "o.json");
    let o = erpwave(&[
        "detect", "--input", &input, "--config", &cfg, "--c-tau", "7.5", "--scale-band", "50:80", "--out", &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let echo: erpwave::DetectorConfig = serde_json::from_value(json(&out)["config_echo"].clone()).unwrap();
    let want = erpwave::DetectorConfig {
        padding_ms: 12.0,
        c_tau: 7.5,
        scale_band: [50.0, 80.0],
        ..erpwave::DetectorConfig::default()
    };
    assert_eq!(echo, want);
}

#[test]
fn group_delay_csv() {
    let dir = TempDir::new().unwrap();
    let haar = path(&dir, "haar.csv");
    assert!(erpwave(&["analyze", "group-delay", "haar", "--out", &haar]).status.success());
    let text = fs::read_to_string(&haar).unwrap();
    assert!(text.starts_with("omega,phase,group_delay,phase_delay\n"));
    let taus: Vec<f64> = csv_column(&text, 2).iter().filter(|s| !s.is_empty()).map(|s| s.parse().unwrap()).collect();
    assert!(taus.len() > 500);
    assert!(taus.iter().all(|t| (t - 0.5).abs() < 1e-9));

    let o = erpwave(&["analyze", "group-delay", "db4"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let taus: Vec<f64> = csv_column(&text, 2).iter().filter(|s| !s.is_empty()).map(|s| s.parse().unwrap()).collect();
    let (lo, hi) = taus.iter().fold((f64::MAX, f64::MIN), |(l, h), t| (l.min(*t), h.max(*t)));
    assert!(hi - lo > 0.1);

    assert_eq!(erpwave(&["analyze", "group-delay", "mexh"]).status.code(), Some(1));
}

#[test]
fn scale_energy_of_averaged_trials() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "p.csv");
    assert!(erpwave(&["synth", "--positives", "20", "--snr-db", "6", "--out", &input]).status.success());
    let o = erpwave(&["analyze", "scale-energy", "--input", &input]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 128);
    assert!(rows.iter().all(|(_, e)| *e >= 0.0));
}

#[test]
fn calibrate_halves_the_mean_peak() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "cal.csv");
    assert!(erpwave(&["synth", "--positives", "20", "--negatives", "5", "--seed", "2024", "--n1-range", "150:190", "--out", &input])
        .status
        .success());
    let out = path(&dir, "cal.json");
    let truth = path(&dir, "cal.truth.csv");
    let o = erpwave(&["analyze", "calibrate", "--input", &input, "--truth", &truth, "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert_eq!(v["n_trials"], 20);
    let peaks: Vec<f64> = v["per_trial_peaks"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).collect();
    let mean = peaks.iter().sum::<f64>() / peaks.len() as f64;
    assert!((v["c_tau"].as_f64().unwrap() - mean / 2.0).abs() < 1e-12 * mean);

    // The calibration document merges into a detector config.
    let o = erpwave(&["detect", "--input", &input, "--config", &out, "--out", &path(&dir, "d.json")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let echo = &json(&path(&dir, "d.json"))["config_echo"];
    assert_eq!(echo["c_tau"], v["c_tau"]);
    assert!(Path::new(&truth).exists());
}

#[test]
fn high_snr_positives_are_found() {
    let dir = TempDir::new().unwrap();
    let cal_in = path(&dir, "cal.csv");
    let cal_out = path(&dir, "cal.json");
    let trials = path(&dir, "hi.csv");
    let out = path(&dir, "hi.json");
    for (file, positives, seed) in [(&cal_in, "20", "1"), (&trials, "100", "2")] {
        let o = erpwave(&[
            "synth", "--positives", positives, "--snr-db", "12", "--n1-range", "150:190", "--seed", seed, "--out", file,
        ]);
        assert!(o.status.success());
    }
    assert!(erpwave(&["analyze", "calibrate", "--input", &cal_in, "--out", &cal_out]).status.success());
    assert!(erpwave(&["detect", "--input", &trials, "--config", &cal_out, "--out", &out]).status.success());
    let v = json(&out);
    let present = v["per_trial"].as_array().unwrap().iter().filter(|t| t["present"] == true).count();
    assert!(present >= 99, "{present}/100 present");
}
