//! CSV trial files, truth sidecars, JSON configs and run output.
//!
//! Trial files start with `# key=value` metadata lines (`sampling_rate` is
//! required) followed by either a wide table
//! `trial_id,channel,onset_index,sample_0,...` or a long table
//! `trial_id,channel,index,amplitude_uV`. Long tables may give a shared
//! onset with `# onset_index=...`.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::detector::{Detection, DetectorConfig, Peak};
use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::signal::{samples_to_ms, Signal};
use crate::synth::{LabeledTrial, Truth};

/// Keys of a calibration document that are not detector settings.
pub const CALIBRATION_KEYS: [&str; 3] = ["n_trials", "per_trial_peaks", "per_trial_scales"];

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: String,
    pub channel: String,
    pub signal: Signal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFile {
    pub sampling_rate: f64,
    pub trials: Vec<TrialRecord>,
}

impl TrialFile {
    pub fn from_corpus(corpus: &[LabeledTrial], channel: &str) -> Result<Self> {
        let sampling_rate = corpus.first().map_or(512.0, |t| t.signal.sampling_rate);
        if corpus.iter().any(|t| t.signal.sampling_rate != sampling_rate) {
            return Err(Error::InvalidArgument("corpus mixes sampling rates".into()));
        }
        Ok(Self {
            sampling_rate,
            trials: corpus
                .iter()
                .map(|t| TrialRecord {
                    trial_id: t.id.to_string(),
                    channel: channel.to_string(),
                    signal: t.signal.clone(),
                })
                .collect(),
        })
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_number(field: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("{what}: `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{what}: `{field}` is not finite")));
    }
    Ok(v)
}

fn parse_index(field: &str, line: usize, what: &str) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("{what}: `{field}` is not a non-negative integer")))
}

/// Splits leading `#` lines into metadata; returns the body and its first line number.
fn split_metadata(text: &str) -> Result<(BTreeMap<String, String>, &str, usize)> {
    let mut meta = BTreeMap::new();
    let mut offset = 0;
    let mut line = 1;
    for raw in text.split_inclusive('\n') {
        let trimmed = raw.trim();
        if !trimmed.starts_with('#') {
            break;
        }
        let body = trimmed.trim_start_matches('#').trim();
        if !body.is_empty() {
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| parse_err(line, format!("metadata `{body}` is not key=value")))?;
            meta.insert(k.trim().to_string(), v.trim().to_string());
        }
        offset += raw.len();
        line += 1;
    }
    Ok((meta, &text[offset..], line))
}

/// Reads a trial file; `rate` fills in a missing `sampling_rate` and must agree with a present one.
pub fn read_trials(mut reader: impl Read, rate: Option<f64>) -> Result<TrialFile> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let (meta, body, first_line) = split_metadata(&text)?;
    let file_rate = meta
        .get("sampling_rate")
        .map(|v| parse_number(v, 1, "sampling_rate"))
        .transpose()?;
    let sampling_rate = match (file_rate, rate) {
        (Some(f), Some(r)) if (f - r).abs() > 1e-9 * f => {
            return Err(Error::RateMismatch { filter: r, signal: f })
        }
        (Some(f), _) | (None, Some(f)) => f,
        (None, None) => return Err(parse_err(1, "missing `# sampling_rate=...` metadata line")),
    };
    if !(sampling_rate > 0.0) {
        return Err(parse_err(1, "sampling_rate must be positive"));
    }

    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(body.as_bytes());
    let header = csv
        .headers()
        .map_err(|e| parse_err(first_line, e.to_string()))?
        .clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    let line_of = |rec: &csv::StringRecord| {
        rec.position().map_or(first_line, |p| first_line + p.line() as usize - 1)
    };

    let mut trials = Vec::new();
    if cols.len() >= 3 && cols[..3] == ["trial_id", "channel", "onset_index"] {
        for (k, name) in cols[3..].iter().enumerate() {
            if *name != format!("sample_{k}") {
                return Err(parse_err(first_line, format!("expected column sample_{k}, found `{name}`")));
            }
        }
        for rec in csv.records() {
            let rec = rec.map_err(|e| parse_err(first_line, e.to_string()))?;
            let line = line_of(&rec);
            if rec.len() != cols.len() {
                return Err(parse_err(
                    line,
                    format!("expected {} fields, found {}", cols.len(), rec.len()),
                ));
            }
            let onset = match rec[2].trim() {
                "" => None,
                v => Some(parse_index(v, line, "onset_index")?),
            };
            let samples = (3..rec.len())
                .map(|i| parse_number(&rec[i], line, cols[i]))
                .collect::<Result<Vec<_>>>()?;
            let mut signal = Signal::new(samples, sampling_rate);
            signal.onset = onset;
            signal.validate().map_err(|e| parse_err(line, e.to_string()))?;
            trials.push(TrialRecord {
                trial_id: rec[0].trim().to_string(),
                channel: rec[1].trim().to_string(),
                signal,
            });
        }
    } else if cols == ["trial_id", "channel", "index", "amplitude_uV"] {
        let onset = meta
            .get("onset_index")
            .map(|v| parse_index(v, 1, "onset_index"))
            .transpose()?;
        for rec in csv.records() {
            let rec = rec.map_err(|e| parse_err(first_line, e.to_string()))?;
            let line = line_of(&rec);
            if rec.len() != 4 {
                return Err(parse_err(line, format!("expected 4 fields, found {}", rec.len())));
            }
            let (id, channel) = (rec[0].trim(), rec[1].trim());
            let index = parse_index(&rec[2], line, "index")?;
            let value = parse_number(&rec[3], line, "amplitude_uV")?;
            let same = matches!(trials.last(), Some(t) if t.trial_id == id && t.channel == channel);
            if !same {
                let mut signal = Signal::new(Vec::new(), sampling_rate);
                signal.onset = onset;
                trials.push(TrialRecord {
                    trial_id: id.to_string(),
                    channel: channel.to_string(),
                    signal,
                });
            }
            let current = trials.last_mut().expect("pushed above");
            if index != current.signal.samples.len() {
                return Err(parse_err(
                    line,
                    format!("index {index} out of sequence (expected {})", current.signal.samples.len()),
                ));
            }
            current.signal.samples.push(value);
        }
        for t in &trials {
            t.signal.validate()?;
        }
    } else {
        return Err(parse_err(
            first_line,
            "header must start with trial_id,channel,onset_index,sample_0 or be trial_id,channel,index,amplitude_uV",
        ));
    }
    Ok(TrialFile {
        sampling_rate,
        trials,
    })
}

/// Writes the wide form; every trial must have the same length.
pub fn write_trials(mut writer: impl Write, file: &TrialFile) -> Result<()> {
    let n = file.trials.first().map_or(0, |t| t.signal.len());
    if file.trials.iter().any(|t| t.signal.len() != n) {
        return Err(Error::InvalidArgument("wide trial files need equal trial lengths".into()));
    }
    writeln!(writer, "# sampling_rate={}", file.sampling_rate)?;
    let mut csv = csv::WriterBuilder::new().from_writer(writer);
    let mut header = vec!["trial_id".to_string(), "channel".into(), "onset_index".into()];
    header.extend((0..n).map(|k| format!("sample_{k}")));
    csv.write_record(&header).map_err(csv_err)?;
    for t in &file.trials {
        let mut row = vec![
            t.trial_id.clone(),
            t.channel.clone(),
            t.signal.onset.map_or_else(String::new, |o| o.to_string()),
        ];
        row.extend(t.signal.samples.iter().map(|v| v.to_string()));
        csv.write_record(&row).map_err(csv_err)?;
    }
    csv.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub trial_id: String,
    pub has_erp: bool,
    pub n1_index: Option<usize>,
}

impl TruthRecord {
    pub fn truth(&self) -> Truth {
        Truth {
            has_erp: self.has_erp,
            n1_index: self.n1_index,
        }
    }
}

pub fn write_truth(writer: impl Write, corpus: &[LabeledTrial]) -> Result<()> {
    let mut csv = csv::WriterBuilder::new().from_writer(writer);
    csv.write_record(["trial_id", "has_erp", "n1_index"]).map_err(csv_err)?;
    for t in corpus {
        csv.write_record([
            t.id.to_string(),
            t.truth.has_erp.to_string(),
            t.truth.n1_index.map_or_else(String::new, |i| i.to_string()),
        ])
        .map_err(csv_err)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_truth(reader: impl Read) -> Result<Vec<TruthRecord>> {
    let mut csv = csv::ReaderBuilder::new().from_reader(reader);
    let header: Vec<String> = csv
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header != ["trial_id", "has_erp", "n1_index"] {
        return Err(parse_err(1, "truth header must be trial_id,has_erp,n1_index"));
    }
    let mut out = Vec::new();
    for rec in csv.records() {
        let rec = rec.map_err(|e| parse_err(0, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(parse_err(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let has_erp = match rec[1].trim() {
            "true" | "1" => true,
            "false" | "0" => false,
            other => return Err(parse_err(line, format!("has_erp: `{other}` is not a boolean"))),
        };
        let n1_index = match rec[2].trim() {
            "" => None,
            v => Some(parse_index(v, line, "n1_index")?),
        };
        if has_erp && n1_index.is_none() {
            return Err(parse_err(line, "positive trial without n1_index"));
        }
        out.push(TruthRecord {
            trial_id: rec[0].trim().to_string(),
            has_erp,
            n1_index,
        });
    }
    Ok(out)
}

/// Merges JSON config documents in order (later keys win) on top of the defaults.
pub fn load_config(documents: &[&str]) -> Result<DetectorConfig> {
    let mut merged = serde_json::to_value(DetectorConfig::default())?;
    for doc in documents {
        let value: Value = serde_json::from_str(doc)?;
        let Value::Object(map) = value else {
            return Err(Error::config("<root>", "config must be a JSON object"));
        };
        merge(&mut merged, map);
    }
    let config: DetectorConfig = serde_json::from_value(merged).map_err(|e| Error::config("<json>", e.to_string()))?;
    config.validate()?;
    Ok(config)
}

fn merge(into: &mut Value, from: Map<String, Value>) {
    let known: Vec<String> = into.as_object().map_or_else(Vec::new, |m| m.keys().cloned().collect());
    for (k, v) in from {
        if CALIBRATION_KEYS.contains(&k.as_str()) && !known.contains(&k) {
            continue;
        }
        match (into.get_mut(&k), v) {
            (Some(slot @ Value::Object(_)), Value::Object(inner)) => merge(slot, inner),
            (_, v) => {
                into[k.as_str()] = v;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakOutput {
    pub ms: f64,
    pub uv: f64,
}

impl From<Peak> for PeakOutput {
    fn from(p: Peak) -> Self {
        Self {
            ms: p.latency_ms,
            uv: p.amplitude,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutput {
    pub trial_id: String,
    pub channel: String,
    pub present: bool,
    pub start_ms: f64,
    pub end_ms: f64,
    pub p1: Option<PeakOutput>,
    pub n1: Option<PeakOutput>,
    pub p2: Option<PeakOutput>,
    pub score: Option<f64>,
    pub best_scale: f64,
    pub retried: bool,
}

impl TrialOutput {
    pub fn new(trial_id: &str, channel: &str, d: &Detection, sampling_rate: f64) -> Self {
        Self {
            trial_id: trial_id.to_string(),
            channel: channel.to_string(),
            present: d.present,
            start_ms: samples_to_ms(d.start_index as f64, sampling_rate),
            end_ms: samples_to_ms(d.end_index as f64, sampling_rate),
            p1: d.p1.map(Into::into),
            n1: d.n1.map(Into::into),
            p2: d.p2.map(Into::into),
            score: d.pair.as_ref().map(|p| p.score),
            best_scale: d.best_scale,
            retried: d.retried,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub config_echo: DetectorConfig,
    pub per_trial: Vec<TrialOutput>,
    pub report: Option<EvalReport>,
}

impl RunOutput {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Ordering key for trial ids: numeric ids first in numeric order, then the rest lexically.
pub fn trial_order(id: &str) -> (u8, u64, String) {
    match id.parse::<u64>() {
        Ok(n) => (0, n, String::new()),
        Err(_) => (1, 0, id.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_round_trip() {
        let file = TrialFile {
            sampling_rate: 512.0,
            trials: vec![
                TrialRecord {
                    trial_id: "0".into(),
                    channel: "P8".into(),
                    signal: Signal::new(vec![0.1, -2.5e-7, 1.0 / 3.0], 512.0).with_onset(1),
                },
                TrialRecord {
                    trial_id: "1".into(),
                    channel: "P8".into(),
                    signal: Signal::new(vec![4.0, 5.0, 6.0], 512.0),
                },
            ],
        };
        let mut buf = Vec::new();
        write_trials(&mut buf, &file).unwrap();
        let back = read_trials(buf.as_slice(), None).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn long_form() {
        let text = "# sampling_rate=256\n# onset_index=1\ntrial_id,channel,index,amplitude_uV\na,Cz,0,1.5\na,Cz,1,2\nb,Cz,0,3\nb,Cz,1,4\n";
        let f = read_trials(text.as_bytes(), None).unwrap();
        assert_eq!(f.trials.len(), 2);
        assert_eq!(f.trials[0].signal.samples, vec![1.5, 2.0]);
        assert_eq!(f.trials[0].signal.onset, Some(1));
        assert_eq!(f.sampling_rate, 256.0);
    }

    #[test]
    fn errors_cite_lines() {
        let text = "# sampling_rate=512\ntrial_id,channel,onset_index,sample_0,sample_1\n0,Cz,,1,2\n1,Cz,,1,oops\n";
        match read_trials(text.as_bytes(), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let short = "# sampling_rate=512\ntrial_id,channel,onset_index,sample_0,sample_1\n0,Cz,,1\n";
        assert!(matches!(read_trials(short.as_bytes(), None), Err(Error::Parse { line: 3, .. })));
        let no_rate = "trial_id,channel,onset_index,sample_0\n0,Cz,,1\n";
        assert!(read_trials(no_rate.as_bytes(), None).is_err());
        assert_eq!(read_trials(no_rate.as_bytes(), Some(100.0)).unwrap().sampling_rate, 100.0);
    }

    #[test]
    fn config_merging() {
        let c = load_config(&[r#"{"c_tau": 1.0, "scale_band": [50, 80]}"#, r#"{"c_tau": 2.0, "n_trials": 20, "per_trial_peaks": [4.0]}"#]).unwrap();
        assert_eq!(c.c_tau, 2.0);
        assert_eq!(c.scale_band, [50.0, 80.0]);
        match load_config(&[r#"{"gaussian_sigma": 3}"#]) {
            Err(Error::InvalidConfig { reason, .. }) => assert!(reason.contains("gaussian_sigma")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            load_config(&[r#"{"padding_ms": -1}"#]),
            Err(Error::InvalidConfig { field, .. }) if field == "padding_ms"
        ));
    }

    #[test]
    fn truth_round_trip() {
        let text = "trial_id,has_erp,n1_index\n0,true,189\n1,false,\n";
        let t = read_truth(text.as_bytes()).unwrap();
        assert_eq!(t[0].n1_index, Some(189));
        assert!(!t[1].has_erp);
    }

    #[test]
    fn absent_output_has_nulls() {
        let d = Detection::absent(65.0, false);
        let json = serde_json::to_value(TrialOutput::new("3", "P8", &d, 512.0)).unwrap();
        assert_eq!(json["start_ms"], 0.0);
        assert!(json["p1"].is_null() && json["score"].is_null());
    }
}
