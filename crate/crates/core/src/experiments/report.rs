//! Output files. Every table starts with `#`-prefixed metadata lines (schema
//! tag first), followed by a CSV header and rows.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use super::collapse::{CollapseFit, CurveCrossing};
use super::scan::ThresholdPoint;
use super::timing::TimingPoint;
use crate::error::{Error, Result};
use crate::pipeline::{DecoderKind, EffectiveRatePoint};

pub const THRESHOLD_SCHEMA: &str = "dcqec-threshold/1";
pub const TIMING_SCHEMA: &str = "dcqec-timing/1";
pub const EFFECTIVE_RATE_SCHEMA: &str = "dcqec-effective-rate/1";
pub const LOSS_SCHEMA: &str = "dcqec-loss/1";
pub const COLLAPSE_SCHEMA: &str = "dcqec-collapse/1";

/// Ordered key/value pairs echoed at the top of every output file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub entries: Vec<(String, String)>,
}

impl Metadata {
    /// Starts with the tool name and version.
    pub fn new() -> Self {
        Self::default().with("tool", format!("dcqec {}", env!("CARGO_PKG_VERSION")))
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn write_block(&self, w: &mut dyn Write, schema: &str) -> Result<()> {
        writeln!(w, "# schema: {schema}")?;
        for (k, v) in &self.entries {
            writeln!(w, "# {k}: {}", v.replace('\n', " "))?;
        }
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    }
}

#[derive(Serialize, Deserialize)]
struct ThresholdRow {
    decoder: String,
    #[serde(rename = "L")]
    size: usize,
    p: f64,
    trials: u64,
    failures: u64,
    failure_rate: f64,
    stderr: f64,
}

pub fn write_threshold_csv<W: Write>(
    mut w: W,
    meta: &Metadata,
    decoder: DecoderKind,
    points: &[ThresholdPoint],
) -> Result<()> {
    meta.write_block(&mut w, THRESHOLD_SCHEMA)?;
    let mut out = csv::Writer::from_writer(w);
    for p in points {
        out.serialize(ThresholdRow {
            decoder: decoder.tag().into(),
            size: p.size,
            p: p.p_err,
            trials: p.trials,
            failures: p.failures,
            failure_rate: p.failure_rate(),
            stderr: p.standard_error(),
        })
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a file written by [`write_threshold_csv`].
pub fn read_threshold_csv<R: Read>(r: R) -> Result<(Metadata, Vec<(DecoderKind, ThresholdPoint)>)> {
    let mut meta = Metadata::default();
    let mut body = String::new();
    for line in BufReader::new(r).lines() {
        let line = line?;
        match line.strip_prefix("# ") {
            Some(kv) => {
                let (k, v) = kv.split_once(": ").unwrap_or((kv, ""));
                meta.push(k, v);
            }
            None => {
                body.push_str(&line);
                body.push('\n');
            }
        }
    }
    if meta.get("schema") != Some(THRESHOLD_SCHEMA) {
        return Err(Error::InvalidArgument(format!(
            "expected schema {THRESHOLD_SCHEMA}, found {:?}",
            meta.get("schema")
        )));
    }
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(body.as_bytes()).deserialize::<ThresholdRow>() {
        let row = row.map_err(csv_err)?;
        let kind = row.decoder.parse().map_err(Error::InvalidArgument)?;
        rows.push((
            kind,
            ThresholdPoint {
                size: row.size,
                p_err: row.p,
                trials: row.trials,
                failures: row.failures,
            },
        ));
    }
    Ok((meta, rows))
}

#[derive(Serialize)]
struct TimingRow<'a> {
    decoder: &'a str,
    #[serde(rename = "L")]
    size: usize,
    p: f64,
    instances: u64,
    mean_us: f64,
    var_us: f64,
}

pub fn write_timing_csv<W: Write>(mut w: W, meta: &Metadata, points: &[TimingPoint]) -> Result<()> {
    meta.write_block(&mut w, TIMING_SCHEMA)?;
    let mut out = csv::Writer::from_writer(w);
    for p in points {
        out.serialize(TimingRow {
            decoder: p.decoder.tag(),
            size: p.size,
            p: p.p_err,
            instances: p.instances,
            mean_us: p.mean_us,
            var_us: p.var_us,
        })
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EffectiveRateRow {
    #[serde(rename = "L")]
    size: usize,
    p_err: f64,
    p_eff: f64,
    trials: u64,
    ratio: Option<f64>,
}

/// `ratio` is left blank where `p_eff = 0`.
pub fn write_effective_rate_csv<W: Write>(
    mut w: W,
    meta: &Metadata,
    size: usize,
    points: &[EffectiveRatePoint],
) -> Result<()> {
    meta.write_block(&mut w, EFFECTIVE_RATE_SCHEMA)?;
    let mut out = csv::Writer::from_writer(w);
    for p in points {
        out.serialize(EffectiveRateRow {
            size,
            p_err: p.p_err,
            p_eff: p.p_eff,
            trials: p.trials,
            ratio: p.ratio(),
        })
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_loss_csv<W: Write>(mut w: W, meta: &Metadata, losses: &[f64]) -> Result<()> {
    meta.write_block(&mut w, LOSS_SCHEMA)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["batch", "loss"]).map_err(csv_err)?;
    for (i, l) in losses.iter().enumerate() {
        out.write_record([i.to_string(), l.to_string()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CollapseSummary<'a> {
    schema: &'a str,
    metadata: serde_json::Map<String, serde_json::Value>,
    #[serde(flatten)]
    fit: &'a CollapseFit,
    raw_crossings: &'a [CurveCrossing],
}

pub fn write_collapse_json<W: Write>(
    mut w: W,
    meta: &Metadata,
    fit: &CollapseFit,
    crossings: &[CurveCrossing],
) -> Result<()> {
    let metadata = meta
        .entries
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
        .collect();
    let summary = CollapseSummary {
        schema: COLLAPSE_SCHEMA,
        metadata,
        fit,
        raw_crossings: crossings,
    };
    serde_json::to_writer_pretty(&mut w, &summary).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points() -> Vec<ThresholdPoint> {
        vec![
            ThresholdPoint {
                size: 7,
                p_err: 0.13,
                trials: 1000,
                failures: 301,
            },
            ThresholdPoint {
                size: 11,
                p_err: 0.1 + 0.2,
                trials: 1000,
                failures: 0,
            },
        ]
    }

    #[test]
    fn threshold_csv_round_trip() {
        let meta = Metadata::new().with("seed", 5).with("sizes", "7,11");
        let mut buf = Vec::new();
        write_threshold_csv(&mut buf, &meta, DecoderKind::MlUf, &points()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# schema: dcqec-threshold/1\n# tool: dcqec "));
        assert!(text.contains("decoder,L,p,trials,failures,failure_rate,stderr\n"));
        let (m, rows) = read_threshold_csv(buf.as_slice()).unwrap();
        assert_eq!(m.get("seed"), Some("5"));
        assert_eq!(m.get("sizes"), Some("7,11"));
        let pts: Vec<_> = rows.iter().map(|r| r.1).collect();
        assert_eq!(pts, points());
        assert!(rows.iter().all(|r| r.0 == DecoderKind::MlUf));
    }

    #[test]
    fn blank_ratio_when_nothing_left() {
        let mut buf = Vec::new();
        let pts = [
            EffectiveRatePoint {
                p_err: 0.0,
                p_eff: 0.0,
                trials: 10,
            },
            EffectiveRatePoint {
                p_err: 0.1,
                p_eff: 0.025,
                trials: 10,
            },
        ];
        write_effective_rate_csv(&mut buf, &Metadata::new(), 31, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "L,p_err,p_eff,trials,ratio");
        assert_eq!(rows[1], "31,0.0,0.0,10,");
        assert_eq!(rows[2], "31,0.1,0.025,10,4.0");
    }

    #[test]
    fn collapse_json_has_keys() {
        let fit = CollapseFit {
            p_th: 0.146,
            p_th_err: 0.001,
            nu: 1.5,
            nu_err: 0.1,
            quality: 1.1,
            coefficients: [0.3, 1.0, 0.5],
            resamples: 10,
        };
        let mut buf = Vec::new();
        write_collapse_json(&mut buf, &Metadata::new().with("seed", 1), &fit, &[]).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        for key in ["p_th", "p_th_err", "nu", "nu_err", "quality"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["schema"], COLLAPSE_SCHEMA);
        assert_eq!(v["metadata"]["seed"], "1");
    }
}
