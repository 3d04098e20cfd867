//! Text serialization of evaluation reports: one block per model, keyed by
//! station id, with the fixed field names cc/rmse/nse/n/horizon/model.

use std::path::Path;

use sewercast_core::metrics::{MetricsReport, StationEntry, StationMetrics};

use crate::error::{CliError, Result};

pub fn format_report(report: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("model {}\n", report.model_label));
    out.push_str(&format!("horizon {}\n", report.horizon));
    for s in &report.stations {
        match &s.outcome {
            Ok(m) => out.push_str(&format!(
                "station {} cc {} rmse {} nse {} n {}\n",
                s.station_id, m.cc, m.rmse, m.nse, s.n
            )),
            Err(e) => out.push_str(&format!("station {} error \"{}\" n {}\n", s.station_id, e, s.n)),
        }
    }
    out
}

/// Several reports in one document (e.g. model plus baseline), separated by
/// blank lines.
pub fn format_reports(reports: &[MetricsReport]) -> String {
    reports.iter().map(format_report).collect::<Vec<_>>().join("\n")
}

pub fn parse_reports(text: &str, origin: &Path) -> Result<Vec<MetricsReport>> {
    let err = |line: usize, message: String| CliError::Csv {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut reports = Vec::new();
    let mut current: Option<MetricsReport> = None;
    for (index, line) in text.lines().enumerate() {
        let lineno = index + 1;
        if line.is_empty() {
            if let Some(r) = current.take() {
                reports.push(r);
            }
            continue;
        }
        if let Some(label) = line.strip_prefix("model ") {
            if let Some(r) = current.take() {
                reports.push(r);
            }
            current = Some(MetricsReport {
                model_label: label.to_string(),
                horizon: 0,
                stations: Vec::new(),
            });
        } else if let Some(h) = line.strip_prefix("horizon ") {
            let report =
                current.as_mut().ok_or_else(|| err(lineno, "horizon before model".into()))?;
            report.horizon =
                h.parse().map_err(|_| err(lineno, format!("bad horizon `{h}`")))?;
        } else if let Some(rest) = line.strip_prefix("station ") {
            let report =
                current.as_mut().ok_or_else(|| err(lineno, "station before model".into()))?;
            report.stations.push(parse_station(rest).map_err(|m| err(lineno, m))?);
        } else {
            return Err(err(lineno, format!("unknown report line `{line}`")));
        }
    }
    if let Some(r) = current.take() {
        reports.push(r);
    }
    Ok(reports)
}

fn parse_station(rest: &str) -> std::result::Result<StationEntry, String> {
    let (id, rest) = rest.split_once(' ').ok_or("missing station fields")?;
    if let Some(rest) = rest.strip_prefix("error ") {
        let (msg, rest) = rest
            .strip_prefix('"')
            .and_then(|r| r.split_once('"'))
            .ok_or("malformed error message")?;
        let n: usize = rest
            .trim()
            .strip_prefix("n ")
            .and_then(|v| v.parse().ok())
            .ok_or("missing sample count")?;
        return Ok(StationEntry { station_id: id.to_string(), n, outcome: Err(msg.to_string()) });
    }
    let fields: Vec<&str> = rest.split(' ').collect();
    if fields.len() != 8 || fields[0] != "cc" || fields[2] != "rmse" || fields[4] != "nse" || fields[6] != "n" {
        return Err(format!("malformed station fields `{rest}`"));
    }
    let parse = |what: &str, v: &str| -> std::result::Result<f64, String> {
        v.parse().map_err(|_| format!("bad {what} `{v}`"))
    };
    Ok(StationEntry {
        station_id: id.to_string(),
        n: fields[7].parse().map_err(|_| format!("bad n `{}`", fields[7]))?,
        outcome: Ok(StationMetrics {
            cc: parse("cc", fields[1])?,
            rmse: parse("rmse", fields[3])?,
            nse: parse("nse", fields[5])?,
        }),
    })
}
