//! The telemetry CSV schema: header `timestamp,<channel_id>,...`, strict
//! ISO-8601 UTC timestamps on a fixed grid, `.`-decimal values, empty
//! field = missing. Grid instants a file skips are materialized as missing
//! rows on load; export always writes every grid row, so a loaded frame
//! re-exports in canonical form.

use std::path::Path;

use sewercast_core::data::{ChannelKind, ChannelMeta, TimeSeriesFrame};

use crate::error::{CliError, Result};
use crate::timefmt;

pub fn parse_frame_csv(text: &str, expected_step: u32, origin: &Path) -> Result<TimeSeriesFrame> {
    let err = |line: usize, message: String| CliError::Csv {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty file".into()))?;
    let mut fields = header.split(',');
    if fields.next() != Some("timestamp") {
        return Err(err(1, "header must start with `timestamp`".into()));
    }
    let channels: Vec<ChannelMeta> = fields
        .map(|id| ChannelMeta { id: id.to_string(), kind: ChannelKind::infer(id) })
        .collect();
    if channels.is_empty() {
        return Err(err(1, "header declares no channels".into()));
    }
    if channels.iter().any(|c| c.id.is_empty()) {
        return Err(err(1, "header contains an empty channel id".into()));
    }

    let step = expected_step as i64;
    let mut start_unix: Option<i64> = None;
    let mut prev_unix: Option<i64> = None;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); channels.len()];

    for (index, row) in lines {
        let line = index + 1; // 1-based file line number
        if row.is_empty() {
            return Err(err(line, "blank row".into()));
        }
        let mut fields = row.split(',');
        let ts_text = fields.next().unwrap_or_default();
        let unix = timefmt::parse_utc(ts_text)
            .ok_or_else(|| err(line, format!("bad timestamp `{ts_text}`")))?;
        if let Some(prev) = prev_unix {
            if unix <= prev {
                return Err(err(line, format!(
                    "timestamp `{ts_text}` is not strictly increasing"
                )));
            }
        }
        let start = *start_unix.get_or_insert(unix);
        let delta = unix - start;
        if delta % step != 0 {
            return Err(err(line, format!(
                "timestamp `{ts_text}` is off the {expected_step}-second grid"
            )));
        }
        // Materialize any skipped grid instants as missing rows.
        let slot = (delta / step) as usize;
        for column in &mut columns {
            while column.len() < slot {
                column.push(f64::NAN);
            }
        }

        let mut count = 0;
        for (c, field) in fields.enumerate() {
            count += 1;
            if c >= channels.len() {
                continue;
            }
            let value = if field.is_empty() {
                f64::NAN
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    err(line, format!("channel `{}`: bad value `{field}`", channels[c].id))
                })?;
                if !v.is_finite() {
                    return Err(err(line, format!(
                        "channel `{}`: non-finite value `{field}`",
                        channels[c].id
                    )));
                }
                if channels[c].kind == ChannelKind::Level && v < 0.0 {
                    return Err(err(line, format!(
                        "channel `{}`: negative level {v}",
                        channels[c].id
                    )));
                }
                v
            };
            columns[c].push(value);
        }
        if count != channels.len() {
            return Err(err(line, format!(
                "expected {} value fields, found {count}",
                channels.len()
            )));
        }
        prev_unix = Some(unix);
    }

    let start = start_unix.ok_or_else(|| err(2, "file has no data rows".into()))?;
    TimeSeriesFrame::new(start, expected_step, channels, columns).map_err(CliError::from)
}

pub fn format_frame_csv(frame: &TimeSeriesFrame) -> String {
    let mut out = String::from("timestamp");
    for meta in frame.channels() {
        out.push(',');
        out.push_str(&meta.id);
    }
    out.push('\n');
    for t in 0..frame.len() {
        out.push_str(&timefmt::format_utc(frame.timestamp_at(t)));
        for c in 0..frame.channels().len() {
            out.push(',');
            let v = frame.column(c)[t];
            if !v.is_nan() {
                out.push_str(&format!("{v}"));
            }
        }
        out.push('\n');
    }
    out
}

pub fn load_frame(path: &Path, expected_step: u32) -> Result<TimeSeriesFrame> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_frame_csv(&text, expected_step, path)
}

pub fn save_frame(path: &Path, frame: &TimeSeriesFrame) -> Result<()> {
    std::fs::write(path, format_frame_csv(frame)).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn origin() -> PathBuf {
        PathBuf::from("test.csv")
    }

    #[test]
    fn well_formed_file_loads_without_missing_rows() {
        let text = "timestamp,cso_1,rain_1\n\
                    2014-03-19T00:00:00Z,0.5,0\n\
                    2014-03-19T00:10:00Z,0.6,0.1\n\
                    2014-03-19T00:20:00Z,0.7,\n";
        let frame = parse_frame_csv(text, 600, &origin()).unwrap();
        assert_eq!(frame.len(), 3);
        assert_eq!(frame.missing_count(), 1); // the empty rain field
        assert_eq!(frame.column(0), &[0.5, 0.6, 0.7]);
    }

    #[test]
    fn skipped_grid_instant_becomes_a_missing_row() {
        let text = "timestamp,cso_1\n\
                    2014-03-19T00:00:00Z,0.5\n\
                    2014-03-19T00:10:00Z,0.6\n\
                    2014-03-19T00:30:00Z,0.8\n\
                    2014-03-19T00:40:00Z,0.9\n";
        let frame = parse_frame_csv(text, 600, &origin()).unwrap();
        assert_eq!(frame.len(), 5);
        assert_eq!(frame.missing_count(), 1);
        assert!(frame.column(0)[2].is_nan());
    }

    #[test]
    fn off_grid_timestamp_is_rejected_with_its_line() {
        let text = "timestamp,cso_1\n\
                    2014-03-19T00:00:00Z,0.5\n\
                    2014-03-19T00:15:00Z,0.6\n";
        match parse_frame_csv(text, 600, &origin()) {
            Err(CliError::Csv { line: 3, message, .. }) => assert!(message.contains("off the")),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn non_monotonic_timestamps_are_rejected() {
        let text = "timestamp,cso_1\n\
                    2014-03-19T00:10:00Z,0.5\n\
                    2014-03-19T00:10:00Z,0.6\n";
        assert!(matches!(
            parse_frame_csv(text, 600, &origin()),
            Err(CliError::Csv { line: 3, .. })
        ));
    }

    #[test]
    fn bad_values_are_rejected_with_line_numbers() {
        for bad in ["x", "1,5", "nan", "inf"] {
            let text = format!(
                "timestamp,cso_1\n2014-03-19T00:00:00Z,0.5\n2014-03-19T00:10:00Z,{bad}\n"
            );
            match parse_frame_csv(&text, 600, &origin()) {
                Err(CliError::Csv { line: 3, .. }) => {}
                other => panic!("`{bad}` gave {other:?}"),
            }
        }
    }

    #[test]
    fn malformed_header_is_rejected() {
        assert!(matches!(
            parse_frame_csv("time,cso_1\n", 600, &origin()),
            Err(CliError::Csv { line: 1, .. })
        ));
    }

    #[test]
    fn export_then_load_is_a_fixed_point() {
        let text = "timestamp,cso_1,rain_1\n\
                    2014-03-19T00:00:00Z,0.5,0\n\
                    2014-03-19T00:20:00Z,0.7,0.25\n";
        let frame = parse_frame_csv(text, 600, &origin()).unwrap();
        let exported = format_frame_csv(&frame);
        let reloaded = parse_frame_csv(&exported, 600, &origin()).unwrap();
        assert_eq!(frame, reloaded);
        assert_eq!(exported, format_frame_csv(&reloaded));
    }
}
