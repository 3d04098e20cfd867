//! Strict timestamp handling: the one accepted form is second-resolution
//! ISO-8601 UTC with a `Z` suffix, e.g. `2014-03-19T00:00:00Z`.

use chrono::{DateTime, NaiveDateTime};

pub const FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

pub fn parse_utc(text: &str) -> Option<i64> {
    // chrono tolerates unpadded numerics; the fixed-width check keeps the
    // accepted grammar exact.
    if text.len() != 20 {
        return None;
    }
    NaiveDateTime::parse_from_str(text, FORMAT).ok().map(|dt| dt.and_utc().timestamp())
}

pub fn format_utc(unix: i64) -> String {
    DateTime::from_timestamp(unix, 0)
        .expect("timestamp in representable range")
        .format(FORMAT)
        .to_string()
}
