//! Byte-stable CSV and JSON emission.
//!
//! Floats are written with 17 significant digits in scientific notation so
//! that every value parses back to the same `f64`.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

/// `1.2345678901234567e0` style, 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Pretty JSON formatter that routes floats through [`fmt_f64`].
struct FixedDigits<'a>(PrettyFormatter<'a>);

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Writes `value` as indented JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> io::Result<()> {
    {
        let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits(PrettyFormatter::new()));
        value.serialize(&mut ser).map_err(io::Error::other)?;
    }
    out.write_all(b"\n")
}

/// Single-line variant, mostly for tests and logs.
pub fn to_json_line<T: Serialize + ?Sized>(value: &T) -> String {
    struct Compact(CompactFormatter);
    impl Formatter for Compact {
        fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
            w.write_all(fmt_f64(value).as_bytes())
        }
    }
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Compact(CompactFormatter));
    value.serialize(&mut ser).expect("serializing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

/// Header block attached to every JSON artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub template: serde_json::Value,
    pub tolerances: serde_json::Value,
    /// From `SOURCE_DATE_EPOCH` when set, so repeated runs stay identical.
    pub timestamp: Option<String>,
}

impl Meta {
    pub fn new(template: serde_json::Value, tolerances: serde_json::Value) -> Self {
        Self {
            template,
            tolerances,
            timestamp: std::env::var("SOURCE_DATE_EPOCH").ok(),
        }
    }
}

/// Writes a CSV table; `row` renders one record into its fields.
pub fn write_csv<W: Write, T>(
    mut out: W,
    header: &[&str],
    rows: impl IntoIterator<Item = T>,
    row: impl Fn(&T) -> Vec<String>,
) -> io::Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        writeln!(out, "{}", row(&r).join(","))?;
    }
    Ok(())
}
