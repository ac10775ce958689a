//! Result tables and their CSV / JSON / SVG renderings.

use crate::CliError;
use serde_json::{Map, Number, Value};
use std::fmt::Write as _;
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Null,
}

impl Cell {
    fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(v) => Some(v as f64),
            Cell::Num(v) if v.is_finite() => Some(v),
            _ => None,
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format_number(*v),
            Cell::Text(s) => csv_escape(s),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Num(v) => Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Null => Value::Null,
        }
    }

    fn from_json(v: &Value) -> Result<Self, CliError> {
        Ok(match v {
            Value::Null => Cell::Null,
            Value::String(s) => Cell::Text(s.clone()),
            Value::Bool(b) => Cell::Text(b.to_string()),
            Value::Number(n) if n.is_f64() => Cell::Num(n.as_f64().unwrap_or(f64::NAN)),
            Value::Number(n) => Cell::Int(
                n.as_i64()
                    .ok_or_else(|| CliError::Runtime(format!("integer out of range: {n}")))?,
            ),
            other => return Err(CliError::Runtime(format!("unexpected JSON value {other}"))),
        })
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

/// Plain decimal in `[1e-6, 1e6)`, scientific outside, shortest round-trip digits.
pub fn format_number(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = v.abs();
    if a != 0.0 && !(1e-6..1e6).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Metadata key holding the wall-clock runtime; the only field that varies
/// between identical runs.
pub const DURATION_KEY: &str = "duration_s";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultEnvelope {
    pub meta: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultEnvelope {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Cell>) {
        self.meta.push((key.to_string(), value.into()));
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta_value(&self, key: &str) -> Option<&Cell> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[idx]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}={}", v.csv());
        }
        out.push_str(&self.columns.iter().map(|c| csv_escape(c)).collect::<Vec<_>>().join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json_value(&self) -> Value {
        let meta: Map<String, Value> = self.meta.iter().map(|(k, v)| (k.clone(), v.json())).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect()))
            .collect();
        let mut top = Map::new();
        top.insert("meta".into(), Value::Object(meta));
        top.insert("rows".into(), Value::Array(rows));
        Value::Object(top)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("JSON values always serialize");
        s.push('\n');
        s
    }

    /// Inverse of [`ResultEnvelope::to_json`]. Column order is taken from the
    /// first row, so an empty table loses its header.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let v: Value = serde_json::from_str(text).map_err(|e| CliError::Runtime(format!("bad JSON: {e}")))?;
        let bad = || CliError::Runtime("JSON must be {\"meta\": {...}, \"rows\": [...]}".into());
        let meta = v.get("meta").and_then(Value::as_object).ok_or_else(bad)?;
        let rows = v.get("rows").and_then(Value::as_array).ok_or_else(bad)?;
        let mut env = ResultEnvelope::default();
        for (k, val) in meta {
            env.meta.push((k.clone(), Cell::from_json(val)?));
        }
        for row in rows {
            let obj = row.as_object().ok_or_else(bad)?;
            if env.columns.is_empty() {
                env.columns = obj.keys().cloned().collect();
            }
            let cells = env
                .columns
                .iter()
                .map(|c| obj.get(c).ok_or_else(bad).and_then(Cell::from_json))
                .collect::<Result<Vec<_>, _>>()?;
            env.rows.push(cells);
        }
        Ok(env)
    }

    /// One line chart per numeric column against the first column, stacked
    /// vertically in a single document.
    pub fn to_svg(&self) -> Result<String, CliError> {
        const W: f64 = 640.0;
        const H: f64 = 240.0;
        const PAD: f64 = 48.0;
        let xs: Vec<Option<f64>> = self.rows.iter().map(|r| r.first().and_then(Cell::as_f64)).collect();
        let series: Vec<usize> = (1..self.columns.len())
            .filter(|&c| self.rows.iter().any(|r| r[c].as_f64().is_some()))
            .collect();
        if self.columns.is_empty() || xs.iter().all(Option::is_none) || series.is_empty() {
            return Err(CliError::Runtime("table has no numeric series to plot".into()));
        }
        let (x0, x1) = bounds(xs.iter().flatten().copied());
        let mut out = String::new();
        let total_h = H * series.len() as f64;
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{total_h}" viewBox="0 0 {W} {total_h}" font-family="sans-serif" font-size="11">"#
        );
        for (panel, &col) in series.iter().enumerate() {
            let top = H * panel as f64;
            let ys: Vec<Option<f64>> = self.rows.iter().map(|r| r[col].as_f64()).collect();
            let (y0, y1) = bounds(ys.iter().flatten().copied());
            let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
            let py = |y: f64| top + H - PAD / 2.0 - (y - y0) / (y1 - y0) * (H - PAD);
            let _ = writeln!(out, r#"<g><title>{}</title>"#, xml_escape(&self.columns[col]));
            let _ = writeln!(
                out,
                r##"<rect x="{PAD}" y="{}" width="{}" height="{}" fill="none" stroke="#999"/>"##,
                top + PAD / 2.0,
                W - 2.0 * PAD,
                H - PAD
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="middle">{} vs {}</text>"#,
                W / 2.0,
                top + PAD / 2.0 - 6.0,
                xml_escape(&self.columns[col]),
                xml_escape(&self.columns[0])
            );
            for (label, y) in [(y0, py(y0)), (y1, py(y1))] {
                let _ = writeln!(
                    out,
                    r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                    PAD - 4.0,
                    y + 4.0,
                    format_number(label)
                );
            }
            for (label, x, anchor) in [(x0, PAD, "start"), (x1, W - PAD, "end")] {
                let _ = writeln!(
                    out,
                    r#"<text x="{x}" y="{}" text-anchor="{anchor}">{}</text>"#,
                    top + H - 6.0,
                    format_number(label)
                );
            }
            let mut segment: Vec<String> = Vec::new();
            let flush = |seg: &mut Vec<String>, out: &mut String| {
                if !seg.is_empty() {
                    let _ = writeln!(
                        out,
                        r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="1.2" points="{}"/>"##,
                        seg.join(" ")
                    );
                    seg.clear();
                }
            };
            for (x, y) in xs.iter().zip(&ys) {
                match (x, y) {
                    (Some(x), Some(y)) => segment.push(format!("{:.2},{:.2}", px(*x), py(*y))),
                    _ => flush(&mut segment, &mut out),
                }
            }
            flush(&mut segment, &mut out);
            out.push_str("</g>\n");
        }
        out.push_str("</svg>\n");
        Ok(out)
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Format as clap::ValueEnum>::from_str(s, true)
    }
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

pub fn emit(env: &ResultEnvelope, format: Format, sink: &mut dyn Write) -> Result<(), CliError> {
    let text = match format {
        Format::Csv => env.to_csv(),
        Format::Json => env.to_json(),
        Format::Svg => env.to_svg()?,
    };
    sink.write_all(text.as_bytes())
        .and_then(|_| sink.flush())
        .map_err(|e| CliError::Runtime(format!("cannot write output: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultEnvelope {
        let mut e = ResultEnvelope::new(&["x", "y", "note"]);
        e.meta("theta", 0.5);
        e.meta("planes", 3usize);
        e.meta("label", "a,b");
        e.push_row(vec![0.0.into(), 1e-7.into(), "p".into()]);
        e.push_row(vec![1.0.into(), 2.5e6.into(), Cell::Null]);
        e.push_row(vec![2.0.into(), 0.1.into(), "q\"r".into()]);
        e
    }

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(0.1), "0.1");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(123456.5), "123456.5");
        assert_eq!(format_number(1e6), "1e6");
        assert_eq!(format_number(2.5e-7), "2.5e-7");
        assert_eq!(format_number(-3.0e-9), "-3e-9");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(1e-6), "0.000001");
        for v in [0.1, 1.0 / 3.0, 2.5e-7, 6.02e23, -1e-300] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# theta=0.5");
        assert_eq!(lines[2], "# label=\"a,b\"");
        assert_eq!(lines[3], "x,y,note");
        assert_eq!(lines[4], "0,1e-7,p");
        assert_eq!(lines[5], "1,2.5e6,");
        assert_eq!(lines[6], "2,0.1,\"q\"\"r\"");
        assert!(!csv.contains('\r') && csv.ends_with('\n'));
    }

    #[test]
    fn json_round_trip() {
        let e = sample();
        let back = ResultEnvelope::from_json(&e.to_json()).unwrap();
        assert_eq!(back, e);
        let v: Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["rows"][1]["note"], Value::Null);
        assert_eq!(v["meta"]["planes"], Value::from(3));
    }

    #[test]
    fn svg_is_self_contained() {
        let svg = sample().to_svg().unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<g>").count(), 1);
        assert!(!svg.contains("href"));
        let mut text = ResultEnvelope::new(&["name", "value"]);
        text.push_row(vec!["a".into(), "b".into()]);
        assert!(text.to_svg().is_err());
    }
}
