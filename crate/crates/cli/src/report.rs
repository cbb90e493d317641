//! Deterministic report rendering.
//!
//! JSON output has sorted keys (reports are built on `serde_json`'s BTree
//! map) and every float is printed at 12 significant digits, which f64
//! survives exactly on a parse/serialize round trip. Text output walks the
//! same tree, so the two modes always agree.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::error::CliError;

/// Pretty printer that pins float formatting; everything else matches the
/// stock two-space pretty formatter.
struct CanonicalFormatter {
    indent: usize,
    has_value: bool,
}

impl CanonicalFormatter {
    fn new() -> Self {
        CanonicalFormatter {
            indent: 0,
            has_value: false,
        }
    }

    fn newline<W: ?Sized + io::Write>(&self, writer: &mut W) -> io::Result<()> {
        writer.write_all(b"\n")?;
        for _ in 0..self.indent {
            writer.write_all(b"  ")?;
        }
        Ok(())
    }
}

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.11e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent += 1;
        self.has_value = false;
        writer.write_all(b"[")
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent -= 1;
        if self.has_value {
            self.newline(writer)?;
        }
        writer.write_all(b"]")
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        if !first {
            writer.write_all(b",")?;
        }
        self.newline(writer)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, _writer: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent += 1;
        self.has_value = false;
        writer.write_all(b"{")
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent -= 1;
        if self.has_value {
            self.newline(writer)?;
        }
        writer.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        if !first {
            writer.write_all(b",")?;
        }
        self.newline(writer)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        writer.write_all(b": ")
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, _writer: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }
}

pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter::new());
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Integrity(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| CliError::Integrity(format!("non-utf8 output: {e}")))
}

/// Wraps a float for a report, rejecting non-finite values instead of letting
/// them degrade to JSON null.
pub fn num(x: f64) -> Result<Value, CliError> {
    if !x.is_finite() {
        return Err(CliError::Integrity(format!(
            "non-finite value {x} in report"
        )));
    }
    Ok(Value::from(x))
}

pub fn complex_pairs(v: &qlebesgue::CVector) -> Result<Value, CliError> {
    let mut rows = Vec::with_capacity(v.len());
    for z in v.iter() {
        rows.push(Value::Array(vec![num(z.re)?, num(z.im)?]));
    }
    Ok(Value::Array(rows))
}

pub fn real_list(xs: &[f64]) -> Result<Value, CliError> {
    let mut rows = Vec::with_capacity(xs.len());
    for &x in xs {
        rows.push(num(x)?);
    }
    Ok(Value::Array(rows))
}

/// Plain-text summary: a deterministic walk of the same tree.
pub fn render_text(value: &Value) -> String {
    let mut out = String::new();
    render_into(value, 0, None, &mut out);
    out
}

fn render_into(value: &Value, depth: usize, key: Option<&str>, out: &mut String) {
    let pad = "  ".repeat(depth);
    let label = key.map(|k| format!("{k}: ")).unwrap_or_default();
    match value {
        Value::Object(map) => {
            if let Some(k) = key {
                out.push_str(&format!("{pad}{k}:\n"));
            }
            for (k, v) in map {
                render_into(v, depth + usize::from(key.is_some()), Some(k), out);
            }
        }
        Value::Array(items) if items.iter().all(is_scalar) => {
            let rendered: Vec<String> = items.iter().map(scalar_text).collect();
            out.push_str(&format!("{pad}{label}[{}]\n", rendered.join(", ")));
        }
        Value::Array(items) => {
            out.push_str(&format!("{pad}{label}\n"));
            for v in items {
                render_into(v, depth + 1, None, out);
            }
        }
        _ => {
            out.push_str(&format!("{pad}{label}{}\n", scalar_text(value)));
        }
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Object(_)) && !matches!(v, Value::Array(items) if !items.iter().all(is_scalar))
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:.11e}"),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Null => "null".to_string(),
        Value::Array(items) => {
            let inner: Vec<String> = items.iter().map(scalar_text).collect();
            format!("[{}]", inner.join(", "))
        }
        Value::Object(_) => unreachable!("objects are not scalars"),
    }
}
