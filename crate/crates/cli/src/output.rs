//! Fixed-precision number formatting and output sinks.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::CliError;

/// Scientific notation with 12 significant digits; `nan`/`inf` spelled out.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// JSON number rounded to 12 significant digits, `null` if not finite.
pub fn json_num(x: f64) -> Value {
    if x.is_finite() {
        let rounded: f64 = num(x).parse().expect("formatted float parses");
        serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
    } else {
        Value::Null
    }
}

pub fn json_opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, json_num)
}

pub fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

pub fn write(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    let io = |source, path: &Path| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io(e, path)),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            // a reader such as `head` that stops early is not an error
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(|e| io(e, Path::new("<stdout>"))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(num(-2.5e10), "-2.50000000000e10");
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(json_num(1.0 / 3.0).as_f64(), Some(0.333333333333));
        assert_eq!(json_num(f64::INFINITY), Value::Null);
    }
}
