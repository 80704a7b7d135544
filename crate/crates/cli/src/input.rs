use std::fmt;
use std::path::Path;

use circkde::AngleSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Radians,
    Degrees,
}

impl Unit {
    pub fn from_flag(degrees: bool) -> Self {
        if degrees {
            Unit::Degrees
        } else {
            Unit::Radians
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Unit::Radians => "radians",
            Unit::Degrees => "degrees",
        }
    }
}

#[derive(Debug)]
pub enum InputError {
    Unreadable { path: String, source: std::io::Error },
    BadLine { line: usize, content: String },
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputError::Unreadable { path, source } => write!(f, "cannot read {path}: {source}"),
            InputError::BadLine { line, content } => {
                write!(f, "line {line}: expected a finite angle, found {content:?}")
            }
        }
    }
}

/// One angle per line; blank lines and lines starting with `#` are skipped.
/// Anything after the first whitespace-separated token is an error.
pub fn parse_angles(text: &str, unit: Unit) -> Result<AngleSample, InputError> {
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || InputError::BadLine {
            line: i + 1,
            content: line.to_string(),
        };
        let v: f64 = line.parse().map_err(|_| bad())?;
        if !v.is_finite() {
            return Err(bad());
        }
        values.push(v);
    }
    let sample = match unit {
        Unit::Radians => AngleSample::from_radians(values),
        Unit::Degrees => AngleSample::from_degrees(values),
    };
    Ok(sample.expect("values checked finite"))
}

pub fn read_angles(path: &Path, unit: Unit) -> Result<AngleSample, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    parse_angles(&text, unit)
}

/// Angles in `unit`, one per line, in shortest round-trip form.
pub fn format_angles(sample: &AngleSample, unit: Unit, header: &str) -> String {
    let mut out = format!("# {header}\n");
    for &t in sample.as_slice() {
        let v = match unit {
            Unit::Radians => t,
            Unit::Degrees => t.to_degrees(),
        };
        out.push_str(&format!("{v}\n"));
    }
    out
}
