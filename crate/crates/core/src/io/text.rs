use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

use crate::error::{Error, Result};

/// C-style `%.9e`: `1.234567890e+05`.
pub fn fmt_sci(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.9e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed write never leaves a partial file at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn parse_err(
    path: &Path,
    line: usize,
    column: usize,
    message: impl Into<String>,
) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

/// Parses one comma-separated row of decimal floats; `line` is 1-based.
pub(crate) fn parse_row(path: &Path, line: usize, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .enumerate()
        .map(|(c, cell)| {
            let cell = cell.trim();
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    parse_err(path, line, c + 1, format!("not a finite number: {cell:?}"))
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn c_style_exponent() {
        assert_eq!(fmt_sci(123456.789), "1.234567890e+05");
        assert_eq!(fmt_sci(-0.00012), "-1.200000000e-04");
        assert_eq!(fmt_sci(0.0), "0.000000000e+00");
        assert_eq!(fmt_sci(1e120), "1.000000000e+120");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomic(&dir.path().join("missing/a.txt"), b"x").is_err());
    }

    #[test]
    fn row_errors_carry_position() {
        let p = Path::new("m.csv");
        match parse_row(p, 4, "1.0, 2.0,abc") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (4, 3)),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn printed_precision_round_trip(v in -1e12f64..1e12) {
            let back: f64 = fmt_sci(v).parse().unwrap();
            prop_assert!((back - v).abs() <= 5e-10 * v.abs());
            prop_assert_eq!(fmt_sci(back), fmt_sci(v));
        }
    }
}
