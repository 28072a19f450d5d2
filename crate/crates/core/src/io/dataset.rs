use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::text::{fmt_sci, parse_err, parse_row, read_text, write_atomic};
use crate::error::{Error, Result};
use crate::signal::Spectrogram;

pub const FREQ_UNIT: &str = "frequency_hz";

/// What the matrix columns are indexed by.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnAxis {
    PowerDbm(Vec<f64>),
    TimeS(Vec<f64>),
}

impl ColumnAxis {
    pub fn unit(&self) -> &'static str {
        match self {
            ColumnAxis::PowerDbm(_) => "power_dbm",
            ColumnAxis::TimeS(_) => "time_s",
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            ColumnAxis::PowerDbm(v) | ColumnAxis::TimeS(v) => v,
        }
    }

    fn from_unit(unit: &str, values: Vec<f64>) -> Option<Self> {
        match unit {
            "power_dbm" => Some(ColumnAxis::PowerDbm(values)),
            "time_s" => Some(ColumnAxis::TimeS(values)),
            _ => None,
        }
    }
}

/// Power matrix in dB with rows = frequency bins and columns = power or time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramDataset {
    pub power_db: DMatrix<f64>,
    pub freq_axis_hz: Vec<f64>,
    pub column_axis: ColumnAxis,
    pub metadata: BTreeMap<String, String>,
}

/// Matrix file plus its two single-column axis files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub matrix: PathBuf,
    pub freq_axis: PathBuf,
    pub column_axis: PathBuf,
}

impl DatasetPaths {
    /// `<dir>/<stem>.csv`, `<dir>/<stem>_freq.csv`, `<dir>/<stem>_<axis>.csv`.
    pub fn in_dir(dir: &Path, stem: &str, column_kind: &str) -> Self {
        Self {
            matrix: dir.join(format!("{stem}.csv")),
            freq_axis: dir.join(format!("{stem}_freq.csv")),
            column_axis: dir.join(format!("{stem}_{column_kind}.csv")),
        }
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] > w[0])
}

impl SpectrogramDataset {
    pub fn new(
        power_db: DMatrix<f64>,
        freq_axis_hz: Vec<f64>,
        column_axis: ColumnAxis,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let ds = Self {
            power_db,
            freq_axis_hz,
            column_axis,
            metadata,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let (rows, cols) = self.power_db.shape();
        if rows != self.freq_axis_hz.len() || cols != self.column_axis.values().len() {
            return Err(Error::invalid(format!(
                "matrix is {rows}x{cols} but axes have {} frequencies and {} columns",
                self.freq_axis_hz.len(),
                self.column_axis.values().len()
            )));
        }
        if !strictly_increasing(&self.freq_axis_hz)
            || !strictly_increasing(self.column_axis.values())
        {
            return Err(Error::invalid("dataset axes must be strictly increasing"));
        }
        if self.power_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset matrix holds non-finite values"));
        }
        for (k, v) in &self.metadata {
            if k.is_empty() || k.contains(['=', '\n']) || v.contains('\n') {
                return Err(Error::invalid(format!(
                    "metadata entry {k:?} is not representable"
                )));
            }
        }
        Ok(())
    }

    /// Dataset view of a spectrogram indexed by frame time.
    pub fn from_spectrogram(spg: &Spectrogram) -> Result<Self> {
        Self::new(
            spg.power_db().clone(),
            spg.freq_axis().to_vec(),
            ColumnAxis::TimeS(spg.time_axis().to_vec()),
            BTreeMap::new(),
        )
    }

    /// Spectrogram view; power-indexed columns reuse the column axis as "time".
    pub fn to_spectrogram(&self) -> Result<Spectrogram> {
        Spectrogram::new(
            self.column_axis.values().to_vec(),
            self.freq_axis_hz.clone(),
            self.power_db.clone(),
        )
    }

    fn matrix_text(&self) -> String {
        let mut s = format!("# rows={FREQ_UNIT} cols={}\n", self.column_axis.unit());
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "# {k}={v}");
        }
        for row in self.power_db.row_iter() {
            let cells: Vec<String> = row.iter().map(|&v| fmt_sci(v)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

fn axis_text(unit: &str, values: &[f64]) -> String {
    let mut s = format!("{unit}\n");
    for &v in values {
        s.push_str(&fmt_sci(v));
        s.push('\n');
    }
    s
}

/// Writes the three files; output bytes depend only on the dataset.
pub fn write_spectrogram_csv(ds: &SpectrogramDataset, paths: &DatasetPaths) -> Result<()> {
    ds.validate()?;
    write_atomic(&paths.matrix, ds.matrix_text().as_bytes())?;
    write_atomic(
        &paths.freq_axis,
        axis_text(FREQ_UNIT, &ds.freq_axis_hz).as_bytes(),
    )?;
    write_atomic(
        &paths.column_axis,
        axis_text(ds.column_axis.unit(), ds.column_axis.values()).as_bytes(),
    )
}

/// Single-column axis file: unit header, then one value per line.
pub fn read_axis_csv(path: &Path) -> Result<(String, Vec<f64>)> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    let unit = match lines.next() {
        Some((_, h)) => h.trim().to_string(),
        None => {
            return Err(parse_err(
                path,
                1,
                1,
                "empty axis file, expected a unit header",
            ))
        }
    };
    if unit.parse::<f64>().is_ok() {
        return Err(parse_err(path, 1, 1, "missing unit header line"));
    }
    let mut values = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row(path, i + 1, line)?;
        if row.len() != 1 {
            return Err(parse_err(
                path,
                i + 1,
                2,
                format!("axis file has {} columns, expected 1", row.len()),
            ));
        }
        values.push(row[0]);
    }
    Ok((unit, values))
}

/// Matrix file alone: values, column unit from the orientation header, and metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub values: DMatrix<f64>,
    pub column_unit: String,
    pub metadata: BTreeMap<String, String>,
}

pub fn read_matrix_csv(path: &Path) -> Result<MatrixFile> {
    let text = read_text(path)?;
    let mut metadata = BTreeMap::new();
    let mut col_unit = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if lineno == 1 {
                let mut parts = comment.split_whitespace();
                let rows_field = parts.next().and_then(|p| p.strip_prefix("rows="));
                let cols_field = parts.next().and_then(|p| p.strip_prefix("cols="));
                match (rows_field, cols_field) {
                    (Some(FREQ_UNIT), Some(c)) => col_unit = Some(c.to_string()),
                    _ => {
                        return Err(parse_err(
                            path,
                            1,
                            1,
                            format!("orientation header must read '# rows={FREQ_UNIT} cols=<unit>', got '#{comment}'"),
                        ))
                    }
                }
            } else if let Some((k, v)) = comment.split_once('=') {
                metadata.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if lineno == 1 {
            return Err(parse_err(path, 1, 1, "missing orientation header comment"));
        }
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row(path, lineno, line)?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(
                    path,
                    lineno,
                    row.len().min(first.len()) + 1,
                    format!(
                        "ragged row: {} cells, previous rows have {}",
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    let column_unit =
        col_unit.ok_or_else(|| parse_err(path, 1, 1, "missing orientation header comment"))?;
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, |r| r.len());
    Ok(MatrixFile {
        values: DMatrix::from_row_iterator(n_rows, n_cols, rows.into_iter().flatten()),
        column_unit,
        metadata,
    })
}

pub fn read_spectrogram_csv(paths: &DatasetPaths) -> Result<SpectrogramDataset> {
    let path = paths.matrix.as_path();
    let MatrixFile {
        values: power_db,
        column_unit: col_unit,
        metadata,
    } = read_matrix_csv(path)?;
    let (freq_unit, freq) = read_axis_csv(&paths.freq_axis)?;
    if freq_unit != FREQ_UNIT {
        return Err(parse_err(
            &paths.freq_axis,
            1,
            1,
            format!("expected unit {FREQ_UNIT}, got {freq_unit}"),
        ));
    }
    let (axis_unit, axis) = read_axis_csv(&paths.column_axis)?;
    if axis_unit != col_unit {
        return Err(parse_err(
            &paths.column_axis,
            1,
            1,
            format!("axis unit {axis_unit} does not match matrix columns ({col_unit})"),
        ));
    }
    let column_axis = ColumnAxis::from_unit(&col_unit, axis)
        .ok_or_else(|| parse_err(path, 1, 1, format!("unknown column unit {col_unit}")))?;

    let (n_rows, n_cols) = power_db.shape();
    if n_rows != freq.len() {
        return Err(Error::invalid(format!(
            "{}: matrix has {n_rows} rows but frequency axis has {} values",
            path.display(),
            freq.len()
        )));
    }
    if n_cols != column_axis.values().len() {
        return Err(Error::invalid(format!(
            "{}: matrix has {n_cols} columns but {} axis has {} values",
            path.display(),
            col_unit,
            column_axis.values().len()
        )));
    }
    SpectrogramDataset::new(power_db, freq, column_axis, metadata)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpectrogramDataset {
        let m = DMatrix::from_row_slice(3, 2, &[-10.0, -20.5, -3.25e-3, 1.5, -160.0, 42.0]);
        let mut meta = BTreeMap::new();
        meta.insert("delta_f0_hz".into(), "131000".into());
        meta.insert("scenario".into(), "baseline".into());
        SpectrogramDataset::new(
            m,
            vec![1e3, 2e3, 3e3],
            ColumnAxis::PowerDbm(vec![-40.0, -30.0]),
            meta,
        )
        .unwrap()
    }

    fn paths(dir: &Path) -> DatasetPaths {
        DatasetPaths::in_dir(dir, "spec", "power")
    }

    #[test]
    fn round_trip_and_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = paths(dir.path());
        let ds = sample();
        write_spectrogram_csv(&ds, &p).unwrap();
        let back = read_spectrogram_csv(&p).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.power_db.shape(), (3, 2));
        let first = std::fs::read(&p.matrix).unwrap();
        write_spectrogram_csv(&back, &p).unwrap();
        assert_eq!(std::fs::read(&p.matrix).unwrap(), first);
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with("# rows=frequency_hz cols=power_dbm\n# delta_f0_hz=131000\n"));
        assert!(text.contains("-1.000000000e+01,-2.050000000e+01\n"));
    }

    #[test]
    fn axis_length_mismatch_names_both() {
        let dir = tempfile::tempdir().unwrap();
        let p = paths(dir.path());
        write_spectrogram_csv(&sample(), &p).unwrap();
        std::fs::write(&p.column_axis, "power_dbm\n1\n2\n3\n4\n5\n").unwrap();
        let msg = read_spectrogram_csv(&p).unwrap_err().to_string();
        assert!(
            msg.contains("2 columns") && msg.contains("5 values"),
            "{msg}"
        );
    }

    #[test]
    fn ragged_and_bad_cells_located() {
        let dir = tempfile::tempdir().unwrap();
        let p = paths(dir.path());
        write_spectrogram_csv(&sample(), &p).unwrap();
        std::fs::write(
            &p.matrix,
            "# rows=frequency_hz cols=power_dbm\n1,2\n3\n5,6\n",
        )
        .unwrap();
        assert!(matches!(
            read_spectrogram_csv(&p),
            Err(Error::Parse { line: 3, .. })
        ));
        std::fs::write(
            &p.matrix,
            "# rows=frequency_hz cols=power_dbm\n1,2\n3,x\n5,6\n",
        )
        .unwrap();
        assert!(matches!(
            read_spectrogram_csv(&p),
            Err(Error::Parse {
                line: 3,
                column: 2,
                ..
            })
        ));
    }

    #[test]
    fn orientation_guard() {
        let dir = tempfile::tempdir().unwrap();
        let p = paths(dir.path());
        write_spectrogram_csv(&sample(), &p).unwrap();
        std::fs::write(
            &p.matrix,
            "# rows=power_dbm cols=frequency_hz\n1,2,3\n4,5,6\n",
        )
        .unwrap();
        assert!(matches!(
            read_spectrogram_csv(&p),
            Err(Error::Parse { line: 1, .. })
        ));
        std::fs::write(&p.matrix, "1,2\n3,4\n5,6\n").unwrap();
        assert!(read_spectrogram_csv(&p).is_err());
        std::fs::write(
            &p.matrix,
            "# rows=frequency_hz cols=time_s\n1,2\n3,4\n5,6\n",
        )
        .unwrap();
        assert!(
            read_spectrogram_csv(&p).is_err(),
            "axis unit mismatch must fail"
        );
    }

    #[test]
    fn non_monotone_axis_rejected() {
        let m = DMatrix::zeros(2, 2);
        assert!(SpectrogramDataset::new(
            m,
            vec![2.0, 1.0],
            ColumnAxis::TimeS(vec![0.0, 1.0]),
            BTreeMap::new()
        )
        .is_err());
    }
}
