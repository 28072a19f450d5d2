use std::fmt::Write as _;
use std::path::Path;

use super::text::{fmt_sci, parse_err, parse_row, read_text, write_atomic};
use crate::analysis::{AdlerFit, PeakTrack, ResponsivityCurve};
use crate::error::Result;
use crate::experiment::ConsistencyReport;

pub const TRACK_HEADER: &str = "power_dbm,f_peak_hz,linewidth_hz,edge_clamped";
pub const RESPONSIVITY_HEADER: &str = "power_dbm,responsivity_hz_per_db";
pub const CONSISTENCY_HEADER: &str =
    "power_dbm,rf_hz,if_hz,deviation_hz,if_linewidth_hz,exceeds_linewidth";

fn table(header: &str, rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut s = format!("{header}\n");
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Reads a headed numeric table, checking the header against `expected`.
fn read_table(path: &Path, expected: &str) -> Result<Vec<Vec<f64>>> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == expected => {}
        Some((_, h)) => {
            return Err(parse_err(
                path,
                1,
                1,
                format!("expected header '{expected}', got '{}'", h.trim()),
            ))
        }
        None => return Err(parse_err(path, 1, 1, "empty file")),
    }
    let width = expected.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row(path, i + 1, line)?;
        if row.len() != width {
            return Err(parse_err(
                path,
                i + 1,
                row.len().min(width) + 1,
                format!("{} cells, expected {width}", row.len()),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn track_csv(track: &PeakTrack) -> String {
    table(
        TRACK_HEADER,
        (0..track.len()).map(|i| {
            vec![
                fmt_sci(track.p_inj_dbm()[i]),
                fmt_sci(track.f_peak()[i]),
                fmt_sci(track.linewidth_3db()[i]),
                u8::from(track.edge_clamped()[i]).to_string(),
            ]
        }),
    )
}

pub fn write_track_csv(track: &PeakTrack, path: &Path) -> Result<()> {
    write_atomic(path, track_csv(track).as_bytes())
}

pub fn read_track_csv(path: &Path) -> Result<PeakTrack> {
    let rows = read_table(path, TRACK_HEADER)?;
    for (i, r) in rows.iter().enumerate() {
        if r[3] != 0.0 && r[3] != 1.0 {
            return Err(parse_err(path, i + 2, 4, "edge_clamped must be 0 or 1"));
        }
    }
    PeakTrack::new(
        rows.iter().map(|r| r[0]).collect(),
        rows.iter().map(|r| r[1]).collect(),
        rows.iter().map(|r| r[2]).collect(),
        rows.iter().map(|r| r[3] == 1.0).collect(),
    )
    .map_err(|e| parse_err(path, 2, 1, e.to_string()))
}

pub fn responsivity_csv(curve: &ResponsivityCurve) -> String {
    table(
        RESPONSIVITY_HEADER,
        curve
            .p_inj_dbm
            .iter()
            .zip(&curve.hz_per_db)
            .map(|(&p, &r)| vec![fmt_sci(p), fmt_sci(r)]),
    )
}

pub fn write_responsivity_csv(curve: &ResponsivityCurve, path: &Path) -> Result<()> {
    write_atomic(path, responsivity_csv(curve).as_bytes())
}

pub fn read_responsivity_csv(path: &Path) -> Result<ResponsivityCurve> {
    let rows = read_table(path, RESPONSIVITY_HEADER)?;
    Ok(ResponsivityCurve {
        p_inj_dbm: rows.iter().map(|r| r[0]).collect(),
        hz_per_db: rows.iter().map(|r| r[1]).collect(),
    })
}

pub fn consistency_csv(report: &ConsistencyReport) -> String {
    table(
        CONSISTENCY_HEADER,
        report.rows.iter().map(|r| {
            vec![
                fmt_sci(r.p_inj_dbm),
                fmt_sci(r.rf_hz),
                fmt_sci(r.if_hz),
                fmt_sci(r.deviation_hz),
                fmt_sci(r.if_linewidth_hz),
                u8::from(r.exceeds_linewidth).to_string(),
            ]
        }),
    )
}

/// `key = value` report of a pulling-law fit. Standard errors are the square
/// roots of the covariance diagonal.
pub fn fit_report(fit: &AdlerFit) -> String {
    let c = fit.covariance;
    let mut s = String::new();
    let _ = writeln!(s, "delta_f0_hz = {}", fmt_sci(fit.delta_f0_hat));
    let _ = writeln!(s, "beta_per_mw = {}", fmt_sci(fit.beta_hat));
    let _ = writeln!(s, "delta_f0_stderr_hz = {}", fmt_sci(c[0][0].sqrt()));
    let _ = writeln!(s, "beta_stderr_per_mw = {}", fmt_sci(c[1][1].sqrt()));
    let _ = writeln!(
        s,
        "covariance = [{}, {}, {}]",
        fmt_sci(c[0][0]),
        fmt_sci(c[0][1]),
        fmt_sci(c[1][1])
    );
    let _ = writeln!(s, "residual_rms_hz = {}", fmt_sci(fit.residual_rms));
    let _ = writeln!(s, "iterations = {}", fit.n_iterations);
    let _ = writeln!(s, "converged = {}", fit.converged);
    let _ = writeln!(s, "beta_at_lower_bound = {}", fit.beta_at_lower_bound);
    s
}

/// Recovers `(delta_f0_hz, beta_per_mw)` from a fit report.
pub fn read_fit_report(path: &Path) -> Result<(f64, f64)> {
    let text = read_text(path)?;
    let mut d0 = None;
    let mut beta = None;
    for (i, line) in text.lines().enumerate() {
        if let Some((k, v)) = line.split_once('=') {
            let slot = match k.trim() {
                "delta_f0_hz" => &mut d0,
                "beta_per_mw" => &mut beta,
                _ => continue,
            };
            *slot = Some(v.trim().parse::<f64>().map_err(|_| {
                parse_err(
                    path,
                    i + 1,
                    k.len() + 2,
                    format!("bad number {:?}", v.trim()),
                )
            })?);
        }
    }
    match (d0, beta) {
        (Some(d0), Some(beta)) => Ok((d0, beta)),
        _ => Err(parse_err(
            path,
            1,
            1,
            "fit report lacks delta_f0_hz or beta_per_mw",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn track_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("track.csv");
        let t = PeakTrack::new(
            vec![-40.0, -39.5, -39.0],
            vec![130000.123456789, 129999.0, 129500.5],
            vec![500.0, 512.25, 800.0],
            vec![false, false, true],
        )
        .unwrap();
        write_track_csv(&t, &path).unwrap();
        let back = read_track_csv(&path).unwrap();
        assert_eq!(back.edge_clamped(), t.edge_clamped());
        for (a, b) in back.f_peak().iter().zip(t.f_peak()) {
            assert!((a - b).abs() <= 5e-10 * b.abs());
        }
        assert_eq!(track_csv(&back), track_csv(&t));
    }

    #[test]
    fn track_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "power,f\n1,2\n").unwrap();
        assert!(read_track_csv(&path).is_err());
        std::fs::write(&path, format!("{TRACK_HEADER}\n1,2,3,0\n1,2,3\n")).unwrap();
        assert!(matches!(
            read_track_csv(&path),
            Err(crate::Error::Parse { line: 3, .. })
        ));
        std::fs::write(&path, format!("{TRACK_HEADER}\n1,2,3,0\n0,2,3,0\n")).unwrap();
        assert!(read_track_csv(&path).is_err());
    }

    #[test]
    fn fit_report_parses_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fit.txt");
        let fit = AdlerFit {
            delta_f0_hat: 131e3,
            beta_hat: 0.8,
            covariance: [[4.0, 0.1], [0.1, 0.01]],
            residual_rms: 12.0,
            n_iterations: 7,
            converged: true,
            beta_at_lower_bound: false,
            cost_history: vec![],
        };
        let text = fit_report(&fit);
        assert!(text.contains("delta_f0_stderr_hz = 2.000000000e+00"));
        write_atomic(&path, text.as_bytes()).unwrap();
        assert_eq!(read_fit_report(&path).unwrap(), (131e3, 0.8));
    }
}
