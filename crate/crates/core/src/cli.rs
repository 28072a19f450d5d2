//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 data or
//! parse error, 3 numerical non-convergence.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{
    average_by_power, fit_adler_model_with, responsivity_numeric, track_resolved_peaks, AdlerFit,
    FitOptions, PeakTrack,
};
use crate::error::{Error, Result};
use crate::experiment::{
    rf_atomic_consistency, run_detuning_comparison, run_power_sweep, ComparisonReport, PathResult,
    ScenarioConfig, SweepResult,
};
use crate::io::{
    consistency_csv, fit_report, fmt_sci, pgm_heatmap, read_config, read_fit_report,
    read_matrix_csv, read_responsivity_csv, read_spectrogram_csv, read_text, read_track_csv,
    resolve_seed, responsivity_csv, track_csv, write_atomic, write_spectrogram_csv, ColumnAxis,
    DatasetPaths, LinePlot, ScenarioFile, Series, SeriesStyle, SpectrogramDataset,
    RESPONSIVITY_HEADER, SEED_ENV, TRACK_HEADER,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pullsim",
    version,
    about = "Injection-pulled oscillator and Rydberg superheterodyne simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a power sweep from a scenario file and write all datasets.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value = "pullsim-out")]
        out: PathBuf,
        /// Overrides PULLSIM_SEED and the file's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Track, fit and responsivity from a power-indexed spectrogram dataset.
    Analyze {
        matrix: PathBuf,
        freq_axis: PathBuf,
        power_axis: PathBuf,
        /// Peak-search band in Hz, as lo:hi.
        #[arg(long, value_parser = parse_band, default_value = "10000:250000")]
        band: (f64, f64),
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Weight points by 1 / linewidth^2.
        #[arg(long)]
        weighted: bool,
        #[arg(long, default_value_t = 200)]
        max_iterations: usize,
    },
    /// Fit the softened pulling law to a track CSV.
    Fit {
        track: PathBuf,
        /// Weight points by 1 / linewidth^2.
        #[arg(long)]
        weighted: bool,
        #[arg(long, default_value_t = 200)]
        max_iterations: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Numerical responsivity of a track CSV.
    Responsivity {
        track: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two scenarios that differ in detuning.
    Compare {
        config_small: PathBuf,
        config_large: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// SVG for track or responsivity CSVs, 16-bit PGM for spectrogram matrices.
    Plot {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fit report whose curve is drawn over a track.
        #[arg(long)]
        fit: Option<PathBuf>,
    },
}

fn parse_band(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("band must be lo:hi in Hz, got {s:?}"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad band lower edge {lo:?}"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad band upper edge {hi:?}"))?;
    if !(lo < hi) {
        return Err(format!(
            "band lower edge {lo} must be below upper edge {hi}"
        ));
    }
    Ok((lo, hi))
}

/// Outcome of a subcommand that ran to completion.
enum Done {
    Ok,
    NotConverged(String),
}

/// Maps an error onto the documented exit codes.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Sweep { source, .. } => exit_code(source),
        Error::SingularLiouvillian => EXIT_NONCONVERGENCE,
        _ => EXIT_DATA,
    }
}

/// Runs the CLI with explicit output streams.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(Done::Ok) => EXIT_OK,
        Ok(Done::NotConverged(msg)) => {
            let _ = writeln!(stderr, "pullsim: {msg}");
            EXIT_NONCONVERGENCE
        }
        Err(e) => {
            let _ = writeln!(stderr, "pullsim: {e}");
            exit_code(&e)
        }
    }
}

/// Runs the CLI on the process streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<Done> {
    match cmd {
        Command::Simulate { config, out, seed } => simulate(&config, &out, seed),
        Command::Analyze {
            matrix,
            freq_axis,
            power_axis,
            band,
            out,
            weighted,
            max_iterations,
        } => analyze(
            &DatasetPaths {
                matrix,
                freq_axis,
                column_axis: power_axis,
            },
            band,
            &out,
            fit_options(weighted, max_iterations),
            stdout,
        ),
        Command::Fit {
            track,
            weighted,
            max_iterations,
            out,
        } => {
            let track = read_track_csv(&track)?;
            let fit = fit_adler_model_with(&track, fit_options(weighted, max_iterations))?;
            let report = fit_report(&fit);
            emit(out.as_deref(), &report, stdout)?;
            Ok(convergence(&fit, "fit"))
        }
        Command::Responsivity { track, out } => {
            let curve = responsivity_numeric(&read_track_csv(&track)?)?;
            emit(out.as_deref(), &responsivity_csv(&curve), stdout)?;
            Ok(Done::Ok)
        }
        Command::Compare {
            config_small,
            config_large,
            out,
            seed,
        } => compare(&config_small, &config_large, out.as_deref(), seed, stdout),
        Command::Plot { input, out, fit } => plot(&input, &out, fit.as_deref()),
    }
}

fn fit_options(weighted: bool, max_iterations: usize) -> FitOptions {
    FitOptions {
        weighted,
        max_iterations,
        ..Default::default()
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn convergence(fit: &AdlerFit, label: &str) -> Done {
    if fit.converged {
        Done::Ok
    } else {
        Done::NotConverged(format!(
            "{label}: fit did not converge in {} iterations",
            fit.n_iterations
        ))
    }
}

fn load_scenario(path: &Path, flag: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg = read_config(path)?;
    let env = std::env::var(SEED_ENV).ok();
    cfg.seed = resolve_seed(flag, env.as_deref(), cfg.seed)?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn power_dataset(
    path: &PathResult,
    schedule: &[f64],
    meta: &BTreeMap<String, String>,
) -> Result<SpectrogramDataset> {
    let (powers, columns) = average_by_power(&path.spectrogram, schedule)?;
    let rows = path.spectrogram.n_bins();
    let m = nalgebra::DMatrix::from_fn(rows, columns.len(), |r, c| columns[c][r]);
    SpectrogramDataset::new(
        m,
        path.spectrogram.freq_axis().to_vec(),
        ColumnAxis::PowerDbm(powers),
        meta.clone(),
    )
}

fn write_path_outputs(
    dir: &Path,
    prefix: &str,
    path: &PathResult,
    schedule: &[f64],
    meta: &BTreeMap<String, String>,
) -> Result<Vec<String>> {
    let mut files = Vec::new();
    let ds = power_dataset(path, schedule, meta)?;
    let stem = format!("{prefix}_spectrogram");
    write_spectrogram_csv(&ds, &DatasetPaths::in_dir(dir, &stem, "power"))?;
    files.extend([
        format!("{stem}.csv"),
        format!("{stem}_freq.csv"),
        format!("{stem}_power.csv"),
    ]);
    if let Some(track) = &path.track {
        write_atomic(
            &dir.join(format!("{prefix}_track.csv")),
            track_csv(track).as_bytes(),
        )?;
        files.push(format!("{prefix}_track.csv"));
    }
    if let Some(fit) = &path.fit {
        write_atomic(
            &dir.join(format!("{prefix}_fit.txt")),
            fit_report(fit).as_bytes(),
        )?;
        files.push(format!("{prefix}_fit.txt"));
    }
    if let Some(curve) = &path.responsivity {
        write_atomic(
            &dir.join(format!("{prefix}_responsivity.csv")),
            responsivity_csv(curve).as_bytes(),
        )?;
        files.push(format!("{prefix}_responsivity.csv"));
    }
    Ok(files)
}

/// Writes every dataset of a sweep into `dir` and returns the manifest text.
pub fn write_sweep_outputs(
    dir: &Path,
    cfg: &ScenarioConfig,
    result: &SweepResult,
) -> Result<String> {
    create_dir(dir)?;
    let mut meta = BTreeMap::new();
    meta.insert("delta_f0_hz".to_string(), fmt_sci(cfg.delta_f0()));
    meta.insert(
        "kappa0_hz_per_sqrt_mw".to_string(),
        fmt_sci(cfg.oscillator.kappa0()),
    );
    meta.insert("seed".to_string(), cfg.seed.to_string());
    let mut files = Vec::new();
    for (prefix, path) in [("rf", &result.rf), ("if", &result.atomic_if)] {
        let mut m = meta.clone();
        m.insert("path".to_string(), prefix.to_string());
        files.extend(write_path_outputs(dir, prefix, path, &result.schedule, &m)?);
    }
    write_atomic(
        &dir.join("consistency.csv"),
        consistency_csv(&rf_atomic_consistency(result)).as_bytes(),
    )?;
    files.push("consistency.csv".to_string());
    write_atomic(
        &dir.join("scenario.toml"),
        ScenarioFile::from_config(cfg).to_toml().as_bytes(),
    )?;
    files.push("scenario.toml".to_string());

    let mut manifest = String::new();
    let _ = writeln!(manifest, "pullsim {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "seed = {}", cfg.seed);
    let _ = writeln!(manifest, "powers = {}", result.power_axis.len());
    let _ = writeln!(manifest, "frames = {}", result.schedule.len());
    for d in &result.diagnostics {
        let _ = writeln!(manifest, "note: {d}");
    }
    for f in &files {
        let _ = writeln!(manifest, "file: {f}");
    }
    write_atomic(&dir.join("manifest.txt"), manifest.as_bytes())?;
    Ok(manifest)
}

fn simulate(config: &Path, out: &Path, seed: Option<u64>) -> Result<Done> {
    let cfg = load_scenario(config, seed)?;
    let result = run_power_sweep(&cfg)?;
    write_sweep_outputs(out, &cfg, &result)?;
    let stalled: Vec<&str> = [("rf", &result.rf), ("if", &result.atomic_if)]
        .iter()
        .filter(|(_, p)| p.fit.as_ref().is_some_and(|f| !f.converged))
        .map(|(n, _)| *n)
        .collect();
    if stalled.is_empty() {
        Ok(Done::Ok)
    } else {
        Ok(Done::NotConverged(format!(
            "fit did not converge for: {}",
            stalled.join(", ")
        )))
    }
}

fn analyze(
    paths: &DatasetPaths,
    band: (f64, f64),
    out: &Path,
    opts: FitOptions,
    stdout: &mut dyn Write,
) -> Result<Done> {
    let ds = read_spectrogram_csv(paths)?;
    let powers = match &ds.column_axis {
        ColumnAxis::PowerDbm(p) => p.clone(),
        ColumnAxis::TimeS(_) => {
            return Err(Error::invalid(format!(
                "{}: analyze needs power-indexed columns (power_dbm), got time_s",
                paths.matrix.display()
            )))
        }
    };
    let (f_lo, f_hi) = (
        ds.freq_axis_hz[0],
        ds.freq_axis_hz[ds.freq_axis_hz.len() - 1],
    );
    if band.0 < f_lo || band.1 > f_hi {
        return Err(Error::invalid(format!(
            "band {}:{} Hz lies outside the frequency axis [{f_lo}, {f_hi}] Hz",
            band.0, band.1
        )));
    }
    let outcome = track_resolved_peaks(&ds.to_spectrogram()?, &powers, band)?;
    let track = outcome.track.ok_or(Error::NoPeak {
        lo: band.0,
        hi: band.1,
    })?;
    create_dir(out)?;
    write_atomic(&out.join("track.csv"), track_csv(&track).as_bytes())?;
    let curve = responsivity_numeric(&track)?;
    write_atomic(
        &out.join("responsivity.csv"),
        responsivity_csv(&curve).as_bytes(),
    )?;
    let fit = fit_adler_model_with(&track, opts)?;
    let report = fit_report(&fit);
    write_atomic(&out.join("fit.txt"), report.as_bytes())?;
    if !outcome.unresolved_dbm.is_empty() {
        let list: Vec<String> = outcome
            .unresolved_dbm
            .iter()
            .map(|p| p.to_string())
            .collect();
        let _ = writeln!(stdout, "# no peak at {} dBm", list.join(", "));
    }
    stdout
        .write_all(report.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))?;
    Ok(convergence(&fit, "analyze"))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), fmt_sci)
}

/// Text form of a detuning comparison.
pub fn comparison_text(
    small: &ScenarioConfig,
    large: &ScenarioConfig,
    r: &ComparisonReport,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "first_delta_f0_hz = {}", fmt_sci(small.delta_f0()));
    let _ = writeln!(s, "second_delta_f0_hz = {}", fmt_sci(large.delta_f0()));
    let _ = writeln!(
        s,
        "onset_dbm = [{}, {}]",
        opt(r.onset_dbm[0]),
        opt(r.onset_dbm[1])
    );
    let _ = writeln!(s, "reference_dbm = {}", opt(r.reference_dbm));
    let _ = writeln!(
        s,
        "shift_hz = [{}, {}]",
        opt(r.shift_hz[0]),
        opt(r.shift_hz[1])
    );
    let _ = writeln!(
        s,
        "responsivity_hz_per_db = [{}, {}]",
        opt(r.responsivity_hz_per_db[0]),
        opt(r.responsivity_hz_per_db[1])
    );
    let _ = writeln!(s, "earlier_onset = {:?}", r.onset_order);
    let _ = writeln!(s, "larger_shift = {:?}", r.shift_order);
    let _ = writeln!(s, "larger_responsivity = {:?}", r.responsivity_order);
    s
}

fn compare(
    small: &Path,
    large: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
    stdout: &mut dyn Write,
) -> Result<Done> {
    let a = load_scenario(small, seed)?;
    let b = load_scenario(large, seed)?;
    let cmp = run_detuning_comparison(&a, &b)?;
    let text = comparison_text(&a, &b, &cmp.report);
    if let Some(dir) = out {
        write_sweep_outputs(&dir.join("first"), &a, &cmp.first)?;
        write_sweep_outputs(&dir.join("second"), &b, &cmp.second)?;
        write_atomic(&dir.join("comparison.txt"), text.as_bytes())?;
    }
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))?;
    Ok(Done::Ok)
}

fn track_plot(track: &PeakTrack, fit: Option<(f64, f64)>) -> LinePlot {
    let mut series = vec![Series {
        label: "peak".into(),
        x: track.p_inj_dbm().to_vec(),
        y: track.f_peak().iter().map(|f| f / 1e3).collect(),
        yerr: Some(track.linewidth_3db().iter().map(|w| w / 2e3).collect()),
        style: SeriesStyle::Markers,
    }];
    if let Some((d0, beta)) = fit {
        let (lo, hi) = (track.p_inj_dbm()[0], track.p_inj_dbm()[track.len() - 1]);
        let x: Vec<f64> = (0..=200)
            .map(|i| lo + (hi - lo) * i as f64 / 200.0)
            .collect();
        let y = x
            .iter()
            .map(|&p| d0 / (1.0 + beta * crate::signal::dbm_to_mw(p)).sqrt() / 1e3)
            .collect();
        series.push(Series {
            label: "fit".into(),
            x,
            y,
            yerr: None,
            style: SeriesStyle::Line,
        });
    }
    LinePlot {
        title: "Pulled offset frequency".into(),
        x_label: "injected power (dBm)".into(),
        y_label: "frequency (kHz)".into(),
        series,
    }
}

fn plot(input: &Path, out: &Path, fit: Option<&Path>) -> Result<Done> {
    let text = read_text(input)?;
    let first = text.lines().next().unwrap_or("").trim();
    let bytes = if first.starts_with("# rows=") {
        pgm_heatmap(&read_matrix_csv(input)?.values)
    } else if first == TRACK_HEADER {
        let track = read_track_csv(input)?;
        let fit = fit.map(read_fit_report).transpose()?;
        track_plot(&track, fit).to_svg().into_bytes()
    } else if first == RESPONSIVITY_HEADER {
        let curve = read_responsivity_csv(input)?;
        LinePlot {
            title: "Responsivity".into(),
            x_label: "injected power (dBm)".into(),
            y_label: "responsivity (kHz/dB)".into(),
            series: vec![Series {
                label: "|df/dP|".into(),
                x: curve.p_inj_dbm.clone(),
                y: curve.hz_per_db.iter().map(|r| r / 1e3).collect(),
                yerr: None,
                style: SeriesStyle::Line,
            }],
        }
        .to_svg()
        .into_bytes()
    } else {
        return Err(Error::Parse {
            path: input.to_path_buf(),
            line: 1,
            column: 1,
            message: "unrecognized input: expected a spectrogram matrix, track or responsivity CSV"
                .into(),
        });
    };
    write_atomic(out, &bytes)?;
    Ok(Done::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_syntax() {
        assert_eq!(parse_band("10:250").unwrap(), (10.0, 250.0));
        assert!(parse_band("250:10").is_err());
        assert!(parse_band("10-250").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(
            run_with(["pullsim", "frobnicate"], &mut o, &mut e),
            EXIT_USAGE
        );
        assert_eq!(run_with(["pullsim", "fit"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run_with(["pullsim", "--help"], &mut o, &mut e), EXIT_OK);
    }

    #[test]
    fn nested_errors_keep_their_class() {
        let e = Error::Sweep {
            step: 2,
            power_dbm: -30.0,
            source: Box::new(Error::SingularLiouvillian),
        };
        assert_eq!(exit_code(&e), EXIT_NONCONVERGENCE);
        assert_eq!(exit_code(&Error::invalid("x")), EXIT_DATA);
    }
}
