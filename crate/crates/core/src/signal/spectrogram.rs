use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::series::{Sample, TimeSeries};
use crate::error::{Error, Result};

/// Lowest representable spectral level.
pub const DB_FLOOR: f64 = -160.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    /// Periodic Hann (DFT-even).
    Hann,
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

/// Time-frequency power matrix: rows are frequency bins, columns are frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    time_axis: Vec<f64>,
    freq_axis: Vec<f64>,
    power_db: DMatrix<f64>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] > w[0])
}

impl Spectrogram {
    pub fn new(time_axis: Vec<f64>, freq_axis: Vec<f64>, power_db: DMatrix<f64>) -> Result<Self> {
        if !strictly_increasing(&time_axis) || !strictly_increasing(&freq_axis) {
            return Err(Error::invalid(
                "spectrogram axes must be strictly increasing",
            ));
        }
        if power_db.nrows() != freq_axis.len() || power_db.ncols() != time_axis.len() {
            return Err(Error::invalid(format!(
                "spectrogram matrix is {}x{} but axes are {} freq x {} time",
                power_db.nrows(),
                power_db.ncols(),
                freq_axis.len(),
                time_axis.len()
            )));
        }
        Ok(Self {
            time_axis,
            freq_axis,
            power_db,
        })
    }

    /// Builds a spectrogram from per-frame dB columns sharing one frequency axis.
    pub fn from_columns(
        time_axis: Vec<f64>,
        freq_axis: Vec<f64>,
        columns: &[Vec<f64>],
    ) -> Result<Self> {
        let rows = freq_axis.len();
        if let Some(c) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::invalid(format!(
                "column has {} bins, frequency axis has {rows}",
                c.len()
            )));
        }
        let data: Vec<f64> = columns.iter().flatten().copied().collect();
        Self::new(
            time_axis,
            freq_axis,
            DMatrix::from_vec(rows, columns.len(), data),
        )
    }

    pub fn time_axis(&self) -> &[f64] {
        &self.time_axis
    }

    pub fn freq_axis(&self) -> &[f64] {
        &self.freq_axis
    }

    pub fn power_db(&self) -> &DMatrix<f64> {
        &self.power_db
    }

    pub fn n_frames(&self) -> usize {
        self.time_axis.len()
    }

    pub fn n_bins(&self) -> usize {
        self.freq_axis.len()
    }

    pub fn bin_width(&self) -> f64 {
        if self.freq_axis.len() < 2 {
            return 0.0;
        }
        (self.freq_axis[self.freq_axis.len() - 1] - self.freq_axis[0])
            / (self.freq_axis.len() - 1) as f64
    }

    /// dB values of frame `j`, indexed like the frequency axis.
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.power_db.nrows();
        &self.power_db.as_slice()[j * n..(j + 1) * n]
    }
}

fn to_db(p: f64) -> f64 {
    if p > 0.0 {
        (10.0 * p.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Two-sided frequency axis in ascending order, DC at index `n / 2`.
fn shifted_axis(n: usize, fs: f64) -> Vec<f64> {
    let half = (n / 2) as isize;
    (0..n as isize)
        .map(|j| (j - half) as f64 * fs / n as f64)
        .collect()
}

/// One-frame power spectrum in ascending frequency order.
///
/// Normalized by the squared window sum, so a unit complex exponential on a
/// bin reads 1 and, for the rectangular window, the bins sum to the mean
/// power of the frame.
pub fn periodogram<T: Sample>(frame: &[T], window: Window) -> Vec<f64> {
    let n = frame.len();
    let w = window.coefficients(n);
    let norm = w.iter().sum::<f64>().powi(2);
    let mut buf: Vec<Complex64> = frame
        .iter()
        .zip(&w)
        .map(|(s, wi)| s.to_complex() * *wi)
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    (0..n)
        .map(|j| buf[(j + n - half) % n].norm_sqr() / norm)
        .collect()
}

/// Hann-windowed short-time power spectrum in dB.
pub fn stft<T: Sample>(ts: &TimeSeries<T>, window_len: usize, hop: usize) -> Result<Spectrogram> {
    if window_len < 16 || !window_len.is_power_of_two() {
        return Err(Error::invalid(format!(
            "window length must be a power of two >= 16, got {window_len}"
        )));
    }
    if hop == 0 || hop > window_len {
        return Err(Error::invalid(format!(
            "hop must be in 1..={window_len}, got {hop}"
        )));
    }
    if ts.len() < window_len {
        return Err(Error::invalid(format!(
            "record of {} samples is shorter than one {window_len}-sample window",
            ts.len()
        )));
    }

    let n_frames = (ts.len() - window_len) / hop + 1;
    let w = Window::Hann.coefficients(window_len);
    let norm = w.iter().sum::<f64>().powi(2);
    let fft = FftPlanner::new().plan_fft_forward(window_len);
    let half = window_len / 2;

    let mut data = Vec::with_capacity(n_frames * window_len);
    let mut times = Vec::with_capacity(n_frames);
    let mut buf = vec![Complex64::new(0.0, 0.0); window_len];
    for frame in 0..n_frames {
        let start = frame * hop;
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = ts.samples()[start + k].to_complex() * w[k];
        }
        fft.process(&mut buf);
        data.extend(
            (0..window_len)
                .map(|j| to_db(buf[(j + window_len - half) % window_len].norm_sqr() / norm)),
        );
        times.push(ts.time(start + half));
    }

    Spectrogram::new(
        times,
        shifted_axis(window_len, ts.fs()),
        DMatrix::from_vec(window_len, n_frames, data),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exp_tone(f: f64, fs: f64, n: usize, phase: f64) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::from_polar(1.0, 2.0 * PI * f * i as f64 / fs + phase))
            .collect()
    }

    fn argmax(v: &[f64]) -> usize {
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap()
    }

    #[test]
    fn exact_bin_exponential_reads_zero_db() {
        let (fs, n) = (1024.0, 256);
        let k = 40.0;
        let ts = TimeSeries::new(fs, 0.0, exp_tone(k * fs / n as f64, fs, 2048, 0.0)).unwrap();
        let spg = stft(&ts, n, 64).unwrap();
        for j in 0..spg.n_frames() {
            let col = spg.column(j);
            let i = argmax(col);
            assert_eq!(spg.freq_axis()[i], k * fs / n as f64);
            assert!(col[i].abs() < 1e-9, "{}", col[i]);
        }
    }

    #[test]
    fn real_tone_is_two_sided() {
        let (fs, n) = (1e6, 1024);
        let f = 125e3;
        let x: Vec<f64> = (0..4096)
            .map(|i| (2.0 * PI * f * i as f64 / fs).cos())
            .collect();
        let spg = stft(&TimeSeries::new(fs, 0.0, x).unwrap(), n, n / 4).unwrap();
        let col = spg.column(0);
        let pos = spg.freq_axis().iter().position(|&v| v == f).unwrap();
        let neg = spg.freq_axis().iter().position(|&v| v == -f).unwrap();
        assert!((col[pos] - col[neg]).abs() < 1e-9);
        assert!((col[pos] + 20.0 * 2f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn axes_and_time_centers() {
        let ts = TimeSeries::new(100.0, 1.0, vec![0.0f64; 100]).unwrap();
        let spg = stft(&ts, 16, 8).unwrap();
        assert_eq!(spg.n_frames(), 11);
        assert_eq!(spg.freq_axis()[8], 0.0);
        assert_eq!(spg.freq_axis()[0], -50.0);
        assert!((spg.time_axis()[0] - 1.08).abs() < 1e-12);
        assert!(spg.column(0).iter().all(|&v| v == DB_FLOOR));
    }

    #[test]
    fn rejects_bad_geometry() {
        let ts = TimeSeries::new(100.0, 0.0, vec![0.0f64; 100]).unwrap();
        assert!(stft(&ts, 8, 4).is_err());
        assert!(stft(&ts, 24, 4).is_err());
        assert!(stft(&ts, 16, 0).is_err());
        assert!(stft(&ts, 16, 17).is_err());
        assert!(stft(&ts, 128, 4).is_err());
    }

    #[test]
    fn chirp_track_follows_instantaneous_frequency() {
        let fs = 1e6;
        let (n, hop) = (256usize, 64usize);
        let (f0, rate) = (20e3, 1e7); // Hz, Hz/s
        let len = 40_000;
        let x: Vec<Complex64> = (0..len)
            .map(|i| {
                let t = i as f64 / fs;
                Complex64::from_polar(1.0, 2.0 * PI * (f0 * t + 0.5 * rate * t * t))
            })
            .collect();
        let spg = stft(&TimeSeries::new(fs, 0.0, x).unwrap(), n, hop).unwrap();
        let bin = spg.bin_width();
        for j in 0..spg.n_frames() {
            let f_true = f0 + rate * spg.time_axis()[j];
            let f_hat = spg.freq_axis()[argmax(spg.column(j))];
            assert!(
                (f_hat - f_true).abs() <= bin,
                "frame {j}: {f_hat} vs {f_true}"
            );
        }
    }

    #[test]
    fn parseval_rectangular() {
        let x: Vec<Complex64> = (0..512)
            .map(|i| Complex64::new((i as f64 * 0.3).sin() + 0.2, (i as f64 * 0.017).cos() * 1.5))
            .collect();
        let spectral: f64 = periodogram(&x, Window::Rectangular).iter().sum();
        let temporal = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64;
        assert!((spectral - temporal).abs() <= 1e-9 * temporal);
    }

    proptest! {
        #[test]
        fn peak_invariant_under_phase_rotation(k in 1usize..60, frac in 0.0f64..1.0, rot in 0.0f64..std::f64::consts::TAU) {
            let (fs, n) = (1000.0, 128);
            let f = (k as f64 + frac) * fs / n as f64;
            let a = exp_tone(f, fs, 512, 0.0);
            let b: Vec<Complex64> = a.iter().map(|v| v * Complex64::from_polar(1.0, rot)).collect();
            let sa = stft(&TimeSeries::new(fs, 0.0, a).unwrap(), n, 32).unwrap();
            let sb = stft(&TimeSeries::new(fs, 0.0, b).unwrap(), n, 32).unwrap();
            for j in 0..sa.n_frames() {
                prop_assert_eq!(argmax(sa.column(j)), argmax(sb.column(j)));
            }
        }
    }
}
