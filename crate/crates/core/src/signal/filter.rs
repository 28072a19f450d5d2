//! Maximally-flat band-pass realized as a cascade of second-order sections,
//! run forward and backward for zero phase.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::series::TimeSeries;
use crate::error::{Error, Result};

/// Pass band of the IF readout chain. Edges are the single-pass 3 dB points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandpassSpec {
    pub f_lo: f64,
    pub f_hi: f64,
    /// Total band-pass order (number of poles); must be even.
    pub order: usize,
}

impl Default for BandpassSpec {
    fn default() -> Self {
        Self {
            f_lo: 10e3,
            f_hi: 250e3,
            order: 4,
        }
    }
}

impl BandpassSpec {
    pub fn validate(&self, fs: f64) -> Result<()> {
        if self.order == 0 || !self.order.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "band-pass order must be a positive even integer, got {}",
                self.order
            )));
        }
        if !(self.f_lo > 0.0 && self.f_lo < self.f_hi && self.f_hi < fs / 2.0) {
            return Err(Error::invalid(format!(
                "band [{}, {}] Hz must satisfy 0 < lo < hi < fs/2 = {} Hz",
                self.f_lo,
                self.f_hi,
                fs / 2.0
            )));
        }
        Ok(())
    }
}

/// Normalized biquad, `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn response(&self, z: Complex64) -> Complex64 {
        let zi = z.inv();
        let zi2 = zi * zi;
        (self.b0 + self.b1 * zi + self.b2 * zi2) / (1.0 + self.a1 * zi + self.a2 * zi2)
    }

    /// Transposed direct form II, in place.
    fn run(&self, x: &mut [f64]) {
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b0 * input + s1;
            s1 = self.b1 * input - self.a1 * y + s2;
            s2 = self.b2 * input - self.a2 * y;
            *v = y;
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bandpass {
    spec: BandpassSpec,
    fs: f64,
    sections: Vec<Biquad>,
}

impl Bandpass {
    /// Bilinear-transform design with prewarped band edges.
    pub fn design(spec: BandpassSpec, fs: f64) -> Result<Self> {
        spec.validate(fs)?;
        let n = spec.order / 2;
        let w_lo = (PI * spec.f_lo / fs).tan();
        let w_hi = (PI * spec.f_hi / fs).tan();
        let w0_sq = w_lo * w_hi;
        let bw = w_hi - w_lo;

        let mut poles = Vec::with_capacity(2 * n);
        for k in 1..=n {
            let theta = PI * (2 * k + n - 1) as f64 / (2 * n) as f64;
            let p = Complex64::from_polar(1.0, theta) * bw;
            let disc = (p * p - 4.0 * w0_sq).sqrt();
            for s in [(p + disc) / 2.0, (p - disc) / 2.0] {
                poles.push((1.0 + s) / (1.0 - s));
            }
        }

        let eps = 1e-12;
        let mut sections = Vec::with_capacity(n);
        let mut real: Vec<f64> = Vec::new();
        for z in &poles {
            if z.im > eps {
                sections.push(Biquad {
                    b0: 1.0,
                    b1: 0.0,
                    b2: -1.0,
                    a1: -2.0 * z.re,
                    a2: z.norm_sqr(),
                });
            } else if z.im.abs() <= eps {
                real.push(z.re);
            }
        }
        real.sort_by(|a, b| a.total_cmp(b));
        for pair in real.chunks(2) {
            let (r1, r2) = (pair[0], pair[1]);
            sections.push(Biquad {
                b0: 1.0,
                b1: 0.0,
                b2: -1.0,
                a1: -(r1 + r2),
                a2: r1 * r2,
            });
        }
        debug_assert_eq!(sections.len(), n);

        let mut filter = Self { spec, fs, sections };
        let center = 2.0 * w0_sq.sqrt().atan();
        let gain = filter.response_at_angle(center).norm();
        let s0 = &mut filter.sections[0];
        s0.b0 /= gain;
        s0.b2 /= gain;
        Ok(filter)
    }

    pub fn spec(&self) -> BandpassSpec {
        self.spec
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    fn response_at_angle(&self, omega: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, omega);
        self.sections.iter().map(|s| s.response(z)).product()
    }

    /// Single-pass complex response at `f` Hz.
    pub fn response(&self, f: f64) -> Complex64 {
        self.response_at_angle(2.0 * PI * f / self.fs)
    }

    /// Causal single pass.
    pub fn filter_forward(&self, x: &mut [f64]) {
        for s in &self.sections {
            s.run(x);
        }
    }

    /// Forward-backward filtering with odd-reflection padding at both ends.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let settle = (3.0 * self.fs / self.spec.f_lo).ceil() as usize;
        let pad = settle.max(3 * (2 * self.sections.len() + 1)).min(n - 1);

        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        self.filter_forward(&mut ext);
        ext.reverse();
        self.filter_forward(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

/// Zero-phase band-pass of a real record.
pub fn bandpass(ts: &TimeSeries<f64>, spec: BandpassSpec) -> Result<TimeSeries<f64>> {
    let filter = Bandpass::design(spec, ts.fs())?;
    TimeSeries::new(ts.fs(), ts.t0(), filter.filtfilt(ts.samples()))
}
