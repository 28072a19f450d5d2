use num_complex::Complex64;

use crate::error::{Error, Result};

/// A sample type a [`TimeSeries`] can hold.
pub trait Sample: Copy + Send + Sync + 'static {
    fn to_complex(self) -> Complex64;
    fn is_finite(self) -> bool;
}

impl Sample for f64 {
    #[inline]
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }

    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Sample for Complex64 {
    #[inline]
    fn to_complex(self) -> Complex64 {
        self
    }

    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Uniformly sampled record starting at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    fs: f64,
    t0: f64,
    samples: Vec<T>,
}

impl<T: Sample> TimeSeries<T> {
    pub fn new(fs: f64, t0: f64, samples: Vec<T>) -> Result<Self> {
        if !(fs > 0.0) || !fs.is_finite() {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {fs}"
            )));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("start time must be finite"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self { fs, t0, samples })
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.fs
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.fs
    }

    /// Sub-record starting at sample `start`, with the start time shifted to match.
    pub fn slice_from(&self, start: usize) -> Self {
        let start = start.min(self.samples.len());
        Self {
            fs: self.fs,
            t0: self.time(start),
            samples: self.samples[start..].to_vec(),
        }
    }
}
