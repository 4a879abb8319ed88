//! Periodogram, fundamental frequency, scalar features and spectrogram.

use std::fmt;
use std::str::FromStr;

use rustfft::FftPlanner;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::signal::Signal;

/// Closed frequency interval `[lo, hi]` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || lo >= hi {
            return Err(Error::invalid(format!("band [{lo}, {hi}] must satisfy 0 <= lo < hi")));
        }
        Ok(Band { lo, hi })
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.lo && f <= self.hi
    }

    pub fn clamp(&self, f: f64) -> f64 {
        f.clamp(self.lo, self.hi)
    }

    /// The band with its upper edge limited to `nyquist`.
    pub fn limited_to(&self, nyquist: f64) -> Result<Self> {
        Band::new(self.lo, self.hi.min(nyquist))
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

impl FromStr for Band {
    type Err = Error;

    /// Parses `LO-HI`, e.g. `20-200`.
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .trim()
            .split_once('-')
            .ok_or_else(|| Error::invalid(format!("band must look like LO-HI, got {s:?}")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("band edge {v:?} is not a number")))
        };
        Band::new(parse(lo)?, parse(hi)?)
    }
}

/// One-sided power spectral density on the grid `k · fs / T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate<T> {
    pub frequencies: Vec<T>,
    pub power: Vec<T>,
    pub resolution: T,
}

fn spectrum<T: Scalar>(samples: &[T]) -> Vec<Complex<T>> {
    let mut buf: Vec<Complex<T>> = samples.iter().map(|&v| Complex::new(v, T::zero())).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Single-window periodogram `|X_k|² / (fs T)`, with interior bins doubled
/// so that `Σ power · Δf` equals the mean square of the signal.
pub fn periodogram<T: Scalar>(x: &Signal<T>) -> Result<PsdEstimate<T>> {
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("periodogram needs at least two samples"));
    }
    let fs = T::from_usize_lossy(x.sample_rate() as usize);
    let len = T::from_usize_lossy(n);
    let spec = spectrum(x.samples());
    let bins = n / 2 + 1;
    let norm = fs * len;
    let two = T::lit(2.0);
    let power = (0..bins)
        .map(|k| {
            let p = spec[k].norm_sqr() / norm;
            let mirrored = k != 0 && !(n % 2 == 0 && k == n / 2);
            if mirrored { p * two } else { p }
        })
        .collect();
    let resolution = fs / len;
    let frequencies = (0..bins).map(|k| T::from_usize_lossy(k) * resolution).collect();
    Ok(PsdEstimate {
        frequencies,
        power,
        resolution,
    })
}

fn band_argmax<T: Scalar>(psd: &PsdEstimate<T>, band: Band) -> Result<T> {
    let mut best: Option<(usize, T)> = None;
    for (k, (&f, &p)) in psd.frequencies.iter().zip(&psd.power).enumerate() {
        if !band.contains(f.as_f64()) {
            continue;
        }
        // Strict comparison keeps the lowest frequency on ties.
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((k, p));
        }
    }
    best.map(|(k, _)| psd.frequencies[k])
        .ok_or_else(|| Error::invalid(format!("band {band} contains no frequency bins")))
}

/// Frequency of maximal periodogram power inside `band`.
pub fn fundamental_frequency<T: Scalar>(x: &Signal<T>, band: Band) -> Result<T> {
    let nyquist = f64::from(x.sample_rate()) / 2.0;
    if band.hi > nyquist + 1e-9 {
        return Err(Error::invalid(format!(
            "band {band} exceeds the Nyquist frequency {nyquist}"
        )));
    }
    band_argmax(&periodogram(x)?, band)
}

/// Scalar descriptors of one signal, plus its in-band fundamental.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector<T> {
    pub spectral_centroid: T,
    pub rms_energy: T,
    pub zero_crossing_rate: T,
    pub variance: T,
    pub mean_frequency: T,
    pub max_amplitude: T,
    pub fundamental_frequency: T,
}

fn power_weighted_frequency<T: Scalar>(psd: &PsdEstimate<T>) -> T {
    let total: T = psd.power.iter().copied().sum();
    if total <= T::zero() {
        return T::zero();
    }
    psd.frequencies
        .iter()
        .zip(&psd.power)
        .fold(T::zero(), |acc, (&f, &p)| acc + f * p)
        / total
}

/// Fraction of adjacent sample pairs with strictly opposite signs.
pub fn zero_crossing_rate<T: Scalar>(samples: &[T]) -> T {
    if samples.len() < 2 {
        return T::zero();
    }
    let crossings = samples
        .windows(2)
        .filter(|w| w[0] * w[1] < T::zero())
        .count();
    T::from_usize_lossy(crossings) / T::from_usize_lossy(samples.len() - 1)
}

pub fn extract_features<T: Scalar>(x: &Signal<T>, band: Band) -> Result<FeatureVector<T>> {
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("feature extraction needs at least two samples"));
    }
    let psd = periodogram(x)?;
    let s = x.samples();
    let len = T::from_usize_lossy(n);
    let mean_square = s.iter().fold(T::zero(), |acc, &v| acc + v * v) / len;
    let mean = x.mean();
    let variance = s.iter().fold(T::zero(), |acc, &v| acc + (v - mean) * (v - mean)) / len;
    let weighted = power_weighted_frequency(&psd);
    Ok(FeatureVector {
        spectral_centroid: weighted,
        rms_energy: mean_square.sqrt(),
        zero_crossing_rate: zero_crossing_rate(s),
        variance,
        mean_frequency: weighted,
        max_amplitude: s.iter().fold(T::zero(), |m, &v| m.max(v.abs())),
        fundamental_frequency: band_argmax(&psd, band.limited_to(f64::from(x.sample_rate()) / 2.0)?)?,
    })
}

pub const DEFAULT_WINDOW: usize = 256;
pub const DEFAULT_HOP: usize = 128;

/// Short-time magnitude spectrum: rows are frequency bins `0..=w/2`,
/// columns are frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T> {
    pub magnitudes: Matrix<T>,
    pub frequencies: Vec<T>,
    /// Frame start times in seconds.
    pub times: Vec<T>,
}

/// Periodic Hann window of length `n`.
pub fn hann<T: Scalar>(n: usize) -> Vec<T> {
    let len = T::from_usize_lossy(n);
    let two_pi = T::lit(std::f64::consts::TAU);
    let half = T::lit(0.5);
    (0..n)
        .map(|i| half - half * (two_pi * T::from_usize_lossy(i) / len).cos())
        .collect()
}

pub fn spectrogram<T: Scalar>(x: &Signal<T>, window_len: usize, hop: usize) -> Result<Spectrogram<T>> {
    if window_len == 0 || hop == 0 {
        return Err(Error::invalid("window length and hop must be positive"));
    }
    if window_len > x.len() {
        return Err(Error::invalid(format!(
            "window of {window_len} samples is longer than the {}-sample signal",
            x.len()
        )));
    }
    let frames = 1 + (x.len() - window_len) / hop;
    let bins = window_len / 2 + 1;
    let window = hann::<T>(window_len);
    let fft = FftPlanner::new().plan_fft_forward(window_len);
    let mut magnitudes = Matrix::zeros(bins, frames);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); window_len];
    for c in 0..frames {
        let frame = &x.samples()[c * hop..c * hop + window_len];
        for ((b, &s), &w) in buf.iter_mut().zip(frame).zip(&window) {
            *b = Complex::new(s * w, T::zero());
        }
        fft.process(&mut buf);
        for (r, v) in buf.iter().take(bins).enumerate() {
            magnitudes[(r, c)] = v.norm();
        }
    }
    let fs = T::from_usize_lossy(x.sample_rate() as usize);
    let res = fs / T::from_usize_lossy(window_len);
    Ok(Spectrogram {
        magnitudes,
        frequencies: (0..bins).map(|k| T::from_usize_lossy(k) * res).collect(),
        times: (0..frames)
            .map(|c| T::from_usize_lossy(c * hop) / fs)
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::TAU;

    fn tone(f: f64, amp: f64, fs: u32, n: usize) -> Vec<f64> {
        (0..n).map(|t| amp * (TAU * f * t as f64 / f64::from(fs)).sin()).collect()
    }

    fn sig(v: Vec<f64>, fs: u32) -> Signal<f64> {
        Signal::new(v, fs).unwrap()
    }

    #[test]
    fn tone_peaks_at_its_bin() {
        let psd = periodogram(&sig(tone(50.0, 1.0, 2000, 8000), 2000)).unwrap();
        let k = (0..psd.power.len())
            .max_by(|&a, &b| psd.power[a].total_cmp(&psd.power[b]))
            .unwrap();
        assert_eq!(psd.frequencies[k], 50.0);
        assert_eq!(psd.resolution, 0.25);
    }

    #[test]
    fn dc_power_in_zero_bin() {
        let psd = periodogram(&sig(vec![0.7; 64], 100)).unwrap();
        assert!((psd.power[0] * psd.resolution - 0.49).abs() < 1e-12);
        assert!(psd.power[1..].iter().all(|&p| p < 1e-20));
    }

    #[test]
    fn parseval_white_noise_seed8() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in [4096usize, 4095] {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let ms = v.iter().map(|a| a * a).sum::<f64>() / n as f64;
            let psd = periodogram(&sig(v, 1000)).unwrap();
            let total: f64 = psd.power.iter().sum::<f64>() * psd.resolution;
            assert!((total - ms).abs() <= 0.01 * ms, "n {n}: {total} vs {ms}");
        }
    }

    #[test]
    fn fundamental_in_band() {
        let x = sig(tone(50.0, 1.0, 2000, 8000), 2000);
        let band = Band::new(20.0, 200.0).unwrap();
        assert!((fundamental_frequency(&x, band).unwrap() - 50.0).abs() <= 0.25);
        let mix: Vec<f64> = tone(50.0, 1.0, 2000, 8000)
            .iter()
            .zip(tone(300.0, 0.5, 2000, 8000))
            .map(|(a, b)| a + b)
            .collect();
        assert_eq!(fundamental_frequency(&sig(mix, 2000), band).unwrap(), 50.0);
    }

    #[test]
    fn fundamental_errors() {
        let x = sig(tone(50.0, 1.0, 2000, 8000), 2000);
        assert!(fundamental_frequency(&x, Band::new(20.0, 2000.0).unwrap()).is_err());
        assert!(fundamental_frequency(&x, Band::new(50.1, 50.2).unwrap()).is_err());
        assert!(Band::new(200.0, 20.0).is_err());
    }

    #[test]
    fn fundamental_ties_go_low() {
        // Equal-power tones at bins 10 and 20 Hz.
        let v: Vec<f64> = tone(10.0, 1.0, 200, 200)
            .iter()
            .zip(tone(20.0, 1.0, 200, 200))
            .map(|(a, b)| a + b)
            .collect();
        let psd = periodogram(&sig(v, 200)).unwrap();
        let mut forced = psd.clone();
        forced.power[20] = forced.power[10];
        assert_eq!(band_argmax(&forced, Band::new(5.0, 50.0).unwrap()).unwrap(), 10.0);
    }

    #[test]
    fn sine_features() {
        let fs = 1000;
        let x = sig(tone(25.0, 0.8, fs, 4000), fs);
        let f = extract_features(&x, Band::new(20.0, 200.0).unwrap()).unwrap();
        assert!((f.rms_energy - 0.8 / 2f64.sqrt()).abs() <= 0.01 * 0.8 / 2f64.sqrt());
        let expect_zcr = 2.0 * 25.0 / f64::from(fs);
        assert!((f.zero_crossing_rate - expect_zcr).abs() <= 0.05 * expect_zcr);
        assert_eq!(f.spectral_centroid, f.mean_frequency);
        assert!((f.max_amplitude - 0.8).abs() < 1e-9);
        assert_eq!(f.fundamental_frequency, 25.0);
    }

    #[test]
    fn spectrogram_frame_count() {
        let x = sig(vec![0.0; 1000], 1000);
        let s = spectrogram(&x, 256, 128).unwrap();
        assert_eq!(s.magnitudes.shape(), (129, 6));
        assert!(spectrogram(&x, 1001, 128).is_err());
    }

    #[test]
    fn spectrogram_constant_stays_in_main_lobe() {
        let s = spectrogram(&sig(vec![1.0; 2048], 1000), 256, 128).unwrap();
        for c in 0..s.magnitudes.cols() {
            let col: Vec<f64> = (0..s.magnitudes.rows()).map(|r| s.magnitudes[(r, c)]).collect();
            assert!(col[0] > col[1]);
            assert!(col[2..].iter().all(|&v| v < 1e-9 * col[0]));
        }
    }

    #[test]
    fn chirp_ridge_rises() {
        let fs = 1000.0;
        let n = 4000;
        let dur = n as f64 / fs;
        let v: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                (TAU * (10.0 * t + 0.5 * (90.0 / dur) * t * t)).sin()
            })
            .collect();
        let s = spectrogram(&sig(v, 1000), 256, 128).unwrap();
        let m = &s.magnitudes;
        let ridge: Vec<usize> = (0..m.cols())
            .map(|c| (0..m.rows()).max_by(|&a, &b| m[(a, c)].total_cmp(&m[(b, c)])).unwrap())
            .collect();
        assert!(ridge.windows(2).all(|w| w[0] <= w[1]), "{ridge:?}");
    }

    #[test]
    fn band_parses() {
        assert_eq!("20-200".parse::<Band>().unwrap(), Band { lo: 20.0, hi: 200.0 });
        assert!("20".parse::<Band>().is_err());
        assert!("a-b".parse::<Band>().is_err());
    }
}
