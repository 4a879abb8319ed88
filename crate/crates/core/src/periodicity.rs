//! Autocorrelation period estimation and heart/lung row labeling.

use rustfft::FftPlanner;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::signal::Signal;
use crate::spectral::{Band, periodogram};

/// Biased autocorrelation `ACF(P) = (1/T) Σₜ xₜ xₜ₊ₚ` for lags `0..T`,
/// computed on the raw samples through a zero-padded FFT. Lag `T` is an
/// empty sum and is omitted.
pub fn acf<T: Scalar>(x: &[T]) -> Result<Vec<T>> {
    let n = x.len();
    if n == 0 {
        return Err(Error::invalid("autocorrelation of an empty signal"));
    }
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<T>> = x
        .iter()
        .map(|&v| Complex::new(v, T::zero()))
        .chain(std::iter::repeat(Complex::new(T::zero(), T::zero())))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for v in &mut buf {
        *v = Complex::new(v.norm_sqr(), T::zero());
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = T::from_usize_lossy(size) * T::from_usize_lossy(n);
    Ok(buf[..n].iter().map(|v| v.re / scale).collect())
}

/// Peak gate for [`find_acf_peaks`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakParams {
    /// Minimum peak height as a fraction of `ACF(0)`.
    pub min_rel_height: f64,
    /// Minimum spacing between kept peaks as a fraction of the signal length.
    pub min_distance_frac: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        PeakParams {
            min_rel_height: 0.2,
            min_distance_frac: 0.05,
        }
    }
}

/// Local maxima of `acf` at lags `≥ 1` whose height is at least
/// `min_rel_height · acf[0]`, thinned so kept peaks are at least
/// `min_distance` lags apart. Lag 0 counts as the tallest kept peak, so
/// carrier ripple near the origin is discarded. Taller peaks win; equal
/// heights keep the earlier lag. Returned lags are strictly increasing.
pub fn find_acf_peaks<T: Scalar>(acf: &[T], min_rel_height: f64, min_distance: usize) -> Vec<usize> {
    let Some(&zero) = acf.first() else {
        return Vec::new();
    };
    if !(zero > T::zero()) || acf.len() < 3 {
        return Vec::new();
    }
    let gate = zero * T::lit(min_rel_height);
    let mut candidates = Vec::new();
    let mut p = 1;
    while p + 1 < acf.len() {
        if acf[p] > acf[p - 1] {
            // Walk across a plateau and require a strict drop after it.
            let mut q = p;
            while q + 1 < acf.len() && acf[q + 1] == acf[p] {
                q += 1;
            }
            if q + 1 < acf.len() && acf[q + 1] < acf[p] && acf[p] >= gate {
                candidates.push(p);
            }
            p = q + 1;
        } else {
            p += 1;
        }
    }
    let mut order = candidates.clone();
    // Stable sort: equal heights stay in increasing-lag order.
    order.sort_by(|&a, &b| acf[b].partial_cmp(&acf[a]).unwrap_or(std::cmp::Ordering::Equal));
    let mut kept: Vec<usize> = vec![0];
    for lag in order {
        if kept.iter().all(|&k| k.abs_diff(lag) >= min_distance) {
            kept.push(lag);
        }
    }
    kept.remove(0);
    kept.sort_unstable();
    kept
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodEstimate {
    /// `None` when fewer than two peaks were found.
    pub period_seconds: Option<f64>,
    pub peak_lags: Vec<usize>,
    pub n_peaks: usize,
}

impl PeriodEstimate {
    pub fn is_detected(&self) -> bool {
        self.period_seconds.is_some()
    }
}

pub fn estimate_period<T: Scalar>(x: &Signal<T>) -> PeriodEstimate {
    estimate_period_with(x.samples(), x.sample_rate(), &PeakParams::default())
}

/// Mean spacing of consecutive ACF peaks, in seconds.
pub fn estimate_period_with<T: Scalar>(samples: &[T], sample_rate: u32, params: &PeakParams) -> PeriodEstimate {
    let Ok(r) = acf(samples) else {
        return PeriodEstimate {
            period_seconds: None,
            peak_lags: Vec::new(),
            n_peaks: 0,
        };
    };
    let min_distance = ((params.min_distance_frac * samples.len() as f64).round() as usize).max(1);
    let peaks = find_acf_peaks(&r, params.min_rel_height, min_distance);
    let period_seconds = (peaks.len() >= 2).then(|| {
        let span = (peaks[peaks.len() - 1] - peaks[0]) as f64;
        span / (peaks.len() - 1) as f64 / f64::from(sample_rate)
    });
    PeriodEstimate {
        period_seconds,
        n_peaks: peaks.len(),
        peak_lags: peaks,
    }
}

/// How [`assign_sources`] reached its decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    Period,
    DominantFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceLabels {
    pub heart: usize,
    pub lung: usize,
    pub periods: Vec<PeriodEstimate>,
    pub rule: LabelRule,
}

/// Labels the rows of `x`: the shortest period is heart, the longest lung.
/// Rows are mean-removed before the ACF so the offset carried by
/// nonnegative factors does not mask the periodic peaks. When fewer than
/// two distinct periods are detected, the row with the lowest dominant
/// frequency (DC excluded) is heart and the highest is lung.
pub fn assign_sources<T: Scalar>(x: &Matrix<T>, sample_rate: u32) -> Result<SourceLabels> {
    assign_sources_with(x, sample_rate, &PeakParams::default())
}

pub fn assign_sources_with<T: Scalar>(
    x: &Matrix<T>,
    sample_rate: u32,
    params: &PeakParams,
) -> Result<SourceLabels> {
    if x.rows() < 2 {
        return Err(Error::invalid("source labeling needs at least two rows"));
    }
    if x.cols() < 2 {
        return Err(Error::invalid("source labeling needs at least two samples per row"));
    }
    let centered: Vec<Vec<T>> = x
        .row_iter()
        .map(|row| {
            let mean = row.iter().copied().sum::<T>() / T::from_usize_lossy(row.len());
            row.iter().map(|&v| v - mean).collect()
        })
        .collect();
    let periods: Vec<PeriodEstimate> = centered
        .iter()
        .map(|row| estimate_period_with(row, sample_rate, params))
        .collect();

    let detected: Vec<(usize, f64)> = periods
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.period_seconds.map(|s| (i, s)))
        .collect();
    if detected.len() >= 2 {
        let heart = extreme(&detected, |a, b| a < b);
        let lung = extreme(&detected, |a, b| a > b);
        let ph = detected.iter().find(|d| d.0 == heart).expect("present").1;
        let pl = detected.iter().find(|d| d.0 == lung).expect("present").1;
        if ph < pl {
            return Ok(SourceLabels {
                heart,
                lung,
                periods,
                rule: LabelRule::Period,
            });
        }
    }

    let nyquist = f64::from(sample_rate) / 2.0;
    let band = Band::new(0.0, nyquist)?;
    let dominant: Vec<(usize, f64)> = centered
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let psd = periodogram(&Signal::new(row, sample_rate)?)?;
            let mut best = (0.0, T::zero());
            for (&f, &p) in psd.frequencies.iter().zip(&psd.power).skip(1) {
                if band.contains(f.as_f64()) && p > best.1 {
                    best = (f.as_f64(), p);
                }
            }
            Ok((i, best.0))
        })
        .collect::<Result<_>>()?;
    let heart = extreme(&dominant, |a, b| a < b);
    let mut lung = extreme(&dominant, |a, b| a > b);
    if lung == heart {
        lung = if heart == 0 { 1 } else { 0 };
    }
    Ok(SourceLabels {
        heart,
        lung,
        periods,
        rule: LabelRule::DominantFrequency,
    })
}

/// Index of the first entry that is extreme under `better`.
fn extreme(values: &[(usize, f64)], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = values[0];
    for &v in &values[1..] {
        if better(v.1, best.1) {
            best = v;
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::TAU;

    fn direct_acf(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|p| (0..n - p).map(|t| x[t] * x[t + p]).sum::<f64>() / n as f64)
            .collect()
    }

    fn pulses(period: usize, n: usize) -> Vec<f64> {
        (0..n).map(|t| if t % period == 0 { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn ones_hand_values() {
        let r = acf(&[1.0f64; 4]).unwrap();
        for (got, want) in r.iter().zip([1.0, 0.75, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn impulse_has_no_lagged_energy() {
        let mut x = vec![0.0f64; 16];
        x[0] = 1.0;
        let r = acf(&x).unwrap();
        assert!(r[1..].iter().all(|v| v.abs() < 1e-15));
        assert!(acf::<f64>(&[]).is_err());
    }

    #[test]
    fn matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..300).map(|_| StandardNormal.sample(&mut rng)).collect();
        let fast = acf(&x).unwrap();
        let slow = direct_acf(&x);
        let scale = slow[0];
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn sine_peaks_every_200_lags() {
        let x: Vec<f64> = (0..2000).map(|t| (TAU * 5.0 * t as f64 / 1000.0).sin()).collect();
        let r = acf(&x).unwrap();
        let peaks = find_acf_peaks(&r, 0.2, 100);
        assert!(peaks[0].abs_diff(200) <= 1, "{peaks:?}");
        for (k, &p) in peaks.iter().enumerate() {
            assert!(p.abs_diff(200 * (k + 1)) <= 1);
        }
    }

    #[test]
    fn decreasing_acf_has_no_peaks() {
        let r: Vec<f64> = (0..50).map(|i| 50.0 - i as f64).collect();
        assert!(find_acf_peaks(&r, 0.2, 2).is_empty());
    }

    #[test]
    fn equal_close_peaks_keep_earlier() {
        let r = [10.0, 0.0, 0.0, 0.0, 5.0, 0.0, 5.0, 0.0, 0.0];
        assert_eq!(find_acf_peaks(&r, 0.2, 3), vec![4]);
        let near = [10.0, 0.0, 9.0, 0.0, 0.0, 0.0];
        assert!(find_acf_peaks(&near, 0.2, 3).is_empty());
    }

    #[test]
    fn pulse_train_period() {
        let est = estimate_period(&Signal::new(pulses(100, 1000), 100).unwrap());
        let p = est.period_seconds.unwrap();
        assert!((p - 1.0).abs() <= 0.05, "{p}");
        assert!(est.n_peaks >= 2);
    }

    #[test]
    fn zero_signal_undetected() {
        let est = estimate_period(&Signal::new(vec![0.0f64; 500], 100).unwrap());
        assert!(!est.is_detected());
    }

    #[test]
    fn noise_does_not_crash() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let est = estimate_period(&Signal::new(x, 1000).unwrap());
        assert_eq!(est.is_detected(), est.n_peaks >= 2);
    }

    fn burst_row(period_s: f64, fs: f64, n: usize, carrier: f64) -> Vec<f64> {
        (0..n)
            .map(|t| {
                let time = t as f64 / fs;
                let phase = (time / period_s).fract();
                let env = (-((phase - 0.2) / 0.05).powi(2)).exp();
                1.0 + env * (TAU * carrier * time).sin()
            })
            .collect()
    }

    #[test]
    fn labels_by_period_and_swaps() {
        let fs = 200.0;
        let n = 4000;
        let heart = burst_row(0.9, fs, n, 40.0);
        let lung = burst_row(3.5, fs, n, 80.0);
        let x = Matrix::from_rows(&[heart.clone(), lung.clone()]).unwrap();
        let l = assign_sources(&x, 200).unwrap();
        assert_eq!((l.heart, l.lung, l.rule), (0, 1, LabelRule::Period));
        let swapped = Matrix::from_rows(&[lung, heart]).unwrap();
        let l = assign_sources(&swapped, 200).unwrap();
        assert_eq!((l.heart, l.lung), (1, 0));
    }

    #[test]
    fn tie_falls_back_to_frequency() {
        let fs = 200.0;
        let a = burst_row(1.0, fs, 2000, 30.0);
        let b = burst_row(1.0, fs, 2000, 70.0);
        let x = Matrix::from_rows(&[b, a]).unwrap();
        let l = assign_sources(&x, 200).unwrap();
        assert_eq!(l.rule, LabelRule::DominantFrequency);
        assert_eq!((l.heart, l.lung), (1, 0));
        assert!(assign_sources(&Matrix::from_rows(&[[1.0, 2.0]]).unwrap(), 10).is_err());
    }
}
