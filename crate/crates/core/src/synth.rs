//! Synthetic heart and lung sound analogs with known ground truth.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::signal::{MixtureSet, synth_mixtures};

/// Beat train: Gaussian-enveloped tone bursts once per `period` seconds
/// (first sound) with a weaker second sound 0.3 s later.
pub fn heart_analog(fs: u32, samples: usize, period: f64, carrier: f64, phase: f64) -> Vec<f64> {
    const WIDTH: f64 = 0.025;
    let fs = f64::from(fs);
    let duration = samples as f64 / fs;
    let beats = (duration / period).ceil() as i64 + 2;
    let mut x = vec![0.0; samples];
    for k in -1..=beats {
        let onset = (k as f64 + phase) * period;
        for (offset, amp) in [(0.0, 1.0), (0.3, 0.5)] {
            let centre = onset + offset;
            let lo = (((centre - 6.0 * WIDTH) * fs).floor().max(0.0)) as usize;
            let hi = (((centre + 6.0 * WIDTH) * fs).ceil().max(0.0) as usize).min(samples);
            for (t, v) in x.iter_mut().enumerate().take(hi).skip(lo) {
                let dt = t as f64 / fs - centre;
                *v += amp * (-0.5 * (dt / WIDTH).powi(2)).exp() * (TAU * carrier * dt).sin();
            }
        }
    }
    x
}

/// Breathing cycle: a harmonic cluster under a `sin²` envelope that is
/// active for 40% of every `period` seconds.
pub fn lung_analog(fs: u32, samples: usize, period: f64, phase: f64) -> Vec<f64> {
    const TONES: [(f64, f64); 3] = [(180.0, 1.0), (240.0, 0.7), (310.0, 0.5)];
    let fs = f64::from(fs);
    let active = 0.4 * period;
    (0..samples)
        .map(|i| {
            let t = i as f64 / fs;
            let tau = (t - phase).rem_euclid(period);
            if tau >= active {
                return 0.0;
            }
            let env = (std::f64::consts::PI * tau / active).sin().powi(2);
            let tone: f64 = TONES.iter().map(|&(f, a)| a * (TAU * f * t).sin()).sum();
            0.5 * env * tone
        })
        .collect()
}

fn unit_rms(mut x: Vec<f64>) -> Vec<f64> {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    if rms > 0.0 {
        x.iter_mut().for_each(|v| *v /= rms);
    }
    x
}

/// How mixing weights are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MixingStyle {
    /// Each sensor sits near one source: own-source weight in
    /// `[0.7, 1.0]`, cross weight in `[0.1, 0.5]`. Sensors alternate
    /// between the heart and the lung.
    Placement,
    /// Every weight i.i.d. uniform in `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub sample_rate: u32,
    pub duration_s: f64,
    pub mixtures: usize,
    pub mixing: MixingStyle,
    pub noise_db: Option<f64>,
    pub heart_period_s: f64,
    pub lung_period_s: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            sample_rate: 1000,
            duration_s: 16.0,
            mixtures: 2,
            mixing: MixingStyle::Placement,
            noise_db: None,
            heart_period_s: 1.0,
            lung_period_s: 4.0,
        }
    }
}

/// Heart source in row 0, lung source in row 1, both at unit RMS.
pub fn synth_sources<T: Scalar>(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<Matrix<T>> {
    let n = (spec.duration_s * f64::from(spec.sample_rate)).round() as usize;
    if n < 2 || spec.sample_rate == 0 {
        return Err(Error::invalid("synthetic case needs a positive rate and duration"));
    }
    let heart_phase = rng.gen_range(0.0..1.0);
    let carrier = rng.gen_range(45.0..70.0);
    let lung_phase = rng.gen_range(0.0..spec.lung_period_s);
    let heart = unit_rms(heart_analog(
        spec.sample_rate,
        n,
        spec.heart_period_s,
        carrier,
        heart_phase,
    ));
    let lung = unit_rms(lung_analog(spec.sample_rate, n, spec.lung_period_s, lung_phase));
    Ok(Matrix::from_fn(2, n, |i, t| {
        T::lit(if i == 0 { heart[t] } else { lung[t] })
    }))
}

pub fn draw_mixing<T: Scalar>(style: MixingStyle, m: usize, rng: &mut ChaCha8Rng) -> Result<Matrix<T>> {
    if m == 0 {
        return Err(Error::invalid("at least one mixture is required"));
    }
    match style {
        MixingStyle::Placement => Ok(Matrix::from_fn(m, 2, |i, j| {
            let own = i % 2 == j;
            T::lit(if own {
                rng.gen_range(0.7..1.0)
            } else {
                rng.gen_range(0.1..0.5)
            })
        })),
        MixingStyle::Uniform { lo, hi } => {
            if !(lo >= 0.0 && lo < hi) {
                return Err(Error::invalid("uniform mixing needs 0 <= lo < hi"));
            }
            Ok(Matrix::from_fn(m, 2, |_, _| T::lit(rng.gen_range(lo..hi))))
        }
    }
}

/// One seeded heart/lung case: sources, mixing and mixtures drawn from a
/// single stream so the whole case is reproducible from `seed`.
pub fn synth_case<T: Scalar>(spec: &SynthSpec, seed: u64) -> Result<MixtureSet<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources = synth_sources::<T>(spec, &mut rng)?;
    let mixing = draw_mixing::<T>(spec.mixing, spec.mixtures, &mut rng)?;
    synth_mixtures(&sources, &mixing, spec.noise_db, seed ^ 0x5eed, spec.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodicity::{assign_sources, estimate_period};
    use crate::signal::Signal;

    #[test]
    fn analog_periods_fall_in_physiological_bands() {
        let spec = SynthSpec::default();
        let case = synth_case::<f64>(&spec, 3).unwrap();
        let src = case.sources.as_ref().unwrap();
        let heart = Signal::new(src.row(0).to_vec(), 1000).unwrap();
        let lung = Signal::new(src.row(1).to_vec(), 1000).unwrap();
        let ph = estimate_period(&heart).period_seconds.unwrap();
        let pl = estimate_period(&lung).period_seconds.unwrap();
        assert!((0.8..=1.2).contains(&ph), "{ph}");
        assert!((2.0..=5.0).contains(&pl), "{pl}");
        let labels = assign_sources(src, 1000).unwrap();
        assert_eq!((labels.heart, labels.lung), (0, 1));
    }

    #[test]
    fn deterministic_and_unit_rms() {
        let spec = SynthSpec {
            duration_s: 4.0,
            ..SynthSpec::default()
        };
        let a = synth_case::<f64>(&spec, 9).unwrap();
        let b = synth_case::<f64>(&spec, 9).unwrap();
        assert_eq!(a.mixtures, b.mixtures);
        let src = a.sources.unwrap();
        for r in src.row_iter() {
            let rms = (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt();
            assert!((rms - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn placement_mixing_shape_and_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = draw_mixing::<f64>(MixingStyle::Placement, 5, &mut rng).unwrap();
        assert_eq!(a.shape(), (5, 2));
        for i in 0..5 {
            assert!(a[(i, i % 2)] >= 0.7);
            assert!(a[(i, 1 - i % 2)] < 0.5);
        }
        assert!(draw_mixing::<f64>(MixingStyle::Uniform { lo: 1.0, hi: 0.5 }, 2, &mut rng).is_err());
    }
}
