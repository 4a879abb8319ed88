//! Time-domain signals, mixture sets and the affine nonnegativity shift.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, NonNegMatrix};
use crate::scalar::Scalar;

/// Offset added on top of the minimal shift in [`Lambda2::Auto`] mode.
pub const EPS_POS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    samples: Vec<T>,
    sample_rate: u32,
}

impl<T: Scalar> Signal<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i}")));
        }
        Ok(Signal {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn mean(&self) -> T {
        if self.samples.is_empty() {
            return T::zero();
        }
        self.samples.iter().copied().sum::<T>() / T::from_usize_lossy(self.samples.len())
    }

    /// Copy with the sample mean subtracted.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        Signal {
            samples: self.samples.iter().map(|&v| v - m).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn scaled(&self, gain: T) -> Self {
        Signal {
            samples: self.samples.iter().map(|&v| v * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Mixtures with optional ground truth.
#[derive(Debug, Clone)]
pub struct MixtureSet<T> {
    pub mixtures: Matrix<T>,
    pub sources: Option<Matrix<T>>,
    pub mixing: Option<Matrix<T>>,
    pub sample_rate: u32,
}

impl<T: Scalar> MixtureSet<T> {
    pub fn mixture(&self, i: usize) -> Result<Signal<T>> {
        Signal::new(self.mixtures.row(i).to_vec(), self.sample_rate)
    }

    pub fn source(&self, j: usize) -> Option<Result<Signal<T>>> {
        self.sources
            .as_ref()
            .map(|s| Signal::new(s.row(j).to_vec(), self.sample_rate))
    }
}

/// Mixes `sources` (N×T) through `mixing` (M×N), optionally adding white
/// Gaussian noise so that every mixture row has the requested SNR in dB.
pub fn synth_mixtures<T: Scalar>(
    sources: &Matrix<T>,
    mixing: &Matrix<T>,
    noise_db: Option<f64>,
    seed: u64,
    sample_rate: u32,
) -> Result<MixtureSet<T>> {
    if sources.rows() == 0 || mixing.rows() == 0 {
        return Err(Error::invalid("need at least one source and one mixture"));
    }
    if mixing.cols() != sources.rows() {
        return Err(Error::shape(format!(
            "mixing is {}x{} but there are {} sources",
            mixing.rows(),
            mixing.cols(),
            sources.rows()
        )));
    }
    if sample_rate == 0 {
        return Err(Error::invalid("sample rate must be positive"));
    }
    for i in 0..mixing.rows() {
        for (j, &v) in mixing.row(i).iter().enumerate() {
            if !(v >= T::zero()) {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: v.as_f64(),
                });
            }
        }
    }

    let mut mixtures = mixing.matmul(sources)?;
    if let Some(db) = noise_db {
        if !db.is_finite() {
            return Err(Error::invalid("noise SNR must be finite"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = mixtures.cols();
        for i in 0..mixtures.rows() {
            let row = mixtures.row_mut(i);
            let power = row.iter().map(|v| v.as_f64().powi(2)).sum::<f64>() / t.max(1) as f64;
            let sigma = (power / 10f64.powf(db / 10.0)).sqrt();
            for v in row.iter_mut() {
                let n: f64 = StandardNormal.sample(&mut rng);
                *v = *v + T::lit(sigma * n);
            }
        }
    }

    Ok(MixtureSet {
        mixtures,
        sources: Some(sources.clone()),
        mixing: Some(mixing.clone()),
        sample_rate,
    })
}

/// Offset of the affine shift: a fixed value or the minimal one that keeps
/// every entry strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda2<T> {
    Auto,
    Value(T),
}

impl<T: Scalar> std::str::FromStr for Lambda2<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Lambda2::Auto);
        }
        s.trim()
            .parse::<T>()
            .map(Lambda2::Value)
            .map_err(|_| Error::invalid(format!("lambda2 must be 'auto' or a number, got {s:?}")))
    }
}

impl<T: Scalar> serde::Serialize for Lambda2<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Lambda2::Auto => s.serialize_str("auto"),
            Lambda2::Value(v) => s.serialize_f64(v.as_f64()),
        }
    }
}

impl<'de, T: Scalar> serde::Deserialize<'de> for Lambda2<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Lambda2::Value(T::lit(v))),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl<T: Scalar> std::fmt::Display for Lambda2<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Lambda2::Auto => f.write_str("auto"),
            Lambda2::Value(v) => write!(f, "{v}"),
        }
    }
}

/// Resolved affine map `y -> lambda1 * y + lambda2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineShift<T> {
    pub lambda1: T,
    pub lambda2: T,
}

impl<T: Scalar> AffineShift<T> {
    pub fn resolve(y: &Matrix<T>, lambda1: T, lambda2: Lambda2<T>) -> Result<Self> {
        if !(lambda1 > T::zero()) || !lambda1.is_finite() {
            return Err(Error::invalid("lambda1 must be positive and finite"));
        }
        let lambda2 = match lambda2 {
            Lambda2::Value(v) => v,
            Lambda2::Auto => {
                let min = y.min().ok_or_else(|| Error::Degenerate("empty matrix".into()))?;
                -lambda1 * min + T::lit(EPS_POS)
            }
        };
        if !lambda2.is_finite() {
            return Err(Error::invalid("lambda2 must be finite"));
        }
        Ok(AffineShift { lambda1, lambda2 })
    }

    pub fn apply(&self, y: &Matrix<T>) -> Result<NonNegMatrix<T>> {
        let shifted = y.map(|v| self.lambda1 * v + self.lambda2);
        NonNegMatrix::try_new(shifted)
    }

    pub fn invert(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if self.lambda1 == T::zero() {
            return Err(Error::invalid("lambda1 must be nonzero to invert"));
        }
        Ok(x.map(|v| (v - self.lambda2) / self.lambda1))
    }

    pub fn invert_signal(&self, x: &[T], sample_rate: u32) -> Result<Signal<T>> {
        if self.lambda1 == T::zero() {
            return Err(Error::invalid("lambda1 must be nonzero to invert"));
        }
        Signal::new(
            x.iter()
                .map(|&v| (v - self.lambda2) / self.lambda1)
                .collect(),
            sample_rate,
        )
    }
}

/// `lambda1 * Y + lambda2`, failing if any entry would be negative.
pub fn affine_shift<T: Scalar>(
    y: &Matrix<T>,
    lambda1: T,
    lambda2: Lambda2<T>,
) -> Result<NonNegMatrix<T>> {
    AffineShift::resolve(y, lambda1, lambda2)?.apply(y)
}

/// Entrywise `(x - lambda2) / lambda1`.
pub fn invert_affine<T: Scalar>(x: &Matrix<T>, lambda1: T, lambda2: T) -> Result<Matrix<T>> {
    AffineShift { lambda1, lambda2 }.invert(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn shift_direct_arithmetic() {
        let y = Matrix::from_rows(&[[-1.0, 1.0]]).unwrap();
        let s = affine_shift(&y, 1.0, Lambda2::Value(1.0)).unwrap();
        assert_eq!(s.as_slice(), &[0.0, 2.0]);
        let back = invert_affine(&s, 1.0, 1.0).unwrap();
        assert_eq!(back.as_slice(), &[-1.0, 1.0]);
    }

    #[test]
    fn auto_shift_hits_eps_pos() {
        let y = Matrix::from_rows(&[[-0.3, 0.2, 0.7], [0.1, -0.1, 0.0]]).unwrap();
        let s = affine_shift(&y, 1.0, Lambda2::Auto).unwrap();
        assert!((s.min().unwrap() - EPS_POS).abs() < 1e-15);
    }

    #[test]
    fn shift_rejects_negative_result() {
        let y = Matrix::from_rows(&[[-1.0, 1.0]]).unwrap();
        assert!(matches!(
            affine_shift(&y, 1.0, Lambda2::Value(0.5)),
            Err(Error::NegativeEntry { .. })
        ));
        assert!(affine_shift(&y, 0.0, Lambda2::Auto).is_err());
        assert!(invert_affine(&y, 0.0, 1.0).is_err());
    }

    #[test]
    fn invert_identity_when_lambda2_zero() {
        let x = Matrix::from_rows(&[[0.5, 3.0]]).unwrap();
        assert_eq!(invert_affine(&x, 1.0, 0.0).unwrap(), x);
    }

    #[test]
    fn shift_round_trip_seed3() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = Matrix::from_fn(4, 50, |_, _| rng.gen_range(-2.0..2.0));
        let s = affine_shift(&y, 2.0, Lambda2::Value(5.0)).unwrap();
        let back = invert_affine(&s, 2.0, 5.0).unwrap();
        assert!(back.relative_distance(&y).unwrap() < 1e-12);
    }

    #[test]
    fn lambda2_parses() {
        assert_eq!("auto".parse::<Lambda2<f64>>().unwrap(), Lambda2::Auto);
        assert_eq!("0.25".parse::<Lambda2<f64>>().unwrap(), Lambda2::Value(0.25));
        assert!("x".parse::<Lambda2<f64>>().is_err());
    }

    #[test]
    fn identity_mixing_is_bit_exact() {
        let s = Matrix::from_rows(&[[0.1, -0.2, 0.3], [1.5, 0.0, -7.25]]).unwrap();
        let set = synth_mixtures(&s, &Matrix::identity(2), None, 0, 8000).unwrap();
        assert_eq!(set.mixtures, s);
    }

    #[test]
    fn weighted_impulses() {
        let s = Matrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let a = Matrix::from_rows(&[[1.0, 0.5], [0.5, 1.0]]).unwrap();
        let set = synth_mixtures(&s, &a, None, 0, 100).unwrap();
        assert_eq!(set.mixtures.row(0), &[1.0, 0.0, 0.5]);
        assert_eq!(set.mixtures.row(1), &[0.5, 0.0, 1.0]);
    }

    #[test]
    fn synth_validates_inputs() {
        let s = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let bad = Matrix::from_rows(&[[-0.1]]).unwrap();
        assert!(synth_mixtures(&s, &bad, None, 0, 100).is_err());
        let wide = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        assert!(matches!(
            synth_mixtures(&s, &wide, None, 0, 100),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn noise_hits_requested_snr() {
        let t = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let s = Matrix::from_fn(1, t, |_, _| rng.gen_range(-1.0..1.0));
        let set = synth_mixtures(&s, &Matrix::identity(1), Some(20.0), 1, 1000).unwrap();
        // Oracle: sample variance of the residual against the clean signal.
        let sig: f64 = s.as_slice().iter().map(|v| v * v).sum::<f64>();
        let noise: f64 = set
            .mixtures
            .as_slice()
            .iter()
            .zip(s.as_slice())
            .map(|(m, c)| (m - c).powi(2))
            .sum();
        let snr = 10.0 * (sig / noise).log10();
        assert!((snr - 20.0).abs() <= 0.5, "snr {snr}");
    }
}
