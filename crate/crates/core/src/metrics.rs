//! Projection-based separation metrics (SDR, SIR, SAR) and reconstruction SNR.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sentinel magnitude for ratios with a zero numerator or denominator.
pub const DB_CLAMP: f64 = 300.0;

/// Orthogonal split of an estimate against a set of references.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T> {
    pub s_target: Vec<T>,
    pub e_interf: Vec<T>,
    pub e_artif: Vec<T>,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn energy<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

/// Solves `g c = b` by Gaussian elimination with partial pivoting, failing
/// when a pivot collapses relative to the largest diagonal entry.
fn solve_gram<T: Scalar>(mut g: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    let scale = (0..n).fold(T::zero(), |m, i| m.max(g[i][i]));
    let tol = scale * T::lit(1e-10);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &c| g[a][col].abs().partial_cmp(&g[c][col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .expect("nonempty range");
        if !(g[pivot][col].abs() > tol) {
            return Err(Error::Degenerate("references are collinear".into()));
        }
        g.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = g[row][col] / g[col][col];
            for k in col..n {
                let v = g[col][k];
                g[row][k] = g[row][k] - f * v;
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut c = vec![T::zero(); n];
    for i in (0..n).rev() {
        let tail = (i + 1..n).fold(T::zero(), |acc, k| acc + g[i][k] * c[k]);
        c[i] = (b[i] - tail) / g[i][i];
    }
    Ok(c)
}

/// Splits `estimate` into the projection on `references[target]`, the rest
/// of its projection on the span of all references, and the residual.
pub fn bss_decompose<T: Scalar, R: AsRef<[T]>>(
    estimate: &[T],
    references: &[R],
    target: usize,
) -> Result<Decomposition<T>> {
    let n = estimate.len();
    if references.is_empty() {
        return Err(Error::invalid("at least one reference is required"));
    }
    if target >= references.len() {
        return Err(Error::invalid(format!(
            "target {target} out of range for {} references",
            references.len()
        )));
    }
    for (j, r) in references.iter().enumerate() {
        let r = r.as_ref();
        if r.len() != n {
            return Err(Error::shape(format!(
                "reference {j} has {} samples, estimate has {n}",
                r.len()
            )));
        }
        if !(energy(r) > T::zero()) {
            return Err(Error::Degenerate(format!("reference {j} has zero energy")));
        }
    }
    let refs: Vec<&[T]> = references.iter().map(AsRef::as_ref).collect();
    let s = refs[target];
    let gain = dot(estimate, s) / energy(s);
    let s_target: Vec<T> = s.iter().map(|&v| gain * v).collect();

    let gram: Vec<Vec<T>> = refs
        .iter()
        .map(|a| refs.iter().map(|b| dot(a, b)).collect())
        .collect();
    let rhs: Vec<T> = refs.iter().map(|r| dot(r, estimate)).collect();
    let coef = solve_gram(gram, rhs)?;
    let mut span = vec![T::zero(); n];
    for (c, r) in coef.iter().zip(&refs) {
        for (p, &v) in span.iter_mut().zip(*r) {
            *p = *p + *c * v;
        }
    }
    let e_interf = span.iter().zip(&s_target).map(|(&p, &t)| p - t).collect();
    let e_artif = estimate.iter().zip(&span).map(|(&e, &p)| e - p).collect();
    Ok(Decomposition {
        s_target,
        e_interf,
        e_artif,
    })
}

/// `10 log₁₀(num / den)` with ±[`DB_CLAMP`] sentinels. A denominator below
/// the rounding level of the numerator counts as zero.
fn ratio_db<T: Scalar>(num: T, den: T, len: usize) -> f64 {
    let (num, den) = (num.as_f64(), den.as_f64());
    let eps = T::epsilon().as_f64();
    if !(num > 0.0) {
        return -DB_CLAMP;
    }
    if den <= num * eps * eps * (len.max(1) as f64) {
        return DB_CLAMP;
    }
    (10.0 * (num / den).log10()).clamp(-DB_CLAMP, DB_CLAMP)
}

impl<T: Scalar> Decomposition<T> {
    fn len(&self) -> usize {
        self.s_target.len()
    }

    pub fn sdr(&self) -> f64 {
        let distortion: Vec<T> = self
            .e_interf
            .iter()
            .zip(&self.e_artif)
            .map(|(&a, &b)| a + b)
            .collect();
        ratio_db(energy(&self.s_target), energy(&distortion), self.len())
    }

    pub fn sir(&self) -> f64 {
        ratio_db(energy(&self.s_target), energy(&self.e_interf), self.len())
    }

    pub fn sar(&self) -> f64 {
        let signal: Vec<T> = self
            .s_target
            .iter()
            .zip(&self.e_interf)
            .map(|(&a, &b)| a + b)
            .collect();
        ratio_db(energy(&signal), energy(&self.e_artif), self.len())
    }
}

/// Reconstruction SNR `10 log₁₀(‖s‖² / ‖s − ŝ‖²)`. With `scale_invariant`
/// the estimate is first rescaled by `⟨s, ŝ⟩ / ‖ŝ‖²`.
pub fn snr<T: Scalar>(reference: &[T], estimate: &[T], scale_invariant: bool) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::shape(format!(
            "reference has {} samples, estimate has {}",
            reference.len(),
            estimate.len()
        )));
    }
    let ref_energy = energy(reference);
    if !(ref_energy > T::zero()) {
        return Err(Error::Degenerate("reference has zero energy".into()));
    }
    let gain = if scale_invariant {
        let e = energy(estimate);
        if e > T::zero() { dot(reference, estimate) / e } else { T::zero() }
    } else {
        T::one()
    };
    let err = reference
        .iter()
        .zip(estimate)
        .fold(T::zero(), |acc, (&s, &e)| {
            let d = s - gain * e;
            acc + d * d
        });
    Ok(ratio_db(ref_energy, err, reference.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceMetrics {
    pub sdr_db: f64,
    pub sir_db: f64,
    pub sar_db: f64,
    pub snr_db: f64,
}

/// All four metrics of `estimate` against `references[target]`.
pub fn evaluate_source<T: Scalar, R: AsRef<[T]>>(
    estimate: &[T],
    references: &[R],
    target: usize,
    scale_invariant: bool,
) -> Result<SourceMetrics> {
    let d = bss_decompose(estimate, references, target)?;
    Ok(SourceMetrics {
        sdr_db: d.sdr(),
        sir_db: d.sir(),
        sar_db: d.sar(),
        snr_db: snr(references[target].as_ref(), estimate, scale_invariant)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    #[test]
    fn perfect_estimate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let refs = [noise(256, &mut rng), noise(256, &mut rng)];
        let d = bss_decompose(&refs[0], &refs, 0).unwrap();
        assert!(d.e_interf.iter().chain(&d.e_artif).all(|v| v.abs() < 1e-12));
        assert_eq!((d.sdr(), d.sir(), d.sar()), (DB_CLAMP, DB_CLAMP, DB_CLAMP));
        assert_eq!(snr(&refs[0], &refs[0], true).unwrap(), DB_CLAMP);
    }

    #[test]
    fn other_orthogonal_reference_is_pure_interference() {
        let a = vec![1.0, 0.0, 0.0, 0.0];
        let b = vec![0.0, 1.0, 0.0, 0.0];
        let d = bss_decompose(&b, &[a, b.clone()], 0).unwrap();
        assert!(d.s_target.iter().all(|&v| v == 0.0));
        assert_eq!(d.sdr(), -DB_CLAMP);
    }

    #[test]
    fn decomposition_identity_seed6() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let refs = [noise(500, &mut rng), noise(500, &mut rng)];
        let est = noise(500, &mut rng);
        let d = bss_decompose(&est, &refs, 1).unwrap();
        let norm = est.iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = (0..500)
            .map(|t| (d.s_target[t] + d.e_interf[t] + d.e_artif[t] - est[t]).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-10 * norm);
    }

    #[test]
    fn equal_energy_orthogonal_noise() {
        let s0 = vec![1.0, 1.0, 0.0, 0.0];
        let s1 = vec![1.0, -1.0, 0.0, 0.0];
        // Noise in the orthogonal complement with the energy of s0.
        let est: Vec<f64> = s0.iter().zip([0.0, 0.0, 1.0, 1.0]).map(|(a, b)| a + b).collect();
        let d = bss_decompose(&est, &[s0, s1], 0).unwrap();
        assert!(d.sdr().abs() <= 0.1);
        assert_eq!(d.sir(), DB_CLAMP);
        assert!(d.sar().abs() <= 0.1);
    }

    #[test]
    fn degenerate_references() {
        let a = vec![1.0, 2.0, 3.0];
        assert!(bss_decompose(&a, &[vec![0.0; 3]], 0).is_err());
        assert!(bss_decompose(&a, &[a.clone(), a.iter().map(|v| 2.0 * v).collect()], 0).is_err());
        assert!(bss_decompose(&a, &[vec![1.0; 2]], 0).is_err());
    }

    #[test]
    fn snr_constructed_ten_db() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = noise(4000, &mut rng);
        let mut n = noise(4000, &mut rng);
        let es: f64 = s.iter().map(|v| v * v).sum();
        let en: f64 = n.iter().map(|v| v * v).sum();
        let g = (es / en / 10.0).sqrt();
        n.iter_mut().for_each(|v| *v *= g);
        let est: Vec<f64> = s.iter().zip(&n).map(|(a, b)| a + b).collect();
        assert!((snr(&s, &est, false).unwrap() - 10.0).abs() <= 0.1);
    }

    #[test]
    fn snr_scaling_algebra() {
        let s = vec![0.5, -1.0, 2.0];
        let twice: Vec<f64> = s.iter().map(|v| 2.0 * v).collect();
        assert_eq!(snr(&s, &twice, true).unwrap(), DB_CLAMP);
        assert!(snr(&s, &twice, false).unwrap().abs() < 1e-12);
        assert!(snr(&[0.0, 0.0], &[1.0, 1.0], true).is_err());
        assert!(snr(&s, &[1.0], true).is_err());
    }
}
