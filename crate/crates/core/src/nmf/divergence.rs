use crate::error::{Error, Result};
use crate::matrix::NonNegMatrix;
use crate::scalar::Scalar;

use super::ALPHA_LIMIT_TOL;

/// Which closed form of the α-divergence applies for a given α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum AlphaRegime<T> {
    /// α ≈ 0: `Σ q ln(q/y) − q + y`.
    KlReverse,
    /// α ≈ 1: `Σ y ln(y/q) − y + q`.
    KlForward,
    General(T),
}

pub(crate) fn regime<T: Scalar>(alpha: T) -> AlphaRegime<T> {
    let tol = T::lit(ALPHA_LIMIT_TOL);
    if alpha.abs() < tol {
        AlphaRegime::KlReverse
    } else if (alpha - T::one()).abs() < tol {
        AlphaRegime::KlForward
    } else {
        AlphaRegime::General(alpha)
    }
}

/// The α actually used by the update rules: exact except within
/// [`ALPHA_LIMIT_TOL`] of zero, where the geometric-mean limit applies and
/// `None` is returned.
pub fn effective_alpha<T: Scalar>(alpha: T) -> Option<T> {
    match regime(alpha) {
        AlphaRegime::KlReverse => None,
        AlphaRegime::KlForward => Some(T::one()),
        AlphaRegime::General(a) => Some(a),
    }
}

/// α-divergence `D(Y ‖ Q)` between data `y` and model `q`.
///
/// Both matrices must be strictly positive. Near α = 0 and α = 1 the
/// analytic Kullback–Leibler limits are used.
pub fn alpha_divergence<T: Scalar>(
    y: &NonNegMatrix<T>,
    q: &NonNegMatrix<T>,
    alpha: T,
) -> Result<T> {
    y.check_same_shape(q)?;
    if !alpha.is_finite() {
        return Err(Error::invalid("alpha must be finite"));
    }
    for (name, m) in [("data", y), ("model", q)] {
        if let Some(pos) = m.as_slice().iter().position(|&v| v <= T::zero()) {
            return Err(Error::Degenerate(format!(
                "{name} entry {pos} is not strictly positive"
            )));
        }
    }

    let pairs = y.as_slice().iter().zip(q.as_slice());
    let total = match regime(alpha) {
        AlphaRegime::KlForward => pairs.fold(T::zero(), |acc, (&y, &q)| acc + y * (y / q).ln() - y + q),
        AlphaRegime::KlReverse => pairs.fold(T::zero(), |acc, (&y, &q)| acc + q * (q / y).ln() - q + y),
        AlphaRegime::General(a) => {
            let one = T::one();
            let sum = pairs.fold(T::zero(), |acc, (&y, &q)| {
                acc + y.powf(a) * q.powf(one - a) - a * y + (a - one) * q
            });
            sum / (a * (a - one))
        }
    };
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn nn(rows: &[&[f64]]) -> NonNegMatrix<f64> {
        NonNegMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn zero_on_identity() {
        let y = nn(&[&[0.3, 1.2], &[2.0, 0.01]]);
        for a in [-1.0, 0.0, 0.5, 1.0, 2.0, 10.0] {
            assert!(alpha_divergence(&y, &y, a).unwrap().abs() < 1e-12, "alpha {a}");
        }
    }

    #[test]
    fn scalar_hand_value() {
        let d = alpha_divergence(&nn(&[&[2.0]]), &nn(&[&[1.0]]), 2.0).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn limits_are_continuous() {
        let y = nn(&[&[0.5, 2.0, 1.5]]);
        let q = nn(&[&[1.0, 1.0, 0.7]]);
        for (exact, near) in [(0.0, 1e-4), (1.0, 1.0 - 1e-4)] {
            let a = alpha_divergence(&y, &q, exact).unwrap();
            let b = alpha_divergence(&y, &q, near).unwrap();
            assert!((a - b).abs() < 1e-3, "limit at {exact}: {a} vs {b}");
        }
    }

    #[test]
    fn rejects_zero_and_shape() {
        let y = nn(&[&[0.0, 1.0]]);
        let q = nn(&[&[1.0, 1.0]]);
        assert!(alpha_divergence(&y, &q, 0.5).is_err());
        let q2 = NonNegMatrix::try_new(Matrix::filled(2, 1, 1.0)).unwrap();
        assert!(matches!(alpha_divergence(&q, &q2, 0.5), Err(Error::Shape(_))));
    }

    #[test]
    fn effective_alpha_rules() {
        assert_eq!(effective_alpha(0.0), None);
        assert_eq!(effective_alpha(1.0 + 1e-9), Some(1.0));
        assert_eq!(effective_alpha(0.5), Some(0.5));
    }
}
