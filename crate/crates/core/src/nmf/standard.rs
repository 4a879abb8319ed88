//! Euclidean-distance NMF with Lee–Seung multiplicative updates.

use crate::error::{Error, Result};
use crate::matrix::{Matrix, NonNegMatrix};
use crate::scalar::Scalar;

use super::control::{FitTrace, IterControl};
use super::{floor, random_factors};

#[derive(Debug, Clone)]
pub struct StandardNmf<T> {
    pub a: NonNegMatrix<T>,
    pub x: NonNegMatrix<T>,
    pub trace: FitTrace<T>,
}

/// `‖Y − AX‖²_F`.
pub fn frobenius_cost<T: Scalar>(y: &Matrix<T>, a: &Matrix<T>, x: &Matrix<T>) -> Result<T> {
    let model = a.matmul(x)?;
    y.check_same_shape(&model)?;
    Ok(y
        .as_slice()
        .iter()
        .zip(model.as_slice())
        .fold(T::zero(), |acc, (&u, &v)| acc + (u - v) * (u - v)))
}

fn gram<T: Scalar>(rows_of: &Matrix<T>) -> Matrix<T> {
    // rows_of · rows_ofᵀ
    let n = rows_of.rows();
    Matrix::from_fn(n, n, |i, j| {
        rows_of
            .row(i)
            .iter()
            .zip(rows_of.row(j))
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    })
}

pub fn standard_nmf<T: Scalar>(
    y: &NonNegMatrix<T>,
    rank: usize,
    ctrl: &IterControl,
    seed: u64,
) -> Result<StandardNmf<T>> {
    let (m, t) = y.shape();
    if rank == 0 || rank > m.min(t) {
        return Err(Error::invalid(format!(
            "rank {rank} outside 1..={}",
            m.min(t)
        )));
    }
    let eps = floor::<T>();
    let mut init = random_factors::<T>(&[(m, rank), (rank, t)], seed).into_iter();
    let mut a = init.next().expect("two factors");
    let mut x = init.next().expect("two factors");

    let mut trace = FitTrace::start(frobenius_cost(y, &a, &x)?);
    for _ in 0..ctrl.max_iter {
        // A ← A ⊙ (Y Xᵀ) ⊘ (A X Xᵀ)
        let yxt = Matrix::from_fn(m, rank, |i, k| {
            y.row(i)
                .iter()
                .zip(x.row(k))
                .fold(T::zero(), |acc, (&u, &v)| acc + u * v)
        });
        let axxt = a.matmul(&NonNegMatrix::new_unchecked(gram(&x)))?;
        {
            let am = a.inner_mut();
            for i in 0..m {
                for k in 0..rank {
                    let v = am[(i, k)] * yxt[(i, k)] / axxt[(i, k)].max(eps);
                    am[(i, k)] = v.max(eps);
                }
            }
        }

        // X ← X ⊙ (Aᵀ Y) ⊘ (Aᵀ A X)
        let at = a.transpose();
        let aty = at.matmul(y)?;
        let atax = at.matmul(a.as_matrix())?.matmul(&x)?;
        {
            let xm = x.inner_mut();
            for k in 0..rank {
                for j in 0..t {
                    let v = xm[(k, j)] * aty[(k, j)] / atax[(k, j)].max(eps);
                    xm[(k, j)] = v.max(eps);
                }
            }
        }

        if trace.push(frobenius_cost(y, &a, &x)?, ctrl) {
            break;
        }
    }
    Ok(StandardNmf { a, x, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rank_one_recovery() {
        let u = [1.0, 2.0, 0.5, 3.0];
        let v: Vec<f64> = (0..20).map(|i| 0.2 + (i as f64 * 0.37).sin().abs()).collect();
        let y = NonNegMatrix::try_new(Matrix::from_fn(4, 20, |i, j| u[i] * v[j])).unwrap();
        let r = standard_nmf(&y, 1, &IterControl::new(2000, 0.0), 4).unwrap();
        let rel = frobenius_cost(&y, &r.a, &r.x).unwrap().sqrt() / y.frobenius_norm();
        assert!(rel <= 1e-3, "relative error {rel}");
    }

    #[test]
    fn zero_data_goes_to_floor() {
        let y = NonNegMatrix::<f64>::try_new(Matrix::zeros(3, 8)).unwrap();
        let r = standard_nmf(&y, 2, &IterControl::new(50, 0.0), 1).unwrap();
        assert!(r.trace.last_cost() < 1e-20);
        assert!(r.a.as_slice().iter().all(|&v| v >= EPS));
        assert!(r.x.as_slice().iter().all(|&v| v >= EPS));
    }

    const EPS: f64 = super::super::EPS_FLOOR;

    #[test]
    fn cost_trace_nonincreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let y = NonNegMatrix::try_new(Matrix::from_fn(4, 50, |_, _| rng.r#gen::<f64>())).unwrap();
        let r = standard_nmf(&y, 2, &IterControl::new(300, 0.0), 3).unwrap();
        assert!(r.trace.max_increase() <= 1e-9);
    }

    #[test]
    fn rank_out_of_range() {
        let y = NonNegMatrix::try_new(Matrix::filled(2, 3, 1.0)).unwrap();
        assert!(standard_nmf(&y, 0, &IterControl::default(), 0).is_err());
        assert!(standard_nmf(&y, 3, &IterControl::default(), 0).is_err());
    }
}
