use crate::error::{Error, Result};
use crate::matrix::{Matrix, NonNegMatrix};
use crate::scalar::Scalar;

use super::control::{FitTrace, IterControl};
use super::divergence::{alpha_divergence, effective_alpha};
use super::multilayer::normalize_pair;
use super::{floor, random_factors};

fn pow_fast<T: Scalar>(v: T, e: T) -> T {
    if e == T::one() {
        v
    } else if e == T::lit(2.0) {
        v * v
    } else if e == T::lit(0.5) {
        v.sqrt()
    } else {
        v.powf(e)
    }
}

/// `(y / q)^α` entrywise, or `ln(y / q)` when `alpha` is `None` (α → 0).
fn ratio_term<T: Scalar>(y: &Matrix<T>, model: &Matrix<T>, alpha: Option<T>) -> Matrix<T> {
    let eps = floor::<T>();
    let data = y
        .as_slice()
        .iter()
        .zip(model.as_slice())
        .map(|(&y, &q)| {
            let r = y.max(eps) / q.max(eps);
            match alpha {
                Some(a) => pow_fast(r, a),
                None => r.ln(),
            }
        })
        .collect();
    Matrix::new(y.rows(), y.cols(), data).expect("same shape as y")
}

/// Multiplicative α update of the middle factor `F` in the model `P · F · Q`.
///
/// `left = None` stands for an identity `P`, `right = None` for an identity
/// `Q`; `model` is the current full model, so every factor sees the same
/// ratio. With `P = I` this is the mixing-matrix rule, with `Q = I` the
/// source rule.
pub(crate) fn update_middle<T: Scalar>(
    y: &Matrix<T>,
    left: Option<&Matrix<T>>,
    factor: &mut NonNegMatrix<T>,
    right: Option<&Matrix<T>>,
    model: &Matrix<T>,
    alpha: T,
) -> Result<()> {
    let (m, t) = y.shape();
    let (p, q) = factor.shape();
    y.check_same_shape(model)?;
    if let Some(l) = left {
        if l.shape() != (m, p) {
            return Err(Error::shape(format!(
                "left factor is {}x{}, expected {m}x{p}",
                l.rows(),
                l.cols()
            )));
        }
    } else if p != m {
        return Err(Error::shape(format!("factor has {p} rows, data has {m}")));
    }
    if let Some(r) = right {
        if r.shape() != (q, t) {
            return Err(Error::shape(format!(
                "right factor is {}x{}, expected {q}x{t}",
                r.rows(),
                r.cols()
            )));
        }
    } else if q != t {
        return Err(Error::shape(format!("factor has {q} columns, data has {t}")));
    }

    let exponent = effective_alpha(alpha);
    let ratio = ratio_term(y, model, exponent);

    // W = R Qᵀ  (m × q)
    let w = match right {
        Some(r) => Matrix::from_fn(m, q, |i, k| {
            ratio
                .row(i)
                .iter()
                .zip(r.row(k))
                .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
        }),
        None => ratio,
    };
    // N = Pᵀ W  (p × q)
    let num = match left {
        Some(l) => {
            let mut out = Matrix::zeros(p, q);
            for i in 0..m {
                let w_row = w.row(i);
                for (j, &lij) in l.row(i).iter().enumerate() {
                    let out_row = out.row_mut(j);
                    for (o, &wv) in out_row.iter_mut().zip(w_row) {
                        *o = *o + lij * wv;
                    }
                }
            }
            out
        }
        None => w,
    };

    let left_sums = left.map(Matrix::col_sums);
    let right_sums = right.map(Matrix::row_sums);
    let inv = exponent.map(|a| T::one() / a);
    let eps = floor::<T>();

    let f = factor.inner_mut();
    for i in 0..p {
        let ls = left_sums.as_ref().map_or(T::one(), |s| s[i]);
        for j in 0..q {
            let rs = right_sums.as_ref().map_or(T::one(), |s| s[j]);
            let den = ls * rs;
            if !(den > T::zero()) {
                return Err(Error::ZeroDenominator(format!(
                    "weight sum for factor entry ({i}, {j}) is zero"
                )));
            }
            let mean = num[(i, j)] / den;
            let gain = match inv {
                Some(e) => pow_fast(mean, e),
                None => mean.exp(),
            };
            let v = (f[(i, j)] * gain).max(eps);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("factor entry ({i}, {j})")));
            }
            f[(i, j)] = v;
        }
    }
    Ok(())
}

pub(crate) fn model_of<T: Scalar>(a: &Matrix<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
    let eps = floor::<T>();
    Ok(a.matmul(x)?.map(|v| v.max(eps)))
}

/// One α update of the sources `X` given mixing `A`.
pub fn update_x_alpha<T: Scalar>(
    y: &NonNegMatrix<T>,
    a: &NonNegMatrix<T>,
    x: &NonNegMatrix<T>,
    alpha: T,
) -> Result<NonNegMatrix<T>> {
    let model = model_of(a, x)?;
    let mut out = x.clone();
    update_middle(y, Some(a), &mut out, None, &model, alpha)?;
    Ok(out)
}

/// One α update of the mixing matrix `A` given sources `X`.
pub fn update_a_alpha<T: Scalar>(
    y: &NonNegMatrix<T>,
    a: &NonNegMatrix<T>,
    x: &NonNegMatrix<T>,
    alpha: T,
) -> Result<NonNegMatrix<T>> {
    let model = model_of(a, x)?;
    let mut out = a.clone();
    update_middle(y, None, &mut out, Some(x), &model, alpha)?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct AlphaNmf<T> {
    pub a: NonNegMatrix<T>,
    pub x: NonNegMatrix<T>,
    pub trace: FitTrace<T>,
}

/// Plain α-NMF: per iteration, update `A`, update `X`, then rescale the
/// columns of `A` to unit sum with the scale moved into `X`.
pub fn run_alpha_nmf<T: Scalar>(
    y: &NonNegMatrix<T>,
    rank: usize,
    alpha: T,
    ctrl: &IterControl,
    seed: u64,
) -> Result<AlphaNmf<T>> {
    let (m, t) = y.shape();
    if rank == 0 || rank > m.min(t) {
        return Err(Error::invalid(format!(
            "rank {rank} outside 1..={}",
            m.min(t)
        )));
    }
    let y = y.floored(floor());
    let mut init = random_factors::<T>(&[(m, rank), (rank, t)], seed).into_iter();
    let mut a = init.next().expect("two factors");
    let mut x = init.next().expect("two factors");

    let cost = |a: &NonNegMatrix<T>, x: &NonNegMatrix<T>| -> Result<T> {
        let q = NonNegMatrix::new_unchecked(model_of(a, x)?);
        alpha_divergence(&y, &q, alpha)
    };
    let mut trace = FitTrace::start(cost(&a, &x)?);
    for _ in 0..ctrl.max_iter {
        let model = model_of(&a, &x)?;
        update_middle(&y, None, &mut a, Some(&x), &model, alpha)?;
        let model = model_of(&a, &x)?;
        update_middle(&y, Some(&a), &mut x, None, &model, alpha)?;
        normalize_pair(a.inner_mut(), x.inner_mut());
        if trace.push(cost(&a, &x)?, ctrl) {
            break;
        }
    }
    Ok(AlphaNmf { a, x, trace })
}
