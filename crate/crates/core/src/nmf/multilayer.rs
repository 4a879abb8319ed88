//! Multilayer α-NMF: `Y ≈ A₁ A₂ … A_L X` on affine-shifted mixtures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, NonNegMatrix};
use crate::scalar::Scalar;
use crate::signal::{AffineShift, Lambda2};

use super::alpha::{model_of, update_middle};
use super::control::{FitTrace, IterControl};
use super::divergence::alpha_divergence;
use super::{floor, random_factors};

/// Hyperparameters of one separation pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct PassParams<T> {
    pub lambda1: T,
    pub lambda2: Lambda2<T>,
    pub alpha: T,
    pub layers: usize,
}

impl<T: Scalar> Default for PassParams<T> {
    fn default() -> Self {
        PassParams {
            lambda1: T::one(),
            lambda2: Lambda2::Auto,
            alpha: T::lit(0.5),
            layers: 1,
        }
    }
}

/// Ordered layers `A₁ … A_L` (first `M×N`, the rest `N×N`) plus sources `X` (`N×T`).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack<T> {
    layers: Vec<NonNegMatrix<T>>,
    x: NonNegMatrix<T>,
}

impl<T: Scalar> LayerStack<T> {
    pub fn new(layers: Vec<NonNegMatrix<T>>, x: NonNegMatrix<T>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("a layer stack needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].cols() != pair[1].rows() {
                return Err(Error::shape(format!(
                    "layer {}x{} cannot precede {}x{}",
                    pair[0].rows(),
                    pair[0].cols(),
                    pair[1].rows(),
                    pair[1].cols()
                )));
            }
        }
        let last = layers.last().expect("nonempty");
        if last.cols() != x.rows() {
            return Err(Error::shape(format!(
                "last layer has {} columns, X has {} rows",
                last.cols(),
                x.rows()
            )));
        }
        Ok(LayerStack { layers, x })
    }

    /// Uniform(0.1, 1.0) initialization: `A₁` is `m×n`, further layers `n×n`.
    pub fn random(m: usize, n: usize, t: usize, layers: usize, seed: u64) -> Result<Self> {
        if layers == 0 || n == 0 || m == 0 || t == 0 {
            return Err(Error::invalid("stack dimensions must be positive"));
        }
        let mut shapes = vec![(m, n)];
        shapes.extend(std::iter::repeat_n((n, n), layers - 1));
        shapes.push((n, t));
        let mut factors = random_factors::<T>(&shapes, seed);
        let x = factors.pop().expect("x present");
        LayerStack::new(factors, x)
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[NonNegMatrix<T>] {
        &self.layers
    }

    pub fn layer(&self, l: usize) -> &NonNegMatrix<T> {
        &self.layers[l]
    }

    pub fn x(&self) -> &NonNegMatrix<T> {
        &self.x
    }

    pub fn into_parts(self) -> (Vec<NonNegMatrix<T>>, NonNegMatrix<T>) {
        (self.layers, self.x)
    }

    /// `A₁ A₂ … A_L`.
    pub fn composite(&self) -> Matrix<T> {
        product(&self.layers).expect("shapes validated at construction")
    }

    /// Full model `A₁ … A_L X`, floored.
    pub fn model(&self) -> Matrix<T> {
        model_of(&self.composite(), &self.x).expect("shapes validated at construction")
    }

    fn check_data(&self, y: &Matrix<T>) -> Result<()> {
        let m = self.layers[0].rows();
        let t = self.x.cols();
        if y.shape() != (m, t) {
            return Err(Error::shape(format!(
                "data is {}x{}, stack models {m}x{t}",
                y.rows(),
                y.cols()
            )));
        }
        Ok(())
    }
}

fn product<T: Scalar>(factors: &[NonNegMatrix<T>]) -> Result<Matrix<T>> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::invalid("empty product"))?;
    let mut acc = first.as_matrix().clone();
    for f in rest {
        acc = acc.matmul(f)?;
    }
    Ok(acc)
}

/// α update of layer `l` (0-based), with every ratio taken against the full
/// model `A₁ … A_L X`. Layers left of `l` act as a fixed mixing prefix and
/// layers right of `l` (times `X`) as fixed sources.
pub fn update_layer<T: Scalar>(
    y: &NonNegMatrix<T>,
    stack: &mut LayerStack<T>,
    l: usize,
    alpha: T,
) -> Result<()> {
    let n_layers = stack.num_layers();
    if l >= n_layers {
        return Err(Error::invalid(format!(
            "layer index {l} out of range for {n_layers} layers"
        )));
    }
    stack.check_data(y)?;
    let model = stack.model();
    let left = (l > 0).then(|| product(&stack.layers[..l])).transpose()?;
    let right = if l + 1 < n_layers {
        product(&stack.layers[l + 1..])?.matmul(&stack.x)?
    } else {
        stack.x.as_matrix().clone()
    };
    update_middle(
        y,
        left.as_ref(),
        &mut stack.layers[l],
        Some(&right),
        &model,
        alpha,
    )
}

/// α update of `X` using the composite mixing matrix `A₁ … A_L`.
pub fn update_x_multilayer<T: Scalar>(
    y: &NonNegMatrix<T>,
    stack: &mut LayerStack<T>,
    alpha: T,
) -> Result<()> {
    stack.check_data(y)?;
    let composite = stack.composite();
    let model = model_of(&composite, &stack.x)?;
    update_middle(y, Some(&composite), &mut stack.x, None, &model, alpha)
}

/// Scales every column of `a` to unit sum and multiplies the matching row
/// of `next` by the removed scale, leaving `a · next` unchanged. Columns
/// lying entirely at the floor are skipped and returned.
pub(crate) fn normalize_pair<T: Scalar>(a: &mut Matrix<T>, next: &mut Matrix<T>) -> Vec<usize> {
    debug_assert_eq!(a.cols(), next.rows());
    let eps = floor::<T>();
    let sums = a.col_sums();
    let mut flagged = Vec::new();
    for (j, &s) in sums.iter().enumerate() {
        let all_floor = (0..a.rows()).all(|i| a[(i, j)] <= eps);
        if all_floor || !(s > T::zero()) {
            flagged.push(j);
            continue;
        }
        for i in 0..a.rows() {
            a[(i, j)] = (a[(i, j)] / s).max(eps);
        }
        for v in next.row_mut(j) {
            *v = (*v * s).max(eps);
        }
    }
    flagged
}

/// Column-normalizes each layer in order, pushing scales rightwards and
/// finally into `X`. Returns `(layer, column)` pairs that were left alone
/// because the column was entirely at the floor.
pub fn normalize_stack<T: Scalar>(stack: &mut LayerStack<T>) -> Vec<(usize, usize)> {
    let n_layers = stack.num_layers();
    let mut flagged = Vec::new();
    for l in 0..n_layers {
        let (head, tail) = stack.layers.split_at_mut(l + 1);
        let a = head[l].inner_mut();
        let cols = if let Some(next) = tail.first_mut() {
            normalize_pair(a, next.inner_mut())
        } else {
            normalize_pair(a, stack.x.inner_mut())
        };
        flagged.extend(cols.into_iter().map(|c| (l, c)));
    }
    flagged
}

/// Result of one multilayer pass over shifted data.
#[derive(Debug, Clone)]
pub struct PlnmfPass<T> {
    pub stack: LayerStack<T>,
    pub trace: FitTrace<T>,
    pub shift: AffineShift<T>,
    /// The shifted, floored data the stack was fitted to.
    pub data: NonNegMatrix<T>,
}

impl<T: Scalar> PlnmfPass<T> {
    /// Begins a pass: resolves and applies the shift and draws the initial stack.
    pub fn init(
        y: &Matrix<T>,
        params: &PassParams<T>,
        rank: usize,
        seed: u64,
    ) -> Result<Self> {
        if params.layers == 0 {
            return Err(Error::invalid("number of layers must be at least 1"));
        }
        let (m, t) = y.shape();
        if rank == 0 || rank > m.min(t) {
            return Err(Error::invalid(format!(
                "rank {rank} outside 1..={}",
                m.min(t)
            )));
        }
        let shift = AffineShift::resolve(y, params.lambda1, params.lambda2)?;
        let data = shift.apply(y)?.floored(floor());
        let stack = LayerStack::random(m, rank, t, params.layers, seed)?;
        let initial = cost_of(&data, &stack, params.alpha)?;
        Ok(PlnmfPass {
            stack,
            trace: FitTrace::start(initial),
            shift,
            data,
        })
    }

    /// Runs up to `sweeps` outer iterations. Returns `true` once converged.
    pub fn advance(
        &mut self,
        params: &PassParams<T>,
        ctrl: &IterControl,
        sweeps: usize,
    ) -> Result<bool> {
        for _ in 0..sweeps {
            if self.trace.iterations() >= ctrl.max_iter {
                return Ok(false);
            }
            for l in 0..self.stack.num_layers() {
                update_layer(&self.data, &mut self.stack, l, params.alpha)?;
                update_x_multilayer(&self.data, &mut self.stack, params.alpha)?;
                normalize_stack(&mut self.stack);
            }
            let cost = cost_of(&self.data, &self.stack, params.alpha)?;
            if !cost.is_finite() {
                return Err(Error::NonFinite("alpha divergence".into()));
            }
            if self.trace.push(cost, ctrl) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn is_done(&self, ctrl: &IterControl) -> bool {
        self.trace.stop == super::StopReason::Converged || self.trace.iterations() >= ctrl.max_iter
    }

    pub fn current_cost(&self) -> T {
        self.trace.last_cost()
    }
}

pub(crate) fn cost_of<T: Scalar>(
    data: &NonNegMatrix<T>,
    stack: &LayerStack<T>,
    alpha: T,
) -> Result<T> {
    alpha_divergence(data, &NonNegMatrix::new_unchecked(stack.model()), alpha)
}

/// Full multilayer pass: shift, initialize, sweep until the relative cost
/// change drops below `ctrl.rel_tol` or `ctrl.max_iter` sweeps ran.
pub fn run_plnmf_pass<T: Scalar>(
    y: &Matrix<T>,
    params: &PassParams<T>,
    rank: usize,
    ctrl: &IterControl,
    seed: u64,
) -> Result<PlnmfPass<T>> {
    let mut pass = PlnmfPass::init(y, params, rank, seed)?;
    pass.advance(params, ctrl, ctrl.max_iter)?;
    Ok(pass)
}
