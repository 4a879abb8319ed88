//! Two-pass separation pipelines: the advisor-in-the-loop method and the
//! standard, α and multilayer baselines.

use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::advisor::{
    Advisor, AdvisorError, AdvisorMode, AdvisorRequest, HeuristicAdvisor, SourceFeatures,
    Transcript, TranscriptEntry,
};
use crate::error::{Error, Result};
use crate::matrix::{Matrix, NonNegMatrix};
use crate::nmf::{
    self, FitTrace, IterControl, LayerStack, PassParams, PlnmfPass, run_alpha_nmf, standard_nmf,
};
use crate::periodicity::{SourceLabels, assign_sources};
use crate::scalar::Scalar;
use crate::signal::{AffineShift, Signal};
use crate::spectral::{Band, extract_features, fundamental_frequency};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Standard,
    Alpha,
    Plnmf,
    Lingonmf,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Standard, Method::Alpha, Method::Plnmf, Method::Lingonmf];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Standard => "standard",
            Method::Alpha => "alpha",
            Method::Plnmf => "plnmf",
            Method::Lingonmf => "lingonmf",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "standard" => Ok(Method::Standard),
            "alpha" => Ok(Method::Alpha),
            "plnmf" => Ok(Method::Plnmf),
            "lingonmf" => Ok(Method::Lingonmf),
            other => Err(Error::invalid(format!(
                "method must be standard, alpha, plnmf or lingonmf, got {other:?}"
            ))),
        }
    }
}

/// Source order used throughout: heart first, lung second.
pub const SOURCE_NAMES: [&str; 2] = ["heart", "lung"];

pub const DEFAULT_LAMBDA_F: f64 = 0.01;
pub const DEFAULT_F_INIT: f64 = 50.0;
pub const DEFAULT_FEEDBACK_EVERY: usize = 25;
pub const DEFAULT_FEEDBACK_ROUNDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparationConfig {
    pub method: Method,
    pub heart_params: PassParams<f64>,
    pub lung_params: PassParams<f64>,
    pub lambda_f: f64,
    /// Initial fundamental-frequency targets, heart then lung.
    pub f_init: [f64; 2],
    pub bands: [Band; 2],
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Sweeps between advisor rounds.
    pub feedback_every: usize,
    /// Advisor rounds per pass.
    pub max_feedback_rounds: usize,
    pub seed: u64,
    pub advisor: AdvisorMode,
    /// Use the heuristic for a round when the configured backend fails.
    pub fallback_to_heuristic: bool,
    /// Number of components extracted per pass.
    pub rank: usize,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        SeparationConfig {
            method: Method::Lingonmf,
            heart_params: PassParams::default(),
            lung_params: PassParams::default(),
            lambda_f: DEFAULT_LAMBDA_F,
            f_init: [DEFAULT_F_INIT; 2],
            bands: [Band { lo: 20.0, hi: 200.0 }, Band { lo: 100.0, hi: 1200.0 }],
            max_iter: IterControl::default().max_iter,
            rel_tol: IterControl::default().rel_tol,
            feedback_every: DEFAULT_FEEDBACK_EVERY,
            max_feedback_rounds: DEFAULT_FEEDBACK_ROUNDS,
            seed: 0,
            advisor: AdvisorMode::Heuristic,
            fallback_to_heuristic: true,
            rank: 2,
        }
    }
}

impl SeparationConfig {
    pub fn ctrl(&self) -> IterControl {
        IterControl::new(self.max_iter, self.rel_tol)
    }

    pub fn pass_params(&self, pass: usize) -> &PassParams<f64> {
        if pass == 0 { &self.heart_params } else { &self.lung_params }
    }

    /// Both passes set to the same α and layer count.
    pub fn with_alpha_layers(mut self, alpha: f64, layers: usize) -> Self {
        for p in [&mut self.heart_params, &mut self.lung_params] {
            p.alpha = alpha;
            p.layers = layers;
        }
        self
    }

    /// Checks the configuration against the data and returns the bands
    /// with their upper edges limited to the Nyquist frequency.
    pub fn validate(&self, mixtures: usize, sample_rate: u32) -> Result<[Band; 2]> {
        for p in [&self.heart_params, &self.lung_params] {
            if p.layers == 0 {
                return Err(Error::invalid("number of layers must be at least 1"));
            }
            if !p.alpha.is_finite() {
                return Err(Error::invalid("alpha must be finite"));
            }
            if !(p.lambda1 > 0.0 && p.lambda1.is_finite()) {
                return Err(Error::invalid("lambda1 must be positive and finite"));
            }
        }
        if !(self.lambda_f >= 0.0 && self.lambda_f.is_finite()) {
            return Err(Error::invalid("lambda_f must be a finite value >= 0"));
        }
        if self.feedback_every == 0 {
            return Err(Error::invalid("feedback cadence must be at least 1 sweep"));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::invalid("relative tolerance must be >= 0"));
        }
        if mixtures < 2 {
            return Err(Error::invalid(format!("need at least 2 mixtures, got {mixtures}")));
        }
        if self.rank < 2 || self.rank > mixtures {
            return Err(Error::invalid(format!(
                "rank must lie in 2..={mixtures}, got {}",
                self.rank
            )));
        }
        let nyquist = f64::from(sample_rate) / 2.0;
        let bands = [
            self.bands[0].limited_to(nyquist)?,
            self.bands[1].limited_to(nyquist)?,
        ];
        for (f, b) in self.f_init.iter().zip(&bands) {
            if !(f.is_finite() && *f > 0.0 && *f < nyquist.max(b.hi) + 1e-9) {
                return Err(Error::invalid(format!("initial target {f} Hz is out of range")));
            }
        }
        Ok(bands)
    }
}

/// `D_f = base + λ_f ‖f̂ − f‖²`.
pub fn penalized_cost(base: f64, f_hat: &[f64], f_target: &[f64], lambda_f: f64) -> Result<f64> {
    if f_hat.len() != f_target.len() {
        return Err(Error::shape(format!(
            "{} estimated frequencies for {} targets",
            f_hat.len(),
            f_target.len()
        )));
    }
    let sq: f64 = f_hat.iter().zip(f_target).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(base + lambda_f * sq)
}

/// One advisor exchange and the acceptance decision taken on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRound {
    pub pass: usize,
    pub round: usize,
    pub sweep: usize,
    pub base_cost: f64,
    pub f_hat: [f64; 2],
    pub incumbent: [f64; 2],
    pub candidate: [f64; 2],
    pub incumbent_cost: f64,
    pub candidate_cost: f64,
    pub accepted: bool,
    pub backend: String,
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct PassOutcome<T> {
    pub name: &'static str,
    pub stack: LayerStack<T>,
    pub trace: FitTrace<T>,
    pub shift: AffineShift<T>,
    pub labels: SourceLabels,
    /// De-shifted, mean-removed rows of `X`.
    pub estimates: Matrix<T>,
    /// Row of `estimates` this pass contributes.
    pub selected_row: usize,
    /// Penalized cost at the end of the pass with the final targets.
    pub final_penalized_cost: f64,
}

#[derive(Debug, Clone)]
pub struct SeparationResult<T> {
    pub method: Method,
    pub heart: Signal<T>,
    pub lung: Signal<T>,
    pub passes: Vec<PassOutcome<T>>,
    pub feedback: Vec<FeedbackRound>,
    /// Post-decision penalized cost of every feedback round.
    pub penalized_cost_history: Vec<f64>,
    pub transcript: Transcript,
    pub final_f_f: [f64; 2],
}

impl<T: Scalar> SeparationResult<T> {
    /// `pass,iteration,cost` rows; iteration 0 is the initial cost.
    pub fn cost_trace_csv(&self) -> String {
        let mut out = String::from("pass,iteration,cost\n");
        for p in &self.passes {
            out.push_str(&format!("{},0,{}\n", p.name, p.trace.initial_cost));
            for (i, c) in p.trace.costs.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", p.name, i + 1, c));
            }
        }
        out
    }

    pub fn write_cost_trace(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.cost_trace_csv().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn signals(&self) -> [&Signal<T>; 2] {
        [&self.heart, &self.lung]
    }
}

fn to_t<T: Scalar>(p: &PassParams<f64>) -> PassParams<T> {
    PassParams {
        lambda1: T::lit(p.lambda1),
        lambda2: match p.lambda2 {
            crate::signal::Lambda2::Auto => crate::signal::Lambda2::Auto,
            crate::signal::Lambda2::Value(v) => crate::signal::Lambda2::Value(T::lit(v)),
        },
        alpha: T::lit(p.alpha),
        layers: p.layers,
    }
}

/// Undoes the shift on every row of `x` and removes each row's mean.
pub fn recover_rows<T: Scalar>(x: &Matrix<T>, shift: &AffineShift<T>) -> Result<Matrix<T>> {
    let mut out = shift.invert(x)?;
    let n = T::from_usize_lossy(out.cols());
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let mean = row.iter().copied().sum::<T>() / n;
        row.iter_mut().for_each(|v| *v = *v - mean);
    }
    Ok(out)
}

fn row_signal<T: Scalar>(m: &Matrix<T>, i: usize, fs: u32) -> Result<Signal<T>> {
    Signal::new(m.row(i).to_vec(), fs)
}

struct PassSetup<'a> {
    index: usize,
    seed: u64,
    bands: &'a [Band; 2],
    sample_rate: u32,
}

struct Feedback<'a> {
    advisor: Option<&'a mut dyn Advisor>,
    fallback: bool,
    rounds: usize,
    lambda_f: f64,
    targets: [f64; 2],
    log: Vec<FeedbackRound>,
    history: Vec<f64>,
    transcript: Transcript,
}

impl Feedback<'_> {
    /// Measures in-band fundamentals of the labeled rows.
    fn f_hat<T: Scalar>(est: &Matrix<T>, labels: &SourceLabels, setup: &PassSetup) -> Result<[f64; 2]> {
        let rows = [labels.heart, labels.lung];
        let mut out = [0.0; 2];
        for k in 0..2 {
            let s = row_signal(est, rows[k], setup.sample_rate)?;
            out[k] = fundamental_frequency(&s, setup.bands[k])?.as_f64();
        }
        Ok(out)
    }

    fn round<T: Scalar>(
        &mut self,
        pass: &PlnmfPass<T>,
        setup: &PassSetup,
        round: usize,
    ) -> Result<()> {
        let est = recover_rows(pass.stack.x(), &pass.shift)?;
        let labels = assign_sources(&est, setup.sample_rate)?;
        let rows = [labels.heart, labels.lung];
        let mut sources = Vec::with_capacity(2);
        for k in 0..2 {
            let s = row_signal(&est, rows[k], setup.sample_rate)?;
            let f = extract_features(&s, setup.bands[k])?;
            sources.push(SourceFeatures {
                name: SOURCE_NAMES[k].into(),
                features: crate::spectral::FeatureVector {
                    spectral_centroid: f.spectral_centroid.as_f64(),
                    rms_energy: f.rms_energy.as_f64(),
                    zero_crossing_rate: f.zero_crossing_rate.as_f64(),
                    variance: f.variance.as_f64(),
                    mean_frequency: f.mean_frequency.as_f64(),
                    max_amplitude: f.max_amplitude.as_f64(),
                    fundamental_frequency: f.fundamental_frequency.as_f64(),
                },
                target_hz: self.targets[k],
            });
        }
        let f_hat = [
            sources[0].features.fundamental_frequency,
            sources[1].features.fundamental_frequency,
        ];
        let request = AdvisorRequest {
            sources,
            bands: setup.bands.to_vec(),
            nyquist: f64::from(setup.sample_rate) / 2.0,
        };

        let mut fallback = false;
        let advisor = self.advisor.as_deref_mut().expect("feedback requires an advisor");
        let mut backend = advisor.id().to_string();
        let reply = match advisor.advise(&request) {
            Ok(r) => r,
            Err(e) if self.fallback && !matches!(e, AdvisorError::NoSources) => {
                fallback = true;
                self.transcript.push(TranscriptEntry {
                    timestamp: String::new(),
                    pass: SOURCE_NAMES[setup.index].into(),
                    round,
                    backend: backend.clone(),
                    prompt: String::new(),
                    raw_request: None,
                    response: e.to_string(),
                    outcome: "error; falling back to heuristic".into(),
                });
                backend = HeuristicAdvisor::ID.into();
                HeuristicAdvisor.advise(&request)?
            }
            Err(e) => return Err(e.into()),
        };

        let base = pass.current_cost().as_f64();
        let suggested = reply.suggestion.targets();
        let mut candidate = self.targets;
        for k in 0..2 {
            if let Some(v) = suggested[k] {
                candidate[k] = setup.bands[k].clamp(v);
            }
        }
        let incumbent_cost = penalized_cost(base, &f_hat, &self.targets, self.lambda_f)?;
        let candidate_cost = penalized_cost(base, &f_hat, &candidate, self.lambda_f)?;
        let accepted = candidate_cost <= incumbent_cost;
        let incumbent = self.targets;
        if accepted {
            self.targets = candidate;
        }
        self.history.push(if accepted { candidate_cost } else { incumbent_cost });
        self.transcript.push(TranscriptEntry {
            timestamp: String::new(),
            pass: SOURCE_NAMES[setup.index].into(),
            round,
            backend: backend.clone(),
            prompt: reply.prompt,
            raw_request: reply.raw_request,
            response: reply.response,
            outcome: format!(
                "{} candidate {:.2},{:.2} Hz (D_f {} vs {})",
                if accepted { "accepted" } else { "rejected" },
                candidate[0],
                candidate[1],
                candidate_cost,
                incumbent_cost
            ),
        });
        self.log.push(FeedbackRound {
            pass: setup.index,
            round,
            sweep: pass.trace.iterations(),
            base_cost: base,
            f_hat,
            incumbent,
            candidate,
            incumbent_cost,
            candidate_cost,
            accepted,
            backend,
            fallback,
        });
        Ok(())
    }
}

fn finish_pass<T: Scalar>(
    name: &'static str,
    index: usize,
    stack: LayerStack<T>,
    trace: FitTrace<T>,
    shift: AffineShift<T>,
    sample_rate: u32,
) -> Result<PassOutcome<T>> {
    let estimates = recover_rows(stack.x(), &shift)?;
    let labels = assign_sources(&estimates, sample_rate)?;
    let selected_row = if index == 0 { labels.heart } else { labels.lung };
    let final_penalized_cost = trace.last_cost().as_f64();
    Ok(PassOutcome {
        name,
        stack,
        trace,
        shift,
        labels,
        estimates,
        selected_row,
        final_penalized_cost,
    })
}

fn assemble<T: Scalar>(
    method: Method,
    passes: Vec<PassOutcome<T>>,
    sample_rate: u32,
    feedback: Option<Feedback>,
    f_init: [f64; 2],
) -> Result<SeparationResult<T>> {
    let heart = row_signal(&passes[0].estimates, passes[0].selected_row, sample_rate)?;
    let lung = row_signal(&passes[1].estimates, passes[1].selected_row, sample_rate)?;
    let (log, history, transcript, final_f_f) = match feedback {
        Some(f) => (f.log, f.history, f.transcript, f.targets),
        None => (Vec::new(), Vec::new(), Transcript::new(), f_init),
    };
    Ok(SeparationResult {
        method,
        heart,
        lung,
        passes,
        feedback: log,
        penalized_cost_history: history,
        transcript,
        final_f_f,
    })
}

/// Multilayer pass with optional advisor rounds every `feedback_every`
/// sweeps. The targets steer only the acceptance objective; the update
/// rules are untouched by the penalty.
fn run_multilayer_pass<T: Scalar>(
    y: &Matrix<T>,
    cfg: &SeparationConfig,
    setup: &PassSetup,
    feedback: Option<&mut Feedback>,
) -> Result<PassOutcome<T>> {
    let params = to_t::<T>(cfg.pass_params(setup.index));
    let ctrl = cfg.ctrl();
    let mut pass = PlnmfPass::init(y, &params, cfg.rank, setup.seed)?;
    let mut fb = feedback;
    let mut round = 0;
    loop {
        let wants_feedback = fb.as_ref().is_some_and(|f| round < f.rounds);
        let chunk = if wants_feedback { cfg.feedback_every } else { ctrl.max_iter };
        let converged = pass.advance(&params, &ctrl, chunk)?;
        if converged || pass.is_done(&ctrl) {
            break;
        }
        if let Some(f) = fb.as_deref_mut().filter(|_| wants_feedback) {
            f.round(&pass, setup, round)?;
            round += 1;
        }
    }
    let mut outcome = finish_pass(
        SOURCE_NAMES[setup.index],
        setup.index,
        pass.stack,
        pass.trace,
        pass.shift,
        setup.sample_rate,
    )?;
    if let Some(f) = fb {
        let f_hat = Feedback::f_hat(&outcome.estimates, &outcome.labels, setup)?;
        outcome.final_penalized_cost =
            penalized_cost(outcome.final_penalized_cost, &f_hat, &f.targets, f.lambda_f)?;
    }
    Ok(outcome)
}

fn check_input<T: Scalar>(y: &Matrix<T>, cfg: &SeparationConfig, sample_rate: u32) -> Result<[Band; 2]> {
    if !y.all_finite() {
        return Err(Error::NonFinite("mixture matrix".into()));
    }
    if sample_rate == 0 {
        return Err(Error::invalid("sample rate must be positive"));
    }
    cfg.validate(y.rows(), sample_rate)
}

/// Runs the advisor-in-the-loop separation. With `advisor = None` or
/// `cfg.advisor == Off` the passes run without feedback rounds.
pub fn run_lingonmf<T: Scalar>(
    y: &Matrix<T>,
    sample_rate: u32,
    cfg: &SeparationConfig,
    advisor: Option<&mut dyn Advisor>,
) -> Result<SeparationResult<T>> {
    let bands = check_input(y, cfg, sample_rate)?;
    let enabled = cfg.advisor != AdvisorMode::Off && advisor.is_some();
    let mut feedback = enabled.then(|| Feedback {
        advisor,
        fallback: cfg.fallback_to_heuristic,
        rounds: cfg.max_feedback_rounds,
        lambda_f: cfg.lambda_f,
        targets: cfg.f_init,
        log: Vec::new(),
        history: Vec::new(),
        transcript: Transcript::new(),
    });
    let mut passes = Vec::with_capacity(2);
    for index in 0..2 {
        let setup = PassSetup {
            index,
            seed: pass_seed(cfg.seed, index),
            bands: &bands,
            sample_rate,
        };
        passes.push(run_multilayer_pass(y, cfg, &setup, feedback.as_mut())?);
    }
    assemble(Method::Lingonmf, passes, sample_rate, feedback, cfg.f_init)
}

/// Seed of pass `index` (0 heart, 1 lung).
pub fn pass_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64 + 1)
}

/// Baseline pipelines sharing the two-pass structure and seeds of
/// [`run_lingonmf`], without any advisor involvement.
pub fn run_baseline<T: Scalar>(
    y: &Matrix<T>,
    sample_rate: u32,
    method: Method,
    cfg: &SeparationConfig,
) -> Result<SeparationResult<T>> {
    let bands = check_input(y, cfg, sample_rate)?;
    let ctrl = cfg.ctrl();
    let mut passes = Vec::with_capacity(2);
    for index in 0..2 {
        let seed = pass_seed(cfg.seed, index);
        let params = to_t::<T>(cfg.pass_params(index));
        let name = SOURCE_NAMES[index];
        let outcome = match method {
            Method::Plnmf | Method::Lingonmf => {
                let setup = PassSetup {
                    index,
                    seed,
                    bands: &bands,
                    sample_rate,
                };
                run_multilayer_pass(y, cfg, &setup, None)?
            }
            Method::Alpha | Method::Standard => {
                let shift = AffineShift::resolve(y, params.lambda1, params.lambda2)?;
                let data: NonNegMatrix<T> = shift.apply(y)?;
                let (a, x, trace) = if method == Method::Alpha {
                    let r = run_alpha_nmf(&data, cfg.rank, params.alpha, &ctrl, seed)?;
                    (r.a, r.x, r.trace)
                } else {
                    let r = standard_nmf(&data.floored(T::lit(nmf::EPS_FLOOR)), cfg.rank, &ctrl, seed)?;
                    (r.a, r.x, r.trace)
                };
                let stack = LayerStack::new(vec![a], x)?;
                finish_pass(name, index, stack, trace, shift, sample_rate)?
            }
        };
        passes.push(outcome);
    }
    assemble(method, passes, sample_rate, None, cfg.f_init)
}

/// Dispatches on `cfg.method`; the advisor is used only by the
/// advisor-in-the-loop method.
pub fn run_method<T: Scalar>(
    y: &Matrix<T>,
    sample_rate: u32,
    cfg: &SeparationConfig,
    advisor: Option<&mut dyn Advisor>,
) -> Result<SeparationResult<T>> {
    match cfg.method {
        Method::Lingonmf => run_lingonmf(y, sample_rate, cfg, advisor),
        m => run_baseline(y, sample_rate, m, cfg),
    }
}
