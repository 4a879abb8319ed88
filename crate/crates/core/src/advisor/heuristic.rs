use super::{Advisor, AdvisorError, AdvisorReply, AdvisorRequest, AdvisorSuggestion, build_prompt, render_suggestion};
use crate::spectral::Band;

/// Moves `current` toward `observed` by at most half of `current`, then
/// clamps into `band`. The clamp wins when `current` lies outside the band.
pub fn damped_step(current: f64, observed: f64, band: Band) -> f64 {
    let delta = observed - current;
    let step = delta.abs().min(0.5 * current.abs());
    band.clamp(current + step.copysign(delta))
}

/// Deterministic stand-in for a language model: each source's target
/// follows its measured in-band fundamental with damping.
pub fn heuristic_advise(request: &AdvisorRequest) -> AdvisorSuggestion {
    let next = |i: usize| {
        let s = request.sources.get(i)?;
        let band = *request.bands.get(i)?;
        Some(damped_step(s.target_hz, s.features.fundamental_frequency, band))
    };
    AdvisorSuggestion {
        heart_f0: next(0),
        lung_f0: next(1),
        diagnosis_note: String::new(),
        backend_id: HeuristicAdvisor::ID.into(),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicAdvisor;

impl HeuristicAdvisor {
    pub const ID: &'static str = "heuristic";
}

impl Advisor for HeuristicAdvisor {
    fn id(&self) -> &str {
        Self::ID
    }

    fn advise(&mut self, request: &AdvisorRequest) -> Result<AdvisorReply, AdvisorError> {
        let prompt = build_prompt(&request.sources)?;
        let suggestion = heuristic_advise(request);
        Ok(AdvisorReply {
            response: render_suggestion(&suggestion),
            suggestion,
            prompt: prompt.text,
            raw_request: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band() -> Band {
        Band::new(20.0, 200.0).unwrap()
    }

    #[test]
    fn damping_rule() {
        assert_eq!(damped_step(50.0, 80.0, band()), 75.0);
        assert_eq!(damped_step(50.0, 50.0, band()), 50.0);
        assert_eq!(damped_step(30.0, 5.0, band()), 20.0);
        // Half-step bound holds before the clamp: 50 - 25.
        assert_eq!(damped_step(50.0, 5.0, band()), 25.0);
        assert_eq!(damped_step(50.0, 300.0, Band::new(100.0, 450.0).unwrap()), 100.0);
    }
}
