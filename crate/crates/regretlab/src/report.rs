//! The eleven acceptance criteria, shared by the acceptance test and `regretlab report`.
//!
//! Criterion i draws its random instances from seed `base_seed + i`.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fuzz::{self, RateReport, SuiteReport};
use crate::game_model::NormSpec;
use crate::games::calibration::CalibrationAdversary;
use crate::par::Exec;
use crate::value_engine::EngineOptions;

pub const CRITERIA: usize = 11;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} criterion {:>2}: {} [{:.1}s]", self.id, self.detail, self.seconds)
    }
}

fn suite(r: &SuiteReport) -> String {
    format!("{} checks, {} failures, worst slack {:.3e}", r.instances, r.failures, r.worst_slack)
}

fn rate(r: &RateReport) -> String {
    let means: Vec<String> = r.horizons.iter().zip(&r.means).map(|(t, m)| format!("T={t}: {m:.5}")).collect();
    format!("{}; slope {:.3}", means.join(", "), r.slope)
}

/// Runs criterion `id` (1-based). Errors inside a criterion count as a failure.
pub fn run_criterion(id: usize, base_seed: u64, opts: &EngineOptions) -> Result<CriterionResult> {
    if !(1..=CRITERIA).contains(&id) {
        return Err(Error::Unknown(format!("criterion {id}")));
    }
    let seed = base_seed.wrapping_add(id as u64);
    let exec = opts.exec;
    let start = Instant::now();
    let (pass, detail) = evaluate(id, seed, opts, exec).unwrap_or_else(|e| (false, format!("error: {e}")));
    Ok(CriterionResult { id, pass, detail, seconds: start.elapsed().as_secs_f64() })
}

fn evaluate(id: usize, seed: u64, opts: &EngineOptions, exec: Exec) -> Result<(bool, String)> {
    Ok(match id {
        1 => {
            let r = fuzz::certificate_suite(200, seed, 1e-9, opts)?;
            (r.instances == 200 && r.failures == 0, format!("Val <= 2 Rad: {}", suite(&r)))
        }
        2 => {
            let r = fuzz::finite_class_suite(200, seed, 1e-9)?;
            (r.instances == 200 && r.failures == 0, format!("E max <= finite class bound: {}", suite(&r)))
        }
        3 => {
            let r = fuzz::lp_oracle_suite(1e-8, opts)?;
            (r.instances == 30 && r.failures == 0, format!("float vs rational within 1e-8: {}", suite(&r)))
        }
        4 => {
            let r = fuzz::markov_suite(&[0.1, 0.25, 0.5], 1e-9, opts)?;
            (r.instances > 0 && r.failures == 0, format!("Val^theta <= Val/theta: {}", suite(&r)))
        }
        5 => {
            let r = fuzz::sauer_suite(3, 3, 4, exec)?;
            let detail = format!(
                "0-cover <= Sauer sum: {} instances x {} horizons via {} profile classes ({} small instances checked directly), {} failures, worst slack {}",
                r.instances, r.horizons, r.classes, r.direct, r.failures, r.worst_slack
            );
            (r.failures == 0, detail)
        }
        6 => {
            let r = fuzz::blackwell_decay(&[100, 1_000, 10_000], 20, exec)?;
            let last = *r.means.last().unwrap_or(&f64::NAN);
            let pass = last <= 0.05 && (-0.65..=-0.35).contains(&r.slope);
            (pass, format!("distance to S, 20 seeds: {}", rate(&r)))
        }
        7 => {
            let horizons = [1_000, 10_000, 100_000];
            let mut pass = true;
            let mut parts = Vec::new();
            for (name, adv) in [("iid-uniform", CalibrationAdversary::IidUniform), ("adaptive", CalibrationAdversary::Adaptive)] {
                let r = fuzz::calibration_rate(&adv, &horizons, 4, exec)?;
                pass &= r.decreasing && (-0.65..=-0.30).contains(&r.slope);
                parts.push(format!("{name}: {}", rate(&r)));
            }
            (pass, format!("k=2 calibration regret, 4 seeds; {}", parts.join("; ")))
        }
        8 => {
            let r = fuzz::sandwich_suite(30, 10, seed, 1e-9, opts)?;
            let pass = r.supervised_linear.instances == 30
                && r.blackwell.instances == 10
                && r.supervised_linear.failures == 0
                && r.blackwell.failures == 0;
            (pass, format!("supervised/linear {}; Blackwell {}", suite(&r.supervised_linear), suite(&r.blackwell)))
        }
        9 => {
            let r = fuzz::mds_suite(20, 100_000, seed, exec)?;
            (r.instances == 20 && r.failures == 0, format!("Pinelis tail, 1e5 samples: {}", suite(&r)))
        }
        10 => {
            let r = fuzz::concavity_suite(&[NormSpec::L1, NormSpec::L2, NormSpec::Linf], &[2, 3, 5], 10_000, seed, 1e-7)?;
            (r.instances == 9 && r.failures == 0, format!("midpoint concavity, 1e4 trials per case: {}", suite(&r)))
        }
        11 => {
            let r = fuzz::adaptive_suite(3, 1e-12)?;
            (r.failures == 0, format!("encoded vs direct adaptive regret: {}", suite(&r)))
        }
        _ => unreachable!("checked above"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_criterion_is_rejected() {
        assert!(run_criterion(0, 0, &EngineOptions::default()).is_err());
        assert!(run_criterion(12, 0, &EngineOptions::default()).is_err());
    }

    #[test]
    fn fast_criteria_pass() {
        for id in [2, 3, 10, 11] {
            let r = run_criterion(id, 0, &EngineOptions::default()).unwrap();
            assert!(r.pass, "{r}");
        }
    }
}
