//! Concrete games: external and Φ-regret, approachability, calibration,
//! global cost, and adaptive regret.

pub mod adaptive;
pub mod blackwell;
pub mod calibration;
pub mod global_cost;

use crate::error::{Error, Result};
use crate::game_model::{Aggregator, GameSpec, PayoffTable, TransformSet, TransformStep};

pub use adaptive::{adaptive_regret, make_adaptive_game};
pub use blackwell::{one_shot_check, run_blackwell, BlackwellAdversary, BlackwellPlayer, OneShotReport};
pub use calibration::{
    calibrated_forecaster, calibration_regret, run_calibration, run_doubling, write_trace, CalibrationAdversary,
    CalibrationTranscript, CalibratedForecaster, DoublingForecaster, GridSimplex,
};
pub use global_cost::{concavity_check, make_global_cost, simplex_weighted_norm_inf, ConcavityReport};

/// External regret: Average aggregator, one constant map per f.
pub fn make_external(table: PayoffTable, t: usize) -> Result<GameSpec> {
    let nf = table.nf();
    GameSpec::indexed(table, Aggregator::Average, TransformSet::constant_departures(nf, t), t)
}

/// Redirections f→g for f ≠ g, then the identity.
pub fn internal_maps(nf: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(nf * nf.saturating_sub(1) + 1);
    for f in 0..nf {
        for g in 0..nf {
            if f != g {
                let mut m: Vec<usize> = (0..nf).collect();
                m[f] = g;
                out.push(m);
            }
        }
    }
    out.push((0..nf).collect());
    out
}

/// All nf^nf self-maps of F in lexicographic order.
pub fn swap_maps(nf: usize, budget: u64) -> Result<Vec<Vec<usize>>> {
    let count = (nf as f64).powi(nf as i32);
    if count > budget as f64 {
        return Err(Error::Budget { required: count, budget });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut cur = vec![0usize; nf];
    loop {
        out.push(cur.clone());
        let mut i = nf;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < nf {
                break;
            }
            cur[i] = 0;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BaseMaps {
    Explicit(Vec<Vec<usize>>),
    Internal,
    Swap,
}

/// Φ-regret over time-invariant departure maps.
pub fn make_phi_regret(table: PayoffTable, maps: BaseMaps, t: usize, budget: u64) -> Result<GameSpec> {
    let nf = table.nf();
    let maps = match maps {
        BaseMaps::Explicit(m) => m,
        BaseMaps::Internal => internal_maps(nf),
        BaseMaps::Swap => swap_maps(nf, budget)?,
    };
    let base = maps.into_iter().map(TransformStep::Departure).collect();
    GameSpec::indexed(table, Aggregator::Average, TransformSet::time_invariant(base, t)?, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value_engine::{exact_value, EngineOptions};

    fn pennies() -> PayoffTable {
        PayoffTable::scalar(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn external() {
        let g = make_external(pennies(), 2).unwrap();
        assert_eq!(g.transforms.len(), 2);
        assert_eq!(GameSpec::from_json(&g.to_json()).unwrap(), g);
        let one = make_external(PayoffTable::scalar(&[vec![0.3, 0.8]]).unwrap(), 2).unwrap();
        assert_eq!(one.transforms.len(), 1);
        assert_eq!(exact_value(&one, &EngineOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn phi_families() {
        assert_eq!(internal_maps(2).len(), 3);
        assert_eq!(internal_maps(4).len(), 13);
        assert_eq!(swap_maps(2, 100).unwrap(), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(swap_maps(3, 100).unwrap().len(), 27);
        assert!(swap_maps(5, 100).is_err());
        for maps in [BaseMaps::Internal, BaseMaps::Swap] {
            let g = make_phi_regret(PayoffTable::scalar(&[vec![0.5, 1.0]]).unwrap(), maps, 2, 1 << 20).unwrap();
            assert_eq!(g.transforms.len(), 1);
            assert_eq!(exact_value(&g, &EngineOptions::default()).unwrap(), 0.0);
        }
        let g = make_phi_regret(pennies(), BaseMaps::Swap, 1, 1 << 20).unwrap();
        assert_eq!(g.transforms.len(), 4);
    }

    #[test]
    fn presets_parse() {
        let json = |p: &str| {
            format!(r#"{{"F":["a","b"],"X":["h","t"],"payoff":{{"k":1,"values":[[[0],[1]],[[1],[0]]]}},"aggregator":{{"kind":"Average"}},"transforms":{{"preset":"{p}"}},"T":2}}"#)
        };
        assert_eq!(GameSpec::from_json(&json("internal")).unwrap().transforms.len(), 3);
        assert_eq!(GameSpec::from_json(&json("swap")).unwrap().transforms.len(), 4);
    }
}
