//! Global cost games ℓ(f,x) = f⊙x and the weighted-norm infimum over the simplex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::game_model::{Aggregator, GameSpec, NormSpec, PayoffTable, TransformSet};
use crate::seq_complexity::simplex_grid;

/// F = simplex lattice of resolution `f_res`, X = {0, 1/x_res, …, 1}^k.
pub fn make_global_cost(k: usize, norm: NormSpec, f_res: usize, x_res: usize, t: usize) -> Result<GameSpec> {
    if k == 0 || f_res == 0 || x_res == 0 {
        return Err(invalid("", "k and grid resolutions must be positive"));
    }
    norm.validate()?;
    let fs = simplex_grid(k, f_res);
    let levels = x_res + 1;
    let nx = levels.checked_pow(k as u32).filter(|&n| n <= 1 << 20).ok_or_else(|| invalid(".X", "grid too large"))?;
    let xs: Vec<Vec<f64>> = (0..nx)
        .map(|mut i| {
            (0..k)
                .map(|_| {
                    let v = (i % levels) as f64 / x_res as f64;
                    i /= levels;
                    v
                })
                .collect()
        })
        .collect();
    let table = PayoffTable::from_fn(fs.len(), xs.len(), k, |f, x| fs[f].iter().zip(&xs[x]).map(|(a, b)| a * b).collect())?;
    let nf = table.nf();
    GameSpec::indexed(table, Aggregator::NormOfAverage { norm }, TransformSet::constant_departures(nf, t), t)
}

/// inf over f ∈ Δ(k) of ‖f⊙x‖ for x ≥ 0, in closed form.
///
/// For Lq the minimizer is f_i ∝ x_i^{-q/(q-1)}, giving
/// (Σ x_i^{-q/(q-1)})^{-(q-1)/q}; L∞ is the q → ∞ limit and L1 puts all
/// mass on the smallest coordinate.
pub fn simplex_weighted_norm_inf(x: &[f64], norm: NormSpec) -> Result<f64> {
    if x.is_empty() || x.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(invalid("x", "expected a nonempty nonnegative finite vector"));
    }
    norm.validate()?;
    if x.iter().any(|&v| v == 0.0) {
        return Ok(0.0);
    }
    Ok(match norm {
        NormSpec::L1 => x.iter().copied().fold(f64::INFINITY, f64::min),
        NormSpec::Linf => 1.0 / x.iter().map(|v| 1.0 / v).sum::<f64>(),
        NormSpec::L2 => lq_inf(x, 2.0),
        NormSpec::Lq(q) => lq_inf(x, q),
    })
}

fn lq_inf(x: &[f64], q: f64) -> f64 {
    let r = q / (q - 1.0);
    // Scale by the minimum to keep the negative powers in range.
    let m = x.iter().copied().fold(f64::INFINITY, f64::min);
    m * x.iter().map(|v| (v / m).powf(-r)).sum::<f64>().powf(-1.0 / r)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcavityReport {
    pub trials: usize,
    pub min_slack: f64,
    pub failures: usize,
    pub pass: bool,
}

/// Midpoint concavity of x ↦ inf_f ‖f⊙x‖ on random positive pairs.
pub fn concavity_check(norm: NormSpec, k: usize, trials: usize, seed: u64) -> Result<ConcavityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    let mut failures = 0;
    for _ in 0..trials {
        let mut draw = || (0..k).map(|_| 10f64.powf(rng.gen_range(-2.0..2.0))).collect::<Vec<f64>>();
        let (x, y) = (draw(), draw());
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let slack = simplex_weighted_norm_inf(&mid, norm)?
            - 0.5 * (simplex_weighted_norm_inf(&x, norm)? + simplex_weighted_norm_inf(&y, norm)?);
        min_slack = min_slack.min(slack);
        if slack < -1e-7 {
            failures += 1;
        }
    }
    Ok(ConcavityReport { trials, min_slack, failures, pass: failures == 0 })
}
