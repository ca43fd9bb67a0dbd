//! Random instance generators and the property suites behind the `fuzz` and
//! `report` subcommands and the acceptance tests.
//!
//! Each suite returns raw measurements; callers pass the tolerance.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{expected_max_sum, finite_class_bound};
use crate::concentration::{mc_tail_report, MdsSpec, MdsTree};
use crate::dims_covers::verify_sauer;
use crate::error::Result;
use crate::game_model::{
    regret_of_history, Aggregator, GameSpec, History, NormSpec, PayoffTable, TargetSet, TransformSet, TransformStep,
    ValuedTree,
};
use crate::games::adaptive::{adaptive_regret, make_adaptive_game};
use crate::games::blackwell::{run_blackwell, BlackwellAdversary};
use crate::games::calibration::{calibrated_forecaster, calibration_regret, run_calibration, CalibrationAdversary};
use crate::games::global_cost::concavity_check;
use crate::games::{make_phi_regret, BaseMaps};
use crate::lower_bounds::{
    blackwell_lower_check, linear_lower, make_linear_game, make_supervised_game, supervised_lower,
};
use crate::par::{self, Exec};
use crate::seq_complexity::triplex_certificate_linear;
use crate::value_engine::{exact_theta_value, exact_value, exact_value_rational, EngineOptions};

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub instances: usize,
    pub failures: usize,
    /// Worst observed slack of the checked inequality; negative is a violation.
    pub worst_slack: f64,
}

impl SuiteReport {
    fn new() -> Self {
        SuiteReport { instances: 0, failures: 0, worst_slack: f64::INFINITY }
    }

    fn record(&mut self, slack: f64, tol: f64) {
        self.instances += 1;
        self.worst_slack = self.worst_slack.min(slack);
        if !(slack >= -tol) {
            self.failures += 1;
        }
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn all_histories(nf: usize, nx: usize, t: usize) -> impl Iterator<Item = History> {
    let c = nf * nx;
    (0..c.pow(t as u32)).map(move |mut i| {
        History::new(
            (0..t)
                .map(|_| {
                    let cell = i % c;
                    i /= c;
                    (cell / nx, cell % nx)
                })
                .collect(),
        )
    })
}

/// {0,1}-loss external-regret game with |F|,|X| ≤ max_fx and T ≤ max_t.
pub fn random_binary_game(r: &mut impl Rng, max_fx: usize, max_t: usize) -> Result<GameSpec> {
    let nf = r.gen_range(1..=max_fx);
    let nx = r.gen_range(1..=max_fx);
    let t = r.gen_range(1..=max_t);
    let table = PayoffTable::from_fn(nf, nx, 1, |_, _| vec![f64::from(r.gen_range(0..2u8))])?;
    GameSpec::indexed(table, Aggregator::Average, TransformSet::constant_departures(nf, t), t)
}

/// exact_value ≤ 2·rad_exact on random binary games; slack 2·rad − value.
pub fn certificate_suite(n: usize, seed: u64, tol: f64, opts: &EngineOptions) -> Result<SuiteReport> {
    let reports = par::try_map_indexed(opts.exec, n, |i| {
        let g = random_binary_game(&mut rng(seed, i as u64), 3, 3)?;
        let inner = EngineOptions { exec: Exec::Sequential, ..*opts };
        let c = triplex_certificate_linear(&g, &inner)?;
        Ok::<_, crate::Error>(2.0 * c.rad - c.val)
    })?;
    let mut rep = SuiteReport::new();
    reports.into_iter().for_each(|s| rep.record(s, tol));
    Ok(rep)
}

/// A set of 1..=max_card real-valued trees of depth 1..=max_depth, values in [−1,1].
pub fn random_tree_set(r: &mut impl Rng, max_depth: usize, max_card: usize) -> Result<Vec<ValuedTree<f64>>> {
    let depth = r.gen_range(1..=max_depth);
    let card = r.gen_range(1..=max_card);
    // Half the sets use a coarse value grid so maxima tie.
    let coarse = r.gen_bool(0.5);
    (0..card)
        .map(|_| {
            ValuedTree::from_fn(depth, |_, _| {
                if coarse {
                    f64::from(r.gen_range(-2..=2i8)) / 2.0
                } else {
                    r.gen_range(-1.0..=1.0)
                }
            })
        })
        .collect()
}

/// E max_v Σ ε_t v_t ≤ finite_class_bound; slack bound − expectation.
pub fn finite_class_suite(n: usize, seed: u64, tol: f64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new();
    for i in 0..n {
        let v = random_tree_set(&mut rng(seed, i as u64), 6, 8)?;
        rep.record(finite_class_bound(&v)? - expected_max_sum(&v)?, tol);
    }
    Ok(rep)
}

fn scalar(rows: &[&[f64]]) -> Result<PayoffTable> {
    PayoffTable::scalar(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
}

/// The fixed set of 30 small games (|F|,|X| ≤ 4, T ≤ 3) used by the oracle checks.
pub fn fixture_games() -> Result<Vec<GameSpec>> {
    let pennies = scalar(&[&[0.0, 1.0], &[1.0, 0.0]])?;
    let rps = scalar(&[&[0.5, 1.0, 0.0], &[0.0, 0.5, 1.0], &[1.0, 0.0, 0.5]])?;
    let mut out = Vec::new();
    for t in 1..=3 {
        out.push(make_phi_regret(pennies.clone(), BaseMaps::Explicit(vec![vec![0, 0], vec![1, 1]]), t, u64::MAX)?);
        out.push(make_phi_regret(rps.clone(), BaseMaps::Explicit(vec![vec![0; 3], vec![1; 3], vec![2; 3]]), t, u64::MAX)?);
        out.push(make_phi_regret(pennies.clone(), BaseMaps::Internal, t, u64::MAX)?);
    }
    out.push(make_phi_regret(rps.clone(), BaseMaps::Internal, 2, u64::MAX)?);
    out.push(make_phi_regret(rps.clone(), BaseMaps::Swap, 2, u64::MAX)?);
    // Vector payoffs under L1 and L∞ norms of the average.
    let vec_table = PayoffTable::from_nested(2, &[
        vec![vec![1.0, 0.0], vec![0.0, -1.0]],
        vec![vec![-0.5, 0.5], vec![0.25, 0.0]],
    ])?;
    for (t, agg) in [
        (2, Aggregator::NormOfAverage { norm: NormSpec::L1 }),
        (3, Aggregator::NormOfAverage { norm: NormSpec::Linf }),
        (2, Aggregator::NegNormOfAverage { norm: NormSpec::L1 }),
    ] {
        out.push(GameSpec::indexed(vec_table.clone(), agg, TransformSet::constant_departures(2, t), t)?);
    }
    let mut r = rng(0x5eed, 0);
    while out.len() < 30 {
        let i = out.len();
        let (nf, nx) = (r.gen_range(2..=4), r.gen_range(2..=4));
        let t = if i % 4 == 0 { 3 } else { r.gen_range(1..=2) };
        let table = PayoffTable::from_fn(nf, nx, 1, |_, _| vec![f64::from(r.gen_range(0..=4u8)) / 4.0])?;
        let maps = if i % 2 == 0 { BaseMaps::Internal } else { BaseMaps::Explicit((0..nf).map(|g| vec![g; nf]).collect()) };
        out.push(make_phi_regret(table, maps, t, u64::MAX)?);
    }
    Ok(out)
}

/// |float value − rational value| on every fixture game; slack is −difference.
pub fn lp_oracle_suite(tol: f64, opts: &EngineOptions) -> Result<SuiteReport> {
    let games = fixture_games()?;
    let diffs = par::try_map_indexed(opts.exec, games.len(), |i| {
        let inner = EngineOptions { exec: Exec::Sequential, ..*opts };
        let a = exact_value(&games[i], &inner)?;
        let b = exact_value_rational(&games[i])?.to_f64().unwrap_or(f64::NAN);
        Ok::<_, crate::Error>((a - b).abs())
    })?;
    let mut rep = SuiteReport::new();
    diffs.into_iter().for_each(|d| rep.record(-d, tol));
    Ok(rep)
}

/// Whether regret is nonnegative on every complete history.
pub fn regret_nonnegative(spec: &GameSpec) -> Result<bool> {
    for h in all_histories(spec.nf(), spec.nx(), spec.horizon) {
        if regret_of_history(spec, &h)? < 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Val^θ ≤ Val/θ on fixture games with nonnegative regret; slack Val/θ − Val^θ.
pub fn markov_suite(thetas: &[f64], tol: f64, opts: &EngineOptions) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new();
    for g in fixture_games()? {
        if !regret_nonnegative(&g)? {
            continue;
        }
        let v = exact_value(&g, opts)?;
        for &th in thetas {
            rep.record(v / th - exact_theta_value(&g, th, opts)?, tol);
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct SauerSuiteReport {
    /// (table, Φ) pairs enumerated, per horizon.
    pub instances: usize,
    /// Distinct canonical profile classes checked, per horizon.
    pub classes: usize,
    /// Instances also checked directly, per horizon.
    pub direct: usize,
    pub horizons: usize,
    pub failures: usize,
    /// Smallest bound − cover over all checks.
    pub worst_slack: f64,
}

/// Canonical form of a binary profile class: distinct profiles, then columns
/// up to complement, minimized over row orders. Zero covers and fat_1 are
/// invariant under column permutation, duplication and complement.
fn canonical_class(mut prof: Vec<Vec<f64>>) -> (usize, Vec<u8>) {
    prof.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    prof.dedup();
    let rows = prof.len();
    let cells = prof[0].len();
    let mut perm: Vec<usize> = (0..rows).collect();
    let mut best: Option<Vec<u8>> = None;
    loop {
        let mut cols: Vec<u8> = (0..cells)
            .map(|c| {
                let bits = perm.iter().enumerate().fold(0u8, |m, (j, &r)| m | (u8::from(prof[r][c] != 0.0) << j));
                if bits & 1 == 1 {
                    !bits & ((1u8 << rows) - 1)
                } else {
                    bits
                }
            })
            .filter(|&b| b != 0)
            .collect();
        cols.sort_unstable();
        cols.dedup();
        if best.as_ref().is_none_or(|b| cols < *b) {
            best = Some(cols);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    (rows, best.unwrap_or_default())
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// N(0) ≤ Σ_{i≤fat_1} C(T,i)k^i over every binary table with |F|,|X| ≤ max_fx
/// and every set of at most max_phi maps F → F, for T = 1..=max_t.
///
/// One representative per canonical class is checked; every instance with
/// |F|·|X| ≤ 4 is also checked directly and must reproduce its class's
/// cover and fat_1, which tests the class reduction itself.
pub fn sauer_suite(max_fx: usize, max_phi: usize, max_t: usize, exec: Exec) -> Result<SauerSuiteReport> {
    type Key = (usize, Vec<u8>);
    let mut reps: BTreeMap<Key, (PayoffTable, Vec<TransformStep>)> = BTreeMap::new();
    let mut direct: Vec<(Key, PayoffTable, Vec<TransformStep>)> = Vec::new();
    let mut instances = 0;
    for nf in 1..=max_fx {
        let maps: Vec<Vec<usize>> = (0..nf.pow(nf as u32))
            .map(|mut i| {
                (0..nf)
                    .map(|_| {
                        let g = i % nf;
                        i /= nf;
                        g
                    })
                    .collect()
            })
            .collect();
        let mut sets: Vec<Vec<usize>> = Vec::new();
        subsets(maps.len(), max_phi, &mut Vec::new(), 0, &mut sets);
        for nx in 1..=max_fx {
            let cells = nf * nx;
            for code in 0..1u32 << cells {
                let table = PayoffTable::from_fn(nf, nx, 1, |f, x| vec![f64::from((code >> (f * nx + x)) & 1)])?;
                for set in &sets {
                    instances += 1;
                    let prof: Vec<Vec<f64>> = set
                        .iter()
                        .map(|&m| (0..cells).map(|c| table.get(maps[m][c / nx], c % nx)[0]).collect())
                        .collect();
                    let key = canonical_class(prof);
                    let base = || set.iter().map(|&m| TransformStep::Departure(maps[m].clone())).collect::<Vec<_>>();
                    if cells <= 4 {
                        direct.push((key.clone(), table.clone(), base()));
                    }
                    reps.entry(key).or_insert_with(|| (table.clone(), base()));
                }
            }
        }
    }
    let keys: Vec<Key> = reps.keys().cloned().collect();
    let classes: Vec<_> = reps.into_values().collect();
    let checks = par::try_map_indexed(exec, classes.len() * max_t, |i| {
        let (table, base) = &classes[i / max_t];
        verify_sauer(table, base, i % max_t + 1, Exec::Sequential)
    })?;
    let direct_checks = par::try_map_indexed(exec, direct.len() * max_t, |i| {
        let (key, table, base) = &direct[i / max_t];
        let t = i % max_t + 1;
        let r = verify_sauer(table, base, t, Exec::Sequential)?;
        let c = &checks[keys.binary_search(key).expect("class present") * max_t + t - 1];
        Ok::<_, crate::Error>(r.holds && (r.cover, r.fat1) == (c.cover, c.fat1))
    })?;
    Ok(SauerSuiteReport {
        instances,
        classes: classes.len(),
        direct: direct.len(),
        horizons: max_t,
        failures: checks.iter().filter(|c| !c.holds).count() + direct_checks.iter().filter(|ok| !**ok).count(),
        worst_slack: checks
            .iter()
            .map(|c| c.bound.parse::<f64>().unwrap_or(f64::INFINITY) - c.cover as f64)
            .fold(f64::INFINITY, f64::min),
    })
}

fn subsets(n: usize, max: usize, cur: &mut Vec<usize>, start: usize, out: &mut Vec<Vec<usize>>) {
    if !cur.is_empty() {
        out.push(cur.clone());
    }
    if cur.len() == max {
        return;
    }
    for i in start..n {
        cur.push(i);
        subsets(n, max, cur, i + 1, out);
        cur.pop();
    }
}

fn random_vectors(r: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| f64::from(r.gen_range(-4..=4i8)) / 4.0).collect()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    /// exact_value − supervised_lower / linear_lower.
    pub supervised_linear: SuiteReport,
    /// exact_value − walsh_paley_sup/2 on the induced approachability games.
    pub blackwell: SuiteReport,
}

/// Lower-bound constructions against exact values on tiny instances.
pub fn sandwich_suite(n_sl: usize, n_bw: usize, seed: u64, tol: f64, opts: &EngineOptions) -> Result<SandwichReport> {
    let mut sl = SuiteReport::new();
    for i in 0..n_sl {
        let mut r = rng(seed, i as u64);
        let t = r.gen_range(1..=3);
        let (v, lower) = if i % 2 == 0 {
            let (nf, nz) = (r.gen_range(1..=3), r.gen_range(1..=2));
            let fvals: Vec<Vec<f64>> = (0..nf).map(|_| (0..nz).map(|_| f64::from(r.gen_range(-4..=4i8)) / 4.0).collect()).collect();
            (exact_value(&make_supervised_game(&fvals, t)?, opts)?, supervised_lower(&fvals, t, opts.budget)?)
        } else {
            let d = r.gen_range(1..=2);
            let (nfs, nxs) = (r.gen_range(1..=3), r.gen_range(1..=2));
            let fs = random_vectors(&mut r, nfs, d);
            let xs = random_vectors(&mut r, nxs, d);
            (exact_value(&make_linear_game(&fs, &xs, t)?, opts)?, linear_lower(&fs, &xs, t, opts.budget)?)
        };
        sl.record(v - lower, tol);
    }
    let mut bw = SuiteReport::new();
    for i in 0..n_bw {
        let mut r = rng(seed, (n_sl + i) as u64);
        let d = r.gen_range(1..=2);
        let nh = r.gen_range(1..=2);
        let h = random_vectors(&mut r, nh, d);
        let norm = [NormSpec::L1, NormSpec::L2, NormSpec::Linf][i % 3];
        let rep = blackwell_lower_check(&h, norm, r.gen_range(1..=3), opts)?;
        bw.record(rep.value - 0.5 * rep.walsh_paley, tol);
    }
    Ok(SandwichReport { supervised_linear: sl, blackwell: bw })
}

/// A random Walsh-Paley martingale with T ≤ max_t under L2 or L3.
pub fn random_mds(r: &mut impl Rng, max_t: usize) -> Result<MdsSpec> {
    let t = r.gen_range(10..=max_t);
    let k = r.gen_range(1..=3);
    let norm = if r.gen_bool(0.5) { NormSpec::L2 } else { NormSpec::Lq(3.0) };
    let radius = r.gen_range(0.25..2.0);
    let tree = match r.gen_range(0..3) {
        0 => MdsTree::Hashed { seed: r.gen(), k, t, radius },
        1 => MdsTree::Feedback { k, t, radius, angle: r.gen_range(0.0..std::f64::consts::PI) },
        _ => MdsTree::PerDepth { steps: (0..t).map(|_| (0..k).map(|_| r.gen_range(-radius..radius)).collect()).collect() },
    };
    MdsSpec::new(tree, norm)
}

/// Pinelis tail against the empirical tail of random martingales at
/// thresholds c·B·sqrt(T), c ∈ {0.5, 1, …, 4}. Slack is the smallest
/// bound + 3·stderr − empirical over valid thresholds.
pub fn mds_suite(n: usize, samples: usize, seed: u64, exec: Exec) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new();
    for i in 0..n {
        let m = random_mds(&mut rng(seed, i as u64), 200)?;
        let scale = m.b * (m.horizon() as f64).sqrt();
        let thresholds: Vec<f64> = (1..=8).map(|c| 0.5 * c as f64 * scale).collect();
        let tail = mc_tail_report(&m, &thresholds, samples, seed.wrapping_add(i as u64), exec)?;
        let slack = tail
            .rows
            .iter()
            .filter_map(|row| row.bound.map(|b| b + 3.0 * row.stderr - row.empirical))
            .fold(f64::INFINITY, f64::min);
        rep.record(slack, 0.0);
    }
    Ok(rep)
}

/// Midpoint concavity for each (norm, k); slack from concavity_check.
pub fn concavity_suite(norms: &[NormSpec], ks: &[usize], trials: usize, seed: u64, tol: f64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new();
    for (i, &norm) in norms.iter().enumerate() {
        for (j, &k) in ks.iter().enumerate() {
            let c = concavity_check(norm, k, trials, seed.wrapping_add((i * ks.len() + j) as u64))?;
            rep.record(c.min_slack, tol);
        }
    }
    Ok(rep)
}

/// Encoded adaptive regret against the direct formula on every history, for
/// every binary 2×2 loss table, every Ψ of one or two maps and T ≤ max_t.
/// Slack is −|difference|.
pub fn adaptive_suite(max_t: usize, tol: f64) -> Result<SuiteReport> {
    let maps: Vec<Vec<usize>> = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
    let mut psis: Vec<Vec<usize>> = Vec::new();
    subsets(maps.len(), 2, &mut Vec::new(), 0, &mut psis);
    let mut rep = SuiteReport::new();
    for code in 0..16u32 {
        let loss = PayoffTable::from_fn(2, 2, 1, |f, x| vec![f64::from((code >> (2 * f + x)) & 1)])?;
        for set in &psis {
            let psi: Vec<Vec<usize>> = set.iter().map(|&m| maps[m].clone()).collect();
            for t in 1..=max_t {
                let g = make_adaptive_game(&loss, &psi, t, u64::MAX)?;
                let mut worst: f64 = 0.0;
                for h in all_histories(2, 2, t) {
                    worst = worst.max((regret_of_history(&g, &h)? - adaptive_regret(&loss, &h, &psi)?).abs());
                }
                rep.record(-worst, tol);
            }
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    pub horizons: Vec<usize>,
    /// Mean over seeds at each horizon.
    pub means: Vec<f64>,
    /// Least-squares slope of log mean against log T.
    pub slope: f64,
    pub decreasing: bool,
}

/// Least-squares slope of log y against log x.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn rate(horizons: &[usize], means: Vec<f64>) -> RateReport {
    let xs: Vec<f64> = horizons.iter().map(|&t| t as f64).collect();
    RateReport {
        horizons: horizons.to_vec(),
        slope: log_log_slope(&xs, &means),
        decreasing: means.windows(2).all(|w| w[1] < w[0]),
        means,
    }
}

/// Distance to S = {0} in the scalar sign game under the best-response
/// adversary, averaged over seeds 0..seeds at each horizon.
pub fn blackwell_decay(horizons: &[usize], seeds: u64, exec: Exec) -> Result<RateReport> {
    let table = PayoffTable::scalar(&[vec![1.0, -1.0], vec![-1.0, 1.0]])?;
    let set = TargetSet::origin(1);
    let tmax = horizons.iter().copied().max().unwrap_or(1);
    let stride = horizons.iter().copied().min().unwrap_or(1);
    let runs = par::try_map_indexed(exec, seeds as usize, |s| {
        run_blackwell(&table, &set, NormSpec::L1, &BlackwellAdversary::BestResponse, tmax, s as u64, stride)
    })?;
    let means = horizons
        .iter()
        .map(|&t| {
            runs.iter().map(|r| r.trace.iter().find(|(u, _)| *u == t).map_or(f64::NAN, |e| e.1)).sum::<f64>() / seeds as f64
        })
        .collect();
    Ok(rate(horizons, means))
}

/// k = 2 calibration regret (L1) of the δ = T^{-1/2} forecaster, averaged
/// over seeds 0..seeds at each horizon.
pub fn calibration_rate(adversary: &CalibrationAdversary, horizons: &[usize], seeds: u64, exec: Exec) -> Result<RateReport> {
    let n = horizons.len() * seeds as usize;
    let regrets = par::try_map_indexed(exec, n, |i| {
        let (t, s) = (horizons[i / seeds as usize], (i % seeds as usize) as u64);
        let mut fc = calibrated_forecaster(2, None, t)?;
        let tr = run_calibration(&mut fc, adversary, t, s)?;
        calibration_regret(&tr, NormSpec::L1)
    })?;
    let means = regrets.chunks(seeds as usize).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    Ok(rate(horizons, means))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_small() {
        let g = fixture_games().unwrap();
        assert_eq!(g.len(), 30);
        assert!(g.iter().all(|s| s.nf() <= 4 && s.nx() <= 4 && s.horizon <= 3));
        assert!(g.iter().filter(|s| regret_nonnegative(s).unwrap()).count() >= 5);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [10.0, 100.0, 1000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((log_log_slope(&xs, &ys) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn canonical_class_invariances() {
        let a = vec![vec![0.0, 1.0, 1.0], vec![1.0, 1.0, 0.0]];
        // Rows swapped, a column complemented and duplicated.
        let b = vec![vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0, 0.0]];
        assert_eq!(canonical_class(a), canonical_class(b));
        let c = vec![vec![0.0, 1.0], vec![0.0, 1.0]];
        assert_eq!(canonical_class(c).0, 1);
    }

    #[test]
    fn small_suites_pass() {
        let opts = EngineOptions::default();
        assert_eq!(certificate_suite(20, 1, 1e-9, &opts).unwrap().failures, 0);
        assert_eq!(finite_class_suite(20, 1, 1e-9).unwrap().failures, 0);
        let s = sauer_suite(2, 2, 3, Exec::default()).unwrap();
        assert_eq!(s.failures, 0);
        assert!(s.classes < s.instances);
        assert_eq!(adaptive_suite(2, 1e-12).unwrap().failures, 0);
    }
}
