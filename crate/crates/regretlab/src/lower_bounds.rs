//! Equalizer strategies and explicit lower bounds on the value.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::game_model::{
    Aggregator, GameSpec, History, MixedStrategy, NormSpec, PayoffTable, Sums, TargetSet, TransformSet, TransformStep,
    ValuedTree,
};
use crate::value_engine::{check_budget, exact_value, EngineOptions};

#[derive(Clone, Debug, Serialize)]
pub struct EqualizerReport {
    /// Smallest and largest expected regret over pure player strategies.
    pub min: f64,
    pub max: f64,
    pub equalizer: bool,
}

/// Whether the adversary makes expected regret the same for every pure
/// player strategy. A pure strategy picks f independently at each history,
/// so its extremes come from a min/max backward induction.
pub fn check_equalizer(
    spec: &GameSpec,
    adversary: &dyn Fn(&History) -> Result<MixedStrategy>,
    opts: &EngineOptions,
) -> Result<EqualizerReport> {
    check_budget(spec.nf() * spec.nx(), spec.horizon, 1, opts.budget)?;
    fn rec(
        spec: &GameSpec,
        adv: &dyn Fn(&History) -> Result<MixedStrategy>,
        h: &mut History,
        sums: &Sums,
    ) -> Result<(f64, f64)> {
        let t = h.len();
        if t == spec.horizon {
            let r = sums.regret(spec, t);
            return Ok((r, r));
        }
        let p = adv(h)?;
        if p.weights().len() != spec.nx() {
            return Err(Error::Dimension { expected: spec.nx(), got: p.weights().len() });
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for f in 0..spec.nf() {
            let (mut a, mut b) = (0.0, 0.0);
            for (x, &w) in p.weights().iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let mut s = sums.clone();
                s.push(spec, t, f, x);
                h.rounds.push((f, x));
                let (cl, ch) = rec(spec, adv, h, &s)?;
                h.rounds.pop();
                a += w * cl;
                b += w * ch;
            }
            lo = lo.min(a);
            hi = hi.max(b);
        }
        Ok((lo, hi))
    }
    let (min, max) = rec(spec, adversary, &mut History::default(), &Sums::zero(spec))?;
    Ok(EqualizerReport { min, max, equalizer: max - min <= 1e-9 })
}

/// sup over label trees of E leaf(Σ_t ε_t c_{label_t}), by the exact
/// max-over-labels / mean-over-signs recursion.
fn tree_sup(contrib: &[Vec<f64>], t: usize, budget: u64, leaf: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
    if contrib.is_empty() {
        return Err(invalid("", "need at least one node label"));
    }
    check_budget(2 * contrib.len(), t, 1, budget)?;
    fn rec(contrib: &[Vec<f64>], left: usize, acc: &mut Vec<f64>, leaf: &dyn Fn(&[f64]) -> f64) -> f64 {
        if left == 0 {
            return leaf(acc);
        }
        let mut best = f64::NEG_INFINITY;
        for c in contrib {
            let mut mean = 0.0;
            for eps in [1.0, -1.0] {
                for (a, v) in acc.iter_mut().zip(c) {
                    *a += eps * v;
                }
                mean += 0.5 * rec(contrib, left - 1, acc, leaf);
                for (a, v) in acc.iter_mut().zip(c) {
                    *a -= eps * v;
                }
            }
            best = best.max(mean);
        }
        best
    }
    Ok(rec(contrib, t, &mut vec![0.0; contrib[0].len()], leaf))
}

fn max_over(t: usize) -> impl Fn(&[f64]) -> f64 {
    move |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max) / t as f64
}

fn check_table(rows: &[Vec<f64>], what: &str) -> Result<usize> {
    let Some(first) = rows.first() else {
        return Err(invalid(what, "empty"));
    };
    let n = first.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(invalid(what, "rows must share a positive length"));
    }
    Ok(n)
}

/// Sequential Rademacher complexity sup_z E sup_f (1/T) Σ ε_t f(z_t(ε)).
/// `fvals[f][z]` is f(z).
pub fn supervised_lower(fvals: &[Vec<f64>], t: usize, budget: u64) -> Result<f64> {
    let nz = check_table(fvals, "F")?;
    let contrib: Vec<Vec<f64>> = (0..nz).map(|z| fvals.iter().map(|f| f[z]).collect()).collect();
    tree_sup(&contrib, t, budget, &max_over(t))
}

/// Absolute-loss game with X = Z × {−1, +1}; index 2z + (y = +1).
pub fn make_supervised_game(fvals: &[Vec<f64>], t: usize) -> Result<GameSpec> {
    let nz = check_table(fvals, "F")?;
    let table = PayoffTable::from_fn(fvals.len(), 2 * nz, 1, |f, x| {
        let y = if x % 2 == 1 { 1.0 } else { -1.0 };
        vec![(fvals[f][x / 2] - y).abs()]
    })?;
    let nf = table.nf();
    GameSpec::indexed(table, Aggregator::Average, TransformSet::constant_departures(nf, t), t)
}

/// sup over X-valued trees of E sup_f (1/T) Σ ε_t ⟨f, x_t(ε)⟩.
pub fn linear_lower(fs: &[Vec<f64>], xs: &[Vec<f64>], t: usize, budget: u64) -> Result<f64> {
    let d = check_table(fs, "F")?;
    if check_table(xs, "X")? != d {
        return Err(Error::Dimension { expected: d, got: xs[0].len() });
    }
    let contrib: Vec<Vec<f64>> = xs.iter().map(|x| fs.iter().map(|f| dot(f, x)).collect()).collect();
    tree_sup(&contrib, t, budget, &max_over(t))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// X ∪ −X without duplicates, in order.
fn symmetrize(xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for x in xs.iter().cloned().chain(xs.iter().map(|x| x.iter().map(|v| -v).collect())) {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// Linear loss ⟨f,x⟩ over the symmetrized X, Average aggregator, constant maps.
pub fn make_linear_game(fs: &[Vec<f64>], xs: &[Vec<f64>], t: usize) -> Result<GameSpec> {
    let d = check_table(fs, "F")?;
    if check_table(xs, "X")? != d {
        return Err(Error::Dimension { expected: d, got: xs[0].len() });
    }
    let sx = symmetrize(xs);
    let table = PayoffTable::from_fn(fs.len(), sx.len(), 1, |f, x| vec![dot(&fs[f], &sx[x])])?;
    let nf = table.nf();
    GameSpec::indexed(table, Aggregator::Average, TransformSet::constant_departures(nf, t), t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WpMode {
    Exhaustive,
    Greedy,
}

/// sup over H-valued trees of E ‖(1/T) Σ ε_t h_t(ε)‖.
///
/// Exhaustive mode runs the exact recursion; greedy mode does coordinate
/// ascent on an explicit tree and returns a lower witness.
pub fn walsh_paley_sup(h: &[Vec<f64>], norm: NormSpec, t: usize, mode: WpMode, budget: u64) -> Result<f64> {
    check_table(h, "H")?;
    norm.validate()?;
    let leaf = move |s: &[f64]| norm.norm(s) / t as f64;
    match mode {
        WpMode::Exhaustive => tree_sup(h, t, budget, &leaf),
        WpMode::Greedy => {
            let nodes = (1usize << t.min(40)) - 1;
            check_budget(2, t, nodes * h.len() * t.max(1), budget)?;
            let start = (0..h.len()).max_by(|&a, &b| norm.norm(&h[a]).total_cmp(&norm.norm(&h[b]))).unwrap_or(0);
            let mut tree = ValuedTree::constant(t, start)?;
            let eval = |tree: &ValuedTree<usize>| {
                let n = 1u64 << t;
                let mut acc = vec![0.0; h[0].len()];
                let mut total = 0.0;
                for p in 0..n {
                    acc.iter_mut().for_each(|a| *a = 0.0);
                    for (s, &i) in tree.path(p).enumerate() {
                        let e = ValuedTree::<usize>::sign(t, p, s);
                        for (a, v) in acc.iter_mut().zip(&h[i]) {
                            *a += e * v;
                        }
                    }
                    total += leaf(&acc);
                }
                total / n as f64
            };
            let mut best = eval(&tree);
            loop {
                let mut improved = false;
                for node in 0..nodes {
                    let keep = tree.values()[node];
                    let mut arg = keep;
                    for cand in 0..h.len() {
                        tree.values_mut()[node] = cand;
                        let v = eval(&tree);
                        if v > best + 1e-12 {
                            best = v;
                            arg = cand;
                            improved = true;
                        }
                    }
                    tree.values_mut()[node] = arg;
                }
                if !improved {
                    return Ok(best);
                }
            }
        }
    }
}

/// Approachability game F = {+1, −1}, X = H ∪ −H, ℓ(f,x) = f·x, S = {0};
/// regret is the distance of the average payoff to S.
pub fn make_blackwell_game(h: &[Vec<f64>], norm: NormSpec, t: usize) -> Result<GameSpec> {
    let k = check_table(h, "H")?;
    let sx = symmetrize(h);
    let table = PayoffTable::from_fn(2, sx.len(), k, |f, x| {
        let s = if f == 0 { 1.0 } else { -1.0 };
        sx[x].iter().map(|v| s * v).collect()
    })?;
    let zero = PayoffTable::from_fn(2, sx.len(), k, |_, _| vec![0.0; k])?;
    let tr = TransformSet::time_invariant(vec![TransformStep::PayoffOverride(zero)], t)?;
    GameSpec::indexed(table, Aggregator::DistanceToSet { set: TargetSet::origin(k), norm }, tr, t)
}

#[derive(Clone, Debug, Serialize)]
pub struct BlackwellLowerReport {
    pub value: f64,
    pub walsh_paley: f64,
    pub holds: bool,
}

/// exact value of the induced approachability game vs half the Walsh–Paley supremum.
pub fn blackwell_lower_check(h: &[Vec<f64>], norm: NormSpec, t: usize, opts: &EngineOptions) -> Result<BlackwellLowerReport> {
    let spec = make_blackwell_game(h, norm, t)?;
    let value = exact_value(&spec, opts)?;
    let walsh_paley = walsh_paley_sup(h, norm, t, WpMode::Exhaustive, opts.budget)?;
    Ok(BlackwellLowerReport { value, walsh_paley, holds: value >= 0.5 * walsh_paley - 1e-9 })
}
