//! Backward induction for Val_T, Val_T^θ and the Γ-game value, with a
//! zero-sum matrix game solved at every interior history.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_model::{Aggregator, GameSpec, History, MixedStrategy, NormSpec, Sums};
use crate::lp::{self, Scalar};
use crate::par::{self, Exec};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug)]
pub struct EngineOptions {
    /// Largest admissible leaf count.
    pub budget: u64,
    pub exec: Exec,
    /// Memoize on (round, payoff sums). Sound for every aggregator here since
    /// each is a function of the running sums.
    pub collapse: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { budget: DEFAULT_BUDGET, exec: Exec::default(), collapse: false }
    }
}

impl EngineOptions {
    pub fn sequential() -> Self {
        EngineOptions { exec: Exec::Sequential, ..Default::default() }
    }
}

/// Leaf transform Γ applied to the realized regret.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Gamma {
    Identity,
    Indicator { theta: f64 },
    /// exp(α T max(x,0)² / k)
    ExpQuadratic { alpha: f64, k: f64 },
}

impl Gamma {
    pub fn parse(name: &str, params: &[f64]) -> Result<Self> {
        match (name, params) {
            ("identity", []) => Ok(Gamma::Identity),
            ("indicator", [theta]) => Ok(Gamma::Indicator { theta: *theta }),
            ("exp_quadratic", [alpha, k]) => Ok(Gamma::ExpQuadratic { alpha: *alpha, k: *k }),
            _ => Err(Error::Unknown(format!("gamma {name} with {} parameters", params.len()))),
        }
    }

    #[inline]
    pub fn apply(&self, r: f64, horizon: usize) -> f64 {
        match *self {
            Gamma::Identity => r,
            Gamma::Indicator { theta } => f64::from(u8::from(r > theta)),
            Gamma::ExpQuadratic { alpha, k } => {
                let x = r.max(0.0);
                (alpha * horizon as f64 * x * x / k).exp()
            }
        }
    }
}

pub fn check_budget(base: usize, depth: usize, extra: usize, budget: u64) -> Result<()> {
    let required = (base as f64).powi(depth as i32) * extra as f64;
    if required > budget as f64 {
        return Err(Error::Budget { required, budget });
    }
    Ok(())
}

struct Solver<'a> {
    spec: &'a GameSpec,
    gamma: Gamma,
    exec: Exec,
    par_levels: usize,
}

impl Solver<'_> {
    fn new(spec: &GameSpec, gamma: Gamma, exec: Exec) -> Solver<'_> {
        let branch = spec.nf() * spec.nx();
        let par_levels = if branch >= 16 { 1 } else { 2 };
        Solver { spec, gamma, exec, par_levels }
    }

    fn leaf(&self, sums: &Sums) -> f64 {
        self.gamma.apply(sums.regret(self.spec, self.spec.horizon), self.spec.horizon)
    }

    fn children(&self, t: usize, sums: &Sums, eval: &(dyn Fn(usize, &Sums) -> f64 + Sync)) -> Vec<Vec<f64>> {
        let (nf, nx) = (self.spec.nf(), self.spec.nx());
        let child = |i: usize| {
            let (f, x) = (i / nx, i % nx);
            let mut s = sums.clone();
            s.push(self.spec, t, f, x);
            eval(t + 1, &s)
        };
        let exec = if t < self.par_levels { self.exec } else { Exec::Sequential };
        let flat = par::map_indexed(exec, nf * nx, child);
        flat.chunks(nx).map(|c| c.to_vec()).collect()
    }

    fn value(&self, t: usize, sums: &Sums) -> f64 {
        if t == self.spec.horizon {
            return self.leaf(sums);
        }
        let m = self.children(t, sums, &|t, s| self.value(t, s));
        lp::game_value(&m)
    }

    fn value_memo(&self, t: usize, sums: &Sums, memo: &mut HashMap<(usize, Vec<u64>), f64>) -> f64 {
        if t == self.spec.horizon {
            return self.leaf(sums);
        }
        let key = (t, sums.key());
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        let (nf, nx) = (self.spec.nf(), self.spec.nx());
        let mut m = vec![vec![0.0; nx]; nf];
        for (f, row) in m.iter_mut().enumerate() {
            for (x, cell) in row.iter_mut().enumerate() {
                let mut s = sums.clone();
                s.push(self.spec, t, f, x);
                *cell = self.value_memo(t + 1, &s, memo);
            }
        }
        let v = lp::game_value(&m);
        memo.insert(key, v);
        v
    }
}

impl Sums {
    fn key(&self) -> Vec<u64> {
        self.realized.iter().chain(&self.phi).map(|v| (v + 0.0).to_bits()).collect()
    }
}

/// Val_T.
pub fn exact_value(spec: &GameSpec, opts: &EngineOptions) -> Result<f64> {
    exact_gamma_value(spec, Gamma::Identity, opts)
}

/// Val_T^θ: the value with leaf 1{Reg > θ}.
pub fn exact_theta_value(spec: &GameSpec, theta: f64, opts: &EngineOptions) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::Precondition(format!("theta must be positive, got {theta}")));
    }
    exact_gamma_value(spec, Gamma::Indicator { theta }, opts)
}

/// Value with leaf Γ(Reg).
pub fn exact_gamma_value(spec: &GameSpec, gamma: Gamma, opts: &EngineOptions) -> Result<f64> {
    check_budget(spec.nf() * spec.nx(), spec.horizon, 1, opts.budget)?;
    let solver = Solver::new(spec, gamma, opts.exec);
    let root = Sums::zero(spec);
    if opts.collapse {
        let mut memo = HashMap::new();
        Ok(solver.value_memo(0, &root, &mut memo))
    } else {
        Ok(solver.value(0, &root))
    }
}

// ---------------------------------------------------------------------------
// Exact rational mode

/// Val_T in exact rational arithmetic, for |F|,|X| ≤ 4 and T ≤ 3.
///
/// Supports Average and (Neg)NormOfAverage under L1 or L∞.
pub fn exact_value_rational(spec: &GameSpec) -> Result<BigRational> {
    if spec.nf() > 4 || spec.nx() > 4 || spec.horizon > 3 {
        return Err(Error::Precondition("rational mode needs |F|,|X| ≤ 4 and T ≤ 3".into()));
    }
    let sign_norm = match &spec.aggregator {
        Aggregator::Average => None,
        Aggregator::NormOfAverage { norm: n @ (NormSpec::L1 | NormSpec::Linf) } => Some((1, *n)),
        Aggregator::NegNormOfAverage { norm: n @ (NormSpec::L1 | NormSpec::Linf) } => Some((-1, *n)),
        other => return Err(Error::Precondition(format!("rational mode does not support {other:?}"))),
    };
    let q = |v: f64| <BigRational as Scalar>::from_f64(v);
    let k = spec.k();
    let nphi = spec.transforms.len();
    let eval = |sum: &[BigRational]| -> BigRational {
        match sign_norm {
            None => sum[0].clone(),
            Some((s, n)) => {
                let abs: Vec<BigRational> = sum.iter().map(|v| if v < &<BigRational as Zero>::zero() { -v.clone() } else { v.clone() }).collect();
                let r = match n {
                    NormSpec::L1 => abs.into_iter().fold(<BigRational as Zero>::zero(), |a, b| a + b),
                    _ => abs.into_iter().fold(<BigRational as Zero>::zero(), |a, b| if b > a { b } else { a }),
                };
                if s < 0 {
                    -r
                } else {
                    r
                }
            }
        }
    };
    fn rec(
        spec: &GameSpec,
        t: usize,
        real: Vec<BigRational>,
        phi: Vec<BigRational>,
        q: &dyn Fn(f64) -> BigRational,
        eval: &dyn Fn(&[BigRational]) -> BigRational,
        k: usize,
        nphi: usize,
    ) -> BigRational {
        if t == spec.horizon {
            // B is positively homogeneous here, so compare sums and divide once
            let best = (0..nphi).map(|i| eval(&phi[i * k..(i + 1) * k])).reduce(|a, b| if b < a { b } else { a }).unwrap();
            return (eval(&real) - best) / BigRational::from_integer((spec.horizon as i64).into());
        }
        let mut m = Vec::with_capacity(spec.nf());
        for f in 0..spec.nf() {
            let mut row = Vec::with_capacity(spec.nx());
            for x in 0..spec.nx() {
                let mut r2 = real.clone();
                for (a, v) in r2.iter_mut().zip(spec.payoff.get(f, x)) {
                    *a = a.clone() + q(*v);
                }
                let mut p2 = phi.clone();
                for (i, seq) in spec.transforms.sequences().iter().enumerate() {
                    let z = spec.transforms.payoff(&spec.payoff, seq[t], f, x);
                    for (a, v) in p2[i * k..(i + 1) * k].iter_mut().zip(z) {
                        *a = a.clone() + q(*v);
                    }
                }
                row.push(rec(spec, t + 1, r2, p2, q, eval, k, nphi));
            }
            m.push(row);
        }
        lp::game_value_exact(&m)
    }
    Ok(rec(spec, 0, vec![<BigRational as Zero>::zero(); k], vec![<BigRational as Zero>::zero(); k * nphi], &q, &eval, k, nphi))
}

// ---------------------------------------------------------------------------
// Strategies

/// Learner strategy: a mixed strategy for every history of length < T.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StrategyTable {
    pub entries: HashMap<History, MixedStrategy>,
}

impl StrategyTable {
    pub fn get(&self, h: &History) -> Result<&MixedStrategy> {
        self.entries.get(h).ok_or_else(|| Error::MissingHistory(h.rounds.clone()))
    }

    /// The same mixed strategy at every history.
    pub fn constant(spec: &GameSpec, q: MixedStrategy, opts: &EngineOptions) -> Result<Self> {
        check_budget(spec.nf() * spec.nx(), spec.horizon.saturating_sub(1), 1, opts.budget)?;
        let mut entries = HashMap::new();
        let mut stack = vec![History::default()];
        while let Some(h) = stack.pop() {
            if h.len() + 1 < spec.horizon {
                for f in 0..spec.nf() {
                    for x in 0..spec.nx() {
                        let mut c = h.clone();
                        c.rounds.push((f, x));
                        stack.push(c);
                    }
                }
            }
            entries.insert(h, q.clone());
        }
        Ok(StrategyTable { entries })
    }
}

/// Row strategies recorded during backward induction.
pub fn extract_minimax_strategy(spec: &GameSpec, opts: &EngineOptions) -> Result<StrategyTable> {
    check_budget(spec.nf() * spec.nx(), spec.horizon, 1, opts.budget)?;
    fn rec(
        spec: &GameSpec,
        h: &mut History,
        sums: &Sums,
        out: &mut Vec<(History, MixedStrategy)>,
        exec: Exec,
    ) -> Result<f64> {
        let t = h.len();
        if t == spec.horizon {
            return Ok(sums.regret(spec, t));
        }
        let (nf, nx) = (spec.nf(), spec.nx());
        let results = par::try_map_indexed(if t == 0 { exec } else { Exec::Sequential }, nf * nx, |i| {
            let (f, x) = (i / nx, i % nx);
            let mut s = sums.clone();
            s.push(spec, t, f, x);
            let mut hh = h.clone();
            hh.rounds.push((f, x));
            let mut local = Vec::new();
            let v = rec(spec, &mut hh, &s, &mut local, Exec::Sequential)?;
            Ok::<_, Error>((v, local))
        })?;
        let mut m = vec![vec![0.0; nx]; nf];
        for (i, (v, local)) in results.into_iter().enumerate() {
            m[i / nx][i % nx] = v;
            out.extend(local);
        }
        let sol = lp::solve_matrix_game(&m)?;
        out.push((h.clone(), sol.row));
        Ok(sol.value)
    }
    let mut out = Vec::new();
    rec(spec, &mut History::default(), &Sums::zero(spec), &mut out, opts.exec)?;
    Ok(StrategyTable { entries: out.into_iter().collect() })
}

/// Expected regret of the maximizing adversary against `s`.
pub fn best_response_value(spec: &GameSpec, s: &StrategyTable, opts: &EngineOptions) -> Result<f64> {
    check_budget(spec.nf() * spec.nx(), spec.horizon, 1, opts.budget)?;
    best_response(spec, s, &mut History::default(), &Sums::zero(spec), None)
}

fn best_response(
    spec: &GameSpec,
    s: &StrategyTable,
    h: &mut History,
    sums: &Sums,
    mut record: Option<&mut HashMap<History, usize>>,
) -> Result<f64> {
    let t = h.len();
    if t == spec.horizon {
        return Ok(sums.regret(spec, t));
    }
    let q = s.get(h)?.clone();
    let mut best = (f64::NEG_INFINITY, 0);
    for x in 0..spec.nx() {
        let mut v = 0.0;
        for (f, &w) in q.weights().iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let mut ss = sums.clone();
            ss.push(spec, t, f, x);
            h.rounds.push((f, x));
            let r = best_response(spec, s, h, &ss, record.as_deref_mut());
            h.rounds.pop();
            v += w * r?;
        }
        if v > best.0 + 1e-15 {
            best = (v, x);
        }
    }
    if let Some(rec) = record {
        rec.insert(h.clone(), best.1);
    }
    Ok(best.0)
}

// ---------------------------------------------------------------------------
// Simulation

#[derive(Clone, Debug)]
pub enum Player {
    Table(StrategyTable),
    Minimax,
    Uniform,
}

impl Player {
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "minimax" => Ok(Player::Minimax),
            "uniform" => Ok(Player::Uniform),
            other => Err(Error::Unknown(format!("player {other}"))),
        }
    }

    fn table(&self, spec: &GameSpec, opts: &EngineOptions) -> Result<StrategyTable> {
        match self {
            Player::Table(t) => Ok(t.clone()),
            Player::Minimax => extract_minimax_strategy(spec, opts),
            Player::Uniform => StrategyTable::constant(spec, MixedStrategy::uniform(spec.nf()), opts),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Adversary {
    BestResponse,
    FixedSequence(Vec<usize>),
    Uniform,
}

impl Adversary {
    /// `best-response`, `uniform`, or `fixed-sequence:i,j,…`.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "best-response" => Ok(Adversary::BestResponse),
            "uniform" => Ok(Adversary::Uniform),
            _ => {
                let Some(rest) = name.strip_prefix("fixed-sequence:") else {
                    return Err(Error::Unknown(format!("adversary {name}")));
                };
                let seq = rest
                    .split(',')
                    .map(|s| s.trim().parse::<usize>().map_err(|_| Error::Unknown(format!("adversary {name}"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Adversary::FixedSequence(seq))
            }
        }
    }
}

/// Replays with a counter-based generator: replay r uses stream r of the
/// ChaCha8 generator keyed by `seed`.
pub fn simulate(
    spec: &GameSpec,
    player: &Player,
    adversary: &Adversary,
    seed: u64,
    reps: usize,
    opts: &EngineOptions,
) -> Result<Vec<f64>> {
    let table = player.table(spec, opts)?;
    let responses = match adversary {
        Adversary::BestResponse => {
            let mut rec = HashMap::new();
            best_response(spec, &table, &mut History::default(), &Sums::zero(spec), Some(&mut rec))?;
            Some(rec)
        }
        Adversary::FixedSequence(seq) => {
            if seq.len() != spec.horizon || seq.iter().any(|&x| x >= spec.nx()) {
                return Err(Error::Precondition(format!("fixed sequence must list T = {} moves within X", spec.horizon)));
            }
            None
        }
        Adversary::Uniform => None,
    };
    par::try_map_indexed(opts.exec, reps, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let mut h = History::default();
        let mut sums = Sums::zero(spec);
        for t in 0..spec.horizon {
            let f = table.get(&h)?.sample(rng.gen::<f64>());
            let x = match adversary {
                Adversary::BestResponse => *responses
                    .as_ref()
                    .and_then(|m| m.get(&h))
                    .ok_or_else(|| Error::MissingHistory(h.rounds.clone()))?,
                Adversary::FixedSequence(seq) => seq[t],
                Adversary::Uniform => rng.gen_range(0..spec.nx()),
            };
            sums.push(spec, t, f, x);
            h.rounds.push((f, x));
        }
        Ok(sums.regret(spec, spec.horizon))
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::game_model::{PayoffTable, TransformSet, TransformStep};
    use proptest::prelude::*;
    use rand::Rng;

    pub(crate) fn pennies(t: usize) -> GameSpec {
        let table = PayoffTable::scalar(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        GameSpec::indexed(table, Aggregator::Average, TransformSet::constant_departures(2, t), t).unwrap()
    }

    fn single(t: usize) -> GameSpec {
        let table = PayoffTable::scalar(&[vec![0.2, 0.7, 1.0]]).unwrap();
        GameSpec::indexed(table, Aggregator::Average, TransformSet::constant_departures(1, t), t).unwrap()
    }

    /// Random {0,1}-loss external-regret game.
    pub(crate) fn random_game(rng: &mut impl Rng, max_fx: usize, max_t: usize) -> GameSpec {
        let nf = rng.gen_range(1..=max_fx);
        let nx = rng.gen_range(1..=max_fx);
        let t = rng.gen_range(1..=max_t);
        let table: Vec<Vec<f64>> = (0..nf).map(|_| (0..nx).map(|_| f64::from(rng.gen_range(0..2u8))).collect()).collect();
        GameSpec::indexed(PayoffTable::scalar(&table).unwrap(), Aggregator::Average, TransformSet::constant_departures(nf, t), t)
            .unwrap()
    }

    fn opts() -> EngineOptions {
        EngineOptions::default()
    }

    #[test]
    fn pennies_values() {
        assert!((exact_value(&pennies(1), &opts()).unwrap() - 0.5).abs() < 1e-12);
        let v2 = exact_value(&pennies(2), &opts()).unwrap();
        assert!((0.0..=0.5).contains(&v2));
        // frozen regression: exact rational engine agrees
        let r = exact_value_rational(&pennies(2)).unwrap();
        assert!((v2 - Scalar::to_f64(&r)).abs() < 1e-12);
        // by hand: continuation value 1/2 after a mismatch, 0 after a match
        assert!((v2 - 0.25).abs() < 1e-12, "{v2}");
    }

    #[test]
    fn single_action_values() {
        for t in 1..4 {
            assert_eq!(exact_value(&single(t), &opts()).unwrap(), 0.0);
            assert_eq!(exact_gamma_value(&single(t), Gamma::ExpQuadratic { alpha: 0.3, k: 2.0 }, &opts()).unwrap(), 1.0);
        }
    }

    #[test]
    fn theta_value_examples() {
        let g = pennies(1);
        assert_eq!(exact_theta_value(&g, 1.0, &opts()).unwrap(), 0.0);
        assert!(exact_theta_value(&g, -0.1, &opts()).is_err());
        let p = exact_theta_value(&g, 0.25, &opts()).unwrap();
        assert!(p <= 2.0 * exact_value(&g, &opts()).unwrap() + 1e-12);
        assert!((p - 0.5).abs() < 1e-12);
        let gi = exact_gamma_value(&g, Gamma::Indicator { theta: 0.25 }, &opts()).unwrap();
        assert_eq!(p, gi);
    }

    #[test]
    fn budget_error_names_count() {
        let small = EngineOptions { budget: 10, ..opts() };
        let e = exact_value(&pennies(2), &small).unwrap_err();
        assert!(e.to_string().contains("16 nodes"), "{e}");
    }

    #[test]
    fn collapse_and_sequential_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let g = random_game(&mut rng, 3, 3);
            let a = exact_value(&g, &opts()).unwrap();
            let b = exact_value(&g, &EngineOptions { collapse: true, ..opts() }).unwrap();
            let c = exact_value(&g, &EngineOptions::sequential()).unwrap();
            assert!((a - b).abs() < 1e-12);
            assert_eq!(a.to_bits(), c.to_bits());
        }
    }

    #[test]
    fn minimax_strategy_is_optimal() {
        let t = extract_minimax_strategy(&pennies(1), &opts()).unwrap();
        let root = t.get(&History::default()).unwrap();
        assert!((root.weights()[0] - 0.5).abs() < 1e-12);
        let t1 = extract_minimax_strategy(&single(2), &opts()).unwrap();
        assert!(t1.entries.values().all(|m| m.weights() == [1.0]));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let g = random_game(&mut rng, 3, 3);
            let s = extract_minimax_strategy(&g, &opts()).unwrap();
            let br = best_response_value(&g, &s, &opts()).unwrap();
            assert!((br - exact_value(&g, &opts()).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn worst_pure_strategy() {
        let g = pennies(1);
        let s = StrategyTable::constant(&g, MixedStrategy::point(2, 0), &opts()).unwrap();
        assert_eq!(best_response_value(&g, &s, &opts()).unwrap(), 1.0);
        assert_eq!(best_response_value(&single(1), &StrategyTable::constant(&single(1), MixedStrategy::point(1, 0), &opts()).unwrap(), &opts()).unwrap(), 0.0);
        let e = best_response_value(&pennies(2), &s, &opts()).unwrap_err();
        assert!(matches!(e, Error::MissingHistory(_)));
    }

    #[test]
    fn simulation_contracts() {
        let g = pennies(2);
        let point = Player::Table(StrategyTable::constant(&g, MixedStrategy::point(2, 1), &opts()).unwrap());
        let fixed = Adversary::named("fixed-sequence:0,1").unwrap();
        let r = simulate(&g, &point, &fixed, 1, 50, &opts()).unwrap();
        assert!(r.iter().all(|&v| v == r[0]));
        let a = simulate(&g, &Player::Uniform, &Adversary::Uniform, 9, 200, &opts()).unwrap();
        let b = simulate(&g, &Player::Uniform, &Adversary::Uniform, 9, 200, &EngineOptions::sequential()).unwrap();
        assert_eq!(a, b);
        assert!(Player::named("oracle").is_err());
        assert!(Adversary::named("sneaky").is_err());
    }

    #[test]
    fn simulated_minimax_matches_value() {
        let g = pennies(1);
        let r = simulate(&g, &Player::Minimax, &Adversary::BestResponse, 42, 100_000, &opts()).unwrap();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn markov_relation_on_random_games() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..30 {
            let g = random_game(&mut rng, 3, 3);
            let v = exact_value(&g, &opts()).unwrap();
            for theta in [0.1, 0.25, 0.5] {
                let p = exact_theta_value(&g, theta, &opts()).unwrap();
                assert!((0.0..=1.0).contains(&p));
                assert!(p <= v / theta + 1e-9);
            }
        }
    }

    #[test]
    fn rational_matches_float() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let nf = rng.gen_range(1..=3);
            let nx = rng.gen_range(1..=3);
            let t = rng.gen_range(1..=2);
            let table: Vec<Vec<f64>> = (0..nf).map(|_| (0..nx).map(|_| rng.gen_range(-4..=4) as f64 / 4.0).collect()).collect();
            let g = GameSpec::indexed(PayoffTable::scalar(&table).unwrap(), Aggregator::Average, TransformSet::constant_departures(nf, t), t).unwrap();
            let f = exact_value(&g, &opts()).unwrap();
            let r = Scalar::to_f64(&exact_value_rational(&g).unwrap());
            assert!((f - r).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_sequence_gives_nonnegative_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let nf = rng.gen_range(1..=3);
            let nx = rng.gen_range(1..=3);
            let t = rng.gen_range(1..=3);
            let table: Vec<Vec<f64>> = (0..nf).map(|_| (0..nx).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let mut base: Vec<TransformStep> = (0..nf).map(|_| TransformStep::Departure((0..nf).map(|_| rng.gen_range(0..nf)).collect())).collect();
            base.push(TransformStep::Departure((0..nf).collect()));
            let g = GameSpec::indexed(PayoffTable::scalar(&table).unwrap(), Aggregator::Average, TransformSet::time_invariant(base, t).unwrap(), t).unwrap();
            assert!(exact_value(&g, &opts()).unwrap() >= -1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn relabeling_invariance(seed in 0u64..10_000, pf in 0usize..6, px in 0usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_game(&mut rng, 3, 2);
            let (nf, nx) = (g.nf(), g.nx());
            let perm = |n: usize, k: usize| -> Vec<usize> {
                let mut v: Vec<usize> = (0..n).collect();
                for i in 0..k { v.rotate_left(1); if n > 1 { v.swap(0, i % n); } }
                v
            };
            let sf = perm(nf, pf);
            let sx = perm(nx, px);
            let table = PayoffTable::from_fn(nf, nx, 1, |f, x| g.payoff.get(sf[f], sx[x]).to_vec()).unwrap();
            let h = GameSpec::indexed(table, Aggregator::Average, TransformSet::constant_departures(nf, g.horizon), g.horizon).unwrap();
            let a = exact_value(&g, &opts()).unwrap();
            let b = exact_value(&h, &opts()).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
