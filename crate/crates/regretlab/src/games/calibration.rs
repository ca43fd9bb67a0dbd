//! Calibration: transcripts, exact calibration regret, and a Blackwell
//! forecaster over a δ-packing of the simplex.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::game_model::{MixedStrategy, NormSpec};
use crate::lp::solve_matrix_game;
use crate::seq_complexity::simplex_grid;

/// Forecasts in Δ(k) and realized outcome indices.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CalibrationTranscript {
    forecasts: Vec<Vec<f64>>,
    outcomes: Vec<usize>,
}

impl CalibrationTranscript {
    pub fn new(forecasts: Vec<Vec<f64>>, outcomes: Vec<usize>) -> Result<Self> {
        if forecasts.len() != outcomes.len() {
            return Err(invalid("", format!("{} forecasts but {} outcomes", forecasts.len(), outcomes.len())));
        }
        let mut t = CalibrationTranscript::default();
        for (f, x) in forecasts.into_iter().zip(outcomes) {
            t.push(f, x)?;
        }
        Ok(t)
    }

    pub fn push(&mut self, forecast: Vec<f64>, outcome: usize) -> Result<()> {
        let i = self.forecasts.len();
        if let Some(first) = self.forecasts.first() {
            if first.len() != forecast.len() {
                return Err(Error::Dimension { expected: first.len(), got: forecast.len() });
            }
        }
        if forecast.is_empty() || outcome >= forecast.len() {
            return Err(invalid(format!("[{i}]"), "outcome index out of range"));
        }
        let s: f64 = forecast.iter().sum();
        if (s - 1.0).abs() > 1e-12 || forecast.iter().any(|&v| v < 0.0) {
            return Err(invalid(format!("[{i}]"), format!("forecast is not in the simplex (sum {s})")));
        }
        self.forecasts.push(forecast);
        self.outcomes.push(outcome);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
    pub fn forecasts(&self) -> &[Vec<f64>] {
        &self.forecasts
    }
    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    /// Rows of forecast coordinates followed by the outcome index.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let k = self.forecasts.first().map_or(0, |f| f.len());
        let mut header: Vec<String> = (0..k).map(|i| format!("f{i}")).collect();
        header.push("outcome".into());
        out.write_record(&header).map_err(csv_err)?;
        for (f, x) in self.forecasts.iter().zip(&self.outcomes) {
            let mut row: Vec<String> = f.iter().map(|v| v.to_string()).collect();
            row.push(x.to_string());
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush().map_err(|e| csv_err(e.into()))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut t = CalibrationTranscript::default();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let vals: Vec<&str> = rec.iter().collect();
            let Some((last, head)) = vals.split_last() else {
                return Err(invalid(format!("row {}", i + 1), "empty row"));
            };
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| invalid(format!("row {}", i + 1), e.to_string()));
            let f = head.iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
            let x = last.trim().parse::<usize>().map_err(|e| invalid(format!("row {}", i + 1), e.to_string()))?;
            t.push(f, x)?;
        }
        Ok(t)
    }
}

fn csv_err(e: csv::Error) -> Error {
    invalid("", e.to_string())
}

/// Per-distinct-forecast error sums Σ (f_t − e_{x_t}).
#[derive(Clone, Debug, Default)]
struct ErrorSums {
    index: HashMap<Vec<u64>, usize>,
    points: Vec<Vec<f64>>,
    errors: Vec<Vec<f64>>,
    rounds: usize,
}

impl ErrorSums {
    fn push(&mut self, f: &[f64], x: usize) {
        let key: Vec<u64> = f.iter().map(|v| v.to_bits()).collect();
        let i = *self.index.entry(key).or_insert_with(|| {
            self.points.push(f.to_vec());
            self.errors.push(vec![0.0; f.len()]);
            self.points.len() - 1
        });
        for (j, e) in self.errors[i].iter_mut().enumerate() {
            *e += f[j] - if j == x { 1.0 } else { 0.0 };
        }
        self.rounds += 1;
    }

    fn regret(&self, norm: NormSpec) -> f64 {
        if self.rounds == 0 {
            return 0.0;
        }
        let k = self.points[0].len();
        let best = if k == 2 { self.runs_max(norm) } else { self.balls_max(norm) };
        best / self.rounds as f64
    }

    /// k = 2: balls meet the simplex segment in intervals, so patterns are
    /// exactly contiguous runs of forecasts sorted by their first coordinate.
    fn runs_max(&self, norm: NormSpec) -> f64 {
        let mut order: Vec<usize> = (0..self.points.len()).collect();
        order.sort_by(|&a, &b| self.points[a][0].total_cmp(&self.points[b][0]));
        let mut best = 0.0f64;
        for i in 0..order.len() {
            let mut acc = [0.0; 2];
            for &j in &order[i..] {
                acc[0] += self.errors[j][0];
                acc[1] += self.errors[j][1];
                best = best.max(norm.norm(&acc));
            }
        }
        best
    }

    /// Balls centered at forecasts, pairwise midpoints, and a coarse simplex
    /// lattice; exact in the radius for every candidate center.
    fn balls_max(&self, norm: NormSpec) -> f64 {
        let k = self.points[0].len();
        let m = self.points.len();
        let mut centers = self.points.clone();
        for a in 0..m {
            for b in a + 1..m {
                centers.push(self.points[a].iter().zip(&self.points[b]).map(|(u, v)| 0.5 * (u + v)).collect());
            }
        }
        if lattice_size(k, CENTER_LATTICE_RES) <= CENTER_LATTICE_CAP {
            centers.extend(simplex_grid(k, CENTER_LATTICE_RES));
        }
        let mut best = 0.0f64;
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(m);
        for c in &centers {
            dist.clear();
            for (i, p) in self.points.iter().enumerate() {
                let d: Vec<f64> = p.iter().zip(c).map(|(u, v)| u - v).collect();
                dist.push((norm.norm(&d), i));
            }
            dist.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut acc = vec![0.0; k];
            for (n, &(d, i)) in dist.iter().enumerate() {
                for (a, e) in acc.iter_mut().zip(&self.errors[i]) {
                    *a += e;
                }
                if n + 1 == dist.len() || dist[n + 1].0 > d {
                    best = best.max(norm.norm(&acc));
                }
            }
        }
        best
    }
}

const CENTER_LATTICE_RES: usize = 24;
const CENTER_LATTICE_CAP: usize = 4096;

fn lattice_size(k: usize, res: usize) -> usize {
    // C(res + k − 1, k − 1), saturating.
    let mut c: u128 = 1;
    for i in 1..k as u128 {
        c = c * (res as u128 + i) / i;
        if c > u64::MAX as u128 {
            return usize::MAX;
        }
    }
    c as usize
}

/// sup over balls {f : ‖f − p‖ ≤ λ} of ‖(1/T) Σ_{f_t in ball} (f_t − e_{x_t})‖.
///
/// Exact for k = 2. For k ≥ 3 the supremum over centers is taken over
/// forecasts, their midpoints and a resolution-24 lattice, so the value is a
/// lower bound that is exact in λ.
pub fn calibration_regret(t: &CalibrationTranscript, norm: NormSpec) -> Result<f64> {
    if t.is_empty() {
        return Err(Error::Precondition("calibration regret needs a nonempty transcript".into()));
    }
    norm.validate()?;
    let mut sums = ErrorSums::default();
    for (f, &x) in t.forecasts.iter().zip(&t.outcomes) {
        sums.push(f, x);
    }
    Ok(sums.regret(norm))
}

/// Greedy maximal 2δ-packing of Δ(k) in L1 over a lattice of step ≤ δ/4.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSimplex {
    pub delta: f64,
    pub resolution: usize,
    pub points: Vec<Vec<f64>>,
}

impl GridSimplex {
    pub fn new(k: usize, delta: f64, budget: u64) -> Result<Self> {
        if k == 0 {
            return Err(invalid(".k", "need k ≥ 1"));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(".delta", format!("δ must be positive, got {delta}")));
        }
        let resolution = (4.0 / delta).ceil().max(1.0) as usize;
        let size = lattice_size(k, resolution);
        if size as u64 > budget || size == usize::MAX {
            return Err(Error::Budget { required: size as f64, budget });
        }
        let mut points: Vec<Vec<f64>> = Vec::new();
        for p in simplex_grid(k, resolution) {
            if points.iter().all(|c| l1(c, &p) > 2.0 * delta) {
                if (points.len() * k) as u64 >= budget {
                    return Err(Error::Budget { required: ((points.len() + 1) * k) as f64, budget });
                }
                points.push(p);
            }
        }
        Ok(GridSimplex { delta, resolution, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum()
}

/// Blackwell's strategy for the vector payoff 1{f = c}(c − e_x), target {0}.
#[derive(Clone, Debug)]
pub struct CalibratedForecaster {
    grid: GridSimplex,
    k: usize,
    sums: Vec<Vec<f64>>,
    active: bool,
}

pub const DEFAULT_CELL_BUDGET: u64 = 10_000_000;

/// Forecaster for horizon T with δ defaulting to T^{-1/2}.
pub fn calibrated_forecaster(k: usize, delta: Option<f64>, horizon: usize) -> Result<CalibratedForecaster> {
    let delta = delta.unwrap_or_else(|| (horizon.max(1) as f64).powf(-0.5));
    CalibratedForecaster::new(k, delta, DEFAULT_CELL_BUDGET)
}

impl CalibratedForecaster {
    pub fn new(k: usize, delta: f64, budget: u64) -> Result<Self> {
        let grid = GridSimplex::new(k, delta, budget)?;
        let sums = vec![vec![0.0; k]; grid.len()];
        Ok(CalibratedForecaster { grid, k, sums, active: false })
    }

    pub fn grid(&self) -> &GridSimplex {
        &self.grid
    }

    pub fn forecast(&self, cell: usize) -> &[f64] {
        &self.grid.points[cell]
    }

    /// M[c][x] = ⟨s_c, c − e_x⟩ with s_c the running error sum of cell c.
    fn criterion(&self) -> Vec<Vec<f64>> {
        self.grid
            .points
            .iter()
            .zip(&self.sums)
            .map(|(c, s)| {
                let base: f64 = c.iter().zip(s).map(|(a, b)| a * b).sum();
                (0..self.k).map(|x| base - s[x]).collect()
            })
            .collect()
    }

    /// Mixture over grid cells for the next round.
    pub fn strategy(&self) -> Result<MixedStrategy> {
        Ok(self.strategy_and_criterion()?.0)
    }

    fn strategy_and_criterion(&self) -> Result<(MixedStrategy, Option<Vec<Vec<f64>>>)> {
        let n = self.grid.len();
        if !self.active {
            return Ok((MixedStrategy::uniform(n), None));
        }
        let m = self.criterion();
        let q = if self.k == 2 { two_column_minimax(&m) } else { solve_matrix_game(&m)?.row.weights().to_vec() };
        Ok((MixedStrategy::normalized(q), Some(m)))
    }

    pub fn observe(&mut self, cell: usize, outcome: usize) {
        let c = &self.grid.points[cell];
        for (j, s) in self.sums[cell].iter_mut().enumerate() {
            *s += c[j] - if j == outcome { 1.0 } else { 0.0 };
        }
        self.active = self.sums.iter().flatten().any(|v| v.abs() > 1e-12);
    }
}

/// Row mixture minimizing max(Σ q u, Σ q v) for columns u = m[·][0], v = m[·][1].
///
/// The value is max_λ min_c (v_c + λ(u_c − v_c)) over λ ∈ [0,1]; the lower
/// envelope of these lines gives the optimal λ and its two active rows.
fn two_column_minimax(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut lines: Vec<(f64, f64, usize)> = m.iter().enumerate().map(|(i, r)| (r[0] - r[1], r[1], i)).collect();
    lines.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    lines.dedup_by(|b, a| a.0 == b.0);
    let cross = |a: &(f64, f64, usize), b: &(f64, f64, usize)| (b.1 - a.1) / (a.0 - b.0);
    let mut env: Vec<(f64, f64, usize)> = Vec::new();
    for l in lines {
        while env.len() >= 2 && cross(&env[env.len() - 2], &l) <= cross(&env[env.len() - 2], &env[env.len() - 1]) {
            env.pop();
        }
        env.push(l);
    }
    let start = |i: usize| if i == 0 { f64::NEG_INFINITY } else { cross(&env[i - 1], &env[i]) };
    let active_at = |lam: f64| (0..env.len()).rev().find(|&i| start(i) <= lam).unwrap_or(0);
    let mut q = vec![0.0; n];
    let pure = |q: &mut Vec<f64>, i: usize| q[env[i].2] = 1.0;
    match env.iter().position(|l| l.0 < 0.0) {
        None => pure(&mut q, active_at(1.0)),
        Some(0) => pure(&mut q, active_at(0.0)),
        Some(i) => {
            let b = start(i);
            if b <= 0.0 {
                pure(&mut q, active_at(0.0));
            } else if b >= 1.0 {
                // Ties at λ = 1 must resolve to a line of nonnegative slope.
                pure(&mut q, (0..i).rev().find(|&j| start(j) <= 1.0).unwrap_or(0));
            } else {
                let (up, down) = (env[i - 1], env[i]);
                let mu = -down.0 / (up.0 - down.0);
                q[up.2] += mu;
                q[down.2] += 1.0 - mu;
            }
        }
    }
    q
}

#[derive(Clone, Debug, PartialEq)]
pub enum CalibrationAdversary {
    Constant(usize),
    /// Outcomes drawn uniformly at random.
    IidUniform,
    /// Random outcome drawn with P(x) ∝ 1 − E_q[f_x], against the current mixture.
    Adaptive,
    /// Deterministic maximizer of the forecaster's Blackwell criterion.
    BestResponse,
}

impl CalibrationAdversary {
    pub fn named(s: &str) -> Result<Self> {
        match s {
            "iid" | "iid-uniform" => Ok(CalibrationAdversary::IidUniform),
            "adaptive" => Ok(CalibrationAdversary::Adaptive),
            "best-response" => Ok(CalibrationAdversary::BestResponse),
            _ => match s.strip_prefix("constant:").map(str::parse) {
                Some(Ok(x)) => Ok(CalibrationAdversary::Constant(x)),
                _ => Err(Error::Unknown(format!("calibration adversary {s:?}"))),
            },
        }
    }

    fn choose(&self, fc: &CalibratedForecaster, q: &MixedStrategy, m: Option<&Vec<Vec<f64>>>, rng: &mut ChaCha8Rng) -> usize {
        let k = fc.k;
        match self {
            CalibrationAdversary::Constant(x) => *x,
            CalibrationAdversary::IidUniform => rng.gen_range(0..k),
            CalibrationAdversary::Adaptive => {
                let mut w = vec![1.0; k];
                for (qc, c) in q.weights().iter().zip(&fc.grid.points) {
                    for (wi, ci) in w.iter_mut().zip(c) {
                        *wi -= qc * ci;
                    }
                }
                if k == 1 {
                    return 0;
                }
                MixedStrategy::normalized(w.iter().map(|v| v.max(0.0)).collect()).sample(rng.gen::<f64>())
            }
            CalibrationAdversary::BestResponse => match m {
                None => rng.gen_range(0..k),
                Some(m) => {
                    let score = |x: usize| q.weights().iter().zip(m).map(|(w, r)| w * r[x]).sum::<f64>();
                    (0..k).fold(0, |b, x| if score(x) > score(b) { x } else { b })
                }
            },
        }
    }
}

/// Plays the forecaster for `horizon` rounds.
pub fn run_calibration(
    forecaster: &mut CalibratedForecaster,
    adversary: &CalibrationAdversary,
    horizon: usize,
    seed: u64,
) -> Result<CalibrationTranscript> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CalibrationTranscript::default();
    for _ in 0..horizon {
        let (q, m) = forecaster.strategy_and_criterion()?;
        let x = adversary.choose(forecaster, &q, m.as_ref(), &mut rng);
        if x >= forecaster.k {
            return Err(invalid(".adversary", format!("outcome {x} out of range")));
        }
        let cell = q.sample(rng.gen::<f64>());
        forecaster.observe(cell, x);
        out.forecasts.push(forecaster.forecast(cell).to_vec());
        out.outcomes.push(x);
    }
    Ok(out)
}

/// Restarts a calibrated forecaster with horizon 2^r and δ_r = 2^{-r/2} at
/// 1-based rounds 2^r − 1, r = 1, 2, ….
#[derive(Clone, Debug)]
pub struct DoublingForecaster {
    k: usize,
    episode: u32,
    remaining: usize,
    inner: CalibratedForecaster,
}

impl DoublingForecaster {
    pub fn new(k: usize) -> Result<Self> {
        Ok(DoublingForecaster { k, episode: 1, remaining: 2, inner: Self::episode_forecaster(k, 1)? })
    }

    fn episode_forecaster(k: usize, r: u32) -> Result<CalibratedForecaster> {
        CalibratedForecaster::new(k, 2f64.powf(-(r as f64) / 2.0), DEFAULT_CELL_BUDGET)
    }

    pub fn episode(&self) -> u32 {
        self.episode
    }

    fn advance(&mut self) -> Result<()> {
        if self.remaining == 0 {
            self.episode += 1;
            self.remaining = 1usize << self.episode;
            self.inner = Self::episode_forecaster(self.k, self.episode)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DoublingRun {
    #[serde(skip)]
    pub transcript: CalibrationTranscript,
    /// (t, calibration regret of the first t rounds).
    pub trace: Vec<(usize, f64)>,
    /// 1-based rounds at which an episode starts.
    pub episode_starts: Vec<usize>,
}

/// Runs the doubling forecaster, recording regret every `stride` rounds and at the end.
pub fn run_doubling(
    k: usize,
    adversary: &CalibrationAdversary,
    horizon: usize,
    seed: u64,
    stride: usize,
    norm: NormSpec,
) -> Result<DoublingRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fc = DoublingForecaster::new(k)?;
    let mut sums = ErrorSums::default();
    let mut run = DoublingRun { transcript: CalibrationTranscript::default(), trace: Vec::new(), episode_starts: vec![1] };
    for t in 1..=horizon {
        fc.advance()?;
        if fc.remaining == 1usize << fc.episode && t > 1 {
            run.episode_starts.push(t);
        }
        let (q, m) = fc.inner.strategy_and_criterion()?;
        let x = adversary.choose(&fc.inner, &q, m.as_ref(), &mut rng);
        let cell = q.sample(rng.gen::<f64>());
        fc.inner.observe(cell, x);
        fc.remaining -= 1;
        let f = fc.inner.forecast(cell).to_vec();
        sums.push(&f, x);
        run.transcript.forecasts.push(f);
        run.transcript.outcomes.push(x);
        if t % stride.max(1) == 0 || t == horizon {
            run.trace.push((t, sums.regret(norm)));
        }
    }
    Ok(run)
}

/// CSV trace with columns t, regret_so_far.
pub fn write_trace<W: Write>(trace: &[(usize, f64)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "regret_so_far"]).map_err(csv_err)?;
    for (t, r) in trace {
        out.write_record([t.to_string(), r.to_string()]).map_err(csv_err)?;
    }
    out.flush().map_err(|e| csv_err(e.into()))
}
