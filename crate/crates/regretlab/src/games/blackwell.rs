//! One-shot approachability and Blackwell's projection player.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::game_model::{distance_to_set, MixedStrategy, NormSpec, PayoffTable, TargetSet};
use crate::lp::solve_matrix_game;
use crate::seq_complexity::simplex_grid;

const INSIDE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct OneShotReport {
    pub approachable_margin: f64,
    pub worst_p: Vec<f64>,
    pub caveat: String,
}

/// Max over grid p of min over q of dist(E_{q,p} ℓ, S).
///
/// conv{m_f} and conv(S) are at distance dist(0, conv{m_f − s}), so each
/// grid point is one distance-to-hull call.
pub fn one_shot_check(table: &PayoffTable, s: &TargetSet, norm: NormSpec, p_grid_res: usize) -> Result<OneShotReport> {
    let k = table.k();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for p in simplex_grid(table.nx(), p_grid_res.max(1)) {
        let mut diffs = Vec::with_capacity(table.nf() * s.vertices().len());
        for f in 0..table.nf() {
            let mut m = vec![0.0; k];
            for (x, &px) in p.iter().enumerate() {
                for (mi, v) in m.iter_mut().zip(table.get(f, x)) {
                    *mi += px * v;
                }
            }
            for v in s.vertices() {
                diffs.push(m.iter().zip(v).map(|(a, b)| a - b).collect());
            }
        }
        let (d, _) = distance_to_set(&vec![0.0; k], &TargetSet::new(diffs)?, norm)?;
        if d > best.0 {
            best = (d, p);
        }
    }
    Ok(OneShotReport {
        approachable_margin: best.0.max(0.0),
        worst_p: best.1,
        caveat: format!("adversary mixtures checked on a resolution-{p_grid_res} grid only"),
    })
}

/// Blackwell's projection strategy on the running average payoff.
#[derive(Clone, Debug)]
pub struct BlackwellPlayer {
    table: PayoffTable,
    set: TargetSet,
    norm: NormSpec,
    sum: Vec<f64>,
    rounds: usize,
}

impl BlackwellPlayer {
    pub fn new(table: PayoffTable, set: TargetSet, norm: NormSpec) -> Self {
        let sum = vec![0.0; table.k()];
        BlackwellPlayer { table, set, norm, sum, rounds: 0 }
    }

    pub fn average(&self) -> Vec<f64> {
        let n = self.rounds.max(1) as f64;
        self.sum.iter().map(|v| v / n).collect()
    }

    pub fn distance(&self) -> Result<f64> {
        Ok(distance_to_set(&self.average(), &self.set, self.norm)?.0)
    }

    /// Separating direction ā − Proj(ā) and the projection, or None inside S.
    fn direction(&self) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        if self.rounds == 0 {
            return Ok(None);
        }
        let avg = self.average();
        let (d, proj) = distance_to_set(&avg, &self.set, self.norm)?;
        if d <= INSIDE_TOL {
            return Ok(None);
        }
        let dir = avg.iter().zip(&proj).map(|(a, p)| a - p).collect();
        Ok(Some((dir, proj)))
    }

    fn criterion(&self, dir: &[f64], proj: &[f64]) -> Vec<Vec<f64>> {
        (0..self.table.nf())
            .map(|f| {
                (0..self.table.nx())
                    .map(|x| self.table.get(f, x).iter().zip(dir).zip(proj).map(|((l, d), p)| d * (l - p)).sum())
                    .collect()
            })
            .collect()
    }

    /// Mixed action for the next round.
    pub fn strategy(&self) -> Result<MixedStrategy> {
        match self.direction()? {
            None => Ok(MixedStrategy::uniform(self.table.nf())),
            Some((dir, proj)) => Ok(solve_matrix_game(&self.criterion(&dir, &proj))?.row),
        }
    }

    pub fn observe(&mut self, f: usize, x: usize) {
        for (s, v) in self.sum.iter_mut().zip(self.table.get(f, x)) {
            *s += v;
        }
        self.rounds += 1;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BlackwellAdversary {
    /// Maximizes the expected Blackwell criterion against the player's mixture.
    BestResponse,
    Constant(usize),
    Uniform,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlackwellRun {
    /// (t, distance of ā_t to S) at the recorded rounds.
    pub trace: Vec<(usize, f64)>,
    pub final_distance: f64,
}

impl BlackwellRun {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "distance_to_S"]).map_err(io)?;
        for (t, d) in &self.trace {
            out.write_record([t.to_string(), d.to_string()]).map_err(io)?;
        }
        out.flush().map_err(|e| io(e.into()))
    }
}

fn io(e: csv::Error) -> crate::Error {
    crate::Error::Validation { path: String::new(), msg: e.to_string() }
}

/// Plays `horizon` rounds, recording the distance every `stride` rounds and at the end.
pub fn run_blackwell(
    table: &PayoffTable,
    set: &TargetSet,
    norm: NormSpec,
    adversary: &BlackwellAdversary,
    horizon: usize,
    seed: u64,
    stride: usize,
) -> Result<BlackwellRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut player = BlackwellPlayer::new(table.clone(), set.clone(), norm);
    let mut trace = Vec::new();
    for t in 1..=horizon {
        let dir = player.direction()?;
        let q = match &dir {
            None => MixedStrategy::uniform(table.nf()),
            Some((d, p)) => solve_matrix_game(&player.criterion(d, p))?.row,
        };
        let x = match adversary {
            BlackwellAdversary::Constant(x) => *x,
            BlackwellAdversary::Uniform => rng.gen_range(0..table.nx()),
            BlackwellAdversary::BestResponse => match &dir {
                None => 0,
                Some((d, p)) => {
                    let m = player.criterion(d, p);
                    let score = |x: usize| q.weights().iter().zip(&m).map(|(w, row)| w * row[x]).sum::<f64>();
                    (0..table.nx()).fold(0, |b, x| if score(x) > score(b) + 1e-15 { x } else { b })
                }
            },
        };
        let f = q.sample(rng.gen::<f64>());
        player.observe(f, x);
        if t % stride.max(1) == 0 || t == horizon {
            trace.push((t, player.distance()?));
        }
    }
    let final_distance = trace.last().map_or(0.0, |p| p.1);
    Ok(BlackwellRun { trace, final_distance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sign_game() -> PayoffTable {
        PayoffTable::scalar(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap()
    }

    #[test]
    fn one_shot_sign_game() {
        let r = one_shot_check(&sign_game(), &TargetSet::origin(1), NormSpec::L1, 8).unwrap();
        assert!(r.approachable_margin < 1e-9);
    }

    #[test]
    fn one_shot_unreachable_point() {
        // At p = (1/2,1/2) every mean payoff is 0, at distance 3 from the point.
        let s = TargetSet::new(vec![vec![3.0]]).unwrap();
        let r = one_shot_check(&sign_game(), &s, NormSpec::Linf, 4).unwrap();
        assert!((r.approachable_margin - 3.0).abs() < 1e-9);
        assert_eq!(r.worst_p, vec![0.5, 0.5]);
        let t = PayoffTable::from_fn(2, 2, 2, |f, x| vec![f as f64, x as f64]).unwrap();
        let s = TargetSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let coarse = one_shot_check(&t, &s, NormSpec::L2, 2).unwrap();
        let fine = one_shot_check(&t, &s, NormSpec::L2, 4).unwrap();
        assert!((coarse.approachable_margin - 1.0).abs() < 1e-9);
        assert!(fine.approachable_margin >= coarse.approachable_margin - 1e-12);
    }

    #[test]
    fn sign_game_approaches_zero() {
        for seed in 0..3 {
            let r = run_blackwell(
                &sign_game(),
                &TargetSet::origin(1),
                NormSpec::L1,
                &BlackwellAdversary::BestResponse,
                10_000,
                seed,
                1000,
            )
            .unwrap();
            assert!(r.final_distance <= 0.05, "seed {seed}: {}", r.final_distance);
            assert_eq!(r.trace.len(), 10);
        }
    }

    #[test]
    fn inside_target_plays_default() {
        // Every payoff lies in S, so the player never leaves the default.
        let t = PayoffTable::scalar(&[vec![0.2, 0.4], vec![0.6, 0.1]]).unwrap();
        let s = TargetSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let mut p = BlackwellPlayer::new(t.clone(), s.clone(), NormSpec::L2);
        for (f, x) in [(0, 1), (1, 0), (1, 1)] {
            assert_eq!(p.strategy().unwrap(), MixedStrategy::uniform(2));
            p.observe(f, x);
            assert_eq!(p.distance().unwrap(), 0.0);
        }
        let r = run_blackwell(&t, &s, NormSpec::L2, &BlackwellAdversary::Uniform, 200, 1, 50).unwrap();
        assert!(r.trace.iter().all(|&(_, d)| d == 0.0));
    }

    #[test]
    fn direction_pushes_back() {
        // After an excursion above S the player must put weight on the row that
        // lowers the average against both columns.
        let t = PayoffTable::scalar(&[vec![1.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let mut p = BlackwellPlayer::new(t, TargetSet::origin(1), NormSpec::L2);
        p.observe(0, 0);
        assert_eq!(p.strategy().unwrap().weights(), &[0.0, 1.0]);
    }

    #[test]
    fn expected_distance_decreases() {
        let mean = |t: usize| {
            (0..20)
                .map(|s| {
                    run_blackwell(&sign_game(), &TargetSet::origin(1), NormSpec::L1, &BlackwellAdversary::BestResponse, t, s, t)
                        .unwrap()
                        .final_distance
                })
                .sum::<f64>()
                / 20.0
        };
        let ds: Vec<f64> = [100, 400, 1600, 6400].iter().map(|&t| mean(t)).collect();
        for w in ds.windows(2) {
            assert!(w[1] <= w[0] + 0.02, "{ds:?}");
        }
    }

    #[test]
    fn trace_csv() {
        let r = run_blackwell(&sign_game(), &TargetSet::origin(1), NormSpec::L1, &BlackwellAdversary::Constant(0), 4, 0, 2)
            .unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 3);
        assert!(s.starts_with("t,distance_to_S\n2,"));
    }
}
