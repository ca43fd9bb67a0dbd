//! Adaptive regret over time intervals and its encoding as a regret game.

use crate::error::{invalid, Error, Result};
use crate::game_model::{Aggregator, GameSpec, History, PayoffTable, TransformSet, TransformStep};

fn check_maps(nf: usize, psi: &[Vec<usize>]) -> Result<()> {
    if psi.is_empty() {
        return Err(invalid(".psi", "need at least one map"));
    }
    for (i, m) in psi.iter().enumerate() {
        if m.len() != nf || m.iter().any(|&g| g >= nf) {
            return Err(invalid(format!(".psi[{i}]"), "not a map F → F"));
        }
    }
    Ok(())
}

/// max over intervals [r,s] of (1/T)(Σ loss(f_t,x_t) − min_ψ Σ loss(ψ(f_t),x_t)).
pub fn adaptive_regret(loss: &PayoffTable, h: &History, psi: &[Vec<usize>]) -> Result<f64> {
    if loss.k() != 1 {
        return Err(Error::Dimension { expected: 1, got: loss.k() });
    }
    check_maps(loss.nf(), psi)?;
    let t = h.len();
    if t == 0 {
        return Err(Error::Precondition("adaptive regret needs a nonempty history".into()));
    }
    if let Some(i) = h.rounds.iter().position(|&(f, x)| f >= loss.nf() || x >= loss.nx()) {
        return Err(invalid(format!("history[{i}]"), "action out of range"));
    }
    let prefix = |g: &dyn Fn(usize) -> usize| {
        let mut p = vec![0.0; t + 1];
        for (i, &(f, x)) in h.rounds.iter().enumerate() {
            p[i + 1] = p[i] + loss.get(g(f), x)[0];
        }
        p
    };
    let played = prefix(&|f| f);
    let dev: Vec<Vec<f64>> = psi.iter().map(|m| prefix(&|f| m[f])).collect();
    let mut best = f64::NEG_INFINITY;
    for r in 0..t {
        for s in r + 1..=t {
            let alt = dev.iter().map(|p| p[s] - p[r]).fold(f64::INFINITY, f64::min);
            best = best.max(played[s] - played[r] - alt);
        }
    }
    Ok(best / t as f64)
}

/// Zero base payoff with one transform sequence per (interval, ψ); inside the
/// interval the step payoff is −loss(f,x) + loss(ψ(f),x), outside it is 0.
pub fn make_adaptive_game(loss: &PayoffTable, psi: &[Vec<usize>], t: usize, budget: u64) -> Result<GameSpec> {
    if loss.k() != 1 {
        return Err(Error::Dimension { expected: 1, got: loss.k() });
    }
    check_maps(loss.nf(), psi)?;
    let count = (t * (t + 1) / 2) as f64 * psi.len() as f64;
    if count > budget as f64 {
        return Err(Error::Budget { required: count, budget });
    }
    let (nf, nx) = (loss.nf(), loss.nx());
    let mut steps = vec![TransformStep::PayoffOverride(PayoffTable::from_fn(nf, nx, 1, |_, _| vec![0.0])?)];
    for m in psi {
        let o = PayoffTable::from_fn(nf, nx, 1, |f, x| vec![loss.get(m[f], x)[0] - loss.get(f, x)[0]])?;
        steps.push(TransformStep::PayoffOverride(o));
    }
    let mut seqs = Vec::with_capacity(count as usize);
    for j in 0..psi.len() {
        for r in 0..t {
            for s in r..t {
                seqs.push((0..t).map(|u| if (r..=s).contains(&u) { j + 1 } else { 0 }).collect());
            }
        }
    }
    let zero = PayoffTable::from_fn(nf, nx, 1, |_, _| vec![0.0])?;
    GameSpec::indexed(zero, Aggregator::Average, TransformSet::new(steps, seqs)?, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::regret_of_history;
    use crate::games::{internal_maps, swap_maps};
    use crate::value_engine::{exact_value, EngineOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_histories(nf: usize, nx: usize, t: usize) -> Vec<History> {
        let n = (nf * nx).pow(t as u32);
        (0..n)
            .map(|mut i| {
                History::new(
                    (0..t)
                        .map(|_| {
                            let c = i % (nf * nx);
                            i /= nf * nx;
                            (c / nx, c % nx)
                        })
                        .collect(),
                )
            })
            .collect()
    }

    #[test]
    fn identity_only_is_zero() {
        let loss = PayoffTable::scalar(&[vec![0.2, 0.9], vec![0.5, 0.1]]).unwrap();
        let h = History::new(vec![(0, 1), (1, 0), (1, 1)]);
        assert_eq!(adaptive_regret(&loss, &h, &[vec![0, 1]]).unwrap(), 0.0);
        let g = make_adaptive_game(&loss, &[vec![0, 1]], 2, 1000).unwrap();
        assert_eq!(exact_value(&g, &EngineOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn full_interval_example() {
        // Played action always costs 1, the other always 0.
        let loss = PayoffTable::scalar(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let h = History::new(vec![(0, 0); 4]);
        assert_eq!(adaptive_regret(&loss, &h, &internal_maps(2)).unwrap(), 1.0);
    }

    #[test]
    fn dominates_phi_regret() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let loss = PayoffTable::from_fn(3, 2, 1, |_, _| vec![rng.gen::<f64>()]).unwrap();
            let h = History::new((0..6).map(|_| (rng.gen_range(0..3), rng.gen_range(0..2))).collect());
            let psi = swap_maps(3, 100).unwrap();
            let whole: f64 = h.rounds.iter().map(|&(f, x)| loss.get(f, x)[0]).sum::<f64>()
                - psi.iter().map(|m| h.rounds.iter().map(|&(f, x)| loss.get(m[f], x)[0]).sum::<f64>()).fold(f64::INFINITY, f64::min);
            assert!(adaptive_regret(&loss, &h, &psi).unwrap() >= whole / 6.0 - 1e-12);
        }
    }

    #[test]
    fn encoding_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for t in 1..=3 {
            for _ in 0..5 {
                let loss = PayoffTable::from_fn(2, 2, 1, |_, _| vec![rng.gen_range(0..=4) as f64 / 4.0]).unwrap();
                let psi = internal_maps(2);
                let g = make_adaptive_game(&loss, &psi, t, 1000).unwrap();
                assert_eq!(g.transforms.len(), t * (t + 1) / 2 * psi.len());
                for h in all_histories(2, 2, t) {
                    let a = regret_of_history(&g, &h).unwrap();
                    let b = adaptive_regret(&loss, &h, &psi).unwrap();
                    assert!((a - b).abs() < 1e-12, "{h:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn interval_count() {
        let loss = PayoffTable::scalar(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(make_adaptive_game(&loss, &[vec![0, 1]], 2, 100).unwrap().transforms.len(), 3);
        assert!(matches!(make_adaptive_game(&loss, &[vec![0, 1]], 100, 100), Err(Error::Budget { .. })));
    }
}
