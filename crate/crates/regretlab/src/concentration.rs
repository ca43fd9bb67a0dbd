//! Martingale tail bounds as calculators, and Monte Carlo checks of the
//! Pinelis tail against Walsh-Paley martingales.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::CoverTable;
use crate::error::{invalid, Error, Result};
use crate::game_model::{NormSpec, ValuedTree};
use crate::lower_bounds::{walsh_paley_sup, WpMode};
use crate::par::{self, Exec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConcentrationKind {
    /// 2exp(−Tθ²/(2c)).
    Azuma {
        #[serde(rename = "T")]
        t: f64,
        theta: f64,
        c: f64,
    },
    /// The per-step supermartingale factor c = 1 + σ(e^{λB} − 1 − λB).
    PinelisStep { sigma: f64, lambda: f64, b: f64 },
    /// 2c^T.
    PinelisMgf {
        sigma: f64,
        lambda: f64,
        b: f64,
        #[serde(rename = "T")]
        t: f64,
    },
    /// 2exp(−ε²/(4TσB²)), valid for T > ε/(2σB).
    PinelisTail {
        sigma: f64,
        b: f64,
        #[serde(rename = "T")]
        t: f64,
        eps: f64,
    },
    /// 2B·sqrt(σ log(2|Γ|) T), valid for T ≥ log(2|Γ|)/σ.
    PinelisMaxExp {
        sigma: f64,
        b: f64,
        #[serde(rename = "T")]
        t: f64,
        gamma: f64,
    },
    /// a + (sqrt(log 2N) + 1)·sqrt(4/b).
    ProbToExp { a: f64, b: f64, n: f64 },
    /// 2exp(−ν²T^{2−2/p}/(2σ^{2/p} log³T)) for the event
    /// ‖(1/T)Σ ε_t x_t‖ > 128(σ^{1/p}R/T^{1−1/p} + νR); see [`smooth_tail_threshold`].
    SmoothTail {
        sigma: f64,
        p: f64,
        #[serde(rename = "T")]
        t: f64,
        nu: f64,
        r: f64,
    },
    /// exp(−(θ^q − σTℛ^p/p)²/(2ℛ²R²T)), valid for θ^q > σTℛ^p/p.
    Gensmooth {
        theta: f64,
        q: f64,
        sigma: f64,
        #[serde(rename = "T")]
        t: f64,
        p: f64,
        r_h: f64,
        r: f64,
    },
}

fn pos(v: f64, name: &str) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(name, "must be positive and finite"))
    }
}

fn nonneg(v: f64, name: &str) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(invalid(name, "must be nonnegative and finite"))
    }
}

fn smooth_p(p: f64) -> Result<f64> {
    if p.is_finite() && p > 1.0 && p <= 2.0 {
        Ok(p)
    } else {
        Err(invalid("p", "smoothness exponent must lie in (1, 2]"))
    }
}

/// The Pinelis constants take σ ≥ 1.
fn pinelis_sigma(s: f64) -> Result<f64> {
    Ok(nonneg(s, "sigma")?.max(1.0))
}

fn pinelis_c(sigma: f64, lambda: f64, b: f64) -> Result<f64> {
    let s = pinelis_sigma(sigma)?;
    let lb = nonneg(lambda, "lambda")? * nonneg(b, "b")?;
    Ok(1.0 + s * lb.exp_m1() - s * lb)
}

pub fn concentration_bound(kind: &ConcentrationKind) -> Result<f64> {
    match *kind {
        ConcentrationKind::Azuma { t, theta, c } => {
            Ok(2.0 * (-pos(t, "T")? * nonneg(theta, "theta")?.powi(2) / (2.0 * pos(c, "c")?)).exp())
        }
        ConcentrationKind::PinelisStep { sigma, lambda, b } => pinelis_c(sigma, lambda, b),
        ConcentrationKind::PinelisMgf { sigma, lambda, b, t } => {
            Ok(2.0 * pinelis_c(sigma, lambda, b)?.powf(nonneg(t, "T")?))
        }
        ConcentrationKind::PinelisTail { sigma, b, t, eps } => {
            let (s, b, t, eps) = (pinelis_sigma(sigma)?, pos(b, "b")?, pos(t, "T")?, nonneg(eps, "eps")?);
            if t <= eps / (2.0 * s * b) {
                return Err(Error::Validity(format!("pinelis_tail needs T > eps/(2 sigma B); T = {t}, eps/(2 sigma B) = {}", eps / (2.0 * s * b))));
            }
            Ok(2.0 * (-eps * eps / (4.0 * t * s * b * b)).exp())
        }
        ConcentrationKind::PinelisMaxExp { sigma, b, t, gamma } => {
            let (s, b, t) = (pinelis_sigma(sigma)?, nonneg(b, "b")?, pos(t, "T")?);
            if !(gamma >= 1.0) || !gamma.is_finite() {
                return Err(invalid("gamma", "|Gamma| must be at least 1"));
            }
            let l = (2.0 * gamma).ln();
            if t < l / s {
                return Err(Error::Validity(format!("pinelis_max_exp needs T >= log(2|Gamma|)/sigma = {}", l / s)));
            }
            Ok(2.0 * b * (s * l * t).sqrt())
        }
        ConcentrationKind::ProbToExp { a, b, n } => {
            let (a, b) = (nonneg(a, "a")?, pos(b, "b")?);
            if !(n >= 1.0) || !n.is_finite() {
                return Err(invalid("n", "N must be at least 1"));
            }
            Ok(a + ((2.0 * n).ln().sqrt() + 1.0) * (4.0 / b).sqrt())
        }
        ConcentrationKind::SmoothTail { sigma, p, t, nu, r } => {
            let (s, p, nu) = (pos(sigma, "sigma")?, smooth_p(p)?, nonneg(nu, "nu")?);
            pos(r, "r")?;
            let t = smooth_t(t)?;
            let lt = t.ln();
            let floor = 8.0 * s.powf(1.0 / p) * lt.powf(1.5) / t.powf(1.0 - 1.0 / p);
            if nu <= floor {
                return Err(Error::Validity(format!("smooth_tail needs nu > 8 sigma^(1/p) log^(3/2) T / T^(1-1/p) = {floor}")));
            }
            Ok(2.0 * (-nu * nu * t.powf(2.0 - 2.0 / p) / (2.0 * s.powf(2.0 / p) * lt.powi(3))).exp())
        }
        ConcentrationKind::Gensmooth { theta, q, sigma, t, p, r_h, r } => {
            let (theta, q, s, t, p) = (nonneg(theta, "theta")?, pos(q, "q")?, nonneg(sigma, "sigma")?, pos(t, "T")?, smooth_p(p)?);
            let (rh, r) = (pos(r_h, "r_h")?, pos(r, "r")?);
            let shift = s * t * rh.powf(p) / p;
            let lead = theta.powf(q);
            if lead <= shift {
                return Err(Error::Validity(format!("gensmooth needs theta^q > sigma T r_h^p / p = {shift}")));
            }
            Ok((-(lead - shift).powi(2) / (2.0 * rh * rh * r * r * t)).exp())
        }
    }
}

fn smooth_t(t: f64) -> Result<f64> {
    if t.is_finite() && t >= 2.0 {
        Ok(t)
    } else {
        Err(invalid("T", "must be at least 2"))
    }
}

/// The deviation level 128(σ^{1/p}R/T^{1−1/p} + νR) paired with the smooth tail.
pub fn smooth_tail_threshold(sigma: f64, p: f64, t: f64, nu: f64, r: f64) -> Result<f64> {
    let (s, p, t, nu, r) = (pos(sigma, "sigma")?, smooth_p(p)?, smooth_t(t)?, nonneg(nu, "nu")?, pos(r, "r")?);
    Ok(128.0 * (s.powf(1.0 / p) * r / t.powf(1.0 - 1.0 / p) + nu * r))
}

/// Val^θ ≤ 8exp(−T(θ/12)²/(16k) + c k³ log T) for the ℓ1 calibration game, θ > 3/T.
pub fn highprob_calibration(k: usize, t: f64, theta: f64, c: f64) -> Result<f64> {
    if k < 2 {
        return Err(invalid("k", "need at least two outcomes"));
    }
    let (t, c) = (pos(t, "T")?, nonneg(c, "c")?);
    if !(theta > 3.0 / t) {
        return Err(Error::Validity(format!("highprob_calibration needs theta > 3/T = {}", 3.0 / t)));
    }
    let k = k as f64;
    Ok(8.0 * (-t * (theta / 12.0).powi(2) / (16.0 * k) + c * k.powi(3) * t.ln()).exp())
}

/// Sup-level chained tails over a cover table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainedKind {
    /// Scalar payoffs in [−1,1]: threshold inf{4α + 12θ∫}, probability L e^{−Tθ²/2}, θ > sqrt(8/T).
    Real,
    /// G² (σ,2)-smooth: same threshold, probability L e^{−Tθ²/(4σ)}, θ > sqrt(8σ/T).
    TwoSmooth { sigma: f64 },
    /// (σ,p)-smooth space: threshold 768σ^{1/p}/T^{1−1/p} + inf{4α + 36θ∫},
    /// probability L e^{−θ²T^{2−2/p}/(65536σ^{2/p}log³T)}.
    PSmooth { sigma: f64, p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainedTail {
    pub alpha: f64,
    pub threshold: f64,
    /// Σ_{j≤J} N(2^{-j})^{-1} (doubled for the smooth kinds), J the chaining depth at α.
    pub l_const: f64,
    pub probability: f64,
}

/// Evaluates a chained tail bound with α ranging over the cover-table knots in (0, 1].
pub fn chained_tail(kind: ChainedKind, t: f64, theta: f64, cover: &CoverTable) -> Result<ChainedTail> {
    let t = pos(t, "T")?;
    let theta = nonneg(theta, "theta")?;
    let (mult, shift, floor, rate, l_mult) = match kind {
        ChainedKind::Real => (12.0, 0.0, (8.0 / t).sqrt(), t / 2.0, 1.0),
        ChainedKind::TwoSmooth { sigma } => {
            let s = pos(sigma, "sigma")?;
            (12.0, 0.0, (8.0 * s / t).sqrt(), t / (4.0 * s), 2.0)
        }
        ChainedKind::PSmooth { sigma, p } => {
            let (s, p, t) = (pos(sigma, "sigma")?, smooth_p(p)?, smooth_t(t)?);
            let sp = s.powf(1.0 / p);
            let tp = t.powf(1.0 - 1.0 / p);
            let lt = t.ln();
            (36.0, 768.0 * sp / tp, 1024.0 * sp * lt.powf(1.5) / tp, tp * tp / (65536.0 * sp * sp * lt.powi(3)), 2.0)
        }
    };
    if theta <= floor {
        return Err(Error::Validity(format!("chained tail needs theta > {floor}")));
    }
    let mut alphas: Vec<f64> = cover.knots().iter().copied().filter(|&a| a > 0.0 && a < 1.0).collect();
    alphas.push(1.0);
    let mut best = (1.0, f64::INFINITY);
    for a in alphas {
        let v = 4.0 * a + mult * theta * cover.integral_to_one(a);
        if v < best.1 {
            best = (a, v);
        }
    }
    let alpha = best.0;
    let depth = (1.0 / alpha).log2().ceil().max(1.0) as i32;
    let l_const = l_mult * (1..=depth).map(|j| (-cover.root(0.5f64.powi(j)).powi(2)).exp()).sum::<f64>();
    Ok(ChainedTail { alpha, threshold: shift + best.1, l_const, probability: l_const * (-theta * theta * rate).exp() })
}

// ---------------------------------------------------------------------------
// Walsh-Paley martingales

/// A predictable k-vector increment process x_t(ε_1..ε_{t−1}).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MdsTree {
    Explicit { tree: ValuedTree<Vec<f64>> },
    /// x_t depends on t only.
    PerDepth { steps: Vec<Vec<f64>> },
    /// Pseudo-random node values keyed by a hash of the sign prefix, norms ≤ radius.
    Hashed {
        seed: u64,
        k: usize,
        #[serde(rename = "T")]
        t: usize,
        radius: f64,
    },
    /// x_t = radius · rotation by `angle` (first two coordinates) of S_{t−1}/‖S_{t−1}‖₂, e_1 at S = 0.
    Feedback {
        k: usize,
        #[serde(rename = "T")]
        t: usize,
        radius: f64,
        angle: f64,
    },
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

impl MdsTree {
    pub fn dim(&self) -> usize {
        match self {
            MdsTree::Explicit { tree } => tree.values().first().map_or(0, Vec::len),
            MdsTree::PerDepth { steps } => steps.first().map_or(0, Vec::len),
            MdsTree::Hashed { k, .. } | MdsTree::Feedback { k, .. } => *k,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            MdsTree::Explicit { tree } => tree.depth(),
            MdsTree::PerDepth { steps } => steps.len(),
            MdsTree::Hashed { t, .. } | MdsTree::Feedback { t, .. } => *t,
        }
    }

    fn validate(&self) -> Result<()> {
        let k = self.dim();
        if k == 0 {
            return Err(invalid(".tree", "increments must be nonempty vectors"));
        }
        let rows: &[Vec<f64>] = match self {
            MdsTree::Explicit { tree } => tree.values(),
            MdsTree::PerDepth { steps } => steps,
            MdsTree::Hashed { radius, .. } | MdsTree::Feedback { radius, .. } => {
                nonneg(*radius, ".tree.radius")?;
                &[]
            }
        };
        if rows.iter().any(|v| v.len() != k || v.iter().any(|x| !x.is_finite())) {
            return Err(invalid(".tree", "increments must be finite vectors of equal length"));
        }
        if let MdsTree::Feedback { angle, .. } = self {
            if !angle.is_finite() {
                return Err(invalid(".tree.angle", "must be finite"));
            }
        }
        Ok(())
    }

    /// Largest increment norm (the radius for generated trees).
    fn step_bound(&self, norm: NormSpec) -> f64 {
        let max = |rows: &[Vec<f64>]| rows.iter().map(|v| norm.norm(v)).fold(0.0, f64::max);
        match self {
            MdsTree::Explicit { tree } => max(tree.values()),
            MdsTree::PerDepth { steps } => max(steps),
            MdsTree::Hashed { radius, k, .. } => *radius * norm_scale(norm, *k),
            MdsTree::Feedback { radius, k, .. } => *radius * norm_scale(norm, *k),
        }
    }

    /// Adds Σ ε_t x_t(ε) for the given sign draw into `s` (zeroed first).
    fn walk(&self, s: &mut [f64], mut sign: impl FnMut() -> bool) {
        s.iter_mut().for_each(|v| *v = 0.0);
        let k = s.len();
        match self {
            MdsTree::Explicit { tree } => {
                let mut prefix = 0u64;
                for t in 0..tree.depth() {
                    let e = sign();
                    let x = tree.at(t, prefix);
                    add(s, x, e);
                    prefix = (prefix << 1) | e as u64;
                }
            }
            MdsTree::PerDepth { steps } => {
                for x in steps {
                    add(s, x, sign());
                }
            }
            MdsTree::Hashed { seed, t, radius, .. } => {
                let mut h = mix(*seed);
                let mut x = vec![0.0; k];
                for _ in 0..*t {
                    for (i, v) in x.iter_mut().enumerate() {
                        *v = 2.0 * unit(mix(h ^ (i as u64 + 1).wrapping_mul(0x2545_f491_4f6c_dd1d))) - 1.0;
                    }
                    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let scale = if n > 0.0 { radius * unit(mix(h ^ 0x5851_f42d)) / n } else { 0.0 };
                    x.iter_mut().for_each(|v| *v *= scale);
                    let e = sign();
                    add(s, &x, e);
                    h = mix(h ^ if e { 0xa076_1d64_78bd_642f } else { 0xe703_7ed1_a0b4_28db });
                }
            }
            MdsTree::Feedback { t, radius, angle, .. } => {
                let mut x = vec![0.0; k];
                let (sin, cos) = angle.sin_cos();
                for _ in 0..*t {
                    let n = s.iter().map(|v| v * v).sum::<f64>().sqrt();
                    x.iter_mut().for_each(|v| *v = 0.0);
                    if n == 0.0 {
                        x[0] = *radius;
                    } else {
                        for (xi, si) in x.iter_mut().zip(s.iter()) {
                            *xi = radius * si / n;
                        }
                        if k >= 2 {
                            let (a, b) = (x[0], x[1]);
                            x[0] = cos * a - sin * b;
                            x[1] = sin * a + cos * b;
                        }
                    }
                    add(s, &x, sign());
                }
            }
        }
    }
}

/// Upper bound on ‖v‖ for ‖v‖₂ ≤ 1 in dimension k.
fn norm_scale(norm: NormSpec, k: usize) -> f64 {
    match norm {
        NormSpec::L2 | NormSpec::Linf => 1.0,
        NormSpec::L1 => (k as f64).sqrt(),
        NormSpec::Lq(q) if q >= 2.0 => 1.0,
        NormSpec::Lq(q) => (k as f64).powf(1.0 / q - 0.5),
    }
}

fn add(s: &mut [f64], x: &[f64], plus: bool) {
    let e = if plus { 1.0 } else { -1.0 };
    for (a, b) in s.iter_mut().zip(x) {
        *a += e * b;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdsSpec {
    pub tree: MdsTree,
    /// Bound on every increment norm.
    pub b: f64,
    pub norm: NormSpec,
    /// Smoothness constant of the squared norm.
    pub sigma: f64,
}

impl MdsSpec {
    /// Derives B from the tree and σ from the norm. Requires a norm whose
    /// square is (σ,2)-smooth; for L1, L∞ and Lq with q < 2 bound the norm by
    /// a smooth Lq' norm first.
    pub fn new(tree: MdsTree, norm: NormSpec) -> Result<Self> {
        norm.validate()?;
        tree.validate()?;
        let sm = norm.smoothness().filter(|s| s.exponent == 2.0).ok_or_else(|| {
            invalid(".norm", "the squared norm is not (sigma,2)-smooth; compare with an Lq norm, q >= 2")
        })?;
        let b = tree.step_bound(norm);
        Ok(MdsSpec { tree, b, norm, sigma: sm.constant })
    }

    pub fn horizon(&self) -> usize {
        self.tree.depth()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub threshold: f64,
    pub empirical: f64,
    /// None where the tail bound's validity condition fails.
    pub bound: Option<f64>,
    pub stderr: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub samples: usize,
    pub rows: Vec<TailRow>,
    pub pass: bool,
}

const MC_BLOCK: usize = 4096;

/// Empirical P(‖S_T‖ > ε) against the Pinelis tail at each threshold ε.
/// A row fails when the empirical tail exceeds the bound by more than three
/// binomial standard errors.
pub fn mc_tail_report(m: &MdsSpec, thresholds: &[f64], samples: usize, seed: u64, exec: Exec) -> Result<TailReport> {
    m.tree.validate()?;
    if m.norm.smoothness().is_none_or(|s| s.exponent != 2.0) {
        return Err(invalid(".norm", "the squared norm is not (sigma,2)-smooth"));
    }
    if samples == 0 {
        return Err(Error::Precondition("samples must be positive".into()));
    }
    if let Some(e) = thresholds.iter().find(|e| !e.is_finite() || **e < 0.0) {
        return Err(invalid("thresholds", format!("{e} is not a nonnegative number")));
    }
    let k = m.tree.dim();
    let norm = m.norm;
    let blocks = samples.div_ceil(MC_BLOCK);
    let parts = par::map_indexed(exec, blocks, |blk| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(blk as u64);
        let n = MC_BLOCK.min(samples - blk * MC_BLOCK);
        let mut s = vec![0.0; k];
        let mut counts = vec![0usize; thresholds.len()];
        for _ in 0..n {
            m.tree.walk(&mut s, || rng.gen::<bool>());
            let g = norm.norm(&s);
            for (c, &e) in counts.iter_mut().zip(thresholds) {
                *c += (g > e) as usize;
            }
        }
        counts
    });
    let mut counts = vec![0usize; thresholds.len()];
    for p in parts {
        for (c, v) in counts.iter_mut().zip(p) {
            *c += v;
        }
    }
    let n = samples as f64;
    let t = m.horizon() as f64;
    let rows: Vec<TailRow> = thresholds
        .iter()
        .zip(counts)
        .map(|(&eps, c)| {
            let emp = c as f64 / n;
            let stderr = (emp * (1.0 - emp) / n).sqrt();
            let bound = if m.b > 0.0 && t > 0.0 {
                concentration_bound(&ConcentrationKind::PinelisTail { sigma: m.sigma, b: m.b, t, eps }).ok()
            } else {
                None
            };
            let pass = bound.is_none_or(|b| emp <= b + 3.0 * stderr);
            TailRow { threshold: eps, empirical: emp, bound, stderr, pass }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(TailReport { samples, rows, pass })
}

/// 2·walsh_paley_sup: an upper proxy for the supremum over general
/// martingale difference sequences, via the factor-2 Walsh-Paley comparison.
pub fn mds_sup_estimate(h: &[Vec<f64>], norm: NormSpec, t: usize, mode: WpMode, budget: u64) -> Result<f64> {
    Ok(2.0 * walsh_paley_sup(h, norm, t, mode, budget)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn tail(eps: f64) -> ConcentrationKind {
        ConcentrationKind::PinelisTail { sigma: 2.0, b: 1.0, t: 100.0, eps }
    }

    #[test]
    fn calculator_examples() {
        let v = concentration_bound(&tail(10.0)).unwrap();
        assert!((v - 2.0 * (-0.125f64).exp()).abs() < 1e-15);
        assert!((v - 1.765).abs() < 1e-3);
        let c = ConcentrationKind::PinelisStep { sigma: 3.0, lambda: 0.0, b: 1.0 };
        assert_eq!(concentration_bound(&c).unwrap(), 1.0);
        let m = ConcentrationKind::PinelisMaxExp { sigma: 1.0, b: 1.0, t: 1.0, gamma: 10.0 };
        assert!(matches!(concentration_bound(&m), Err(Error::Validity(_))));
        let m = ConcentrationKind::PinelisMaxExp { sigma: 1.0, b: 0.5, t: 100.0, gamma: 2.0 };
        assert!((concentration_bound(&m).unwrap() - (4f64.ln() * 100.0).sqrt()).abs() < 1e-12);
        // σ below 1 is raised to 1.
        let a = concentration_bound(&ConcentrationKind::PinelisTail { sigma: 0.1, b: 1.0, t: 50.0, eps: 5.0 }).unwrap();
        let b = concentration_bound(&ConcentrationKind::PinelisTail { sigma: 1.0, b: 1.0, t: 50.0, eps: 5.0 }).unwrap();
        assert_eq!(a, b);
        assert!(matches!(concentration_bound(&tail(500.0)), Err(Error::Validity(_))));
        let p = concentration_bound(&ConcentrationKind::ProbToExp { a: 1.0, b: 4.0, n: 1.0 }).unwrap();
        assert!((p - (2.0 + 2f64.ln().sqrt())).abs() < 1e-15);
    }

    #[test]
    fn mgf_dominates_simple_walk() {
        // E exp(λ|S_T|) for the ±1 walk, by binomial sums.
        let (t, lam) = (20usize, 0.3);
        let mut c = vec![1.0f64];
        for _ in 0..t {
            let mut n = vec![0.0; c.len() + 1];
            for (i, v) in c.iter().enumerate() {
                n[i] += v / 2.0;
                n[i + 1] += v / 2.0;
            }
            c = n;
        }
        let mgf: f64 = c.iter().enumerate().map(|(i, p)| p * (lam * (2.0 * i as f64 - t as f64).abs()).exp()).sum();
        let bound = concentration_bound(&ConcentrationKind::PinelisMgf { sigma: 2.0, lambda: lam, b: 1.0, t: t as f64 }).unwrap();
        assert!(mgf <= bound, "{mgf} vs {bound}");
    }

    #[test]
    fn smooth_and_gensmooth() {
        let v = concentration_bound(&ConcentrationKind::SmoothTail { sigma: 2.0, p: 2.0, t: 1e6, nu: 1.0, r: 1.0 }).unwrap();
        let lt = 1e6f64.ln();
        assert!((v - 2.0 * (-1e6 / (4.0 * lt.powi(3))).exp()).abs() < 1e-15);
        assert!(concentration_bound(&ConcentrationKind::SmoothTail { sigma: 2.0, p: 2.0, t: 100.0, nu: 0.1, r: 1.0 }).is_err());
        assert!((smooth_tail_threshold(1.0, 2.0, 100.0, 0.5, 1.0).unwrap() - 128.0 * 0.6).abs() < 1e-12);
        let g = ConcentrationKind::Gensmooth { theta: 3.0, q: 2.0, sigma: 1.0, t: 4.0, p: 2.0, r_h: 1.0, r: 1.0 };
        assert!((concentration_bound(&g).unwrap() - (-49.0f64 / 8.0).exp()).abs() < 1e-15);
        let g = ConcentrationKind::Gensmooth { theta: 1.0, q: 2.0, sigma: 1.0, t: 4.0, p: 2.0, r_h: 1.0, r: 1.0 };
        assert!(matches!(concentration_bound(&g), Err(Error::Validity(_))));
        assert!(highprob_calibration(2, 100.0, 0.01, 1.0).is_err());
        assert!(highprob_calibration(2, 1e7, 0.5, 0.0).unwrap() < 1e-3);
    }

    #[test]
    fn chained_tail_constants() {
        let cover = CoverTable::constant(2f64.ln(), 8).unwrap();
        let r = chained_tail(ChainedKind::Real, 100.0, 0.5, &cover).unwrap();
        // Constant log N: the integral term is linear in 1 − α, so α = 1 wins iff 4 < 12θ sqrt(log 2).
        assert_eq!(r.alpha, 1.0);
        assert_eq!(r.threshold, 4.0);
        assert!((r.l_const - 0.5).abs() < 1e-12);
        assert!((r.probability - 0.5 * (-12.5f64).exp()).abs() < 1e-18);
        let s = chained_tail(ChainedKind::TwoSmooth { sigma: 2.0 }, 100.0, 0.01, &cover);
        assert!(matches!(s, Err(Error::Validity(_))));
        let p = chained_tail(ChainedKind::PSmooth { sigma: 2.0, p: 2.0 }, 1e12, 0.5, &cover).unwrap();
        assert!(p.threshold > 768.0 * 2f64.sqrt() / 1e6);
        assert_eq!(p.l_const, 2.0 * r.l_const);
    }

    #[test]
    fn zero_tree_has_no_tail() {
        let m = MdsSpec::new(MdsTree::PerDepth { steps: vec![vec![0.0, 0.0]; 10] }, NormSpec::L2).unwrap();
        let r = mc_tail_report(&m, &[0.1, 1.0], 5000, 1, Exec::default()).unwrap();
        assert!(r.rows.iter().all(|row| row.empirical == 0.0 && row.pass));
    }

    #[test]
    fn ones_tree_is_dominated() {
        let m = MdsSpec::new(MdsTree::PerDepth { steps: vec![vec![1.0]; 100] }, NormSpec::L2).unwrap();
        assert_eq!((m.b, m.sigma), (1.0, 2.0));
        let r = mc_tail_report(&m, &[10.0, 20.0, 30.0], 200_000, 7, Exec::default()).unwrap();
        assert!(r.pass, "{r:?}");
        // P(|S_100| > 20) is about 0.035; the bound is 2e^{-1/2}.
        assert!((r.rows[1].empirical - 0.035).abs() < 0.01);
    }

    #[test]
    fn seed_determinism_across_exec() {
        let tree = MdsTree::Hashed { seed: 3, k: 3, t: 60, radius: 1.0 };
        let m = MdsSpec::new(tree, NormSpec::Lq(3.0)).unwrap();
        let a = mc_tail_report(&m, &[2.0, 5.0], 10_000, 11, Exec::Parallel).unwrap();
        let b = mc_tail_report(&m, &[2.0, 5.0], 10_000, 11, Exec::Sequential).unwrap();
        assert_eq!(a, b);
        let c = mc_tail_report(&m, &[2.0, 5.0], 10_000, 12, Exec::Sequential).unwrap();
        assert_ne!(a.rows[0].empirical, c.rows[0].empirical);
    }

    #[test]
    fn explicit_tree_matches_per_depth() {
        let steps = vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 2.0]];
        let tree = ValuedTree::per_depth(&steps).unwrap();
        let a = MdsSpec::new(MdsTree::Explicit { tree }, NormSpec::L2).unwrap();
        let b = MdsSpec::new(MdsTree::PerDepth { steps }, NormSpec::L2).unwrap();
        assert_eq!(a.b, b.b);
        let ra = mc_tail_report(&a, &[1.0, 2.0], 8192, 5, Exec::default()).unwrap();
        let rb = mc_tail_report(&b, &[1.0, 2.0], 8192, 5, Exec::default()).unwrap();
        assert_eq!(ra.rows, rb.rows);
    }

    #[test]
    fn feedback_orthogonal_steps_grow_deterministically() {
        let tree = MdsTree::Feedback { k: 2, t: 16, radius: 1.0, angle: std::f64::consts::FRAC_PI_2 };
        let m = MdsSpec::new(tree, NormSpec::L2).unwrap();
        let mut s = vec![0.0; 2];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        m.tree.walk(&mut s, || rng.gen());
        assert!((NormSpec::L2.norm(&s) - 4.0).abs() < 1e-9);
        let r = mc_tail_report(&m, &[3.9, 4.1], 1000, 0, Exec::default()).unwrap();
        assert_eq!((r.rows[0].empirical, r.rows[1].empirical), (1.0, 0.0));
        assert!(r.pass);
    }

    #[test]
    fn rejects_non_smooth_norms() {
        for norm in [NormSpec::L1, NormSpec::Linf, NormSpec::Lq(1.5)] {
            assert!(MdsSpec::new(MdsTree::PerDepth { steps: vec![vec![1.0]] }, norm).is_err());
        }
    }

    #[test]
    fn mds_sup_examples() {
        assert_eq!(mds_sup_estimate(&[vec![0.0]], NormSpec::L2, 3, WpMode::Exhaustive, 1 << 20).unwrap(), 0.0);
        let pm = [vec![1.0], vec![-1.0]];
        assert!((mds_sup_estimate(&pm, NormSpec::L2, 2, WpMode::Exhaustive, 1 << 20).unwrap() - 1.0).abs() < 1e-12);
        // 2·E|S_T|/T for the simple walk: 2, 1, 1, 3/4.
        let want = [2.0, 1.0, 1.0, 0.75];
        let mut prev = f64::INFINITY;
        for (t, w) in (1..=4).zip(want) {
            let v = mds_sup_estimate(&pm, NormSpec::L2, t, WpMode::Exhaustive, 1 << 20).unwrap();
            assert!((v - w).abs() < 1e-12, "T={t}: {v}");
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    proptest! {
        #[test]
        fn bounds_positive_and_monotone(a in 0.0f64..20.0, d in 0.0f64..5.0, t in 2.0f64..1e4, s in 0.0f64..4.0, b in 0.1f64..3.0) {
            let pairs = [
                (ConcentrationKind::Azuma { t, theta: a, c: b }, ConcentrationKind::Azuma { t, theta: a + d, c: b }),
                (ConcentrationKind::PinelisTail { sigma: s, b, t, eps: a }, ConcentrationKind::PinelisTail { sigma: s, b, t, eps: a + d }),
                (ConcentrationKind::SmoothTail { sigma: s + 0.1, p: 1.5, t, nu: a, r: b }, ConcentrationKind::SmoothTail { sigma: s + 0.1, p: 1.5, t, nu: a + d, r: b }),
                (ConcentrationKind::Gensmooth { theta: a, q: 1.5, sigma: s, t, p: 2.0, r_h: b, r: 1.0 }, ConcentrationKind::Gensmooth { theta: a + d, q: 1.5, sigma: s, t, p: 2.0, r_h: b, r: 1.0 }),
            ];
            for (lo, hi) in pairs {
                if let (Ok(x), Ok(y)) = (concentration_bound(&lo), concentration_bound(&hi)) {
                    prop_assert!(x >= 0.0 && x.is_finite() && y >= 0.0 && y.is_finite());
                    prop_assert!(y <= x, "{lo:?}: {x} < {y}");
                }
            }
        }

        #[test]
        fn validity_is_monotone_in_deviation(s in 0.0f64..4.0, b in 0.1f64..3.0, t in 1.0f64..100.0, eps in 0.0f64..100.0) {
            // Valid at ε implies valid at any smaller ε.
            if concentration_bound(&ConcentrationKind::PinelisTail { sigma: s, b, t, eps }).is_ok() {
                let half = ConcentrationKind::PinelisTail { sigma: s, b, t, eps: eps / 2.0 };
                prop_assert!(concentration_bound(&half).is_ok());
            }
        }
    }
}
