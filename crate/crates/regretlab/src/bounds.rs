//! Closed-form upper bounds on sequential complexity and cover sizes.

use std::io::Read;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::game_model::ValuedTree;

/// Tabulated β ↦ log N_∞(β). Linear in sqrt(log N) between knots, constant
/// outside the tabulated range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct CoverTable {
    beta: Vec<f64>,
    log_cover: Vec<f64>,
}

impl TryFrom<Vec<(f64, f64)>> for CoverTable {
    type Error = Error;
    fn try_from(pairs: Vec<(f64, f64)>) -> Result<Self> {
        CoverTable::new(pairs)
    }
}

impl From<CoverTable> for Vec<(f64, f64)> {
    fn from(c: CoverTable) -> Self {
        c.beta.into_iter().zip(c.log_cover).collect()
    }
}

impl CoverTable {
    pub fn new(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(invalid("cover", "empty cover table"));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (i, &(b, l)) in pairs.iter().enumerate() {
            if !(b > 0.0 && b.is_finite()) || !(l >= 0.0 && l.is_finite()) {
                return Err(invalid(format!("cover[{i}]"), "need beta > 0 and finite log_cover ≥ 0"));
            }
            if i > 0 && (pairs[i - 1].0 == b || pairs[i - 1].1 < l) {
                return Err(invalid(format!("cover[{i}]"), "log_cover must be nonincreasing in distinct beta"));
            }
        }
        Ok(CoverTable { beta: pairs.iter().map(|p| p.0).collect(), log_cover: pairs.iter().map(|p| p.1).collect() })
    }

    /// Two-column CSV with header `beta,log_cover`.
    pub fn from_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut pairs = Vec::new();
        for (i, rec) in rdr.deserialize::<(f64, f64)>().enumerate() {
            pairs.push(rec.map_err(|e| invalid(format!("cover[{i}]"), e.to_string()))?);
        }
        Self::new(pairs)
    }

    pub fn constant(log_n: f64, grid: usize) -> Result<Self> {
        Self::new((1..=grid.max(1)).map(|i| (i as f64 / grid.max(1) as f64, log_n)).collect())
    }

    pub fn knots(&self) -> &[f64] {
        &self.beta
    }

    /// sqrt(log N(β)).
    pub fn root(&self, b: f64) -> f64 {
        let n = self.beta.len();
        if b <= self.beta[0] {
            return self.log_cover[0].sqrt();
        }
        if b >= self.beta[n - 1] {
            return self.log_cover[n - 1].sqrt();
        }
        let i = self.beta.partition_point(|&x| x <= b);
        let (b0, b1) = (self.beta[i - 1], self.beta[i]);
        let (g0, g1) = (self.log_cover[i - 1].sqrt(), self.log_cover[i].sqrt());
        g0 + (g1 - g0) * (b - b0) / (b1 - b0)
    }

    /// ∫_a^1 sqrt(log N(β)) dβ; exact for the piecewise-linear interpolant.
    pub fn integral_to_one(&self, a: f64) -> f64 {
        if a >= 1.0 {
            return 0.0;
        }
        let mut pts = vec![a];
        pts.extend(self.beta.iter().copied().filter(|&b| b > a && b < 1.0));
        pts.push(1.0);
        pts.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (self.root(w[0]) + self.root(w[1]))).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    #[serde(rename = "T")]
    pub t: Option<usize>,
    /// |Φ_T|
    pub phi_card: Option<f64>,
    /// ℛ
    pub payoff_bound: Option<f64>,
    #[serde(rename = "R")]
    pub grad_bound: Option<f64>,
    pub sigma: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub gamma: Option<f64>,
    /// Unnamed absolute constant of the p-smooth bound.
    #[serde(default = "one")]
    pub c_abs: f64,
    pub cover: Option<CoverTable>,
}

fn one() -> f64 {
    1.0
}

impl BoundParams {
    pub fn new() -> Self {
        BoundParams { c_abs: 1.0, ..Default::default() }
    }

    fn t(&self) -> Result<f64> {
        match self.t {
            Some(0) => Err(invalid("T", "T must be at least 1")),
            Some(t) => Ok(t as f64),
            None => Err(Error::MissingParam("T")),
        }
    }

    fn card(&self) -> Result<f64> {
        let c = self.phi_card.ok_or(Error::MissingParam("phi_card"))?;
        if !(c >= 1.0) {
            return Err(invalid("phi_card", "|Φ_T| must be at least 1"));
        }
        Ok(c)
    }

    fn nonneg(v: Option<f64>, name: &'static str) -> Result<f64> {
        let v = v.ok_or(Error::MissingParam(name))?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(invalid(name, "must be finite and nonnegative"));
        }
        Ok(v)
    }

    fn p(&self) -> Result<f64> {
        let p = self.p.ok_or(Error::MissingParam("p"))?;
        if !(p > 1.0 && p <= 2.0) {
            return Err(invalid("p", "need 1 < p ≤ 2"));
        }
        Ok(p)
    }

    fn q(&self) -> Result<f64> {
        let q = self.q.ok_or(Error::MissingParam("q"))?;
        if !(q >= 1.0) {
            return Err(invalid("q", "need q ≥ 1"));
        }
        Ok(q)
    }

    fn cover(&self) -> Result<&CoverTable> {
        self.cover.as_ref().ok_or(Error::MissingParam("cover"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothnessKind {
    FinitePhi,
    AvgSmooth,
    TwoSmooth,
    PSmooth,
}

pub fn smoothness_bound(kind: SmoothnessKind, bp: &BoundParams) -> Result<f64> {
    let rr = BoundParams::nonneg(bp.payoff_bound, "payoff_bound")?;
    let t = bp.t()?;
    let card = bp.card()?;
    match kind {
        SmoothnessKind::FinitePhi => {
            let r = BoundParams::nonneg(bp.grad_bound, "R")?;
            let sigma = BoundParams::nonneg(bp.sigma, "sigma")?;
            let (p, q) = (bp.p()?, bp.q()?);
            Ok((2.0 * rr * rr * r * r * card.ln() * t).powf(1.0 / (2.0 * q)) + (sigma * rr.powf(p) / p).powf(1.0 / q) * t.powf(1.0 / q))
        }
        SmoothnessKind::AvgSmooth => {
            let gamma = BoundParams::nonneg(bp.gamma, "gamma")?;
            let (p, q) = (bp.p()?, bp.q()?);
            Ok((2.0 * rr * rr * card.ln() / t).powf(1.0 / (2.0 * q)) + (gamma * rr.powf(p) / p).powf(1.0 / q) * t.powf((1.0 - p) / q))
        }
        SmoothnessKind::TwoSmooth => {
            let gamma = BoundParams::nonneg(bp.gamma, "gamma")?;
            let l = (2.0 * card).ln();
            if !(t >= l / gamma) {
                return Err(Error::Validity(format!("need T ≥ log(2|Φ_T|)/γ = {}", l / gamma)));
            }
            Ok(2.0 * (gamma * rr * rr * l / t).sqrt())
        }
        SmoothnessKind::PSmooth => {
            let gamma = BoundParams::nonneg(bp.gamma, "gamma")?;
            let p = bp.p()?;
            if card <= 1.0 {
                return Err(Error::Validity("need |Φ_T| > 1".into()));
            }
            if t < 3.0 {
                return Err(Error::Validity("need T ≥ 3".into()));
            }
            Ok(4.0 * bp.c_abs * gamma.powf(1.0 / p) * t.ln().powf(1.5) / t.powf(1.0 - 1.0 / p) * (rr * rr * (2.0 * card).ln()).sqrt())
        }
    }
}

/// sqrt(2 log|V| · max_v max_ε Σ_t v_t(ε)²).
pub fn finite_class_bound(v: &[ValuedTree<f64>]) -> Result<f64> {
    let depth = check_class(v)?;
    let mut m: f64 = 0.0;
    for tree in v {
        for path in 0..(1u64 << depth) {
            m = m.max(tree.path(path).map(|x| x * x).sum());
        }
    }
    Ok((2.0 * (v.len() as f64).ln() * m).sqrt())
}

/// E_ε max_v Σ_t ε_t v_t(ε) by path enumeration.
pub fn expected_max_sum(v: &[ValuedTree<f64>]) -> Result<f64> {
    let depth = check_class(v)?;
    let n = 1u64 << depth;
    let mut acc = 0.0;
    for path in 0..n {
        let best = v
            .iter()
            .map(|tree| tree.path(path).enumerate().map(|(t, x)| ValuedTree::<f64>::sign(depth, path, t) * x).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        acc += best;
    }
    Ok(acc / n as f64)
}

fn check_class(v: &[ValuedTree<f64>]) -> Result<usize> {
    let first = v.first().ok_or_else(|| Error::Precondition("empty tree class".into()))?;
    if let Some(t) = v.iter().find(|t| t.depth() != first.depth()) {
        return Err(Error::Dimension { expected: first.depth(), got: t.depth() });
    }
    Ok(first.depth())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DudleyKind {
    TwoSmoothAvg,
    LinearAvg,
}

/// Minimizing α and the bound value. `refine` adds that many interior α
/// candidates per grid cell.
pub fn dudley_bound_at(kind: DudleyKind, bp: &BoundParams, refine: usize) -> Result<(f64, f64)> {
    let cover = bp.cover()?;
    let t = bp.t()?;
    let c = match kind {
        DudleyKind::TwoSmoothAvg => 6.0 * (BoundParams::nonneg(bp.gamma, "gamma")? / t).sqrt(),
        DudleyKind::LinearAvg => 6.0 * std::f64::consts::SQRT_2 / t.sqrt(),
    };
    let mut knots = vec![0.0];
    knots.extend(cover.knots().iter().copied().filter(|&b| b < 1.0));
    knots.push(1.0);
    let mut alphas = knots.clone();
    for w in knots.windows(2) {
        for j in 1..=refine {
            alphas.push(w[0] + (w[1] - w[0]) * j as f64 / (refine + 1) as f64);
        }
    }
    let mut best = (1.0, f64::INFINITY);
    for a in alphas {
        let v = 4.0 * (a + c * cover.integral_to_one(a));
        if v < best.1 || (v == best.1 && a < best.0) {
            best = (a, v);
        }
    }
    Ok(best)
}

pub fn dudley_bound(kind: DudleyKind, bp: &BoundParams) -> Result<f64> {
    dudley_bound_at(kind, bp, 0).map(|r| r.1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CombinatorialKind {
    Sauer { d: u64, k: u64, #[serde(rename = "T")] t: u64 },
    ZeroCoverSauer { d: u64, k: u64, #[serde(rename = "T")] t: u64 },
    FatCover { #[serde(rename = "T")] t: u64, alpha: f64, fat: u64 },
    Tracking { #[serde(rename = "T")] t: u64, k: u64, n: u64 },
    Accum { #[serde(rename = "T")] t: u64, k: u64, n: u64 },
    /// log-cover (L/α)·log T + (L/α)·log N_∞(α).
    Budget { #[serde(rename = "T")] t: u64, length: f64, alpha: f64, log_cover: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundValue {
    Int(BigUint),
    Real(f64),
}

impl BoundValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            BoundValue::Int(n) => n.to_f64().unwrap_or(f64::INFINITY),
            BoundValue::Real(v) => *v,
        }
    }
}

impl std::fmt::Display for BoundValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundValue::Int(n) => write!(f, "{n}"),
            BoundValue::Real(v) => write!(f, "{v}"),
        }
    }
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Σ_{i=0}^d C(T,i) k^i.
pub fn sauer_sum(d: u64, k: u64, t: u64) -> BigUint {
    (0..=d).map(|i| binomial(t, i) * BigUint::from(k).pow(i as u32)).sum()
}

pub fn combinatorial_bound(kind: &CombinatorialKind) -> Result<BoundValue> {
    match *kind {
        CombinatorialKind::Sauer { d, k, t } | CombinatorialKind::ZeroCoverSauer { d, k, t } => {
            if d > u32::MAX as u64 {
                return Err(invalid("d", "out of range"));
            }
            Ok(BoundValue::Int(sauer_sum(d, k, t)))
        }
        CombinatorialKind::FatCover { t, alpha, fat } => {
            if !(alpha > 0.0) {
                return Err(invalid("alpha", "must be positive"));
            }
            Ok(BoundValue::Real((2.0 * std::f64::consts::E * t as f64 / alpha).powf(fat as f64)))
        }
        CombinatorialKind::Tracking { t, k, n } | CombinatorialKind::Accum { t, k, n } => {
            if k > u32::MAX as u64 - 1 {
                return Err(invalid("k", "out of range"));
            }
            Ok(BoundValue::Int(binomial(t, k) * BigUint::from(n).pow(k as u32 + 1)))
        }
        CombinatorialKind::Budget { t, length, alpha, log_cover } => {
            if !(alpha > 0.0) || !(length >= 0.0) || t == 0 {
                return Err(invalid("alpha", "need alpha > 0, length ≥ 0, T ≥ 1"));
            }
            let r = length / alpha;
            Ok(BoundValue::Real(r * (t as f64).ln() + r * log_cover))
        }
    }
}
