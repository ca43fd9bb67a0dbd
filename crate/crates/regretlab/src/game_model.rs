//! Finite games: label sets, vector payoff tables, aggregators, transformation
//! sets, histories, mixed strategies, binary trees, and the regret functional
//!
//!   Reg_T = B(ℓ(f_1,x_1),…,ℓ(f_T,x_T)) − min_{φ∈Φ_T} B(ℓ_{φ_1}(f_1,x_1),…,ℓ_{φ_T}(f_T,x_T)).
//!
//! Every aggregator here is a function of the average payoff vector, so the
//! engines work with running sums; `Aggregator::eval_sum` is the entry point.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lp::{self, Constraint, LinearProgram, LpOutcome, Sense};

/// Absolute tolerance for validation comparisons.
pub const TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Label sets

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelSet {
    labels: Vec<String>,
}

impl LabelSet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(invalid("", "label set is empty"));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(invalid(format!("[{i}]"), format!("duplicate label {l:?}")));
            }
        }
        Ok(LabelSet { labels })
    }

    /// Labels `"0"`, `"1"`, … `"n-1"`.
    pub fn indexed(n: usize) -> Self {
        LabelSet { labels: (0..n.max(1)).map(|i| i.to_string()).collect() }
    }

    pub fn from_strs(labels: &[&str]) -> Result<Self> {
        Self::new(labels.iter().map(|s| s.to_string()).collect())
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

impl TryFrom<Vec<String>> for LabelSet {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        LabelSet::new(v)
    }
}

impl From<LabelSet> for Vec<String> {
    fn from(l: LabelSet) -> Self {
        l.labels
    }
}

// ---------------------------------------------------------------------------
// Norms

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NormSpec {
    L1,
    L2,
    Lq(f64),
    Linf,
}

/// A `(constant, exponent)` smoothness pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Smoothness {
    pub constant: f64,
    pub exponent: f64,
}

impl NormSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NormSpec::Lq(q) if !(q.is_finite() && q > 1.0) => {
                Err(invalid("norm", format!("Lq requires 1 < q < inf, got {q}")))
            }
            _ => Ok(()),
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        match *self {
            NormSpec::L1 => v.iter().map(|x| x.abs()).sum(),
            NormSpec::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormSpec::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormSpec::Lq(q) => {
                let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if m == 0.0 {
                    return 0.0;
                }
                m * v.iter().map(|x| (x.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
            }
        }
    }

    /// Smoothness of ‖·‖_q^q for q ∈ (1,2] and of ‖·‖_q² for q ≥ 2; none for L1/L∞.
    pub fn smoothness(&self) -> Option<Smoothness> {
        match *self {
            NormSpec::L1 | NormSpec::Linf => None,
            NormSpec::L2 => Some(Smoothness { constant: 2.0, exponent: 2.0 }),
            NormSpec::Lq(q) if q <= 2.0 => Some(Smoothness { constant: q, exponent: q }),
            NormSpec::Lq(q) => Some(Smoothness { constant: 2.0 * (q - 1.0), exponent: 2.0 }),
        }
    }
}

// ---------------------------------------------------------------------------
// Payoff tables

/// Dense `|F| × |X|` table of k-vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffTable {
    k: usize,
    nf: usize,
    nx: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPayoff {
    k: usize,
    values: Vec<Vec<Vec<f64>>>,
}

impl PayoffTable {
    pub fn from_nested(k: usize, values: &[Vec<Vec<f64>>]) -> Result<Self> {
        if k == 0 {
            return Err(invalid(".k", "payoff dimension must be positive"));
        }
        let nf = values.len();
        if nf == 0 {
            return Err(invalid(".values", "empty payoff table"));
        }
        let nx = values[0].len();
        if nx == 0 {
            return Err(invalid(".values[0]", "empty payoff row"));
        }
        let mut data = Vec::with_capacity(nf * nx * k);
        for (f, row) in values.iter().enumerate() {
            if row.len() != nx {
                return Err(invalid(format!(".values[{f}]"), format!("expected {nx} columns, got {}", row.len())));
            }
            for (x, z) in row.iter().enumerate() {
                if z.len() != k {
                    return Err(invalid(format!(".values[{f}][{x}]"), format!("expected a {k}-vector, got length {}", z.len())));
                }
                if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
                    return Err(invalid(format!(".values[{f}][{x}]"), format!("non-finite entry {bad}")));
                }
                data.extend_from_slice(z);
            }
        }
        Ok(PayoffTable { k, nf, nx, data })
    }

    /// Scalar table from `values[f][x]`.
    pub fn scalar(values: &[Vec<f64>]) -> Result<Self> {
        let nested: Vec<Vec<Vec<f64>>> =
            values.iter().map(|r| r.iter().map(|&v| vec![v]).collect()).collect();
        Self::from_nested(1, &nested)
    }

    /// Table built from a closure over indices.
    pub fn from_fn(nf: usize, nx: usize, k: usize, mut g: impl FnMut(usize, usize) -> Vec<f64>) -> Result<Self> {
        let nested: Vec<Vec<Vec<f64>>> = (0..nf).map(|f| (0..nx).map(|x| g(f, x)).collect()).collect();
        Self::from_nested(k, &nested)
    }

    pub fn k(&self) -> usize {
        self.k
    }
    pub fn nf(&self) -> usize {
        self.nf
    }
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn get(&self, f: usize, x: usize) -> &[f64] {
        let o = (f * self.nx + x) * self.k;
        &self.data[o..o + self.k]
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.nf).map(|f| (0..self.nx).map(|x| self.get(f, x).to_vec()).collect()).collect()
    }

    /// Largest entry norm.
    pub fn bound(&self, norm: NormSpec) -> f64 {
        self.data.chunks(self.k).map(|z| norm.norm(z)).fold(0.0, f64::max)
    }

    /// Distinct scalar values (k = 1), sorted.
    pub fn distinct_values(&self) -> Vec<f64> {
        let mut v = self.data.clone();
        v.sort_by(|a, b| a.total_cmp(b));
        v.dedup();
        v
    }
}

impl Serialize for PayoffTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawPayoff { k: self.k, values: self.to_nested() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PayoffTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPayoff::deserialize(d)?;
        PayoffTable::from_nested(raw.k, &raw.values).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Target sets and distances

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TargetSet {
    vertices: Vec<Vec<f64>>,
}

impl TargetSet {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(invalid("", "target set needs at least one vertex"));
        };
        let k = first.len();
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != k || k == 0 {
                return Err(invalid(format!("[{i}]"), "vertices must share a positive dimension"));
            }
        }
        Ok(TargetSet { vertices })
    }

    pub fn origin(k: usize) -> Self {
        TargetSet { vertices: vec![vec![0.0; k]] }
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }
}

impl TryFrom<Vec<Vec<f64>>> for TargetSet {
    type Error = Error;
    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        TargetSet::new(v)
    }
}

impl From<TargetSet> for Vec<Vec<f64>> {
    fn from(t: TargetSet) -> Self {
        t.vertices
    }
}

/// Distance from `p` to the convex hull of `s` with a witness point in the hull.
///
/// L1 and L∞ are linear programs over hull coefficients. L2 uses Wolfe's
/// minimum-norm-point iteration. Other Lq use away-step Frank–Wolfe.
pub fn distance_to_set(p: &[f64], s: &TargetSet, norm: NormSpec) -> Result<(f64, Vec<f64>)> {
    let k = s.dim();
    if p.len() != k {
        return Err(Error::Dimension { expected: k, got: p.len() });
    }
    let verts = s.vertices();
    if verts.len() == 1 {
        let d: Vec<f64> = p.iter().zip(&verts[0]).map(|(a, b)| a - b).collect();
        return Ok((norm.norm(&d), verts[0].clone()));
    }
    let lambda = match norm {
        NormSpec::L1 | NormSpec::Linf => hull_lp(p, verts, norm)?,
        NormSpec::L2 => min_norm_point(p, verts),
        NormSpec::Lq(q) => {
            let start = min_norm_point(p, verts);
            let w = combine(verts, &start);
            let d2: f64 = p.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 <= 1e-24 {
                start
            } else {
                frank_wolfe_lq(p, verts, q, start)
            }
        }
    };
    let w = combine(verts, &lambda);
    let d: Vec<f64> = p.iter().zip(&w).map(|(a, b)| a - b).collect();
    Ok((norm.norm(&d), w))
}

fn combine(verts: &[Vec<f64>], lambda: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; verts[0].len()];
    for (v, &l) in verts.iter().zip(lambda) {
        if l != 0.0 {
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi += l * vi;
            }
        }
    }
    w
}

fn hull_lp(p: &[f64], verts: &[Vec<f64>], norm: NormSpec) -> Result<Vec<f64>> {
    let m = verts.len();
    let k = p.len();
    // variables: λ_1..λ_m, then u_1..u_k (L1) or a single s (L∞)
    let extra = if norm == NormSpec::L1 { k } else { 1 };
    let n = m + extra;
    let mut objective = vec![0.0; n];
    for o in objective.iter_mut().skip(m) {
        *o = 1.0;
    }
    let mut rows = Vec::with_capacity(2 * k + 1);
    for i in 0..k {
        let slack = if norm == NormSpec::L1 { m + i } else { m };
        let mut up = vec![0.0; n];
        let mut dn = vec![0.0; n];
        for j in 0..m {
            up[j] = verts[j][i];
            dn[j] = -verts[j][i];
        }
        up[slack] = -1.0;
        dn[slack] = -1.0;
        rows.push(Constraint { coeffs: up, sense: Sense::Le, rhs: p[i] });
        rows.push(Constraint { coeffs: dn, sense: Sense::Le, rhs: -p[i] });
    }
    let mut simplex = vec![0.0; n];
    for s in simplex.iter_mut().take(m) {
        *s = 1.0;
    }
    rows.push(Constraint { coeffs: simplex, sense: Sense::Eq, rhs: 1.0 });
    match lp::solve(&LinearProgram { objective, rows }) {
        LpOutcome::Optimal { x, .. } => {
            let mut lam: Vec<f64> = x[..m].iter().map(|v| v.max(0.0)).collect();
            let t: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|v| *v /= t);
            Ok(lam)
        }
        other => Err(Error::Solver(format!("distance LP ended as {other:?}"))),
    }
}

/// Wolfe's minimum-norm-point algorithm on {v_j − p}; returns hull weights.
fn min_norm_point(p: &[f64], verts: &[Vec<f64>]) -> Vec<f64> {
    let a: Vec<Vec<f64>> = verts.iter().map(|v| v.iter().zip(p).map(|(x, y)| x - y).collect()).collect();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let scale = a.iter().map(|v| dot(v, v)).fold(0.0, f64::max).max(1e-300);
    let m = a.len();
    let start = (0..m).min_by(|&i, &j| dot(&a[i], &a[i]).total_cmp(&dot(&a[j], &a[j]))).unwrap();
    let mut active = vec![start];
    let mut lam = vec![1.0];
    let point = |active: &[usize], lam: &[f64]| {
        let mut x = vec![0.0; p.len()];
        for (&j, &l) in active.iter().zip(lam) {
            for (xi, ai) in x.iter_mut().zip(&a[j]) {
                *xi += l * ai;
            }
        }
        x
    };
    let mut x = point(&active, &lam);
    for _ in 0..(50 * (m + p.len()) + 100) {
        let xx = dot(&x, &x);
        let j = (0..m).min_by(|&i, &j| dot(&x, &a[i]).total_cmp(&dot(&x, &a[j]))).unwrap();
        if xx - dot(&x, &a[j]) <= 1e-14 * scale || active.contains(&j) {
            break;
        }
        active.push(j);
        lam.push(0.0);
        loop {
            let mu = affine_minimizer(&active.iter().map(|&i| a[i].as_slice()).collect::<Vec<_>>());
            let Some(mu) = mu else { break };
            if mu.iter().all(|&v| v > 1e-14) {
                lam = mu;
                x = point(&active, &lam);
                break;
            }
            let mut theta = 1.0f64;
            for (l, m_) in lam.iter().zip(&mu) {
                if *m_ <= 1e-14 {
                    let d = l - m_;
                    if d > 0.0 {
                        theta = theta.min(l / d);
                    }
                }
            }
            for (l, m_) in lam.iter_mut().zip(&mu) {
                *l = (1.0 - theta) * *l + theta * m_;
            }
            let mut keep_a = Vec::new();
            let mut keep_l = Vec::new();
            for (&i, &l) in active.iter().zip(&lam) {
                if l > 1e-14 {
                    keep_a.push(i);
                    keep_l.push(l);
                }
            }
            if keep_a.is_empty() {
                keep_a.push(active[0]);
                keep_l.push(1.0);
            }
            let t: f64 = keep_l.iter().sum();
            keep_l.iter_mut().for_each(|v| *v /= t);
            active = keep_a;
            lam = keep_l;
            x = point(&active, &lam);
        }
    }
    let mut out = vec![0.0; m];
    for (&j, &l) in active.iter().zip(&lam) {
        out[j] += l;
    }
    out
}

/// Minimizer of ‖Σ μ_j a_j‖ subject to Σ μ_j = 1 (no sign constraint).
fn affine_minimizer(a: &[&[f64]]) -> Option<Vec<f64>> {
    let s = a.len();
    let n = s + 1;
    let mut mat = vec![vec![0.0; n + 1]; n];
    for i in 0..s {
        for j in 0..s {
            mat[i][j] = a[i].iter().zip(a[j]).map(|(x, y)| x * y).sum();
        }
        mat[i][s] = 1.0;
        mat[s][i] = 1.0;
    }
    mat[s][n] = 1.0;
    let sol = gauss_solve(mat)?;
    Some(sol[..s].to_vec())
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
pub(crate) fn gauss_solve(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = m.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[piv][c].abs() < 1e-15 {
            return None;
        }
        m.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                if f != 0.0 {
                    for j in c..=n {
                        m[r][j] -= f * m[c][j];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Away-step Frank–Wolfe on λ ↦ ‖Vλ − p‖_q^q with ternary line search,
/// warm-started from the Euclidean projection.
fn frank_wolfe_lq(p: &[f64], verts: &[Vec<f64>], q: f64, start: Vec<f64>) -> Vec<f64> {
    let m = verts.len();
    let obj = |y: &[f64]| y.iter().zip(p).map(|(a, b)| (a - b).abs().powf(q)).sum::<f64>();
    let mut lam = start;
    let mut y = combine(verts, &lam);
    for _ in 0..2_000 {
        let g: Vec<f64> = y
            .iter()
            .zip(p)
            .map(|(a, b)| q * (a - b).signum() * (a - b).abs().powf(q - 1.0))
            .collect();
        let gd = |v: &[f64]| g.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        let gy = gd(&y);
        let fw = (0..m).min_by(|&i, &j| gd(&verts[i]).total_cmp(&gd(&verts[j]))).unwrap();
        let aw = (0..m)
            .filter(|&i| lam[i] > 0.0)
            .max_by(|&i, &j| gd(&verts[i]).total_cmp(&gd(&verts[j])))
            .unwrap();
        let fw_gap = gy - gd(&verts[fw]);
        let aw_gap = gd(&verts[aw]) - gy;
        if fw_gap.max(aw_gap) <= 1e-13 {
            break;
        }
        let (dir, gmax, toward, away): (Vec<f64>, f64, Option<usize>, Option<usize>) = if fw_gap >= aw_gap {
            (verts[fw].iter().zip(&y).map(|(a, b)| a - b).collect(), 1.0, Some(fw), None)
        } else {
            let gm = lam[aw] / (1.0f64 - lam[aw]).max(1e-300);
            (y.iter().zip(&verts[aw]).map(|(a, b)| a - b).collect(), gm, None, Some(aw))
        };
        let along = |s: f64| obj(&y.iter().zip(&dir).map(|(a, d)| a + s * d).collect::<Vec<_>>());
        let (mut lo, mut hi) = (0.0, gmax);
        for _ in 0..60 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if along(m1) <= along(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let step = 0.5 * (lo + hi);
        if step <= 0.0 {
            break;
        }
        if let Some(j) = toward {
            lam.iter_mut().for_each(|l| *l *= 1.0 - step);
            lam[j] += step;
        }
        if let Some(j) = away {
            lam.iter_mut().for_each(|l| *l *= 1.0 + step);
            lam[j] -= step;
            if lam[j] < 1e-15 {
                lam[j] = 0.0;
            }
        }
        y = combine(verts, &lam);
    }
    lam
}

// ---------------------------------------------------------------------------
// Aggregators

/// Scalar functions of the average payoff vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarFunction {
    /// |mean_1|
    Abs,
    /// max(mean_1, 0)
    PositivePart,
    /// ‖mean‖₂²
    SquaredNorm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subadditivity {
    BSubadditive,
    NegBSubadditive,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Aggregator {
    Average,
    NormOfAverage { norm: NormSpec },
    NegNormOfAverage { norm: NormSpec },
    DistanceToSet { set: TargetSet, norm: NormSpec },
    FunctionOfAverage { function: ScalarFunction },
}

impl Aggregator {
    pub fn subadditivity(&self) -> Subadditivity {
        match self {
            Aggregator::Average | Aggregator::NormOfAverage { .. } | Aggregator::DistanceToSet { .. } => {
                Subadditivity::BSubadditive
            }
            Aggregator::NegNormOfAverage { .. } => Subadditivity::NegBSubadditive,
            Aggregator::FunctionOfAverage { function } => match function {
                ScalarFunction::Abs | ScalarFunction::PositivePart => Subadditivity::BSubadditive,
                ScalarFunction::SquaredNorm => Subadditivity::Neither,
            },
        }
    }

    /// Norm used to measure payoff entries under this aggregator.
    pub fn norm(&self) -> NormSpec {
        match self {
            Aggregator::NormOfAverage { norm }
            | Aggregator::NegNormOfAverage { norm }
            | Aggregator::DistanceToSet { norm, .. } => *norm,
            _ => NormSpec::L2,
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        self.norm().validate().map_err(|e| prefix_err(e, ".aggregator"))?;
        match self {
            Aggregator::Average if k != 1 => Err(invalid(".aggregator", "Average requires k = 1")),
            Aggregator::FunctionOfAverage { function: ScalarFunction::Abs | ScalarFunction::PositivePart } if k != 1 => {
                Err(invalid(".aggregator.function", "scalar function requires k = 1"))
            }
            Aggregator::DistanceToSet { set, .. } if set.dim() != k => {
                Err(invalid(".aggregator.set", format!("set dimension {} differs from k = {k}", set.dim())))
            }
            _ => Ok(()),
        }
    }

    /// B applied to the mean vector.
    pub fn eval_mean(&self, mean: &[f64]) -> f64 {
        match self {
            Aggregator::Average => mean[0],
            Aggregator::NormOfAverage { norm } => norm.norm(mean),
            Aggregator::NegNormOfAverage { norm } => -norm.norm(mean),
            Aggregator::DistanceToSet { set, norm } => {
                distance_to_set(mean, set, *norm).map(|r| r.0).unwrap_or(f64::NAN)
            }
            Aggregator::FunctionOfAverage { function } => match function {
                ScalarFunction::Abs => mean[0].abs(),
                ScalarFunction::PositivePart => mean[0].max(0.0),
                ScalarFunction::SquaredNorm => mean.iter().map(|v| v * v).sum(),
            },
        }
    }

    /// B applied to a sequence whose payoffs sum to `sum` over `t` rounds.
    pub fn eval_sum(&self, sum: &[f64], t: usize) -> f64 {
        if let Aggregator::Average = self {
            return sum[0] / t as f64;
        }
        let mean: Vec<f64> = sum.iter().map(|v| v / t as f64).collect();
        self.eval_mean(&mean)
    }
}

/// B(z_1,…,z_T).
pub fn aggregate(agg: &Aggregator, zs: &[Vec<f64>]) -> Result<f64> {
    let Some(first) = zs.first() else {
        return Err(Error::Precondition("aggregate needs at least one payoff".into()));
    };
    let k = first.len();
    let mut sum = vec![0.0; k];
    for z in zs {
        if z.len() != k {
            return Err(Error::Dimension { expected: k, got: z.len() });
        }
        sum.iter_mut().zip(z).for_each(|(s, v)| *s += v);
    }
    if let Aggregator::DistanceToSet { set, .. } = agg {
        if set.dim() != k {
            return Err(Error::Dimension { expected: set.dim(), got: k });
        }
    }
    if matches!(agg, Aggregator::Average) && k != 1 {
        return Err(Error::Dimension { expected: 1, got: k });
    }
    Ok(agg.eval_sum(&sum, zs.len()))
}

fn prefix_err(e: Error, prefix: &str) -> Error {
    match e {
        Error::Validation { path, msg } => Error::Validation { path: format!("{prefix}{}", dot(&path)), msg },
        other => other,
    }
}

fn dot(path: &str) -> String {
    if path.is_empty() || path.starts_with('.') || path.starts_with('[') {
        path.to_string()
    } else {
        format!(".{path}")
    }
}

// ---------------------------------------------------------------------------
// Transformations

#[derive(Clone, Debug, PartialEq)]
pub enum TransformStep {
    /// φ(f) for each f.
    Departure(Vec<usize>),
    /// Replacement payoff table.
    PayoffOverride(PayoffTable),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawStep {
    Departure(Vec<usize>),
    Override(Vec<Vec<Vec<f64>>>),
}

/// Φ_T stored as a pool of distinct steps and per-sequence step indices.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformSet {
    steps: Vec<TransformStep>,
    sequences: Vec<Vec<usize>>,
    time_invariant: bool,
    all_departure: bool,
}

#[derive(Serialize, Deserialize)]
struct RawTransformSet {
    steps: Vec<RawStep>,
    sequences: Vec<Vec<usize>>,
}

impl TransformSet {
    pub fn new(steps: Vec<TransformStep>, sequences: Vec<Vec<usize>>) -> Result<Self> {
        if sequences.is_empty() {
            return Err(invalid(".sequences", "transform set is empty"));
        }
        let horizon = sequences[0].len();
        for (i, s) in sequences.iter().enumerate() {
            if s.len() != horizon {
                return Err(invalid(format!(".sequences[{i}]"), format!("length {} differs from {horizon}", s.len())));
            }
            if let Some(&bad) = s.iter().find(|&&j| j >= steps.len()) {
                return Err(invalid(format!(".sequences[{i}]"), format!("step index {bad} out of range")));
            }
        }
        let time_invariant = sequences.iter().all(|s| s.iter().all(|&j| steps[j] == steps[s[0]]));
        let all_departure = sequences
            .iter()
            .flatten()
            .all(|&j| matches!(steps[j], TransformStep::Departure(_)));
        Ok(TransformSet { steps, sequences, time_invariant, all_departure })
    }

    /// Each base step repeated for all T rounds.
    pub fn time_invariant(base: Vec<TransformStep>, t: usize) -> Result<Self> {
        let seqs = (0..base.len()).map(|i| vec![i; t]).collect();
        Self::new(base, seqs)
    }

    /// Constant departure maps, one per f.
    pub fn constant_departures(nf: usize, t: usize) -> Self {
        let base = (0..nf).map(|g| TransformStep::Departure(vec![g; nf])).collect();
        Self::time_invariant(base, t).expect("constant maps are valid")
    }

    /// The identity departure only.
    pub fn identity(nf: usize, t: usize) -> Self {
        Self::time_invariant(vec![TransformStep::Departure((0..nf).collect())], t).expect("identity is valid")
    }

    pub fn steps(&self) -> &[TransformStep] {
        &self.steps
    }
    pub fn sequences(&self) -> &[Vec<usize>] {
        &self.sequences
    }
    pub fn len(&self) -> usize {
        self.sequences.len()
    }
    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
    pub fn horizon(&self) -> usize {
        self.sequences[0].len()
    }
    pub fn time_invariant_flag(&self) -> bool {
        self.time_invariant
    }
    pub fn all_departure(&self) -> bool {
        self.all_departure
    }

    /// ℓ_{φ_t}(f,x) for the step with pool index `step`.
    #[inline]
    pub fn payoff<'a>(&'a self, table: &'a PayoffTable, step: usize, f: usize, x: usize) -> &'a [f64] {
        match &self.steps[step] {
            TransformStep::Departure(m) => table.get(m[f], x),
            TransformStep::PayoffOverride(o) => o.get(f, x),
        }
    }

    fn validate(&self, payoff: &PayoffTable, horizon: usize) -> Result<()> {
        if self.horizon() != horizon {
            return Err(invalid(".transforms.sequences", format!("sequence length {} differs from T = {horizon}", self.horizon())));
        }
        for (i, s) in self.steps.iter().enumerate() {
            match s {
                TransformStep::Departure(m) => {
                    if m.len() != payoff.nf() {
                        return Err(invalid(format!(".transforms.steps[{i}]"), format!("departure map must have {} entries", payoff.nf())));
                    }
                    if let Some(&bad) = m.iter().find(|&&g| g >= payoff.nf()) {
                        return Err(invalid(format!(".transforms.steps[{i}]"), format!("departure lands outside F: {bad}")));
                    }
                }
                TransformStep::PayoffOverride(o) => {
                    if o.nf() != payoff.nf() || o.nx() != payoff.nx() || o.k() != payoff.k() {
                        return Err(invalid(format!(".transforms.steps[{i}]"), "override table shape differs from payoff"));
                    }
                }
            }
        }
        Ok(())
    }

    fn to_raw(&self) -> RawTransformSet {
        RawTransformSet {
            steps: self
                .steps
                .iter()
                .map(|s| match s {
                    TransformStep::Departure(m) => RawStep::Departure(m.clone()),
                    TransformStep::PayoffOverride(o) => RawStep::Override(o.to_nested()),
                })
                .collect(),
            sequences: self.sequences.clone(),
        }
    }

    fn from_raw(raw: RawTransformSet, k: usize) -> Result<Self> {
        let steps = raw
            .steps
            .into_iter()
            .enumerate()
            .map(|(i, s)| match s {
                RawStep::Departure(m) => Ok(TransformStep::Departure(m)),
                RawStep::Override(v) => PayoffTable::from_nested(k, &v)
                    .map(TransformStep::PayoffOverride)
                    .map_err(|e| prefix_err(e, &format!(".transforms.steps[{i}].override"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(steps, raw.sequences).map_err(|e| prefix_err(e, ".transforms"))
    }
}

// ---------------------------------------------------------------------------
// Game specification

#[derive(Clone, Debug, PartialEq)]
pub struct GameSpec {
    pub f: LabelSet,
    pub x: LabelSet,
    pub payoff: PayoffTable,
    pub aggregator: Aggregator,
    pub transforms: TransformSet,
    pub horizon: usize,
    payoff_bound: f64,
}

/// Transform presets accepted in JSON in place of an explicit set.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawTransforms {
    Explicit(RawTransformSet),
    Preset { preset: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawGame {
    #[serde(rename = "F")]
    f: LabelSet,
    #[serde(rename = "X")]
    x: LabelSet,
    payoff: PayoffTable,
    aggregator: Aggregator,
    transforms: RawTransforms,
    #[serde(rename = "T")]
    horizon: usize,
}

fn departure_set(maps: Vec<Vec<usize>>, t: usize) -> Result<TransformSet> {
    TransformSet::time_invariant(maps.into_iter().map(TransformStep::Departure).collect(), t)
}

impl GameSpec {
    pub fn new(
        f: LabelSet,
        x: LabelSet,
        payoff: PayoffTable,
        aggregator: Aggregator,
        transforms: TransformSet,
        horizon: usize,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid(".T", "horizon must be positive"));
        }
        if payoff.nf() != f.size() {
            return Err(invalid(".payoff.values", format!("{} rows for |F| = {}", payoff.nf(), f.size())));
        }
        if payoff.nx() != x.size() {
            return Err(invalid(".payoff.values[0]", format!("{} columns for |X| = {}", payoff.nx(), x.size())));
        }
        aggregator.validate(payoff.k())?;
        transforms.validate(&payoff, horizon)?;
        let norm = aggregator.norm();
        let mut bound = payoff.bound(norm);
        for s in transforms.steps() {
            if let TransformStep::PayoffOverride(o) = s {
                bound = bound.max(o.bound(norm));
            }
        }
        Ok(GameSpec { f, x, payoff, aggregator, transforms, horizon, payoff_bound: bound })
    }

    /// Labels are indices; convenient for generated instances.
    pub fn indexed(payoff: PayoffTable, aggregator: Aggregator, transforms: TransformSet, horizon: usize) -> Result<Self> {
        let f = LabelSet::indexed(payoff.nf());
        let x = LabelSet::indexed(payoff.nx());
        Self::new(f, x, payoff, aggregator, transforms, horizon)
    }

    pub fn nf(&self) -> usize {
        self.payoff.nf()
    }
    pub fn nx(&self) -> usize {
        self.payoff.nx()
    }
    pub fn k(&self) -> usize {
        self.payoff.k()
    }

    /// ℛ: largest payoff norm, including override tables.
    pub fn payoff_bound(&self) -> f64 {
        self.payoff_bound
    }

    /// Same game with a different horizon; time-invariant sets are re-expanded.
    pub fn with_horizon(&self, t: usize) -> Result<Self> {
        if !self.transforms.time_invariant_flag() {
            return Err(Error::Precondition("horizon change needs a time-invariant transform set".into()));
        }
        let seqs = self.transforms.sequences().iter().map(|s| vec![s[0]; t]).collect();
        let tr = TransformSet::new(self.transforms.steps().to_vec(), seqs)?;
        Self::new(self.f.clone(), self.x.clone(), self.payoff.clone(), self.aggregator.clone(), tr, t)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(s).map_err(|e| invalid("", e.to_string()))?)
    }

    pub fn from_value(v: serde_json::Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| invalid("", "expected a JSON object"))?;
        for key in ["F", "X", "payoff", "aggregator", "transforms", "T"] {
            if !obj.contains_key(key) {
                return Err(invalid(format!(".{key}"), "missing required field"));
            }
        }
        let raw: RawGame = serde_json::from_value(v).map_err(|e| invalid("", e.to_string()))?;
        Self::from_raw(raw)
    }

    pub(crate) fn from_raw(raw: RawGame) -> Result<Self> {
        let k = raw.payoff.k();
        let nf = raw.payoff.nf();
        let transforms = match raw.transforms {
            RawTransforms::Explicit(r) => TransformSet::from_raw(r, k)?,
            RawTransforms::Preset { preset } => match preset.as_str() {
                "external" => TransformSet::constant_departures(nf, raw.horizon),
                "identity" => TransformSet::identity(nf, raw.horizon),
                "internal" => departure_set(crate::games::internal_maps(nf), raw.horizon)?,
                "swap" => departure_set(crate::games::swap_maps(nf, 1 << 20)?, raw.horizon)?,
                other => return Err(invalid(".transforms.preset", format!("unknown preset {other:?}"))),
            },
        };
        Self::new(raw.f, raw.x, raw.payoff, raw.aggregator, transforms, raw.horizon)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game serializes")
    }
}

impl Serialize for GameSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawGame {
            f: self.f.clone(),
            x: self.x.clone(),
            payoff: self.payoff.clone(),
            aggregator: self.aggregator.clone(),
            transforms: RawTransforms::Explicit(self.transforms.to_raw()),
            horizon: self.horizon,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GameSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawGame::deserialize(d)?;
        GameSpec::from_raw(raw).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Histories and strategies

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct History {
    pub rounds: Vec<(usize, usize)>,
}

impl History {
    pub fn new(rounds: Vec<(usize, usize)>) -> Self {
        History { rounds }
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn validate(&self, spec: &GameSpec) -> Result<()> {
        if self.len() > spec.horizon {
            return Err(invalid("history", format!("length {} exceeds T = {}", self.len(), spec.horizon)));
        }
        for (i, &(f, x)) in self.rounds.iter().enumerate() {
            if f >= spec.nf() || x >= spec.nx() {
                return Err(invalid(format!("history[{i}]"), format!("({f},{x}) out of range")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedStrategy {
    weights: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("weights", "empty strategy"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights", "weights must be finite and nonnegative"));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(invalid("weights", format!("weights sum to {s}")));
        }
        Ok(MixedStrategy { weights })
    }

    /// Clamp negatives and renormalize; for solver output.
    pub fn normalized(mut weights: Vec<f64>) -> Self {
        weights.iter_mut().for_each(|w| *w = w.max(0.0));
        let s: f64 = weights.iter().sum();
        if s > 0.0 {
            weights.iter_mut().for_each(|w| *w /= s);
        } else {
            let n = weights.len() as f64;
            weights.iter_mut().for_each(|w| *w = 1.0 / n);
        }
        MixedStrategy { weights }
    }

    pub fn uniform(n: usize) -> Self {
        MixedStrategy { weights: vec![1.0 / n as f64; n] }
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        MixedStrategy { weights: w }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Inverse-CDF sample from a uniform draw in [0,1).
    pub fn sample(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }
}

impl TryFrom<Vec<f64>> for MixedStrategy {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        MixedStrategy::new(v)
    }
}

impl From<MixedStrategy> for Vec<f64> {
    fn from(m: MixedStrategy) -> Self {
        m.weights
    }
}

// ---------------------------------------------------------------------------
// Trees

/// Complete binary tree of depth T. The node at depth t (0-based) reached by
/// the sign prefix ε_1..ε_t lives at index 2^t − 1 + bits, where bits encodes
/// the prefix with ε_1 most significant and +1 ↦ 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValuedTree<V> {
    depth: usize,
    values: Vec<V>,
}

/// Largest depth stored explicitly.
pub const MAX_TREE_DEPTH: usize = 24;

impl<V: Clone> ValuedTree<V> {
    pub fn new(depth: usize, values: Vec<V>) -> Result<Self> {
        if depth == 0 || depth > MAX_TREE_DEPTH {
            return Err(invalid("depth", format!("depth must be in 1..={MAX_TREE_DEPTH}")));
        }
        if values.len() != (1usize << depth) - 1 {
            return Err(invalid("values", format!("expected {} nodes, got {}", (1usize << depth) - 1, values.len())));
        }
        Ok(ValuedTree { depth, values })
    }

    pub fn constant(depth: usize, v: V) -> Result<Self> {
        Self::new(depth, vec![v; (1usize << depth.min(MAX_TREE_DEPTH + 1)) - 1])
    }

    /// Tree whose value at depth t depends only on t.
    pub fn per_depth(vals: &[V]) -> Result<Self> {
        let depth = vals.len();
        let mut out = Vec::with_capacity((1usize << depth.min(MAX_TREE_DEPTH + 1)) - 1);
        for (t, v) in vals.iter().enumerate() {
            if t < MAX_TREE_DEPTH {
                out.extend(std::iter::repeat_n(v.clone(), 1usize << t));
            }
        }
        Self::new(depth, out)
    }

    pub fn from_fn(depth: usize, mut g: impl FnMut(usize, u64) -> V) -> Result<Self> {
        if depth == 0 || depth > MAX_TREE_DEPTH {
            return Err(invalid("depth", format!("depth must be in 1..={MAX_TREE_DEPTH}")));
        }
        let mut out = Vec::with_capacity((1usize << depth) - 1);
        for t in 0..depth {
            for p in 0..(1u64 << t) {
                out.push(g(t, p));
            }
        }
        Self::new(depth, out)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [V] {
        &mut self.values
    }

    /// Node at 0-based depth `t` with prefix bits `prefix` (t bits).
    #[inline]
    pub fn at(&self, t: usize, prefix: u64) -> &V {
        &self.values[(1usize << t) - 1 + prefix as usize]
    }

    /// Node values along the full path `path` (T bits, ε_1 most significant).
    pub fn path(&self, path: u64) -> impl Iterator<Item = &V> + '_ {
        (0..self.depth).map(move |t| self.at(t, path >> (self.depth - t)))
    }

    /// Sign of round t (0-based) on a full path.
    #[inline]
    pub fn sign(depth: usize, path: u64, t: usize) -> f64 {
        if (path >> (depth - 1 - t)) & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn map<W: Clone>(&self, g: impl Fn(&V) -> W) -> ValuedTree<W> {
        ValuedTree { depth: self.depth, values: self.values.iter().map(g).collect() }
    }
}

// ---------------------------------------------------------------------------
// Regret

/// Payoff sums of the realized play and of every transformed sequence.
#[derive(Clone, Debug)]
pub(crate) struct Sums {
    pub realized: Vec<f64>,
    pub phi: Vec<f64>,
}

impl Sums {
    pub fn zero(spec: &GameSpec) -> Self {
        Sums { realized: vec![0.0; spec.k()], phi: vec![0.0; spec.k() * spec.transforms.len()] }
    }

    /// Advance by round `t` (0-based) with moves (f,x).
    #[inline]
    pub fn push(&mut self, spec: &GameSpec, t: usize, f: usize, x: usize) {
        let k = spec.k();
        for (s, v) in self.realized.iter_mut().zip(spec.payoff.get(f, x)) {
            *s += v;
        }
        let tr = &spec.transforms;
        for (i, seq) in tr.sequences().iter().enumerate() {
            let z = tr.payoff(&spec.payoff, seq[t], f, x);
            for (s, v) in self.phi[i * k..(i + 1) * k].iter_mut().zip(z) {
                *s += v;
            }
        }
    }

    pub fn regret(&self, spec: &GameSpec, t: usize) -> f64 {
        let k = spec.k();
        let agg = &spec.aggregator;
        let best = self.phi.chunks(k).map(|c| agg.eval_sum(c, t)).fold(f64::INFINITY, f64::min);
        agg.eval_sum(&self.realized, t) - best
    }
}

/// Reg_T of a complete history.
pub fn regret_of_history(spec: &GameSpec, h: &History) -> Result<f64> {
    if h.len() != spec.horizon {
        return Err(Error::IncompleteHistory { len: h.len(), horizon: spec.horizon });
    }
    h.validate(spec)?;
    let mut sums = Sums::zero(spec);
    for (t, &(f, x)) in h.rounds.iter().enumerate() {
        sums.push(spec, t, f, x);
    }
    Ok(sums.regret(spec, spec.horizon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn pennies(t: usize) -> GameSpec {
        let table = PayoffTable::scalar(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        GameSpec::indexed(table, Aggregator::Average, TransformSet::constant_departures(2, t), t).unwrap()
    }

    #[test]
    fn single_action_has_zero_regret() {
        let table = PayoffTable::scalar(&[vec![0.3, 0.9]]).unwrap();
        let g = GameSpec::indexed(table, Aggregator::Average, TransformSet::constant_departures(1, 3), 3).unwrap();
        let h = History::new(vec![(0, 1), (0, 0), (0, 1)]);
        assert_eq!(regret_of_history(&g, &h).unwrap(), 0.0);
    }

    #[test]
    fn pennies_two_rounds() {
        let h = History::new(vec![(0, 1), (0, 0)]);
        assert_eq!(regret_of_history(&pennies(2), &h).unwrap(), 0.0);
    }

    #[test]
    fn blackwell_scalar_regret() {
        let table = PayoffTable::scalar(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let zero = PayoffTable::scalar(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let tr = TransformSet::time_invariant(vec![TransformStep::PayoffOverride(zero)], 1).unwrap();
        let agg = Aggregator::DistanceToSet { set: TargetSet::origin(1), norm: NormSpec::L1 };
        let g = GameSpec::indexed(table, agg, tr, 1).unwrap();
        assert_eq!(regret_of_history(&g, &History::new(vec![(0, 0)])).unwrap(), 1.0);
    }

    #[test]
    fn short_history_rejected() {
        let e = regret_of_history(&pennies(2), &History::new(vec![(0, 0)])).unwrap_err();
        assert!(matches!(e, Error::IncompleteHistory { .. }));
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&Aggregator::Average, &[vec![1.0], vec![-1.0]]).unwrap(), 0.0);
        let n1 = Aggregator::NormOfAverage { norm: NormSpec::L1 };
        assert_eq!(aggregate(&n1, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(), 1.0);
        let s = TargetSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let d = Aggregator::DistanceToSet { set: s, norm: NormSpec::L2 };
        assert!((aggregate(&d, &[vec![1.0, 1.0]]).unwrap() - 1.0).abs() < 1e-12);
        assert!(aggregate(&n1, &[vec![1.0, 0.0], vec![0.0]]).is_err());
    }

    #[test]
    fn aggregate_zero_is_zero() {
        let set = TargetSet::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let aggs = [
            Aggregator::NormOfAverage { norm: NormSpec::L2 },
            Aggregator::NegNormOfAverage { norm: NormSpec::Lq(3.0) },
            Aggregator::DistanceToSet { set, norm: NormSpec::Linf },
            Aggregator::FunctionOfAverage { function: ScalarFunction::SquaredNorm },
        ];
        for a in &aggs {
            assert_eq!(aggregate(a, &vec![vec![0.0, 0.0]; 3]).unwrap().abs(), 0.0, "{a:?}");
        }
        for f in [ScalarFunction::Abs, ScalarFunction::PositivePart] {
            assert_eq!(aggregate(&Aggregator::FunctionOfAverage { function: f }, &[vec![0.0]]).unwrap(), 0.0);
        }
        assert_eq!(aggregate(&Aggregator::Average, &vec![vec![0.0]; 4]).unwrap(), 0.0);
    }

    #[test]
    fn subadditivity_flags() {
        assert_eq!(Aggregator::Average.subadditivity(), Subadditivity::BSubadditive);
        assert_eq!(
            Aggregator::NegNormOfAverage { norm: NormSpec::L1 }.subadditivity(),
            Subadditivity::NegBSubadditive
        );
    }

    #[test]
    fn distance_examples() {
        let s = TargetSet::new(vec![vec![0.0]]).unwrap();
        assert_eq!(distance_to_set(&[3.0], &s, NormSpec::L1).unwrap().0, 3.0);
        let seg = TargetSet::new(vec![vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let (d, w) = distance_to_set(&[1.0, 1.0], &seg, NormSpec::L2).unwrap();
        assert!((d - 1.0).abs() < 1e-10);
        assert!((w[0] - 1.0).abs() < 1e-9 && w[1].abs() < 1e-12);
        let tri = TargetSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        for n in [NormSpec::L1, NormSpec::L2, NormSpec::Linf, NormSpec::Lq(3.0)] {
            assert!(distance_to_set(&[0.2, 0.3], &tri, n).unwrap().0 < 1e-8, "{n:?}");
        }
        // (1,1) to the triangle: L1 1, L∞ 1/2, L2 1/√2
        assert!((distance_to_set(&[1.0, 1.0], &tri, NormSpec::L1).unwrap().0 - 1.0).abs() < 1e-9);
        assert!((distance_to_set(&[1.0, 1.0], &tri, NormSpec::Linf).unwrap().0 - 0.5).abs() < 1e-9);
        assert!((distance_to_set(&[1.0, 1.0], &tri, NormSpec::L2).unwrap().0 - 0.5f64.sqrt()).abs() < 1e-9);
        let q = distance_to_set(&[1.0, 1.0], &tri, NormSpec::Lq(3.0)).unwrap().0;
        assert!((q - 2f64.powf(1.0 / 3.0) * 0.5).abs() < 1e-6);
    }

    /// Brute-force distance over a fine grid of hull weights (3 vertices).
    fn grid_distance(p: &[f64], verts: &[Vec<f64>], n: NormSpec) -> f64 {
        let res = 400;
        let mut best = f64::INFINITY;
        for i in 0..=res {
            for j in 0..=(res - i) {
                let l = [i as f64 / res as f64, j as f64 / res as f64, (res - i - j) as f64 / res as f64];
                let w = combine(verts, &l);
                let d: Vec<f64> = p.iter().zip(&w).map(|(a, b)| a - b).collect();
                best = best.min(n.norm(&d));
            }
        }
        best
    }

    #[test]
    fn distance_matches_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let verts: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let s = TargetSet::new(verts.clone()).unwrap();
            let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for n in [NormSpec::L1, NormSpec::L2, NormSpec::Linf, NormSpec::Lq(3.0)] {
                let d = distance_to_set(&p, &s, n).unwrap().0;
                let g = grid_distance(&p, &verts, n);
                assert!(d <= g + 1e-9, "{n:?}: solver {d} above grid {g}");
                assert!(g - d < 0.02, "{n:?}: solver {d} far below grid {g}");
            }
        }
    }

    proptest! {
        #[test]
        fn distance_is_lipschitz(
            verts in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..5),
            p in prop::collection::vec(-2.0f64..2.0, 2),
            q in prop::collection::vec(-2.0f64..2.0, 2),
            which in 0usize..4,
        ) {
            let n = [NormSpec::L1, NormSpec::L2, NormSpec::Linf, NormSpec::Lq(3.0)][which];
            let s = TargetSet::new(verts).unwrap();
            let dp = distance_to_set(&p, &s, n).unwrap().0;
            let dq = distance_to_set(&q, &s, n).unwrap().0;
            let diff: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a - b).collect();
            prop_assert!((dp - dq).abs() <= n.norm(&diff) + 1e-6);
        }
    }

    /// Straight-line recomputation for departure sets under Average.
    fn direct_regret(table: &[Vec<f64>], maps: &[Vec<usize>], h: &[(usize, usize)]) -> f64 {
        let t = h.len() as f64;
        let real: f64 = h.iter().map(|&(f, x)| table[f][x]).sum::<f64>() / t;
        let best = maps
            .iter()
            .map(|m| h.iter().map(|&(f, x)| table[m[f]][x]).sum::<f64>() / t)
            .fold(f64::INFINITY, f64::min);
        real - best
    }

    #[test]
    fn departure_regret_matches_direct_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let nf = rng.gen_range(1..4);
            let nx = rng.gen_range(1..4);
            let t = rng.gen_range(1..6);
            let table: Vec<Vec<f64>> = (0..nf).map(|_| (0..nx).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let nmaps = rng.gen_range(1..5);
            let maps: Vec<Vec<usize>> = (0..nmaps).map(|_| (0..nf).map(|_| rng.gen_range(0..nf)).collect()).collect();
            let base = maps.iter().cloned().map(TransformStep::Departure).collect();
            let g = GameSpec::indexed(
                PayoffTable::scalar(&table).unwrap(),
                Aggregator::Average,
                TransformSet::time_invariant(base, t).unwrap(),
                t,
            )
            .unwrap();
            let h: Vec<(usize, usize)> = (0..t).map(|_| (rng.gen_range(0..nf), rng.gen_range(0..nx))).collect();
            let r = regret_of_history(&g, &History::new(h.clone())).unwrap();
            assert!((r - direct_regret(&table, &maps, &h)).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip_and_missing_field() {
        let g = pennies(2);
        let back = GameSpec::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
        let e = GameSpec::from_json(r#"{"F":["a"],"X":["b"],"payoff":{"k":1,"values":[[[0]]]},"aggregator":{"kind":"Average"},"transforms":{"preset":"external"}}"#)
            .unwrap_err();
        assert!(e.to_string().contains(".T"), "{e}");
    }

    #[test]
    fn validation_paths() {
        let e = GameSpec::from_json(r#"{"F":["a","b"],"X":["b"],"payoff":{"k":1,"values":[[[0]]]},"aggregator":{"kind":"Average"},"transforms":{"preset":"external"},"T":1}"#)
            .unwrap_err();
        assert!(e.to_string().contains(".payoff.values"), "{e}");
        assert!(LabelSet::from_strs(&["a", "a"]).is_err());
        assert!(MixedStrategy::new(vec![0.5, 0.6]).is_err());
        assert!(NormSpec::Lq(0.5).validate().is_err());
    }

    #[test]
    fn smoothness_table() {
        assert_eq!(NormSpec::L2.smoothness().unwrap().constant, 2.0);
        let s = NormSpec::Lq(1.5).smoothness().unwrap();
        assert_eq!((s.constant, s.exponent), (1.5, 1.5));
        let s = NormSpec::Lq(4.0).smoothness().unwrap();
        assert_eq!((s.constant, s.exponent), (6.0, 2.0));
        assert!(NormSpec::L1.smoothness().is_none() && NormSpec::Linf.smoothness().is_none());
    }

    #[test]
    fn tree_indexing() {
        let t = ValuedTree::from_fn(3, |t, p| (t, p)).unwrap();
        // path (+,−,+) = 0b101
        let nodes: Vec<_> = t.path(0b101).cloned().collect();
        assert_eq!(nodes, vec![(0, 0), (1, 1), (2, 0b10)]);
        assert_eq!(ValuedTree::<u8>::sign(3, 0b101, 1), -1.0);
        let d = ValuedTree::per_depth(&[1, 2, 3]).unwrap();
        assert_eq!(d.values(), &[1, 2, 2, 3, 3, 3, 3]);
    }

    #[test]
    fn strategy_sampling() {
        let m = MixedStrategy::new(vec![0.25, 0.0, 0.75]).unwrap();
        assert_eq!(m.sample(0.1), 0);
        assert_eq!(m.sample(0.3), 2);
        assert_eq!(m.sample(0.999_999_999_999_999_9), 2);
        assert_eq!(m.support(), vec![0, 2]);
    }
}
