//! Dense two-phase simplex over a generic ordered field, and zero-sum matrix
//! games on top of it.
//!
//! The same code runs on `f64` (tolerance-based pivoting) and on exact
//! `BigRational` (no tolerance); the rational path is the oracle for the float
//! path. Pivoting uses Dantzig's rule and switches to Bland's rule after a
//! run of degenerate pivots.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::game_model::MixedStrategy;

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Pivoting tolerance; zero for exact arithmetic.
    fn eps() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn is_pos(&self) -> bool {
        *self > Self::eps()
    }
    fn is_neg(&self) -> bool {
        *self < -Self::eps()
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn eps() -> Self {
        1e-11
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn eps() -> Self {
        Zero::zero()
    }
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite input")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_neg(&self) -> bool {
        Signed::is_negative(self)
    }
}

/// Exact rational from an integer ratio.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub sense: Sense,
    pub rhs: T,
}

/// minimize objective·x subject to rows, x ≥ 0.
#[derive(Clone, Debug)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub rows: Vec<Constraint<T>>,
}

#[derive(Clone, Debug)]
pub enum LpOutcome<T> {
    Optimal { x: Vec<T>, value: T },
    Infeasible,
    Unbounded,
}

struct Tableau<T> {
    a: Vec<Vec<T>>,
    obj: Vec<T>,
    basis: Vec<usize>,
    ncols: usize,
}

impl<T: Scalar> Tableau<T> {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c].clone();
        for v in self.a[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let prow = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c].clone();
            if f.is_pos() || f.is_neg() {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            row[c] = T::zero();
        }
        let f = self.obj[c].clone();
        if f.is_pos() || f.is_neg() {
            for (v, pv) in self.obj.iter_mut().zip(&prow) {
                *v = v.clone() - f.clone() * pv.clone();
            }
        }
        self.obj[c] = T::zero();
        self.basis[r] = c;
    }

    /// Minimize the objective row over columns where `enterable` holds.
    fn run(&mut self, enterable: &dyn Fn(usize) -> bool) -> bool {
        let m = self.a.len();
        let rhs = self.ncols;
        let mut degenerate = 0usize;
        let bland_after = 50 + 5 * (m + self.ncols);
        let mut iters = 0usize;
        loop {
            iters += 1;
            if iters > 100_000 {
                return true;
            }
            let bland = degenerate > bland_after;
            let mut enter: Option<usize> = None;
            for j in 0..self.ncols {
                if !enterable(j) || !self.obj[j].is_neg() {
                    continue;
                }
                match enter {
                    None => enter = Some(j),
                    Some(e) if !bland && self.obj[j] < self.obj[e] => enter = Some(j),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
            let Some(c) = enter else { return true };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..m {
                if !self.a[i][c].is_pos() {
                    continue;
                }
                let ratio = self.a[i][rhs].clone() / self.a[i][c].clone();
                let better = match &leave {
                    None => true,
                    Some((l, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*l]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else { return false };
            if ratio.is_pos() {
                degenerate = 0;
            } else {
                degenerate += 1;
            }
            self.pivot(r, c);
        }
    }
}

/// Two-phase simplex.
pub fn solve<T: Scalar>(lp: &LinearProgram<T>) -> LpOutcome<T> {
    let n = lp.objective.len();
    let m = lp.rows.len();
    // normalize rhs ≥ 0
    let rows: Vec<(Vec<T>, Sense, T)> = lp
        .rows
        .iter()
        .map(|r| {
            if r.rhs.is_neg() {
                let flip = match r.sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
                (r.coeffs.iter().map(|v| -v.clone()).collect(), flip, -r.rhs.clone())
            } else {
                (r.coeffs.clone(), r.sense, r.rhs.clone())
            }
        })
        .collect();
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let ncols = n + n_slack + n_art;
    let mut a = vec![vec![T::zero(); ncols + 1]; m];
    let mut basis = vec![0; m];
    let mut is_art = vec![false; ncols];
    let (mut s, mut art) = (n, n + n_slack);
    for (i, (coeffs, sense, rhs)) in rows.iter().enumerate() {
        for (j, v) in coeffs.iter().enumerate() {
            a[i][j] = v.clone();
        }
        a[i][ncols] = rhs.clone();
        match sense {
            Sense::Le => {
                a[i][s] = T::one();
                basis[i] = s;
                s += 1;
            }
            Sense::Ge => {
                a[i][s] = -T::one();
                s += 1;
                a[i][art] = T::one();
                basis[i] = art;
                is_art[art] = true;
                art += 1;
            }
            Sense::Eq => {
                a[i][art] = T::one();
                basis[i] = art;
                is_art[art] = true;
                art += 1;
            }
        }
    }
    let mut tab = Tableau { a, obj: vec![T::zero(); ncols + 1], basis, ncols };
    if n_art > 0 {
        for i in 0..m {
            if is_art[tab.basis[i]] {
                for j in 0..=ncols {
                    if j == ncols || !is_art[j] {
                        tab.obj[j] = tab.obj[j].clone() - tab.a[i][j].clone();
                    }
                }
            }
        }
        tab.run(&|_| true);
        // the phase-one optimum Σ artificials is −obj[rhs]
        if (-tab.obj[ncols].clone()).is_pos() {
            return LpOutcome::Infeasible;
        }
        // drive remaining artificials out of the basis
        for i in 0..m {
            if is_art[tab.basis[i]] {
                if let Some(j) = (0..ncols).find(|&j| !is_art[j] && (tab.a[i][j].is_pos() || tab.a[i][j].is_neg())) {
                    tab.pivot(i, j);
                }
            }
        }
    }
    // phase two objective
    let mut obj = vec![T::zero(); ncols + 1];
    for (j, c) in lp.objective.iter().enumerate() {
        obj[j] = c.clone();
    }
    for i in 0..m {
        let b = tab.basis[i];
        if b < n {
            let cb = obj[b].clone();
            if cb.is_pos() || cb.is_neg() {
                for j in 0..=ncols {
                    obj[j] = obj[j].clone() - cb.clone() * tab.a[i][j].clone();
                }
            }
        }
    }
    tab.obj = obj;
    if !tab.run(&|j| !is_art[j]) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![T::zero(); n];
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.a[i][ncols].clone();
        }
    }
    let value = -tab.obj[ncols].clone();
    LpOutcome::Optimal { x, value }
}

/// maximize c·x s.t. A x ≤ b, x ≥ 0, with b ≥ 0. Returns (x, y, value) with
/// y the optimal dual.
pub fn solve_canonical_max<T: Scalar>(a: &[Vec<T>], b: &[T], c: &[T]) -> Option<(Vec<T>, Vec<T>, T)> {
    let m = a.len();
    let n = c.len();
    let ncols = n + m;
    let mut rows = vec![vec![T::zero(); ncols + 1]; m];
    for i in 0..m {
        for j in 0..n {
            rows[i][j] = a[i][j].clone();
        }
        rows[i][n + i] = T::one();
        rows[i][ncols] = b[i].clone();
    }
    let mut obj = vec![T::zero(); ncols + 1];
    for j in 0..n {
        obj[j] = -c[j].clone();
    }
    let mut tab = Tableau { a: rows, obj, basis: (n..n + m).collect(), ncols };
    if !tab.run(&|_| true) {
        return None;
    }
    let mut x = vec![T::zero(); n];
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.a[i][ncols].clone();
        }
    }
    let y = (0..m).map(|i| tab.obj[n + i].clone()).collect();
    Some((x, y, tab.obj[ncols].clone()))
}

/// Value of min_q max_p qᵀMp and optimal (q, p), unnormalized-safe.
pub fn matrix_game_generic<T: Scalar>(m: &[Vec<T>]) -> (T, Vec<T>, Vec<T>) {
    let rows = m.len();
    let cols = m[0].len();
    let mut lo = m[0][0].clone();
    for r in m {
        for v in r {
            if *v < lo {
                lo = v.clone();
            }
        }
    }
    let shift = T::one() - lo;
    let shifted: Vec<Vec<T>> = m.iter().map(|r| r.iter().map(|v| v.clone() + shift.clone()).collect()).collect();
    // max Σu s.t. M'ᵀu ≤ 1 gives u = q/v; the dual w gives p = w·v
    let shifted_t: Vec<Vec<T>> = (0..cols).map(|j| shifted.iter().map(|r| r[j].clone()).collect()).collect();
    let (u, w, s) = solve_canonical_max(&shifted_t, &vec![T::one(); cols], &vec![T::one(); rows])
        .expect("shifted matrix game LP is bounded");
    let v = T::one() / s.clone();
    let q = u.into_iter().map(|ui| ui * v.clone()).collect();
    let p = w.into_iter().map(|wi| wi * v.clone()).collect();
    (v - shift, q, p)
}

/// Value only, float path (no tie-breaking).
pub fn game_value(m: &[Vec<f64>]) -> f64 {
    if m.len() == 1 {
        return m[0].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    }
    if m[0].len() == 1 {
        return m.iter().map(|r| r[0]).fold(f64::INFINITY, f64::min);
    }
    if let Some(v) = pure_saddle(m) {
        return v;
    }
    matrix_game_generic(m).0
}

/// Saddle point in pure strategies, if any.
fn pure_saddle(m: &[Vec<f64>]) -> Option<f64> {
    let upper = m.iter().map(|r| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).fold(f64::INFINITY, f64::min);
    let lower = (0..m[0].len())
        .map(|j| m.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    (upper - lower <= 0.0).then_some(upper)
}

/// Value only, exact path.
pub fn game_value_exact(m: &[Vec<BigRational>]) -> BigRational {
    matrix_game_generic(m).0
}

/// Solution of a zero-sum matrix game where the row player minimizes.
#[derive(Clone, Debug)]
pub struct GameSolution {
    pub value: f64,
    pub row: MixedStrategy,
    pub col: MixedStrategy,
}

/// Solve min_q max_p qᵀMp. Among optimal strategies each side gets the one
/// with the lexicographically smallest support.
pub fn solve_matrix_game(m: &[Vec<f64>]) -> Result<GameSolution> {
    if m.is_empty() || m[0].is_empty() || m.iter().any(|r| r.len() != m[0].len()) {
        return Err(Error::Precondition("matrix game must be a nonempty rectangle".into()));
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("matrix game entries must be finite".into()));
    }
    let (value, q, p) = matrix_game_generic(m);
    let scale = m.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-11 * scale;
    let row = lex_support(m, value + tol).unwrap_or(q);
    let neg_t: Vec<Vec<f64>> = (0..m[0].len()).map(|j| m.iter().map(|r| -r[j]).collect()).collect();
    let col = lex_support(&neg_t, -value + tol).unwrap_or(p);
    let sol = GameSolution { value, row: MixedStrategy::normalized(row), col: MixedStrategy::normalized(col) };
    let gap = duality_gap(m, &sol);
    if gap > 1e-9 * scale {
        return Err(Error::Solver(format!("duality gap {gap:e}")));
    }
    Ok(sol)
}

/// max_p qᵀMp − min_q qᵀMp at the reported strategies.
pub fn duality_gap(m: &[Vec<f64>], s: &GameSolution) -> f64 {
    let q = s.row.weights();
    let p = s.col.weights();
    let upper = (0..m[0].len())
        .map(|j| m.iter().zip(q).map(|(r, qi)| qi * r[j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let lower = m.iter().map(|r| r.iter().zip(p).map(|(a, b)| a * b).sum::<f64>()).fold(f64::INFINITY, f64::min);
    upper - lower
}

/// Row strategy q with qᵀM ≤ v (per column) whose support is lexicographically
/// smallest, built greedily with feasibility LPs.
fn lex_support(m: &[Vec<f64>], v: f64) -> Result<Vec<f64>> {
    let n = m.len();
    let mut chosen: Vec<usize> = Vec::new();
    let mut last: Option<usize> = None;
    loop {
        // is the support exactly `chosen` attainable?
        if !chosen.is_empty() {
            if let Some(q) = positive_on(m, v, &chosen, &chosen) {
                return Ok(q);
            }
        }
        let start = last.map_or(0, |l| l + 1);
        let mut next = None;
        for j in start..n {
            let mut allowed = chosen.clone();
            allowed.extend(j..n);
            let mut need = chosen.clone();
            need.push(j);
            if positive_on(m, v, &allowed, &need).is_some() {
                next = Some(j);
                break;
            }
        }
        match next {
            Some(j) => {
                chosen.push(j);
                last = Some(j);
            }
            None => {
                return Err(Error::Solver("lexicographic support search found no optimal strategy".into()));
            }
        }
    }
}

/// Weight below which a coordinate counts as outside the support.
const POSITIVE: f64 = 1e-7;

/// Some optimal q supported within `allowed` with q_i > 0 for all i in `need`.
fn positive_on(m: &[Vec<f64>], v: f64, allowed: &[usize], need: &[usize]) -> Option<Vec<f64>> {
    let na = allowed.len();
    // variables: q over allowed, then t; maximize t s.t. q_i ≥ t for i ∈ need
    let mut objective = vec![0.0; na + 1];
    objective[na] = -1.0;
    let mut rows = Vec::new();
    for j in 0..m[0].len() {
        let mut c: Vec<f64> = allowed.iter().map(|&i| m[i][j]).collect();
        c.push(0.0);
        rows.push(Constraint { coeffs: c, sense: Sense::Le, rhs: v });
    }
    let mut sum = vec![1.0; na];
    sum.push(0.0);
    rows.push(Constraint { coeffs: sum, sense: Sense::Eq, rhs: 1.0 });
    for &i in need {
        let pos = allowed.iter().position(|&a| a == i)?;
        let mut c = vec![0.0; na + 1];
        c[pos] = -1.0;
        c[na] = 1.0;
        rows.push(Constraint { coeffs: c, sense: Sense::Le, rhs: 0.0 });
    }
    let mut cap = vec![0.0; na + 1];
    cap[na] = 1.0;
    rows.push(Constraint { coeffs: cap, sense: Sense::Le, rhs: 1.0 });
    match solve(&LinearProgram { objective, rows }) {
        LpOutcome::Optimal { x, .. } if x[na] > POSITIVE => {
            let mut q = vec![0.0; m.len()];
            for (k, &i) in allowed.iter().enumerate() {
                q[i] = x[k];
            }
            Some(q)
        }
        _ => None,
    }
}
