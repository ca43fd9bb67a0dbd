//! Shattering and fat-shattering dimensions, and covering numbers on trees,
//! by exhaustive search on finite instances.

use std::collections::HashMap;

use serde::Serialize;

use crate::bounds::sauer_sum;
use crate::error::{Error, Result};
use crate::game_model::{PayoffTable, TransformSet, TransformStep, ValuedTree};
use crate::par::{self, Exec};

const EPS: f64 = 1e-12;

/// Largest Φ handled by the subset searches.
pub const MAX_CLASS: usize = 63;

/// Dimension search outcome; `AtLeast` when the cap was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Dim {
    Exact(usize),
    AtLeast(usize),
}

impl Dim {
    pub fn value(self) -> usize {
        match self {
            Dim::Exact(d) | Dim::AtLeast(d) => d,
        }
    }
}

impl std::fmt::Display for Dim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dim::Exact(d) => write!(f, "{d}"),
            Dim::AtLeast(d) => write!(f, "≥{d}"),
        }
    }
}

/// ℓ_φ(f,x) for every base transformation, flattened over (f,x).
pub fn base_profiles(table: &PayoffTable, base: &[TransformStep]) -> Result<Vec<Vec<f64>>> {
    if table.k() != 1 {
        return Err(Error::Precondition("dimensions need scalar payoffs".into()));
    }
    if base.is_empty() {
        return Err(Error::Precondition("empty transformation class".into()));
    }
    let (nf, nx) = (table.nf(), table.nx());
    base.iter()
        .enumerate()
        .map(|(i, step)| match step {
            TransformStep::Departure(map) => {
                if map.len() != nf || map.iter().any(|&g| g >= nf) {
                    return Err(Error::Precondition(format!("base[{i}] is not a map on F")));
                }
                Ok((0..nf * nx).map(|c| table.get(map[c / nx], c % nx)[0]).collect())
            }
            TransformStep::PayoffOverride(t) => {
                if t.nf() != nf || t.nx() != nx || t.k() != 1 {
                    return Err(Error::Precondition(format!("base[{i}] override has the wrong shape")));
                }
                Ok((0..nf * nx).map(|c| t.get(c / nx, c % nx)[0]).collect())
            }
        })
        .collect()
}

struct Shatter<'a> {
    prof: &'a [Vec<f64>],
    cells: usize,
    cap: usize,
    alpha: f64,
    witnesses: Vec<Vec<f64>>,
}

impl Shatter<'_> {
    fn split(&self, s: u64, cell: usize, w: f64) -> (u64, u64) {
        let (mut plus, mut minus) = (0u64, 0u64);
        for (i, p) in self.prof.iter().enumerate() {
            if s >> i & 1 == 0 {
                continue;
            }
            let v = p[cell];
            if v - w >= self.alpha / 2.0 - EPS {
                plus |= 1 << i;
            }
            if w - v >= self.alpha / 2.0 - EPS {
                minus |= 1 << i;
            }
        }
        (plus, minus)
    }

    fn dim(&self, s: u64, memo: &mut HashMap<u64, usize>) -> usize {
        if let Some(&d) = memo.get(&s) {
            return d;
        }
        let mut best = 0;
        'outer: for cell in 0..self.cells {
            for &w in &self.witnesses[cell] {
                let (p, m) = self.split(s, cell, w);
                if p == 0 || m == 0 {
                    continue;
                }
                let lo = self.dim(p, memo);
                if lo < best {
                    continue;
                }
                let d = 1 + lo.min(self.dim(m, memo));
                best = best.max(d);
                if best >= self.cap {
                    break 'outer;
                }
            }
        }
        let best = best.min(self.cap);
        memo.insert(s, best);
        best
    }

    fn run(&self, exec: Exec) -> Dim {
        let full = if self.prof.len() == 64 { u64::MAX } else { (1u64 << self.prof.len()) - 1 };
        // each root cell gets its own memo
        let per_cell = par::map_indexed(exec, self.cells, |cell| {
            let mut memo = HashMap::new();
            let mut best = 0;
            for &w in &self.witnesses[cell] {
                let (p, m) = self.split(full, cell, w);
                if p != 0 && m != 0 {
                    best = best.max(1 + self.dim(p, &mut memo).min(self.dim(m, &mut memo)));
                }
            }
            best
        });
        let d = per_cell.into_iter().max().unwrap_or(0).min(self.cap);
        if d >= self.cap {
            Dim::AtLeast(self.cap)
        } else {
            Dim::Exact(d)
        }
    }
}

/// Shattering dimension of a ±1-valued base class, capped at `cap`.
pub fn sdim(table: &PayoffTable, base: &[TransformStep], cap: usize, exec: Exec) -> Result<Dim> {
    let prof = base_profiles(table, base)?;
    if prof.iter().flatten().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::Precondition("sdim needs payoffs in {-1, +1}".into()));
    }
    check_class(&prof)?;
    let cells = table.nf() * table.nx();
    Ok(Shatter { prof: &prof, cells, cap, alpha: 2.0, witnesses: vec![vec![0.0]; cells] }.run(exec))
}

/// Witness values v ± α/2 and pairwise midpoints of the achievable values in
/// each cell.
pub fn default_witness_grid(prof: &[Vec<f64>], alpha: f64) -> Vec<Vec<f64>> {
    let cells = prof.first().map_or(0, Vec::len);
    (0..cells)
        .map(|c| {
            let mut vals: Vec<f64> = prof.iter().map(|p| p[c]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            let mut w = Vec::new();
            for (i, &a) in vals.iter().enumerate() {
                w.push(a - alpha / 2.0);
                w.push(a + alpha / 2.0);
                for &b in &vals[i + 1..] {
                    w.push((a + b) / 2.0);
                }
            }
            w.sort_by(f64::total_cmp);
            w.dedup();
            w
        })
        .collect()
}

/// Fat-shattering dimension at scale α with witnesses from `grid` (one list
/// per (f,x) cell), or the default grid.
pub fn fat_dim(
    table: &PayoffTable,
    base: &[TransformStep],
    alpha: f64,
    grid: Option<Vec<Vec<f64>>>,
    cap: usize,
    exec: Exec,
) -> Result<Dim> {
    if !(alpha > 0.0) {
        return Err(Error::Precondition("alpha must be positive".into()));
    }
    let prof = base_profiles(table, base)?;
    check_class(&prof)?;
    let cells = table.nf() * table.nx();
    let witnesses = grid.unwrap_or_else(|| default_witness_grid(&prof, alpha));
    if witnesses.len() != cells || witnesses.iter().all(Vec::is_empty) {
        return Err(Error::Precondition("empty witness grid".into()));
    }
    Ok(Shatter { prof: &prof, cells, cap, alpha, witnesses }.run(exec))
}

fn check_class(prof: &[Vec<f64>]) -> Result<()> {
    if prof.len() > MAX_CLASS {
        return Err(Error::Precondition(format!("class larger than {MAX_CLASS}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Covers

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CoverNorm {
    L1,
    L2,
    Linf,
    Zero,
}

impl CoverNorm {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1" | "l1" => Ok(CoverNorm::L1),
            "2" | "l2" => Ok(CoverNorm::L2),
            "inf" | "linf" => Ok(CoverNorm::Linf),
            "zero" | "0" => Ok(CoverNorm::Zero),
            other => Err(Error::Unknown(format!("cover norm {other}"))),
        }
    }

    fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let d = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            CoverNorm::L1 => d.sum::<f64>() / n,
            CoverNorm::L2 => (d.map(|v| v * v).sum::<f64>() / n).sqrt(),
            CoverNorm::Linf | CoverNorm::Zero => d.fold(0.0, f64::max),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CoverMethod {
    /// Exact zero-cover recursion.
    Recursion,
    /// Exact set cover over every tree with values on the candidate grid.
    ExactGrid,
    /// Greedy set cover over every grid tree; within a ln factor.
    GreedyGrid,
    /// Exact set cover over profile and midpoint trees; an upper bound.
    ProfileTrees,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverReport {
    pub size: usize,
    pub method: CoverMethod,
    /// Greedy guarantee: size ≤ ratio · optimum over the candidates.
    pub ratio_bound: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct CoverOptions {
    pub exact_limit: usize,
    pub greedy_limit: usize,
    pub allow_greedy: bool,
}

impl Default for CoverOptions {
    fn default() -> Self {
        CoverOptions { exact_limit: 10_000, greedy_limit: 1_000_000, allow_greedy: true }
    }
}

/// Value of ℓ_{φ_t} at every node of the tree, per sequence.
fn node_values(table: &PayoffTable, phi: &TransformSet, tree: &ValuedTree<(usize, usize)>) -> Result<Vec<Vec<f64>>> {
    if table.k() != 1 {
        return Err(Error::Precondition("covers need scalar payoffs".into()));
    }
    if tree.depth() != phi.horizon() {
        return Err(Error::Dimension { expected: phi.horizon(), got: tree.depth() });
    }
    if tree.values().iter().any(|&(f, x)| f >= table.nf() || x >= table.nx()) {
        return Err(Error::Precondition("tree label outside F×X".into()));
    }
    let depth = tree.depth();
    Ok(phi
        .sequences()
        .iter()
        .map(|seq| {
            let mut out = Vec::with_capacity(tree.values().len());
            for t in 0..depth {
                for prefix in 0..(1u64 << t) {
                    let (f, x) = *tree.at(t, prefix);
                    out.push(phi.payoff(table, seq[t], f, x)[0]);
                }
            }
            out
        })
        .collect())
}

/// Payoff values of the table and of every override, plus pairwise midpoints.
pub fn candidate_values(table: &PayoffTable, phi: &TransformSet) -> Vec<f64> {
    let mut vals = table.distinct_values();
    for step in phi.steps() {
        if let TransformStep::PayoffOverride(t) = step {
            vals.extend(t.distinct_values());
        }
    }
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let mut out = vals.clone();
    for (i, &a) in vals.iter().enumerate() {
        for &b in &vals[i + 1..] {
            out.push((a + b) / 2.0);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// N_p(α, Φ_T, (f,x)) on a fixed tree.
pub fn cover_number(
    norm: CoverNorm,
    alpha: f64,
    table: &PayoffTable,
    phi: &TransformSet,
    tree: &ValuedTree<(usize, usize)>,
    opts: &CoverOptions,
) -> Result<CoverReport> {
    let vals = node_values(table, phi, tree)?;
    let depth = tree.depth();
    if norm == CoverNorm::Zero {
        let size = zero_cover_rec(&vals, depth, 0, 0, &(0..vals.len()).collect::<Vec<_>>());
        return Ok(CoverReport { size, method: CoverMethod::Recursion, ratio_bound: 1.0 });
    }
    if !(alpha >= 0.0) {
        return Err(Error::Precondition("alpha must be nonnegative".into()));
    }
    // elements: (sequence, path), profile along the path
    let paths = 1u64 << depth;
    let mut profiles = Vec::with_capacity(vals.len() * paths as usize);
    for v in &vals {
        for p in 0..paths {
            profiles.push(path_profile(v, depth, p));
        }
    }
    let cand = candidate_values(table, phi);
    let nodes = tree.values().len();
    let grid_count = (cand.len() as f64).powi(nodes as i32);
    let covers = |tree_vals: &[f64]| -> Vec<u64> {
        let mut bits = vec![0u64; profiles.len().div_ceil(64)];
        for p in 0..paths {
            let prof = path_profile(tree_vals, depth, p);
            for s in 0..vals.len() {
                let e = s * paths as usize + p as usize;
                if norm.dist(&prof, &profiles[e]) <= alpha + EPS {
                    bits[e / 64] |= 1 << (e % 64);
                }
            }
        }
        bits
    };
    let n_elem = profiles.len();
    if grid_count <= opts.greedy_limit as f64 {
        let mut sets = Vec::with_capacity(grid_count as usize);
        let mut idx = vec![0usize; nodes];
        loop {
            let tv: Vec<f64> = idx.iter().map(|&i| cand[i]).collect();
            sets.push(covers(&tv));
            let mut j = 0;
            while j < nodes {
                idx[j] += 1;
                if idx[j] < cand.len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == nodes {
                break;
            }
        }
        if grid_count <= opts.exact_limit as f64 {
            return Ok(CoverReport { size: set_cover_exact(n_elem, sets), method: CoverMethod::ExactGrid, ratio_bound: 1.0 });
        }
        if !opts.allow_greedy {
            return Err(Error::Precondition("instance too large for exact cover and greedy disabled".into()));
        }
        let ratio = (1..=vals.len() * paths as usize).map(|i| 1.0 / i as f64).sum();
        return Ok(CoverReport { size: set_cover_greedy(n_elem, &sets), method: CoverMethod::GreedyGrid, ratio_bound: ratio });
    }
    let mut sets = Vec::new();
    for (i, a) in vals.iter().enumerate() {
        sets.push(covers(a));
        for b in &vals[i + 1..] {
            let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x + y) / 2.0).collect();
            sets.push(covers(&mid));
        }
    }
    Ok(CoverReport { size: set_cover_exact(n_elem, sets), method: CoverMethod::ProfileTrees, ratio_bound: 1.0 })
}

fn path_profile(node_vals: &[f64], depth: usize, path: u64) -> Vec<f64> {
    (0..depth).map(|t| node_vals[(1usize << t) - 1 + (path >> (depth - t)) as usize]).collect()
}

/// Σ over root values of the larger child requirement.
fn zero_cover_rec(vals: &[Vec<f64>], depth: usize, t: usize, prefix: u64, s: &[usize]) -> usize {
    if t == depth {
        return 1;
    }
    let node = (1usize << t) - 1 + prefix as usize;
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for &i in s {
        let v = vals[i][node];
        match groups.iter_mut().find(|g| g.0 == v) {
            Some(g) => g.1.push(i),
            None => groups.push((v, vec![i])),
        }
    }
    groups
        .iter()
        .map(|(_, g)| {
            let l = zero_cover_rec(vals, depth, t + 1, prefix << 1, g);
            let r = zero_cover_rec(vals, depth, t + 1, (prefix << 1) | 1, g);
            l.max(r)
        })
        .sum()
}

/// Branch and bound; sets are bitsets over `n` elements.
fn set_cover_exact(n: usize, mut sets: Vec<Vec<u64>>) -> usize {
    sets.sort();
    sets.dedup();
    sets.retain(|s| s.iter().any(|&w| w != 0));
    let words = n.div_ceil(64);
    let full: Vec<u64> = (0..words).map(|w| if w + 1 < words || n % 64 == 0 { u64::MAX } else { (1u64 << (n % 64)) - 1 }).collect();
    let mut best = set_cover_greedy(n, &sets);
    let max_size = sets.iter().map(|s| popcount(s)).max().unwrap_or(1).max(1);
    fn rec(sets: &[Vec<u64>], covered: &mut Vec<u64>, full: &[u64], used: usize, best: &mut usize, max_size: usize) {
        let missing: usize = full.iter().zip(covered.iter()).map(|(f, c)| (f & !c).count_ones() as usize).sum();
        if missing == 0 {
            *best = (*best).min(used);
            return;
        }
        if used + missing.div_ceil(max_size) >= *best {
            return;
        }
        // element covered by the fewest sets
        let mut pick = (usize::MAX, 0usize);
        for (w, (f, c)) in full.iter().zip(covered.iter()).enumerate() {
            let mut m = f & !c;
            while m != 0 {
                let b = m.trailing_zeros() as usize;
                m &= m - 1;
                let e = w * 64 + b;
                let cnt = sets.iter().filter(|s| s[w] >> b & 1 == 1).count();
                if cnt < pick.0 {
                    pick = (cnt, e);
                }
            }
        }
        let (w, b) = (pick.1 / 64, pick.1 % 64);
        for s in sets.iter().filter(|s| s[w] >> b & 1 == 1) {
            let saved = covered.clone();
            covered.iter_mut().zip(s).for_each(|(c, x)| *c |= x);
            rec(sets, covered, full, used + 1, best, max_size);
            *covered = saved;
        }
    }
    rec(&sets, &mut vec![0; words], &full, 0, &mut best, max_size);
    best
}

fn popcount(s: &[u64]) -> usize {
    s.iter().map(|w| w.count_ones() as usize).sum()
}

fn set_cover_greedy(n: usize, sets: &[Vec<u64>]) -> usize {
    let words = n.div_ceil(64);
    let mut covered = vec![0u64; words];
    let mut count = 0;
    loop {
        let mut best = (0usize, 0usize);
        for (i, s) in sets.iter().enumerate() {
            let gain: usize = s.iter().zip(&covered).map(|(a, c)| (a & !c).count_ones() as usize).sum();
            if gain > best.0 {
                best = (gain, i);
            }
        }
        if best.0 == 0 {
            return count;
        }
        covered.iter_mut().zip(&sets[best.1]).for_each(|(c, x)| *c |= x);
        count += 1;
    }
}

/// N(0, Φ_T, T): the zero cover maximized over all (F×X)-valued trees.
///
/// Works bottom-up over depth on the Pareto front of requirement vectors
/// (N(subtree, S))_{S ⊆ Φ_T}.
pub fn zero_cover_sup(table: &PayoffTable, phi: &TransformSet) -> Result<usize> {
    if table.k() != 1 {
        return Err(Error::Precondition("covers need scalar payoffs".into()));
    }
    let n = phi.len();
    if n > 10 {
        return Err(Error::Precondition("zero_cover_sup supports at most 10 sequences".into()));
    }
    let subsets = 1usize << n;
    let cells = table.nf() * table.nx();
    let nx = table.nx();
    // below the last round every nonempty set needs one tree
    let mut front: Vec<Vec<u32>> = vec![(0..subsets).map(|s| u32::from(s != 0)).collect()];
    for t in (0..phi.horizon()).rev() {
        let mut next: Vec<Vec<u32>> = Vec::new();
        for cell in 0..cells {
            let (f, x) = (cell / nx, cell % nx);
            let vals: Vec<f64> = phi.sequences().iter().map(|seq| phi.payoff(table, seq[t], f, x)[0]).collect();
            // partition of each subset by value at this cell
            let parts: Vec<Vec<usize>> = (0..subsets)
                .map(|s| {
                    let mut groups: Vec<(f64, usize)> = Vec::new();
                    for i in (0..n).filter(|i| s >> i & 1 == 1) {
                        match groups.iter_mut().find(|g| g.0 == vals[i]) {
                            Some(g) => g.1 |= 1 << i,
                            None => groups.push((vals[i], 1 << i)),
                        }
                    }
                    groups.into_iter().map(|g| g.1).collect()
                })
                .collect();
            for l in &front {
                for r in &front {
                    let v: Vec<u32> = parts.iter().map(|gs| gs.iter().map(|&g| l[g].max(r[g])).sum()).collect();
                    next.push(v);
                }
            }
        }
        front = pareto(next);
    }
    Ok(front.iter().map(|v| v[subsets - 1]).max().unwrap_or(0) as usize)
}

fn pareto(mut vs: Vec<Vec<u32>>) -> Vec<Vec<u32>> {
    vs.sort();
    vs.dedup();
    vs.sort_by_key(|v| std::cmp::Reverse(v.iter().map(|&x| x as u64).sum::<u64>()));
    let mut keep: Vec<Vec<u32>> = Vec::new();
    for v in vs {
        if !keep.iter().any(|k| k.iter().zip(&v).all(|(a, b)| a >= b)) {
            keep.push(v);
        }
    }
    keep
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SauerReport {
    pub cover: usize,
    pub fat1: usize,
    pub k: u64,
    pub bound: String,
    pub holds: bool,
}

/// Checks N(0,Φ,T) ≤ Σ_{i≤d} C(T,i) k^i with d = fat_1(Φ), for payoffs in
/// {0,…,k} and a time-invariant class.
pub fn verify_sauer(table: &PayoffTable, base: &[TransformStep], t: usize, exec: Exec) -> Result<SauerReport> {
    let prof = base_profiles(table, base)?;
    let k = prof.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
    if prof.iter().flatten().any(|&v| v < 0.0 || v.fract() != 0.0) {
        return Err(Error::Precondition("payoffs must lie in {0,…,k}".into()));
    }
    let k = k as u64;
    let phi = TransformSet::time_invariant(base.to_vec(), t)?;
    let cover = zero_cover_sup(table, &phi)?;
    let fat1 = fat_dim(table, base, 1.0, None, t.max(1) + 1, exec)?.value();
    let bound = sauer_sum(fat1 as u64, k.max(1), t as u64);
    let holds = num_bigint::BigUint::from(cover) <= bound;
    Ok(SauerReport { cover, fat1, k, bound: bound.to_string(), holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seq() -> Exec {
        Exec::Sequential
    }

    fn consts(nf: usize) -> Vec<TransformStep> {
        (0..nf).map(|g| TransformStep::Departure(vec![g; nf])).collect()
    }

    fn identity(nf: usize) -> Vec<TransformStep> {
        vec![TransformStep::Departure((0..nf).collect())]
    }

    /// Brute-force zero cover maximized over every labeled tree.
    fn brute_zero_sup(table: &PayoffTable, phi: &TransformSet) -> usize {
        let t = phi.horizon();
        let nodes = (1usize << t) - 1;
        let m = table.nf() * table.nx();
        let mut best = 0;
        for code in 0..m.pow(nodes as u32) {
            let mut c = code;
            let labels = (0..nodes)
                .map(|_| {
                    let i = c % m;
                    c /= m;
                    (i / table.nx(), i % table.nx())
                })
                .collect();
            let tree = ValuedTree::new(t, labels).unwrap();
            best = best.max(cover_number(CoverNorm::Zero, 0.0, table, phi, &tree, &CoverOptions::default()).unwrap().size);
        }
        best
    }

    /// Minimum cover by brute force over subsets of grid trees.
    fn brute_min_cover(norm: CoverNorm, alpha: f64, table: &PayoffTable, phi: &TransformSet, tree: &ValuedTree<(usize, usize)>) -> usize {
        let vals = node_values(table, phi, tree).unwrap();
        let depth = tree.depth();
        let cand = candidate_values(table, phi);
        let nodes = tree.values().len();
        let mut trees: Vec<Vec<f64>> = vec![vec![]];
        for _ in 0..nodes {
            trees = trees.into_iter().flat_map(|t| cand.iter().map(move |&c| [t.clone(), vec![c]].concat())).collect();
        }
        let ok = |chosen: &[&Vec<f64>]| {
            vals.iter().all(|v| {
                (0..1u64 << depth).all(|p| {
                    let target = path_profile(v, depth, p);
                    chosen.iter().any(|c| norm.dist(&path_profile(c, depth, p), &target) <= alpha + EPS)
                })
            })
        };
        for size in 1..=vals.len() {
            let mut idx: Vec<usize> = (0..size).collect();
            loop {
                let chosen: Vec<&Vec<f64>> = idx.iter().map(|&i| &trees[i]).collect();
                if ok(&chosen) {
                    return size;
                }
                let mut j = size;
                while j > 0 && idx[j - 1] == trees.len() - size + j - 1 {
                    j -= 1;
                }
                if j == 0 {
                    break;
                }
                idx[j - 1] += 1;
                for i in j..size {
                    idx[i] = idx[i - 1] + 1;
                }
            }
        }
        vals.len()
    }

    #[test]
    fn sdim_examples() {
        let pm = PayoffTable::scalar(&[vec![1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        assert_eq!(sdim(&pm, &identity(2), 5, seq()).unwrap(), Dim::Exact(0));
        // two maps split once and then are singletons
        assert_eq!(sdim(&pm, &consts(2), 5, seq()).unwrap(), Dim::Exact(1));
        assert_eq!(sdim(&pm, &consts(2), 1, seq()).unwrap(), Dim::AtLeast(1));
        let signx = PayoffTable::scalar(&[vec![-1.0, 1.0]]).unwrap();
        assert_eq!(sdim(&signx, &identity(1), 5, seq()).unwrap(), Dim::Exact(0));
        let bad = PayoffTable::scalar(&[vec![0.5]]).unwrap();
        assert!(sdim(&bad, &identity(1), 3, seq()).is_err());
    }

    #[test]
    fn fat_examples() {
        let zo = PayoffTable::scalar(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(fat_dim(&zo, &consts(2), 1.0, None, 4, seq()).unwrap(), Dim::Exact(1));
        assert_eq!(fat_dim(&zo, &consts(2), 1.0, Some(vec![vec![0.5]; 4]), 4, seq()).unwrap(), Dim::Exact(1));
        assert_eq!(fat_dim(&zo, &consts(2), 2.0, None, 4, seq()).unwrap(), Dim::Exact(0));
        assert_eq!(fat_dim(&zo, &consts(2), 1.5, None, 4, seq()).unwrap(), Dim::Exact(0));
        assert!(fat_dim(&zo, &consts(2), 1.0, Some(vec![vec![]; 4]), 4, seq()).is_err());
        // eight maps over three binary cells shatter a depth-3 tree
        let table = PayoffTable::from_fn(8, 3, 1, |f, x| vec![f64::from((f >> x & 1) as u8)]).unwrap();
        assert_eq!(fat_dim(&table, &consts(8), 1.0, None, 10, Exec::default()).unwrap(), Dim::Exact(3));
    }

    #[test]
    fn sdim_matches_fat_at_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..40 {
            let nf = rng.gen_range(1..=4);
            let nx = rng.gen_range(1..=3);
            let table = PayoffTable::from_fn(nf, nx, 1, |_, _| vec![if rng.gen_bool(0.5) { 1.0 } else { -1.0 }]).unwrap();
            let base: Vec<TransformStep> = (0..rng.gen_range(1..=5)).map(|_| TransformStep::Departure((0..nf).map(|_| rng.gen_range(0..nf)).collect())).collect();
            let a = sdim(&table, &base, 8, seq()).unwrap();
            let b = fat_dim(&table, &base, 2.0, None, 8, seq()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn cover_examples() {
        let table = PayoffTable::scalar(&[vec![0.0, 1.0], vec![1.0, 0.5], vec![1.0, 0.0]]).unwrap();
        let tree = ValuedTree::constant(1, (0, 1)).unwrap();
        let single = TransformSet::identity(3, 1);
        for norm in [CoverNorm::L1, CoverNorm::L2, CoverNorm::Linf, CoverNorm::Zero] {
            assert_eq!(cover_number(norm, 0.0, &table, &single, &tree, &CoverOptions::default()).unwrap().size, 1);
        }
        let consts = TransformSet::constant_departures(3, 1);
        // root values 1, 0.5, 0: three distinct
        assert_eq!(cover_number(CoverNorm::Zero, 0.0, &table, &consts, &tree, &CoverOptions::default()).unwrap().size, 3);
        assert_eq!(cover_number(CoverNorm::Linf, 0.0, &table, &consts, &tree, &CoverOptions::default()).unwrap().size, 3);
        assert_eq!(cover_number(CoverNorm::Linf, 1.0, &table, &consts, &tree, &CoverOptions::default()).unwrap().size, 1);
        assert_eq!(cover_number(CoverNorm::Linf, 0.3, &table, &consts, &tree, &CoverOptions::default()).unwrap().size, 2);
    }

    #[test]
    fn grid_cover_is_minimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..25 {
            let nf = rng.gen_range(1..=3);
            let nx = rng.gen_range(1..=2);
            let t = rng.gen_range(1..=2);
            let table = PayoffTable::from_fn(nf, nx, 1, |_, _| vec![f64::from(rng.gen_range(0..2u8))]).unwrap();
            let phi = TransformSet::constant_departures(nf, t);
            let labels = (0..(1 << t) - 1).map(|_| (rng.gen_range(0..nf), rng.gen_range(0..nx))).collect();
            let tree = ValuedTree::new(t, labels).unwrap();
            let alpha = [0.0, 0.25, 0.5, 0.75][rng.gen_range(0..4)];
            for norm in [CoverNorm::L1, CoverNorm::L2, CoverNorm::Linf] {
                let got = cover_number(norm, alpha, &table, &phi, &tree, &CoverOptions::default()).unwrap();
                assert_eq!(got.method, CoverMethod::ExactGrid);
                assert_eq!(got.size, brute_min_cover(norm, alpha, &table, &phi, &tree));
            }
        }
    }

    #[test]
    fn zero_sup_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let nf = rng.gen_range(1..=3);
            let nx = rng.gen_range(1..=2);
            let t = rng.gen_range(1..=2);
            let table = PayoffTable::from_fn(nf, nx, 1, |_, _| vec![f64::from(rng.gen_range(0..3u8))]).unwrap();
            let base: Vec<TransformStep> = (0..rng.gen_range(1..=3)).map(|_| TransformStep::Departure((0..nf).map(|_| rng.gen_range(0..nf)).collect())).collect();
            let phi = TransformSet::time_invariant(base, t).unwrap();
            assert_eq!(zero_cover_sup(&table, &phi).unwrap(), brute_zero_sup(&table, &phi));
        }
    }

    #[test]
    fn sauer_examples() {
        let zo = PayoffTable::scalar(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = verify_sauer(&zo, &identity(2), 3, seq()).unwrap();
        assert_eq!((r.cover, r.holds), (1, true));
        let r = verify_sauer(&zo, &consts(2), 3, seq()).unwrap();
        assert!(r.holds);
        assert_eq!(r.fat1, 1);
        assert_eq!(r.bound, "4");
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let nf = rng.gen_range(1..=3);
            let nx = rng.gen_range(1..=3);
            let t = rng.gen_range(1..=4);
            let table = PayoffTable::from_fn(nf, nx, 1, |_, _| vec![f64::from(rng.gen_range(0..2u8))]).unwrap();
            let base: Vec<TransformStep> = (0..rng.gen_range(1..=3)).map(|_| TransformStep::Departure((0..nf).map(|_| rng.gen_range(0..nf)).collect())).collect();
            assert!(verify_sauer(&table, &base, t, seq()).unwrap().holds);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn cover_orderings(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let nf = rng.gen_range(2..=3);
            let nx = rng.gen_range(1..=2);
            let t = rng.gen_range(1..=2);
            let table = PayoffTable::from_fn(nf, nx, 1, |_, _| vec![rng.gen_range(0..3u8) as f64 / 2.0]).unwrap();
            let labels = (0..(1 << t) - 1).map(|_| (rng.gen_range(0..nf), rng.gen_range(0..nx))).collect();
            let tree = ValuedTree::new(t, labels).unwrap();
            let all = TransformSet::constant_departures(nf, t);
            let sub = TransformSet::constant_departures(nf - 1, t);
            let sub = TransformSet::new(
                (0..nf - 1).map(|g| TransformStep::Departure(vec![g; nf])).collect(),
                sub.sequences().to_vec(),
            ).unwrap();
            let o = CoverOptions::default();
            let a1 = rng.gen_range(0.0..0.6);
            let a2 = a1 + rng.gen_range(0.0..0.4);
            let n = |norm, a, phi: &TransformSet| cover_number(norm, a, &table, phi, &tree, &o).unwrap().size;
            for norm in [CoverNorm::L1, CoverNorm::L2, CoverNorm::Linf] {
                prop_assert!(n(norm, a2, &all) <= n(norm, a1, &all));
                prop_assert!(n(norm, a1, &sub) <= n(norm, a1, &all));
            }
            prop_assert!(n(CoverNorm::L1, a1, &all) <= n(CoverNorm::L2, a1, &all));
            prop_assert!(n(CoverNorm::L2, a1, &all) <= n(CoverNorm::Linf, a1, &all));
        }
    }
}
