//! Sequential complexity Rad_T(ℓ, Φ_T, ±B) and the linear-case certificate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game_model::{Aggregator, GameSpec, Subadditivity, TransformSet, ValuedTree};
use crate::par::{self, Exec};
use crate::value_engine::{self, check_budget, EngineOptions};

/// Which of B and −B enters the complexity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RadSign {
    B,
    NegB,
}

impl RadSign {
    /// Branch matching the aggregator's subadditivity flag.
    pub fn for_aggregator(agg: &Aggregator) -> RadSign {
        match agg.subadditivity() {
            Subadditivity::NegBSubadditive => RadSign::NegB,
            _ => RadSign::B,
        }
    }

    fn factor(self) -> f64 {
        match self {
            RadSign::B => 1.0,
            RadSign::NegB => -1.0,
        }
    }
}

fn check_phi(spec: &GameSpec, phi: &TransformSet) -> Result<()> {
    if phi.horizon() != spec.horizon {
        return Err(Error::Dimension { expected: spec.horizon, got: phi.horizon() });
    }
    Ok(())
}

struct Rad<'a> {
    spec: &'a GameSpec,
    phi: &'a TransformSet,
    s: f64,
    k: usize,
}

impl Rad<'_> {
    fn leaf(&self, sums: &[f64]) -> f64 {
        let t = self.spec.horizon;
        sums.chunks(self.k)
            .map(|c| self.s * self.spec.aggregator.eval_sum(c, t))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn add(&self, sums: &mut [f64], t: usize, f: usize, x: usize, eps: f64) {
        for (i, seq) in self.phi.sequences().iter().enumerate() {
            let z = self.phi.payoff(&self.spec.payoff, seq[t], f, x);
            for (a, v) in sums[i * self.k..(i + 1) * self.k].iter_mut().zip(z) {
                *a += eps * v;
            }
        }
    }

    /// Value and maximizing (f,x) at this node.
    fn node(&self, t: usize, sums: &[f64], exec: Exec) -> (f64, usize) {
        if t == self.spec.horizon {
            return (self.leaf(sums), 0);
        }
        let (nf, nx) = (self.spec.nf(), self.spec.nx());
        let vals = par::map_indexed(exec, nf * nx, |i| self.pair(t, sums, i / nx, i % nx));
        argmax(&vals)
    }

    fn pair(&self, t: usize, sums: &[f64], f: usize, x: usize) -> f64 {
        let mut acc = 0.0;
        for eps in [1.0, -1.0] {
            let mut s = sums.to_vec();
            self.add(&mut s, t, f, x, eps);
            acc += self.node(t + 1, &s, Exec::Sequential).0;
        }
        acc / 2.0
    }
}

fn argmax(vals: &[f64]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, &v) in vals.iter().enumerate() {
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}

/// Rad_T by the interleaved sup/E recursion over partial paths.
pub fn rad_exact(spec: &GameSpec, phi: &TransformSet, sign: RadSign, opts: &EngineOptions) -> Result<f64> {
    check_phi(spec, phi)?;
    check_budget(2 * spec.nf() * spec.nx(), spec.horizon, phi.len(), opts.budget)?;
    let r = Rad { spec, phi, s: sign.factor(), k: spec.k() };
    Ok(r.node(0, &vec![0.0; spec.k() * phi.len()], opts.exec).0)
}

/// E_ε sup_φ ±B on a fixed (F×X)-valued tree, by enumerating all 2^T paths.
pub fn rad_on_tree_exact(
    spec: &GameSpec,
    phi: &TransformSet,
    sign: RadSign,
    tree: &ValuedTree<(usize, usize)>,
) -> Result<f64> {
    check_tree(spec, phi, tree)?;
    let r = Rad { spec, phi, s: sign.factor(), k: spec.k() };
    let n = 1u64 << spec.horizon;
    let total: f64 = (0..n).map(|p| path_value(&r, tree, p)).sum();
    Ok(total / n as f64)
}

fn check_tree(spec: &GameSpec, phi: &TransformSet, tree: &ValuedTree<(usize, usize)>) -> Result<()> {
    check_phi(spec, phi)?;
    if tree.depth() != spec.horizon {
        return Err(Error::Dimension { expected: spec.horizon, got: tree.depth() });
    }
    if tree.values().iter().any(|&(f, x)| f >= spec.nf() || x >= spec.nx()) {
        return Err(Error::Precondition("tree label outside F×X".into()));
    }
    Ok(())
}

fn path_value(r: &Rad, tree: &ValuedTree<(usize, usize)>, path: u64) -> f64 {
    let depth = tree.depth();
    let mut sums = vec![0.0; r.k * r.phi.len()];
    for (t, &(f, x)) in tree.path(path).enumerate() {
        r.add(&mut sums, t, f, x, ValuedTree::<(usize, usize)>::sign(depth, path, t));
    }
    r.leaf(&sums)
}

const MC_BLOCK: usize = 4096;

/// Monte Carlo estimate over sign paths for a fixed tree: (mean, stderr).
pub fn rad_on_tree_mc(
    spec: &GameSpec,
    phi: &TransformSet,
    sign: RadSign,
    tree: &ValuedTree<(usize, usize)>,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<(f64, f64)> {
    check_tree(spec, phi, tree)?;
    if samples == 0 {
        return Err(Error::Precondition("samples must be positive".into()));
    }
    let r = Rad { spec, phi, s: sign.factor(), k: spec.k() };
    let blocks = samples.div_ceil(MC_BLOCK);
    let parts = par::map_indexed(exec, blocks, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let n = MC_BLOCK.min(samples - b * MC_BLOCK);
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..n {
            let path = rng.gen::<u64>() & ((1u64 << spec.horizon) - 1);
            let v = path_value(&r, tree, path);
            s += v;
            s2 += v * v;
        }
        (s, s2)
    });
    let (s, s2) = parts.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = s / n;
    let var = if samples > 1 { ((s2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok((mean, (var / n).sqrt()))
}

#[derive(Clone, Copy, Debug)]
pub enum SearchMode {
    /// Coordinate ascent over node labels from random starts.
    Ascent { restarts: usize, seed: u64 },
    /// The maximizing tree read off the exact recursion.
    Exhaustive,
}

/// Best tree found and its exact per-tree value, a lower witness for Rad_T.
pub fn rad_tree_search(
    spec: &GameSpec,
    phi: &TransformSet,
    sign: RadSign,
    mode: SearchMode,
    opts: &EngineOptions,
) -> Result<(ValuedTree<(usize, usize)>, f64)> {
    check_phi(spec, phi)?;
    let (nf, nx, t) = (spec.nf(), spec.nx(), spec.horizon);
    let r = Rad { spec, phi, s: sign.factor(), k: spec.k() };
    match mode {
        SearchMode::Exhaustive => {
            check_budget(2 * nf * nx, t, phi.len(), opts.budget)?;
            let mut labels = vec![(0, 0); (1usize << t) - 1];
            fn fill(r: &Rad, t: usize, prefix: u64, sums: &[f64], labels: &mut [(usize, usize)]) {
                if t == r.spec.horizon {
                    return;
                }
                let (_, i) = r.node(t, sums, Exec::Sequential);
                let nx = r.spec.nx();
                let (f, x) = (i / nx, i % nx);
                labels[(1usize << t) - 1 + prefix as usize] = (f, x);
                for (bit, eps) in [(1u64, 1.0), (0u64, -1.0)] {
                    let mut s = sums.to_vec();
                    r.add(&mut s, t, f, x, eps);
                    fill(r, t + 1, (prefix << 1) | bit, &s, labels);
                }
            }
            fill(&r, 0, 0, &vec![0.0; r.k * phi.len()], &mut labels);
            let tree = ValuedTree::new(t, labels)?;
            let v = rad_on_tree_exact(spec, phi, sign, &tree)?;
            Ok((tree, v))
        }
        SearchMode::Ascent { restarts, seed } => {
            let nodes = (1usize << t) - 1;
            check_budget(2, t, nodes * nf * nx * phi.len(), opts.budget)?;
            let runs = par::try_map_indexed(opts.exec, restarts.max(1), |run| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(run as u64);
                let labels: Vec<(usize, usize)> =
                    (0..nodes).map(|_| (rng.gen_range(0..nf), rng.gen_range(0..nx))).collect();
                let mut tree = ValuedTree::new(t, labels)?;
                let mut best = rad_on_tree_exact(spec, phi, sign, &tree)?;
                loop {
                    let mut improved = false;
                    for node in 0..nodes {
                        let keep = tree.values()[node];
                        let mut arg = keep;
                        for cand in 0..nf * nx {
                            tree.values_mut()[node] = (cand / nx, cand % nx);
                            let v = path_values(&r, &tree);
                            if v > best + 1e-12 {
                                best = v;
                                arg = (cand / nx, cand % nx);
                                improved = true;
                            }
                        }
                        tree.values_mut()[node] = arg;
                    }
                    if !improved {
                        break;
                    }
                }
                Ok::<_, Error>((tree, best))
            })?;
            let mut out = None::<(ValuedTree<(usize, usize)>, f64)>;
            for (tree, v) in runs {
                if out.as_ref().is_none_or(|o| v > o.1) {
                    out = Some((tree, v));
                }
            }
            Ok(out.expect("at least one restart"))
        }
    }
}

fn path_values(r: &Rad, tree: &ValuedTree<(usize, usize)>) -> f64 {
    let n = 1u64 << tree.depth();
    (0..n).map(|p| path_value(r, tree, p)).sum::<f64>() / n as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub val: f64,
    pub rad: f64,
    pub holds: bool,
}

/// Val_T ≤ 2·Rad_T for linear B with departure transformations.
pub fn triplex_certificate_linear(spec: &GameSpec, opts: &EngineOptions) -> Result<CertificateReport> {
    if spec.aggregator != Aggregator::Average {
        return Err(Error::Precondition("aggregator must be Average".into()));
    }
    if !spec.transforms.all_departure() {
        return Err(Error::Precondition("transforms must be all_departure".into()));
    }
    let val = value_engine::exact_value(spec, opts)?;
    let rad = rad_exact(spec, &spec.transforms, RadSign::B, opts)?;
    Ok(CertificateReport { val, rad, holds: val <= 2.0 * rad + 1e-9 })
}

// ---------------------------------------------------------------------------
// Grid diagnostic

pub const DEFAULT_GRID_RES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TriplexEstimate {
    pub t1_est: Option<f64>,
    pub t2_est: Option<f64>,
    pub t3_est: Option<f64>,
    pub exact_value: Option<f64>,
    pub caveats: Vec<String>,
}

/// Points of the n-simplex whose coordinates are multiples of 1/res.
pub fn simplex_grid(n: usize, res: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, res: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / res as f64).collect());
            cur.pop();
            return;
        }
        for c in (0..=left).rev() {
            cur.push(c);
            rec(n, left - c, res, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, res, res, &mut Vec::new(), &mut out);
    out
}

struct Grid<'a> {
    spec: &'a GameSpec,
    gf: Vec<Vec<f64>>,
    gx: Vec<Vec<f64>>,
}

impl Grid<'_> {
    fn seq_sum(&self, step: Option<usize>, moves: &[(usize, usize)]) -> Vec<f64> {
        let spec = self.spec;
        let mut s = vec![0.0; spec.k()];
        for (t, &(f, x)) in moves.iter().enumerate() {
            let z = match step {
                None => spec.payoff.get(f, x),
                Some(i) => spec.transforms.payoff(&spec.payoff, spec.transforms.sequences()[i][t], f, x),
            };
            s.iter_mut().zip(z).for_each(|(a, b)| *a += b);
        }
        s
    }

    fn b(&self, step: Option<usize>, moves: &[(usize, usize)]) -> f64 {
        self.spec.aggregator.eval_sum(&self.seq_sum(step, moves), moves.len())
    }

    /// E over independent draws f'_t ~ q_t, x'_t ~ p_t.
    fn expect(&self, qs: &[Vec<f64>], ps: &[Vec<f64>], g: &dyn Fn(&[(usize, usize)]) -> f64) -> f64 {
        fn rec(
            t: usize,
            qs: &[Vec<f64>],
            ps: &[Vec<f64>],
            w: f64,
            moves: &mut Vec<(usize, usize)>,
            g: &dyn Fn(&[(usize, usize)]) -> f64,
        ) -> f64 {
            if t == qs.len() {
                return w * g(moves);
            }
            let mut acc = 0.0;
            for (f, &qf) in qs[t].iter().enumerate() {
                for (x, &px) in ps[t].iter().enumerate() {
                    if qf * px == 0.0 {
                        continue;
                    }
                    moves.push((f, x));
                    acc += rec(t + 1, qs, ps, w * qf * px, moves, g);
                    moves.pop();
                }
            }
            acc
        }
        rec(0, qs, ps, 1.0, &mut Vec::new(), g)
    }

    /// Terms 1 and 3: sup over grid (p_t,q_t), then E over (f_t,x_t).
    fn outer(&self, t: usize, qs: &mut Vec<Vec<f64>>, ps: &mut Vec<Vec<f64>>, moves: &mut Vec<(usize, usize)>, third: bool) -> f64 {
        let spec = self.spec;
        if t == spec.horizon {
            if !third {
                let e = self.expect(qs, ps, &|m| self.b(None, m));
                return self.b(None, moves) - e;
            }
            return (0..spec.transforms.len())
                .map(|i| self.expect(qs, ps, &|m| self.b(Some(i), m)) - self.b(Some(i), moves))
                .fold(f64::NEG_INFINITY, f64::max);
        }
        let mut best = f64::NEG_INFINITY;
        for q in &self.gf {
            for p in &self.gx {
                qs.push(q.clone());
                ps.push(p.clone());
                let mut v = 0.0;
                for (f, &qf) in q.iter().enumerate() {
                    for (x, &px) in p.iter().enumerate() {
                        if qf * px == 0.0 {
                            continue;
                        }
                        moves.push((f, x));
                        v += qf * px * self.outer(t + 1, qs, ps, moves, third);
                        moves.pop();
                    }
                }
                qs.pop();
                ps.pop();
                best = best.max(v);
            }
        }
        best
    }

    /// Term 2 with pure learner responses.
    fn middle(&self, t: usize, qs: &mut Vec<Vec<f64>>, ps: &mut Vec<Vec<f64>>) -> f64 {
        let spec = self.spec;
        if t == spec.horizon {
            let real = self.expect(qs, ps, &|m| self.b(None, m));
            return (0..spec.transforms.len())
                .map(|i| real - self.expect(qs, ps, &|m| self.b(Some(i), m)))
                .fold(f64::NEG_INFINITY, f64::max);
        }
        let mut best = f64::NEG_INFINITY;
        for p in &self.gx {
            ps.push(p.clone());
            let mut inner = f64::INFINITY;
            for f in 0..spec.nf() {
                let mut q = vec![0.0; spec.nf()];
                q[f] = 1.0;
                qs.push(q);
                inner = inner.min(self.middle(t + 1, qs, ps));
                qs.pop();
            }
            ps.pop();
            best = best.max(inner);
        }
        best
    }
}

/// Grid-restricted estimates of the three Triplex terms. Diagnostic only.
pub fn triplex_grid_estimate(spec: &GameSpec, grid_res: usize, opts: &EngineOptions) -> Result<TriplexEstimate> {
    if grid_res == 0 {
        return Err(Error::Precondition("grid_res must be positive".into()));
    }
    let g = Grid { spec, gf: simplex_grid(spec.nf(), grid_res), gx: simplex_grid(spec.nx(), grid_res) };
    let (nf, nx, t) = (spec.nf(), spec.nx(), spec.horizon);
    let inner = (nf * nx) as f64;
    let mut caveats = vec![
        "t1: grid-restricted sup over (p,q), biased low".to_string(),
        "t2: grid-restricted sup biased low, pure-response inf biased high".to_string(),
        "t3: grid-restricted sup over (p,q), biased low".to_string(),
    ];
    let outer_cost = (g.gf.len() as f64 * g.gx.len() as f64 * inner).powi(t as i32) * inner.powi(t as i32);
    let middle_cost = (g.gx.len() as f64 * nf as f64).powi(t as i32) * inner.powi(t as i32);
    let phis = spec.transforms.len() as f64;
    let fits = |c: f64| c <= opts.budget as f64;
    let t1 = if spec.aggregator == Aggregator::Average {
        caveats[0] = "t1: zero by linearity of B".to_string();
        Some(0.0)
    } else if fits(outer_cost) {
        Some(g.outer(0, &mut Vec::new(), &mut Vec::new(), &mut Vec::new(), false))
    } else {
        caveats.push("t1: skipped, over node budget".into());
        None
    };
    let t2 = if fits(middle_cost * phis) {
        Some(g.middle(0, &mut Vec::new(), &mut Vec::new()))
    } else {
        caveats.push("t2: skipped, over node budget".into());
        None
    };
    let t3 = if fits(outer_cost * phis) {
        Some(g.outer(0, &mut Vec::new(), &mut Vec::new(), &mut Vec::new(), true))
    } else {
        caveats.push("t3: skipped, over node budget".into());
        None
    };
    let exact_value = value_engine::exact_value(spec, opts).ok();
    if exact_value.is_none() {
        caveats.push("exact value over node budget".into());
    }
    Ok(TriplexEstimate { t1_est: t1, t2_est: t2, t3_est: t3, exact_value, caveats })
}
