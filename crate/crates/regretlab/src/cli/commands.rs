//! One handler per subcommand.

use serde_json::Value;

use super::config::{decode, Obj};
use super::{Command, Ctx, GameAction, Output};
use crate::bounds::{
    combinatorial_bound, dudley_bound_at, finite_class_bound, smoothness_bound, BoundParams, BoundValue,
    CombinatorialKind, CoverTable, DudleyKind, SmoothnessKind,
};
use crate::concentration::{
    chained_tail, concentration_bound, highprob_calibration, mc_tail_report, mds_sup_estimate, ChainedKind,
    ConcentrationKind, MdsSpec, MdsTree,
};
use crate::dims_covers::{cover_number, fat_dim, sdim, zero_cover_sup, CoverNorm, CoverOptions};
use crate::error::{invalid, Error, Result};
use crate::fuzz::{self, SuiteReport};
use crate::game_model::{GameSpec, NormSpec, PayoffTable, TargetSet, TransformStep, ValuedTree};
use crate::games::blackwell::{one_shot_check, run_blackwell, BlackwellAdversary};
use crate::games::calibration::{calibrated_forecaster, calibration_regret, run_calibration, run_doubling, CalibrationAdversary};
use crate::lower_bounds::{
    blackwell_lower_check, linear_lower, make_linear_game, make_supervised_game, supervised_lower, walsh_paley_sup,
    WpMode,
};
use crate::report;
use crate::seq_complexity::{rad_exact, triplex_certificate_linear, RadSign};
use crate::value_engine::{
    exact_gamma_value, exact_theta_value, exact_value, extract_minimax_strategy, simulate, Adversary, Gamma, Player,
};

const TOL: f64 = 1e-9;

pub(crate) fn dispatch(cmd: &Command, ctx: &Ctx) -> Result<Output> {
    match cmd {
        Command::Value => value(ctx),
        Command::ThetaValue => theta_value(ctx),
        Command::GammaValue => gamma_value(ctx),
        Command::Rad => rad(ctx),
        Command::Certificate => certificate(ctx),
        Command::Bounds { c_abs } => bounds(ctx, *c_abs),
        Command::Dims => dims(ctx),
        Command::Cover => cover(ctx),
        Command::Game { action: GameAction::Run } => game_run(ctx),
        Command::Game { action: GameAction::Simulate } => game_simulate(ctx),
        Command::Blackwell => blackwell(ctx),
        Command::Calibrate => calibrate(ctx),
        Command::Lower => lower(ctx),
        Command::Concentration => concentration(ctx),
        Command::Fuzz => fuzz_cmd(ctx),
        Command::Report => report_cmd(ctx),
    }
}

// ---------------------------------------------------------------------------
// Config plumbing

/// The config object, with its "kind" checked against the subcommand.
fn config<'a>(ctx: &'a Ctx, kind: &str) -> Result<Obj<'a>> {
    let v = ctx.config.as_ref().ok_or(Error::MissingParam("--config"))?;
    let o = Obj::new(v, "")?;
    if let Some(k) = o.get("kind") {
        if k.as_str() != Some(kind) {
            return Err(invalid(".kind", format!("expected {kind:?}, got {k}")));
        }
    }
    Ok(o)
}

fn optional_config<'a>(ctx: &'a Ctx, kind: &str) -> Result<Option<Obj<'a>>> {
    ctx.config.as_ref().map(|_| config(ctx, kind)).transpose()
}

/// A game at the top level of the config, plus its "params" object.
fn game<'a>(ctx: &'a Ctx, kind: &str) -> Result<(GameSpec, Option<Obj<'a>>)> {
    let o = config(ctx, kind)?;
    let mut g = o.map.clone();
    for k in ["schema", "kind", "params"] {
        g.remove(k);
    }
    let spec = GameSpec::from_value(Value::Object(g))?;
    let params = o.get("params").map(|p| Obj::new(p, ".params")).transpose()?;
    Ok((spec, params))
}

fn params<'p, 'a>(p: &'p Option<Obj<'a>>) -> Result<&'p Obj<'a>> {
    p.as_ref().ok_or_else(|| invalid(".params", "missing required field"))
}

/// Base class of a time-invariant transform set.
fn base_steps(spec: &GameSpec) -> Result<Vec<TransformStep>> {
    let phi = &spec.transforms;
    if !phi.time_invariant_flag() {
        return Err(invalid(".transforms", "dimensions need a time-invariant transform set"));
    }
    Ok(phi.sequences().iter().map(|s| phi.steps()[s[0]].clone()).collect())
}

fn tree<V: Clone + serde::de::DeserializeOwned>(o: &Obj, key: &str) -> Result<ValuedTree<V>> {
    let t: ValuedTree<V> = o.parse(key)?;
    ValuedTree::new(t.depth(), t.values().to_vec()).map_err(|e| invalid(o.at(key), e.to_string()))
}

fn cover_table(ctx: &Ctx, o: &Obj) -> Result<Option<CoverTable>> {
    match (o.get("cover"), o.get("cover_csv")) {
        (Some(_), Some(_)) => Err(invalid(o.at("cover_csv"), "give either cover or cover_csv")),
        (Some(_), None) => Ok(Some(CoverTable::new(o.parse("cover")?)?)),
        (None, Some(_)) => {
            let path = ctx.config_dir.join(o.str("cover_csv")?);
            let file = std::fs::File::open(&path)
                .map_err(|e| invalid(o.at("cover_csv"), format!("cannot open {}: {e}", path.display())))?;
            Ok(Some(CoverTable::from_csv(file)?))
        }
        (None, None) => Ok(None),
    }
}

fn suite_out(r: &SuiteReport) -> Output {
    Output::default()
        .field("instances", r.instances)
        .field("failures", r.failures)
        .field("worst_slack", r.worst_slack)
        .check(r.failures == 0)
}

fn f(v: f64) -> String {
    format!("{v:.12}")
}

// ---------------------------------------------------------------------------
// Game subcommands

fn value(ctx: &Ctx) -> Result<Output> {
    let (spec, _) = game(ctx, "value")?;
    Ok(Output::default().field("value", exact_value(&spec, &ctx.opts)?))
}

fn theta_value(ctx: &Ctx) -> Result<Output> {
    let (spec, p) = game(ctx, "theta-value")?;
    let theta: f64 = params(&p)?.parse("theta")?;
    Ok(Output::default().field("theta", theta).field("value", exact_theta_value(&spec, theta, &ctx.opts)?))
}

fn gamma_value(ctx: &Ctx) -> Result<Output> {
    let (spec, p) = game(ctx, "gamma-value")?;
    let gamma: Gamma = params(&p)?.parse("gamma")?;
    Ok(Output::default().field("gamma", gamma).field("value", exact_gamma_value(&spec, gamma, &ctx.opts)?))
}

fn rad(ctx: &Ctx) -> Result<Output> {
    let (spec, p) = game(ctx, "rad")?;
    let sign = match p.as_ref().map(|p| p.opt::<String>("sign")).transpose()?.flatten().as_deref() {
        None => RadSign::for_aggregator(&spec.aggregator),
        Some("B") => RadSign::B,
        Some("negB") => RadSign::NegB,
        Some(other) => return Err(invalid(".params.sign", format!("expected \"B\" or \"negB\", got {other:?}"))),
    };
    let r = rad_exact(&spec, &spec.transforms, sign, &ctx.opts)?;
    Ok(Output::default().field("sign", sign).field("rad", r))
}

fn certificate(ctx: &Ctx) -> Result<Output> {
    let (spec, _) = game(ctx, "certificate")?;
    let r = triplex_certificate_linear(&spec, &ctx.opts)?;
    Ok(Output::default().field("val", r.val).field("rad", r.rad).field("holds", r.holds).check(r.holds))
}

fn dims(ctx: &Ctx) -> Result<Output> {
    let (spec, p) = game(ctx, "dims")?;
    let base = base_steps(&spec)?;
    let cap = p.as_ref().map(|p| p.or("cap", 16usize)).transpose()?.unwrap_or(16);
    let alpha = p.as_ref().map(|p| p.opt::<f64>("alpha")).transpose()?.flatten();
    let mut out = Output::default();
    if spec.payoff.distinct_values().iter().all(|v| v.abs() == 1.0) {
        out = out.field("sdim", sdim(&spec.payoff, &base, cap, ctx.opts.exec)?.to_string());
    }
    if let Some(a) = alpha {
        out = out.field("alpha", a).field("fat", fat_dim(&spec.payoff, &base, a, None, cap, ctx.opts.exec)?.to_string());
    }
    if out.fields.is_empty() {
        return Err(invalid(".params.alpha", "payoffs are not ±1; give alpha for the fat-shattering dimension"));
    }
    Ok(out)
}

fn cover(ctx: &Ctx) -> Result<Output> {
    let (spec, p) = game(ctx, "cover")?;
    let p = params(&p)?;
    let norm = CoverNorm::parse(p.str("norm")?).map_err(|e| invalid(p.at("norm"), e.to_string()))?;
    if p.get("tree").is_none() {
        if norm != CoverNorm::Zero {
            return Err(invalid(p.at("tree"), "missing required field (only the zero cover has a tree-free mode)"));
        }
        return Ok(Output::default().field("size", zero_cover_sup(&spec.payoff, &spec.transforms)?).field("method", "sup_over_trees"));
    }
    let alpha: f64 = if norm == CoverNorm::Zero { p.or("alpha", 0.0)? } else { p.parse("alpha")? };
    let t: ValuedTree<(usize, usize)> = tree(p, "tree")?;
    let r = cover_number(norm, alpha, &spec.payoff, &spec.transforms, &t, &CoverOptions::default())?;
    Ok(Output::default().field("size", r.size).field("method", r.method).field("ratio_bound", r.ratio_bound))
}

fn game_run(ctx: &Ctx) -> Result<Output> {
    let (spec, _) = game(ctx, "game")?;
    let s = extract_minimax_strategy(&spec, &ctx.opts)?;
    let mut entries: Vec<_> = s.entries.iter().collect();
    entries.sort_by(|a, b| a.0.cmp(b.0));
    let rows = entries
        .iter()
        .map(|(h, q)| {
            let hist = if h.is_empty() { "-".to_string() } else { h.rounds.iter().map(|(f, x)| format!("{f}:{x}")).collect::<Vec<_>>().join(" ") };
            let w = q.weights().iter().map(|&v| f(v)).collect::<Vec<_>>().join(";");
            vec![hist, w]
        })
        .collect();
    Ok(Output::default()
        .field("value", exact_value(&spec, &ctx.opts)?)
        .field("histories", entries.len())
        .rows(&["history", "weights"], rows))
}

fn game_simulate(ctx: &Ctx) -> Result<Output> {
    let seed = ctx.seed()?;
    let (spec, p) = game(ctx, "game")?;
    let p = params(&p)?;
    let player = Player::named(&p.or("player", "minimax".to_string())?).map_err(|e| invalid(p.at("player"), e.to_string()))?;
    let adversary =
        Adversary::named(&p.or("adversary", "best-response".to_string())?).map_err(|e| invalid(p.at("adversary"), e.to_string()))?;
    let reps: usize = p.or("reps", 1000)?;
    if reps == 0 {
        return Err(invalid(p.at("reps"), "must be positive"));
    }
    let regrets = simulate(&spec, &player, &adversary, seed, reps, &ctx.opts)?;
    let n = regrets.len() as f64;
    let mean = regrets.iter().sum::<f64>() / n;
    let var = if regrets.len() > 1 { regrets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let rows = regrets.iter().enumerate().map(|(i, r)| vec![i.to_string(), f(*r)]).collect();
    Ok(Output::default()
        .field("reps", reps)
        .field("mean_regret", mean)
        .field("stderr", (var / n).sqrt())
        .field("value", exact_value(&spec, &ctx.opts)?)
        .rows(&["rep", "regret"], rows))
}

// ---------------------------------------------------------------------------
// Bounds

fn bounds(ctx: &Ctx, c_abs: Option<f64>) -> Result<Output> {
    let o = config(ctx, "bounds")?;
    o.only(&["schema", "kind", "family", "bound", "params", "cover_csv", "trees"])?;
    let family = o.str("family")?;
    let params_with_cover = || -> Result<BoundParams> {
        let mut bp: BoundParams = o.or("params", BoundParams::new())?;
        if let Some(c) = c_abs {
            bp.c_abs = c;
        }
        if let Some(c) = cover_table(ctx, &o)? {
            bp.cover = Some(c);
        }
        Ok(bp)
    };
    let out = Output::default().field("family", family);
    match family {
        "smoothness" => {
            let kind: SmoothnessKind = o.parse("bound")?;
            Ok(out.field("bound", kind).field("value", smoothness_bound(kind, &params_with_cover()?)?))
        }
        "dudley" => {
            let kind: DudleyKind = o.parse("bound")?;
            let (alpha, v) = dudley_bound_at(kind, &params_with_cover()?, 0)?;
            Ok(out.field("bound", kind).field("alpha", alpha).field("value", v))
        }
        "combinatorial" => {
            let kind: CombinatorialKind = o.parse("params")?;
            let out = out.field("bound", kind.clone());
            Ok(match combinatorial_bound(&kind)? {
                BoundValue::Int(n) => out.field("value", n.to_string()),
                BoundValue::Real(v) => out.field("value", v),
            })
        }
        "finite_class" => {
            let list = o.req("trees")?.as_array().ok_or_else(|| invalid(".trees", "expected an array"))?;
            let trees = list
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let path = format!(".trees[{i}]");
                    let t: ValuedTree<f64> = decode(v, &path)?;
                    ValuedTree::new(t.depth(), t.values().to_vec()).map_err(|e| invalid(path, e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(out.field("value", finite_class_bound(&trees)?))
        }
        other => Err(invalid(
            ".family",
            format!("unknown family {other:?}; expected smoothness, dudley, combinatorial or finite_class"),
        )),
    }
}

// ---------------------------------------------------------------------------
// Games

fn blackwell(ctx: &Ctx) -> Result<Output> {
    let o = config(ctx, "blackwell")?;
    o.only(&["schema", "kind", "payoff", "target", "norm", "adversary", "T", "stride", "one_shot_grid"])?;
    let table: PayoffTable = o.parse("payoff")?;
    let set: TargetSet = o.parse("target")?;
    let norm: NormSpec = o.or("norm", NormSpec::L2)?;
    norm.validate().map_err(|e| invalid(".norm", e.to_string()))?;
    if set.dim() != table.k() {
        return Err(invalid(".target", format!("target dimension {} differs from payoff dimension {}", set.dim(), table.k())));
    }
    let mut out = Output::default();
    if let Some(res) = o.opt::<usize>("one_shot_grid")? {
        let r = one_shot_check(&table, &set, norm, res)?;
        out = out.field("one_shot_margin", r.approachable_margin).field("one_shot_worst_p", r.worst_p);
    }
    if o.get("T").is_none() {
        return if out.fields.is_empty() { Err(invalid(".T", "missing required field")) } else { Ok(out) };
    }
    let seed = ctx.seed()?;
    let horizon: usize = o.parse("T")?;
    let adversary = match o.or("adversary", "best-response".to_string())?.as_str() {
        "best-response" => BlackwellAdversary::BestResponse,
        "uniform" => BlackwellAdversary::Uniform,
        s => match s.strip_prefix("constant:").map(str::parse::<usize>) {
            Some(Ok(x)) if x < table.nx() => BlackwellAdversary::Constant(x),
            _ => return Err(invalid(".adversary", format!("unknown adversary {s:?}"))),
        },
    };
    let stride: usize = o.or("stride", (horizon / 100).max(1))?;
    let run = run_blackwell(&table, &set, norm, &adversary, horizon, seed, stride)?;
    let rows = run.trace.iter().map(|(t, d)| vec![t.to_string(), f(*d)]).collect();
    Ok(out.field("T", horizon).field("final_distance", run.final_distance).rows(&["t", "distance_to_S"], rows))
}

fn calibrate(ctx: &Ctx) -> Result<Output> {
    let seed = ctx.seed()?;
    let o = config(ctx, "calibrate")?;
    o.only(&["schema", "kind", "k", "T", "delta", "adversary", "norm", "doubling", "stride"])?;
    let k: usize = o.parse("k")?;
    let horizon: usize = o.parse("T")?;
    let norm: NormSpec = o.or("norm", NormSpec::L1)?;
    let adversary = CalibrationAdversary::named(&o.or("adversary", "iid-uniform".to_string())?)
        .map_err(|e| invalid(".adversary", e.to_string()))?;
    let stride: usize = o.or("stride", (horizon / 100).max(1))?;
    if o.or("doubling", false)? {
        let run = run_doubling(k, &adversary, horizon, seed, stride, norm)?;
        let last = run.trace.last().map(|p| p.1).unwrap_or(0.0);
        let rows = run.trace.iter().map(|(t, r)| vec![t.to_string(), f(*r)]).collect();
        return Ok(Output::default()
            .field("regret", last)
            .field("episode_starts", run.episode_starts)
            .rows(&["t", "regret_so_far"], rows));
    }
    let delta: Option<f64> = o.opt("delta")?;
    let mut fc = calibrated_forecaster(k, delta, horizon)?;
    let tr = run_calibration(&mut fc, &adversary, horizon, seed)?;
    let mut header = vec!["t".to_string(), "outcome".to_string()];
    header.extend((0..k).map(|i| format!("forecast_{i}")));
    let rows = tr
        .forecasts()
        .iter()
        .zip(tr.outcomes())
        .enumerate()
        .map(|(t, (fc, x))| {
            let mut r = vec![(t + 1).to_string(), x.to_string()];
            r.extend(fc.iter().map(|&v| f(v)));
            r
        })
        .collect();
    let mut out = Output::default().field("regret", calibration_regret(&tr, norm)?).field("grid_cells", fc.grid().len());
    out.rows = Some((header, rows));
    Ok(out)
}

fn lower(ctx: &Ctx) -> Result<Output> {
    let o = config(ctx, "lower")?;
    let construction = o.str("construction")?;
    let t: usize = o.parse("T")?;
    let out = Output::default().field("construction", construction);
    match construction {
        "supervised" => {
            o.only(&["schema", "kind", "construction", "T", "fvals"])?;
            let fvals: Vec<Vec<f64>> = o.parse("fvals")?;
            let lb = supervised_lower(&fvals, t, ctx.opts.budget)?;
            let v = exact_value(&make_supervised_game(&fvals, t)?, &ctx.opts)?;
            Ok(out.field("lower", lb).field("value", v).field("holds", v >= lb - TOL).check(v >= lb - TOL))
        }
        "linear" => {
            o.only(&["schema", "kind", "construction", "T", "fs", "xs"])?;
            let fs: Vec<Vec<f64>> = o.parse("fs")?;
            let xs: Vec<Vec<f64>> = o.parse("xs")?;
            let lb = linear_lower(&fs, &xs, t, ctx.opts.budget)?;
            let v = exact_value(&make_linear_game(&fs, &xs, t)?, &ctx.opts)?;
            Ok(out.field("lower", lb).field("value", v).field("holds", v >= lb - TOL).check(v >= lb - TOL))
        }
        "blackwell" => {
            o.only(&["schema", "kind", "construction", "T", "h", "norm"])?;
            let h: Vec<Vec<f64>> = o.parse("h")?;
            let r = blackwell_lower_check(&h, o.or("norm", NormSpec::L2)?, t, &ctx.opts)?;
            Ok(out.field("value", r.value).field("walsh_paley", r.walsh_paley).field("holds", r.holds).check(r.holds))
        }
        "walsh_paley" => {
            o.only(&["schema", "kind", "construction", "T", "h", "norm", "mode"])?;
            let h: Vec<Vec<f64>> = o.parse("h")?;
            let mode = wp_mode(&o)?;
            Ok(out.field("walsh_paley", walsh_paley_sup(&h, o.or("norm", NormSpec::L2)?, t, mode, ctx.opts.budget)?))
        }
        other => Err(invalid(
            ".construction",
            format!("unknown construction {other:?}; expected supervised, linear, blackwell or walsh_paley"),
        )),
    }
}

fn wp_mode(o: &Obj) -> Result<WpMode> {
    match o.or("mode", "exhaustive".to_string())?.as_str() {
        "exhaustive" => Ok(WpMode::Exhaustive),
        "greedy" => Ok(WpMode::Greedy),
        other => Err(invalid(o.at("mode"), format!("expected exhaustive or greedy, got {other:?}"))),
    }
}

// ---------------------------------------------------------------------------
// Concentration

fn concentration(ctx: &Ctx) -> Result<Output> {
    let o = config(ctx, "concentration")?;
    let mode = o.str("mode")?;
    let out = Output::default().field("mode", mode);
    match mode {
        "bound" => {
            o.only(&["schema", "kind", "mode", "bound"])?;
            let kind: ConcentrationKind = o.parse("bound")?;
            Ok(out.field("bound", kind.clone()).field("value", concentration_bound(&kind)?))
        }
        "mc" => {
            o.only(&["schema", "kind", "mode", "tree", "norm", "thresholds", "samples"])?;
            let seed = ctx.seed()?;
            let tree: MdsTree = o.parse("tree")?;
            let m = MdsSpec::new(tree, o.or("norm", NormSpec::L2)?)?;
            let thresholds: Vec<f64> = o.parse("thresholds")?;
            let r = mc_tail_report(&m, &thresholds, o.or("samples", 100_000)?, seed, ctx.opts.exec)?;
            let rows = r
                .rows
                .iter()
                .map(|row| {
                    vec![
                        f(row.threshold),
                        f(row.empirical),
                        row.bound.map(f).unwrap_or_else(|| "invalid".into()),
                        f(row.stderr),
                        row.pass.to_string(),
                    ]
                })
                .collect();
            Ok(out
                .field("samples", r.samples)
                .field("B", m.b)
                .field("sigma", m.sigma)
                .field("pass", r.pass)
                .check(r.pass)
                .rows(&["threshold", "empirical", "bound", "stderr", "pass"], rows))
        }
        "chained" => {
            o.only(&["schema", "kind", "mode", "chain", "T", "theta", "cover", "cover_csv"])?;
            let kind: ChainedKind = o.parse("chain")?;
            let cover = cover_table(ctx, &o)?.ok_or_else(|| invalid(".cover", "missing required field"))?;
            let r = chained_tail(kind, o.parse("T")?, o.parse("theta")?, &cover)?;
            Ok(out
                .field("alpha", r.alpha)
                .field("threshold", r.threshold)
                .field("l_const", r.l_const)
                .field("probability", r.probability))
        }
        "highprob_calibration" => {
            o.only(&["schema", "kind", "mode", "k", "T", "theta", "c"])?;
            let v = highprob_calibration(o.parse("k")?, o.parse("T")?, o.parse("theta")?, o.or("c", 1.0)?)?;
            Ok(out.field("probability", v))
        }
        "mds_sup" => {
            o.only(&["schema", "kind", "mode", "h", "norm", "T", "mode_sup"])?;
            let h: Vec<Vec<f64>> = o.parse("h")?;
            let mode = match o.or("mode_sup", "exhaustive".to_string())?.as_str() {
                "exhaustive" => WpMode::Exhaustive,
                "greedy" => WpMode::Greedy,
                other => return Err(invalid(".mode_sup", format!("expected exhaustive or greedy, got {other:?}"))),
            };
            let v = mds_sup_estimate(&h, o.or("norm", NormSpec::L2)?, o.parse("T")?, mode, ctx.opts.budget)?;
            Ok(out.field("estimate", v))
        }
        other => Err(invalid(
            ".mode",
            format!("unknown mode {other:?}; expected bound, mc, chained, highprob_calibration or mds_sup"),
        )),
    }
}

// ---------------------------------------------------------------------------
// Suites

fn fuzz_cmd(ctx: &Ctx) -> Result<Output> {
    let seed = ctx.seed()?;
    let o = config(ctx, "fuzz")?;
    let suite = o.str("suite")?;
    let n: usize = o.or("n", 50)?;
    let tol: f64 = o.or("tol", TOL)?;
    let opts = &ctx.opts;
    let exec = opts.exec;
    let out = match suite {
        "certificate" => suite_out(&fuzz::certificate_suite(n, seed, tol, opts)?),
        "finite_class" => suite_out(&fuzz::finite_class_suite(n, seed, tol)?),
        "lp_oracle" => suite_out(&fuzz::lp_oracle_suite(o.or("tol", 1e-8)?, opts)?),
        "markov" => suite_out(&fuzz::markov_suite(&o.or("thetas", vec![0.1, 0.25, 0.5])?, tol, opts)?),
        "sauer" => {
            let r = fuzz::sauer_suite(o.or("max_fx", 2)?, o.or("max_phi", 2)?, o.or("max_t", 3)?, exec)?;
            Output::default()
                .field("instances", r.instances)
                .field("classes", r.classes)
                .field("direct", r.direct)
                .field("horizons", r.horizons)
                .field("failures", r.failures)
                .field("worst_slack", r.worst_slack)
                .check(r.failures == 0)
        }
        "sandwich" => {
            let r = fuzz::sandwich_suite(n, o.or("n_blackwell", 10)?, seed, tol, opts)?;
            Output::default()
                .field("supervised_linear_instances", r.supervised_linear.instances)
                .field("supervised_linear_failures", r.supervised_linear.failures)
                .field("blackwell_instances", r.blackwell.instances)
                .field("blackwell_failures", r.blackwell.failures)
                .check(r.supervised_linear.failures == 0 && r.blackwell.failures == 0)
        }
        "mds" => suite_out(&fuzz::mds_suite(n, o.or("samples", 20_000)?, seed, exec)?),
        "concavity" => {
            let norms: Vec<NormSpec> = o.or("norms", vec![NormSpec::L1, NormSpec::L2, NormSpec::Linf])?;
            suite_out(&fuzz::concavity_suite(&norms, &o.or("ks", vec![2, 3, 5])?, o.or("trials", 10_000)?, seed, o.or("tol", 1e-7)?)?)
        }
        "adaptive" => suite_out(&fuzz::adaptive_suite(o.or("max_t", 3)?, o.or("tol", 1e-12)?)?),
        other => {
            return Err(invalid(
                ".suite",
                format!("unknown suite {other:?}; expected certificate, finite_class, lp_oracle, markov, sauer, sandwich, mds, concavity or adaptive"),
            ))
        }
    };
    Ok(out.field("suite", suite))
}

fn report_cmd(ctx: &Ctx) -> Result<Output> {
    let seed = ctx.seed()?;
    let ids: Vec<usize> = match optional_config(ctx, "report")? {
        Some(o) => o.or("criteria", (1..=report::CRITERIA).collect())?,
        None => (1..=report::CRITERIA).collect(),
    };
    let results = ids.iter().map(|&id| report::run_criterion(id, seed, &ctx.opts)).collect::<Result<Vec<_>>>()?;
    let all = results.iter().all(|r| r.pass);
    let rows = results.iter().map(|r| vec![r.id.to_string(), if r.pass { "PASS" } else { "FAIL" }.to_string(), r.detail.clone()]).collect();
    let mut out = Output::default().field("criteria", results.len()).field("passed", results.iter().filter(|r| r.pass).count());
    for r in &results {
        out = out.field(&format!("criterion_{}", r.id), if r.pass { "PASS" } else { "FAIL" });
    }
    Ok(out.field("all_pass", all).check(all).rows(&["criterion", "result", "detail"], rows))
}
