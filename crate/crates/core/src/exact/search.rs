use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use nalgebra::{DMatrix, DVector};

use super::pattern::{
    add_point, add_silent_point, add_w0_sign, build_subprogram, eval_z, net_from_solution, normalize_theta, num_vars,
    solution_from_net, ActivationPattern, OutputSigns, PointChoice, Region, Rows,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::enumerate_dichotomies;
use crate::network::{dot, max_abs_error, squared_loss, Sign, TwoReluNet};
use crate::qp::{solve_qp, solve_qp_from, solve_qp_warm, QpSolution, QpStatus, QuadraticProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Depth-first search over per-point pattern choices with convex lower bounds.
    #[default]
    BranchAndBound,
    /// Every combination of dichotomies, splits and signs, solved one by one.
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub tol: f64,
    /// Stop at the first network with loss `<= tol`.
    pub decision: bool,
    /// Cap on convex subproblems solved.
    pub budget: u64,
    pub max_dim: usize,
    pub strategy: Strategy,
    /// Permutes the point order and the sign cases; `None` keeps the default order.
    pub order_seed: Option<u64>,
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            tol: 1e-8,
            decision: false,
            budget: 10_000_000,
            max_dim: 5,
            strategy: Strategy::BranchAndBound,
            order_seed: None,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn decision(tol: f64) -> Self {
        TrainConfig {
            tol,
            decision: true,
            ..Default::default()
        }
    }
}

/// Shapes and accuracy of every subproblem solved during one training run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QpStats {
    pub solved: u64,
    pub min_vars: usize,
    pub max_vars: usize,
    pub max_constraints: usize,
    /// Subproblems whose shape broke `2d + 3` variables or `3N + 1` constraints.
    pub shape_violations: u64,
    /// Largest KKT residual over subproblems solved to optimality.
    pub max_kkt_residual: f64,
    pub infeasible: u64,
    /// Subproblems where the solver stopped short of the KKT tolerance.
    pub inaccurate: u64,
}

impl Default for QpStats {
    fn default() -> Self {
        QpStats {
            solved: 0,
            min_vars: usize::MAX,
            max_vars: 0,
            max_constraints: 0,
            shape_violations: 0,
            max_kkt_residual: 0.0,
            infeasible: 0,
            inaccurate: 0,
        }
    }
}

impl QpStats {
    fn record(&mut self, status: QpStatus, kkt: f64) {
        match status {
            QpStatus::Optimal => self.max_kkt_residual = self.max_kkt_residual.max(kkt),
            QpStatus::Infeasible => self.infeasible += 1,
            QpStatus::Inaccurate => self.inaccurate += 1,
        }
    }

    fn merge(&mut self, o: &QpStats) {
        self.solved += o.solved;
        self.min_vars = self.min_vars.min(o.min_vars);
        self.max_vars = self.max_vars.max(o.max_vars);
        self.max_constraints = self.max_constraints.max(o.max_constraints);
        self.shape_violations += o.shape_violations;
        self.max_kkt_residual = self.max_kkt_residual.max(o.max_kkt_residual);
        self.infeasible += o.infeasible;
        self.inaccurate += o.inaccurate;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainResult {
    pub net: TwoReluNet,
    pub loss: f64,
    /// Pattern induced by `net` on the data.
    pub pattern: ActivationPattern,
    pub subproblems_solved: u64,
    /// True when the search ran to completion, so `loss` is the global minimum.
    pub certificate: bool,
    pub nodes: u64,
    pub qp: QpStats,
}

pub fn train_exact(data: &Dataset, cfg: &TrainConfig) -> Result<TrainResult> {
    if data.dim() > cfg.max_dim {
        return Err(Error::DimensionTooLarge {
            dim: data.dim(),
            cap: cfg.max_dim,
        });
    }
    if !(cfg.tol >= 0.0) {
        return Err(Error::InvalidArgument("tolerance must be nonnegative".into()));
    }
    match cfg.strategy {
        Strategy::BranchAndBound => branch_and_bound(data, cfg),
        Strategy::Exhaustive => exhaustive(data, cfg),
    }
}

/// Whether some 2-ReLU network reaches loss `<= tol`, with such a network if so.
pub fn decide_trainability(data: &Dataset, tol: f64) -> Result<(bool, Option<TwoReluNet>)> {
    let r = train_exact(data, &TrainConfig::decision(tol))?;
    Ok(if r.loss <= tol {
        (true, Some(r.net))
    } else {
        (false, None)
    })
}

/// Best network with both first-layer nodes switched off.
fn constant_net(data: &Dataset) -> TwoReluNet {
    let mean = data.labels().iter().sum::<f64>() / data.len() as f64;
    let mut net = TwoReluNet::zero(data.dim());
    net.w0 = mean.abs();
    net.theta = if mean < 0.0 { -1.0 } else { 1.0 };
    net
}

/// Output sign cases worth searching. A sign of `theta` that cannot produce outputs of
/// the labels' sign never beats the zero network and is skipped.
fn sign_cases(data: &Dataset, symmetric: bool) -> Vec<OutputSigns> {
    let ys = data.labels();
    let mut thetas = Vec::new();
    if ys.iter().any(|y| *y > 0.0) || ys.iter().all(|y| *y == 0.0) {
        thetas.push(Sign::Plus);
    }
    if ys.iter().any(|y| *y < 0.0) {
        thetas.push(Sign::Minus);
    }
    let pairs: &[(Sign, Sign)] = if symmetric {
        &[(Sign::Plus, Sign::Plus), (Sign::Plus, Sign::Minus), (Sign::Minus, Sign::Minus)]
    } else {
        &[
            (Sign::Plus, Sign::Plus),
            (Sign::Plus, Sign::Minus),
            (Sign::Minus, Sign::Plus),
            (Sign::Minus, Sign::Minus),
        ]
    };
    let mut out = Vec::new();
    for &theta in &thetas {
        for &(w1, w2) in pairs {
            for w0 in Sign::BOTH {
                out.push(OutputSigns { theta, w1, w2, w0 });
            }
        }
    }
    out
}

/// Gauss-Newton steps on the residuals of a near-interpolating network, with its
/// activation pattern frozen. Kept only while the largest pointwise error shrinks.
fn polish(net: &TwoReluNet, data: &Dataset) -> TwoReluNet {
    let d = data.dim();
    let m = 2 * d + 3;
    let worst = |net: &TwoReluNet| max_abs_error(net, data).unwrap_or(f64::INFINITY);
    let mut best = net.clone();
    let mut best_err = worst(net);
    for _ in 0..3 {
        if best_err == 0.0 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(data.len(), m);
        let mut r = DVector::<f64>::zeros(data.len());
        for (i, p) in data.points().iter().enumerate() {
            let h1 = best.a1.eval_unchecked(&p.x);
            let h2 = best.a2.eval_unchecked(&p.x);
            let inner = best.w0 + best.w1.value() * h1.max(0.0) + best.w2.value() * h2.max(0.0);
            r[i] = best.theta * inner.max(0.0) - p.y;
            if inner <= 0.0 {
                continue;
            }
            for (node, (h, wk)) in [(h1, best.w1), (h2, best.w2)].into_iter().enumerate() {
                if h > 0.0 {
                    let off = node * (d + 1);
                    let c = best.theta * wk.value();
                    for (k, xk) in p.x.iter().enumerate() {
                        jac[(i, off + k)] = c * xk;
                    }
                    jac[(i, off + d)] = c;
                }
            }
            jac[(i, m - 1)] = best.theta;
        }
        let Ok(step) = jac.svd(true, true).solve(&r, 1e-13) else { break };
        let mut cand = best.clone();
        for k in 0..d {
            cand.a1.alpha[k] -= step[k];
            cand.a2.alpha[k] -= step[d + 1 + k];
        }
        cand.a1.beta -= step[d];
        cand.a2.beta -= step[2 * d + 1];
        cand.w0 -= step[m - 1];
        let err = worst(&cand);
        if !(err < best_err) {
            break;
        }
        best = cand;
        best_err = err;
    }
    best
}

/// Re-solves the subproblem of the network's own activation pattern by the active-set
/// method started at the network, which lands on an exact vertex and so removes the
/// residual error an interior-point solve leaves behind.
fn refine(data: &Dataset, net: &TwoReluNet, stats: &mut QpStats) -> Result<TwoReluNet> {
    let net = normalize_theta(net);
    let pattern = ActivationPattern::of_net(&net, data);
    let qp = build_subprogram(data, &pattern)?;
    let s = solve_qp_from(&qp, &solution_from_net(&net));
    stats.solved += 1;
    stats.min_vars = stats.min_vars.min(qp.num_vars());
    stats.max_vars = stats.max_vars.max(qp.num_vars());
    stats.max_constraints = stats.max_constraints.max(qp.num_constraints());
    stats.record(s.status, s.kkt_residual);
    if s.status != QpStatus::Optimal {
        return Ok(net);
    }
    let cand = net_from_solution(&s.z, data.dim(), pattern.theta, pattern.w1, pattern.w2);
    Ok(polish(&cand, data))
}

fn finish(
    data: &Dataset,
    cfg: &TrainConfig,
    mut net: TwoReluNet,
    certificate: bool,
    nodes: u64,
    mut qp: QpStats,
) -> Result<TrainResult> {
    let mut loss = squared_loss(&net, data)?;
    if loss <= cfg.tol.max(1e-12) {
        let mut err = max_abs_error(&net, data)?;
        let p = polish(&net, data);
        let pe = max_abs_error(&p, data)?;
        if pe <= err {
            net = p;
            err = pe;
        }
        if err > 0.0 {
            let r = refine(data, &net, &mut qp)?;
            let re = max_abs_error(&r, data)?;
            if re < err {
                net = r;
            }
        }
        loss = squared_loss(&net, data)?;
    }
    Ok(TrainResult {
        pattern: ActivationPattern::of_net(&net, data),
        net,
        loss,
        subproblems_solved: qp.solved,
        certificate,
        nodes,
        qp,
    })
}

struct Shared<'a> {
    data: &'a Dataset,
    cfg: &'a TrainConfig,
    d: usize,
    n: usize,
    rows: Rows,
    /// Scan order of the points when choosing where to branch; breaks ties.
    order: Vec<usize>,
    solved: &'a AtomicU64,
}

#[derive(Debug, Clone, Copy)]
enum Commit {
    Pattern(PointChoice),
    /// Output forced to zero with the sign of `None` nodes left open.
    Silent([Option<Sign>; 2]),
}

fn add_commit(qp: &mut QuadraticProgram, sh: &Shared, i: usize, c: Commit, out: OutputSigns) {
    let p = sh.data.point(i);
    match c {
        Commit::Pattern(c) => add_point(qp, &sh.rows, &p.x, p.y, c, out),
        Commit::Silent(q) => add_silent_point(qp, &sh.rows, &p.x, p.y, q, out),
    }
}

/// Children of branching on point `k` at `z`, nearest to the pattern of `z` first.
fn commits(sh: &Shared, k: usize, z: &[f64], out: OutputSigns, equal: bool) -> Vec<Commit> {
    let p = sh.data.point(k);
    let x = &p.x;
    let p1 = Sign::of(row_dot(&sh.rows.a1(x, 1.0), z));
    let p2 = Sign::of(row_dot(&sh.rows.a2(x, 1.0), z));
    let positive = match out.theta {
        Sign::Plus => p.y > 0.0,
        Sign::Minus => p.y < 0.0,
    };
    if sh.cfg.decision && !positive {
        match (out.w1, out.w2) {
            (Sign::Plus, Sign::Plus) => return vec![Commit::Silent([None, None])],
            (Sign::Plus, Sign::Minus) => {
                return vec![Commit::Silent([None, Some(p2)]), Commit::Silent([None, Some(p2.flip())])]
            }
            (Sign::Minus, Sign::Plus) => {
                return vec![Commit::Silent([Some(p1), None]), Commit::Silent([Some(p1.flip()), None])]
            }
            _ => {}
        }
    }
    let symmetric = out.w1 == out.w2;
    let mut v = Vec::new();
    for (s1, s2) in [(p1, p2), (p1, p2.flip()), (p1.flip(), p2), (p1.flip(), p2.flip())] {
        if symmetric && equal && s1 == Sign::Minus && s2 == Sign::Plus {
            continue;
        }
        let region = Region::of(s1, s2);
        if region == Region::T4 {
            v.push(Commit::Pattern(PointChoice { q1: s1, q2: s2, split: None }));
        } else if sh.cfg.decision {
            let sp = if positive { Sign::Plus } else { Sign::Minus };
            v.push(Commit::Pattern(PointChoice { q1: s1, q2: s2, split: Some(sp) }));
        } else {
            let u = row_dot(&sh.rows.hidden(x, region, out.w1, out.w2), z);
            let pu = Sign::of(u);
            for sp in [pu, pu.flip()] {
                v.push(Commit::Pattern(PointChoice { q1: s1, q2: s2, split: Some(sp) }));
            }
        }
    }
    v
}

#[derive(Clone)]
struct Node {
    /// Committed points with their choices, in commitment order.
    choices: Vec<(usize, Commit)>,
    committed: Vec<bool>,
    /// Whether every committed point so far has equal signs in both nodes.
    equal: bool,
    z: Vec<f64>,
    /// Active constraints at `z`, by index in the node's subproblem.
    active: Vec<usize>,
    bound: f64,
}

struct Worker {
    best_loss: f64,
    best: TwoReluNet,
    stats: QpStats,
    nodes: u64,
    done: bool,
}

fn branch_and_bound(data: &Dataset, cfg: &TrainConfig) -> Result<TrainResult> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut roots = sign_cases(data, true);
    if let Some(seed) = cfg.order_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        roots.shuffle(&mut rng);
    }
    let init = constant_net(data);
    let init_loss = squared_loss(&init, data)?;
    let solved = AtomicU64::new(0);
    let shared = Shared {
        data,
        cfg,
        d: data.dim(),
        n: data.len(),
        rows: Rows::new(data.dim()),
        order,
        solved: &solved,
    };
    let new_worker = || Worker {
        best_loss: init_loss,
        best: init.clone(),
        stats: QpStats::default(),
        nodes: 0,
        done: cfg.decision && init_loss <= cfg.tol,
    };

    let workers: Vec<Worker> = if cfg.threads > 1 && roots.len() > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(|| {
            roots
                .par_iter()
                .map(|&out| {
                    let mut w = new_worker();
                    run_root(&shared, &mut w, out)?;
                    Ok(w)
                })
                .collect::<Result<_>>()
        })?
    } else {
        // One worker for all roots, so later roots prune against earlier incumbents.
        let mut w = new_worker();
        for &out in &roots {
            run_root(&shared, &mut w, out)?;
        }
        vec![w]
    };
    let mut stats = QpStats::default();
    let mut nodes = 0;
    let mut best = (init, init_loss);
    let mut done = false;
    for w in workers {
        stats.merge(&w.stats);
        nodes += w.nodes;
        done |= w.done;
        if w.best_loss < best.1 {
            best = (w.best, w.best_loss);
        }
    }
    finish(data, cfg, best.0, !done, nodes, stats)
}

fn run_root(sh: &Shared, w: &mut Worker, out: OutputSigns) -> Result<()> {
    if w.done {
        return Ok(());
    }
    let mut qp = QuadraticProgram::new(num_vars(sh.d));
    add_w0_sign(&mut qp, &sh.rows, out.w0);
    let (s, active) = solve_counted(sh, w, &qp, &[])?;
    let root = Node {
        choices: vec![],
        committed: vec![false; sh.n],
        equal: true,
        z: s.z,
        active,
        bound: 0.0,
    };
    probe(sh, w, &root.z, out);
    dfs(sh, w, out, &root)
}

fn pruned(sh: &Shared, w: &Worker, bound: f64) -> bool {
    if sh.cfg.decision {
        bound > sh.cfg.tol
    } else {
        bound >= w.best_loss - 1e-12
    }
}

fn solve_counted(
    sh: &Shared,
    w: &mut Worker,
    qp: &QuadraticProgram,
    warm: &[usize],
) -> Result<(QpSolution, Vec<usize>)> {
    let count = sh.solved.fetch_add(1, Ordering::Relaxed) + 1;
    if count > sh.cfg.budget {
        return Err(Error::BudgetExceeded {
            count,
            budget: sh.cfg.budget,
        });
    }
    let (s, active) = solve_qp_warm(qp, warm);
    let st = &mut w.stats;
    st.solved += 1;
    st.min_vars = st.min_vars.min(qp.num_vars());
    st.max_vars = st.max_vars.max(qp.num_vars());
    st.max_constraints = st.max_constraints.max(qp.num_constraints());
    if qp.num_vars() != num_vars(sh.d) || qp.num_constraints() > 3 * sh.n + 1 {
        st.shape_violations += 1;
    }
    st.record(s.status, s.kkt_residual);
    Ok((s, active))
}

fn probe(sh: &Shared, w: &mut Worker, z: &[f64], out: OutputSigns) {
    let mut loss = 0.0;
    for p in sh.data.points() {
        let r = eval_z(z, &p.x, out) - p.y;
        loss += r * r;
        if loss >= w.best_loss {
            return;
        }
    }
    w.best_loss = loss;
    w.best = net_from_solution(z, sh.d, out.theta, out.w1, out.w2);
    if sh.cfg.decision && loss <= sh.cfg.tol {
        w.done = true;
    }
}

fn row_dot(row: &[f64], z: &[f64]) -> f64 {
    dot(row, z)
}

/// Uncommitted point worst fit by the network of `z`, if any misfit is above rounding.
fn branch_point(sh: &Shared, node: &Node, out: OutputSigns) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &i in &sh.order {
        if node.committed[i] {
            continue;
        }
        let p = sh.data.point(i);
        let r = (eval_z(&node.z, &p.x, out) - p.y).abs();
        if r > 1e-14 * (1.0 + p.y.abs()) && best.is_none_or(|(_, b)| r > b) {
            best = Some((i, r));
        }
    }
    best.map(|b| b.0)
}

fn dfs(sh: &Shared, w: &mut Worker, out: OutputSigns, node: &Node) -> Result<()> {
    w.nodes += 1;
    if w.done {
        return Ok(());
    }
    // Once every uncommitted point is fit, the children cannot improve on `z`.
    let Some(k) = branch_point(sh, node, out) else {
        return Ok(());
    };
    for c in commits(sh, k, &node.z, out, node.equal) {
        if w.done {
            break;
        }
        let mut choices = node.choices.clone();
        choices.push((k, c));

        // The parent optimum stays optimal when it satisfies the new constraints and
        // the new point adds nothing to the objective there.
        let mut single = QuadraticProgram::new(num_vars(sh.d));
        add_commit(&mut single, sh, k, c, out);
        let tol = 1e-12 * (1.0 + node.z.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let keep = single.max_violation(&node.z) <= tol && single.objective(&node.z) == 0.0;
        let (z, active, bound) = if keep {
            (node.z.clone(), node.active.clone(), node.bound)
        } else {
            // The sign constraint on w0 comes first so a parent's constraint indices
            // stay valid in the child.
            let mut qp = QuadraticProgram::new(num_vars(sh.d));
            add_w0_sign(&mut qp, &sh.rows, out.w0);
            for &(i, c) in &choices {
                add_commit(&mut qp, sh, i, c, out);
            }
            let (s, active) = solve_counted(sh, w, &qp, &node.active)?;
            let lower = match s.status {
                QpStatus::Optimal => s.objective.max(node.bound),
                QpStatus::Infeasible => f64::INFINITY,
                QpStatus::Inaccurate => node.bound,
            };
            (s.z, active, lower)
        };
        if pruned(sh, w, bound) {
            continue;
        }
        probe(sh, w, &z, out);
        if w.done || (!sh.cfg.decision && pruned(sh, w, bound)) {
            continue;
        }
        let mut committed = node.committed.clone();
        committed[k] = true;
        let equal = node.equal
            && match c {
                Commit::Pattern(p) => p.q1 == p.q2,
                Commit::Silent(q) => q[0] == q[1],
            };
        let child = Node {
            choices,
            committed,
            equal,
            z,
            active,
            bound,
        };
        dfs(sh, w, out, &child)?;
    }
    Ok(())
}

/// Literal enumeration: dichotomy pairs, then splits of T1..T3, then the 16 sign cases.
fn exhaustive(data: &Dataset, cfg: &TrainConfig) -> Result<TrainResult> {
    let d = data.dim();
    let n = data.len();
    let xs = data.inputs();
    let dich = enumerate_dichotomies(&xs, d)?;
    let split_lists = |q1: &[Sign], q2: &[Sign]| -> Result<[Vec<Vec<Sign>>; 3]> {
        let mut out: [Vec<Vec<Sign>>; 3] = Default::default();
        for (r, list) in out.iter_mut().enumerate() {
            let pts: Vec<Vec<f64>> = (0..n)
                .filter(|&i| Region::of(q1[i], q2[i]).index() == r)
                .map(|i| xs[i].clone())
                .collect();
            *list = enumerate_dichotomies(&pts, d)?.into_iter().map(|x| x.signs).collect();
        }
        Ok(out)
    };

    let mut would_be: u64 = 0;
    for a in &dich {
        for b in &dich {
            let l = split_lists(&a.signs, &b.signs)?;
            would_be = would_be.saturating_add(16 * l.iter().map(|v| v.len() as u64).product::<u64>());
        }
    }
    if would_be > cfg.budget {
        return Err(Error::BudgetExceeded {
            count: would_be,
            budget: cfg.budget,
        });
    }

    let mut best = constant_net(data);
    let mut best_loss = squared_loss(&best, data)?;
    let mut stats = QpStats::default();
    let mut done = cfg.decision && best_loss <= cfg.tol;
    let mut count = 0u64;
    'outer: for a in &dich {
        for b in &dich {
            let lists = split_lists(&a.signs, &b.signs)?;
            let mut members: [Vec<usize>; 3] = Default::default();
            for i in 0..n {
                let r = Region::of(a.signs[i], b.signs[i]).index();
                if r < 3 {
                    members[r].push(i);
                }
            }
            for s1 in &lists[0] {
                for s2 in &lists[1] {
                    for s3 in &lists[2] {
                        let mut split = vec![None; n];
                        for (r, s) in [s1, s2, s3].into_iter().enumerate() {
                            for (&i, &sg) in members[r].iter().zip(s) {
                                split[i] = Some(sg);
                            }
                        }
                        for theta in Sign::BOTH {
                            for w1 in Sign::BOTH {
                                for w2 in Sign::BOTH {
                                    for w0 in Sign::BOTH {
                                        if done {
                                            break 'outer;
                                        }
                                        let p = ActivationPattern {
                                            q1: a.signs.clone(),
                                            q2: b.signs.clone(),
                                            split: split.clone(),
                                            theta,
                                            w1,
                                            w2,
                                            w0,
                                        };
                                        let qp = build_subprogram(data, &p)?;
                                        count += 1;
                                        let s = solve_qp(&qp);
                                        stats.solved += 1;
                                        stats.min_vars = stats.min_vars.min(qp.num_vars());
                                        stats.max_vars = stats.max_vars.max(qp.num_vars());
                                        stats.max_constraints = stats.max_constraints.max(qp.num_constraints());
                                        if qp.num_vars() != num_vars(d) || qp.num_constraints() > 3 * n + 1 {
                                            stats.shape_violations += 1;
                                        }
                                        stats.record(s.status, s.kkt_residual);
                                        let net = net_from_solution(&s.z, d, theta, w1, w2);
                                        let loss = squared_loss(&net, data)?;
                                        if loss < best_loss {
                                            best_loss = loss;
                                            best = net;
                                            done = cfg.decision && loss <= cfg.tol;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    debug_assert!(count <= would_be);
    finish(data, cfg, best, !done, count, stats)
}
