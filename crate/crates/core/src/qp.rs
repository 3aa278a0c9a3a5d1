//! Small dense convex QPs of least-squares form.
//!
//! `min sum_k (r_k . z - t_k)^2 + offset` subject to `A z <= b`.
//!
//! Solved by a Mehrotra predictor-corrector interior-point method followed by an
//! active-set polish on a regularized KKT system. Problems with a negative right-hand
//! side first go through a phase-one LP so that infeasibility is reported with a
//! certificate instead of a stalled iteration.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResidualTerm {
    pub row: Vec<f64>,
    pub target: f64,
}

/// `row . z <= rhs`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Inequality {
    pub row: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct QuadraticProgram {
    num_vars: usize,
    pub residuals: Vec<ResidualTerm>,
    pub inequalities: Vec<Inequality>,
    /// Constant added to the objective.
    pub offset: f64,
}

impl QuadraticProgram {
    pub fn new(num_vars: usize) -> Self {
        QuadraticProgram {
            num_vars,
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.inequalities.len()
    }

    pub fn add_residual(&mut self, row: Vec<f64>, target: f64) {
        assert_eq!(row.len(), self.num_vars, "residual row length");
        self.residuals.push(ResidualTerm { row, target });
    }

    pub fn add_inequality(&mut self, row: Vec<f64>, rhs: f64) {
        assert_eq!(row.len(), self.num_vars, "inequality row length");
        self.inequalities.push(Inequality { row, rhs });
    }

    pub fn add_offset(&mut self, c: f64) {
        self.offset += c;
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        self.residuals
            .iter()
            .map(|r| {
                let e = dot(&r.row, z) - r.target;
                e * e
            })
            .sum::<f64>()
            + self.offset
    }

    /// Largest violation `(row . z - rhs) / |row|`, or 0 if none.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        self.inequalities
            .iter()
            .map(|c| {
                let nrm = norm(&c.row).max(1.0);
                (dot(&c.row, z) - c.rhs) / nrm
            })
            .fold(0.0, f64::max)
    }

    fn is_finite(&self) -> bool {
        self.offset.is_finite()
            && self
                .residuals
                .iter()
                .all(|r| r.target.is_finite() && r.row.iter().all(|v| v.is_finite()))
            && self
                .inequalities
                .iter()
                .all(|c| c.rhs.is_finite() && c.row.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    Infeasible,
    /// Iteration ended without meeting the KKT tolerance; `z` is the best point found.
    Inaccurate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub z: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub status: QpStatus,
    /// One multiplier per inequality, in the caller's scaling.
    pub multipliers: Vec<f64>,
    /// Phase-one optimum: the smallest uniform relaxation (in distance units) that makes
    /// the constraints feasible. Positive exactly when infeasible.
    pub infeasibility: f64,
    pub condition_estimate: f64,
    pub iterations: usize,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }

    pub fn ill_conditioned(&self) -> bool {
        self.condition_estimate > 1e12
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings {
    pub tol_kkt: f64,
    pub tol_feas: f64,
    pub max_iter: usize,
    pub polish: bool,
}

impl Default for QpSettings {
    fn default() -> Self {
        QpSettings {
            tol_kkt: 1e-8,
            tol_feas: 1e-9,
            max_iter: 200,
            polish: true,
        }
    }
}

pub fn solve_qp(qp: &QuadraticProgram) -> QpSolution {
    solve_qp_with(qp, &QpSettings::default())
}

pub fn solve_qp_with(qp: &QuadraticProgram, settings: &QpSettings) -> QpSolution {
    let n = qp.num_vars;
    let m_all = qp.inequalities.len();
    if !qp.is_finite() {
        return QpSolution {
            z: vec![0.0; n],
            objective: f64::NAN,
            kkt_residual: f64::INFINITY,
            status: QpStatus::Inaccurate,
            multipliers: vec![0.0; m_all],
            infeasibility: f64::NAN,
            condition_estimate: f64::INFINITY,
            iterations: 0,
        };
    }

    let prep = prepare(qp);
    let Prepared {
        h,
        g,
        a,
        b,
        keep,
        norms,
        obj_scale,
        trivial_violation,
    } = &prep;
    let (obj_scale, trivial_violation) = (*obj_scale, *trivial_violation);
    let m = keep.len();

    let mut iterations = 0;
    let mut infeasibility = trivial_violation;
    if trivial_violation <= settings.tol_feas && b.iter().any(|&v| v < 0.0) {
        let (t, it) = phase_one(a, b, settings);
        iterations += it;
        infeasibility = infeasibility.max(t);
    }
    if infeasibility > settings.tol_feas {
        return QpSolution {
            z: vec![0.0; n],
            objective: f64::INFINITY,
            kkt_residual: f64::INFINITY,
            status: QpStatus::Infeasible,
            multipliers: vec![0.0; m_all],
            infeasibility,
            condition_estimate: f64::NAN,
            iterations,
        };
    }

    let mut best = if m == 0 {
        KktPoint {
            z: DVector::zeros(n),
            lam: DVector::zeros(0),
            s: DVector::zeros(0),
            cond: 1.0,
        }
    } else {
        let out = interior_point(h, g, a, b, settings.max_iter);
        iterations += out.1;
        out.0
    };
    let mut best_res = kkt_residual(h, g, a, b, &best.z, &best.lam);
    if settings.polish || m == 0 {
        if let Some(p) = polish(h, g, a, b, &best) {
            let r = kkt_residual(h, g, a, b, &p.z, &p.lam);
            if r < best_res || m == 0 {
                best = p;
                best_res = r;
            }
        }
    }

    if best_res > settings.tol_kkt && m > 0 {
        let start = if b.min() >= 0.0 { DVector::zeros(n) } else { best.z.clone() };
        if let Some(p) = primal_active_set(&prep, &start) {
            let r = kkt_residual(h, g, a, b, &p.z, &p.lam);
            if r < best_res {
                best = p;
                best_res = r;
            }
        }
    }

    let z: Vec<f64> = best.z.iter().copied().collect();
    let mut multipliers = vec![0.0; m_all];
    for (r, &k) in keep.iter().enumerate() {
        multipliers[k] = best.lam[r] / (obj_scale * norms[k]);
    }
    let feasible = qp.max_violation(&z) <= settings.tol_feas;
    let status = if best_res <= settings.tol_kkt && feasible {
        QpStatus::Optimal
    } else {
        QpStatus::Inaccurate
    };
    QpSolution {
        objective: qp.objective(&z),
        z,
        kkt_residual: best_res,
        status,
        multipliers,
        infeasibility,
        condition_estimate: best.cond,
        iterations,
    }
}

/// Objective scaled to unit size and constraint rows scaled to unit norm.
struct Prepared {
    h: DMatrix<f64>,
    g: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    /// Caller index of each kept row; zero rows are dropped.
    keep: Vec<usize>,
    norms: Vec<f64>,
    obj_scale: f64,
    /// Largest violation among dropped zero rows.
    trivial_violation: f64,
}

fn prepare(qp: &QuadraticProgram) -> Prepared {
    let n = qp.num_vars;
    let m_all = qp.inequalities.len();
    let mut h = DMatrix::<f64>::zeros(n, n);
    let mut g = DVector::<f64>::zeros(n);
    for r in &qp.residuals {
        for i in 0..n {
            if r.row[i] == 0.0 {
                continue;
            }
            g[i] -= 2.0 * r.row[i] * r.target;
            for j in 0..n {
                h[(i, j)] += 2.0 * r.row[i] * r.row[j];
            }
        }
    }
    let obj_scale = 1.0 / h.amax().max(g.amax()).max(1.0);
    h *= obj_scale;
    g *= obj_scale;

    let mut keep = Vec::with_capacity(m_all);
    let mut norms = vec![0.0; m_all];
    let mut trivial_violation: f64 = 0.0;
    for (k, c) in qp.inequalities.iter().enumerate() {
        let nrm = norm(&c.row);
        norms[k] = nrm;
        if nrm > 0.0 {
            keep.push(k);
        } else if c.rhs < 0.0 {
            trivial_violation = trivial_violation.max(-c.rhs);
        }
    }
    let mut a = DMatrix::<f64>::zeros(keep.len(), n);
    let mut b = DVector::<f64>::zeros(keep.len());
    for (r, &k) in keep.iter().enumerate() {
        let c = &qp.inequalities[k];
        for j in 0..n {
            a[(r, j)] = c.row[j] / norms[k];
        }
        b[r] = c.rhs / norms[k];
    }
    Prepared {
        h,
        g,
        a,
        b,
        keep,
        norms,
        obj_scale,
        trivial_violation,
    }
}

/// Like [`solve_qp`], but first tries an active-set method started from `warm`, a
/// list of inequality indices guessed to be active. Returns the solution and the
/// active set at the optimum, for warm-starting a related problem.
///
/// Falls back to [`solve_qp`] when the active-set iterate does not pass the KKT test.
pub fn solve_qp_warm(qp: &QuadraticProgram, warm: &[usize]) -> (QpSolution, Vec<usize>) {
    let settings = QpSettings::default();
    if qp.is_finite() {
        let p = prepare(qp);
        if p.trivial_violation <= settings.tol_feas {
            if let Some((pt, active, iters)) = active_set(&p, warm) {
                let res = kkt_residual(&p.h, &p.g, &p.a, &p.b, &pt.z, &pt.lam);
                let z: Vec<f64> = pt.z.iter().copied().collect();
                if res <= settings.tol_kkt && qp.max_violation(&z) <= settings.tol_feas {
                    let mut multipliers = vec![0.0; qp.inequalities.len()];
                    for (r, &k) in p.keep.iter().enumerate() {
                        multipliers[k] = pt.lam[r] / (p.obj_scale * p.norms[k]);
                    }
                    let sol = QpSolution {
                        objective: qp.objective(&z),
                        z,
                        kkt_residual: res,
                        status: QpStatus::Optimal,
                        multipliers,
                        infeasibility: 0.0,
                        condition_estimate: pt.cond,
                        iterations: iters,
                    };
                    return (sol, active.iter().map(|&r| p.keep[r]).collect());
                }
            }
        }
    }
    let sol = solve_qp_with(qp, &settings);
    let active = (0..qp.inequalities.len())
        .filter(|&k| sol.multipliers[k] > 0.0)
        .collect();
    (sol, active)
}

/// Solves by the primal active-set method started at `start`, which should be feasible;
/// constraints it violates are relaxed to pass through it. Slower than [`solve_qp`] but
/// lands on an exact vertex of the active constraints, which makes it the tool for
/// cleaning up a point that is already nearly optimal.
pub fn solve_qp_from(qp: &QuadraticProgram, start: &[f64]) -> QpSolution {
    let settings = QpSettings::default();
    let m_all = qp.inequalities.len();
    let n = qp.num_vars;
    let failed = |z: Vec<f64>| QpSolution {
        objective: qp.objective(&z),
        z,
        kkt_residual: f64::INFINITY,
        status: QpStatus::Inaccurate,
        multipliers: vec![0.0; m_all],
        infeasibility: f64::NAN,
        condition_estimate: f64::NAN,
        iterations: 0,
    };
    if !qp.is_finite() || start.len() != n || start.iter().any(|v| !v.is_finite()) {
        return failed(vec![0.0; n]);
    }
    let p = prepare(qp);
    let Some(pt) = primal_active_set(&p, &DVector::from_column_slice(start)) else {
        return failed(start.to_vec());
    };
    let res = kkt_residual(&p.h, &p.g, &p.a, &p.b, &pt.z, &pt.lam);
    let z: Vec<f64> = pt.z.iter().copied().collect();
    let mut multipliers = vec![0.0; m_all];
    for (r, &k) in p.keep.iter().enumerate() {
        multipliers[k] = pt.lam[r] / (p.obj_scale * p.norms[k]);
    }
    let feasible = qp.max_violation(&z) <= settings.tol_feas && p.trivial_violation <= settings.tol_feas;
    QpSolution {
        objective: qp.objective(&z),
        z,
        kkt_residual: res,
        status: if res <= settings.tol_kkt && feasible {
            QpStatus::Optimal
        } else {
            QpStatus::Inaccurate
        },
        multipliers,
        infeasibility: 0.0,
        condition_estimate: pt.cond,
        iterations: 0,
    }
}

/// Add the most violated constraint or drop the most negative multiplier until neither
/// exists. Each step solves the equality-constrained problem on the working set.
fn active_set(p: &Prepared, warm: &[usize]) -> Option<(KktPoint, Vec<usize>, usize)> {
    let (m, n) = p.a.shape();
    let mut row_of = vec![usize::MAX; p.norms.len()];
    for (r, &k) in p.keep.iter().enumerate() {
        row_of[k] = r;
    }
    let mut work: Vec<usize> = Vec::new();
    for &k in warm {
        if let Some(&r) = row_of.get(k) {
            if r != usize::MAX && !work.contains(&r) && work.len() < n {
                work.push(r);
            }
        }
    }
    let feas = 1e-12;
    for it in 0..(4 * m + 20) {
        let (z, lam_w) = equality_qp(p, &work)?;
        if let Some((pos, _)) = lam_w
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .filter(|(_, l)| **l < -1e-12)
        {
            work.remove(pos);
            continue;
        }
        let slack = &p.b - &p.a * &z;
        let worst = (0..m)
            .filter(|r| !work.contains(r))
            .map(|r| (r, -slack[r]))
            .max_by(|x, y| x.1.total_cmp(&y.1));
        if let Some((r, v)) = worst {
            if v > feas * (1.0 + p.b[r].abs()) {
                work.push(r);
                continue;
            }
        }
        let mut lam = DVector::<f64>::zeros(m);
        for (i, &r) in work.iter().enumerate() {
            lam[r] = lam_w[i].max(0.0);
        }
        let s = slack.map(|v| v.max(0.0));
        return Some((KktPoint { z, lam, s, cond: 1.0 }, work, it + 1));
    }
    None
}

/// Minimize on `{a_r . z = b_r, r in work}` by a regularized KKT solve with iterative
/// refinement against the exact system.
fn equality_qp(p: &Prepared, work: &[usize]) -> Option<(DVector<f64>, Vec<f64>)> {
    let n = p.h.nrows();
    let k = work.len();
    let delta = 1e-9 * (1.0 + p.h.amax());
    let mut kk = DMatrix::<f64>::zeros(n + k, n + k);
    let mut k0 = DMatrix::<f64>::zeros(n + k, n + k);
    kk.view_mut((0, 0), (n, n)).copy_from(&p.h);
    k0.view_mut((0, 0), (n, n)).copy_from(&p.h);
    for i in 0..n {
        kk[(i, i)] += delta;
    }
    let mut rhs = DVector::<f64>::zeros(n + k);
    for i in 0..n {
        rhs[i] = -p.g[i];
    }
    for (r, &ai) in work.iter().enumerate() {
        for j in 0..n {
            let v = p.a[(ai, j)];
            kk[(n + r, j)] = v;
            kk[(j, n + r)] = v;
            k0[(n + r, j)] = v;
            k0[(j, n + r)] = v;
        }
        kk[(n + r, n + r)] = -delta;
        rhs[n + r] = p.b[ai];
    }
    let lu = kk.lu();
    let mut x = lu.solve(&rhs)?;
    for _ in 0..25 {
        let res = &rhs - &k0 * &x;
        if res.amax() <= 1e-15 * (1.0 + rhs.amax()) {
            break;
        }
        x += lu.solve(&res)?;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((x.rows(0, n).into_owned(), x.rows(n, k).iter().copied().collect()))
}

/// Primal active-set method from a feasible start, used when the faster paths miss the
/// KKT tolerance on degenerate problems. The working set stays linearly independent, steps
/// are taken in its null space with a ratio test, and zero-curvature directions of a
/// singular Hessian are followed until a constraint blocks them.
///
/// Constraints violated at `z0` are relaxed to pass through it.
fn primal_active_set(p: &Prepared, z0: &DVector<f64>) -> Option<KktPoint> {
    let (m, n) = p.a.shape();
    // Distinct tiny relaxations remove degenerate vertices, which would let the
    // iteration cycle.
    let mut b = (&p.a * z0).zip_map(&p.b, |az, b| az.max(b));
    for (r, v) in b.iter_mut().enumerate() {
        let u = 0.5 + 0.5 * ((r as f64 + 1.0) * 0.618_033_988_749_895).fract();
        *v += 1e-11 * u * (1.0 + v.abs());
    }
    let mut z = z0.clone();
    let mut work: Vec<usize> = (0..m).filter(|&r| b[r] - p.a.row(r).dot(&z.transpose()) <= 1e-13).collect();
    work = independent_subset(&p.a, &work);
    let eps = 1e-12;
    let mut degenerate = 0usize;
    // Set after a full unblocked Newton step: `z` minimizes on the working set.
    let mut stationary = false;
    for _ in 0..(50 * (m + n) + 100) {
        let grad = &p.h * &z + &p.g;
        let basis = null_basis(&p.a, &work, n);
        let k = basis.ncols();
        let mut step = DVector::<f64>::zeros(n);
        let mut unbounded = false;
        if k > 0 && !stationary {
            let rh = basis.tr_mul(&p.h) * &basis;
            let rg = basis.tr_mul(&grad);
            let eig = rh.symmetric_eigen();
            let top = eig.eigenvalues.amax().max(1e-300);
            let mut newton = DVector::<f64>::zeros(k);
            let mut flat = DVector::<f64>::zeros(k);
            for i in 0..k {
                let u = eig.eigenvectors.column(i);
                let c = u.dot(&rg);
                if eig.eigenvalues[i] > 1e-10 * top.max(1e-10) {
                    newton -= (c / eig.eigenvalues[i]) * u;
                } else {
                    flat -= c * u;
                }
            }
            if flat.amax() > eps * (1.0 + grad.amax()) {
                step = &basis * flat;
                unbounded = true;
            } else {
                step = &basis * newton;
            }
        }
        if step.amax() <= eps * (1.0 + z.amax()) {
            let lam_w = multipliers(&p.a, &work, &grad)?;
            let drop = if degenerate > 0 {
                work.iter().zip(&lam_w).filter(|(_, l)| **l < -eps).map(|(r, _)| *r).min()
            } else {
                work.iter()
                    .zip(&lam_w)
                    .filter(|(_, l)| **l < -eps)
                    .min_by(|x, y| x.1.total_cmp(y.1))
                    .map(|(r, _)| *r)
            };
            match drop {
                Some(r) => {
                    work.retain(|&w| w != r);
                    stationary = false;
                    continue;
                }
                None => {
                    let mut lam = DVector::<f64>::zeros(m);
                    for (i, &r) in work.iter().enumerate() {
                        lam[r] = lam_w[i].max(0.0);
                    }
                    let s = (&p.b - &p.a * &z).map(|v| v.max(0.0));
                    let pt = KktPoint { z, lam, s, cond: 1.0 };
                    return Some(unperturb(p, &work, pt));
                }
            }
        }
        let mut alpha = 1.0;
        if unbounded {
            let curv = step.dot(&(&p.h * &step));
            alpha = if curv > 0.0 { -grad.dot(&step) / curv } else { f64::INFINITY };
        }
        let mut block: Option<usize> = None;
        for r in 0..m {
            if work.contains(&r) {
                continue;
            }
            let ap = p.a.row(r).dot(&step.transpose());
            if ap <= 1e-14 * step.amax() {
                continue;
            }
            let t = ((b[r] - p.a.row(r).dot(&z.transpose())) / ap).max(0.0);
            if t < alpha {
                alpha = t;
                block = Some(r);
            }
        }
        if !alpha.is_finite() {
            return None;
        }
        z += alpha * &step;
        if let Some(r) = block {
            degenerate = if alpha == 0.0 { degenerate + 1 } else { 0 };
            work.push(r);
        } else {
            degenerate = 0;
            stationary = !unbounded;
        }
    }
    None
}

/// Re-solves on the final working set with the unrelaxed right-hand sides and keeps
/// whichever point has the smaller KKT residual.
fn unperturb(p: &Prepared, work: &[usize], pt: KktPoint) -> KktPoint {
    let m = p.a.nrows();
    let Some((z, lam_w)) = equality_qp(p, work) else {
        return pt;
    };
    let mut lam = DVector::<f64>::zeros(m);
    for (i, &r) in work.iter().enumerate() {
        lam[r] = lam_w[i].max(0.0);
    }
    let exact = kkt_residual(&p.h, &p.g, &p.a, &p.b, &z, &lam);
    if exact < kkt_residual(&p.h, &p.g, &p.a, &p.b, &pt.z, &pt.lam) {
        let s = (&p.b - &p.a * &z).map(|v| v.max(0.0));
        KktPoint { z, lam, s, cond: 1.0 }
    } else {
        pt
    }
}

/// Rows of `work` kept greedily while they stay linearly independent.
fn independent_subset(a: &DMatrix<f64>, work: &[usize]) -> Vec<usize> {
    let n = a.ncols();
    let mut out: Vec<usize> = Vec::new();
    for &r in work {
        let mut trial = out.clone();
        trial.push(r);
        if null_basis(a, &trial, n).ncols() + trial.len() == n {
            out = trial;
        }
    }
    out
}

/// Orthonormal basis of `{v : a_r . v = 0, r in work}`.
fn null_basis(a: &DMatrix<f64>, work: &[usize], n: usize) -> DMatrix<f64> {
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for &r in work {
        let row = a.row(r);
        gram += row.transpose() * row;
    }
    let eig = gram.symmetric_eigen();
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&i| eig.eigenvalues[i] <= 1e-10)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Least-squares multipliers with `A_W^T lam = -grad`.
fn multipliers(a: &DMatrix<f64>, work: &[usize], grad: &DVector<f64>) -> Option<Vec<f64>> {
    if work.is_empty() {
        return Some(Vec::new());
    }
    let n = a.ncols();
    let mut at = DMatrix::<f64>::zeros(n, work.len());
    for (i, &r) in work.iter().enumerate() {
        at.set_column(i, &a.row(r).transpose());
    }
    let lam = at.svd(true, true).solve(&(-grad), 1e-13).ok()?;
    Some(lam.iter().copied().collect())
}

/// `min c . x` subject to `rows x <= rhs`, for problems known to be feasible and bounded.
pub(crate) fn solve_lp(c: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = c.len();
    let m = rows.len();
    let mut a = DMatrix::<f64>::zeros(m, n);
    let mut b = DVector::<f64>::zeros(m);
    for (r, row) in rows.iter().enumerate() {
        let nrm = norm(row);
        if nrm == 0.0 {
            continue;
        }
        for j in 0..n {
            a[(r, j)] = row[j] / nrm;
        }
        b[r] = rhs[r] / nrm;
    }
    let h = DMatrix::<f64>::zeros(n, n);
    let g = DVector::from_column_slice(c);
    let (mut pt, _) = interior_point(&h, &g, &a, &b, 100);
    if let Some(p) = polish(&h, &g, &a, &b, &pt) {
        let r0 = kkt_residual(&h, &g, &a, &b, &pt.z, &pt.lam);
        if kkt_residual(&h, &g, &a, &b, &p.z, &p.lam) < r0 {
            pt = p;
        }
    }
    pt.z.iter().all(|v| v.is_finite()).then(|| pt.z.iter().copied().collect())
}

struct KktPoint {
    z: DVector<f64>,
    lam: DVector<f64>,
    s: DVector<f64>,
    cond: f64,
}

/// Minimal uniform relaxation `t` with `A z - t <= b`, `t >= -1`.
fn phase_one(a: &DMatrix<f64>, b: &DVector<f64>, settings: &QpSettings) -> (f64, usize) {
    let (m, n) = a.shape();
    let mut a1 = DMatrix::<f64>::zeros(m + 1, n + 1);
    let mut b1 = DVector::<f64>::zeros(m + 1);
    for i in 0..m {
        for j in 0..n {
            a1[(i, j)] = a[(i, j)];
        }
        a1[(i, n)] = -1.0;
        b1[i] = b[i];
    }
    a1[(m, n)] = -1.0;
    b1[m] = 1.0;
    let h1 = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut g1 = DVector::<f64>::zeros(n + 1);
    g1[n] = 1.0;
    let (mut pt, it) = interior_point(&h1, &g1, &a1, &b1, settings.max_iter);
    if let Some(p) = polish(&h1, &g1, &a1, &b1, &pt) {
        let r0 = kkt_residual(&h1, &g1, &a1, &b1, &pt.z, &pt.lam);
        if kkt_residual(&h1, &g1, &a1, &b1, &p.z, &p.lam) < r0 {
            pt = p;
        }
    }
    // The relaxation actually needed by the returned z, which is what certifies.
    let z = pt.z.rows(0, n).into_owned();
    let need = (a * &z - b).iter().fold(f64::NEG_INFINITY, |acc, v| acc.max(*v));
    (need.max(0.0), it)
}

fn interior_point(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    max_iter: usize,
) -> (KktPoint, usize) {
    let (m, n) = a.shape();
    let mut z = DVector::<f64>::zeros(n);
    let mut s = b.map(|v| v.max(1.0));
    let mut lam = DVector::<f64>::from_element(m, 1.0);
    let mut cond = 1.0;
    let b_scale = 1.0 + b.amax();
    let mut iters = 0;
    let mut best: Option<(f64, KktPoint)> = None;

    for it in 0..max_iter {
        iters = it + 1;
        let hz = h * &z;
        let atl = a.tr_mul(&lam);
        let rd = &hz + g + &atl;
        let rp = a * &z + &s - b;
        let mu = s.dot(&lam) / m as f64;
        let obj = 0.5 * z.dot(&hz) + g.dot(&z);
        let d_scale = 1.0 + hz.amax().max(g.amax()).max(atl.amax());
        let merit = (rd.amax() / d_scale)
            .max(rp.amax() / b_scale)
            .max(mu / (1.0 + obj.abs()));
        if best.as_ref().is_none_or(|(bm, _)| merit < *bm) {
            best = Some((
                merit,
                KktPoint {
                    z: z.clone(),
                    lam: lam.clone(),
                    s: s.clone(),
                    cond,
                },
            ));
        }
        if merit <= 1e-13 || mu < 1e-24 {
            break;
        }

        let d = lam.component_div(&s);
        let mut mm = h.clone();
        for r in 0..m {
            let dr = d[r];
            for i in 0..n {
                let ai = a[(r, i)] * dr;
                if ai == 0.0 {
                    continue;
                }
                for j in 0..n {
                    mm[(i, j)] += ai * a[(r, j)];
                }
            }
        }
        let Some((chol, c)) = factor(mm) else {
            break;
        };
        cond = c;

        let solve = |rc: &DVector<f64>| {
            let t = (rc - lam.component_mul(&rp)).component_div(&s);
            let rhs = -&rd + a.tr_mul(&t);
            let dz = chol.solve(&rhs);
            let ds = -&rp - a * &dz;
            let dl = (-rc - lam.component_mul(&ds)).component_div(&s);
            (dz, ds, dl)
        };

        let rc_aff = s.component_mul(&lam);
        let (_, ds_a, dl_a) = solve(&rc_aff);
        let alpha_aff = max_step(&s, &ds_a).min(max_step(&lam, &dl_a));
        let mu_aff = (&s + alpha_aff * &ds_a).dot(&(&lam + alpha_aff * &dl_a)) / m as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let rc = rc_aff + ds_a.component_mul(&dl_a) - DVector::from_element(m, sigma * mu);
        let (dz, ds, dl) = solve(&rc);
        let tau = (1.0 - mu).max(0.99);
        let alpha = (tau * max_step(&s, &ds).min(max_step(&lam, &dl))).min(1.0);
        if alpha < 1e-12 {
            break;
        }
        z += alpha * dz;
        s += alpha * ds;
        lam += alpha * dl;
        s.apply(|v| *v = v.max(1e-300));
        lam.apply(|v| *v = v.max(1e-300));
    }
    let pt = match best {
        Some((bm, p)) => {
            let hz = h * &z;
            let obj = 0.5 * z.dot(&hz) + g.dot(&z);
            let merit = ((&hz + g + a.tr_mul(&lam)).amax() / (1.0 + hz.amax().max(g.amax())))
                .max((a * &z + &s - b).amax() / b_scale)
                .max(s.dot(&lam) / m as f64 / (1.0 + obj.abs()));
            if merit < bm {
                KktPoint { z, lam, s, cond }
            } else {
                p
            }
        }
        None => KktPoint { z, lam, s, cond },
    };
    (pt, iters)
}

/// Cholesky with growing diagonal shift, returning the factor and a condition estimate.
fn factor(mm: DMatrix<f64>) -> Option<(nalgebra::Cholesky<f64, nalgebra::Dyn>, f64)> {
    let n = mm.nrows();
    let mut shift = 1e-13;
    for _ in 0..12 {
        let mut trial = mm.clone();
        for i in 0..n {
            trial[(i, i)] += shift;
        }
        if let Some(ch) = trial.cholesky() {
            let l = ch.l_dirty();
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for i in 0..n {
                lo = lo.min(l[(i, i)].abs());
                hi = hi.max(l[(i, i)].abs());
            }
            let cond = if lo > 0.0 { (hi / lo).powi(2) } else { f64::INFINITY };
            return Some((ch, cond));
        }
        shift *= 100.0;
    }
    None
}

/// Largest `alpha <= 1` with `v + alpha dv >= 0`.
fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(1.0, f64::min)
}

/// Re-solve on the guessed active set `{lam > s}` with a regularized KKT system and
/// iterative refinement against the exact one.
fn polish(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    pt: &KktPoint,
) -> Option<KktPoint> {
    let (m, n) = a.shape();
    let active: Vec<usize> = (0..m).filter(|&i| pt.lam[i] > pt.s[i]).collect();
    let k = active.len();
    let delta = 1e-9 * (1.0 + h.amax());
    let mut kk = DMatrix::<f64>::zeros(n + k, n + k);
    let mut k0 = DMatrix::<f64>::zeros(n + k, n + k);
    for i in 0..n {
        for j in 0..n {
            kk[(i, j)] = h[(i, j)];
            k0[(i, j)] = h[(i, j)];
        }
        kk[(i, i)] += delta;
    }
    for (r, &ai) in active.iter().enumerate() {
        for j in 0..n {
            let v = a[(ai, j)];
            kk[(n + r, j)] = v;
            kk[(j, n + r)] = v;
            k0[(n + r, j)] = v;
            k0[(j, n + r)] = v;
        }
        kk[(n + r, n + r)] = -delta;
    }
    let mut rhs = DVector::<f64>::zeros(n + k);
    for i in 0..n {
        rhs[i] = -g[i];
    }
    for (r, &ai) in active.iter().enumerate() {
        rhs[n + r] = b[ai];
    }
    let lu = kk.lu();
    let mut x = DVector::<f64>::zeros(n + k);
    for i in 0..n {
        x[i] = pt.z[i];
    }
    for (r, &ai) in active.iter().enumerate() {
        x[n + r] = pt.lam[ai];
    }
    for _ in 0..25 {
        let res = &rhs - &k0 * &x;
        if res.amax() <= 1e-15 * (1.0 + rhs.amax()) {
            break;
        }
        x += lu.solve(&res)?;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let z = x.rows(0, n).into_owned();
    let mut lam = DVector::<f64>::zeros(m);
    for (r, &ai) in active.iter().enumerate() {
        lam[ai] = x[n + r].max(0.0);
    }
    let s = (b - a * &z).map(|v| v.max(0.0));
    Some(KktPoint {
        z,
        lam,
        s,
        cond: pt.cond,
    })
}

fn kkt_residual(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    z: &DVector<f64>,
    lam: &DVector<f64>,
) -> f64 {
    let hz = h * z;
    let atl = a.tr_mul(lam);
    let stat = (&hz + g + &atl).amax() / (1.0 + hz.amax().max(g.amax()).max(atl.amax()));
    let slack = b - a * z;
    let prim = slack.iter().fold(0.0f64, |acc, v| acc.max(-v)) / (1.0 + b.amax());
    let dual = lam.iter().fold(0.0f64, |acc, v| acc.max(-v));
    let comp = lam
        .iter()
        .zip(slack.iter())
        .fold(0.0f64, |acc, (l, s)| acc.max((l * s).abs()));
    stat.max(prim).max(dual).max(comp)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_least_squares() {
        let mut qp = QuadraticProgram::new(1);
        qp.add_residual(vec![1.0], 3.0);
        let s = solve_qp(&qp);
        assert!(s.is_optimal());
        assert!((s.z[0] - 3.0).abs() < 1e-12);
        assert!(s.objective.abs() < 1e-20);
    }

    #[test]
    fn single_active_bound() {
        let mut qp = QuadraticProgram::new(1);
        qp.add_residual(vec![1.0], 3.0);
        qp.add_inequality(vec![1.0], 1.0);
        let s = solve_qp(&qp);
        assert!(s.is_optimal());
        assert!((s.z[0] - 1.0).abs() < 1e-12);
        assert!((s.objective - 4.0).abs() < 1e-10);
        assert!((s.multipliers[0] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn projection_onto_halfplane() {
        let mut qp = QuadraticProgram::new(2);
        qp.add_residual(vec![1.0, 0.0], 1.0);
        qp.add_residual(vec![0.0, 1.0], 1.0);
        qp.add_inequality(vec![1.0, 1.0], 1.0);
        let s = solve_qp(&qp);
        assert!(s.is_optimal());
        assert!((s.z[0] - 0.5).abs() < 1e-12 && (s.z[1] - 0.5).abs() < 1e-12);
        assert!((s.objective - 0.5).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasibility() {
        let mut qp = QuadraticProgram::new(1);
        qp.add_residual(vec![1.0], 0.0);
        qp.add_inequality(vec![1.0], -1.0);
        qp.add_inequality(vec![-1.0], -1.0);
        let s = solve_qp(&qp);
        assert_eq!(s.status, QpStatus::Infeasible);
        assert!((s.infeasibility - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_row_with_negative_rhs_is_infeasible() {
        let mut qp = QuadraticProgram::new(2);
        qp.add_inequality(vec![0.0, 0.0], -0.5);
        assert_eq!(solve_qp(&qp).status, QpStatus::Infeasible);
    }

    #[test]
    fn equality_as_paired_inequalities() {
        let mut qp = QuadraticProgram::new(2);
        qp.add_residual(vec![1.0, 0.0], 2.0);
        qp.add_residual(vec![0.0, 1.0], 0.0);
        qp.add_inequality(vec![1.0, -1.0], 0.0);
        qp.add_inequality(vec![-1.0, 1.0], 0.0);
        let s = solve_qp(&qp);
        assert!(s.is_optimal(), "{s:?}");
        assert!((s.z[0] - 1.0).abs() < 1e-9 && (s.z[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_cone_vertex() {
        // Many constraints active at the origin, objective pulls outside the cone.
        let mut qp = QuadraticProgram::new(3);
        qp.add_residual(vec![1.0, 1.0, 1.0], 1.0);
        for k in 0..3 {
            let mut r = vec![0.0; 3];
            r[k] = 1.0;
            qp.add_inequality(r.clone(), 0.0);
            qp.add_inequality(r, 0.0);
        }
        qp.add_inequality(vec![1.0, 1.0, 1.0], 0.0);
        let s = solve_qp(&qp);
        assert!(s.is_optimal(), "{s:?}");
        assert!((s.objective - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rank_deficient_objective() {
        let mut qp = QuadraticProgram::new(4);
        qp.add_residual(vec![1.0, -1.0, 0.0, 0.0], 2.0);
        qp.add_inequality(vec![1.0, 0.0, 0.0, 0.0], 0.5);
        qp.add_inequality(vec![0.0, -1.0, 0.0, 0.0], 0.0);
        let s = solve_qp(&qp);
        assert!(s.is_optimal(), "{s:?}");
        assert!((s.objective - 2.25).abs() < 1e-10);
    }

    /// Conic constraints through the origin with a low-rank objective, the shape of the
    /// gadget subproblems that defeat the interior-point polish.
    fn conic_problem(seed: u64) -> QuadraticProgram {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 7;
        let mut qp = QuadraticProgram::new(n);
        for _ in 0..3 {
            let row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            qp.add_residual(row, rng.random_range(0.5..2.0));
        }
        for _ in 0..30 {
            let row: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.4) { 0.0 } else { rng.random_range(-1.5..1.5) }).collect();
            qp.add_inequality(row, 0.0);
        }
        qp
    }

    #[test]
    fn primal_active_set_on_conic_problems() {
        for seed in 0..40 {
            let qp = conic_problem(seed);
            let p = prepare(&qp);
            let pt = primal_active_set(&p, &DVector::zeros(qp.num_vars())).expect("converges");
            let res = kkt_residual(&p.h, &p.g, &p.a, &p.b, &pt.z, &pt.lam);
            assert!(res <= 1e-8, "seed {seed}: residual {res:e}");
            let z: Vec<f64> = pt.z.iter().copied().collect();
            let s = solve_qp(&qp);
            assert!(s.is_optimal(), "seed {seed}: {s:?}");
            assert!((qp.objective(&z) - s.objective).abs() <= 1e-8 * (1.0 + s.objective.abs()));
        }
    }

    #[test]
    fn deterministic() {
        let mut qp = QuadraticProgram::new(2);
        qp.add_residual(vec![1.0, 2.0], 1.0);
        qp.add_residual(vec![-1.0, 0.5], 3.0);
        qp.add_inequality(vec![1.0, 1.0], 0.3);
        qp.add_inequality(vec![-2.0, 1.0], 0.1);
        let a = solve_qp(&qp);
        let b = solve_qp(&qp);
        assert_eq!(a, b);
    }
}
