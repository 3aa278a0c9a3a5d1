use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::network::{relu, AffineFunction, Sign, TwoReluNet};
use crate::qp::QuadraticProgram;

/// Which first-layer nodes are active at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    /// Both active.
    T1,
    /// Only the second node active.
    T2,
    /// Only the first node active.
    T3,
    /// Neither active.
    T4,
}

impl Region {
    pub fn of(q1: Sign, q2: Sign) -> Region {
        match (q1, q2) {
            (Sign::Plus, Sign::Plus) => Region::T1,
            (Sign::Minus, Sign::Plus) => Region::T2,
            (Sign::Plus, Sign::Minus) => Region::T3,
            (Sign::Minus, Sign::Minus) => Region::T4,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Region::T1 => 0,
            Region::T2 => 1,
            Region::T3 => 2,
            Region::T4 => 3,
        }
    }
}

/// A full choice of activation signs and output signs for a 2-ReLU network.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ActivationPattern {
    /// Sign of `a1` at each point; `+` means `a1(x) >= 0`.
    pub q1: Vec<Sign>,
    pub q2: Vec<Sign>,
    /// Sign of the second-layer input at each point of T1, T2, T3; `None` on T4.
    pub split: Vec<Option<Sign>>,
    pub theta: Sign,
    pub w1: Sign,
    pub w2: Sign,
    /// `+` means `w0 >= 0`.
    pub w0: Sign,
}

impl ActivationPattern {
    pub fn len(&self) -> usize {
        self.q1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q1.is_empty()
    }

    pub fn region(&self, i: usize) -> Region {
        Region::of(self.q1[i], self.q2[i])
    }

    /// Index sets `T1..T4`.
    pub fn regions(&self) -> [Vec<usize>; 4] {
        let mut out: [Vec<usize>; 4] = Default::default();
        for i in 0..self.len() {
            out[self.region(i).index()].push(i);
        }
        out
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for len in [self.q1.len(), self.q2.len(), self.split.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        for i in 0..n {
            if (self.region(i) == Region::T4) != self.split[i].is_none() {
                return Err(Error::InvalidArgument(format!(
                    "point {i}: second-layer split must be set exactly outside T4"
                )));
            }
        }
        Ok(())
    }

    /// The pattern a network induces on a dataset, with zeros counted as `+`. The
    /// network is first brought to the form with `theta = +-1`.
    pub fn of_net(net: &TwoReluNet, data: &Dataset) -> ActivationPattern {
        let net = normalize_theta(net);
        let mut p = ActivationPattern {
            q1: Vec::with_capacity(data.len()),
            q2: Vec::with_capacity(data.len()),
            split: Vec::with_capacity(data.len()),
            theta: Sign::of(net.theta),
            w1: net.w1,
            w2: net.w2,
            w0: Sign::of(net.w0),
        };
        for pt in data.points() {
            let s1 = Sign::of(net.a1.eval_unchecked(&pt.x));
            let s2 = Sign::of(net.a2.eval_unchecked(&pt.x));
            p.q1.push(s1);
            p.q2.push(s2);
            p.split.push(match Region::of(s1, s2) {
                Region::T4 => None,
                _ => Some(Sign::of(net.hidden_sum(&pt.x))),
            });
        }
        p
    }

    /// True iff `net` has this pattern's output signs and its activations agree with the
    /// pattern at every point within `tol`.
    pub fn is_consistent_with(&self, net: &TwoReluNet, data: &Dataset, tol: f64) -> bool {
        let side_ok = |s: Sign, v: f64| match s {
            Sign::Plus => v >= -tol,
            Sign::Minus => v <= tol,
        };
        if net.w1 != self.w1 || net.w2 != self.w2 || Sign::of(net.theta) != self.theta {
            return false;
        }
        if !side_ok(self.w0, net.w0) {
            return false;
        }
        data.points().iter().enumerate().all(|(i, pt)| {
            side_ok(self.q1[i], net.a1.eval_unchecked(&pt.x))
                && side_ok(self.q2[i], net.a2.eval_unchecked(&pt.x))
                && self.split[i].is_none_or(|s| side_ok(s, net.hidden_sum(&pt.x)))
        })
    }
}

/// Rewrites `net` with `theta` in `{-1, +1}` by absorbing `|theta|` into the first
/// layer and `w0`. The function computed is unchanged.
pub fn normalize_theta(net: &TwoReluNet) -> TwoReluNet {
    let c = net.theta.abs();
    if c == 0.0 {
        return TwoReluNet::zero(net.a1.dim());
    }
    TwoReluNet {
        a1: net.a1.scaled(c),
        a2: net.a2.scaled(c),
        w0: net.w0 * c,
        w1: net.w1,
        w2: net.w2,
        theta: Sign::of(net.theta).value(),
    }
}

/// Number of QP variables for input dimension `d`: `a1`, `a2` and `w0`.
pub fn num_vars(d: usize) -> usize {
    2 * d + 3
}

/// Coefficient rows over `z = (alpha1, beta1, alpha2, beta2, w0)`.
pub(crate) struct Rows {
    d: usize,
}

impl Rows {
    pub(crate) fn new(d: usize) -> Self {
        Rows { d }
    }

    pub(crate) fn a1(&self, x: &[f64], scale: f64) -> Vec<f64> {
        let mut r = vec![0.0; num_vars(self.d)];
        for k in 0..self.d {
            r[k] = scale * x[k];
        }
        r[self.d] = scale;
        r
    }

    pub(crate) fn a2(&self, x: &[f64], scale: f64) -> Vec<f64> {
        let mut r = vec![0.0; num_vars(self.d)];
        let o = self.d + 1;
        for k in 0..self.d {
            r[o + k] = scale * x[k];
        }
        r[o + self.d] = scale;
        r
    }

    pub(crate) fn w0(&self, scale: f64) -> Vec<f64> {
        let mut r = vec![0.0; num_vars(self.d)];
        r[2 * self.d + 2] = scale;
        r
    }

    /// `w0 + [w1 a1] + [w2 a2]`, with each node term present only when active.
    pub(crate) fn hidden(&self, x: &[f64], region: Region, w1: Sign, w2: Sign) -> Vec<f64> {
        let mut r = self.w0(1.0);
        if matches!(region, Region::T1 | Region::T3) {
            add(&mut r, &self.a1(x, w1.value()));
        }
        if matches!(region, Region::T1 | Region::T2) {
            add(&mut r, &self.a2(x, w2.value()));
        }
        r
    }
}

fn add(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// Signs and per-point choices for one point; shared by full and partial builders.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PointChoice {
    pub q1: Sign,
    pub q2: Sign,
    pub split: Option<Sign>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct OutputSigns {
    pub theta: Sign,
    pub w1: Sign,
    pub w2: Sign,
    pub w0: Sign,
}

/// Adds one point's residual and constraints to `qp`.
pub(crate) fn add_point(
    qp: &mut QuadraticProgram,
    rows: &Rows,
    x: &[f64],
    y: f64,
    c: PointChoice,
    out: OutputSigns,
) {
    qp.add_inequality(rows.a1(x, -c.q1.value()), 0.0);
    qp.add_inequality(rows.a2(x, -c.q2.value()), 0.0);
    let region = Region::of(c.q1, c.q2);
    let u = rows.hidden(x, region, out.w1, out.w2);
    match (region, c.split) {
        (Region::T4, _) => {
            if out.w0 == Sign::Plus {
                qp.add_residual(rows.w0(out.theta.value()), y);
            } else {
                qp.add_offset(y * y);
            }
        }
        (_, Some(Sign::Plus)) => {
            let neg: Vec<f64> = u.iter().map(|v| -v).collect();
            qp.add_inequality(neg, 0.0);
            qp.add_residual(u.iter().map(|v| out.theta.value() * v).collect(), y);
        }
        (_, _) => {
            qp.add_inequality(u, 0.0);
            qp.add_offset(y * y);
        }
    }
}

/// Adds a point whose output must vanish, `w0 + w1 [a1]+ + w2 [a2]+ <= 0`, without
/// fixing the sign of nodes left as `None`. A free node needs a positive output weight,
/// so its term is convex and the constraint is the conjunction over subsets of free
/// nodes. At most three inequalities, relying on the sign constraint on `w0`.
pub(crate) fn add_silent_point(
    qp: &mut QuadraticProgram,
    rows: &Rows,
    x: &[f64],
    y: f64,
    q: [Option<Sign>; 2],
    out: OutputSigns,
) {
    let nodes = [(rows.a1(x, 1.0), out.w1), (rows.a2(x, 1.0), out.w2)];
    let mut base = rows.w0(1.0);
    let mut free = Vec::new();
    for (k, (a, w)) in nodes.iter().enumerate() {
        match q[k] {
            Some(s) => {
                qp.add_inequality(a.iter().map(|v| -s.value() * v).collect(), 0.0);
                if s == Sign::Plus {
                    add(&mut base, &a.iter().map(|v| w.value() * v).collect::<Vec<_>>());
                }
            }
            None => {
                debug_assert_eq!(*w, Sign::Plus);
                free.push(k);
            }
        }
    }
    let subsets: &[&[usize]] = match (free.len(), out.w0) {
        (0, _) => &[&[]],
        (1, _) => &[&[], &[0]],
        (_, Sign::Minus) => &[&[0], &[1], &[0, 1]],
        (_, Sign::Plus) => &[&[], &[0], &[1]],
    };
    for sub in subsets {
        let mut row = base.clone();
        for &j in sub.iter() {
            add(&mut row, &nodes[free[j]].0);
        }
        qp.add_inequality(row, 0.0);
    }
    qp.add_offset(y * y);
}

pub(crate) fn add_w0_sign(qp: &mut QuadraticProgram, rows: &Rows, w0: Sign) {
    qp.add_inequality(rows.w0(-w0.value()), 0.0);
}

/// The convex subproblem for a fixed activation pattern. Its objective at any feasible
/// point equals the squared loss of the corresponding network.
pub fn build_subprogram(data: &Dataset, pattern: &ActivationPattern) -> Result<QuadraticProgram> {
    pattern.validate(data.len())?;
    let d = data.dim();
    let rows = Rows::new(d);
    let out = OutputSigns {
        theta: pattern.theta,
        w1: pattern.w1,
        w2: pattern.w2,
        w0: pattern.w0,
    };
    let mut qp = QuadraticProgram::new(num_vars(d));
    for (i, pt) in data.points().iter().enumerate() {
        let c = PointChoice {
            q1: pattern.q1[i],
            q2: pattern.q2[i],
            split: pattern.split[i],
        };
        add_point(&mut qp, &rows, &pt.x, pt.y, c, out);
    }
    add_w0_sign(&mut qp, &rows, pattern.w0);
    Ok(qp)
}

/// Reads a network out of a subproblem solution vector.
pub fn net_from_solution(z: &[f64], d: usize, theta: Sign, w1: Sign, w2: Sign) -> TwoReluNet {
    TwoReluNet {
        a1: AffineFunction::new(z[..d].to_vec(), z[d]),
        a2: AffineFunction::new(z[d + 1..2 * d + 1].to_vec(), z[2 * d + 1]),
        w0: z[2 * d + 2],
        w1,
        w2,
        theta: theta.value(),
    }
}

/// Inverse of `net_from_solution` for a network with `theta = +-1`.
pub fn solution_from_net(net: &TwoReluNet) -> Vec<f64> {
    let mut z = net.a1.alpha.clone();
    z.push(net.a1.beta);
    z.extend_from_slice(&net.a2.alpha);
    z.push(net.a2.beta);
    z.push(net.w0);
    z
}

/// Output of the network at `x`, computed directly from `z` under the given signs.
pub(crate) fn eval_z(z: &[f64], x: &[f64], out: OutputSigns) -> f64 {
    let d = x.len();
    let a1 = crate::network::dot(&z[..d], x) + z[d];
    let a2 = crate::network::dot(&z[d + 1..2 * d + 1], x) + z[2 * d + 1];
    let u = z[2 * d + 2] + out.w1.value() * relu(a1) + out.w2.value() * relu(a2);
    out.theta.value() * relu(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::squared_loss;
    use crate::qp::solve_qp;

    #[test]
    fn single_point_in_t4() {
        let data = Dataset::from_rows(&[vec![0.5]], &[0.7]).unwrap();
        let p = ActivationPattern {
            q1: vec![Sign::Minus],
            q2: vec![Sign::Minus],
            split: vec![None],
            theta: Sign::Plus,
            w1: Sign::Plus,
            w2: Sign::Plus,
            w0: Sign::Minus,
        };
        let qp = build_subprogram(&data, &p).unwrap();
        assert_eq!(qp.num_vars(), 5);
        assert_eq!(qp.num_constraints(), 3);
        assert!(qp.residuals.is_empty());
        assert!((qp.offset - 0.49).abs() < 1e-15);
        let s = solve_qp(&qp);
        assert!((s.objective - 0.49).abs() < 1e-12);
    }

    #[test]
    fn objective_equals_loss_at_feasible_points() {
        let data = Dataset::from_rows(
            &[vec![0.0, 1.0], vec![1.0, -1.0], vec![2.0, 0.5], vec![-1.0, -1.0]],
            &[1.0, 0.0, 2.0, 0.5],
        )
        .unwrap();
        let net = TwoReluNet {
            a1: AffineFunction::new(vec![1.0, 0.5], -0.2),
            a2: AffineFunction::new(vec![-0.3, 1.0], 0.1),
            w0: 0.4,
            w1: Sign::Plus,
            w2: Sign::Minus,
            theta: -2.0,
        };
        let p = ActivationPattern::of_net(&net, &data);
        let qp = build_subprogram(&data, &p).unwrap();
        let z = solution_from_net(&normalize_theta(&net));
        assert!(qp.max_violation(&z) <= 0.0);
        let loss = squared_loss(&net, &data).unwrap();
        assert!((qp.objective(&z) - loss).abs() < 1e-12);
        assert!(p.is_consistent_with(&normalize_theta(&net), &data, 1e-12));
    }

    #[test]
    fn constraint_count_is_at_most_3n_plus_1() {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], &[1.0, 0.0, 1.0]).unwrap();
        for code in 0..64u32 {
            let sign = |b: u32| if code >> b & 1 == 1 { Sign::Plus } else { Sign::Minus };
            let q1 = vec![sign(0), sign(1), sign(2)];
            let q2 = vec![sign(3), sign(4), sign(5)];
            let split = (0..3)
                .map(|i| (Region::of(q1[i], q2[i]) != Region::T4).then_some(Sign::Plus))
                .collect();
            let p = ActivationPattern {
                q1,
                q2,
                split,
                theta: Sign::Plus,
                w1: Sign::Plus,
                w2: Sign::Minus,
                w0: Sign::Plus,
            };
            let qp = build_subprogram(&data, &p).unwrap();
            assert_eq!(qp.num_vars(), 5);
            assert!(qp.num_constraints() <= 3 * 3 + 1);
        }
    }
}
