//! Exact interpolation of 0/1 labels with a wide single-hidden-layer ReLU network.
//!
//! All first-layer nodes share one random direction `v`. Points are swept in order of
//! `v . x`, and a node is added at each label change so that the first-layer output
//! `f` equals 1 on label-1 points and stays below 1 on label-0 points. A final output
//! offset and scale turn `f` into an exact fit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::network::{dot_dd, max_abs_error, AffineFunction, Dd, KReluNet, ReluNode, Sign};

/// Relative gap below which two projections count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpConfig {
    /// Directions to try when projections tie or the fit misses `target_error`.
    pub max_retries: usize,
    /// Largest acceptable `max_i |F(x^i) - y_i|` before another direction is drawn.
    /// If no direction meets it, the most accurate fit is returned.
    pub target_error: f64,
    /// Check the sweep invariants after every step and fail on the first violation.
    pub check_invariants: bool,
}

impl Default for InterpConfig {
    fn default() -> Self {
        InterpConfig {
            max_retries: 8,
            target_error: 1e-10,
            check_invariants: true,
        }
    }
}

/// What a sweep step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Step {
    Init,
    /// Three equal labels in a row.
    Skip,
    /// A run of ones starts: flatten the current piece at 1.
    Flatten,
    /// A run of zeros continues after its first point.
    Hold,
    /// Zero to one: a rising node lifts the next point to 1.
    Rise,
    /// One to zero: a falling node drops the next point below 1.
    Fall,
}

/// The state of the sweep, exposed for inspection and tests.
#[derive(Debug, Clone, Serialize)]
pub struct SweepState {
    pub v: Vec<f64>,
    /// Data indices sorted by projection.
    pub order: Vec<usize>,
    /// Sorted projections `v . x`.
    pub z: Vec<f64>,
    /// The current affine piece of `f`, valid right of the last hinge.
    pub g: AffineFunction,
    /// Nodes emitted so far.
    pub j: usize,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub net: KReluNet,
    pub state: SweepState,
    /// Directions drawn, including the successful one.
    pub attempts: usize,
}

/// A uniformly random unit vector, deterministic in `seed`.
pub fn sample_direction(d: usize, seed: u64) -> Vec<f64> {
    draw_direction(&mut ChaCha8Rng::seed_from_u64(seed), d)
}

fn draw_direction(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-150 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

pub fn fit_overparam(data: &Dataset, seed: u64) -> Result<KReluNet> {
    Ok(fit_overparam_with(data, seed, &InterpConfig::default())?.net)
}

pub fn fit_overparam_with(data: &Dataset, seed: u64, cfg: &InterpConfig) -> Result<FitReport> {
    data.check_binary()?;
    let d = data.dim();
    let n = data.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_tie = (0, 0);
    let mut best: Option<(f64, FitReport)> = None;
    for attempt in 1..=cfg.max_retries.max(1) {
        let v = draw_direction(&mut rng, d);
        let proj: Vec<f64> = data.points().iter().map(|p| dot_dd(&v, &p.x, 0.0).value()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]).then(a.cmp(&b)));
        let zmax = proj.iter().fold(0.0f64, |m, z| m.max(z.abs()));
        let tie = order
            .windows(2)
            .find(|w| proj[w[1]] - proj[w[0]] <= TIE_TOL * zmax)
            .map(|w| (w[0].min(w[1]), w[0].max(w[1])));
        if let Some(t) = tie {
            last_tie = t;
            continue;
        }
        let z: Vec<f64> = order.iter().map(|&i| proj[i]).collect();
        let (net, state) = sweep(data, v, order, z, cfg.check_invariants)?;
        let err = max_abs_error(&net, data)?;
        let report = FitReport {
            net,
            state,
            attempts: attempt,
        };
        if err <= cfg.target_error {
            return Ok(report);
        }
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, report));
        }
    }
    if let Some((_, mut report)) = best {
        report.attempts = cfg.max_retries.max(1);
        return Ok(report);
    }
    Err(Error::ProjectionTie {
        first: last_tie.0,
        second: last_tie.1,
        attempts: cfg.max_retries.max(1),
    })
}

struct Sweep<'a> {
    data: &'a Dataset,
    v: Vec<f64>,
    order: Vec<usize>,
    z: Vec<f64>,
    nodes: Vec<ReluNode>,
    /// First-layer output at every sorted position.
    f: Vec<Dd>,
    /// Running sum of all emitted nodes without the ReLU.
    g_alpha: Vec<Dd>,
    g_beta: Dd,
    steps: Vec<Step>,
}

impl Sweep<'_> {
    fn x(&self, pos: usize) -> &[f64] {
        &self.data.point(self.order[pos]).x
    }

    fn y(&self, pos: usize) -> f64 {
        self.data.point(self.order[pos]).y
    }

    fn emit(&mut self, alpha: Vec<f64>, beta: f64, w: Sign) {
        let a = AffineFunction::new(alpha, beta);
        for pos in 0..self.f.len() {
            let x = &self.data.point(self.order[pos]).x;
            self.f[pos] = self.f[pos].add(a.eval_dd(x).relu().scale_sign(w));
        }
        for (g, al) in self.g_alpha.iter_mut().zip(&a.alpha) {
            *g = g.add(Dd::new(*al).scale_sign(w));
        }
        self.g_beta = self.g_beta.add(Dd::new(a.beta).scale_sign(w));
        self.nodes.push(ReluNode { a, w });
    }

    /// Rising node `c (v . x - h)` with `c` chosen so that its value at sorted position
    /// `at` is `target`. The bias is fitted at `at` itself, so rounding of the
    /// stored weights shifts the hinge instead of the value there.
    fn emit_lift(&mut self, h: f64, at: usize, target: Dd) {
        let c = target.value() / (self.z[at] - h);
        let alpha: Vec<f64> = self.v.iter().map(|vk| c * vk).collect();
        let beta = target.add(dot_dd(&alpha, self.x(at), 0.0).scale_sign(Sign::Minus)).value();
        self.emit(alpha, beta, Sign::Plus);
    }

    /// Node `g - 1 + s (v . x - h)` from the running piece.
    fn emit_from_g(&mut self, s: f64, h: f64, w: Sign) {
        let alpha = self
            .g_alpha
            .iter()
            .zip(&self.v)
            .map(|(g, vk)| g.add_prod(s, *vk).value())
            .collect();
        let beta = self.g_beta.add(Dd::new(-1.0)).add_prod(-s, h).value();
        self.emit(alpha, beta, w);
    }

    fn g(&self) -> AffineFunction {
        AffineFunction::new(
            self.g_alpha.iter().map(|g| g.value()).collect(),
            self.g_beta.value(),
        )
    }

    /// Inductive claims after processing sorted position `upto`.
    fn check(&self, step: usize, upto: usize, new_node_from: Option<usize>) -> Result<()> {
        let fail = |detail: String| Err(Error::InvariantViolated { step, detail });
        for pos in 0..=upto {
            let f = self.f[pos].value();
            if self.y(pos) == 1.0 {
                if (f - 1.0).abs() > 1e-9 {
                    return fail(format!("f = {f} at a label-1 point, expected 1"));
                }
            } else if !(f < 1.0) {
                return fail(format!("f = {f} at a label-0 point, expected < 1"));
            }
        }
        if let Some(first_later) = new_node_from {
            let a = &self.nodes[self.nodes.len() - 1].a;
            for pos in 0..first_later {
                let x = self.x(pos);
                let scale = a.alpha.iter().zip(x).map(|(a, x)| (a * x).abs()).sum::<f64>() + a.beta.abs();
                let v = a.eval_unchecked(x);
                if v > 1e-10 * (1.0 + scale) {
                    return fail(format!("new node active at earlier position {pos}: {v}"));
                }
            }
        }
        // The current piece moves along v only, rising on ones and falling on zeros.
        let g = self.g();
        let vv = self.v.iter().map(|x| x * x).sum::<f64>();
        let slope = dot_dd(&g.alpha, &self.v, 0.0).value() / vv;
        let gnorm = g.alpha.iter().map(|x| x * x).sum::<f64>().sqrt();
        let off = g
            .alpha
            .iter()
            .zip(&self.v)
            .map(|(a, v)| (a - slope * v).powi(2))
            .sum::<f64>()
            .sqrt();
        let tol = 1e-9 * (1.0 + gnorm);
        let slope_tol = tol / vv.sqrt();
        if off > tol {
            return fail(format!("current piece not parallel to v (off-axis {off:e})"));
        }
        let ok = if self.y(upto) == 1.0 { slope >= -slope_tol } else { slope < 0.0 };
        if !ok {
            return fail(format!(
                "current piece has slope {slope} along v at a label-{} point",
                self.y(upto)
            ));
        }
        Ok(())
    }
}

fn sweep(
    data: &Dataset,
    v: Vec<f64>,
    order: Vec<usize>,
    z: Vec<f64>,
    check: bool,
) -> Result<(KReluNet, SweepState)> {
    let d = data.dim();
    let n = data.len();
    let mut sw = Sweep {
        data,
        g_alpha: vec![Dd::default(); d],
        g_beta: Dd::default(),
        f: vec![Dd::default(); n],
        nodes: Vec::new(),
        steps: Vec::new(),
        v,
        order,
        z,
    };
    let Some(start) = (0..n).find(|&p| sw.y(p) == 1.0) else {
        let state = state_of(&sw);
        return Ok((KReluNet::constant(d, 0.0, 0.0), state));
    };

    let z_prev = if start == 0 { sw.z[0] - 1.0 } else { sw.z[start - 1] };
    sw.emit_lift(z_prev, start, Dd::new(1.0));
    sw.steps.push(Step::Init);
    if check {
        sw.check(0, start, Some(start))?;
    }

    for i in start..n.saturating_sub(1) {
        let y_prev = if i == 0 { 0.0 } else { sw.y(i - 1) };
        let (y_i, y_next) = (sw.y(i), sw.y(i + 1));
        let zi = sw.z[i];
        let step = if y_next == y_i && y_i == y_prev {
            Step::Skip
        } else if y_next == y_i && y_i == 1.0 {
            sw.emit_from_g(0.0, zi, Sign::Minus);
            Step::Flatten
        } else if y_next == y_i {
            Step::Hold
        } else if y_i == 0.0 {
            let lift = Dd::new(1.0).add(sw.f[i + 1].scale_sign(Sign::Minus));
            sw.emit_lift(zi, i + 1, lift);
            Step::Rise
        } else {
            sw.emit_from_g(1.0, zi, Sign::Minus);
            Step::Fall
        };
        sw.steps.push(step);
        if check {
            let emitted = !matches!(step, Step::Skip | Step::Hold);
            sw.check(sw.steps.len() - 1, i + 1, emitted.then_some(i + 1))?;
        }
    }

    let f_max0 = (0..n)
        .filter(|&p| sw.y(p) == 0.0)
        .map(|p| sw.f[p].value())
        .fold(f64::NEG_INFINITY, f64::max);
    let w0 = if f_max0.is_finite() { -f_max0 } else { 0.0 };
    let theta = 1.0 / (1.0 + w0);
    let state = state_of(&sw);
    let net = KReluNet {
        nodes: sw.nodes,
        w0,
        theta,
        dim: d,
    };
    Ok((net, state))
}

fn state_of(sw: &Sweep) -> SweepState {
    SweepState {
        v: sw.v.clone(),
        order: sw.order.clone(),
        z: sw.z.clone(),
        g: sw.g(),
        j: sw.nodes.len(),
        steps: sw.steps.clone(),
    }
}

/// True iff `net` fits every point within `tol` using at most `N` nodes.
pub fn verify_interpolation(net: &KReluNet, data: &Dataset, tol: f64) -> bool {
    net.node_count() <= data.len() && max_abs_error(net, data).is_ok_and(|e| e <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Network;

    fn line(xs: &[f64], ys: &[f64]) -> Dataset {
        Dataset::from_rows(&xs.iter().map(|x| vec![*x]).collect::<Vec<_>>(), ys).unwrap()
    }

    #[test]
    fn direction_is_unit_and_deterministic() {
        let v = sample_direction(1, 3);
        assert!(v[0] == 1.0 || v[0] == -1.0);
        let a = sample_direction(3, 42);
        assert_eq!(a, sample_direction(3, 42));
        assert!((a.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_zero_one_in_one_dimension() {
        let data = line(&[0.0, 1.0, 2.0], &[1.0, 0.0, 1.0]);
        let r = fit_overparam_with(&data, 0, &InterpConfig::default()).unwrap();
        assert_eq!(r.state.steps, vec![Step::Init, Step::Fall, Step::Rise]);
        assert_eq!(r.net.node_count(), 3);
        for (x, y) in [(0.0, 1.0), (1.0, 0.0), (2.0, 1.0)] {
            assert!((r.net.eval(&[x]).unwrap() - y).abs() < 1e-12);
        }
        // The first-layer output is 1, 0, 1 whichever way v points.
        let f: Vec<f64> = [0.0, 1.0, 2.0].iter().map(|x| r.net.first_layer_sum(&[*x])).collect();
        assert!((f[0] - 1.0).abs() < 1e-12 && f[1].abs() < 1e-12 && (f[2] - 1.0).abs() < 1e-12);
        assert_eq!(r.net.w0, 0.0);
        assert_eq!(r.net.theta, 1.0);
    }

    #[test]
    fn all_ones_use_two_nodes() {
        let data = line(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0]);
        let net = fit_overparam(&data, 5).unwrap();
        assert_eq!(net.node_count(), 2);
        assert!(verify_interpolation(&net, &data, 1e-12));
    }

    #[test]
    fn all_zeros_give_the_zero_net() {
        let data = line(&[0.0, 1.0], &[0.0, 0.0]);
        let net = fit_overparam(&data, 5).unwrap();
        assert_eq!(net.node_count(), 0);
        assert_eq!(net.theta, 0.0);
        assert!(verify_interpolation(&net, &data, 0.0));
    }

    #[test]
    fn duplicate_points_exhaust_retries() {
        let data = Dataset::from_rows(&[vec![1.0, 2.0], vec![0.0, 0.0], vec![1.0, 2.0]], &[1.0, 0.0, 0.0]).unwrap();
        match fit_overparam(&data, 1) {
            Err(Error::ProjectionTie { first, second, attempts }) => {
                assert_eq!((first, second, attempts), (0, 2, 8));
            }
            other => panic!("expected a tie, got {other:?}"),
        }
    }

    #[test]
    fn rejects_real_labels() {
        let data = line(&[0.0], &[0.5]);
        assert!(matches!(fit_overparam(&data, 0), Err(Error::NonBinaryLabel { .. })));
    }

    #[test]
    fn verify_checks_node_bound_and_fit() {
        let data = line(&[0.0, 1.0, 2.0], &[1.0, 0.0, 1.0]);
        let net = fit_overparam(&data, 0).unwrap();
        assert!(verify_interpolation(&net, &data, 1e-9));
        let flipped = line(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0]);
        assert!(!verify_interpolation(&net, &flipped, 1e-9));
        let mut wide = net.clone();
        for _ in 0..2 {
            wide.nodes.push(ReluNode {
                a: AffineFunction::new(vec![0.0], -1.0),
                w: Sign::Plus,
            });
        }
        assert!(!verify_interpolation(&wide, &data, 1e-9));
    }
}
