//! Reduction from 2-affine separability to zero-loss training of a two-node network.
//!
//! An instance asks for two hyperplanes with every `S1` point strictly on the positive
//! side of both and every `S0` point strictly negative on at least one. The instance is
//! embedded in two extra dimensions and padded with twelve fixed gadget points; the
//! padded set has a zero-loss two-node network exactly when the instance is separable.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::enumerate_dichotomies;
use crate::network::{max_abs_error, relu, AffineFunction, Sign, TwoReluNet};

/// Strict margin for separability checks, measured after scaling each plane to
/// `|alpha|_inf = 1`.
pub const TOL_STRICT: f64 = 1e-9;

/// Pointwise error below which a network counts as fitting the gadget dataset.
pub const ZERO_LOSS_TOL: f64 = 1e-9;

/// Gadget points in the two appended coordinates, with labels.
pub const GADGET: [([f64; 2], f64); 12] = [
    ([1.0, 1.0], 1.0),
    ([2.0, 1.0], 1.0),
    ([1.0, 2.0], 1.0),
    ([2.0, 2.0], 1.0),
    ([1.0, -1.0], 0.0),
    ([2.0, -1.0], 0.0),
    ([3.0, -1.0], 0.0),
    ([-1.0, 1.0], 0.0),
    ([-1.0, 2.0], 0.0),
    ([-1.0, 3.0], 0.0),
    ([-1.0, 0.0], 0.0),
    ([0.0, -1.0], 0.0),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityInstance {
    pub points: Vec<Vec<f64>>,
    #[serde(rename = "S1")]
    pub s1: Vec<usize>,
    #[serde(rename = "S0")]
    pub s0: Vec<usize>,
    /// Original coordinates are `points[i] + shift`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
}

impl SeparabilityInstance {
    pub fn new(points: Vec<Vec<f64>>, s1: Vec<usize>, s0: Vec<usize>) -> Result<Self> {
        let inst = SeparabilityInstance {
            points,
            s1,
            s0,
            shift: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// `S1` = points labeled 1, `S0` = points labeled 0.
    pub fn from_dataset(data: &Dataset) -> Result<Self> {
        data.check_binary()?;
        let (mut s1, mut s0) = (Vec::new(), Vec::new());
        for (i, p) in data.points().iter().enumerate() {
            if p.y == 1.0 {
                s1.push(i);
            } else {
                s0.push(i);
            }
        }
        SeparabilityInstance::new(data.inputs(), s1, s0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.points.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let d = self.points[0].len();
        for (i, p) in self.points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
        }
        if self.s1.is_empty() {
            return Err(Error::InvalidArgument("S1 must be nonempty".into()));
        }
        let mut seen = vec![false; n];
        for &i in self.s1.iter().chain(&self.s0) {
            if i >= n {
                return Err(Error::InvalidArgument(format!("index {i} out of range for {n} points")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!("index {i} listed twice")));
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!("index {i} is in neither S1 nor S0")));
        }
        if let Some(s) = &self.shift {
            if s.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.len(),
                });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// 1 on `S1`, 0 on `S0`.
    pub fn labels(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.len()];
        for &i in &self.s1 {
            y[i] = 1.0;
        }
        y
    }

    /// True when some `S1` point is the origin.
    pub fn is_normalized(&self) -> bool {
        self.s1.iter().any(|&i| self.points[i].iter().all(|v| *v == 0.0))
    }

    /// The instance translated so that its lowest-indexed `S1` point is the origin.
    /// Already normalized instances are returned unchanged.
    pub fn normalized(&self) -> SeparabilityInstance {
        if self.is_normalized() {
            return self.clone();
        }
        let origin = self.points[*self.s1.iter().min().expect("S1 is nonempty")].clone();
        let points = self
            .points
            .iter()
            .map(|p| p.iter().zip(&origin).map(|(a, b)| a - b).collect())
            .collect();
        let shift = match &self.shift {
            Some(s) => s.iter().zip(&origin).map(|(a, b)| a + b).collect(),
            None => origin,
        };
        SeparabilityInstance {
            points,
            s1: self.s1.clone(),
            s0: self.s0.clone(),
            shift: Some(shift),
        }
    }

    /// Translation taking this instance's coordinates to those of `normalized()`.
    fn offset_to_normalized(&self) -> Vec<f64> {
        if self.is_normalized() {
            return vec![0.0; self.dim()];
        }
        self.points[*self.s1.iter().min().expect("S1 is nonempty")].clone()
    }
}

/// Two hyperplanes `{x : alpha . x + beta = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPlaneWitness {
    pub h1: AffineFunction,
    pub h2: AffineFunction,
}

impl TwoPlaneWitness {
    pub fn new(h1: AffineFunction, h2: AffineFunction) -> Self {
        TwoPlaneWitness { h1, h2 }
    }

    /// Each plane scaled to `|alpha|_inf = 1`; constant planes are left alone.
    pub fn normalized(&self) -> TwoPlaneWitness {
        let unit = |h: &AffineFunction| {
            let m = h.max_abs_gradient();
            if m > 0.0 {
                h.scaled(1.0 / m)
            } else {
                h.clone()
            }
        };
        TwoPlaneWitness::new(unit(&self.h1), unit(&self.h2))
    }

    /// The same planes in coordinates `x'` with `x = x' + t`.
    pub fn translated(&self, t: &[f64]) -> TwoPlaneWitness {
        TwoPlaneWitness::new(self.h1.shifted_input(t), self.h2.shifted_input(t))
    }

    /// Worst slack of the separability conditions: `min(h1, h2)` over `S1` and
    /// `-min(h1, h2)` over `S0`. Positive iff the conditions hold strictly.
    pub fn margin(&self, inst: &SeparabilityInstance) -> f64 {
        let lo = |x: &[f64]| self.h1.eval_unchecked(x).min(self.h2.eval_unchecked(x));
        let pos = inst.s1.iter().map(|&i| lo(&inst.points[i]));
        let neg = inst.s0.iter().map(|&i| -lo(&inst.points[i]));
        pos.chain(neg).fold(f64::INFINITY, f64::min)
    }
}

/// Checks both separability conditions with margin `TOL_STRICT` after normalizing each
/// plane. Mismatched dimensions give `false`.
pub fn check_separability(inst: &SeparabilityInstance, witness: &TwoPlaneWitness) -> bool {
    let d = inst.dim();
    if witness.h1.dim() != d || witness.h2.dim() != d || inst.validate().is_err() {
        return false;
    }
    witness.normalized().margin(inst) > TOL_STRICT
}

/// The instance embedded as `(x, 0, 0)` with its labels, followed by the twelve gadget
/// points `(0, l, m)`.
pub fn build_gadget(inst: &SeparabilityInstance) -> Result<Dataset> {
    inst.validate()?;
    if !inst.is_normalized() {
        return Err(Error::NotNormalized);
    }
    let d = inst.dim();
    let labels = inst.labels();
    let mut rows = Vec::with_capacity(inst.len() + GADGET.len());
    let mut ys = Vec::with_capacity(rows.capacity());
    for (p, y) in inst.points.iter().zip(labels) {
        let mut x = p.clone();
        x.extend([0.0, 0.0]);
        rows.push(x);
        ys.push(y);
    }
    for (lm, y) in GADGET {
        let mut x = vec![0.0; d];
        x.extend(lm);
        rows.push(x);
        ys.push(y);
    }
    Dataset::from_rows(&rows, &ys)
}

/// The thirteen points of the bare gadget in the plane: the origin (label 1) and the
/// twelve gadget points.
pub fn gadget_dataset() -> Dataset {
    let inst = SeparabilityInstance::new(vec![vec![]], vec![0], vec![]).expect("valid instance");
    build_gadget(&inst).expect("normalized instance")
}

/// Zero-loss network for the gadget dataset of a separable instance.
///
/// `witness` is given in the coordinates of `inst`; the network acts on the gadget
/// dataset of `inst.normalized()`.
pub fn forward_construct(inst: &SeparabilityInstance, witness: &TwoPlaneWitness) -> Result<TwoReluNet> {
    inst.validate()?;
    let d = inst.dim();
    if witness.h1.dim() != d || witness.h2.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: witness.h1.dim().max(witness.h2.dim()),
        });
    }
    let norm = inst.normalized();
    let w = witness.translated(&inst.offset_to_normalized());
    if w.margin(&norm) <= 0.0 {
        return Err(Error::InvalidWitness("planes do not separate the instance".into()));
    }
    // The origin is in S1, so both offsets are positive; scale them to 1/2.
    let h1 = w.h1.scaled(0.5 / w.h1.beta);
    let h2 = w.h2.scaled(0.5 / w.h2.beta);
    let eps = norm
        .s0
        .iter()
        .map(|&i| {
            let x = &norm.points[i];
            relu(-h1.eval_unchecked(x)) + relu(-h2.eval_unchecked(x))
        })
        .fold(f64::INFINITY, f64::min);
    if eps <= 0.0 {
        return Err(Error::InvalidWitness(format!("epsilon = {eps} is not positive")));
    }
    let eta = (0.5 * eps).min(0.25);
    let lift = |h: &AffineFunction, k: usize| {
        let mut alpha: Vec<f64> = h.alpha.iter().map(|a| -a).collect();
        alpha.extend([0.0, 0.0]);
        alpha[d + k] = -1.0;
        AffineFunction::new(alpha, -h.beta)
    };
    Ok(TwoReluNet {
        a1: lift(&h1, 0),
        a2: lift(&h2, 1),
        w0: eta,
        w1: Sign::Minus,
        w2: Sign::Minus,
        theta: 1.0 / eta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `Pi2` sums exceed `c`.
    Above,
    /// `Pi2` sums fall below `c`.
    Below,
}

/// Claims `w1 [l1]_+ + w2 [l2]_+` is `c` on `Pi1` and strictly on `side` of `c` elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardSortWitness {
    pub l1: AffineFunction,
    pub l2: AffineFunction,
    pub w1: Sign,
    pub w2: Sign,
    pub c: f64,
    pub side: Side,
}

impl HardSortWitness {
    pub fn sum(&self, x: &[f64]) -> f64 {
        self.l1
            .eval_dd(x)
            .relu()
            .scale_sign(self.w1)
            .add(self.l2.eval_dd(x).relu().scale_sign(self.w2))
            .value()
    }

    /// Signed distance of `x` past `c` in the claimed direction.
    fn excess(&self, x: &[f64]) -> f64 {
        match self.side {
            Side::Above => self.sum(x) - self.c,
            Side::Below => self.c - self.sum(x),
        }
    }

    /// The witness read off a network: its first-layer nodes and weights, with `c`
    /// taken at the first `Pi1` point.
    pub fn from_net(net: &TwoReluNet, pi1_point: &[f64], side: Side) -> HardSortWitness {
        let mut w = HardSortWitness {
            l1: net.a1.clone(),
            l2: net.a2.clone(),
            w1: net.w1,
            w2: net.w2,
            c: 0.0,
            side,
        };
        w.c = w.sum(pi1_point);
        w
    }
}

/// True iff the sums equal `c` within `tol` on `pi1` and exceed it by more than `tol`
/// in the claimed direction on every other point.
pub fn check_hard_sort(points: &[Vec<f64>], pi1: &[usize], witness: &HardSortWitness, tol: f64) -> bool {
    let d = witness.l1.dim();
    if witness.l2.dim() != d || points.iter().any(|p| p.len() != d) || pi1.iter().any(|&i| i >= points.len()) {
        return false;
    }
    let mut in_pi1 = vec![false; points.len()];
    for &i in pi1 {
        in_pi1[i] = true;
    }
    points.iter().zip(in_pi1).all(|(x, first)| {
        if first {
            (witness.sum(x) - witness.c).abs() <= tol
        } else {
            witness.excess(x) > tol
        }
    })
}

/// Zero-loss network for labels `1` on `pi1` and `0` elsewhere, built from a valid
/// hard-sort witness.
pub fn net_from_hard_sort(witness: &HardSortWitness, points: &[Vec<f64>], pi1: &[usize]) -> Result<TwoReluNet> {
    if !check_hard_sort(points, pi1, witness, TOL_STRICT) {
        return Err(Error::InvalidWitness("hard-sort conditions fail".into()));
    }
    let mut in_pi1 = vec![false; points.len()];
    for &i in pi1 {
        in_pi1[i] = true;
    }
    let eps = points
        .iter()
        .zip(&in_pi1)
        .filter(|(_, first)| !**first)
        .map(|(x, _)| witness.excess(x))
        .fold(f64::INFINITY, f64::min);
    let eps = if eps.is_finite() { eps } else { 1.0 };
    let (w1, w2, w0) = match witness.side {
        Side::Above => (witness.w1.flip(), witness.w2.flip(), witness.c + 0.5 * eps),
        Side::Below => (witness.w1, witness.w2, 0.5 * eps - witness.c),
    };
    Ok(TwoReluNet {
        a1: witness.l1.clone(),
        a2: witness.l2.clone(),
        w0,
        w1,
        w2,
        theta: 2.0 / eps,
    })
}

/// Reads two separating planes off a zero-loss network on the gadget dataset of
/// `inst.normalized()`: the negated first-layer nodes restricted to the first `d`
/// coordinates. If the planes are only weakly positive on `S1`, both are shifted by half
/// the `S0` slack. The result is in the coordinates of `inst`.
pub fn extract_separability_witness(net: &TwoReluNet, inst: &SeparabilityInstance) -> Result<TwoPlaneWitness> {
    inst.validate()?;
    let d = inst.dim();
    let norm = inst.normalized();
    let data = build_gadget(&norm)?;
    net.check_shape()?;
    if net.a1.dim() != d + 2 {
        return Err(Error::DimensionMismatch {
            expected: d + 2,
            found: net.a1.dim(),
        });
    }
    let max_error = max_abs_error(net, &data)?;
    if max_error.is_nan() || max_error > ZERO_LOSS_TOL {
        return Err(Error::NotZeroLoss { max_error });
    }
    // Coefficients that are rounding noise next to the node's gadget coefficients are
    // dropped, so a node that ignores the instance coordinates yields a constant plane.
    let truncate = |a: &AffineFunction| {
        let floor = 1e-12 * a.max_abs_gradient();
        let alpha = a.alpha[..d].iter().map(|v| if v.abs() <= floor { 0.0 } else { -v }).collect();
        AffineFunction::new(alpha, -a.beta)
    };
    let mut w = TwoPlaneWitness::new(truncate(&net.a1), truncate(&net.a2));

    let lo = |w: &TwoPlaneWitness, x: &[f64]| w.h1.eval_unchecked(x).min(w.h2.eval_unchecked(x));
    let unit = w.normalized();
    let weak = norm.s1.iter().map(|&i| lo(&unit, &norm.points[i])).fold(f64::INFINITY, f64::min);
    if weak <= TOL_STRICT {
        let eps = norm
            .s0
            .iter()
            .map(|&i| -lo(&w, &norm.points[i]))
            .fold(f64::INFINITY, f64::min);
        let shift = if eps.is_finite() {
            0.5 * eps
        } else {
            1.0 + w.h1.max_abs_gradient().max(w.h2.max_abs_gradient())
        };
        w.h1.beta += shift;
        w.h2.beta += shift;
    }
    let w = w.normalized();
    let back: Vec<f64> = inst.offset_to_normalized().iter().map(|v| -v).collect();
    Ok(w.translated(&back))
}

/// Decides separability by pairing every affine dichotomy positive on `S1`.
/// Exponential in the dimension; meant for small instances.
pub fn separable_exhaustive(inst: &SeparabilityInstance) -> Result<Option<TwoPlaneWitness>> {
    inst.validate()?;
    let d = inst.dim();
    let n = inst.len();
    if d == 0 {
        let c = AffineFunction::constant(0, 1.0);
        return Ok(inst.s0.is_empty().then(|| TwoPlaneWitness::new(c.clone(), c)));
    }
    let words = n.div_ceil(64);
    let s0_mask = mask(words, inst.s0.iter().copied());
    let cands: Vec<(Vec<u64>, AffineFunction)> = enumerate_dichotomies(&inst.points, d)?
        .into_iter()
        .filter(|dc| inst.s1.iter().all(|&i| dc.signs[i] == Sign::Plus))
        .map(|dc| {
            let neg = mask(words, inst.s0.iter().copied().filter(|&i| dc.signs[i] == Sign::Minus));
            (neg, dc.witness)
        })
        .collect();
    for (i, (m1, h1)) in cands.iter().enumerate() {
        for (m2, h2) in &cands[i..] {
            if m1.iter().zip(m2).zip(&s0_mask).all(|((a, b), s)| a | b == *s) {
                return Ok(Some(TwoPlaneWitness::new(h1.clone(), h2.clone())));
            }
        }
    }
    Ok(None)
}

fn mask(words: usize, idx: impl Iterator<Item = usize>) -> Vec<u64> {
    let mut m = vec![0u64; words];
    for i in idx {
        m[i / 64] |= 1 << (i % 64);
    }
    m
}

/// Largest `|a_k(x)|` over `x` with `a_k(x) > 0` among `T1` and the origin: zero when
/// both nodes are non-positive on those gadget points.
pub fn gadget_rigidity_violation(net: &TwoReluNet, d: usize) -> f64 {
    let mut pts: Vec<Vec<f64>> = vec![vec![0.0; d + 2]];
    for (lm, y) in GADGET {
        if y == 1.0 {
            let mut x = vec![0.0; d];
            x.extend(lm);
            pts.push(x);
        }
    }
    pts.iter()
        .flat_map(|x| [net.a1.eval_unchecked(x), net.a2.eval_unchecked(x)])
        .fold(0.0f64, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{squared_loss, Network};

    fn plane(alpha: &[f64], beta: f64) -> AffineFunction {
        AffineFunction::new(alpha.to_vec(), beta)
    }

    fn one_d() -> SeparabilityInstance {
        SeparabilityInstance::new(vec![vec![0.0], vec![1.0]], vec![0], vec![1]).unwrap()
    }

    #[test]
    fn direct_separability_check() {
        let inst = SeparabilityInstance::new(vec![vec![0.0, 0.0], vec![2.0, 0.0]], vec![0], vec![1]).unwrap();
        let w = TwoPlaneWitness::new(plane(&[-1.0, 0.0], 0.5), plane(&[-1.0, 0.0], 0.5));
        assert!(check_separability(&inst, &w));
        let flat = TwoPlaneWitness::new(plane(&[0.0, 0.0], 1.0), plane(&[0.0, 0.0], 1.0));
        assert!(!check_separability(&inst, &flat));
        let only_s1 = SeparabilityInstance::new(vec![vec![0.0, 0.0], vec![2.0, 0.0]], vec![0, 1], vec![]).unwrap();
        assert!(check_separability(&only_s1, &flat));
        let wrong_dim = TwoPlaneWitness::new(plane(&[1.0], 1.0), plane(&[1.0], 1.0));
        assert!(!check_separability(&inst, &wrong_dim));
    }

    #[test]
    fn instance_validation() {
        assert!(SeparabilityInstance::new(vec![vec![0.0]], vec![], vec![0]).is_err());
        assert!(SeparabilityInstance::new(vec![vec![0.0], vec![1.0]], vec![0], vec![]).is_err());
        assert!(SeparabilityInstance::new(vec![vec![0.0], vec![1.0]], vec![0, 1], vec![1]).is_err());
        assert!(SeparabilityInstance::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0], vec![1]).is_err());
    }

    #[test]
    fn instance_json_uses_set_names() {
        let s = serde_json::to_string(&one_d()).unwrap();
        assert_eq!(s, r#"{"points":[[0.0],[1.0]],"S1":[0],"S0":[1]}"#);
        let back: SeparabilityInstance = serde_json::from_str(&s).unwrap();
        assert_eq!(back, one_d());
    }

    #[test]
    fn normalization_keeps_the_shift() {
        let inst = SeparabilityInstance::new(vec![vec![3.0, 1.0], vec![5.0, 1.0]], vec![0], vec![1]).unwrap();
        assert!(!inst.is_normalized());
        assert!(matches!(build_gadget(&inst), Err(Error::NotNormalized)));
        let norm = inst.normalized();
        assert!(norm.is_normalized());
        assert_eq!(norm.points[1], vec![2.0, 0.0]);
        assert_eq!(norm.shift, Some(vec![3.0, 1.0]));
        assert_eq!(norm.normalized(), norm);
    }

    #[test]
    fn gadget_layout() {
        let data = build_gadget(&one_d()).unwrap();
        assert_eq!(data.len(), 14);
        assert_eq!(data.dim(), 3);
        assert_eq!(data.point(2).x, vec![0.0, 1.0, 1.0]);
        assert_eq!(data.point(2).y, 1.0);
        assert_eq!(data.point(13).x, vec![0.0, 0.0, -1.0]);
        assert_eq!(data.point(13).y, 0.0);
        let ones = data.labels().iter().filter(|y| **y == 1.0).count();
        assert_eq!((ones, data.len() - ones), (1 + 4, 1 + 8));
        assert_eq!(gadget_dataset().len(), 13);
    }

    #[test]
    fn forward_construction_on_a_line() {
        let inst = one_d();
        let w = TwoPlaneWitness::new(plane(&[-1.0], 0.5), plane(&[-1.0], 0.5));
        let net = forward_construct(&inst, &w).unwrap();
        // eps = 2 [1 - 0.5]_+ = 1, so eta = 1/4.
        assert_eq!(net.w0, 0.25);
        assert_eq!(net.theta, 4.0);
        let data = build_gadget(&inst).unwrap();
        assert_eq!(squared_loss(&net, &data).unwrap(), 0.0);
        for (lm, y) in GADGET {
            assert_eq!(net.eval(&[0.0, lm[0], lm[1]]).unwrap(), y);
        }
    }

    #[test]
    fn forward_construction_rejects_bad_witness() {
        let w = TwoPlaneWitness::new(plane(&[1.0], 0.5), plane(&[1.0], 0.5));
        assert!(matches!(forward_construct(&one_d(), &w), Err(Error::InvalidWitness(_))));
    }

    #[test]
    fn round_trip_in_original_coordinates() {
        let inst = SeparabilityInstance::new(
            vec![vec![2.0, 2.0], vec![3.0, 2.5], vec![5.0, 2.0], vec![2.0, 6.0]],
            vec![0, 1],
            vec![2, 3],
        )
        .unwrap();
        let w = TwoPlaneWitness::new(plane(&[-1.0, 0.0], 4.0), plane(&[0.0, -1.0], 4.0));
        assert!(check_separability(&inst, &w));
        let net = forward_construct(&inst, &w).unwrap();
        let data = build_gadget(&inst.normalized()).unwrap();
        assert!(max_abs_error(&net, &data).unwrap() <= 1e-12);
        let back = extract_separability_witness(&net, &inst).unwrap();
        assert!(check_separability(&inst, &back));
        // Equal to the planted planes up to positive scaling.
        for (a, b) in [(&back.h1, &w.h1), (&back.h2, &w.h2)] {
            let s = b.beta / a.beta;
            assert!(s > 0.0);
            for (x, y) in a.alpha.iter().zip(&b.alpha) {
                assert!((x * s - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn extraction_needs_zero_loss() {
        let net = TwoReluNet::zero(3);
        assert!(matches!(
            extract_separability_witness(&net, &one_d()),
            Err(Error::NotZeroLoss { .. })
        ));
    }

    #[test]
    fn extraction_shifts_weak_witnesses() {
        // Nodes that vanish exactly at the origin leave the S1 side only weakly positive.
        let inst = one_d();
        let net = TwoReluNet {
            a1: plane(&[1.0, -1.0, 0.0], 0.0),
            a2: plane(&[1.0, 0.0, -1.0], 0.0),
            w0: 0.25,
            w1: Sign::Minus,
            w2: Sign::Minus,
            theta: 4.0,
        };
        let data = build_gadget(&inst).unwrap();
        assert_eq!(max_abs_error(&net, &data).unwrap(), 0.0);
        let w = extract_separability_witness(&net, &inst).unwrap();
        assert_eq!(w.h1.beta, 0.5);
        assert!(check_separability(&inst, &w));
    }

    #[test]
    fn hard_sort_round_trip() {
        let inst = one_d();
        let w = TwoPlaneWitness::new(plane(&[-1.0], 0.5), plane(&[-1.0], 0.5));
        let net = forward_construct(&inst, &w).unwrap();
        let data = build_gadget(&inst).unwrap();
        let pts = data.inputs();
        let pi1: Vec<usize> = (0..data.len()).filter(|&i| data.point(i).y == 1.0).collect();
        let hs = HardSortWitness::from_net(&net, &pts[0], Side::Below);
        assert_eq!(hs.c, 0.0);
        assert!(check_hard_sort(&pts, &pi1, &hs, 1e-9));
        let rebuilt = net_from_hard_sort(&hs, &pts, &pi1).unwrap();
        assert!(max_abs_error(&rebuilt, &data).unwrap() <= 1e-12);

        // Mirrored weights flip the side.
        let mirrored = HardSortWitness {
            w1: hs.w1.flip(),
            w2: hs.w2.flip(),
            side: Side::Above,
            ..hs.clone()
        };
        assert!(check_hard_sort(&pts, &pi1, &mirrored, 1e-9));
        let rebuilt = net_from_hard_sort(&mirrored, &pts, &pi1).unwrap();
        assert!(max_abs_error(&rebuilt, &data).unwrap() <= 1e-12);

        let wrong_side = HardSortWitness { side: Side::Above, ..hs.clone() };
        assert!(!check_hard_sort(&pts, &pi1, &wrong_side, 1e-9));
        assert!(net_from_hard_sort(&wrong_side, &pts, &pi1).is_err());
        let off = HardSortWitness { c: 0.5, ..hs };
        assert!(!check_hard_sort(&pts, &pi1, &off, 1e-9));
    }

    #[test]
    fn xor_diagonals_are_separable_by_a_strip() {
        // The quadrant picture: S1 on one diagonal, S0 on the other.
        let inst = SeparabilityInstance::new(
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0, 1],
            vec![2, 3],
        )
        .unwrap();
        let w = separable_exhaustive(&inst).unwrap();
        // A strip around the diagonal works, so exhaustive search finds a witness.
        let w = w.expect("strip separates");
        assert!(w.margin(&inst) > 0.0);
    }

    #[test]
    fn exhaustive_search_on_small_cases() {
        let line = SeparabilityInstance::new(vec![vec![0.0], vec![1.0], vec![-1.0]], vec![0], vec![1, 2]).unwrap();
        assert!(separable_exhaustive(&line).unwrap().is_some());
        // A zero point between two ones on a line cannot be cut off by convex S1.
        let gap = SeparabilityInstance::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0, 2], vec![1]).unwrap();
        assert!(separable_exhaustive(&gap).unwrap().is_none());
    }
}
