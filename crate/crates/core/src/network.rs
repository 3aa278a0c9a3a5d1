//! Network types and their evaluation.
//!
//! Both network shapes share the same output stage:
//! `F(x) = theta * relu(w0 + sum_j w_j * relu(a_j(x)))` with every `w_j` in {-1, +1}.
//! Magnitudes of the first-layer weights are absorbed into the affine maps, since
//! `w * relu(t) == sign(w) * relu(|w| * t)`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// `[t]_+ = max(t, 0)`. Zero maps to zero.
#[inline]
pub fn relu(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

/// Unevaluated sum `hi + lo` carrying about twice the precision of `f64`.
///
/// Networks are evaluated through this so that sums of large, cancelling node terms
/// do not lose the digits that exact fits depend on.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

impl Dd {
    #[inline]
    pub(crate) fn new(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    #[inline]
    pub(crate) fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let hi = s + e;
        Dd { hi, lo: e - (hi - s) }
    }

    #[inline]
    pub(crate) fn add_prod(self, a: f64, b: f64) -> Dd {
        let p = a * b;
        self.add(Dd { hi: p, lo: a.mul_add(b, -p) })
    }

    #[inline]
    pub(crate) fn scale_sign(self, s: Sign) -> Dd {
        match s {
            Sign::Plus => self,
            Sign::Minus => Dd { hi: -self.hi, lo: -self.lo },
        }
    }

    #[inline]
    pub(crate) fn relu(self) -> Dd {
        if self.hi > 0.0 || (self.hi == 0.0 && self.lo > 0.0) {
            self
        } else {
            Dd::default()
        }
    }

    #[inline]
    pub(crate) fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Dot product plus offset, accurate to roughly twice working precision.
pub(crate) fn dot_dd(a: &[f64], b: &[f64], offset: f64) -> Dd {
    a.iter().zip(b).fold(Dd::new(offset), |acc, (x, y)| acc.add_prod(*x, *y))
}

/// A sign in {-1, +1}. Serialized as the integer `1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn of(v: f64) -> Sign {
        if v < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => write!(f, "+1"),
            Sign::Minus => write!(f, "-1"),
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        })
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if v == 1.0 {
            Ok(Sign::Plus)
        } else if v == -1.0 {
            Ok(Sign::Minus)
        } else {
            Err(serde::de::Error::custom(format!(
                "sign must be 1 or -1, got {v}"
            )))
        }
    }
}

/// `x -> alpha . x + beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFunction {
    pub alpha: Vec<f64>,
    pub beta: f64,
}

impl AffineFunction {
    pub fn new(alpha: Vec<f64>, beta: f64) -> Self {
        AffineFunction { alpha, beta }
    }

    pub fn zero(dim: usize) -> Self {
        AffineFunction {
            alpha: vec![0.0; dim],
            beta: 0.0,
        }
    }

    pub fn constant(dim: usize, beta: f64) -> Self {
        AffineFunction {
            alpha: vec![0.0; dim],
            beta,
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// A function with zero gradient cannot act as a separating hyperplane.
    pub fn is_degenerate(&self) -> bool {
        self.alpha.iter().all(|a| *a == 0.0)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.alpha.len() {
            return Err(Error::DimensionMismatch {
                expected: self.alpha.len(),
                found: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.eval_dd(x).value()
    }

    #[inline]
    pub(crate) fn eval_dd(&self, x: &[f64]) -> Dd {
        dot_dd(&self.alpha, x, self.beta)
    }

    pub fn scaled(&self, c: f64) -> AffineFunction {
        AffineFunction {
            alpha: self.alpha.iter().map(|a| a * c).collect(),
            beta: self.beta * c,
        }
    }

    pub fn negated(&self) -> AffineFunction {
        self.scaled(-1.0)
    }

    pub fn max_abs_gradient(&self) -> f64 {
        self.alpha.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Same function expressed in coordinates `x' = x - shift`.
    pub fn shifted_input(&self, shift: &[f64]) -> AffineFunction {
        AffineFunction {
            alpha: self.alpha.clone(),
            beta: self.beta + dot(&self.alpha, shift),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.beta.is_finite() && self.alpha.iter().all(|a| a.is_finite())
    }
}

/// Anything that maps an input vector to a scalar output.
pub trait Network {
    fn input_dim(&self) -> usize;

    fn eval_unchecked(&self, x: &[f64]) -> f64;

    fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }
}

/// Two first-layer ReLU nodes feeding one second-layer ReLU node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoReluNet {
    pub a1: AffineFunction,
    pub a2: AffineFunction,
    pub w0: f64,
    pub w1: Sign,
    pub w2: Sign,
    pub theta: f64,
}

impl TwoReluNet {
    /// All-zero network on inputs of dimension `dim`.
    pub fn zero(dim: usize) -> Self {
        TwoReluNet {
            a1: AffineFunction::zero(dim),
            a2: AffineFunction::zero(dim),
            w0: 0.0,
            w1: Sign::Plus,
            w2: Sign::Plus,
            theta: 1.0,
        }
    }

    /// Value fed into the second-layer ReLU.
    #[inline]
    pub fn hidden_sum(&self, x: &[f64]) -> f64 {
        Dd::new(self.w0)
            .add(self.a1.eval_dd(x).relu().scale_sign(self.w1))
            .add(self.a2.eval_dd(x).relu().scale_sign(self.w2))
            .value()
    }

    /// `w1 [a1(x)]_+ + w2 [a2(x)]_+`, the quantity hard-sorting talks about.
    pub fn first_layer_sum(&self, x: &[f64]) -> f64 {
        self.a1
            .eval_dd(x)
            .relu()
            .scale_sign(self.w1)
            .add(self.a2.eval_dd(x).relu().scale_sign(self.w2))
            .value()
    }

    pub fn to_k_relu(&self) -> KReluNet {
        KReluNet {
            nodes: vec![
                ReluNode {
                    a: self.a1.clone(),
                    w: self.w1,
                },
                ReluNode {
                    a: self.a2.clone(),
                    w: self.w2,
                },
            ],
            w0: self.w0,
            theta: self.theta,
            dim: self.a1.dim(),
        }
    }

    pub fn check_shape(&self) -> Result<()> {
        if self.a1.dim() != self.a2.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.a1.dim(),
                found: self.a2.dim(),
            });
        }
        Ok(())
    }
}

impl Network for TwoReluNet {
    fn input_dim(&self) -> usize {
        self.a1.dim()
    }

    #[inline]
    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.theta * relu(self.hidden_sum(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluNode {
    pub a: AffineFunction,
    pub w: Sign,
}

/// `k` first-layer ReLU nodes feeding one second-layer ReLU node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KReluNet {
    pub nodes: Vec<ReluNode>,
    pub w0: f64,
    pub theta: f64,
    /// Input dimension; needed because the node list may be empty.
    pub dim: usize,
}

impl KReluNet {
    pub fn constant(dim: usize, w0: f64, theta: f64) -> Self {
        KReluNet {
            nodes: Vec::new(),
            w0,
            theta,
            dim,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// `sum_j w_j [a_j(x)]_+` without the output stage.
    pub fn first_layer_sum(&self, x: &[f64]) -> f64 {
        self.sum_dd(Dd::default(), x).value()
    }

    fn sum_dd(&self, init: Dd, x: &[f64]) -> Dd {
        self.nodes
            .iter()
            .fold(init, |acc, n| acc.add(n.a.eval_dd(x).relu().scale_sign(n.w)))
    }

    pub fn check_shape(&self) -> Result<()> {
        for n in &self.nodes {
            if n.a.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: n.a.dim(),
                });
            }
        }
        Ok(())
    }
}

impl Network for KReluNet {
    fn input_dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.theta * relu(self.sum_dd(Dd::new(self.w0), x).value())
    }
}

pub fn eval_two_relu(net: &TwoReluNet, x: &[f64]) -> Result<f64> {
    net.check_shape()?;
    net.eval(x)
}

pub fn eval_k_relu(net: &KReluNet, x: &[f64]) -> Result<f64> {
    net.check_shape()?;
    net.eval(x)
}

fn check_dims<N: Network + ?Sized>(net: &N, data: &Dataset) -> Result<()> {
    if net.input_dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            found: data.dim(),
        });
    }
    Ok(())
}

/// `sum_i (F(x^i) - y_i)^2`.
pub fn squared_loss<N: Network + ?Sized>(net: &N, data: &Dataset) -> Result<f64> {
    check_dims(net, data)?;
    Ok(data
        .points()
        .iter()
        .map(|p| {
            let r = net.eval_unchecked(&p.x) - p.y;
            r * r
        })
        .sum())
}

/// `max_i |F(x^i) - y_i|`.
pub fn max_abs_error<N: Network + ?Sized>(net: &N, data: &Dataset) -> Result<f64> {
    check_dims(net, data)?;
    Ok(data
        .points()
        .iter()
        .map(|p| (net.eval_unchecked(&p.x) - p.y).abs())
        .fold(0.0, f64::max))
}

/// True iff every point is fit to within `tol`.
pub fn zero_loss_decision<N: Network + ?Sized>(net: &N, data: &Dataset, tol: f64) -> Result<bool> {
    Ok(max_abs_error(net, data)? <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;

    #[test]
    fn relu_clamps() {
        assert_eq!(relu(-1.0), 0.0);
        assert_eq!(relu(0.0), 0.0);
        assert_eq!(relu(2.5), 2.5);
    }

    #[test]
    fn zero_network_is_zero() {
        let net = TwoReluNet::zero(3);
        assert_eq!(eval_two_relu(&net, &[1.0, -2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn constant_k_relu() {
        let net = KReluNet::constant(2, 1.0, 2.0);
        assert_eq!(eval_k_relu(&net, &[5.0, -7.0]).unwrap(), 2.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let net = TwoReluNet::zero(2);
        assert!(matches!(
            eval_two_relu(&net, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn zero_network_loss_counts_ones() {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], &[1.0, 1.0, 1.0]).unwrap();
        let net = TwoReluNet::zero(1);
        assert_eq!(squared_loss(&net, &data).unwrap(), 3.0);
        assert!(!zero_loss_decision(&net, &data, 1e-9).unwrap());
    }

    #[test]
    fn exact_fit_has_zero_loss() {
        // F(x) = [x]_+ on x = -1, 0, 2
        let net = TwoReluNet {
            a1: AffineFunction::new(vec![1.0], 0.0),
            a2: AffineFunction::new(vec![0.0], -1.0),
            w0: 0.0,
            w1: Sign::Plus,
            w2: Sign::Plus,
            theta: 1.0,
        };
        let data = Dataset::from_rows(&[vec![-1.0], vec![0.0], vec![2.0]], &[0.0, 0.0, 2.0]).unwrap();
        assert_eq!(squared_loss(&net, &data).unwrap(), 0.0);
        assert!(zero_loss_decision(&net, &data, 1e-9).unwrap());
    }

    #[test]
    fn sign_serializes_as_integer() {
        assert_eq!(serde_json::to_string(&Sign::Minus).unwrap(), "-1");
        let s: Sign = serde_json::from_str("1").unwrap();
        assert_eq!(s, Sign::Plus);
        assert!(serde_json::from_str::<Sign>("0.5").is_err());
    }
}
