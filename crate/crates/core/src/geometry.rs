//! Dichotomies realizable by affine hyperplanes, and strict linear separation.
//!
//! A sign vector is realizable when some affine function is strictly positive on the
//! `+` points and strictly negative on the `-` points. Points lying exactly on an
//! optimal hyperplane are covered because a small shift of the offset moves them to
//! either side.
//!
//! Enumeration extends realizable prefixes one point at a time. A prefix witness is
//! reused when the new point already falls strictly on the wanted side, shifted when
//! its margin allows, and otherwise a max-margin LP decides the extension. This stays
//! complete on degenerate inputs such as many collinear points.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{dot, AffineFunction, Sign};
use crate::qp::solve_lp;

/// Margin below which a sign vector counts as not strictly realizable.
pub const TOL_GEOM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dichotomy {
    /// `+` means `witness(x) >= 0`.
    pub signs: Vec<Sign>,
    pub witness: AffineFunction,
}

impl Dichotomy {
    pub fn count_plus(&self) -> usize {
        self.signs.iter().filter(|s| **s == Sign::Plus).count()
    }

    /// True iff the witness puts every point on its claimed side within `tol`.
    pub fn is_consistent(&self, points: &[Vec<f64>], tol: f64) -> bool {
        self.signs.iter().zip(points).all(|(s, x)| {
            let v = self.witness.eval_unchecked(x);
            match s {
                Sign::Plus => v >= -tol,
                Sign::Minus => v <= tol,
            }
        })
    }
}

/// Affine map `x -> (x - center) / scale` placing points in `[-1, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Scaling {
    center: Vec<f64>,
    scale: f64,
}

impl Scaling {
    pub(crate) fn fit(points: &[Vec<f64>], d: usize) -> Scaling {
        let mut center = vec![0.0; d];
        let mut half: f64 = 0.0;
        for k in 0..d {
            let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() {
                center[k] = 0.5 * (lo + hi);
                half = half.max(0.5 * (hi - lo));
            }
        }
        Scaling {
            center,
            scale: if half > 0.0 { half } else { 1.0 },
        }
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.center)
            .map(|(v, c)| (v - c) / self.scale)
            .collect()
    }

    /// Turns a witness `(alpha, beta)` over scaled points into one over raw points.
    pub(crate) fn unscale(&self, w: &[f64]) -> AffineFunction {
        let d = self.center.len();
        let alpha: Vec<f64> = w[..d].iter().map(|a| a / self.scale).collect();
        let beta = w[d] - dot(&alpha, &self.center);
        AffineFunction::new(alpha, beta)
    }
}

/// Max-margin LP over scaled points: `max t` s.t. `s_i (alpha . x_i + beta) >= t`,
/// `|alpha|_inf <= 1`, `|beta| <= d + 1`, `t <= 1`. Returns `(alpha ++ [beta], t)`.
pub(crate) fn max_margin_scaled(points: &[&[f64]], signs: &[Sign]) -> (Vec<f64>, f64) {
    let d = points.first().map_or(0, |p| p.len());
    let nv = d + 2;
    let mut rows = Vec::with_capacity(points.len() + 2 * d + 3);
    let mut rhs = Vec::with_capacity(rows.capacity());
    for (x, s) in points.iter().zip(signs) {
        let sv = s.value();
        let mut row: Vec<f64> = x.iter().map(|v| -sv * v).collect();
        row.push(-sv);
        row.push(1.0);
        rows.push(row);
        rhs.push(0.0);
    }
    let bound_beta = d as f64 + 1.0;
    for k in 0..=d {
        let lim = if k < d { 1.0 } else { bound_beta };
        for sgn in [1.0, -1.0] {
            let mut row = vec![0.0; nv];
            row[k] = sgn;
            rows.push(row);
            rhs.push(lim);
        }
    }
    let mut row = vec![0.0; nv];
    row[d + 1] = 1.0;
    rows.push(row);
    rhs.push(1.0);
    let mut c = vec![0.0; nv];
    c[d + 1] = -1.0;
    let Some(sol) = solve_lp(&c, &rows, &rhs) else {
        return (vec![0.0; d + 1], 0.0);
    };
    let w = sol[..=d].to_vec();
    let margin = points
        .iter()
        .zip(signs)
        .map(|(x, s)| s.value() * (dot(&w[..d], x) + w[d]))
        .fold(f64::INFINITY, f64::min);
    (w, margin)
}

fn eval_w(w: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    dot(&w[..d], x) + w[d]
}

/// Tries to realize `signs` (one longer than the prefix realized by `w` with margin
/// `margin`) over `points`. Points and witnesses are in scaled coordinates.
pub(crate) fn extend_witness(
    points: &[&[f64]],
    signs: &[Sign],
    w: &[f64],
    margin: f64,
) -> Option<(Vec<f64>, f64)> {
    let k = points.len() - 1;
    let x = points[k];
    let s = signs[k].value();
    if k == 0 {
        let mut w = vec![0.0; x.len() + 1];
        w[x.len()] = s;
        return Some((w, 1.0));
    }
    let v = s * eval_w(w, x);
    if v > TOL_GEOM {
        return Some((w.to_vec(), margin.min(v)));
    }
    let shifted = 0.5 * (margin + v);
    if shifted > TOL_GEOM {
        let mut nw = w.to_vec();
        nw[x.len()] += s * (margin - v) * 0.5;
        let m = points
            .iter()
            .zip(signs)
            .map(|(p, sg)| sg.value() * eval_w(&nw, p))
            .fold(f64::INFINITY, f64::min);
        if m > TOL_GEOM {
            return Some((nw, m));
        }
    }
    let (nw, m) = max_margin_scaled(points, signs);
    (m > TOL_GEOM).then_some((nw, m))
}

fn check_points(points: &[Vec<f64>], d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    for (i, p) in points.iter().enumerate() {
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
    Ok(())
}

/// Every sign vector over `points` realizable by an affine hyperplane, with witnesses.
///
/// Exact duplicates are collapsed first, so they always share a sign. Output order is
/// deterministic: prefixes are extended with `+` before `-`.
pub fn enumerate_dichotomies(points: &[Vec<f64>], d: usize) -> Result<Vec<Dichotomy>> {
    check_points(points, d)?;
    if points.is_empty() {
        return Ok(vec![Dichotomy {
            signs: vec![],
            witness: AffineFunction::constant(d, 1.0),
        }]);
    }
    let mut uniq: Vec<Vec<f64>> = Vec::new();
    let mut map = Vec::with_capacity(points.len());
    for p in points {
        match uniq.iter().position(|u| u == p) {
            Some(k) => map.push(k),
            None => {
                map.push(uniq.len());
                uniq.push(p.clone());
            }
        }
    }
    let scaling = Scaling::fit(&uniq, d);
    let scaled: Vec<Vec<f64>> = uniq.iter().map(|p| scaling.apply(p)).collect();
    let refs: Vec<&[f64]> = scaled.iter().map(|p| p.as_slice()).collect();

    let mut level: Vec<(Vec<Sign>, Vec<f64>, f64)> = vec![(vec![], vec![0.0; d + 1], f64::INFINITY)];
    for k in 0..scaled.len() {
        let mut next = Vec::with_capacity(level.len() * 2);
        for (signs, w, margin) in &level {
            for s in Sign::BOTH {
                let mut ns = signs.clone();
                ns.push(s);
                if let Some((nw, m)) = extend_witness(&refs[..=k], &ns, w, *margin) {
                    next.push((ns, nw, m));
                }
            }
        }
        level = next;
    }
    Ok(level
        .into_iter()
        .map(|(signs, w, _)| Dichotomy {
            signs: map.iter().map(|&k| signs[k]).collect(),
            witness: scaling.unscale(&w),
        })
        .collect())
}

/// Cover's count `2 * sum_{k=0}^{d} C(n-1, k)` of affine dichotomies of `n` points in
/// general position in `R^d`.
pub fn cover_count(n: usize, d: usize) -> u128 {
    if n == 0 {
        return 1;
    }
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for k in 0..=d.min(n - 1) {
        if k > 0 {
            c = c * (n - k) as u128 / k as u128;
        }
        total += c;
    }
    2 * total
}

/// Max-margin strict separation: `alpha . a + beta >= t` on `a`, `<= -t` on `b`, with
/// `|alpha|_inf <= 1`. Returns the witness and the margin `t` (which may be `<= 0`).
pub fn max_margin(a: &[Vec<f64>], b: &[Vec<f64>], d: usize) -> Result<(AffineFunction, f64)> {
    check_points(a, d)?;
    check_points(b, d)?;
    let big = a
        .iter()
        .chain(b)
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    // Work in coordinates scaled by `big` so the LP box is well posed, then map back.
    let s = if big > 0.0 { big } else { 1.0 };
    let pts: Vec<Vec<f64>> = a.iter().chain(b).map(|p| p.iter().map(|v| v / s).collect()).collect();
    let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
    let signs: Vec<Sign> = a
        .iter()
        .map(|_| Sign::Plus)
        .chain(b.iter().map(|_| Sign::Minus))
        .collect();
    let (w, t) = max_margin_scaled(&refs, &signs);
    let alpha: Vec<f64> = w[..d].to_vec();
    let f = AffineFunction::new(alpha.iter().map(|v| v / s).collect(), w[d]);
    // Rescale so that |alpha|_inf = 1 in raw coordinates, reporting the raw margin.
    let amax = f.max_abs_gradient();
    if amax > 0.0 {
        let g = f.scaled(1.0 / amax);
        let margin = a
            .iter()
            .map(|x| g.eval_unchecked(x))
            .chain(b.iter().map(|x| -g.eval_unchecked(x)))
            .fold(f64::INFINITY, f64::min);
        Ok((g, margin))
    } else {
        Ok((f, t))
    }
}

/// A strictly separating function for `a` (positive) and `b` (negative), if the best
/// margin exceeds `TOL_GEOM`.
pub fn strict_separation_lp(a: &[Vec<f64>], b: &[Vec<f64>], d: usize) -> Result<Option<AffineFunction>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("both point sets must be nonempty".into()));
    }
    let (f, t) = max_margin(a, b, d)?;
    Ok((t > TOL_GEOM && !f.is_degenerate()).then_some(f))
}
