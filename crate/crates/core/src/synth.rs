//! Random instance generators for tests and the command-line harness.
//!
//! Every generator draws from the caller's RNG, so one seeded generator fixes a whole run.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::network::{AffineFunction, Network, Sign, TwoReluNet};
use crate::reduce::{separable_exhaustive, SeparabilityInstance, TwoPlaneWitness};

fn check_size(n: usize, d: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one point".into()));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    Ok(())
}

fn uniform_point<R: Rng + ?Sized>(rng: &mut R, d: usize, r: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-r..r)).collect()
}

fn gaussian_plane<R: Rng + ?Sized>(rng: &mut R, d: usize) -> AffineFunction {
    let beta = rng.random_range(0.25..1.0);
    loop {
        let alpha: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-3 {
            return AffineFunction::new(alpha.iter().map(|a| a / n).collect(), beta);
        }
    }
}

/// Separable instance with a planted witness. Points are uniform in `[-2, 2]^d` and stay
/// at least `margin` away from both planes; at least one point lands in `S1`.
pub fn planted_separable<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: usize,
    margin: f64,
) -> Result<(SeparabilityInstance, TwoPlaneWitness)> {
    check_size(n, d)?;
    let w = TwoPlaneWitness::new(
        gaussian_plane(rng, d),
        gaussian_plane(rng, d),
    );
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    while points.len() < n {
        let x = uniform_point(rng, d, 2.0);
        let (v1, v2) = (w.h1.eval_unchecked(&x), w.h2.eval_unchecked(&x));
        if v1.abs() < margin || v2.abs() < margin {
            continue;
        }
        let positive = v1 > 0.0 && v2 > 0.0;
        if points.is_empty() && !positive {
            continue;
        }
        points.push(x);
        labels.push(positive);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let points: Vec<Vec<f64>> = idx.iter().map(|&i| points[i].clone()).collect();
    let (s1, s0) = (0..n).partition(|&k| labels[idx[k]]);
    Ok((SeparabilityInstance::new(points, s1, s0)?, w))
}

/// Instance with uniform points in `[-1, 1]^d` and random sides, both nonempty, that
/// exhaustive search proves not separable. `None` after `tries` draws.
pub fn unseparable<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: usize,
    tries: usize,
) -> Result<Option<SeparabilityInstance>> {
    check_size(n, d)?;
    if n < 3 {
        return Ok(None);
    }
    for _ in 0..tries {
        let points: Vec<Vec<f64>> = (0..n).map(|_| uniform_point(rng, d, 1.0)).collect();
        let ones: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let (s1, s0): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| ones[i]);
        if s1.is_empty() || s0.is_empty() {
            continue;
        }
        let inst = SeparabilityInstance::new(points, s1, s0)?;
        if separable_exhaustive(&inst)?.is_none() {
            return Ok(Some(inst));
        }
    }
    Ok(None)
}

/// Uniform points in `[-1, 1]^d` with independent fair 0/1 labels.
pub fn random_labels<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> Result<Dataset> {
    check_size(n, d)?;
    let xs: Vec<Vec<f64>> = (0..n).map(|_| uniform_point(rng, d, 1.0)).collect();
    let ys: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect();
    Dataset::from_rows(&xs, &ys)
}

/// A random two-node network with Gaussian first-layer weights and the points in
/// `[-1, 1]^d` it labels.
pub fn planted_net<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> Result<(Dataset, TwoReluNet)> {
    check_size(n, d)?;
    let node = |rng: &mut R| {
        AffineFunction::new((0..d).map(|_| rng.sample(StandardNormal)).collect(), rng.sample(StandardNormal))
    };
    let a1 = node(rng);
    let a2 = node(rng);
    let sign = |rng: &mut R| if rng.random_bool(0.5) { Sign::Plus } else { Sign::Minus };
    let net = TwoReluNet {
        a1,
        a2,
        w0: rng.sample(StandardNormal),
        w1: sign(rng),
        w2: sign(rng),
        theta: if rng.random_bool(0.5) { 1.0 } else { -1.0 } * rng.random_range(0.5..2.0),
    };
    let xs: Vec<Vec<f64>> = (0..n).map(|_| uniform_point(rng, d, 1.0)).collect();
    let ys: Vec<f64> = xs.iter().map(|x| net.eval_unchecked(x)).collect();
    Ok((Dataset::from_rows(&xs, &ys)?, net))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduce::check_separability;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn planted_witness_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (inst, w) = planted_separable(&mut rng, 10, 2, 0.05).unwrap();
            assert!(!inst.s1.is_empty());
            assert!(check_separability(&inst, &w));
        }
    }

    #[test]
    fn unseparable_instances_are_certified() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = unseparable(&mut rng, 6, 2, 10_000).unwrap().expect("found one");
        assert!(separable_exhaustive(&inst).unwrap().is_none());
    }

    #[test]
    fn sizes_are_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(planted_net(&mut rng, 0, 2).is_err());
        assert!(random_labels(&mut rng, 3, 0).is_err());
        let (data, net) = planted_net(&mut rng, 5, 2).unwrap();
        assert_eq!(crate::network::squared_loss(&net, &data).unwrap(), 0.0);
    }
}
