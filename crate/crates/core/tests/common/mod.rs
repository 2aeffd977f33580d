#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
}

pub fn uniforms(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let u = Uniform::new(0.0, 1.0).unwrap();
    (0..n).map(|_| u.sample(&mut r)).collect()
}

/// Bivariate standard normal pair with correlation `rho`, returned as (y, x).
pub fn gaussian_pair(n: usize, rho: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = StandardNormal.sample(&mut r);
        let b: f64 = StandardNormal.sample(&mut r);
        x.push(a);
        y.push(rho * a + (1.0 - rho * rho).sqrt() * b);
    }
    (y, x)
}

pub fn gaussian_mi(rho: f64) -> f64 {
    -0.5 * (1.0 - rho * rho).ln()
}

pub fn normal_pdf(x: f64, mean: f64) -> f64 {
    (-(x - mean) * (x - mean) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `sum_c pi_c int f_c ln(f_c / f_mix)` for two unit-variance normal classes,
/// by midpoint quadrature on a wide interval.
pub fn two_normal_class_mi(mean0: f64, mean1: f64, pi0: f64) -> f64 {
    let (lo, hi) = (mean0.min(mean1) - 12.0, mean0.max(mean1) + 12.0);
    let steps = 400_000;
    let dx = (hi - lo) / steps as f64;
    let mut acc = 0.0;
    for i in 0..steps {
        let x = lo + (i as f64 + 0.5) * dx;
        let f0 = normal_pdf(x, mean0);
        let f1 = normal_pdf(x, mean1);
        let mix = pi0 * f0 + (1.0 - pi0) * f1;
        for (w, f) in [(pi0, f0), (1.0 - pi0, f1)] {
            if f > 0.0 {
                acc += w * f * (f / mix).ln() * dx;
            }
        }
    }
    acc
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}
