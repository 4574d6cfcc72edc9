#![allow(dead_code)]

use optomech::fock::{poisson_cutoff, FockDims};
use optomech::SystemParams;

/// Cutoffs that hold `|α + β₁|` over `[0, t_end]` and every displaced mirror
/// amplitude, with Poisson tails below 1e-10.
pub fn dims_for(p: &SystemParams, t_end: f64) -> FockDims {
    try_dims_for(p, t_end).unwrap()
}

pub fn try_dims_for(p: &SystemParams, t_end: f64) -> optomech::Result<FockDims> {
    let amp = if p.drive_amp == 0.0 {
        p.alpha0.norm()
    } else {
        let d = p.detuning().abs();
        let rwa = if d > 0.0 { (0.5 * t_end).min(1.0 / d) } else { 0.5 * t_end };
        p.alpha0.norm() + p.drive_amp * (rwa + 1.0 / (p.omega_c + p.omega_p))
    };
    let mu = amp * amp;
    let field = poisson_cutoff(mu, 1e-10).max(4);
    let k_max = 20usize.max((mu + 4.0 * mu.sqrt()).ceil() as usize);
    FockDims::recommended(p, field, k_max)
}

/// `Σ_k k^j e^{-μ} μ^k / k!` for j = 1..4, summed term by term up to `k_max`.
pub fn brute_poisson_moments(mu: f64, k_max: usize) -> [f64; 4] {
    let mut w = (-mu).exp();
    let mut m = [0.0; 4];
    for k in 0..=k_max {
        if k > 0 {
            w *= mu / k as f64;
        }
        let kf = k as f64;
        let mut pow = 1.0;
        for slot in m.iter_mut() {
            pow *= kf;
            *slot += pow * w;
        }
    }
    m
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}
