#![allow(dead_code)]

use erpwave::DetectorConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exhaustive pair search written independently of the library: every
/// (negative extremum, later positive extremum) inside the period window,
/// scored as (|neg| + |pos|) * exp(-(p - c)^2 / 2s^2).
/// Returns (neg, pos, score) sorted best first.
pub fn brute_force_pairs(row: &[f64], fs: f64, cfg: &DetectorConfig) -> Vec<(usize, usize, f64)> {
    let kept: Vec<f64> = row
        .iter()
        .map(|&c| if c.abs() >= cfg.c_tau { c } else { 0.0 })
        .collect();
    let at = |i: isize| -> f64 {
        if i < 0 || i as usize >= kept.len() {
            0.0
        } else {
            kept[i as usize]
        }
    };
    let mut negs = vec![];
    let mut poss = vec![];
    for i in 0..kept.len() {
        let (l, c, r) = (at(i as isize - 1), kept[i], at(i as isize + 1));
        if c < 0.0 && c < l && c <= r {
            negs.push(i);
        }
        if c > 0.0 && c > l && c >= r {
            poss.push(i);
        }
    }
    let mut out = vec![];
    for &n in &negs {
        for &p in &poss {
            if p <= n {
                continue;
            }
            let period = (p - n) as f64 * 1000.0 / fs;
            if period < cfg.period_window_ms[0] || period > cfg.period_window_ms[1] {
                continue;
            }
            let z = (period - cfg.gaussian_center_ms) / cfg.gaussian_sigma_ms;
            out.push((n, p, (kept[n].abs() + kept[p].abs()) * (-z * z / 2.0).exp()));
        }
    }
    out.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    out
}

/// Smooth random coefficient row: a few random bumps of both signs plus jitter.
pub fn random_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut row = vec![0.0; len];
    for _ in 0..rng.random_range(2..12) {
        let centre = rng.random_range(0.0..len as f64);
        let width = rng.random_range(3.0..25.0);
        let amp = rng.random_range(-10.0..10.0);
        for (i, v) in row.iter_mut().enumerate() {
            let z = (i as f64 - centre) / width;
            *v += amp * (-0.5 * z * z).exp();
        }
    }
    for v in row.iter_mut() {
        *v += rng.random_range(-0.3..0.3);
    }
    row
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
