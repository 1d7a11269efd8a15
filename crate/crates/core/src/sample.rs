//! Deterministic sampling: Halton sequences for box multistarts, golden-angle
//! circles in 2-D, seeded Gaussian directions in general dimension.
//!
//! Every sampler is a pure function of (seed, index), so parallel consumers
//! get identical streams regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// splitmix64; used to derive independent sub-seeds from one manifest seed.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, tag))
}

/// Radical-inverse (van der Corput) value of `index` in the given base.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

/// i-th Halton point in the given box, offset by the seed so different runs
/// explore different slices of the sequence.
pub fn halton_in_box(seed: u64, i: usize, boxed: &[(f64, f64)]) -> Vec<f64> {
    assert!(boxed.len() <= PRIMES.len(), "Halton starts support up to 8 dims");
    let offset = 13 + (mix_seed(seed, 0x48414c54) % 1024);
    boxed
        .iter()
        .enumerate()
        .map(|(d, &(lo, hi))| {
            let u = radical_inverse(offset + i as u64, PRIMES[d]);
            lo + (hi - lo) * u
        })
        .collect()
}

/// Deterministic unit directions. For n = 1 alternates +/-; for n = 2 walks
/// the circle by the golden angle; otherwise normalized seeded Gaussians.
pub fn unit_direction(seed: u64, n: usize, i: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![if i % 2 == 0 { 1.0 } else { -1.0 }],
        2 => {
            let phi_inv = 0.618_033_988_749_894_9_f64;
            let offset = (mix_seed(seed, 0x434952) % 10_000) as f64 / 10_000.0;
            let theta = std::f64::consts::TAU * ((i as f64 * phi_inv + offset).fract());
            vec![theta.cos(), theta.sin()]
        }
        _ => {
            let mut rng = rng_for(seed, 0x4449_5200 + i as u64);
            loop {
                let v: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    return v.into_iter().map(|a| a / norm).collect();
                }
            }
        }
    }
}

/// Directions covering the sphere, with the 2n signed axis directions first
/// so extreme coordinates are always probed.
pub fn directions_with_axes(seed: u64, n: usize, count: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::with_capacity(count.max(2 * n));
    for d in 0..n {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; n];
            v[d] = s;
            dirs.push(v);
        }
    }
    let mut i = 0;
    while dirs.len() < count {
        dirs.push(unit_direction(seed, n, i));
        i += 1;
    }
    dirs
}

/// i-th point of a deterministic uniform sample of the ball of the given
/// radius around `center`.
pub fn ball_point(seed: u64, center: &[f64], radius: f64, i: usize) -> Vec<f64> {
    let n = center.len();
    let dir = unit_direction(seed, n, i);
    let u = radical_inverse(29 + (mix_seed(seed, 0x42414c4c) % 512) + i as u64, 2);
    let r = radius * u.powf(1.0 / n.max(1) as f64);
    center
        .iter()
        .zip(dir)
        .map(|(c, d)| c + r * d)
        .collect()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller on two uniforms; avoids pulling in rand_distr.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
