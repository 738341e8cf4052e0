//! Seeded random sampling helpers. Every randomized sweep derives one
//! generator per item from `(seed, index)` so results do not depend on how the
//! work is scheduled.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::point::PointCn;

pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform direction on the unit sphere of ℝ^{2n} = ℂⁿ.
pub fn unit_direction<R: Rng>(rng: &mut R, dim: usize) -> PointCn {
    loop {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let p = PointCn(v);
        let n = p.norm();
        if n > 1e-12 {
            return &p * (1.0 / n);
        }
    }
}

/// Uniform point in the Euclidean ball of the given radius.
pub fn in_ball<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> PointCn {
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / (2 * dim) as f64);
    &unit_direction(rng, dim) * r
}

/// Point with norm uniform in `[r_min, r_max]` and uniform direction.
pub fn in_shell<R: Rng>(rng: &mut R, dim: usize, r_min: f64, r_max: f64) -> PointCn {
    let r = r_min + (r_max - r_min) * rng.random::<f64>();
    &unit_direction(rng, dim) * r
}

/// Uniform point in the polydisc `{|z_j| ≤ radius}`.
pub fn in_polydisc<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> PointCn {
    PointCn(
        (0..dim)
            .map(|_| {
                let u: f64 = rng.random();
                let th: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                Complex64::from_polar(radius * u.sqrt(), th)
            })
            .collect(),
    )
}
