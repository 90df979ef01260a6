//! Phase-space points in original `(q, p)` and canonical `(Q, P)` coordinates,
//! plus the seeded sampler used by every verification run.
//!
//! The flat 8-component layout ([`Vec8`]) is always coordinates first:
//! `(q1..q4, p1..p4)` in original coordinates and `(Q1..Q4, P1..P4)` in
//! canonical coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Vec8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhasePoint {
    /// q1 is time-like, q2..q4 space-like.
    pub q: [f64; 4],
    pub p: [f64; 4],
}

impl PhasePoint {
    pub fn new(q: [f64; 4], p: [f64; 4]) -> Self {
        PhasePoint { q, p }
    }

    pub fn from_vec8(x: &Vec8) -> Self {
        PhasePoint {
            q: [x[0], x[1], x[2], x[3]],
            p: [x[4], x[5], x[6], x[7]],
        }
    }

    pub fn to_vec8(&self) -> Vec8 {
        [
            self.q[0], self.q[1], self.q[2], self.q[3], self.p[0], self.p[1], self.p[2], self.p[3],
        ]
    }

    pub fn check_p1(&self) -> Result<()> {
        if self.p[0] > 0.0 {
            Ok(())
        } else {
            Err(Error::NonpositiveP1(self.p[0]))
        }
    }
}

/// A point in the coordinates produced by the generating function.
/// `coords` are Q (Q1 carries the energy), `momenta` are P.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CanonicalPoint {
    pub coords: [f64; 4],
    pub momenta: [f64; 4],
}

impl CanonicalPoint {
    pub fn new(coords: [f64; 4], momenta: [f64; 4]) -> Self {
        CanonicalPoint { coords, momenta }
    }

    pub fn from_vec8(y: &Vec8) -> Self {
        CanonicalPoint {
            coords: [y[0], y[1], y[2], y[3]],
            momenta: [y[4], y[5], y[6], y[7]],
        }
    }

    pub fn to_vec8(&self) -> Vec8 {
        let (c, m) = (self.coords, self.momenta);
        [c[0], c[1], c[2], c[3], m[0], m[1], m[2], m[3]]
    }
}

/// Range of the sampled p1 component; bounded away from zero because most
/// maps divide by p1.
pub const P1_RANGE: (f64, f64) = (0.5, 2.0);

/// Point `index` of the stream for `seed`. Depends only on `(seed, index)`.
pub fn sample_point(seed: u64, index: u64) -> PhasePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let q = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
    let p1 = rng.random_range(P1_RANGE.0..=P1_RANGE.1);
    let rest: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
    PhasePoint::new(q, [p1, rest[0], rest[1], rest[2]])
}

/// `n` seeded points. Generation is parallel; the result is identical for
/// any thread count.
pub fn sample_points(seed: u64, n: usize) -> Vec<PhasePoint> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| sample_point(seed, i))
        .collect()
}

/// A uniformly random vector in `[-1, 1]^8` from an independent stream
/// family (used for pairing/compatibility probes).
pub fn sample_direction(seed: u64, index: u64) -> Vec8 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995_d1b5_4a32);
    rng.set_stream(index);
    std::array::from_fn(|_| rng.random_range(-1.0..=1.0))
}
