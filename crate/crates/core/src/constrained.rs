//! Sampling three Uniform(0, 1) variables under the ordering constraint
//! `0 < x1 < x2 < x3 < 1`, four ways.
//!
//! The first three methods draw from the same law (the middle coordinate
//! is Beta(2, 2)); `Sequential` draws the middle coordinate uniformly and
//! therefore does not.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstrainedMethod {
    /// `x2 ~ Beta(2, 2)`, then `x1 | x2 ~ U(0, x2)` and `x3 | x2 ~ U(x2, 1)`.
    Conditional,
    /// Sort three iid uniforms.
    SortIid,
    /// Draw three iid uniforms until they come out ordered.
    Reject,
    /// `x2 ~ U(0, 1)`, then the same conditionals as `Conditional`.
    Sequential,
}

impl ConstrainedMethod {
    pub const ALL: [ConstrainedMethod; 4] = [
        ConstrainedMethod::Conditional,
        ConstrainedMethod::SortIid,
        ConstrainedMethod::Reject,
        ConstrainedMethod::Sequential,
    ];
}

fn strictly_ordered(t: &[f64; 3]) -> bool {
    0.0 < t[0] && t[0] < t[1] && t[1] < t[2] && t[2] < 1.0
}

fn uniform_between<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn sample_constrained_uniform<R: Rng + ?Sized>(
    n: usize,
    method: ConstrainedMethod,
    rng: &mut R,
) -> Vec<[f64; 3]> {
    let beta22 = Beta::new(2.0, 2.0).expect("valid shape");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let triple = match method {
            ConstrainedMethod::Conditional => {
                let x2 = beta22.sample(rng);
                [uniform_between(rng, 0.0, x2), x2, uniform_between(rng, x2, 1.0)]
            }
            ConstrainedMethod::SortIid => {
                let mut t = [rng.random::<f64>(), rng.random(), rng.random()];
                t.sort_unstable_by(f64::total_cmp);
                t
            }
            ConstrainedMethod::Reject => [rng.random::<f64>(), rng.random(), rng.random()],
            ConstrainedMethod::Sequential => {
                let x2 = rng.random::<f64>();
                [uniform_between(rng, 0.0, x2), x2, uniform_between(rng, x2, 1.0)]
            }
        };
        // boundary hits and ties have probability zero; redraw them
        if strictly_ordered(&triple) {
            out.push(triple);
        }
    }
    out
}
