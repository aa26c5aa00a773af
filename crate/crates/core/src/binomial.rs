use rand::Rng;
use rand_distr::{Binomial, Distribution};

/// Above this many trials the inversion sampler hands over to BTPE.
const INVERSION_LIMIT: u32 = 1000;

/// Draws from Binomial(`n`, `p`) by CDF inversion with a single uniform.
///
/// Only `p ≤ 1/2` is inverted directly; larger `p` draws the failure count.
#[inline]
pub fn sample_binomial<R: Rng + ?Sized>(rng: &mut R, n: u32, p: f64) -> u32 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if n > INVERSION_LIMIT {
        return Binomial::new(n as u64, p).expect("valid binomial").sample(rng) as u32;
    }
    invert(rng.random(), n, p, |y| (n - y) as f64 / (y + 1) as f64)
}

#[inline(always)]
fn invert(u: f64, n: u32, p: f64, step: impl Fn(u32) -> f64) -> u32 {
    let flip = p > 0.5;
    let p = if flip { 1.0 - p } else { p };
    let q = 1.0 - p;
    let ratio = p / q;
    let mut mass = q.powi(n as i32);
    let mut cdf = mass;
    let mut y = 0u32;
    while u > cdf && y < n {
        mass *= ratio * step(y);
        cdf += mass;
        y += 1;
    }
    if flip {
        n - y
    } else {
        y
    }
}

/// Grid cells over the folded probability range [0, 1/2].
const GRID_CELLS: usize = 512;
/// Largest `n` that gets a lookup table.
const TABLE_LIMIT: u32 = 256;

/// Binomial sampler for a fixed number of trials and varying `p`.
///
/// Stores CDF rows at grid points of the folded probability. A draw is
/// monotone in `p` for a fixed uniform, so counting the thresholds below
/// the uniform at both ends of the cell brackets the result; when the
/// brackets agree that is the draw, otherwise it falls back to direct
/// inversion with the same uniform. Gives the same draws as
/// [`sample_binomial`] for the same generator state.
#[derive(Debug, Clone)]
pub struct FixedBinomial {
    n: u32,
    steps: Vec<f64>,
    /// `GRID_CELLS + 1` rows of `F(0), ..., F(n - 1)`.
    table: Vec<f64>,
}

impl FixedBinomial {
    pub fn new(n: u32) -> Self {
        let steps: Vec<f64> = (0..n).map(|y| (n - y) as f64 / (y + 1) as f64).collect();
        let mut table = Vec::new();
        if n >= 1 && n <= TABLE_LIMIT {
            table.reserve((GRID_CELLS + 1) * n as usize);
            for g in 0..=GRID_CELLS {
                let p = 0.5 * g as f64 / GRID_CELLS as f64;
                let q = 1.0 - p;
                let ratio = p / q;
                let mut mass = q.powi(n as i32);
                let mut cdf = mass;
                for step in &steps {
                    table.push(cdf);
                    mass *= ratio * step;
                    cdf += mass;
                }
            }
        }
        Self { n, steps, table }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, p: f64) -> u32 {
        let n = self.n;
        if n == 0 || p <= 0.0 {
            return 0;
        }
        if p >= 1.0 {
            return n;
        }
        if n > INVERSION_LIMIT {
            return sample_binomial(rng, n, p);
        }
        self.sample_with_uniform(rng.random(), p)
    }

    /// Inverts the uniform `u` in [0, 1).
    #[inline]
    pub fn sample_with_uniform(&self, u: f64, p: f64) -> u32 {
        let n = self.n;
        if n == 0 || p <= 0.0 {
            return 0;
        }
        if p >= 1.0 {
            return n;
        }
        if !self.table.is_empty() {
            let folded = if p > 0.5 { 1.0 - p } else { p };
            let cell = ((folded * (2 * GRID_CELLS) as f64) as usize).min(GRID_CELLS - 1);
            let width = n as usize;
            let rows = &self.table[cell * width..(cell + 2) * width];
            let (low, high) = rows.split_at(width);
            let lower = low.iter().map(|&f| (f < u) as usize).sum::<usize>();
            if lower == n as usize || high[lower] >= u {
                let y = lower as u32;
                return if p > 0.5 { n - y } else { y };
            }
        }
        invert(u, n, p, |y| self.steps[y as usize])
    }
}
