//! Reference computations that the test suites check the engine against.
//!
//! Nothing in here shares code with `abcdose-core`: the quadrature, the
//! brute-force weighted median and the Kolmogorov–Smirnov statistics are
//! written from their textbook definitions so they can act as oracles.

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64 {
    gk_adaptive(f, a, b, abs_tol, 0)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = half * GK_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn gk_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = gk15(f, a, b);
    if err <= tol || depth >= 60 || (b - a).abs() < 1e-15 {
        return value;
    }
    let mid = 0.5 * (a + b);
    gk_adaptive(f, a, mid, 0.5 * tol, depth + 1) + gk_adaptive(f, mid, b, 0.5 * tol, depth + 1)
}

/// `∫_0^x t^(a-1) (1-t)^(b-1) dt · e^(-log_scale)` for `x ≤ 1/2`.
///
/// For `a < 1` the substitution `s = t^a` removes the singularity at zero;
/// otherwise the integrand is bounded and integrated as is. The scale keeps
/// the integrand near 1 at its peak so that an absolute tolerance means the
/// same thing for every shape.
fn lower_tail_integral(x: f64, a: f64, b: f64, log_scale: f64) -> f64 {
    const TOL: f64 = 1e-15;
    if a < 1.0 {
        let upper = x.powf(a);
        let g = |s: f64| {
            let t = s.powf(1.0 / a);
            ((b - 1.0) * (-t).ln_1p() - log_scale).exp() / a
        };
        integrate(&g, 0.0, upper, TOL)
    } else {
        let g = |t: f64| {
            if t <= 0.0 {
                return if a == 1.0 { (-log_scale).exp() } else { 0.0 };
            }
            ((a - 1.0) * t.ln() + (b - 1.0) * (-t).ln_1p() - log_scale).exp()
        };
        integrate(&g, 0.0, x, TOL)
    }
}

/// Regularized incomplete beta `I_x(a, b)` evaluated purely by quadrature of the
/// beta density. The normalizing constant is itself integrated numerically.
pub fn incomplete_beta_by_quadrature(x: f64, a: f64, b: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x) && a > 0.0 && b > 0.0);
    // Log of the unnormalized density at its mode when it has one inside (0, 1).
    let log_scale = if a > 1.0 && b > 1.0 {
        let m = (a - 1.0) / (a + b - 2.0);
        (a - 1.0) * m.ln() + (b - 1.0) * (1.0 - m).ln()
    } else {
        0.0
    };
    let left_half = lower_tail_integral(0.5, a, b, log_scale);
    let right_half = lower_tail_integral(0.5, b, a, log_scale);
    let total = left_half + right_half;
    if x <= 0.5 {
        lower_tail_integral(x, a, b, log_scale) / total
    } else {
        1.0 - lower_tail_integral(1.0 - x, b, a, log_scale) / total
    }
}

/// Weighted median by direct evaluation of the two prefix/suffix
/// inequalities at every candidate position, smallest valid position wins.
pub fn brute_force_weighted_median(values: &[f64], weights: &[f64]) -> Option<f64> {
    assert_eq!(values.len(), weights.len());
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if pairs.is_empty() || total <= 0.0 {
        return None;
    }
    for l in 0..pairs.len() {
        let below: f64 = pairs[..l].iter().map(|p| p.1).sum();
        let above: f64 = pairs[l + 1..].iter().map(|p| p.1).sum();
        if below / total <= 0.5 && above / total <= 0.5 {
            return Some(pairs[l].0);
        }
    }
    None
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let hi = (i as f64 + 1.0) / n - f;
            let lo = f - i as f64 / n;
            hi.max(lo)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic 1% critical value coefficient of the Kolmogorov distribution.
pub const KS_C_ALPHA_1PCT: f64 = 1.627_6;

pub fn ks_one_sample_critical_1pct(n: usize) -> f64 {
    KS_C_ALPHA_1PCT / (n as f64).sqrt()
}

pub fn ks_two_sample_critical_1pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    KS_C_ALPHA_1PCT * ((n + m) / (n * m)).sqrt()
}

/// CDF of Beta(2, 2): `3x² − 2x³`.
pub fn beta22_cdf(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}
