//! True dose–toxicity scenarios: the fixed benchmark curves and a random
//! generator working on the probit scale.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, SimRng};
use crate::special::{normal_cdf, normal_quantile};

/// A scenario has no acceptable dose when even the lowest dose exceeds the
/// target by more than this.
pub const OVERLY_TOXIC_MARGIN: f64 = 0.05;

const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub target: f64,
    pub true_probs: Vec<f64>,
    /// 1-based true MTD, 0 when no dose is acceptable.
    pub mtd_index: usize,
}

/// `argmin_k |p_k − φ|` (lower dose on ties), or 0 when the lowest dose is
/// already more than [`OVERLY_TOXIC_MARGIN`] above the target.
pub fn classify_mtd(probs: &[f64], target: f64) -> usize {
    if probs.is_empty() || probs[0] > target + OVERLY_TOXIC_MARGIN {
        return 0;
    }
    crate::estimate::optimal_dose(probs, target, |_| true)
}

impl Scenario {
    pub fn new(label: impl Into<String>, target: f64, true_probs: Vec<f64>) -> Result<Self> {
        let mtd = classify_mtd(&true_probs, target);
        Self::with_mtd(label, target, true_probs, mtd)
    }

    pub fn with_mtd(label: impl Into<String>, target: f64, true_probs: Vec<f64>, mtd_index: usize) -> Result<Self> {
        let label = label.into();
        if true_probs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::Domain(format!("scenario {label}: target {target} outside (0, 1)")));
        }
        if true_probs.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::Domain(format!("scenario {label}: probabilities must lie in (0, 1)")));
        }
        if true_probs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(format!("scenario {label}: probabilities must be strictly increasing")));
        }
        if mtd_index > true_probs.len() {
            return Err(Error::Domain(format!("scenario {label}: MTD index {mtd_index} out of range")));
        }
        Ok(Self { label, target, true_probs, mtd_index })
    }

    pub fn num_doses(&self) -> usize {
        self.true_probs.len()
    }
}

/// The five six-dose benchmark scenarios (target 0.20) followed by the
/// three-dose real-trial scenario (target 0.25). The leading zeros of the
/// fifth scenario are stored as 0.001 and 0.002.
pub fn fixed_scenarios() -> Vec<Scenario> {
    let table: [(&str, f64, &[f64], usize); 6] = [
        ("fixed:1", 0.20, &[0.05, 0.10, 0.20, 0.30, 0.50, 0.70], 3),
        ("fixed:2", 0.20, &[0.30, 0.40, 0.52, 0.61, 0.76, 0.87], 0),
        ("fixed:3", 0.20, &[0.05, 0.06, 0.08, 0.11, 0.19, 0.34], 5),
        ("fixed:4", 0.20, &[0.06, 0.08, 0.12, 0.18, 0.40, 0.71], 4),
        ("fixed:5", 0.20, &[0.001, 0.002, 0.03, 0.05, 0.11, 0.22], 6),
        ("real", 0.25, &[0.125, 0.400, 0.667], 1),
    ];
    table
        .iter()
        .map(|&(label, target, probs, mtd)| {
            Scenario::with_mtd(label, target, probs.to_vec(), mtd).expect("built-in scenario is valid")
        })
        .collect()
}

/// Looks up `fixed:<n>` (n = 1..5) or `real`.
pub fn builtin_scenario(name: &str) -> Option<Scenario> {
    fixed_scenarios().into_iter().find(|s| s.label == name)
}

pub const DEFAULT_SIGMA0: f64 = 0.05;
pub const DEFAULT_SIGMA_NEIGHBOR: f64 = 0.35;

/// Parameters of the random scenario generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGenSpec {
    pub num_doses: usize,
    pub target: f64,
    /// Spread of the MTD's probit around the target's probit.
    pub sigma0: f64,
    /// Spread of the downward increments.
    pub sigma1: f64,
    /// Spread of the upward increments.
    pub sigma2: f64,
    /// Shared mean of both increment distributions.
    pub mu: f64,
    /// Desired mean probability gap around the MTD, used by [`calibrate_mu`].
    pub target_gap: Option<f64>,
}

impl ScenarioGenSpec {
    pub fn new(num_doses: usize, target: f64, mu: f64) -> Self {
        Self {
            num_doses,
            target,
            sigma0: DEFAULT_SIGMA0,
            sigma1: DEFAULT_SIGMA_NEIGHBOR,
            sigma2: DEFAULT_SIGMA_NEIGHBOR,
            mu,
            target_gap: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_doses == 0 {
            return Err(Error::InvalidConfig("scenario generator needs at least one dose".into()));
        }
        if !(self.target > 0.0 && self.target <= 0.5) {
            return Err(Error::InvalidConfig(format!("target must lie in (0, 0.5] (got {})", self.target)));
        }
        for (name, s) in [("sigma0", self.sigma0), ("sigma1", self.sigma1), ("sigma2", self.sigma2)] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive (got {s})")));
            }
        }
        if let Some(gap) = self.target_gap {
            if !(gap > 0.0 && gap < 1.0) {
                return Err(Error::InvalidConfig(format!("target gap must lie in (0, 1) (got {gap})")));
            }
        }
        Ok(())
    }
}

/// One random scenario.
///
/// The MTD is picked uniformly; its probit is drawn around the target's
/// probit. Lower doses step down on the probit scale by a squared normal
/// increment, first reflecting across the target when the current dose is
/// above it; upper doses mirror that going up. Every call consumes the
/// same number of random draws whatever `mu` is, so two specs differing
/// only in `mu` see common random numbers.
pub fn generate_random_scenario<R: Rng + ?Sized>(spec: &ScenarioGenSpec, rng: &mut R) -> Scenario {
    let k = spec.num_doses;
    let phi = spec.target;
    let probit_phi = normal_quantile(phi);
    let mtd = rng.random_range(1..=k);
    let mut z: f64 = StandardNormal.sample(rng);
    let mut probits = vec![0.0; k];
    probits[mtd - 1] = probit_phi + spec.sigma0 * z;

    for dose in (1..mtd).rev() {
        let current = probits[dose];
        let reflected = if current > probit_phi {
            normal_quantile(2.0 * phi - normal_cdf(current))
        } else {
            current
        };
        z = StandardNormal.sample(rng);
        let eps = spec.mu + spec.sigma1 * z;
        probits[dose - 1] = reflected - eps * eps;
    }
    for dose in mtd..k {
        let current = probits[dose - 1];
        let reflected = if current < probit_phi {
            normal_quantile(2.0 * phi - normal_cdf(current))
        } else {
            current
        };
        z = StandardNormal.sample(rng);
        let eps = spec.mu + spec.sigma2 * z;
        probits[dose] = reflected + eps * eps;
    }

    let mut probs: Vec<f64> = probits
        .iter()
        .map(|&s| normal_cdf(s).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR))
        .collect();
    // clamping (or a zero increment) can tie neighbours
    for i in 1..k {
        if probs[i] <= probs[i - 1] {
            probs[i] = probs[i - 1].next_up();
        }
    }
    Scenario { label: "random".into(), target: phi, true_probs: probs, mtd_index: mtd }
}

/// Mean of the available gaps `p_{MTD+1} − p_MTD` and `p_MTD − p_{MTD−1}`;
/// `None` for a single-dose scenario.
pub fn gap_around_mtd(scenario: &Scenario) -> Option<f64> {
    let p = &scenario.true_probs;
    let m = scenario.mtd_index;
    if m == 0 {
        return None;
    }
    let mut gaps = Vec::with_capacity(2);
    if m >= 2 {
        gaps.push(p[m - 1] - p[m - 2]);
    }
    if m < p.len() {
        gaps.push(p[m] - p[m - 1]);
    }
    (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
}

/// Monte Carlo estimate of the expected gap around the MTD. Draw `i` uses
/// substream `i` of `seed`.
pub fn mean_gap(spec: &ScenarioGenSpec, draws: usize, seed: u64) -> f64 {
    let total: f64 = (0..draws)
        .map(|i| {
            let mut rng: SimRng = substream(seed, i as u64);
            gap_around_mtd(&generate_random_scenario(spec, &mut rng)).unwrap_or(0.0)
        })
        .sum();
    total / draws as f64
}

pub const CALIBRATION_DRAWS: usize = 20_000;
pub const CALIBRATION_MU_RANGE: (f64, f64) = (0.0, 3.0);
const CALIBRATION_MAX_ITER: usize = 40;
const CALIBRATION_TOL: f64 = 5e-4;

/// Finds `mu` whose expected gap around the MTD equals `target_gap`, by
/// bisection over `[0, 3]` with common random numbers across evaluations.
pub fn calibrate_mu(spec: &ScenarioGenSpec, target_gap: f64, seed: u64) -> Result<f64> {
    let mut probe = spec.clone();
    probe.target_gap = Some(target_gap);
    probe.validate()?;
    if spec.num_doses < 2 {
        return Err(Error::UnreachableTarget {
            target: target_gap,
            reason: "a single-dose scenario has no neighbouring doses".into(),
        });
    }
    let gap_at = |mu: f64| {
        let mut s = spec.clone();
        s.mu = mu;
        mean_gap(&s, CALIBRATION_DRAWS, seed)
    };
    let (mut lo, mut hi) = CALIBRATION_MU_RANGE;
    let gap_lo = gap_at(lo);
    if (gap_lo - target_gap).abs() <= CALIBRATION_TOL {
        return Ok(lo);
    }
    let gap_hi = gap_at(hi);
    if target_gap < gap_lo || target_gap > gap_hi {
        return Err(Error::UnreachableTarget {
            target: target_gap,
            reason: format!("reachable range over mu in [0, 3] is [{gap_lo:.4}, {gap_hi:.4}]"),
        });
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..CALIBRATION_MAX_ITER {
        mid = 0.5 * (lo + hi);
        let gap = gap_at(mid);
        if (gap - target_gap).abs() <= CALIBRATION_TOL {
            break;
        }
        if gap < target_gap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Writes scenarios as `label, phi, p1, ..., pK` lines.
pub fn format_scenarios(scenarios: &[Scenario]) -> String {
    let mut out = String::new();
    for s in scenarios {
        out.push_str(&s.label);
        out.push_str(", ");
        out.push_str(&s.target.to_string());
        for p in &s.true_probs {
            out.push_str(", ");
            out.push_str(&p.to_string());
        }
        out.push('\n');
    }
    out
}

/// Parses `label, phi, p1, ..., pK` lines. Blank lines and lines starting
/// with `#` are skipped. The MTD is derived with [`classify_mtd`].
pub fn parse_scenarios(text: &str) -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::ScenarioParse { line: i + 1, message };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(err("expected `label, phi, p1, ..., pK`".into()));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| err(format!("`{s}`: {e}")));
        let target = parse(fields[1])?;
        let probs = fields[2..].iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?;
        let scenario = Scenario::new(fields[0], target, probs).map_err(|e| err(e.to_string()))?;
        out.push(scenario);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_values_and_mtds() {
        let all = fixed_scenarios();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0].true_probs, vec![0.05, 0.10, 0.20, 0.30, 0.50, 0.70]);
        assert_eq!(all[1].true_probs, vec![0.30, 0.40, 0.52, 0.61, 0.76, 0.87]);
        assert_eq!(all[2].true_probs, vec![0.05, 0.06, 0.08, 0.11, 0.19, 0.34]);
        assert_eq!(all[3].true_probs, vec![0.06, 0.08, 0.12, 0.18, 0.40, 0.71]);
        assert_eq!(all[4].true_probs, vec![0.001, 0.002, 0.03, 0.05, 0.11, 0.22]);
        assert_eq!(all[5].true_probs, vec![0.125, 0.400, 0.667]);
        let mtds: Vec<usize> = all.iter().map(|s| s.mtd_index).collect();
        assert_eq!(mtds, vec![3, 0, 5, 4, 6, 1]);
        for s in &all {
            assert_eq!(classify_mtd(&s.true_probs, s.target), s.mtd_index, "{}", s.label);
        }
        assert_eq!(builtin_scenario("real").unwrap().target, 0.25);
        assert!(builtin_scenario("fixed:9").is_none());
    }

    #[test]
    fn zero_noise_pins_mtd_at_target() {
        let mut spec = ScenarioGenSpec::new(5, 0.3, 0.5);
        spec.sigma0 = 1e-300;
        let mut rng = substream(4, 0);
        let s = generate_random_scenario(&spec, &mut rng);
        assert!((s.true_probs[s.mtd_index - 1] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn single_dose_scenario() {
        let spec = ScenarioGenSpec::new(1, 0.3, 0.5);
        let mut rng = substream(4, 1);
        let s = generate_random_scenario(&spec, &mut rng);
        assert_eq!(s.true_probs.len(), 1);
        assert_eq!(s.mtd_index, 1);
        assert!(gap_around_mtd(&s).is_none());
    }

    #[test]
    fn random_scenarios_strictly_increasing() {
        for (i, mu) in [0.0, 0.3, 1.0, 3.0].into_iter().enumerate() {
            let spec = ScenarioGenSpec::new(7, 0.25, mu);
            for d in 0..2500 {
                let mut rng = substream(100 + i as u64, d);
                let s = generate_random_scenario(&spec, &mut rng);
                assert!(s.true_probs.windows(2).all(|w| w[0] < w[1]), "mu = {mu}: {:?}", s.true_probs);
                assert!(s.true_probs.iter().all(|&p| p > 0.0 && p < 1.0));
                assert!((1..=7).contains(&s.mtd_index));
            }
        }
    }

    #[test]
    fn text_format_round_trip() {
        let scenarios = fixed_scenarios();
        let text = format_scenarios(&scenarios);
        assert!(text.starts_with("fixed:1, 0.2, 0.05, 0.1, 0.2"));
        let parsed = parse_scenarios(&format!("# comment\n\n{text}")).unwrap();
        assert_eq!(parsed, scenarios);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = parse_scenarios("a, 0.2, 0.1, 0.3\nb, 0.2, 0.3, 0.1\n").unwrap_err();
        assert!(matches!(err, Error::ScenarioParse { line: 2, .. }), "{err}");
        assert!(parse_scenarios("a, x, 0.1").is_err());
        assert!(parse_scenarios("a, 0.2").is_err());
    }
}
