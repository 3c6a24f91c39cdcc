//! Simulation of misaligned sharp spin measurements: draw an actual
//! direction from the error density, then an outcome from the sharp
//! probabilities along it.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::{versine, DensityKind, ErrorDensity};
use crate::error::{Error, Result};
use crate::linalg3::{CVector3, Rotation3, UnitVector3};
use crate::povm::{build_povm, outcome_probability};
use crate::quadrature::{gauss_legendre, QuadratureSpec};
use crate::spin::{sharp_probabilities, Outcome};

/// Knots of the tabulated radial CDF used for non-cap densities.
pub const CDF_KNOTS: usize = 10_000;
/// Trials per random substream.
pub const BLOCK_TRIALS: u64 = 1 << 14;
/// Generator identity recorded in reports.
pub const GENERATOR: &str = "ChaCha8 (rand_chacha 0.3): seed_from_u64(seed), stream = block index, 16384 trials per block";

/// Draws directions distributed according to a density around `n`.
#[derive(Debug, Clone)]
pub struct DirectionSampler {
    to_n: Rotation3,
    method: Method,
}

#[derive(Debug, Clone)]
enum Method {
    /// Versine `1 − cos θ` uniform on `[0, max]`.
    Cap { max_versine: f64 },
    /// Polar angles at equally spaced CDF levels.
    Table { thetas: Vec<f64> },
}

impl DirectionSampler {
    pub fn new(w: &ErrorDensity, n: &UnitVector3) -> Self {
        let method = match w.kind() {
            DensityKind::UniformCap => Method::Cap {
                max_versine: versine(w.epsilon()),
            },
            _ => Method::Table {
                thetas: inverse_cdf_table(w),
            },
        };
        DirectionSampler {
            to_n: Rotation3::geodesic(&UnitVector3::Z, n),
            method,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitVector3 {
        let u: f64 = rng.gen();
        let phi = 2.0 * PI * rng.gen::<f64>();
        let theta = match &self.method {
            Method::Cap { max_versine } => 2.0 * (0.5 * u * max_versine).sqrt().min(1.0).asin(),
            Method::Table { thetas } => {
                let pos = u * (thetas.len() - 1) as f64;
                let k = (pos as usize).min(thetas.len() - 2);
                let f = pos - k as f64;
                thetas[k] + f * (thetas[k + 1] - thetas[k])
            }
        };
        let local = UnitVector3::from_spherical(theta, phi);
        self.to_n.apply(&local)
    }
}

/// Polar angle at CDF levels `k / (CDF_KNOTS − 1)`, by linear interpolation
/// of the cumulative radial mass on a uniform θ grid.
fn inverse_cdf_table(w: &ErrorDensity) -> Vec<f64> {
    let support = w.effective_support();
    let h = support / (CDF_KNOTS - 1) as f64;
    let rule = gauss_legendre(8);
    let mut cdf = Vec::with_capacity(CDF_KNOTS);
    cdf.push(0.0);
    let mut acc = 0.0;
    for k in 0..CDF_KNOTS - 1 {
        let a = k as f64 * h;
        let seg: f64 = rule
            .iter()
            .map(|&(t, wt)| {
                let theta = a + 0.5 * h * (t + 1.0);
                wt * w.radial(theta) * theta.sin()
            })
            .sum();
        acc += 0.5 * h * 2.0 * PI * seg;
        cdf.push(acc);
    }
    let total = acc;
    let grid = |k: usize| k as f64 * h;
    let mut thetas = Vec::with_capacity(CDF_KNOTS);
    let mut j = 0;
    for k in 0..CDF_KNOTS {
        let level = total * k as f64 / (CDF_KNOTS - 1) as f64;
        while j + 2 < CDF_KNOTS && cdf[j + 1] < level {
            j += 1;
        }
        let (c0, c1) = (cdf[j], cdf[j + 1]);
        let f = if c1 > c0 { ((level - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.0 };
        thetas.push(grid(j) + f * h);
    }
    thetas[0] = 0.0;
    thetas
}

/// One draw from `w` around `n`. Builds a sampler per call; prefer
/// [`DirectionSampler`] in loops.
pub fn sample_direction<R: Rng + ?Sized>(w: &ErrorDensity, n: &UnitVector3, rng: &mut R) -> UnitVector3 {
    DirectionSampler::new(w, n).sample(rng)
}

/// Values keyed by outcome, serialized as `{"+1", "0", "-1"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerOutcome<T> {
    #[serde(rename = "+1")]
    pub plus: T,
    #[serde(rename = "0")]
    pub zero: T,
    #[serde(rename = "-1")]
    pub minus: T,
}

impl<T: Copy> PerOutcome<T> {
    pub fn from_array(a: [T; 3]) -> Self {
        PerOutcome {
            plus: a[0],
            zero: a[1],
            minus: a[2],
        }
    }

    pub fn get(&self, outcome: Outcome) -> T {
        match outcome {
            Outcome::Plus => self.plus,
            Outcome::Zero => self.zero,
            Outcome::Minus => self.minus,
        }
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.plus, self.zero, self.minus]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub counts: PerOutcome<u64>,
    pub frequencies: PerOutcome<f64>,
    pub expected: PerOutcome<f64>,
    /// `(frequency − expected) / √(p(1 − p)/N)`; zero when both sides are
    /// certain and equal.
    pub z_scores: PerOutcome<f64>,
    pub seed: u64,
    pub generator: String,
}

impl SimulationReport {
    /// Whether every `|z| ≤ k`.
    pub fn within_sigma(&self, k: f64) -> bool {
        self.z_scores.to_array().iter().all(|z| z.abs() <= k)
    }
}

fn run_block(sampler: &DirectionSampler, psi: &CVector3, seed: u64, block: u64, trials: u64) -> [u64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let mut counts = [0u64; 3];
    for _ in 0..trials {
        let m = sampler.sample(&mut rng);
        let [p_plus, p_zero, _] = sharp_probabilities(&m, psi);
        let u: f64 = rng.gen();
        let idx = if u < p_plus {
            0
        } else if u < p_plus + p_zero {
            1
        } else {
            2
        };
        counts[idx] += 1;
    }
    counts
}

/// Simulates `trials` misaligned measurements of `ψ` along `n`, compared
/// with the POVM prediction at default quadrature.
pub fn run_experiment(
    psi: &CVector3,
    n: &UnitVector3,
    w: &ErrorDensity,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(Error::validation("trials must be at least 1"));
    }
    let povm = build_povm(n, w, &QuadratureSpec::default())?;
    let mut expected = [0.0; 3];
    for o in Outcome::ALL {
        expected[o.index()] = outcome_probability(psi, &povm, o)?;
    }

    let sampler = DirectionSampler::new(w, n);
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
            run_block(&sampler, psi, seed, b, len)
        })
        .reduce(|| [0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);

    let nf = trials as f64;
    let frequencies = counts.map(|c| c as f64 / nf);
    let mut z = [0.0; 3];
    for i in 0..3 {
        let p = expected[i];
        let se = (p * (1.0 - p) / nf).sqrt();
        let diff = frequencies[i] - p;
        z[i] = if se > 0.0 {
            diff / se
        } else if diff.abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    Ok(SimulationReport {
        trials,
        counts: PerOutcome::from_array(counts),
        frequencies: PerOutcome::from_array(frequencies),
        expected: PerOutcome::from_array(expected),
        z_scores: PerOutcome::from_array(z),
        seed,
        generator: GENERATOR.to_string(),
    })
}
