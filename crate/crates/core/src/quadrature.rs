//! Product quadrature on the sphere: Gauss-Legendre in `cos θ` over angular
//! panels, trapezoid in the azimuth.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Gauss-Legendre order tried before reporting non-convergence.
pub const MAX_ORDER: usize = 1 << 14;

/// Quadrature orders and convergence tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub theta_points: usize,
    pub phi_points: usize,
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            theta_points: 64,
            phi_points: 64,
            tolerance: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn new(theta_points: usize, phi_points: usize, tolerance: f64) -> Result<Self> {
        let spec = QuadratureSpec {
            theta_points,
            phi_points,
            tolerance,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta_points < 8 || self.phi_points < 8 {
            return Err(Error::validation(format!(
                "quadrature orders must be at least 8 (got {} × {})",
                self.theta_points, self.phi_points
            )));
        }
        if self.theta_points > MAX_ORDER || self.phi_points > MAX_ORDER {
            return Err(Error::validation(format!(
                "quadrature orders must not exceed {MAX_ORDER}"
            )));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::validation(format!(
                "quadrature tolerance must be positive (got {})",
                self.tolerance
            )));
        }
        Ok(())
    }
}

type Rule = Arc<Vec<(f64, f64)>>;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, cached by order.
pub(crate) fn gauss_legendre(order: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(order)
        .or_insert_with(|| {
            let rule = GaussLegendre::new(order).expect("order >= 2");
            let mut pairs = rule.into_node_weight_pairs();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Arc::new(pairs)
        })
        .clone()
}

/// Nodes `(θ, x = cos θ, weight in x)` covering `θ ∈ [0, π]` panel by panel.
///
/// `panels` are increasing polar-angle breakpoints starting at 0; the
/// weights integrate `∫ f(θ) sin θ dθ` over the union of the panels.
pub(crate) fn polar_nodes(panels: &[f64], order: usize) -> Vec<(f64, f64, f64)> {
    let rule = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(rule.len() * panels.len().saturating_sub(1));
    // Work with u = 1 − cos θ = 2 sin²(θ/2) to keep small angles accurate.
    let versine = |theta: f64| 2.0 * (0.5 * theta).sin().powi(2);
    for w in panels.windows(2) {
        let (u0, u1) = (versine(w[0]), versine(w[1]));
        let half = 0.5 * (u1 - u0);
        for &(t, wt) in rule.iter() {
            let u = u0 + half * (1.0 - t);
            let theta = 2.0 * (0.5 * u).sqrt().min(1.0).asin();
            nodes.push((theta, 1.0 - u, wt * half));
        }
    }
    nodes
}

/// Runs `eval(order)` at increasing orders until two successive results
/// differ by at most `tolerance · max(1, |value|)` in every component.
pub(crate) fn converge<F>(start: usize, tolerance: f64, what: &str, eval: F) -> Result<Vec<f64>>
where
    F: FnMut(usize) -> Vec<f64>,
{
    converge_with_order(start, tolerance, what, eval).map(|(_, v)| v)
}

/// As [`converge`], also returning the order of the accepted result.
pub(crate) fn converge_with_order<F>(
    start: usize,
    tolerance: f64,
    what: &str,
    mut eval: F,
) -> Result<(usize, Vec<f64>)>
where
    F: FnMut(usize) -> Vec<f64>,
{
    let mut order = start;
    let mut previous = eval(order);
    loop {
        let next_order = order * 2;
        if next_order > MAX_ORDER {
            let estimate = previous.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            return Err(Error::NonConvergence {
                message: format!("{what} did not converge by order {order}"),
                estimate,
            });
        }
        let current = eval(next_order);
        let change = previous
            .iter()
            .zip(&current)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        if change <= tolerance {
            return Ok((next_order, current));
        }
        previous = current;
        order = next_order;
    }
}
