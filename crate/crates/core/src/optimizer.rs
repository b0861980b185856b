//! Long-only maximum-Sharpe portfolio optimization on the simplex.
//!
//! The objective is (w'mu - rf) / sqrt(w'Sigma w) subject to sum(w) = 1,
//! w >= 0. The solver is projected gradient ascent: take a gradient step,
//! project back onto the simplex (exact sort-and-threshold projection),
//! and backtrack the step size until the objective improves. Starting
//! from equal weights and accepting only improving steps means the result
//! never falls below the equal-weight Sharpe.
//!
//! Two independent checks ride along: `grid_oracle` enumerates a simplex
//! lattice for small problems, and `sharpe_gradient` is validated against
//! central finite differences in the tests.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// Inputs to one max-Sharpe solve: per-asset mean returns, their
/// covariance, and the per-period risk-free rate.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationProblem {
    tickers: Vec<String>,
    mean: Vec<f64>,
    covariance: Matrix,
    risk_free: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Sup-norm step-size tolerance that declares convergence.
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iter: 1000,
            tol: 1e-10,
        }
    }
}

/// Long-only weights over a ticker list; sums to 1 within 1e-8.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioWeights {
    tickers: Vec<String>,
    weights: Vec<f64>,
}

/// What the solve did, alongside the weights it produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveDiagnostics {
    pub sharpe: f64,
    pub iterations: usize,
    pub converged: bool,
}

// ---------------------------------------------------------------------------
// Construction and validation
// ---------------------------------------------------------------------------

impl OptimizationProblem {
    /// Validates shapes, finiteness, symmetry, positive semidefiniteness
    /// (smallest eigenvalue >= -1e-10 relative to scale) and strictly
    /// positive per-asset variances.
    pub fn new(
        tickers: Vec<String>,
        mean: Vec<f64>,
        covariance: Matrix,
        risk_free: f64,
    ) -> Result<Self> {
        let n = tickers.len();
        if n == 0 {
            return Err(Error::EmptyInput("tickers".into()));
        }
        if mean.len() != n || covariance.rows() != n || covariance.cols() != n {
            return Err(Error::InvalidInput {
                field: "shapes".into(),
                reason: format!(
                    "{n} tickers but mean has {} entries and covariance is {}x{}",
                    mean.len(),
                    covariance.rows(),
                    covariance.cols()
                ),
            });
        }
        if !risk_free.is_finite() {
            return Err(Error::InvalidInput {
                field: "risk_free".into(),
                reason: "must be finite".into(),
            });
        }
        if mean.iter().any(|m| !m.is_finite()) || covariance.data().iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput {
                field: "inputs".into(),
                reason: "mean and covariance must be finite".into(),
            });
        }
        let mut scale: f64 = 0.0;
        for i in 0..n {
            scale = scale.max(math::abs(covariance.get(i, i)));
        }
        if !covariance.is_symmetric(1e-9 * scale.max(1e-300)) {
            return Err(Error::InvalidInput {
                field: "covariance".into(),
                reason: "must be symmetric".into(),
            });
        }
        for i in 0..n {
            if covariance.get(i, i) <= 0.0 {
                return Err(Error::Data(format!(
                    "asset {} has non-positive variance",
                    tickers[i]
                )));
            }
        }
        let min_eig = covariance.min_eigenvalue()?;
        if min_eig < -1e-10 * scale.max(1.0) {
            return Err(Error::Numeric(format!(
                "covariance is not positive semidefinite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(OptimizationProblem {
            tickers,
            mean,
            covariance,
            risk_free,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn risk_free(&self) -> f64 {
        self.risk_free
    }
}

impl PortfolioWeights {
    /// Accepts raw solver output: clamps tiny negatives in [-1e-10, 0) to
    /// zero, renormalizes to sum 1, and rejects anything materially
    /// negative. Weights keep full precision; rounding is display-only.
    pub fn new(tickers: Vec<String>, raw: Vec<f64>) -> Result<Self> {
        if tickers.is_empty() || tickers.len() != raw.len() {
            return Err(Error::InvalidInput {
                field: "weights".into(),
                reason: "tickers and weights must be non-empty and match".into(),
            });
        }
        let mut weights = raw;
        for w in weights.iter_mut() {
            if !w.is_finite() {
                return Err(Error::Numeric("non-finite weight".into()));
            }
            if *w < 0.0 {
                if *w >= -1e-10 {
                    *w = 0.0;
                } else {
                    return Err(Error::Numeric(format!("weight {w} is negative")));
                }
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Numeric("weights sum to zero".into()));
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        let check: f64 = weights.iter().sum();
        if math::abs(check - 1.0) > 1e-8 {
            return Err(Error::Numeric(format!(
                "weights sum to {check}, expected 1"
            )));
        }
        Ok(PortfolioWeights { tickers, weights })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

/// (w'mu - rf) / sqrt(w'Sigma w). Defined for any w with positive
/// portfolio variance, on or off the simplex.
pub fn sharpe_ratio(weights: &[f64], mean: &[f64], covariance: &Matrix, risk_free: f64) -> Result<f64> {
    if weights.len() != mean.len() || covariance.rows() != weights.len() {
        return Err(Error::InvalidInput {
            field: "shapes".into(),
            reason: "weights, mean and covariance must agree".into(),
        });
    }
    let variance = covariance.quadratic_form(weights);
    if variance <= 0.0 {
        return Err(Error::Numeric(format!(
            "portfolio variance {variance} is not positive"
        )));
    }
    Ok((math::dot(weights, mean) - risk_free) / math::sqrt(variance))
}

/// Analytic gradient of the Sharpe ratio:
/// mu / sigma - ((w'mu - rf) / sigma^3) * Sigma w.
pub fn sharpe_gradient(
    weights: &[f64],
    mean: &[f64],
    covariance: &Matrix,
    risk_free: f64,
) -> Result<Vec<f64>> {
    let variance = covariance.quadratic_form(weights);
    if variance <= 0.0 {
        return Err(Error::Numeric(format!(
            "portfolio variance {variance} is not positive"
        )));
    }
    let sigma = math::sqrt(variance);
    let excess = math::dot(weights, mean) - risk_free;
    let sw = covariance.matvec(weights);
    let scale = excess / (variance * sigma);
    Ok((0..weights.len())
        .map(|i| mean[i] / sigma - scale * sw[i])
        .collect())
}

/// Euclidean projection onto the probability simplex by sorting and
/// thresholding: w_i = max(v_i - theta, 0) with theta chosen so the
/// result sums to 1.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    debug_assert!(n > 0);
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite weights"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    let mut rho = 0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
            rho = j + 1;
        }
    }
    debug_assert!(rho > 0);
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Equal weights 1/n, renormalized so the sum is 1 to within 1e-15.
pub fn equal_weights(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyInput("weights".into()));
    }
    let w = vec![1.0 / n as f64; n];
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

struct Ascent {
    weights: Vec<f64>,
    sharpe: f64,
    iterations: usize,
    converged: bool,
}

/// Projected gradient ascent with Armijo backtracking from a feasible
/// start. Only improving steps are accepted, so the result dominates the
/// start point. Candidates with zero portfolio variance are rejected by
/// shrinking the step.
fn ascend(
    start: Vec<f64>,
    mean: &[f64],
    covariance: &Matrix,
    risk_free: f64,
    config: &SolverConfig,
) -> Result<Ascent> {
    const ARMIJO: f64 = 1e-4;
    const ALPHA_MIN: f64 = 1e-18;
    const ALPHA_MAX: f64 = 1e6;

    let mut w = start;
    let mut f = sharpe_ratio(&w, mean, covariance, risk_free)?;
    let mut alpha = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        iterations += 1;
        let g = sharpe_gradient(&w, mean, covariance, risk_free)?;
        let mut accepted = false;
        while alpha >= ALPHA_MIN {
            let trial: Vec<f64> = (0..w.len()).map(|i| w[i] + alpha * g[i]).collect();
            let cand = project_to_simplex(&trial);
            let Ok(fc) = sharpe_ratio(&cand, mean, covariance, risk_free) else {
                alpha *= 0.5;
                continue;
            };
            let mut gdot = 0.0;
            let mut step_inf: f64 = 0.0;
            for i in 0..w.len() {
                let d = cand[i] - w[i];
                gdot += g[i] * d;
                step_inf = step_inf.max(math::abs(d));
            }
            if fc >= f + ARMIJO * gdot.max(0.0) && fc > f - 1e-300 {
                let improved = fc > f;
                w = cand;
                f = fc;
                accepted = true;
                if step_inf <= config.tol || !improved {
                    converged = true;
                }
                alpha = (alpha * 2.0).min(ALPHA_MAX);
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // no improving step exists at any scale: stationary
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    Ok(Ascent {
        weights: w,
        sharpe: f,
        iterations,
        converged,
    })
}

/// Maximizes the Sharpe ratio over the simplex. The primary run starts
/// from equal weights; a deterministic safeguard then evaluates every
/// vertex and re-runs from the best one if it beats the primary result
/// (equal weights can sit exactly on a stationary minimum when all excess
/// returns are negative and symmetric). The better run wins.
pub fn maximize_sharpe(
    problem: &OptimizationProblem,
    config: &SolverConfig,
) -> Result<(PortfolioWeights, SolveDiagnostics)> {
    let n = problem.n_assets();
    if config.max_iter == 0 {
        return Err(Error::InvalidInput {
            field: "max_iter".into(),
            reason: "at least one iteration is required".into(),
        });
    }
    if n == 1 {
        let weights = PortfolioWeights::new(problem.tickers.clone(), vec![1.0])?;
        let sharpe = sharpe_ratio(&[1.0], &problem.mean, &problem.covariance, problem.risk_free)?;
        return Ok((
            weights,
            SolveDiagnostics {
                sharpe,
                iterations: 0,
                converged: true,
            },
        ));
    }

    let start = equal_weights(n)?;
    let mut best = ascend(
        start,
        &problem.mean,
        &problem.covariance,
        problem.risk_free,
        config,
    )?;

    let mut best_vertex = usize::MAX;
    let mut best_vertex_sharpe = f64::NEG_INFINITY;
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let s = sharpe_ratio(&e, &problem.mean, &problem.covariance, problem.risk_free)?;
        if s > best_vertex_sharpe {
            best_vertex_sharpe = s;
            best_vertex = i;
        }
    }
    if best_vertex_sharpe > best.sharpe {
        let mut e = vec![0.0; n];
        e[best_vertex] = 1.0;
        let from_vertex = ascend(
            e,
            &problem.mean,
            &problem.covariance,
            problem.risk_free,
            config,
        )?;
        if from_vertex.sharpe > best.sharpe {
            best = from_vertex;
        }
    }

    let weights = PortfolioWeights::new(problem.tickers.clone(), best.weights)?;
    let sharpe = sharpe_ratio(
        weights.weights(),
        &problem.mean,
        &problem.covariance,
        problem.risk_free,
    )?;
    Ok((
        weights,
        SolveDiagnostics {
            sharpe,
            iterations: best.iterations,
            converged: best.converged,
        },
    ))
}

// ---------------------------------------------------------------------------
// Grid oracle
// ---------------------------------------------------------------------------

/// Brute-force lattice search over the simplex with the given step.
/// Intended as an independent check, so it refuses more than 4 assets.
/// Ties go to the lexicographically smallest weight vector; lattice
/// points with zero portfolio variance are skipped.
pub fn grid_oracle(problem: &OptimizationProblem, step: f64) -> Result<(Vec<f64>, f64)> {
    let n = problem.n_assets();
    if n > 4 {
        return Err(Error::InvalidInput {
            field: "n_assets".into(),
            reason: format!("grid oracle is exponential; {n} assets exceed the limit of 4"),
        });
    }
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidInput {
            field: "step".into(),
            reason: "step must be in (0, 1]".into(),
        });
    }
    let m = (1.0 / step + 0.5) as usize;
    if m == 0 || math::abs(m as f64 * step - 1.0) > 1e-9 {
        return Err(Error::InvalidInput {
            field: "step".into(),
            reason: format!("1/step must be an integer, got step {step}"),
        });
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut counts = vec![0usize; n];
    // lexicographic enumeration over compositions of m into n parts;
    // strict improvement keeps the first (smallest) maximizer
    fn recurse(
        counts: &mut [usize],
        pos: usize,
        remaining: usize,
        m: usize,
        problem: &OptimizationProblem,
        best: &mut Option<(Vec<f64>, f64)>,
    ) {
        if pos + 1 == counts.len() {
            counts[pos] = remaining;
            let w: Vec<f64> = counts.iter().map(|&c| c as f64 / m as f64).collect();
            if let Ok(s) = sharpe_ratio(&w, &problem.mean, &problem.covariance, problem.risk_free)
            {
                let better = match best {
                    None => true,
                    Some((_, bs)) => s > *bs,
                };
                if better {
                    *best = Some((w, s));
                }
            }
            return;
        }
        for c in 0..=remaining {
            counts[pos] = c;
            recurse(counts, pos + 1, remaining - c, m, problem, best);
        }
    }
    recurse(&mut counts, 0, m, m, problem, &mut best);
    best.ok_or_else(|| Error::Numeric("no lattice point has positive variance".into()))
}
