//! Binomial-logit regression by iteratively reweighted least squares, with
//! standard errors from the inverse observed information.

use nalgebra::{Cholesky, DMatrix, DVector};
use statrs::function::erf::erfc;

use super::StatsError;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticCoef {
    pub name: String,
    /// Log-odds estimate.
    pub estimate: f64,
    /// `exp(estimate)`, the odds ratio.
    pub exp_estimate: f64,
    pub se: f64,
    /// `estimate / se`.
    pub z: f64,
    /// Two-sided normal tail probability of `z`.
    pub p: f64,
    pub signif: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub coef: Vec<LogisticCoef>,
    pub n: usize,
    pub n_above: usize,
    pub iterations: u32,
    pub deviance: f64,
}

/// R-style star codes over `(0, 0.001, 0.01, 0.05, 0.1, 1)` cut points.
pub fn signif_code(p: f64) -> &'static str {
    if p <= 0.001 {
        "***"
    } else if p <= 0.01 {
        "**"
    } else if p <= 0.05 {
        "*"
    } else if p <= 0.1 {
        "."
    } else {
        " "
    }
}

pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

const MAX_ITER: u32 = 200;
const TOL: f64 = 1e-10;
/// Coefficients running past this magnitude mean the likelihood has no
/// finite maximizer (separation).
const DIVERGENCE_BOUND: f64 = 1e3;

/// Maximum-likelihood logit fit. `y` entries must be 0 or 1.
pub fn fit_logistic_design(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
) -> Result<LogisticFit, StatsError> {
    let n = x.nrows();
    let p = x.ncols();
    if n < p + 1 {
        return Err(StatsError::Underdetermined { rows: n, cols: p });
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == n {
        return Err(StatsError::SingleClassOutcome);
    }

    let mut beta = DVector::zeros(p);
    let mut iterations = 0;
    let mut converged = false;
    let mut information = DMatrix::zeros(p, p);
    while iterations < MAX_ITER {
        iterations += 1;
        let eta = x * &beta;
        let mut fisher = DMatrix::zeros(p, p);
        let mut score = DVector::zeros(p);
        for i in 0..n {
            let mu = 1.0 / (1.0 + (-eta[i]).exp());
            let w = (mu * (1.0 - mu)).max(1e-10);
            let r = y[i] - mu;
            for a in 0..p {
                let xa = x[(i, a)];
                score[a] += xa * r;
                for b in a..p {
                    fisher[(a, b)] += xa * x[(i, b)] * w;
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                fisher[(a, b)] = fisher[(b, a)];
            }
        }
        let chol = Cholesky::new(fisher.clone()).ok_or(StatsError::SingularDesign)?;
        let step = chol.solve(&score);
        beta += &step;
        information = fisher;
        if beta.iter().any(|b| !b.is_finite() || b.abs() > DIVERGENCE_BOUND) {
            return Err(StatsError::PerfectSeparation);
        }
        if step.amax() < TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(StatsError::PerfectSeparation);
    }

    let covariance = Cholesky::new(information)
        .ok_or(StatsError::SingularDesign)?
        .inverse();
    let eta = x * &beta;
    let mut deviance = 0.0;
    for i in 0..n {
        let mu = 1.0 / (1.0 + (-eta[i]).exp());
        deviance -= 2.0 * (y[i] * mu.ln() + (1.0 - y[i]) * (1.0 - mu).ln());
    }

    let coef = (0..p)
        .map(|j| {
            let estimate = beta[j];
            let se = covariance[(j, j)].sqrt();
            let z = estimate / se;
            let p_value = two_sided_p(z);
            LogisticCoef {
                name: names[j].clone(),
                estimate,
                exp_estimate: estimate.exp(),
                se,
                z,
                p: p_value,
                signif: signif_code(p_value),
            }
        })
        .collect();

    Ok(LogisticFit {
        coef,
        n,
        n_above: ones,
        iterations,
        deviance,
    })
}
