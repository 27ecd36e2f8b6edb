//! Bayesian quantile regression via Gibbs sampling under the asymmetric
//! Laplace working likelihood in its location-scale mixture form: each
//! observation carries an exponential latent variable, coefficients get
//! conjugate normal updates, and the scale gets an inverse-gamma update.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::{McmcConfig, StatsError};

/// Posterior summary for one coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefSummary {
    pub name: String,
    pub mean: f64,
    /// 2.5% posterior quantile.
    pub lower: f64,
    /// 97.5% posterior quantile.
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct QuantileFit {
    pub quantile: f64,
    pub coef: Vec<CoefSummary>,
    /// Post-burn-in kept draws behind the summaries.
    pub n_kept_draws: usize,
    /// False when the degeneracy diagnostic trips; such fits are omitted
    /// from reports.
    pub converged: bool,
}

/// Variance of a diffuse normal prior on each coefficient.
const PRIOR_VARIANCE: f64 = 1e6;
/// Inverse-gamma prior on the asymmetric-Laplace scale.
const SCALE_PRIOR_SHAPE: f64 = 0.01;
const SCALE_PRIOR_RATE: f64 = 0.01;

/// Michael-Schucany-Haas inverse-Gaussian sampler.
fn sample_inverse_gaussian(rng: &mut ChaCha8Rng, mean: f64, shape: f64) -> f64 {
    let nu: f64 = StandardNormal.sample(rng);
    let y = nu * nu;
    let x = mean + mean * mean * y / (2.0 * shape)
        - mean / (2.0 * shape) * (4.0 * mean * shape * y + mean * mean * y * y).sqrt();
    let u: f64 = rng.random();
    if u <= mean / (mean + x) {
        x
    } else {
        mean * mean / x
    }
}

fn lag_autocorrelation(xs: &[f64], lag: usize) -> f64 {
    let n = xs.len();
    if n <= lag {
        return 1.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    if var < 1e-300 {
        return 1.0;
    }
    let cov: f64 = (0..n - lag)
        .map(|i| (xs[i] - mean) * (xs[i + lag] - mean))
        .sum();
    cov / var
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Empirical quantile with linear interpolation over the sorted draws.
fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Gibbs sampler for one quantile. Deterministic given `cfg.seed`.
pub fn fit_quantile_design(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
    q: f64,
    cfg: &McmcConfig,
) -> Result<QuantileFit, StatsError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(StatsError::InvalidQuantile(q));
    }
    cfg.validate()?;
    let n = x.nrows();
    let p = x.ncols();
    if n < p + 1 {
        return Err(StatsError::Underdetermined { rows: n, cols: p });
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }

    let theta = (1.0 - 2.0 * q) / (q * (1.0 - q));
    let tau_sq = 2.0 / (q * (1.0 - q));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Least-squares start for faster mixing.
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    let mut beta = Cholesky::new(xtx.clone())
        .map(|c| c.solve(&xty))
        .ok_or(StatsError::SingularDesign)?;

    let mut latent = DVector::from_element(n, 1.0);
    let mut sigma = 1.0f64;

    let kept_target = cfg.kept();
    let mut kept: Vec<DVector<f64>> = Vec::with_capacity(kept_target);

    for draw in 1..=cfg.ndraw {
        // latent exponential mixture variables, one per observation
        let residual = y - x * &beta;
        let psi = 1.0 / (2.0 * q * (1.0 - q) * sigma);
        for i in 0..n {
            let chi = (residual[i] * residual[i] / (tau_sq * sigma)).max(1e-12);
            let ig_mean = (psi / chi).sqrt();
            let w = sample_inverse_gaussian(&mut rng, ig_mean, psi).max(1e-300);
            latent[i] = (1.0 / w).max(1e-12);
        }

        // conjugate normal update for the coefficients
        let mut precision = DMatrix::from_diagonal_element(p, p, 1.0 / PRIOR_VARIANCE);
        let mut rhs = DVector::zeros(p);
        for i in 0..n {
            let wi = 1.0 / (tau_sq * sigma * latent[i]);
            let adjusted = (y[i] - theta * latent[i]) * wi;
            for a in 0..p {
                let xa = x[(i, a)];
                rhs[a] += xa * adjusted;
                for b in a..p {
                    precision[(a, b)] += xa * x[(i, b)] * wi;
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                precision[(a, b)] = precision[(b, a)];
            }
        }
        let chol = Cholesky::new(precision).ok_or(StatsError::SingularDesign)?;
        let mean = chol.solve(&rhs);
        let z = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
        let noise = chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or(StatsError::SingularDesign)?;
        beta = mean + noise;

        // inverse-gamma update for the scale
        let residual = y - x * &beta;
        let mut rate = SCALE_PRIOR_RATE;
        for i in 0..n {
            let r = residual[i] - theta * latent[i];
            rate += r * r / (2.0 * tau_sq * latent[i]) + latent[i];
        }
        let shape = SCALE_PRIOR_SHAPE + 1.5 * n as f64;
        let gamma = Gamma::new(shape, 1.0 / rate).expect("valid gamma parameters");
        sigma = (1.0 / gamma.sample(&mut rng)).clamp(1e-12, 1e12);

        if draw % cfg.thin == 0 {
            kept.push(beta.clone());
        }
    }

    let summary_draws = &kept[cfg.burnin_kept..];
    let n_kept_draws = summary_draws.len();

    let mut coef = Vec::with_capacity(p);
    let mut converged = true;
    for j in 0..p {
        let series: Vec<f64> = summary_draws.iter().map(|b| b[j]).collect();
        if lag_autocorrelation(&series, 50) > 0.99 || variance(&series) < 1e-12 {
            converged = false;
        }
        let mean = series.iter().sum::<f64>() / n_kept_draws as f64;
        let mut sorted = series;
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
        coef.push(CoefSummary {
            name: names[j].clone(),
            mean,
            lower: empirical_quantile(&sorted, 0.025),
            upper: empirical_quantile(&sorted, 0.975),
        });
    }

    Ok(QuantileFit {
        quantile: q,
        coef,
        n_kept_draws,
        converged,
    })
}
