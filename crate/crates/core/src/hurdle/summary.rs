//! Report-shaped views of the fits. The logistic table follows the mixed
//! significant-figure house style: two significant figures for estimates,
//! standard errors and z, four for odds ratios, scientific notation for p.
//! Nothing here recomputes statistics beyond exponentiation and rounding.

use super::{LogisticFit, QuantileFit};

pub const SIGNIF_LEGEND: &str = "0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1";

/// Rounds to `sig` significant digits and trims trailing zeros.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = sig as i32 - 1 - exponent;
    let s = if decimals >= 0 {
        format!("{:.*}", decimals as usize, x)
    } else {
        let scale = 10f64.powi(-decimals);
        format!("{:.0}", (x / scale).round() * scale)
    };
    trim_trailing_zeros(s)
}

fn trim_trailing_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Two-significant-digit scientific notation, `9.8E-111` style, with a
/// redundant `.0` mantissa trimmed (`4E-14`).
pub fn format_sci(p: f64) -> String {
    format!("{:.1E}", p).replace(".0E", "E")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogisticTableRow {
    pub variable: String,
    pub estimate: String,
    pub exp_estimate: String,
    pub se: String,
    pub z_value: String,
    pub p_value: String,
    pub signif: String,
}

pub fn logistic_table(fit: &LogisticFit) -> Vec<LogisticTableRow> {
    fit.coef
        .iter()
        .map(|c| LogisticTableRow {
            variable: c.name.clone(),
            estimate: format_sig(c.estimate, 2),
            exp_estimate: format_sig(c.exp_estimate, 4),
            se: format_sig(c.se, 2),
            z_value: format_sig(c.z, 2),
            p_value: format_sci(c.p),
            signif: c.signif.to_string(),
        })
        .collect()
}

/// Raw per-decile posterior summaries, one row per coefficient. Fits that
/// failed the convergence diagnostic are omitted, mirroring how
/// non-converged quantiles are left out of reports.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTableRow {
    pub quantile: f64,
    pub variable: String,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn quantile_table(fits: &[QuantileFit]) -> Vec<QuantileTableRow> {
    let mut rows = Vec::new();
    for fit in fits {
        if !fit.converged {
            continue;
        }
        for c in &fit.coef {
            rows.push(QuantileTableRow {
                quantile: fit.quantile,
                variable: c.name.clone(),
                mean: c.mean,
                lower: c.lower,
                upper: c.upper,
            });
        }
    }
    rows
}

pub fn summarize_fits(
    logistic: &LogisticFit,
    quantile_fits: &[QuantileFit],
) -> (Vec<LogisticTableRow>, Vec<QuantileTableRow>) {
    (logistic_table(logistic), quantile_table(quantile_fits))
}
