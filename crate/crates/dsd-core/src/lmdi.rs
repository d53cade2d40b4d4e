//! Log-mean Divisia decomposition, used as an independent oracle for the
//! path-integral engine, plus the regression comparison between the two.
//!
//! The intensity is decomposed per end use, `c_i = e_i * k_i * p * g * s`,
//! with the logarithmic mean of the end-use intensities as weight:
//!
//! ```text
//! delta_x = sum_i L(c_i(T), c_i(0)) * ln(x(T) / x(0))
//! ```
//!
//! Summing the five factor terms telescopes to `sum_i L_i * ln(c_i(T)/c_i(0))
//! = delta_c`, so the decomposition is residual-free by construction, and the
//! emission-factor term is by definition the sum of its per-end-use parts;
//! the method extends to exactly two layers and no further.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::model::{EndUse, FactorState};

/// Small-value stand-in for non-positive factors, the usual convention for
/// log-mean decompositions of data with inactive categories.
pub const ZERO_SUBSTITUTE: f64 = 1e-10;

/// Logarithmic mean of two positive numbers: `(a-b)/(ln a - ln b)`, with the
/// equal-argument limit `a`. The result always lies between the arguments.
pub fn log_mean(a: f64, b: f64) -> Result<f64> {
    if a <= 0.0 || b <= 0.0 || !a.is_finite() || !b.is_finite() {
        return Err(Error::NonpositiveInput(a, b));
    }
    if a == b {
        return Ok(a);
    }
    // ln(a/b) through ln_1p keeps precision when a and b are close.
    let ratio_minus_one = (a - b) / b;
    Ok((a - b) / ratio_minus_one.ln_1p())
}

fn substituted(value: f64, name: &str, flags: &mut Vec<String>) -> f64 {
    if value > 0.0 && value.is_finite() {
        value
    } else {
        if !flags.iter().any(|f| f == name) {
            flags.push(name.to_string());
        }
        ZERO_SUBSTITUTE
    }
}

/// First-layer factor effects plus the per-end-use split of the
/// emission-factor effect. All values in kgCO2 per household.
#[derive(Debug, Clone)]
pub struct LmdiTable {
    pub period: (i32, i32),
    pub end_uses: Vec<EndUse>,
    /// Observed intensity change.
    pub delta_c: f64,
    /// p effect.
    pub household_size: f64,
    /// g effect.
    pub gdp_per_capita: f64,
    /// s effect.
    pub expenditure_share: f64,
    /// e effect (per-end-use energy intensities, aggregated).
    pub energy_intensity: f64,
    /// k effect, first layer.
    pub emission_factor_total: f64,
    /// k_i effects, second layer; sums to the first-layer k effect.
    pub emission_factor: Vec<f64>,
    /// Drivers whose value was non-positive at an endpoint and was replaced
    /// by [`ZERO_SUBSTITUTE`] before forming ratios.
    pub zero_substituted: Vec<String>,
}

impl LmdiTable {
    /// Sum of the five first-layer effects; equals `delta_c` up to float
    /// rounding.
    pub fn first_layer_sum(&self) -> f64 {
        self.household_size
            + self.gdp_per_capita
            + self.expenditure_share
            + self.energy_intensity
            + self.emission_factor_total
    }

    /// First-layer entries as `(key, value)` pairs.
    pub fn driver_entries(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("e".to_string(), self.energy_intensity),
            ("p".to_string(), self.household_size),
            ("g".to_string(), self.gdp_per_capita),
            ("s".to_string(), self.expenditure_share),
            ("k".to_string(), self.emission_factor_total),
        ];
        for (i, end_use) in self.end_uses.iter().enumerate() {
            out.push((format!("k_{}", end_use.id), self.emission_factor[i]));
        }
        out
    }
}

/// First-layer decomposition of the intensity change between two states.
pub fn lmdi_first_layer(
    period: (i32, i32),
    state_0: &FactorState,
    state_t: &FactorState,
) -> Result<LmdiTable> {
    if state_0.end_uses != state_t.end_uses {
        return Err(Error::MismatchedEndUses {
            left: state_0
                .end_uses
                .iter()
                .map(|u| u.id.as_str())
                .collect::<Vec<_>>()
                .join(","),
            right: state_t
                .end_uses
                .iter()
                .map(|u| u.id.as_str())
                .collect::<Vec<_>>()
                .join(","),
        });
    }
    let mut flags = Vec::new();
    let m = state_0.end_use_count();

    let p_0 = substituted(state_0.household_size, "p", &mut flags);
    let p_t = substituted(state_t.household_size, "p", &mut flags);
    let g_0 = substituted(state_0.gdp_per_capita, "g", &mut flags);
    let g_t = substituted(state_t.gdp_per_capita, "g", &mut flags);
    let s_0 = substituted(state_0.expenditure_share, "s", &mut flags);
    let s_t = substituted(state_t.expenditure_share, "s", &mut flags);
    for (name, v_0, v_t) in [
        ("p", p_0, p_t),
        ("g", g_0, g_t),
        ("s", s_0, s_t),
    ] {
        if !v_0.is_finite() || !v_t.is_finite() {
            return Err(Error::NonpositiveFactor {
                factor: name.to_string(),
            });
        }
    }

    let ln_p = (p_t / p_0).ln();
    let ln_g = (g_t / g_0).ln();
    let ln_s = (s_t / s_0).ln();

    let mut household_size = 0.0;
    let mut gdp_per_capita = 0.0;
    let mut expenditure_share = 0.0;
    let mut energy_intensity = 0.0;
    let mut emission_factor_total = 0.0;

    for i in 0..m {
        let id = &state_0.end_uses[i].id;
        let c_0 = substituted(state_0.end_use_intensity[i], &format!("c_{id}"), &mut flags);
        let c_t = substituted(state_t.end_use_intensity[i], &format!("c_{id}"), &mut flags);
        let weight = log_mean(c_t, c_0)?;
        let e_0 = substituted(
            state_0.end_use_energy_intensity[i],
            &format!("e_{id}"),
            &mut flags,
        );
        let e_t = substituted(
            state_t.end_use_energy_intensity[i],
            &format!("e_{id}"),
            &mut flags,
        );
        let k_0 = substituted(state_0.emission_factor[i], &format!("k_{id}"), &mut flags);
        let k_t = substituted(state_t.emission_factor[i], &format!("k_{id}"), &mut flags);

        household_size += weight * ln_p;
        gdp_per_capita += weight * ln_g;
        expenditure_share += weight * ln_s;
        energy_intensity += weight * (e_t / e_0).ln();
        emission_factor_total += weight * (k_t / k_0).ln();
    }

    Ok(LmdiTable {
        period,
        end_uses: state_0.end_uses.clone(),
        delta_c: state_t.intensity - state_0.intensity,
        household_size,
        gdp_per_capita,
        expenditure_share,
        energy_intensity,
        emission_factor_total,
        emission_factor: vec![0.0; m],
        zero_substituted: flags,
    })
}

/// Second-layer split of the emission-factor effect across end uses, from
/// per-end-use intensities and emission factors at the two endpoints.
pub fn lmdi_second_layer_k(
    intensity_0: &[f64],
    intensity_t: &[f64],
    factor_0: &[f64],
    factor_t: &[f64],
) -> Result<Vec<f64>> {
    let m = intensity_0.len();
    if [intensity_t.len(), factor_0.len(), factor_t.len()] != [m, m, m] {
        return Err(Error::MismatchedEndUses {
            left: format!("{m} end uses"),
            right: format!(
                "{}/{}/{} values",
                intensity_t.len(),
                factor_0.len(),
                factor_t.len()
            ),
        });
    }
    let mut flags = Vec::new();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let c_0 = substituted(intensity_0[i], "c", &mut flags);
        let c_t = substituted(intensity_t[i], "c", &mut flags);
        let k_0 = substituted(factor_0[i], "k", &mut flags);
        let k_t = substituted(factor_t[i], "k", &mut flags);
        let weight = log_mean(c_t, c_0)?;
        out.push(weight * (k_t / k_0).ln());
    }
    Ok(out)
}

/// Both layers in one table.
pub fn lmdi_table(
    period: (i32, i32),
    state_0: &FactorState,
    state_t: &FactorState,
) -> Result<LmdiTable> {
    let mut table = lmdi_first_layer(period, state_0, state_t)?;
    table.emission_factor = lmdi_second_layer_k(
        &state_0.end_use_intensity,
        &state_t.end_use_intensity,
        &state_0.emission_factor,
        &state_t.emission_factor,
    )?;
    Ok(table)
}

/// Ordinary least squares of paired contributions, with sign agreement.
#[derive(Debug, Clone)]
pub struct RegressionStats {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Half-width of the 95% confidence interval on the slope.
    pub ci95_halfwidth: f64,
    pub n_points: usize,
    /// Pairs whose coordinates share a sign (or are both ~0).
    pub sign_agreement: usize,
}

/// Regress the oracle contributions on the engine contributions.
///
/// `x` are the engine values, `y` the oracle values, paired by driver and
/// period. Fails when fewer than two pairs exist or the abscissa carries no
/// variance.
pub fn compare_dsd_lmdi(x: &[f64], y: &[f64]) -> Result<RegressionStats> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: x.len().min(y.len()),
        });
    }
    let n = x.len();
    let nf = n as f64;
    let mean_x = x.iter().sum::<f64>() / nf;
    let mean_y = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = x[i] - mean_x;
        let dy = y[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let x_scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sxx <= nf * (x_scale * 1e-13).powi(2) {
        return Err(Error::DegenerateVariance);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let hat = intercept + slope * xi;
            (yi - hat) * (yi - hat)
        })
        .sum();
    let r_squared = if syy <= nf * (mean_y.abs() * 1e-13).powi(2) {
        1.0
    } else {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    let ci95_halfwidth = if n > 2 {
        let df = (n - 2) as f64;
        let se = (sse / df / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, df)
            .expect("valid dof")
            .inverse_cdf(0.975);
        t * se
    } else {
        // Two points fit exactly; no residual to quantify.
        0.0
    };
    let sign_agreement = x
        .iter()
        .zip(y)
        .filter(|(&xi, &yi)| xi * yi > 0.0 || (xi.abs() <= 1e-12 && yi.abs() <= 1e-12))
        .count();

    Ok(RegressionStats {
        slope,
        intercept,
        r_squared,
        ci95_halfwidth,
        n_points: n,
        sign_agreement,
    })
}
