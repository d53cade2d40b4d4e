//! Decarbonization metrics at six scales: per household, total, efficiency,
//! per capita, per floor area and per household expenditure.
//!
//! Decarbonization intensity for a window is the magnitude sum of the
//! *negative* driver contributions, taken at the aggregate granularity
//! (e, p, g, s, k, w). Scaling by the household stock gives total
//! decarbonization in MtCO2; dividing by window emissions gives efficiency.

use crate::dsd::ContributionTable;
use crate::error::{Error, Result};
use crate::model::CountrySeries;

/// Magnitude of the negative aggregate-driver contributions, kgCO2 per
/// household. Always non-negative.
pub fn decarb_intensity(table: &ContributionTable) -> f64 {
    -table
        .aggregates()
        .iter()
        .filter(|v| **v < 0.0)
        .sum::<f64>()
}

/// Total decarbonization in MtCO2 from a per-household intensity and a
/// household stock in millions.
pub fn total_decarb(dc_per_household: f64, households: f64) -> f64 {
    dc_per_household * households / 1000.0
}

/// Decarbonization efficiency: total decarbonization over the emissions of
/// the same window, both MtCO2. Values above one are possible and left to
/// the caller to flag.
pub fn decarb_efficiency(dc_total: f64, window_emissions: f64) -> Result<f64> {
    if window_emissions <= 0.0 || window_emissions.is_nan() {
        return Err(Error::ZeroEmissions);
    }
    Ok(dc_total / window_emissions)
}

/// One decomposed window (`year-1`, `year`]. Stock-dependent scales use the
/// end year's stocks: the decarbonization is realized in that year's stock.
#[derive(Debug, Clone)]
pub struct DecarbYear {
    pub year: i32,
    /// kgCO2 per household.
    pub dc_per_household: f64,
    /// MtCO2.
    pub dc_total: f64,
    /// Fraction of the year's emissions.
    pub efficiency: f64,
    /// kgCO2 per person.
    pub per_capita: f64,
    /// kgCO2 per m2; absent when the year lacks floor area.
    pub per_floor_area: Option<f64>,
    /// kgCO2 per thousand USD of household expenditure.
    pub per_hce: f64,
    /// Running MtCO2.
    pub cumulative_dc_total: f64,
    /// Running kgCO2 per household.
    pub cumulative_dc_per_household: f64,
}

/// Accumulation over one stage.
#[derive(Debug, Clone)]
pub struct DecarbStage {
    pub period: (i32, i32),
    /// Sum of yearly per-household intensities, kgCO2 per household.
    pub dc_per_household: f64,
    /// Sum of yearly totals, MtCO2.
    pub dc_total: f64,
    /// Stage decarbonization over stage emissions.
    pub efficiency: f64,
    /// Stage share of the horizon's cumulative total decarbonization.
    pub share_of_total: f64,
}

/// Horizon accumulation.
#[derive(Debug, Clone)]
pub struct DecarbTotals {
    pub period: (i32, i32),
    pub dc_per_household: f64,
    pub dc_total: f64,
    /// MtCO2 emitted over the decomposed windows.
    pub emissions: f64,
    pub efficiency: f64,
}

/// The six decarbonization scales per year and per stage.
#[derive(Debug, Clone)]
pub struct DecarbReport {
    pub country: String,
    pub years: Vec<DecarbYear>,
    pub stages: Vec<DecarbStage>,
    pub totals: DecarbTotals,
    /// Non-fatal conditions worth surfacing (missing floor area,
    /// above-unity efficiency).
    pub warnings: Vec<String>,
}

/// Build the multi-scale report from yearly tables aligned with the series.
///
/// `require_floor_area` turns missing floor area from a warning into
/// [`Error::MissingFloorArea`].
pub fn scale_report(
    tables: &[ContributionTable],
    series: &CountrySeries,
    stages: &[(i32, i32)],
    require_floor_area: bool,
) -> Result<DecarbReport> {
    if tables.is_empty() {
        return Err(Error::SchemaError(
            "no contribution tables to report on".to_string(),
        ));
    }
    for table in tables {
        if table.period.1 != table.period.0 + 1 {
            return Err(Error::SchemaError(format!(
                "scale report expects yearly tables, got {}-{}",
                table.period.0, table.period.1
            )));
        }
        if series.observation(table.period.1).is_none() {
            return Err(Error::UnknownYear(table.period.1));
        }
    }

    let mut warnings = Vec::new();
    let mut years = Vec::with_capacity(tables.len());
    let mut cumulative_total = 0.0;
    let mut cumulative_per_household = 0.0;
    let mut emissions_sum = 0.0;
    let mut missing_floor = Vec::new();

    for table in tables {
        let year = table.period.1;
        let obs = series.observation(year).expect("validated above");
        let dc_per_household = decarb_intensity(table);
        let dc_total = total_decarb(dc_per_household, obs.households);
        let year_emissions = obs.total_emissions();
        let efficiency = decarb_efficiency(dc_total, year_emissions)
            .map_err(|e| e.at_year(year))?;
        if efficiency > 1.0 {
            warnings.push(format!("efficiency above 1 in {year}: {efficiency:.3}"));
        }
        let per_floor_area = match obs.floor_area {
            Some(fa) => Some(1000.0 * dc_total / fa),
            None => {
                if require_floor_area {
                    return Err(Error::MissingFloorArea(year));
                }
                missing_floor.push(year);
                None
            }
        };
        cumulative_total += dc_total;
        cumulative_per_household += dc_per_household;
        emissions_sum += year_emissions;
        years.push(DecarbYear {
            year,
            dc_per_household,
            dc_total,
            efficiency,
            per_capita: 1000.0 * dc_total / obs.population,
            per_floor_area,
            per_hce: 1.0e6 * dc_total / obs.hce,
            cumulative_dc_total: cumulative_total,
            cumulative_dc_per_household: cumulative_per_household,
        });
    }
    if !missing_floor.is_empty() {
        warnings.push(format!(
            "floor area missing for {} year(s); per-floor-area scale omitted there",
            missing_floor.len()
        ));
    }

    let first_window = tables[0].period.0;
    let last_window = tables[tables.len() - 1].period.1;
    let horizon_efficiency = if emissions_sum > 0.0 {
        cumulative_total / emissions_sum
    } else {
        0.0
    };
    let totals = DecarbTotals {
        period: (first_window, last_window),
        dc_per_household: cumulative_per_household,
        dc_total: cumulative_total,
        emissions: emissions_sum,
        efficiency: horizon_efficiency,
    };

    let mut stage_rows = Vec::with_capacity(stages.len());
    for &(start, end) in stages {
        let mut dc_hh = 0.0;
        let mut dc_total = 0.0;
        let mut stage_emissions = 0.0;
        for row in &years {
            if row.year > start && row.year <= end {
                dc_hh += row.dc_per_household;
                dc_total += row.dc_total;
                stage_emissions += series
                    .observation(row.year)
                    .map(|o| o.total_emissions())
                    .unwrap_or(0.0);
            }
        }
        stage_rows.push(DecarbStage {
            period: (start, end),
            dc_per_household: dc_hh,
            dc_total,
            efficiency: if stage_emissions > 0.0 {
                dc_total / stage_emissions
            } else {
                0.0
            },
            share_of_total: if totals.dc_total > 0.0 {
                dc_total / totals.dc_total
            } else {
                0.0
            },
        });
    }

    Ok(DecarbReport {
        country: series.country.clone(),
        years,
        stages: stage_rows,
        totals,
        warnings,
    })
}
