//! Domain types and the factor identity.
//!
//! Carbon intensity per household factors into six drivers:
//!
//! ```text
//! c = sum_i  e * k_i * w_i * p * g * s
//! ```
//!
//! where `e` is expenditure-related energy intensity (kgce/USD), `k_i` the
//! per-end-use emission factor (kgCO2/kgce), `w_i` the end-use share of
//! energy, `p` household size (persons/household), `g` GDP per capita
//! (USD/person) and `s` the household expenditure share of GDP.
//!
//! Raw annual records carry national aggregates in the units below; the
//! conversion constants between them are fixed here and nowhere else:
//!
//! | field        | unit               |
//! |--------------|--------------------|
//! | `population` | million persons    |
//! | `households` | million households |
//! | `gdp`, `hce` | million USD (nominal, as provided) |
//! | `energy`     | Mtce per end use   |
//! | `emissions`  | MtCO2 per end use  |
//! | `floor_area` | million m2         |
//!
//! Mt over millions leaves a factor of 1000, so `c [kgCO2/hh] = 1000 * C/H`
//! and `e_i [kgce/USD] = 1000 * E_i/HCE`, while `p`, `g`, `s` and `k_i` come
//! out of straight ratios.

use crate::error::{Error, Result};

/// Relative tolerance for the factor-identity self-check.
pub const IDENTITY_REL_TOL: f64 = 1e-9;

/// Tolerance on the energy shares summing to one.
pub const SHARE_SUM_TOL: f64 = 1e-12;

/// One end-use category (space cooling, cooking, ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EndUse {
    /// Short key used in file columns and driver names.
    pub id: String,
    /// Display name for reports.
    pub label: String,
}

impl EndUse {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        EndUse {
            id: id.into(),
            label: label.into(),
        }
    }
}

/// The canonical six end uses of residential building operations.
///
/// Datasets may declare any non-empty subset (e.g. tropical countries omit
/// space heating); decomposition tables are padded back to this set so table
/// shapes stay comparable across countries.
pub const CANONICAL_END_USES: [(&str, &str); 6] = [
    ("space_cooling", "Space cooling"),
    ("space_heating", "Space heating"),
    ("water_heating", "Water heating"),
    ("cooking", "Cooking"),
    ("lighting", "Lighting"),
    ("appliances_others", "Appliances and others"),
];

/// The canonical set as owned values.
pub fn canonical_end_uses() -> Vec<EndUse> {
    CANONICAL_END_USES
        .iter()
        .map(|(id, label)| EndUse::new(*id, *label))
        .collect()
}

/// Raw per-year country record. Per-end-use vectors are aligned with the
/// owning series' declared end-use list.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnualObservation {
    pub year: i32,
    /// Million persons.
    pub population: f64,
    /// Million households.
    pub households: f64,
    /// Million USD.
    pub gdp: f64,
    /// Million USD.
    pub hce: f64,
    /// Mtce per end use.
    pub energy: Vec<f64>,
    /// MtCO2 per end use.
    pub emissions: Vec<f64>,
    /// Million m2; `None` when the source does not report it.
    pub floor_area: Option<f64>,
}

impl AnnualObservation {
    /// Check the record's own invariants: positive denominators, non-negative
    /// energy/emissions, no emissions without energy, expenditure within GDP.
    pub fn validate(&self, end_uses: &[EndUse]) -> Result<()> {
        let check_pos = |name: &str, v: f64| -> Result<()> {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvariantViolation {
                    field: name.to_string(),
                    message: format!("must be strictly positive, got {v}"),
                });
            }
            Ok(())
        };
        check_pos("P", self.population)?;
        check_pos("H", self.households)?;
        check_pos("GDP", self.gdp)?;
        check_pos("HCE", self.hce)?;
        if self.hce > self.gdp {
            return Err(Error::InvariantViolation {
                field: "HCE".to_string(),
                message: format!("HCE {} exceeds GDP {}", self.hce, self.gdp),
            });
        }
        if self.energy.len() != end_uses.len() || self.emissions.len() != end_uses.len() {
            return Err(Error::InvariantViolation {
                field: "end_uses".to_string(),
                message: format!(
                    "expected {} end-use values, got E:{} C:{}",
                    end_uses.len(),
                    self.energy.len(),
                    self.emissions.len()
                ),
            });
        }
        for (i, end_use) in end_uses.iter().enumerate() {
            let (e, c) = (self.energy[i], self.emissions[i]);
            if e < 0.0 || !e.is_finite() {
                return Err(Error::InvariantViolation {
                    field: format!("E_{}", end_use.id),
                    message: format!("must be non-negative, got {e}"),
                });
            }
            if c < 0.0 || !c.is_finite() {
                return Err(Error::InvariantViolation {
                    field: format!("C_{}", end_use.id),
                    message: format!("must be non-negative, got {c}"),
                });
            }
            if e == 0.0 && c > 0.0 {
                return Err(Error::UndefinedEmissionFactor {
                    end_use: end_use.id.clone(),
                });
            }
        }
        if let Some(fa) = self.floor_area {
            check_pos("FA", fa)?;
        }
        Ok(())
    }

    /// Total emissions across end uses, MtCO2.
    pub fn total_emissions(&self) -> f64 {
        self.emissions.iter().sum()
    }

    /// Total energy across end uses, Mtce.
    pub fn total_energy(&self) -> f64 {
        self.energy.iter().sum()
    }
}

/// Identity factors derived from one annual record.
///
/// All per-end-use vectors are aligned with `end_uses`. Construction
/// guarantees the invariants: shares sum to one, and the product identity
/// reproduces `intensity` to [`IDENTITY_REL_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct FactorState {
    pub end_uses: Vec<EndUse>,
    /// c, kgCO2 per household.
    pub intensity: f64,
    /// c_i, kgCO2 per household per end use.
    pub end_use_intensity: Vec<f64>,
    /// p, persons per household.
    pub household_size: f64,
    /// g, USD per person.
    pub gdp_per_capita: f64,
    /// s = HCE/GDP, dimensionless.
    pub expenditure_share: f64,
    /// e, kgce per USD of household expenditure.
    pub energy_intensity: f64,
    /// e_i, kgce per USD per end use.
    pub end_use_energy_intensity: Vec<f64>,
    /// k_i, kgCO2 per kgce per end use (0 by convention for inactive uses).
    pub emission_factor: Vec<f64>,
    /// w_i, share of end use i in total energy.
    pub energy_share: Vec<f64>,
}

impl FactorState {
    /// Assemble a state from the independent factors, deriving the dependent
    /// ones (`e`, `w_i`, `c_i`, `c`). Mostly useful for synthetic cases.
    pub fn from_parts(
        end_uses: Vec<EndUse>,
        end_use_energy_intensity: Vec<f64>,
        emission_factor: Vec<f64>,
        household_size: f64,
        gdp_per_capita: f64,
        expenditure_share: f64,
    ) -> Result<Self> {
        let energy_intensity: f64 = end_use_energy_intensity.iter().sum();
        if energy_intensity <= 0.0 || energy_intensity.is_nan() {
            return Err(Error::ZeroEnergy);
        }
        let energy_share: Vec<f64> = end_use_energy_intensity
            .iter()
            .map(|e_i| e_i / energy_intensity)
            .collect();
        let end_use_intensity: Vec<f64> = end_use_energy_intensity
            .iter()
            .zip(&emission_factor)
            .map(|(e_i, k_i)| e_i * k_i * household_size * gdp_per_capita * expenditure_share)
            .collect();
        let intensity = end_use_intensity.iter().sum();
        Ok(FactorState {
            end_uses,
            intensity,
            end_use_intensity,
            household_size,
            gdp_per_capita,
            expenditure_share,
            energy_intensity,
            end_use_energy_intensity,
            emission_factor,
            energy_share,
        })
    }

    /// Number of end uses.
    pub fn end_use_count(&self) -> usize {
        self.end_uses.len()
    }

    /// Evaluate the product identity `sum_i e*k_i*w_i*p*g*s`.
    pub fn identity_intensity(&self) -> f64 {
        let base = self.energy_intensity
            * self.household_size
            * self.gdp_per_capita
            * self.expenditure_share;
        self.emission_factor
            .iter()
            .zip(&self.energy_share)
            .map(|(k, w)| base * k * w)
            .sum()
    }

    /// Reconstruct national emissions, MtCO2, from intensity and households.
    pub fn emissions_from_intensity(&self, households: f64) -> f64 {
        self.intensity * households / 1000.0
    }

    fn check_invariants(&self) -> Result<()> {
        let share_sum: f64 = self.energy_share.iter().sum();
        if (share_sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvariantViolation {
                field: "w".to_string(),
                message: format!("shares sum to {share_sum}, expected 1"),
            });
        }
        let identity = self.identity_intensity();
        let scale = self.intensity.abs().max(1.0);
        if (identity - self.intensity).abs() > IDENTITY_REL_TOL * scale {
            return Err(Error::InvariantViolation {
                field: "c".to_string(),
                message: format!(
                    "identity product {identity} disagrees with intensity {}",
                    self.intensity
                ),
            });
        }
        Ok(())
    }
}

/// Derive the identity factors from one raw record.
///
/// Inactive end uses (`E_i = C_i = 0`) get `e_i = w_i = 0` and, by
/// convention, `k_i = 0`; they contribute nothing to the identity and stay
/// exact zeros through every downstream decomposition.
pub fn derive_factors(obs: &AnnualObservation, end_uses: &[EndUse]) -> Result<FactorState> {
    obs.validate(end_uses)?;
    let total_energy = obs.total_energy();
    if total_energy <= 0.0 {
        return Err(Error::ZeroEnergy);
    }

    let household_size = obs.population / obs.households;
    let gdp_per_capita = obs.gdp / obs.population;
    let expenditure_share = obs.hce / obs.gdp;
    // Mt / million leaves a factor of 1000 (1e9 kg over 1e6 units).
    let intensity = 1000.0 * obs.total_emissions() / obs.households;
    let energy_intensity = 1000.0 * total_energy / obs.hce;

    let m = end_uses.len();
    let mut end_use_energy_intensity = Vec::with_capacity(m);
    let mut emission_factor = Vec::with_capacity(m);
    let mut energy_share = Vec::with_capacity(m);
    let mut end_use_intensity = Vec::with_capacity(m);
    for i in 0..m {
        let e_raw = obs.energy[i];
        end_use_energy_intensity.push(1000.0 * e_raw / obs.hce);
        emission_factor.push(if e_raw == 0.0 {
            0.0
        } else {
            obs.emissions[i] / e_raw
        });
        energy_share.push(e_raw / total_energy);
        end_use_intensity.push(1000.0 * obs.emissions[i] / obs.households);
    }

    let state = FactorState {
        end_uses: end_uses.to_vec(),
        intensity,
        end_use_intensity,
        household_size,
        gdp_per_capita,
        expenditure_share,
        energy_intensity,
        end_use_energy_intensity,
        emission_factor,
        energy_share,
    };
    state.check_invariants()?;
    Ok(state)
}

/// A validated per-country time series of annual records.
#[derive(Debug, Clone, PartialEq)]
pub struct CountrySeries {
    pub country: String,
    pub end_uses: Vec<EndUse>,
    /// Year-ordered, contiguous.
    pub observations: Vec<AnnualObservation>,
}

impl CountrySeries {
    /// Validate ordering, contiguity, end-use alignment and every record.
    pub fn validate(&self) -> Result<()> {
        if self.end_uses.is_empty() {
            return Err(Error::SchemaError("no end uses declared".to_string()));
        }
        let mut seen = std::collections::HashSet::new();
        for end_use in &self.end_uses {
            if end_use.id.is_empty() {
                return Err(Error::SchemaError("empty end-use id".to_string()));
            }
            if !seen.insert(end_use.id.as_str()) {
                return Err(Error::SchemaError(format!(
                    "duplicate end-use id `{}`",
                    end_use.id
                )));
            }
        }
        if self.observations.is_empty() {
            return Err(Error::SchemaError("series has no observations".to_string()));
        }
        for pair in self.observations.windows(2) {
            let (a, b) = (pair[0].year, pair[1].year);
            if b != a + 1 {
                return Err(if b <= a {
                    Error::SchemaError(format!("years not strictly increasing at {a} -> {b}"))
                } else {
                    Error::GapInYears(a + 1)
                });
            }
        }
        for obs in &self.observations {
            obs.validate(&self.end_uses)
                .map_err(|e| e.at_year(obs.year))?;
        }
        Ok(())
    }

    pub fn first_year(&self) -> i32 {
        self.observations.first().map(|o| o.year).unwrap_or(0)
    }

    pub fn last_year(&self) -> i32 {
        self.observations.last().map(|o| o.year).unwrap_or(0)
    }

    /// Observation for `year`, if present.
    pub fn observation(&self, year: i32) -> Option<&AnnualObservation> {
        let first = self.first_year();
        if year < first {
            return None;
        }
        self.observations.get((year - first) as usize)
    }

    /// Restrict to `[from, to]`, inclusive.
    pub fn slice(&self, from: i32, to: i32) -> Result<CountrySeries> {
        if from > to {
            return Err(Error::SchemaError(format!(
                "empty year range {from}..{to}"
            )));
        }
        for year in [from, to] {
            if self.observation(year).is_none() {
                return Err(Error::UnknownYear(year));
            }
        }
        let first = self.first_year();
        let lo = (from - first) as usize;
        let hi = (to - first) as usize;
        Ok(CountrySeries {
            country: self.country.clone(),
            end_uses: self.end_uses.clone(),
            observations: self.observations[lo..=hi].to_vec(),
        })
    }
}

/// Year-indexed factor states for one country.
#[derive(Debug, Clone)]
pub struct FactorSeries {
    pub country: String,
    pub end_uses: Vec<EndUse>,
    pub years: Vec<i32>,
    pub states: Vec<FactorState>,
}

impl FactorSeries {
    pub fn state(&self, year: i32) -> Option<&FactorState> {
        self.years
            .iter()
            .position(|&y| y == year)
            .map(|i| &self.states[i])
    }
}

/// Derive one [`FactorState`] per year of the series, order preserved.
/// Errors carry the offending year.
pub fn intensity_series(series: &CountrySeries) -> Result<FactorSeries> {
    series.validate()?;
    let mut years = Vec::with_capacity(series.observations.len());
    let mut states = Vec::with_capacity(series.observations.len());
    for obs in &series.observations {
        let state = derive_factors(obs, &series.end_uses).map_err(|e| e.at_year(obs.year))?;
        years.push(obs.year);
        states.push(state);
    }
    Ok(FactorSeries {
        country: series.country.clone(),
        end_uses: series.end_uses.clone(),
        years,
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_use() -> Vec<EndUse> {
        vec![EndUse::new("total", "Total")]
    }

    fn simple_obs() -> AnnualObservation {
        AnnualObservation {
            year: 2000,
            population: 1200.0,
            households: 400.0,
            gdp: 1_200_000.0,
            hce: 600_000.0,
            energy: vec![60.0],
            emissions: vec![120.0],
            floor_area: None,
        }
    }

    #[test]
    fn derive_factors_hand_example() {
        // p=3, g=1000, s=0.5, e=0.1, k=2, w=1 and c = 0.1*2*1*3*1000*0.5 = 300.
        let state = derive_factors(&simple_obs(), &one_use()).unwrap();
        assert!((state.household_size - 3.0).abs() < 1e-12);
        assert!((state.gdp_per_capita - 1000.0).abs() < 1e-12);
        assert!((state.expenditure_share - 0.5).abs() < 1e-12);
        assert!((state.energy_intensity - 0.1).abs() < 1e-12);
        assert!((state.emission_factor[0] - 2.0).abs() < 1e-12);
        assert!((state.energy_share[0] - 1.0).abs() < 1e-12);
        assert!((state.intensity - 300.0).abs() < 1e-9);
        assert!((state.identity_intensity() - 300.0).abs() < 1e-9);
    }

    #[test]
    fn inactive_end_use_gets_zero_factor() {
        let uses = vec![EndUse::new("a", "A"), EndUse::new("b", "B")];
        let mut obs = simple_obs();
        obs.energy = vec![60.0, 0.0];
        obs.emissions = vec![120.0, 0.0];
        let state = derive_factors(&obs, &uses).unwrap();
        assert_eq!(state.emission_factor[1], 0.0);
        assert_eq!(state.energy_share[1], 0.0);
        assert_eq!(state.end_use_energy_intensity[1], 0.0);
    }

    #[test]
    fn expenditure_equal_to_gdp_is_share_one() {
        let mut obs = simple_obs();
        obs.hce = obs.gdp;
        let state = derive_factors(&obs, &one_use()).unwrap();
        assert_eq!(state.expenditure_share, 1.0);
    }

    #[test]
    fn zero_total_energy_is_an_error() {
        let mut obs = simple_obs();
        obs.energy = vec![0.0];
        obs.emissions = vec![0.0];
        assert!(matches!(
            derive_factors(&obs, &one_use()),
            Err(Error::ZeroEnergy)
        ));
    }

    #[test]
    fn emissions_without_energy_rejected() {
        let mut obs = simple_obs();
        obs.energy = vec![0.0];
        obs.emissions = vec![5.0];
        assert!(matches!(
            derive_factors(&obs, &one_use()),
            Err(Error::UndefinedEmissionFactor { .. })
        ));
    }

    #[test]
    fn hce_above_gdp_rejected() {
        let mut obs = simple_obs();
        obs.hce = obs.gdp * 1.5;
        assert!(matches!(
            derive_factors(&obs, &one_use()),
            Err(Error::InvariantViolation { .. })
        ));
    }

    fn series_of(observations: Vec<AnnualObservation>) -> CountrySeries {
        CountrySeries {
            country: "test".to_string(),
            end_uses: one_use(),
            observations,
        }
    }

    #[test]
    fn intensity_series_preserves_order_and_constancy() {
        let mut obs = Vec::new();
        for year in 2000..2003 {
            let mut o = simple_obs();
            o.year = year;
            obs.push(o);
        }
        let out = intensity_series(&series_of(obs)).unwrap();
        assert_eq!(out.years, vec![2000, 2001, 2002]);
        assert_eq!(out.states.len(), 3);
        // Constant inputs give identical states.
        assert_eq!(out.states[0], out.states[1]);
        assert_eq!(out.states[1], out.states[2]);
    }

    #[test]
    fn intensity_series_names_offending_year() {
        let mut bad = simple_obs();
        bad.year = 2001;
        bad.energy = vec![0.0];
        bad.emissions = vec![0.0];
        let mut third = simple_obs();
        third.year = 2002;
        let series = series_of(vec![simple_obs(), bad, third]);
        let err = intensity_series(&series).unwrap_err();
        assert!(err.to_string().contains("2001"), "got: {err}");
    }

    #[test]
    fn gap_in_years_detected() {
        let mut late = simple_obs();
        late.year = 2002;
        let series = series_of(vec![simple_obs(), late]);
        assert!(matches!(series.validate(), Err(Error::GapInYears(2001))));
    }

    #[test]
    fn round_trip_emissions() {
        let obs = simple_obs();
        let state = derive_factors(&obs, &one_use()).unwrap();
        let reconstructed = state.emissions_from_intensity(obs.households);
        let total = obs.total_emissions();
        assert!((reconstructed - total).abs() <= 1e-9 * total.abs());
    }
}
