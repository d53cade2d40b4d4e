//! The DSD decomposition engine.
//!
//! Changes in carbon intensity are attributed to drivers by integrating a
//! linear response system along the straight path between two factor states.
//! The endogenous vector is `[dc, dw_1..dw_m, dF]`: the intensity change,
//! the end-use share changes, and a slack term that keeps the shares summing
//! to one. The exogenous vector is `[de, dp, dg, ds, dk_1..dk_m, dF_1..dF_m]`:
//! increments of the factors plus one shift component per share.
//!
//! Per segment the system `A * dy = B * dz` is solved, where row one of `A`
//! carries the intensity equation (`dc - sum_i (dc/dw_i) dw_i = ...`), the
//! middle rows encode `dw_i - dF = dF_i`, and the last row pins
//! `sum_i dw_i = 0`. The contribution of exogenous column `j` is the first
//! row of `A^-1 * B * diag(dz)` accumulated over segments; summed over
//! columns this telescopes to the integrated intensity change, so the gap to
//! the observed change shrinks linearly in the segment count (first-order
//! Euler error).
//!
//! Shift components are calibrated to the observed share changes,
//! `dF_i = (w_i(T) - w_i(0)) / N`. Because shares sum to one at both
//! endpoints the realized slack is zero, yet each shift's isolated response
//! still includes the compensating slack `-dF_i/m` spread over all shares;
//! this is what the per-end-use structural columns report.

use crate::error::{Error, Result};
use crate::linalg::{LuSolver, Matrix};
use crate::model::{canonical_end_uses, EndUse, FactorState, FactorSeries, CANONICAL_END_USES};

/// Default segment count for one decomposed period.
pub const DEFAULT_SEGMENTS: usize = 16_000;

/// Aggregate driver keys and display labels, in reporting order.
pub const DRIVER_LABELS: [(&str, &str); 6] = [
    ("e", "Expenditure energy intensity"),
    ("p", "Household size"),
    ("g", "GDP per capita"),
    ("s", "Expenditure share"),
    ("k", "Emission factors"),
    ("w", "Energy structure"),
];

/// Exogenous column layout: `[de, dp, dg, ds, dk_1.., dF_1..]`.
const COL_E: usize = 0;
const COL_P: usize = 1;
const COL_G: usize = 2;
const COL_S: usize = 3;

/// Total factor changes between two states, in the fixed stacking order
/// `[de, dp, dg, ds, dk_1..dk_m, dF_1..dF_m]`.
#[derive(Debug, Clone)]
pub struct ExogenousDeltas {
    pub energy_intensity: f64,
    pub household_size: f64,
    pub gdp_per_capita: f64,
    pub expenditure_share: f64,
    pub emission_factor: Vec<f64>,
    /// Share shifts; these sum to ~0 because shares sum to one at both ends.
    pub share_shift: Vec<f64>,
}

impl ExogenousDeltas {
    /// Differences `state_t - state_0`. Fails when the end-use sets differ.
    pub fn between(state_0: &FactorState, state_t: &FactorState) -> Result<Self> {
        check_same_end_uses(state_0, state_t)?;
        Ok(ExogenousDeltas {
            energy_intensity: state_t.energy_intensity - state_0.energy_intensity,
            household_size: state_t.household_size - state_0.household_size,
            gdp_per_capita: state_t.gdp_per_capita - state_0.gdp_per_capita,
            expenditure_share: state_t.expenditure_share - state_0.expenditure_share,
            emission_factor: state_t
                .emission_factor
                .iter()
                .zip(&state_0.emission_factor)
                .map(|(t, z)| t - z)
                .collect(),
            share_shift: state_t
                .energy_share
                .iter()
                .zip(&state_0.energy_share)
                .map(|(t, z)| t - z)
                .collect(),
        })
    }

    /// Flatten into the fixed column order.
    pub fn stacked(&self) -> Vec<f64> {
        let m = self.emission_factor.len();
        let mut out = Vec::with_capacity(4 + 2 * m);
        out.push(self.energy_intensity);
        out.push(self.household_size);
        out.push(self.gdp_per_capita);
        out.push(self.expenditure_share);
        out.extend_from_slice(&self.emission_factor);
        out.extend_from_slice(&self.share_shift);
        out
    }
}

/// Coefficient matrices of the per-segment linear response system.
///
/// `a` is `(m+2) x (m+2)` over the endogenous `[dc, dw_1..dw_m, dF]`;
/// `b` is `(m+2) x (4+2m)` over the exogenous stacking order.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub a: Matrix,
    pub b: Matrix,
}

/// Build the response system at a given state.
pub fn build_system(state: &FactorState) -> SystemMatrices {
    let m = state.end_use_count();
    let mut a = Matrix::zeros(m + 2, m + 2);
    let mut b = Matrix::zeros(m + 2, 4 + 2 * m);
    fill_system(
        &mut a,
        &mut b,
        state.energy_intensity,
        state.household_size,
        state.gdp_per_capita,
        state.expenditure_share,
        &state.emission_factor,
        &state.energy_share,
    );
    SystemMatrices { a, b }
}

/// Populate `a` and `b` from the current factor values. Partial derivatives
/// of `c = sum_i e*k_i*w_i*p*g*s` are formed from products, never quotients,
/// so zero-valued factors stay harmless.
#[allow(clippy::too_many_arguments)]
fn fill_system(
    a: &mut Matrix,
    b: &mut Matrix,
    e: f64,
    p: f64,
    g: f64,
    s: f64,
    k: &[f64],
    w: &[f64],
) {
    let m = k.len();
    let n = m + 2;
    a.fill(0.0);
    b.fill(0.0);

    let sum_kw: f64 = k.iter().zip(w).map(|(k_i, w_i)| k_i * w_i).sum();
    let dc_de = sum_kw * p * g * s;
    let dc_dp = e * sum_kw * g * s;
    let dc_dg = e * sum_kw * p * s;
    let dc_ds = e * sum_kw * p * g;

    // Intensity equation.
    a[(0, 0)] = 1.0;
    for i in 0..m {
        a[(0, 1 + i)] = -(e * k[i] * p * g * s);
    }
    b[(0, COL_E)] = dc_de;
    b[(0, COL_P)] = dc_dp;
    b[(0, COL_G)] = dc_dg;
    b[(0, COL_S)] = dc_ds;
    for i in 0..m {
        b[(0, 4 + i)] = e * w[i] * p * g * s;
    }

    // Share equations: dw_i - dF = dF_i.
    for i in 0..m {
        a[(1 + i, 1 + i)] = 1.0;
        a[(1 + i, n - 1)] = -1.0;
        b[(1 + i, 4 + m + i)] = 1.0;
    }

    // Shares stay on the simplex: sum_i dw_i = 0.
    for i in 0..m {
        a[(n - 1, 1 + i)] = 1.0;
    }
}

/// Additive driver contributions to the intensity change over one period.
///
/// Per-end-use vectors are aligned with `end_uses`. When the input declares
/// a strict subset of the canonical six end uses, the table is padded back
/// to the canonical set with exact-zero rows so tables from different
/// countries share a shape.
#[derive(Debug, Clone)]
pub struct ContributionTable {
    /// `(year_start, year_end)`.
    pub period: (i32, i32),
    pub end_uses: Vec<EndUse>,
    /// Observed `c(end) - c(start)`, kgCO2 per household.
    pub delta_c: f64,
    /// Contribution of expenditure energy intensity (e).
    pub energy_intensity: f64,
    /// Contribution of household size (p).
    pub household_size: f64,
    /// Contribution of GDP per capita (g).
    pub gdp_per_capita: f64,
    /// Contribution of the expenditure share (s).
    pub expenditure_share: f64,
    /// Per-end-use emission-factor contributions (k_i).
    pub emission_factor: Vec<f64>,
    /// Per-end-use structural-change contributions (w_i).
    pub energy_structure: Vec<f64>,
    /// `delta_c` minus the sum of all contributions (integration error).
    pub residual: f64,
    /// Segment count used.
    pub segments: usize,
}

impl ContributionTable {
    /// Aggregate emission-factor effect (sum over end uses).
    pub fn emission_factor_total(&self) -> f64 {
        self.emission_factor.iter().sum()
    }

    /// Aggregate structural-change effect (sum over end uses).
    pub fn energy_structure_total(&self) -> f64 {
        self.energy_structure.iter().sum()
    }

    /// Sum of every driver contribution.
    pub fn contribution_sum(&self) -> f64 {
        self.energy_intensity
            + self.household_size
            + self.gdp_per_capita
            + self.expenditure_share
            + self.emission_factor_total()
            + self.energy_structure_total()
    }

    /// The six aggregate drivers in [`DRIVER_LABELS`] order.
    pub fn aggregates(&self) -> [f64; 6] {
        [
            self.energy_intensity,
            self.household_size,
            self.gdp_per_capita,
            self.expenditure_share,
            self.emission_factor_total(),
            self.energy_structure_total(),
        ]
    }

    /// Every reported driver as `(key, value)`, aggregates first, then
    /// per-end-use rows (`k_<id>`, `w_<id>`), in stored order.
    pub fn driver_entries(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("e".to_string(), self.energy_intensity),
            ("p".to_string(), self.household_size),
            ("g".to_string(), self.gdp_per_capita),
            ("s".to_string(), self.expenditure_share),
            ("k".to_string(), self.emission_factor_total()),
            ("w".to_string(), self.energy_structure_total()),
        ];
        for (i, end_use) in self.end_uses.iter().enumerate() {
            out.push((format!("k_{}", end_use.id), self.emission_factor[i]));
        }
        for (i, end_use) in self.end_uses.iter().enumerate() {
            out.push((format!("w_{}", end_use.id), self.energy_structure[i]));
        }
        out
    }

    /// All-zero table over the given end uses.
    pub fn zero(period: (i32, i32), end_uses: Vec<EndUse>, segments: usize) -> Self {
        let m = end_uses.len();
        ContributionTable {
            period,
            end_uses,
            delta_c: 0.0,
            energy_intensity: 0.0,
            household_size: 0.0,
            gdp_per_capita: 0.0,
            expenditure_share: 0.0,
            emission_factor: vec![0.0; m],
            energy_structure: vec![0.0; m],
            residual: 0.0,
            segments,
        }
    }

    fn add(&mut self, other: &ContributionTable) {
        debug_assert_eq!(self.end_uses.len(), other.end_uses.len());
        self.delta_c += other.delta_c;
        self.energy_intensity += other.energy_intensity;
        self.household_size += other.household_size;
        self.gdp_per_capita += other.gdp_per_capita;
        self.expenditure_share += other.expenditure_share;
        for (acc, v) in self.emission_factor.iter_mut().zip(&other.emission_factor) {
            *acc += v;
        }
        for (acc, v) in self
            .energy_structure
            .iter_mut()
            .zip(&other.energy_structure)
        {
            *acc += v;
        }
        self.residual += other.residual;
    }
}

fn check_same_end_uses(a: &FactorState, b: &FactorState) -> Result<()> {
    if a.end_uses != b.end_uses {
        let list = |state: &FactorState| {
            state
                .end_uses
                .iter()
                .map(|u| u.id.as_str())
                .collect::<Vec<_>>()
                .join(",")
        };
        return Err(Error::MismatchedEndUses {
            left: list(a),
            right: list(b),
        });
    }
    Ok(())
}

/// When the declared end uses are a strict subset of the canonical six,
/// return the declared index of each canonical slot (`None` = absent).
fn canonical_padding(end_uses: &[EndUse]) -> Option<Vec<Option<usize>>> {
    if end_uses.len() >= CANONICAL_END_USES.len() {
        return None;
    }
    let all_canonical = end_uses
        .iter()
        .all(|u| CANONICAL_END_USES.iter().any(|(id, _)| *id == u.id));
    if !all_canonical {
        return None;
    }
    Some(
        CANONICAL_END_USES
            .iter()
            .map(|(id, _)| end_uses.iter().position(|u| u.id == *id))
            .collect(),
    )
}

fn pad_to_canonical(values: &[f64], map: &[Option<usize>]) -> Vec<f64> {
    map.iter()
        .map(|slot| slot.map(|i| values[i]).unwrap_or(0.0))
        .collect()
}

/// Decompose the intensity change between two states into driver
/// contributions by `segments`-step path integration.
pub fn decompose_period(
    period: (i32, i32),
    state_0: &FactorState,
    state_t: &FactorState,
    segments: usize,
) -> Result<ContributionTable> {
    if segments == 0 {
        return Err(Error::InvalidSegments(segments));
    }
    let deltas = ExogenousDeltas::between(state_0, state_t)?;
    let m = state_0.end_use_count();
    let n = m + 2;
    let cols = 4 + 2 * m;

    let dz: Vec<f64> = deltas
        .stacked()
        .iter()
        .map(|d| d / segments as f64)
        .collect();

    // Path state: exogenous factors advance by dz, shares by the solved dw.
    let mut e = state_0.energy_intensity;
    let mut p = state_0.household_size;
    let mut g = state_0.gdp_per_capita;
    let mut s = state_0.expenditure_share;
    let mut k = state_0.emission_factor.clone();
    let mut w = state_0.energy_share.clone();

    let mut a = Matrix::zeros(n, n);
    let mut b = Matrix::zeros(n, cols);
    let mut solver = LuSolver::new(n);
    let mut unit = vec![0.0; n];
    unit[0] = 1.0;
    let mut row0 = vec![0.0; n]; // first row of A^-1
    let mut scratch = vec![0.0; n];
    let mut b_dz = vec![0.0; n];
    let mut dy = vec![0.0; n];
    let mut contributions = vec![0.0; cols];

    for _ in 0..segments {
        fill_system(&mut a, &mut b, e, p, g, s, &k, &w);
        solver.factor(&a)?;
        // First row of A^-1 via the transposed solve; the per-column
        // responses are then dot products against B's columns.
        solver.solve_transposed_into(&unit, &mut row0, &mut scratch);
        for (j, contribution) in contributions.iter_mut().enumerate() {
            if dz[j] != 0.0 {
                let mut response = 0.0;
                for r in 0..n {
                    response += row0[r] * b[(r, j)];
                }
                *contribution += response * dz[j];
            }
        }
        // Advance: endogenous responses to the full increment.
        b.mul_vec(&dz, &mut b_dz);
        solver.solve_into(&b_dz, &mut dy);
        e += dz[COL_E];
        p += dz[COL_P];
        g += dz[COL_G];
        s += dz[COL_S];
        for i in 0..m {
            k[i] += dz[4 + i];
            w[i] += dy[1 + i];
        }
        debug_assert!(
            dy[1..=m].iter().sum::<f64>().abs() <= 1e-10,
            "solved share increments must stay on the simplex"
        );
    }

    let delta_c = state_t.intensity - state_0.intensity;
    let mut emission_factor: Vec<f64> = contributions[4..4 + m].to_vec();
    let mut energy_structure: Vec<f64> = contributions[4 + m..].to_vec();
    let mut end_uses = state_0.end_uses.clone();
    if let Some(map) = canonical_padding(&end_uses) {
        emission_factor = pad_to_canonical(&emission_factor, &map);
        energy_structure = pad_to_canonical(&energy_structure, &map);
        end_uses = canonical_end_uses();
    }

    let mut table = ContributionTable {
        period,
        end_uses,
        delta_c,
        energy_intensity: contributions[COL_E],
        household_size: contributions[COL_P],
        gdp_per_capita: contributions[COL_G],
        expenditure_share: contributions[COL_S],
        emission_factor,
        energy_structure,
        residual: 0.0,
        segments,
    };
    table.residual = delta_c - table.contribution_sum();
    Ok(table)
}

/// One stage result: the direct endpoint decomposition plus its largest
/// per-driver disagreement with the sum of the yearly tables it spans.
#[derive(Debug, Clone)]
pub struct StageDecomposition {
    pub table: ContributionTable,
    /// `max_driver |direct - sum of yearly|`, kgCO2 per household. The two
    /// routes differ only through path dependence, so this stays a small
    /// fraction of `|delta_c|` on smooth series.
    pub yearly_sum_gap: f64,
}

/// Yearly and per-stage decompositions over a factor series.
#[derive(Debug, Clone)]
pub struct ChainedDecomposition {
    pub yearly: Vec<ContributionTable>,
    pub stages: Vec<StageDecomposition>,
}

impl ChainedDecomposition {
    /// Running sums of the yearly tables, one per year end.
    pub fn cumulative(&self) -> Vec<ContributionTable> {
        let mut out: Vec<ContributionTable> = Vec::with_capacity(self.yearly.len());
        let mut acc: Option<ContributionTable> = None;
        for table in &self.yearly {
            let mut next = match acc.take() {
                Some(prev) => prev,
                None => ContributionTable::zero(
                    (table.period.0, table.period.0),
                    table.end_uses.clone(),
                    table.segments,
                ),
            };
            next.add(table);
            next.period = (self.yearly[0].period.0, table.period.1);
            out.push(next.clone());
            acc = Some(next);
        }
        out
    }
}

fn sum_tables(period: (i32, i32), tables: &[ContributionTable]) -> ContributionTable {
    let mut acc = ContributionTable::zero(
        period,
        tables[0].end_uses.clone(),
        tables[0].segments,
    );
    for t in tables {
        acc.add(t);
    }
    acc.period = period;
    acc
}

/// Decompose every consecutive year pair plus the requested stages.
///
/// Stage tables come from direct decomposition of the stage endpoints; the
/// gap to the summed yearly route is attached for scrutiny rather than
/// hidden. Stage bounds must exist in the series, be ordered, and not
/// overlap (sharing a boundary year is fine).
pub fn chain_decompositions(
    series: &FactorSeries,
    stages: &[(i32, i32)],
    segments: usize,
) -> Result<ChainedDecomposition> {
    for &(start, end) in stages {
        for year in [start, end] {
            if series.state(year).is_none() {
                return Err(Error::UnknownYear(year));
            }
        }
        if start >= end {
            return Err(Error::SchemaError(format!(
                "stage {start}-{end} is not increasing"
            )));
        }
    }
    for pair in stages.windows(2) {
        if pair[1].0 < pair[0].1 {
            return Err(Error::SchemaError(format!(
                "stages {}-{} and {}-{} overlap",
                pair[0].0, pair[0].1, pair[1].0, pair[1].1
            )));
        }
    }

    let mut yearly = Vec::with_capacity(series.years.len().saturating_sub(1));
    for i in 0..series.years.len().saturating_sub(1) {
        let period = (series.years[i], series.years[i + 1]);
        let table = decompose_period(period, &series.states[i], &series.states[i + 1], segments)
            .map_err(|e| e.at_year(period.1))?;
        yearly.push(table);
    }

    let first_year = series.years.first().copied().unwrap_or(0);
    let mut stage_tables = Vec::with_capacity(stages.len());
    for &(start, end) in stages {
        let state_0 = series.state(start).expect("validated above");
        let state_t = series.state(end).expect("validated above");
        let table = decompose_period((start, end), state_0, state_t, segments)
            .map_err(|e| e.at_year(end))?;
        let lo = (start - first_year) as usize;
        let hi = (end - first_year) as usize;
        let summed = sum_tables((start, end), &yearly[lo..hi]);
        let gap = table
            .driver_entries()
            .iter()
            .zip(summed.driver_entries())
            .map(|((_, direct), (_, via_years))| (direct - via_years).abs())
            .fold(0.0, f64::max);
        stage_tables.push(StageDecomposition {
            table,
            yearly_sum_gap: gap,
        });
    }

    Ok(ChainedDecomposition {
        yearly,
        stages: stage_tables,
    })
}

/// Contribution rates: each driver as a percentage of a base intensity
/// (conventionally the start of the full analysis horizon, so per-stage
/// rates sum to the horizon rate).
#[derive(Debug, Clone)]
pub struct RateTable {
    pub period: (i32, i32),
    pub end_uses: Vec<EndUse>,
    /// kgCO2 per household.
    pub base_intensity: f64,
    /// Rate of the observed intensity change, percent.
    pub delta_c: f64,
    pub energy_intensity: f64,
    pub household_size: f64,
    pub gdp_per_capita: f64,
    pub expenditure_share: f64,
    pub emission_factor: Vec<f64>,
    pub energy_structure: Vec<f64>,
}

impl RateTable {
    /// Mirror of [`ContributionTable::driver_entries`], in percent.
    pub fn driver_entries(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("e".to_string(), self.energy_intensity),
            ("p".to_string(), self.household_size),
            ("g".to_string(), self.gdp_per_capita),
            ("s".to_string(), self.expenditure_share),
            ("k".to_string(), self.emission_factor.iter().sum()),
            ("w".to_string(), self.energy_structure.iter().sum()),
        ];
        for (i, end_use) in self.end_uses.iter().enumerate() {
            out.push((format!("k_{}", end_use.id), self.emission_factor[i]));
        }
        for (i, end_use) in self.end_uses.iter().enumerate() {
            out.push((format!("w_{}", end_use.id), self.energy_structure[i]));
        }
        out
    }
}

/// Convert contributions to percent of `base_intensity`.
pub fn contribution_rates(table: &ContributionTable, base_intensity: f64) -> Result<RateTable> {
    if base_intensity <= 0.0 || !base_intensity.is_finite() {
        return Err(Error::NonpositiveBase(base_intensity));
    }
    let pct = |v: f64| 100.0 * v / base_intensity;
    Ok(RateTable {
        period: table.period,
        end_uses: table.end_uses.clone(),
        base_intensity,
        delta_c: pct(table.delta_c),
        energy_intensity: pct(table.energy_intensity),
        household_size: pct(table.household_size),
        gdp_per_capita: pct(table.gdp_per_capita),
        expenditure_share: pct(table.expenditure_share),
        emission_factor: table.emission_factor.iter().map(|&v| pct(v)).collect(),
        energy_structure: table.energy_structure.iter().map(|&v| pct(v)).collect(),
    })
}
