//! File ingestion: dataset manifests, CSV loading/saving and synthetic
//! fixture generation.
//!
//! The on-disk layout is one CSV per country (UTF-8, comma-separated, `.`
//! decimal point, no thousands separators) with one row per year:
//!
//! ```text
//! year,P,H,GDP,HCE,FA,E_<id>...,C_<id>...
//! ```
//!
//! `FA` (floor area) is optional: either the whole column or individual
//! cells may be empty. A sidecar manifest in `key = value` form declares the
//! country id, the end uses, the expected year range and the units, which
//! must match the canonical set exactly; this tool never converts units.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{AnnualObservation, CountrySeries, EndUse, CANONICAL_END_USES};

/// Canonical unit token per scalar field.
pub const CANONICAL_UNITS: [(&str, &str); 7] = [
    ("P", "million_persons"),
    ("H", "million_households"),
    ("GDP", "million_usd"),
    ("HCE", "million_usd"),
    ("E", "mtce"),
    ("C", "mtco2"),
    ("FA", "million_m2"),
];

/// Parse `key = value` lines; `#` starts a comment, blank lines are skipped,
/// duplicate keys are rejected.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::SchemaError(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if out.insert(key.clone(), value).is_some() {
            return Err(Error::SchemaError(format!("duplicate key `{key}`")));
        }
    }
    Ok(out)
}

/// Sidecar description of one dataset file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub country: String,
    pub end_uses: Vec<EndUse>,
    /// Expected inclusive year span, checked against the data when present.
    pub year_range: Option<(i32, i32)>,
    /// CSV header overrides per scalar field (`column_P = pop`).
    pub columns: BTreeMap<String, String>,
}

impl DatasetManifest {
    /// Parse and validate a manifest. Unit declarations (`unit_P = ...`) are
    /// optional but must match the canonical token when given.
    pub fn from_text(text: &str) -> Result<Self> {
        let pairs = parse_key_values(text)?;
        let country = pairs
            .get("country")
            .ok_or_else(|| Error::SchemaError("manifest key `country` missing".to_string()))?
            .clone();
        if country.is_empty() {
            return Err(Error::SchemaError("empty country id".to_string()));
        }

        let end_uses_raw = pairs
            .get("end_uses")
            .ok_or_else(|| Error::SchemaError("manifest key `end_uses` missing".to_string()))?;
        let mut end_uses = Vec::new();
        for entry in end_uses_raw.split(',') {
            let entry = entry.trim();
            if entry.is_empty() {
                continue;
            }
            let (id, label) = match entry.split_once(':') {
                Some((id, label)) => (id.trim().to_string(), label.trim().to_string()),
                None => (entry.to_string(), entry.to_string()),
            };
            if id.is_empty() {
                return Err(Error::SchemaError("empty end-use id in manifest".to_string()));
            }
            end_uses.push(EndUse::new(id, label));
        }
        if end_uses.is_empty() {
            return Err(Error::SchemaError("no end uses declared".to_string()));
        }

        let year_range = match pairs.get("years") {
            None => None,
            Some(raw) => {
                let (a, b) = raw.split_once('-').ok_or_else(|| {
                    Error::SchemaError(format!("years `{raw}`: expected `start-end`"))
                })?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<i32>()
                        .map_err(|_| Error::SchemaError(format!("bad year `{v}`")))
                };
                Some((parse(a)?, parse(b)?))
            }
        };

        let mut columns = BTreeMap::new();
        for (key, value) in &pairs {
            if let Some(field) = key.strip_prefix("column_") {
                columns.insert(field.to_string(), value.clone());
            }
            if let Some(field) = key.strip_prefix("unit_") {
                let canonical = CANONICAL_UNITS
                    .iter()
                    .find(|(f, _)| *f == field)
                    .map(|(_, unit)| *unit)
                    .ok_or_else(|| {
                        Error::SchemaError(format!("unit declared for unknown field `{field}`"))
                    })?;
                if value != canonical {
                    return Err(Error::SchemaError(format!(
                        "unit `{value}` for `{field}` not accepted; expected `{canonical}`"
                    )));
                }
            }
        }

        Ok(DatasetManifest {
            country,
            end_uses,
            year_range,
            columns,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    fn header_for(&self, field: &str) -> String {
        self.columns
            .get(field)
            .cloned()
            .unwrap_or_else(|| field.to_string())
    }
}

/// Load and validate one country's data file against its manifest.
pub fn load_csv(path: &Path, manifest: &DatasetManifest) -> Result<CountrySeries> {
    let text = std::fs::read_to_string(path)?;
    load_csv_str(&text, manifest)
}

/// As [`load_csv`], from an in-memory string.
pub fn load_csv_str(text: &str, manifest: &DatasetManifest) -> Result<CountrySeries> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));

    let (_, header_line) = lines
        .next()
        .ok_or_else(|| Error::SchemaError("file has no header row".to_string()))?;
    let headers: Vec<&str> = header_line.split(',').map(str::trim).collect();

    // Expected columns: scalars (with manifest renames), then E_/C_ per end use.
    let mut expected: Vec<(String, String)> = Vec::new(); // (slot, header)
    for field in ["year", "P", "H", "GDP", "HCE"] {
        expected.push((field.to_string(), manifest.header_for(field)));
    }
    let fa_header = manifest.header_for("FA");
    for end_use in &manifest.end_uses {
        expected.push((format!("E:{}", end_use.id), format!("E_{}", end_use.id)));
    }
    for end_use in &manifest.end_uses {
        expected.push((format!("C:{}", end_use.id), format!("C_{}", end_use.id)));
    }

    let mut slot_index: BTreeMap<String, usize> = BTreeMap::new();
    for (slot, header) in &expected {
        let idx = headers.iter().position(|h| h == header).ok_or_else(|| {
            Error::SchemaError(format!("required column `{header}` missing from header"))
        })?;
        slot_index.insert(slot.clone(), idx);
    }
    let fa_index = headers.iter().position(|h| *h == fa_header);
    for (idx, header) in headers.iter().enumerate() {
        let known = expected.iter().any(|(_, h)| h == header) || Some(idx) == fa_index;
        if !known {
            return Err(Error::SchemaError(format!("unknown column `{header}`")));
        }
    }

    let mut observations = Vec::new();
    for (lineno, line) in lines {
        let row = lineno + 1; // 1-based, as an editor shows it
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != headers.len() {
            return Err(Error::ParseError {
                row,
                column: String::new(),
                message: format!("expected {} cells, got {}", headers.len(), cells.len()),
            });
        }
        let cell = |slot: &str| -> &str { cells[slot_index[slot]] };
        let parse_f64 = |slot: &str, header: &str| -> Result<f64> {
            cell(slot).parse::<f64>().map_err(|_| Error::ParseError {
                row,
                column: header.to_string(),
                message: format!("bad number `{}`", cell(slot)),
            })
        };

        let year = cell("year")
            .parse::<i32>()
            .map_err(|_| Error::ParseError {
                row,
                column: manifest.header_for("year"),
                message: format!("bad year `{}`", cell("year")),
            })?;
        let population = parse_f64("P", &manifest.header_for("P"))?;
        let households = parse_f64("H", &manifest.header_for("H"))?;
        let gdp = parse_f64("GDP", &manifest.header_for("GDP"))?;
        let hce = parse_f64("HCE", &manifest.header_for("HCE"))?;
        let floor_area = match fa_index {
            Some(idx) if !cells[idx].is_empty() => {
                Some(cells[idx].parse::<f64>().map_err(|_| Error::ParseError {
                    row,
                    column: fa_header.clone(),
                    message: format!("bad number `{}`", cells[idx]),
                })?)
            }
            _ => None,
        };
        let mut energy = Vec::with_capacity(manifest.end_uses.len());
        let mut emissions = Vec::with_capacity(manifest.end_uses.len());
        for end_use in &manifest.end_uses {
            energy.push(parse_f64(
                &format!("E:{}", end_use.id),
                &format!("E_{}", end_use.id),
            )?);
            emissions.push(parse_f64(
                &format!("C:{}", end_use.id),
                &format!("C_{}", end_use.id),
            )?);
        }
        observations.push(AnnualObservation {
            year,
            population,
            households,
            gdp,
            hce,
            energy,
            emissions,
            floor_area,
        });
    }

    let series = CountrySeries {
        country: manifest.country.clone(),
        end_uses: manifest.end_uses.clone(),
        observations,
    };
    series.validate()?;
    if let Some((from, to)) = manifest.year_range {
        if series.first_year() != from || series.last_year() != to {
            return Err(Error::SchemaError(format!(
                "manifest declares years {from}-{to}, file covers {}-{}",
                series.first_year(),
                series.last_year()
            )));
        }
    }
    Ok(series)
}

/// Serialize a series in the canonical column layout. `f64` values use
/// Rust's shortest round-trip formatting, so a reload reproduces every bit.
pub fn save_csv(series: &CountrySeries) -> String {
    let has_floor = series.observations.iter().any(|o| o.floor_area.is_some());
    let mut header = vec![
        "year".to_string(),
        "P".to_string(),
        "H".to_string(),
        "GDP".to_string(),
        "HCE".to_string(),
    ];
    if has_floor {
        header.push("FA".to_string());
    }
    for end_use in &series.end_uses {
        header.push(format!("E_{}", end_use.id));
    }
    for end_use in &series.end_uses {
        header.push(format!("C_{}", end_use.id));
    }
    let mut out = header.join(",");
    out.push('\n');
    for obs in &series.observations {
        let mut cells = vec![
            obs.year.to_string(),
            format!("{}", obs.population),
            format!("{}", obs.households),
            format!("{}", obs.gdp),
            format!("{}", obs.hce),
        ];
        if has_floor {
            cells.push(obs.floor_area.map(|v| format!("{v}")).unwrap_or_default());
        }
        for v in &obs.energy {
            cells.push(format!("{v}"));
        }
        for v in &obs.emissions {
            cells.push(format!("{v}"));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Manifest text matching [`save_csv`] output for the series.
pub fn manifest_for(series: &CountrySeries) -> String {
    let mut out = String::new();
    out.push_str(&format!("country = {}\n", series.country));
    out.push_str(&format!(
        "years = {}-{}\n",
        series.first_year(),
        series.last_year()
    ));
    let uses = series
        .end_uses
        .iter()
        .map(|u| format!("{}:{}", u.id, u.label))
        .collect::<Vec<_>>()
        .join(",");
    out.push_str(&format!("end_uses = {uses}\n"));
    for (field, unit) in CANONICAL_UNITS {
        if field == "FA" && !series.observations.iter().any(|o| o.floor_area.is_some()) {
            continue;
        }
        out.push_str(&format!("unit_{field} = {unit}\n"));
    }
    out
}

/// Geometric interpolation `a * (b/a)^x`; linear when either bound is zero.
fn glide(a: f64, b: f64, x: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        a * (b / a).powf(x)
    } else {
        a + (b - a) * x
    }
}

struct FixtureShape {
    population: (f64, f64),
    household_size: (f64, f64),
    gdp_per_capita: (f64, f64),
    /// Quadratic in x: s(x) = a + b*x + c*x^2, so it can dip before recovering.
    expenditure_share: (f64, f64, f64),
    energy_per_household: (f64, f64),
    floor_per_capita: (f64, f64),
    shares: (Vec<f64>, Vec<f64>),
    factors: (Vec<f64>, Vec<f64>),
}

/// Deterministic synthetic series: smooth log-linear factor trajectories
/// (rising GDP per capita, falling energy intensity and emission factors,
/// slow share drift) with a small seeded wiggle on top.
///
/// `m = 6` produces the full canonical end-use set on a large-emitter shape;
/// `m <= 5` drops space heating (the tropical-country case) and takes the
/// first `m` of the remaining canonical uses. Requires `years >= 2` and
/// `1 <= m <= 6`.
pub fn generate_fixture(seed: u64, years: usize, m: usize) -> CountrySeries {
    assert!(years >= 2, "need at least two years");
    assert!((1..=6).contains(&m), "end-use count out of range");

    let canonical: Vec<EndUse> = CANONICAL_END_USES
        .iter()
        .map(|(id, label)| EndUse::new(*id, *label))
        .collect();
    let (end_uses, shape) = if m == 6 {
        let shape = FixtureShape {
            population: (1263.0, 1412.0),
            household_size: (3.61, 2.86),
            gdp_per_capita: (958.0, 2300.0),
            expenditure_share: (0.40, -0.02, 0.06),
            energy_per_household: (714.0, 1290.0),
            floor_per_capita: (22.0, 32.0),
            shares: (
                vec![0.04, 0.33, 0.20, 0.25, 0.06, 0.12],
                vec![0.06, 0.32, 0.20, 0.25, 0.03, 0.14],
            ),
            factors: (
                vec![2.5, 1.45, 1.25, 1.15, 2.5, 2.5],
                vec![1.96, 1.14, 0.98, 0.90, 1.96, 1.96],
            ),
        };
        (canonical, shape)
    } else {
        let mut uses: Vec<EndUse> = canonical
            .iter()
            .filter(|u| u.id != "space_heating")
            .cloned()
            .collect();
        uses.truncate(m);
        let base_shares = [0.05, 0.15, 0.50, 0.12, 0.18];
        let end_shares = [0.07, 0.15, 0.47, 0.10, 0.21];
        let base_factors = [3.1, 1.5, 1.7, 3.1, 3.1];
        let end_factors = [2.6, 1.4, 1.5, 2.6, 2.6];
        let norm = |v: &[f64]| -> Vec<f64> {
            let total: f64 = v[..m].iter().sum();
            v[..m].iter().map(|x| x / total).collect()
        };
        let shape = FixtureShape {
            population: (1057.0, 1396.0),
            household_size: (5.48, 4.62),
            gdp_per_capita: (443.0, 1150.0),
            expenditure_share: (0.60, -0.02, 0.04),
            energy_per_household: (500.0, 700.0),
            floor_per_capita: (10.0, 15.0),
            shares: (norm(&base_shares), norm(&end_shares)),
            factors: (base_factors[..m].to_vec(), end_factors[..m].to_vec()),
        };
        (uses, shape)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wiggle = |amp: f64| 1.0 + amp * rng.gen_range(-1.0..1.0);

    let span = (years - 1) as f64;
    let mut observations = Vec::with_capacity(years);
    for t in 0..years {
        let x = t as f64 / span;
        let population = glide(shape.population.0, shape.population.1, x) * wiggle(0.002);
        let household_size =
            glide(shape.household_size.0, shape.household_size.1, x) * wiggle(0.002);
        let gdp_per_capita =
            glide(shape.gdp_per_capita.0, shape.gdp_per_capita.1, x) * wiggle(0.002);
        let (s_a, s_b, s_c) = shape.expenditure_share;
        let expenditure_share = (s_a + s_b * x + s_c * x * x) * wiggle(0.002);
        let energy_per_household = glide(
            shape.energy_per_household.0,
            shape.energy_per_household.1,
            x,
        ) * wiggle(0.002);

        let households = population / household_size;
        let gdp = gdp_per_capita * population;
        let hce = expenditure_share * gdp;
        let total_energy = energy_per_household * households / 1000.0;

        let mut shares: Vec<f64> = shape
            .shares
            .0
            .iter()
            .zip(&shape.shares.1)
            .map(|(a, b)| (a + (b - a) * x) * wiggle(0.004))
            .collect();
        let share_sum: f64 = shares.iter().sum();
        for w in &mut shares {
            *w /= share_sum;
        }
        let factors: Vec<f64> = shape
            .factors
            .0
            .iter()
            .zip(&shape.factors.1)
            .map(|(a, b)| glide(*a, *b, x) * wiggle(0.004))
            .collect();

        let energy: Vec<f64> = shares.iter().map(|w| w * total_energy).collect();
        let emissions: Vec<f64> = energy.iter().zip(&factors).map(|(e, k)| e * k).collect();
        let floor_area =
            glide(shape.floor_per_capita.0, shape.floor_per_capita.1, x) * population;

        observations.push(AnnualObservation {
            year: 2000 + t as i32,
            population,
            households,
            gdp,
            hce,
            energy,
            emissions,
            floor_area: Some(floor_area),
        });
    }

    let series = CountrySeries {
        country: format!("synthetic_m{m}_seed{seed}"),
        end_uses,
        observations,
    };
    debug_assert!(series.validate().is_ok());
    series
}
