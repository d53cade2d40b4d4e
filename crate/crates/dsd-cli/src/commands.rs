//! The four report commands. Each one loads a dataset, runs the relevant
//! core routines and writes CSV artifacts (plus JSON mirrors or SVG charts
//! when requested) into the output directory.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

use dsd_core::decarb::scale_report;
use dsd_core::dsd::{
    chain_decompositions, contribution_rates, decompose_period, ContributionTable,
    RateTable, DRIVER_LABELS,
};
use dsd_core::ingest::{load_csv, parse_key_values, DatasetManifest};
use dsd_core::lmdi::{compare_dsd_lmdi, lmdi_table};
use dsd_core::model::{intensity_series, CountrySeries, FactorSeries};
use dsd_core::scenario::{project_avoided, ScenarioParams};

use crate::output::{file_sha256, write_csv, write_json, Cell, Meta, Table};
use crate::svg::{emit_svg, ChartKind, ChartSpec, Series};
use crate::{Format, InputArgs, RangeArgs, ScenarioArgs};

struct LoadedInput {
    series: CountrySeries,
    input_sha256: String,
}

fn load(args: &InputArgs) -> Result<LoadedInput> {
    let manifest = DatasetManifest::from_file(&args.manifest)
        .with_context(|| format!("loading manifest {}", args.manifest.display()))?;
    if let Some(country) = &args.country {
        if country != &manifest.country {
            bail!(
                "--country {} does not match manifest country {}",
                country,
                manifest.country
            );
        }
    }
    let series = load_csv(&args.input, &manifest)
        .with_context(|| format!("loading {}", args.input.display()))?;
    let input_sha256 = file_sha256(&args.input)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    Ok(LoadedInput {
        series,
        input_sha256,
    })
}

fn parse_stages(raw: &str) -> Result<Vec<(i32, i32)>> {
    let mut out = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (a, b) = part
            .split_once('-')
            .with_context(|| format!("stage `{part}`: expected `start-end`"))?;
        out.push((
            a.trim().parse::<i32>().with_context(|| format!("bad year `{a}`"))?,
            b.trim().parse::<i32>().with_context(|| format!("bad year `{b}`"))?,
        ));
    }
    if out.is_empty() {
        bail!("--stages given but no stage windows parsed");
    }
    Ok(out)
}

struct Analysis {
    series: CountrySeries,
    factors: FactorSeries,
    range: (i32, i32),
    stages: Vec<(i32, i32)>,
    segments: usize,
    input_sha256: String,
}

fn prepare(input: &InputArgs, range: &RangeArgs) -> Result<Analysis> {
    if range.segments == 0 {
        bail!("--segments must be at least 1");
    }
    let loaded = load(input)?;
    let from = range.from.unwrap_or_else(|| loaded.series.first_year());
    let to = range.to.unwrap_or_else(|| loaded.series.last_year());
    if from >= to {
        bail!("--from {from} must precede --to {to}");
    }
    let series = loaded.series.slice(from, to)?;
    let factors = intensity_series(&series)?;
    let stages = match &range.stages {
        Some(raw) => parse_stages(raw)?,
        None => vec![(from, to)],
    };
    Ok(Analysis {
        series,
        factors,
        range: (from, to),
        stages,
        segments: range.segments,
        input_sha256: loaded.input_sha256,
    })
}

fn period_label(period: (i32, i32)) -> String {
    format!("{}-{}", period.0, period.1)
}

fn contribution_columns(table: &ContributionTable, with_gap: bool) -> Vec<String> {
    let mut cols = vec![
        "year_start".to_string(),
        "year_end".to_string(),
        "delta_c".to_string(),
    ];
    for (key, _) in DRIVER_LABELS {
        cols.push(key.to_string());
    }
    for end_use in &table.end_uses {
        cols.push(format!("k_{}", end_use.id));
    }
    for end_use in &table.end_uses {
        cols.push(format!("w_{}", end_use.id));
    }
    cols.push("residual".to_string());
    cols.push("segments".to_string());
    if with_gap {
        cols.push("yearly_sum_gap".to_string());
    }
    cols
}

fn contribution_row(table: &ContributionTable, gap: Option<f64>) -> Vec<Cell> {
    let mut row = vec![
        Cell::Int(table.period.0 as i64),
        Cell::Int(table.period.1 as i64),
        Cell::Num(table.delta_c),
    ];
    for v in table.aggregates() {
        row.push(Cell::Num(v));
    }
    for v in &table.emission_factor {
        row.push(Cell::Num(*v));
    }
    for v in &table.energy_structure {
        row.push(Cell::Num(*v));
    }
    row.push(Cell::Num(table.residual));
    row.push(Cell::Int(table.segments as i64));
    if let Some(gap) = gap {
        row.push(Cell::Num(gap));
    }
    row
}

fn rate_row(rates: &RateTable) -> Vec<Cell> {
    let mut row = vec![
        Cell::Int(rates.period.0 as i64),
        Cell::Int(rates.period.1 as i64),
        Cell::Num(rates.base_intensity),
        Cell::Num(rates.delta_c),
        Cell::Num(rates.energy_intensity),
        Cell::Num(rates.household_size),
        Cell::Num(rates.gdp_per_capita),
        Cell::Num(rates.expenditure_share),
        Cell::Num(rates.emission_factor.iter().sum()),
        Cell::Num(rates.energy_structure.iter().sum()),
    ];
    for v in &rates.emission_factor {
        row.push(Cell::Num(*v));
    }
    for v in &rates.energy_structure {
        row.push(Cell::Num(*v));
    }
    row
}

fn write_table(
    dir: &Path,
    stem: &str,
    table: &Table,
    meta: &Meta,
    format: Format,
) -> Result<()> {
    write_csv(dir, stem, table, meta)?;
    if format == Format::Json {
        write_json(dir, stem, table, meta)?;
    }
    Ok(())
}

/// `decompose`: yearly and stage driver contributions plus rates.
pub fn decompose(input: &InputArgs, range: &RangeArgs) -> Result<()> {
    let analysis = prepare(input, range)?;
    let chained = chain_decompositions(&analysis.factors, &analysis.stages, analysis.segments)?;
    let meta = Meta {
        segments: Some(analysis.segments),
        input_sha256: analysis.input_sha256.clone(),
        notes: vec![],
    };

    let mut yearly = Table::new(contribution_columns(&chained.yearly[0], false));
    for table in &chained.yearly {
        yearly.push(contribution_row(table, None));
    }
    write_table(&input.out, "contributions_yearly", &yearly, &meta, input.format)?;

    // Stage tables, with the direct-vs-summed gap, plus a horizon row when
    // the stages do not already cover the full range.
    let mut stage_tables: Vec<(ContributionTable, f64)> = chained
        .stages
        .iter()
        .map(|s| (s.table.clone(), s.yearly_sum_gap))
        .collect();
    if !analysis.stages.contains(&analysis.range) {
        let horizon = decompose_period(
            analysis.range,
            analysis.factors.state(analysis.range.0).expect("range validated"),
            analysis.factors.state(analysis.range.1).expect("range validated"),
            analysis.segments,
        )?;
        let summed_gap = {
            let entries = horizon.driver_entries();
            let mut acc = vec![0.0; entries.len()];
            for table in &chained.yearly {
                for (i, (_, v)) in table.driver_entries().iter().enumerate() {
                    acc[i] += v;
                }
            }
            entries
                .iter()
                .zip(&acc)
                .map(|((_, direct), summed)| (direct - summed).abs())
                .fold(0.0, f64::max)
        };
        stage_tables.push((horizon, summed_gap));
    }
    let mut stages_out = Table::new(contribution_columns(&stage_tables[0].0, true));
    for (table, gap) in &stage_tables {
        stages_out.push(contribution_row(table, Some(*gap)));
    }
    write_table(&input.out, "contributions_stages", &stages_out, &meta, input.format)?;

    // Rates against the start-of-horizon intensity, so stage rates add up
    // to the horizon rate.
    let base_intensity = analysis
        .factors
        .state(analysis.range.0)
        .expect("range validated")
        .intensity;
    let mut rate_cols = vec![
        "year_start".to_string(),
        "year_end".to_string(),
        "base_c".to_string(),
        "delta_c_pct".to_string(),
    ];
    for (key, _) in DRIVER_LABELS {
        rate_cols.push(format!("{key}_pct"));
    }
    for end_use in &stage_tables[0].0.end_uses {
        rate_cols.push(format!("k_{}_pct", end_use.id));
    }
    for end_use in &stage_tables[0].0.end_uses {
        rate_cols.push(format!("w_{}_pct", end_use.id));
    }
    let mut rates_out = Table::new(rate_cols);
    for (table, _) in &stage_tables {
        rates_out.push(rate_row(&contribution_rates(table, base_intensity)?));
    }
    write_table(&input.out, "rates", &rates_out, &meta, input.format)?;

    if input.format == Format::Svg {
        let labels: Vec<String> = stage_tables
            .iter()
            .map(|(t, _)| period_label(t.period))
            .collect();
        let aggregate_series: Vec<Series> = DRIVER_LABELS
            .iter()
            .enumerate()
            .map(|(i, (_, label))| Series {
                name: label.to_string(),
                values: stage_tables.iter().map(|(t, _)| t.aggregates()[i]).collect(),
            })
            .collect();
        let fig3 = ChartSpec {
            title: format!("{}: driver contributions by stage", analysis.series.country),
            y_label: "kgCO2 per household".to_string(),
            x_labels: labels.clone(),
            series: aggregate_series,
            kind: ChartKind::StackedBar,
        };
        std::fs::write(input.out.join("fig3.svg"), emit_svg(&fig3))?;

        let end_use_series: Vec<Series> = stage_tables[0]
            .0
            .end_uses
            .iter()
            .enumerate()
            .map(|(i, end_use)| Series {
                name: end_use.label.clone(),
                values: stage_tables
                    .iter()
                    .map(|(t, _)| t.emission_factor[i])
                    .collect(),
            })
            .collect();
        let fig4 = ChartSpec {
            title: format!(
                "{}: emission-factor effects by end use",
                analysis.series.country
            ),
            y_label: "kgCO2 per household".to_string(),
            x_labels: labels,
            series: end_use_series,
            kind: ChartKind::StackedBar,
        };
        std::fs::write(input.out.join("fig4.svg"), emit_svg(&fig4))?;
    }
    Ok(())
}

/// `compare`: engine-vs-oracle contributions per stage and their regression.
pub fn compare(input: &InputArgs, range: &RangeArgs) -> Result<()> {
    let analysis = prepare(input, range)?;
    let chained = chain_decompositions(&analysis.factors, &analysis.stages, analysis.segments)?;
    let meta = Meta {
        segments: Some(analysis.segments),
        input_sha256: analysis.input_sha256.clone(),
        notes: vec![],
    };

    let mut pairs = Table::new(
        ["year_start", "year_end", "driver", "dsd", "lmdi"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    let mut engine_points = Vec::new();
    let mut oracle_points = Vec::new();
    for stage in &chained.stages {
        let (start, end) = stage.table.period;
        let state_0 = analysis.factors.state(start).expect("stage validated");
        let state_t = analysis.factors.state(end).expect("stage validated");
        let oracle = lmdi_table((start, end), state_0, state_t)?;

        let mut push = |driver: &str, engine: f64, oracle_v: f64| {
            engine_points.push(engine);
            oracle_points.push(oracle_v);
            pairs.push(vec![
                Cell::Int(start as i64),
                Cell::Int(end as i64),
                Cell::Text(driver.to_string()),
                Cell::Num(engine),
                Cell::Num(oracle_v),
            ]);
        };
        push("e", stage.table.energy_intensity, oracle.energy_intensity);
        push("p", stage.table.household_size, oracle.household_size);
        push("g", stage.table.gdp_per_capita, oracle.gdp_per_capita);
        push("s", stage.table.expenditure_share, oracle.expenditure_share);
        push(
            "k",
            stage.table.emission_factor_total(),
            oracle.emission_factor_total,
        );
        // Per-end-use split; the engine table may carry canonical padding
        // the oracle does not, so match by id.
        for (i, end_use) in stage.table.end_uses.iter().enumerate() {
            if let Some(j) = oracle.end_uses.iter().position(|u| u.id == end_use.id) {
                push(
                    &format!("k_{}", end_use.id),
                    stage.table.emission_factor[i],
                    oracle.emission_factor[j],
                );
            }
        }
    }
    write_table(&input.out, "comparison", &pairs, &meta, input.format)?;

    let stats = compare_dsd_lmdi(&engine_points, &oracle_points)?;
    let mut regression = Table::new(
        [
            "slope",
            "intercept",
            "r_squared",
            "ci95_halfwidth",
            "n_points",
            "sign_agreement",
            "sign_agreement_fraction",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    );
    regression.push(vec![
        Cell::Num(stats.slope),
        Cell::Num(stats.intercept),
        Cell::Num(stats.r_squared),
        Cell::Num(stats.ci95_halfwidth),
        Cell::Int(stats.n_points as i64),
        Cell::Int(stats.sign_agreement as i64),
        Cell::Num(stats.sign_agreement as f64 / stats.n_points as f64),
    ]);
    write_table(&input.out, "regression", &regression, &meta, input.format)?;
    Ok(())
}

/// `metrics`: the six decarbonization scales, yearly, per stage and total.
pub fn metrics(input: &InputArgs, range: &RangeArgs) -> Result<()> {
    let analysis = prepare(input, range)?;
    let chained = chain_decompositions(&analysis.factors, &analysis.stages, analysis.segments)?;
    let report = scale_report(&chained.yearly, &analysis.series, &analysis.stages, false)?;

    let meta = Meta {
        segments: Some(analysis.segments),
        input_sha256: analysis.input_sha256.clone(),
        notes: report.warnings.clone(),
    };
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }

    let mut out = Table::new(
        [
            "kind",
            "year_start",
            "year_end",
            "dc_per_household",
            "dc_total_mt",
            "efficiency",
            "per_capita",
            "per_floor_area",
            "per_hce",
            "cumulative_dc_total_mt",
            "cumulative_dc_per_household",
            "share_of_total",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    );
    for row in &report.years {
        out.push(vec![
            Cell::Text("year".to_string()),
            Cell::Int((row.year - 1) as i64),
            Cell::Int(row.year as i64),
            Cell::Num(row.dc_per_household),
            Cell::Num(row.dc_total),
            Cell::Num(row.efficiency),
            Cell::Num(row.per_capita),
            row.per_floor_area.map(Cell::Num).unwrap_or(Cell::Empty),
            Cell::Num(row.per_hce),
            Cell::Num(row.cumulative_dc_total),
            Cell::Num(row.cumulative_dc_per_household),
            Cell::Empty,
        ]);
    }
    for stage in &report.stages {
        out.push(vec![
            Cell::Text("stage".to_string()),
            Cell::Int(stage.period.0 as i64),
            Cell::Int(stage.period.1 as i64),
            Cell::Num(stage.dc_per_household),
            Cell::Num(stage.dc_total),
            Cell::Num(stage.efficiency),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Num(stage.share_of_total),
        ]);
    }
    out.push(vec![
        Cell::Text("total".to_string()),
        Cell::Int(report.totals.period.0 as i64),
        Cell::Int(report.totals.period.1 as i64),
        Cell::Num(report.totals.dc_per_household),
        Cell::Num(report.totals.dc_total),
        Cell::Num(report.totals.efficiency),
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
        Cell::Num(report.totals.dc_total),
        Cell::Num(report.totals.dc_per_household),
        Cell::Num(1.0),
    ]);
    write_table(&input.out, "decarb_report", &out, &meta, input.format)?;

    if input.format == Format::Svg {
        let fig6 = ChartSpec {
            title: format!("{}: decarbonization by year", analysis.series.country),
            y_label: "MtCO2".to_string(),
            x_labels: report.years.iter().map(|r| r.year.to_string()).collect(),
            series: vec![
                Series {
                    name: "annual".to_string(),
                    values: report.years.iter().map(|r| r.dc_total).collect(),
                },
                Series {
                    name: "cumulative".to_string(),
                    values: report
                        .years
                        .iter()
                        .map(|r| r.cumulative_dc_total)
                        .collect(),
                },
            ],
            kind: ChartKind::Line,
        };
        std::fs::write(input.out.join("fig6.svg"), emit_svg(&fig6))?;
    }
    Ok(())
}

/// `scenario`: avoided emissions at the horizon with intermediates.
pub fn scenario(args: &ScenarioArgs) -> Result<()> {
    let loaded = load(&args.input)?;
    let series = &loaded.series;

    // File values first, flag overrides on top.
    let mut kv: BTreeMap<String, String> = match &args.params {
        Some(path) => parse_key_values(
            &std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?,
        )?
        .into_iter()
        .collect(),
        None => BTreeMap::new(),
    };
    let mut set = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            kv.insert(key.to_string(), v);
        }
    };
    set("base_year", args.base_year.map(|v| v.to_string()));
    set("horizon_year", args.horizon_year.map(|v| v.to_string()));
    set(
        "households_target",
        args.households_target.map(|v| v.to_string()),
    );
    set(
        "energy_per_household_growth",
        args.energy_growth.map(|v| v.to_string()),
    );
    set("elec_rate_base", args.elec_rate_base.map(|v| v.to_string()));
    set(
        "elec_rate_target",
        args.elec_rate_target.map(|v| v.to_string()),
    );
    set("k_elec_base", args.k_elec_base.map(|v| v.to_string()));
    set("k_elec_target", args.k_elec_target.map(|v| v.to_string()));
    set("k_primary", args.k_primary.map(|v| v.to_string()));
    set(
        "thermal_share_base",
        args.thermal_share_base.map(|v| v.to_string()),
    );
    set(
        "thermal_share_target",
        args.thermal_share_target.map(|v| v.to_string()),
    );
    // A flag override supersedes any per-kWh variant from the file.
    if args.k_elec_base.is_some() {
        kv.remove("k_elec_base_per_kwh");
    }
    if args.k_elec_target.is_some() {
        kv.remove("k_elec_target_per_kwh");
    }
    kv.entry("base_year".to_string())
        .or_insert_with(|| series.last_year().to_string());

    let text: String = kv
        .iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect();
    let params = ScenarioParams::from_key_values(&text)?;
    let base = series
        .observation(params.base_year)
        .ok_or(dsd_core::Error::MissingBaseYear(params.base_year))?;
    let projection = project_avoided(&params, base)?;

    let meta = Meta {
        segments: None,
        input_sha256: loaded.input_sha256,
        notes: vec![
            "assumption-sensitive: the avoided total follows the blended-factor model \
             from the inputs above"
                .to_string(),
        ],
    };
    let mut out = Table::new(vec!["key".to_string(), "value".to_string()]);
    let mut push = |key: &str, cell: Cell| {
        out.push(vec![Cell::Text(key.to_string()), cell]);
    };
    push("country", Cell::Text(series.country.clone()));
    push("base_year", Cell::Int(params.base_year as i64));
    push("horizon_year", Cell::Int(params.horizon_year as i64));
    push(
        "households_target_million",
        Cell::Num(params.households_target),
    );
    push(
        "energy_per_household_growth",
        Cell::Num(params.energy_per_household_growth),
    );
    push("elec_rate_base", Cell::Num(params.elec_rate_base));
    push("elec_rate_target", Cell::Num(params.elec_rate_target));
    push("k_elec_base_kgco2_per_kgce", Cell::Num(params.k_elec_base));
    push(
        "k_elec_target_kgco2_per_kgce",
        Cell::Num(params.k_elec_target),
    );
    push("k_primary_kgco2_per_kgce", Cell::Num(params.k_primary));
    push(
        "thermal_share_base",
        params
            .thermal_share_base
            .map(Cell::Num)
            .unwrap_or(Cell::Empty),
    );
    push(
        "thermal_share_target",
        params
            .thermal_share_target
            .map(Cell::Num)
            .unwrap_or(Cell::Empty),
    );
    push(
        "energy_per_household_base_kgce",
        Cell::Num(projection.energy_per_household_base),
    );
    push(
        "energy_per_household_horizon_kgce",
        Cell::Num(projection.energy_per_household_horizon),
    );
    push("mix_factor_base", Cell::Num(projection.mix_factor_base));
    push("mix_factor_target", Cell::Num(projection.mix_factor_target));
    push("mix_factor_drop", Cell::Num(projection.mix_factor_drop));
    push("avoided_mtco2", Cell::Num(projection.avoided));
    write_table(&args.input.out, "scenario", &out, &meta, args.input.format)?;
    Ok(())
}
