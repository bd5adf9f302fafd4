//! Subcommand implementations.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde_json::json;

use inflatrim::gridsearch::{
    avg_rate_range_by_trim, best_trim, dm_vs_best, dm_vs_best_all, equivalence_set,
    inclusion_stats, prediction_range, sweep, top_k, TrimGrid, TrimSet,
};
use inflatrim::indices::{series as build_series, InflationSeries, SeriesKind, TrimSpec};
use inflatrim::panel::{apply_exclusions, load_panel, load_tags, validate, CategoryPanel};
use inflatrim::stats::{
    coef_variation, dm_test, regime_summary, rmse, rolling_std, sign_match, SampleSpec,
};
use inflatrim::trends::{trend, TrendSeries, TrendSpec};
use inflatrim::Month;

use crate::config::{parse_sample, parse_target, parse_trim, RunConfig};
use crate::output::{ensure_dir, fmt_opt, fmt_sig, CsvOut, Manifest};
use crate::synth::{gen_synthetic, gen_tags, SynthSpec};
use crate::{CliError, CommonArgs, DiagnosticsArgs, SeriesArgs, SynthArgs};

/// Merge the JSON config (if any) with command-line overrides.
fn merged_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &args.input {
        cfg.input_path = Some(p.clone());
    }
    if let Some(p) = &args.tags {
        cfg.tags_path = Some(p.clone());
    }
    if let Some(p) = &args.official {
        cfg.official_series_path = Some(p.clone());
    }
    if let Some(p) = &args.output_dir {
        cfg.output_dir = Some(p.clone());
    }
    if !args.exclusions.is_empty() {
        cfg.exclusions = args.exclusions.clone();
    }
    if !args.samples.is_empty() {
        cfg.samples = args
            .samples
            .iter()
            .map(|s| parse_sample(s))
            .collect::<Result<_, _>>()?;
    }
    if !args.targets.is_empty() {
        cfg.targets = args
            .targets
            .iter()
            .map(|s| parse_target(s))
            .collect::<Result<_, _>>()?;
    }
    if let Some(a) = args.alpha_max {
        cfg.grid.alpha_max = a;
    }
    if let Some(b) = args.beta_max {
        cfg.grid.beta_max = b;
    }
    if let Some(level) = args.dm_level {
        cfg.dm_level = level;
    }
    if !args.top_k.is_empty() {
        cfg.top_k = args.top_k.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Load the panel named by the config, attach tags, apply exclusions.
fn load_configured_panel(cfg: &RunConfig) -> Result<CategoryPanel, CliError> {
    let input = cfg
        .input_path
        .as_ref()
        .ok_or_else(|| CliError::Config("no input panel; pass --input or set input_path".into()))?;
    let file = fs::File::open(input)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", input.display())))?;
    let mut panel = load_panel(file)?;
    if let Some(tags_path) = &cfg.tags_path {
        let file = fs::File::open(tags_path)
            .map_err(|e| CliError::Config(format!("cannot open {}: {e}", tags_path.display())))?;
        panel = panel.with_tags(load_tags(file)?)?;
    }
    if !cfg.exclusions.is_empty() {
        let tags: BTreeSet<String> = cfg.exclusions.iter().cloned().collect();
        panel = apply_exclusions(&panel, &tags)?;
    }
    Ok(panel)
}

/// Samples from the config, defaulting to the full panel span.
fn resolved_samples(cfg: &RunConfig, panel: &CategoryPanel) -> Vec<SampleSpec> {
    if cfg.samples.is_empty() {
        vec![SampleSpec::new(panel.start_month(), panel.end_month())]
    } else {
        cfg.samples.clone()
    }
}

fn kind_slug(kind: &SeriesKind) -> String {
    match kind {
        SeriesKind::Trimmed(t) => format!("trimmed_{}_{}", t.alpha(), t.beta()),
        SeriesKind::Percentile(p) => format!("percentile_{:.0}", p * 100.0),
        other => other.label().to_string(),
    }
}

fn kind_fields(kind: &SeriesKind) -> (String, String, String) {
    match kind {
        SeriesKind::Trimmed(t) => (
            "trimmed".into(),
            t.alpha().to_string(),
            t.beta().to_string(),
        ),
        SeriesKind::Percentile(p) => (format!("percentile_{:.0}", p * 100.0), String::new(), String::new()),
        other => (other.label().to_string(), String::new(), String::new()),
    }
}

fn write_series_csv(
    dir: &Path,
    name: &str,
    series_list: &[InflationSeries],
) -> Result<crate::output::OutputEntry, CliError> {
    let mut csv = CsvOut::new(dir, name, "date,kind,alpha,beta,value_pct");
    for s in series_list {
        let (kind, alpha, beta) = kind_fields(&s.kind);
        for (month, v) in s.series.present() {
            csv.row(&[
                month.to_string(),
                kind.clone(),
                alpha.clone(),
                beta.clone(),
                fmt_sig(v),
            ]);
        }
    }
    csv.finish()
}

fn sample_label(sample: &SampleSpec) -> String {
    format!("{}_{}", sample.start, sample.end)
}

pub fn series(args: SeriesArgs) -> Result<(), CliError> {
    let cfg = merged_config(&args.common)?;
    let panel = load_configured_panel(&cfg)?;
    let kind = match args.kind.as_str() {
        "headline" => SeriesKind::Headline,
        "core" => SeriesKind::Core,
        "median" => SeriesKind::Median,
        "trimmed" => {
            let trim = match &args.trim {
                Some(s) => parse_trim(s)?,
                None => TrimSpec::official(),
            };
            SeriesKind::Trimmed(trim)
        }
        "percentile" => {
            let p = args
                .pct
                .ok_or_else(|| CliError::Config("--kind percentile needs --pct".into()))?;
            SeriesKind::Percentile(p)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown kind {other:?}; use headline|core|trimmed|median|percentile"
            )))
        }
    };
    let dir = cfg.resolved_output_dir();
    ensure_dir(&dir)?;
    let result = build_series(&panel, kind)?;
    let entry = write_series_csv(&dir, &format!("series_{}.csv", kind_slug(&kind)), &[result])?;
    let mut manifest = Manifest::new("series", &cfg);
    manifest.outputs.push(entry);
    manifest.write(&dir)
}

pub fn trend_cmd(args: CommonArgs) -> Result<(), CliError> {
    let cfg = merged_config(&args)?;
    let panel = load_configured_panel(&cfg)?;
    let headline = build_series(&panel, SeriesKind::Headline)?;
    let dir = cfg.resolved_output_dir();
    ensure_dir(&dir)?;
    let mut csv = CsvOut::new(&dir, "trends.csv", "date,kind,value_pct");
    for spec in &cfg.targets {
        let t = trend(&headline, spec)?;
        for (month, v) in t.series.present() {
            csv.row(&[month.to_string(), spec.label().to_string(), fmt_sig(v)]);
        }
    }
    let mut manifest = Manifest::new("trend", &cfg);
    manifest.outputs.push(csv.finish()?);
    manifest.write(&dir)
}

/// The series scored in evaluation reports: headline, both official trim
/// calibrations, and the median.
fn official_lineup(cfg: &RunConfig) -> Vec<SeriesKind> {
    let mut kinds = vec![SeriesKind::Headline];
    for trim in &cfg.official_trims {
        kinds.push(SeriesKind::Trimmed(*trim));
    }
    kinds.push(SeriesKind::Median);
    kinds
}

pub fn evaluate(args: CommonArgs) -> Result<(), CliError> {
    let cfg = merged_config(&args)?;
    let panel = load_configured_panel(&cfg)?;
    let samples = resolved_samples(&cfg, &panel);
    let dir = cfg.resolved_output_dir();
    ensure_dir(&dir)?;

    let headline = build_series(&panel, SeriesKind::Headline)?;
    let kinds = official_lineup(&cfg);
    let computed: Vec<InflationSeries> = kinds
        .iter()
        .map(|k| build_series(&panel, *k))
        .collect::<Result<_, _>>()?;
    let median_series = computed
        .iter()
        .find(|s| matches!(s.kind, SeriesKind::Median))
        .expect("median is in the lineup");

    let mut csv = CsvOut::new(
        &dir,
        "evaluation.csv",
        "target,sample_start,sample_end,series_kind,alpha,beta,rmse,dm_stat,dm_p",
    );
    for spec in &cfg.targets {
        let target = trend(&headline, spec)?;
        let bandwidth = cfg.dm_bandwidth_for(spec);
        for sample in &samples {
            for s in &computed {
                let r = rmse(s, &target, sample)?;
                // DM column: trimmed calibrations against the median
                let dm = if matches!(s.kind, SeriesKind::Trimmed(_)) {
                    let (_, e_trim) =
                        inflatrim::stats::aligned_errors(&s.series, &target.series, sample)?;
                    let (_, e_med) = inflatrim::stats::aligned_errors(
                        &median_series.series,
                        &target.series,
                        sample,
                    )?;
                    match dm_test(&e_trim, &e_med, bandwidth) {
                        Ok(r) => Some((r.statistic, r.p_value)),
                        Err(_) => Some((0.0, 1.0)),
                    }
                } else {
                    None
                };
                let (kind, alpha, beta) = kind_fields(&s.kind);
                csv.row(&[
                    spec.label().to_string(),
                    sample.start.to_string(),
                    sample.end.to_string(),
                    kind,
                    alpha,
                    beta,
                    fmt_sig(r),
                    fmt_opt(dm.map(|d| d.0)),
                    fmt_opt(dm.map(|d| d.1)),
                ]);
            }
        }
    }
    let mut manifest = Manifest::new("evaluate", &cfg);
    manifest.outputs.push(csv.finish()?);

    if let Some(official_path) = &cfg.official_series_path {
        let entry = replication_report(&dir, official_path, &computed)?;
        manifest.outputs.push(entry);
    }
    manifest.write(&dir)
}

/// Per-month absolute gaps between computed series and user-supplied
/// official values; a report, never an assertion.
fn replication_report(
    dir: &Path,
    official_path: &Path,
    computed: &[InflationSeries],
) -> Result<crate::output::OutputEntry, CliError> {
    let text = fs::read_to_string(official_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", official_path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().trim();
    if header != "date,kind,alpha,beta,value_pct" {
        return Err(CliError::Data(inflatrim::Error::MalformedRow {
            line: 1,
            reason: format!("official series header {header:?}"),
        }));
    }
    let mut csv = CsvOut::new(
        dir,
        "replication_gaps.csv",
        "date,kind,alpha,beta,computed,official,abs_gap",
    );
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CliError::Data(inflatrim::Error::MalformedRow {
                line: i as u64 + 2,
                reason: "expected 5 fields".into(),
            }));
        }
        let month: Month = fields[0].trim().parse().map_err(CliError::Data)?;
        let official: f64 = fields[4].trim().parse().map_err(|_| {
            CliError::Data(inflatrim::Error::MalformedRow {
                line: i as u64 + 2,
                reason: format!("bad value_pct {:?}", fields[4]),
            })
        })?;
        let matching = computed.iter().find(|s| {
            let (kind, alpha, beta) = kind_fields(&s.kind);
            kind == fields[1].trim() && alpha == fields[2].trim() && beta == fields[3].trim()
        });
        if let Some(s) = matching {
            if let Some(v) = s.series.get(month) {
                csv.row(&[
                    month.to_string(),
                    fields[1].trim().to_string(),
                    fields[2].trim().to_string(),
                    fields[3].trim().to_string(),
                    fmt_sig(v),
                    fmt_sig(official),
                    fmt_sig((v - official).abs()),
                ]);
            }
        }
    }
    csv.finish()
}

fn grid_for(
    panel: &CategoryPanel,
    headline: &InflationSeries,
    cfg: &RunConfig,
    spec: &TrendSpec,
    sample: &SampleSpec,
) -> Result<(TrimGrid, TrendSeries), CliError> {
    let target = trend(headline, spec)?;
    let grid = sweep(panel, &target, sample, cfg.grid.alpha_max, cfg.grid.beta_max)?;
    Ok((grid, target))
}

pub fn grid_cmd(args: CommonArgs) -> Result<(), CliError> {
    let cfg = merged_config(&args)?;
    let panel = load_configured_panel(&cfg)?;
    let samples = resolved_samples(&cfg, &panel);
    let dir = cfg.resolved_output_dir();
    ensure_dir(&dir)?;

    let headline = build_series(&panel, SeriesKind::Headline)?;
    let mut manifest = Manifest::new("grid", &cfg);
    let mut best_csv = CsvOut::new(
        &dir,
        "best_trims.csv",
        "target,sample_start,sample_end,alpha,beta,rmse,official_min_rmse,official_min_kind,dm_p_vs_official,equivalence_set_size",
    );
    for spec in &cfg.targets {
        let bandwidth = cfg.dm_bandwidth_for(spec);
        for sample in &samples {
            let (grid, _) = grid_for(&panel, &headline, &cfg, spec, sample)?;
            let (best, best_rmse) = best_trim(&grid);
            let best_cell = grid.cell(best).expect("best cell");

            let mut heatmap = CsvOut::new(
                &dir,
                &format!("heatmap_{}_{}.csv", spec.label(), sample_label(sample)),
                "alpha,beta,rmse,relative_rmse,dm_p_vs_best",
            );
            let outcomes = dm_vs_best_all(&grid, bandwidth);
            for (cell, (_, p, _)) in grid.cells().iter().zip(&outcomes) {
                heatmap.row(&[
                    cell.trim.alpha().to_string(),
                    cell.trim.beta().to_string(),
                    fmt_sig(cell.rmse),
                    fmt_sig(cell.rmse / best_rmse),
                    fmt_sig(*p),
                ]);
            }
            manifest.outputs.push(heatmap.finish()?);

            // official comparison: the better of the official trims and
            // the median, DM-tested against the best cell
            let mut official: Vec<(String, f64, TrimSpec)> = cfg
                .official_trims
                .iter()
                .filter_map(|t| {
                    grid.cell(*t)
                        .map(|c| (format!("trimmed{t}"), c.rmse, *t))
                })
                .collect();
            if let Some(median_cell) = grid.cell(TrimSpec::median()) {
                official.push(("median".into(), median_cell.rmse, TrimSpec::median()));
            }
            let (official_kind, official_rmse, official_trim) = official
                .into_iter()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or_else(|| CliError::Config("grid excludes all official trims".into()))?;
            let official_cell = grid.cell(official_trim).expect("official cell");
            let (_, official_p, _) = dm_vs_best(official_cell, best_cell, bandwidth);

            let eq = equivalence_set(&grid, cfg.dm_level, bandwidth);
            best_csv.row(&[
                spec.label().to_string(),
                sample.start.to_string(),
                sample.end.to_string(),
                best.alpha().to_string(),
                best.beta().to_string(),
                fmt_sig(best_rmse),
                fmt_sig(official_rmse),
                official_kind,
                fmt_sig(official_p),
                eq.members.len().to_string(),
            ]);
        }
    }
    manifest.outputs.push(best_csv.finish()?);
    manifest.write(&dir)
}

pub fn ranges(args: CommonArgs) -> Result<(), CliError> {
    let cfg = merged_config(&args)?;
    let panel = load_configured_panel(&cfg)?;
    let samples = resolved_samples(&cfg, &panel);
    let dir = cfg.resolved_output_dir();
    ensure_dir(&dir)?;

    let headline = build_series(&panel, SeriesKind::Headline)?;
    let mut manifest = Manifest::new("ranges", &cfg);
    let mut avg_notes = serde_json::Map::new();
    for spec in &cfg.targets {
        let bandwidth = cfg.dm_bandwidth_for(spec);
        for sample in &samples {
            let (grid, _) = grid_for(&panel, &headline, &cfg, spec, sample)?;
            let mut sets: Vec<TrimSet> = vec![equivalence_set(&grid, cfg.dm_level, bandwidth)];
            for &k in &cfg.top_k {
                sets.push(top_k(&grid, k.min(grid.len()))?);
            }
            let mut csv = CsvOut::new(
                &dir,
                &format!("ranges_{}_{}.csv", spec.label(), sample_label(sample)),
                "date,min_pct,max_pct,set_criterion",
            );
            for set in &sets {
                let range = prediction_range(&panel, set, sample)?;
                for (month, (lo, hi)) in range.months.iter().zip(&range.bounds) {
                    csv.row(&[
                        month.to_string(),
                        fmt_sig(*lo),
                        fmt_sig(*hi),
                        set.criterion.clone(),
                    ]);
                }
                avg_notes.insert(
                    format!("{}_{}_{}", spec.label(), sample_label(sample), set.criterion),
                    json!({
                        "members": set.members.len(),
                        "avg_range_pp": range.avg_range,
                    }),
                );
            }
            manifest.outputs.push(csv.finish()?);
        }
    }
    manifest.note("prediction_ranges", serde_json::Value::Object(avg_notes));
    manifest.write(&dir)
}

pub fn diagnostics(args: DiagnosticsArgs) -> Result<(), CliError> {
    let cfg = merged_config(&args.common)?;
    let panel = load_configured_panel(&cfg)?;
    let samples = resolved_samples(&cfg, &panel);
    let sample = samples[0];
    let dir = cfg.resolved_output_dir();
    ensure_dir(&dir)?;
    let inclusion_trim = match &args.trim {
        Some(s) => parse_trim(s)?,
        None => TrimSpec::official(),
    };

    let mut manifest = Manifest::new("diagnostics", &cfg);

    // panel validation report
    let report = validate(&panel);
    let mut vcsv = CsvOut::new(
        &dir,
        "validation.csv",
        "date,n_positive_expenditure,n_zero_change,zero_change_share",
    );
    for row in &report.rows {
        vcsv.row(&[
            row.month.to_string(),
            row.positive_expenditure.to_string(),
            row.zero_change.to_string(),
            fmt_sig(row.zero_change_share),
        ]);
    }
    manifest.outputs.push(vcsv.finish()?);
    if !report.missing.is_empty() {
        let mut mcsv = CsvOut::new(&dir, "missing_cells.csv", "category_id,date,field");
        for cell in &report.missing {
            mcsv.row(&[
                cell.category.to_string(),
                cell.month.to_string(),
                cell.field.to_string(),
            ]);
        }
        manifest.outputs.push(mcsv.finish()?);
    }

    // series lineup; core only when the tag vocabulary supports it
    let mut kinds = official_lineup(&cfg);
    let vocabulary = panel.tag_vocabulary();
    if vocabulary.contains("food") && vocabulary.contains("energy") {
        kinds.insert(1, SeriesKind::Core);
    }
    let computed: Vec<InflationSeries> = kinds
        .iter()
        .map(|k| build_series(&panel, *k))
        .collect::<Result<_, _>>()?;
    let headline = &computed[0];

    let mut regime_csv = CsvOut::new(
        &dir,
        "regimes.csv",
        "series_kind,alpha,beta,regime,months,mean,sd,cov",
    );
    for s in &computed {
        let rows = regime_summary(
            &s.series.restrict(&sample),
            &headline.series.restrict(&sample),
            (2.5, 5.0),
        );
        let (kind, alpha, beta) = kind_fields(&s.kind);
        for row in rows {
            regime_csv.row(&[
                kind.clone(),
                alpha.clone(),
                beta.clone(),
                row.regime.clone(),
                row.months.to_string(),
                fmt_opt(row.mean),
                fmt_opt(row.sd),
                fmt_opt(row.cov),
            ]);
        }
    }
    manifest.outputs.push(regime_csv.finish()?);

    let mut sd_csv = CsvOut::new(&dir, "rolling_sd.csv", "date,kind,alpha,beta,sd");
    for s in &computed {
        let sd = rolling_std(&s.series, args.sd_window)?;
        let (kind, alpha, beta) = kind_fields(&s.kind);
        for (month, v) in sd.present() {
            sd_csv.row(&[
                month.to_string(),
                kind.clone(),
                alpha.clone(),
                beta.clone(),
                fmt_sig(v),
            ]);
        }
    }
    manifest.outputs.push(sd_csv.finish()?);

    // sign match and coefficient of variation per series, vs headline
    let mut summary = serde_json::Map::new();
    for s in &computed[1..] {
        let slug = kind_slug(&s.kind);
        if let Ok(frac) = sign_match(&s.series, &headline.series) {
            summary.insert(format!("sign_match_{slug}"), json!(frac));
        }
        if let Ok(cov) = coef_variation(&s.series, &sample) {
            summary.insert(format!("cov_{slug}"), json!(cov));
        }
    }
    manifest.note("summary", serde_json::Value::Object(summary));
    manifest.note("sample", json!(sample.to_string()));

    let stats = inclusion_stats(&panel, inclusion_trim, &sample)?;
    let mut inc_csv = CsvOut::new(
        &dir,
        "inclusion.csv",
        "category_id,included_frac,excl_low_frac,excl_high_frac",
    );
    for (id, s) in &stats {
        inc_csv.row(&[
            id.to_string(),
            fmt_sig(s.included),
            fmt_sig(s.excluded_low),
            fmt_sig(s.excluded_high),
        ]);
    }
    manifest.outputs.push(inc_csv.finish()?);
    manifest.note(
        "inclusion_trim",
        json!(format!("{inclusion_trim}")),
    );

    let spans = avg_rate_range_by_trim(&panel, &sample, cfg.grid.alpha_max, cfg.grid.beta_max)?;
    let mut span_csv = CsvOut::new(&dir, "rate_range_by_trim.csv", "alpha,beta,avg_range_pct");
    for (trim, span) in &spans {
        span_csv.row(&[
            trim.alpha().to_string(),
            trim.beta().to_string(),
            fmt_sig(*span),
        ]);
    }
    manifest.outputs.push(span_csv.finish()?);

    manifest.write(&dir)
}

pub fn synth(args: SynthArgs) -> Result<(), CliError> {
    if args.categories == 0 || args.months == 0 {
        return Err(CliError::Config(
            "categories and months must be positive".into(),
        ));
    }
    let start: Month = args
        .start
        .parse()
        .map_err(|e| CliError::Config(format!("--start: {e}")))?;
    let spec = SynthSpec {
        categories: args.categories,
        months: args.months,
        seed: args.seed,
        dispersion: args.dispersion,
        start,
    };
    let panel = gen_synthetic(&spec);
    fs::write(&args.out, panel)
        .map_err(|e| CliError::Internal(format!("write {}: {e}", args.out.display())))?;
    if let Some(tags_path) = &args.tags_out {
        fs::write(tags_path, gen_tags(args.categories))
            .map_err(|e| CliError::Internal(format!("write {}: {e}", tags_path.display())))?;
    }
    Ok(())
}
