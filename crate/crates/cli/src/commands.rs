use std::path::Path;

use mcv_core::compositional::ilr;
use mcv_core::design::{validate_contrast, ContrastSpec, FactorLayout};
use mcv_core::estimation::{estimate, one_sample_ci, sample_moments};
use mcv_core::sim::{self, GroupMoments, MimicConfig, ScenarioResult, Study};
use mcv_core::tests_global::global_test;
use mcv_core::tests_multiple::{mct, MctMethod};
use mcv_core::{ContrastMatrix64, GroupedData64, Matrix64, RngStream, Target, TestMethod};

use crate::args::{DesignArgs, EstimateArgs, IlrArgs, MctArgs, MctMethodArg, SimulateArgs, TestArgs, TestMethodArg};
use crate::data::{read_contrast_grid, DataFile};
use crate::error::{CliError, CliResult, Context};
use crate::report::{
    write_csv, write_json, ContrastReport, ContrastRow, DataSummary, EstimateRow, Inputs, MctReport, RunReport,
};

fn data_summary(file: &DataFile, data: &GroupedData64) -> DataSummary {
    DataSummary {
        columns: file.columns.clone(),
        groups: data.labels().to_vec(),
        sizes: data.sizes().to_vec(),
        n: data.n(),
        d: data.d(),
    }
}

fn rows_of(m: &Matrix64) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn check_alpha(alpha: f64) -> CliResult<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(CliError::input(format!("--alpha must lie in [0, 1), got {alpha}")))
    }
}

pub fn cmd_estimate(args: &EstimateArgs) -> CliResult<()> {
    check_alpha(args.alpha)?;
    if args.alpha == 0.0 {
        return Err(CliError::input("--alpha must be positive for confidence intervals"));
    }
    let file = DataFile::read(&args.file)?;
    let samples = file.samples();
    let variants = args.variant.expand();
    let mut report = RunReport::new(
        "estimate",
        Inputs {
            file: Some(args.file.display().to_string()),
            variants: variants.iter().map(ToString::to_string).collect(),
            alpha: Some(args.alpha),
            ..Inputs::default()
        },
    );
    for (label, sample) in &samples {
        for &v in &variants {
            let ctx = || format!("group `{label}`, variant {v}");
            let e = estimate(v, sample).context(ctx)?;
            let (ci_c, ci_b) = one_sample_ci(v, sample, args.alpha).context(ctx)?;
            report.estimates.push(EstimateRow {
                group: label.clone(),
                variant: v.to_string(),
                n: e.n,
                c: e.c,
                b: e.b,
                var_c: e.var_c,
                var_b: e.var_b,
                c_lower: ci_c.lower,
                c_upper: ci_c.upper,
                b_lower: ci_b.lower,
                b_upper: ci_b.upper,
            });
        }
    }
    report.data = Some(DataSummary {
        columns: file.columns.clone(),
        groups: samples.iter().map(|(l, _)| l.clone()).collect(),
        sizes: samples.iter().map(|(_, s)| s.n()).collect(),
        n: file.values.rows(),
        d: file.values.cols(),
    });
    if let Some(t) = &args.table {
        write_csv(&report.estimates, Some(t))?;
    }
    write_json(&report, args.out.as_deref())
}

/// Resolved design inputs shared by `test` and `mct`.
struct Design {
    file: DataFile,
    data: GroupedData64,
    h: ContrastMatrix64,
    targets: Vec<Target>,
}

fn load_design(args: &DesignArgs, default_contrasts: &str) -> CliResult<Design> {
    check_alpha(args.alpha)?;
    let file = DataFile::read(&args.file)?;
    let data = file.grouped()?;
    if data.k() < 2 {
        return Err(CliError::input(format!("need at least 2 groups, found {}", data.k())));
    }
    let spec = args.contrasts.as_deref().unwrap_or(default_contrasts);
    let h = build_contrasts(spec, args.layout.as_deref(), &data)?;
    let targets = args
        .target
        .expand()
        .into_iter()
        .flat_map(|k| args.variant.expand().into_iter().map(move |v| Target::new(k, v)))
        .collect();
    Ok(Design { file, data, h, targets })
}

fn build_contrasts(spec: &str, layout: Option<&str>, data: &GroupedData64) -> CliResult<ContrastMatrix64> {
    let k = data.k();
    if let Some(path) = spec.strip_prefix("csv:") {
        let m = read_contrast_grid(Path::new(path))?;
        if m.cols() != k {
            return Err(CliError::input(format!("{path}: contrast matrix has {} columns for {k} groups", m.cols())));
        }
        return validate_contrast(m).context(|| path.to_string());
    }
    let parsed: ContrastSpec = spec.parse().context(|| "--contrasts".into())?;
    let layout: Option<FactorLayout> = layout.map(str::parse).transpose().context(|| "--layout".into())?;
    parsed.build(k, layout.as_ref()).context(|| format!("contrasts `{spec}`"))
}

fn design_inputs(args: &DesignArgs, default_contrasts: &str, method: String) -> Inputs {
    Inputs {
        file: Some(args.file.display().to_string()),
        variants: args.variant.expand().iter().map(ToString::to_string).collect(),
        targets: args.target.expand().iter().map(ToString::to_string).collect(),
        contrasts: Some(args.contrasts.clone().unwrap_or_else(|| default_contrasts.into())),
        layout: args.layout.clone(),
        method: Some(method),
        alpha: Some(args.alpha),
        resamples: Some(args.resamples),
        seed: Some(args.seed),
        ..Inputs::default()
    }
}

fn contrast_report(h: &ContrastMatrix64) -> ContrastReport {
    ContrastReport { labels: h.labels().to_vec(), matrix: rows_of(h.h()) }
}

pub fn cmd_test(args: &TestArgs) -> CliResult<()> {
    let d = &args.design;
    let design = load_design(d, "ksample")?;
    let method = match args.method {
        TestMethodArg::Asymptotic => TestMethod::Asymptotic,
        TestMethodArg::Permutation => TestMethod::Permutation,
        TestMethodArg::Bootstrap => TestMethod::Bootstrap,
    };
    let inputs = design_inputs(d, "ksample", method.to_string());
    let mut report = RunReport::new("test", inputs);
    for &target in &design.targets {
        let r = global_test(method, target, &design.data, &design.h, d.alpha, d.resamples, RngStream::new(d.seed, 0))
            .context(|| format!("target {target}"))?;
        report.tests.push(r);
    }
    if method != TestMethod::Asymptotic {
        report.seeds.push(d.seed);
    }
    report.data = Some(data_summary(&design.file, &design.data));
    report.contrasts = Some(contrast_report(&design.h));
    write_json(&report, d.out.as_deref())
}

pub fn cmd_mct(args: &MctArgs) -> CliResult<()> {
    let d = &args.design;
    let design = load_design(d, "tukey")?;
    let method = match args.method {
        MctMethodArg::Asymptotic => MctMethod::Asymptotic,
        MctMethodArg::Bootstrap => MctMethod::Bootstrap,
    };
    let draws = match method {
        MctMethod::Asymptotic => args.mc_draws,
        MctMethod::Bootstrap => d.resamples,
    };
    let mut inputs = design_inputs(d, "tukey", method.to_string());
    inputs.mc_draws = (method == MctMethod::Asymptotic).then_some(args.mc_draws);
    inputs.resamples = (method == MctMethod::Bootstrap).then_some(d.resamples);
    let mut report = RunReport::new("mct", inputs);
    let mut table = Vec::new();
    for &target in &design.targets {
        let r = mct(method, target, &design.data, &design.h, d.alpha, draws, RngStream::new(d.seed, 0))
            .context(|| format!("target {target}"))?;
        let rows: Vec<ContrastRow> = r
            .rows()
            .into_iter()
            .map(|row| ContrastRow {
                comparison: row.contrast,
                variant: target.variant.to_string(),
                target: target.kind.to_string(),
                method: method.to_string(),
                estimate: row.estimate,
                lower: row.lower,
                upper: row.upper,
                significant: row.decision,
            })
            .collect();
        table.extend(rows.iter().cloned());
        report.mct.push(MctReport {
            target: target.to_string(),
            method: method.to_string(),
            alpha: r.alpha,
            critical_value: r.critical_value,
            global_p: r.global_p,
            statistics: r.t.clone(),
            correlation: rows_of(&r.correlation),
            resamples_used: r.resamples_used,
            resamples_degenerate: r.resamples_degenerate,
            seed: r.seed,
            table: rows,
        });
    }
    report.seeds.push(d.seed);
    report.data = Some(data_summary(&design.file, &design.data));
    report.contrasts = Some(contrast_report(&design.h));
    if let Some(t) = &args.table {
        write_csv(&table, Some(t))?;
    }
    write_json(&report, d.out.as_deref())
}

fn mimic_from_data(path: &Path, null: bool, base: Option<&Study>) -> CliResult<Study> {
    let file = DataFile::read(path)?;
    let data = file.grouped()?;
    let moments_of = |label: &str, s: &mcv_core::Sample64| -> CliResult<(Vec<f64>, Matrix64)> {
        let m = sample_moments(s.values()).context(|| format!("group `{label}`"))?;
        Ok((m.mean, m.cov))
    };
    let pooled = if null { Some(moments_of("pooled", &mcv_core::Sample64::new(data.pooled().clone()))?) } else { None };
    let mut groups = Vec::with_capacity(data.k());
    for (g, label) in data.labels().iter().enumerate() {
        let (mu, sigma) = match &pooled {
            Some(p) => p.clone(),
            None => moments_of(label, &data.group(g))?,
        };
        groups.push(GroupMoments { label: label.clone(), mu, sigma, n: data.sizes()[g] });
    }
    let stem = path.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned());
    let name = if null { format!("{stem}-null") } else { stem };
    let settings = base.map(|s| s.settings().clone()).unwrap_or_default();
    Ok(Study::Mimic(MimicConfig { name, groups, settings }))
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut studies = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            sim::parse_config(&text).context(|| path.display().to_string())?
        }
        (None, Some(name)) => sim::preset(name).context(|| format!("preset `{name}`"))?,
        (None, None) if args.mimic_data.is_some() => Vec::new(),
        (None, None) => return Err(CliError::input("simulate needs --config, --preset or --mimic-data")),
    };
    if let Some(path) = &args.mimic_data {
        // Settings (tests, contrasts, variant, target) come from each study, if any.
        studies = if studies.is_empty() {
            vec![mimic_from_data(path, args.mimic_null, None)?]
        } else {
            studies
                .iter()
                .map(|s| {
                    let mut m = mimic_from_data(path, args.mimic_null, Some(s))?;
                    if let Study::Mimic(c) = &mut m {
                        c.name = format!("{}-{}", c.name, s.name());
                    }
                    Ok(m)
                })
                .collect::<CliResult<_>>()?
        };
    }
    for s in &mut studies {
        let name = s.name().to_string();
        let st = s.settings_mut();
        if let Some(v) = args.seed {
            st.seed = v;
        }
        if let Some(v) = args.replicates {
            st.replicates = v;
        }
        if let Some(v) = args.resamples {
            st.resamples = v;
        }
        if let Some(v) = args.alpha {
            st.alpha = v;
        }
        if let Some(v) = args.mc_draws {
            st.mc_draws = v;
        }
        st.validate().context(|| format!("study `{name}`"))?;
    }
    let total = studies.len();
    let mut results: Vec<ScenarioResult> = Vec::with_capacity(total);
    for (i, s) in studies.iter().enumerate() {
        let r = sim::run_study(s).context(|| format!("study `{}`", s.name()))?;
        eprintln!("[{}/{total}] {} ({:.1} s)", i + 1, s.name(), r.wall_clock_secs);
        results.push(r);
    }
    let rows: Vec<_> = results.iter().flat_map(ScenarioResult::rows).collect();
    write_csv(&rows, args.out.as_deref())?;
    if let Some(path) = &args.report {
        let mut seeds: Vec<u64> = studies.iter().map(|s| s.settings().seed).collect();
        seeds.dedup();
        let mut report = RunReport::new(
            "simulate",
            Inputs {
                file: args.mimic_data.as_ref().map(|p| p.display().to_string()),
                config: args.config.as_ref().map(|p| p.display().to_string()),
                preset: args.preset.clone(),
                seed: args.seed,
                resamples: args.resamples,
                alpha: args.alpha,
                mc_draws: args.mc_draws,
                ..Inputs::default()
            },
        );
        report.simulations = results;
        report.seeds = seeds;
        write_json(&report, Some(path))?;
    }
    Ok(())
}

pub fn cmd_ilr(args: &IlrArgs) -> CliResult<()> {
    let file = DataFile::read(&args.file)?;
    let d = file.values.cols();
    if d < 2 {
        return Err(CliError::input(format!("{}: compositions need at least 2 parts", args.file.display())));
    }
    let mut values = Vec::with_capacity(file.values.rows() * (d - 1));
    for i in 0..file.values.rows() {
        let z =
            ilr(file.values.row(i)).map_err(|e| CliError::input(format!("{}:{}: {e}", args.file.display(), i + 2)))?;
        values.extend(z);
    }
    let out = DataFile {
        columns: (1..d).map(|j| format!("z{j}")).collect(),
        groups: file.groups,
        values: Matrix64::from_vec(file.values.rows(), d - 1, values).context(|| "ilr".into())?,
    };
    let w = crate::report::sink(args.out.as_deref())?;
    out.write(w)
}
