use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use ptvar::estimator::{default_grid, CellInference};
use ptvar::experiments::{
    analyze, deseasonalize, ingest_csv, select_bandwidth_cv, write_trajectory_csv, ColumnMapping, SeriesFile,
};
use ptvar::mise::default_lambda_grid;
use ptvar::period::CvBandwidth;
use ptvar::process::Trajectory;
use ptvar::*;

use crate::output::{emit, field};
use crate::{
    AnalyzeArgs, Cli, Command, EstimateArgs, InputArgs, MiseScanArgs, ModelArgs, MonteCarloArgs, PeriodCvArgs,
    SimulateArgs, TestArgs,
};

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn f(x: f64) -> String {
    field(Some(x))
}

pub fn run(cli: &Cli) -> Result<()> {
    let out = cli.output.as_deref();
    match &cli.command {
        Command::Simulate(a) => simulate_cmd(a, cli.seed, out),
        Command::Estimate(a) => estimate_cmd(a, cli.seed, out),
        Command::MiseScan(a) => mise_scan_cmd(a, cli.seed, out),
        Command::Montecarlo(a) => montecarlo_cmd(a, cli.seed, out),
        Command::PeriodCv(a) => period_cv_cmd(a, cli.seed, out),
        Command::Test(a) => test_cmd(a, cli.seed, out),
        Command::Analyze(a) => analyze_cmd(a, cli.seed, out),
    }
}

fn base_metadata(command: &str, seed: u64) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

// ------------------------------------------------------------ parsing

struct Model {
    coeffs: CoefficientFamily,
    coef_id: String,
    noise: NoiseModel,
    path_seed: u64,
}

fn build_coefficients(spec: &str, period: usize, path_seed: u64) -> Result<(CoefficientFamily, String)> {
    if let Some(list) = spec.strip_prefix("const:") {
        let values = parse_list(list)?;
        let coeffs = CoefficientFamily::constant(&values)?;
        return Ok((coeffs, spec.to_string()));
    }
    let kind: TestFunctionKind = spec.parse()?;
    Ok((make_test_function(kind, period, path_seed)?, kind.to_string()))
}

fn build_model(args: &ModelArgs, seed: u64) -> Result<Model> {
    let path_seed = args.path_seed.unwrap_or(seed);
    let (coeffs, coef_id) = build_coefficients(&args.coef, args.period, path_seed)?;
    Ok(Model {
        coeffs,
        coef_id,
        noise: args.noise.parse()?,
        path_seed,
    })
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("`{v}` is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(bad("empty list"));
    }
    Ok(values)
}

fn parse_points(text: &str) -> Result<Vec<f64>> {
    if text.trim().eq_ignore_ascii_case("grid99") {
        return Ok(default_grid());
    }
    let points = parse_list(text)?;
    if let Some(u) = points.iter().find(|&&u| !(u > 0.0 && u < 1.0)) {
        return Err(bad(format!("evaluation point {u} is outside (0, 1)")));
    }
    Ok(points)
}

fn parse_seasons(text: &str, period: usize) -> Result<Vec<usize>> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok((1..=period).collect());
    }
    let s: usize = text.trim().parse().map_err(|_| bad(format!("bad season `{text}`")))?;
    if s == 0 || s > period {
        return Err(bad(format!("season {s} outside 1..={period}")));
    }
    Ok(vec![s])
}

fn load(input: &InputArgs) -> Result<SeriesFile> {
    let mapping = ColumnMapping {
        time: (!input.time_column.is_empty()).then(|| input.time_column.clone()),
        value: input.value_column.clone(),
    };
    ingest_csv(&input.input, &mapping)
}

fn input_metadata(series: &SeriesFile) -> Value {
    json!({
        "input": series.path,
        "rows_read": series.rows_read,
        "observations": series.len(),
        "dropped_lines": series.dropped_lines,
    })
}

// ------------------------------------------------------------ simulate

fn simulate_cmd(args: &SimulateArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let model = build_model(&args.model, seed)?;
    let traj = simulate(&model.coeffs, &model.noise, args.n, seed)?;
    let mut body = Vec::new();
    write_trajectory_csv(&mut body, &traj)?;
    let meta = merge(
        base_metadata("simulate", seed),
        json!({
            "coef": model.coef_id,
            "period": model.coeffs.period(),
            "noise": model.noise,
            "n": args.n,
            "path_seed": model.path_seed,
            "length": traj.len(),
        }),
    );
    emit(out, &String::from_utf8_lossy(&body), meta)
}

// ------------------------------------------------------------ estimate

fn choose_bandwidth(text: &str, traj: &Trajectory, kernel: &KernelModel) -> Result<(f64, Option<f64>)> {
    match text.trim() {
        "auto" => select_bandwidth_cv(traj, kernel).map(|(lambda, b)| (b, Some(lambda))),
        v => {
            let b: f64 = v.parse().map_err(|_| bad(format!("bad bandwidth `{v}`")))?;
            if !(b > 0.0 && b.is_finite()) {
                return Err(bad(format!("bandwidth must be positive, got {b}")));
            }
            Ok((b, None))
        }
    }
}

fn estimate_cmd(args: &EstimateArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let kernel: KernelModel = args.kernel.parse()?;
    if !(args.ci > 0.0 && args.ci < 1.0) {
        return Err(bad(format!("confidence level must lie in (0, 1), got {}", args.ci)));
    }
    let series = load(&args.input)?;
    let traj = Trajectory::from_series(series.values.clone(), args.period)?;
    let seasons = parse_seasons(&args.season, args.period)?;
    let points = parse_points(&args.u)?;
    let (b, lambda) = choose_bandwidth(&args.bandwidth, &traj, &kernel)?;
    let grid = asymptotic_ci(estimate_grid(&traj, &points, b, &kernel)?, args.ci)?;

    let mut body = String::from("s,u,a_hat,stderr,ci_lo,ci_hi\n");
    let mut clamped = 0;
    for &s in &seasons {
        for (i, &u) in points.iter().enumerate() {
            let inf: Option<CellInference> = grid.inference_at(s, i);
            clamped += inf.is_some_and(|c| c.clamped) as usize;
            let _ = writeln!(
                body,
                "{s},{u},{},{},{},{}",
                field(grid.a_hat(s, i)),
                field(inf.map(|c| c.stderr)),
                field(inf.map(|c| c.ci_lo)),
                field(inf.map(|c| c.ci_hi)),
            );
        }
    }
    let meta = merge(
        base_metadata("estimate", seed),
        merge(
            input_metadata(&series),
            json!({
                "period": args.period,
                "n": traj.n(),
                "kernel": kernel.name,
                "bandwidth": b,
                "lambda": lambda,
                "ci_level": args.ci,
                "degenerate_cells": grid.degenerate_cells(),
                "clamped_cells": clamped,
            }),
        ),
    );
    emit(out, &body, meta)
}

// ------------------------------------------------------------ mise-scan

fn mise_scan_cmd(args: &MiseScanArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let kernel: KernelModel = args.kernel.parse()?;
    let model = build_model(&args.model, seed)?;
    let traj = match &args.input {
        Some(path) => {
            let series = ingest_csv(path, &ColumnMapping::default())?;
            Trajectory::from_series(series.values, model.coeffs.period())?
        }
        None => simulate(&model.coeffs, &model.noise, args.n, seed)?,
    };
    let scan = mise_scan(&traj, &model.coeffs, &default_grid(), &default_lambda_grid(), &kernel)?;
    let period = traj.period();
    let mut body = String::from("lambda,objective");
    for s in 1..=period {
        let _ = write!(body, ",root_mise_{s}");
    }
    body.push_str(",degenerate\n");
    for (i, lambda) in scan.lambda_grid.iter().enumerate() {
        let _ = write!(body, "{lambda:.2},{}", f(scan.objective[i]));
        for v in &scan.root_mise[i] {
            let _ = write!(body, ",{}", f(*v));
        }
        let _ = writeln!(body, ",{}", scan.degenerate[i]);
    }
    let _ = writeln!(body, "# lambda_hat = {:.2}", scan.lambda_hat);
    let meta = merge(
        base_metadata("mise-scan", seed),
        json!({
            "coef": model.coef_id,
            "period": period,
            "noise": model.noise,
            "n": traj.n(),
            "kernel": kernel.name,
            "input": args.input,
            "path_seed": model.path_seed,
            "lambda_hat": scan.lambda_hat,
            "min_objective": scan.min_objective(),
        }),
    );
    emit(out, &body, meta)
}

// ------------------------------------------------------------ montecarlo

/// Keys accepted by `montecarlo --config`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub coef: String,
    #[serde(default = "default_period")]
    pub period: usize,
    #[serde(default = "default_noise")]
    pub noise: String,
    #[serde(default = "default_kernel")]
    pub kernel: String,
    pub n: Vec<usize>,
    pub replications: usize,
    pub seed: Option<u64>,
    pub path_seed: Option<u64>,
}

fn default_period() -> usize {
    2
}

fn default_noise() -> String {
    "gaussian:4".into()
}

fn default_kernel() -> String {
    "epanechnikov".into()
}

#[derive(Debug, Serialize)]
struct ReportSummary {
    n: usize,
    replications: usize,
    dropped: usize,
    lambda_bar: f64,
    lambda_bar_se: f64,
    mean_root_mise: f64,
    mean_root_mise_se: f64,
    lambda_histogram: Vec<(f64, usize)>,
}

fn montecarlo_cmd(args: &MonteCarloArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let study = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str::<StudyFile>(&text).map_err(|e| Error::Parse {
                line: 0,
                message: format!("{}: {e}", path.display()),
            })?
        }
        None => StudyFile {
            coef: args.model.coef.clone(),
            period: args.model.period,
            noise: args.model.noise.clone(),
            kernel: args.kernel.clone(),
            n: parse_list(&args.n)?
                .into_iter()
                .map(|v| {
                    if v >= 1.0 && v.fract() == 0.0 {
                        Ok(v as usize)
                    } else {
                        Err(bad(format!("sample size {v} is not a positive integer")))
                    }
                })
                .collect::<Result<_>>()?,
            replications: args.replications,
            seed: None,
            path_seed: args.model.path_seed,
        },
    };
    if study.replications == 0 || study.n.is_empty() {
        return Err(bad("need at least one replication and one sample size"));
    }
    let seed = study.seed.unwrap_or(seed);
    let path_seed = study.path_seed.unwrap_or(seed);
    let (coeffs, coef_id) = build_coefficients(&study.coef, study.period, path_seed)?;
    let noise: NoiseModel = study.noise.parse()?;
    let kernel: KernelModel = study.kernel.parse()?;

    let mut body = String::from("coefficient,kernel,noise,n,lambda_bar,mean_root_mise\n");
    let mut summaries = Vec::with_capacity(study.n.len());
    for &n in &study.n {
        let cfg = McConfig::new(
            coeffs.clone(),
            coef_id.clone(),
            noise,
            kernel,
            n,
            study.replications,
            seed,
        );
        let report = monte_carlo(&cfg)?;
        let _ = writeln!(
            body,
            "{},{},{},{n},{:.3},{:.3}",
            coef_id,
            kernel.name,
            noise.label(),
            report.lambda_bar,
            report.mean_root_mise
        );
        summaries.push(ReportSummary {
            n,
            replications: report.replications,
            dropped: report.dropped,
            lambda_bar: report.lambda_bar,
            lambda_bar_se: report.lambda_bar_se,
            mean_root_mise: report.mean_root_mise,
            mean_root_mise_se: report.mean_root_mise_se,
            lambda_histogram: report.lambda_histogram(&cfg.lambda_grid),
        });
    }
    let meta = merge(
        base_metadata("montecarlo", seed),
        json!({
            "study": study,
            "path_seed": path_seed,
            "reports": summaries,
        }),
    );
    emit(out, &body, meta)
}

// ------------------------------------------------------------ period-cv

fn period_cv_cmd(args: &PeriodCvArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let kernel: KernelModel = args.kernel.parse()?;
    let style: CvStyle = args.cv_style.parse()?;
    let series = load(&args.input)?;
    let bandwidth = match args.bandwidth {
        Some(b) if b > 0.0 && b.is_finite() => CvBandwidth::Fixed(b),
        Some(b) => return Err(bad(format!("bandwidth must be positive, got {b}"))),
        None => CvBandwidth::default(),
    };
    let scan = cv_period(&series.values, args.t_max, &kernel, bandwidth, style)?;
    let mut body = String::from("tau,cv\n");
    for (i, v) in scan.cv.iter().enumerate() {
        let _ = writeln!(body, "{},{}", i + 1, f(*v));
    }
    let _ = writeln!(body, "# t_hat = {}", scan.t_hat);
    let meta = merge(
        base_metadata("period-cv", seed),
        merge(
            input_metadata(&series),
            json!({
                "t_max": args.t_max,
                "cv_style": style,
                "kernel": kernel.name,
                "bandwidth": bandwidth.bandwidth(series.len()),
                "t_hat": scan.t_hat,
                "fallbacks": scan.fallbacks,
            }),
        ),
    );
    emit(out, &body, meta)
}

// ------------------------------------------------------------ test

fn test_cmd(args: &TestArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let kernel: KernelModel = args.kernel.parse()?;
    let series = load(&args.input)?;
    let traj = Trajectory::from_series(series.values.clone(), args.period)?;
    let seasons = parse_seasons(&args.season, args.period)?;
    let points = parse_points(&args.u)?;
    let b = args.bandwidth.unwrap_or_else(|| (traj.n() as f64).powf(-1.0 / 3.0));
    let mut body = String::from("s,u,a_hat,statistic,p_value,reject_5pct,clamped\n");
    for &s in &seasons {
        for &u in &points {
            let r = test_statistic(&traj, s, u, args.null, b, &kernel)?;
            let _ = writeln!(
                body,
                "{s},{u},{},{},{},{},{}",
                f(r.a_hat),
                f(r.statistic),
                f(r.p_value),
                r.reject_at_5pct,
                r.clamped
            );
        }
    }
    let meta = merge(
        base_metadata("test", seed),
        merge(
            input_metadata(&series),
            json!({
                "period": args.period,
                "n": traj.n(),
                "null": args.null,
                "kernel": kernel.name,
                "bandwidth": b,
            }),
        ),
    );
    emit(out, &body, meta)
}

// ------------------------------------------------------------ analyze

fn analyze_cmd(args: &AnalyzeArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let kernel: KernelModel = args.kernel.parse()?;
    let points = parse_points(&args.u)?;
    if !(args.ci > 0.0 && args.ci < 1.0) {
        return Err(bad(format!("confidence level must lie in (0, 1), got {}", args.ci)));
    }
    let series = load(&args.input)?;
    let mut meta = merge(base_metadata("analyze", seed), input_metadata(&series));

    let residual = if args.no_deseason {
        series.values.clone()
    } else {
        let cycle = args
            .period
            .or(series.frequency)
            .ok_or_else(|| bad("deseasonalizing needs --period (or pass --no-deseason)"))?;
        let d = deseasonalize(&series.values, cycle, args.trend_window)?;
        meta = merge(meta, json!({ "trend_window": d.trend_window, "seasonal": d.seasonal }));
        d.residual
    };

    let period = match args.period {
        Some(t) => t,
        None => {
            let scan = cv_period(&residual, args.t_max, &kernel, CvBandwidth::default(), CvStyle::Loo)?;
            meta = merge(meta, json!({ "cv": scan.cv, "t_hat": scan.t_hat }));
            scan.t_hat
        }
    };

    let bandwidth = match args.bandwidth.trim() {
        "default" => None,
        other => {
            let traj = Trajectory::from_series(residual.clone(), period)?;
            let (b, lambda) = choose_bandwidth(other, &traj, &kernel)?;
            meta = merge(meta, json!({ "lambda": lambda }));
            Some(b)
        }
    };
    let rows = analyze(&residual, period, &points, &kernel, bandwidth, args.ci)?;
    let n = residual.len() / period;
    let b = bandwidth.unwrap_or_else(|| ptvar::experiments::default_bandwidth(n));

    let mut body = String::from("s,u,a_hat,stderr\n");
    for r in &rows {
        let _ = writeln!(body, "{},{},{},{}", r.s, r.u, field(r.a_hat), field(r.stderr));
    }
    meta = merge(
        meta,
        json!({
            "period": period,
            "n": n,
            "kernel": kernel.name,
            "bandwidth": b,
            "ci_level": args.ci,
            "rows": rows,
        }),
    );
    emit(out, &body, meta)
}
