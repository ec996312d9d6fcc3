//! Command dispatch, manifests and the process entry point.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use metaplectic_core::amalgam::{
    amalgam_norm, cross_estimate_experiment, default_family, regularity_experiment,
    same_space_estimate_experiment, AmalgamNormSpec, EstimateKind, NormEstimateReport,
};
use metaplectic_core::metaplectic::{apply, ApplyOptions, FreeMetaplecticOp, Method};
use metaplectic_core::schrodinger::{
    compare_results, propagate, CompareMode, PropagationJob, PropagationMethod, PropagationResult,
};
use metaplectic_core::symplectic::{factor_free, hamiltonian_flow};
use metaplectic_core::{Axis, SampledWavefunction, SymplecticMatrix};
use serde_json::{json, Value};

use crate::config::{
    apply_override, exponent_value, load_value, parse_config, parse_override, Command, CompareSpec,
    EstimateSpec, ExperimentConfig, MethodSpec, QuadratureSpec,
};
use crate::error::{CliError, Result};
use crate::io::{snapshot_bytes, to_json_bytes, wavefunction_csv, MatrixJson, OutputSet};
use crate::plot;
use crate::verify;

#[derive(Debug, Clone, Parser)]
#[command(name = "metaplectic", version, about = "Metaplectic operators, quadratic propagation and amalgam-norm experiments")]
#[command(after_help = plot::PLOT_HELP)]
pub struct Cli {
    /// Defaults to `command` in the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON experiment configuration.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (required except for `verify`).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol_sym: Option<f64>,
    #[arg(long)]
    pub tol_free: Option<f64>,
    /// Leave the timestamp out of the manifest.
    #[arg(long)]
    pub reproducible: bool,
    /// Set a config field, e.g. `grid.N=2048` or `p="inf"`.
    #[arg(long = "override", value_name = "KEY=VALUE", value_parser = parse_override)]
    pub overrides: Vec<(String, String)>,
}

#[derive(Debug)]
pub struct Outcome {
    pub files: OutputSet,
    pub results: Value,
    pub summary: String,
    pub passed: bool,
}

impl Outcome {
    fn ok(files: OutputSet, results: Value, summary: String) -> Self {
        Outcome { files, results, summary, passed: true }
    }
}

/// Resolves the config (file, then overrides, then flags), runs the command
/// and commits its files together with `manifest.json`.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let mut value = load_value(cli.config.as_deref())?;
    for (k, v) in &cli.overrides {
        apply_override(&mut value, k, v)?;
    }
    let obj = value.as_object_mut().expect("load_value returns an object");
    if let Some(c) = cli.command {
        obj.insert("command".into(), json!(c));
    }
    if let Some(s) = cli.seed {
        obj.insert("seed".into(), json!(s));
    }
    if let Some(t) = cli.tol_sym {
        obj.insert("tol_sym".into(), json!(t));
    }
    if let Some(t) = cli.tol_free {
        obj.insert("tol_free".into(), json!(t));
    }
    let cfg = parse_config(&value)?;
    let command = cfg.command.ok_or_else(|| CliError::Config("no command given".into()))?;
    if command != Command::Verify && cli.out.is_none() {
        return Err(CliError::Config(format!("`{command}` needs --out DIR")));
    }
    let tol = cfg.tolerances()?;
    let mut outcome = execute(command, &cfg)?;

    let timestamp = if cli.reproducible {
        Value::Null
    } else {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        json!({ "unix_seconds": secs })
    };
    let manifest = json!({
        "command": command,
        "inputs": value,
        "seed": cfg.seed(),
        "version": metaplectic_core::VERSION,
        "tolerances": { "sym": tol.sym, "free": tol.free },
        "results": outcome.results,
        "outputs": outcome.files.names(),
        "timestamp": timestamp,
    });
    outcome.files.add("manifest.json", to_json_bytes(&manifest));
    if let Some(dir) = &cli.out {
        std::mem::take(&mut outcome.files).commit(dir)?;
    }
    Ok(outcome)
}

pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    match command {
        Command::Factor => factor(cfg),
        Command::Flow => flow(cfg),
        Command::Apply => apply_command(cfg),
        Command::Propagate => propagate_command(cfg),
        Command::AmalgamNorm => amalgam_norm_command(cfg),
        Command::Estimate => estimate(cfg),
        Command::Regularity => regularity(cfg),
        Command::Verify => verify_command(cfg),
    }
}

fn options(cfg: &ExperimentConfig) -> Result<ApplyOptions> {
    Ok(ApplyOptions {
        method: cfg.quadrature.map(|q| match q {
            QuadratureSpec::Fast => Method::Fast,
            QuadratureSpec::Direct => Method::Direct,
        }),
        allow_aliasing: cfg.allow_aliasing.unwrap_or(false),
        tol: cfg.tolerances()?,
    })
}

fn matrix_value(s: &SymplecticMatrix) -> Value {
    serde_json::to_value(MatrixJson::from_matrix(s.matrix())).expect("plain data")
}

fn factor(cfg: &ExperimentConfig) -> Result<Outcome> {
    let s = cfg.symplectic(Command::Factor)?;
    let (first, second) = factor_free(&s, &cfg.tolerances()?)?;
    let residual = (&first * &second).max_abs_diff(&s);
    let mut files = OutputSet::default();
    files.add("factor_1.json", to_json_bytes(&MatrixJson::from_matrix(first.matrix())));
    files.add("factor_2.json", to_json_bytes(&MatrixJson::from_matrix(second.matrix())));
    let results = json!({
        "matrix": matrix_value(&s),
        "residual": residual,
        "det_b": [first.det_b(), second.det_b()],
    });
    let summary = format!(
        "S = S1 S2 with det B = {:.6e}, {:.6e}; residual {residual:.3e}",
        first.det_b(),
        second.det_b()
    );
    Ok(Outcome::ok(files, results, summary))
}

fn flow(cfg: &ExperimentConfig) -> Result<Outcome> {
    let h = cfg.hamiltonian(Command::Flow)?;
    let tol = cfg.tolerances()?;
    let mut entries = Vec::new();
    let mut worst = 0.0f64;
    for t in cfg.times(Command::Flow)? {
        let a = hamiltonian_flow(&h, t)?;
        worst = worst.max(a.residual());
        entries.push(json!({
            "t": t,
            "matrix": matrix_value(&a),
            "det_b": a.det_b(),
            "free": a.is_free(tol.free),
        }));
    }
    let mut files = OutputSet::default();
    files.add("flows.json", to_json_bytes(&entries));
    let summary = format!("{} flow matrices, max symplectic residual {worst:.2e}", entries.len());
    Ok(Outcome::ok(files, json!({ "count": entries.len(), "max_residual": worst }), summary))
}

fn apply_command(cfg: &ExperimentConfig) -> Result<Outcome> {
    let s = cfg.symplectic(Command::Apply)?;
    let psi = cfg.initial(Command::Apply)?;
    if s.n() != psi.dim() {
        return Err(CliError::Config(format!("matrix has n = {} but the wavefunction is {}-D", s.n(), psi.dim())));
    }
    let opts = options(cfg)?;
    let sheet = cfg.sheet.unwrap_or(0);
    if sheet > 1 {
        return Err(CliError::Config(format!("sheet must be 0 or 1, got {sheet}")));
    }
    let direct_route = s.is_free(opts.tol.free)
        && (opts.allow_aliasing
            || FreeMetaplecticOp::with_smallest_index(s.clone(), psi.hbar(), &opts.tol)?
                .check_aliasing(psi.axes())
                .is_ok());
    let out = apply(&s, sheet, &psi, &opts)?;
    let mut files = OutputSet::default();
    files.add("output.bin", snapshot_bytes(&out));
    files.add("output.csv", wavefunction_csv(&out));
    files.add("output_profile.csv", plot::density_profile(&out));
    let route = if direct_route { "free" } else { "factorized" };
    let results = json!({
        "route": route,
        "sheet": sheet,
        "input_norm": psi.l2_norm(),
        "output_norm": out.l2_norm(),
    });
    let summary = format!("applied via the {route} route, norm {:.12} -> {:.12}", psi.l2_norm(), out.l2_norm());
    Ok(Outcome::ok(files, results, summary))
}

fn snapshot_files(result: &PropagationResult, prefix: &str, files: &mut OutputSet) {
    let mut index = Vec::new();
    for (i, snap) in result.snapshots.iter().enumerate() {
        let name = format!("{prefix}_snapshot_{i:03}.bin");
        index.push(json!({ "index": i, "t": snap.t, "norm": snap.norm, "file": name }));
        files.add(name, snapshot_bytes(&snap.psi));
    }
    files.add(format!("{prefix}_snapshots.json"), to_json_bytes(&index));
    files.extend(plot::propagation_profiles(result, prefix));
}

fn propagate_command(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = Command::Propagate;
    let h = cfg.hamiltonian(c)?;
    let psi = cfg.initial(c)?;
    let times = cfg.times(c)?;
    let options = options(cfg)?;
    let method = cfg.method.unwrap_or(MethodSpec::Metaplectic);
    let job = |m| PropagationJob {
        hamiltonian: h.clone(),
        initial: psi.clone(),
        times: times.clone(),
        method: m,
        splitstep_dt: cfg.dt.unwrap_or(1e-3),
        options,
    };
    let mut files = OutputSet::default();
    let mut results = serde_json::Map::new();
    let mut runs = Vec::new();
    if matches!(method, MethodSpec::Metaplectic | MethodSpec::Both) {
        runs.push(("metaplectic", propagate(&job(PropagationMethod::Metaplectic))?));
    }
    if matches!(method, MethodSpec::Splitstep | MethodSpec::Both) {
        runs.push(("splitstep", propagate(&job(PropagationMethod::SplitStep))?));
    }
    for (prefix, result) in &runs {
        snapshot_files(result, prefix, &mut files);
        let norms: Vec<f64> = result.snapshots.iter().map(|s| s.norm).collect();
        results.insert(format!("{prefix}_norms"), json!(norms));
    }
    let mut summary = format!("{} snapshots per method", times.len());
    if let [(_, a), (_, b)] = runs.as_slice() {
        let mode = match cfg.compare.unwrap_or(CompareSpec::Phase) {
            CompareSpec::L2 => CompareMode::L2,
            CompareSpec::Phase => CompareMode::UpToGlobalPhase,
        };
        let rows = compare_results(a, b, mode)?;
        files.add("errors.csv", plot::error_report(&rows));
        let worst = rows.iter().map(|r| r.l2_error).fold(0.0, f64::max);
        results.insert("max_l2_error".into(), json!(worst));
        summary.push_str(&format!("; max metaplectic/split-step gap {worst:.3e}"));
    }
    Ok(Outcome::ok(files, Value::Object(results), summary))
}

fn single_axis(psi: &SampledWavefunction) -> Result<Axis> {
    if psi.dim() != 1 {
        return Err(CliError::Config("amalgam norms are one-dimensional".into()));
    }
    Ok(*psi.axis())
}

fn norm_spec(cfg: &ExperimentConfig, axis: &Axis, command: Command) -> Result<AmalgamNormSpec> {
    let (p, q) = cfg.exponents(command)?;
    let d = AmalgamNormSpec::for_axis(axis, p, q)?;
    Ok(AmalgamNormSpec::new(
        p,
        q,
        cfg.window_width.unwrap_or(d.window_width),
        cfg.hop.unwrap_or(d.hop),
        cfg.freq_count.unwrap_or(d.freq_count),
    )?)
}

fn spec_value(spec: &AmalgamNormSpec) -> Value {
    json!({
        "p": exponent_value(spec.p),
        "q": exponent_value(spec.q),
        "window": { "type": "gaussian", "width": spec.window_width },
        "hop": spec.hop,
        "freq_count": spec.freq_count,
    })
}

fn amalgam_norm_command(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = Command::AmalgamNorm;
    let psi = cfg.initial(c)?;
    let spec = norm_spec(cfg, &single_axis(&psi)?, c)?;
    let norm = amalgam_norm(&psi, &spec)?;
    let results = json!({ "spec": spec_value(&spec), "norm": norm, "l2_norm": psi.l2_norm() });
    let mut files = OutputSet::default();
    files.add("norm.json", to_json_bytes(&results));
    Ok(Outcome::ok(files, results, format!("W(FL^{}, L^{}) norm {norm:.12}", spec.p, spec.q)))
}

/// JSON view of an estimate report.
pub fn report_value(report: &NormEstimateReport, family: &[String]) -> Value {
    let kind = match report.kind {
        EstimateKind::Cross => "cross",
        EstimateKind::SameSpace => "same-space",
    };
    let bound = report.factor_bound.as_ref().map(|b| {
        json!({
            "first": matrix_value(&b.first),
            "second": matrix_value(&b.second),
            "alpha_first": b.alpha_first,
            "alpha_second": b.alpha_second,
            "product": b.product,
            "holds": b.holds,
        })
    });
    let mut v = spec_value(&report.spec);
    let obj = v.as_object_mut().expect("object");
    obj.insert("kind".into(), json!(kind));
    obj.insert("matrix".into(), matrix_value(&report.matrix));
    obj.insert(
        "input_space".into(),
        json!([exponent_value(report.input_space.0), exponent_value(report.input_space.1)]),
    );
    obj.insert(
        "output_space".into(),
        json!([exponent_value(report.output_space.0), exponent_value(report.output_space.1)]),
    );
    obj.insert("family".into(), json!(family));
    obj.insert("labels".into(), json!(report.labels));
    obj.insert("ratios".into(), json!(report.ratios));
    obj.insert("skipped".into(), json!(report.skipped));
    obj.insert("max_ratio".into(), json!(report.max_ratio));
    obj.insert("factor_bound".into(), bound.unwrap_or(Value::Null));
    obj.insert(
        "note".into(),
        json!("empirical maxima over a finite family; lower bounds for the operator norms, relative to window and lattice"),
    );
    v
}

fn estimate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = Command::Estimate;
    let s = cfg.symplectic(c)?;
    let axes = cfg.axes(c)?;
    let [axis] = axes.as_slice() else {
        return Err(CliError::Config("estimates run on a one-dimensional grid".into()));
    };
    let family = default_family(*axis, cfg.hbar()?)?;
    let spec = norm_spec(cfg, axis, c)?;
    let opts = options(cfg)?;
    let report = match cfg.estimate.unwrap_or(EstimateSpec::Cross) {
        EstimateSpec::Cross => cross_estimate_experiment(&s, &spec, &family, &opts)?,
        EstimateSpec::SameSpace => same_space_estimate_experiment(&s, &spec, &family, &opts)?,
    };
    let labels: Vec<String> = family.iter().map(|m| m.label.clone()).collect();
    let value = report_value(&report, &labels);
    let mut files = OutputSet::default();
    files.add("report.json", to_json_bytes(&value));
    files.add("ratios.csv", plot::ratio_table(Some(&report)));
    let mut summary = format!("empirical constant {:.6} over {} functions", report.max_ratio, report.ratios.len());
    if let Some(b) = &report.factor_bound {
        summary.push_str(&format!("; two-factor bound {:.6} ({})", b.product, if b.holds { "holds" } else { "violated" }));
    }
    let results = json!({ "max_ratio": report.max_ratio, "factor_bound_holds": report.factor_bound.as_ref().map(|b| b.holds) });
    Ok(Outcome::ok(files, results, summary))
}

fn regularity(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = Command::Regularity;
    let h = cfg.hamiltonian(c)?;
    let psi = cfg.initial(c)?;
    let spec = norm_spec(cfg, &single_axis(&psi)?, c)?;
    let times = cfg.times(c)?;
    let series = regularity_experiment(&h, &psi, &spec, &times, &options(cfg)?)?;
    let mut files = OutputSet::default();
    files.add("series.csv", plot::time_series(&series));
    let norms: Vec<f64> = series.iter().map(|(_, v)| *v).collect();
    let (lo, hi) = norms.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let results = json!({ "spec": spec_value(&spec), "norms": norms });
    Ok(Outcome::ok(files, results, format!("{} instants, norms in [{lo:.6}, {hi:.6}]", norms.len())))
}

fn verify_command(cfg: &ExperimentConfig) -> Result<Outcome> {
    let checks = verify::run_all(cfg.seed());
    let mut table = Vec::new();
    let mut lines = Vec::new();
    for c in &checks {
        lines.push(c.line());
        table.push(vec![
            c.id.to_string(),
            c.name.to_string(),
            c.passed.to_string(),
            format!("{:.3}", c.seconds),
            c.detail.clone(),
        ]);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "name", "passed", "seconds", "detail"]).expect("in-memory CSV");
    for row in &table {
        w.write_record(row).expect("in-memory CSV");
    }
    let mut files = OutputSet::default();
    files.add("verify.csv", w.into_inner().expect("in-memory CSV"));
    let passed = checks.iter().all(|c| c.passed);
    let results = json!(checks
        .iter()
        .map(|c| json!({ "id": c.id, "name": c.name, "passed": c.passed, "detail": c.detail }))
        .collect::<Vec<_>>());
    let failed = checks.iter().filter(|c| !c.passed).count();
    lines.push(format!("{} of {} checks passed", checks.len() - failed, checks.len()));
    Ok(Outcome { files, results, summary: lines.join("\n"), passed })
}
