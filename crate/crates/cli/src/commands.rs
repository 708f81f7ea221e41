use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use poscub::bench::{run_error_experiment, run_ratio_experiment, ExperimentConfig, RatioConfig};
use poscub::io::{fmt_f64, read_rule_csv, write_header, write_points_csv, write_rule_csv, RuleSidecar};
use poscub::lscf::{build_positive_lscf, CubatureRule, Problem};
use poscub::points::generate_in_domain;
use poscub::spaces::{make_basis, moments as compute_moments};
use poscub::subsample::subsample as run_subsample;

use crate::config::RunConfig;
use crate::CliError;

pub struct Context {
    pub command: &'static str,
    pub cfg: RunConfig,
    pub out: PathBuf,
}

impl Context {
    pub fn new(command: &'static str, cfg: RunConfig, out: PathBuf) -> Self {
        Context { command, cfg, out }
    }

    /// Header block of every emitted file.
    pub fn meta(&self) -> Vec<(String, String)> {
        vec![
            ("tool".into(), format!("poscub {}", env!("CARGO_PKG_VERSION"))),
            ("command".into(), self.command.into()),
            ("config-sha256".into(), self.cfg.hash()),
            ("seed".into(), self.cfg.seed.to_string()),
        ]
    }

    fn meta_json(&self) -> Value {
        Value::Object(self.meta().into_iter().map(|(k, v)| (k, Value::String(v))).collect())
    }

    fn create(&self, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::Io(format!("{}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok((path, BufWriter::new(file)))
    }

    fn write_json(&self, name: &str, value: &Value) -> Result<PathBuf, CliError> {
        let (path, mut w) = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(path)
    }

    fn write_rule(&self, stem: &str, rule: &CubatureRule, sidecar: &RuleSidecar) -> Result<(PathBuf, PathBuf), CliError> {
        let (csv_path, mut w) = self.create(&format!("{stem}.csv"))?;
        write_rule_csv(&mut w, rule, &self.meta())?;
        w.flush()?;
        let mut side = serde_json::to_value(sidecar).map_err(|e| CliError::Io(e.to_string()))?;
        side["meta"] = self.meta_json();
        let json_path = self.write_json(&format!("{stem}.json"), &side)?;
        Ok((csv_path, json_path))
    }
}

/// Serde tag of a unit enum variant, e.g. `least-squares`.
pub fn tag<T: Serialize>(t: &T) -> String {
    match serde_json::to_value(t) {
        Ok(Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn opt_usize(v: Option<usize>) -> String {
    v.map(|n| n.to_string()).unwrap_or_default()
}

pub fn sidecar_path(rule: &Path) -> PathBuf {
    rule.with_extension("json")
}

/// Rule CSV plus sidecar.
pub fn load_rule(path: &Path) -> Result<(CubatureRule, RuleSidecar), CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let (points, weights) = read_rule_csv(std::io::BufReader::new(file)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let side_path = sidecar_path(path);
    let text = fs::read_to_string(&side_path).map_err(|e| CliError::Io(format!("{}: {e}", side_path.display())))?;
    let sidecar: RuleSidecar = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", side_path.display())))?;
    let rule = sidecar.to_rule(points, weights);
    Ok((rule, sidecar))
}

pub fn points(ctx: &Context) -> Result<Value, CliError> {
    let cfg = &ctx.cfg;
    let domain = cfg.domain()?;
    let weight = cfg.weight()?;
    weight.check_compatible(&domain)?;
    let spec = cfg.generator_spec(cfg.generator);
    let pts = generate_in_domain(&spec, &domain, &weight, cfg.count)?;
    let (path, mut w) = ctx.create("points.csv")?;
    write_points_csv(&mut w, &pts, &ctx.meta())?;
    w.flush()?;
    Ok(json!({
        "points": path,
        "count": pts.len(),
        "candidates_consumed": pts.provenance.candidates_consumed,
    }))
}

pub fn moments(ctx: &Context) -> Result<Value, CliError> {
    let cfg = &ctx.cfg;
    let domain = cfg.domain()?;
    let weight = cfg.weight()?;
    weight.check_compatible(&domain)?;
    let basis = make_basis(&cfg.basis(domain.dim()), &domain)?;
    let m = compute_moments(&basis, &domain, &weight)?;
    let (path, mut w) = ctx.create("moments.csv")?;
    write_header(&mut w, &ctx.meta())?;
    writeln!(w, "k,descriptor,moment,method,error_estimate")?;
    for (k, f) in basis.functions().iter().enumerate() {
        let est = m.error_estimates.as_ref().map(|e| e[k]);
        writeln!(w, "{},{},{},{},{}", k + 1, f.descriptor(), fmt_f64(m.values[k]), tag(&m.method), opt(est))?;
    }
    w.flush()?;
    Ok(json!({ "moments": path, "K": basis.len(), "method": tag(&m.method) }))
}

pub fn build(ctx: &Context) -> Result<Value, CliError> {
    let cfg = &ctx.cfg;
    let domain = cfg.domain()?;
    let weight = cfg.weight()?;
    let problem = Problem::new(&cfg.basis(domain.dim()), &domain, &weight)?;
    let opts = cfg.build_options();
    let (rule, report) = build_positive_lscf(&problem, &cfg.generator_spec(cfg.generator), &opts)?;
    let mut sidecar = RuleSidecar::describe(&rule, &domain, &weight, Some(problem.k()), opts.exact_tol);
    sidecar.attempts = report.attempts.clone();
    sidecar.terminated = Some(report.terminated);
    let (csv, side) = ctx.write_rule("rule", &rule, &sidecar)?;
    Ok(json!({
        "rule": csv,
        "sidecar": side,
        "N": rule.len(),
        "K": problem.k(),
        "residual": rule.residual,
        "min_weight": rule.min_weight(),
        "attempts": report.attempts.len(),
    }))
}

pub fn subsample(ctx: &Context) -> Result<Value, CliError> {
    let cfg = &ctx.cfg;
    let (rule, sidecar) = load_rule(cfg.rule_path()?)?;
    let basis = sidecar
        .basis
        .clone()
        .ok_or_else(|| CliError::Config("the rule sidecar names no basis".into()))?;
    let problem = Problem::new(&basis, &sidecar.domain, &sidecar.weight)?;
    let method = cfg.subsample_method();
    let out = run_subsample(&rule, &problem, &method)?;
    let stem = format!("rule_{}", method.kind);
    let mut side = RuleSidecar::describe(&out.rule, &sidecar.domain, &sidecar.weight, Some(problem.k()), sidecar.exact_tol);
    side.generator = sidecar.generator.clone();
    let (csv, json_path) = ctx.write_rule(&stem, &out.rule, &side)?;
    let (summary_path, mut w) = ctx.create(&format!("subsample_{}.csv", method.kind))?;
    write_header(&mut w, &ctx.meta())?;
    writeln!(w, "method,passes,residual_before,residual_after")?;
    writeln!(w, "{},{},{},{}", method.kind, out.passes, fmt_f64(out.residual_before), fmt_f64(out.residual_after))?;
    w.flush()?;
    Ok(json!({
        "rule": csv,
        "sidecar": json_path,
        "summary": summary_path,
        "method": method.kind.to_string(),
        "kernel": tag(&method.kernel),
        "N_before": rule.len(),
        "N_after": out.rule.len(),
        "K": problem.k(),
        "passes": out.passes,
        "residual_before": out.residual_before,
        "residual_after": out.residual_after,
        "converged": out.converged,
        "exact": out.residual_after <= sidecar.exact_tol * problem.residual_scale(),
    }))
}

pub fn genz_bench(ctx: &Context) -> Result<Value, CliError> {
    let cfg = &ctx.cfg;
    let domain = cfg.domain()?;
    let weight = cfg.weight()?;
    let exp = ExperimentConfig {
        domain,
        weight,
        family: cfg.family,
        degrees: cfg.degrees.clone(),
        generators: cfg.generators.clone(),
        integrands: cfg.integrands.clone(),
        trials: cfg.trials,
        seed: cfg.seed,
        build: cfg.build_options(),
        subsample: cfg.subsample_method(),
    };
    let table = run_error_experiment(&exp)?;
    let (errors_path, mut w) = ctx.create("errors.csv")?;
    write_header(&mut w, &ctx.meta())?;
    writeln!(w, "genz_kind,generator,degree,K,N_ls,N_interp,trial,err_ls,err_interp,err_qmc,err_legendre")?;
    for r in &table.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.integrand,
            r.generator,
            r.degree,
            r.k,
            opt_usize(r.n_ls),
            opt_usize(r.n_interp),
            r.trial,
            opt(r.err_ls),
            opt(r.err_interp),
            opt(r.err_qmc),
            opt(r.err_legendre)
        )?;
    }
    w.flush()?;
    let (summary_path, mut w) = ctx.create("summary.csv")?;
    write_header(&mut w, &ctx.meta())?;
    writeln!(
        w,
        "genz_kind,generator,degree,median_ls,max_ls,median_interp,max_interp,median_qmc,max_qmc,median_legendre,max_legendre"
    )?;
    for s in &table.summaries {
        let pair = |a: Option<poscub::bench::experiment::Aggregate>| {
            format!("{},{}", opt(a.map(|x| x.median)), opt(a.map(|x| x.max)))
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            s.integrand,
            s.generator,
            s.degree,
            pair(s.ls),
            pair(s.interp),
            pair(s.qmc),
            pair(s.legendre)
        )?;
    }
    w.flush()?;
    let notes: Vec<Value> = table
        .rows
        .iter()
        .filter_map(|r| r.note.as_ref().map(|n| json!({"genz_kind": r.integrand, "degree": r.degree, "generator": r.generator, "trial": r.trial, "note": n})))
        .collect();
    Ok(json!({ "errors": errors_path, "summary": summary_path, "rows": table.rows.len(), "failures": notes }))
}

pub fn ratio(ctx: &Context) -> Result<Value, CliError> {
    let cfg = &ctx.cfg;
    let domain = cfg.domain()?;
    let weight = cfg.weight()?;
    let rc = RatioConfig {
        domain,
        weight,
        family: cfg.family,
        degrees: cfg.degrees.clone(),
        generator: cfg.generator_spec(cfg.generator),
        refine: cfg.refine,
        build: cfg.build_options(),
    };
    let result = run_ratio_experiment(&rc)?;
    let (ratio_path, mut w) = ctx.create("ratio.csv")?;
    write_header(&mut w, &ctx.meta())?;
    writeln!(w, "degree,K,N,refined")?;
    for r in &result.rows {
        writeln!(w, "{},{},{},{}", r.degree, r.k, r.n, r.refined)?;
    }
    w.flush()?;
    let fit = result.fit.as_ref().ok_or_else(|| CliError::Numerical {
        message: format!("power-law fit needs at least 3 pairs with K >= 2, got {}", result.rows.iter().filter(|r| r.k >= 2).count()),
        details: Some(json!({ "failures": result.failures })),
    })?;
    let mut fit_json = serde_json::to_value(fit).map_err(|e| CliError::Io(e.to_string()))?;
    fit_json["failures"] = json!(result.failures);
    fit_json["meta"] = ctx.meta_json();
    let fit_path = ctx.write_json("fit.json", &fit_json)?;
    Ok(json!({ "ratio": ratio_path, "fit": fit_path, "C": fit.c, "s": fit.s, "failures": result.failures }))
}
