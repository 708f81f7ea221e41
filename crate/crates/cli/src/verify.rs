use serde_json::{json, Value};

use poscub::lscf::{exactness_residual, Problem, RuleKind};

use crate::commands::{load_rule, Context};
use crate::CliError;

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

/// Recomputes `Φ`, `m`, the residual and the positivity flag of a rule file
/// and compares them with its sidecar.
pub fn verify(ctx: &Context) -> Result<Value, CliError> {
    let path = ctx.cfg.rule_path()?;
    let (rule, sidecar) = load_rule(path)?;
    let mut checks = Vec::new();
    let mut push = |name, pass, detail: String| checks.push(Check { name, pass, detail });

    let dim_ok = rule.points.dim() == sidecar.domain.dim();
    push("dimension", dim_ok, format!("points have {} coordinates, domain has {}", rule.points.dim(), sidecar.domain.dim()));
    if !dim_ok {
        return finish(path, checks, json!({}));
    }
    push("count", rule.len() == sidecar.n, format!("{} rows, sidecar N = {}", rule.len(), sidecar.n));

    let min_w = rule.min_weight();
    let positive = rule.positive;
    push(
        "positivity flag",
        positive == sidecar.positive,
        format!("recomputed {positive}, sidecar {}", sidecar.positive),
    );
    push(
        "min weight",
        min_w.to_bits() == sidecar.min_weight.to_bits(),
        format!("recomputed {min_w:e}, sidecar {:e}", sidecar.min_weight),
    );

    let outside = rule.points.iter().filter(|x| !sidecar.domain.contains(x).unwrap_or(false)).count();
    push("points in domain", outside == 0, format!("{outside} points outside"));

    let mut numbers = json!({ "N": rule.len(), "min_weight": min_w, "positive": positive });
    if let Some(basis) = &sidecar.basis {
        let problem = Problem::new(basis, &sidecar.domain, &sidecar.weight)?;
        let k = problem.k();
        let residual = exactness_residual(&rule, &problem)?;
        let bound = sidecar.exact_tol * problem.residual_scale();
        let i1 = problem.moments.values[0];
        let abs_sum: f64 = rule.weights.iter().map(|w| w.abs()).sum();
        numbers["K"] = json!(k);
        numbers["residual"] = json!(residual);
        numbers["bound"] = json!(bound);
        numbers["sum_abs_weights"] = json!(abs_sum);
        numbers["integral_of_one"] = json!(i1);
        if let Some(sk) = sidecar.k {
            push("K", sk == k, format!("basis has {k} functions, sidecar K = {sk}"));
        }
        if matches!(rule.kind, RuleKind::LeastSquares | RuleKind::Interpolatory) {
            push("exactness", residual <= bound, format!("residual {residual:e}, bound {bound:e}"));
        }
        if let Some(recorded) = sidecar.residual {
            push(
                "recorded residual",
                (residual - recorded).abs() <= bound,
                format!("recomputed {residual:e}, sidecar {recorded:e}"),
            );
        }
        if rule.kind == RuleKind::Interpolatory {
            push("interpolatory size", rule.len() <= k, format!("N = {}, K = {k}", rule.len()));
        }
        if positive && residual <= bound {
            push(
                "stability",
                (abs_sum - i1).abs() <= bound,
                format!("sum |w| = {abs_sum:e}, I[1] = {i1:e}"),
            );
        }
    }
    finish(path, checks, numbers)
}

fn finish(path: &std::path::Path, checks: Vec<Check>, numbers: Value) -> Result<Value, CliError> {
    let pass = checks.iter().all(|c| c.pass);
    let list: Vec<Value> = checks.iter().map(|c| json!({ "check": c.name, "pass": c.pass, "detail": c.detail })).collect();
    let report = json!({ "rule": path, "pass": pass, "values": numbers, "checks": list });
    if pass {
        Ok(report)
    } else {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        Err(CliError::Verify { message: format!("rule violates: {}", failed.join(", ")), report })
    }
}
