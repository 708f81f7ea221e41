//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;

use poscub::bench::{
    gauss_legendre_1d, run_error_experiment, run_ratio_experiment, ExperimentConfig, GenzKind, IntegrandKind, RatioConfig,
};
use poscub::geometry::{Domain, WeightFunction};
use poscub::lscf::{
    apply_rule, build_positive_lscf, discrete_orthonormalize, explicit_ls_weights, ls_approximant_integral, ls_weights,
    pi_moments, qmc_drift, BuildOptions, CubatureRule, DiscreteWeights, Problem, DEFAULT_RANK_TOL,
};
use poscub::points::{generate_in_domain, GeneratorKind, GeneratorSpec, PointSet};
use poscub::spaces::{BasisFamily, BasisSpec, MomentMethod, MomentVector};
use poscub::subsample::{nnls_weights, steinitz_reduce, SubsampleMethod};

const EXACT_TOL: f64 = 1e-8;
const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, title: &str, started: Instant, out: Outcome) -> bool {
    let tag = if out.pass { "PASS" } else { "FAIL" };
    println!("criterion {id}: {tag} - {title} ({}; {:.1}s)", out.detail, started.elapsed().as_secs_f64());
    out.pass
}

struct Cell {
    label: String,
    problem: Problem,
    rule: Result<CubatureRule, String>,
}

fn generators() -> [GeneratorSpec; 3] {
    [GeneratorSpec::halton(), GeneratorSpec::sobol(), GeneratorSpec::random(SEED)]
}

fn exactness_matrix() -> Vec<Cell> {
    let square = Domain::cube(2, -1.0, 1.0).unwrap();
    let cube = Domain::cube(3, -1.0, 1.0).unwrap();
    let disk = Domain::unit_ball(2).unwrap();
    let union = Domain::disk_and_square();
    let groups: Vec<(&str, Domain, Vec<WeightFunction>, usize)> = vec![
        ("cube2", square, vec![WeightFunction::One, WeightFunction::Chebyshev], 12),
        ("cube3", cube, vec![WeightFunction::One], 8),
        ("ball2", disk, vec![WeightFunction::One, WeightFunction::Radial { exponent: 0.5 }], 10),
        ("union", union, vec![WeightFunction::One], 8),
    ];
    let mut jobs = Vec::new();
    for (name, dom, weights, max_m) in &groups {
        for w in weights {
            for m in 0..=*max_m {
                for g in generators() {
                    jobs.push((format!("{name}/{w:?}/m={m}/{:?}", g.kind), dom.clone(), w.clone(), m, g));
                }
            }
        }
    }
    jobs.into_par_iter()
        .map(|(label, dom, w, m, g)| {
            let problem = Problem::new(&BasisSpec::Algebraic { degree: m }, &dom, &w).expect("problem setup");
            let rule = build_positive_lscf(&problem, &g, &BuildOptions::default())
                .map(|(r, _)| r)
                .map_err(|e| e.to_string());
            Cell { label, problem, rule }
        })
        .collect()
}

fn scale(p: &Problem) -> f64 {
    1.0 + p.moments.norm()
}

fn criterion_1(cells: &[Cell]) -> Outcome {
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for c in cells {
        match &c.rule {
            Ok(r) => {
                let res = r.residual.unwrap_or(f64::INFINITY) / scale(&c.problem);
                worst = worst.max(res);
                if !(res <= EXACT_TOL && r.min_weight() > 0.0) {
                    bad.push(c.label.clone());
                }
            }
            Err(e) => bad.push(format!("{}: {e}", c.label)),
        }
    }
    let max_n = cells.iter().filter_map(|c| c.rule.as_ref().ok()).map(|r| r.len()).max().unwrap_or(0);
    Outcome {
        pass: bad.is_empty(),
        detail: format!(
            "{} rules, worst relative residual {worst:.1e}, largest N {max_n}, failures {:?}",
            cells.len(),
            bad
        ),
    }
}

fn criterion_2() -> Outcome {
    let run = |g: GeneratorSpec| {
        let cfg = RatioConfig {
            domain: Domain::cube(2, -1.0, 1.0).unwrap(),
            weight: WeightFunction::One,
            family: BasisFamily::Algebraic,
            degrees: (1..=10).collect(),
            generator: g,
            refine: true,
            build: BuildOptions::default(),
        };
        run_ratio_experiment(&cfg)
    };
    let (halton, random) = rayon::join(|| run(GeneratorSpec::halton()), || run(GeneratorSpec::random(SEED)));
    match (halton, random) {
        (Ok(h), Ok(r)) => match (&h.fit, &r.fit) {
            (Some(fh), Some(fr)) => Outcome {
                pass: (1.4..=2.4).contains(&fh.s) && (0.8..=2.0).contains(&fr.s) && h.failures.is_empty() && r.failures.is_empty(),
                detail: format!("Halton s={:.2} C={:.2e}; random s={:.2} C={:.2e}", fh.s, fh.c, fr.s, fr.c),
            },
            _ => Outcome { pass: false, detail: "fit failed".into() },
        },
        (h, r) => Outcome { pass: false, detail: format!("halton {:?} random {:?}", h.err(), r.err()) },
    }
}

fn criterion_3(cells: &[Cell]) -> Outcome {
    let results: Vec<(String, Result<(usize, usize, f64, f64, f64), String>)> = cells
        .par_iter()
        .filter_map(|c| c.rule.as_ref().ok().map(|r| (c, r)))
        .map(|(c, r)| {
            let out = steinitz_reduce(r, &c.problem, &SubsampleMethod::steinitz()).map_err(|e| e.to_string()).and_then(|s| {
                let phi = c.problem.basis_matrix(&r.points).map_err(|e| e.to_string())?;
                let nnls = nnls_weights(&phi, &c.problem.moments.values, &SubsampleMethod::nnls()).map_err(|e| e.to_string())?;
                Ok((
                    s.rule.len(),
                    c.problem.k(),
                    s.rule.min_weight(),
                    s.residual_after / scale(&c.problem),
                    nnls.residual / scale(&c.problem),
                ))
            });
            (c.label.clone(), out)
        })
        .collect();
    let mut bad = Vec::new();
    let (mut worst, mut worst_nnls): (f64, f64) = (0.0, 0.0);
    for (label, r) in &results {
        match r {
            Ok((n, k, minw, res, nnls)) => {
                worst = worst.max(*res);
                worst_nnls = worst_nnls.max(*nnls);
                if !(n <= k && *minw >= 0.0 && *res <= EXACT_TOL) {
                    bad.push(label.clone());
                }
            }
            Err(e) => bad.push(format!("{label}: {e}")),
        }
    }
    Outcome {
        pass: bad.is_empty() && results.len() == cells.len(),
        detail: format!(
            "{} reductions, worst Steinitz residual {worst:.1e}, worst NNLS residual {worst_nnls:.1e}, failures {bad:?}",
            results.len()
        ),
    }
}

fn criterion_4(cells: &[Cell]) -> Outcome {
    let f = |x: &[f64]| (1.3 * x[0]).sin() + (0.5 * x[x.len() - 1]).exp();
    let checks: Vec<(String, f64, f64, f64)> = cells
        .par_iter()
        .filter_map(|c| c.rule.as_ref().ok().map(|r| (c, r)))
        .map(|(c, r)| {
            let phi = c.problem.basis_matrix(&r.points).unwrap();
            let rw = c.problem.discrete_weights(&r.points).unwrap();
            let w = ls_weights(&phi, &rw, &c.problem.moments).unwrap();
            let wmax = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let (b, t) = discrete_orthonormalize(&phi, &rw).unwrap();
            let we = explicit_ls_weights(&b, &rw, &pi_moments(&t, &c.problem.moments));
            let e1 = w.iter().zip(&we).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max) / wmax;
            let samples: Vec<f64> = r.points.iter().map(f).collect();
            let approx = ls_approximant_integral(&phi, &rw, &c.problem.moments, &samples).unwrap();
            let direct = apply_rule(r, f).unwrap();
            let e2 = (approx - direct).abs() / direct.abs();
            let i1 = c.problem.moments.values[0];
            let abs_sum: f64 = r.weights.iter().map(|w| w.abs()).sum();
            let e3 = (abs_sum - i1).abs() / i1;
            (c.label.clone(), e1, e2, e3)
        })
        .collect();
    let worst = checks.iter().fold((0.0f64, 0.0f64, 0.0f64), |a, c| (a.0.max(c.1), a.1.max(c.2), a.2.max(c.3)));
    let bad: Vec<&String> = checks.iter().filter(|c| !(c.1 <= 1e-9 && c.2 <= 1e-9 && c.3 <= 1e-10)).map(|c| &c.0).collect();
    Outcome {
        pass: bad.is_empty() && !checks.is_empty(),
        detail: format!(
            "{} rules; worst explicit-weight {:.1e}, approximant {:.1e}, stability {:.1e}; failures {bad:?}",
            checks.len(),
            worst.0,
            worst.1,
            worst.2
        ),
    }
}

fn criterion_5() -> Outcome {
    let pts = PointSet::from_points(1, &[vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
    let problem = Problem::new(&BasisSpec::Algebraic { degree: 1 }, &Domain::cube(1, -1.0, 1.0).unwrap(), &WeightFunction::One).unwrap();
    let phi = problem.basis_matrix(&pts).unwrap();
    let rw = DiscreteWeights(vec![2.0 / 3.0; 3]);
    let m = MomentVector { values: vec![2.0, 0.0], method: MomentMethod::ClosedForm, error_estimates: None };
    let w = ls_weights(&phi, &rw, &m).unwrap();
    let ok_w = w.iter().all(|v| (v - 2.0 / 3.0).abs() <= 1e-14);
    let rule = CubatureRule::new(pts, w, Some(BasisSpec::Algebraic { degree: 1 }), None, poscub::lscf::RuleKind::LeastSquares);
    let reduced = steinitz_reduce(&rule, &problem, &SubsampleMethod::steinitz()).unwrap().rule;
    let ok_mid = reduced.len() == 1 && reduced.points.point(0)[0].abs() <= 1e-14 && (reduced.weights[0] - 2.0).abs() <= 1e-14;
    let mut worst: f64 = 0.0;
    for n in 1..=8 {
        let (x, wt) = gauss_legendre_1d(n);
        for k in 0..2 * n {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            let q: f64 = x.iter().zip(&wt).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
            worst = worst.max((q - exact).abs());
        }
    }
    Outcome {
        pass: ok_w && ok_mid && worst <= 1e-13,
        detail: format!("weights {ok_w}, midpoint {ok_mid}, worst Gauss-Legendre monomial error {worst:.1e}"),
    }
}

fn criterion_6() -> Outcome {
    let mut cfg = ExperimentConfig::new(Domain::cube(2, 0.0, 1.0).unwrap(), WeightFunction::One, BasisFamily::Algebraic, vec![2, 4, 6, 8, 10]);
    cfg.trials = 20;
    cfg.seed = SEED;
    cfg.generators = vec![GeneratorKind::Halton];
    let table = match run_error_experiment(&cfg) {
        Ok(t) => t,
        Err(e) => return Outcome { pass: false, detail: e.to_string() },
    };
    let med = |kind: GenzKind, m: usize, ls: bool| -> f64 {
        let s = table.summary(IntegrandKind::Genz(kind), GeneratorKind::Halton, m).expect("cell present");
        let agg = if ls { s.ls } else { s.qmc };
        agg.map_or(f64::NAN, |a| a.median)
    };
    let gauss: Vec<f64> = [2, 4, 6, 8, 10].iter().map(|&m| med(GenzKind::Gaussian, m, true)).collect();
    let monotone = gauss.windows(2).all(|p| p[1] < p[0]);
    let small = gauss[4] <= 1e-5;
    let mut ordering = true;
    let mut pairs = Vec::new();
    for kind in GenzKind::ALL {
        for m in [8, 10] {
            let (ls, qmc) = (med(kind, m, true), med(kind, m, false));
            ordering &= ls < qmc;
            pairs.push(format!("{kind}@{m}: {ls:.1e}<{qmc:.1e}"));
        }
    }
    let g: Vec<String> = gauss.iter().map(|v| format!("{v:.1e}")).collect();
    Outcome {
        pass: monotone && small && ordering,
        detail: format!("gaussian medians [{}]; {}", g.join(", "), pairs.join(", ")),
    }
}

fn criterion_7() -> Outcome {
    let problem = Problem::new(&BasisSpec::Algebraic { degree: 4 }, &Domain::cube(2, -1.0, 1.0).unwrap(), &WeightFunction::One).unwrap();
    let mut pass = problem.k() == 15;
    let mut parts = Vec::new();
    for g in [GeneratorSpec::halton(), GeneratorSpec::sobol()] {
        match qmc_drift(&problem, &g, &[1 << 10, 1 << 16], DEFAULT_RANK_TOL) {
            Ok(d) => {
                pass &= d[1] < d[0];
                parts.push(format!("{:?}: {:.2e} -> {:.2e}", g.kind, d[0], d[1]));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{:?}: {e}", g.kind));
            }
        }
    }
    Outcome { pass, detail: parts.join(", ") }
}

fn criterion_8() -> Outcome {
    let square = Domain::cube(2, -1.0, 1.0).unwrap();
    let pts = generate_in_domain(&GeneratorSpec::halton(), &square, &WeightFunction::One, 1_000_000).unwrap();
    let disk = Domain::unit_ball(2).unwrap();
    let inside = pts.iter().filter(|x| disk.contains(x).unwrap()).count();
    let frac = inside as f64 / pts.len() as f64;
    Outcome { pass: (frac - PI / 4.0).abs() <= 2e-3, detail: format!("fraction {frac:.6} vs pi/4 = {:.6}", PI / 4.0) }
}

fn main() -> ExitCode {
    let mut all = true;
    let t = Instant::now();
    let cells = exactness_matrix();
    all &= report(1, "exactness and positivity of LS rules", t, criterion_1(&cells));
    let t = Instant::now();
    all &= report(2, "N(K) power-law exponent", t, criterion_2());
    let t = Instant::now();
    all &= report(3, "Steinitz compression", t, criterion_3(&cells));
    let t = Instant::now();
    all &= report(4, "weight and stability identities", t, criterion_4(&cells));
    let t = Instant::now();
    all &= report(5, "hand-derived oracles", t, criterion_5());
    let t = Instant::now();
    all &= report(6, "Genz convergence and ordering", t, criterion_6());
    let t = Instant::now();
    all &= report(7, "QMC-correction drift", t, criterion_7());
    let t = Instant::now();
    all &= report(8, "equidistribution of Halton points", t, criterion_8());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
