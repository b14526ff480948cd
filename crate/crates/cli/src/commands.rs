use std::fmt;
use std::path::Path;

use polysparse::io::{format_matrix, read_indices, read_matrix, read_vector, write_matrix};
use polysparse::markov::{build_inverse_chain, egep_estimate, expected_escape, solve_sddm, SubsetIndicator};
use polysparse::matrix::dense_limit;
use polysparse::mdbd::{
    app_dscr_pdf, canonical_pdf, check_pdf_conditions, induce_gamma, residual_table, Canonical, ConditionParams, Mdbd,
};
use polysparse::oracle::{approx_check, dense_poly};
use polysparse::poly::ss_mdbd;
use polysparse::recover::recover_alpha;
use polysparse::sparsify::Config;
use polysparse::{seed, PosDiag, TMatrix};
use serde_json::json;

use crate::report::{RunReport, Verification};
use crate::{Cli, Command, GraphArgs};

const VERIFY_ATTEMPTS: u32 = 3;

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Verification(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            Self::Invalid(_) => 2,
            Self::Verification(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Invalid(m) => write!(f, "{m}"),
            Self::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<polysparse::Error> for CliError {
    fn from(e: polysparse::Error) -> Self {
        Self::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Invalid(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn context<T, E: fmt::Display>(r: std::result::Result<T, E>, path: &Path) -> Result<T> {
    r.map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn load_graph(g: &GraphArgs) -> Result<TMatrix> {
    let b = context(read_matrix(&g.graph), &g.graph)?;
    let Some(path) = &g.diag else {
        return Ok(b);
    };
    let d = context(read_vector(path), path)?;
    let (_, m) = b.into_parts();
    Ok(TMatrix::new(PosDiag::new(d)?, m)?)
}

fn load_mdbd(path: &Path) -> Result<Mdbd> {
    let text = context(std::fs::read_to_string(path), path)?;
    context(serde_json::from_str(&text), path)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?;
    context(std::fs::write(path, text + "\n"), path)
}

/// Applies `--round-up-N`: non-power-of-two degrees are rejected unless asked.
fn fix_degree(mix: Mdbd, round_up: bool, report: &mut RunReport) -> Result<Mdbd> {
    let n = mix.degree();
    if n.is_power_of_two() {
        return Ok(mix);
    }
    if !round_up {
        return Err(CliError::Invalid(format!(
            "N = {n} is not a power of two (pass --round-up-N to use {})",
            n.next_power_of_two()
        )));
    }
    let up = n.next_power_of_two();
    report.warnings.push(format!("N rounded up from {n} to {up}"));
    Ok(mix.with_degree(up)?)
}

fn normalized_gamma(mix: &Mdbd) -> Vec<f64> {
    let mass = 1.0 - mix.delta();
    induce_gamma(mix).iter().map(|g| g / mass).collect()
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    let cfg = Config {
        oversample: cli.global.oversample,
        clique_threshold: cli.global.clique_threshold,
    };
    if !(cfg.oversample.is_finite() && cfg.oversample > 0.0) {
        return Err(CliError::Invalid(format!(
            "--oversample {} must be positive",
            cfg.oversample
        )));
    }
    let s = cli.global.seed;
    let (report, outcome) = match cli.command {
        Command::Sparsify {
            graph,
            mdbd,
            eps,
            out,
            verify,
            round_up_n,
        } => {
            let mut report = RunReport::new(
                "sparsify",
                s,
                json!({"graph": graph.graph, "mdbd": mdbd, "eps": eps, "verify": verify, "config": cfg}),
            );
            let outcome = sparsify(&mut report, &graph, &mdbd, eps, &out, verify, round_up_n, &cfg);
            (report, outcome)
        }
        Command::FitPdf { pdf, n, eps_i, out, mu } => {
            let mut report = RunReport::new("fit-pdf", s, json!({"pdf": pdf, "N": n, "eps_i": eps_i, "mu": mu}));
            let outcome = fit_pdf(&mut report, &pdf, n, eps_i, &out, mu);
            (report, outcome)
        }
        Command::Recover { p, gamma, out } => {
            let mut report = RunReport::new("recover", s, json!({"p": p, "gamma": gamma}));
            let outcome = recover(&mut report, &p, &gamma, &out);
            (report, outcome)
        }
        Command::Escape {
            graph,
            mdbd,
            subset,
            eps,
            exact,
            round_up_n,
        } => {
            let mut report = RunReport::new(
                "escape",
                s,
                json!({"graph": graph.graph, "mdbd": mdbd, "subset": subset, "eps": eps, "config": cfg}),
            );
            let outcome = escape(&mut report, &graph, &mdbd, &subset, eps, exact, round_up_n, &cfg);
            (report, outcome)
        }
        Command::Solve {
            graph,
            b,
            eps,
            chain_eps,
            kappa,
            out,
        } => {
            let mut report = RunReport::new(
                "solve",
                s,
                json!({"graph": graph.graph, "b": b, "eps": eps, "chain_eps": chain_eps, "kappa": kappa, "config": cfg}),
            );
            let outcome = solve(&mut report, &graph, &b, eps, chain_eps, kappa, out.as_deref(), &cfg);
            (report, outcome)
        }
        Command::Verify { x, y, eps } => {
            let mut report = RunReport::new("verify", s, json!({"x": x, "y": y, "eps": eps}));
            let outcome = verify(&mut report, &x, &y, eps);
            (report, outcome)
        }
    };
    match &outcome {
        Err(CliError::Invalid(_)) => {}
        _ => report.emit(cli.global.report.as_deref())?,
    }
    outcome
}

#[allow(clippy::too_many_arguments)]
fn sparsify(
    report: &mut RunReport,
    graph: &GraphArgs,
    mdbd: &Path,
    eps: f64,
    out: &Path,
    verify: bool,
    round_up: bool,
    cfg: &Config,
) -> Result<()> {
    let b = report.time("read", || load_graph(graph))?;
    let mix = fix_degree(load_mdbd(mdbd)?, round_up, report)?;
    report.nnz.insert("input".into(), b.m().nnz());

    let n = b.d().dim();
    let truth = if verify {
        if n <= dense_limit() {
            Some(report.time("dense_truth", || dense_poly(&b, &normalized_gamma(&mix)))?)
        } else {
            report.warnings.push(format!(
                "--verify skipped: n = {n} exceeds the dense limit {}",
                dense_limit()
            ));
            None
        }
    } else {
        None
    };

    let attempts = if truth.is_some() { VERIFY_ATTEMPTS } else { 1 };
    let mut last = None;
    for attempt in 0..attempts {
        let run_seed = if attempt == 0 {
            report.seed
        } else {
            seed::derive(report.seed, u64::from(attempt))
        };
        let output = report.time("sparsify", || ss_mdbd(&b, &mix, eps, run_seed, cfg))?;
        let Some(truth) = &truth else {
            last = Some((output, None, run_seed, attempt + 1));
            break;
        };
        let (ok, bounds) = match report.time("verify", || approx_check(&output.matrix.to_dense(), truth, eps)) {
            Ok(r) => (r.0, Some(r.1)),
            Err(polysparse::Error::KernelMismatch { .. }) => (false, None),
            Err(e) => return Err(e.into()),
        };
        last = Some((output, Some((ok, bounds)), run_seed, attempt + 1));
        if ok {
            break;
        }
    }
    let (output, check, run_seed, used) = last.expect("at least one attempt");
    report.nnz.insert("output".into(), output.matrix.m().nnz());
    report.result = json!({
        "branch": format!("{:?}", output.branch),
        "delta": output.delta,
        "schedule": {
            "eps_init": output.schedule.eps_init,
            "eps_step": output.schedule.eps_step,
            "eps_final": output.schedule.eps_final,
            "levels": output.schedule.levels,
        },
        "kind": format!("{:?}", output.matrix.kind()),
        "out": out,
    });
    report.time("write", || write_matrix(out, &output.matrix))?;
    if let Some((ok, bounds)) = check {
        report.verification = Some(Verification {
            eps,
            attempts: used,
            passed: ok,
            bounds,
            seed: run_seed,
        });
        if !ok {
            return Err(CliError::Verification(format!(
                "no attempt passed within {VERIFY_ATTEMPTS} tries"
            )));
        }
    }
    Ok(())
}

fn fit_pdf(report: &mut RunReport, pdf: &str, n: usize, eps_i: f64, out: &Path, mu: f64) -> Result<()> {
    let which: Canonical = pdf.parse()?;
    let w = canonical_pdf(which)?;
    let fit = report.time("fit", || app_dscr_pdf(&w, n, eps_i))?;
    let rows = residual_table(&w, &fit, eps_i, 2.0)?;
    let conditions = check_pdf_conditions(&w, &ConditionParams::new(n, mu));
    for c in conditions.iter().filter(|c| !c.passed) {
        report.warnings.push(format!(
            "condition {} fails: measured {} > bound {}",
            c.name, c.measured, c.bound
        ));
    }
    report.warnings.extend(fit.warnings.iter().cloned());
    write_json(out, &fit.mdbd)?;
    report.result = json!({
        "N": n,
        "T": fit.mdbd.size(),
        "grid": fit.grid,
        "delta": fit.mdbd.delta(),
        "delta_w": fit.delta_w,
        "s_n": fit.s_n,
        "s_t": fit.s_t,
        "dropped": fit.dropped,
        "conditions": conditions,
        "residuals": rows,
        "out": out,
    });
    Ok(())
}

fn recover(report: &mut RunReport, p: &Path, gamma: &Path, out: &Path) -> Result<()> {
    let p = context(read_vector(p), p)?;
    let gamma = context(read_vector(gamma), gamma)?;
    let rec = report.time("recover", || recover_alpha(&p, &gamma))?;
    if !rec.valid {
        report.warnings.push("recovered weights are not all in (0, 1)".into());
    }
    write_json(out, &rec)?;
    report.result = serde_json::to_value(&rec).map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn escape(
    report: &mut RunReport,
    graph: &GraphArgs,
    mdbd: &Path,
    subset: &Path,
    eps: f64,
    exact: bool,
    round_up: bool,
    cfg: &Config,
) -> Result<()> {
    let b = load_graph(graph)?;
    let mix = fix_degree(load_mdbd(mdbd)?, round_up, report)?;
    let members = context(read_indices(subset), subset)?;
    let s = SubsetIndicator::new(b.d(), &members)?;
    let run_seed = report.seed;
    let out = report.time("sparsify", || ss_mdbd(&b, &mix, eps, run_seed, cfg))?;
    report.nnz.insert("output".into(), out.matrix.m().nnz());
    let estimate = egep_estimate(b.d(), out.matrix.m(), &s)?;
    let mut result = json!({"estimate": estimate, "subset_size": members.len(), "delta": out.delta});
    if exact {
        let truth = report.time("exact", || expected_escape(&b, &normalized_gamma(&mix), &s))?;
        result["exact"] = json!(truth);
        result["ratio"] = json!(estimate / truth);
    }
    report.result = result;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn solve(
    report: &mut RunReport,
    graph: &GraphArgs,
    rhs: &Path,
    eps: f64,
    chain_eps: f64,
    kappa: Option<f64>,
    out: Option<&Path>,
    cfg: &Config,
) -> Result<()> {
    let b = load_graph(graph)?;
    let rhs = context(read_vector(rhs), rhs)?;
    let run_seed = report.seed;
    let chain = report.time("chain", || build_inverse_chain(&b, chain_eps, kappa, run_seed, cfg))?;
    for (k, level) in chain.levels().iter().enumerate() {
        report.nnz.insert(format!("level_{k}"), level.nnz());
    }
    let sol = report.time("richardson", || solve_sddm(&b, &rhs, eps, &chain))?;
    if let Some(path) = out {
        write_json(path, &sol.x)?;
    }
    report.result = json!({
        "iterations": sol.iterations,
        "residual": sol.residual,
        "theta": sol.theta,
        "depth": chain.depth(),
        "x": sol.x,
    });
    Ok(())
}

fn verify(report: &mut RunReport, x: &Path, y: &Path, eps: f64) -> Result<()> {
    let a = context(read_matrix(x), x)?;
    let b = context(read_matrix(y), y)?;
    let (ok, bounds) = report.time("verify", || approx_check(&a.to_dense(), &b.to_dense(), eps))?;
    report.verification = Some(Verification {
        eps,
        attempts: 1,
        passed: ok,
        bounds: Some(bounds),
        seed: report.seed,
    });
    report.result =
        json!({"x_nnz": a.m().nnz(), "y_nnz": b.m().nnz(), "same_text": format_matrix(&a) == format_matrix(&b)});
    if ok {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "bounds [{}, {}] leave [1 - {eps}, 1 + {eps}]",
            bounds.lambda_min, bounds.lambda_max
        )))
    }
}
