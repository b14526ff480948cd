//! Browser bindings for the `polysparse` demo page.
//!
//! Every export returns a JSON string; errors become JS exceptions.

use polysparse::generators::er_laplacian;
use polysparse::mdbd::{app_dscr_pdf, canonical_pdf, induce_gamma, Canonical, Mdbd};
use polysparse::oracle::{approx_check, dense_poly};
use polysparse::poly::ss_mdbd;
use polysparse::recover::recover_alpha;
use polysparse::sparsify::{mklc, Config};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest graph the page will build; the dense check is cubic.
pub const MAX_NODES: usize = 400;

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Fits an MDBD to `pdf` and compares the induced coefficients with `w(i/N)/S_N`.
pub fn fit(pdf: &str, n: usize, eps_i: f64) -> Result<Value, String> {
    let w = canonical_pdf(pdf.parse::<Canonical>().map_err(fail)?).map_err(fail)?;
    let fit = app_dscr_pdf(&w, n, eps_i).map_err(fail)?;
    let gamma = induce_gamma(&fit.mdbd);
    let target: Vec<f64> = (0..=n).map(|i| w.w(i as f64 / n as f64) / fit.s_n).collect();
    Ok(json!({
        "p": fit.mdbd.p(),
        "alpha": fit.mdbd.alpha(),
        "delta_w": fit.delta_w,
        "grid": fit.grid,
        "gamma": gamma,
        "target": target,
        "warnings": fit.warnings,
    }))
}

/// Sparsifies an Erdős–Rényi Laplacian and checks the result densely.
///
/// `degree == 0` sparsifies the graph itself; otherwise the target is the
/// uniform-mixture polynomial of that degree.
pub fn sparsify(n: usize, density: f64, degree: usize, eps: f64, oversample: f64, seed: u64) -> Result<Value, String> {
    if n > MAX_NODES {
        return Err(format!("n = {n} exceeds the demo limit {MAX_NODES}"));
    }
    let b = er_laplacian(n, density, seed).map_err(fail)?;
    let cfg = Config {
        oversample,
        ..Config::default()
    };
    let (out, truth, branch) = if degree == 0 {
        (
            mklc(&b, eps, seed, &cfg).map_err(fail)?,
            b.to_dense(),
            "Graph".to_string(),
        )
    } else {
        let w = canonical_pdf(Canonical::Uniform).map_err(fail)?;
        let mix = app_dscr_pdf(&w, degree, 0.25).map_err(fail)?.mdbd;
        let out = ss_mdbd(&b, &mix, eps, seed, &cfg).map_err(fail)?;
        let mass = 1.0 - mix.delta();
        let gamma: Vec<f64> = induce_gamma(&mix).iter().map(|g| g / mass).collect();
        (
            out.matrix,
            dense_poly(&b, &gamma).map_err(fail)?,
            format!("{:?}", out.branch),
        )
    };
    let (ok, bounds) = approx_check(&out.to_dense(), &truth, eps).map_err(fail)?;
    let dense_nnz = truth.iter().filter(|v| v.abs() > 0.0).count();
    let edges: Vec<[usize; 2]> = out
        .m()
        .entries()
        .iter()
        .filter(|e| e.0 != e.1)
        .map(|e| [e.0, e.1])
        .collect();
    Ok(json!({
        "n": n,
        "input_nnz": b.m().nnz(),
        "output_nnz": out.m().nnz(),
        "dense_nnz": dense_nnz,
                "passed": ok,
        "lambda_min": bounds.lambda_min,
        "lambda_max": bounds.lambda_max,
        "branch": branch,
        "edges": edges,
    }))
}

/// Builds `γ` from known weights, recovers them and reports the error.
pub fn recover(degree: usize, p: &[f64], alpha: &[f64]) -> Result<Value, String> {
    let mix = Mdbd::new(degree, p.to_vec(), alpha.to_vec()).map_err(fail)?;
    let gamma = induce_gamma(&mix);
    let rec = recover_alpha(p, &gamma).map_err(fail)?;
    let error = rec
        .alpha
        .iter()
        .zip(alpha)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(json!({
        "gamma": gamma,
        "alpha": rec.alpha,
        "error": error,
        "residual": rec.residual,
        "condition": rec.condition,
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = fitPdf)]
pub fn fit_pdf(pdf: &str, n: usize, eps_i: f64) -> Result<String, JsError> {
    to_js(fit(pdf, n, eps_i))
}

#[wasm_bindgen(js_name = sparsifyDemo)]
pub fn sparsify_demo(
    n: usize,
    density: f64,
    degree: usize,
    eps: f64,
    oversample: f64,
    seed: u32,
) -> Result<String, JsError> {
    to_js(sparsify(n, density, degree, eps, oversample, u64::from(seed)))
}

#[wasm_bindgen(js_name = recoverDemo)]
pub fn recover_demo(degree: usize, p: Vec<f64>, alpha: Vec<f64>) -> Result<String, JsError> {
    to_js(recover(degree, &p, &alpha))
}
