//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use polysparse::generators::{er_laplacian, er_sddm, random_tmatrix};
use polysparse::io::format_matrix;
use polysparse::markov::{build_inverse_chain, egep_estimate, expected_escape, solve_sddm, SubsetIndicator};
use polysparse::mdbd::{
    app_dscr_pdf, bernstein, canonical_pdf, induce_gamma, residual_table, Canonical, Mdbd, SmoothPdf,
};
use polysparse::oracle::{approx_check, dense_poly};
use polysparse::poly::{lazy_ss, pwr_ss, ss_mdbd, InitBranch};
use polysparse::recover::recover_alpha;
use polysparse::sparsify::{two_hop_decompose, Config};
use polysparse::{Error, TMatrix};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 10;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome>);

fn monomial(degree: usize) -> Vec<f64> {
    let mut g = vec![0.0; degree + 1];
    g[degree] = 1.0;
    g
}

fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    (0..=n).map(|i| bernstein(n, i, p).unwrap()).collect()
}

fn passes(x: &DMatrix<f64>, y: &DMatrix<f64>, eps: f64) -> bool {
    matches!(approx_check(x, y, eps), Ok((true, _)))
}

fn criterion_1(cfg: &Config) -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let mut slowest = Duration::ZERO;
    for sddm in [false, true] {
        for degree in [2usize, 4, 8] {
            let mut good = 0;
            for seed in 0..SEEDS {
                let b = if sddm {
                    er_sddm(60, 0.4, 1.5, seed).unwrap()
                } else {
                    er_laplacian(60, 0.4, seed).unwrap()
                };
                let truth = dense_poly(&b, &monomial(degree)).unwrap();
                let start = Instant::now();
                let out = pwr_ss(&b, degree, 0.4, seed, cfg);
                slowest = slowest.max(start.elapsed());
                if let Ok(out) = out {
                    if passes(&out.matrix.to_dense(), &truth, 0.4) {
                        good += 1;
                    }
                }
            }
            let label = if sddm { "sddm" } else { "laplacian" };
            notes.push(format!("{label} N={degree}: {good}/{SEEDS}"));
            ok &= good >= 9;
        }
    }
    ok &= slowest <= Duration::from_secs(10);
    let msg = format!("{}; slowest run {:.2?}", notes.join(", "), slowest);
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_2(cfg: &Config) -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for p in [0.25, 0.5, 0.75] {
        let mut good = 0;
        let mut fast = true;
        for seed in 0..SEEDS {
            let b = er_laplacian(60, 0.4, seed).unwrap();
            let truth = dense_poly(&b, &binomial_pmf(8, p)).unwrap();
            match lazy_ss(&b, 8, p, 0.4, seed, cfg) {
                Ok(out) => {
                    fast &= out.branch == InitBranch::Fss;
                    if passes(&out.matrix.to_dense(), &truth, 0.4) {
                        good += 1;
                    }
                }
                Err(_) => fast = false,
            }
        }
        notes.push(format!("p={p}: {good}/{SEEDS}"));
        ok &= good >= 9;
        if p <= 0.5 {
            ok &= fast;
            notes.push(format!("fast path at p={p}: {fast}"));
        }
    }
    let msg = notes.join(", ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_3(cfg: &Config) -> Outcome {
    let fit = app_dscr_pdf(&SmoothPdf::uniform(), 16, 0.25).map_err(|e| e.to_string())?;
    let mix = fit.mdbd;
    let mass = 1.0 - mix.delta();
    let gamma: Vec<f64> = induce_gamma(&mix).iter().map(|g| g / mass).collect();
    let eps = 0.5;
    let n = 40.0f64;
    let bound = 4.0 * n * n.ln() / (eps * eps);
    let mut good = 0;
    let mut worst_nnz = 0;
    for seed in 0..SEEDS {
        let b = er_laplacian(40, 0.3, seed).unwrap();
        let truth = dense_poly(&b, &gamma).unwrap();
        if let Ok(out) = ss_mdbd(&b, &mix, eps, seed, cfg) {
            worst_nnz = worst_nnz.max(out.matrix.m().nnz());
            if passes(&out.matrix.to_dense(), &truth, eps) {
                good += 1;
            }
        }
    }
    let msg = format!("T={} {good}/{SEEDS}, max nnz {worst_nnz} (bound {bound:.0})", fit.grid);
    if good >= 9 && (worst_nnz as f64) <= bound {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut values = Vec::new();
    for i in 3..=5 {
        let sum: f64 = (1..=16).map(|j| bernstein(8, i, j as f64 / 17.0).unwrap()).sum();
        values.push(sum / 17.0);
    }
    let elapsed = start.elapsed();
    let lo = 0.75 / 9.0;
    let hi = 1.25 / 9.0;
    let inside = values.iter().all(|v| (lo..=hi).contains(v));
    let msg = format!("values {values:.5?} in [{lo:.5}, {hi:.5}], {elapsed:.2?}");
    if inside && elapsed < Duration::from_millis(1) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_5() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for which in [Canonical::Uniform, Canonical::Exponential(1.0)] {
        let w = canonical_pdf(which).map_err(|e| e.to_string())?;
        let fit = app_dscr_pdf(&w, 32, 0.25).map_err(|e| e.to_string())?;
        let rows = residual_table(&w, &fit, 0.25, 2.0).map_err(|e| e.to_string())?;
        let covers = rows.first().map(|r| r.i) == Some(3) && rows.last().map(|r| r.i) == Some(29);
        let outside = rows.iter().filter(|r| !r.within).count();
        let worst = rows.iter().map(|r| r.residual / r.slack).fold(0.0f64, f64::max);
        notes.push(format!(
            "{}: {outside} outside, worst residual/slack {worst:.3}",
            w.name()
        ));
        ok &= covers && outside == 0;
    }
    let msg = notes.join(", ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for n in 1..=12usize {
        let p: Vec<f64> = (1..=n + 1).map(|j| j as f64 / (n + 2) as f64).collect();
        let raw: Vec<f64> = (0..=n).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let alpha: Vec<f64> = raw.iter().map(|a| 0.9 * a / total).collect();
        let mix = Mdbd::new(n, p.clone(), alpha.clone()).map_err(|e| e.to_string())?;
        let rec = recover_alpha(&p, &induce_gamma(&mix)).map_err(|e| format!("N={n}: {e}"))?;
        for (a, b) in rec.alpha.iter().zip(&alpha) {
            worst = worst.max((a - b).abs());
        }
    }
    let n = 30usize;
    let p: Vec<f64> = (1..=n + 1).map(|j| j as f64 / (n + 2) as f64).collect();
    let alpha = vec![0.9 / (n + 1) as f64; n + 1];
    let mix = Mdbd::new(n, p.clone(), alpha).map_err(|e| e.to_string())?;
    let refused = matches!(
        recover_alpha(&p, &induce_gamma(&mix)),
        Err(Error::IllConditioned { .. })
    );
    let msg = format!("max error {worst:.2e} for N<=12, N=30 refused: {refused}");
    if worst <= 1e-8 && refused {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_7(cfg: &Config) -> Outcome {
    let eps = 0.5;
    let b = er_laplacian(40, 0.3, 7).unwrap();
    let mix = Mdbd::new(8, vec![0.25, 0.5, 0.75], vec![0.25, 0.5, 0.25]).map_err(|e| e.to_string())?;
    let gamma = induce_gamma(&mix);
    let out = ss_mdbd(&b, &mix, eps, 7, cfg).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..20 {
        let size = rng.random_range(1..=20);
        let members = sample(&mut rng, 40, size).into_vec();
        let s = SubsetIndicator::new(b.d(), &members).map_err(|e| e.to_string())?;
        let est = egep_estimate(b.d(), out.matrix.m(), &s).map_err(|e| e.to_string())?;
        let exact = expected_escape(&b, &gamma, &s).map_err(|e| e.to_string())?;
        let ratio = est / exact;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let msg = format!("ratios in [{lo:.4}, {hi:.4}] over 20 subsets");
    if lo >= 1.0 - eps && hi <= 1.0 + eps {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_8(cfg: &Config) -> Outcome {
    let cap = 200 * (1e8f64).ln().ceil() as usize;
    let mut good = 0;
    let mut worst_err = 0.0f64;
    let mut most_iters = 0;
    for seed in 0..SEEDS {
        let b = er_sddm(50, 0.3, 1.5, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rhs: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let Ok(chain) = build_inverse_chain(&b, 0.5, None, seed, cfg) else {
            continue;
        };
        let Ok(report) = solve_sddm(&b, &rhs, 1e-8, &chain) else {
            continue;
        };
        let exact = b
            .to_dense()
            .cholesky()
            .map(|c| c.solve(&DVector::from_column_slice(&rhs)))
            .ok_or("dense factorization failed")?;
        let err = (DVector::from_column_slice(&report.x) - &exact).norm() / exact.norm();
        worst_err = worst_err.max(err);
        most_iters = most_iters.max(report.iterations);
        if report.residual <= 1e-8 && report.iterations <= cap && err <= 1e-6 {
            good += 1;
        }
    }
    let msg = format!("{good}/{SEEDS} converged, max iterations {most_iters} (cap {cap}), max error {worst_err:.2e}");
    if good >= 9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn two_hop_dense(b: &TMatrix) -> DMatrix<f64> {
    let d = b.d().to_dense();
    let m = b.m().to_dense();
    let inv = DMatrix::from_diagonal(&DVector::from_iterator(
        b.d().dim(),
        b.d().values().iter().map(|v| 1.0 / v),
    ));
    &d - &m * inv * &m
}

fn criterion_9() -> Outcome {
    let mut worst = 0.0f64;
    let mut with_loops = 0;
    for seed in 0..50u64 {
        let n = 5 + (seed as usize * 7) % 46;
        let b = random_tmatrix(n, 0.3, seed).unwrap();
        if b.m().diagonal().iter().any(|v| *v != 0.0) {
            with_loops += 1;
        }
        let dec = two_hop_decompose(&b).map_err(|e| e.to_string())?;
        let scale = b.d().values().iter().fold(0.0f64, |m, v| m.max(*v));
        let err = (dec.to_dense() - two_hop_dense(&b)).amax() / scale;
        worst = worst.max(err);
    }
    let msg = format!("max relative error {worst:.2e}, {with_loops}/50 with self-loops");
    if worst <= 1e-8 && with_loops > 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn artifacts(cfg: &Config) -> (String, String, String) {
    let fit = app_dscr_pdf(&SmoothPdf::uniform(), 16, 0.25).unwrap();
    let mix_json = serde_json::to_string_pretty(&fit.mdbd).unwrap();
    let b = er_laplacian(40, 0.3, 3).unwrap();
    let mixed = ss_mdbd(&b, &fit.mdbd, 0.5, 11, cfg).unwrap();
    let big = er_laplacian(300, 1.0, 5).unwrap();
    let sampled = pwr_ss(&big, 2, 0.9, 11, cfg).unwrap();
    (mix_json, format_matrix(&mixed.matrix), format_matrix(&sampled.matrix))
}

fn criterion_10(cfg: &Config) -> Outcome {
    let first = artifacts(cfg);
    let second = artifacts(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| e.to_string())?;
    let serial = pool.install(|| artifacts(cfg));
    let msg = format!(
        "MDBD {} bytes, matrices {} and {} bytes",
        first.0.len(),
        first.1.len(),
        first.2.len()
    );
    if first == second && first == serial {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let cfg = Config::default();
    let criteria: Vec<Criterion> = vec![
        ("monomial sparsification", Box::new(move || criterion_1(&cfg))),
        ("single Binomial", Box::new(move || criterion_2(&cfg))),
        ("mixture", Box::new(move || criterion_3(&cfg))),
        ("uniform bound", Box::new(criterion_4)),
        ("pdf approximation", Box::new(criterion_5)),
        ("recovery round-trip", Box::new(criterion_6)),
        ("escaping probability", Box::new(move || criterion_7(&cfg))),
        ("SDDM solve", Box::new(move || criterion_8(&cfg))),
        ("two-hop reassembly", Box::new(criterion_9)),
        ("determinism", Box::new(move || criterion_10(&cfg))),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(msg) => println!("criterion {}: PASS {name}: {msg}", k + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {msg}", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
