//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a criterion fails that is not listed in `KNOWN_FAILURES`.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use gdms::measures::{construct_generic_word, q_of_periodic, GenericWordOptions};
use gdms::multifractal::{independence_certificate, BetaOptions, BetaSolver, Independence};
use gdms::thermo::{bowen_dimension, classify_regularity, estimate_theta, BowenOptions, Regularity};
use gdms::{Alphabet, Expr, Interval, PotentialVector, SystemDescriptor, TailRule, Word};
use gdms_cli::output::csv_body;
use gdms_cli::{run, RunOptions, Verb};
use serde_json::Value;

/// M = 100 with n <= 1e5 gives c_n < 0: no probability vector exists.
const KNOWN_FAILURES: &[u32] = &[9];

const LN2: f64 = std::f64::consts::LN_2;
const LEGENDRE_TOL: f64 = 1e-7;
/// Dimension of the continued fraction set with digits 1 and 2, known to
/// many more digits than any tolerance used here.
const E2_DIM: f64 = 0.531_280_506_277_205;

const COIN: &str = r#""system": { "kind": "similarity", "ratios": [0.5, 0.5] },
  "potential": { "kind": "per-symbol", "values": [[0.0], [1.0]] },
  "numerics": { "n": 8, "tol": 1e-10 }"#;

const CF_EXAMPLE: &str = r#""system": { "kind": "continued-fraction", "alphabet": "infinite" },
  "potential": { "kind": "cf-parity" }"#;

struct Report {
    pass: bool,
    detail: String,
    fingerprint: String,
}

type Res = Result<Report, String>;

/// Results shared between criteria, filled on the single-worker pass.
#[derive(Default)]
struct Shared {
    coin_spectrum: Vec<Row>,
    example_spectrum: Vec<Row>,
    example_grad0: Vec<f64>,
    example_beta0: Option<(Interval, f64)>,
    min_beta_width: f64,
}

type Row = HashMap<String, String>;

struct Artifacts {
    _dir: tempfile::TempDir,
    files: HashMap<String, String>,
    fingerprint: String,
}

fn cli(verb: Verb, config: &str, workers: usize) -> Result<Artifacts, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let opts = RunOptions { out: dir.path().to_path_buf(), workers: Some(workers), seed: None, verbose: false };
    let outcome = run(verb, config, &opts).map_err(|e| format!("{} failed: {e}", verb.name()))?;
    let mut files = HashMap::new();
    let mut fingerprint = String::new();
    for path in &outcome.files {
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let body = if name.ends_with(".json") {
            let v: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            v["result"].to_string()
        } else {
            csv_body(&text)
        };
        fingerprint.push_str(&format!("== {name}\n{body}\n"));
        files.insert(name, text);
    }
    Ok(Artifacts { _dir: dir, files, fingerprint })
}

fn table(text: &str) -> Vec<Row> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| header.iter().zip(rec.unwrap().iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect()
}

fn f(row: &Row, key: &str) -> f64 {
    match row[key].as_str() {
        "inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        s => s.parse().unwrap_or(f64::NAN),
    }
}

fn vec_of(row: &Row, prefix: &str, d: usize) -> Vec<f64> {
    if d == 1 {
        vec![f(row, prefix)]
    } else {
        (1..=d).map(|i| f(row, &format!("{prefix}{i}"))).collect()
    }
}

fn json(a: &Artifacts, name: &str) -> Value {
    serde_json::from_str::<Value>(&a.files[name]).unwrap()["result"].clone()
}

fn interval(v: &Value) -> Interval {
    Interval::new(v["lo"].as_f64().unwrap(), v["hi"].as_f64().unwrap())
}

fn pooled<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap().install(f)
}

fn grid_text(points: &[Vec<f64>]) -> String {
    serde_json::to_string(points).unwrap()
}

fn coin_beta(t: f64) -> f64 {
    (1.0 + t.exp()).ln() / LN2
}

fn coin_grad(t: f64) -> f64 {
    t.exp() / (1.0 + t.exp()) / LN2
}

fn c1(w: usize, sh: &mut Shared) -> Res {
    let ts: Vec<Vec<f64>> = (-3..=3).map(|t| vec![t as f64]).collect();
    let cfg = format!("{{ {COIN}, \"beta\": {{ \"t\": {} }} }}", grid_text(&ts));
    let start = Instant::now();
    let a = cli(Verb::Beta, &cfg, w)?;
    let elapsed = start.elapsed();
    let rows = table(&a.files["beta.csv"]);
    let mut err_b = 0f64;
    let mut err_g = 0f64;
    for r in &rows {
        let t = f(r, "t");
        err_b = err_b.max((f(r, "central") - coin_beta(t)).abs());
        err_g = err_g.max((f(r, "grad") - coin_grad(t)).abs());
    }

    let g0 = coin_grad(0.0);
    let alphas: Vec<Vec<f64>> = [-0.4, -0.2, -0.1, 0.0, 0.1, 0.2, 0.4].iter().map(|d| vec![g0 + d]).collect();
    let cfg = format!("{{ {COIN}, \"spectrum\": {{ \"alpha\": {} }} }}", grid_text(&alphas));
    let s = cli(Verb::Spectrum, &cfg, w)?;
    sh.coin_spectrum = table(&s.files["spectrum.csv"]);

    Ok(Report {
        pass: rows.len() == 7 && err_b <= 1e-6 && err_g <= 1e-5 && elapsed < Duration::from_secs(5),
        detail: format!("max |beta - closed form| = {err_b:.2e}, max |grad - closed form| = {err_g:.2e}, {elapsed:.2?}"),
        fingerprint: a.fingerprint + &s.fingerprint,
    })
}

fn c2(w: usize, _: &mut Shared) -> Res {
    let cfg = r#"{ "system": { "kind": "similarity", "ratios": [0.3333333333333333, 0.3333333333333333] },
      "numerics": { "n": 4, "tol": 1e-10 } }"#;
    let start = Instant::now();
    let a = cli(Verb::Dimension, cfg, w)?;
    let elapsed = start.elapsed();
    let d = interval(&json(&a, "dimension.json")["hausdorff_dim"]);
    // The ratio is the double nearest 1/3, so the exact zero is log 2 / -log(r).
    let exact = 2f64.ln() / -(1.0f64 / 3.0).ln();
    Ok(Report {
        pass: d.lo <= exact && exact <= d.hi && d.width() <= 1e-9 && elapsed < Duration::from_secs(1),
        detail: format!("[{:.15}, {:.15}] width {:.1e}, {elapsed:.2?}", d.lo, d.hi, d.width()),
        fingerprint: a.fingerprint,
    })
}

fn c3(w: usize, _: &mut Shared) -> Res {
    let start = Instant::now();
    let mut encs = Vec::new();
    let mut fp = String::new();
    for (n, tol) in [(12, 1e-6), (16, 2e-8)] {
        let cfg = format!(
            r#"{{ "system": {{ "kind": "continued-fraction", "alphabet": 2 }}, "numerics": {{ "n": {n}, "tol": {tol} }} }}"#
        );
        let a = cli(Verb::Dimension, &cfg, w)?;
        encs.push(interval(&json(&a, "dimension.json")["hausdorff_dim"]));
        fp += &a.fingerprint;
    }
    let elapsed = start.elapsed();
    let (e12, e16) = (encs[0], encs[1]);
    let ok_each = encs.iter().all(|e| e.width() <= 2e-3 && e.contains(E2_DIM) && (e.mid() - 0.5313).abs() < 5e-5);
    let nested = e12.lo <= e16.lo && e16.hi <= e12.hi;
    Ok(Report {
        pass: ok_each && nested && elapsed < Duration::from_secs(60),
        detail: format!(
            "n=12 [{:.9}, {:.9}], n=16 [{:.9}, {:.9}], nested {nested}, {elapsed:.2?}",
            e12.lo, e12.hi, e16.lo, e16.hi
        ),
        fingerprint: fp,
    })
}

fn c4(w: usize, _: &mut Shared) -> Res {
    let sys = SystemDescriptor::continued_fraction(Alphabet::Infinite)
        .with_tail(Some(TailRule::Expression(Expr::parse("k^-2").map_err(|e| e.to_string())?)));
    let start = Instant::now();
    let (theta, reg) = pooled(w, || (estimate_theta(&sys, None), classify_regularity(&sys, &[0.5, 1.0], 4, 8)));
    let elapsed = start.elapsed();
    let reg = reg.map_err(|e| e.to_string())?;
    let th = theta.enclosure.ok_or("theta undetermined")?;
    let pass = th.lo >= 0.5 - 1e-9
        && th.hi <= 0.5 + 1e-9
        && reg.class == Regularity::CoFinitelyRegular
        && elapsed < Duration::from_secs(1);
    Ok(Report {
        pass,
        detail: format!("theta [{}, {}], {:?}, {elapsed:.2?}", th.lo, th.hi, reg.class),
        fingerprint: serde_json::to_string(&(theta, reg)).unwrap(),
    })
}

fn example_solver(n: usize, trunc: u32) -> BetaSolver {
    let sys = SystemDescriptor::continued_fraction(Alphabet::Infinite);
    let opts = BetaOptions { n, truncation: trunc, tol: 1e-3, enclose: false, ..Default::default() };
    BetaSolver::new(&sys, &PotentialVector::cf_parity_example(), opts).unwrap()
}

fn c5(w: usize, sh: &mut Shared) -> Res {
    let cfg = format!(
        r#"{{ {CF_EXAMPLE}, "numerics": {{ "n": 10, "truncation": 24, "tol": 1e-3 }},
          "beta": {{ "t": [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 1.0]] }} }}"#
    );
    let start = Instant::now();
    let a = cli(Verb::Beta, &cfg, w)?;
    let elapsed = start.elapsed();
    let rows = table(&a.files["beta.csv"]);
    let mut disc = 0f64;
    for r in &rows {
        let g = vec_of(r, "grad", 2);
        let fd = vec_of(r, "grad_fd", 2);
        disc = disc.max(g.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    // Independent audit: coarser central differences from a fresh solver.
    let mut audit = 0f64;
    if w == 1 {
        let s = example_solver(10, 24);
        let h = 1e-3;
        for r in &rows {
            let t = vec_of(r, "t", 2);
            let g = vec_of(r, "grad", 2);
            for i in 0..2 {
                let mut tp = t.clone();
                let mut tm = t.clone();
                tp[i] += h;
                tm[i] -= h;
                let bp = s.solve_central(&tp, None).map_err(|e| e.to_string())?.0;
                let bm = s.solve_central(&tm, None).map_err(|e| e.to_string())?.0;
                audit = audit.max(((bp - bm) / (2.0 * h) - g[i]).abs());
            }
        }
        let r0 = &rows[0];
        sh.example_grad0 = vec_of(r0, "grad", 2);
        sh.example_beta0 = Some((Interval::new(f(r0, "lower"), f(r0, "upper")), f(r0, "central")));
        sh.min_beta_width = rows.iter().map(|r| f(r, "upper") - f(r, "lower")).fold(f64::INFINITY, f64::min);
    }

    let g0 = &sh.example_grad0;
    let mut alphas = Vec::new();
    for dx in [-0.04, 0.0, 0.04] {
        for dy in [-0.04, 0.0, 0.04] {
            alphas.push(vec![g0[0] + dx, g0[1] + dy]);
        }
    }
    let cfg = format!(
        r#"{{ {CF_EXAMPLE}, "numerics": {{ "n": 10, "truncation": 24, "tol": 1e-6 }},
          "spectrum": {{ "alpha": {} }} }}"#,
        grid_text(&alphas)
    );
    let s = cli(Verb::Spectrum, &cfg, w)?;
    if w == 1 {
        sh.example_spectrum = table(&s.files["spectrum.csv"]);
    }
    Ok(Report {
        pass: rows.len() == 4 && disc <= 1e-3 && audit <= 1e-3 && elapsed < Duration::from_secs(600),
        detail: format!("max |Gibbs - FD| = {disc:.2e}, independent h=1e-3 audit {audit:.2e}, {elapsed:.2?}"),
        fingerprint: a.fingerprint + &s.fingerprint,
    })
}

/// Duality and maximum checks for one scanned spectrum.
fn duality(
    rows: &[Row],
    d: usize,
    solver: &BetaSolver,
    grad0: &[f64],
    beta0: f64,
) -> Result<(f64, f64, bool, f64), String> {
    let beta = |t: &[f64]| solver.solve_central(t, None).map(|x| x.0).map_err(|e| e.to_string());
    let mut dual_gap = 0f64;
    let mut inf_violation = 0f64;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in rows {
        let alpha = vec_of(r, "alpha", d);
        let bh = f(r, "beta_hat");
        if best.as_ref().is_none_or(|b| bh > b.0) {
            best = Some((bh, alpha.clone()));
        }
        if r["status"] != "interior" {
            continue;
        }
        let ts = vec_of(r, "t_star", d);
        let dot = |t: &[f64]| t.iter().zip(&alpha).map(|(a, b)| a * b).sum::<f64>();
        dual_gap = dual_gap.max((beta(&ts)? - dot(&ts) - bh).abs());
        let mut probes = vec![vec![0.0; d]];
        for i in 0..d {
            for s in [-0.25, 0.25] {
                let mut t = ts.clone();
                t[i] += s;
                probes.push(t);
            }
        }
        for t in probes {
            inf_violation = inf_violation.max(bh - (beta(&t)? - dot(&t)));
        }
    }
    let (max_val, argmax) = best.ok_or("empty spectrum")?;
    let at_grad0 = argmax.iter().zip(grad0).all(|(a, b)| (a - b).abs() <= 1e-12);
    Ok((dual_gap, inf_violation, at_grad0 && (max_val - beta0).abs() <= 2.0 * LEGENDRE_TOL, max_val))
}

fn c6(_: usize, sh: &mut Shared) -> Res {
    let coin_sys = SystemDescriptor::similarity(vec![0.5, 0.5]).unwrap();
    let coin_j = PotentialVector::per_symbol(vec![vec![0.0], vec![1.0]]).unwrap();
    let coin = BetaSolver::new(&coin_sys, &coin_j, BetaOptions { n: 8, truncation: 2, tol: 1e-10, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let coin_dim = bowen_dimension(&coin_sys, &BowenOptions { n: 4, truncation: 2, tol: 1e-10, ..Default::default() })
        .map_err(|e| e.to_string())?
        .enclosure;
    let (g1, v1, m1, max1) = duality(&sh.coin_spectrum, 1, &coin, &[coin_grad(0.0)], coin_beta(0.0))?;
    let coin_ok = coin_dim.lo - LEGENDRE_TOL <= max1 && max1 <= coin_dim.hi + LEGENDRE_TOL;

    let example = example_solver(10, 24);
    let (enc0, central0) = sh.example_beta0.ok_or("criterion 5 did not run")?;
    let (g2, v2, m2, max2) = duality(&sh.example_spectrum, 2, &example, &sh.example_grad0, central0)?;
    // beta is solved on the first 24 digits; compare with that subsystem.
    let trunc = SystemDescriptor::continued_fraction(Alphabet::Finite(24));
    // Transfer-ratio brackets, independent of the word-sum kernel behind beta.
    let dim24 = bowen_dimension(&trunc, &BowenOptions { n: 3, truncation: 24, tol: 2e-2, ..Default::default() })
        .map_err(|e| e.to_string())?;
    if !dim24.ratio_method {
        return Err("expected transfer-ratio brackets for the 24 digit subsystem".into());
    }
    let dim24 = dim24.enclosure;
    let example_ok = enc0.lo <= dim24.hi && dim24.lo <= enc0.hi && dim24.lo - LEGENDRE_TOL <= max2 && max2 <= dim24.hi + LEGENDRE_TOL;

    let interior = |rows: &[Row]| rows.iter().filter(|r| r["status"] == "interior").count();
    let n_int = interior(&sh.coin_spectrum) + interior(&sh.example_spectrum);
    let tol2 = 2.0 * LEGENDRE_TOL;
    let pass = n_int > 0 && g1.max(g2) <= tol2 && v1.max(v2) <= tol2 && m1 && m2 && coin_ok && example_ok;
    Ok(Report {
        pass,
        detail: format!(
            "{n_int} interior points, duality gap {:.1e}, inf violation {:.1e}, max at grad beta(0): coin {m1} ({max1:.9} vs dim [{:.9}, {:.9}]), example {m2} ({max2:.6}, beta(0) in [{:.4}, {:.4}], dim_24 in [{:.6}, {:.6}]: {example_ok})",
            g1.max(g2),
            v1.max(v2).max(0.0),
            coin_dim.lo,
            coin_dim.hi,
            enc0.lo,
            enc0.hi,
            dim24.lo,
            dim24.hi
        ),
        fingerprint: String::new(),
    })
}

fn c7(w: usize, _: &mut Shared) -> Res {
    let sys = SystemDescriptor::continued_fraction(Alphabet::Infinite);
    let cycles: Vec<Word> = (1..=3).map(|k| Word::new(vec![k])).collect();
    let doubled = PotentialVector::periodic(vec![vec![1.0, 2.0], vec![-1.0, -2.0]]).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let (a, b) = pooled(w, || {
        (
            independence_certificate(&sys, &PotentialVector::cf_parity_example(), &cycles),
            independence_certificate(&sys, &doubled, &cycles),
        )
    });
    let elapsed = start.elapsed();
    let (a, b) = (a.map_err(|e| e.to_string())?, b.map_err(|e| e.to_string())?);
    let dir = b.direction.clone().unwrap_or_default();
    let proportional = dir.len() == 2 && (dir[0] + 2.0 * dir[1]).abs() <= 1e-9 * dir[0].hypot(dir[1]) && dir[0] != 0.0;
    let pass = a.verdict == Independence::Independent
        && b.verdict == Independence::DependentWitness
        && proportional
        && elapsed < Duration::from_secs(1);
    Ok(Report {
        pass,
        detail: format!("example {:?}, doubled {:?} direction {dir:?}, {elapsed:.2?}", a.verdict, b.verdict),
        fingerprint: serde_json::to_string(&(a, b)).unwrap(),
    })
}

fn c8(w: usize, _: &mut Shared) -> Res {
    let cfg = format!(
        r#"{{ {CF_EXAMPLE}, "numerics": {{ "n": 10, "truncation": 24, "tol": 1e-6, "seed": 1 }},
          "sets": {{ "t_grid": {{ "ranges": [ {{ "from": -2.0, "to": 2.0, "count": 3 }}, {{ "from": -2.0, "to": 2.0, "count": 3 }} ] }},
                    "max_period": 3, "eps": 1e-2 }} }}"#
    );
    let start = Instant::now();
    let a = cli(Verb::Sets, &cfg, w)?;
    let elapsed = start.elapsed();
    let r = json(&a, "sets.json");
    let zero = r["zero_in_m"].as_bool().unwrap_or(false);
    let norm = r["minimizer_grad_norm"].as_f64().unwrap_or(f64::INFINITY);
    let t0: Vec<f64> = r["minimizer"].as_array().map(|v| v.iter().filter_map(Value::as_f64).collect()).unwrap_or_default();
    let mut recheck = f64::INFINITY;
    if t0.len() == 2 {
        let g = example_solver(10, 24).solve_central(&t0, None).map_err(|e| e.to_string())?.1;
        recheck = g[0].hypot(g[1]);
    }
    Ok(Report {
        pass: zero && norm <= 1e-4 && recheck <= 1e-4 && elapsed < Duration::from_secs(300),
        detail: format!("zero_in_M {zero}, t0 = {t0:?}, |grad| = {norm:.1e} (fresh solve {recheck:.1e}), {elapsed:.2?}"),
        fingerprint: a.fingerprint,
    })
}

fn c9(w: usize, _: &mut Shared) -> Res {
    let cfg = r#"{ "counterexample": { "m": 100.0, "n": [1e3, 1e4, 1e5] } }"#;
    let start = Instant::now();
    let a = cli(Verb::Counterexample, cfg, w)?;
    let elapsed = start.elapsed();
    let r = json(&a, "counterexample.json");
    let rows = table(&a.files["counterexample.csv"]);
    let min_lower = rows.iter().map(|r| f(r, "i_mean_lower")).fold(f64::INFINITY, f64::min);
    let c_n: Vec<f64> = rows.iter().map(|r| f(r, "c_n")).collect();
    let limit = interval(&r["limit_i_mean"]);
    let verdict = r["verdict"].as_str().unwrap_or("").to_string();
    let pass = min_lower >= 150.0 && limit.hi <= 3.0 && verdict == "strict-gap" && elapsed < Duration::from_secs(10);
    Ok(Report {
        pass,
        detail: format!(
            "c_n = {c_n:.3?}, min lower int I dmu_n = {min_lower:.3}, limit in [{:.4}, {:.4}], verdict {verdict}, {elapsed:.2?}",
            limit.lo, limit.hi
        ),
        fingerprint: a.fingerprint,
    })
}

fn c10(w: usize, _: &mut Shared) -> Res {
    let sys = SystemDescriptor::similarity(vec![0.5, 0.5]).unwrap();
    let j = PotentialVector::per_symbol(vec![vec![0.0], vec![1.0]]).unwrap();
    let schedule: Vec<f64> = (1..=6).map(|k| 0.25f64.powi(k)).collect();
    let start = Instant::now();
    let (q, g) = pooled(w, || {
        let q = q_of_periodic(&sys, &j, &Word::new(vec![2, 1]))?;
        let g = construct_generic_word(&sys, &j, &[q.q_mid()[0]], &schedule, &GenericWordOptions::default())?;
        Ok::<_, gdms::Error>((q, g))
    })
    .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    // Over one period of (2,1): S J = 1, S I = 2 log 2.
    let target_err = (g.target[0] - 1.0 / (2.0 * LN2)).abs();
    let ok = g.checkpoints.len() >= 6 && g.checkpoints.iter().all(|c| c.error <= c.epsilon);
    let worst = g.checkpoints.iter().map(|c| c.error / c.epsilon).fold(0.0, f64::max);
    Ok(Report {
        pass: g.complete && ok && target_err <= 1e-12 && elapsed < Duration::from_secs(5),
        detail: format!(
            "{} checkpoints, max error/eps_k = {worst:.3}, prefix length {}, target error {target_err:.1e}, {elapsed:.2?}",
            g.checkpoints.len(),
            g.len()
        ),
        fingerprint: serde_json::to_string(&(q.q_value, g)).unwrap(),
    })
}

fn c12(sh: &Shared) -> Res {
    let count = 21;
    let cfg = format!(
        r#"{{ {CF_EXAMPLE}, "numerics": {{ "n": 10, "truncation": 24, "tol": 1e-6 }},
          "spectrum": {{ "surface": {{ "ranges": [ {{ "from": -4.0, "to": 4.0, "count": {count} }}, {{ "from": -4.0, "to": 4.0, "count": {count} }} ] }} }} }}"#
    );
    let start = Instant::now();
    let a = cli(Verb::Spectrum, &cfg, 1)?;
    let elapsed = start.elapsed();
    let rows = table(&a.files["surface.csv"]);
    let z: Vec<f64> = rows.iter().map(|r| f(r, "beta")).collect();
    let at = |i: usize, j: usize| z[i * count + j];
    let mut worst = 0f64;
    for i in 0..count {
        for j in 1..count - 1 {
            worst = worst.max(at(i, j) - 0.5 * (at(i, j - 1) + at(i, j + 1)));
            worst = worst.max(at(j, i) - 0.5 * (at(j - 1, i) + at(j + 1, i)));
        }
    }
    let (imin, _) = z.iter().enumerate().fold((0, f64::INFINITY), |b, (k, &v)| if v < b.1 { (k, v) } else { b });
    let (ri, rj) = (imin / count, imin % count);
    let interior = ri > 0 && ri < count - 1 && rj > 0 && rj < count - 1;
    let width = sh.min_beta_width;
    Ok(Report {
        pass: z.len() == count * count && worst <= width && interior,
        detail: format!(
            "{} points, max midpoint violation {:.1e} (bracket width {width:.1e}), minimum {:.6} at t = ({}, {}), {elapsed:.2?}",
            z.len(),
            worst.max(0.0),
            z[imin],
            rows[imin]["t1"],
            rows[imin]["t2"]
        ),
        fingerprint: String::new(),
    })
}

type Criterion = fn(usize, &mut Shared) -> Res;

fn main() {
    let criteria: [(u32, Criterion); 10] =
        [(1, c1), (2, c2), (3, c3), (4, c4), (5, c5), (6, c6), (7, c7), (8, c8), (9, c9), (10, c10)];
    let mut shared = Shared::default();
    let mut results: Vec<(u32, Res)> = Vec::new();
    let mut prints: HashMap<u32, String> = HashMap::new();
    for (id, c) in criteria {
        let r = c(1, &mut shared);
        if let Ok(rep) = &r {
            prints.insert(id, rep.fingerprint.clone());
        }
        report(id, &r);
        results.push((id, r));
    }

    let start = Instant::now();
    let mut mismatched = Vec::new();
    let mut compared = 0;
    for workers in [4, 8] {
        let mut scratch = Shared { example_grad0: shared.example_grad0.clone(), ..Default::default() };
        for (id, c) in criteria {
            let Some(base) = prints.get(&id) else { continue };
            if base.is_empty() {
                continue;
            }
            compared += 1;
            match c(workers, &mut scratch) {
                Ok(rep) if &rep.fingerprint == base => {}
                _ => mismatched.push(format!("{id}@{workers}")),
            }
        }
    }
    let r11 = Ok(Report {
        pass: mismatched.is_empty() && compared > 0,
        detail: format!(
            "{compared} artifact sets compared against 1 worker, mismatches {mismatched:?}, {:.2?}",
            start.elapsed()
        ),
        fingerprint: String::new(),
    });
    report(11, &r11);
    results.push((11, r11));

    let r12 = c12(&shared);
    report(12, &r12);
    results.push((12, r12));

    let failed: Vec<u32> = results.iter().filter(|(_, r)| !matches!(r, Ok(rep) if rep.pass)).map(|(id, _)| *id).collect();
    let unexpected: Vec<u32> = failed.iter().copied().filter(|id| !KNOWN_FAILURES.contains(id)).collect();
    println!("acceptance: {} of {} passed, failed {failed:?}, unexpected {unexpected:?}", results.len() - failed.len(), results.len());
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}

fn report(id: u32, r: &Res) {
    let known = if KNOWN_FAILURES.contains(&id) { " (known)" } else { "" };
    match r {
        Ok(rep) if rep.pass => println!("criterion {id:>2}: PASS  {}", rep.detail),
        Ok(rep) => println!("criterion {id:>2}: FAIL{known}  {}", rep.detail),
        Err(e) => println!("criterion {id:>2}: FAIL{known}  error: {e}"),
    }
}
