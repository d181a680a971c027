//! End-to-end acceptance checks. Runs without the test harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use crossloss::data::{generate_mog, MogConfig};
use crossloss::diffmath::{hvp, loss_grad, loss_value, Objective, ParamVector};
use crossloss::influence::{ihvp_direct, ihvp_lissa, score_all, stest, IhvpSolver, LissaConfig};
use crossloss::models::{
    dec_samples, dec_soft_assign, dec_target, ClusterModel, LabeledPoint, MseDriftObjective, NllObjective,
    SkipGramObjective, SkipGramSample,
};
use crossloss::oracle::spearman;
use crossloss::pipelines::{mog_loo_audit, MogAuditConfig};
use crossloss::training::{train_dec, DecConfig, DecRun, DescentConfig};
use crossloss::weat::{weat_effect, AbsWeatObjective, WeatIds, WeatSpec, WordTable};
use crossloss::Vocab;
use crossloss_cli::run_from;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------------------
// 1. gradients and Hessian-vector products against finite differences

fn fd_gradient<O: Objective<f64>>(obj: &O, theta: &ParamVector<f64>, batch: &[O::Sample]) -> Vec<f64> {
    let h = 1e-5;
    let mut probe = theta.clone();
    (0..theta.len())
        .map(|i| {
            let x = theta.values()[i];
            probe.values_mut()[i] = x + h;
            let up = loss_value(obj, &probe, batch).unwrap();
            probe.values_mut()[i] = x - h;
            let down = loss_value(obj, &probe, batch).unwrap();
            probe.values_mut()[i] = x;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn fd_gradient_difference<O: Objective<f64>>(
    obj: &O,
    theta: &ParamVector<f64>,
    batch: &[O::Sample],
    v: &[f64],
) -> Vec<f64> {
    let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let eps = 1e-5 / vn;
    let shifted = |sign: f64| {
        let vals: Vec<f64> = theta.values().iter().zip(v).map(|(t, d)| t + sign * eps * d).collect();
        loss_grad(obj, &theta.with_values(vals).unwrap(), batch).unwrap().into_values()
    };
    let (up, down) = (shifted(1.0), shifted(-1.0));
    up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * eps)).collect()
}

// Coordinates far below the largest one are compared on the absolute scale.
fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = (1e-3 * scale).max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor)).fold(0.0, f64::max)
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let denom = n(a).max(n(b));
    if denom == 0.0 {
        0.0
    } else {
        n(&d) / denom
    }
}

fn check_objective<O: Objective<f64>>(obj: &O, theta: &ParamVector<f64>, batch: &[O::Sample], rng: &mut ChaCha8Rng) -> (f64, f64) {
    let analytic = loss_grad(obj, theta, batch).unwrap();
    let grad_err = max_rel(analytic.values(), &fd_gradient(obj, theta, batch));
    let v: Vec<f64> = (0..theta.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let hv = hvp(obj, theta, batch, &theta.with_values(v.clone()).unwrap()).unwrap();
    let hvp_err = rel_l2(hv.values(), &fd_gradient_difference(obj, theta, batch, &v));
    (grad_err, hvp_err)
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-r..r)).collect()
}

fn skipgram_instance(rng: &mut ChaCha8Rng) -> (SkipGramObjective, ParamVector<f64>, Vec<SkipGramSample>) {
    let (v, d) = (rng.random_range(4..=50), rng.random_range(2..=16));
    let theta = ParamVector::new(uniform(rng, 2 * v * d, 1.0), &[("input_table", v * d), ("output_table", v * d)]).unwrap();
    let batch = (0..rng.random_range(1..=6))
        .map(|_| {
            let n = rng.random_range(1..=5);
            SkipGramSample {
                center: rng.random_range(0..v),
                context: rng.random_range(0..v),
                negatives: (0..n).map(|_| rng.random_range(0..v)).collect(),
            }
        })
        .collect();
    (SkipGramObjective::new(v, d), theta, batch)
}

fn cluster_instance(rng: &mut ChaCha8Rng) -> (ClusterModel<f64>, Vec<LabeledPoint<f64>>) {
    let (k, d) = (rng.random_range(2..=4), rng.random_range(2..=16));
    let model = ClusterModel::new((0..k).map(|_| uniform(rng, d, 2.0)).collect()).unwrap();
    let points = (0..rng.random_range(3..=10)).map(|_| LabeledPoint::new(uniform(rng, d, 2.0), rng.random_range(0..k))).collect();
    (model, points)
}

fn weat_instance(rng: &mut ChaCha8Rng) -> (AbsWeatObjective, ParamVector<f64>, WeatIds) {
    let (v, d) = (rng.random_range(8..=50), rng.random_range(2..=16));
    let mut ids: Vec<usize> = (0..v).collect();
    ids.shuffle(rng);
    let mut take = |n: usize| ids.drain(..n).collect::<Vec<_>>();
    let sizes: Vec<usize> = (0..4).map(|_| rng.random_range(2..=v / 4)).collect();
    let w = WeatIds { x: take(sizes[0]), y: take(sizes[1]), a: take(sizes[2]), b: take(sizes[3]) };
    let theta = ParamVector::new(uniform(rng, 2 * v * d, 1.0), &[("input_table", v * d), ("output_table", v * d)]).unwrap();
    (AbsWeatObjective::new(v, d), theta, w)
}

fn criterion_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    let mut record = |name: &'static str, (g, h): (f64, f64)| {
        let e = worst.entry(name).or_insert((0.0, 0.0));
        e.0 = e.0.max(g);
        e.1 = e.1.max(h);
    };
    for _ in 0..100 {
        let (obj, theta, batch) = skipgram_instance(&mut rng);
        record("skip-gram", check_objective(&obj, &theta, &batch, &mut rng));

        let (model, points) = cluster_instance(&mut rng);
        let samples = dec_samples(&points, &dec_target(&dec_soft_assign(&model, &points)));
        record("dec-kl", check_objective(&model.dec_objective(), model.params(), &samples, &mut rng));

        let (model, points) = cluster_instance(&mut rng);
        let mut map: Vec<usize> = (0..model.k()).collect();
        map.shuffle(&mut rng);
        let nll = NllObjective::new(model.k(), model.dim(), &map).unwrap();
        record("nll", check_objective(&nll, model.params(), &points, &mut rng));

        let (v, d) = (rng.random_range(2..=50), rng.random_range(2..=16));
        let mse = MseDriftObjective::new(v, d, uniform(&mut rng, v * d, 1.0)).unwrap();
        let theta = ParamVector::new(uniform(&mut rng, 2 * v * d, 1.0), &[("input_table", v * d), ("output_table", v * d)]).unwrap();
        let words: Vec<usize> = (0..rng.random_range(1..=5)).map(|_| rng.random_range(0..v)).collect();
        record("mse-drift", check_objective(&mse, &theta, &words, &mut rng));

        let (obj, theta, ids) = weat_instance(&mut rng);
        record("abs-weat", check_objective(&obj, &theta, &[ids], &mut rng));
    }
    let pass = worst.values().all(|&(g, h)| g < 1e-4 && h < 1e-3);
    let detail = worst.iter().map(|(n, (g, h))| format!("{n} grad {g:.1e} hvp {h:.1e}")).collect::<Vec<_>>().join("; ");
    outcome(pass, format!("100 instances each; worst {detail}"))
}

// ---------------------------------------------------------------------------
// 2. LiSSA against the direct solve, and 7. matched-loss specialization

fn small_dec() -> (Vec<LabeledPoint<f64>>, DecRun<f64>) {
    let points = generate_mog::<f64>(&MogConfig { per_class: 10, ..MogConfig::defaults(1) }).unwrap();
    let cfg = DecConfig { descent: DescentConfig { lr: 0.1, ..DescentConfig::default() }, ..DecConfig::new(3, 1) };
    let run = train_dec(&points, &cfg).unwrap();
    (points, run)
}

fn criterion_lissa() -> Outcome {
    let (points, run) = small_dec();
    let train = run.model.dec_objective();
    let data = run.samples(&points);
    let theta = run.model.params();
    let nll = NllObjective::new(run.model.k(), run.model.dim(), &run.class_of_cluster).unwrap();
    let lissa = LissaConfig::new(7);
    let (mut worst_rel, mut worst_rho) = (0.0f64, 1.0f64);
    for t in [0, 7, 14, 21, 28] {
        let g = loss_grad(&nll, theta, &points[t..=t]).unwrap();
        let direct = ihvp_direct(&train, theta, &data, &g, lissa.damping).unwrap();
        let approx = ihvp_lissa(&train, theta, &data, &g, &lissa).unwrap();
        worst_rel = worst_rel.max(rel_l2(direct.values(), approx.values()));
        let sd: Vec<f64> = score_all(&direct, &train, theta, &data).unwrap().iter().map(|r| r.score).collect();
        let sl: Vec<f64> = score_all(&approx, &train, theta, &data).unwrap().iter().map(|r| r.score).collect();
        worst_rho = worst_rho.min(spearman(&sd, &sl).unwrap());
    }
    outcome(
        worst_rel < 0.05 && worst_rho >= 0.95,
        format!("{} params, 5 test points; worst rel L2 {worst_rel:.4}, worst Spearman {worst_rho:.4}", theta.len()),
    )
}

// Hessian from a five-point stencil on the analytic gradient, solved by
// Gaussian elimination with partial pivoting.
fn stencil_hessian<O: Objective<f64>>(obj: &O, theta: &ParamVector<f64>, data: &[O::Sample]) -> Vec<Vec<f64>> {
    let n = theta.len();
    let h = 1e-3;
    let grad_at = |i: usize, step: f64| {
        let mut p = theta.clone();
        p.values_mut()[i] += step;
        loss_grad(obj, &p, data).unwrap().into_values()
    };
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let (p2, p1, m1, m2) = (grad_at(i, 2.0 * h), grad_at(i, h), grad_at(i, -h), grad_at(i, -2.0 * h));
        cols.push((0..n).map(|r| (-p2[r] + 8.0 * p1[r] - 8.0 * m1[r] + m2[r]) / (12.0 * h)).collect::<Vec<_>>());
    }
    (0..n).map(|r| (0..n).map(|c| 0.5 * (cols[c][r] + cols[r][c])).collect()).collect()
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn criterion_matched() -> Outcome {
    let (points, run) = small_dec();
    let train = run.model.dec_objective();
    let data = run.samples(&points);
    let theta = run.model.params();
    let hess = stencil_hessian(&train, theta, &data);
    let mut worst = 0.0f64;
    for t in [0, 11, 22] {
        let test = &data[t..=t];
        let s = stest(&train, test, &train, theta, &data, &IhvpSolver::Direct { damping: 0.0 }).unwrap();
        let pipeline: Vec<f64> = score_all(&s, &train, theta, &data).unwrap().iter().map(|r| r.score).collect();
        let g_test = loss_grad(&train, theta, test).unwrap().into_values();
        let h_inv_g = gauss_solve(hess.clone(), g_test);
        let classical: Vec<f64> = data
            .iter()
            .map(|z| {
                let gz = loss_grad(&train, theta, std::slice::from_ref(z)).unwrap();
                -gz.values().iter().zip(&h_inv_g).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        worst = worst.max(rel_l2(&pipeline, &classical));
    }
    outcome(worst < 1e-6, format!("DEC train = test, 3 test points, {} params; worst rel error {worst:.2e}", theta.len()))
}

// ---------------------------------------------------------------------------
// 3. leave-one-out audit on the default mixture

fn criterion_mog() -> Outcome {
    let points = generate_mog::<f64>(&MogConfig::defaults(1)).unwrap();
    let mut cfg = MogAuditConfig::new(3, 1);
    cfg.dec.descent.lr = 0.1;
    cfg.nll = DescentConfig { lr: 0.1, max_steps: 2_000, ..DescentConfig::default() };
    let audit = mog_loo_audit(&points, &cfg).unwrap();
    let cross = audit.cross_loss.report.fraction_above(0.6).unwrap();
    let matched = audit.matched.report.fraction_above(0.6).unwrap();
    let cross8 = audit.cross_loss.report.fraction_above(0.8).unwrap();
    let per_class: Vec<String> = audit
        .cross_loss
        .report
        .class_breakdown
        .iter()
        .map(|c| format!("{:.0}%", 100.0 * c.fraction_above[0].1))
        .collect();
    outcome(
        cross >= 0.7 && cross >= matched - 0.10,
        format!(
            "cross-loss r>0.6 {:.1}% (per class {}; r>0.8 {:.1}%), matched r>0.6 {:.1}%",
            100.0 * cross,
            per_class.join("/"),
            100.0 * cross8,
            100.0 * matched
        ),
    )
}

// ---------------------------------------------------------------------------
// 4. planted-bias pipeline through the command line

fn cli(args: &[&str]) -> String {
    let mut argv = vec!["crossloss"];
    argv.extend_from_slice(args);
    run_from(argv).unwrap_or_else(|e| panic!("{}: {e:#}", args.join(" ")))
}

fn trajectory(path: &Path) -> Vec<f64> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect()
}

fn criterion_planted() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    cli(&["plant-corpus", "--seed", "1", "--sentences", "5000", "--strength", "1.0", "--out", &p("corpus.txt"), "--spec-out", &p("spec.json")]);
    cli(&["train-sg", "--seed", "1", "--corpus", &p("corpus.txt"), "--out-dir", &p("sg")]);
    let vocab = fs::read_to_string(dir.path().join("sg/input.txt")).unwrap().lines().count() - 1;
    let common = ["--seed", "1", "--model", &p("sg"), "--corpus", &p("corpus.txt"), "--weat-spec", &p("spec.json"), "--lr", "3.0", "--iterations", "10"];
    for (command, out) in [("mitigate", p("mit")), ("overbias", p("over"))] {
        let mut args = vec![command];
        args.extend_from_slice(&common);
        args.extend_from_slice(&["--out-dir", &out]);
        cli(&args);
    }

    let mit = trajectory(&dir.path().join("mit/trajectory.csv"));
    let over = trajectory(&dir.path().join("over/trajectory.csv"));
    let before = mit[0];
    let best = mit.iter().copied().fold(f64::INFINITY, f64::min);
    let reduction = 1.0 - best / before;
    let over_up = over.len() > 1 && over[1] > over[0];
    let fmt = |t: &[f64]| t.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        before > 0.5 && reduction >= 0.5 && over_up,
        format!(
            "vocab {vocab}; trained |WEAT| {before:.3}; mitigate [{}] ({:.0}% reduction); overbias [{}]",
            fmt(&mit),
            100.0 * reduction,
            fmt(&over)
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. WEAT on hand-built tables

fn brute_force_weat(rows: &BTreeMap<&str, Vec<f64>>, x: &[&str], y: &[&str], a: &[&str], b: &[&str]) -> f64 {
    let cos = |u: &[f64], v: &[f64]| {
        let dot: f64 = u.iter().zip(v).map(|(p, q)| p * q).sum();
        dot / (u.iter().map(|p| p * p).sum::<f64>().sqrt() * v.iter().map(|q| q * q).sum::<f64>().sqrt())
    };
    let s = |w: &str| {
        let ma = a.iter().map(|t| cos(&rows[w], &rows[t])).sum::<f64>() / a.len() as f64;
        let mb = b.iter().map(|t| cos(&rows[w], &rows[t])).sum::<f64>() / b.len() as f64;
        ma - mb
    };
    let sx: Vec<f64> = x.iter().map(|w| s(w)).collect();
    let sy: Vec<f64> = y.iter().map(|w| s(w)).collect();
    let all: Vec<f64> = sx.iter().chain(&sy).copied().collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let std = (all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / all.len() as f64).sqrt();
    (sx.iter().sum::<f64>() / sx.len() as f64 - sy.iter().sum::<f64>() / sy.len() as f64) / std
}

fn table_of(rows: &BTreeMap<&str, Vec<f64>>) -> (Vocab, usize, Vec<f64>) {
    let vocab = Vocab::from_words(rows.keys().copied()).unwrap();
    let dim = rows.values().next().unwrap().len();
    let flat = vocab.words().iter().flat_map(|w| rows[w.as_str()].clone()).collect();
    (vocab, dim, flat)
}

fn criterion_weat_units() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut notes = Vec::new();
    let mut pass = true;

    // Y mirrors X through a reflection that fixes A and B.
    let mut worst_sym = 0.0f64;
    for _ in 0..20 {
        let mut rows: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for name in ["a1", "a2", "b1", "b2"] {
            let mut v = uniform(&mut rng, 6, 1.0);
            v[3..].iter_mut().for_each(|c| *c = 0.0);
            rows.insert(name, v);
        }
        for (xn, yn) in [("x1", "y1"), ("x2", "y2"), ("x3", "y3")] {
            let v = uniform(&mut rng, 6, 1.0);
            let mirrored: Vec<f64> = v.iter().enumerate().map(|(i, c)| if i >= 3 { -c } else { *c }).collect();
            rows.insert(xn, v);
            rows.insert(yn, mirrored);
        }
        let (vocab, dim, flat) = table_of(&rows);
        let spec = WeatSpec::new("sym", &["x1", "x2", "x3"], &["y1", "y2", "y3"], &["a1", "a2"], &["b1", "b2"]).unwrap();
        let r = weat_effect(&spec, &WordTable { vocab: &vocab, dim, rows: &flat }).unwrap();
        worst_sym = worst_sym.max(r.effect.abs());
    }
    pass &= worst_sym <= 1e-12;
    notes.push(format!("symmetric |effect| max {worst_sym:.1e}"));

    // 2+2 targets, 2+2 attributes against the brute-force definition; X/Y swap.
    let mut worst_bf = 0.0f64;
    let mut swap_exact = true;
    for _ in 0..50 {
        let mut rows: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for name in ["x1", "x2", "y1", "y2", "a1", "a2", "b1", "b2"] {
            rows.insert(name, uniform(&mut rng, 4, 1.0));
        }
        let (vocab, dim, flat) = table_of(&rows);
        let table = WordTable { vocab: &vocab, dim, rows: &flat };
        let (x, y, a, b) = (["x1", "x2"], ["y1", "y2"], ["a1", "a2"], ["b1", "b2"]);
        let r = weat_effect(&WeatSpec::new("h", &x, &y, &a, &b).unwrap(), &table).unwrap();
        let bf = brute_force_weat(&rows, &x, &y, &a, &b);
        worst_bf = worst_bf.max((r.effect - bf).abs());
        let swapped = weat_effect(&WeatSpec::new("h", &y, &x, &a, &b).unwrap(), &table).unwrap();
        swap_exact &= swapped.effect == -r.effect;
    }
    pass &= worst_bf < 1e-12 && swap_exact;
    notes.push(format!("2+2/2+2 vs brute force max diff {worst_bf:.1e}"));
    notes.push(format!("X/Y swap negates exactly: {swap_exact}"));
    outcome(pass, notes.join("; "))
}

// ---------------------------------------------------------------------------
// 6. byte-identical reruns

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().display().to_string(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn criterion_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let run_all = || {
        cli(&["mog-gen", "--seed", "3", "--per-class", "10", "--out", &p("mog.csv")]);
        cli(&["train-dec", "--seed", "3", "--data", &p("mog.csv"), "--lr", "0.1", "--out", &p("dec.json")]);
        cli(&["influence", "--seed", "3", "--train-loss", "dec", "--test-loss", "nll", "--model", &p("dec.json"), "--data", &p("mog.csv"), "--test-points", "0,5", "--top", "5", "--out", &p("dec.jsonl")]);
        cli(&["loo-audit", "--seed", "3", "--data", &p("mog.csv"), "--out", &p("audit.csv")]);
        cli(&["plant-corpus", "--seed", "3", "--sentences", "400", "--out", &p("c.txt"), "--spec-out", &p("spec.json")]);
        cli(&["train-sg", "--seed", "3", "--corpus", &p("c.txt"), "--epochs", "3", "--out-dir", &p("sg")]);
        cli(&["influence", "--seed", "3", "--train-loss", "sg", "--test-loss", "weat", "--model", &p("sg"), "--corpus", &p("c.txt"), "--weat-spec", &p("spec.json"), "--depth", "300", "--top", "20", "--out", &p("sg.jsonl")]);
        cli(&["mitigate", "--seed", "3", "--model", &p("sg"), "--corpus", &p("c.txt"), "--weat-spec", &p("spec.json"), "--depth", "300", "--iterations", "2", "--lr", "1.0", "--out-dir", &p("mit")]);
        snapshot(dir.path())
    };
    let first = run_all();
    let second = run_all();
    let differing: Vec<&String> = first.iter().filter(|(k, v)| second.get(*k) != Some(v)).map(|(k, _)| k).collect();
    outcome(
        differing.is_empty() && first.len() == second.len(),
        format!("{} output files over train, influence, loo-audit and mitigate; differing: {differing:?}", first.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 gradient/HVP suite", criterion_gradients),
        ("2 LiSSA vs direct solve", criterion_lissa),
        ("3 MOG leave-one-out audit", criterion_mog),
        ("4 planted-bias WEAT pipeline", criterion_planted),
        ("5 WEAT unit correctness", criterion_weat_units),
        ("6 byte-identical reruns", criterion_determinism),
        ("7 matched-loss specialization", criterion_matched),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {name}: {status} ({:.1}s) {}", start.elapsed().as_secs_f64(), o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
