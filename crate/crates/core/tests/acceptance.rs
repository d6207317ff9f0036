//! Acceptance checks. Runs as a plain binary and prints one line per
//! criterion; exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use driftboost::baselines::ForestParams;
use driftboost::boosting::{
    fit_gbdt, fit_gbdt_observed, goss_sample, leaf_weight, structure_score, GbdtParams, GossParams,
};
use driftboost::dataset::{
    synth_generate, train_test_split, Dataset, FeatureSchema, SplitSpec, DEFAULT_NOISE_SD,
};
use driftboost::harness::{run_benchmark, run_models, BenchmarkConfig, DataSource, RowStatus};
use driftboost::metrics::{mae, mape, mse, r2, rmse};
use driftboost::model::ModelKind;
use driftboost::rng::Rng;
use driftboost::tree::{
    best_split_histograms, build_histogram, cost_complexity, fit_cart, prune_ccp, SplitParams,
    TreeNode,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- 1

/// Independent exact greedy search: every gap between consecutive distinct
/// values of every feature, sums recomputed from scratch per threshold.
fn oracle_split(
    cols: &[Vec<f64>],
    g: &[f64],
    h: &[f64],
    l2: f64,
) -> Option<(usize, f64, f64, f64)> {
    let mut best: Option<(usize, f64, f64, f64)> = None; // feature, lo, hi, gain
    for (j, col) in cols.iter().enumerate() {
        let mut vals = col.clone();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let (mut gl, mut hl, mut gr, mut hr) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..col.len() {
                if col[i] <= w[0] {
                    gl += g[i];
                    hl += h[i];
                } else {
                    gr += g[i];
                    hr += h[i];
                }
            }
            let score = |gs: f64, hs: f64| gs * gs / (hs + l2);
            let gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr));
            if gain > 0.0 && best.is_none_or(|b| gain > b.3) {
                best = Some((j, w[0], w[1], gain));
            }
        }
    }
    best
}

fn criterion_split_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for case in 0..200u64 {
        let mut rng = Rng::new(1000 + case);
        let n = 2 + rng.below(63);
        let d = 1 + rng.below(4);
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|_| {
                let levels = 2 + rng.below(20);
                (0..n)
                    .map(|_| rng.below(levels) as f64 * 0.37 - 1.0)
                    .collect()
            })
            .collect();
        let g: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let h: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.1, 2.0)).collect();
        let l2 = rng.uniform_in(0.0, 2.0);
        let hists: Vec<_> = cols
            .iter()
            .map(|c| build_histogram(c, &g, &h, 255).unwrap())
            .collect();
        let params = SplitParams {
            l2_reg: l2,
            min_split_gain: 0.0,
            ..SplitParams::default()
        };
        let got = best_split_histograms(&hists, &params);
        match (got, oracle_split(&cols, &g, &h, l2)) {
            (None, None) => {}
            (Some(c), Some((j, lo, hi, gain))) => {
                let err = (c.gain - gain).abs();
                worst = worst.max(err);
                if c.feature != j || !(c.threshold >= lo && c.threshold < hi) || err > 1e-9 {
                    return outcome(
                        false,
                        format!("case {case}: got f{} t={} gain={}, oracle f{j} ({lo},{hi}) gain={gain}", c.feature, c.threshold, c.gain),
                    );
                }
            }
            (a, b) => {
                return outcome(
                    false,
                    format!("case {case}: histogram {a:?} vs oracle {b:?}"),
                )
            }
        }
    }
    outcome(true, format!("200 datasets, max gain error {worst:.1e}"))
}

// ---------------------------------------------------------------- 2

fn criterion_leaf_weight_optimality() -> Outcome {
    let mut rng = Rng::new(28);
    for _ in 0..1000 {
        let g = rng.uniform_in(-50.0, 50.0);
        let h = rng.uniform_in(0.01, 100.0);
        let l2 = rng.uniform_in(0.0, 10.0);
        let w = leaf_weight(g, h, l2).unwrap();
        let obj = |w: f64| g * w + 0.5 * (h + l2) * w * w;
        if !(obj(w) < obj(w + 1e-3) && obj(w) < obj(w - 1e-3)) {
            return outcome(
                false,
                format!("G={g} H={h} l2={l2}: w={w} not a strict minimum"),
            );
        }
    }
    outcome(true, "1000 random (G, H, l2) triples")
}

// ---------------------------------------------------------------- 3

fn criterion_gain_score_consistency() -> Outcome {
    let ds = synth_generate(500, 11, 0.2).unwrap();
    let params = GbdtParams {
        num_rounds: 50,
        l2_reg: 1.0,
        min_split_gain: 0.01,
        ..GbdtParams::default()
    };
    let (l2, gamma) = (params.l2_reg, params.min_split_gain);
    let mut splits = 0;
    let mut worst = 0.0f64;
    let mut bad = None;
    fit_gbdt_observed(&ds, &params, &mut |e| {
        let (l, r) = (e.split.left, e.split.right);
        let parent = structure_score(&[(e.parent.grad_sum, e.parent.hess_sum)], l2, gamma).unwrap();
        let children = structure_score(
            &[(l.grad_sum, l.hess_sum), (r.grad_sum, r.hess_sum)],
            l2,
            gamma,
        )
        .unwrap();
        let err = (parent - children - e.split.gain).abs();
        worst = worst.max(err);
        if err > 1e-9 && bad.is_none() {
            bad = Some(format!(
                "round {} leaf {}: delta {} vs gain {}",
                e.round,
                e.leaf,
                parent - children,
                e.split.gain
            ));
        }
        splits += 1;
    })
    .unwrap();
    match bad {
        Some(msg) => outcome(false, msg),
        None => outcome(
            splits > 0,
            format!("{splits} splits over 50 rounds, max error {worst:.1e}"),
        ),
    }
}

// ---------------------------------------------------------------- 4

fn criterion_goss_degenerate() -> Outcome {
    let ds = synth_generate(400, 4, 0.2).unwrap();
    let plain = GbdtParams {
        num_rounds: 20,
        seed: 99,
        ..GbdtParams::default()
    };
    let full = GbdtParams {
        goss: Some(GossParams::new(1.0, 0.0).unwrap()),
        ..plain.clone()
    };
    let a = fit_gbdt(&ds, &plain).unwrap();
    let b = fit_gbdt(&ds, &full).unwrap();
    let same = a.trees == b.trees
        && a.base_score.to_bits() == b.base_score.to_bits()
        && serde_json::to_string(&a.trees).unwrap() == serde_json::to_string(&b.trees).unwrap();
    let w = GossParams::new(0.2, 0.1).unwrap().amplification();
    let grads: Vec<f64> = (0..100).map(|i| (i as f64 * 0.731).sin()).collect();
    let s = goss_sample(&grads, 0.2, 0.1, 5).unwrap();
    let sampled_ok = s.weights.iter().all(|&x| x == 1.0 || x == 8.0) && s.weights.contains(&8.0);
    outcome(
        same && w == 8.0 && sampled_ok,
        format!("a=1 ensemble identical: {same}; (1-0.2)/0.1 = {w:?}"),
    )
}

// ---------------------------------------------------------------- 5

/// All prunings of `node`: keep it whole or collapse any internal node.
fn prunings(node: &TreeNode) -> Vec<TreeNode> {
    match node {
        TreeNode::Leaf { .. } => vec![node.clone()],
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            let mut out = vec![TreeNode::leaf(0.0, 0, 0.0, 0.0)];
            for l in prunings(left) {
                for r in prunings(right) {
                    out.push(TreeNode::Internal {
                        feature: *feature,
                        threshold: *threshold,
                        left: Box::new(l.clone()),
                        right: Box::new(r),
                    });
                }
            }
            out
        }
    }
}

/// SSE of the partition a tree induces, each region scored at its own mean.
fn partition_sse(node: &TreeNode, ds: &Dataset) -> f64 {
    let mut groups: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for (i, x) in ds.rows().enumerate() {
        let leaf = node.route(x) as *const TreeNode as usize;
        groups.entry(leaf).or_default().push(ds.target()[i]);
    }
    groups
        .values()
        .map(|ys| {
            let m = ys.iter().sum::<f64>() / ys.len() as f64;
            ys.iter().map(|y| (y - m).powi(2)).sum::<f64>()
        })
        .sum()
}

fn criterion_pruning() -> Outcome {
    let mut checked = 0;
    for case in 0..30u64 {
        let mut rng = Rng::new(500 + case);
        let n = 12 + rng.below(30);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.uniform(), rng.uniform()]).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| (4.0 * r[0]).sin() + r[1] + 0.3 * rng.standard_normal())
            .collect();
        let ds = Dataset::from_rows(FeatureSchema::generic(2), &rows, y.clone()).unwrap();
        let leaves = 2 + rng.below(6);
        let tree = fit_cart(&ds, leaves, 1).unwrap();
        if prune_ccp(&tree, &ds, 0.0).unwrap().num_leaves != tree.num_leaves {
            return outcome(false, format!("case {case}: alpha=0 changed the tree"));
        }
        let m = y.iter().sum::<f64>() / n as f64;
        let root_sse: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
        if prune_ccp(&tree, &ds, root_sse * 1.01 + 1e-9)
            .unwrap()
            .num_leaves
            != 1
        {
            return outcome(
                false,
                format!("case {case}: alpha above root SSE kept splits"),
            );
        }
        let all = prunings(&tree.root);
        let alphas: Vec<f64> = (0..40).map(|k| root_sse * k as f64 / 30.0).collect();
        let mut prev: Option<TreeNode> = None;
        for &alpha in &alphas {
            let pruned = prune_ccp(&tree, &ds, alpha).unwrap();
            let best = all
                .iter()
                .map(|t| partition_sse(t, &ds) + alpha * t.count_leaves() as f64)
                .fold(f64::INFINITY, f64::min);
            let got = cost_complexity(&pruned, &ds, alpha).unwrap();
            if got > best + 1e-9 * (1.0 + best.abs()) {
                return outcome(
                    false,
                    format!("case {case} alpha {alpha}: cost {got} > optimum {best}"),
                );
            }
            if let Some(p) = &prev {
                if !pruned.root.is_pruning_of(p) {
                    return outcome(
                        false,
                        format!("case {case} alpha {alpha}: sequence not nested"),
                    );
                }
            }
            prev = Some(pruned.root);
            checked += 1;
        }
    }
    outcome(
        true,
        format!("30 trees (<= 7 leaves), {checked} alphas against exhaustive search"),
    )
}

// ---------------------------------------------------------------- 6

fn criterion_metrics() -> Outcome {
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    let mut rng = Rng::new(6);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = 2 + rng.below(50);
        let y: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.1, 5.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.0, 6.0)).collect();
        let (mut se, mut ae, mut pe, mut sy) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            se += (p[i] - y[i]) * (p[i] - y[i]);
            ae += (p[i] - y[i]).abs();
            pe += ((y[i] - p[i]) / y[i]).abs();
            sy += y[i];
        }
        let mean = sy / n as f64;
        let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
        let nf = n as f64;
        let pairs = [
            (r2(&y, &p).unwrap(), 1.0 - se / tss),
            (mae(&y, &p).unwrap(), ae / nf),
            (mse(&y, &p).unwrap(), se / nf),
            (rmse(&y, &p).unwrap(), (se / nf).sqrt()),
            (mape(&y, &p).unwrap(), 100.0 * pe / nf),
        ];
        for (got, want) in pairs {
            worst = worst.max(rel(got, want));
        }
    }
    let (y, p) = ([2.0, 4.0], [3.0, 3.0]);
    let hand = r2(&y, &p).unwrap() == 0.0
        && mae(&y, &p).unwrap() == 1.0
        && mse(&y, &p).unwrap() == 1.0
        && rmse(&y, &p).unwrap() == 1.0
        && mape(&y, &p).unwrap() == 37.5;
    outcome(
        worst <= 1e-12 && hand,
        format!("1000 random pairs, max relative error {worst:.1e}; hand case exact: {hand}"),
    )
}

// ---------------------------------------------------------------- 7

fn criterion_convergence() -> Outcome {
    let ds = synth_generate(2000, 7, 0.0).unwrap();
    let params = GbdtParams {
        num_rounds: 500,
        learning_rate: 0.1,
        num_leaves: 31,
        ..GbdtParams::default()
    };
    let e = fit_gbdt(&ds, &params).unwrap();
    let y = ds.target();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
    let losses: Vec<f64> = e
        .staged_predict(&ds)
        .unwrap()
        .iter()
        .map(|p| mse(y, p).unwrap())
        .collect();
    // rounding slack on "non-increasing"
    let ups = losses
        .windows(2)
        .filter(|w| w[1] > w[0] * (1.0 + 1e-12))
        .count();
    let last = *losses.last().unwrap();
    outcome(
        last < 1e-3 * var && ups == 0,
        format!(
            "final MSE {last:.3e} vs 1e-3 var(y) = {:.3e}; increasing rounds: {ups}",
            1e-3 * var
        ),
    )
}

// ---------------------------------------------------------------- 8

fn criterion_ranking() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for seed in [1u64, 2, 3] {
        let ds = synth_generate(5850, seed, DEFAULT_NOISE_SD).unwrap();
        let (train, test) = train_test_split(&ds, SplitSpec::new(0.2, seed).unwrap()).unwrap();
        let rows = run_models(&train, &test, &BenchmarkConfig::all_models(), seed);
        let first = &rows[0];
        let runner = &rows[1];
        let ok = first.kind == ModelKind::Gbdt && first.status == RowStatus::Ok;
        pass &= ok;
        let r2_of =
            |r: &driftboost::harness::BenchmarkRow| r.metrics.as_ref().map_or(f64::NAN, |m| m.r2);
        notes.push(format!(
            "seed {seed}: {} {:.4} > {} {:.4}",
            first.kind,
            r2_of(first),
            runner.kind,
            r2_of(runner)
        ));
    }
    outcome(pass, notes.join("; "))
}

// ---------------------------------------------------------------- 9

fn full_config(seed: u64) -> BenchmarkConfig {
    BenchmarkConfig {
        data: DataSource::Synth {
            n: 5850,
            seed,
            noise_sd: DEFAULT_NOISE_SD,
        },
        split: SplitSpec::new(0.2, seed).unwrap(),
        models: BenchmarkConfig::all_models(),
        seed,
        label: "BARE".into(),
    }
}

fn criterion_performance() -> Outcome {
    let start = Instant::now();
    let report = run_benchmark(&full_config(0)).unwrap();
    let total = start.elapsed();
    let ds = synth_generate(5850, 0, DEFAULT_NOISE_SD).unwrap();
    let start = Instant::now();
    fit_gbdt(&ds, &GbdtParams::default()).unwrap();
    let gbdt = start.elapsed();
    let ok_rows = report
        .rows
        .iter()
        .filter(|r| r.status == RowStatus::Ok)
        .count();
    outcome(
        total < Duration::from_secs(60) && gbdt < Duration::from_secs(5) && ok_rows == 10,
        format!(
            "full benchmark {:.2}s ({ok_rows} models), GBDT fit {:.3}s",
            total.as_secs_f64(),
            gbdt.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 10

fn without_tt(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

fn criterion_determinism() -> Outcome {
    let cfg = BenchmarkConfig {
        models: BenchmarkConfig::all_models()
            .into_iter()
            .map(|(k, c)| {
                let c = c.map(|c| match c {
                    driftboost::model::ModelConfig::RandomForest(p) => {
                        driftboost::model::ModelConfig::RandomForest(ForestParams {
                            num_trees: 30,
                            ..p
                        })
                    }
                    other => other,
                });
                (k, c)
            })
            .collect(),
        ..full_config(42)
    };
    let a = run_benchmark(&cfg).unwrap().to_csv().unwrap();
    let b = run_benchmark(&cfg).unwrap().to_csv().unwrap();
    let same = without_tt(&a) == without_tt(&b);
    outcome(
        same,
        format!(
            "two runs, {} CSV lines, identical apart from TT: {same}",
            a.lines().count()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "histogram split equals exact greedy oracle",
            criterion_split_oracle,
        ),
        (
            "optimal leaf weight is a strict minimum",
            criterion_leaf_weight_optimality,
        ),
        (
            "split gain equals structure score delta",
            criterion_gain_score_consistency,
        ),
        (
            "GOSS with a=1 is plain boosting; weight 8",
            criterion_goss_degenerate,
        ),
        ("cost-complexity pruning", criterion_pruning),
        ("metrics match brute-force oracles", criterion_metrics),
        (
            "noiseless training converges monotonically",
            criterion_convergence,
        ),
        ("GBDT ranks first on synthetic data", criterion_ranking),
        ("desk-scale runtime", criterion_performance),
        ("benchmark CSV is deterministic", criterion_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "acceptance {:>2} {status} {name} [{:.2}s]: {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            result.detail
        );
        failed += usize::from(!result.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
