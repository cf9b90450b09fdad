//! Acceptance criteria 1-9. Every test writes one PASS/FAIL line to stderr
//! (bypassing output capture) and then asserts. Runs are serialized so the
//! reported wall times are not inflated by sibling tests.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use xferlab::cli::main_with_args;
use xferlab::experiments::attribution_api::widen;
use xferlab::{run_experiment, ExperimentConfig, ExperimentKind, ResultTable, RunOptions, RunOutput};
use xferlab_core::attrib::{integrated_gradients, AttributionTarget};
use xferlab_core::dataforge::{builtin_glyph_domain, sample_concat};
use xferlab_core::glmlab::{sample_glm_dataset, task_score, CorrelationSpec, Scenario};
use xferlab_core::nncore::*;
use xferlab_core::numkit::{stable_sigmoid, RngStream};

static SERIAL: Mutex<()> = Mutex::new(());

struct Check {
    id: u32,
    name: &'static str,
    budget: Duration,
    start: Instant,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn new(id: u32, name: &'static str, budget_secs: u64) -> Self {
        Check { id, name, budget: Duration::from_secs(budget_secs), start: Instant::now(), failures: vec![], notes: vec![] }
    }

    fn expect(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn finish(mut self) {
        let took = self.start.elapsed();
        self.expect(took <= self.budget, format!("runtime {:.0}s (budget {}s)", took.as_secs_f64(), self.budget.as_secs()));
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        let detail = if self.failures.is_empty() { self.notes.join("; ") } else { self.failures.join("; ") };
        let _ = writeln!(std::io::stderr(), "criterion {} [{status}] {}: {detail}", self.id, self.name);
        assert!(self.failures.is_empty(), "criterion {} failed: {}", self.id, self.failures.join("; "));
    }
}

fn run(toml: &str, kind: ExperimentKind, out: &Path) -> RunOutput {
    let cfg = ExperimentConfig::parse(toml).expect("acceptance config parses");
    run_experiment(&cfg, kind, &RunOptions { out: out.to_path_buf(), jobs: 1, resume: false }).expect("run succeeds")
}

fn col(t: &ResultTable, name: &str) -> Vec<f64> {
    t.numeric_column(name).unwrap()
}

fn text(t: &ResultTable, name: &str) -> Vec<String> {
    let i = t.column_index(name).unwrap();
    t.rows.iter().map(|r| r[i].render()).collect()
}

/// Average ranks (ties share the mean rank).
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn criterion_1_correlation_equals_beta() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut c = Check::new(1, "corr = beta identity", 60);
    let dir = tempfile::tempdir().unwrap();
    let out = run("seeds = [0]\n[corr_check]\nn = 100000\n", ExperimentKind::CorrCheck, dir.path());
    let t = out.table("corr_check_cells").unwrap();
    for (b, r) in col(t, "beta").into_iter().zip(col(t, "mean_corr")) {
        c.expect((r - b).abs() <= 0.02, format!("beta {b}: {r:.4}"));
    }
    c.expect(t.rows.len() == 5, format!("{} betas", t.rows.len()));
    c.finish();
}

#[test]
fn criterion_2_glm_weight_path() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut c = Check::new(2, "GLM weight path", 60);
    let dir = tempfile::tempdir().unwrap();
    let toml = "seeds = [0]\n[glm]\nscenarios = [\"pairwise\"]\nks = [1]\nalphas = [-0.99, 0.0, 0.99]\n";
    let out = run(toml, ExperimentKind::GlmSweep, dir.path());
    let t = out.table("glm_runs").unwrap();
    for ((a, w1), w2) in col(t, "alpha").into_iter().zip(col(t, "w_alice_1")).zip(col(t, "w_bob_1")) {
        let ratio = w2 / w1;
        if a == 0.0 {
            c.expect(ratio.abs() < 0.05, format!("alpha 0: w2/w1 = {ratio:.4}"));
        } else {
            let ok = (0.8..=1.05).contains(&ratio.abs()) && ratio.signum() == a.signum();
            c.expect(ok, format!("alpha {a}: w2/w1 = {ratio:.4}"));
        }
    }
    c.finish();
}

#[test]
fn criterion_3_glm_accuracy_curves() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut c = Check::new(3, "GLM accuracy curves", 600);
    let dir = tempfile::tempdir().unwrap();
    let toml = "[glm]\nscenarios = [\"pairwise\"]\nks = [1]\nalpha_points = 11\n";
    let out = run(toml, ExperimentKind::GlmSweep, &dir.path().join("s1"));
    let t = out.table("glm_curves").unwrap();
    let alphas = col(t, "alpha");
    let (pre, fine) = (col(t, "acc_pretrained"), col(t, "acc_finetuned"));
    let at = |a: f64| alphas.iter().position(|&x| (x - a).abs() < 1e-9).unwrap();
    c.expect(pre[at(-1.0)] < 40.0, format!("no fine-tune at alpha -1: {:.2}", pre[at(-1.0)]));
    c.expect((fine[at(0.0)] - 50.0).abs() <= 2.0, format!("fine-tuned at alpha 0: {:.2}", fine[at(0.0)]));
    let abs: Vec<f64> = alphas.iter().map(|a| a.abs()).collect();
    let rho = spearman(&abs, &fine);
    c.expect(rho >= 0.95, format!("spearman(|alpha|, acc) = {rho:.3}"));

    // Monte-Carlo Bayes accuracy for Bob's label on an independent sample.
    let spec = CorrelationSpec::new(1.0, 1, Scenario::Pairwise).unwrap();
    let mc = sample_glm_dataset::<f64>(&spec, 200_000, &RngStream::root(0xBA7E5)).unwrap();
    let bayes = 100.0
        * (0..mc.len())
            .map(|i| {
                let p = stable_sigmoid(task_score(mc.x.row(i), false));
                p.max(1.0 - p)
            })
            .sum::<f64>()
        / mc.len() as f64;
    let a1 = fine[at(1.0)];
    c.expect((a1 - bayes).abs() <= 2.0, format!("alpha 1: {a1:.2} vs Bayes {bayes:.2}"));

    let toml = "[glm]\nscenarios = [\"global\"]\nks = [32]\nalphas = [-1.0, 1.0]\n";
    let out = run(toml, ExperimentKind::GlmSweep, &dir.path().join("s2"));
    let t = out.table("glm_curves").unwrap();
    for (a, f) in col(t, "alpha").into_iter().zip(col(t, "acc_finetuned")) {
        c.expect(f >= 95.0, format!("global k=32 alpha {a}: {f:.2}"));
    }
    c.finish();
}

#[test]
fn criterion_4_gradient_checks() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut c = Check::new(4, "finite-difference gradients", 60);
    for kind in GradCheckKind::ALL {
        let worst = (0..5u64)
            .map(|s| gradient_check(kind, &RngStream::root(s).named("acceptance")).max_rel_error)
            .fold(0.0, f64::max);
        c.expect(worst < 1e-4, format!("{kind:?} max {worst:.1e}"));
    }
    c.finish();
}

#[test]
fn criterion_5_task_correlation_trend() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut c = Check::new(5, "task-correlation trend", 900);
    let dir = tempfile::tempdir().unwrap();
    let out = run("[data]\nbetas = [0.0, 0.5, 1.0]\n", ExperimentKind::TaskSweep, dir.path());
    let t = out.table("task_sweep").unwrap();
    let (bob, se, alice) = (col(t, "bob_acc"), col(t, "bob_stderr"), col(t, "alice_acc"));
    c.expect(col(t, "seed_count").iter().all(|&n| n == 3.0), "3 seeds".into());
    for i in 0..2 {
        let margin = bob[i + 1] - bob[i] - se[i] - se[i + 1];
        c.expect(margin >= 3.0, format!("gap {i}->{}: {:.2} beyond stderr", i + 1, margin));
    }
    c.expect(bob[0] > 15.0, format!("bob at beta 0: {:.2}", bob[0]));
    c.expect((bob[2] - alice[2]).abs() <= 5.0, format!("beta 1: bob {:.2} vs alice {:.2}", bob[2], alice[2]));
    c.finish();
}

#[test]
fn criterion_6_layer_sweep() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut c = Check::new(6, "layer sweep", 1200);
    let dir = tempfile::tempdir().unwrap();
    let out = run("[data]\nbetas = [0.0, 1.0]\n", ExperimentKind::LayerSweep, dir.path());
    let t = out.table("layer_sweep").unwrap();
    let mut acc: BTreeMap<(String, u64), f64> = BTreeMap::new();
    for ((b, l), a) in text(t, "beta").into_iter().zip(col(t, "ell")).zip(col(t, "accuracy")) {
        acc.insert((b, l as u64), a);
    }
    let top = acc.keys().map(|k| k.1).max().unwrap();
    let drop = acc[&("0".to_string(), 1)] - acc[&("0".to_string(), top)];
    c.expect(drop >= 10.0, format!("beta 0: acc(1) - acc({top}) = {drop:.2}"));
    let at1: Vec<f64> = acc.iter().filter(|(k, _)| k.0 == "1").map(|(_, &v)| v).collect();
    let spread = at1.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - at1.iter().cloned().fold(f64::INFINITY, f64::min);
    c.expect(spread <= 5.0, format!("beta 1 spread over {} ells: {spread:.2}", at1.len()));
    c.finish();
}

#[test]
fn criterion_7_integrated_gradients() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut c = Check::new(7, "integrated gradients", 60);

    // Linear model: IG equals w_i x_i.
    let (h, w, ch) = (4, 8, 3);
    let mut lin = Network::<f64>::from_specs(&[LayerSpec::Flatten, LayerSpec::SoftmaxOutput { classes: 4 }], (h, w, ch)).unwrap();
    for (i, v) in lin.layers_mut()[1].params[0].data.iter_mut().enumerate() {
        *v = ((i * 7919) % 113) as f64 / 56.5 - 1.0;
    }
    let xs: Vec<f64> = (0..h * w * ch).map(|i| ((i * 31) % 17) as f64 / 17.0).collect();
    let x = Tensor::from_vec(1, ch, h, w, xs.clone());
    let weights = lin.layers()[1].params[0].data.clone();
    let mut worst = 0.0f64;
    for class in 0..4 {
        let m = integrated_gradients(&lin, &x, class, 128, AttributionTarget::Logit).unwrap();
        for c_ in 0..ch {
            for y in 0..h {
                for xx in 0..w {
                    let j = c_ * h * w + y * w + xx;
                    worst = worst.max((m.get(y, xx, c_) - weights[class * xs.len() + j] * xs[j]).abs());
                }
            }
        }
    }
    c.expect(worst <= 1e-10, format!("linear max error {worst:.1e}"));

    // Trained desk FC net.
    let shape = Scale::Desk.input_shape();
    let l = builtin_glyph_domain("glyphA", 0, 200, shape.0, shape.1 / 2, shape.2).unwrap();
    let r = builtin_glyph_domain("glyphB", 0, 200, shape.0, shape.1 / 2, shape.2).unwrap();
    let train_set = sample_concat(0.5, &l, &r, 6000, &RngStream::root(70)).unwrap();
    let mut net = build_network::<f32>(&Arch::FullyConnected, shape, WidthProfile::DESK, &RngStream::root(71), Init::Standard).unwrap();
    let opt = OptimizerConfig { lr: 0.01, epochs: 3, ..OptimizerConfig::ALICE_PAPER };
    train(&mut net, &DataSource::Fixed(&train_set), Target::Alice, &opt, None, &RngStream::root(72)).unwrap();
    let net = widen(&net).unwrap();
    let (lt, rt) = (
        builtin_glyph_domain("glyphA", 1, 10, shape.0, shape.1 / 2, shape.2).unwrap(),
        builtin_glyph_domain("glyphB", 1, 10, shape.0, shape.1 / 2, shape.2).unwrap(),
    );
    let test = sample_concat(0.5, &lt, &rt, 100, &RngStream::root(73)).unwrap();
    let acc = evaluate(&net, &test, Target::Alice).unwrap();
    let (mut gap, mut delta, mut rel) = (0.0, 0.0, Vec::new());
    for i in 0..test.len() {
        let xi: Tensor<f64> = batch_tensor(&test, &[i]);
        let m = integrated_gradients(&net, &xi, test.y_alice[i] as usize, 128, AttributionTarget::Logit).unwrap();
        gap += m.completeness_gap;
        delta += m.output_delta.abs();
        rel.push(m.relative_gap());
    }
    rel.sort_by(f64::total_cmp);
    let median = rel[rel.len() / 2];
    c.expect(gap / delta < 0.01, format!("aggregate gap {:.2e} (net acc {acc:.1})", gap / delta));
    c.expect(median < 0.01, format!("median gap {median:.2e}"));

    let black = Tensor::zeros(1, shape.2, shape.0, shape.1);
    let m = integrated_gradients(&net, &black, 0, 128, AttributionTarget::Logit).unwrap();
    c.expect(m.values.iter().all(|&v| v == 0.0), "black input gives zero map".into());
    c.finish();
}

#[test]
fn criterion_8_oracle_initialization() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut c = Check::new(8, "oracle initialization", 600);
    let dir = tempfile::tempdir().unwrap();
    let out = run("seeds = [0]\n[data]\nbetas = [0.0]\n[attribution]\nsamples = 200\n", ExperimentKind::OracleInit, dir.path());
    let t = out.table("oracle_init_cells").unwrap();
    let inits = text(t, "init");
    let (ratio, acc) = (col(t, "right_left_ratio"), col(t, "alice_acc"));
    let s = inits.iter().position(|i| i == "standard").unwrap();
    let z = inits.iter().position(|i| i == "zero_right_half").unwrap();
    c.expect(ratio[z] < 0.10, format!("zero-init right/left {:.3}", ratio[z]));
    c.expect(ratio[s] >= 0.30, format!("standard right/left {:.3}", ratio[s]));
    c.expect(acc[z] >= acc[s] - 0.5, format!("accuracy zero {:.2} vs standard {:.2}", acc[z], acc[s]));
    c.finish();
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "csv") {
            out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
        }
    }
    out
}

#[test]
fn criterion_9_reproducible_csvs() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut c = Check::new(9, "byte-identical re-runs", 600);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(
        &cfg,
        "seed = 5\nseeds = [0, 1]\n[data]\nbetas = [0.5]\ntrain_per_class = 60\ntest_per_class = 20\npairs_per_epoch = 1500\n\
         test_pairs = 300\n[alice]\nepochs = 2\n[bob]\nepochs = 2\n[glm]\nks = [1, 4]\nalpha_points = 3\nn_train = 3000\nn_test = 3000\n\
         [attribution]\nsamples = 10\nsteps = 16\n[corr_check]\nn = 5000\n",
    )
    .unwrap();
    let cfg = cfg.to_string_lossy().into_owned();
    for cmd in ["task-sweep", "layer-sweep", "glm-sweep", "corr-check", "oracle-init", "attribute"] {
        let mut runs = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("{cmd}-{rep}"));
            let code = main_with_args(["xferlab", "--config", &cfg, "--jobs", "1", "--out", out.to_str().unwrap(), cmd]);
            assert_eq!(code, 0, "{cmd}");
            runs.push(csv_files(&out));
        }
        let same = !runs[0].is_empty() && runs[0] == runs[1];
        c.expect(same, format!("{cmd}: {} csv", runs[0].len()));
    }
    c.finish();
}
