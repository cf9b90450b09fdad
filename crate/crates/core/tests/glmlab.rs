use rand::Rng;
use xferlab_core::glmlab::*;
use xferlab_core::numkit::{stable_sigmoid, stats, Matrix, RngStream};

fn data(alpha: f64, k: usize, scenario: Scenario, n: usize, seed: u64) -> GlmDataset<f64> {
    sample_glm_dataset(&CorrelationSpec::new(alpha, k, scenario).unwrap(), n, &RngStream::root(seed)).unwrap()
}

fn indicator(v: &[bool]) -> Vec<f64> {
    v.iter().map(|&b| b as u8 as f64).collect()
}

fn alice(d: &GlmDataset<f64>) -> Vec<f64> {
    let cfg = GlmSweepConfig::default();
    train_alice_glm(d, cfg.lambda, cfg.alice_steps, suggest_alice_lr(d, cfg.lambda)).unwrap().params.w
}

#[test]
fn global_negative_alpha_entries() {
    let s: Matrix<f64> = build_covariance(&CorrelationSpec::new(-0.5, 2, Scenario::Global).unwrap());
    let want = [
        [2.0, 0.5, -0.5, -0.5],
        [0.5, 2.0, -0.5, -0.5],
        [-0.5, -0.5, 2.0, 0.5],
        [-0.5, -0.5, 0.5, 2.0],
    ];
    for (i, row) in want.iter().enumerate() {
        assert_eq!(s.row(i), row);
    }
}

#[test]
fn labels_independent_at_zero_alpha_and_balanced() {
    let d = data(0.0, 1, Scenario::Pairwise, 200_000, 1);
    let r = stats::pearson(&indicator(&d.y_alice), &indicator(&d.y_bob)).unwrap();
    assert!(r.abs() < 0.01, "{r}");
    let m = stats::mean(&indicator(&d.y_alice));
    assert!((m - 0.5).abs() < 0.01, "{m}");
}

#[test]
fn label_correlation_at_alpha_one_matches_shared_feature_oracle() {
    let d = data(1.0, 1, Scenario::Pairwise, 200_000, 2);
    let got = stats::pearson(&indicator(&d.y_alice), &indicator(&d.y_bob)).unwrap();
    // Oracle: one standard normal feature drives two conditionally
    // independent Bernoulli labels.
    let mut g = RngStream::root(77).generator();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for _ in 0..200_000 {
        let x: f64 = g.sample(rand_distr::StandardNormal);
        let p = stable_sigmoid(x);
        a.push((g.random::<f64>() < p) as u8 as f64);
        b.push((g.random::<f64>() < p) as u8 as f64);
    }
    let want = stats::pearson(&a, &b).unwrap();
    assert!((got - want).abs() < 0.01, "{got} vs {want}");
}

#[test]
fn score_variance_identities() {
    for (scenario, alpha, k) in [(Scenario::Pairwise, 0.7, 4), (Scenario::Global, 0.5, 4), (Scenario::Global, -0.5, 3)] {
        let d = data(alpha, k, scenario, 200_000, 3);
        let scores: Vec<f64> = (0..d.len()).map(|i| task_score(d.x.row(i), true)).collect();
        let m = stats::mean(&scores);
        let var = scores.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (scores.len() - 1) as f64;
        let k = k as f64;
        let want = match scenario {
            Scenario::Pairwise => k,
            Scenario::Global => (1.0 - alpha) * k + alpha.abs() * k * k,
        };
        assert!((var / want - 1.0).abs() < 0.03, "{scenario:?} alpha={alpha}: {var} vs {want}");
    }
}

#[test]
fn alice_weight_path() {
    let w = alice(&data(0.0, 1, Scenario::Pairwise, 50_000, 4));
    assert!(w[1].abs() < 0.05 * w[0].abs(), "{w:?}");
    for alpha in [0.99, -0.99] {
        let w = alice(&data(alpha, 1, Scenario::Pairwise, 50_000, 4));
        let ratio = w[1] / w[0];
        assert!((0.8..=1.05).contains(&ratio.abs()) && ratio.signum() == alpha.signum(), "alpha={alpha}: {ratio}");
    }
}

#[test]
fn bob_on_his_own_feature_reaches_bayes() {
    let train = data(0.0, 1, Scenario::Pairwise, 50_000, 5);
    let test = data(0.0, 1, Scenario::Pairwise, 50_000, 6);
    let w = [0.0, 1.0];
    let bob = finetune_bob_scalar(&w, &train, 100, 1.0).unwrap();
    assert!(bob.v > 0.0);
    let acc = evaluate_glm(&w, bob.v, &test.x, &test.y_bob);
    let bayes: f64 = 100.0 * (0..test.len()).map(|i| {
        let p = stable_sigmoid(test.x.row(i)[1]);
        p.max(1.0 - p)
    }).sum::<f64>() / test.len() as f64;
    assert!((acc - bayes).abs() < 1.0, "{acc} vs {bayes}");
}

#[test]
fn null_backbone_scores_half() {
    let d = data(0.3, 1, Scenario::Pairwise, 50_000, 7);
    let acc = evaluate_glm(&[0.0, 0.0], 1.0, &d.x, &d.y_bob);
    assert!((acc - 50.0).abs() < 1.0, "{acc}");
}

fn small_cfg() -> GlmSweepConfig {
    GlmSweepConfig { n_train: 20_000, n_test: 20_000, seeds: 2, ..GlmSweepConfig::default() }
}

#[test]
fn finetuned_curve_is_symmetric_with_minimum_at_zero() {
    let grid = uniform_alpha_grid(9);
    for scenario in [Scenario::Pairwise, Scenario::Global] {
        let rows = sweep_alpha::<f64>(&grid, &[1], scenario, &small_cfg(), &RngStream::root(8)).unwrap();
        let acc: Vec<f64> = rows.iter().map(|r| r.acc_finetuned).collect();
        // Only Scenario 1 is sign-symmetric: the printed Scenario-2 matrix has
        // diagonal 1 + 2|alpha| for alpha < 0, so corr(x1, x2) = -1/3 at -1.
        if scenario == Scenario::Pairwise {
            for i in 0..acc.len() / 2 {
                assert!((acc[i] - acc[acc.len() - 1 - i]).abs() < 2.0, "{acc:?}");
            }
        }
        let min = acc.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(acc[4] <= min + 1.0, "{scenario:?}: {acc:?}");
    }
}

#[test]
fn global_accuracy_grows_with_k() {
    let rows = sweep_alpha::<f64>(&[0.25], &[1, 2, 4, 8], Scenario::Global, &small_cfg(), &RngStream::root(9)).unwrap();
    let acc: Vec<f64> = rows.iter().map(|r| r.acc_finetuned).collect();
    assert!(acc.windows(2).all(|w| w[1] >= w[0] - 1.0), "{acc:?}");
}
