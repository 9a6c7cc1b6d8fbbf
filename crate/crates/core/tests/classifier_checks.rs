use qerc::classifier::{
    adagrad_step, epoch_stats, evaluate, loss_and_gradient, train, AdagradState, ClassifierParams,
    LabeledFeatures, TrainConfig,
};
use qerc::mlayer::FeatureMatrix;
use rand::{Rng, SeedableRng};

fn random_problem(
    rows: usize,
    dim: usize,
    classes: usize,
    seed: u64,
) -> (FeatureMatrix, Vec<usize>) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * dim)
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    let labels = (0..rows).map(|_| rng.random_range(0..classes)).collect();
    (FeatureMatrix::new(rows, dim, data).unwrap(), labels)
}

fn loss(params: &ClassifierParams, x: &FeatureMatrix, y: &[usize]) -> f64 {
    loss_and_gradient(params, x, y).unwrap().loss
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let (x, y) = random_problem(17, 6, 4, 1);
    let params = ClassifierParams::xavier(4, 6, 2);
    let grad = loss_and_gradient(&params, &x, &y).unwrap();
    let h = 1e-5;
    let check = |analytic: f64, plus: ClassifierParams, minus: ClassifierParams| {
        let numeric = (loss(&plus, &x, &y) - loss(&minus, &x, &y)) / (2.0 * h);
        let scale = analytic.abs().max(numeric.abs()).max(1e-3);
        assert!(
            (analytic - numeric).abs() / scale < 1e-6,
            "analytic {analytic} vs numeric {numeric}"
        );
    };
    for i in 0..params.weights.len() {
        let (mut p, mut m) = (params.clone(), params.clone());
        p.weights[i] += h;
        m.weights[i] -= h;
        check(grad.weights[i], p, m);
    }
    for i in 0..params.bias.len() {
        let (mut p, mut m) = (params.clone(), params.clone());
        p.bias[i] += h;
        m.bias[i] -= h;
        check(grad.bias[i], p, m);
    }
}

#[test]
fn uniform_prediction_costs_ln_ten() {
    let (x, y) = random_problem(50, 8, 10, 3);
    let g = loss_and_gradient(&ClassifierParams::zeros(10, 8), &x, &y).unwrap();
    assert!((g.loss - 10f64.ln()).abs() < 1e-12);
    // Bias gradient at zero weights is 1/C minus the label frequency.
    for c in 0..10 {
        let freq = y.iter().filter(|&&l| l == c).count() as f64 / 50.0;
        assert!((g.bias[c] - (0.1 - freq)).abs() < 1e-12);
    }
}

#[test]
fn adagrad_first_step_moves_each_coordinate_by_the_learning_rate() {
    let mut params = ClassifierParams::zeros(2, 2);
    let (x, y) = random_problem(8, 2, 2, 4);
    let grad = loss_and_gradient(&params, &x, &y).unwrap();
    let mut state = AdagradState::new(&params);
    adagrad_step(&mut params, &grad, &mut state, 0.01, 0.0).unwrap();
    for (w, g) in params.weights.iter().zip(&grad.weights) {
        if *g != 0.0 {
            assert!((w + 0.01 * g.signum()).abs() < 1e-15);
        }
    }
}

#[test]
fn training_replays_bit_for_bit() {
    let (x, y) = random_problem(300, 5, 3, 5);
    let (xt, yt) = random_problem(60, 5, 3, 6);
    let cfg = TrainConfig {
        epochs: 6,
        batch_size: 32,
        seed: 77,
        ..TrainConfig::default()
    };
    let run = || {
        train(
            LabeledFeatures::new(&x, &y).unwrap(),
            Some(LabeledFeatures::new(&xt, &yt).unwrap()),
            3,
            &cfg,
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    let other = train(
        LabeledFeatures::new(&x, &y).unwrap(),
        None,
        3,
        &TrainConfig {
            seed: 78,
            ..cfg.clone()
        },
    )
    .unwrap();
    assert_ne!(a.params, other.params);
}

#[test]
fn training_separates_linearly_separable_classes() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let rows = 400;
    let mut data = Vec::with_capacity(rows * 2);
    let mut labels = Vec::with_capacity(rows);
    for i in 0..rows {
        let c = i % 2;
        let centre = if c == 0 { -2.0 } else { 2.0 };
        data.push(centre + rng.random_range(-0.5..0.5));
        data.push(rng.random_range(-1.0..1.0));
        labels.push(c);
    }
    let x = FeatureMatrix::new(rows, 2, data).unwrap();
    let cfg = TrainConfig {
        epochs: 20,
        learning_rate: 0.1,
        ..TrainConfig::default()
    };
    let out = train(LabeledFeatures::new(&x, &labels).unwrap(), None, 2, &cfg).unwrap();
    assert_eq!(evaluate(&out.params, &x, &labels).unwrap(), 1.0);
    let losses: Vec<f64> = out.history.iter().map(|h| h.train_loss).collect();
    assert!(losses.last().unwrap() < &losses[0]);
}

#[test]
fn window_statistics_use_population_deviation() {
    let acc: Vec<f64> = (1..=50).map(|e| e as f64 / 100.0).collect();
    let s = epoch_stats(&acc, (40, 50)).unwrap();
    assert!((s.mean - 0.45).abs() < 1e-12);
    // Population std of 11 consecutive values spaced by 0.01.
    assert!((s.std - 0.01 * 10f64.sqrt()).abs() < 1e-12);
}
