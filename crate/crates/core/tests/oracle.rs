use crossloss::data::{
    default_planted_pairs, generate_mog, plant_biased_corpus, tokenize, MogConfig, PlantConfig, TokenizerConfig,
};
use crossloss::diffmath::{loss_grad, ParamVector};
use crossloss::influence::{predict_removal_delta, score_all, stest, IhvpSolver};
use crossloss::models::{LabeledPoint, LogisticObjective};
use crossloss::oracle::{empirical_influence, loo_all, pearson, Trainer};
use crossloss::training::{train_dec, train_skipgram, DecConfig, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct LogisticTrainer {
    obj: LogisticObjective<f64>,
    points: Vec<LabeledPoint<f64>>,
}

impl Trainer<f64> for LogisticTrainer {
    fn dataset_len(&self) -> usize {
        self.points.len()
    }

    // Newton's method to machine precision, so LOO differences are exact.
    fn train(&self, exclude: Option<usize>) -> crossloss::Result<ParamVector<f64>> {
        let data: Vec<_> = self.points.iter().enumerate().filter(|(i, _)| Some(*i) != exclude).map(|(_, p)| p.clone()).collect();
        let mut theta = ParamVector::single("w", vec![0.0; self.obj.dim]);
        for _ in 0..50 {
            let g = loss_grad(&self.obj, &theta, &data)?;
            if g.norm() < 1e-14 {
                break;
            }
            let step = crossloss::influence::ihvp_direct(&self.obj, &theta, &data, &g, 0.0)?;
            theta.axpy(-1.0, &step)?;
        }
        Ok(theta)
    }
}

#[test]
fn upweighting_derivative_predicts_leave_one_out_on_a_convex_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let points: Vec<_> = (0..60)
        .map(|i| {
            let label = i % 2;
            let shift = if label == 1 { 0.8 } else { -0.8 };
            LabeledPoint::new(vec![rng.random_range(-1.0..1.0) + shift, rng.random_range(-1.0..1.0), 1.0], label)
        })
        .collect();
    let trainer = LogisticTrainer { obj: LogisticObjective { dim: 3, l2: 0.1 }, points: points.clone() };
    let full = trainer.train(None).unwrap();
    let test = vec![LabeledPoint::new(vec![0.3, -0.5, 1.0], 1)];
    let s = stest(&trainer.obj, &test, &trainer.obj, &full, &points, &IhvpSolver::Direct { damping: 0.0 }).unwrap();
    let predicted: Vec<f64> = score_all(&s, &trainer.obj, &full, &points).unwrap().iter().map(|r| r.score).collect();
    let loo = loo_all(&trainer).unwrap();
    let n = points.len();
    let empirical: Vec<f64> =
        loo.iter().map(|p| empirical_influence(&trainer.obj, &test, &full, p, n).unwrap()).collect();
    assert!(pearson(&predicted, &empirical).unwrap() > 0.99);
    // removal delta has the same sign and scale as the actual change
    let actual = -empirical[0] / n as f64;
    let pred = predict_removal_delta(predicted[0], n);
    assert!((pred - actual).abs() < 0.1 * actual.abs().max(1e-6), "{pred} vs {actual}");
}

#[test]
fn dec_training_is_deterministic() {
    let points = generate_mog::<f64>(&MogConfig { per_class: 10, ..MogConfig::defaults(5) }).unwrap();
    let cfg = DecConfig::new(3, 5);
    let a = train_dec(&points, &cfg).unwrap();
    let b = train_dec(&points, &cfg).unwrap();
    assert_eq!(a.model.params().values(), b.model.params().values());
    assert_eq!(a.class_of_cluster, b.class_of_cluster);
}

#[test]
fn skipgram_training_is_deterministic() {
    let (pairs, spec) = default_planted_pairs();
    let docs = plant_biased_corpus(&pairs, 1.0, 600, 2, &PlantConfig::default()).unwrap();
    let corpus = tokenize(&docs, &TokenizerConfig::frequency(1)).unwrap();
    let cfg = TrainConfig { epochs: 3, ..TrainConfig::new(2) };
    let a = train_skipgram::<f64>(&corpus, &cfg).unwrap();
    let b = train_skipgram::<f64>(&corpus, &cfg).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.holdout_docs, b.holdout_docs);
    let c = train_skipgram::<f64>(&corpus, &TrainConfig { seed: 3, ..cfg }).unwrap();
    assert_ne!(a.model, c.model);
    spec.resolve(a.model.vocab()).unwrap();
}
