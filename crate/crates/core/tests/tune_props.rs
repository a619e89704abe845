use mpap_core::boost::{BoostingConfig, Loss, Mode};
use mpap_core::metrics::regression_metrics;
use mpap_core::tune::{
    bayes_optimize, cross_validate, make_folds, BayesOptions, BoostTrainer, CvScheme, Objective,
    Param, SearchSpace, TrainerError,
};
use mpap_core::{seed, Matrix};
use proptest::prelude::*;
use rand::Rng;

fn grid_oracle() -> f64 {
    (0..=1000)
        .map(|i| i as f64 * 0.01)
        .min_by(|a, b| (a - 3.0).powi(2).total_cmp(&(b - 3.0).powi(2)))
        .unwrap()
}

#[test]
fn quadratic_optimum_for_ten_seeds() {
    let space = SearchSpace::new(vec![Param::linear("x", 0.0, 10.0)]).unwrap();
    let target = grid_oracle();
    for s in 0..10 {
        let opts = BayesOptions {
            budget: 50,
            seed: s,
            ..BayesOptions::default()
        };
        let r = bayes_optimize(&space, |x| (x[0] - 3.0).powi(2), &opts).unwrap();
        assert!((r.best[0] - target).abs() < 0.1, "seed {s}: {:?}", r.best);
        let running = r.running_best();
        assert!(running.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*running.last().unwrap(), r.best_objective);
        assert!(r.history.iter().all(|t| space.contains(&t.point)));
    }
}

#[test]
fn optimizer_is_deterministic() {
    let space = SearchSpace::boosting(Mode::Goss);
    let f = |x: &[f64]| {
        x.iter()
            .enumerate()
            .map(|(i, v)| (v.ln_1p() - i as f64 * 0.1).powi(2))
            .sum::<f64>()
    };
    let opts = BayesOptions {
        budget: 25,
        seed: 8,
        ..BayesOptions::default()
    };
    let a = bayes_optimize(&space, f, &opts).unwrap();
    let b = bayes_optimize(&space, f, &opts).unwrap();
    assert_eq!(a, b);
    for t in &a.history {
        assert!(space.contains(&t.point));
        for (p, v) in space.params.iter().zip(&t.point) {
            if p.integer {
                assert_eq!(v.fract(), 0.0);
            }
        }
    }
}

fn noisy_data(n: usize, s: u64) -> (Matrix, Vec<f64>) {
    let mut rng = seed::rng(s);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let y = rows
        .iter()
        .map(|r| 3.0 * r[0] + rng.random::<f64>())
        .collect();
    (Matrix::from_rows(&rows).unwrap(), y)
}

#[test]
fn memorizer_scores_imperfectly_out_of_fold() {
    let (x, y) = noisy_data(40, 1);
    // Nearest-neighbour lookup: exact on its training rows.
    let memorize =
        |train: &Matrix, ty: &[f64], test: &Matrix, _: usize| -> Result<Vec<f64>, TrainerError> {
            Ok((0..test.n_rows())
                .map(|i| {
                    let best = (0..train.n_rows())
                        .min_by(|&a, &b| {
                            let d = |r: usize| {
                                (0..2)
                                    .map(|j| (train.get(r, j) - test.get(i, j)).powi(2))
                                    .sum::<f64>()
                            };
                            d(a).total_cmp(&d(b))
                        })
                        .unwrap();
                    ty[best]
                })
                .collect())
        };
    let out = cross_validate(
        &x,
        &y,
        &CvScheme::kfold(5, 2),
        None,
        &memorize,
        Objective::Mse,
    )
    .unwrap();
    assert!(out.objective > 0.01);
    let m = regression_metrics(&y, &out.predictions).unwrap();
    assert_eq!(out.objective, m.mse);
}

#[test]
fn predictions_do_not_depend_on_fold_order() {
    let (x, y) = noisy_data(30, 4);
    let trainer = BoostTrainer {
        config: BoostingConfig {
            n_trees: 20,
            ..BoostingConfig::new(Mode::Dart, Loss::SquaredError)
        },
        seed: 6,
    };
    let scheme = CvScheme::kfold(5, 1);
    let out = cross_validate(&x, &y, &scheme, None, &trainer, Objective::Mse).unwrap();
    // Re-evaluate the folds in reverse through a trainer wrapper that
    // runs each fold independently.
    let folds = make_folds(30, None, &scheme).unwrap();
    for (f, test) in folds.iter().enumerate().rev() {
        let train: Vec<usize> = (0..30).filter(|i| !test.contains(i)).collect();
        let tx = x.select_rows(&train);
        let scaler = mpap_core::cohort::Scaler::fit(&tx);
        let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let p = mpap_core::tune::Trainer::fit_predict(
            &trainer,
            &scaler.apply(&tx),
            &ty,
            &scaler.apply(&x.select_rows(test)),
            f,
        )
        .unwrap();
        for (&i, v) in test.iter().zip(p) {
            assert_eq!(out.predictions[i], v);
        }
    }
}

proptest! {
    #[test]
    fn folds_partition_indices(n in 2usize..120, k in 2usize..10, s in any::<u64>(), pos_every in 2usize..5) {
        prop_assume!(k <= n);
        let labels: Vec<bool> = (0..n).map(|i| i % pos_every == 0).collect();
        for scheme in [CvScheme::loocv(), CvScheme::kfold(k, s), CvScheme::stratified(k, s)] {
            let folds = make_folds(n, Some(&labels), &scheme).unwrap();
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            if scheme.is_stratified() {
                let counts: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| labels[i]).count()).collect();
                prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            }
        }
    }
}
