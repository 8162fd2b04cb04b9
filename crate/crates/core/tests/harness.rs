use lungtex_core::evaluation::{
    kfold_plan, loco_plan, run_experiment, selection_rates, ExperimentConfig, Pipeline,
};
use lungtex_core::rng::{seeded, standard_normal};
use lungtex_core::tabular::{mi_filter, rfecv, ColumnOrigin, FeatureMatrix, LearnerKind};
use rand::Rng;

fn matrix(n: usize, cols: Vec<(String, ColumnOrigin)>, labels: Vec<u8>, mut cell: impl FnMut(usize, usize) -> f64) -> FeatureMatrix {
    let d = cols.len();
    let mut data = Vec::with_capacity(n * d);
    for r in 0..n {
        for c in 0..d {
            data.push(cell(r, c));
        }
    }
    FeatureMatrix {
        names: cols.iter().map(|c| c.0.clone()).collect(),
        origin: cols.iter().map(|c| c.1).collect(),
        eligible: vec![true; d],
        data,
        n_rows: n,
        labels,
        centres: (0..n).map(|r| format!("C{}", r % 4)).collect(),
        ids: (0..n).map(|r| format!("p{r}")).collect(),
    }
}

#[test]
fn mi_filter_finds_planted_column() {
    let mut hits = 0;
    for seed in 0..20 {
        let mut rng = seeded(seed, &[7]);
        let n = 200;
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let cols = (0..10).map(|c| (format!("f{c}"), ColumnOrigin::Image)).collect();
        let l2 = labels.clone();
        let m = matrix(n, cols, labels, |r, c| {
            let s = if c == 6 { 1.5 * l2[r] as f64 } else { 0.0 };
            s + standard_normal(&mut rng)
        });
        let top = mi_filter(&m, &(0..10).collect::<Vec<_>>(), 1, 3, seed).unwrap();
        hits += usize::from(top == ["f6"]);
    }
    assert!(hits >= 19, "{hits}/20");
}

#[test]
fn null_cohort_is_at_chance() {
    let mut rng = seeded(4, &[0]);
    let n = 200;
    let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let cols = (0..4).map(|c| (format!("x{c}"), ColumnOrigin::Clinical)).collect();
    let m = matrix(n, cols, labels, |_, _| standard_normal(&mut rng));
    let plan = kfold_plan(n, 10, 2, 1).unwrap();
    let r = run_experiment(&m, &ExperimentConfig::new(Pipeline::ClinicalOnly, LearnerKind::LogisticRegression, 3), &plan)
        .unwrap();
    let acc = r.aggregate.accuracy.unwrap().mean;
    assert!((0.4..=0.6).contains(&acc), "{acc}");
}

#[test]
fn planted_clinical_features_are_selected() {
    let mut rng = seeded(5, &[0]);
    let n = 200;
    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let cols = (0..6).map(|c| (format!("x{c}"), ColumnOrigin::Clinical)).collect();
    let l2 = labels.clone();
    let m = matrix(n, cols, labels, |r, c| {
        let s = if c < 3 { 1.6 * (2.0 * l2[r] as f64 - 1.0) } else { 0.0 };
        s + standard_normal(&mut rng)
    });
    let plan = kfold_plan(n, 10, 1, 2).unwrap();
    let r = run_experiment(&m, &ExperimentConfig::new(Pipeline::ClinicalOnly, LearnerKind::LinearSvm, 3), &plan).unwrap();
    assert!(r.aggregate.accuracy.unwrap().mean >= 0.85);
    let t = selection_rates(&[r]).unwrap();
    for c in 0..3 {
        assert!(t.rate(&format!("x{c}")) >= 0.9);
    }
}

#[test]
fn rfecv_recovers_informative_features() {
    let mut ok = 0;
    for seed in 0..10 {
        let mut rng = seeded(seed, &[9]);
        let n = 300;
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let cols = (0..10).map(|c| (format!("v{c:02}"), ColumnOrigin::Clinical)).collect();
        let l2 = labels.clone();
        let m = matrix(n, cols, labels, |r, c| {
            let s = if c < 3 { 1.2 * (2.0 * l2[r] as f64 - 1.0) } else { 0.0 };
            s + standard_normal(&mut rng)
        });
        let sel = rfecv(&m, LearnerKind::LogisticRegression, 5, seed).unwrap();
        ok += usize::from(["v00", "v01", "v02"].iter().all(|f| sel.selected.iter().any(|s| s == f)));
    }
    assert!(ok >= 9, "{ok}/10");
}

#[test]
fn leakage_sentinel_gains_nothing() {
    let mut total_delta = 0.0;
    let seeds = 5;
    for seed in 0..seeds {
        let mut rng = seeded(seed, &[11]);
        let n = 120;
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let cols: Vec<(String, ColumnOrigin)> = (0..3).map(|c| (format!("x{c}"), ColumnOrigin::Clinical)).collect();
        let l2 = labels.clone();
        let base = matrix(n, cols.clone(), labels.clone(), |r, c| {
            let s = if c == 0 { 0.5 * l2[r] as f64 } else { 0.0 };
            s + standard_normal(&mut rng)
        });
        let plan = kfold_plan(n, 5, 1, seed).unwrap();
        let cfg = ExperimentConfig::new(Pipeline::ClinicalOnly, LearnerKind::LogisticRegression, seed);
        let clean = run_experiment(&base, &cfg, &plan).unwrap();

        // per fold, a column equal to the label on test rows and noise on train rows
        let mut leaky_acc = Vec::new();
        for fold in &plan.folds {
            let mut cols2 = cols.clone();
            cols2.push(("sentinel".into(), ColumnOrigin::Clinical));
            let mut in_test = vec![false; n];
            fold.test.iter().for_each(|&r| in_test[r] = true);
            let m = matrix(n, cols2, labels.clone(), |r, c| {
                if c < 3 {
                    base.value(r, c)
                } else if in_test[r] {
                    labels[r] as f64
                } else {
                    standard_normal(&mut rng)
                }
            });
            let single = lungtex_core::evaluation::FoldPlan {
                scheme: plan.scheme.clone(),
                n_rows: n,
                folds: vec![fold.clone()],
            };
            let r = run_experiment(&m, &cfg, &single).unwrap();
            leaky_acc.push(r.aggregate.accuracy.unwrap().mean);
        }
        let leaky = leaky_acc.iter().sum::<f64>() / leaky_acc.len() as f64;
        total_delta += leaky - clean.aggregate.accuracy.unwrap().mean;
    }
    let delta = total_delta / seeds as f64;
    assert!(delta <= 0.05, "sentinel raised accuracy by {delta}");
}

#[test]
fn reports_are_reproducible() {
    let mut rng = seeded(6, &[0]);
    let n = 90;
    let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let cols = vec![
        ("a".to_string(), ColumnOrigin::Clinical),
        ("i1".to_string(), ColumnOrigin::Image),
        ("i2".to_string(), ColumnOrigin::Image),
        ("i3".to_string(), ColumnOrigin::Image),
    ];
    let l2 = labels.clone();
    let m = matrix(n, cols, labels, |r, c| standard_normal(&mut rng) + if c == 2 { l2[r] as f64 } else { 0.0 });
    let cfg = ExperimentConfig {
        d_pr: Some(2),
        ..ExperimentConfig::new(Pipeline::Fused, LearnerKind::RandomForest, 8)
    };
    let plan = loco_plan(&m.centres).unwrap();
    let a = run_experiment(&m, &cfg, &plan).unwrap().to_json().unwrap();
    let b = run_experiment(&m, &cfg, &plan).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}
