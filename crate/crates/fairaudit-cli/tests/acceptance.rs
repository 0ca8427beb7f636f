//! Acceptance suite: one test per criterion, each checked against an
//! independent brute-force oracle or a frozen hand-computed fixture and
//! printing a pass line (visible with `--nocapture`).

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use common::*;
use fairaudit_core::checklist::{
    attach_evidence, builtin_questionnaire, evaluate_answers, Answer, Backing, Evidence, ItemKind,
    LinkedCheck, PrincipleVerdict, ThresholdProfile,
};
use fairaudit_core::dataset::{AuditTable, Column, ColumnData, ColumnRole};
use fairaudit_core::explain::{
    feature_importance, fit_surrogate, surrogate_fidelity, SurrogateConfig,
};
use fairaudit_core::metrics::{
    confusion_by_group, fairness_report, mutual_information, theil_index, MetricConfig,
};
use fairaudit_core::mitigate::{apply_policy, optimize_thresholds, reweigh, ThresholdSearchConfig};
use fairaudit_core::privacy::{reidentification_scan, BinningSpec, ColumnBinning};

const TOL: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

fn close_opt(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => close(x, y),
        (None, None) => true,
        _ => false,
    }
}

fn classification_table(labels: Vec<u8>, preds: Vec<u8>, groups: Vec<String>) -> AuditTable {
    AuditTable::new(
        vec![
            Column {
                name: "y".into(),
                role: ColumnRole::Label,
                data: ColumnData::Binary(labels),
            },
            Column {
                name: "pred".into(),
                role: ColumnRole::Prediction,
                data: ColumnData::Binary(preds),
            },
            Column {
                name: "g".into(),
                role: ColumnRole::Sensitive,
                data: ColumnData::Categorical(groups),
            },
        ],
        BTreeMap::new(),
    )
    .unwrap()
}

// ---------------------------------------------------------------------
// criterion 1: metric oracle equivalence on 200 random tables
// ---------------------------------------------------------------------

#[derive(Default, Clone, Copy)]
struct OracleCell {
    tp: u64,
    fp: u64,
    tn: u64,
    fnn: u64,
}

impl OracleCell {
    fn n(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fnn
    }
    fn rate(num: u64, den: u64) -> Option<f64> {
        (den > 0).then(|| num as f64 / den as f64)
    }
    fn selection(&self) -> Option<f64> {
        Self::rate(self.tp + self.fp, self.n())
    }
    fn tpr(&self) -> Option<f64> {
        Self::rate(self.tp, self.tp + self.fnn)
    }
    fn fpr(&self) -> Option<f64> {
        Self::rate(self.fp, self.fp + self.tn)
    }
    fn ppv(&self) -> Option<f64> {
        Self::rate(self.tp, self.tp + self.fp)
    }
}

fn oracle_recount(labels: &[u8], preds: &[u8], groups: &[String]) -> BTreeMap<String, OracleCell> {
    let mut cells: BTreeMap<String, OracleCell> = BTreeMap::new();
    for ((&y, &p), g) in labels.iter().zip(preds).zip(groups) {
        let cell = cells.entry(g.clone()).or_default();
        match (y, p) {
            (1, 1) => cell.tp += 1,
            (0, 1) => cell.fp += 1,
            (0, 0) => cell.tn += 1,
            _ => cell.fnn += 1,
        }
    }
    cells
}

fn oracle_theil(labels: &[u8], preds: &[u8]) -> Option<f64> {
    let benefits: Vec<f64> = labels
        .iter()
        .zip(preds)
        .map(|(&y, &p)| f64::from(p) - f64::from(y) + 1.0)
        .collect();
    let n = benefits.len() as f64;
    let mean = benefits.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return None;
    }
    Some(
        benefits
            .iter()
            .map(|&b| {
                let r = b / mean;
                if r > 0.0 {
                    r * r.ln()
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            / n,
    )
}

fn oracle_mi(xs: &[u8], ys: &[String]) -> f64 {
    let mut joint: BTreeMap<(u8, String), f64> = BTreeMap::new();
    let mut mx: BTreeMap<u8, f64> = BTreeMap::new();
    let mut my: BTreeMap<String, f64> = BTreeMap::new();
    let n = xs.len() as f64;
    for (&x, y) in xs.iter().zip(ys) {
        *joint.entry((x, y.clone())).or_default() += 1.0;
        *mx.entry(x).or_default() += 1.0;
        *my.entry(y.clone()).or_default() += 1.0;
    }
    joint
        .iter()
        .map(|((x, y), c)| {
            let p = c / n;
            let px = mx[x] / n;
            let py = my[y] / n;
            p * (p / (px * py)).ln()
        })
        .sum()
}

fn random_classification(rng: &mut ChaCha8Rng, max_n: usize) -> (Vec<u8>, Vec<u8>, Vec<String>) {
    let k = rng.gen_range(2..=4usize);
    let n = rng.gen_range(k.max(5)..=max_n);
    let mut labels = Vec::with_capacity(n);
    let mut preds = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    for i in 0..n {
        labels.push(u8::from(rng.gen_bool(0.5)));
        preds.push(u8::from(rng.gen_bool(0.5)));
        // Forcing the first k rows over every group keeps >= 2 observed.
        let g = if i < k { i } else { rng.gen_range(0..k) };
        groups.push(format!("g{g}"));
    }
    (labels, preds, groups)
}

#[test]
fn criterion_1_metric_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let cfg = MetricConfig::default();
    for case in 0..200 {
        let (labels, preds, groups) = random_classification(&mut rng, 200);
        let table = classification_table(labels.clone(), preds.clone(), groups.clone());
        let computed = confusion_by_group(&table, "g").unwrap();
        let expected = oracle_recount(&labels, &preds, &groups);
        assert_eq!(computed.len(), expected.len(), "case {case}");
        for (name, cell) in &expected {
            let c = &computed[name];
            assert_eq!(
                (c.true_pos, c.false_pos, c.true_neg, c.false_neg),
                (cell.tp, cell.fp, cell.tn, cell.fnn),
                "case {case} group {name}"
            );
            assert!(close_opt(Some(c.selection_rate), cell.selection()));
            assert!(close_opt(c.tpr, cell.tpr()));
            assert!(close_opt(c.fpr, cell.fpr()));
            assert!(close_opt(c.ppv, cell.ppv()));
        }
        let privileged = groups[0].clone();
        let report = fairness_report(&computed, &privileged, &cfg).unwrap();
        let p = &expected[&privileged];
        for g in &report.groups {
            let e = &expected[&g.group];
            let diff = |a: Option<f64>, b: Option<f64>| a.and_then(|x| b.map(|y| x - y));
            assert!(close_opt(g.spd, diff(e.selection(), p.selection())));
            let oracle_di = match (e.selection(), p.selection()) {
                (Some(a), Some(b)) if b > 0.0 => Some(a / b),
                _ => None,
            };
            assert!(close_opt(g.di, oracle_di), "case {case} DI");
            assert!(close_opt(g.eod, diff(e.tpr(), p.tpr())));
            let oracle_aod = match (diff(e.fpr(), p.fpr()), diff(e.tpr(), p.tpr())) {
                (Some(df), Some(dt)) => Some(0.5 * (df + dt)),
                _ => None,
            };
            assert!(close_opt(g.aod, oracle_aod), "case {case} AOD");
            assert!(close_opt(g.ppd, diff(e.ppv(), p.ppv())));
        }
        let theil = theil_index(&labels, &preds, &cfg).unwrap();
        assert!(
            close_opt(theil, oracle_theil(&labels, &preds)),
            "case {case} theil"
        );
        let mi = mutual_information(&preds, &groups).unwrap();
        assert!(close(mi, oracle_mi(&preds, &groups)), "case {case} MI");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}");
    println!(
        "criterion 1 PASS — 200 random tables match the brute-force metric oracle within 1e-9 ({elapsed:?})"
    );
}

// ---------------------------------------------------------------------
// criterion 2: hand-derived two-group fixture
// ---------------------------------------------------------------------

#[test]
fn criterion_2_hand_derived_fixture() {
    let mut labels = Vec::new();
    let mut preds = Vec::new();
    let mut groups = Vec::new();
    let mut push = |n: usize, y: u8, p: u8, g: &str| {
        for _ in 0..n {
            labels.push(y);
            preds.push(p);
            groups.push(g.to_owned());
        }
    };
    push(4, 1, 1, "a");
    push(1, 1, 0, "a");
    push(1, 0, 1, "a");
    push(4, 0, 0, "a");
    push(2, 1, 1, "b");
    push(3, 1, 0, "b");
    push(1, 0, 1, "b");
    push(4, 0, 0, "b");
    let table = classification_table(labels, preds, groups);
    let confusions = confusion_by_group(&table, "g").unwrap();
    let report = fairness_report(&confusions, "a", &MetricConfig::default()).unwrap();
    let b = &report.groups[0];
    let tol = 1e-6;
    assert!((b.spd.unwrap() - -0.2).abs() < tol);
    assert!((b.di.unwrap() - 0.6).abs() < tol);
    assert!((b.eod.unwrap() - -0.4).abs() < tol);
    assert!((b.aod.unwrap() - -0.2).abs() < tol);
    assert!((b.ppd.unwrap() - -0.133333).abs() < tol);
    println!(
        "criterion 2 PASS — fixture yields SPD=-0.2, DI=0.6, EOD=-0.4, AOD=-0.2, PPD=-0.1333 within 1e-6"
    );
}

// ---------------------------------------------------------------------
// criterion 3: reweighing independence on 100 random tables
// ---------------------------------------------------------------------

fn oracle_weighted_mi(groups: &[String], labels: &[u8], weights: &[f64]) -> f64 {
    let mut joint: BTreeMap<(String, u8), f64> = BTreeMap::new();
    let mut mg: BTreeMap<String, f64> = BTreeMap::new();
    let mut ml: BTreeMap<u8, f64> = BTreeMap::new();
    let mut total = 0.0;
    for ((g, &y), &w) in groups.iter().zip(labels).zip(weights) {
        *joint.entry((g.clone(), y)).or_default() += w;
        *mg.entry(g.clone()).or_default() += w;
        *ml.entry(y).or_default() += w;
        total += w;
    }
    joint
        .iter()
        .filter(|(_, &w)| w > 0.0)
        .map(|((g, y), &w)| {
            let p = w / total;
            p * (p / ((mg[g] / total) * (ml[y] / total))).ln()
        })
        .sum()
}

#[test]
fn criterion_3_reweighing_independence() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for case in 0..100 {
        let k = rng.gen_range(2..=4usize);
        let mut labels = Vec::new();
        let mut groups = Vec::new();
        // Seed every (group, label) cell so the factorization exists.
        for g in 0..k {
            for y in [0u8, 1] {
                labels.push(y);
                groups.push(format!("g{g}"));
            }
        }
        let extra = rng.gen_range(0..=190usize);
        let rate = rng.gen_range(0.2..0.8);
        for _ in 0..extra {
            labels.push(u8::from(rng.gen_bool(rate)));
            groups.push(format!("g{}", rng.gen_range(0..k)));
        }
        let n = labels.len();
        let table = classification_table(labels.clone(), vec![0; n], groups.clone());
        let w = reweigh(&table, "g").unwrap();
        let total: f64 = w.row_weights.iter().sum();
        assert!(
            (total - n as f64).abs() <= 1e-9,
            "case {case}: sum {total} vs {n}"
        );
        let mi = oracle_weighted_mi(&groups, &labels, &w.row_weights);
        assert!(mi.abs() <= 1e-9, "case {case}: weighted MI {mi}");
    }

    // Hand-computed weights fixture: group a 4 pos / 2 neg, b 1 pos / 3 neg.
    let mut labels = vec![1; 4];
    labels.extend([0, 0, 1, 0, 0, 0]);
    let groups: Vec<String> = ["a", "a", "a", "a", "a", "a", "b", "b", "b", "b"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let table = classification_table(labels, vec![0; 10], groups);
    let w = reweigh(&table, "g").unwrap();
    assert!(close(w.cell_weights[&("a".into(), 1)], 0.75));
    assert!(close(w.cell_weights[&("a".into(), 0)], 1.5));
    assert!(close(w.cell_weights[&("b".into(), 1)], 2.0));
    assert!(close(w.cell_weights[&("b".into(), 0)], 2.0 / 3.0));
    println!(
        "criterion 3 PASS — 100 random tables reach weighted MI <= 1e-9 with mass conserved; hand weights 0.75/1.5/2.0/0.667 match"
    );
}

// ---------------------------------------------------------------------
// criterion 4: threshold-optimizer optimality vs grid-product brute force
// ---------------------------------------------------------------------

struct SynthSet {
    labels: Vec<u8>,
    scores: Vec<f64>,
    groups: Vec<String>,
    epsilon: f64,
}

fn synth_scores(seed: u64, k: usize) -> SynthSet {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4000 + seed);
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    let mut groups = Vec::new();
    for g in 0..k {
        let n_g = rng.gen_range(80..=400usize);
        let base_rate = rng.gen_range(0.25..0.75);
        let pos_shape = rng.gen_range(0.3..0.9);
        let neg_shape = rng.gen_range(1.2..3.0);
        for i in 0..n_g {
            let y = if i == 0 {
                1
            } else {
                u8::from(rng.gen_bool(base_rate))
            };
            let u: f64 = rng.gen();
            let s = if y == 1 {
                u.powf(pos_shape)
            } else {
                u.powf(neg_shape)
            };
            labels.push(y);
            scores.push(s);
            groups.push(format!("g{g}"));
        }
    }
    let epsilon = [0.02, 0.05, 0.1, 0.2][seed as usize % 4];
    SynthSet {
        labels,
        scores,
        groups,
        epsilon,
    }
}

fn score_table(set: &SynthSet) -> AuditTable {
    AuditTable::new(
        vec![
            Column {
                name: "y".into(),
                role: ColumnRole::Label,
                data: ColumnData::Binary(set.labels.clone()),
            },
            Column {
                name: "score".into(),
                role: ColumnRole::Score,
                data: ColumnData::Real(set.scores.clone()),
            },
            Column {
                name: "g".into(),
                role: ColumnRole::Sensitive,
                data: ColumnData::Categorical(set.groups.clone()),
            },
        ],
        BTreeMap::new(),
    )
    .unwrap()
}

/// Exhaustive grid-product search for the best feasible correct count.
fn brute_force_best(set: &SynthSet, grid: &[f64]) -> Option<u64> {
    let mut per_group: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ((g, &y), &s) in set.groups.iter().zip(&set.labels).zip(&set.scores) {
        let e = per_group.entry(g.as_str()).or_default();
        if y == 1 {
            e.0.push(s)
        } else {
            e.1.push(s)
        }
    }
    let stats: Vec<Vec<(f64, u64)>> = per_group
        .values()
        .map(|(pos, neg)| {
            grid.iter()
                .map(|&t| {
                    let tp = pos.iter().filter(|&&s| s >= t).count() as u64;
                    let fp = neg.iter().filter(|&&s| s >= t).count() as u64;
                    let tn = neg.len() as u64 - fp;
                    (tp as f64 / pos.len() as f64, tp + tn)
                })
                .collect()
        })
        .collect();
    let m = grid.len();
    let mut best: Option<u64> = None;
    let mut consider = |choice: &[usize]| {
        let mut max_tpr = f64::MIN;
        let mut min_tpr = f64::MAX;
        let mut correct = 0;
        for (g, &idx) in choice.iter().enumerate() {
            let (tpr, c) = stats[g][idx];
            max_tpr = max_tpr.max(tpr);
            min_tpr = min_tpr.min(tpr);
            correct += c;
        }
        if max_tpr - min_tpr <= set.epsilon && best.is_none_or(|b| correct > b) {
            best = Some(correct);
        }
    };
    match stats.len() {
        2 => {
            for i in 0..m {
                for j in 0..m {
                    consider(&[i, j]);
                }
            }
        }
        3 => {
            for i in 0..m {
                for j in 0..m {
                    for l in 0..m {
                        consider(&[i, j, l]);
                    }
                }
            }
        }
        k => panic!("oracle supports 2-3 groups, got {k}"),
    }
    best
}

#[test]
fn criterion_4_threshold_optimizer_matches_brute_force() {
    let started = Instant::now();
    for seed in 0..50u64 {
        let k = if seed % 10 < 7 { 2 } else { 3 };
        let set = synth_scores(seed, k);
        let table = score_table(&set);
        let config = ThresholdSearchConfig {
            epsilon: set.epsilon,
            ..Default::default()
        };
        let policy = optimize_thresholds(&table, "g", &config).unwrap();
        let n = set.labels.len() as f64;
        let best = brute_force_best(&set, &config.grid)
            .expect("grid includes 0.0 so a feasible policy exists");
        let oracle_accuracy = best as f64 / n;
        assert!(
            (policy.accuracy - oracle_accuracy).abs() < 1e-12,
            "seed {seed}: accuracy {} vs brute force {oracle_accuracy}",
            policy.accuracy
        );
        // The fitted policy must also hold up when re-measured.
        let mitigated = table
            .with_predictions(apply_policy(&table, &policy).unwrap())
            .unwrap();
        let confusions = confusion_by_group(&mitigated, "g").unwrap();
        let report = fairness_report(&confusions, "g0", &MetricConfig::default()).unwrap();
        for g in &report.groups {
            assert!(
                g.eod.unwrap().abs() <= set.epsilon + 1e-12,
                "seed {seed}: post-policy EOD {:?}",
                g.eod
            );
        }
    }

    // Shifted-score fixture reaches a zero gap at full accuracy.
    let set_table = {
        let mut schema = fairaudit_core::dataset::TableSchema::default();
        schema.roles.insert("y".into(), ColumnRole::Label);
        schema.roles.insert("score".into(), ColumnRole::Score);
        schema.roles.insert("grp".into(), ColumnRole::Sensitive);
        AuditTable::load(
            shifted_fixture_csv().as_bytes(),
            fairaudit_core::dataset::TableFormat::csv(),
            &schema,
        )
        .unwrap()
    };
    let config = ThresholdSearchConfig {
        epsilon: 0.0,
        ..Default::default()
    };
    let policy = optimize_thresholds(&set_table, "grp", &config).unwrap();
    assert_eq!(policy.max_tpr_gap, 0.0);
    assert_eq!(policy.accuracy, 1.0);
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "criterion 4 PASS — 50 seeded sets match brute-force grid-product accuracy with post-policy |EOD| <= epsilon; shifted fixture reaches gap 0 at 16/16 ({elapsed:?})"
    );
}

// ---------------------------------------------------------------------
// criterion 5: surrogate recovery and hand-computed importances
// ---------------------------------------------------------------------

fn margin_sample(rng: &mut ChaCha8Rng) -> f64 {
    // Uniform over [0, 0.44] U [0.56, 1].
    let u: f64 = rng.gen();
    if rng.gen_bool(0.5) {
        u * 0.44
    } else {
        0.56 + u * 0.44
    }
}

#[test]
fn criterion_5_surrogate_recovery() {
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5000 + seed);
        let n = 240;
        let x1: Vec<f64> = (0..n).map(|_| margin_sample(&mut rng)).collect();
        let x2: Vec<f64> = (0..n).map(|_| margin_sample(&mut rng)).collect();
        let preds: Vec<u8> = x1
            .iter()
            .zip(&x2)
            .map(|(&a, &b)| if a < 0.5 { 1 } else { u8::from(b >= 0.5) })
            .collect();
        let table = AuditTable::new(
            vec![
                Column {
                    name: "y".into(),
                    role: ColumnRole::Label,
                    data: ColumnData::Binary(vec![0; n]),
                },
                Column {
                    name: "pred".into(),
                    role: ColumnRole::Prediction,
                    data: ColumnData::Binary(preds),
                },
                Column {
                    name: "x1".into(),
                    role: ColumnRole::Feature,
                    data: ColumnData::Numeric(x1.into_iter().map(Some).collect()),
                },
                Column {
                    name: "x2".into(),
                    role: ColumnRole::Feature,
                    data: ColumnData::Numeric(x2.into_iter().map(Some).collect()),
                },
            ],
            BTreeMap::new(),
        )
        .unwrap();
        let cfg = SurrogateConfig {
            max_depth: 2,
            min_leaf: 5,
        };
        let tree = fit_surrogate(&table, &cfg).unwrap();
        let fidelity = surrogate_fidelity(&tree, &table).unwrap();
        assert_eq!(fidelity, 1.0, "seed {seed}: partition not recovered");
    }

    // 8-row fixture: root x1@0.5 (gain 0.125), right child x2@0.5
    // (gain 0.5): importances 1/3 and 2/3.
    let x1 = vec![0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9];
    let x2 = vec![0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.2, 0.8];
    let preds = vec![1, 1, 1, 1, 0, 1, 0, 1];
    let table = AuditTable::new(
        vec![
            Column {
                name: "y".into(),
                role: ColumnRole::Label,
                data: ColumnData::Binary(vec![0; 8]),
            },
            Column {
                name: "pred".into(),
                role: ColumnRole::Prediction,
                data: ColumnData::Binary(preds),
            },
            Column {
                name: "x1".into(),
                role: ColumnRole::Feature,
                data: ColumnData::Numeric(x1.into_iter().map(Some).collect()),
            },
            Column {
                name: "x2".into(),
                role: ColumnRole::Feature,
                data: ColumnData::Numeric(x2.into_iter().map(Some).collect()),
            },
        ],
        BTreeMap::new(),
    )
    .unwrap();
    let cfg = SurrogateConfig {
        max_depth: 2,
        min_leaf: 2,
    };
    let tree = fit_surrogate(&table, &cfg).unwrap();
    let importances = feature_importance(&tree);
    assert_eq!(importances[0].0, "x2");
    assert!((importances[0].1 - 2.0 / 3.0).abs() < 1e-9);
    assert_eq!(importances[1].0, "x1");
    assert!((importances[1].1 - 1.0 / 3.0).abs() < 1e-9);
    println!(
        "criterion 5 PASS — depth-2 generators recovered at fidelity 1.0 over 5 seeds; 8-row importances match 1/3 and 2/3 within 1e-9"
    );
}

// ---------------------------------------------------------------------
// criterion 6: privacy scan vs brute-force group-by on 100 random tables
// ---------------------------------------------------------------------

/// Independent partition: rows keyed by (categorical values, bin index).
fn oracle_partition(
    cat1: &[String],
    cat2: &[String],
    age: &[Option<f64>],
    edges: Option<&[f64]>,
) -> Vec<Vec<usize>> {
    use std::collections::HashMap;
    let mut map: HashMap<(String, String, usize), Vec<usize>> = HashMap::new();
    for i in 0..cat1.len() {
        let bin = match (age[i], edges) {
            (None, _) => usize::MAX,
            (Some(x), Some(edges)) => edges.iter().filter(|&&e| x >= e).count(),
            (Some(x), None) => {
                // No binning: exact value identity via bit pattern.
                x.to_bits() as usize
            }
        };
        map.entry((cat1[i].clone(), cat2[i].clone(), bin))
            .or_default()
            .push(i);
    }
    let mut partition: Vec<Vec<usize>> = map.into_values().collect();
    partition.sort();
    partition
}

#[test]
fn criterion_6_privacy_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for case in 0..100 {
        let n = rng.gen_range(10..=500usize);
        let a1 = rng.gen_range(2..=6usize);
        let a2 = rng.gen_range(2..=6usize);
        let cat1: Vec<String> = (0..n)
            .map(|_| format!("u{}", rng.gen_range(0..a1)))
            .collect();
        let cat2: Vec<String> = (0..n)
            .map(|_| format!("v{}", rng.gen_range(0..a2)))
            .collect();
        let age: Vec<Option<f64>> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    None
                } else {
                    Some((rng.gen_range(0..100) * 7 % 100) as f64)
                }
            })
            .collect();
        let bin = case % 2 == 0;
        let k = rng.gen_range(1..=6usize);
        let table = AuditTable::new(
            vec![
                Column {
                    name: "y".into(),
                    role: ColumnRole::Label,
                    data: ColumnData::Binary([0, 1].repeat(n / 2 + 1)[..n].to_vec()),
                },
                Column {
                    name: "pred".into(),
                    role: ColumnRole::Prediction,
                    data: ColumnData::Binary(vec![0; n]),
                },
                Column {
                    name: "c1".into(),
                    role: ColumnRole::QuasiIdentifier,
                    data: ColumnData::Categorical(cat1.clone()),
                },
                Column {
                    name: "c2".into(),
                    role: ColumnRole::QuasiIdentifier,
                    data: ColumnData::Categorical(cat2.clone()),
                },
                Column {
                    name: "age".into(),
                    role: ColumnRole::QuasiIdentifier,
                    data: ColumnData::Numeric(age.clone()),
                },
            ],
            BTreeMap::new(),
        )
        .unwrap();
        let edges = vec![25.0, 50.0, 75.0];
        let binning = if bin {
            BinningSpec(
                [("age".to_string(), ColumnBinning::Edges(edges.clone()))]
                    .into_iter()
                    .collect(),
            )
        } else {
            BinningSpec::default()
        };
        let quasi = vec!["c1".to_string(), "c2".to_string(), "age".to_string()];
        let scan = reidentification_scan(&table, &quasi, k, &binning).unwrap();

        let expected = oracle_partition(&cat1, &cat2, &age, bin.then_some(edges.as_slice()));
        let mut computed: Vec<Vec<usize>> = scan.classes.iter().map(|c| c.rows.clone()).collect();
        computed.sort();
        assert_eq!(computed, expected, "case {case} partitions differ");

        let unique = expected.iter().filter(|c| c.len() == 1).count();
        assert!(
            close(scan.unique_rate, unique as f64 / n as f64),
            "case {case}"
        );
        let mut violating: Vec<usize> = expected
            .iter()
            .filter(|c| c.len() < k)
            .flat_map(|c| c.iter().copied())
            .collect();
        violating.sort_unstable();
        assert_eq!(scan.violating_rows, violating, "case {case}");
    }

    // {3,2,1} class fixture at k=3 reports exactly 3 violating rows.
    let cat: Vec<String> = ["a", "a", "a", "b", "b", "c"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let table = AuditTable::new(
        vec![
            Column {
                name: "y".into(),
                role: ColumnRole::Label,
                data: ColumnData::Binary(vec![0, 1, 0, 1, 0, 1]),
            },
            Column {
                name: "pred".into(),
                role: ColumnRole::Prediction,
                data: ColumnData::Binary(vec![0; 6]),
            },
            Column {
                name: "qi".into(),
                role: ColumnRole::QuasiIdentifier,
                data: ColumnData::Categorical(cat),
            },
        ],
        BTreeMap::new(),
    )
    .unwrap();
    let scan =
        reidentification_scan(&table, &["qi".to_string()], 3, &BinningSpec::default()).unwrap();
    assert_eq!(scan.violating_rows.len(), 3);
    assert!(close(scan.unique_rate, 1.0 / 6.0));
    println!(
        "criterion 6 PASS — 100 random tables match the brute-force group-by exactly; the 3/2/1 fixture reports 3 violating rows at k=3"
    );
}

// ---------------------------------------------------------------------
// criterion 7: checklist logic end to end
// ---------------------------------------------------------------------

fn lib_all_clear() -> BTreeMap<String, Answer> {
    builtin_questionnaire()
        .questions
        .iter()
        .map(|q| {
            let safe = match q.risk_answer {
                Answer::Yes => Answer::No,
                _ => Answer::Yes,
            };
            (q.id.clone(), safe)
        })
        .collect()
}

#[test]
fn criterion_7_checklist_logic() {
    let def = builtin_questionnaire();
    let profile = ThresholdProfile::default();

    // All-clear answers: zero open items and exit 0 through the CLI.
    let clear = evaluate_answers(&def, &lib_all_clear(), &profile).unwrap();
    assert!(clear.items.is_empty());
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "data.csv", &metrics_fixture_csv());
    let mut config = metrics_fixture_config(dir.path());
    config["answers"] = serde_json::json!("answers.json");
    write(dir.path(), "answers.json", &all_clear_answers().to_string());
    let config_path = write(dir.path(), "audit.json", &config.to_string());
    let out = run_cli(&["audit", "--config", config_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "all-clear audit should exit 0");

    // Every technical-tool risk answer opens exactly one required check
    // naming its linked tool (the robustness question has no in-scope
    // tool and opens a human-review item instead).
    for question in def
        .questions
        .iter()
        .filter(|q| q.backing == Backing::TechnicalTool)
    {
        let mut answers = lib_all_clear();
        answers.insert(question.id.clone(), question.risk_answer);
        let assessment = evaluate_answers(&def, &answers, &profile).unwrap();
        assert_eq!(assessment.items.len(), 1, "{}", question.id);
        let item = &assessment.items[0];
        match question.linked_check.unwrap() {
            LinkedCheck::None => assert_eq!(item.kind, ItemKind::HumanReview),
            check => {
                assert_eq!(item.kind, ItemKind::RequiredCheck, "{}", question.id);
                assert_eq!(item.check, check, "{}", question.id);
            }
        }
    }

    // DI = 0.6 evidence blocks the Fair principle and exits 3.
    let mut answers = lib_all_clear();
    answers.insert("dataset-bias".into(), Answer::Yes);
    let open = evaluate_answers(&def, &answers, &profile).unwrap();
    let table = {
        let mut labels = vec![1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        let mut preds = vec![1, 1, 1, 1, 0, 1, 0, 0, 0, 0];
        let mut groups: Vec<String> = vec!["a".into(); 10];
        labels.extend([1, 1, 1, 1, 1, 0, 0, 0, 0, 0]);
        preds.extend([1, 1, 0, 0, 0, 1, 0, 0, 0, 0]);
        groups.extend(std::iter::repeat_n("b".to_string(), 10));
        classification_table(labels, preds, groups)
    };
    let confusions = confusion_by_group(&table, "g").unwrap();
    let report = fairness_report(&confusions, "a", &MetricConfig::default()).unwrap();
    assert!(close(report.groups[0].di.unwrap(), 0.6));
    let (blocked, _) = attach_evidence(&open, &Evidence::FairnessMetrics(vec![&report]), &profile);
    assert_eq!(
        blocked.verdicts[&fairaudit_core::checklist::Principle::Fair],
        PrincipleVerdict::Blocked
    );
    let (again, _) = attach_evidence(
        &blocked,
        &Evidence::FairnessMetrics(vec![&report]),
        &profile,
    );
    assert_eq!(blocked, again, "attach_evidence must be idempotent");

    // Same outcome through the CLI: exit code 3.
    let mut risky = all_clear_answers();
    risky["answers"]["dataset-bias"] = serde_json::json!("yes");
    write(dir.path(), "answers.json", &risky.to_string());
    let out = run_cli(&["audit", "--config", config_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "blocked audit should exit 3");
    println!(
        "criterion 7 PASS — all-clear exits 0; each tool-backed risk answer opens exactly one required check; DI=0.6 blocks Fair with exit 3; attach is idempotent"
    );
}

// ---------------------------------------------------------------------
// criterion 8: byte-identical canonical reports across runs
// ---------------------------------------------------------------------

#[test]
fn criterion_8_determinism() {
    use fairaudit_cli::config::AuditConfig;
    use fairaudit_cli::run::run_audit;

    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "data.csv", &metrics_fixture_csv());
    let mut config_json = metrics_fixture_config(dir.path());
    config_json["answers"] = serde_json::json!("answers.json");
    write(dir.path(), "answers.json", &all_clear_answers().to_string());
    let config_path = write(dir.path(), "audit.json", &config_json.to_string());

    // Identical config both times; the second run overwrites the first
    // run's artifacts.
    let (config, _) = AuditConfig::load(&config_path).unwrap();
    let stages = config.stages;
    let run1 = run_audit(&config, stages).unwrap();
    let run2 = run_audit(&config, stages).unwrap();

    let canon1 = run1.report.canonical_json().unwrap();
    let canon2 = run2.report.canonical_json().unwrap();
    assert_eq!(canon1, canon2, "canonical bodies differ between runs");
    assert_eq!(run1.report.digest().unwrap(), run2.report.digest().unwrap());
    println!(
        "criterion 8 PASS — two pipeline runs produce byte-identical canonical reports (timestamp excluded) on {}-{}",
        std::env::consts::OS,
        std::env::consts::ARCH
    );
}

// ---------------------------------------------------------------------
// criterion 9: built-in questionnaire coverage
// ---------------------------------------------------------------------

#[test]
fn criterion_9_questionnaire_coverage() {
    use fairaudit_core::checklist::Principle::*;
    let expected: Vec<(&str, fairaudit_core::checklist::Principle, Backing)> = vec![
        ("sensitive-variables", Fair, Backing::Training),
        ("proxy-correlation", Fair, Backing::TechnicalTool),
        ("dataset-bias", Fair, Backing::TechnicalTool),
        ("error-impact", Fair, Backing::Training),
        ("error-distribution", Fair, Backing::TechnicalTool),
        (
            "human-impersonation",
            TransparentExplainable,
            Backing::Training,
        ),
        ("life-impact", TransparentExplainable, Backing::Training),
        (
            "understanding-gap",
            TransparentExplainable,
            Backing::Training,
        ),
        (
            "explanation-request",
            TransparentExplainable,
            Backing::Training,
        ),
        (
            "data-purpose-clarity",
            TransparentExplainable,
            Backing::Training,
        ),
        (
            "algorithm-transparency",
            TransparentExplainable,
            Backing::TechnicalTool,
        ),
        ("human-rights", HumanCentric, Backing::Training),
        ("sdg-impact", HumanCentric, Backing::Training),
        ("personal-data", PrivacySecurity, Backing::Training),
        ("pia-concerns", PrivacySecurity, Backing::Training),
        (
            "reidentification-risk",
            PrivacySecurity,
            Backing::TechnicalTool,
        ),
        ("security-concerns", PrivacySecurity, Backing::Training),
        ("attack-robustness", ThirdParties, Backing::TechnicalTool),
        ("supplier-information", ThirdParties, Backing::Training),
    ];
    let def = builtin_questionnaire();
    assert_eq!(def.questions.len(), 19);
    assert_eq!(def.questions.len(), expected.len());
    for (question, (id, principle, backing)) in def.questions.iter().zip(&expected) {
        assert_eq!(&question.id, id);
        assert_eq!(&question.principle, principle, "{id}");
        assert_eq!(&question.backing, backing, "{id}");
        if question.backing == Backing::TechnicalTool {
            assert!(question.linked_check.is_some(), "{id}");
        }
    }
    // Spot-pin the exact wording of key questions.
    assert_eq!(
        def.questions[0].text,
        "Does your data set contain sensitive variables?"
    );
    assert_eq!(
        def.questions[1].text,
        "Does any of the variables strongly correlate with sensitive variables?"
    );
    assert_eq!(
        def.questions[15].text,
        "In case your P&S uses anonymized data, is there an unreasonable risk of re-identification?"
    );
    println!(
        "criterion 9 PASS — built-in questionnaire covers all 19 questions with principle and backing assignments"
    );
}
