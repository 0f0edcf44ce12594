//! Zero-shot inference and the two evaluation protocols: nearest-neighbor
//! classification in word-vector space, top-k accuracy, per-class accuracy,
//! confusion matrices, and the generalization-vs-distance curve.

use std::collections::BTreeMap;

use rand::seq::index::sample as sample_indices;
use serde::Serialize;

use crate::curation::ClassSet;
use crate::error::{Result, ZslError};
use crate::features::{pool_inference_features, LabeledDataset};
use crate::math::Scalar;
use crate::rng;
use crate::wordvec::cosine_distance;
use crate::LinearEncoder;

/// Rank all test classes by ascending cosine distance to `z`; ties broken by
/// lower class index.
pub fn classify<F: Scalar>(z: &[F], test_classes: &ClassSet<F>) -> Result<Vec<usize>> {
    if test_classes.is_empty() {
        return Err(ZslError::EmptyInput("test class set".into()));
    }
    let mut ranked: Vec<(usize, f64)> = Vec::with_capacity(test_classes.len());
    for (i, (_, e)) in test_classes.classes().iter().enumerate() {
        let d = cosine_distance(z, e.as_slice())?.to_f64_lossy();
        ranked.push((i, d));
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(ranked.into_iter().map(|(i, _)| i).collect())
}

/// One Protocol-1 split: the sampled classes and their accuracies.
#[derive(Debug, Clone, Serialize)]
pub struct SplitRecord {
    pub classes: Vec<String>,
    pub top1: f64,
    pub top5: f64,
    pub n_videos: usize,
}

/// Aggregate evaluation result.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub protocol: String,
    pub top1: f64,
    pub top5: f64,
    pub top5_k: usize,
    pub n_videos: usize,
    pub per_class_accuracy: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub splits: Vec<SplitRecord>,
}

fn eval_videos<F: Scalar>(
    dataset: &LabeledDataset<F>,
    candidates: &ClassSet<F>,
    candidate_of: &dyn Fn(usize) -> Option<usize>,
    enc: &LinearEncoder<F>,
    t_eval: usize,
) -> Result<(f64, f64, usize, BTreeMap<String, f64>, Vec<Vec<usize>>)> {
    let k = candidates.len().min(5);
    let mut hits1 = 0usize;
    let mut hitsk = 0usize;
    let mut n = 0usize;
    let mut per_class_hits: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut counts = vec![vec![0usize; candidates.len()]; candidates.len()];

    for (video, ci) in dataset.videos() {
        let Some(true_idx) = candidate_of(*ci) else {
            continue; // video's class not in the candidate set
        };
        let pooled = pool_inference_features(video, t_eval);
        let z = enc.forward(&pooled)?;
        let ranking = classify(&z, candidates)?;
        n += 1;
        let class_name = candidates.class(true_idx).0.raw().to_string();
        let entry = per_class_hits.entry(class_name).or_insert((0, 0));
        entry.1 += 1;
        counts[true_idx][ranking[0]] += 1;
        if ranking[0] == true_idx {
            hits1 += 1;
            entry.0 += 1;
        }
        if ranking[..k].contains(&true_idx) {
            hitsk += 1;
        }
    }
    if n == 0 {
        return Err(ZslError::EmptyInput("no videos to evaluate".into()));
    }
    let per_class: BTreeMap<String, f64> = per_class_hits
        .into_iter()
        .map(|(c, (h, t))| (c, h as f64 / t as f64))
        .collect();
    Ok((hits1 as f64 / n as f64, hitsk as f64 / n as f64, n, per_class, counts))
}

/// Evaluation Protocol 2: every video against all dataset classes.
pub fn evaluate_full<F: Scalar>(
    dataset: &LabeledDataset<F>,
    enc: &LinearEncoder<F>,
    t_eval: usize,
) -> Result<EvalReport> {
    if t_eval == 0 {
        return Err(ZslError::InvalidConfig("t_eval must be >= 1".into()));
    }
    let candidates = dataset.classes();
    let (top1, top5, n, per_class, _) =
        eval_videos(dataset, candidates, &Some, enc, t_eval)?;
    Ok(EvalReport {
        protocol: "P2".into(),
        top1,
        top5,
        top5_k: candidates.len().min(5),
        n_videos: n,
        per_class_accuracy: per_class,
        splits: Vec::new(),
    })
}

/// Evaluation Protocol 1: sample half of the classes, restrict videos and
/// candidates to the sample, repeat and average.
pub fn evaluate_protocol1<F: Scalar>(
    dataset: &LabeledDataset<F>,
    enc: &LinearEncoder<F>,
    t_eval: usize,
    repeats: usize,
    seed: u64,
) -> Result<EvalReport> {
    let all = dataset.classes();
    if all.len() < 2 {
        return Err(ZslError::Invalid("protocol 1 needs >= 2 classes".into()));
    }
    if repeats == 0 {
        return Err(ZslError::InvalidConfig("repeats must be >= 1".into()));
    }
    let half = all.len() / 2;
    let mut stream = rng::labeled(seed, "protocol1");
    let mut splits = Vec::with_capacity(repeats);
    let mut per_class_sum: BTreeMap<String, (f64, usize)> = BTreeMap::new();

    for _ in 0..repeats {
        let mut chosen: Vec<usize> = sample_indices(&mut stream, all.len(), half).into_vec();
        chosen.sort_unstable();
        let subset = ClassSet::new(
            "p1-split",
            chosen.iter().map(|&i| all.class(i).clone()).collect(),
        )?;
        let map: Vec<Option<usize>> = {
            let mut m = vec![None; all.len()];
            for (new, &old) in chosen.iter().enumerate() {
                m[old] = Some(new);
            }
            m
        };
        let (top1, top5, n, per_class, _) =
            eval_videos(dataset, &subset, &|ci| map[ci], enc, t_eval)?;
        for (c, a) in &per_class {
            let e = per_class_sum.entry(c.clone()).or_insert((0.0, 0));
            e.0 += a;
            e.1 += 1;
        }
        splits.push(SplitRecord {
            classes: subset
                .classes()
                .iter()
                .map(|(c, _)| c.raw().to_string())
                .collect(),
            top1,
            top5,
            n_videos: n,
        });
    }
    let mean1 = splits.iter().map(|s| s.top1).sum::<f64>() / repeats as f64;
    let mean5 = splits.iter().map(|s| s.top5).sum::<f64>() / repeats as f64;
    let n_total = splits.iter().map(|s| s.n_videos).sum();
    Ok(EvalReport {
        protocol: "P1".into(),
        top1: mean1,
        top5: mean5,
        top5_k: half.min(5),
        n_videos: n_total,
        per_class_accuracy: per_class_sum
            .into_iter()
            .map(|(c, (s, n))| (c, s / n as f64))
            .collect(),
        splits,
    })
}

/// Confusion counts over rank-1 predictions.
#[derive(Debug, Clone, Serialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn n_videos(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Euclidean distance between two confusion matrices, treating each as a
    /// flat vector of counts.
    pub fn l2_distance(&self, other: &ConfusionMatrix) -> Result<f64> {
        if self.classes != other.classes {
            return Err(ZslError::Invalid(
                "confusion matrices over different class lists".into(),
            ));
        }
        let mut acc = 0.0;
        for (ra, rb) in self.counts.iter().zip(&other.counts) {
            for (a, b) in ra.iter().zip(rb) {
                let d = *a as f64 - *b as f64;
                acc += d * d;
            }
        }
        Ok(acc.sqrt())
    }
}

pub fn confusion_matrix<F: Scalar>(
    dataset: &LabeledDataset<F>,
    enc: &LinearEncoder<F>,
    t_eval: usize,
) -> Result<ConfusionMatrix> {
    let candidates = dataset.classes();
    let (_, _, _, _, counts) = eval_videos(dataset, candidates, &Some, enc, t_eval)?;
    Ok(ConfusionMatrix {
        classes: candidates
            .classes()
            .iter()
            .map(|(c, _)| c.raw().to_string())
            .collect(),
        counts,
    })
}

/// Accuracy on cumulatively harder test subsets: classes whose mean distance
/// to their `k_nn` nearest training classes exceeds a growing threshold.
#[derive(Debug, Clone, Serialize)]
pub struct GeneralizationCurve {
    pub thresholds: Vec<f64>,
    /// `None` where the surviving set is empty.
    pub accuracies: Vec<Option<f64>>,
    pub surviving_class_counts: Vec<usize>,
    /// Per test class: (name, mean distance to the k nearest train classes).
    pub class_scores: Vec<(String, f64)>,
}

pub fn generalization_curve<F: Scalar>(
    train_classes: &ClassSet<F>,
    dataset: &LabeledDataset<F>,
    enc: &LinearEncoder<F>,
    t_eval: usize,
    k_nn: usize,
) -> Result<GeneralizationCurve> {
    if train_classes.len() < k_nn {
        return Err(ZslError::Invalid(format!(
            "need >= {k_nn} training classes for k-NN scores, got {}",
            train_classes.len()
        )));
    }
    let test = dataset.classes();
    let mut scores: Vec<f64> = Vec::with_capacity(test.len());
    for (_, te) in test.classes() {
        let mut dists: Vec<f64> = train_classes
            .classes()
            .iter()
            .map(|(_, tr)| cosine_distance(te.as_slice(), tr.as_slice()).map(|d| d.to_f64_lossy()))
            .collect::<Result<_>>()?;
        dists.sort_by(f64::total_cmp);
        scores.push(dists[..k_nn].iter().sum::<f64>() / k_nn as f64);
    }

    let mut thresholds: Vec<f64> = scores.clone();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    // baseline point where every class survives
    if thresholds.first().is_some_and(|&t| t > 0.0) {
        thresholds.insert(0, 0.0);
    }

    let mut accuracies = Vec::with_capacity(thresholds.len());
    let mut surviving = Vec::with_capacity(thresholds.len());
    for &tau in &thresholds {
        let keep: Vec<usize> = (0..test.len()).filter(|&i| scores[i] > tau).collect();
        surviving.push(keep.len());
        if keep.is_empty() {
            accuracies.push(None);
            continue;
        }
        let subset = ClassSet::new(
            "surviving",
            keep.iter().map(|&i| test.class(i).clone()).collect(),
        )?;
        let map: Vec<Option<usize>> = {
            let mut m = vec![None; test.len()];
            for (new, &old) in keep.iter().enumerate() {
                m[old] = Some(new);
            }
            m
        };
        match eval_videos(dataset, &subset, &|ci| map[ci], enc, t_eval) {
            Ok((top1, _, _, _, _)) => accuracies.push(Some(top1)),
            // surviving classes may have no videos in the dataset
            Err(ZslError::EmptyInput(_)) => accuracies.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok(GeneralizationCurve {
        thresholds,
        accuracies,
        surviving_class_counts: surviving,
        class_scores: test
            .classes()
            .iter()
            .map(|(c, _)| c.raw().to_string())
            .zip(scores.iter().copied())
            .map(|(c, s)| (c, s))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::VideoFeatures;
    use crate::math::Matrix;
    use crate::wordvec::{ClassName, SemanticEmbedding};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn emb(v: &[f64]) -> SemanticEmbedding<f64> {
        SemanticEmbedding::new(v.to_vec()).unwrap()
    }

    fn identity_encoder(n: usize) -> LinearEncoder<f64> {
        let mut w = Matrix::zeros(n, n);
        for i in 0..n {
            w.set(i, i, 1.0);
        }
        LinearEncoder::new(w, false).unwrap()
    }

    fn class_set(embs: &[Vec<f64>]) -> ClassSet<f64> {
        ClassSet::new(
            "t",
            embs.iter()
                .enumerate()
                .map(|(i, e)| (ClassName::parse(&format!("class{i}")).unwrap(), emb(e)))
                .collect(),
        )
        .unwrap()
    }

    /// Dataset where every video of class i is exactly the class embedding
    /// (identity encoder then classifies it perfectly).
    fn perfect_dataset(embs: &[Vec<f64>], videos_per_class: usize) -> LabeledDataset<f64> {
        let classes = class_set(embs);
        let mut videos = Vec::new();
        for (ci, e) in embs.iter().enumerate() {
            for k in 0..videos_per_class {
                videos.push((
                    VideoFeatures::new(format!("v{ci}_{k}"), Matrix::from_rows(&[e.clone()]))
                        .unwrap(),
                    ci,
                ));
            }
        }
        LabeledDataset::new(classes, videos).unwrap()
    }

    #[test]
    fn classify_exact_match_first() {
        let cs = class_set(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let r = classify(&[0.0, 2.0], &cs).unwrap();
        assert_eq!(r, vec![1, 0]);
    }

    #[test]
    fn classify_orthogonal_ranking() {
        let cs = class_set(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(classify(&[3.0, 0.1], &cs).unwrap(), vec![0, 1]);
    }

    #[test]
    fn classify_zero_norm_errors() {
        let cs = class_set(&[vec![1.0, 0.0]]);
        assert!(classify(&[0.0, 0.0], &cs).is_err());
    }

    #[test]
    fn classify_matches_brute_force() {
        let mut r = rng::seeded(5);
        for _ in 0..50 {
            let embs: Vec<Vec<f64>> = (0..20)
                .map(|_| (0..6).map(|_| r.gen_range(-1.0..1.0)).collect())
                .collect();
            let cs = class_set(&embs);
            let z: Vec<f64> = (0..6).map(|_| r.gen_range(-1.0..1.0) + 1.5).collect();
            let ranked = classify(&z, &cs).unwrap();
            // brute-force argmin oracle
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, e) in embs.iter().enumerate() {
                let d: f64 = cosine_distance(&z, e.as_slice()).unwrap();
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            assert_eq!(ranked[0], best);
        }
    }

    #[test]
    fn classify_scale_invariant() {
        let cs = class_set(&[vec![1.0, 0.2], vec![0.2, 1.0], vec![-0.5, 0.5]]);
        let z = [0.7, 0.6];
        let zs: Vec<f64> = z.iter().map(|v| v * 42.0).collect();
        assert_eq!(
            classify(&z, &cs).unwrap(),
            classify(&zs, &cs.scaled(0.003)).unwrap()
        );
    }

    #[test]
    fn perfect_encoder_full_eval_top1() {
        let ds = perfect_dataset(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]], 3);
        let rep = evaluate_full(&ds, &identity_encoder(2), 1).unwrap();
        assert_eq!(rep.top1, 1.0);
        assert_eq!(rep.n_videos, 9);
        assert!(rep.per_class_accuracy.values().all(|&a| a == 1.0));
        assert_eq!(rep.top5_k, 3); // flagged truncation
    }

    #[test]
    fn single_video_top1_binary() {
        let ds = perfect_dataset(&[vec![1.0, 0.0], vec![0.0, 1.0]], 1);
        let rep = evaluate_full(&ds, &identity_encoder(2), 1).unwrap();
        assert!(rep.top1 == 1.0 || rep.top1 == 0.0);
    }

    #[test]
    fn random_encoder_near_chance() {
        // C balanced classes, random encoder → top1 ≈ 1/C
        let c = 8usize;
        let mut r = rng::seeded(100);
        let embs: Vec<Vec<f64>> = (0..c)
            .map(|_| (0..16).map(|_| r.gen_range(-1.0..1.0)).collect())
            .collect();
        let ds = perfect_dataset(&embs, 60);
        let enc = LinearEncoder::init(16, 16, false, &mut r);
        let rep = evaluate_full(&ds, &enc, 1).unwrap();
        let n = (c * 60) as f64;
        let p = 1.0 / c as f64;
        let sigma = (p * (1.0 - p) / n).sqrt();
        // generous: random projections are not exactly uniform over classes
        assert!(
            (rep.top1 - p).abs() < 6.0 * sigma + 0.08,
            "top1 {} vs chance {p}",
            rep.top1
        );
    }

    #[test]
    fn top5_at_least_top1() {
        let mut r = rng::seeded(17);
        let embs: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..8).map(|_| r.gen_range(-1.0..1.0)).collect())
            .collect();
        let ds = perfect_dataset(&embs, 4);
        let enc = LinearEncoder::init(8, 8, false, &mut r);
        let rep = evaluate_full(&ds, &enc, 1).unwrap();
        assert!(rep.top5 >= rep.top1);
    }

    #[test]
    fn protocol1_perfect_encoder() {
        let ds = perfect_dataset(
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![-1.0, 1.0]],
            2,
        );
        let rep = evaluate_protocol1(&ds, &identity_encoder(2), 1, 10, 7).unwrap();
        assert_eq!(rep.top1, 1.0);
        assert_eq!(rep.splits.len(), 10);
        for s in &rep.splits {
            assert_eq!(s.classes.len(), 2);
        }
    }

    #[test]
    fn protocol1_two_classes_degenerate_split() {
        let ds = perfect_dataset(&[vec![1.0, 0.0], vec![0.0, 1.0]], 2);
        // any encoder: a 1-class candidate set is always right
        let mut r = rng::seeded(3);
        let enc = LinearEncoder::init(2, 2, false, &mut r);
        let rep = evaluate_protocol1(&ds, &enc, 1, 10, 1).unwrap();
        assert_eq!(rep.top1, 1.0);
        for s in &rep.splits {
            assert_eq!(s.classes.len(), 1);
        }
    }

    #[test]
    fn protocol1_deterministic() {
        let ds = perfect_dataset(
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![-1.0, 1.0]],
            2,
        );
        let mut r = rng::seeded(2);
        let enc = LinearEncoder::init(2, 2, false, &mut r);
        let a = evaluate_protocol1(&ds, &enc, 1, 5, 99).unwrap();
        let b = evaluate_protocol1(&ds, &enc, 1, 5, 99).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn confusion_diagonal_for_perfect_encoder() {
        let ds = perfect_dataset(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]], 2);
        let cm = confusion_matrix(&ds, &identity_encoder(2), 1).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(cm.counts[i][j], if i == j { 2 } else { 0 });
            }
        }
    }

    #[test]
    fn confusion_trace_equals_top1() {
        let mut r = rng::seeded(21);
        let embs: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..5).map(|_| r.gen_range(-1.0..1.0)).collect())
            .collect();
        let ds = perfect_dataset(&embs, 3);
        let enc = LinearEncoder::init(5, 5, false, &mut r);
        let rep = evaluate_full(&ds, &enc, 1).unwrap();
        let cm = confusion_matrix(&ds, &enc, 1).unwrap();
        assert_relative_eq!(
            cm.trace() as f64 / cm.n_videos() as f64,
            rep.top1,
            epsilon = 1e-12
        );
    }

    #[test]
    fn confusion_l2_distance_formula() {
        let a = ConfusionMatrix {
            classes: vec!["x".into(), "y".into()],
            counts: vec![vec![3, 0], vec![1, 2]],
        };
        let b = ConfusionMatrix {
            classes: vec!["x".into(), "y".into()],
            counts: vec![vec![2, 1], vec![0, 3]],
        };
        // diff = [1,-1,1,-1] → L2 = 2
        assert_relative_eq!(a.l2_distance(&b).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn removing_distractor_never_demotes_true_class() {
        let mut r = rng::seeded(33);
        for _ in 0..30 {
            let embs: Vec<Vec<f64>> = (0..8)
                .map(|_| (0..4).map(|_| r.gen_range(-1.0..1.0)).collect())
                .collect();
            let cs = class_set(&embs);
            let z: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0) + 1.2).collect();
            let full = classify(&z, &cs).unwrap();
            let true_idx = 3usize;
            let rank_full = full.iter().position(|&i| i == true_idx).unwrap();
            // drop one non-true class
            let drop = 5usize;
            let keep: Vec<usize> = (0..8).filter(|&i| i != drop).collect();
            let sub = ClassSet::new(
                "sub",
                keep.iter().map(|&i| cs.class(i).clone()).collect(),
            )
            .unwrap();
            let sub_true = keep.iter().position(|&i| i == true_idx).unwrap();
            let sub_rank = classify(&z, &sub)
                .unwrap()
                .iter()
                .position(|&i| i == sub_true)
                .unwrap();
            assert!(sub_rank <= rank_full);
        }
    }

    #[test]
    fn generalization_curve_matches_hand_enumeration() {
        // 6 train + 4 test classes in 2-D, k_nn = 2
        let train = class_set(&[
            vec![1.0, 0.0],
            vec![0.9, 0.1],
            vec![0.0, 1.0],
            vec![0.1, 0.9],
            vec![0.7, 0.7],
            vec![-0.2, 1.0],
        ]);
        let test_embs = vec![
            vec![1.0, 0.05],
            vec![0.05, 1.0],
            vec![-1.0, 0.4],
            vec![0.6, 0.8],
        ];
        let ds = perfect_dataset(&test_embs, 2);
        let enc = identity_encoder(2);
        let curve = generalization_curve(&train, &ds, &enc, 1, 2).unwrap();

        // oracle: brute-force scores
        let mut oracle_scores = Vec::new();
        for te in &test_embs {
            let mut ds_: Vec<f64> = train
                .classes()
                .iter()
                .map(|(_, tr)| cosine_distance(te.as_slice(), tr.as_slice()).unwrap())
                .collect();
            ds_.sort_by(f64::total_cmp);
            oracle_scores.push((ds_[0] + ds_[1]) / 2.0);
        }
        for ((_, got), want) in curve.class_scores.iter().zip(&oracle_scores) {
            assert_relative_eq!(*got, *want, epsilon = 1e-12);
        }
        // counts strictly decrease past each unique score
        let mut uniq = oracle_scores.clone();
        uniq.sort_by(f64::total_cmp);
        uniq.dedup();
        assert!(curve
            .surviving_class_counts
            .windows(2)
            .all(|w| w[0] >= w[1]));
        // baseline threshold keeps everything and the perfect encoder is exact
        assert_eq!(curve.surviving_class_counts[0], 4);
        assert_eq!(curve.accuracies[0], Some(1.0));
        // final point eliminates the last class
        assert_eq!(*curve.surviving_class_counts.last().unwrap(), 0);
        assert!(curve.accuracies.last().unwrap().is_none());
    }
}
