use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::data::TrajectoryWindow;
use crate::diff::{Adam, AdamConfig, Parameters, Tape, Tensor};
use crate::model::{AttentionStrategy, ModelConfig, ModelParams, Point};
use crate::testutil::ReferenceScene;

fn small(strategy: AttentionStrategy) -> ModelConfig {
    ModelConfig {
        embed_dim: 4,
        hidden_dim: 6,
        strategy,
        ..ModelConfig::default()
    }
}

fn random_params(config: ModelConfig, seed: u64, scale: f64) -> ModelParams {
    let mut p = ModelParams::init(config, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    p.visit_mut(&mut |_, t| {
        for v in t.values_mut() {
            *v = rng.random_range(-scale..scale);
        }
    });
    p
}

fn window_from(tracks: &[Vec<Point>]) -> TrajectoryWindow {
    let len = tracks[0].len();
    TrajectoryWindow {
        scene: String::from("test"),
        start_frame: 0,
        ped_ids: (0..tracks.len() as u64).collect(),
        frames: (0..len)
            .map(|t| tracks.iter().map(|tr| tr[t]).collect())
            .collect(),
    }
}

fn random_window(rng: &mut ChaCha8Rng, n: usize, len: usize) -> TrajectoryWindow {
    let tracks: Vec<Vec<Point>> = (0..n)
        .map(|_| {
            let mut p = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let v = [rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6)];
            (0..len)
                .map(|_| {
                    p = [
                        p[0] + v[0] + rng.random_range(-0.05..0.05),
                        p[1] + v[1] + rng.random_range(-0.05..0.05),
                    ];
                    p
                })
                .collect()
        })
        .collect();
    window_from(&tracks)
}

fn constant_velocity(n: usize, len: usize) -> TrajectoryWindow {
    let tracks: Vec<Vec<Point>> = (0..n)
        .map(|k| {
            let start = [0.0, 1.5 * k as f64];
            let v = [0.4 + 0.1 * k as f64, 0.05 * k as f64];
            (0..len)
                .map(|t| [start[0] + v[0] * t as f64, start[1] + v[1] * t as f64])
                .collect()
        })
        .collect();
    window_from(&tracks)
}

#[test]
fn single_pedestrian_matches_no_attention() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = random_window(&mut rng, 1, 20);
    let base = rollout(
        &ModelParams::init(small(AttentionStrategy::None), 9).unwrap(),
        &w,
        RolloutMode::Free,
    )
    .unwrap();
    assert!(base.attention_trace.is_empty());
    for s in [
        AttentionStrategy::Soft,
        AttentionStrategy::Relative,
        AttentionStrategy::SocialRelationship,
    ] {
        let p = ModelParams::init(small(s), 9).unwrap();
        let r = rollout(&p, &w, RolloutMode::Free).unwrap();
        assert_eq!(r.predicted_nabs, base.predicted_nabs, "{s}");
        assert!(r.attention_trace.is_empty());
    }
}

#[test]
fn zero_params_predict_output_bias() {
    let mut p = ModelParams::zeros(ModelConfig::default()).unwrap();
    p.output.bias = Tensor::new(vec![1, 2], vec![0.3, -0.2]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = random_window(&mut rng, 3, 20);
    let r = rollout(&p, &w, RolloutMode::Free).unwrap();
    assert_eq!(r.predicted_nabs.len(), 3);
    for track in &r.predicted_nabs {
        assert_eq!(track, &vec![[0.3, -0.2]; 12]);
    }
}

#[test]
fn rollout_matches_scalar_reference() {
    for (s, strategy) in AttentionStrategy::ALL.into_iter().enumerate() {
        let p = random_params(small(strategy), 40 + s as u64, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(s as u64);
        for n in [2, 3] {
            let w = random_window(&mut rng, n, 20);
            let got = rollout(&p, &w, RolloutMode::Free).unwrap();

            let mut reference = ReferenceScene::new(&p, n);
            let anchors = &w.frames[7];
            let mut prev: Vec<Point> = Vec::new();
            let mut preds: Vec<Vec<Point>> = vec![Vec::new(); n];
            let mut alphas = Vec::new();
            for t in 0..19 {
                let (pos, rel): (Vec<Point>, Vec<Point>) = if t < 8 {
                    let pos = w.frames[t].clone();
                    let rel = pos
                        .iter()
                        .zip(anchors)
                        .map(|(p, a)| [p[0] - a[0], p[1] - a[1]])
                        .collect();
                    (pos, rel)
                } else {
                    let pos = prev
                        .iter()
                        .zip(anchors)
                        .map(|(d, a)| [a[0] + d[0], a[1] + d[1]])
                        .collect();
                    (pos, prev.clone())
                };
                let (out, alpha) = reference.step(&pos, &rel);
                if t >= 7 {
                    for k in 0..n {
                        preds[k].push(out[k]);
                    }
                }
                alphas.extend(alpha);
                prev = out;
            }
            for k in 0..n {
                for (a, b) in got.predicted_nabs[k].iter().zip(&preds[k]) {
                    assert!(
                        (a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10,
                        "{strategy}"
                    );
                }
            }
            assert_eq!(got.attention_trace.len(), alphas.len());
            for (step, want) in got.attention_trace.iter().zip(&alphas) {
                for (row, wrow) in step.weights.iter().zip(want) {
                    crate::testutil::close(row, wrow, 1e-10);
                }
            }
        }
    }
}

#[test]
fn decoded_positions_and_attention_rows() {
    let p = random_params(small(AttentionStrategy::SocialRelationship), 5, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let w = random_window(&mut rng, 4, 20);
    let r = rollout(&p, &w, RolloutMode::Free).unwrap();
    for k in 0..4 {
        assert_eq!(r.anchors[k], w.frames[7][k]);
        assert_eq!(
            r.predicted_abs[k],
            crate::model::nabs_decode(&r.predicted_nabs[k], r.anchors[k])
        );
        assert_eq!(r.predicted_nabs[k].len(), 12);
    }
    assert_eq!(r.attention_trace.len(), 19);
    for step in &r.attention_trace {
        for (i, row) in step.weights.iter().enumerate() {
            assert_eq!(row[i], 0.0);
            assert!(row.iter().all(|&a| a >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn future_truth_is_never_consumed() {
    let p = random_params(small(AttentionStrategy::SocialRelationship), 6, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = random_window(&mut rng, 3, 20);
    let mut altered = w.clone();
    for frame in &mut altered.frames[8..] {
        for p in frame.iter_mut() {
            p[0] += 100.0;
        }
    }
    let a = rollout(&p, &w, RolloutMode::Free).unwrap();
    let b = rollout(&p, &altered, RolloutMode::Free).unwrap();
    assert_eq!(a.predicted_nabs, b.predicted_nabs);
    let c = rollout(&p, &altered, RolloutMode::TeacherForced).unwrap();
    assert_eq!(c.predicted_nabs[0][0], a.predicted_nabs[0][0]);
    assert_ne!(c.predicted_nabs[0][1], a.predicted_nabs[0][1]);
}

#[test]
fn rollout_errors() {
    let p = ModelParams::init(small(AttentionStrategy::SocialRelationship), 0).unwrap();
    let mut w = constant_velocity(2, 20);
    w.frames.pop();
    assert_eq!(
        rollout(&p, &w, RolloutMode::Free),
        Err(PipelineError::WindowLength {
            expected: 20,
            found: 19
        })
    );
    let empty = TrajectoryWindow {
        scene: String::from("e"),
        start_frame: 0,
        ped_ids: vec![],
        frames: vec![vec![]; 20],
    };
    assert_eq!(
        rollout(&p, &empty, RolloutMode::Free),
        Err(PipelineError::EmptyWindow)
    );
}

#[test]
fn non_finite_reports_step() {
    let mut p = ModelParams::zeros(small(AttentionStrategy::None)).unwrap();
    // output bias drives the fed-back positions out of range after a few
    // future steps
    p.output.bias = Tensor::new(vec![1, 2], vec![1e307, 0.0]).unwrap();
    p.pos_embed
        .weight
        .values_mut()
        .iter_mut()
        .for_each(|v| *v = 100.0);
    let w = constant_velocity(1, 20);
    match rollout(&p, &w, RolloutMode::Free) {
        Err(PipelineError::Step { step, .. }) => assert!(step > 8, "step {step}"),
        other => panic!("expected step error, got {other:?}"),
    }
}

#[test]
fn l2_loss_cases() {
    let truth = vec![vec![[1.0, 2.0], [3.0, 4.0]], vec![[0.0, 0.0], [-1.0, 1.0]]];
    assert_eq!(l2_loss(&truth, &truth).unwrap(), 0.0);
    let shifted: Vec<Vec<Point>> = truth
        .iter()
        .map(|t| t.iter().map(|p| [p[0] + 1.0, p[1]]).collect())
        .collect();
    assert_eq!(l2_loss(&shifted, &truth).unwrap(), 1.0);
    assert!(matches!(
        l2_loss(&truth[..1], &truth),
        Err(PipelineError::LengthMismatch { .. })
    ));
    assert!(matches!(
        l2_loss(&[vec![[0.0, 0.0]]], &[vec![[0.0, 0.0]; 2]]),
        Err(PipelineError::LengthMismatch { .. })
    ));
}

#[test]
fn l2_loss_matches_accumulation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let gen = |rng: &mut ChaCha8Rng| -> Vec<Vec<Point>> {
        (0..3)
            .map(|_| {
                (0..12)
                    .map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
                    .collect()
            })
            .collect()
    };
    let (a, b) = (gen(&mut rng), gen(&mut rng));
    // per-coordinate squares summed step by step, then divided once
    let mut acc = 0.0;
    for t in 0..12 {
        for k in 0..3 {
            acc += (a[k][t][0] - b[k][t][0]).powi(2);
            acc += (a[k][t][1] - b[k][t][1]).powi(2);
        }
    }
    let oracle = acc / 36.0;
    assert!((l2_loss(&a, &b).unwrap() - oracle).abs() < 1e-12);

    let mut tape = Tape::new();
    let preds: Vec<_> = (0..12)
        .map(|t| {
            let rows = a.iter().flat_map(|tr| tr[t]).collect();
            tape.constant_from(vec![3, 2], rows).unwrap()
        })
        .collect();
    let loss = l2_loss_graph(&mut tape, &preds, &b).unwrap();
    assert!((tape.value(loss)[0] - oracle).abs() < 1e-12);
}

#[test]
fn graph_loss_equals_value_loss() {
    let mut p = random_params(small(AttentionStrategy::Relative), 12, 0.4);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let w = random_window(&mut rng, 3, 20);
    let r = rollout(&p, &w, RolloutMode::Free).unwrap();
    let value = l2_loss(&r.predicted_nabs, &prediction_targets(&w, 8)).unwrap();
    let graph = loss_and_grads(&mut p, &w).unwrap();
    assert!((value - graph).abs() <= 1e-12 * value.abs());
}

fn loss_at(p: &ModelParams, w: &TrajectoryWindow) -> f64 {
    let r = rollout(p, w, RolloutMode::Free).unwrap();
    l2_loss(
        &r.predicted_nabs,
        &prediction_targets(w, p.config().obs_len),
    )
    .unwrap()
}

#[test]
fn full_rollout_gradient_check() {
    for strategy in AttentionStrategy::ALL {
        let mut p = random_params(small(strategy), 21, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let w = random_window(&mut rng, 3, 20);
        loss_and_grads(&mut p, &w).unwrap();
        let mut grads = Vec::new();
        p.visit(&mut |_, t| grads.extend_from_slice(t.grad().unwrap()));
        let mut flat_index = 0;
        let mut worst: f64 = 0.0;
        let probe = p.clone();
        let mut k = 0;
        probe.visit(&mut |name, t| {
            for i in 0..t.len() {
                if k % 3 == 0 {
                    let h = 1e-4;
                    let perturb = |delta: f64| {
                        let mut q = probe.clone();
                        q.visit_mut(&mut |n, u| {
                            if n == name {
                                u.values_mut()[i] += delta;
                            }
                        });
                        loss_at(&q, &w)
                    };
                    // five-point stencil keeps truncation and roundoff both
                    // well below the tolerance
                    let fd = (8.0 * (perturb(h) - perturb(-h))
                        - (perturb(2.0 * h) - perturb(-2.0 * h)))
                        / (12.0 * h);
                    let an = grads[flat_index + i];
                    let err = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-6);
                    worst = worst.max(err);
                }
                k += 1;
            }
            flat_index += t.len();
        });
        assert!(worst < 1e-3, "{strategy}: relative error {worst}");
    }
}

fn trainer(strategy: AttentionStrategy, lr: f64, augment: bool) -> Trainer {
    Trainer::new(
        small(strategy),
        TrainConfig {
            learning_rate: lr,
            epochs: 3,
            seed: 5,
            augment,
            ..TrainConfig::default()
        },
    )
    .unwrap()
}

#[test]
fn stationary_window_overfits() {
    let tracks = vec![
        vec![[1.0, 2.0]; 20],
        vec![[3.0, -1.0]; 20],
        vec![[0.0, 0.5]; 20],
    ];
    let w = window_from(&tracks);
    let mut t = Trainer::new(
        ModelConfig::default(),
        TrainConfig {
            learning_rate: 1e-2,
            seed: 1,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    let mut last = f64::INFINITY;
    for _ in 0..200 {
        last = t.run_epoch(core::slice::from_ref(&w)).unwrap().mean_loss;
    }
    assert!(loss_at(&t.params, &w) < 1e-3, "final loss {last}");
}

#[test]
fn zero_learning_rate_leaves_params_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let windows: Vec<_> = (0..3).map(|_| random_window(&mut rng, 2, 20)).collect();
    let mut t = trainer(AttentionStrategy::SocialRelationship, 0.0, true);
    let before = t.params.clone();
    t.run_epoch(&windows).unwrap();
    let mut same = true;
    let mut a = Vec::new();
    before.visit(&mut |_, x| a.extend(x.values().iter().map(|v| v.to_bits())));
    let mut b = Vec::new();
    t.params
        .visit(&mut |_, x| b.extend(x.values().iter().map(|v| v.to_bits())));
    same &= a == b;
    assert!(same);
    assert_eq!(t.adam.step_count(), 3);
}

#[test]
fn seeded_training_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let windows: Vec<_> = (0..4).map(|_| random_window(&mut rng, 3, 20)).collect();
    let run = || {
        let mut t = trainer(AttentionStrategy::SocialRelationship, 1e-2, true);
        t.fit(&windows, |_, _| {}).unwrap();
        (t.history().to_vec(), t.params)
    };
    let (h1, p1) = run();
    let (h2, p2) = run();
    assert_eq!(h1.len(), 3);
    assert_eq!(
        h1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        h2.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    assert_eq!(p1, p2);
    let mut other = trainer(AttentionStrategy::SocialRelationship, 1e-2, true);
    other.config.seed = 6;
    other.fit(&windows, |_, _| {}).unwrap();
    assert_ne!(other.history(), h1.as_slice());
}

#[test]
fn empty_dataset_and_window_errors() {
    let mut t = trainer(AttentionStrategy::None, 1e-3, false);
    assert_eq!(t.run_epoch(&[]), Err(PipelineError::EmptyDataset));
    let mut bad = constant_velocity(2, 20);
    bad.frames.truncate(10);
    bad.start_frame = 42;
    match t.run_epoch(&[bad]) {
        Err(PipelineError::Window {
            start_frame: 42, ..
        }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn epoch_seeds_differ() {
    let seeds: Vec<u64> = (0..50).map(|e| epoch_seed(7, e)).collect();
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(sorted.len(), 50);
    assert_ne!(epoch_seed(7, 0), epoch_seed(8, 0));
}

#[test]
fn adam_default_matches_train_config() {
    let t = trainer(AttentionStrategy::None, 1e-3, false);
    assert_eq!(t.adam.config, AdamConfig::with_learning_rate(1e-3));
    let _ = Adam::new(AdamConfig::default());
}
