use mlatc::audit::{check_ancestor_bounds, check_map, check_winner_sets};
use mlatc::complexity::space_bound;
use mlatc::hierarchy::hierarchical_nns;
use mlatc::learner::{sample_indices, seeded_rng};
use mlatc::streams::{synthetic_frame, SyntheticStreamConfig};
use mlatc::{FlatLearner, InputPoint, Learner, LearnerConfig, MlatcLearner, StepKind};

fn small_stream(seed: u64) -> SyntheticStreamConfig {
    SyntheticStreamConfig {
        points_per_frame: 1500,
        seed,
        ..Default::default()
    }
}

#[test]
fn every_iteration_keeps_the_map_consistent() {
    let config = LearnerConfig {
        lambda: 1500,
        rng_seed: 5,
        ..Default::default()
    };
    let mut learner = MlatcLearner::new(config).unwrap();
    let mut rng = seeded_rng(99);
    for f in 0..4 {
        let frame = synthetic_frame(&small_stream(5), f).unwrap();
        for i in sample_indices(frame.points.len(), config.lambda, &mut rng).unwrap() {
            let p = &frame.points[i];
            // Check the search the learner is about to make on the current map.
            let before = hierarchical_nns(&p.position, learner.map());
            check_winner_sets(&p.position, &before, learner.map(), learner.thresholds()).unwrap();
            learner.train_point(p).unwrap();
            assert_eq!(learner.last_winner_sets(), &before);
            check_map(learner.map()).unwrap();
        }
    }
    assert!(learner.map().layer_count() >= 3);
}

#[test]
fn every_frame_keeps_the_map_consistent() {
    for (alpha, updates) in [(4.0, true), (2.0, true), (3.0, false)] {
        let config = LearnerConfig {
            alpha,
            updates_enabled: updates,
            rng_seed: 8,
            ..Default::default()
        };
        let mut learner = MlatcLearner::new(config).unwrap();
        let mut last_l = 1;
        for f in 0..10 {
            let frame = synthetic_frame(
                &SyntheticStreamConfig {
                    seed: 8,
                    ..Default::default()
                },
                f,
            )
            .unwrap();
            let m = learner.train_frame(&frame.points).unwrap();
            check_map(learner.map()).unwrap();
            assert!(m.layer_count >= last_l, "layer count decreased");
            assert!(m.nodes_per_layer.iter().all(|&n| n > 0));
            assert!(m.distance_evals >= config.lambda as u64);
            last_l = m.layer_count;
            if !updates {
                check_ancestor_bounds(learner.map()).unwrap();
            }
        }
    }
}

#[test]
fn insertion_only_layers_stay_separated() {
    let config = LearnerConfig {
        updates_enabled: false,
        rng_seed: 2,
        ..Default::default()
    };
    let mut learner = MlatcLearner::new(config).unwrap();
    for f in 0..3 {
        let frame = synthetic_frame(&small_stream(2), f).unwrap();
        learner.train_frame(&frame.points).unwrap();
    }
    for layer in learner.map().layers() {
        let nodes = layer.nodes();
        for (i, a) in nodes.iter().enumerate() {
            for b in &nodes[i + 1..] {
                let d = mlatc::geom::distance(&a.position, &b.position);
                assert!(
                    d > layer.vigilance(),
                    "layer {} nodes {} {} at {d}",
                    layer.level(),
                    a.id,
                    b.id
                );
            }
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let run = || {
        let config = LearnerConfig {
            rng_seed: 21,
            ..Default::default()
        };
        let mut learner = MlatcLearner::new(config).unwrap();
        let mut counters = Vec::new();
        for f in 0..5 {
            let frame = synthetic_frame(
                &SyntheticStreamConfig {
                    seed: 21,
                    ..Default::default()
                },
                f,
            )
            .unwrap();
            let m = learner.train_frame(&frame.points).unwrap();
            counters.push((m.distance_evals, m.nodes_per_layer, m.edges_per_layer));
        }
        let positions: Vec<_> = learner
            .map()
            .layers()
            .iter()
            .flat_map(|l| {
                l.nodes()
                    .iter()
                    .map(|n| (n.position, n.parent, n.win_count))
            })
            .collect();
        let edges: Vec<_> = learner
            .map()
            .layers()
            .iter()
            .flat_map(|l| {
                l.edges()
                    .map(|e| (l.level(), e.a, e.b, e.age))
                    .collect::<Vec<_>>()
            })
            .collect();
        (counters, positions, edges)
    };
    assert_eq!(run(), run());
}

#[test]
fn flat_evals_count_the_layer_at_each_step() {
    let config = LearnerConfig {
        rng_seed: 4,
        lambda: 4000,
        ..Default::default()
    };
    let mut flat = FlatLearner::new(config).unwrap();
    let frame = synthetic_frame(
        &SyntheticStreamConfig {
            seed: 4,
            ..Default::default()
        },
        0,
    )
    .unwrap();
    // Replay the same draws by hand to obtain the expected count.
    let mut replay = FlatLearner::new(config).unwrap();
    let picks = sample_indices(
        frame.points.len(),
        config.lambda,
        &mut seeded_rng(config.rng_seed),
    )
    .unwrap();
    let mut expected = 0u64;
    for &i in &picks {
        expected += replay.map().base().len() as u64;
        replay.train_point(&frame.points[i]).unwrap();
    }
    let m = flat.train_frame(&frame.points).unwrap();
    assert_eq!(m.distance_evals, expected);
    assert_eq!(m.nodes_per_layer, replay.map().nodes_per_layer());
}

#[test]
fn single_draw_frames_create_one_node() {
    let config = LearnerConfig {
        lambda: 1,
        ..Default::default()
    };
    let frame = [InputPoint::at([3.0, 4.0, 0.0])];
    let mut flat = FlatLearner::new(config).unwrap();
    flat.train_frame(&frame).unwrap();
    assert_eq!(flat.map().total_nodes(), 1);
    let mut hier = MlatcLearner::new(config).unwrap();
    hier.train_frame(&frame).unwrap();
    assert_eq!(hier.map().nodes_per_layer(), vec![1]);
    assert!(hier.train_frame(&[]).is_err());
}

/// The geometric-series storage bound assumes every layer is packed to the
/// same density. Sparse early frames overshoot it, so it is checked once the
/// base layer has had ten frames to fill in, with 5% slack for the narrow
/// window whose coarse layers are closer to one-dimensional.
#[test]
fn saturated_runs_stay_near_the_space_bound() {
    for alpha in [1.5, 2.0, 4.0, 8.0] {
        let config = LearnerConfig {
            alpha,
            rng_seed: 6,
            ..Default::default()
        };
        let mut learner = MlatcLearner::new(config).unwrap();
        for f in 0..16 {
            let frame = synthetic_frame(
                &SyntheticStreamConfig {
                    seed: 6,
                    ..Default::default()
                },
                f,
            )
            .unwrap();
            learner.train_frame(&frame.points).unwrap();
            if f < 10 {
                continue;
            }
            let n = learner.map().base().len() as u64;
            let total = learner.map().total_nodes() as f64;
            let bound = space_bound(n, alpha).unwrap();
            assert!(
                total <= 1.05 * bound,
                "alpha {alpha} frame {f}: {total} vs bound {bound}"
            );
        }
    }
}

#[test]
fn decision_trichotomy_matches_vigilance() {
    let config = LearnerConfig {
        rng_seed: 12,
        ..Default::default()
    };
    let mut learner = FlatLearner::new(config).unwrap();
    let frame = synthetic_frame(&small_stream(12), 0).unwrap();
    for p in frame.points.iter().cycle().take(6000) {
        let mut evals = 0;
        let w = mlatc::flat::exhaustive_winners(&p.position, learner.map().base(), &mut evals);
        let out = learner.train_step(p).unwrap();
        assert_eq!(out.kind.is_new_node(), w.d1 > config.base_vigilance);
        if out.kind == StepKind::UpdatedWithEdge {
            assert!(w.d2 <= config.base_vigilance);
        }
    }
}
