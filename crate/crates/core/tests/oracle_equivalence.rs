//! Lockstep comparison of the hierarchical learner against the exhaustive
//! baseline when nodes never move.

use mlatc::learner::{sample_indices, seeded_rng};
use mlatc::streams::{synthetic_frame, SyntheticStreamConfig};
use mlatc::{FlatLearner, InputPoint, LearnerConfig, MlatcLearner, StepKind, StepOutcome};

fn same_decision(a: &StepOutcome, b: &StepOutcome) -> bool {
    match (a.kind, b.kind) {
        (StepKind::NewNode(x), StepKind::NewNode(y)) => x == y,
        (StepKind::Updated, StepKind::Updated) => a.winners.s1 == b.winners.s1,
        (StepKind::UpdatedWithEdge, StepKind::UpdatedWithEdge) => {
            a.winners.s1 == b.winners.s1 && a.winners.s2 == b.winners.s2
        }
        _ => false,
    }
}

fn lockstep(
    config: LearnerConfig,
    stream: &SyntheticStreamConfig,
    frames: usize,
) -> (u64, u64, FlatLearner, MlatcLearner) {
    let mut flat = FlatLearner::new(config).unwrap();
    let mut hier = MlatcLearner::new(config).unwrap();
    let mut rng = seeded_rng(config.rng_seed);
    let (mut steps, mut mismatches) = (0u64, 0u64);
    for f in 0..frames {
        let frame = synthetic_frame(stream, f).unwrap();
        for i in sample_indices(frame.points.len(), config.lambda, &mut rng).unwrap() {
            let p: &InputPoint = &frame.points[i];
            let a = flat.train_point(p).unwrap();
            let b = hier.train_point(p).unwrap()[0];
            steps += 1;
            if !same_decision(&a, &b) {
                mismatches += 1;
            }
        }
    }
    (steps, mismatches, flat, hier)
}

#[test]
fn insertion_only_decisions_match_for_100k_steps() {
    let config = LearnerConfig {
        updates_enabled: false,
        rng_seed: 11,
        ..Default::default()
    };
    let stream = SyntheticStreamConfig {
        seed: 11,
        ..Default::default()
    };
    let (steps, mismatches, flat, hier) = lockstep(config, &stream, 25);
    assert!(steps >= 100_000);
    assert_eq!(mismatches, 0, "{mismatches} of {steps} steps differ");

    // Identical decisions must leave identical base layers behind.
    let (a, b) = (flat.map().base(), hier.map().base());
    assert_eq!(a.len(), b.len());
    for (x, y) in a.nodes().iter().zip(b.nodes()) {
        assert_eq!(x.position, y.position);
        assert_eq!(x.win_count, y.win_count);
    }
    let ea: Vec<_> = a.edges().map(|e| (e.a, e.b, e.age)).collect();
    let mut eb: Vec<_> = b.edges().map(|e| (e.a, e.b, e.age)).collect();
    let mut ea_sorted = ea.clone();
    ea_sorted.sort();
    eb.sort();
    assert_eq!(ea_sorted, eb);
}

#[test]
fn insertion_only_matches_at_other_scaling_factors() {
    for alpha in [1.5, 2.0, 7.0] {
        let config = LearnerConfig {
            updates_enabled: false,
            alpha,
            lambda: 2000,
            rng_seed: 3,
            ..Default::default()
        };
        let stream = SyntheticStreamConfig {
            seed: 3,
            points_per_frame: 2000,
            ..Default::default()
        };
        let (_, mismatches, _, _) = lockstep(config, &stream, 5);
        assert_eq!(mismatches, 0, "alpha {alpha}");
    }
}

#[test]
fn single_point_stream_trivially_matches() {
    let config = LearnerConfig {
        updates_enabled: false,
        lambda: 500,
        ..Default::default()
    };
    let stream = SyntheticStreamConfig {
        points_per_frame: 1,
        ..Default::default()
    };
    let (steps, mismatches, _, hier) = lockstep(config, &stream, 1);
    assert_eq!((steps, mismatches), (500, 0));
    assert_eq!(hier.map().total_nodes(), 1);
}
