//! Lockstep comparison of the hierarchical learner with the exhaustive
//! baseline on an identical sample sequence.

use std::time::Instant;

use mlatc::flat::exhaustive_winners;
use mlatc::learner::{sample_indices, seeded_rng};
use mlatc::{
    FlatLearner, FrameMetrics, InputPoint, LearnerConfig, MapError, MlatcLearner, StepKind,
    StepOutcome,
};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Counts accumulated by a lockstep run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct OracleReport {
    pub steps: u64,
    /// Steps whose layer-1 decision differs from the baseline's.
    pub mismatches: u64,
    /// Steps where some layer-1 node of the hierarchical map lay within the
    /// vigilance radius of the query.
    pub drift_checked: u64,
    /// Of those, steps where the hierarchical search picked a different first
    /// winner than an exhaustive scan of its own layer 1.
    pub drift_misses: u64,
}

impl OracleReport {
    pub fn mismatch_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.mismatches as f64 / self.steps as f64
        }
    }

    pub fn drift_rate(&self) -> f64 {
        if self.drift_checked == 0 {
            0.0
        } else {
            self.drift_misses as f64 / self.drift_checked as f64
        }
    }
}

/// Decision equality on layer 1: the step kind always, the first winner for
/// updates and the second winner when an edge was made.
pub fn same_decision(a: &StepOutcome, b: &StepOutcome) -> bool {
    match (a.kind, b.kind) {
        (StepKind::NewNode(x), StepKind::NewNode(y)) => x == y,
        (StepKind::Updated, StepKind::Updated) => a.winners.s1 == b.winners.s1,
        (StepKind::UpdatedWithEdge, StepKind::UpdatedWithEdge) => {
            a.winners.s1 == b.winners.s1 && a.winners.s2 == b.winners.s2
        }
        _ => false,
    }
}

/// Hierarchical learner driven alongside a baseline copy.
#[derive(Clone, Debug)]
pub struct Lockstep {
    hier: MlatcLearner,
    flat: FlatLearner,
    rng: ChaCha8Rng,
    report: OracleReport,
}

impl Lockstep {
    pub fn new(config: LearnerConfig) -> Result<Self, MapError> {
        Ok(Lockstep {
            hier: MlatcLearner::new(config)?,
            flat: FlatLearner::new(config)?,
            rng: seeded_rng(config.rng_seed),
            report: OracleReport::default(),
        })
    }

    pub fn hierarchical(&self) -> &MlatcLearner {
        &self.hier
    }

    pub fn baseline(&self) -> &FlatLearner {
        &self.flat
    }

    pub fn report(&self) -> &OracleReport {
        &self.report
    }

    pub fn into_parts(self) -> (MlatcLearner, FlatLearner, OracleReport) {
        (self.hier, self.flat, self.report)
    }

    /// One step on both learners. Returns whether the decisions agree.
    pub fn step(&mut self, p: &InputPoint) -> Result<bool, MapError> {
        self.timed_step(p).map(|(same, _)| same)
    }

    fn timed_step(&mut self, p: &InputPoint) -> Result<(bool, f64), MapError> {
        let mut scratch = 0;
        let exhaustive = exhaustive_winners(&p.position, self.hier.map().base(), &mut scratch);
        let start = Instant::now();
        let hier = self.hier.train_point(p)?[0];
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let flat = self.flat.train_point(p)?;

        self.report.steps += 1;
        let same = same_decision(&hier, &flat);
        if !same {
            self.report.mismatches += 1;
        }
        if exhaustive.d1 <= self.hier.map().base().vigilance() {
            self.report.drift_checked += 1;
            let picked = match hier.kind {
                StepKind::NewNode(_) => None,
                _ => hier.winners.s1,
            };
            if picked != exhaustive.s1 {
                self.report.drift_misses += 1;
            }
        }
        Ok((same, ms))
    }

    /// Trains both learners on `lambda` draws from `frame`. The timed span
    /// covers only the hierarchical learner's steps.
    pub fn train_frame(&mut self, frame: &[InputPoint]) -> Result<FrameMetrics, MapError> {
        let lambda = self.hier.map().config().lambda;
        let picks = sample_indices(frame.len(), lambda, &mut self.rng)?;
        let evals_before = mlatc::Learner::distance_evals(&self.hier);
        let mismatches_before = self.report.mismatches;
        let mut wall_ms = 0.0;
        for &i in &picks {
            wall_ms += self.timed_step(&frame[i])?.1;
        }
        let map = self.hier.map();
        Ok(FrameMetrics {
            frame_index: 0,
            wall_time_ms: wall_ms,
            distance_evals: mlatc::Learner::distance_evals(&self.hier) - evals_before,
            nodes_per_layer: map.nodes_per_layer(),
            edges_per_layer: map.edges_per_layer(),
            layer_count: map.layer_count(),
            oracle_mismatches: Some(self.report.mismatches - mismatches_before),
        })
    }
}
