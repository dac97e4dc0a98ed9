//! Runs a learner over a frame stream and records per-frame metrics.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use mlatc::learner::seeded_rng;
use mlatc::streams::{
    list_frame_files, load_frame_file, synthetic_frame, Frame, StreamError, SyntheticStreamConfig,
};
use mlatc::{
    FlatLearner, FrameMetrics, InputPoint, Learner, LearnerConfig, MapError, MlatcLearner,
    MultiLayerMap, StepKind, StepOutcome, WinnerPair,
};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::oracle::{Lockstep, OracleReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Flat,
    Mlatc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Synthetic(SyntheticStreamConfig),
    Directory(PathBuf),
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "synthetic" {
            Ok(Source::Synthetic(SyntheticStreamConfig::default()))
        } else if let Some(path) = s.strip_prefix("dir:").filter(|p| !p.is_empty()) {
            Ok(Source::Directory(PathBuf::from(path)))
        } else {
            Err(format!("expected 'synthetic' or 'dir:<path>', got {s:?}"))
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Synthetic(_) => write!(f, "synthetic"),
            Source::Directory(p) => write!(f, "dir:{}", p.display()),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub source: Source,
    pub learner: LearnerConfig,
    /// Frames to process. Directory sources stop early when they run out.
    pub frames: usize,
    /// Stop after the first frame that brings layer 1 to this many nodes.
    pub until_nodes: Option<usize>,
    /// Run the exhaustive baseline alongside (hierarchical mode only).
    pub oracle_check: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Mlatc,
            source: Source::Synthetic(SyntheticStreamConfig::default()),
            learner: LearnerConfig::default(),
            frames: 22,
            until_nodes: None,
            oracle_check: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub metrics: Vec<FrameMetrics>,
    pub map: MultiLayerMap,
    pub oracle: Option<OracleReport>,
    /// Input normals that were not unit length, summed over all frames.
    pub renormalized_normals: usize,
}

enum Engine {
    Flat(FlatLearner),
    Mlatc(MlatcLearner),
    Lockstep(Box<Lockstep>),
}

impl Engine {
    fn train_frame(&mut self, points: &[InputPoint]) -> Result<FrameMetrics, MapError> {
        match self {
            Engine::Flat(l) => l.train_frame(points),
            Engine::Mlatc(l) => l.train_frame(points),
            Engine::Lockstep(l) => l.train_frame(points),
        }
    }

    fn finish(self) -> (MultiLayerMap, Option<OracleReport>) {
        match self {
            Engine::Flat(l) => (l.into_map(), None),
            Engine::Mlatc(l) => (l.into_map(), None),
            Engine::Lockstep(l) => {
                let (hier, _, report) = l.into_parts();
                (hier.into_map(), Some(report))
            }
        }
    }
}

enum Frames {
    Synthetic(SyntheticStreamConfig),
    Files(Vec<PathBuf>),
}

impl Frames {
    fn open(source: &Source) -> Result<Self, RunError> {
        Ok(match source {
            Source::Synthetic(cfg) => {
                cfg.validate()?;
                Frames::Synthetic(*cfg)
            }
            Source::Directory(dir) => Frames::Files(list_frame_files(dir)?),
        })
    }

    fn get(&self, index: usize) -> Option<Result<Frame, StreamError>> {
        match self {
            Frames::Synthetic(cfg) => Some(synthetic_frame(cfg, index)),
            Frames::Files(files) => files.get(index).map(|p| load_frame_file(p, index)),
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    run_with(cfg, |_| {})
}

/// Like [`run`], calling `on_frame` after each frame.
pub fn run_with(
    cfg: &RunConfig,
    mut on_frame: impl FnMut(&FrameMetrics),
) -> Result<RunOutput, RunError> {
    cfg.learner.validate()?;
    let mut engine = match (cfg.mode, cfg.oracle_check) {
        (Mode::Flat, true) => {
            return Err(RunError::Invalid(
                "the oracle check runs the hierarchical learner; use mode mlatc".into(),
            ))
        }
        (Mode::Flat, false) => Engine::Flat(FlatLearner::new(cfg.learner)?),
        (Mode::Mlatc, false) => Engine::Mlatc(MlatcLearner::new(cfg.learner)?),
        (Mode::Mlatc, true) => Engine::Lockstep(Box::new(Lockstep::new(cfg.learner)?)),
    };
    let frames = Frames::open(&cfg.source)?;

    let mut metrics = Vec::with_capacity(cfg.frames.min(1 << 16));
    let mut renormalized_normals = 0;
    for index in 0..cfg.frames {
        let Some(frame) = frames.get(index) else {
            break;
        };
        let frame = frame?;
        renormalized_normals += frame.renormalized_normals;
        let mut m = engine.train_frame(&frame.points)?;
        m.frame_index = index as u64;
        on_frame(&m);
        let done = cfg.until_nodes.is_some_and(|n| m.base_nodes() >= n);
        metrics.push(m);
        if done {
            break;
        }
    }
    let (map, oracle) = engine.finish();
    Ok(RunOutput {
        metrics,
        map,
        oracle,
        renormalized_normals,
    })
}

/// Lockstep run on the synthetic stream; returns the mismatch report.
pub fn oracle_check(
    stream: SyntheticStreamConfig,
    learner: LearnerConfig,
    frames: usize,
) -> Result<OracleReport, RunError> {
    let cfg = RunConfig {
        mode: Mode::Mlatc,
        source: Source::Synthetic(stream),
        learner,
        frames,
        until_nodes: None,
        oracle_check: true,
    };
    Ok(run(&cfg)?.oracle.expect("lockstep run"))
}

/// A learner that does nothing, for measuring the harness overhead inside
/// the timed span.
#[derive(Clone, Debug)]
pub struct NullLearner {
    map: MultiLayerMap,
    rng: ChaCha8Rng,
}

impl NullLearner {
    pub fn new(config: LearnerConfig) -> Result<Self, MapError> {
        Ok(NullLearner {
            map: MultiLayerMap::new(config)?,
            rng: seeded_rng(config.rng_seed),
        })
    }
}

impl Learner for NullLearner {
    fn train_step(&mut self, _p: &InputPoint) -> Result<StepOutcome, MapError> {
        Ok(StepOutcome {
            kind: StepKind::Updated,
            winners: WinnerPair::NONE,
            distance_evals: 0,
            edges_removed: 0,
        })
    }

    fn map(&self) -> &MultiLayerMap {
        &self.map
    }

    fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn distance_evals(&self) -> u64 {
        0
    }
}
