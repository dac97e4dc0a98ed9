//! Point-cloud frame sources: the moving-window synthetic generator and
//! loaders for registered world-frame files.
//!
//! Text files hold one point per line, `x y z [nx ny nz [t]]`, separated by
//! whitespace. Blank lines and lines starting with `#` are skipped. `t` is
//! the traversability flag, `0` or `1`. ASCII polygon files (`.ply`) are read
//! from their `vertex` element, taking `x y z` and `nx ny nz` when declared.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::MapError;
use crate::flat::InputPoint;
use crate::geom::{norm, normalized, Vec3};
use crate::learner::sample_indices;

/// Normals whose length differs from 1 by more than this are renormalized.
pub const NORMAL_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid stream config: {0}")]
    Config(String),
    #[error("cannot write point {index}: traversability without a normal")]
    Unwritable { index: usize },
}

impl StreamError {
    fn io(path: &Path, source: io::Error) -> Self {
        StreamError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        StreamError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }
}

/// One frame of input points.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub points: Vec<InputPoint>,
    pub frame_index: usize,
    /// Lower corner of the sampling window, synthetic frames only.
    pub window_origin: Option<[f64; 2]>,
    /// Normals rescaled to unit length while loading.
    pub renormalized_normals: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticStreamConfig {
    pub square_size: f64,
    pub translation_per_frame: f64,
    pub points_per_frame: usize,
    pub direction: [f64; 2],
    pub z_value: f64,
    pub seed: u64,
}

impl Default for SyntheticStreamConfig {
    fn default() -> Self {
        SyntheticStreamConfig {
            square_size: 20.0,
            translation_per_frame: 10.0,
            points_per_frame: 4000,
            direction: [1.0, 0.0],
            z_value: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticStreamConfig {
    pub fn validate(&self) -> Result<(), StreamError> {
        if !(self.square_size > 0.0 && self.square_size.is_finite()) {
            return Err(StreamError::Config(format!(
                "square_size = {}",
                self.square_size
            )));
        }
        if !(self.translation_per_frame >= 0.0 && self.translation_per_frame.is_finite()) {
            return Err(StreamError::Config(format!(
                "translation_per_frame = {}",
                self.translation_per_frame
            )));
        }
        if self.points_per_frame == 0 {
            return Err(StreamError::Config("points_per_frame = 0".into()));
        }
        let len = self.direction[0].hypot(self.direction[1]);
        if (len - 1.0).abs() > 1e-9 {
            return Err(StreamError::Config(format!(
                "direction {:?} is not unit length",
                self.direction
            )));
        }
        if !self.z_value.is_finite() {
            return Err(StreamError::Config(format!("z_value = {}", self.z_value)));
        }
        Ok(())
    }

    /// Lower corner of the window for frame `index`.
    pub fn origin(&self, index: usize) -> [f64; 2] {
        let shift = index as f64 * self.translation_per_frame;
        [shift * self.direction[0], shift * self.direction[1]]
    }
}

/// Generates frame `index`. The result depends only on `(cfg, index)`.
pub fn synthetic_frame(cfg: &SyntheticStreamConfig, index: usize) -> Result<Frame, StreamError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let o = cfg.origin(index);
    let s = cfg.square_size;
    let points = (0..cfg.points_per_frame)
        .map(|_| {
            let x = o[0] + rng.random::<f64>() * s;
            let y = o[1] + rng.random::<f64>() * s;
            InputPoint::at([x, y, cfg.z_value])
        })
        .collect();
    Ok(Frame {
        points,
        frame_index: index,
        window_origin: Some(o),
        renormalized_normals: 0,
    })
}

/// `lambda` draws with replacement from the frame, in draw order.
pub fn sample_training_points(
    frame: &Frame,
    lambda: usize,
    rng: &mut impl Rng,
) -> Result<Vec<InputPoint>, MapError> {
    let picks = sample_indices(frame.points.len(), lambda, rng)?;
    Ok(picks.into_iter().map(|i| frame.points[i]).collect())
}

fn parse_f64(path: &Path, line: usize, tok: &str) -> Result<f64, StreamError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| StreamError::parse(path, line, format!("not a number: {tok:?}")))?;
    if !v.is_finite() {
        return Err(StreamError::parse(
            path,
            line,
            format!("non-finite value {tok:?}"),
        ));
    }
    Ok(v)
}

fn checked_normal(
    path: &Path,
    line: usize,
    n: Vec3,
    renormalized: &mut usize,
) -> Result<Vec3, StreamError> {
    if (norm(&n) - 1.0).abs() <= NORMAL_TOLERANCE {
        return Ok(n);
    }
    let unit =
        normalized(&n).ok_or_else(|| StreamError::parse(path, line, "zero-length normal"))?;
    *renormalized += 1;
    Ok(unit)
}

fn parse_text(path: &Path, text: &str) -> Result<(Vec<InputPoint>, usize), StreamError> {
    let mut points = Vec::new();
    let mut renormalized = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if !matches!(toks.len(), 3 | 6 | 7) {
            return Err(StreamError::parse(
                path,
                line,
                format!("expected 3, 6 or 7 columns, found {}", toks.len()),
            ));
        }
        let mut vals = [0.0; 6];
        for (v, tok) in vals.iter_mut().zip(&toks) {
            *v = parse_f64(path, line, tok)?;
        }
        let mut p = InputPoint::at([vals[0], vals[1], vals[2]]);
        if toks.len() >= 6 {
            p.normal = Some(checked_normal(
                path,
                line,
                [vals[3], vals[4], vals[5]],
                &mut renormalized,
            )?);
        }
        if toks.len() == 7 {
            p.traversability = Some(match toks[6] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(StreamError::parse(
                        path,
                        line,
                        format!("traversability must be 0 or 1, found {other:?}"),
                    ))
                }
            });
        }
        points.push(p);
    }
    Ok((points, renormalized))
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
}

fn parse_ply(path: &Path, text: &str) -> Result<(Vec<InputPoint>, usize), StreamError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(StreamError::parse(path, 1, "missing 'ply' magic")),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut header_done = false;
    for (line, l) in lines.by_ref() {
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "ascii", _] => {}
            ["format", other, ..] => {
                return Err(StreamError::parse(
                    path,
                    line,
                    format!("unsupported format {other:?}, only ascii is read"),
                ))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count.parse().map_err(|_| {
                    StreamError::parse(path, line, format!("bad element count {count:?}"))
                })?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", ..] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| StreamError::parse(path, line, "property before element"))?;
                if el.name == "vertex" {
                    return Err(StreamError::parse(
                        path,
                        line,
                        "list properties on vertices are not supported",
                    ));
                }
                el.properties.push(String::new());
            }
            ["property", _ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| StreamError::parse(path, line, "property before element"))?;
                el.properties.push(name.to_string());
            }
            ["end_header"] => {
                header_done = true;
                break;
            }
            _ => {
                return Err(StreamError::parse(
                    path,
                    line,
                    format!("unrecognized header line {l:?}"),
                ))
            }
        }
    }
    if !header_done {
        return Err(StreamError::parse(
            path,
            text.lines().count(),
            "missing end_header",
        ));
    }

    let mut points = Vec::new();
    let mut renormalized = 0;
    for el in &elements {
        if el.name != "vertex" {
            for _ in 0..el.count {
                lines.next();
            }
            continue;
        }
        let col = |name: &str| el.properties.iter().position(|p| p == name);
        let (Some(ix), Some(iy), Some(iz)) = (col("x"), col("y"), col("z")) else {
            return Err(StreamError::parse(path, 1, "vertex element lacks x/y/z"));
        };
        let normal_cols = match (col("nx"), col("ny"), col("nz")) {
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            _ => None,
        };
        for _ in 0..el.count {
            let (line, l) = lines.next().ok_or_else(|| {
                StreamError::parse(path, text.lines().count(), "fewer vertices than declared")
            })?;
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != el.properties.len() {
                return Err(StreamError::parse(
                    path,
                    line,
                    format!(
                        "expected {} values, found {}",
                        el.properties.len(),
                        toks.len()
                    ),
                ));
            }
            let get = |i: usize| parse_f64(path, line, toks[i]);
            let mut p = InputPoint::at([get(ix)?, get(iy)?, get(iz)?]);
            if let Some([a, b, c]) = normal_cols {
                p.normal = Some(checked_normal(
                    path,
                    line,
                    [get(a)?, get(b)?, get(c)?],
                    &mut renormalized,
                )?);
            }
            points.push(p);
        }
    }
    Ok((points, renormalized))
}

fn is_ply(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("ply"))
}

/// Loads one frame from a text or ASCII `.ply` file.
pub fn load_frame_file(path: &Path, frame_index: usize) -> Result<Frame, StreamError> {
    let text = fs::read_to_string(path).map_err(|e| StreamError::io(path, e))?;
    let (points, renormalized_normals) = if is_ply(path) {
        parse_ply(path, &text)?
    } else {
        parse_text(path, &text)?
    };
    Ok(Frame {
        points,
        frame_index,
        window_origin: None,
        renormalized_normals,
    })
}

/// Writes `frame` in the text format. Values use the shortest representation
/// that parses back to the same `f64`.
pub fn write_frame_file(path: &Path, frame: &Frame) -> Result<(), StreamError> {
    let file = fs::File::create(path).map_err(|e| StreamError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (index, p) in frame.points.iter().enumerate() {
        let [x, y, z] = p.position;
        let row = match (p.normal, p.traversability) {
            (None, None) => format!("{x} {y} {z}\n"),
            (Some([a, b, c]), None) => format!("{x} {y} {z} {a} {b} {c}\n"),
            (Some([a, b, c]), Some(t)) => format!("{x} {y} {z} {a} {b} {c} {}\n", u8::from(t)),
            (None, Some(_)) => return Err(StreamError::Unwritable { index }),
        };
        out.write_all(row.as_bytes())
            .map_err(|e| StreamError::io(path, e))?;
    }
    out.flush().map_err(|e| StreamError::io(path, e))
}

/// Frame files in `dir` (`.txt`, `.xyz`, `.ply`), sorted by file name.
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>, StreamError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| StreamError::io(dir, e))? {
        let path = entry.map_err(|e| StreamError::io(dir, e))?.path();
        let known = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "txt" | "xyz" | "ply"));
        if path.is_file() && known {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}
