//! Metrics CSV: `frame, wall_ms, dist_evals, L, nodes_l1..nodes_lK,
//! edges_l1..edges_lK, mismatches`, where K is the largest layer count in
//! the table and shorter rows are padded with 0. `mismatches` is empty when
//! no oracle ran.

use std::io::{Read, Write};

use mlatc::FrameMetrics;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

/// Layer columns needed to hold every row.
pub fn layer_columns(rows: &[FrameMetrics]) -> usize {
    rows.iter()
        .map(|m| {
            m.layer_count
                .max(m.nodes_per_layer.len())
                .max(m.edges_per_layer.len())
        })
        .max()
        .unwrap_or(0)
        .max(1)
}

pub fn header(k: usize) -> Vec<String> {
    let mut h: Vec<String> = ["frame", "wall_ms", "dist_evals", "L"]
        .map(String::from)
        .to_vec();
    h.extend((1..=k).map(|l| format!("nodes_l{l}")));
    h.extend((1..=k).map(|l| format!("edges_l{l}")));
    h.push("mismatches".into());
    h
}

pub fn write_metrics<W: Write>(out: W, rows: &[FrameMetrics]) -> Result<(), TableError> {
    let k = layer_columns(rows);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(k))?;
    for m in rows {
        let mut rec = vec![
            m.frame_index.to_string(),
            m.wall_time_ms.to_string(),
            m.distance_evals.to_string(),
            m.layer_count.to_string(),
        ];
        for per_layer in [&m.nodes_per_layer, &m.edges_per_layer] {
            rec.extend((0..k).map(|i| per_layer.get(i).copied().unwrap_or(0).to_string()));
        }
        rec.push(
            m.oracle_mismatches
                .map(|v| v.to_string())
                .unwrap_or_default(),
        );
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    i: usize,
    row: usize,
) -> Result<T, TableError> {
    let raw = rec.get(i).ok_or_else(|| TableError::Row {
        row,
        message: format!("missing column {i}"),
    })?;
    raw.parse().map_err(|_| TableError::Row {
        row,
        message: format!("column {i}: cannot parse {raw:?}"),
    })
}

/// Reads a table written by [`write_metrics`]. Padding beyond each row's
/// `L` is dropped.
pub fn read_metrics<R: Read>(input: R) -> Result<Vec<FrameMetrics>, TableError> {
    let mut r = csv::Reader::from_reader(input);
    let head = r.headers()?.clone();
    let cols = head.len();
    if cols < 7 || (cols - 5) % 2 != 0 {
        return Err(TableError::Header(format!("{cols} columns")));
    }
    let k = (cols - 5) / 2;
    let expected = header(k);
    if head.iter().ne(expected.iter().map(String::as_str)) {
        return Err(TableError::Header(
            head.iter().collect::<Vec<_>>().join(","),
        ));
    }

    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let layer_count: usize = field(&rec, 3, row)?;
        if layer_count > k {
            return Err(TableError::Row {
                row,
                message: format!("L = {layer_count} exceeds {k} layer columns"),
            });
        }
        let per_layer = |offset: usize| -> Result<Vec<usize>, TableError> {
            (0..layer_count)
                .map(|l| field(&rec, offset + l, row))
                .collect()
        };
        let mismatches = match rec.get(cols - 1) {
            Some("") | None => None,
            Some(_) => Some(field(&rec, cols - 1, row)?),
        };
        rows.push(FrameMetrics {
            frame_index: field(&rec, 0, row)?,
            wall_time_ms: field(&rec, 1, row)?,
            distance_evals: field(&rec, 2, row)?,
            nodes_per_layer: per_layer(4)?,
            edges_per_layer: per_layer(4 + k)?,
            layer_count,
            oracle_mismatches: mismatches,
        });
    }
    Ok(rows)
}
