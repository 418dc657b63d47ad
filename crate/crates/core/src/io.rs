//! Benchmark file ingestion (MovingAI `.map` / `.scen` text formats) and
//! machine-readable results emission.
//!
//! Map glyphs: `.`, `G`, `S` are passable; `@`, `O`, `T`, `W` are blocked.

use std::io::Write;
use std::path::Path as FsPath;

use thiserror::Error;

use crate::bench::ResultRow;
use crate::engine::RunEventLog;
use crate::model::{GridMap, Instance, InstanceError, Vertex};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: expected header `{expected}`")]
    MissingHeader { line: usize, expected: &'static str },
    #[error("line {line}: bad header value: {detail}")]
    BadHeaderValue { line: usize, detail: String },
    #[error("line {line}, column {column}: unknown map glyph {glyph:?}")]
    UnknownGlyph { line: usize, column: usize, glyph: char },
    #[error("line {line}: grid row has {found} cells, expected {expected}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: truncated grid, found {found} of {expected} rows")]
    TruncatedGrid { line: usize, expected: usize, found: usize },
    #[error("line {line}: expected `version ...` header")]
    ScenMissingVersion { line: usize },
    #[error("scenario entry {entry} (line {line}): expected 9 fields, found {found}")]
    ScenFieldCount { entry: usize, line: usize, found: usize },
    #[error("scenario entry {entry} (line {line}): {detail}")]
    ScenBadField { entry: usize, line: usize, detail: String },
    #[error("scenario entry {entry}: map dimensions {found:?} do not match the map {expected:?}")]
    ScenDimsMismatch {
        entry: usize,
        expected: (u32, u32),
        found: (u32, u32),
    },
    #[error("scenario entry {entry}: {what} {cell:?} is out of bounds")]
    ScenOutOfBounds {
        entry: usize,
        what: &'static str,
        cell: (u32, u32),
    },
    #[error("scenario entry {entry}: {what} {cell:?} is a blocked cell")]
    ScenBlockedCell {
        entry: usize,
        what: &'static str,
        cell: (u32, u32),
    },
}

fn passable_glyph(glyph: char) -> Option<bool> {
    match glyph {
        '.' | 'G' | 'S' => Some(true),
        '@' | 'O' | 'T' | 'W' => Some(false),
        _ => None,
    }
}

/// Parses a MovingAI map: `type`, `height H`, `width W` (either order), `map`,
/// then `H` rows of `W` glyphs.
pub fn parse_map(text: &str) -> Result<GridMap, ParseError> {
    let mut lines = text.lines().enumerate();

    let (_, type_line) = lines
        .next()
        .ok_or(ParseError::MissingHeader { line: 1, expected: "type" })?;
    if !type_line.trim_start().starts_with("type") {
        return Err(ParseError::MissingHeader { line: 1, expected: "type" });
    }

    let mut width: Option<u32> = None;
    let mut height: Option<u32> = None;
    let mut map_line = 0usize;
    for (idx, line) in lines.by_ref() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed == "map" {
            map_line = line_no;
            break;
        }
        let mut parts = trimmed.split_whitespace();
        let key = parts.next().unwrap_or("");
        let value = parts.next().unwrap_or("");
        let parsed = value.parse::<u32>().map_err(|_| ParseError::BadHeaderValue {
            line: line_no,
            detail: format!("`{trimmed}` is not `<key> <number>`"),
        });
        match key {
            "height" => height = Some(parsed?),
            "width" => width = Some(parsed?),
            _ => {
                return Err(ParseError::BadHeaderValue {
                    line: line_no,
                    detail: format!("unexpected header `{trimmed}`"),
                })
            }
        }
    }
    if map_line == 0 {
        return Err(ParseError::MissingHeader { line: text.lines().count() + 1, expected: "map" });
    }
    let width = width.ok_or(ParseError::MissingHeader { line: map_line, expected: "width" })?;
    let height = height.ok_or(ParseError::MissingHeader { line: map_line, expected: "height" })?;
    if width == 0 || height == 0 {
        return Err(ParseError::BadHeaderValue {
            line: map_line,
            detail: "width and height must be positive".into(),
        });
    }

    let mut blocked = Vec::with_capacity((width as usize) * (height as usize));
    let mut rows = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if rows == height as usize {
            break;
        }
        let cells: Vec<char> = line.trim_end().chars().collect();
        if cells.len() != width as usize {
            return Err(ParseError::DimensionMismatch {
                line: line_no,
                expected: width as usize,
                found: cells.len(),
            });
        }
        for (col, glyph) in cells.into_iter().enumerate() {
            match passable_glyph(glyph) {
                Some(passable) => blocked.push(!passable),
                None => {
                    return Err(ParseError::UnknownGlyph {
                        line: line_no,
                        column: col + 1,
                        glyph,
                    })
                }
            }
        }
        rows += 1;
    }
    if rows < height as usize {
        return Err(ParseError::TruncatedGrid {
            line: text.lines().count(),
            expected: height as usize,
            found: rows,
        });
    }
    Ok(GridMap::new(width, height, blocked))
}

/// Renders a map back to the MovingAI text format (`.` / `@` glyphs).
pub fn serialize_map(map: &GridMap) -> String {
    let mut out = String::new();
    out.push_str("type octile\n");
    out.push_str(&format!("height {}\n", map.height()));
    out.push_str(&format!("width {}\n", map.width()));
    out.push_str("map\n");
    for y in 0..map.height() {
        for x in 0..map.width() {
            out.push(if map.is_passable_xy(x, y) { '.' } else { '@' });
        }
        out.push('\n');
    }
    out
}

/// One benchmark scenario line: start/goal coordinates are `(column, row)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioEntry {
    pub bucket: u32,
    pub map_name: String,
    pub map_dims: (u32, u32),
    pub start: (u32, u32),
    pub goal: (u32, u32),
    pub optimal_hint: f64,
}

/// Parses a `.scen` file and validates every entry against `map`. Taking the
/// first `k` entries of the result defines the `k`-agent instance.
pub fn parse_scen(text: &str, map: &GridMap) -> Result<Vec<ScenarioEntry>, ParseError> {
    let mut lines = text.lines().enumerate();
    let (_, version) = lines
        .next()
        .ok_or(ParseError::ScenMissingVersion { line: 1 })?;
    if !version.trim_start().starts_with("version") {
        return Err(ParseError::ScenMissingVersion { line: 1 });
    }

    let mut entries = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let entry_no = entries.len();
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 9 {
            return Err(ParseError::ScenFieldCount {
                entry: entry_no,
                line: line_no,
                found: fields.len(),
            });
        }
        let num = |i: usize, what: &str| -> Result<u32, ParseError> {
            fields[i].parse::<u32>().map_err(|_| ParseError::ScenBadField {
                entry: entry_no,
                line: line_no,
                detail: format!("{what} `{}` is not a number", fields[i]),
            })
        };
        let entry = ScenarioEntry {
            bucket: num(0, "bucket")?,
            map_name: fields[1].to_string(),
            map_dims: (num(2, "map width")?, num(3, "map height")?),
            start: (num(4, "start column")?, num(5, "start row")?),
            goal: (num(6, "goal column")?, num(7, "goal row")?),
            optimal_hint: fields[8].parse::<f64>().map_err(|_| ParseError::ScenBadField {
                entry: entry_no,
                line: line_no,
                detail: format!("optimal length `{}` is not a number", fields[8]),
            })?,
        };
        if entry.map_dims != (map.width(), map.height()) {
            return Err(ParseError::ScenDimsMismatch {
                entry: entry_no,
                expected: (map.width(), map.height()),
                found: entry.map_dims,
            });
        }
        for (what, cell) in [("start", entry.start), ("goal", entry.goal)] {
            if !map.in_bounds(cell.0, cell.1) {
                return Err(ParseError::ScenOutOfBounds { entry: entry_no, what, cell });
            }
            if !map.is_passable_xy(cell.0, cell.1) {
                return Err(ParseError::ScenBlockedCell { entry: entry_no, what, cell });
            }
        }
        entries.push(entry);
    }
    Ok(entries)
}

/// Builds the `k`-agent instance from the first `k` scenario entries, in order.
pub fn instance_from_entries(
    map: &GridMap,
    entries: &[ScenarioEntry],
    k: usize,
) -> Result<Instance, InstanceError> {
    assert!(
        k >= 1 && k <= entries.len(),
        "k = {k} outside 1..={}",
        entries.len()
    );
    let pairs: Vec<(Vertex, Vertex)> = entries[..k]
        .iter()
        .map(|e| (map.vertex(e.start.0, e.start.1), map.vertex(e.goal.0, e.goal.1)))
        .collect();
    Instance::new(map.clone(), &pairs)
}

/// I/O failure with the offending path attached.
#[derive(Debug, Error)]
#[error("{path}: {message}")]
pub struct EmitError {
    pub path: String,
    pub message: String,
}

impl EmitError {
    fn new(path: &FsPath, err: impl std::fmt::Display) -> Self {
        EmitError {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

/// Writes benchmark rows as CSV (header always present, even with zero rows).
pub fn write_results_csv(rows: &[ResultRow], path: &FsPath) -> Result<(), EmitError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| EmitError::new(path, e))?;
    if rows.is_empty() {
        writer
            .write_record(ResultRow::CSV_HEADER)
            .map_err(|e| EmitError::new(path, e))?;
    }
    for row in rows {
        writer.serialize(row).map_err(|e| EmitError::new(path, e))?;
    }
    writer.flush().map_err(|e| EmitError::new(path, e))?;
    Ok(())
}

pub fn write_results_json(rows: &[ResultRow], path: &FsPath) -> Result<(), EmitError> {
    let file = std::fs::File::create(path).map_err(|e| EmitError::new(path, e))?;
    serde_json::to_writer_pretty(file, rows).map_err(|e| EmitError::new(path, e))
}

/// One `(time, soc, sum_of_delays)` line per improvement event.
pub fn write_convergence(log: &RunEventLog, path: &FsPath) -> Result<(), EmitError> {
    let mut file = std::fs::File::create(path).map_err(|e| EmitError::new(path, e))?;
    writeln!(file, "time,soc,sum_of_delays").map_err(|e| EmitError::new(path, e))?;
    for event in &log.improvements {
        writeln!(file, "{},{},{}", event.time, event.soc, event.sum_of_delays)
            .map_err(|e| EmitError::new(path, e))?;
    }
    Ok(())
}
