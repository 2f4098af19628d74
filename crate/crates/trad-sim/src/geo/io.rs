//! Plain-text map serialization: one record per line, whitespace
//! separated. Floats print in shortest round-trip form so save/load is
//! exact.
//!
//! ```text
//! # trad-sim map v1
//! bounds <min_x> <min_y> <max_x> <max_y>
//! intersection <x> <y>
//! segment <x1> <y1> <x2> <y2> <lanes_per_direction>
//! building <x1> <y1> <x2> <y2> <x3> <y3> [...]
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::map::{Bounds, Polygon, RoadMap, Segment};
use super::vec::Vec2;

const HEADER: &str = "# trad-sim map v1";

#[derive(Debug, Error)]
pub enum MapIoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing bounds record")]
    MissingBounds,
}

pub fn map_to_string(map: &RoadMap) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(
        out,
        "bounds {} {} {} {}",
        map.bounds.min.x, map.bounds.min.y, map.bounds.max.x, map.bounds.max.y
    );
    for p in &map.intersections {
        let _ = writeln!(out, "intersection {} {}", p.x, p.y);
    }
    for s in &map.segments {
        let _ = writeln!(
            out,
            "segment {} {} {} {} {}",
            s.a.x, s.a.y, s.b.x, s.b.y, s.lanes_per_direction
        );
    }
    for b in &map.buildings {
        let mut line = String::from("building");
        for v in b.vertices() {
            let _ = write!(line, " {} {}", v.x, v.y);
        }
        let _ = writeln!(out, "{line}");
    }
    out
}

pub fn save_map(map: &RoadMap, path: &Path) -> Result<(), MapIoError> {
    fs::write(path, map_to_string(map))?;
    Ok(())
}

pub fn map_from_str(text: &str) -> Result<RoadMap, MapIoError> {
    let mut bounds: Option<Bounds> = None;
    let mut intersections = Vec::new();
    let mut segments = Vec::new();
    let mut buildings = Vec::new();

    let parse_f64 = |tok: &str, line: usize| -> Result<f64, MapIoError> {
        tok.parse::<f64>().map_err(|_| MapIoError::Parse {
            line,
            message: format!("invalid number `{tok}`"),
        })
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let kind = tokens.next().expect("non-empty line has a first token");
        let rest: Vec<&str> = tokens.collect();
        match kind {
            "bounds" => {
                if rest.len() != 4 {
                    return Err(MapIoError::Parse {
                        line: line_no,
                        message: "bounds needs 4 numbers".into(),
                    });
                }
                bounds = Some(Bounds {
                    min: Vec2::new(parse_f64(rest[0], line_no)?, parse_f64(rest[1], line_no)?),
                    max: Vec2::new(parse_f64(rest[2], line_no)?, parse_f64(rest[3], line_no)?),
                });
            }
            "intersection" => {
                if rest.len() != 2 {
                    return Err(MapIoError::Parse {
                        line: line_no,
                        message: "intersection needs 2 numbers".into(),
                    });
                }
                intersections.push(Vec2::new(
                    parse_f64(rest[0], line_no)?,
                    parse_f64(rest[1], line_no)?,
                ));
            }
            "segment" => {
                if rest.len() != 5 {
                    return Err(MapIoError::Parse {
                        line: line_no,
                        message: "segment needs 5 fields".into(),
                    });
                }
                segments.push(Segment {
                    a: Vec2::new(parse_f64(rest[0], line_no)?, parse_f64(rest[1], line_no)?),
                    b: Vec2::new(parse_f64(rest[2], line_no)?, parse_f64(rest[3], line_no)?),
                    lanes_per_direction: rest[4].parse().map_err(|_| MapIoError::Parse {
                        line: line_no,
                        message: format!("invalid lane count `{}`", rest[4]),
                    })?,
                });
            }
            "building" => {
                if rest.len() < 6 || rest.len() % 2 != 0 {
                    return Err(MapIoError::Parse {
                        line: line_no,
                        message: "building needs at least 3 coordinate pairs".into(),
                    });
                }
                let mut ring = Vec::with_capacity(rest.len() / 2);
                for pair in rest.chunks_exact(2) {
                    ring.push(Vec2::new(
                        parse_f64(pair[0], line_no)?,
                        parse_f64(pair[1], line_no)?,
                    ));
                }
                buildings.push(Polygon::new(ring));
            }
            other => {
                return Err(MapIoError::Parse {
                    line: line_no,
                    message: format!("unknown record `{other}`"),
                });
            }
        }
    }

    Ok(RoadMap {
        segments,
        intersections,
        buildings,
        bounds: bounds.ok_or(MapIoError::MissingBounds)?,
    })
}

pub fn load_map(path: &Path) -> Result<RoadMap, MapIoError> {
    map_from_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::gen::{build_grid_map, GridMapParams};
    use crate::simcore::derive_rng;

    #[test]
    fn round_trip_is_exact() {
        let params = GridMapParams {
            irregularity: 0.7,
            ..GridMapParams::default()
        };
        let map = build_grid_map(&params, &mut derive_rng(5, "maps")).unwrap();
        let text = map_to_string(&map);
        let reloaded = map_from_str(&text).unwrap();
        assert_eq!(map, reloaded);
        assert_eq!(text, map_to_string(&reloaded));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = map_from_str("# trad-sim map v1\nbounds 0 0 10\n").unwrap_err();
        match err {
            MapIoError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(matches!(
            map_from_str("intersection 1 2\n"),
            Err(MapIoError::MissingBounds)
        ));
    }
}
