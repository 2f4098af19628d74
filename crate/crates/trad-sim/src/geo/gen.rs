use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simcore::RngStream;

use super::map::{Bounds, Polygon, RoadMap, Segment};
use super::vec::{distance, Vec2};

/// Parameters for the synthetic Manhattan-style urban grid. Defaults
/// produce a 1 x 1 km map of 5 x 5 blocks with one inset building per
/// block. `irregularity` in [0, 1] jitters junction positions to stand in
/// for a complex downtown topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMapParams {
    pub blocks_x: u32,
    pub blocks_y: u32,
    pub block_size: f64,
    pub lanes: u32,
    pub building_inset: f64,
    pub irregularity: f64,
}

impl Default for GridMapParams {
    fn default() -> Self {
        GridMapParams {
            blocks_x: 5,
            blocks_y: 5,
            block_size: 200.0,
            lanes: 1,
            building_inset: 15.0,
            irregularity: 0.0,
        }
    }
}

/// Parameters for the straight highway corridor: 2 km long with two
/// lanes per direction by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighwayMapParams {
    pub length: f64,
    pub lanes_per_direction: u32,
}

impl Default for HighwayMapParams {
    fn default() -> Self {
        HighwayMapParams {
            length: 2000.0,
            lanes_per_direction: 2,
        }
    }
}

/// Lateral placement of the two directional carriageways inside the
/// highway corridor. Eastbound traffic drives the lower line.
pub const HIGHWAY_EASTBOUND_Y: f64 = 8.0;
pub const HIGHWAY_WESTBOUND_Y: f64 = 12.0;
const HIGHWAY_CORRIDOR_HEIGHT: f64 = 20.0;

/// Junctions closer than this after jitter are merged.
const MERGE_DISTANCE: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum MapGenError {
    #[error("grid must have at least 1x1 blocks, got {0}x{1}")]
    NoBlocks(u32, u32),
    #[error("block_size must be positive, got {0}")]
    ZeroArea(f64),
    #[error("irregularity must be in [0, 1], got {0}")]
    BadIrregularity(f64),
    #[error(
        "building inset {inset} plus jitter margin {jitter} leaves no room in a {block_size} m block"
    )]
    BuildingTooLarge {
        inset: f64,
        jitter: f64,
        block_size: f64,
    },
    #[error("highway length must be positive, got {0}")]
    ZeroLength(f64),
}

/// Generates a Manhattan-style grid. With irregularity > 0, junctions
/// jitter by up to irregularity * block_size / 4 per axis; buildings are
/// inset far enough that jittered road segments never touch them.
pub fn build_grid_map(params: &GridMapParams, rng: &mut RngStream) -> Result<RoadMap, MapGenError> {
    if params.blocks_x < 1 || params.blocks_y < 1 {
        return Err(MapGenError::NoBlocks(params.blocks_x, params.blocks_y));
    }
    if params.block_size <= 0.0 {
        return Err(MapGenError::ZeroArea(params.block_size));
    }
    if !(0.0..=1.0).contains(&params.irregularity) {
        return Err(MapGenError::BadIrregularity(params.irregularity));
    }
    let s = params.block_size;
    let jitter = params.irregularity * s / 4.0;
    let margin = params.building_inset + jitter;
    if margin >= s / 2.0 {
        return Err(MapGenError::BuildingTooLarge {
            inset: params.building_inset,
            jitter,
            block_size: s,
        });
    }

    let nx = params.blocks_x as usize + 1;
    let ny = params.blocks_y as usize + 1;
    let bounds = Bounds {
        min: Vec2::new(0.0, 0.0),
        max: Vec2::new(params.blocks_x as f64 * s, params.blocks_y as f64 * s),
    };

    // Jittered junction lattice, clamped into bounds.
    let mut nodes = vec![Vec2::default(); nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let mut p = Vec2::new(i as f64 * s, j as f64 * s);
            if jitter > 0.0 {
                p.x += rng.range(-jitter, jitter);
                p.y += rng.range(-jitter, jitter);
                p.x = p.x.clamp(bounds.min.x, bounds.max.x);
                p.y = p.y.clamp(bounds.min.y, bounds.max.y);
            }
            nodes[j * nx + i] = p;
        }
    }

    // Merge near-coincident junctions (cannot occur for jitter <= s/4,
    // kept as a guard for widened parameter ranges).
    for a in 0..nodes.len() {
        for b in (a + 1)..nodes.len() {
            if distance(nodes[a], nodes[b]) < MERGE_DISTANCE {
                nodes[b] = nodes[a];
            }
        }
    }

    let mut segments = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let here = nodes[j * nx + i];
            if i + 1 < nx {
                segments.push(Segment {
                    a: here,
                    b: nodes[j * nx + i + 1],
                    lanes_per_direction: params.lanes,
                });
            }
            if j + 1 < ny {
                segments.push(Segment {
                    a: here,
                    b: nodes[(j + 1) * nx + i],
                    lanes_per_direction: params.lanes,
                });
            }
        }
    }

    let mut intersections: Vec<Vec2> = Vec::with_capacity(nodes.len());
    for &n in &nodes {
        if !intersections.iter().any(|&p| p == n) {
            intersections.push(n);
        }
    }

    // One building per block, inset past the worst-case road jitter so
    // the obstacle never overlaps a segment.
    let mut buildings = Vec::new();
    for j in 0..params.blocks_y as usize {
        for i in 0..params.blocks_x as usize {
            let min = Vec2::new(i as f64 * s + margin, j as f64 * s + margin);
            let max = Vec2::new((i + 1) as f64 * s - margin, (j + 1) as f64 * s - margin);
            buildings.push(Polygon::rectangle(min, max));
        }
    }

    Ok(RoadMap {
        segments,
        intersections,
        buildings,
        bounds,
    })
}

/// Generates the straight highway corridor: one carriageway line per
/// direction, no intersections, no buildings.
pub fn build_highway_map(params: &HighwayMapParams) -> Result<RoadMap, MapGenError> {
    if params.length <= 0.0 {
        return Err(MapGenError::ZeroLength(params.length));
    }
    let segments = vec![
        Segment {
            a: Vec2::new(0.0, HIGHWAY_EASTBOUND_Y),
            b: Vec2::new(params.length, HIGHWAY_EASTBOUND_Y),
            lanes_per_direction: params.lanes_per_direction,
        },
        Segment {
            a: Vec2::new(0.0, HIGHWAY_WESTBOUND_Y),
            b: Vec2::new(params.length, HIGHWAY_WESTBOUND_Y),
            lanes_per_direction: params.lanes_per_direction,
        },
    ];
    Ok(RoadMap {
        segments,
        intersections: Vec::new(),
        buildings: Vec::new(),
        bounds: Bounds {
            min: Vec2::new(0.0, 0.0),
            max: Vec2::new(params.length, HIGHWAY_CORRIDOR_HEIGHT),
        },
    })
}
