//! Planar geometry and the road-network model: vectors, segment and
//! polygon tests, synthetic grid/highway generators, and the plain-text
//! map format.

mod gen;
mod io;
mod map;
mod vec;

pub use gen::{
    build_grid_map, build_highway_map, GridMapParams, HighwayMapParams, MapGenError,
    HIGHWAY_EASTBOUND_Y, HIGHWAY_WESTBOUND_Y,
};
pub use io::{load_map, map_from_str, map_to_string, save_map, MapIoError};
pub use map::{segments_intersect, Bounds, Polygon, RoadMap, Segment};
pub use vec::{angle_between, distance, AngleError, Vec2};
