//! Synthetic map generation: a regular grid, an irregular downtown-style
//! grid, and the highway corridor, saved to the plain-text map format
//! and read back.
//!
//! Run with: cargo run --example build_maps

use trad_sim::geo::{
    build_grid_map, build_highway_map, load_map, save_map, GridMapParams, HighwayMapParams,
};
use trad_sim::simcore::derive_rng;

fn main() {
    let out = std::env::temp_dir().join("trad-sim-maps");
    std::fs::create_dir_all(&out).expect("temp dir");

    let regular = build_grid_map(&GridMapParams::default(), &mut derive_rng(1, "maps")).unwrap();
    println!(
        "regular grid: {} junctions, {} segments, {} buildings, {:.1} km2",
        regular.intersections.len(),
        regular.segments.len(),
        regular.buildings.len(),
        regular.bounds.area_km2()
    );

    let irregular_params = GridMapParams {
        irregularity: 0.7,
        ..GridMapParams::default()
    };
    let irregular = build_grid_map(&irregular_params, &mut derive_rng(2, "maps")).unwrap();
    let mean_street: f64 = irregular.segments.iter().map(|s| s.length()).sum::<f64>()
        / irregular.segments.len() as f64;
    println!(
        "irregular grid: {} junctions, mean street {:.1} m (jittered)",
        irregular.intersections.len(),
        mean_street
    );

    let highway = build_highway_map(&HighwayMapParams::default()).unwrap();
    println!(
        "highway: {:.0} m corridor, {} lanes per direction, {} junctions",
        highway.bounds.width(),
        highway.segments[0].lanes_per_direction,
        highway.intersections.len()
    );

    let path = out.join("irregular.map");
    save_map(&irregular, &path).unwrap();
    let reloaded = load_map(&path).unwrap();
    assert_eq!(reloaded, irregular);
    println!("saved and reloaded {} byte-exactly", path.display());
}
