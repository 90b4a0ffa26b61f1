//! Home inference from geotagged posts and the nearest census patch join.
//!
//! cargo run --example home_location

use sociolex::corpus::{preprocess, Coords, RawPost};
use sociolex::geoloc::{assign_patch, infer_homes, GridCell, PatchId, PatchIndex, Projection, PATCH_CELL_M};

fn main() {
    let proj = Projection::default();
    let spots = [(48.8566, 2.3522), (48.8566, 2.3522), (48.8570, 2.3530), (45.7640, 4.8357)];
    let raw: Vec<RawPost> = spots
        .iter()
        .enumerate()
        .map(|(i, &(lat, lon))| RawPost {
            post_id: i.to_string(),
            author_id: "alice".into(),
            timestamp: 1_600_000_000 + i as i64 * 600,
            utc_offset_minutes: 120,
            text: "bonjour".into(),
            is_retweet: false,
            mentioned_ids: Vec::new(),
            coords: Coords::new(lat, lon),
        })
        .collect();
    let posts: Vec<_> = raw.iter().filter_map(preprocess).collect();
    let homes = infer_homes(&posts, &proj, 500);
    let home = &homes["alice"];
    println!("home cell {:?}, support {} of {}", home.cell, home.support, home.total_geoposts);

    let (e, n) = proj.forward(48.8566, 2.3522);
    let patches = [(-600.0, 0.0), (400.0, 200.0), (3000.0, 3000.0)].map(|(de, dn)| {
        GridCell::containing(e + de, n + dn, PATCH_CELL_M)
    });
    let index = PatchIndex::new(
        patches.iter().enumerate().map(|(i, c)| (PatchId(format!("P{i}")), *c)),
        1_000,
    );
    match assign_patch(home, &index) {
        Some(a) => println!("patch {} at {:.0} m", a.patch_id.0, a.distance_m),
        None => println!("no patch within 1 km"),
    }
    let (lat, lon) = proj.unproject(home.cell.center().0, home.cell.center().1);
    println!("cell center {lat:.5}, {lon:.5}");
}
