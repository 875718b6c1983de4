#![no_main]

use conformal_poisson::geometry::{parse_grid_csv, write_grid_csv, SphereGrid};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_grid_csv(text) {
        assert_eq!(t.nodes.len(), t.n * t.weights.len());
        // accepted tables survive a write/parse round trip
        let again = parse_grid_csv(&write_grid_csv(t.n, t.nodes.chunks(t.n), &t.weights)).unwrap();
        assert_eq!(again, t);
    }
    let _ = SphereGrid::from_csv(text);
});
