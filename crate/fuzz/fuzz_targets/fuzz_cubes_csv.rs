//! Cube-set CSV reader: never panics, and any accepted set round-trips
//! through the writer to the identical set.

#![no_main]

use libfuzzer_sys::fuzz_target;
use restriction_lab::cubes::{read_cubes_csv, write_cubes_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(set) = read_cubes_csv(text) {
        let mut buf = Vec::new();
        write_cubes_csv(&set, &mut buf).expect("writing a parsed set");
        let again = read_cubes_csv(std::str::from_utf8(&buf).expect("writer emits UTF-8"))
            .expect("canonical form must reparse");
        assert_eq!(set, again, "round trip changed the cube set");
    }
});
