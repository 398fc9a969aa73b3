//! Grid-field CSV reader: never panics, and any accepted field round-trips
//! through the writer to an equal field.

#![no_main]

use libfuzzer_sys::fuzz_target;
use restriction_lab::grid::{read_grid_csv, write_grid_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(field) = read_grid_csv(text) {
        let mut buf = Vec::new();
        write_grid_csv(&field, &mut buf).expect("writing a parsed field");
        let again = read_grid_csv(std::str::from_utf8(&buf).expect("writer emits UTF-8"))
            .expect("canonical form must reparse");
        assert_eq!(field, again, "round trip changed the field");
    }
});
