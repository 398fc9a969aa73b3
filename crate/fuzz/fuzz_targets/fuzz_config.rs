//! Config parser: never panics, and accepted input survives the canonical
//! serialize/reparse round trip unchanged.

#![no_main]

use libfuzzer_sys::fuzz_target;
use restriction_lab::config::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = Config::parse(text) {
        let canon = cfg.serialize();
        let again = Config::parse(&canon).expect("canonical form must reparse");
        assert_eq!(cfg, again, "round trip changed the pairs");
    }
});
