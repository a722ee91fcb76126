#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use pseudocap::pseudo::{parse_assignments, write_assignments};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_assignments(text, Path::new("fuzz")) {
        let mut out = Vec::new();
        write_assignments(&mut out, &records).unwrap();
        let again = parse_assignments(std::str::from_utf8(&out).unwrap(), Path::new("fuzz")).unwrap();
        assert_eq!(again, records);
    }
});
