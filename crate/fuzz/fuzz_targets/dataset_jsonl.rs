#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use pseudocap::data::{parse_jsonl, to_jsonl};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ds) = parse_jsonl(text, Path::new("fuzz")) {
        let again = parse_jsonl(&to_jsonl(&ds), Path::new("fuzz")).expect("own output parses");
        assert_eq!(again.samples.len(), ds.samples.len());
    }
});
