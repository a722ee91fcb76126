#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use pseudocap::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::parse(text, Path::new("fuzz")) {
        let _ = cfg.validate();
        let back = RunConfig::parse(&cfg.to_text(), Path::new("snapshot")).expect("snapshot parses");
        assert_eq!(back.to_text(), cfg.to_text());
    }
});
