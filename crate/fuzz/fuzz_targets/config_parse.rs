//! Config documents must never panic the parser or the resolver, and a
//! successful resolution must be a fixed point: the canonical echo re-parses
//! and re-resolves to the identical canonical document.

#![no_main]

use chainlight::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let cfg = match RunConfig::from_toml_str(text) {
        Ok(cfg) => cfg,
        Err(_) => return,
    };
    let (canonical, resolved) = match cfg.resolve() {
        Ok(out) => out,
        Err(_) => return,
    };
    let echo = canonical
        .to_toml_string()
        .expect("canonical config must serialize");
    let reparsed = RunConfig::from_toml_str(&echo).expect("canonical echo must re-parse");
    let (canonical2, resolved2) = reparsed.resolve().expect("canonical echo must re-resolve");
    assert_eq!(canonical, canonical2, "resolution must be a fixed point");
    assert_eq!(resolved, resolved2, "resolved parameters must round-trip");
});
