#![no_main]

use libfuzzer_sys::fuzz_target;
use maxloc::config::parse_config_str;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config_str(text) {
            // accepted configs must survive a round trip
            let again = parse_config_str(&cfg.to_json()).expect("re-emitted config parses");
            assert_eq!(again, cfg);
        }
    }
});
