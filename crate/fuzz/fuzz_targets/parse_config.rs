#![no_main]

use g2zhu_cli::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_toml(s) {
        cfg.validate().expect("parsed config stays valid");
        cfg.moduli().expect("parsed config has valid moduli");
    }
});
