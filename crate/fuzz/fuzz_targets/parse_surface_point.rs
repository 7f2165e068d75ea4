#![no_main]

use g2zhu_cli::parse_surface_point;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_surface_point(s) {
        assert!(p.z.re.is_finite() && p.z.im.is_finite());
    }
});
