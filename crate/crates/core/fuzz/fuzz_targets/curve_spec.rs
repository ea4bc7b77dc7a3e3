#![no_main]

use libfuzzer_sys::fuzz_target;
use maxloc::config::parse_curve_spec;
use maxloc::Point2;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(curve) = parse_curve_spec(text) {
        assert!(curve.min_radius() > 0.0);
        assert!(curve.contains(Point2::ORIGIN));
        let _ = curve.boundary_distance(Point2::ORIGIN);
    }
});
