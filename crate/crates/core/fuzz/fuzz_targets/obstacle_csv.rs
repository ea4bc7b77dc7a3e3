#![no_main]

use libfuzzer_sys::fuzz_target;
use maxloc::brownian::Polyline;
use maxloc::Point2;

fuzz_target!(|data: &[u8]| {
    if let Ok(poly) = Polyline::from_csv(data) {
        assert!(poly.vertices().len() >= 2);
        let _ = poly.distance_to(Point2::ORIGIN);
    }
});
