#![no_main]

use crane_core::harness::SweepAxis;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(axis) = text.parse::<SweepAxis>() {
        assert_eq!(axis.name().parse::<SweepAxis>(), Ok(axis));
    }
});
