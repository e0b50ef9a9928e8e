#![no_main]

use libfuzzer_sys::fuzz_target;
use nussbaum_pi::{GainSpec, SectorNonlinearity};

fuzz_target!(|data: &str| {
    if let Ok(f) = SectorNonlinearity::parse(data) {
        let _ = f.eval(0.5);
        assert!(f.alpha1() <= f.alpha2());
    }
    if let Ok(g) = GainSpec::parse(data) {
        let _ = g.eval(2.0);
    }
});
