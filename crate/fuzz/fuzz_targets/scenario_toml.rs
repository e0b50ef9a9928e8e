#![no_main]

use libfuzzer_sys::fuzz_target;
use nussbaum_pi::ScenarioFile;

fuzz_target!(|data: &str| {
    if let Ok(file) = ScenarioFile::from_toml_str(data) {
        let canonical = file.canonical();
        let again = ScenarioFile::from_toml_str(&canonical).expect("canonical form must reparse");
        assert_eq!(again.canonical(), canonical);
        let _ = file.to_scenario();
    }
});
