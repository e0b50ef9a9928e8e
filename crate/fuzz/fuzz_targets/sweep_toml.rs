#![no_main]

use libfuzzer_sys::fuzz_target;
use nussbaum_pi::SweepFile;

fuzz_target!(|data: &str| {
    if let Ok(file) = SweepFile::from_toml_str(data) {
        assert!(file.cell_count() <= file.grid.max_cells);
    }
});
