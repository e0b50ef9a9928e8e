//! Scenario files shipped with the tool. They live under `presets/` so they
//! can be copied and edited; the binary embeds the same bytes.

use nussbaum_pi::config::ConfigError;
use nussbaum_pi::{ScenarioFile, SweepFile};

pub const FIG1: [(&str, &str); 6] = [
    ("fig1_pint_ng", include_str!("../presets/fig1_pint_ng.toml")),
    ("fig1_pint_npi", include_str!("../presets/fig1_pint_npi.toml")),
    ("fig1_pint_npin", include_str!("../presets/fig1_pint_npin.toml")),
    ("fig1_pls_ng", include_str!("../presets/fig1_pls_ng.toml")),
    ("fig1_pls_npi", include_str!("../presets/fig1_pls_npi.toml")),
    ("fig1_pls_npin", include_str!("../presets/fig1_pls_npin.toml")),
];

pub const FIG2: (&str, &str) = ("fig2_sector", include_str!("../presets/fig2_sector.toml"));

pub const UNPERTURBED_ZBOUND: &str = include_str!("../presets/unperturbed_zbound.toml");

pub const SWEEPS: [(&str, &str); 4] = [
    ("sweep_epsilon", include_str!("../presets/sweep_epsilon.toml")),
    ("sweep_lambda", include_str!("../presets/sweep_lambda.toml")),
    ("sweep_random", include_str!("../presets/sweep_random.toml")),
    ("sweep_empty", include_str!("../presets/sweep_empty.toml")),
];

pub fn fig1() -> Result<Vec<ScenarioFile>, ConfigError> {
    FIG1.iter().map(|(_, src)| ScenarioFile::from_toml_str(src)).collect()
}

pub fn fig2() -> Result<ScenarioFile, ConfigError> {
    ScenarioFile::from_toml_str(FIG2.1)
}

pub fn sweep(name: &str) -> Option<Result<SweepFile, ConfigError>> {
    SWEEPS.iter().find(|(n, _)| *n == name).map(|(_, src)| SweepFile::from_toml_str(src))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_ids_match_names() {
        for ((name, _), file) in FIG1.iter().zip(fig1().unwrap()) {
            assert_eq!(&file.id, name);
            file.to_scenario().unwrap();
        }
        assert_eq!(fig2().unwrap().id, FIG2.0);
        ScenarioFile::from_toml_str(UNPERTURBED_ZBOUND).unwrap().to_scenario().unwrap();
        for (name, _) in SWEEPS {
            let s = sweep(name).unwrap().unwrap();
            assert_eq!(s.base.id, name);
        }
    }
}
