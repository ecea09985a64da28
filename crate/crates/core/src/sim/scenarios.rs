//! Scenario files shipped with the crate.

use super::{ConfigError, ScenarioConfig};

pub const BUNDLED: &[(&str, &str)] = &[
    ("garbage-encrypt", include_str!("../../scenarios/garbage-encrypt.toml")),
    ("honest", include_str!("../../scenarios/honest.toml")),
    ("overhead-10hop", include_str!("../../scenarios/overhead-10hop.toml")),
    ("provider-garbage", include_str!("../../scenarios/provider-garbage.toml")),
    ("silent-delivery", include_str!("../../scenarios/silent-delivery.toml")),
    ("single-path", include_str!("../../scenarios/single-path.toml")),
    ("stall-receipt", include_str!("../../scenarios/stall-receipt.toml")),
    ("withhold-unlock", include_str!("../../scenarios/withhold-unlock.toml")),
    ("wormhole-silent", include_str!("../../scenarios/wormhole-silent.toml")),
    ("wormhole", include_str!("../../scenarios/wormhole.toml")),
    ("wrong-mask", include_str!("../../scenarios/wrong-mask.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn bundled(name: &str) -> Option<Result<ScenarioConfig, ConfigError>> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| ScenarioConfig::from_toml(s))
}

/// Every bundled scenario, parsed.
pub fn all() -> Vec<ScenarioConfig> {
    BUNDLED
        .iter()
        .map(|(n, s)| ScenarioConfig::from_toml(s).unwrap_or_else(|e| panic!("bundled scenario {n}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn bundled_scenarios_parse_and_are_named_after_their_files() {
        for (file, cfg) in super::names().zip(super::all()) {
            assert_eq!(file, cfg.name);
        }
    }
}
