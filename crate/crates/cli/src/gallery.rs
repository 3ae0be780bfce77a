//! Scenarios compiled into the binary.

use crate::config::ScenarioConfig;
use crate::error::CliError;

/// Ids in execution order, with the embedded scenario text.
pub const SCENARIOS: [(&str, &str); 10] = [
    ("corollary33-pass", include_str!("../scenarios/corollary33-pass.json")),
    ("corollary34-pass", include_str!("../scenarios/corollary34-pass.json")),
    ("corollary35-pass", include_str!("../scenarios/corollary35-pass.json")),
    ("example36", include_str!("../scenarios/example36.json")),
    ("jump-monotone-fail", include_str!("../scenarios/jump-monotone-fail.json")),
    ("drift-order-fail", include_str!("../scenarios/drift-order-fail.json")),
    ("sigma-gap-fail", include_str!("../scenarios/sigma-gap-fail.json")),
    ("sigma-coupling-fail", include_str!("../scenarios/sigma-coupling-fail.json")),
    ("matrix-pass", include_str!("../scenarios/matrix-pass.json")),
    ("matrix-drift-fail", include_str!("../scenarios/matrix-drift-fail.json")),
];

const ALIASES: [(&str, &str); 1] = [("drift-violation", "drift-order-fail")];

pub fn ids() -> impl Iterator<Item = &'static str> {
    SCENARIOS.iter().map(|(id, _)| *id)
}

/// Looks up a gallery scenario by id or alias.
pub fn scenario(name: &str) -> Result<ScenarioConfig, CliError> {
    let id = ALIASES
        .iter()
        .find(|(alias, _)| *alias == name)
        .map_or(name, |(_, id)| id);
    let (_, text) = SCENARIOS
        .iter()
        .find(|(k, _)| *k == id)
        .ok_or_else(|| CliError::Usage(format!("unknown gallery scenario `{name}`")))?;
    ScenarioConfig::from_json_str(text)
}

/// All gallery scenarios in execution order.
pub fn all() -> Vec<ScenarioConfig> {
    SCENARIOS
        .iter()
        .map(|(id, text)| ScenarioConfig::from_json_str(text).unwrap_or_else(|e| panic!("gallery scenario {id}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scenario_builds_and_carries_its_id() {
        for (id, cfg) in ids().zip(all()) {
            assert_eq!(cfg.id(), Some(id));
            cfg.build().unwrap_or_else(|e| panic!("{id}: {e}"));
        }
    }

    #[test]
    fn alias_resolves() {
        assert_eq!(scenario("drift-violation").unwrap().id(), Some("drift-order-fail"));
        assert!(matches!(scenario("nope"), Err(CliError::Usage(_))));
    }
}
