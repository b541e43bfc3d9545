//! Scenario files shipped with the crate.

use crate::coefficients::{parse_scenario, ScenarioConfig};
use crate::error::{KyleError, Result};

pub const NAMES: [&str; 4] = ["static_kyle", "back_pedersen", "g0_general", "g_feedback"];

pub fn preset_text(name: &str) -> Option<&'static str> {
    match name {
        "static_kyle" => Some(include_str!("../presets/static_kyle.json")),
        "back_pedersen" => Some(include_str!("../presets/back_pedersen.json")),
        "g0_general" => Some(include_str!("../presets/g0_general.json")),
        "g_feedback" => Some(include_str!("../presets/g_feedback.json")),
        _ => None,
    }
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let text = preset_text(name).ok_or_else(|| {
        KyleError::validation("scenario", format!("unknown preset {name:?}; known: {}", NAMES.join(", ")))
    })?;
    parse_scenario(text)
}

pub fn all() -> Vec<ScenarioConfig> {
    NAMES
        .iter()
        .map(|n| preset(n).expect("built-in presets are valid"))
        .collect()
}
