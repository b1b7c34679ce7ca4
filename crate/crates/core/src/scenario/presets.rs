//! Built-in scenarios `fig1` to `fig9`.

use super::{ScenarioConfig, ScenarioError};

/// `(name, TOML source)` of every preset.
pub const PRESETS: [(&str, &str); 9] = [
    ("fig1", include_str!("../../presets/fig1.toml")),
    ("fig2", include_str!("../../presets/fig2.toml")),
    ("fig3", include_str!("../../presets/fig3.toml")),
    ("fig4", include_str!("../../presets/fig4.toml")),
    ("fig5", include_str!("../../presets/fig5.toml")),
    ("fig6", include_str!("../../presets/fig6.toml")),
    ("fig7", include_str!("../../presets/fig7.toml")),
    ("fig8", include_str!("../../presets/fig8.toml")),
    ("fig9", include_str!("../../presets/fig9.toml")),
];

pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn preset(name: &str) -> Result<ScenarioConfig, ScenarioError> {
    let src = preset_source(name).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        ScenarioError::Config(format!("unknown preset {name:?}; known: {}", known.join(", ")))
    })?;
    ScenarioConfig::from_toml(src)
}
