//! Scenarios shipped with the crate.

/// `(name, toml)` pairs.
pub const BUNDLED: &[(&str, &str)] = &[
    ("honest-fc", include_str!("../../scenarios/honest-fc.toml")),
    ("front-runner", include_str!("../../scenarios/front-runner.toml")),
    ("direct-spend", include_str!("../../scenarios/direct-spend.toml")),
    ("lfc-spammer", include_str!("../../scenarios/lfc-spammer.toml")),
    ("lfc-delay", include_str!("../../scenarios/lfc-delay.toml")),
    ("fraud-proof", include_str!("../../scenarios/fraud-proof.toml")),
    ("salvage", include_str!("../../scenarios/salvage.toml")),
    ("epochs", include_str!("../../scenarios/epochs.toml")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
