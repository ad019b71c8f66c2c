//! Figure-reproduction presets, shipped as config files.

pub const PRESETS: &[(&str, &str)] = &[
    ("z2-compare", include_str!("../presets/z2-compare.conf")),
    ("u1-many", include_str!("../presets/u1-many.conf")),
    ("so3-many", include_str!("../presets/so3-many.conf")),
    ("se-vs-amp", include_str!("../presets/se-vs-amp.conf")),
    ("se-vs-amp-so3", include_str!("../presets/se-vs-amp-so3.conf")),
    ("a4-phase", include_str!("../presets/a4-phase.conf")),
    ("a4-landscape", include_str!("../presets/a4-landscape.conf")),
    ("u1-landscape", include_str!("../presets/u1-landscape.conf")),
    ("z5-landscape", include_str!("../presets/z5-landscape.conf")),
    ("z6-landscape", include_str!("../presets/z6-landscape.conf")),
    ("z25-trajectory", include_str!("../presets/z25-trajectory.conf")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn every_preset_parses() {
        for (name, text) in super::PRESETS {
            crate::config::load(text, None, &[]).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}
