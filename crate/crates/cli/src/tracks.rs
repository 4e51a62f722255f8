//! Track lookup: a path on disk, or the name of a shipped track.

use std::path::Path;

use dtr_core::sim::{TrackDefinition, TrackError};

pub const SHIPPED: [(&str, &str); 4] = [
    ("corridor", include_str!("../../../tracks/corridor.json")),
    ("oval", include_str!("../../../tracks/oval.json")),
    ("trap", include_str!("../../../tracks/trap.json")),
    ("gp", include_str!("../../../tracks/gp.json")),
];

/// Loads `arg` from disk if such a file exists. Otherwise `oval` or
/// `oval.json` (with no directory part) resolve to the shipped track.
pub fn resolve_track(arg: &str) -> Result<TrackDefinition, TrackError> {
    let path = Path::new(arg);
    if !path.exists() && path.parent().is_none_or(|p| p.as_os_str().is_empty()) {
        let stem = arg.strip_suffix(".json").unwrap_or(arg);
        if let Some((_, text)) = SHIPPED.iter().find(|(name, _)| *name == stem) {
            return TrackDefinition::from_json(text);
        }
    }
    TrackDefinition::load(path)
}
