//! Focus areas and their JSON form, an array of `{"center": [x, y, z], "radius": r}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AssetError;
use crate::geometry::{Aabb, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocusArea {
    pub center: [f64; 3],
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<String>,
    /// Set when the area was produced without any ray concentration evidence.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub low_confidence: bool,
}

impl FocusArea {
    pub fn new(center: [f64; 3], radius: f64) -> Self {
        Self {
            center,
            radius,
            members: Vec::new(),
            low_confidence: false,
        }
    }

    pub fn center_vec(&self) -> Vec3 {
        Vec3::from(self.center)
    }

    /// The cube `prod [f_i - r, f_i + r]`.
    pub fn cube(&self) -> Aabb {
        let c = self.center;
        let r = self.radius;
        Aabb::new([c[0] - r, c[1] - r, c[2] - r], [c[0] + r, c[1] + r, c[2] + r])
    }
}

pub fn write_focus_areas(areas: &[FocusArea], path: &Path) -> Result<(), AssetError> {
    let text = serde_json::to_string_pretty(areas).map_err(|e| AssetError::Parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_focus_areas(path: &Path) -> Result<Vec<FocusArea>, AssetError> {
    let text = fs::read_to_string(path)?;
    let areas: Vec<FocusArea> =
        serde_json::from_str(&text).map_err(|e| AssetError::Parse(format!("{}: {e}", path.display())))?;
    for a in &areas {
        if !(a.radius > 0.0 && a.radius.is_finite()) || !a.center.iter().all(|v| v.is_finite()) {
            return Err(AssetError::Parse(format!("invalid focus area {a:?}")));
        }
    }
    Ok(areas)
}
