use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::CLASSES;
use crate::pointcloud::{load_kitti_bin, save_kitti_bin, BoundingBox, PointCloud};

/// One attack instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub background: PointCloud,
    pub target: PointCloud,
    pub label: String,
    pub gt_box: BoundingBox,
}

/// On-disk scene description; cloud paths are relative to the JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub background: PathBuf,
    pub target: PathBuf,
    pub label: String,
    pub gt_box: BoundingBox,
}

impl Scene {
    pub fn new(background: PointCloud, target: PointCloud, label: impl Into<String>, gt_box: BoundingBox) -> Result<Self> {
        let s = Self {
            background,
            target,
            label: label.into(),
            gt_box,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !CLASSES.contains(&self.label.as_str()) {
            return Err(Error::Config(format!(
                "scene label {:?} is not one of {CLASSES:?}",
                self.label
            )));
        }
        if self.target.is_empty() {
            return Err(Error::Config("scene target cloud is empty".into()));
        }
        for (name, cloud) in [("background", &self.background), ("target", &self.target)] {
            if let Some(i) = cloud.first_non_finite() {
                return Err(Error::Config(format!("{name} point {i} is not finite")));
            }
        }
        self.gt_box.validate()
    }

    /// Background followed by the target, the cloud the detector sees.
    pub fn cloud(&self) -> PointCloud {
        self.background.merged(&self.target)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: SceneFile =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let background = load_kitti_bin(base.join(&file.background))?;
        let target = load_kitti_bin(base.join(&file.target))?;
        let gt_box = BoundingBox::new(file.gt_box.center, file.gt_box.half_extents, file.gt_box.yaw)?;
        Self::new(background, target, file.label, gt_box)
    }

    /// Writes `<stem>.json`, `<stem>_background.bin` and `<stem>_target.bin`
    /// into `dir`; returns the JSON path.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<PathBuf> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let bg = format!("{stem}_background.bin");
        let tg = format!("{stem}_target.bin");
        save_kitti_bin(&self.background, dir.join(&bg))?;
        save_kitti_bin(&self.target, dir.join(&tg))?;
        let file = SceneFile {
            background: bg.into(),
            target: tg.into(),
            label: self.label.clone(),
            gt_box: self.gt_box,
        };
        let path = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&file).expect("scene file serializes");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
