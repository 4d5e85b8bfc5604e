//! Versioned file formats: scenes and renders as JSON Lines, manifests as one JSON
//! document, predictions as JSON Lines.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::generate::DatasetManifest;
use crate::mask::Mask;
use crate::render::{ObjectRender, RenderResult};
use crate::scene::{ObjectId, SceneGraph};
use crate::{Error, Result};

/// Version written into every scene, render, and prediction record.
pub const FORMAT_VERSION: &str = "1.0";
const SUPPORTED_MAJOR: u32 = 1;

/// Accepts any `1.x` version string.
pub fn check_version(found: &str) -> Result<()> {
    let major = found.split('.').next().and_then(|m| m.parse::<u32>().ok());
    if major == Some(SUPPORTED_MAJOR) {
        Ok(())
    } else {
        Err(Error::UnsupportedVersion {
            found: found.to_string(),
            supported: SUPPORTED_MAJOR,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub format_version: String,
    #[serde(flatten)]
    pub scene: SceneGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderRecord {
    pub format_version: String,
    pub scene_id: usize,
    pub width: usize,
    pub height: usize,
    pub objects: Vec<ObjectRender>,
}

impl RenderRecord {
    pub fn new(scene_id: usize, render: &RenderResult) -> Self {
        RenderRecord {
            format_version: FORMAT_VERSION.into(),
            scene_id,
            width: render.width,
            height: render.height,
            objects: render.objects.clone(),
        }
    }

    /// Rebuilds the depth buffer from the visible masks.
    pub fn into_render(self) -> Result<RenderResult> {
        let mut depth_buffer = vec![None; self.width * self.height];
        for obj in &self.objects {
            if obj.visible_mask.dims() != (self.width, self.height) || obj.full_mask.dims() != (self.width, self.height)
            {
                return Err(Error::Format(format!(
                    "object {} mask size differs from the render",
                    obj.id
                )));
            }
            for i in obj.visible_mask.ones() {
                if depth_buffer[i].replace(obj.id).is_some() {
                    return Err(Error::Format(format!("visible masks overlap at pixel {i}")));
                }
            }
        }
        Ok(RenderResult {
            width: self.width,
            height: self.height,
            objects: self.objects,
            depth_buffer,
        })
    }
}

/// One line of a predictions file. Exactly one of `rle_mask` and `candidate_id` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub expression_id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rle_mask: Option<Mask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_id: Option<ObjectId>,
    /// One mask per program node, for step-wise scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_rle_masks: Option<Vec<Mask>>,
}

impl PredictionRecord {
    pub fn mask(expression_id: usize, mask: Mask) -> Self {
        PredictionRecord {
            expression_id,
            rle_mask: Some(mask),
            candidate_id: None,
            step_rle_masks: None,
        }
    }

    pub fn candidate(expression_id: usize, candidate: ObjectId) -> Self {
        PredictionRecord {
            expression_id,
            rle_mask: None,
            candidate_id: Some(candidate),
            step_rle_masks: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rle_mask.is_some() == self.candidate_id.is_some() {
            return Err(Error::Format(format!(
                "prediction for expression {} must set exactly one of rle_mask and candidate_id",
                self.expression_id
            )));
        }
        Ok(())
    }
}

/// Writes one compact JSON document per line.
pub fn write_jsonl<T: Serialize, W: Write>(mut out: W, items: impl IntoIterator<Item = T>) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, &item)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads JSON Lines, skipping blank lines. Errors name the 1-based line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(input: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Format(format!("line {}: {e}", n + 1)))?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_scenes<W: Write>(out: W, scenes: &[SceneGraph]) -> Result<()> {
    write_jsonl(
        out,
        scenes.iter().map(|s| SceneRecord {
            format_version: FORMAT_VERSION.into(),
            scene: s.clone(),
        }),
    )
}

pub fn read_scenes<R: BufRead>(input: R) -> Result<Vec<SceneGraph>> {
    let records: Vec<serde_json::Value> = read_jsonl(input)?;
    records
        .into_iter()
        .map(|value| {
            let version = value
                .get("format_version")
                .and_then(|v| v.as_str())
                .unwrap_or("missing");
            check_version(version)?;
            let record: SceneRecord = serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
            record.scene.validate()?;
            Ok(record.scene)
        })
        .collect()
}

pub fn write_renders<W: Write>(out: W, scenes: &[SceneGraph], renders: &[RenderResult]) -> Result<()> {
    write_jsonl(
        out,
        scenes
            .iter()
            .zip(renders)
            .map(|(s, r)| RenderRecord::new(s.scene_id, r)),
    )
}

pub fn read_renders<R: BufRead>(input: R) -> Result<Vec<(usize, RenderResult)>> {
    let records: Vec<serde_json::Value> = read_jsonl(input)?;
    records
        .into_iter()
        .map(|value| {
            let version = value
                .get("format_version")
                .and_then(|v| v.as_str())
                .unwrap_or("missing");
            check_version(version)?;
            let record: RenderRecord = serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
            Ok((record.scene_id, record.into_render()?))
        })
        .collect()
}

pub fn write_manifest<W: Write>(mut out: W, manifest: &DatasetManifest) -> Result<()> {
    serde_json::to_writer(&mut out, manifest)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_manifest<R: BufRead>(input: R) -> Result<DatasetManifest> {
    let value: serde_json::Value = serde_json::from_reader(input).map_err(|e| Error::Format(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_str())
        .unwrap_or("missing");
    check_version(version)?;
    serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_predictions<W: Write>(out: W, predictions: &[PredictionRecord]) -> Result<()> {
    write_jsonl(out, predictions)
}

pub fn read_predictions<R: BufRead>(input: R) -> Result<Vec<PredictionRecord>> {
    let records: Vec<PredictionRecord> = read_jsonl(input)?;
    for r in &records {
        r.validate()?;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::rasterize;
    use crate::scene::{sample_scene, SceneConfig};

    #[test]
    fn versions() {
        assert!(check_version("1.0").is_ok());
        assert!(check_version("1.7").is_ok());
        assert!(matches!(check_version("2.0"), Err(Error::UnsupportedVersion { .. })));
        assert!(check_version("x").is_err());
    }

    #[test]
    fn scenes_round_trip() {
        let scenes: Vec<SceneGraph> = (0..3)
            .map(|i| sample_scene(i, i as u64, &SceneConfig::default()).unwrap())
            .collect();
        let mut buf = Vec::new();
        write_scenes(&mut buf, &scenes).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 3);
        assert_eq!(read_scenes(&buf[..]).unwrap(), scenes);
        let bumped = String::from_utf8(buf)
            .unwrap()
            .replace("\"format_version\":\"1.0\"", "\"format_version\":\"2.0\"");
        assert!(matches!(
            read_scenes(bumped.as_bytes()),
            Err(Error::UnsupportedVersion { .. })
        ));
    }

    #[test]
    fn renders_round_trip() {
        let scene = sample_scene(0, 4, &SceneConfig::default()).unwrap();
        let render = rasterize(&scene);
        let mut buf = Vec::new();
        write_renders(&mut buf, std::slice::from_ref(&scene), std::slice::from_ref(&render)).unwrap();
        let back = read_renders(&buf[..]).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].1, render);
    }

    #[test]
    fn prediction_tracks() {
        let ok = r#"{"expression_id": 3, "candidate_id": 1}"#;
        assert_eq!(read_predictions(ok.as_bytes()).unwrap()[0].candidate_id, Some(1));
        let both = r#"{"expression_id": 3, "candidate_id": 1, "rle_mask": {"size": [1, 1], "counts": "1"}}"#;
        assert!(read_predictions(both.as_bytes()).is_err());
        let neither = r#"{"expression_id": 3}"#;
        assert!(read_predictions(neither.as_bytes()).is_err());
        let bad_mask = r#"{"expression_id": 3, "rle_mask": {"size": [2, 2], "counts": "1"}}"#;
        assert!(matches!(read_predictions(bad_mask.as_bytes()), Err(Error::Format(_))));
    }
}
