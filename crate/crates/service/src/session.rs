//! Per-session state: the uploaded original, the current edited image, an
//! undo stack and the ordered list of edits that produced `current`.

use std::collections::VecDeque;
use std::path::Path;
use std::time::SystemTime;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use whatif_core::model::DEFAULT_TOP_K;
use whatif_core::raster::DEFAULT_MASK_THRESHOLD;
use whatif_core::{
    classify, decode_image, encode_image, inpaint, mask_from_image, Algorithm, ClassScores, ImageBuffer,
    InpaintOptions, Mask, ModelGraph,
};

use crate::error::ServiceError;

pub const DEFAULT_HISTORY_CAP: usize = 20;

/// One applied inpainting edit, enough to redo it from the prior image.
#[derive(Debug, Clone, PartialEq)]
pub struct EditRecord {
    pub mask: Mask,
    pub algorithm: Algorithm,
    pub options: InpaintOptions,
}

#[derive(Debug, Clone)]
struct Snapshot {
    image: ImageBuffer,
    scores: ClassScores,
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    original: ImageBuffer,
    original_scores: ClassScores,
    current: ImageBuffer,
    scores: ClassScores,
    history: VecDeque<Snapshot>,
    edits: Vec<EditRecord>,
    history_cap: usize,
    created: SystemTime,
}

/// Result of an undo: `changed` is false when the history was already empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UndoOutcome {
    pub changed: bool,
}

impl Session {
    pub fn new(id: String, original: ImageBuffer, scores: ClassScores, history_cap: usize) -> Self {
        Self {
            id,
            current: original.clone(),
            original,
            original_scores: scores.clone(),
            scores,
            history: VecDeque::new(),
            edits: Vec::new(),
            history_cap: history_cap.max(1),
            created: SystemTime::now(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn original(&self) -> &ImageBuffer {
        &self.original
    }

    pub fn original_scores(&self) -> &ClassScores {
        &self.original_scores
    }

    pub fn current(&self) -> &ImageBuffer {
        &self.current
    }

    pub fn scores(&self) -> &ClassScores {
        &self.scores
    }

    pub fn history_depth(&self) -> usize {
        self.history.len()
    }

    pub fn edits(&self) -> &[EditRecord] {
        &self.edits
    }

    pub fn created(&self) -> SystemTime {
        self.created
    }

    pub fn dims(&self) -> (usize, usize) {
        self.original.dims()
    }

    /// Inpaints `current` under `mask`, reclassifies and pushes the previous
    /// state onto the undo stack. On error the session is left untouched.
    pub fn apply_inpaint(
        &mut self,
        graph: &ModelGraph,
        mask: Mask,
        algorithm: Algorithm,
        options: InpaintOptions,
    ) -> Result<(), ServiceError> {
        let next = inpaint(&self.current, &mask, algorithm, &options)?;
        let scores = classify(graph, &next, DEFAULT_TOP_K)?;

        let prev_image = std::mem::replace(&mut self.current, next);
        let prev_scores = std::mem::replace(&mut self.scores, scores);
        self.history.push_back(Snapshot {
            image: prev_image,
            scores: prev_scores,
        });
        while self.history.len() > self.history_cap {
            self.history.pop_front();
        }
        self.edits.push(EditRecord {
            mask,
            algorithm,
            options,
        });
        Ok(())
    }

    pub fn undo(&mut self) -> UndoOutcome {
        match self.history.pop_back() {
            Some(prev) => {
                self.current = prev.image;
                self.scores = prev.scores;
                self.edits.pop();
                UndoOutcome { changed: true }
            }
            None => UndoOutcome { changed: false },
        }
    }

    /// Back to the uploaded image. History and the edit list are cleared.
    pub fn reset(&mut self) {
        self.current = self.original.clone();
        self.scores = self.original_scores.clone();
        self.history.clear();
        self.edits.clear();
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            id: self.id.clone(),
            original: RawImage::from(&self.original),
            edits: self.edits.iter().map(SnapshotEdit::from).collect(),
        }
    }
}

/// Lossless serialization of an [`ImageBuffer`]: samples are stored as
/// little-endian `f32` bytes, base64 encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: String,
}

impl From<&ImageBuffer> for RawImage {
    fn from(img: &ImageBuffer) -> Self {
        let bytes: Vec<u8> = img.data().iter().flat_map(|v| v.to_le_bytes()).collect();
        Self {
            width: img.width(),
            height: img.height(),
            channels: img.channels(),
            data: STANDARD.encode(bytes),
        }
    }
}

impl RawImage {
    pub fn to_image(&self) -> Result<ImageBuffer, ServiceError> {
        let bytes = STANDARD
            .decode(&self.data)
            .map_err(|e| ServiceError::BadRequest(format!("snapshot image: {e}")))?;
        if bytes.len() % 4 != 0 {
            return Err(ServiceError::BadRequest("snapshot image: truncated sample data".into()));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok(ImageBuffer::new(self.width, self.height, self.channels, data)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEdit {
    /// Single-channel PNG, base64.
    pub mask: String,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub options: InpaintOptions,
}

impl From<&EditRecord> for SnapshotEdit {
    fn from(edit: &EditRecord) -> Self {
        let png = encode_image(&edit.mask.to_image()).expect("mask raster always encodes");
        Self {
            mask: STANDARD.encode(png),
            algorithm: edit.algorithm,
            options: edit.options,
        }
    }
}

impl SnapshotEdit {
    pub fn decode_mask(&self) -> Result<Mask, ServiceError> {
        let png = STANDARD
            .decode(&self.mask)
            .map_err(|e| ServiceError::BadRequest(format!("snapshot mask: {e}")))?;
        Ok(mask_from_image(&decode_image(&png)?, DEFAULT_MASK_THRESHOLD)?)
    }
}

/// On-disk form of a session: the original image plus its ordered edits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub id: String,
    pub original: RawImage,
    pub edits: Vec<SnapshotEdit>,
}

impl SessionSnapshot {
    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_vec_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, json)
    }

    pub fn read_from(path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    /// Rebuilds the current image by re-running every recorded edit.
    pub fn replay(&self) -> Result<ImageBuffer, ServiceError> {
        let mut img = self.original.to_image()?;
        for edit in &self.edits {
            img = inpaint(&img, &edit.decode_mask()?, edit.algorithm, &edit.options)?;
        }
        Ok(img)
    }
}
