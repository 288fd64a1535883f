use std::fs;
use std::path::Path;

use super::{pgm, GrayImage};
use crate::error::{Error, Result};

/// Ordered frames of uniform size, each with a string id.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<GrayImage>,
    ids: Vec<String>,
}

/// Default frame id: zero-padded index.
pub fn frame_id(index: usize) -> String {
    format!("{index:04}")
}

impl FrameSequence {
    pub fn new(frames: Vec<GrayImage>, ids: Vec<String>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidParameter("empty frame sequence".into()));
        }
        if frames.len() != ids.len() {
            return Err(Error::InvalidParameter(format!(
                "{} frames but {} ids",
                frames.len(),
                ids.len()
            )));
        }
        let dims = frames[0].dims();
        for f in &frames[1..] {
            f.ensure_dims(dims)?;
        }
        Ok(Self { frames, ids })
    }

    /// Ids default to zero-padded indices.
    pub fn from_frames(frames: Vec<GrayImage>) -> Result<Self> {
        let ids = (0..frames.len()).map(frame_id).collect();
        Self::new(frames, ids)
    }

    /// Load every `frame_<digits>.pgm` in `dir`, ordered by numeric index.
    /// The id of each frame is its digit string.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut entries = Vec::new();
        for entry in fs::read_dir(dir).map_err(|e| Error::from(e).in_file(dir))? {
            let entry = entry?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            if let Some(digits) = parse_frame_name(name) {
                let index: u64 = digits
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("frame index {digits}")))?;
                entries.push((index, digits.to_string(), entry.path()));
            }
        }
        if entries.is_empty() {
            return Err(Error::InvalidParameter("no frame_<n>.pgm files found".into()).in_file(dir));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let mut frames = Vec::with_capacity(entries.len());
        let mut ids = Vec::with_capacity(entries.len());
        for (_, id, path) in entries {
            let img = pgm::load(&path)?;
            if let Some(first) = frames.first() {
                img.ensure_dims(GrayImage::dims(first)).map_err(|e| e.in_file(&path))?;
            }
            frames.push(img);
            ids.push(id);
        }
        Self::new(frames, ids)
    }

    /// Write frames as `frame_<id>.pgm`.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for (frame, id) in self.iter() {
            pgm::save(dir.join(format!("frame_{id}.pgm")), frame)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    pub fn frames(&self) -> &[GrayImage] {
        &self.frames
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn frame(&self, index: usize) -> Option<&GrayImage> {
        self.frames.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GrayImage, &str)> {
        self.frames.iter().zip(self.ids.iter().map(String::as_str))
    }
}

fn parse_frame_name(name: &str) -> Option<&str> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".pgm")?;
    (!digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())).then_some(digits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_name_pattern() {
        assert_eq!(parse_frame_name("frame_0012.pgm"), Some("0012"));
        assert_eq!(parse_frame_name("frame_.pgm"), None);
        assert_eq!(parse_frame_name("frame_12a.pgm"), None);
        assert_eq!(parse_frame_name("background.pgm"), None);
    }

    #[test]
    fn rejects_mixed_sizes() {
        let a = GrayImage::filled(2, 2, 0);
        let b = GrayImage::filled(3, 2, 0);
        assert!(FrameSequence::from_frames(vec![a, b]).is_err());
        assert!(FrameSequence::from_frames(vec![]).is_err());
    }

    #[test]
    fn dir_round_trip_orders_numerically() {
        let dir = tempfile::tempdir().unwrap();
        for (i, name) in [(2u8, "frame_10.pgm"), (1, "frame_9.pgm"), (0, "frame_0.pgm")] {
            pgm::save(dir.path().join(name), &GrayImage::filled(2, 1, i)).unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let seq = FrameSequence::load_dir(dir.path()).unwrap();
        assert_eq!(seq.ids(), &["0", "9", "10"]);
        assert_eq!(seq.frame(2).unwrap().get(0, 0), 2);
    }
}
