//! On-disk formats: frame directories, the `PBSEQ1` raw container, mask
//! directories, detection JSON and embedding text files.
//!
//! Every writer goes through [`atomic_write`], so a crashed run never leaves
//! a half-written output behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, ImageFormat, Luma, Rgb};
use serde::{Deserialize, Serialize};

use super::{DetectionSet, EmbeddingSet, Frame, FrameSequence, OcclusionMask, Rational};
use crate::error::{Error, Result};

pub const RAW_MAGIC: &[u8; 6] = b"PBSEQ1";
const RAW_HEADER_LEN: usize = 6 + 4 + 4 + 1 + 4 + 8 + 8;

/// Sidecar written next to frame directories so timestamps survive a round trip.
pub const SEQUENCE_META: &str = "sequence.json";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceMeta {
    fps: Rational,
    timestamps: Vec<Rational>,
}

/// Write `bytes` to `path` via a temporary file in the same directory.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn encode_png(frame: &Frame) -> Result<Vec<u8>> {
    let mut out = std::io::Cursor::new(Vec::new());
    let (w, h) = (frame.width(), frame.height());
    let res = if frame.channels() == 3 {
        ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, frame.data())
            .expect("frame length checked at construction")
            .write_to(&mut out, ImageFormat::Png)
    } else {
        ImageBuffer::<Luma<u8>, _>::from_raw(w, h, frame.data())
            .expect("frame length checked at construction")
            .write_to(&mut out, ImageFormat::Png)
    };
    res.map_err(|e| Error::Format(format!("png encode: {e}")))?;
    Ok(out.into_inner())
}

pub fn write_png(path: &Path, frame: &Frame) -> Result<()> {
    atomic_write(path, &encode_png(frame)?)
}

/// Decodes an image file. Grayscale sources stay one-channel; anything else
/// is converted to RGB (alpha dropped).
pub fn read_image(path: &Path) -> std::result::Result<Frame, String> {
    let img = image::open(path).map_err(|e| e.to_string())?;
    let frame = match img.color() {
        image::ColorType::L8 | image::ColorType::L16 | image::ColorType::La8 | image::ColorType::La16 => {
            let g = img.into_luma8();
            Frame::new(g.width(), g.height(), 1, g.into_raw())
        }
        _ => {
            let rgb = img.into_rgb8();
            Frame::new(rgb.width(), rgb.height(), 3, rgb.into_raw())
        }
    };
    frame.map_err(|e| e.to_string())
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.eq_ignore_ascii_case("png"))
        .unwrap_or(false)
}

/// Image files of a directory in lexicographic order.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    files.retain(|p| p.is_file() && is_image(p));
    files.sort();
    Ok(files)
}

/// Loads a frame directory or a raw container.
///
/// For directories the timestamps come from `fps` when given, else from the
/// `sequence.json` sidecar; with neither the load fails. For raw containers
/// `fps` overrides the header rate.
pub fn load_sequence(path: &Path, fps: Option<Rational>) -> Result<FrameSequence> {
    if path.is_dir() {
        load_frame_dir(path, fps)
    } else {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let seq = decode_raw(&bytes)?;
        match fps {
            Some(fps) => FrameSequence::at_fps(seq.into_frames(), fps),
            None => Ok(seq),
        }
    }
}

fn load_frame_dir(dir: &Path, fps: Option<Rational>) -> Result<FrameSequence> {
    let files = list_images(dir)?;
    if files.is_empty() {
        return Err(Error::NoFrames);
    }
    let frames = files
        .iter()
        .enumerate()
        .map(|(index, path)| {
            read_image(path).map_err(|reason| Error::Load {
                index,
                path: path.clone(),
                reason,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(fps) = fps {
        return FrameSequence::at_fps(frames, fps);
    }
    let meta_path = dir.join(SEQUENCE_META);
    if !meta_path.exists() {
        return Err(Error::Config(format!(
            "{}: no fps given and no {SEQUENCE_META}",
            dir.display()
        )));
    }
    let meta: SequenceMeta = serde_json::from_str(&read_text(&meta_path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", meta_path.display())))?;
    if meta.timestamps.len() != frames.len() {
        return Err(Error::Structure(format!(
            "{} lists {} timestamps for {} frames",
            meta_path.display(),
            meta.timestamps.len(),
            frames.len()
        )));
    }
    let frames = frames
        .into_iter()
        .zip(meta.timestamps)
        .map(|(f, t)| f.with_timestamp(t))
        .collect();
    FrameSequence::new(frames, meta.fps)
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.png")
}

/// Writes `frame_%06d.png` files plus the timestamp sidecar.
pub fn save_frame_dir(dir: &Path, seq: &FrameSequence) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, f) in seq.frames().iter().enumerate() {
        write_png(&dir.join(frame_file_name(i)), f)?;
    }
    let meta = SequenceMeta {
        fps: seq.nominal_fps(),
        timestamps: seq.frames().iter().map(|f| f.timestamp).collect(),
    };
    let json = serde_json::to_string_pretty(&meta).expect("meta serialises");
    atomic_write(&dir.join(SEQUENCE_META), json.as_bytes())
}

pub fn encode_raw(seq: &FrameSequence) -> Result<Vec<u8>> {
    let (w, h, c) = seq.shape().ok_or(Error::NoFrames)?;
    let frame_len = w as usize * h as usize * c as usize;
    let mut out = Vec::with_capacity(RAW_HEADER_LEN + frame_len * seq.len());
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&w.to_le_bytes());
    out.extend_from_slice(&h.to_le_bytes());
    out.push(c);
    let count = u32::try_from(seq.len())
        .map_err(|_| Error::Range("too many frames for raw container".into()))?;
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&seq.nominal_fps().numer().to_le_bytes());
    out.extend_from_slice(&seq.nominal_fps().denom().to_le_bytes());
    for f in seq.frames() {
        out.extend_from_slice(f.data());
    }
    Ok(out)
}

pub fn decode_raw(bytes: &[u8]) -> Result<FrameSequence> {
    if bytes.len() < RAW_HEADER_LEN || &bytes[..6] != RAW_MAGIC {
        return Err(Error::Format("not a PBSEQ1 container".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let width = u32_at(6);
    let height = u32_at(10);
    let channels = bytes[14];
    let count = u32_at(15) as usize;
    let (num, den) = (u64_at(19), u64_at(27));
    if count == 0 {
        return Err(Error::NoFrames);
    }
    if num == 0 || den == 0 {
        return Err(Error::Format("raw container fps must be positive".into()));
    }
    let frame_len = width as usize * height as usize * channels as usize;
    let payload = &bytes[RAW_HEADER_LEN..];
    if payload.len() != frame_len * count {
        return Err(Error::Format(format!(
            "raw payload is {} bytes, header implies {}",
            payload.len(),
            frame_len * count
        )));
    }
    let frames = payload
        .chunks_exact(frame_len)
        .enumerate()
        .map(|(index, chunk)| {
            Frame::new(width, height, channels, chunk.to_vec()).map_err(|e| Error::Load {
                index,
                path: PathBuf::from("<raw>"),
                reason: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::at_fps(frames, Rational::new(num, den))
}

pub fn save_raw(path: &Path, seq: &FrameSequence) -> Result<()> {
    atomic_write(path, &encode_raw(seq)?)
}

pub fn mask_file_name(index: usize) -> String {
    format!("mask_{index:06}.png")
}

pub fn load_masks(dir: &Path) -> Result<Vec<OcclusionMask>> {
    list_images(dir)?
        .iter()
        .enumerate()
        .map(|(index, path)| {
            let load_err = |reason: String| Error::Load {
                index,
                path: path.clone(),
                reason,
            };
            let img = read_image(path).map_err(load_err)?;
            let gray = img.to_grayscale();
            OcclusionMask::from_gray(&gray).map_err(|e| load_err(e.to_string()))
        })
        .collect()
}

pub fn save_masks(dir: &Path, masks: &[OcclusionMask]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, m) in masks.iter().enumerate() {
        write_png(&dir.join(mask_file_name(i)), &m.to_gray())?;
    }
    Ok(())
}

pub fn load_detections(path: &Path) -> Result<DetectionSet> {
    DetectionSet::from_json(&read_text(path)?)
}

pub fn save_detections(path: &Path, det: &DetectionSet) -> Result<()> {
    atomic_write(path, det.to_json().as_bytes())
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingSet> {
    EmbeddingSet::parse(&read_text(path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn save_embeddings(path: &Path, es: &EmbeddingSet) -> Result<()> {
    atomic_write(path, es.to_text().as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(n: usize, w: u32, h: u32, c: u8) -> FrameSequence {
        let frames = (0..n)
            .map(|i| {
                let data = (0..w * h * c as u32).map(|j| (j as usize * 3 + i * 11) as u8).collect();
                Frame::new(w, h, c, data).unwrap()
            })
            .collect();
        FrameSequence::at_fps(frames, Rational::integer(3)).unwrap()
    }

    #[test]
    fn directory_round_trip_keeps_timestamps() {
        let dir = tempfile::tempdir().unwrap();
        let s = seq(4, 5, 3, 3);
        save_frame_dir(dir.path(), &s).unwrap();
        assert_eq!(load_sequence(dir.path(), None).unwrap(), s);
        let at_one = load_sequence(dir.path(), Some(Rational::integer(1))).unwrap();
        assert_eq!(at_one.frames()[3].timestamp, Rational::integer(3));
    }

    #[test]
    fn directory_of_thirty_at_three_fps() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..30 {
            write_png(&dir.path().join(frame_file_name(i)), &Frame::filled(2, 2, 3, 9).unwrap())
                .unwrap();
        }
        let s = load_sequence(dir.path(), Some(Rational::integer(3))).unwrap();
        assert_eq!(s.len(), 30);
        assert_eq!(s.frames()[29].timestamp, Rational::new(29, 3));
    }

    #[test]
    fn empty_directory_is_no_frames() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_sequence(dir.path(), Some(Rational::integer(1))),
            Err(Error::NoFrames)
        ));
    }

    #[test]
    fn mixed_sizes_are_structural() {
        let dir = tempfile::tempdir().unwrap();
        write_png(&dir.path().join(frame_file_name(0)), &Frame::filled(2, 2, 3, 0).unwrap()).unwrap();
        write_png(&dir.path().join(frame_file_name(1)), &Frame::filled(3, 2, 3, 0).unwrap()).unwrap();
        assert!(matches!(
            load_sequence(dir.path(), Some(Rational::integer(1))),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn corrupt_file_names_index() {
        let dir = tempfile::tempdir().unwrap();
        write_png(&dir.path().join(frame_file_name(0)), &Frame::filled(2, 2, 3, 0).unwrap()).unwrap();
        fs::write(dir.path().join(frame_file_name(1)), b"not a png").unwrap();
        match load_sequence(dir.path(), Some(Rational::integer(1))) {
            Err(Error::Load { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn raw_header_layout() {
        let s = seq(2, 3, 2, 1);
        let bytes = encode_raw(&s).unwrap();
        assert_eq!(&bytes[..6], b"PBSEQ1");
        assert_eq!(&bytes[6..10], &3u32.to_le_bytes());
        assert_eq!(&bytes[10..14], &2u32.to_le_bytes());
        assert_eq!(bytes[14], 1);
        assert_eq!(&bytes[15..19], &2u32.to_le_bytes());
        assert_eq!(&bytes[19..27], &3u64.to_le_bytes());
        assert_eq!(&bytes[27..35], &1u64.to_le_bytes());
        assert_eq!(bytes.len(), 35 + 12);
        assert!(decode_raw(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_raw(b"PBSEQ2").is_err());
    }

    #[test]
    fn masks_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let masks = vec![
            OcclusionMask::from_boxes(4, 4, &[super::super::Rect::new(0, 0, 2, 2)]),
            OcclusionMask::clear(4, 4),
        ];
        save_masks(dir.path(), &masks).unwrap();
        assert_eq!(load_masks(dir.path()).unwrap(), masks);
    }

    proptest! {
        #[test]
        fn raw_round_trip_is_pixel_exact(n in 1usize..5, w in 1u32..6, h in 1u32..6, rgb in any::<bool>(),
                                         num in 1u64..60, den in 1u64..4) {
            let c = if rgb { 3 } else { 1 };
            let s = seq(n, w, h, c);
            let s = FrameSequence::at_fps(s.into_frames(), Rational::new(num, den)).unwrap();
            let back = decode_raw(&encode_raw(&s).unwrap()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
