//! Feature bundle files and ground-truth tables.
//!
//! Bundle layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "STAB"
//! 4       2     format version (u16, currently 1)
//! 6       4     frame count n (u32)
//! 10      2     W (u16)
//! 12      4     D (u32)
//! 16      1     projected flag (0 or 1)
//! 17      8     projection seed (u64, 0 when unprojected)
//! 25      4nWD  payload: f32, frame-major, then position, then channel
//! ...     8     FNV-1a 64 hash of the payload bytes (u64)
//! ```
//!
//! FNV-1a folds bytes through a bijective per-byte step, so any single-byte
//! change to the payload changes the hash.

use std::fs;
use std::hash::Hasher;
use std::io::{Read, Write};
use std::path::Path;

use fnv::FnvHasher;

use crate::error::{Error, Result};
use crate::model::{FeatureSequence, Trajectory};

pub const MAGIC: [u8; 4] = *b"STAB";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 25;
const FOOTER_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundleHeader {
    pub version: u16,
    pub frames: u32,
    pub width: u16,
    pub dim: u32,
    pub projected: bool,
    pub seed: u64,
}

impl BundleHeader {
    /// Projection seed, or `None` for raw features.
    pub fn projection_seed(&self) -> Option<u64> {
        self.projected.then_some(self.seed)
    }

    fn payload_len(&self) -> usize {
        self.frames as usize * self.width as usize * self.dim as usize * 4
    }

    fn encode(&self) -> [u8; HEADER_LEN] {
        let mut h = [0u8; HEADER_LEN];
        h[0..4].copy_from_slice(&MAGIC);
        h[4..6].copy_from_slice(&self.version.to_le_bytes());
        h[6..10].copy_from_slice(&self.frames.to_le_bytes());
        h[10..12].copy_from_slice(&self.width.to_le_bytes());
        h[12..16].copy_from_slice(&self.dim.to_le_bytes());
        h[16] = u8::from(self.projected);
        h[17..25].copy_from_slice(&self.seed.to_le_bytes());
        h
    }

    fn decode(h: &[u8]) -> Result<Self> {
        if h.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "header truncated at {} bytes",
                h.len()
            )));
        }
        if h[0..4] != MAGIC {
            return Err(Error::Format("bad magic, not a feature bundle".into()));
        }
        let version = u16::from_le_bytes([h[4], h[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {version}"
            )));
        }
        let projected = match h[16] {
            0 => false,
            1 => true,
            other => {
                return Err(Error::Format(format!(
                    "projected flag must be 0 or 1, got {other}"
                )))
            }
        };
        let seed = u64::from_le_bytes(h[17..25].try_into().unwrap());
        if !projected && seed != 0 {
            return Err(Error::Format(
                "unprojected bundle carries a projection seed".into(),
            ));
        }
        Ok(Self {
            version,
            frames: u32::from_le_bytes(h[6..10].try_into().unwrap()),
            width: u16::from_le_bytes([h[10], h[11]]),
            dim: u32::from_le_bytes(h[12..16].try_into().unwrap()),
            projected,
            seed,
        })
    }
}

/// Frames plus the projection provenance recorded in the header.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    pub trajectory: Trajectory,
    pub projection_seed: Option<u64>,
}

impl FeatureBundle {
    pub fn raw(trajectory: Trajectory) -> Self {
        Self {
            trajectory,
            projection_seed: None,
        }
    }

    pub fn header(&self) -> Result<BundleHeader> {
        let (w, d) = self.trajectory.shape().unwrap_or((0, 0));
        let too_big = |what: &str| Error::Format(format!("{what} does not fit the header field"));
        Ok(BundleHeader {
            version: FORMAT_VERSION,
            frames: u32::try_from(self.trajectory.len()).map_err(|_| too_big("frame count"))?,
            width: u16::try_from(w).map_err(|_| too_big("W"))?,
            dim: u32::try_from(d).map_err(|_| too_big("D"))?,
            projected: self.projection_seed.is_some(),
            seed: self.projection_seed.unwrap_or(0),
        })
    }

    /// Errors unless both bundles share `(W, D)` and projection seed.
    pub fn ensure_compatible(&self, query: &FeatureBundle) -> Result<()> {
        if self.projection_seed != query.projection_seed {
            return Err(Error::SeedMismatch {
                reference: self.projection_seed,
                query: query.projection_seed,
            });
        }
        match (self.trajectory.shape(), query.trajectory.shape()) {
            (Some(a), Some(b)) if a != b => Err(Error::ShapeMismatch {
                left_width: a.0,
                left_dim: a.1,
                right_width: b.0,
                right_dim: b.1,
            }),
            _ => Ok(()),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = self.header()?;
        let mut out = Vec::with_capacity(HEADER_LEN + header.payload_len() + FOOTER_LEN);
        out.extend_from_slice(&header.encode());
        for frame in self.trajectory.frames() {
            for &v in frame.flat() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        let hash = payload_hash(&out[HEADER_LEN..]);
        out.extend_from_slice(&hash.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = BundleHeader::decode(bytes)?;
        let expected_len = HEADER_LEN + header.payload_len() + FOOTER_LEN;
        if bytes.len() != expected_len {
            return Err(Error::Format(format!(
                "expected {expected_len} bytes for {} frames of {}x{}, found {}",
                header.frames,
                header.width,
                header.dim,
                bytes.len()
            )));
        }
        let payload = &bytes[HEADER_LEN..HEADER_LEN + header.payload_len()];
        let stored = u64::from_le_bytes(bytes[expected_len - FOOTER_LEN..].try_into().unwrap());
        let found = payload_hash(payload);
        if stored != found {
            return Err(Error::Checksum {
                expected: stored,
                found,
            });
        }
        let (w, d) = (header.width as usize, header.dim as usize);
        let frame_bytes = w * d * 4;
        let frames = if frame_bytes == 0 {
            if header.frames > 0 {
                return Err(Error::Format("frames declared with W = 0 or D = 0".into()));
            }
            Vec::new()
        } else {
            payload
                .chunks_exact(frame_bytes)
                .enumerate()
                .map(|(i, chunk)| {
                    let values = chunk
                        .chunks_exact(4)
                        .map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap())))
                        .collect();
                    FeatureSequence::from_flat(i as u64, w, d, values)
                })
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Self {
            trajectory: Trajectory::new(frames)?,
            projection_seed: header.projection_seed(),
        })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes()?)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

pub fn payload_hash(payload: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(payload);
    h.finish()
}

/// Writes `query_index,reference_index` rows; `-1` marks "no true match".
/// Lines starting with `#` carry free-form provenance.
pub fn write_ground_truth<W: Write>(
    w: W,
    truth: &[Option<usize>],
    comments: &[String],
) -> Result<()> {
    let mut w = w;
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["query_index", "reference_index"])?;
    for (q, r) in truth.iter().enumerate() {
        let r = r.map_or(-1, |r| r as i64);
        csv.write_record([q.to_string(), r.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_ground_truth<R: Read>(r: R) -> Result<Vec<Option<usize>>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut out = Vec::new();
    for (row, rec) in reader.deserialize::<(usize, i64)>().enumerate() {
        let (q, r) = rec?;
        if q != row {
            return Err(Error::GroundTruth(format!(
                "query indices must be contiguous from 0: row {row} has index {q}"
            )));
        }
        out.push(match r {
            -1 => None,
            r if r >= 0 => Some(r as usize),
            r => {
                return Err(Error::GroundTruth(format!(
                    "invalid reference index {r} in row {row}"
                )))
            }
        });
    }
    Ok(out)
}

pub fn save_ground_truth(
    path: impl AsRef<Path>,
    truth: &[Option<usize>],
    comments: &[String],
) -> Result<()> {
    write_ground_truth(fs::File::create(path)?, truth, comments)
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<Vec<Option<usize>>> {
    read_ground_truth(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> FeatureBundle {
        let frames = (0..3)
            .map(|i| {
                FeatureSequence::from_flat(
                    i,
                    2,
                    3,
                    (0..6).map(|v| (v + i as usize) as f64 * 0.25).collect(),
                )
                .unwrap()
            })
            .collect();
        FeatureBundle::raw(Trajectory::new(frames).unwrap())
    }

    #[test]
    fn header_layout_is_fixed() {
        let bytes = tiny().to_bytes().unwrap();
        assert_eq!(&bytes[0..4], b"STAB");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..10], &[3, 0, 0, 0]);
        assert_eq!(&bytes[10..12], &[2, 0]);
        assert_eq!(&bytes[12..16], &[3, 0, 0, 0]);
        assert_eq!(bytes[16], 0);
        assert_eq!(&bytes[17..25], &[0; 8]);
        assert_eq!(bytes.len(), HEADER_LEN + 3 * 2 * 3 * 4 + 8);
        // frame 1, position 0, channel 1 = (1 + 1) * 0.25
        let off = HEADER_LEN + (6 + 1) * 4;
        assert_eq!(
            f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()),
            0.5
        );
    }

    #[test]
    fn rejects_damage() {
        let bytes = tiny().to_bytes().unwrap();
        assert!(matches!(
            FeatureBundle::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Format(_))
        ));
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            FeatureBundle::from_bytes(&bad_magic),
            Err(Error::Format(_))
        ));
        let mut flipped = bytes.clone();
        flipped[HEADER_LEN + 5] ^= 0x40;
        assert!(matches!(
            FeatureBundle::from_bytes(&flipped),
            Err(Error::Checksum { .. })
        ));
    }

    #[test]
    fn seed_mismatch_is_reported() {
        let a = tiny();
        let b = FeatureBundle {
            projection_seed: Some(4),
            ..tiny()
        };
        assert!(matches!(
            a.ensure_compatible(&b),
            Err(Error::SeedMismatch { .. })
        ));
        assert!(a.ensure_compatible(&tiny()).is_ok());
    }

    #[test]
    fn ground_truth_round_trip() {
        let truth = vec![Some(0), Some(2), None, Some(7)];
        let mut buf = Vec::new();
        write_ground_truth(&mut buf, &truth, &["seed=3".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed=3\nquery_index,reference_index\n0,0\n"));
        assert!(text.contains("2,-1"));
        assert_eq!(read_ground_truth(buf.as_slice()).unwrap(), truth);
    }

    #[test]
    fn ground_truth_rejects_gaps() {
        let text = "query_index,reference_index\n0,1\n2,3\n";
        assert!(matches!(
            read_ground_truth(text.as_bytes()),
            Err(Error::GroundTruth(_))
        ));
        let text = "query_index,reference_index\n0,-4\n";
        assert!(read_ground_truth(text.as_bytes()).is_err());
    }
}
