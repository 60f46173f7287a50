//! Binary checkpoint format, all integers and floats little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `CNAVCKPT` |
//! | 4     | format version (u32) |
//! | 7 x 8 | other_obs_dim, ego_dim, lstm_hidden, fc1, fc2, action_count, max_sequence (u64) |
//! | 8     | training episodes completed (u64) |
//! | 8     | optimizer step count (u64) |
//! | 8     | parameter count `P` (u64) |
//! | 4P    | parameters (f32), tensors in [`Tensor::ALL`](super::Tensor::ALL) order, row-major |
//! | 4P    | Adam first moments (f32) |
//! | 4P    | Adam second moments (f32) |

use std::fs;
use std::path::Path;

use super::{AdamState, NetConfig, NetError, NetParams};
use crate::sim::ACTION_COUNT;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CNAVCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

const HEADER_LEN: usize = 8 + 4 + 7 * 8 + 3 * 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: NetParams<f32>,
    pub adam: AdamState,
    /// Training episodes completed when the checkpoint was written.
    pub episodes: u64,
}

impl Checkpoint {
    pub fn new(params: NetParams<f32>) -> Self {
        let adam = AdamState::new(params.len());
        Self {
            params,
            adam,
            episodes: 0,
        }
    }

    pub fn config(&self) -> &NetConfig {
        self.params.config()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let cfg = self.params.config();
        let n = self.params.len();
        let mut out = Vec::with_capacity(HEADER_LEN + 12 * n);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        for d in [
            cfg.other_obs_dim,
            cfg.ego_dim,
            cfg.lstm_hidden,
            cfg.fc_widths[0],
            cfg.fc_widths[1],
            cfg.action_count,
            cfg.max_sequence,
        ] {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        out.extend_from_slice(&self.episodes.to_le_bytes());
        out.extend_from_slice(&self.adam.step.to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        for block in [self.params.as_slice(), &self.adam.m, &self.adam.v] {
            for x in block {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    /// Writes to a sibling temporary file first so a crash never leaves a half-written checkpoint.
    pub fn save(&self, path: &Path) -> Result<(), NetError> {
        let io = |source| NetError::Io {
            path: path.to_path_buf(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        fs::write(&tmp, self.to_bytes()).map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, NetError> {
        let bytes = fs::read(path).map_err(|source| NetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes, path)
    }

    /// Parses a checkpoint; `path` is only used in error messages.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self, NetError> {
        let truncated = |expected| NetError::Truncated {
            path: path.to_path_buf(),
            len: bytes.len(),
            expected,
        };
        if bytes.len() < 12 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(NetError::BadMagic {
                path: path.to_path_buf(),
            });
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(NetError::CheckpointVersion {
                path: path.to_path_buf(),
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        if bytes.len() < HEADER_LEN {
            return Err(truncated(HEADER_LEN));
        }
        let word = |k: usize| u64::from_le_bytes(bytes[12 + 8 * k..20 + 8 * k].try_into().unwrap());
        let dim = |k: usize| word(k) as usize;
        let config = NetConfig {
            other_obs_dim: dim(0),
            ego_dim: dim(1),
            lstm_hidden: dim(2),
            fc_widths: [dim(3), dim(4)],
            action_count: dim(5),
            max_sequence: dim(6),
        };
        if config.action_count != ACTION_COUNT {
            return Err(NetError::ActionCountMismatch {
                path: path.to_path_buf(),
                found: config.action_count,
                expected: ACTION_COUNT,
            });
        }
        let episodes = word(7);
        let step = word(8);
        let n = dim(9);
        let expected = HEADER_LEN + 12 * n;
        if bytes.len() != expected {
            return Err(truncated(expected));
        }
        let floats = |block: usize| -> Vec<f32> {
            let start = HEADER_LEN + 4 * n * block;
            bytes[start..start + 4 * n]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect()
        };
        let params = NetParams::from_vec(config, floats(0))?;
        if !params.is_finite() {
            return Err(NetError::NonFinite("checkpoint parameters"));
        }
        Ok(Self {
            params,
            adam: AdamState {
                m: floats(1),
                v: floats(2),
                step,
            },
            episodes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let cfg = NetConfig {
            lstm_hidden: 4,
            fc_widths: [5, 6],
            ..NetConfig::default()
        };
        let params = NetParams::init(cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let mut ck = Checkpoint::new(params);
        ck.episodes = 1234;
        ck.adam.step = 77;
        ck.adam.m.iter_mut().enumerate().for_each(|(k, x)| *x = k as f32 * 1e-3);
        ck.adam.v.iter_mut().enumerate().for_each(|(k, x)| *x = k as f32 * 1e-6);
        ck
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/a.ckpt");
        let ck = sample();
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, ck);
    }

    #[test]
    fn truncated_rejected() {
        let bytes = sample().to_bytes();
        for cut in [bytes.len() - 1, HEADER_LEN, 40] {
            let err = Checkpoint::from_bytes(&bytes[..cut], Path::new("x")).unwrap_err();
            assert!(matches!(err, NetError::Truncated { .. }), "{err}");
        }
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(Checkpoint::from_bytes(&longer, Path::new("x")).is_err());
    }

    #[test]
    fn action_count_mismatch_rejected() {
        let mut bytes = sample().to_bytes();
        bytes[12 + 5 * 8] = 11;
        let err = Checkpoint::from_bytes(&bytes, Path::new("x")).unwrap_err();
        assert!(matches!(err, NetError::ActionCountMismatch { found: 11, .. }));
    }

    #[test]
    fn wrong_magic_and_version_rejected() {
        let mut bytes = sample().to_bytes();
        bytes[8] = 9;
        assert!(matches!(
            Checkpoint::from_bytes(&bytes, Path::new("x")),
            Err(NetError::CheckpointVersion { found: 9, .. })
        ));
        assert!(matches!(
            Checkpoint::from_bytes(b"not a checkpoint", Path::new("x")),
            Err(NetError::BadMagic { .. })
        ));
    }
}
