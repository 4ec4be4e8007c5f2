//! Binary model files.
//!
//! All integers and floats are little-endian; the header is 112 bytes.
//!
//! | offset | type      | field                                   |
//! |--------|-----------|-----------------------------------------|
//! | 0      | `[u8; 8]` | magic `JCUNFOLD`                        |
//! | 8      | `u32`     | format version (1)                      |
//! | 12     | `u32`     | `N` antennas                            |
//! | 16     | `u32`     | `L` layers                              |
//! | 20     | `u32`     | `K` users seen in training              |
//! | 24     | `f64`     | `rho`                                   |
//! | 32     | `f64`     | `P_T` (W)                               |
//! | 40     | `u64`     | training seed                           |
//! | 48     | `f64`     | initial learning rate                   |
//! | 56     | `f64`     | learning-rate decay factor              |
//! | 64     | `u64`     | decay period (steps)                    |
//! | 72     | `u64`     | batch size                              |
//! | 80     | `u64`     | training steps                          |
//! | 88     | `f64`     | final training loss (NaN if untrained)  |
//! | 96     | `u32`     | init scheme: 0 = gradient step, 1 = random, 2 = halved gradient step |
//! | 100    | `u32`     | reserved (zero)                         |
//! | 104    | `f64`     | init step or scale (informational)      |
//!
//! The payload follows: for each layer, the vectors `w1, b1, w2, b2, w3, b3,
//! w4, b4`, each `2N` `f64` values. The file length must match exactly.

use std::fs;
use std::path::Path;

use crate::error::{Error, LoadError, Result};

use super::{InitScheme, ModelMeta, UnfoldLayer, UnfoldModel};

pub const MAGIC: &[u8; 8] = b"JCUNFOLD";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 112;

pub fn encode_model(model: &UnfoldModel) -> Vec<u8> {
    let dim = model.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + model.num_parameters() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(model.n as u32).to_le_bytes());
    out.extend_from_slice(&(model.layers.len() as u32).to_le_bytes());
    out.extend_from_slice(&(model.meta.users as u32).to_le_bytes());
    out.extend_from_slice(&model.rho.to_le_bytes());
    out.extend_from_slice(&model.p_t.to_le_bytes());
    out.extend_from_slice(&model.meta.seed.to_le_bytes());
    out.extend_from_slice(&model.meta.learning_rate.to_le_bytes());
    out.extend_from_slice(&model.meta.decay.to_le_bytes());
    out.extend_from_slice(&model.meta.decay_every.to_le_bytes());
    out.extend_from_slice(&model.meta.batch_size.to_le_bytes());
    out.extend_from_slice(&model.meta.steps.to_le_bytes());
    out.extend_from_slice(&model.meta.final_loss.to_le_bytes());
    let (code, param) = match model.meta.init {
        InitScheme::Pgd { step } => (0u32, step.unwrap_or(0.0)),
        InitScheme::Random { scale } => (1u32, scale),
        InitScheme::SlopeMatched { step } => (2u32, step.unwrap_or(0.0)),
    };
    out.extend_from_slice(&code.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&param.to_le_bytes());
    debug_assert_eq!(out.len(), HEADER_LEN);
    for layer in &model.layers {
        for v in layer.vectors() {
            debug_assert_eq!(v.len(), dim);
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const W: usize>(&mut self) -> std::result::Result<[u8; W], LoadError> {
        let end = self.pos + W;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| LoadError::Corrupt(format!("truncated at byte {}", self.bytes.len())))?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice has width W"))
    }

    fn u32(&mut self) -> std::result::Result<u32, LoadError> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> std::result::Result<u64, LoadError> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> std::result::Result<f64, LoadError> {
        self.take::<8>().map(f64::from_le_bytes)
    }
}

pub fn decode_model(bytes: &[u8]) -> std::result::Result<UnfoldModel, LoadError> {
    let mut r = Reader { bytes, pos: 0 };
    if bytes.len() < MAGIC.len() || &r.take::<8>()? != MAGIC {
        return Err(LoadError::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(LoadError::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let n = r.u32()? as usize;
    let layers = r.u32()? as usize;
    let users = r.u32()? as usize;
    let rho = r.f64()?;
    let p_t = r.f64()?;
    let seed = r.u64()?;
    let learning_rate = r.f64()?;
    let decay = r.f64()?;
    let decay_every = r.u64()?;
    let batch_size = r.u64()?;
    let steps = r.u64()?;
    let final_loss = r.f64()?;
    let init_code = r.u32()?;
    let _reserved = r.u32()?;
    let init_param = r.f64()?;
    let init = match init_code {
        0 => InitScheme::Pgd {
            step: (init_param != 0.0).then_some(init_param),
        },
        1 => InitScheme::Random { scale: init_param },
        2 => InitScheme::SlopeMatched {
            step: (init_param != 0.0).then_some(init_param),
        },
        other => return Err(LoadError::Corrupt(format!("unknown init scheme {other}"))),
    };
    if n == 0 || layers == 0 {
        return Err(LoadError::Corrupt(format!(
            "header declares N = {n}, L = {layers}"
        )));
    }
    let dim = 2 * n;
    let expected = layers
        .checked_mul(8 * dim * 8)
        .and_then(|p| p.checked_add(HEADER_LEN))
        .ok_or_else(|| LoadError::Corrupt("declared size overflows".into()))?;
    if bytes.len() != expected {
        return Err(LoadError::Corrupt(format!(
            "expected {expected} bytes for N = {n}, L = {layers}, found {}",
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(layers);
    for _ in 0..layers {
        let mut layer = UnfoldLayer::zeros(dim);
        for v in layer.vectors_mut() {
            for x in v.iter_mut() {
                *x = r.f64()?;
            }
        }
        out.push(layer);
    }
    let meta = ModelMeta {
        users,
        seed,
        learning_rate,
        decay,
        decay_every,
        batch_size,
        steps,
        final_loss,
        init,
    };
    UnfoldModel::new(out, n, rho, p_t, meta).map_err(|e| LoadError::Corrupt(e.to_string()))
}

pub fn save_model(model: &UnfoldModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    crate::harness::write_atomic(path, &encode_model(model))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<UnfoldModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes).map_err(|reason| Error::ModelLoad {
        path: path.to_path_buf(),
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> UnfoldModel {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = UnfoldModel::random_init(3, 2, 0.25, 1.5, 0.7, &mut rng).unwrap();
        m.meta.seed = 42;
        m.meta.final_loss = 0.125;
        m
    }

    #[test]
    fn roundtrip_is_exact() {
        let m = model();
        let bytes = encode_model(&m);
        assert_eq!(bytes.len(), HEADER_LEN + 2 * 8 * 6 * 8);
        let back = decode_model(&bytes).unwrap();
        assert_eq!(encode_model(&back), bytes);
        assert_eq!(back.layers, m.layers);
        assert_eq!(back.meta.seed, 42);
    }

    #[test]
    fn untrained_model_roundtrips() {
        let m = UnfoldModel::pgd_init(8, 10, 0.8, 1.0, None).unwrap();
        let bytes = encode_model(&m);
        assert_eq!(encode_model(&decode_model(&bytes).unwrap()), bytes);
    }

    #[test]
    fn damaged_files_rejected() {
        let bytes = encode_model(&model());
        assert!(matches!(
            decode_model(&bytes[..bytes.len() - 3]),
            Err(LoadError::Corrupt(_))
        ));
        assert!(matches!(decode_model(&bytes[..50]), Err(LoadError::Corrupt(_))));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(decode_model(&longer), Err(LoadError::Corrupt(_))));
        let mut wrong = bytes.clone();
        wrong[8] = 9;
        assert_eq!(
            decode_model(&wrong).unwrap_err(),
            LoadError::Version {
                found: 9,
                expected: 1
            }
        );
        assert_eq!(decode_model(b"hello").unwrap_err(), LoadError::BadMagic);
        let mut nan = bytes;
        nan[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(decode_model(&nan), Err(LoadError::Corrupt(_))));
    }
}
