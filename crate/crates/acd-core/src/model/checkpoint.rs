//! Versioned binary checkpoints for networks and optional optimizer state.

use std::io::{Read, Write};
use std::path::Path;

use super::{AdamWState, Dense, ModelError, Network};

/// File magic of the checkpoint format.
pub const CHECKPOINT_MAGIC: [u8; 4] = *b"ACDM";
const CHECKPOINT_VERSION: u32 = 1;

/// Write a checkpoint: magic, version, layer shapes, f32 little-endian
/// parameters, then an optional optimizer-state block.
pub fn save_checkpoint(
    path: impl AsRef<Path>,
    net: &Network<f32>,
    opt_state: Option<&AdamWState<f32>>,
) -> Result<(), ModelError> {
    let path = path.as_ref();
    let io = |e: std::io::Error| ModelError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    out.write_all(&CHECKPOINT_MAGIC).map_err(io)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes()).map_err(io)?;
    out.write_all(&(net.layers.len() as u32).to_le_bytes())
        .map_err(io)?;
    for layer in &net.layers {
        out.write_all(&(layer.in_dim as u32).to_le_bytes()).map_err(io)?;
        out.write_all(&(layer.out_dim as u32).to_le_bytes()).map_err(io)?;
    }
    for v in net.flatten() {
        out.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    match opt_state {
        None => out.write_all(&[0u8]).map_err(io)?,
        Some(state) => {
            out.write_all(&[1u8]).map_err(io)?;
            out.write_all(&state.step.to_le_bytes()).map_err(io)?;
            for v in state.m.iter().chain(&state.v) {
                out.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)?;
    Ok(())
}

/// Read a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(
    path: impl AsRef<Path>,
) -> Result<(Network<f32>, Option<AdamWState<f32>>), ModelError> {
    let path = path.as_ref();
    let io = |e: std::io::Error| ModelError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    };
    let corrupt = |detail: String| ModelError::CorruptCheckpoint {
        path: path.display().to_string(),
        detail,
    };
    let mut file = std::io::BufReader::new(std::fs::File::open(path).map_err(io)?);

    let mut u32buf = [0u8; 4];
    file.read_exact(&mut u32buf).map_err(io)?;
    if u32buf != CHECKPOINT_MAGIC {
        return Err(corrupt("bad magic".into()));
    }
    file.read_exact(&mut u32buf).map_err(io)?;
    let version = u32::from_le_bytes(u32buf);
    if version != CHECKPOINT_VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    file.read_exact(&mut u32buf).map_err(io)?;
    let n_layers = u32::from_le_bytes(u32buf) as usize;
    if n_layers == 0 || n_layers > 64 {
        return Err(corrupt(format!("implausible layer count {n_layers}")));
    }
    let mut shapes = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        file.read_exact(&mut u32buf).map_err(io)?;
        let in_dim = u32::from_le_bytes(u32buf) as usize;
        file.read_exact(&mut u32buf).map_err(io)?;
        let out_dim = u32::from_le_bytes(u32buf) as usize;
        if in_dim == 0 || out_dim == 0 {
            return Err(corrupt("zero layer dimension".into()));
        }
        shapes.push((in_dim, out_dim));
    }
    for pair in shapes.windows(2) {
        if pair[0].1 != pair[1].0 {
            return Err(corrupt("inconsistent layer shape chain".into()));
        }
    }

    fn read_f32s(
        file: &mut impl Read,
        n: usize,
        io: impl Fn(std::io::Error) -> ModelError,
    ) -> Result<Vec<f32>, ModelError> {
        let mut raw = vec![0u8; n * 4];
        file.read_exact(&mut raw).map_err(io)?;
        Ok(raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect())
    }

    let mut layers = Vec::with_capacity(n_layers);
    for &(in_dim, out_dim) in &shapes {
        layers.push(Dense {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        });
    }
    let mut net = Network { layers };
    let total = net.num_params();
    let flat = read_f32s(&mut file, total, io)?;
    net.unflatten_from(&flat);

    let mut flag = [0u8; 1];
    file.read_exact(&mut flag).map_err(io)?;
    let state = match flag[0] {
        0 => None,
        1 => {
            let mut step_buf = [0u8; 8];
            file.read_exact(&mut step_buf).map_err(io)?;
            let step = u64::from_le_bytes(step_buf);
            let m = read_f32s(&mut file, total, io)?;
            let v = read_f32s(&mut file, total, io)?;
            Some(AdamWState { step, m, v })
        }
        other => return Err(corrupt(format!("bad optimizer-state flag {other}"))),
    };
    let mut rest = Vec::new();
    file.read_to_end(&mut rest).map_err(io)?;
    if !rest.is_empty() {
        return Err(corrupt(format!("{} trailing bytes", rest.len())));
    }
    Ok((net, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AdamW, LabelMatrix, Matrix, ModelConfig, OptimizerConfig};

    #[test]
    fn roundtrip_without_state() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.acdm");
        let net = Network::<f32>::init(&ModelConfig::new(6, &[4], 3), 11);
        save_checkpoint(&path, &net, None).unwrap();
        let (loaded, state) = load_checkpoint(&path).unwrap();
        assert_eq!(loaded, net);
        assert!(state.is_none());

        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"ACDM");
    }

    #[test]
    fn roundtrip_with_optimizer_state() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.acdm");
        let mut net = Network::<f32>::init(&ModelConfig::new(3, &[2], 2), 5);
        let mut opt = AdamW::new(OptimizerConfig::default(), net.num_params());
        let cache = net
            .forward_cached(&Matrix::from_rows(vec![vec![0.5, -0.5, 1.0]]))
            .unwrap();
        let labels = LabelMatrix::from_rows(vec![vec![Some(1.0f32), Some(0.0)]]);
        let grads = net.backward(&cache, &labels).unwrap();
        opt.step(&mut net, &grads, 1e-3);

        save_checkpoint(&path, &net, Some(opt.state())).unwrap();
        let (loaded, state) = load_checkpoint(&path).unwrap();
        assert_eq!(loaded, net);
        assert_eq!(state.as_ref(), Some(opt.state()));
    }

    #[test]
    fn truncated_checkpoint_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.acdm");
        let net = Network::<f32>::init(&ModelConfig::new(6, &[4], 3), 11);
        save_checkpoint(&path, &net, None).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.acdm");
        std::fs::write(&path, b"WRNG\x01\x00\x00\x00\x01\x00\x00\x00").unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(ModelError::CorruptCheckpoint { .. })
        ));
    }
}
