//! Self-describing text model format. Header lines are `key=value`; each
//! layer follows as a `layer=<inputs> <outputs> <activation>` line and two
//! hex blocks of little-endian f64 (`weights=`, row-major by output, then
//! `biases=`).
//!
//! ```text
//! drone-model 1
//! input_dim=25
//! input_normalization=unit_norm
//! t1_max_ms=5000
//! t2_max_ms=2000
//! train_digest=<64 hex chars>
//! schedule_digest=<64 hex chars>
//! layers=3
//! layer=25 300 tanh
//! weights=...
//! biases=...
//! ```

use std::fmt::Write;
use std::path::Path;

use drone_core::{Activation, InputNormalization, Layer, Mlp, OutputScaler};

use super::{key_value, parse_f64, read_text, write_bytes};
use crate::error::{Error, Result};

const MAGIC: &str = "drone-model 1";

/// A network plus the provenance digests stored alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub net: Mlp,
    /// Digest of the training configuration that produced the weights.
    pub train_digest: [u8; 32],
    /// Digest of the schedule of the training dictionary.
    pub schedule_digest: [u8; 32],
}

fn hex_f64s(v: &[f64]) -> String {
    let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
    hex::encode(bytes)
}

fn unhex_f64s(s: &str, expected: usize, what: &str) -> Result<Vec<f64>, String> {
    let bytes = hex::decode(s).map_err(|e| format!("{what}: {e}"))?;
    if bytes.len() != expected * 8 {
        return Err(format!("{what}: expected {expected} values, found {} bytes", bytes.len()));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn unhex_digest(s: &str, what: &str) -> Result<[u8; 32], String> {
    let mut d = [0u8; 32];
    hex::decode_to_slice(s, &mut d).map_err(|e| format!("{what}: {e}"))?;
    Ok(d)
}

pub fn to_string(m: &ModelFile) -> String {
    let net = &m.net;
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "input_dim={}", net.input_dim()).unwrap();
    writeln!(out, "input_normalization={}", net.input_normalization().name()).unwrap();
    writeln!(out, "t1_max_ms={}", net.scaler().t1_max_ms).unwrap();
    writeln!(out, "t2_max_ms={}", net.scaler().t2_max_ms).unwrap();
    writeln!(out, "train_digest={}", hex::encode(m.train_digest)).unwrap();
    writeln!(out, "schedule_digest={}", hex::encode(m.schedule_digest)).unwrap();
    writeln!(out, "layers={}", net.layers().len()).unwrap();
    for l in net.layers() {
        writeln!(out, "layer={} {} {}", l.inputs, l.outputs, l.activation.name()).unwrap();
        writeln!(out, "weights={}", hex_f64s(&l.weights)).unwrap();
        writeln!(out, "biases={}", hex_f64s(&l.biases)).unwrap();
    }
    out
}

pub fn parse(text: &str) -> Result<ModelFile, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(format!("missing {MAGIC:?} header"));
    }
    let mut field = |key: &str| -> Result<String, String> {
        let line = lines.next().ok_or_else(|| format!("unexpected end of file, expected {key}"))?;
        match key_value(line) {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(format!("expected {key}=..., found {:?}", line.chars().take(40).collect::<String>())),
        }
    };
    let input_dim: usize = field("input_dim")?.parse().map_err(|_| "bad input_dim")?;
    let norm_name = field("input_normalization")?;
    let norm = InputNormalization::from_name(&norm_name)
        .ok_or_else(|| format!("unknown input_normalization {norm_name:?}"))?;
    let t1_max = parse_f64(&field("t1_max_ms")?, "t1_max_ms")?;
    let t2_max = parse_f64(&field("t2_max_ms")?, "t2_max_ms")?;
    let scaler = OutputScaler::new(t1_max, t2_max).map_err(|e| e.to_string())?;
    let train_digest = unhex_digest(&field("train_digest")?, "train_digest")?;
    let schedule_digest = unhex_digest(&field("schedule_digest")?, "schedule_digest")?;
    let count: usize = field("layers")?.parse().map_err(|_| "bad layers count")?;
    let mut layers = Vec::with_capacity(count);
    for i in 0..count {
        let spec = field("layer")?;
        let parts: Vec<&str> = spec.split_whitespace().collect();
        let [inputs, outputs, act] = parts[..] else {
            return Err(format!("layer {i}: expected '<inputs> <outputs> <activation>'"));
        };
        let inputs: usize = inputs.parse().map_err(|_| format!("layer {i}: bad inputs"))?;
        let outputs: usize = outputs.parse().map_err(|_| format!("layer {i}: bad outputs"))?;
        let activation = Activation::from_name(act).ok_or_else(|| format!("layer {i}: unknown activation {act:?}"))?;
        let n = inputs.checked_mul(outputs).ok_or("layer too large")?;
        let weights = unhex_f64s(&field("weights")?, n, &format!("layer {i} weights"))?;
        let biases = unhex_f64s(&field("biases")?, outputs, &format!("layer {i} biases"))?;
        layers.push(Layer { inputs, outputs, weights, biases, activation });
    }
    if let Some(extra) = lines.next() {
        return Err(format!("trailing content: {:?}", extra.chars().take(40).collect::<String>()));
    }
    let net = Mlp::new(layers, scaler, norm).map_err(|e| e.to_string())?;
    if net.input_dim() != input_dim {
        return Err(format!("input_dim {input_dim} disagrees with first layer ({})", net.input_dim()));
    }
    Ok(ModelFile { net, train_digest, schedule_digest })
}

pub fn read(path: &Path) -> Result<ModelFile> {
    parse(&read_text(path)?).map_err(|m| Error::format(path, m))
}

pub fn write(path: &Path, m: &ModelFile) -> Result<()> {
    write_bytes(path, to_string(m).as_bytes())
}
