//! Versioned text checkpoint for the trained model.
//!
//! Format:
//! ```text
//! SMARTCON-CKPT v1
//! H=<n> mu=<f> beta=<f>
//! <name> <rows> <cols>
//! <row of space-separated decimals>
//! ...
//! ```
//! Tensors appear in the fixed order W1, W2, W3, b_h, w_alpha, W_g, c_g,
//! b_g, W4, W5, b_d, w_out; floats are printed in shortest round-trippable
//! form so a write-read-write cycle is byte-identical.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gan::linalg::Mat;
use crate::gan::{DiscriminatorParams, GeneratorParams};
use crate::persist::write_atomic;

pub const CHECKPOINT_VERSION: &str = "SMARTCON-CKPT v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub generator: GeneratorParams,
    pub discriminator: DiscriminatorParams,
}

impl Checkpoint {
    pub fn hidden(&self) -> usize {
        self.generator.hidden
    }
}

fn expected_dims(name: &str, h: usize) -> (usize, usize) {
    match name {
        "W1" => (h, h),
        "W2" => (h, 3),
        "W3" | "b_h" | "w_alpha" | "W_g" => (h, 1),
        "c_g" | "b_g" => (1, 1),
        "W4" => (h, h),
        "W5" => (h, 3),
        "b_d" | "w_out" => (h, 1),
        _ => unreachable!("unknown tensor {name}"),
    }
}

const TENSOR_ORDER: [&str; 12] = [
    "W1", "W2", "W3", "b_h", "w_alpha", "W_g", "c_g", "b_g", "W4", "W5", "b_d", "w_out",
];

pub fn format_checkpoint(ckpt: &Checkpoint) -> String {
    let g = &ckpt.generator;
    let d = &ckpt.discriminator;
    let mut out = String::new();
    out.push_str(CHECKPOINT_VERSION);
    out.push('\n');
    out.push_str(&format!("H={} mu={} beta={}\n", g.hidden, g.mu, g.beta));
    let tensors: Vec<(&str, &Mat)> = g.tensors().into_iter().chain(d.tensors()).collect();
    for name in TENSOR_ORDER {
        let (_, mat) = tensors
            .iter()
            .find(|(n, _)| *n == name)
            .expect("tensor order covers all tensors");
        out.push_str(&format!("{name} {} {}\n", mat.rows, mat.cols));
        for r in 0..mat.rows {
            let row: Vec<String> = (0..mat.cols).map(|c| format!("{}", mat.at(r, c))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    write_atomic(path, format_checkpoint(ckpt).as_bytes())
}

pub fn parse_checkpoint(text: &str) -> Result<Checkpoint> {
    let mut lines = text.lines();
    let version = lines.next().unwrap_or("");
    if version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion {
            expected: CHECKPOINT_VERSION.to_string(),
            found: version.to_string(),
        });
    }
    let meta = lines
        .next()
        .ok_or_else(|| Error::CheckpointDim("missing metadata line".into()))?;
    let mut h = None;
    let mut mu = None;
    let mut beta = None;
    for part in meta.split_whitespace() {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::CheckpointDim(format!("bad metadata field `{part}`")))?;
        match key {
            "H" => h = value.parse::<usize>().ok(),
            "mu" => mu = value.parse::<f64>().ok(),
            "beta" => beta = value.parse::<f64>().ok(),
            _ => {
                return Err(Error::CheckpointDim(format!(
                    "unknown metadata key `{key}`"
                )))
            }
        }
    }
    let (h, mu, beta) = match (h, mu, beta) {
        (Some(h), Some(mu), Some(beta)) if h >= 1 => (h, mu, beta),
        _ => return Err(Error::CheckpointDim("bad metadata line".into())),
    };

    let mut mats: Vec<(String, Mat)> = Vec::with_capacity(TENSOR_ORDER.len());
    for name in TENSOR_ORDER {
        let header = lines
            .next()
            .ok_or_else(|| Error::CheckpointDim(format!("truncated before tensor {name}")))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != name {
            return Err(Error::CheckpointDim(format!(
                "expected header for {name}, found `{header}`"
            )));
        }
        let rows: usize = parts[1]
            .parse()
            .map_err(|_| Error::CheckpointDim(format!("{name}: bad row count")))?;
        let cols: usize = parts[2]
            .parse()
            .map_err(|_| Error::CheckpointDim(format!("{name}: bad column count")))?;
        if (rows, cols) != expected_dims(name, h) {
            return Err(Error::CheckpointDim(format!(
                "{name}: declared {rows}x{cols}, H={h} requires {:?}",
                expected_dims(name, h)
            )));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::CheckpointDim(format!("{name}: truncated at row {r}")))?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::CheckpointDim(format!("{name}: bad float in row {r}")))?;
            if values.len() != cols {
                return Err(Error::CheckpointDim(format!(
                    "{name}: row {r} has {} values, expected {cols}",
                    values.len()
                )));
            }
            data.extend(values);
        }
        mats.push((name.to_string(), Mat::from_rows(rows, cols, data)));
    }

    let mut take = |name: &str| -> Mat {
        let idx = mats
            .iter()
            .position(|(n, _)| n == name)
            .expect("parsed above");
        mats.swap_remove(idx).1
    };
    let generator = GeneratorParams {
        hidden: h,
        mu,
        beta,
        w1: take("W1"),
        w2: take("W2"),
        w3: take("W3"),
        b_h: take("b_h"),
        w_alpha: take("w_alpha"),
        w_g: take("W_g"),
        c_g: take("c_g"),
        b_g: take("b_g"),
    };
    let discriminator = DiscriminatorParams {
        hidden: h,
        w4: take("W4"),
        w5: take("W5"),
        b_d: take("b_d"),
        w_out: take("w_out"),
    };
    Ok(Checkpoint {
        generator,
        discriminator,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    parse_checkpoint(&fs::read_to_string(path)?)
}
