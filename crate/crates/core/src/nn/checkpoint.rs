//! Binary checkpoint format.
//!
//! ```text
//! magic      4 bytes  "GXAI"
//! version    u16 LE   = 1
//! records    u32 LE   number of header records
//! record*    u32 LE byte length, then UTF-8 `key=value`
//! params     f64 LE   for each layer in order: weights, then biases
//! ```
//!
//! Header records, in order: `input=C,L`, one `layer=<spec>` per layer, the training
//! config as `train.<key>=<value>`, `seed=<u64>`, `final_loss=<16 hex digits of the f64
//! bits>` and `params=<total f64 count>`. Nothing may follow the parameter block.

use std::collections::BTreeMap;
use std::path::Path;

use super::graph::{LayerGraph, LayerSpec, Shape};
use super::model::{LayerParams, Model};
use super::train::TrainConfig;
use super::{NnError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"GXAI";
pub const CHECKPOINT_VERSION: u16 = 1;

/// Trained model plus the configuration that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub config: TrainConfig,
    /// Mean training loss after the last epoch.
    pub final_loss: f64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let graph = &self.model.graph;
        let input = graph.input_shape();
        let mut records = vec![format!("input={},{}", input.channels, input.len)];
        records.extend(graph.layers().iter().map(|l| format!("layer={l}")));
        records.extend(
            self.config
                .to_kv()
                .into_iter()
                .filter(|(k, _)| *k != "seed")
                .map(|(k, v)| format!("train.{k}={v}")),
        );
        records.push(format!("seed={}", self.config.seed));
        records.push(format!("final_loss={:016x}", self.final_loss.to_bits()));
        let n_params: usize = self.model.params.iter().map(|p| p.weights.len() + p.bias.len()).sum();
        records.push(format!("params={n_params}"));

        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(records.len() as u32).to_le_bytes());
        for r in &records {
            out.extend_from_slice(&(r.len() as u32).to_le_bytes());
            out.extend_from_slice(r.as_bytes());
        }
        for p in &self.model.params {
            for v in p.weights.iter().chain(&p.bias) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| NnError::Checkpoint(m.to_string());
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != CHECKPOINT_MAGIC {
            return Err(bad("missing GXAI magic"));
        }
        let version = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!("unsupported version {version}")));
        }
        let n_records = u32::from_le_bytes(cur.take(4)?.try_into().unwrap()) as usize;
        let mut input = None;
        let mut layers = Vec::new();
        let mut train_kv = BTreeMap::new();
        let mut seed = None;
        let mut final_loss = None;
        let mut n_params = None;
        for _ in 0..n_records {
            let len = u32::from_le_bytes(cur.take(4)?.try_into().unwrap()) as usize;
            let text = std::str::from_utf8(cur.take(len)?).map_err(|_| bad("record is not UTF-8"))?;
            let (key, value) = text.split_once('=').ok_or_else(|| bad("record without `=`"))?;
            match key {
                "input" => {
                    let (c, l) = value.split_once(',').ok_or_else(|| bad("bad input record"))?;
                    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad input record"));
                    input = Some(Shape::new(parse(c)?, parse(l)?));
                }
                "layer" => layers.push(value.parse::<LayerSpec>()?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad("bad seed"))?),
                "final_loss" => {
                    let bits = u64::from_str_radix(value, 16).map_err(|_| bad("bad final_loss"))?;
                    final_loss = Some(f64::from_bits(bits));
                }
                "params" => n_params = Some(value.parse::<usize>().map_err(|_| bad("bad params count"))?),
                k => match k.strip_prefix("train.") {
                    Some(tk) => {
                        train_kv.insert(tk.to_string(), value.to_string());
                    }
                    None => return Err(NnError::Checkpoint(format!("unknown record `{k}`"))),
                },
            }
        }
        let graph = LayerGraph::new(input.ok_or_else(|| bad("missing input record"))?, layers)?;
        train_kv.insert("seed".into(), seed.ok_or_else(|| bad("missing seed"))?.to_string());
        let config = TrainConfig::from_kv(&train_kv)?;
        let mut params = Vec::with_capacity(graph.layers().len());
        let mut total = 0;
        for i in 0..graph.layers().len() {
            let (nw, nb) = graph.param_len(i);
            total += nw + nb;
            params.push(LayerParams { weights: cur.reals(nw)?, bias: cur.reals(nb)? });
        }
        if n_params != Some(total) {
            return Err(bad("parameter count does not match the layer graph"));
        }
        if cur.pos != bytes.len() {
            return Err(bad("trailing bytes after parameters"));
        }
        Ok(Checkpoint {
            model: Model::with_params(graph, params)?,
            config,
            final_loss: final_loss.ok_or_else(|| bad("missing final_loss"))?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Checkpoint::from_bytes(&std::fs::read(path)?)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| NnError::Checkpoint("truncated checkpoint".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn reals(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| NnError::Checkpoint("size overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}
