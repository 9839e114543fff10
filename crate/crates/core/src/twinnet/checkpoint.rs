//! Sectioned text container for trained networks.
//!
//! ```text
//! heston-dml checkpoint 1
//! [spec]
//! n_inputs 8
//! ...
//! [layer 0]
//! weights 8 50
//! <one matrix row per line>
//! bias 50
//! <values>
//! ```
//!
//! Floats are written with 17 significant digits so that a reload is exact.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::network::{Activation, Network, NetworkSpec, WeightInit};
use crate::dataset::NormalisationStats;
use crate::error::{Error, Result};

const MAGIC: &str = "heston-dml checkpoint 1";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub final_train_loss: f64,
    pub final_val_loss: f64,
    pub lambda: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCheckpoint {
    pub network: Network,
    pub stats: NormalisationStats,
    pub meta: TrainingMeta,
}

fn row<W: Write>(out: &mut W, v: &[f64]) -> std::io::Result<()> {
    let mut first = true;
    for x in v {
        if !first {
            out.write_all(b" ")?;
        }
        write!(out, "{x:.16e}")?;
        first = false;
    }
    out.write_all(b"\n")
}

pub fn write_checkpoint<W: Write>(mut out: W, ckpt: &NetworkCheckpoint) -> Result<()> {
    let net = &ckpt.network;
    let spec = &net.spec;
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "[spec]")?;
    writeln!(out, "n_inputs {}", spec.n_inputs)?;
    writeln!(out, "hidden_layers {}", spec.hidden_layers)?;
    writeln!(out, "neurons {}", spec.neurons)?;
    let act = match spec.activation {
        Activation::Softplus => "softplus",
        Activation::Identity => "identity",
    };
    writeln!(out, "activation {act}")?;
    writeln!(out, "wide_deep {}", spec.wide_deep)?;
    match spec.dropout {
        Some(p) => writeln!(out, "dropout {p:.16e}")?,
        None => writeln!(out, "dropout none")?,
    }
    match spec.init {
        WeightInit::KaimingNormal => writeln!(out, "init kaiming-normal")?,
        WeightInit::KaimingUniform => writeln!(out, "init kaiming-uniform")?,
    }
    writeln!(out, "[stats]")?;
    let s = &ckpt.stats;
    for (name, v) in [
        ("x_mean", &s.x_mean),
        ("x_std", &s.x_std),
        ("xbar_scale", &s.xbar_scale),
        ("xbar_sq_norm", &s.xbar_sq_norm),
    ] {
        write!(out, "{name} ")?;
        row(&mut out, v)?;
    }
    writeln!(out, "y_mean {:.16e}", s.y_mean)?;
    writeln!(out, "y_std {:.16e}", s.y_std)?;
    for l in 0..net.n_layers() {
        let w = net.weights(l);
        let n_out = net.bias(l).len();
        let n_in = w.len() / n_out;
        writeln!(out, "[layer {l}]")?;
        writeln!(out, "weights {n_in} {n_out}")?;
        for r in w.chunks(n_out) {
            row(&mut out, r)?;
        }
        writeln!(out, "bias {n_out}")?;
        row(&mut out, net.bias(l))?;
    }
    if let Some(w) = net.wide_weights() {
        writeln!(out, "[wide]")?;
        writeln!(out, "weights {}", w.len())?;
        row(&mut out, w)?;
    }
    let m = &ckpt.meta;
    writeln!(out, "[meta]")?;
    writeln!(out, "epochs_run {}", m.epochs_run)?;
    writeln!(out, "best_epoch {}", m.best_epoch)?;
    writeln!(out, "final_train_loss {:.16e}", m.final_train_loss)?;
    writeln!(out, "final_val_loss {:.16e}", m.final_val_loss)?;
    writeln!(out, "lambda {:.16e}", m.lambda)?;
    writeln!(out, "seed {}", m.seed)?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        loop {
            self.line += 1;
            match self.inner.next() {
                Some(l) => {
                    let l = l?;
                    if !l.trim().is_empty() {
                        return Ok(l);
                    }
                }
                None => return Err(Error::parse(self.line, "unexpected end of checkpoint")),
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, msg)
    }

    fn expect(&mut self, want: &str) -> Result<()> {
        let l = self.next()?;
        if l.trim() == want {
            Ok(())
        } else {
            Err(self.err(format!("expected `{want}`, found `{l}`")))
        }
    }

    /// `key value...` line; returns the values.
    fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let l = self.next()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`, found `{l}`")));
        }
        Ok(parts.map(str::to_owned).collect())
    }

    fn one<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.keyed(key)?;
        match v.as_slice() {
            [x] => x.parse().map_err(|_| self.err(format!("bad value `{x}` for {key}"))),
            _ => Err(self.err(format!("{key} takes one value"))),
        }
    }

    fn floats(&self, parts: &[String], n: usize) -> Result<Vec<f64>> {
        if parts.len() != n {
            return Err(self.err(format!("expected {n} values, found {}", parts.len())));
        }
        parts
            .iter()
            .map(|p| p.parse::<f64>().map_err(|_| self.err(format!("bad number `{p}`"))))
            .collect()
    }

    fn float_row(&mut self, n: usize) -> Result<Vec<f64>> {
        let l = self.next()?;
        let parts: Vec<String> = l.split_whitespace().map(str::to_owned).collect();
        self.floats(&parts, n)
    }

    fn keyed8(&mut self, key: &str) -> Result<[f64; 8]> {
        let v = self.keyed(key)?;
        let f = self.floats(&v, 8)?;
        Ok(std::array::from_fn(|j| f[j]))
    }
}

pub fn read_checkpoint<R: BufRead>(input: R) -> Result<NetworkCheckpoint> {
    let mut r = Lines {
        inner: input.lines(),
        line: 0,
    };
    r.expect(MAGIC)?;
    r.expect("[spec]")?;
    let n_inputs = r.one("n_inputs")?;
    let hidden_layers = r.one("hidden_layers")?;
    let neurons = r.one("neurons")?;
    let act: String = r.one("activation")?;
    let activation = match act.as_str() {
        "softplus" => Activation::Softplus,
        "identity" => Activation::Identity,
        other => return Err(r.err(format!("unknown activation `{other}`"))),
    };
    let wide_deep = r.one("wide_deep")?;
    let dropout: String = r.one("dropout")?;
    let dropout = match dropout.as_str() {
        "none" => None,
        p => Some(p.parse().map_err(|_| r.err(format!("bad dropout `{p}`")))?),
    };
    let init: String = r.one("init")?;
    let init = match init.as_str() {
        "kaiming-normal" => WeightInit::KaimingNormal,
        "kaiming-uniform" => WeightInit::KaimingUniform,
        other => return Err(r.err(format!("unknown init `{other}`"))),
    };
    let spec = NetworkSpec {
        n_inputs,
        hidden_layers,
        neurons,
        activation,
        wide_deep,
        dropout,
        init,
    };
    let mut network = Network::zeros(&spec)?;

    r.expect("[stats]")?;
    let x_mean = r.keyed8("x_mean")?;
    let x_std = r.keyed8("x_std")?;
    let xbar_scale = r.keyed8("xbar_scale")?;
    let xbar_sq_norm = r.keyed8("xbar_sq_norm")?;
    let y_mean = r.one("y_mean")?;
    let y_std = r.one("y_std")?;
    let stats = NormalisationStats {
        x_mean,
        x_std,
        y_mean,
        y_std,
        xbar_scale,
        xbar_sq_norm,
    };

    for l in 0..network.n_layers() {
        r.expect(&format!("[layer {l}]"))?;
        let n_out = network.bias(l).len();
        let n_in = network.weights(l).len() / n_out;
        let dims = r.keyed("weights")?;
        if dims != [n_in.to_string(), n_out.to_string()] {
            return Err(r.err(format!("layer {l}: expected weights {n_in} {n_out}, found {dims:?}")));
        }
        for k in 0..n_in {
            let v = r.float_row(n_out)?;
            network.weights_mut(l)[k * n_out..(k + 1) * n_out].copy_from_slice(&v);
        }
        let nb: usize = r.one("bias")?;
        if nb != n_out {
            return Err(r.err(format!("layer {l}: bias length {nb}, expected {n_out}")));
        }
        let v = r.float_row(n_out)?;
        network.bias_mut(l).copy_from_slice(&v);
    }
    if spec.wide_deep {
        r.expect("[wide]")?;
        let n: usize = r.one("weights")?;
        if n != n_inputs {
            return Err(r.err(format!("wide weights {n}, expected {n_inputs}")));
        }
        let v = r.float_row(n)?;
        network.wide_weights_mut().expect("wide layer").copy_from_slice(&v);
    }
    r.expect("[meta]")?;
    let meta = TrainingMeta {
        epochs_run: r.one("epochs_run")?,
        best_epoch: r.one("best_epoch")?,
        final_train_loss: r.one("final_train_loss")?,
        final_val_loss: r.one("final_val_loss")?,
        lambda: r.one("lambda")?,
        seed: r.one("seed")?,
    };
    Ok(NetworkCheckpoint { network, stats, meta })
}
