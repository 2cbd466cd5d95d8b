//! Versioned text checkpoints.
//!
//! ```text
//! satedge-mlp 1
//! layout <feature layout version>
//! dims 54 128 128 128 12
//! adam <lr> <beta1> <beta2> <epsilon>
//! seed <seed>
//! step <adam step count>
//! <block> <layer> <rows> <cols>
//! <row>...
//! ```
//!
//! Blocks appear per layer in the order `w b m_w m_b v_w v_b`. Values are
//! written in shortest round-trip decimal form, so a reload is bit-exact.

use std::io::{BufRead, Write};

use super::mlp::{AdamConfig, Dense, MlpModel};
use crate::error::{Error, Result};

const MAGIC: &str = "satedge-mlp 1";

fn write_row<W: Write>(out: &mut W, values: &[f64]) -> Result<()> {
    let mut line = String::with_capacity(values.len() * 20);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            line.push(' ');
        }
        line.push_str(&v.to_string());
    }
    writeln!(out, "{line}")?;
    Ok(())
}

fn write_dense<W: Write>(out: &mut W, tag: &str, idx: usize, d: &Dense) -> Result<()> {
    writeln!(out, "{tag}_w {idx} {} {}", d.outputs, d.inputs)?;
    for row in d.weights.chunks(d.inputs) {
        write_row(out, row)?;
    }
    writeln!(out, "{tag}_b {idx} 1 {}", d.outputs)?;
    write_row(out, &d.bias)
}

pub fn save<W: Write>(model: &MlpModel, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "layout {}", model.layout_version)?;
    let dims: Vec<String> = model.dims().iter().map(|d| d.to_string()).collect();
    writeln!(out, "dims {}", dims.join(" "))?;
    let a = model.adam;
    writeln!(out, "adam {} {} {} {}", a.learning_rate, a.beta1, a.beta2, a.epsilon)?;
    writeln!(out, "seed {}", model.seed)?;
    writeln!(out, "step {}", model.step_count)?;
    for (i, ((l, m), v)) in model.layers.iter().zip(&model.adam_m).zip(&model.adam_v).enumerate() {
        write_dense(&mut out, "param", i, l)?;
        write_dense(&mut out, "adam_m", i, m)?;
        write_dense(&mut out, "adam_v", i, v)?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    no: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        self.no += 1;
        match self.inner.next() {
            Some(line) => Ok(line?),
            None => Err(self.err("unexpected end of checkpoint")),
        }
    }

    fn err(&self, reason: &str) -> Error {
        Error::Parse {
            line: self.no,
            reason: reason.to_string(),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let line = self.next()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(&format!("expected {key:?}")));
        }
        Ok(parts.map(str::to_string).collect())
    }

    fn numbers<T: std::str::FromStr>(&mut self, fields: &[String]) -> Result<Vec<T>> {
        fields
            .iter()
            .map(|f| f.parse::<T>().map_err(|_| self.err(&format!("bad number {f:?}"))))
            .collect()
    }

    fn row(&mut self, len: usize) -> Result<Vec<f64>> {
        let line = self.next()?;
        let fields: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if fields.len() != len {
            return Err(self.err(&format!("expected {len} values, found {}", fields.len())));
        }
        self.numbers(&fields)
    }

    fn dense(&mut self, tag: &str, idx: usize, inputs: usize, outputs: usize) -> Result<Dense> {
        let head: Vec<usize> = {
            let f = self.keyed(&format!("{tag}_w"))?;
            self.numbers(&f)?
        };
        if head != [idx, outputs, inputs] {
            return Err(self.err(&format!("block header {head:?} does not match layer {idx}")));
        }
        let mut weights = Vec::with_capacity(inputs * outputs);
        for _ in 0..outputs {
            weights.extend(self.row(inputs)?);
        }
        let head: Vec<usize> = {
            let f = self.keyed(&format!("{tag}_b"))?;
            self.numbers(&f)?
        };
        if head != [idx, 1, outputs] {
            return Err(self.err(&format!("bias header {head:?} does not match layer {idx}")));
        }
        let bias = self.row(outputs)?;
        Ok(Dense {
            inputs,
            outputs,
            weights,
            bias,
        })
    }
}

pub fn load<R: BufRead>(input: R) -> Result<MlpModel> {
    let mut lines = Lines {
        inner: input.lines(),
        no: 0,
    };
    if lines.next()?.trim() != MAGIC {
        return Err(lines.err("not a satedge-mlp v1 checkpoint"));
    }
    let f = lines.keyed("layout")?;
    let layout: Vec<u32> = lines.numbers(&f)?;
    let f = lines.keyed("dims")?;
    let dims: Vec<usize> = lines.numbers(&f)?;
    let f = lines.keyed("adam")?;
    let adam: Vec<f64> = lines.numbers(&f)?;
    let f = lines.keyed("seed")?;
    let seed: Vec<u64> = lines.numbers(&f)?;
    let f = lines.keyed("step")?;
    let step: Vec<u64> = lines.numbers(&f)?;
    if layout.len() != 1 || adam.len() != 4 || seed.len() != 1 || step.len() != 1 || dims.len() < 2 {
        return Err(lines.err("malformed checkpoint header"));
    }
    let mut layers = Vec::new();
    let mut ms = Vec::new();
    let mut vs = Vec::new();
    for (i, w) in dims.windows(2).enumerate() {
        layers.push(lines.dense("param", i, w[0], w[1])?);
        ms.push(lines.dense("adam_m", i, w[0], w[1])?);
        vs.push(lines.dense("adam_v", i, w[0], w[1])?);
    }
    let adam = AdamConfig {
        learning_rate: adam[0],
        beta1: adam[1],
        beta2: adam[2],
        epsilon: adam[3],
    };
    Ok(MlpModel::from_parts(dims, layers, ms, vs, step[0], adam, seed[0], layout[0]))
}
