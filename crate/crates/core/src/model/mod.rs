//! The prediction network: a per-point embedding, a temporal encoder and
//! either one shared decoder or a decoupled (history, future) pair.
//!
//! Every function here works on batches laid out `N × frames × J × 3`.
//! Rank-3 inputs are accepted by [`Td2ipModel::forward`] as a batch of one.

mod config;
mod weights;

use indexmap::IndexMap;
use rand::Rng as _;

pub use config::{DecoderMode, EncoderKind, ModelConfig};
pub use weights::{load_tdw, parse_tdw, save_tdw, write_tdw};

use crate::diffcore::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng;

/// Tape handles for every parameter, in [`Td2ipModel::params`] order.
#[derive(Debug, Clone)]
pub struct ParamVars(Vec<Var>);

impl ParamVars {
    pub fn vars(&self) -> &[Var] {
        &self.0
    }
}

/// Decoder outputs before time concatenation, each `N × T_k × J × 3`.
#[derive(Debug, Clone, Copy)]
pub enum Decoded {
    Shared(Var),
    Decoupled { hist: Var, fut: Var },
}

#[derive(Default)]
struct Layout(Vec<(String, Vec<usize>)>);

impl Layout {
    /// `y = x·wᵀ + b` with `w` stored `out × in`.
    fn dense(&mut self, prefix: &str, fan_in: usize, fan_out: usize) {
        self.0.push((format!("{prefix}.w"), vec![fan_out, fan_in]));
        self.0.push((format!("{prefix}.b"), vec![fan_out]));
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize) {
        self.0.push((name.to_string(), vec![rows, cols]));
    }
}

/// Parameter names and shapes implied by `cfg`, in canonical order.
fn layout(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let mut l = Layout::default();
    let (dh, de, f) = (cfg.embed_hidden, cfg.embed_dim, cfg.feature_dim);
    l.dense("embed.1", 3, dh);
    l.dense("embed.2", dh, de);

    let flat = cfg.history * de;
    match cfg.encoder {
        EncoderKind::Mlp => {
            for k in 0..cfg.encoder_layers {
                l.dense(&format!("enc.mlp.{k}"), if k == 0 { flat } else { f }, f);
            }
        }
        EncoderKind::Gcn => {
            l.matrix("enc.gcn.adj", cfg.joints, cfg.joints);
            for k in 0..cfg.encoder_layers {
                l.dense(&format!("enc.gcn.{k}"), if k == 0 { flat } else { f }, f);
            }
        }
        EncoderKind::Gru => {
            for gate in ["z", "r", "n"] {
                l.dense(&format!("enc.gru.in_{gate}"), de, f);
                l.matrix(&format!("enc.gru.rec_{gate}.w"), f, f);
            }
        }
    }

    let decoders: &[(&str, usize)] = match cfg.decoder_mode {
        DecoderMode::Shared => &[("shared", cfg.total_frames())],
        DecoderMode::Decoupled => &[("hist", cfg.history), ("fut", cfg.future)],
    };
    for &(name, frames) in decoders {
        l.dense(&format!("dec.{name}.0"), f, f);
        l.dense(&format!("dec.{name}.1"), f, frames * 3);
    }
    l.0
}

/// Model parameters plus the architecture they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Td2ipModel {
    config: ModelConfig,
    params: IndexMap<String, Tensor>,
}

impl Td2ipModel {
    /// Glorot-uniform weights (`a = sqrt(6 / (fan_in + fan_out))`) and zero
    /// biases. Each parameter draws from its own named stream, so layers
    /// shared between architectures start from identical values.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let params = layout(&config)
            .into_iter()
            .map(|(name, shape)| {
                let t = if shape.len() == 1 {
                    Tensor::zeros(shape)
                } else {
                    let a = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
                    let mut r = rng::stream(seed, &format!("init/{name}"));
                    let n = shape.iter().product();
                    let data = (0..n).map(|_| r.gen_range(-a..=a)).collect();
                    Tensor::new(shape, data).expect("layout shape")
                };
                (name, t)
            })
            .collect();
        Ok(Td2ipModel { config, params })
    }

    /// Rebuilds a model from named arrays, checking every expected name and shape.
    pub fn from_arrays(config: ModelConfig, arrays: impl IntoIterator<Item = (String, Tensor)>) -> Result<Self> {
        config.validate()?;
        let mut given: IndexMap<String, Tensor> = arrays.into_iter().collect();
        let mut params = IndexMap::new();
        for (name, shape) in layout(&config) {
            let t = given
                .shift_remove(&name)
                .ok_or_else(|| Error::Config(format!("weights are missing array {name:?}")))?;
            if t.shape() != shape.as_slice() {
                return Err(Error::dim(
                    "load_weights",
                    format!("array {name:?} has shape {:?} but the config implies {:?}", t.shape(), shape),
                ));
            }
            params.insert(name, t);
        }
        if let Some(extra) = given.keys().next() {
            return Err(Error::Config(format!("weights contain unexpected array {extra:?}")));
        }
        Ok(Td2ipModel { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &IndexMap<String, Tensor> {
        &self.params
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.params.iter_mut()
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.params.get(name)
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.params.get_mut(name)
    }

    pub fn param_count(&self) -> usize {
        self.params.values().map(Tensor::numel).sum()
    }

    /// Registers every parameter as a trainable leaf.
    pub fn bind(&self, tape: &mut Tape) -> ParamVars {
        ParamVars(self.params.values().map(|t| tape.param(t.clone())).collect())
    }

    /// Handles for substitute parameter values (same order as [`Self::params`]);
    /// used to evaluate the network at perturbed parameters.
    pub fn bind_values(&self, vars: &[Var]) -> Result<ParamVars> {
        if vars.len() != self.params.len() {
            return Err(Error::Contract(format!(
                "expected {} parameter handles, got {}",
                self.params.len(),
                vars.len()
            )));
        }
        Ok(ParamVars(vars.to_vec()))
    }

    fn var(&self, p: &ParamVars, name: &str) -> Var {
        let idx = self
            .params
            .get_index_of(name)
            .unwrap_or_else(|| panic!("parameter {name} not in layout"));
        p.0[idx]
    }

    fn dense(&self, tape: &mut Tape, p: &ParamVars, x: Var, prefix: &str) -> Result<Var> {
        let w = self.var(p, &format!("{prefix}.w"));
        let b = self.var(p, &format!("{prefix}.b"));
        let wt = tape.transpose(w)?;
        let xw = tape.matmul(x, wt)?;
        tape.add_bias(xw, b)
    }

    fn check_input(&self, tape: &Tape, x: Var, op: &'static str) -> Result<usize> {
        let s = tape.value(x).shape();
        let c = &self.config;
        if s.len() != 4 || s[1] != c.history || s[2] != c.joints || s[3] != 3 {
            return Err(Error::dim(
                op,
                format!(
                    "expected N×{}×{}×3 history, got {:?}",
                    c.history, c.joints, s
                ),
            ));
        }
        Ok(s[0])
    }

    /// `X̂ = W₂·σ(W₁·x + b₁) + b₂` for every (frame, joint) point; `N×T_p×J×D_e`.
    pub fn embed(&self, tape: &mut Tape, p: &ParamVars, x: Var) -> Result<Var> {
        let n = self.check_input(tape, x, "embed")?;
        let c = &self.config;
        let points = tape.reshape(x, [n * c.history * c.joints, 3])?;
        let h = self.dense(tape, p, points, "embed.1")?;
        let h = tape.activate(h, c.activation);
        let e = self.dense(tape, p, h, "embed.2")?;
        tape.reshape(e, [n, c.history, c.joints, c.embed_dim])
    }

    /// Per-joint features `M`, laid out `(N·J) × F` with rows ordered (sample, joint).
    pub fn encode(&self, tape: &mut Tape, p: &ParamVars, embedded: Var) -> Result<Var> {
        let c = &self.config;
        let s = tape.value(embedded).shape().to_vec();
        if s.len() != 4 || s[1] != c.history || s[2] != c.joints || s[3] != c.embed_dim {
            return Err(Error::dim(
                "encode",
                format!("expected N×{}×{}×{}, got {:?}", c.history, c.joints, c.embed_dim, s),
            ));
        }
        let n = s[0];
        match c.encoder {
            EncoderKind::Mlp => {
                let mut h = self.per_joint_trajectories(tape, embedded, n)?;
                for k in 0..c.encoder_layers {
                    h = self.dense(tape, p, h, &format!("enc.mlp.{k}"))?;
                    h = tape.activate(h, c.activation);
                }
                Ok(h)
            }
            EncoderKind::Gcn => {
                let adj = self.var(p, "enc.gcn.adj");
                let mut h = self.per_joint_trajectories(tape, embedded, n)?;
                for k in 0..c.encoder_layers {
                    let prefix = format!("enc.gcn.{k}");
                    let w = self.var(p, &format!("{prefix}.w"));
                    let b = self.var(p, &format!("{prefix}.b"));
                    let wt = tape.transpose(w)?;
                    let hw = tape.matmul(h, wt)?;
                    let mixed = self.mix_joints(tape, adj, hw, n)?;
                    let biased = tape.add_bias(mixed, b)?;
                    h = tape.activate(biased, c.activation);
                }
                Ok(h)
            }
            EncoderKind::Gru => self.gru(tape, p, embedded, n),
        }
    }

    /// `N×T_p×J×D` → `(N·J) × (T_p·D)`, each row one joint's history in time order.
    fn per_joint_trajectories(&self, tape: &mut Tape, e: Var, n: usize) -> Result<Var> {
        let c = &self.config;
        let per_joint = tape.permute(e, &[0, 2, 1, 3])?;
        tape.reshape(per_joint, [n * c.joints, c.history * c.embed_dim])
    }

    /// Applies the `J×J` adjacency to `(N·J) × C` node features of each sample.
    fn mix_joints(&self, tape: &mut Tape, adj: Var, h: Var, n: usize) -> Result<Var> {
        let j = self.config.joints;
        let width = tape.value(h).shape()[1];
        let h3 = tape.reshape(h, [n, j, width])?;
        let joint_major = tape.permute(h3, &[1, 0, 2])?;
        let flat = tape.reshape(joint_major, [j, n * width])?;
        let mixed = tape.matmul(adj, flat)?;
        let mixed3 = tape.reshape(mixed, [j, n, width])?;
        let back = tape.permute(mixed3, &[1, 0, 2])?;
        tape.reshape(back, [n * j, width])
    }

    /// Gated recurrent cell over frames, zero initial state:
    ///
    /// ```text
    /// z = σ(x·W_zᵀ + h·U_zᵀ + b_z)
    /// r = σ(x·W_rᵀ + h·U_rᵀ + b_r)
    /// n = tanh(x·W_nᵀ + r ⊙ (h·U_nᵀ) + b_n)
    /// h' = n + z ⊙ (h − n)
    /// ```
    fn gru(&self, tape: &mut Tape, p: &ParamVars, e: Var, n: usize) -> Result<Var> {
        let c = &self.config;
        let rows = n * c.joints;
        let time_major = tape.permute(e, &[1, 0, 2, 3])?;
        let frames = tape.reshape(time_major, [c.history, rows, c.embed_dim])?;

        let mut rec = Vec::with_capacity(3);
        for gate in ["z", "r", "n"] {
            let u = self.var(p, &format!("enc.gru.rec_{gate}.w"));
            rec.push(tape.transpose(u)?);
        }
        let mut h = tape.constant(Tensor::zeros([rows, c.feature_dim]));
        for t in 0..c.history {
            let xt = tape.slice(frames, 0, t, 1)?;
            let xt = tape.reshape(xt, [rows, c.embed_dim])?;

            let xz = self.dense(tape, p, xt, "enc.gru.in_z")?;
            let hz = tape.matmul(h, rec[0])?;
            let z = tape.add(xz, hz)?;
            let z = tape.sigmoid(z);

            let xr = self.dense(tape, p, xt, "enc.gru.in_r")?;
            let hr = tape.matmul(h, rec[1])?;
            let r = tape.add(xr, hr)?;
            let r = tape.sigmoid(r);

            let xn = self.dense(tape, p, xt, "enc.gru.in_n")?;
            let hn = tape.matmul(h, rec[2])?;
            let rhn = tape.mul(r, hn)?;
            let cand = tape.add(xn, rhn)?;
            let cand = tape.tanh(cand);

            let diff = tape.sub(h, cand)?;
            let gated = tape.mul(z, diff)?;
            h = tape.add(cand, gated)?;
        }
        Ok(h)
    }

    #[allow(clippy::too_many_arguments)]
    fn decoder(
        &self,
        tape: &mut Tape,
        p: &ParamVars,
        features: Var,
        name: &str,
        frames: usize,
        anchor: Option<&Tensor>,
        n: usize,
    ) -> Result<Var> {
        let c = &self.config;
        let h = self.dense(tape, p, features, &format!("dec.{name}.0"))?;
        let h = tape.activate(h, c.activation);
        let out = self.dense(tape, p, h, &format!("dec.{name}.1"))?;
        let out = tape.reshape(out, [n, c.joints, frames, 3])?;
        let out = tape.permute(out, &[0, 2, 1, 3])?;
        match anchor {
            Some(last) => {
                let tiled = tile_frame(last, frames)?;
                let base = tape.constant(tiled);
                tape.add(out, base)
            }
            None => Ok(out),
        }
    }

    /// Decodes per-joint features. With the residual connection on, `last`
    /// (the final observed frame, `N×J×3`) is added to every output frame.
    pub fn decode(&self, tape: &mut Tape, p: &ParamVars, features: Var, last: &Tensor) -> Result<Decoded> {
        let c = &self.config;
        let fs = tape.value(features).shape();
        if fs.len() != 2 || fs[1] != c.feature_dim || !fs[0].is_multiple_of(c.joints) {
            return Err(Error::dim(
                "decode",
                format!("expected (N·{})×{} features, got {:?}", c.joints, c.feature_dim, fs),
            ));
        }
        let n = fs[0] / c.joints;
        let anchor = c.residual_last_frame.then_some(last);
        Ok(match c.decoder_mode {
            DecoderMode::Shared => {
                Decoded::Shared(self.decoder(tape, p, features, "shared", c.total_frames(), anchor, n)?)
            }
            DecoderMode::Decoupled => Decoded::Decoupled {
                hist: self.decoder(tape, p, features, "hist", c.history, anchor, n)?,
                fut: self.decoder(tape, p, features, "fut", c.future, anchor, n)?,
            },
        })
    }

    /// Full pipeline on a history batch `N×T_p×J×3`, returning all
    /// `T = T_p + T_f` frames: `[P_h, P_f]` when decoupled, `P` when shared.
    pub fn forward_on(&self, tape: &mut Tape, p: &ParamVars, x: &Tensor) -> Result<Var> {
        let xv = tape.constant(x.clone());
        let n = self.check_input(tape, xv, "forward")?;
        let last = x
            .slice(1, self.config.history - 1, 1)?
            .reshape([n, self.config.joints, 3])?;
        let e = self.embed(tape, p, xv)?;
        let m = self.encode(tape, p, e)?;
        match self.decode(tape, p, m, &last)? {
            Decoded::Shared(out) => Ok(out),
            Decoded::Decoupled { hist, fut } => tape.concat(hist, fut, 1),
        }
    }

    /// Reversed-direction pass on `X_r`. Same parameters, same code path.
    pub fn forward_inverse_on(&self, tape: &mut Tape, p: &ParamVars, x_r: &Tensor) -> Result<Var> {
        self.forward_on(tape, p, x_r)
    }

    /// Evaluates the network without tracking parameter gradients.
    /// Accepts `T_p×J×3` or `N×T_p×J×3`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (batched, single) = as_batch(x)?;
        let mut tape = Tape::new();
        let p = self.bind_constants(&mut tape);
        let out = self.forward_on(&mut tape, &p, &batched)?;
        let y = tape.value(out).clone();
        if single {
            Ok(y.index_first(0))
        } else {
            Ok(y)
        }
    }

    pub fn forward_inverse(&self, x_r: &Tensor) -> Result<Tensor> {
        self.forward(x_r)
    }

    /// Per-joint encoder features of a history batch, flattened to `N × (J·F)`.
    pub fn features(&self, x: &Tensor) -> Result<Tensor> {
        let (batched, _) = as_batch(x)?;
        let n = batched.shape()[0];
        let mut tape = Tape::new();
        let p = self.bind_constants(&mut tape);
        let xv = tape.constant(batched);
        let e = self.embed(&mut tape, &p, xv)?;
        let m = self.encode(&mut tape, &p, e)?;
        tape.value(m).reshape([n, self.config.joints * self.config.feature_dim])
    }

    fn bind_constants(&self, tape: &mut Tape) -> ParamVars {
        ParamVars(self.params.values().map(|t| tape.constant(t.clone())).collect())
    }
}

fn as_batch(x: &Tensor) -> Result<(Tensor, bool)> {
    match x.rank() {
        3 => {
            let mut shape = vec![1];
            shape.extend_from_slice(x.shape());
            Ok((x.reshape(shape)?, true))
        }
        4 => Ok((x.clone(), false)),
        _ => Err(Error::dim("forward", format!("expected rank 3 or 4 input, got {:?}", x.shape()))),
    }
}

/// `N×J×3` → `N×frames×J×3`, the same frame repeated.
fn tile_frame(last: &Tensor, frames: usize) -> Result<Tensor> {
    let s = last.shape();
    let (n, per) = (s[0], s[1] * s[2]);
    let mut data = Vec::with_capacity(n * frames * per);
    for i in 0..n {
        let f = &last.data()[i * per..(i + 1) * per];
        for _ in 0..frames {
            data.extend_from_slice(f);
        }
    }
    Tensor::new([n, frames, s[1], s[2]], data)
}

#[cfg(test)]
mod tests;
