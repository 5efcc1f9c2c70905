//! The classifier family: a frozen embedding input layer, a stacked LSTM
//! encoder shared by every task, and per-task softmax heads. The
//! adversarial head reverses the gradient it sends into the shared encoder.

mod checkpoint;

pub use checkpoint::{load_model, save_model};

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::data::{Batch, Instance, LabelSet, TaskDataset};
use crate::error::{Error, Result};
use crate::numcore::{Gradients, NodeId, Param, ParamId, ParamStore, Rng, Tape, Tensor2};
use crate::preprocess::EmbeddingTable;

/// Weight init range for LSTM and head weights.
const INIT_RANGE: f64 = 0.1;
/// Forget-gate bias initialization; keeps the memory path open early on.
const FORGET_BIAS: f64 = 1.0;

/// Gate order used throughout: input, forget, output, candidate.
const GATES: [&str; 4] = ["i", "f", "o", "g"];

/// Parameter ids of one LSTM layer: `w` maps the layer input, `u` the
/// recurrent state, `b` is the gate bias, indexed in [`GATES`] order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LstmLayerParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w: [ParamId; 4],
    pub u: [ParamId; 4],
    pub b: [ParamId; 4],
}

impl LstmLayerParams {
    fn init(
        store: &mut ParamStore,
        layer: usize,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut Rng,
    ) -> Self {
        let mut uniform_tensor = |rows: usize, cols: usize, rng: &mut Rng| {
            let values = (0..rows * cols)
                .map(|_| rng.uniform(-INIT_RANGE, INIT_RANGE))
                .collect();
            Tensor2::from_vec(rows, cols, values)
        };
        let mut w = [ParamId(0); 4];
        let mut u = [ParamId(0); 4];
        let mut b = [ParamId(0); 4];
        for (gi, gate) in GATES.iter().enumerate() {
            w[gi] = store.add(Param::trainable(
                format!("lstm{layer}.w_{gate}"),
                uniform_tensor(hidden_dim, input_dim, rng),
            ));
            u[gi] = store.add(Param::trainable(
                format!("lstm{layer}.u_{gate}"),
                uniform_tensor(hidden_dim, hidden_dim, rng),
            ));
            let bias = if *gate == "f" {
                Tensor2::from_vec(hidden_dim, 1, vec![FORGET_BIAS; hidden_dim])
            } else {
                Tensor2::zeros(hidden_dim, 1)
            };
            b[gi] = store.add(Param::trainable(format!("lstm{layer}.b_{gate}"), bias));
        }
        LstmLayerParams {
            input_dim,
            hidden_dim,
            w,
            u,
            b,
        }
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        self.w
            .iter()
            .chain(self.u.iter())
            .chain(self.b.iter())
            .copied()
            .collect()
    }
}

/// One LSTM cell update on the tape:
/// `i = sigmoid(W_i x + U_i h + b_i)` (same for `f`, `o`),
/// `g = tanh(W_g x + U_g h + b_g)`,
/// `c_t = f * c_prev + i * g`, `h_t = o * tanh(c_t)`.
pub fn lstm_step(
    tape: &mut Tape,
    store: &ParamStore,
    layer: &LstmLayerParams,
    x: NodeId,
    h_prev: NodeId,
    c_prev: NodeId,
) -> Result<(NodeId, NodeId)> {
    let i_pre = tape.affine2(store, layer.w[0], layer.u[0], layer.b[0], x, h_prev)?;
    let i = tape.sigmoid(i_pre);
    let f_pre = tape.affine2(store, layer.w[1], layer.u[1], layer.b[1], x, h_prev)?;
    let f = tape.sigmoid(f_pre);
    let o_pre = tape.affine2(store, layer.w[2], layer.u[2], layer.b[2], x, h_prev)?;
    let o = tape.sigmoid(o_pre);
    let g_pre = tape.affine2(store, layer.w[3], layer.u[3], layer.b[3], x, h_prev)?;
    let g = tape.tanh(g_pre);

    let keep = tape.mul(f, c_prev)?;
    let write = tape.mul(i, g)?;
    let c = tape.add(keep, write)?;
    let c_act = tape.tanh(c);
    let h = tape.mul(o, c_act)?;
    Ok((h, c))
}

/// The encoder shared by all tasks: embedding dimension plus the stacked
/// LSTM layers. Layer `k` consumes layer `k-1`'s per-step hidden states.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SharedEncoder {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub layers: Vec<LstmLayerParams>,
}

impl SharedEncoder {
    /// Ids of every trainable encoder parameter.
    pub fn param_ids(&self) -> Vec<ParamId> {
        self.layers.iter().flat_map(|l| l.param_ids()).collect()
    }
}

/// A per-task softmax output head. For adversarial heads, gradients flowing
/// into the shared encoder are multiplied by `-lambda_rev`; the forward
/// pass is unchanged.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskHead {
    pub task: String,
    pub label_set: LabelSet,
    pub weight: ParamId,
    pub bias: ParamId,
    pub adversarial: bool,
    pub lambda_rev: f64,
}

/// Head description used at model-building time.
#[derive(Debug, Clone)]
pub struct HeadSpec {
    pub task: String,
    pub label_set: LabelSet,
    pub adversarial: bool,
    pub lambda_rev: f64,
}

impl HeadSpec {
    pub fn plain(task: impl Into<String>, label_set: LabelSet) -> Self {
        HeadSpec {
            task: task.into(),
            label_set,
            adversarial: false,
            lambda_rev: 0.0,
        }
    }

    pub fn adversarial(task: impl Into<String>, lambda_rev: f64) -> Self {
        HeadSpec {
            task: task.into(),
            label_set: LabelSet::Domain,
            adversarial: true,
            lambda_rev,
        }
    }
}

/// A complete model: frozen embedding matrix, shared encoder, task heads.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ParamStore,
    pub vocab: Vec<String>,
    word_index: HashMap<String, usize>,
    /// Frozen embedding matrix, one row per vocab word plus a final UNK row.
    pub embedding: ParamId,
    pub unk_row: usize,
    pub encoder: SharedEncoder,
    pub heads: Vec<TaskHead>,
    /// Echo of the run configuration, persisted into checkpoints.
    pub run_config: BTreeMap<String, String>,
}

impl Model {
    pub fn new(
        embeddings: &EmbeddingTable,
        hidden_dim: usize,
        n_layers: usize,
        head_specs: &[HeadSpec],
        rng: &mut Rng,
    ) -> Result<Model> {
        if head_specs.is_empty() {
            return Err(Error::Config("a model needs at least one head".into()));
        }
        if hidden_dim == 0 || n_layers == 0 {
            return Err(Error::Config(
                "hidden size and layer count must be positive".into(),
            ));
        }
        let embed_dim = embeddings.dim;
        let vocab: Vec<String> = embeddings.words().to_vec();

        let mut params = ParamStore::new();
        let mut matrix = Vec::with_capacity((vocab.len() + 1) * embed_dim);
        for i in 0..vocab.len() {
            matrix.extend_from_slice(embeddings.vector_at(i));
        }
        matrix.extend_from_slice(embeddings.unk());
        let embedding = params.add(Param::frozen(
            "embedding",
            Tensor2::from_vec(vocab.len() + 1, embed_dim, matrix),
        ));
        let unk_row = vocab.len();

        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let input_dim = if l == 0 { embed_dim } else { hidden_dim };
            layers.push(LstmLayerParams::init(&mut params, l, input_dim, hidden_dim, rng));
        }

        let mut heads = Vec::with_capacity(head_specs.len());
        for spec in head_specs {
            let k = spec.label_set.codes().len();
            let values = (0..k * hidden_dim)
                .map(|_| rng.uniform(-INIT_RANGE, INIT_RANGE))
                .collect();
            let weight = params.add(Param::trainable(
                format!("head.{}.w", spec.task),
                Tensor2::from_vec(k, hidden_dim, values),
            ));
            let bias = params.add(Param::trainable(
                format!("head.{}.b", spec.task),
                Tensor2::zeros(k, 1),
            ));
            heads.push(TaskHead {
                task: spec.task.clone(),
                label_set: spec.label_set,
                weight,
                bias,
                adversarial: spec.adversarial,
                lambda_rev: spec.lambda_rev,
            });
        }

        let word_index = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(Model {
            params,
            vocab,
            word_index,
            embedding,
            unk_row,
            encoder: SharedEncoder {
                embed_dim,
                hidden_dim,
                layers,
            },
            heads,
            run_config: BTreeMap::new(),
        })
    }

    pub fn head_index(&self, task: &str) -> Result<usize> {
        self.heads
            .iter()
            .position(|h| h.task == task)
            .ok_or_else(|| Error::Config(format!("no head for task `{task}`")))
    }

    fn embedding_row(&self, token: &str) -> Vec<f64> {
        let row = self.word_index.get(token).copied().unwrap_or(self.unk_row);
        self.params.get(self.embedding).value.row(row).to_vec()
    }

    /// Encode the first `true_len` tokens of a (possibly padded) sequence,
    /// returning the top layer's hidden state at the last true token.
    /// Tokens beyond `true_len` are never read, so padding cannot leak into
    /// the result.
    pub fn encode_truncated(
        &self,
        tape: &mut Tape,
        tokens: &[String],
        true_len: usize,
    ) -> Result<NodeId> {
        debug_assert!(true_len <= tokens.len());
        if true_len == 0 {
            return Err(Error::Input("cannot encode an empty token sequence".into()));
        }
        let hidden = self.encoder.hidden_dim;
        let zero = tape.input(vec![0.0; hidden]);
        let mut states: Vec<(NodeId, NodeId)> = vec![(zero, zero); self.encoder.layers.len()];
        let mut top_h = zero;
        for token in &tokens[..true_len] {
            let mut x = tape.input(self.embedding_row(token));
            for (li, layer) in self.encoder.layers.iter().enumerate() {
                let (h_prev, c_prev) = states[li];
                let (h, c) = lstm_step(tape, &self.params, layer, x, h_prev, c_prev)?;
                states[li] = (h, c);
                x = h;
            }
            top_h = x;
        }
        Ok(top_h)
    }

    /// Encode a full token sequence.
    pub fn encode(&self, tape: &mut Tape, tokens: &[String]) -> Result<NodeId> {
        self.encode_truncated(tape, tokens, tokens.len())
    }

    /// Class probabilities for `tokens` under the given head.
    pub fn predict(&self, head_idx: usize, tokens: &[String]) -> Result<Vec<f64>> {
        let head = self
            .heads
            .get(head_idx)
            .ok_or_else(|| Error::Config(format!("head index {head_idx} out of range")))?;
        let mut tape = Tape::new();
        let h = self.encode(&mut tape, tokens)?;
        let logits = tape.affine(&self.params, head.weight, head.bias, h)?;
        let probs = tape.softmax(logits)?;
        Ok(tape.value(probs).to_vec())
    }

    /// Predicted label code: argmax of the head's probabilities, ties
    /// broken toward the lowest class code.
    pub fn predict_code(&self, head_idx: usize, tokens: &[String]) -> Result<u32> {
        let probs = self.predict(head_idx, tokens)?;
        let head = &self.heads[head_idx];
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        Ok(head.label_set.codes()[best])
    }

    /// Mean cross-entropy and gradients over a batch of single-label
    /// instances. For an adversarial head the gradients entering the shared
    /// encoder are multiplied by `-lambda_rev`; head-local gradients are
    /// unmodified, as is the forward pass.
    pub fn task_loss_backward(
        &self,
        head_idx: usize,
        instances: &[&Instance],
    ) -> Result<(f64, Gradients)> {
        let head = self
            .heads
            .get(head_idx)
            .ok_or_else(|| Error::Config(format!("head index {head_idx} out of range")))?;
        if instances.is_empty() {
            return Err(Error::Input("empty batch".into()));
        }
        let mut tape = Tape::new();
        let mut losses = Vec::with_capacity(instances.len());
        for inst in instances {
            let label = single_label(inst)?;
            let class_idx = head.label_set.index_of(label)?;
            let h = self.encode(&mut tape, &inst.tokens)?;
            let logits = tape.affine(&self.params, head.weight, head.bias, h)?;
            let probs = tape.softmax(logits)?;
            losses.push(tape.cross_entropy(probs, class_idx)?);
        }
        let loss_node = tape.mean(&losses)?;
        let mut grads = tape.backward(&self.params, loss_node, 1.0)?;
        if head.adversarial {
            grads.scale_subset(&self.encoder.param_ids(), -head.lambda_rev);
        }
        Ok((tape.scalar(loss_node), grads))
    }

    /// `task_loss_backward` over a [`Batch`] of dataset indices.
    pub fn batch_loss_backward(
        &self,
        head_idx: usize,
        ds: &TaskDataset,
        batch: &Batch,
    ) -> Result<(f64, Gradients)> {
        let instances: Vec<&Instance> = batch.indices.iter().map(|&i| &ds.instances[i]).collect();
        self.task_loss_backward(head_idx, &instances)
    }

    /// Fraction of instances whose predicted code is in the gold set.
    pub fn accuracy(&self, head_idx: usize, ds: &TaskDataset) -> Result<f64> {
        if ds.is_empty() {
            return Err(Error::EmptyDataset(ds.task.clone()));
        }
        let mut hits = 0usize;
        for inst in &ds.instances {
            if inst.labels.contains(&self.predict_code(head_idx, &inst.tokens)?) {
                hits += 1;
            }
        }
        Ok(hits as f64 / ds.len() as f64)
    }
}

fn single_label(inst: &Instance) -> Result<u32> {
    let mut it = inst.labels.iter();
    match (it.next(), it.next()) {
        (Some(&l), None) => Ok(l),
        (None, _) => Err(Error::Label(format!("instance `{}` has no label", inst.id))),
        _ => Err(Error::Label(format!(
            "instance `{}` is multi-label; expand the dataset before training",
            inst.id
        ))),
    }
}

#[cfg(test)]
mod tests;
