//! Gradient tape: an ordered record of forward steps that is replayed in
//! exact reverse order to produce analytic gradients.
//!
//! Node values are plain `f64` vectors computed eagerly as steps are
//! recorded. Parameters live outside the tape in a [`ParamStore`]; the tape
//! only holds their ids, so recording a step never copies a weight matrix.
//! `backward` must therefore be called with the same store the forward pass
//! used, before any update is applied.

use std::collections::BTreeMap;

use super::ops::{sigmoid_scalar, softmax, CROSS_ENTROPY_EPS};
use super::tensor::{ParamId, ParamStore};
use crate::error::{Error, Result};

/// Index of a recorded node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Step {
    /// Constant leaf (embedded token, initial state). No gradient flows out.
    Input,
    /// `y = W x + b`
    Affine { w: ParamId, b: ParamId, x: NodeId },
    /// `y = W x + U h + b` (the gate pre-activation of a recurrent cell)
    Affine2 {
        w: ParamId,
        u: ParamId,
        b: ParamId,
        x: NodeId,
        h: NodeId,
    },
    Sigmoid { x: NodeId },
    Tanh { x: NodeId },
    /// Elementwise product.
    Mul { a: NodeId, b: NodeId },
    /// Elementwise sum.
    Add { a: NodeId, b: NodeId },
    Softmax { x: NodeId },
    /// `-ln(max(p[label], eps))`, scalar output.
    CrossEntropy { p: NodeId, label: usize },
    /// Mean of scalar nodes, scalar output.
    Mean { xs: Vec<NodeId> },
}

/// Gradients keyed by parameter id. Iteration order is id order, so any
/// consumer loop is deterministic.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    entries: BTreeMap<ParamId, Vec<f64>>,
}

impl Gradients {
    pub fn new() -> Self {
        Gradients::default()
    }

    pub fn accumulate(&mut self, id: ParamId, contribution: &[f64]) {
        match self.entries.get_mut(&id) {
            Some(g) => {
                debug_assert_eq!(g.len(), contribution.len());
                for (gi, ci) in g.iter_mut().zip(contribution) {
                    *gi += ci;
                }
            }
            None => {
                self.entries.insert(id, contribution.to_vec());
            }
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.entries.get(&id).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &[f64])> {
        self.entries.iter().map(|(id, g)| (*id, g.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Multiply the entries of the given parameters by `factor`. Entries are
    /// scaled exactly once each, so `scale_subset(ids, c)` yields gradients
    /// bit-identical to `c * g` elementwise.
    pub fn scale_subset(&mut self, ids: &[ParamId], factor: f64) {
        for id in ids {
            if let Some(g) = self.entries.get_mut(id) {
                for gi in g.iter_mut() {
                    *gi *= factor;
                }
            }
        }
    }
}

/// The tape itself. One tape records one batch's forward pass.
#[derive(Debug, Default)]
pub struct Tape {
    steps: Vec<Step>,
    values: Vec<Vec<f64>>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn value(&self, node: NodeId) -> &[f64] {
        &self.values[node.0]
    }

    /// Value of a scalar node.
    pub fn scalar(&self, node: NodeId) -> f64 {
        debug_assert_eq!(self.values[node.0].len(), 1);
        self.values[node.0][0]
    }

    fn push(&mut self, step: Step, value: Vec<f64>) -> NodeId {
        debug_assert!(value.iter().all(|v| v.is_finite()), "non-finite forward value");
        self.steps.push(step);
        self.values.push(value);
        NodeId(self.steps.len() - 1)
    }

    /// Constant leaf node.
    pub fn input(&mut self, values: Vec<f64>) -> NodeId {
        self.push(Step::Input, values)
    }

    /// `y = W x + b`. Rejects mismatched shapes, naming both sides.
    pub fn affine(
        &mut self,
        params: &ParamStore,
        w: ParamId,
        b: ParamId,
        x: NodeId,
    ) -> Result<NodeId> {
        let wt = &params.get(w).value;
        let bt = &params.get(b).value;
        let xv = &self.values[x.0];
        if wt.cols != xv.len() {
            return Err(Error::Shape {
                op: "affine",
                expected: format!("x of length {} for W {}", wt.cols, wt.shape_string()),
                got: format!("x of length {}", xv.len()),
            });
        }
        if bt.len() != wt.rows {
            return Err(Error::Shape {
                op: "affine",
                expected: format!("b of length {} for W {}", wt.rows, wt.shape_string()),
                got: format!("b of length {}", bt.len()),
            });
        }
        let mut y = vec![0.0; wt.rows];
        for r in 0..wt.rows {
            let row = wt.row(r);
            let mut acc = bt.values[r];
            for (wv, xv) in row.iter().zip(xv.iter()) {
                acc += wv * xv;
            }
            y[r] = acc;
        }
        Ok(self.push(Step::Affine { w, b, x }, y))
    }

    /// `y = W x + U h + b`.
    pub fn affine2(
        &mut self,
        params: &ParamStore,
        w: ParamId,
        u: ParamId,
        b: ParamId,
        x: NodeId,
        h: NodeId,
    ) -> Result<NodeId> {
        let wt = &params.get(w).value;
        let ut = &params.get(u).value;
        let bt = &params.get(b).value;
        let xv = &self.values[x.0];
        let hv = &self.values[h.0];
        if wt.cols != xv.len() || ut.cols != hv.len() || wt.rows != ut.rows || bt.len() != wt.rows
        {
            return Err(Error::Shape {
                op: "affine2",
                expected: format!(
                    "W {} with x of length {}, U rows {} cols matching h, b of length {}",
                    wt.shape_string(),
                    wt.cols,
                    wt.rows,
                    wt.rows
                ),
                got: format!(
                    "x length {}, U {}, h length {}, b length {}",
                    xv.len(),
                    ut.shape_string(),
                    hv.len(),
                    bt.len()
                ),
            });
        }
        let mut y = vec![0.0; wt.rows];
        for r in 0..wt.rows {
            let mut acc = bt.values[r];
            for (wv, xi) in wt.row(r).iter().zip(xv.iter()) {
                acc += wv * xi;
            }
            for (uv, hi) in ut.row(r).iter().zip(hv.iter()) {
                acc += uv * hi;
            }
            y[r] = acc;
        }
        Ok(self.push(Step::Affine2 { w, u, b, x, h }, y))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let y: Vec<f64> = self.values[x.0].iter().map(|&v| sigmoid_scalar(v)).collect();
        self.push(Step::Sigmoid { x }, y)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let y: Vec<f64> = self.values[x.0].iter().map(|&v| v.tanh()).collect();
        self.push(Step::Tanh { x }, y)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.values[a.0].len() != self.values[b.0].len() {
            return Err(Error::Shape {
                op: "mul",
                expected: format!("length {}", self.values[a.0].len()),
                got: format!("length {}", self.values[b.0].len()),
            });
        }
        let y: Vec<f64> = self.values[a.0]
            .iter()
            .zip(self.values[b.0].iter())
            .map(|(x, z)| x * z)
            .collect();
        Ok(self.push(Step::Mul { a, b }, y))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.values[a.0].len() != self.values[b.0].len() {
            return Err(Error::Shape {
                op: "add",
                expected: format!("length {}", self.values[a.0].len()),
                got: format!("length {}", self.values[b.0].len()),
            });
        }
        let y: Vec<f64> = self.values[a.0]
            .iter()
            .zip(self.values[b.0].iter())
            .map(|(x, z)| x + z)
            .collect();
        Ok(self.push(Step::Add { a, b }, y))
    }

    pub fn softmax(&mut self, x: NodeId) -> Result<NodeId> {
        let y = softmax(&self.values[x.0])?;
        Ok(self.push(Step::Softmax { x }, y))
    }

    /// Scalar node `-ln(max(p[label], eps))`.
    pub fn cross_entropy(&mut self, p: NodeId, label: usize) -> Result<NodeId> {
        let pv = &self.values[p.0];
        if label >= pv.len() {
            return Err(Error::Label(format!(
                "class index {label} out of range for {} classes",
                pv.len()
            )));
        }
        let sum: f64 = pv.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Numeric(format!(
                "cross_entropy input sums to {sum}, not 1"
            )));
        }
        let loss = -(pv[label].max(CROSS_ENTROPY_EPS)).ln();
        Ok(self.push(Step::CrossEntropy { p, label }, vec![loss]))
    }

    /// Scalar mean of scalar nodes.
    pub fn mean(&mut self, xs: &[NodeId]) -> Result<NodeId> {
        if xs.is_empty() {
            return Err(Error::Shape {
                op: "mean",
                expected: "at least one node".into(),
                got: "0 nodes".into(),
            });
        }
        let mut acc = 0.0;
        for n in xs {
            debug_assert_eq!(self.values[n.0].len(), 1, "mean over non-scalar node");
            acc += self.values[n.0][0];
        }
        let v = acc / xs.len() as f64;
        Ok(self.push(Step::Mean { xs: xs.to_vec() }, vec![v]))
    }

    /// Replay the tape backwards from a scalar `loss` node seeded with
    /// `seed_grad`, returning gradients for every trainable parameter
    /// touched. Frozen parameters receive no entry.
    pub fn backward(
        &self,
        params: &ParamStore,
        loss: NodeId,
        seed_grad: f64,
    ) -> Result<Gradients> {
        if self.steps.is_empty() {
            return Err(Error::TapeState(
                "backward invoked on an empty tape (no forward pass recorded)".into(),
            ));
        }
        if loss.0 >= self.steps.len() {
            return Err(Error::TapeState(format!(
                "node {} not on tape of length {}",
                loss.0,
                self.steps.len()
            )));
        }
        if self.values[loss.0].len() != 1 {
            return Err(Error::TapeState(format!(
                "backward seed must be a scalar node, got length {}",
                self.values[loss.0].len()
            )));
        }

        let mut node_grads: Vec<Vec<f64>> =
            self.values.iter().map(|v| vec![0.0; v.len()]).collect();
        node_grads[loss.0][0] = seed_grad;
        let mut grads = Gradients::new();

        for idx in (0..=loss.0).rev() {
            let g = std::mem::take(&mut node_grads[idx]);
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            match &self.steps[idx] {
                Step::Input => {}
                Step::Affine { w, b, x } => {
                    let wt = &params.get(*w).value;
                    let xv = &self.values[x.0];
                    if params.get(*w).trainable {
                        let mut dw = vec![0.0; wt.len()];
                        for r in 0..wt.rows {
                            for c in 0..wt.cols {
                                dw[r * wt.cols + c] = g[r] * xv[c];
                            }
                        }
                        grads.accumulate(*w, &dw);
                    }
                    if params.get(*b).trainable {
                        grads.accumulate(*b, &g);
                    }
                    let dx = &mut node_grads[x.0];
                    for r in 0..wt.rows {
                        let row = wt.row(r);
                        for c in 0..wt.cols {
                            dx[c] += row[c] * g[r];
                        }
                    }
                }
                Step::Affine2 { w, u, b, x, h } => {
                    let wt = &params.get(*w).value;
                    let ut = &params.get(*u).value;
                    let xv = &self.values[x.0];
                    let hv = &self.values[h.0];
                    if params.get(*w).trainable {
                        let mut dw = vec![0.0; wt.len()];
                        for r in 0..wt.rows {
                            for c in 0..wt.cols {
                                dw[r * wt.cols + c] = g[r] * xv[c];
                            }
                        }
                        grads.accumulate(*w, &dw);
                    }
                    if params.get(*u).trainable {
                        let mut du = vec![0.0; ut.len()];
                        for r in 0..ut.rows {
                            for c in 0..ut.cols {
                                du[r * ut.cols + c] = g[r] * hv[c];
                            }
                        }
                        grads.accumulate(*u, &du);
                    }
                    if params.get(*b).trainable {
                        grads.accumulate(*b, &g);
                    }
                    {
                        let dx = &mut node_grads[x.0];
                        for r in 0..wt.rows {
                            let row = wt.row(r);
                            for c in 0..wt.cols {
                                dx[c] += row[c] * g[r];
                            }
                        }
                    }
                    {
                        let dh = &mut node_grads[h.0];
                        for r in 0..ut.rows {
                            let row = ut.row(r);
                            for c in 0..ut.cols {
                                dh[c] += row[c] * g[r];
                            }
                        }
                    }
                }
                Step::Sigmoid { x } => {
                    let y = &self.values[idx];
                    let dx = &mut node_grads[x.0];
                    for i in 0..y.len() {
                        dx[i] += g[i] * y[i] * (1.0 - y[i]);
                    }
                }
                Step::Tanh { x } => {
                    let y = &self.values[idx];
                    let dx = &mut node_grads[x.0];
                    for i in 0..y.len() {
                        dx[i] += g[i] * (1.0 - y[i] * y[i]);
                    }
                }
                Step::Mul { a, b } => {
                    let av = self.values[a.0].clone();
                    let bv = self.values[b.0].clone();
                    {
                        let da = &mut node_grads[a.0];
                        for i in 0..g.len() {
                            da[i] += g[i] * bv[i];
                        }
                    }
                    {
                        let db = &mut node_grads[b.0];
                        for i in 0..g.len() {
                            db[i] += g[i] * av[i];
                        }
                    }
                }
                Step::Add { a, b } => {
                    {
                        let da = &mut node_grads[a.0];
                        for i in 0..g.len() {
                            da[i] += g[i];
                        }
                    }
                    {
                        let db = &mut node_grads[b.0];
                        for i in 0..g.len() {
                            db[i] += g[i];
                        }
                    }
                }
                Step::Softmax { x } => {
                    let y = &self.values[idx];
                    let dot: f64 = g.iter().zip(y.iter()).map(|(gi, yi)| gi * yi).sum();
                    let dx = &mut node_grads[x.0];
                    for i in 0..y.len() {
                        dx[i] += y[i] * (g[i] - dot);
                    }
                }
                Step::CrossEntropy { p, label } => {
                    let pv = &self.values[p.0];
                    // Gradient of -ln(max(p, eps)): zero in the clamped region.
                    if pv[*label] >= CROSS_ENTROPY_EPS {
                        node_grads[p.0][*label] += -g[0] / pv[*label];
                    }
                }
                Step::Mean { xs } => {
                    let share = g[0] / xs.len() as f64;
                    for n in xs {
                        node_grads[n.0][0] += share;
                    }
                }
            }
        }
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{Param, Tensor2};

    fn store_with(entries: Vec<(&str, Tensor2)>) -> (ParamStore, Vec<ParamId>) {
        let mut store = ParamStore::new();
        let ids = entries
            .into_iter()
            .map(|(name, t)| store.add(Param::trainable(name, t)))
            .collect();
        (store, ids)
    }

    #[test]
    fn affine_identity() {
        let (store, ids) = store_with(vec![
            ("w", Tensor2::from_vec(2, 2, vec![1., 0., 0., 1.])),
            ("b", Tensor2::column(&[0., 0.])),
        ]);
        let mut tape = Tape::new();
        let x = tape.input(vec![1., 2.]);
        let y = tape.affine(&store, ids[0], ids[1], x).unwrap();
        assert_eq!(tape.value(y), &[1., 2.]);
    }

    #[test]
    fn affine_row_vector() {
        let (store, ids) = store_with(vec![
            ("w", Tensor2::from_vec(1, 2, vec![2., 3.])),
            ("b", Tensor2::column(&[-5.])),
        ]);
        let mut tape = Tape::new();
        let x = tape.input(vec![1., 1.]);
        let y = tape.affine(&store, ids[0], ids[1], x).unwrap();
        assert_eq!(tape.value(y), &[0.]);
    }

    #[test]
    fn affine_hand_product() {
        let (store, ids) = store_with(vec![
            ("w", Tensor2::from_vec(2, 2, vec![1., 1., 1., -1.])),
            ("b", Tensor2::column(&[1., 1.])),
        ]);
        let mut tape = Tape::new();
        let x = tape.input(vec![0.5, -0.5]);
        let y = tape.affine(&store, ids[0], ids[1], x).unwrap();
        assert_eq!(tape.value(y), &[1., 2.]);
    }

    #[test]
    fn affine_shape_error_names_both_shapes() {
        let (store, ids) = store_with(vec![
            ("w", Tensor2::from_vec(2, 3, vec![0.; 6])),
            ("b", Tensor2::column(&[0., 0.])),
        ]);
        let mut tape = Tape::new();
        let x = tape.input(vec![1., 2.]);
        let err = tape.affine(&store, ids[0], ids[1], x).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("length 2"), "{msg}");
    }

    #[test]
    fn softmax_ce_closed_form_gradient() {
        // loss = CE(softmax(z), 0) with z = [0, 0]: dL/dz = p - onehot = [-0.5, 0.5].
        let (store, ids) = store_with(vec![
            ("w", Tensor2::from_vec(2, 2, vec![1., 0., 0., 1.])),
            ("b", Tensor2::column(&[0., 0.])),
        ]);
        let mut tape = Tape::new();
        let x = tape.input(vec![0., 0.]);
        let z = tape.affine(&store, ids[0], ids[1], x).unwrap();
        let p = tape.softmax(z).unwrap();
        let loss = tape.cross_entropy(p, 0).unwrap();
        let grads = tape.backward(&store, loss, 1.0).unwrap();
        // b receives dL/dz directly (identity W, zero x).
        let db = grads.get(ids[1]).unwrap();
        assert!((db[0] + 0.5).abs() < 1e-12);
        assert!((db[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn affine_weight_gradient_is_outer_product() {
        // y = Wx, L = y[0]  =>  dL/dW = e0 outer x.
        let (store, ids) = store_with(vec![
            ("w", Tensor2::from_vec(1, 3, vec![0.1, 0.2, 0.3])),
            ("b", Tensor2::column(&[0.])),
        ]);
        let mut tape = Tape::new();
        let x = tape.input(vec![2., 3., 4.]);
        let y = tape.affine(&store, ids[0], ids[1], x).unwrap();
        let grads = tape.backward(&store, y, 1.0).unwrap();
        assert_eq!(grads.get(ids[0]).unwrap(), &[2., 3., 4.]);
    }

    #[test]
    fn backward_without_forward_is_a_tape_error() {
        let store = ParamStore::new();
        let tape = Tape::new();
        let err = tape.backward(&store, NodeId(0), 1.0).unwrap_err();
        assert!(matches!(err, Error::TapeState(_)));
    }

    #[test]
    fn frozen_params_get_no_entry() {
        let mut store = ParamStore::new();
        let w = store.add(Param::frozen("emb", Tensor2::from_vec(1, 2, vec![1., 2.])));
        let b = store.add(Param::trainable("b", Tensor2::column(&[0.])));
        let mut tape = Tape::new();
        let x = tape.input(vec![1., 1.]);
        let y = tape.affine(&store, w, b, x).unwrap();
        let grads = tape.backward(&store, y, 1.0).unwrap();
        assert!(grads.get(w).is_none());
        assert!(grads.get(b).is_some());
    }

    #[test]
    fn mean_distributes_gradient() {
        let (store, ids) = store_with(vec![
            ("w", Tensor2::from_vec(1, 1, vec![1.])),
            ("b", Tensor2::column(&[0.])),
        ]);
        let mut tape = Tape::new();
        let mut losses = Vec::new();
        for v in [1.0, 3.0] {
            let x = tape.input(vec![v]);
            losses.push(tape.affine(&store, ids[0], ids[1], x).unwrap());
        }
        let m = tape.mean(&losses).unwrap();
        assert_eq!(tape.scalar(m), 2.0);
        let grads = tape.backward(&store, m, 1.0).unwrap();
        // dm/dw = (1 + 3)/2 = 2, dm/db = 1.
        assert_eq!(grads.get(ids[0]).unwrap(), &[2.0]);
        assert_eq!(grads.get(ids[1]).unwrap(), &[1.0]);
    }
}
