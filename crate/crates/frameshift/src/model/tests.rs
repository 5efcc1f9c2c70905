use std::collections::BTreeSet;

use super::*;
use crate::data::{Domain, Split};
use crate::numcore::{grad_check, sgd_step, Tape};

fn table(words: &[&str], dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = Rng::from_seed(seed);
    EmbeddingTable::random(words.iter().map(|s| s.to_string()).collect(), dim, &mut rng)
}

fn zero_table(words: &[&str], dim: usize) -> EmbeddingTable {
    let words: Vec<String> = words.iter().map(|s| s.to_string()).collect();
    let vectors = vec![vec![0.0; dim]; words.len()];
    EmbeddingTable::new(words, vectors, vec![0.0; dim])
}

fn toks(words: &[&str]) -> Vec<String> {
    words.iter().map(|s| s.to_string()).collect()
}

fn inst(id: &str, tokens: &[&str], label: u32) -> Instance {
    Instance {
        id: id.into(),
        text: tokens.join(" "),
        tokens: toks(tokens),
        labels: BTreeSet::from([label]),
        domain: Domain::News,
        split: Split::Train,
    }
}

/// Model with every trainable parameter forced to zero.
fn zeroed_model(words: &[&str], dim: usize, hidden: usize, heads: &[HeadSpec]) -> Model {
    let mut model = Model::new(&zero_table(words, dim), hidden, 2, heads, &mut Rng::from_seed(1))
        .unwrap();
    for id in model.params.trainable_ids() {
        let t = &mut model.params.get_mut(id).value;
        t.values.iter_mut().for_each(|v| *v = 0.0);
    }
    model
}

#[test]
fn lstm_step_zero_params_gives_zero_state() {
    // Gates sit at sigmoid(0) = 0.5 but the candidate is tanh(0) = 0, so
    // both h and c stay exactly zero.
    let model = zeroed_model(&["a"], 3, 4, &[HeadSpec::plain("main", LabelSet::Frames)]);
    let mut tape = Tape::new();
    let x = tape.input(vec![0.7, -0.3, 0.1]);
    let h0 = tape.input(vec![0.0; 4]);
    let (h, c) = lstm_step(&mut tape, &model.params, &model.encoder.layers[0], x, h0, h0).unwrap();
    assert_eq!(tape.value(h), &[0.0; 4]);
    assert_eq!(tape.value(c), &[0.0; 4]);
}

#[test]
fn saturated_forget_gate_carries_memory() {
    let mut model = zeroed_model(&["a"], 3, 4, &[HeadSpec::plain("main", LabelSet::Frames)]);
    let layer = model.encoder.layers[0].clone();
    // f ~ 1, i ~ 0: c_t must equal c_prev.
    for v in &mut model.params.get_mut(layer.b[1]).value.values {
        *v = 30.0;
    }
    for v in &mut model.params.get_mut(layer.b[0]).value.values {
        *v = -30.0;
    }
    let mut tape = Tape::new();
    let x = tape.input(vec![0.2, 0.4, -0.6]);
    let h0 = tape.input(vec![0.0; 4]);
    let c_prev = tape.input(vec![0.3, -0.8, 0.05, 1.2]);
    let (_, c) = lstm_step(&mut tape, &model.params, &layer, x, h0, c_prev).unwrap();
    for (got, want) in tape.value(c).iter().zip([0.3, -0.8, 0.05, 1.2]) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn lstm_cell_gradcheck_at_1e4() {
    let table = table(&["a"], 3, 2);
    let mut model = Model::new(
        &table,
        4,
        1,
        &[HeadSpec::plain("main", LabelSet::Quality)],
        &mut Rng::from_seed(3),
    )
    .unwrap();
    let head_w = model.heads[0].weight;
    let head_b = model.heads[0].bias;
    let layer = model.encoder.layers[0].clone();
    let loss_fn = |params: &ParamStore| {
        let mut tape = Tape::new();
        let x = tape.input(vec![0.5, -0.25, 0.75]);
        let h0 = tape.input(vec![0.0; 4]);
        let (h, _) = lstm_step(&mut tape, params, &layer, x, h0, h0)?;
        let logits = tape.affine(params, head_w, head_b, h)?;
        let probs = tape.softmax(logits)?;
        let loss = tape.cross_entropy(probs, 1)?;
        let grads = tape.backward(params, loss, 1.0)?;
        Ok((tape.scalar(loss), grads))
    };
    let report = grad_check(&mut model.params, loss_fn, 1e-4, None).unwrap();
    assert!(report.passed(), "max rel error {:e}", report.max_rel_error);
}

#[test]
fn encode_zero_params_single_token_gives_zeros() {
    let model = zeroed_model(&["a", "b"], 3, 5, &[HeadSpec::plain("main", LabelSet::Frames)]);
    let mut tape = Tape::new();
    let h = model.encode(&mut tape, &toks(&["a"])).unwrap();
    assert_eq!(tape.value(h), &[0.0; 5]);
}

#[test]
fn encode_rejects_empty_sequence() {
    let model = zeroed_model(&["a"], 3, 4, &[HeadSpec::plain("main", LabelSet::Frames)]);
    let mut tape = Tape::new();
    assert!(matches!(
        model.encode(&mut tape, &[]),
        Err(Error::Input(_))
    ));
}

#[test]
fn padding_beyond_true_length_never_changes_h() {
    let table = table(&["a", "b", "c", "pad"], 4, 7);
    let model = Model::new(
        &table,
        6,
        2,
        &[HeadSpec::plain("main", LabelSet::Frames)],
        &mut Rng::from_seed(8),
    )
    .unwrap();
    let seq = toks(&["a", "c", "b"]);
    let mut padded = seq.clone();
    padded.extend(toks(&["pad", "pad", "pad"]));

    let mut tape1 = Tape::new();
    let h1 = model.encode(&mut tape1, &seq).unwrap();
    let mut tape2 = Tape::new();
    let h2 = model.encode_truncated(&mut tape2, &padded, 3).unwrap();
    assert_eq!(tape1.value(h1), tape2.value(h2), "bit-exact masking");
}

#[test]
fn batched_encoding_equals_sequential_encoding() {
    let table = table(&["a", "b", "c", "d", "e"], 4, 9);
    let model = Model::new(
        &table,
        5,
        2,
        &[HeadSpec::plain("main", LabelSet::Frames)],
        &mut Rng::from_seed(10),
    )
    .unwrap();
    let seq1 = toks(&["a", "b", "c"]);
    let seq2 = toks(&["d", "e", "a", "b", "c"]);

    // Both sequences on one tape (a "batch"), then each alone.
    let mut batch_tape = Tape::new();
    let bh1 = model.encode(&mut batch_tape, &seq1).unwrap();
    let bh2 = model.encode(&mut batch_tape, &seq2).unwrap();

    let mut t1 = Tape::new();
    let s1 = model.encode(&mut t1, &seq1).unwrap();
    let mut t2 = Tape::new();
    let s2 = model.encode(&mut t2, &seq2).unwrap();

    assert_eq!(batch_tape.value(bh1), t1.value(s1));
    assert_eq!(batch_tape.value(bh2), t2.value(s2));

    // Permuting batch order leaves each h unchanged.
    let mut swapped = Tape::new();
    let sh2 = model.encode(&mut swapped, &seq2).unwrap();
    let sh1 = model.encode(&mut swapped, &seq1).unwrap();
    assert_eq!(swapped.value(sh1), t1.value(s1));
    assert_eq!(swapped.value(sh2), t2.value(s2));
}

#[test]
fn zero_params_predict_uniform() {
    let model = zeroed_model(&["a", "b"], 3, 4, &[HeadSpec::plain("main", LabelSet::Frames)]);
    let p = model.predict(0, &toks(&["a", "b"])).unwrap();
    assert_eq!(p.len(), 5);
    for v in &p {
        assert!((v - 0.2).abs() < 1e-12);
    }
}

#[test]
fn predict_is_a_distribution_over_head_labels() {
    let table = table(&["a", "b", "c"], 4, 12);
    let model = Model::new(
        &table,
        6,
        2,
        &[HeadSpec::plain("main", LabelSet::Frames)],
        &mut Rng::from_seed(13),
    )
    .unwrap();
    let p = model.predict(0, &toks(&["a", "zebra", "c"])).unwrap();
    assert_eq!(p.len(), 5);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn argmax_ties_break_to_lowest_code() {
    // All-zero parameters give a uniform distribution: a full tie.
    let model = zeroed_model(&["a"], 3, 4, &[HeadSpec::plain("main", LabelSet::Frames)]);
    assert_eq!(model.predict_code(0, &toks(&["a"])).unwrap(), 1);
}

#[test]
fn perfect_confidence_gives_zero_loss_and_gradients() {
    let mut model = zeroed_model(&["a"], 3, 4, &[HeadSpec::plain("main", LabelSet::Quality)]);
    // Zero encoder output; drive the correct logit through the bias.
    let bias = model.heads[0].bias;
    model.params.get_mut(bias).value.values = vec![120.0, 0.0];
    let i = inst("x", &["a"], 0);
    let (loss, grads) = model.task_loss_backward(0, &[&i]).unwrap();
    assert!(loss < 1e-12, "loss {loss}");
    for (_, g) in grads.iter() {
        for v in g {
            assert!(v.abs() < 1e-12, "gradient {v}");
        }
    }
}

#[test]
fn batch_loss_is_mean_of_instance_losses() {
    let table = table(&["a", "b", "c"], 3, 20);
    let model = Model::new(
        &table,
        4,
        2,
        &[HeadSpec::plain("main", LabelSet::Quality)],
        &mut Rng::from_seed(21),
    )
    .unwrap();
    let i1 = inst("x1", &["a", "b"], 0);
    let i2 = inst("x2", &["c"], 1);
    let (l1, _) = model.task_loss_backward(0, &[&i1]).unwrap();
    let (l2, _) = model.task_loss_backward(0, &[&i2]).unwrap();
    let (both, _) = model.task_loss_backward(0, &[&i1, &i2]).unwrap();
    assert!((both - (l1 + l2) / 2.0).abs() < 1e-15);
}

#[test]
fn label_outside_head_set_is_a_label_error() {
    let model = zeroed_model(&["a"], 3, 4, &[HeadSpec::plain("main", LabelSet::Quality)]);
    let bad = inst("x", &["a"], 7);
    assert!(matches!(
        model.task_loss_backward(0, &[&bad]),
        Err(Error::Label(_))
    ));
}

/// Builds a model with a plain domain head and an otherwise-identical one
/// whose domain head is adversarial.
fn reversal_pair(seed: u64, lambda: f64) -> (Model, Model) {
    let words = ["a", "b", "c", "d"];
    let table = table(&words, 4, seed.wrapping_add(100));
    let plain_specs = [
        HeadSpec::plain("main", LabelSet::Frames),
        HeadSpec::plain("domain", LabelSet::Domain),
    ];
    let adv_specs = [
        HeadSpec::plain("main", LabelSet::Frames),
        HeadSpec::adversarial("domain", lambda),
    ];
    let plain = Model::new(&table, 5, 2, &plain_specs, &mut Rng::from_seed(seed)).unwrap();
    let adv = Model::new(&table, 5, 2, &adv_specs, &mut Rng::from_seed(seed)).unwrap();
    (plain, adv)
}

#[test]
fn gradient_reversal_flips_and_scales_encoder_gradients_exactly() {
    for seed in 0..5u64 {
        let lambda = 0.25 + seed as f64 * 0.5;
        let (plain, adv) = reversal_pair(seed, lambda);
        let batch = [
            inst("s1", &["a", "b", "c"], 0),
            inst("s2", &["d", "a"], 1),
            inst("s3", &["c", "c", "d", "b"], 0),
        ];
        let refs: Vec<&Instance> = batch.iter().collect();
        let (loss_p, g_plain) = plain.task_loss_backward(1, &refs).unwrap();
        let (loss_a, g_adv) = adv.task_loss_backward(1, &refs).unwrap();
        // Forward pass is identical.
        assert_eq!(loss_p, loss_a);
        // Shared-encoder gradients flip: exactly -lambda times, bit-level.
        for id in plain.encoder.param_ids() {
            let gp = g_plain.get(id).unwrap();
            let ga = g_adv.get(id).unwrap();
            for (p, a) in gp.iter().zip(ga) {
                assert_eq!(-lambda * p, *a, "seed {seed}");
            }
        }
        // Head-local gradients identical in both modes.
        for id in [plain.heads[1].weight, plain.heads[1].bias] {
            assert_eq!(g_plain.get(id).unwrap(), g_adv.get(id).unwrap());
        }
    }
}

#[test]
fn reversal_matches_negated_finite_difference() {
    // The analytic adversarial gradient at lambda = 1 equals minus the
    // finite-difference gradient of the discriminator loss.
    let (_, adv) = reversal_pair(3, 1.0);
    let mut model = adv;
    let batch = [inst("s1", &["a", "b"], 0), inst("s2", &["c"], 1)];
    let encoder_ids = model.encoder.param_ids();
    // Manual finite differences over a few encoder entries.
    let refs: Vec<&Instance> = batch.iter().collect();
    let (_, analytic) = model.task_loss_backward(1, &refs).unwrap();
    let h = 1e-5;
    let mut checked = 0;
    for &id in encoder_ids.iter().take(3) {
        for i in [0usize, 1] {
            let orig = model.params.get(id).value.values[i];
            model.params.get_mut(id).value.values[i] = orig + h;
            let (lp, _) = model.task_loss_backward(1, &refs).unwrap();
            model.params.get_mut(id).value.values[i] = orig - h;
            let (lm, _) = model.task_loss_backward(1, &refs).unwrap();
            model.params.get_mut(id).value.values[i] = orig;
            let fd = (lp - lm) / (2.0 * h);
            let got = analytic.get(id).unwrap()[i];
            assert!(
                (got + fd).abs() / (got.abs() + fd.abs()).max(1e-8) < 1e-4,
                "analytic {got} should equal -fd {fd}"
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 6);
}

#[test]
fn heads_share_the_encoder() {
    // One SGD step driven by the aux head changes the h every other task
    // sees: hard parameter sharing.
    let table = table(&["a", "b"], 3, 30);
    let mut model = Model::new(
        &table,
        4,
        2,
        &[
            HeadSpec::plain("main", LabelSet::Frames),
            HeadSpec::plain("aux", LabelSet::Quality),
        ],
        &mut Rng::from_seed(31),
    )
    .unwrap();
    let probe = toks(&["a", "b"]);
    let before = model.predict(0, &probe).unwrap();
    let aux_inst = inst("x", &["b", "a"], 0);
    let (_, grads) = model.task_loss_backward(1, &[&aux_inst]).unwrap();
    sgd_step(&mut model.params, &grads, 0.5, 0.0).unwrap();
    let after = model.predict(0, &probe).unwrap();
    assert_ne!(before, after, "aux update must move the main head's output");
}

#[test]
fn single_instance_step_decreases_its_loss_for_small_lr() {
    // Line-search property: some lr in a decreasing ladder improves the loss.
    for seed in 0..10u64 {
        let table = table(&["a", "b", "c"], 3, 40 + seed);
        let model = Model::new(
            &table,
            4,
            2,
            &[HeadSpec::plain("main", LabelSet::Frames)],
            &mut Rng::from_seed(50 + seed),
        )
        .unwrap();
        let x = inst("x", &["a", "c", "b"], 6);
        let (loss0, grads) = model.task_loss_backward(0, &[&x]).unwrap();
        let mut improved = false;
        for lr in [0.5, 0.1, 0.02, 0.004] {
            let mut trial = model.clone();
            sgd_step(&mut trial.params, &grads, lr, 0.0).unwrap();
            let (loss1, _) = trial.task_loss_backward(0, &[&x]).unwrap();
            if loss1 < loss0 {
                improved = true;
                break;
            }
        }
        assert!(improved, "no lr in the ladder improved the loss (seed {seed})");
    }
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let table = table(&["alpha", "beta", "gamma"], 4, 60);
    let mut model = Model::new(
        &table,
        5,
        2,
        &[
            HeadSpec::plain("main", LabelSet::Frames),
            HeadSpec::adversarial("domain", 0.7),
        ],
        &mut Rng::from_seed(61),
    )
    .unwrap();
    model.run_config.insert("mode".into(), "adversarial".into());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();

    for (id, p) in model.params.iter() {
        let q = loaded.params.get(id);
        assert_eq!(p.name, q.name);
        assert_eq!(p.trainable, q.trainable);
        assert_eq!(p.value.values, q.value.values, "param {} differs", p.name);
    }
    assert_eq!(model.vocab, loaded.vocab);
    assert_eq!(model.run_config, loaded.run_config);

    // Saving the loaded model reproduces the file byte for byte.
    let path2 = dir.path().join("model2.json");
    save_model(&loaded, &path2).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&path2).unwrap()
    );

    // And the loaded model predicts identically.
    let probe = toks(&["alpha", "gamma"]);
    assert_eq!(
        model.predict(0, &probe).unwrap(),
        loaded.predict(0, &probe).unwrap()
    );
}
