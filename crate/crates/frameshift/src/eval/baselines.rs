//! Baseline classifiers: random, majority-class, and tf-idf features with
//! a softmax-regression classifier trained on the numeric core.

use std::collections::HashMap;

use crate::data::{LabelSet, TaskDataset};
use crate::error::{Error, Result};
use crate::numcore::{sgd_step, Param, ParamStore, Rng, Tape, Tensor2};

/// Uniform random class per instance.
pub fn baseline_random(label_set: LabelSet, n: usize, rng: &mut Rng) -> Vec<u32> {
    let codes = label_set.codes();
    (0..n).map(|_| codes[rng.below(codes.len())]).collect()
}

/// Constant prediction: the most frequent class of the training split
/// (never the test split), ties broken toward the lowest code.
pub fn baseline_majority(train: &TaskDataset, test: &TaskDataset) -> Result<Vec<u32>> {
    if train.is_empty() {
        return Err(Error::EmptyDataset(train.task.clone()));
    }
    let stats = train.stats();
    let majority = train
        .label_set
        .codes()
        .iter()
        .copied()
        .max_by_key(|c| (stats.class_counts[c], std::cmp::Reverse(*c)))
        .expect("label sets are nonempty");
    Ok(vec![majority; test.len()])
}

/// tf-idf featurizer: `tf` is the raw in-document count, `idf(t) =
/// ln((1 + N) / (1 + df(t))) + 1`, rows L2-normalized.
#[derive(Debug, Clone)]
pub struct TfIdfVectorizer {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    idf: Vec<f64>,
}

impl TfIdfVectorizer {
    pub fn fit(docs: &[&[String]]) -> Result<Self> {
        let mut vocab: Vec<String> = docs
            .iter()
            .flat_map(|d| d.iter().cloned())
            .collect::<std::collections::BTreeSet<String>>()
            .into_iter()
            .collect();
        if vocab.is_empty() {
            return Err(Error::Feature("empty vocabulary".into()));
        }
        vocab.sort();
        let index: HashMap<String, usize> = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let mut df = vec![0usize; vocab.len()];
        for doc in docs {
            let mut seen = vec![false; vocab.len()];
            for tok in doc.iter() {
                let i = index[tok];
                if !seen[i] {
                    seen[i] = true;
                    df[i] += 1;
                }
            }
        }
        let n = docs.len() as f64;
        let idf = df
            .iter()
            .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        Ok(TfIdfVectorizer { vocab, index, idf })
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn idf(&self, word: &str) -> Option<f64> {
        self.index.get(word).map(|&i| self.idf[i])
    }

    /// Weighted bag-of-words vector, L2-normalized. Unknown tokens are
    /// ignored; an all-unknown document maps to the zero vector.
    pub fn transform(&self, tokens: &[String]) -> Vec<f64> {
        let mut v = vec![0.0; self.vocab.len()];
        for tok in tokens {
            if let Some(&i) = self.index.get(tok) {
                v[i] += self.idf[i];
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        }
        v
    }
}

/// Fit a vectorizer on a corpus and return it with the document matrix.
pub fn tfidf_features(docs: &[&[String]]) -> Result<(TfIdfVectorizer, Vec<Vec<f64>>)> {
    let vectorizer = TfIdfVectorizer::fit(docs)?;
    let matrix = docs.iter().map(|d| vectorizer.transform(d)).collect();
    Ok((vectorizer, matrix))
}

#[derive(Debug, Clone)]
pub struct SoftmaxRegressionConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for SoftmaxRegressionConfig {
    fn default() -> Self {
        SoftmaxRegressionConfig {
            lr: 1.0,
            epochs: 50,
            batch_size: 16,
            weight_decay: 1e-7,
            seed: 1,
        }
    }
}

/// Softmax regression over tf-idf features, trained with the shared SGD
/// core. Returns one predicted code per test instance, ties broken toward
/// the lowest class code.
pub fn softmax_regression(
    train: &TaskDataset,
    test: &TaskDataset,
    config: &SoftmaxRegressionConfig,
) -> Result<Vec<u32>> {
    if train.is_empty() {
        return Err(Error::EmptyDataset(train.task.clone()));
    }
    let train_docs: Vec<&[String]> = train.instances.iter().map(|i| i.tokens.as_slice()).collect();
    let (vectorizer, features) = tfidf_features(&train_docs)?;

    let codes = train.label_set.codes();
    let k = codes.len();
    let dim = vectorizer.vocab().len();
    let mut rng = Rng::from_seed(config.seed);
    let mut params = ParamStore::new();
    let w = params.add(Param::trainable("softmax_reg.w", Tensor2::zeros(k, dim)));
    let b = params.add(Param::trainable("softmax_reg.b", Tensor2::zeros(k, 1)));

    let targets: Vec<usize> = train
        .instances
        .iter()
        .map(|inst| {
            let mut it = inst.labels.iter();
            match (it.next(), it.next()) {
                (Some(&l), None) => train.label_set.index_of(l),
                _ => Err(Error::Label(format!(
                    "instance `{}` must be single-label for training",
                    inst.id
                ))),
            }
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..train.len()).collect();
    for _ in 0..config.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(config.batch_size) {
            let mut tape = Tape::new();
            let mut losses = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let x = tape.input(features[i].clone());
                let logits = tape.affine(&params, w, b, x)?;
                let probs = tape.softmax(logits)?;
                losses.push(tape.cross_entropy(probs, targets[i])?);
            }
            let loss = tape.mean(&losses)?;
            let grads = tape.backward(&params, loss, 1.0)?;
            sgd_step(&mut params, &grads, config.lr, config.weight_decay)?;
        }
    }

    let mut predictions = Vec::with_capacity(test.len());
    for inst in &test.instances {
        let mut tape = Tape::new();
        let x = tape.input(vectorizer.transform(&inst.tokens));
        let logits = tape.affine(&params, w, b, x)?;
        let probs = tape.softmax(logits)?;
        let p = tape.value(probs);
        let mut best = 0;
        for (i, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = i;
            }
        }
        predictions.push(codes[best]);
    }
    Ok(predictions)
}
