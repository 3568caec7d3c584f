//! Binary sentiment from attention-pooled token embeddings.
//!
//! A shared attention vector scores each token, `alpha_t = w_att . h_t`, and
//! the pooled vector is `H = sum_t e_t h_t` with `e = softmax(alpha)`. Three
//! logistic heads read `H` and the final label is their majority vote.
//!
//! The softmax is the standard normalized exponential, evaluated after
//! subtracting `max(alpha)` so large logits cannot overflow.

mod io;
mod train;

pub use io::{embed_for_tests, load_embeddings, load_model, parse_embeddings, parse_model, write_model, EmbeddingMap};
pub use train::{gradient_check, loss_and_gradient, train_ensemble, train_head, Gradient, Sample, TrainConfig, TrainInit, TrainOutcome};

use crate::error::{Error, Result};

/// `T x d` token embeddings stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    dim: usize,
    values: Vec<f64>,
}

impl EmbeddingSequence {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().ok_or(Error::EmptySequence)?.len();
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: row.len(),
                });
            }
            values.extend(row);
        }
        Self::from_flat(dim, values)
    }

    pub fn from_flat(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.is_empty() {
            return Err(Error::EmptySequence);
        }
        if values.len() % dim != 0 {
            return Err(Error::Dimension {
                expected: dim,
                got: values.len() % dim,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding"));
        }
        Ok(EmbeddingSequence { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub w_att: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub w: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentModel {
    attention: AttentionParams,
    heads: [HeadParams; 3],
}

impl SentimentModel {
    pub fn new(attention: AttentionParams, heads: [HeadParams; 3]) -> Result<Self> {
        let dim = attention.w_att.len();
        if dim == 0 {
            return Err(Error::Config("model dimension must be at least 1".into()));
        }
        for head in &heads {
            check_dim(dim, head.w.len())?;
            if !head.b.is_finite() || head.w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("head parameters"));
            }
        }
        if attention.w_att.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("attention parameters"));
        }
        Ok(SentimentModel { attention, heads })
    }

    pub fn dim(&self) -> usize {
        self.attention.w_att.len()
    }

    pub fn attention(&self) -> &AttentionParams {
        &self.attention
    }

    pub fn heads(&self) -> &[HeadParams; 3] {
        &self.heads
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SentimentLabel {
    Negative = 0,
    Positive = 1,
}

impl SentimentLabel {
    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn from_value(v: u8) -> Option<Self> {
        match v {
            0 => Some(SentimentLabel::Negative),
            1 => Some(SentimentLabel::Positive),
            _ => None,
        }
    }

    pub fn target(self) -> f64 {
        f64::from(self.value())
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Softmax attention weights over the token scores.
pub fn attention_weights(seq: &EmbeddingSequence, attention: &AttentionParams) -> Result<Vec<f64>> {
    check_dim(seq.dim(), attention.w_att.len())?;
    let scores: Vec<f64> = seq.rows().map(|h| dot(&attention.w_att, h)).collect();
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("attention scores"));
    }
    Ok(softmax(&scores))
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    weights
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub weights: Vec<f64>,
    pub vector: Vec<f64>,
}

pub fn attention_pool(seq: &EmbeddingSequence, attention: &AttentionParams) -> Result<Pooled> {
    let weights = attention_weights(seq, attention)?;
    let vector = pool_with(seq, &weights);
    Ok(Pooled { weights, vector })
}

pub(crate) fn pool_with(seq: &EmbeddingSequence, weights: &[f64]) -> Vec<f64> {
    let mut pooled = vec![0.0; seq.dim()];
    for (h, &e) in seq.rows().zip(weights) {
        for (acc, v) in pooled.iter_mut().zip(h) {
            *acc += e * v;
        }
    }
    pooled
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let ez = z.exp();
        ez / (1.0 + ez)
    }
}

pub(crate) fn head_logit(pooled: &[f64], head: &HeadParams) -> f64 {
    dot(&head.w, pooled) + head.b
}

pub fn head_score(pooled: &[f64], head: &HeadParams) -> Result<f64> {
    check_dim(head.w.len(), pooled.len())?;
    Ok(sigmoid(head_logit(pooled, head)))
}

/// A head votes positive only when its probability is strictly above 0.5.
pub fn vote(score: f64) -> SentimentLabel {
    if score > 0.5 {
        SentimentLabel::Positive
    } else {
        SentimentLabel::Negative
    }
}

pub fn majority(votes: [SentimentLabel; 3]) -> SentimentLabel {
    let positives = votes.iter().filter(|v| **v == SentimentLabel::Positive).count();
    if positives >= 2 {
        SentimentLabel::Positive
    } else {
        SentimentLabel::Negative
    }
}

pub fn head_votes(seq: &EmbeddingSequence, model: &SentimentModel) -> Result<[SentimentLabel; 3]> {
    let pooled = attention_pool(seq, &model.attention)?;
    let mut votes = [SentimentLabel::Negative; 3];
    for (slot, head) in votes.iter_mut().zip(&model.heads) {
        *slot = vote(head_score(&pooled.vector, head)?);
    }
    Ok(votes)
}

pub fn classify(seq: &EmbeddingSequence, model: &SentimentModel) -> Result<SentimentLabel> {
    head_votes(seq, model).map(majority)
}

#[cfg(test)]
mod tests {
    use super::*;
    use SentimentLabel::{Negative as N, Positive as P};

    fn seq(rows: &[&[f64]]) -> EmbeddingSequence {
        EmbeddingSequence::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn att(w: &[f64]) -> AttentionParams {
        AttentionParams { w_att: w.to_vec() }
    }

    #[test]
    fn single_token_pools_to_itself() {
        let s = seq(&[&[0.3, -2.5, 7.0]]);
        let p = attention_pool(&s, &att(&[100.0, -3.0, 0.5])).unwrap();
        assert_eq!(p.weights, [1.0]);
        assert_eq!(p.vector, [0.3, -2.5, 7.0]);
    }

    #[test]
    fn zero_attention_is_the_mean() {
        let s = seq(&[&[1.0, 0.0], &[3.0, 4.0], &[-1.0, 2.0], &[1.0, 2.0]]);
        let p = attention_pool(&s, &att(&[0.0, 0.0])).unwrap();
        assert_eq!(p.weights, [0.25; 4]);
        assert_eq!(p.vector, [1.0, 2.0]);
    }

    #[test]
    fn ln3_example() {
        let s = seq(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let p = attention_pool(&s, &att(&[3f64.ln(), 0.0])).unwrap();
        assert!((p.weights[0] - 0.75).abs() < 1e-15);
        assert!((p.weights[1] - 0.25).abs() < 1e-15);
        assert!((p.vector[0] - 0.75).abs() < 1e-15);
        assert!((p.vector[1] - 0.25).abs() < 1e-15);
        // Continues into the head example: sigma(0.5) = 0.6224593312018546.
        let score = head_score(&p.vector, &HeadParams { w: vec![1.0, -1.0], b: 0.0 }).unwrap();
        assert!((score - 0.622_459_331_201_854_6).abs() < 1e-12);
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let s = seq(&[&[1000.0], &[999.0]]);
        let p = attention_pool(&s, &att(&[1.0])).unwrap();
        assert!(p.weights.iter().all(|w| w.is_finite()));
        assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_and_finiteness_errors() {
        let s = seq(&[&[1.0, 2.0]]);
        assert!(matches!(attention_pool(&s, &att(&[1.0])), Err(Error::Dimension { expected: 2, got: 1 })));
        assert!(matches!(
            EmbeddingSequence::from_rows(vec![vec![1.0], vec![f64::NAN]]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(EmbeddingSequence::from_rows(vec![]), Err(Error::EmptySequence)));
        assert!(head_score(&[1.0], &HeadParams { w: vec![1.0, 2.0], b: 0.0 }).is_err());
    }

    #[test]
    fn head_score_basics() {
        let zero = HeadParams { w: vec![0.0, 0.0], b: 0.0 };
        assert_eq!(head_score(&[5.0, -9.0], &zero).unwrap(), 0.5);
        let mut last = 0.0;
        for b in [-5.0, 0.0, 5.0, 20.0, 40.0] {
            let s = head_score(&[1.0, 1.0], &HeadParams { w: vec![0.1, 0.1], b }).unwrap();
            assert!(s > last);
            last = s;
        }
        assert!(last > 0.999_999);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn exact_half_votes_negative() {
        assert_eq!(vote(0.5), N);
        assert_eq!(vote(0.500_000_1), P);
    }

    #[test]
    fn majority_examples() {
        assert_eq!(majority([P, P, N]), P);
        assert_eq!(majority([N, N, P]), N);
        assert_eq!(majority([P, N, P]), P);
        assert_eq!(majority([N, N, N]), N);
    }

    #[test]
    fn fixture_model_votes_two_to_one() {
        let s = seq(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let model = SentimentModel::new(
            att(&[3f64.ln(), 0.0]),
            [
                HeadParams { w: vec![1.0, -1.0], b: 0.0 },  // sigma(0.5)   -> 1
                HeadParams { w: vec![0.0, 4.0], b: -0.5 },  // sigma(0.5)   -> 1
                HeadParams { w: vec![-1.0, 0.0], b: 0.25 }, // sigma(-0.5) -> 0
            ],
        )
        .unwrap();
        assert_eq!(head_votes(&s, &model).unwrap(), [P, P, N]);
        assert_eq!(classify(&s, &model).unwrap(), P);
    }

    #[test]
    fn identical_heads_reduce_to_single_vote() {
        let head = HeadParams { w: vec![0.3, -0.2], b: 0.05 };
        let model = SentimentModel::new(att(&[0.2, 0.1]), [head.clone(), head.clone(), head.clone()]).unwrap();
        for rows in [[[1.0, 0.0], [0.0, 1.0]], [[-1.0, 2.0], [0.5, -3.0]]] {
            let s = seq(&[&rows[0], &rows[1]]);
            let single = vote(head_score(&attention_pool(&s, model.attention()).unwrap().vector, &head).unwrap());
            assert_eq!(classify(&s, &model).unwrap(), single);
        }
    }

    #[test]
    fn model_validation() {
        let h = HeadParams { w: vec![0.0], b: 0.0 };
        let bad = HeadParams { w: vec![0.0, 1.0], b: 0.0 };
        assert!(SentimentModel::new(att(&[1.0]), [h.clone(), h.clone(), bad]).is_err());
        let nan = HeadParams { w: vec![0.0], b: f64::NAN };
        assert!(SentimentModel::new(att(&[1.0]), [h.clone(), h, nan]).is_err());
    }
}
