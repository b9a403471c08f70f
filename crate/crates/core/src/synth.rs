//! Seeded synthetic ranking dataset standing in for pooled sentence
//! embeddings.
//!
//! Each query owns a unit latent vector; its positive passage is the latent
//! plus Gaussian noise. Hard negatives for a query are the positive passages
//! of the queries whose latents lie closest to it. Everything is lifted to
//! `embed_dim` by one fixed Gaussian matrix. Queries are split 60/20/20 into
//! training, validation and judged test sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::eval::RelevanceJudgments;
use crate::store::EmbeddingStore;
use crate::training::{TrainingSample, NUM_NEGATIVES};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub latent_dim: usize,
    pub embed_dim: usize,
    pub n_queries: usize,
    /// Candidate pool per query: one positive plus `n − 1` hard negatives.
    pub n_passages_per_query: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            latent_dim: 8,
            embed_dim: 32,
            n_queries: 200,
            n_passages_per_query: 6,
            noise_sigma: 0.2,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.latent_dim > self.embed_dim {
            return Err(Error::Config(format!(
                "need 0 < latent_dim <= embed_dim, got {} and {}",
                self.latent_dim, self.embed_dim
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!("noise sigma {} must be >= 0", self.noise_sigma)));
        }
        if self.n_passages_per_query < 1 + NUM_NEGATIVES {
            return Err(Error::Config(format!(
                "pool of {} cannot hold a positive and {NUM_NEGATIVES} negatives",
                self.n_passages_per_query
            )));
        }
        if self.n_queries < self.n_passages_per_query || self.n_queries < 5 {
            return Err(Error::Config(format!(
                "{} queries are too few for pools of {} and a 60/20/20 split",
                self.n_queries, self.n_passages_per_query
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub store: EmbeddingStore,
    pub train: Vec<TrainingSample>,
    pub val: Vec<TrainingSample>,
    /// Judgments for the held-out test queries: 3 for the positive, 1 for
    /// the two hardest negatives, 0 for the rest of the pool.
    pub qrels: RelevanceJudgments,
}

pub fn query_id(i: usize) -> String {
    format!("q{i:05}")
}

pub fn passage_id(i: usize) -> String {
    format!("p{i:05}")
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

pub fn gen_synth(cfg: &SynthConfig) -> Result<SynthDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lift: Vec<Vec<f64>> = (0..cfg.embed_dim).map(|_| gaussian(&mut rng, cfg.latent_dim)).collect();
    let apply = |z: &[f64]| -> Vec<f64> {
        lift.iter()
            .map(|row| row.iter().zip(z).map(|(w, x)| w * x).sum())
            .collect()
    };

    let latents: Vec<Vec<f64>> = (0..cfg.n_queries)
        .map(|_| {
            let g = gaussian(&mut rng, cfg.latent_dim);
            let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            g.iter().map(|x| x / n).collect()
        })
        .collect();
    let passages: Vec<Vec<f64>> = latents
        .iter()
        .map(|z| {
            let noise = gaussian(&mut rng, cfg.latent_dim);
            z.iter().zip(noise).map(|(x, e)| x + cfg.noise_sigma * e).collect()
        })
        .collect();

    let mut store = EmbeddingStore::new(cfg.embed_dim);
    for (i, z) in latents.iter().enumerate() {
        store.insert(query_id(i), apply(z))?;
    }
    for (i, x) in passages.iter().enumerate() {
        store.insert(passage_id(i), apply(x))?;
    }

    let pool_negs = cfg.n_passages_per_query - 1;
    let negatives: Vec<Vec<usize>> = (0..cfg.n_queries)
        .map(|q| {
            let mut others: Vec<(f64, usize)> = (0..cfg.n_queries)
                .filter(|&j| j != q)
                .map(|j| (cosine(&latents[q], &latents[j]), j))
                .collect();
            others.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(pool_negs).map(|(_, j)| j).collect()
        })
        .collect();

    let sample = |q: usize| TrainingSample {
        query: query_id(q),
        pos: passage_id(q),
        negs: negatives[q][..NUM_NEGATIVES].iter().map(|&j| passage_id(j)).collect(),
    };
    let n_train = cfg.n_queries * 3 / 5;
    let n_val = cfg.n_queries / 5;
    let train = (0..n_train).map(sample).collect();
    let val = (n_train..n_train + n_val).map(sample).collect();

    let mut qrels = RelevanceJudgments::new();
    for (q, negs) in negatives.iter().enumerate().skip(n_train + n_val) {
        qrels.insert(query_id(q), passage_id(q), 3)?;
        for (rank, &j) in negs.iter().enumerate() {
            qrels.insert(query_id(q), passage_id(j), if rank < 2 { 1 } else { 0 })?;
        }
    }

    Ok(SynthDataset {
        store,
        train,
        val,
        qrels,
    })
}
