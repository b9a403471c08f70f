//! Reranking harness and NDCG@k against graded judgments.
//!
//! Qrels files are tab-separated `query_id<TAB>passage_id<TAB>grade` lines;
//! run files are `query_id<TAB>rank<TAB>passage_id<TAB>score`, ranks from 1.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{CachedScorer, Model};
use crate::store::{write_string_atomic, EmbeddingStore};

pub const DEFAULT_K: usize = 10;
pub const MAX_GRADE: u8 = 3;

/// query id → (passage id → grade in 0..=3).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelevanceJudgments {
    map: BTreeMap<String, BTreeMap<String, u8>>,
}

impl RelevanceJudgments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query: impl Into<String>, passage: impl Into<String>, grade: u8) -> Result<()> {
        if grade > MAX_GRADE {
            return Err(Error::Domain(format!("grade {grade} outside 0..={MAX_GRADE}")));
        }
        self.map.entry(query.into()).or_default().insert(passage.into(), grade);
        Ok(())
    }

    pub fn queries(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, u8>)> {
        self.map.iter().map(|(q, j)| (q.as_str(), j))
    }

    pub fn get(&self, query: &str) -> Option<&BTreeMap<String, u8>> {
        self.map.get(query)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("read {}", path.display()), e))?;
        let mut out = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(parse_err(format!(
                    "expected 3 tab-separated fields, got {}",
                    fields.len()
                )));
            }
            let grade: u8 = fields[2]
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad grade {:?}: {e}", fields[2])))?;
            out.insert(fields[0], fields[1], grade)
                .map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for (q, j) in &self.map {
            for (p, g) in j {
                let _ = writeln!(s, "{q}\t{p}\t{g}");
            }
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_string_atomic(path, &self.to_tsv())
    }
}

/// `Σ_{i=1..min(k, n)} rel_i / log₂(i + 1)`.
pub fn dcg_at_k(grades: &[i32], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if let Some(g) = grades.iter().find(|g| **g < 0) {
        return Err(Error::Domain(format!("negative grade {g}")));
    }
    Ok(grades
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| g as f64 / ((i + 2) as f64).log2())
        .sum())
}

/// NDCG of `ranking` for one query. Unjudged passages count as grade 0.
/// Returns `None` when every judgment is 0 (the ideal DCG vanishes).
pub fn ndcg_at_k(ranking: &[String], judged: &BTreeMap<String, u8>, k: usize) -> Result<Option<f64>> {
    let mut ideal: Vec<i32> = judged.values().map(|&g| g as i32).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg_at_k(&ideal, k)?;
    if idcg == 0.0 {
        return Ok(None);
    }
    let grades: Vec<i32> = ranking
        .iter()
        .map(|p| judged.get(p).copied().unwrap_or(0) as i32)
        .collect();
    Ok(Some(dcg_at_k(&grades, k)? / idcg))
}

/// Expected NDCG@k of a uniformly random ranking of the judged passages.
///
/// Every rank holds the mean grade in expectation, so the expected DCG is the
/// mean grade times the summed discounts of the first `min(k, n)` ranks.
pub fn expected_random_ndcg(judged: &BTreeMap<String, u8>, k: usize) -> Result<Option<f64>> {
    let mut grades: Vec<i32> = judged.values().map(|&g| g as i32).collect();
    grades.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg_at_k(&grades, k)?;
    if idcg == 0.0 {
        return Ok(None);
    }
    let mean = grades.iter().sum::<i32>() as f64 / grades.len() as f64;
    let discounts = dcg_at_k(&vec![1; grades.len()], k)?;
    Ok(Some(mean * discounts / idcg))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub query: String,
    pub ndcg: f64,
    /// Passages in ranked order with their scores.
    pub ranking: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub k: usize,
    pub mean_ndcg: f64,
    pub per_query: Vec<QueryResult>,
    /// Queries whose judgments are all zero.
    pub undefined: Vec<String>,
    /// Queries skipped because an embedding was missing, with the missing ids.
    pub missing: Vec<(String, Vec<String>)>,
}

impl EvalReport {
    pub fn run_tsv(&self) -> String {
        let mut s = String::new();
        for q in &self.per_query {
            for (rank, (p, score)) in q.ranking.iter().enumerate() {
                let _ = writeln!(s, "{}\t{}\t{}\t{}", q.query, rank + 1, p, score);
            }
        }
        s
    }

    pub fn save_run(&self, path: &Path) -> Result<()> {
        write_string_atomic(path, &self.run_tsv())
    }
}

/// Scores every judged passage of every query with `score(query, passage)`,
/// sorts descending (ties by ascending passage id) and averages NDCG@k.
pub fn evaluate_with<F>(
    store: &EmbeddingStore,
    judgments: &RelevanceJudgments,
    k: usize,
    mut score: F,
) -> Result<EvalReport>
where
    F: FnMut(&str, &str) -> Result<f64>,
{
    let mut per_query = Vec::new();
    let mut undefined = Vec::new();
    let mut missing = Vec::new();
    for (query, judged) in judgments.queries() {
        let absent: Vec<String> = std::iter::once(query)
            .chain(judged.keys().map(String::as_str))
            .filter(|id| !store.contains(id))
            .map(str::to_string)
            .collect();
        if !absent.is_empty() {
            missing.push((query.to_string(), absent));
            continue;
        }
        if judged.values().all(|&g| g == 0) {
            undefined.push(query.to_string());
            continue;
        }
        let mut ranking = Vec::with_capacity(judged.len());
        for p in judged.keys() {
            ranking.push((p.clone(), score(query, p)?));
        }
        ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let ids: Vec<String> = ranking.iter().map(|(p, _)| p.clone()).collect();
        let ndcg = ndcg_at_k(&ids, judged, k)?.expect("nonzero judgments");
        per_query.push(QueryResult {
            query: query.to_string(),
            ndcg,
            ranking,
        });
    }
    if per_query.is_empty() {
        return Err(Error::Domain("no evaluable queries".into()));
    }
    let mean_ndcg = per_query.iter().map(|q| q.ndcg).sum::<f64>() / per_query.len() as f64;
    Ok(EvalReport {
        k,
        mean_ndcg,
        per_query,
        undefined,
        missing,
    })
}

pub fn evaluate(model: &Model, store: &EmbeddingStore, judgments: &RelevanceJudgments, k: usize) -> Result<EvalReport> {
    let mut scorer = CachedScorer::new(model, store)?;
    evaluate_with(store, judgments, k, |q, p| scorer.score(q, p))
}
