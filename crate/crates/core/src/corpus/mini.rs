//! A small synthetic corpus with eight planted topics, generated
//! deterministically so tests and examples run offline.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

use super::{build_from_texts, Corpus, TokenizerConfig, Weighting};

pub const MINI_CORPUS_DOCS: usize = 60;
const SEED: u64 = 0x6d69_6e69;

/// Topic label and its characteristic vocabulary.
pub const MINI_TOPICS: [(&str, &[&str]); 8] = [
    (
        "cardiology",
        &["heart", "cardiac", "artery", "blood", "pressure", "valve", "coronary", "arrhythmia", "pulse", "ventricle", "aorta", "hypertension"],
    ),
    (
        "oil",
        &["oil", "crude", "barrel", "opec", "petroleum", "refinery", "drilling", "pipeline", "gasoline", "output", "reserves", "brent"],
    ),
    (
        "grain",
        &["wheat", "corn", "grain", "harvest", "crop", "bushel", "farmers", "soybean", "acreage", "drought", "export", "silo"],
    ),
    (
        "banking",
        &["bank", "interest", "rate", "loan", "deposit", "credit", "lending", "mortgage", "reserve", "fed", "discount", "liquidity"],
    ),
    (
        "shipping",
        &["ship", "port", "vessel", "cargo", "tanker", "freight", "harbor", "dock", "container", "canal", "crew", "maritime"],
    ),
    (
        "oncology",
        &["tumor", "cancer", "chemotherapy", "malignant", "carcinoma", "radiation", "biopsy", "metastasis", "lymph", "oncology", "remission", "cells"],
    ),
    (
        "libraries",
        &["library", "catalog", "indexing", "retrieval", "librarian", "books", "classification", "citation", "archive", "journal", "abstracting", "thesaurus"],
    ),
    (
        "acquisitions",
        &["merger", "acquisition", "shares", "stake", "takeover", "bid", "shareholders", "tender", "buyout", "offer", "stock", "board"],
    ),
];

const GENERAL: &[&str] = &[
    "report", "study", "said", "year", "new", "group", "percent", "million", "analysis", "results", "week", "month",
    "today", "official", "public", "national", "government", "company", "market", "program", "system", "time", "level",
    "high", "low", "increase", "change", "major", "early", "late",
];

/// The 60 generated documents. Document `j` draws 60% of its words from
/// topic `j % 8`, 20% from one secondary topic and 20% from a shared
/// background vocabulary.
pub fn mini_corpus_documents() -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..MINI_CORPUS_DOCS)
        .map(|j| {
            let primary = j % MINI_TOPICS.len();
            let secondary = (primary + 1 + rng.random_range(0..MINI_TOPICS.len() - 1)) % MINI_TOPICS.len();
            let len = rng.random_range(25..40);
            let mut words = Vec::with_capacity(len);
            for _ in 0..len {
                let r: f64 = rng.random();
                let pool: &[&str] = if r < 0.6 {
                    MINI_TOPICS[primary].1
                } else if r < 0.8 {
                    MINI_TOPICS[secondary].1
                } else {
                    GENERAL
                };
                words.push(pool[rng.random_range(0..pool.len())]);
            }
            words.join(" ")
        })
        .collect()
}

/// Term-by-document matrix of the mini corpus with default tokenization.
pub fn mini_corpus_matrix(weighting: Weighting) -> Result<Corpus> {
    build_from_texts(&mini_corpus_documents(), &TokenizerConfig::default(), weighting)
}

/// Writes the documents as `doc_00.txt` … `doc_59.txt`.
pub fn write_mini_corpus(dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    for (j, text) in mini_corpus_documents().iter().enumerate() {
        fs::write(dir.join(format!("doc_{j:02}.txt")), text)?;
    }
    Ok(())
}
