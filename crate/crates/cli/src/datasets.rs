//! Download and conversion of the public text collections.

use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use flate2::read::GzDecoder;
use serde::Serialize;
use sparse_nmf::corpus::{build_from_texts, Corpus, TokenizerConfig, Weighting};
use sparse_nmf::matrix::market::write_sparse_file;

use crate::error::{CliError, CliResult};
use crate::manifest::sha256_file;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Medlars,
    Cisi,
    Reuters10,
}

/// The ten most frequent Reuters-21578 topic categories.
pub const REUTERS_TOP10: [&str; 10] =
    ["earn", "acq", "money-fx", "grain", "crude", "trade", "interest", "ship", "wheat", "corn"];

impl Dataset {
    pub fn url(self) -> &'static str {
        match self {
            Dataset::Medlars => "http://ir.dcs.gla.ac.uk/resources/test_collections/medl/med.tar.gz",
            Dataset::Cisi => "http://ir.dcs.gla.ac.uk/resources/test_collections/cisi/cisi.tar.gz",
            Dataset::Reuters10 => {
                "http://www.daviddlewis.com/resources/testcollections/reuters21578/reuters21578.tar.gz"
            }
        }
    }

    pub fn archive_name(self) -> &'static str {
        match self {
            Dataset::Medlars => "med.tar.gz",
            Dataset::Cisi => "cisi.tar.gz",
            Dataset::Reuters10 => "reuters21578.tar.gz",
        }
    }

    /// Known archive digest; none of the mirrors publish one.
    pub fn sha256(self) -> Option<&'static str> {
        None
    }

    pub fn name(self) -> &'static str {
        match self {
            Dataset::Medlars => "medlars",
            Dataset::Cisi => "cisi",
            Dataset::Reuters10 => "reuters10",
        }
    }
}

/// One source document: its id in the collection and its text.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
}

/// Parses the `.I`-delimited format of the SMART collections, keeping the
/// `.T` and `.W` fields.
pub fn parse_smart(text: &str) -> Vec<Document> {
    let mut docs: Vec<Document> = Vec::new();
    let mut keep = false;
    for line in text.lines() {
        if let Some(id) = line.strip_prefix(".I") {
            docs.push(Document { id: id.trim().to_string(), text: String::new() });
            keep = false;
        } else if line.len() >= 2 && line.starts_with('.') && line[1..].chars().all(|c| c.is_ascii_uppercase()) {
            keep = matches!(line, ".T" | ".W");
        } else if keep {
            if let Some(d) = docs.last_mut() {
                d.text.push_str(line);
                d.text.push('\n');
            }
        }
    }
    docs
}

fn tag_content<'a>(chunk: &'a str, tag: &str) -> Option<&'a str> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let start = chunk.find(&open)? + open.len();
    let end = chunk[start..].find(&close)? + start;
    Some(&chunk[start..end])
}

fn attribute<'a>(header: &'a str, name: &str) -> Option<&'a str> {
    let key = format!("{name}=\"");
    let start = header.find(&key)? + key.len();
    let end = header[start..].find('"')? + start;
    Some(&header[start..end])
}

fn unescape(s: &str) -> String {
    s.replace("&lt;", "<").replace("&gt;", ">").replace("&#3;", "").replace("&amp;", "&")
}

/// Reuters-21578 training documents (`LEWISSPLIT="TRAIN"`, `TOPICS="YES"`)
/// carrying at least one of the ten largest categories.
pub fn parse_reuters(sgml: &str) -> Vec<Document> {
    let mut docs = Vec::new();
    for chunk in sgml.split("<REUTERS").skip(1) {
        let Some(header_end) = chunk.find('>') else { continue };
        let header = &chunk[..header_end];
        if attribute(header, "LEWISSPLIT") != Some("TRAIN") || attribute(header, "TOPICS") != Some("YES") {
            continue;
        }
        let topics = tag_content(chunk, "TOPICS").unwrap_or("");
        let in_top10 = topics
            .split("<D>")
            .filter_map(|d| d.split("</D>").next())
            .any(|t| REUTERS_TOP10.contains(&t));
        if !in_top10 {
            continue;
        }
        let title = tag_content(chunk, "TITLE").unwrap_or("");
        let body = tag_content(chunk, "BODY").unwrap_or("");
        docs.push(Document {
            id: attribute(header, "NEWID").unwrap_or("").to_string(),
            text: unescape(&format!("{title}\n{body}")),
        });
    }
    docs
}

/// Documents of `dataset` from its `.tar.gz` archive.
pub fn extract_documents<R: Read>(dataset: Dataset, archive: R) -> CliResult<Vec<Document>> {
    let mut tar = tar::Archive::new(GzDecoder::new(archive));
    let mut texts: Vec<(String, String)> = Vec::new();
    for entry in tar.entries().map_err(bad_archive)? {
        let mut entry = entry.map_err(bad_archive)?;
        let name = entry.path().map_err(bad_archive)?.to_string_lossy().to_lowercase();
        let file = name.rsplit('/').next().unwrap_or("").to_string();
        let wanted = match dataset {
            Dataset::Medlars => file == "med.all",
            Dataset::Cisi => file == "cisi.all",
            Dataset::Reuters10 => file.starts_with("reut2-") && file.ends_with(".sgm"),
        };
        if wanted {
            let mut bytes = Vec::new();
            entry.read_to_end(&mut bytes).map_err(bad_archive)?;
            texts.push((file, String::from_utf8_lossy(&bytes).into_owned()));
        }
    }
    if texts.is_empty() {
        return Err(CliError::Data(format!("archive holds no {} documents", dataset.name())));
    }
    texts.sort();
    Ok(texts
        .iter()
        .flat_map(|(_, t)| match dataset {
            Dataset::Reuters10 => parse_reuters(t),
            _ => parse_smart(t),
        })
        .collect())
}

fn bad_archive(e: io::Error) -> CliError {
    CliError::Data(format!("unreadable archive: {e}"))
}

#[derive(Debug, Clone, Serialize)]
pub struct FetchReport {
    pub archive: PathBuf,
    pub sha256: String,
    pub cache_hit: bool,
    pub documents: usize,
    pub terms: usize,
    pub nnz: usize,
}

/// Where the archive comes from: a URL or a local file.
pub fn obtain_archive(dataset: Dataset, cache_dir: &Path, source: Option<&str>) -> CliResult<(PathBuf, bool)> {
    fs::create_dir_all(cache_dir)?;
    let target = cache_dir.join(dataset.archive_name());
    if target.is_file() {
        log::info!("cache hit: {}", target.display());
        return Ok((target, true));
    }
    let partial = cache_dir.join(format!("{}.partial", dataset.archive_name()));
    let source = source.unwrap_or(dataset.url());
    if source.starts_with("http://") || source.starts_with("https://") {
        log::info!("downloading {source}");
        let response = ureq::get(source).call().map_err(|e| CliError::Network(format!("{source}: {e}")))?;
        let mut reader = response.into_body().into_reader();
        let mut file = fs::File::create(&partial)?;
        io::copy(&mut reader, &mut file).map_err(|e| CliError::Network(format!("{source}: {e}")))?;
    } else {
        fs::copy(source, &partial).map_err(|e| CliError::Data(format!("{source}: {e}")))?;
    }
    fs::rename(&partial, &target)?;
    Ok((target, false))
}

/// Downloads (or reuses) the archive, checks its digest and writes
/// `matrix.mtx`, `vocab.tsv` and `docs.tsv` into `out_dir`.
pub fn fetch(
    dataset: Dataset,
    cache_dir: &Path,
    out_dir: &Path,
    source: Option<&str>,
    expected_sha256: Option<&str>,
    tokenizer: &TokenizerConfig,
    weighting: Weighting,
) -> CliResult<FetchReport> {
    let (archive, cache_hit) = obtain_archive(dataset, cache_dir, source)?;
    let sha256 = sha256_file(&archive)?;
    if let Some(expected) = expected_sha256.or(dataset.sha256()) {
        if !expected.eq_ignore_ascii_case(&sha256) {
            if !cache_hit {
                fs::remove_file(&archive)?;
            }
            return Err(CliError::ChecksumMismatch {
                path: archive.display().to_string(),
                expected: expected.to_string(),
                actual: sha256,
            });
        }
    } else {
        log::info!("no published checksum for {}; sha256 {sha256}", dataset.name());
    }

    let docs = extract_documents(dataset, fs::File::open(&archive)?)?;
    let texts: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
    let corpus: Corpus = build_from_texts(&texts, tokenizer, weighting)?;
    fs::create_dir_all(out_dir)?;
    write_sparse_file(out_dir.join("matrix.mtx"), &corpus.matrix)?;
    corpus.vocabulary.write_tsv_file(out_dir.join("vocab.tsv"))?;
    let ids: String = docs.iter().enumerate().map(|(j, d)| format!("{j}\t{}\n", d.id)).collect();
    fs::write(out_dir.join("docs.tsv"), ids)?;
    Ok(FetchReport {
        archive,
        sha256,
        cache_hit,
        documents: docs.len(),
        terms: corpus.vocabulary.len(),
        nnz: corpus.matrix.nnz(),
    })
}
