//! Hit counts from a local directory of plain-text documents.
//!
//! A document matches a phrase when it contains the phrase's tokens as a
//! contiguous, case-insensitive token sequence.

use std::collections::HashMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::provider::{HitProvider, ProviderError, ScaleBasis};

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone)]
struct Posting {
    doc: u32,
    positions: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct CorpusProvider {
    postings: HashMap<String, Vec<Posting>>,
    doc_count: u64,
    digest: String,
    words_multiplier: f64,
}

impl CorpusProvider {
    /// Indexes every regular file directly inside `dir`, in file-name order.
    pub fn load(dir: impl AsRef<Path>, words_multiplier: f64) -> Result<Self, ProviderError> {
        let dir = dir.as_ref();
        let entries = std::fs::read_dir(dir).map_err(|e| {
            ProviderError::Config(format!("corpus directory {}: {e}", dir.display()))
        })?;
        let mut paths = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| ProviderError::Config(e.to_string()))?;
            let path = entry.path();
            let hidden = entry.file_name().to_string_lossy().starts_with('.');
            if path.is_file() && !hidden {
                paths.push(path);
            }
        }
        paths.sort();
        let mut docs = Vec::with_capacity(paths.len());
        for path in paths {
            let bytes = std::fs::read(&path)
                .map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))?;
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            docs.push((name, String::from_utf8_lossy(&bytes).into_owned()));
        }
        Ok(Self::from_documents(docs, words_multiplier))
    }

    pub fn from_documents<N, T>(
        docs: impl IntoIterator<Item = (N, T)>,
        words_multiplier: f64,
    ) -> Self
    where
        N: AsRef<str>,
        T: AsRef<str>,
    {
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut hasher = Sha256::new();
        let mut doc_count = 0u32;
        for (name, text) in docs {
            let (name, text) = (name.as_ref(), text.as_ref());
            hasher.update((name.len() as u64).to_le_bytes());
            hasher.update(name.as_bytes());
            hasher.update((text.len() as u64).to_le_bytes());
            hasher.update(text.as_bytes());
            for (pos, token) in tokenize(text).into_iter().enumerate() {
                let list = postings.entry(token).or_default();
                match list.last_mut() {
                    Some(p) if p.doc == doc_count => p.positions.push(pos as u32),
                    _ => list.push(Posting {
                        doc: doc_count,
                        positions: vec![pos as u32],
                    }),
                }
            }
            doc_count += 1;
        }
        let digest = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        CorpusProvider {
            postings,
            doc_count: doc_count as u64,
            digest,
            words_multiplier,
        }
    }

    pub fn document_count(&self) -> u64 {
        self.doc_count
    }

    fn positions(&self, token: &str, doc: u32) -> Option<&[u32]> {
        let list = self.postings.get(token)?;
        list.binary_search_by_key(&doc, |p| p.doc)
            .ok()
            .map(|i| list[i].positions.as_slice())
    }

    /// Sorted ids of documents containing `phrase`.
    fn matching_docs(&self, phrase: &str) -> Vec<u32> {
        let tokens = tokenize(phrase);
        let Some((first, rest)) = tokens.split_first() else {
            return Vec::new();
        };
        let Some(list) = self.postings.get(first) else {
            return Vec::new();
        };
        list.iter()
            .filter(|p| {
                p.positions.iter().any(|&start| {
                    rest.iter().enumerate().all(|(k, tok)| {
                        self.positions(tok, p.doc)
                            .is_some_and(|ps| ps.binary_search(&(start + 1 + k as u32)).is_ok())
                    })
                })
            })
            .map(|p| p.doc)
            .collect()
    }
}

fn intersection_len(a: &[u32], b: &[u32]) -> u64 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

impl HitProvider for CorpusProvider {
    fn fingerprint(&self) -> String {
        format!(
            "corpus:docs={}:sha256={}:mult={}",
            self.doc_count, self.digest, self.words_multiplier
        )
    }

    fn hits(&self, phrase: &str) -> Result<u64, ProviderError> {
        Ok(self.matching_docs(phrase).len() as u64)
    }

    fn pair_hits(&self, a: &str, b: &str) -> Result<u64, ProviderError> {
        Ok(intersection_len(
            &self.matching_docs(a),
            &self.matching_docs(b),
        ))
    }

    fn scale_basis(&self) -> ScaleBasis {
        ScaleBasis::Documents(self.doc_count)
    }

    fn words_multiplier(&self) -> f64 {
        self.words_multiplier
    }
}
