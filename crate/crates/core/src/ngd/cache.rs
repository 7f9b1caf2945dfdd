//! Persistent hit-count cache.
//!
//! The file is an append-only log of tab-separated records:
//!
//! ```text
//! <fingerprint>\tterm\t<phrase>\t<count>\t<timestamp>
//! <fingerprint>\tpair\t<phrase a>\t<phrase b>\t<count>\t<timestamp>
//! ```
//!
//! Phrases are stored normalized; pair phrases are sorted. On open the log
//! is replayed (last record wins) and rewritten in compacted form.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, RwLock};

use chrono::{SecondsFormat, Utc};

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cache {path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Lowercases and collapses whitespace; the form phrases take in cache keys.
pub fn normalize_phrase(phrase: &str) -> String {
    phrase
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Key {
    Term {
        fingerprint: String,
        phrase: String,
    },
    Pair {
        fingerprint: String,
        a: String,
        b: String,
    },
}

impl Key {
    fn term(fingerprint: &str, phrase: &str) -> Self {
        Key::Term {
            fingerprint: fingerprint.to_owned(),
            phrase: normalize_phrase(phrase),
        }
    }

    fn pair(fingerprint: &str, a: &str, b: &str) -> Self {
        let (mut a, mut b) = (normalize_phrase(a), normalize_phrase(b));
        if b < a {
            std::mem::swap(&mut a, &mut b);
        }
        Key::Pair {
            fingerprint: fingerprint.to_owned(),
            a,
            b,
        }
    }

    fn record(&self, count: u64, timestamp: &str) -> String {
        match self {
            Key::Term {
                fingerprint,
                phrase,
            } => format!(
                "{}\tterm\t{}\t{count}\t{timestamp}\n",
                escape(fingerprint),
                escape(phrase)
            ),
            Key::Pair { fingerprint, a, b } => format!(
                "{}\tpair\t{}\t{}\t{count}\t{timestamp}\n",
                escape(fingerprint),
                escape(a),
                escape(b)
            ),
        }
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

fn parse_record(line: &str) -> Result<(Key, u64), String> {
    let fields: Vec<&str> = line.split('\t').collect();
    let count = |s: &str| s.parse::<u64>().map_err(|_| format!("bad count {s:?}"));
    match fields.as_slice() {
        [fp, "term", phrase, n, _ts] => Ok((
            Key::Term {
                fingerprint: unescape(fp),
                phrase: unescape(phrase),
            },
            count(n)?,
        )),
        [fp, "pair", a, b, n, _ts] => Ok((
            Key::Pair {
                fingerprint: unescape(fp),
                a: unescape(a),
                b: unescape(b),
            },
            count(n)?,
        )),
        _ => Err(format!(
            "expected a term or pair record, found {} fields",
            fields.len()
        )),
    }
}

/// Thread-safe hit-count cache, optionally backed by an append-only file.
#[derive(Debug)]
pub struct HitCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<Key, u64>>,
    log: Mutex<Option<BufWriter<File>>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl HitCache {
    pub fn in_memory() -> Self {
        HitCache {
            path: None,
            entries: RwLock::new(HashMap::new()),
            log: Mutex::new(None),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    /// Loads and compacts the log at `path` (created if missing).
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CacheError> {
        let path = path.as_ref().to_path_buf();
        let io = |source| CacheError::Io {
            path: path.clone(),
            source,
        };
        let mut entries: HashMap<Key, u64> = HashMap::new();
        let mut stamps: HashMap<Key, String> = HashMap::new();
        match File::open(&path) {
            Ok(f) => {
                for (idx, line) in BufReader::new(f).lines().enumerate() {
                    let line = line.map_err(io)?;
                    if line.is_empty() {
                        continue;
                    }
                    let (key, count) =
                        parse_record(&line).map_err(|message| CacheError::Corrupt {
                            path: path.clone(),
                            line: idx + 1,
                            message,
                        })?;
                    let stamp = line.rsplit('\t').next().unwrap_or_default().to_owned();
                    stamps.insert(key.clone(), stamp);
                    entries.insert(key, count);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(io(e)),
        }

        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let tmp = path.with_extension("compact");
        {
            let mut w = BufWriter::new(File::create(&tmp).map_err(io)?);
            let mut keys: Vec<&Key> = entries.keys().collect();
            keys.sort();
            for key in keys {
                w.write_all(key.record(entries[key], &stamps[key]).as_bytes())
                    .map_err(io)?;
            }
            w.flush().map_err(io)?;
        }
        std::fs::rename(&tmp, &path).map_err(io)?;
        let file = OpenOptions::new().append(true).open(&path).map_err(io)?;

        Ok(HitCache {
            path: Some(path),
            entries: RwLock::new(entries),
            log: Mutex::new(Some(BufWriter::new(file))),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn get(&self, key: &Key) -> Option<u64> {
        let found = self.entries.read().unwrap().get(key).copied();
        match found {
            Some(_) => self.hits.fetch_add(1, Ordering::Relaxed),
            None => self.misses.fetch_add(1, Ordering::Relaxed),
        };
        found
    }

    fn put(&self, key: Key, count: u64) -> Result<(), CacheError> {
        let mut log = self.log.lock().unwrap();
        if let Some(w) = log.as_mut() {
            let stamp = Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true);
            let io = |source| CacheError::Io {
                path: self.path.clone().unwrap_or_default(),
                source,
            };
            w.write_all(key.record(count, &stamp).as_bytes())
                .map_err(io)?;
            w.flush().map_err(io)?;
        }
        self.entries.write().unwrap().insert(key, count);
        Ok(())
    }

    pub fn get_term(&self, fingerprint: &str, phrase: &str) -> Option<u64> {
        self.get(&Key::term(fingerprint, phrase))
    }

    pub fn put_term(&self, fingerprint: &str, phrase: &str, count: u64) -> Result<(), CacheError> {
        self.put(Key::term(fingerprint, phrase), count)
    }

    pub fn get_pair(&self, fingerprint: &str, a: &str, b: &str) -> Option<u64> {
        self.get(&Key::pair(fingerprint, a, b))
    }

    pub fn put_pair(
        &self,
        fingerprint: &str,
        a: &str,
        b: &str,
        count: u64,
    ) -> Result<(), CacheError> {
        self.put(Key::pair(fingerprint, a, b), count)
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lookups answered from the cache since it was opened.
    pub fn hit_count(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn miss_count(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }
}
