//! Streaming reader for MediaWiki XML exports with full revision history.
//!
//! Only one page is read per run: the first page of the dump, or the page
//! whose `<title>` matches the requested title. Revision text is decoded
//! (entities resolved) and yielded one revision at a time, so memory use is
//! bounded by the largest single revision rather than by the dump.

use std::fmt;
use std::io::{BufRead, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

/// Sentinel key used when a dump suppresses the contributor of a revision.
pub const DELETED_CONTRIBUTOR: &str = "<deleted>";

#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error("malformed XML at byte {offset}: {message}")]
    Malformed { offset: u64, message: String },
    #[error("invalid timestamp {value:?} at byte {offset}")]
    Timestamp { offset: u64, value: String },
    #[error("revision at byte {offset} is missing <{field}>")]
    MissingField { offset: u64, field: &'static str },
    #[error("no revisions found{}", .title.as_ref().map(|t| format!(" for page {t:?}")).unwrap_or_default())]
    Empty { title: Option<String> },
    #[error("record line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContributorKind {
    Registered,
    Anonymous,
}

/// Identity of whoever made a revision: a username or an IP address.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContributorId {
    pub kind: ContributorKind,
    pub key: String,
}

impl ContributorId {
    pub fn registered(name: impl Into<String>) -> Self {
        ContributorId {
            kind: ContributorKind::Registered,
            key: name.into(),
        }
    }

    pub fn anonymous(ip: impl Into<String>) -> Self {
        ContributorId {
            kind: ContributorKind::Anonymous,
            key: ip.into(),
        }
    }

    pub fn deleted() -> Self {
        Self::anonymous(DELETED_CONTRIBUTOR)
    }

    /// Parses the `user:` / `ip:` form produced by `Display`.
    pub fn parse(s: &str) -> Option<Self> {
        if let Some(name) = s.strip_prefix("user:") {
            (!name.is_empty()).then(|| Self::registered(name))
        } else if let Some(ip) = s.strip_prefix("ip:") {
            (!ip.is_empty()).then(|| Self::anonymous(ip))
        } else {
            None
        }
    }
}

impl fmt::Display for ContributorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ContributorKind::Registered => write!(f, "user:{}", self.key),
            ContributorKind::Anonymous => write!(f, "ip:{}", self.key),
        }
    }
}

/// One historical version of an article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Revision {
    pub ordinal: usize,
    pub revision_id: u64,
    #[serde(with = "rfc3339")]
    pub timestamp: DateTime<Utc>,
    pub contributor: ContributorId,
    pub byte_size: u64,
    pub text: String,
}

/// Everything about a revision except its text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionMeta {
    pub ordinal: usize,
    pub revision_id: u64,
    #[serde(with = "rfc3339")]
    pub timestamp: DateTime<Utc>,
    pub contributor: ContributorId,
    pub byte_size: u64,
}

impl Revision {
    pub fn meta(&self) -> RevisionMeta {
        RevisionMeta {
            ordinal: self.ordinal,
            revision_id: self.revision_id,
            timestamp: self.timestamp,
            contributor: self.contributor.clone(),
            byte_size: self.byte_size,
        }
    }

    pub fn into_parts(self) -> (RevisionMeta, String) {
        let meta = self.meta();
        (meta, self.text)
    }
}

/// Anything carrying a revision's ordering key and ordinal slot.
pub trait Ordered {
    fn sort_key(&self) -> (DateTime<Utc>, u64);
    fn set_ordinal(&mut self, ordinal: usize);
}

impl Ordered for Revision {
    fn sort_key(&self) -> (DateTime<Utc>, u64) {
        (self.timestamp, self.revision_id)
    }
    fn set_ordinal(&mut self, ordinal: usize) {
        self.ordinal = ordinal;
    }
}

impl Ordered for RevisionMeta {
    fn sort_key(&self) -> (DateTime<Utc>, u64) {
        (self.timestamp, self.revision_id)
    }
    fn set_ordinal(&mut self, ordinal: usize) {
        self.ordinal = ordinal;
    }
}

/// Sorts by `(timestamp, revision_id)` and reassigns ordinals `0..n`.
pub fn order_revisions<T: Ordered>(mut revisions: Vec<T>) -> Vec<T> {
    revisions.sort_by_key(|r| r.sort_key());
    for (i, r) in revisions.iter_mut().enumerate() {
        r.set_ordinal(i);
    }
    revisions
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s.trim())
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

mod rfc3339 {
    use chrono::{DateTime, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_timestamp(&raw)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid timestamp {raw:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Title,
    RevisionId,
    Timestamp,
    Username,
    Ip,
    Text,
}

#[derive(Default)]
struct PartialRevision {
    id: Option<u64>,
    timestamp: Option<DateTime<Utc>>,
    username: Option<String>,
    ip: Option<String>,
    bytes_attr: Option<u64>,
    text: String,
}

/// Pull-based iterator over the revisions of one page.
///
/// Ordinals are assigned in file order; run [`order_revisions`] on the
/// collected output (or on its metadata) to get timestamp order.
pub struct RevisionReader<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    title_filter: Option<String>,
    // path of open element names below <mediawiki>
    stack: Vec<Vec<u8>>,
    // Some(true) inside the selected page, Some(false) inside a skipped page
    in_page: Option<bool>,
    page_title: Option<String>,
    page_done: bool,
    current: Option<PartialRevision>,
    field: Option<Field>,
    field_text: String,
    emitted: usize,
    finished: bool,
}

impl<R: BufRead> RevisionReader<R> {
    pub fn new(input: R, title: Option<&str>) -> Self {
        let mut reader = Reader::from_reader(input);
        reader.config_mut().trim_text(false);
        RevisionReader {
            reader,
            buf: Vec::new(),
            title_filter: title.map(str::to_owned),
            stack: Vec::new(),
            in_page: None,
            page_title: None,
            page_done: false,
            current: None,
            field: None,
            field_text: String::new(),
            emitted: 0,
            finished: false,
        }
    }

    /// Title of the page being read, once its `<title>` element was seen.
    pub fn page_title(&self) -> Option<&str> {
        self.page_title.as_deref()
    }

    fn offset(&self) -> u64 {
        self.reader.buffer_position()
    }

    fn malformed(&self, message: impl fmt::Display) -> DumpError {
        DumpError::Malformed {
            offset: self.offset(),
            message: message.to_string(),
        }
    }

    fn parent_is(&self, name: &[u8]) -> bool {
        self.stack.len() >= 2 && self.stack[self.stack.len() - 2] == name
    }

    fn open(&mut self, name: &[u8], bytes_attr: Option<u64>) {
        match name {
            b"page" if self.in_page.is_none() => {
                self.in_page = Some(false);
                self.page_title = None;
            }
            b"title" if self.parent_is(b"page") => self.begin_field(Field::Title),
            b"revision" if self.in_page == Some(true) => {
                self.current = Some(PartialRevision::default());
            }
            b"id" if self.parent_is(b"revision") && self.current.is_some() => {
                self.begin_field(Field::RevisionId)
            }
            b"timestamp" if self.current.is_some() => self.begin_field(Field::Timestamp),
            b"username" if self.parent_is(b"contributor") && self.current.is_some() => {
                self.begin_field(Field::Username)
            }
            b"ip" if self.parent_is(b"contributor") && self.current.is_some() => {
                self.begin_field(Field::Ip)
            }
            b"text" if self.current.is_some() => {
                if let Some(rev) = self.current.as_mut() {
                    rev.bytes_attr = bytes_attr;
                    rev.text = String::new();
                }
                self.field = Some(Field::Text);
            }
            _ => {}
        }
    }

    fn begin_field(&mut self, field: Field) {
        self.field = Some(field);
        self.field_text.clear();
    }

    fn append_text(&mut self, text: std::borrow::Cow<'_, str>) {
        match self.field {
            Some(Field::Text) => {
                if let Some(rev) = self.current.as_mut() {
                    if rev.text.is_empty() {
                        rev.text = text.into_owned();
                    } else {
                        rev.text.push_str(&text);
                    }
                }
            }
            Some(_) => self.field_text.push_str(&text),
            None => {}
        }
    }

    fn close(&mut self, name: &[u8]) -> Result<Option<Revision>, DumpError> {
        let field = self.field;
        match (name, field) {
            (b"title", Some(Field::Title)) => {
                let title = self.field_text.trim().to_owned();
                let selected = match &self.title_filter {
                    None => true,
                    Some(want) => *want == title,
                };
                self.in_page = Some(selected);
                self.page_title = Some(title);
                self.field = None;
            }
            (b"id", Some(Field::RevisionId)) => {
                let raw = self.field_text.trim();
                let id = raw.parse().map_err(|_| {
                    self.malformed(format!("revision id {raw:?} is not an integer"))
                })?;
                if let Some(rev) = self.current.as_mut() {
                    rev.id = Some(id);
                }
                self.field = None;
            }
            (b"timestamp", Some(Field::Timestamp)) => {
                let ts = parse_timestamp(&self.field_text).ok_or_else(|| DumpError::Timestamp {
                    offset: self.offset(),
                    value: self.field_text.clone(),
                })?;
                if let Some(rev) = self.current.as_mut() {
                    rev.timestamp = Some(ts);
                }
                self.field = None;
            }
            (b"username", Some(Field::Username)) => {
                if let Some(rev) = self.current.as_mut() {
                    rev.username = Some(self.field_text.trim().to_owned());
                }
                self.field = None;
            }
            (b"ip", Some(Field::Ip)) => {
                if let Some(rev) = self.current.as_mut() {
                    rev.ip = Some(self.field_text.trim().to_owned());
                }
                self.field = None;
            }
            (b"text", Some(Field::Text)) => self.field = None,
            (b"revision", _) => {
                if let Some(partial) = self.current.take() {
                    return self.finish_revision(partial).map(Some);
                }
            }
            (b"page", _) => {
                if self.in_page == Some(true) {
                    self.page_done = true;
                }
                self.in_page = None;
            }
            _ => {}
        }
        Ok(None)
    }

    fn finish_revision(&mut self, partial: PartialRevision) -> Result<Revision, DumpError> {
        let offset = self.offset();
        let revision_id = partial.id.ok_or(DumpError::MissingField {
            offset,
            field: "id",
        })?;
        let timestamp = partial.timestamp.ok_or(DumpError::MissingField {
            offset,
            field: "timestamp",
        })?;
        let contributor = match (partial.username, partial.ip) {
            (Some(name), _) if !name.is_empty() => ContributorId::registered(name),
            (_, Some(ip)) if !ip.is_empty() => ContributorId::anonymous(ip),
            _ => ContributorId::deleted(),
        };
        let byte_size = partial.bytes_attr.unwrap_or(partial.text.len() as u64);
        let ordinal = self.emitted;
        self.emitted += 1;
        Ok(Revision {
            ordinal,
            revision_id,
            timestamp,
            contributor,
            byte_size,
            text: partial.text,
        })
    }

    fn step(&mut self) -> Result<Option<Revision>, DumpError> {
        // The event borrows the buffer, so lend it out while handlers use `self`.
        let mut buf = std::mem::take(&mut self.buf);
        let result = self.step_with(&mut buf);
        self.buf = buf;
        result
    }

    fn step_with(&mut self, buf: &mut Vec<u8>) -> Result<Option<Revision>, DumpError> {
        loop {
            if self.page_done {
                return Ok(None);
            }
            buf.clear();
            let event = self
                .reader
                .read_event_into(buf)
                .map_err(|e| DumpError::Malformed {
                    offset: self.reader.error_position(),
                    message: e.to_string(),
                })?;
            match event {
                Event::Start(e) => {
                    let name = e.name().as_ref().to_vec();
                    let bytes_attr = if name == b"text" {
                        bytes_attribute(&e)
                    } else {
                        None
                    };
                    self.stack.push(name.clone());
                    self.open(&name, bytes_attr);
                }
                Event::Empty(e) => {
                    // <text deleted="deleted" /> or <contributor deleted="deleted" />
                    let name = e.name().as_ref().to_vec();
                    if name == b"text" {
                        if let Some(rev) = self.current.as_mut() {
                            rev.bytes_attr = bytes_attribute(&e);
                        }
                    }
                }
                Event::End(e) => {
                    let name = e.name().as_ref().to_vec();
                    match self.stack.pop() {
                        Some(open) if open == name => {}
                        _ => {
                            return Err(self.malformed(format!(
                                "unexpected closing tag </{}>",
                                String::from_utf8_lossy(&name)
                            )))
                        }
                    }
                    if let Some(rev) = self.close(&name)? {
                        return Ok(Some(rev));
                    }
                }
                Event::Text(t) => {
                    if self.field.is_some() {
                        let text = t.unescape().map_err(|e| DumpError::Malformed {
                            offset: self.reader.buffer_position(),
                            message: e.to_string(),
                        })?;
                        self.append_text(text);
                    }
                }
                Event::CData(t) => {
                    if self.field.is_some() {
                        let raw = t.into_inner();
                        let text = std::str::from_utf8(&raw)
                            .map_err(|e| self.malformed(e))?
                            .to_owned();
                        self.append_text(text.into());
                    }
                }
                Event::Eof => {
                    if !self.stack.is_empty() {
                        return Err(self.malformed("unexpected end of input inside an element"));
                    }
                    return Ok(None);
                }
                _ => {}
            }
        }
    }
}

fn bytes_attribute(e: &quick_xml::events::BytesStart<'_>) -> Option<u64> {
    e.try_get_attribute("bytes")
        .ok()
        .flatten()
        .and_then(|a| std::str::from_utf8(&a.value).ok()?.parse().ok())
}

impl<R: BufRead> Iterator for RevisionReader<R> {
    type Item = Result<Revision, DumpError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        match self.step() {
            Ok(Some(rev)) => Some(Ok(rev)),
            Ok(None) => {
                self.finished = true;
                if self.emitted == 0 {
                    Some(Err(DumpError::Empty {
                        title: self.title_filter.clone(),
                    }))
                } else {
                    None
                }
            }
            Err(e) => {
                self.finished = true;
                Some(Err(e))
            }
        }
    }
}

/// Reads every revision of the selected page, in file order.
pub fn parse_dump<R: BufRead>(input: R, title: Option<&str>) -> Result<Vec<Revision>, DumpError> {
    RevisionReader::new(input, title).collect()
}

/// Writes one JSON object per line.
pub fn write_records<'a, W, I>(mut out: W, revisions: I) -> Result<(), DumpError>
where
    W: Write,
    I: IntoIterator<Item = &'a Revision>,
{
    for rev in revisions {
        serde_json::to_writer(&mut out, rev).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<Revision>, DumpError> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rev = serde_json::from_str(&line).map_err(|source| DumpError::Record {
            line: idx + 1,
            source,
        })?;
        out.push(rev);
    }
    Ok(out)
}
