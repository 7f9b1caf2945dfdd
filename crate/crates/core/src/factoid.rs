//! Internal links as factoids.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Namespaces whose links are media, maintenance or navigation rather than content.
const EXCLUDED_NAMESPACES: &[&str] = &[
    "file",
    "image",
    "category",
    "wikipedia",
    "template",
    "help",
    "portal",
    "special",
];

/// A normalized internal-link target.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Factoid(String);

impl Factoid {
    /// Normalizes `raw`; see [`normalize_target`].
    pub fn new(raw: &str) -> Option<Self> {
        normalize_target(raw)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for Factoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Factoid {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

fn is_excluded_prefix(prefix: &str) -> bool {
    let p = prefix.trim().to_lowercase();
    if EXCLUDED_NAMESPACES.contains(&p.as_str()) {
        return true;
    }
    // interwiki / language links: [[fr:Inde]], [[zh-yue:...]] is not covered
    (2..=3).contains(&p.chars().count()) && p.chars().all(|c| c.is_ascii_lowercase())
}

/// Canonicalizes the target segment of a link (the part before any `|`).
///
/// Strips the anchor, maps underscores to spaces, collapses whitespace runs,
/// trims and uppercases the first character. Returns `None` for empty
/// targets and for excluded namespaces.
pub fn normalize_target(raw: &str) -> Option<Factoid> {
    let target = raw.split('#').next().unwrap_or("");
    let target = target.replace('_', " ");
    let collapsed = target.split_whitespace().collect::<Vec<_>>().join(" ");
    // leading colon forces a plain link, e.g. [[:Category:Foo]]
    let collapsed = collapsed.trim_start_matches(':').trim();
    if collapsed.is_empty() {
        return None;
    }
    if let Some((prefix, _)) = collapsed.split_once(':') {
        if is_excluded_prefix(prefix) {
            return None;
        }
    }
    if collapsed.contains(['[', ']', '|', '{', '}', '<', '>']) {
        return None;
    }
    let mut chars = collapsed.chars();
    let first = chars.next()?;
    let canonical: String = first.to_uppercase().chain(chars).collect();
    Some(Factoid(canonical))
}

/// Returns the set of normalized targets of every `[[...]]` link in `wikitext`.
pub fn extract_internal_links(wikitext: &str) -> BTreeSet<Factoid> {
    let mut out = BTreeSet::new();
    let mut rest = wikitext;
    while let Some(start) = rest.find("[[") {
        let after = &rest[start + 2..];
        let Some(end) = after.find("]]") else {
            break;
        };
        let inner = &after[..end];
        // [[a [[b]] c]]: restart at the innermost opening bracket
        if let Some(nested) = inner.rfind("[[") {
            rest = &after[nested..];
            continue;
        }
        let target = inner.split('|').next().unwrap_or("");
        if let Some(f) = normalize_target(target) {
            out.insert(f);
        }
        rest = &after[end + 2..];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<Factoid> {
        items.iter().map(|s| Factoid(s.to_string())).collect()
    }

    #[test]
    fn words_and_phrases() {
        assert_eq!(
            extract_internal_links("[[Bible]] and [[Second Samoan Civil War]]"),
            set(&["Bible", "Second Samoan Civil War"])
        );
    }

    #[test]
    fn empty_text() {
        assert!(extract_internal_links("").is_empty());
    }

    #[test]
    fn piped_and_anchored_collapse() {
        assert_eq!(
            extract_internal_links("[[sachin Tendulkar|the maestro]] [[Sachin_Tendulkar#Career]]"),
            set(&["Sachin Tendulkar"])
        );
    }

    #[test]
    fn normalization_rules() {
        assert_eq!(normalize_target("File:Map.png"), None);
        assert_eq!(
            normalize_target("  new__york  city ").unwrap().as_str(),
            "New york city"
        );
        assert_eq!(normalize_target("India#History").unwrap().as_str(), "India");
        assert_eq!(normalize_target("#Section"), None);
        assert_eq!(normalize_target("category:Asia"), None);
        assert_eq!(normalize_target("fr:Inde"), None);
        assert_eq!(
            normalize_target("Star Wars: Episode I").unwrap().as_str(),
            "Star Wars: Episode I"
        );
        assert_eq!(normalize_target("éclair").unwrap().as_str(), "Éclair");
    }

    #[test]
    fn unterminated_link_ignored() {
        assert_eq!(
            extract_internal_links("[[India]] then [[Broken"),
            set(&["India"])
        );
    }

    #[test]
    fn nested_link_in_label() {
        assert_eq!(
            extract_internal_links("[[File:X.png|thumb|Map of [[Asia]] region]]"),
            set(&["Asia"])
        );
    }
}
