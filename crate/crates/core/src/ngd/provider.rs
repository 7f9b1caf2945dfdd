use super::cache::CacheError;

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("provider configuration: {0}")]
    Config(String),
    #[error("HTTP status {status} after {attempts} attempt(s)")]
    Http { status: u16, attempts: u32 },
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("unparsable response: {0}")]
    Protocol(String),
    #[error("scale estimate unavailable: {0}")]
    ScaleUnavailable(String),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

/// How a provider estimates the size of the space it searches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScaleBasis {
    /// The provider knows its document count exactly.
    Documents(u64),
    /// Page count is approximated by the hits of a term found on nearly every page.
    ProbeTerm(String),
}

/// A source of document hit counts for phrases and phrase pairs.
///
/// `pair_hits` must be symmetric. Answers should be deterministic for a given
/// fingerprint; the fingerprint keys the persistent cache.
pub trait HitProvider: Send + Sync {
    fn fingerprint(&self) -> String;

    fn hits(&self, phrase: &str) -> Result<u64, ProviderError>;

    fn pair_hits(&self, a: &str, b: &str) -> Result<u64, ProviderError>;

    fn scale_basis(&self) -> ScaleBasis;

    fn words_multiplier(&self) -> f64;

    /// `N` computed without a cache.
    fn scale(&self) -> Result<f64, ProviderError> {
        let pages = match self.scale_basis() {
            ScaleBasis::Documents(n) => n,
            ScaleBasis::ProbeTerm(term) => self
                .hits(&term)
                .map_err(|e| ProviderError::ScaleUnavailable(e.to_string()))?,
        };
        if pages == 0 {
            return Err(ProviderError::ScaleUnavailable(
                "scale probe reported zero pages".into(),
            ));
        }
        Ok(pages as f64 * self.words_multiplier())
    }
}

impl<P: HitProvider + ?Sized> HitProvider for &P {
    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
    fn hits(&self, phrase: &str) -> Result<u64, ProviderError> {
        (**self).hits(phrase)
    }
    fn pair_hits(&self, a: &str, b: &str) -> Result<u64, ProviderError> {
        (**self).pair_hits(a, b)
    }
    fn scale_basis(&self) -> ScaleBasis {
        (**self).scale_basis()
    }
    fn words_multiplier(&self) -> f64 {
        (**self).words_multiplier()
    }
}
