use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use super::GeneratorError;

/// Environment variable that points at a replacement word list (one word per line).
pub const DICTIONARY_ENV: &str = "GRAPHWALK_DICTIONARY";

static BUNDLED_WORDS: &str = include_str!("../../data/words.txt");

/// Lowercase English word set used to reject generated names that carry meaning.
#[derive(Debug, Clone)]
pub struct Dictionary {
    words: HashSet<String>,
}

impl Dictionary {
    pub fn from_words<I, S>(words: I) -> Result<Self, GeneratorError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: HashSet<String> =
            words.into_iter().map(|w| w.as_ref().trim().to_ascii_lowercase()).filter(|w| !w.is_empty()).collect();
        if words.is_empty() {
            return Err(GeneratorError::EmptyDictionary);
        }
        Ok(Self { words })
    }

    pub fn from_file(path: &Path) -> Result<Self, GeneratorError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeneratorError::DictionaryIo(format!("{}: {e}", path.display())))?;
        Self::from_words(text.lines())
    }

    /// The bundled list, or the file named by `GRAPHWALK_DICTIONARY`.
    /// Loaded once per process.
    pub fn standard() -> Result<&'static Dictionary, GeneratorError> {
        static STANDARD: OnceLock<Result<Dictionary, GeneratorError>> = OnceLock::new();
        STANDARD
            .get_or_init(|| match std::env::var_os(DICTIONARY_ENV) {
                Some(path) => Self::from_file(Path::new(&path)),
                None => Self::from_words(BUNDLED_WORDS.lines()),
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_ascii_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}
