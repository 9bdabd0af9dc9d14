use std::collections::HashSet;

/// Decides whether a candidate string is English.
pub trait LanguageIdentifier: Send + Sync {
    fn is_english(&self, text: &str) -> bool;
}

/// English iff at least `threshold` of the whitespace tokens (lowercased)
/// are in a known English vocabulary.
#[derive(Debug, Clone)]
pub struct VocabularyRatio {
    vocabulary: HashSet<String>,
    threshold: f64,
}

impl VocabularyRatio {
    pub fn new<I, S>(vocabulary: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        VocabularyRatio {
            vocabulary: vocabulary.into_iter().map(|s| s.as_ref().to_lowercase()).collect(),
            threshold: 0.5,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }
}

impl LanguageIdentifier for VocabularyRatio {
    fn is_english(&self, text: &str) -> bool {
        let tokens: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
        if tokens.is_empty() {
            return false;
        }
        let known = tokens.iter().filter(|t| self.vocabulary.contains(*t)).count();
        known as f64 / tokens.len() as f64 >= self.threshold
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_threshold() {
        let id = VocabularyRatio::new(["oil", "for", "baby"]);
        assert!(id.is_english("oil for baby"));
        assert!(id.is_english("Oil pour baby"));
        assert!(!id.is_english("huile pour bébé"));
        assert!(id.is_english("huile baby"));
        assert!(!id.is_english(""));
        assert!(!id.with_threshold(0.9).is_english("huile baby"));
    }
}
