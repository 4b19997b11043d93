use std::collections::HashSet;

/// Common English function words.
pub const ENGLISH_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any", "are", "as", "at",
    "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can", "could", "did", "do",
    "does", "doing", "down", "during", "each", "either", "et", "few", "for", "from", "further", "had", "has", "have",
    "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "however", "i", "if", "in",
    "into", "is", "it", "its", "itself", "just", "may", "me", "might", "more", "most", "must", "my", "myself", "no",
    "nor", "not", "now", "of", "off", "on", "once", "one", "only", "or", "other", "our", "ours", "ourselves", "out",
    "over", "own", "per", "same", "shall", "she", "should", "so", "some", "such", "than", "that", "the", "their",
    "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those", "through", "thus", "to", "too",
    "under", "until", "up", "upon", "us", "very", "was", "we", "were", "what", "when", "where", "whether", "which",
    "while", "who", "whom", "why", "will", "with", "within", "without", "would", "yet", "you", "your", "yours",
    "yourself", "yourselves",
];

#[derive(Debug, Clone)]
pub struct TokenizerConfig {
    /// Tokens shorter than this are dropped.
    pub min_token_len: usize,
    pub stopwords: HashSet<String>,
    /// Terms in fewer documents than this are dropped.
    pub min_df: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            min_token_len: 2,
            stopwords: ENGLISH_STOPWORDS.iter().map(|s| s.to_string()).collect(),
            min_df: 2,
        }
    }
}

impl TokenizerConfig {
    /// No stopwords and `min_df = 1`.
    pub fn permissive() -> Self {
        TokenizerConfig { min_token_len: 1, stopwords: HashSet::new(), min_df: 1 }
    }

    pub fn with_min_df(mut self, min_df: usize) -> Self {
        self.min_df = min_df;
        self
    }

    /// Replaces the stopword list with the whitespace-separated words of `text`.
    pub fn with_stopword_text(mut self, text: &str) -> Self {
        self.stopwords = text.split_whitespace().map(str::to_lowercase).collect();
        self
    }

    /// Lowercases, splits on non-alphanumeric characters and filters.
    pub fn tokenize<'a>(&'a self, text: &'a str) -> impl Iterator<Item = String> + 'a {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .filter(move |t| t.chars().count() >= self.min_token_len && !self.stopwords.contains(t))
    }
}
