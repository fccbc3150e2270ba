use std::collections::{HashMap, HashSet};

use crate::encoders::tokenize;

const STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// The shipped English stopword list.
pub fn default_stopwords() -> HashSet<String> {
    STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

/// Word counts over `docs` after lowercasing, stripping punctuation and dropping
/// stopwords; sorted by count descending, then alphabetically.
pub fn word_frequency<'a, I>(docs: I, stopwords: &HashSet<String>, top_n: usize) -> Vec<(String, usize)>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: HashMap<String, usize> = HashMap::new();
    for doc in docs {
        for w in tokenize(doc) {
            if !stopwords.contains(&w) {
                *counts.entry(w).or_default() += 1;
            }
        }
    }
    let mut out: Vec<(String, usize)> = counts.into_iter().collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out.truncate(top_n);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_order() {
        let sw = default_stopwords();
        assert_eq!(
            word_frequency(["maga maga love"], &sw, 10),
            vec![("maga".to_string(), 2), ("love".to_string(), 1)]
        );
        assert!(word_frequency(std::iter::empty::<&str>(), &sw, 10).is_empty());
        let r = word_frequency(["The vote, the VOTE! and bees; ants"], &sw, 2);
        assert_eq!(r, vec![("vote".to_string(), 2), ("ants".to_string(), 1)]);
        assert!(sw.contains("the") && !sw.iter().any(|w| w.starts_with('#')));
    }
}
