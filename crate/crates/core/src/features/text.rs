//! Term splitting, character n-gram cosine similarity and edit distance.

use std::collections::HashMap;

/// Lowercased whitespace-separated terms. Punctuation stays inside terms.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

fn ngram_counts(chars: &[char], n: usize) -> HashMap<&[char], u64> {
    let mut counts = HashMap::new();
    if n > 0 {
        for gram in chars.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Cosine similarity of the character n-gram count vectors of `a` and `b`.
///
/// Grams are taken over the raw strings (spaces included, no padding); the
/// caller is expected to lowercase. When either string is shorter than `n`
/// the result is 1.0 if the strings are equal and 0.0 otherwise.
pub fn char_ngram_cosine(a: &str, b: &str, n: usize) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if n == 0 || a.len() < n || b.len() < n {
        return if a == b { 1.0 } else { 0.0 };
    }
    let ca = ngram_counts(&a, n);
    let cb = ngram_counts(&b, n);
    let (small, large) = if ca.len() <= cb.len() {
        (&ca, &cb)
    } else {
        (&cb, &ca)
    };
    let dot: u64 = small
        .iter()
        .filter_map(|(gram, x)| large.get(gram).map(|y| x * y))
        .sum();
    let norm_a: u64 = ca.values().map(|x| x * x).sum();
    let norm_b: u64 = cb.values().map(|x| x * x).sum();
    let cos = dot as f64 / ((norm_a as f64) * (norm_b as f64)).sqrt();
    cos.clamp(0.0, 1.0)
}

/// Character-level Levenshtein distance with unit costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("ancient turkey"), ["ancient", "turkey"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Benfica  vs   Sporting"), ["benfica", "vs", "sporting"]);
        assert_eq!(tokenize(" what's\tC++ \u{3000}x"), ["what's", "c++", "x"]);
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(char_ngram_cosine("istanbul", "istanbul", 3), 1.0);
        // {abc, bcd} vs {abc, bce}: dot 1, norms sqrt(2) each
        assert!((char_ngram_cosine("abcd", "abce", 3) - 0.5).abs() < 1e-15);
        assert_eq!(char_ngram_cosine("ab", "xyz", 3), 0.0);
        assert_eq!(char_ngram_cosine("ab", "ab", 3), 1.0);
        assert_eq!(char_ngram_cosine("", "", 4), 1.0);
        // "greyhound" shares all 7 of its grams with "greyhound.com" (11 grams)
        let expected = 7.0 / (7.0f64 * 11.0).sqrt();
        assert!((char_ngram_cosine("greyhound", "greyhound.com", 3) - expected).abs() < 1e-15);
    }

    #[test]
    fn repeated_grams_count() {
        // "aaaa" -> aaa x2 ; "aaa" -> aaa x1 ; cos = 2 / (2 * 1) = 1
        assert_eq!(char_ngram_cosine("aaaa", "aaa", 3), 1.0);
        // "aaab" -> aaa, aab ; "aaa" -> aaa ; cos = 1 / sqrt(2)
        assert!((char_ngram_cosine("aaab", "aaa", 3) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("footbal lisbon", "football lisbon"), 1);
        assert_eq!(levenshtein("x", "x"), 0);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("über", "uber"), 1);
    }

    proptest! {
        #[test]
        fn cosine_is_symmetric_and_bounded(a in "[a-d ]{0,10}", b in "[a-d ]{0,10}", n in 3usize..=4) {
            let x = char_ngram_cosine(&a, &b, n);
            prop_assert_eq!(x, char_ngram_cosine(&b, &a, n));
            prop_assert!((0.0..=1.0).contains(&x));
        }

        #[test]
        fn cosine_of_identical_is_one(a in "[a-z]{3,12}") {
            prop_assert_eq!(char_ngram_cosine(&a, &a, 3), 1.0);
            prop_assert_eq!(char_ngram_cosine(&a, &a, 4), 1.0);
        }

        #[test]
        fn levenshtein_metric_axioms(a in "[ab]{0,6}", b in "[ab]{0,6}", c in "[ab]{0,6}") {
            prop_assert_eq!(levenshtein(&a, &a), 0);
            prop_assert_eq!(levenshtein(&a, &b) == 0, a == b);
            prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
            prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        }
    }
}
