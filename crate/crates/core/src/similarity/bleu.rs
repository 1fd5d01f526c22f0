use std::collections::HashMap;

use super::tokenize;

const MAX_ORDER: usize = 4;

/// Smoothed sentence BLEU-4 on a 0-100 scale.
///
/// Unigram precision is unsmoothed; orders 2-4 use add-one smoothing
/// `(matches + 1) / (candidate_ngrams + 1)`. The brevity penalty is
/// `exp(1 - r/c)` when the candidate is not longer than the reference.
/// An empty candidate or reference scores 0.
pub fn bleu(candidate: &str, reference: &str) -> f64 {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let mut log_precision = 0.0;
    for order in 1..=MAX_ORDER {
        let (matches, total) = clipped_matches(&cand, &refr, order);
        let (num, den) = if order == 1 {
            (matches, total)
        } else {
            (matches + 1, total + 1)
        };
        if num == 0 {
            return 0.0;
        }
        log_precision += ((num as f64).ln() - (den as f64).ln()) / MAX_ORDER as f64;
    }
    100.0 * brevity_penalty(cand.len(), refr.len()) * log_precision.exp()
}

/// Unsmoothed corpus-level BLEU-4 over `(candidate, reference)` pairs:
/// n-gram matches and lengths are pooled before taking precisions.
pub fn corpus_bleu<'a, I>(pairs: I) -> f64
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut matches = [0usize; MAX_ORDER];
    let mut totals = [0usize; MAX_ORDER];
    let (mut cand_len, mut ref_len) = (0usize, 0usize);
    for (candidate, reference) in pairs {
        let cand = tokenize(candidate);
        let refr = tokenize(reference);
        cand_len += cand.len();
        ref_len += refr.len();
        for order in 1..=MAX_ORDER {
            let (m, t) = clipped_matches(&cand, &refr, order);
            matches[order - 1] += m;
            totals[order - 1] += t;
        }
    }
    if cand_len == 0 || ref_len == 0 {
        return 0.0;
    }
    let mut log_precision = 0.0;
    for order in 0..MAX_ORDER {
        if matches[order] == 0 {
            return 0.0;
        }
        log_precision +=
            ((matches[order] as f64).ln() - (totals[order] as f64).ln()) / MAX_ORDER as f64;
    }
    100.0 * brevity_penalty(cand_len, ref_len) * log_precision.exp()
}

fn brevity_penalty(cand_len: usize, ref_len: usize) -> f64 {
    if cand_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    }
}

fn ngram_counts<'a>(tokens: &'a [&'a str], order: usize) -> HashMap<&'a [&'a str], usize> {
    let mut counts: HashMap<&[&str], usize> = HashMap::new();
    if tokens.len() >= order {
        for gram in tokens.windows(order) {
            *counts.entry(gram).or_default() += 1;
        }
    }
    counts
}

/// (clipped matches, candidate n-gram count) for one order.
fn clipped_matches(cand: &[&str], refr: &[&str], order: usize) -> (usize, usize) {
    let total = cand.len().saturating_sub(order - 1);
    let cand_counts = ngram_counts(cand, order);
    let ref_counts = ngram_counts(refr, order);
    // Integer sums: iteration order cannot affect the result.
    let matches = cand_counts
        .iter()
        .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    (matches, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_exactly_100() {
        assert_eq!(bleu("the cat sat on the mat", "the cat sat on the mat"), 100.0);
        assert_eq!(bleu("x", "x"), 100.0);
    }

    #[test]
    fn empty_inputs_score_zero() {
        assert_eq!(bleu("", "the cat"), 0.0);
        assert_eq!(bleu("the cat", ""), 0.0);
        assert_eq!(bleu("   ", "the cat"), 0.0);
    }

    #[test]
    fn disjoint_scores_zero() {
        assert_eq!(bleu("alpha beta gamma", "delta epsilon"), 0.0);
    }

    #[test]
    fn clipping_limits_repeated_tokens() {
        // "the the the" vs "the cat": unigram matches clip at 1.
        let (m, t) = clipped_matches(&["the", "the", "the"], &["the", "cat"], 1);
        assert_eq!((m, t), (1, 3));
    }

    #[test]
    fn longer_candidate_has_no_brevity_penalty() {
        assert_eq!(brevity_penalty(5, 4), 1.0);
        assert!(brevity_penalty(3, 4) < 1.0);
    }

    #[test]
    fn corpus_bleu_of_identical_pairs() {
        let pairs = [("a b c d e", "a b c d e"), ("x y z w", "x y z w")];
        assert!((corpus_bleu(pairs) - 100.0).abs() < 1e-12);
        assert_eq!(corpus_bleu([("a b", "c d")]), 0.0);
    }
}
