/// Pluggable token counter.
///
/// Implementations must be deterministic and monotone under concatenation:
/// `count(a + b) >= max(count(a), count(b))`.
pub trait TokenCounter: Send + Sync {
    fn count(&self, text: &str) -> usize;
}

impl<F: Fn(&str) -> usize + Send + Sync> TokenCounter for F {
    fn count(&self, text: &str) -> usize {
        self(text)
    }
}

/// Approximate word counter: every run of alphanumeric characters is one
/// token and every other non-whitespace character is one token.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WordPunctCounter;

impl TokenCounter for WordPunctCounter {
    fn count(&self, text: &str) -> usize {
        let mut n = 0;
        let mut in_word = false;
        for c in text.chars() {
            if c.is_alphanumeric() {
                if !in_word {
                    n += 1;
                    in_word = true;
                }
            } else {
                in_word = false;
                if !c.is_whitespace() {
                    n += 1;
                }
            }
        }
        n
    }
}

/// Longest prefix of `text` (on a char boundary) that counts at most `cap` tokens.
pub fn head_within<'a>(text: &'a str, cap: usize, counter: &dyn TokenCounter) -> &'a str {
    if counter.count(text) <= cap {
        return text;
    }
    let bounds: Vec<usize> = text.char_indices().map(|(i, _)| i).chain([text.len()]).collect();
    // prefix counts are non-decreasing, so binary search the last fitting boundary
    let (mut lo, mut hi) = (0, bounds.len() - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if counter.count(&text[..bounds[mid]]) <= cap {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    &text[..bounds[lo]]
}
