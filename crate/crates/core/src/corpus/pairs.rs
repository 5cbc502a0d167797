/// One (target, context) observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingPair {
    pub target: u32,
    pub context: u32,
    /// Index of the target in the filtered (in-vocabulary) token sequence.
    pub position: usize,
}

/// Symmetric fixed-size window over an already OOV-filtered id sequence.
///
/// For each position the left contexts are emitted nearest-last, then the
/// right contexts nearest-first.
pub fn iter_pairs(ids: &[u32], window: usize) -> impl Iterator<Item = TrainingPair> + '_ {
    ids.iter().enumerate().flat_map(move |(t, &target)| {
        let lo = t.saturating_sub(window);
        let hi = (t + window + 1).min(ids.len());
        (lo..hi)
            .filter(move |&j| j != t)
            .map(move |j| TrainingPair {
                target,
                context: ids[j],
                position: t,
            })
    })
}

/// Number of pairs `iter_pairs` yields for a sequence of `len` ids.
pub fn count_pairs(len: usize, window: usize) -> u64 {
    (0..len)
        .map(|t| (t.min(window) + (len - 1 - t).min(window)) as u64)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn as_tuples(ids: &[u32], window: usize) -> Vec<(u32, u32)> {
        iter_pairs(ids, window)
            .map(|p| (p.target, p.context))
            .collect()
    }

    #[test]
    fn window_one() {
        assert_eq!(
            as_tuples(&[0, 1, 2], 1),
            vec![(0, 1), (1, 0), (1, 2), (2, 1)]
        );
    }

    #[test]
    fn single_token() {
        assert!(as_tuples(&[4], 3).is_empty());
        assert!(as_tuples(&[], 3).is_empty());
    }

    #[test]
    fn counts_agree_with_iteration() {
        for len in 0..25 {
            for w in 1..6 {
                assert_eq!(
                    iter_pairs(&vec![0; len], w).count() as u64,
                    count_pairs(len, w)
                );
            }
        }
    }

    #[test]
    fn symmetric_multiset() {
        let ids = [3, 1, 4, 1, 5, 9, 2, 6, 5, 3];
        let mut fwd: Vec<_> = iter_pairs(&ids, 3).map(|p| (p.target, p.context)).collect();
        let mut rev: Vec<_> = fwd.iter().map(|&(a, b)| (b, a)).collect();
        fwd.sort();
        rev.sort();
        assert_eq!(fwd, rev);
    }
}
