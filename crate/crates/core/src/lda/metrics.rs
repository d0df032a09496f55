//! Comparing recovered topics against planted ones.

use std::collections::HashMap;

use super::TopicAssignment;

/// Most frequent topic of each document (ties go to the lower topic);
/// `None` for empty documents.
pub fn modal_topics(z: &TopicAssignment, k: usize) -> Vec<Option<usize>> {
    z.rows()
        .iter()
        .map(|row| {
            let mut counts = vec![0usize; k];
            for &t in row {
                counts[t] += 1;
            }
            let best = counts.iter().copied().max()?;
            (best > 0).then(|| {
                counts
                    .iter()
                    .position(|&c| c == best)
                    .expect("max is present")
            })
        })
        .collect()
}

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Adjusted Rand index of two labelings of the same items: 1 for
/// identical partitions (up to relabeling), about 0 for independent ones.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings of different lengths");
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&n| pairs(n)).sum();
    let sum_a: f64 = rows.values().map(|&n| pairs(n)).sum();
    let sum_b: f64 = cols.values().map(|&n| pairs(n)).sum();
    let total = pairs(a.len() as u64);
    if total == 0.0 {
        return 1.0;
    }
    let expected = sum_a * sum_b / total;
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lda::Corpus;
    use std::path::Path;

    #[test]
    fn ari_reference_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 1, 1]), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]), 1.0);
        assert!((adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 1, 2]) - 4.0 / 7.0).abs() < 1e-12);
        assert_eq!(adjusted_rand_index(&[0, 0, 0, 0], &[0, 1, 2, 3]), 0.0);
        assert!(adjusted_rand_index(&[0, 1, 0, 1, 0, 1], &[0, 0, 0, 1, 1, 1]) < 0.0);
    }

    #[test]
    fn modal_topic_per_document() {
        let c = Corpus::parse("0 0 0\n1 1\n\n", None, Path::new("mem")).unwrap();
        let z = TopicAssignment::new(vec![vec![2, 1, 2], vec![0, 1], vec![]], &c, 3).unwrap();
        assert_eq!(modal_topics(&z, 3), vec![Some(2), Some(0), None]);
    }
}
