//! The one partitioning convention used everywhere in the crate.
//!
//! Vertices across workers, columns across workers, and destination vertices
//! across chunks are all split the same way: part `i` of `parts` over a
//! domain of size `total` gets the half-open range
//! `[i * ceil(total/parts), min((i+1) * ceil(total/parts), total))`.
//! Leading parts get `ceil(total/parts)` elements and trailing parts get the
//! remainder, possibly zero. Zero-width ranges are legal and every consumer
//! must handle them.

use std::ops::Range;

/// Splits `[0, total)` into `parts` contiguous ranges by the ceil/floor rule.
///
/// Panics if `parts == 0`.
pub fn even_ranges(total: usize, parts: usize) -> Vec<Range<usize>> {
    assert!(parts > 0, "cannot partition into zero parts");
    let size = total.div_ceil(parts);
    (0..parts)
        .map(|i| {
            let lo = (i * size).min(total);
            let hi = ((i + 1) * size).min(total);
            lo..hi
        })
        .collect()
}

/// Returns the part index owning `item` under [`even_ranges`]`(total, parts)`.
///
/// Panics if `item >= total`.
pub fn owner_of(item: usize, total: usize, parts: usize) -> usize {
    assert!(item < total, "item {item} outside domain of size {total}");
    let size = total.div_ceil(parts);
    item / size
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_division() {
        assert_eq!(even_ranges(4, 2), vec![0..2, 2..4]);
        assert_eq!(even_ranges(12, 4), vec![0..3, 3..6, 6..9, 9..12]);
    }

    #[test]
    fn ceil_floor_division() {
        // 5 over 2 -> sizes {3, 2}.
        assert_eq!(even_ranges(5, 2), vec![0..3, 3..5]);
        // 17 over 3 -> sizes {6, 6, 5}.
        assert_eq!(even_ranges(17, 3), vec![0..6, 6..12, 12..17]);
    }

    #[test]
    fn zero_width_tails() {
        // 2 over 4 -> sizes {1, 1, 0, 0}; trailing ranges are empty but valid.
        let r = even_ranges(2, 4);
        assert_eq!(r, vec![0..1, 1..2, 2..2, 2..2]);
        assert!(r[2].is_empty() && r[3].is_empty());
    }

    #[test]
    fn empty_domain() {
        let r = even_ranges(0, 3);
        assert!(r.iter().all(|r| r.is_empty()));
    }

    #[test]
    fn ranges_partition_domain() {
        for total in 0..40 {
            for parts in 1..10 {
                let r = even_ranges(total, parts);
                assert_eq!(r.len(), parts);
                let mut cursor = 0;
                for range in &r {
                    assert_eq!(range.start, cursor);
                    assert!(range.end >= range.start);
                    cursor = range.end;
                }
                assert_eq!(cursor, total);
            }
        }
    }

    #[test]
    fn owner_matches_ranges() {
        for total in 1..40 {
            for parts in 1..10 {
                let r = even_ranges(total, parts);
                for item in 0..total {
                    let w = owner_of(item, total, parts);
                    assert!(r[w].contains(&item));
                }
            }
        }
    }
}
