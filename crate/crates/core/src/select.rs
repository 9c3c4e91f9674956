//! Deterministic linear-time selection (median of medians, groups of five).

/// Counts element touches so callers can check the linear bound empirically.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct VisitCounter(pub usize);

impl VisitCounter {
    fn add(&mut self, n: usize) {
        self.0 += n;
    }
}

/// The `k`-th largest value of `values` (1-based), in worst-case `O(len)`.
///
/// # Panics
/// If `k` is zero or exceeds `values.len()`.
pub fn kth_largest(values: &[f64], k: usize, visits: &mut VisitCounter) -> f64 {
    assert!(k >= 1 && k <= values.len(), "rank {k} out of range 1..={}", values.len());
    kth_smallest(values.to_vec(), values.len() - k, visits)
}

/// `rank` is 0-based.
fn kth_smallest(mut values: Vec<f64>, mut rank: usize, visits: &mut VisitCounter) -> f64 {
    loop {
        let n = values.len();
        visits.add(n);
        if n <= 10 {
            values.sort_by(f64::total_cmp);
            return values[rank];
        }

        let medians: Vec<f64> = values
            .chunks(5)
            .map(|chunk| {
                let mut g = chunk.to_vec();
                g.sort_by(f64::total_cmp);
                g[(g.len() - 1) / 2]
            })
            .collect();
        let mid = (medians.len() - 1) / 2;
        let pivot = kth_smallest(medians, mid, visits);

        let mut less = Vec::new();
        let mut greater = Vec::new();
        let mut equal = 0;
        for &x in &values {
            match x.total_cmp(&pivot) {
                std::cmp::Ordering::Less => less.push(x),
                std::cmp::Ordering::Greater => greater.push(x),
                std::cmp::Ordering::Equal => equal += 1,
            }
        }
        if rank < less.len() {
            values = less;
        } else if rank < less.len() + equal {
            return pivot;
        } else {
            rank -= less.len() + equal;
            values = greater;
        }
    }
}
