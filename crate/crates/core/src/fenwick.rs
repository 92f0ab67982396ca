//! Binary indexed tree over value ranks, tracking counts and sums.

#[derive(Debug, Clone)]
pub(crate) struct RankFenwick {
    count: Vec<u32>,
    sum: Vec<f64>,
}

impl RankFenwick {
    pub(crate) fn new(size: usize) -> Self {
        Self {
            count: vec![0; size + 1],
            sum: vec![0.0; size + 1],
        }
    }

    /// Inserts `value` at 0-based `rank`.
    pub(crate) fn insert(&mut self, rank: usize, value: f64) {
        let mut i = rank + 1;
        while i < self.count.len() {
            self.count[i] += 1;
            self.sum[i] += value;
            i += i & i.wrapping_neg();
        }
    }

    /// Count and sum of inserted values with rank `<= rank`.
    pub(crate) fn prefix(&self, rank: usize) -> (u32, f64) {
        let mut i = rank + 1;
        let (mut c, mut s) = (0u32, 0.0);
        while i > 0 {
            c += self.count[i];
            s += self.sum[i];
            i &= i - 1;
        }
        (c, s)
    }
}

/// Binary indexed tree of counts over ranks.
#[derive(Debug, Clone)]
pub(crate) struct CountFenwick {
    count: Vec<i32>,
}

impl CountFenwick {
    pub(crate) fn new(size: usize) -> Self {
        Self {
            count: vec![0; size + 1],
        }
    }

    /// Adds `delta` at 0-based `rank`.
    pub(crate) fn add(&mut self, rank: usize, delta: i32) {
        let mut i = rank + 1;
        while i < self.count.len() {
            self.count[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Number of entries with rank `< rank`.
    pub(crate) fn below(&self, rank: usize) -> i64 {
        let mut i = rank;
        let mut c = 0i64;
        while i > 0 {
            c += self.count[i] as i64;
            i &= i - 1;
        }
        c
    }
}

/// Dense ranks of `values` (ties share a rank) and the number of distinct values.
pub(crate) fn dense_ranks(values: &[f64]) -> (Vec<usize>, usize) {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let ranks = values
        .iter()
        .map(|v| sorted.partition_point(|s| s < v))
        .collect();
    (ranks, sorted.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_counts_and_sums() {
        let vals = [3.0, 1.0, 2.0, 1.0];
        let (ranks, m) = dense_ranks(&vals);
        assert_eq!(ranks, vec![2, 0, 1, 0]);
        assert_eq!(m, 3);
        let mut fw = RankFenwick::new(m);
        for (r, v) in ranks.iter().zip(vals) {
            fw.insert(*r, v);
        }
        assert_eq!(fw.prefix(0), (2, 2.0));
        assert_eq!(fw.prefix(1), (3, 4.0));
        assert_eq!(fw.prefix(2), (4, 7.0));
    }
}
