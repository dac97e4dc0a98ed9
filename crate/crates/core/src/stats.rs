//! Order statistics shared by edge aging and the benchmark reports.
//!
//! One quantile convention is used everywhere: the q-quantile of `n` sorted
//! values sits at rank `q * (n - 1)` and interpolates linearly between the two
//! neighbouring order statistics.

/// Linear-interpolation quantile over `n` order statistics supplied by `kth`
/// (0-based, ascending). `n` must be non-zero and `q` in `[0, 1]`.
pub fn interpolated_quantile(n: usize, q: f64, mut kth: impl FnMut(usize) -> f64) -> f64 {
    debug_assert!(n > 0);
    let q = q.clamp(0.0, 1.0);
    let rank = q * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    let lo_val = kth(lo);
    if frac == 0.0 || lo + 1 >= n {
        return lo_val;
    }
    let hi_val = kth(lo + 1);
    lo_val + frac * (hi_val - lo_val)
}

/// Quantile of an unsorted sample. Returns `None` for an empty sample.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(interpolated_quantile(sorted.len(), q, |k| sorted[k]))
}

pub fn median(values: &[f64]) -> Option<f64> {
    percentile(values, 0.5)
}

/// Multiset of non-negative integer ages with O(log max_age) order-statistic
/// queries.
///
/// Counts are kept per age alongside a Fenwick tree of prefix sums. The tree
/// capacity is a power of two and doubles when an age outgrows it.
#[derive(Clone, Debug, Default)]
pub struct AgeHistogram {
    counts: Vec<u64>,
    tree: Vec<u64>,
    total: u64,
}

impl AgeHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of ages in the multiset.
    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Multiplicity of `age`.
    pub fn count(&self, age: u32) -> u64 {
        self.counts.get(age as usize).copied().unwrap_or(0)
    }

    /// `(age, multiplicity)` pairs for every age present, ascending.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(a, &c)| (a as u32, c))
    }

    pub fn insert(&mut self, age: u32) {
        self.ensure_capacity(age);
        self.counts[age as usize] += 1;
        self.tree_add(age as usize, 1);
        self.total += 1;
    }

    /// Removes one occurrence of `age`.
    ///
    /// # Panics
    /// If `age` is not present.
    pub fn remove(&mut self, age: u32) {
        let slot = self
            .counts
            .get_mut(age as usize)
            .filter(|c| **c > 0)
            .expect("removing an age that is not in the histogram");
        *slot -= 1;
        self.tree_sub(age as usize, 1);
        self.total -= 1;
    }

    /// Replaces one occurrence of `from` with `to`.
    pub fn shift(&mut self, from: u32, to: u32) {
        if from != to {
            self.remove(from);
            self.insert(to);
        }
    }

    /// The `k`-th smallest age (0-based). `k` must be below `len()`.
    pub fn kth(&self, k: u64) -> u32 {
        assert!(
            k < self.total,
            "order statistic {k} out of range {}",
            self.total
        );
        let cap = self.counts.len();
        let mut pos = 0usize;
        let mut remaining = k + 1;
        let mut step = cap;
        while step > 0 {
            let next = pos + step;
            if next <= cap && self.tree[next] < remaining {
                pos = next;
                remaining -= self.tree[next];
            }
            step >>= 1;
        }
        pos as u32
    }

    /// Linear-interpolation quantile, `None` when empty.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        if self.total == 0 {
            return None;
        }
        Some(interpolated_quantile(self.total as usize, q, |k| {
            self.kth(k as u64) as f64
        }))
    }

    fn ensure_capacity(&mut self, age: u32) {
        let needed = age as usize + 1;
        if needed <= self.counts.len() {
            return;
        }
        let cap = needed
            .next_power_of_two()
            .max(16)
            .max(self.counts.len() * 2);
        self.counts.resize(cap, 0);
        self.rebuild_tree();
    }

    fn rebuild_tree(&mut self) {
        let cap = self.counts.len();
        self.tree = vec![0; cap + 1];
        for i in 1..=cap {
            self.tree[i] += self.counts[i - 1];
            let parent = i + (i & i.wrapping_neg());
            if parent <= cap {
                self.tree[parent] += self.tree[i];
            }
        }
    }

    fn tree_add(&mut self, index: usize, v: u64) {
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] += v;
            i += i & i.wrapping_neg();
        }
    }

    fn tree_sub(&mut self, index: usize, v: u64) {
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] -= v;
            i += i & i.wrapping_neg();
        }
    }
}

impl From<Vec<u64>> for AgeHistogram {
    fn from(counts: Vec<u64>) -> Self {
        let mut h = AgeHistogram::new();
        if let Some(last) = counts.iter().rposition(|&c| c > 0) {
            h.ensure_capacity(last as u32);
            h.counts[..=last].copy_from_slice(&counts[..=last]);
            h.total = counts.iter().sum();
            h.rebuild_tree();
        }
        h
    }
}

impl From<AgeHistogram> for Vec<u64> {
    fn from(h: AgeHistogram) -> Self {
        let end = h.counts.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1);
        h.counts[..end].to_vec()
    }
}
