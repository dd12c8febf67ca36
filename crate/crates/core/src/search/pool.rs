use crate::metrics::MetricKind;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Candidate {
    pub id: u32,
    pub score: f32,
    /// Inner product kept alongside the Euclidean score before a metric switch.
    pub ip: f32,
    pub visited: bool,
}

/// Bounded best-first candidate pool under one active metric.
#[derive(Debug)]
pub(crate) struct CandidatePool {
    capacity: usize,
    metric: MetricKind,
    entries: Vec<Candidate>,
}

impl CandidatePool {
    pub fn new(capacity: usize, metric: MetricKind) -> Self {
        CandidatePool { capacity, metric, entries: Vec::with_capacity(capacity + 1) }
    }

    pub fn reset(&mut self, capacity: usize, metric: MetricKind) {
        self.capacity = capacity;
        self.metric = metric;
        self.entries.clear();
    }

    pub fn entries(&self) -> &[Candidate] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    fn before(&self, a: &Candidate, b: &Candidate) -> bool {
        self.metric.is_better((a.score, a.id), (b.score, b.id))
    }

    /// Inserts `c` in order and drops the tail beyond capacity. Returns the
    /// insertion index, or `None` when `c` does not make the cut. Callers
    /// guarantee `c.id` is not already present.
    #[inline]
    pub fn insert(&mut self, c: Candidate) -> Option<usize> {
        if self.entries.len() >= self.capacity {
            let last = self.entries.last()?;
            if !self.before(&c, last) {
                return None;
            }
        }
        let pos = self.entries.partition_point(|e| self.before(e, &c));
        self.entries.insert(pos, c);
        if self.entries.len() > self.capacity {
            self.entries.pop();
        }
        Some(pos)
    }

    /// Bulk load, then sort and truncate once.
    pub fn fill(&mut self, items: impl IntoIterator<Item = Candidate>) {
        self.entries.extend(items);
        self.resort();
        self.entries.truncate(self.capacity);
    }

    fn resort(&mut self) {
        let m = self.metric;
        self.entries
            .sort_unstable_by(|a, b| m.compare((a.score, a.id), (b.score, b.id)));
    }

    /// Switches to inner-product ordering using each entry's stored IP.
    /// Visited flags survive.
    pub fn switch_to_inner_product(&mut self) {
        for e in &mut self.entries {
            e.score = e.ip;
        }
        self.metric = MetricKind::InnerProduct;
        self.resort();
    }

    pub fn first_unvisited(&self, from: usize) -> Option<usize> {
        (from..self.entries.len()).find(|&i| !self.entries[i].visited)
    }

    pub fn mark_visited(&mut self, pos: usize) -> u32 {
        self.entries[pos].visited = true;
        self.entries[pos].id
    }

    /// Size bound, strict ordering and id uniqueness.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.entries.len() > self.capacity {
            return Err(format!("pool holds {} > {}", self.entries.len(), self.capacity));
        }
        for w in self.entries.windows(2) {
            if !self.before(&w[0], &w[1]) {
                return Err(format!("pool out of order at ids {} / {}", w[0].id, w[1].id));
            }
        }
        let mut ids: Vec<u32> = self.entries.iter().map(|e| e.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err("duplicate id in pool".into());
        }
        Ok(())
    }
}
