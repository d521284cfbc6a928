/// One bulletin-board record. `poster` is the authenticated identity of the
/// node that posted it, as a blockchain transaction's signer would be.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PbbEntry {
    pub counter: u64,
    pub poster: u32,
    pub keyword: Vec<u8>,
    pub value: Vec<u8>,
}

impl PbbEntry {
    pub fn stored_bytes(&self) -> usize {
        self.keyword.len() + self.value.len()
    }
}

/// A keyword-indexed, totally ordered, append-only board.
pub trait BulletinBoard {
    /// Appends a record and returns its counter.
    fn post(&mut self, poster: u32, keyword: &[u8], value: Vec<u8>) -> u64;

    /// Records with `keyword` and `t_start < counter <= t_end`, in counter order.
    fn retrieve(&self, t_start: u64, t_end: u64, keyword: &[u8]) -> Vec<&PbbEntry>;

    /// Counter of the latest record, 0 when empty.
    fn counter(&self) -> u64;
}

/// In-process [`BulletinBoard`].
#[derive(Clone, Debug, Default)]
pub struct Pbb {
    entries: Vec<PbbEntry>,
}

impl Pbb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[PbbEntry] {
        &self.entries
    }

    /// Keyword plus value bytes over every record.
    pub fn stored_bytes(&self) -> usize {
        self.entries.iter().map(PbbEntry::stored_bytes).sum()
    }

    /// Stored bytes over records whose keyword starts with `prefix`.
    pub fn stored_bytes_with_prefix(&self, prefix: &[u8]) -> usize {
        self.entries
            .iter()
            .filter(|e| e.keyword.starts_with(prefix))
            .map(PbbEntry::stored_bytes)
            .sum()
    }
}

impl BulletinBoard for Pbb {
    fn post(&mut self, poster: u32, keyword: &[u8], value: Vec<u8>) -> u64 {
        let counter = self.entries.len() as u64 + 1;
        self.entries.push(PbbEntry { counter, poster, keyword: keyword.to_vec(), value });
        counter
    }

    fn retrieve(&self, t_start: u64, t_end: u64, keyword: &[u8]) -> Vec<&PbbEntry> {
        if t_start >= t_end {
            return Vec::new();
        }
        let hi = (t_end as usize).min(self.entries.len());
        self.entries[(t_start as usize).min(hi)..hi]
            .iter()
            .filter(|e| e.keyword == keyword)
            .collect()
    }

    fn counter(&self) -> u64 {
        self.entries.len() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_and_keyword_filtering() {
        let mut pbb = Pbb::new();
        assert_eq!(pbb.counter(), 0);
        assert_eq!(pbb.post(1, b"a", vec![1]), 1);
        assert_eq!(pbb.post(2, b"b", vec![2]), 2);
        assert_eq!(pbb.post(3, b"a", vec![3]), 3);
        let got: Vec<_> = pbb.retrieve(0, 3, b"a").iter().map(|e| (e.value[0], e.counter)).collect();
        assert_eq!(got, vec![(1, 1), (3, 3)]);
        assert_eq!(pbb.retrieve(1, 3, b"a").len(), 1);
        assert!(pbb.retrieve(0, 3, b"c").is_empty());
        assert!(pbb.retrieve(3, 1, b"a").is_empty());
        assert_eq!(pbb.retrieve(0, 99, b"b")[0].poster, 2);
        assert_eq!(pbb.stored_bytes(), 6);
        assert_eq!(pbb.stored_bytes_with_prefix(b"a"), 4);
    }
}
