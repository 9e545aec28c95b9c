//! Fixed-capacity vertex bitsets.

use crate::Vertex;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VertexSet {
    words: Vec<u64>,
}

pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        VertexSet {
            words: vec![0; words_for(n)],
        }
    }

    pub fn from_iter_n<I: IntoIterator<Item = Vertex>>(n: usize, it: I) -> Self {
        let mut s = Self::empty(n);
        for v in it {
            s.insert(v);
        }
        s
    }

    pub fn full(n: usize) -> Self {
        Self::from_iter_n(n, 0..n as Vertex)
    }

    #[inline]
    pub fn insert(&mut self, v: Vertex) {
        self.words[v as usize >> 6] |= 1 << (v & 63);
    }

    #[inline]
    pub fn remove(&mut self, v: Vertex) {
        self.words[v as usize >> 6] &= !(1 << (v & 63));
    }

    #[inline]
    pub fn contains(&self, v: Vertex) -> bool {
        self.words
            .get(v as usize >> 6)
            .is_some_and(|w| w & (1 << (v & 63)) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        iter_words(&self.words)
    }

    pub fn intersection_with_words(&self, other: &[u64]) -> VertexSet {
        VertexSet {
            words: self
                .words
                .iter()
                .zip(other.iter().chain(std::iter::repeat(&0)))
                .map(|(a, b)| a & b)
                .collect(),
        }
    }
}

pub(crate) fn and_count(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

pub(crate) fn iter_words(words: &[u64]) -> impl Iterator<Item = Vertex> + '_ {
    words.iter().enumerate().flat_map(|(i, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                None
            } else {
                let b = w.trailing_zeros();
                w &= w - 1;
                Some((i as u32) * 64 + b)
            }
        })
    })
}
