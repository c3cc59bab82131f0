use super::{Alphabet, ReducedWord};

/// The vertex path from `start` to `end`, both included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeodesicSegment {
    vertices: Vec<ReducedWord>,
}

impl GeodesicSegment {
    pub fn new(alphabet: &Alphabet, start: &ReducedWord, end: &ReducedWord) -> Self {
        let k = start.common_prefix_len(end);
        let mut vertices: Vec<ReducedWord> = (k..=start.len()).rev().map(|j| start.prefix(j)).collect();
        vertices.extend((k + 1..=end.len()).map(|j| end.prefix(j)));
        debug_assert_eq!(vertices.len(), alphabet.distance(start, end) + 1);
        GeodesicSegment { vertices }
    }

    pub fn vertices(&self) -> &[ReducedWord] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() == 1
    }
}
