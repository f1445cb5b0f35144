use super::{CandidateList, CandidateSource, IndexError, Vector};
use crate::ata::AtaId;

/// Row-major matrix of unit vectors, one per task, rows in id order.
#[derive(Debug, Clone)]
pub struct DenseIndex {
    ids: Vec<AtaId>,
    dims: usize,
    data: Vec<f32>,
}

impl DenseIndex {
    pub fn build(mut rows: Vec<(AtaId, Vector)>) -> Result<Self, IndexError> {
        rows.sort_by_key(|(id, _)| *id);
        let dims = rows.first().map_or(0, |(_, v)| v.dims());
        let mut data = Vec::with_capacity(rows.len() * dims);
        let mut ids = Vec::with_capacity(rows.len());
        for (id, v) in rows {
            if v.dims() != dims {
                return Err(IndexError::DimensionMismatch { expected: dims, got: v.dims() });
            }
            ids.push(id);
            data.extend_from_slice(v.as_slice());
        }
        Ok(Self { ids, dims, data })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn vector(&self, row: usize) -> &[f32] {
        &self.data[row * self.dims..(row + 1) * self.dims]
    }

    pub fn ids(&self) -> &[AtaId] {
        &self.ids
    }

    /// Exact top-`n` by cosine over every stored vector; ties by id ascending.
    pub fn search(&self, query: &Vector, n: usize) -> Result<CandidateList, IndexError> {
        if self.is_empty() {
            return Ok(CandidateList::empty(CandidateSource::Dense));
        }
        if query.dims() != self.dims {
            return Err(IndexError::DimensionMismatch { expected: self.dims, got: query.dims() });
        }
        let n = n.min(self.len());
        if n == 0 {
            return Ok(CandidateList::empty(CandidateSource::Dense));
        }
        let mut scored: Vec<(usize, f64)> = (0..self.len()).map(|row| (row, query.dot(self.vector(row)))).collect();
        let order = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
        if n < scored.len() {
            scored.select_nth_unstable_by(n - 1, order);
            scored.truncate(n);
        }
        scored.sort_unstable_by(order);
        Ok(CandidateList::from_ordered(
            CandidateSource::Dense,
            scored.into_iter().map(|(row, s)| (self.ids[row], s)),
        ))
    }
}
