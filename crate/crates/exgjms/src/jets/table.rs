//! Graded-lexicographic multi-index tables backing dense jet storage.
//!
//! Positions enumerate every multi-index of degree <= order, degree-major.
//! The enumeration for order J is a strict prefix of the enumeration for any
//! J' > J, so truncating a jet is a prefix copy and mixed-order arithmetic
//! can read both operands through the lower-order table.

use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::Mutex;

pub const MAX_DIM: usize = 9;
pub const MAX_ORDER: usize = 12;

pub struct IndexTable {
    #[allow(dead_code)]
    pub dim: usize,
    #[allow(dead_code)]
    pub order: usize,
    /// Multi-index for each coefficient position.
    pub indices: Vec<Vec<u8>>,
    /// `degree_start[d]` = first position of degree d; `degree_start[order+1]` = len.
    pub degree_start: Vec<usize>,
    /// All ordered pairs `(a, b, target)` with `deg a + deg b <= order`.
    pub pairs: Vec<(u32, u32, u32)>,
    /// `shift_up[axis][pos]` = position of `indices[pos] + e_axis` (u32::MAX if degree would exceed order).
    pub shift_up: Vec<Vec<u32>>,
    position: HashMap<Vec<u8>, u32>,
}

impl IndexTable {
    fn build(dim: usize, order: usize) -> IndexTable {
        assert!(
            (1..=MAX_DIM).contains(&dim) && order <= MAX_ORDER,
            "jet shape out of supported range: dim {dim}, order {order}"
        );
        let mut indices: Vec<Vec<u8>> = Vec::new();
        let mut degree_start = vec![0usize];
        for d in 0..=order {
            emit_degree(dim, d, &mut Vec::new(), &mut indices);
            degree_start.push(indices.len());
        }
        let position: HashMap<Vec<u8>, u32> = indices
            .iter()
            .enumerate()
            .map(|(p, idx)| (idx.clone(), p as u32))
            .collect();

        let mut pairs = Vec::new();
        for (i, idx_i) in indices.iter().enumerate() {
            let di: usize = idx_i.iter().map(|&e| e as usize).sum();
            // positions with degree <= order - di form the prefix below
            let j_end = degree_start[order - di + 1];
            for (j, idx_j) in indices[..j_end].iter().enumerate() {
                let sum: Vec<u8> = idx_i.iter().zip(idx_j).map(|(a, b)| a + b).collect();
                pairs.push((i as u32, j as u32, position[&sum]));
            }
        }

        let mut shift_up = vec![vec![u32::MAX; indices.len()]; dim];
        for (p, idx) in indices.iter().enumerate() {
            let deg: usize = idx.iter().map(|&e| e as usize).sum();
            if deg == order {
                continue;
            }
            for (axis, row) in shift_up.iter_mut().enumerate() {
                let mut up = idx.clone();
                up[axis] += 1;
                row[p] = position[&up];
            }
        }

        IndexTable {
            dim,
            order,
            indices,
            degree_start,
            pairs,
            shift_up,
            position,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// Number of coefficients of degree <= `ord`.
    pub fn len_at(&self, ord: usize) -> usize {
        self.degree_start[ord + 1]
    }

    pub fn position(&self, idx: &[u8]) -> Option<usize> {
        self.position.get(idx).map(|&p| p as usize)
    }
}

/// Degree-d multi-indices in lexicographic order (first entry descending).
fn emit_degree(dim: usize, d: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() == dim - 1 {
        prefix.push(d as u8);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for e in (0..=d).rev() {
        prefix.push(e as u8);
        emit_degree(dim, d - e, prefix, out);
        prefix.pop();
    }
}

static TABLES: Lazy<Mutex<HashMap<(usize, usize), &'static IndexTable>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Fetch (building and caching on first use) the table for `(dim, order)`.
pub fn table(dim: usize, order: usize) -> &'static IndexTable {
    let mut map = TABLES.lock().expect("table cache poisoned");
    map.entry((dim, order))
        .or_insert_with(|| Box::leak(Box::new(IndexTable::build(dim, order))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_property() {
        let small = table(3, 2);
        let big = table(3, 5);
        for (a, b) in small.indices.iter().zip(&big.indices) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn counts() {
        // C(dim + order, order) coefficients
        assert_eq!(table(1, 4).len(), 5);
        assert_eq!(table(2, 3).len(), 10);
        assert_eq!(table(6, 6).len(), 924);
    }

    #[test]
    fn pair_targets_are_sums() {
        let t = table(2, 3);
        for &(i, j, k) in &t.pairs {
            let sum: Vec<u8> = t.indices[i as usize]
                .iter()
                .zip(&t.indices[j as usize])
                .map(|(a, b)| a + b)
                .collect();
            assert_eq!(t.indices[k as usize], sum);
        }
    }
}
