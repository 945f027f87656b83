//! Row/column adjacency for sparse binary matrices and their Tanner graphs.

use std::collections::VecDeque;

/// A 0/1 matrix stored as sorted row and column index lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBinary {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<u32>>,
    cols: Vec<Vec<u32>>,
}

impl SparseBinary {
    /// Builds from per-row column lists. Duplicate entries cancel (F_2 addition).
    pub fn from_rows(ncols: usize, mut rows: Vec<Vec<u32>>) -> Self {
        let mut cols = vec![Vec::new(); ncols];
        for row in rows.iter_mut() {
            row.sort_unstable();
            let mut dedup: Vec<u32> = Vec::with_capacity(row.len());
            for &c in row.iter() {
                if dedup.last() == Some(&c) {
                    dedup.pop();
                } else {
                    dedup.push(c);
                }
            }
            *row = dedup;
        }
        for (r, row) in rows.iter().enumerate() {
            for &c in row {
                assert!((c as usize) < ncols, "column {c} out of range");
                cols[c as usize].push(r as u32);
            }
        }
        Self { nrows: rows.len(), ncols, rows, cols }
    }

    pub fn from_dense(dense: &[Vec<u8>]) -> Self {
        let ncols = dense.first().map_or(0, Vec::len);
        let rows = dense
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &b)| b & 1 == 1).map(|(c, _)| c as u32).collect())
            .collect();
        Self::from_rows(ncols, rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.rows[r]
    }

    pub fn col(&self, c: usize) -> &[u32] {
        &self.cols[c]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].binary_search(&(c as u32)).is_ok()
    }

    pub fn row_weights(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().map(Vec::len)
    }

    pub fn col_weights(&self) -> impl Iterator<Item = usize> + '_ {
        self.cols.iter().map(Vec::len)
    }

    /// True iff `self · other^T = 0` over F_2.
    pub fn orthogonal_to(&self, other: &SparseBinary) -> bool {
        assert_eq!(self.ncols, other.ncols);
        let mut parity = vec![false; other.nrows];
        let mut touched = Vec::new();
        for row in &self.rows {
            for &c in row {
                for &r2 in &other.cols[c as usize] {
                    let slot = &mut parity[r2 as usize];
                    if !*slot {
                        touched.push(r2);
                    }
                    *slot = !*slot;
                }
            }
            let bad = touched.iter().any(|&r2| parity[r2 as usize]);
            for r2 in touched.drain(..) {
                parity[r2 as usize] = false;
            }
            if bad {
                return false;
            }
        }
        true
    }

    /// Length of the shortest Tanner-graph cycle, or `None` if the graph is a forest.
    pub fn girth(&self) -> Option<usize> {
        self.shortest_cycle_below(usize::MAX)
    }

    /// True iff the girth is at least `target` (a forest passes).
    pub fn girth_at_least(&self, target: usize) -> bool {
        self.shortest_cycle_below(target).is_none()
    }

    /// Shortest cycle strictly shorter than `bound`, if any. Every cycle passes
    /// through a check node, so a BFS from each row suffices.
    fn shortest_cycle_below(&self, bound: usize) -> Option<usize> {
        let nodes = self.ncols + self.nrows;
        let mut dist = vec![u32::MAX; nodes];
        let mut parent = vec![u32::MAX; nodes];
        let mut touched = Vec::new();
        let mut queue = VecDeque::new();
        let mut best = bound;
        // node ids: columns first, then rows
        for src in 0..self.nrows {
            let s = self.ncols + src;
            dist[s] = 0;
            touched.push(s);
            queue.push_back(s);
            'bfs: while let Some(u) = queue.pop_front() {
                let du = dist[u] as usize;
                if 2 * du + 2 >= best {
                    break;
                }
                let (adj, offset) = if u < self.ncols {
                    (&self.cols[u][..], self.ncols)
                } else {
                    (&self.rows[u - self.ncols][..], 0)
                };
                for w in adj.iter().map(|&x| x as usize + offset) {
                    if w as u32 == parent[u] {
                        continue;
                    }
                    if dist[w] == u32::MAX {
                        dist[w] = du as u32 + 1;
                        parent[w] = u as u32;
                        touched.push(w);
                        queue.push_back(w);
                    } else {
                        let len = du + dist[w] as usize + 1;
                        if len < best {
                            best = len;
                        }
                        if 2 * du + 2 >= best {
                            break 'bfs;
                        }
                    }
                }
            }
            queue.clear();
            for n in touched.drain(..) {
                dist[n] = u32::MAX;
                parent[n] = u32::MAX;
            }
        }
        (best < bound).then_some(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_2x2_has_girth_four() {
        let m = SparseBinary::from_dense(&[vec![1, 1], vec![1, 1]]);
        assert_eq!(m.girth(), Some(4));
        assert!(m.girth_at_least(4));
        assert!(!m.girth_at_least(6));
    }

    #[test]
    fn path_is_acyclic() {
        let m = SparseBinary::from_dense(&[vec![1, 1, 0], vec![0, 1, 1]]);
        assert_eq!(m.girth(), None);
    }

    #[test]
    fn hexagon() {
        // 3 checks, 3 variables, one 6-cycle
        let m = SparseBinary::from_dense(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]);
        assert_eq!(m.girth(), Some(6));
        assert!(m.girth_at_least(6));
        assert!(!m.girth_at_least(8));
    }

    #[test]
    fn orthogonality() {
        let a = SparseBinary::from_dense(&[vec![1, 1, 1, 1]]);
        let b = SparseBinary::from_dense(&[vec![1, 1, 0, 0], vec![0, 1, 1, 0]]);
        assert!(a.orthogonal_to(&b));
        let c = SparseBinary::from_dense(&[vec![1, 0, 0, 0]]);
        assert!(!a.orthogonal_to(&c));
    }

    #[test]
    fn duplicate_entries_cancel() {
        let m = SparseBinary::from_rows(3, vec![vec![0, 2, 0]]);
        assert_eq!(m.row(0), &[2]);
    }
}
