//! Product-form representation of the basis inverse.
//!
//! `B^-1 = E_k^-1 ... E_1^-1` where each `E_i` is the identity with one column
//! replaced. Reinversion rebuilds the eta file from scratch; simplex updates
//! append one eta per basis change.

#[derive(Debug, Clone, Default)]
pub(crate) struct EtaFile {
    pivots: Vec<usize>,
    pivot_vals: Vec<f64>,
    starts: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
    /// Etas produced by the last reinversion; later ones are updates.
    base: usize,
}

impl EtaFile {
    pub fn new() -> Self {
        Self { starts: vec![0], ..Self::default() }
    }

    pub fn clear(&mut self) {
        self.pivots.clear();
        self.pivot_vals.clear();
        self.starts.clear();
        self.starts.push(0);
        self.idx.clear();
        self.val.clear();
        self.base = 0;
    }

    pub fn updates(&self) -> usize {
        self.pivots.len() - self.base
    }

    pub fn mark_base(&mut self) {
        self.base = self.pivots.len();
    }

    /// Appends the eta for a column given densely; entries below `drop` are
    /// discarded. `dense[pivot]` is the pivot element.
    pub fn push_dense(&mut self, pivot: usize, dense: &[f64], drop: f64) {
        self.pivots.push(pivot);
        self.pivot_vals.push(dense[pivot]);
        for (i, &v) in dense.iter().enumerate() {
            if i != pivot && v.abs() > drop {
                self.idx.push(i);
                self.val.push(v);
            }
        }
        self.starts.push(self.idx.len());
    }

    pub fn push_sparse(&mut self, pivot: usize, entries: impl IntoIterator<Item = (usize, f64)>) {
        let mut pivot_val = 0.0;
        for (i, v) in entries {
            if i == pivot {
                pivot_val += v;
            } else if v != 0.0 {
                self.idx.push(i);
                self.val.push(v);
            }
        }
        self.pivots.push(pivot);
        self.pivot_vals.push(pivot_val);
        self.starts.push(self.idx.len());
    }

    /// Solves `B x = b` in place.
    pub fn ftran(&self, x: &mut [f64]) {
        for e in 0..self.pivots.len() {
            let p = self.pivots[e];
            let xp = x[p];
            if xp == 0.0 {
                continue;
            }
            let xp = xp / self.pivot_vals[e];
            x[p] = xp;
            for k in self.starts[e]..self.starts[e + 1] {
                x[self.idx[k]] -= self.val[k] * xp;
            }
        }
    }

    /// Solves `y^T B = c^T` in place.
    pub fn btran(&self, y: &mut [f64]) {
        for e in (0..self.pivots.len()).rev() {
            let p = self.pivots[e];
            let mut s = y[p];
            for k in self.starts[e]..self.starts[e + 1] {
                s -= self.val[k] * y[self.idx[k]];
            }
            y[p] = s / self.pivot_vals[e];
        }
    }
}
