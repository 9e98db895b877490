//! Streamed matrix store: one binary sampling tree per row plus the running
//! maximum squared row norm `M`, and a weighted variant for least squares.
//!
//! Tree nodes are heap-indexed (root `1`, children `2k` and `2k + 1`), with
//! the column count padded to a power of two so every leaf sits at the same
//! depth. Only nodes on paths to inserted entries are materialized.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matvec::DenseMatrix;

/// A streamed matrix entry with 1-based indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordEntry {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

impl CoordEntry {
    pub fn new(i: usize, j: usize, value: f64) -> Self {
        Self { i, j, value }
    }
}

/// Entries of a dense matrix in row-major order, skipping zeros.
pub fn entries_of(a: &DenseMatrix) -> Vec<CoordEntry> {
    a.nonzeros()
        .into_iter()
        .map(|(i, j, v)| CoordEntry::new(i + 1, j + 1, v))
        .collect()
}

/// Binary tree over the columns of one row. Leaves hold `a²` and the sign of
/// `a`; internal nodes hold the sum of their two children.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleTree {
    nodes: BTreeMap<usize, f64>,
    negative: BTreeMap<usize, bool>,
}

impl SampleTree {
    fn node(&self, k: usize) -> f64 {
        self.nodes.get(&k).copied().unwrap_or(0.0)
    }

    /// Squared norm of the row, held at the root.
    pub fn root(&self) -> f64 {
        self.node(1)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Writes leaf `leaf` and recomputes every ancestor. Returns the number of
    /// nodes written.
    fn set_leaf(&mut self, leaf: usize, value: f64) -> usize {
        self.nodes.insert(leaf, value * value);
        if value < 0.0 {
            self.negative.insert(leaf, true);
        } else {
            self.negative.remove(&leaf);
        }
        let mut touched = 1;
        let mut k = leaf / 2;
        while k >= 1 {
            let sum = self.node(2 * k) + self.node(2 * k + 1);
            self.nodes.insert(k, sum);
            touched += 1;
            k /= 2;
        }
        touched
    }

    fn leaf_value(&self, leaf: usize) -> f64 {
        let magnitude = self.node(leaf).sqrt();
        if self.negative.contains_key(&leaf) {
            -magnitude
        } else {
            magnitude
        }
    }

    /// Checks that every materialized internal node equals the sum of its children.
    pub fn is_consistent(&self, first_leaf: usize, tol: f64) -> bool {
        self.nodes
            .iter()
            .filter(|(k, _)| **k < first_leaf)
            .all(|(k, v)| (v - self.node(2 * k) - self.node(2 * k + 1)).abs() <= tol)
    }

    /// Fills `out[j]` with `scale · sign · √(leaf)` by walking down from the
    /// root: each child receives its parent's amplitude times
    /// `√(child / parent)`, the conditional rotation of the tree.
    fn descend(&self, first_leaf: usize, root_amplitude: f64, out: &mut [f64]) {
        let mut stack = vec![(1usize, root_amplitude)];
        while let Some((k, amp)) = stack.pop() {
            if k >= first_leaf {
                let j = k - first_leaf;
                if j < out.len() {
                    let sign = if self.negative.contains_key(&k) { -1.0 } else { 1.0 };
                    out[j] = sign * amp;
                }
                continue;
            }
            let total = self.node(k);
            if total == 0.0 {
                continue;
            }
            for child in [2 * k, 2 * k + 1] {
                let weight = self.node(child);
                if weight > 0.0 {
                    stack.push((child, amp * (weight / total).sqrt()));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StoreCounters {
    pub inserts: u64,
    pub total_touches: u64,
    pub last_touches: usize,
    pub max_touches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixStore {
    rows: usize,
    cols: usize,
    depth: u32,
    trees: Vec<SampleTree>,
    max_norm_sq: f64,
    counters: StoreCounters,
}

const STORE_FORMAT: &str = "qwalk-store";
const STORE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct StoreFile<T> {
    format: String,
    version: u32,
    store: T,
}

fn tree_depth(cols: usize) -> u32 {
    cols.next_power_of_two().trailing_zeros()
}

impl MatrixStore {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("store dimensions must be positive".into()));
        }
        Ok(Self {
            rows,
            cols,
            depth: tree_depth(cols),
            trees: vec![SampleTree::default(); rows],
            max_norm_sq: 0.0,
            counters: StoreCounters::default(),
        })
    }

    /// Equivalent to inserting `entries` one after another into an empty store.
    pub fn from_stream(entries: &[CoordEntry], rows: usize, cols: usize) -> Result<Self> {
        let mut store = Self::new(rows, cols)?;
        for e in entries {
            store.insert(*e)?;
        }
        Ok(store)
    }

    pub fn from_matrix(a: &DenseMatrix) -> Result<Self> {
        Self::from_stream(&entries_of(a), a.rows(), a.cols())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// The running maximum `M` of squared row norms.
    pub fn max_norm_sq(&self) -> f64 {
        self.max_norm_sq
    }

    pub fn counters(&self) -> &StoreCounters {
        &self.counters
    }

    pub fn tree(&self, i: usize) -> &SampleTree {
        &self.trees[i]
    }

    /// Per-insert touch budget: the root-to-leaf path plus the `M` cell.
    pub fn touch_budget(&self) -> usize {
        self.depth as usize + 2
    }

    pub fn node_count(&self) -> usize {
        self.trees.iter().map(SampleTree::node_count).sum()
    }

    fn first_leaf(&self) -> usize {
        1usize << self.depth
    }

    fn check_index(&self, i: usize, j: usize) -> Result<()> {
        if i == 0 || i > self.rows || j == 0 || j > self.cols {
            return Err(Error::IndexOutOfRange(format!(
                "entry ({i}, {j}) outside a {}x{} store",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    pub fn insert(&mut self, e: CoordEntry) -> Result<()> {
        self.check_index(e.i, e.j)?;
        if !e.value.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite value at ({}, {})", e.i, e.j)));
        }
        let leaf = self.first_leaf() + e.j - 1;
        let tree = &mut self.trees[e.i - 1];
        let mut touched = tree.set_leaf(leaf, e.value);
        let row = tree.root();
        touched += 1;
        if row > self.max_norm_sq {
            self.max_norm_sq = row;
        }
        self.counters.inserts += 1;
        self.counters.total_touches += touched as u64;
        self.counters.last_touches = touched;
        self.counters.max_touches = self.counters.max_touches.max(touched);
        Ok(())
    }

    /// Squared norm of row `i` (1-based).
    pub fn row_norm_sq(&self, i: usize) -> Result<f64> {
        self.check_index(i, 1)?;
        Ok(self.trees[i - 1].root())
    }

    pub fn entry(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i, j)?;
        Ok(self.trees[i - 1].leaf_value(self.first_leaf() + j - 1))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = nalgebra::DMatrix::zeros(self.rows, self.cols);
        let first = self.first_leaf();
        for (i, tree) in self.trees.iter().enumerate() {
            for (&k, _) in tree.nodes.range(first..) {
                m[(i, k - first)] = tree.leaf_value(k);
            }
        }
        DenseMatrix::new(m).expect("finite store")
    }

    pub fn is_consistent(&self, tol: f64) -> bool {
        let first = self.first_leaf();
        self.trees.iter().all(|t| t.is_consistent(first, tol))
    }

    /// Unit vector of length `n + 1`: entry `j` is `aᵢⱼ/√M` and entry `n`
    /// carries the remainder `√((M − ‖aᵢ‖²)/M)`. `i` is 1-based.
    pub fn prepare_row_state(&self, i: usize) -> Result<Vec<f64>> {
        self.scaled_row_state(i, 1.0, self.max_norm_sq)
    }

    /// Row state normalized by the row's own norm, `aᵢ/‖aᵢ‖`; an all-zero row
    /// maps to the extra basis vector `eₙ`.
    pub fn prepare_unit_row_state(&self, i: usize) -> Result<Vec<f64>> {
        let norm_sq = self.row_norm_sq(i)?;
        if norm_sq == 0.0 {
            let mut out = vec![0.0; self.cols + 1];
            out[self.cols] = 1.0;
            return Ok(out);
        }
        self.scaled_row_state(i, 1.0, norm_sq)
    }

    /// Row state for the row `√w·aᵢ` against the normalization `bound`, which
    /// must dominate `w‖aᵢ‖²`.
    fn scaled_row_state(&self, i: usize, weight: f64, bound: f64) -> Result<Vec<f64>> {
        self.check_index(i, 1)?;
        if bound <= 0.0 {
            return Err(Error::EmptyStore);
        }
        let tree = &self.trees[i - 1];
        let row = weight * tree.root();
        let mut out = vec![0.0; self.cols + 1];
        tree.descend(self.first_leaf(), (row / bound).sqrt(), &mut out[..self.cols]);
        out[self.cols] = ((bound - row).max(0.0) / bound).sqrt();
        Ok(out)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        write_json(path, STORE_FORMAT, self)
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        read_json(path, STORE_FORMAT)
    }

    pub fn to_json(&self) -> Result<String> {
        to_versioned_json(STORE_FORMAT, self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_versioned_json(text, STORE_FORMAT)
    }
}

fn to_versioned_json<T: Serialize>(format: &str, store: &T) -> Result<String> {
    Ok(serde_json::to_string(&StoreFile {
        format: format.to_string(),
        version: STORE_VERSION,
        store,
    })?)
}

fn from_versioned_json<T: for<'de> Deserialize<'de>>(text: &str, format: &str) -> Result<T> {
    let file: StoreFile<T> = serde_json::from_str(text)?;
    if file.format != format {
        return Err(Error::InvalidArgument(format!(
            "expected a `{format}` file, found `{}`",
            file.format
        )));
    }
    if file.version != STORE_VERSION {
        return Err(Error::InvalidArgument(format!("unsupported store version {}", file.version)));
    }
    Ok(file.store)
}

fn write_json<T: Serialize>(path: &Path, format: &str, store: &T) -> Result<()> {
    crate::io::write_atomic(path, to_versioned_json(format, store)?.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, format: &str) -> Result<T> {
    from_versioned_json(&std::fs::read_to_string(path)?, format)
}

/// Store over the rows `xᵢ` together with per-row weights `wᵢ`, maintaining
/// `M_w = maxᵢ wᵢ‖xᵢ‖²` as entries and weights arrive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedStore {
    inner: MatrixStore,
    weights: Vec<Option<f64>>,
    max_weighted_sq: f64,
}

const WEIGHTED_FORMAT: &str = "qwalk-weighted-store";

impl WeightedStore {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        Ok(Self {
            inner: MatrixStore::new(rows, cols)?,
            weights: vec![None; rows],
            max_weighted_sq: 0.0,
        })
    }

    pub fn from_parts(x: &DenseMatrix, w: &[f64]) -> Result<Self> {
        if w.len() != x.rows() {
            return Err(Error::Dimension(format!("{} weights for {} rows", w.len(), x.rows())));
        }
        let mut store = Self::new(x.rows(), x.cols())?;
        for e in entries_of(x) {
            store.insert(e)?;
        }
        for (i, &wi) in w.iter().enumerate() {
            store.set_weight(i + 1, wi)?;
        }
        Ok(store)
    }

    pub fn inner(&self) -> &MatrixStore {
        &self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.rows
    }

    pub fn cols(&self) -> usize {
        self.inner.cols
    }

    /// `M_w`.
    pub fn max_weighted_sq(&self) -> f64 {
        self.max_weighted_sq
    }

    pub fn weight(&self, i: usize) -> Option<f64> {
        self.weights.get(i.wrapping_sub(1)).copied().flatten()
    }

    fn refresh(&mut self, i: usize) {
        if let Some(w) = self.weights[i - 1] {
            let value = w * self.inner.trees[i - 1].root();
            if value > self.max_weighted_sq {
                self.max_weighted_sq = value;
            }
        }
    }

    pub fn insert(&mut self, e: CoordEntry) -> Result<()> {
        self.inner.insert(e)?;
        self.refresh(e.i);
        Ok(())
    }

    pub fn set_weight(&mut self, i: usize, w: f64) -> Result<()> {
        self.inner.check_index(i, 1)?;
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidArgument(format!("weight {w} of row {i} must be positive")));
        }
        self.weights[i - 1] = Some(w);
        self.refresh(i);
        Ok(())
    }

    /// `√W·X` as a dense matrix; rows without a weight are an error.
    pub fn to_weighted_dense(&self) -> Result<DenseMatrix> {
        let x = self.inner.to_dense().into_inner();
        let mut b = x.clone();
        for i in 0..self.rows() {
            let w = self.weights[i]
                .ok_or_else(|| Error::Precondition(format!("row {} has no weight", i + 1)))?;
            b.row_mut(i).scale_mut(w.sqrt());
        }
        DenseMatrix::new(b)
    }

    /// Unit vector with entries `√wᵢ·xᵢⱼ/√M_w` and the remainder
    /// `√((M_w − wᵢ‖xᵢ‖²)/M_w)` at index `n`.
    pub fn prepare_weighted_row_state(&self, i: usize) -> Result<Vec<f64>> {
        self.inner.check_index(i, 1)?;
        let w = self.weights[i - 1]
            .ok_or_else(|| Error::Precondition(format!("row {i} has no weight")))?;
        self.inner.scaled_row_state(i, w, self.max_weighted_sq)
    }

    pub fn to_json(&self) -> Result<String> {
        to_versioned_json(WEIGHTED_FORMAT, self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_versioned_json(text, WEIGHTED_FORMAT)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        write_json(path, WEIGHTED_FORMAT, self)
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        read_json(path, WEIGHTED_FORMAT)
    }
}
