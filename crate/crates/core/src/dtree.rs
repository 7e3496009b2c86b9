//! Multi-output regression trees and hyperparameter cross-validation.
//!
//! Trees are grown greedily: every node takes the exact split that maximizes
//! the reduction of within-child squared error summed over output columns.
//! Candidate thresholds are midpoints between consecutive distinct feature
//! values; ties go to the lowest feature index, then the lowest threshold.
//! The only stopping rule besides purity is `min_samples_split`: a node with
//! fewer samples becomes a leaf.
//!
//! Because the split chosen at a node depends only on the samples in it, the
//! tree grown with `min_samples_split = m` is the fully grown tree truncated
//! at the first node with fewer than `m` samples. Cross-validation exploits
//! this: one growth per fold scores the whole grid.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deadline::Deadline;
use crate::error::{Error, Result};
use crate::kernels;
use crate::matrix::SampleMatrix;
use crate::seed::SeedStream;

/// Number of cross-validation folds.
pub const CV_FOLDS: usize = 3;

/// Relative gain difference below which two candidate splits tie. The same
/// partition reached through different feature orders sums in a different
/// order and can differ in the last bits.
const GAIN_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TreeParams {
    pub min_samples_split: usize,
}

impl TreeParams {
    pub fn new(min_samples_split: usize) -> Result<Self> {
        if min_samples_split < 2 {
            return Err(Error::Config(format!("min_samples_split must be at least 2, got {min_samples_split}")));
        }
        Ok(Self { min_samples_split })
    }
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { min_samples_split: 2 }
    }
}

/// `{2, 8, 64, 512, 1% of n, 10% of n}`, each clipped to `[2, n]`, sorted and deduplicated.
pub fn default_grid(n: usize) -> Vec<TreeParams> {
    let pct = |p: f64| (p * n as f64).floor() as usize;
    let mut grid: Vec<usize> = [2, 8, 64, 512, pct(0.01), pct(0.1)].into_iter().map(|m| m.min(n).max(2)).collect();
    grid.sort_unstable();
    grid.dedup();
    grid.into_iter().map(|m| TreeParams { min_samples_split: m }).collect()
}

/// Several matrices with equal row counts viewed as one feature table,
/// columns of the first block first.
#[derive(Debug, Clone)]
pub(crate) struct FeatureView<'a> {
    blocks: Vec<&'a SampleMatrix>,
    columns: Vec<(usize, usize)>,
    n_rows: usize,
}

impl<'a> FeatureView<'a> {
    pub(crate) fn new(blocks: Vec<&'a SampleMatrix>) -> Result<Self> {
        let n_rows = blocks.first().map_or(0, |b| b.n_rows());
        if blocks.iter().any(|b| b.n_rows() != n_rows) {
            return Err(Error::Dimension("feature blocks differ in row count".into()));
        }
        let columns = blocks.iter().enumerate().flat_map(|(b, m)| (0..m.n_cols()).map(move |c| (b, c))).collect();
        Ok(Self { blocks, columns, n_rows })
    }

    pub(crate) fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub(crate) fn n_cols(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub(crate) fn get(&self, row: usize, feature: usize) -> f64 {
        let (b, c) = self.columns[feature];
        self.blocks[b].get(row, c)
    }

    fn is_constant(&self) -> bool {
        (0..self.n_cols()).all(|f| {
            let first = self.get(0, f);
            (1..self.n_rows).all(|r| self.get(r, f) == first)
        })
    }
}

/// Per-feature argsort of every row of a [`FeatureView`], computed once and
/// filtered down to each training subset.
#[derive(Debug, Clone)]
pub(crate) struct ColumnOrder {
    n_rows: usize,
    order: Vec<Arc<[u32]>>,
}

impl ColumnOrder {
    pub(crate) fn new(view: &FeatureView<'_>) -> Self {
        let n = view.n_rows();
        let order = (0..view.n_cols())
            .into_par_iter()
            .map(|f| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_unstable_by(|&a, &b| {
                    view.get(a as usize, f).total_cmp(&view.get(b as usize, f)).then(a.cmp(&b))
                });
                Arc::from(idx)
            })
            .collect();
        Self { n_rows: n, order }
    }

    /// Order for the side-by-side view `[a | b]`.
    pub(crate) fn concat(a: &ColumnOrder, b: &ColumnOrder) -> Self {
        debug_assert_eq!(a.n_rows, b.n_rows);
        Self { n_rows: a.n_rows, order: a.order.iter().chain(&b.order).cloned().collect() }
    }

    /// Order of a row-permuted copy of the viewed data, where row `i` of the
    /// copy is row `perm[i]` of the original and `inverse` undoes `perm`.
    pub(crate) fn permuted(&self, inverse: &[usize]) -> Self {
        let order = self
            .order
            .par_iter()
            .map(|o| o.iter().map(|&r| inverse[r as usize] as u32).collect::<Vec<_>>().into())
            .collect();
        Self { n_rows: self.n_rows, order }
    }
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    n_left: usize,
}

/// Working state for growing one tree on a subset of rows.
struct Grower<'a> {
    y: &'a SampleMatrix,
    rows: &'a [usize],
    n: usize,
    n_feat: usize,
    n_out: usize,
    members: Vec<u32>,
    order: Vec<u32>,
    vals: Vec<f64>,
    yc: Vec<f64>,
    goes_left: Vec<bool>,
    scratch_o: Vec<u32>,
    scratch_v: Vec<f64>,
    acc: Vec<f64>,
    norms: Vec<f64>,
    /// Position of each member within the current node (Gram path).
    pos: Vec<u32>,
    pos_order: Vec<u32>,
    node_rows: Vec<f64>,
    gram: Vec<f64>,
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let t = 0.5 * lo + 0.5 * hi;
    if t >= lo && t < hi {
        t
    } else {
        lo
    }
}

impl<'a> Grower<'a> {
    fn new(view: &'a FeatureView<'a>, order: &ColumnOrder, y: &'a SampleMatrix, rows: &'a [usize]) -> Self {
        let n = rows.len();
        let n_feat = view.n_cols();
        let n_out = y.n_cols();
        let mut local = vec![u32::MAX; order.n_rows];
        for (k, &r) in rows.iter().enumerate() {
            local[r] = k as u32;
        }
        let mut ord = Vec::with_capacity(n * n_feat);
        let mut vals = Vec::with_capacity(n * n_feat);
        for (f, global) in order.order.iter().enumerate() {
            for &g in global.iter() {
                let l = local[g as usize];
                if l != u32::MAX {
                    ord.push(l);
                    vals.push(view.get(g as usize, f));
                }
            }
        }
        Self {
            y,
            rows,
            n,
            n_feat,
            n_out,
            members: (0..n as u32).collect(),
            order: ord,
            vals,
            yc: vec![0.0; n * n_out],
            goes_left: vec![false; n],
            scratch_o: Vec::with_capacity(n),
            scratch_v: Vec::with_capacity(n),
            acc: vec![0.0; n_out],
            norms: Vec::with_capacity(n),
            pos: vec![0; n],
            pos_order: Vec::new(),
            node_rows: Vec::new(),
            gram: Vec::new(),
        }
    }

    /// Mean target of the node and whether all its targets are identical.
    fn node_stats(&self, lo: usize, hi: usize) -> (Vec<f64>, bool) {
        let mut mean = vec![0.0; self.n_out];
        for &m in &self.members[lo..hi] {
            for (s, v) in mean.iter_mut().zip(self.y.row(self.rows[m as usize])) {
                *s += v;
            }
        }
        let count = (hi - lo) as f64;
        mean.iter_mut().for_each(|s| *s /= count);
        let first = self.y.row(self.rows[self.members[lo] as usize]);
        let constant = self.members[lo + 1..hi].iter().all(|&m| self.y.row(self.rows[m as usize]) == first);
        (mean, constant)
    }

    /// Whether the Gram-matrix scan is cheaper than the dense one for a node:
    /// `c²·(n_out + n_feat) / 2` against `n_feat·c·n_out` operations.
    fn use_gram(&self, count: usize) -> bool {
        self.n_out > 1 && count * (self.n_out + self.n_feat) < 2 * self.n_feat * self.n_out
    }

    fn best_split(&mut self, lo: usize, hi: usize, mean: &[f64]) -> Option<Split> {
        let n_out = self.n_out;
        for &m in &self.members[lo..hi] {
            let m = m as usize;
            let src = self.y.row(self.rows[m]);
            for ((dst, v), mu) in self.yc[m * n_out..(m + 1) * n_out].iter_mut().zip(src).zip(mean) {
                *dst = v - mu;
            }
        }
        let count = hi - lo;
        let countf = count as f64;
        let gram = self.use_gram(count);
        if gram {
            self.node_rows.clear();
            for (i, &m) in self.members[lo..hi].iter().enumerate() {
                let m = m as usize;
                self.pos[m] = i as u32;
                self.node_rows.extend_from_slice(&self.yc[m * n_out..(m + 1) * n_out]);
            }
            self.gram.resize(count * count, 0.0);
            kernels::gram(&self.node_rows, n_out, &mut self.gram);
        }
        self.norms.resize(count - 1, 0.0);
        let mut best: Option<(f64, Split)> = None;
        for f in 0..self.n_feat {
            let base = f * self.n;
            let ord = &self.order[base + lo..base + hi];
            let vals = &self.vals[base + lo..base + hi];
            if vals[0] == vals[count - 1] {
                continue;
            }
            if n_out == 1 {
                let mut s = 0.0;
                for (norm, &r) in self.norms.iter_mut().zip(ord) {
                    s += self.yc[r as usize];
                    *norm = s * s;
                }
            } else if gram {
                self.pos_order.clear();
                self.pos_order.extend(ord.iter().map(|&m| self.pos[m as usize]));
                kernels::gram_prefix_norms(&self.gram, count, &self.pos_order, &mut self.norms);
            } else {
                kernels::prefix_norms(&mut self.acc, &self.yc, ord, &mut self.norms);
            }
            for k in 0..count - 1 {
                if vals[k] < vals[k + 1] {
                    let nl = (k + 1) as f64;
                    let gain = self.norms[k] * countf / (nl * (countf - nl));
                    if best.as_ref().is_none_or(|(g, _)| gain > *g * (1.0 + GAIN_TIE_TOL)) {
                        best = Some((
                            gain,
                            Split { feature: f, threshold: midpoint(vals[k], vals[k + 1]), n_left: k + 1 },
                        ));
                    }
                }
            }
        }
        best.map(|(_, s)| s)
    }

    /// Reorders every per-feature range so the left child occupies
    /// `lo..lo + n_left`, preserving sorted order within each child.
    fn partition(&mut self, lo: usize, hi: usize, split: &Split) {
        let base = split.feature * self.n;
        for &m in &self.order[base + lo..base + lo + split.n_left] {
            self.goes_left[m as usize] = true;
        }
        for &m in &self.order[base + lo + split.n_left..base + hi] {
            self.goes_left[m as usize] = false;
        }
        for f in 0..self.n_feat {
            let base = f * self.n;
            stable_partition(
                &mut self.order[base + lo..base + hi],
                Some(&mut self.vals[base + lo..base + hi]),
                &self.goes_left,
                &mut self.scratch_o,
                &mut self.scratch_v,
            );
        }
        stable_partition(&mut self.members[lo..hi], None, &self.goes_left, &mut self.scratch_o, &mut self.scratch_v);
    }
}

fn stable_partition(
    ord: &mut [u32],
    mut vals: Option<&mut [f64]>,
    goes_left: &[bool],
    scratch_o: &mut Vec<u32>,
    scratch_v: &mut Vec<f64>,
) {
    scratch_o.clear();
    scratch_v.clear();
    let mut w = 0;
    for k in 0..ord.len() {
        let m = ord[k];
        if goes_left[m as usize] {
            ord[w] = m;
            if let Some(v) = vals.as_deref_mut() {
                v[w] = v[k];
            }
            w += 1;
        } else {
            scratch_o.push(m);
            if let Some(v) = vals.as_deref() {
                scratch_v.push(v[k]);
            }
        }
    }
    ord[w..].copy_from_slice(scratch_o);
    if let Some(v) = vals {
        v[w..].copy_from_slice(scratch_v);
    }
}

/// Receives nodes in preorder while a tree grows.
trait GrowthSink {
    type State: Clone;
    fn leaf(&mut self, state: Self::State, mean: &[f64], count: usize);
    fn split(
        &mut self,
        state: Self::State,
        mean: &[f64],
        count: usize,
        feature: usize,
        threshold: f64,
    ) -> (Self::State, Self::State);
}

fn grow<S: GrowthSink>(g: &mut Grower<'_>, min_samples_split: usize, sink: &mut S, root: S::State) {
    let mut stack = vec![(0usize, g.n, root)];
    while let Some((lo, hi, state)) = stack.pop() {
        let count = hi - lo;
        let (mean, constant) = g.node_stats(lo, hi);
        let split =
            if count >= min_samples_split && !constant && g.n_feat > 0 { g.best_split(lo, hi, &mean) } else { None };
        match split {
            None => sink.leaf(state, &mean, count),
            Some(s) => {
                let (ls, rs) = sink.split(state, &mean, count, s.feature, s.threshold);
                g.partition(lo, hi, &s);
                let mid = lo + s.n_left;
                stack.push((mid, hi, rs));
                stack.push((lo, mid, ls));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf { value: usize, count: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize, count: usize },
}

/// A fitted piecewise-constant multi-output predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    values: Vec<f64>,
    n_in: usize,
    n_out: usize,
    params: TreeParams,
}

struct TreeSink {
    nodes: Vec<Node>,
    values: Vec<f64>,
}

impl TreeSink {
    fn attach(&mut self, parent: Option<(usize, bool)>) {
        let idx = self.nodes.len() - 1;
        if let Some((p, is_left)) = parent {
            if let Node::Split { left, right, .. } = &mut self.nodes[p] {
                *if is_left { left } else { right } = idx;
            }
        }
    }
}

impl GrowthSink for TreeSink {
    type State = Option<(usize, bool)>;

    fn leaf(&mut self, parent: Self::State, mean: &[f64], count: usize) {
        let value = self.values.len();
        self.values.extend_from_slice(mean);
        self.nodes.push(Node::Leaf { value, count });
        self.attach(parent);
    }

    fn split(
        &mut self,
        parent: Self::State,
        _mean: &[f64],
        count: usize,
        feature: usize,
        threshold: f64,
    ) -> (Self::State, Self::State) {
        self.nodes.push(Node::Split { feature, threshold, left: usize::MAX, right: usize::MAX, count });
        self.attach(parent);
        let idx = self.nodes.len() - 1;
        (Some((idx, true)), Some((idx, false)))
    }
}

/// Fits a tree on all rows of `(x, y)`.
pub fn fit_tree(x: &SampleMatrix, y: &SampleMatrix, params: TreeParams) -> Result<RegressionTree> {
    if x.n_rows() != y.n_rows() {
        return Err(Error::Dimension(format!("x has {} rows, y has {}", x.n_rows(), y.n_rows())));
    }
    if x.n_rows() == 0 {
        return Err(Error::Fit("no training rows".into()));
    }
    TreeParams::new(params.min_samples_split)?;
    let view = FeatureView::new(vec![x])?;
    let order = ColumnOrder::new(&view);
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    Ok(fit_on_rows(&view, &order, y, &rows, params))
}

fn fit_on_rows(
    view: &FeatureView<'_>,
    order: &ColumnOrder,
    y: &SampleMatrix,
    rows: &[usize],
    params: TreeParams,
) -> RegressionTree {
    let mut g = Grower::new(view, order, y, rows);
    let mut sink = TreeSink { nodes: Vec::new(), values: Vec::new() };
    grow(&mut g, params.min_samples_split, &mut sink, None);
    RegressionTree { nodes: sink.nodes, values: sink.values, n_in: view.n_cols(), n_out: y.n_cols(), params }
}

impl RegressionTree {
    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn params(&self) -> TreeParams {
        self.params
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// `(feature, threshold)` of every internal node in preorder.
    pub fn splits(&self) -> Vec<(usize, f64)> {
        self.nodes
            .iter()
            .filter_map(|n| match *n {
                Node::Split { feature, threshold, .. } => Some((feature, threshold)),
                Node::Leaf { .. } => None,
            })
            .collect()
    }

    /// Sample counts along every root-to-leaf path.
    pub fn path_counts(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, Vec::new())];
        while let Some((i, mut path)) = stack.pop() {
            match self.nodes[i] {
                Node::Leaf { count, .. } => {
                    path.push(count);
                    out.push(path);
                }
                Node::Split { left, right, count, .. } => {
                    path.push(count);
                    stack.push((right, path.clone()));
                    stack.push((left, path));
                }
            }
        }
        out
    }

    fn leaf_value(&self, row: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return &self.values[value..value + self.n_out],
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &SampleMatrix) -> Result<SampleMatrix> {
        if x.n_cols() != self.n_in {
            return Err(Error::Dimension(format!("tree expects {} input columns, got {}", self.n_in, x.n_cols())));
        }
        let mut data = Vec::with_capacity(x.n_rows() * self.n_out);
        for row in x.rows() {
            data.extend_from_slice(self.leaf_value(row));
        }
        Ok(SampleMatrix::from_parts_unchecked(x.n_rows(), self.n_out, data))
    }
}

pub fn predict(tree: &RegressionTree, x: &SampleMatrix) -> Result<SampleMatrix> {
    tree.predict(x)
}

/// Routes query rows alongside training rows and records, for every level of
/// a `min_samples_split` ladder, the prediction the truncated tree makes.
struct ScoringSink<'a> {
    view: &'a FeatureView<'a>,
    queries: Vec<usize>,
    levels: &'a [usize],
    n_out: usize,
    preds: Vec<Vec<f64>>,
    positions: Vec<usize>,
}

#[derive(Clone)]
struct QueryRange {
    lo: usize,
    hi: usize,
    parent_count: usize,
}

impl ScoringSink<'_> {
    fn assign(&mut self, q: &QueryRange, levels: std::ops::Range<usize>, mean: &[f64]) {
        let n_out = self.n_out;
        for level in levels {
            let out = &mut self.preds[level];
            for &pos in &self.positions[q.lo..q.hi] {
                out[pos * n_out..(pos + 1) * n_out].copy_from_slice(mean);
            }
        }
    }

    fn upper(&self, parent_count: usize) -> usize {
        self.levels.partition_point(|&m| m <= parent_count)
    }
}

impl GrowthSink for ScoringSink<'_> {
    type State = QueryRange;

    fn leaf(&mut self, q: QueryRange, mean: &[f64], _count: usize) {
        let hi = self.upper(q.parent_count);
        self.assign(&q, 0..hi, mean);
    }

    fn split(
        &mut self,
        q: QueryRange,
        mean: &[f64],
        count: usize,
        feature: usize,
        threshold: f64,
    ) -> (QueryRange, QueryRange) {
        let lo_level = self.levels.partition_point(|&m| m <= count);
        let hi_level = self.upper(q.parent_count);
        self.assign(&q, lo_level..hi_level, mean);

        let slice = &mut self.positions[q.lo..q.hi];
        let mut left: Vec<usize> = Vec::with_capacity(slice.len());
        let mut right: Vec<usize> = Vec::new();
        for &p in slice.iter() {
            if self.view.get(self.queries[p], feature) <= threshold {
                left.push(p);
            } else {
                right.push(p);
            }
        }
        let mid = q.lo + left.len();
        slice[..left.len()].copy_from_slice(&left);
        slice[left.len()..].copy_from_slice(&right);
        (QueryRange { lo: q.lo, hi: mid, parent_count: count }, QueryRange { lo: mid, hi: q.hi, parent_count: count })
    }
}

/// Fits on `train` rows and predicts `query` rows (both indices into `view`)
/// for every `min_samples_split` in `levels` (ascending, each ≥ 2).
/// Returns one row-major `query.len() × n_out` buffer per level.
pub(crate) fn fit_predict_levels(
    view: &FeatureView<'_>,
    order: &ColumnOrder,
    y: &SampleMatrix,
    train: &[usize],
    query: &[usize],
    levels: &[usize],
) -> Vec<Vec<f64>> {
    debug_assert!(levels.windows(2).all(|w| w[0] < w[1]));
    let mut g = Grower::new(view, order, y, train);
    let n_out = y.n_cols();
    let mut sink = ScoringSink {
        view,
        queries: query.to_vec(),
        levels,
        n_out,
        preds: vec![vec![0.0; query.len() * n_out]; levels.len()],
        positions: (0..query.len()).collect(),
    };
    let root = QueryRange { lo: 0, hi: query.len(), parent_count: usize::MAX };
    grow(&mut g, levels[0], &mut sink, root);
    sink.preds
}

/// Mean squared error of row-major predictions for `rows` of `y`.
pub(crate) fn mse_rows(pred: &[f64], y: &SampleMatrix, rows: &[usize]) -> f64 {
    let n_out = y.n_cols();
    let mut sse = 0.0;
    for (k, &r) in rows.iter().enumerate() {
        for (p, t) in pred[k * n_out..(k + 1) * n_out].iter().zip(y.row(r)) {
            sse += (p - t) * (p - t);
        }
    }
    sse / (rows.len() * n_out).max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best_params: TreeParams,
    /// Every grid entry with its fold-averaged validation MSE, in grid order.
    pub grid: Vec<(TreeParams, f64)>,
}

/// Cross-validates `min_samples_split` for regressing `y` on `x`.
pub fn cross_validate(x: &SampleMatrix, y: &SampleMatrix, grid: &[TreeParams], seed: SeedStream) -> Result<CvResult> {
    if x.n_rows() != y.n_rows() {
        return Err(Error::Dimension(format!("x has {} rows, y has {}", x.n_rows(), y.n_rows())));
    }
    let view = FeatureView::new(vec![x])?;
    let order = ColumnOrder::new(&view);
    cross_validate_view(&view, &order, y, grid, seed, Deadline::none())
}

pub(crate) fn cross_validate_view(
    view: &FeatureView<'_>,
    order: &ColumnOrder,
    y: &SampleMatrix,
    grid: &[TreeParams],
    seed: SeedStream,
    deadline: Deadline,
) -> Result<CvResult> {
    let jobs = cv_jobs(view, y, grid, seed)?;
    let fold_mses = jobs
        .folds
        .par_iter()
        .map(|fold| fold.score(view, order, y, &jobs.levels, deadline))
        .collect::<Result<Vec<_>>>()?;
    Ok(jobs.finish(grid, &fold_mses))
}

/// The fold-level work of one cross-validation, so callers can schedule the
/// folds of several cross-validations on one pool.
pub(crate) struct CvJobs {
    levels: Vec<usize>,
    pub(crate) folds: Vec<CvFold>,
    degenerate: bool,
}

pub(crate) struct CvFold {
    train: Vec<usize>,
    valid: Vec<usize>,
}

impl CvFold {
    pub(crate) fn score(
        &self,
        view: &FeatureView<'_>,
        order: &ColumnOrder,
        y: &SampleMatrix,
        levels: &[usize],
        deadline: Deadline,
    ) -> Result<Vec<f64>> {
        deadline.check()?;
        let preds = fit_predict_levels(view, order, y, &self.train, &self.valid, levels);
        Ok(preds.iter().map(|p| mse_rows(p, y, &self.valid)).collect())
    }
}

impl CvJobs {
    pub(crate) fn levels(&self) -> &[usize] {
        &self.levels
    }

    /// Averages per-fold scores and picks the best entry; ties go to the
    /// larger `min_samples_split`.
    pub(crate) fn finish(&self, grid: &[TreeParams], fold_mses: &[Vec<f64>]) -> CvResult {
        let avg = |m: usize| -> f64 {
            if self.degenerate {
                return 0.0;
            }
            let li = self.levels.binary_search(&m).expect("grid value in ladder");
            fold_mses.iter().map(|f| f[li]).sum::<f64>() / fold_mses.len() as f64
        };
        let scored: Vec<(TreeParams, f64)> = grid.iter().map(|&p| (p, avg(p.min_samples_split))).collect();
        let best = scored
            .iter()
            .copied()
            .min_by(|(pa, a), (pb, b)| {
                a.partial_cmp(b).unwrap_or(Ordering::Equal).then(pb.min_samples_split.cmp(&pa.min_samples_split))
            })
            .map(|(p, _)| p)
            .expect("non-empty grid");
        CvResult { best_params: best, grid: scored }
    }
}

pub(crate) fn cv_jobs(
    view: &FeatureView<'_>,
    y: &SampleMatrix,
    grid: &[TreeParams],
    seed: SeedStream,
) -> Result<CvJobs> {
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    for p in grid {
        TreeParams::new(p.min_samples_split)?;
    }
    let n = view.n_rows();
    if n != y.n_rows() {
        return Err(Error::Dimension(format!("x has {n} rows, y has {}", y.n_rows())));
    }
    if n < 10 {
        return Err(Error::Fold(format!("{n} rows are too few for {CV_FOLDS}-fold cross-validation (need 10)")));
    }
    let mut levels: Vec<usize> = grid.iter().map(|p| p.min_samples_split).collect();
    levels.sort_unstable();
    levels.dedup();

    if view.n_cols() == 0 || view.is_constant() {
        return Ok(CvJobs { levels, folds: Vec::new(), degenerate: true });
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed.rng());
    let folds = (0..CV_FOLDS)
        .map(|k| {
            let (a, b) = (k * n / CV_FOLDS, (k + 1) * n / CV_FOLDS);
            let valid = perm[a..b].to_vec();
            let train = perm[..a].iter().chain(&perm[b..]).copied().collect();
            CvFold { train, valid }
        })
        .collect();
    Ok(CvJobs { levels, folds, degenerate: false })
}
