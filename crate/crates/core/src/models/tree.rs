//! CART classification trees with weighted Gini impurity.
//!
//! Splits are `x[feature] <= threshold` going left. Categorical features are
//! split on their integer codes. Split search works on the sparse column
//! store so TF-IDF inputs with thousands of columns stay cheap: implicit
//! zeros form one block between negative and positive values.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{DesignMatrix, Row};

const LEAF: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Weighted fraction of class 1 among the node's training samples.
    pub value: f64,
}

impl Node {
    pub fn leaf(value: f64) -> Self {
        Node {
            feature: LEAF,
            threshold: 0.0,
            left: 0,
            right: 0,
            value,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.feature == LEAF
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            max_features: None,
            min_samples_split: 2,
        }
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

/// (value, weight, label) of one sample in a node.
type Entry = (f64, f64, usize);

impl DecisionTree {
    pub fn single_leaf(value: f64) -> Self {
        DecisionTree {
            nodes: vec![Node::leaf(value)],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            let n = &nodes[i];
            if n.is_leaf() {
                0
            } else {
                1 + walk(nodes, n.left).max(walk(nodes, n.right))
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict(&self, x: Row<'_>) -> f64 {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            if n.is_leaf() {
                return n.value;
            }
            i = if x.get(n.feature) <= n.threshold { n.left } else { n.right };
        }
    }

    pub fn predict_index(&self, x: &DesignMatrix, row: usize) -> f64 {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            if n.is_leaf() {
                return n.value;
            }
            i = if x.get(row, n.feature) <= n.threshold { n.left } else { n.right };
        }
    }

    /// Fits on rows with positive `weights`; zero-weight rows are ignored.
    pub fn fit(x: &DesignMatrix, y: &[usize], weights: &[f64], params: TreeParams, rng: &mut impl Rng) -> Self {
        let samples: Vec<usize> = (0..x.n_rows()).filter(|&i| weights[i] > 0.0).collect();
        let mut builder = Builder {
            x,
            y,
            w: weights,
            params,
            mark: vec![LEAF; x.n_rows()],
            nodes: Vec::new(),
            features: (0..x.n_cols()).collect(),
        };
        builder.nodes.push(Node::leaf(0.0));
        let mut stack = vec![(0usize, samples, 0usize)];
        while let Some((id, samples, depth)) = stack.pop() {
            if let Some((left, right)) = builder.grow(id, &samples, depth, rng) {
                stack.push((builder.nodes[id].right, right, depth + 1));
                stack.push((builder.nodes[id].left, left, depth + 1));
            }
        }
        DecisionTree { nodes: builder.nodes }
    }
}

struct Builder<'a> {
    x: &'a DesignMatrix,
    y: &'a [usize],
    w: &'a [f64],
    params: TreeParams,
    mark: Vec<usize>,
    nodes: Vec<Node>,
    features: Vec<usize>,
}

impl Builder<'_> {
    /// Turns node `id` into a leaf or a split; returns the children's samples on split.
    fn grow(
        &mut self,
        id: usize,
        samples: &[usize],
        depth: usize,
        rng: &mut impl Rng,
    ) -> Option<(Vec<usize>, Vec<usize>)> {
        let mut totals = [0.0f64; 2];
        for &i in samples {
            totals[self.y[i]] += self.w[i];
        }
        let total = totals[0] + totals[1];
        self.nodes[id] = Node::leaf(if total > 0.0 { totals[1] / total } else { 0.5 });

        let pure = totals[0] <= 0.0 || totals[1] <= 0.0;
        let too_deep = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || too_deep || samples.len() < self.params.min_samples_split.max(2) {
            return None;
        }

        for &i in samples {
            self.mark[i] = id;
        }
        let split = self.best_split(id, samples, totals, rng)?;

        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &i in samples {
            if self.x.get(i, split.feature) <= split.threshold {
                left.push(i);
            } else {
                right.push(i);
            }
        }
        debug_assert!(!left.is_empty() && !right.is_empty());
        let l = self.nodes.len();
        self.nodes.push(Node::leaf(0.0));
        self.nodes.push(Node::leaf(0.0));
        let value = self.nodes[id].value;
        self.nodes[id] = Node {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: l + 1,
            value,
        };
        Some((left, right))
    }

    fn best_split(&mut self, id: usize, samples: &[usize], totals: [f64; 2], rng: &mut impl Rng) -> Option<Split> {
        let d = self.x.n_cols();
        let quota = self.params.max_features.unwrap_or(d).clamp(1, d.max(1));
        if quota < d {
            self.features.shuffle(rng);
        } else {
            self.features.sort_unstable();
        }
        let mut best: Option<Split> = None;
        let mut examined = 0;
        let mut entries: Vec<Entry> = Vec::new();
        for fi in 0..d {
            if examined >= quota {
                break;
            }
            let f = self.features[fi];
            self.gather(id, samples, f, &mut entries);
            if let Some(split) = scan_feature(f, &mut entries, totals) {
                examined += 1;
                if best.as_ref().is_none_or(|b| split.score > b.score + 1e-12) {
                    best = Some(split);
                }
            } else if quota == d {
                examined += 1;
            }
        }
        best
    }

    /// Nonzero entries of feature `f` among the node's samples.
    fn gather(&self, id: usize, samples: &[usize], f: usize, out: &mut Vec<Entry>) {
        out.clear();
        if samples.len() < self.x.column_nnz(f) {
            for &i in samples {
                let v = self.x.get(i, f);
                if v != 0.0 {
                    out.push((v, self.w[i], self.y[i]));
                }
            }
        } else {
            let (rows, vals) = self.x.column(f);
            for (&i, &v) in rows.iter().zip(vals) {
                if self.mark[i] == id && self.w[i] > 0.0 {
                    out.push((v, self.w[i], self.y[i]));
                }
            }
        }
    }
}

/// Best Gini split of one feature. `entries` holds the nonzero values; the
/// remaining node weight sits at value 0.
fn scan_feature(feature: usize, entries: &mut [Entry], totals: [f64; 2]) -> Option<Split> {
    let mut zero = totals;
    for e in entries.iter() {
        zero[e.2] -= e.1;
    }
    zero = [zero[0].max(0.0), zero[1].max(0.0)];
    let has_zero = zero[0] + zero[1] > 1e-12 * (totals[0] + totals[1]);
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));

    // distinct values in ascending order with their class weights
    let mut blocks: Vec<(f64, [f64; 2])> = Vec::with_capacity(entries.len() + 1);
    let split_at = entries.partition_point(|e| e.0 < 0.0);
    let push = |v: f64, w: f64, y: usize, blocks: &mut Vec<(f64, [f64; 2])>| {
        match blocks.last_mut() {
            Some(last) if last.0 == v => last.1[y] += w,
            _ => {
                let mut c = [0.0; 2];
                c[y] = w;
                blocks.push((v, c));
            }
        }
    };
    for e in &entries[..split_at] {
        push(e.0, e.1, e.2, &mut blocks);
    }
    if has_zero {
        blocks.push((0.0, zero));
    }
    for e in &entries[split_at..] {
        push(e.0, e.1, e.2, &mut blocks);
    }
    if blocks.len() < 2 {
        return None;
    }

    let total = totals[0] + totals[1];
    let mut left = [0.0f64; 2];
    let mut best: Option<(f64, usize)> = None;
    for (b, block) in blocks[..blocks.len() - 1].iter().enumerate() {
        left[0] += block.1[0];
        left[1] += block.1[1];
        let lw = left[0] + left[1];
        let rw = total - lw;
        if lw <= 0.0 || rw <= 0.0 {
            continue;
        }
        let right = [totals[0] - left[0], totals[1] - left[1]];
        // maximising this is minimising the weighted child Gini impurity
        let score = (left[0] * left[0] + left[1] * left[1]) / lw + (right[0] * right[0] + right[1] * right[1]) / rw;
        if best.is_none_or(|(s, _)| score > s + 1e-12) {
            best = Some((score, b));
        }
    }
    best.map(|(score, b)| {
        let lo = blocks[b].0;
        let hi = blocks[b + 1].0;
        let mut threshold = lo + (hi - lo) / 2.0;
        if threshold >= hi {
            threshold = lo;
        }
        Split {
            feature,
            threshold,
            score,
        }
    })
}
