use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::Task;
use crate::rng::SplitMix64;

/// Deepest tree accepted when reading nodes from outside.
const MAX_STORED_DEPTH: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LeafValue {
    /// `[P(negative), P(positive)]`.
    Distribution([f64; 2]),
    Mean(f64),
}

impl LeafValue {
    /// Positive-class probability, or the mean target.
    pub fn output(&self) -> f64 {
        match self {
            LeafValue::Distribution(p) => p[1],
            LeafValue::Mean(m) => *m,
        }
    }
}

/// Tree node in a pre-order arena; a split's left child is the next node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
        coverage: usize,
    },
    Leaf { value: LeafValue, coverage: usize },
}

impl Node {
    pub fn coverage(&self) -> usize {
        match self {
            Node::Split { coverage, .. } | Node::Leaf { coverage, .. } => *coverage,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Validates the pre-order layout, child links and coverage sums.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Tree, String> {
        if nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        let end = check_subtree(&nodes, 0, 0)?;
        if end != nodes.len() {
            return Err(format!("tree has {} unreachable nodes", nodes.len() - end));
        }
        Ok(Tree { nodes })
    }

    pub fn leaf(value: LeafValue, coverage: usize) -> Tree {
        Tree::from_nodes(vec![Node::Leaf { value, coverage }]).expect("valid leaf")
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<Node> {
        self.nodes
    }

    pub fn leaf_of(&self, x: &[f64]) -> &Node {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                leaf => return leaf,
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.leaf_of(x) {
            Node::Leaf { value, .. } => value.output(),
            Node::Split { .. } => unreachable!(),
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }

    /// Distinct split features, ascending.
    pub fn features_used(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

fn check_subtree(nodes: &[Node], i: usize, depth: usize) -> Result<usize, String> {
    if depth > MAX_STORED_DEPTH {
        return Err(format!("tree deeper than {MAX_STORED_DEPTH}"));
    }
    match nodes.get(i) {
        None => Err(format!("node index {i} out of range")),
        Some(Node::Leaf { coverage, .. }) if *coverage == 0 => Err(format!("leaf {i} has zero coverage")),
        Some(Node::Leaf { .. }) => Ok(i + 1),
        Some(Node::Split {
            left,
            right,
            coverage,
            threshold,
            ..
        }) => {
            if !threshold.is_finite() {
                return Err(format!("split {i} has a non-finite threshold"));
            }
            if *left != i + 1 {
                return Err(format!("split {i} left child must be {}, found {left}", i + 1));
            }
            let left_end = check_subtree(nodes, *left, depth + 1)?;
            if *right != left_end {
                return Err(format!("split {i} right child must be {left_end}, found {right}"));
            }
            let end = check_subtree(nodes, *right, depth + 1)?;
            let children = nodes[*left].coverage() + nodes[*right].coverage();
            if children != *coverage {
                return Err(format!("split {i} coverage {coverage} differs from children total {children}"));
            }
            Ok(end)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    /// Summed child impurity (see [`node_impurity`]).
    pub impurity: f64,
}

/// Count-weighted impurity: `n * gini` for classification, the sum of
/// squared deviations from the mean for regression.
pub fn node_impurity(y: &[f64], rows: &[usize], task: Task) -> f64 {
    let n = rows.len() as f64;
    if rows.is_empty() {
        return 0.0;
    }
    match task {
        Task::Classify => {
            let pos = rows.iter().filter(|&&r| y[r] > 0.5).count() as f64;
            gini_weighted(pos, n)
        }
        Task::Regress => {
            let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / n;
            rows.iter().map(|&r| (y[r] - mean).powi(2)).sum()
        }
    }
}

fn gini_weighted(pos: f64, n: f64) -> f64 {
    let neg = n - pos;
    n - (pos * pos + neg * neg) / n
}

fn split_point(a: f64, b: f64) -> f64 {
    let m = a + (b - a) * 0.5;
    if m >= b || m < a || !m.is_finite() {
        a
    } else {
        m
    }
}

/// Exhaustive best split of `rows` over `features`.
///
/// Thresholds are midpoints between adjacent distinct values. Features are
/// scanned in ascending index order and thresholds ascending; a candidate
/// replaces the incumbent only when strictly better, so ties keep the lowest
/// feature index and then the lowest threshold. Returns `None` unless some
/// split leaves at least `min_leaf` rows per side and lowers the impurity.
pub fn best_split(
    x: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    features: &[usize],
    task: Task,
    min_leaf: usize,
) -> Option<SplitCandidate> {
    let n = rows.len();
    let min_leaf = min_leaf.max(1);
    if n < 2 * min_leaf {
        return None;
    }
    let parent = node_impurity(y, rows, task);
    let eps = 1e-12 * parent.max(1.0);
    let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / n as f64;
    let mut features = features.to_vec();
    features.sort_unstable();
    features.dedup();
    let mut best: Option<SplitCandidate> = None;
    let mut order = rows.to_vec();
    for &f in &features {
        order.copy_from_slice(rows);
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let (mut pos_l, mut sum_l, mut sq_l) = (0.0f64, 0.0f64, 0.0f64);
        let (pos_t, sum_t, sq_t) = order.iter().fold((0.0, 0.0, 0.0), |(p, s, q), &r| {
            let d = y[r] - mean;
            (p + f64::from(y[r] > 0.5), s + d, q + d * d)
        });
        for i in 0..n - 1 {
            let r = order[i];
            let d = y[r] - mean;
            pos_l += f64::from(y[r] > 0.5);
            sum_l += d;
            sq_l += d * d;
            let n_l = i + 1;
            let n_r = n - n_l;
            if n_l < min_leaf || n_r < min_leaf {
                continue;
            }
            let (a, b) = (x[r][f], x[order[i + 1]][f]);
            if !(a < b) {
                continue;
            }
            let (nl, nr) = (n_l as f64, n_r as f64);
            let impurity = match task {
                Task::Classify => gini_weighted(pos_l, nl) + gini_weighted(pos_t - pos_l, nr),
                Task::Regress => {
                    let sum_r = sum_t - sum_l;
                    let sq_r = sq_t - sq_l;
                    (sq_l - sum_l * sum_l / nl).max(0.0) + (sq_r - sum_r * sum_r / nr).max(0.0)
                }
            };
            if best.is_none_or(|b| impurity < b.impurity - eps) {
                best = Some(SplitCandidate {
                    feature: f,
                    threshold: split_point(a, b),
                    impurity,
                });
            }
        }
    }
    best.filter(|b| b.impurity < parent - eps)
}

pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub features_per_split: usize,
    pub n_features: usize,
}

fn leaf_value(y: &[f64], rows: &[usize], task: Task) -> LeafValue {
    let n = rows.len() as f64;
    match task {
        Task::Classify => {
            let pos = rows.iter().filter(|&&r| y[r] > 0.5).count() as f64;
            let p = pos / n;
            LeafValue::Distribution([1.0 - p, p])
        }
        Task::Regress => LeafValue::Mean(rows.iter().map(|&r| y[r]).sum::<f64>() / n),
    }
}

fn is_pure(y: &[f64], rows: &[usize]) -> bool {
    rows.windows(2).all(|w| y[w[0]] == y[w[1]])
}

/// Grow a tree on `rows` (bootstrap positions, duplicates allowed).
pub(crate) fn grow(x: &[Vec<f64>], y: &[f64], rows: Vec<usize>, task: Task, p: &GrowParams, rng: &mut SplitMix64) -> Tree {
    let mut nodes = Vec::new();
    grow_into(&mut nodes, x, y, rows, task, p, rng, 0);
    Tree { nodes }
}

#[allow(clippy::too_many_arguments)]
fn grow_into(
    nodes: &mut Vec<Node>,
    x: &[Vec<f64>],
    y: &[f64],
    rows: Vec<usize>,
    task: Task,
    p: &GrowParams,
    rng: &mut SplitMix64,
    depth: usize,
) {
    let coverage = rows.len();
    let stop = depth >= p.max_depth || coverage < p.min_samples_split || is_pure(y, &rows);
    let split = if stop {
        None
    } else {
        let k = p.features_per_split.min(p.n_features);
        let mut candidates = index::sample(rng, p.n_features, k).into_vec();
        candidates.sort_unstable();
        best_split(x, y, &rows, &candidates, task, p.min_samples_leaf)
    };
    let Some(s) = split else {
        nodes.push(Node::Leaf {
            value: leaf_value(y, &rows, task),
            coverage,
        });
        return;
    };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| x[r][s.feature] <= s.threshold);
    let at = nodes.len();
    nodes.push(Node::Split {
        feature: s.feature,
        threshold: s.threshold,
        left: at + 1,
        right: 0,
        coverage,
    });
    grow_into(nodes, x, y, left_rows, task, p, rng, depth + 1);
    let right_at = nodes.len();
    if let Node::Split { right, .. } = &mut nodes[at] {
        *right = right_at;
    }
    grow_into(nodes, x, y, right_rows, task, p, rng, depth + 1);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn oracle(x: &[Vec<f64>], y: &[f64], features: &[usize], task: Task, min_leaf: usize) -> Option<SplitCandidate> {
        let rows: Vec<usize> = (0..x.len()).collect();
        let parent = node_impurity(y, &rows, task);
        let eps = 1e-12 * parent.max(1.0);
        let mut best: Option<SplitCandidate> = None;
        for &f in features {
            let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = split_point(w[0], w[1]);
                let l: Vec<usize> = rows.iter().copied().filter(|&r| x[r][f] <= t).collect();
                let r: Vec<usize> = rows.iter().copied().filter(|&r| x[r][f] > t).collect();
                if l.len() < min_leaf || r.len() < min_leaf {
                    continue;
                }
                let imp = node_impurity(y, &l, task) + node_impurity(y, &r, task);
                if best.is_none_or(|b| imp < b.impurity - eps) {
                    best = Some(SplitCandidate { feature: f, threshold: t, impurity: imp });
                }
            }
        }
        best.filter(|b| b.impurity < parent - eps)
    }

    #[test]
    fn stump_on_two_points() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![0.0, 1.0];
        let s = best_split(&x, &y, &[0, 1], &[0], Task::Classify, 1).unwrap();
        assert_eq!(s.feature, 0);
        assert!(s.threshold > 0.0 && s.threshold < 1.0);
        assert_eq!(s.threshold, 0.5);
        assert_eq!(s.impurity, 0.0);
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let s = best_split(&x, &[0.0, 1.0], &[0, 1], &[1, 0], Task::Classify, 1).unwrap();
        assert_eq!(s.feature, 0);
    }

    #[test]
    fn no_split_when_pure_or_constant() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(best_split(&x, &[1.0, 1.0], &[0, 1], &[0], Task::Classify, 1).is_none());
        let x = vec![vec![3.0], vec![3.0]];
        assert!(best_split(&x, &[0.0, 1.0], &[0, 1], &[0], Task::Classify, 1).is_none());
    }

    #[test]
    fn adjacent_floats_use_lower_value() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        assert_eq!(split_point(a, b), a);
    }

    #[test]
    fn grown_tree_is_valid() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i * 7 % 13) as f64]).collect();
        let y: Vec<f64> = (0..40).map(|i| f64::from(i % 3 == 0)).collect();
        let p = GrowParams {
            max_depth: 4,
            min_samples_split: 2,
            min_samples_leaf: 1,
            features_per_split: 2,
            n_features: 2,
        };
        let t = grow(&x, &y, (0..40).collect(), Task::Classify, &p, &mut rng::stream(1));
        assert!(t.depth() <= 4);
        let again = Tree::from_nodes(t.nodes().to_vec()).unwrap();
        assert_eq!(again, t);
        for n in t.nodes() {
            if let Node::Leaf { value: LeafValue::Distribution(d), .. } = n {
                assert!((d[0] + d[1] - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn from_nodes_rejects_bad_links() {
        let leaf = |c| Node::Leaf { value: LeafValue::Mean(1.0), coverage: c };
        let ok = vec![
            Node::Split { feature: 0, threshold: 0.5, left: 1, right: 2, coverage: 3 },
            leaf(1),
            leaf(2),
        ];
        assert!(Tree::from_nodes(ok.clone()).is_ok());
        let mut bad = ok.clone();
        bad[0] = Node::Split { feature: 0, threshold: 0.5, left: 1, right: 2, coverage: 4 };
        assert!(Tree::from_nodes(bad).is_err());
        let mut bad = ok;
        bad[0] = Node::Split { feature: 0, threshold: 0.5, left: 1, right: 5, coverage: 3 };
        assert!(Tree::from_nodes(bad).is_err());
        assert!(Tree::from_nodes(vec![leaf(0)]).is_err());
    }

    proptest! {
        #[test]
        fn gini_scan_matches_oracle(
            data in prop::collection::vec((prop::collection::vec(0u8..6, 3), any::<bool>()), 2..50),
            min_leaf in 1usize..4,
        ) {
            let x: Vec<Vec<f64>> = data.iter().map(|(r, _)| r.iter().map(|&v| f64::from(v) * 0.5).collect()).collect();
            let y: Vec<f64> = data.iter().map(|(_, l)| f64::from(*l)).collect();
            let rows: Vec<usize> = (0..x.len()).collect();
            let got = best_split(&x, &y, &rows, &[0, 1, 2], Task::Classify, min_leaf);
            prop_assert_eq!(got, oracle(&x, &y, &[0, 1, 2], Task::Classify, min_leaf));
        }

        #[test]
        fn sse_scan_matches_oracle(
            data in prop::collection::vec((prop::collection::vec(0u8..8, 2), 0u8..30), 2..40),
        ) {
            let x: Vec<Vec<f64>> = data.iter().map(|(r, _)| r.iter().map(|&v| f64::from(v)).collect()).collect();
            let y: Vec<f64> = data.iter().map(|(_, t)| f64::from(*t)).collect();
            let rows: Vec<usize> = (0..x.len()).collect();
            let got = best_split(&x, &y, &rows, &[0, 1], Task::Regress, 1);
            let want = oracle(&x, &y, &[0, 1], Task::Regress, 1);
            prop_assert_eq!(got.map(|s| (s.feature, s.threshold)), want.map(|s| (s.feature, s.threshold)));
            if let (Some(g), Some(w)) = (got, want) {
                prop_assert!((g.impurity - w.impurity).abs() <= 1e-9 * w.impurity.max(1.0));
            }
        }
    }
}
