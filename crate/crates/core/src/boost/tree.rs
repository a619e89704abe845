use serde::{Deserialize, Serialize};

use super::{BoostError, BoostingConfig, Result};
use crate::Matrix;

/// Splits whose gain is within this fraction of the parent score are
/// treated as rounding noise.
const SPLIT_EPS: f64 = 1e-12;

/// Regression tree node. Rows with `x[feature] <= threshold` go left;
/// missing values follow `default_left`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        default_left: bool,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                    ..
                } => {
                    let x = row[*feature];
                    let go_left = if x.is_nan() {
                        *default_left
                    } else {
                        x <= *threshold
                    };
                    node = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }
}

/// Per-feature row orderings of a matrix, sorted by value then row index.
pub(crate) struct Presorted {
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub(crate) fn new(matrix: &Matrix) -> Self {
        let order = (0..matrix.n_cols())
            .map(|f| {
                let mut idx: Vec<u32> = (0..matrix.n_rows() as u32).collect();
                idx.sort_by(|&a, &b| {
                    matrix
                        .get(a as usize, f)
                        .total_cmp(&matrix.get(b as usize, f))
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        Presorted { order }
    }
}

/// Tree growth over a fixed matrix and per-row statistics.
pub(crate) struct Grower<'a> {
    matrix: &'a Matrix,
    /// Weighted gradients `w·g`, indexed by row.
    grad: &'a [f64],
    /// Weighted hessians `w·h`, indexed by row.
    hess: &'a [f64],
    lambda: f64,
    max_depth: usize,
    min_samples_leaf: usize,
    min_gain: f64,
}

struct SplitCandidate {
    feature_slot: usize,
    threshold: f64,
    gain: f64,
}

impl<'a> Grower<'a> {
    pub(crate) fn new(
        matrix: &'a Matrix,
        grad: &'a [f64],
        hess: &'a [f64],
        config: &BoostingConfig,
    ) -> Self {
        Grower {
            matrix,
            grad,
            hess,
            lambda: config.lambda,
            max_depth: config.max_depth,
            min_samples_leaf: config.min_samples_leaf,
            min_gain: config.min_gain,
        }
    }

    /// Grows a tree on the active rows (`active[row]`) using the given
    /// features (ascending).
    pub(crate) fn grow(
        &self,
        presorted: &Presorted,
        active: &[bool],
        features: &[usize],
    ) -> TreeNode {
        let lists: Vec<Vec<u32>> = features
            .iter()
            .map(|&f| {
                presorted.order[f]
                    .iter()
                    .copied()
                    .filter(|&r| active[r as usize])
                    .collect()
            })
            .collect();
        let mut mark = vec![false; self.matrix.n_rows()];
        self.grow_node(lists, features, 0, &mut mark)
    }

    fn leaf_value(&self, g: f64, h: f64) -> f64 {
        let denom = h + self.lambda;
        if denom > 0.0 {
            -g / denom
        } else {
            0.0
        }
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        let denom = h + self.lambda;
        if denom > 0.0 {
            g * g / denom
        } else {
            0.0
        }
    }

    fn grow_node(
        &self,
        lists: Vec<Vec<u32>>,
        features: &[usize],
        depth: usize,
        mark: &mut [bool],
    ) -> TreeNode {
        let rows = &lists[0];
        let (g, h) = rows.iter().fold((0.0, 0.0), |(g, h), &r| {
            (g + self.grad[r as usize], h + self.hess[r as usize])
        });
        let leaf = TreeNode::Leaf {
            value: self.leaf_value(g, h),
        };
        if depth >= self.max_depth || rows.len() < 2 * self.min_samples_leaf {
            return leaf;
        }
        let Some(best) = self.best_split(&lists, features, g, h) else {
            return leaf;
        };

        let feature = features[best.feature_slot];
        for &r in &lists[best.feature_slot] {
            if self.matrix.get(r as usize, feature) <= best.threshold {
                mark[r as usize] = true;
            }
        }
        let mut left_lists = Vec::with_capacity(lists.len());
        let mut right_lists = Vec::with_capacity(lists.len());
        for list in lists {
            let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(|&r| mark[r as usize]);
            left_lists.push(l);
            right_lists.push(r);
        }
        for &r in &left_lists[0] {
            mark[r as usize] = false;
        }
        let left = self.grow_node(left_lists, features, depth + 1, mark);
        let right = self.grow_node(right_lists, features, depth + 1, mark);
        TreeNode::Split {
            feature,
            threshold: best.threshold,
            gain: best.gain,
            default_left: true,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Best split by gain; ties keep the lowest feature, then the lowest
    /// threshold.
    fn best_split(
        &self,
        lists: &[Vec<u32>],
        features: &[usize],
        g: f64,
        h: f64,
    ) -> Option<SplitCandidate> {
        let parent = self.score(g, h);
        let n = lists[0].len();
        let msl = self.min_samples_leaf;
        let mut best: Option<SplitCandidate> = None;
        for (slot, (&feature, list)) in features.iter().zip(lists).enumerate() {
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..n - 1 {
                let r = list[k] as usize;
                gl += self.grad[r];
                hl += self.hess[r];
                let x = self.matrix.get(r, feature);
                let x_next = self.matrix.get(list[k + 1] as usize, feature);
                if !(x < x_next) {
                    continue;
                }
                let nl = k + 1;
                if nl < msl || n - nl < msl {
                    continue;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl + self.lambda <= 0.0 || hr + self.lambda <= 0.0 {
                    continue;
                }
                let gain = self.score(gl, hl) + self.score(gr, hr) - parent;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(SplitCandidate {
                        feature_slot: slot,
                        threshold: midpoint(x, x_next),
                        gain,
                    });
                }
            }
        }
        best.filter(|b| b.gain > self.min_gain && b.gain > SPLIT_EPS * parent)
    }
}

/// A threshold strictly below `hi` and at least `lo`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + 0.5 * (hi - lo);
    if m < hi {
        m
    } else {
        lo
    }
}

/// Fits one tree to per-row gradients and hessians with positive sample
/// weights, using every row and every feature.
pub fn build_tree(
    rows: &Matrix,
    gradients: &[f64],
    hessians: &[f64],
    sample_weights: &[f64],
    config: &BoostingConfig,
) -> Result<TreeNode> {
    let n = rows.n_rows();
    if n == 0 || rows.n_cols() == 0 {
        return Err(BoostError::Data(
            "cannot build a tree on empty input".into(),
        ));
    }
    if gradients.len() != n || hessians.len() != n || sample_weights.len() != n {
        return Err(BoostError::Data(format!(
            "{n} rows but {} gradients, {} hessians, {} weights",
            gradients.len(),
            hessians.len(),
            sample_weights.len()
        )));
    }
    if sample_weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(BoostError::Data("sample weights must be positive".into()));
    }
    if rows.as_slice().iter().any(|v| v.is_nan()) {
        return Err(BoostError::Data(
            "missing values must be imputed before training".into(),
        ));
    }
    config.validate()?;
    let grad: Vec<f64> = gradients
        .iter()
        .zip(sample_weights)
        .map(|(g, w)| g * w)
        .collect();
    let hess: Vec<f64> = hessians
        .iter()
        .zip(sample_weights)
        .map(|(h, w)| h * w)
        .collect();
    let presorted = Presorted::new(rows);
    let features: Vec<usize> = (0..rows.n_cols()).collect();
    let active = vec![true; n];
    Ok(Grower::new(rows, &grad, &hess, config).grow(&presorted, &active, &features))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(lambda: f64, depth: usize) -> BoostingConfig {
        BoostingConfig {
            lambda,
            max_depth: depth,
            ..Default::default()
        }
    }

    #[test]
    fn equal_gradients_give_a_single_leaf() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        let g = [0.3; 4];
        let h = [1.0; 4];
        let tree = build_tree(&x, &g, &h, &[1.0; 4], &config(0.0, 3)).unwrap();
        match tree {
            TreeNode::Leaf { value } => assert!((value + 0.3).abs() < 1e-15),
            other => panic!("expected a leaf, got {other:?}"),
        }
    }

    #[test]
    fn hand_enumerated_split() {
        // Candidates: after x=1 gain 1/1+1/3−0 = 4/3; after x=2 gain 4/2+4/2 = 4;
        // after x=3 gain 4/3.
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        let g = [-1.0, -1.0, 1.0, 1.0];
        let tree = build_tree(&x, &g, &[1.0; 4], &[1.0; 4], &config(0.0, 1)).unwrap();
        match tree {
            TreeNode::Split {
                feature,
                threshold,
                gain,
                left,
                right,
                ..
            } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 2.5);
                assert_eq!(gain, 4.0);
                assert_eq!(*left, TreeNode::Leaf { value: 1.0 });
                assert_eq!(*right, TreeNode::Leaf { value: -1.0 });
            }
            other => panic!("expected a split, got {other:?}"),
        }
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        let x = Matrix::from_rows(&[
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![3.0, 3.0],
            vec![4.0, 4.0],
        ])
        .unwrap();
        let g = [-1.0, -1.0, 1.0, 1.0];
        let tree = build_tree(&x, &g, &[1.0; 4], &[1.0; 4], &config(0.0, 1)).unwrap();
        assert!(matches!(tree, TreeNode::Split { feature: 0, .. }));
    }

    #[test]
    fn respects_min_samples_leaf_and_depth() {
        let x = Matrix::from_rows(&(0..8).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let g = [-3.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, -3.0];
        let mut c = config(0.0, 8);
        c.min_samples_leaf = 3;
        let tree = build_tree(&x, &g, &[1.0; 8], &[1.0; 8], &c).unwrap();
        fn check(node: &TreeNode, x: &Matrix, rows: Vec<usize>) {
            match node {
                TreeNode::Leaf { .. } => assert!(rows.len() >= 3),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    let (l, r): (Vec<_>, Vec<_>) = rows
                        .into_iter()
                        .partition(|&i| x.get(i, *feature) <= *threshold);
                    check(left, x, l);
                    check(right, x, r);
                }
            }
        }
        check(&tree, &x, (0..8).collect());
        let stump = build_tree(&x, &g, &[1.0; 8], &[1.0; 8], &config(0.0, 0)).unwrap();
        assert!(stump.is_leaf());
        let deep = build_tree(&x, &g, &[1.0; 8], &[1.0; 8], &config(0.0, 2)).unwrap();
        assert!(deep.depth() <= 2);
    }

    #[test]
    fn weights_scale_statistics() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let tree = build_tree(&x, &[1.0, 1.0], &[1.0, 1.0], &[2.0, 1.0], &config(0.0, 0)).unwrap();
        assert_eq!(tree, TreeNode::Leaf { value: -1.0 });
    }

    #[test]
    fn errors() {
        let x = Matrix::zeros(0, 1);
        assert!(build_tree(&x, &[], &[], &[], &config(1.0, 2)).is_err());
        let x = Matrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert!(build_tree(&x, &[1.0], &[1.0], &[1.0], &config(1.0, 2)).is_err());
        let x = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(build_tree(&x, &[1.0], &[1.0], &[0.0], &config(1.0, 2)).is_err());
    }

    #[test]
    fn midpoint_stays_below_upper_value() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        assert_eq!(midpoint(lo, hi), lo);
        assert_eq!(midpoint(2.0, 3.0), 2.5);
    }
}
