//! Second-order gradient boosted regression trees.
//!
//! Each round fits one tree to the gradient/hessian of the squared loss with
//! exact greedy split search. For a node with gradient sum `G` and hessian
//! sum `H` the optimal leaf weight is `−G/(H + λ)`, and a split is scored by
//!
//! ```text
//! gain = G_L²/(H_L + λ) + G_R²/(H_R + λ) − G²/(H + λ)
//! ```
//!
//! With [`GossParams`] set, each round trains on a gradient-based one-side
//! sample of the rows, reweighted so that gradient sums stay unbiased.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::goss::goss_sample;
use super::{DesignMatrix, RegressError, Regressor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GossParams {
    /// Fraction of rows kept by largest |gradient|.
    pub a: f64,
    /// Fraction of rows sampled uniformly from the rest.
    pub b: f64,
}

impl Default for GossParams {
    fn default() -> Self {
        Self { a: 0.2, b: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub reg_lambda: f64,
    pub min_child_weight: f64,
    pub goss: Option<GossParams>,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            rounds: 100,
            learning_rate: 0.1,
            max_depth: 4,
            reg_lambda: 1.0,
            min_child_weight: 1.0,
            goss: None,
            seed: 0,
        }
    }
}

impl GbtParams {
    /// Defaults plus GOSS sampling.
    pub fn lgbm() -> Self {
        Self {
            goss: Some(GossParams::default()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RegressError> {
        let bad = |m: String| Err(RegressError::InvalidParams(m));
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate {} not in (0, 1]", self.learning_rate));
        }
        if !(self.reg_lambda >= 0.0) || !(self.min_child_weight >= 0.0) {
            return bad("reg_lambda and min_child_weight must be non-negative".into());
        }
        if let Some(g) = self.goss {
            if !(g.a > 0.0 && g.b >= 0.0 && g.a + g.b <= 1.0) {
                return bad(format!(
                    "goss a={} b={} must satisfy a > 0, b >= 0, a + b <= 1",
                    g.a, g.b
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        weight: f64,
    },
}

/// A regression tree stored as a flat node array, root at index 0. Rows with
/// `x[feature] < threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_weight(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { weight } => return *weight,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] < *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtEnsemble {
    pub base_score: f64,
    pub trees: Vec<Tree>,
    pub params: GbtParams,
    pub n_features: usize,
    /// Mean squared training loss before the first round and after each one.
    pub train_loss: Vec<f64>,
}

impl Regressor for GbtEnsemble {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_unchecked(&self, row: &[f64]) -> f64 {
        let eta = self.params.learning_rate;
        self.base_score + self.trees.iter().map(|t| eta * t.leaf_weight(row)).sum::<f64>()
    }
}

struct Grower<'a> {
    x: &'a DesignMatrix,
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbtParams,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn leaf(&mut self, g: f64, h: f64) -> usize {
        let denom = h + self.params.reg_lambda;
        let weight = if denom > 0.0 { -g / denom } else { 0.0 };
        self.nodes.push(Node::Leaf { weight });
        self.nodes.len() - 1
    }

    /// `sorted[f]` lists this node's rows in ascending order of feature `f`.
    fn grow(&mut self, sorted: Vec<Vec<usize>>, depth: usize) -> usize {
        let rows = &sorted[0];
        let g: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        if depth >= self.params.max_depth || rows.len() < 2 {
            return self.leaf(g, h);
        }
        let lambda = self.params.reg_lambda;
        let mcw = self.params.min_child_weight;
        let score = |g: f64, h: f64| if h + lambda > 0.0 { g * g / (h + lambda) } else { 0.0 };
        let parent = score(g, h);

        let mut best: Option<(f64, usize, f64)> = None;
        for (f, order) in sorted.iter().enumerate() {
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let i = order[k];
                gl += self.grad[i];
                hl += self.hess[i];
                let (lo, hi) = (self.x.get(i, f), self.x.get(order[k + 1], f));
                if !(lo < hi) {
                    continue;
                }
                let hr = h - hl;
                if hl < mcw || hr < mcw {
                    continue;
                }
                let gain = score(gl, hl) + score(g - gl, hr) - parent;
                if gain > best.map(|b| b.0).unwrap_or(0.0) {
                    let mid = 0.5 * (lo + hi);
                    let threshold = if lo < mid && mid <= hi { mid } else { hi };
                    best = Some((gain, f, threshold));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return self.leaf(g, h);
        };

        let (mut left, mut right) = (Vec::with_capacity(sorted.len()), Vec::with_capacity(sorted.len()));
        for order in sorted {
            let (l, r): (Vec<usize>, Vec<usize>) = order.into_iter().partition(|&i| self.x.get(i, feature) < threshold);
            left.push(l);
            right.push(r);
        }
        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf { weight: 0.0 });
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[idx] = Node::Split {
            feature,
            threshold,
            left: l,
            right: r,
        };
        idx
    }
}

fn mse(y: &[f64], pred: &[f64]) -> f64 {
    y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
}

/// Fits a boosted ensemble to `x` under squared loss.
///
/// A constant target yields a base-score-only ensemble.
pub fn gbt_fit(x: &DesignMatrix, params: &GbtParams) -> Result<GbtEnsemble, RegressError> {
    params.validate()?;
    let (n, p) = (x.rows(), x.cols());
    if n < 2 {
        return Err(RegressError::TooFewRows { needed: 2, found: n });
    }
    let y = x.target();
    let base_score = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base_score; n];
    let mut ensemble = GbtEnsemble {
        base_score,
        trees: Vec::new(),
        params: params.clone(),
        n_features: p,
        train_loss: vec![mse(y, &pred)],
    };
    if y.iter().all(|v| *v == y[0]) {
        return Ok(ensemble);
    }

    let presorted: Vec<Vec<usize>> = (0..p)
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));
            idx
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut in_sample = vec![true; n];

    for _ in 0..params.rounds {
        for i in 0..n {
            grad[i] = pred[i] - y[i];
            hess[i] = 1.0;
        }
        if let Some(goss) = params.goss {
            let (idx, w) = goss_sample(&grad, goss.a, goss.b, &mut rng)?;
            in_sample.iter_mut().for_each(|s| *s = false);
            let mut weight = vec![0.0; n];
            for (i, wi) in idx.into_iter().zip(w) {
                in_sample[i] = true;
                weight[i] = wi;
            }
            for i in 0..n {
                grad[i] *= weight[i];
                hess[i] *= weight[i];
            }
        }
        let sorted: Vec<Vec<usize>> = presorted
            .iter()
            .map(|o| o.iter().copied().filter(|&i| in_sample[i]).collect())
            .collect();
        let mut grower = Grower {
            x,
            grad: &grad,
            hess: &hess,
            params,
            nodes: Vec::new(),
        };
        grower.grow(sorted, 0);
        let tree = Tree { nodes: grower.nodes };
        for (i, pi) in pred.iter_mut().enumerate() {
            *pi += params.learning_rate * tree.leaf_weight(x.row(i));
        }
        ensemble.trees.push(tree);
        ensemble.train_loss.push(mse(y, &pred));
    }
    Ok(ensemble)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_target_is_base_score_only() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let m = gbt_fit(
            &DesignMatrix::from_rows(&rows, vec![5.0; 10]).unwrap(),
            &GbtParams::default(),
        )
        .unwrap();
        assert!(m.trees.is_empty());
        assert_eq!(m.predict(&[123.0]).unwrap(), 5.0);
    }

    #[test]
    fn single_split_is_recovered() {
        let xs: Vec<f64> = (-5..5).map(|i| i as f64 + 0.5).collect();
        let y: Vec<f64> = xs.iter().map(|v| if *v > 0.0 { 1.0 } else { 0.0 }).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|v| vec![*v]).collect();
        let params = GbtParams {
            rounds: 1,
            learning_rate: 1.0,
            max_depth: 1,
            reg_lambda: 0.0,
            ..GbtParams::default()
        };
        let m = gbt_fit(&DesignMatrix::from_rows(&rows, y.clone()).unwrap(), &params).unwrap();
        for (r, t) in rows.iter().zip(&y) {
            assert!((m.predict(r).unwrap() - t).abs() < 1e-9);
        }
        assert_eq!(m.trees[0].depth(), 1);
    }

    #[test]
    fn rejects_invalid_params() {
        let x = DesignMatrix::from_rows(&[vec![0.0], vec![1.0]], vec![0.0, 1.0]).unwrap();
        for p in [
            GbtParams {
                rounds: 0,
                ..GbtParams::default()
            },
            GbtParams {
                learning_rate: 1.5,
                ..GbtParams::default()
            },
            GbtParams {
                goss: Some(GossParams { a: 0.7, b: 0.7 }),
                ..GbtParams::default()
            },
        ] {
            assert!(matches!(gbt_fit(&x, &p), Err(RegressError::InvalidParams(_))));
        }
    }
}
