use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::par;
use crate::seed::{self, AuditRng};
use crate::survival::data::SurvivalData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_estimators: 50,
            max_depth: 5,
            min_samples_split: 10,
            min_samples_leaf: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Nelson-Aalen cumulative hazard at the leaf's distinct event times.
    Leaf {
        times: Vec<f64>,
        cumhaz: Vec<f64>,
        n_samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub seed: u64,
}

impl Tree {
    fn leaf_for(&self, row: &[f64]) -> &Node {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if row[*feature] <= *threshold { *left } else { *right },
                leaf => return leaf,
            }
        }
    }

    pub fn root_split_feature(&self) -> Option<usize> {
        match self.nodes.first()? {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub params: ForestParams,
    pub seed: u64,
    pub n_features: usize,
}

/// Step-function cumulative hazard evaluation.
fn step_at(times: &[f64], values: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|&x| x <= t);
    if k == 0 {
        0.0
    } else {
        values[k - 1]
    }
}

fn nelson_aalen(idx: &[usize], times: &[f64], events: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let mut sorted: Vec<usize> = idx.to_vec();
    sorted.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut out_t = Vec::new();
    let mut out_h = Vec::new();
    let mut at_risk = sorted.len();
    let mut acc = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let t = times[sorted[i]];
        let mut j = i;
        let mut d = 0;
        while j < sorted.len() && times[sorted[j]] == t {
            d += usize::from(events[sorted[j]]);
            j += 1;
        }
        if d > 0 {
            acc += d as f64 / at_risk as f64;
            out_t.push(t);
            out_h.push(acc);
        }
        at_risk -= j - i;
        i = j;
    }
    (out_t, out_h)
}

/// Fenwick tree of sums.
struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick { tree: vec![0.0; n + 1] }
    }

    fn add(&mut self, pos: usize, v: f64) {
        let mut i = pos + 1;
        while i < self.tree.len() {
            self.tree[i] += v;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over positions `< pos`.
    fn prefix(&self, pos: usize) -> f64 {
        let mut i = pos;
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Per-node quantities of the log-rank statistic that do not depend on the split feature.
struct NodeRisk {
    /// Prefix sums over distinct event times `τ_k ≤ t` evaluated at each sample's own time.
    a: Vec<f64>,
    c: Vec<f64>,
    w: Vec<f64>,
    /// Rank of each sample's time among the node's distinct times.
    rank: Vec<usize>,
    n_ranks: usize,
}

impl NodeRisk {
    /// `idx` positions are local: the returned vectors are aligned with `idx`.
    fn new(idx: &[usize], times: &[f64], events: &[bool]) -> Self {
        let n = idx.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| times[idx[a]].total_cmp(&times[idx[b]]));
        let (mut a, mut c, mut w) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut rank = vec![0; n];
        let (mut acc_a, mut acc_c, mut acc_w) = (0.0, 0.0, 0.0);
        let mut at_risk = n;
        let mut i = 0;
        let mut r = 0;
        while i < n {
            let t = times[idx[order[i]]];
            let mut j = i;
            let mut d = 0usize;
            while j < n && times[idx[order[j]]] == t {
                d += usize::from(events[idx[order[j]]]);
                j += 1;
            }
            if d > 0 {
                let y = at_risk as f64;
                let df = d as f64;
                acc_a += df / y;
                let ck = if at_risk > 1 { df * (y - df) / (y * (y - 1.0)) } else { 0.0 };
                acc_c += ck;
                acc_w += ck / y;
            }
            for &k in &order[i..j] {
                a[k] = acc_a;
                c[k] = acc_c;
                w[k] = acc_w;
                rank[k] = r;
            }
            at_risk -= j - i;
            r += 1;
            i = j;
        }
        NodeRisk {
            a,
            c,
            w,
            rank,
            n_ranks: r,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct SplitChoice {
    feature: usize,
    threshold: f64,
    stat: f64,
}

/// Best log-rank split of the node. Candidates are visited in the given (shuffled) order until
/// `mtry` non-constant features have been scanned; constant features do not use up the budget.
/// Each scan runs once over the sorted feature with O(log n) updates of the statistic.
fn best_split(
    idx: &[usize],
    x: &DMatrix<f64>,
    times: &[f64],
    events: &[bool],
    candidates: &[usize],
    mtry: usize,
    min_leaf: usize,
) -> Option<SplitChoice> {
    let n = idx.len();
    let risk = NodeRisk::new(idx, times, events);
    let mut best: Option<SplitChoice> = None;
    let mut order: Vec<usize> = (0..n).collect();
    let mut visited = 0;
    for &f in candidates {
        if visited >= mtry {
            break;
        }
        order.sort_by(|&a, &b| x[(idx[a], f)].total_cmp(&x[(idx[b], f)]));
        if x[(idx[order[0]], f)] == x[(idx[order[n - 1]], f)] {
            continue;
        }
        visited += 1;
        let mut w_tree = Fenwick::new(risk.n_ranks);
        let mut cnt_tree = Fenwick::new(risk.n_ranks);
        let (mut u, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (pos, &k) in order.iter().enumerate().take(n - 1) {
            let rk = risk.rank[k];
            let n_left = pos as f64;
            let cnt_lt = cnt_tree.prefix(rk);
            let sum_lt = w_tree.prefix(rk);
            let q = risk.w[k] * (n_left - cnt_lt) + sum_lt;
            s2 += 2.0 * q + risk.w[k];
            s1 += risk.c[k];
            u += f64::from(u8::from(events[idx[k]])) - risk.a[k];
            w_tree.add(rk, risk.w[k]);
            cnt_tree.add(rk, 1.0);

            let left = pos + 1;
            let (v_here, v_next) = (x[(idx[k], f)], x[(idx[order[pos + 1]], f)]);
            if v_here == v_next || left < min_leaf || n - left < min_leaf {
                continue;
            }
            let var = s1 - s2;
            if !(var > 1e-12) {
                continue;
            }
            let stat = u.abs() / var.sqrt();
            if best.is_none_or(|b| stat > b.stat) {
                best = Some(SplitChoice {
                    feature: f,
                    threshold: (v_here + v_next) / 2.0,
                    stat,
                });
            }
        }
    }
    best
}

fn build_tree(data: &SurvivalData, params: &ForestParams, tree_seed: u64) -> Tree {
    let mut rng: AuditRng = seed::rng(tree_seed);
    let n = data.n();
    let p = data.n_features();
    let boot: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mtry = ((p as f64).sqrt().floor() as usize).clamp(1, p.max(1));
    let mut nodes: Vec<Node> = Vec::new();
    // (node slot, samples, depth)
    let mut stack = vec![(0usize, boot, 0usize)];
    nodes.push(Node::Leaf {
        times: Vec::new(),
        cumhaz: Vec::new(),
        n_samples: 0,
    });
    while let Some((slot, idx, depth)) = stack.pop() {
        let can_split = depth < params.max_depth
            && idx.len() >= params.min_samples_split
            && idx.len() >= 2 * params.min_samples_leaf
            && idx.iter().any(|&i| data.events[i])
            && p > 0;
        let choice = if can_split {
            let mut features: Vec<usize> = (0..p).collect();
            features.shuffle(&mut rng);
            best_split(&idx, &data.x, &data.times, &data.events, &features, mtry, params.min_samples_leaf.max(1))
        } else {
            None
        };
        match choice {
            Some(ch) => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| data.x[(i, ch.feature)] <= ch.threshold);
                let (li, ri) = (nodes.len(), nodes.len() + 1);
                for _ in 0..2 {
                    nodes.push(Node::Leaf {
                        times: Vec::new(),
                        cumhaz: Vec::new(),
                        n_samples: 0,
                    });
                }
                nodes[slot] = Node::Split {
                    feature: ch.feature,
                    threshold: ch.threshold,
                    left: li,
                    right: ri,
                };
                stack.push((ri, r, depth + 1));
                stack.push((li, l, depth + 1));
            }
            None => {
                let (times, cumhaz) = nelson_aalen(&idx, &data.times, &data.events);
                nodes[slot] = Node::Leaf {
                    times,
                    cumhaz,
                    n_samples: idx.len(),
                };
            }
        }
    }
    Tree { nodes, seed: tree_seed }
}

/// Bootstrap ensemble of log-rank survival trees; trees are fitted independently from
/// per-tree seed streams, so results do not depend on thread count.
pub fn fit_rsf(data: &SurvivalData, params: &ForestParams, seed_value: u64) -> Result<ForestModel> {
    if params.n_estimators == 0 {
        return Err(AuditError::Config("forest needs at least one tree".into()));
    }
    if data.n() < 2 {
        return Err(AuditError::InsufficientData("forest needs at least two rows".into()));
    }
    let trees = par::map_range(params.n_estimators, |t| {
        build_tree(data, params, seed::derive_indexed(seed_value, "rsf-tree", t as u64))
    });
    Ok(ForestModel {
        trees,
        params: *params,
        seed: seed_value,
        n_features: data.n_features(),
    })
}

impl ForestModel {
    fn check_width(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.ncols() != self.n_features {
            return Err(AuditError::SchemaMismatch(format!(
                "forest expects {} features, got {}",
                self.n_features,
                x.ncols()
            )));
        }
        Ok(())
    }

    /// `n x grid` ensemble-mean cumulative hazard.
    pub fn predict_cumulative_hazard(&self, x: &DMatrix<f64>, grid: &[f64]) -> Result<DMatrix<f64>> {
        self.check_width(x)?;
        let rows = par::map_range(x.nrows(), |i| {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            let mut acc = vec![0.0; grid.len()];
            for tree in &self.trees {
                if let Node::Leaf { times, cumhaz, .. } = tree.leaf_for(&row) {
                    for (a, &t) in acc.iter_mut().zip(grid) {
                        *a += step_at(times, cumhaz, t);
                    }
                }
            }
            let m = self.trees.len() as f64;
            acc.iter().map(|v| v / m).collect::<Vec<f64>>()
        });
        Ok(DMatrix::from_fn(x.nrows(), grid.len(), |i, k| rows[i][k]))
    }

    pub fn predict_survival(&self, x: &DMatrix<f64>, grid: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.predict_cumulative_hazard(x, grid)?.map(|h| (-h).exp()))
    }

    /// Ensemble cumulative hazard at `horizon`.
    pub fn predict_risk(&self, x: &DMatrix<f64>, horizon: f64) -> Result<Vec<f64>> {
        let h = self.predict_cumulative_hazard(x, &[horizon])?;
        Ok(h.column(0).iter().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Feature 0 separates early from late deaths; features 1..4 are constant.
    fn separable(n: usize) -> SurvivalData {
        let mut rng = seed::rng(17);
        let mut x = DMatrix::zeros(n, 4);
        let mut times = Vec::new();
        for i in 0..n {
            let g = i % 2;
            x[(i, 0)] = g as f64 + rng.random_range(-0.2..0.2);
            x[(i, 3)] = 1.0;
            times.push(if g == 0 { rng.random_range(1.0..10.0) } else { rng.random_range(50.0..60.0) });
        }
        SurvivalData::new(times, vec![true; n], x, (0..4).map(|j| format!("f{j}")).collect()).unwrap()
    }

    /// O(n * events) log-rank statistic, straight from the definition.
    fn logrank_oracle(times: &[f64], events: &[bool], left: &[bool]) -> f64 {
        let mut ts: Vec<f64> = times.iter().zip(events).filter(|p| *p.1).map(|p| *p.0).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let (mut u, mut v) = (0.0, 0.0);
        for &t in &ts {
            let y = times.iter().filter(|&&s| s >= t).count() as f64;
            let yl = times.iter().zip(left).filter(|p| *p.0 >= t && *p.1).count() as f64;
            let d = times.iter().zip(events).filter(|p| *p.0 == t && *p.1).count() as f64;
            let dl = (0..times.len()).filter(|&i| times[i] == t && events[i] && left[i]).count() as f64;
            u += dl - yl * d / y;
            if y > 1.0 {
                v += yl / y * (1.0 - yl / y) * d * (y - d) / (y - 1.0);
            }
        }
        u.abs() / v.sqrt()
    }

    #[test]
    fn incremental_split_matches_definition() {
        let mut rng = seed::rng(5);
        for _ in 0..20 {
            let n = 30;
            let times: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(1u32..12))).collect();
            let events: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
            let xs: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0u32..8))).collect();
            let x = DMatrix::from_column_slice(n, 1, &xs);
            let idx: Vec<usize> = (0..n).collect();
            let Some(best) = best_split(&idx, &x, &times, &events, &[0], 1, 1) else {
                continue;
            };
            let mut thresholds: Vec<f64> = xs.clone();
            thresholds.sort_by(f64::total_cmp);
            thresholds.dedup();
            let oracle = thresholds
                .windows(2)
                .map(|w| {
                    let left: Vec<bool> = xs.iter().map(|&v| v <= (w[0] + w[1]) / 2.0).collect();
                    logrank_oracle(&times, &events, &left)
                })
                .filter(|s| s.is_finite())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((best.stat - oracle).abs() < 1e-9, "{} vs {}", best.stat, oracle);
        }
    }

    #[test]
    fn depth_zero_is_marginal_nelson_aalen() {
        let data = separable(40);
        let params = ForestParams {
            n_estimators: 3,
            max_depth: 0,
            min_samples_split: 2,
            min_samples_leaf: 1,
        };
        let f = fit_rsf(&data, &params, 1).unwrap();
        assert!(f.trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn separating_feature_is_chosen_first() {
        let data = separable(200);
        let f = fit_rsf(&data, &ForestParams::default(), 3).unwrap();
        let on_zero = f.trees.iter().filter(|t| t.root_split_feature() == Some(0)).count();
        assert!(on_zero as f64 >= 0.9 * f.trees.len() as f64);
        let risk = f.predict_risk(&data.x, 30.0).unwrap();
        let early: f64 = (0..200).step_by(2).map(|i| risk[i]).sum::<f64>() / 100.0;
        let late: f64 = (1..200).step_by(2).map(|i| risk[i]).sum::<f64>() / 100.0;
        assert!(early > late);
    }

    #[test]
    fn leaves_respect_min_samples_and_seed_determinism() {
        let data = separable(120);
        let params = ForestParams {
            n_estimators: 10,
            max_depth: 10,
            min_samples_split: 2,
            min_samples_leaf: 4,
        };
        let a = fit_rsf(&data, &params, 99).unwrap();
        let b = fit_rsf(&data, &params, 99).unwrap();
        assert_eq!(a, b);
        for t in &a.trees {
            for leaf in t.leaves() {
                if let Node::Leaf { n_samples, .. } = leaf {
                    assert!(*n_samples >= 4);
                }
            }
        }
        let s = a.predict_survival(&data.x, &[0.0, 5.0]).unwrap();
        assert!((0..data.n()).all(|i| s[(i, 0)] == 1.0 && s[(i, 1)] <= 1.0));
    }
}
