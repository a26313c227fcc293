//! The explicit extremal martingale and a fuzzer for the maximal inequality
//! `‖f_n − f_n*‖_p ≤ C_p ‖f_n‖_p`, where `f_n*` is the running maximum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::one_parameter_ratio;
use crate::{Error, Result, ViolationReport};

/// Attempts at drawing a usable set of children before giving up.
const RESAMPLE_BUDGET: usize = 1000;
/// Tolerance of the martingale-property check.
const MEAN_TOL: f64 = 1e-12;

/// Starts at 1; at each step a path still at `β^k` drops to `α·β^k` with
/// probability `s` and stays there, or moves to `β^(k+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalMartingale {
    pub alpha: f64,
    pub s: f64,
    pub n: u64,
    pub beta: f64,
}

impl ExtremalMartingale {
    pub fn new(alpha: f64, s: f64, n: u64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::ParamDomain(format!("s must lie in (0, 1), got {s}")));
        }
        if !alpha.is_finite() {
            return Err(Error::ParamDomain(format!("alpha must be finite, got {alpha}")));
        }
        Ok(ExtremalMartingale {
            alpha,
            s,
            n,
            beta: (1.0 - s * alpha) / (1.0 - s),
        })
    }

    /// `ln((1−s)β^p)`, computed without cancellation for small `s`.
    fn log_growth(&self, p: f64) -> f64 {
        let log_beta = (-self.s * self.alpha).ln_1p() - (-self.s).ln_1p();
        (-self.s).ln_1p() + p * log_beta
    }

    /// Whether `(1−s)β^p > 1`, the regime in which the top branch dominates
    /// `E|f_n|^p` as `n` grows.
    pub fn growth_condition(&self, p: f64) -> bool {
        self.log_growth(p) > 0.0
    }

    /// `s·Σ_{k<n}(1−s)^k + (1−s)^n` by compensated summation.
    pub fn total_probability(&self) -> f64 {
        let mut sum = 0.0;
        let mut compensation = 0.0;
        let log_stay = (-self.s).ln_1p();
        let mut add = |x: f64| {
            let t = sum + x;
            if f64::abs(sum) >= x.abs() {
                compensation += (sum - t) + x;
            } else {
                compensation += (x - t) + sum;
            }
            sum = t;
        };
        for k in 0..self.n {
            add(self.s * (k as f64 * log_stay).exp());
        }
        add((self.n as f64 * log_stay).exp());
        sum + compensation
    }

    /// The process as an explicit tree; dropped paths are leaves.
    pub fn to_tree(&self) -> SimpleMartingale {
        fn grow(em: &ExtremalMartingale, value: f64, prob: f64, remaining: u64) -> MartingaleNode {
            let children = if remaining == 0 {
                Vec::new()
            } else {
                vec![
                    MartingaleNode::leaf(em.alpha * value, em.s),
                    grow(em, em.beta * value, 1.0 - em.s, remaining - 1),
                ]
            };
            MartingaleNode { value, prob, children }
        }
        SimpleMartingale {
            root: grow(self, 1.0, 1.0, self.n),
        }
    }
}

/// `‖f_n − f_n*‖_p^p / ‖f_n‖_p^p` from the exact terminal law
/// `P(f_n = αβ^k) = s(1−s)^k`, `P(f_n = β^n) = (1−s)^n`.
///
/// Off the top branch `f_n − f_n* = (1 − 1/α) f_n`; on it the difference
/// vanishes. The geometric sums are evaluated in log space.
pub fn extremal_ratio_exact(em: &ExtremalMartingale, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::ParamDomain(format!("p must exceed 1, got {p}")));
    }
    if em.alpha == 0.0 {
        return Err(Error::ParamDomain("alpha = 0 makes 1 - 1/alpha undefined".into()));
    }
    if em.n == 0 {
        return Ok(0.0);
    }
    let n = em.n as f64;
    let log_q = em.log_growth(p);
    // top-branch mass (1−s)^n β^(np) over the geometric sum s·Σ_{k<n} q^k
    let top_over_sum = if log_q > 0.0 {
        log_q.exp_m1() / (em.s * -(-n * log_q).exp_m1())
    } else if log_q < 0.0 {
        -log_q.exp_m1() / (em.s * (-n * log_q).exp_m1())
    } else {
        1.0 / (em.s * n)
    };
    let alpha_pow = em.alpha.abs().powf(p);
    Ok((em.alpha - 1.0).abs().powf(p) / (alpha_pow + top_over_sum))
}

/// `|α−1|^p / (|α|^p − pα + p − 1)`, the `s → 0`, `n → ∞` limit.
pub fn limit_ratio(alpha: f64, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::ParamDomain(format!("p must exceed 1, got {p}")));
    }
    if alpha == 1.0 {
        return Err(Error::ParamDomain("alpha = 1 gives 0/0".into()));
    }
    Ok(one_parameter_ratio(alpha, p))
}

/// A node of a finite martingale tree. `prob` is conditional on the parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleNode {
    pub value: f64,
    pub prob: f64,
    #[serde(default)]
    pub children: Vec<MartingaleNode>,
}

impl MartingaleNode {
    pub fn leaf(value: f64, prob: f64) -> Self {
        MartingaleNode {
            value,
            prob,
            children: Vec::new(),
        }
    }

    fn depth(&self) -> usize {
        self.children.iter().map(|c| 1 + c.depth()).max().unwrap_or(0)
    }

    fn count(&self) -> usize {
        1 + self.children.iter().map(MartingaleNode::count).sum::<usize>()
    }
}

/// A simple martingale as a probability tree rooted at `f_0`. Leaves may sit
/// at different depths; a leaf keeps its value until the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimpleMartingale {
    pub root: MartingaleNode,
}

impl SimpleMartingale {
    pub fn constant(value: f64) -> Self {
        SimpleMartingale {
            root: MartingaleNode::leaf(value, 1.0),
        }
    }

    /// One step from `value` to `children`, with probabilities from
    /// [`mean_matching_probabilities`].
    pub fn one_step(value: f64, children: &[f64]) -> Result<Self> {
        let probs = mean_matching_probabilities(value, children)?;
        Ok(SimpleMartingale {
            root: MartingaleNode {
                value,
                prob: 1.0,
                children: children
                    .iter()
                    .zip(probs)
                    .map(|(&v, q)| MartingaleNode::leaf(v, q))
                    .collect(),
            },
        })
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn node_count(&self) -> usize {
        self.root.count()
    }

    /// Root probability 1; at every internal node the children's
    /// probabilities lie in `(0, 1]`, sum to 1 and reproduce the node's value
    /// as their mean, all within `1e-12`.
    pub fn check_invariants(&self) -> Result<()> {
        fn walk(node: &MartingaleNode) -> Result<()> {
            if !node.value.is_finite() {
                return Err(Error::Structural(format!("non-finite value {}", node.value)));
            }
            if node.children.is_empty() {
                return Ok(());
            }
            let total: f64 = node.children.iter().map(|c| c.prob).sum();
            let mean: f64 = node.children.iter().map(|c| c.prob * c.value).sum();
            if let Some(c) = node.children.iter().find(|c| !(c.prob > 0.0 && c.prob <= 1.0)) {
                return Err(Error::Structural(format!("probability {} outside (0, 1]", c.prob)));
            }
            if (total - 1.0).abs() > MEAN_TOL {
                return Err(Error::Structural(format!("children probabilities sum to {total}")));
            }
            if (mean - node.value).abs() > MEAN_TOL * node.value.abs().max(1.0) {
                return Err(Error::Structural(format!(
                    "children mean {mean} differs from node value {}",
                    node.value
                )));
            }
            node.children.iter().try_for_each(walk)
        }
        if (self.root.prob - 1.0).abs() > MEAN_TOL {
            return Err(Error::Structural(format!("root probability is {}", self.root.prob)));
        }
        walk(&self.root)
    }

    /// Terminal `(probability, f_n, f_n*)` for every leaf. With `absolute`,
    /// the process is `|f|` and the maximum is taken over `|f_k|`.
    fn leaves(&self, absolute: bool) -> Vec<(f64, f64, f64)> {
        fn walk(node: &MartingaleNode, mass: f64, running_max: f64, absolute: bool, out: &mut Vec<(f64, f64, f64)>) {
            let value = if absolute { node.value.abs() } else { node.value };
            let mass = mass * node.prob;
            let running_max = running_max.max(value);
            if node.children.is_empty() {
                out.push((mass, value, running_max));
            }
            for child in &node.children {
                walk(child, mass, running_max, absolute, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, 1.0, f64::NEG_INFINITY, absolute, &mut out);
        out
    }
}

/// Probabilities on `children` with mean `value`.
///
/// Every child below `value` is paired with every child above it; each pair
/// carries the two-point law with mean `value`, and the pairs are mixed with
/// equal weights. Children equal to `value`, or all on one side of it, are
/// rejected.
pub fn mean_matching_probabilities(value: f64, children: &[f64]) -> Result<Vec<f64>> {
    let below = children.iter().filter(|&&c| c < value).count();
    let above = children.iter().filter(|&&c| c > value).count();
    let weights = vec![1.0; below * above];
    mix_pairs(value, children, &weights)
}

fn mix_pairs(value: f64, children: &[f64], pair_weights: &[f64]) -> Result<Vec<f64>> {
    let below: Vec<usize> = (0..children.len()).filter(|&i| children[i] < value).collect();
    let above: Vec<usize> = (0..children.len()).filter(|&i| children[i] > value).collect();
    if below.is_empty() || above.is_empty() || below.len() + above.len() != children.len() {
        return Err(Error::Generation(format!(
            "children {children:?} must lie strictly on both sides of {value}"
        )));
    }
    let total_weight: f64 = pair_weights.iter().sum();
    let mut probs = vec![0.0; children.len()];
    let mut w = pair_weights.iter();
    for &l in &below {
        for &u in &above {
            let c = w.next().copied().unwrap_or(1.0) / total_weight;
            let (lo, hi) = (children[l], children[u]);
            probs[l] += c * (hi - value) / (hi - lo);
            probs[u] += c * (value - lo) / (hi - lo);
        }
    }
    Ok(probs)
}

/// Shape of the random trees drawn by [`random_simple_martingale`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeShape {
    pub depth: usize,
    pub max_branch: usize,
    pub value_scale: f64,
}

impl Default for TreeShape {
    fn default() -> Self {
        TreeShape {
            depth: 4,
            max_branch: 3,
            value_scale: 1.0,
        }
    }
}

/// A seeded random martingale tree of the given depth.
///
/// The root value is uniform in `[−scale, scale]`. Each internal node gets
/// between 2 and `max_branch` children with values uniform in
/// `[v − scale, v + scale]`; draws with all children on one side of `v`, or
/// one too close to `v`, are resampled. Probabilities mix the two-point
/// mean-matching laws of all below/above pairs with random weights.
pub fn random_simple_martingale(
    seed: u64,
    depth: usize,
    max_branch: usize,
    value_scale: f64,
) -> Result<SimpleMartingale> {
    if depth < 1 || max_branch < 2 || !(value_scale > 0.0) || !value_scale.is_finite() {
        return Err(Error::ParamDomain(format!(
            "need depth >= 1, max_branch >= 2 and a positive scale, got {depth}, {max_branch}, {value_scale}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root_value = rng.gen_range(-value_scale..=value_scale);
    let root = grow(&mut rng, root_value, 1.0, depth, max_branch, value_scale)?;
    Ok(SimpleMartingale { root })
}

fn grow(
    rng: &mut ChaCha8Rng,
    value: f64,
    prob: f64,
    remaining: usize,
    max_branch: usize,
    scale: f64,
) -> Result<MartingaleNode> {
    if remaining == 0 {
        return Ok(MartingaleNode::leaf(value, prob));
    }
    let min_gap = 1e-6 * scale;
    for _ in 0..RESAMPLE_BUDGET {
        let k = rng.gen_range(2..=max_branch);
        let values: Vec<f64> = (0..k).map(|_| value + rng.gen_range(-scale..=scale)).collect();
        if values.iter().any(|v| (v - value).abs() < min_gap) {
            continue;
        }
        let below = values.iter().filter(|&&v| v < value).count();
        let pair_weights: Vec<f64> = (0..below * (k - below)).map(|_| rng.gen_range(0.1..1.0)).collect();
        let Ok(probs) = mix_pairs(value, &values, &pair_weights) else {
            continue;
        };
        let children = values
            .into_iter()
            .zip(probs)
            .map(|(v, q)| grow(rng, v, q, remaining - 1, max_branch, scale))
            .collect::<Result<Vec<_>>>()?;
        return Ok(MartingaleNode { value, prob, children });
    }
    Err(Error::Generation(format!(
        "no admissible children around {value} after {RESAMPLE_BUDGET} draws"
    )))
}

/// Which process the maximal inequality is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaximalVariant {
    /// `f` itself with `f_n* = max_k f_k`.
    Martingale,
    /// The nonnegative submartingale `|f|` with its own running maximum.
    AbsSubmartingale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalReport {
    /// `‖f_n − f_n*‖_p`.
    pub lhs: f64,
    /// `C ‖f_n‖_p`.
    pub rhs: f64,
    /// `‖f_n − f_n*‖_p / ‖f_n‖_p`, or 0 when `f_n = 0`.
    pub ratio: f64,
    /// `(lhs − rhs) / rhs` against the caller's tolerance; the witness is
    /// the leaf with the largest `|f_n − f_n*|`.
    pub violation: ViolationReport,
}

/// Both sides of `‖f_n − f_n*‖_p ≤ C‖f_n‖_p` as exact finite sums over the
/// leaves.
pub fn verify_maximal_inequality(
    sm: &SimpleMartingale,
    p: f64,
    c: f64,
    variant: MaximalVariant,
    tol: f64,
) -> MaximalReport {
    let leaves = sm.leaves(variant == MaximalVariant::AbsSubmartingale);
    let gap_pow: f64 = leaves.iter().map(|(q, f, m)| q * (f - m).abs().powf(p)).sum();
    let norm_pow: f64 = leaves.iter().map(|(q, f, _)| q * f.abs().powf(p)).sum();
    let lhs = gap_pow.powf(1.0 / p);
    let norm = norm_pow.powf(1.0 / p);
    let rhs = c * norm;
    let ratio = if norm > 0.0 { lhs / norm } else { 0.0 };
    let excess = if lhs == 0.0 { 0.0 } else { (lhs - rhs) / rhs };

    let mut tracker = ViolationReport::tracker();
    let worst = leaves
        .iter()
        .copied()
        .max_by(|a, b| (a.1 - a.2).abs().total_cmp(&(b.1 - b.2).abs()));
    let (x, y) = worst.map_or((f64::NAN, f64::NAN), |(_, f, m)| (f, m));
    tracker.observe(excess, x, y);
    let mut violation = tracker.finish(tol);
    violation.points_checked = leaves.len() as u64;
    MaximalReport {
        lhs,
        rhs,
        ratio,
        violation,
    }
}

/// One fuzzer outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzRow {
    pub seed: u64,
    pub ratio: f64,
    pub passed: bool,
}

/// Runs [`verify_maximal_inequality`] on one random tree per seed, in
/// parallel; rows come back in seed order.
pub fn fuzz_maximal(
    seeds: std::ops::Range<u64>,
    shape: &TreeShape,
    p: f64,
    c: f64,
    variant: MaximalVariant,
    tol: f64,
) -> Result<Vec<FuzzRow>> {
    seeds
        .into_par_iter()
        .map(|seed| {
            let tree = random_simple_martingale(seed, shape.depth, shape.max_branch, shape.value_scale)?;
            let report = verify_maximal_inequality(&tree, p, c, variant, tol);
            Ok(FuzzRow {
                seed,
                ratio: report.ratio,
                passed: report.violation.passed,
            })
        })
        .collect()
}
