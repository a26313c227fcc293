//! JSON records printed by the subcommands. Every record deserializes back
//! from its own output.

use hardylab_core::bellman::{BurkholderReport, SpecialBranch, SpecialFnSpec};
use hardylab_core::constants::boundary_value;
use hardylab_core::{Branch, ConstantResult, Params, PiecewisePowerFn, SampledFn, ViolationReport};
use serde::{Deserialize, Serialize};

use crate::round12;

fn round_pair((a, b): (f64, f64)) -> [f64; 2] {
    [round12(a), round12(b)]
}

pub fn round_report(r: &ViolationReport) -> ViolationReport {
    ViolationReport {
        max_violation: round12(r.max_violation),
        witness_x: r.witness_x.map(round12),
        witness_y: r.witness_y.map(round12),
        ..r.clone()
    }
}

fn round_burkholder(r: &BurkholderReport) -> BurkholderReport {
    BurkholderReport {
        majorization: round_report(&r.majorization),
        initial: round_report(&r.initial),
        maximal: round_report(&r.maximal),
        concavity: round_report(&r.concavity),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantRecord {
    pub p: f64,
    pub m: f64,
    pub lambda: f64,
    pub gamma: f64,
    #[serde(rename = "C_pow_p")]
    pub c_pow_p: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub branch: Branch,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmax: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_p: Option<f64>,
    pub conjectured_value: f64,
    pub boundary_value: f64,
}

impl ConstantRecord {
    pub fn new(params: &Params, result: &ConstantResult) -> Self {
        ConstantRecord {
            p: params.p,
            m: params.m,
            lambda: params.lambda,
            gamma: round12(params.gamma()),
            c_pow_p: round12(result.c_pow_p),
            c: round12(result.c),
            branch: result.branch,
            argmax: result.argmax.map(round_pair),
            alpha_p: result.alpha_p.map(round12),
            conjectured_value: round12(params.lambda / params.gamma() - 1.0),
            boundary_value: round12(boundary_value(params)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub p: f64,
    pub m: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `c^p` from the ratio formula.
    pub c_ratio: f64,
    /// The same quantity from the norms of the extremal family.
    pub ratio_extremal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRecord {
    pub p: f64,
    pub m: f64,
    pub lambda: f64,
    #[serde(rename = "C_pow_p")]
    pub c_pow_p: f64,
    pub branch: Branch,
    /// Where the extremal family is evaluated.
    pub witness: [f64; 2],
    /// `argmax`, `alpha_p` or `probe`.
    pub witness_source: String,
    pub ratio_at_witness: f64,
    pub gap: f64,
    /// Largest ratio over the eight neighbours of the witness at distance
    /// `1e-3`.
    pub near_max: f64,
    /// Whether the gap is held to the `1e-6` tolerance (interior optimum).
    pub gap_checked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorizeRecord {
    pub p: f64,
    pub m: f64,
    pub lambda: f64,
    pub branch: SpecialBranch,
    pub c_pow_p: f64,
    pub forced: bool,
    pub slope: f64,
    pub d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub majorization: ViolationReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burkholder: Option<BurkholderReport>,
    pub passed: bool,
}

impl MajorizeRecord {
    pub fn new(
        spec: &SpecialFnSpec,
        forced: bool,
        majorization: &ViolationReport,
        burkholder: Option<&BurkholderReport>,
    ) -> Self {
        let passed = majorization.passed && burkholder.is_none_or(BurkholderReport::passed);
        MajorizeRecord {
            p: spec.params.p,
            m: spec.params.m,
            lambda: spec.params.lambda,
            branch: spec.branch,
            c_pow_p: round12(spec.c_pow_p),
            forced,
            slope: round12(spec.slope),
            d: round12(spec.d()),
            anchors: spec.anchors.map(round_pair),
            warnings: spec.warnings.clone(),
            majorization: round_report(majorization),
            burkholder: burkholder.map(round_burkholder),
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub trees: u64,
    pub violations: u64,
    pub max_ratio: f64,
    pub constant: f64,
    pub depth: usize,
    pub max_branch: usize,
    pub value_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleRecord {
    pub alpha: f64,
    pub s: f64,
    pub n: u64,
    pub p: f64,
    pub beta: f64,
    /// Whether `(1−s)β^p > 1`.
    pub growth_condition: bool,
    pub exact_ratio: f64,
    pub limit_ratio: f64,
    pub gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuzz: Option<FuzzSummary>,
}

/// Either function representation, told apart by its fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionData {
    Piecewise(PiecewisePowerFn),
    Sampled(SampledFn),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ApplyOp {
    /// `H_m f`.
    Hm,
    /// `f − λH_m f`.
    Residual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplyRecord {
    pub op: ApplyOp,
    pub p: f64,
    pub m: f64,
    pub lambda: f64,
    /// `(0,inf)` for piecewise-power input, `[0,T]` for sampled input.
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<FunctionData>,
}
