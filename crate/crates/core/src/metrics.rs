//! Miss-rate, equal opportunity difference, Cohen's h and the pooled
//! two-proportion z-test.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_2_SQRT_PI, SQRT_2};
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::JointName;

/// Significance level used to flag z-test results.
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

/// True-positive and false-negative counts for one subgroup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct SubgroupCounts {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl SubgroupCounts {
    pub const fn new(tp: u64, fn_: u64) -> Self {
        SubgroupCounts { tp, fn_ }
    }

    /// Support `n = tp + fn`.
    pub fn support(&self) -> u64 {
        self.tp + self.fn_
    }
}

impl Add for SubgroupCounts {
    type Output = SubgroupCounts;

    fn add(self, rhs: SubgroupCounts) -> SubgroupCounts {
        SubgroupCounts::new(self.tp + rhs.tp, self.fn_ + rhs.fn_)
    }
}

/// `fn / (tp + fn)`. Empty subgroups have no rate.
pub fn miss_rate(c: SubgroupCounts) -> Result<f64> {
    match c.support() {
        0 => Err(Error::UndefinedRate),
        n => Ok(c.fn_ as f64 / n as f64),
    }
}

/// Minority/majority roles for a pair of subgroups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSpec<V> {
    pub dimension: String,
    pub minority: V,
    pub majority: V,
    /// Display label such as `F-L`.
    pub label: String,
    /// Supports were equal and the majority was picked lexicographically.
    pub tie: bool,
}

/// Assigns the majority role to the subgroup with the larger support.
///
/// Equal supports make the lexicographically smaller value (by its display
/// form) the majority, with `tie` set.
pub fn resolve_majority<V: fmt::Display + Clone>(
    dimension: &str,
    label: &str,
    a: (V, SubgroupCounts),
    b: (V, SubgroupCounts),
) -> Result<PairSpec<V>> {
    let (na, nb) = (a.1.support(), b.1.support());
    if na == 0 || nb == 0 {
        return Err(Error::UndefinedRate);
    }
    let tie = na == nb;
    let a_major = if tie { a.0.to_string() <= b.0.to_string() } else { na > nb };
    let (majority, minority) = if a_major { (a.0, b.0) } else { (b.0, a.0) };
    Ok(PairSpec {
        dimension: dimension.to_string(),
        minority,
        majority,
        label: label.to_string(),
        tie,
    })
}

/// Like [`resolve_majority`], but equal supports hand the majority role to
/// `reference_majority` (the subgroup that dominates typical street scenes)
/// instead of the lexicographic choice.
pub fn resolve_majority_with_reference<V: fmt::Display + Clone + PartialEq>(
    dimension: &str,
    label: &str,
    a: (V, SubgroupCounts),
    b: (V, SubgroupCounts),
    reference_majority: &V,
) -> Result<PairSpec<V>> {
    let mut spec = resolve_majority(dimension, label, a, b)?;
    if spec.tie && spec.minority == *reference_majority {
        std::mem::swap(&mut spec.minority, &mut spec.majority);
    }
    Ok(spec)
}

/// Equal opportunity difference `MR_min - MR_maj`.
pub fn eod(min: SubgroupCounts, maj: SubgroupCounts) -> Result<f64> {
    Ok(miss_rate(min)? - miss_rate(maj)?)
}

fn arcsine_sqrt(p: f64) -> f64 {
    p.sqrt().asin()
}

/// Cohen's h on the miss-rates, in radians: `2 (asin sqrt MR_min - asin sqrt MR_maj)`.
pub fn cohens_h(min: SubgroupCounts, maj: SubgroupCounts) -> Result<f64> {
    Ok(2.0 * (arcsine_sqrt(miss_rate(min)?) - arcsine_sqrt(miss_rate(maj)?)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTest {
    /// Infinite when the pooled variance is zero but the rates differ.
    pub z: f64,
    /// Two-sided.
    pub p_value: f64,
    /// Pooled variance was zero.
    pub degenerate: bool,
}

impl ZTest {
    pub fn significant(&self) -> bool {
        self.p_value < SIGNIFICANCE_LEVEL
    }
}

/// Pooled two-proportion z-test on the miss-rates, two-sided.
pub fn z_test(min: SubgroupCounts, maj: SubgroupCounts) -> Result<ZTest> {
    let (p1, p2) = (miss_rate(min)?, miss_rate(maj)?);
    let (n1, n2) = (min.support() as f64, maj.support() as f64);
    let pooled = (min.fn_ + maj.fn_) as f64 / (n1 + n2);
    let var = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2);
    if var <= 0.0 {
        // pooled rate is 0 or 1, so both rates are equal
        let z = if p1 == p2 { 0.0 } else { f64::INFINITY.copysign(p1 - p2) };
        let p_value = if p1 == p2 { 1.0 } else { 0.0 };
        return Ok(ZTest {
            z,
            p_value,
            degenerate: true,
        });
    }
    let z = (p1 - p2) / var.sqrt();
    Ok(ZTest {
        z,
        p_value: two_sided_p(z),
        degenerate: false,
    })
}

/// Two-sided standard normal tail probability `P(|Z| >= |z|)`.
pub fn two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    erfc(z.abs() / SQRT_2).min(1.0)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Complementary error function.
///
/// For `|x| < 3` this sums the all-positive series
/// `erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (2n+1)!!`,
/// which has no cancellation; beyond that it evaluates the Laplace continued
/// fraction `erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`
/// from the tail. Both routes are accurate to a few ulps of `erf` or `erfc`
/// respectively, so absolute error stays well below 1e-14.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 3.0 {
        return 1.0 - erf_series(x);
    }
    if x > 27.3 {
        return 0.0;
    }
    // backward evaluation of the continued fraction; 80 terms is ample for x >= 3
    let mut tail = x;
    for k in (1..=80).rev() {
        tail = x + (k as f64 / 2.0) / tail;
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * tail)
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// Coarse body regions used to aggregate joint-occlusion effects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyRegion {
    Lower,
    Upper,
    Head,
}

impl BodyRegion {
    pub const ALL: [BodyRegion; 3] = [BodyRegion::Lower, BodyRegion::Upper, BodyRegion::Head];

    pub fn as_str(self) -> &'static str {
        match self {
            BodyRegion::Lower => "lower",
            BodyRegion::Upper => "upper",
            BodyRegion::Head => "head",
        }
    }

    pub fn joints(self) -> &'static [JointName] {
        use JointName::*;
        match self {
            BodyRegion::Lower => &[AnkleLeft, AnkleRight, KneeLeft, KneeRight, HipLeft, HipRight],
            BodyRegion::Upper => &[WristLeft, WristRight, ElbowLeft, ElbowRight, ShoulderLeft, ShoulderRight],
            BodyRegion::Head => &[EarLeft, EarRight, EyeLeft, EyeRight, Nose],
        }
    }
}

impl fmt::Display for BodyRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Mean of the member-joint values of a body region.
pub fn region_average(joint_eods: &BTreeMap<JointName, f64>, region: BodyRegion) -> Result<f64> {
    let members = region.joints();
    let mut sum = 0.0;
    for j in members {
        sum += joint_eods.get(j).ok_or_else(|| Error::IncompleteRegion {
            region: region.to_string(),
            joint: j.to_string(),
        })?;
    }
    Ok(sum / members.len() as f64)
}

/// Every fairness statistic for one minority/majority pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessCell {
    pub mr_min: f64,
    pub mr_maj: f64,
    pub eod: f64,
    pub h: f64,
    pub abs_h: f64,
    pub z: f64,
    pub p_value: f64,
    pub significant: bool,
    pub degenerate_variance: bool,
    pub n_min: u64,
    pub n_maj: u64,
}

impl FairnessCell {
    pub fn compute(min: SubgroupCounts, maj: SubgroupCounts) -> Result<FairnessCell> {
        let h = cohens_h(min, maj)?;
        let z = z_test(min, maj)?;
        Ok(FairnessCell {
            mr_min: miss_rate(min)?,
            mr_maj: miss_rate(maj)?,
            eod: eod(min, maj)?,
            h,
            abs_h: h.abs(),
            z: z.z,
            p_value: z.p_value,
            significant: z.significant(),
            degenerate_variance: z.degenerate,
            n_min: min.support(),
            n_maj: maj.support(),
        })
    }
}
