//! Membership functions, five-term linguistic partitions and fuzzification.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const TERM_COUNT: usize = 5;
pub const TERM_NAMES: [&str; TERM_COUNT] = ["very_low", "low", "medium", "high", "very_high"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl TrapezoidParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if !(a <= b && b <= c && c <= d) {
            return Err(invalid(format!(
                "trapezoid needs a <= b <= c <= d, got {a}, {b}, {c}, {d}"
            )));
        }
        Ok(Self { a, b, c, d })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiParams {
    /// Half-width: distance from the center to the feet.
    pub b: f64,
    pub c: f64,
}

impl PiParams {
    pub fn new(b: f64, c: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(invalid(format!("pi half-width must be positive, got {b}")));
        }
        Ok(Self { b, c })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a <= b && b <= c) {
            return Err(invalid(format!("S-function needs a <= b <= c, got {a}, {b}, {c}")));
        }
        Ok(Self { a, b, c })
    }

    /// Crossover at the midpoint, the only placement continuous at `b`.
    pub fn centered(a: f64, c: f64) -> Result<Self> {
        Self::new(a, 0.5 * (a + c), c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TriangleParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a <= b && b <= c) {
            return Err(invalid(format!("triangle needs a <= b <= c, got {a}, {b}, {c}")));
        }
        Ok(Self { a, b, c })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussParams {
    pub c: f64,
    pub sigma: f64,
}

impl GaussParams {
    pub fn new(c: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(invalid(format!("gaussian sigma must be positive, got {sigma}")));
        }
        Ok(Self { c, sigma })
    }
}

/// Trapezoid. Equal breakpoints give step edges; the half-open intervals
/// decide which side a breakpoint belongs to.
pub fn trapezoid(x: f64, p: &TrapezoidParams) -> f64 {
    if x < p.a {
        0.0
    } else if x < p.b {
        (x - p.a) / (p.b - p.a)
    } else if x < p.c {
        1.0
    } else if x < p.d {
        (p.d - x) / (p.d - p.c)
    } else {
        0.0
    }
}

/// Zadeh's S-function: quadratic rise from 0 at `a` to 1 at `c`.
pub fn s_function(x: f64, p: &SParams) -> f64 {
    if x < p.a {
        return 0.0;
    }
    if x > p.c {
        return 1.0;
    }
    let width = p.c - p.a;
    if width == 0.0 {
        return 1.0;
    }
    if x < p.b {
        2.0 * ((x - p.a) / width).powi(2)
    } else {
        1.0 - 2.0 * ((x - p.c) / width).powi(2)
    }
}

/// Bell built from an S-function rising to the center and a mirrored one
/// falling away from it. Crossover points sit at `c ± b/2`.
pub fn pi_function(x: f64, p: &PiParams) -> f64 {
    if x <= p.c {
        let left = SParams {
            a: p.c - p.b,
            b: p.c - p.b / 2.0,
            c: p.c,
        };
        s_function(x, &left)
    } else {
        let right = SParams {
            a: p.c,
            b: p.c + p.b / 2.0,
            c: p.c + p.b,
        };
        1.0 - s_function(x, &right)
    }
}

pub fn triangle(x: f64, p: &TriangleParams) -> f64 {
    if x < p.a || x > p.c {
        0.0
    } else if x < p.b {
        (x - p.a) / (p.b - p.a)
    } else if x == p.b {
        1.0
    } else {
        (p.c - x) / (p.c - p.b)
    }
}

pub fn gaussian(x: f64, p: &GaussParams) -> f64 {
    (-(x - p.c).powi(2) / (2.0 * p.sigma * p.sigma)).exp()
}

/// A single linguistic term's membership function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum MembershipFn {
    Trapezoid(TrapezoidParams),
    Triangle(TriangleParams),
    Pi(PiParams),
    Gaussian(GaussParams),
    /// Rising S-curve, 1 for everything right of `c`.
    S(SParams),
    /// Falling mirror of the S-curve, 1 for everything left of `a`.
    Z(SParams),
    /// 1 up to `c`, linear fall to 0 at `d`.
    LeftShoulder {
        c: f64,
        d: f64,
    },
    /// 0 up to `a`, linear rise to 1 at `b`, 1 beyond.
    RightShoulder {
        a: f64,
        b: f64,
    },
}

impl MembershipFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            MembershipFn::Trapezoid(p) => trapezoid(x, p),
            MembershipFn::Triangle(p) => triangle(x, p),
            MembershipFn::Pi(p) => pi_function(x, p),
            MembershipFn::Gaussian(p) => gaussian(x, p),
            MembershipFn::S(p) => s_function(x, p),
            MembershipFn::Z(p) => 1.0 - s_function(x, p),
            MembershipFn::LeftShoulder { c, d } => {
                if x < *c {
                    1.0
                } else if x < *d {
                    (d - x) / (d - c)
                } else {
                    0.0
                }
            }
            MembershipFn::RightShoulder { a, b } => {
                if x < *a {
                    0.0
                } else if x < *b {
                    (x - a) / (b - a)
                } else {
                    1.0
                }
            }
        }
    }

    /// A point of full membership (for shoulders, the inner end of the
    /// plateau).
    pub fn center(&self) -> f64 {
        match self {
            MembershipFn::Trapezoid(p) => 0.5 * (p.b + p.c),
            MembershipFn::Triangle(p) => p.b,
            MembershipFn::Pi(p) => p.c,
            MembershipFn::Gaussian(p) => p.c,
            MembershipFn::S(p) => p.c,
            MembershipFn::Z(p) => p.a,
            MembershipFn::LeftShoulder { c, .. } => *c,
            MembershipFn::RightShoulder { b, .. } => *b,
        }
    }
}

/// Which family the terms of a partition are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[default]
    Trapezoid,
    Pi,
    S,
    Triangle,
    Gaussian,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Trapezoid,
        Family::Pi,
        Family::S,
        Family::Triangle,
        Family::Gaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Trapezoid => "trapezoid",
            Family::Pi => "pi",
            Family::S => "s",
            Family::Triangle => "triangle",
            Family::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| invalid(format!("unknown membership family `{s}`")))
    }
}

/// Five evenly spaced terms over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermPartition {
    lo: f64,
    hi: f64,
    family: Family,
    centers: [f64; TERM_COUNT],
    terms: [MembershipFn; TERM_COUNT],
}

impl TermPartition {
    /// Centers at `lo + k·s`, `s = (hi − lo)/4`.
    ///
    /// Trapezoids get a plateau of half-width `s/4` and ramps that meet the
    /// neighbour's ramps exactly, so the five memberships sum to one; the
    /// edge terms are open shoulders. Triangles (apex to neighbour's apex),
    /// π-bells (`b = s`) and S/Z shoulders also sum to one. Gaussians use
    /// `σ` chosen so adjacent terms cross at 0.5 halfway between centers.
    pub fn build(lo: f64, hi: f64, family: Family) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(format!("partition needs finite lo < hi, got [{lo}, {hi}]")));
        }
        let s = (hi - lo) / 4.0;
        let center = |k: usize| if k == TERM_COUNT - 1 { hi } else { lo + k as f64 * s };
        let last = TERM_COUNT - 1;
        let terms: [MembershipFn; TERM_COUNT] = std::array::from_fn(|k| {
            let c = center(k);
            match family {
                Family::Trapezoid => {
                    let w = s / 4.0;
                    if k == 0 {
                        MembershipFn::LeftShoulder { c: c + w, d: c + s - w }
                    } else if k == last {
                        MembershipFn::RightShoulder { a: c - s + w, b: c - w }
                    } else {
                        MembershipFn::Trapezoid(TrapezoidParams {
                            a: c - s + w,
                            b: c - w,
                            c: c + w,
                            d: c + s - w,
                        })
                    }
                }
                Family::Triangle => {
                    if k == 0 {
                        MembershipFn::LeftShoulder { c, d: c + s }
                    } else if k == last {
                        MembershipFn::RightShoulder { a: c - s, b: c }
                    } else {
                        MembershipFn::Triangle(TriangleParams {
                            a: c - s,
                            b: c,
                            c: c + s,
                        })
                    }
                }
                Family::Pi => MembershipFn::Pi(PiParams { b: s, c }),
                Family::S => {
                    if k == 0 {
                        MembershipFn::Z(SParams {
                            a: c,
                            b: c + s / 2.0,
                            c: c + s,
                        })
                    } else if k == last {
                        MembershipFn::S(SParams {
                            a: c - s,
                            b: c - s / 2.0,
                            c,
                        })
                    } else {
                        MembershipFn::Pi(PiParams { b: s, c })
                    }
                }
                Family::Gaussian => {
                    let sigma = (s / 2.0) / (2.0 * std::f64::consts::LN_2).sqrt();
                    MembershipFn::Gaussian(GaussParams { c, sigma })
                }
            }
        });
        Ok(Self {
            lo,
            hi,
            family,
            centers: std::array::from_fn(center),
            terms,
        })
    }

    /// Fit to the observed range of one feature. A constant feature gets a
    /// unit-wide range around its value.
    pub fn fit(values: impl IntoIterator<Item = f64>, family: Family) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(invalid("cannot fit a partition to an empty or non-finite column"));
        }
        if lo == hi {
            lo -= 0.5;
            hi += 0.5;
        }
        Self::build(lo, hi, family)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn terms(&self) -> &[MembershipFn; TERM_COUNT] {
        &self.terms
    }

    /// Nominal term centers `lo + k·s`.
    pub fn centers(&self) -> [f64; TERM_COUNT] {
        self.centers
    }

    /// Memberships of `x` in every term, after clamping `x` into `[lo, hi]`.
    pub fn memberships(&self, x: f64) -> [f64; TERM_COUNT] {
        let x = x.clamp(self.lo, self.hi);
        self.terms.map(|t| t.eval(x).clamp(0.0, 1.0))
    }

    /// Check the invariants of a deserialized partition.
    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) {
            return Err(Error::Schema("partition needs lo < hi".into()));
        }
        let c = self.centers();
        if c.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Schema("partition term centers must increase".into()));
        }
        Ok(())
    }
}

/// Fit one partition per feature column.
pub fn fit_partitions(rows: &[Vec<f64>], family: Family) -> Result<Vec<TermPartition>> {
    let n_f = rows
        .first()
        .map(Vec::len)
        .ok_or_else(|| invalid("no rows to fit partitions"))?;
    (0..n_f)
        .map(|j| TermPartition::fit(rows.iter().map(|r| r[j]), family))
        .collect()
}

/// `n_f × n_term` membership degrees for one sample, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    values: Vec<f64>,
    n_features: usize,
    n_terms: usize,
}

impl MembershipMatrix {
    pub fn new(values: Vec<f64>, n_features: usize, n_terms: usize) -> Result<Self> {
        if values.len() != n_features * n_terms {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {n_features}x{n_terms} membership matrix",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid(format!("membership {v} outside [0,1]")));
        }
        Ok(Self {
            values,
            n_features,
            n_terms,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn get(&self, feature: usize, term: usize) -> f64 {
        self.values[feature * self.n_terms + term]
    }

    pub fn row(&self, feature: usize) -> &[f64] {
        &self.values[feature * self.n_terms..(feature + 1) * self.n_terms]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

pub fn fuzzify(features: &[f64], partitions: &[TermPartition]) -> Result<MembershipMatrix> {
    if features.len() != partitions.len() {
        return Err(invalid(format!(
            "{} features but {} partitions",
            features.len(),
            partitions.len()
        )));
    }
    let values = features
        .iter()
        .zip(partitions)
        .flat_map(|(&x, p)| p.memberships(x))
        .collect();
    Ok(MembershipMatrix {
        values,
        n_features: features.len(),
        n_terms: TERM_COUNT,
    })
}
