//! Closed-form pruning-probability bounds and the probabilistic inequalities
//! they rest on.
//!
//! Notation: `n` pruning examples fall into `k` safe nodes, each example is
//! positive with probability `p > 1/2`, and `c > 0` scales the per-node
//! example budget `r = c·n/k` in the uniform-routing analysis.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::normal::{normal_cdf, normal_sf};

/// Which binomial tail the Slud step bounds. The uncorrected form uses
/// `Pr{X ≥ h}` for the strict event `X > h`; the corrected form shifts `h`
/// by one half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tail {
    #[default]
    Uncorrected,
    ContinuityCorrected,
}

impl Tail {
    fn shift(self) -> f64 {
        match self {
            Tail::Uncorrected => 0.0,
            Tail::ContinuityCorrected => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParams {
    pub n: u64,
    pub k: u64,
    pub p: f64,
    pub c: f64,
    pub lambda: f64,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        check_p("BoundParams", self.p)?;
        if self.n == 0 || self.k == 0 {
            return Err(Error::domain("BoundParams", "n and k must be positive"));
        }
        check_c("BoundParams", self.c)?;
        check_lambda("BoundParams", self.lambda)?;
        Ok(())
    }
}

fn check_p(op: &'static str, p: f64) -> Result<()> {
    if p > 0.5 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(op, format!("p must lie in (0.5, 1], got {p}")))
    }
}

fn check_c(op: &'static str, c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(op, format!("c must be positive, got {c}")))
    }
}

fn check_lambda(op: &'static str, lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(op, format!("lambda must be non-negative, got {lambda}")))
    }
}

/// Slud's lower bound on `Pr{X ≥ h}` for `X ~ B(m, q)`:
/// `1 − Φ((h − mq) / √(mq(1−q)))`, valid for `q ≤ 1/2` and `mq ≤ h ≤ m(1−q)`.
pub fn slud_lower_bound(m: u64, q: f64, h: f64) -> Result<f64> {
    const OP: &str = "slud_lower_bound";
    if m == 0 {
        return Err(Error::domain(OP, "m must be positive"));
    }
    if !(q > 0.0 && q <= 0.5) {
        return Err(Error::domain(OP, format!("q <= 1/2 violated (need 0 < q <= 1/2, got {q})")));
    }
    let m = m as f64;
    let mean = m * q;
    if h < mean {
        return Err(Error::domain(OP, format!("h >= mq violated ({h} < {mean})")));
    }
    if h > m * (1.0 - q) {
        return Err(Error::domain(
            OP,
            format!("m(1-q) >= h violated ({} < {h})", m * (1.0 - q)),
        ));
    }
    Ok(normal_sf((h - mean) / (mean * (1.0 - q)).sqrt()))
}

/// Lower bound on the probability that a node receiving `n_i` examples has a
/// strict negative majority: `1 − Φ((p − 1/2)·n_i / √(n_i·p(1−p)))`.
pub fn negative_majority_bound(n_i: u64, p: f64) -> Result<f64> {
    negative_majority_bound_with(n_i, p, Tail::Uncorrected)
}

pub fn negative_majority_bound_with(n_i: u64, p: f64, tail: Tail) -> Result<f64> {
    const OP: &str = "negative_majority_bound";
    check_p(OP, p)?;
    if n_i == 0 {
        return Err(Error::domain(OP, "n_i must be positive"));
    }
    let m = n_i as f64;
    if tail == Tail::ContinuityCorrected && m / 2.0 + 0.5 > m * p {
        return Err(Error::domain(
            OP,
            "continuity-corrected h = n_i/2 + 1/2 exceeds n_i·p",
        ));
    }
    Ok(1.0 - majority_base(m, p, tail))
}

/// `Φ(((p − 1/2)·r + shift) / √(r·p(1−p)))`: the per-node upper bound on
/// keeping a positive majority with `r` examples.
pub fn majority_base(r: f64, p: f64, tail: Tail) -> f64 {
    normal_cdf(((p - 0.5) * r + tail.shift()) / (r * p * (1.0 - p)).sqrt())
}

/// Upper bound on the probability that the whole tree collapses to a single
/// leaf: `Φ((p − 1/2)·r / √(r·p(1−p)))^(k/2)` with `r = 2n/k`.
pub fn eq2_pruning_upper_bound(n: u64, k: u64, p: f64) -> Result<f64> {
    eq2_pruning_upper_bound_with(n, k, p, Tail::Uncorrected)
}

pub fn eq2_pruning_upper_bound_with(n: u64, k: u64, p: f64, tail: Tail) -> Result<f64> {
    const OP: &str = "eq2_pruning_upper_bound";
    check_p(OP, p)?;
    if k == 0 || n < k {
        return Err(Error::domain(OP, format!("need n >= k >= 1, got n = {n}, k = {k}")));
    }
    let r = 2.0 * n as f64 / k as f64;
    Ok(majority_base(r, p, tail).powf(k as f64 / 2.0))
}

/// Normal approximation to the expected number of safe nodes receiving at
/// most `c·n/k` of `n` uniformly routed examples:
/// `k·Φ((c − 1)(n/k) / √((n/k)(1 − 1/k)))`.
pub fn eq4_expected_small_nodes(n: u64, k: u64, c: f64) -> Result<f64> {
    const OP: &str = "eq4_expected_small_nodes";
    if k < 2 {
        return Err(Error::domain(OP, format!("k must be at least 2, got {k}")));
    }
    if n == 0 {
        return Err(Error::domain(OP, "n must be positive"));
    }
    check_c(OP, c)?;
    let kf = k as f64;
    let mean = n as f64 / kf;
    Ok(kf * normal_cdf((c - 1.0) * mean / (mean * (1.0 - 1.0 / kf)).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Occupancy {
    /// `h(1 − 1/h)^m`
    pub exact: f64,
    /// `h·e^(−m/h)`
    pub approx: f64,
}

/// Expected number of empty bins after throwing `m` balls into `h` bins.
pub fn occupancy_expected_empty(m: u64, h: u64) -> Result<Occupancy> {
    if h == 0 {
        return Err(Error::domain("occupancy_expected_empty", "h must be at least 1"));
    }
    let hf = h as f64;
    let mf = m as f64;
    let exact = if m == 0 {
        hf
    } else {
        hf * (mf * (-1.0 / hf).ln_1p()).exp()
    };
    Ok(Occupancy {
        exact,
        approx: hf * (-mf / hf).exp(),
    })
}

/// `Pr{|Z − μ| ≥ λ} ≤ 2·exp(−λ²(h − 1/2)/(h² − μ²))` for the empty-bin count.
pub fn occupancy_deviation_bound(h: u64, mu: f64, lambda: f64) -> Result<f64> {
    const OP: &str = "occupancy_deviation_bound";
    if h == 0 {
        return Err(Error::domain(OP, "h must be at least 1"));
    }
    let hf = h as f64;
    if !(mu >= 0.0 && mu < hf) {
        return Err(Error::domain(OP, format!("need 0 <= mu < h, got mu = {mu}, h = {h}")));
    }
    check_lambda(OP, lambda)?;
    Ok(2.0 * (-lambda * lambda * (hf - 0.5) / (hf * hf - mu * mu)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eq5Bound {
    pub bound: f64,
    /// Expected number of safe nodes with between 1 and `c·n/k` examples.
    pub exponent_p: f64,
    /// Set when `exponent_p <= 0`; the bound is then reported as 1.
    pub vacuous: bool,
}

/// Uniform-routing bound `Φ((p − 1/2)·r / √(r·p(1−p)))^EP` with `r = c·n/k`
/// and `EP = EQ − k·e^(−n/k)`.
pub fn eq5_uniform_pruning_bound(n: u64, k: u64, p: f64, c: f64) -> Result<Eq5Bound> {
    const OP: &str = "eq5_uniform_pruning_bound";
    check_p(OP, p)?;
    let eq = eq4_expected_small_nodes(n, k, c)?;
    let kf = k as f64;
    let exponent_p = eq - kf * (-(n as f64) / kf).exp();
    if exponent_p <= 0.0 {
        return Ok(Eq5Bound {
            bound: 1.0,
            exponent_p,
            vacuous: true,
        });
    }
    let r = c * n as f64 / kf;
    Ok(Eq5Bound {
        bound: majority_base(r, p, Tail::Uncorrected).powf(exponent_p),
        exponent_p,
        vacuous: false,
    })
}

/// McDiarmid with unit bounded differences over `n` arguments:
/// `Pr{|Q − EQ| ≥ λ} ≤ 2·exp(−2λ²/n)`.
pub fn mcdiarmid_bound(n: u64, lambda: f64) -> Result<f64> {
    const OP: &str = "mcdiarmid_bound";
    if n == 0 {
        return Err(Error::domain(OP, "n must be positive"));
    }
    check_lambda(OP, lambda)?;
    Ok(2.0 * (-2.0 * lambda * lambda / n as f64).exp())
}

/// Deviation bound for `P = Q − R`, splitting λ evenly between the
/// small-node count `Q` and the empty-node count `R`:
/// `2·exp(−λ²/(2n)) + 2·exp(−λ²(k − 1/2)/(4(k² − ER²)))`.
pub fn p_deviation_bound(n: u64, k: u64, er: f64, lambda: f64) -> Result<f64> {
    const OP: &str = "p_deviation_bound";
    if n == 0 {
        return Err(Error::domain(OP, "n must be positive"));
    }
    if k == 0 {
        return Err(Error::domain(OP, "k must be positive"));
    }
    let kf = k as f64;
    if !(er >= 0.0 && er < kf) {
        return Err(Error::domain(OP, format!("need 0 <= ER < k, got ER = {er}")));
    }
    check_lambda(OP, lambda)?;
    let l2 = lambda * lambda;
    Ok(2.0 * (-l2 / (2.0 * n as f64)).exp()
        + 2.0 * (-l2 * (kf - 0.5) / (4.0 * (kf * kf - er * er))).exp())
}
