//! Closed-form hitting-time distributions of the rewinding walk.
//!
//! `T` is the first step at which the walk started on the lower node 0
//! reaches the upper node 0 (the commutator has been applied once); the
//! return time to the lower node 0 is the sum of two independent copies of
//! `T`. For odd `t = 2m − 1`
//!
//! ```text
//! P(T = t) = Σ_{n=1..m} (−1)^{n+1} C(1/2, n) C(1 − 2n, m − n) (2p)^{2n−1} (2p − 1)^{m−n}
//! ```
//!
//! with `0⁰ = 1`, and every even step has probability zero. Its generating
//! function `f(α) = E[α^T]` solves `αp f² + (α² − 2pα² − 1) f + pα = 0`.
//!
//! Exact evaluation works on [`BigRational`]; double-precision inputs are
//! converted to their exact dyadic value first, so the alternating sums
//! never cancel in floating point. Long horizons use an O(t) recurrence in
//! doubles instead (see [`first_passage_series`]).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{rational_to_f64, Probability};

/// Probability mass function over step counts `t = 0..=t_max`.
///
/// Index 0 is stored (always zero) so that `probs[t]` is the mass at `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingDist<T = f64> {
    probs: Vec<T>,
}

impl<T: Clone + Zero> HittingDist<T> {
    /// Builds from masses at `t = 1..=t_max`.
    pub fn from_steps(steps: impl IntoIterator<Item = T>) -> Self {
        let mut probs = vec![T::zero()];
        probs.extend(steps);
        HittingDist { probs }
    }

    pub(crate) fn from_raw(probs: Vec<T>) -> Self {
        debug_assert!(!probs.is_empty());
        HittingDist { probs }
    }

    pub fn t_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// Mass at step `t`; zero beyond the horizon.
    pub fn get(&self, t: usize) -> T {
        self.probs.get(t).cloned().unwrap_or_else(T::zero)
    }

    /// `(t, mass)` for `t = 1..=t_max`.
    pub fn steps(&self) -> impl Iterator<Item = (usize, &T)> + '_ {
        self.probs.iter().enumerate().skip(1)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.probs
    }
}

impl HittingDist<BigRational> {
    pub fn to_f64(&self) -> HittingDist<f64> {
        HittingDist {
            probs: self.probs.iter().map(rational_to_f64).collect(),
        }
    }
}

impl HittingDist<f64> {
    pub fn total(&self) -> f64 {
        neumaier_sum(self.probs.iter().copied())
    }
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in xs {
        let t = sum + x;
        if f64::abs(sum) >= f64::abs(x) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Generalized binomial coefficient `r (r−1) ⋯ (r−k+1) / k!`.
pub fn gen_binomial(r: &BigRational, k: u64) -> BigRational {
    let mut acc = BigRational::one();
    for i in 0..k {
        acc = acc * (r - BigRational::from_integer(i.into())) / BigRational::from_integer((i + 1).into());
    }
    acc
}

fn half() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// `(−1)^{n+1} C(1/2, n)` for `n = 0..=n_max`; all entries are positive for `n ≥ 1`.
fn signed_half_binomials(n_max: u64) -> Vec<BigRational> {
    let h = half();
    let mut out = Vec::with_capacity(n_max as usize + 1);
    let mut c = BigRational::one();
    for n in 0..=n_max {
        if n > 0 {
            c = c * (&h - int(n as i64 - 1)) / int(n as i64);
        }
        out.push(if n % 2 == 1 { c.clone() } else { -c.clone() });
    }
    out
}

/// Inner sum for odd `t = 2m − 1`, given precomputed powers.
fn first_passage_term(m: u64, signed: &[BigRational], two_p_pows: &[BigRational], a_pows: &[BigRational]) -> BigRational {
    let mut acc = BigRational::zero();
    for n in 1..=m {
        let b = gen_binomial(&int(1 - 2 * n as i64), m - n);
        acc += &signed[n as usize] * b * &two_p_pows[(2 * n - 1) as usize] * &a_pows[(m - n) as usize];
    }
    acc
}

fn powers(base: &BigRational, k_max: u64) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(k_max as usize + 1);
    let mut acc = BigRational::one();
    for k in 0..=k_max {
        // explicit 1 at k = 0 implements 0⁰ = 1
        out.push(if k == 0 { BigRational::one() } else { acc.clone() });
        acc *= base;
    }
    out
}

/// Exact `P(T = t)` from the double-sum formula.
pub fn first_passage_pmf_exact(p: &BigRational, t: u64) -> BigRational {
    if t == 0 || t.is_multiple_of(2) {
        return BigRational::zero();
    }
    let m = t.div_ceil(2);
    let signed = signed_half_binomials(m);
    let two_p = int(2) * p;
    let a = &two_p - int(1);
    first_passage_term(m, &signed, &powers(&two_p, 2 * m), &powers(&a, m))
}

/// Exact first-passage pmf for all `t ≤ t_max`.
pub fn first_passage_dist_exact(p: &BigRational, t_max: u64) -> HittingDist<BigRational> {
    let m_max = t_max.div_ceil(2);
    let signed = signed_half_binomials(m_max);
    let two_p = int(2) * p;
    let a = &two_p - int(1);
    let two_p_pows = powers(&two_p, 2 * m_max);
    let a_pows = powers(&a, m_max);
    let probs = (0..=t_max)
        .map(|t| {
            if t % 2 == 0 {
                BigRational::zero()
            } else {
                first_passage_term(t.div_ceil(2), &signed, &two_p_pows, &a_pows)
            }
        })
        .collect();
    HittingDist::from_raw(probs)
}

/// `P(T = t)` for a double `p`, evaluated exactly and rounded once.
pub fn first_passage_pmf(p: f64, t: u64) -> f64 {
    let r = Probability::Float(p).to_rational();
    rational_to_f64(&first_passage_pmf_exact(&r, t))
}

/// Exact return-time pmf from the triple-sum formula.
pub fn return_pmf_exact(p: &BigRational, t: u64) -> BigRational {
    if t == 0 || t % 2 == 1 {
        return BigRational::zero();
    }
    let m = t / 2;
    let signed = signed_half_binomials(m);
    let two_p = int(2) * p;
    let a = &two_p - int(1);
    let two_p_pows = powers(&two_p, 2 * m);
    let a_pows = powers(&a, m);
    // (−1)^{i+j} C(1/2,i) C(1/2,j) = [(−1)^{i+1} C(1/2,i)] [(−1)^{j+1} C(1/2,j)]
    let binom = |n: u64, k: u64| gen_binomial(&int(1 - 2 * n as i64), k);
    let mut acc = BigRational::zero();
    for k in 1..=m {
        for i in 1..=k {
            let left = &signed[i as usize] * binom(i, k - i);
            for j in 1..=(m - k + 1) {
                let right = &signed[j as usize] * binom(j, m - k + 1 - j);
                acc += &left
                    * right
                    * &two_p_pows[(2 * (i + j - 1)) as usize]
                    * &a_pows[(m + 1 - (i + j)) as usize];
            }
        }
    }
    acc
}

pub fn return_pmf(p: f64, t: u64) -> f64 {
    let r = Probability::Float(p).to_rational();
    rational_to_f64(&return_pmf_exact(&r, t))
}

/// Self-convolution `Σ_{k+l=t} a_k a_l` of a distribution.
pub fn self_convolve<T: Num + Clone>(d: &HittingDist<T>) -> HittingDist<T> {
    let a = d.as_slice();
    let n = a.len();
    let probs = (0..n)
        .map(|t| {
            let mut acc = T::zero();
            for k in 1..t {
                let (x, y) = (&a[k], &a[t - k]);
                if !x.is_zero() && !y.is_zero() {
                    acc = acc + x.clone() * y.clone();
                }
            }
            acc
        })
        .collect();
    HittingDist::from_raw(probs)
}

/// Taylor coefficients of the generating function from its quadratic.
///
/// Substituting `f = Σ cₜ αᵗ` into `f = pα + (1 − 2p) α² f + p α f²` gives
/// `cₜ = p·[t = 1] + (1 − 2p) c_{t−2} + p Σ_{i+j=t−1} cᵢ cⱼ`.
pub fn genfunc_series<T: Num + Clone>(p: &T, t_max: usize) -> HittingDist<T> {
    let one = T::one();
    let two = one.clone() + one.clone();
    let lin = one - two * p.clone();
    let mut c: Vec<T> = vec![T::zero(); t_max + 1];
    for t in 1..=t_max {
        let mut acc = if t == 1 { p.clone() } else { T::zero() };
        if t >= 2 {
            acc = acc + lin.clone() * c[t - 2].clone();
        }
        let mut conv = T::zero();
        for i in 1..t.saturating_sub(1) {
            let j = t - 1 - i;
            if !c[i].is_zero() && !c[j].is_zero() {
                conv = conv + c[i].clone() * c[j].clone();
            }
        }
        c[t] = acc + p.clone() * conv;
    }
    HittingDist::from_raw(c)
}

/// Closed form `E[α^T]` on the root that vanishes as `α → 0⁺`.
///
/// Evaluated as `2pα / (B + √(B² − 4p²α²))`, `B = 1 + (2p − 1)α²`, which
/// equals the minus-root expression without its cancellation and gives 0
/// at `p = 0`.
pub fn genfunc_closed(p: f64, alpha: f64) -> f64 {
    let b = 1.0 + (2.0 * p - 1.0) * alpha * alpha;
    let disc = (b * b - 4.0 * p * p * alpha * alpha).max(0.0);
    2.0 * p * alpha / (b + disc.sqrt())
}

/// First-passage pmf up to `t_max` in doubles, O(t_max).
///
/// `f(α) = (1 + aα² − √D(α²)) / (2pα)` with `a = 2p − 1` and
/// `D(u) = 1 + (2a − 4p²) u + a² u²`. The coefficients `gₖ` of `√D` obey
/// `2(k+1) g_{k+1} = c₁(1 − 2k) gₖ + 2c₂(2 − k) g_{k−1}` (from `2D g' = D' g`),
/// and `P(T = 2m − 1) = −g_m / (2p)` for `m ≥ 2`.
pub fn first_passage_series(p: f64, t_max: usize) -> HittingDist<f64> {
    let mut probs = vec![0.0; t_max + 1];
    if p == 0.0 || t_max == 0 {
        return HittingDist::from_raw(probs);
    }
    probs[1] = p;
    let a = 2.0 * p - 1.0;
    let c1 = 2.0 * a - 4.0 * p * p;
    let c2 = a * a;
    let m_max = t_max.div_ceil(2);
    let (mut g_prev, mut g) = (1.0, c1 / 2.0);
    for k in 1..m_max {
        let kf = k as f64;
        let g_next = (c1 * (1.0 - 2.0 * kf) * g + 2.0 * c2 * (2.0 - kf) * g_prev) / (2.0 * (kf + 1.0));
        g_prev = g;
        g = g_next;
        // g now holds g_{k+1}
        let t = 2 * (k + 1) - 1;
        if t <= t_max {
            probs[t] = (-g / (2.0 * p)).max(0.0);
        }
    }
    HittingDist::from_raw(probs)
}

/// Return-time pmf up to `t_max` in doubles, O(t_max).
///
/// From the quadratic, `f² = ((1 − (1 − 2p)α²) f − pα) / (pα)`, so the
/// return mass is `r_t = (c_{t+1} − (1 − 2p) c_{t−1}) / p`.
pub fn return_series(p: f64, t_max: usize) -> HittingDist<f64> {
    let mut probs = vec![0.0; t_max + 1];
    if p == 0.0 {
        return HittingDist::from_raw(probs);
    }
    let c = first_passage_series(p, t_max + 1);
    let lin = 1.0 - 2.0 * p;
    for t in (2..=t_max).step_by(2) {
        probs[t] = ((c.get(t + 1) - lin * c.get(t - 1)) / p).max(0.0);
    }
    HittingDist::from_raw(probs)
}

/// Which event a success curve measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveMode {
    /// Commutator applied once (first passage to the upper node 0).
    Commutator,
    /// Full rewind (return to the lower node 0).
    Full,
}

/// Probability that the event occurs within `m` gate uses.
pub fn cumulative_success(p: f64, m: usize, mode: CurveMode) -> f64 {
    let d = match mode {
        CurveMode::Commutator => first_passage_series(p, m),
        CurveMode::Full => return_series(p, m),
    };
    d.total().min(1.0)
}

/// Exact counterpart of [`cumulative_success`].
pub fn cumulative_success_exact(p: &BigRational, m: u64, mode: CurveMode) -> BigRational {
    let fp = first_passage_dist_exact(p, m);
    match mode {
        CurveMode::Commutator => fp.as_slice().iter().sum(),
        CurveMode::Full => self_convolve(&fp).as_slice().iter().sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessRow {
    pub m: usize,
    pub prob_commutator: f64,
    pub prob_full: f64,
}

/// Cumulative success probabilities for `m = 1..=m_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessCurve {
    pub rows: Vec<SuccessRow>,
}

impl SuccessCurve {
    pub fn for_probability(p: f64, m_max: usize) -> Self {
        let first = first_passage_series(p, m_max);
        let full = return_series(p, m_max);
        let mut rows = Vec::with_capacity(m_max);
        let (mut c_sum, mut c_comp) = (0.0, 0.0);
        let (mut f_sum, mut f_comp) = (0.0, 0.0);
        for m in 1..=m_max {
            kahan_add(&mut c_sum, &mut c_comp, first.get(m));
            kahan_add(&mut f_sum, &mut f_comp, full.get(m));
            let prob_commutator = (c_sum + c_comp).min(1.0);
            rows.push(SuccessRow {
                m,
                prob_commutator,
                // the full rewind passes through the commutator node first
                prob_full: (f_sum + f_comp).min(prob_commutator),
            });
        }
        SuccessCurve { rows }
    }
}

fn kahan_add(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

/// Grid spacing used by [`required_m`].
pub const REQUIRED_M_GRID_STEP: f64 = 0.001;
/// Largest horizon [`required_m`] will search.
pub const REQUIRED_M_MAX_HORIZON: usize = 1 << 24;

/// Timing constants for the running-time bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Free-evolution step `ΔT`.
    pub dt: f64,
    /// Duration of one gate, `τ`.
    pub tau: f64,
    /// Rewind depth in units of `ΔT`.
    pub s: u64,
}

impl Timing {
    /// `m (ΔT + τ) + s ΔT`.
    pub fn bound(&self, m: usize) -> f64 {
        m as f64 * (self.dt + self.tau) + self.s as f64 * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequiredM {
    pub m: usize,
    /// Grid point that needed the largest budget.
    pub worst_p: f64,
    pub time_bound: Option<f64>,
}

/// Grid `p_min, p_min + 0.001, …` capped at (and always including) 1.
pub fn probability_grid(p_min: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut k = 0u64;
    loop {
        let p = p_min + k as f64 * REQUIRED_M_GRID_STEP;
        if p >= 1.0 - 1e-12 {
            break;
        }
        grid.push(p);
        k += 1;
    }
    grid.push(1.0);
    grid
}

/// Smallest even `m` with full-rewind probability `≥ q` at this `p`.
fn required_m_at(p: f64, q: f64) -> Result<usize> {
    let mut horizon = 64;
    loop {
        let d = return_series(p, horizon);
        let (mut sum, mut comp) = (0.0, 0.0);
        for t in (2..=horizon).step_by(2) {
            kahan_add(&mut sum, &mut comp, d.get(t));
            if sum + comp >= q {
                return Ok(t);
            }
        }
        if horizon >= REQUIRED_M_MAX_HORIZON {
            return Err(Error::HorizonExceeded { p });
        }
        horizon *= 4;
    }
}

/// Smallest even gate budget reaching rewind probability `q` for every
/// `p ∈ [p_min, 1]` on a 0.001 grid.
pub fn required_m(p_min: f64, q: f64, timing: Option<Timing>) -> Result<RequiredM> {
    if !(p_min > 0.0 && p_min <= 1.0) {
        return Err(Error::InvalidArgument(format!("p_min must lie in (0, 1], got {p_min}")));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!("q must lie in (0, 1), got {q}")));
    }
    let per_point: Vec<(f64, usize)> = probability_grid(p_min)
        .into_par_iter()
        .map(|p| required_m_at(p, q).map(|m| (p, m)))
        .collect::<Result<_>>()?;
    let (worst_p, m) = per_point
        .into_iter()
        .fold((1.0, 0), |best, (p, m)| if m > best.1 { (p, m) } else { best });
    Ok(RequiredM {
        m,
        worst_p,
        time_bound: timing.map(|t| t.bound(m)),
    })
}
