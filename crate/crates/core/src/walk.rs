//! Classical random walk that tracks which operator word the target carries.
//!
//! Nodes sit on two rows. A vertical move (the target left the gate through
//! the commutator port, applying `x`) toggles the row in place. A horizontal
//! move (anticommutator port, applying `y`) goes right on the lower row and
//! left on the upper row. Starting from the lower node 0, the word is `yᵏ`
//! on the lower node `k` and `x yᵏ` on the upper node `k`. Reaching the upper
//! node 0 means the accumulated word is proportional to `x`.

use num_traits::Num;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::HittingDist;
use crate::error::{Error, Result};
use crate::qgate::BranchOutcome;
use crate::streams::{share, worker_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Row {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WalkNode {
    pub row: Row,
    pub position: i64,
}

impl WalkNode {
    pub const ORIGIN: WalkNode = WalkNode {
        row: Row::Lower,
        position: 0,
    };
    /// Upper node 0: the commutator has been applied.
    pub const TARGET: WalkNode = WalkNode {
        row: Row::Upper,
        position: 0,
    };

    pub const fn new(row: Row, position: i64) -> Self {
        WalkNode { row, position }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Vertical,
    Horizontal,
}

impl BranchOutcome {
    pub fn direction(self) -> Option<Direction> {
        match self {
            BranchOutcome::Vertical => Some(Direction::Vertical),
            BranchOutcome::Horizontal => Some(Direction::Horizontal),
            BranchOutcome::Abort => None,
        }
    }
}

pub fn step_node(n: WalkNode, dir: Direction) -> WalkNode {
    match (dir, n.row) {
        (Direction::Vertical, Row::Lower) => WalkNode::new(Row::Upper, n.position),
        (Direction::Vertical, Row::Upper) => WalkNode::new(Row::Lower, n.position),
        (Direction::Horizontal, Row::Lower) => WalkNode::new(Row::Lower, n.position + 1),
        (Direction::Horizontal, Row::Upper) => WalkNode::new(Row::Upper, n.position - 1),
    }
}

/// Reduced form of the word `x`/`y` accumulated along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WordDescriptor {
    /// `yⁿ`
    YPow(u64),
    /// `x yⁿ`
    XYPow(u64),
}

impl WordDescriptor {
    /// Left-multiplies by `x` (vertical) or `y` (horizontal) and reduces
    /// with `x² ∝ 1` and `y x y ∝ x`.
    fn extend(self, dir: Direction) -> Option<Self> {
        use WordDescriptor::*;
        match (self, dir) {
            (YPow(n), Direction::Horizontal) => Some(YPow(n + 1)),
            (YPow(n), Direction::Vertical) => Some(XYPow(n)),
            (XYPow(n), Direction::Vertical) => Some(YPow(n)),
            // y·x·yⁿ = (y x y)·y^{n−1} ∝ x·y^{n−1}; y·x alone has no short form
            (XYPow(n), Direction::Horizontal) => n.checked_sub(1).map(XYPow),
        }
    }

    /// Node that carries this word during the first phase.
    pub fn node(self) -> WalkNode {
        match self {
            WordDescriptor::YPow(n) => WalkNode::new(Row::Lower, n as i64),
            WordDescriptor::XYPow(n) => WalkNode::new(Row::Upper, n as i64),
        }
    }
}

/// Reduces the word for a first-phase path from the origin ending at `n`.
///
/// Fails if the path continues past the upper node 0 or does not end at `n`.
pub fn node_word(n: WalkNode, moves: &[Direction]) -> Result<WordDescriptor> {
    let mut word = WordDescriptor::YPow(0);
    let mut node = WalkNode::ORIGIN;
    for (i, &dir) in moves.iter().enumerate() {
        if node == WalkNode::TARGET {
            return Err(Error::InconsistentPath(format!(
                "move {i} continues past the absorbing upper node 0"
            )));
        }
        word = word
            .extend(dir)
            .ok_or_else(|| Error::InconsistentPath(format!("move {i} leaves the first-phase graph")))?;
        node = step_node(node, dir);
        debug_assert_eq!(word.node(), node);
    }
    if node != n {
        return Err(Error::InconsistentPath(format!(
            "path ends at {node:?}, not {n:?}"
        )));
    }
    Ok(word)
}

fn sample_direction<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Direction {
    if rng.random::<f64>() < p {
        Direction::Vertical
    } else {
        Direction::Horizontal
    }
}

/// Default cap for untrimmed first-passage sampling.
pub const DEFAULT_TIMEOUT_CAP: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FirstPassage {
    Hit(u64),
    Timeout,
}

/// Walks from the origin until the upper node 0, giving up after `cap` steps.
pub fn sample_first_passage<R: Rng + ?Sized>(p: f64, rng: &mut R, cap: u64) -> FirstPassage {
    let mut node = WalkNode::ORIGIN;
    for t in 1..=cap {
        node = step_node(node, sample_direction(p, rng));
        if node == WalkNode::TARGET {
            return FirstPassage::Hit(t);
        }
    }
    FirstPassage::Timeout
}

/// Largest horizon accepted by the DP oracles.
pub const DP_MAX_HORIZON: usize = 10_000;

/// Exact first-passage pmf by forward propagation of probability mass.
///
/// Positions stay in `[0, t]` after `t` steps, so truncating at `t_max`
/// loses nothing within the horizon.
pub fn dp_first_passage<T: Num + Clone>(p: &T, t_max: usize) -> Result<HittingDist<T>> {
    check_horizon(t_max)?;
    let q = T::one() - p.clone();
    let width = t_max + 2;
    let mut lower = vec![T::zero(); width];
    let mut upper = vec![T::zero(); width];
    lower[0] = T::one();
    let mut probs = vec![T::zero(); t_max + 1];
    for (t, slot) in probs.iter_mut().enumerate().skip(1) {
        let reach = t.min(width - 1);
        let mut next_lower = vec![T::zero(); width];
        let mut next_upper = vec![T::zero(); width];
        for k in 0..reach {
            if !lower[k].is_zero() {
                next_lower[k + 1] = next_lower[k + 1].clone() + lower[k].clone() * q.clone();
                next_upper[k] = next_upper[k].clone() + lower[k].clone() * p.clone();
            }
            if !upper[k].is_zero() {
                next_lower[k] = next_lower[k].clone() + upper[k].clone() * p.clone();
                if k > 0 {
                    next_upper[k - 1] = next_upper[k - 1].clone() + upper[k].clone() * q.clone();
                }
            }
        }
        *slot = std::mem::replace(&mut next_upper[0], T::zero());
        lower = next_lower;
        upper = next_upper;
    }
    Ok(HittingDist::from_raw(probs))
}

/// Exact pmf of the return to the origin through the upper node 0.
///
/// The second phase runs on the mirror image of the graph; it is tracked on
/// its own arrays indexed by `−position`, with rows swapped.
pub fn dp_return<T: Num + Clone>(p: &T, t_max: usize) -> Result<HittingDist<T>> {
    check_horizon(t_max)?;
    let q = T::one() - p.clone();
    let width = t_max + 2;
    let zeros = || vec![T::zero(); width];
    // phase 1: (lower, upper) by position; phase 2: (near, far) where
    // near = upper row and far = lower row of the mirrored walk
    let (mut l1, mut u1) = (zeros(), zeros());
    let (mut u2, mut l2) = (zeros(), zeros());
    l1[0] = T::one();
    let mut probs = vec![T::zero(); t_max + 1];
    for (t, slot) in probs.iter_mut().enumerate().skip(1) {
        let reach = t.min(width - 1);
        let (mut nl1, mut nu1, mut nu2, mut nl2) = (zeros(), zeros(), zeros(), zeros());
        for k in 0..reach {
            if !l1[k].is_zero() {
                nl1[k + 1] = nl1[k + 1].clone() + l1[k].clone() * q.clone();
                nu1[k] = nu1[k].clone() + l1[k].clone() * p.clone();
            }
            if !u1[k].is_zero() {
                nl1[k] = nl1[k].clone() + u1[k].clone() * p.clone();
                if k > 0 {
                    nu1[k - 1] = nu1[k - 1].clone() + u1[k].clone() * q.clone();
                }
            }
            // mirrored: upper row moves outward (left), lower row inward (right)
            if !u2[k].is_zero() {
                nu2[k + 1] = nu2[k + 1].clone() + u2[k].clone() * q.clone();
                nl2[k] = nl2[k].clone() + u2[k].clone() * p.clone();
            }
            if !l2[k].is_zero() {
                nu2[k] = nu2[k].clone() + l2[k].clone() * p.clone();
                if k > 0 {
                    nl2[k - 1] = nl2[k - 1].clone() + l2[k].clone() * q.clone();
                }
            }
        }
        *slot = std::mem::replace(&mut nl2[0], T::zero());
        // mass that just reached the upper node 0 continues in phase 2
        let arrived = std::mem::replace(&mut nu1[0], T::zero());
        nu2[0] = nu2[0].clone() + arrived;
        l1 = nl1;
        u1 = nu1;
        u2 = nu2;
        l2 = nl2;
    }
    Ok(HittingDist::from_raw(probs))
}

fn check_horizon(t_max: usize) -> Result<()> {
    if t_max > DP_MAX_HORIZON {
        return Err(Error::InvalidArgument(format!(
            "DP horizon {t_max} exceeds {DP_MAX_HORIZON}"
        )));
    }
    Ok(())
}

/// Result of one gate-budgeted two-phase walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrimmedOutcome {
    pub success: bool,
    /// Gates used in total.
    pub q_count: u64,
    pub phase1_steps: u64,
    pub phase2_steps: u64,
    /// The upper node 0 was reached (the commutator was applied).
    pub reached_target: bool,
    pub aborted: bool,
}

/// Runs the walk from the origin to the upper node 0 and back to the
/// origin, with at most `m` gate uses over both phases.
pub fn run_walk_protocol<R: Rng + ?Sized>(p: f64, m: u64, rng: &mut R) -> Result<TrimmedOutcome> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("gate budget must be at least 2, got {m}")));
    }
    let mut node = WalkNode::ORIGIN;
    let mut phase1: Option<u64> = None;
    for q in 1..=m {
        node = step_node(node, sample_direction(p, rng));
        match phase1 {
            None if node == WalkNode::TARGET => phase1 = Some(q),
            Some(p1) if node == WalkNode::ORIGIN => {
                return Ok(TrimmedOutcome {
                    success: true,
                    q_count: q,
                    phase1_steps: p1,
                    phase2_steps: q - p1,
                    reached_target: true,
                    aborted: false,
                })
            }
            _ => {}
        }
    }
    let p1 = phase1.unwrap_or(m);
    Ok(TrimmedOutcome {
        success: false,
        q_count: m,
        phase1_steps: p1,
        phase2_steps: m - p1,
        reached_target: phase1.is_some(),
        aborted: false,
    })
}

/// Empirical first-passage histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageCounts {
    /// `counts[t]` = number of samples with `T = t`, for `t ≤ t_max`.
    pub counts: Vec<u64>,
    /// Samples with `T > t_max`.
    pub beyond: u64,
    pub runs: u64,
}

impl PassageCounts {
    pub fn to_dist(&self) -> HittingDist<f64> {
        let n = self.runs.max(1) as f64;
        HittingDist::from_raw(self.counts.iter().map(|&c| c as f64 / n).collect())
    }
}

/// Samples `runs` first passages over `workers` seeded streams.
pub fn mc_first_passage(p: f64, t_max: usize, runs: u64, seed: u64, workers: usize) -> PassageCounts {
    let workers = workers.max(1);
    let parts: Vec<Vec<u64>> = (0..workers)
        .into_par_iter()
        .map(|w| {
            let mut rng = worker_rng(seed, w);
            let mut counts = vec![0u64; t_max + 2];
            for _ in 0..share(runs, workers, w) {
                match sample_first_passage(p, &mut rng, t_max as u64) {
                    FirstPassage::Hit(t) => counts[t as usize] += 1,
                    FirstPassage::Timeout => counts[t_max + 1] += 1,
                }
            }
            counts
        })
        .collect();
    let mut counts = vec![0u64; t_max + 2];
    for part in parts {
        for (a, b) in counts.iter_mut().zip(part) {
            *a += b;
        }
    }
    let beyond = counts.pop().unwrap_or(0);
    PassageCounts { counts, beyond, runs }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::analytics::first_passage_pmf_exact;
    use num_rational::BigRational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use Direction::{Horizontal as H, Vertical as V};

    #[test]
    fn step_examples() {
        assert_eq!(step_node(WalkNode::ORIGIN, V), WalkNode::TARGET);
        assert_eq!(step_node(WalkNode::ORIGIN, H), WalkNode::new(Row::Lower, 1));
        assert_eq!(step_node(WalkNode::new(Row::Upper, 1), H), WalkNode::TARGET);
    }

    #[test]
    fn word_examples() {
        assert_eq!(node_word(WalkNode::ORIGIN, &[]).unwrap(), WordDescriptor::YPow(0));
        assert_eq!(
            node_word(WalkNode::new(Row::Upper, 1), &[H, V]).unwrap(),
            WordDescriptor::XYPow(1)
        );
        assert_eq!(node_word(WalkNode::TARGET, &[H, V, H]).unwrap(), WordDescriptor::XYPow(0));
        assert_eq!(
            node_word(WalkNode::new(Row::Lower, 2), &[H, V, V, H]).unwrap(),
            WordDescriptor::YPow(2)
        );
    }

    #[test]
    fn word_errors() {
        assert!(node_word(WalkNode::TARGET, &[V, V]).is_err());
        assert!(node_word(WalkNode::ORIGIN, &[V, H]).is_err());
        assert!(node_word(WalkNode::new(Row::Lower, 3), &[H]).is_err());
    }

    #[test]
    fn extreme_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_first_passage(1.0, &mut rng, 10), FirstPassage::Hit(1));
            assert_eq!(sample_first_passage(0.0, &mut rng, 50), FirstPassage::Timeout);
            let o = run_walk_protocol(1.0, 2, &mut rng).unwrap();
            assert!(o.success && o.q_count == 2);
            assert!(!run_walk_protocol(0.0, 20, &mut rng).unwrap().success);
        }
    }

    #[test]
    fn budget_below_two_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(run_walk_protocol(0.5, 1, &mut rng).is_err());
    }

    #[test]
    fn first_step_frequency() {
        let n = 1_000_000u64;
        let c = mc_first_passage(0.5, 1, n, 3, 4);
        let frac = c.counts[1] as f64 / n as f64;
        assert!((frac - 0.5).abs() < 5.0 * 0.0005, "{frac}");
    }

    #[test]
    fn two_gate_success_rate() {
        let n = 200_000;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let hits = (0..n)
            .filter(|_| run_walk_protocol(0.5, 2, &mut rng).unwrap().success)
            .count();
        let frac = hits as f64 / n as f64;
        let sigma = (0.25 * 0.75 / n as f64).sqrt();
        assert!((frac - 0.25).abs() < 5.0 * sigma, "{frac}");
    }

    #[test]
    fn dp_at_half() {
        let h = BigRational::new(1.into(), 2.into());
        let d = dp_first_passage(&h, 6).unwrap();
        assert_eq!(d.get(1), BigRational::new(1.into(), 2.into()));
        assert_eq!(d.get(3), BigRational::new(1.into(), 8.into()));
        assert_eq!(d.get(5), BigRational::new(1.into(), 16.into()));
        assert!(d.get(2) == BigRational::from_integer(0.into()));
    }

    #[test]
    fn dp_matches_path_enumeration() {
        // brute force over all 2^t move sequences
        fn enumerate(p: f64, t_max: usize) -> Vec<f64> {
            let mut out = vec![0.0; t_max + 1];
            for t in 1..=t_max {
                for mask in 0u32..(1 << t) {
                    let mut node = WalkNode::ORIGIN;
                    let mut prob = 1.0;
                    let mut hit_at = None;
                    for i in 0..t {
                        let dir = if mask >> i & 1 == 1 { V } else { H };
                        prob *= if dir == V { p } else { 1.0 - p };
                        node = step_node(node, dir);
                        if node == WalkNode::TARGET {
                            hit_at = Some(i + 1);
                            break;
                        }
                    }
                    if hit_at == Some(t) {
                        out[t] += prob;
                    }
                }
            }
            out
        }
        for p in [0.0, 0.2, 0.5, 0.85, 1.0] {
            let brute = enumerate(p, 12);
            let dp = dp_first_passage(&p, 12).unwrap();
            for t in 1..=12 {
                assert!((brute[t] - dp.get(t)).abs() < 1e-15, "p={p} t={t}");
            }
        }
    }

    #[test]
    fn dp_matches_formula() {
        for k in 0..=10 {
            let p = BigRational::new(k.into(), 10.into());
            let d = dp_first_passage(&p, 25).unwrap();
            for t in 0..=25u64 {
                assert_eq!(d.get(t as usize), first_passage_pmf_exact(&p, t));
            }
        }
    }

    #[test]
    fn dp_return_is_convolution() {
        for k in [1, 4, 5, 9] {
            let p = BigRational::new(k.into(), 10.into());
            let d = dp_first_passage(&p, 20).unwrap();
            let r = dp_return(&p, 20).unwrap();
            assert_eq!(r, crate::analytics::self_convolve(&d));
        }
    }

    #[test]
    fn dp_horizon_guard() {
        assert!(dp_first_passage(&0.5, DP_MAX_HORIZON + 1).is_err());
    }

    #[test]
    fn mc_deterministic_per_seed_and_workers() {
        let a = mc_first_passage(0.3, 21, 10_000, 9, 3);
        let b = mc_first_passage(0.3, 21, 10_000, 9, 3);
        assert_eq!(a, b);
        assert_eq!(a.counts.iter().sum::<u64>() + a.beyond, 10_000);
    }
}
