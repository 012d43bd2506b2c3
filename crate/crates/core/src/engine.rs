//! End-to-end simulation of the gate-budgeted rewinding protocol.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::SuccessCurve;
use crate::error::{Error, Result};
use crate::mat2::{
    branch_prob_invariant, branch_prob_state, ginibre, haar_unitary, shared_eigvec_pair, verify_prop1, Mat2, Prop1Report,
    UNITARY_TOL,
};
use crate::qgate::{apply_q, evolve_free, sample_branch, PureState};
use crate::streams::{share, worker_rng};
use crate::walk::{run_walk_protocol, step_node, WalkNode};

/// Singularity threshold for `det W` in contraction mode.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Unitary,
    Contraction,
}

/// What drives the branch choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Full amplitude simulation with these interaction and free-evolution matrices.
    Matrices { v: Mat2, w: Mat2 },
    /// Classical walk with this vertical-port probability.
    Probability(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub source: Source,
    /// Rewind depth; the target is rewound by `s·dt`.
    pub s: u64,
    /// Gate budget over both phases.
    pub m: u64,
    pub dt: f64,
    pub tau: f64,
    pub seed: u64,
    pub runs: u64,
    pub workers: usize,
    pub mode: Mode,
    /// Fixed initial state; Haar-random per run when absent.
    pub initial_state: Option<PureState>,
}

impl ProtocolConfig {
    pub fn new(source: Source) -> Self {
        ProtocolConfig {
            source,
            s: 0,
            m: 2,
            dt: 1.0,
            tau: 1.0,
            seed: 0,
            runs: 1,
            workers: 1,
            mode: Mode::Unitary,
            initial_state: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidArgument(format!("gate budget must be at least 2, got {}", self.m)));
        }
        if !(self.dt > 0.0 && self.tau > 0.0 && self.dt.is_finite() && self.tau.is_finite()) {
            return Err(Error::InvalidArgument("dt and tau must be positive".into()));
        }
        if self.runs == 0 || self.workers == 0 {
            return Err(Error::InvalidArgument("runs and workers must be positive".into()));
        }
        match (&self.source, self.mode) {
            (Source::Probability(p), _) => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidProbability(p.to_string()));
                }
            }
            (Source::Matrices { v, w }, Mode::Unitary) => {
                if !v.is_unitary(UNITARY_TOL) || !w.is_unitary(UNITARY_TOL) {
                    return Err(Error::NotUnitary);
                }
            }
            (Source::Matrices { v, w }, Mode::Contraction) => {
                if !v.is_contraction(UNITARY_TOL) || !w.is_contraction(UNITARY_TOL) {
                    return Err(Error::NotContraction);
                }
                if self.s > 0 && w.inverse(SINGULAR_TOL).is_none() {
                    return Err(Error::SingularW);
                }
            }
        }
        if let Some(psi) = &self.initial_state {
            if psi.normalized().is_none() {
                return Err(Error::InvalidArgument("initial state is zero".into()));
            }
        }
        Ok(())
    }

    /// Model running time of a run that used `q_count` gates.
    pub fn elapsed(&self, q_count: u64, waited: bool) -> f64 {
        let wait = if waited { self.s as f64 * self.dt } else { 0.0 };
        q_count as f64 * (self.dt + self.tau) + wait
    }

    /// `m (ΔT + τ) + s ΔT`.
    pub fn time_bound(&self) -> f64 {
        self.elapsed(self.m, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RunOutcome {
    Success,
    TrimFail,
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub outcome: RunOutcome,
    pub q_count: u64,
    /// `|⟨W^{-s}ψ₀|ψ_final⟩|²` on success.
    pub fidelity: Option<f64>,
    pub elapsed_model_time: f64,
}

/// `W^{-s}`: `(W†)^s` for unitaries, adjugate inverse otherwise.
fn rewind_operator(w: &Mat2, s: u64, mode: Mode) -> Result<Mat2> {
    let base = match mode {
        Mode::Unitary => w.adjoint(),
        Mode::Contraction => w.inverse(SINGULAR_TOL).ok_or(Error::SingularW)?,
    };
    Ok(base.pow(s))
}

/// One run of the protocol at the amplitude level.
///
/// `psi0` overrides both the configured and the random initial state.
pub fn run_quantum_protocol<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    psi0: Option<PureState>,
    rng: &mut R,
) -> Result<RunRecord> {
    let Source::Matrices { v, w } = cfg.source else {
        return Err(Error::InvalidArgument("quantum run needs V and W".into()));
    };
    cfg.validate()?;
    let psi0 = match psi0.or(cfg.initial_state) {
        Some(s) => s.normalized().ok_or(Error::InvalidArgument("initial state is zero".into()))?,
        None => PureState::haar(rng),
    };
    let w_inv_s = if cfg.s == 0 {
        Mat2::identity()
    } else {
        rewind_operator(&w, cfg.s, cfg.mode)?
    };

    let mut state = psi0;
    let mut node = WalkNode::ORIGIN;
    let mut waited = false;
    for q in 1..=cfg.m {
        let branches = apply_q(&v, &w, &state);
        let (outcome, next) = sample_branch(&branches, rng)?;
        let Some(dir) = outcome.direction() else {
            return Ok(RunRecord {
                outcome: RunOutcome::Abort,
                q_count: q,
                fidelity: None,
                elapsed_model_time: cfg.elapsed(q, waited),
            });
        };
        // a sampled branch always has positive weight
        state = next.ok_or(Error::NonFinite)?;
        node = step_node(node, dir);
        if !waited && node == WalkNode::TARGET {
            state = evolve_free(&w, cfg.s, &state)?;
            if cfg.mode == Mode::Contraction {
                state = state.normalized().ok_or(Error::NonFinite)?;
            }
            waited = true;
        } else if waited && node == WalkNode::ORIGIN {
            let target = psi0.apply(&w_inv_s);
            return Ok(RunRecord {
                outcome: RunOutcome::Success,
                q_count: q,
                fidelity: Some(target.fidelity(&state)),
                elapsed_model_time: cfg.elapsed(q, true),
            });
        }
    }
    Ok(RunRecord {
        outcome: RunOutcome::TrimFail,
        q_count: cfg.m,
        fidelity: None,
        elapsed_model_time: cfg.elapsed(cfg.m, waited),
    })
}

/// Aggregate over many runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    pub n_runs: u64,
    pub n_success: u64,
    pub n_trim_fail: u64,
    pub n_abort: u64,
    pub success_rate: f64,
    pub min_fidelity: Option<f64>,
    pub mean_fidelity: Option<f64>,
    /// `q_count_histogram[q]` = successful runs that used exactly `q` gates.
    pub q_count_histogram: Vec<u64>,
}

#[derive(Debug, Clone)]
struct Tally {
    success: u64,
    trim_fail: u64,
    abort: u64,
    fid_sum: f64,
    fid_min: f64,
    hist: Vec<u64>,
}

impl Tally {
    fn new(m: u64) -> Self {
        Tally {
            success: 0,
            trim_fail: 0,
            abort: 0,
            fid_sum: 0.0,
            fid_min: f64::INFINITY,
            hist: vec![0; m as usize + 1],
        }
    }

    fn record(&mut self, r: &RunRecord) {
        match r.outcome {
            RunOutcome::Success => {
                self.success += 1;
                self.hist[r.q_count as usize] += 1;
                if let Some(f) = r.fidelity {
                    self.fid_sum += f;
                    self.fid_min = self.fid_min.min(f);
                }
            }
            RunOutcome::TrimFail => self.trim_fail += 1,
            RunOutcome::Abort => self.abort += 1,
        }
    }

    fn merge(&mut self, other: Tally) {
        self.success += other.success;
        self.trim_fail += other.trim_fail;
        self.abort += other.abort;
        self.fid_sum += other.fid_sum;
        self.fid_min = self.fid_min.min(other.fid_min);
        for (a, b) in self.hist.iter_mut().zip(other.hist) {
            *a += b;
        }
    }
}

/// Runs `cfg.runs` independent trials over `cfg.workers` seeded streams.
///
/// Worker `k` handles its share of the runs on stream `k`; tallies are
/// merged in worker order, so the result depends only on the config.
pub fn monte_carlo(cfg: &ProtocolConfig) -> Result<Statistics> {
    cfg.validate()?;
    let tallies: Vec<Tally> = (0..cfg.workers)
        .into_par_iter()
        .map(|k| {
            let mut rng = worker_rng(cfg.seed, k);
            let mut tally = Tally::new(cfg.m);
            for _ in 0..share(cfg.runs, cfg.workers, k) {
                let record = match cfg.source {
                    Source::Matrices { .. } => run_quantum_protocol(cfg, None, &mut rng)?,
                    Source::Probability(p) => {
                        let o = run_walk_protocol(p, cfg.m, &mut rng)?;
                        RunRecord {
                            outcome: if o.success { RunOutcome::Success } else { RunOutcome::TrimFail },
                            q_count: o.q_count,
                            fidelity: None,
                            elapsed_model_time: cfg.elapsed(o.q_count, o.reached_target),
                        }
                    }
                };
                tally.record(&record);
            }
            Ok(tally)
        })
        .collect::<Result<_>>()?;

    let mut total = Tally::new(cfg.m);
    for t in tallies {
        total.merge(t);
    }
    let has_fidelity = matches!(cfg.source, Source::Matrices { .. }) && total.success > 0;
    Ok(Statistics {
        n_runs: cfg.runs,
        n_success: total.success,
        n_trim_fail: total.trim_fail,
        n_abort: total.abort,
        success_rate: total.success as f64 / cfg.runs as f64,
        min_fidelity: has_fidelity.then_some(total.fid_min),
        mean_fidelity: has_fidelity.then(|| total.fid_sum / total.success as f64),
        q_count_histogram: total.hist,
    })
}

/// Cumulative success curve for a probability or a unitary pair.
pub fn success_curve(source: &Source, m_max: usize) -> Result<SuccessCurve> {
    let p = match source {
        Source::Probability(p) => {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::InvalidProbability(p.to_string()));
            }
            *p
        }
        Source::Matrices { v, w } => branch_prob_invariant(v, w)?,
    };
    Ok(SuccessCurve::for_probability(p, m_max))
}

/// Random instance families for [`identity_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairFamily {
    Haar,
    Ginibre,
    SharedEigenvector,
}

impl PairFamily {
    pub const ALL: [PairFamily; 3] = [PairFamily::Haar, PairFamily::Ginibre, PairFamily::SharedEigenvector];

    pub fn name(self) -> &'static str {
        match self {
            PairFamily::Haar => "haar",
            PairFamily::Ginibre => "ginibre",
            PairFamily::SharedEigenvector => "shared-eigenvector",
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> (Mat2, Mat2) {
        match self {
            PairFamily::Haar => (haar_unitary(rng), haar_unitary(rng)),
            PairFamily::Ginibre => (ginibre(rng), ginibre(rng)),
            PairFamily::SharedEigenvector => shared_eigvec_pair(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: PairFamily,
    pub trials: u64,
    pub failures: u64,
    /// Largest residual over its scale, across every identity checked.
    pub worst_relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub pairs: u64,
    pub states_per_pair: u64,
    /// Largest spread of `‖[V,W]ψ‖²/4` over the states of one pair.
    pub worst_spread: f64,
    /// Largest gap between a state's value and the trace formula.
    pub worst_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub families: Vec<FamilyReport>,
    pub invariance: InvarianceReport,
    pub tol: f64,
}

impl SuiteReport {
    /// Spread and mismatch tolerance of the branch-probability check.
    pub const INVARIANCE_TOL: f64 = 1e-11;

    pub fn passed(&self) -> bool {
        self.families.iter().all(|f| f.failures == 0)
            && self.invariance.worst_spread < Self::INVARIANCE_TOL
            && self.invariance.worst_mismatch < Self::INVARIANCE_TOL
    }
}

fn worst_relative(r: &Prop1Report) -> f64 {
    let props = std::iter::once(&r.square)
        .chain(r.rewind.iter().map(|(_, x)| x))
        .chain(r.sandwich.iter().map(|(_, x)| x))
        .map(|x| x.relative_residual());
    let traces = r.traces.iter().map(|t| t.trace.norm() / t.scale);
    props.chain(traces).fold(0.0, f64::max)
}

/// Checks the commutator identities on `trials` random pairs of each family
/// and the state-independence of the vertical-port probability on Haar pairs.
///
/// Each family uses its own stream, so results do not depend on the order of
/// families or on thread scheduling.
pub fn identity_suite(trials: u64, states_per_pair: u64, seed: u64, tol: f64, s_max: u32, n_max: u32) -> SuiteReport {
    let families = PairFamily::ALL
        .into_par_iter()
        .enumerate()
        .map(|(k, family)| {
            let mut rng = worker_rng(seed, k);
            let mut failures = 0;
            let mut worst: f64 = 0.0;
            for _ in 0..trials {
                let (v, w) = family.sample(&mut rng);
                let r = verify_prop1(&v, &w, s_max, n_max, tol);
                if !r.all_pass() {
                    failures += 1;
                }
                worst = worst.max(worst_relative(&r));
            }
            FamilyReport {
                family,
                trials,
                failures,
                worst_relative_residual: worst,
            }
        })
        .collect();

    let mut rng = worker_rng(seed, PairFamily::ALL.len());
    let (mut worst_spread, mut worst_mismatch) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let (v, w) = (haar_unitary(&mut rng), haar_unitary(&mut rng));
        let p = branch_prob_invariant(&v, &w).expect("Haar pairs are unitary");
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..states_per_pair {
            let psi = PureState::haar(&mut rng);
            let q = branch_prob_state(&v, &w, &psi).expect("Haar states are normalized").vertical;
            lo = lo.min(q);
            hi = hi.max(q);
            worst_mismatch = worst_mismatch.max((q - p).abs());
        }
        if states_per_pair > 0 {
            worst_spread = worst_spread.max(hi - lo);
        }
    }
    SuiteReport {
        families,
        invariance: InvarianceReport {
            pairs: trials,
            states_per_pair,
            worst_spread,
            worst_mismatch,
        },
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn matrices(v: Mat2, w: Mat2) -> Source {
        Source::Matrices { v, w }
    }

    #[test]
    fn anticommuting_pair_succeeds_in_two() {
        let mut cfg = ProtocolConfig::new(matrices(Mat2::pauli_x(), Mat2::pauli_z()));
        cfg.m = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let r = run_quantum_protocol(&cfg, None, &mut rng).unwrap();
            assert_eq!(r.outcome, RunOutcome::Success);
            assert_eq!(r.q_count, 2);
            assert!((r.fidelity.unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn commuting_pair_always_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = haar_unitary(&mut rng);
        let mut cfg = ProtocolConfig::new(matrices(u, u));
        cfg.m = 40;
        for _ in 0..100 {
            let r = run_quantum_protocol(&cfg, None, &mut rng).unwrap();
            assert_eq!(r.outcome, RunOutcome::TrimFail);
            assert_eq!(r.q_count, 40);
        }
    }

    #[test]
    fn haar_runs_rewind_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut successes = 0;
        while successes < 300 {
            let (v, w) = (haar_unitary(&mut rng), haar_unitary(&mut rng));
            let mut cfg = ProtocolConfig::new(matrices(v, w));
            cfg.s = 5;
            cfg.m = 1000;
            let psi0 = PureState::haar(&mut rng);
            let r = run_quantum_protocol(&cfg, Some(psi0), &mut rng).unwrap();
            assert_ne!(r.outcome, RunOutcome::Abort);
            assert!(r.q_count <= cfg.m);
            if r.outcome == RunOutcome::Success {
                successes += 1;
                // independent oracle: apply W† five times
                let mut target = psi0;
                for _ in 0..5 {
                    target = target.apply(&w.adjoint());
                }
                let f = r.fidelity.unwrap();
                assert!(f >= 1.0 - 1e-9, "fidelity {f}");
                assert!((target.fidelity(&psi0.apply(&w.pow(5).adjoint())) - 1.0).abs() < 1e-12);
                assert_eq!(r.elapsed_model_time, cfg.elapsed(r.q_count, true));
                assert!(r.elapsed_model_time <= cfg.time_bound());
                assert_eq!(r.q_count % 2, 0);
            }
        }
    }

    #[test]
    fn contraction_mode_rewinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut successes = 0;
        let mut aborts = 0;
        while successes < 200 {
            let v = haar_unitary(&mut rng).scale(Complex64::new(0.9, 0.0));
            let w = haar_unitary(&mut rng);
            let mut cfg = ProtocolConfig::new(matrices(v, w));
            cfg.mode = Mode::Contraction;
            cfg.s = 3;
            cfg.m = 200;
            let r = run_quantum_protocol(&cfg, None, &mut rng).unwrap();
            match r.outcome {
                RunOutcome::Success => {
                    successes += 1;
                    assert!(r.fidelity.unwrap() >= 1.0 - 1e-8);
                }
                RunOutcome::Abort => aborts += 1,
                RunOutcome::TrimFail => {}
            }
        }
        assert!(aborts > 0);
    }

    #[test]
    fn config_validation() {
        let big = Mat2::identity().scale(Complex64::new(1.5, 0.0));
        let cfg = ProtocolConfig::new(matrices(big, Mat2::identity()));
        assert!(matches!(cfg.validate(), Err(Error::NotUnitary)));
        let mut cfg = ProtocolConfig::new(matrices(big, Mat2::identity()));
        cfg.mode = Mode::Contraction;
        assert!(matches!(cfg.validate(), Err(Error::NotContraction)));

        let singular = Mat2::real(1.0, 0.0, 0.0, 0.0);
        let mut cfg = ProtocolConfig::new(matrices(Mat2::pauli_x(), singular));
        cfg.mode = Mode::Contraction;
        cfg.s = 1;
        assert!(matches!(cfg.validate(), Err(Error::SingularW)));
        cfg.s = 0;
        assert!(cfg.validate().is_ok());

        let mut cfg = ProtocolConfig::new(Source::Probability(0.5));
        cfg.m = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn monte_carlo_p_one() {
        let mut cfg = ProtocolConfig::new(matrices(Mat2::pauli_x(), Mat2::pauli_z()));
        cfg.runs = 100;
        cfg.workers = 3;
        let s = monte_carlo(&cfg).unwrap();
        assert_eq!(s.success_rate, 1.0);
        assert_eq!(s.n_success, 100);
        assert!((s.min_fidelity.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(s.q_count_histogram[2], 100);
    }

    #[test]
    fn monte_carlo_half_two_gates() {
        let mut cfg = ProtocolConfig::new(matrices(Mat2::hadamard(), Mat2::pauli_z()));
        cfg.runs = 1_000_000;
        cfg.workers = 4;
        cfg.seed = 11;
        let s = monte_carlo(&cfg).unwrap();
        let sigma = (0.25 * 0.75 / 1e6f64).sqrt();
        assert!((s.success_rate - 0.25).abs() < 5.0 * sigma, "{}", s.success_rate);
        assert_eq!(s.n_abort, 0);
        assert_eq!(s.n_success + s.n_trim_fail + s.n_abort, s.n_runs);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let mut cfg = ProtocolConfig::new(matrices(Mat2::hadamard(), Mat2::pauli_z()));
        cfg.runs = 20_000;
        cfg.workers = 3;
        cfg.m = 30;
        cfg.s = 2;
        cfg.seed = 5;
        let a = monte_carlo(&cfg).unwrap();
        let b = monte_carlo(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mean_fidelity.unwrap().to_bits(), b.mean_fidelity.unwrap().to_bits());
    }

    #[test]
    fn curve_examples() {
        let c = success_curve(&Source::Probability(1.0), 5).unwrap();
        assert_eq!(c.rows[0].prob_full, 0.0);
        assert!(c.rows[1..].iter().all(|r| (r.prob_full - 1.0).abs() < 1e-15));
        let c = success_curve(&Source::Probability(0.0), 10).unwrap();
        assert!(c.rows.iter().all(|r| r.prob_full == 0.0 && r.prob_commutator == 0.0));
        let c = success_curve(&matrices(Mat2::hadamard(), Mat2::pauli_z()), 4).unwrap();
        assert!((c.rows[3].prob_full - 0.375).abs() < 1e-15);
        let half = Mat2::identity().scale(Complex64::new(0.5, 0.0));
        assert!(success_curve(&matrices(half, Mat2::identity()), 4).is_err());
    }
}
