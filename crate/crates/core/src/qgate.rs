//! Amplitude-level semantics of the Q gate.
//!
//! The gate sends the target through `VW` and `WV` in superposition and
//! interferes the two paths on a balanced beam splitter. Writing out the
//! splitter map gives the two output-port amplitudes
//!
//! ```text
//! vertical   = (WV − VW) ψ / 2 = −[V, W] ψ / 2
//! horizontal = (VW + WV) ψ / 2 =  {V, W} ψ / 2
//! ```
//!
//! Amplitudes stay unnormalized until a port is sampled.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{anticommutator, commutator, complex_gaussian, Mat2};

/// Upper bound on `s` accepted by [`evolve_free`].
pub const MAX_FREE_STEPS: u64 = 1_000_000;

/// Slack allowed on `‖vertical‖² + ‖horizontal‖²` before inputs are rejected.
pub const PROBABILITY_SLACK: f64 = 1e-9;

/// Abort mass below this is treated as rounding noise.
const ABORT_EPS: f64 = 1e-12;

/// Two-component (possibly unnormalized) state of the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[[f64; 2]; 2]", try_from = "[[f64; 2]; 2]")]
pub struct PureState {
    amps: [Complex64; 2],
}

impl From<PureState> for [[f64; 2]; 2] {
    fn from(s: PureState) -> Self {
        s.amps.map(|z| [z.re, z.im])
    }
}

impl TryFrom<[[f64; 2]; 2]> for PureState {
    type Error = Error;
    fn try_from(raw: [[f64; 2]; 2]) -> Result<Self> {
        let s = PureState {
            amps: raw.map(|[re, im]| Complex64::new(re, im)),
        };
        if s.amps.iter().all(|z| z.is_finite()) {
            Ok(s)
        } else {
            Err(Error::NonFinite)
        }
    }
}

impl PureState {
    pub const fn new(a0: Complex64, a1: Complex64) -> Self {
        PureState { amps: [a0, a1] }
    }

    pub const fn from_amplitudes(amps: [Complex64; 2]) -> Self {
        PureState { amps }
    }

    /// Uniformly random unit state.
    pub fn haar<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let s = PureState::new(complex_gaussian(rng), complex_gaussian(rng));
            if s.norm_sqr() > 1e-12 {
                return s.normalized().expect("nonzero");
            }
        }
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps[0].norm_sqr() + self.amps[1].norm_sqr()
    }

    /// Unit-norm copy, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return None;
        }
        Some(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        PureState {
            amps: self.amps.map(|z| z * c),
        }
    }

    pub fn add(&self, other: &PureState) -> Self {
        PureState {
            amps: [self.amps[0] + other.amps[0], self.amps[1] + other.amps[1]],
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amps[0].conj() * other.amps[0] + self.amps[1].conj() * other.amps[1]
    }

    pub fn apply(&self, m: &Mat2) -> Self {
        PureState {
            amps: m.apply(self.amps),
        }
    }

    /// `|⟨a|b⟩|²` after normalizing both; zero vectors give 0.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        match (self.normalized(), other.normalized()) {
            (Some(a), Some(b)) => a.inner(&b).norm_sqr().min(1.0),
            _ => 0.0,
        }
    }
}

/// Unnormalized output-port amplitudes of one Q gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QBranches {
    pub vertical: PureState,
    pub horizontal: PureState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchOutcome {
    Vertical,
    Horizontal,
    Abort,
}

pub fn apply_q(v: &Mat2, w: &Mat2, psi: &PureState) -> QBranches {
    let half = Complex64::new(0.5, 0.0);
    let x = commutator(w, v).scale(half);
    let y = anticommutator(v, w).scale(half);
    QBranches {
        vertical: psi.apply(&x),
        horizontal: psi.apply(&y),
    }
}

/// Measures which port the target left through.
///
/// Returns the renormalized post-measurement state, or `None` on abort.
pub fn sample_branch<R: Rng + ?Sized>(
    b: &QBranches,
    rng: &mut R,
) -> Result<(BranchOutcome, Option<PureState>)> {
    let pv = b.vertical.norm_sqr();
    let ph = b.horizontal.norm_sqr();
    let total = pv + ph;
    if !total.is_finite() {
        return Err(Error::NonFinite);
    }
    if total > 1.0 + PROBABILITY_SLACK {
        return Err(Error::ExcessProbability(total));
    }
    let mut u: f64 = rng.random();
    if 1.0 - total <= ABORT_EPS {
        u *= total;
    }
    if u < pv {
        Ok((BranchOutcome::Vertical, b.vertical.normalized()))
    } else if u < total {
        Ok((BranchOutcome::Horizontal, b.horizontal.normalized()))
    } else {
        Ok((BranchOutcome::Abort, None))
    }
}

/// `W^s ψ` by repeated multiplication.
pub fn evolve_free(w: &Mat2, s: u64, psi: &PureState) -> Result<PureState> {
    if s > MAX_FREE_STEPS {
        return Err(Error::TooManySteps(s));
    }
    let mut out = *psi;
    for _ in 0..s {
        out = out.apply(w);
    }
    Ok(out)
}
