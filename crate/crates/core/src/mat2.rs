//! Complex 2×2 matrix algebra.
//!
//! Besides the arithmetic kernel this module carries the machine checks for
//! the three matrix relations the rewinding protocol relies on, with
//! `x = [V, W]` and `y = {V, W}`:
//!
//! * `x² ∝ 1`
//! * `x W^s x ∝ W^{-s}` for invertible `W`
//! * `yⁿ x yⁿ ∝ x`
//!
//! together with `tr(x yⁿ) = 0` and the state-independent branch probability
//! for unitary pairs.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qgate::PureState;

/// Default relative threshold for proportionality checks.
pub const DEFAULT_PROPORTIONALITY_TOL: f64 = 1e-9;
/// Absolute floor below which a matrix is treated as zero.
pub const NORM_FLOOR: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A complex 2×2 matrix, row-major.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[[[f64; 2]; 2]; 2]", try_from = "[[[f64; 2]; 2]; 2]")]
pub struct Mat2 {
    pub m: [[Complex64; 2]; 2],
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]
        )
    }
}

impl From<Mat2> for [[[f64; 2]; 2]; 2] {
    fn from(a: Mat2) -> Self {
        a.m.map(|row| row.map(|z| [z.re, z.im]))
    }
}

impl TryFrom<[[[f64; 2]; 2]; 2]> for Mat2 {
    type Error = Error;

    fn try_from(raw: [[[f64; 2]; 2]; 2]) -> Result<Self> {
        let a = Mat2 {
            m: raw.map(|row| row.map(|[re, im]| Complex64::new(re, im))),
        };
        if a.is_finite() {
            Ok(a)
        } else {
            Err(Error::NonFinite)
        }
    }
}

impl Mat2 {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2 {
            m: [[a, b], [c, d]],
        }
    }

    /// Builds a matrix from real entries.
    pub const fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(
            Complex64::new(a, 0.0),
            Complex64::new(b, 0.0),
            Complex64::new(c, 0.0),
            Complex64::new(d, 0.0),
        )
    }

    pub const fn zero() -> Self {
        Mat2::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn identity() -> Self {
        Mat2::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn pauli_x() -> Self {
        Mat2::real(0.0, 1.0, 1.0, 0.0)
    }

    pub const fn pauli_y() -> Self {
        Mat2::new(ZERO, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), ZERO)
    }

    pub const fn pauli_z() -> Self {
        Mat2::real(1.0, 0.0, 0.0, -1.0)
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Mat2::real(h, h, h, -h)
    }

    pub fn diag(a: Complex64, d: Complex64) -> Self {
        Mat2::new(a, ZERO, ZERO, d)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|z| z.is_finite())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Mat2 {
            m: self.m.map(|row| row.map(|z| z * c)),
        }
    }

    pub fn adjoint(&self) -> Self {
        let [[a, b], [c, d]] = self.m;
        Mat2::new(a.conj(), c.conj(), b.conj(), d.conj())
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Inverse via the adjugate; `None` when `|det| <= tol`.
    pub fn inverse(&self, tol: f64) -> Option<Self> {
        let det = self.det();
        if det.norm() <= tol {
            return None;
        }
        let [[a, b], [c, d]] = self.m;
        Some(Mat2::new(d, -b, -c, a).scale(det.inv()))
    }

    /// `self^k` by binary exponentiation.
    pub fn pow(&self, mut k: u64) -> Self {
        let mut base = *self;
        let mut acc = Mat2::identity();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    /// Entrywise (Hilbert–Schmidt) inner product `⟨self, other⟩ = tr(self† other)`.
    pub fn hs_inner(&self, other: &Mat2) -> Complex64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    /// Largest singular value, in closed form.
    pub fn operator_norm(&self) -> f64 {
        // largest eigenvalue of the Hermitian A†A; no cancellation under the root
        let g = self.adjoint() * *self;
        let (a, b) = (g.m[0][0].re, g.m[1][1].re);
        let half = (a - b) / 2.0;
        let lam = (a + b) / 2.0 + half.hypot(g.m[0][1].norm());
        lam.max(0.0).sqrt()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (self.adjoint() * *self - Mat2::identity()).frobenius_norm() <= tol
    }

    pub fn is_contraction(&self, tol: f64) -> bool {
        self.operator_norm() <= 1.0 + tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (*self - self.adjoint()).frobenius_norm() <= tol
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] += rhs.m[i][j];
            }
        }
        out
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] -= rhs.m[i][j];
            }
        }
        out
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-ONE)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.m;
        let b = &rhs.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// `AB − BA`.
pub fn commutator(a: &Mat2, b: &Mat2) -> Mat2 {
    *a * *b - *b * *a
}

/// `AB + BA`.
pub fn anticommutator(a: &Mat2, b: &Mat2) -> Mat2 {
    *a * *b + *b * *a
}

/// Outcome of testing `A ≈ c·B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionalityReport {
    /// Least-squares `c` minimising `‖A − cB‖_F`.
    pub scalar: Complex64,
    /// `‖A − scalar·B‖_F`.
    pub residual: f64,
    /// `B` vanished (so `A` was tested against zero).
    pub both_zero: bool,
    /// Magnitude the residual was judged against.
    pub scale: f64,
    pub verdict: bool,
}

impl ProportionalityReport {
    pub fn relative_residual(&self) -> f64 {
        self.residual / self.scale
    }
}

/// Decides whether `A ∝ B` with relative tolerance `tol`.
pub fn check_proportional(a: &Mat2, b: &Mat2, tol: f64) -> ProportionalityReport {
    check_proportional_scaled(a, b, tol, 0.0)
}

/// Like [`check_proportional`], but `magnitude` is the size of the product
/// that produced `A` (e.g. `‖y‖²ⁿ‖x‖` for `yⁿxyⁿ`). Rounding error scales with
/// that, not with `‖A‖`, whenever the product cancels heavily.
pub fn check_proportional_scaled(a: &Mat2, b: &Mat2, tol: f64, magnitude: f64) -> ProportionalityReport {
    let na = a.frobenius_norm();
    let nb = b.frobenius_norm();
    let scale = na.max(nb).max(magnitude).max(NORM_FLOOR);
    if nb <= NORM_FLOOR {
        let zero = na <= NORM_FLOOR.max(tol * magnitude);
        return ProportionalityReport {
            scalar: ZERO,
            residual: na,
            both_zero: zero,
            scale,
            verdict: zero,
        };
    }
    let scalar = b.hs_inner(a) / (nb * nb);
    let residual = (*a - b.scale(scalar)).frobenius_norm();
    ProportionalityReport {
        scalar,
        residual,
        both_zero: false,
        scale,
        verdict: residual <= tol * scale,
    }
}

/// Haar-distributed 2×2 unitary.
///
/// Gram–Schmidt on two standard complex Gaussian columns, then the second
/// column is rephased so that `det U` is uniform on the circle.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    loop {
        let c0 = [complex_gaussian(rng), complex_gaussian(rng)];
        let c1 = [complex_gaussian(rng), complex_gaussian(rng)];
        let n0 = (c0[0].norm_sqr() + c0[1].norm_sqr()).sqrt();
        if n0 < 1e-8 {
            continue;
        }
        let e0 = [c0[0] / n0, c0[1] / n0];
        let proj = e0[0].conj() * c1[0] + e0[1].conj() * c1[1];
        let r = [c1[0] - proj * e0[0], c1[1] - proj * e0[1]];
        let n1 = (r[0].norm_sqr() + r[1].norm_sqr()).sqrt();
        if n1 < 1e-8 {
            continue;
        }
        let e1 = [r[0] / n1, r[1] / n1];
        let mut u = Mat2::new(e0[0], e1[0], e0[1], e1[1]);
        // Project once more onto U(2) so the unitarity defect stays at ulp level.
        u = polish_unitary(&u);
        return u;
    }
}

fn polish_unitary(u: &Mat2) -> Mat2 {
    // One Newton step of the polar iteration: U ← (U + U^{-†}) / 2.
    match u.inverse(1e-300) {
        Some(inv) => (*u + inv.adjoint()).scale(Complex64::new(0.5, 0.0)),
        None => *u,
    }
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    Mat2::new(
        complex_gaussian(rng),
        complex_gaussian(rng),
        complex_gaussian(rng),
        complex_gaussian(rng),
    )
}

/// Pair of Ginibre-like matrices sharing an eigenvector, so `det [V, W] = 0`.
///
/// Both are upper triangular in a random basis `P`, which makes the
/// commutator strictly upper triangular there (nilpotent, rank ≤ 1).
pub fn shared_eigvec_pair<R: Rng + ?Sized>(rng: &mut R) -> (Mat2, Mat2) {
    let p = loop {
        let p = ginibre(rng);
        // keep the basis change reasonably conditioned
        if p.det().norm() > 0.2 * p.frobenius_norm_sqr() {
            break p;
        }
    };
    let p_inv = p.inverse(0.0).expect("conditioned basis is invertible");
    let tri = |rng: &mut R| {
        Mat2::new(
            complex_gaussian(rng),
            complex_gaussian(rng),
            ZERO,
            complex_gaussian(rng),
        )
    };
    let v = p * tri(rng) * p_inv;
    let w = p * tri(rng) * p_inv;
    (v, w)
}

/// Standard complex Gaussian: `E|z|² = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Hermitian generator `H` and evolution time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianParam {
    pub h: Mat2,
    pub t: f64,
}

/// Tolerance used to accept a generator as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// `e^{-iHt}` from the Pauli decomposition `H = a·1 + b·n·σ`.
pub fn hermitian_exp(hp: &HamiltonianParam) -> Result<Mat2> {
    let h = &hp.h;
    if !h.is_finite() || !hp.t.is_finite() {
        return Err(Error::NonFinite);
    }
    if !h.is_hermitian(HERMITIAN_TOL * h.frobenius_norm().max(1.0)) {
        return Err(Error::NotHermitian);
    }
    let a = 0.5 * (h.m[0][0].re + h.m[1][1].re);
    let nz = 0.5 * (h.m[0][0].re - h.m[1][1].re);
    // symmetrise the off-diagonal pair before reading it
    let off = 0.5 * (h.m[1][0] + h.m[0][1].conj());
    let (nx, ny) = (off.re, off.im);
    let b = (nx * nx + ny * ny + nz * nz).sqrt();
    let phase = Complex64::from_polar(1.0, -a * hp.t);
    if b == 0.0 {
        return Ok(Mat2::identity().scale(phase));
    }
    let (s, c) = (b * hp.t).sin_cos();
    let k = s / b;
    // cos(bt)·1 − i sin(bt)·(n·σ)/b
    let i = Complex64::new(0.0, 1.0);
    let n_sigma = Mat2::new(
        Complex64::new(nz, 0.0),
        Complex64::new(nx, -ny),
        Complex64::new(nx, ny),
        Complex64::new(-nz, 0.0),
    );
    let u = Mat2::identity().scale(Complex64::new(c, 0.0)) - n_sigma.scale(i * k);
    Ok(u.scale(phase))
}

/// Trace check `tr(x yⁿ) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceCheck {
    pub n: u32,
    pub trace: Complex64,
    /// `‖x‖_F · ‖y‖_Fⁿ`, the natural size of the product.
    pub scale: f64,
    pub verdict: bool,
}

/// Per-identity results of [`verify_prop1`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop1Report {
    /// `x² ∝ 1`.
    pub square: ProportionalityReport,
    /// `det x`, the proportionality factor of `x²` up to sign.
    pub det_commutator: Complex64,
    /// `x W^s x ∝ W^{-s}` for `s = 0..=s_max`; empty when `W` is singular.
    pub rewind: Vec<(u32, ProportionalityReport)>,
    /// `yⁿ x yⁿ ∝ x` for `n = 0..=n_max`.
    pub sandwich: Vec<(u32, ProportionalityReport)>,
    /// `tr(x yⁿ) = 0` for `n = 0..=n_max`.
    pub traces: Vec<TraceCheck>,
    /// `W` was not invertible, so `rewind` was skipped.
    pub w_singular: bool,
}

impl Prop1Report {
    pub fn all_pass(&self) -> bool {
        self.square.verdict
            && self.rewind.iter().all(|(_, r)| r.verdict)
            && self.sandwich.iter().all(|(_, r)| r.verdict)
            && self.traces.iter().all(|t| t.verdict)
    }
}

/// Checks the three commutator/anticommutator relations and the trace lemma.
pub fn verify_prop1(v: &Mat2, w: &Mat2, s_max: u32, n_max: u32, tol: f64) -> Prop1Report {
    let x = commutator(v, w);
    let y = anticommutator(v, w);
    let nx = x.frobenius_norm();
    let ny = y.frobenius_norm();
    let square = check_proportional_scaled(&(x * x), &Mat2::identity(), tol, nx * nx);

    let w_inv = w.inverse(tol);
    let w_singular = w_inv.is_none();
    let mut rewind = Vec::new();
    if let Some(w_inv) = w_inv {
        let mut w_pow = Mat2::identity();
        let mut w_neg = Mat2::identity();
        for s in 0..=s_max {
            let mag = nx * nx * w_pow.frobenius_norm();
            rewind.push((s, check_proportional_scaled(&(x * w_pow * x), &w_neg, tol, mag)));
            w_pow = w_pow * *w;
            w_neg = w_neg * w_inv;
        }
    }

    let mut sandwich = Vec::with_capacity(n_max as usize + 1);
    let mut traces = Vec::with_capacity(n_max as usize + 1);
    let mut y_pow = Mat2::identity();
    for n in 0..=n_max {
        let z = y_pow * x * y_pow;
        let mag = y_pow.frobenius_norm().powi(2) * nx;
        sandwich.push((n, check_proportional_scaled(&z, &x, tol, mag)));
        let trace = (x * y_pow).trace();
        let scale = (nx * ny.powi(n as i32)).max(NORM_FLOOR);
        traces.push(TraceCheck {
            n,
            trace,
            scale,
            verdict: trace.norm() <= tol * scale,
        });
        y_pow = y_pow * y;
    }

    Prop1Report {
        square,
        det_commutator: x.det(),
        rewind,
        sandwich,
        traces,
        w_singular,
    }
}

/// Tolerance used to accept an input as unitary in the probability routines.
pub const UNITARY_TOL: f64 = 1e-10;

/// Vertical-port probability `(2 − Re tr(V W V† W†)) / 4` for unitary `V`, `W`.
pub fn branch_prob_invariant(v: &Mat2, w: &Mat2) -> Result<f64> {
    if !v.is_unitary(UNITARY_TOL) || !w.is_unitary(UNITARY_TOL) {
        return Err(Error::NotUnitary);
    }
    let t = (*v * *w * v.adjoint() * w.adjoint()).trace();
    Ok(((2.0 - t.re) / 4.0).clamp(0.0, 1.0))
}

/// Exit probabilities for a specific input state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchProbs {
    pub vertical: f64,
    pub horizontal: f64,
    pub abort: f64,
}

/// Tolerance on the input state's norm.
pub const STATE_NORM_TOL: f64 = 1e-10;

/// Exit probabilities `‖xψ‖²/4`, `‖yψ‖²/4` and the remainder for contractions.
pub fn branch_prob_state(v: &Mat2, w: &Mat2, psi: &PureState) -> Result<BranchProbs> {
    if (psi.norm_sqr() - 1.0).abs() > STATE_NORM_TOL {
        return Err(Error::NotNormalized(psi.norm_sqr()));
    }
    if !v.is_contraction(UNITARY_TOL) || !w.is_contraction(UNITARY_TOL) {
        return Err(Error::NotContraction);
    }
    let a = psi.amplitudes();
    let xa = commutator(v, w).apply(a);
    let ya = anticommutator(v, w).apply(a);
    let vertical = (xa[0].norm_sqr() + xa[1].norm_sqr()) / 4.0;
    let horizontal = (ya[0].norm_sqr() + ya[1].norm_sqr()) / 4.0;
    Ok(BranchProbs {
        vertical,
        horizontal,
        abort: (1.0 - vertical - horizontal).max(0.0),
    })
}
