//! Bloch-sphere geometry for a single qubit and the exact quantum statistics
//! every ontological model is checked against.
//!
//! Conventions: `σ_z` is diagonal and `|0⟩` sits at the north pole `+z`.
//! A [`Ray`] is stored with its global phase canonicalized so that the first
//! non-negligible amplitude is real and positive.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on `|a₀|² + |a₁|² = 1` and on unit Bloch vectors.
pub const NORM_TOLERANCE: f64 = 1e-12;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// A point of the unit ball in R³. Pure states live on the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ZERO: BlochVector = BlochVector::new(0.0, 0.0, 0.0);
    pub const X_PLUS: BlochVector = BlochVector::new(1.0, 0.0, 0.0);
    pub const X_MINUS: BlochVector = BlochVector::new(-1.0, 0.0, 0.0);
    pub const Y_PLUS: BlochVector = BlochVector::new(0.0, 1.0, 0.0);
    pub const Y_MINUS: BlochVector = BlochVector::new(0.0, -1.0, 0.0);
    pub const Z_PLUS: BlochVector = BlochVector::new(0.0, 0.0, 1.0);
    pub const Z_MINUS: BlochVector = BlochVector::new(0.0, 0.0, -1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    /// Point of the unit sphere at polar angle `theta` and azimuth `phi` (radians).
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        BlochVector::new(st * cp, st * sp, ct)
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &BlochVector) -> BlochVector {
        BlochVector::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Returns the vector scaled to unit length, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<BlochVector> {
        let n = self.norm();
        (n > 0.0).then(|| *self * (1.0 / n))
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOLERANCE
    }

    /// Polar angle from `+z` and azimuth in `(-π, π]`.
    pub fn to_spherical(&self) -> (f64, f64) {
        let rho = self.x.hypot(self.y);
        (rho.atan2(self.z), self.y.atan2(self.x))
    }

    pub fn distance(&self, other: &BlochVector) -> f64 {
        (*self - *other).norm()
    }

    pub fn approx_eq(&self, other: &BlochVector, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    pub(crate) fn check_unit(&self, what: &str) -> Result<()> {
        if self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.is_unit() {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "{what} must be a unit Bloch vector, got {self} (norm {})",
                self.norm()
            )))
        }
    }
}

impl fmt::Display for BlochVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

impl Add for BlochVector {
    type Output = BlochVector;
    fn add(self, rhs: BlochVector) -> BlochVector {
        BlochVector::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for BlochVector {
    type Output = BlochVector;
    fn sub(self, rhs: BlochVector) -> BlochVector {
        BlochVector::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for BlochVector {
    type Output = BlochVector;
    fn neg(self) -> BlochVector {
        BlochVector::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = BlochVector;
    fn mul(self, rhs: f64) -> BlochVector {
        BlochVector::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

/// A normalized qubit state vector modulo global phase.
#[derive(Debug, Clone, Copy)]
pub struct Ray {
    amplitudes: [Complex64; 2],
}

impl Ray {
    /// Builds a ray from amplitudes that must already be normalized.
    pub fn new(a0: Complex64, a1: Complex64) -> Result<Self> {
        let norm_sq = a0.norm_sqr() + a1.norm_sqr();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::domain(format!(
                "ray amplitudes must satisfy |a0|^2 + |a1|^2 = 1, got {norm_sq}"
            )));
        }
        Ok(Ray::canonical(a0, a1))
    }

    /// Builds a ray from arbitrary nonzero amplitudes, normalizing them.
    pub fn normalized(a0: Complex64, a1: Complex64) -> Result<Self> {
        let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::domain(
                "cannot normalize a zero or non-finite vector",
            ));
        }
        Ok(Ray::canonical(a0 / norm, a1 / norm))
    }

    fn canonical(a0: Complex64, a1: Complex64) -> Self {
        let lead = if a0.norm() > NORM_TOLERANCE { a0 } else { a1 };
        let phase = lead.conj() / lead.norm();
        Ray {
            amplitudes: [a0 * phase, a1 * phase],
        }
    }

    fn real(a0: f64, a1: f64) -> Self {
        Ray::canonical(Complex64::new(a0, 0.0), Complex64::new(a1, 0.0))
    }

    /// `|0⟩`, the `+z` eigenstate.
    pub fn zero() -> Self {
        Ray::real(1.0, 0.0)
    }

    /// `|1⟩`, the `-z` eigenstate.
    pub fn one() -> Self {
        Ray::real(0.0, 1.0)
    }

    /// `|+⟩ = (|0⟩ + |1⟩)/√2`.
    pub fn plus() -> Self {
        Ray::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2)
    }

    /// `|−⟩ = (|0⟩ − |1⟩)/√2`.
    pub fn minus() -> Self {
        Ray::real(FRAC_1_SQRT_2, -FRAC_1_SQRT_2)
    }

    /// `(|0⟩ + i|1⟩)/√2`.
    pub fn plus_i() -> Self {
        Ray::canonical(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, FRAC_1_SQRT_2),
        )
    }

    /// `(|0⟩ − i|1⟩)/√2`.
    pub fn minus_i() -> Self {
        Ray::canonical(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, -FRAC_1_SQRT_2),
        )
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ray) -> Complex64 {
        self.amplitudes[0].conj() * other.amplitudes[0]
            + self.amplitudes[1].conj() * other.amplitudes[1]
    }

    /// The orthogonal ray `|ψ⊥⟩`.
    pub fn orthogonal(&self) -> Ray {
        let [a0, a1] = self.amplitudes;
        Ray::canonical(-a1.conj(), a0.conj())
    }

    /// Equality up to a global phase.
    pub fn approx_eq(&self, other: &Ray, tol: f64) -> bool {
        (1.0 - self.inner(other).norm()).abs() <= tol
    }

    pub fn bloch(&self) -> BlochVector {
        let [a0, a1] = self.amplitudes;
        let coherence = a0.conj() * a1;
        BlochVector::new(
            2.0 * coherence.re,
            2.0 * coherence.im,
            a0.norm_sqr() - a1.norm_sqr(),
        )
    }
}

impl PartialEq for Ray {
    fn eq(&self, other: &Ray) -> bool {
        self.approx_eq(other, NORM_TOLERANCE)
    }
}

impl fmt::Display for Ray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a0, a1] = self.amplitudes;
        write!(f, "[{a0}, {a1}]")
    }
}

/// Bloch vector of a ray: `|ψ⟩⟨ψ| = ½(I + ψ⃗·σ⃗)`.
pub fn ray_to_bloch(r: &Ray) -> BlochVector {
    r.bloch()
}

/// Inverse of [`ray_to_bloch`] on the unit sphere, up to global phase.
pub fn bloch_to_ray(v: &BlochVector) -> Result<Ray> {
    v.check_unit("bloch_to_ray input")?;
    // Pick the branch that keeps the divisor away from zero.
    let (a0, a1) = if v.z >= 0.0 {
        let c = ((1.0 + v.z) / 2.0).sqrt();
        let s = Complex64::new(v.x, v.y) / (2.0 * (1.0 + v.z)).sqrt();
        (Complex64::new(c, 0.0), s)
    } else {
        let s = ((1.0 - v.z) / 2.0).sqrt();
        let c = Complex64::new(v.x, -v.y) / (2.0 * (1.0 - v.z)).sqrt();
        (c, Complex64::new(s, 0.0))
    };
    Ray::normalized(a0, a1)
}

/// `|⟨φ|ψ⟩|²`, equal to `(1 + ψ⃗·φ⃗)/2`.
pub fn born_probability(psi: &Ray, phi: &Ray) -> f64 {
    phi.inner(psi).norm_sqr().clamp(0.0, 1.0)
}

/// A two-outcome projective measurement `{|b₀⟩⟨b₀|, |b₁⟩⟨b₁|}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveMeasurement {
    basis: [Ray; 2],
}

impl ProjectiveMeasurement {
    pub fn new(b0: Ray, b1: Ray) -> Result<Self> {
        let overlap = b0.inner(&b1).norm();
        if overlap > NORM_TOLERANCE {
            return Err(Error::domain(format!(
                "measurement basis is not orthogonal: |<b0|b1>| = {overlap}"
            )));
        }
        Ok(ProjectiveMeasurement { basis: [b0, b1] })
    }

    /// Measurement whose outcome 0 is the ray at `axis` and outcome 1 its antipode.
    pub fn from_axis(axis: &BlochVector) -> Result<Self> {
        let b0 = bloch_to_ray(axis)?;
        Ok(ProjectiveMeasurement {
            basis: [b0, b0.orthogonal()],
        })
    }

    /// `{|0⟩, |1⟩}`.
    pub fn computational() -> Self {
        ProjectiveMeasurement {
            basis: [Ray::zero(), Ray::one()],
        }
    }

    /// `{|+⟩, |−⟩}`.
    pub fn hadamard() -> Self {
        ProjectiveMeasurement {
            basis: [Ray::plus(), Ray::minus()],
        }
    }

    pub fn basis(&self) -> &[Ray; 2] {
        &self.basis
    }

    pub fn outcome(&self, k: usize) -> &Ray {
        &self.basis[k]
    }

    /// Bloch vector of outcome 0.
    pub fn axis(&self) -> BlochVector {
        self.basis[0].bloch()
    }
}

/// Pure state of two qubits A⊗B, amplitudes indexed by `2a + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    amplitudes: [Complex64; 4],
}

impl TwoQubitState {
    pub fn new(amplitudes: [Complex64; 4]) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::domain(format!(
                "two-qubit state must be normalized, got squared norm {norm_sq}"
            )));
        }
        Ok(TwoQubitState { amplitudes })
    }

    /// `|ψ+⟩ = (|01⟩ + |10⟩)/√2`.
    pub fn psi_plus() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let o = Complex64::new(0.0, 0.0);
        TwoQubitState {
            amplitudes: [o, h, h, o],
        }
    }

    pub fn product(a: &Ray, b: &Ray) -> Self {
        let [a0, a1] = a.amplitudes();
        let [b0, b1] = b.amplitudes();
        TwoQubitState {
            amplitudes: [a0 * b0, a0 * b1, a1 * b0, a1 * b1],
        }
    }

    pub fn amplitudes(&self) -> [Complex64; 4] {
        self.amplitudes
    }

    /// Bloch vector of B's reduced state.
    pub fn reduced_bloch_b(&self) -> BlochVector {
        let c = &self.amplitudes;
        let rho00 = c[0].norm_sqr() + c[2].norm_sqr();
        let rho11 = c[1].norm_sqr() + c[3].norm_sqr();
        let rho01 = c[0] * c[1].conj() + c[2] * c[3].conj();
        BlochVector::new(2.0 * rho01.re, -2.0 * rho01.im, rho00 - rho11)
    }
}

/// One branch of a steered ensemble. `state` is `None` when the branch has zero probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeredOutcome {
    pub probability: f64,
    pub state: Option<Ray>,
}

/// B's conditional states after a projective measurement on A.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeredEnsemble {
    pub measurement: ProjectiveMeasurement,
    pub outcomes: Vec<SteeredOutcome>,
}

impl SteeredEnsemble {
    /// Probability-weighted average of the branch Bloch vectors.
    pub fn average_bloch(&self) -> BlochVector {
        self.outcomes
            .iter()
            .filter_map(|o| o.state.map(|s| s.bloch() * o.probability))
            .fold(BlochVector::ZERO, |acc, v| acc + v)
    }
}

const ZERO_BRANCH: f64 = 1e-15;

/// Partially projects A onto each outcome of `m` and returns B's conditional states.
pub fn steered_ensemble(joint: &TwoQubitState, m: &ProjectiveMeasurement) -> SteeredEnsemble {
    let c = joint.amplitudes();
    let outcomes = m
        .basis()
        .iter()
        .map(|ray| {
            let [m0, m1] = ray.amplitudes();
            let b0 = m0.conj() * c[0] + m1.conj() * c[2];
            let b1 = m0.conj() * c[1] + m1.conj() * c[3];
            let probability = b0.norm_sqr() + b1.norm_sqr();
            let state = if probability > ZERO_BRANCH {
                Ray::normalized(b0, b1).ok()
            } else {
                None
            };
            SteeredOutcome { probability, state }
        })
        .collect();
    SteeredEnsemble {
        measurement: *m,
        outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_vec(v: BlochVector, expected: BlochVector) {
        assert!(v.approx_eq(&expected, 1e-12), "{v} != {expected}");
    }

    #[test]
    fn named_rays_map_to_axes() {
        assert_vec(
            ray_to_bloch(&Ray::new(c(1.0, 0.0), c(0.0, 0.0)).unwrap()),
            BlochVector::Z_PLUS,
        );
        let h = FRAC_1_SQRT_2;
        assert_vec(
            ray_to_bloch(&Ray::new(c(h, 0.0), c(h, 0.0)).unwrap()),
            BlochVector::X_PLUS,
        );
        assert_vec(
            ray_to_bloch(&Ray::new(c(h, 0.0), c(0.0, h)).unwrap()),
            BlochVector::Y_PLUS,
        );
        assert_vec(Ray::one().bloch(), BlochVector::Z_MINUS);
        assert_vec(Ray::minus().bloch(), BlochVector::X_MINUS);
        assert_vec(Ray::minus_i().bloch(), BlochVector::Y_MINUS);
    }

    #[test]
    fn unnormalized_ray_is_rejected() {
        assert!(matches!(
            Ray::new(c(1.0, 0.0), c(1.0, 0.0)),
            Err(Error::Domain(_))
        ));
        assert!(Ray::normalized(c(0.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn bloch_to_ray_examples() {
        assert_eq!(bloch_to_ray(&BlochVector::Z_PLUS).unwrap(), Ray::zero());
        assert_eq!(bloch_to_ray(&BlochVector::Z_MINUS).unwrap(), Ray::one());
        assert_eq!(bloch_to_ray(&BlochVector::X_PLUS).unwrap(), Ray::plus());
        assert!(bloch_to_ray(&BlochVector::new(0.5, 0.0, 0.0)).is_err());
    }

    #[test]
    fn global_phase_is_unobservable() {
        let r = Ray::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let phase = Complex64::from_polar(1.0, 1.234);
        let s = Ray::new(c(0.6, 0.0) * phase, c(0.0, 0.8) * phase).unwrap();
        assert_eq!(r, s);
        assert_abs_diff_eq!(r.amplitudes()[0].im, 0.0, epsilon = 1e-15);
        assert!(r.amplitudes()[0].re > 0.0);
    }

    #[test]
    fn born_probability_examples() {
        assert_abs_diff_eq!(
            born_probability(&Ray::zero(), &Ray::zero()),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            born_probability(&Ray::zero(), &Ray::plus()),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            born_probability(&Ray::zero(), &Ray::one()),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn measurement_requires_orthogonal_basis() {
        assert!(ProjectiveMeasurement::new(Ray::zero(), Ray::plus()).is_err());
        let m = ProjectiveMeasurement::from_axis(&BlochVector::Y_PLUS).unwrap();
        assert_vec(m.outcome(1).bloch(), BlochVector::Y_MINUS);
    }

    #[test]
    fn steering_psi_plus_computational() {
        let e = steered_ensemble(
            &TwoQubitState::psi_plus(),
            &ProjectiveMeasurement::computational(),
        );
        assert_abs_diff_eq!(e.outcomes[0].probability, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e.outcomes[1].probability, 0.5, epsilon = 1e-12);
        // Projection pairs A=|0> with B=|1> for this state.
        assert_eq!(e.outcomes[0].state.unwrap(), Ray::one());
        assert_eq!(e.outcomes[1].state.unwrap(), Ray::zero());
    }

    #[test]
    fn steering_psi_plus_hadamard() {
        let e = steered_ensemble(
            &TwoQubitState::psi_plus(),
            &ProjectiveMeasurement::hadamard(),
        );
        assert_eq!(e.outcomes[0].state.unwrap(), Ray::plus());
        assert_eq!(e.outcomes[1].state.unwrap(), Ray::minus());
        for o in &e.outcomes {
            assert_abs_diff_eq!(o.probability, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn product_state_is_not_steered() {
        let joint = TwoQubitState::product(&Ray::zero(), &Ray::zero());
        let e = steered_ensemble(&joint, &ProjectiveMeasurement::hadamard());
        for o in &e.outcomes {
            assert_eq!(o.state.unwrap(), Ray::zero());
            assert_abs_diff_eq!(o.probability, 0.5, epsilon = 1e-12);
        }
        let e = steered_ensemble(&joint, &ProjectiveMeasurement::computational());
        assert_eq!(e.outcomes[0].state.unwrap(), Ray::zero());
        assert_abs_diff_eq!(e.outcomes[1].probability, 0.0);
        assert!(e.outcomes[1].state.is_none());
    }

    #[test]
    fn joint_state_must_be_normalized() {
        let z = c(0.0, 0.0);
        assert!(TwoQubitState::new([c(1.0, 0.0), c(1.0, 0.0), z, z]).is_err());
    }

    fn unit_vector() -> impl Strategy<Value = BlochVector> {
        (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(t, p)| {
            let s = (1.0 - t * t).sqrt();
            BlochVector::new(s * p.cos(), s * p.sin(), t)
        })
    }

    proptest! {
        #[test]
        fn bloch_round_trip(v in unit_vector()) {
            let back = ray_to_bloch(&bloch_to_ray(&v).unwrap());
            prop_assert!(back.approx_eq(&v, 1e-10));
            prop_assert!(back.is_unit());
        }

        #[test]
        fn born_rule_complements_and_symmetry(u in unit_vector(), v in unit_vector()) {
            let psi = bloch_to_ray(&u).unwrap();
            let phi = bloch_to_ray(&v).unwrap();
            let p = born_probability(&psi, &phi);
            prop_assert!((p + born_probability(&psi, &phi.orthogonal()) - 1.0).abs() <= 1e-12);
            prop_assert!((p - born_probability(&phi, &psi)).abs() <= 1e-12);
            prop_assert!((p - 0.5 * (1.0 + u.dot(&v))).abs() <= 1e-12);
        }

        #[test]
        fn psi_plus_steers_antipodal_pairs(n in unit_vector()) {
            let m = ProjectiveMeasurement::from_axis(&n).unwrap();
            let joint = TwoQubitState::psi_plus();
            let e = steered_ensemble(&joint, &m);
            let b0 = e.outcomes[0].state.unwrap().bloch();
            let b1 = e.outcomes[1].state.unwrap().bloch();
            prop_assert!((b0 + b1).norm() <= 1e-12);
            prop_assert!(e.average_bloch().approx_eq(&joint.reduced_bloch_b(), 1e-12));
            let total: f64 = e.outcomes.iter().map(|o| o.probability).sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }
    }
}
