//! Ontological models of a qubit.
//!
//! A model fixes an ontic state space, maps each pure state to an epistemic
//! state and each projective measurement to an indicator function. The three
//! concrete models here are the Beltrametti-Bugajski (`bb`), Bell-Mermin
//! (`bm`) and Kochen-Specker (`ks`) models.

use std::f64::consts::PI;

use crate::bloch::{BlochVector, ProjectiveMeasurement, Ray};
use crate::measures::{
    Circle, Density, EpistemicState, IndicatorFunction, OnticPoint, OnticSpace, Response, Support,
};

/// An ontological model: ontic space, preparations and measurements.
pub trait OntologicalModel: Send + Sync {
    fn name(&self) -> &str;

    fn space(&self) -> OnticSpace;

    /// Epistemic state `p(λ|ψ)` associated with preparing `psi`.
    fn prepare(&self, psi: &Ray) -> EpistemicState;

    /// Response functions `p(k|λ,M)`, one per outcome of `m` in basis order.
    fn indicator(&self, m: &ProjectiveMeasurement) -> IndicatorFunction;
}

/// Heaviside step with `Θ(0) = 0`.
pub fn step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

fn atom(space: OnticSpace, v: BlochVector) -> EpistemicState {
    let point = OnticPoint::single(v).expect("Bloch vectors of rays are unit vectors");
    EpistemicState::point_mass(space, point).expect("single-factor space")
}

/// Beltrametti-Bugajski: the ontic state is the quantum state itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct BeltramettiBugajski;

impl OntologicalModel for BeltramettiBugajski {
    fn name(&self) -> &str {
        "bb"
    }

    fn space(&self) -> OnticSpace {
        OnticSpace::ProjectiveHilbertAsSphere
    }

    fn prepare(&self, psi: &Ray) -> EpistemicState {
        atom(self.space(), psi.bloch())
    }

    fn indicator(&self, m: &ProjectiveMeasurement) -> IndicatorFunction {
        let space = self.space();
        let outcomes = m
            .basis()
            .iter()
            .map(|ray| {
                let phi = ray.bloch();
                Response::new(space, move |l| 0.5 * (1.0 + phi.dot(&l[0])))
            })
            .collect();
        IndicatorFunction::new(space, outcomes).expect("outcomes share the model space")
    }
}

/// Bell-Mermin: the quantum state plus a uniformly distributed second unit vector.
#[derive(Debug, Clone, Copy, Default)]
pub struct BellMermin;

impl BellMermin {
    /// The response `Θ(φ⃗·(λ⃗′ + λ⃗″))` for the outcome with Bloch vector `phi`.
    pub fn response(phi: BlochVector) -> Response {
        Response::new(OnticSpace::ProductOfSpheres(2), move |l| {
            step(phi.dot(&(l[0] + l[1])))
        })
        .with_breaklines(move |factor, fixed| match (factor, fixed) {
            // With λ′ fixed the step flips on the circle φ⃗·λ⃗″ = −φ⃗·λ⃗′.
            (1, [lp]) => vec![Circle::new(phi, -phi.dot(lp))],
            _ => Vec::new(),
        })
    }
}

impl OntologicalModel for BellMermin {
    fn name(&self) -> &str {
        "bm"
    }

    fn space(&self) -> OnticSpace {
        OnticSpace::ProductOfSpheres(2)
    }

    fn prepare(&self, psi: &Ray) -> EpistemicState {
        let uniform = EpistemicState::density(OnticSpace::Sphere, Density::uniform())
            .expect("single-factor space");
        EpistemicState::product(vec![atom(OnticSpace::Sphere, psi.bloch()), uniform])
            .expect("two single-sphere factors")
    }

    fn indicator(&self, m: &ProjectiveMeasurement) -> IndicatorFunction {
        let first = BellMermin::response(m.axis());
        let second = first.complement();
        IndicatorFunction::new(self.space(), vec![first, second])
            .expect("outcomes share the model space")
    }
}

/// Kochen-Specker: the ontic state is a unit vector distributed over the
/// hemisphere around `ψ⃗` with density `(1/π) Θ(ψ⃗·λ⃗) ψ⃗·λ⃗`.
#[derive(Debug, Clone, Copy, Default)]
pub struct KochenSpecker;

impl KochenSpecker {
    pub fn density(psi: BlochVector) -> Density {
        Density::affine(
            "ks-hemisphere",
            Support::Hemisphere(psi),
            psi * (1.0 / PI),
            0.0,
        )
    }
}

impl OntologicalModel for KochenSpecker {
    fn name(&self) -> &str {
        "ks"
    }

    fn space(&self) -> OnticSpace {
        OnticSpace::Sphere
    }

    fn prepare(&self, psi: &Ray) -> EpistemicState {
        EpistemicState::density(self.space(), KochenSpecker::density(psi.bloch()))
            .expect("single-factor space")
    }

    fn indicator(&self, m: &ProjectiveMeasurement) -> IndicatorFunction {
        let phi = m.axis();
        let first = Response::new(self.space(), move |l| step(phi.dot(&l[0])))
            .with_breaklines(move |_, _| vec![Circle::great(phi)]);
        let second = first.complement();
        IndicatorFunction::new(self.space(), vec![first, second])
            .expect("outcomes share the model space")
    }
}

pub fn bb_model() -> BeltramettiBugajski {
    BeltramettiBugajski
}

pub fn bm_model() -> BellMermin {
    BellMermin
}

pub fn ks_model() -> KochenSpecker {
    KochenSpecker
}

/// Names accepted by [`model_by_name`].
pub const MODEL_NAMES: [&str; 3] = ["bb", "bm", "ks"];

pub fn model_by_name(name: &str) -> Option<Box<dyn OntologicalModel>> {
    match name {
        "bb" => Some(Box::new(BeltramettiBugajski)),
        "bm" => Some(Box::new(BellMermin)),
        "ks" => Some(Box::new(KochenSpecker)),
        _ => None,
    }
}

pub fn registered_models() -> Vec<Box<dyn OntologicalModel>> {
    MODEL_NAMES
        .iter()
        .filter_map(|n| model_by_name(n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::born_probability;
    use crate::measures::{
        expectation, expectation_estimate, Integrand, QuadratureConfig, StateForm,
    };
    use approx::assert_abs_diff_eq;

    fn grid() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn bb_prepare_is_atom_at_bloch_vector() {
        let s = bb_model().prepare(&Ray::zero());
        assert_eq!(s.as_point_mass().unwrap().coords(), &[BlochVector::Z_PLUS]);
    }

    #[test]
    fn bb_indicator_values() {
        let ind = bb_model().indicator(&ProjectiveMeasurement::hadamard());
        assert_abs_diff_eq!(
            ind.outcome(0).eval(&[BlochVector::Z_PLUS]),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn bm_indicator_ties_and_steps() {
        let zz = [BlochVector::Z_PLUS, BlochVector::Z_PLUS];
        let x = bm_model().indicator(&ProjectiveMeasurement::hadamard());
        assert_eq!(x.outcome(0).eval(&zz), 0.0);
        assert_eq!(x.outcome_sum(&zz), 1.0);
        let z = bm_model().indicator(&ProjectiveMeasurement::computational());
        assert_eq!(z.outcome(0).eval(&zz), 1.0);
    }

    #[test]
    fn bm_prepare_is_product_of_atom_and_uniform() {
        let s = bm_model().prepare(&Ray::plus());
        assert_eq!(s.space(), OnticSpace::ProductOfSpheres(2));
        let StateForm::Product(factors) = s.form() else {
            panic!("expected product");
        };
        assert!(
            factors[0].as_point_mass().unwrap().coords()[0].approx_eq(&BlochVector::X_PLUS, 1e-15)
        );
        let StateForm::Density(d) = factors[1].form() else {
            panic!("expected density");
        };
        assert_abs_diff_eq!(d.eval(&BlochVector::Y_MINUS), 1.0 / (4.0 * PI));
    }

    #[test]
    fn bm_marginals_recover_factors() {
        // First marginal: expectation of a function of λ′ alone equals its value at ψ⃗.
        let psi = Ray::minus_i();
        let s = bm_model().prepare(&psi);
        let f = Response::new(OnticSpace::ProductOfSpheres(2), |l| {
            l[0].x + 2.0 * l[0].y - l[0].z
        });
        let v = psi.bloch();
        assert_abs_diff_eq!(
            expectation(&s, &f, &grid()).unwrap(),
            v.x + 2.0 * v.y - v.z,
            epsilon = 1e-12
        );
        // Second marginal: uniform, so a quadratic in λ″ has the sphere average.
        let g = Response::new(OnticSpace::ProductOfSpheres(2), |l| l[1].z * l[1].z);
        assert_abs_diff_eq!(
            expectation(&s, &g, &grid()).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ks_density_values() {
        let s = ks_model().prepare(&Ray::zero());
        let StateForm::Density(d) = s.form() else {
            panic!("expected density");
        };
        assert_abs_diff_eq!(d.eval(&BlochVector::Z_PLUS), 1.0 / PI, epsilon = 1e-15);
        assert_eq!(d.eval(&BlochVector::new(0.6, 0.0, -0.8)), 0.0);
        assert_eq!(d.eval(&BlochVector::X_PLUS), 0.0);
    }

    #[test]
    fn ks_density_is_normalized() {
        let one = Response::new(OnticSpace::Sphere, |_| 1.0);
        for psi in [
            Ray::zero(),
            Ray::plus_i(),
            Ray::normalized(0.3.into(), (-0.2f64).into()).unwrap(),
        ] {
            let s = ks_model().prepare(&psi);
            assert_abs_diff_eq!(expectation(&s, &one, &grid()).unwrap(), 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn born_rule_on_named_states() {
        let cases = [
            (Ray::zero(), ProjectiveMeasurement::hadamard()),
            (Ray::plus(), ProjectiveMeasurement::computational()),
            (
                Ray::plus_i(),
                ProjectiveMeasurement::from_axis(&BlochVector::new(0.6, 0.8, 0.0)).unwrap(),
            ),
        ];
        for model in registered_models() {
            for (psi, m) in &cases {
                let state = model.prepare(psi);
                let ind = model.indicator(m);
                for k in 0..2 {
                    let p = expectation(&state, ind.outcome(k), &grid()).unwrap();
                    assert_abs_diff_eq!(p, born_probability(psi, m.outcome(k)), epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn monte_carlo_born_rule_within_three_sigma() {
        let cfg = QuadratureConfig::monte_carlo(200_000, 3).unwrap();
        let psi = Ray::normalized(0.8.into(), num_complex::Complex64::new(0.1, 0.5)).unwrap();
        let m = ProjectiveMeasurement::from_axis(
            &BlochVector::new(0.2, -0.4, 0.9).normalized().unwrap(),
        )
        .unwrap();
        for model in registered_models() {
            let est =
                expectation_estimate(&model.prepare(&psi), model.indicator(&m).outcome(0), &cfg)
                    .unwrap();
            let born = born_probability(&psi, m.outcome(0));
            assert!(
                (est.value - born).abs() <= 3.0 * est.std_error + 1e-12,
                "{}: {} vs {born} (se {})",
                model.name(),
                est.value,
                est.std_error
            );
        }
    }

    #[test]
    fn registry_resolves_names() {
        for name in MODEL_NAMES {
            assert_eq!(model_by_name(name).unwrap().name(), name);
        }
        assert!(model_by_name("nope").is_none());
    }
}
