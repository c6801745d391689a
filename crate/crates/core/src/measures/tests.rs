use std::f64::consts::{PI, SQRT_2, TAU};

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use super::*;
use crate::models::{step, KochenSpecker};

/// F(KS|0⟩, KS|+⟩) = ¼ Γ(3/4)² / Γ(3/2), cross-checked by adaptive 2-D quadrature.
const KS_FIDELITY_ZERO_PLUS: f64 = 0.4236065423969894;

/// TVD((1/2π)|ẑ·λ|, (1/2π)|x̂·λ|) = √2 − 1.
const KS_MIXTURE_TVD: f64 = SQRT_2 - 1.0;

fn grid() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn atom(v: BlochVector) -> EpistemicState {
    EpistemicState::point_mass(OnticSpace::Sphere, OnticPoint::single(v).unwrap()).unwrap()
}

fn ks(v: BlochVector) -> EpistemicState {
    EpistemicState::density(OnticSpace::Sphere, KochenSpecker::density(v)).unwrap()
}

fn sphere_fn(f: impl Fn(&BlochVector) -> f64 + Send + Sync + 'static) -> Response {
    Response::new(OnticSpace::Sphere, move |l| f(&l[0]))
}

/// Midpoint rule in (cos θ, φ) on the standard frame, independent of `SphereRule`.
fn brute_force(n: usize, f: impl Fn(&BlochVector) -> f64) -> f64 {
    let (nt, np) = (n, 2 * n);
    let mut total = 0.0;
    for i in 0..nt {
        let t = -1.0 + 2.0 * (i as f64 + 0.5) / nt as f64;
        let s = (1.0 - t * t).sqrt();
        for j in 0..np {
            let p = TAU * (j as f64 + 0.5) / np as f64;
            total += f(&BlochVector::new(s * p.cos(), s * p.sin(), t));
        }
    }
    total * 4.0 * PI / (nt * np) as f64
}

#[test]
fn point_mass_expectation_is_exact() {
    let f = sphere_fn(|l| 0.5 * (1.0 + l.x));
    assert_eq!(
        expectation(&atom(BlochVector::Z_PLUS), &f, &grid()).unwrap(),
        0.5
    );
}

#[test]
fn ks_state_lives_on_upper_hemisphere() {
    let f =
        sphere_fn(|l| step(l.z)).with_breaklines(|_, _| vec![Circle::great(BlochVector::Z_PLUS)]);
    assert_abs_diff_eq!(
        expectation(&ks(BlochVector::Z_PLUS), &f, &grid()).unwrap(),
        1.0,
        epsilon = 1e-12
    );
}

#[test]
fn symmetric_atom_mixture_has_zero_mean() {
    let m = mix(vec![
        (0.5, atom(BlochVector::Z_PLUS)),
        (0.5, atom(BlochVector::Z_MINUS)),
    ])
    .unwrap();
    assert_eq!(expectation(&m, &sphere_fn(|l| l.z), &grid()).unwrap(), 0.0);
}

#[test]
fn space_mismatch_is_an_error() {
    let f = Response::new(OnticSpace::ProductOfSpheres(2), |_| 1.0);
    assert!(matches!(
        expectation(&atom(BlochVector::Z_PLUS), &f, &grid()),
        Err(Error::SpaceMismatch { .. })
    ));
    let projective = EpistemicState::point_mass(
        OnticSpace::ProjectiveHilbertAsSphere,
        OnticPoint::single(BlochVector::Z_PLUS).unwrap(),
    )
    .unwrap();
    assert!(classical_fidelity(&projective, &atom(BlochVector::Z_PLUS), &grid()).is_err());
    assert!(total_variation_distance(&projective, &atom(BlochVector::Z_PLUS), &grid()).is_err());
    assert!(support_overlap(&projective, &atom(BlochVector::Z_PLUS), &grid()).is_err());
    assert!(mix(vec![(0.5, projective), (0.5, atom(BlochVector::Z_PLUS))]).is_err());
}

#[test]
fn constructors_validate_structure() {
    assert!(OnticPoint::single(BlochVector::new(0.0, 0.0, 0.5)).is_err());
    let two = OnticPoint::new(vec![BlochVector::Z_PLUS, BlochVector::X_PLUS]).unwrap();
    assert!(EpistemicState::point_mass(OnticSpace::Sphere, two.clone()).is_err());
    assert!(EpistemicState::point_mass(OnticSpace::ProductOfSpheres(2), two).is_ok());
    assert!(EpistemicState::density(OnticSpace::ProductOfSpheres(2), Density::uniform()).is_err());
    let pair = EpistemicState::product(vec![atom(BlochVector::Z_PLUS), atom(BlochVector::X_PLUS)])
        .unwrap();
    assert!(EpistemicState::product(vec![pair]).is_err());
    assert!(QuadratureConfig::gauss_grid(0, 10).is_err());
    assert!(QuadratureConfig::monte_carlo(0, 1).is_err());
}

#[test]
fn mix_validates_weights() {
    let a = atom(BlochVector::Z_PLUS);
    assert!(mix(vec![]).is_err());
    assert!(mix(vec![(0.7, a.clone()), (0.7, a.clone())]).is_err());
    assert!(mix(vec![(-0.5, a.clone()), (1.5, a.clone())]).is_err());
    assert!(mix(vec![(f64::NAN, a.clone())]).is_err());
    let single = mix(vec![(1.0, a)]).unwrap();
    assert!(single.as_point_mass().is_some());
}

#[test]
fn ks_half_half_mixture_is_abs_cosine() {
    let m = mix(vec![
        (0.5, ks(BlochVector::Z_PLUS)),
        (0.5, ks(BlochVector::Z_MINUS)),
    ])
    .unwrap();
    let rows = export::marginal_rows(&m, 24, 48);
    assert_eq!(rows.len(), 24 * 48);
    for row in rows {
        let export::ExportRow::Grid { theta, value, .. } = row else {
            panic!("densities only");
        };
        assert_abs_diff_eq!(value, theta.cos().abs() / TAU, epsilon = 1e-15);
    }
}

#[test]
fn fidelity_of_distinct_atoms_is_zero() {
    assert_eq!(
        classical_fidelity(
            &atom(BlochVector::Z_PLUS),
            &atom(BlochVector::X_PLUS),
            &grid()
        )
        .unwrap(),
        0.0
    );
    assert_eq!(
        classical_fidelity(
            &atom(BlochVector::Z_PLUS),
            &atom(BlochVector::Z_PLUS),
            &grid()
        )
        .unwrap(),
        1.0
    );
}

#[test]
fn fidelity_of_atom_and_density_is_zero() {
    assert_eq!(
        classical_fidelity(
            &atom(BlochVector::Z_PLUS),
            &ks(BlochVector::Z_PLUS),
            &grid()
        )
        .unwrap(),
        0.0
    );
}

#[test]
fn fidelity_of_density_with_itself_is_one() {
    for v in [BlochVector::Z_PLUS, BlochVector::new(0.48, -0.6, 0.64)] {
        assert_abs_diff_eq!(
            classical_fidelity(&ks(v), &ks(v), &grid()).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }
    let u = EpistemicState::density(OnticSpace::Sphere, Density::uniform()).unwrap();
    assert_abs_diff_eq!(
        classical_fidelity(&u, &u, &grid()).unwrap(),
        1.0,
        epsilon = 1e-12
    );
}

#[test]
fn fidelity_of_atom_mixtures_is_bhattacharyya() {
    let m = mix(vec![
        (0.5, atom(BlochVector::Z_PLUS)),
        (0.5, atom(BlochVector::X_PLUS)),
    ])
    .unwrap();
    assert_abs_diff_eq!(
        classical_fidelity(&m, &atom(BlochVector::Z_PLUS), &grid()).unwrap(),
        0.5f64.sqrt(),
        epsilon = 1e-15
    );
}

#[test]
fn ks_zero_plus_fidelity_matches_oracle() {
    let oracle = brute_force(2000, |l| (step(l.z) * l.z * step(l.x) * l.x).sqrt() / PI);
    assert_abs_diff_eq!(oracle, KS_FIDELITY_ZERO_PLUS, epsilon = 1e-4);
    let f =
        classical_fidelity(&ks(BlochVector::Z_PLUS), &ks(BlochVector::X_PLUS), &grid()).unwrap();
    // √ endpoint behaviour at the support edges limits Gauss-Legendre here.
    assert_abs_diff_eq!(f, KS_FIDELITY_ZERO_PLUS, epsilon = 2e-6);
}

#[test]
fn ks_orthogonal_states_have_zero_fidelity() {
    let f =
        classical_fidelity(&ks(BlochVector::Z_PLUS), &ks(BlochVector::Z_MINUS), &grid()).unwrap();
    assert_eq!(f, 0.0);
    assert_eq!(
        support_overlap(&ks(BlochVector::Z_PLUS), &ks(BlochVector::Z_MINUS), &grid()).unwrap(),
        Overlap::Disjoint
    );
}

#[test]
fn overlap_of_same_atom_has_atom_witness() {
    match support_overlap(
        &atom(BlochVector::Z_PLUS),
        &atom(BlochVector::Z_PLUS),
        &grid(),
    )
    .unwrap()
    {
        Overlap::Overlapping { witness, fidelity } => {
            assert_eq!(witness.coords(), &[BlochVector::Z_PLUS]);
            assert_eq!(fidelity, 1.0);
        }
        Overlap::Disjoint => panic!("same atom must overlap"),
    }
}

#[test]
fn ks_zero_plus_overlap_witness_is_in_quarter_sphere() {
    for cfg in [grid(), QuadratureConfig::monte_carlo(50_000, 9).unwrap()] {
        match support_overlap(&ks(BlochVector::Z_PLUS), &ks(BlochVector::X_PLUS), &cfg).unwrap() {
            Overlap::Overlapping { witness, .. } => {
                let w = witness.coords()[0];
                assert!(w.x > 0.0 && w.z > 0.0, "{w}");
            }
            Overlap::Disjoint => panic!("KS states of |0> and |+> overlap"),
        }
    }
}

#[test]
fn tvd_examples() {
    let k = ks(BlochVector::new(0.0, 0.6, 0.8));
    assert_eq!(total_variation_distance(&k, &k, &grid()).unwrap(), 0.0);
    let zs = mix(vec![
        (0.5, atom(BlochVector::Z_PLUS)),
        (0.5, atom(BlochVector::Z_MINUS)),
    ])
    .unwrap();
    let xs = mix(vec![
        (0.5, atom(BlochVector::X_PLUS)),
        (0.5, atom(BlochVector::X_MINUS)),
    ])
    .unwrap();
    assert_eq!(total_variation_distance(&zs, &xs, &grid()).unwrap(), 1.0);
    assert_eq!(total_variation_distance(&zs, &zs, &grid()).unwrap(), 0.0);
    let partial = mix(vec![
        (0.5, atom(BlochVector::Z_PLUS)),
        (0.5, atom(BlochVector::X_PLUS)),
    ])
    .unwrap();
    assert_abs_diff_eq!(
        total_variation_distance(&zs, &partial, &grid()).unwrap(),
        0.5,
        epsilon = 1e-15
    );
}

#[test]
fn ks_mixture_tvd_matches_oracle() {
    let zs = mix(vec![
        (0.5, ks(BlochVector::Z_PLUS)),
        (0.5, ks(BlochVector::Z_MINUS)),
    ])
    .unwrap();
    let xs = mix(vec![
        (0.5, ks(BlochVector::X_PLUS)),
        (0.5, ks(BlochVector::X_MINUS)),
    ])
    .unwrap();
    let oracle = brute_force(2000, |l| 0.5 * (l.z.abs() - l.x.abs()).abs() / TAU);
    assert_abs_diff_eq!(oracle, KS_MIXTURE_TVD, epsilon = 1e-5);
    let tvd = total_variation_distance(&zs, &xs, &grid()).unwrap();
    assert_abs_diff_eq!(tvd, KS_MIXTURE_TVD, epsilon = 1e-10);
}

#[test]
fn product_state_integrates_jointly() {
    let uniform = EpistemicState::density(OnticSpace::Sphere, Density::uniform()).unwrap();
    let s = EpistemicState::product(vec![ks(BlochVector::Z_PLUS), uniform]).unwrap();
    let f = Response::new(OnticSpace::ProductOfSpheres(2), |l| {
        l[0].z + l[1].z * l[1].z
    });
    // E[λ′_z] = 2/3 under the KS density around z; E[λ″_z²] = 1/3 under the uniform one.
    assert_abs_diff_eq!(
        expectation(&s, &f, &QuadratureConfig::gauss_grid(32, 64).unwrap()).unwrap(),
        1.0,
        epsilon = 1e-10
    );
}

#[test]
fn monte_carlo_agrees_with_grid_within_three_sigma() {
    let mc = QuadratureConfig::monte_carlo(400_000, 11).unwrap();
    let states = [
        ks(BlochVector::new(0.0, 0.6, 0.8)),
        mix(vec![
            (0.3, ks(BlochVector::X_PLUS)),
            (0.7, ks(BlochVector::Y_MINUS)),
        ])
        .unwrap(),
        EpistemicState::density(OnticSpace::Sphere, Density::uniform()).unwrap(),
    ];
    let fns = [
        sphere_fn(|l| l.x * l.x + 0.3 * l.y),
        sphere_fn(|l| (2.0 * l.z).sin() + l.x * l.y * l.z),
        sphere_fn(|l| (l.x + l.y).exp()),
    ];
    for s in &states {
        for f in &fns {
            let g = expectation(s, f, &grid()).unwrap();
            let m = expectation_estimate(s, f, &mc).unwrap();
            assert!(
                (g - m.value).abs() <= 3.0 * m.std_error,
                "grid {g} vs mc {} ± {}",
                m.value,
                m.std_error
            );
        }
    }
}

#[test]
fn monte_carlo_is_reproducible_across_thread_counts() {
    let mc = QuadratureConfig::monte_carlo(100_000, 5).unwrap();
    let s = ks(BlochVector::new(0.6, 0.0, 0.8));
    let f = sphere_fn(|l| l.x * l.z);
    let a = expectation(&s, &f, &mc).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let b = pool.install(|| expectation(&s, &f, &mc).unwrap());
    assert_eq!(a.to_bits(), b.to_bits());
}

fn unit_vector() -> impl Strategy<Value = BlochVector> {
    (-1.0f64..1.0, 0.0f64..TAU).prop_map(|(t, p)| {
        let s = (1.0 - t * t).sqrt();
        BlochVector::new(s * p.cos(), s * p.sin(), t)
    })
}

fn small_state() -> impl Strategy<Value = EpistemicState> {
    prop_oneof![
        unit_vector().prop_map(atom),
        unit_vector().prop_map(ks),
        Just(EpistemicState::density(OnticSpace::Sphere, Density::uniform()).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn expectation_is_linear_in_mixtures(
        a in small_state(),
        b in small_state(),
        w in 0.0f64..1.0,
        c in unit_vector(),
    ) {
        let cfg = QuadratureConfig::gauss_grid(32, 64).unwrap();
        let f = sphere_fn(move |l| (c.dot(l) * 3.0).cos() + l.z);
        let m = mix(vec![(w, a.clone()), (1.0 - w, b.clone())]).unwrap();
        let lhs = expectation(&m, &f, &cfg).unwrap();
        let rhs = w * expectation(&a, &f, &cfg).unwrap() + (1.0 - w) * expectation(&b, &f, &cfg).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9);
        let one = sphere_fn(|_| 1.0);
        prop_assert!((expectation(&m, &one, &grid()).unwrap() - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(a in small_state(), b in small_state()) {
        let cfg = QuadratureConfig::gauss_grid(48, 96).unwrap();
        let ab = classical_fidelity(&a, &b, &cfg).unwrap();
        let ba = classical_fidelity(&b, &a, &cfg).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((classical_fidelity(&a, &a, &cfg).unwrap() - 1.0).abs() <= 1e-9);
        let tvd = total_variation_distance(&a, &b, &cfg).unwrap();
        prop_assert!((0.0..=1.0).contains(&tvd));
        // Bhattacharyya–TVD inequality: 1 − F ≤ TVD.
        prop_assert!(1.0 - ab <= tvd + 1e-6);
    }
}
