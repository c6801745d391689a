//! Classification of models into ψ-complete, ψ-supplemented and ψ-epistemic,
//! and the two reductions relating the Bell-Mermin model to the other two.

use std::fmt;

use rayon::prelude::*;

use crate::bloch::{bloch_to_ray, born_probability, BlochVector, ProjectiveMeasurement, Ray};
use crate::error::{Error, Result};
use crate::measures::sampling::ordered_chunks;
use crate::measures::{
    classical_fidelity, expectation, expectation_estimate, support_overlap, Circle, Density,
    EpistemicState, OnticPoint, OnticSpace, Overlap, QuadratureConfig, Response, SphereStream,
    FIDELITY_THRESHOLD,
};
use crate::models::{step, BellMermin, KochenSpecker, OntologicalModel};
use crate::report::Report;

/// Absolute Born-rule tolerance under a Gauss grid.
pub const GRID_BORN_TOLERANCE: f64 = 1e-6;

/// Standard errors allowed under Monte Carlo.
pub const MC_BORN_SIGMAS: f64 = 3.0;

pub const BORN_TEST_PAIRS: usize = 100;
pub const BORN_TEST_SEED: u64 = 0;
const BORN_TEST_STREAM: u64 = 1_000;

/// Deterministic pseudo-random `(ψ, M)` pairs drawn uniformly on the sphere.
pub fn born_test_pairs(count: usize, seed: u64) -> Vec<(Ray, ProjectiveMeasurement)> {
    let stream = SphereStream::new(seed, BORN_TEST_STREAM);
    (0..count as u64)
        .map(|i| {
            let psi = bloch_to_ray(&stream.sample(2 * i)).expect("sphere samples are unit vectors");
            let m = ProjectiveMeasurement::from_axis(&stream.sample(2 * i + 1))
                .expect("sphere samples are unit vectors");
            (psi, m)
        })
        .collect()
}

/// One comparison of a model probability with the Born rule.
#[derive(Debug, Clone, PartialEq)]
pub struct BornCheck {
    pub psi: Ray,
    pub measurement: ProjectiveMeasurement,
    pub outcome: usize,
    pub model_probability: f64,
    pub born_probability: f64,
    pub std_error: f64,
}

impl BornCheck {
    pub fn deviation(&self) -> f64 {
        (self.model_probability - self.born_probability).abs()
    }

    fn within(&self, cfg: &QuadratureConfig) -> bool {
        if cfg.is_monte_carlo() {
            self.deviation() <= MC_BORN_SIGMAS * self.std_error + 1e-12
        } else {
            self.deviation() <= GRID_BORN_TOLERANCE
        }
    }
}

/// Summary of a Born-rule verification run.
#[derive(Debug, Clone, PartialEq)]
pub struct BornRuleReport {
    pub model: String,
    pub checks: usize,
    pub max_deviation: f64,
    pub worst: Option<BornCheck>,
    /// First check outside tolerance, if any.
    pub failure: Option<BornCheck>,
}

impl BornRuleReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new()
            .with("model", self.model.as_str())
            .with("checks", self.checks)
            .with("max_deviation", self.max_deviation)
            .with("passed", self.passed());
        if let Some(w) = &self.worst {
            r.push("worst_psi", w.psi.bloch());
            r.push("worst_axis", w.measurement.axis());
            r.push("worst_outcome", w.outcome);
            r.push("worst_model_probability", w.model_probability);
            r.push("worst_born_probability", w.born_probability);
        }
        r
    }

    fn into_error(self) -> Option<Error> {
        self.failure.map(|f| Error::NotQuantum {
            psi: f.psi.bloch().to_string(),
            axis: f.measurement.axis().to_string(),
            outcome: f.outcome,
            model_probability: f.model_probability,
            born_probability: f.born_probability,
        })
    }
}

/// Compares every outcome of every pair against `|⟨φ|ψ⟩|²`.
pub fn verify_born_rule(
    model: &dyn OntologicalModel,
    pairs: &[(Ray, ProjectiveMeasurement)],
    cfg: &QuadratureConfig,
) -> Result<BornRuleReport> {
    let mut checks = Vec::with_capacity(2 * pairs.len());
    for (psi, m) in pairs {
        let state = model.prepare(psi);
        let indicator = model.indicator(m);
        for (k, response) in indicator.outcomes().iter().enumerate() {
            let est = expectation_estimate(&state, response, cfg)?;
            checks.push(BornCheck {
                psi: *psi,
                measurement: *m,
                outcome: k,
                model_probability: est.value,
                born_probability: born_probability(psi, m.outcome(k)),
                std_error: est.std_error,
            });
        }
    }
    let worst = checks
        .iter()
        .max_by(|a, b| a.deviation().total_cmp(&b.deviation()))
        .cloned();
    Ok(BornRuleReport {
        model: model.name().to_string(),
        checks: checks.len(),
        max_deviation: worst.as_ref().map_or(0.0, BornCheck::deviation),
        failure: checks.iter().find(|c| !c.within(cfg)).cloned(),
        worst,
    })
}

/// Runs [`verify_born_rule`] on the standard pairs and turns a failure into
/// [`Error::NotQuantum`].
pub fn require_quantum_statistics(
    model: &dyn OntologicalModel,
    cfg: &QuadratureConfig,
) -> Result<BornRuleReport> {
    let report = verify_born_rule(
        model,
        &born_test_pairs(BORN_TEST_PAIRS, BORN_TEST_SEED),
        cfg,
    )?;
    if report.passed() {
        Ok(report)
    } else {
        Err(report.into_error().expect("failed report has a failure"))
    }
}

/// A finite, deterministic family of state pairs standing in for "all pairs".
#[derive(Debug, Clone, PartialEq)]
pub struct StatePairSampler {
    pairs: Vec<(Ray, Ray)>,
}

impl StatePairSampler {
    /// The canonical pairs `(|0⟩,|+⟩)` and `(|0⟩,|1⟩)` followed by every
    /// unordered pair of `n_directions` Fibonacci-sphere directions.
    pub fn new(n_directions: usize) -> Self {
        let rays: Vec<Ray> = fibonacci_directions(n_directions)
            .iter()
            .map(|v| bloch_to_ray(v).expect("Fibonacci directions are unit vectors"))
            .collect();
        let mut pairs = vec![(Ray::zero(), Ray::plus()), (Ray::zero(), Ray::one())];
        for i in 0..rays.len() {
            for j in i + 1..rays.len() {
                pairs.push((rays[i], rays[j]));
            }
        }
        StatePairSampler { pairs }
    }

    /// 32 directions, 498 pairs.
    pub fn standard() -> Self {
        StatePairSampler::new(32)
    }

    /// Custom pair list; it must contain an orthogonal and a nonorthogonal pair.
    pub fn from_pairs(pairs: Vec<(Ray, Ray)>) -> Result<Self> {
        let orthogonal = |(a, b): &(Ray, Ray)| born_probability(a, b) <= 1e-12;
        if !pairs.iter().any(orthogonal) || pairs.iter().all(orthogonal) {
            return Err(Error::domain(
                "a pair sampler needs at least one orthogonal and one nonorthogonal pair",
            ));
        }
        Ok(StatePairSampler { pairs })
    }

    pub fn pairs(&self) -> &[(Ray, Ray)] {
        &self.pairs
    }

    /// Distinct rays appearing in the pairs, in first-appearance order.
    pub fn rays(&self) -> Vec<Ray> {
        let mut out: Vec<Ray> = Vec::new();
        for (a, b) in &self.pairs {
            for r in [a, b] {
                if !out.contains(r) {
                    out.push(*r);
                }
            }
        }
        out
    }
}

/// `n` nearly evenly spread unit vectors on a golden-angle spiral.
pub fn fibonacci_directions(n: usize) -> Vec<BlochVector> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            BlochVector::new(r * phi.cos(), r * phi.sin(), z)
                .normalized()
                .expect("nonzero")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    PsiComplete,
    PsiSupplemented,
    PsiEpistemic,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::PsiComplete => "psi-complete",
            Verdict::PsiSupplemented => "psi-supplemented",
            Verdict::PsiEpistemic => "psi-epistemic",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Combines the two distinctions. ψ-complete requires ψ-ontic, so a model
/// with overlapping states is ψ-epistemic whatever its structure.
pub fn verdict_from(structurally_complete: bool, is_psi_ontic: bool) -> Verdict {
    match (is_psi_ontic, structurally_complete) {
        (false, _) => Verdict::PsiEpistemic,
        (true, true) => Verdict::PsiComplete,
        (true, false) => Verdict::PsiSupplemented,
    }
}

/// A pair of distinct states whose epistemic states overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub psi: Ray,
    pub phi: Ray,
    pub fidelity: f64,
    pub point: OnticPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub model: String,
    pub verdict: Verdict,
    pub is_psi_ontic: bool,
    pub structurally_complete: bool,
    pub witness: Option<Witness>,
    pub pairs_tested: usize,
    pub max_born_deviation: f64,
}

impl ClassificationReport {
    pub fn to_report(&self) -> Report {
        let mut r = Report::new()
            .with("model", self.model.as_str())
            .with("verdict", self.verdict.as_str())
            .with("is_psi_ontic", self.is_psi_ontic)
            .with("structurally_complete", self.structurally_complete)
            .with("pairs_tested", self.pairs_tested)
            .with("max_born_deviation", self.max_born_deviation);
        if let Some(w) = &self.witness {
            r.push("witness_psi", w.psi.bloch());
            r.push("witness_phi", w.phi.bloch());
            r.push("witness_fidelity", w.fidelity);
            r.push("witness_point", format_point(&w.point));
        }
        r
    }
}

pub(crate) fn format_point(p: &OnticPoint) -> String {
    p.coords()
        .iter()
        .map(|c| format!("{:?},{:?},{:?}", c.x, c.y, c.z))
        .collect::<Vec<_>>()
        .join(";")
}

/// ψ-complete structure: one sphere of ontic states and every tested
/// preparation a point mass at its own Bloch vector.
fn structurally_complete(model: &dyn OntologicalModel, rays: &[Ray]) -> bool {
    model.space().factor_count() == 1
        && rays.iter().all(|r| {
            model
                .prepare(r)
                .as_point_mass()
                .is_some_and(|p| p.coords()[0].approx_eq(&r.bloch(), 1e-12))
        })
}

/// Classifies `model` on the pairs of `sampler`, after checking that it
/// reproduces the Born rule.
pub fn classify(
    model: &dyn OntologicalModel,
    sampler: &StatePairSampler,
    cfg: &QuadratureConfig,
) -> Result<ClassificationReport> {
    let born = require_quantum_statistics(model, cfg)?;
    let pairs: Vec<(Ray, Ray)> = sampler
        .pairs()
        .iter()
        .filter(|(a, b)| a != b)
        .copied()
        .collect();
    let states: Vec<(EpistemicState, EpistemicState)> = pairs
        .iter()
        .map(|(a, b)| (model.prepare(a), model.prepare(b)))
        .collect();
    let fidelities: Vec<f64> = states
        .par_iter()
        .map(|(p, q)| classical_fidelity(p, q, cfg))
        .collect::<Result<_>>()?;

    let first_overlap = fidelities.iter().position(|f| *f > FIDELITY_THRESHOLD);
    let witness = match first_overlap {
        Some(i) => {
            let (p, q) = &states[i];
            match support_overlap(p, q, cfg)? {
                Overlap::Overlapping { witness, .. } => Some(Witness {
                    psi: pairs[i].0,
                    phi: pairs[i].1,
                    fidelity: fidelities[i],
                    point: witness,
                }),
                Overlap::Disjoint => None,
            }
        }
        None => None,
    };
    let is_psi_ontic = first_overlap.is_none();
    let complete = structurally_complete(model, &sampler.rays());
    Ok(ClassificationReport {
        model: model.name().to_string(),
        verdict: verdict_from(complete, is_psi_ontic),
        is_psi_ontic,
        structurally_complete: complete,
        witness,
        pairs_tested: pairs.len(),
        max_born_deviation: born.max_deviation,
    })
}

/// The Bell-Mermin response for outcome `phi`, averaged over the uniformly
/// distributed second vector `λ⃗″` with `λ⃗′` held fixed.
pub fn bm_conditional_indicator(
    phi: &Ray,
    lambda_prime: &BlochVector,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let point = OnticPoint::single(*lambda_prime)?;
    let fixed = EpistemicState::point_mass(OnticSpace::Sphere, point)?;
    let uniform = EpistemicState::density(OnticSpace::Sphere, Density::uniform())?;
    let state = EpistemicState::product(vec![fixed, uniform])?;
    expectation(&state, &BellMermin::response(phi.bloch()), cfg)
}

pub const REDUCTION_BINS: usize = 64;
pub const REDUCTION_SIGMAS: f64 = 4.0;
pub const MIN_REDUCTION_SAMPLES: usize = 10_000;
const DEGENERATE_NORM: f64 = 1e-12;

/// One equal-area band `lower < ψ⃗·û ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionBin {
    pub lower: f64,
    pub upper: f64,
    pub count: u64,
    pub observed: f64,
    pub expected: f64,
    pub std_error: f64,
}

impl ReductionBin {
    /// Deviation in standard errors; bins with zero expected spread must be exact.
    pub fn z_score(&self) -> f64 {
        let dev = (self.observed - self.expected).abs();
        if self.std_error > 0.0 {
            dev / self.std_error
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Histogram of the direction of `u⃗ = ψ⃗ + λ⃗″` compared with the
/// Kochen-Specker density around `ψ⃗`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    pub psi: Ray,
    pub n_samples: usize,
    pub discarded: u64,
    pub lower_hemisphere_count: u64,
    pub total_mass: f64,
    pub max_abs_deviation: f64,
    pub max_z: f64,
    pub bins: Vec<ReductionBin>,
}

impl ReductionReport {
    pub fn passed(&self) -> bool {
        self.max_z <= REDUCTION_SIGMAS && self.lower_hemisphere_count == 0
    }

    pub fn to_report(&self) -> Report {
        Report::new()
            .with("psi", self.psi.bloch())
            .with("n_samples", self.n_samples)
            .with("bins", self.bins.len())
            .with("discarded", self.discarded as usize)
            .with(
                "lower_hemisphere_count",
                self.lower_hemisphere_count as usize,
            )
            .with("total_mass", self.total_mass)
            .with("max_abs_deviation", self.max_abs_deviation)
            .with("max_z", self.max_z)
            .with("passed", self.passed())
    }
}

/// Band of `ψ⃗·λ⃗` values as an integrand on one sphere.
fn band(axis: BlochVector, lower: f64, upper: f64) -> Response {
    Response::new(OnticSpace::Sphere, move |l| {
        let c = axis.dot(&l[0]);
        step(c - lower) * (1.0 - step(c - upper))
    })
    .with_breaklines(move |_, _| vec![Circle::new(axis, lower), Circle::new(axis, upper)])
}

/// Samples `λ⃗″` uniformly, forms `û = (ψ⃗ + λ⃗″)/|ψ⃗ + λ⃗″|` and bins `ψ⃗·û`
/// into equal-area bands.
pub fn bm_to_ks_reduction(psi: &Ray, n_samples: usize, seed: u64) -> Result<ReductionReport> {
    if n_samples < MIN_REDUCTION_SAMPLES {
        return Err(Error::domain(format!(
            "the reduction needs at least {MIN_REDUCTION_SAMPLES} samples, got {n_samples}"
        )));
    }
    let axis = psi.bloch();
    let stream = SphereStream::new(seed, 0);
    let chunks = ordered_chunks(n_samples, |range| {
        let mut counts = [0u64; REDUCTION_BINS];
        let mut discarded = 0u64;
        let mut lower = 0u64;
        for lpp in stream.samples(range.start as u64, range.len()) {
            let u = axis + lpp;
            let norm = u.norm();
            if norm < DEGENERATE_NORM {
                discarded += 1;
                continue;
            }
            let c = axis.dot(&u) / norm;
            if c < 0.0 {
                lower += 1;
            }
            let idx = (((c + 1.0) * 0.5 * REDUCTION_BINS as f64) as usize).min(REDUCTION_BINS - 1);
            counts[idx] += 1;
        }
        (counts, discarded, lower)
    });
    let mut counts = [0u64; REDUCTION_BINS];
    let mut discarded = 0;
    let mut lower_count = 0;
    for (c, d, l) in chunks {
        for (acc, x) in counts.iter_mut().zip(c) {
            *acc += x;
        }
        discarded += d;
        lower_count += l;
    }
    let kept = n_samples as u64 - discarded;
    let ks = EpistemicState::density(OnticSpace::Sphere, KochenSpecker::density(axis))?;
    let grid = QuadratureConfig::default();
    let width = 2.0 / REDUCTION_BINS as f64;
    let mut bins = Vec::with_capacity(REDUCTION_BINS);
    for (i, &count) in counts.iter().enumerate() {
        let lower = -1.0 + width * i as f64;
        let upper = lower + width;
        let expected = expectation(&ks, &band(axis, lower, upper), &grid)?.clamp(0.0, 1.0);
        let observed = count as f64 / kept as f64;
        bins.push(ReductionBin {
            lower,
            upper,
            count,
            observed,
            expected,
            std_error: (expected * (1.0 - expected) / kept as f64).sqrt(),
        });
    }
    let max_abs_deviation = bins
        .iter()
        .map(|b| (b.observed - b.expected).abs())
        .fold(0.0, f64::max);
    let max_z = bins.iter().map(ReductionBin::z_score).fold(0.0, f64::max);
    Ok(ReductionReport {
        psi: *psi,
        n_samples,
        discarded,
        lower_hemisphere_count: lower_count,
        total_mass: bins.iter().map(|b| b.observed).sum(),
        max_abs_deviation,
        max_z,
        bins,
    })
}
