//! Executable forms of the steering-based nonlocality argument and the
//! single-particle two-detector argument.

use rayon::prelude::*;

use crate::analysis::{
    classify, format_point, require_quantum_statistics, StatePairSampler, Verdict,
};
use crate::bloch::{
    born_probability, steered_ensemble, ProjectiveMeasurement, Ray, SteeredEnsemble, TwoQubitState,
};
use crate::error::{Error, Result};
use crate::measures::{
    classical_fidelity, expectation, mix, support_overlap, total_variation_distance,
    EpistemicState, OnticPoint, Overlap, QuadratureConfig, FIDELITY_THRESHOLD,
};
use crate::models::OntologicalModel;
use crate::report::Report;

/// Epistemic states Bob's qubit can be steered into from `|ψ+⟩`, and the two
/// unconditioned mixtures.
#[derive(Debug, Clone)]
pub struct RemotePreparations {
    pub p0: EpistemicState,
    pub p1: EpistemicState,
    pub p_plus: EpistemicState,
    pub p_minus: EpistemicState,
    pub p01: EpistemicState,
    pub p_pm: EpistemicState,
    /// Branch probabilities `(P0, P1)` and `(P+, P−)` from the steering oracle.
    pub weights_01: (f64, f64),
    pub weights_pm: (f64, f64),
}

/// Orders the two steered branches so that the first one is the state closest to `target`.
fn branches(ensemble: &SteeredEnsemble, target: &Ray) -> Result<[(f64, Ray); 2]> {
    let mut out = Vec::with_capacity(2);
    for o in &ensemble.outcomes {
        let state = o
            .state
            .ok_or_else(|| Error::domain("steering produced a zero-probability branch"))?;
        out.push((o.probability, state));
    }
    if out.len() != 2 {
        return Err(Error::domain("expected a two-outcome steered ensemble"));
    }
    if born_probability(&out[1].1, target) > born_probability(&out[0].1, target) {
        out.swap(0, 1);
    }
    Ok([out[0], out[1]])
}

/// Steers Bob's qubit with the two measurements on Alice's side and maps every
/// branch through the model.
pub fn build_remote_preparations(model: &dyn OntologicalModel) -> Result<RemotePreparations> {
    let joint = TwoQubitState::psi_plus();
    let [(w0, s0), (w1, s1)] = branches(
        &steered_ensemble(&joint, &ProjectiveMeasurement::computational()),
        &Ray::zero(),
    )?;
    let [(wp, sp), (wm, sm)] = branches(
        &steered_ensemble(&joint, &ProjectiveMeasurement::hadamard()),
        &Ray::plus(),
    )?;
    let p0 = model.prepare(&s0);
    let p1 = model.prepare(&s1);
    let p_plus = model.prepare(&sp);
    let p_minus = model.prepare(&sm);
    let p01 = mix(vec![(w0, p0.clone()), (w1, p1.clone())])?;
    let p_pm = mix(vec![(wp, p_plus.clone()), (wm, p_minus.clone())])?;
    Ok(RemotePreparations {
        p0,
        p1,
        p_plus,
        p_minus,
        p01,
        p_pm,
        weights_01: (w0, w1),
        weights_pm: (wp, wm),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalityKind {
    NonlocalByTheorem1,
    EscapesTheorem1,
}

impl LocalityKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LocalityKind::NonlocalByTheorem1 => "nonlocal-by-theorem1",
            LocalityKind::EscapesTheorem1 => "escapes-theorem1",
        }
    }
}

/// Fidelity between one of `P±` and one of `P0/P1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFidelity {
    pub label: &'static str,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalityVerdict {
    pub model: String,
    pub kind: LocalityKind,
    /// In the order `(P+,P0)`, `(P+,P1)`, `(P−,P0)`, `(P−,P1)`.
    pub fidelities: Vec<PairFidelity>,
    pub overlap_witness: Option<(&'static str, OnticPoint)>,
}

impl LocalityVerdict {
    pub fn fidelity(&self, label: &str) -> Option<f64> {
        self.fidelities
            .iter()
            .find(|p| p.label == label)
            .map(|p| p.fidelity)
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new()
            .with("model", self.model.as_str())
            .with("verdict", self.kind.as_str());
        for p in &self.fidelities {
            r.push(format!("fidelity_{}", p.label), p.fidelity);
        }
        if let Some((label, point)) = &self.overlap_witness {
            r.push("witness_pair", *label);
            r.push("witness_point", format_point(point));
        }
        r
    }
}

/// Certificate check for "ψ-ontic and reproduces quantum statistics implies
/// not locally causal".
///
/// If the four steered pairs are pairwise disjoint, the two unconditioned
/// mixtures cannot coincide, so the model cannot satisfy local causality.
/// Otherwise the overlap is reported as the escape route.
pub fn theorem1_check(
    model: &dyn OntologicalModel,
    cfg: &QuadratureConfig,
) -> Result<LocalityVerdict> {
    require_quantum_statistics(model, cfg)?;
    let prep = build_remote_preparations(model)?;
    let pairs: [(&'static str, &EpistemicState, &EpistemicState); 4] = [
        ("P+,P0", &prep.p_plus, &prep.p0),
        ("P+,P1", &prep.p_plus, &prep.p1),
        ("P-,P0", &prep.p_minus, &prep.p0),
        ("P-,P1", &prep.p_minus, &prep.p1),
    ];
    let fidelities: Vec<PairFidelity> = pairs
        .par_iter()
        .map(|(label, a, b)| {
            classical_fidelity(a, b, cfg).map(|fidelity| PairFidelity { label, fidelity })
        })
        .collect::<Result<_>>()?;
    let overlapping = fidelities
        .iter()
        .position(|p| p.fidelity > FIDELITY_THRESHOLD);
    let (kind, overlap_witness) = match overlapping {
        None => (LocalityKind::NonlocalByTheorem1, None),
        Some(i) => {
            let (label, a, b) = pairs[i];
            let witness = match support_overlap(a, b, cfg)? {
                Overlap::Overlapping { witness, .. } => Some((label, witness)),
                Overlap::Disjoint => None,
            };
            (LocalityKind::EscapesTheorem1, witness)
        }
    };
    Ok(LocalityVerdict {
        model: model.name().to_string(),
        kind,
        fidelities,
        overlap_witness,
    })
}

/// Total variation distance between the two unconditioned remote
/// preparations; zero when the model assigns them the same epistemic state.
pub fn local_causality_residual(
    model: &dyn OntologicalModel,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    require_quantum_statistics(model, cfg)?;
    let prep = build_remote_preparations(model)?;
    total_variation_distance(&prep.p01, &prep.p_pm, cfg)
}

/// Joint detection probabilities for one particle and two detectors A and B.
#[derive(Debug, Clone, PartialEq)]
pub struct Diffraction1927Report {
    pub model: String,
    pub p_detect_a: f64,
    pub p_detect_b: f64,
    pub p_joint_factorized: f64,
    pub p_joint_quantum: f64,
    pub contradiction: bool,
}

/// Joint probabilities that differ by more than this are contradictory.
pub const CONTRADICTION_TOLERANCE: f64 = 1e-9;

impl Diffraction1927Report {
    pub fn to_report(&self) -> Report {
        Report::new()
            .with("model", self.model.as_str())
            .with("p_detect_a", self.p_detect_a)
            .with("p_detect_b", self.p_detect_b)
            .with("p_joint_factorized", self.p_joint_factorized)
            .with("p_joint_quantum", self.p_joint_quantum)
            .with("contradiction", self.contradiction)
    }
}

/// The two-detector argument for `ψ = (|A⟩ + |B⟩)/√2`, with detection sites
/// encoded as `|A⟩ = |0⟩` and `|B⟩ = |1⟩`.
pub fn einstein_1927_check(
    model: &dyn OntologicalModel,
    sampler: &StatePairSampler,
    cfg: &QuadratureConfig,
) -> Result<Diffraction1927Report> {
    einstein_1927_check_state(model, &Ray::plus(), sampler, cfg)
}

/// [`einstein_1927_check`] for an arbitrary single-particle state `psi`.
///
/// Refused unless the model is ψ-complete: only then does the ontic state
/// fix the detection probabilities to the quantum ones, so that local
/// detection events must factorize given `ψ`.
pub fn einstein_1927_check_state(
    model: &dyn OntologicalModel,
    psi: &Ray,
    sampler: &StatePairSampler,
    cfg: &QuadratureConfig,
) -> Result<Diffraction1927Report> {
    let class = classify(model, sampler, cfg)?;
    if class.verdict != Verdict::PsiComplete {
        return Err(Error::HypothesisRefused(format!(
            "blocked: model is not psi-complete (classified {}); with supplementary \
             variables there is no reason to assume p(1A|psi,omega) = p(1A|psi), so the \
             detections need not factorize given psi",
            class.verdict
        )));
    }
    let detectors = ProjectiveMeasurement::computational();
    let state = model.prepare(psi);
    let indicator = model.indicator(&detectors);
    let p_detect_a = expectation(&state, indicator.outcome(0), cfg)?;
    let p_detect_b = expectation(&state, indicator.outcome(1), cfg)?;
    let p_joint_factorized = p_detect_a * p_detect_b;
    // One particle, one projective measurement: ⟨ψ|Π_A Π_B|ψ⟩.
    let [a, b] = detectors.basis();
    let p_joint_quantum = (psi.inner(a) * a.inner(b) * b.inner(psi)).norm();
    Ok(Diffraction1927Report {
        model: model.name().to_string(),
        p_detect_a,
        p_detect_b,
        p_joint_factorized,
        p_joint_quantum,
        contradiction: (p_joint_factorized - p_joint_quantum).abs() > CONTRADICTION_TOLERANCE,
    })
}
