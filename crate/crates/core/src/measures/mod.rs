//! Probability measures on ontic state spaces built from unit spheres.
//!
//! Epistemic states are kept symbolic: point masses stay exact atoms and are
//! never smeared into narrow densities, so disjointness of atoms is decided
//! structurally. Only densities are integrated numerically.

pub mod export;
pub mod quadrature;
pub mod sampling;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::bloch::BlochVector;
use crate::error::{Error, Result};

pub use quadrature::{Circle, SphereRule};
pub use sampling::SphereStream;

use sampling::{ordered_chunks, ordered_sum};

const FOUR_PI: f64 = 4.0 * PI;

/// Fidelities at or below this value count as zero overlap.
pub const FIDELITY_THRESHOLD: f64 = 1e-9;

/// Tolerance on mixture weights summing to one.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Atoms closer than this are the same point.
const ATOM_TOLERANCE: f64 = 1e-12;

/// Structure of the ontic state space Λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OnticSpace {
    /// A single unit sphere of ontic states.
    Sphere,
    /// A product of `n` unit spheres.
    ProductOfSpheres(usize),
    /// The projective Hilbert space of a qubit, identified with the Bloch sphere.
    ProjectiveHilbertAsSphere,
}

impl OnticSpace {
    pub fn factor_count(&self) -> usize {
        match self {
            OnticSpace::Sphere | OnticSpace::ProjectiveHilbertAsSphere => 1,
            OnticSpace::ProductOfSpheres(n) => *n,
        }
    }

    fn ensure_same(&self, other: &OnticSpace) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                left: *self,
                right: *other,
            })
        }
    }
}

impl fmt::Display for OnticSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OnticSpace::Sphere => write!(f, "sphere"),
            OnticSpace::ProductOfSpheres(n) => write!(f, "product-of-{n}-spheres"),
            OnticSpace::ProjectiveHilbertAsSphere => write!(f, "projective-hilbert-sphere"),
        }
    }
}

/// A point of an ontic space: one unit vector per sphere factor.
#[derive(Debug, Clone, PartialEq)]
pub struct OnticPoint {
    coords: Vec<BlochVector>,
}

impl OnticPoint {
    pub fn new(coords: Vec<BlochVector>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::domain(
                "an ontic point needs at least one coordinate",
            ));
        }
        for c in &coords {
            c.check_unit("ontic coordinate")?;
        }
        Ok(OnticPoint { coords })
    }

    pub fn single(v: BlochVector) -> Result<Self> {
        OnticPoint::new(vec![v])
    }

    pub fn coords(&self) -> &[BlochVector] {
        &self.coords
    }

    pub fn approx_eq(&self, other: &OnticPoint, tol: f64) -> bool {
        self.coords.len() == other.coords.len()
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(a, b)| a.approx_eq(b, tol))
    }
}

/// Where a density may be nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Sphere,
    /// The open hemisphere `{λ : n·λ > 0}`.
    Hemisphere(BlochVector),
}

impl Support {
    pub fn contains(&self, point: &BlochVector) -> bool {
        match self {
            Support::Sphere => true,
            Support::Hemisphere(n) => n.dot(point) > 0.0,
        }
    }

    fn boundary(&self) -> Option<Circle> {
        match self {
            Support::Sphere => None,
            Support::Hemisphere(n) => Some(Circle::great(*n)),
        }
    }
}

type PdfFn = Arc<dyn Fn(&BlochVector) -> f64 + Send + Sync>;

/// A probability density on one unit sphere, with respect to surface measure.
#[derive(Clone)]
pub struct Density {
    label: String,
    support: Support,
    pdf: PdfFn,
    breaklines: Vec<Circle>,
    affine: Option<(BlochVector, f64)>,
}

impl Density {
    /// `pdf` is only evaluated inside `support`; the support boundary is
    /// registered as a breakline automatically.
    pub fn new<F>(label: impl Into<String>, support: Support, pdf: F) -> Self
    where
        F: Fn(&BlochVector) -> f64 + Send + Sync + 'static,
    {
        Density {
            label: label.into(),
            support,
            pdf: Arc::new(pdf),
            breaklines: support.boundary().into_iter().collect(),
            affine: None,
        }
    }

    /// The density `a·λ + c` on `support`. Differences of affine densities
    /// change sign on known circles, which [`total_variation_distance`] uses
    /// as extra breaklines.
    pub fn affine(label: impl Into<String>, support: Support, a: BlochVector, c: f64) -> Self {
        let mut d = Density::new(label, support, move |l| a.dot(l) + c);
        d.affine = Some((a, c));
        d
    }

    /// Declares extra circles along which the density jumps or kinks.
    pub fn with_breaklines(mut self, cuts: impl IntoIterator<Item = Circle>) -> Self {
        self.breaklines.extend(cuts);
        self
    }

    /// The uniform density `1/4π`.
    pub fn uniform() -> Self {
        Density::affine("uniform", Support::Sphere, BlochVector::ZERO, 1.0 / FOUR_PI)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn breaklines(&self) -> &[Circle] {
        &self.breaklines
    }

    pub fn eval(&self, point: &BlochVector) -> f64 {
        if self.support.contains(point) {
            (self.pdf)(point)
        } else {
            0.0
        }
    }
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("label", &self.label)
            .field("support", &self.support)
            .finish()
    }
}

/// The shape of an [`EpistemicState`].
#[derive(Debug, Clone)]
pub enum StateForm {
    PointMass(OnticPoint),
    Density(Density),
    Product(Vec<EpistemicState>),
    Mixture(Vec<(f64, EpistemicState)>),
}

/// A probability measure `p(λ|P)` over an ontic space.
#[derive(Debug, Clone)]
pub struct EpistemicState {
    space: OnticSpace,
    form: StateForm,
}

impl EpistemicState {
    pub fn point_mass(space: OnticSpace, point: OnticPoint) -> Result<Self> {
        if point.coords.len() != space.factor_count() {
            return Err(Error::domain(format!(
                "point has {} coordinates but {space} has {} factors",
                point.coords.len(),
                space.factor_count()
            )));
        }
        Ok(EpistemicState {
            space,
            form: StateForm::PointMass(point),
        })
    }

    pub fn density(space: OnticSpace, density: Density) -> Result<Self> {
        if space.factor_count() != 1 {
            return Err(Error::domain(format!(
                "a density lives on a single sphere, not on {space}"
            )));
        }
        Ok(EpistemicState {
            space,
            form: StateForm::Density(density),
        })
    }

    /// Independent product of single-sphere states.
    pub fn product(factors: Vec<EpistemicState>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::domain("a product needs at least one factor"));
        }
        if let Some(bad) = factors.iter().find(|f| f.space.factor_count() != 1) {
            return Err(Error::domain(format!(
                "product factors must each live on one sphere, got {}",
                bad.space
            )));
        }
        Ok(EpistemicState {
            space: OnticSpace::ProductOfSpheres(factors.len()),
            form: StateForm::Product(factors),
        })
    }

    pub fn space(&self) -> OnticSpace {
        self.space
    }

    pub fn form(&self) -> &StateForm {
        &self.form
    }

    pub fn as_point_mass(&self) -> Option<&OnticPoint> {
        match &self.form {
            StateForm::PointMass(p) => Some(p),
            _ => None,
        }
    }

    /// Expands the state into a weighted sum of products of atoms and densities.
    fn terms(&self) -> Vec<Term<'_>> {
        match &self.form {
            StateForm::PointMass(p) => vec![Term {
                weight: 1.0,
                factors: p.coords.iter().map(|c| Primitive::Atom(*c)).collect(),
            }],
            StateForm::Density(d) => vec![Term {
                weight: 1.0,
                factors: vec![Primitive::Density(d)],
            }],
            StateForm::Product(factors) => {
                let mut acc = vec![Term {
                    weight: 1.0,
                    factors: Vec::new(),
                }];
                for f in factors {
                    let ft = f.terms();
                    acc = acc
                        .iter()
                        .flat_map(|a| {
                            ft.iter().map(move |b| Term {
                                weight: a.weight * b.weight,
                                factors: a.factors.iter().chain(&b.factors).copied().collect(),
                            })
                        })
                        .collect();
                }
                acc
            }
            StateForm::Mixture(components) => components
                .iter()
                .filter(|(w, _)| *w > 0.0)
                .flat_map(|(w, s)| {
                    s.terms().into_iter().map(move |t| Term {
                        weight: w * t.weight,
                        factors: t.factors,
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Primitive<'a> {
    Atom(BlochVector),
    Density(&'a Density),
}

#[derive(Debug, Clone)]
struct Term<'a> {
    weight: f64,
    factors: Vec<Primitive<'a>>,
}

/// Convex combination of states on a common space.
pub fn mix(components: Vec<(f64, EpistemicState)>) -> Result<EpistemicState> {
    let first = components
        .first()
        .ok_or_else(|| Error::domain("a mixture needs at least one component"))?;
    let space = first.1.space;
    let mut total = 0.0;
    for (w, s) in &components {
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::domain(format!(
                "mixture weight {w} is not a nonnegative number"
            )));
        }
        space.ensure_same(&s.space)?;
        total += w;
    }
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::domain(format!(
            "mixture weights sum to {total}, not 1"
        )));
    }
    if components.len() == 1 {
        return Ok(components.into_iter().next().expect("one component").1);
    }
    Ok(EpistemicState {
        space,
        form: StateForm::Mixture(components),
    })
}

/// A real function on an ontic space that can be integrated against states.
pub trait Integrand: Sync {
    fn space(&self) -> OnticSpace;

    fn eval(&self, point: &[BlochVector]) -> f64;

    /// Circles on sphere factor `factor` across which the function may jump or
    /// kink, given the coordinates `fixed` of the factors before it.
    fn breaklines(&self, _factor: usize, _fixed: &[BlochVector]) -> Vec<Circle> {
        Vec::new()
    }
}

type PointFn = Arc<dyn Fn(&[BlochVector]) -> f64 + Send + Sync>;
type CutFn = Arc<dyn Fn(usize, &[BlochVector]) -> Vec<Circle> + Send + Sync>;

/// A shareable closure-backed [`Integrand`].
#[derive(Clone)]
pub struct Response {
    space: OnticSpace,
    eval: PointFn,
    cuts: Option<CutFn>,
}

impl Response {
    pub fn new<F>(space: OnticSpace, f: F) -> Self
    where
        F: Fn(&[BlochVector]) -> f64 + Send + Sync + 'static,
    {
        Response {
            space,
            eval: Arc::new(f),
            cuts: None,
        }
    }

    pub fn with_breaklines<G>(mut self, cuts: G) -> Self
    where
        G: Fn(usize, &[BlochVector]) -> Vec<Circle> + Send + Sync + 'static,
    {
        self.cuts = Some(Arc::new(cuts));
        self
    }

    /// `1 − self`, with the same breaklines.
    pub fn complement(&self) -> Response {
        let inner = Arc::clone(&self.eval);
        Response {
            space: self.space,
            eval: Arc::new(move |p| 1.0 - inner(p)),
            cuts: self.cuts.clone(),
        }
    }
}

impl Integrand for Response {
    fn space(&self) -> OnticSpace {
        self.space
    }

    fn eval(&self, point: &[BlochVector]) -> f64 {
        (self.eval)(point)
    }

    fn breaklines(&self, factor: usize, fixed: &[BlochVector]) -> Vec<Circle> {
        self.cuts
            .as_ref()
            .map(|c| c(factor, fixed))
            .unwrap_or_default()
    }
}

impl fmt::Debug for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Response")
            .field("space", &self.space)
            .finish()
    }
}

/// Outcome response functions `p(k|λ,M)` of one measurement.
#[derive(Debug, Clone)]
pub struct IndicatorFunction {
    space: OnticSpace,
    outcomes: Vec<Response>,
}

impl IndicatorFunction {
    pub fn new(space: OnticSpace, outcomes: Vec<Response>) -> Result<Self> {
        for o in &outcomes {
            space.ensure_same(&o.space)?;
        }
        Ok(IndicatorFunction { space, outcomes })
    }

    pub fn space(&self) -> OnticSpace {
        self.space
    }

    pub fn outcomes(&self) -> &[Response] {
        &self.outcomes
    }

    pub fn outcome(&self, k: usize) -> &Response {
        &self.outcomes[k]
    }

    /// Sum of all outcome responses at `point`; 1 for a valid indicator.
    pub fn outcome_sum(&self, point: &[BlochVector]) -> f64 {
        self.outcomes.iter().map(|o| o.eval(point)).sum()
    }
}

/// Numerical scheme for integrals over densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureConfig {
    GaussGrid { n_polar: usize, n_azimuthal: usize },
    MonteCarlo { n_samples: usize, seed: u64 },
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig::GaussGrid {
            n_polar: 128,
            n_azimuthal: 256,
        }
    }
}

impl QuadratureConfig {
    pub fn gauss_grid(n_polar: usize, n_azimuthal: usize) -> Result<Self> {
        QuadratureConfig::GaussGrid {
            n_polar,
            n_azimuthal,
        }
        .validated()
    }

    pub fn monte_carlo(n_samples: usize, seed: u64) -> Result<Self> {
        QuadratureConfig::MonteCarlo { n_samples, seed }.validated()
    }

    /// `MonteCarlo(10^6, seed 0)`.
    pub fn monte_carlo_default() -> Self {
        QuadratureConfig::MonteCarlo {
            n_samples: 1_000_000,
            seed: 0,
        }
    }

    pub fn validated(self) -> Result<Self> {
        let ok = match self {
            QuadratureConfig::GaussGrid {
                n_polar,
                n_azimuthal,
            } => n_polar >= 1 && n_azimuthal >= 1,
            QuadratureConfig::MonteCarlo { n_samples, .. } => n_samples >= 1,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::domain(format!(
                "quadrature resolution must be at least 1: {self:?}"
            )))
        }
    }

    pub fn is_monte_carlo(&self) -> bool {
        matches!(self, QuadratureConfig::MonteCarlo { .. })
    }
}

/// A numerical value with its Monte Carlo standard error (zero for
/// deterministic rules).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    fn exact(value: f64) -> Self {
        Estimate {
            value,
            std_error: 0.0,
        }
    }

    fn from_moments(sum: f64, sum_sq: f64, n: usize) -> Self {
        let n_f = n as f64;
        let mean = sum / n_f;
        let var = if n > 1 {
            ((sum_sq - n_f * mean * mean) / (n_f - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            value: mean,
            std_error: (var / n_f).sqrt(),
        }
    }
}

/// `∫ f(λ) p(λ|P) dλ`.
pub fn expectation(e: &EpistemicState, f: &dyn Integrand, q: &QuadratureConfig) -> Result<f64> {
    expectation_estimate(e, f, q).map(|est| est.value)
}

/// [`expectation`] together with its standard error.
pub fn expectation_estimate(
    e: &EpistemicState,
    f: &dyn Integrand,
    q: &QuadratureConfig,
) -> Result<Estimate> {
    e.space.ensure_same(&f.space())?;
    let q = q.validated()?;
    let mut value = 0.0;
    let mut std_error = 0.0;
    for term in e.terms() {
        let est = match q {
            QuadratureConfig::GaussGrid {
                n_polar,
                n_azimuthal,
            } => {
                let mut fixed = Vec::with_capacity(term.factors.len());
                Estimate::exact(grid_term(&term, f, n_polar, n_azimuthal, &mut fixed))
            }
            QuadratureConfig::MonteCarlo { n_samples, seed } => mc_term(&term, f, n_samples, seed),
        };
        value += term.weight * est.value;
        std_error += term.weight * est.std_error;
    }
    Ok(Estimate { value, std_error })
}

fn grid_term(
    term: &Term<'_>,
    f: &dyn Integrand,
    n_polar: usize,
    n_azimuthal: usize,
    fixed: &mut Vec<BlochVector>,
) -> f64 {
    let k = fixed.len();
    if k == term.factors.len() {
        return f.eval(fixed);
    }
    match term.factors[k] {
        Primitive::Atom(v) => {
            fixed.push(v);
            let r = grid_term(term, f, n_polar, n_azimuthal, fixed);
            fixed.pop();
            r
        }
        Primitive::Density(d) => {
            let mut cuts = d.breaklines().to_vec();
            cuts.extend(f.breaklines(k, fixed));
            let rule = SphereRule::build(n_polar, n_azimuthal, &cuts);
            let prefix: &[BlochVector] = fixed;
            ordered_sum(rule.len(), |i| {
                let node = rule.nodes[i];
                let density = d.eval(&node);
                if density == 0.0 {
                    return 0.0;
                }
                let mut point = Vec::with_capacity(term.factors.len());
                point.extend_from_slice(prefix);
                point.push(node);
                rule.weights[i] * density * grid_term(term, f, n_polar, n_azimuthal, &mut point)
            })
        }
    }
}

/// Uniform importance sampling: every density factor `j` draws from stream `j`.
#[allow(clippy::needless_range_loop)] // `i` indexes every factor's draws
fn mc_term(term: &Term<'_>, f: &dyn Integrand, n: usize, seed: u64) -> Estimate {
    let has_density = term
        .factors
        .iter()
        .any(|p| matches!(p, Primitive::Density(_)));
    if !has_density {
        let point: Vec<BlochVector> = term
            .factors
            .iter()
            .map(|p| match p {
                Primitive::Atom(v) => *v,
                Primitive::Density(_) => unreachable!(),
            })
            .collect();
        return Estimate::exact(f.eval(&point));
    }
    let moments = ordered_chunks(n, |range| {
        let len = range.len();
        let mut draws: Vec<Vec<BlochVector>> = term
            .factors
            .iter()
            .enumerate()
            .map(|(j, p)| match p {
                Primitive::Atom(_) => Vec::new(),
                Primitive::Density(_) => SphereStream::new(seed, j as u64)
                    .samples(range.start as u64, len)
                    .collect(),
            })
            .collect();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut point = Vec::with_capacity(term.factors.len());
        for i in 0..len {
            point.clear();
            let mut weight = 1.0;
            for (j, p) in term.factors.iter().enumerate() {
                match p {
                    Primitive::Atom(v) => point.push(*v),
                    Primitive::Density(d) => {
                        let v = draws[j][i];
                        weight *= FOUR_PI * d.eval(&v);
                        point.push(v);
                    }
                }
            }
            let x = if weight == 0.0 {
                0.0
            } else {
                weight * f.eval(&point)
            };
            sum += x;
            sum_sq += x * x;
        }
        draws.clear();
        (sum, sum_sq)
    });
    let (sum, sum_sq) = moments
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    Estimate::from_moments(sum, sum_sq, n)
}

/// Terms of two states sharing the same atom pattern. Measures from different
/// groups are mutually singular.
struct Group<'a> {
    signature: Vec<Option<BlochVector>>,
    p: Vec<(f64, Vec<&'a Density>)>,
    q: Vec<(f64, Vec<&'a Density>)>,
}

impl<'a> Group<'a> {
    fn density_positions(&self) -> Vec<usize> {
        self.signature
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_none())
            .map(|(i, _)| i)
            .collect()
    }

    fn mass(side: &[(f64, Vec<&'a Density>)]) -> f64 {
        side.iter().map(|(w, _)| w).sum()
    }

    fn value(side: &[(f64, Vec<&'a Density>)], coords: &[BlochVector]) -> f64 {
        side.iter()
            .map(|(w, ds)| {
                w * ds
                    .iter()
                    .zip(coords)
                    .map(|(d, c)| d.eval(c))
                    .product::<f64>()
            })
            .sum()
    }
}

fn signature_of<'a>(term: &Term<'a>) -> (Vec<Option<BlochVector>>, Vec<&'a Density>) {
    let mut sig = Vec::with_capacity(term.factors.len());
    let mut densities = Vec::new();
    for p in &term.factors {
        match p {
            Primitive::Atom(v) => sig.push(Some(*v)),
            Primitive::Density(d) => {
                sig.push(None);
                densities.push(*d);
            }
        }
    }
    (sig, densities)
}

fn same_signature(a: &[Option<BlochVector>], b: &[Option<BlochVector>]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| match (x, y) {
            (Some(u), Some(v)) => u.approx_eq(v, ATOM_TOLERANCE),
            (None, None) => true,
            _ => false,
        })
}

fn group_terms<'a>(p: &[Term<'a>], q: &[Term<'a>]) -> Vec<Group<'a>> {
    let mut groups: Vec<Group<'a>> = Vec::new();
    for (side, terms) in [(0, p), (1, q)] {
        for t in terms {
            let (sig, densities) = signature_of(t);
            let idx = match groups
                .iter()
                .position(|g| same_signature(&g.signature, &sig))
            {
                Some(i) => i,
                None => {
                    groups.push(Group {
                        signature: sig,
                        p: Vec::new(),
                        q: Vec::new(),
                    });
                    groups.len() - 1
                }
            };
            let entry = (t.weight, densities);
            if side == 0 {
                groups[idx].p.push(entry);
            } else {
                groups[idx].q.push(entry);
            }
        }
    }
    groups
}

/// Integral of `kernel(p_g, q_g)` over a group's density factors, plus the
/// point where the kernel is largest.
fn group_integral<K>(
    g: &Group<'_>,
    kernel: K,
    extra_cuts: &[Circle],
    q: &QuadratureConfig,
) -> (Estimate, Option<(f64, Vec<BlochVector>)>)
where
    K: Fn(f64, f64) -> f64 + Sync,
{
    let positions = g.density_positions();
    let assemble = |coords: &[BlochVector]| -> Vec<BlochVector> {
        let mut it = coords.iter();
        g.signature
            .iter()
            .map(|s| s.unwrap_or_else(|| *it.next().expect("one coordinate per density factor")))
            .collect()
    };
    if positions.is_empty() {
        let value = kernel(Group::mass(&g.p), Group::mass(&g.q));
        return (Estimate::exact(value), Some((value, assemble(&[]))));
    }
    let eval =
        |coords: &[BlochVector]| kernel(Group::value(&g.p, coords), Group::value(&g.q, coords));

    match *q {
        QuadratureConfig::GaussGrid {
            n_polar,
            n_azimuthal,
        } => {
            let rules: Vec<SphereRule> = positions
                .iter()
                .enumerate()
                .map(|(slot, _)| {
                    let cuts: Vec<Circle> =
                        g.p.iter()
                            .chain(&g.q)
                            .flat_map(|(_, ds)| ds[slot].breaklines().iter().copied())
                            .chain(extra_cuts.iter().copied().filter(|_| positions.len() == 1))
                            .collect();
                    SphereRule::build(n_polar, n_azimuthal, &cuts)
                })
                .collect();
            let total: usize = rules.iter().map(|r| r.len()).product();
            let node = |mut i: usize| -> (f64, Vec<BlochVector>) {
                let mut w = 1.0;
                let mut coords = vec![BlochVector::ZERO; rules.len()];
                for (slot, r) in rules.iter().enumerate().rev() {
                    let k = i % r.len();
                    i /= r.len();
                    w *= r.weights[k];
                    coords[slot] = r.nodes[k];
                }
                (w, coords)
            };
            let value = ordered_sum(total, |i| {
                let (w, coords) = node(i);
                w * eval(&coords)
            });
            let best = ordered_chunks(total, |range| {
                range
                    .map(|i| (eval(&node(i).1), i))
                    .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a })
            })
            .into_iter()
            .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
            let witness = (best.0 > 0.0).then(|| (best.0, assemble(&node(best.1).1)));
            (Estimate::exact(value), witness)
        }
        QuadratureConfig::MonteCarlo { n_samples, seed } => {
            let scale = FOUR_PI.powi(positions.len() as i32);
            let chunks = ordered_chunks(n_samples, |range| {
                let draws: Vec<Vec<BlochVector>> = positions
                    .iter()
                    .map(|&j| {
                        SphereStream::new(seed, j as u64)
                            .samples(range.start as u64, range.len())
                            .collect()
                    })
                    .collect();
                let mut sum = 0.0;
                let mut sum_sq = 0.0;
                let mut best = (f64::NEG_INFINITY, Vec::new());
                let mut coords = Vec::with_capacity(positions.len());
                for i in 0..range.len() {
                    coords.clear();
                    coords.extend(draws.iter().map(|d| d[i]));
                    let k = eval(&coords);
                    let x = scale * k;
                    sum += x;
                    sum_sq += x * x;
                    if k > best.0 {
                        best = (k, coords.clone());
                    }
                }
                (sum, sum_sq, best)
            });
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut best = (f64::NEG_INFINITY, Vec::new());
            for (s, s2, b) in chunks {
                sum += s;
                sum_sq += s2;
                if b.0 > best.0 {
                    best = b;
                }
            }
            let witness = (best.0 > 0.0).then(|| (best.0, assemble(&best.1)));
            (Estimate::from_moments(sum, sum_sq, n_samples), witness)
        }
    }
}

/// Classical fidelity `∫ √(p q) dλ` (Bhattacharyya coefficient).
pub fn classical_fidelity(
    p: &EpistemicState,
    q: &EpistemicState,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    classical_fidelity_estimate(p, q, cfg).map(|e| e.value)
}

pub fn classical_fidelity_estimate(
    p: &EpistemicState,
    q: &EpistemicState,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    p.space.ensure_same(&q.space)?;
    let cfg = cfg.validated()?;
    let (pt, qt) = (p.terms(), q.terms());
    let mut value = 0.0;
    let mut std_error = 0.0;
    for g in group_terms(&pt, &qt) {
        if g.p.is_empty() || g.q.is_empty() {
            continue;
        }
        let (est, _) = group_integral(&g, |a, b| (a * b).sqrt(), &[], &cfg);
        value += est.value;
        std_error += est.std_error;
    }
    Ok(Estimate {
        value: value.clamp(0.0, 1.0),
        std_error,
    })
}

/// Result of [`support_overlap`].
#[derive(Debug, Clone, PartialEq)]
pub enum Overlap {
    Disjoint,
    Overlapping { witness: OnticPoint, fidelity: f64 },
}

/// Decides whether two states overlap, with a witness point where both are positive.
///
/// Overlaps of zero fidelity (measure-zero contact) count as disjoint.
pub fn support_overlap(
    p: &EpistemicState,
    q: &EpistemicState,
    cfg: &QuadratureConfig,
) -> Result<Overlap> {
    p.space.ensure_same(&q.space)?;
    let cfg = cfg.validated()?;
    let (pt, qt) = (p.terms(), q.terms());
    let mut fidelity = 0.0;
    let mut witness: Option<(f64, Vec<BlochVector>)> = None;
    for g in group_terms(&pt, &qt) {
        if g.p.is_empty() || g.q.is_empty() {
            continue;
        }
        let (est, best) = group_integral(&g, |a, b| (a * b).sqrt(), &[], &cfg);
        fidelity += est.value;
        if est.value > FIDELITY_THRESHOLD && witness.is_none() {
            witness = best;
        }
    }
    match witness {
        Some((_, coords)) if fidelity > FIDELITY_THRESHOLD => Ok(Overlap::Overlapping {
            witness: OnticPoint { coords },
            fidelity: fidelity.min(1.0),
        }),
        _ => Ok(Overlap::Disjoint),
    }
}

/// Largest group for which every sign pattern of `p − q` is enumerated.
const MAX_AFFINE_TERMS: usize = 12;

/// Circles where `p − q` can change sign when the group has one density
/// factor and every density is affine: on each region cut out by the supports
/// the difference is a signed sum of a subset of the affine forms.
fn sign_change_circles(g: &Group<'_>) -> Vec<Circle> {
    let forms: Option<Vec<(BlochVector, f64)>> =
        g.p.iter()
            .map(|(w, ds)| (*w, ds))
            .chain(g.q.iter().map(|(w, ds)| (-w, ds)))
            .map(|(w, ds)| match ds.as_slice() {
                [d] => d.affine.map(|(a, c)| (a * w, c * w)),
                _ => None,
            })
            .collect();
    let Some(forms) = forms else {
        return Vec::new();
    };
    if forms.len() > MAX_AFFINE_TERMS {
        return Vec::new();
    }
    let mut cuts = Vec::new();
    for mask in 1u32..(1 << forms.len()) {
        let (a, c) = forms
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .fold((BlochVector::ZERO, 0.0), |(a, c), (_, (fa, fc))| {
                (a + *fa, c + fc)
            });
        let norm = a.norm();
        if norm > ATOM_TOLERANCE && c.abs() < norm {
            cuts.push(Circle::new(a, -c / norm));
        }
    }
    cuts
}

/// Total variation distance `½ ∫ |p − q|`, atoms compared by location and weight.
pub fn total_variation_distance(
    p: &EpistemicState,
    q: &EpistemicState,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    p.space.ensure_same(&q.space)?;
    let cfg = cfg.validated()?;
    let (pt, qt) = (p.terms(), q.terms());
    let mut total = 0.0;
    for g in group_terms(&pt, &qt) {
        total += if g.p.is_empty() || g.q.is_empty() {
            0.5 * (Group::mass(&g.p) + Group::mass(&g.q))
        } else {
            let cuts = sign_change_circles(&g);
            group_integral(&g, |a, b| 0.5 * (a - b).abs(), &cuts, &cfg)
                .0
                .value
        };
    }
    Ok(total.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests;
