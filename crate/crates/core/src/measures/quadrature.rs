//! Product quadrature rules on the unit sphere.
//!
//! Without breaklines the rule is the plain grid: Gauss-Legendre nodes in
//! `cos θ` times a uniform azimuthal rule. Integrands that jump or kink along
//! known circles declare them as [`Circle`]s and the rule is rebuilt in a
//! frame where those circles are panel boundaries, so every panel sees a
//! smooth integrand.

use std::f64::consts::{PI, TAU};
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::bloch::BlochVector;

/// The circle `{λ : normal·λ = offset}` on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub normal: BlochVector,
    pub offset: f64,
}

const PARALLEL_TOL: f64 = 1e-12;

impl Circle {
    /// `normal` is normalized; panics on the zero vector.
    pub fn new(normal: BlochVector, offset: f64) -> Self {
        let normal = normal
            .normalized()
            .expect("breakline normal must be nonzero");
        Circle { normal, offset }
    }

    pub fn great(normal: BlochVector) -> Self {
        Circle::new(normal, 0.0)
    }

    fn same_as(&self, other: &Circle) -> bool {
        let parallel = self.normal.cross(&other.normal).norm() <= PARALLEL_TOL;
        if !parallel {
            return false;
        }
        let sign = self.normal.dot(&other.normal).signum();
        (self.offset - sign * other.offset).abs() <= PARALLEL_TOL
    }

    /// Circles that miss the sphere or only touch it cannot split a panel.
    fn cuts_sphere(&self) -> bool {
        self.offset.abs() < 1.0
    }
}

/// Nodes and weights of a quadrature rule for `∫ f(λ) dΩ` over the unit sphere.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub nodes: Vec<BlochVector>,
    pub weights: Vec<f64>,
}

struct Frame {
    e1: BlochVector,
    e2: BlochVector,
    e3: BlochVector,
}

impl Frame {
    fn standard() -> Self {
        Frame {
            e1: BlochVector::X_PLUS,
            e2: BlochVector::Y_PLUS,
            e3: BlochVector::Z_PLUS,
        }
    }

    fn with_pole(pole: BlochVector) -> Self {
        let e3 = pole.normalized().expect("pole must be nonzero");
        let helper = if e3.x.abs() < 0.9 {
            BlochVector::X_PLUS
        } else {
            BlochVector::Y_PLUS
        };
        let e1 = e3.cross(&helper).normalized().expect("helper not parallel");
        let e2 = e3.cross(&e1);
        Frame { e1, e2, e3 }
    }

    fn point(&self, theta: f64, phi: f64) -> BlochVector {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        self.e1 * (st * cp) + self.e2 * (st * sp) + self.e3 * ct
    }

    /// `n·λ = a(φ) sin θ + b cos θ` along the meridian at azimuth `φ`.
    fn meridian_coefficients(&self, n: &BlochVector, phi: f64) -> (f64, f64) {
        let (sp, cp) = phi.sin_cos();
        (n.dot(&self.e1) * cp + n.dot(&self.e2) * sp, n.dot(&self.e3))
    }
}

fn gauss(n: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("n >= 1"))
}

/// Maps Gauss-Legendre pairs on [-1, 1] to `[a, b]`.
fn mapped(rule: &GaussLegendre, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule.as_node_weight_pairs()
        .iter()
        .map(move |&(x, w)| (mid + half * x, half * w))
}

fn dedup(cuts: &[Circle]) -> Vec<Circle> {
    let mut out: Vec<Circle> = Vec::new();
    for c in cuts.iter().filter(|c| c.cuts_sphere()) {
        if !out.iter().any(|o| o.same_as(c)) {
            out.push(*c);
        }
    }
    out
}

/// Axis perpendicular to every normal when all cuts are great circles whose
/// normals span a plane.
fn common_meridian_axis(cuts: &[Circle]) -> Option<BlochVector> {
    if cuts.len() < 2 || cuts.iter().any(|c| c.offset != 0.0) {
        return None;
    }
    let axis = cuts[0].normal.cross(&cuts[1].normal).normalized()?;
    cuts.iter()
        .all(|c| c.normal.dot(&axis).abs() <= PARALLEL_TOL)
        .then_some(axis)
}

impl SphereRule {
    /// Builds a rule with `n_polar × n_azimuthal` resolution whose panels
    /// respect every circle in `cuts`.
    pub fn build(n_polar: usize, n_azimuthal: usize, cuts: &[Circle]) -> SphereRule {
        let cuts = dedup(cuts);
        if cuts.is_empty() {
            SphereRule::plain(n_polar, n_azimuthal)
        } else if let Some(axis) = common_meridian_axis(&cuts) {
            SphereRule::meridian(n_polar, n_azimuthal, axis, &cuts)
        } else {
            SphereRule::latitude(n_polar, n_azimuthal, &cuts)
        }
    }

    /// Gauss-Legendre in `cos θ` × uniform azimuth in the standard frame.
    /// Nodes are ordered by increasing `θ`, then increasing `φ`.
    pub fn plain(n_polar: usize, n_azimuthal: usize) -> SphereRule {
        let frame = Frame::standard();
        let rule = gauss(n_polar);
        let n_az = n_azimuthal.max(1);
        let dphi = TAU / n_az as f64;
        let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut nodes = Vec::with_capacity(pairs.len() * n_az);
        let mut weights = Vec::with_capacity(pairs.len() * n_az);
        for (t, w) in pairs {
            let theta = t.clamp(-1.0, 1.0).acos();
            for j in 0..n_az {
                let phi = dphi * (j as f64 + 0.5);
                nodes.push(frame.point(theta, phi));
                weights.push(w * dphi);
            }
        }
        SphereRule { nodes, weights }
    }

    /// All cuts are great circles through `±axis`; with `axis` as the pole they
    /// are meridians, so only the azimuth range is split.
    fn meridian(
        n_polar: usize,
        n_azimuthal: usize,
        axis: BlochVector,
        cuts: &[Circle],
    ) -> SphereRule {
        let frame = Frame::with_pole(axis);
        let mut breaks: Vec<f64> = Vec::new();
        for c in cuts {
            let base = c.normal.dot(&frame.e2).atan2(c.normal.dot(&frame.e1));
            for shift in [0.5 * PI, -0.5 * PI] {
                breaks.push((base + shift).rem_euclid(TAU));
            }
        }
        let panels = azimuth_panels(breaks);
        let polar = gauss(n_polar);
        let polar_nodes: Vec<(f64, f64)> = mapped(&polar, 0.0, PI)
            .map(|(theta, w)| (theta, w * theta.sin()))
            .collect();
        let mut rule = SphereRule {
            nodes: Vec::new(),
            weights: Vec::new(),
        };
        for (a, b) in panels {
            let az = gauss(panel_nodes(n_azimuthal, b - a));
            for (phi, wphi) in mapped(&az, a, b) {
                for &(theta, wtheta) in &polar_nodes {
                    rule.nodes.push(frame.point(theta, phi));
                    rule.weights.push(wphi * wtheta);
                }
            }
        }
        rule
    }

    /// The first cut is a latitude circle of the frame; every meridian is split
    /// where it crosses the remaining cuts, and the azimuth range is split
    /// where a meridian becomes tangent to one of them.
    fn latitude(n_polar: usize, n_azimuthal: usize, cuts: &[Circle]) -> SphereRule {
        let frame = Frame::with_pole(cuts[0].normal);
        let others: Vec<Circle> = cuts[1..]
            .iter()
            .copied()
            .filter(|c| c.normal.cross(&frame.e3).norm() > PARALLEL_TOL)
            .collect();
        let latitudes: Vec<f64> = cuts
            .iter()
            .filter(|c| c.normal.cross(&frame.e3).norm() <= PARALLEL_TOL)
            .map(|c| {
                (c.offset * c.normal.dot(&frame.e3).signum())
                    .clamp(-1.0, 1.0)
                    .acos()
            })
            .collect();

        let mut az_breaks = Vec::new();
        for c in &others {
            let h1 = c.normal.dot(&frame.e1);
            let h2 = c.normal.dot(&frame.e2);
            let horizontal = h1.hypot(h2);
            let b = c.normal.dot(&frame.e3);
            let gap = c.offset * c.offset - b * b;
            if gap >= 0.0 && gap.sqrt() <= horizontal {
                let base = h2.atan2(h1);
                let spread = (gap.sqrt() / horizontal).clamp(-1.0, 1.0).acos();
                for s in [spread, -spread, PI - spread, spread - PI] {
                    az_breaks.push((base + s).rem_euclid(TAU));
                }
            }
        }
        for (i, a) in cuts.iter().enumerate() {
            for b in &cuts[i + 1..] {
                for x in circle_intersections(a, b) {
                    let (u, v) = (x.dot(&frame.e1), x.dot(&frame.e2));
                    if u.hypot(v) > PARALLEL_TOL {
                        az_breaks.push(v.atan2(u).rem_euclid(TAU));
                    }
                }
            }
        }
        let panels = azimuth_panels(az_breaks);

        let mut rule = SphereRule {
            nodes: Vec::new(),
            weights: Vec::new(),
        };
        for (a, b) in panels {
            let az = gauss(panel_nodes(n_azimuthal, b - a));
            for (phi, wphi) in mapped(&az, a, b) {
                let mut breaks = vec![0.0, PI];
                breaks.extend(latitudes.iter().copied());
                for c in &others {
                    let (ca, cb) = frame.meridian_coefficients(&c.normal, phi);
                    breaks.extend(meridian_crossings(ca, cb, c.offset));
                }
                breaks.sort_by(f64::total_cmp);
                breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-14);
                for w in breaks.windows(2) {
                    let (lo, hi) = (w[0], w[1]);
                    if hi - lo <= 1e-14 {
                        continue;
                    }
                    let polar = gauss(panel_nodes(n_polar, (hi - lo) * 2.0));
                    for (theta, wtheta) in mapped(&polar, lo, hi) {
                        rule.nodes.push(frame.point(theta, phi));
                        rule.weights.push(wphi * wtheta * theta.sin());
                    }
                }
            }
        }
        rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

const MIN_PANEL_NODES: usize = 8;

/// Nodes given to a panel of angular `width`, proportional to a full `2π` budget of `n`.
fn panel_nodes(n: usize, width: f64) -> usize {
    let share = (n.max(1) as f64 * width / TAU).ceil() as usize;
    share.max(MIN_PANEL_NODES)
}

/// Splits `[0, 2π)` at the given angles into panels `(start, end)` with `end > start`.
fn azimuth_panels(mut breaks: Vec<f64>) -> Vec<(f64, f64)> {
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-14);
    match breaks.len() {
        0 => vec![(0.0, TAU)],
        1 => vec![(breaks[0], breaks[0] + TAU)],
        n => (0..n)
            .map(|i| {
                let start = breaks[i];
                let end = if i + 1 < n {
                    breaks[i + 1]
                } else {
                    breaks[0] + TAU
                };
                (start, end)
            })
            .filter(|(s, e)| e - s > 1e-14)
            .collect(),
    }
}

/// Points lying on both circles.
fn circle_intersections(a: &Circle, b: &Circle) -> Vec<BlochVector> {
    let d = a.normal.cross(&b.normal);
    let dd = d.dot(&d);
    if dd <= PARALLEL_TOL * PARALLEL_TOL {
        return Vec::new();
    }
    // Point of the line {a·x = a.offset, b·x = b.offset} closest to the origin.
    let p = (b.normal.cross(&d) * a.offset + d.cross(&a.normal) * b.offset) * (1.0 / dd);
    let rest = 1.0 - p.dot(&p);
    if rest < 0.0 {
        return Vec::new();
    }
    let t = (rest / dd).sqrt();
    vec![p + d * t, p - d * t]
}

/// Polar angles in `(0, π)` where `a sin θ + b cos θ = c`.
fn meridian_crossings(a: f64, b: f64, c: f64) -> Vec<f64> {
    let r = a.hypot(b);
    if r <= 1e-15 || c.abs() > r {
        return Vec::new();
    }
    let base = a.atan2(b);
    let spread = (c / r).clamp(-1.0, 1.0).acos();
    [base + spread, base - spread]
        .into_iter()
        .map(|t| t.rem_euclid(TAU))
        .filter(|t| *t > 0.0 && *t < PI)
        .collect()
}
