//! CSV export of per-factor marginals for plotting.
//!
//! Schema: `type,factor,theta,phi,x,y,z,value`. Grid rows (`type=grid`) carry
//! the marginal density at a node of the plain Gauss grid in radians, ordered
//! by increasing `theta` and then `phi`. Atom rows (`type=atom`) carry the
//! atom location and its weight.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use super::{EpistemicState, Primitive, SphereRule};
use crate::bloch::BlochVector;

const ATOM_MERGE_TOL: f64 = 1e-12;

/// One row of an exported marginal.
#[derive(Debug, Clone, PartialEq)]
pub enum ExportRow {
    Atom {
        factor: usize,
        point: BlochVector,
        weight: f64,
    },
    Grid {
        factor: usize,
        theta: f64,
        phi: f64,
        value: f64,
    },
}

pub const CSV_HEADER: &str = "type,factor,theta,phi,x,y,z,value";

/// Marginal of every sphere factor of `state`: merged atoms first, then the
/// summed density on an `n_polar × n_azimuthal` grid when the factor has a
/// continuous part.
pub fn marginal_rows(state: &EpistemicState, n_polar: usize, n_azimuthal: usize) -> Vec<ExportRow> {
    let terms = state.terms();
    let rule = SphereRule::plain(n_polar, n_azimuthal);
    let mut rows = Vec::new();
    for factor in 0..state.space().factor_count() {
        let mut atoms: Vec<(BlochVector, f64)> = Vec::new();
        let mut densities = Vec::new();
        for t in &terms {
            match t.factors[factor] {
                Primitive::Atom(v) => match atoms
                    .iter_mut()
                    .find(|(a, _)| a.approx_eq(&v, ATOM_MERGE_TOL))
                {
                    Some(entry) => entry.1 += t.weight,
                    None => atoms.push((v, t.weight)),
                },
                Primitive::Density(d) => densities.push((t.weight, d)),
            }
        }
        rows.extend(atoms.into_iter().map(|(point, weight)| ExportRow::Atom {
            factor,
            point,
            weight,
        }));
        if densities.is_empty() {
            continue;
        }
        for node in &rule.nodes {
            let (theta, phi) = node.to_spherical();
            let value = densities.iter().map(|(w, d)| w * d.eval(node)).sum();
            rows.push(ExportRow::Grid {
                factor,
                theta,
                phi: phi.rem_euclid(TAU),
                value,
            });
        }
    }
    rows
}

/// Renders rows as CSV with [`CSV_HEADER`].
pub fn to_csv(rows: &[ExportRow]) -> String {
    let mut out = String::with_capacity(64 * rows.len() + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        match row {
            ExportRow::Atom {
                factor,
                point,
                weight,
            } => writeln!(
                out,
                "atom,{factor},,,{:?},{:?},{:?},{weight:?}",
                point.x, point.y, point.z
            ),
            ExportRow::Grid {
                factor,
                theta,
                phi,
                value,
            } => writeln!(out, "grid,{factor},{theta:?},{phi:?},,,,{value:?}"),
        }
        .expect("writing to a String cannot fail");
    }
    out
}
