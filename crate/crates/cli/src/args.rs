//! Parsers for the state and quadrature flags.

use std::f64::consts::PI;

use ontolab_core::bloch::{bloch_to_ray, BlochVector, Ray};

/// Parses a named Bloch-sphere point (`z+`, `x-`, ...) or explicit `theta,phi` radians.
pub fn parse_state(spec: &str) -> Result<Ray, String> {
    let named = match spec.trim() {
        "z+" => Some(Ray::zero()),
        "z-" => Some(Ray::one()),
        "x+" => Some(Ray::plus()),
        "x-" => Some(Ray::minus()),
        "y+" => Some(Ray::plus_i()),
        "y-" => Some(Ray::minus_i()),
        _ => None,
    };
    if let Some(ray) = named {
        return Ok(ray);
    }
    let (theta, phi) = spec.split_once(',').ok_or_else(|| {
        format!("invalid state '{spec}': expected z+, z-, x+, x-, y+, y- or 'theta,phi'")
    })?;
    let theta: f64 = theta
        .trim()
        .parse()
        .map_err(|_| format!("invalid polar angle in state '{spec}'"))?;
    let phi: f64 = phi
        .trim()
        .parse()
        .map_err(|_| format!("invalid azimuth in state '{spec}'"))?;
    if !theta.is_finite() || !phi.is_finite() || !(0.0..=PI).contains(&theta) {
        return Err(format!(
            "state '{spec}' needs finite angles with 0 <= theta <= pi"
        ));
    }
    bloch_to_ray(&BlochVector::from_spherical(theta, phi)).map_err(|e| e.to_string())
}

/// Parses `NPxNA`, e.g. `128x256`.
pub fn parse_grid(spec: &str) -> Result<(usize, usize), String> {
    let (np, na) = spec
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("invalid grid '{spec}': expected NPxNA, e.g. 128x256"))?;
    let parse = |s: &str| -> Result<usize, String> {
        match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!(
                "invalid grid '{spec}': sizes must be positive integers"
            )),
        }
    };
    Ok((parse(np)?, parse(na)?))
}
