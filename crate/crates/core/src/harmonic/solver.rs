//! Riemannian minimisation of the discrete energy.

use serde::{Deserialize, Serialize};

use super::{EquivariantMap, HarmonicProblem, VertexField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Jacobi-preconditioned gradient descent with Armijo backtracking.
    Gd,
    /// Preconditioned nonlinear conjugate gradients (Polak-Ribière+).
    Cg,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" => Ok(Method::Gd),
            "cg" => Ok(Method::Cg),
            _ => Err(Error::Parse(format!("unknown solver method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub method: Method,
    /// Stop once the largest per-vertex gradient norm is at most this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { method: Method::Cg, tol: 1e-10, max_iters: 50_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub method: Method,
    pub iterations: usize,
    pub converged: bool,
    pub energy: f64,
    pub grad_norm: f64,
    /// Energy before every iteration and after the last one.
    pub energy_trace: Vec<f64>,
}

/// Relative slack for the descent test; below it energy differences are
/// rounding noise.
const ROUNDING_SLACK: f64 = 1e-14;

struct State {
    f: EquivariantMap,
    energy: f64,
    grad: VertexField,
}

impl State {
    fn at(p: &HarmonicProblem, f: EquivariantMap) -> Self {
        let (energy, grad) = p.energy_gradient(&f);
        State { f, energy, grad }
    }
}

fn precondition(p: &HarmonicProblem, g: &VertexField) -> VertexField {
    let nf = g.factors;
    VertexField {
        factors: nf,
        vecs: g.vecs.iter().enumerate().map(|(idx, &x)| x / p.diagonal[idx / nf]).collect(),
    }
}

/// Minimises the energy starting from `f0`.
///
/// Fails with [`Error::NotConverged`], carrying the report, when the iteration
/// budget runs out.
pub fn solve_harmonic(
    p: &HarmonicProblem,
    f0: &EquivariantMap,
    opts: &SolverOptions,
) -> Result<(EquivariantMap, SolverReport)> {
    if f0.factors != p.num_factors() || f0.num_vertices() != p.num_vertices {
        return Err(Error::Invalid("initial map does not match the problem".into()));
    }
    let mut s = State::at(p, f0.clone());
    let mut trace = vec![s.energy];
    let mut z = precondition(p, &s.grad);
    let mut dir = z.scale(-1.0);
    let mut step = 1.0;
    let mut iterations = 0;
    let mut gnorm = s.grad.sup_norm(&p.models, &s.f);
    while gnorm > opts.tol && iterations < opts.max_iters {
        let mut slope = s.grad.dot(&dir, &p.models, &s.f);
        if slope >= 0.0 {
            dir = z.scale(-1.0);
            slope = s.grad.dot(&dir, &p.models, &s.f);
        }
        let next = match opts.method {
            Method::Gd => armijo(p, &s, &dir, slope, step),
            Method::Cg => secant(p, &s, &dir, slope, step).or_else(|| armijo(p, &s, &dir, slope, step)),
        };
        let Some((t, next)) = next else {
            log::debug!("line search stalled at gradient norm {gnorm:e}");
            break;
        };
        step = t;
        iterations += 1;
        let z_next = precondition(p, &next.grad);
        dir = match opts.method {
            Method::Gd => z_next.scale(-1.0),
            Method::Cg => {
                let moved_z = p.transport(&s.f, &next.f, &z);
                let moved_dir = p.transport(&s.f, &next.f, &dir);
                let denom = s.grad.dot(&z, &p.models, &s.f);
                let beta = if denom > 0.0 {
                    (next.grad.dot(&z_next.sub(&moved_z), &p.models, &next.f) / denom).max(0.0)
                } else {
                    0.0
                };
                z_next.scale(-1.0).add(&moved_dir.scale(beta))
            }
        };
        z = z_next;
        s = next;
        trace.push(s.energy);
        gnorm = s.grad.sup_norm(&p.models, &s.f);
    }
    let converged = gnorm <= opts.tol;
    let report = SolverReport {
        method: opts.method,
        iterations,
        converged,
        energy: s.energy,
        grad_norm: gnorm,
        energy_trace: trace,
    };
    if !converged {
        return Err(Error::NotConverged(Box::new(report)));
    }
    Ok((s.f, report))
}

fn accepts(s: &State, e: f64) -> bool {
    e <= s.energy + ROUNDING_SLACK * s.energy.abs()
}

fn armijo(p: &HarmonicProblem, s: &State, dir: &VertexField, slope: f64, t0: f64) -> Option<(f64, State)> {
    let mut t = (2.0 * t0).min(1e3);
    for _ in 0..60 {
        let st = State::at(p, s.f.perturbed(&p.models, dir, t));
        if st.energy <= s.energy + 0.3 * t * slope {
            return Some((t, st));
        }
        // Near the minimum the decrease drowns in rounding; fall back to the
        // slope at the trial point, which for a convex ray bounds the change.
        if accepts(s, st.energy) && (t * slope).abs() < 1e3 * ROUNDING_SLACK * s.energy.abs() {
            let end_slope = st.grad.dot(&p.transport(&s.f, &st.f, dir), &p.models, &st.f);
            if end_slope <= 0.4 * slope.abs() {
                return Some((t, st));
            }
        }
        t *= 0.5;
    }
    None
}

/// Secant search for a zero of the directional derivative along the
/// geodesic ray, keeping a bracket once one is found.
fn secant(p: &HarmonicProblem, s: &State, dir: &VertexField, slope: f64, t0: f64) -> Option<(f64, State)> {
    // velocity of the ray at the trial point is the transported direction
    let derivative = |st: &State| st.grad.dot(&p.transport(&s.f, &st.f, dir), &p.models, &st.f);
    let (mut lo, mut d_lo) = (0.0, slope);
    let mut hi: Option<(f64, f64)> = None;
    let mut t = t0.max(1e-12);
    let mut best: Option<(f64, State)> = None;
    for _ in 0..30 {
        let st = State::at(p, s.f.perturbed(&p.models, dir, t));
        let d = derivative(&st);
        let ok = accepts(s, st.energy);
        if ok && d.abs() <= 0.1 * slope.abs() {
            return Some((t, st));
        }
        if ok && best.as_ref().map_or(true, |b| st.energy < b.1.energy) {
            best = Some((t, st));
        }
        if d < 0.0 && ok {
            lo = t;
            d_lo = d;
        } else {
            hi = Some((t, d));
        }
        t = match hi {
            Some((th, dh)) => {
                let guess = if dh > d_lo { lo - d_lo * (th - lo) / (dh - d_lo) } else { 0.5 * (lo + th) };
                // keep strictly inside the bracket
                let w = th - lo;
                guess.clamp(lo + 0.05 * w, th - 0.05 * w)
            }
            None => {
                // extrapolate with the secant through (0, slope) and (lo, d_lo)
                let grow = if d_lo > slope { lo * slope / (slope - d_lo) } else { 4.0 * lo };
                grow.clamp(2.0 * lo, 16.0 * lo)
            }
        };
    }
    best
}
