//! Second variation of the energy at a harmonic map.

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EquivariantMap, HarmonicProblem, VertexField};
use crate::error::{Error, Result};
use crate::hypgeom::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexMethod {
    /// Richardson-extrapolated central differences of the energy along
    /// geodesic perturbations.
    FiniteDifference,
    /// Closed-form Hessian of the squared distance, edge by edge.
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexOptions {
    pub method: IndexMethod,
    /// Largest vertex displacement of the finite-difference probe.
    pub displacement: f64,
    /// The map must have gradient norm at most `harmonic_slack * tol`.
    pub tol: f64,
    pub harmonic_slack: f64,
}

impl Default for IndexOptions {
    fn default() -> Self {
        IndexOptions { method: IndexMethod::FiniteDifference, displacement: 1e-4, tol: 1e-10, harmonic_slack: 10.0 }
    }
}

/// `d²/dε² E(exp_f(ε v))` at 0 by Richardson-extrapolated central
/// differences, accumulated edge by edge.
pub fn second_derivative_along(p: &HarmonicProblem, f: &EquivariantMap, v: &VertexField, displacement: f64) -> f64 {
    let size = v.sup_norm(&p.models, f);
    if size == 0.0 {
        return 0.0;
    }
    let eps = displacement / size;
    let base = p.edge_energies(f);
    let central = |h: f64| -> f64 {
        let plus = p.edge_energies(&f.perturbed(&p.models, v, h));
        let minus = p.edge_energies(&f.perturbed(&p.models, v, -h));
        let s: f64 = plus.iter().zip(&minus).zip(&base).map(|((a, b), c)| (a - c) + (b - c)).sum();
        s / (h * h)
    };
    let coarse = central(eps);
    let fine = central(eps / 2.0);
    (4.0 * fine - coarse) / 3.0
}

/// Index form `I(v, w)` of the energy at `f`, by polarisation of the second
/// derivative. Requires `f` to be harmonic to the given tolerance.
pub fn index_form(
    p: &HarmonicProblem,
    f: &EquivariantMap,
    v: &VertexField,
    w: &VertexField,
    opts: &IndexOptions,
) -> Result<f64> {
    let grad = p.gradient_norm(f);
    let limit = opts.harmonic_slack * opts.tol;
    if grad > limit {
        return Err(Error::NotHarmonic { grad, limit });
    }
    if opts.method == IndexMethod::Analytic {
        return Ok(hessian_form(p, f, v, w));
    }
    if v == w {
        return Ok(second_derivative_along(p, f, v, opts.displacement));
    }
    let plus = second_derivative_along(p, f, &v.add(w), opts.displacement);
    let minus = second_derivative_along(p, f, &v.sub(w), opts.displacement);
    Ok((plus - minus) / 4.0)
}

/// `d coth d` and `d / sinh d`, with series near 0.
fn jacobi_coefficients(d: f64) -> (f64, f64) {
    if d < 1e-4 {
        let d2 = d * d;
        (1.0 + d2 / 3.0, 1.0 - d2 / 6.0)
    } else {
        (d / d.tanh(), d / d.sinh())
    }
}

/// Hessian of `½ d(x, y)^2` on the pairs `(vx, vy)` and `(wx, wy)`.
fn half_dist_sqr_hessian(m: Model, x: C, y: C, v: (C, C), w: (C, C)) -> f64 {
    match m {
        Model::Euclidean => {
            let dv = v.1 - v.0;
            let dw = w.1 - w.0;
            dv.re * dw.re + dv.im * dw.im
        }
        Model::HyperbolicDisk => {
            let d = m.dist(x, y);
            let (lx, ly) = (m.scale(x), m.scale(y));
            let (ex, ey) = if d > 0.0 {
                let a = m.log(x, y);
                let b = -m.log(y, x);
                (a / a.norm(), b / b.norm())
            } else {
                (C::new(1.0, 0.0), C::new(1.0, 0.0))
            };
            // unit frame components: tangential along the geodesic, normal to it
            let parts = |u: C, e: C, l: f64| {
                let r = u * e.conj() * l;
                (r.re, r.im)
            };
            let (va, vb) = parts(v.0, ex, lx);
            let (va2, vb2) = parts(v.1, ey, ly);
            let (wa, wb) = parts(w.0, ex, lx);
            let (wa2, wb2) = parts(w.1, ey, ly);
            let (cc, cs) = jacobi_coefficients(d);
            (va2 - va) * (wa2 - wa) + cc * (vb * wb + vb2 * wb2) - cs * (vb * wb2 + vb2 * wb)
        }
    }
}

/// The index form from the closed-form Hessian of the discrete energy.
pub fn hessian_form(p: &HarmonicProblem, f: &EquivariantMap, v: &VertexField, w: &VertexField) -> f64 {
    let nf = p.num_factors();
    let terms: Vec<f64> = p
        .edges
        .par_iter()
        .map(|e| {
            let mut s = 0.0;
            for k in 0..nf {
                let (i, j) = (e.i * nf + k, e.j * nf + k);
                let x = f.points[i];
                let (y, dg) = match &e.deck[k] {
                    Some(g) => (g.apply(f.points[j]), g.deriv(f.points[j])),
                    None => (f.points[j], C::new(1.0, 0.0)),
                };
                s += half_dist_sqr_hessian(p.models[k], x, y, (v.vecs[i], v.vecs[j] * dg), (w.vecs[i], w.vecs[j] * dg));
            }
            e.weight * s
        })
        .collect();
    terms.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::DomainEmbedding;
    use crate::surface::build_torus;
    use crate::target::FlatTorusTarget;
    use approx::assert_relative_eq;

    #[test]
    fn flat_index_form_is_dirichlet_form() {
        let n = 5;
        let lm = build_torus(n).unwrap();
        let emb = DomainEmbedding::torus(n, C::new(0.2, 1.1)).unwrap();
        let c = emb.structure(&lm).unwrap();
        let target = FlatTorusTarget::square().manifold(&[[1, 0], [0, 1]]);
        let p = HarmonicProblem::new(&lm, &c, &target).unwrap();
        let f = EquivariantMap { factors: 1, points: emb.positions.clone() };
        let v = VertexField {
            factors: 1,
            vecs: (0..n * n).map(|i| C::new((i as f64).sin(), (2.0 * i as f64).cos())).collect(),
        };
        // flat target: I(v, v) = Σ w |v_i - v_j|^2
        let exact: f64 = p.edges.iter().map(|e| e.weight * (v.vecs[e.i] - v.vecs[e.j]).norm_sqr()).sum();
        let opts = IndexOptions { tol: 1.0, ..Default::default() };
        let got = index_form(&p, &f, &v, &v, &opts).unwrap();
        assert_relative_eq!(got, exact, max_relative = 1e-6);
        assert_relative_eq!(hessian_form(&p, &f, &v, &v), exact, max_relative = 1e-12);
        let bad = EquivariantMap { factors: 1, points: f.points.iter().map(|z| z * 1.1).collect() };
        assert!(matches!(
            index_form(&p, &bad, &v, &v, &IndexOptions::default()),
            Err(Error::NotHarmonic { .. })
        ));
    }
}
