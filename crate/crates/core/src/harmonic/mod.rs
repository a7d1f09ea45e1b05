//! Discrete equivariant energy, its gradient, the index form and the solver.
//!
//! The energy is `½ Σ_e w_e d(f_i, g_e f_j)^2` over edges `e = (i -> j)` with
//! cotangent weight `w_e` and deck isometry `g_e` from the crossing label.
//! Per-edge work runs in parallel; every reduction happens in a fixed order so
//! results do not depend on the thread count.

mod index;
mod solver;

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use index::{hessian_form, index_form, second_derivative_along, IndexMethod, IndexOptions};
pub use solver::{solve_harmonic, Method, SolverOptions, SolverReport};

use crate::conformal::{cotan_weights, ConformalStructure, CotanWeights};
use crate::error::{Error, Result};
use crate::hypgeom::{Action, Model};
use crate::surface::LabeledMesh;
use crate::target::TargetManifold;

/// Per-vertex target points, vertex-major: `points[v * nf + k]` is the chart
/// coordinate of vertex `v` in factor `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivariantMap {
    pub factors: usize,
    pub points: Vec<C>,
}

impl EquivariantMap {
    pub fn num_vertices(&self) -> usize {
        self.points.len() / self.factors
    }

    pub fn at(&self, v: usize) -> &[C] {
        &self.points[v * self.factors..(v + 1) * self.factors]
    }

    pub fn constant(nv: usize, value: &[C]) -> Self {
        let mut points = Vec::with_capacity(nv * value.len());
        for _ in 0..nv {
            points.extend_from_slice(value);
        }
        EquivariantMap { factors: value.len(), points }
    }

    /// Pointwise geodesic perturbation `exp_f(t v)`.
    pub fn perturbed(&self, models: &[Model], v: &VertexField, t: f64) -> Self {
        let nf = self.factors;
        let points = self
            .points
            .iter()
            .zip(&v.vecs)
            .enumerate()
            .map(|(idx, (&p, &d))| models[idx % nf].exp(p, d * t))
            .collect();
        EquivariantMap { factors: nf, points }
    }
}

/// Chart tangent vectors at the points of a map, laid out like the map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexField {
    pub factors: usize,
    pub vecs: Vec<C>,
}

impl VertexField {
    pub fn zeros(nv: usize, nf: usize) -> Self {
        VertexField { factors: nf, vecs: vec![C::new(0.0, 0.0); nv * nf] }
    }

    pub fn at(&self, v: usize) -> &[C] {
        &self.vecs[v * self.factors..(v + 1) * self.factors]
    }

    pub fn add(&self, other: &VertexField) -> Self {
        VertexField { factors: self.factors, vecs: self.vecs.iter().zip(&other.vecs).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &VertexField) -> Self {
        VertexField { factors: self.factors, vecs: self.vecs.iter().zip(&other.vecs).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        VertexField { factors: self.factors, vecs: self.vecs.iter().map(|a| a * s).collect() }
    }

    /// Largest Riemannian norm over vertices.
    pub fn sup_norm(&self, models: &[Model], f: &EquivariantMap) -> f64 {
        let nf = self.factors;
        (0..self.vecs.len() / nf)
            .map(|v| {
                (0..nf)
                    .map(|k| models[k].norm(f.points[v * nf + k], self.vecs[v * nf + k]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Σ_v <x_v, y_v> with the metric at the map points.
    pub fn dot(&self, other: &VertexField, models: &[Model], f: &EquivariantMap) -> f64 {
        let nf = self.factors;
        self.vecs
            .iter()
            .zip(&other.vecs)
            .enumerate()
            .map(|(idx, (a, b))| models[idx % nf].inner(f.points[idx], *a, *b))
            .sum()
    }
}

/// Complexified vertex field `re + i im`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexVertexField {
    pub re: VertexField,
    pub im: VertexField,
}

#[derive(Debug, Clone)]
pub struct EdgeTerm {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
    /// Deck isometry per factor, `None` for the identity.
    pub deck: Vec<Option<Action>>,
}

/// Mesh, weights and deck data of one energy functional.
#[derive(Debug, Clone)]
pub struct HarmonicProblem {
    pub num_vertices: usize,
    pub models: Vec<Model>,
    pub edges: Vec<EdgeTerm>,
    pub weights: CotanWeights,
    /// For each vertex, its incident edges as `(edge, is_start)`, in edge order.
    incidence: Vec<Vec<(usize, bool)>>,
    /// Jacobi diagonal: Σ |w_e| over incident edges.
    pub diagonal: Vec<f64>,
}

impl HarmonicProblem {
    pub fn new(lm: &LabeledMesh, c: &ConformalStructure, target: &TargetManifold) -> Result<Self> {
        if target.generators() < lm.group().generators() {
            return Err(Error::Invalid("target representation does not cover the surface group".into()));
        }
        let weights = cotan_weights(c, lm)?;
        let neg = weights.negative_count();
        if neg > 0 {
            log::debug!("{neg} edges have negative cotangent weight");
        }
        let m = &lm.mesh;
        let edges: Vec<EdgeTerm> = m
            .primary_halfedges()
            .into_iter()
            .map(|h| {
                let word = lm.labels.get(h);
                let deck = if word.is_empty() {
                    vec![None; target.num_factors()]
                } else {
                    target.word_actions(word).into_iter().map(Some).collect()
                };
                EdgeTerm { i: m.origin(h), j: m.dest(h), weight: weights.w[h], deck }
            })
            .collect();
        let mut incidence = vec![Vec::new(); m.num_vertices];
        for (e, t) in edges.iter().enumerate() {
            incidence[t.i].push((e, true));
            incidence[t.j].push((e, false));
        }
        let diagonal = incidence
            .iter()
            .map(|inc| inc.iter().map(|&(e, _)| edges[e].weight.abs()).sum::<f64>().max(1e-12))
            .collect();
        Ok(HarmonicProblem {
            num_vertices: m.num_vertices,
            models: target.factors.iter().map(|f| f.model).collect(),
            edges,
            weights,
            incidence,
            diagonal,
        })
    }

    pub fn num_factors(&self) -> usize {
        self.models.len()
    }

    #[inline]
    fn far_end(&self, e: &EdgeTerm, k: usize, f: &EquivariantMap) -> C {
        let q = f.points[e.j * self.num_factors() + k];
        match &e.deck[k] {
            Some(g) => g.apply(q),
            None => q,
        }
    }

    /// `½ w_e Σ_k d^2` for every edge, in edge order.
    pub fn edge_energies(&self, f: &EquivariantMap) -> Vec<f64> {
        let nf = self.num_factors();
        self.edges
            .par_iter()
            .map(|e| {
                let mut s = 0.0;
                for k in 0..nf {
                    let p = f.points[e.i * nf + k];
                    s += self.models[k].dist_sqr(p, self.far_end(e, k, f));
                }
                0.5 * e.weight * s
            })
            .collect()
    }

    pub fn energy(&self, f: &EquivariantMap) -> f64 {
        self.edge_energies(f).iter().sum()
    }

    /// Energy and Riemannian gradient (chart vectors at the map points).
    pub fn energy_gradient(&self, f: &EquivariantMap) -> (f64, VertexField) {
        let nf = self.num_factors();
        let per_edge: Vec<(f64, Vec<C>)> = self
            .edges
            .par_iter()
            .map(|e| {
                let mut energy = 0.0;
                let mut contrib = Vec::with_capacity(2 * nf);
                for k in 0..nf {
                    let m = self.models[k];
                    let p = f.points[e.i * nf + k];
                    let q = f.points[e.j * nf + k];
                    let y = match &e.deck[k] {
                        Some(g) => g.apply(q),
                        None => q,
                    };
                    energy += m.dist_sqr(p, y);
                    let gi = -m.log(p, y) * e.weight;
                    let mut gj = -m.log(y, p) * e.weight;
                    if let Some(g) = &e.deck[k] {
                        gj /= g.deriv(q);
                    }
                    contrib.push(gi);
                    contrib.push(gj);
                }
                (0.5 * e.weight * energy, contrib)
            })
            .collect();
        let energy = per_edge.iter().map(|p| p.0).sum();
        let vecs: Vec<C> = (0..self.num_vertices)
            .into_par_iter()
            .flat_map_iter(|v| {
                let mut acc = vec![C::new(0.0, 0.0); nf];
                for &(e, start) in &self.incidence[v] {
                    let c = &per_edge[e].1;
                    for k in 0..nf {
                        acc[k] += if start { c[2 * k] } else { c[2 * k + 1] };
                    }
                }
                acc.into_iter()
            })
            .collect();
        (energy, VertexField { factors: nf, vecs })
    }

    pub fn gradient(&self, f: &EquivariantMap) -> VertexField {
        self.energy_gradient(f).1
    }

    pub fn gradient_norm(&self, f: &EquivariantMap) -> f64 {
        self.gradient(f).sup_norm(&self.models, f)
    }

    /// Parallel transport of a field between two maps, vertex by vertex.
    pub fn transport(&self, from: &EquivariantMap, to: &EquivariantMap, v: &VertexField) -> VertexField {
        let nf = self.num_factors();
        let vecs = v
            .vecs
            .iter()
            .enumerate()
            .map(|(idx, &x)| self.models[idx % nf].transport(from.points[idx], to.points[idx], x))
            .collect();
        VertexField { factors: nf, vecs }
    }

    /// Incident edges of `v` as `(edge, v is the start)`.
    pub fn incident(&self, v: usize) -> &[(usize, bool)] {
        &self.incidence[v]
    }
}

/// Energy of `f` for structure `c`; a convenience wrapper.
pub fn energy(lm: &LabeledMesh, c: &ConformalStructure, f: &EquivariantMap, target: &TargetManifold) -> Result<f64> {
    Ok(HarmonicProblem::new(lm, c, target)?.energy(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::DomainEmbedding;
    use crate::surface::build_torus;
    use crate::target::FlatTorusTarget;
    use approx::assert_abs_diff_eq;

    #[test]
    fn torus_identity_energy_is_one() {
        let lm = build_torus(6).unwrap();
        let emb = DomainEmbedding::torus(6, C::new(0.0, 1.0)).unwrap();
        let c = emb.structure(&lm).unwrap();
        let target = FlatTorusTarget::square().manifold(&[[1, 0], [0, 1]]);
        let f = EquivariantMap { factors: 1, points: emb.positions.clone() };
        assert_abs_diff_eq!(energy(&lm, &c, &f, &target).unwrap(), 1.0, epsilon = 1e-13);
        let k = EquivariantMap::constant(36, &[C::new(0.3, 0.1)]);
        let t0 = FlatTorusTarget::square().manifold(&[[0, 0], [0, 0]]);
        assert_eq!(energy(&lm, &c, &k, &t0).unwrap(), 0.0);
    }
}
