//! Target manifolds: products of flat and hyperbolic surface factors, each with
//! a representation of the domain surface group.
//!
//! A point of an `nf`-factor target is `nf` chart coordinates; a tangent vector
//! is `nf` chart vectors (complex numbers). Complexified vectors carry two
//! complex components per factor.

use std::collections::BTreeMap;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::conformal::Mat2;
use crate::error::{Error, Result};
use crate::hypgeom::{complexify, Action, Model, ModelIsometry};
use crate::surface::{octagon, LabeledMesh, SurfaceGroup, Word};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetFactor {
    pub model: Model,
    /// Image of each surface-group generator.
    pub rep: Vec<ModelIsometry>,
}

impl TargetFactor {
    pub fn actions(&self) -> Vec<Action> {
        self.rep.iter().map(|g| g.action()).collect()
    }

    pub fn word_action(&self, w: &Word) -> Action {
        octagon::word_action(&self.actions(), w, self.model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetManifold {
    pub factors: Vec<TargetFactor>,
}

/// Complexified tangent vector of a product target: two complex chart
/// components per factor.
pub type CVec = Vec<[C; 2]>;

impl TargetManifold {
    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn dimension(&self) -> usize {
        2 * self.factors.len()
    }

    pub fn generators(&self) -> usize {
        self.factors.first().map(|f| f.rep.len()).unwrap_or(0)
    }

    pub fn distance(&self, p: &[C], q: &[C]) -> f64 {
        self.factors
            .iter()
            .enumerate()
            .map(|(k, f)| f.model.dist_sqr(p[k], q[k]))
            .sum::<f64>()
            .sqrt()
    }

    pub fn exp(&self, p: &[C], v: &[C]) -> Vec<C> {
        self.factors.iter().enumerate().map(|(k, f)| f.model.exp(p[k], v[k])).collect()
    }

    pub fn log(&self, p: &[C], q: &[C]) -> Vec<C> {
        self.factors.iter().enumerate().map(|(k, f)| f.model.log(p[k], q[k])).collect()
    }

    pub fn transport(&self, p: &[C], q: &[C], v: &[C]) -> Vec<C> {
        self.factors
            .iter()
            .enumerate()
            .map(|(k, f)| f.model.transport(p[k], q[k], v[k]))
            .collect()
    }

    pub fn inner(&self, p: &[C], x: &[C], y: &[C]) -> f64 {
        self.factors.iter().enumerate().map(|(k, f)| f.model.inner(p[k], x[k], y[k])).sum()
    }

    /// Real curvature tensor on flattened real vectors (x0, y0, x1, y1, ...).
    pub fn curvature_flat(&self, p: &[C], x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        self.factors
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let s = 2 * k;
                let a = |v: &[f64]| [v[s], v[s + 1]];
                f.model.curvature(p[k], a(x), a(y), a(z), a(w))
            })
            .sum()
    }

    /// Real curvature on chart vectors.
    pub fn curvature(&self, p: &[C], x: &[C], y: &[C], z: &[C], w: &[C]) -> f64 {
        let flat = |v: &[C]| v.iter().flat_map(|c| [c.re, c.im]).collect::<Vec<f64>>();
        self.curvature_flat(p, &flat(x), &flat(y), &flat(z), &flat(w))
    }

    /// Complex multilinear extension of the product curvature.
    pub fn curvature_complex(&self, p: &[C], x: &CVec, y: &CVec, z: &CVec, w: &CVec) -> C {
        let flat = |v: &CVec| v.iter().flat_map(|c| [c[0], c[1]]).collect::<Vec<C>>();
        complexify(
            |a, b, c, d| self.curvature_flat(p, a, b, c, d),
            &flat(x),
            &flat(y),
            &flat(z),
            &flat(w),
        )
    }

    /// `R(x, y, conj x, conj y)`.
    pub fn hermitian_curvature(&self, p: &[C], x: &CVec, y: &CVec) -> f64 {
        let conj = |v: &CVec| v.iter().map(|c| [c[0].conj(), c[1].conj()]).collect::<CVec>();
        self.curvature_complex(p, x, y, &conj(x), &conj(y)).re
    }

    /// Hermitian metric `Σ g(x, conj y)` on complexified vectors.
    pub fn hermitian_inner(&self, p: &[C], x: &CVec, y: &CVec) -> C {
        self.factors
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let l2 = f.model.scale(p[k]).powi(2);
                (x[k][0] * y[k][0].conj() + x[k][1] * y[k][1].conj()) * l2
            })
            .sum()
    }

    /// Per-factor action of a word.
    pub fn word_actions(&self, w: &Word) -> Vec<Action> {
        self.factors.iter().map(|f| f.word_action(w)).collect()
    }

    /// Largest deviation from the identity of the group relator and of every
    /// face word of `lm` under the representation.
    pub fn equivariance_defect(&self, lm: &LabeledMesh) -> Result<f64> {
        if self.generators() < lm.group().generators() {
            return Err(Error::Invalid(format!(
                "representation has {} generators, surface needs {}",
                self.generators(),
                lm.group().generators()
            )));
        }
        let mut worst: f64 = 0.0;
        let mut words = vec![lm.group().relator()];
        words.extend((0..lm.mesh.num_faces()).map(|f| lm.labels.face_word(f)));
        for w in &words {
            for a in self.word_actions(w) {
                worst = worst.max(a.deviation_from_identity());
            }
        }
        Ok(worst)
    }
}

/// Flat torus `R^2 / (Z w1 + Z w2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatTorusTarget {
    pub basis: [C; 2],
}

impl FlatTorusTarget {
    pub fn new(w1: C, w2: C) -> Result<Self> {
        if (w1.conj() * w2).im.abs() < 1e-12 {
            return Err(Error::Invalid("degenerate lattice".into()));
        }
        Ok(FlatTorusTarget { basis: [w1, w2] })
    }

    pub fn square() -> Self {
        FlatTorusTarget { basis: [C::new(1.0, 0.0), C::new(0.0, 1.0)] }
    }

    pub fn area(&self) -> f64 {
        (self.basis[0].conj() * self.basis[1]).im.abs()
    }

    pub fn lattice_vector(&self, n: [i64; 2]) -> C {
        self.basis[0] * n[0] as f64 + self.basis[1] * n[1] as f64
    }

    /// Factor whose generator k translates by `degree[k]` in lattice units.
    pub fn factor(&self, degree: &[[i64; 2]]) -> TargetFactor {
        let rep = degree
            .iter()
            .map(|&n| {
                let t = self.lattice_vector(n);
                ModelIsometry::LatticeTranslation([t.re, t.im])
            })
            .collect();
        TargetFactor { model: Model::Euclidean, rep }
    }

    pub fn manifold(&self, degree: &[[i64; 2]]) -> TargetManifold {
        TargetManifold { factors: vec![self.factor(degree)] }
    }
}

/// Genus-2 hyperbolic surface as a quotient of the disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuchsianTarget {
    pub generators: [ModelIsometry; 4],
}

impl FuchsianTarget {
    /// Identity-class factor: generator k of the domain goes to generator k.
    pub fn factor(&self) -> TargetFactor {
        TargetFactor { model: Model::HyperbolicDisk, rep: self.generators.to_vec() }
    }

    pub fn manifold(&self) -> TargetManifold {
        TargetManifold { factors: vec![self.factor()] }
    }

    /// Class of the `power`-th Dehn twist along the curve of `a`: the domain
    /// generator `b` goes to `b a^power`, the others are kept. The relator is
    /// preserved since `[a, b a^k] = [a, b]`.
    pub fn twisted(&self, power: i32) -> TargetFactor {
        let mut f = self.factor();
        let a = self.generators[0].action();
        let step = if power >= 0 { a } else { a.inverse() };
        let mut b = self.generators[1].action();
        for _ in 0..power.unsigned_abs() {
            b = b.compose(&step);
        }
        f.rep[1] = ModelIsometry::from_action(&b);
        f
    }

    pub fn relator_defect(&self) -> f64 {
        let f = self.factor();
        f.word_action(&SurfaceGroup { genus: 2 }.relator()).deviation_from_identity()
    }
}

/// Side pairings of the regular octagon with 45° corners.
pub fn octagon_generators() -> FuchsianTarget {
    let g = octagon::generator_actions();
    FuchsianTarget { generators: g.map(|a| ModelIsometry::from_action(&a)) }
}

pub fn product_target(t1: &TargetManifold, t2: &TargetManifold) -> Result<TargetManifold> {
    if t1.generators() != t2.generators() {
        return Err(Error::Invalid("factors represent different groups".into()));
    }
    let mut factors = t1.factors.clone();
    factors.extend(t2.factors.iter().cloned());
    Ok(TargetManifold { factors })
}

/// Affine harmonic map between flat tori, `z ↦ alpha z + beta conj(z)` on the
/// universal covers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub alpha: C,
    pub beta: C,
}

impl AffineMap {
    pub fn apply(&self, z: C) -> C {
        self.alpha * z + self.beta * z.conj()
    }

    pub fn matrix(&self) -> Mat2 {
        crate::conformal::real_linear(self.alpha, self.beta)
    }
}

/// Harmonic representative from the torus `C/(Z + tau Z)` and its energy
/// `½ ∫ |dL|^2`. `degree[k]` gives the image of generator k (k = a, b) in
/// lattice units.
pub fn torus_harmonic_oracle(tau: C, lattice: &FlatTorusTarget, degree: [[i64; 2]; 2]) -> Result<(AffineMap, f64)> {
    if tau.im <= 0.0 {
        return Err(Error::Invalid("domain modulus must lie in the upper half plane".into()));
    }
    FlatTorusTarget::new(lattice.basis[0], lattice.basis[1])?;
    let ta = lattice.lattice_vector(degree[0]);
    let tb = lattice.lattice_vector(degree[1]);
    let alpha = (tb - ta * tau.conj()) / (tau - tau.conj());
    let beta = ta - alpha;
    let energy = (alpha.norm_sqr() + beta.norm_sqr()) * tau.im;
    Ok((AffineMap { alpha, beta }, energy))
}

/// Representation document: generator letter -> lattice vector `[x, y]` or
/// matrix `[[a, b], [c, d]]`, one table per factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepDocument {
    pub factors: Vec<RepFactorDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RepFactorDocument {
    Flat { rep: BTreeMap<String, [f64; 2]> },
    Hyperbolic { rep: BTreeMap<String, [[f64; 2]; 2]> },
}

impl RepDocument {
    pub fn into_target(self, generators: usize) -> Result<TargetManifold> {
        let letters = ["a", "b", "c", "d", "e", "f", "g", "h"];
        let mut factors = Vec::new();
        for f in self.factors {
            let (model, rep) = match f {
                RepFactorDocument::Flat { rep } => (
                    Model::Euclidean,
                    letters[..generators]
                        .iter()
                        .map(|l| rep.get(*l).map(|t| ModelIsometry::LatticeTranslation(*t)))
                        .collect::<Option<Vec<_>>>(),
                ),
                RepFactorDocument::Hyperbolic { rep } => (
                    Model::HyperbolicDisk,
                    letters[..generators]
                        .iter()
                        .map(|l| rep.get(*l).map(|m| ModelIsometry::Moebius(*m)))
                        .collect::<Option<Vec<_>>>(),
                ),
            };
            let rep = rep.ok_or_else(|| Error::Parse("representation is missing a generator".into()))?;
            for g in &rep {
                if (g.determinant() - 1.0).abs() > 1e-10 {
                    return Err(Error::Invalid(format!("matrix determinant {} is not 1", g.determinant())));
                }
            }
            factors.push(TargetFactor { model, rep });
        }
        Ok(TargetManifold { factors })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn octagon_generators_certify() {
        let g = octagon_generators();
        assert!(g.relator_defect() < 1e-8);
        for m in &g.generators {
            assert!(m.trace().abs() > 2.0);
            assert_abs_diff_eq!(m.determinant(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn torus_oracle_examples() {
        let sq = FlatTorusTarget::square();
        let tau = C::new(0.0, 1.0);
        let (_, e) = torus_harmonic_oracle(tau, &sq, [[1, 0], [0, 1]]).unwrap();
        assert_abs_diff_eq!(e, 1.0, epsilon = 1e-15);
        let (_, e) = torus_harmonic_oracle(tau, &sq, [[0, 0], [0, 0]]).unwrap();
        assert_eq!(e, 0.0);
        let (_, e) = torus_harmonic_oracle(tau, &sq, [[2, 0], [0, 1]]).unwrap();
        assert_abs_diff_eq!(e, 2.5, epsilon = 1e-14);
        assert!(FlatTorusTarget::new(C::new(1.0, 0.0), C::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn product_curvature_blocks() {
        let h = octagon_generators().manifold();
        let t = FlatTorusTarget::square().manifold(&[[1, 0], [0, 1], [0, 0], [1, 0]]);
        let p = product_target(&h, &t).unwrap();
        let z = C::new(0.0, 0.0);
        let pt = [z, z];
        let o = C::new(0.0, 0.0);
        let x: CVec = vec![[C::new(0.5, 0.0), o], [o, o]];
        let y: CVec = vec![[o, C::new(0.5, 0.0)], [o, o]];
        assert_abs_diff_eq!(p.hermitian_curvature(&pt, &x, &y), -1.0, epsilon = 1e-14);
        let y2: CVec = vec![[o, o], [C::new(1.0, 0.3), C::new(-0.2, 1.0)]];
        assert_abs_diff_eq!(p.hermitian_curvature(&pt, &x, &y2), 0.0, epsilon = 1e-15);
        let tt = product_target(&t, &t).unwrap();
        let a: CVec = vec![[C::new(1.0, 2.0), C::new(0.1, 0.0)], [C::new(0.0, 1.0), o]];
        let b: CVec = vec![[C::new(0.3, 0.0), C::new(1.0, -1.0)], [o, C::new(2.0, 0.5)]];
        assert_eq!(tt.hermitian_curvature(&pt, &a, &b), 0.0);
    }
}
