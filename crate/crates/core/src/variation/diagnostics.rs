//! How far `W` is from being a multiple of `f_z`, and from `∇_z̄ W = ±μ f_z`.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::face::{face_jets, field_jets, hermitian, Cv, FaceJet, FaceLifts, FieldJet};
use crate::conformal::{ConformalStructure, DomainEmbedding};
use crate::harmonic::{ComplexVertexField, EquivariantMap, VertexField};
use crate::hypgeom::{disk_centering, Model};
use crate::surface::octagon::reduce_to_domain;
use crate::surface::LabeledMesh;
use crate::target::TargetManifold;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tangency {
    /// `(∫ |f_z ∧ W|²)^½ / (∫ |f_z|²|W|²)^½`, in `[0, 1]`.
    pub defect: f64,
    /// Smaller of the two relative residuals of `∇_z̄ W = ±μ f_z`.
    pub parallel_residual: f64,
    /// Faces left out because `f_z` nearly vanishes there.
    pub excluded_faces: usize,
}

fn total(models: &[Model], x: &[Cv], y: &[Cv]) -> C {
    models.iter().enumerate().map(|(k, m)| hermitian(*m, &x[k], &y[k])).sum()
}

pub(crate) fn tangency_from_jets(
    jets: &[FaceJet],
    fields: &[Vec<FieldJet>],
    models: &[Model],
    mu: &[C],
    threshold: f64,
) -> Tangency {
    let fz: Vec<Vec<Cv>> = jets.iter().map(|j| j.fz()).collect();
    let norms: Vec<f64> = fz.iter().map(|x| total(models, x, x).re.sqrt()).collect();
    let mean = norms.iter().sum::<f64>() / norms.len().max(1) as f64;
    let mut excluded = 0;
    let (mut wedge, mut scale) = (0.0, 0.0);
    let (mut plus, mut minus, mut pscale) = (0.0, 0.0, 0.0);
    for (f, jet) in jets.iter().enumerate() {
        let x = &fz[f];
        let w: Vec<Cv> = fields[f].iter().map(|j| j.value).collect();
        let d: Vec<Cv> = fields[f].iter().map(|j| j.dzbar).collect();
        let m = mu[f];
        let mfz: Vec<Cv> = x.iter().map(|v| [v[0] * m, v[1] * m]).collect();
        let diff = |s: f64| -> f64 {
            let r: Vec<Cv> = d.iter().zip(&mfz).map(|(a, b)| [a[0] - b[0] * s, a[1] - b[1] * s]).collect();
            total(models, &r, &r).re
        };
        plus += jet.area * diff(1.0);
        minus += jet.area * diff(-1.0);
        pscale += jet.area * (total(models, &d, &d).re + total(models, &mfz, &mfz).re);
        if norms[f] < threshold * mean || norms[f] == 0.0 {
            excluded += 1;
            continue;
        }
        let xx = total(models, x, x).re;
        let ww = total(models, &w, &w).re;
        let xw = total(models, x, &w).norm_sqr();
        wedge += jet.area * (xx * ww - xw).max(0.0);
        scale += jet.area * xx * ww;
    }
    Tangency {
        defect: if scale > 0.0 { (wedge / scale).sqrt() } else { 0.0 },
        parallel_residual: if pscale > 0.0 { (plus.min(minus) / pscale).sqrt() } else { 0.0 },
        excluded_faces: excluded,
    }
}

/// Tangency statistics of `W` along the map `f`. `mu` is the per-face
/// coefficient compared against `∇_z̄ W / f_z`, half the conjugate-linear part
/// of `∂J/∂s` (see [`crate::conformal::endo_h`]).
pub fn tangency_diagnostic(
    f: &EquivariantMap,
    w: &ComplexVertexField,
    lm: &LabeledMesh,
    c: &ConformalStructure,
    target: &TargetManifold,
    mu: &[C],
    threshold: f64,
) -> Tangency {
    let models: Vec<Model> = target.factors.iter().map(|t| t.model).collect();
    let lifts = FaceLifts::new(lm, target);
    let jets = face_jets(&lifts, c, target, f);
    let fields = field_jets(&jets, &lifts, c, &models, f, &w.re, &w.im);
    tangency_from_jets(&jets, &fields, &models, mu, threshold)
}

/// `W = λ f_z` for a vector field `λ` given in the domain chart (on the
/// fundamental octagon for hyperbolic domains), sampled at face centres and
/// averaged onto vertices.
pub fn synthetic_tangent_field<F>(
    emb: &DomainEmbedding,
    lm: &LabeledMesh,
    c: &ConformalStructure,
    target: &TargetManifold,
    f: &EquivariantMap,
    lambda: F,
) -> ComplexVertexField
where
    F: Fn(C) -> C,
{
    let models: Vec<Model> = target.factors.iter().map(|t| t.model).collect();
    let nf = models.len();
    let nv = f.num_vertices();
    let lifts = FaceLifts::new(lm, target);
    let jets = face_jets(&lifts, c, target, f);
    let mut re = VertexField::zeros(nv, nf);
    let mut im = VertexField::zeros(nv, nf);
    let mut count = vec![0.0f64; nv];
    let origin = C::new(0.0, 0.0);
    for (face, jet) in jets.iter().enumerate() {
        let (centre, dir) = emb.face_frame(lm, face);
        // dζ/dz for the face chart ζ
        let chart = match emb.model {
            Model::Euclidean => 1.0 / dir,
            Model::HyperbolicDisk => disk_centering(centre).deriv(centre) / dir,
        };
        let field = match emb.model {
            Model::Euclidean => lambda(centre),
            Model::HyperbolicDisk => {
                let (z, g) = reduce_to_domain(centre);
                lambda(z) / g.deriv(centre)
            }
        };
        let l = field * chart;
        let fz = jet.fz();
        for i in 0..3 {
            let v = lifts.vertices[face][i];
            count[v] += 1.0;
            for k in 0..nf {
                let w = [fz[k][0] * l, fz[k][1] * l];
                let parts = [C::new(w[0].re, w[1].re), C::new(w[0].im, w[1].im)];
                let idx = v * nf + k;
                let g = jet.frames[i][k].deriv(f.points[idx]);
                let back = parts.map(|x| models[k].transport(origin, jet.corners[i][k], x) / g);
                re.vecs[idx] += back[0];
                im.vecs[idx] += back[1];
            }
        }
    }
    for v in 0..nv {
        for k in 0..nf {
            re.vecs[v * nf + k] /= count[v].max(1.0);
            im.vecs[v * nf + k] /= count[v].max(1.0);
        }
    }
    ComplexVertexField { re, im }
}
