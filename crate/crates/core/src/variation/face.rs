//! Per-face first-order data of maps and vector fields.
//!
//! Each face is read in a target chart centred at the image barycenter, where
//! the Christoffel symbols of both models vanish. Vertex data is moved there by
//! the deck isometries of the face corners, then by parallel transport, and
//! differentiated affinely in the face chart `0, 1, p`.

use num_complex::Complex64 as C;
use rayon::prelude::*;

use crate::conformal::{approx_centroid, ConformalStructure};
use crate::harmonic::{EquivariantMap, VertexField};
use crate::hypgeom::{disk_centering, Action, Model};
use crate::surface::LabeledMesh;
use crate::target::TargetManifold;

/// Complexified tangent vector of one 2-dimensional factor.
pub type Cv = [C; 2];

pub(crate) fn complexify_vec(re: C, im: C) -> Cv {
    [C::new(re.re, im.re), C::new(re.im, im.im)]
}

/// Conformal factor of the model at its chart origin.
pub(crate) fn origin_scale(m: Model) -> f64 {
    m.scale(C::new(0.0, 0.0))
}

/// Deck isometries carrying each corner's base lift into the frame of corner 0.
#[derive(Debug, Clone)]
pub struct FaceLifts {
    pub vertices: Vec<[usize; 3]>,
    /// `decks[f][k][factor]`
    pub decks: Vec<[Vec<Action>; 3]>,
}

impl FaceLifts {
    pub fn new(lm: &LabeledMesh, target: &TargetManifold) -> Self {
        let decks = (0..lm.mesh.num_faces())
            .map(|f| {
                let w0 = lm.labels.get(3 * f).clone();
                let w1 = w0.mul(lm.labels.get(3 * f + 1));
                let id = target.word_actions(&crate::surface::Word::empty());
                [id, target.word_actions(&w0), target.word_actions(&w1)]
            })
            .collect();
        FaceLifts { vertices: lm.mesh.faces.clone(), decks }
    }
}

/// First-order data of the map on one face, in centred charts per factor.
#[derive(Debug, Clone)]
pub struct FaceJet {
    /// Centring isometry per factor (barycenter to origin), composed with the
    /// corner decks.
    pub frames: [Vec<Action>; 3],
    /// Centred corner images per factor.
    pub corners: [Vec<C>; 3],
    pub fx: Vec<C>,
    pub fy: Vec<C>,
    /// Chart area of the face.
    pub area: f64,
    /// Face share of the Dirichlet energy.
    pub energy: f64,
    /// `(2,0)` part of the pulled-back metric, from the geodesic side lengths
    /// of the image triangle.
    pub metric_q: C,
}

impl FaceJet {
    /// `f_z = ½ (f_x − i f_y)` per factor.
    pub fn fz(&self) -> Vec<Cv> {
        self.fx
            .iter()
            .zip(&self.fy)
            .map(|(&x, &y)| [C::new(x.re, -y.re) * 0.5, C::new(x.im, -y.im) * 0.5])
            .collect()
    }
}

fn affine_fit(values: [C; 3], p: C) -> (C, C) {
    let dx = values[1] - values[0];
    let dy = (values[2] - values[0] - dx * p.re) / p.im;
    (dx, dy)
}

/// `¼ (G11 − G22 − 2i G12)` for the flat metric `G` on the chart triangle
/// `0, 1, p` whose squared side lengths opposite each corner are `opposite`.
pub(crate) fn metric_hopf(p: C, opposite: [f64; 3]) -> C {
    let [d12, d20, d01] = opposite;
    let g11 = d01;
    let g12 = (d20 - d12 - g11 * (2.0 * p.re - 1.0)) / (2.0 * p.im);
    let g22 = (d20 - g11 * p.re * p.re - 2.0 * g12 * p.re * p.im) / (p.im * p.im);
    C::new(g11 - g22, -2.0 * g12) * 0.25
}

fn centering(m: Model, b: C) -> Action {
    match m {
        Model::HyperbolicDisk => disk_centering(b),
        Model::Euclidean => Action::Shift(-b),
    }
}

pub fn face_jets(
    lifts: &FaceLifts,
    c: &ConformalStructure,
    target: &TargetManifold,
    f: &EquivariantMap,
) -> Vec<FaceJet> {
    let models: Vec<Model> = target.factors.iter().map(|t| t.model).collect();
    let nf = models.len();
    (0..c.num_faces())
        .into_par_iter()
        .map(|face| {
            let vs = lifts.vertices[face];
            let p = c.shapes[face];
            let mut frames: [Vec<Action>; 3] = Default::default();
            let mut corners: [Vec<C>; 3] = Default::default();
            let mut fx = Vec::with_capacity(nf);
            let mut fy = Vec::with_capacity(nf);
            let mut energy = 0.0;
            let mut side = [0.0; 3];
            let cot = crate::conformal::corner_cotangents(p);
            for (k, &m) in models.iter().enumerate() {
                let lifted: [C; 3] =
                    std::array::from_fn(|i| lifts.decks[face][i][k].apply(f.points[vs[i] * nf + k]));
                let b = approx_centroid(m, &lifted);
                let t = centering(m, b);
                let pts: [C; 3] = std::array::from_fn(|i| t.apply(lifted[i]));
                let logs = pts.map(|z| m.log(C::new(0.0, 0.0), z));
                let (x, y) = affine_fit(logs, p);
                fx.push(x);
                fy.push(y);
                for i in 0..3 {
                    // corner i is opposite the edge (i+1, i+2)
                    let d2 = m.dist_sqr(lifted[(i + 1) % 3], lifted[(i + 2) % 3]);
                    energy += 0.25 * cot[i] * d2;
                    side[i] += d2;
                }
                for i in 0..3 {
                    frames[i].push(t.compose(&lifts.decks[face][i][k]));
                    corners[i].push(pts[i]);
                }
            }
            let metric_q = metric_hopf(p, side);
            FaceJet { frames, corners, fx, fy, area: c.chart_area(face), energy, metric_q }
        })
        .collect()
}

/// A complexified vertex field read on one face: value at the barycenter and
/// its `z` and `z̄` covariant derivatives, per factor.
#[derive(Debug, Clone, Copy)]
pub struct FieldJet {
    pub value: Cv,
    pub dz: Cv,
    pub dzbar: Cv,
}

pub fn field_jets(
    jets: &[FaceJet],
    lifts: &FaceLifts,
    c: &ConformalStructure,
    models: &[Model],
    f: &EquivariantMap,
    re: &VertexField,
    im: &VertexField,
) -> Vec<Vec<FieldJet>> {
    let nf = models.len();
    jets.par_iter()
        .enumerate()
        .map(|(face, jet)| {
            let vs = lifts.vertices[face];
            let p = c.shapes[face];
            (0..nf)
                .map(|k| {
                    let m = models[k];
                    let o = C::new(0.0, 0.0);
                    let moved = |field: &VertexField| -> [C; 3] {
                        std::array::from_fn(|i| {
                            let idx = vs[i] * nf + k;
                            let g = &jet.frames[i][k];
                            let v = field.vecs[idx] * g.deriv(f.points[idx]);
                            m.transport(jet.corners[i][k], o, v)
                        })
                    };
                    let r = moved(re);
                    let s = moved(im);
                    let vals: [Cv; 3] = std::array::from_fn(|i| complexify_vec(r[i], s[i]));
                    let comp = |j: usize| affine_fit([vals[0][j], vals[1][j], vals[2][j]], p);
                    let (x0, y0) = comp(0);
                    let (x1, y1) = comp(1);
                    let i = C::new(0.0, 1.0);
                    FieldJet {
                        value: std::array::from_fn(|j| (vals[0][j] + vals[1][j] + vals[2][j]) / 3.0),
                        dz: [(x0 - i * y0) * 0.5, (x1 - i * y1) * 0.5],
                        dzbar: [(x0 + i * y0) * 0.5, (x1 + i * y1) * 0.5],
                    }
                })
                .collect()
        })
        .collect()
}


/// Hermitian pairing `Σ λ² x_j conj(y_j)` at the chart origin.
pub fn hermitian(m: Model, x: &Cv, y: &Cv) -> C {
    let l = origin_scale(m);
    l * l * (x[0] * y[0].conj() + x[1] * y[1].conj())
}

/// Complex-bilinear pairing `Σ λ² x_j y_j` at the chart origin.
pub fn bilinear(m: Model, x: &Cv, y: &Cv) -> C {
    let l = origin_scale(m);
    l * l * (x[0] * y[0] + x[1] * y[1])
}
