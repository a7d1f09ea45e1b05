//! Constant-curvature model geometry: the Poincaré disk and the Euclidean plane.
//!
//! Every factor is two dimensional, so points and chart vectors are stored as
//! `Complex64`. The typed wrappers (`ModelPoint`, `TangentVec`, ...) check models
//! and base points; the `Model` methods are the unchecked fast path used by the
//! energy assembly.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: C = C::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    HyperbolicDisk,
    Euclidean,
}

/// `1 - |z|^2` without cancellation for |z| near 1.
#[inline]
fn one_minus_norm_sqr(z: C) -> f64 {
    let r = z.norm();
    (1.0 - r) * (1.0 + r)
}

/// artanh(r) / r, stable near 0.
#[inline]
fn artanh_over(r: f64) -> f64 {
    if r < 1e-8 {
        1.0 + r * r / 3.0
    } else {
        0.5 * (2.0 * r / (1.0 - r)).ln_1p() / r
    }
}

/// tanh(r) / r, stable near 0.
#[inline]
fn tanh_over(r: f64) -> f64 {
    if r < 1e-8 {
        1.0 - r * r / 3.0
    } else {
        r.tanh() / r
    }
}

impl Model {
    /// Constant sectional curvature.
    pub fn curvature_constant(self) -> f64 {
        match self {
            Model::HyperbolicDisk => -1.0,
            Model::Euclidean => 0.0,
        }
    }

    /// Conformal factor: the metric at `p` is `scale(p)^2 |dz|^2`.
    #[inline]
    pub fn scale(self, p: C) -> f64 {
        match self {
            Model::HyperbolicDisk => 2.0 / one_minus_norm_sqr(p),
            Model::Euclidean => 1.0,
        }
    }

    #[inline]
    pub fn dist(self, p: C, q: C) -> f64 {
        match self {
            Model::HyperbolicDisk => {
                let den = (one_minus_norm_sqr(p) * one_minus_norm_sqr(q)).sqrt();
                2.0 * ((p - q).norm() / den).asinh()
            }
            Model::Euclidean => (p - q).norm(),
        }
    }

    #[inline]
    pub fn dist_sqr(self, p: C, q: C) -> f64 {
        match self {
            Model::HyperbolicDisk => {
                let d = self.dist(p, q);
                d * d
            }
            Model::Euclidean => (p - q).norm_sqr(),
        }
    }

    /// Chart vector at `p` pointing to `q` with length `dist(p, q)`.
    #[inline]
    pub fn log(self, p: C, q: C) -> C {
        match self {
            Model::HyperbolicDisk => {
                let w = (q - p) / (C::new(1.0, 0.0) - p.conj() * q);
                w * (one_minus_norm_sqr(p) * artanh_over(w.norm()))
            }
            Model::Euclidean => q - p,
        }
    }

    #[inline]
    pub fn exp(self, p: C, v: C) -> C {
        match self {
            Model::HyperbolicDisk => {
                let v0 = v / one_minus_norm_sqr(p);
                let w = v0 * tanh_over(v0.norm());
                (w + p) / (C::new(1.0, 0.0) + p.conj() * w)
            }
            Model::Euclidean => p + v,
        }
    }

    /// Parallel transport of the chart vector `v` along the geodesic from `p` to `q`.
    #[inline]
    pub fn transport(self, p: C, q: C, v: C) -> C {
        match self {
            Model::HyperbolicDisk => {
                let w = (q - p) / (C::new(1.0, 0.0) - p.conj() * q);
                let d = C::new(1.0, 0.0) + p.conj() * w;
                v * one_minus_norm_sqr(w) / (d * d)
            }
            Model::Euclidean => v,
        }
    }

    /// Point at parameter `t` on the geodesic from `p` to `q`.
    pub fn geodesic(self, p: C, q: C, t: f64) -> C {
        self.exp(p, self.log(p, q) * t)
    }

    #[inline]
    pub fn inner(self, p: C, x: C, y: C) -> f64 {
        let l = self.scale(p);
        l * l * (x.re * y.re + x.im * y.im)
    }

    #[inline]
    pub fn norm(self, p: C, x: C) -> f64 {
        self.scale(p) * x.norm()
    }

    /// Real curvature tensor with the sectional sign convention:
    /// `R(x,y,x,y) = K (|x|^2|y|^2 - <x,y>^2)`.
    pub fn curvature(self, p: C, x: [f64; 2], y: [f64; 2], z: [f64; 2], w: [f64; 2]) -> f64 {
        let k = self.curvature_constant();
        if k == 0.0 {
            return 0.0;
        }
        let l2 = self.scale(p).powi(2);
        let g = |a: [f64; 2], b: [f64; 2]| l2 * (a[0] * b[0] + a[1] * b[1]);
        k * (g(x, z) * g(y, w) - g(x, w) * g(y, z))
    }

    /// Complex multilinear extension of `curvature`.
    pub fn curvature_complex(self, p: C, x: [C; 2], y: [C; 2], z: [C; 2], w: [C; 2]) -> C {
        complexify(|a, b, c, d| self.curvature(p, arr(a), arr(b), arr(c), arr(d)), &x, &y, &z, &w)
    }

    /// `R(x, y, conj x, conj y)`, real by symmetry.
    pub fn hermitian_curvature(self, p: C, x: [C; 2], y: [C; 2]) -> f64 {
        let xc = [x[0].conj(), x[1].conj()];
        let yc = [y[0].conj(), y[1].conj()];
        self.curvature_complex(p, x, y, xc, yc).re
    }
}

fn arr(v: &[f64]) -> [f64; 2] {
    [v[0], v[1]]
}

/// Extends a real 4-tensor to complex arguments by expanding every slot into
/// real and imaginary parts (16 real evaluations).
pub fn complexify<F>(r: F, x: &[C], y: &[C], z: &[C], w: &[C]) -> C
where
    F: Fn(&[f64], &[f64], &[f64], &[f64]) -> f64,
{
    let parts = |v: &[C]| -> [Vec<f64>; 2] {
        [v.iter().map(|c| c.re).collect(), v.iter().map(|c| c.im).collect()]
    };
    let (px, py, pz, pw) = (parts(x), parts(y), parts(z), parts(w));
    let mut acc = C::new(0.0, 0.0);
    for bits in 0..16u32 {
        let (bx, by, bz, bw) = (bits & 1, (bits >> 1) & 1, (bits >> 2) & 1, (bits >> 3) & 1);
        let val = r(
            &px[bx as usize],
            &py[by as usize],
            &pz[bz as usize],
            &pw[bw as usize],
        );
        if val == 0.0 {
            continue;
        }
        acc += I.powu(bx + by + bz + bw) * val;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub model: Model,
    pub coords: [f64; 2],
}

impl ModelPoint {
    pub fn disk(x: f64, y: f64) -> Result<Self> {
        if x * x + y * y >= 1.0 - 1e-12 {
            return Err(Error::Invalid(format!("({x}, {y}) is outside the disk")));
        }
        Ok(ModelPoint { model: Model::HyperbolicDisk, coords: [x, y] })
    }

    pub fn euclid(x: f64, y: f64) -> Self {
        ModelPoint { model: Model::Euclidean, coords: [x, y] }
    }

    pub fn from_complex(model: Model, z: C) -> Self {
        ModelPoint { model, coords: [z.re, z.im] }
    }

    pub fn z(&self) -> C {
        C::new(self.coords[0], self.coords[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentVec {
    pub base: ModelPoint,
    pub components: [f64; 2],
}

impl TangentVec {
    pub fn new(base: ModelPoint, components: [f64; 2]) -> Self {
        TangentVec { base, components }
    }

    pub fn z(&self) -> C {
        C::new(self.components[0], self.components[1])
    }

    pub fn norm(&self) -> f64 {
        self.base.model.norm(self.base.z(), self.z())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexTangentVec {
    pub base: ModelPoint,
    pub components: [C; 2],
}

impl ComplexTangentVec {
    pub fn new(base: ModelPoint, components: [C; 2]) -> Self {
        ComplexTangentVec { base, components }
    }

    /// `re + i·im` from two real vectors at the same base.
    pub fn from_parts(re: &TangentVec, im: &TangentVec) -> Result<Self> {
        same_base(&re.base, &im.base)?;
        Ok(ComplexTangentVec {
            base: re.base,
            components: [
                C::new(re.components[0], im.components[0]),
                C::new(re.components[1], im.components[1]),
            ],
        })
    }

    pub fn conj(&self) -> Self {
        ComplexTangentVec {
            base: self.base,
            components: [self.components[0].conj(), self.components[1].conj()],
        }
    }
}

fn same_model(p: &ModelPoint, q: &ModelPoint) -> Result<()> {
    if p.model != q.model {
        return Err(Error::ModelMismatch(format!("{:?} vs {:?}", p.model, q.model)));
    }
    Ok(())
}

fn same_base(p: &ModelPoint, q: &ModelPoint) -> Result<()> {
    same_model(p, q)?;
    if p.coords != q.coords {
        return Err(Error::BaseMismatch);
    }
    Ok(())
}

fn as_c2(v: [f64; 2]) -> C {
    C::new(v[0], v[1])
}

pub fn distance(p: &ModelPoint, q: &ModelPoint) -> Result<f64> {
    same_model(p, q)?;
    Ok(p.model.dist(p.z(), q.z()))
}

pub fn exp_map(v: &TangentVec) -> ModelPoint {
    let m = v.base.model;
    ModelPoint::from_complex(m, m.exp(v.base.z(), v.z()))
}

pub fn log_map(p: &ModelPoint, q: &ModelPoint) -> Result<TangentVec> {
    same_model(p, q)?;
    let l = p.model.log(p.z(), q.z());
    Ok(TangentVec::new(*p, [l.re, l.im]))
}

pub fn transport(v: &TangentVec, to: &ModelPoint) -> Result<TangentVec> {
    same_model(&v.base, to)?;
    let t = v.base.model.transport(v.base.z(), to.z(), v.z());
    Ok(TangentVec::new(*to, [t.re, t.im]))
}

pub fn curvature(x: &TangentVec, y: &TangentVec, z: &TangentVec, w: &TangentVec) -> Result<f64> {
    for o in [y, z, w] {
        same_base(&x.base, &o.base)?;
    }
    Ok(x.base.model.curvature(x.base.z(), x.components, y.components, z.components, w.components))
}

pub fn hermitian_curvature(x: &ComplexTangentVec, y: &ComplexTangentVec) -> Result<f64> {
    same_base(&x.base, &y.base)?;
    Ok(x.base.model.hermitian_curvature(x.base.z(), x.components, y.components))
}

/// Orientation-preserving isometry of a model.
///
/// Hyperbolic isometries are stored as real SL(2,R) matrices acting on the upper
/// half plane and act on the disk through the Cayley transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelIsometry {
    Moebius([[f64; 2]; 2]),
    LatticeTranslation([f64; 2]),
}

/// Precomputed action on chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    /// z ↦ (a z + b) / (conj(b) z + conj(a)), |a|^2 - |b|^2 = 1
    Disk { a: C, b: C },
    Shift(C),
}

impl Action {
    pub const IDENTITY_DISK: Action = Action::Disk { a: C::new(1.0, 0.0), b: C::new(0.0, 0.0) };

    #[inline]
    pub fn apply(&self, z: C) -> C {
        match *self {
            Action::Disk { a, b } => (a * z + b) / (b.conj() * z + a.conj()),
            Action::Shift(t) => z + t,
        }
    }

    /// Complex derivative; tangent vectors are pushed forward by multiplication.
    #[inline]
    pub fn deriv(&self, z: C) -> C {
        match *self {
            Action::Disk { a, b } => {
                let d = b.conj() * z + a.conj();
                C::new(1.0, 0.0) / (d * d)
            }
            Action::Shift(_) => C::new(1.0, 0.0),
        }
    }

    pub fn compose(&self, other: &Action) -> Action {
        match (*self, *other) {
            (Action::Disk { a, b }, Action::Disk { a: c, b: d }) => {
                Action::Disk { a: a * c + b * d.conj(), b: a * d + b * c.conj() }
            }
            (Action::Shift(s), Action::Shift(t)) => Action::Shift(s + t),
            _ => panic!("composing actions of different models"),
        }
    }

    pub fn inverse(&self) -> Action {
        match *self {
            Action::Disk { a, b } => Action::Disk { a: a.conj(), b: -b },
            Action::Shift(t) => Action::Shift(-t),
        }
    }

    pub fn model(&self) -> Model {
        match self {
            Action::Disk { .. } => Model::HyperbolicDisk,
            Action::Shift(_) => Model::Euclidean,
        }
    }

    /// Distance from the identity in coefficient space.
    pub fn deviation_from_identity(&self) -> f64 {
        match *self {
            Action::Disk { a, b } => {
                // a and -a give the same map
                let s = if a.re >= 0.0 { 1.0 } else { -1.0 };
                ((a * s - 1.0).norm()).max(b.norm())
            }
            Action::Shift(t) => t.norm(),
        }
    }
}

type M2 = [[C; 2]; 2];

fn mul2(x: &M2, y: &M2) -> M2 {
    let mut r = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    r
}

fn cayley() -> (M2, M2) {
    let one = C::new(1.0, 0.0);
    let c = [[one, -I], [one, I]];
    let k = one / (2.0 * I);
    let ci = [[k * I, k * I], [-k, k]];
    (c, ci)
}

impl ModelIsometry {
    pub fn identity(model: Model) -> Self {
        match model {
            Model::HyperbolicDisk => ModelIsometry::Moebius([[1.0, 0.0], [0.0, 1.0]]),
            Model::Euclidean => ModelIsometry::LatticeTranslation([0.0, 0.0]),
        }
    }

    pub fn model(&self) -> Model {
        match self {
            ModelIsometry::Moebius(_) => Model::HyperbolicDisk,
            ModelIsometry::LatticeTranslation(_) => Model::Euclidean,
        }
    }

    pub fn action(&self) -> Action {
        match *self {
            ModelIsometry::Moebius(m) => {
                let (c, ci) = cayley();
                let mc = [
                    [C::new(m[0][0], 0.0), C::new(m[0][1], 0.0)],
                    [C::new(m[1][0], 0.0), C::new(m[1][1], 0.0)],
                ];
                let d = mul2(&mul2(&c, &mc), &ci);
                Action::Disk { a: d[0][0], b: d[0][1] }
            }
            ModelIsometry::LatticeTranslation(t) => Action::Shift(as_c2(t)),
        }
    }

    pub fn from_action(a: &Action) -> Self {
        match *a {
            Action::Disk { a, b } => {
                let (c, ci) = cayley();
                let d = [[a, b], [b.conj(), a.conj()]];
                let m = mul2(&mul2(&ci, &d), &c);
                ModelIsometry::Moebius([[m[0][0].re, m[0][1].re], [m[1][0].re, m[1][1].re]])
            }
            Action::Shift(t) => ModelIsometry::LatticeTranslation([t.re, t.im]),
        }
    }

    pub fn determinant(&self) -> f64 {
        match self {
            ModelIsometry::Moebius(m) => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ModelIsometry::LatticeTranslation(_) => 1.0,
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            ModelIsometry::Moebius(m) => m[0][0] + m[1][1],
            ModelIsometry::LatticeTranslation(_) => 2.0,
        }
    }

    pub fn compose(&self, other: &ModelIsometry) -> Result<ModelIsometry> {
        match (self, other) {
            (ModelIsometry::Moebius(x), ModelIsometry::Moebius(y)) => {
                let mut r = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        r[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
                    }
                }
                Ok(ModelIsometry::Moebius(r))
            }
            (ModelIsometry::LatticeTranslation(s), ModelIsometry::LatticeTranslation(t)) => {
                Ok(ModelIsometry::LatticeTranslation([s[0] + t[0], s[1] + t[1]]))
            }
            _ => Err(Error::ModelMismatch("composing isometries of different models".into())),
        }
    }

    pub fn inverse(&self) -> ModelIsometry {
        match *self {
            ModelIsometry::Moebius(m) => ModelIsometry::Moebius([[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]),
            ModelIsometry::LatticeTranslation(t) => ModelIsometry::LatticeTranslation([-t[0], -t[1]]),
        }
    }

    pub fn apply(&self, p: &ModelPoint) -> Result<ModelPoint> {
        if p.model != self.model() {
            return Err(Error::ModelMismatch("isometry applied to a point of another model".into()));
        }
        Ok(ModelPoint::from_complex(p.model, self.action().apply(p.z())))
    }

    pub fn push(&self, v: &TangentVec) -> Result<TangentVec> {
        let base = self.apply(&v.base)?;
        let d = self.action().deriv(v.base.z()) * v.z();
        Ok(TangentVec::new(base, [d.re, d.im]))
    }
}

/// Disk rotation z ↦ e^{iθ} z.
pub fn disk_rotation(theta: f64) -> Action {
    Action::Disk { a: C::from_polar(1.0, theta / 2.0), b: C::new(0.0, 0.0) }
}

/// Hyperbolic translation along the real diameter by signed distance `d`.
pub fn disk_translation(d: f64) -> Action {
    Action::Disk { a: C::new((d / 2.0).cosh(), 0.0), b: C::new((d / 2.0).sinh(), 0.0) }
}

/// Disk isometry moving `p` to the origin: z ↦ (z - p) / (1 - conj(p) z).
pub fn disk_centering(p: C) -> Action {
    let s = 1.0 / one_minus_norm_sqr(p).sqrt();
    Action::Disk { a: C::new(s, 0.0), b: -p * s }
}
