//! Conformal structures as per-face triangle shapes, Beltrami directions,
//! holomorphic disk families and cotangent weights.
//!
//! Every face carries a chart in which its corners sit at `0, 1, p` with
//! `Im p > 0`. Structure endomorphisms of a family member are expressed in the
//! base structure's face charts.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypgeom::{disk_centering, Action, Model};
use crate::surface::{self, octagon, LabeledMesh, RefinementMap, VertexOrigin, Word};

pub type Mat2 = [[f64; 2]; 2];

const QUALITY_FLOOR: f64 = 1e-6;

/// Base lifts of the vertices in a model chart together with the deck group
/// action of the domain surface.
#[derive(Debug, Clone)]
pub struct DomainEmbedding {
    pub model: Model,
    pub positions: Vec<C>,
    pub generators: Vec<Action>,
}

impl DomainEmbedding {
    /// Square-grid torus with lattice `(1, tau)`.
    pub fn torus(n: usize, tau: C) -> Result<Self> {
        if tau.im <= 0.0 {
            return Err(Error::Invalid("torus modulus must have positive imaginary part".into()));
        }
        let mut positions = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                positions.push((C::new(i as f64, 0.0) + tau * j as f64) / n as f64);
            }
        }
        Ok(DomainEmbedding {
            model: Model::Euclidean,
            positions,
            generators: vec![Action::Shift(C::new(1.0, 0.0)), Action::Shift(tau)],
        })
    }

    /// Fan of the regular octagon: center and corner 0.
    pub fn octagon_fan() -> Self {
        DomainEmbedding {
            model: Model::HyperbolicDisk,
            positions: vec![C::new(0.0, 0.0), octagon::corner(0)],
            generators: octagon::generator_actions().to_vec(),
        }
    }

    pub fn word_action(&self, w: &Word) -> Action {
        octagon::word_action(&self.generators, w, self.model)
    }

    /// Corner positions of face `f`, all seen from the frame of corner 0.
    pub fn face_positions(&self, lm: &LabeledMesh, f: usize) -> [C; 3] {
        let [v0, v1, v2] = lm.mesh.faces[f];
        let g0 = self.word_action(lm.labels.get(3 * f));
        let g1 = g0.compose(&self.word_action(lm.labels.get(3 * f + 1)));
        [self.positions[v0], g0.apply(self.positions[v1]), g1.apply(self.positions[v2])]
    }

    /// Embedding of the refined mesh; new vertices sit at geodesic midpoints.
    pub fn refine(&self, r: &RefinementMap) -> Self {
        let lm = &r.parent;
        let positions = r
            .provenance
            .iter()
            .map(|o| match *o {
                VertexOrigin::Old(v) => self.positions[v],
                VertexOrigin::Midpoint(h) => {
                    let a = self.positions[lm.mesh.origin(h)];
                    let b = self.word_action(lm.labels.get(h)).apply(self.positions[lm.mesh.dest(h)]);
                    self.model.geodesic(a, b, 0.5)
                }
            })
            .collect();
        DomainEmbedding { model: self.model, positions, generators: self.generators.clone() }
    }

    /// Shapes induced by the model metric: Euclidean faces keep their chart
    /// shape, hyperbolic faces become the Euclidean triangle with the same
    /// geodesic side lengths.
    pub fn structure(&self, lm: &LabeledMesh) -> Result<ConformalStructure> {
        let shapes = (0..lm.mesh.num_faces())
            .map(|f| {
                let x = self.face_positions(lm, f);
                match self.model {
                    Model::Euclidean => Ok((x[2] - x[0]) / (x[1] - x[0])),
                    Model::HyperbolicDisk => {
                        let m = self.model;
                        shape_from_lengths(m.dist(x[0], x[1]), m.dist(x[1], x[2]), m.dist(x[2], x[0]))
                            .ok_or(Error::DegenerateFace { face: f, quality: 0.0 })
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let c = ConformalStructure { shapes };
        c.check_quality()?;
        Ok(c)
    }

    /// Direction of the edge from corner 0 to corner 1 of face `f` in a chart
    /// centred at the face; converts chart Beltrami coefficients to face charts.
    pub fn face_frame(&self, lm: &LabeledMesh, f: usize) -> (C, C) {
        let x = self.face_positions(lm, f);
        match self.model {
            Model::Euclidean => ((x[0] + x[1] + x[2]) / 3.0, x[1] - x[0]),
            Model::HyperbolicDisk => {
                let centre = approx_centroid(self.model, &x);
                let t = disk_centering(centre);
                (centre, t.apply(x[1]) - t.apply(x[0]))
            }
        }
    }
}

/// Karcher mean of three nearby points, two fixed-point sweeps.
pub fn approx_centroid(m: Model, x: &[C; 3]) -> C {
    let mut c = x[0];
    for _ in 0..3 {
        let v = (m.log(c, x[0]) + m.log(c, x[1]) + m.log(c, x[2])) / 3.0;
        c = m.exp(c, v);
    }
    c
}

/// Apex of the triangle with side lengths `l01, l12, l20`, scaled so that
/// corner 1 sits at 1.
pub fn shape_from_lengths(l01: f64, l12: f64, l20: f64) -> Option<C> {
    let a = l20 / l01;
    let b = l12 / l01;
    let x = (1.0 + a * a - b * b) / 2.0;
    let y2 = a * a - x * x;
    if !(y2 > 0.0) {
        return None;
    }
    Some(C::new(x, y2.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalStructure {
    /// Apex `p` of each face; corners are `0, 1, p`.
    pub shapes: Vec<C>,
}

/// inradius / circumradius of the triangle `0, 1, p`.
pub fn triangle_quality(p: C) -> f64 {
    let a = 1.0;
    let b = p.norm();
    let c = (p - 1.0).norm();
    let area = p.im / 2.0;
    if area <= 0.0 {
        return 0.0;
    }
    8.0 * area * area / (a * b * c * (a + b + c))
}

impl ConformalStructure {
    pub fn num_faces(&self) -> usize {
        self.shapes.len()
    }

    pub fn check_quality(&self) -> Result<()> {
        for (f, &p) in self.shapes.iter().enumerate() {
            let q = triangle_quality(p);
            if !(q >= QUALITY_FLOOR) {
                return Err(Error::DegenerateFace { face: f, quality: q });
            }
        }
        Ok(())
    }

    /// Cotangents of the angles at corners 0, 1, 2 of face `f`.
    pub fn cotangents(&self, f: usize) -> [f64; 3] {
        corner_cotangents(self.shapes[f])
    }

    /// Area of face `f` in its normalized chart.
    pub fn chart_area(&self, f: usize) -> f64 {
        self.shapes[f].im / 2.0
    }
}

pub fn corner_cotangents(p: C) -> [f64; 3] {
    let pts = [C::new(0.0, 0.0), C::new(1.0, 0.0), p];
    let mut out = [0.0; 3];
    for k in 0..3 {
        let u = pts[(k + 1) % 3] - pts[k];
        let v = pts[(k + 2) % 3] - pts[k];
        let cross = (u.conj() * v).im;
        out[k] = (u.re * v.re + u.im * v.im) / cross;
    }
    out
}

/// Real-linear map `z ↦ alpha z + beta conj(z)` as a matrix.
pub fn real_linear(alpha: C, beta: C) -> Mat2 {
    [
        [alpha.re + beta.re, -alpha.im + beta.im],
        [alpha.im + beta.im, alpha.re - beta.re],
    ]
}

/// Inverse of `real_linear`: `A v = alpha v + beta conj(v)`.
pub fn complex_parts(a: &Mat2) -> (C, C) {
    let alpha = C::new(0.5 * (a[0][0] + a[1][1]), 0.5 * (a[1][0] - a[0][1]));
    let beta = C::new(0.5 * (a[0][0] - a[1][1]), 0.5 * (a[1][0] + a[0][1]));
    (alpha, beta)
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

pub fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

pub fn mat_scale(a: &Mat2, s: f64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

pub fn frobenius(a: &Mat2) -> f64 {
    (a[0][0].powi(2) + a[0][1].powi(2) + a[1][0].powi(2) + a[1][1].powi(2)).sqrt()
}

/// Per-face Beltrami coefficient in the face chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeltramiField {
    pub mu: Vec<C>,
}

/// How a Beltrami direction is generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BeltramiSpec {
    Zero,
    /// Smooth pseudo-random field with sup-norm at most `amplitude`.
    Random { seed: u64, amplitude: f64 },
    /// The same coefficient everywhere in the global flat chart (torus only).
    ChartConstant { re: f64, im: f64 },
    /// Explicit per-face values (tied to one mesh).
    PerFace(Vec<C>),
}

impl BeltramiSpec {
    /// `random:<seed>:<amp>`, `zero`, `const:<re>:<im>`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.parse::<f64>().map_err(|e| Error::Parse(format!("{t:?}: {e}")));
        match parts.as_slice() {
            ["zero"] => Ok(BeltramiSpec::Zero),
            ["random", seed, amp] => Ok(BeltramiSpec::Random {
                seed: seed.parse().map_err(|e| Error::Parse(format!("{seed:?}: {e}")))?,
                amplitude: num(amp)?,
            }),
            ["const", re, im] => Ok(BeltramiSpec::ChartConstant { re: num(re)?, im: num(im)? }),
            _ => Err(Error::Parse(format!("unrecognized Beltrami spec {s:?}"))),
        }
    }
}

impl BeltramiField {
    pub fn zero(faces: usize) -> Self {
        BeltramiField { mu: vec![C::new(0.0, 0.0); faces] }
    }

    pub fn max_abs(&self) -> f64 {
        self.mu.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: C) -> Self {
        BeltramiField { mu: self.mu.iter().map(|m| m * s).collect() }
    }

    /// Evaluates a chart-level field at face frames.
    fn from_chart_field<F>(emb: &DomainEmbedding, lm: &LabeledMesh, field: F) -> Self
    where
        F: Fn(C) -> C + Sync,
    {
        let mu = (0..lm.mesh.num_faces())
            .into_par_iter()
            .map(|f| {
                let (centre, dir) = emb.face_frame(lm, f);
                let m = match emb.model {
                    Model::Euclidean => field(centre),
                    Model::HyperbolicDisk => {
                        // chart coefficient at the centroid, pulled back from the
                        // fundamental domain copy, then read in the centred chart
                        let (z, g) = octagon::reduce_to_domain(centre);
                        let d = g.deriv(centre);
                        let t = disk_centering(centre).deriv(centre);
                        field(z) * (d.conj() / d) * (t / t.conj())
                    }
                };
                m * dir.conj() / dir
            })
            .collect();
        BeltramiField { mu }
    }

    pub fn from_spec(spec: &BeltramiSpec, emb: &DomainEmbedding, lm: &LabeledMesh) -> Result<Self> {
        let nf = lm.mesh.num_faces();
        let field = match spec {
            BeltramiSpec::Zero => BeltramiField::zero(nf),
            BeltramiSpec::PerFace(v) => {
                if v.len() != nf {
                    return Err(Error::Invalid(format!("Beltrami field has {} faces, mesh has {nf}", v.len())));
                }
                BeltramiField { mu: v.clone() }
            }
            BeltramiSpec::ChartConstant { re, im } => {
                if emb.model != Model::Euclidean {
                    return Err(Error::Invalid("chart-constant Beltrami fields need a flat domain".into()));
                }
                let m = C::new(*re, *im);
                Self::from_chart_field(emb, lm, |_| m)
            }
            BeltramiSpec::Random { seed, amplitude } => match emb.model {
                Model::Euclidean => {
                    let f = SmoothTorusField::new(*seed, *amplitude, emb.generators[1].apply(C::new(0.0, 0.0)));
                    Self::from_chart_field(emb, lm, |z| f.eval(z))
                }
                Model::HyperbolicDisk => {
                    let f = BumpField::new(*seed, *amplitude);
                    Self::from_chart_field(emb, lm, |z| f.eval(z))
                }
            },
        };
        if !(field.max_abs() < 1.0) {
            return Err(Error::Invalid(format!("Beltrami sup-norm {} is not below 1", field.max_abs())));
        }
        Ok(field)
    }
}

/// Low-frequency trigonometric polynomial on the torus `C / (Z + tau Z)`.
struct SmoothTorusField {
    tau: C,
    modes: Vec<([i32; 2], C)>,
}

impl SmoothTorusField {
    fn new(seed: u64, amplitude: f64, tau: C) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ks = [[0, 0], [1, 0], [0, 1], [1, 1], [1, -1]];
        let mut modes: Vec<([i32; 2], C)> = ks
            .iter()
            .map(|&k| (k, C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        let total: f64 = modes.iter().map(|m| m.1.norm()).sum();
        for m in &mut modes {
            m.1 *= amplitude / total;
        }
        SmoothTorusField { tau, modes }
    }

    fn eval(&self, z: C) -> C {
        let y = z.im / self.tau.im;
        let x = z.re - y * self.tau.re;
        self.modes
            .iter()
            .map(|(k, c)| c * C::from_polar(1.0, 2.0 * PI * (k[0] as f64 * x + k[1] as f64 * y)))
            .sum()
    }
}

/// Sum of smooth bumps supported inside the octagon.
struct BumpField {
    bumps: Vec<(C, f64, C)>,
}

impl BumpField {
    fn new(seed: u64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bumps: Vec<(C, f64, C)> = (0..3)
            .map(|_| {
                let r = rng.gen_range(0.0..0.4f64);
                let centre = C::from_polar((r / 2.0).tanh(), rng.gen_range(0.0..2.0 * PI));
                let radius = rng.gen_range(0.7..1.05);
                let w = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                (centre, radius, w)
            })
            .collect();
        let total: f64 = bumps.iter().map(|b| b.2.norm()).sum();
        for b in &mut bumps {
            b.2 *= amplitude / total;
        }
        BumpField { bumps }
    }

    fn eval(&self, z: C) -> C {
        let m = Model::HyperbolicDisk;
        self.bumps
            .iter()
            .map(|(c, r, w)| {
                let t = m.dist(z, *c) / r;
                if t >= 1.0 {
                    C::new(0.0, 0.0)
                } else {
                    w * (1.0 - 1.0 / (1.0 - t * t)).exp()
                }
            })
            .sum()
    }
}

/// `u ↦ (z ↦ z + nu(u) conj(z))` per face, with `nu(u) = u mu + u^2 kappa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskFamily {
    pub base: ConformalStructure,
    pub direction: BeltramiField,
    pub radius: f64,
    /// Optional second-order term; leaves the first-order data unchanged.
    pub second_order: Option<BeltramiField>,
}

impl DiskFamily {
    pub fn new(base: ConformalStructure, direction: BeltramiField, radius: f64) -> Result<Self> {
        if direction.mu.len() != base.num_faces() {
            return Err(Error::Invalid("Beltrami field and structure have different face counts".into()));
        }
        if !(radius * direction.max_abs() < 1.0) {
            return Err(Error::Invalid(format!(
                "family radius {radius} too large for sup |mu| = {}",
                direction.max_abs()
            )));
        }
        Ok(DiskFamily { base, direction, radius, second_order: None })
    }

    /// Largest radius with `radius · max|mu| = margin`.
    pub fn with_margin(base: ConformalStructure, direction: BeltramiField, margin: f64) -> Result<Self> {
        let m = direction.max_abs();
        let r = if m > 0.0 { margin / m } else { 1.0 };
        Self::new(base, direction, r)
    }

    pub fn with_second_order(mut self, kappa: BeltramiField) -> Self {
        self.second_order = Some(kappa);
        self
    }

    fn nu(&self, f: usize, u: C) -> C {
        let mut n = u * self.direction.mu[f];
        if let Some(k) = &self.second_order {
            n += u * u * k.mu[f];
        }
        n
    }

    fn check(&self, u: C) -> Result<()> {
        if u.norm() > self.radius * (1.0 + 1e-12) {
            return Err(Error::OutsideDisk { at: u.norm(), radius: self.radius });
        }
        Ok(())
    }

    pub fn family_at(&self, u: C) -> Result<ConformalStructure> {
        self.check(u)?;
        if u == C::new(0.0, 0.0) {
            return Ok(self.base.clone());
        }
        let shapes = (0..self.base.num_faces())
            .map(|f| {
                let nu = self.nu(f, u);
                if nu.norm() >= 1.0 {
                    return Err(Error::DegenerateStructure(nu.norm()));
                }
                let p = self.base.shapes[f];
                let one = C::new(1.0, 0.0) + nu;
                Ok((p + nu * p.conj()) / one)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ConformalStructure { shapes })
    }

    /// J at parameter `u` in the base face charts.
    pub fn j_at(&self, u: C) -> Result<StructureEndo> {
        let c = self.family_at(u)?;
        Ok(endo_j_relative(&c, &self.base))
    }
}

/// Per-face real 2x2 endomorphisms in face charts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureEndo {
    pub mats: Vec<Mat2>,
}

impl StructureEndo {
    pub fn max_distance(&self, other: &StructureEndo) -> f64 {
        self.mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| frobenius(&mat_sub(a, b)))
            .fold(0.0, f64::max)
    }
}

/// The structure of `c` in its own face charts: rotation by +90°.
pub fn endo_j(c: &ConformalStructure) -> Result<StructureEndo> {
    c.check_quality()?;
    Ok(endo_j_relative(c, c))
}

/// The structure of `c` expressed in the face charts of `reference`:
/// `A^{-1} i A` with `A` the real-linear map taking reference shapes to `c`.
pub fn endo_j_relative(c: &ConformalStructure, reference: &ConformalStructure) -> StructureEndo {
    let mats = c
        .shapes
        .iter()
        .zip(&reference.shapes)
        .map(|(&q, &p)| {
            let alpha = (q - p.conj()) / (p - p.conj());
            let beta = C::new(1.0, 0.0) - alpha;
            let a = real_linear(alpha, beta);
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            let ainv = [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]];
            let rot = [[0.0, -1.0], [1.0, 0.0]];
            mat_mul(&ainv, &mat_mul(&rot, &a))
        })
        .collect();
    StructureEndo { mats }
}

/// H = ∂J/∂s at u = 0 and its calibration `m_f = s · mu_f`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Calibration {
    pub h: StructureEndo,
    /// Measured `m_f`, the conjugate-linear part of H per face.
    pub m: Vec<C>,
    /// Least-squares constant in `m = s mu`.
    pub s: C,
    /// max_f |m_f - s mu_f| / max_f |s mu_f|
    pub spread: f64,
}

/// Finite-difference H (Richardson-extrapolated central differences) and its
/// calibration against the Beltrami coefficients.
pub fn endo_h(fam: &DiskFamily) -> Result<Calibration> {
    let nf = fam.base.num_faces();
    let mmax = fam.direction.max_abs();
    if mmax == 0.0 {
        let zero = [[0.0; 2]; 2];
        return Ok(Calibration {
            h: StructureEndo { mats: vec![zero; nf] },
            m: vec![C::new(0.0, 0.0); nf],
            s: C::new(0.0, 0.0),
            spread: 0.0,
        });
    }
    let d = (1e-3 / mmax).min(fam.radius / 2.0);
    let diff = |step: f64| -> Result<Vec<Mat2>> {
        let p = fam.j_at(C::new(step, 0.0))?;
        let q = fam.j_at(C::new(-step, 0.0))?;
        Ok(p.mats.iter().zip(&q.mats).map(|(a, b)| mat_scale(&mat_sub(a, b), 0.5 / step)).collect())
    };
    let coarse = diff(d)?;
    let fine = diff(d / 2.0)?;
    let mats: Vec<Mat2> = fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| mat_sub(&mat_scale(f, 4.0 / 3.0), &mat_scale(c, 1.0 / 3.0)))
        .collect();
    let m: Vec<C> = mats.iter().map(|a| complex_parts(a).1).collect();
    let mut num = C::new(0.0, 0.0);
    let mut den = 0.0;
    for (mf, mu) in m.iter().zip(&fam.direction.mu) {
        num += mu.conj() * mf;
        den += mu.norm_sqr();
    }
    let s = num / den;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (mf, mu) in m.iter().zip(&fam.direction.mu) {
        worst = worst.max((mf - s * mu).norm());
        scale = scale.max((s * mu).norm());
    }
    Ok(Calibration { h: StructureEndo { mats }, m, s, spread: worst / scale })
}

/// max_f ‖∂J/∂t − J ∂J/∂s‖ by central differences at `u`.
pub fn verify_cr(fam: &DiskFamily, u: C, h: f64) -> Result<f64> {
    let r = u.norm() + h;
    if r > fam.radius {
        return Err(Error::OutsideDisk { at: r, radius: fam.radius });
    }
    let j = fam.j_at(u)?;
    let sp = fam.j_at(u + h)?;
    let sm = fam.j_at(u - h)?;
    let tp = fam.j_at(u + C::new(0.0, h))?;
    let tm = fam.j_at(u - C::new(0.0, h))?;
    let mut worst: f64 = 0.0;
    for f in 0..j.mats.len() {
        let js = mat_scale(&mat_sub(&sp.mats[f], &sm.mats[f]), 0.5 / h);
        let jt = mat_scale(&mat_sub(&tp.mats[f], &tm.mats[f]), 0.5 / h);
        worst = worst.max(frobenius(&mat_sub(&jt, &mat_mul(&j.mats[f], &js))));
    }
    Ok(worst)
}

/// max_f ‖ΔJ − 2 J H²‖ with the five-point Laplacian at u = 0.
pub fn verify_laplacian_j(fam: &DiskFamily, h: f64) -> Result<f64> {
    if h > fam.radius {
        return Err(Error::OutsideDisk { at: h, radius: fam.radius });
    }
    let cal = endo_h(fam)?;
    let j0 = fam.j_at(C::new(0.0, 0.0))?;
    let nodes = [C::new(h, 0.0), C::new(-h, 0.0), C::new(0.0, h), C::new(0.0, -h)];
    let around: Vec<StructureEndo> = nodes.iter().map(|&u| fam.j_at(u)).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for f in 0..j0.mats.len() {
        let mut lap = mat_scale(&j0.mats[f], -4.0);
        for a in &around {
            lap = [
                [lap[0][0] + a.mats[f][0][0], lap[0][1] + a.mats[f][0][1]],
                [lap[1][0] + a.mats[f][1][0], lap[1][1] + a.mats[f][1][1]],
            ];
        }
        let lap = mat_scale(&lap, 1.0 / (h * h));
        let hh = mat_mul(&cal.h.mats[f], &cal.h.mats[f]);
        let rhs = mat_scale(&mat_mul(&j0.mats[f], &hh), 2.0);
        worst = worst.max(frobenius(&mat_sub(&lap, &rhs)));
    }
    Ok(worst)
}

/// Per-edge weights `½(cot α + cot β)`, stored per halfedge (twins agree).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotanWeights {
    pub w: Vec<f64>,
}

impl CotanWeights {
    pub fn negative_count(&self) -> usize {
        self.w.iter().filter(|&&x| x < 0.0).count() / 2
    }
}

pub fn cotan_weights(c: &ConformalStructure, lm: &LabeledMesh) -> Result<CotanWeights> {
    if c.num_faces() != lm.mesh.num_faces() {
        return Err(Error::Invalid("structure and mesh face counts differ".into()));
    }
    c.check_quality()?;
    let m = &lm.mesh;
    let half: Vec<f64> = (0..m.num_halfedges())
        .map(|h| 0.5 * c.cotangents(h / 3)[surface::HalfEdgeMesh::opposite_corner(h)])
        .collect();
    let w = (0..m.num_halfedges()).map(|h| half[h] + half[m.twin[h]]).collect();
    Ok(CotanWeights { w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn equilateral() -> C {
        C::from_polar(1.0, PI / 3.0)
    }

    #[test]
    fn shear_matches_vertex_images() {
        let base = ConformalStructure { shapes: vec![equilateral()] };
        let dir = BeltramiField { mu: vec![C::new(1.0, 0.0)] };
        let fam = DiskFamily::new(base, dir, 0.5).unwrap();
        let c = fam.family_at(C::new(0.2, 0.0)).unwrap();
        let map = |z: C| z + 0.2 * z.conj();
        let (a, b, p) = (map(C::new(0.0, 0.0)), map(C::new(1.0, 0.0)), map(equilateral()));
        let expect = (p - a) / (b - a);
        assert_abs_diff_eq!((c.shapes[0] - expect).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(fam.family_at(C::new(0.0, 0.0)).unwrap(), fam.base);
    }

    #[test]
    fn j_is_rotation_in_own_chart() {
        let c = ConformalStructure { shapes: vec![C::new(0.3, 0.8)] };
        let j = endo_j(&c).unwrap();
        let m = j.mats[0];
        assert_abs_diff_eq!(m[0][0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m[0][1], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m[1][0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m[1][1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn cotan_examples() {
        let lm = surface::build_torus(3).unwrap();
        let eq = ConformalStructure { shapes: vec![equilateral(); lm.mesh.num_faces()] };
        let w = cotan_weights(&eq, &lm).unwrap();
        for &x in &w.w {
            assert_abs_diff_eq!(x, 1.0 / 3f64.sqrt(), epsilon = 1e-14);
        }
        let q = corner_cotangents(C::new(0.0, 1.0));
        assert_abs_diff_eq!(q[0], 0.0, epsilon = 1e-15);
        // similarity invariance: cotangents depend only on the normalized shape
        let p = C::new(0.4, 0.7);
        let scaled = (p * 7.0) / 7.0;
        assert_eq!(corner_cotangents(p), corner_cotangents(scaled));
    }

    #[test]
    fn degenerate_face_rejected() {
        let c = ConformalStructure { shapes: vec![C::new(0.5, 1e-9)] };
        assert!(matches!(c.check_quality(), Err(Error::DegenerateFace { .. })));
    }

    #[test]
    fn shape_from_lengths_equilateral() {
        let p = shape_from_lengths(2.0, 2.0, 2.0).unwrap();
        assert_abs_diff_eq!((p - equilateral()).norm(), 0.0, epsilon = 1e-15);
        assert!(shape_from_lengths(1.0, 3.0, 1.0).is_none());
    }

    #[test]
    fn real_linear_round_trip() {
        let (a, b) = (C::new(0.3, -1.1), C::new(0.7, 0.2));
        let m = real_linear(a, b);
        let v = C::new(0.9, -0.4);
        let mv = C::new(m[0][0] * v.re + m[0][1] * v.im, m[1][0] * v.re + m[1][1] * v.im);
        assert_abs_diff_eq!((mv - (a * v + b * v.conj())).norm(), 0.0, epsilon = 1e-15);
        let (a2, b2) = complex_parts(&m);
        assert_abs_diff_eq!((a2 - a).norm() + (b2 - b).norm(), 0.0, epsilon = 1e-15);
    }
}
