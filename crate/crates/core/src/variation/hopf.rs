//! Hopf differential and the first variation of the energy.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::face::{bilinear, face_jets, FaceJet, FaceLifts};
use super::stencil::{gradient_e, StencilGrid};
use crate::conformal::{BeltramiField, ConformalStructure};
use crate::error::{Error, Result};
use crate::harmonic::EquivariantMap;
use crate::surface::LabeledMesh;
use crate::target::TargetManifold;

/// `Q_f = <f_z, f_z>` per face, in the face chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfDifferential {
    pub q: Vec<C>,
    pub area: Vec<f64>,
}

impl HopfDifferential {
    /// `∫ |Q|`, independent of the face chart scaling.
    pub fn l1_norm(&self) -> f64 {
        self.q.iter().zip(&self.area).map(|(q, a)| q.norm() * a).sum()
    }

    /// `∫ mu Q` with per-face quadrature.
    pub fn pair(&self, mu: &BeltramiField) -> C {
        self.q.iter().zip(&self.area).zip(&mu.mu).map(|((q, a), m)| q * m * *a).sum()
    }
}

pub(crate) fn hopf_from_jets(jets: &[FaceJet]) -> HopfDifferential {
    HopfDifferential { q: jets.iter().map(|j| j.metric_q).collect(), area: jets.iter().map(|j| j.area).collect() }
}

/// `Q` per face from the image side lengths.
pub fn hopf(lm: &LabeledMesh, c: &ConformalStructure, f: &EquivariantMap, target: &TargetManifold) -> HopfDifferential {
    let lifts = FaceLifts::new(lm, target);
    hopf_from_jets(&face_jets(&lifts, c, target, f))
}

/// `Q` per face from the affine differential in the barycentric frame.
pub fn hopf_affine(lm: &LabeledMesh, c: &ConformalStructure, f: &EquivariantMap, target: &TargetManifold) -> HopfDifferential {
    let lifts = FaceLifts::new(lm, target);
    let jets = face_jets(&lifts, c, target, f);
    let q = jets
        .iter()
        .map(|j| j.fz().iter().zip(&target.factors).map(|(fz, t)| bilinear(t.model, fz, fz)).sum())
        .collect();
    HopfDifferential { q, area: jets.iter().map(|j| j.area).collect() }
}

/// Discrete ∂̄ residual of `Q`: jumps across edges after moving the
/// neighbour's value into the face chart, weighted by the adjacent areas.
pub fn dbar_residual(lm: &LabeledMesh, c: &ConformalStructure, q: &HopfDifferential) -> f64 {
    let m = &lm.mesh;
    let corner = |f: usize, k: usize| -> C {
        match k % 3 {
            0 => C::new(0.0, 0.0),
            1 => C::new(1.0, 0.0),
            _ => c.shapes[f],
        }
    };
    m.primary_halfedges()
        .into_iter()
        .map(|h| {
            let t = m.twin[h];
            let (f, g) = (h / 3, t / 3);
            let (k, l) = (h % 3, t % 3);
            // the edge runs k -> k+1 in f and l -> l+1 in g, reversed
            let a = (corner(f, k) - corner(f, k + 1)) / (corner(g, l + 1) - corner(g, l));
            let jump = (q.q[f] - q.q[g] / (a * a)).norm();
            jump * (q.area[f] + a.norm_sqr() * q.area[g]) / 3.0
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstVariation {
    pub de_ds: f64,
    pub de_dt: f64,
    pub pairing: C,
    /// Fitted `c` in `dE(mu) = c Re ∫ mu Q`; `None` when the pairing is at
    /// noise level.
    pub c_est: Option<f64>,
    /// Relative mismatch of the two-component fit.
    pub residual: f64,
}

/// Fits `dE/ds = c Re P`, `dE/dt = -c Im P` with `P = ∫ mu Q`.
pub fn first_variation_check(g: &StencilGrid, q: &HopfDifferential, mu: &BeltramiField) -> Result<FirstVariation> {
    if mu.mu.len() != q.q.len() {
        return Err(Error::Invalid("Beltrami field and Hopf differential differ in size".into()));
    }
    let (de_ds, de_dt) = gradient_e(g)?;
    let pairing = q.pair(mu);
    let scale: f64 = q.q.iter().zip(&q.area).zip(&mu.mu).map(|((x, a), m)| x.norm() * m.norm() * a).sum();
    let floor = 1e-9 * scale.max(f64::MIN_POSITIVE) + 1e-14;
    if pairing.norm() <= floor {
        let residual = 0.0;
        return Ok(FirstVariation { de_ds, de_dt, pairing, c_est: None, residual });
    }
    let c = (de_ds * pairing.re - de_dt * pairing.im) / pairing.norm_sqr();
    let miss = ((de_ds - c * pairing.re).powi(2) + (de_dt + c * pairing.im).powi(2)).sqrt();
    let size = (de_ds * de_ds + de_dt * de_dt).sqrt();
    let residual = if size > 0.0 { miss / size } else { 0.0 };
    Ok(FirstVariation { de_ds, de_dt, pairing, c_est: Some(c), residual })
}
