//! Harmonic maps and energies on a small grid of the family disk.

use std::fmt::Write as _;

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{ConformalStructure, DiskFamily};
use crate::error::{Error, Result};
use crate::harmonic::{solve_harmonic, EquivariantMap, HarmonicProblem, SolverOptions, SolverReport};
use crate::hypgeom::Model;
use crate::surface::LabeledMesh;
use crate::target::TargetManifold;

/// Offsets in units of `h`: `[i, j]` is the parameter `(i + i j) h`.
pub const STENCIL_OFFSETS: [[i32; 2]; 13] = [
    [0, 0],
    [1, 0],
    [-1, 0],
    [0, 1],
    [0, -1],
    [1, 1],
    [1, -1],
    [-1, 1],
    [-1, -1],
    [2, 0],
    [-2, 0],
    [0, 2],
    [0, -2],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StencilNode {
    pub offset: [i32; 2],
    pub u: C,
    pub structure: ConformalStructure,
    pub map: EquivariantMap,
    pub energy: f64,
    /// Energy of the centre map under this node's structure.
    pub frozen_energy: f64,
    pub report: SolverReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StencilGrid {
    pub h: f64,
    /// Centre first, then the remaining offsets in `STENCIL_OFFSETS` order.
    pub nodes: Vec<StencilNode>,
}

impl StencilGrid {
    pub fn node(&self, i: i32, j: i32) -> Result<&StencilNode> {
        self.nodes
            .iter()
            .find(|n| n.offset == [i, j])
            .ok_or_else(|| Error::Invalid(format!("stencil node [{i}, {j}] missing")))
    }

    pub fn center(&self) -> &StencilNode {
        &self.nodes[0]
    }

    pub fn energy(&self, i: i32, j: i32) -> Result<f64> {
        Ok(self.node(i, j)?.energy)
    }

    /// `u, E(u)` rows for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,t,energy,frozen_energy,iterations,grad_norm\n");
        for n in &self.nodes {
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{},{:.3e}",
                n.u.re, n.u.im, n.energy, n.frozen_energy, n.report.iterations, n.report.grad_norm
            );
        }
        out
    }
}

/// Removes the mean displacement from `center` on flat factors, where the
/// harmonic map is only defined up to translation.
fn fix_translation_gauge(models: &[Model], map: &mut EquivariantMap, center: &EquivariantMap) {
    let nf = map.factors;
    let nv = map.num_vertices() as f64;
    for (k, m) in models.iter().enumerate() {
        if *m != Model::Euclidean {
            continue;
        }
        let shift: C = map.points.iter().zip(&center.points).skip(k).step_by(nf).map(|(a, b)| a - b).sum::<C>() / nv;
        for p in map.points.iter_mut().skip(k).step_by(nf) {
            *p -= shift;
        }
    }
}

/// Solves for the harmonic map at every stencil node.
///
/// The centre is solved from `f0`; every other node starts from the centre
/// solution and is polished to the same tolerance. Nodes after the centre are
/// independent and run concurrently.
pub fn energy_stencil(
    fam: &DiskFamily,
    lm: &LabeledMesh,
    target: &TargetManifold,
    f0: &EquivariantMap,
    h: f64,
    opts: &SolverOptions,
) -> Result<StencilGrid> {
    if !(h > 0.0) || 2.0 * h > fam.radius {
        return Err(Error::OutsideDisk { at: 2.0 * h, radius: fam.radius });
    }
    let base = HarmonicProblem::new(lm, &fam.base, target).map_err(|e| Error::StencilNode {
        node: [0, 0],
        source: Box::new(e),
        partial: None,
    })?;
    let (center_map, report) = solve_harmonic(&base, f0, opts).map_err(|e| Error::StencilNode {
        node: [0, 0],
        source: Box::new(e),
        partial: None,
    })?;
    let center = StencilNode {
        offset: [0, 0],
        u: C::new(0.0, 0.0),
        structure: fam.base.clone(),
        energy: report.energy,
        frozen_energy: report.energy,
        map: center_map,
        report,
    };
    let solve_node = |offset: [i32; 2]| -> Result<StencilNode> {
        let u = C::new(offset[0] as f64, offset[1] as f64) * h;
        let structure = fam.family_at(u)?;
        let p = HarmonicProblem::new(lm, &structure, target)?;
        let frozen_energy = p.energy(&center.map);
        let (mut map, report) = solve_harmonic(&p, &center.map, opts)?;
        fix_translation_gauge(&p.models, &mut map, &center.map);
        Ok(StencilNode { offset, u, structure, energy: p.energy(&map), frozen_energy, map, report })
    };
    let results: Vec<Result<StencilNode>> = STENCIL_OFFSETS[1..].par_iter().map(|&o| solve_node(o)).collect();
    let mut nodes = vec![center];
    let mut failure = None;
    for (r, o) in results.into_iter().zip(&STENCIL_OFFSETS[1..]) {
        match r {
            Ok(n) => nodes.push(n),
            Err(e) if failure.is_none() => failure = Some((*o, e)),
            Err(_) => {}
        }
    }
    let grid = StencilGrid { h, nodes };
    match failure {
        None => Ok(grid),
        Some((node, e)) => Err(Error::StencilNode { node, source: Box::new(e), partial: Some(Box::new(grid)) }),
    }
}

fn five_point(g: &StencilGrid, k: i32, pick: impl Fn(&StencilNode) -> f64) -> Result<f64> {
    let h = k as f64 * g.h;
    let c = pick(g.node(0, 0)?);
    let s = pick(g.node(k, 0)?) + pick(g.node(-k, 0)?) + pick(g.node(0, k)?) + pick(g.node(0, -k)?);
    Ok((s - 4.0 * c) / (h * h))
}

/// Five-point Laplacian of `E` at the centre with spacing `h`.
pub fn laplacian_e(g: &StencilGrid) -> Result<f64> {
    five_point(g, 1, |n| n.energy)
}

/// Laplacian from spacings `h` and `2h`, Richardson-combined, and the size of
/// the correction.
pub fn laplacian_e_extrapolated(g: &StencilGrid) -> Result<(f64, f64)> {
    let fine = five_point(g, 1, |n| n.energy)?;
    let coarse = five_point(g, 2, |n| n.energy)?;
    Ok(((4.0 * fine - coarse) / 3.0, (fine - coarse).abs() / 3.0))
}

/// Laplacian of the frozen-map energy, Richardson-combined.
pub fn laplacian_frozen(g: &StencilGrid) -> Result<f64> {
    let fine = five_point(g, 1, |n| n.frozen_energy)?;
    let coarse = five_point(g, 2, |n| n.frozen_energy)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `(∂E/∂s, ∂E/∂t)` at the centre, fourth-order central differences.
pub fn gradient_e(g: &StencilGrid) -> Result<(f64, f64)> {
    let d = |a: [i32; 2]| -> Result<f64> {
        let e1 = g.energy(a[0], a[1])? - g.energy(-a[0], -a[1])?;
        let e2 = g.energy(2 * a[0], 2 * a[1])? - g.energy(-2 * a[0], -2 * a[1])?;
        Ok((8.0 * e1 - e2) / (12.0 * g.h))
    };
    Ok((d([1, 0])?, d([0, 1])?))
}

/// Second derivative in one direction (`[1, 0]` for s, `[0, 1]` for t),
/// Richardson-combined, of the quantity chosen by `pick`.
pub fn second_derivative(g: &StencilGrid, dir: [i32; 2], pick: impl Fn(&StencilNode) -> f64) -> Result<f64> {
    let c = pick(g.node(0, 0)?);
    let at = |k: i32| -> Result<f64> {
        let h = k as f64 * g.h;
        Ok((pick(g.node(k * dir[0], k * dir[1])?) + pick(g.node(-k * dir[0], -k * dir[1])?) - 2.0 * c) / (h * h))
    };
    let fine = at(1)?;
    let coarse = at(2)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(h: f64, f: impl Fn(C) -> f64) -> StencilGrid {
        let report = SolverReport {
            method: crate::harmonic::Method::Cg,
            iterations: 0,
            converged: true,
            energy: 0.0,
            grad_norm: 0.0,
            energy_trace: vec![],
        };
        let nodes = STENCIL_OFFSETS
            .iter()
            .map(|&o| {
                let u = C::new(o[0] as f64, o[1] as f64) * h;
                StencilNode {
                    offset: o,
                    u,
                    structure: ConformalStructure { shapes: vec![] },
                    map: EquivariantMap { factors: 1, points: vec![] },
                    energy: f(u),
                    frozen_energy: f(u),
                    report: report.clone(),
                }
            })
            .collect();
        StencilGrid { h, nodes }
    }

    #[test]
    fn stencil_is_exact_on_quadratics() {
        let g = synthetic(0.1, |u| u.norm_sqr());
        assert!((laplacian_e(&g).unwrap() - 4.0).abs() < 1e-12);
        assert!((laplacian_e_extrapolated(&g).unwrap().0 - 4.0).abs() < 1e-12);
        let g = synthetic(0.1, |_| 3.0);
        assert_eq!(laplacian_e(&g).unwrap(), 0.0);
        let g = synthetic(0.05, |u| 2.0 * u.re - u.im + u.re * u.re);
        let (s, t) = gradient_e(&g).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && (t + 1.0).abs() < 1e-12);
        assert!((second_derivative(&g, [1, 0], |n| n.energy).unwrap() - 2.0).abs() < 1e-10);
    }
}
