//! Scenario assembly and the refinement study that turns a ledger into a
//! certificate.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::conformal::{BeltramiField, BeltramiSpec, DiskFamily, DomainEmbedding};
use crate::error::{Error, Result, Stage};
use crate::harmonic::{solve_harmonic, EquivariantMap, HarmonicProblem, IndexMethod, IndexOptions, SolverOptions, SolverReport};
use crate::hypgeom::Model;
use crate::surface::{build_torus, octagon_fan, refine, LabeledMesh};
use crate::target::{octagon_generators, FlatTorusTarget, RepDocument, TargetFactor, TargetManifold};
use crate::variation::{
    energy_stencil, first_variation_check, ledger, second_variation_identity, FirstVariation, LedgerOptions,
    LedgerOutput, PshCertificate, SecondVariation, StencilGrid,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceSpec {
    /// `C / (Z + tau Z)` on an `n · 2^level` square grid.
    Torus { n: usize, tau: [f64; 2] },
    /// Regular octagon surface; level 0 has 32 faces.
    Genus2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpec {
    /// Flat torus with lattice basis `lattice`; generator k acts by the
    /// lattice vector `degree[k]`.
    FlatTorus { lattice: [[f64; 2]; 2], degree: Vec<[i64; 2]> },
    /// The octagon surface itself, identity class.
    Fuchsian,
    /// The octagon surface in the class of a power of the Dehn twist along
    /// the curve of the first generator.
    DehnTwist { power: i32 },
    Product { factors: Vec<TargetSpec> },
    /// Explicit representation.
    Representation(RepDocument),
}

impl TargetSpec {
    fn factors(&self, generators: usize) -> Result<Vec<TargetFactor>> {
        match self {
            TargetSpec::FlatTorus { lattice, degree } => {
                if degree.len() != generators {
                    return Err(Error::Invalid(format!(
                        "degree lists {} generators, the surface group has {generators}",
                        degree.len()
                    )));
                }
                let t = FlatTorusTarget::new(C::new(lattice[0][0], lattice[0][1]), C::new(lattice[1][0], lattice[1][1]))?;
                Ok(vec![t.factor(degree)])
            }
            TargetSpec::Fuchsian => {
                if generators != 4 {
                    return Err(Error::Invalid("the octagon target needs a genus-2 domain".into()));
                }
                Ok(vec![octagon_generators().factor()])
            }
            TargetSpec::DehnTwist { power } => {
                if generators != 4 {
                    return Err(Error::Invalid("the octagon target needs a genus-2 domain".into()));
                }
                Ok(vec![octagon_generators().twisted(*power)])
            }
            TargetSpec::Product { factors } => {
                let mut out = Vec::new();
                for f in factors {
                    out.extend(f.factors(generators)?);
                }
                Ok(out)
            }
            TargetSpec::Representation(doc) => Ok(doc.clone().into_target(generators)?.factors),
        }
    }

    pub fn manifold(&self, generators: usize) -> Result<TargetManifold> {
        let factors = self.factors(generators)?;
        if factors.is_empty() {
            return Err(Error::Invalid("target has no factors".into()));
        }
        Ok(TargetManifold { factors })
    }
}

/// A Beltrami direction: a generator string (`zero`, `random:<seed>:<amp>`,
/// `const:<re>:<im>`) or explicit per-face `[re, im]` values for one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuSource {
    Generator(String),
    PerFace(Vec<[f64; 2]>),
}

impl MuSource {
    pub fn spec(&self) -> Result<BeltramiSpec> {
        match self {
            MuSource::Generator(s) => BeltramiSpec::parse(s),
            MuSource::PerFace(v) => Ok(BeltramiSpec::PerFace(v.iter().map(|m| C::new(m[0], m[1])).collect())),
        }
    }
}

impl From<&str> for MuSource {
    fn from(s: &str) -> Self {
        MuSource::Generator(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub surface: SurfaceSpec,
    pub target: TargetSpec,
    pub mu: MuSource,
    /// Optional Beltrami field applied to the domain before the family is
    /// built, moving the base point off the uniformized structure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_mu: Option<String>,
    pub level: usize,
    /// Stencil spacing at `level`; default `1e-2 / max|mu|`.
    pub h: Option<f64>,
    /// Family radius is `margin / max|mu|`.
    pub margin: f64,
    pub solver: SolverOptions,
    pub index: IndexOptions,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            surface: SurfaceSpec::Genus2,
            target: TargetSpec::Fuchsian,
            mu: MuSource::from("random:1:0.3"),
            base_mu: None,
            level: 2,
            h: None,
            margin: 0.5,
            solver: SolverOptions { tol: 1e-11, ..SolverOptions::default() },
            index: IndexOptions { method: IndexMethod::Analytic, tol: 1e-11, ..IndexOptions::default() },
        }
    }
}

/// A scenario built at one mesh level.
#[derive(Debug, Clone)]
pub struct Instance {
    pub lm: LabeledMesh,
    pub emb: DomainEmbedding,
    pub target: TargetManifold,
    pub f0: EquivariantMap,
    pub mu: BeltramiField,
    pub family: DiskFamily,
}

fn surface_at(surface: &SurfaceSpec, level: usize) -> Result<(LabeledMesh, DomainEmbedding)> {
    match surface {
        SurfaceSpec::Torus { n, tau } => {
            let n = n.checked_mul(1 << level).ok_or_else(|| Error::Invalid("torus grid too large".into()))?;
            Ok((build_torus(n)?, DomainEmbedding::torus(n, C::new(tau[0], tau[1]))?))
        }
        SurfaceSpec::Genus2 => {
            let mut lm = octagon_fan()?;
            let mut emb = DomainEmbedding::octagon_fan();
            for _ in 0..=level {
                let r = refine(&lm);
                emb = emb.refine(&r);
                lm = r.child;
            }
            Ok((lm, emb))
        }
    }
}

/// Starting map: the domain lift on hyperbolic factors, the affine map of the
/// class on flat factors over a flat domain, and a constant otherwise.
fn initial_map(emb: &DomainEmbedding, target: &TargetManifold) -> Result<EquivariantMap> {
    let nf = target.num_factors();
    let nv = emb.positions.len();
    let mut points = vec![C::new(0.0, 0.0); nv * nf];
    for (k, factor) in target.factors.iter().enumerate() {
        let image: Box<dyn Fn(C) -> C> = match (factor.model, emb.model) {
            (Model::HyperbolicDisk, Model::HyperbolicDisk) => Box::new(|z| z),
            (Model::HyperbolicDisk, Model::Euclidean) => {
                return Err(Error::Invalid("a torus has no maps into the hyperbolic target in this class".into()))
            }
            (Model::Euclidean, Model::Euclidean) => {
                let o = C::new(0.0, 0.0);
                let ta = factor.actions()[0].apply(o);
                let tb = factor.actions()[1].apply(o);
                let tau = emb.generators[1].apply(o);
                let alpha = (tb - ta * tau.conj()) / (tau - tau.conj());
                let beta = ta - alpha;
                Box::new(move |z: C| alpha * z + beta * z.conj())
            }
            (Model::Euclidean, Model::HyperbolicDisk) => Box::new(|_| C::new(0.0, 0.0)),
        };
        for v in 0..nv {
            points[v * nf + k] = image(emb.positions[v]);
        }
    }
    Ok(EquivariantMap { factors: nf, points })
}

impl ScenarioSpec {
    pub fn instance(&self, level: usize) -> Result<Instance> {
        let (lm, emb) = surface_at(&self.surface, level)?;
        let target = self.target.manifold(lm.group().generators())?;
        let f0 = initial_map(&emb, &target)?;
        let mut base = emb.structure(&lm)?;
        if let Some(b) = &self.base_mu {
            let shift = BeltramiField::from_spec(&BeltramiSpec::parse(b)?, &emb, &lm)?;
            if shift.max_abs() >= 1.0 {
                return Err(Error::Invalid("base Beltrami field must have sup norm below 1".into()));
            }
            base = DiskFamily::new(base, shift, 1.0)?.family_at(C::new(1.0, 0.0))?;
        }
        let mu = BeltramiField::from_spec(&self.mu.spec()?, &emb, &lm)?;
        let family = DiskFamily::with_margin(base, mu.clone(), self.margin)?;
        Ok(Instance { lm, emb, target, f0, mu, family })
    }

    /// Stencil spacing at `level`, halving per level above `self.level`.
    pub fn spacing(&self, mu: &BeltramiField, level: usize) -> f64 {
        let top = self.h.unwrap_or_else(|| {
            let m = mu.max_abs();
            if m > 0.0 {
                1e-2 / m
            } else {
                1e-2
            }
        });
        top * 2f64.powi(self.level as i32 - level as i32)
    }
}

/// Ledger and diagnostics at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRun {
    pub level: usize,
    pub faces: usize,
    pub h: f64,
    pub energy: f64,
    pub solver: SolverReport,
    pub certificate: PshCertificate,
    pub first_variation: FirstVariation,
    pub second_variation: SecondVariation,
}

/// Solves for the harmonic map at the base structure of `level`; it does not
/// depend on the Beltrami direction.
pub fn solve_center(spec: &ScenarioSpec, level: usize) -> Result<(EquivariantMap, SolverReport)> {
    let inst = spec.instance(level).map_err(|e| e.at(Stage::Build))?;
    let problem = HarmonicProblem::new(&inst.lm, &inst.family.base, &inst.target).map_err(|e| e.at(Stage::Build))?;
    solve_harmonic(&problem, &inst.f0, &spec.solver).map_err(|e| e.at(Stage::Solve))
}

pub fn run_level(spec: &ScenarioSpec, level: usize) -> Result<(LevelRun, StencilGrid, LedgerOutput)> {
    run_level_from(spec, level, None)
}

/// One level of the pipeline. `center` reuses an earlier solve at the base
/// structure of this level.
pub fn run_level_from(
    spec: &ScenarioSpec,
    level: usize,
    center: Option<&(EquivariantMap, SolverReport)>,
) -> Result<(LevelRun, StencilGrid, LedgerOutput)> {
    let inst = spec.instance(level).map_err(|e| e.at(Stage::Build))?;
    let h = spec.spacing(&inst.mu, level);
    let (f0, report) = match center {
        Some(c) => c.clone(),
        None => {
            let problem =
                HarmonicProblem::new(&inst.lm, &inst.family.base, &inst.target).map_err(|e| e.at(Stage::Build))?;
            solve_harmonic(&problem, &inst.f0, &spec.solver).map_err(|e| e.at(Stage::Solve))?
        }
    };
    let grid = energy_stencil(&inst.family, &inst.lm, &inst.target, &f0, h, &spec.solver)
        .map_err(|e| e.at(Stage::Stencil))?;
    let opts = LedgerOptions { index: spec.index, ..LedgerOptions::default() };
    let out = ledger(&grid, &inst.family, &inst.lm, &inst.target, &opts).map_err(|e| e.at(Stage::Ledger))?;
    let first_variation = first_variation_check(&grid, &out.hopf, &inst.mu).map_err(|e| e.at(Stage::Diagnostics))?;
    let second_variation = second_variation_identity(&grid, &inst.family, &inst.lm, &inst.target, &spec.index)
        .map_err(|e| e.at(Stage::Diagnostics))?;
    let run = LevelRun {
        level,
        faces: inst.lm.mesh.num_faces(),
        h,
        energy: grid.center().energy,
        solver: report,
        certificate: out.certificate.clone(),
        first_variation,
        second_variation,
    };
    Ok((run, grid, out))
}

/// Residual budget from two consecutive levels (mesh and `h` both halved):
/// three times the larger of the fine-level identity residuals, the stencil
/// error of `ΔE`, and the Richardson error estimates `|x_fine − x_coarse| / 3`
/// of every ledger entry, plus a rounding floor.
pub fn residual_budget(coarse: &PshCertificate, fine: &PshCertificate) -> f64 {
    let pairs = [
        (coarse.delta_e, fine.delta_e),
        (coarse.a, fine.a),
        (coarse.b, fine.b),
        (coarse.alpha, fine.alpha),
        (coarse.rho, fine.rho),
    ];
    let mut worst = fine.r1.max(fine.r2).max(fine.delta_e_error);
    for (c, f) in pairs {
        worst = worst.max((f - c).abs() / 3.0);
    }
    let scale = fine.a.abs().max(fine.b.abs());
    3.0 * worst + 1e-8 * scale + 1e-10
}

/// Levels run for a certificate plus the certified finest one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub levels: Vec<LevelRun>,
    pub budget: f64,
    pub certificate: PshCertificate,
}

/// The two levels of the refinement study: `spec.level − 1` and
/// `spec.level` (or 0 and 1 at level 0).
pub fn study_levels(spec: &ScenarioSpec) -> [usize; 2] {
    if spec.level == 0 {
        [0, 1]
    } else {
        [spec.level - 1, spec.level]
    }
}

/// Runs the refinement study and certifies the finer ledger with the
/// resulting budget.
pub fn certify(spec: &ScenarioSpec) -> Result<(Study, StencilGrid)> {
    certify_from(spec, None)
}

/// [`certify`] with centre solves supplied for both study levels.
pub fn certify_from(
    spec: &ScenarioSpec,
    centers: Option<&[(EquivariantMap, SolverReport); 2]>,
) -> Result<(Study, StencilGrid)> {
    let [lo, hi] = study_levels(spec);
    let (coarse, _, _) = run_level_from(spec, lo, centers.map(|c| &c[0]))?;
    let (fine, grid, _) = run_level_from(spec, hi, centers.map(|c| &c[1]))?;
    let budget = residual_budget(&coarse.certificate, &fine.certificate);
    let mut certificate = fine.certificate.clone();
    certificate.certify(budget);
    Ok((Study { levels: vec![coarse, fine], budget, certificate }, grid))
}
