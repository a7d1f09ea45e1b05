//! Energy over the family disk, its Laplacian, and the second-variation
//! ledger with its certificates.

mod diagnostics;
mod face;
mod hopf;
mod ledger;
mod stencil;

pub use diagnostics::{synthetic_tangent_field, tangency_diagnostic, Tangency};
pub use face::{face_jets, field_jets, Cv, FaceJet, FaceLifts, FieldJet};
pub use hopf::{dbar_residual, first_variation_check, hopf, hopf_affine, FirstVariation, HopfDifferential};
pub use ledger::{
    ledger, parameter_derivatives, second_variation_identity, variation_w, ConventionTerms, LedgerOptions,
    LedgerOutput, ParameterDerivatives, PshCertificate, SecondVariation, Verdict, WConvention,
};
pub use stencil::{
    energy_stencil, gradient_e, laplacian_e, laplacian_e_extrapolated, laplacian_frozen, second_derivative,
    StencilGrid, StencilNode, STENCIL_OFFSETS,
};
