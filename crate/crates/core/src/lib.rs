//! Calculus on Baouendi–Grushin spaces and numerical verification of sharp
//! Hardy-type identities with explicit remainders.

pub mod calculus;
pub mod cp;
mod error;
pub mod fields;
pub mod parser;
pub mod quadrature;
pub mod space;
pub mod verifier;
pub mod weights;

pub use calculus::{div_gamma, grad_gamma, p_grushin_radial, CompiledVectorField, VectorFieldExpr};
pub use cp::{cp, cp_ratio, extremal_constants, CpConstants, CpRatioKind};
pub use error::{Error, Result};
pub use fields::{CompiledField, FieldExpr, Gradient, Jet2};
pub use parser::{format, parse, ParseDiagnostics};
pub use space::{GrushinSpace, Point};
pub use weights::{
    bessel_residual, catalog_get, derive_weight, DomainDescriptor, DomainKind, ExtraTerm, Params,
    WeightTriple,
};
pub use quadrature::{integrate, integrate_eps_limit, IntegralResult, QuadratureSettings};
pub use verifier::{
    hpw_alpha, hpw_deficit, hpw_deficit_at, verify_identity, IdentitySpec, VerificationReport,
};
