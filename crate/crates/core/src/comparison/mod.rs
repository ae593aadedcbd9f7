//! Comparison of Dirichlet sums `D_q` against `D_p` over subpolynomial
//! weights, with the multiscale constants that certify it.

mod dirichlet;
mod multiscale;

pub use dirichlet::{dirichlet_profile, dirichlet_sum, reference_family, verify_comparison, ComparisonReport, RatioRow};
pub use multiscale::{
    burn_in_index, certificate_kappa, compute_constants, rescale_factor, select_b, CertificateOptions,
    ComparisonCertificate, MultiscaleParameters,
};
