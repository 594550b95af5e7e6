//! Linear algebra, quadrature and Gaussian tail functions shared by every
//! other module.

mod eig;
mod gaussian;
mod linalg;
mod matrix;
mod quadrature;

pub use eig::{hermitian_eig, psd_sqrt, EigDecomposition, HERMITIAN_TOL, PSD_TOL};
pub(crate) use eig::psd_sqrt_from_eig;
pub use gaussian::{q_function, q_squared};
pub use linalg::{back_substitute, solve_hpd, ThinQr, RANK_TOL};
pub use matrix::{vec_norm, ComplexMatrix};
pub use quadrature::{integrate, integrate_theta, GaussLegendre, DEFAULT_POINTS, THETA_LEVELS, THETA_PANEL_NODES};
