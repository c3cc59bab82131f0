//! Spherical functions, ρ-Martin and ratio-limit kernels, Doob transforms,
//! harmonicity residuals and measured Ancona/Harnack constants.

mod ancona;
mod doob;
mod harmonic;
mod isotropic;
mod lattice;
mod nn;
mod spherical;
mod table;

pub use ancona::{ancona_harnack_check, AnconaReport, DistanceBracket, QuadrupleDecay};
pub use doob::{dirichlet_decay, doob_transform, doob_transform_exact, doob_transform_ratio, DirichletDecay, TransformedRows};
pub use harmonic::{verify_t_harmonic, verify_t_harmonic_group};
pub use isotropic::{ratio_kernel_isotropic, tree_boundary_kernel, tree_boundary_value};
pub use lattice::LatticeKernel;
pub use nn::{gamma_telescoping, martin_kernel_nn, martin_kernel_nn_at, ratio_kernel_nn, NnKernels};
pub use spherical::{rho_p1_exact, spherical, spherical_coefficient, SphericalFunction};
pub use table::{KernelRow, KernelTable};

use serde::Serialize;

use crate::error::Result;

/// A boundary reading at a finite prefix depth.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundaryValue {
    pub value: f64,
    pub depth: usize,
    /// `|value(depth + 4) − value(depth)|`.
    pub error: f64,
    pub stabilized: bool,
}

/// Evaluates at `depth` and `depth + 4` and flags agreement within `tol` (relative).
pub fn stabilize(depth: usize, tol: f64, eval: impl Fn(usize) -> Result<f64>) -> Result<BoundaryValue> {
    let v = eval(depth)?;
    let deeper = eval(depth + 4)?;
    let error = (deeper - v).abs();
    Ok(BoundaryValue { value: v, depth, error, stabilized: error <= tol * v.abs().max(1e-300) })
}
