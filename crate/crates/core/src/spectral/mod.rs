//! Characteristic matrices, eigenvalues, Green kernels and resolvents of
//! two-point problems `l[y] − λy = f`, `α 𝒴(a) + β 𝒴(b) = 0`.

mod bc;
pub mod eigen;
pub mod green;
pub mod resolvent;

use std::io::Write;

pub use bc::TwoPointBC;
pub use eigen::{
    characteristic_matrix, find_complex_eigenvalues, find_real_eigenvalues, EigenRecord, Rect,
    SearchOptions,
};
pub use green::{greens_matrix, uniform_grid, GreenFunction, GreenKernel, DEFAULT_KERNEL_NODES};
pub use resolvent::{apply_resolvent, bc_residual, generalized_resolvent};

/// CSV with header `re_lambda,im_lambda,multiplicity,residual`.
pub fn write_spectrum_csv(records: &[EigenRecord], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "re_lambda,im_lambda,multiplicity,residual")?;
    for r in records {
        writeln!(
            out,
            "{:.16e},{:.16e},{},{:.16e}",
            r.lambda.re, r.lambda.im, r.multiplicity, r.residual
        )?;
    }
    Ok(())
}
