//! Special-function layer: Gamma, Mittag-Leffler functions and the per-mode
//! solution kernels in series and contour form.

mod contour;
mod dd;
mod gamma;
mod kernels;
mod mittag_leffler;
mod shells;

pub(crate) use contour::gl_panel;
pub use contour::{s1_kernel_contour, s2_kernel_contour, s2_kernel_int_contour, ContourSpec};
pub use gamma::{gamma, ln_gamma, rgamma};
pub use kernels::{normalize_spec, KERNEL_KMAX, KERNEL_RTOL, s1_kernel_series, s2_kernel_int_series, s2_kernel_series, OrderSpec};
pub use mittag_leffler::{ml2, mml, Evaluator, MlArgs, MML_DEFAULT_KMAX, MML_MAX_ARGS, Z_MAX};

/// Raw truncated multinomial series, without the single-argument shortcut.
#[doc(hidden)]
pub fn mml_series_raw(args: &MlArgs, k_max: usize) -> (f64, f64) {
    let s = Evaluator::default().mml_series(args, k_max);
    (s.value, s.error)
}
