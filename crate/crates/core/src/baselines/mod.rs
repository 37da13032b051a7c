//! Frequentist comparison methods.

pub mod bh;
pub mod ds;
pub mod knockoff;
pub mod lasso;

pub use bh::bh_select;
pub use ds::ds_select;
pub use knockoff::{gaussian_knockoffs, knockoff_select, knockoff_threshold, KnockoffDesign};
pub use lasso::{lasso_cv, lasso_fit, ols, LassoFit};
