//! Sparse families, maximal averages, sparse operators and weighted norms.

mod apply;
mod family;
mod norms;
mod search;

pub use apply::{sparse_apply, strong_sparse_apply, StrongApply};
pub use family::{band_member, check_sparse, FamilySpec, LaminarFamily, Sparseness, SparseFamily};
pub use norms::{l2w_norm_sq, weak_l2w_norm};
pub use search::{hl_maximal_at, maximal_over_containing, MaximalResult, MaximalSearcher, SupSearchConfig};
