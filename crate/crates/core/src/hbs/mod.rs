//! Hierarchically block separable compression of the kernel matrix.

mod compress;
mod matvec;
mod proxy;
mod tree;

pub use compress::{compress, default_proxy_width, CompressOptions, HbsFactors, LevelFactors, LevelStats};
pub use matvec::hbs_matvec;
pub use proxy::proxy_error;
pub(crate) use matvec::{sibling_exchange, upward};
pub use tree::{proxy_ring, HbsTree, LatticeBox};
