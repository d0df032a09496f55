//! Butterfly-patterned partial sums and the warp kernels built on them.

mod kernels;
mod sampler;
mod schedule;
mod search;
mod table;
mod verify;

pub use kernels::{
    draw_z_basic, draw_z_basic_warp, draw_z_butterfly, draw_z_transposed, run_kernel, Kernel,
    KernelOptions, KernelRun, MatrixLayout,
};
pub use sampler::ButterflySampler;
pub use schedule::{
    apply_set, entry_oracle, entry_zref, entry_zref_at, initial_block, replace_four,
    replace_four_with, replacement_schedule, replay_symbolic, Replacement, ZRef,
};
pub use search::{butterfly_search, butterfly_search_observed, SearchState};
pub use table::{
    build_butterfly_table, cache_theta_transposed, compute_partial_sums_transposed, ButterflyTable,
    TransposedScratch,
};
pub use verify::{
    check_bottom_row, check_closure, check_schedule, check_search, table_layout, verify_all,
    CheckOutcome, ProductCase, SearchRegime,
};
