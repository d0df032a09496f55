//! A small uncollapsed LDA Gibbs sampler that drives the `draw_z` kernels
//! end to end.
//!
//! The update of theta and phi is not part of the kernels. It is a plain
//! Dirichlet posterior draw given the assignment counts, a stand-in for
//! whatever update a full LDA implementation would use.

mod corpus;
mod metrics;
mod model;

pub use corpus::{generate_planted_corpus, load_corpus, topic_slice, Corpus};
pub use metrics::{adjusted_rand_index, modal_topics};
pub use model::{
    gibbs_iterate, initialize, log_likelihood, sample_params, GibbsConfig, GibbsStep, ModelParams,
    TopicAssignment, UnitMode,
};
