//! Functionals whose asymptotic negligibility characterises the strong renewal theorem.

mod appendix;
mod chain;
mod plus;
mod profile;
mod suff;

pub use appendix::{appendix_diag, AppendixReport};
pub use chain::{
    i1_parts, i_chain, tilde_i1_forms, tilde_i1_star, tilde_i_chain, ChainAudit, ChainMode, ChainSpec, ChainValue,
    EvalMethod, I1Parts, LevelChain, Terminal, EXACT_MAX_K, NODE_LIMIT,
};
pub use plus::{i1_plus, i1_plus_deltas, tilde_i1_plus, TildeForm};
pub use profile::{an_profile, default_delta_grid, dyadic_grid, AnOptions, AnProfile, Functional, Verdict};
pub use suff::{suff_check, SuffMode, SuffReport, SUFF_BAND};
