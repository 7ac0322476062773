//! Synthesis and iterative refinement of rule-based control policies by a
//! chat language model.
//!
//! The crate is organised bottom-up:
//!
//! * [`env`] simulates the classic control tasks.
//! * [`dsl`] parses and evaluates the restricted policy language the model writes.
//! * [`llm`] talks to chat-completions endpoints (or a scripted stand-in).
//! * [`prompt`] renders the four prompts and extracts artifacts from replies.
//! * [`refine`] drives replications and batches of the refinement loop.
//! * [`metrics`] aggregates run records into the evaluation metrics.

pub mod dsl;
pub mod env;
pub mod llm;
pub mod metrics;
pub mod prompt;
pub mod refine;
pub mod seed;
