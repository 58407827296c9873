//! Timing analysis toolchain for codel-based robotic components.
//!
//! The pipeline: parse component specifications ([`spec_ast`]), resolve them
//! into a system with resource locks ([`semantic`]), compile the system and a
//! core count into a timed transition system ([`tts`]), then either
//! model-check it over clock zones ([`verifier`]) or run it concretely
//! ([`simulator`]). [`template`] generates text from the resolved model.

pub mod diag;
pub mod semantic;
pub mod simulator;
pub mod spec_ast;
pub mod template;
pub mod tts;
pub mod verifier;
pub mod zone;
