//! Marker templates, Graphviz output and codel skeletons.

mod dot;
mod interp;
mod parse;
mod skeleton;

pub use dot::{generate_dot, generate_task_dot};
pub use interp::render;
pub use parse::{parse_template, Segment, Template, TemplateError};
pub use skeleton::generate_skeleton;
