//! Operating-mode catalog, payloads, synthesizers and dataset assembly.

pub mod catalog;
pub mod dataset;
pub mod payload;
pub mod synth;

pub use catalog::{catalog, find, om_labels, rollup_om, ModeFamily, ModeSpec};
pub use dataset::{build_dataset, build_dataset_for, Dataset, LabeledSignal, Split};
pub use payload::Payload;
pub use synth::synthesize;
