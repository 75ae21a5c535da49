//! Explainable chemical classifier programs: structure parsing, substructure
//! matching, the classifier language, benchmark construction, iterative
//! program synthesis, batch classification and enrichment analysis.

pub mod benchmark;
pub mod elements;
pub mod enrich;
pub mod evalstats;
pub mod leia;
pub mod molgraph;
pub mod program;
pub mod runtime;
pub mod smarts;
pub mod suite;
pub mod synthetic;

pub use molgraph::{parse_smiles, Molecule};
pub use program::{parse_program, ClassifierProgram};
pub use smarts::{parse_smarts, SmartsPattern};
pub use suite::ProgramSuite;
