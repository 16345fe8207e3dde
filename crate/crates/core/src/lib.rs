//! A workbench for constraint satisfaction problems over first-order
//! expansions of finitely bounded homogeneous binary cores.
//!
//! A binary core is a relational structure whose signature, besides equality,
//! consists of anti-reflexive binary relations (orbitals) that partition all
//! ordered pairs of distinct elements. Finite presentations of such cores
//! (orbital signature plus forbidden substructures) drive everything else:
//!
//! * [`binary_core`] — core presentations, embedding tests, witness extension;
//! * [`orbits`] — canonical orbits of k-tuples and their enumeration;
//! * [`relalg`] — relations as finite orbit sets, projection, entailment,
//!   implication classification and the pp-template join engine;
//! * [`minimality`] — instances and the (k,l)-minimality fixpoint;
//! * [`impgraph`] — the implication graph of a minimal instance and
//!   sink-narrowing;
//! * [`solver`] — the end-to-end decision procedure, a brute-force oracle and
//!   certificate verification;
//! * [`analyzer`] — bipartite implication digraphs, implication composition
//!   and critical-ternary-relation synthesis;
//! * [`io`] — JSON file formats for cores, languages, instances and reports.

pub mod analyzer;
pub mod binary_core;
pub mod error;
pub mod generator;
pub mod impgraph;
pub mod io;
pub mod minimality;
pub mod orbits;
pub mod relalg;
pub mod solver;

pub use binary_core::{BinaryCore, CoreSignature, Diagnostic, FiniteStructure, OrbitalId};
pub use error::Error;
pub use orbits::{Orbit, PairLabel};
pub use relalg::Relation;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
