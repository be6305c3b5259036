//! Boundedness analysis for conjunctive regular path queries whose atoms
//! are star-free expressions with succinct powers, or stars over words.
//!
//! The main entry point is [`boundedness::is_bounded`].

pub mod boundedness;
pub mod expansion;
pub mod homomorphism;
pub mod oracle;
pub mod qbfgen;
pub mod succinct_nfa;
pub mod syntax;

pub use boundedness::{AnalysisReport, BoundsProfile, Verdict};
pub use expansion::{Cq, SuccinctAtom, SuccinctCq};
pub use syntax::{parse_crpq, parse_ucrpq, Crpq, RegexExpr, Symbol, Ucrpq, Var, Word};
