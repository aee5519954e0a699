//! Glycan structures, compositions, derivatization and neutral masses.
//!
//! Residue masses are never literals: residues are registered as elemental
//! formulas and priced against the element table.

mod elements;
mod mass;
mod residue;
mod structure;

pub use elements::{ElementMassTable, Formula};
pub use mass::{
    composition_of, neutral_mass, undermethylation_variants, Chemistry, Composition, Derivatization,
    DerivatizationState, MassSource,
};
pub use residue::{ResidueKind, ResidueRegistry};
pub use structure::{GlycanStructure, Linkage, ResidueNode};

