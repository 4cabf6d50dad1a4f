//! Evaluation and transformation of first-order logic under lax team
//! semantics, with dependence, independence, inclusion and exclusion atoms,
//! generalized quantifiers and atoms, and the domain-extension operator `I`.

pub mod evaluator;
pub mod lre;
pub mod oracle;
pub mod quantifiers;
pub mod structures;
pub mod syntax;
pub mod teams;
pub mod transforms;
