//! The recursive families behind the modified auxiliary functions `f_i`.

pub mod lemmas;
pub mod product;
pub mod tree;

pub use lemmas::{lemma_suite, LemmaCheck, LemmaOptions, LemmaReport};
pub use product::{product_integral_bound_check, ProductCheck};
pub use tree::{
    build_all_trees, build_tree, inner_product_d_fi, inner_product_d_fi0, inner_product_d_fi_interval,
    n_from_pointcount, AuxFamilyTree, FValue, LevelRecord, MaxLevel, RationalInterval, TreeSummary,
    UncoveredMass,
};
