pub mod algebra;
pub mod corpus;
mod canon;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod rate;
pub mod reaction;
pub mod rule;
pub mod showcase;

pub use algebra::{
    collect, commutator, commutator_with, compose, full_product, overlap_classes, product, product_hat,
    ComposeError, OperatorKind, Overlap, RuleSum, RuleTerm, Semantics,
};
pub use canon::CanonicalForm;
pub use graph::{GraphError, Label, LabelledGraph, NodeId, PartialInjection};
pub use io::{builtin_mt_grammar, emit_grammar, emit_rulesum, parse_grammar, parse_rulesum_json, GrammarDocument, ParseError};
pub use oracle::{
    apply_rule, apply_sum, build_generator, check_equivalence, check_sum_equivalence, enumerate_host_states,
    find_matches, sequential, GeneratorMatrix, HostState, OracleError, OutcomeMultiset, Report, Weight,
};
pub use rate::RateMonomial;
pub use reaction::{
    edge_free_crosscheck, fock_matrix, reaction_commutator, reaction_product, FockMatrix, Reaction, ReactionError,
    ReactionSum,
};
pub use rule::{number_rule, rules_isomorphic, validate_rule, Rule, RuleError, RuleSpec};
pub use showcase::{mt_pins, Pin};
