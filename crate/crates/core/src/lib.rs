//! Generalized planning over relational domains via feature abstraction.

pub mod abstraction;
pub mod bundled;
pub mod error;
pub mod executor;
pub mod features;
pub mod generators;
pub mod pattern;
pub mod pipeline;
pub mod planner;
pub mod projection;
pub mod report;
pub mod strips;
mod syntax;

pub use abstraction::{AbstractAction, Effect, EffectKind, FamilyModel, Literal, Status, Verdict, Witness};
pub use error::{Error, Result};
pub use executor::{ExecutionReport, Outcome, Strategy, Trajectory};
pub use features::{BoolValuation, Feature, FeatureSet, FeatureValuation, Signature};
pub use pattern::{AtomPattern, Binding, PatternArg};
pub use strips::{
    parse_instance, print_instance, ActionSpec, Atom, AtomId, AtomSet, GroundAction, Instance,
    InstanceBuilder, ReachableSet, State,
};
pub use pipeline::{run_example, ExampleRun, Options};
pub use planner::{PolicyTable, QualitativeSolution, Termination, Unsolvable};
pub use projection::{FondProblem, Formula, QnpProblem};
pub use report::Report;
