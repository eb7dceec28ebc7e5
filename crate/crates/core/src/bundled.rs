//! Example problems shipped with the crate: feature sets, abstract actions
//! and initial/goal formulas for each domain.

use crate::abstraction::{parse_actions, AbstractAction};
use crate::error::{Error, Result};
use crate::executor::Strategy;
use crate::features::FeatureSet;
use crate::projection::{build_projection, parse_formulas, QnpProblem};

const FEATURES: &[(&str, &str)] = &[
    ("qclear", include_str!("../data/qclear.features")),
    ("afprime", include_str!("../data/afprime.features")),
    ("qtower", include_str!("../data/qtower.features")),
    ("qon", include_str!("../data/qon.features")),
    ("qmove", include_str!("../data/qmove.features")),
    ("qslide", include_str!("../data/qslide.features")),
];

const ACTIONS: &[(&str, &str)] = &[
    ("qclear", include_str!("../data/qclear.actions")),
    ("two_action_set", include_str!("../data/qclear.actions")),
    ("afprime", include_str!("../data/afprime.actions")),
    ("qon", include_str!("../data/qon.actions")),
    ("qmove", include_str!("../data/qmove.actions")),
    ("qslide", include_str!("../data/qslide.actions")),
];

const FORMULAS: &[(&str, &str)] = &[
    ("qclear", include_str!("../data/qclear.formulas")),
    ("qtower", include_str!("../data/qtower.formulas")),
    ("qtower_bottom", include_str!("../data/qtower_bottom.formulas")),
    ("qon", include_str!("../data/qon.formulas")),
    ("qmove", include_str!("../data/qmove.formulas")),
    ("qslide", include_str!("../data/qslide.formulas")),
];

const PROBLEMS: &[(&str, &str)] = &[("empty_goal_true", include_str!("../data/empty_goal_true.qnp"))];

fn lookup(table: &'static [(&str, &str)], name: &str) -> Option<&'static str> {
    table.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn features(name: &str) -> Option<&'static str> {
    lookup(FEATURES, name)
}

pub fn actions(name: &str) -> Option<&'static str> {
    lookup(ACTIONS, name)
}

pub fn formulas(name: &str) -> Option<&'static str> {
    lookup(FORMULAS, name)
}

pub fn problem(name: &str) -> Option<&'static str> {
    lookup(PROBLEMS, name)
}

/// Families a policy is executed on, with the strategies used there.
#[derive(Debug, Clone, Copy)]
pub struct Execution {
    pub family: &'static str,
    pub strategies: &'static [Strategy],
}

const ALL_STRATEGIES: &[Strategy] = &[Strategy::First, Strategy::Random(1), Strategy::Adversarial];
const SAMPLED_STRATEGIES: &[Strategy] = &[Strategy::First, Strategy::Random(1)];

/// One end-to-end example.
#[derive(Debug, Clone, Copy)]
pub struct Example {
    pub name: &'static str,
    pub description: &'static str,
    pub features: &'static str,
    pub actions: &'static str,
    pub formulas: &'static str,
    /// Family for the soundness and interface checks.
    pub check_family: &'static str,
    pub executions: &'static [Execution],
}

pub const EXAMPLES: &[Example] = &[
    Example {
        name: "qclear",
        description: "clear a designated block",
        features: "qclear",
        actions: "qclear",
        formulas: "qclear",
        check_family: "qclear_le4",
        executions: &[
            Execution { family: "qclear_le4", strategies: ALL_STRATEGIES },
            Execution { family: "qclear_sampled", strategies: ALL_STRATEGIES },
        ],
    },
    Example {
        name: "qmove",
        description: "reach a target cell on a grid",
        features: "qmove",
        actions: "qmove",
        formulas: "qmove",
        check_family: "qmove_le6",
        executions: &[Execution { family: "qmove_le6", strategies: ALL_STRATEGIES }],
    },
    Example {
        name: "qslide",
        description: "move one tile of a sliding puzzle to a target cell",
        features: "qslide",
        actions: "qslide",
        formulas: "qslide",
        check_family: "qslide_small",
        executions: &[
            Execution { family: "qslide_small", strategies: ALL_STRATEGIES },
            Execution { family: "qslide_3x3", strategies: SAMPLED_STRATEGIES },
        ],
    },
    Example {
        name: "qon",
        description: "put block x on block y",
        features: "qon",
        actions: "qon",
        formulas: "qon",
        check_family: "qon_le5",
        executions: &[Execution { family: "qon_le5", strategies: ALL_STRATEGIES }],
    },
    Example {
        name: "qtower",
        description: "stack all blocks into one tower",
        features: "qtower",
        actions: "afprime",
        formulas: "qtower",
        check_family: "qtower_le5",
        executions: &[Execution { family: "qtower_le5", strategies: ALL_STRATEGIES }],
    },
    Example {
        name: "qtower_bottom",
        description: "stack all blocks into one tower with x at the bottom",
        features: "qtower",
        actions: "afprime",
        formulas: "qtower_bottom",
        check_family: "qtower_bottom_le5",
        executions: &[Execution { family: "qtower_bottom_le5", strategies: ALL_STRATEGIES }],
    },
];

pub fn example(name: &str) -> Result<&'static Example> {
    EXAMPLES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::InvalidParams(format!("unknown example `{name}`")))
}

/// Parsed inputs of an example.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub features: FeatureSet,
    pub actions: Vec<AbstractAction>,
    pub qnp: QnpProblem,
}

impl Example {
    pub fn features_text(&self) -> &'static str {
        features(self.features).expect("bundled feature set")
    }

    pub fn actions_text(&self) -> &'static str {
        actions(self.actions).expect("bundled action set")
    }

    pub fn formulas_text(&self) -> &'static str {
        formulas(self.formulas).expect("bundled formulas")
    }

    pub fn load(&self) -> Result<Loaded> {
        let features = FeatureSet::parse(self.features_text())?;
        let actions = parse_actions(self.actions_text(), features.signature())?;
        let (init, goal) = parse_formulas(self.formulas_text(), features.signature())?;
        let qnp = build_projection(self.name, features.signature(), actions.clone(), init, goal)?;
        Ok(Loaded { features, actions, qnp })
    }
}
