//! Benchmark fixtures.

use genplan_core::abstraction::DEFAULT_CAP;
use genplan_core::bundled::{self, Loaded};
use genplan_core::generators::family;
use genplan_core::pipeline::solve_qnp;
use genplan_core::{FamilyModel, Instance, PolicyTable};

pub struct Fixture {
    pub name: &'static str,
    pub loaded: Loaded,
    pub policy: PolicyTable,
    pub instances: Vec<Instance>,
}

/// Loads a bundled example, solves it, and generates its check family.
pub fn fixture(name: &'static str) -> Fixture {
    let e = bundled::example(name).expect("bundled example");
    let loaded = e.load().expect("example loads");
    let policy = solve_qnp(&loaded.qnp).expect("planner runs").expect("solvable").policy;
    let instances = family(e.check_family).expect("family").instances;
    Fixture {
        name,
        loaded,
        policy,
        instances,
    }
}

pub fn model(f: &Fixture) -> FamilyModel {
    FamilyModel::build(f.name, f.instances.clone(), &f.loaded.features, DEFAULT_CAP).expect("model builds")
}
