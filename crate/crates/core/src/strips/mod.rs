//! Ground STRIPS instances: atoms, states, actions and reachability.
//!
//! Atoms are interned per instance; states and action condition lists are
//! bitsets over the instance's atom universe (every atom mentioned by the
//! initial state, the goal, or some action).

mod atomset;
mod parse;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

pub use atomset::{AtomId, AtomSet};
pub use parse::{parse_instance, print_instance};

use crate::error::{Error, Result};
use crate::pattern::{AtomPattern, Binding};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new<S: Into<String>>(predicate: &str, args: impl IntoIterator<Item = S>) -> Self {
        Atom {
            predicate: predicate.to_string(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    /// Zero-arity atom such as `armempty`.
    pub fn nullary(predicate: &str) -> Self {
        Atom {
            predicate: predicate.to_string(),
            args: Vec::new(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            write!(f, "{}", self.predicate)
        } else {
            write!(f, "{}({})", self.predicate, self.args.join(","))
        }
    }
}

/// A state is the set of atoms true in it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(AtomSet);

impl State {
    pub fn atoms(&self) -> &AtomSet {
        &self.0
    }

    pub fn contains(&self, id: AtomId) -> bool {
        self.0.contains(id)
    }
}

#[derive(Debug, Clone)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<String>,
    pub pre: AtomSet,
    pub add: AtomSet,
    pub del: AtomSet,
}

impl GroundAction {
    pub fn label(&self) -> String {
        if self.args.is_empty() {
            self.name.clone()
        } else {
            format!("{}({})", self.name, self.args.join(","))
        }
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Goal condition: a conjunction of atoms plus optional exact-count
/// constraints (`goal-count ontable(_) 1` expresses "a single tower").
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountGoal {
    pub pattern: AtomPattern,
    pub count: usize,
}

/// Action description by atoms, used to build instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpec {
    pub name: String,
    pub args: Vec<String>,
    pub pre: Vec<Atom>,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
}

#[derive(Debug, Clone)]
pub struct Instance {
    name: String,
    domain: String,
    objects: Vec<String>,
    predicates: Option<BTreeMap<String, usize>>,
    atoms: Vec<Atom>,
    index: HashMap<Atom, AtomId>,
    init: State,
    goal: AtomSet,
    goal_counts: Vec<CountGoal>,
    actions: Vec<GroundAction>,
    params: Binding,
}

impl Instance {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn declared_predicates(&self) -> Option<&BTreeMap<String, usize>> {
        self.predicates.as_ref()
    }

    pub fn init(&self) -> &State {
        &self.init
    }

    pub fn goal_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.goal.iter().map(|id| self.atom(id))
    }

    pub fn goal_counts(&self) -> &[CountGoal] {
        &self.goal_counts
    }

    pub fn actions(&self) -> &[GroundAction] {
        &self.actions
    }

    /// Explicit parameter bindings (`param x a` lines).
    pub fn params(&self) -> &Binding {
        &self.params
    }

    pub fn universe(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, id: AtomId) -> &Atom {
        &self.atoms[id.index()]
    }

    pub fn atom_id(&self, atom: &Atom) -> Option<AtomId> {
        self.index.get(atom).copied()
    }

    pub fn atoms_of<'a>(&'a self, state: &'a State) -> impl Iterator<Item = &'a Atom> + 'a {
        state.0.iter().map(move |id| self.atom(id))
    }

    /// The atoms of `state`, sorted.
    pub fn sorted_atoms(&self, state: &State) -> Vec<Atom> {
        let set: BTreeSet<Atom> = self.atoms_of(state).cloned().collect();
        set.into_iter().collect()
    }

    pub fn render_state(&self, state: &State) -> String {
        let atoms: Vec<String> = self.sorted_atoms(state).iter().map(ToString::to_string).collect();
        format!("{{{}}}", atoms.join(", "))
    }

    /// Builds a state from atoms; every atom must belong to the universe.
    pub fn state_from<'a>(&self, atoms: impl IntoIterator<Item = &'a Atom>) -> Result<State> {
        let mut set = AtomSet::empty(self.atoms.len());
        for atom in atoms {
            let id = self
                .atom_id(atom)
                .ok_or_else(|| Error::UnknownAtom(atom.to_string()))?;
            set.insert(id);
        }
        Ok(State(set))
    }

    pub fn is_goal(&self, state: &State) -> bool {
        if !self.goal.is_subset(&state.0) {
            return false;
        }
        self.goal_counts.iter().all(|cg| {
            let n = self
                .atoms_of(state)
                .filter(|a| matches!(cg.pattern.matches(a, &self.params), Ok(Some(_))))
                .count();
            n == cg.count
        })
    }

    pub fn is_applicable(&self, state: &State, action: &GroundAction) -> bool {
        action.pre.is_subset(&state.0)
    }

    /// Indices of the actions applicable in `state`, in declaration order.
    pub fn applicable_ids<'a>(&'a self, state: &'a State) -> impl Iterator<Item = usize> + 'a {
        self.actions
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.pre.is_subset(&state.0))
            .map(|(i, _)| i)
    }

    pub fn applicable(&self, state: &State) -> Vec<&GroundAction> {
        self.applicable_ids(state).map(|i| &self.actions[i]).collect()
    }

    pub fn apply(&self, state: &State, action: &GroundAction) -> Result<State> {
        if !self.is_applicable(state, action) {
            return Err(Error::Inapplicable(action.label()));
        }
        Ok(self.successor(state, action))
    }

    /// STRIPS successor without the applicability check.
    pub(crate) fn successor(&self, state: &State, action: &GroundAction) -> State {
        let mut next = state.0.clone();
        next.difference_with(&action.del);
        next.union_with(&action.add);
        State(next)
    }

    /// Successors of `state` paired with the index of the producing action.
    pub fn successors(&self, state: &State) -> Vec<(usize, State)> {
        self.applicable_ids(state)
            .map(|i| (i, self.successor(state, &self.actions[i])))
            .collect()
    }

    /// Breadth-first closure of the initial state, stopping after `cap` states.
    pub fn reachable_states(&self, cap: usize) -> ReachableSet {
        let cap = cap.max(1);
        let mut states = vec![self.init.clone()];
        let mut seen: HashMap<State, usize> = HashMap::new();
        seen.insert(self.init.clone(), 0);
        let mut queue = VecDeque::from([0usize]);
        let mut truncated = false;
        'bfs: while let Some(i) = queue.pop_front() {
            let current = states[i].clone();
            for (_, next) in self.successors(&current) {
                if seen.contains_key(&next) {
                    continue;
                }
                if states.len() >= cap {
                    truncated = true;
                    break 'bfs;
                }
                seen.insert(next.clone(), states.len());
                queue.push_back(states.len());
                states.push(next);
            }
        }
        ReachableSet {
            states,
            index: seen,
            truncated,
            cap,
        }
    }
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        let atoms = |inst: &Instance, set: &AtomSet| -> BTreeSet<Atom> {
            set.iter().map(|id| inst.atom(id).clone()).collect()
        };
        let action_key = |inst: &Instance, a: &GroundAction| {
            (
                a.name.clone(),
                a.args.clone(),
                atoms(inst, &a.pre),
                atoms(inst, &a.add),
                atoms(inst, &a.del),
            )
        };
        self.name == other.name
            && self.domain == other.domain
            && self.objects == other.objects
            && self.predicates == other.predicates
            && self.params == other.params
            && self.goal_counts == other.goal_counts
            && atoms(self, &self.init.0) == atoms(other, &other.init.0)
            && atoms(self, &self.goal) == atoms(other, &other.goal)
            && self.actions.len() == other.actions.len()
            && self
                .actions
                .iter()
                .zip(&other.actions)
                .all(|(a, b)| action_key(self, a) == action_key(other, b))
    }
}

/// States reachable from the initial state, in breadth-first order.
#[derive(Debug, Clone)]
pub struct ReachableSet {
    pub states: Vec<State>,
    index: HashMap<State, usize>,
    /// Set when the closure was cut off at `cap` states.
    pub truncated: bool,
    pub cap: usize,
}

impl ReachableSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, state: &State) -> bool {
        self.index.contains_key(state)
    }

    pub fn position(&self, state: &State) -> Option<usize> {
        self.index.get(state).copied()
    }
}

/// Incrementally assembles and validates an [`Instance`].
#[derive(Debug, Clone, Default)]
pub struct InstanceBuilder {
    name: String,
    domain: String,
    objects: Vec<String>,
    predicates: Option<BTreeMap<String, usize>>,
    init: Vec<Atom>,
    goal: Vec<Atom>,
    goal_counts: Vec<CountGoal>,
    actions: Vec<ActionSpec>,
    params: Binding,
}

impl InstanceBuilder {
    pub fn new(name: impl Into<String>, domain: impl Into<String>) -> Self {
        InstanceBuilder {
            name: name.into(),
            domain: domain.into(),
            ..Default::default()
        }
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn domain(mut self, domain: impl Into<String>) -> Self {
        self.domain = domain.into();
        self
    }

    pub fn objects<S: Into<String>>(mut self, objects: impl IntoIterator<Item = S>) -> Self {
        self.objects.extend(objects.into_iter().map(Into::into));
        self
    }

    pub fn predicate(mut self, name: impl Into<String>, arity: usize) -> Self {
        self.predicates
            .get_or_insert_with(BTreeMap::new)
            .insert(name.into(), arity);
        self
    }

    pub fn init(mut self, atoms: impl IntoIterator<Item = Atom>) -> Self {
        self.init.extend(atoms);
        self
    }

    pub fn goal(mut self, atoms: impl IntoIterator<Item = Atom>) -> Self {
        self.goal.extend(atoms);
        self
    }

    pub fn goal_count(mut self, pattern: AtomPattern, count: usize) -> Self {
        self.goal_counts.push(CountGoal { pattern, count });
        self
    }

    pub fn param(mut self, param: impl Into<String>, object: impl Into<String>) -> Self {
        self.params.insert(param, object);
        self
    }

    pub fn action(mut self, action: ActionSpec) -> Self {
        self.actions.push(action);
        self
    }

    pub fn actions(mut self, actions: impl IntoIterator<Item = ActionSpec>) -> Self {
        self.actions.extend(actions);
        self
    }

    pub fn build(self) -> Result<Instance> {
        let declared: BTreeSet<&str> = self.objects.iter().map(String::as_str).collect();
        if declared.len() != self.objects.len() {
            return Err(Error::Invalid(format!(
                "instance {}: duplicate object declaration",
                self.name
            )));
        }
        let check = |atom: &Atom| -> Result<()> {
            if let Some(preds) = &self.predicates {
                match preds.get(&atom.predicate) {
                    Some(&n) if n == atom.args.len() => {}
                    _ => return Err(Error::UndeclaredPredicate(atom.predicate.clone())),
                }
            }
            for arg in &atom.args {
                if !declared.contains(arg.as_str()) {
                    return Err(Error::UndeclaredObject {
                        object: arg.clone(),
                        line: 0,
                        column: 0,
                    });
                }
            }
            Ok(())
        };
        for (_, obj) in self.params.iter() {
            if !declared.contains(obj) {
                return Err(Error::UndeclaredObject {
                    object: obj.to_string(),
                    line: 0,
                    column: 0,
                });
            }
        }

        let mut atoms: Vec<Atom> = Vec::new();
        let mut index: HashMap<Atom, AtomId> = HashMap::new();
        let mut intern = |atom: &Atom| -> AtomId {
            if let Some(&id) = index.get(atom) {
                return id;
            }
            let id = AtomId::new(atoms.len());
            atoms.push(atom.clone());
            index.insert(atom.clone(), id);
            id
        };

        let mut init_ids = Vec::new();
        for atom in &self.init {
            check(atom)?;
            init_ids.push(intern(atom));
        }
        let mut goal_ids = Vec::new();
        for atom in &self.goal {
            check(atom)?;
            goal_ids.push(intern(atom));
        }
        let mut action_ids = Vec::new();
        for spec in &self.actions {
            for arg in &spec.args {
                if !declared.contains(arg.as_str()) {
                    return Err(Error::UndeclaredObject {
                        object: arg.clone(),
                        line: 0,
                        column: 0,
                    });
                }
            }
            let mut lists = [Vec::new(), Vec::new(), Vec::new()];
            for (list, atoms) in lists.iter_mut().zip([&spec.pre, &spec.add, &spec.del]) {
                for atom in atoms {
                    check(atom)?;
                    list.push(intern(atom));
                }
            }
            if let Some(clash) = spec.add.iter().find(|a| spec.del.contains(a)) {
                return Err(Error::InconsistentAction {
                    action: spec.name.clone(),
                    atom: clash.to_string(),
                });
            }
            action_ids.push(lists);
        }

        let universe = atoms.len();
        let to_set = |ids: &[AtomId]| {
            let mut set = AtomSet::empty(universe);
            for &id in ids {
                set.insert(id);
            }
            set
        };
        let actions = self
            .actions
            .iter()
            .zip(&action_ids)
            .map(|(spec, [pre, add, del])| GroundAction {
                name: spec.name.clone(),
                args: spec.args.clone(),
                pre: to_set(pre),
                add: to_set(add),
                del: to_set(del),
            })
            .collect();

        Ok(Instance {
            name: self.name,
            domain: self.domain,
            objects: self.objects,
            predicates: self.predicates,
            init: State(to_set(&init_ids)),
            goal: to_set(&goal_ids),
            goal_counts: self.goal_counts,
            actions,
            params: self.params,
            atoms,
            index,
        })
    }
}

#[cfg(test)]
mod tests;
