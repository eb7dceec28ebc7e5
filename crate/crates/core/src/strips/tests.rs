use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;

use super::*;

const BW_SCHEMAS: &str = "\
schema Pickup(x) pre: clear(x) ontable(x) armempty add: holding(x) del: clear(x) ontable(x) armempty
schema Putdown(x) pre: holding(x) add: clear(x) ontable(x) armempty del: holding(x)
schema Stack(x,y) pre: holding(x) clear(y) add: on(x,y) clear(x) armempty del: holding(x) clear(y)
schema Unstack(x,y) pre: on(x,y) clear(x) armempty add: holding(x) clear(y) del: on(x,y) clear(x) armempty
";

fn tower(blocks: &[&str]) -> String {
    let mut init = vec![format!("ontable({})", blocks[0])];
    for w in blocks.windows(2) {
        init.push(format!("on({},{})", w[1], w[0]));
    }
    init.push(format!("clear({})", blocks[blocks.len() - 1]));
    init.push("armempty".into());
    format!(
        "domain blocksworld\nobjects {}\ninit {}\ngoal clear({})\n{BW_SCHEMAS}",
        blocks.join(" "),
        init.join(" "),
        blocks[0]
    )
}

fn atom(text: &str) -> Atom {
    let (head, args) = crate::syntax::split_call(text).unwrap();
    Atom::new(head, args)
}

fn state(inst: &Instance, atoms: &[&str]) -> State {
    let atoms: Vec<Atom> = atoms.iter().map(|a| atom(a)).collect();
    inst.state_from(&atoms).unwrap()
}

fn find<'a>(inst: &'a Instance, label: &str) -> &'a GroundAction {
    inst.actions().iter().find(|a| a.label() == label).unwrap()
}

/// Independent closure: recursive depth-first search over atom sets.
fn dfs_closure(inst: &Instance) -> HashSet<BTreeSet<Atom>> {
    fn visit(inst: &Instance, s: BTreeSet<Atom>, seen: &mut HashSet<BTreeSet<Atom>>) {
        if !seen.insert(s.clone()) {
            return;
        }
        for a in inst.actions() {
            let pre: BTreeSet<Atom> = a.pre.iter().map(|id| inst.atom(id).clone()).collect();
            if !pre.is_subset(&s) {
                continue;
            }
            let mut next = s.clone();
            for id in a.del.iter() {
                next.remove(inst.atom(id));
            }
            for id in a.add.iter() {
                next.insert(inst.atom(id).clone());
            }
            visit(inst, next, seen);
        }
    }
    let mut seen = HashSet::new();
    visit(inst, inst.atoms_of(inst.init()).cloned().collect(), &mut seen);
    seen
}

/// Arm-empty configurations are sets of ordered towers (Lah sums); with a
/// held block the remaining n-1 blocks form such a set.
fn combinatorial_count(n: u64) -> u64 {
    fn fact(k: u64) -> u64 {
        (1..=k).product()
    }
    fn binom(n: u64, k: u64) -> u64 {
        fact(n) / (fact(k) * fact(n - k))
    }
    fn towers(n: u64) -> u64 {
        if n == 0 {
            return 1;
        }
        (1..=n).map(|k| fact(n) / fact(k) * binom(n - 1, k - 1)).sum()
    }
    towers(n) + n * if n > 0 { towers(n - 1) } else { 0 }
}

#[test]
fn three_blocks_ground_to_eighteen_actions() {
    let inst = parse_instance(&tower(&["a", "b", "c"])).unwrap();
    assert_eq!(inst.objects().len(), 3);
    assert_eq!(inst.actions().len(), 18);
    let count = |name: &str| inst.actions().iter().filter(|a| a.name == name).count();
    assert_eq!(count("Unstack"), 6);
    assert_eq!(count("Stack"), 6);
    assert_eq!(count("Pickup"), 3);
    assert_eq!(count("Putdown"), 3);
}

#[test]
fn empty_action_section() {
    let inst = parse_instance("objects a\ninit p(a)\ngoal p(a)\n").unwrap();
    assert!(inst.actions().is_empty());
    let r = inst.reachable_states(10);
    assert_eq!(r.len(), 1);
    assert!(!r.truncated);
}

#[test]
fn undeclared_object_is_located() {
    let text = "objects a b c\ninit on(b,a) on(d,c)\ngoal clear(a)\n";
    match parse_instance(text).unwrap_err() {
        Error::UndeclaredObject { object, line, column } => {
            assert_eq!(object, "d");
            assert_eq!((line, column), (2, 14));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn inconsistent_action_is_rejected() {
    let text = "objects a\ninit p(a)\ngoal p(a)\naction A(a) pre: add: p(a) del: p(a)\n";
    assert!(matches!(
        parse_instance(text),
        Err(Error::InconsistentAction { .. })
    ));
}

#[test]
fn undeclared_predicate_is_rejected() {
    let text = "objects a\npredicates p/1\ninit q(a)\ngoal p(a)\n";
    assert_eq!(
        parse_instance(text).unwrap_err(),
        Error::UndeclaredPredicate("q".into())
    );
}

#[test]
fn unstack_on_three_tower() {
    let inst = parse_instance(&tower(&["a", "b", "c"])).unwrap();
    let s = state(&inst, &["on(b,a)", "on(c,b)", "clear(c)", "armempty", "ontable(a)"]);
    let labels: Vec<String> = inst.applicable(&s).iter().map(|a| a.label()).collect();
    assert_eq!(labels, vec!["Unstack(c,b)"]);

    let next = inst.apply(&s, find(&inst, "Unstack(c,b)")).unwrap();
    let expected = state(&inst, &["on(b,a)", "holding(c)", "clear(b)", "ontable(a)"]);
    assert_eq!(next, expected);
    assert!(matches!(
        inst.apply(&next, find(&inst, "Unstack(c,b)")),
        Err(Error::Inapplicable(_))
    ));
}

#[test]
fn junk_state_has_no_applicable_actions() {
    let inst = parse_instance(&tower(&["a", "b"])).unwrap();
    let s = state(&inst, &["on(b,a)", "ontable(a)"]);
    assert!(inst.applicable(&s).is_empty());
}

#[test]
fn identity_action_keeps_state() {
    let inst = parse_instance("objects a\ninit p(a)\ngoal p(a)\naction Noop() pre: add: del:\n").unwrap();
    let s = inst.init().clone();
    assert_eq!(inst.apply(&s, &inst.actions()[0]).unwrap(), s);
}

#[test]
fn one_step_to_clear_goal() {
    let inst = parse_instance(&tower(&["a", "b"])).unwrap();
    assert!(!inst.is_goal(inst.init()));
    let s = inst.apply(inst.init(), find(&inst, "Unstack(b,a)")).unwrap();
    assert!(inst.is_goal(&s));
}

#[test]
fn applicable_matches_brute_force_filter() {
    let inst = parse_instance(&tower(&["a", "b", "c"])).unwrap();
    for s in &inst.reachable_states(1000).states {
        let atoms: BTreeSet<Atom> = inst.atoms_of(s).cloned().collect();
        let expected: Vec<String> = inst
            .actions()
            .iter()
            .filter(|a| a.pre.iter().all(|id| atoms.contains(inst.atom(id))))
            .map(GroundAction::label)
            .collect();
        let got: Vec<String> = inst.applicable(s).iter().map(|a| a.label()).collect();
        assert_eq!(got, expected);
    }
}

#[test]
fn reachable_counts_match_oracles() {
    let names = ["a", "b", "c", "d"];
    for n in 1..=4 {
        let inst = parse_instance(&tower(&names[..n])).unwrap();
        let r = inst.reachable_states(200_000);
        assert!(!r.truncated);
        let dfs = dfs_closure(&inst);
        let bfs: HashSet<BTreeSet<Atom>> = r
            .states
            .iter()
            .map(|s| inst.atoms_of(s).cloned().collect())
            .collect();
        assert_eq!(bfs, dfs, "n={n}");
        assert_eq!(r.len() as u64, combinatorial_count(n as u64), "n={n}");
    }
    assert_eq!(combinatorial_count(2), 5);
    assert_eq!(combinatorial_count(3), 22);
}

#[test]
fn reachable_set_is_closed() {
    let inst = parse_instance(&tower(&["a", "b", "c"])).unwrap();
    let r = inst.reachable_states(200_000);
    assert!(r.contains(inst.init()));
    for s in &r.states {
        for (_, t) in inst.successors(s) {
            assert!(r.contains(&t));
        }
    }
}

#[test]
fn cap_of_one_truncates() {
    let inst = parse_instance(&tower(&["a", "b"])).unwrap();
    let r = inst.reachable_states(1);
    assert_eq!(r.len(), 1);
    assert!(r.truncated);
    assert_eq!(&r.states[0], inst.init());

    let closed = parse_instance("objects a\ninit p(a)\ngoal p(a)\n").unwrap();
    assert!(!closed.reachable_states(1).truncated);
}

#[test]
fn goal_count_constraint() {
    let text = format!(
        "objects a b\ninit ontable(a) ontable(b) clear(a) clear(b) armempty\ngoal armempty\ngoal-count ontable(_) 1\n{BW_SCHEMAS}"
    );
    let inst = parse_instance(&text).unwrap();
    assert!(!inst.is_goal(inst.init()));
    let r = inst.reachable_states(100);
    let goals = r.states.iter().filter(|s| inst.is_goal(s)).count();
    assert_eq!(goals, 2);
}

#[test]
fn syntax_error_position() {
    let err = parse_instance("objects a\ninit p(a)\nbogus x\n").unwrap_err();
    assert!(matches!(err, Error::Syntax { line: 3, column: 1, .. }));
}

fn arb_instance() -> impl Strategy<Value = Instance> {
    let objects = prop::collection::btree_set("[a-e]", 1..4);
    objects.prop_flat_map(|objs| {
        let objs: Vec<String> = objs.into_iter().collect();
        let o = objs.clone();
        let atom = (0usize..3, prop::collection::vec(prop::sample::select(o), 0..3)).prop_map(
            |(p, args)| Atom::new(["p", "q", "r"][p], args),
        );
        let atoms = prop::collection::vec(atom.clone(), 0..5);
        let action = (
            "[A-C]",
            prop::collection::vec(prop::sample::select(objs.clone()), 0..2),
            atoms.clone(),
            atoms.clone(),
            atoms.clone(),
        )
            .prop_map(|(name, args, pre, add, del)| {
                let del: Vec<Atom> = del.into_iter().filter(|a| !add.contains(a)).collect();
                ActionSpec { name, args, pre, add, del }
            });
        (
            Just(objs),
            atoms.clone(),
            atoms,
            prop::collection::vec(action, 0..4),
        )
            .prop_map(|(objs, init, goal, actions)| {
                InstanceBuilder::new("rt", "test")
                    .objects(objs)
                    .init(init)
                    .goal(goal)
                    .actions(actions)
                    .build()
                    .unwrap()
            })
    })
}

proptest! {
    #[test]
    fn print_then_parse_round_trips(inst in arb_instance()) {
        let text = print_instance(&inst);
        let back = parse_instance(&text).unwrap();
        prop_assert!(back == inst, "{}", text);
    }

    #[test]
    fn apply_follows_strips_semantics(inst in arb_instance()) {
        for s in &inst.reachable_states(50).states {
            for a in inst.applicable(s) {
                let t = inst.apply(s, a).unwrap();
                prop_assert!(a.add.is_subset(t.atoms()));
                prop_assert!(a.del.iter().all(|id| !t.contains(id) || a.add.contains(id)));
            }
        }
    }
}
