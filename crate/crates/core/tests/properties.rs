use nmrl::automata::ProductState;
use nmrl::lstar::{lstar_run, DfaTeacher, LStarBudget};
use nmrl::trace::{Label, Step};
use nmrl::{seeded_rng, ActionId, Dfa, Equivalence, Fired, RewardMachines, RewardTypeId, StateId, Symbol, Trace};
use proptest::prelude::*;

fn arb_dfa(max_states: usize, max_alphabet: usize) -> impl Strategy<Value = Dfa> {
    (1..=max_states, 1..=max_alphabet).prop_flat_map(|(n, k)| {
        (
            prop::collection::vec(0..n as u32, n * k),
            0..n as u32,
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(delta, init, acc)| Dfa::new(n, k, delta, init, acc).unwrap())
    })
}

fn words(k: usize, max_len: usize) -> Vec<Vec<Symbol>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w: &Vec<Symbol>| {
                (0..k as u32).map(move |a| {
                    let mut v = w.clone();
                    v.push(Symbol(a));
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn arb_pair() -> impl Strategy<Value = (Dfa, Dfa)> {
    (1..=3usize, 1..=3usize, 1..=2usize).prop_flat_map(|(n1, n2, k)| {
        let one = |n: usize| {
            (
                prop::collection::vec(0..n as u32, n * k),
                prop::collection::vec(any::<bool>(), n),
            )
                .prop_map(move |(d, a)| Dfa::new(n, k, d, 0, a).unwrap())
        };
        (one(n1), one(n2))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn minimization_preserves_language(d in arb_dfa(8, 3)) {
        let m = d.minimize();
        prop_assert!(m.n_states() <= d.n_states());
        for w in words(d.alphabet(), 5) {
            prop_assert_eq!(d.accepts(&w), m.accepts(&w));
        }
        prop_assert_eq!(m.minimize().n_states(), m.n_states());
        prop_assert_eq!(&m.canonical(), &m);
        prop_assert_eq!(d.canonical().minimize(), m);
    }

    #[test]
    fn counterexamples_are_shortest((a, b) in arb_pair()) {
        let brute = words(a.alphabet(), a.n_states() + b.n_states())
            .into_iter()
            .find(|w| a.accepts(w) != b.accepts(w));
        match a.equivalent(&b).unwrap() {
            Equivalence::Equal => prop_assert!(brute.is_none()),
            Equivalence::Counterexample(w) => {
                prop_assert_ne!(a.accepts(&w), b.accepts(&w));
                prop_assert_eq!(Some(w.len()), brute.map(|x| x.len()));
            }
        }
    }

    #[test]
    fn lstar_returns_the_minimal_target(n in 1..8usize, k in 1..4usize, seed in any::<u64>()) {
        let target = Dfa::random_minimal(n, k, &mut seeded_rng(seed, 0));
        let mut teacher = DfaTeacher { target: &target };
        let out = lstar_run(&mut teacher, k, LStarBudget::default(), false).unwrap();
        prop_assert!(!out.provisional);
        prop_assert!(out.dfa.same_language(&target));
        prop_assert_eq!(out.dfa.n_states(), n);
        prop_assert!(out.stats.equivalence <= n);
    }

    #[test]
    fn product_keys_round_trip(
        dfas in prop::collection::vec(arb_dfa(5, 3), 1..4),
        mdp in 0..1000u32,
        word in prop::collection::vec(0..3u32, 0..12),
    ) {
        let k = dfas.iter().map(Dfa::alphabet).min().unwrap() as u32;
        let dfas: Vec<Dfa> = dfas.iter().map(|d| d.lift(&(0..k).map(Symbol).collect::<Vec<_>>()).unwrap()).collect();
        let rm = RewardMachines::new(dfas);
        let word: Vec<Symbol> = word.into_iter().map(|s| Symbol(s % k)).collect();
        let tracked = rm.track(&word);
        prop_assert_eq!(tracked.len(), word.len() + 1);
        for (i, machine) in tracked.iter().enumerate() {
            for (t, d) in rm.dfas().iter().enumerate() {
                prop_assert_eq!(machine[t] as usize, d.run(&word[..i]));
            }
            let p = ProductState { mdp: StateId(mdp), machine: machine.clone() };
            let key = rm.key(&p);
            prop_assert!(key < (mdp as u64 + 1) * rm.combinations());
            prop_assert_eq!(rm.decode(key), p);
        }
    }

    #[test]
    fn trace_labels_follow_firings(steps in prop::collection::vec((prop::option::of(0..3u32), any::<bool>()), 0..20)) {
        let mut trace = Trace::new(StateId(0));
        let t = RewardTypeId(0);
        for &(sym, fire) in &steps {
            trace.record_step(Step {
                state: StateId(0),
                action: ActionId(0),
                next: StateId(0),
                symbol: sym.map(Symbol),
                markov_reward: 0.0,
                fired: if fire && sym.is_some() { Fired::of(&[t]) } else { Fired::default() },
                terminal: false,
            });
        }
        let lw = trace.labeled(t);
        prop_assert_eq!(lw.word.len(), steps.iter().filter(|s| s.0.is_some()).count());
        prop_assert!(lw.firing.windows(2).all(|p| p[0] < p[1]));
        prop_assert!(!lw.label_at(0));
        let last_fired = steps.iter().rev().find(|s| s.0.is_some()).is_some_and(|s| s.1);
        prop_assert_eq!(lw.is_positive(), last_fired);
        trace.close();
        prop_assert_eq!(trace.label(t) == Label::Positive, last_fired);
    }
}
