//! Property tests: exactness of the reduced-word and Weyl algebra, and the
//! cocycle identity over random windows.

use nalgebra::DMatrix;
use proptest::prelude::*;

use cocyclelab::*;

fn word_strategy() -> impl Strategy<Value = ReducedWord> {
    prop::collection::vec(
        prop::sample::select(vec![1i32, -1, 2, -2, 3, -3]),
        0..24,
    )
    .prop_map(|letters| {
        let mut w = ReducedWord::empty();
        for l in letters {
            w.push(l);
        }
        w
    })
}

proptest! {
    #[test]
    fn word_multiplication_is_associative(
        u in word_strategy(),
        v in word_strategy(),
        w in word_strategy(),
    ) {
        prop_assert_eq!(u.mul(&v).mul(&w), u.mul(&v.mul(&w)));
    }

    #[test]
    fn word_inverse_cancels(u in word_strategy()) {
        prop_assert!(u.mul(&u.inverse()).is_empty());
        prop_assert!(u.inverse().mul(&u).is_empty());
        prop_assert_eq!(u.inverse().inverse(), u.clone());
    }

    #[test]
    fn word_length_parity_is_additive(u in word_strategy(), v in word_strategy()) {
        let prod = u.mul(&v);
        prop_assert!(prod.len() <= u.len() + v.len());
        prop_assert_eq!((u.len() + v.len()) % 2, prod.len() % 2);
    }

    #[test]
    fn word_distance_is_a_tree_metric(
        u in word_strategy(),
        v in word_strategy(),
        w in word_strategy(),
    ) {
        prop_assert_eq!(u.distance(&v), v.distance(&u));
        prop_assert_eq!(u.distance(&u), 0);
        prop_assert!(u.distance(&w) <= u.distance(&v) + v.distance(&w));
        // distance is the length of the quotient word
        prop_assert_eq!(u.distance(&v), u.inverse().mul(&v).len());
    }
}

fn perm_strategy(d: usize) -> impl Strategy<Value = Permutation> {
    Just(()).prop_perturb(move |_, mut rng| {
        let mut map: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            map.swap(i, j);
        }
        Permutation::new(map).unwrap()
    })
}

proptest! {
    #[test]
    fn permutation_composition_is_associative(
        a in perm_strategy(5),
        b in perm_strategy(5),
        c in perm_strategy(5),
    ) {
        prop_assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
    }

    #[test]
    fn long_element_conjugation_is_an_involution(a in perm_strategy(6)) {
        let w = Permutation::long_element(6);
        let conj = w.compose(&a).compose(&w);
        let back = w.compose(&conj).compose(&w);
        prop_assert_eq!(back, a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn cocycle_identity_over_random_windows(
        seed in 0u64..1000,
        k in -8i64..=8,
        n in -8i64..=8,
    ) {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 1.0]);
        let sys = SymbolicSystem::uniform(
            vec!["A".into(), "a".into(), "B".into(), "b".into()],
            99,
        ).unwrap();
        let c = CocycleSpec::per_symbol(vec![
            a.clone(),
            a.clone().try_inverse().unwrap(),
            b.clone(),
            b.try_inverse().unwrap(),
        ]).unwrap();
        let x = sample_orbit(&sys, seed, -20, 20);
        let lhs = evaluate(&c, &x, k + n).unwrap();
        let rhs = evaluate(&c, &x.shift(n), k).unwrap() * evaluate(&c, &x, n).unwrap();
        let err = (&lhs - &rhs).norm() / lhs.norm().max(1.0);
        prop_assert!(err < 1e-8, "k={k} n={n} err={err:.3e}");
    }

    #[test]
    fn orbit_windows_are_reproducible(seed in 0u64..500, lo in -30i64..0, hi in 0i64..30) {
        let sys = SymbolicSystem::bernoulli(
            vec!["a".into(), "b".into(), "c".into()],
            vec![0.2, 0.3, 0.5],
            7,
        ).unwrap();
        let w1 = sample_orbit(&sys, seed, lo, hi);
        let w2 = sample_orbit(&sys, seed, lo, hi);
        for i in lo..=hi {
            prop_assert_eq!(w1.get(i), w2.get(i));
        }
    }
}
