use num_rational::Ratio;
use proptest::prelude::*;
use skorokhod::embedding::check_feasibility;
use skorokhod::{ChainSpec, Scalar, State, TargetMeasure};

fn q(n: i64, d: i64) -> Scalar {
    Scalar::ratio(n, d)
}

fn feasible(spec: &ChainSpec, initial: State, nu: &TargetMeasure) -> bool {
    check_feasibility(spec, initial, nu).unwrap().feasible
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("s{k}")).collect()
}

#[test]
fn extra_head_needs_integer_inverse() {
    for k in 2..12 {
        let spec = ChainSpec::coin(q(1, k)).unwrap();
        assert!(
            feasible(
                &spec,
                State::Finite(0),
                &TargetMeasure::dirac(State::Finite(1))
            ),
            "p = 1/{k}"
        );
    }
    for (a, b) in [(2, 5), (3, 7), (2, 3), (3, 4)] {
        let spec = ChainSpec::coin(q(a, b)).unwrap();
        assert!(
            !feasible(
                &spec,
                State::Finite(0),
                &TargetMeasure::dirac(State::Finite(1))
            ),
            "p = {a}/{b}"
        );
    }
}

#[test]
fn dirac_on_start_is_always_feasible() {
    let three = ChainSpec::three_state(q(2, 7)).unwrap();
    for k in 0..3 {
        assert!(feasible(
            &three,
            State::Finite(k),
            &TargetMeasure::dirac(State::Finite(k))
        ));
    }
    let z = ChainSpec::srw_z();
    assert!(feasible(
        &z,
        State::Z(4),
        &TargetMeasure::dirac(State::Z(4))
    ));
}

#[test]
fn three_state_targets() {
    // m = ((1 - p)/2, 1/2, p/2); from 1 the ratio to state 3 is (1 - p)/p.
    for (p, from_one) in [((1, 3), true), ((1, 2), true), ((2, 5), false)] {
        let spec = ChainSpec::three_state(q(p.0, p.1)).unwrap();
        assert_eq!(
            feasible(
                &spec,
                State::Finite(0),
                &TargetMeasure::dirac(State::Finite(2))
            ),
            from_one,
            "p = {}/{}",
            p.0,
            p.1
        );
        // m_2 / m_3 = 1/p and m_2 / m_1 = 1/(1 - p).
        let to_three = (p.1 % p.0) == 0;
        assert_eq!(
            feasible(
                &spec,
                State::Finite(1),
                &TargetMeasure::dirac(State::Finite(2))
            ),
            to_three
        );
    }
}

proptest! {
    #[test]
    fn iid_verdict_is_ratio_integrality(
        weights in prop::collection::vec(1i64..7, 2..6),
        target in prop::collection::vec(0i64..4, 5),
    ) {
        let n = weights.len();
        let total: i64 = weights.iter().sum();
        let spec = ChainSpec::iid_categorical(labels(n), weights.iter().map(|&w| q(w, total)).collect()).unwrap();
        let tw: Vec<i64> = (1..n).map(|k| target[k - 1]).collect();
        let tt: i64 = tw.iter().sum();
        prop_assume!(tt > 0);
        let nu = TargetMeasure::new(&spec, (1..n).map(|k| (State::Finite(k), q(tw[k - 1], tt)))).unwrap();
        let m = |k: usize| Ratio::new(weights[k], total);
        let oracle = (1..n)
            .filter(|&k| tw[k - 1] > 0)
            .all(|k| (m(0) * Ratio::new(tw[k - 1], tt) / m(k)).is_integer());
        prop_assert_eq!(feasible(&spec, State::Finite(0), &nu), oracle);
    }

    #[test]
    fn charging_the_start_requires_dirac(
        weights in prop::collection::vec(1i64..7, 2..5),
        own in 1i64..5,
        other in 1i64..5,
    ) {
        let n = weights.len();
        let total: i64 = weights.iter().sum();
        let spec = ChainSpec::iid_categorical(labels(n), weights.iter().map(|&w| q(w, total)).collect()).unwrap();
        let nu = TargetMeasure::new(
            &spec,
            [(State::Finite(0), q(own, own + other)), (State::Finite(n - 1), q(other, own + other))],
        )
        .unwrap();
        prop_assert!(!feasible(&spec, State::Finite(0), &nu));
    }

    #[test]
    fn lattice_walks_embed_only_diracs(target in -20i64..20, second in 1i64..20, split in 1i64..4) {
        let z = ChainSpec::srw_z();
        prop_assert!(feasible(&z, State::Z(0), &TargetMeasure::dirac(State::Z(target))));
        let nu = TargetMeasure::new(
            &z,
            [(State::Z(target), q(split, split + 1)), (State::Z(target + second), q(1, split + 1))],
        )
        .unwrap();
        prop_assert!(!feasible(&z, State::Z(0), &nu));
    }
}
