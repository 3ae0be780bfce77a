mod common;

use common::{family_member, Mutation};
use jumpcompare_core::conditions::{
    check_condition_a_sampled, check_condition_b_sampled, check_condition_c_sampled, check_sigma_equal_sampled,
    check_theorem31, VerdictStatus,
};

#[test]
fn battery_and_single_inequality_agree_on_random_affine_pairs() {
    let mut disagreements = Vec::new();
    let mut violated = 0;
    for i in 0..90 {
        let (p, mutation) = family_member(0xe9_0001, i);
        let report = check_theorem31(&p);
        if report.battery.is_violated() {
            violated += 1;
        }
        // the unmutated and benign pairs are ordered by construction
        if matches!(mutation, Mutation::None | Mutation::Benign) {
            assert_eq!(report.battery, VerdictStatus::Holds, "model {i} ({mutation:?})");
        } else {
            assert_eq!(report.battery, VerdictStatus::Violated, "model {i} ({mutation:?})");
        }
        if !report.agreement {
            disagreements.push((i, mutation, report.battery, report.ii_prime.status));
        }
    }
    assert!(disagreements.is_empty(), "{disagreements:?}");
    assert_eq!(violated, 70);
}

#[test]
fn sampled_checks_never_contradict_exact_reduction() {
    for i in 0..45 {
        let (p, mutation) = family_member(0xe9_0002, i);
        let exact = check_theorem31(&p);
        let sampled = [check_sigma_equal_sampled(&p)]
            .into_iter()
            .chain(check_condition_a_sampled(&p))
            .chain(check_condition_b_sampled(&p))
            .chain(check_condition_c_sampled(&p))
            .map(|v| v.status);
        let sampled = VerdictStatus::combine(sampled);
        assert_ne!(sampled, VerdictStatus::Holds);
        if exact.battery == VerdictStatus::Holds {
            assert_eq!(sampled, VerdictStatus::NoViolationFound, "model {i} ({mutation:?})");
        } else {
            assert_eq!(sampled, VerdictStatus::Violated, "model {i} ({mutation:?})");
        }
    }
}

#[test]
fn violated_witnesses_carry_negative_margins() {
    for i in 0..27 {
        let (p, _) = family_member(0xe9_0003, i);
        let r = check_theorem31(&p);
        for v in std::iter::once(&r.sigma_equal)
            .chain(&r.cond_a)
            .chain(&r.cond_b)
            .chain(&r.cond_c)
            .chain(std::iter::once(&r.ii_prime))
        {
            assert_eq!(v.is_violated(), !v.witnesses.is_empty());
            assert!(v.witnesses.len() <= jumpcompare_core::conditions::MAX_WITNESSES);
            assert!(v.witnesses.windows(2).all(|w| w[0].margin <= w[1].margin));
            assert!(v.witnesses.iter().all(|w| w.margin < 0.0));
        }
    }
}

#[test]
fn checks_are_deterministic() {
    let (p, _) = family_member(0xe9_0004, 5);
    assert_eq!(check_theorem31(&p), check_theorem31(&p));
}
