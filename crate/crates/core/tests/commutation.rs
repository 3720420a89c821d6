mod common;

use proptest::prelude::*;

use dqc_core::verify::matrix_commute_oracle;
use dqc_core::commutes;

use common::basis_gate;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn verdicts_are_symmetric(a in basis_gate(3), b in basis_gate(3)) {
        prop_assert_eq!(commutes(&a, &b).unwrap().commutes, commutes(&b, &a).unwrap().commutes);
    }

    #[test]
    fn positive_verdicts_hold_for_the_matrices(a in basis_gate(3), b in basis_gate(3)) {
        let verdict = commutes(&a, &b).unwrap();
        if verdict.commutes {
            prop_assert!(
                matrix_commute_oracle(&a, &b, 3).unwrap(),
                "{} / {} claimed by {:?}", a, b, verdict.rule
            );
        }
    }
}
