mod support;

use costmart::cfg::LabelKind;
use proptest::prelude::*;

use support::preexp_case;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn assignment_matches_enumeration(seed in any::<u64>()) { prop_assert_eq!(preexp_case(seed, LabelKind::Assign), Ok(())); }

    #[test]
    fn tick_matches_enumeration(seed in any::<u64>()) { prop_assert_eq!(preexp_case(seed, LabelKind::Tick), Ok(())); }

    #[test]
    fn prob_matches_enumeration(seed in any::<u64>()) { prop_assert_eq!(preexp_case(seed, LabelKind::Prob), Ok(())); }

    #[test]
    fn branch_matches_enumeration(seed in any::<u64>()) { prop_assert_eq!(preexp_case(seed, LabelKind::Branch), Ok(())); }

    #[test]
    fn terminal_matches_enumeration(seed in any::<u64>()) { prop_assert_eq!(preexp_case(seed, LabelKind::Terminal), Ok(())); }
}
