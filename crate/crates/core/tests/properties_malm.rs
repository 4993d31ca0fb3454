mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn malm_without_weight_is_alm(seed in any::<u64>()) {
        common::malm_alm_bitwise(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn multiplier_update_identity(seed in any::<u64>()) {
        common::lambda_identity_and_stationarity(seed).map_err(TestCaseError::fail)?;
    }
}
