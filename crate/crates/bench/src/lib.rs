//! Inputs shared by the performance benchmarks.

pub use basket_core;

use basket_core::benchmark::{generate_scenario, Scenario, ScenarioConfig, ScenarioSet};
use basket_core::{fixtures, ValidatedBasket};

/// Reference basket `i` in `1..=6`.
pub fn reference_basket(i: usize) -> ValidatedBasket {
    fixtures::basket(i).validate().expect("fixture baskets are valid")
}

/// First Set 2 scenario whose basket has exactly `n` assets.
pub fn basket_with_assets(n: usize) -> Scenario {
    let config = ScenarioConfig { set: ScenarioSet::Two, count: usize::MAX, seed: 11 };
    (0..)
        .map(|i| generate_scenario(&config, i))
        .find(|s| s.basket.len() == n)
        .expect("every size in 2..=50 eventually appears")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sized_baskets() {
        assert_eq!(basket_with_assets(5).basket.len(), 5);
        assert_eq!(reference_basket(1).len(), 2);
    }
}
