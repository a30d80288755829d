pub mod benchmark;
pub mod error;
pub mod fixtures;
pub mod hedgesim;
pub mod hermite;
pub mod model;
pub mod moments;
pub mod mc;
pub mod numerics;
pub mod pricer;

pub use benchmark::{
    combine_4gab, evaluate_methods, generate_scenarios, random_correlation, BenchmarkReport, MethodResult,
    MethodTag, Scenario, ScenarioConfig, ScenarioSet, SuiteConfig,
};
pub use error::{PricingError, Result};
pub use hedgesim::{run_hedge, HedgeConfig, HedgeReport};
pub use hermite::{HermiteExpansion, Polynomial, Variant};
pub use mc::{mc_price, McConfig, McEstimate};
pub use model::{validate_basket, AssetSpec, BasketSpec, ShiftSign, ValidatedBasket};
pub use moments::MomentVector;
pub use pricer::{delta, greek, price, GreekParameter, GreekReport, Method, PriceQuote};
