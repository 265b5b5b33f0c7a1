//! Fixtures shared by the solver benchmarks.

use drrp_core::{generate_synthetic, AmbiguitySpec, DistanceMeasure, ProbabilityDistribution, ScenarioMatrix};

pub struct Instance {
    pub data: ScenarioMatrix,
    pub q: ProbabilityDistribution,
    pub spec: AmbiguitySpec,
}

/// Seeded synthetic panel with a uniform nominal distribution.
pub fn instance(n: usize, t: usize, measure: DistanceMeasure, omega: f64, seed: u64) -> Instance {
    let data = generate_synthetic(n, t, seed).expect("valid synthetic size");
    let spec = AmbiguitySpec::new(measure, omega, t).expect("valid ambiguity spec");
    Instance {
        data,
        q: ProbabilityDistribution::uniform(t),
        spec,
    }
}
