use serde::{Deserialize, Serialize};

use crate::channel::RadioParams;
use crate::error::Result;
use crate::perception::{derive_costs, DerivedCosts, DnnProfile, PerceptionParams};

/// One scenario's physical constants: DNN costs, CPU limits and radio.
/// A single profile is shared by all pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    pub profile: DnnProfile,
    pub costs: DerivedCosts,
    pub perception: PerceptionParams,
    pub radio: RadioParams,
}

impl SystemModel {
    pub fn new(profile: DnnProfile, perception: PerceptionParams, radio: RadioParams) -> Result<Self> {
        perception.validate()?;
        radio.validate()?;
        Ok(Self {
            costs: derive_costs(&profile)?,
            profile,
            perception,
            radio,
        })
    }

    /// Highway simulation defaults.
    pub fn reference() -> Self {
        Self::new(DnnProfile::default(), PerceptionParams::default(), RadioParams::default())
            .expect("reference constants are valid")
    }

    pub fn workload_cap(&self) -> f64 {
        self.perception.workload_cap(&self.costs)
    }
}

impl Default for SystemModel {
    fn default() -> Self {
        Self::reference()
    }
}
