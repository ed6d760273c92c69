//! The single defaults table for every threshold used by scenarios and the
//! verification suite.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Max error of the sine-Gordon solver at h = 1/32.
    pub sine_gordon_error: f64,
    /// Accepted range of error ratios between h and h/2 for second-order
    /// schemes.
    pub refinement_ratio: [f64; 2],
    /// Residuals below this are round-off; a ratio between two of them is
    /// not meaningful.
    pub refinement_floor: f64,
    pub gauss_curvature: f64,
    pub cayley_hamilton: f64,
    pub tchebyshev: f64,
    pub lelieuvre: f64,
    pub gauss_map: f64,
    pub holonomy: f64,
    /// Lower bound for the holonomy of a non-harmonic normal field.
    pub holonomy_control: f64,
    pub sym: f64,
    pub lie_metric: f64,
    pub backlund_constant: f64,
    pub backlund_curvature: f64,
    /// Curvature of transformed K-surfaces is only compared where the
    /// coordinate angle has at least this sine.
    pub regular_sin: f64,
    pub bianchi_closure: f64,
    pub permutability: f64,
    pub twisting: f64,
    pub closedness: f64,
    pub christoffel: f64,
    pub involution: f64,
    pub patch_invariants: f64,
    /// Algebraic identities of smooth Bianchi quadrilaterals and cubes.
    pub algebraic: f64,
    /// Float-exact discrete checks (single operations).
    pub discrete: f64,
    /// Discrete checks composed of several transforms.
    pub discrete_composite: f64,
    /// Lower bound for the flatness defect of a perturbed net.
    pub discrete_control: f64,
    pub budget_sine_gordon_s: f64,
    pub budget_ksurface_s: f64,
    pub budget_loop_s: f64,
    pub budget_discrete_s: f64,
    pub budget_total_s: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sine_gordon_error: 5e-3,
            refinement_ratio: [3.4, 4.6],
            refinement_floor: 1e-9,
            gauss_curvature: 1e-3,
            cayley_hamilton: 1e-6,
            tchebyshev: 1e-4,
            lelieuvre: 1e-2,
            gauss_map: 1e-8,
            holonomy: 1e-3,
            holonomy_control: 1e-2,
            sym: 1e-3,
            lie_metric: 1e-3,
            backlund_constant: 1e-3,
            backlund_curvature: 1e-2,
            regular_sin: 0.2,
            bianchi_closure: 1e-6,
            permutability: 1e-3,
            twisting: 1e-6,
            closedness: 1e-3,
            christoffel: 1e-3,
            involution: 1e-6,
            patch_invariants: 1e-3,
            algebraic: 1e-8,
            discrete: 1e-9,
            discrete_composite: 1e-8,
            discrete_control: 1e-5,
            budget_sine_gordon_s: 5.0,
            budget_ksurface_s: 10.0,
            budget_loop_s: 20.0,
            budget_discrete_s: 10.0,
            budget_total_s: 180.0,
        }
    }
}

impl Tolerances {
    /// Multiplies every upper threshold by `factor`. Lower bounds, ratio
    /// windows, the regularity cut-off and runtime budgets are unchanged.
    pub fn scaled(mut self, factor: f64) -> Self {
        for t in [
            &mut self.sine_gordon_error,
            &mut self.gauss_curvature,
            &mut self.cayley_hamilton,
            &mut self.tchebyshev,
            &mut self.lelieuvre,
            &mut self.gauss_map,
            &mut self.holonomy,
            &mut self.sym,
            &mut self.lie_metric,
            &mut self.backlund_constant,
            &mut self.backlund_curvature,
            &mut self.bianchi_closure,
            &mut self.permutability,
            &mut self.twisting,
            &mut self.closedness,
            &mut self.christoffel,
            &mut self.involution,
            &mut self.patch_invariants,
            &mut self.algebraic,
            &mut self.discrete,
            &mut self.discrete_composite,
        ] {
            *t *= factor;
        }
        self
    }

    /// Applies per-key overrides; unknown keys and non-numeric values are
    /// rejected by name.
    pub fn with_overrides(self, overrides: &serde_json::Map<String, Value>) -> CliResult<Self> {
        let mut table = match serde_json::to_value(self)? {
            Value::Object(m) => m,
            _ => unreachable!("the table serialises to an object"),
        };
        for (key, value) in overrides {
            let slot = table.get_mut(key).ok_or_else(|| CliError::Scenario {
                key: format!("tolerances.{key}"),
                reason: "unknown tolerance".into(),
            })?;
            if slot.is_array() != value.is_array() || !(value.is_number() || value.is_array()) {
                return Err(CliError::Scenario {
                    key: format!("tolerances.{key}"),
                    reason: format!("expected a value shaped like {slot}"),
                });
            }
            *slot = value.clone();
        }
        serde_json::from_value(Value::Object(table)).map_err(|e| CliError::Scenario {
            key: "tolerances".into(),
            reason: e.to_string(),
        })
    }
}
