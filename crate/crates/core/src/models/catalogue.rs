//! The twenty simulation models, one row per model.

use std::f64::consts::PI;

use super::{Family, ModelId, ModelSpec, WeightedFamily};
use crate::error::Result;

use Family::{
    Cardioid as Car, CircularUniform as Unif, VonMises as VM, WrappedCauchy as WC,
    WrappedNormal as WN, WrappedSkewNormal as WSN,
};

fn table() -> Vec<Vec<(f64, Family)>> {
    let sqrt3 = 3f64.sqrt();
    vec![
        // M1
        vec![(1.0, Unif)],
        // M2
        vec![(1.0, VM { mu: PI, kappa: 1.0 })],
        // M3
        vec![(1.0, WN { mu: 0.0, rho: 0.9 })],
        // M4
        vec![(1.0, Car { mu: 0.0, rho: 0.5 })],
        // M5
        vec![(1.0, WC { mu: 0.0, rho: 0.8 })],
        // M6
        vec![(1.0, WSN { xi: 0.0, eta: 1.0, lambda: 20.0 })],
        // M7
        vec![
            (1.0 / 2.0, VM { mu: 0.0, kappa: 4.0 }),
            (1.0 / 2.0, VM { mu: PI, kappa: 4.0 }),
        ],
        // M8
        vec![
            (1.0 / 2.0, VM { mu: 2.0, kappa: 5.0 }),
            (1.0 / 2.0, VM { mu: 4.0, kappa: 5.0 }),
        ],
        // M9
        vec![
            (1.0 / 4.0, VM { mu: 0.0, kappa: 2.0 }),
            (3.0 / 4.0, VM { mu: PI / sqrt3, kappa: 2.0 }),
        ],
        // M10
        vec![
            (4.0 / 5.0, VM { mu: PI, kappa: 5.0 }),
            (1.0 / 5.0, WC { mu: 4.0 * PI / 3.0, rho: 0.9 }),
        ],
        // M11
        vec![
            (1.0 / 3.0, VM { mu: PI / 3.0, kappa: 6.0 }),
            (1.0 / 3.0, VM { mu: PI, kappa: 6.0 }),
            (1.0 / 3.0, VM { mu: 5.0 * PI / 3.0, kappa: 6.0 }),
        ],
        // M12
        vec![
            (2.0 / 5.0, VM { mu: PI / 2.0, kappa: 4.0 }),
            (1.0 / 5.0, VM { mu: PI, kappa: 5.0 }),
            (2.0 / 5.0, VM { mu: 3.0 * PI / 2.0, kappa: 4.0 }),
        ],
        // M13
        vec![
            (2.0 / 5.0, VM { mu: 0.5, kappa: 6.0 }),
            (2.0 / 5.0, VM { mu: 3.0, kappa: 6.0 }),
            (1.0 / 5.0, VM { mu: 5.0, kappa: 24.0 }),
        ],
        // M14
        vec![
            (1.0 / 4.0, VM { mu: 0.0, kappa: 12.0 }),
            (1.0 / 4.0, VM { mu: PI / 2.0, kappa: 12.0 }),
            (1.0 / 4.0, VM { mu: PI, kappa: 12.0 }),
            (1.0 / 4.0, VM { mu: 3.0 * PI / 2.0, kappa: 12.0 }),
        ],
        // M15
        vec![
            (3.0 / 10.0, WC { mu: PI - 1.0, rho: 0.6 }),
            (1.0 / 4.0, WN { mu: PI + 0.5, rho: 0.9 }),
            (1.0 / 4.0, VM { mu: PI + 2.0, kappa: 3.0 }),
            (1.0 / 5.0, WSN { xi: 6.0, eta: 1.0, lambda: 3.0 }),
        ],
        // M16
        vec![
            (1.0 / 5.0, VM { mu: PI / 5.0, kappa: 18.0 }),
            (1.0 / 5.0, VM { mu: 3.0 * PI / 5.0, kappa: 18.0 }),
            (1.0 / 5.0, VM { mu: PI, kappa: 18.0 }),
            (1.0 / 5.0, VM { mu: 7.0 * PI / 5.0, kappa: 18.0 }),
            (1.0 / 5.0, VM { mu: 9.0 * PI / 5.0, kappa: 18.0 }),
        ],
        // M17
        vec![
            (2.0 / 3.0, Car { mu: PI, rho: 0.5 }),
            (1.0 / 3.0, WC { mu: PI, rho: 0.9 }),
        ],
        // M18
        vec![
            (1.0 / 2.0, VM { mu: PI, kappa: 1.0 }),
            (1.0 / 6.0, VM { mu: PI - 0.8, kappa: 30.0 }),
            (1.0 / 6.0, VM { mu: PI, kappa: 30.0 }),
            (1.0 / 6.0, VM { mu: PI + 0.8, kappa: 30.0 }),
        ],
        // M19: five components, weights as listed
        vec![
            (4.0 / 9.0, VM { mu: 2.0, kappa: 3.0 }),
            (5.0 / 36.0, VM { mu: 4.0, kappa: 3.0 }),
            (5.0 / 36.0, VM { mu: 3.5, kappa: 50.0 }),
            (5.0 / 36.0, VM { mu: 4.0, kappa: 50.0 }),
            (5.0 / 36.0, VM { mu: 4.5, kappa: 50.0 }),
        ],
        // M20
        vec![
            (1.0 / 3.0, WSN { xi: 0.0, eta: 0.7, lambda: 20.0 }),
            (1.0 / 3.0, WSN { xi: PI, eta: 0.7, lambda: 20.0 }),
            (1.0 / 6.0, WC { mu: 3.0 * PI / 4.0, rho: 0.9 }),
            (1.0 / 6.0, WC { mu: 7.0 * PI / 4.0, rho: 0.9 }),
        ],
    ]
}

/// All twenty models, in order.
pub fn catalogue() -> Vec<ModelSpec> {
    table()
        .into_iter()
        .zip(ModelId::all())
        .map(|(rows, id)| {
            let components = rows
                .into_iter()
                .map(|(weight, family)| WeightedFamily { weight, family })
                .collect();
            ModelSpec::new(id, components).expect("catalogue entries are valid")
        })
        .collect()
}

pub fn model(id: ModelId) -> ModelSpec {
    catalogue().swap_remove(id.index() as usize - 1)
}

/// Pretty-printed JSON listing of the catalogue.
pub fn catalogue_json() -> Result<String> {
    serde_json::to_string_pretty(&catalogue())
        .map_err(|e| crate::error::Error::InvalidParameter(e.to_string()))
}
