//! Behaviour of trajectories as the regularization δ goes to zero.

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::BlockOperator;
use crate::error::{Error, Result};
use crate::ionics::{GapModel, IonicModel};
use crate::linalg;
use crate::stepper::{run, SolverConfig, SystemState};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaLimitReport {
    /// (δ, d(δ)) with d(δ) = ‖u^δ − u^{δ/2}‖_{L²(0,T;L²(Ω))}.
    pub distances: Vec<(f64, f64)>,
    pub strictly_decreasing: bool,
}

impl DeltaLimitReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,distance\n");
        for (d, v) in &self.distances {
            s.push_str(&format!("{d:e},{v:.12e}\n"));
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (d, v) in &self.distances {
            s.push_str(&format!("d({d:e}) = {v:.6e}\n"));
        }
        s.push_str(&format!(
            "strictly decreasing as delta -> 0 ... {}\n",
            if self.strictly_decreasing { "pass" } else { "FAIL" }
        ));
        s
    }
}

/// Runs every δ and δ/2 from the same initial state (in parallel) and
/// accumulates the L² space-time distance of the potentials with the
/// right-endpoint rule. `deltas` is given in decreasing order.
pub fn delta_limit(
    op: &BlockOperator,
    model: &IonicModel,
    gap: &GapModel,
    config: &SolverConfig,
    initial: &SystemState,
    deltas: &[f64],
) -> Result<DeltaLimitReport> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Config("delta limit needs positive deltas".into()));
    }
    let members: Vec<f64> = deltas.iter().flat_map(|&d| [d, 0.5 * d]).collect();
    let trajs: Vec<Result<Vec<SystemState>>> = members
        .par_iter()
        .map(|&delta| {
            let cfg = SolverConfig { delta, ..config.clone() };
            run(op, model, gap, &cfg, initial.clone(), 1).map(|(_, t)| t.snapshots)
        })
        .collect();
    let trajs = trajs.into_iter().collect::<Result<Vec<_>>>()?;
    let distances: Vec<(f64, f64)> = deltas
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let (a, b) = (&trajs[2 * i], &trajs[2 * i + 1]);
            let mut acc = 0.0;
            for n in 1..a.len().min(b.len()) {
                let h = a[n].t - a[n - 1].t;
                let diff: Vec<f64> = a[n].potentials().iter().zip(b[n].potentials()).map(|(x, y)| x - y).collect();
                acc += h * linalg::quad(&op.volume_mass, &diff);
            }
            (d, acc.sqrt())
        })
        .collect();
    let strictly_decreasing = distances.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(DeltaLimitReport {
        distances,
        strictly_decreasing,
    })
}
