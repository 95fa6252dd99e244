//! Continuous dependence on initial data: perturbed runs against a base run.

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::BlockOperator;
use crate::error::{Error, Result};
use crate::geometry::MicroMesh;
use crate::ionics::{GapModel, IonicModel};
use crate::linalg;
use crate::stepper::{initialize, run, FieldSpec, InitialData, SolverConfig, SystemState};

/// Tolerance for η-independence of the amplification.
pub const LINEARITY_RTOL: f64 = 0.05;
/// Allowed excess of the 2T amplification over the fitted exponential.
pub const GRONWALL_SLACK: f64 = 0.20;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationResult {
    pub eta: f64,
    /// ‖Δv¹‖, ‖Δv²‖ (ε-weighted L² on the membranes) at T.
    pub dv: [f64; 2],
    pub dw: [f64; 2],
    pub ds: f64,
    /// √(D(T)/D(0)).
    pub amplification: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub horizon: f64,
    pub perturbations: Vec<PerturbationResult>,
    /// Max relative spread of the amplification over all η.
    pub linearity_spread: f64,
    pub linearity_pass: bool,
    pub zero_perturbation_bitwise: bool,
    /// Rate C with A(t) ≤ exp(C t) on (0, T].
    pub gronwall_rate: f64,
    /// max over (0, 2T] of A(t) / exp(C t).
    pub gronwall_excess: f64,
    pub gronwall_pass: bool,
}

impl StabilityReport {
    pub fn pass(&self) -> bool {
        self.linearity_pass && self.zero_perturbation_bitwise && self.gronwall_pass
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("eta,dv1,dv2,dw1,dw2,ds,amplification\n");
        for p in &self.perturbations {
            s.push_str(&format!(
                "{:e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                p.eta, p.dv[0], p.dv[1], p.dw[0], p.dw[1], p.ds, p.amplification
            ));
        }
        s
    }

    pub fn summary(&self) -> String {
        let pf = |b: bool| if b { "pass" } else { "FAIL" };
        format!(
            "horizon T = {}\n\
             amplification spread over eta: {:.3e} (tol {}) ... {}\n\
             zero perturbation reproduces base bitwise ... {}\n\
             gronwall rate C = {:.6e}; max A(t)/exp(Ct) on (0,2T] = {:.4} (tol {}) ... {}\n",
            self.horizon,
            self.linearity_spread,
            LINEARITY_RTOL,
            pf(self.linearity_pass),
            pf(self.zero_perturbation_bitwise),
            self.gronwall_rate,
            self.gronwall_excess,
            1.0 + GRONWALL_SLACK,
            pf(self.gronwall_pass),
        )
    }
}

/// Squared weighted difference Σ ε‖Δvᵏ‖² + Σ ε‖Δwᵏ‖² + C_r ε‖Δs‖², plus the parts.
fn difference(op: &BlockOperator, eps: f64, c_ratio: f64, a: &SystemState, b: &SystemState) -> (f64, [f64; 5]) {
    let ua = a.potentials();
    let ub = b.potentials();
    let du: Vec<f64> = ua.iter().zip(&ub).map(|(x, y)| x - y).collect();
    let dw1: Vec<f64> = a.w1.iter().zip(&b.w1).map(|(x, y)| x - y).collect();
    let dw2: Vec<f64> = a.w2.iter().zip(&b.w2).map(|(x, y)| x - y).collect();
    let parts = [
        eps * linalg::quad(&op.gamma1.mass, &op.gamma1.jump(&du)),
        eps * linalg::quad(&op.gamma2.mass, &op.gamma2.jump(&du)),
        eps * linalg::quad(&op.gamma1.mass, &dw1),
        eps * linalg::quad(&op.gamma2.mass, &dw2),
        eps * linalg::quad(&op.gamma12.mass, &op.gamma12.jump(&du)),
    ];
    let d = parts[0] + parts[1] + parts[2] + parts[3] + c_ratio * parts[4];
    (d, parts)
}

fn bitwise_equal(a: &[SystemState], b: &[SystemState]) -> bool {
    let bits = |s: &SystemState| -> Vec<u64> {
        std::iter::once(s.t)
            .chain(s.u1.iter().chain(&s.u2).chain(&s.ue).chain(&s.w1).chain(&s.w2).copied())
            .map(f64::to_bits)
            .collect()
    };
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| bits(x) == bits(y))
}

fn add_scaled(base: &SystemState, dir: &SystemState, eta: f64) -> SystemState {
    let f = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + eta * y).collect() };
    SystemState {
        t: base.t,
        u1: f(&base.u1, &dir.u1),
        u2: f(&base.u2, &dir.u2),
        ue: f(&base.ue, &dir.ue),
        w1: f(&base.w1, &dir.w1),
        w2: f(&base.w2, &dir.w2),
    }
}

/// Runs the base problem to 2T (T = `config.t_end`) and one perturbed run per
/// η with v¹(0) shifted by η·`profile`, plus an η = 0 run. Member runs are
/// independent and execute in parallel on the current rayon pool.
#[allow(clippy::too_many_arguments)]
pub fn stability_experiment(
    mesh: &MicroMesh,
    op: &BlockOperator,
    model: &IonicModel,
    gap: &GapModel,
    config: &SolverConfig,
    init: &InitialData,
    profile: &FieldSpec,
    etas: &[f64],
) -> Result<StabilityReport> {
    if etas.len() < 2 || etas.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Config("stability needs at least two positive perturbation sizes".into()));
    }
    let horizon = config.t_end;
    let long = SolverConfig {
        t_end: 2.0 * horizon,
        ..config.clone()
    };
    let base0 = initialize(mesh, op, init)?;
    let dir = initialize(
        mesh,
        op,
        &InitialData {
            v1: profile.clone(),
            ..Default::default()
        },
    )?;
    let mut members: Vec<f64> = etas.to_vec();
    members.push(0.0);
    let runs: Vec<Result<Vec<SystemState>>> = std::iter::once(None)
        .chain(members.iter().map(Some))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|eta| {
            let s0 = match eta {
                None => base0.clone(),
                Some(&e) => add_scaled(&base0, &dir, e),
            };
            run(op, model, gap, &long, s0, 1).map(|(_, traj)| traj.snapshots)
        })
        .collect();
    let mut runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let base = runs.remove(0);
    let zero = runs.pop().unwrap();
    let zero_perturbation_bitwise = bitwise_equal(&zero, &base);

    let steps_t = config.n_steps(0.0);
    let eps = config.eps;
    let mut perturbations = Vec::new();
    let mut series: Vec<Vec<(f64, f64)>> = Vec::new();
    for (eta, traj) in etas.iter().zip(&runs) {
        let (d0, _) = difference(op, eps, gap.c_ratio, &traj[0], &base[0]);
        let amp: Vec<(f64, f64)> = traj
            .iter()
            .zip(&base)
            .map(|(a, b)| (a.t, (difference(op, eps, gap.c_ratio, a, b).0 / d0).sqrt()))
            .collect();
        let (_, parts) = difference(op, eps, gap.c_ratio, &traj[steps_t], &base[steps_t]);
        perturbations.push(PerturbationResult {
            eta: *eta,
            dv: [parts[0].sqrt(), parts[1].sqrt()],
            dw: [parts[2].sqrt(), parts[3].sqrt()],
            ds: parts[4].sqrt(),
            amplification: amp[steps_t].1,
        });
        series.push(amp);
    }
    let amps: Vec<f64> = perturbations.iter().map(|p| p.amplification).collect();
    let hi = amps.iter().copied().fold(f64::MIN, f64::max);
    let lo = amps.iter().copied().fold(f64::MAX, f64::min);
    let linearity_spread = (hi - lo) / hi.abs().max(f64::MIN_POSITIVE);

    // Fit on the smallest perturbation, the closest to the linearised flow.
    let smallest = etas
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let amp = &series[smallest];
    let gronwall_rate = amp[1..=steps_t]
        .iter()
        .map(|&(t, a)| a.ln() / t)
        .fold(0.0, f64::max);
    let gronwall_excess = amp[1..]
        .iter()
        .map(|&(t, a)| a / (gronwall_rate * t).exp())
        .fold(0.0, f64::max);

    Ok(StabilityReport {
        horizon,
        perturbations,
        linearity_spread,
        linearity_pass: linearity_spread <= LINEARITY_RTOL,
        zero_perturbation_bitwise,
        gronwall_rate,
        gronwall_excess,
        gronwall_pass: gronwall_excess <= 1.0 + GRONWALL_SLACK,
    })
}
