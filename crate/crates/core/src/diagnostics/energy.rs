//! Discrete energy terms and interface quadrature.

use serde::Serialize;

use crate::assembly::{BlockOperator, InterfaceData};
use crate::ionics::{GapModel, IonicModel};
use crate::linalg;
use crate::stepper::SystemState;

/// Three-point Gauss rule on [0, 1].
pub const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// ∫ f(v(s)) ds over a segment of length `len` where v is linear from `a`
/// to `b`. The segment is cut where v crosses any of `levels`, and each
/// piece uses three-point Gauss, so kinks of f at those levels cost nothing.
pub fn segment_integral(a: f64, b: f64, len: f64, levels: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let mut cuts = vec![0.0, 1.0];
    for &l in levels {
        if (a - l) * (b - l) < 0.0 {
            cuts.push((a - l) / (a - b));
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        let h = s1 - s0;
        if h <= 0.0 {
            continue;
        }
        for (x, wt) in GAUSS3 {
            let s = s0 + h * x;
            total += wt * h * f(a + (b - a) * s);
        }
    }
    total * len
}

/// ∫_Γ f(v) over an interface for nodal values `v`.
pub fn interface_integral(itf: &InterfaceData, v: &[f64], levels: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    itf.facets
        .iter()
        .zip(&itf.lengths)
        .map(|(ids, &len)| segment_integral(v[ids[0]], v[ids[1]], len, levels, &f))
        .sum()
}

/// ε ∫_Γ |v|^r.
pub fn r_norm_pow(itf: &InterfaceData, v: &[f64], r: f64, eps: f64) -> f64 {
    eps * interface_integral(itf, v, &[0.0], |x| x.abs().powf(r))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EnergyReport {
    /// ε‖vᵏ‖² on Γᵏ.
    pub membrane: [f64; 2],
    /// ε‖wᵏ‖² on Γᵏ.
    pub gating: [f64; 2],
    /// ε‖s‖² on Γ¹².
    pub gap: f64,
    /// δ times the regularisation mass form of the potentials.
    pub regularization: f64,
    /// ∫ M∇u·∇u over all three media.
    pub dissipation: f64,
    /// ε ∫ Ĩ_a(vᵏ) vᵏ summed over both membranes.
    pub ionic: f64,
    /// ε ‖vᵏ‖^r_{L^r(Γᵏ)}.
    pub r_norm: [f64; 2],
    /// ε‖∂_t vᵏ‖², ε‖∂_t wᵏ‖², ε‖∂_t s‖² by backward difference.
    pub dt_membrane: Option<[f64; 2]>,
    pub dt_gating: Option<[f64; 2]>,
    pub dt_gap: Option<f64>,
    /// ½[Σ ε‖vᵏ‖² + α4 Σ ε‖wᵏ‖² + C_r ε‖s‖² + δ-terms].
    pub total: f64,
}

impl EnergyReport {
    pub fn entries(&self) -> Vec<f64> {
        let mut e = vec![
            self.membrane[0],
            self.membrane[1],
            self.gating[0],
            self.gating[1],
            self.gap,
            self.regularization,
            self.dissipation,
            self.r_norm[0],
            self.r_norm[1],
            self.total,
        ];
        e.extend(self.dt_membrane.iter().flatten());
        e.extend(self.dt_gating.iter().flatten());
        e.extend(self.dt_gap.iter());
        e
    }
}

/// Energy terms of a state; `prev` (with its time) enables the ∂_t terms.
pub fn energy(
    op: &BlockOperator,
    model: &IonicModel,
    gap: &GapModel,
    eps: f64,
    delta: f64,
    state: &SystemState,
    prev: Option<&SystemState>,
) -> EnergyReport {
    let u = state.potentials();
    let v = [op.gamma1.jump(&u), op.gamma2.jump(&u)];
    let s = op.gamma12.jump(&u);
    let itf = [&op.gamma1, &op.gamma2];
    let w = [&state.w1, &state.w2];
    let membrane = [0, 1].map(|k| eps * linalg::quad(&itf[k].mass, &v[k]));
    let gating = [0, 1].map(|k| eps * linalg::quad(&itf[k].mass, w[k]));
    let gap_e = eps * linalg::quad(&op.gamma12.mass, &s);
    let regularization = if delta > 0.0 { delta * linalg::quad(&op.regularization_mass, &u) } else { 0.0 };
    let dissipation = linalg::quad(&op.stiffness, &u);
    let ionic = (0..2)
        .map(|k| eps * interface_integral(itf[k], &v[k], &[], |x| model.i_a_tilde(x) * x))
        .sum();
    let r_norm = [0, 1].map(|k| r_norm_pow(itf[k], &v[k], model.r, eps));

    let (mut dt_membrane, mut dt_gating, mut dt_gap) = (None, None, None);
    if let Some(p) = prev {
        let h = state.t - p.t;
        if h > 0.0 {
            let up = p.potentials();
            let vp = [op.gamma1.jump(&up), op.gamma2.jump(&up)];
            let sp = op.gamma12.jump(&up);
            let wp = [&p.w1, &p.w2];
            let rate = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| (x - y) / h).collect() };
            dt_membrane = Some([0, 1].map(|k| eps * linalg::quad(&itf[k].mass, &rate(&v[k], &vp[k]))));
            dt_gating = Some([0, 1].map(|k| eps * linalg::quad(&itf[k].mass, &rate(w[k], wp[k]))));
            dt_gap = Some(eps * linalg::quad(&op.gamma12.mass, &rate(&s, &sp)));
        }
    }
    let total = 0.5
        * (membrane[0] + membrane[1] + model.alpha4() * (gating[0] + gating[1]) + gap.c_ratio * gap_e + regularization);
    EnergyReport {
        membrane,
        gating,
        gap: gap_e,
        regularization,
        dissipation,
        ionic,
        r_norm,
        dt_membrane,
        dt_gating,
        dt_gap,
        total,
    }
}

/// ‖v‖₂² ≤ |Γ|^{1−2/r} ‖v‖_r² (Hölder) for every membrane; returns the worst
/// relative slack, which must be ≥ 0 up to rounding.
pub fn power_mean_slack(op: &BlockOperator, state: &SystemState, r: f64) -> f64 {
    let u = state.potentials();
    let mut worst = f64::INFINITY;
    for itf in [&op.gamma1, &op.gamma2] {
        let v = itf.jump(&u);
        let l2 = linalg::quad(&itf.mass, &v);
        let exact_l2 = interface_integral(itf, &v, &[], |x| x * x);
        let lr = interface_integral(itf, &v, &[0.0], |x| x.abs().powf(r)).powf(2.0 / r);
        let rhs = itf.measure().powf(1.0 - 2.0 / r) * lr;
        let scale = rhs.max(f64::MIN_POSITIVE);
        worst = worst.min((rhs - exact_l2) / scale);
        debug_assert!((l2 - exact_l2).abs() <= 1e-10 * (1.0 + l2));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_quadrature_is_exact_for_quartics_with_kink() {
        // ∫_0^1 |2s − 1|^4 ds = 1/5
        let q = segment_integral(-1.0, 1.0, 1.0, &[0.0], |x| x.abs().powi(4));
        assert!((q - 0.2).abs() < 1e-15);
        // ∫_0^2 |s − 0.5|^3 ds over v from −0.5 to 1.5: (0.5^4 + 1.5^4)/4
        let q = segment_integral(-0.5, 1.5, 2.0, &[0.0], |x| x.abs().powi(3));
        assert!((q - (0.0625 + 5.0625) / 4.0 / 2.0 * 2.0).abs() < 1e-14);
    }
}
