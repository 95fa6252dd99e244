//! Trajectory monitors for the uniform a-priori bounds.
//!
//! Time integrals use the right-endpoint rule over stored snapshots and time
//! derivatives use backward differences between consecutive snapshots.

use serde::Serialize;

use crate::assembly::BlockOperator;
use crate::diagnostics::energy::{interface_integral, r_norm_pow};
use crate::ionics::IonicModel;
use crate::linalg;
use crate::stepper::SystemState;

/// Duality inequality at one snapshot and membrane.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityCheck {
    pub t: f64,
    pub membrane: usize,
    /// ‖ε^{(r−1)/r} I_a(v)‖_{L^{r'}(Γ)}
    pub lhs: f64,
    /// α1 (‖ε^{1/r} v‖_{L^r}^{r−1} + ε^{(r−1)/r} |Γ|^{(r−1)/r})
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AprioriReport {
    pub horizon: f64,
    pub samples: usize,
    /// Σ sup ε‖vᵏ‖² + Σ sup ε‖wᵏ‖² + sup ε‖s‖².
    pub e_vw: f64,
    /// ‖u_i¹‖_{L²H¹}, ‖u_i²‖_{L²H¹}, ‖u_e‖_{L²H¹}.
    pub e_u_parts: [f64; 3],
    pub e_u: f64,
    /// Σ ‖ε^{1/r} vᵏ‖_{L^r(Γ_T)}.
    pub e_vr: f64,
    /// Σ ‖ε^{(r−1)/r} I_a(vᵏ)‖_{L^{r'}(Γ_T)}.
    pub e_ia: f64,
    /// Σ ε‖∂_t vᵏ‖² + Σ ε‖∂_t wᵏ‖² + ε‖∂_t s‖² integrated in time.
    pub e_dtv: f64,
    pub duality: Vec<DualityCheck>,
}

impl AprioriReport {
    pub fn duality_pass(&self) -> bool {
        self.duality.iter().all(|d| d.pass)
    }

    /// The four monitors in a fixed order: e_vw, e_u, e_vr, e_ia.
    pub fn headline(&self) -> [(&'static str, f64); 5] {
        [
            ("e_vw", self.e_vw),
            ("e_u", self.e_u),
            ("e_vr", self.e_vr),
            ("e_ia", self.e_ia),
            ("e_dtv", self.e_dtv),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("monitor,value\n");
        for (k, v) in self.headline() {
            s.push_str(&format!("{k},{v:.12e}\n"));
        }
        s
    }
}

/// Monitors over snapshots at uniform spacing (`snapshots[0]` is t = 0).
pub fn apriori_monitor(op: &BlockOperator, model: &IonicModel, eps: f64, snapshots: &[SystemState]) -> AprioriReport {
    let mut rep = AprioriReport {
        samples: snapshots.len(),
        ..Default::default()
    };
    let Some(first) = snapshots.first() else {
        return rep;
    };
    rep.horizon = snapshots.last().unwrap().t - first.t;
    let r = model.r;
    let rp = r / (r - 1.0);
    let alpha1 = model.alpha1();
    let itf = [&op.gamma1, &op.gamma2];
    let h1 = linalg::lincomb(&[(1.0, &op.volume_mass), (1.0, &op.gradient_gram)]);
    let blocks = [
        crate::geometry::Subdomain::I1,
        crate::geometry::Subdomain::I2,
        crate::geometry::Subdomain::E,
    ];
    let roots = model_roots(model);

    let mut sup_v = [0.0f64; 2];
    let mut sup_w = [0.0f64; 2];
    let mut sup_s = 0.0f64;
    let mut int_h1 = [0.0f64; 3];
    let mut int_r = [0.0f64; 2];
    let mut int_ia = [0.0f64; 2];
    let mut int_dt = 0.0f64;
    let mut prev: Option<(&SystemState, [Vec<f64>; 2], Vec<f64>)> = None;

    for snap in snapshots {
        let u = snap.potentials();
        let v = [op.gamma1.jump(&u), op.gamma2.jump(&u)];
        let s = op.gamma12.jump(&u);
        let w = [&snap.w1, &snap.w2];
        for k in 0..2 {
            sup_v[k] = sup_v[k].max(eps * linalg::quad(&itf[k].mass, &v[k]));
            sup_w[k] = sup_w[k].max(eps * linalg::quad(&itf[k].mass, w[k]));
        }
        sup_s = sup_s.max(eps * linalg::quad(&op.gamma12.mass, &s));

        for k in 0..2 {
            let lr = r_norm_pow(itf[k], &v[k], r, eps);
            let ia = eps * interface_integral(itf[k], &v[k], &roots, |x| model.i_a(x).abs().powf(rp));
            let lhs = ia.powf(1.0 / rp);
            let rhs = alpha1 * (lr.powf((r - 1.0) / r) + (eps * itf[k].measure()).powf((r - 1.0) / r));
            rep.duality.push(DualityCheck {
                t: snap.t,
                membrane: k + 1,
                lhs,
                rhs,
                pass: lhs <= rhs * (1.0 + 1e-12),
            });
            if let Some((p, _, _)) = &prev {
                let h = snap.t - p.t;
                int_r[k] += h * lr;
                int_ia[k] += h * ia;
            }
        }
        if let Some((p, vp, sp)) = &prev {
            let h = snap.t - p.t;
            for (b, d) in blocks.iter().enumerate() {
                let mut masked = vec![0.0; u.len()];
                let range = op.layout.block_range(*d);
                masked[range.clone()].copy_from_slice(&u[range]);
                int_h1[b] += h * linalg::quad(&h1, &masked);
            }
            let rate = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| (x - y) / h).collect() };
            let mut dt = 0.0;
            for k in 0..2 {
                dt += eps * linalg::quad(&itf[k].mass, &rate(&v[k], &vp[k]));
                let wp = if k == 0 { &p.w1 } else { &p.w2 };
                dt += eps * linalg::quad(&itf[k].mass, &rate(w[k], wp));
            }
            dt += eps * linalg::quad(&op.gamma12.mass, &rate(&s, sp));
            int_dt += h * dt;
        }
        prev = Some((snap, v, s));
    }

    rep.e_vw = sup_v.iter().sum::<f64>() + sup_w.iter().sum::<f64>() + sup_s;
    rep.e_u_parts = int_h1.map(f64::sqrt);
    rep.e_u = rep.e_u_parts.iter().sum();
    rep.e_vr = int_r.iter().map(|x| x.powf(1.0 / r)).sum();
    rep.e_ia = int_ia.iter().map(|x| x.powf(1.0 / rp)).sum();
    rep.e_dtv = int_dt;
    rep
}

/// Zeros of I_a, where |I_a|^{r'} has kinks.
fn model_roots(model: &IonicModel) -> Vec<f64> {
    match model.mode {
        crate::ionics::IonicMode::Fhn => vec![0.0, model.theta, 1.0],
        crate::ionics::IonicMode::Linear => vec![0.0],
    }
}

/// Largest relative spread |a − b| / max(|a|, |b|) per monitor.
pub fn relative_spread(a: &AprioriReport, b: &AprioriReport) -> Vec<(&'static str, f64)> {
    a.headline()
        .iter()
        .zip(b.headline())
        .map(|(&(name, x), (_, y))| {
            let scale = x.abs().max(y.abs());
            (name, if scale > 0.0 { (x - y).abs() / scale } else { 0.0 })
        })
        .collect()
}
