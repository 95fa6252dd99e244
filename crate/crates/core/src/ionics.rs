//! FitzHugh–Nagumo membrane kinetics, the passive gap-junction current and a
//! sampling certifier for the structural assumptions the analysis relies on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the ionic current enters the scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IonicMode {
    /// Full cubic current with linear gating.
    #[default]
    Fhn,
    /// I_a(v) replaced by β1·v, no gating coupling (H ≡ 0, I_b ≡ 0).
    /// The scheme is a discrete gradient flow in this mode.
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IonicModel {
    pub a1: f64,
    pub b1: f64,
    pub rho: f64,
    pub theta: f64,
    pub r: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub mode: IonicMode,
}

impl Default for IonicModel {
    fn default() -> Self {
        Self::fhn(1.0, 1.0, -1.0, 0.25)
    }
}

impl IonicModel {
    /// FitzHugh–Nagumo with r = 4 and the default monotonising shift.
    pub fn fhn(a1: f64, b1: f64, rho: f64, theta: f64) -> Self {
        Self {
            a1,
            b1,
            rho,
            theta,
            r: 4.0,
            beta1: default_beta1(rho, theta),
            beta2: 0.0,
            mode: IonicMode::Fhn,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a1 > 0.0
            && self.b1 > 0.0
            && self.rho < 0.0
            && self.theta > 0.0
            && self.theta < 1.0
            && self.r > 2.0
            && self.beta1 >= 0.0
            && self.beta2 >= 0.0
            && [self.a1, self.b1, self.rho, self.theta, self.r, self.beta1, self.beta2]
                .iter()
                .all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!(
                "need a1 > 0, b1 > 0, rho < 0, theta in (0,1), r > 2, beta1, beta2 >= 0; got {self:?}"
            )))
        }
    }

    pub fn i_a(&self, v: f64) -> f64 {
        match self.mode {
            IonicMode::Fhn => self.rho * v * (1.0 - v) * (v - self.theta),
            IonicMode::Linear => self.beta1 * v,
        }
    }

    pub fn i_b(&self, w: f64) -> f64 {
        match self.mode {
            IonicMode::Fhn => -self.rho * w,
            IonicMode::Linear => 0.0,
        }
    }

    pub fn h(&self, v: f64, w: f64) -> f64 {
        match self.mode {
            IonicMode::Fhn => self.a1 * v - self.b1 * w,
            IonicMode::Linear => 0.0,
        }
    }

    /// (I_a, I_b, H) at one point.
    pub fn eval(&self, v: f64, w: f64) -> (f64, f64, f64) {
        (self.i_a(v), self.i_b(w), self.h(v, w))
    }

    /// Ĩ_a(v) = I_a(v) + β1 v + β2.
    pub fn i_a_tilde(&self, v: f64) -> f64 {
        self.i_a(v) + self.beta1 * v + self.beta2
    }

    pub fn alpha4(&self) -> f64 {
        -self.rho / self.a1
    }

    /// Coefficient of w² in I_b(w) v − α4 H(v,w) w.
    pub fn alpha5(&self) -> f64 {
        -self.rho * self.b1 / self.a1
    }

    /// Constant and cubic coefficients of the Young-inequality bound
    /// |I_a(v)| ≤ c0 + c3 |v|³.
    pub fn growth_coefficients(&self) -> (f64, f64) {
        let t = self.theta;
        let c0 = (2.0 * t / 3.0 + (1.0 + t) / 3.0) * self.rho.abs();
        let c3 = (t / 3.0 + 2.0 * (1.0 + t) / 3.0 + 1.0) * self.rho.abs();
        (c0, c3)
    }

    pub fn alpha1(&self) -> f64 {
        let (c0, c3) = self.growth_coefficients();
        c0.max(c3)
    }

    pub fn alpha2(&self) -> f64 {
        self.rho.abs()
    }

    pub fn alpha3(&self) -> f64 {
        self.a1.max(self.b1)
    }

    /// One gating step from w with v frozen.
    pub fn gating_step(&self, v: f64, w: f64, dt: f64, scheme: GatingScheme) -> f64 {
        if self.mode == IonicMode::Linear {
            return w;
        }
        match scheme {
            GatingScheme::ExplicitEuler => w + dt * self.h(v, w),
            GatingScheme::ExactLinear => {
                let decay = (-self.b1 * dt).exp();
                w * decay + self.a1 * v / self.b1 * (1.0 - decay)
            }
        }
    }
}

/// β1 = |ρ|(1+θ)²/3 makes Ĩ_a' ≥ |ρ|θ > 0.
pub fn default_beta1(rho: f64, theta: f64) -> f64 {
    rho.abs() * (1.0 + theta).powi(2) / 3.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GatingScheme {
    #[default]
    ExplicitEuler,
    ExactLinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapModel {
    pub g_gap: f64,
    pub c_ratio: f64,
}

impl Default for GapModel {
    fn default() -> Self {
        Self { g_gap: 1.0, c_ratio: 0.5 }
    }
}

impl GapModel {
    pub fn validate(&self) -> Result<()> {
        if self.g_gap > 0.0 && self.c_ratio > 0.0 && self.g_gap.is_finite() && self.c_ratio.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("need g_gap > 0 and c_ratio > 0, got {self:?}")))
        }
    }

    pub fn current(&self, s: f64) -> f64 {
        self.g_gap * s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionRecord {
    pub name: String,
    pub domain: String,
    pub worst_margin: f64,
    pub constant: f64,
    pub pass: bool,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub records: Vec<AssumptionRecord>,
    /// Numerically extracted coefficient c with E(v,w) = c·w².
    pub e_coefficient: f64,
    /// Largest deviation of E(v,w)/w² from `e_coefficient` over the samples.
    pub e_coefficient_spread: f64,
    /// The coefficient ρ/a1 as printed alongside the FHN model, for contrast.
    pub e_coefficient_printed: f64,
    pub fitted_c: f64,
    /// Informational: min of |I_a(v)| − |v|^{r−1}/α1, negative at the roots of the cubic.
    pub lower_growth_margin: f64,
}

pub const CERTIFY_TOL: f64 = 1e-12;

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn check(&self, prefix: &str) -> Option<&AssumptionRecord> {
        self.records.iter().find(|r| r.name.starts_with(prefix))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("assumption,worst_margin,constant,pass\n");
        for r in &self.records {
            s.push_str(&format!("{},{:e},{:e},{}\n", r.name, r.worst_margin, r.constant, r.pass));
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("{:<28} {:>14} {:>14}  {}\n", "assumption", "worst margin", "constant", "result");
        for r in &self.records {
            s.push_str(&format!(
                "{:<28} {:>14.6e} {:>14.6e}  {}  [{}] {}\n",
                r.name,
                r.worst_margin,
                r.constant,
                if r.pass { "pass" } else { "FAIL" },
                r.domain,
                r.note
            ));
        }
        s.push_str(&format!(
            "E(v,w) = {:.12} w^2 (spread {:.3e}); printed coefficient rho/a1 = {}\n",
            self.e_coefficient, self.e_coefficient_spread, self.e_coefficient_printed
        ));
        s.push_str(&format!(
            "lower growth bound |I_a| >= |v|^(r-1)/alpha1: worst margin {:.6e} (not certified)\n",
            self.lower_growth_margin
        ));
        s
    }
}

fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if k + 1 == n {
                range.1
            } else {
                range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Checks the growth, coupling and monotonicity assumptions on a sample grid.
///
/// (i) upper growth bounds of I_a and I_b, (ii) linear growth of H,
/// (iii) E(v,w) ≥ α5 w², (iv) strict monotonicity of Ĩ_a together with the
/// quadratic lower bound with a fitted constant.
pub fn certify_assumptions(
    model: &IonicModel,
    v_range: (f64, f64),
    w_range: (f64, f64),
    samples: usize,
) -> Result<AssumptionReport> {
    if samples < 2 || !(v_range.0 < v_range.1) || !(w_range.0 < w_range.1) {
        return Err(Error::Contract("certify_assumptions needs samples >= 2 and nonempty ranges".into()));
    }
    let mut fhn = model.clone();
    fhn.mode = IonicMode::Fhn;
    let m = &fhn;
    let vs = linspace(v_range, samples);
    let ws = linspace(w_range, samples);
    let dom_v = format!("v in [{}, {}]", v_range.0, v_range.1);
    let dom_vw = format!("{dom_v}, w in [{}, {}]", w_range.0, w_range.1);
    let r = m.r;

    // (i)
    let (c0, c3) = m.growth_coefficients();
    let a1c = m.alpha1();
    let mut remark = f64::INFINITY;
    let mut upper = f64::INFINITY;
    let mut lower = f64::INFINITY;
    for &v in &vs {
        let ia = m.i_a(v).abs();
        remark = remark.min(c0 + c3 * v.abs().powi(3) - ia);
        upper = upper.min(a1c * (v.abs().powf(r - 1.0) + 1.0) - ia);
        lower = lower.min(ia - v.abs().powf(r - 1.0) / a1c);
    }
    let mut ib = f64::INFINITY;
    for &w in &ws {
        ib = ib.min(m.alpha2() * (w.abs() + 1.0) - m.i_b(w).abs());
    }
    let growth = remark.min(upper).min(ib);

    // (ii), (iii)
    let a3 = m.alpha3();
    let a4 = m.alpha4();
    let a5 = m.alpha5();
    let mut hmargin = f64::INFINITY;
    let mut emargin = f64::INFINITY;
    let mut ratios = Vec::new();
    for &v in &vs {
        for &w in &ws {
            hmargin = hmargin.min(a3 * (v.abs() + w.abs() + 1.0) - m.h(v, w).abs());
            let e = m.i_b(w) * v - a4 * m.h(v, w) * w;
            emargin = emargin.min(e - a5 * w * w);
            if w.abs() > 1e-3 {
                ratios.push(e / (w * w));
            }
        }
    }
    ratios.sort_by(f64::total_cmp);
    let e_coef = if ratios.is_empty() { f64::NAN } else { ratios[ratios.len() / 2] };
    let spread = ratios.iter().map(|q| (q - e_coef).abs()).fold(0.0, f64::max);
    let e_scale = 1.0 + e_coef.abs();

    // (iv)
    let it: Vec<f64> = vs.iter().map(|&v| m.i_a_tilde(v)).collect();
    let mono = it.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
    let mut fitted_c = 0.0f64;
    if mono > 0.0 {
        for i in 0..vs.len() {
            for j in 0..i {
                let dv = vs[i] - vs[j];
                let lhs = (it[i] - it[j]) * dv;
                let rhs = (1.0 + vs[i].abs() + vs[j].abs()).powf(r - 2.0) * dv * dv;
                fitted_c = fitted_c.max(rhs / lhs);
            }
        }
    }
    let quad_margin = if mono > 0.0 {
        let mut q = f64::INFINITY;
        for i in 0..vs.len() {
            for j in 0..i {
                let dv = vs[i] - vs[j];
                let lhs = (it[i] - it[j]) * dv;
                let rhs = (1.0 + vs[i].abs() + vs[j].abs()).powf(r - 2.0) * dv * dv / fitted_c;
                q = q.min((lhs - rhs) / (1.0 + rhs));
            }
        }
        q
    } else {
        f64::NEG_INFINITY
    };
    let mono_margin = mono.min(quad_margin);

    let rec = |name: &str, domain: &str, margin: f64, constant: f64, pass: bool, note: String| AssumptionRecord {
        name: name.into(),
        domain: domain.into(),
        worst_margin: margin,
        constant,
        pass,
        note,
    };
    let records = vec![
        rec(
            "i_growth",
            &dom_vw,
            growth,
            a1c,
            growth >= -CERTIFY_TOL,
            format!("|I_a| <= {c0:.6} + {c3:.6}|v|^3, |I_b| <= alpha2(|w|+1) with alpha2 = {}", m.alpha2()),
        ),
        rec(
            "ii_h_linear_growth",
            &dom_vw,
            hmargin,
            a3,
            hmargin >= -CERTIFY_TOL,
            "|H| <= alpha3(|v|+|w|+1)".into(),
        ),
        rec(
            "iii_coupling_coercivity",
            &dom_vw,
            emargin,
            a5,
            emargin >= -CERTIFY_TOL * e_scale && a5 > 0.0 && spread <= 1e-9 * e_scale,
            format!("E(v,w) >= alpha5 w^2 with alpha4 = {a4}, alpha5 = -rho b1/a1"),
        ),
        rec(
            "iv_monotone_tilde_i_a",
            &dom_v,
            mono_margin,
            fitted_c,
            mono > 0.0 && quad_margin >= -CERTIFY_TOL,
            format!("beta1 = {}, beta2 = {}; quadratic bound with fitted C", m.beta1, m.beta2),
        ),
    ];
    Ok(AssumptionReport {
        records,
        e_coefficient: e_coef,
        e_coefficient_spread: spread,
        e_coefficient_printed: m.rho / m.a1,
        fitted_c,
        lower_growth_margin: lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_values() {
        let m = IonicModel::fhn(1.0, 1.0, -1.0, 0.25);
        assert_eq!(m.eval(0.0, 0.0), (0.0, 0.0, 0.0));
        assert_eq!(m.i_a(0.25), 0.0);
        assert_eq!(m.i_a(0.5), -0.0625);
        assert_eq!(m.i_b(2.0), 2.0);
        assert_eq!(m.h(1.0, 3.0), -2.0);
    }

    #[test]
    fn gap_current() {
        let g = GapModel { g_gap: 2.0, c_ratio: 0.5 };
        assert_eq!(g.current(0.0), 0.0);
        assert_eq!(g.current(1.5), 3.0);
        assert_eq!(g.current(-1.5), -3.0);
    }

    #[test]
    fn structural_constants() {
        let m = IonicModel::fhn(1.0, 1.0, -1.0, 0.25);
        assert_eq!(m.alpha4(), 1.0);
        assert_eq!(m.alpha5(), 1.0);
        let (c0, c3) = m.growth_coefficients();
        assert!((c0 - (0.5 / 3.0 + 1.25 / 3.0)).abs() < 1e-15);
        assert!((c3 - (0.25 / 3.0 + 2.5 / 3.0 + 1.0)).abs() < 1e-15);
        assert!((m.beta1 - 1.5625 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exact_gating_matches_closed_form() {
        let m = IonicModel::fhn(0.7, 1.3, -1.0, 0.25);
        let (v, w0, dt) = (0.4, 0.1, 0.05);
        let w = m.gating_step(v, w0, dt, GatingScheme::ExactLinear);
        let winf = 0.7 * v / 1.3;
        assert!((w - (winf + (w0 - winf) * (-1.3f64 * dt).exp())).abs() < 1e-15);
    }

    #[test]
    fn default_model_certifies() {
        let rep = certify_assumptions(&IonicModel::default(), (-10.0, 10.0), (-10.0, 10.0), 201).unwrap();
        assert!(rep.all_pass(), "{}", rep.to_table());
        assert!((rep.e_coefficient - 1.0).abs() < 1e-12);
        assert_eq!(rep.e_coefficient_printed, -1.0);
        assert!(rep.lower_growth_margin < 0.0);
    }

    #[test]
    fn unshifted_cubic_fails_monotonicity() {
        let mut m = IonicModel::default();
        m.beta1 = 0.0;
        let rep = certify_assumptions(&m, (-10.0, 10.0), (-10.0, 10.0), 201).unwrap();
        assert!(!rep.check("iv").unwrap().pass);
        assert!(rep.check("i_").unwrap().pass);
    }
}
