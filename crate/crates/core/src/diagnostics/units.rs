//! Physical units to the dimensionless scaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ε quoted in the literature for the reference values below.
pub const QUOTED_EPSILON: f64 = 7.1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalUnits {
    /// Microscopic length ℓ (cm).
    pub ell_mic: f64,
    /// Membrane resistance R_m (Ω·cm²).
    pub r_m: f64,
    /// Membrane capacitance C_m (μF/cm²).
    pub c_m: f64,
    /// Conductivity normalization λ (mS/cm).
    pub lambda: f64,
    /// Potential scale δv (mV).
    pub delta_v: f64,
    /// Gating scale δw.
    pub delta_w: f64,
    /// Gap-junction capacitance C₁₂ (μF/cm²); defaults to C_m.
    #[serde(default)]
    pub c_12: Option<f64>,
}

impl Default for PhysicalUnits {
    fn default() -> Self {
        Self {
            ell_mic: 0.01,
            r_m: 1.0e4,
            c_m: 1.0,
            lambda: 5.0,
            delta_v: 100.0,
            delta_w: 1.0,
            c_12: None,
        }
    }
}

impl PhysicalUnits {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.ell_mic, self.r_m, self.c_m, self.lambda, self.delta_v, self.delta_w, self.c_12.unwrap_or(1.0)];
        if vals.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::Config(format!("physical units must be positive: {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NondimReport {
    /// Macroscopic length L = √(R_m λ ℓ) (cm).
    pub length_cm: f64,
    /// τ_m = R_m C_m (ms).
    pub tau_m_ms: f64,
    /// ε = ℓ / L.
    pub epsilon: f64,
    /// √(ℓ / (R_m λ)).
    pub epsilon_sqrt_form: f64,
    /// L / (R_m λ).
    pub epsilon_ratio_form: f64,
    /// Relative gap between the two forms above.
    pub identity_rel_err: f64,
    pub quoted_epsilon: f64,
    /// epsilon / quoted_epsilon.
    pub quoted_ratio: f64,
    /// True when the computed ε and the quoted one differ by more than 1%.
    pub quoted_mismatch: bool,
    /// Multiplies a dimensionless ionic or applied current: R_m / δv (Ω·cm²/mV).
    pub ionic_current_scale: f64,
    /// Multiplies a dimensionless gating rate: τ_m / δw (ms).
    pub gating_scale: f64,
    /// Multiplies a dimensionless gap current: R_m C_m / (δv C₁₂).
    pub gap_current_scale: f64,
}

impl NondimReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("L            = {:.6e} cm\n", self.length_cm));
        s.push_str(&format!("tau_m        = {:.6e} ms\n", self.tau_m_ms));
        s.push_str(&format!("epsilon      = {:.6e}  (ell/L)\n", self.epsilon));
        s.push_str(&format!("sqrt form    = {:.6e}  (sqrt(ell/(R_m lambda)))\n", self.epsilon_sqrt_form));
        s.push_str(&format!("ratio form   = {:.6e}  (L/(R_m lambda))\n", self.epsilon_ratio_form));
        s.push_str(&format!("identity     : rel err {:.3e}\n", self.identity_rel_err));
        s.push_str(&format!(
            "quoted value = {:.3e}; computed/quoted = {:.4}{}\n",
            self.quoted_epsilon,
            self.quoted_ratio,
            if self.quoted_mismatch { "  MISMATCH (flagged)" } else { "" }
        ));
        s.push_str(&format!("current scale R_m/dv          = {:.6e}\n", self.ionic_current_scale));
        s.push_str(&format!("gating scale  tau_m/dw        = {:.6e} ms\n", self.gating_scale));
        s.push_str(&format!("gap scale     R_m C_m/(dv C12) = {:.6e}\n", self.gap_current_scale));
        s
    }

    pub fn to_csv(&self) -> String {
        let rows = [
            ("length_cm", self.length_cm),
            ("tau_m_ms", self.tau_m_ms),
            ("epsilon", self.epsilon),
            ("epsilon_sqrt_form", self.epsilon_sqrt_form),
            ("epsilon_ratio_form", self.epsilon_ratio_form),
            ("identity_rel_err", self.identity_rel_err),
            ("quoted_epsilon", self.quoted_epsilon),
            ("quoted_ratio", self.quoted_ratio),
            ("ionic_current_scale", self.ionic_current_scale),
            ("gating_scale", self.gating_scale),
            ("gap_current_scale", self.gap_current_scale),
        ];
        let mut s = String::from("quantity,value\n");
        for (k, v) in rows {
            s.push_str(&format!("{k},{v:.12e}\n"));
        }
        s.push_str(&format!("quoted_mismatch,{}\n", self.quoted_mismatch));
        s
    }
}

/// λ is converted from mS/cm to S/cm so that R_m λ is a length in cm.
pub fn nondimensionalize(units: &PhysicalUnits) -> Result<NondimReport> {
    units.validate()?;
    let lambda_s = units.lambda * 1e-3;
    let rl = units.r_m * lambda_s;
    let length = (rl * units.ell_mic).sqrt();
    // Ω·cm² · μF/cm² = 1e-6 s
    let tau_m_ms = units.r_m * units.c_m * 1e-3;
    let epsilon = units.ell_mic / length;
    let sqrt_form = (units.ell_mic / rl).sqrt();
    let ratio_form = length / rl;
    let identity_rel_err = (sqrt_form - ratio_form).abs() / sqrt_form;
    let quoted_ratio = epsilon / QUOTED_EPSILON;
    let c12 = units.c_12.unwrap_or(units.c_m);
    let report = NondimReport {
        length_cm: length,
        tau_m_ms,
        epsilon,
        epsilon_sqrt_form: sqrt_form,
        epsilon_ratio_form: ratio_form,
        identity_rel_err,
        quoted_epsilon: QUOTED_EPSILON,
        quoted_ratio,
        quoted_mismatch: (quoted_ratio - 1.0).abs() > 0.01,
        ionic_current_scale: units.r_m / units.delta_v,
        gating_scale: tau_m_ms / units.delta_w,
        gap_current_scale: units.r_m * units.c_m / (units.delta_v * c12),
    };
    log::info!("ell/(R_m lambda) identity: relative error {:.3e}", identity_rel_err);
    if report.quoted_mismatch {
        log::warn!(
            "computed epsilon {:.4e} differs from the quoted {:.1e} by a factor {:.3}",
            epsilon,
            QUOTED_EPSILON,
            quoted_ratio
        );
    }
    Ok(report)
}
