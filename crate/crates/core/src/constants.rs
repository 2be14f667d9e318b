//! Every numeric constant appearing in the parameter formulas.
//!
//! The `paper` profile carries the constants exactly as they appear in the
//! analysis. They are astronomically large at desk scale (most reveal
//! probabilities exceed one), so the `desk` profile substitutes small
//! multipliers that keep the same functional form.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Paper,
    Desk,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Paper => "paper",
            Profile::Desk => "desk",
        })
    }
}

impl FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(format!("unknown profile `{other}` (expected paper or desk)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub profile: Profile,
    /// Probabilities above 1 are capped (and logged) instead of rejected.
    pub clamp_probabilities: bool,

    /// `C_pow` in the power-iteration budget `C_pow·log((m+n)/δ)/ε`.
    pub power_iterations: f64,
    /// Relative slack in the residual certificate.
    pub cert_tol: f64,

    /// `t_max = ceil(c·log(mnτ²/(4Δ²)))` in Filter.
    pub filter_rounds: f64,
    /// `γ_drop = c·γ·log m` in Filter.
    pub filter_final_drop: f64,

    /// Filter sampling rate multiplier in Descent (`120000`).
    pub descent_filter_p: f64,
    /// Reveal rate multiplier for the update sample in Descent (`15`).
    pub descent_q: f64,
    /// Truncation level multiplier in Descent.
    pub descent_tau: f64,
    /// `ρ = Δ/(c·ℓ·sqrt((γ+γ_add)n))`.
    pub descent_rho: f64,
    /// Filter is run with closeness `c·Δ`.
    pub descent_filter_delta: f64,
    /// Accuracy of the top-k subspace inside Descent.
    pub descent_power_eps: f64,

    /// `γ_add = α/max(c₁K²log m, c₂ℓ²K²)` in partial completion.
    pub pmc_gamma_log: f64,
    pub pmc_gamma_ell: f64,

    /// `t_max` multiplier in Sparsify.
    pub sparsify_rounds: f64,

    /// Fix: sampling rate for Sparsify.
    pub fix_p: f64,
    /// Fix: Sparsify truncation level `c·sqrt(15μr log m)/(αβn)·Δ`.
    pub fix_tau: f64,
    /// Fix: Sparsify closeness `c·Δ`.
    pub fix_sparsify_delta: f64,
    /// Fix: Sparsify `γ = α/(c·log m)`.
    pub fix_sparsify_gamma: f64,
    /// Fix: Sparsify `γ_drop = α/c`.
    pub fix_sparsify_drop: f64,
    /// Fix: trial count `K = ceil(c·log(6/δ))`.
    pub fix_trials: f64,
    /// Fix: optional override of the trial count.
    pub fix_trials_override: Option<usize>,
    /// Fix: Representative sampling rate `c·μr⋆/(β²n)·log n`.
    pub fix_q: f64,
    /// Fix: Complete sampling rate `c·r⋆/(αβ²n)·log n`.
    pub fix_q_complete: f64,
    /// Fix: Representative threshold `φ = c·log m/(β√n)·Δ`.
    pub fix_phi: f64,
    /// Fix: column-stage representative error `c·μr⋆ log r⋆/(β³√n)·Δ`.
    pub fix_tilde_col: f64,
    /// Fix: column-stage aggregate radius `c·r⋆√(log r⋆)/β⁵·Δ`.
    pub fix_agg_col: f64,
    /// Fix: row-stage representative error `c·r⋆√(log r⋆)/β⁵·Δ`.
    pub fix_tilde_row: f64,
    /// Fix: row-stage aggregate radius `c·r⋆√(r⋆ log r⋆)/β⁸·Δ`.
    pub fix_agg_row: f64,
    /// Fix: noise level handed to Complete is `Δ/c`.
    pub fix_complete_noise: f64,

    /// Representative: `t_max = ceil(c·log(mn))`.
    pub rep_rounds: f64,
    /// Representative: `τ = 1/sqrt(c·log r)`.
    pub rep_tau: f64,

    /// Complete: SVD truncation at `c·Δ̃/β`.
    pub complete_threshold: f64,
    /// Complete: leverage cut `‖U_i‖² ≥ c·r′/(αn)`.
    pub complete_leverage: f64,
    /// Complete: AGD budget `ceil((c/β)·log(c₂ r⋆(Δ²+Δ̃²+σ²)n/(pγ²β⁶Δ²)))`.
    pub complete_agd: f64,
    pub complete_agd_log: f64,
    /// Complete: use the exact extremal eigenvalues of each regression Gram
    /// matrix instead of the sampled-design sandwich `[pβ²/8, 2p]`.
    pub complete_exact_curvature: bool,

    /// Aggregate: neighbourhood radius `c·Δ`.
    pub aggregate_radius: f64,
    /// Aggregate: neighbourhood quorum fraction.
    pub aggregate_quorum: f64,
    /// Sketch rows `d = ceil(c·log(m/δ))`.
    pub sketch_rows: f64,
    /// Optional override of `d`.
    pub sketch_rows_override: Option<usize>,

    /// EstimateOpNorm: draws `ceil(c·log(1/δ))`.
    pub opnorm_draws: f64,
    /// EstimateOpNorm: scale `sqrt(c/(pβ²))`.
    pub opnorm_scale: f64,
    /// EstimateOpNorm: rate `c·μr⋆/(β²n)·log n`.
    pub opnorm_p: f64,

    /// Driver: `Δ ← c·Δ/β`.
    pub mc_widen: f64,
    /// Driver: `γ_add = α/(c·log(m/(αβ))ℓ²K²)`.
    pub mc_gamma: f64,
    /// Driver: `C_fix`, the blow-up constant of one Fix call.
    pub c_fix: f64,
    /// Driver: the loop runs while `Δ̃ ≥ c·ℓ·Δ`.
    pub mc_stop: f64,
    /// Driver: safety factor on the loop-iteration cap.
    pub mc_loop_cap: f64,

    /// Error estimator: sample sets `ceil(c·log(mn/δ))`.
    pub est_sets: f64,
    /// Error estimator: rate `c·r/(αβ⁶n)·log(mn)`.
    pub est_p: f64,
    /// Unknown-noise wrapper: accept when `d_est ≤ c·Δ`.
    pub cert_high: f64,
    /// Unknown-noise wrapper: accept only if `d_est ≤ c·(best d_est so far)`.
    pub cert_regress: f64,
    /// Unknown-noise wrapper: fraction of a reused observation pool set
    /// aside for `d_est`.
    pub holdout_fraction: f64,
}

impl ConstantsConfig {
    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Paper => Self::paper(),
            Profile::Desk => Self::desk(),
        }
    }

    pub fn paper() -> Self {
        ConstantsConfig {
            profile: Profile::Paper,
            clamp_probabilities: false,
            power_iterations: 4.0,
            cert_tol: 1e-6,
            filter_rounds: 20.0,
            filter_final_drop: 400.0,
            descent_filter_p: 120_000.0,
            descent_q: 15.0,
            descent_tau: 1.0,
            descent_rho: 20.0,
            descent_filter_delta: 1.1,
            descent_power_eps: 0.1,
            pmc_gamma_log: 800.0,
            pmc_gamma_ell: 2e5,
            sparsify_rounds: 20.0,
            fix_p: 4.8e5,
            fix_tau: 120.0,
            fix_sparsify_delta: 1.05,
            fix_sparsify_gamma: 1800.0,
            fix_sparsify_drop: 9.0,
            fix_trials: 10.0,
            fix_trials_override: None,
            fix_q: 750.0,
            fix_q_complete: 750.0,
            fix_phi: 14.0,
            fix_tilde_col: 88_000.0,
            fix_agg_col: 1e8,
            fix_tilde_row: 4e8,
            fix_agg_row: 1e10,
            fix_complete_noise: 20.0,
            rep_rounds: 40.0,
            rep_tau: 40.0,
            complete_threshold: 2.0,
            complete_leverage: 2.0,
            complete_agd: 4.0,
            complete_agd_log: 3e5,
            complete_exact_curvature: false,
            aggregate_radius: 2.2,
            aggregate_quorum: 0.51,
            sketch_rows: 1000.0,
            sketch_rows_override: None,
            opnorm_draws: 20.0,
            opnorm_scale: 32.0,
            opnorm_p: 30.0,
            mc_widen: 11.0,
            mc_gamma: 9e5,
            c_fix: 4e10,
            mc_stop: 20.0,
            mc_loop_cap: 2.0,
            est_sets: 10.0,
            est_p: 1e4,
            cert_high: 1e12,
            cert_regress: 1.0,
            holdout_fraction: 0.0,
        }
    }

    pub fn desk() -> Self {
        ConstantsConfig {
            profile: Profile::Desk,
            clamp_probabilities: true,
            power_iterations: 1.0,
            cert_tol: 1e-6,
            filter_rounds: 0.04,
            filter_final_drop: 4.0,
            descent_filter_p: 3e-6,
            descent_q: 1e-5,
            descent_tau: 1.0,
            descent_rho: 1.0,
            descent_filter_delta: 1.1,
            descent_power_eps: 0.1,
            pmc_gamma_log: 8.0,
            pmc_gamma_ell: 20.0,
            sparsify_rounds: 1.0,
            fix_p: 1.0,
            fix_tau: 1.0,
            fix_sparsify_delta: 1.05,
            fix_sparsify_gamma: 18.0,
            fix_sparsify_drop: 9.0,
            fix_trials: 10.0,
            fix_trials_override: Some(5),
            fix_q: 0.02,
            fix_q_complete: 1.0,
            fix_phi: 14.0,
            fix_tilde_col: 1.4e-4,
            fix_agg_col: 1.3e-3,
            fix_tilde_row: 1e-5,
            fix_agg_row: 2.4e-5,
            fix_complete_noise: 20.0,
            rep_rounds: 4.0,
            rep_tau: 0.5,
            complete_threshold: 2.0,
            complete_leverage: 2.0,
            complete_agd: 4.0,
            complete_agd_log: 3e5,
            complete_exact_curvature: true,
            aggregate_radius: 2.2,
            aggregate_quorum: 0.51,
            sketch_rows: 1000.0,
            sketch_rows_override: Some(1000),
            opnorm_draws: 20.0,
            opnorm_scale: 32.0,
            opnorm_p: 30.0,
            mc_widen: 1.0,
            mc_gamma: 9e5,
            c_fix: 3.9e-5,
            mc_stop: 1.0,
            mc_loop_cap: 2.0,
            est_sets: 1.0,
            est_p: 2e-4,
            cert_high: 10.0,
            cert_regress: 10.0,
            holdout_fraction: 0.2,
        }
    }

    /// Applies `key=value` overrides, with values parsed as JSON.
    pub fn with_overrides<'a, I>(&self, overrides: I) -> Result<Self, String>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut value = serde_json::to_value(self).map_err(|e| e.to_string())?;
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| format!("override `{item}` is not key=value"))?;
            let obj = value.as_object_mut().expect("config serializes to an object");
            if !obj.contains_key(key) {
                return Err(format!("unknown constant `{key}`"));
            }
            let parsed: serde_json::Value = serde_json::from_str(raw)
                .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            obj.insert(key.to_string(), parsed);
        }
        serde_json::from_value(value).map_err(|e| e.to_string())
    }
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self::desk()
    }
}

/// `ceil` that ignores floating-point dust just above an integer.
pub fn ceil_count(x: f64) -> usize {
    if !(x > 0.0) {
        return 0;
    }
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Natural log floored at `ln 2`, for `log r` factors that vanish at `r = 1`.
pub(crate) fn ln_floor2(x: f64) -> f64 {
    x.max(2.0).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_round_trip() {
        let c = ConstantsConfig::desk()
            .with_overrides(["fix_q=2.5", "fix_trials_override=7"])
            .unwrap();
        assert_eq!(c.fix_q, 2.5);
        assert_eq!(c.fix_trials_override, Some(7));
        assert!(ConstantsConfig::desk().with_overrides(["nope=1"]).is_err());
    }

    #[test]
    fn ceil_count_absorbs_rounding() {
        assert_eq!(ceil_count(1.0 + 1e-13), 1);
        assert_eq!(ceil_count(1.2), 2);
        assert_eq!(ceil_count(0.0), 0);
        assert_eq!(ceil_count(-3.0), 0);
    }
}
