//! VT refinement applied on top of a finished CE or BCD design.

use serde::{Deserialize, Serialize};

use crate::design::{DesignPoint, Evaluator};
use crate::error::Result;
use crate::phase::vt::{vt_select_multi, vt_select_single, vt_terms, VtFallback, VtTerms};
use crate::phase::{PhaseCodebook, PhaseConfig};

/// VT selection under the weights of `design` (symbol 0).
pub fn vt_candidate(design: &DesignPoint, theta: f64, eve_theta: f64, cb: &PhaseCodebook, fallback: VtFallback) -> PhaseConfig {
    let set = &design.channels;
    let w = design.w0();
    let users: Vec<VtTerms> = (0..set.k_users).map(|k| vt_terms(set, w, k)).collect();
    if users.len() == 1 {
        return vt_select_single(&users[0], theta, cb);
    }
    let eve = vt_terms(set, w, set.eve());
    let thetas = vec![theta; users.len()];
    vt_select_multi(&users, &thetas, cb, fallback, Some((&eve, eve_theta)))
}

/// How the VT candidate is scored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HybridMode {
    /// Placement and weights of the base design kept; only the phases change.
    FixedWeights,
    /// Fixed weights plus the smallest correction that restores the eavesdropper target.
    EveRestored,
    /// Placement and amplitudes kept; weights re-solved for the new channels.
    Reweight,
    /// Full placement and weight redesign under the candidate phases.
    Redesign,
}

#[derive(Clone, Debug)]
pub struct HybridOutcome {
    pub design: DesignPoint,
    pub accepted: bool,
    pub candidate_objective: f64,
    pub candidate_sum_rate: f64,
}

/// Keeps the VT candidate only if it matches or beats the base in objective and sum rate.
pub fn hybrid_vt(eval: &Evaluator, base: &DesignPoint, fallback: VtFallback, mode: HybridMode) -> Result<HybridOutcome> {
    let c = &eval.params.constellation;
    let cand_cfg = vt_candidate(base, c.user_phase(0), c.eve_phases[0], &eval.codebook, fallback);
    if cand_cfg == base.config {
        return Ok(HybridOutcome {
            candidate_objective: base.objective,
            candidate_sum_rate: base.sum_rate(),
            design: base.clone(),
            accepted: true,
        });
    }
    let cand = match mode {
        HybridMode::FixedWeights => Ok(eval.with_fixed_weights(base, &cand_cfg)),
        HybridMode::EveRestored => eval.with_eve_restored(base, &cand_cfg),
        HybridMode::Reweight => eval.with_reweighting(base, &cand_cfg),
        HybridMode::Redesign => eval.evaluate(&cand_cfg, true),
    };
    let cand = match cand {
        Ok(d) => d,
        Err(_) => {
            return Ok(HybridOutcome {
                design: base.clone(),
                accepted: false,
                candidate_objective: f64::NEG_INFINITY,
                candidate_sum_rate: f64::NEG_INFINITY,
            })
        }
    };
    let (co, cr) = (cand.objective, cand.sum_rate());
    let ok = co >= base.objective && cr >= base.sum_rate() && (cand.feasible || !base.feasible);
    Ok(HybridOutcome {
        design: if ok { cand } else { base.clone() },
        accepted: ok,
        candidate_objective: co,
        candidate_sum_rate: cr,
    })
}
