//! Closed-form bounds on the leakage-constrained utility
//! `h_ε = sup { I(Y;U) : I(U;X) <= ε }`.
//!
//! With `C = log(I(X;Y) + 1) + 4`, `α = ε / H(X)` and, per representation
//! `X = (X1, X2)`, `α2 = ε / H(X2)`:
//!
//! ```text
//! U1 = H(Y|X) + ε
//! L1 = H(Y|X) - H(X|Y) + ε
//! L2 = H(Y|X) - α H(X|Y) + ε - (1 - α) C
//! L3 = ε H(Y) / I(X;Y) + g0 (1 - ε / I(X;Y))
//! L4 = H(Y|X) + ε - C - min α2 H(X2|Y)
//! L5 = H(Y|X) + ε - min [(1 - α2) C + α2 H(X|Y)]
//! ```
//!
//! Lower bounds are reported unclamped; negative values are flagged vacuous.


use serde::{Deserialize, Serialize};

use crate::error::{PmechError, Result};
use crate::perfect_privacy::{g0_with_cap, DEFAULT_VERTEX_CAP};
use crate::prob::{JointPmf, LogBase};
use crate::separation::{representation_classes, separate, AssignmentPolicy, Representation};

/// Residual-leakage constant `log(I + 1) + 4` of the strong functional
/// representation, in the units of `base`.
pub fn sfrl_constant(mutual_information: f64, base: LogBase) -> f64 {
    base.log(mutual_information + 1.0) + 4.0
}

/// `L3 = ε H(Y) / I + g0 (1 - ε / I)`, linear in `ε` between `g0` and `H(Y)`.
pub fn l3_value(epsilon: f64, mutual_information: f64, h_y: f64, g0: f64) -> f64 {
    let t = epsilon / mutual_information;
    t * h_y + g0 * (1.0 - t)
}

/// Checks `0 <= ε < I(X;Y)` and returns `I(X;Y)`.
pub fn validate_epsilon(joint: &JointPmf, epsilon: f64, base: LogBase) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(PmechError::validation(format!(
            "epsilon must be a finite value >= 0, got {epsilon}"
        )));
    }
    let mi = joint.mutual_information(base);
    if epsilon >= mi {
        return Err(PmechError::OutOfRange {
            epsilon,
            mutual_information: mi,
            h_y: joint.h_y(base),
        });
    }
    Ok(mi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsConfig {
    pub log_base: LogBase,
    pub rep_policy: AssignmentPolicy,
    /// Compute `g0` and hence `L3`. The only expensive bound.
    pub with_g0: bool,
    pub vertex_cap: usize,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            log_base: LogBase::BITS,
            rep_policy: AssignmentPolicy::default(),
            with_g0: true,
            vertex_cap: DEFAULT_VERTEX_CAP,
        }
    }
}

impl BoundsConfig {
    pub fn with_base(log_base: LogBase) -> Self {
        BoundsConfig {
            log_base,
            ..Self::default()
        }
    }
}

/// One row of the per-representation table. Representations that induce the
/// same `X2` partition give identical terms and share a row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepresentationRow {
    pub rep: Representation,
    pub multiplicity: usize,
    pub alpha2: f64,
    pub h_x2: f64,
    pub h_x2_given_y: f64,
    pub l4_term: f64,
    pub l5_term: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsReport {
    pub epsilon: f64,
    pub log_base: LogBase,
    pub mutual_information: f64,
    pub h_y: f64,
    pub h_x_given_y: f64,
    pub h_y_given_x: f64,
    pub sfrl_constant: f64,
    pub alpha: f64,
    pub u1: f64,
    /// `H(Y|X) - ε`. Not a valid upper bound in general (it falls below `L1`
    /// once `H(X|Y) < 2ε`); kept for comparison.
    pub u1_sign_variant: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: Option<f64>,
    pub l4: Option<f64>,
    pub l5: Option<f64>,
    pub g0: Option<f64>,
    pub l4_argmin: Option<Representation>,
    pub l5_argmin: Option<Representation>,
    pub rep_policy: AssignmentPolicy,
    pub representations: Vec<RepresentationRow>,
    /// Names of lower bounds that came out negative.
    pub vacuous: Vec<String>,
    pub notes: Vec<String>,
}

impl BoundsReport {
    /// `(name, value)` for every applicable lower bound, in order `L1..L5`.
    pub fn lower_bounds(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![("L1", self.l1), ("L2", self.l2)];
        for (name, v) in [("L3", self.l3), ("L4", self.l4), ("L5", self.l5)] {
            if let Some(v) = v {
                out.push((name, v));
            }
        }
        out
    }

    pub fn max_lower_bound(&self) -> f64 {
        self.lower_bounds()
            .into_iter()
            .map(|(_, v)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "U1" => Some(self.u1),
            "L1" => Some(self.l1),
            "L2" => Some(self.l2),
            "L3" => self.l3,
            "L4" => self.l4,
            "L5" => self.l5,
            _ => None,
        }
    }
}

/// Per-representation `(L4, L5)` terms given the quantities they depend on.
fn terms(h_y_given_x: f64, h_x_given_y: f64, c: f64, eps: f64, h_x2: f64, h_x2_y: f64) -> (f64, f64, f64) {
    let alpha2 = if eps == 0.0 { 0.0 } else { eps / h_x2 };
    let l4 = h_y_given_x + eps - c - alpha2 * h_x2_y;
    let l5 = h_y_given_x + eps - ((1.0 - alpha2) * c + alpha2 * h_x_given_y);
    (alpha2, l4, l5)
}

/// `L4` and `L5` evaluated at one representation, without minimization.
pub fn bound_terms_for_representation(
    joint: &JointPmf,
    epsilon: f64,
    rep: &Representation,
    base: LogBase,
) -> Result<(f64, f64)> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(PmechError::validation(format!(
            "epsilon must be a finite value >= 0, got {epsilon}"
        )));
    }
    let split = separate(joint, rep)?;
    let h_x2 = split.h_x2(base);
    if epsilon > h_x2 {
        return Err(PmechError::validation(format!(
            "alpha2 = epsilon / H(X2) = {} exceeds 1",
            epsilon / h_x2
        )));
    }
    let c = sfrl_constant(joint.mutual_information(base), base);
    let (_, l4, l5) = terms(
        joint.h_y_given_x(base),
        joint.h_x_given_y(base),
        c,
        epsilon,
        h_x2,
        split.h_x2_given_y(base),
    );
    Ok((l4, l5))
}

/// All bounds for `0 <= ε < I(X;Y)`.
pub fn compute_bounds(joint: &JointPmf, epsilon: f64, cfg: &BoundsConfig) -> Result<BoundsReport> {
    validate_epsilon(joint, epsilon, cfg.log_base)?;
    evaluate_bounds(joint, epsilon, cfg)
}

/// The bound formulas at any `ε >= 0`, without the range check.
///
/// Outside `[0, I(X;Y))` the formulas no longer bound anything; this entry
/// point exists for algebraic comparisons such as the independent case.
pub fn evaluate_bounds(joint: &JointPmf, epsilon: f64, cfg: &BoundsConfig) -> Result<BoundsReport> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(PmechError::validation(format!(
            "epsilon must be a finite value >= 0, got {epsilon}"
        )));
    }
    let base = cfg.log_base;
    let eps = epsilon;
    let mi = joint.mutual_information(base);
    let h_x = joint.h_x(base);
    let h_y = joint.h_y(base);
    let hxy = joint.h_x_given_y(base);
    let hyx = joint.h_y_given_x(base);
    let c = sfrl_constant(mi, base);
    let mut notes = Vec::new();

    if eps >= mi {
        notes.push(format!(
            "epsilon {eps} >= I(X;Y) = {mi}: formulas evaluated outside their range; h_eps = H(Y) = {h_y}"
        ));
    }

    let alpha = if eps == 0.0 { 0.0 } else { eps / h_x };
    let u1 = hyx + eps;
    let l1 = hyx - hxy + eps;
    let l2 = hyx - alpha * hxy + eps - (1.0 - alpha) * c;

    let mut g0 = None;
    let mut l3 = None;
    if mi <= 0.0 {
        notes.push("I(X;Y) = 0: L3 undefined".into());
    } else if cfg.with_g0 {
        match g0_with_cap(joint, base, cfg.vertex_cap) {
            Ok(r) => {
                l3 = Some(l3_value(eps, mi, h_y, r.value));
                g0 = Some(r.value);
            }
            Err(PmechError::Size(msg)) => notes.push(format!("L3 skipped: {msg}")),
            Err(e) => return Err(e),
        }
    } else {
        notes.push("L3 not requested".into());
    }

    let rows: Vec<RepresentationRow> = representation_classes(joint, eps, cfg.rep_policy, base)?
        .into_iter()
        .map(|class| {
            let m = class.entry;
            let (alpha2, l4_term, l5_term) = terms(hyx, hxy, c, eps, m.h_x2, m.h_x2_given_y);
            RepresentationRow {
                rep: m.rep,
                multiplicity: class.multiplicity,
                alpha2,
                h_x2: m.h_x2,
                h_x2_given_y: m.h_x2_given_y,
                l4_term,
                l5_term,
            }
        })
        .collect();
    let best = |f: fn(&RepresentationRow) -> f64| {
        rows.iter()
            .fold(None::<&RepresentationRow>, |acc, r| match acc {
                Some(a) if f(a) >= f(r) => Some(a),
                _ => Some(r),
            })
            .map(|r| (f(r), r.rep.clone()))
    };
    let (l4, l4_argmin) = best(|r| r.l4_term).unzip();
    let (l5, l5_argmin) = best(|r| r.l5_term).unzip();
    if rows.is_empty() {
        notes.push(format!(
            "no representation of X with H(X2) >= epsilon ({} symbols): L4 and L5 not applicable",
            joint.x_size()
        ));
    }

    let mut report = BoundsReport {
        epsilon: eps,
        log_base: base,
        mutual_information: mi,
        h_y,
        h_x_given_y: hxy,
        h_y_given_x: hyx,
        sfrl_constant: c,
        alpha,
        u1,
        u1_sign_variant: hyx - eps,
        l1,
        l2,
        l3,
        l4,
        l5,
        g0,
        l4_argmin,
        l5_argmin,
        rep_policy: cfg.rep_policy.effective(joint.x_size()),
        representations: rows,
        vacuous: Vec::new(),
        notes,
    };
    report.vacuous = report
        .lower_bounds()
        .into_iter()
        .filter(|&(_, v)| v < 0.0)
        .map(|(n, _)| n.to_string())
        .collect();
    Ok(report)
}
