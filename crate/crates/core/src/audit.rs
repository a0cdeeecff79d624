//! Checks a mechanism against its contract and against the bounds.

use serde::{Deserialize, Serialize};

use crate::bounds::{bound_terms_for_representation, sfrl_constant, BoundsReport};
use crate::error::{PmechError, Result};
use crate::mechanism::{Construction, Mechanism};
use crate::prob::{JointPmf, LogBase, TAU_NORM};
use crate::stats::{bootstrap_tolerance, InfoMeasures, DEFAULT_BOOTSTRAP_RESAMPLES};

/// Tolerance for exact mechanisms.
pub const EXACT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub log_base: LogBase,
    pub bootstrap_resamples: usize,
    pub bootstrap_seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            log_base: LogBase::BITS,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            bootstrap_seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "==")]
    Equal,
}

/// `lhs relation rhs` up to `tolerance`. `slack` is signed: positive means
/// the relation holds with room to spare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub tolerance: f64,
    pub slack: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, lhs: f64, relation: Relation, rhs: f64, tolerance: f64) -> Self {
        let slack = match relation {
            Relation::AtMost => rhs - lhs,
            Relation::AtLeast => lhs - rhs,
            Relation::Equal => -(lhs - rhs).abs(),
        };
        Check {
            name: name.into(),
            lhs,
            relation,
            rhs,
            tolerance,
            slack,
            pass: slack >= -tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub construction: Option<Construction>,
    pub exact: bool,
    pub log_base: LogBase,
    pub measures: InfoMeasures,
    /// Per-quantity `3 sd + |bias|` for empirical mechanisms.
    pub delta_stat: Option<InfoMeasures>,
    pub key_identity_residual: f64,
    pub residual_tolerance: f64,
    pub u_size: usize,
    /// Largest alphabet the construction may need, when it has one.
    pub cardinality_bound: Option<usize>,
    pub cardinality_bound_ok: bool,
    pub contract: Vec<Check>,
    pub bound_comparisons: Vec<Check>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.key_identity_residual <= self.residual_tolerance
            && self.cardinality_bound_ok
            && self.contract.iter().all(|c| c.pass)
            && self.bound_comparisons.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.contract
            .iter()
            .chain(&self.bound_comparisons)
            .filter(|c| !c.pass)
            .collect()
    }
}

/// Confirms that the mechanism's `(X, Y)` marginal reproduces `joint`:
/// within `TAU_NORM` for exact mechanisms, within 5 binomial standard
/// deviations per cell for empirical ones.
pub fn check_provenance(m: &Mechanism, joint: &JointPmf) -> Result<()> {
    let t = &m.induced;
    if t.x_size() != joint.x_size() || t.y_size() != joint.y_size() {
        return Err(PmechError::Provenance(format!(
            "mechanism is over {}x{} but the joint is {}x{}",
            t.x_size(),
            t.y_size(),
            joint.x_size(),
            joint.y_size()
        )));
    }
    let xy = t.marginal(&[crate::prob::Var::X, crate::prob::Var::Y]);
    for (i, (&a, &b)) in xy.iter().zip(joint.as_slice()).enumerate() {
        let tol = match m.sample_budget() {
            None => TAU_NORM,
            Some(n) => 5.0 * (b * (1.0 - b) / n as f64).sqrt() + 1e-12,
        };
        if (a - b).abs() > tol {
            return Err(PmechError::Provenance(format!(
                "cell (x={}, y={}) is {a} in the mechanism but {b} in the joint (tolerance {tol:.3e})",
                i / joint.y_size(),
                i % joint.y_size()
            )));
        }
    }
    Ok(())
}

fn frl_card(j: &JointPmf) -> usize {
    j.x_size() * (j.y_size() - 1) + 1
}

/// Audits `m` (which must come from `joint`) against its construction's
/// contract and, when given, against a bounds report at the same `ε`.
pub fn audit(
    m: &Mechanism,
    joint: &JointPmf,
    report: Option<&BoundsReport>,
    cfg: &AuditConfig,
) -> Result<AuditReport> {
    check_provenance(m, joint)?;
    let base = cfg.log_base;
    let measures = InfoMeasures::of(&m.induced, base);
    let delta = m.sample_budget().map(|n| {
        let seed = match m.flavor {
            crate::mechanism::Flavor::Empirical { seed, .. } => seed ^ cfg.bootstrap_seed,
            crate::mechanism::Flavor::Exact => cfg.bootstrap_seed,
        };
        bootstrap_tolerance(&m.induced, n, cfg.bootstrap_resamples, seed, base).delta
    });
    let tol = |pick: fn(&InfoMeasures) -> f64| match &delta {
        Some(d) => pick(d).max(EXACT_TOL),
        None => EXACT_TOL,
    };
    let residual = measures.key_identity_residual();
    let residual_tolerance = match &delta {
        None => EXACT_TOL,
        Some(d) => {
            (d.i_yu + d.i_ux + d.h_y_given_x + d.h_y_given_ux + d.i_xu_given_y).max(EXACT_TOL)
        }
    };

    let construction = m.provenance.construction;
    let epsilon = m.provenance.epsilon.unwrap_or(0.0);
    let mi = joint.mutual_information(base);
    let c = sfrl_constant(mi, base);
    let mut contract = Vec::new();
    let mut comparisons = Vec::new();

    let response_card = m.provenance.source_size.map(|s| s + 1).unwrap_or(1);
    let cardinality_bound = match construction {
        Some(Construction::Frl) => Some(frl_card(joint)),
        Some(Construction::Efrl) => Some(frl_card(joint) * (joint.x_size() + 1)),
        _ => None,
    };
    // composite alphabets are exactly |Ū| x |W|
    let composite_ok = match (construction.is_some_and(|c| c.is_extended()), m.provenance.base_u_size) {
        (true, Some(b)) => b * response_card == m.u_size,
        _ => true,
    };
    let cardinality_bound_ok = cardinality_bound.is_none_or(|b| m.u_size <= b) && composite_ok;

    let i_ux_tol = tol(|d| d.i_ux);
    let h_tol = tol(|d| d.h_y_given_ux);
    if construction.is_some() {
        contract.push(Check::new(
            "H(Y|U,X) = 0",
            measures.h_y_given_ux,
            Relation::AtMost,
            0.0,
            h_tol,
        ));
    }
    match construction {
        None => {}
        Some(Construction::Frl) | Some(Construction::Sfrl) => {
            contract.push(Check::new("I(U;X) = 0", measures.i_ux, Relation::AtMost, 0.0, i_ux_tol));
        }
        Some(_) => {
            contract.push(Check::new(
                "I(U;X) = epsilon",
                measures.i_ux,
                Relation::Equal,
                epsilon,
                i_ux_tol,
            ));
        }
    }
    if construction == Some(Construction::Sfrl) {
        contract.push(Check::new(
            "I(X;U|Y) <= log(I(X;Y)+1)+4",
            measures.i_xu_given_y,
            Relation::AtMost,
            c,
            tol(|d| d.i_xu_given_y),
        ));
    }

    if let Some(r) = report {
        let yu_tol = tol(|d| d.i_yu);
        // valid whenever the mechanism respects the report's budget
        if measures.i_ux <= r.epsilon + i_ux_tol {
            comparisons.push(Check::new("I(Y;U) <= U1", measures.i_yu, Relation::AtMost, r.u1, yu_tol));
        }
        let same_eps = (r.epsilon - epsilon).abs() <= 1e-12;
        let mut lower = |name: &str, v: f64| {
            comparisons.push(Check::new(format!("I(Y;U) >= {name}"), measures.i_yu, Relation::AtLeast, v, yu_tol));
        };
        match construction {
            Some(Construction::Frl) | Some(Construction::Efrl) if same_eps => lower("L1", r.l1),
            Some(Construction::Sfrl) | Some(Construction::Esfrl) if same_eps => lower("L2", r.l2),
            Some(Construction::Separated) if same_eps => {
                if let Some(rep) = &m.provenance.representation {
                    let (l4, l5) = bound_terms_for_representation(joint, epsilon, rep, base)?;
                    lower("L4(rep)", l4);
                    lower("L5(rep)", l5);
                }
            }
            _ => {}
        }
    }

    Ok(AuditReport {
        construction,
        exact: m.is_exact(),
        log_base: base,
        measures,
        delta_stat: delta,
        key_identity_residual: residual,
        residual_tolerance,
        u_size: m.u_size,
        cardinality_bound,
        cardinality_bound_ok,
        contract,
        bound_comparisons: comparisons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{compute_bounds, evaluate_bounds, BoundsConfig};
    use crate::extension::extend_efrl;
    use crate::mechanism::Arithmetic;
    use crate::synthesis::{synthesize_frl, synthesize_sfrl, SamplingConfig};

    fn bsc() -> JointPmf {
        JointPmf::from_rows(&[vec![0.45, 0.05], vec![0.05, 0.45]]).unwrap()
    }

    #[test]
    fn frl_audit() {
        let j = JointPmf::from_rows(&[vec![0.3, 0.1, 0.1], vec![0.05, 0.25, 0.2]]).unwrap();
        let m = synthesize_frl(&j, None, Arithmetic::Float).unwrap();
        let r = evaluate_bounds(&j, 0.0, &BoundsConfig::default()).unwrap();
        let a = audit(&m, &j, Some(&r), &AuditConfig::default()).unwrap();
        assert!(a.measures.i_ux < 1e-12 && a.measures.h_y_given_ux < 1e-12);
        assert!(a.key_identity_residual <= 1e-12);
        assert!(a.passed(), "{:?}", a.failures());
        assert!(a.bound_comparisons.iter().any(|c| c.name == "I(Y;U) >= L1"));
    }

    #[test]
    fn efrl_audit_on_bsc() {
        let j = bsc();
        let m = extend_efrl(&j, 0.2, LogBase::BITS).unwrap().mechanism;
        let r = compute_bounds(&j, 0.2, &BoundsConfig::default()).unwrap();
        let a = audit(&m, &j, Some(&r), &AuditConfig::default()).unwrap();
        assert!((a.measures.i_ux - 0.2).abs() < 1e-9);
        assert!(a.measures.i_yu >= 0.2 - 1e-9);
        assert!(a.passed(), "{:?}", a.failures());
    }

    #[test]
    fn sfrl_audit_uses_bootstrap() {
        let j = bsc();
        let m = synthesize_sfrl(&j, &SamplingConfig::new(20_000, 3)).unwrap();
        let a = audit(&m, &j, None, &AuditConfig::default()).unwrap();
        let d = a.delta_stat.unwrap();
        assert!(d.i_ux > 0.0);
        assert!(a.key_identity_residual <= a.residual_tolerance);
        assert!(a.passed(), "{:?}", a.failures());
    }

    #[test]
    fn provenance_mismatch() {
        let j = bsc();
        let m = synthesize_frl(&j, None, Arithmetic::Float).unwrap();
        let other = JointPmf::from_rows(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        assert!(matches!(
            audit(&m, &other, None, &AuditConfig::default()),
            Err(PmechError::Provenance(_))
        ));
    }
}
