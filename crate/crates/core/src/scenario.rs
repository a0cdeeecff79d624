//! Instance generators for regimes where one lower bound provably dominates,
//! and checks of the resulting orderings.
//!
//! Each generator builds a joint over `X = (X1, X2)` with a designated
//! row-major representation `x = x1 * |X2| + x2`, then re-verifies its
//! hypotheses numerically before handing the instance out.
//!
//! | id   | hypothesis                                             | ordering                    |
//! |------|--------------------------------------------------------|-----------------------------|
//! | `S1` | `X1 = f(Y)`, `H(X2|Y) <= C - margin`                   | `L1 >= L5 >= L4`            |
//! | `S2` | `X2 = f(Y)`, `H(X1|Y) >= H(Y) + 4 + margin`            | `L4 >= max(L1, L5)`         |
//! | `S3` | `Y` independent of `X`, `H(X) >= 4 + margin`           | `L4 >= L1`, `L5 >= L1`      |
//! | `S4` | `X1 = f(X2)`, `H(X2|Y) >= log(I(X2;Y)+1) + 4 + margin` | `L5 >= max(L4, L1)`         |
//! | `C1` | `H(X|Y) <= C - margin`                                 | `L5 >= L2`                  |
//! | `C2` | `X2 = f(Y)`, `H(X1|Y) >= C + margin`                   | `L4 >= max(L2, L5, L1)`     |
//!
//! Here `C = log(I(X;Y) + 1) + 4`. `L4` and `L5` are evaluated at the
//! designated representation.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audit::{Check, Relation};
use crate::bounds::{bound_terms_for_representation, sfrl_constant};
use crate::error::{PmechError, Result};
use crate::prob::{JointPmf, LogBase};
use crate::separation::{separate, FactorPair, Representation};

pub const DEFAULT_MARGIN: f64 = 2.0;
const ORDER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    S1,
    S2,
    S3,
    S4,
    C1,
    C2,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 6] = [
        ScenarioId::S1,
        ScenarioId::S2,
        ScenarioId::S3,
        ScenarioId::S4,
        ScenarioId::C1,
        ScenarioId::C2,
    ];

    /// Default `(|X1|, |X2|, |Y|)`.
    pub fn default_sizes(self) -> (usize, usize, usize) {
        match self {
            ScenarioId::S1 => (2, 3, 4),
            ScenarioId::S2 | ScenarioId::C2 => (256, 2, 2),
            ScenarioId::S3 => (8, 8, 2),
            ScenarioId::S4 => (2, 256, 2),
            ScenarioId::C1 => (2, 2, 3),
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScenarioId::S1 => "1",
            ScenarioId::S2 => "2",
            ScenarioId::S3 => "3",
            ScenarioId::S4 => "4",
            ScenarioId::C1 => "C1",
            ScenarioId::C2 => "C2",
        };
        f.write_str(s)
    }
}

impl FromStr for ScenarioId {
    type Err = PmechError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "1" | "S1" => Ok(ScenarioId::S1),
            "2" | "S2" => Ok(ScenarioId::S2),
            "3" | "S3" => Ok(ScenarioId::S3),
            "4" | "S4" => Ok(ScenarioId::S4),
            "C1" => Ok(ScenarioId::C1),
            "C2" => Ok(ScenarioId::C2),
            other => Err(PmechError::validation(format!(
                "unknown scenario id {other:?}; expected 1-4, C1 or C2"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub n1: usize,
    pub n2: usize,
    pub ny: usize,
    /// Slack over the hypothesis thresholds, in the units of `log_base`.
    pub margin: f64,
    pub seed: u64,
    pub log_base: LogBase,
}

impl ScenarioSpec {
    pub fn new(id: ScenarioId, seed: u64) -> Self {
        let (n1, n2, ny) = id.default_sizes();
        ScenarioSpec {
            id,
            n1,
            n2,
            ny,
            margin: DEFAULT_MARGIN,
            seed,
            log_base: LogBase::BITS,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioInstance {
    pub spec: ScenarioSpec,
    pub joint: JointPmf,
    pub rep: Representation,
    pub hypotheses: Vec<Check>,
}

fn random_pmf(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>()).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn param(msg: impl Into<String>) -> PmechError {
    PmechError::Parameter(msg.into())
}

/// Builds a joint for `spec` and verifies the scenario hypothesis.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<ScenarioInstance> {
    let ScenarioSpec { id, n1, n2, ny, .. } = *spec;
    if n1 < 2 || n2 < 2 || ny < 2 {
        return Err(param(format!(
            "|X1| = {n1}, |X2| = {n2}, |Y| = {ny}: every alphabet needs at least 2 symbols"
        )));
    }
    if !(spec.margin >= 0.0) {
        return Err(param(format!("margin must be >= 0, got {}", spec.margin)));
    }
    let base = spec.log_base;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let nx = n1 * n2;
    let mut p = vec![0.0; nx * ny];
    let idx = |x1: usize, x2: usize, y: usize| (x1 * n2 + x2) * ny + y;

    match id {
        ScenarioId::S1 => {
            if ny < n1 {
                return Err(param(format!(
                    "X1 = Y mod |X1| needs |Y| >= |X1|, got |Y| = {ny} < {n1}"
                )));
            }
            let py = random_pmf(&mut rng, ny, 0.2);
            for y in 0..ny {
                let px2 = random_pmf(&mut rng, n2, 0.1);
                for x2 in 0..n2 {
                    p[idx(y % n1, x2, y)] = py[y] * px2[x2];
                }
            }
        }
        ScenarioId::S2 | ScenarioId::C2 => {
            if ny < n2 {
                return Err(param(format!(
                    "X2 = Y mod |X2| needs |Y| >= |X2|, got |Y| = {ny} < {n2}"
                )));
            }
            let py = random_pmf(&mut rng, ny, 0.2);
            for y in 0..ny {
                // nearly uniform X1 given Y
                let noise = random_pmf(&mut rng, n1, 0.0);
                for x1 in 0..n1 {
                    let q = 0.95 / n1 as f64 + 0.05 * noise[x1];
                    p[idx(x1, y % n2, y)] = py[y] * q;
                }
            }
        }
        ScenarioId::S3 => {
            let py = random_pmf(&mut rng, ny, 0.2);
            for x in 0..nx {
                for y in 0..ny {
                    p[x * ny + y] = py[y] / nx as f64;
                }
            }
        }
        ScenarioId::S4 => {
            // X1 = X2 mod |X1|; Y is a noisy quantization of X2
            let flip = rng.random_range(0.02..0.1);
            for x2 in 0..n2 {
                let bucket = x2 * ny / n2;
                for y in 0..ny {
                    let q = if y == bucket {
                        1.0 - flip
                    } else {
                        flip / (ny - 1) as f64
                    };
                    p[idx(x2 % n1, x2, y)] = q / n2 as f64;
                }
            }
        }
        ScenarioId::C1 => {
            let v = random_pmf(&mut rng, nx * ny, 0.05);
            p.copy_from_slice(&v);
        }
    }

    let joint = JointPmf::new(nx, ny, p)?;
    let rep = Representation::row_major(
        nx,
        FactorPair {
            n1,
            n2,
            padded: false,
        },
    );
    let split = separate(&joint, &rep)?;
    let margin = spec.margin;
    let mi = joint.mutual_information(base);
    let c = sfrl_constant(mi, base);
    let exact = 1e-12;
    let mut hyp = Vec::new();
    match id {
        ScenarioId::S1 => {
            hyp.push(Check::new("H(X1|Y) = 0", split.h_x1_given_y(base), Relation::AtMost, 0.0, exact));
            hyp.push(Check::new(
                "H(X2|Y) <= log(I(X;Y)+1)+4 - margin",
                split.h_x2_given_y(base),
                Relation::AtMost,
                c - margin,
                0.0,
            ));
        }
        ScenarioId::S2 => {
            hyp.push(Check::new("H(X2|Y) = 0", split.h_x2_given_y(base), Relation::AtMost, 0.0, exact));
            hyp.push(Check::new(
                "H(X1|Y) >= H(Y) + 4 + margin",
                split.h_x1_given_y(base),
                Relation::AtLeast,
                joint.h_y(base) + 4.0 + margin,
                0.0,
            ));
        }
        ScenarioId::C2 => {
            hyp.push(Check::new("H(X2|Y) = 0", split.h_x2_given_y(base), Relation::AtMost, 0.0, exact));
            hyp.push(Check::new(
                "H(X1|Y) >= log(I(X;Y)+1)+4 + margin",
                split.h_x1_given_y(base),
                Relation::AtLeast,
                c + margin,
                0.0,
            ));
        }
        ScenarioId::S3 => {
            hyp.push(Check::new("I(X;Y) = 0", mi, Relation::AtMost, 0.0, exact));
            hyp.push(Check::new(
                "H(X1,X2) >= 4 + margin",
                joint.h_x(base),
                Relation::AtLeast,
                4.0 + margin,
                0.0,
            ));
        }
        ScenarioId::S4 => {
            hyp.push(Check::new("H(X1|X2) = 0", split.h_x1_given_x2(base), Relation::AtMost, 0.0, exact));
            hyp.push(Check::new(
                "H(X2|Y) >= log(I(X2;Y)+1)+4 + margin",
                split.h_x2_given_y(base),
                Relation::AtLeast,
                sfrl_constant(split.i_x2_y(base), base) + margin,
                0.0,
            ));
        }
        ScenarioId::C1 => {
            hyp.push(Check::new(
                "H(X1,X2|Y) <= log(I(X;Y)+1)+4 - margin",
                joint.h_x_given_y(base),
                Relation::AtMost,
                c - margin,
                0.0,
            ));
        }
    }
    if id != ScenarioId::S3 {
        hyp.push(Check::new("I(X;Y) > 0", mi, Relation::AtLeast, 1e-9, 0.0));
    }
    if let Some(bad) = hyp.iter().find(|h| !h.pass) {
        return Err(param(format!(
            "scenario {id} with |X1| = {n1}, |X2| = {n2}, |Y| = {ny}: hypothesis {} violated ({} vs {})",
            bad.name, bad.lhs, bad.rhs
        )));
    }
    Ok(ScenarioInstance {
        spec: *spec,
        joint,
        rep,
        hypotheses: hyp,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominanceRecord {
    pub id: ScenarioId,
    pub epsilon: f64,
    pub log_base: LogBase,
    /// `true` when `ε >= I(X;Y)`, so the bounds are compared as formulas only.
    pub formula_level: bool,
    pub l1: f64,
    pub l2: f64,
    pub l4: f64,
    pub l5: f64,
    pub relations: Vec<Check>,
}

impl fmt::Display for DominanceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "scenario {} eps={}: L1={} L2={} L4={} L5={}",
            self.id, self.epsilon, self.l1, self.l2, self.l4, self.l5
        )
    }
}

/// Evaluates `L1`, `L2` and the designated-representation `L4`, `L5` and
/// checks the ordering claimed for scenario `id`.
///
/// Fails with an assertion error carrying every bound value when an
/// ordering is violated.
pub fn assert_dominance(
    joint: &JointPmf,
    rep: &Representation,
    id: ScenarioId,
    epsilon: f64,
    base: LogBase,
) -> Result<DominanceRecord> {
    let mi = joint.mutual_information(base);
    let formula_level = epsilon >= mi;
    if formula_level && id != ScenarioId::S3 {
        return Err(PmechError::OutOfRange {
            epsilon,
            mutual_information: mi,
            h_y: joint.h_y(base),
        });
    }
    let (l4, l5) = bound_terms_for_representation(joint, epsilon, rep, base)?;
    let h_x = joint.h_x(base);
    let hxy = joint.h_x_given_y(base);
    let hyx = joint.h_y_given_x(base);
    let c = sfrl_constant(mi, base);
    let alpha = if epsilon == 0.0 { 0.0 } else { epsilon / h_x };
    let l1 = hyx - hxy + epsilon;
    let l2 = hyx - alpha * hxy + epsilon - (1.0 - alpha) * c;

    let ge = |name: &str, a: f64, b: f64| Check::new(name, a, Relation::AtLeast, b, ORDER_TOL);
    let mut rel = Vec::new();
    match id {
        ScenarioId::S1 => {
            rel.push(ge("L1 >= L5", l1, l5));
            rel.push(ge("L5 >= L4", l5, l4));
        }
        ScenarioId::S2 => {
            rel.push(ge("L4 >= L1", l4, l1));
            rel.push(ge("L4 >= L5", l4, l5));
        }
        ScenarioId::S3 => {
            rel.push(ge("L4 >= L1", l4, l1));
            rel.push(ge("L5 >= L1", l5, l1));
        }
        ScenarioId::S4 => {
            rel.push(ge("L5 >= L4", l5, l4));
            rel.push(ge("L5 >= L1", l5, l1));
            let split = separate(joint, rep)?;
            let closed = epsilon * sfrl_constant(split.i_x2_y(base), base) / split.h_x2(base);
            rel.push(Check::new(
                "L5 - L4 = eps (log(I(X2;Y)+1)+4) / H(X2)",
                l5 - l4,
                Relation::Equal,
                closed,
                ORDER_TOL,
            ));
        }
        ScenarioId::C1 => {
            rel.push(ge("L5 >= L2", l5, l2));
            let h_x2 = separate(joint, rep)?.h_x2(base);
            let closed = if epsilon == 0.0 {
                0.0
            } else {
                epsilon * (1.0 / h_x2 - 1.0 / h_x) * (c - hxy)
            };
            rel.push(Check::new(
                "L5 - L2 = eps (1/H(X2) - 1/H(X)) (C - H(X|Y))",
                l5 - l2,
                Relation::Equal,
                closed,
                ORDER_TOL,
            ));
        }
        ScenarioId::C2 => {
            rel.push(ge("L4 >= L2", l4, l2));
            rel.push(ge("L4 >= L5", l4, l5));
            rel.push(ge("L4 >= L1", l4, l1));
        }
    }
    let record = DominanceRecord {
        id,
        epsilon,
        log_base: base,
        formula_level,
        l1,
        l2,
        l4,
        l5,
        relations: rel,
    };
    let failed: Vec<&str> = record
        .relations
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    if !failed.is_empty() {
        return Err(PmechError::Assertion(format!(
            "{record}; violated: {}",
            failed.join(", ")
        )));
    }
    Ok(record)
}

/// Default budget for a scenario: half of `min(I(X;Y), H(X2))`, or for the
/// independent scenario half of `min(margin, H(X2))`.
pub fn default_epsilon(inst: &ScenarioInstance) -> Result<f64> {
    let base = inst.spec.log_base;
    let h_x2 = separate(&inst.joint, &inst.rep)?.h_x2(base);
    let cap = if inst.spec.id == ScenarioId::S3 {
        inst.spec.margin.max(1e-3)
    } else {
        inst.joint.mutual_information(base)
    };
    Ok(0.5 * cap.min(h_x2))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub instance: ScenarioInstance,
    pub record: DominanceRecord,
}

/// Generates an instance and asserts its ordering at `epsilon` (or the
/// default budget).
pub fn run_scenario(spec: &ScenarioSpec, epsilon: Option<f64>) -> Result<ScenarioReport> {
    let instance = generate_scenario(spec)?;
    let eps = match epsilon {
        Some(e) => e,
        None => default_epsilon(&instance)?,
    };
    let record = assert_dominance(&instance.joint, &instance.rep, spec.id, eps, spec.log_base)?;
    Ok(ScenarioReport { instance, record })
}
