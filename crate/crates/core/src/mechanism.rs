use serde::{Deserialize, Serialize};

use crate::error::{PmechError, Result};
use crate::prob::{JointPmf, TripletPmf, TAU_NORM};
use crate::separation::Representation;

/// Which construction produced a mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Frl,
    Sfrl,
    Efrl,
    Esfrl,
    Separated,
}

impl Construction {
    pub fn name(self) -> &'static str {
        match self {
            Construction::Frl => "frl",
            Construction::Sfrl => "sfrl",
            Construction::Efrl => "efrl",
            Construction::Esfrl => "esfrl",
            Construction::Separated => "separated",
        }
    }

    pub fn is_extended(self) -> bool {
        matches!(
            self,
            Construction::Efrl | Construction::Esfrl | Construction::Separated
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    Float,
    Rational,
}

/// Variable copied by a randomized response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseSource {
    X,
    X2,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub construction: Option<Construction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_order: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arithmetic: Option<Arithmetic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<ResponseSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representation: Option<Representation>,
    /// Alphabet size of the base variable before composition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_u_size: Option<usize>,
    /// Alphabet size of the copied variable (the sentinel `c` is this index).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_size: Option<usize>,
}

/// Sampling diagnostics of the selection index `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDiagnostic {
    pub mean_index: f64,
    pub p999_index: u64,
    pub max_index: u64,
    /// Fraction of samples whose index exceeds `p999_index`.
    pub tail_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Flavor {
    Exact,
    Empirical {
        sample_budget: u64,
        seed: u64,
        shards: usize,
        tail: TailDiagnostic,
    },
}

/// A channel `P_{U|X,Y}` together with the joint law it induces on `(X, Y, U)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub u_size: usize,
    /// `kernel[x][y][u]`.
    pub kernel: Vec<Vec<Vec<f64>>>,
    pub induced: TripletPmf,
    pub flavor: Flavor,
    pub provenance: Provenance,
}

impl Mechanism {
    pub fn is_exact(&self) -> bool {
        matches!(self.flavor, Flavor::Exact)
    }

    /// Number of samples behind an empirical mechanism.
    pub fn sample_budget(&self) -> Option<u64> {
        match self.flavor {
            Flavor::Empirical { sample_budget, .. } => Some(sample_budget),
            Flavor::Exact => None,
        }
    }

    pub fn kernel_flat(&self) -> Vec<f64> {
        self.kernel.iter().flatten().flatten().copied().collect()
    }

    /// Exact mechanism from a flat kernel; the induced law is recomputed.
    pub(crate) fn exact(
        joint: &JointPmf,
        u_size: usize,
        kernel: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        let induced = TripletPmf::from_kernel(joint, u_size, &kernel)?;
        let m = Mechanism {
            u_size,
            kernel: nest(&kernel, joint.x_size(), joint.y_size(), u_size),
            induced,
            flavor: Flavor::Exact,
            provenance,
        };
        m.check_kernel(joint, TAU_NORM)?;
        Ok(m)
    }

    /// Every kernel row with `P_XY(x, y) > 0` must be a pmf.
    pub fn check_kernel(&self, joint: &JointPmf, tol: f64) -> Result<()> {
        if self.kernel.len() != joint.x_size()
            || self.kernel.iter().any(|r| r.len() != joint.y_size())
        {
            return Err(PmechError::validation("kernel shape does not match joint"));
        }
        for (x, rows) in self.kernel.iter().enumerate() {
            for (y, row) in rows.iter().enumerate() {
                if row.len() != self.u_size {
                    return Err(PmechError::validation("kernel row has wrong length"));
                }
                if row.iter().any(|&v| !(v >= 0.0)) {
                    return Err(PmechError::validation(format!(
                        "kernel row ({x}, {y}) has a negative entry"
                    )));
                }
                if joint.get(x, y) > 0.0 {
                    let s: f64 = row.iter().sum();
                    if (s - 1.0).abs() > tol {
                        return Err(PmechError::validation(format!(
                            "kernel row ({x}, {y}) sums to {s}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn nest(flat: &[f64], nx: usize, ny: usize, nu: usize) -> Vec<Vec<Vec<f64>>> {
    (0..nx)
        .map(|x| {
            (0..ny)
                .map(|y| flat[(x * ny + y) * nu..(x * ny + y + 1) * nu].to_vec())
                .collect()
        })
        .collect()
}
