//! Leakage-`ε` mechanisms: a base variable `Ū` composed with a randomized
//! response `W` that copies either `X` or the `X2` coordinate of a
//! representation with probability `α`, and emits a fresh constant otherwise.
//!
//! `Ū` is independent of `(X, W)`, so `I(U;X) = I(W;X) = α H(source) = ε`.

use serde::{Deserialize, Serialize};

use crate::bounds::validate_epsilon;
use crate::error::{PmechError, Result};
use crate::mechanism::{Arithmetic, Construction, Mechanism, Provenance, ResponseSource};
use crate::prob::{JointPmf, LogBase};
use crate::separation::{separate, Representation};
use crate::synthesis::frl::synthesize_frl;
use crate::synthesis::sfrl::{assemble, sample_pfr, ResponsePlan, SamplingConfig};

/// Two-point channel `W = source` w.p. `alpha`, `W = c` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizedResponse {
    pub source: ResponseSource,
    pub alpha: f64,
    /// Index of the constant `c`; equal to the source alphabet size, hence
    /// outside every source symbol.
    pub c: usize,
    pub source_size: usize,
}

impl RandomizedResponse {
    /// `P(W = w | source label)`.
    pub fn prob(&self, label: usize, w: usize) -> f64 {
        if w == self.c {
            1.0 - self.alpha
        } else if w == label {
            self.alpha
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedMechanism {
    /// Composite mechanism on `U = (Ū, W)`, `u = ubar * (c + 1) + w`.
    pub mechanism: Mechanism,
    pub base_u_size: usize,
    pub response: RandomizedResponse,
    pub target_epsilon: f64,
}

impl ExtendedMechanism {
    /// Splits a composite symbol into `(ubar, w)`.
    pub fn split(&self, u: usize) -> (usize, usize) {
        let w_card = self.response.c + 1;
        (u / w_card, u % w_card)
    }
}

fn alpha_for(epsilon: f64, source_entropy: f64) -> Result<f64> {
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    let alpha = epsilon / source_entropy;
    if !(alpha <= 1.0) {
        return Err(PmechError::validation(format!(
            "epsilon {epsilon} exceeds the source entropy {source_entropy}"
        )));
    }
    Ok(alpha)
}

/// FRL base plus a randomized response over `X`; exact.
pub fn extend_efrl(joint: &JointPmf, epsilon: f64, base: LogBase) -> Result<ExtendedMechanism> {
    validate_epsilon(joint, epsilon, base)?;
    let nx = joint.x_size();
    let ny = joint.y_size();
    let alpha = alpha_for(epsilon, joint.h_x(base))?;
    let frl = synthesize_frl(joint, None, Arithmetic::Float)?;
    let response = RandomizedResponse {
        source: ResponseSource::X,
        alpha,
        c: nx,
        source_size: nx,
    };
    let w_card = nx + 1;
    let nu = frl.u_size * w_card;
    let mut kernel = vec![0.0; nx * ny * nu];
    for x in 0..nx {
        for y in 0..ny {
            let row = &frl.kernel[x][y];
            let out = &mut kernel[(x * ny + y) * nu..(x * ny + y + 1) * nu];
            for (ubar, &k) in row.iter().enumerate() {
                if k == 0.0 {
                    continue;
                }
                out[ubar * w_card + x] = k * response.prob(x, x);
                out[ubar * w_card + nx] = k * response.prob(x, nx);
            }
        }
    }
    let provenance = Provenance {
        construction: Some(Construction::Efrl),
        y_order: frl.provenance.y_order.clone(),
        arithmetic: Some(Arithmetic::Float),
        source: Some(ResponseSource::X),
        alpha: Some(alpha),
        epsilon: Some(epsilon),
        base_u_size: Some(frl.u_size),
        source_size: Some(nx),
        representation: None,
    };
    Ok(ExtendedMechanism {
        mechanism: Mechanism::exact(joint, nu, kernel, provenance)?,
        base_u_size: frl.u_size,
        response,
        target_epsilon: epsilon,
    })
}

fn sampled(
    joint: &JointPmf,
    epsilon: f64,
    cfg: &SamplingConfig,
    response: RandomizedResponse,
    labels: Vec<usize>,
    construction: Construction,
    representation: Option<Representation>,
) -> Result<ExtendedMechanism> {
    let plan = ResponsePlan {
        labels,
        source_size: response.source_size,
        alpha: response.alpha,
    };
    let run = sample_pfr(joint, cfg, Some(&plan))?;
    let provenance = Provenance {
        construction: Some(construction),
        source: Some(response.source),
        alpha: Some(response.alpha),
        epsilon: Some(epsilon),
        representation,
        ..Provenance::default()
    };
    let mechanism = assemble(joint, &run, cfg, Some(&plan), provenance)?;
    Ok(ExtendedMechanism {
        base_u_size: mechanism.provenance.base_u_size.unwrap_or(0),
        mechanism,
        response,
        target_epsilon: epsilon,
    })
}

/// SFRL base plus a randomized response over `X`; empirical.
pub fn extend_esfrl(
    joint: &JointPmf,
    epsilon: f64,
    cfg: &SamplingConfig,
    base: LogBase,
) -> Result<ExtendedMechanism> {
    validate_epsilon(joint, epsilon, base)?;
    let nx = joint.x_size();
    let response = RandomizedResponse {
        source: ResponseSource::X,
        alpha: alpha_for(epsilon, joint.h_x(base))?,
        c: nx,
        source_size: nx,
    };
    sampled(
        joint,
        epsilon,
        cfg,
        response,
        (0..nx).collect(),
        Construction::Esfrl,
        None,
    )
}

/// SFRL base over `X = (X1, X2)` plus a randomized response over `X2` only.
///
/// One mechanism serves both separated lower bounds; they differ only in how
/// `I(X;U|Y)` is bounded.
pub fn extend_separated(
    joint: &JointPmf,
    epsilon: f64,
    rep: &Representation,
    cfg: &SamplingConfig,
    base: LogBase,
) -> Result<ExtendedMechanism> {
    validate_epsilon(joint, epsilon, base)?;
    let split = separate(joint, rep)?;
    let h_x2 = split.h_x2(base);
    let response = RandomizedResponse {
        source: ResponseSource::X2,
        alpha: alpha_for(epsilon, h_x2)?,
        c: rep.n2,
        source_size: rep.n2,
    };
    sampled(
        joint,
        epsilon,
        cfg,
        response,
        rep.x2_of(),
        Construction::Separated,
        Some(rep.clone()),
    )
}
