//! Interval-refinement construction of a functional representation.
//!
//! For every `x`, the unit interval is cut into consecutive pieces of length
//! `P_{Y|X}(y|x)` following a fixed `y` order. Refining all these partitions
//! together gives atoms; `U` is the atom index, drawn with probability equal to
//! the atom length regardless of `x`, and under each `x` the atom sits inside
//! exactly one `y` piece.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{PmechError, Result};
use crate::mechanism::{Arithmetic, Construction, Mechanism, Provenance};
use crate::prob::JointPmf;

/// Breakpoints closer than this are merged in float mode.
pub const FLOAT_MERGE_TOL: f64 = 1e-12;

/// Rational mode snaps each probability to the simplest fraction within this
/// distance, so that decimal inputs such as `0.3 * 0.75` become exactly `9/40`.
pub const RATIONAL_SNAP_TOL: f64 = 1e-14;

/// Continued-fraction convergents of `v` until one is within `tol`.
fn simplest_fraction(v: f64, tol: f64) -> Option<(i128, i128)> {
    if !v.is_finite() || v < 0.0 {
        return None;
    }
    let (mut h0, mut h1): (i128, i128) = (0, 1);
    let (mut k0, mut k1): (i128, i128) = (1, 0);
    let mut rem = v;
    for _ in 0..64 {
        let a = rem.floor();
        if a > 1e15 {
            return None;
        }
        let a = a as i128;
        let (h2, k2) = (a.checked_mul(h1)?.checked_add(h0)?, a.checked_mul(k1)?.checked_add(k0)?);
        if (h2 as f64 / k2 as f64 - v).abs() <= tol {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = rem - a as f64;
        if frac <= 0.0 {
            return None;
        }
        rem = 1.0 / frac;
    }
    None
}

/// The refined partition behind an FRL mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalAtlas {
    /// Per-`x` cumulative sums of `P_{Y|X}(·|x)` in `y_order`; empty for dropped `x`.
    pub breakpoints: Vec<Vec<f64>>,
    /// Atom boundaries `0 = b_0 < b_1 < ... < b_k = 1`.
    pub boundaries: Vec<f64>,
    pub lengths: Vec<f64>,
    /// `labels[atom][x]`: the `y` whose piece contains the atom under `x`.
    pub labels: Vec<Vec<Option<usize>>>,
    pub y_order: Vec<usize>,
}

trait Scalar: Clone + PartialOrd + Zero + One + std::ops::Sub<Output = Self> {
    fn from_prob(p: f64) -> Self;
    fn coincident(a: &Self, b: &Self) -> bool;
    fn to_f64(&self) -> f64;
    fn div(&self, other: &Self) -> Self;
    fn half_sum(a: &Self, b: &Self) -> Self;
}

impl Scalar for f64 {
    fn from_prob(p: f64) -> Self {
        p
    }
    fn coincident(a: &Self, b: &Self) -> bool {
        (a - b).abs() <= FLOAT_MERGE_TOL
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn half_sum(a: &Self, b: &Self) -> Self {
        0.5 * (a + b)
    }
}

impl Scalar for BigRational {
    fn from_prob(p: f64) -> Self {
        match simplest_fraction(p, RATIONAL_SNAP_TOL) {
            Some((n, d)) => BigRational::new(BigInt::from(n), BigInt::from(d)),
            None => BigRational::from_float(p).unwrap_or_else(BigRational::zero),
        }
    }
    fn coincident(a: &Self, b: &Self) -> bool {
        a == b
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn half_sum(a: &Self, b: &Self) -> Self {
        (a + b) / BigRational::from_integer(BigInt::from(2))
    }
}

struct RawAtlas<T> {
    cumulative: Vec<Option<Vec<T>>>,
    conditionals: Vec<Option<Vec<T>>>,
    boundaries: Vec<T>,
    labels: Vec<Vec<Option<usize>>>,
}

fn refine<T: Scalar>(joint: &JointPmf, y_order: &[usize]) -> RawAtlas<T> {
    let (nx, ny) = (joint.x_size(), joint.y_size());
    let mut conditionals = Vec::with_capacity(nx);
    let mut cumulative = Vec::with_capacity(nx);
    for x in 0..nx {
        let row: Vec<T> = (0..ny).map(|y| T::from_prob(joint.get(x, y))).collect();
        let mass = row.iter().fold(T::zero(), |a, b| a + b.clone());
        if !(mass > T::zero()) {
            conditionals.push(None);
            cumulative.push(None);
            continue;
        }
        let cond: Vec<T> = row.iter().map(|v| v.div(&mass)).collect();
        let mut acc = T::zero();
        let mut cum = Vec::with_capacity(ny);
        for &y in y_order {
            acc = acc + cond[y].clone();
            cum.push(acc.clone());
        }
        // the last cut is the right end of the interval
        if let Some(last) = cum.last_mut() {
            *last = T::one();
        }
        conditionals.push(Some(cond));
        cumulative.push(Some(cum));
    }

    let mut cuts: Vec<T> = cumulative
        .iter()
        .flatten()
        .flat_map(|c| c.iter().cloned())
        .filter(|b| *b > T::zero() && *b < T::one())
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    let mut boundaries = vec![T::zero()];
    for c in cuts {
        let last = boundaries.last().expect("non-empty");
        if !T::coincident(last, &c) {
            boundaries.push(c);
        }
    }
    if boundaries.len() > 1 && T::coincident(boundaries.last().expect("non-empty"), &T::one()) {
        boundaries.pop();
    }
    boundaries.push(T::one());

    let atoms = boundaries.len() - 1;
    let mut labels = vec![vec![None; nx]; atoms];
    for (a, label_row) in labels.iter_mut().enumerate() {
        let mid = T::half_sum(&boundaries[a], &boundaries[a + 1]);
        for (x, cum) in cumulative.iter().enumerate() {
            if let Some(cum) = cum {
                let pos = cum.iter().position(|c| mid < *c).unwrap_or(ny - 1);
                label_row[x] = Some(y_order[pos]);
            }
        }
    }
    RawAtlas {
        cumulative,
        conditionals,
        boundaries,
        labels,
    }
}

fn validate_order(y_order: &[usize], ny: usize) -> Result<()> {
    let mut seen = vec![false; ny];
    if y_order.len() != ny {
        return Err(PmechError::validation("y_order must list every y once"));
    }
    for &y in y_order {
        if y >= ny || seen[y] {
            return Err(PmechError::validation("y_order is not a permutation"));
        }
        seen[y] = true;
    }
    Ok(())
}

fn build<T: Scalar>(joint: &JointPmf, y_order: &[usize]) -> (IntervalAtlas, Vec<f64>) {
    let (nx, ny) = (joint.x_size(), joint.y_size());
    let raw = refine::<T>(joint, y_order);
    let atoms = raw.boundaries.len() - 1;
    let lengths: Vec<T> = (0..atoms)
        .map(|a| raw.boundaries[a + 1].clone() - raw.boundaries[a].clone())
        .collect();

    let mut kernel = vec![0.0; nx * ny * atoms];
    for x in 0..nx {
        let Some(cond) = &raw.conditionals[x] else {
            // P_X(x) = 0: any pmf will do; use P_U
            for y in 0..ny {
                for (a, len) in lengths.iter().enumerate() {
                    kernel[(x * ny + y) * atoms + a] = len.to_f64();
                }
            }
            continue;
        };
        for y in 0..ny {
            let row = &mut kernel[(x * ny + y) * atoms..(x * ny + y + 1) * atoms];
            if cond[y] > T::zero() {
                for a in 0..atoms {
                    if raw.labels[a][x] == Some(y) {
                        row[a] = lengths[a].div(&cond[y]).to_f64();
                    }
                }
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
            } else {
                for (a, len) in lengths.iter().enumerate() {
                    row[a] = len.to_f64();
                }
            }
        }
    }

    let atlas = IntervalAtlas {
        breakpoints: raw
            .cumulative
            .iter()
            .map(|c| c.as_ref().map_or_else(Vec::new, |c| c.iter().map(T::to_f64).collect()))
            .collect(),
        boundaries: raw.boundaries.iter().map(T::to_f64).collect(),
        lengths: lengths.iter().map(T::to_f64).collect(),
        labels: raw.labels,
        y_order: y_order.to_vec(),
    };
    (atlas, kernel)
}

/// The refined partition alone.
pub fn interval_atlas(
    joint: &JointPmf,
    y_order: &[usize],
    arithmetic: Arithmetic,
) -> Result<IntervalAtlas> {
    validate_order(y_order, joint.y_size())?;
    Ok(match arithmetic {
        Arithmetic::Float => build::<f64>(joint, y_order).0,
        Arithmetic::Rational => build::<BigRational>(joint, y_order).0,
    })
}

/// Exact FRL mechanism: `I(U;X) = 0`, `H(Y|U,X) = 0`, `|U| <= |X|(|Y|-1)+1`.
pub fn synthesize_frl(
    joint: &JointPmf,
    y_order: Option<&[usize]>,
    arithmetic: Arithmetic,
) -> Result<Mechanism> {
    synthesize_frl_with_atlas(joint, y_order, arithmetic).map(|(m, _)| m)
}

pub fn synthesize_frl_with_atlas(
    joint: &JointPmf,
    y_order: Option<&[usize]>,
    arithmetic: Arithmetic,
) -> Result<(Mechanism, IntervalAtlas)> {
    let ny = joint.y_size();
    let order: Vec<usize> = y_order.map_or_else(|| (0..ny).collect(), <[usize]>::to_vec);
    validate_order(&order, ny)?;
    let (atlas, kernel) = match arithmetic {
        Arithmetic::Float => build::<f64>(joint, &order),
        Arithmetic::Rational => build::<BigRational>(joint, &order),
    };
    let provenance = Provenance {
        construction: Some(Construction::Frl),
        y_order: Some(order),
        arithmetic: Some(arithmetic),
        ..Provenance::default()
    };
    let m = Mechanism::exact(joint, atlas.lengths.len(), kernel, provenance)?;
    Ok((m, atlas))
}
