//! Representing a private variable `X` as a pair `(X1, X2)`.
//!
//! A representation is a factor pair `(n1, n2)` of `|X|` (or of `|X| + 1` when
//! `|X|` is prime, leaving one padded cell with zero mass) together with an
//! injective assignment of every symbol `x` to a cell `(x1, x2)`. The pair
//! carries exactly the law of `X`, so the split only changes which coordinate a
//! randomized response can reveal.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{PmechError, Result};
use crate::prob::{entropy_nats, JointPmf, LogBase, TripletPmf, Var};

/// Default cap on `|X|` for exhaustive assignment enumeration.
pub const EXHAUSTIVE_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorPair {
    pub n1: usize,
    pub n2: usize,
    pub padded: bool,
}

/// Ordered factor pairs `(n1, n2)` with both factors at least 2, in descending
/// `n1`. When `n` has none, the pairs of `n + 1` are returned flagged as padded.
pub fn factor_pairs(n: usize) -> Vec<FactorPair> {
    fn pairs(n: usize, padded: bool) -> Vec<FactorPair> {
        (2..=n / 2)
            .rev()
            .filter(|&n1| n.is_multiple_of(n1) && n / n1 >= 2)
            .map(|n1| FactorPair {
                n1,
                n2: n / n1,
                padded,
            })
            .collect()
    }
    if n < 2 {
        return Vec::new();
    }
    let direct = pairs(n, false);
    if direct.is_empty() {
        pairs(n + 1, true)
    } else {
        direct
    }
}

/// One element of the representation set of `X`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Representation {
    pub n1: usize,
    pub n2: usize,
    pub padded: bool,
    /// `assignment[x] = [x1, x2]`, zero-based.
    pub assignment: Vec<[usize; 2]>,
}

impl Representation {
    /// Row-major assignment `x ↦ (x / n2, x mod n2)`.
    pub fn row_major(x_size: usize, pair: FactorPair) -> Self {
        Representation {
            n1: pair.n1,
            n2: pair.n2,
            padded: pair.padded,
            assignment: (0..x_size).map(|x| [x / pair.n2, x % pair.n2]).collect(),
        }
    }

    /// Column-major assignment `x ↦ (x mod n1, x / n1)`.
    pub fn column_major(x_size: usize, pair: FactorPair) -> Self {
        Representation {
            n1: pair.n1,
            n2: pair.n2,
            padded: pair.padded,
            assignment: (0..x_size).map(|x| [x % pair.n1, x / pair.n1]).collect(),
        }
    }

    pub fn x_size(&self) -> usize {
        self.assignment.len()
    }

    /// Structural checks: sizes, padding flag and injectivity.
    pub fn validate(&self) -> Result<()> {
        let cells = self.n1 * self.n2;
        let nx = self.x_size();
        if self.n1 < 2 || self.n2 < 2 {
            return Err(PmechError::validation(format!(
                "factor sizes must be >= 2, got ({}, {})",
                self.n1, self.n2
            )));
        }
        let expected = if self.padded { nx + 1 } else { nx };
        if cells != expected {
            return Err(PmechError::validation(format!(
                "n1*n2 = {cells} but |X| = {nx} with padded = {}",
                self.padded
            )));
        }
        let mut seen = HashSet::with_capacity(nx);
        for (x, &[a, b]) in self.assignment.iter().enumerate() {
            if a >= self.n1 || b >= self.n2 {
                return Err(PmechError::validation(format!(
                    "symbol {x} mapped outside the {}x{} grid",
                    self.n1, self.n2
                )));
            }
            if !seen.insert((a, b)) {
                return Err(PmechError::validation(format!(
                    "assignment is not injective: cell ({a}, {b}) used twice"
                )));
            }
        }
        Ok(())
    }

    /// The `X2` label of every `x`.
    pub fn x2_of(&self) -> Vec<usize> {
        self.assignment.iter().map(|c| c[1]).collect()
    }

    /// Partition of `X` into `X2` classes, canonicalized so that two
    /// representations with the same key have the same `H(X2)` and `H(X2|Y)`.
    pub fn x2_partition_key(&self) -> Vec<usize> {
        let mut relabel = vec![usize::MAX; self.n2];
        let mut next = 0;
        self.assignment
            .iter()
            .map(|c| {
                if relabel[c[1]] == usize::MAX {
                    relabel[c[1]] = next;
                    next += 1;
                }
                relabel[c[1]]
            })
            .collect()
    }
}

/// Law of `(X1, X2, Y)` induced by a representation.
#[derive(Debug, Clone)]
pub struct SeparatedJoint {
    rep: Representation,
    // axes stored as (X -> X1, Y -> X2, U -> Y)
    table: TripletPmf,
}

impl SeparatedJoint {
    pub fn representation(&self) -> &Representation {
        &self.rep
    }

    pub fn get(&self, x1: usize, x2: usize, y: usize) -> f64 {
        self.table.get(x1, x2, y)
    }

    pub fn px1x2(&self) -> Vec<f64> {
        self.table.marginal(&[Var::X, Var::Y])
    }

    pub fn h_x1(&self, base: LogBase) -> f64 {
        self.table.joint_entropy(&[Var::X], base)
    }

    pub fn h_x2(&self, base: LogBase) -> f64 {
        self.table.joint_entropy(&[Var::Y], base)
    }

    pub fn h_x1x2(&self, base: LogBase) -> f64 {
        self.table.joint_entropy(&[Var::X, Var::Y], base)
    }

    pub fn h_x1_given_y(&self, base: LogBase) -> f64 {
        self.table.conditional_entropy(&[Var::X], &[Var::U], base)
    }

    pub fn h_x2_given_y(&self, base: LogBase) -> f64 {
        self.table.conditional_entropy(&[Var::Y], &[Var::U], base)
    }

    pub fn h_x2_given_x1(&self, base: LogBase) -> f64 {
        self.table.conditional_entropy(&[Var::Y], &[Var::X], base)
    }

    pub fn h_x1_given_x2(&self, base: LogBase) -> f64 {
        self.table.conditional_entropy(&[Var::X], &[Var::Y], base)
    }

    pub fn i_x1_y(&self, base: LogBase) -> f64 {
        self.table.mutual_information(&[Var::X], &[Var::U], base)
    }

    pub fn i_x2_y(&self, base: LogBase) -> f64 {
        self.table.mutual_information(&[Var::Y], &[Var::U], base)
    }

    /// Collapses `(X1, X2)` back to `X`.
    pub fn merge(&self) -> Result<JointPmf> {
        let ny = self.table.u_size();
        let nx = self.rep.x_size();
        let mut p = vec![0.0; nx * ny];
        for (x, &[a, b]) in self.rep.assignment.iter().enumerate() {
            for y in 0..ny {
                p[x * ny + y] = self.table.get(a, b, y);
            }
        }
        JointPmf::new(nx, ny, p)
    }
}

/// Rewrites `joint` over `(X1, X2, Y)` under the given representation.
pub fn build_representation(
    joint: &JointPmf,
    pair: FactorPair,
    assignment: Vec<[usize; 2]>,
    padded: bool,
) -> Result<SeparatedJoint> {
    if pair.padded != padded {
        return Err(PmechError::validation(
            "padded flag disagrees with the factor pair",
        ));
    }
    let rep = Representation {
        n1: pair.n1,
        n2: pair.n2,
        padded,
        assignment,
    };
    separate(joint, &rep)
}

/// Same as [`build_representation`] for an existing [`Representation`].
pub fn separate(joint: &JointPmf, rep: &Representation) -> Result<SeparatedJoint> {
    rep.validate()?;
    if rep.x_size() != joint.x_size() {
        return Err(PmechError::validation(format!(
            "representation covers {} symbols but |X| = {}",
            rep.x_size(),
            joint.x_size()
        )));
    }
    let ny = joint.y_size();
    let mut p = vec![0.0; rep.n1 * rep.n2 * ny];
    for (x, &[a, b]) in rep.assignment.iter().enumerate() {
        for y in 0..ny {
            p[(a * rep.n2 + b) * ny + y] = joint.get(x, y);
        }
    }
    let table = TripletPmf::new(rep.n1, rep.n2, ny, p)?;
    if rep.padded {
        let used: HashSet<(usize, usize)> =
            rep.assignment.iter().map(|c| (c[0], c[1])).collect();
        let mass: f64 = (0..rep.n1)
            .flat_map(|a| (0..rep.n2).map(move |b| (a, b)))
            .filter(|c| !used.contains(c))
            .flat_map(|(a, b)| (0..ny).map(move |y| (a, b, y)))
            .map(|(a, b, y)| table.get(a, b, y))
            .sum();
        if mass != 0.0 {
            return Err(PmechError::validation(format!(
                "padded cell carries mass {mass}"
            )));
        }
    }
    let out = SeparatedJoint {
        rep: rep.clone(),
        table,
    };
    if out.h_x2(LogBase::NATS) <= 0.0 {
        return Err(PmechError::validation(
            "degenerate representation: H(X2) = 0",
        ));
    }
    Ok(out)
}

/// How assignments are generated for each factor pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AssignmentPolicy {
    /// Every injective assignment, for `|X| <= cap`.
    Exhaustive { cap: usize },
    /// Row-major and column-major assignments only. A heuristic subset.
    Canonical,
}

impl Default for AssignmentPolicy {
    fn default() -> Self {
        AssignmentPolicy::Exhaustive {
            cap: EXHAUSTIVE_CAP,
        }
    }
}

impl AssignmentPolicy {
    /// Exhaustive when `|X|` is within the cap, canonical otherwise.
    pub fn effective(self, x_size: usize) -> AssignmentPolicy {
        match self {
            AssignmentPolicy::Exhaustive { cap } if x_size > cap => AssignmentPolicy::Canonical,
            p => p,
        }
    }
}

/// A representation together with the two entropies the bounds depend on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepresentationEntry {
    pub rep: Representation,
    pub h_x2: f64,
    pub h_x2_given_y: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepresentationSet {
    pub members: Vec<RepresentationEntry>,
    /// Policy actually applied, after the exhaustive cap.
    pub policy: AssignmentPolicy,
    pub log_base: LogBase,
}

impl RepresentationSet {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }
}

/// Lists representations of `X` with `H(X2) > 0` and `H(X2) >= epsilon`.
pub fn enumerate_representations(
    joint: &JointPmf,
    epsilon: f64,
    policy: AssignmentPolicy,
    base: LogBase,
) -> Result<RepresentationSet> {
    if !(epsilon >= 0.0) {
        return Err(PmechError::validation(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    let nx = joint.x_size();
    let policy = policy.effective(nx);
    let px = joint.px();
    let mut members = Vec::new();
    let mut push = |rep: Representation| {
        let (h_x2, h_x2_given_y) = x2_entropies(joint, &px, &rep, base);
        if h_x2 > 0.0 && h_x2 >= epsilon {
            members.push(RepresentationEntry {
                rep,
                h_x2,
                h_x2_given_y,
            });
        }
    };
    for pair in factor_pairs(nx) {
        match policy {
            AssignmentPolicy::Exhaustive { .. } => {
                let cells: Vec<[usize; 2]> = (0..pair.n1)
                    .flat_map(|a| (0..pair.n2).map(move |b| [a, b]))
                    .collect();
                for_each_permutation(cells, |perm| {
                    push(Representation {
                        n1: pair.n1,
                        n2: pair.n2,
                        padded: pair.padded,
                        assignment: perm[..nx].to_vec(),
                    })
                });
            }
            AssignmentPolicy::Canonical => {
                let a = Representation::row_major(nx, pair);
                let b = Representation::column_major(nx, pair);
                let distinct = a != b;
                push(a);
                if distinct {
                    push(b);
                }
            }
        }
    }
    Ok(RepresentationSet {
        members,
        policy,
        log_base: base,
    })
}

/// Representations grouped by `X2` partition, with the number of
/// assignments in each group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepresentationClass {
    /// First assignment of the group in enumeration order.
    pub entry: RepresentationEntry,
    pub multiplicity: usize,
}

/// Same members as [`enumerate_representations`], grouped by
/// [`Representation::x2_partition_key`] in first-seen order.
///
/// Entropies are computed once per group, which keeps the exhaustive policy
/// cheap at its cap.
pub fn representation_classes(
    joint: &JointPmf,
    epsilon: f64,
    policy: AssignmentPolicy,
    base: LogBase,
) -> Result<Vec<RepresentationClass>> {
    if !(epsilon >= 0.0) {
        return Err(PmechError::validation(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    let nx = joint.x_size();
    let px = joint.px();
    let mut classes: Vec<RepresentationClass> = Vec::new();
    // key -> index into `classes`, or None for a group failing the filter
    let mut seen: HashMap<Vec<usize>, Option<usize>> = HashMap::new();
    let mut key = Vec::with_capacity(nx);
    let mut relabel = Vec::new();
    let mut visit = |pair: FactorPair, assignment: &[[usize; 2]]| {
        key.clear();
        relabel.clear();
        relabel.resize(pair.n2, usize::MAX);
        let mut next = 0;
        for c in assignment {
            if relabel[c[1]] == usize::MAX {
                relabel[c[1]] = next;
                next += 1;
            }
            key.push(relabel[c[1]]);
        }
        match seen.get(key.as_slice()) {
            Some(Some(i)) => classes[*i].multiplicity += 1,
            Some(None) => {}
            None => {
                let rep = Representation {
                    n1: pair.n1,
                    n2: pair.n2,
                    padded: pair.padded,
                    assignment: assignment.to_vec(),
                };
                let (h_x2, h_x2_given_y) = x2_entropies(joint, &px, &rep, base);
                let slot = (h_x2 > 0.0 && h_x2 >= epsilon).then(|| {
                    classes.push(RepresentationClass {
                        entry: RepresentationEntry {
                            rep,
                            h_x2,
                            h_x2_given_y,
                        },
                        multiplicity: 1,
                    });
                    classes.len() - 1
                });
                seen.insert(key.clone(), slot);
            }
        }
    };
    for pair in factor_pairs(nx) {
        match policy.effective(nx) {
            AssignmentPolicy::Exhaustive { .. } => {
                let cells: Vec<[usize; 2]> = (0..pair.n1)
                    .flat_map(|a| (0..pair.n2).map(move |b| [a, b]))
                    .collect();
                for_each_permutation(cells, |perm| visit(pair, &perm[..nx]));
            }
            AssignmentPolicy::Canonical => {
                let a = Representation::row_major(nx, pair);
                let b = Representation::column_major(nx, pair);
                visit(pair, &a.assignment);
                if a != b {
                    visit(pair, &b.assignment);
                }
            }
        }
    }
    Ok(classes)
}

fn x2_entropies(joint: &JointPmf, px: &[f64], rep: &Representation, base: LogBase) -> (f64, f64) {
    let ny = joint.y_size();
    let mut px2 = vec![0.0; rep.n2];
    let mut px2y = vec![0.0; rep.n2 * ny];
    for (x, &[_, b]) in rep.assignment.iter().enumerate() {
        px2[b] += px[x];
        for y in 0..ny {
            px2y[b * ny + y] += joint.get(x, y);
        }
    }
    let h_x2 = base.from_nats(entropy_nats(px2));
    let h_x2_y = base.from_nats(entropy_nats(px2y));
    (h_x2, (h_x2_y - joint.h_y(base)).max(0.0))
}

/// Heap's algorithm; calls `f` once per permutation of `items`.
fn for_each_permutation<T: Clone>(mut items: Vec<T>, mut f: impl FnMut(&[T])) {
    let n = items.len();
    let mut c = vec![0usize; n];
    f(&items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            f(&items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}
