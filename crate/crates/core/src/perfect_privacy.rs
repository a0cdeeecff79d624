//! Zero-leakage utility `g0`: the largest `I(Y;U)` over Markov mechanisms
//! `X - Y - U` with `U` independent of `X`.
//!
//! Writing `P_Y = Σ_u P_U(u) P_{Y|U=u}`, independence of `U` and `X` is
//! exactly `P_{X|Y} P_{Y|U=u} = P_X` for every `u`. So `g0 = H(Y) - min Σ w_u
//! H(p_u)` over decompositions of `P_Y` into points `p_u` of the polytope
//! `{v >= 0, Σ v = 1, P_{X|Y} v = P_X}`. Entropy is concave, so the minimum
//! is attained with every `p_u` a vertex, which turns the problem into an LP
//! over vertex weights.

use serde::{Deserialize, Serialize};

use crate::error::{PmechError, Result};
use crate::lp::{linalg, minimize};
use crate::prob::{entropy_nats, JointPmf, LogBase};

pub const DEFAULT_VERTEX_CAP: usize = 12;
const DEDUP_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;

/// The feasible set of zero-leakage output laws `P_{Y|U=u}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerfectPrivacyPolytope {
    /// `P_{X|Y}` as an `|X| x |Y|` matrix; columns of zero-mass `y` are zero.
    pub constraint: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    /// Vertices as pmfs over the full `Y` alphabet.
    pub vertices: Vec<Vec<f64>>,
    /// Rank of `[P_{X|Y}; 1]` restricted to the support of `P_Y`.
    pub rank: usize,
    /// Symbols `y` with `P_Y(y) > 0`.
    pub support: Vec<usize>,
}

impl PerfectPrivacyPolytope {
    /// `max_x |Σ_y P(x|y) v(y) - P_X(x)|` together with `|Σ v - 1|`.
    pub fn residual(&self, v: &[f64]) -> f64 {
        let mut worst = (v.iter().sum::<f64>() - 1.0).abs();
        for (row, &t) in self.constraint.iter().zip(&self.target) {
            let s: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            worst = worst.max((s - t).abs());
        }
        worst
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        v.iter().all(|&p| p >= -tol) && self.residual(v) <= tol
    }
}

/// Witness for `g0`: `P_Y = Σ_u weights[u] * pmfs[u]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Decomposition {
    pub weights: Vec<f64>,
    pub pmfs: Vec<Vec<f64>>,
    /// `H(Y) - Σ_u w_u H(p_u)`.
    pub utility: f64,
}

impl Decomposition {
    /// `‖Σ w p - target‖∞`.
    pub fn residual(&self, target: &[f64]) -> f64 {
        target
            .iter()
            .enumerate()
            .map(|(y, &t)| {
                let s: f64 = self.weights.iter().zip(&self.pmfs).map(|(w, p)| w * p[y]).sum();
                (s - t).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct G0Result {
    pub value: f64,
    pub witness: Decomposition,
    pub log_base: LogBase,
}

fn combinations(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// All basic feasible solutions of `{v >= 0, Σ v = 1, P_{X|Y} v = P_X}`.
pub fn enumerate_vertices(joint: &JointPmf, vertex_cap: usize) -> Result<PerfectPrivacyPolytope> {
    let nx = joint.x_size();
    let ny = joint.y_size();
    let py = joint.py();
    let px = joint.px();
    let support: Vec<usize> = (0..ny).filter(|&y| py[y] > 0.0).collect();
    if support.len() > vertex_cap {
        return Err(PmechError::Size(format!(
            "{} symbols of Y carry mass but the vertex cap is {vertex_cap}; \
             merge rare symbols of Y or raise the cap",
            support.len()
        )));
    }
    let mut constraint = vec![vec![0.0; ny]; nx];
    for &y in &support {
        for x in 0..nx {
            constraint[x][y] = joint.get(x, y) / py[y];
        }
    }

    // system over the support: P_{X|Y} rows then the normalization row
    let mut rows: Vec<Vec<f64>> = constraint
        .iter()
        .map(|r| support.iter().map(|&y| r[y]).collect())
        .collect();
    rows.push(vec![1.0; support.len()]);
    let mut rhs = px.clone();
    rhs.push(1.0);
    let keep = linalg::independent_rows(&rows);
    let rank = keep.len();
    let a: Vec<&Vec<f64>> = keep.iter().map(|&i| &rows[i]).collect();
    let b: Vec<f64> = keep.iter().map(|&i| rhs[i]).collect();

    let mut polytope = PerfectPrivacyPolytope {
        constraint,
        target: px,
        vertices: Vec::new(),
        rank,
        support: support.clone(),
    };
    combinations(support.len(), rank, |cols| {
        let sub: Vec<Vec<f64>> = a.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect();
        let Some(sol) = linalg::solve(&sub, &b) else {
            return;
        };
        if sol.iter().any(|&v| v < -FEAS_TOL) {
            return;
        }
        let mut v = vec![0.0; ny];
        for (&c, &s) in cols.iter().zip(&sol) {
            v[support[c]] = s.max(0.0);
        }
        if polytope.residual(&v) > FEAS_TOL {
            return;
        }
        let dup = polytope
            .vertices
            .iter()
            .any(|w| w.iter().zip(&v).all(|(a, b)| (a - b).abs() <= DEDUP_TOL));
        if !dup {
            polytope.vertices.push(v);
        }
    });
    if polytope.vertices.is_empty() {
        return Err(PmechError::Solver(
            "no vertex found; P_Y itself should be feasible".into(),
        ));
    }
    Ok(polytope)
}

/// `g0` with an optimal decomposition of `P_Y` into polytope vertices.
pub fn g0(joint: &JointPmf, base: LogBase) -> Result<G0Result> {
    g0_with_cap(joint, base, DEFAULT_VERTEX_CAP)
}

pub fn g0_with_cap(joint: &JointPmf, base: LogBase, vertex_cap: usize) -> Result<G0Result> {
    let polytope = enumerate_vertices(joint, vertex_cap)?;
    g0_on(&polytope, joint, base)
}

/// Solves the decomposition LP over an already enumerated polytope.
pub fn g0_on(polytope: &PerfectPrivacyPolytope, joint: &JointPmf, base: LogBase) -> Result<G0Result> {
    let py = joint.py();
    let h = |p: &[f64]| base.from_nats(entropy_nats(p.iter().copied()));
    let h_y = h(&py);

    if polytope.vertices.len() == 1 {
        // the polytope is the single point P_Y
        let v = polytope.vertices[0].clone();
        let res = v.iter().zip(&py).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if res > FEAS_TOL {
            return Err(PmechError::Solver(format!(
                "single vertex differs from P_Y by {res:.3e}"
            )));
        }
        return Ok(G0Result {
            value: 0.0,
            witness: Decomposition {
                weights: vec![1.0],
                pmfs: vec![v],
                utility: 0.0,
            },
            log_base: base,
        });
    }

    let costs: Vec<f64> = polytope.vertices.iter().map(|v| h(v)).collect();
    let mut a: Vec<Vec<f64>> = polytope
        .support
        .iter()
        .map(|&y| polytope.vertices.iter().map(|v| v[y]).collect())
        .collect();
    a.push(vec![1.0; polytope.vertices.len()]);
    let mut b: Vec<f64> = polytope.support.iter().map(|&y| py[y]).collect();
    b.push(1.0);
    let sol = minimize(&costs, &a, &b)?;

    let mut weights = Vec::new();
    let mut pmfs = Vec::new();
    for (w, v) in sol.x.iter().zip(&polytope.vertices) {
        if *w > 0.0 {
            weights.push(*w);
            pmfs.push(v.clone());
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let min_cost: f64 = weights.iter().zip(&pmfs).map(|(w, p)| w * h(p)).sum();
    let value = (h_y - min_cost).max(0.0);
    let witness = Decomposition {
        weights,
        pmfs,
        utility: value,
    };
    let res = witness.residual(&py);
    if res > FEAS_TOL {
        return Err(PmechError::Solver(format!(
            "decomposition reconstructs P_Y only to {res:.3e}"
        )));
    }
    Ok(G0Result {
        value,
        witness,
        log_base: base,
    })
}
