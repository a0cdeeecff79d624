//! Test-side reference computations, written without touching the library's
//! own entropy, bound or LP code.

#![allow(dead_code)]

use pmech_core::prob::{JointPmf, TripletPmf};
use pmech_core::separation::Representation;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Shannon entropy in bits of an unnormalized-safe weight vector.
pub fn h(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum()
}

pub fn rows(j: &JointPmf) -> Vec<Vec<f64>> {
    (0..j.x_size())
        .map(|x| (0..j.y_size()).map(|y| j.get(x, y)).collect())
        .collect()
}

pub fn px(j: &JointPmf) -> Vec<f64> {
    rows(j).iter().map(|r| r.iter().sum()).collect()
}

pub fn py(j: &JointPmf) -> Vec<f64> {
    let r = rows(j);
    (0..j.y_size()).map(|y| r.iter().map(|row| row[y]).sum()).collect()
}

pub fn h_xy(j: &JointPmf) -> f64 {
    h(&rows(j).concat())
}

pub fn h_y_given_x(j: &JointPmf) -> f64 {
    h_xy(j) - h(&px(j))
}

pub fn h_x_given_y(j: &JointPmf) -> f64 {
    h_xy(j) - h(&py(j))
}

pub fn mi(j: &JointPmf) -> f64 {
    h(&px(j)) + h(&py(j)) - h_xy(j)
}

pub fn sfrl_c(j: &JointPmf) -> f64 {
    (mi(j) + 1.0).log2() + 4.0
}

/// Marginal of a triplet over the kept axes (0 = X, 1 = Y, 2 = U), flattened.
fn marg(t: &TripletPmf, keep: [bool; 3]) -> Vec<f64> {
    let dims = [t.x_size(), t.y_size(), t.u_size()];
    let size: usize = (0..3).filter(|&i| keep[i]).map(|i| dims[i]).product();
    let mut out = vec![0.0; size];
    for x in 0..dims[0] {
        for y in 0..dims[1] {
            for u in 0..dims[2] {
                let idx = [x, y, u];
                let mut k = 0;
                for i in 0..3 {
                    if keep[i] {
                        k = k * dims[i] + idx[i];
                    }
                }
                out[k] += t.get(x, y, u);
            }
        }
    }
    out
}

fn ht(t: &TripletPmf, keep: [bool; 3]) -> f64 {
    h(&marg(t, keep))
}

#[derive(Debug, Clone, Copy)]
pub struct Measures {
    pub i_ux: f64,
    pub i_yu: f64,
    pub h_y_given_ux: f64,
    pub i_xu_given_y: f64,
    pub h_y_given_x: f64,
}

impl Measures {
    pub fn of(t: &TripletPmf) -> Self {
        let (x, y, u) = ([true, false, false], [false, true, false], [false, false, true]);
        let xy = [true, true, false];
        let xu = [true, false, true];
        let yu = [false, true, true];
        let xyu = [true, true, true];
        Measures {
            i_ux: ht(t, x) + ht(t, u) - ht(t, xu),
            i_yu: ht(t, y) + ht(t, u) - ht(t, yu),
            h_y_given_ux: ht(t, xyu) - ht(t, xu),
            i_xu_given_y: ht(t, xy) + ht(t, yu) - ht(t, xyu) - ht(t, y),
            h_y_given_x: ht(t, xy) - ht(t, x),
        }
    }

    pub fn key_residual(&self) -> f64 {
        (self.i_ux + self.h_y_given_x - self.h_y_given_ux - self.i_xu_given_y - self.i_yu).abs()
    }
}

/// Random joint with strictly positive cells.
pub fn random_joint(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> JointPmf {
    let p: Vec<f64> = (0..nx * ny).map(|_| 0.02 + rng.random::<f64>()).collect();
    let s: f64 = p.iter().sum();
    JointPmf::new(nx, ny, p.iter().map(|v| v / s).collect()).unwrap()
}

/// Random joint with `X = f(Y)` for a random surjective `f`.
pub fn functional_joint(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> JointPmf {
    let mut f: Vec<usize> = (0..ny).map(|y| y % nx).collect();
    for y in nx..ny {
        f[y] = rng.random_range(0..nx);
    }
    let w: Vec<f64> = (0..ny).map(|_| 0.05 + rng.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    let mut p = vec![0.0; nx * ny];
    for y in 0..ny {
        p[f[y] * ny + y] = w[y] / s;
    }
    JointPmf::new(nx, ny, p).unwrap()
}

/// `H(X2)` and `H(X2|Y)` of a representation.
pub fn x2_entropies(j: &JointPmf, rep: &Representation) -> (f64, f64) {
    let r = rows(j);
    let mut x2y = vec![0.0; rep.n2 * j.y_size()];
    for (x, cell) in rep.assignment.iter().enumerate() {
        for y in 0..j.y_size() {
            x2y[cell[1] * j.y_size() + y] += r[x][y];
        }
    }
    let x2: Vec<f64> = x2y.chunks(j.y_size()).map(|c| c.iter().sum()).collect();
    (h(&x2), h(&x2y) - h(&py(j)))
}

pub fn l1(j: &JointPmf, eps: f64) -> f64 {
    h_y_given_x(j) - h_x_given_y(j) + eps
}

pub fn l2(j: &JointPmf, eps: f64) -> f64 {
    let a = eps / h(&px(j));
    h_y_given_x(j) - a * h_x_given_y(j) + eps - (1.0 - a) * sfrl_c(j)
}

pub fn u1(j: &JointPmf, eps: f64) -> f64 {
    h_y_given_x(j) + eps
}

/// Separated lower bounds for one representation.
pub fn l4_l5(j: &JointPmf, eps: f64, rep: &Representation) -> (f64, f64) {
    let (hx2, hx2y) = x2_entropies(j, rep);
    let a2 = eps / hx2;
    let c = sfrl_c(j);
    let base = h_y_given_x(j) + eps;
    (base - c - a2 * hx2y, base - (1.0 - a2) * c - a2 * h_x_given_y(j))
}

/// Brute-force zero-leakage utility.
///
/// The admissible `Y`-laws form `{v >= 0 : P_{X|Y} v = P_X}`, parametrized
/// as `v = P_Y + N t` with `N` a null-space basis. The smallest mixture cost
/// `sum w H(v)` reaching `P_Y` is searched over corners plus a boundary and
/// interior grid, using segments (one free direction) or triangles (two).
pub fn g0_grid(j: &JointPmf) -> f64 {
    let r = rows(j);
    let pyv = py(j);
    let ny = j.y_size();
    let cond: Vec<Vec<f64>> = r
        .iter()
        .map(|row| (0..ny).map(|y| row[y] / pyv[y]).collect())
        .collect();
    let null = null_space(&cond, ny);
    let hy = h(&pyv);
    let point = |t: &[f64]| -> Vec<f64> {
        (0..ny)
            .map(|y| pyv[y] + null.iter().zip(t).map(|(n, ti)| n[y] * ti).sum::<f64>())
            .collect()
    };
    let cost = |t: &[f64]| h(&point(t).iter().map(|v| v.max(0.0)).collect::<Vec<_>>());
    match null.len() {
        0 => 0.0,
        1 => {
            let (lo, hi) = ratio_range(&pyv, &null[0]);
            let n = 4000;
            let ts: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
            let costs: Vec<f64> = ts.iter().map(|&t| cost(&[t])).collect();
            let mut best = hy;
            for (ia, &a) in ts.iter().enumerate().filter(|(_, &t)| t < 0.0) {
                for (ib, &b) in ts.iter().enumerate().filter(|(_, &t)| t > 0.0) {
                    let wa = b / (b - a);
                    best = best.min(wa * costs[ia] + (1.0 - wa) * costs[ib]);
                }
            }
            hy - best
        }
        2 => {
            let pts = polygon_points(&pyv, &null);
            let costs: Vec<f64> = pts.iter().map(|p| cost(p)).collect();
            let mut best = hy;
            for i in 0..pts.len() {
                for k in i + 1..pts.len() {
                    for l in k + 1..pts.len() {
                        if let Some(w) = barycentric(&pts[i], &pts[k], &pts[l]) {
                            best = best.min(w[0] * costs[i] + w[1] * costs[k] + w[2] * costs[l]);
                        }
                    }
                }
                for k in i + 1..pts.len() {
                    // origin on the segment
                    let (a, b) = (&pts[i], &pts[k]);
                    let cross = a[0] * b[1] - a[1] * b[0];
                    let dot = a[0] * b[0] + a[1] * b[1];
                    if cross.abs() < 1e-12 && dot < 0.0 {
                        let na = a[0].hypot(a[1]);
                        let nb = b[0].hypot(b[1]);
                        let wa = nb / (na + nb);
                        best = best.min(wa * costs[i] + (1.0 - wa) * costs[k]);
                    }
                }
            }
            hy - best
        }
        d => panic!("grid oracle covers at most two free directions, got {d}"),
    }
}

/// Weights of the origin in triangle `abc`, if it lies inside.
fn barycentric(a: &[f64], b: &[f64], c: &[f64]) -> Option<[f64; 3]> {
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    if det.abs() < 1e-14 {
        return None;
    }
    let wb = ((0.0 - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (0.0 - a[1])) / det;
    let wc = ((b[0] - a[0]) * (0.0 - a[1]) - (0.0 - a[0]) * (b[1] - a[1])) / det;
    let wa = 1.0 - wb - wc;
    (wa >= -1e-12 && wb >= -1e-12 && wc >= -1e-12).then_some([wa, wb, wc])
}

fn ratio_range(p: &[f64], dir: &[f64]) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (pi, di) in p.iter().zip(dir) {
        if *di > 1e-14 {
            lo = lo.max(-pi / di);
        } else if *di < -1e-14 {
            hi = hi.min(-pi / di);
        }
    }
    (lo, hi)
}

/// Corners, edge samples and an interior lattice of the 2-d feasible region.
fn polygon_points(p: &[f64], null: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let ny = p.len();
    let feasible = |t: &[f64]| (0..ny).all(|y| p[y] + null[0][y] * t[0] + null[1][y] * t[1] >= -1e-12);
    let mut corners = Vec::new();
    for a in 0..ny {
        for b in a + 1..ny {
            // null[0][y] t0 + null[1][y] t1 = -p[y] for y in {a, b}
            let det = null[0][a] * null[1][b] - null[1][a] * null[0][b];
            if det.abs() < 1e-12 {
                continue;
            }
            let t0 = (-p[a] * null[1][b] + p[b] * null[1][a]) / det;
            let t1 = (-p[b] * null[0][a] + p[a] * null[0][b]) / det;
            let t = vec![t0, t1];
            if feasible(&t) && !corners.iter().any(|c: &Vec<f64>| (c[0] - t0).abs() + (c[1] - t1).abs() < 1e-10) {
                corners.push(t);
            }
        }
    }
    let cx = corners.iter().map(|c| c[0]).sum::<f64>() / corners.len() as f64;
    let cy = corners.iter().map(|c| c[1]).sum::<f64>() / corners.len() as f64;
    corners.sort_by(|a, b| (a[1] - cy).atan2(a[0] - cx).total_cmp(&(b[1] - cy).atan2(b[0] - cx)));
    let mut pts = corners.clone();
    let per_edge = 12;
    for i in 0..corners.len() {
        let (a, b) = (&corners[i], &corners[(i + 1) % corners.len()]);
        for s in 1..per_edge {
            let f = s as f64 / per_edge as f64;
            pts.push(vec![a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])]);
        }
    }
    let (xmin, xmax) = corners.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), c| (l.min(c[0]), h.max(c[0])));
    let (ymin, ymax) = corners.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), c| (l.min(c[1]), h.max(c[1])));
    let n = 10;
    for i in 1..n {
        for k in 1..n {
            let t = vec![
                xmin + (xmax - xmin) * i as f64 / n as f64,
                ymin + (ymax - ymin) * k as f64 / n as f64,
            ];
            if feasible(&t) {
                pts.push(t);
            }
        }
    }
    pts
}

/// Orthonormal basis of `{v : A v = 0}` via reduced row echelon form.
fn null_space(a: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(best) = (row..m.len()).max_by(|&i, &k| m[i][col].abs().total_cmp(&m[k][col].abs())) else {
            break;
        };
        if m[best][col].abs() < 1e-10 {
            continue;
        }
        m.swap(row, best);
        let piv = m[row][col];
        for v in m[row].iter_mut() {
            *v /= piv;
        }
        for i in 0..m.len() {
            if i != row {
                let f = m[i][col];
                for c in 0..n {
                    m[i][c] -= f * m[row][c];
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for free in (0..n).filter(|c| !pivots.contains(c)) {
        let mut v = vec![0.0; n];
        v[free] = 1.0;
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -m[r][free];
        }
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        basis.push(v.into_iter().map(|x| x / norm).collect());
    }
    basis
}
