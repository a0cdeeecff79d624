//! Randomized search for feasible mechanisms with large utility.
//!
//! Every probed kernel is first made feasible by mixing it with a kernel that
//! always emits one fixed symbol. Leakage `I(U;X)` is convex in the kernel
//! and vanishes at the constant kernel, so it is nonincreasing along the
//! mixing path and bisection finds the smallest feasible weight. The best
//! utility seen is therefore a lower estimate of `h_ε`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{PmechError, Result};
use crate::mechanism::{Arithmetic, Mechanism, Provenance};
use crate::perfect_privacy::g0;
use crate::prob::{JointPmf, LogBase};
use crate::synthesis::synthesize_frl;

pub const MAX_CELLS: usize = 12;
pub const MAX_U_CAP: usize = 6;
const BISECTION_TOL: f64 = 1e-6;
/// Slack on the leakage budget absorbing rounding in exact constructions.
const FEAS_TOL: f64 = 1e-12;
const RESTARTS: usize = 16;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleEstimate {
    /// Best `I(Y;U)` found; achieved by `kernel`.
    pub value: f64,
    pub leakage: f64,
    pub epsilon: f64,
    pub u_size: usize,
    /// Flat `kernel[(x * |Y| + y) * u_size + u]`.
    pub kernel: Vec<f64>,
    pub evaluations: usize,
    pub seed: u64,
    pub log_base: LogBase,
}

impl OracleEstimate {
    /// The witness kernel as an exact mechanism over `joint`.
    pub fn mechanism(&self, joint: &JointPmf) -> Result<Mechanism> {
        Mechanism::exact(
            joint,
            self.u_size,
            self.kernel.clone(),
            Provenance {
                epsilon: Some(self.epsilon),
                ..Provenance::default()
            },
        )
    }
}

struct Problem {
    nx: usize,
    ny: usize,
    nu: usize,
    pxy: Vec<f64>,
    px: Vec<f64>,
    py: Vec<f64>,
    eps: f64,
    ln_base: f64,
}

impl Problem {
    /// `(I(Y;U), I(X;U))` in the configured base.
    fn measures(&self, k: &[f64]) -> (f64, f64) {
        let (nx, ny, nu) = (self.nx, self.ny, self.nu);
        let mut pxu = vec![0.0; nx * nu];
        let mut pyu = vec![0.0; ny * nu];
        let mut pu = vec![0.0; nu];
        for x in 0..nx {
            for y in 0..ny {
                let p = self.pxy[x * ny + y];
                if p == 0.0 {
                    continue;
                }
                let row = &k[(x * ny + y) * nu..(x * ny + y + 1) * nu];
                for (u, &q) in row.iter().enumerate() {
                    let m = p * q;
                    pxu[x * nu + u] += m;
                    pyu[y * nu + u] += m;
                    pu[u] += m;
                }
            }
        }
        let mi = |joint: &[f64], marg: &[f64], n: usize| {
            let mut s = 0.0;
            for a in 0..n {
                for u in 0..nu {
                    let m = joint[a * nu + u];
                    if m > 0.0 {
                        s += m * (m / (marg[a] * pu[u])).ln();
                    }
                }
            }
            (s / self.ln_base).max(0.0)
        };
        (mi(&pyu, &self.py, ny), mi(&pxu, &self.px, nx))
    }

    fn mix(&self, k: &[f64], u0: usize, lambda: f64, out: &mut [f64]) {
        for (i, (o, &v)) in out.iter_mut().zip(k).enumerate() {
            let target = if i % self.nu == u0 { 1.0 } else { 0.0 };
            *o = (1.0 - lambda) * v + lambda * target;
        }
    }

    /// Mixes `k` toward the constant kernel on its most likely symbol until
    /// the leakage budget holds. Returns the projected kernel, its utility
    /// and leakage, and the number of evaluations spent.
    fn project(&self, k: &[f64]) -> (Vec<f64>, f64, f64, usize) {
        let (u_val, leak) = self.measures(k);
        if leak <= self.eps + FEAS_TOL {
            return (k.to_vec(), u_val, leak, 1);
        }
        let nu = self.nu;
        let mut pu = vec![0.0; nu];
        for (cell, &p) in self.pxy.iter().enumerate() {
            for u in 0..nu {
                pu[u] += p * k[cell * nu + u];
            }
        }
        let u0 = (0..nu)
            .max_by(|&a, &b| pu[a].total_cmp(&pu[b]))
            .unwrap_or(0);
        let mut buf = vec![0.0; k.len()];
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut best = (self.measures_at(k, u0, 1.0, &mut buf), 1.0);
        let mut evals = 2;
        while hi - lo > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            let m = self.measures_at(k, u0, mid, &mut buf);
            evals += 1;
            if m.1 <= self.eps + FEAS_TOL {
                hi = mid;
                best = (m, mid);
            } else {
                lo = mid;
            }
        }
        self.mix(k, u0, best.1, &mut buf);
        (buf, best.0 .0, best.0 .1, evals)
    }

    fn measures_at(&self, k: &[f64], u0: usize, lambda: f64, buf: &mut [f64]) -> (f64, f64) {
        self.mix(k, u0, lambda, buf);
        self.measures(buf)
    }
}

fn random_kernel(rng: &mut ChaCha8Rng, cells: usize, nu: usize) -> Vec<f64> {
    let mut k = vec![0.0; cells * nu];
    // alternate between sparse Dirichlet rows and deterministic rows
    let shape = [0.2, 0.5, 1.0][rng.random_range(0..3)];
    let deterministic = rng.random_bool(0.3);
    let gamma = Gamma::new(shape, 1.0).expect("valid gamma shape");
    for row in k.chunks_mut(nu) {
        if deterministic {
            row[rng.random_range(0..nu)] = 1.0;
        } else {
            let mut s = 0.0;
            for v in row.iter_mut() {
                *v = gamma.sample(rng);
                s += *v;
            }
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            } else {
                row[0] = 1.0;
            }
        }
    }
    k
}

/// Zero-leakage kernels from known constructions (the `g0` decomposition and
/// the functional representation) and their time-shares with `U = Y` at the
/// weight that spends the whole budget. Kernels needing more than `nu`
/// symbols are skipped.
fn structured_seeds(joint: &JointPmf, eps: f64, nu: usize, base: LogBase) -> Vec<Vec<f64>> {
    let (nx, ny) = (joint.x_size(), joint.y_size());
    let py = joint.py();
    let mut zero_leak: Vec<(usize, Vec<f64>)> = Vec::new();
    if let Ok(r) = g0(joint, base) {
        let m = r.witness.weights.len();
        let mut k = vec![0.0; nx * ny * m];
        for x in 0..nx {
            for y in 0..ny {
                let row = &mut k[(x * ny + y) * m..(x * ny + y + 1) * m];
                if py[y] > 0.0 {
                    for (u, (w, p)) in r.witness.weights.iter().zip(&r.witness.pmfs).enumerate() {
                        row[u] = w * p[y] / py[y];
                    }
                } else {
                    row[0] = 1.0;
                }
            }
        }
        zero_leak.push((m, k));
    }
    if let Ok(f) = synthesize_frl(joint, None, Arithmetic::Float) {
        zero_leak.push((f.u_size, f.kernel_flat()));
    }

    let mi = joint.mutual_information(base);
    let t = if eps >= mi { 1.0 } else { eps / mi };
    let support: Vec<usize> = (0..ny).filter(|&y| py[y] > 0.0).collect();
    let mut out = Vec::new();
    let mut push = |m: usize, src: &dyn Fn(usize, usize, usize) -> f64| {
        if m <= nu {
            let mut k = vec![0.0; nx * ny * nu];
            for x in 0..nx {
                for y in 0..ny {
                    for u in 0..m {
                        k[(x * ny + y) * nu + u] = src(x, y, u);
                    }
                }
            }
            out.push(k);
        }
    };
    for (m, k) in &zero_leak {
        let (m, k) = (*m, k.as_slice());
        push(m, &|x, y, u| k[(x * ny + y) * m + u]);
        if t > 0.0 {
            // symbols m.. reveal y
            push(m + support.len(), &|x, y, u| {
                if u < m {
                    (1.0 - t) * k[(x * ny + y) * m + u]
                } else if support.get(u - m) == Some(&y) || (py[y] == 0.0 && u == m) {
                    t
                } else {
                    0.0
                }
            });
        }
    }
    out
}

/// Best feasible `I(Y;U)` over `budget` kernel evaluations with `|U| = u_cap`.
pub fn estimate_h_eps(
    joint: &JointPmf,
    epsilon: f64,
    u_cap: usize,
    budget: usize,
    seed: u64,
    base: LogBase,
) -> Result<OracleEstimate> {
    let (nx, ny) = (joint.x_size(), joint.y_size());
    if nx * ny > MAX_CELLS {
        return Err(PmechError::Size(format!(
            "|X|*|Y| = {} exceeds the oracle cap {MAX_CELLS}",
            nx * ny
        )));
    }
    if !(2..=MAX_U_CAP).contains(&u_cap) {
        return Err(PmechError::Size(format!(
            "u_cap must lie in 2..={MAX_U_CAP}, got {u_cap}"
        )));
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(PmechError::validation(format!(
            "epsilon must be a finite value >= 0, got {epsilon}"
        )));
    }
    let pb = Problem {
        nx,
        ny,
        nu: u_cap,
        pxy: joint.as_slice().to_vec(),
        px: joint.px(),
        py: joint.py(),
        eps: epsilon,
        ln_base: base.value().ln(),
    };
    let cells = nx * ny;
    let live: Vec<usize> = (0..cells).filter(|&c| pb.pxy[c] > 0.0).collect();

    let mut best_k = vec![0.0; cells * u_cap];
    best_k.iter_mut().step_by(u_cap).for_each(|v| *v = 1.0);
    let mut best = (0.0, 0.0);
    let mut evaluations = 0;
    let per_restart = (budget / RESTARTS).max(1);

    let seeds: Vec<(Vec<f64>, f64, f64)> = structured_seeds(joint, epsilon, u_cap, base)
        .into_iter()
        .map(|k| {
            let (k, v, l, e) = pb.project(&k);
            evaluations += e;
            (k, v, l)
        })
        .collect();
    for (k, v, l) in &seeds {
        if *v > best.0 {
            best = (*v, *l);
            best_k = k.clone();
        }
    }

    for restart in 0..RESTARTS {
        if evaluations >= budget {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let stop = (evaluations + per_restart).min(budget);

        // exploration: keep the best of a batch of random kernels; the
        // first restarts instead polish the structured seeds
        let (mut cur, mut cur_val, mut cur_leak) = (best_k.clone(), best.0, best.1);
        let mut first = true;
        let explore_until = if let Some((k, v, l)) = seeds.get(restart) {
            (cur, cur_val, cur_leak) = (k.clone(), *v, *l);
            first = false;
            evaluations
        } else {
            evaluations + (stop - evaluations) / 3
        };
        while evaluations < explore_until || first {
            let (k, v, l, e) = pb.project(&random_kernel(&mut rng, cells, u_cap));
            evaluations += e;
            if first || v > cur_val {
                (cur, cur_val, cur_leak) = (k, v, l);
                first = false;
            }
        }

        // local improvement: move mass between two symbols of one row
        let mut step: f64 = 0.25;
        let mut trial = vec![0.0; cur.len()];
        while evaluations < stop && !live.is_empty() {
            let cell = live[rng.random_range(0..live.len())];
            let a = rng.random_range(0..u_cap);
            let b = rng.random_range(0..u_cap);
            let base_idx = cell * u_cap;
            if a == b || cur[base_idx + a] <= 0.0 {
                evaluations += 1;
                continue;
            }
            trial.copy_from_slice(&cur);
            let amount = (step * rng.random::<f64>()).min(trial[base_idx + a]);
            trial[base_idx + a] -= amount;
            trial[base_idx + b] += amount;
            let (k, v, l, e) = pb.project(&trial);
            evaluations += e;
            if v > cur_val + 1e-12 {
                (cur, cur_val, cur_leak) = (k, v, l);
                step = (step * 1.5).min(1.0);
            } else {
                step = (step * 0.97).max(1e-4);
            }
        }
        if cur_val > best.0 {
            best = (cur_val, cur_leak);
            best_k = cur;
        }
    }

    Ok(OracleEstimate {
        value: best.0,
        leakage: best.1,
        epsilon,
        u_size: u_cap,
        kernel: best_k,
        evaluations,
        seed,
        log_base: base,
    })
}
