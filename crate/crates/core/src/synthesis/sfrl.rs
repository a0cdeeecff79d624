//! Sampled strong functional representation via the Poisson functional
//! representation.
//!
//! Every trial draws one shared candidate stream `(y_i, t_i)` with
//! `y_i ~ P_Y` and `t_i` the arrival times of a unit-rate Poisson process. For
//! each `x` the selected candidate minimizes `t_i / r_x(y_i)` with
//! `r_x(y) = P_{Y|X}(y|x) / P_Y(y)`, which makes the selected `y` exactly
//! `P_{Y|X}(·|x)`-distributed. The stream does not depend on `x`, so the vector
//! `f = (y_{K(x)})_x` of per-`x` selections is independent of `X`, and
//! `Y = f(X)` is a deterministic function of `(f, X)`. `U` is the index of `f`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{PmechError, Result};
use crate::mechanism::{
    nest, Construction, Flavor, Mechanism, Provenance, TailDiagnostic,
};
use crate::prob::{JointPmf, TripletPmf};

/// Smallest accepted sample budget.
pub const MIN_SAMPLE_BUDGET: u64 = 10_000;
pub const DEFAULT_SHARDS: usize = 8;

/// Sampling parameters shared by every empirical construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingConfig {
    pub sample_budget: u64,
    pub seed: u64,
    pub shards: usize,
}

impl SamplingConfig {
    pub fn new(sample_budget: u64, seed: u64) -> Self {
        SamplingConfig {
            sample_budget,
            seed,
            shards: DEFAULT_SHARDS,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sample_budget < MIN_SAMPLE_BUDGET {
            return Err(PmechError::validation(format!(
                "sample budget {} below the minimum {MIN_SAMPLE_BUDGET}",
                self.sample_budget
            )));
        }
        if self.shards == 0 {
            return Err(PmechError::validation("shard count must be positive"));
        }
        Ok(())
    }
}

/// Randomized response appended to every trial: `W = labels[x]` with
/// probability `alpha`, otherwise the sentinel `source_size`.
#[derive(Debug, Clone)]
pub(crate) struct ResponsePlan {
    pub labels: Vec<usize>,
    pub source_size: usize,
    pub alpha: f64,
}

struct Selector {
    support: Vec<usize>,
    px: WeightedIndex<f64>,
    py: WeightedIndex<f64>,
    /// `ratio[x][y] = P_{Y|X}(y|x) / P_Y(y)`.
    ratio: Vec<Vec<f64>>,
    ratio_max: Vec<f64>,
    ny: usize,
}

impl Selector {
    fn new(joint: &JointPmf) -> Result<Self> {
        let px = joint.px();
        let py = joint.py();
        let ny = joint.y_size();
        let support: Vec<usize> = (0..joint.x_size()).filter(|&x| px[x] > 0.0).collect();
        let mut ratio = vec![vec![0.0; ny]; joint.x_size()];
        let mut ratio_max = vec![0.0; joint.x_size()];
        for &x in &support {
            for y in 0..ny {
                if py[y] > 0.0 {
                    ratio[x][y] = joint.get(x, y) / (px[x] * py[y]);
                }
            }
            ratio_max[x] = ratio[x].iter().copied().fold(0.0, f64::max);
        }
        Ok(Selector {
            support,
            px: WeightedIndex::new(&px)
                .map_err(|e| PmechError::validation(format!("P_X: {e}")))?,
            py: WeightedIndex::new(&py)
                .map_err(|e| PmechError::validation(format!("P_Y: {e}")))?,
            ratio,
            ratio_max,
            ny,
        })
    }

    /// Runs one candidate stream; fills `best_y` and `best_k` for every
    /// supported `x`.
    fn select<R: Rng>(&self, rng: &mut R, best_y: &mut [usize], best_k: &mut [u64]) {
        let mut best_s = [f64::INFINITY; 64];
        let best_s = &mut best_s[..best_y.len()];
        let mut t = 0.0;
        let mut i: u64 = 0;
        loop {
            i += 1;
            let step: f64 = rng.sample(Exp1);
            t += step;
            let y = self.py.sample(rng);
            let mut done = true;
            for &x in &self.support {
                let r = self.ratio[x][y];
                if r > 0.0 {
                    let s = t / r;
                    if s < best_s[x] {
                        best_s[x] = s;
                        best_y[x] = y;
                        best_k[x] = i;
                    }
                }
                // later candidates satisfy t'/r >= t/ratio_max
                if t < best_s[x] * self.ratio_max[x] {
                    done = false;
                }
            }
            if done {
                return;
            }
        }
    }

    fn encode(&self, f: &[usize]) -> u64 {
        f.iter()
            .rev()
            .fold(0u64, |acc, &y| acc * self.ny as u64 + y as u64)
    }
}

/// Tallies of one sampling run keyed by `(f code, w, x, y)`.
pub(crate) struct PfrRun {
    pub cells: BTreeMap<(u64, usize, usize, usize), u64>,
    pub index_hist: BTreeMap<u64, u64>,
    pub total: u64,
}

pub(crate) fn sample_pfr(
    joint: &JointPmf,
    cfg: &SamplingConfig,
    response: Option<&ResponsePlan>,
) -> Result<PfrRun> {
    cfg.validate()?;
    let nx = joint.x_size();
    if nx > 64 {
        return Err(PmechError::Size(format!(
            "|X| = {nx} exceeds the sampler limit of 64"
        )));
    }
    let ny = joint.y_size() as u64;
    if ny.checked_pow(nx as u32).is_none() {
        return Err(PmechError::Size(format!(
            "|Y|^|X| = {ny}^{nx} does not fit the selection-vector encoding"
        )));
    }
    if let Some(r) = response {
        if !(0.0..=1.0).contains(&r.alpha) {
            return Err(PmechError::validation(format!(
                "randomized-response probability {} outside [0, 1]",
                r.alpha
            )));
        }
    }
    let selector = Selector::new(joint)?;

    let mut cells: BTreeMap<(u64, usize, usize, usize), u64> = BTreeMap::new();
    let mut index_hist: BTreeMap<u64, u64> = BTreeMap::new();
    let per = cfg.sample_budget / cfg.shards as u64;
    let extra = cfg.sample_budget % cfg.shards as u64;
    for shard in 0..cfg.shards {
        let n = per + u64::from((shard as u64) < extra);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(shard as u64);
        let mut local: HashMap<(u64, usize, usize, usize), u64> = HashMap::new();
        let mut local_hist: HashMap<u64, u64> = HashMap::new();
        let mut best_y = vec![0usize; nx];
        let mut best_k = vec![0u64; nx];
        for _ in 0..n {
            let x = selector.px.sample(&mut rng);
            best_y.iter_mut().for_each(|v| *v = 0);
            selector.select(&mut rng, &mut best_y, &mut best_k);
            let code = selector.encode(&best_y);
            let w = match response {
                Some(r) => {
                    if rng.random::<f64>() < r.alpha {
                        r.labels[x]
                    } else {
                        r.source_size
                    }
                }
                None => 0,
            };
            *local.entry((code, w, x, best_y[x])).or_default() += 1;
            *local_hist.entry(best_k[x]).or_default() += 1;
        }
        for (k, c) in local {
            *cells.entry(k).or_default() += c;
        }
        for (k, c) in local_hist {
            *index_hist.entry(k).or_default() += c;
        }
    }
    Ok(PfrRun {
        cells,
        index_hist,
        total: cfg.sample_budget,
    })
}

fn tail_diagnostic(hist: &BTreeMap<u64, u64>, total: u64) -> TailDiagnostic {
    let mean = hist.iter().map(|(k, c)| *k as f64 * *c as f64).sum::<f64>() / total as f64;
    let target = (0.999 * total as f64).ceil() as u64;
    let mut acc = 0;
    let mut p999 = 0;
    for (&k, &c) in hist {
        acc += c;
        if acc >= target {
            p999 = k;
            break;
        }
    }
    let above: u64 = hist.range(p999 + 1..).map(|(_, c)| c).sum();
    TailDiagnostic {
        mean_index: mean,
        p999_index: p999,
        max_index: hist.keys().next_back().copied().unwrap_or(0),
        tail_mass: above as f64 / total as f64,
    }
}

/// Turns tallies into an empirical mechanism. With a response plan the
/// composite symbol is `u = ubar * (source_size + 1) + w`.
pub(crate) fn assemble(
    joint: &JointPmf,
    run: &PfrRun,
    cfg: &SamplingConfig,
    response: Option<&ResponsePlan>,
    mut provenance: Provenance,
) -> Result<Mechanism> {
    let (nx, ny) = (joint.x_size(), joint.y_size());
    let codes: BTreeSet<u64> = run.cells.keys().map(|k| k.0).collect();
    let ubar_index: HashMap<u64, usize> = codes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let base_u = codes.len();
    let w_card = response.map_or(1, |r| r.source_size + 1);
    let nu = base_u * w_card;

    let mut counts = vec![0u64; nx * ny * nu];
    for (&(code, w, x, y), &c) in &run.cells {
        let u = ubar_index[&code] * w_card + w;
        counts[(x * ny + y) * nu + u] += c;
    }
    let n = run.total as f64;
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let induced = TripletPmf::new(nx, ny, nu, p)?;

    let mut pu = vec![0.0; nu];
    for (i, &c) in counts.iter().enumerate() {
        pu[i % nu] += c as f64 / n;
    }
    let mut kernel = vec![0.0; nx * ny * nu];
    for xy in 0..nx * ny {
        let row = &counts[xy * nu..(xy + 1) * nu];
        let tot: u64 = row.iter().sum();
        let out = &mut kernel[xy * nu..(xy + 1) * nu];
        if tot == 0 {
            out.copy_from_slice(&pu);
        } else {
            for (o, &c) in out.iter_mut().zip(row) {
                *o = c as f64 / tot as f64;
            }
        }
    }
    provenance.base_u_size = Some(base_u);
    if let Some(r) = response {
        provenance.source_size = Some(r.source_size);
    }
    Ok(Mechanism {
        u_size: nu,
        kernel: nest(&kernel, nx, ny, nu),
        induced,
        flavor: Flavor::Empirical {
            sample_budget: cfg.sample_budget,
            seed: cfg.seed,
            shards: cfg.shards,
            tail: tail_diagnostic(&run.index_hist, run.total),
        },
        provenance,
    })
}

/// Empirical SFRL mechanism.
pub fn synthesize_sfrl(joint: &JointPmf, cfg: &SamplingConfig) -> Result<Mechanism> {
    let run = sample_pfr(joint, cfg, None)?;
    let provenance = Provenance {
        construction: Some(Construction::Sfrl),
        ..Provenance::default()
    };
    assemble(joint, &run, cfg, None, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{LogBase, Var};

    const B: LogBase = LogBase::BITS;

    #[test]
    fn independent_joint_selects_first_candidate() {
        let j = JointPmf::product(&[0.4, 0.6], &[0.3, 0.7]).unwrap();
        let m = synthesize_sfrl(&j, &SamplingConfig::new(20_000, 3)).unwrap();
        let Flavor::Empirical { tail, .. } = &m.flavor else {
            panic!("expected empirical flavor")
        };
        assert_eq!(tail.max_index, 1);
        // f = (y_1, y_1): U carries y_1 and nothing about X
        assert!(m.induced.mutual_information(&[Var::U], &[Var::X], B) < 1e-3);
        assert!(m.induced.conditional_mutual_information(&[Var::X], &[Var::U], &[Var::Y], B) < 1e-12);
        assert!(m.induced.conditional_entropy(&[Var::Y], &[Var::U, Var::X], B) < 1e-12);
    }

    #[test]
    fn identity_channel_marginal_matches() {
        let j = JointPmf::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let n = 50_000;
        let m = synthesize_sfrl(&j, &SamplingConfig::new(n, 11)).unwrap();
        let xy = m.induced.xy_marginal().unwrap();
        let sigma = (0.25f64 / n as f64).sqrt();
        assert!(xy.max_abs_diff(&j).unwrap() <= 3.0 * sigma);
        assert_eq!(xy.get(0, 1), 0.0);
        assert_eq!(xy.get(1, 0), 0.0);
    }

    #[test]
    fn deterministic_given_seed_and_shards() {
        let j = JointPmf::from_rows(&[vec![0.3, 0.1, 0.1], vec![0.05, 0.25, 0.2]]).unwrap();
        let cfg = SamplingConfig::new(12_345, 99);
        let a = synthesize_sfrl(&j, &cfg).unwrap();
        let b = synthesize_sfrl(&j, &cfg).unwrap();
        assert_eq!(a, b);
        let c = synthesize_sfrl(&j, &SamplingConfig::new(12_345, 100)).unwrap();
        assert_ne!(a.induced, c.induced);
    }

    #[test]
    fn budget_floor_enforced() {
        let j = JointPmf::product(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert!(synthesize_sfrl(&j, &SamplingConfig::new(100, 1)).is_err());
    }

    #[test]
    fn conditional_law_within_three_sigma() {
        let j = JointPmf::from_rows(&[vec![0.3, 0.1, 0.1], vec![0.05, 0.25, 0.2]]).unwrap();
        let n = 200_000;
        let m = synthesize_sfrl(&j, &SamplingConfig::new(n, 5)).unwrap();
        let emp = m.induced.xy_marginal().unwrap();
        let px_hat = emp.px();
        for x in 0..2 {
            let want = j.y_given_x(x).unwrap();
            let got = emp.y_given_x(x).unwrap();
            let nx = px_hat[x] * n as f64;
            for y in 0..3 {
                let sigma = (want[y] * (1.0 - want[y]) / nx).sqrt();
                assert!(
                    (got[y] - want[y]).abs() <= 3.0 * sigma,
                    "x={x} y={y} got {} want {}",
                    got[y],
                    want[y]
                );
            }
        }
    }

    #[test]
    fn structural_determinism() {
        let j = JointPmf::from_rows(&[vec![0.3, 0.1, 0.1], vec![0.05, 0.25, 0.2]]).unwrap();
        let m = synthesize_sfrl(&j, &SamplingConfig::new(30_000, 8)).unwrap();
        // each (x, u) column has mass on a single y
        for x in 0..2 {
            for u in 0..m.u_size {
                let nz = (0..3).filter(|&y| m.induced.get(x, y, u) > 0.0).count();
                assert!(nz <= 1);
            }
        }
    }
}
