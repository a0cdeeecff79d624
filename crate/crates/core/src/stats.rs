//! Information measures of a mechanism and bootstrap tolerances for
//! empirical ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::prob::{entropy_nats, LogBase, TripletPmf};

pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 200;

/// The quantities appearing in the decomposition
/// `I(Y;U) = I(X;U) + H(Y|X) - H(Y|U,X) - I(X;U|Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InfoMeasures {
    pub i_ux: f64,
    pub i_yu: f64,
    pub h_y_given_ux: f64,
    pub i_xu_given_y: f64,
    pub h_y_given_x: f64,
}

impl InfoMeasures {
    pub fn of(t: &TripletPmf, base: LogBase) -> Self {
        Self::from_cells(
            [t.x_size(), t.y_size(), t.u_size()],
            t.as_slice()
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(i, &p)| {
                    let nu = t.u_size();
                    let ny = t.y_size();
                    (i / (ny * nu), (i / nu) % ny, i % nu, p)
                }),
            base,
        )
    }

    /// From sparse `(x, y, u, p)` cells.
    pub fn from_cells(
        dims: [usize; 3],
        cells: impl IntoIterator<Item = (usize, usize, usize, f64)>,
        base: LogBase,
    ) -> Self {
        let [nx, ny, nu] = dims;
        let mut px = vec![0.0; nx];
        let mut py = vec![0.0; ny];
        let mut pu = vec![0.0; nu];
        let mut pxy = vec![0.0; nx * ny];
        let mut pxu = vec![0.0; nx * nu];
        let mut pyu = vec![0.0; ny * nu];
        let mut h_xyu = 0.0;
        for (x, y, u, p) in cells {
            if p <= 0.0 {
                continue;
            }
            h_xyu -= p * p.ln();
            px[x] += p;
            py[y] += p;
            pu[u] += p;
            pxy[x * ny + y] += p;
            pxu[x * nu + u] += p;
            pyu[y * nu + u] += p;
        }
        let h = |v: Vec<f64>| entropy_nats(v);
        let (h_x, h_y, h_u) = (h(px), h(py), h(pu));
        let (h_xy, h_xu, h_yu) = (h(pxy), h(pxu), h(pyu));
        let f = |v: f64| base.from_nats(v);
        InfoMeasures {
            i_ux: f((h_x + h_u - h_xu).max(0.0)),
            i_yu: f((h_y + h_u - h_yu).max(0.0)),
            h_y_given_ux: f((h_xyu - h_xu).max(0.0)),
            i_xu_given_y: f((h_xy + h_yu - h_xyu - h_y).max(0.0)),
            h_y_given_x: f((h_xy - h_x).max(0.0)),
        }
    }

    /// `|I(Y;U) - [I(X;U) + H(Y|X) - H(Y|U,X) - I(X;U|Y)]|`.
    pub fn key_identity_residual(&self) -> f64 {
        (self.i_yu - (self.i_ux + self.h_y_given_x - self.h_y_given_ux - self.i_xu_given_y)).abs()
    }

    fn fields(&self) -> [f64; 5] {
        [
            self.i_ux,
            self.i_yu,
            self.h_y_given_ux,
            self.i_xu_given_y,
            self.h_y_given_x,
        ]
    }

    fn from_fields(v: [f64; 5]) -> Self {
        InfoMeasures {
            i_ux: v[0],
            i_yu: v[1],
            h_y_given_ux: v[2],
            i_xu_given_y: v[3],
            h_y_given_x: v[4],
        }
    }
}

/// Per-quantity statistical tolerance `3·sd + |bias|`, both estimated by a
/// multinomial bootstrap of the empirical triplet built from `n` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapTolerance {
    pub delta: InfoMeasures,
    pub sd: InfoMeasures,
    pub bias: InfoMeasures,
    pub resamples: usize,
}

pub fn bootstrap_tolerance(
    t: &TripletPmf,
    n: u64,
    resamples: usize,
    seed: u64,
    base: LogBase,
) -> BootstrapTolerance {
    let dims = [t.x_size(), t.y_size(), t.u_size()];
    let (ny, nu) = (t.y_size(), t.u_size());
    let cells: Vec<(usize, usize, usize, f64)> = t
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| (i / (ny * nu), (i / nu) % ny, i % nu, p))
        .collect();
    let point = InfoMeasures::from_cells(dims, cells.iter().copied(), base).fields();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = [0.0; 5];
    let mut sum_sq = [0.0; 5];
    let mut resampled = Vec::with_capacity(cells.len());
    for _ in 0..resamples {
        resampled.clear();
        let mut left = n;
        let mut mass_left = 1.0;
        for &(x, y, u, p) in &cells {
            if left == 0 {
                break;
            }
            let q = (p / mass_left).clamp(0.0, 1.0);
            let c = Binomial::new(left, q).map_or(left, |b| b.sample(&mut rng));
            left -= c;
            mass_left -= p;
            if c > 0 {
                resampled.push((x, y, u, c as f64 / n as f64));
            }
        }
        let v = InfoMeasures::from_cells(dims, resampled.iter().copied(), base).fields();
        for k in 0..5 {
            sum[k] += v[k];
            sum_sq[k] += v[k] * v[k];
        }
    }
    let r = resamples.max(1) as f64;
    let mut sd = [0.0; 5];
    let mut bias = [0.0; 5];
    let mut delta = [0.0; 5];
    for k in 0..5 {
        let mean = sum[k] / r;
        sd[k] = (sum_sq[k] / r - mean * mean).max(0.0).sqrt();
        bias[k] = mean - point[k];
        delta[k] = 3.0 * sd[k] + bias[k].abs();
    }
    BootstrapTolerance {
        delta: InfoMeasures::from_fields(delta),
        sd: InfoMeasures::from_fields(sd),
        bias: InfoMeasures::from_fields(bias),
        resamples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{JointPmf, Var};

    #[test]
    fn measures_match_dense_triplet_queries() {
        let j = JointPmf::from_rows(&[vec![0.2, 0.1], vec![0.3, 0.4]]).unwrap();
        let k = [0.5, 0.25, 0.25, 0.1, 0.2, 0.7, 0.3, 0.3, 0.4, 0.6, 0.0, 0.4];
        let t = TripletPmf::from_kernel(&j, 3, &k).unwrap();
        let b = LogBase::BITS;
        let m = InfoMeasures::of(&t, b);
        assert!((m.i_ux - t.mutual_information(&[Var::U], &[Var::X], b)).abs() < 1e-12);
        assert!((m.i_yu - t.mutual_information(&[Var::Y], &[Var::U], b)).abs() < 1e-12);
        assert!(
            (m.h_y_given_ux - t.conditional_entropy(&[Var::Y], &[Var::U, Var::X], b)).abs() < 1e-12
        );
        assert!(
            (m.i_xu_given_y
                - t.conditional_mutual_information(&[Var::X], &[Var::U], &[Var::Y], b))
            .abs()
                < 1e-12
        );
        assert!(m.key_identity_residual() < 1e-12);
    }

    #[test]
    fn bootstrap_is_reproducible_and_positive() {
        let j = JointPmf::from_rows(&[vec![0.2, 0.1], vec![0.3, 0.4]]).unwrap();
        let k = [0.5, 0.5, 0.1, 0.9, 0.3, 0.7, 0.6, 0.4];
        let t = TripletPmf::from_kernel(&j, 2, &k).unwrap();
        let a = bootstrap_tolerance(&t, 10_000, 50, 1, LogBase::BITS);
        let b = bootstrap_tolerance(&t, 10_000, 50, 1, LogBase::BITS);
        assert_eq!(a, b);
        assert!(a.delta.i_yu > 0.0 && a.delta.i_yu < 0.05);
    }
}
