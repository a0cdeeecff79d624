//! Finite-alphabet probability tables and Shannon information measures.
//!
//! All measures follow the convention `0 log 0 = 0` and are reported in the
//! units selected by a [`LogBase`] (bits by default). Conditional quantities
//! silently skip zero-probability conditioning events.

use serde::{Deserialize, Serialize};

use crate::error::{PmechError, Result};

/// Default normalization tolerance for probability tables.
pub const TAU_NORM: f64 = 1e-9;

/// Logarithm base for information units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogBase(f64);

impl LogBase {
    pub const BITS: LogBase = LogBase(2.0);
    pub const NATS: LogBase = LogBase(std::f64::consts::E);

    pub fn new(base: f64) -> Result<Self> {
        if !(base.is_finite() && base > 1.0) {
            return Err(PmechError::validation(format!(
                "log base must be a finite real > 1, got {base}"
            )));
        }
        Ok(LogBase(base))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Logarithm of `v` in this base.
    #[inline]
    pub fn log(self, v: f64) -> f64 {
        v.ln() / self.0.ln()
    }

    /// Converts a quantity measured in nats to this base.
    #[inline]
    pub fn from_nats(self, nats: f64) -> f64 {
        nats / self.0.ln()
    }
}

impl Default for LogBase {
    fn default() -> Self {
        LogBase::BITS
    }
}

/// `-Σ p ln p` over the entries, without validation.
pub(crate) fn entropy_nats(p: impl IntoIterator<Item = f64>) -> f64 {
    p.into_iter()
        .filter(|&v| v > 0.0)
        .map(|v| -v * v.ln())
        .sum()
}

/// Checks that `p` is a probability vector within `tol`.
pub fn validate_pmf(p: &[f64], tol: f64) -> Result<()> {
    if p.is_empty() {
        return Err(PmechError::validation("empty pmf"));
    }
    let mut total = 0.0;
    for (i, &v) in p.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(PmechError::validation(format!(
                "entry {i} is {v}; probabilities must be finite and nonnegative"
            )));
        }
        total += v;
    }
    if (total - 1.0).abs() > tol {
        return Err(PmechError::validation(format!(
            "pmf sums to {total}, expected 1 within {tol}"
        )));
    }
    Ok(())
}

/// Shannon entropy of a pmf.
pub fn entropy(p: &[f64], base: LogBase) -> Result<f64> {
    validate_pmf(p, TAU_NORM)?;
    Ok(base.from_nats(entropy_nats(p.iter().copied())).max(0.0))
}

/// Binary entropy function.
pub fn binary_entropy(q: f64, base: LogBase) -> f64 {
    base.from_nats(entropy_nats([q, 1.0 - q]))
}

/// A joint law `P_XY` stored row-major: row index `x`, column index `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointPmfJson", into = "JointPmfJson")]
pub struct JointPmf {
    x_size: usize,
    y_size: usize,
    p: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JointPmfJson {
    x_size: usize,
    y_size: usize,
    pmf: Vec<Vec<f64>>,
}

impl TryFrom<JointPmfJson> for JointPmf {
    type Error = PmechError;

    fn try_from(j: JointPmfJson) -> Result<Self> {
        if j.pmf.len() != j.x_size || j.pmf.iter().any(|r| r.len() != j.y_size) {
            return Err(PmechError::validation(format!(
                "pmf shape does not match x_size={} y_size={}",
                j.x_size, j.y_size
            )));
        }
        JointPmf::from_rows(&j.pmf)
    }
}

impl From<JointPmf> for JointPmfJson {
    fn from(j: JointPmf) -> Self {
        JointPmfJson {
            x_size: j.x_size,
            y_size: j.y_size,
            pmf: j.rows(),
        }
    }
}

impl JointPmf {
    /// Builds a joint from a flat row-major table.
    pub fn new(x_size: usize, y_size: usize, p: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(x_size, y_size, p, TAU_NORM)
    }

    pub fn with_tolerance(x_size: usize, y_size: usize, p: Vec<f64>, tol: f64) -> Result<Self> {
        if x_size == 0 || y_size == 0 {
            return Err(PmechError::validation("alphabet sizes must be positive"));
        }
        if p.len() != x_size * y_size {
            return Err(PmechError::validation(format!(
                "table has {} entries, expected {}x{}",
                p.len(),
                x_size,
                y_size
            )));
        }
        validate_pmf(&p, tol)?;
        Ok(JointPmf { x_size, y_size, p })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let x_size = rows.len();
        let y_size = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != y_size) {
            return Err(PmechError::validation("ragged pmf rows"));
        }
        Self::new(x_size, y_size, rows.concat())
    }

    /// Builds `P_XY = P_X · P_{Y|X}`.
    pub fn from_marginal_and_channel(px: &[f64], channel: &[Vec<f64>]) -> Result<Self> {
        if channel.len() != px.len() {
            return Err(PmechError::validation("channel must have one row per x"));
        }
        let rows: Vec<Vec<f64>> = px
            .iter()
            .zip(channel)
            .map(|(&w, row)| row.iter().map(|&c| w * c).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// Product law `P_X ⊗ P_Y`.
    pub fn product(px: &[f64], py: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = px
            .iter()
            .map(|&a| py.iter().map(|&b| a * b).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.y_size + y]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.y_size).map(<[f64]>::to_vec).collect()
    }

    pub fn px(&self) -> Vec<f64> {
        self.p.chunks(self.y_size).map(|r| r.iter().sum()).collect()
    }

    pub fn py(&self) -> Vec<f64> {
        let mut py = vec![0.0; self.y_size];
        for row in self.p.chunks(self.y_size) {
            for (acc, &v) in py.iter_mut().zip(row) {
                *acc += v;
            }
        }
        py
    }

    /// `P_{Y|X}(·|x)`, or `None` when `P_X(x) = 0`.
    pub fn y_given_x(&self, x: usize) -> Option<Vec<f64>> {
        let row = &self.p[x * self.y_size..(x + 1) * self.y_size];
        let mass: f64 = row.iter().sum();
        (mass > 0.0).then(|| row.iter().map(|v| v / mass).collect())
    }

    /// `P_{X|Y}(·|y)`, or `None` when `P_Y(y) = 0`.
    pub fn x_given_y(&self, y: usize) -> Option<Vec<f64>> {
        let col: Vec<f64> = (0..self.x_size).map(|x| self.get(x, y)).collect();
        let mass: f64 = col.iter().sum();
        (mass > 0.0).then(|| col.iter().map(|v| v / mass).collect())
    }

    pub fn h_x(&self, base: LogBase) -> f64 {
        base.from_nats(entropy_nats(self.px()))
    }

    pub fn h_y(&self, base: LogBase) -> f64 {
        base.from_nats(entropy_nats(self.py()))
    }

    pub fn h_xy(&self, base: LogBase) -> f64 {
        base.from_nats(entropy_nats(self.p.iter().copied()))
    }

    pub fn h_x_given_y(&self, base: LogBase) -> f64 {
        (self.h_xy(base) - self.h_y(base)).max(0.0)
    }

    pub fn h_y_given_x(&self, base: LogBase) -> f64 {
        (self.h_xy(base) - self.h_x(base)).max(0.0)
    }

    /// `I(X;Y) = H(X) + H(Y) - H(X,Y)`, clamped at zero.
    pub fn mutual_information(&self, base: LogBase) -> f64 {
        (self.h_x(base) + self.h_y(base) - self.h_xy(base)).max(0.0)
    }

    /// Same law with the roles of `X` and `Y` exchanged.
    pub fn transpose(&self) -> JointPmf {
        let mut p = vec![0.0; self.p.len()];
        for x in 0..self.x_size {
            for y in 0..self.y_size {
                p[y * self.x_size + x] = self.get(x, y);
            }
        }
        JointPmf {
            x_size: self.y_size,
            y_size: self.x_size,
            p,
        }
    }

    /// Max absolute entrywise difference; `None` on shape mismatch.
    pub fn max_abs_diff(&self, other: &JointPmf) -> Option<f64> {
        (self.x_size == other.x_size && self.y_size == other.y_size).then(|| {
            self.p
                .iter()
                .zip(&other.p)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    }
}

/// One of the three variables of the disclosure problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    X,
    Y,
    U,
}

impl Var {
    fn axis(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
            Var::U => 2,
        }
    }
}

/// Joint law of `(X, Y, U)`, flat index `((x * y_size) + y) * u_size + u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TripletPmfJson")]
pub struct TripletPmf {
    x_size: usize,
    y_size: usize,
    u_size: usize,
    p: Vec<f64>,
}

#[derive(Deserialize)]
struct TripletPmfJson {
    x_size: usize,
    y_size: usize,
    u_size: usize,
    p: Vec<f64>,
}

impl TryFrom<TripletPmfJson> for TripletPmf {
    type Error = PmechError;

    fn try_from(t: TripletPmfJson) -> Result<Self> {
        TripletPmf::new(t.x_size, t.y_size, t.u_size, t.p)
    }
}

impl TripletPmf {
    pub fn new(x_size: usize, y_size: usize, u_size: usize, p: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(x_size, y_size, u_size, p, TAU_NORM)
    }

    pub fn with_tolerance(
        x_size: usize,
        y_size: usize,
        u_size: usize,
        p: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        if x_size == 0 || y_size == 0 || u_size == 0 {
            return Err(PmechError::validation("alphabet sizes must be positive"));
        }
        if p.len() != x_size * y_size * u_size {
            return Err(PmechError::validation(format!(
                "triplet table has {} entries, expected {}",
                p.len(),
                x_size * y_size * u_size
            )));
        }
        validate_pmf(&p, tol)?;
        Ok(TripletPmf {
            x_size,
            y_size,
            u_size,
            p,
        })
    }

    /// Law induced by `P_XY` and a kernel `P_{U|X,Y}` laid out as `[x][y][u]`.
    pub fn from_kernel(joint: &JointPmf, u_size: usize, kernel: &[f64]) -> Result<Self> {
        let (nx, ny) = (joint.x_size(), joint.y_size());
        if kernel.len() != nx * ny * u_size {
            return Err(PmechError::validation("kernel shape does not match joint"));
        }
        let mut p = vec![0.0; nx * ny * u_size];
        for x in 0..nx {
            for y in 0..ny {
                let w = joint.get(x, y);
                if w == 0.0 {
                    continue;
                }
                let base = (x * ny + y) * u_size;
                for u in 0..u_size {
                    p[base + u] = w * kernel[base + u];
                }
            }
        }
        Self::new(nx, ny, u_size, p)
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn u_size(&self) -> usize {
        self.u_size
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, u: usize) -> f64 {
        self.p[(x * self.y_size + y) * self.u_size + u]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    fn dims(&self) -> [usize; 3] {
        [self.x_size, self.y_size, self.u_size]
    }

    /// Marginal table over the listed variables (in axis order X, Y, U).
    pub fn marginal(&self, vars: &[Var]) -> Vec<f64> {
        let dims = self.dims();
        let keep = [
            vars.contains(&Var::X),
            vars.contains(&Var::Y),
            vars.contains(&Var::U),
        ];
        let size: usize = (0..3).filter(|&a| keep[a]).map(|a| dims[a]).product();
        let mut out = vec![0.0; size];
        let mut idx = 0;
        for x in 0..dims[0] {
            for y in 0..dims[1] {
                for u in 0..dims[2] {
                    let v = self.p[idx];
                    idx += 1;
                    if v == 0.0 {
                        continue;
                    }
                    let coords = [x, y, u];
                    let mut flat = 0;
                    for a in 0..3 {
                        if keep[a] {
                            flat = flat * dims[a] + coords[a];
                        }
                    }
                    out[flat] += v;
                }
            }
        }
        out
    }

    /// `H(vars)`; the empty set has entropy zero.
    pub fn joint_entropy(&self, vars: &[Var], base: LogBase) -> f64 {
        if vars.is_empty() {
            return 0.0;
        }
        if vars.contains(&Var::X) && vars.contains(&Var::Y) && vars.contains(&Var::U) {
            return base.from_nats(entropy_nats(self.p.iter().copied()));
        }
        base.from_nats(entropy_nats(self.marginal(vars)))
    }

    /// `H(target | given)`.
    pub fn conditional_entropy(&self, target: &[Var], given: &[Var], base: LogBase) -> f64 {
        let all = union(target, given);
        (self.joint_entropy(&all, base) - self.joint_entropy(given, base)).max(0.0)
    }

    /// `I(a; b | given)` = `H(a,g) + H(b,g) - H(a,b,g) - H(g)`, clamped at zero.
    pub fn conditional_mutual_information(
        &self,
        a: &[Var],
        b: &[Var],
        given: &[Var],
        base: LogBase,
    ) -> f64 {
        let ag = union(a, given);
        let bg = union(b, given);
        let abg = union(&ag, b);
        (self.joint_entropy(&ag, base) + self.joint_entropy(&bg, base)
            - self.joint_entropy(&abg, base)
            - self.joint_entropy(given, base))
        .max(0.0)
    }

    pub fn mutual_information(&self, a: &[Var], b: &[Var], base: LogBase) -> f64 {
        self.conditional_mutual_information(a, b, &[], base)
    }

    /// The `(x, y)` marginal, re-validated as a joint.
    pub fn xy_marginal(&self) -> Result<JointPmf> {
        JointPmf::new(self.x_size, self.y_size, self.marginal(&[Var::X, Var::Y]))
    }
}

fn union(a: &[Var], b: &[Var]) -> Vec<Var> {
    let mut out = a.to_vec();
    for v in b {
        if !out.contains(v) {
            out.push(*v);
        }
    }
    out.sort_by_key(|v| v.axis());
    out
}
