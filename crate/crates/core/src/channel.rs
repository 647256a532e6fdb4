//! Discrete memoryless channels and the information measures evaluated on
//! them.
//!
//! All quantities are in bits. The convention `0 log 0 = 0` (and
//! `0 log(0/0) = 0`) is applied to every sum, so inactive input rows and
//! unused output letters never contribute.

use std::fmt;

use thiserror::Error;

/// Absolute tolerance on row sums and distribution totals.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("channel needs at least one input and one output symbol")]
    EmptyAlphabet,
    #[error("matrix has {got} rows, expected {expected}")]
    RowCount { expected: usize, got: usize },
    #[error("row {row} has {got} entries, expected {expected}")]
    RowLength { row: usize, expected: usize, got: usize },
    #[error("entry ({row}, {col}) = {value} is outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {}", display_sum(*.sum))]
    RowSum { row: usize, sum: f64 },
    #[error("cost vector has {got} entries, expected {expected}")]
    CostLength { expected: usize, got: usize },
    #[error("cost of input {input} is {value}, costs must be finite and nonnegative")]
    NegativeCost { input: usize, value: f64 },
    #[error("distribution entry {index} = {value} is negative or not finite")]
    BadProbability { index: usize, value: f64 },
    #[error("distribution sums to {}", display_sum(*.sum))]
    BadTotal { sum: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("infeasible cost budget {budget}: cheapest input costs {min_cost}")]
    InfeasibleBudget { budget: f64, min_cost: f64 },
}

// Rounded to 12 decimals so "0.9 + 0.2" reads as 1.1 rather than 1.1000000000000001.
fn display_sum(sum: f64) -> f64 {
    (sum * 1e12).round() / 1e12
}

/// A probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, ChannelError> {
        check_probability_vector(&probs)?;
        Ok(Self { probs })
    }

    /// Empirical distribution `counts / total`.
    pub fn from_counts(counts: &[u32]) -> Self {
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        assert!(total > 0, "empty histogram");
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self { probs }
    }

    pub fn uniform(size: usize) -> Self {
        Self {
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn check_probability_vector(probs: &[f64]) -> Result<(), ChannelError> {
    for (index, &value) in probs.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(ChannelError::BadProbability { index, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(ChannelError::BadTotal { sum });
    }
    Ok(())
}

/// Row-stochastic matrix `V(y|x)` in which only the rows flagged active are
/// required to be distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDistribution {
    inputs: usize,
    outputs: usize,
    rows: Vec<f64>,
    active: Vec<bool>,
}

impl ConditionalDistribution {
    /// Every row active.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ChannelError> {
        let active = vec![true; rows.len()];
        Self::with_support(rows, active)
    }

    pub fn with_support(rows: Vec<Vec<f64>>, active: Vec<bool>) -> Result<Self, ChannelError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(ChannelError::EmptyAlphabet);
        }
        if active.len() != rows.len() {
            return Err(ChannelError::Dimension(format!(
                "{} support flags for {} rows",
                active.len(),
                rows.len()
            )));
        }
        let inputs = rows.len();
        let outputs = rows[0].len();
        let mut flat = Vec::with_capacity(inputs * outputs);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != outputs {
                return Err(ChannelError::RowLength {
                    row: x,
                    expected: outputs,
                    got: row.len(),
                });
            }
            if active[x] {
                check_row(x, row)?;
            }
            flat.extend_from_slice(row);
        }
        Ok(Self {
            inputs,
            outputs,
            rows: flat,
            active,
        })
    }

    /// Conditional type `V(y|x) = table(x,y) / row_total(x)`; rows with a zero
    /// total are inactive and left at zero.
    pub fn from_counts(table: &[u32], inputs: usize, outputs: usize) -> Self {
        assert_eq!(table.len(), inputs * outputs);
        let mut rows = vec![0.0; inputs * outputs];
        let mut active = vec![false; inputs];
        for x in 0..inputs {
            let row = &table[x * outputs..(x + 1) * outputs];
            let total: u64 = row.iter().map(|&c| c as u64).sum();
            if total > 0 {
                active[x] = true;
                for y in 0..outputs {
                    rows[x * outputs + y] = row[y] as f64 / total as f64;
                }
            }
        }
        Self {
            inputs,
            outputs,
            rows,
            active,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.outputs + y]
    }

    pub fn is_active(&self, x: usize) -> bool {
        self.active[x]
    }

    pub(crate) fn flat(&self) -> &[f64] {
        &self.rows
    }
}

fn check_row(row_index: usize, row: &[f64]) -> Result<(), ChannelError> {
    for (col, &value) in row.iter().enumerate() {
        if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
            return Err(ChannelError::EntryOutOfRange {
                row: row_index,
                col,
                value,
            });
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(ChannelError::RowSum {
            row: row_index,
            sum,
        });
    }
    Ok(())
}

/// A DMC `W(y|x)` with a per-letter input cost `c(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    transition: ConditionalDistribution,
    cost: Vec<f64>,
}

/// Checks the channel invariants, reporting the first violation found.
pub fn validate_channel(matrix: &[Vec<f64>], cost: &[f64]) -> Result<(), ChannelError> {
    if matrix.is_empty() || matrix[0].is_empty() {
        return Err(ChannelError::EmptyAlphabet);
    }
    let outputs = matrix[0].len();
    for (x, row) in matrix.iter().enumerate() {
        if row.len() != outputs {
            return Err(ChannelError::RowLength {
                row: x,
                expected: outputs,
                got: row.len(),
            });
        }
        check_row(x, row)?;
    }
    if cost.len() != matrix.len() {
        return Err(ChannelError::CostLength {
            expected: matrix.len(),
            got: cost.len(),
        });
    }
    for (input, &value) in cost.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(ChannelError::NegativeCost { input, value });
        }
    }
    Ok(())
}

impl Channel {
    pub fn new(matrix: Vec<Vec<f64>>, cost: Vec<f64>) -> Result<Self, ChannelError> {
        validate_channel(&matrix, &cost)?;
        let transition = ConditionalDistribution::new(matrix)?;
        Ok(Self { transition, cost })
    }

    /// Channel with zero cost on every input.
    pub fn without_cost(matrix: Vec<Vec<f64>>) -> Result<Self, ChannelError> {
        let cost = vec![0.0; matrix.len()];
        Self::new(matrix, cost)
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Self {
        Self::without_cost(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
            .expect("crossover probability must lie in [0, 1]")
    }

    pub fn with_cost(mut self, cost: Vec<f64>) -> Result<Self, ChannelError> {
        let rows: Vec<Vec<f64>> = (0..self.input_size())
            .map(|x| self.transition.row(x).to_vec())
            .collect();
        validate_channel(&rows, &cost)?;
        self.cost = cost;
        Ok(self)
    }

    pub fn input_size(&self) -> usize {
        self.transition.inputs()
    }

    pub fn output_size(&self) -> usize {
        self.transition.outputs()
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.transition.get(x, y)
    }

    pub fn row(&self, x: usize) -> &[f64] {
        self.transition.row(x)
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn transition(&self) -> &ConditionalDistribution {
        &self.transition
    }

    pub fn min_cost(&self) -> f64 {
        self.cost.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in 0..self.input_size() {
            let row: Vec<String> = self.row(x).iter().map(|p| format!("{p}")).collect();
            writeln!(f, "{} | cost {}", row.join(" "), self.cost[x])?;
        }
        Ok(())
    }
}

/// `Σ_x c(x) P(x)`.
pub fn mean_cost(p: &Distribution, cost: &[f64]) -> f64 {
    p.probs().iter().zip(cost).map(|(p, c)| p * c).sum()
}

pub fn entropy(p: &Distribution) -> f64 {
    entropy_of(p.probs())
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| q * q.log2())
        .sum::<f64>()
}

/// `H(V|P)`.
pub fn conditional_entropy(v: &ConditionalDistribution, p: &Distribution) -> f64 {
    let mut h = 0.0;
    for (x, &px) in p.probs().iter().enumerate() {
        if px > 0.0 {
            h += px * entropy_of(v.row(x));
        }
    }
    h
}

/// `D(V||W|P)`; `+inf` when `V` puts mass where `W` has none on an input
/// that `P` uses.
pub fn divergence_cond(
    v: &ConditionalDistribution,
    w: &ConditionalDistribution,
    p: &Distribution,
) -> f64 {
    let mut d = 0.0;
    for (x, &px) in p.probs().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (&vy, &wy) in v.row(x).iter().zip(w.row(x)) {
            if vy > 0.0 {
                if wy == 0.0 {
                    return f64::INFINITY;
                }
                d += px * vy * (vy / wy).log2();
            }
        }
    }
    d
}

/// `D(P||Q)` for two distributions on the same alphabet.
pub fn divergence(p: &Distribution, q: &Distribution) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.probs().iter().zip(q.probs()) {
        if a > 0.0 {
            if b == 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d
}

/// Output marginal `PV(y) = Σ_x P(x) V(y|x)`.
pub fn output_distribution(p: &Distribution, v: &ConditionalDistribution) -> Distribution {
    let mut out = vec![0.0; v.outputs()];
    output_marginal_into(p.probs(), v.flat(), v.outputs(), &mut out);
    Distribution { probs: out }
}

pub(crate) fn output_marginal_into(p: &[f64], v: &[f64], outputs: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (x, &px) in p.iter().enumerate() {
        if px > 0.0 {
            for y in 0..outputs {
                out[y] += px * v[x * outputs + y];
            }
        }
    }
}

/// `I(P,V)`, evaluated as `Σ P(x) V(y|x) log V(y|x)/PV(y)`, which equals
/// `H(PV) − H(V|P)`.
pub fn mutual_info(p: &Distribution, v: &ConditionalDistribution) -> f64 {
    let pv = output_distribution(p, v);
    let mut i = 0.0;
    for (x, &px) in p.probs().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (y, &vy) in v.row(x).iter().enumerate() {
            if vy > 0.0 {
                i += px * vy * (vy / pv.probs[y]).log2();
            }
        }
    }
    i
}

/// The three information functionals of a joint type `(P, V)` against the
/// true channel `W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functionals {
    /// `I(P,V) − D(V||W|P)`
    pub underline_i: f64,
    /// `Σ P(x)V(y|x) log W(y|x)/PW(y)`
    pub j: f64,
    /// `I(P,V)`
    pub i: f64,
}

/// Evaluates all three functionals in one pass. `p` has length `|X|`, `v` and
/// `w` are row-major `|X|×|Y|`, and `pw` is the output marginal of `W` under
/// `p`.
pub(crate) fn functionals_raw(p: &[f64], v: &[f64], w: &[f64], pw: &[f64], pv: &[f64]) -> Functionals {
    let outputs = pw.len();
    let mut mi = 0.0;
    let mut div = 0.0;
    let mut j = 0.0;
    let mut support_escape = false;
    for (x, &px) in p.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for y in 0..outputs {
            let vy = v[x * outputs + y];
            if vy == 0.0 {
                continue;
            }
            let wy = w[x * outputs + y];
            let mass = px * vy;
            mi += mass * (vy / pv[y]).log2();
            if wy == 0.0 {
                support_escape = true;
            } else {
                div += mass * (vy / wy).log2();
                j += mass * (wy / pw[y]).log2();
            }
        }
    }
    if support_escape {
        Functionals {
            underline_i: f64::NEG_INFINITY,
            j: f64::NEG_INFINITY,
            i: mi,
        }
    } else {
        Functionals {
            underline_i: mi - div,
            j,
            i: mi,
        }
    }
}

pub fn functionals(p: &Distribution, v: &ConditionalDistribution, w: &Channel) -> Functionals {
    let pv = output_distribution(p, v);
    let pw = output_distribution(p, w.transition());
    functionals_raw(p.probs(), v.flat(), w.transition().flat(), pw.probs(), pv.probs())
}

/// `J(P,V|W)`; `−inf` when `V` uses a transition `W` forbids.
pub fn functional_j(p: &Distribution, v: &ConditionalDistribution, w: &Channel) -> f64 {
    functionals(p, v, w).j
}

/// `I(P,V) − D(V||W|P)`.
pub fn functional_underline_i(p: &Distribution, v: &ConditionalDistribution, w: &Channel) -> f64 {
    functionals(p, v, w).underline_i
}
