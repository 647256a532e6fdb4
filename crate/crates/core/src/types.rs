//! Method-of-types combinatorics: input types `P_n(X)`, conditional types
//! `V_n(Y|P)`, exact type-class sizes, and the polynomial constants
//! `ν_n(a)`, `κ_n(a)` and `η_n(a,b)`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use statrs::function::gamma::ln_gamma;

use crate::channel::Distribution;

/// Blocklengths up to this value get exact big-integer counts.
pub const EXACT_COUNT_LIMIT: u32 = 64;

/// Histogram of an `n`-sequence over the input alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InputType {
    n: u32,
    counts: Vec<u32>,
}

impl InputType {
    pub fn new(counts: Vec<u32>) -> Self {
        let n = counts.iter().sum();
        assert!(n > 0, "a type needs blocklength at least 1");
        Self { n, counts }
    }

    /// Type of a concrete sequence.
    pub fn of_sequence(seq: &[usize], alphabet: usize) -> Self {
        let mut counts = vec![0u32; alphabet];
        for &s in seq {
            counts[s] += 1;
        }
        Self::new(counts)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    pub fn distribution(&self) -> Distribution {
        Distribution::from_counts(&self.counts)
    }

    /// `c̄_P = Σ_x c(x) n(x) / n`.
    pub fn mean_cost(&self, cost: &[f64]) -> f64 {
        let total: f64 = self
            .counts
            .iter()
            .zip(cost)
            .map(|(&k, &c)| k as f64 * c)
            .sum();
        total / self.n as f64
    }

    /// A representative sequence of this type: symbols in increasing order.
    pub fn representative(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(x, &k)| std::iter::repeat_n(x, k as usize))
            .collect()
    }
}

impl fmt::Display for InputType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.counts.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Joint histogram `n(x,y)` of an input/output pair. Row sums are the counts
/// of the base input type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConditionalType {
    outputs: usize,
    table: Vec<u32>,
}

impl ConditionalType {
    pub fn new(table: Vec<u32>, outputs: usize) -> Self {
        assert!(outputs > 0 && table.len().is_multiple_of(outputs));
        Self { outputs, table }
    }

    /// Conditional type of `y` given `x`.
    pub fn of_pair(x: &[usize], y: &[usize], inputs: usize, outputs: usize) -> Self {
        assert_eq!(x.len(), y.len());
        let mut table = vec![0u32; inputs * outputs];
        for (&a, &b) in x.iter().zip(y) {
            table[a * outputs + b] += 1;
        }
        Self { outputs, table }
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.table[x * self.outputs + y]
    }

    pub fn row(&self, x: usize) -> &[u32] {
        &self.table[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn inputs(&self) -> usize {
        self.table.len() / self.outputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn row_totals(&self) -> Vec<u32> {
        (0..self.inputs()).map(|x| self.row(x).iter().sum()).collect()
    }

    /// The input type this conditional type is defined over.
    pub fn base(&self) -> InputType {
        InputType::new(self.row_totals())
    }

    /// Output type counts `n·PV`.
    pub fn output_counts(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.outputs];
        for x in 0..self.inputs() {
            for (y, o) in out.iter_mut().enumerate() {
                *o += self.get(x, y);
            }
        }
        out
    }
}

/// A positive integer held as its base-2 logarithm, with the exact value
/// when it was cheap to compute.
#[derive(Debug, Clone, PartialEq)]
pub struct LogCount {
    pub log2_value: f64,
    pub exact_value: Option<BigUint>,
}

impl LogCount {
    fn exact(value: BigUint) -> Self {
        Self {
            log2_value: log2_big(&value),
            exact_value: Some(value),
        }
    }

    fn approximate(log2_value: f64) -> Self {
        Self {
            log2_value,
            exact_value: None,
        }
    }
}

pub fn log2_big(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        v.to_f64().expect("fits in f64").log2()
    } else {
        let shift = bits - 64;
        (v >> shift).to_f64().unwrap().log2() + shift as f64
    }
}

/// All histograms of `total` items over `bins` bins, first bin largest
/// first: `(2,0), (1,1), (0,2)`.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Vec<u32>,
    done: bool,
}

impl Compositions {
    pub fn new(total: u32, bins: usize) -> Self {
        assert!(bins > 0);
        let mut current = vec![0u32; bins];
        current[0] = total;
        Self {
            current,
            done: false,
        }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        if !advance_composition(&mut self.current) {
            self.done = true;
        }
        Some(out)
    }
}

/// Steps to the next histogram in place; false after the last one.
fn advance_composition(c: &mut [u32]) -> bool {
    let k = c.len();
    if k == 1 {
        return false;
    }
    let last = c[k - 1];
    c[k - 1] = 0;
    match (0..k - 1).rev().find(|&i| c[i] > 0) {
        Some(i) => {
            c[i] -= 1;
            c[i + 1] = last + 1;
            true
        }
        None => {
            c[k - 1] = last;
            false
        }
    }
}

/// `P_n(X)` restricted to types with mean cost at most `budget`
/// (`None` = unbounded), in descending lexicographic order.
pub fn enumerate_input_types(
    n: u32,
    inputs: usize,
    cost: &[f64],
    budget: Option<f64>,
) -> Vec<InputType> {
    assert!(n >= 1);
    Compositions::new(n, inputs)
        .map(InputType::new)
        .filter(|p| match budget {
            None => true,
            Some(g) => p.mean_cost(cost) <= g + 1e-12,
        })
        .collect()
}

/// Lazily enumerates `V_n(Y|P)`: the product over active rows of all
/// histograms of `P.counts(x)` items over `|Y|` bins. The last active row
/// varies fastest.
#[derive(Debug, Clone)]
pub struct ConditionalTypes {
    outputs: usize,
    active: Vec<usize>,
    table: Vec<u32>,
    done: bool,
}

pub fn enumerate_conditional_types(p: &InputType, outputs: usize) -> ConditionalTypes {
    let inputs = p.alphabet_size();
    let mut table = vec![0u32; inputs * outputs];
    let mut active = Vec::new();
    for (x, &k) in p.counts().iter().enumerate() {
        if k > 0 {
            table[x * outputs] = k;
            active.push(x);
        }
    }
    ConditionalTypes {
        outputs,
        active,
        table,
        done: false,
    }
}

impl ConditionalTypes {
    /// Advances the table in place without allocating; false at the end.
    pub(crate) fn advance(&mut self) -> bool {
        let outputs = self.outputs;
        for &x in self.active.iter().rev() {
            let row = &mut self.table[x * outputs..(x + 1) * outputs];
            if advance_composition(row) {
                return true;
            }
            // wrapped: reset the row to (k, 0, ..., 0) and carry
            let k: u32 = row.iter().sum();
            row.iter_mut().for_each(|c| *c = 0);
            row[0] = k;
        }
        false
    }

    pub(crate) fn current(&self) -> &[u32] {
        &self.table
    }
}

impl Iterator for ConditionalTypes {
    type Item = ConditionalType;

    fn next(&mut self) -> Option<ConditionalType> {
        if self.done {
            return None;
        }
        let out = ConditionalType::new(self.table.clone(), self.outputs);
        if !self.advance() {
            self.done = true;
        }
        Some(out)
    }
}

/// Number of conditional types over `P`: `∏_x C(n(x)+|Y|−1, |Y|−1)`.
pub fn count_conditional_types(p: &InputType, outputs: usize) -> BigUint {
    p.counts()
        .iter()
        .map(|&k| binomial(k as u64 + outputs as u64 - 1, outputs as u64 - 1))
        .product()
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// `log2(k!)` through the log-gamma function.
pub fn log2_factorial(k: u32) -> f64 {
    ln_gamma(k as f64 + 1.0) / std::f64::consts::LN_2
}

/// Table of `log2(k!)` for `k = 0..=n`.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(n: u32) -> Self {
        let mut table = Vec::with_capacity(n as usize + 1);
        let mut exact = BigUint::one();
        for k in 0..=n {
            if k > 0 && k <= EXACT_COUNT_LIMIT {
                exact *= k;
            }
            table.push(if k <= EXACT_COUNT_LIMIT {
                log2_big(&exact)
            } else {
                log2_factorial(k)
            });
        }
        Self { table }
    }

    #[inline]
    pub fn get(&self, k: u32) -> f64 {
        self.table[k as usize]
    }

    /// `log2( (Σ parts)! / ∏ parts! )`
    #[inline]
    pub fn multinomial(&self, parts: &[u32]) -> f64 {
        let total: u32 = parts.iter().sum();
        self.get(total) - parts.iter().map(|&k| self.get(k)).sum::<f64>()
    }
}

fn multinomial_exact(parts: &[u32]) -> BigUint {
    let total: u64 = parts.iter().map(|&k| k as u64).sum();
    let mut acc = factorial(total);
    for &k in parts {
        acc /= factorial(k as u64);
    }
    acc
}

fn multinomial_log2(parts: &[u32]) -> f64 {
    let total: u32 = parts.iter().sum();
    log2_factorial(total) - parts.iter().map(|&k| log2_factorial(k)).sum::<f64>()
}

/// `|T_P^n| = n! / ∏_x n(x)!`.
pub fn log_type_class_size(p: &InputType) -> LogCount {
    if p.n() <= EXACT_COUNT_LIMIT {
        LogCount::exact(multinomial_exact(p.counts()))
    } else {
        LogCount::approximate(multinomial_log2(p.counts()))
    }
}

/// `|T_V^n(x)| = ∏_x n(x)! / ∏_y n(x,y)!` for any `x` of the base type.
pub fn log_cond_type_class_size(v: &ConditionalType) -> LogCount {
    let n: u32 = v.table().iter().sum();
    if n <= EXACT_COUNT_LIMIT {
        let value = (0..v.inputs())
            .map(|x| multinomial_exact(v.row(x)))
            .product::<BigUint>();
        LogCount::exact(value)
    } else {
        LogCount::approximate((0..v.inputs()).map(|x| multinomial_log2(v.row(x))).sum())
    }
}

/// `ν_n(a) = C(n+a−1, a−1)`, the number of types on an `a`-letter alphabet.
pub fn nu(n: u32, a: usize) -> LogCount {
    LogCount::exact(binomial(n as u64 + a as u64 - 1, a as u64 - 1))
}

/// `log2 κ_n(a)` with `κ_n(a) = e^{a/12} (2πn)^{(a−1)/2}`.
pub fn kappa(n: u32, a: usize) -> f64 {
    let a = a as f64;
    std::f64::consts::LOG2_E * (a / 12.0)
        + 0.5 * (a - 1.0) * (2.0 * std::f64::consts::PI * n as f64).log2()
}

/// `log2 η_n(a,b)` with `η_n(a,b) = κ_n(a) ν_n(ab)`.
pub fn eta(n: u32, a: usize, b: usize) -> f64 {
    kappa(n, a) + nu(n, a * b).log2_value
}
