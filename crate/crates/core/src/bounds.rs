//! Finite-blocklength bounds on the minimum average error probability
//! `ε(n, R, Γ | W)`.
//!
//! Converse variants evaluate
//!
//! ```text
//! max_{γ>0} min_P [ Pr{ R ≥ f(P,V) + γ | P } − ν_n(|Y|) 2^{−nγ} ]
//! ```
//!
//! with `f` the underline-I or J functional, and achievability variants
//!
//! ```text
//! min_{γ>1/n} min_P [ Pr{ R ≥ f(P,V) − γ | P } + 2 C_n 2^{−nγ} ]
//! ```
//!
//! with `(f, C_n) = (J, κ_n(|X|))` or `(I, η_n(|X|,|Y|))`. `P` ranges over
//! input types of mean cost at most `Γ` and `V` is the random conditional
//! type of the output.
//!
//! The tails are step functions of `γ` that only move where `R − f` (or
//! `f − R`) hits an atom, so the optimization over `γ` is a finite search
//! over those breakpoints plus a cap past which the penalty is below
//! `2^{−64}`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::Channel;
use crate::spectrum::{for_each_atom, log2_add, log2_sum_exp, Functional, Spectrum};
use crate::types::{enumerate_input_types, eta, kappa, nu, InputType, LogFactorials};

/// Offset used to stay strictly inside a constant piece of an achievability
/// tail.
pub const GAMMA_NUDGE: f64 = 1.0 / (1u64 << 30) as f64;

/// The search over `γ` stops once the penalty falls below `2^{-64}`.
pub const PENALTY_FLOOR_BITS: f64 = 64.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("no input type of length {n} has mean cost within budget {budget}")]
    Infeasible { n: u32, budget: f64 },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "converse_underline")]
    ConverseUnderline,
    #[serde(rename = "converse_J")]
    ConverseJ,
    #[serde(rename = "achievability_J")]
    AchievabilityJ,
    #[serde(rename = "achievability_I")]
    AchievabilityI,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::ConverseUnderline,
        Variant::ConverseJ,
        Variant::AchievabilityJ,
        Variant::AchievabilityI,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::ConverseUnderline => "converse_underline",
            Variant::ConverseJ => "converse_J",
            Variant::AchievabilityJ => "achievability_J",
            Variant::AchievabilityI => "achievability_I",
        }
    }

    pub fn functional(self) -> Functional {
        match self {
            Variant::ConverseUnderline => Functional::UnderlineI,
            Variant::ConverseJ | Variant::AchievabilityJ => Functional::J,
            Variant::AchievabilityI => Functional::I,
        }
    }

    pub fn is_converse(self) -> bool {
        matches!(self, Variant::ConverseUnderline | Variant::ConverseJ)
    }

    /// log2 of the constant multiplying `2^{−nγ}`: `ν_n(|Y|)` for the
    /// converses, `2κ_n(|X|)` and `2η_n(|X|,|Y|)` for achievability.
    pub fn penalty_log2_constant(self, n: u32, inputs: usize, outputs: usize) -> f64 {
        match self {
            Variant::ConverseUnderline | Variant::ConverseJ => nu(n, outputs).log2_value,
            Variant::AchievabilityJ => 1.0 + kappa(n, inputs),
            Variant::AchievabilityI => 1.0 + eta(n, inputs, outputs),
        }
    }

    /// Largest `γ` examined: where the penalty reaches `2^{-64}`.
    pub fn gamma_max(self, n: u32, inputs: usize, outputs: usize) -> f64 {
        (PENALTY_FLOOR_BITS + self.penalty_log2_constant(n, inputs, outputs)) / n as f64
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = BoundsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| BoundsError::InvalidQuery(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundQuery {
    pub n: u32,
    /// Rate in bits per channel use.
    pub rate: f64,
    /// Cost budget `Γ`; `None` is unbounded.
    pub budget: Option<f64>,
    pub variant: Variant,
}

impl BoundQuery {
    fn check(&self) -> Result<(), BoundsError> {
        if self.n == 0 {
            return Err(BoundsError::InvalidQuery("blocklength must be at least 1".into()));
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(BoundsError::InvalidQuery(format!(
                "rate must be positive, got {}",
                self.rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub variant: Variant,
    pub n: u32,
    pub rate: f64,
    pub budget: Option<f64>,
    /// `raw` clamped to `[0, 1]`.
    pub value: f64,
    pub raw: f64,
    pub gamma_star: f64,
    pub type_star: InputType,
    /// log2 of the penalty term at `gamma_star`.
    pub penalty_log2: f64,
    pub tail_value: f64,
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Converse breakpoints `R − f > 0` plus the cap.
fn converse_candidates(sorted_values: &[f64], rate: f64, gamma_max: f64) -> Vec<f64> {
    let mut out: Vec<f64> = sorted_values
        .iter()
        .map(|&f| rate - f)
        .filter(|&g| g > 0.0 && g.is_finite())
        .collect();
    out.push(gamma_max);
    out.sort_unstable_by(f64::total_cmp);
    out.dedup();
    out
}

/// Achievability candidates: every breakpoint `f − R > 1/n` moved down by
/// [`GAMMA_NUDGE`], the left boundary `1/n + δ`, and the cap.
fn achievability_candidates(sorted_values: &[f64], rate: f64, n: u32, gamma_max: f64) -> Vec<f64> {
    let floor = 1.0 / n as f64;
    let mut out: Vec<f64> = sorted_values
        .iter()
        .map(|&f| f - rate)
        .filter(|&b| b > floor && b.is_finite())
        .map(|b| b - GAMMA_NUDGE)
        .filter(|&g| g > floor)
        .collect();
    out.push(floor + GAMMA_NUDGE);
    out.push(gamma_max);
    out.sort_unstable_by(f64::total_cmp);
    out.dedup();
    out
}

/// Candidate values of `γ` for one spectrum, ascending.
pub fn gamma_candidates(s: &Spectrum, rate: f64, variant: Variant) -> Vec<f64> {
    let n = s.base().n();
    let gmax = variant.gamma_max(n, s.base().alphabet_size(), s.output_size());
    let mut values: Vec<f64> = s.atoms().iter().map(|a| a.value(variant.functional())).collect();
    values.sort_unstable_by(f64::total_cmp);
    if variant.is_converse() {
        converse_candidates(&values, rate, gmax)
    } else {
        achievability_candidates(&values, rate, n, gmax)
    }
}

/// `Pr{ R − f ≥ γ | P }`, the event of the converse bounds.
pub fn converse_event_prob(s: &Spectrum, functional: Functional, rate: f64, gamma: f64) -> f64 {
    let mut logs: Vec<f64> = s
        .atoms()
        .iter()
        .filter(|a| rate - a.value(functional) >= gamma)
        .map(|a| a.log2_prob)
        .collect();
    log2_sum_exp(&mut logs).exp2().min(1.0)
}

/// `Pr{ f − R ≤ γ | P }`, the event of the achievability bounds.
pub fn achievability_event_prob(s: &Spectrum, functional: Functional, rate: f64, gamma: f64) -> f64 {
    let mut logs: Vec<f64> = s
        .atoms()
        .iter()
        .filter(|a| a.value(functional) - rate <= gamma)
        .map(|a| a.log2_prob)
        .collect();
    log2_sum_exp(&mut logs).exp2().min(1.0)
}

/// Right-hand side of the constant-composition existence statements for a
/// fixed `P` and `γ`: `Pr{ log|K|/n ≥ f − γ } + C_n 2^{−nγ}`, with
/// `C_n = κ_n(|X|)` for `J` and `η_n(|X|,|Y|)` for `I` (no factor two).
pub fn code_achievability_rhs(
    s: &Spectrum,
    functional: Functional,
    rate: f64,
    gamma: f64,
) -> f64 {
    let n = s.base().n();
    let inputs = s.base().alphabet_size();
    let c = match functional {
        Functional::I => eta(n, inputs, s.output_size()),
        _ => kappa(n, inputs),
    };
    achievability_event_prob(s, functional, rate, gamma) + (c - n as f64 * gamma).exp2()
}

/// Values of one functional over a spectrum, ascending, with running
/// log2 cumulative mass.
#[derive(Debug, Clone)]
struct SortedLaw {
    values: Vec<f64>,
    cum_log2: Vec<f64>,
}

impl SortedLaw {
    fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut cum = f64::NEG_INFINITY;
        let mut values = Vec::with_capacity(pairs.len());
        let mut cum_log2 = Vec::with_capacity(pairs.len());
        for (f, lp) in pairs {
            cum = log2_add(cum, lp);
            values.push(f);
            cum_log2.push(cum);
        }
        Self { values, cum_log2 }
    }

    fn prefix_mass(&self, count: usize) -> f64 {
        if count == 0 {
            0.0
        } else {
            self.cum_log2[count - 1].exp2().min(1.0)
        }
    }

    fn converse_count(&self, rate: f64, gamma: f64) -> usize {
        self.values.partition_point(|&f| rate - f >= gamma)
    }

    fn converse_tail(&self, rate: f64, gamma: f64) -> f64 {
        self.prefix_mass(self.converse_count(rate, gamma))
    }

    /// Tail just above `γ`: atoms with `R − f > γ`.
    fn converse_tail_above(&self, rate: f64, gamma: f64) -> f64 {
        self.prefix_mass(self.values.partition_point(|&f| rate - f > gamma))
    }

    fn achievability_tail(&self, rate: f64, gamma: f64) -> f64 {
        self.prefix_mass(self.values.partition_point(|&f| f - rate <= gamma))
    }
}

/// Bound evaluator for one channel, blocklength and cost budget. Per-type
/// laws of each functional are built on first use and reused for every rate
/// and variant.
pub struct BoundEngine<'a> {
    channel: &'a Channel,
    n: u32,
    budget: Option<f64>,
    types: Vec<InputType>,
    laws: [OnceLock<Vec<SortedLaw>>; 3],
}

impl<'a> BoundEngine<'a> {
    pub fn new(channel: &'a Channel, n: u32, budget: Option<f64>) -> Result<Self, BoundsError> {
        if n == 0 {
            return Err(BoundsError::InvalidQuery("blocklength must be at least 1".into()));
        }
        let types = enumerate_input_types(n, channel.input_size(), channel.cost(), budget);
        if types.is_empty() {
            return Err(BoundsError::Infeasible {
                n,
                budget: budget.unwrap_or(f64::INFINITY),
            });
        }
        Ok(Self {
            channel,
            n,
            budget,
            types,
            laws: [OnceLock::new(), OnceLock::new(), OnceLock::new()],
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn budget(&self) -> Option<f64> {
        self.budget
    }

    /// Cost-feasible input types, in enumeration order.
    pub fn types(&self) -> &[InputType] {
        &self.types
    }

    fn laws(&self, functional: Functional) -> &[SortedLaw] {
        let slot = match functional {
            Functional::UnderlineI => 0,
            Functional::J => 1,
            Functional::I => 2,
        };
        self.laws[slot].get_or_init(|| {
            let lf = LogFactorials::new(self.n);
            self.types
                .par_iter()
                .map(|p| {
                    let mut pairs = Vec::new();
                    for_each_atom(p, self.channel, &lf, |_, lp, f| {
                        pairs.push((functional.pick(&f), lp))
                    });
                    SortedLaw::from_pairs(pairs)
                })
                .collect()
        })
    }

    pub fn evaluate(&self, rate: f64, variant: Variant) -> Result<BoundResult, BoundsError> {
        BoundQuery {
            n: self.n,
            rate,
            budget: self.budget,
            variant,
        }
        .check()?;
        Ok(if variant.is_converse() {
            self.converse(rate, variant)
        } else {
            self.achievability(rate, variant)
        })
    }

    fn converse(&self, rate: f64, variant: Variant) -> BoundResult {
        let laws = self.laws(variant.functional());
        let n = self.n as f64;
        let (inputs, outputs) = (self.channel.input_size(), self.channel.output_size());
        let c = variant.penalty_log2_constant(self.n, inputs, outputs);
        let gmax = variant.gamma_max(self.n, inputs, outputs);

        // Walk every atom of every type in ascending f (descending γ = R − f),
        // tracking each type's tail and the minimum over types.
        let mut cursor = vec![0usize; laws.len()];
        let mut heap: BinaryHeap<Reverse<(OrdF64, usize)>> = laws
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.values.is_empty())
            .map(|(i, l)| Reverse((OrdF64(l.values[0]), i)))
            .collect();
        let mut mins = MinTree::new(laws.len());
        let mut best: Option<(f64, f64)> = None; // (raw, gamma)
        let mut consider = |gamma: f64, mins: &MinTree| {
            let raw = mins.min() - (c - n * gamma).exp2();
            if best.is_none_or(|(b, _)| raw > b) {
                best = Some((raw, gamma));
            }
        };
        let mut cap_done = false;
        while let Some(&Reverse((OrdF64(f), _))) = heap.peek() {
            let g = rate - f;
            if g < gmax && !cap_done {
                consider(gmax, &mins);
                cap_done = true;
            }
            if g <= 0.0 {
                break;
            }
            while let Some(&Reverse((OrdF64(f2), i))) = heap.peek() {
                if rate - f2 != g {
                    break;
                }
                heap.pop();
                let law = &laws[i];
                let mut k = cursor[i];
                while k < law.values.len() && rate - law.values[k] == g {
                    k += 1;
                }
                cursor[i] = k;
                mins.set(i, law.prefix_mass(k));
                if k < law.values.len() {
                    heap.push(Reverse((OrdF64(law.values[k]), i)));
                }
            }
            if g.is_finite() {
                consider(g, &mins);
            }
        }
        if !cap_done {
            consider(gmax, &mins);
        }
        let (_, gamma_star) = best.expect("the cap is always evaluated");

        // The minimizing type: smallest tail at γ*, then smallest tail just
        // above γ* (the type whose breakpoint fixed γ*), then enumeration order.
        let (idx, tail) = laws
            .iter()
            .enumerate()
            .map(|(i, l)| (i, l.converse_tail(rate, gamma_star), l.converse_tail_above(rate, gamma_star)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)))
            .map(|(i, t, _)| (i, t))
            .unwrap();
        let penalty_log2 = c - n * gamma_star;
        let raw = tail - penalty_log2.exp2();
        self.result(variant, rate, raw, gamma_star, idx, penalty_log2, tail)
    }

    fn achievability(&self, rate: f64, variant: Variant) -> BoundResult {
        let laws = self.laws(variant.functional());
        let n = self.n as f64;
        let (inputs, outputs) = (self.channel.input_size(), self.channel.output_size());
        let c = variant.penalty_log2_constant(self.n, inputs, outputs);
        let gmax = variant.gamma_max(self.n, inputs, outputs);

        let per_type: Vec<(f64, f64, f64)> = laws
            .par_iter()
            .map(|law| {
                let mut best = (f64::INFINITY, f64::NAN, f64::NAN); // (raw, gamma, tail)
                for g in achievability_candidates(&law.values, rate, self.n, gmax) {
                    let tail = law.achievability_tail(rate, g);
                    let raw = tail + (c - n * g).exp2();
                    if raw < best.0 {
                        best = (raw, g, tail);
                    }
                }
                best
            })
            .collect();
        let (idx, &(raw, gamma_star, tail)) = per_type
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
            .unwrap();
        self.result(variant, rate, raw, gamma_star, idx, c - n * gamma_star, tail)
    }

    #[allow(clippy::too_many_arguments)]
    fn result(
        &self,
        variant: Variant,
        rate: f64,
        raw: f64,
        gamma_star: f64,
        idx: usize,
        penalty_log2: f64,
        tail_value: f64,
    ) -> BoundResult {
        BoundResult {
            variant,
            n: self.n,
            rate,
            budget: self.budget,
            value: clamp_unit(raw),
            raw,
            gamma_star,
            type_star: self.types[idx].clone(),
            penalty_log2,
            tail_value,
        }
    }
}

/// Lower bound on `ε(n, R, Γ | W)` from a converse variant.
pub fn converse_lower_bound(q: &BoundQuery, w: &Channel) -> Result<BoundResult, BoundsError> {
    q.check()?;
    if !q.variant.is_converse() {
        return Err(BoundsError::InvalidQuery(format!("{} is not a converse", q.variant)));
    }
    BoundEngine::new(w, q.n, q.budget)?.evaluate(q.rate, q.variant)
}

/// Upper bound on `ε(n, R, Γ | W)` from an achievability variant.
pub fn achievability_upper_bound(q: &BoundQuery, w: &Channel) -> Result<BoundResult, BoundsError> {
    q.check()?;
    if q.variant.is_converse() {
        return Err(BoundsError::InvalidQuery(format!("{} is not an achievability bound", q.variant)));
    }
    BoundEngine::new(w, q.n, q.budget)?.evaluate(q.rate, q.variant)
}

/// A one-dimensional parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    /// Blocklengths at a fixed rate.
    Blocklength { values: Vec<u32>, rate: f64 },
    /// Rates at a fixed blocklength.
    Rate { values: Vec<f64>, n: u32 },
}

/// One result per grid point per variant, grid-major.
pub fn sweep(
    grid: &Grid,
    budget: Option<f64>,
    w: &Channel,
    variants: &[Variant],
) -> Result<Vec<BoundResult>, BoundsError> {
    let mut rows = Vec::new();
    match grid {
        Grid::Blocklength { values, rate } => {
            for &n in values {
                let engine = BoundEngine::new(w, n, budget)?;
                for &v in variants {
                    rows.push(engine.evaluate(*rate, v)?);
                }
            }
        }
        Grid::Rate { values, n } => {
            let engine = BoundEngine::new(w, *n, budget)?;
            for &r in values {
                for &v in variants {
                    rows.push(engine.evaluate(r, v)?);
                }
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Segment tree holding the minimum of per-type tails.
struct MinTree {
    size: usize,
    nodes: Vec<f64>,
}

impl MinTree {
    fn new(len: usize) -> Self {
        let size = len.next_power_of_two();
        let mut nodes = vec![f64::INFINITY; 2 * size];
        for i in 0..len {
            nodes[size + i] = 0.0;
        }
        for i in (1..size).rev() {
            nodes[i] = nodes[2 * i].min(nodes[2 * i + 1]);
        }
        Self { size, nodes }
    }

    fn set(&mut self, i: usize, value: f64) {
        let mut k = self.size + i;
        self.nodes[k] = value;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k].min(self.nodes[2 * k + 1]);
        }
    }

    fn min(&self) -> f64 {
        self.nodes[1]
    }
}
