//! Exact law of the conditional type `V_{Y^n|x}` for a fixed input sequence
//! `x ∈ T_P^n`, together with the information functionals evaluated on each
//! conditional type.
//!
//! Every probability is kept as a base-2 logarithm; masses at blocklengths of
//! a few hundred are far below the smallest normal double.

use crate::channel::{functionals_raw, Channel, Functionals};
use crate::types::{
    enumerate_conditional_types, log_cond_type_class_size, ConditionalType, InputType,
    LogFactorials,
};

/// Selects one of the three information functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Functional {
    UnderlineI,
    J,
    I,
}

impl Functional {
    pub const ALL: [Functional; 3] = [Functional::UnderlineI, Functional::J, Functional::I];

    pub fn pick(self, f: &Functionals) -> f64 {
        match self {
            Functional::UnderlineI => f.underline_i,
            Functional::J => f.j,
            Functional::I => f.i,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    LessEq,
    Less,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumAtom {
    pub cond_type: ConditionalType,
    /// `log2 Pr{ V_{Y^n|x} = V | X^n = x }`
    pub log2_prob: f64,
    pub f_underline: f64,
    pub f_j: f64,
    pub f_i: f64,
}

impl SpectrumAtom {
    pub fn value(&self, f: Functional) -> f64 {
        match f {
            Functional::UnderlineI => self.f_underline,
            Functional::J => self.f_j,
            Functional::I => self.f_i,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    base: InputType,
    output_size: usize,
    atoms: Vec<SpectrumAtom>,
}

impl Spectrum {
    pub fn base(&self) -> &InputType {
        &self.base
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn atoms(&self) -> &[SpectrumAtom] {
        &self.atoms
    }

    /// log2 of the total mass; zero up to rounding.
    pub fn log2_total(&self) -> f64 {
        let mut logs: Vec<f64> = self.atoms.iter().map(|a| a.log2_prob).collect();
        log2_sum_exp(&mut logs)
    }
}

/// `log2 Σ 2^{v}`, summing in descending order. Empty input gives `−inf`.
pub fn log2_sum_exp(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(|a, b| b.total_cmp(a));
    let Some(&top) = values.first() else {
        return f64::NEG_INFINITY;
    };
    if top == f64::NEG_INFINITY {
        return top;
    }
    let sum: f64 = values.iter().map(|&v| (v - top).exp2()).sum();
    top + sum.log2()
}

/// `log2(2^a + 2^b)`.
#[inline]
pub fn log2_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp2().ln_1p() * std::f64::consts::LOG2_E
}

/// `log2 Pr{Y^n ∈ T_V^n(x) | X^n = x}` for `x ∈ T_P^n`: the conditional
/// class size times `∏ W(y|x)^{n(x,y)}`. `−inf` when `V` uses a transition
/// of probability zero.
pub fn cond_type_log_prob(p: &InputType, v: &ConditionalType, w: &Channel) -> f64 {
    assert_eq!(v.row_totals(), p.counts(), "conditional type is not over this input type");
    let mut log_w = 0.0;
    for x in 0..v.inputs() {
        for y in 0..v.outputs() {
            let k = v.get(x, y);
            if k > 0 {
                let wxy = w.prob(x, y);
                if wxy == 0.0 {
                    return f64::NEG_INFINITY;
                }
                log_w += k as f64 * wxy.log2();
            }
        }
    }
    log_cond_type_class_size(v).log2_value + log_w
}

/// Per-input-type scratch shared by all atoms of one spectrum.
pub(crate) struct AtomContext<'a> {
    channel: &'a Channel,
    log_w: Vec<f64>,
    p: Vec<f64>,
    pw: Vec<f64>,
    n: f64,
    v: Vec<f64>,
    pv: Vec<f64>,
}

impl<'a> AtomContext<'a> {
    pub(crate) fn new(base: &InputType, channel: &'a Channel) -> Self {
        let inputs = channel.input_size();
        let outputs = channel.output_size();
        assert_eq!(base.alphabet_size(), inputs, "type alphabet does not match channel");
        let n = base.n() as f64;
        let p: Vec<f64> = base.counts().iter().map(|&k| k as f64 / n).collect();
        let mut pw = vec![0.0; outputs];
        for x in 0..inputs {
            for y in 0..outputs {
                pw[y] += p[x] * channel.prob(x, y);
            }
        }
        let log_w = (0..inputs * outputs)
            .map(|i| channel.prob(i / outputs, i % outputs).log2())
            .collect();
        Self {
            channel,
            log_w,
            p,
            pw,
            n,
            v: vec![0.0; inputs * outputs],
            pv: vec![0.0; outputs],
        }
    }

    /// Mass and functionals of one conditional type, or `None` when its
    /// probability is zero.
    pub(crate) fn evaluate(&mut self, table: &[u32], lf: &LogFactorials) -> Option<(f64, Functionals)> {
        let outputs = self.pw.len();
        let inputs = self.p.len();
        let mut log2_prob = 0.0;
        for x in 0..inputs {
            let row = &table[x * outputs..(x + 1) * outputs];
            let total: u32 = row.iter().sum();
            if total == 0 {
                continue;
            }
            log2_prob += lf.multinomial(row);
            for (y, &k) in row.iter().enumerate() {
                if k > 0 {
                    let lw = self.log_w[x * outputs + y];
                    if lw == f64::NEG_INFINITY {
                        return None;
                    }
                    log2_prob += k as f64 * lw;
                }
                self.v[x * outputs + y] = k as f64 / total as f64;
            }
        }
        self.pv.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..inputs {
            for y in 0..outputs {
                self.pv[y] += table[x * outputs + y] as f64;
            }
        }
        self.pv.iter_mut().for_each(|v| *v /= self.n);
        let f = functionals_raw(
            &self.p,
            &self.v,
            self.channel.transition().flat(),
            &self.pw,
            &self.pv,
        );
        Some((log2_prob, f))
    }
}

/// Streams every positive-probability conditional type over `p` in
/// enumeration order.
pub(crate) fn for_each_atom(
    p: &InputType,
    w: &Channel,
    lf: &LogFactorials,
    mut visit: impl FnMut(&[u32], f64, Functionals),
) {
    let mut ctx = AtomContext::new(p, w);
    let mut types = enumerate_conditional_types(p, w.output_size());
    loop {
        let table = types.current();
        if let Some((lp, f)) = ctx.evaluate(table, lf) {
            visit(table, lp, f);
        }
        if !types.advance() {
            break;
        }
    }
}

/// One atom per positive-probability conditional type of `p`.
pub fn build_spectrum(p: &InputType, w: &Channel) -> Spectrum {
    let lf = LogFactorials::new(p.n());
    build_spectrum_with(p, w, &lf)
}

pub(crate) fn build_spectrum_with(p: &InputType, w: &Channel, lf: &LogFactorials) -> Spectrum {
    let outputs = w.output_size();
    let mut atoms = Vec::new();
    for_each_atom(p, w, lf, |table, log2_prob, f| {
        atoms.push(SpectrumAtom {
            cond_type: ConditionalType::new(table.to_vec(), outputs),
            log2_prob,
            f_underline: f.underline_i,
            f_j: f.j,
            f_i: f.i,
        })
    });
    Spectrum {
        base: p.clone(),
        output_size: outputs,
        atoms,
    }
}

/// `Pr{ f(V) ≤ t }` (or `<`) under the spectrum. Atoms with `f = −inf`
/// satisfy `≤` for every threshold.
pub fn tail_prob(s: &Spectrum, functional: Functional, threshold: f64, cmp: Comparison) -> f64 {
    let mut logs: Vec<f64> = s
        .atoms
        .iter()
        .filter(|a| {
            let v = a.value(functional);
            match cmp {
                Comparison::LessEq => v <= threshold || v == f64::NEG_INFINITY,
                Comparison::Less => v < threshold,
            }
        })
        .map(|a| a.log2_prob)
        .collect();
    log2_sum_exp(&mut logs).exp2().min(1.0)
}
