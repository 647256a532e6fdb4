//! Small-blocklength invariant suites run by the command-line `selftest`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{BoundEngine, Variant};
use crate::capacity::capacity;
use crate::channel::{
    divergence, entropy_of, functionals, output_distribution, Channel, ConditionalDistribution,
    Distribution,
};
use crate::codesim::{
    check_meta_converse, exact_error, ml_regions, output_string, code_converse_rhs,
    sequence_prob, type_class_family, Codebook, DecoderSpec,
};
use crate::spectrum::build_spectrum;
use crate::types::{
    enumerate_conditional_types, enumerate_input_types, kappa, log_cond_type_class_size,
    log_type_class_size, nu, ConditionalType, InputType,
};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default)]
pub struct SelftestOptions {
    /// Replaces `log2 κ_n` by zero in the type-counting checks.
    pub corrupt_kappa: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.ok() { "ok" } else { "FAILED" };
        write!(f, "{:<12} {}/{} {}", self.name, self.passed, self.total, status)
    }
}

#[derive(Default)]
struct Tally {
    passed: usize,
    total: usize,
}

impl Tally {
    fn check(&mut self, ok: bool) {
        self.total += 1;
        if ok {
            self.passed += 1;
        }
    }

    fn finish(self, name: &'static str) -> SuiteReport {
        SuiteReport {
            name,
            passed: self.passed,
            total: self.total,
        }
    }
}

pub fn run_selftest(opts: &SelftestOptions) -> Vec<SuiteReport> {
    vec![
        functionals_suite(),
        types_suite(opts),
        spectrum_suite(),
        capacity_suite(),
        bounds_suite(),
        codesim_suite(),
    ]
}

fn random_simplex(rng: &mut ChaCha8Rng, size: usize, zero_prob: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..size)
            .map(|_| if rng.random_bool(zero_prob) { 0.0 } else { rng.random::<f64>() })
            .collect();
        let total: f64 = v.iter().sum();
        if total > 0.0 {
            return v.into_iter().map(|x| x / total).collect();
        }
    }
}

fn functionals_suite() -> SuiteReport {
    let mut t = Tally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let a = rng.random_range(1..=4);
        let b = rng.random_range(1..=4);
        let p = Distribution::new(random_simplex(&mut rng, a, 0.2)).unwrap();
        let w_rows: Vec<Vec<f64>> = (0..a).map(|_| random_simplex(&mut rng, b, 0.0)).collect();
        let v_rows: Vec<Vec<f64>> = (0..a).map(|_| random_simplex(&mut rng, b, 0.2)).collect();
        let w = Channel::without_cost(w_rows).unwrap();
        let v = ConditionalDistribution::new(v_rows).unwrap();
        let f = functionals(&p, &v, &w);
        let gap = divergence(&output_distribution(&p, &v), &output_distribution(&p, w.transition()));
        t.check(f.underline_i <= f.j + 1e-10 && f.j <= f.i + 1e-10);
        t.check(((f.j - f.underline_i) - gap).abs() < 1e-10);
    }
    t.finish("functionals")
}

/// Checks `κ^{-1} 2^{nH(P)} ≤ |T_P| ≤ 2^{nH(P)}` and the conditional analogue
/// with `κ_n(|X||Y|)` for every type at blocklength `n`.
pub fn conditional_type_checks(n: u32, inputs: usize, outputs: usize, log_kappa: impl Fn(u32, usize) -> f64) -> (usize, usize) {
    let mut t = Tally::default();
    let nf = n as f64;
    for p in enumerate_input_types(n, inputs, &vec![0.0; inputs], None) {
        let h = entropy_of(p.distribution().probs());
        let size = log_type_class_size(&p).log2_value;
        t.check(size <= nf * h + TOL && size >= nf * h - log_kappa(n, inputs) - TOL);
        for v in enumerate_conditional_types(&p, outputs) {
            let hc = conditional_entropy_bits(&v);
            let size = log_cond_type_class_size(&v).log2_value;
            t.check(size <= nf * hc + TOL && size >= nf * hc - log_kappa(n, inputs * outputs) - TOL);
        }
    }
    (t.passed, t.total)
}

/// `H(V|P)` of a joint count table, in bits per symbol.
fn conditional_entropy_bits(v: &ConditionalType) -> f64 {
    let n: u32 = v.table().iter().sum();
    (0..v.inputs())
        .map(|x| {
            let row = v.row(x);
            let total: u32 = row.iter().sum();
            if total == 0 {
                return 0.0;
            }
            let probs: Vec<f64> = row.iter().map(|&k| k as f64 / total as f64).collect();
            total as f64 / n as f64 * entropy_of(&probs)
        })
        .sum()
}

fn types_suite(opts: &SelftestOptions) -> SuiteReport {
    let mut t = Tally::default();
    for inputs in 1..=3usize {
        for n in 1..=8u32 {
            let types = enumerate_input_types(n, inputs, &vec![0.0; inputs], None);
            let total: num_bigint::BigUint = types
                .iter()
                .map(|p| log_type_class_size(p).exact_value.unwrap())
                .sum();
            t.check(total == num_bigint::BigUint::from(inputs).pow(n));
            t.check(nu(n, inputs).exact_value == Some(types.len().into()));
        }
    }
    let corrupt = opts.corrupt_kappa;
    for n in [4u32, 8] {
        let (passed, total) = conditional_type_checks(n, 2, 2, |m, a| if corrupt { 0.0 } else { kappa(m, a) });
        t.passed += passed;
        t.total += total;
    }
    t.finish("types")
}

fn spectrum_suite() -> SuiteReport {
    let mut t = Tally::default();
    let w = Channel::without_cost(vec![vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap();
    for n in 1..=4usize {
        for p in enumerate_input_types(n as u32, 2, w.cost(), None) {
            let x = p.representative();
            let s = build_spectrum(&p, &w);
            let mut by_type: Vec<(Vec<u32>, f64)> = Vec::new();
            for i in 0..1usize << n {
                let y = output_string(i, n, 2);
                let v = ConditionalType::of_pair(&x, &y, 2, 2);
                let mass = sequence_prob(&w, &x, &y);
                match by_type.iter_mut().find(|(t, _)| t.as_slice() == v.table()) {
                    Some((_, m)) => *m += mass,
                    None => by_type.push((v.table().to_vec(), mass)),
                }
            }
            t.check(by_type.len() == s.atoms().len());
            for atom in s.atoms() {
                let expect = by_type
                    .iter()
                    .find(|(t, _)| t.as_slice() == atom.cond_type.table())
                    .map_or(0.0, |(_, m)| *m);
                t.check((atom.log2_prob.exp2() - expect).abs() < 1e-12);
            }
        }
    }
    let s = build_spectrum(&InputType::new(vec![15, 15]), &w);
    t.check((s.log2_total().exp2() - 1.0).abs() < 1e-9);
    t.finish("spectrum")
}

fn capacity_suite() -> SuiteReport {
    let mut t = Tally::default();
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    for p in [0.05, 0.1, 0.25] {
        let c = capacity(&Channel::bsc(p), None).unwrap();
        t.check((c.bits - (1.0 - h(p))).abs() < 1e-6);
    }
    let costly = Channel::bsc(0.1).with_cost(vec![0.0, 1.0]).unwrap();
    t.check(capacity(&costly, Some(-0.5)).is_err());
    let c = capacity(&costly, Some(0.2)).unwrap();
    t.check(c.input.probs()[1] <= 0.2 + 1e-9 && c.bits < 1.0 - h(0.1));
    t.finish("capacity")
}

fn bounds_suite() -> SuiteReport {
    let mut t = Tally::default();
    let w = Channel::bsc(0.1);
    for n in [10u32, 20] {
        let engine = BoundEngine::new(&w, n, None).unwrap();
        let mut previous = [0.0f64; 4];
        for step in 1..=8 {
            let rate = 0.1 * step as f64;
            let values: Vec<f64> = Variant::ALL
                .iter()
                .map(|&v| engine.evaluate(rate, v).unwrap().value)
                .collect();
            t.check(values.iter().all(|v| (0.0..=1.0).contains(v)));
            t.check(values[0].max(values[1]) <= values[2].min(values[3]) + 1e-12);
            for (p, v) in previous.iter_mut().zip(&values) {
                t.check(*v >= *p - 1e-12);
                *p = *v;
            }
        }
    }
    let noiseless = Channel::bsc(0.0);
    let r = BoundEngine::new(&noiseless, 100, None)
        .unwrap()
        .evaluate(1.1, Variant::ConverseUnderline)
        .unwrap();
    t.check((r.raw - (1.0 - 101.0 / 1024.0)).abs() < 1e-9);
    t.finish("bounds")
}

fn codesim_suite() -> SuiteReport {
    let mut t = Tally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let n = rng.random_range(2..=4usize);
        let m = rng.random_range(1..=4usize);
        let words: Vec<Vec<usize>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(0..2)).collect())
            .collect();
        let cb = Codebook::from_words(words, 2).unwrap();
        let p = rng.random_range(0.05..0.45);
        let w = Channel::bsc(p);
        let regions = ml_regions(&cb, &w).unwrap();
        let error = exact_error(&cb, &w, &DecoderSpec::Regions(regions.clone())).unwrap();
        let qs = type_class_family(n, 2).unwrap();
        for i in 1..=5 {
            let gamma = 0.2 * i as f64;
            t.check(code_converse_rhs(&cb, &w, gamma) <= error + 1e-12);
            t.check(check_meta_converse(&cb, &regions, &w, gamma, &qs).unwrap().holds);
        }
    }
    t.finish("codesim")
}
