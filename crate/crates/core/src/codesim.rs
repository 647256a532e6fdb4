//! Explicit codes: constant-composition random codebooks, threshold and MMI
//! decoding, exact and Monte Carlo error evaluation, and exact checks of the
//! meta-converse inequality on small instances.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{converse_event_prob, code_achievability_rhs};
use crate::channel::{functionals_raw, output_marginal_into, Channel, Functionals};
use crate::spectrum::{build_spectrum, Functional};
use crate::types::{nu, InputType};

/// Largest output space enumerated exactly.
pub const EXACT_OUTPUT_LIMIT: u64 = 1 << 22;

/// Trials per Monte Carlo batch; each batch has its own generator stream.
pub const BATCH_TRIALS: u64 = 1000;

/// Empirical mutual informations closer than this are a tie.
pub const MMI_TIE_TOL: f64 = 1e-12;

const WILSON_Z: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodesimError {
    #[error("codebook is empty")]
    EmptyCodebook,
    #[error("codeword {index} has length {got}, expected {expected}")]
    WordLength { index: usize, expected: usize, got: usize },
    #[error("symbol {symbol} outside an input alphabet of size {alphabet}")]
    Symbol { symbol: usize, alphabet: usize },
    #[error("composition {0} does not match the channel input alphabet")]
    Composition(String),
    #[error("output space of {outputs}^{n} strings is too large for exact evaluation")]
    TooLarge { outputs: usize, n: usize },
    #[error("decoding regions cover {got} outputs, expected {expected}")]
    Regions { expected: usize, got: usize },
    #[error("number of trials must be at least 1")]
    NoTrials,
    #[error("output distribution {index} has {got} entries, expected {expected}")]
    QLength { index: usize, expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    n: usize,
    words: Vec<Vec<usize>>,
    /// Common type of all words, for random constant-composition codes.
    composition: Option<InputType>,
    seed: Option<u64>,
}

impl Codebook {
    /// An explicit code; words may have different types.
    pub fn from_words(words: Vec<Vec<usize>>, inputs: usize) -> Result<Self, CodesimError> {
        let n = words.first().ok_or(CodesimError::EmptyCodebook)?.len();
        for (index, w) in words.iter().enumerate() {
            if w.len() != n {
                return Err(CodesimError::WordLength {
                    index,
                    expected: n,
                    got: w.len(),
                });
            }
            if let Some(&symbol) = w.iter().find(|&&s| s >= inputs) {
                return Err(CodesimError::Symbol {
                    symbol,
                    alphabet: inputs,
                });
            }
        }
        let first = InputType::of_sequence(&words[0], inputs);
        let composition = words
            .iter()
            .all(|w| InputType::of_sequence(w, inputs) == first)
            .then_some(first);
        Ok(Self {
            n,
            words,
            composition,
            seed: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of messages `M`.
    pub fn m(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    pub fn word(&self, k: usize) -> &[usize] {
        &self.words[k]
    }

    pub fn composition(&self) -> Option<&InputType> {
        self.composition.as_ref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// `m` words drawn independently and uniformly from the type class of `p`,
/// each a seeded shuffle of the multiset of symbols.
pub fn generate_codebook(p: &InputType, m: usize, seed: u64) -> Result<Codebook, CodesimError> {
    if m == 0 {
        return Err(CodesimError::EmptyCodebook);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = p.representative();
    let words = (0..m)
        .map(|_| {
            let mut w = base.clone();
            w.shuffle(&mut rng);
            w
        })
        .collect();
    Ok(Codebook {
        n: p.n() as usize,
        words,
        composition: Some(p.clone()),
        seed: Some(seed),
    })
}

/// Functionals of the joint type of `(x, y)`.
pub fn empirical_functionals(x: &[usize], y: &[usize], w: &Channel) -> Functionals {
    let (inputs, outputs) = (w.input_size(), w.output_size());
    let n = x.len() as f64;
    let mut joint = vec![0u32; inputs * outputs];
    for (&a, &b) in x.iter().zip(y) {
        joint[a * outputs + b] += 1;
    }
    let mut p = vec![0.0; inputs];
    let mut v = vec![0.0; inputs * outputs];
    for a in 0..inputs {
        let row = &joint[a * outputs..(a + 1) * outputs];
        let total: u32 = row.iter().sum();
        p[a] = total as f64 / n;
        if total > 0 {
            for b in 0..outputs {
                v[a * outputs + b] = row[b] as f64 / total as f64;
            }
        }
    }
    let mut pw = vec![0.0; outputs];
    output_marginal_into(&p, w.transition().flat(), outputs, &mut pw);
    let mut pv = vec![0.0; outputs];
    for (b, q) in pv.iter_mut().enumerate() {
        *q = (0..inputs).map(|a| joint[a * outputs + b] as f64).sum::<f64>() / n;
    }
    functionals_raw(&p, &v, w.transition().flat(), &pw, &pv)
}

/// `J(x; y | W) = J(P_x, V_{y|x} | W)`.
pub fn empirical_j(x: &[usize], y: &[usize], w: &Channel) -> f64 {
    empirical_functionals(x, y, w).j
}

/// Empirical mutual information `I(P_x, V_{y|x})`.
pub fn empirical_mi(x: &[usize], y: &[usize], w: &Channel) -> f64 {
    empirical_functionals(x, y, w).i
}

/// Decodes `y` to the unique codeword with `J(x;y|W) ≥ log2(M)/n + γ`.
pub fn threshold_decode(cb: &Codebook, w: &Channel, y: &[usize], gamma: f64) -> Option<usize> {
    let threshold = (cb.m() as f64).log2() / cb.n() as f64 + gamma;
    let mut found = None;
    for (k, x) in cb.words().iter().enumerate() {
        if empirical_j(x, y, w) >= threshold {
            if found.is_some() {
                return None;
            }
            found = Some(k);
        }
    }
    found
}

/// Decodes `y` to the unique maximizer of the empirical mutual information.
pub fn mmi_decode(cb: &Codebook, w: &Channel, y: &[usize]) -> Option<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut arg = None;
    for (k, x) in cb.words().iter().enumerate() {
        let i = empirical_mi(x, y, w);
        if i > best + MMI_TIE_TOL {
            best = i;
            arg = Some(k);
        } else if i >= best - MMI_TIE_TOL {
            arg = None;
            best = best.max(i);
        }
    }
    arg
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Decoder {
    #[serde(rename = "threshold_J")]
    ThresholdJ { gamma: f64 },
    #[serde(rename = "mmi")]
    Mmi,
}

impl Decoder {
    pub fn name(&self) -> &'static str {
        match self {
            Decoder::ThresholdJ { .. } => "threshold_J",
            Decoder::Mmi => "mmi",
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            Decoder::ThresholdJ { gamma } => Some(*gamma),
            Decoder::Mmi => None,
        }
    }

    pub fn decode(&self, cb: &Codebook, w: &Channel, y: &[usize]) -> Option<usize> {
        match self {
            Decoder::ThresholdJ { gamma } => threshold_decode(cb, w, y, *gamma),
            Decoder::Mmi => mmi_decode(cb, w, y),
        }
    }
}

/// Decoded message for every output string, indexed in mixed radix with
/// the first symbol most significant. `None` is a decoding failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodingRegions(pub Vec<Option<usize>>);

impl DecodingRegions {
    pub fn get(&self, y_index: usize) -> Option<usize> {
        self.0[y_index]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecoderSpec {
    Rule(Decoder),
    Regions(DecodingRegions),
}

fn output_space(n: usize, outputs: usize) -> Result<usize, CodesimError> {
    let size = (outputs as u64).checked_pow(n as u32);
    match size {
        Some(s) if s <= EXACT_OUTPUT_LIMIT => Ok(s as usize),
        _ => Err(CodesimError::TooLarge { outputs, n }),
    }
}

/// Output string with the given mixed-radix index.
pub fn output_string(index: usize, n: usize, outputs: usize) -> Vec<usize> {
    let mut y = vec![0; n];
    let mut r = index;
    for slot in y.iter_mut().rev() {
        *slot = r % outputs;
        r /= outputs;
    }
    y
}

/// `W^n(y|x)`.
pub fn sequence_prob(w: &Channel, x: &[usize], y: &[usize]) -> f64 {
    x.iter().zip(y).map(|(&a, &b)| w.prob(a, b)).product()
}

fn check_code(cb: &Codebook, w: &Channel) -> Result<(), CodesimError> {
    let inputs = w.input_size();
    for x in cb.words() {
        if let Some(&symbol) = x.iter().find(|&&s| s >= inputs) {
            return Err(CodesimError::Symbol {
                symbol,
                alphabet: inputs,
            });
        }
    }
    Ok(())
}

/// Decoding regions of a decoder rule over the whole output space.
pub fn decoding_regions(cb: &Codebook, w: &Channel, decoder: &Decoder) -> Result<DecodingRegions, CodesimError> {
    check_code(cb, w)?;
    let size = output_space(cb.n(), w.output_size())?;
    let regions = (0..size)
        .into_par_iter()
        .map(|i| decoder.decode(cb, w, &output_string(i, cb.n(), w.output_size())))
        .collect();
    Ok(DecodingRegions(regions))
}

/// Maximum-likelihood regions, ties to the smallest index.
pub fn ml_regions(cb: &Codebook, w: &Channel) -> Result<DecodingRegions, CodesimError> {
    check_code(cb, w)?;
    let size = output_space(cb.n(), w.output_size())?;
    let regions = (0..size)
        .map(|i| {
            let y = output_string(i, cb.n(), w.output_size());
            let mut best = (0, f64::NEG_INFINITY);
            for (k, x) in cb.words().iter().enumerate() {
                let p = sequence_prob(w, x, &y);
                if p > best.1 {
                    best = (k, p);
                }
            }
            Some(best.0)
        })
        .collect();
    Ok(DecodingRegions(regions))
}

fn resolve_regions(cb: &Codebook, w: &Channel, spec: &DecoderSpec) -> Result<DecodingRegions, CodesimError> {
    let size = output_space(cb.n(), w.output_size())?;
    match spec {
        DecoderSpec::Rule(d) => decoding_regions(cb, w, d),
        DecoderSpec::Regions(r) if r.len() != size => Err(CodesimError::Regions {
            expected: size,
            got: r.len(),
        }),
        DecoderSpec::Regions(r) => Ok(r.clone()),
    }
}

/// Exact average error probability by enumerating all output strings.
pub fn exact_error(cb: &Codebook, w: &Channel, spec: &DecoderSpec) -> Result<f64, CodesimError> {
    check_code(cb, w)?;
    let regions = resolve_regions(cb, w, spec)?;
    let outputs = w.output_size();
    let correct: f64 = (0..regions.len())
        .into_par_iter()
        .map(|i| match regions.get(i) {
            Some(k) if k < cb.m() => sequence_prob(w, cb.word(k), &output_string(i, cb.n(), outputs)),
            _ => 0.0,
        })
        .sum();
    Ok((1.0 - correct / cb.m() as f64).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub trials: u64,
    pub errors: u64,
    pub estimate: f64,
    pub wilson_upper_95: f64,
    pub decoder: String,
    pub gamma: Option<f64>,
}

impl SimResult {
    fn new(trials: u64, errors: u64, decoder: &Decoder) -> Self {
        let (_, upper) = wilson_interval(errors, trials);
        Self {
            trials,
            errors,
            estimate: errors as f64 / trials as f64,
            wilson_upper_95: upper,
            decoder: decoder.name().to_string(),
            gamma: decoder.gamma(),
        }
    }

    /// Binomial standard deviation of the estimate.
    pub fn sigma(&self) -> f64 {
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    let t = trials as f64;
    let p = errors as f64 / t;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / t;
    let centre = p + z2 / (2.0 * t);
    let half = WILSON_Z * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt();
    (
        ((centre - half) / denom).max(0.0),
        ((centre + half) / denom).min(1.0),
    )
}

fn run_batch(cb: &Codebook, w: &Channel, decoder: &Decoder, sampler: &[WeightedIndex<f64>], trials: u64, seed: u64, batch: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    let mut y = vec![0usize; cb.n()];
    let mut errors = 0;
    for _ in 0..trials {
        let k = rng.random_range(0..cb.m());
        for (slot, &a) in y.iter_mut().zip(cb.word(k)) {
            *slot = sampler[a].sample(&mut rng);
        }
        if decoder.decode(cb, w, &y) != Some(k) {
            errors += 1;
        }
    }
    errors
}

/// Monte Carlo estimates after each batch of [`BATCH_TRIALS`], cumulative.
/// Batch `b` uses the stream `b` of a generator seeded with `seed`, so the
/// result does not depend on the thread count.
pub fn estimate_error_batches(
    cb: &Codebook,
    w: &Channel,
    decoder: &Decoder,
    trials: u64,
    seed: u64,
) -> Result<Vec<SimResult>, CodesimError> {
    if trials == 0 {
        return Err(CodesimError::NoTrials);
    }
    check_code(cb, w)?;
    let sampler: Vec<WeightedIndex<f64>> = (0..w.input_size())
        .map(|a| WeightedIndex::new(w.row(a)).expect("channel rows are distributions"))
        .collect();
    let batches = trials.div_ceil(BATCH_TRIALS);
    let counts: Vec<(u64, u64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let size = BATCH_TRIALS.min(trials - b * BATCH_TRIALS);
            (size, run_batch(cb, w, decoder, &sampler, size, seed, b))
        })
        .collect();
    let mut done = 0;
    let mut errors = 0;
    Ok(counts
        .into_iter()
        .map(|(size, e)| {
            done += size;
            errors += e;
            SimResult::new(done, errors, decoder)
        })
        .collect())
}

pub fn estimate_error(
    cb: &Codebook,
    w: &Channel,
    decoder: &Decoder,
    trials: u64,
    seed: u64,
) -> Result<SimResult, CodesimError> {
    Ok(estimate_error_batches(cb, w, decoder, trials, seed)?
        .pop()
        .expect("at least one batch"))
}

/// How error probabilities of sampled codebooks are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluation {
    Exact,
    MonteCarlo { trials: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AchievabilityReport {
    pub m: usize,
    /// `⌊nR⌋ / n`.
    pub effective_rate: f64,
    /// Analytic right-hand side, tail plus penalty.
    pub bound: f64,
    pub errors: Vec<f64>,
    pub min_error: f64,
    /// Binomial standard deviation of the minimum (zero when exact).
    pub sigma: f64,
    pub violated: bool,
}

/// Draws `attempts` codebooks over `p` with `M = 2^⌊nR⌋` and compares the
/// best observed error with the existence bound for the threshold-J
/// (`Functional::J`) or MMI (`Functional::I`) decoder.
#[allow(clippy::too_many_arguments)]
pub fn check_code_achievability(
    p: &InputType,
    rate: f64,
    gamma: f64,
    w: &Channel,
    functional: Functional,
    attempts: usize,
    evaluation: Evaluation,
    seed: u64,
) -> Result<AchievabilityReport, CodesimError> {
    if p.alphabet_size() != w.input_size() {
        return Err(CodesimError::Composition(p.to_string()));
    }
    let n = p.n() as usize;
    let bits = (n as f64 * rate).floor().max(0.0) as u32;
    let m = 1usize << bits;
    let effective_rate = bits as f64 / n as f64;
    let f = match functional {
        Functional::I => Functional::I,
        _ => Functional::J,
    };
    let bound = code_achievability_rhs(&build_spectrum(p, w), f, effective_rate, gamma);
    let decoder = match f {
        Functional::I => Decoder::Mmi,
        _ => Decoder::ThresholdJ { gamma },
    };
    let mut results = Vec::with_capacity(attempts);
    for a in 0..attempts as u64 {
        let cb = generate_codebook(p, m, seed.wrapping_add(a))?;
        results.push(match evaluation {
            Evaluation::Exact => (exact_error(&cb, w, &DecoderSpec::Rule(decoder))?, 0.0),
            Evaluation::MonteCarlo { trials } => {
                let r = estimate_error(&cb, w, &decoder, trials, seed ^ (a << 32))?;
                (r.estimate, r.sigma())
            }
        });
    }
    let (min_error, sigma) = results
        .iter()
        .copied()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap_or((f64::INFINITY, 0.0));
    Ok(AchievabilityReport {
        m,
        effective_rate,
        bound,
        errors: results.iter().map(|r| r.0).collect(),
        min_error,
        sigma,
        violated: min_error > bound + 3.0 * sigma,
    })
}

/// Converse right-hand side for an explicit code:
/// `Pr{ log2(M)/n ≥ I̲(P_x, V|W) + γ } − ν_n(|Y|) 2^{−nγ}`, with the message
/// uniform and the probability taken over each codeword's own type.
pub fn code_converse_rhs(cb: &Codebook, w: &Channel, gamma: f64) -> f64 {
    let rate = (cb.m() as f64).log2() / cb.n() as f64;
    let inputs = w.input_size();
    let mut total = 0.0;
    let mut cache: Vec<(InputType, f64)> = Vec::new();
    for x in cb.words() {
        let p = InputType::of_sequence(x, inputs);
        let prob = match cache.iter().find(|(q, _)| *q == p) {
            Some(&(_, v)) => v,
            None => {
                let v = converse_event_prob(&build_spectrum(&p, w), Functional::UnderlineI, rate, gamma);
                cache.push((p, v));
                v
            }
        };
        total += prob;
    }
    let n = cb.n() as u32;
    total / cb.m() as f64 - (nu(n, w.output_size()).log2_value - n as f64 * gamma).exp2()
}

/// One uniform distribution per output type class.
pub fn type_class_family(n: usize, outputs: usize) -> Result<Vec<Vec<f64>>, CodesimError> {
    let size = output_space(n, outputs)?;
    let mut classes: Vec<(Vec<u32>, Vec<usize>)> = Vec::new();
    for i in 0..size {
        let mut counts = vec![0u32; outputs];
        for b in output_string(i, n, outputs) {
            counts[b] += 1;
        }
        match classes.iter_mut().find(|(c, _)| *c == counts) {
            Some((_, members)) => members.push(i),
            None => classes.push((counts, vec![i])),
        }
    }
    Ok(classes
        .into_iter()
        .map(|(_, members)| {
            let mut q = vec![0.0; size];
            let mass = 1.0 / members.len() as f64;
            for i in members {
                q[i] = mass;
            }
            q
        })
        .collect())
}

/// Output distribution of the code under a uniform message.
pub fn code_output_distribution(cb: &Codebook, w: &Channel) -> Result<Vec<f64>, CodesimError> {
    check_code(cb, w)?;
    let size = output_space(cb.n(), w.output_size())?;
    Ok((0..size)
        .map(|i| {
            let y = output_string(i, cb.n(), w.output_size());
            cb.words().iter().map(|x| sequence_prob(w, x, &y)).sum::<f64>() / cb.m() as f64
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaConverseReport {
    pub error: f64,
    /// Probability of the union of the events `W^n(Y|X) ≤ M 2^{−nγ} Q_l(Y)`.
    pub union_prob: f64,
    /// `union_prob − L 2^{−nγ}`.
    pub rhs: f64,
    pub deltas: Vec<f64>,
    pub penalty: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Evaluates both sides of the meta-converse exactly for an explicit code
/// and output distributions `qs`.
pub fn check_meta_converse(
    cb: &Codebook,
    regions: &DecodingRegions,
    w: &Channel,
    gamma: f64,
    qs: &[Vec<f64>],
) -> Result<MetaConverseReport, CodesimError> {
    check_code(cb, w)?;
    let outputs = w.output_size();
    let size = output_space(cb.n(), outputs)?;
    if regions.len() != size {
        return Err(CodesimError::Regions {
            expected: size,
            got: regions.len(),
        });
    }
    for (index, q) in qs.iter().enumerate() {
        if q.len() != size {
            return Err(CodesimError::QLength {
                index,
                expected: size,
                got: q.len(),
            });
        }
    }
    let m = cb.m() as f64;
    let penalty = (-(cb.n() as f64) * gamma).exp2();
    let scale = m * penalty;
    let mut correct = 0.0;
    let mut union = 0.0;
    let mut deltas = vec![0.0; qs.len()];
    for (k, x) in cb.words().iter().enumerate() {
        for i in 0..size {
            let wy = sequence_prob(w, x, &output_string(i, cb.n(), outputs));
            let decoded = regions.get(i) == Some(k);
            if decoded {
                correct += wy;
            }
            let mut any = false;
            for (l, q) in qs.iter().enumerate() {
                if wy <= scale * q[i] {
                    any = true;
                    if decoded {
                        deltas[l] += wy;
                    }
                }
            }
            if any {
                union += wy;
            }
        }
    }
    let error = (1.0 - correct / m).clamp(0.0, 1.0);
    let union_prob = union / m;
    deltas.iter_mut().for_each(|d| *d /= m);
    let rhs = union_prob - qs.len() as f64 * penalty;
    let tol = 1e-12;
    let holds = error >= rhs - tol && deltas.iter().all(|&d| d <= penalty + tol);
    Ok(MetaConverseReport {
        error,
        union_prob,
        rhs,
        deltas,
        penalty,
        slack: error - rhs,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(words: &[&[usize]]) -> Codebook {
        Codebook::from_words(words.iter().map(|w| w.to_vec()).collect(), 2).unwrap()
    }

    #[test]
    fn codebook_words_have_the_composition() {
        let p = InputType::new(vec![1, 1]);
        let cb = generate_codebook(&p, 50, 7).unwrap();
        assert!(cb.words().iter().all(|w| w == &[0, 1] || w == &[1, 0]));
        assert_eq!(cb, generate_codebook(&p, 50, 7).unwrap());
        let p = InputType::new(vec![5, 3]);
        let cb = generate_codebook(&p, 20, 1).unwrap();
        assert!(cb.words().iter().all(|w| InputType::of_sequence(w, 2) == p));
        assert_eq!(cb.composition(), Some(&p));
    }

    #[test]
    fn codebook_is_uniform_over_the_class() {
        let p = InputType::new(vec![2, 2]);
        let cb = generate_codebook(&p, 1000, 11).unwrap();
        let mut freq = std::collections::HashMap::new();
        for w in cb.words() {
            *freq.entry(w.clone()).or_insert(0usize) += 1;
        }
        assert_eq!(freq.len(), 6);
        let sigma = (1000.0 * (1.0 / 6.0) * (5.0 / 6.0f64)).sqrt();
        for &c in freq.values() {
            assert!((c as f64 - 1000.0 / 6.0).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn explicit_code_validation() {
        assert!(Codebook::from_words(vec![], 2).is_err());
        assert!(Codebook::from_words(vec![vec![0, 1], vec![0]], 2).is_err());
        assert!(Codebook::from_words(vec![vec![0, 2]], 2).is_err());
        assert_eq!(code(&[&[0, 1], &[1, 1]]).composition(), None);
    }

    #[test]
    fn threshold_decoder_cases() {
        let w = Channel::bsc(0.0);
        let cb = code(&[&[0, 1], &[1, 0]]);
        // J equals the empirical I here: 1 bit for the matching word, 0 otherwise
        for (y, expect) in [([0, 1], Some(0)), ([1, 0], Some(1)), ([0, 0], None), ([1, 1], None)] {
            assert_eq!(threshold_decode(&cb, &w, &y, 0.1), expect);
        }
        // nobody qualifies
        assert_eq!(threshold_decode(&cb, &w, &[0, 1], 5.0), None);
        // both qualify
        let twins = code(&[&[0, 1], &[0, 1]]);
        assert_eq!(threshold_decode(&twins, &Channel::bsc(0.1), &[0, 1], -10.0), None);
    }

    #[test]
    fn mmi_decoder_cases() {
        let w = Channel::bsc(0.1);
        let single = code(&[&[0, 1, 1]]);
        assert_eq!(mmi_decode(&single, &w, &[1, 1, 1]), Some(0));
        let twins = code(&[&[0, 1], &[0, 1]]);
        for i in 0..4 {
            assert_eq!(mmi_decode(&twins, &w, &output_string(i, 2, 2)), None);
        }
    }

    #[test]
    fn mmi_is_degenerate_at_length_one() {
        let cb = code(&[&[0], &[1]]);
        let e = exact_error(&cb, &Channel::bsc(0.1), &DecoderSpec::Rule(Decoder::Mmi)).unwrap();
        assert_eq!(e, 1.0);
    }

    #[test]
    fn noiseless_exact_error_is_zero() {
        let cb = code(&[&[0, 1], &[1, 0]]);
        let w = Channel::bsc(0.0);
        let j = exact_error(&cb, &w, &DecoderSpec::Rule(Decoder::ThresholdJ { gamma: 0.2 })).unwrap();
        assert_eq!(j, 0.0);
        // the swapped word is an equally informative relabelling, so MMI ties
        let mmi = exact_error(&cb, &w, &DecoderSpec::Rule(Decoder::Mmi)).unwrap();
        assert_eq!(mmi, 1.0);
    }

    #[test]
    fn repetition_code_ml_error() {
        let p: f64 = 0.2;
        let w = Channel::bsc(p);
        let cb = code(&[&[0, 0], &[1, 1]]);
        let regions = ml_regions(&cb, &w).unwrap();
        let e = exact_error(&cb, &w, &DecoderSpec::Regions(regions)).unwrap();
        // ties on 01 and 10 go to message 0
        let per_message = [p * p, p * p + 2.0 * p * (1.0 - p)];
        assert!((e - (per_message[0] + per_message[1]) / 2.0).abs() < 1e-15);
        let mmi = exact_error(&cb, &w, &DecoderSpec::Rule(Decoder::Mmi)).unwrap();
        // MMI ties on every output: both words are constant
        assert_eq!(mmi, 1.0);
    }

    #[test]
    fn wrong_region_length_is_rejected() {
        let cb = code(&[&[0, 1]]);
        let r = DecoderSpec::Regions(DecodingRegions(vec![None; 3]));
        assert!(matches!(exact_error(&cb, &Channel::bsc(0.1), &r), Err(CodesimError::Regions { .. })));
    }

    #[test]
    fn too_large_is_rejected() {
        let cb = Codebook::from_words(vec![vec![0; 30]], 2).unwrap();
        assert!(matches!(
            exact_error(&cb, &Channel::bsc(0.1), &DecoderSpec::Rule(Decoder::Mmi)),
            Err(CodesimError::TooLarge { .. })
        ));
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
        assert!((hi - 0.5 - (0.5 - lo)).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_is_deterministic_and_consistent() {
        let w = Channel::bsc(0.1);
        let p = InputType::new(vec![3, 3]);
        let cb = generate_codebook(&p, 4, 5).unwrap();
        let d = Decoder::Mmi;
        let a = estimate_error_batches(&cb, &w, &d, 20_000, 9).unwrap();
        assert_eq!(a, estimate_error_batches(&cb, &w, &d, 20_000, 9).unwrap());
        assert_eq!(a.len(), 20);
        assert_eq!(a.last().unwrap().trials, 20_000);
        let exact = exact_error(&cb, &w, &DecoderSpec::Rule(d)).unwrap();
        let r = a.last().unwrap();
        let (lo, hi) = wilson_interval(r.errors, r.trials);
        assert!(lo <= exact && exact <= hi, "{exact} not in [{lo}, {hi}]");
        assert!(r.wilson_upper_95 >= r.estimate);
    }

    #[test]
    fn noiseless_monte_carlo_has_no_errors() {
        let cb = code(&[&[0, 1], &[1, 0]]);
        let r = estimate_error(&cb, &Channel::bsc(0.0), &Decoder::ThresholdJ { gamma: 0.1 }, 500, 3).unwrap();
        assert_eq!(r.errors, 0);
        assert_eq!(r.gamma, Some(0.1));
        assert!(estimate_error(&cb, &Channel::bsc(0.0), &Decoder::Mmi, 0, 3).is_err());
    }

    #[test]
    fn meta_converse_with_code_output_distribution() {
        let w = Channel::bsc(0.1);
        let cb = code(&[&[0, 1], &[1, 0]]);
        let regions = ml_regions(&cb, &w).unwrap();
        let q = code_output_distribution(&cb, &w).unwrap();
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for gamma in [0.05, 0.3, 1.0] {
            let r = check_meta_converse(&cb, &regions, &w, gamma, std::slice::from_ref(&q)).unwrap();
            assert!(r.holds, "{r:?}");
            assert!(r.slack >= -1e-12);
        }
        let r = check_meta_converse(&cb, &regions, &w, 40.0, &[q]).unwrap();
        assert!(r.rhs <= r.union_prob && r.holds);
    }

    #[test]
    fn meta_converse_with_type_class_family() {
        let w = Channel::bsc(0.15);
        let cb = code(&[&[0, 0, 1], &[1, 1, 0], &[0, 1, 0]]);
        let qs = type_class_family(3, 2).unwrap();
        assert_eq!(qs.len(), 4);
        for d in [Decoder::Mmi, Decoder::ThresholdJ { gamma: 0.05 }] {
            let regions = decoding_regions(&cb, &w, &d).unwrap();
            for gamma in [0.1, 0.5, 1.5] {
                assert!(check_meta_converse(&cb, &regions, &w, gamma, &qs).unwrap().holds);
            }
        }
    }

    #[test]
    fn converse_rhs_below_exact_error() {
        let w = Channel::bsc(0.2);
        let cb = code(&[&[0, 0, 0], &[1, 1, 1], &[0, 1, 1]]);
        let e = exact_error(&cb, &w, &DecoderSpec::Regions(ml_regions(&cb, &w).unwrap())).unwrap();
        for i in 1..=20 {
            let gamma = 0.1 * i as f64;
            assert!(code_converse_rhs(&cb, &w, gamma) <= e + 1e-12);
        }
    }

    #[test]
    fn vacuous_achievability_check() {
        let w = Channel::bsc(0.1);
        let p = InputType::new(vec![2, 2]);
        let r = check_code_achievability(&p, 1.0, 0.5, &w, Functional::J, 2, Evaluation::Exact, 1).unwrap();
        assert!(r.bound >= 1.0);
        assert!(!r.violated);
        assert_eq!(r.m, 16);
    }
}
