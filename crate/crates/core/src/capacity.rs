//! Cost-constrained channel capacity by Blahut–Arimoto iteration.
//!
//! For a multiplier `s ≥ 0` the iteration maximizes `I(p, W) − s·E_p c(X)`.
//! The cost budget is met by bisecting on `s`; the expected cost of the
//! maximizer is nonincreasing in `s`.

use crate::channel::{mutual_info, Channel, ChannelError, Distribution};

const ITERATE_TOL_BITS: f64 = 1e-9;
const MAX_ITERATIONS: usize = 200_000;
const BISECTION_STEPS: usize = 60;
const COST_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Capacity {
    /// `C(Γ|W)` in bits.
    pub bits: f64,
    pub input: Distribution,
    /// Lagrange multiplier on the cost (nats per unit cost); zero when the
    /// budget is slack.
    pub multiplier: f64,
}

struct Iterate {
    probs: Vec<f64>,
    info_bits: f64,
    cost: f64,
}

/// `C(Γ|W) = max { I(p,W) : E_p c(X) ≤ Γ }`; `budget = None` is unbounded.
pub fn capacity(ch: &Channel, budget: Option<f64>) -> Result<Capacity, ChannelError> {
    let inputs = ch.input_size();
    let min_cost = ch.min_cost();
    let mut allowed = vec![true; inputs];
    if let Some(g) = budget {
        if g.is_nan() || g < min_cost - COST_TOL {
            return Err(ChannelError::InfeasibleBudget { budget: g, min_cost });
        }
        if g <= min_cost + COST_TOL {
            // only the cheapest letters can be used at all
            for (x, a) in allowed.iter_mut().enumerate() {
                *a = ch.cost()[x] <= min_cost + COST_TOL;
            }
            let it = blahut_arimoto(ch, 0.0, &allowed, None);
            return Ok(finish(ch, it, 0.0));
        }
    }

    let free = blahut_arimoto(ch, 0.0, &allowed, None);
    let g = match budget {
        Some(g) if free.cost > g + COST_TOL => g,
        _ => return Ok(finish(ch, free, 0.0)),
    };

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut hi_it = blahut_arimoto(ch, hi, &allowed, Some(&free.probs));
    while hi_it.cost > g && hi < 1e18 {
        lo = hi;
        hi *= 2.0;
        hi_it = blahut_arimoto(ch, hi, &allowed, Some(&hi_it.probs));
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let it = blahut_arimoto(ch, mid, &allowed, Some(&hi_it.probs));
        if it.cost > g {
            lo = mid;
        } else {
            hi = mid;
            hi_it = it;
        }
    }
    Ok(finish(ch, hi_it, hi))
}

fn finish(ch: &Channel, it: Iterate, multiplier: f64) -> Capacity {
    let input = Distribution::new(it.probs).expect("iterate stays on the simplex");
    let bits = mutual_info(&input, ch.transition());
    debug_assert!((bits - it.info_bits).abs() < 1e-6);
    Capacity {
        bits,
        input,
        multiplier,
    }
}

fn blahut_arimoto(ch: &Channel, s: f64, allowed: &[bool], start: Option<&[f64]>) -> Iterate {
    let inputs = ch.input_size();
    let outputs = ch.output_size();
    let support = allowed.iter().filter(|&&a| a).count() as f64;
    let mut p: Vec<f64> = match start {
        Some(init) => init
            .iter()
            .zip(allowed)
            .map(|(&v, &a)| if a { v.max(1e-300) } else { 0.0 })
            .collect(),
        None => allowed
            .iter()
            .map(|&a| if a { 1.0 / support } else { 0.0 })
            .collect(),
    };
    normalize(&mut p);

    let mut q = vec![0.0; outputs];
    let mut d = vec![0.0; inputs];
    let mut previous = f64::NEG_INFINITY;
    let mut info_nats = 0.0;
    for _ in 0..MAX_ITERATIONS {
        q.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..inputs {
            for (y, qy) in q.iter_mut().enumerate() {
                *qy += p[x] * ch.prob(x, y);
            }
        }
        for x in 0..inputs {
            d[x] = ch
                .row(x)
                .iter()
                .zip(&q)
                .filter(|(&w, _)| w > 0.0)
                .map(|(&w, &qy)| w * (w / qy).ln())
                .sum();
        }
        info_nats = (0..inputs).map(|x| p[x] * d[x]).sum::<f64>();
        let mean_cost: f64 = (0..inputs).map(|x| p[x] * ch.cost()[x]).sum();
        // duality gap of the Lagrangian I − s·E c
        let upper = (0..inputs)
            .filter(|&x| allowed[x])
            .map(|x| d[x] - s * ch.cost()[x])
            .fold(f64::NEG_INFINITY, f64::max);
        let gap_bits = (upper - (info_nats - s * mean_cost)) / std::f64::consts::LN_2;
        let info_bits = info_nats / std::f64::consts::LN_2;
        if (info_bits - previous).abs() < ITERATE_TOL_BITS && gap_bits < ITERATE_TOL_BITS {
            break;
        }
        previous = info_bits;

        let shift = upper;
        for x in 0..inputs {
            if allowed[x] {
                p[x] *= (d[x] - s * ch.cost()[x] - shift).exp();
            }
        }
        normalize(&mut p);
    }
    let cost = (0..inputs).map(|x| p[x] * ch.cost()[x]).sum();
    Iterate {
        probs: p,
        info_bits: info_nats / std::f64::consts::LN_2,
        cost,
    }
}

fn normalize(p: &mut [f64]) {
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h2(p: f64) -> f64 {
        if p == 0.0 || p == 1.0 {
            return 0.0;
        }
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    #[test]
    fn bsc_capacity_closed_form() {
        let c = capacity(&Channel::bsc(0.1), None).unwrap();
        assert!((c.bits - (1.0 - h2(0.1))).abs() < 1e-6);
        assert!((c.input.probs()[0] - 0.5).abs() < 1e-6);
        let c = capacity(&Channel::bsc(0.0), None).unwrap();
        assert!((c.bits - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constrained_bsc_matches_grid_search() {
        let ch = Channel::bsc(0.1).with_cost(vec![0.0, 1.0]).unwrap();
        let c = capacity(&ch, Some(0.2)).unwrap();
        let mut best = f64::NEG_INFINITY;
        let steps = 20_000;
        for i in 0..=steps {
            let q = 0.2 * i as f64 / steps as f64;
            best = best.max(h2(0.1 + 0.8 * q) - h2(0.1));
        }
        assert!((c.bits - best).abs() < 1e-5, "{} vs {}", c.bits, best);
        assert!(c.input.probs()[1] <= 0.2 + 1e-9);
    }

    #[test]
    fn budget_below_min_cost_is_infeasible() {
        let ch = Channel::bsc(0.1).with_cost(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            capacity(&ch, Some(0.5)),
            Err(ChannelError::InfeasibleBudget { .. })
        ));
        // exactly the minimum cost restricts to the cheap letter
        let c = capacity(&ch, Some(1.0)).unwrap();
        assert!(c.bits.abs() < 1e-12);
    }

    #[test]
    fn asymmetric_channel_converges() {
        // Z channel: C = log2(1 + (1-p) p^{p/(1-p)})
        let p: f64 = 0.3;
        let ch = Channel::without_cost(vec![vec![1.0, 0.0], vec![p, 1.0 - p]]).unwrap();
        let c = capacity(&ch, None).unwrap();
        let exact = (1.0 + (1.0 - p) * p.powf(p / (1.0 - p))).log2();
        assert!((c.bits - exact).abs() < 1e-7, "{} vs {}", c.bits, exact);
    }
}
