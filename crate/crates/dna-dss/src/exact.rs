//! Exact expected stopping times for tiny instances, the ground truth the
//! simulators are validated against.
//!
//! All chains here are absorbing with monotone progress, so the linear systems
//! are triangular in a suitable order (marks only accumulate, copy counts only
//! grow) and solve by back-substitution in double precision. No state is
//! revisited, no general solver is needed.

use thiserror::Error;

use crate::analysis::Classification;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("oracle budget exceeded: {reason}")]
    Budget { reason: String },
    #[error("stopping rule cannot be satisfied: {reason}")]
    Unsatisfiable { reason: String },
    #[error("classification does not match the requested process ({reason})")]
    RuleMismatch { reason: String },
    #[error("back-substitution residual {residual} exceeds 1e-9")]
    Numerics { residual: f64 },
}

/// An oracle value plus the size of the system (chain states or summation
/// terms) that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactResult {
    pub value: f64,
    pub states: u64,
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// E[CCP(n)] = n * H_n: the sum of the geometric waiting times n/(n-k).
pub fn exact_ccp_mean(n: u64) -> ExactResult {
    assert!(n >= 1, "need at least one coupon");
    let mut h = Kahan::default();
    for k in 1..=n {
        h.add(1.0 / k as f64);
    }
    ExactResult {
        value: n as f64 * h.value(),
        states: n,
    }
}

/// Expected maximum completion time of m independent collectors over n coupons:
/// sum over t of 1 - F(t)^m, where F is the single-collector completion CDF.
/// F(t) is evaluated through the cancellation-free occupancy recurrence
/// P_k(t+1) = P_k(t) k/n + P_{k-1}(t) (n-k+1)/n, which equals the alternating
/// inclusion-exclusion series sum_j (-1)^j C(n,j) (1-j/n)^t.
pub fn exact_max_ccp_mean(n: u32, m: u32) -> Result<ExactResult, ExactError> {
    assert!(n >= 1 && m >= 1);
    if n > 20 {
        return Err(ExactError::Budget {
            reason: format!("n = {n} exceeds the n <= 20 tail-sum budget"),
        });
    }
    let nf = f64::from(n);
    let ratio = 1.0 - 1.0 / nf;
    let mut occupancy = vec![0.0f64; n as usize + 1];
    occupancy[0] = 1.0;
    let mut total = Kahan::default();
    let mut decay = 1.0f64; // (1 - 1/n)^t
    let mut t = 0u64;
    loop {
        let f = occupancy[n as usize];
        total.add(1.0 - f.powi(m as i32));
        // remainder after t: sum_{s>t} 1-F(s)^m <= m n^2 (1-1/n)^{t+1}
        decay *= ratio;
        if f64::from(m) * nf * nf * decay < 1e-12 {
            break;
        }
        let mut next = vec![0.0f64; n as usize + 1];
        for k in 0..=n as usize {
            if occupancy[k] == 0.0 {
                continue;
            }
            next[k] += occupancy[k] * k as f64 / nf;
            if k < n as usize {
                next[k + 1] += occupancy[k] * (nf - k as f64) / nf;
            }
        }
        occupancy = next;
        t += 1;
    }
    Ok(ExactResult {
        value: total.value(),
        states: t + 1,
    })
}

/// Expected draws until all n coupons have at least `ell` copies, solved on the
/// chain whose state counts coupons with exactly c copies for c < ell.
pub fn exact_ccp_l_mean(n: u32, ell: u32) -> Result<ExactResult, ExactError> {
    assert!(n >= 1 && ell >= 1);
    let state_count = binomial_u64(u64::from(n) + u64::from(ell), u64::from(ell));
    if state_count > 1_000_000 {
        return Err(ExactError::Budget {
            reason: format!("{state_count} count-vector states exceed the 10^6 cap"),
        });
    }
    // enumerate states bucketed by remaining progress R = sum c_i (ell - i);
    // every draw that advances moves R down by exactly one
    let ell = ell as usize;
    let max_r = n as usize * ell;
    let mut buckets: Vec<Vec<Vec<u32>>> = vec![Vec::new(); max_r + 1];
    let mut stack = vec![(Vec::<u32>::new(), 0u32)];
    while let Some((prefix, used)) = stack.pop() {
        if prefix.len() == ell {
            let r: usize = prefix
                .iter()
                .enumerate()
                .map(|(i, &c)| c as usize * (ell - i))
                .sum();
            buckets[r].push(prefix);
            continue;
        }
        for c in 0..=(n - used) {
            let mut next = prefix.clone();
            next.push(c);
            stack.push((next, used + c));
        }
    }
    let mut values: std::collections::HashMap<Vec<u32>, f64> =
        std::collections::HashMap::with_capacity(state_count as usize);
    let nf = f64::from(n);
    for bucket in &buckets {
        for state in bucket {
            let k: u32 = state.iter().sum();
            if k == 0 {
                values.insert(state.clone(), 0.0);
                continue;
            }
            let mut acc = nf;
            let mut next = state.clone();
            for i in 0..ell {
                if state[i] == 0 {
                    continue;
                }
                next[i] -= 1;
                if i + 1 < ell {
                    next[i + 1] += 1;
                }
                acc += f64::from(state[i]) * values[&next];
                next[i] += 1;
                if i + 1 < ell {
                    next[i + 1] -= 1;
                }
            }
            values.insert(state.clone(), acc / f64::from(k));
        }
    }
    let mut start = vec![0u32; ell];
    start[0] = n;
    Ok(ExactResult {
        value: values[&start],
        states: state_count,
    })
}

/// Stopping predicate for the synchronous-rounds mark process.
pub enum ProcessRule<'a> {
    /// Every row must be marked by at least m distinct columns.
    ScalarRows { m: u32 },
    /// Every b-row block's mark mask must be a recovering set.
    Blocks { classification: &'a Classification },
}

/// Expected number of rounds of the process where each of `columns` columns
/// marks one uniform row of `[n]` per round, until the stopping rule holds.
/// State is the full set of marked (row, column) pairs; bit c*n + r.
pub fn exact_process_mean(
    n: u32,
    b: u32,
    columns: u32,
    rule: ProcessRule<'_>,
) -> Result<ExactResult, ExactError> {
    assert!(n >= 1 && columns >= 1 && b >= 1);
    let bits = n * columns;
    if bits > 20 {
        return Err(ExactError::Budget {
            reason: format!("{bits} mask bits exceed the 20-bit state budget"),
        });
    }
    if n % b != 0 {
        return Err(ExactError::RuleMismatch {
            reason: format!("block height {b} does not divide n = {n}"),
        });
    }
    match &rule {
        ProcessRule::ScalarRows { m } => {
            if *m < 1 || *m > columns {
                return Err(ExactError::Unsatisfiable {
                    reason: format!("need m in 1..={columns}, got {m}"),
                });
            }
        }
        ProcessRule::Blocks { classification } => {
            if classification.block_rows() != b || classification.survivors() != columns {
                return Err(ExactError::RuleMismatch {
                    reason: format!(
                        "classification is for b={}, {} survivors",
                        classification.block_rows(),
                        classification.survivors()
                    ),
                });
            }
        }
    }
    let states = 1u64 << bits;
    let draws = u64::from(n).checked_pow(columns).unwrap_or(u64::MAX);
    if states.saturating_mul(draws) > 100_000_000 {
        return Err(ExactError::Budget {
            reason: format!("{states} states x {draws} draws exceed the 10^8 transition cap"),
        });
    }

    let absorbing = |s: u32| -> bool {
        match &rule {
            ProcessRule::ScalarRows { m } => (0..n).all(|r| {
                (0..columns).filter(|&c| s >> (c * n + r) & 1 == 1).count() as u32 >= *m
            }),
            ProcessRule::Blocks { classification } => (0..n / b).all(|a| {
                let mut block_mask = 0u32;
                for c in 0..columns {
                    for i in 0..b {
                        if s >> (c * n + a * b + i) & 1 == 1 {
                            block_mask |= 1 << (c * b + i);
                        }
                    }
                }
                classification.is_recovering(block_mask)
            }),
        }
    };

    // one round = each column marks one uniform row; precompute every draw mask
    let mut draw_masks = Vec::with_capacity(draws as usize);
    for d in 0..draws {
        let mut mask = 0u32;
        let mut x = d;
        for c in 0..columns {
            let r = (x % u64::from(n)) as u32;
            x /= u64::from(n);
            mask |= 1 << (c * n + r);
        }
        draw_masks.push(mask);
    }

    let total = states as usize;
    let mut expectation = vec![0.0f64; total];
    let mut is_absorbing = vec![false; total];
    let d_total = draws as f64;
    // popcount-descending order: marks only accumulate
    let mut order: Vec<u32> = (0..total as u32).collect();
    order.sort_by_key(|s| std::cmp::Reverse(s.count_ones()));
    for &s in &order {
        if absorbing(s) {
            is_absorbing[s as usize] = true;
            continue;
        }
        let mut stay = 0u64;
        let mut acc = Kahan::default();
        for &dm in &draw_masks {
            let s2 = s | dm;
            if s2 == s {
                stay += 1;
            } else {
                acc.add(expectation[s2 as usize]);
            }
        }
        debug_assert!(stay < draws, "non-absorbing state must be able to move");
        expectation[s as usize] = (d_total + acc.value()) / (d_total - stay as f64);
    }

    // residual check of E = 1 + (1/D) sum_draws E[next]
    let mut worst = 0.0f64;
    for &s in &order {
        if is_absorbing[s as usize] {
            continue;
        }
        let mut acc = Kahan::default();
        for &dm in &draw_masks {
            acc.add(expectation[(s | dm) as usize]);
        }
        let residual = (expectation[s as usize] - 1.0 - acc.value() / d_total).abs();
        worst = worst.max(residual);
    }
    if worst > 1e-9 {
        return Err(ExactError::Numerics { residual: worst });
    }

    Ok(ExactResult {
        value: expectation[0],
        states,
    })
}

fn binomial_u64(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analyze;
    use crate::code::ArrayCodeSpec;

    #[test]
    fn ccp_mean_values() {
        assert_eq!(exact_ccp_mean(1).value, 1.0);
        assert!((exact_ccp_mean(2).value - 3.0).abs() < 1e-12);
        // 100 * H_100
        assert!((exact_ccp_mean(100).value - 518.737751763962).abs() < 1e-9);
    }

    #[test]
    fn max_ccp_values() {
        assert!((exact_max_ccp_mean(2, 1).unwrap().value - 3.0).abs() < 1e-9);
        assert!((exact_max_ccp_mean(2, 2).unwrap().value - 11.0 / 3.0).abs() < 1e-9);
        for m in 1..5 {
            assert!((exact_max_ccp_mean(1, m).unwrap().value - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            exact_max_ccp_mean(21, 1),
            Err(ExactError::Budget { .. })
        ));
    }

    #[test]
    fn max_ccp_reduces_to_ccp() {
        for n in 1..=20 {
            let max1 = exact_max_ccp_mean(n, 1).unwrap().value;
            let ccp = exact_ccp_mean(u64::from(n)).value;
            assert!((max1 - ccp).abs() < 1e-9, "n={n}: {max1} vs {ccp}");
        }
    }

    /// The literal inclusion-exclusion form of the completion CDF.
    fn max_ccp_inclusion_exclusion(n: u32, m: u32) -> f64 {
        let nf = f64::from(n);
        let mut binom = vec![0.0f64; n as usize + 1];
        for (j, c) in binom.iter_mut().enumerate() {
            let mut v = 1.0;
            for i in 0..j {
                v = v * (nf - i as f64) / (i as f64 + 1.0);
            }
            *c = v;
        }
        let mut pow: Vec<f64> = (0..=n as usize).map(|_| 1.0).collect();
        let mut e = 0.0;
        for t in 0u64.. {
            let mut f = 0.0;
            for j in 0..=n as usize {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                f += sign * binom[j] * pow[j];
            }
            let f = f.clamp(0.0, 1.0);
            e += 1.0 - f.powi(m as i32);
            if f64::from(m) * nf * nf * (1.0 - 1.0 / nf).powi(t as i32 + 1) < 1e-12 {
                break;
            }
            for (j, p) in pow.iter_mut().enumerate() {
                *p *= 1.0 - j as f64 / nf;
            }
        }
        e
    }

    #[test]
    fn max_ccp_matches_inclusion_exclusion() {
        for (n, m) in [(2, 1), (2, 2), (3, 2), (5, 3), (10, 2), (12, 1)] {
            let rec = exact_max_ccp_mean(n, m).unwrap().value;
            let ie = max_ccp_inclusion_exclusion(n, m);
            assert!((rec - ie).abs() < 1e-8, "(n,m)=({n},{m}): {rec} vs {ie}");
        }
    }

    #[test]
    fn ccp_l_values() {
        assert!((exact_ccp_l_mean(3, 1).unwrap().value - 5.5).abs() < 1e-12);
        assert!((exact_ccp_l_mean(1, 2).unwrap().value - 2.0).abs() < 1e-12);
        // 6-state chain: E00=1+E01, E01=1+(E11+E02)/2, E11=1+E12, E02=4, E12=2
        let r = exact_ccp_l_mean(2, 2).unwrap();
        assert!((r.value - 5.5).abs() < 1e-12);
        assert_eq!(r.states, 6);
    }

    #[test]
    fn ccp_l_reduces_to_ccp() {
        for n in [1u32, 2, 5, 17, 40] {
            let l1 = exact_ccp_l_mean(n, 1).unwrap().value;
            let ccp = exact_ccp_mean(u64::from(n)).value;
            assert!((l1 - ccp).abs() < 1e-9);
        }
    }

    #[test]
    fn ccp_l_budget() {
        assert!(matches!(
            exact_ccp_l_mean(10_000, 4),
            Err(ExactError::Budget { .. })
        ));
    }

    #[test]
    fn process_single_row() {
        for m in [1u32, 2, 3] {
            let r = exact_process_mean(1, 1, 3, ProcessRule::ScalarRows { m }).unwrap();
            assert!((r.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn process_equals_independent_collectors() {
        // with m = columns every column must cover every row, so the process
        // is the max of independent coupon collectors
        for (n, m) in [(2u32, 2u32), (2, 3), (3, 2), (3, 3), (4, 2), (4, 4)] {
            let process = exact_process_mean(n, 1, m, ProcessRule::ScalarRows { m })
                .unwrap()
                .value;
            let collectors = exact_max_ccp_mean(n, m).unwrap().value;
            assert!(
                (process - collectors).abs() < 1e-9,
                "(n,m)=({n},{m}): {process} vs {collectors}"
            );
        }
    }

    #[test]
    fn process_two_columns_one_needed() {
        // n=2, m=1, rho=1: 16-state chain, worked value 5/3
        let r = exact_process_mean(2, 1, 2, ProcessRule::ScalarRows { m: 1 }).unwrap();
        assert!((r.value - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.states, 16);
    }

    #[test]
    fn process_block_rule_f3() {
        let code = ArrayCodeSpec::f3_regen_example();
        let analysis = analyze(&code, 1).unwrap();
        let r = exact_process_mean(
            2,
            2,
            3,
            ProcessRule::Blocks {
                classification: &analysis.classification,
            },
        )
        .unwrap();
        // worked rational value 41/21
        assert!((r.value - 41.0 / 21.0).abs() < 1e-12, "got {}", r.value);
    }

    #[test]
    fn process_budget_and_validation() {
        assert!(matches!(
            exact_process_mean(8, 1, 3, ProcessRule::ScalarRows { m: 2 }),
            Err(ExactError::Budget { .. })
        ));
        assert!(matches!(
            exact_process_mean(4, 1, 2, ProcessRule::ScalarRows { m: 3 }),
            Err(ExactError::Unsatisfiable { .. })
        ));
        let code = ArrayCodeSpec::f3_regen_example();
        let analysis = analyze(&code, 1).unwrap();
        assert!(matches!(
            exact_process_mean(
                2,
                1,
                2,
                ProcessRule::Blocks {
                    classification: &analysis.classification
                }
            ),
            Err(ExactError::RuleMismatch { .. })
        ));
    }
}
