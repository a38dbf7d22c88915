//! Brute-force oracle for the classical (n-local) side: enumerates the
//! deterministic edge-party strategies compatible with the constraint family
//! and certifies the bound `2^(m-1)` by exhaustion rather than by the
//! analytic chain.

use crate::encoding::EncodingTable;
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt;

/// Exhaustive enumeration cap: `2^(2^(m-1))` assignments up to m = 5.
pub const EXHAUSTIVE_M_CAP: usize = 5;

/// Cap on the number of strategy tuples scanned by [`classical_delta_max`].
const TUPLE_SCAN_CAP: u128 = 4_000_000;

/// A deterministic +-1 assignment to one edge party's inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategy {
    m: usize,
    assignment: Vec<i8>,
}

impl DeterministicStrategy {
    pub fn new(m: usize, assignment: Vec<i8>) -> Result<Self> {
        if assignment.len() != 1 << (m - 1) {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                1 << (m - 1),
                assignment.len()
            )));
        }
        if assignment.iter().any(|&a| a != 1 && a != -1) {
            return Err(Error::Domain("assignment entries must be +-1".into()));
        }
        Ok(DeterministicStrategy { m, assignment })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn assignment(&self) -> &[i8] {
        &self.assignment
    }

    /// All constraint sums vanish exactly.
    pub fn is_valid(&self, table: &EncodingTable) -> bool {
        (0..table.n_constraints()).all(|l| {
            (0..table.n_inputs())
                .map(|x| table.constraint_sign(l, x) as i64 * self.assignment[x] as i64)
                .sum::<i64>()
                == 0
        })
    }

    /// Signed combination value for central input `i`.
    pub fn combination(&self, table: &EncodingTable, i: usize) -> i64 {
        (0..table.n_inputs())
            .map(|x| table.sign(i, x) as i64 * self.assignment[x] as i64)
            .sum()
    }

    /// Sum of absolute signed combinations over all central inputs.
    pub fn eta(&self, table: &EncodingTable) -> i64 {
        (0..table.m())
            .map(|i| self.combination(table, i).abs())
            .sum()
    }

    /// Key for lexicographic comparison with +1 ordered before -1.
    fn lex_key(&self) -> Vec<u8> {
        self.assignment
            .iter()
            .map(|&a| if a == 1 { 0 } else { 1 })
            .collect()
    }
}

impl fmt::Display for DeterministicStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &a in &self.assignment {
            write!(f, "{}", if a == 1 { '+' } else { '-' })?;
        }
        Ok(())
    }
}

fn strategy_from_mask(m: usize, mask: u64) -> DeterministicStrategy {
    let n = 1 << (m - 1);
    let assignment = (0..n)
        .map(|x| if (mask >> x) & 1 == 0 { 1 } else { -1 })
        .collect();
    DeterministicStrategy { m, assignment }
}

/// Every deterministic strategy satisfying all constraint equations.
///
/// Exhaustive up to m = 5; m = 6 splits the 32 inputs in half and matches
/// partial constraint sums (meet in the middle over 2 * 2^16 candidates).
pub fn enumerate_valid_strategies(table: &EncodingTable) -> Result<Vec<DeterministicStrategy>> {
    let m = table.m();
    if m <= EXHAUSTIVE_M_CAP {
        let n = table.n_inputs();
        let mut out = Vec::new();
        for mask in 0..(1u64 << n) {
            let s = strategy_from_mask(m, mask);
            if s.is_valid(table) {
                out.push(s);
            }
        }
        return Ok(out);
    }
    if m == 6 {
        return Ok(enumerate_m6(table));
    }
    Err(Error::Resource(format!(
        "strategy enumeration supports m <= 6, got {m}"
    )))
}

fn enumerate_m6(table: &EncodingTable) -> Vec<DeterministicStrategy> {
    let n = table.n_inputs();
    let half = n / 2;
    let n_cons = table.n_constraints();

    let partial = |offset: usize, mask: u64| -> Vec<i16> {
        (0..n_cons)
            .map(|l| {
                (0..half)
                    .map(|x| {
                        let a = if (mask >> x) & 1 == 0 { 1i16 } else { -1 };
                        table.constraint_sign(l, offset + x) as i16 * a
                    })
                    .sum()
            })
            .collect()
    };

    let mut right: HashMap<Vec<i16>, Vec<u64>> = HashMap::new();
    for mask in 0..(1u64 << half) {
        right.entry(partial(half, mask)).or_default().push(mask);
    }

    let mut out = Vec::new();
    for mask in 0..(1u64 << half) {
        let key: Vec<i16> = partial(0, mask).iter().map(|v| -v).collect();
        if let Some(matches) = right.get(&key) {
            for &rmask in matches {
                out.push(strategy_from_mask(6, mask | (rmask << half)));
            }
        }
    }
    out.sort_by_key(|s| s.lex_key());
    out
}

/// Maximum of the strategy score over all valid strategies, with the
/// lexicographically smallest witness (+1 ordered before -1).
pub fn eta_max(table: &EncodingTable) -> Result<(i64, DeterministicStrategy)> {
    let strategies = enumerate_valid_strategies(table)?;
    let best = strategies
        .iter()
        .map(|s| s.eta(table))
        .max()
        .ok_or_else(|| Error::Domain("no valid strategies".into()))?;
    let witness = strategies
        .into_iter()
        .filter(|s| s.eta(table) == best)
        .min_by_key(|s| s.lex_key())
        .expect("a maximizer exists");
    Ok((best, witness))
}

/// Score maximum over unconstrained assignments, for contrast with the
/// constrained bound. Exhaustive, so limited to m <= 5.
pub fn unconstrained_eta_max(table: &EncodingTable) -> Result<i64> {
    let m = table.m();
    if m > EXHAUSTIVE_M_CAP {
        return Err(Error::Resource(format!(
            "unconstrained scan supports m <= {EXHAUSTIVE_M_CAP}, got {m}"
        )));
    }
    let n = table.n_inputs();
    Ok((0..(1u64 << n))
        .map(|mask| strategy_from_mask(m, mask).eta(table))
        .max()
        .expect("nonempty scan"))
}

/// Maximum of the inequality value over independent per-party valid
/// strategies. The modulus makes deterministic central assignments
/// immaterial, and the result must coincide with [`eta_max`]; the
/// equivalence is checked, not assumed.
pub fn classical_delta_max(table: &EncodingTable, n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("need at least one edge party".into()));
    }
    let strategies = enumerate_valid_strategies(table)?;
    let v = strategies.len();
    let tuples = (v as u128).pow(n as u32);
    if tuples > TUPLE_SCAN_CAP {
        return Err(Error::Resource(format!(
            "{tuples} strategy tuples exceed the scan cap"
        )));
    }
    let m = table.m();
    let rows: Vec<Vec<i64>> = strategies
        .iter()
        .map(|s| (0..m).map(|i| s.combination(table, i)).collect())
        .collect();

    let mut best = 0.0f64;
    let mut idx = vec![0usize; n];
    loop {
        let delta: f64 = (0..m)
            .map(|i| {
                let prod: f64 = idx.iter().map(|&k| rows[k][i] as f64).product();
                prod.abs().powf(1.0 / n as f64)
            })
            .sum();
        best = best.max(delta);

        let mut pos = n;
        loop {
            if pos == 0 {
                let (eta, _) = eta_max(table)?;
                if (best - eta as f64).abs() > 1e-9 {
                    return Err(Error::Domain(format!(
                        "strategy-tuple maximum {best} disagrees with the single-party bound {eta}"
                    )));
                }
                return Ok(best);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < v {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Checks the n-th-root product inequality
/// `sum_i (prod_k z[i][k])^(1/n) <= prod_k (sum_i z[i][k])^(1/n)`
/// for a nonnegative m-by-n matrix, within 1e-12.
pub fn product_inequality_check(z: &[Vec<f64>]) -> Result<bool> {
    if z.is_empty() || z[0].is_empty() {
        return Err(Error::Domain("empty matrix".into()));
    }
    let n = z[0].len();
    for row in z {
        if row.len() != n {
            return Err(Error::DimensionMismatch("ragged matrix".into()));
        }
        if row.iter().any(|&v| v < 0.0) {
            return Err(Error::Domain("negative entry".into()));
        }
    }
    let lhs: f64 = z
        .iter()
        .map(|row| row.iter().product::<f64>().powf(1.0 / n as f64))
        .sum();
    let rhs: f64 = (0..n)
        .map(|k| z.iter().map(|row| row[k]).sum::<f64>().powf(1.0 / n as f64))
        .product();
    Ok(lhs <= rhs + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn m2_all_assignments_valid() {
        let t = EncodingTable::new(2).unwrap();
        let v = enumerate_valid_strategies(&t).unwrap();
        assert_eq!(v.len(), 4);
        let (eta, _) = eta_max(&t).unwrap();
        assert_eq!(eta, 2);
    }

    #[test]
    fn m3_strategy_census() {
        let t = EncodingTable::new(3).unwrap();
        let v = enumerate_valid_strategies(&t).unwrap();
        // brute force over all 16 assignments of the single constraint
        // a1 - a2 - a3 - a4 = 0 leaves the six sign-row strategies
        assert_eq!(v.len(), 6);
        let printed: Vec<String> = v.iter().map(|s| s.to_string()).collect();
        for expected in ["+++-", "++-+", "+-++", "-+--", "--+-", "---+"] {
            assert!(printed.contains(&expected.to_string()), "{expected}");
        }
        let (eta, witness) = eta_max(&t).unwrap();
        assert_eq!(eta, 4);
        assert_eq!(witness.to_string(), "+++-");
    }

    #[test]
    fn m4_strategy_census() {
        let t = EncodingTable::new(4).unwrap();
        let v = enumerate_valid_strategies(&t).unwrap();
        assert_eq!(v.len(), 8);
        let (eta, witness) = eta_max(&t).unwrap();
        assert_eq!(eta, 8);
        assert_eq!(witness.to_string(), "++++-+++");
    }

    #[test]
    fn m5_strategy_census() {
        let t = EncodingTable::new(5).unwrap();
        let v = enumerate_valid_strategies(&t).unwrap();
        assert_eq!(v.len(), 10);
        let (eta, witness) = eta_max(&t).unwrap();
        assert_eq!(eta, 16);
        assert_eq!(witness.to_string(), "+++++-++++++----");
    }

    #[test]
    fn m6_meet_in_the_middle() {
        let t = EncodingTable::new(6).unwrap();
        let v = enumerate_valid_strategies(&t).unwrap();
        assert_eq!(v.len(), 12);
        assert!(v.iter().all(|s| s.is_valid(&t)));
        let (eta, witness) = eta_max(&t).unwrap();
        assert_eq!(eta, 32);
        // the first sign row is the lexicographically smallest maximizer
        let expected: String = (0..t.n_inputs())
            .map(|x| if t.sign(0, x) == 1 { '+' } else { '-' })
            .collect();
        assert_eq!(witness.to_string(), expected);
    }

    #[test]
    fn m7_is_capped() {
        let t = EncodingTable::new(7).unwrap();
        assert!(matches!(
            enumerate_valid_strategies(&t),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn unconstrained_scores_exceed_the_bound() {
        let expected = [(3, 6), (4, 12), (5, 30)];
        for (m, unc) in expected {
            let t = EncodingTable::new(m).unwrap();
            let free = unconstrained_eta_max(&t).unwrap();
            assert_eq!(free, unc, "m = {m}");
            assert!(free > (1 << (m - 1)), "m = {m}");
        }
        // m = 2 has no constraints, so both scans agree
        let t = EncodingTable::new(2).unwrap();
        assert_eq!(unconstrained_eta_max(&t).unwrap(), 2);
    }

    #[test]
    fn validity_survives_global_sign_flip() {
        for m in 2..=5 {
            let t = EncodingTable::new(m).unwrap();
            for s in enumerate_valid_strategies(&t).unwrap() {
                let flipped = DeterministicStrategy::new(
                    m,
                    s.assignment().iter().map(|&a| -a).collect(),
                )
                .unwrap();
                assert!(flipped.is_valid(&t));
                assert_eq!(flipped.eta(&t), s.eta(&t));
            }
        }
    }

    #[test]
    fn delta_max_matches_single_party_bound() {
        for (n, m) in [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 3), (3, 4)] {
            let t = EncodingTable::new(m).unwrap();
            let d = classical_delta_max(&t, n).unwrap();
            assert!(
                (d - (1u64 << (m - 1)) as f64).abs() < 1e-9,
                "n = {n}, m = {m}: {d}"
            );
        }
    }

    #[test]
    fn identical_strategies_reproduce_their_score() {
        let t = EncodingTable::new(3).unwrap();
        for s in enumerate_valid_strategies(&t).unwrap() {
            // |z^n|^(1/n) = |z| per correlator
            let n = 3;
            let delta: f64 = (0..t.m())
                .map(|i| {
                    (s.combination(&t, i) as f64)
                        .powi(n)
                        .abs()
                        .powf(1.0 / n as f64)
                })
                .sum();
            assert!((delta - s.eta(&t) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn product_inequality_equality_cases() {
        // all entries equal
        let z = vec![vec![0.7; 4]; 3];
        assert!(product_inequality_check(&z).unwrap());
        // n = 1 reduces both sides to the same sum
        let z = vec![vec![1.0], vec![2.0], vec![5.0]];
        assert!(product_inequality_check(&z).unwrap());
    }

    #[test]
    fn product_inequality_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(314159);
        for _ in 0..1000 {
            let m = rng.gen_range(1..=6);
            let n = rng.gen_range(1..=6);
            let z: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.gen_range(0.0..10.0)).collect())
                .collect();
            assert!(product_inequality_check(&z).unwrap());
        }
    }

    #[test]
    fn product_inequality_rejects_negative_entries() {
        let z = vec![vec![1.0, -0.5]];
        assert!(matches!(
            product_inequality_check(&z),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn strategy_constructor_validation() {
        assert!(DeterministicStrategy::new(3, vec![1, -1, 1]).is_err());
        assert!(DeterministicStrategy::new(3, vec![1, -1, 1, 2]).is_err());
        assert!(DeterministicStrategy::new(3, vec![1, -1, 1, -1]).is_ok());
    }
}
