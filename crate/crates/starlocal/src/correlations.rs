//! Correlator and inequality evaluation.
//!
//! The fast path exploits source independence: every correlator factorizes
//! into a product of per-source scalars, so the edge-party count enters only
//! as an exponent. The full multi-source tensor product is built only by
//! [`joint_distribution`], which serves as the independent cross-check.

use crate::algebra::QuantumRealization;
use crate::encoding::EncodingTable;
use crate::error::{Error, Result};
use crate::operator::{self, CMat, CVec};
use num_complex::Complex64;
use serde::Serialize;

/// Cap on the total number of maximally entangled qubit pairs for which the
/// full joint distribution may be materialized (`n * floor(m/2)`).
pub const JOINT_QUBIT_PAIR_CAP: usize = 4;

/// All correlators of one scenario together with the inequality value.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioValue {
    pub n: usize,
    pub m: usize,
    pub correlators: Vec<f64>,
    pub delta: f64,
    pub classical_bound: f64,
    pub quantum_opt: f64,
}

fn ensure_consistent(real: &QuantumRealization, table: &EncodingTable) -> Result<()> {
    if real.m() != table.m() {
        return Err(Error::DimensionMismatch(format!(
            "realization is for m = {}, table for m = {}",
            real.m(),
            table.m()
        )));
    }
    Ok(())
}

/// The signed combination `sum_x S[i][x] A^k_x` of party `k`.
pub fn signed_combination(
    real: &QuantumRealization,
    table: &EncodingTable,
    k: usize,
    i: usize,
) -> Result<CMat> {
    ensure_consistent(real, table)?;
    if k >= real.n() || i >= real.m() {
        return Err(Error::IndexOutOfRange(format!(
            "party {k} of {}, input {i} of {}",
            real.n(),
            real.m()
        )));
    }
    let d = real.dim();
    let mut acc = CMat::zeros(d, d);
    for (x, a) in real.edge_observables(k).iter().enumerate() {
        acc += a.matrix() * Complex64::new(table.sign(i, x) as f64, 0.0);
    }
    Ok(acc)
}

/// The constrained combination `sum_x C[l][x] A^k_x` of party `k`.
pub fn constraint_combination(
    real: &QuantumRealization,
    table: &EncodingTable,
    k: usize,
    l: usize,
) -> Result<CMat> {
    ensure_consistent(real, table)?;
    if k >= real.n() || l >= table.n_constraints() {
        return Err(Error::IndexOutOfRange(format!(
            "party {k} of {}, constraint {l} of {}",
            real.n(),
            table.n_constraints()
        )));
    }
    let d = real.dim();
    let mut acc = CMat::zeros(d, d);
    for (x, a) in real.edge_observables(k).iter().enumerate() {
        acc += a.matrix() * Complex64::new(table.constraint_sign(l, x) as f64, 0.0);
    }
    Ok(acc)
}

/// Per-source scalar `<psi| (sum_x S[i][x] A^k_x) (x) b_i |psi>`.
pub fn per_source_term(
    real: &QuantumRealization,
    table: &EncodingTable,
    k: usize,
    i: usize,
) -> Result<f64> {
    let combo = signed_combination(real, table, k, i)?;
    let psi = operator::state_as_matrix(real.source_state(), real.dim());
    let e = operator::pair_expectation(&combo, real.central_factor(i).matrix(), &psi);
    Ok(e.re)
}

/// The i-th correlator, as the product of its per-source factors.
pub fn correlator(real: &QuantumRealization, table: &EncodingTable, i: usize) -> Result<f64> {
    let mut prod = 1.0;
    for k in 0..real.n() {
        prod *= per_source_term(real, table, k, i)?;
    }
    Ok(prod)
}

/// All correlators and the inequality value `sum_i |I_i|^(1/n)`.
pub fn delta_value(real: &QuantumRealization, table: &EncodingTable) -> Result<ScenarioValue> {
    ensure_consistent(real, table)?;
    let n = real.n();
    let m = real.m();
    let correlators: Vec<f64> = (0..m)
        .map(|i| correlator(real, table, i))
        .collect::<Result<_>>()?;
    let delta = correlators
        .iter()
        .map(|c| c.abs().powf(1.0 / n as f64))
        .sum();
    Ok(ScenarioValue {
        n,
        m,
        correlators,
        delta,
        classical_bound: (1u64 << (m - 1)) as f64,
        quantum_opt: (1u64 << (m - 1)) as f64 * (m as f64).sqrt(),
    })
}

/// Two-party Bell value of source `k`: the signed sum over all central
/// inputs of the per-source terms.
pub fn bipartite_bell_value(
    real: &QuantumRealization,
    table: &EncodingTable,
    k: usize,
) -> Result<f64> {
    ensure_consistent(real, table)?;
    if k >= real.n() {
        return Err(Error::IndexOutOfRange(format!(
            "party {k} of {}",
            real.n()
        )));
    }
    let mut sum = 0.0;
    for i in 0..real.m() {
        sum += per_source_term(real, table, k, i)?;
    }
    Ok(sum)
}

/// The full joint outcome distribution over every input tuple.
#[derive(Debug, Clone, Serialize)]
pub struct JointDistribution {
    pub n: usize,
    pub m: usize,
    pub n_inputs: usize,
    /// Probabilities indexed by (edge input tuple, central input, edge
    /// outcome tuple, central outcome), all row-major with party 0 slowest.
    pub probs: Vec<f64>,
}

impl JointDistribution {
    fn edge_index(&self, xs: &[usize]) -> usize {
        xs.iter().fold(0, |acc, &x| acc * self.n_inputs + x)
    }

    fn outcome_index(&self, outs: &[u8]) -> usize {
        outs.iter().fold(0, |acc, &a| acc * 2 + a as usize)
    }

    /// `P(outs, b | xs, i)`.
    pub fn prob(&self, xs: &[usize], i: usize, outs: &[u8], b: u8) -> f64 {
        let slice = self.edge_index(xs) * self.m + i;
        let outcome = self.outcome_index(outs) * 2 + b as usize;
        self.probs[slice * (1 << (self.n + 1)) + outcome]
    }

    /// Sum of each conditional slice; all entries must be 1.
    pub fn slice_sums(&self) -> Vec<f64> {
        let per_slice = 1usize << (self.n + 1);
        self.probs
            .chunks(per_slice)
            .map(|c| c.iter().sum())
            .collect()
    }
}

/// Builds the joint distribution on the explicit `2n`-slot tensor product,
/// using outcome projectors `(1 +- A)/2` and `(1 +- B_i)/2`.
pub fn joint_distribution(
    real: &QuantumRealization,
    table: &EncodingTable,
) -> Result<JointDistribution> {
    joint_distribution_with_cap(real, table, JOINT_QUBIT_PAIR_CAP)
}

pub fn joint_distribution_with_cap(
    real: &QuantumRealization,
    table: &EncodingTable,
    qubit_pair_cap: usize,
) -> Result<JointDistribution> {
    ensure_consistent(real, table)?;
    let n = real.n();
    let m = real.m();
    let d = real.dim();
    let pairs = n * (m / 2).max(1);
    if pairs > qubit_pair_cap {
        return Err(Error::Resource(format!(
            "joint distribution needs {pairs} qubit pairs, cap is {qubit_pair_cap}"
        )));
    }

    // full state: product of the identical source states, slots A1 B1 A2 B2 ...
    let mut full_state: CVec = real.source_state().clone();
    for _ in 1..n {
        full_state = full_state.kronecker(real.source_state());
    }

    let id = operator::identity(d);
    let n_inputs = table.n_inputs();

    // per-(party, input, outcome) edge projectors
    let edge_proj: Vec<Vec<[CMat; 2]>> = (0..n)
        .map(|k| {
            real.edge_observables(k)
                .iter()
                .map(|obs| {
                    let plus = (&id + obs.matrix()) * Complex64::new(0.5, 0.0);
                    let minus = (&id - obs.matrix()) * Complex64::new(0.5, 0.0);
                    [plus, minus]
                })
                .collect()
        })
        .collect();

    // (1 +- B_i)/2 applied to the full state, for each central input
    let mut central_vecs = Vec::with_capacity(m);
    for i in 0..m {
        let slot_b = real.central_factor(i).matrix();
        let mut factors: Vec<&CMat> = Vec::with_capacity(2 * n);
        for _ in 0..n {
            factors.push(&id);
            factors.push(slot_b);
        }
        let full_b = operator::kron_all(&factors);
        let applied = &full_b * &full_state;
        let plus = (&full_state + &applied) * Complex64::new(0.5, 0.0);
        let minus = (&full_state - &applied) * Complex64::new(0.5, 0.0);
        central_vecs.push([plus, minus]);
    }

    let input_tuples = n_inputs.pow(n as u32);
    let per_slice = 1usize << (n + 1);
    let mut probs = vec![0.0; input_tuples * m * per_slice];

    for x_flat in 0..input_tuples {
        let mut xs = vec![0usize; n];
        let mut rem = x_flat;
        for pos in (0..n).rev() {
            xs[pos] = rem % n_inputs;
            rem /= n_inputs;
        }
        for a_idx in 0..(1usize << n) {
            // edge projector on the full space for this outcome tuple
            let mut factors: Vec<&CMat> = Vec::with_capacity(2 * n);
            for (k, &x_k) in xs.iter().enumerate() {
                let a_k = (a_idx >> (n - 1 - k)) & 1;
                factors.push(&edge_proj[k][x_k][a_k]);
                factors.push(&id);
            }
            let proj = operator::kron_all(&factors);
            let u = &proj * &full_state;
            for (i, vecs) in central_vecs.iter().enumerate() {
                for (b, vec_b) in vecs.iter().enumerate() {
                    let amp = u.dotc(vec_b);
                    let slice = x_flat * m + i;
                    probs[slice * per_slice + a_idx * 2 + b] = amp.re;
                }
            }
        }
    }

    Ok(JointDistribution {
        n,
        m,
        n_inputs,
        probs,
    })
}

/// The i-th correlator recomputed from the joint distribution: the
/// independent full-tensor route.
pub fn correlator_from_joint(dist: &JointDistribution, table: &EncodingTable, i: usize) -> f64 {
    let n = dist.n;
    let n_inputs = dist.n_inputs;
    let mut total = 0.0;
    for x_flat in 0..n_inputs.pow(n as u32) {
        let mut xs = vec![0usize; n];
        let mut rem = x_flat;
        for pos in (0..n).rev() {
            xs[pos] = rem % n_inputs;
            rem /= n_inputs;
        }
        let sign: f64 = xs.iter().map(|&x| table.sign(i, x) as f64).product();
        let mut corr = 0.0;
        for a_idx in 0..(1usize << n) {
            let parity_a = (a_idx.count_ones() % 2) as i32;
            let outs: Vec<u8> = (0..n).map(|k| ((a_idx >> (n - 1 - k)) & 1) as u8).collect();
            for b in 0..2u8 {
                let p = dist.prob(&xs, i, &outs, b);
                let s = if (parity_a + b as i32) % 2 == 0 { 1.0 } else { -1.0 };
                corr += s * p;
            }
        }
        total += sign * corr;
    }
    total
}

/// Residuals of every probability-level balance equation: one value per
/// (party, constraint, central input, other-party inputs, other-party
/// outcomes, central outcome).
pub fn check_probability_constraints(
    dist: &JointDistribution,
    table: &EncodingTable,
) -> Vec<f64> {
    let n = dist.n;
    let n_inputs = dist.n_inputs;
    let mut residuals = Vec::new();
    let others = n - 1;
    let other_input_tuples = n_inputs.pow(others as u32);
    for k in 0..n {
        for l in 0..table.n_constraints() {
            for i in 0..dist.m {
                for other_x in 0..other_input_tuples {
                    // expand the other parties' inputs around position k
                    let mut xs = vec![0usize; n];
                    let mut rem = other_x;
                    for pos in (0..n).rev() {
                        if pos == k {
                            continue;
                        }
                        xs[pos] = rem % n_inputs;
                        rem /= n_inputs;
                    }
                    for other_a in 0..(1usize << others) {
                        let mut outs = vec![0u8; n];
                        let mut rem = other_a;
                        for pos in (0..n).rev() {
                            if pos == k {
                                continue;
                            }
                            outs[pos] = (rem & 1) as u8;
                            rem >>= 1;
                        }
                        for b in 0..2u8 {
                            let mut balance = 0.0;
                            for x_k in 0..n_inputs {
                                xs[k] = x_k;
                                let c = table.constraint_sign(l, x_k) as f64;
                                for a_k in 0..2u8 {
                                    outs[k] = a_k;
                                    let s = if a_k == 0 { 1.0 } else { -1.0 };
                                    balance += c * s * dist.prob(&xs, i, &outs, b);
                                }
                            }
                            residuals.push(balance.abs());
                        }
                    }
                }
            }
        }
    }
    residuals
}

/// Inequality value when every source is mixed with white noise at
/// visibility `v`.
pub fn werner_delta(
    real: &QuantumRealization,
    table: &EncodingTable,
    v: f64,
) -> Result<ScenarioValue> {
    ensure_consistent(real, table)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("visibility {v} outside [0, 1]")));
    }
    let n = real.n();
    let m = real.m();
    let d = real.dim();
    let dd = (d * d) as f64;
    let psi = operator::state_as_matrix(real.source_state(), d);
    let mut correlators = Vec::with_capacity(m);
    for i in 0..m {
        let b = real.central_factor(i).matrix();
        let mut prod = 1.0;
        for k in 0..n {
            let combo = signed_combination(real, table, k, i)?;
            let pure = operator::pair_expectation(&combo, b, &psi).re;
            let noise = (combo.trace() * b.trace()).re / dd;
            prod *= v * pure + (1.0 - v) * noise;
        }
        correlators.push(prod);
    }
    let delta = correlators
        .iter()
        .map(|c| c.abs().powf(1.0 / n as f64))
        .sum();
    Ok(ScenarioValue {
        n,
        m,
        correlators,
        delta,
        classical_bound: (1u64 << (m - 1)) as f64,
        quantum_opt: (1u64 << (m - 1)) as f64 * (m as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_realization, QuantumRealization};
    use crate::operator::{random_involution, random_unitary, HermitianOperator};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn optimal(n: usize, m: usize) -> (QuantumRealization, EncodingTable) {
        (
            build_realization(n, m).unwrap(),
            EncodingTable::new(m).unwrap(),
        )
    }

    fn opt_term(m: usize) -> f64 {
        (1u64 << (m - 1)) as f64 / (m as f64).sqrt()
    }

    #[test]
    fn optimal_correlators_factorize() {
        for (n, m) in [(1, 2), (2, 3), (3, 4), (1, 5)] {
            let (real, table) = optimal(n, m);
            let expect = opt_term(m).powi(n as i32);
            for i in 0..m {
                let c = correlator(&real, &table, i).unwrap();
                assert!((c - expect).abs() < 1e-9, "n = {n}, m = {m}, i = {i}: {c}");
            }
        }
    }

    #[test]
    fn n2_m3_correlator_is_sixteen_thirds() {
        let (real, table) = optimal(2, 3);
        let c = correlator(&real, &table, 0).unwrap();
        assert!((c - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn n1_m2_correlator_is_sqrt2() {
        let (real, table) = optimal(1, 2);
        for i in 0..2 {
            let c = correlator(&real, &table, i).unwrap();
            assert!((c - 2f64.sqrt()).abs() < 1e-12);
        }
        let sv = delta_value(&real, &table).unwrap();
        assert!((sv.delta - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(sv.classical_bound, 2.0);
    }

    #[test]
    fn optimal_delta_values() {
        let cases = [(3, 4.0 * 3f64.sqrt()), (4, 16.0), (5, 16.0 * 5f64.sqrt())];
        for n in 1..=3 {
            for &(m, expect) in &cases {
                let (real, table) = optimal(n, m);
                let sv = delta_value(&real, &table).unwrap();
                assert!(
                    (sv.delta - expect).abs() < 1e-9,
                    "n = {n}, m = {m}: {}",
                    sv.delta
                );
                assert!((sv.quantum_opt - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn central_sign_flip_preserves_magnitude() {
        let (mut real, table) = optimal(2, 3);
        let before = correlator(&real, &table, 1).unwrap();
        let delta_before = delta_value(&real, &table).unwrap().delta;
        real.negate_central_factor(1);
        let after = correlator(&real, &table, 1).unwrap();
        let delta_after = delta_value(&real, &table).unwrap().delta;
        // n = 2: the per-source sign enters twice
        assert!((after - before).abs() < 1e-12);
        assert!((delta_after - delta_before).abs() < 1e-12);

        let (mut real, table) = optimal(1, 3);
        let before = correlator(&real, &table, 2).unwrap();
        real.negate_central_factor(2);
        let after = correlator(&real, &table, 2).unwrap();
        assert!((after + before).abs() < 1e-12);
    }

    #[test]
    fn bipartite_bell_optimum() {
        for m in 2..=5 {
            let (real, table) = optimal(2, m);
            for k in 0..2 {
                let b = bipartite_bell_value(&real, &table, k).unwrap();
                let expect = (1u64 << (m - 1)) as f64 * (m as f64).sqrt();
                assert!((b - expect).abs() < 1e-9, "m = {m}, k = {k}: {b}");
            }
        }
    }

    #[test]
    fn joint_distribution_is_normalized() {
        for (n, m) in [(1, 2), (1, 3), (2, 3), (2, 4)] {
            let (real, table) = optimal(n, m);
            let dist = joint_distribution(&real, &table).unwrap();
            for (s, sum) in dist.slice_sums().iter().enumerate() {
                assert!((sum - 1.0).abs() < 1e-10, "n = {n}, m = {m}, slice {s}");
            }
            assert!(dist.probs.iter().all(|&p| (-1e-12..=1.0 + 1e-12).contains(&p)));
        }
        let (real, table) = optimal(1, 2);
        let dist = joint_distribution(&real, &table).unwrap();
        let v = serde_json::to_value(&dist).unwrap();
        assert_eq!(v["n_inputs"], 2);
        assert_eq!(v["probs"].as_array().unwrap().len(), dist.probs.len());
    }

    #[test]
    fn joint_distribution_cap() {
        let (real, table) = optimal(3, 4);
        assert!(matches!(
            joint_distribution(&real, &table),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn factorized_matches_full_tensor() {
        for (n, m) in [(1, 2), (1, 3), (1, 4), (2, 2), (2, 3)] {
            let (real, table) = optimal(n, m);
            let dist = joint_distribution(&real, &table).unwrap();
            for i in 0..m {
                let fast = correlator(&real, &table, i).unwrap();
                let slow = correlator_from_joint(&dist, &table, i);
                assert!(
                    (fast - slow).abs() < 1e-10,
                    "n = {n}, m = {m}, i = {i}: {fast} vs {slow}"
                );
            }
        }
    }

    #[test]
    fn factorized_matches_full_tensor_for_distinct_parties() {
        use crate::verification::rotated_realization;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (real, table) = optimal(2, 3);
        let perturbed = rotated_realization(&real, 0, 2, 0.4, &mut rng);
        let perturbed = rotated_realization(&perturbed, 1, 0, 0.9, &mut rng);
        let dist = joint_distribution(&perturbed, &table).unwrap();
        for i in 0..3 {
            let fast = correlator(&perturbed, &table, i).unwrap();
            let slow = correlator_from_joint(&dist, &table, i);
            assert!((fast - slow).abs() < 1e-10, "i = {i}: {fast} vs {slow}");
        }
    }

    #[test]
    fn probability_balances_hold_at_optimum() {
        for (n, m) in [(1, 3), (2, 3), (1, 4)] {
            let (real, table) = optimal(n, m);
            let dist = joint_distribution(&real, &table).unwrap();
            let residuals = check_probability_constraints(&dist, &table);
            assert!(!residuals.is_empty());
            let max = residuals.iter().cloned().fold(0.0, f64::max);
            assert!(max <= 1e-10, "n = {n}, m = {m}: {max}");
        }
    }

    #[test]
    fn uniform_distribution_balances_by_symmetry() {
        let n = 1usize;
        let m = 3usize;
        let n_inputs = 4usize;
        let per_slice = 1usize << (n + 1);
        let slices = n_inputs.pow(n as u32) * m;
        let dist = JointDistribution {
            n,
            m,
            n_inputs,
            probs: vec![1.0 / per_slice as f64; slices * per_slice],
        };
        let table = EncodingTable::new(m).unwrap();
        let residuals = check_probability_constraints(&dist, &table);
        assert!(residuals.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn random_involutions_break_the_balances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let (mut real, table) = optimal(1, 3);
        for x in 0..table.n_inputs() {
            let op = HermitianOperator::new(random_involution(real.dim(), &mut rng)).unwrap();
            real.replace_edge_observable(0, x, op);
        }
        let dist = joint_distribution(&real, &table).unwrap();
        let max = check_probability_constraints(&dist, &table)
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        assert!(max > 0.01, "negative control too small: {max}");
    }

    #[test]
    fn werner_scaling() {
        for m in 2..=4 {
            let (real, table) = optimal(2, m);
            let full = werner_delta(&real, &table, 1.0).unwrap().delta;
            assert!((full - (1u64 << (m - 1)) as f64 * (m as f64).sqrt()).abs() < 1e-9);
            let none = werner_delta(&real, &table, 0.0).unwrap().delta;
            assert!(none.abs() < 1e-12);
            let critical = werner_delta(&real, &table, 1.0 / (m as f64).sqrt())
                .unwrap()
                .delta;
            assert!(
                (critical - (1u64 << (m - 1)) as f64).abs() < 1e-9,
                "m = {m}: {critical}"
            );
            // linearity at sampled visibilities
            for step in 0..=10 {
                let v = step as f64 / 10.0;
                let dv = werner_delta(&real, &table, v).unwrap().delta;
                assert!((dv - v * full).abs() < 1e-9, "m = {m}, v = {v}");
            }
        }
    }

    #[test]
    fn werner_rejects_bad_visibility() {
        let (real, table) = optimal(1, 2);
        assert!(werner_delta(&real, &table, -0.1).is_err());
        assert!(werner_delta(&real, &table, 1.1).is_err());
    }

    #[test]
    fn delta_invariant_under_joint_unitary_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let (mut real, table) = optimal(2, 3);
        let before = delta_value(&real, &table).unwrap().delta;

        // same unitary on every edge party together with the edge side of the
        // shared source state
        let u = random_unitary(real.dim(), &mut rng);
        real.conjugate_party(0, &u);
        real.conjugate_party(1, &u);
        let d = real.dim();
        let psi = operator::state_as_matrix(real.source_state(), d);
        let rotated = &u * psi;
        let new_state = CVec::from_fn(d * d, |idx, _| rotated[(idx / d, idx % d)]);
        real.set_source_state(new_state).unwrap();
        let after = delta_value(&real, &table).unwrap().delta;
        assert!((before - after).abs() < 1e-9);

        // and a central-side conjugation
        let w = random_unitary(real.dim(), &mut rng);
        real.conjugate_central(&w);
        let psi = operator::state_as_matrix(real.source_state(), d);
        let rotated = psi * w.transpose();
        let new_state = CVec::from_fn(d * d, |idx, _| rotated[(idx / d, idx % d)]);
        real.set_source_state(new_state).unwrap();
        let after2 = delta_value(&real, &table).unwrap().delta;
        assert!((before - after2).abs() < 1e-9);
    }

    #[test]
    fn mismatched_table_is_rejected() {
        let real = build_realization(1, 3).unwrap();
        let table = EncodingTable::new(4).unwrap();
        assert!(matches!(
            correlator(&real, &table, 0),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
