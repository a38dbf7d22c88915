//! Concrete quantum realization of the optimal strategy: anticommuting
//! generators, edge observables, central factors, and the shared source
//! state, in dimension `2^floor(m/2)` per side per source.

use crate::encoding::EncodingTable;
use crate::error::{Error, Result};
use crate::operator::{
    self, CMat, CVec, HermitianOperator, identity, kron_all, pauli_x, pauli_y, pauli_z,
};
use num_complex::Complex64;

/// Default cap on the per-side matrix dimension (`2^6` covers m up to 13).
pub const DEFAULT_DIM_CAP: usize = 64;

/// Gate for operator identities (involutivity, vanishing constraints, Gram).
pub const OPERATOR_TOL: f64 = 1e-10;

/// Gate for scalar expectation values.
pub const SCALAR_TOL: f64 = 1e-12;

/// `m` pairwise-anticommuting Hermitian involutions in dimension
/// `2^floor(m/2)`.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    m: usize,
    dim: usize,
    gamma: Vec<HermitianOperator>,
}

impl GeneratorSet {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[HermitianOperator] {
        &self.gamma
    }
}

/// Builds the generator ladder: on `c = floor(m/2)` qubit slots, slot `t`
/// carries the two local involutions X and Y preceded by a Z parity chain on
/// the earlier slots; the `(2c+1)`-th generator is the full parity chain.
pub fn build_generators(m: usize) -> Result<GeneratorSet> {
    build_generators_with_cap(m, DEFAULT_DIM_CAP)
}

pub fn build_generators_with_cap(m: usize, dim_cap: usize) -> Result<GeneratorSet> {
    if m < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 generators, got {m}"
        )));
    }
    let slots = m / 2;
    let dim = 1usize << slots;
    if dim > dim_cap {
        return Err(Error::Resource(format!(
            "generator dimension {dim} exceeds the cap {dim_cap}"
        )));
    }

    let x = pauli_x();
    let y = pauli_y();
    let z = pauli_z();
    let id = identity(2);

    let ladder_term = |local: &CMat, t: usize| -> CMat {
        let mut factors: Vec<&CMat> = Vec::with_capacity(slots);
        for s in 0..slots {
            factors.push(if s < t {
                &z
            } else if s == t {
                local
            } else {
                &id
            });
        }
        kron_all(&factors)
    };

    let mut mats: Vec<CMat> = Vec::with_capacity(2 * slots + 1);
    for t in 0..slots {
        mats.push(ladder_term(&x, t));
        mats.push(ladder_term(&y, t));
    }
    let full_chain: Vec<&CMat> = (0..slots).map(|_| &z).collect();
    mats.push(kron_all(&full_chain));
    mats.truncate(m);

    let gamma = mats
        .into_iter()
        .map(HermitianOperator::new)
        .collect::<Result<Vec<_>>>()?;
    Ok(GeneratorSet { m, dim, gamma })
}

/// The maximally entangled source state of Schmidt rank `2^floor(m/2)`:
/// `floor(m/2)` two-qubit maximally entangled pairs regrouped as one vector.
pub fn build_source_state(m: usize) -> CVec {
    let slots = (m / 2).max(1);
    let d = 1usize << slots;
    let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    CVec::from_fn(d * d, |idx, _| {
        let (a, b) = (idx / d, idx % d);
        if a == b { amp } else { Complex64::new(0.0, 0.0) }
    })
}

/// Edge observables `(1/sqrt(m)) * sum_i S[i][x] gamma_i`, one per input.
///
/// Sign-row orthogonality makes each of them an involution, realizes every
/// predicted anticommutator, and annihilates all constraint combinations.
pub fn build_edge_observables(
    table: &EncodingTable,
    gens: &GeneratorSet,
) -> Result<Vec<HermitianOperator>> {
    if table.m() != gens.m() {
        return Err(Error::DimensionMismatch(format!(
            "table is for m = {}, generators for m = {}",
            table.m(),
            gens.m()
        )));
    }
    let m = table.m();
    let d = gens.dim();
    let scale = Complex64::new(1.0 / (m as f64).sqrt(), 0.0);
    (0..table.n_inputs())
        .map(|x| {
            let mut acc = CMat::zeros(d, d);
            for (i, g) in gens.generators().iter().enumerate() {
                let s = Complex64::new(table.sign(i, x) as f64, 0.0);
                acc += g.matrix() * s;
            }
            HermitianOperator::new(acc * scale)
        })
        .collect()
}

/// Central-party factor for input `i`: the transposed generator with a sign
/// chosen numerically so that its joint expectation with `gamma_i` on the
/// source state is +1.
pub fn build_central_factor(
    gens: &GeneratorSet,
    state: &CVec,
    i: usize,
) -> Result<HermitianOperator> {
    if i >= gens.m() {
        return Err(Error::IndexOutOfRange(format!(
            "central input {i} of {}",
            gens.m()
        )));
    }
    let d = gens.dim();
    if state.len() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "state has length {}, expected {}",
            state.len(),
            d * d
        )));
    }
    let gamma = gens.generators()[i].matrix();
    let transposed = gamma.transpose();
    let psi = operator::state_as_matrix(state, d);
    let e = operator::pair_expectation(gamma, &transposed, &psi).re;
    let sigma = if e >= 0.0 { 1.0 } else { -1.0 };
    HermitianOperator::new(transposed * Complex64::new(sigma, 0.0))
}

/// A full star-network realization: per-party edge observables, per-source
/// central factors, and one shared source state.
#[derive(Debug, Clone)]
pub struct QuantumRealization {
    n: usize,
    m: usize,
    dim: usize,
    edge_observables: Vec<Vec<HermitianOperator>>,
    central_factors: Vec<HermitianOperator>,
    source_state: CVec,
}

impl QuantumRealization {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Per-side matrix dimension of one source.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Observables of edge party `k` (0-based), one per input.
    pub fn edge_observables(&self, k: usize) -> &[HermitianOperator] {
        &self.edge_observables[k]
    }

    /// Per-source factor of the i-th central observable.
    pub fn central_factor(&self, i: usize) -> &HermitianOperator {
        &self.central_factors[i]
    }

    pub fn central_factors(&self) -> &[HermitianOperator] {
        &self.central_factors
    }

    pub fn source_state(&self) -> &CVec {
        &self.source_state
    }

    /// Replaces the shared source state (unit-normalized by the caller).
    pub fn set_source_state(&mut self, state: CVec) -> Result<()> {
        if state.len() != self.dim * self.dim {
            return Err(Error::DimensionMismatch(format!(
                "state has length {}, expected {}",
                state.len(),
                self.dim * self.dim
            )));
        }
        self.source_state = state;
        Ok(())
    }

    /// Conjugates every observable of party `k` by a unitary.
    pub fn conjugate_party(&mut self, k: usize, u: &CMat) {
        for obs in &mut self.edge_observables[k] {
            *obs = obs.conjugated(u);
        }
    }

    /// Conjugates every central factor by a unitary.
    pub fn conjugate_central(&mut self, u: &CMat) {
        for f in &mut self.central_factors {
            *f = f.conjugated(u);
        }
    }

    /// Conjugates the single observable `x` of party `k` by a unitary.
    pub fn conjugate_edge_observable(&mut self, k: usize, x: usize, u: &CMat) {
        self.edge_observables[k][x] = self.edge_observables[k][x].conjugated(u);
    }

    /// Replaces the observable `x` of party `k`.
    pub fn replace_edge_observable(&mut self, k: usize, x: usize, op: HermitianOperator) {
        self.edge_observables[k][x] = op;
    }

    /// Replaces the per-source factor of the i-th central observable.
    pub fn replace_central_factor(&mut self, i: usize, op: HermitianOperator) {
        self.central_factors[i] = op;
    }

    /// Flips the sign of the i-th central factor.
    pub fn negate_central_factor(&mut self, i: usize) {
        let flipped = -self.central_factors[i].matrix().clone();
        self.central_factors[i] =
            HermitianOperator::new(flipped).expect("negation preserves Hermiticity");
    }
}

/// Assembles the canonical optimal realization for `n` edge parties and `m`
/// central inputs. Every party gets the identical observable set and every
/// source the identical maximally entangled state.
pub fn build_realization(n: usize, m: usize) -> Result<QuantumRealization> {
    build_realization_with_cap(n, m, DEFAULT_DIM_CAP)
}

pub fn build_realization_with_cap(n: usize, m: usize, dim_cap: usize) -> Result<QuantumRealization> {
    if n < 1 {
        return Err(Error::Domain("need at least one edge party".into()));
    }
    let table = EncodingTable::new(m)?;
    let gens = build_generators_with_cap(m, dim_cap)?;
    let state = build_source_state(m);
    let observables = build_edge_observables(&table, &gens)?;
    let central = (0..m)
        .map(|i| build_central_factor(&gens, &state, i))
        .collect::<Result<Vec<_>>>()?;

    // parity structure: the per-source factors pairwise anticommute, so the
    // n-fold tensor products satisfy B_i B_j = (-1)^n B_j B_i
    for i in 0..m {
        for j in (i + 1)..m {
            let ac = operator::anticommutator(central[i].matrix(), central[j].matrix());
            let norm = operator::frobenius_norm(&ac);
            if norm > OPERATOR_TOL {
                return Err(Error::Domain(format!(
                    "central factors ({i}, {j}) fail to anticommute (norm {norm:.3e})"
                )));
            }
        }
    }

    Ok(QuantumRealization {
        n,
        m,
        dim: gens.dim(),
        edge_observables: vec![observables; n],
        central_factors: central,
        source_state: state,
    })
}
