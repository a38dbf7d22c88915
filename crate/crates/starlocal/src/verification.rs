//! Optimality certificates: residuals of the sum-of-squares decomposition,
//! Gram and constraint self-tests, norm checks, and the correspondence with
//! the per-source two-party Bell values.

use crate::algebra::QuantumRealization;
use crate::correlations::{
    bipartite_bell_value, constraint_combination, delta_value, signed_combination,
};
use crate::encoding::EncodingTable;
use crate::error::{Error, Result};
use crate::operator::{
    self, anticommutator, identity, max_abs_entry, random_state, random_unitary,
    rotation_in_random_plane,
};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

/// Gate for operator identities (Gram entries, vanishing constraints,
/// SOS residuals, norm targets).
pub const OPERATOR_TOL: f64 = 1e-10;

/// Gate for scalar expectations.
pub const SCALAR_TOL: f64 = 1e-12;

/// Gate for aggregate optimum figures (inequality value, Bell values,
/// constraint budget, correspondence gap, certificate value).
pub const OPTIMUM_TOL: f64 = 1e-9;

/// Minimal admissible norm of a signed combination applied to the state.
const DEGENERACY_FLOOR: f64 = 1e-9;

/// Norm of the i-th signed combination of party `k` applied to its source
/// state.
pub fn omega_norm(
    real: &QuantumRealization,
    table: &EncodingTable,
    i: usize,
    k: usize,
) -> Result<f64> {
    let combo = signed_combination(real, table, k, i)?;
    let psi = operator::state_as_matrix(real.source_state(), real.dim());
    Ok(operator::half_applied_norm(&combo, &psi))
}

/// Per-source data entering the residual of central input `i`: the norm of
/// the combination on the state and the normalized misalignment
/// `1 - <combination (x) central>/norm`.
fn source_alignment(
    real: &QuantumRealization,
    table: &EncodingTable,
    i: usize,
    k: usize,
) -> Result<(f64, f64)> {
    let combo = signed_combination(real, table, k, i)?;
    let psi = operator::state_as_matrix(real.source_state(), real.dim());
    let applied = &combo * &psi;
    let omega = applied.norm();
    if omega < DEGENERACY_FLOOR {
        return Err(Error::DegenerateRealization(format!(
            "combination {i} of party {k} annihilates the source state"
        )));
    }
    // 1 - e is recovered from the difference vector rather than from the
    // inner product, so residuals at the optimum resolve below 1e-10
    let central = psi * real.central_factor(i).matrix().transpose();
    let diff = &applied - central * Complex64::new(omega, 0.0);
    let misalignment = diff.norm_squared() / (2.0 * omega * omega);
    Ok((omega, misalignment))
}

/// Residual norm of the i-th certificate term: the distance between the
/// normalized product of signed combinations and the central observable,
/// both applied to the joint state. Zero exactly at the optimum.
pub fn sos_residual(real: &QuantumRealization, table: &EncodingTable, i: usize) -> Result<f64> {
    let mut shortfall = 0.0; // 1 - prod_k (1 - misalignment_k), accumulated stably
    for k in 0..real.n() {
        let (_, miss) = source_alignment(real, table, i, k)?;
        shortfall = shortfall + miss - shortfall * miss;
    }
    Ok((2.0 * shortfall).max(0.0).sqrt())
}

/// Certificate value: the weighted sum of squared residuals, with weights
/// `(prod_k omega_k)^(1/n) / 2`. Nonnegative by construction; zero exactly
/// at the optimum.
pub fn gamma_value(real: &QuantumRealization, table: &EncodingTable) -> Result<f64> {
    let n = real.n();
    let mut total = 0.0;
    for i in 0..real.m() {
        let mut omega_product = 1.0;
        let mut shortfall = 0.0;
        for k in 0..n {
            let (omega, miss) = source_alignment(real, table, i, k)?;
            omega_product *= omega;
            shortfall = shortfall + miss - shortfall * miss;
        }
        let weight = omega_product.powf(1.0 / n as f64) / 2.0;
        total += weight * 2.0 * shortfall; // residual^2 = 2 * shortfall
    }
    Ok(total)
}

/// Constraint budget of party `k`: the predicted maximum
/// `(2^(m-1) - m) * 2^(m-1)` minus the squared norms of all constrained
/// combinations applied to the state. Maximal exactly when every
/// constraint operator annihilates the state.
pub fn delta_m_value(real: &QuantumRealization, table: &EncodingTable, k: usize) -> Result<f64> {
    if k >= real.n() {
        return Err(Error::IndexOutOfRange(format!(
            "party {k} of {}",
            real.n()
        )));
    }
    let m = real.m();
    let psi = operator::state_as_matrix(real.source_state(), real.dim());
    let predicted = delta_m_predicted(m);
    let mut spent = 0.0;
    for l in 0..table.n_constraints() {
        let combo = constraint_combination(real, table, k, l)?;
        let norm = operator::half_applied_norm(&combo, &psi);
        spent += norm * norm;
    }
    Ok(predicted - spent)
}

/// `(2^(m-1) - m) * 2^(m-1)`.
pub fn delta_m_predicted(m: usize) -> f64 {
    let half = (1u64 << (m - 1)) as f64;
    (half - m as f64) * half
}

/// Minimum certificate value over the given realization and `trials`
/// randomized ones (fresh unitaries on every party and the central factors,
/// fresh source state). Every evaluation is a weighted sum of squares, so
/// the minimum is a positivity probe.
pub fn gamma_probe<R: Rng>(
    real: &QuantumRealization,
    table: &EncodingTable,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut min = gamma_value(real, table)?;
    for _ in 0..trials {
        let perturbed = randomized_realization(real, rng);
        let g = gamma_value(&perturbed, table)?;
        min = min.min(g);
    }
    Ok(min)
}

/// Fresh realization with the same shape: every party conjugated by its own
/// random unitary, central factors conjugated by another, and a random
/// source state.
pub fn randomized_realization<R: Rng>(
    real: &QuantumRealization,
    rng: &mut R,
) -> QuantumRealization {
    let mut out = real.clone();
    let d = real.dim();
    for k in 0..real.n() {
        let u = random_unitary(d, rng);
        out.conjugate_party(k, &u);
    }
    let w = random_unitary(d, rng);
    out.conjugate_central(&w);
    let state = random_state(d * d, rng);
    out.set_source_state(state).expect("dimensions preserved");
    out
}

/// Copy of the realization with the single observable `x` of party `k`
/// rotated by `theta` in a random 2-plane.
pub fn rotated_realization<R: Rng>(
    real: &QuantumRealization,
    k: usize,
    x: usize,
    theta: f64,
    rng: &mut R,
) -> QuantumRealization {
    let mut out = real.clone();
    let rot = rotation_in_random_plane(real.dim(), theta, rng);
    out.conjugate_edge_observable(k, x, &rot);
    out
}

/// Tolerances echoed into every serialized report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub operator_identity: f64,
    pub scalar_expectation: f64,
    pub optimum: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            operator_identity: OPERATOR_TOL,
            scalar_expectation: SCALAR_TOL,
            optimum: OPTIMUM_TOL,
        }
    }
}

/// Aggregated self-test of a realization against every certificate the
/// optimum must satisfy.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub quantum_opt: f64,
    pub classical_bound: f64,
    pub correlators: Vec<f64>,
    pub sos_residuals: Vec<f64>,
    pub gamma_value: f64,
    pub gram_error: f64,
    pub constraint_error: f64,
    /// Per central input: geometric mean over parties of the combination
    /// norms; equals `2^(m-1)/sqrt(m)` at the optimum.
    pub omega: Vec<f64>,
    /// Worst case over parties of the constraint budget.
    pub delta_m: f64,
    pub delta_m_predicted: f64,
    pub bell_values: Vec<f64>,
    pub correspondence_gap: f64,
    pub tolerances: Tolerances,
}

impl VerificationReport {
    /// Names of every check exceeding its tolerance at the optimum.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let t = &self.tolerances;
        if (self.delta - self.quantum_opt).abs() > t.optimum {
            out.push(format!(
                "delta {} differs from the optimum {}",
                self.delta, self.quantum_opt
            ));
        }
        if self.gram_error > t.operator_identity {
            out.push(format!("gram error {}", self.gram_error));
        }
        if self.constraint_error > t.operator_identity {
            out.push(format!("constraint error {}", self.constraint_error));
        }
        for (i, r) in self.sos_residuals.iter().enumerate() {
            if *r > t.operator_identity {
                out.push(format!("sos residual {i} = {r}"));
            }
        }
        if self.gamma_value < -t.optimum || self.gamma_value > t.optimum {
            out.push(format!("certificate value {}", self.gamma_value));
        }
        let omega_target = self.classical_bound / (self.m as f64).sqrt();
        for (i, w) in self.omega.iter().enumerate() {
            if (w - omega_target).abs() > t.operator_identity {
                out.push(format!("omega {i} = {w}, expected {omega_target}"));
            }
        }
        if (self.delta_m - self.delta_m_predicted).abs() > t.optimum {
            out.push(format!(
                "constraint budget {} differs from {}",
                self.delta_m, self.delta_m_predicted
            ));
        }
        let bell_target = self.classical_bound * (self.m as f64).sqrt();
        for (k, b) in self.bell_values.iter().enumerate() {
            if (b - bell_target).abs() > t.optimum {
                out.push(format!("bell value of party {k} = {b}"));
            }
        }
        if self.correspondence_gap.abs() > t.optimum {
            out.push(format!("correspondence gap {}", self.correspondence_gap));
        }
        out
    }

    pub fn is_optimal(&self) -> bool {
        self.failures().is_empty()
    }
}

/// Runs the full certificate battery.
pub fn self_test_report(
    real: &QuantumRealization,
    table: &EncodingTable,
) -> Result<VerificationReport> {
    let n = real.n();
    let m = real.m();
    let d = real.dim();
    let scenario = delta_value(real, table)?;

    let mut gram_error = 0.0f64;
    for k in 0..n {
        let obs = real.edge_observables(k);
        for j in 0..obs.len() {
            for j2 in j..obs.len() {
                let predicted = table.predicted_gram(j, j2)?.as_f64();
                let diff = anticommutator(obs[j].matrix(), obs[j2].matrix())
                    - identity(d) * Complex64::new(predicted, 0.0);
                gram_error = gram_error.max(max_abs_entry(&diff));
            }
        }
    }

    let mut constraint_error = 0.0f64;
    for k in 0..n {
        for l in 0..table.n_constraints() {
            let combo = constraint_combination(real, table, k, l)?;
            constraint_error = constraint_error.max(operator::frobenius_norm(&combo));
        }
    }

    let sos_residuals: Vec<f64> = (0..m)
        .map(|i| sos_residual(real, table, i))
        .collect::<Result<_>>()?;
    let gamma = gamma_value(real, table)?;

    let omega: Vec<f64> = (0..m)
        .map(|i| {
            let mut prod = 1.0;
            for k in 0..n {
                prod *= omega_norm(real, table, i, k)?;
            }
            Ok(prod.powf(1.0 / n as f64))
        })
        .collect::<Result<_>>()?;

    let delta_m = (0..n)
        .map(|k| delta_m_value(real, table, k))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);

    let bell_values: Vec<f64> = (0..n)
        .map(|k| bipartite_bell_value(real, table, k))
        .collect::<Result<_>>()?;
    let bell_product: f64 = bell_values.iter().product();
    let bell_geometric = bell_product.signum() * bell_product.abs().powf(1.0 / n as f64);
    let correspondence_gap = bell_geometric - scenario.delta;

    Ok(VerificationReport {
        n,
        m,
        delta: scenario.delta,
        quantum_opt: scenario.quantum_opt,
        classical_bound: scenario.classical_bound,
        correlators: scenario.correlators,
        sos_residuals,
        gamma_value: gamma,
        gram_error,
        constraint_error,
        omega,
        delta_m,
        delta_m_predicted: delta_m_predicted(m),
        bell_values,
        correspondence_gap,
        tolerances: Tolerances::default(),
    })
}
