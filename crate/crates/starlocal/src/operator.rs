//! Dense complex operators and the small linear-algebra toolkit used by the
//! realization builders and probes.
//!
//! States of one source live in `C^(d*d)` with the edge-party factor first:
//! amplitude `psi[a*d + b]` couples edge basis state `a` to central basis
//! state `b`. Expectation values of `P (x) Q` are evaluated by reshaping the
//! state into a d-by-d matrix, so no Kronecker product is ever formed on the
//! per-source fast path.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Hermiticity gate applied when wrapping a raw matrix.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// A dense Hermitian matrix, validated on construction.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    mat: CMat,
}

impl HermitianOperator {
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not square",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let dev = hermiticity_deviation(&mat);
        if dev > HERMITICITY_TOL {
            return Err(Error::Domain(format!(
                "matrix is not Hermitian (deviation {dev:.3e})"
            )));
        }
        Ok(HermitianOperator { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    /// True when the operator squares to the identity within `tol`.
    pub fn is_involution(&self, tol: f64) -> bool {
        let sq = &self.mat * &self.mat;
        deviation_from_identity(&sq) <= tol
    }

    /// Conjugate by a unitary: `U M U^dagger`.
    pub fn conjugated(&self, u: &CMat) -> HermitianOperator {
        HermitianOperator {
            mat: u * &self.mat * u.adjoint(),
        }
    }

    /// Row-major JSON export as `[re, im]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct OperatorJson {
            dim: usize,
            entries: Vec<(f64, f64)>,
        }
        let d = self.dim();
        let entries = (0..d)
            .flat_map(|r| (0..d).map(move |c| (r, c)))
            .map(|(r, c)| {
                let z = self.mat[(r, c)];
                (z.re, z.im)
            })
            .collect();
        serde_json::to_value(OperatorJson { dim: d, entries })
            .expect("operator serialization cannot fail")
    }
}

/// Row-major JSON export of a state vector as `[re, im]` pairs.
pub fn state_to_json(state: &CVec) -> serde_json::Value {
    #[derive(Serialize)]
    struct StateJson {
        dim: usize,
        amplitudes: Vec<(f64, f64)>,
    }
    let amplitudes = state.iter().map(|z| (z.re, z.im)).collect();
    serde_json::to_value(StateJson {
        dim: state.len(),
        amplitudes,
    })
    .expect("state serialization cannot fail")
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    )
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        ],
    )
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ],
    )
}

/// Kronecker product of a slice of factors, left to right.
pub fn kron_all(factors: &[&CMat]) -> CMat {
    assert!(!factors.is_empty());
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = acc.kronecker(f);
    }
    acc
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

pub fn max_abs_entry(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Frobenius norm; an upper bound on the spectral norm, used for the
/// vanishing-operator gates.
pub fn frobenius_norm(m: &CMat) -> f64 {
    m.norm()
}

pub fn hermiticity_deviation(m: &CMat) -> f64 {
    max_abs_entry(&(m - m.adjoint()))
}

pub fn deviation_from_identity(m: &CMat) -> f64 {
    max_abs_entry(&(m - identity(m.nrows())))
}

/// Reshapes a `d*d` source state into its d-by-d coefficient matrix, with the
/// edge index as the row.
pub fn state_as_matrix(state: &CVec, d: usize) -> CMat {
    assert_eq!(state.len(), d * d, "state length must be d^2");
    CMat::from_fn(d, d, |a, b| state[a * d + b])
}

/// `<psi| P (x) Q |psi>` for one source, via the reshaped state.
pub fn pair_expectation(p: &CMat, q: &CMat, psi: &CMat) -> Complex64 {
    let w = p * psi * q.transpose();
    psi.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Norm of `(P (x) I)|psi>` for one source.
pub fn half_applied_norm(p: &CMat, psi: &CMat) -> f64 {
    (p * psi).norm()
}

/// Haar-distributed random unitary from a QR factorization of a complex
/// Gaussian matrix, with the diagonal phases normalized.
pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| {
        Complex64::new(gaussian(rng), gaussian(rng))
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..d {
        let rc = r[(c, c)];
        let phase = if rc.norm() > 1e-300 { rc / rc.norm() } else { Complex64::new(1.0, 0.0) };
        for row in 0..d {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// Random Hermitian involution `V diag(+-1) V^dagger` with both outcomes
/// present, so the result is a genuine two-outcome observable rather than
/// `+-I`.
pub fn random_involution<R: Rng>(d: usize, rng: &mut R) -> CMat {
    let v = random_unitary(d, rng);
    let signs: Vec<f64> = loop {
        let s: Vec<f64> = (0..d)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        if d < 2 || s.iter().any(|&x| x != s[0]) {
            break s;
        }
    };
    let diag = CMat::from_fn(d, d, |r, c| {
        if r == c {
            Complex64::new(signs[r], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    &v * diag * v.adjoint()
}

/// Random unit vector with complex Gaussian amplitudes.
pub fn random_state<R: Rng>(d: usize, rng: &mut R) -> CVec {
    loop {
        let v = CVec::from_fn(d, |_, _| Complex64::new(gaussian(rng), gaussian(rng)));
        let n = v.norm();
        if n > 1e-6 {
            return v / Complex64::new(n, 0.0);
        }
    }
}

/// Rotation by `theta` in a uniformly random real 2-plane, embedded as a
/// complex matrix. Conjugation by it preserves Hermiticity and involutivity.
pub fn rotation_in_random_plane<R: Rng>(d: usize, theta: f64, rng: &mut R) -> CMat {
    assert!(d >= 2, "rotations need dimension at least 2");
    let (u, v) = loop {
        let mut u = DVector::<f64>::from_fn(d, |_, _| gaussian(rng));
        u /= u.norm();
        let mut v = DVector::<f64>::from_fn(d, |_, _| gaussian(rng));
        v -= &u * u.dot(&v);
        let n = v.norm();
        if n > 1e-6 {
            break (u, v / n);
        }
    };
    let mut rot = DMatrix::<f64>::identity(d, d);
    rot += (theta.cos() - 1.0) * (&u * u.transpose() + &v * v.transpose());
    rot += theta.sin() * (&u * v.transpose() - &v * u.transpose());
    rot.map(|x| Complex64::new(x, 0.0))
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller on open-interval uniforms.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
