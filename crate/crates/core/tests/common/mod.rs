//! Helpers shared by the integration tests.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ness_core::superspace::OrderingScheme;
use ness_core::tensor::LabeledTensor;
use ness_core::{MatrixProductOperator, MatrixProductState};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_complex(rng: &mut impl Rng) -> C64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Random MPS with the given uniform physical dimension and interior bond.
pub fn random_mps(n: usize, d: usize, bond: usize, seed: u64) -> MatrixProductState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tensors = Vec::with_capacity(n);
    for i in 0..n {
        let left = if i == 0 { 1 } else { bond };
        let right = if i == n - 1 { 1 } else { bond };
        let dims = [left, d, right];
        let len = left * d * right;
        let values: Vec<C64> = (0..len).map(|_| random_complex(&mut rng)).collect();
        tensors.push(
            LabeledTensor::from_vec(
                &[format!("b{i}"), format!("p{i}"), format!("b{}", i + 1)],
                &dims,
                values,
            )
            .unwrap(),
        );
    }
    MatrixProductState::from_tensors(tensors).unwrap()
}

/// Random product state, normalized per site.
pub fn random_product_mps(n: usize, d: usize, seed: u64) -> MatrixProductState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let locals: Vec<Vec<C64>> = (0..n)
        .map(|_| {
            let v: Vec<C64> = (0..d).map(|_| random_complex(&mut rng)).collect();
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|z| z / norm).collect()
        })
        .collect();
    MatrixProductState::product_state(&locals).unwrap()
}

pub fn random_dense(rows: usize, cols: usize, seed: u64) -> Array2<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| random_complex(&mut rng))
}

/// Random density matrix (Hermitian, PSD, unit trace).
pub fn random_density(dim: usize, seed: u64) -> Array2<C64> {
    let a = random_dense(dim, dim, seed);
    let rho = a.dot(&a.t().mapv(|z| z.conj()));
    let trace: C64 = rho.diag().sum();
    rho.mapv(|z| z / trace)
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn vec_max_abs_diff(a: &Array1<C64>, b: &Array1<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Dense matrix of a superspace MPO re-indexed into the column-stacking
/// basis, comparable against the kron-assembled oracle.
pub fn mpo_dense_vec_basis(mpo: &MatrixProductOperator, scheme: &OrderingScheme) -> Array2<C64> {
    let dense = mpo.to_dense().unwrap();
    let perm = scheme.superspace_to_vec_perm();
    let dim = dense.nrows();
    let mut out = Array2::zeros((dim, dim));
    for s1 in 0..dim {
        for s2 in 0..dim {
            out[(perm[s1], perm[s2])] = dense[(s1, s2)];
        }
    }
    out
}

/// Dense vector of a superspace MPS re-indexed into the column-stacking
/// basis.
pub fn mps_dense_vec_basis(mps: &MatrixProductState, scheme: &OrderingScheme) -> Array1<C64> {
    let dense = mps.to_dense().unwrap();
    let perm = scheme.superspace_to_vec_perm();
    let mut out = Array1::zeros(dense.len());
    for s in 0..dense.len() {
        out[perm[s]] = dense[s];
    }
    out
}
