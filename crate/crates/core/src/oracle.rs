//! Dense ground truth for small chains.
//!
//! Everything here works on explicitly materialized matrices in the
//! column-stacking convention, independent of the tensor-network code path,
//! and is used by tests and the acceptance suite as the reference. Steady
//! states come from a full eigendecomposition up to four sites and from
//! LU-based inverse iteration at five and six.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, EigValsh, FactorizeInto, Solve, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::liouvillian::{ModelError, ModelParams};
use crate::pauli;
use crate::superspace::{unvectorize, vectorize, SuperspaceError};

/// Dense superoperators above this many sites are refused.
pub const MAX_DENSE_SITES: usize = 7;

/// Largest chain for which a steady state is extracted densely.
pub const MAX_NESS_SITES: usize = 6;

/// Full spectra are kept up to this many sites.
const SPECTRUM_SITES: usize = 4;

const NULL_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("dense computation limited to {max} sites, got {n}")]
    TooLarge { n: usize, max: usize },

    #[error("steady state is degenerate: {count} null directions found")]
    Degenerate { count: usize },

    #[error("inverse iteration stalled at residual {residual:.3e}")]
    NotConverged { residual: f64 },

    #[error("physicality violation: {0}")]
    Physicality(String),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Superspace(#[from] SuperspaceError),

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

/// `op` embedded at 1-based `site` of an `n`-site chain, site 1 leftmost.
pub fn embed_op(op: &Array2<C64>, site: usize, n: usize) -> Array2<C64> {
    let mut acc = Array2::eye(1);
    for i in 1..=n {
        let factor = if i == site {
            op.clone()
        } else {
            Array2::eye(op.nrows())
        };
        acc = ndarray::linalg::kron(&acc, &factor);
    }
    acc
}

/// Dense XXZ Hamiltonian on `2^N` dimensions.
pub fn dense_hamiltonian(params: &ModelParams) -> Result<Array2<C64>, OracleError> {
    params.validate()?;
    let n = params.n_sites;
    let dim = 1usize << n;
    let mut h = Array2::<C64>::zeros((dim, dim));
    let (sx, sy, sz) = (pauli::sigma_x(), pauli::sigma_y(), pauli::sigma_z());
    for bond in 1..n {
        let j = params.j[bond - 1];
        let delta = params.delta[bond - 1];
        for (op, weight) in [(&sx, 1.0), (&sy, 1.0), (&sz, delta)] {
            if j * weight == 0.0 {
                continue;
            }
            let term = embed_op(op, bond, n).dot(&embed_op(op, bond + 1, n));
            h.scaled_add(C64::new(j * weight, 0.0), &term);
        }
    }
    for site in 1..=n {
        let field = params.h[site - 1];
        if field != 0.0 {
            h.scaled_add(C64::new(field, 0.0), &embed_op(&sz, site, n));
        }
    }
    Ok(h)
}

/// Add `scale * (a (x) b)` into `acc` without materializing the product.
fn add_kron(acc: &mut Array2<C64>, a: &Array2<C64>, b: &Array2<C64>, scale: C64) {
    let (br, bc) = (b.nrows(), b.ncols());
    for ((i, j), &av) in a.indexed_iter() {
        if av == C64::new(0.0, 0.0) {
            continue;
        }
        let mut block = acc.slice_mut(ndarray::s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
        block.scaled_add(scale * av, b);
    }
}

/// Dense vectorized generator `-i (I (x) H - H^T (x) I) + D_1 + D_N` in the
/// column-stacking convention.
pub fn dense_liouvillian(params: &ModelParams) -> Result<Array2<C64>, OracleError> {
    params.validate()?;
    let n = params.n_sites;
    if n > MAX_DENSE_SITES {
        return Err(OracleError::TooLarge {
            n,
            max: MAX_DENSE_SITES,
        });
    }
    let dim = 1usize << n;
    let h = dense_hamiltonian(params)?;
    let eye = Array2::<C64>::eye(dim);
    let mut l = Array2::<C64>::zeros((dim * dim, dim * dim));
    add_kron(&mut l, &eye, &h, C64::new(0.0, -1.0));
    add_kron(&mut l, &h.t().to_owned(), &eye, C64::new(0.0, 1.0));

    for (site, gamma, f) in [(1, params.gamma1, params.f1), (n, params.gamma_n, params.f_n)] {
        for (jump, rate) in [
            (pauli::sigma_minus(), gamma * f),
            (pauli::sigma_plus(), gamma * (1.0 - f)),
        ] {
            if rate == 0.0 {
                continue;
            }
            let jump = embed_op(&jump, site, n);
            let jdj = jump.t().mapv(|z| z.conj()).dot(&jump);
            add_kron(&mut l, &jump.mapv(|z| z.conj()), &jump, C64::new(rate, 0.0));
            add_kron(&mut l, &eye, &jdj, C64::new(-0.5 * rate, 0.0));
            add_kron(&mut l, &jdj.t().to_owned(), &eye, C64::new(-0.5 * rate, 0.0));
        }
    }
    Ok(l)
}

/// Dense Hermitian target: adjoint of the generator times the generator.
pub fn dense_target(l: &Array2<C64>) -> Array2<C64> {
    l.t().mapv(|z| z.conj()).dot(l)
}

/// Dense steady state extracted from the generator's null space.
#[derive(Clone, Debug)]
pub struct DenseNess {
    /// Trace-normalized, Hermitized density matrix.
    pub rho: Array2<C64>,
    /// `|L vec(rho)|` after normalization.
    pub residual: f64,
    /// Full generator spectrum, kept for small chains.
    pub spectrum: Option<Vec<C64>>,
    /// Negative of the largest nonzero real part, when the spectrum is kept.
    pub gap: Option<f64>,
}

pub fn dense_ness(l: &Array2<C64>) -> Result<DenseNess, OracleError> {
    let super_dim = l.nrows();
    let dim = (super_dim as f64).sqrt().round() as usize;
    let n = dim.trailing_zeros() as usize;
    if dim * dim != super_dim || 1usize << n != dim {
        return Err(OracleError::Physicality(format!(
            "generator dimension {super_dim} is not 4^N"
        )));
    }
    if n > MAX_NESS_SITES {
        return Err(OracleError::TooLarge {
            n,
            max: MAX_NESS_SITES,
        });
    }

    let (raw, spectrum) = if n <= SPECTRUM_SITES {
        let (values, vectors) = l.eig()?;
        let mut null_count = 0;
        let mut best = 0;
        for (k, lambda) in values.iter().enumerate() {
            if lambda.norm() <= NULL_TOL {
                null_count += 1;
            }
            if lambda.norm() < values[best].norm() {
                best = k;
            }
        }
        if null_count > 1 {
            return Err(OracleError::Degenerate { count: null_count });
        }
        if values[best].norm() > NULL_TOL {
            return Err(OracleError::NotConverged {
                residual: values[best].norm(),
            });
        }
        (vectors.column(best).to_owned(), Some(values.to_vec()))
    } else {
        (inverse_iteration_null(l)?, None)
    };

    let gap = spectrum.as_ref().map(|values| {
        -values
            .iter()
            .filter(|lambda| lambda.norm() > NULL_TOL)
            .map(|lambda| lambda.re)
            .fold(f64::NEG_INFINITY, f64::max)
    });

    let trace: C64 = (0..dim).map(|k| raw[k * dim + k]).sum();
    if trace.norm() < 1e-12 {
        return Err(OracleError::Physicality(
            "null vector has vanishing trace".into(),
        ));
    }
    let vec_rho = raw.mapv(|z| z / trace);
    let rho = unvectorize(&vec_rho, dim)?;

    let herm_err = (&rho - &rho.t().mapv(|z| z.conj()))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if herm_err > 1e-8 {
        return Err(OracleError::Physicality(format!(
            "steady state is not Hermitian: deviation {herm_err:.3e}"
        )));
    }
    let rho = (&rho + &rho.t().mapv(|z| z.conj())).mapv(|z| 0.5 * z);

    let min_eig = rho
        .eigvalsh(UPLO::Lower)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -1e-8 {
        return Err(OracleError::Physicality(format!(
            "steady state has negative eigenvalue {min_eig:.3e}"
        )));
    }

    let residual = l
        .dot(&vectorize(&rho)?)
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt();

    Ok(DenseNess {
        rho,
        residual,
        spectrum,
        gap,
    })
}

/// Null vector of a (numerically) singular matrix by LU inverse iteration.
fn inverse_iteration_null(l: &Array2<C64>) -> Result<Array1<C64>, OracleError> {
    let dim = l.nrows();
    let lu = match l.to_owned().factorize_into() {
        Ok(f) => f,
        Err(_) => {
            // Exact zero pivot: nudge off the singularity.
            let mut shifted = l.to_owned();
            for k in 0..dim {
                shifted[(k, k)] += C64::new(1e-13, 0.0);
            }
            shifted.factorize_into()?
        }
    };
    let normalize = |v: &Array1<C64>| {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.mapv(|z| z / norm)
    };
    let residual_of = |v: &Array1<C64>| {
        l.dot(v).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    };

    // Start from the maximally mixed state, which always overlaps the
    // steady state.
    let side = (dim as f64).sqrt().round() as usize;
    let mut x = Array1::<C64>::zeros(dim);
    for k in 0..side {
        x[k * side + k] = C64::new(1.0, 0.0);
    }
    let mut x = normalize(&x);
    let mut residual = f64::INFINITY;
    for _ in 0..20 {
        x = normalize(&lu.solve(&x)?);
        residual = residual_of(&x);
        if residual <= 1e-11 {
            break;
        }
    }
    if residual > 1e-9 {
        return Err(OracleError::NotConverged { residual });
    }

    // Probe for a second null direction from an orthogonalized start.
    let mut y = Array1::<C64>::zeros(dim);
    y[0] = C64::new(1.0, 0.0);
    let proj = x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum::<C64>();
    y.zip_mut_with(&x, |b, a| *b -= proj * a);
    if y.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-12 {
        let mut y = normalize(&y);
        for _ in 0..6 {
            y = lu.solve(&y)?;
            let proj = x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum::<C64>();
            y.zip_mut_with(&x, |b, a| *b -= proj * a);
            y = normalize(&y);
        }
        if residual_of(&y) <= 1e-9 {
            return Err(OracleError::Degenerate { count: 2 });
        }
    }
    Ok(x)
}

/// Bond currents and site magnetizations in the dense steady state.
pub fn dense_observables(
    ness: &DenseNess,
    params: &ModelParams,
) -> Result<(Vec<f64>, Vec<f64>), OracleError> {
    params.validate()?;
    let n = params.n_sites;
    let (sx, sy, sz) = (pauli::sigma_x(), pauli::sigma_y(), pauli::sigma_z());
    let expect = |op: &Array2<C64>| -> Result<f64, OracleError> {
        let val: C64 = op.dot(&ness.rho).diag().sum();
        if val.im.abs() > 1e-10 {
            return Err(OracleError::Physicality(format!(
                "observable has imaginary part {:.3e}",
                val.im
            )));
        }
        Ok(val.re)
    };
    let mut currents = Vec::with_capacity(n - 1);
    for bond in 1..n {
        let j = params.j[bond - 1];
        let op = (embed_op(&sx, bond, n).dot(&embed_op(&sy, bond + 1, n))
            - embed_op(&sy, bond, n).dot(&embed_op(&sx, bond + 1, n)))
        .mapv(|z| z * 2.0 * j);
        currents.push(expect(&op)?);
    }
    let mut mags = Vec::with_capacity(n);
    for site in 1..=n {
        mags.push(expect(&embed_op(&sz, site, n))?);
    }
    Ok((currents, mags))
}

/// Pinned oracle output for regression tests, serialized as JSON.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NessFixture {
    pub generator: String,
    pub params: ModelParams,
    pub residual: f64,
    pub current: Vec<f64>,
    pub magnetization: Vec<f64>,
}

impl NessFixture {
    pub const GENERATOR: &'static str =
        concat!("ness-core dense oracle ", env!("CARGO_PKG_VERSION"));

    pub fn compute(params: &ModelParams) -> Result<Self, OracleError> {
        let l = dense_liouvillian(params)?;
        let ness = dense_ness(&l)?;
        let (current, magnetization) = dense_observables(&ness, params)?;
        Ok(Self {
            generator: Self::GENERATOR.to_owned(),
            params: params.clone(),
            residual: ness.residual,
            current,
            magnetization,
        })
    }

    pub fn write_json(&self, path: impl AsRef<std::path::Path>) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("fixture serialization");
        std::fs::write(path, text)
    }

    pub fn read_json(path: impl AsRef<std::path::Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn single_bath(n: usize, gamma: f64, f: f64) -> ModelParams {
        ModelParams {
            n_sites: n,
            j: vec![1.0; n - 1],
            delta: vec![1.0; n - 1],
            h: vec![0.0; n],
            gamma1: gamma,
            gamma_n: 0.0,
            f1: f,
            f_n: 0.0,
        }
    }

    #[test]
    fn single_qubit_damping_matches_textbook() {
        let gamma = 0.7;
        let mut params = single_bath(1, gamma, 1.0);
        params.j = vec![];
        params.delta = vec![];
        let l = dense_liouvillian(&params).unwrap();
        // basis (rho_00, rho_10, rho_01, rho_11), column stacking
        let g = c(gamma, 0.0);
        let want = array![
            [-g, c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), -g / 2.0, c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), -g / 2.0, c(0.0, 0.0)],
            [g, c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        ];
        let diff = l
            .iter()
            .zip(want.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-14, "deviation {diff}");

        let ness = dense_ness(&l).unwrap();
        let mut spectrum = ness.spectrum.clone().unwrap();
        spectrum.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        let want_re = [-gamma, -gamma / 2.0, -gamma / 2.0, 0.0];
        for (lambda, want) in spectrum.iter().zip(want_re.iter()) {
            assert!((lambda.re - want).abs() < 1e-12);
            assert!(lambda.im.abs() < 1e-12);
        }
        // steady state is spin-down at full bias
        assert!((ness.rho[(1, 1)] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn spectrum_is_stable_and_null_space_simple() {
        let params = ModelParams::uniform(3, 1.0, 0.5, 0.2, 0.9, 1.0, 0.0);
        let l = dense_liouvillian(&params).unwrap();
        let ness = dense_ness(&l).unwrap();
        let spectrum = ness.spectrum.unwrap();
        let mut null_count = 0;
        for lambda in &spectrum {
            assert!(lambda.re <= 1e-12, "unstable eigenvalue {lambda}");
            if lambda.norm() <= 1e-10 {
                null_count += 1;
            }
        }
        assert_eq!(null_count, 1);
        assert!(ness.gap.unwrap() > 0.0);
        assert!(ness.residual < 1e-10);
    }

    #[test]
    fn equilibrium_is_product_state() {
        let f = 0.3;
        let n = 3;
        let params = ModelParams::uniform(n, 1.0, 1.0, 0.0, 1.0, f, f);
        let l = dense_liouvillian(&params).unwrap();
        let ness = dense_ness(&l).unwrap();
        let local = array![[c(1.0 - f, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(f, 0.0)]];
        let mut want = ndarray::Array2::eye(1);
        for _ in 0..n {
            want = ndarray::linalg::kron(&want, &local);
        }
        let diff = ness
            .rho
            .iter()
            .zip(want.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10, "deviation {diff}");

        let (currents, mags) = dense_observables(&ness, &params).unwrap();
        for j in currents {
            assert!(j.abs() < 1e-10);
        }
        for m in mags {
            assert!((m - (1.0 - 2.0 * f)).abs() < 1e-10);
        }
    }

    #[test]
    fn current_is_uniform_in_steady_state() {
        let params = ModelParams::uniform(4, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0);
        let l = dense_liouvillian(&params).unwrap();
        let ness = dense_ness(&l).unwrap();
        let (currents, _) = dense_observables(&ness, &params).unwrap();
        for pair in currents.windows(2) {
            assert!((pair[0] - pair[1]).abs() < 1e-10, "currents {currents:?}");
        }
        assert!(currents[0].abs() > 1e-3, "drive should carry current");
    }

    #[test]
    fn hilbert_schmidt_identity() {
        // tr(Ad B) = vec(A)* . vec(B)
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let a = ndarray::Array2::from_shape_fn((4, 4), |_| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let b = ndarray::Array2::from_shape_fn((4, 4), |_| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let lhs: C64 = a.t().mapv(|z| z.conj()).dot(&b).diag().sum();
            let va = vectorize(&a).unwrap();
            let vb = vectorize(&b).unwrap();
            let rhs: C64 = va.iter().zip(vb.iter()).map(|(x, y)| x.conj() * y).sum();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_iteration_reproduces_equilibrium_n5() {
        let f = 0.25;
        let params = ModelParams::uniform(5, 1.0, 0.8, 0.0, 1.0, f, f);
        let l = dense_liouvillian(&params).unwrap();
        let ness = dense_ness(&l).unwrap();
        assert!(ness.spectrum.is_none());
        assert!(ness.residual < 1e-10);
        let (currents, mags) = dense_observables(&ness, &params).unwrap();
        for j in currents {
            assert!(j.abs() < 1e-8);
        }
        for m in mags {
            assert!((m - (1.0 - 2.0 * f)).abs() < 1e-8);
        }
    }

    #[test]
    fn degenerate_null_space_is_reported() {
        // With all couplings off, interior sites have no dynamics at all
        // and the null space is massively degenerate.
        let params = ModelParams {
            n_sites: 3,
            j: vec![0.0, 0.0],
            delta: vec![0.0, 0.0],
            h: vec![0.0; 3],
            gamma1: 1.0,
            gamma_n: 1.0,
            f1: 1.0,
            f_n: 0.0,
        };
        let l = dense_liouvillian(&params).unwrap();
        assert!(matches!(
            dense_ness(&l),
            Err(OracleError::Degenerate { .. })
        ));
    }

    #[test]
    fn size_guards() {
        let params = ModelParams::uniform(8, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0);
        assert!(matches!(
            dense_liouvillian(&params),
            Err(OracleError::TooLarge { .. })
        ));
    }

    #[test]
    fn fixture_roundtrip() {
        let params = ModelParams::uniform(2, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0);
        let fixture = NessFixture::compute(&params).unwrap();
        assert!(fixture.residual < 1e-10);
        assert_eq!(fixture.current.len(), 1);
        assert_eq!(fixture.magnetization.len(), 2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixture.json");
        fixture.write_json(&path).unwrap();
        let back = NessFixture::read_json(&path).unwrap();
        assert_eq!(back.params, fixture.params);
        assert_eq!(back.current, fixture.current);
    }
}
