//! Matrix product states on an open chain.
//!
//! Site `i` of a length-`n` chain holds a rank-3 tensor labeled
//! `(b{i}, p{i}, b{i+1})`; both boundary bonds have extent 1. A state can be
//! brought into mixed-canonical form around any site, after which every
//! tensor left of the center is a left-isometry and every tensor right of it
//! a right-isometry.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::labels;
use crate::tensor::{contract, lq_factor, qr_factor, svd_truncate, LabeledTensor, TensorError};

/// Dense reconstructions above this many amplitudes are refused.
const DENSE_LIMIT: usize = 1 << 24;

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("chain must contain at least one site")]
    Empty,

    #[error("site {site}: expected labels {expected:?}, found {found:?}")]
    SiteLabels {
        site: usize,
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("boundary bond at site {site} has extent {extent}, expected 1")]
    BoundaryBond { site: usize, extent: usize },

    #[error("bond between sites {left} and {right} has mismatched extents {left_extent} vs {right_extent}")]
    BondMismatch {
        left: usize,
        right: usize,
        left_extent: usize,
        right_extent: usize,
    },

    #[error("center {center} out of range for {len} sites")]
    CenterOutOfRange { center: usize, len: usize },

    #[error("states have incompatible shapes ({0})")]
    ShapeMismatch(String),

    #[error("dense reconstruction of {dim} amplitudes exceeds the supported size")]
    DenseTooLarge { dim: usize },

    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Open-boundary matrix product state.
#[derive(Clone, Debug)]
pub struct MatrixProductState {
    tensors: Vec<LabeledTensor>,
    ortho_center: Option<usize>,
}

impl MatrixProductState {
    /// Build from site tensors labeled `(b{i}, p{i}, b{i+1})` in any axis
    /// order; tensors are permuted into the canonical order.
    pub fn from_tensors(tensors: Vec<LabeledTensor>) -> Result<Self, MpsError> {
        if tensors.is_empty() {
            return Err(MpsError::Empty);
        }
        let n = tensors.len();
        let mut canonical = Vec::with_capacity(n);
        for (i, t) in tensors.into_iter().enumerate() {
            let expected = [labels::bond(i), labels::phys(i), labels::bond(i + 1)];
            let mut found: Vec<String> = t.labels().to_vec();
            found.sort();
            let mut want = expected.to_vec();
            want.sort();
            if found != want {
                return Err(MpsError::SiteLabels {
                    site: i,
                    expected: expected.to_vec(),
                    found: t.labels().to_vec(),
                });
            }
            canonical.push(t.permuted(&expected)?);
        }
        let state = Self {
            tensors: canonical,
            ortho_center: None,
        };
        state.validate_bonds()?;
        Ok(state)
    }

    /// Bond-dimension-1 product state from one local vector per site.
    pub fn product_state(locals: &[Vec<C64>]) -> Result<Self, MpsError> {
        if locals.is_empty() {
            return Err(MpsError::Empty);
        }
        let mut tensors = Vec::with_capacity(locals.len());
        for (i, v) in locals.iter().enumerate() {
            let site = LabeledTensor::from_vec(
                &[labels::bond(i), labels::phys(i), labels::bond(i + 1)],
                &[1, v.len(), 1],
                v.clone(),
            )?;
            tensors.push(site);
        }
        Ok(Self {
            tensors,
            ortho_center: None,
        })
    }

    fn validate_bonds(&self) -> Result<(), MpsError> {
        let n = self.len();
        let first = self.tensors[0].dims()[0];
        if first != 1 {
            return Err(MpsError::BoundaryBond {
                site: 0,
                extent: first,
            });
        }
        let last = self.tensors[n - 1].dims()[2];
        if last != 1 {
            return Err(MpsError::BoundaryBond {
                site: n - 1,
                extent: last,
            });
        }
        for i in 0..n - 1 {
            let right = self.tensors[i].dims()[2];
            let next_left = self.tensors[i + 1].dims()[0];
            if right != next_left {
                return Err(MpsError::BondMismatch {
                    left: i,
                    right: i + 1,
                    left_extent: right,
                    right_extent: next_left,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn tensor(&self, i: usize) -> &LabeledTensor {
        &self.tensors[i]
    }

    pub fn tensors(&self) -> &[LabeledTensor] {
        &self.tensors
    }

    pub(crate) fn set_ortho_center(&mut self, center: Option<usize>) {
        self.ortho_center = center;
    }

    pub fn ortho_center(&self) -> Option<usize> {
        self.ortho_center
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.dims()[1]).collect()
    }

    /// Interior bond extents, one per cut between neighboring sites.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.len() - 1]
            .iter()
            .map(|t| t.dims()[2])
            .collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn scaled(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.tensors[0].scale_assign(c);
        out
    }

    /// Norm of the represented vector. Cheap when an orthogonality center is
    /// tracked, otherwise a full transfer contraction.
    pub fn norm(&self) -> f64 {
        match self.ortho_center {
            Some(c) => self.tensors[c].norm(),
            None => inner(self, self)
                .map(|z| z.re.max(0.0).sqrt())
                .unwrap_or(f64::NAN),
        }
    }

    /// Move the orthogonality center to `center` without truncation. The
    /// represented state is unchanged.
    pub fn canonicalize(&self, center: usize) -> Result<Self, MpsError> {
        let mut out = self.clone();
        out.canonicalize_in_place(center)?;
        Ok(out)
    }

    pub(crate) fn canonicalize_in_place(&mut self, center: usize) -> Result<(), MpsError> {
        let n = self.len();
        if center >= n {
            return Err(MpsError::CenterOutOfRange { center, len: n });
        }
        for i in 0..center {
            self.orthogonalize_right(i)?;
        }
        for i in (center + 1..n).rev() {
            self.orthogonalize_left(i)?;
        }
        self.ortho_center = Some(center);
        Ok(())
    }

    /// QR split of site `i` into a left-isometry, carrying the remainder
    /// into site `i + 1`.
    fn orthogonalize_right(&mut self, i: usize) -> Result<(), MpsError> {
        let rows = [labels::bond(i), labels::phys(i)];
        let (q, r, tmp) = qr_factor(&self.tensors[i], &rows)?;
        let bond = labels::bond(i + 1);
        let next = contract(&r, &self.tensors[i + 1], &[(bond.as_str(), bond.as_str())])?
            .relabeled(&tmp, &bond)?
            .permuted(&[bond.clone(), labels::phys(i + 1), labels::bond(i + 2)])?;
        self.tensors[i] = q.relabeled(&tmp, &bond)?;
        self.tensors[i + 1] = next;
        Ok(())
    }

    /// LQ split of site `i` into a right-isometry, carrying the remainder
    /// into site `i - 1`.
    fn orthogonalize_left(&mut self, i: usize) -> Result<(), MpsError> {
        let rows = [labels::bond(i)];
        let (l, q, tmp) = lq_factor(&self.tensors[i], &rows)?;
        let bond = labels::bond(i);
        let prev = contract(&self.tensors[i - 1], &l, &[(bond.as_str(), bond.as_str())])?
            .relabeled(&tmp, &bond)?
            .permuted(&[labels::bond(i - 1), labels::phys(i - 1), bond.clone()])?;
        self.tensors[i] = q.relabeled(&tmp, &bond)?.permuted(&[
            bond.clone(),
            labels::phys(i),
            labels::bond(i + 1),
        ])?;
        self.tensors[i - 1] = prev;
        Ok(())
    }

    /// Split site `i` into a left-isometry and carry the rest into site
    /// `i + 1`. Returns the discarded weight.
    pub(crate) fn push_right(
        &mut self,
        i: usize,
        max_rank: usize,
        cutoff: f64,
    ) -> Result<f64, MpsError> {
        let rows = [labels::bond(i), labels::phys(i)];
        let svd = svd_truncate(&self.tensors[i], &rows, max_rank, cutoff)?;
        let bond = labels::bond(i + 1);
        let carry = svd
            .v
            .scaled_along(svd.bond_label(), &svd.s)?;
        let next = contract(&carry, &self.tensors[i + 1], &[(bond.as_str(), bond.as_str())])?
            .relabeled(svd.bond_label(), &bond)?
            .permuted(&[bond.clone(), labels::phys(i + 1), labels::bond(i + 2)])?;
        self.tensors[i] = svd.u.relabeled(svd.bond_label(), &bond)?;
        self.tensors[i + 1] = next;
        Ok(svd.discarded_weight)
    }

    /// Compress every bond to at most `max_bond`, dropping relative squared
    /// weight up to `cutoff` per bond. Returns the compressed state and the
    /// total discarded weight.
    pub fn truncated(&self, max_bond: usize, cutoff: f64) -> Result<(Self, f64), MpsError> {
        let mut out = self.canonicalize(0)?;
        let n = out.len();
        let mut discarded = 0.0;
        for i in 0..n - 1 {
            discarded += out.push_right(i, max_bond, cutoff)?;
        }
        out.ortho_center = Some(n - 1);
        Ok((out, discarded))
    }

    /// Dense amplitude vector with site 0 as the most significant index.
    pub fn to_dense(&self) -> Result<Array1<C64>, MpsError> {
        let dim: usize = self.phys_dims().iter().product();
        if dim > DENSE_LIMIT {
            return Err(MpsError::DenseTooLarge { dim });
        }
        let mut acc = self.tensors[0].clone();
        for i in 1..self.len() {
            let bond = labels::bond(i);
            acc = contract(&acc, &self.tensors[i], &[(bond.as_str(), bond.as_str())])?;
        }
        let values: Vec<C64> = acc.data().iter().copied().collect();
        Ok(Array1::from_vec(values))
    }
}

/// Full contraction `conj(a) . b` of two states with equal shapes.
pub fn inner(a: &MatrixProductState, b: &MatrixProductState) -> Result<C64, MpsError> {
    if a.len() != b.len() || a.phys_dims() != b.phys_dims() {
        return Err(MpsError::ShapeMismatch(format!(
            "inner: {} sites {:?} vs {} sites {:?}",
            a.len(),
            a.phys_dims(),
            b.len(),
            b.phys_dims()
        )));
    }
    let mut env = LabeledTensor::from_vec(
        &[labels::bra_bond(0), labels::bond(0)],
        &[1, 1],
        vec![C64::new(1.0, 0.0)],
    )?;
    for i in 0..a.len() {
        let bond = labels::bond(i);
        let next_bond = labels::bond(i + 1);
        let phys = labels::phys(i);
        env = contract(&env, b.tensor(i), &[(bond.as_str(), bond.as_str())])?;
        let bra = a
            .tensor(i)
            .conj()
            .relabeled(&bond, &labels::bra_bond(i))?
            .relabeled(&next_bond, &labels::bra_bond(i + 1))?;
        env = contract(
            &env,
            &bra,
            &[
                (labels::bra_bond(i).as_str(), labels::bra_bond(i).as_str()),
                (phys.as_str(), phys.as_str()),
            ],
        )?;
    }
    Ok(env.as_scalar().expect("scalar transfer contraction"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_mps(n: usize, d: usize, bond: usize, seed: u64) -> MatrixProductState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = (0..n)
            .map(|i| {
                let left = if i == 0 { 1 } else { bond };
                let right = if i == n - 1 { 1 } else { bond };
                LabeledTensor::from_fn(
                    &[labels::bond(i), labels::phys(i), labels::bond(i + 1)],
                    &[left, d, right],
                    |_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
                .unwrap()
            })
            .collect();
        MatrixProductState::from_tensors(tensors).unwrap()
    }

    #[test]
    fn product_state_roundtrip() {
        let locals = vec![
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.6, 0.0), c(0.0, 0.8)],
        ];
        let mps = MatrixProductState::product_state(&locals).unwrap();
        let dense = mps.to_dense().unwrap();
        let want = [c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0), c(0.0, 0.0)];
        for (got, want) in dense.iter().zip(want.iter()) {
            assert!((got - want).norm() < 1e-15);
        }
    }

    #[test]
    fn canonicalize_preserves_state() {
        let mps = random_mps(4, 2, 3, 1);
        let dense = mps.to_dense().unwrap();
        for center in [0, 1, 3] {
            let canon = mps.canonicalize(center).unwrap();
            assert_eq!(canon.ortho_center(), Some(center));
            let dense2 = canon.to_dense().unwrap();
            let err: f64 = dense
                .iter()
                .zip(dense2.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-12 * mps.norm(), "center {center}: {err}");
        }
    }

    #[test]
    fn canonicalize_is_idempotent_and_norm_stable() {
        let mps = random_mps(5, 2, 3, 2);
        let norm0 = inner(&mps, &mps).unwrap().re.sqrt();
        let once = mps.canonicalize(0).unwrap();
        let norm1 = inner(&once, &once).unwrap().re.sqrt();
        assert!((norm0 - norm1).abs() < 1e-12 * norm0);
        let twice = once.canonicalize(0).unwrap();
        for (a, b) in once.tensors().iter().zip(twice.tensors()) {
            let diff: f64 = a
                .data()
                .iter()
                .zip(b.data().iter())
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(diff < 1e-12 * norm0);
        }
        // the last site in canonical form carries the whole norm
        assert!((once.tensor(0).norm() - norm0).abs() < 1e-12 * norm0);
    }

    #[test]
    fn canonical_isometry_invariants() {
        let mps = random_mps(4, 2, 3, 3).canonicalize(2).unwrap();
        // left of center: contracting with own conjugate over (left bond,
        // phys) gives the identity on the right bond
        for i in 0..2 {
            let t = mps.tensor(i);
            let gram = crate::tensor::contract(
                &t.conj().relabeled(&labels::bond(i + 1), "x").unwrap(),
                t,
                &[
                    (labels::bond(i).as_str(), labels::bond(i).as_str()),
                    (labels::phys(i).as_str(), labels::phys(i).as_str()),
                ],
            )
            .unwrap();
            let dim = t.dims()[2];
            for a in 0..dim {
                for b in 0..dim {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((gram.get(&[a, b]) - c(want, 0.0)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn inner_normalized_is_one() {
        let mps = random_mps(4, 2, 2, 4);
        let norm = inner(&mps, &mps).unwrap().re.sqrt();
        let unit = mps.scaled(c(1.0 / norm, 0.0));
        assert!((inner(&unit, &unit).unwrap().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inner_matches_dense_dot() {
        let a = random_mps(4, 2, 2, 5);
        let b = random_mps(4, 2, 2, 6);
        let got = inner(&a, &b).unwrap();
        let da = a.to_dense().unwrap();
        let db = b.to_dense().unwrap();
        let want: C64 = da.iter().zip(db.iter()).map(|(x, y)| x.conj() * y).sum();
        assert!((got - want).norm() < 1e-12);
    }

    #[test]
    fn truncation_reports_discarded_weight() {
        let mps = random_mps(5, 2, 4, 7);
        let (small, discarded) = mps.truncated(2, 0.0).unwrap();
        assert!(small.max_bond() <= 2);
        assert!(discarded > 0.0);
        // fidelity loss of the normalized states matches the reported weight
        // to first order
        let overlap = inner(&small, &mps).unwrap().norm();
        let fidelity = overlap / (small.norm() * mps.norm());
        assert!(fidelity > 0.5, "fidelity {fidelity}");
    }

    #[test]
    fn center_out_of_range() {
        let mps = random_mps(3, 2, 2, 8);
        assert!(matches!(
            mps.canonicalize(3),
            Err(MpsError::CenterOutOfRange { .. })
        ));
    }

    #[test]
    fn from_tensors_validates_structure() {
        let bad = vec![LabeledTensor::from_fn(
            &[labels::bond(0), labels::phys(0), labels::bond(1)],
            &[2, 2, 1],
            |_| c(1.0, 0.0),
        )
        .unwrap()];
        assert!(matches!(
            MatrixProductState::from_tensors(bad),
            Err(MpsError::BoundaryBond { .. })
        ));

        let mismatched = vec![
            LabeledTensor::from_fn(
                &[labels::bond(0), labels::phys(0), labels::bond(1)],
                &[1, 2, 3],
                |_| c(1.0, 0.0),
            )
            .unwrap(),
            LabeledTensor::from_fn(
                &[labels::bond(1), labels::phys(1), labels::bond(2)],
                &[2, 2, 1],
                |_| c(1.0, 0.0),
            )
            .unwrap(),
        ];
        assert!(matches!(
            MatrixProductState::from_tensors(mismatched),
            Err(MpsError::BondMismatch { .. })
        ));

        let misnamed = vec![LabeledTensor::from_fn(&["a", "b", "d"], &[1, 2, 1], |_| {
            c(1.0, 0.0)
        })
        .unwrap()];
        assert!(matches!(
            MatrixProductState::from_tensors(misnamed),
            Err(MpsError::SiteLabels { .. })
        ));

        assert!(matches!(
            MatrixProductState::from_tensors(vec![]),
            Err(MpsError::Empty)
        ));
    }

    #[test]
    fn inner_shape_mismatch() {
        let a = random_mps(3, 2, 2, 9);
        let b = random_mps(4, 2, 2, 10);
        assert!(matches!(inner(&a, &b), Err(MpsError::ShapeMismatch(_))));
    }
}
