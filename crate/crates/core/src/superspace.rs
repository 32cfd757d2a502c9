//! Vectorization of density matrices and the superspace site layouts.
//!
//! A density matrix on `N` spins becomes a vector on `2N` two-level
//! superspace sites. Two layouts are supported: the interleaved `(RL)^N`
//! ordering keeps each site's primed (right-action) and unprimed
//! (left-action) legs adjacent, while the blocked `R^N L^N` ordering puts
//! all primed legs before all unprimed ones. Operators that multiply the
//! density matrix from the left act on unprimed legs unchanged; operators
//! multiplying from the right act transposed on primed legs.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels;
use crate::mpo::{MpoError, OpTable, OperatorString};
use crate::mps::{MatrixProductState, MpsError};
use crate::tensor::{LabeledTensor, TensorError};

/// Largest physical chain for which the blocked ordering's exact `vec(I)`
/// is constructed; its interior bonds grow as `2^min(k, 2N-k)`.
const RNLN_IVEC_LIMIT: usize = 11;

#[derive(Debug, Error)]
pub enum SuperspaceError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("vector length {len} is not a perfect square of dimension {dim}")]
    BadLength { len: usize, dim: usize },

    #[error("physical site {site} out of range 1..={len}")]
    SiteOutOfRange { site: usize, len: usize },

    #[error("unknown base operator `{0}`")]
    UnknownOperator(String),

    #[error("two factors land on superspace site {0}; pre-compose them into one operator")]
    OverlappingFactors(usize),

    #[error("exact vec(I) under the blocked ordering is limited to {limit} sites, got {n}")]
    IvecTooLarge { n: usize, limit: usize },

    #[error(transparent)]
    Mps(#[from] MpsError),

    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error(transparent)]
    Mpo(#[from] MpoError),
}

/// Superspace site layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingKind {
    /// Interleaved `(RL)^N`: physical site `i` maps to the adjacent pair
    /// `(2i-1, 2i)` with the primed leg first.
    Rln,
    /// Blocked `R^N L^N`: primed legs on sites `1..=N`, unprimed legs on
    /// `N+1..=2N`.
    Rnln,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingScheme {
    pub kind: OrderingKind,
    pub n_phys: usize,
}

impl OrderingScheme {
    pub fn new(kind: OrderingKind, n_phys: usize) -> Self {
        Self { kind, n_phys }
    }

    pub fn rln(n_phys: usize) -> Self {
        Self::new(OrderingKind::Rln, n_phys)
    }

    pub fn rnln(n_phys: usize) -> Self {
        Self::new(OrderingKind::Rnln, n_phys)
    }

    pub fn n_super(&self) -> usize {
        2 * self.n_phys
    }

    /// Local dimensions of the superspace chain (all spin-1/2 here).
    pub fn phys_dims(&self) -> Vec<usize> {
        vec![2; self.n_super()]
    }

    fn check_site(&self, site: usize) -> Result<(), SuperspaceError> {
        if site == 0 || site > self.n_phys {
            Err(SuperspaceError::SiteOutOfRange {
                site,
                len: self.n_phys,
            })
        } else {
            Ok(())
        }
    }

    /// 1-based superspace site carrying the primed (right-action) leg of
    /// 1-based physical site `i`.
    pub fn primed_site(&self, i: usize) -> Result<usize, SuperspaceError> {
        self.check_site(i)?;
        Ok(match self.kind {
            OrderingKind::Rln => 2 * i - 1,
            OrderingKind::Rnln => i,
        })
    }

    /// 1-based superspace site carrying the unprimed (left-action) leg.
    pub fn unprimed_site(&self, i: usize) -> Result<usize, SuperspaceError> {
        self.check_site(i)?;
        Ok(match self.kind {
            OrderingKind::Rln => 2 * i,
            OrderingKind::Rnln => self.n_phys + i,
        })
    }

    /// Permutation from the superspace chain's dense index (site 1 most
    /// significant) to the column-stacked `vec` index. Only sensible for
    /// small chains.
    pub fn superspace_to_vec_perm(&self) -> Vec<usize> {
        let n = self.n_phys;
        let n_super = self.n_super();
        let dim = 1usize << n_super;
        let mut perm = vec![0usize; dim];
        // Positions (0-based from the most significant bit) of each leg in
        // the superspace ordering.
        let mut primed_pos = vec![0usize; n];
        let mut unprimed_pos = vec![0usize; n];
        for i in 1..=n {
            primed_pos[i - 1] = self.primed_site(i).unwrap() - 1;
            unprimed_pos[i - 1] = self.unprimed_site(i).unwrap() - 1;
        }
        for s in 0..dim {
            let bit = |pos: usize| (s >> (n_super - 1 - pos)) & 1;
            let mut col = 0usize; // primed multi-index, sigma'_1 most significant
            let mut row = 0usize;
            for i in 0..n {
                col = (col << 1) | bit(primed_pos[i]);
                row = (row << 1) | bit(unprimed_pos[i]);
            }
            perm[s] = (col << n) | row;
        }
        perm
    }
}

/// Which side of the density matrix an operator multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Left multiplication `A rho`.
    L,
    /// Right multiplication `rho A`.
    R,
}

impl Side {
    pub fn suffix(&self) -> &'static str {
        match self {
            Side::L => "L",
            Side::R => "R",
        }
    }
}

/// A named single-site operator applied to one side of the density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SideOp {
    /// 1-based physical site.
    pub site: usize,
    /// Base operator name, resolved in the spin-1/2 table by default.
    pub name: String,
    pub side: Side,
}

impl SideOp {
    pub fn new(site: usize, name: impl Into<String>, side: Side) -> Self {
        Self {
            site,
            name: name.into(),
            side,
        }
    }
}

/// Column-stacking vectorization: `vec(|i><j|) = |j> (x) |i>`.
pub fn vectorize(m: &Array2<C64>) -> Result<Array1<C64>, SuperspaceError> {
    if m.nrows() != m.ncols() {
        return Err(SuperspaceError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(Array1::from_iter(m.t().iter().copied()))
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &Array1<C64>, d: usize) -> Result<Array2<C64>, SuperspaceError> {
    if v.len() != d * d {
        return Err(SuperspaceError::BadLength { len: v.len(), dim: d });
    }
    Ok(Array2::from_shape_fn((d, d), |(i, j)| v[j * d + i]))
}

/// Map a side operator to its superspace site and matrix using the standard
/// spin-1/2 base alphabet.
pub fn map_side_op(
    op: &SideOp,
    scheme: &OrderingScheme,
) -> Result<(usize, Array2<C64>), SuperspaceError> {
    map_side_op_with(op, scheme, &OpTable::spin_half())
}

/// Same as [`map_side_op`] with a caller-supplied base alphabet. Left
/// multiplication places the matrix unchanged on the unprimed leg; right
/// multiplication places its transpose on the primed leg.
pub fn map_side_op_with(
    op: &SideOp,
    scheme: &OrderingScheme,
    base: &OpTable,
) -> Result<(usize, Array2<C64>), SuperspaceError> {
    let matrix = base
        .get(&op.name)
        .ok_or_else(|| SuperspaceError::UnknownOperator(op.name.clone()))?;
    match op.side {
        Side::L => Ok((scheme.unprimed_site(op.site)?, matrix.clone())),
        Side::R => Ok((scheme.primed_site(op.site)?, matrix.t().to_owned())),
    }
}

/// Superspace alphabet derived from a base table: for every base name `A`,
/// `AL` is the matrix itself (unprimed legs) and `AR` its transpose (primed
/// legs).
pub fn superspace_table(base: &OpTable) -> OpTable {
    let mut table = OpTable::new();
    for name in base.names().map(str::to_owned).collect::<Vec<_>>() {
        let m = base.get(&name).unwrap();
        table.register(format!("{name}L"), m.clone()).unwrap();
        table.register(format!("{name}R"), m.t().to_owned()).unwrap();
    }
    table
}

/// Assemble side operators into a superspace [`OperatorString`], sorting the
/// factors by their superspace site.
pub fn side_string(
    scheme: &OrderingScheme,
    coefficient: C64,
    ops: &[SideOp],
) -> Result<OperatorString, SuperspaceError> {
    let mut factors: Vec<(usize, String)> = Vec::with_capacity(ops.len());
    for op in ops {
        let site = match op.side {
            Side::L => scheme.unprimed_site(op.site)?,
            Side::R => scheme.primed_site(op.site)?,
        };
        factors.push((site, format!("{}{}", op.name, op.side.suffix())));
    }
    factors.sort_by_key(|(site, _)| *site);
    for w in factors.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(SuperspaceError::OverlappingFactors(w[0].0));
        }
    }
    Ok(OperatorString::new(coefficient, factors)?)
}

/// The maximally mixed start vector `vec(I)` as a superspace MPS.
///
/// Under the interleaved ordering this is a product over physical sites of
/// the local `vec(I_2)`, with bond 2 inside each pair and bond 1 between
/// pairs. Under the blocked ordering the state is inherently long-range and
/// interior bonds grow exponentially toward the middle, so it is only
/// constructed for small chains.
pub fn make_ivec(scheme: &OrderingScheme) -> Result<MatrixProductState, SuperspaceError> {
    let n = scheme.n_phys;
    match scheme.kind {
        OrderingKind::Rln => {
            let mut tensors = Vec::with_capacity(2 * n);
            for i in 0..n {
                let primed = 2 * i;
                let unprimed = 2 * i + 1;
                tensors.push(LabeledTensor::from_fn(
                    &[
                        labels::bond(primed),
                        labels::phys(primed),
                        labels::bond(primed + 1),
                    ],
                    &[1, 2, 2],
                    |ix| {
                        if ix[1] == ix[2] {
                            C64::new(1.0, 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    },
                )?);
                tensors.push(LabeledTensor::from_fn(
                    &[
                        labels::bond(unprimed),
                        labels::phys(unprimed),
                        labels::bond(unprimed + 1),
                    ],
                    &[2, 2, 1],
                    |ix| {
                        if ix[0] == ix[1] {
                            C64::new(1.0, 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    },
                )?);
            }
            Ok(MatrixProductState::from_tensors(tensors)?)
        }
        OrderingKind::Rnln => {
            if n > RNLN_IVEC_LIMIT {
                return Err(SuperspaceError::IvecTooLarge {
                    n,
                    limit: RNLN_IVEC_LIMIT,
                });
            }
            let mut tensors = Vec::with_capacity(2 * n);
            // Primed half: fan out, recording each primed value on the bond.
            for k in 0..n {
                let left = 1usize << k;
                let right = 1usize << (k + 1);
                tensors.push(LabeledTensor::from_fn(
                    &[labels::bond(k), labels::phys(k), labels::bond(k + 1)],
                    &[left, 2, right],
                    |ix| {
                        if ix[2] == ix[0] * 2 + ix[1] {
                            C64::new(1.0, 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    },
                )?);
            }
            // Unprimed half: consume the recorded values most significant
            // first, requiring each unprimed leg to match.
            for j in 0..n {
                let site = n + j;
                let left = 1usize << (n - j);
                let right = 1usize << (n - j - 1);
                tensors.push(LabeledTensor::from_fn(
                    &[labels::bond(site), labels::phys(site), labels::bond(site + 1)],
                    &[left, 2, right],
                    |ix| {
                        let msb = ix[0] >> (n - j - 1);
                        let rest = ix[0] & (right - 1);
                        if msb == ix[1] && rest == ix[2] {
                            C64::new(1.0, 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    },
                )?);
            }
            Ok(MatrixProductState::from_tensors(tensors)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::inner;
    use ndarray::array;
    use ndarray::linalg::kron;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_matrix(d: usize, seed: u64) -> Array2<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((d, d), |_| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn vectorize_stacks_columns() {
        let m = array![[c(1.0, 0.0), c(2.0, 0.0)], [c(3.0, 0.0), c(4.0, 0.0)]];
        let v = vectorize(&m).unwrap();
        // (a, c, b, d)
        assert_eq!(v.to_vec(), vec![c(1.0, 0.0), c(3.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);

        let eye = Array2::<C64>::eye(2);
        assert_eq!(
            vectorize(&eye).unwrap().to_vec(),
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]
        );
    }

    #[test]
    fn vectorize_recipe_holds() {
        // vec(A rho B) = (B^T (x) A) vec(rho)
        for seed in 0..20 {
            let a = random_matrix(2, 3 * seed + 1);
            let rho = random_matrix(2, 3 * seed + 2);
            let b = random_matrix(2, 3 * seed + 3);
            let lhs = vectorize(&a.dot(&rho).dot(&b)).unwrap();
            let rhs = kron(&b.t().to_owned(), &a).dot(&vectorize(&rho).unwrap());
            let err = lhs
                .iter()
                .zip(rhs.iter())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-13);
        }
    }

    #[test]
    fn unvectorize_roundtrip() {
        let m = random_matrix(4, 77);
        let back = unvectorize(&vectorize(&m).unwrap(), 4).unwrap();
        assert_eq!(m, back);
        assert!(matches!(
            unvectorize(&vectorize(&m).unwrap(), 3),
            Err(SuperspaceError::BadLength { .. })
        ));
        let rect = Array2::<C64>::zeros((2, 3));
        assert!(matches!(
            vectorize(&rect),
            Err(SuperspaceError::NotSquare { .. })
        ));
    }

    #[test]
    fn site_layouts() {
        let rln = OrderingScheme::rln(3);
        assert_eq!(rln.primed_site(1).unwrap(), 1);
        assert_eq!(rln.unprimed_site(1).unwrap(), 2);
        assert_eq!(rln.primed_site(3).unwrap(), 5);
        assert_eq!(rln.unprimed_site(3).unwrap(), 6);
        let rnln = OrderingScheme::rnln(3);
        assert_eq!(rnln.primed_site(2).unwrap(), 2);
        assert_eq!(rnln.unprimed_site(2).unwrap(), 5);
        assert!(matches!(
            rln.primed_site(4),
            Err(SuperspaceError::SiteOutOfRange { .. })
        ));
    }

    #[test]
    fn map_side_op_examples() {
        let scheme = OrderingScheme::rln(2);
        let (site, m) = map_side_op(&SideOp::new(1, "Sx", Side::L), &scheme).unwrap();
        assert_eq!(site, 2);
        let want = crate::pauli::sigma_x().mapv(|z| z * 0.5);
        assert_eq!(m, want);

        // right multiplication transposes: (sigma-)^T = sigma+
        let (site, m) = map_side_op(&SideOp::new(1, "Sm", Side::R), &scheme).unwrap();
        assert_eq!(site, 1);
        assert_eq!(m, crate::pauli::sigma_plus());

        assert!(matches!(
            map_side_op(&SideOp::new(1, "Bogus", Side::L), &scheme),
            Err(SuperspaceError::UnknownOperator(_))
        ));
    }

    #[test]
    fn rnln_perm_is_identity() {
        let scheme = OrderingScheme::rnln(3);
        let perm = scheme.superspace_to_vec_perm();
        assert!(perm.iter().enumerate().all(|(i, &p)| i == p));
    }

    #[test]
    fn rln_perm_interleaves() {
        let scheme = OrderingScheme::rln(2);
        let perm = scheme.superspace_to_vec_perm();
        // superspace order (s1', s1, s2', s2); vec order (s1', s2', s1, s2)
        for s in 0..16 {
            let bits = [(s >> 3) & 1, (s >> 2) & 1, (s >> 1) & 1, s & 1];
            let want = (bits[0] << 3) | (bits[2] << 2) | (bits[1] << 1) | bits[3];
            assert_eq!(perm[s], want);
        }
    }

    #[test]
    fn ivec_single_site() {
        for scheme in [OrderingScheme::rln(1), OrderingScheme::rnln(1)] {
            let ivec = make_ivec(&scheme).unwrap();
            let dense = ivec.to_dense().unwrap();
            assert_eq!(
                dense.to_vec(),
                vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]
            );
        }
    }

    #[test]
    fn ivec_norm_and_canonical_invariance() {
        for scheme in [OrderingScheme::rln(3), OrderingScheme::rnln(3)] {
            let ivec = make_ivec(&scheme).unwrap();
            let norm_sq = inner(&ivec, &ivec).unwrap();
            assert!((norm_sq.re - 8.0).abs() < 1e-12, "{:?}", scheme.kind);
            let canon = ivec.canonicalize(2).unwrap();
            let overlap = inner(&canon, &ivec).unwrap();
            assert!((overlap.re - 8.0).abs() < 1e-10);
            assert!(overlap.im.abs() < 1e-12);
        }
    }

    #[test]
    fn ivec_matches_vectorized_identity() {
        for scheme in [OrderingScheme::rln(3), OrderingScheme::rnln(3)] {
            let ivec = make_ivec(&scheme).unwrap();
            let dense = ivec.to_dense().unwrap();
            let perm = scheme.superspace_to_vec_perm();
            let want = vectorize(&Array2::<C64>::eye(8)).unwrap();
            for s in 0..dense.len() {
                assert_eq!(dense[s], want[perm[s]], "scheme {:?}", scheme.kind);
            }
        }
    }

    #[test]
    fn ivec_pairs_with_trace() {
        // <Ivec | vec(rho)> = tr(rho) for random density-like matrices
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for scheme in [OrderingScheme::rln(3), OrderingScheme::rnln(3)] {
            let ivec = make_ivec(&scheme).unwrap();
            let dense_ivec = ivec.to_dense().unwrap();
            let perm = scheme.superspace_to_vec_perm();
            let rho = Array2::from_shape_fn((8, 8), |_| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let vec_rho = vectorize(&rho).unwrap();
            let dot: C64 = (0..dense_ivec.len())
                .map(|s| dense_ivec[s].conj() * vec_rho[perm[s]])
                .sum();
            let trace: C64 = rho.diag().sum();
            assert!((dot - trace).norm() < 1e-12);
        }
    }

    #[test]
    fn rnln_ivec_guard() {
        assert!(matches!(
            make_ivec(&OrderingScheme::rnln(12)),
            Err(SuperspaceError::IvecTooLarge { .. })
        ));
    }

    #[test]
    fn side_string_orders_and_rejects_overlap() {
        let scheme = OrderingScheme::rln(2);
        let term = side_string(
            &scheme,
            c(1.0, 0.0),
            &[
                SideOp::new(2, "Sz", Side::L),
                SideOp::new(1, "Sx", Side::L),
            ],
        )
        .unwrap();
        assert_eq!(term.factors[0], (2, "SxL".to_owned()));
        assert_eq!(term.factors[1], (4, "SzL".to_owned()));

        assert!(matches!(
            side_string(
                &scheme,
                c(1.0, 0.0),
                &[
                    SideOp::new(1, "Sx", Side::L),
                    SideOp::new(1, "Sz", Side::L),
                ],
            ),
            Err(SuperspaceError::OverlappingFactors(_))
        ));
    }
}
