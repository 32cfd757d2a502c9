//! Matrix product operators and the symbolic sum-of-strings builder.
//!
//! Site `i` of an MPO is a rank-4 tensor labeled
//! `(w{i}, po{i}, pi{i}, w{i+1})` with `po` the outgoing (row) and `pi` the
//! incoming (column) physical index. Operators are usually assembled from
//! [`OperatorString`] terms through [`MpoBuilder`], which compiles the sum
//! into a finite-state automaton: one bond state per distinct remaining
//! suffix of factors, so the bond dimension is independent of any state's
//! bond dimension and grows only with the variety of terms.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::{Array2, IxDyn};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::labels;
use crate::mps::{MatrixProductState, MpsError};
use crate::pauli;
use crate::tensor::{contract, svd_truncate, LabeledTensor, TensorError};

const DENSE_LIMIT: usize = 1 << 24;

#[derive(Debug, Error)]
pub enum MpoError {
    #[error("operator chain must contain at least one site")]
    Empty,

    #[error("builder holds no terms")]
    NoTerms,

    #[error("unknown operator name `{0}`")]
    UnknownOperator(String),

    #[error("operator `{name}` is {found}x{found} but site {site} has dimension {expected}")]
    OperatorDim {
        name: String,
        site: usize,
        expected: usize,
        found: usize,
    },

    #[error("operator matrix `{0}` must be square")]
    NotSquare(String),

    #[error("operator `{0}` is already registered")]
    DuplicateOperator(String),

    #[error("site {site} out of range 1..={len}")]
    SiteOutOfRange { site: usize, len: usize },

    #[error("factor sites must be strictly increasing")]
    NonIncreasingSites,

    #[error("term has no factors")]
    EmptyTerm,

    #[error("site {site}: expected labels {expected:?}, found {found:?}")]
    SiteLabels {
        site: usize,
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("boundary bond at site {site} has extent {extent}, expected 1")]
    BoundaryBond { site: usize, extent: usize },

    #[error("bond between sites {left} and {right} has mismatched extents")]
    BondMismatch { left: usize, right: usize },

    #[error("physical dimensions at site {site} differ: out {out}, in {inp}")]
    PhysDims { site: usize, out: usize, inp: usize },

    #[error("operator chains have incompatible shapes ({0})")]
    ShapeMismatch(String),

    #[error("dense reconstruction of a {dim}x{dim} matrix exceeds the supported size")]
    DenseTooLarge { dim: usize },

    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error(transparent)]
    Mps(#[from] MpsError),
}

/// Open-boundary matrix product operator.
#[derive(Clone, Debug)]
pub struct MatrixProductOperator {
    tensors: Vec<LabeledTensor>,
}

impl MatrixProductOperator {
    pub fn from_tensors(tensors: Vec<LabeledTensor>) -> Result<Self, MpoError> {
        if tensors.is_empty() {
            return Err(MpoError::Empty);
        }
        let n = tensors.len();
        let mut canonical = Vec::with_capacity(n);
        for (i, t) in tensors.into_iter().enumerate() {
            let expected = [
                labels::mpo_bond(i),
                labels::mpo_out(i),
                labels::mpo_in(i),
                labels::mpo_bond(i + 1),
            ];
            let mut found: Vec<String> = t.labels().to_vec();
            found.sort();
            let mut want = expected.to_vec();
            want.sort();
            if found != want {
                return Err(MpoError::SiteLabels {
                    site: i,
                    expected: expected.to_vec(),
                    found: t.labels().to_vec(),
                });
            }
            canonical.push(t.permuted(&expected)?);
        }
        let mpo = Self { tensors: canonical };
        mpo.validate()?;
        Ok(mpo)
    }

    fn validate(&self) -> Result<(), MpoError> {
        let n = self.len();
        if self.tensors[0].dims()[0] != 1 {
            return Err(MpoError::BoundaryBond {
                site: 0,
                extent: self.tensors[0].dims()[0],
            });
        }
        if self.tensors[n - 1].dims()[3] != 1 {
            return Err(MpoError::BoundaryBond {
                site: n - 1,
                extent: self.tensors[n - 1].dims()[3],
            });
        }
        for (i, t) in self.tensors.iter().enumerate() {
            if t.dims()[1] != t.dims()[2] {
                return Err(MpoError::PhysDims {
                    site: i,
                    out: t.dims()[1],
                    inp: t.dims()[2],
                });
            }
            if i + 1 < n && t.dims()[3] != self.tensors[i + 1].dims()[0] {
                return Err(MpoError::BondMismatch { left: i, right: i + 1 });
            }
        }
        Ok(())
    }

    /// Identity operator on the given local dimensions.
    pub fn identity(phys_dims: &[usize]) -> Result<Self, MpoError> {
        if phys_dims.is_empty() {
            return Err(MpoError::Empty);
        }
        let tensors = phys_dims
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                LabeledTensor::from_fn(
                    &[
                        labels::mpo_bond(i),
                        labels::mpo_out(i),
                        labels::mpo_in(i),
                        labels::mpo_bond(i + 1),
                    ],
                    &[1, d, d, 1],
                    |ix| {
                        if ix[1] == ix[2] {
                            C64::new(1.0, 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    },
                )
                .expect("identity site tensor")
            })
            .collect();
        Ok(Self { tensors })
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

    pub fn phys_dims(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.dims()[1]).collect()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.len() - 1]
            .iter()
            .map(|t| t.dims()[3])
            .collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Conjugate transpose: conjugates every entry and swaps the outgoing
    /// and incoming physical indices site by site.
    pub fn dagger(&self) -> Self {
        let tensors = self
            .tensors
            .iter()
            .enumerate()
            .map(|(i, t)| {
                t.conj()
                    .relabeled(&labels::mpo_out(i), "#swap")
                    .and_then(|t| t.relabeled(&labels::mpo_in(i), &labels::mpo_out(i)))
                    .and_then(|t| t.relabeled("#swap", &labels::mpo_in(i)))
                    .and_then(|t| {
                        t.permuted(&[
                            labels::mpo_bond(i),
                            labels::mpo_out(i),
                            labels::mpo_in(i),
                            labels::mpo_bond(i + 1),
                        ])
                    })
                    .expect("dagger relabel")
            })
            .collect();
        Self { tensors }
    }

    /// Dense matrix with row (out) and column (in) multi-indices ordered
    /// with site 0 most significant.
    pub fn to_dense(&self) -> Result<Array2<C64>, MpoError> {
        let dim: usize = self.phys_dims().iter().product();
        if dim * dim > DENSE_LIMIT {
            return Err(MpoError::DenseTooLarge { dim });
        }
        let mut acc = self.tensors[0].clone();
        for i in 1..self.len() {
            let bond = labels::mpo_bond(i);
            acc = contract(&acc, &self.tensors[i], &[(bond.as_str(), bond.as_str())])?;
        }
        // acc labels: (w0, po0, pi0, po1, pi1, ..., w{n})
        let mut order = vec![labels::mpo_bond(0)];
        for i in 0..self.len() {
            order.push(labels::mpo_out(i));
        }
        for i in 0..self.len() {
            order.push(labels::mpo_in(i));
        }
        order.push(labels::mpo_bond(self.len()));
        let acc = acc.permuted(&order)?;
        let data = acc
            .into_data()
            .into_shape_with_order((dim, dim))
            .expect("contiguous reshape");
        Ok(data)
    }

    /// Compress bonds in place with the given relative cutoff, returning the
    /// total discarded weight.
    pub fn compress(&mut self, cutoff: f64) -> Result<f64, MpoError> {
        let n = self.len();
        if n == 1 {
            return Ok(0.0);
        }
        // Right-orthogonalize, then truncate on a left-to-right sweep.
        for i in (1..n).rev() {
            let rows = [labels::mpo_bond(i)];
            let svd = svd_truncate(&self.tensors[i], &rows, usize::MAX, 0.0)?;
            let bond = labels::mpo_bond(i);
            let carry = svd.u.scaled_along(svd.bond_label(), &svd.s)?;
            let prev = contract(
                &self.tensors[i - 1],
                &carry,
                &[(bond.as_str(), bond.as_str())],
            )?
            .relabeled(svd.bond_label(), &bond)?;
            self.tensors[i - 1] = prev.permuted(&[
                labels::mpo_bond(i - 1),
                labels::mpo_out(i - 1),
                labels::mpo_in(i - 1),
                bond.clone(),
            ])?;
            self.tensors[i] = svd.v.relabeled(svd.bond_label(), &bond)?.permuted(&[
                bond.clone(),
                labels::mpo_out(i),
                labels::mpo_in(i),
                labels::mpo_bond(i + 1),
            ])?;
        }
        let mut discarded = 0.0;
        for i in 0..n - 1 {
            let rows = [labels::mpo_bond(i), labels::mpo_out(i), labels::mpo_in(i)];
            let svd = svd_truncate(&self.tensors[i], &rows, usize::MAX, cutoff)?;
            discarded += svd.discarded_weight;
            let bond = labels::mpo_bond(i + 1);
            let carry = svd.v.scaled_along(svd.bond_label(), &svd.s)?;
            let next = contract(&carry, &self.tensors[i + 1], &[(bond.as_str(), bond.as_str())])?
                .relabeled(svd.bond_label(), &bond)?;
            self.tensors[i + 1] = next.permuted(&[
                bond.clone(),
                labels::mpo_out(i + 1),
                labels::mpo_in(i + 1),
                labels::mpo_bond(i + 2),
            ])?;
            self.tensors[i] = svd.u.relabeled(svd.bond_label(), &bond)?.permuted(&[
                labels::mpo_bond(i),
                labels::mpo_out(i),
                labels::mpo_in(i),
                bond.clone(),
            ])?;
        }
        Ok(discarded)
    }
}

/// Exact product `a * b` (apply `b` first), with optional SVD compression.
///
/// Returns the product and the total discarded squared weight, which is zero
/// when `cutoff` is zero up to the always-on relative floor.
pub fn mpo_product(
    a: &MatrixProductOperator,
    b: &MatrixProductOperator,
    cutoff: f64,
) -> Result<(MatrixProductOperator, f64), MpoError> {
    if a.len() != b.len() || a.phys_dims() != b.phys_dims() {
        return Err(MpoError::ShapeMismatch(format!(
            "product: {} sites {:?} vs {} sites {:?}",
            a.len(),
            a.phys_dims(),
            b.len(),
            b.phys_dims()
        )));
    }
    let n = a.len();
    let mut tensors = Vec::with_capacity(n);
    for i in 0..n {
        // Relabel the two bond layers apart, contract a's column index with
        // b's row index, then fuse the paired bonds.
        let at = a
            .tensor(i)
            .relabeled(&labels::mpo_bond(i), "#aL")?
            .relabeled(&labels::mpo_bond(i + 1), "#aR")?
            .relabeled(&labels::mpo_in(i), "#mid")?;
        let bt = b
            .tensor(i)
            .relabeled(&labels::mpo_bond(i), "#bL")?
            .relabeled(&labels::mpo_bond(i + 1), "#bR")?
            .relabeled(&labels::mpo_out(i), "#mid")?;
        let prod = contract(&at, &bt, &[("#mid", "#mid")])?;
        let fused_left = prod.fuse(&["#aL", "#bL"], &labels::mpo_bond(i))?;
        let fused = fused_left.fuse(&["#aR", "#bR"], &labels::mpo_bond(i + 1))?;
        let site = fused.permuted(&[
            labels::mpo_bond(i),
            labels::mpo_out(i),
            labels::mpo_in(i),
            labels::mpo_bond(i + 1),
        ])?;
        tensors.push(site);
    }
    let mut mpo = MatrixProductOperator { tensors };
    mpo.validate()?;
    let discarded = mpo.compress(cutoff)?;
    Ok((mpo, discarded))
}

/// `conj(bra) . (op ket)` contracted exactly, without forming `op ket`.
pub fn overlap3(
    bra: &MatrixProductState,
    op: &MatrixProductOperator,
    ket: &MatrixProductState,
) -> Result<C64, MpoError> {
    if bra.len() != ket.len()
        || bra.len() != op.len()
        || bra.phys_dims() != ket.phys_dims()
        || bra.phys_dims() != op.phys_dims()
    {
        return Err(MpoError::ShapeMismatch(format!(
            "overlap3: bra {:?}, op {:?}, ket {:?}",
            bra.phys_dims(),
            op.phys_dims(),
            ket.phys_dims()
        )));
    }
    let mut env = LabeledTensor::from_vec(
        &[labels::bra_bond(0), labels::mpo_bond(0), labels::bond(0)],
        &[1, 1, 1],
        vec![C64::new(1.0, 0.0)],
    )?;
    for i in 0..ket.len() {
        env = advance_env(&env, bra, op, ket, i)?;
    }
    Ok(env.as_scalar().expect("scalar transfer contraction"))
}

/// Absorb site `i` of the bra/op/ket sandwich into a left environment with
/// labels `(cb{i}, w{i}, b{i})`, producing the environment at cut `i + 1`.
pub(crate) fn advance_env(
    env: &LabeledTensor,
    bra: &MatrixProductState,
    op: &MatrixProductOperator,
    ket: &MatrixProductState,
    i: usize,
) -> Result<LabeledTensor, MpoError> {
    let bond = labels::bond(i);
    let phys = labels::phys(i);
    let wbond = labels::mpo_bond(i);
    let out = labels::mpo_out(i);
    let inp = labels::mpo_in(i);

    // ket leg: env (cb, w, b) x ket (b, p, b') -> (cb, w, p, b')
    let mut env = contract(env, ket.tensor(i), &[(bond.as_str(), bond.as_str())])?;
    // mpo leg: contract w and p(in) -> (cb, b', po, w')
    env = contract(
        &env,
        op.tensor(i),
        &[(wbond.as_str(), wbond.as_str()), (phys.as_str(), inp.as_str())],
    )?;
    // bra leg: conj bra relabeled (cb, po, cb') -> (b', w', cb')
    let bra_site = bra
        .tensor(i)
        .conj()
        .relabeled(&bond, &labels::bra_bond(i))?
        .relabeled(&labels::bond(i + 1), &labels::bra_bond(i + 1))?
        .relabeled(&phys, &out)?;
    env = contract(
        &env,
        &bra_site,
        &[
            (labels::bra_bond(i).as_str(), labels::bra_bond(i).as_str()),
            (out.as_str(), out.as_str()),
        ],
    )?;
    // -> (b{i+1}, w{i+1}, cb{i+1}); reorder to (cb, w, b)
    env.permuted(&[
        labels::bra_bond(i + 1),
        labels::mpo_bond(i + 1),
        labels::bond(i + 1),
    ])
    .map_err(MpoError::from)
}

/// Registry of named single-site operator matrices.
#[derive(Clone, Debug, Default)]
pub struct OpTable {
    ops: BTreeMap<String, Array2<C64>>,
}

impl OpTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Standard spin-1/2 alphabet: `Id`, `Sx`, `Sy`, `Sz` (halved Paulis),
    /// the raising/lowering pair `Sp`, `Sm`, and their products `SpSm`,
    /// `SmSp`.
    pub fn spin_half() -> Self {
        let mut table = Self::new();
        let half = C64::new(0.5, 0.0);
        table.register("Id", pauli::id2()).unwrap();
        table.register("Sx", pauli::sigma_x().mapv(|z| z * half)).unwrap();
        table.register("Sy", pauli::sigma_y().mapv(|z| z * half)).unwrap();
        table.register("Sz", pauli::sigma_z().mapv(|z| z * half)).unwrap();
        table.register("Sp", pauli::sigma_plus()).unwrap();
        table.register("Sm", pauli::sigma_minus()).unwrap();
        table
            .register("SpSm", pauli::sigma_plus().dot(&pauli::sigma_minus()))
            .unwrap();
        table
            .register("SmSp", pauli::sigma_minus().dot(&pauli::sigma_plus()))
            .unwrap();
        table
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        matrix: Array2<C64>,
    ) -> Result<&mut Self, MpoError> {
        let name = name.into();
        if matrix.nrows() != matrix.ncols() {
            return Err(MpoError::NotSquare(name));
        }
        if self.ops.contains_key(&name) {
            return Err(MpoError::DuplicateOperator(name));
        }
        self.ops.insert(name, matrix);
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&Array2<C64>> {
        self.ops.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.ops.keys().map(|s| s.as_str())
    }
}

/// One weighted product of single-site operators, identity elsewhere.
/// Factor sites are 1-based and strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorString {
    pub coefficient: C64,
    pub factors: Vec<(usize, String)>,
}

impl OperatorString {
    pub fn new(
        coefficient: C64,
        factors: Vec<(usize, impl Into<String>)>,
    ) -> Result<Self, MpoError> {
        if factors.is_empty() {
            return Err(MpoError::EmptyTerm);
        }
        let factors: Vec<(usize, String)> =
            factors.into_iter().map(|(s, n)| (s, n.into())).collect();
        for window in factors.windows(2) {
            if window[1].0 <= window[0].0 {
                return Err(MpoError::NonIncreasingSites);
            }
        }
        if factors[0].0 == 0 {
            return Err(MpoError::SiteOutOfRange { site: 0, len: 0 });
        }
        Ok(Self {
            coefficient,
            factors,
        })
    }
}

/// Accumulates operator strings and compiles them into an exact MPO.
#[derive(Clone, Debug)]
pub struct MpoBuilder {
    phys_dims: Vec<usize>,
    table: OpTable,
    terms: Vec<OperatorString>,
}

/// Bond state of the compilation automaton: a term is either not started,
/// mid-flight with a known remaining suffix (0-based sites), or finished.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum BondState {
    Start,
    Flight(Vec<(usize, String)>),
    Done,
}

impl MpoBuilder {
    pub fn new(phys_dims: Vec<usize>, table: OpTable) -> Result<Self, MpoError> {
        if phys_dims.is_empty() {
            return Err(MpoError::Empty);
        }
        Ok(Self {
            phys_dims,
            table,
            terms: Vec::new(),
        })
    }

    /// Chain of `n` sites with uniform local dimension `d`.
    pub fn uniform(n: usize, d: usize, table: OpTable) -> Result<Self, MpoError> {
        Self::new(vec![d; n], table)
    }

    pub fn len(&self) -> usize {
        self.phys_dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, term: OperatorString) -> Result<&mut Self, MpoError> {
        let n = self.len();
        for (site, name) in &term.factors {
            if *site == 0 || *site > n {
                return Err(MpoError::SiteOutOfRange { site: *site, len: n });
            }
            let matrix = self
                .table
                .get(name)
                .ok_or_else(|| MpoError::UnknownOperator(name.clone()))?;
            let d = self.phys_dims[site - 1];
            if matrix.nrows() != d {
                return Err(MpoError::OperatorDim {
                    name: name.clone(),
                    site: *site,
                    expected: d,
                    found: matrix.nrows(),
                });
            }
        }
        self.terms.push(term);
        Ok(self)
    }

    /// Convenience wrapper building the [`OperatorString`] in place.
    pub fn add(
        &mut self,
        coefficient: C64,
        factors: &[(usize, &str)],
    ) -> Result<&mut Self, MpoError> {
        let term = OperatorString::new(
            coefficient,
            factors.iter().map(|&(s, n)| (s, n)).collect(),
        )?;
        self.add_term(term)
    }

    /// Phase of a term at cut `c` (cuts are 0-based; cut `c` sits left of
    /// site `c`).
    fn phase(term: &OperatorString, c: usize) -> BondState {
        let first = term.factors[0].0 - 1;
        let last = term.factors.last().unwrap().0 - 1;
        if c <= first {
            BondState::Start
        } else if c > last {
            BondState::Done
        } else {
            BondState::Flight(
                term.factors
                    .iter()
                    .filter(|(site, _)| site - 1 >= c)
                    .map(|(site, name)| (site - 1, name.clone()))
                    .collect(),
            )
        }
    }

    /// Compile the accumulated terms into an MPO whose dense form equals
    /// their sum exactly.
    pub fn compile(&self) -> Result<MatrixProductOperator, MpoError> {
        if self.terms.is_empty() {
            return Err(MpoError::NoTerms);
        }
        let n = self.len();

        let mut states: Vec<BTreeMap<BondState, usize>> = Vec::with_capacity(n + 1);
        for c in 0..=n {
            let set: BTreeSet<BondState> =
                self.terms.iter().map(|t| Self::phase(t, c)).collect();
            states.push(set.into_iter().zip(0..).map(|(s, i)| (s, i)).collect());
        }

        let mut tensors = Vec::with_capacity(n);
        for i in 0..n {
            let d = self.phys_dims[i];
            let rows = states[i].len();
            let cols = states[i + 1].len();
            let mut w = ndarray::ArrayD::<C64>::zeros(IxDyn(&[rows, d, d, cols]));

            // Shared transitions, one per incoming state.
            for (state, &row) in &states[i] {
                match state {
                    BondState::Start => {
                        if let Some(&col) = states[i + 1].get(&BondState::Start) {
                            add_identity(&mut w, row, col, d);
                        }
                    }
                    BondState::Done => {
                        if let Some(&col) = states[i + 1].get(&BondState::Done) {
                            add_identity(&mut w, row, col, d);
                        }
                    }
                    BondState::Flight(suffix) => {
                        let (site, name) = &suffix[0];
                        if *site == i {
                            let target = if suffix.len() == 1 {
                                BondState::Done
                            } else {
                                BondState::Flight(suffix[1..].to_vec())
                            };
                            let col = states[i + 1][&target];
                            let matrix = self.table.get(name).expect("validated on add");
                            add_block(&mut w, row, col, matrix, C64::new(1.0, 0.0));
                        } else if let Some(&col) = states[i + 1].get(state) {
                            add_identity(&mut w, row, col, d);
                        }
                    }
                }
            }

            // Term entries: the coefficient rides on the first factor.
            for term in &self.terms {
                let (first_site, first_name) = &term.factors[0];
                if first_site - 1 != i {
                    continue;
                }
                let row = states[i][&BondState::Start];
                let target = Self::phase(term, i + 1);
                let col = states[i + 1][&target];
                let matrix = self.table.get(first_name).expect("validated on add");
                add_block(&mut w, row, col, matrix, term.coefficient);
            }

            tensors.push(LabeledTensor::from_array(
                &[
                    labels::mpo_bond(i),
                    labels::mpo_out(i),
                    labels::mpo_in(i),
                    labels::mpo_bond(i + 1),
                ],
                w,
            )?);
        }
        MatrixProductOperator::from_tensors(tensors)
    }
}

fn add_identity(w: &mut ndarray::ArrayD<C64>, row: usize, col: usize, d: usize) {
    for k in 0..d {
        w[IxDyn(&[row, k, k, col])] += C64::new(1.0, 0.0);
    }
}

fn add_block(w: &mut ndarray::ArrayD<C64>, row: usize, col: usize, m: &Array2<C64>, c: C64) {
    for out in 0..m.nrows() {
        for inp in 0..m.ncols() {
            w[IxDyn(&[row, out, inp, col])] += c * m[(out, inp)];
        }
    }
}
