//! Dense complex tensors with named indices.
//!
//! A [`LabeledTensor`] owns a row-major array together with one unique name
//! per axis. Contractions are specified by label pairs instead of axis
//! positions, which keeps the higher-level chain algebra free of manual
//! bookkeeping. Internally a contraction permutes both operands into matrix
//! form and runs a single gemm.

use ndarray::{Array2, ArrayD, ArrayViewD, Axis, Dimension, IxDyn};
use ndarray_linalg::{JobSvd, SVDDCInto, QR};
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Singular values below this fraction of the largest one are always
/// discarded, so that isometries coming out of [`svd_truncate`] never carry
/// spurious near-null directions.
pub const SVD_REL_FLOOR: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("label `{0}` not found on tensor")]
    UnknownLabel(String),

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("extent mismatch contracting `{label_a}` (extent {extent_a}) with `{label_b}` (extent {extent_b})")]
    ExtentMismatch {
        label_a: String,
        extent_a: usize,
        label_b: String,
        extent_b: usize,
    },

    #[error("data length {found} does not match shape product {expected}")]
    DataLength { expected: usize, found: usize },

    #[error("index extents must be positive")]
    ZeroExtent,

    #[error("labels ({0}) and shape ({1}) have different ranks")]
    RankMismatch(usize, usize),

    #[error("row labels must be a nonempty proper subset of the tensor labels")]
    BadRowLabels,

    #[error("max_rank must be at least 1")]
    ZeroMaxRank,

    #[error("tensors carry different label sets")]
    LabelSetMismatch,

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

/// Dense complex tensor with uniquely named indices.
///
/// The data is always kept in standard (row-major) layout over the label
/// order, so that flattening and reshaping are well defined.
#[derive(Clone, Debug)]
pub struct LabeledTensor {
    labels: Vec<String>,
    data: ArrayD<C64>,
}

impl LabeledTensor {
    pub fn from_array<S: AsRef<str>>(
        labels: &[S],
        data: ArrayD<C64>,
    ) -> Result<Self, TensorError> {
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_owned()).collect();
        check_unique(&labels)?;
        if labels.len() != data.ndim() {
            return Err(TensorError::RankMismatch(labels.len(), data.ndim()));
        }
        if data.shape().iter().any(|&d| d == 0) {
            return Err(TensorError::ZeroExtent);
        }
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().into_owned()
        };
        Ok(Self { labels, data })
    }

    pub fn from_vec<S: AsRef<str>>(
        labels: &[S],
        dims: &[usize],
        values: Vec<C64>,
    ) -> Result<Self, TensorError> {
        let expected: usize = dims.iter().product();
        if values.len() != expected {
            return Err(TensorError::DataLength {
                expected,
                found: values.len(),
            });
        }
        let data = ArrayD::from_shape_vec(IxDyn(dims), values)
            .map_err(|_| TensorError::DataLength {
                expected,
                found: expected,
            })?;
        Self::from_array(labels, data)
    }

    pub fn zeros<S: AsRef<str>>(labels: &[S], dims: &[usize]) -> Result<Self, TensorError> {
        Self::from_array(labels, ArrayD::zeros(IxDyn(dims)))
    }

    pub fn from_fn<S: AsRef<str>>(
        labels: &[S],
        dims: &[usize],
        f: impl FnMut(&[usize]) -> C64,
    ) -> Result<Self, TensorError> {
        let mut f = f;
        let data = ArrayD::from_shape_fn(IxDyn(dims), |ix| f(ix.slice()));
        Self::from_array(labels, data)
    }

    /// Rank-0 tensor holding a single scalar.
    pub fn scalar(value: C64) -> Self {
        Self {
            labels: Vec::new(),
            data: ArrayD::from_elem(IxDyn(&[]), value),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims(&self) -> &[usize] {
        self.data.shape()
    }

    pub fn rank(&self) -> usize {
        self.labels.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &ArrayD<C64> {
        &self.data
    }

    pub fn view(&self) -> ArrayViewD<'_, C64> {
        self.data.view()
    }

    pub fn into_data(self) -> ArrayD<C64> {
        self.data
    }

    pub fn axis_of(&self, label: &str) -> Result<usize, TensorError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| TensorError::UnknownLabel(label.to_owned()))
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn extent(&self, label: &str) -> Result<usize, TensorError> {
        Ok(self.data.shape()[self.axis_of(label)?])
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        self.data[IxDyn(index)]
    }

    /// Scalar value of a tensor whose every extent is 1 (or rank 0).
    pub fn as_scalar(&self) -> Option<C64> {
        if self.data.len() == 1 {
            self.data.iter().next().copied()
        } else {
            None
        }
    }

    pub fn relabeled(&self, from: &str, to: &str) -> Result<Self, TensorError> {
        let axis = self.axis_of(from)?;
        let mut labels = self.labels.clone();
        labels[axis] = to.to_owned();
        check_unique(&labels)?;
        Ok(Self {
            labels,
            data: self.data.clone(),
        })
    }

    /// Replace all labels at once, keeping the axis order.
    pub fn with_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self, TensorError> {
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_owned()).collect();
        if labels.len() != self.rank() {
            return Err(TensorError::RankMismatch(labels.len(), self.rank()));
        }
        check_unique(&labels)?;
        Ok(Self {
            labels,
            data: self.data.clone(),
        })
    }

    /// Copy with axes rearranged into the given label order.
    pub fn permuted<S: AsRef<str>>(&self, order: &[S]) -> Result<Self, TensorError> {
        if order.len() != self.rank() {
            return Err(TensorError::RankMismatch(order.len(), self.rank()));
        }
        let perm: Vec<usize> = order
            .iter()
            .map(|l| self.axis_of(l.as_ref()))
            .collect::<Result<_, _>>()?;
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if seen[p] {
                return Err(TensorError::DuplicateLabel(order[p].as_ref().to_owned()));
            }
            seen[p] = true;
        }
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let data = self
            .data
            .view()
            .permuted_axes(IxDyn(&perm))
            .as_standard_layout()
            .into_owned();
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        Ok(Self { labels, data })
    }

    pub fn conj(&self) -> Self {
        Self {
            labels: self.labels.clone(),
            data: self.data.mapv(|z| z.conj()),
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            labels: self.labels.clone(),
            data: self.data.mapv(|z| z * c),
        }
    }

    /// Multiply slices along `label` by per-index weights (used to absorb
    /// singular values into an isometry).
    pub fn scaled_along(&self, label: &str, weights: &[f64]) -> Result<Self, TensorError> {
        let axis = self.axis_of(label)?;
        if weights.len() != self.data.shape()[axis] {
            return Err(TensorError::DataLength {
                expected: self.data.shape()[axis],
                found: weights.len(),
            });
        }
        let mut data = self.data.clone();
        for (k, mut lane) in data.axis_iter_mut(Axis(axis)).enumerate() {
            lane.mapv_inplace(|z| z * weights[k]);
        }
        Ok(Self {
            labels: self.labels.clone(),
            data,
        })
    }

    /// `self + c * other`; `other` may carry the same labels in any order.
    pub fn add_scaled(&self, c: C64, other: &Self) -> Result<Self, TensorError> {
        let other = other.permuted(&self.labels)?;
        if other.dims() != self.dims() {
            return Err(TensorError::LabelSetMismatch);
        }
        let mut out = self.clone();
        out.data.zip_mut_with(&other.data, |a, &b| *a += c * b);
        Ok(out)
    }

    /// In-place `self += c * other`, requiring identical label order.
    pub(crate) fn axpy(&mut self, c: C64, other: &Self) {
        debug_assert_eq!(self.labels, other.labels);
        self.data.zip_mut_with(&other.data, |a, &b| *a += c * b);
    }

    pub(crate) fn scale_assign(&mut self, c: C64) {
        self.data.mapv_inplace(|z| z * c);
    }

    /// `sum conj(self) * other` over all entries; `other` may carry the same
    /// labels in any order.
    pub fn vdot(&self, other: &Self) -> Result<C64, TensorError> {
        if self.labels == other.labels {
            if self.dims() != other.dims() {
                return Err(TensorError::LabelSetMismatch);
            }
            let mut acc = C64::new(0.0, 0.0);
            ndarray::Zip::from(&self.data)
                .and(&other.data)
                .for_each(|a, b| acc += a.conj() * b);
            Ok(acc)
        } else {
            let other = other.permuted(&self.labels)?;
            self.vdot(&other)
        }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Fuse a group of labels (in the given order) into one new label placed
    /// at the front.
    pub fn fuse<S: AsRef<str>>(&self, group: &[S], new_label: &str) -> Result<Self, TensorError> {
        if group.is_empty() {
            return Err(TensorError::BadRowLabels);
        }
        let rest: Vec<&String> = self
            .labels
            .iter()
            .filter(|l| !group.iter().any(|g| g.as_ref() == l.as_str()))
            .collect();
        if rest.len() + group.len() != self.rank() {
            return Err(TensorError::LabelSetMismatch);
        }
        let mut order: Vec<String> = group.iter().map(|g| g.as_ref().to_owned()).collect();
        order.extend(rest.iter().map(|l| (*l).clone()));
        let permuted = self.permuted(&order)?;
        let fused: usize = permuted.dims()[..group.len()].iter().product();
        let mut dims = vec![fused];
        dims.extend_from_slice(&permuted.dims()[group.len()..]);
        let mut labels = vec![new_label.to_owned()];
        labels.extend(permuted.labels[group.len()..].iter().cloned());
        check_unique(&labels)?;
        let data = permuted
            .data
            .into_shape_with_order(IxDyn(&dims))
            .expect("fused reshape of contiguous data");
        Ok(Self { labels, data })
    }
}

fn check_unique(labels: &[String]) -> Result<(), TensorError> {
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(TensorError::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

/// Contract `a` and `b` over the given `(label_a, label_b)` pairs.
///
/// The result carries the uncontracted labels of `a` followed by those of
/// `b`; an empty pair list yields the outer product.
pub fn contract(
    a: &LabeledTensor,
    b: &LabeledTensor,
    pairs: &[(&str, &str)],
) -> Result<LabeledTensor, TensorError> {
    let mut con_a = Vec::with_capacity(pairs.len());
    let mut con_b = Vec::with_capacity(pairs.len());
    for &(la, lb) in pairs {
        let ax_a = a.axis_of(la)?;
        let ax_b = b.axis_of(lb)?;
        if con_a.contains(&ax_a) {
            return Err(TensorError::DuplicateLabel(la.to_owned()));
        }
        if con_b.contains(&ax_b) {
            return Err(TensorError::DuplicateLabel(lb.to_owned()));
        }
        if a.dims()[ax_a] != b.dims()[ax_b] {
            return Err(TensorError::ExtentMismatch {
                label_a: la.to_owned(),
                extent_a: a.dims()[ax_a],
                label_b: lb.to_owned(),
                extent_b: b.dims()[ax_b],
            });
        }
        con_a.push(ax_a);
        con_b.push(ax_b);
    }

    let free_a: Vec<usize> = (0..a.rank()).filter(|ax| !con_a.contains(ax)).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|ax| !con_b.contains(ax)).collect();

    let mut out_labels: Vec<String> = free_a.iter().map(|&ax| a.labels[ax].clone()).collect();
    out_labels.extend(free_b.iter().map(|&ax| b.labels[ax].clone()));
    check_unique(&out_labels)?;

    let mut out_dims: Vec<usize> = free_a.iter().map(|&ax| a.dims()[ax]).collect();
    out_dims.extend(free_b.iter().map(|&ax| b.dims()[ax]));

    let m: usize = free_a.iter().map(|&ax| a.dims()[ax]).product();
    let k: usize = con_a.iter().map(|&ax| a.dims()[ax]).product();
    let n: usize = free_b.iter().map(|&ax| b.dims()[ax]).product();

    let mut perm_a = free_a;
    perm_a.extend_from_slice(&con_a);
    let mut perm_b = con_b.clone();
    perm_b.extend_from_slice(&free_b);

    let lhs = a
        .data
        .view()
        .permuted_axes(IxDyn(&perm_a))
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((m, k))
        .expect("contiguous reshape");
    let rhs = b
        .data
        .view()
        .permuted_axes(IxDyn(&perm_b))
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((k, n))
        .expect("contiguous reshape");

    let product = lhs.dot(&rhs);
    let data = product
        .into_shape_with_order(IxDyn(&out_dims))
        .expect("contiguous reshape");
    Ok(LabeledTensor {
        labels: out_labels,
        data,
    })
}

/// Truncated singular value decomposition of a labeled tensor.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// Isometry carrying the row labels plus the new bond label.
    pub u: LabeledTensor,
    /// Singular values, descending and non-negative.
    pub s: Vec<f64>,
    /// Isometry carrying the new bond label plus the column labels.
    pub v: LabeledTensor,
    /// Sum of squared dropped singular values over the total squared weight.
    pub discarded_weight: f64,
    bond: String,
}

impl SvdResult {
    pub fn bond_label(&self) -> &str {
        &self.bond
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }
}

/// Factor `t` as `u * diag(s) * v` over the split given by `row_labels`,
/// keeping at most `max_rank` singular values and dropping a trailing tail
/// whose relative squared weight stays below `cutoff`.
pub fn svd_truncate<S: AsRef<str>>(
    t: &LabeledTensor,
    row_labels: &[S],
    max_rank: usize,
    cutoff: f64,
) -> Result<SvdResult, TensorError> {
    if max_rank == 0 {
        return Err(TensorError::ZeroMaxRank);
    }
    if row_labels.is_empty() || row_labels.len() >= t.rank() {
        return Err(TensorError::BadRowLabels);
    }
    let mut row_axes = Vec::with_capacity(row_labels.len());
    for l in row_labels {
        let ax = t.axis_of(l.as_ref())?;
        if row_axes.contains(&ax) {
            return Err(TensorError::DuplicateLabel(l.as_ref().to_owned()));
        }
        row_axes.push(ax);
    }
    let col_axes: Vec<usize> = (0..t.rank()).filter(|ax| !row_axes.contains(ax)).collect();

    let row_dims: Vec<usize> = row_axes.iter().map(|&ax| t.dims()[ax]).collect();
    let col_dims: Vec<usize> = col_axes.iter().map(|&ax| t.dims()[ax]).collect();
    let m: usize = row_dims.iter().product();
    let n: usize = col_dims.iter().product();

    let mut perm = row_axes.clone();
    perm.extend_from_slice(&col_axes);
    let matrix = t
        .data
        .view()
        .permuted_axes(IxDyn(&perm))
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((m, n))
        .expect("contiguous reshape");

    let (u_opt, s_full, vt_opt) = matrix.svddc_into(JobSvd::Some)?;
    let u_full = u_opt.expect("left singular vectors requested");
    let vt_full = vt_opt.expect("right singular vectors requested");
    let full_rank = s_full.len();

    let total: f64 = s_full.iter().map(|x| x * x).sum();
    let floor = s_full.first().copied().unwrap_or(0.0) * SVD_REL_FLOOR;

    let mut keep = full_rank.min(max_rank);
    while keep > 1 && s_full[keep - 1] <= floor {
        keep -= 1;
    }
    let mut dropped_sq: f64 = s_full.iter().skip(keep).map(|x| x * x).sum();
    while keep > 1 && dropped_sq + s_full[keep - 1] * s_full[keep - 1] <= cutoff * total {
        dropped_sq += s_full[keep - 1] * s_full[keep - 1];
        keep -= 1;
    }
    let discarded_weight = if total > 0.0 { dropped_sq / total } else { 0.0 };

    let bond = fresh_bond_label(t);

    let mut u_dims = row_dims;
    u_dims.push(keep);
    let mut u_labels: Vec<String> = row_axes.iter().map(|&ax| t.labels[ax].clone()).collect();
    u_labels.push(bond.clone());
    let u_data = u_full
        .slice(ndarray::s![.., ..keep])
        .to_owned()
        .into_shape_with_order(IxDyn(&u_dims))
        .expect("contiguous reshape");

    let mut v_dims = vec![keep];
    v_dims.extend_from_slice(&col_dims);
    let mut v_labels = vec![bond.clone()];
    v_labels.extend(col_axes.iter().map(|&ax| t.labels[ax].clone()));
    let v_data = vt_full
        .slice(ndarray::s![..keep, ..])
        .to_owned()
        .into_shape_with_order(IxDyn(&v_dims))
        .expect("contiguous reshape");

    Ok(SvdResult {
        u: LabeledTensor {
            labels: u_labels,
            data: u_data,
        },
        s: s_full.iter().take(keep).copied().collect(),
        v: LabeledTensor {
            labels: v_labels,
            data: v_data,
        },
        discarded_weight,
        bond,
    })
}

fn fresh_bond_label(t: &LabeledTensor) -> String {
    let mut candidate = "#sv".to_owned();
    while t.has_label(&candidate) {
        candidate.push('#');
    }
    candidate
}

/// Matrixize `t` over the split given by `row_labels`.
fn to_matrix(
    t: &LabeledTensor,
    row_labels: &[&str],
) -> Result<(Array2<C64>, Vec<usize>, Vec<usize>, Vec<usize>, Vec<usize>), TensorError> {
    let mut row_axes = Vec::with_capacity(row_labels.len());
    for l in row_labels {
        let ax = t.axis_of(l)?;
        if row_axes.contains(&ax) {
            return Err(TensorError::DuplicateLabel((*l).to_owned()));
        }
        row_axes.push(ax);
    }
    let col_axes: Vec<usize> = (0..t.rank()).filter(|ax| !row_axes.contains(ax)).collect();
    let row_dims: Vec<usize> = row_axes.iter().map(|&ax| t.dims()[ax]).collect();
    let col_dims: Vec<usize> = col_axes.iter().map(|&ax| t.dims()[ax]).collect();
    let m: usize = row_dims.iter().product();
    let n: usize = col_dims.iter().product();
    let mut perm = row_axes.clone();
    perm.extend_from_slice(&col_axes);
    let matrix = t
        .data
        .view()
        .permuted_axes(IxDyn(&perm))
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((m, n))
        .expect("contiguous reshape");
    Ok((matrix, row_axes, col_axes, row_dims, col_dims))
}

/// Fix the QR gauge so that R has a real non-negative diagonal, making the
/// factorization unique (and idempotent on already-orthonormal input).
fn fix_qr_phases(q: &mut Array2<C64>, r: &mut Array2<C64>) {
    for k in 0..r.nrows().min(r.ncols()) {
        let d = r[(k, k)];
        let mag = d.norm();
        if mag > 0.0 {
            let phase = d / mag;
            q.column_mut(k).mapv_inplace(|z| z * phase);
            r.row_mut(k).mapv_inplace(|z| z * phase.conj());
        }
    }
}

/// Thin QR split `t = q * r` with `q` a left-isometry over the row labels.
/// Returns `(q, r, bond_label)`.
pub fn qr_factor<S: AsRef<str>>(
    t: &LabeledTensor,
    row_labels: &[S],
) -> Result<(LabeledTensor, LabeledTensor, String), TensorError> {
    if row_labels.is_empty() || row_labels.len() >= t.rank() {
        return Err(TensorError::BadRowLabels);
    }
    let rows: Vec<&str> = row_labels.iter().map(|s| s.as_ref()).collect();
    let (matrix, row_axes, col_axes, row_dims, col_dims) = to_matrix(t, &rows)?;
    let (mut q, mut r) = matrix.qr()?;
    fix_qr_phases(&mut q, &mut r);
    let k = q.ncols();
    let bond = fresh_bond_label(t);

    let mut q_dims = row_dims;
    q_dims.push(k);
    let mut q_labels: Vec<String> = row_axes.iter().map(|&ax| t.labels[ax].clone()).collect();
    q_labels.push(bond.clone());
    let q_tensor = LabeledTensor {
        labels: q_labels,
        data: q
            .into_shape_with_order(IxDyn(&q_dims))
            .expect("contiguous reshape"),
    };

    let mut r_dims = vec![k];
    r_dims.extend_from_slice(&col_dims);
    let mut r_labels = vec![bond.clone()];
    r_labels.extend(col_axes.iter().map(|&ax| t.labels[ax].clone()));
    let r_tensor = LabeledTensor {
        labels: r_labels,
        data: r
            .into_shape_with_order(IxDyn(&r_dims))
            .expect("contiguous reshape"),
    };
    Ok((q_tensor, r_tensor, bond))
}

/// Thin LQ split `t = l * q` with `q` a right-isometry over the column
/// labels. Returns `(l, q, bond_label)`.
pub fn lq_factor<S: AsRef<str>>(
    t: &LabeledTensor,
    row_labels: &[S],
) -> Result<(LabeledTensor, LabeledTensor, String), TensorError> {
    if row_labels.is_empty() || row_labels.len() >= t.rank() {
        return Err(TensorError::BadRowLabels);
    }
    let rows: Vec<&str> = row_labels.iter().map(|s| s.as_ref()).collect();
    let (matrix, row_axes, col_axes, row_dims, col_dims) = to_matrix(t, &rows)?;
    let adjoint = matrix.t().mapv(|z| z.conj());
    let (mut qt, mut rt) = adjoint.qr()?;
    fix_qr_phases(&mut qt, &mut rt);
    let k = qt.ncols();
    let bond = fresh_bond_label(t);

    let l = rt.t().mapv(|z| z.conj());
    let q = qt.t().mapv(|z| z.conj());

    let mut l_dims = row_dims;
    l_dims.push(k);
    let mut l_labels: Vec<String> = row_axes.iter().map(|&ax| t.labels[ax].clone()).collect();
    l_labels.push(bond.clone());
    let l_tensor = LabeledTensor {
        labels: l_labels,
        data: l
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order(IxDyn(&l_dims))
            .expect("contiguous reshape"),
    };

    let mut q_dims = vec![k];
    q_dims.extend_from_slice(&col_dims);
    let mut q_labels = vec![bond.clone()];
    q_labels.extend(col_axes.iter().map(|&ax| t.labels[ax].clone()));
    let q_tensor = LabeledTensor {
        labels: q_labels,
        data: q
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order(IxDyn(&q_dims))
            .expect("contiguous reshape"),
    };
    Ok((l_tensor, q_tensor, bond))
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

    fn random_tensor(labels: &[&str], dims: &[usize], seed: u64) -> LabeledTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = dims.iter().product();
        let values = (0..len)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        LabeledTensor::from_vec(labels, dims, values).unwrap()
    }

    #[test]
    fn contract_identity_relabels_vector() {
        let eye = LabeledTensor::from_fn(&["i", "j"], &[2, 2], |ix| {
            if ix[0] == ix[1] { c(1.0, 0.0) } else { c(0.0, 0.0) }
        })
        .unwrap();
        let v = LabeledTensor::from_vec(&["j"], &[2], vec![c(0.3, -0.2), c(1.5, 0.7)]).unwrap();
        let out = contract(&eye, &v, &[("j", "j")]).unwrap();
        assert_eq!(out.labels(), &["i".to_owned()]);
        assert_eq!(out.get(&[0]), v.get(&[0]));
        assert_eq!(out.get(&[1]), v.get(&[1]));
    }

    #[test]
    fn contract_pauli_product() {
        let sx = LabeledTensor::from_array(&["i", "j"], crate::pauli::sigma_x().into_dyn()).unwrap();
        let sy = LabeledTensor::from_array(&["j", "k"], crate::pauli::sigma_y().into_dyn()).unwrap();
        let out = contract(&sx, &sy, &[("j", "j")]).unwrap();
        // sx sy = i sz
        let expected = crate::pauli::sigma_z().mapv(|z| C64::i() * z);
        for i in 0..2 {
            for k in 0..2 {
                assert!((out.get(&[i, k]) - expected[(i, k)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn contract_matches_triple_loop() {
        let a = random_tensor(&["x", "y", "z"], &[3, 4, 5], 7);
        let b = random_tensor(&["z", "w"], &[5, 2], 8);
        let out = contract(&a, &b, &[("z", "z")]).unwrap();
        assert_eq!(out.labels(), &["x".to_owned(), "y".to_owned(), "w".to_owned()]);
        for x in 0..3 {
            for y in 0..4 {
                for w in 0..2 {
                    let mut acc = c(0.0, 0.0);
                    for z in 0..5 {
                        acc += a.get(&[x, y, z]) * b.get(&[z, w]);
                    }
                    assert!((out.get(&[x, y, w]) - acc).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn contract_empty_pairs_is_outer_product() {
        let a = random_tensor(&["x"], &[2], 1);
        let b = random_tensor(&["y"], &[3], 2);
        let out = contract(&a, &b, &[]).unwrap();
        for x in 0..2 {
            for y in 0..3 {
                assert!((out.get(&[x, y]) - a.get(&[x]) * b.get(&[y])).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn contract_rejects_bad_inputs() {
        let a = random_tensor(&["x", "y"], &[2, 3], 3);
        let b = random_tensor(&["y", "z"], &[4, 2], 4);
        assert!(matches!(
            contract(&a, &b, &[("q", "y")]),
            Err(TensorError::UnknownLabel(_))
        ));
        assert!(matches!(
            contract(&a, &b, &[("y", "y")]),
            Err(TensorError::ExtentMismatch { .. })
        ));
        // duplicate output label: "y" left free on both sides
        let b2 = random_tensor(&["y", "x"], &[3, 2], 5);
        assert!(matches!(
            contract(&a, &b2, &[("x", "x")]),
            Err(TensorError::DuplicateLabel(_))
        ));
    }

    #[test]
    fn svd_rank_one_outer_product() {
        let u = random_tensor(&["i"], &[4], 11);
        let w = random_tensor(&["j"], &[3], 12);
        let t = contract(&u, &w, &[]).unwrap();
        let svd = svd_truncate(&t, &["i"], 10, 0.0).unwrap();
        assert_eq!(svd.rank(), 1);
        assert!((svd.s[0] - u.norm() * w.norm()).abs() < 1e-12);
        assert!(svd.discarded_weight < 1e-28);
    }

    #[test]
    fn svd_identity_singular_values() {
        let eye = LabeledTensor::from_fn(&["i", "j"], &[4, 4], |ix| {
            if ix[0] == ix[1] { c(1.0, 0.0) } else { c(0.0, 0.0) }
        })
        .unwrap();
        let svd = svd_truncate(&eye, &["i"], 4, 0.0).unwrap();
        assert_eq!(svd.rank(), 4);
        for s in &svd.s {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn svd_truncation_error_matches_dropped_tail() {
        use ndarray_linalg::{JobSvd, SVDDCInto};
        let t = random_tensor(&["i", "j"], &[8, 8], 21);
        let svd = svd_truncate(&t, &["i"], 3, 0.0).unwrap();
        assert_eq!(svd.rank(), 3);

        // Independent full decomposition as the reference.
        let dense = t
            .data()
            .to_owned()
            .into_shape_with_order((8, 8))
            .unwrap();
        let (_, s_ref, _) = dense.svddc_into(JobSvd::Some).unwrap();
        let tail: f64 = s_ref.iter().skip(3).map(|x| x * x).sum();

        // Reconstruction error must equal the dropped tail.
        let usv = contract(
            &svd.u.scaled_along(svd.bond_label(), &svd.s).unwrap(),
            &svd.v,
            &[(svd.bond_label(), svd.bond_label())],
        )
        .unwrap();
        let err_sq: f64 = usv
            .data()
            .iter()
            .zip(t.data().iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        assert!((err_sq - tail).abs() < 1e-10 * tail.max(1.0));
        assert!((svd.discarded_weight - tail / t.norm().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn svd_full_rank_reconstructs() {
        let t = random_tensor(&["i", "j", "k"], &[3, 4, 2], 31);
        let svd = svd_truncate(&t, &["i", "k"], usize::MAX, 0.0).unwrap();
        let usv = contract(
            &svd.u.scaled_along(svd.bond_label(), &svd.s).unwrap(),
            &svd.v,
            &[(svd.bond_label(), svd.bond_label())],
        )
        .unwrap()
        .permuted(&["i", "j", "k"])
        .unwrap();
        let err: f64 = usv
            .data()
            .iter()
            .zip(t.data().iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-12 * t.norm());
    }

    #[test]
    fn svd_isometry_invariants() {
        let t = random_tensor(&["i", "j", "k"], &[4, 3, 5], 41);
        let svd = svd_truncate(&t, &["i", "j"], 4, 0.0).unwrap();
        let gram = contract(
            &svd.u.conj().relabeled(svd.bond_label(), "b'").unwrap(),
            &svd.u,
            &[("i", "i"), ("j", "j")],
        )
        .unwrap();
        for a in 0..svd.rank() {
            for b in 0..svd.rank() {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((gram.get(&[a, b]) - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn svd_rejects_bad_inputs() {
        let t = random_tensor(&["i", "j"], &[2, 2], 51);
        assert!(matches!(
            svd_truncate(&t, &[] as &[&str], 2, 0.0),
            Err(TensorError::BadRowLabels)
        ));
        assert!(matches!(
            svd_truncate(&t, &["i", "j"], 2, 0.0),
            Err(TensorError::BadRowLabels)
        ));
        assert!(matches!(
            svd_truncate(&t, &["i"], 0, 0.0),
            Err(TensorError::ZeroMaxRank)
        ));
    }

    #[test]
    fn from_vec_checks_length_and_labels() {
        assert!(matches!(
            LabeledTensor::from_vec(&["i"], &[3], vec![c(1.0, 0.0)]),
            Err(TensorError::DataLength { .. })
        ));
        assert!(matches!(
            LabeledTensor::from_vec(&["i", "i"], &[1, 1], vec![c(1.0, 0.0)]),
            Err(TensorError::DuplicateLabel(_))
        ));
        assert!(matches!(
            LabeledTensor::zeros(&["i"], &[0]),
            Err(TensorError::ZeroExtent)
        ));
    }

    #[test]
    fn permute_and_fuse_roundtrip() {
        let t = random_tensor(&["i", "j", "k"], &[2, 3, 4], 61);
        let p = t.permuted(&["k", "i", "j"]).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert_eq!(t.get(&[i, j, k]), p.get(&[k, i, j]));
                }
            }
        }
        let fused = t.fuse(&["i", "k"], "ik").unwrap();
        assert_eq!(fused.dims(), &[8, 3]);
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert_eq!(t.get(&[i, j, k]), fused.get(&[i * 4 + k, j]));
                }
            }
        }
    }

    #[test]
    fn vdot_and_add_scaled() {
        let a = random_tensor(&["i", "j"], &[2, 3], 71);
        let b = random_tensor(&["j", "i"], &[3, 2], 72);
        let sum = a.add_scaled(c(2.0, 1.0), &b).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                let want = a.get(&[i, j]) + c(2.0, 1.0) * b.get(&[j, i]);
                assert!((sum.get(&[i, j]) - want).norm() < 1e-15);
            }
        }
        let norm_sq = a.vdot(&a).unwrap();
        assert!((norm_sq.re - a.norm().powi(2)).abs() < 1e-12);
        assert!(norm_sq.im.abs() < 1e-14);
    }

    #[test]
    fn scalar_rank_zero() {
        let s = LabeledTensor::scalar(c(2.5, -1.0));
        assert_eq!(s.rank(), 0);
        assert_eq!(s.as_scalar(), Some(c(2.5, -1.0)));
        let v = LabeledTensor::from_array(&["i"], array![c(1.0, 0.0), c(0.0, 1.0)].into_dyn())
            .unwrap();
        let outer = contract(&s, &v, &[]).unwrap();
        assert_eq!(outer.labels(), &["i".to_owned()]);
        assert!((outer.get(&[1]) - c(1.0, 2.5)).norm() < 1e-15);
    }
}
