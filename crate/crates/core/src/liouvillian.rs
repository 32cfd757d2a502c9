//! Physical model assembly: XXZ chain with boundary baths, compiled into
//! superoperator MPOs.
//!
//! The generator acts on the vectorized density matrix as
//! `-i (I (x) H - H^T (x) I) + D_1 + D_N`, with each bath contributing a
//! jump term and an anticommutator pair. All of it is expressed through
//! side operators and compiled by the string builder, so the construction
//! cost is independent of any state's bond dimension. The Hermitian search
//! target is the squared generator.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mpo::{mpo_product, MatrixProductOperator, MpoBuilder, MpoError, OpTable};
use crate::superspace::{side_string, superspace_table, OrderingScheme, Side, SideOp, SuperspaceError};

/// Compression cutoff used when forming the squared generator.
pub const TARGET_CUTOFF: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("chain needs at least one site")]
    NoSites,

    #[error("`{field}` must have {expected} entries, found {found}")]
    BadLength {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("bath rates must be non-negative, got {0}")]
    NegativeRate(f64),

    #[error("at least one bath rate must be positive")]
    NoDissipation,

    #[error("bath bias {0} outside [0, 1]")]
    BiasOutOfRange(f64),

    #[error("bond {bond} out of range 1..={max}")]
    BondOutOfRange { bond: usize, max: usize },

    #[error("site {site} out of range 1..={max}")]
    SiteOutOfRange { site: usize, max: usize },

    #[error("scheme is for {scheme_sites} sites but the model has {model_sites}")]
    SchemeMismatch {
        scheme_sites: usize,
        model_sites: usize,
    },

    #[error(transparent)]
    Superspace(#[from] SuperspaceError),

    #[error(transparent)]
    Mpo(#[from] MpoError),
}

/// Couplings of the boundary-driven XXZ chain.
///
/// `j` and `delta` hold one entry per bond, `h` one per site. The baths act
/// on the first and last site with rates `gamma1`, `gamma_n` and biases
/// `f1`, `f_n` in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_sites: usize,
    pub j: Vec<f64>,
    pub delta: Vec<f64>,
    pub h: Vec<f64>,
    pub gamma1: f64,
    pub gamma_n: f64,
    pub f1: f64,
    pub f_n: f64,
}

impl ModelParams {
    /// Homogeneous chain: constant coupling, anisotropy and field.
    pub fn uniform(
        n_sites: usize,
        j: f64,
        delta: f64,
        h: f64,
        gamma: f64,
        f1: f64,
        f_n: f64,
    ) -> Self {
        let bonds = n_sites.saturating_sub(1);
        Self {
            n_sites,
            j: vec![j; bonds],
            delta: vec![delta; bonds],
            h: vec![h; n_sites],
            gamma1: gamma,
            gamma_n: gamma,
            f1,
            f_n,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_sites == 0 {
            return Err(ModelError::NoSites);
        }
        let bonds = self.n_sites - 1;
        for (field, len, expected) in [
            ("j", self.j.len(), bonds),
            ("delta", self.delta.len(), bonds),
            ("h", self.h.len(), self.n_sites),
        ] {
            if len != expected {
                return Err(ModelError::BadLength {
                    field,
                    expected,
                    found: len,
                });
            }
        }
        for &g in [self.gamma1, self.gamma_n].iter() {
            if g < 0.0 {
                return Err(ModelError::NegativeRate(g));
            }
        }
        if self.gamma1 == 0.0 && self.gamma_n == 0.0 {
            return Err(ModelError::NoDissipation);
        }
        for &f in [self.f1, self.f_n].iter() {
            if !(0.0..=1.0).contains(&f) {
                return Err(ModelError::BiasOutOfRange(f));
            }
        }
        Ok(())
    }

    fn check_scheme(&self, scheme: &OrderingScheme) -> Result<(), ModelError> {
        if scheme.n_phys != self.n_sites {
            return Err(ModelError::SchemeMismatch {
                scheme_sites: scheme.n_phys,
                model_sites: self.n_sites,
            });
        }
        Ok(())
    }
}

fn builder(scheme: &OrderingScheme) -> Result<MpoBuilder, MpoError> {
    MpoBuilder::new(scheme.phys_dims(), superspace_table(&OpTable::spin_half()))
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn im(x: f64) -> C64 {
    C64::new(0.0, x)
}

/// Compile the vectorized generator as an MPO under the given ordering.
pub fn build_liouvillian(
    params: &ModelParams,
    scheme: &OrderingScheme,
) -> Result<MatrixProductOperator, ModelError> {
    params.validate()?;
    params.check_scheme(scheme)?;
    let n = params.n_sites;
    let mut b = builder(scheme)?;

    // Unitary part: -i H rho + i rho H. Pauli products are expressed with
    // spin operators, hence the factor 4 per bond term and 2 per field term.
    for bond in 1..n {
        let j = params.j[bond - 1];
        let delta = params.delta[bond - 1];
        for (name, weight) in [("Sx", 1.0), ("Sy", 1.0), ("Sz", delta)] {
            let c = 4.0 * j * weight;
            if c == 0.0 {
                continue;
            }
            add_side(&mut b, scheme, im(-c), &[
                SideOp::new(bond, name, Side::L),
                SideOp::new(bond + 1, name, Side::L),
            ])?;
            add_side(&mut b, scheme, im(c), &[
                SideOp::new(bond, name, Side::R),
                SideOp::new(bond + 1, name, Side::R),
            ])?;
        }
    }
    for site in 1..=n {
        let h = params.h[site - 1];
        if h == 0.0 {
            continue;
        }
        add_side(&mut b, scheme, im(-2.0 * h), &[SideOp::new(site, "Sz", Side::L)])?;
        add_side(&mut b, scheme, im(2.0 * h), &[SideOp::new(site, "Sz", Side::R)])?;
    }

    // Boundary baths.
    for (site, gamma, f) in [(1, params.gamma1, params.f1), (n, params.gamma_n, params.f_n)] {
        add_dissipator(&mut b, scheme, site, gamma * f, JumpKind::Lower)?;
        add_dissipator(&mut b, scheme, site, gamma * (1.0 - f), JumpKind::Raise)?;
    }

    Ok(b.compile()?)
}

enum JumpKind {
    Lower,
    Raise,
}

/// `rate * (L rho Ld - 1/2 {Ld L, rho})` for a single-site jump operator.
fn add_dissipator(
    b: &mut MpoBuilder,
    scheme: &OrderingScheme,
    site: usize,
    rate: f64,
    kind: JumpKind,
) -> Result<(), ModelError> {
    if rate == 0.0 {
        return Ok(());
    }
    let (jump, jump_dag, number) = match kind {
        JumpKind::Lower => ("Sm", "Sp", "SpSm"),
        JumpKind::Raise => ("Sp", "Sm", "SmSp"),
    };
    add_side(b, scheme, re(rate), &[
        SideOp::new(site, jump, Side::L),
        SideOp::new(site, jump_dag, Side::R),
    ])?;
    add_side(b, scheme, re(-0.5 * rate), &[SideOp::new(site, number, Side::L)])?;
    add_side(b, scheme, re(-0.5 * rate), &[SideOp::new(site, number, Side::R)])?;
    Ok(())
}

fn add_side(
    b: &mut MpoBuilder,
    scheme: &OrderingScheme,
    coefficient: C64,
    ops: &[SideOp],
) -> Result<(), ModelError> {
    let term = side_string(scheme, coefficient, ops)?;
    b.add_term(term)?;
    Ok(())
}

/// Hermitian, positive semidefinite search target: the adjoint of the
/// generator times the generator, compressed at [`TARGET_CUTOFF`].
pub fn build_target(
    liouvillian: &MatrixProductOperator,
) -> Result<MatrixProductOperator, ModelError> {
    let (target, _discarded) = mpo_product(&liouvillian.dagger(), liouvillian, TARGET_CUTOFF)?;
    Ok(target)
}

/// Left-multiplication superoperator for the bond current
/// `2 J_i (sx_i sy_{i+1} - sy_i sx_{i+1})`.
pub fn build_current_mpo(
    params: &ModelParams,
    scheme: &OrderingScheme,
    bond: usize,
) -> Result<MatrixProductOperator, ModelError> {
    params.validate()?;
    params.check_scheme(scheme)?;
    if bond == 0 || bond >= params.n_sites {
        return Err(ModelError::BondOutOfRange {
            bond,
            max: params.n_sites - 1,
        });
    }
    let j = params.j[bond - 1];
    let mut b = builder(scheme)?;
    add_side(&mut b, scheme, re(8.0 * j), &[
        SideOp::new(bond, "Sx", Side::L),
        SideOp::new(bond + 1, "Sy", Side::L),
    ])?;
    add_side(&mut b, scheme, re(-8.0 * j), &[
        SideOp::new(bond, "Sy", Side::L),
        SideOp::new(bond + 1, "Sx", Side::L),
    ])?;
    Ok(b.compile()?)
}

/// Left-multiplication superoperator for the site magnetization `sz_i`.
pub fn build_magnetization_mpo(
    scheme: &OrderingScheme,
    site: usize,
) -> Result<MatrixProductOperator, ModelError> {
    if site == 0 || site > scheme.n_phys {
        return Err(ModelError::SiteOutOfRange {
            site,
            max: scheme.n_phys,
        });
    }
    let mut b = builder(scheme)?;
    add_side(&mut b, scheme, re(2.0), &[SideOp::new(site, "Sz", Side::L)])?;
    Ok(b.compile()?)
}

/// Everything the solver needs for one model instance.
#[derive(Clone, Debug)]
pub struct SuperOperatorSet {
    pub liouvillian: MatrixProductOperator,
    pub target: MatrixProductOperator,
    pub current_ops: Vec<MatrixProductOperator>,
    pub magnetization_ops: Vec<MatrixProductOperator>,
    pub scheme: OrderingScheme,
}

impl SuperOperatorSet {
    pub fn build(params: &ModelParams, scheme: &OrderingScheme) -> Result<Self, ModelError> {
        let liouvillian = build_liouvillian(params, scheme)?;
        let target = build_target(&liouvillian)?;
        let current_ops = (1..params.n_sites)
            .map(|bond| build_current_mpo(params, scheme, bond))
            .collect::<Result<_, _>>()?;
        let magnetization_ops = (1..=params.n_sites)
            .map(|site| build_magnetization_mpo(scheme, site))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            liouvillian,
            target,
            current_ops,
            magnetization_ops,
            scheme: *scheme,
        })
    }
}

/// Dense matrix of a single-site spin operator from the standard table,
/// mainly for tests and the dense oracle.
pub fn base_matrix(name: &str) -> Option<Array2<C64>> {
    OpTable::spin_half().get(name).cloned()
}
