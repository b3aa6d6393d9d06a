//! Matrix operators: dense matrices and implicit products of structured
//! factors with fast matvecs.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fastops::{fwht_in_place, is_power_of_two, DctPlan};
use crate::linalg::Mat;
use crate::rng::{permutation, rademacher};

/// Default cap on `rows × cols` for [`MatrixOperator::materialize_dense`].
pub const DEFAULT_MATERIALIZE_CAP: usize = 4096 * 4096;

/// The orthogonal matrix Π = P Ξ: a permutation P after a sign flip Ξ.
///
/// As a map, (Πx)[i] = ξ[σ(i)] · x[σ(i)].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedPermutation {
    perm: Vec<usize>,
    signs: Vec<f64>,
}

impl SignedPermutation {
    pub fn new(perm: Vec<usize>, signs: Vec<f64>) -> Result<Self> {
        let n = perm.len();
        if signs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: signs.len(),
            });
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
            seen[p] = true;
        }
        if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::InvalidArgument("signs must be ±1".into()));
        }
        Ok(Self { perm, signs })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            signs: vec![1.0; n],
        }
    }

    /// Uniformly random signed permutation.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Self {
        let perm = permutation(rng, n);
        let signs = (0..n).map(|_| rademacher(rng)).collect();
        Self { perm, signs }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, &p) in out.iter_mut().zip(&self.perm) {
            *o = self.signs[p] * x[p];
        }
    }

    pub fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = self.signs[p] * y[i];
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        self.apply_transpose_into(y, &mut out);
        out
    }

    /// Πᵀ = Π⁻¹, again in P Ξ form: (Πᵀy)[j] = ξ[j] y[σ⁻¹(j)].
    pub fn inverse(&self) -> Self {
        let n = self.len();
        let mut inv = vec![0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        let signs = (0..n).map(|k| self.signs[self.perm[k]]).collect();
        Self { perm: inv, signs }
    }

    pub fn to_dense(&self) -> Mat {
        let n = self.len();
        let mut m = Mat::zeros(n, n);
        for (i, &p) in self.perm.iter().enumerate() {
            m[(i, p)] = self.signs[p];
        }
        m
    }
}

/// One factor of an implicit operator.
#[derive(Debug, Clone)]
pub enum Factor {
    SignedPerm {
        pi: Arc<SignedPermutation>,
        transposed: bool,
    },
    /// Orthonormal Walsh–Hadamard matrix (symmetric).
    Hadamard { n: usize },
    /// Orthonormal DCT-II matrix, or its transpose.
    Dct {
        plan: Arc<DctPlan>,
        transposed: bool,
    },
    Dense {
        mat: Arc<Mat>,
        transposed: bool,
    },
    Diagonal(Arc<Vec<f64>>),
    /// `rows × cols` matrix with `d` on the main diagonal (`d.len() = min(rows, cols)`).
    RectDiagonal {
        rows: usize,
        cols: usize,
        d: Arc<Vec<f64>>,
    },
    /// Keeps the first `rows` of `cols` coordinates; its transpose zero-pads.
    RowMask { rows: usize, cols: usize },
    Scale { n: usize, c: f64 },
}

impl Factor {
    pub fn rows(&self) -> usize {
        match self {
            Factor::SignedPerm { pi, .. } => pi.len(),
            Factor::Hadamard { n } | Factor::Scale { n, .. } => *n,
            Factor::Dct { plan, .. } => plan.len(),
            Factor::Dense { mat, transposed } => {
                if *transposed {
                    mat.cols
                } else {
                    mat.rows
                }
            }
            Factor::Diagonal(d) => d.len(),
            Factor::RectDiagonal { rows, .. } | Factor::RowMask { rows, .. } => *rows,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Factor::Dense { mat, transposed } => {
                if *transposed {
                    mat.rows
                } else {
                    mat.cols
                }
            }
            Factor::RectDiagonal { cols, .. } | Factor::RowMask { cols, .. } => *cols,
            _ => self.rows(),
        }
    }

    /// The factor Fᵀ.
    pub fn transpose(&self) -> Factor {
        match self {
            Factor::SignedPerm { pi, transposed } => Factor::SignedPerm {
                pi: pi.clone(),
                transposed: !transposed,
            },
            Factor::Dct { plan, transposed } => Factor::Dct {
                plan: plan.clone(),
                transposed: !transposed,
            },
            Factor::Dense { mat, transposed } => Factor::Dense {
                mat: mat.clone(),
                transposed: !transposed,
            },
            Factor::RectDiagonal { rows, cols, d } => Factor::RectDiagonal {
                rows: *cols,
                cols: *rows,
                d: d.clone(),
            },
            Factor::RowMask { rows, cols } => Factor::RectDiagonal {
                rows: *cols,
                cols: *rows,
                d: Arc::new(vec![1.0; (*rows).min(*cols)]),
            },
            other => other.clone(),
        }
    }

    /// Applies F (or Fᵀ when `transpose`) to `x`.
    pub fn apply(&self, x: &[f64], transpose: bool) -> Vec<f64> {
        match self {
            Factor::SignedPerm { pi, transposed } => {
                if transpose ^ transposed {
                    pi.apply_transpose(x)
                } else {
                    pi.apply(x)
                }
            }
            Factor::Hadamard { .. } => {
                let mut y = x.to_vec();
                fwht_in_place(&mut y).expect("length checked at construction");
                y
            }
            Factor::Dct { plan, transposed } => {
                let mut y = vec![0.0; x.len()];
                if transpose ^ transposed {
                    plan.transpose(x, &mut y);
                } else {
                    plan.forward(x, &mut y);
                }
                y
            }
            Factor::Dense { mat, transposed } => {
                if transpose ^ transposed {
                    mat.matvec_t(x)
                } else {
                    mat.matvec(x)
                }
            }
            Factor::Diagonal(d) => x.iter().zip(d.iter()).map(|(a, b)| a * b).collect(),
            Factor::RectDiagonal { rows, cols, d } => {
                let out_len = if transpose { *cols } else { *rows };
                let mut y = vec![0.0; out_len];
                for (k, &dk) in d.iter().enumerate() {
                    y[k] = dk * x[k];
                }
                y
            }
            Factor::RowMask { rows, cols } => {
                let out_len = if transpose { *cols } else { *rows };
                let mut y = vec![0.0; out_len];
                let k = (*rows).min(*cols);
                y[..k].copy_from_slice(&x[..k]);
                y
            }
            Factor::Scale { c, .. } => x.iter().map(|v| c * v).collect(),
        }
    }

    pub fn hadamard(n: usize) -> Result<Factor> {
        if !is_power_of_two(n) {
            return Err(Error::NotPowerOfTwo(n));
        }
        Ok(Factor::Hadamard { n })
    }

    pub fn dct2(n: usize) -> Factor {
        Factor::Dct {
            plan: Arc::new(DctPlan::new(n)),
            transposed: false,
        }
    }

    pub fn signed_perm(pi: SignedPermutation) -> Factor {
        Factor::SignedPerm {
            pi: Arc::new(pi),
            transposed: false,
        }
    }
}

/// W = F_1 F_2 ⋯ F_k, applied right to left.
#[derive(Debug, Clone)]
pub struct ImplicitOperator {
    rows: usize,
    cols: usize,
    factors: Vec<Factor>,
}

impl ImplicitOperator {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty factor list".into()))?;
        for pair in factors.windows(2) {
            if pair[0].cols() != pair[1].rows() {
                return Err(Error::DimensionMismatch {
                    expected: pair[0].cols(),
                    got: pair[1].rows(),
                });
            }
        }
        Ok(Self {
            rows: first.rows(),
            cols: factors[factors.len() - 1].cols(),
            factors,
        })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// The formal transpose: factors transposed, in reverse order.
    pub fn transpose(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            factors: self.factors.iter().rev().map(Factor::transpose).collect(),
        }
    }

    pub fn apply(&self, x: &[f64], transpose: bool) -> Vec<f64> {
        if transpose {
            let mut y = self.factors[0].apply(x, true);
            for f in &self.factors[1..] {
                y = f.apply(&y, true);
            }
            y
        } else {
            let mut iter = self.factors.iter().rev();
            let mut y = iter.next().expect("non-empty").apply(x, false);
            for f in iter {
                y = f.apply(&y, false);
            }
            y
        }
    }
}

/// Where a sampled operator came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub description: String,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub enum OperatorKind {
    Dense(Arc<Mat>),
    Implicit(ImplicitOperator),
}

/// A linear operator handle; immutable and cheap to clone.
#[derive(Debug, Clone)]
pub struct MatrixOperator {
    kind: OperatorKind,
    symmetric: bool,
    provenance: Option<Provenance>,
}

impl MatrixOperator {
    pub fn dense(mat: Mat) -> Self {
        let symmetric = mat.rows == mat.cols && mat.is_symmetric(0.0);
        Self {
            kind: OperatorKind::Dense(Arc::new(mat)),
            symmetric,
            provenance: None,
        }
    }

    /// An implicit operator; `symmetric` records whether W = Wᵀ by construction.
    pub fn implicit(op: ImplicitOperator, symmetric: bool) -> Self {
        Self {
            kind: OperatorKind::Implicit(op),
            symmetric,
            provenance: None,
        }
    }

    pub fn identity(n: usize) -> Self {
        let op = ImplicitOperator::new(vec![Factor::Scale { n, c: 1.0 }]).expect("non-empty");
        Self::implicit(op, true)
    }

    pub fn with_provenance(mut self, description: impl Into<String>, seed: u64) -> Self {
        self.provenance = Some(Provenance {
            description: description.into(),
            seed,
        });
        self
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn rows(&self) -> usize {
        match &self.kind {
            OperatorKind::Dense(m) => m.rows,
            OperatorKind::Implicit(op) => op.rows,
        }
    }

    pub fn cols(&self) -> usize {
        match &self.kind {
            OperatorKind::Dense(m) => m.cols,
            OperatorKind::Implicit(op) => op.cols,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Returns c·W.
    pub fn scaled(&self, c: f64) -> Self {
        let kind = match &self.kind {
            OperatorKind::Dense(m) => {
                let mut m = (**m).clone();
                m.data.iter_mut().for_each(|v| *v *= c);
                OperatorKind::Dense(Arc::new(m))
            }
            OperatorKind::Implicit(op) => {
                let mut factors = op.factors.clone();
                factors.push(Factor::Scale { n: op.cols, c });
                OperatorKind::Implicit(ImplicitOperator::new(factors).expect("dimensions agree"))
            }
        };
        Self {
            kind,
            symmetric: self.symmetric,
            provenance: self.provenance.clone(),
        }
    }

    /// Wv, or Wᵀv when `transpose`.
    pub fn apply(&self, v: &[f64], transpose: bool) -> Result<Vec<f64>> {
        let expected = if transpose { self.rows() } else { self.cols() };
        if v.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: v.len(),
            });
        }
        Ok(match &self.kind {
            OperatorKind::Dense(m) => {
                if transpose {
                    m.matvec_t(v)
                } else {
                    m.matvec(v)
                }
            }
            OperatorKind::Implicit(op) => op.apply(v, transpose),
        })
    }

    /// Dense copy, built column by column from basis vectors.
    pub fn materialize_dense(&self, cap: usize) -> Result<Mat> {
        let (r, c) = (self.rows(), self.cols());
        let needed = r as u128 * c as u128;
        if needed > cap as u128 {
            return Err(Error::CapExceeded {
                what: "materialized matrix entries",
                needed,
                cap: cap as u128,
            });
        }
        if let OperatorKind::Dense(m) = &self.kind {
            return Ok((**m).clone());
        }
        let mut out = Mat::zeros(r, c);
        let mut e = vec![0.0; c];
        for j in 0..c {
            e[j] = 1.0;
            let col = self.apply(&e, false)?;
            for i in 0..r {
                out[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        Ok(out)
    }
}
