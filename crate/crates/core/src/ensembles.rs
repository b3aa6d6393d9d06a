//! Samplers and validators for the symmetric and rectangular random matrix
//! ensembles, plus Sinkhorn variance-profile balancing.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{qr_orthogonal_factor, Mat};
use crate::math::{abs, sqrt};
use crate::operator::{Factor, ImplicitOperator, MatrixOperator};
use crate::rng::{bernoulli, normal, permutation, rademacher, seeded, streams};
use crate::spectral::SpectralSpec;

pub use crate::operator::SignedPermutation;

fn default_profile_tolerance() -> f64 {
    1e-6
}

/// Standardized (mean 0, variance 1) law of a single matrix entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntryLaw {
    Gaussian,
    Rademacher,
    /// (B − p)/√(p(1−p)) with B ~ Bernoulli(p).
    CenteredBernoulli { p: f64 },
    /// ±1/√p with probability p, else 0.
    SparseRademacher { p: f64 },
}

impl EntryLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            EntryLaw::CenteredBernoulli { p } => p > 0.0 && p < 1.0,
            EntryLaw::SparseRademacher { p } => p > 0.0 && p <= 1.0,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("entry law {self:?} has probability out of range")))
        }
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            EntryLaw::Gaussian => normal(rng),
            EntryLaw::Rademacher => rademacher(rng),
            EntryLaw::CenteredBernoulli { p } => {
                let b = if bernoulli(rng, p) { 1.0 } else { 0.0 };
                (b - p) / sqrt(p * (1.0 - p))
            }
            EntryLaw::SparseRademacher { p } => {
                if bernoulli(rng, p) {
                    rademacher(rng) / sqrt(p)
                } else {
                    0.0
                }
            }
        }
    }

    /// E|ξ|^k in closed form; finite for every k, which is the moment
    /// condition a generalized Wigner entry law must meet.
    pub fn abs_moment(&self, k: u32) -> f64 {
        use crate::math::powi;
        match *self {
            EntryLaw::Gaussian => {
                // E|g|^k = (k−1)!! · (√(2/π) if k odd else 1)
                let df = crate::math::double_factorial(k.saturating_sub(1));
                if k % 2 == 1 {
                    df * sqrt(2.0 / core::f64::consts::PI)
                } else {
                    df
                }
            }
            EntryLaw::Rademacher => 1.0,
            EntryLaw::CenteredBernoulli { p } => {
                let s = sqrt(p * (1.0 - p));
                p * powi((1.0 - p) / s, k) + (1.0 - p) * powi(p / s, k)
            }
            EntryLaw::SparseRademacher { p } => p * powi(1.0 / sqrt(p), k),
        }
    }
}

/// Variance profile S, with entry (i, j) having variance S[i,j]/n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum VarianceProfile {
    /// S ≡ 1.
    Ones,
    /// Two index blocks (first half / second half of each side), variance
    /// `within` on matching blocks and `across` otherwise.
    TwoBlock { within: f64, across: f64 },
    Explicit { rows: Vec<Vec<f64>> },
}

impl VarianceProfile {
    pub fn materialize(&self, m: usize, n: usize) -> Result<Mat> {
        match self {
            VarianceProfile::Ones => Ok(Mat::from_fn(m, n, |_, _| 1.0)),
            VarianceProfile::TwoBlock { within, across } => Ok(Mat::from_fn(m, n, |i, j| {
                if (i < m.div_ceil(2)) == (j < n.div_ceil(2)) {
                    *within
                } else {
                    *across
                }
            })),
            VarianceProfile::Explicit { rows } => {
                let s = Mat::from_rows(rows)?;
                if s.rows != m || s.cols != n {
                    return Err(Error::InvalidVarianceProfile(format!(
                        "profile is {}x{}, matrix is {m}x{n}",
                        s.rows, s.cols
                    )));
                }
                Ok(s)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Orthonormal Walsh–Hadamard; needs a power-of-two dimension.
    Hadamard,
    /// Orthonormal DCT-II; any dimension.
    Dct2,
    /// Haar-distributed orthogonal matrix (dense).
    Haar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymEnsembleSpec {
    Goe,
    GeneralizedWigner {
        profile: VarianceProfile,
        entry_law: EntryLaw,
        #[serde(default = "default_profile_tolerance")]
        tolerance: f64,
    },
    /// Centered and rescaled two-community stochastic block model adjacency.
    SbmCentered { p: f64, q: f64 },
    SymInvariant {
        eigenvalue_law: SpectralSpec,
        basis: Basis,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RectEnsembleSpec {
    GaussianWhiteNoise,
    GeneralizedWhiteNoise {
        profile: VarianceProfile,
        entry_law: EntryLaw,
        #[serde(default = "default_profile_tolerance")]
        tolerance: f64,
    },
    RectInvariant {
        singular_value_law: SpectralSpec,
        left_basis: Basis,
        right_basis: Basis,
    },
}

/// Membership and signal strength of a sampled block model.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmSignal {
    pub membership: Vec<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct SymmetricSample {
    pub op: MatrixOperator,
    /// Diagonal of D for invariant ensembles.
    pub spectrum: Option<Vec<f64>>,
    pub sbm: Option<SbmSignal>,
}

#[derive(Debug, Clone)]
pub struct RectangularSample {
    pub op: MatrixOperator,
    /// The min(m, n) singular values on the diagonal of D for invariant ensembles.
    pub singular_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSide {
    Symmetric,
    Rectangular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub max_entry: f64,
    pub min_entry: f64,
    pub worst_row_deviation: f64,
    /// Rectangular profiles only.
    pub worst_col_deviation: Option<f64>,
    /// Symmetric profiles only.
    pub symmetric: Option<bool>,
    pub tolerance: f64,
    pub max_entry_bound: Option<f64>,
    pub pass: bool,
}

/// Checks a variance profile: nonnegative entries, bounded maximum, row means
/// (over n) and, for rectangular profiles, column means (over m) close to 1.
pub fn validate_variance_profile(
    s: &Mat,
    side: ProfileSide,
    tolerance: f64,
    max_entry_bound: Option<f64>,
) -> ProfileReport {
    let (m, n) = (s.rows, s.cols);
    let max_entry = s.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_entry = s.data.iter().copied().fold(f64::INFINITY, f64::min);
    let worst_row_deviation = (0..m)
        .map(|i| abs(s.row(i).iter().sum::<f64>() / n as f64 - 1.0))
        .fold(0.0, f64::max);
    let worst_col_deviation = match side {
        ProfileSide::Symmetric => None,
        ProfileSide::Rectangular => Some(
            (0..n)
                .map(|j| abs((0..m).map(|i| s[(i, j)]).sum::<f64>() / m as f64 - 1.0))
                .fold(0.0, f64::max),
        ),
    };
    let symmetric = match side {
        ProfileSide::Symmetric => Some(m == n && s.is_symmetric(0.0)),
        ProfileSide::Rectangular => None,
    };
    let pass = symmetric != Some(false)
        && min_entry >= 0.0
        && max_entry_bound.is_none_or(|c| max_entry <= c)
        && worst_row_deviation <= tolerance
        && worst_col_deviation.is_none_or(|d| d <= tolerance);
    ProfileReport {
        max_entry,
        min_entry,
        worst_row_deviation,
        worst_col_deviation,
        symmetric,
        tolerance,
        max_entry_bound,
        pass,
    }
}

/// Block model probabilities (p, q) giving average density `pbar` and
/// signal strength λ_n = n(p − q)²/(4 p̄(1 − p̄)).
pub fn sbm_probabilities(n: usize, pbar: f64, lambda: f64) -> (f64, f64) {
    let gap = 2.0 * sqrt(lambda * pbar * (1.0 - pbar) / n as f64);
    (pbar + 0.5 * gap, pbar - 0.5 * gap)
}

pub fn sbm_lambda(n: usize, p: f64, q: f64) -> f64 {
    let pbar = 0.5 * (p + q);
    n as f64 * (p - q) * (p - q) / (4.0 * pbar * (1.0 - pbar))
}

/// Samples a balanced two-community adjacency matrix with self-loops.
/// Returns (A, f) with f ∈ {±1}ⁿ the community labels.
pub fn sbm_adjacency(n: usize, p: f64, q: f64, seed: u64) -> Result<(Mat, Vec<f64>)> {
    check_prob(p)?;
    check_prob(q)?;
    let mut rng = seeded(seed, streams::MATRIX);
    let order = permutation(&mut rng, n);
    let mut f = vec![-1.0; n];
    for &i in &order[..n.div_ceil(2)] {
        f[i] = 1.0;
    }
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let prob = if f[i] == f[j] { p } else { q };
            let v = if bernoulli(&mut rng, prob) { 1.0 } else { 0.0 };
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Ok((a, f))
}

/// Splits the standardized adjacency (A − p̄)/√(n p̄(1−p̄)) into the rank-one
/// signal (√λ_n/n) f fᵀ and the noise W; returns (W, λ_n).
pub fn sbm_decompose(a: &Mat, f: &[f64], p: f64, q: f64) -> (Mat, f64) {
    let n = a.rows;
    let pbar = 0.5 * (p + q);
    let scale = 1.0 / sqrt(n as f64 * pbar * (1.0 - pbar));
    let lambda = sbm_lambda(n, p, q);
    let signal = sqrt(lambda) / n as f64;
    let w = Mat::from_fn(n, n, |i, j| (a[(i, j)] - pbar) * scale - signal * f[i] * f[j]);
    (w, lambda)
}

fn check_prob(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")))
    }
}

fn basis_factor<R: Rng + ?Sized>(basis: Basis, n: usize, rng: &mut R) -> Result<Factor> {
    match basis {
        Basis::Hadamard => Factor::hadamard(n),
        Basis::Dct2 => Ok(Factor::dct2(n)),
        Basis::Haar => {
            let g = Mat::from_fn(n, n, |_, _| normal(rng));
            Ok(Factor::Dense {
                mat: Arc::new(qr_orthogonal_factor(&g)?),
                transposed: false,
            })
        }
    }
}

fn check_basis_dim(basis: Basis, n: usize) -> Result<()> {
    if basis == Basis::Hadamard && !crate::fastops::is_power_of_two(n) {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(())
}

fn profile_or_err(
    profile: &VarianceProfile,
    m: usize,
    n: usize,
    side: ProfileSide,
    tolerance: f64,
) -> Result<Option<Mat>> {
    if matches!(profile, VarianceProfile::Ones) {
        return Ok(None);
    }
    let s = profile.materialize(m, n)?;
    let report = validate_variance_profile(&s, side, tolerance, None);
    if !report.pass {
        return Err(Error::InvalidVarianceProfile(format!(
            "row deviation {:e}, column deviation {:?}, min entry {}, symmetric {:?}",
            report.worst_row_deviation, report.worst_col_deviation, report.min_entry, report.symmetric
        )));
    }
    Ok(Some(s))
}

/// Samples an n×n symmetric matrix from `spec`.
pub fn sample_symmetric(spec: &SymEnsembleSpec, n: usize, seed: u64) -> Result<SymmetricSample> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let mut rng = seeded(seed, streams::MATRIX);
    let describe = |s: &str| format!("{s}, n={n}");
    match spec {
        SymEnsembleSpec::Goe => {
            let inv = 1.0 / sqrt(n as f64);
            let mut w = Mat::zeros(n, n);
            for i in 0..n {
                w[(i, i)] = core::f64::consts::SQRT_2 * inv * normal(&mut rng);
                for j in i + 1..n {
                    let v = inv * normal(&mut rng);
                    w[(i, j)] = v;
                    w[(j, i)] = v;
                }
            }
            Ok(SymmetricSample {
                op: MatrixOperator::dense(w).with_provenance(describe("goe"), seed),
                spectrum: None,
                sbm: None,
            })
        }
        SymEnsembleSpec::GeneralizedWigner {
            profile,
            entry_law,
            tolerance,
        } => {
            entry_law.validate()?;
            let s = profile_or_err(profile, n, n, ProfileSide::Symmetric, *tolerance)?;
            let inv_n = 1.0 / n as f64;
            let mut w = Mat::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let var = s.as_ref().map_or(1.0, |s| s[(i, j)]);
                    let v = sqrt(var * inv_n) * entry_law.draw(&mut rng);
                    w[(i, j)] = v;
                    w[(j, i)] = v;
                }
            }
            Ok(SymmetricSample {
                op: MatrixOperator::dense(w).with_provenance(describe("generalized_wigner"), seed),
                spectrum: None,
                sbm: None,
            })
        }
        SymEnsembleSpec::SbmCentered { p, q } => {
            let pbar = 0.5 * (p + q);
            if !(pbar > 0.0 && pbar < 1.0) {
                return Err(Error::InvalidArgument("block model needs 0 < p̄ < 1".into()));
            }
            let (a, f) = sbm_adjacency(n, *p, *q, seed)?;
            let (w, lambda) = sbm_decompose(&a, &f, *p, *q);
            Ok(SymmetricSample {
                op: MatrixOperator::dense(w).with_provenance(describe("sbm_centered"), seed),
                spectrum: None,
                sbm: Some(SbmSignal {
                    membership: f,
                    lambda,
                }),
            })
        }
        SymEnsembleSpec::SymInvariant {
            eigenvalue_law,
            basis,
        } => {
            check_basis_dim(*basis, n)?;
            let d = eigenvalue_law.sample(&mut rng, n)?;
            let pi_v = Factor::signed_perm(SignedPermutation::sample(&mut rng, n));
            let pi_e = Factor::signed_perm(SignedPermutation::sample(&mut rng, n));
            let h = basis_factor(*basis, n, &mut rng)?;
            let factors = vec![
                pi_v.clone(),
                h.clone(),
                pi_e.clone(),
                Factor::Diagonal(Arc::new(d.clone())),
                pi_e.transpose(),
                h.transpose(),
                pi_v.transpose(),
            ];
            let op = MatrixOperator::implicit(ImplicitOperator::new(factors)?, true)
                .with_provenance(describe("sym_invariant"), seed);
            Ok(SymmetricSample {
                op,
                spectrum: Some(d),
                sbm: None,
            })
        }
    }
}

/// Samples an m×n matrix from `spec`.
pub fn sample_rectangular(spec: &RectEnsembleSpec, m: usize, n: usize, seed: u64) -> Result<RectangularSample> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("dimensions must be at least 1".into()));
    }
    let mut rng = seeded(seed, streams::MATRIX);
    let describe = |s: &str| format!("{s}, m={m}, n={n}");
    match spec {
        RectEnsembleSpec::GaussianWhiteNoise => {
            let inv = 1.0 / sqrt(n as f64);
            let w = Mat::from_fn(m, n, |_, _| inv * normal(&mut rng));
            Ok(RectangularSample {
                op: MatrixOperator::dense(w).with_provenance(describe("gaussian_white_noise"), seed),
                singular_values: None,
            })
        }
        RectEnsembleSpec::GeneralizedWhiteNoise {
            profile,
            entry_law,
            tolerance,
        } => {
            entry_law.validate()?;
            let s = profile_or_err(profile, m, n, ProfileSide::Rectangular, *tolerance)?;
            let inv_n = 1.0 / n as f64;
            let w = Mat::from_fn(m, n, |i, j| {
                let var = s.as_ref().map_or(1.0, |s| s[(i, j)]);
                sqrt(var * inv_n) * entry_law.draw(&mut rng)
            });
            Ok(RectangularSample {
                op: MatrixOperator::dense(w).with_provenance(describe("generalized_white_noise"), seed),
                singular_values: None,
            })
        }
        RectEnsembleSpec::RectInvariant {
            singular_value_law,
            left_basis,
            right_basis,
        } => {
            check_basis_dim(*left_basis, m)?;
            check_basis_dim(*right_basis, n)?;
            let d = singular_value_law.sample_singular(&mut rng, m, n)?;
            let pi_u = Factor::signed_perm(SignedPermutation::sample(&mut rng, m));
            let pi_e = Factor::signed_perm(SignedPermutation::sample(&mut rng, m));
            let pi_v = Factor::signed_perm(SignedPermutation::sample(&mut rng, n));
            let pi_f = Factor::signed_perm(SignedPermutation::sample(&mut rng, n));
            let h = basis_factor(*left_basis, m, &mut rng)?;
            let k = basis_factor(*right_basis, n, &mut rng)?;
            // W = O D Qᵀ with O = Π_U H Π_E and Q = Π_V K Π_F.
            let factors = vec![
                pi_u,
                h,
                pi_e,
                Factor::RectDiagonal {
                    rows: m,
                    cols: n,
                    d: Arc::new(d.clone()),
                },
                pi_f.transpose(),
                k.transpose(),
                pi_v.transpose(),
            ];
            let op = MatrixOperator::implicit(ImplicitOperator::new(factors)?, false)
                .with_provenance(describe("rect_invariant"), seed);
            Ok(RectangularSample {
                op,
                singular_values: Some(d),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinkhornResult {
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub s: Mat,
    pub iterations: usize,
    /// max over rows and columns of |sum/target − 1| at exit.
    pub deviation: f64,
}

pub const SINKHORN_DEFAULT_TOL: f64 = 1e-8;
pub const SINKHORN_DEFAULT_MAX_ITER: usize = 10_000;

/// Diagonal scaling S = diag(d1) V diag(d2) with row sums n and column sums m.
///
/// Alternates exact row normalization and exact column normalization,
/// starting from d2 = 1. Convergence is measured as the largest relative
/// deviation |sum/target − 1| over rows and columns.
pub fn sinkhorn_scale(v: &Mat, tol: f64, max_iter: usize) -> Result<SinkhornResult> {
    let (m, n) = (v.rows, v.cols);
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if v.data.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument("matrix must be finite and nonnegative".into()));
    }
    for i in 0..m {
        if v.row(i).iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroLine { which: "row", index: i });
        }
    }
    for j in 0..n {
        if (0..m).all(|i| v[(i, j)] == 0.0) {
            return Err(Error::ZeroLine { which: "column", index: j });
        }
    }
    let mut d1 = vec![1.0; m];
    let mut d2 = vec![1.0; n];
    let mut deviation = f64::INFINITY;
    for it in 1..=max_iter {
        for i in 0..m {
            let s: f64 = v.row(i).iter().zip(&d2).map(|(a, b)| a * b).sum();
            d1[i] = n as f64 / s;
        }
        let mut colsum = vec![0.0; n];
        for i in 0..m {
            for (c, (a, b)) in colsum.iter_mut().zip(v.row(i).iter().zip(&d2)) {
                *c += d1[i] * a * b;
            }
        }
        for j in 0..n {
            d2[j] *= m as f64 / colsum[j];
        }
        deviation = scaled_deviation(v, &d1, &d2);
        if deviation <= tol {
            let s = Mat::from_fn(m, n, |i, j| d1[i] * v[(i, j)] * d2[j]);
            return Ok(SinkhornResult {
                d1,
                d2,
                s,
                iterations: it,
                deviation,
            });
        }
    }
    Err(Error::SinkhornNoConvergence {
        iterations: max_iter,
        deviation,
    })
}

fn scaled_deviation(v: &Mat, d1: &[f64], d2: &[f64]) -> f64 {
    let (m, n) = (v.rows, v.cols);
    let mut colsum = vec![0.0; n];
    let mut worst = 0.0f64;
    for i in 0..m {
        let mut rs = 0.0;
        for j in 0..n {
            let x = d1[i] * v[(i, j)] * d2[j];
            rs += x;
            colsum[j] += x;
        }
        worst = worst.max(abs(rs / n as f64 - 1.0));
    }
    for c in colsum {
        worst = worst.max(abs(c / m as f64 - 1.0));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DEFAULT_MATERIALIZE_CAP;

    #[test]
    fn goe_diagonal_variance_at_n1() {
        let draws = 100_000;
        let mean: f64 = (0..draws)
            .map(|s| {
                let w = sample_symmetric(&SymEnsembleSpec::Goe, 1, s).unwrap();
                let x = w.op.apply(&[1.0], false).unwrap()[0];
                x * x
            })
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 2.0).abs() / 2.0 < 0.02, "{mean}");
    }

    #[test]
    fn white_noise_variance_at_1x1() {
        let draws = 100_000;
        let mean: f64 = (0..draws)
            .map(|s| {
                let w = sample_rectangular(&RectEnsembleSpec::GaussianWhiteNoise, 1, 1, s).unwrap();
                let x = w.op.apply(&[1.0], false).unwrap()[0];
                x * x
            })
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn sbm_equal_probabilities_has_no_signal() {
        let s = sample_symmetric(&SymEnsembleSpec::SbmCentered { p: 0.3, q: 0.3 }, 10, 1).unwrap();
        assert_eq!(s.sbm.unwrap().lambda, 0.0);
    }

    #[test]
    fn sbm_decomposition_reassembles() {
        let (p, q) = sbm_probabilities(40, 0.2, 2.0);
        assert!((sbm_lambda(40, p, q) - 2.0).abs() < 1e-12);
        let (a, f) = sbm_adjacency(40, p, q, 3).unwrap();
        assert_eq!(f.iter().filter(|&&x| x > 0.0).count(), 20);
        let (w, lambda) = sbm_decompose(&a, &f, p, q);
        let pbar = 0.5 * (p + q);
        let scale = (40.0 * pbar * (1.0 - pbar)).sqrt();
        for i in 0..40 {
            for j in 0..40 {
                let lhs = (a[(i, j)] - pbar) / scale;
                let rhs = lambda.sqrt() / 40.0 * f[i] * f[j] + w[(i, j)];
                assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * lhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn sym_invariant_with_constant_spectrum_is_identity() {
        for basis in [Basis::Hadamard, Basis::Dct2, Basis::Haar] {
            let spec = SymEnsembleSpec::SymInvariant {
                eigenvalue_law: SpectralSpec::Constant { c: 1.0 },
                basis,
            };
            let w = sample_symmetric(&spec, 16, 5).unwrap();
            let v: Vec<f64> = (0..16).map(|i| i as f64 - 3.0).collect();
            let y = w.op.apply(&v, false).unwrap();
            for (a, b) in y.iter().zip(&v) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hadamard_basis_rejects_non_power_of_two() {
        let spec = SymEnsembleSpec::SymInvariant {
            eigenvalue_law: SpectralSpec::Semicircle,
            basis: Basis::Hadamard,
        };
        assert_eq!(sample_symmetric(&spec, 12, 0).unwrap_err(), Error::NotPowerOfTwo(12));
    }

    #[test]
    fn rect_invariant_zero_and_orthogonal_cases() {
        let zero = RectEnsembleSpec::RectInvariant {
            singular_value_law: SpectralSpec::Constant { c: 0.0 },
            left_basis: Basis::Dct2,
            right_basis: Basis::Hadamard,
        };
        let w = sample_rectangular(&zero, 6, 8, 1).unwrap();
        assert!(w.op.apply(&[1.0; 8], false).unwrap().iter().all(|&x| x == 0.0));
        let orth = RectEnsembleSpec::RectInvariant {
            singular_value_law: SpectralSpec::Constant { c: 1.0 },
            left_basis: Basis::Hadamard,
            right_basis: Basis::Hadamard,
        };
        let w = sample_rectangular(&orth, 8, 8, 2).unwrap();
        let v: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
        let back = w.op.apply(&w.op.apply(&v, false).unwrap(), true).unwrap();
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_validation_reports() {
        let ones = Mat::from_fn(3, 3, |_, _| 1.0);
        let r = validate_variance_profile(&ones, ProfileSide::Symmetric, 1e-6, None);
        assert!(r.pass && r.worst_row_deviation == 0.0);
        let mut z = ones.clone();
        for j in 0..3 {
            z[(1, j)] = 0.0;
            z[(j, 1)] = 0.0;
        }
        let r = validate_variance_profile(&z, ProfileSide::Symmetric, 1e-6, None);
        assert!(!r.pass && r.worst_row_deviation == 1.0);
    }

    #[test]
    fn sinkhorn_cases() {
        let ones = Mat::from_fn(3, 5, |_, _| 1.0);
        let r = sinkhorn_scale(&ones, 1e-8, 100).unwrap();
        assert_eq!(r.d1, vec![1.0; 3]);
        assert_eq!(r.d2, vec![1.0; 5]);
        assert_eq!(r.s, ones);
        let mut zr = ones.clone();
        zr.row_mut(1).iter_mut().for_each(|x| *x = 0.0);
        assert_eq!(sinkhorn_scale(&zr, 1e-8, 100).unwrap_err(), Error::ZeroLine { which: "row", index: 1 });
    }

    #[test]
    fn sinkhorn_two_by_two_matches_hand_fixed_point() {
        // Starting from d2 = 1, one row step gives d1 = 2/3 and the column
        // step leaves d2 = 1, so S = (2/3) V.
        let v = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let r = sinkhorn_scale(&v, 1e-8, 100).unwrap();
        let expected = [4.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0];
        for (a, b) in r.s.data.iter().zip(expected) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn sinkhorn_output_is_a_valid_rectangular_profile() {
        let v = Mat::from_fn(6, 9, |i, j| 0.5 + ((i * 7 + j * 3) % 5) as f64);
        let r = sinkhorn_scale(&v, 1e-10, 10_000).unwrap();
        let rep = validate_variance_profile(&r.s, ProfileSide::Rectangular, 1e-10, None);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn sym_invariant_materializes_symmetric() {
        let spec = SymEnsembleSpec::SymInvariant {
            eigenvalue_law: SpectralSpec::Semicircle,
            basis: Basis::Dct2,
        };
        let w = sample_symmetric(&spec, 24, 3).unwrap();
        let d = w.op.materialize_dense(DEFAULT_MATERIALIZE_CAP).unwrap();
        assert!(d.is_symmetric(1e-10));
    }
}
