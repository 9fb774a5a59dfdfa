//! Pure states, density operators, POVMs and Lüders measurement on small
//! multipartite Hilbert spaces.
//!
//! Every state carries its list of subsystem dimensions; the joint space is
//! the tensor product in list order, with the first subsystem most
//! significant in the row-major index.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::classical::shannon_entropy_unchecked;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64};

/// Largest joint dimension handled by the dense routines.
pub const MAX_DIM: usize = 64;

pub const NORM_TOL: f64 = 1e-10;
pub const POVM_SUM_TOL: f64 = 1e-9;
pub const EIGEN_CLAMP: f64 = 1e-10;

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Validation(format!("bad subsystem dimensions {dims:?}")));
    }
    let total: usize = dims.iter().product();
    if total > MAX_DIM {
        return Err(Error::Validation(format!(
            "joint dimension {total} exceeds cap {MAX_DIM}"
        )));
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(dims: Vec<usize>, amplitudes: CVector) -> Result<Self> {
        let total = check_dims(&dims)?;
        if amplitudes.len() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: amplitudes.len(),
            });
        }
        let norm_sq = amplitudes.norm_squared();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::Validation(format!(
                "state norm squared {norm_sq} is not 1"
            )));
        }
        Ok(Self { dims, amplitudes })
    }

    /// Normalizes `amplitudes` before validating.
    pub fn normalized(dims: Vec<usize>, amplitudes: CVector) -> Result<Self> {
        let n = amplitudes.norm();
        if n < 1e-15 {
            return Err(Error::Validation("zero vector cannot be normalized".into()));
        }
        Self::new(dims, amplitudes / c(n, 0.0))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        let v = CVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|&a| c(a, 0.0)));
        Self::new(vec![amplitudes.len()], v)
    }

    /// Computational basis vector `|k>` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::OutOfRange {
                value: k as f64,
                range: "basis index < dim",
            });
        }
        let mut v = CVector::zeros(dim);
        v[k] = linalg::ONE;
        Self::new(vec![dim], v)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        check_dims(&dims)?;
        Ok(PureState {
            dims,
            amplitudes: linalg::kron_vec(&self.amplitudes, &other.amplitudes),
        })
    }

    pub fn projector(&self) -> DensityOp {
        DensityOp {
            dims: self.dims.clone(),
            matrix: linalg::outer(&self.amplitudes),
        }
    }

    /// Collapses the subsystem structure into a single register.
    pub fn flattened(&self) -> PureState {
        PureState {
            dims: vec![self.dim()],
            amplitudes: self.amplitudes.clone(),
        }
    }
}

/// `|<a|b>|`, the overlap used throughout the comparison game.
pub fn overlap(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm().min(1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityOp {
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl DensityOp {
    pub fn new(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let rho = Self::from_parts(dims, matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape-checked only; used for intermediate unnormalized operators.
    pub(crate) fn from_parts(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let total = check_dims(&dims)?;
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: matrix.nrows(),
            });
        }
        Ok(Self { dims, matrix })
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(vec![dim], linalg::identity(dim).scale(1.0 / dim as f64))
    }

    /// Classical mixture `Σ w_k |s_k><s_k|`.
    pub fn mixture(weights: &[f64], states: &[PureState]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::Validation("mixture needs one weight per state".into()));
        }
        let dims = states[0].dims.clone();
        let mut m = CMatrix::zeros(states[0].dim(), states[0].dim());
        for (w, s) in weights.iter().zip(states) {
            if s.dims != dims {
                return Err(Error::DimensionMismatch {
                    expected: states[0].dim(),
                    got: s.dim(),
                });
            }
            m += linalg::outer(&s.amplitudes).scale(*w);
        }
        Self::new(dims, m)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = linalg::hermiticity_defect(&self.matrix);
        if herm > NORM_TOL {
            return Err(Error::Validation(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = linalg::trace(&self.matrix);
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::Validation(format!("trace {tr} is not 1")));
        }
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -EIGEN_CLAMP {
            return Err(Error::Validation(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    pub fn tensor(&self, other: &DensityOp) -> Result<DensityOp> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityOp::from_parts(dims, linalg::kron(&self.matrix, &other.matrix))
    }

    /// Regroups subsystems without touching the matrix; the product of
    /// `dims` must equal the current joint dimension.
    pub fn with_dims(&self, dims: Vec<usize>) -> Result<DensityOp> {
        DensityOp::from_parts(dims, self.matrix.clone())
    }

    /// Fully dephases one subsystem in its computational basis, turning it
    /// into a classical register.
    pub fn dephase(&self, subsystem: usize) -> Result<DensityOp> {
        if subsystem >= self.dims.len() {
            return Err(Error::BadSubsystem {
                index: subsystem,
                count: self.dims.len(),
            });
        }
        let strides = strides(&self.dims);
        let n = self.dim();
        let d = self.dims[subsystem];
        let s = strides[subsystem];
        let mut m = self.matrix.clone();
        for i in 0..n {
            for j in 0..n {
                if (i / s) % d != (j / s) % d {
                    m[(i, j)] = linalg::ZERO;
                }
            }
        }
        DensityOp::from_parts(self.dims.clone(), m)
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut out = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        out[k] = out[k + 1] * dims[k + 1];
    }
    out
}

/// Reduced operator on the subsystems listed in `keep` (kept in ascending order).
pub fn partial_trace(rho: &DensityOp, keep: &[usize]) -> Result<DensityOp> {
    let count = rho.dims.len();
    if keep.is_empty() {
        return Err(Error::Validation("keep set must be non-empty".into()));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&bad) = keep.iter().find(|&&k| k >= count) {
        return Err(Error::BadSubsystem { index: bad, count });
    }
    let traced: Vec<usize> = (0..count).filter(|k| !keep.contains(k)).collect();
    let st = strides(&rho.dims);
    let kept_dims: Vec<usize> = keep.iter().map(|&k| rho.dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| rho.dims[k]).collect();
    let kept_total: usize = kept_dims.iter().product();
    let traced_total: usize = traced_dims.iter().product();

    let offset = |subs: &[usize], sub_dims: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for pos in (0..subs.len()).rev() {
            let digit = idx % sub_dims[pos];
            idx /= sub_dims[pos];
            off += digit * st[subs[pos]];
        }
        off
    };
    let kept_off: Vec<usize> = (0..kept_total).map(|i| offset(&keep, &kept_dims, i)).collect();
    let traced_off: Vec<usize> = (0..traced_total)
        .map(|i| offset(&traced, &traced_dims, i))
        .collect();

    let mut out = CMatrix::zeros(kept_total, kept_total);
    for (r, &ro) in kept_off.iter().enumerate() {
        for (s, &so) in kept_off.iter().enumerate() {
            let mut acc = linalg::ZERO;
            for &t in &traced_off {
                acc += rho.matrix[(ro + t, so + t)];
            }
            out[(r, s)] = acc;
        }
    }
    DensityOp::from_parts(kept_dims, out)
}

/// Von Neumann entropy in bits; eigenvalues in `[-1e-10, 0)` count as zero.
pub fn von_neumann_entropy(rho: &DensityOp) -> f64 {
    let values: Vec<f64> = rho
        .eigenvalues()
        .into_iter()
        .map(|v| if v < 0.0 { 0.0 } else { v })
        .collect();
    shannon_entropy_unchecked(&values)
}

/// `S(A|B) = S(AB) - S(B)` where `a` and `b` partition the kept subsystems.
pub fn conditional_entropy(rho: &DensityOp, a: &[usize], b: &[usize]) -> Result<f64> {
    let mut ab: Vec<usize> = a.iter().chain(b).copied().collect();
    ab.sort_unstable();
    let s_ab = von_neumann_entropy(&partial_trace(rho, &ab)?);
    let s_b = if b.is_empty() {
        0.0
    } else {
        von_neumann_entropy(&partial_trace(rho, b)?)
    };
    Ok(s_ab - s_b)
}

/// `S(A;B) = S(A) + S(B) - S(AB)`.
pub fn mutual_information(rho: &DensityOp, a: &[usize], b: &[usize]) -> Result<f64> {
    let s_a = von_neumann_entropy(&partial_trace(rho, a)?);
    Ok(s_a - conditional_entropy(rho, a, b)?)
}

#[derive(Clone, Debug)]
pub struct Povm {
    dims: Vec<usize>,
    elements: Vec<CMatrix>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(dims: Vec<usize>, elements: Vec<CMatrix>, labels: Vec<String>) -> Result<Self> {
        let total = check_dims(&dims)?;
        if elements.is_empty() {
            return Err(Error::InvalidPovm("no elements".into()));
        }
        if labels.len() != elements.len() {
            return Err(Error::InvalidPovm("one label per element required".into()));
        }
        let mut sum = CMatrix::zeros(total, total);
        for (k, e) in elements.iter().enumerate() {
            if e.nrows() != total || e.ncols() != total {
                return Err(Error::DimensionMismatch {
                    expected: total,
                    got: e.nrows(),
                });
            }
            if linalg::hermiticity_defect(e) > NORM_TOL {
                return Err(Error::InvalidPovm(format!("element {k} not Hermitian")));
            }
            let min = linalg::hermitian_eigenvalues(e)[0];
            if min < -NORM_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {k} has negative eigenvalue {min:e}"
                )));
            }
            sum += e;
        }
        let defect = linalg::hermitian_norm(&(sum - linalg::identity(total)));
        if defect > POVM_SUM_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to identity only within {defect:e}"
            )));
        }
        Ok(Self {
            dims,
            elements,
            labels,
        })
    }

    /// Same as [`Povm::new`] with labels `"0", "1", ...`.
    pub fn unlabeled(dims: Vec<usize>, elements: Vec<CMatrix>) -> Result<Self> {
        let labels = (0..elements.len()).map(|k| k.to_string()).collect();
        Self::new(dims, elements, labels)
    }

    pub fn computational_basis(dim: usize) -> Result<Self> {
        let elements = (0..dim)
            .map(|k| {
                let mut m = CMatrix::zeros(dim, dim);
                m[(k, k)] = linalg::ONE;
                m
            })
            .collect();
        Self::unlabeled(vec![dim], elements)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Born-rule probabilities `tr(E_k rho)`, clamped at zero.
    pub fn probabilities(&self, rho: &DensityOp) -> Result<Vec<f64>> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: rho.dim(),
            });
        }
        Ok(self
            .elements
            .iter()
            .map(|e| linalg::trace_product_re(e, &rho.matrix).max(0.0))
            .collect())
    }

    /// Probabilities on a pure state.
    pub fn probabilities_pure(&self, psi: &PureState) -> Result<Vec<f64>> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.dim(),
            });
        }
        Ok(self
            .elements
            .iter()
            .map(|e| linalg::expectation(e, &psi.amplitudes).max(0.0))
            .collect())
    }

    /// Lifts the POVM onto subsystem `position` of a register with `dims`,
    /// acting as identity elsewhere.
    pub fn embed(&self, dims: &[usize], position: usize) -> Result<Povm> {
        if position >= dims.len() {
            return Err(Error::BadSubsystem {
                index: position,
                count: dims.len(),
            });
        }
        if dims[position] != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: dims[position],
                got: self.dim(),
            });
        }
        let before: usize = dims[..position].iter().product();
        let after: usize = dims[position + 1..].iter().product();
        let left = linalg::identity(before);
        let right = linalg::identity(after);
        let elements = self
            .elements
            .iter()
            .map(|e| linalg::kron(&linalg::kron(&left, e), &right))
            .collect();
        Ok(Povm {
            dims: dims.to_vec(),
            elements,
            labels: self.labels.clone(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct MeasurementRecord {
    pub outcome: usize,
    pub outcome_label: String,
    pub probability: f64,
    pub residual: DensityOp,
}

/// Samples an outcome and applies the Lüders update
/// `sqrt(E) rho sqrt(E) / tr(E rho)`.
pub fn measure<R: Rng + ?Sized>(rho: &DensityOp, m: &Povm, rng: &mut R) -> Result<MeasurementRecord> {
    let probs = m.probabilities(rho)?;
    let total: f64 = probs.iter().sum();
    if probs.iter().all(|&p| p < 1e-12) {
        return Err(Error::InvalidPovm("all outcome probabilities vanish".into()));
    }
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut outcome = probs.len() - 1;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc && p > 0.0 {
            outcome = k;
            break;
        }
    }
    while probs[outcome] <= 0.0 {
        outcome -= 1;
    }
    let residual = luders_update(rho, &m.elements[outcome])?;
    Ok(MeasurementRecord {
        outcome,
        outcome_label: m.labels[outcome].clone(),
        probability: probs[outcome] / total,
        residual,
    })
}

/// [`measure`] with a fresh generator seeded from `seed`.
pub fn measure_seeded(rho: &DensityOp, m: &Povm, seed: u64) -> Result<MeasurementRecord> {
    measure(rho, m, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Post-measurement state for one POVM element.
pub fn luders_update(rho: &DensityOp, element: &CMatrix) -> Result<DensityOp> {
    // A projector is its own square root.
    let root = if (element * element - element).norm() <= 1e-12 {
        element.clone()
    } else {
        linalg::psd_sqrt(element)
    };
    let unnorm = &root * &rho.matrix * &root;
    let p = linalg::trace(&unnorm).re;
    if p <= 1e-12 {
        return Err(Error::InvalidPovm("outcome has zero probability".into()));
    }
    let matrix = linalg::hermitian_part(&unnorm.unscale(p));
    DensityOp::from_parts(rho.dims.clone(), matrix)
}

/// Purified random choice: `sqrt(p)|0>_R|phi0> + sqrt(1-p)|1>_R|phi1>`, with
/// the register `R` as the first subsystem.
pub fn purify_choice(p: f64, phi0: &PureState, phi1: &PureState) -> Result<PureState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange {
            value: p,
            range: "[0, 1]",
        });
    }
    if phi0.dims != phi1.dims {
        return Err(Error::DimensionMismatch {
            expected: phi0.dim(),
            got: phi1.dim(),
        });
    }
    let n = phi0.dim();
    let mut amps = CVector::zeros(2 * n);
    let a = p.sqrt();
    let b = (1.0 - p).sqrt();
    for i in 0..n {
        amps[i] = phi0.amplitudes[i] * a;
        amps[n + i] = phi1.amplitudes[i] * b;
    }
    let mut dims = vec![2];
    dims.extend_from_slice(&phi0.dims);
    PureState::normalized(dims, amps)
}

/// Realizes unit vectors whose Gram matrix is `gram`, in dimension
/// `rank(gram)`, through the Hermitian square root restricted to the support.
pub fn gram_to_states(gram: &CMatrix) -> Result<Vec<PureState>> {
    let n = gram.nrows();
    if n == 0 || gram.ncols() != n {
        return Err(Error::Validation("Gram matrix must be square and non-empty".into()));
    }
    if linalg::hermiticity_defect(gram) > 1e-10 {
        return Err(Error::Validation("Gram matrix not Hermitian".into()));
    }
    for i in 0..n {
        if (gram[(i, i)].re - 1.0).abs() > 1e-10 || gram[(i, i)].im.abs() > 1e-10 {
            return Err(Error::Validation("Gram matrix needs unit diagonal".into()));
        }
    }
    let (values, vectors) = linalg::hermitian_eigen(gram);
    let scale = values.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    if values[0] < -1e-10 * scale {
        return Err(Error::Validation(format!(
            "Gram matrix not PSD (eigenvalue {:e})",
            values[0]
        )));
    }
    let support: Vec<usize> = (0..n).filter(|&k| values[k] > 1e-12 * scale).collect();
    let rank = support.len();
    // Row r of the realization is sqrt(lambda_r) * conj(u_r)^T, so column i
    // holds the coordinates of state i.
    (0..n)
        .map(|i| {
            let v = CVector::from_iterator(
                rank,
                support
                    .iter()
                    .map(|&k| vectors[(i, k)].conj() * values[k].sqrt()),
            );
            PureState::normalized(vec![rank], v)
        })
        .collect()
}

/// One-column CSV of eigenvalues, ascending.
pub fn eigenvalues_csv(rho: &DensityOp) -> String {
    let mut out = String::from("eigenvalue\n");
    for v in rho.eigenvalues() {
        out.push_str(&format!("{v}\n"));
    }
    out
}

/// JSON layout for states and operators: subsystem dims plus interleaved
/// `(re, im)` pairs in row-major order.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ComplexArrayJson {
    pub dims: Vec<usize>,
    pub re_im: Vec<f64>,
}

fn interleave<'a>(values: impl Iterator<Item = &'a C64>) -> Vec<f64> {
    values.flat_map(|z| [z.re, z.im]).collect()
}

fn deinterleave(re_im: &[f64]) -> Result<Vec<C64>> {
    if !re_im.len().is_multiple_of(2) {
        return Err(Error::Parse("interleaved array has odd length".into()));
    }
    Ok(re_im.chunks(2).map(|p| c(p[0], p[1])).collect())
}

impl PureState {
    pub fn to_json(&self) -> ComplexArrayJson {
        ComplexArrayJson {
            dims: self.dims.clone(),
            re_im: interleave(self.amplitudes.iter()),
        }
    }

    pub fn from_json(j: &ComplexArrayJson) -> Result<Self> {
        let amps = deinterleave(&j.re_im)?;
        Self::new(j.dims.clone(), CVector::from_vec(amps))
    }
}

impl DensityOp {
    pub fn to_json(&self) -> ComplexArrayJson {
        let n = self.dim();
        let row_major: Vec<C64> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.matrix[(i, j)])
            .collect();
        ComplexArrayJson {
            dims: self.dims.clone(),
            re_im: interleave(row_major.iter()),
        }
    }

    pub fn from_json(j: &ComplexArrayJson) -> Result<Self> {
        let vals = deinterleave(&j.re_im)?;
        let n = (vals.len() as f64).sqrt().round() as usize;
        if n * n != vals.len() {
            return Err(Error::Parse("operator entries do not form a square".into()));
        }
        Self::new(j.dims.clone(), CMatrix::from_row_slice(n, n, &vals))
    }
}
