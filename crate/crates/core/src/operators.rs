//! Dense complex operators on labelled tensor-product spaces.
//!
//! Factor order is global: qubit first (slowest-varying index), then the
//! cavity, then the optional in-plane vibration. The qubit basis is
//! `[|g⟩, |e⟩]`.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const QUBIT: &str = "qubit";
pub const CAVITY: &str = "cavity";
pub const VIBRATION: &str = "vibration";

/// Relative max-norm tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// One tensor factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of labelled factors. The first factor varies slowest in
/// the flattened basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TensorSpace {
    factors: Vec<Factor>,
}

impl TensorSpace {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let factors: Vec<Factor> = factors
            .into_iter()
            .map(|(label, dim)| Factor { label: label.into(), dim })
            .collect();
        if factors.is_empty() {
            return Err(Error::InvalidSpace("a space needs at least one factor".into()));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.dim == 0 {
                return Err(Error::InvalidSpace(format!("factor `{}` has dimension 0", f.label)));
            }
            if factors[..i].iter().any(|g| g.label == f.label) {
                return Err(Error::InvalidSpace(format!("duplicate factor label `{}`", f.label)));
            }
        }
        Ok(Self { factors })
    }

    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Self::new([(label, dim)])
    }

    /// `qubit ⊗ cavity(n_c)`.
    pub fn qubit_cavity(n_c: usize) -> Result<Self> {
        Self::new([(QUBIT, 2), (CAVITY, n_c)])
    }

    /// `qubit ⊗ cavity(n_c) ⊗ vibration(n_v)`.
    pub fn qubit_cavity_vibration(n_c: usize, n_v: usize) -> Result<Self> {
        Self::new([(QUBIT, 2), (CAVITY, n_c), (VIBRATION, n_v)])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn has(&self, label: &str) -> bool {
        self.factors.iter().any(|f| f.label == label)
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|f| f.label == label)
            .ok_or_else(|| Error::UnknownFactor(label.to_string()))
    }

    pub fn factor_dim(&self, label: &str) -> Result<usize> {
        Ok(self.factors[self.position(label)?].dim)
    }

    /// Flat index of a multi-index given in factor order.
    pub fn flat_index(&self, local: &[usize]) -> usize {
        debug_assert_eq!(local.len(), self.factors.len());
        self.factors
            .iter()
            .zip(local)
            .fold(0, |acc, (f, &i)| acc * f.dim + i)
    }

    /// Multi-index of a flat index.
    pub fn local_indices(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, f) in out.iter_mut().zip(&self.factors).rev() {
            *slot = flat % f.dim;
            flat /= f.dim;
        }
        out
    }

    /// The same space with one factor removed.
    pub fn without(&self, label: &str) -> Result<Self> {
        let pos = self.position(label)?;
        let rest: Vec<(String, usize)> = self
            .factors
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != pos)
            .map(|(_, f)| (f.label.clone(), f.dim))
            .collect();
        Self::new(rest)
    }
}

impl fmt::Display for TensorSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(|x| format!("{}({})", x.label, x.dim)).collect();
        write!(f, "{}", parts.join(" ⊗ "))
    }
}

/// Largest entry modulus.
pub fn max_norm(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max|A − A†| / max|A|`, or 0 for the zero matrix.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let scale = max_norm(m);
    if scale == 0.0 {
        return 0.0;
    }
    max_norm(&(m - m.adjoint())) / scale
}

/// `max|A − B| / max(max|A|, max|B|)`, or 0 when both vanish.
pub fn relative_difference(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = max_norm(a).max(max_norm(b));
    if scale == 0.0 {
        return 0.0;
    }
    max_norm(&(a - b)) / scale
}

/// A square matrix over a [`TensorSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: TensorSpace,
    matrix: CMatrix,
    hermitian: bool,
}

impl Operator {
    pub fn new(space: TensorSpace, matrix: CMatrix) -> Result<Self> {
        let n = space.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if matrix.nrows() != n { matrix.nrows() } else { matrix.ncols() },
            });
        }
        if matrix.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(Self { space, matrix, hermitian: false })
    }

    /// Build and flag as Hermitian after checking to [`HERMITIAN_TOL`].
    pub fn hermitian(space: TensorSpace, matrix: CMatrix) -> Result<Self> {
        let mut op = Self::new(space, matrix)?;
        let defect = hermitian_defect(&op.matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        op.hermitian = true;
        Ok(op)
    }

    pub fn identity(space: TensorSpace) -> Self {
        let n = space.dim();
        Self { space, matrix: CMatrix::identity(n, n), hermitian: true }
    }

    pub fn zeros(space: TensorSpace) -> Self {
        let n = space.dim();
        Self { space, matrix: CMatrix::zeros(n, n), hermitian: true }
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_flagged_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.matrix)
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint(), hermitian: self.hermitian }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    fn check_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::InvalidSpace(format!(
                "operators live on different spaces: {} vs {}",
                self.space, other.space
            )));
        }
        Ok(())
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix * &other.matrix, hermitian: false })
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix + &other.matrix,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
            hermitian: false,
        })
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            space: self.space.clone(),
            matrix: &self.matrix * factor,
            hermitian: self.hermitian && factor.im == 0.0,
        }
    }

    /// Debug dump: one `row col re im` line per nonzero entry.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {} dim={}", self.space, self.dim())?;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                let z = self.matrix[(i, j)];
                if z != C64::new(0.0, 0.0) {
                    writeln!(out, "{i} {j} {:.16e} {:.16e}", z.re, z.im)?;
                }
            }
        }
        Ok(())
    }
}

/// Truncated bosonic ladder operators.
#[derive(Debug, Clone)]
pub struct FockOps {
    pub annihilate: CMatrix,
    pub create: CMatrix,
    pub number: CMatrix,
}

/// `annihilate[m−1, m] = √m`, `create = annihilate†`, `number = diag(0..dim)`.
pub fn fock_ops(dim: usize) -> Result<FockOps> {
    if dim < 2 {
        return Err(Error::Domain(format!("Fock truncation must be >= 2, got {dim}")));
    }
    let mut annihilate = CMatrix::zeros(dim, dim);
    for m in 1..dim {
        annihilate[(m - 1, m)] = c((m as f64).sqrt());
    }
    let create = annihilate.adjoint();
    let number = CMatrix::from_diagonal(&CVector::from_fn(dim, |m, _| c(m as f64)));
    Ok(FockOps { annihilate, create, number })
}

/// Pauli operators in the `[|g⟩, |e⟩]` basis.
#[derive(Debug, Clone)]
pub struct QubitOps {
    /// `|e⟩⟨e| − |g⟩⟨g|`.
    pub sigma_z: CMatrix,
    /// `|e⟩⟨g|`.
    pub sigma_plus: CMatrix,
    /// `|g⟩⟨e|`.
    pub sigma_minus: CMatrix,
    pub sigma_x: CMatrix,
}

pub fn qubit_ops() -> QubitOps {
    let z = c(0.0);
    let one = c(1.0);
    let sigma_z = CMatrix::from_row_slice(2, 2, &[-one, z, z, one]);
    let sigma_plus = CMatrix::from_row_slice(2, 2, &[z, z, one, z]);
    let sigma_minus = sigma_plus.adjoint();
    let sigma_x = &sigma_plus + &sigma_minus;
    QubitOps { sigma_z, sigma_plus, sigma_minus, sigma_x }
}

/// Kronecker product of `op` on the factor `label` with identities elsewhere.
pub fn embed(op: &CMatrix, space: &TensorSpace, label: &str) -> Result<Operator> {
    let pos = space.position(label)?;
    let dim = space.factors()[pos].dim;
    if op.nrows() != dim || op.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: op.nrows() });
    }
    let mut out = CMatrix::identity(1, 1);
    for (i, f) in space.factors().iter().enumerate() {
        out = if i == pos { out.kronecker(op) } else { out.kronecker(&CMatrix::identity(f.dim, f.dim)) };
    }
    let hermitian = hermitian_defect(op) == 0.0;
    Ok(Operator { space: space.clone(), matrix: out, hermitian })
}

/// Kronecker product over all factors of `space`, taking the listed local
/// operators and identities for the rest.
pub fn tensor(space: &TensorSpace, ops: &[(&str, &CMatrix)]) -> Result<CMatrix> {
    for (label, op) in ops {
        let dim = space.factor_dim(label)?;
        if op.nrows() != dim || op.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: op.nrows() });
        }
    }
    let mut out = CMatrix::identity(1, 1);
    for f in space.factors() {
        out = match ops.iter().find(|(label, _)| *label == f.label) {
            Some((_, op)) => out.kronecker(*op),
            None => out.kronecker(&CMatrix::identity(f.dim, f.dim)),
        };
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix, reusable for `exp(c·H)` at many `c`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Result<Self> {
        if h.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        let sym = (h + h.adjoint()) * c(0.5);
        let eig = sym.symmetric_eigen();
        Ok(Self { values: eig.eigenvalues, vectors: eig.eigenvectors })
    }

    /// `exp(factor · H)`.
    pub fn exp(&self, factor: C64) -> CMatrix {
        let phases = self.values.map(|l| (factor * l).exp());
        let mut scaled = self.vectors.clone();
        for (j, p) in phases.iter().enumerate() {
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= p);
        }
        scaled * self.vectors.adjoint()
    }

    /// `exp(factor · H) ψ` without forming the full matrix.
    pub fn apply_exp(&self, factor: C64, psi: &CVector) -> CVector {
        let mut coeffs = self.vectors.adjoint() * psi;
        for (z, l) in coeffs.iter_mut().zip(self.values.iter()) {
            *z *= (factor * l).exp();
        }
        &self.vectors * coeffs
    }
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

// Largest 1-norm for which the degree-13 Padé approximant meets double
// precision without scaling.
const THETA13: f64 = 5.371_920_351_148_152;

fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm_matrix(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite);
    }
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let norm = one_norm(a);
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a * c(0.5f64.powi(squarings));
    let b = |k: usize| c(PADE13[k]);
    let ident = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &ident * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &ident * b(0);
    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .ok_or_else(|| Error::Convergence("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// `exp(A)`: by eigendecomposition when `A` is flagged Hermitian, otherwise
/// by Padé scaling and squaring.
pub fn expm(op: &Operator) -> Result<Operator> {
    let matrix = if op.is_flagged_hermitian() {
        HermitianEigen::new(op.matrix())?.exp(c(1.0))
    } else {
        expm_matrix(op.matrix())?
    };
    Ok(Operator { space: op.space.clone(), matrix, hermitian: op.is_flagged_hermitian() })
}

/// A value together with a trust flag for results that may be polluted by
/// Fock-space truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub trusted: bool,
    pub warning: Option<String>,
}

/// Smallest Fock dimension considered safe for a displacement of size `amp`:
/// `|r|² + 6|r| + 10`.
pub fn required_dim(amplitude: f64) -> f64 {
    amplitude * amplitude + 6.0 * amplitude + 10.0
}

pub fn check_headroom(amplitude: f64, dim: usize) -> Result<()> {
    let required = required_dim(amplitude);
    if (dim as f64) < required {
        return Err(Error::Headroom { amplitude, dim, required });
    }
    Ok(())
}

/// Size of the leading Fock block on which a truncated displacement by
/// `amplitude` reproduces the untruncated one: `dim/2 − ⌈4|r|⌉`.
///
/// The exponential of the truncated generator is corrupted over roughly the
/// upper half of the space, not just the top few levels.
pub fn low_fock_block(amplitude: f64, dim: usize) -> usize {
    (dim / 2).saturating_sub((4.0 * amplitude).ceil() as usize)
}

/// `D(r) = exp(r b† − r* b)` on a `dim`-level cavity.
pub fn displacement(r: C64, dim: usize) -> Result<Flagged<CMatrix>> {
    let f = fock_ops(dim)?;
    let generator = &f.create * r - &f.annihilate * r.conj();
    let value = expm_matrix(&generator)?;
    let warning = check_headroom(r.norm(), dim).err().map(|e| e.to_string());
    Ok(Flagged { value, trusted: warning.is_none(), warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        // Small LCG keeps the test free of RNG crates.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = CMatrix::from_fn(n, n, |_, _| C64::new(next(), next()));
        (&m + m.adjoint()) * c(0.5)
    }

    #[test]
    fn space_bookkeeping() {
        let s = TensorSpace::qubit_cavity_vibration(5, 3).unwrap();
        assert_eq!(s.dim(), 30);
        assert_eq!(s.flat_index(&[1, 2, 1]), 15 + 6 + 1);
        assert_eq!(s.local_indices(22), vec![1, 2, 1]);
        assert_eq!(s.without(VIBRATION).unwrap(), TensorSpace::qubit_cavity(5).unwrap());
        assert!(TensorSpace::new([("a", 2), ("a", 3)]).is_err());
        assert!(TensorSpace::new([("a", 0)]).is_err());
        assert!(matches!(s.position("spin"), Err(Error::UnknownFactor(_))));
    }

    #[test]
    fn fock_structure() {
        assert!(fock_ops(1).is_err());
        let f = fock_ops(2).unwrap();
        assert_eq!(f.annihilate[(0, 1)], c(1.0));
        assert_eq!(f.annihilate.iter().filter(|z| z.norm() != 0.0).count(), 1);

        let dim = 7;
        let f = fock_ops(dim).unwrap();
        assert!(max_norm(&(&f.create * &f.annihilate - &f.number)) < 1e-14);
        let comm = &f.annihilate * &f.create - &f.create * &f.annihilate;
        // Oracle: [b, b†] = 1 except the truncation corner, −(dim−1).
        for i in 0..dim {
            for j in 0..dim {
                let expected = if i != j {
                    0.0
                } else if i == dim - 1 {
                    -((dim - 1) as f64)
                } else {
                    1.0
                };
                assert!((comm[(i, j)] - c(expected)).norm() < 1e-13, "({i},{j})");
            }
        }
    }

    #[test]
    fn pauli_algebra() {
        let q = qubit_ops();
        let g = CVector::from_vec(vec![c(1.0), c(0.0)]);
        assert_eq!(&q.sigma_z * &g, -&g);
        let id = CMatrix::identity(2, 2);
        assert_eq!(&q.sigma_plus * &q.sigma_minus + &q.sigma_minus * &q.sigma_plus, id);
        assert_eq!(&q.sigma_x * &q.sigma_x, id);
        let zp = &q.sigma_z * &q.sigma_plus - &q.sigma_plus * &q.sigma_z;
        assert_eq!(zp, &q.sigma_plus * c(2.0));
        let zm = &q.sigma_z * &q.sigma_minus - &q.sigma_minus * &q.sigma_z;
        assert_eq!(zm, &q.sigma_minus * c(-2.0));
    }

    #[test]
    fn embedding_properties() {
        let space = TensorSpace::qubit_cavity_vibration(4, 3).unwrap();
        let q = qubit_ops();
        let f = fock_ops(4).unwrap();
        let sz = embed(&q.sigma_z, &space, QUBIT).unwrap();
        let n = embed(&f.number, &space, CAVITY).unwrap();
        assert_eq!(sz.commutator(&n).unwrap().matrix(), &CMatrix::zeros(24, 24));
        assert_eq!(embed(&CMatrix::identity(3, 3), &space, VIBRATION).unwrap().matrix(), &CMatrix::identity(24, 24));
        let emb = embed(&f.number, &space, CAVITY).unwrap();
        assert_eq!(emb.trace(), f.number.trace() * c(6.0));
        // Homomorphism.
        let ab = &f.annihilate * &f.create;
        let lhs = embed(&ab, &space, CAVITY).unwrap();
        let rhs = embed(&f.annihilate, &space, CAVITY).unwrap().compose(&embed(&f.create, &space, CAVITY).unwrap()).unwrap();
        assert_eq!(lhs.matrix(), rhs.matrix());
        assert!(embed(&f.number, &space, QUBIT).is_err());
        assert!(embed(&f.number, &space, "spin").is_err());
    }

    #[test]
    fn expm_basics() {
        let s = TensorSpace::single(QUBIT, 2).unwrap();
        let zero = Operator::new(s.clone(), CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(expm(&zero).unwrap().matrix(), &CMatrix::identity(2, 2));

        let q = qubit_ops();
        for theta in [0.3, 1.7, 12.0] {
            let a = Operator::new(s.clone(), &q.sigma_x * C64::new(0.0, theta)).unwrap();
            let got = expm(&a).unwrap();
            let expected = CMatrix::identity(2, 2) * c(theta.cos()) + &q.sigma_x * C64::new(0.0, theta.sin());
            assert!(relative_difference(got.matrix(), &expected) < 1e-13);
        }
        let bad = Operator::new(s, CMatrix::from_element(2, 2, c(f64::NAN)));
        assert!(matches!(bad, Err(Error::NonFinite)));
        assert!(expm_matrix(&CMatrix::from_element(2, 2, c(f64::INFINITY))).is_err());
    }

    #[test]
    fn expm_unitary_and_routes_agree() {
        for (n, seed) in [(32, 1u64), (64, 2), (128, 3)] {
            let h = random_hermitian(n, seed) * c(8.0);
            let eig = HermitianEigen::new(&h).unwrap();
            let u = eig.exp(C64::new(0.0, -1.0));
            let u_inv = eig.exp(C64::new(0.0, 1.0));
            let id = CMatrix::identity(n, n);
            assert!(max_norm(&(&u * &u_inv - &id)) < 1e-9);
            let pade = expm_matrix(&(&h * C64::new(0.0, -1.0))).unwrap();
            let rel = (&pade - &u).norm() / u.norm();
            assert!(rel < 1e-10, "n={n}: {rel:e}");
        }
    }

    #[test]
    fn displacement_identities() {
        let dim = 32;
        let d0 = displacement(c(0.0), dim).unwrap();
        assert!(d0.trusted);
        assert!(max_norm(&(d0.value - CMatrix::identity(dim, dim))) < 1e-15);

        let r = C64::new(0.6, -0.8);
        let d = displacement(r, dim).unwrap();
        assert!(d.trusted);
        let f = fock_ops(dim).unwrap();
        let shifted = d.value.adjoint() * &f.annihilate * &d.value;
        let expected = &f.annihilate + CMatrix::identity(dim, dim) * r;
        let block = low_fock_block(r.norm(), dim);
        assert_eq!(block, 12);
        let diff = (shifted - expected).view((0, 0), (block, block)).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(diff < 1e-6, "{diff:e}");

        // Poisson statistics of D(r)|0⟩.
        let mut fact = 1.0;
        for m in 0..dim {
            if m > 0 {
                fact *= m as f64;
            }
            let p = d.value[(m, 0)].norm_sqr();
            let poisson = (-r.norm_sqr()).exp() * r.norm_sqr().powi(m as i32) / fact;
            assert!((p - poisson).abs() < 1e-8, "m={m}");
        }

        let dm = displacement(-r, dim).unwrap().value;
        let lo = dim / 2;
        assert!(max_norm(&(dm.view((0, 0), (lo, lo)) - d.value.adjoint().view((0, 0), (lo, lo)))) < 1e-8);

        let big = displacement(c(3.0), 20).unwrap();
        assert!(!big.trusted && big.warning.is_some());
    }

    #[test]
    fn text_dump() {
        let s = TensorSpace::single(QUBIT, 2).unwrap();
        let op = Operator::hermitian(s, qubit_ops().sigma_x).unwrap();
        let mut buf = Vec::new();
        op.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn expm_commutes_with_adjoint(seed in 0u64..1000, scale in 0.1f64..20.0) {
            let m = random_hermitian(6, seed) * C64::new(scale, 0.3 * scale);
            let lhs = expm_matrix(&m).unwrap().adjoint();
            let rhs = expm_matrix(&m.adjoint()).unwrap();
            prop_assert!(relative_difference(&lhs, &rhs) < 1e-10);
        }

        #[test]
        fn hermitian_flag_rejects_non_hermitian(seed in 0u64..1000) {
            let s = TensorSpace::single(CAVITY, 5).unwrap();
            let mut m = random_hermitian(5, seed);
            m[(0, 1)] += c(1.0);
            prop_assert!(Operator::hermitian(s, m).is_err());
        }
    }
}
