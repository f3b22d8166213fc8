//! Dense complex linear algebra for small operators and finite unitary groups.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

pub type C64 = nalgebra::Complex<f64>;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `e^{iθ}`.
#[inline]
pub fn phase(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// A square complex matrix acting on a `dim`-dimensional Hilbert space.
#[derive(Clone, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator({}x{})", self.dim(), self.dim())?;
        for i in 0..self.dim() {
            write!(f, "\n  [")?;
            for j in 0..self.dim() {
                let z = self.mat[(i, j)];
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            write!(f, " ]")?;
        }
        Ok(())
    }
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self { mat: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: DMatrix::identity(dim, dim) }
    }

    /// Wraps a square matrix. Panics on non-square input or non-finite entries.
    pub fn from_matrix(mat: DMatrix<C64>) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "operator must be square");
        assert!(
            mat.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            "operator entries must be finite"
        );
        Self { mat }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::from_matrix(DMatrix::from_fn(dim, dim, f))
    }

    /// Row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Ok(Self::from_fn(dim, |i, j| entries[i * dim + j]))
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let d = diag.len();
        Self::from_fn(d, |i, j| if i == j { diag[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Self::from_fn(d, |i, j| if i == j { c64(diag[i], 0.0) } else { c64(0.0, 0.0) })
    }

    /// `|i><j|` in dimension `dim`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut op = Self::zeros(dim);
        op.mat[(i, j)] = c64(1.0, 0.0);
        op
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.mat[(i, j)] = value;
    }

    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { mat: &self.mat * c64(s, 0.0) }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self { mat: &self.mat * s }
    }

    /// `U A U^†`.
    pub fn conjugate_by(&self, u: &Operator) -> Self {
        Self { mat: &u.mat * &self.mat * u.mat.adjoint() }
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.mat.iter().zip(other.mat.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `(A + A^†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self { mat: (&self.mat + self.mat.adjoint()) * c64(0.5, 0.0) }
    }

    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.mat.adjoint() * &self.mat;
        let id = DMatrix::<C64>::identity(self.dim(), self.dim());
        prod.iter().zip(id.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian operator.
    pub fn eigh(&self) -> Result<(Vec<f64>, DMatrix<C64>)> {
        let defect = self.hermiticity_defect();
        let scale = self.max_abs().max(1.0);
        if defect > 1e-9 * scale {
            return Err(Error::NotHermitian { deviation: defect });
        }
        Ok(eigh_sorted(&self.hermitian_part().mat))
    }

    /// `f(A)` for Hermitian `A`, applied through the eigendecomposition of its Hermitian part.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> Self {
        let (vals, vecs) = eigh_sorted(&self.hermitian_part().mat);
        let diag = DMatrix::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|&l| c64(f(l), 0.0))));
        Self::from_matrix(&vecs * diag * vecs.adjoint())
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigh()?.0)
    }

    pub fn rank(&self, tol: f64) -> Result<usize> {
        Ok(self.eigenvalues()?.iter().filter(|&&l| l.abs() > tol).count())
    }

    /// `self ⊕ 0_extra`.
    pub fn pad(&self, extra: usize) -> Self {
        let d = self.dim();
        Self::from_fn(d + extra, |i, j| if i < d && j < d { self.mat[(i, j)] } else { c64(0.0, 0.0) })
    }

    /// `self ⊕ other`.
    pub fn direct_sum(&self, other: &Operator) -> Self {
        let d = self.dim();
        let e = other.dim();
        Self::from_fn(d + e, |i, j| {
            if i < d && j < d {
                self.mat[(i, j)]
            } else if i >= d && j >= d {
                other.mat[(i - d, j - d)]
            } else {
                c64(0.0, 0.0)
            }
        })
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.dim());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// `exp(iφ P)` for a Hermitian projector `P`: `I + (e^{iφ} - 1) P`.
    pub fn projector_phase(projector: &Operator, angle: f64) -> Self {
        let id = Self::identity(projector.dim());
        &id + &projector.scale_complex(phase(angle) - c64(1.0, 0.0))
    }

    /// Multiplies by the unimodular phase that makes the first entry with
    /// modulus above `threshold` real and positive.
    pub fn phase_normalized(&self, threshold: f64) -> Self {
        match self.mat.iter().find(|z| z.norm() > threshold) {
            Some(z) => self.scale_complex(z.conj() / z.norm()),
            None => self.clone(),
        }
    }

    pub fn apply(&self, v: &StateVector) -> DVector<C64> {
        &self.mat * &v.amps
    }
}

/// Frobenius inner product `tr(A^† B)`.
pub fn frobenius_inner(a: &Operator, b: &Operator) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(a.mat.iter().zip(b.mat.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Real part of `tr(A B)` for Hermitian `A`, `B`; panics on dimension mismatch.
pub fn trace_product(a: &Operator, b: &Operator) -> f64 {
    assert_eq!(a.dim(), b.dim());
    let n = a.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a.mat[(i, j)] * b.mat[(j, i)]).re;
        }
    }
    acc
}

/// Smallest eigenvalue of a Hermitian operator.
pub fn min_eigenvalue(a: &Operator) -> Result<f64> {
    Ok(a.eigenvalues()?[0])
}

pub(crate) fn eigh_sorted(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 1 {
        return (vec![m[(0, 0)].re], DMatrix::identity(1, 1));
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator { mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator { mat: &self.mat - &rhs.mat }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator { mat: &self.mat * &rhs.mat }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { mat: -&self.mat }
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        self.mat += &rhs.mat;
    }
}

impl<'a> std::iter::Sum<&'a Operator> for Option<Operator> {
    fn sum<I: Iterator<Item = &'a Operator>>(iter: I) -> Self {
        let mut acc: Option<Operator> = None;
        for op in iter {
            match acc.as_mut() {
                Some(a) => *a += op,
                None => acc = Some(op.clone()),
            }
        }
        acc
    }
}

/// A normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    /// Normalizes `amps`; fails on the zero vector.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        Self::from_dvector(DVector::from_vec(amps))
    }

    pub fn from_dvector(amps: DVector<C64>) -> Result<Self> {
        let norm = amps.norm();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self { amps: amps / c64(norm, 0.0) })
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = DVector::zeros(dim);
        amps[k] = c64(1.0, 0.0);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn projector(&self) -> Operator {
        Operator { mat: &self.amps * self.amps.adjoint() }
    }

    pub fn transformed(&self, u: &Operator) -> Result<Self> {
        Self::from_dvector(&u.mat * &self.amps)
    }

    /// `self ⊕ 0_extra`.
    pub fn pad(&self, extra: usize) -> Self {
        let mut amps = DVector::zeros(self.dim() + extra);
        amps.rows_mut(0, self.dim()).copy_from(&self.amps);
        Self { amps }
    }
}

/// A finite set of unitaries, deduplicated up to global phase.
#[derive(Clone, Debug)]
pub struct UnitarySet {
    dim: usize,
    elements: Vec<Operator>,
    tolerance: f64,
}

impl UnitarySet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Index of the element equal to `u` up to global phase.
    pub fn position(&self, u: &Operator) -> Option<usize> {
        let key = u.phase_normalized(PHASE_THRESHOLD);
        self.elements.iter().position(|e| e.max_abs_diff(&key) <= self.tolerance)
    }

    pub fn contains(&self, u: &Operator) -> bool {
        self.position(u).is_some()
    }
}

const PHASE_THRESHOLD: f64 = 1e-6;

/// Closure of `generators` under multiplication, modulo global phase.
///
/// Elements are stored phase-normalized (first entry with modulus above
/// `1e-6` made real positive). The identity is always element 0.
pub fn generate_group(generators: &[Operator], max_size: usize) -> Result<UnitarySet> {
    generate_group_with(generators, max_size, &Tolerances::default())
}

pub fn generate_group_with(
    generators: &[Operator],
    max_size: usize,
    tol: &Tolerances,
) -> Result<UnitarySet> {
    let dim = match generators.first() {
        Some(g) => g.dim(),
        None => return Err(Error::OutOfRange("at least one generator is required".into())),
    };
    for g in generators {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: g.dim() });
        }
        let defect = g.unitarity_defect();
        if defect > tol.unitary {
            return Err(Error::NotUnitary { deviation: defect });
        }
    }
    let mut set = UnitarySet { dim, elements: vec![Operator::identity(dim)], tolerance: tol.dedup };
    let mut next = 0;
    while next < set.elements.len() {
        let current = set.elements[next].clone();
        for g in generators {
            let candidate = (g * &current).phase_normalized(PHASE_THRESHOLD);
            if !set.contains(&candidate) {
                if set.elements.len() >= max_size {
                    return Err(Error::GroupTooLarge { max_size });
                }
                set.elements.push(candidate);
            }
        }
        next += 1;
    }
    Ok(set)
}
