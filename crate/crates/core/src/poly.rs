//! Univariate polynomials over a Galois ring, with multipoint evaluation and
//! interpolation in a naive (Horner / Lagrange) and a product-tree variant.
//! Matrix-coefficient polynomials are handled entrywise.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::ring::{GaloisRing, RingElement};

/// Point count at which [`EvalMode::Auto`] switches to the product tree.
pub const FAST_THRESHOLD: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    Naive,
    Fast,
    #[default]
    Auto,
}

impl EvalMode {
    fn use_tree(self, points: usize) -> bool {
        match self {
            EvalMode::Naive => false,
            EvalMode::Fast => true,
            EvalMode::Auto => points >= FAST_THRESHOLD,
        }
    }
}

/// Polynomial with flat coefficient words, constant term first.
/// Invariant: the highest stored coefficient is nonzero (zero poly is empty).
#[derive(Clone, PartialEq, Eq)]
pub struct RingPoly {
    ring: GaloisRing,
    coeffs: Vec<u64>,
}

impl fmt::Debug for RingPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cs: Vec<String> = self
            .coeffs()
            .iter()
            .map(|c| self.ring.format_element(c))
            .collect();
        write!(f, "RingPoly<{}>{:?}", self.ring.describe(), cs)
    }
}

impl RingPoly {
    pub fn zero(ring: &GaloisRing) -> Self {
        RingPoly {
            ring: ring.clone(),
            coeffs: Vec::new(),
        }
    }

    pub(crate) fn from_flat(ring: GaloisRing, coeffs: Vec<u64>) -> Self {
        debug_assert_eq!(coeffs.len() % ring.width(), 0);
        let mut p = RingPoly { ring, coeffs };
        p.trim();
        p
    }

    pub fn from_coeffs(ring: &GaloisRing, coeffs: &[RingElement]) -> Result<Self> {
        let mut flat = Vec::with_capacity(coeffs.len() * ring.width());
        for c in coeffs {
            ring.check(c)?;
            flat.extend_from_slice(c.words());
        }
        Ok(Self::from_flat(ring.clone(), flat))
    }

    pub fn constant(ring: &GaloisRing, c: &RingElement) -> Self {
        Self::from_flat(ring.clone(), c.words().to_vec())
    }

    /// x^k.
    pub fn monomial(ring: GaloisRing, k: usize) -> Self {
        let w = ring.width();
        let mut coeffs = vec![0; (k + 1) * w];
        coeffs[k * w..(k + 1) * w].copy_from_slice(ring.one().words());
        RingPoly { ring, coeffs }
    }

    /// x - a.
    pub fn linear(ring: &GaloisRing, a: &RingElement) -> Self {
        let mut flat = ring.neg(a).into_words();
        flat.extend_from_slice(ring.one().words());
        RingPoly {
            ring: ring.clone(),
            coeffs: flat,
        }
    }

    fn trim(&mut self) {
        let w = self.ring.width();
        while self.coeffs.len() >= w && self.coeffs[self.coeffs.len() - w..].iter().all(|&x| x == 0) {
            self.coeffs.truncate(self.coeffs.len() - w);
        }
    }

    pub fn ring(&self) -> &GaloisRing {
        &self.ring
    }

    /// Number of stored coefficients (degree + 1, or 0 for the zero poly).
    pub fn len(&self) -> usize {
        self.coeffs.len() / self.ring.width()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn degree(&self) -> Option<usize> {
        self.len().checked_sub(1)
    }

    pub fn flat_coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    fn coeff_words(&self, i: usize) -> &[u64] {
        let w = self.ring.width();
        &self.coeffs[i * w..(i + 1) * w]
    }

    /// Coefficient of x^i (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> RingElement {
        if i < self.len() {
            RingElement::from_words(self.coeff_words(i).to_vec())
        } else {
            self.ring.zero()
        }
    }

    pub fn coeffs(&self) -> Vec<RingElement> {
        (0..self.len()).map(|i| self.coeff(i)).collect()
    }

    fn same_ring(&self, other: &RingPoly) -> Result<()> {
        if self.ring == other.ring {
            Ok(())
        } else {
            Err(Error::ParamsMismatch)
        }
    }

    pub fn add(&self, other: &RingPoly) -> Result<RingPoly> {
        self.same_ring(other)?;
        Ok(self.add_raw(other))
    }

    fn add_raw(&self, other: &RingPoly) -> RingPoly {
        let (long, short) = if self.coeffs.len() >= other.coeffs.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut coeffs = long.coeffs.clone();
        self.ring.add_assign_words(&mut coeffs[..short.coeffs.len()], &short.coeffs);
        RingPoly::from_flat(self.ring.clone(), coeffs)
    }

    pub(crate) fn sub(&self, other: &RingPoly) -> RingPoly {
        debug_assert_eq!(self.ring, other.ring);
        let mut coeffs = self.coeffs.clone();
        if coeffs.len() < other.coeffs.len() {
            coeffs.resize(other.coeffs.len(), 0);
        }
        self.ring.sub_assign_words(&mut coeffs[..other.coeffs.len()], &other.coeffs);
        RingPoly::from_flat(self.ring.clone(), coeffs)
    }

    pub fn scale(&self, c: &RingElement) -> RingPoly {
        let w = self.ring.width();
        let mut coeffs = vec![0; self.coeffs.len()];
        for (dst, src) in coeffs.chunks_mut(w).zip(self.coeffs.chunks(w)) {
            self.ring.mul_into(c.words(), src, dst);
        }
        RingPoly::from_flat(self.ring.clone(), coeffs)
    }

    /// Schoolbook product.
    pub fn mul(&self, other: &RingPoly) -> Result<RingPoly> {
        self.same_ring(other)?;
        Ok(self.mul_raw(other))
    }

    fn mul_raw(&self, other: &RingPoly) -> RingPoly {
        if self.is_zero() || other.is_zero() {
            return RingPoly::zero(&self.ring);
        }
        let ring = &self.ring;
        let w = ring.width();
        let wl = ring.wide_len();
        let (na, nb) = (self.len(), other.len());
        let n = na + nb - 1;
        let mut out = vec![0u64; n * w];
        let mut wide = vec![0u64; wl];
        for k in 0..n {
            wide.fill(0);
            let lo = k.saturating_sub(nb - 1);
            let hi = k.min(na - 1);
            for i in lo..=hi {
                ring.mul_acc_wide(self.coeff_words(i), other.coeff_words(k - i), &mut wide);
            }
            ring.reduce_wide(&mut wide, &mut out[k * w..(k + 1) * w]);
        }
        RingPoly::from_flat(ring.clone(), out)
    }

    /// Division with remainder by a divisor whose leading coefficient is a unit.
    pub fn divrem(&self, d: &RingPoly) -> Result<(RingPoly, RingPoly)> {
        self.same_ring(d)?;
        let ring = &self.ring;
        let w = ring.width();
        let dn = d.len();
        if dn == 0 {
            return Err(Error::InvalidParameter("division by the zero polynomial".into()));
        }
        let lc = d.coeff(dn - 1);
        let monic = lc == ring.one();
        let inv_lc = if monic { lc } else { ring.inverse(&lc)? };
        let n = self.len();
        if n < dn {
            return Ok((RingPoly::zero(ring), self.clone()));
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0u64; (n - dn + 1) * w];
        let mut c = vec![0u64; w];
        let mut tmp = vec![0u64; w];
        for k in (0..=n - dn).rev() {
            let top = &rem[(k + dn - 1) * w..(k + dn) * w];
            if top.iter().all(|&x| x == 0) {
                continue;
            }
            if monic {
                c.copy_from_slice(top);
            } else {
                ring.mul_into(top, inv_lc.words(), &mut c);
            }
            quot[k * w..(k + 1) * w].copy_from_slice(&c);
            for i in 0..dn {
                ring.mul_into(&c, d.coeff_words(i), &mut tmp);
                ring.sub_assign_words(&mut rem[(k + i) * w..(k + i + 1) * w], &tmp);
            }
        }
        rem.truncate((dn - 1) * w);
        Ok((
            RingPoly::from_flat(ring.clone(), quot),
            RingPoly::from_flat(ring.clone(), rem),
        ))
    }

    pub fn rem(&self, d: &RingPoly) -> Result<RingPoly> {
        self.divrem(d).map(|(_, r)| r)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &RingElement) -> RingElement {
        let ring = &self.ring;
        let w = ring.width();
        let mut acc = vec![0u64; w];
        let mut tmp = vec![0u64; w];
        for i in (0..self.len()).rev() {
            ring.mul_into(&acc, x.words(), &mut tmp);
            ring.add_assign_words(&mut tmp, self.coeff_words(i));
            std::mem::swap(&mut acc, &mut tmp);
        }
        RingElement::from_words(acc)
    }

    pub fn derivative(&self) -> RingPoly {
        let w = self.ring.width();
        if self.len() <= 1 {
            return RingPoly::zero(&self.ring);
        }
        let mut coeffs = Vec::with_capacity((self.len() - 1) * w);
        for i in 1..self.len() {
            let c = RingElement::from_words(self.coeff_words(i).to_vec());
            coeffs.extend(self.ring.mul_int(&c, i as u64).into_words());
        }
        RingPoly::from_flat(self.ring.clone(), coeffs)
    }

    /// `self^exp mod modulus` for a monic (or unit-led) modulus.
    pub(crate) fn pow_mod(&self, mut exp: u64, modulus: &RingPoly) -> RingPoly {
        let mut result = RingPoly::constant(&self.ring, &self.ring.one())
            .rem(modulus)
            .expect("unit-led modulus");
        let mut base = self.rem(modulus).expect("unit-led modulus");
        while exp > 0 {
            if exp & 1 == 1 {
                result = result.mul_raw(&base).rem(modulus).expect("unit-led modulus");
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul_raw(&base).rem(modulus).expect("unit-led modulus");
            }
        }
        result
    }

    /// Monic gcd; only meaningful over a field (e = 1).
    pub(crate) fn gcd(&self, other: &RingPoly) -> RingPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b).expect("nonzero element of a field is a unit");
            a = b;
            b = r;
        }
        a.make_monic().unwrap_or(a)
    }

    fn make_monic(&self) -> Option<RingPoly> {
        let lc = self.coeff(self.degree()?);
        let inv = self.ring.inverse(&lc).ok()?;
        Some(self.scale(&inv))
    }

    /// Inverse modulo `modulus` by extended Euclid; only over a field.
    pub(crate) fn inverse_mod(&self, modulus: &RingPoly) -> Option<RingPoly> {
        let (mut r0, mut r1) = (modulus.clone(), self.rem(modulus).ok()?);
        let (mut s0, mut s1) = (RingPoly::zero(&self.ring), RingPoly::constant(&self.ring, &self.ring.one()));
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1).ok()?;
            let s = s0.sub(&q.mul_raw(&s1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
        }
        if r0.degree() != Some(0) {
            return None;
        }
        let inv_c = self.ring.inverse(&r0.coeff(0)).ok()?;
        s0.scale(&inv_c).rem(modulus).ok()
    }
}

/// Subproduct tree of `∏(x - x_i)`: `levels[0]` are the linear leaves,
/// the last level holds the root. An unpaired node is carried up unchanged.
#[derive(Clone, Debug)]
pub struct ProductTree {
    ring: GaloisRing,
    points: Vec<RingElement>,
    levels: Vec<Vec<RingPoly>>,
}

impl ProductTree {
    pub fn new(ring: &GaloisRing, points: &[RingElement]) -> Result<Self> {
        for x in points {
            ring.check(x)?;
        }
        let mut levels = vec![points.iter().map(|x| RingPoly::linear(ring, x)).collect::<Vec<_>>()];
        while levels.last().is_some_and(|l| l.len() > 1) {
            let prev = levels.last().expect("nonempty");
            let next = prev
                .chunks(2)
                .map(|pair| match pair {
                    [a, b] => a.mul_raw(b),
                    [a] => a.clone(),
                    _ => unreachable!(),
                })
                .collect();
            levels.push(next);
        }
        Ok(ProductTree {
            ring: ring.clone(),
            points: points.to_vec(),
            levels,
        })
    }

    /// `∏(x - x_i)`, or 1 for an empty point set.
    pub fn root(&self) -> RingPoly {
        match self.levels.last().and_then(|l| l.first()) {
            Some(r) => r.clone(),
            None => RingPoly::constant(&self.ring, &self.ring.one()),
        }
    }

    pub fn points(&self) -> &[RingElement] {
        &self.points
    }

    /// Remainder-tree evaluation of `f` at every point.
    pub fn eval(&self, f: &RingPoly) -> Vec<RingElement> {
        if self.points.is_empty() {
            return Vec::new();
        }
        let top = self.levels.len() - 1;
        let mut rems = vec![f.rem(&self.levels[top][0]).expect("monic")];
        for level in (0..top).rev() {
            let nodes = &self.levels[level];
            rems = (0..nodes.len())
                .map(|k| {
                    let parent = &rems[k / 2];
                    let sole = k % 2 == 0 && k + 1 == nodes.len();
                    if sole {
                        parent.clone()
                    } else {
                        parent.rem(&nodes[k]).expect("monic")
                    }
                })
                .collect();
        }
        rems.into_iter().map(|r| r.coeff(0)).collect()
    }

    /// Bottom-up linear combination `Σ c_i ∏_{j≠i}(x - x_j)`.
    fn combine(&self, c: Vec<RingPoly>) -> RingPoly {
        if c.is_empty() {
            return RingPoly::zero(&self.ring);
        }
        let mut vals = c;
        for level in 0..self.levels.len() - 1 {
            let nodes = &self.levels[level];
            vals = vals
                .chunks(2)
                .zip(nodes.chunks(2))
                .map(|(v, n)| match (v, n) {
                    ([l, r], [ml, mr]) => l.mul_raw(mr).add_raw(&r.mul_raw(ml)),
                    ([l], [_]) => l.clone(),
                    _ => unreachable!(),
                })
                .collect();
        }
        vals.pop().expect("single root value")
    }
}

/// Precomputed multipoint evaluator for a fixed point set.
#[derive(Clone, Debug)]
pub struct Evaluator {
    ring: GaloisRing,
    points: Vec<RingElement>,
    tree: Option<ProductTree>,
}

impl Evaluator {
    pub fn new(ring: &GaloisRing, points: &[RingElement], mode: EvalMode) -> Result<Self> {
        for x in points {
            ring.check(x)?;
        }
        let tree = if mode.use_tree(points.len()) {
            Some(ProductTree::new(ring, points)?)
        } else {
            None
        };
        Ok(Evaluator {
            ring: ring.clone(),
            points: points.to_vec(),
            tree,
        })
    }

    pub fn points(&self) -> &[RingElement] {
        &self.points
    }

    pub fn eval(&self, f: &RingPoly) -> Result<Vec<RingElement>> {
        if f.ring != self.ring {
            return Err(Error::ParamsMismatch);
        }
        Ok(match &self.tree {
            Some(t) => t.eval(f),
            None => self.points.iter().map(|x| f.eval(x)).collect(),
        })
    }

    pub fn eval_matrices(&self, f: &MatrixPoly) -> Result<Vec<Matrix>> {
        if f.ring != self.ring {
            return Err(Error::ParamsMismatch);
        }
        match &self.tree {
            None => Ok(self.points.iter().map(|x| f.eval_horner(x)).collect()),
            Some(t) => {
                let w = self.ring.width();
                let entries = f.rows * f.cols;
                let per_entry: Vec<Vec<RingElement>> = (0..entries)
                    .into_par_iter()
                    .map(|e| t.eval(&f.entry_poly_flat(e)))
                    .collect();
                Ok((0..self.points.len())
                    .map(|k| {
                        let mut data = Vec::with_capacity(entries * w);
                        for vals in &per_entry {
                            data.extend_from_slice(vals[k].words());
                        }
                        Matrix::from_words_unchecked(&self.ring, f.rows, f.cols, data)
                    })
                    .collect())
            }
        }
    }
}

/// Precomputed interpolator for a fixed exceptional point set.
#[derive(Clone, Debug)]
pub struct Interpolator {
    ring: GaloisRing,
    points: Vec<RingElement>,
    method: InterpMethod,
}

#[derive(Clone, Debug)]
enum InterpMethod {
    /// Lagrange basis polynomials `λ_i ∏_{j≠i}(x - x_j)`.
    Lagrange(Vec<RingPoly>),
    /// Product tree and `1 / M'(x_i)`.
    Tree(ProductTree, Vec<RingElement>),
}

impl Interpolator {
    pub fn new(ring: &GaloisRing, points: &[RingElement], mode: EvalMode) -> Result<Self> {
        for x in points {
            ring.check(x)?;
        }
        let method = if mode.use_tree(points.len()) {
            let tree = ProductTree::new(ring, points)?;
            let weights = tree.eval(&tree.root().derivative());
            let inv = weights
                .iter()
                .map(|w| ring.inverse(w).map_err(|_| Error::NonExceptionalPoints))
                .collect::<Result<Vec<_>>>()?;
            InterpMethod::Tree(tree, inv)
        } else {
            let mut full = RingPoly::constant(ring, &ring.one());
            for x in points {
                full = full.mul_raw(&RingPoly::linear(ring, x));
            }
            let mut basis = Vec::with_capacity(points.len());
            for (i, xi) in points.iter().enumerate() {
                let mut denom = ring.one();
                for (j, xj) in points.iter().enumerate() {
                    if i != j {
                        denom = ring.mul(&denom, &ring.sub(xi, xj));
                    }
                }
                let lambda = ring.inverse(&denom).map_err(|_| Error::NonExceptionalPoints)?;
                let (q, _) = full.divrem(&RingPoly::linear(ring, xi))?;
                basis.push(q.scale(&lambda));
            }
            InterpMethod::Lagrange(basis)
        };
        Ok(Interpolator {
            ring: ring.clone(),
            points: points.to_vec(),
            method,
        })
    }

    pub fn points(&self) -> &[RingElement] {
        &self.points
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.points.len() {
            return Err(Error::LengthMismatch {
                expected: self.points.len(),
                actual: n,
            });
        }
        Ok(())
    }

    /// The unique polynomial of degree < n through `(x_i, values_i)`.
    pub fn interpolate(&self, values: &[RingElement]) -> Result<RingPoly> {
        self.check_len(values.len())?;
        for v in values {
            self.ring.check(v)?;
        }
        Ok(self.interpolate_unchecked(values))
    }

    fn interpolate_unchecked(&self, values: &[RingElement]) -> RingPoly {
        match &self.method {
            InterpMethod::Lagrange(basis) => {
                let mut acc = RingPoly::zero(&self.ring);
                for (b, y) in basis.iter().zip(values) {
                    acc = acc.add_raw(&b.scale(y));
                }
                acc
            }
            InterpMethod::Tree(tree, inv) => {
                let leaves = values
                    .iter()
                    .zip(inv)
                    .map(|(y, iw)| RingPoly::constant(&self.ring, &self.ring.mul(y, iw)))
                    .collect();
                tree.combine(leaves)
            }
        }
    }

    /// Entrywise interpolation of matrix values; the result has `n` coefficients.
    pub fn interpolate_matrices(&self, values: &[Matrix]) -> Result<MatrixPoly> {
        let degrees: Vec<usize> = (0..self.points.len()).collect();
        let coeffs = self.coefficients(values, &degrees)?;
        let (rows, cols) = values.first().map_or((0, 0), |m| m.shape());
        MatrixPoly::new(&self.ring, rows, cols, coeffs)
    }

    /// Selected coefficient matrices of the interpolating matrix polynomial.
    pub fn coefficients(&self, values: &[Matrix], degrees: &[usize]) -> Result<Vec<Matrix>> {
        self.check_len(values.len())?;
        let (rows, cols) = match values.first() {
            Some(m) => m.shape(),
            None => return Ok(degrees.iter().map(|_| Matrix::zeros(&self.ring, 0, 0)).collect()),
        };
        for v in values {
            if v.ring() != &self.ring {
                return Err(Error::ParamsMismatch);
            }
            if v.shape() != (rows, cols) {
                return Err(Error::ShapeMismatch("interpolation values differ in shape".into()));
            }
        }
        match &self.method {
            InterpMethod::Lagrange(basis) => Ok(degrees
                .par_iter()
                .map(|&k| {
                    let mut acc = Matrix::zeros(&self.ring, rows, cols);
                    for (b, v) in basis.iter().zip(values) {
                        let c = b.coeff(k);
                        if !c.is_zero() {
                            acc.add_scaled_assign(&c, v).expect("shapes checked");
                        }
                    }
                    acc
                })
                .collect()),
            InterpMethod::Tree(..) => {
                let w = self.ring.width();
                let per_entry: Vec<RingPoly> = (0..rows * cols)
                    .into_par_iter()
                    .map(|e| {
                        let ys: Vec<RingElement> = values
                            .iter()
                            .map(|v| RingElement::from_words(v.words()[e * w..(e + 1) * w].to_vec()))
                            .collect();
                        self.interpolate_unchecked(&ys)
                    })
                    .collect();
                Ok(degrees
                    .iter()
                    .map(|&k| {
                        let mut data = Vec::with_capacity(rows * cols * w);
                        for p in &per_entry {
                            data.extend(p.coeff(k).into_words());
                        }
                        Matrix::from_words_unchecked(&self.ring, rows, cols, data)
                    })
                    .collect())
            }
        }
    }
}

/// Polynomial whose coefficients are equal-shaped matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixPoly {
    ring: GaloisRing,
    rows: usize,
    cols: usize,
    coeffs: Vec<Matrix>,
}

impl MatrixPoly {
    pub fn new(ring: &GaloisRing, rows: usize, cols: usize, coeffs: Vec<Matrix>) -> Result<Self> {
        for c in &coeffs {
            if c.ring() != ring {
                return Err(Error::ParamsMismatch);
            }
            if c.shape() != (rows, cols) {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient {:?} in a {rows}x{cols} matrix polynomial",
                    c.shape()
                )));
            }
        }
        Ok(MatrixPoly {
            ring: ring.clone(),
            rows,
            cols,
            coeffs,
        })
    }

    /// `len` zero coefficients.
    pub fn zeros(ring: &GaloisRing, rows: usize, cols: usize, len: usize) -> Self {
        MatrixPoly {
            ring: ring.clone(),
            rows,
            cols,
            coeffs: vec![Matrix::zeros(ring, rows, cols); len],
        }
    }

    pub fn ring(&self) -> &GaloisRing {
        &self.ring
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn coeffs(&self) -> &[Matrix] {
        &self.coeffs
    }

    /// Coefficient of x^k (zero beyond the stored length).
    pub fn coeff(&self, k: usize) -> Matrix {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(&self.ring, self.rows, self.cols))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Adds `m` to the coefficient of x^k, growing the polynomial as needed.
    pub fn add_to_coeff(&mut self, k: usize, m: &Matrix) -> Result<()> {
        if self.coeffs.len() <= k {
            self.coeffs
                .resize(k + 1, Matrix::zeros(&self.ring, self.rows, self.cols));
        }
        self.coeffs[k].add_assign(m)
    }

    fn entry_poly_flat(&self, e: usize) -> RingPoly {
        let w = self.ring.width();
        let mut flat = Vec::with_capacity(self.coeffs.len() * w);
        for c in &self.coeffs {
            flat.extend_from_slice(&c.words()[e * w..(e + 1) * w]);
        }
        RingPoly::from_flat(self.ring.clone(), flat)
    }

    /// Scalar polynomial of entry (i, j).
    pub fn entry_poly(&self, i: usize, j: usize) -> RingPoly {
        self.entry_poly_flat(i * self.cols + j)
    }

    fn eval_horner(&self, x: &RingElement) -> Matrix {
        let mut acc = Matrix::zeros(&self.ring, self.rows, self.cols);
        for c in self.coeffs.iter().rev() {
            acc = acc.scale(x);
            acc.add_assign(c).expect("uniform shape");
        }
        acc
    }

    /// Product polynomial with matrix-product coefficients.
    pub fn mul(&self, other: &MatrixPoly) -> Result<MatrixPoly> {
        if self.ring != other.ring {
            return Err(Error::ParamsMismatch);
        }
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch("inner dimensions differ".into()));
        }
        let mut out = MatrixPoly::zeros(&self.ring, self.rows, other.cols, 0);
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out.add_to_coeff(i + j, &a.matmul(b)?)?;
            }
        }
        Ok(out)
    }
}

/// Evaluates `f` at every point.
pub fn eval_many(f: &RingPoly, points: &[RingElement], mode: EvalMode) -> Result<Vec<RingElement>> {
    Evaluator::new(&f.ring, points, mode)?.eval(f)
}

/// Evaluates a matrix polynomial at every point, entrywise.
pub fn eval_many_matrix(f: &MatrixPoly, points: &[RingElement], mode: EvalMode) -> Result<Vec<Matrix>> {
    Evaluator::new(&f.ring, points, mode)?.eval_matrices(f)
}

/// The unique polynomial of degree < n with `f(points_i) = values_i`.
pub fn interpolate(
    ring: &GaloisRing,
    points: &[RingElement],
    values: &[RingElement],
    mode: EvalMode,
) -> Result<RingPoly> {
    if points.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: points.len(),
            actual: values.len(),
        });
    }
    Interpolator::new(ring, points, mode)?.interpolate(values)
}

/// Entrywise matrix interpolation.
pub fn interpolate_matrix(
    ring: &GaloisRing,
    points: &[RingElement],
    values: &[Matrix],
    mode: EvalMode,
) -> Result<MatrixPoly> {
    if points.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: points.len(),
            actual: values.len(),
        });
    }
    Interpolator::new(ring, points, mode)?.interpolate_matrices(values)
}

/// Subproduct tree of `∏(x - x_i)`.
pub fn product_tree(ring: &GaloisRing, points: &[RingElement]) -> Result<ProductTree> {
    ProductTree::new(ring, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::make_ring;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ints(ring: &GaloisRing, v: &[u64]) -> Vec<RingElement> {
        v.iter().map(|&x| ring.from_int(x)).collect()
    }

    #[test]
    fn eval_examples() {
        let z4 = make_ring(2, 2, 1).unwrap();
        let f = RingPoly::from_coeffs(&z4, &ints(&z4, &[1, 2])).unwrap();
        for mode in [EvalMode::Naive, EvalMode::Fast] {
            assert_eq!(eval_many(&f, &ints(&z4, &[0, 1]), mode).unwrap(), ints(&z4, &[1, 3]));
        }

        let gr = make_ring(2, 2, 2).unwrap();
        let x2 = RingPoly::monomial(gr.clone(), 2);
        let xi = gr.element(vec![0, 1]).unwrap();
        let pts = vec![gr.zero(), gr.one(), xi];
        for mode in [EvalMode::Naive, EvalMode::Fast] {
            let vals = eval_many(&x2, &pts, mode).unwrap();
            assert_eq!(vals, vec![gr.zero(), gr.one(), gr.element(vec![3, 3]).unwrap()]);
            let zero = RingPoly::zero(&gr);
            assert!(eval_many(&zero, &pts, mode).unwrap().iter().all(|v| v.is_zero()));
        }
    }

    #[test]
    fn interpolate_examples() {
        let z4 = make_ring(2, 2, 1).unwrap();
        for mode in [EvalMode::Naive, EvalMode::Fast] {
            let f = interpolate(&z4, &ints(&z4, &[0, 1]), &ints(&z4, &[1, 3]), mode).unwrap();
            assert_eq!(f.coeffs(), ints(&z4, &[1, 2]));
            assert_eq!(
                interpolate(&z4, &ints(&z4, &[0, 2]), &ints(&z4, &[1, 1]), mode).unwrap_err(),
                Error::NonExceptionalPoints
            );
            assert_eq!(
                interpolate(&z4, &ints(&z4, &[0, 1]), &ints(&z4, &[1]), mode).unwrap_err(),
                Error::LengthMismatch { expected: 2, actual: 1 }
            );
        }
        let gr = make_ring(2, 2, 2).unwrap();
        let pts = gr.exceptional_set(3).unwrap().into_elements();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeffs: Vec<RingElement> = (0..3).map(|_| gr.random_element(&mut rng)).collect();
        let f = RingPoly::from_coeffs(&gr, &coeffs).unwrap();
        for mode in [EvalMode::Naive, EvalMode::Fast] {
            let vals = eval_many(&f, &pts, mode).unwrap();
            assert_eq!(interpolate(&gr, &pts, &vals, mode).unwrap(), f);
        }
    }

    #[test]
    fn mul_and_tree_examples() {
        let z4 = make_ring(2, 2, 1).unwrap();
        let a = RingPoly::from_coeffs(&z4, &ints(&z4, &[1, 1])).unwrap();
        assert_eq!(a.mul(&a).unwrap().coeffs(), ints(&z4, &[1, 2, 1]));
        assert!(a.mul(&RingPoly::zero(&z4)).unwrap().is_zero());
        let tree = product_tree(&z4, &ints(&z4, &[0, 1])).unwrap();
        assert_eq!(tree.root().coeffs(), ints(&z4, &[0, 3, 1]));
        let other = RingPoly::zero(&make_ring(2, 3, 1).unwrap());
        assert_eq!(a.mul(&other).unwrap_err(), Error::ParamsMismatch);
    }

    #[test]
    fn divrem_reconstructs() {
        let r = make_ring(2, 64, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let a: Vec<RingElement> = (0..7).map(|_| r.random_element(&mut rng)).collect();
            let mut d: Vec<RingElement> = (0..3).map(|_| r.random_element(&mut rng)).collect();
            d.push(r.random_unit(&mut rng));
            let a = RingPoly::from_coeffs(&r, &a).unwrap();
            let d = RingPoly::from_coeffs(&r, &d).unwrap();
            let (q, rem) = a.divrem(&d).unwrap();
            assert!(rem.len() < d.len());
            assert_eq!(q.mul(&d).unwrap().add(&rem).unwrap(), a);
        }
    }

    #[test]
    fn odd_sized_trees_and_modes_agree() {
        let r = make_ring(2, 64, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for n in 1..=16 {
            let pts = r.exceptional_set(n).unwrap().into_elements();
            let coeffs: Vec<RingElement> = (0..n).map(|_| r.random_element(&mut rng)).collect();
            let f = RingPoly::from_coeffs(&r, &coeffs).unwrap();
            let naive = eval_many(&f, &pts, EvalMode::Naive).unwrap();
            assert_eq!(eval_many(&f, &pts, EvalMode::Fast).unwrap(), naive);
            let fi = interpolate(&r, &pts, &naive, EvalMode::Fast).unwrap();
            let ni = interpolate(&r, &pts, &naive, EvalMode::Naive).unwrap();
            assert_eq!(fi, f);
            assert_eq!(ni, f);
        }
    }

    #[test]
    fn matrix_poly_roundtrip() {
        let r = make_ring(2, 8, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts = r.exceptional_set(5).unwrap().into_elements();
        let coeffs: Vec<Matrix> = (0..5).map(|_| Matrix::random(&r, 2, 3, &mut rng)).collect();
        let f = MatrixPoly::new(&r, 2, 3, coeffs).unwrap();
        for mode in [EvalMode::Naive, EvalMode::Fast] {
            let vals = eval_many_matrix(&f, &pts, mode).unwrap();
            for (x, v) in pts.iter().zip(&vals) {
                assert_eq!(v.get(1, 2), f.entry_poly(1, 2).eval(x));
            }
            assert_eq!(interpolate_matrix(&r, &pts, &vals, mode).unwrap(), f);
        }
    }

    #[test]
    fn field_gcd_and_inverse() {
        let f = make_ring(3, 1, 1).unwrap();
        // (x+1)(x+2) and (x+1)x share x+1
        let a = RingPoly::from_coeffs(&f, &ints(&f, &[2, 0, 1])).unwrap();
        let b = RingPoly::from_coeffs(&f, &ints(&f, &[0, 1, 1])).unwrap();
        assert_eq!(a.gcd(&b).coeffs(), ints(&f, &[1, 1]));
        let m = RingPoly::from_coeffs(&f, &ints(&f, &[1, 0, 1])).unwrap();
        let x = RingPoly::monomial(f.clone(), 1);
        let inv = x.inverse_mod(&m).unwrap();
        assert_eq!(x.mul(&inv).unwrap().rem(&m).unwrap().coeffs(), ints(&f, &[1]));
    }
}
