//! Reverse multiplication friendly embeddings.
//!
//! An (n, m)-RMFE over a base ring packs n base elements into one element of
//! the degree-m extension so that `ψ(φ(x)·φ(y)) = x ⋆ y`. Both maps are
//! base-linear, so every scheme is stored as tabulated matrices: the images
//! `φ(e_k)` and the rows of ψ in base coordinates of the extension.

use std::borrow::Borrow;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::poly::{EvalMode, Interpolator, RingPoly};
use crate::ring::{GaloisRing, RingElement};

/// An evaluation point of an interpolation RMFE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RmfePoint {
    Finite(RingElement),
    /// Reads/writes the leading coefficient instead of a value.
    Infinity,
}

#[derive(Debug, Clone)]
enum Kind {
    Interpolation { points: Vec<RmfePoint> },
    Concatenated { outer: Box<RmfeScheme>, inner: Box<RmfeScheme> },
}

#[derive(Debug, Clone)]
pub struct RmfeScheme {
    base: GaloisRing,
    ext: GaloisRing,
    n: usize,
    m: usize,
    kind: Kind,
    /// `φ(e_k)` as extension words, k < n.
    phi_images: Vec<Vec<u64>>,
    /// ψ as an n x m matrix over the base, flat row-major base words.
    psi_table: Vec<u64>,
}

/// Builds the interpolation (n, m)-RMFE over `base`, with the first
/// `n - use_infinity` exceptional points and optionally ∞ last.
pub fn build_rmfe(base: &GaloisRing, n: usize, m: usize, use_infinity: bool) -> Result<RmfeScheme> {
    if n == 0 {
        return Err(Error::InvalidParameter("RMFE width n must be >= 1".into()));
    }
    let finite = n - usize::from(use_infinity);
    if let Some(q) = base.residue_field_size() {
        if finite as u64 > q {
            return Err(Error::WidthTooLarge {
                n,
                available: q + u64::from(use_infinity),
            });
        }
    }
    if m < 2 * n - 1 {
        return Err(Error::DegreeTooSmall {
            m,
            required: 2 * n - 1,
        });
    }
    let ext = base.extension(m)?;
    let exceptional = base.exceptional_set(finite)?.into_elements();
    let bw = base.width();

    // φ(e_k): the degree-<n polynomial through δ_k at finite points,
    // plus (for ∞) the multiple of ∏(x - a_i) fixing the leading coefficient.
    let interp = Interpolator::new(base, &exceptional, EvalMode::Naive)?;
    let mut vanishing = RingPoly::constant(base, &base.one());
    for a in &exceptional {
        vanishing = vanishing.mul(&RingPoly::linear(base, a))?;
    }
    let mut phi_images = Vec::with_capacity(n);
    for k in 0..n {
        let poly = if k < finite {
            let values: Vec<RingElement> = (0..finite)
                .map(|i| if i == k { base.one() } else { base.zero() })
                .collect();
            interp.interpolate(&values)?
        } else {
            vanishing.clone()
        };
        let mut words = poly.flat_coeffs().to_vec();
        words.resize(m * bw, 0);
        phi_images.push(words);
    }

    // ψ rows: powers of each finite point; the ∞ row picks coefficient 2n-2.
    let mut psi_table = vec![0u64; n * m * bw];
    for (k, a) in exceptional.iter().enumerate() {
        let mut pw = base.one();
        for j in 0..m {
            let o = (k * m + j) * bw;
            psi_table[o..o + bw].copy_from_slice(pw.words());
            pw = base.mul(&pw, a);
        }
    }
    if use_infinity {
        let o = ((n - 1) * m + 2 * n - 2) * bw;
        psi_table[o..o + bw].copy_from_slice(base.one().words());
    }

    let mut points: Vec<RmfePoint> = exceptional.into_iter().map(RmfePoint::Finite).collect();
    if use_infinity {
        points.push(RmfePoint::Infinity);
    }
    Ok(RmfeScheme {
        base: base.clone(),
        ext,
        n,
        m,
        kind: Kind::Interpolation { points },
        phi_images,
        psi_table,
    })
}

/// Composes an (n1, m1)-scheme over the inner extension with an
/// (n2, m2)-scheme over the base into an (n1·n2, m1·m2)-scheme.
pub fn concatenate(outer: &RmfeScheme, inner: &RmfeScheme) -> Result<RmfeScheme> {
    if outer.base != inner.ext {
        return Err(Error::TowerMismatch);
    }
    let base = inner.base.clone();
    let bw = base.width();
    let (n1, n2) = (outer.n, inner.n);
    let n = n1 * n2;
    let m = outer.m * inner.m;

    // φ(e_k) = φ_outer(φ_inner(e_{k mod n2}) placed at slot k / n2)
    let phi_images = (0..n)
        .map(|k| {
            let inner_img = &inner.phi_images[k % n2];
            let outer_img = &outer.phi_images[k / n2];
            let mut out = vec![0u64; outer.ext.width()];
            scale_chunks(&outer.base, inner_img, outer_img, &mut out);
            out
        })
        .collect();

    let mut scheme = RmfeScheme {
        base,
        ext: outer.ext.clone(),
        n,
        m,
        kind: Kind::Concatenated {
            outer: Box::new(outer.clone()),
            inner: Box::new(inner.clone()),
        },
        phi_images,
        psi_table: Vec::new(),
    };
    // tabulate ψ = (ψ_inner blockwise) ∘ ψ_outer on base unit vectors
    let mut table = vec![0u64; n * m * bw];
    let one = scheme.base.one();
    for j in 0..m {
        let mut u = vec![0u64; scheme.ext.width()];
        u[j * bw..(j + 1) * bw].copy_from_slice(one.words());
        let mid = outer.psi_words(&u);
        for (b, v) in mid.iter().enumerate() {
            for (idx, val) in inner.psi_words(v.words()).into_iter().enumerate() {
                let k = b * n2 + idx;
                let o = (k * m + j) * bw;
                table[o..o + bw].copy_from_slice(val.words());
            }
        }
    }
    scheme.psi_table = table;
    Ok(scheme)
}

/// `out = c * x` where `ring` is the base of `x`'s ring and `c ∈ ring`.
fn scale_chunks(ring: &GaloisRing, c: &[u64], x: &[u64], out: &mut [u64]) {
    let w = ring.width();
    for (o, xc) in out.chunks_mut(w).zip(x.chunks(w)) {
        ring.mul_into(c, xc, o);
    }
}

impl RmfeScheme {
    pub fn base(&self) -> &GaloisRing {
        &self.base
    }

    pub fn ext(&self) -> &GaloisRing {
        &self.ext
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Degree of the extension over the base.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Evaluation points, for interpolation schemes.
    pub fn points(&self) -> Option<&[RmfePoint]> {
        match &self.kind {
            Kind::Interpolation { points } => Some(points),
            Kind::Concatenated { .. } => None,
        }
    }

    pub fn uses_infinity(&self) -> bool {
        match &self.kind {
            Kind::Interpolation { points } => points.contains(&RmfePoint::Infinity),
            Kind::Concatenated { outer, inner } => outer.uses_infinity() || inner.uses_infinity(),
        }
    }

    /// `(outer, inner)` for concatenated schemes.
    pub fn components(&self) -> Option<(&RmfeScheme, &RmfeScheme)> {
        match &self.kind {
            Kind::Concatenated { outer, inner } => Some((outer, inner)),
            Kind::Interpolation { .. } => None,
        }
    }

    pub fn phi(&self, x: &[RingElement]) -> Result<RingElement> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        for v in x {
            self.base.check(v)?;
        }
        let mut out = vec![0u64; self.ext.width()];
        let mut tmp = vec![0u64; self.ext.width()];
        for (v, img) in x.iter().zip(&self.phi_images) {
            scale_chunks(&self.base, v.words(), img, &mut tmp);
            self.base.add_assign_words(&mut out, &tmp);
        }
        Ok(RingElement::from_words(out))
    }

    pub fn psi(&self, u: &RingElement) -> Result<Vec<RingElement>> {
        self.ext.check(u)?;
        Ok(self.psi_words(u.words()))
    }

    fn psi_words(&self, u: &[u64]) -> Vec<RingElement> {
        let bw = self.base.width();
        let mut tmp = vec![0u64; bw];
        (0..self.n)
            .map(|k| {
                let mut acc = vec![0u64; bw];
                let row = &self.psi_table[k * self.m * bw..(k + 1) * self.m * bw];
                for (r, c) in row.chunks(bw).zip(u.chunks(bw)) {
                    self.base.mul_into(r, c, &mut tmp);
                    self.base.add_assign_words(&mut acc, &tmp);
                }
                RingElement::from_words(acc)
            })
            .collect()
    }

    /// `Σ_k ψ(u)_k`, evaluated as a single linear functional.
    pub fn psi_sum(&self, u: &RingElement) -> Result<RingElement> {
        self.ext.check(u)?;
        let bw = self.base.width();
        let row = self.psi_sum_row();
        let mut acc = vec![0u64; bw];
        let mut tmp = vec![0u64; bw];
        for (r, c) in row.chunks(bw).zip(u.words().chunks(bw)) {
            self.base.mul_into(r, c, &mut tmp);
            self.base.add_assign_words(&mut acc, &tmp);
        }
        Ok(RingElement::from_words(acc))
    }

    fn psi_sum_row(&self) -> Vec<u64> {
        let bw = self.base.width();
        let mut row = vec![0u64; self.m * bw];
        for k in 0..self.n {
            self.base
                .add_assign_words(&mut row, &self.psi_table[k * self.m * bw..(k + 1) * self.m * bw]);
        }
        row
    }

    /// Packs `n` equal-shaped base matrices entrywise.
    pub fn phi_matrix<M: Borrow<Matrix>>(&self, mats: &[M]) -> Result<Matrix> {
        if mats.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: mats.len(),
            });
        }
        let shape = mats[0].borrow().shape();
        for a in mats {
            let a = a.borrow();
            if a.ring() != &self.base {
                return Err(Error::ParamsMismatch);
            }
            if a.shape() != shape {
                return Err(Error::ShapeMismatch(format!(
                    "batch mixes shapes {:?} and {:?}",
                    shape,
                    a.shape()
                )));
            }
        }
        let (bw, ew) = (self.base.width(), self.ext.width());
        let entries = shape.0 * shape.1;
        let mut data = vec![0u64; entries * ew];
        let srcs: Vec<&[u64]> = mats.iter().map(|a| a.borrow().words()).collect();
        data.par_chunks_mut(ew * 64).enumerate().for_each(|(chunk, out)| {
            let mut tmp = vec![0u64; ew];
            for (local, dst) in out.chunks_mut(ew).enumerate() {
                let e = chunk * 64 + local;
                for (src, img) in srcs.iter().zip(&self.phi_images) {
                    let v = &src[e * bw..(e + 1) * bw];
                    if v.iter().all(|&x| x == 0) {
                        continue;
                    }
                    scale_chunks(&self.base, v, img, &mut tmp);
                    self.base.add_assign_words(dst, &tmp);
                }
            }
        });
        Ok(Matrix::from_words_unchecked(&self.ext, shape.0, shape.1, data))
    }

    /// Unpacks an extension matrix into `n` base matrices.
    pub fn psi_matrix(&self, packed: &Matrix) -> Result<Vec<Matrix>> {
        if packed.ring() != &self.ext {
            return Err(Error::ParamsMismatch);
        }
        let (rows, cols) = packed.shape();
        let (bw, ew) = (self.base.width(), self.ext.width());
        let unpacked: Vec<Vec<RingElement>> = packed
            .words()
            .par_chunks(ew)
            .map(|u| self.psi_words(u))
            .collect();
        Ok((0..self.n)
            .map(|k| {
                let mut data = Vec::with_capacity(rows * cols * bw);
                for v in &unpacked {
                    data.extend_from_slice(v[k].words());
                }
                Matrix::from_words_unchecked(&self.base, rows, cols, data)
            })
            .collect())
    }

    /// Entrywise `Σ_k ψ(M)_k`.
    pub fn psi_sum_matrix(&self, packed: &Matrix) -> Result<Matrix> {
        if packed.ring() != &self.ext {
            return Err(Error::ParamsMismatch);
        }
        let (bw, ew) = (self.base.width(), self.ext.width());
        let row = self.psi_sum_row();
        let mut data = vec![0u64; packed.len() * bw];
        data.par_chunks_mut(bw)
            .zip(packed.words().par_chunks(ew))
            .for_each(|(dst, u)| {
                let mut tmp = vec![0u64; bw];
                for (r, c) in row.chunks(bw).zip(u.chunks(bw)) {
                    self.base.mul_into(r, c, &mut tmp);
                    self.base.add_assign_words(dst, &tmp);
                }
            });
        Ok(Matrix::from_words_unchecked(&self.base, packed.rows(), packed.cols(), data))
    }

    /// Coordinatewise product `x ⋆ y`.
    pub fn star(&self, x: &[RingElement], y: &[RingElement]) -> Vec<RingElement> {
        x.iter().zip(y).map(|(a, b)| self.base.mul(a, b)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::make_ring;

    fn ints(ring: &GaloisRing, v: &[u64]) -> Vec<RingElement> {
        v.iter().map(|&x| ring.from_int(x)).collect()
    }

    #[test]
    fn build_examples() {
        let z4 = make_ring(2, 2, 1).unwrap();
        let s = build_rmfe(&z4, 2, 3, false).unwrap();
        assert_eq!(
            s.points().unwrap(),
            &[RmfePoint::Finite(z4.zero()), RmfePoint::Finite(z4.one())]
        );
        let s = build_rmfe(&z4, 3, 5, true).unwrap();
        assert_eq!(
            s.points().unwrap(),
            &[RmfePoint::Finite(z4.zero()), RmfePoint::Finite(z4.one()), RmfePoint::Infinity]
        );
        assert!(matches!(build_rmfe(&z4, 3, 5, false), Err(Error::WidthTooLarge { n: 3, available: 2 })));
        assert!(matches!(
            build_rmfe(&z4, 2, 2, false),
            Err(Error::DegreeTooSmall { m: 2, required: 3 })
        ));
    }

    #[test]
    fn phi_psi_examples() {
        let z4 = make_ring(2, 2, 1).unwrap();
        let s = build_rmfe(&z4, 2, 3, false).unwrap();
        let ext = s.ext().clone();
        assert_eq!(s.phi(&ints(&z4, &[1, 1])).unwrap(), ext.one());
        assert_eq!(s.phi(&ints(&z4, &[1, 0])).unwrap().words(), &[1, 3, 0]);
        assert_eq!(s.phi(&ints(&z4, &[0, 1])).unwrap().words(), &[0, 1, 0]);
        assert!(matches!(s.phi(&ints(&z4, &[1])), Err(Error::LengthMismatch { .. })));

        assert_eq!(s.psi(&ext.one()).unwrap(), ints(&z4, &[1, 1]));
        let u = ext.element(vec![0, 1, 3]).unwrap();
        assert_eq!(s.psi(&u).unwrap(), ints(&z4, &[0, 0]));
        let u = ext.element(vec![0, 0, 1]).unwrap();
        assert_eq!(s.psi(&u).unwrap(), ints(&z4, &[0, 1]));
        assert_eq!(s.psi(&z4.one()).unwrap_err(), Error::ParamsMismatch);
    }

    #[test]
    fn identity_inner_concatenation() {
        let z4 = make_ring(2, 2, 1).unwrap();
        let inner = build_rmfe(&z4, 1, 1, false).unwrap();
        let outer = build_rmfe(inner.ext(), 2, 3, false).unwrap();
        let cat = concatenate(&outer, &inner).unwrap();
        assert_eq!((cat.n(), cat.m()), (2, 3));
        for a in 0..4 {
            for b in 0..4 {
                let x = ints(&z4, &[a, b]);
                let inner_x: Vec<RingElement> =
                    x.iter().map(|v| inner.ext().embed(v).unwrap()).collect();
                assert_eq!(cat.phi(&x).unwrap(), outer.phi(&inner_x).unwrap());
            }
        }
        assert_eq!(concatenate(&inner, &outer).unwrap_err(), Error::TowerMismatch);
    }

    #[test]
    fn matrix_packing_examples() {
        let z4 = make_ring(2, 2, 1).unwrap();
        let s = build_rmfe(&z4, 2, 3, false).unwrap();
        let a1 = Matrix::from_ints(&z4, 1, 1, &[1]).unwrap();
        let a2 = Matrix::from_ints(&z4, 1, 1, &[0]).unwrap();
        let packed = s.phi_matrix(&[&a1, &a2]).unwrap();
        assert_eq!(packed.get(0, 0), s.phi(&ints(&z4, &[1, 0])).unwrap());
        assert_eq!(s.psi_matrix(&packed).unwrap(), vec![a1.clone(), a2]);

        let zeros = [Matrix::zeros(&z4, 2, 3), Matrix::zeros(&z4, 2, 3)];
        assert!(s.phi_matrix(&zeros).unwrap().is_zero());
        let bad = [Matrix::zeros(&z4, 2, 3), Matrix::zeros(&z4, 3, 2)];
        assert!(matches!(s.phi_matrix(&bad), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn packed_sum_matches_unpack_then_sum() {
        let z4 = make_ring(2, 2, 1).unwrap();
        let s = build_rmfe(&z4, 3, 5, true).unwrap();
        let ext = s.ext();
        for idx in 0..(1u64 << 10) {
            let words: Vec<u64> = (0..5).map(|j| (idx >> (2 * j)) & 3).collect();
            let u = ext.element(words).unwrap();
            let parts = s.psi(&u).unwrap();
            let sum = parts.iter().fold(z4.zero(), |acc, v| z4.add(&acc, v));
            assert_eq!(s.psi_sum(&u).unwrap(), sum);
        }
    }
}
