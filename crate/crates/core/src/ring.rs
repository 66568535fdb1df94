//! Galois rings GR(p^e, d) and their tower extensions.
//!
//! A [`GaloisRing`] is either the prime ring Z_{p^e} (= GR(p^e, 1)) or a
//! monic extension `base[y]/(F(y))` of another Galois ring. Elements are
//! stored flat: an element of a degree-`k` layer is `k` consecutive base
//! elements, recursively, so every element is a fixed-width slice of
//! residues in Z_{p^e}. Addition is therefore wordwise at every level;
//! multiplication recurses through the tower.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::Rng;

use crate::error::{Error, Result};
use crate::poly::RingPoly;
use crate::zq::{self, Modulus};

/// Largest residue field for which a multiplicative generator is searched.
pub const MAX_GENERATOR_FIELD: u64 = 1 << 24;

const STACK_SCRATCH: usize = 64;
const LEVEL_SYMBOLS: [&str; 6] = ["ξ", "η", "θ", "κ", "μ", "ν"];

/// Flat coefficient vector of a ring element (innermost coefficients first).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RingElement(Vec<u64>);

impl RingElement {
    pub fn from_words(words: Vec<u64>) -> Self {
        RingElement(words)
    }

    pub fn words(&self) -> &[u64] {
        &self.0
    }

    pub fn into_words(self) -> Vec<u64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
}

/// Binary/unary operations of [`GaloisRing::arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingOp {
    Add,
    Sub,
    Mul,
    Neg,
}

#[derive(Clone)]
pub struct GaloisRing(Arc<Inner>);

struct Inner {
    p: u64,
    e: u32,
    zq: Modulus,
    layer: Layer,
    width: usize,
    residue: OnceLock<GaloisRing>,
}

#[derive(PartialEq, Eq)]
enum Layer {
    Prime,
    Ext {
        base: GaloisRing,
        degree: usize,
        /// Non-leading coefficients f_0..f_{degree-1} of the monic modulus, flat.
        modulus: Vec<u64>,
    },
}

impl PartialEq for GaloisRing {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.e == other.0.e && self.0.layer == other.0.layer)
    }
}

impl Eq for GaloisRing {}

impl fmt::Debug for GaloisRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GaloisRing({})", self.describe())
    }
}

/// Builds GR(p^e, d) with the canonical modulus.
///
/// The modulus is the smallest monic degree-`d` polynomial over GF(p) (in
/// lexicographic order, highest non-leading coefficient most significant)
/// that is irreducible mod p, with its coefficients lifted unchanged.
/// For `d = 1` this is the prime ring Z_{p^e} with modulus `x`.
pub fn make_ring(p: u64, e: u32, d: usize) -> Result<GaloisRing> {
    if d == 0 {
        return Err(Error::InvalidParameter("extension degree d must be >= 1".into()));
    }
    let prime = GaloisRing::integers(p, e)?;
    if d == 1 {
        Ok(prime)
    } else {
        prime.extension(d)
    }
}

impl GaloisRing {
    /// The prime ring Z_{p^e}.
    pub fn integers(p: u64, e: u32) -> Result<Self> {
        if !zq::is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if e == 0 {
            return Err(Error::InvalidParameter("exponent e must be >= 1".into()));
        }
        let zq = Modulus::new(p, e).ok_or(Error::WordOverflow { p, e })?;
        Ok(GaloisRing(Arc::new(Inner {
            p,
            e,
            zq,
            layer: Layer::Prime,
            width: 1,
            residue: OnceLock::new(),
        })))
    }

    /// Canonical degree-`m` extension: the smallest monic polynomial whose
    /// reduction mod p is irreducible over the residue field of `self`.
    pub fn extension(&self, m: usize) -> Result<GaloisRing> {
        if m == 0 {
            return Err(Error::InvalidParameter("extension degree must be >= 1".into()));
        }
        let field = self.residue();
        let fw = field.width();
        let digits = m * fw;
        let mut candidate = vec![0u64; digits];
        loop {
            if is_irreducible(&field, &candidate, m) {
                return self.with_modulus_unchecked(m, candidate);
            }
            // odometer over base-p digits, lowest word first
            let mut i = 0;
            loop {
                if i == digits {
                    return Err(Error::InvalidParameter(format!(
                        "no irreducible polynomial of degree {m} found"
                    )));
                }
                candidate[i] += 1;
                if candidate[i] == self.0.p {
                    candidate[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }

    /// Extension by an explicit monic modulus given by its non-leading
    /// coefficients (base elements, constant term first).
    pub fn extension_with_modulus(&self, lower: &[RingElement]) -> Result<GaloisRing> {
        let m = lower.len();
        if m == 0 {
            return Err(Error::InvalidParameter("modulus must have degree >= 1".into()));
        }
        let mut flat = Vec::with_capacity(m * self.width());
        for c in lower {
            self.check(c)?;
            flat.extend_from_slice(c.words());
        }
        let field = self.residue();
        let reduced: Vec<u64> = flat.iter().map(|w| w % self.0.p).collect();
        if !is_irreducible(&field, &reduced, m) {
            return Err(Error::InvalidParameter(
                "modulus is not irreducible modulo p".into(),
            ));
        }
        self.with_modulus_unchecked(m, flat)
    }

    fn with_modulus_unchecked(&self, m: usize, modulus: Vec<u64>) -> Result<GaloisRing> {
        Ok(GaloisRing(Arc::new(Inner {
            p: self.0.p,
            e: self.0.e,
            zq: self.0.zq,
            width: self.width() * m,
            layer: Layer::Ext {
                base: self.clone(),
                degree: m,
                modulus,
            },
            residue: OnceLock::new(),
        })))
    }

    pub fn p(&self) -> u64 {
        self.0.p
    }

    pub fn e(&self) -> u32 {
        self.0.e
    }

    /// Words per element, i.e. the total degree over Z_{p^e}.
    pub fn width(&self) -> usize {
        self.0.width
    }

    pub(crate) fn zq(&self) -> Modulus {
        self.0.zq
    }

    /// p^e as a u128 (2^64 for the word ring).
    pub fn characteristic(&self) -> u128 {
        self.0.zq.value()
    }

    /// Degree of the top layer over its base (1 for the prime ring).
    pub fn level_degree(&self) -> usize {
        match &self.0.layer {
            Layer::Prime => 1,
            Layer::Ext { degree, .. } => *degree,
        }
    }

    /// The ring this one extends, or `None` for Z_{p^e}.
    pub fn base(&self) -> Option<&GaloisRing> {
        match &self.0.layer {
            Layer::Prime => None,
            Layer::Ext { base, .. } => Some(base),
        }
    }

    pub fn is_prime_ring(&self) -> bool {
        matches!(self.0.layer, Layer::Prime)
    }

    /// Degrees of the extension layers from the bottom up (empty for Z_{p^e}).
    pub fn levels(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut r = self;
        while let Layer::Ext { base, degree, .. } = &r.0.layer {
            out.push(*degree);
            r = base;
        }
        out.reverse();
        out
    }

    /// Whether `self` is (structurally) a sub-ring of `other` via the tower.
    pub fn is_tower_base_of(&self, other: &GaloisRing) -> bool {
        let mut r = other.base();
        while let Some(b) = r {
            if b == self {
                return true;
            }
            r = b.base();
        }
        false
    }

    /// Size of the residue field, p^width, if it fits a u64.
    pub fn residue_field_size(&self) -> Option<u64> {
        let mut q: u64 = 1;
        for _ in 0..self.width() {
            q = q.checked_mul(self.0.p)?;
        }
        Some(q)
    }

    /// Monic modulus of the top layer, constant term first (includes the
    /// leading 1). The prime ring reports `x`.
    pub fn modulus(&self) -> Vec<RingElement> {
        match &self.0.layer {
            Layer::Prime => vec![RingElement(vec![0]), RingElement(vec![1])],
            Layer::Ext {
                base,
                degree,
                modulus,
            } => {
                let bw = base.width();
                let mut out: Vec<RingElement> = modulus
                    .chunks(bw)
                    .map(|c| RingElement(c.to_vec()))
                    .collect();
                debug_assert_eq!(out.len(), *degree);
                out.push(base.one());
                out
            }
        }
    }

    /// The same tower with e = 1: the residue field GF(p^width).
    pub fn residue(&self) -> GaloisRing {
        if self.0.e == 1 {
            return self.clone();
        }
        self.0
            .residue
            .get_or_init(|| match &self.0.layer {
                Layer::Prime => GaloisRing::integers(self.0.p, 1).expect("p already validated"),
                Layer::Ext {
                    base,
                    degree,
                    modulus,
                } => {
                    let p = self.0.p;
                    base.residue()
                        .with_modulus_unchecked(*degree, modulus.iter().map(|w| w % p).collect())
                        .expect("degree already validated")
                }
            })
            .clone()
    }

    // ----- element constructors -------------------------------------------------

    pub fn zero(&self) -> RingElement {
        RingElement(vec![0; self.width()])
    }

    pub fn one(&self) -> RingElement {
        self.from_int(1)
    }

    /// Image of an integer under Z -> Z_{p^e} -> this ring.
    pub fn from_int(&self, a: u64) -> RingElement {
        let mut w = vec![0; self.width()];
        w[0] = self.0.zq.reduce(a);
        RingElement(w)
    }

    /// Element from flat words, validating width and residue range.
    pub fn element(&self, words: Vec<u64>) -> Result<RingElement> {
        let el = RingElement(words);
        self.check(&el)?;
        Ok(el)
    }

    /// Validates that `a` belongs to this ring.
    pub fn check(&self, a: &RingElement) -> Result<()> {
        if a.len() != self.width() {
            return Err(Error::ParamsMismatch);
        }
        if a.words().iter().any(|&w| self.0.zq.reduce(w) != w) {
            return Err(Error::ParamsMismatch);
        }
        Ok(())
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> RingElement {
        RingElement((0..self.width()).map(|_| self.random_word(rng)).collect())
    }

    pub(crate) fn random_word<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self.0.zq {
            Modulus::Wrap => rng.random(),
            Modulus::Pow2 { mask } => rng.random::<u64>() & mask,
            Modulus::General(q) => rng.random_range(0..q),
        }
    }

    pub fn random_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> RingElement {
        loop {
            let a = self.random_element(rng);
            if self.is_unit(&a) {
                return a;
            }
        }
    }

    // ----- arithmetic -------------------------------------------------------

    /// Checked arithmetic: validates both operands first.
    pub fn arith(&self, op: RingOp, a: &RingElement, b: &RingElement) -> Result<RingElement> {
        self.check(a)?;
        if op != RingOp::Neg {
            self.check(b)?;
        }
        Ok(match op {
            RingOp::Add => self.add(a, b),
            RingOp::Sub => self.sub(a, b),
            RingOp::Mul => self.mul(a, b),
            RingOp::Neg => self.neg(a),
        })
    }

    pub fn add(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let mut out = a.clone();
        self.add_assign_words(&mut out.0, &b.0);
        out
    }

    pub fn sub(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let mut out = a.clone();
        self.sub_assign_words(&mut out.0, &b.0);
        out
    }

    pub fn neg(&self, a: &RingElement) -> RingElement {
        let q = self.0.zq;
        RingElement(a.0.iter().map(|&w| q.neg(w)).collect())
    }

    pub fn mul(&self, a: &RingElement, b: &RingElement) -> RingElement {
        debug_assert_eq!(a.len(), self.width());
        debug_assert_eq!(b.len(), self.width());
        let mut out = vec![0; self.width()];
        self.mul_into(&a.0, &b.0, &mut out);
        RingElement(out)
    }

    /// Multiplication by an integer scalar from Z_{p^e}.
    pub fn mul_int(&self, a: &RingElement, k: u64) -> RingElement {
        let q = self.0.zq;
        let k = q.reduce(k);
        RingElement(a.0.iter().map(|&w| q.mul(w, k)).collect())
    }

    pub fn pow(&self, a: &RingElement, mut exp: u64) -> RingElement {
        let mut result = self.one();
        let mut base = a.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                result = self.mul(&result, &base);
            }
            exp >>= 1;
            if exp > 0 {
                base = self.mul(&base, &base);
            }
        }
        result
    }

    #[inline]
    pub(crate) fn add_assign_words(&self, a: &mut [u64], b: &[u64]) {
        let q = self.0.zq;
        for (x, &y) in a.iter_mut().zip(b) {
            *x = q.add(*x, y);
        }
    }

    #[inline]
    pub(crate) fn sub_assign_words(&self, a: &mut [u64], b: &[u64]) {
        let q = self.0.zq;
        for (x, &y) in a.iter_mut().zip(b) {
            *x = q.sub(*x, y);
        }
    }

    /// Length of the unreduced product buffer used by [`Self::mul_acc_wide`].
    pub(crate) fn wide_len(&self) -> usize {
        match &self.0.layer {
            Layer::Prime => 1,
            Layer::Ext { base, degree, .. } => (2 * degree - 1) * base.width(),
        }
    }

    /// `wide += a * b` without reducing modulo the top-layer modulus.
    pub(crate) fn mul_acc_wide(&self, a: &[u64], b: &[u64], wide: &mut [u64]) {
        match &self.0.layer {
            Layer::Prime => wide[0] = self.0.zq.mul_add(wide[0], a[0], b[0]),
            Layer::Ext { base, degree, .. } => {
                let k = *degree;
                if base.is_prime_ring() {
                    let q = self.0.zq;
                    for i in 0..k {
                        let ai = a[i];
                        if ai == 0 {
                            continue;
                        }
                        for j in 0..k {
                            wide[i + j] = q.mul_add(wide[i + j], ai, b[j]);
                        }
                    }
                } else {
                    let bw = base.width();
                    with_scratch(bw, |tmp| {
                        for i in 0..k {
                            let ai = &a[i * bw..(i + 1) * bw];
                            for j in 0..k {
                                base.mul_into(ai, &b[j * bw..(j + 1) * bw], tmp);
                                base.add_assign_words(&mut wide[(i + j) * bw..(i + j + 1) * bw], tmp);
                            }
                        }
                    });
                }
            }
        }
    }

    /// Reduces a wide buffer modulo the top-layer modulus into `out`.
    /// The buffer is clobbered.
    pub(crate) fn reduce_wide(&self, wide: &mut [u64], out: &mut [u64]) {
        match &self.0.layer {
            Layer::Prime => out[0] = wide[0],
            Layer::Ext {
                base,
                degree,
                modulus,
            } => {
                let k = *degree;
                let bw = base.width();
                if base.is_prime_ring() {
                    let q = self.0.zq;
                    for top in (k..2 * k - 1).rev() {
                        let c = wide[top];
                        if c == 0 {
                            continue;
                        }
                        for (x, &mi) in wide[top - k..top].iter_mut().zip(modulus) {
                            *x = q.sub(*x, q.mul(c, mi));
                        }
                    }
                } else {
                    with_scratch(2 * bw, |buf| {
                        let (c, tmp) = buf.split_at_mut(bw);
                        for top in (k..2 * k - 1).rev() {
                            c.copy_from_slice(&wide[top * bw..(top + 1) * bw]);
                            if c.iter().all(|&w| w == 0) {
                                continue;
                            }
                            for i in 0..k {
                                base.mul_into(c, &modulus[i * bw..(i + 1) * bw], tmp);
                                let idx = top - k + i;
                                base.sub_assign_words(&mut wide[idx * bw..(idx + 1) * bw], tmp);
                            }
                        }
                    });
                }
                out.copy_from_slice(&wide[..k * bw]);
            }
        }
    }

    /// `out = a * b` on raw words.
    pub(crate) fn mul_into(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        if let Layer::Prime = self.0.layer {
            out[0] = self.0.zq.mul(a[0], b[0]);
            return;
        }
        let len = self.wide_len();
        with_scratch(len, |wide| {
            self.mul_acc_wide(a, b, wide);
            self.reduce_wide(wide, out);
        });
    }

    // ----- units ------------------------------------------------------------

    /// A unit iff its reduction mod p is nonzero in the residue field.
    pub fn is_unit(&self, a: &RingElement) -> bool {
        a.0.iter().any(|&w| w % self.0.p != 0)
    }

    /// Inverse via the residue field followed by Newton lifting
    /// `b <- b(2 - ab)` up to precision p^e.
    pub fn inverse(&self, a: &RingElement) -> Result<RingElement> {
        if a.len() != self.width() {
            return Err(Error::ParamsMismatch);
        }
        if !self.is_unit(a) {
            return Err(Error::NonUnit);
        }
        let field = self.residue();
        let reduced = RingElement(a.0.iter().map(|w| w % self.0.p).collect());
        let approx = field.field_inverse(&reduced)?;
        if self.0.e == 1 {
            return Ok(approx);
        }
        let mut b = approx;
        let two = self.from_int(2);
        // precision doubles every step; e <= 64 needs at most 7 steps
        for _ in 0..8 {
            let ab = self.mul(a, &b);
            if ab == self.one() {
                return Ok(b);
            }
            b = self.mul(&b, &self.sub(&two, &ab));
        }
        let ab = self.mul(a, &b);
        debug_assert_eq!(ab, self.one());
        if ab == self.one() {
            Ok(b)
        } else {
            Err(Error::NonUnit)
        }
    }

    /// Inverse in a residue field (e = 1).
    fn field_inverse(&self, a: &RingElement) -> Result<RingElement> {
        debug_assert_eq!(self.0.e, 1);
        match &self.0.layer {
            Layer::Prime => zq::inv_mod_prime(a.0[0], self.0.p)
                .map(|x| RingElement(vec![x]))
                .ok_or(Error::NonUnit),
            Layer::Ext { base, .. } => {
                let bw = base.width();
                let poly = RingPoly::from_flat(base.clone(), a.0.clone());
                let mut modulus = self.modulus_words_full();
                debug_assert_eq!(modulus.len() % bw, 0);
                let modulus = RingPoly::from_flat(base.clone(), std::mem::take(&mut modulus));
                let inv = poly.inverse_mod(&modulus).ok_or(Error::NonUnit)?;
                let mut words = inv.flat_coeffs().to_vec();
                words.resize(self.width(), 0);
                Ok(RingElement(words))
            }
        }
    }

    fn modulus_words_full(&self) -> Vec<u64> {
        self.modulus().into_iter().flat_map(|c| c.0).collect()
    }

    // ----- exceptional sets -------------------------------------------------

    /// Canonical exceptional set prefix `[0, 1, ζ, ζ^2, ...]` of length `count`,
    /// where ζ is the Teichmüller lift of the smallest generator of the
    /// residue field's multiplicative group.
    pub fn exceptional_set(&self, count: usize) -> Result<ExceptionalSet> {
        let mut set = ExceptionalSet {
            ring: self.clone(),
            zeta: None,
            elements: Vec::new(),
        };
        set.extend_to(count)?;
        Ok(set)
    }

    /// Smallest generator of GF(q)^*, with q = residue field size.
    fn residue_generator(&self) -> Result<RingElement> {
        let field = self.residue();
        let q = self
            .residue_field_size()
            .filter(|&q| q <= MAX_GENERATOR_FIELD)
            .ok_or(Error::ResidueFieldTooLarge(self.residue_field_size()))?;
        if q == 2 {
            return Ok(field.one());
        }
        let factors = zq::prime_factors(q - 1);
        let one = field.one();
        for index in 1..q {
            let g = self.residue_element_from_index(index);
            if factors.iter().all(|&l| field.pow(&g, (q - 1) / l) != one) {
                return Ok(g);
            }
        }
        unreachable!("a finite field has a multiplicative generator")
    }

    /// Residue-field element whose base-p digits (lowest word first) spell `index`.
    pub fn residue_element_from_index(&self, mut index: u64) -> RingElement {
        let p = self.0.p;
        let mut words = vec![0; self.width()];
        for w in words.iter_mut() {
            *w = index % p;
            index /= p;
        }
        RingElement(words)
    }

    /// The unique lift of `a mod p` with z^q = z.
    pub fn teichmuller_lift(&self, a: &RingElement) -> Result<RingElement> {
        let q = self
            .residue_field_size()
            .ok_or(Error::ResidueFieldTooLarge(None))?;
        let mut z = RingElement(a.0.iter().map(|w| w % self.0.p).collect());
        for _ in 0..=self.0.e {
            let next = self.pow(&z, q);
            if next == z {
                return Ok(z);
            }
            z = next;
        }
        Err(Error::InvalidParameter(
            "Teichmüller iteration did not converge".into(),
        ))
    }

    // ----- tower views ------------------------------------------------------

    /// Places a base element as the constant coefficient of this extension.
    pub fn embed(&self, base_elem: &RingElement) -> Result<RingElement> {
        let base = self.base().ok_or(Error::ParamsMismatch)?;
        base.check(base_elem)?;
        let mut words = vec![0; self.width()];
        words[..base.width()].copy_from_slice(base_elem.words());
        Ok(RingElement(words))
    }

    /// The top-layer coefficients of `x` as base elements.
    pub fn coeff_view(&self, x: &RingElement) -> Result<Vec<RingElement>> {
        let base = self.base().ok_or(Error::ParamsMismatch)?;
        if x.len() != self.width() {
            return Err(Error::ParamsMismatch);
        }
        Ok(x.0
            .chunks(base.width())
            .map(|c| RingElement(c.to_vec()))
            .collect())
    }

    /// Inverse of [`Self::coeff_view`].
    pub fn from_coeffs(&self, coeffs: &[RingElement]) -> Result<RingElement> {
        let base = self.base().ok_or(Error::ParamsMismatch)?;
        if coeffs.len() != self.level_degree() {
            return Err(Error::LengthMismatch {
                expected: self.level_degree(),
                actual: coeffs.len(),
            });
        }
        let mut words = Vec::with_capacity(self.width());
        for c in coeffs {
            base.check(c)?;
            words.extend_from_slice(c.words());
        }
        Ok(RingElement(words))
    }

    // ----- formatting / serialization ---------------------------------------

    /// Short human-readable name, e.g. `GR(2^64, 3)` or `GR(2^2, 1)[3][3]`.
    pub fn describe(&self) -> String {
        let p = self.0.p;
        let e = self.0.e;
        let levels = self.levels();
        let (d, rest) = match levels.split_first() {
            Some((&d, rest)) => (d, rest),
            None => (1, &[][..]),
        };
        let mut s = format!("GR({p}^{e}, {d})");
        for m in rest {
            s.push_str(&format!("[{m}]"));
        }
        s
    }

    /// Formats an element as a polynomial in the tower generators,
    /// highest degree first, e.g. `3ξ+3`.
    pub fn format_element(&self, a: &RingElement) -> String {
        self.format_words(&a.0, self.levels().len())
    }

    fn format_words(&self, w: &[u64], level: usize) -> String {
        match &self.0.layer {
            Layer::Prime => w[0].to_string(),
            Layer::Ext { base, .. } => {
                let sym = LEVEL_SYMBOLS
                    .get(level - 1)
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| format!("y{level}"));
                let coeffs: Vec<String> = w
                    .chunks(base.width())
                    .map(|c| {
                        if c.iter().all(|&x| x == 0) {
                            String::new()
                        } else {
                            base.format_words(c, level - 1)
                        }
                    })
                    .collect();
                format_poly(&coeffs, &sym)
            }
        }
    }

    /// The top-layer modulus formatted in the variable `var`.
    pub fn format_modulus(&self, var: &str) -> String {
        let base_levels = self.levels().len().saturating_sub(1);
        let coeffs: Vec<String> = match &self.0.layer {
            Layer::Prime => vec![String::new(), "1".into()],
            Layer::Ext { base, .. } => self
                .modulus()
                .iter()
                .map(|c| {
                    if c.is_zero() {
                        String::new()
                    } else {
                        base.format_words(c.words(), base_levels)
                    }
                })
                .collect(),
        };
        format_poly(&coeffs, var)
    }

    /// Appends the element as little-endian words.
    pub fn write_element(&self, a: &RingElement, out: &mut Vec<u8>) {
        debug_assert_eq!(a.len(), self.width());
        for w in &a.0 {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }

    pub fn read_element(&self, bytes: &[u8]) -> Result<RingElement> {
        let need = self.width() * 8;
        if bytes.len() < need {
            return Err(Error::Format(format!(
                "element needs {need} bytes, got {}",
                bytes.len()
            )));
        }
        let words = read_words(&bytes[..need]);
        self.element(words).map_err(|_| Error::Format("residue out of range".into()))
    }

    /// Ring descriptor: `GRNG`, then p, e, d, the number of further tower
    /// levels k, and their degrees m_1..m_k, all little-endian u64.
    pub fn descriptor(&self) -> Vec<u8> {
        let levels = self.levels();
        let (d, rest): (u64, &[usize]) = match levels.first() {
            Some(&d) if d > 1 => (d as u64, &levels[1..]),
            _ => (1, &levels[..]),
        };
        let mut out = b"GRNG".to_vec();
        for v in [self.0.p, self.0.e as u64, d, rest.len() as u64] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &m in rest {
            out.extend_from_slice(&(m as u64).to_le_bytes());
        }
        out
    }

    /// Rebuilds a ring from [`Self::descriptor`] bytes; returns the ring and
    /// the number of bytes consumed.
    pub fn from_descriptor(bytes: &[u8]) -> Result<(GaloisRing, usize)> {
        if bytes.len() < 36 || &bytes[..4] != b"GRNG" {
            return Err(Error::Format("bad ring descriptor header".into()));
        }
        let head = read_words(&bytes[4..36]);
        let (p, e, d, k) = (head[0], head[1], head[2] as usize, head[3] as usize);
        let end = 36 + 8 * k;
        if bytes.len() < end {
            return Err(Error::Format("truncated ring descriptor".into()));
        }
        let e = u32::try_from(e).map_err(|_| Error::Format("exponent out of range".into()))?;
        let mut ring = make_ring(p, e, d)?;
        for m in read_words(&bytes[36..end]) {
            ring = ring.extension(m as usize)?;
        }
        Ok((ring, end))
    }
}

/// An ordered prefix of the canonical exceptional set `{0, 1, ζ, ζ^2, ...}`.
#[derive(Clone, Debug)]
pub struct ExceptionalSet {
    ring: GaloisRing,
    zeta: Option<RingElement>,
    elements: Vec<RingElement>,
}

impl ExceptionalSet {
    pub fn ring(&self) -> &GaloisRing {
        &self.ring
    }

    pub fn elements(&self) -> &[RingElement] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<RingElement> {
        self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// The Teichmüller generator ζ, once at least three elements exist.
    pub fn generator(&self) -> Option<&RingElement> {
        self.zeta.as_ref()
    }

    /// Grows the prefix to `count` elements.
    pub fn extend_to(&mut self, count: usize) -> Result<()> {
        let ring = &self.ring;
        if let Some(q) = ring.residue_field_size() {
            if count as u64 > q {
                return Err(Error::CountTooLarge {
                    requested: count as u64,
                    available: q,
                });
            }
        }
        while self.elements.len() < count {
            let next = match self.elements.len() {
                0 => ring.zero(),
                1 => ring.one(),
                _ => {
                    if self.zeta.is_none() {
                        let g = ring.residue_generator()?;
                        self.zeta = Some(ring.teichmuller_lift(&g)?);
                    }
                    let zeta = self.zeta.as_ref().expect("set above");
                    ring.mul(self.elements.last().expect("nonempty"), zeta)
                }
            };
            self.elements.push(next);
        }
        Ok(())
    }
}

fn read_words(bytes: &[u8]) -> Vec<u64> {
    bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect()
}

fn format_poly(coeffs: &[String], var: &str) -> String {
    let mut terms = Vec::new();
    for (k, c) in coeffs.iter().enumerate().rev() {
        if c.is_empty() {
            continue;
        }
        let compound = c.contains('+');
        let mono = match k {
            0 => String::new(),
            1 => var.to_string(),
            _ => format!("{var}^{k}"),
        };
        let term = if k == 0 {
            c.clone()
        } else if c == "1" {
            mono
        } else if compound {
            format!("({c}){mono}")
        } else {
            format!("{c}{mono}")
        };
        terms.push(term);
    }
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join("+")
    }
}

fn with_scratch<R>(len: usize, f: impl FnOnce(&mut [u64]) -> R) -> R {
    if len <= STACK_SCRATCH {
        let mut buf = [0u64; STACK_SCRATCH];
        f(&mut buf[..len])
    } else {
        let mut buf = vec![0u64; len];
        f(&mut buf)
    }
}

/// Rabin's test for the monic polynomial with non-leading coefficients
/// `lower` (flat, `m` field elements) over the finite field `field`.
fn is_irreducible(field: &GaloisRing, lower: &[u64], m: usize) -> bool {
    if m == 1 {
        return true;
    }
    let mut full = lower.to_vec();
    full.extend_from_slice(field.one().words());
    let f = RingPoly::from_flat(field.clone(), full);
    let x = RingPoly::monomial(field.clone(), 1);
    // x^{Q^k} mod f for k = 1..m, with Q = p^width raised by repeated p-th powers
    let mut frob = Vec::with_capacity(m);
    let mut h = x.clone();
    for _ in 0..m {
        for _ in 0..field.width() {
            h = h.pow_mod(field.p(), &f);
        }
        frob.push(h.clone());
    }
    if frob[m - 1] != x.rem(&f).expect("monic") {
        return false;
    }
    for l in zq::prime_factors(m as u64) {
        let k = m / l as usize;
        let g = frob[k - 1].sub(&x).gcd(&f);
        if g.degree() != Some(0) {
            return false;
        }
    }
    true
}
