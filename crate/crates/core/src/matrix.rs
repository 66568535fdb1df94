//! Dense matrices over a [`GaloisRing`], stored as flat words row-major.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::ring::{GaloisRing, RingElement};

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    ring: GaloisRing,
    rows: usize,
    cols: usize,
    /// `rows * cols * ring.width()` words; entry (i, j) starts at `(i * cols + j) * width`.
    data: Vec<u64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix<{}>[{}x{}]", self.ring.describe(), self.rows, self.cols)?;
        if self.rows * self.cols <= 16 {
            let entries: Vec<Vec<String>> = (0..self.rows)
                .map(|i| {
                    (0..self.cols)
                        .map(|j| self.ring.format_element(&self.get(i, j)))
                        .collect()
                })
                .collect();
            write!(f, "{entries:?}")?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(ring: &GaloisRing, rows: usize, cols: usize) -> Self {
        Matrix {
            ring: ring.clone(),
            rows,
            cols,
            data: vec![0; rows * cols * ring.width()],
        }
    }

    pub fn identity(ring: &GaloisRing, n: usize) -> Self {
        let mut m = Self::zeros(ring, n, n);
        let one = ring.one();
        for i in 0..n {
            m.set(i, i, &one);
        }
        m
    }

    pub fn from_elements(
        ring: &GaloisRing,
        rows: usize,
        cols: usize,
        elements: &[RingElement],
    ) -> Result<Self> {
        if elements.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} elements for a {rows}x{cols} matrix",
                elements.len()
            )));
        }
        let mut data = Vec::with_capacity(rows * cols * ring.width());
        for e in elements {
            ring.check(e)?;
            data.extend_from_slice(e.words());
        }
        Ok(Matrix {
            ring: ring.clone(),
            rows,
            cols,
            data,
        })
    }

    /// Matrix whose entries are integers mapped into the ring.
    pub fn from_ints(ring: &GaloisRing, rows: usize, cols: usize, values: &[u64]) -> Result<Self> {
        let els: Vec<RingElement> = values.iter().map(|&v| ring.from_int(v)).collect();
        Self::from_elements(ring, rows, cols, &els)
    }

    /// Matrix from raw flat words; validates length and residue range.
    pub fn from_words(ring: &GaloisRing, rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        if data.len() != rows * cols * ring.width() {
            return Err(Error::ShapeMismatch(format!(
                "{} words for a {rows}x{cols} matrix of width {}",
                data.len(),
                ring.width()
            )));
        }
        let q = ring.zq();
        if data.iter().any(|&w| q.reduce(w) != w) {
            return Err(Error::ParamsMismatch);
        }
        Ok(Matrix {
            ring: ring.clone(),
            rows,
            cols,
            data,
        })
    }

    pub(crate) fn from_words_unchecked(ring: &GaloisRing, rows: usize, cols: usize, data: Vec<u64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols * ring.width());
        Matrix {
            ring: ring.clone(),
            rows,
            cols,
            data,
        }
    }

    pub fn random<R: Rng + ?Sized>(ring: &GaloisRing, rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols * ring.width())
            .map(|_| ring.random_word(rng))
            .collect();
        Matrix {
            ring: ring.clone(),
            rows,
            cols,
            data,
        }
    }

    pub fn ring(&self) -> &GaloisRing {
        &self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.data
    }

    pub fn into_words(self) -> Vec<u64> {
        self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        (i * self.cols + j) * self.ring.width()
    }

    pub fn entry_words(&self, i: usize, j: usize) -> &[u64] {
        let o = self.offset(i, j);
        &self.data[o..o + self.ring.width()]
    }

    pub(crate) fn entry_words_mut(&mut self, i: usize, j: usize) -> &mut [u64] {
        let o = self.offset(i, j);
        let w = self.ring.width();
        &mut self.data[o..o + w]
    }

    pub fn get(&self, i: usize, j: usize) -> RingElement {
        RingElement::from_words(self.entry_words(i, j).to_vec())
    }

    pub fn set(&mut self, i: usize, j: usize, value: &RingElement) {
        debug_assert_eq!(value.len(), self.ring.width());
        self.entry_words_mut(i, j).copy_from_slice(value.words());
    }

    /// Entries in row-major order.
    pub fn elements(&self) -> Vec<RingElement> {
        self.data
            .chunks(self.ring.width().max(1))
            .map(|c| RingElement::from_words(c.to_vec()))
            .collect()
    }

    fn check_same(&self, other: &Matrix) -> Result<()> {
        if self.ring != other.ring {
            return Err(Error::ParamsMismatch);
        }
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same(other)?;
        let mut out = self.clone();
        self.ring.sub_assign_words(&mut out.data, &other.data);
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &Matrix) -> Result<()> {
        self.check_same(other)?;
        self.ring.add_assign_words(&mut self.data, &other.data);
        Ok(())
    }

    /// `self += c * other` for a ring scalar `c`.
    pub fn add_scaled_assign(&mut self, c: &RingElement, other: &Matrix) -> Result<()> {
        self.check_same(other)?;
        let w = self.ring.width();
        let mut tmp = vec![0; w];
        for (dst, src) in self.data.chunks_mut(w).zip(other.data.chunks(w)) {
            self.ring.mul_into(c.words(), src, &mut tmp);
            self.ring.add_assign_words(dst, &tmp);
        }
        Ok(())
    }

    pub fn scale(&self, c: &RingElement) -> Matrix {
        let w = self.ring.width();
        let mut out = Matrix::zeros(&self.ring, self.rows, self.cols);
        for (dst, src) in out.data.chunks_mut(w).zip(self.data.chunks(w)) {
            self.ring.mul_into(c.words(), src, dst);
        }
        out
    }

    /// Schoolbook product with one modular reduction per output entry.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.ring != other.ring {
            return Err(Error::ParamsMismatch);
        }
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let ring = &self.ring;
        let (t, r, s) = (self.rows, self.cols, other.cols);
        let w = ring.width();
        let mut out = Matrix::zeros(ring, t, s);
        if w == 1 {
            let q = ring.zq();
            for i in 0..t {
                let row = &mut out.data[i * s..(i + 1) * s];
                for k in 0..r {
                    let a = self.data[i * r + k];
                    if a == 0 {
                        continue;
                    }
                    let brow = &other.data[k * s..(k + 1) * s];
                    for (o, &b) in row.iter_mut().zip(brow) {
                        *o = q.mul_add(*o, a, b);
                    }
                }
            }
            return Ok(out);
        }
        let wl = ring.wide_len();
        let mut wide = vec![0u64; s * wl];
        for i in 0..t {
            wide.fill(0);
            for k in 0..r {
                let a = &self.data[(i * r + k) * w..(i * r + k + 1) * w];
                if a.iter().all(|&x| x == 0) {
                    continue;
                }
                for j in 0..s {
                    let b = &other.data[(k * s + j) * w..(k * s + j + 1) * w];
                    ring.mul_acc_wide(a, b, &mut wide[j * wl..(j + 1) * wl]);
                }
            }
            for j in 0..s {
                let o = (i * s + j) * w;
                ring.reduce_wide(&mut wide[j * wl..(j + 1) * wl], &mut out.data[o..o + w]);
            }
        }
        Ok(out)
    }

    /// Contiguous sub-block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "block out of range");
        let w = self.ring.width();
        let mut data = Vec::with_capacity(rows * cols * w);
        for i in r0..r0 + rows {
            let start = self.offset(i, c0);
            data.extend_from_slice(&self.data[start..start + cols * w]);
        }
        Matrix::from_words_unchecked(&self.ring, rows, cols, data)
    }

    /// Splits into a `row_blocks x col_blocks` grid of equal contiguous blocks.
    pub fn partition(&self, row_blocks: usize, col_blocks: usize) -> Result<Vec<Vec<Matrix>>> {
        if row_blocks == 0 || self.rows % row_blocks != 0 {
            return Err(Error::IndivisibleDimensions {
                what: "rows",
                value: self.rows,
                divisor: row_blocks,
            });
        }
        if col_blocks == 0 || self.cols % col_blocks != 0 {
            return Err(Error::IndivisibleDimensions {
                what: "cols",
                value: self.cols,
                divisor: col_blocks,
            });
        }
        let (br, bc) = (self.rows / row_blocks, self.cols / col_blocks);
        Ok((0..row_blocks)
            .map(|i| {
                (0..col_blocks)
                    .map(|j| self.block(i * br, j * bc, br, bc))
                    .collect()
            })
            .collect())
    }

    /// Inverse of [`Self::partition`]: all blocks in a grid row share a row
    /// count, all blocks in a grid column share a column count.
    pub fn assemble(grid: &[Vec<Matrix>]) -> Result<Matrix> {
        let first = grid
            .first()
            .and_then(|r| r.first())
            .ok_or_else(|| Error::ShapeMismatch("empty block grid".into()))?;
        let ring = first.ring.clone();
        let ncols = grid[0].len();
        let col_widths: Vec<usize> = grid[0].iter().map(|b| b.cols).collect();
        let total_cols: usize = col_widths.iter().sum();
        let total_rows: usize = grid.iter().map(|r| r[0].rows).sum();
        let w = ring.width();
        let mut out = Matrix::zeros(&ring, total_rows, total_cols);
        let mut r0 = 0;
        for row in grid {
            if row.len() != ncols {
                return Err(Error::ShapeMismatch("ragged block grid".into()));
            }
            let h = row[0].rows;
            let mut c0 = 0;
            for (b, &cw) in row.iter().zip(&col_widths) {
                if b.ring != ring {
                    return Err(Error::ParamsMismatch);
                }
                if b.rows != h || b.cols != cw {
                    return Err(Error::ShapeMismatch("inconsistent block sizes".into()));
                }
                for i in 0..h {
                    let dst = out.offset(r0 + i, c0);
                    let src = b.offset(i, 0);
                    out.data[dst..dst + cw * w].copy_from_slice(&b.data[src..src + cw * w]);
                }
                c0 += cw;
            }
            r0 += h;
        }
        Ok(out)
    }

    /// Zero-pads to `rows x cols` (each at least the current size).
    pub fn padded(&self, rows: usize, cols: usize) -> Matrix {
        assert!(rows >= self.rows && cols >= self.cols);
        if (rows, cols) == self.shape() {
            return self.clone();
        }
        let mut out = Matrix::zeros(&self.ring, rows, cols);
        let w = self.ring.width();
        for i in 0..self.rows {
            let dst = out.offset(i, 0);
            let src = self.offset(i, 0);
            out.data[dst..dst + self.cols * w].copy_from_slice(&self.data[src..src + self.cols * w]);
        }
        out
    }

    /// Top-left `rows x cols` corner.
    pub fn truncated(&self, rows: usize, cols: usize) -> Matrix {
        self.block(0, 0, rows, cols)
    }

    /// Embeds every entry into the extension `ext` (whose direct base is this ring).
    pub fn embed_into(&self, ext: &GaloisRing) -> Result<Matrix> {
        if ext.base() != Some(&self.ring) {
            return Err(Error::ParamsMismatch);
        }
        let (w, ew) = (self.ring.width(), ext.width());
        let mut data = vec![0u64; self.len() * ew];
        for (dst, src) in data.chunks_mut(ew).zip(self.data.chunks(w)) {
            dst[..w].copy_from_slice(src);
        }
        Ok(Matrix::from_words_unchecked(ext, self.rows, self.cols, data))
    }

    /// Projects onto the base ring, requiring every entry to lie in it.
    pub fn project_to_base(&self) -> Result<Matrix> {
        let base = self.ring.base().ok_or(Error::ParamsMismatch)?.clone();
        let (w, bw) = (self.ring.width(), base.width());
        let mut data = Vec::with_capacity(self.len() * bw);
        for (idx, entry) in self.data.chunks(w).enumerate() {
            if entry[bw..].iter().any(|&x| x != 0) {
                return Err(Error::NonBaseResult {
                    row: idx / self.cols,
                    col: idx % self.cols,
                });
            }
            data.extend_from_slice(&entry[..bw]);
        }
        Ok(Matrix::from_words_unchecked(&base, self.rows, self.cols, data))
    }
}
