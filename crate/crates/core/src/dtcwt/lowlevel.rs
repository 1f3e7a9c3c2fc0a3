//! Column filtering primitives of the dual-tree transform.
//!
//! All routines filter along columns (axis 0) of a row-major matrix; the 2-D
//! transform alternates them with transposes. Row-wise accumulation keeps
//! the inner loop contiguous.

use num_complex::Complex64;

use crate::raster::GrayImage;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_image(img: &GrayImage) -> Self {
        Self {
            rows: img.height(),
            cols: img.width(),
            data: img.data().to_vec(),
        }
    }

    pub fn into_image(self) -> GrayImage {
        GrayImage::new(self.cols, self.rows, self.data).expect("consistent matrix dims")
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut out = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn add(mut self, other: &Mat) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        self
    }

    /// Repeats the last row (`rows`) and/or last column (`cols`) once.
    pub fn extend_last(&self, rows: bool, cols: bool) -> Self {
        let nr = self.rows + usize::from(rows);
        let nc = self.cols + usize::from(cols);
        let mut out = Mat::zeros(nr, nc);
        for r in 0..nr {
            let sr = r.min(self.rows - 1);
            for c in 0..nc {
                out.data[r * nc + c] = self.get(sr, c.min(self.cols - 1));
            }
        }
        out
    }

    /// Repeats the first and last row (`rows`) and/or column (`cols`).
    pub fn extend_both_ends(&self, rows: bool, cols: bool) -> Self {
        let er = usize::from(rows);
        let ec = usize::from(cols);
        let nr = self.rows + 2 * er;
        let nc = self.cols + 2 * ec;
        let mut out = Mat::zeros(nr, nc);
        for r in 0..nr {
            let sr = (r as isize - er as isize).clamp(0, self.rows as isize - 1) as usize;
            for c in 0..nc {
                let sc = (c as isize - ec as isize).clamp(0, self.cols as isize - 1) as usize;
                out.data[r * nc + c] = self.get(sr, sc);
            }
        }
        out
    }

    /// Drops the first and last row and/or column.
    pub fn crop_both_ends(&self, rows: bool, cols: bool) -> Self {
        let er = usize::from(rows);
        let ec = usize::from(cols);
        let nr = self.rows - 2 * er;
        let nc = self.cols - 2 * ec;
        let mut out = Mat::zeros(nr, nc);
        for r in 0..nr {
            out.row_mut(r)
                .copy_from_slice(&self.row(r + er)[ec..ec + nc]);
        }
        out
    }

    pub fn crop(&self, rows: usize, cols: usize) -> Self {
        let mut out = Mat::zeros(rows, cols);
        for r in 0..rows {
            out.row_mut(r).copy_from_slice(&self.row(r)[..cols]);
        }
        out
    }
}

/// Half-sample symmetric index into `0..n` (edge samples repeat).
#[inline]
fn reflect_half(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Extended row indices for positions `start..end`.
fn extension(start: isize, end: isize, n: usize) -> Vec<usize> {
    (start..end).map(|i| reflect_half(i, n)).collect()
}

/// 'Valid' convolution of the row sequence `rows` (indices into `x`) with
/// `h`, accumulated into the output rows listed in `out_rows`.
fn convolve_rows(x: &Mat, rows: &[usize], h: &[f64], out: &mut Mat, out_rows: &[usize]) {
    let m = h.len();
    debug_assert_eq!(rows.len() + 1, out_rows.len() + m);
    for (i, &dst) in out_rows.iter().enumerate() {
        let acc = out.row_mut(dst);
        for (k, &hk) in h.iter().enumerate() {
            if hk == 0.0 {
                continue;
            }
            let src = x.row(rows[i + m - 1 - k]);
            for (a, &s) in acc.iter_mut().zip(src) {
                *a += hk * s;
            }
        }
    }
}

fn every_other(h: &[f64], offset: usize) -> Vec<f64> {
    h.iter().skip(offset).step_by(2).copied().collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Undecimated column filtering with symmetric extension. For odd-length
/// `h` the output has the same number of rows as `x`.
pub(crate) fn colfilter(x: &Mat, h: &[f64]) -> Mat {
    let m = h.len();
    let m2 = (m / 2) as isize;
    let r = x.rows as isize;
    let xe = extension(-m2, r + m2, x.rows);
    let out_len = xe.len() + 1 - m;
    let mut y = Mat::zeros(out_len, x.cols);
    let dst: Vec<usize> = (0..out_len).collect();
    convolve_rows(x, &xe, h, &mut y, &dst);
    y
}

/// Decimating column filter for the quarter-shift levels: `ha` runs on one
/// polyphase branch and `hb` (its time reverse) on the other; outputs are
/// interleaved. Requires `rows % 4 == 0`.
pub(crate) fn coldfilt(x: &Mat, ha: &[f64], hb: &[f64]) -> Mat {
    let r = x.rows;
    assert!(r % 4 == 0, "coldfilt needs a multiple of 4 rows, got {r}");
    let m = ha.len();
    assert!(m % 2 == 0 && hb.len() == m);
    let xe = extension(-(m as isize), (r + m) as isize, r);
    let hao = every_other(ha, 0);
    let hae = every_other(ha, 1);
    let hbo = every_other(hb, 0);
    let hbe = every_other(hb, 1);
    let t: Vec<usize> = (5..r + 2 * m - 2).step_by(4).collect();
    let pick = |shift: usize| -> Vec<usize> { t.iter().map(|&ti| xe[ti - shift]).collect() };

    let r2 = r / 2;
    let even: Vec<usize> = (0..r2).step_by(2).collect();
    let odd: Vec<usize> = (1..r2).step_by(2).collect();
    let (s1, s2) = if dot(ha, hb) > 0.0 {
        (even, odd)
    } else {
        (odd, even)
    };
    let mut y = Mat::zeros(r2, x.cols);
    convolve_rows(x, &pick(1), &hao, &mut y, &s1);
    convolve_rows(x, &pick(3), &hae, &mut y, &s1);
    convolve_rows(x, &pick(0), &hbo, &mut y, &s2);
    convolve_rows(x, &pick(2), &hbe, &mut y, &s2);
    y
}

/// Interpolating counterpart of [`coldfilt`]: doubles the row count.
pub(crate) fn colifilt(x: &Mat, ha: &[f64], hb: &[f64]) -> Mat {
    let r = x.rows;
    assert!(r % 2 == 0, "colifilt needs an even number of rows, got {r}");
    let m = ha.len();
    assert!(m % 2 == 0 && hb.len() == m);
    let m2 = m / 2;
    let mut y = Mat::zeros(2 * r, x.cols);
    if x.data.iter().all(|&v| v == 0.0) {
        return y;
    }
    let xe = extension(-(m2 as isize), (r + m2) as isize, r);
    let hao = every_other(ha, 0);
    let hae = every_other(ha, 1);
    let hbo = every_other(hb, 0);
    let hbe = every_other(hb, 1);
    let positive = dot(ha, hb) > 0.0;
    let rows_at = |idx: &[usize]| -> Vec<usize> { idx.iter().map(|&i| xe[i]).collect() };
    let phase = |k: usize| -> Vec<usize> { (k..2 * r).step_by(4).collect() };

    if m2 % 2 == 0 {
        let t: Vec<usize> = (3..r + m).step_by(2).collect();
        let shifted: Vec<usize> = t.iter().map(|&v| v - 1).collect();
        let (ta, tb) = if positive {
            (t.clone(), shifted)
        } else {
            (shifted, t.clone())
        };
        let minus2 = |v: &[usize]| -> Vec<usize> { v.iter().map(|&i| i - 2).collect() };
        convolve_rows(x, &rows_at(&minus2(&tb)), &hae, &mut y, &phase(0));
        convolve_rows(x, &rows_at(&minus2(&ta)), &hbe, &mut y, &phase(1));
        convolve_rows(x, &rows_at(&tb), &hao, &mut y, &phase(2));
        convolve_rows(x, &rows_at(&ta), &hbo, &mut y, &phase(3));
    } else {
        let t: Vec<usize> = (2..r + m - 1).step_by(2).collect();
        let shifted: Vec<usize> = t.iter().map(|&v| v - 1).collect();
        let (ta, tb) = if positive {
            (t.clone(), shifted)
        } else {
            (shifted, t.clone())
        };
        convolve_rows(x, &rows_at(&tb), &hao, &mut y, &phase(0));
        convolve_rows(x, &rows_at(&ta), &hbo, &mut y, &phase(1));
        convolve_rows(x, &rows_at(&tb), &hae, &mut y, &phase(2));
        convolve_rows(x, &rows_at(&ta), &hbe, &mut y, &phase(3));
    }
    y
}

/// Packs the four polyphase quadrants of a real band-pass output into the
/// two complex subbands of opposite orientation.
pub(crate) fn q2c(y: &Mat) -> (CMat, CMat) {
    let rows = y.rows / 2;
    let cols = y.cols / 2;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut z0 = CMat::zeros(rows, cols);
    let mut z1 = CMat::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let a = y.get(2 * r, 2 * c);
            let b = y.get(2 * r, 2 * c + 1);
            let cc = y.get(2 * r + 1, 2 * c);
            let d = y.get(2 * r + 1, 2 * c + 1);
            let p = Complex64::new(a * s, b * s);
            let q = Complex64::new(d * s, -cc * s);
            z0.data[r * cols + c] = p - q;
            z1.data[r * cols + c] = p + q;
        }
    }
    (z0, z1)
}

/// Inverse of [`q2c`].
pub(crate) fn c2q(w0: &CMat, w1: &CMat) -> Mat {
    let (rows, cols) = (w0.rows, w0.cols);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut x = Mat::zeros(2 * rows, 2 * cols);
    for r in 0..rows {
        for c in 0..cols {
            let a = w0.data[r * cols + c];
            let b = w1.data[r * cols + c];
            let p = (a + b) * s;
            let q = (a - b) * s;
            x.set(2 * r, 2 * c, p.re);
            x.set(2 * r, 2 * c + 1, p.im);
            x.set(2 * r + 1, 2 * c, q.im);
            x.set(2 * r + 1, 2 * c + 1, -q.re);
        }
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }
}
