use std::ops::{Index, IndexMut};

/// Dense row-major array indexed by `(line, angle)`.
///
/// Row `n` holds the values on the line `t = t_n`, one entry per angular node.
#[derive(Debug, Clone, PartialEq)]
pub struct LineArray<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> LineArray<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(rows * cols, data.len(), "shape mismatch");
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, n: usize) -> &[T] {
        &self.data[n * self.cols..(n + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, n: usize) -> &mut [T] {
        &mut self.data[n * self.cols..(n + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for LineArray<T> {
    type Output = T;
    #[inline]
    fn index(&self, (n, j): (usize, usize)) -> &T {
        &self.data[n * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for LineArray<T> {
    #[inline]
    fn index_mut(&mut self, (n, j): (usize, usize)) -> &mut T {
        &mut self.data[n * self.cols + j]
    }
}

/// Cyclic shift on the periodic grid: `out[(j + s) mod M] = v[j]`.
pub fn rotate_periodic<T: Copy>(v: &[T], shift: usize) -> Vec<T> {
    let m = v.len();
    if m == 0 {
        return Vec::new();
    }
    let s = shift % m;
    let mut out = v.to_vec();
    out.rotate_right(s);
    out
}
