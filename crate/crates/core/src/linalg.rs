//! Minimal dense row-major matrix and power iteration.

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has wrong length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.cols..(j + 1) * self.cols]
    }

    /// Largest eigenvalue of `B^T B / rows` where `B` is the column range `cols`.
    pub fn gram_top_eigenvalue(&self, cols: std::ops::Range<usize>, max_iter: usize, rel_tol: f64) -> f64 {
        let width = cols.len();
        if width == 0 || self.rows == 0 {
            return 0.0;
        }
        let scale = 1.0 / self.rows as f64;
        // Deterministic, non-degenerate start vector.
        let mut v: Vec<f64> = (0..width).map(|j| 1.0 + 0.37 * ((j * 7919 % 101) as f64 / 101.0)).collect();
        normalize(&mut v);
        let mut w = vec![0.0; width];
        let mut estimate = 0.0;
        for _ in 0..max_iter {
            w.iter_mut().for_each(|e| *e = 0.0);
            for j in 0..self.rows {
                let r = &self.row(j)[cols.clone()];
                let t = dot(r, &v);
                if t != 0.0 {
                    axpy(t, r, &mut w);
                }
            }
            w.iter_mut().for_each(|e| *e *= scale);
            let next = dot(&w, &v);
            let norm = dot(&w, &w).sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            v.iter_mut().zip(&w).for_each(|(a, b)| *a = b / norm);
            let done = (next - estimate).abs() <= rel_tol * next.abs();
            estimate = next;
            if done {
                break;
            }
        }
        estimate
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(b, a)| *b += alpha * a);
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

fn normalize(v: &mut [f64]) {
    let n = norm_sq(v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|e| *e /= n);
    }
}
