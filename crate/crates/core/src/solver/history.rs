/// Every row computed so far on the solver grid (states and algebraic
/// values). Rows are never evicted.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    dt: f64,
    width: usize,
    rows: Vec<f64>,
}

impl HistoryBuffer {
    pub fn new(dt: f64, width: usize, capacity: usize) -> Self {
        Self {
            dt,
            width,
            rows: Vec::with_capacity(width * capacity),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.width.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.width);
        self.rows.extend_from_slice(row);
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k * self.width..(k + 1) * self.width]
    }

    /// Value of column `col` at `t_k - tau`, where row `k` is still being
    /// assembled in `current`. Times at or before the first grid point give
    /// the first row (constant prolongation); times inside the last interval
    /// interpolate towards `current`.
    pub fn lookup(&self, col: usize, k: usize, tau: f64, current: &[f64]) -> f64 {
        debug_assert_eq!(self.len(), k);
        let pos = k as f64 - tau / self.dt;
        if pos >= k as f64 {
            return current[col];
        }
        if pos <= 0.0 {
            return if k == 0 { current[col] } else { self.row(0)[col] };
        }
        let i = pos.floor() as usize;
        let fr = pos - i as f64;
        let a = self.row(i)[col];
        if fr == 0.0 {
            return a;
        }
        let b = if i + 1 == k { current[col] } else { self.row(i + 1)[col] };
        a * (1.0 - fr) + b * fr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prehistory_is_first_row() {
        let mut h = HistoryBuffer::new(0.5, 1, 4);
        assert_eq!(h.lookup(0, 0, 10.0, &[3.0]), 3.0);
        h.push(&[3.0]);
        h.push(&[5.0]);
        assert_eq!(h.lookup(0, 2, 10.0, &[7.0]), 3.0);
    }

    #[test]
    fn interpolates_including_current_row() {
        let mut h = HistoryBuffer::new(0.5, 1, 4);
        h.push(&[0.0]);
        h.push(&[1.0]);
        assert_eq!(h.lookup(0, 2, 0.25, &[3.0]), 2.0);
        assert_eq!(h.lookup(0, 2, 0.75, &[3.0]), 0.5);
        assert_eq!(h.lookup(0, 2, 0.5, &[3.0]), 1.0);
        assert_eq!(h.lookup(0, 2, 0.0, &[3.0]), 3.0);
    }
}
