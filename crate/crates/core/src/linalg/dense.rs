use super::{check_len, LinalgError, LinearOperator};

/// Row-major dense block of single-precision values.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock {
    nrows: usize,
    ncols: usize,
    values: Vec<f32>,
}

impl DenseBlock {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            values: vec![0.0; nrows * ncols],
        }
    }

    pub fn from_values(nrows: usize, ncols: usize, values: Vec<f32>) -> Result<Self, LinalgError> {
        check_len(nrows * ncols, values.len())?;
        Ok(Self {
            nrows,
            ncols,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.values[r * self.ncols + c]
    }

    pub fn nbytes(&self) -> u64 {
        4 * (self.nrows * self.ncols) as u64
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }

    /// `y += A x`.
    pub fn matvec_acc(&self, x: &[f64], y: &mut [f64]) {
        if self.ncols == 0 {
            return;
        }
        for (row, yr) in self.values.chunks(self.ncols).zip(y.iter_mut()) {
            *yr += row
                .iter()
                .zip(x)
                .map(|(&a, &b)| a as f64 * b)
                .sum::<f64>();
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        check_len(self.ncols, x.len())?;
        let mut y = vec![0.0; self.nrows];
        self.matvec_acc(x, &mut y);
        Ok(y)
    }
}

impl LinearOperator for DenseBlock {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        self.matvec_acc(x, y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_size() {
        let d = DenseBlock::from_values(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(d.matvec(&[1.0, 0.0, -1.0]).unwrap(), vec![-2.0, -2.0]);
        assert_eq!(DenseBlock::zeros(100, 100).nbytes(), 40_000);
        assert!(d.matvec(&[1.0]).is_err());
        assert!(DenseBlock::from_values(2, 2, vec![0.0; 3]).is_err());
    }
}
