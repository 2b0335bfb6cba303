//! Transition matrix container.

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;

/// Dense transition matrix: maps regular (1-type) expansion coefficients to
/// outgoing (4-type) coefficients, f = T a, at a fixed wavenumber.
#[derive(Debug, Clone)]
pub struct TMatrix {
    pub matrix: Array2<Complex64>,
    /// Wavenumber (rad/m).
    pub k: f64,
    pub basis: BasisSpec,
}

impl TMatrix {
    pub fn new(matrix: Array2<Complex64>, k: f64, basis: BasisSpec) -> Result<Self> {
        let n = basis.size();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "T-matrix shape {:?} != basis size {}",
                matrix.dim(),
                n
            )));
        }
        Ok(Self { matrix, k, basis })
    }

    pub fn zeros(k: f64, basis: BasisSpec) -> Self {
        let n = basis.size();
        Self { matrix: Array2::zeros((n, n)), k, basis }
    }

    pub fn size(&self) -> usize {
        self.basis.size()
    }

    /// Scattering matrix S = 1 + 2T.
    pub fn scattering_matrix(&self) -> Array2<Complex64> {
        let mut s = self.matrix.mapv(|v| 2.0 * v);
        for i in 0..s.nrows() {
            s[[i, i]] += 1.0;
        }
        s
    }
}
