//! Complex matrices held as separate real and imaginary parts so that products run
//! through the real GEMM kernels. Purely real data skips the imaginary work entirely.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub(crate) struct Split {
    pub re: DMatrix<f64>,
    pub im: Option<DMatrix<f64>>,
}

impl Split {
    pub fn real(re: DMatrix<f64>) -> Self {
        Self { re, im: None }
    }

    pub fn from_complex(m: &DMatrix<Complex64>) -> Self {
        let re = m.map(|z| z.re);
        let im = if m.iter().any(|z| z.im != 0.0) {
            Some(m.map(|z| z.im))
        } else {
            None
        };
        Self { re, im }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re[(i, j)], self.im.as_ref().map_or(0.0, |m| m[(i, j)]))
    }

    pub fn norm_sqr(&self, i: usize, j: usize) -> f64 {
        let r = self.re[(i, j)];
        let m = self.im.as_ref().map_or(0.0, |m| m[(i, j)]);
        r * r + m * m
    }

    pub fn scale_columns(&mut self, factors: &[f64]) {
        for (mut col, &f) in self.re.column_iter_mut().zip(factors) {
            col *= f;
        }
        if let Some(im) = &mut self.im {
            for (mut col, &f) in im.column_iter_mut().zip(factors) {
                col *= f;
            }
        }
    }

    /// X·Xᴴ.
    pub fn gram(&self) -> Split {
        let rt = self.re.transpose();
        let mut re = &self.re * &rt;
        let im = self.im.as_ref().map(|im| {
            let it = im.transpose();
            re += im * &it;
            im * &rt - &self.re * &it
        });
        Split { re, im }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_matches_complex_product() {
        let z = DMatrix::from_fn(4, 3, |i, j| {
            Complex64::new((i + 2 * j) as f64 * 0.3 - 1.0, (i * j) as f64 * 0.2 - 0.1)
        });
        let expect = &z * z.adjoint();
        let g = Split::from_complex(&z).gram();
        for i in 0..4 {
            for j in 0..4 {
                assert!((g.get(i, j) - expect[(i, j)]).norm() < 1e-13);
            }
        }
        let r = Split::real(z.map(|c| c.re)).gram();
        assert!(r.im.is_none());
        assert!(
            (r.norm_sqr(1, 2) - (z.map(|c| c.re) * z.map(|c| c.re).transpose())[(1, 2)].powi(2))
                .abs()
                < 1e-13
        );
    }
}
