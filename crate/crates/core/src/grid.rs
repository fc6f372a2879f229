//! Uniform periodic grids in two or three dimensions and spectral
//! (FFT) differentiation on them.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::lattice::ordered_sum;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Geometry {
    /// Unit torus `[0, 1)^d`.
    Torus,
    /// Box `[−X, X)^d`; fields are expected to decay before the boundary.
    Box { half_width: f64 },
}

/// `n` points per axis, row-major with the last axis contiguous.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub geometry: Geometry,
}

impl Grid {
    pub fn torus(dim: usize, n: usize) -> Self {
        Self::checked(dim, n, Geometry::Torus)
    }

    pub fn centered_box(dim: usize, n: usize, half_width: f64) -> Self {
        assert!(half_width > 0.0, "half width must be positive");
        Self::checked(dim, n, Geometry::Box { half_width })
    }

    fn checked(dim: usize, n: usize, geometry: Geometry) -> Self {
        assert!(dim == 2 || dim == 3, "only 2D and 3D grids are supported");
        assert!(n >= 2, "need at least two points per axis");
        Self { dim, n, geometry }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        match self.geometry {
            Geometry::Torus => 1.0,
            Geometry::Box { half_width } => 2.0 * half_width,
        }
    }

    pub fn origin(&self) -> f64 {
        match self.geometry {
            Geometry::Torus => 0.0,
            Geometry::Box { half_width } => -half_width,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.n; self.dim]
    }

    /// Position of flat index `idx`; unused trailing components are zero.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let mut rest = idx;
        for d in (0..self.dim).rev() {
            x[d] = self.origin() + (rest % self.n) as f64 * self.spacing();
            rest /= self.n;
        }
        x
    }

    /// Whether flat index `idx` lies on a face of the grid.
    pub fn on_boundary(&self, idx: usize) -> bool {
        let mut rest = idx;
        (0..self.dim).any(|_| {
            let i = rest % self.n;
            rest /= self.n;
            i == 0 || i == self.n - 1
        })
    }

    /// Samples `f` at every grid point.
    pub fn sample<F: Fn([f64; 3]) -> f64 + Sync>(&self, f: F) -> Vec<f64> {
        (0..self.len()).into_par_iter().map(|i| f(self.position(i))).collect()
    }

    /// Angular wavenumbers along one axis in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        let scale = 2.0 * PI / self.length();
        (0..n)
            .map(|j| if j <= n / 2 { j } else { j - n })
            .map(|j| scale * j as f64)
            .collect()
    }

    /// `Re Σ conj(a)·b·h^d`.
    pub fn inner(&self, a: &[Complex64], b: &[Complex64]) -> f64 {
        let s = ordered_sum(a.len(), |i| a[i].re * b[i].re + a[i].im * b[i].im);
        s * self.cell_volume()
    }

    pub fn norm(&self, a: &[Complex64]) -> f64 {
        self.inner(a, a).sqrt()
    }
}

/// FFT plans plus the wavenumber tables of one grid.
pub struct Spectral {
    pub grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
    k2: Vec<f64>,
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n);
        let inverse = planner.plan_fft_inverse(grid.n);
        let k = grid.wavenumbers();
        let k2 = (0..grid.len())
            .map(|idx| {
                let mut rest = idx;
                (0..grid.dim)
                    .map(|_| {
                        let kk = k[rest % grid.n];
                        rest /= grid.n;
                        kk * kk
                    })
                    .sum()
            })
            .collect();
        Self {
            grid,
            forward,
            inverse,
            k,
            k2,
        }
    }

    /// `|k|²` per flat index in Fourier order.
    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n;
        assert_eq!(data.len(), self.grid.len(), "field does not match grid");
        let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
        for axis in 0..self.grid.dim {
            let stride = n.pow((self.grid.dim - 1 - axis) as u32);
            if stride == 1 {
                // rustfft transforms consecutive length-n chunks in one call
                plan.process(data);
                continue;
            }
            // gather strided lines contiguously, transform, scatter back
            buf.par_chunks_mut(n).enumerate().for_each(|(l, line)| {
                let base = (l / stride) * n * stride + l % stride;
                for (j, z) in line.iter_mut().enumerate() {
                    *z = data[base + j * stride];
                }
            });
            plan.process(&mut buf);
            data.par_chunks_mut(stride).enumerate().for_each(|(c, row)| {
                let (o, j) = (c / n, c % n);
                for (q, z) in row.iter_mut().enumerate() {
                    *z = buf[(o * stride + q) * n + j];
                }
            });
        }
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform in place, normalized so `inverse ∘ forward = id`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.grid.len() as f64;
        data.par_iter_mut().for_each(|z| *z *= scale);
    }

    /// Applies the Fourier multiplier `m(idx)` to `phi`.
    pub fn multiplier<F: Fn(usize) -> Complex64 + Sync>(&self, phi: &[Complex64], m: F) -> Vec<Complex64> {
        let mut out = phi.to_vec();
        self.forward(&mut out);
        out.par_iter_mut().enumerate().for_each(|(i, z)| *z *= m(i));
        self.inverse(&mut out);
        out
    }

    /// `−Δφ`.
    pub fn neg_laplacian(&self, phi: &[Complex64]) -> Vec<Complex64> {
        self.multiplier(phi, |i| Complex64::new(self.k2[i], 0.0))
    }

    /// `∂_axis φ`; the Nyquist mode is dropped.
    pub fn derivative(&self, phi: &[Complex64], axis: usize) -> Vec<Complex64> {
        let n = self.grid.n;
        let stride = n.pow((self.grid.dim - 1 - axis) as u32);
        self.multiplier(phi, |i| {
            let j = (i / stride) % n;
            if n % 2 == 0 && j == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, self.k[j])
            }
        })
    }

    /// `∫|∇φ|²` from Parseval.
    pub fn kinetic_energy(&self, phi: &[Complex64]) -> f64 {
        let mut hat = phi.to_vec();
        self.forward(&mut hat);
        let s = ordered_sum(hat.len(), |i| self.k2[i] * hat[i].norm_sqr());
        s * self.grid.cell_volume() / self.grid.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let grid = Grid::centered_box(3, 6, 1.5);
        let sp = Spectral::new(grid);
        let orig: Vec<Complex64> = (0..grid.len())
            .map(|i| Complex64::new((i as f64).sin(), (0.3 * i as f64).cos()))
            .collect();
        let mut data = orig.clone();
        sp.forward(&mut data);
        sp.inverse(&mut data);
        for (a, b) in orig.iter().zip(&data) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn plane_wave_laplacian() {
        let grid = Grid::torus(2, 16);
        let sp = Spectral::new(grid);
        let k = [2.0 * PI * 3.0, 2.0 * PI * -2.0];
        let phi: Vec<Complex64> = (0..grid.len())
            .map(|i| {
                let x = grid.position(i);
                Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1])
            })
            .collect();
        let lap = sp.neg_laplacian(&phi);
        let k2 = k[0] * k[0] + k[1] * k[1];
        for (a, b) in phi.iter().zip(&lap) {
            assert!((a * k2 - b).norm() < 1e-9 * k2);
        }
        let dy = sp.derivative(&phi, 1);
        for (a, b) in phi.iter().zip(&dy) {
            assert!((a * Complex64::new(0.0, k[1]) - b).norm() < 1e-9 * k2);
        }
        assert!((sp.kinetic_energy(&phi) - k2).abs() < 1e-9 * k2);
    }

    #[test]
    fn positions_and_boundary() {
        let grid = Grid::centered_box(3, 4, 2.0);
        assert_eq!(grid.position(0), [-2.0, -2.0, -2.0]);
        assert_eq!(grid.position(1), [-2.0, -2.0, -1.0]);
        assert_eq!(grid.position(4), [-2.0, -1.0, -2.0]);
        assert!(grid.on_boundary(0));
        assert!(!grid.on_boundary(16 + 4 + 1));
    }
}
