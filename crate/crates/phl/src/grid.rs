//! The flat torus `C / (Z + modulus Z)` sampled on an `n x n` grid, with
//! spectral and finite-difference differentiation.
//!
//! Node `(i, j)` sits at `z = i/n + (j/n) * modulus` and is stored at
//! `i * n + j`. With `modulus = a + ib`, the Fourier mode `(k, l)` has
//! `d/dx -> 2 pi i k` and `d/dy -> 2 pi i (l - a k)/b`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{PhlError, Result};

/// Fixed fan-in of the deterministic reductions.
pub const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub n: usize,
    pub modulus: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Spectral,
    Stencil,
}

impl std::str::FromStr for Backend {
    type Err = PhlError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Backend::Spectral),
            "stencil" => Ok(Backend::Stencil),
            _ => Err(PhlError::Validation(format!("unknown backend '{s}'"))),
        }
    }
}

impl TorusGrid {
    pub fn new(n: usize, modulus: Complex64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(PhlError::Validation(format!("grid size must be even and >= 8, got {n}")));
        }
        if modulus.im <= 0.0 {
            return Err(PhlError::Validation("modulus must have positive imaginary part".into()));
        }
        Ok(Self { n, modulus })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, Complex64::new(0.0, 1.0))
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Step along the first lattice direction.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        let s = i as f64 / self.n as f64;
        let t = j as f64 / self.n as f64;
        (s + self.modulus.re * t, self.modulus.im * t)
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        (0..self.n).flat_map(|i| (0..self.n).map(move |j| (i, j))).map(|(i, j)| self.point(i, j)).collect()
    }

    /// Sample a function of `(x, y)` at every node.
    pub fn sample<T: Send>(&self, f: impl Fn(f64, f64) -> T + Sync) -> Vec<T> {
        (0..self.len())
            .into_par_iter()
            .map(|k| {
                let (x, y) = self.point(k / self.n, k % self.n);
                f(x, y)
            })
            .collect()
    }

    fn wavenumber(&self, idx: usize) -> f64 {
        let n = self.n as isize;
        let k = idx as isize;
        (if k <= n / 2 { k } else { k - n }) as f64
    }

    /// `(k_x, k_y)` of mode `(k, l)`; the Nyquist index is folded to `+n/2`.
    pub fn mode(&self, k: usize, l: usize) -> (f64, f64) {
        let (a, b) = (self.modulus.re, self.modulus.im);
        let kk = self.wavenumber(k);
        let ll = self.wavenumber(l);
        (2.0 * PI * kk, 2.0 * PI * (ll - a * kk) / b)
    }
}

/// Deterministic sum: fixed-size chunks summed in order.
pub fn tree_sum(v: &[f64]) -> f64 {
    let partial: Vec<f64> = v.par_chunks(CHUNK).map(|c| c.iter().sum::<f64>()).collect();
    partial.iter().sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.par_iter().map(|x| x.abs()).reduce(|| 0.0, f64::max)
}

/// Planned 2-D FFTs for a grid.
#[derive(Clone)]
pub struct Spectral {
    pub grid: TorusGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub fn new(grid: TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.n);
        let inv = planner.plan_fft_inverse(grid.n);
        Self { grid, fwd, inv }
    }

    fn pass(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n;
        data.par_chunks_mut(n).for_each(|row| fft.process(row));
        let mut t = transpose(data, n);
        t.par_chunks_mut(n).for_each(|row| fft.process(row));
        data.copy_from_slice(&transpose(&t, n));
    }

    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let mut d: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.pass(&mut d, &self.fwd);
        d
    }

    pub fn forward_c(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut d = f.to_vec();
        self.pass(&mut d, &self.fwd);
        d
    }

    pub fn inverse_c(&self, mut d: Vec<Complex64>) -> Vec<Complex64> {
        self.pass(&mut d, &self.inv);
        let s = 1.0 / self.grid.len() as f64;
        d.iter_mut().for_each(|x| *x *= s);
        d
    }

    pub fn inverse(&self, d: Vec<Complex64>) -> Vec<f64> {
        self.inverse_c(d).into_iter().map(|x| x.re).collect()
    }

    /// Apply a Fourier multiplier `symbol(k_x, k_y, k, l)`.
    pub fn apply(&self, f: &[f64], symbol: impl Fn(f64, f64, usize, usize) -> Complex64 + Sync) -> Vec<f64> {
        let n = self.grid.n;
        let mut d = self.forward(f);
        d.par_iter_mut().enumerate().for_each(|(idx, x)| {
            let (k, l) = (idx / n, idx % n);
            let (kx, ky) = self.grid.mode(k, l);
            *x *= symbol(kx, ky, k, l);
        });
        self.inverse(d)
    }

    fn nyquist(&self, k: usize, l: usize) -> bool {
        let h = self.grid.n / 2;
        k == h || l == h
    }

    pub fn dx(&self, f: &[f64]) -> Vec<f64> {
        self.apply(f, |kx, _, k, l| if self.nyquist(k, l) { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, kx) })
    }

    pub fn dy(&self, f: &[f64]) -> Vec<f64> {
        self.apply(f, |_, ky, k, l| if self.nyquist(k, l) { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, ky) })
    }

    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        self.apply(f, |kx, ky, _, _| Complex64::new(-(kx * kx + ky * ky), 0.0))
    }
}

fn transpose(d: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut t = vec![Complex64::new(0.0, 0.0); n * n];
    t.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, x) in row.iter_mut().enumerate() {
            *x = d[i * n + j];
        }
    });
    t
}

/// Second-order finite differences in lattice coordinates `(s, t)`:
/// `Lap = (1 + a^2/b^2) d_ss - (2a/b^2) d_st + (1/b^2) d_tt`.
pub fn stencil_laplacian(grid: &TorusGrid, f: &[f64]) -> Vec<f64> {
    let n = grid.n;
    let (a, b) = (grid.modulus.re, grid.modulus.im);
    let h2 = grid.spacing().powi(2);
    let (css, cst, ctt) = ((1.0 + a * a / (b * b)) / h2, -2.0 * a / (b * b) / h2, 1.0 / (b * b) / h2);
    let at = |i: usize, j: usize| f[(i % n) * n + (j % n)];
    (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n + n, k % n + n);
            let c = at(i, j);
            let ss = at(i + 1, j) - 2.0 * c + at(i - 1, j);
            let tt = at(i, j + 1) - 2.0 * c + at(i, j - 1);
            let st = 0.25 * (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1));
            css * ss + cst * st + ctt * tt
        })
        .collect()
}

/// Fourier symbol of [`stencil_laplacian`].
pub fn stencil_symbol(grid: &TorusGrid, k: usize, l: usize) -> f64 {
    let n = grid.n as f64;
    let (a, b) = (grid.modulus.re, grid.modulus.im);
    let h2 = grid.spacing().powi(2);
    let (ts, tt) = (2.0 * PI * k as f64 / n, 2.0 * PI * l as f64 / n);
    let ss = (2.0 * ts.cos() - 2.0) / h2;
    let st = -(ts.sin() * tt.sin()) / h2;
    let ttv = (2.0 * tt.cos() - 2.0) / h2;
    (1.0 + a * a / (b * b)) * ss - 2.0 * a / (b * b) * st + ttv / (b * b)
}

/// The Laplacian for the chosen backend.
pub fn laplacian(spec: &Spectral, backend: Backend, f: &[f64]) -> Vec<f64> {
    match backend {
        Backend::Spectral => spec.laplacian(f),
        Backend::Stencil => stencil_laplacian(&spec.grid, f),
    }
}

/// Laplacian symbol per mode for the chosen backend.
pub fn laplacian_symbol(grid: &TorusGrid, backend: Backend, k: usize, l: usize) -> f64 {
    match backend {
        Backend::Spectral => {
            let (kx, ky) = grid.mode(k, l);
            -(kx * kx + ky * ky)
        }
        Backend::Stencil => stencil_symbol(grid, k, l),
    }
}
