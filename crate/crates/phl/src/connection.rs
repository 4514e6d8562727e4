//! The flat connection `d + Omega` in the real frame `(e0, u_1, v_1, ..., u_m, v_m)`.
//!
//! `Omega = Omega_x dx + Omega_y dy` couples `e0` to `(u_1, v_1)` with weight
//! `sqrt(2 h_1)`, rotates each plane `(u_j, v_j)` by `omega_j`, links
//! consecutive planes through the conformal blocks `Gamma_j` and closes with
//! the reflection block `Gamma_m` on the last plane.

use nalgebra::DMatrix;
use num_complex::Complex64;
use phl_core::higgs::HiggsData;
use rayon::prelude::*;

use crate::background::{Background, FieldJets};
use crate::error::{PhlError, Result};
use crate::grid::{Spectral, TorusGrid};
use crate::jet::Jet;
use crate::solver::MetricSolution;

/// Index of `u_j` (1-based `j`); `v_j` follows it.
pub fn u_index(j: usize) -> usize {
    2 * j - 1
}

/// Anything that can evaluate `(Omega_x, Omega_y)` at a point.
pub trait Connection: Sync {
    fn dim(&self) -> usize;
    fn omega(&self, x: f64, y: f64) -> (DMatrix<f64>, DMatrix<f64>);
}

/// A connection with Taylor jets and access to its Higgs data.
pub trait JetConnection: Connection {
    fn omega_jets(&self, x: f64, y: f64, order: usize) -> (JetMatrix, JetMatrix);
    fn gammas(&self, x: f64, y: f64) -> Vec<Complex64>;
}

/// Square matrix of real jets, row-major.
#[derive(Clone, Debug)]
pub struct JetMatrix {
    pub n: usize,
    pub e: Vec<Jet>,
}

impl JetMatrix {
    pub fn zero(n: usize, order: usize) -> Self {
        Self { n, e: vec![Jet::zero(order); n * n] }
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet {
        &self.e[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Jet) {
        self.e[i * self.n + j] = v;
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: &Jet) {
        let k = i * self.n + j;
        self.e[k] = &self.e[k] + v;
    }

    pub fn value(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).value())
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Self {
        Self { n: self.n, e: self.e.iter().map(f).collect() }
    }
}

/// Place a 2x2 block given row-major.
fn put(mat: &mut JetMatrix, r: usize, c: usize, b: [Jet; 4], transpose_too: bool) {
    for (k, v) in b.into_iter().enumerate() {
        let (i, j) = (k / 2, k % 2);
        if transpose_too {
            mat.add_to(c + j, r + i, &v);
        }
        mat.add_to(r + i, c + j, &v);
    }
}

/// Connection matrices of order `fj.order - 1` from field jets.
pub fn connection_from_jets(fj: &FieldJets) -> (JetMatrix, JetMatrix) {
    let m = fj.m();
    let n = 2 * m + 1;
    let order = fj.u[0].order().saturating_sub(1);
    let mut ox = JetMatrix::zero(n, order);
    let mut oy = JetMatrix::zero(n, order);
    let c0 = fj.u[0].scale(0.5).exp().scale(2f64.sqrt()).truncate(order);
    ox.set(0, 1, c0.clone());
    ox.set(1, 0, c0.clone());
    oy.set(0, 2, c0.clone());
    oy.set(2, 0, c0);
    for j in 1..=m {
        let a = u_index(j);
        let half_x = fj.u[j - 1].dx().scale(0.5);
        let half_y = fj.u[j - 1].dy().scale(0.5);
        ox.add_to(a, a + 1, &half_y);
        ox.add_to(a + 1, a, &-&half_y);
        oy.add_to(a, a + 1, &-&half_x);
        oy.add_to(a + 1, a, &half_x);
    }
    for j in 1..m {
        let (a, b) = (u_index(j), u_index(j + 1));
        let s = (&fj.u[j] - &fj.u[j - 1]).scale(0.5).exp();
        let r = (&fj.gamma[j - 1].re * &s).truncate(order);
        let i = (&fj.gamma[j - 1].im * &s).truncate(order);
        put(&mut ox, b, a, [r.clone(), -&i, i.clone(), r.clone()], true);
        put(&mut oy, b, a, [-&i, -&r, r.clone(), -&i], true);
    }
    let a = u_index(m);
    let s = fj.u[m - 1].scale(-1.0).exp();
    let r = (&fj.gamma[m - 1].re * &s).truncate(order);
    let i = (&fj.gamma[m - 1].im * &s).truncate(order);
    put(&mut ox, a, a, [r.clone(), -&i, -&i, -&r], false);
    put(&mut oy, a, a, [-&i, -&r, -&r, i], false);
    (ox, oy)
}

/// Entry flipped by the mutation flag: `Omega_x[u_2][u_1]`, or `Omega_x[e0][u_1]` when `m = 1`.
/// Both flips keep `Omega_x` trace-free.
pub fn corrupt_entry(m: usize) -> (usize, usize) {
    if m >= 2 {
        (u_index(2), u_index(1))
    } else {
        (0, u_index(1))
    }
}

/// The connection of a background, optionally with one entry sign-flipped.
#[derive(Clone, Debug)]
pub struct FlatConnection<B> {
    pub bg: B,
    pub corrupt: bool,
}

impl<B: Background> FlatConnection<B> {
    pub fn new(bg: B) -> Self {
        Self { bg, corrupt: false }
    }

    pub fn corrupted(bg: B) -> Self {
        Self { bg, corrupt: true }
    }

    pub fn m(&self) -> usize {
        self.bg.m()
    }

    /// Jets of `(Omega_x, Omega_y)` of the given order.
    pub fn jets(&self, x: f64, y: f64, order: usize) -> (JetMatrix, JetMatrix) {
        let (mut ox, oy) = connection_from_jets(&self.bg.jets(x, y, order + 1));
        if self.corrupt {
            let (i, j) = corrupt_entry(self.m());
            let v = -ox.get(i, j);
            ox.set(i, j, v);
        }
        (ox, oy)
    }
}

impl<B: Background> Connection for FlatConnection<B> {
    fn dim(&self) -> usize {
        2 * self.m() + 1
    }

    fn omega(&self, x: f64, y: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let (ox, oy) = self.jets(x, y, 0);
        (ox.value(), oy.value())
    }
}

impl<B: Background> JetConnection for FlatConnection<B> {
    fn omega_jets(&self, x: f64, y: f64, order: usize) -> (JetMatrix, JetMatrix) {
        self.jets(x, y, order)
    }

    fn gammas(&self, x: f64, y: f64) -> Vec<Complex64> {
        self.bg.gamma(x, y)
    }
}

/// Node samples of a connection on a lattice patch, bilinearly interpolated.
#[derive(Clone, Debug)]
pub struct SampledConnection {
    origin: (f64, f64),
    e1: (f64, f64),
    e2: (f64, f64),
    ni: usize,
    nj: usize,
    periodic: bool,
    mats: Vec<(DMatrix<f64>, DMatrix<f64>)>,
}

impl SampledConnection {
    /// Sample `conn` at `origin + i e1 + j e2` for `i < ni`, `j < nj`.
    pub fn sample(
        conn: &dyn Connection,
        origin: (f64, f64),
        e1: (f64, f64),
        e2: (f64, f64),
        ni: usize,
        nj: usize,
    ) -> Self {
        let mats = (0..ni * nj)
            .into_par_iter()
            .map(|k| {
                let (i, j) = ((k / nj) as f64, (k % nj) as f64);
                conn.omega(origin.0 + i * e1.0 + j * e2.0, origin.1 + i * e1.1 + j * e2.1)
            })
            .collect();
        Self { origin, e1, e2, ni, nj, periodic: false, mats }
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        let (i, j) = (i as f64, j as f64);
        (self.origin.0 + i * self.e1.0 + j * self.e2.0, self.origin.1 + i * self.e1.1 + j * self.e2.1)
    }

    fn lattice(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.origin.0, y - self.origin.1);
        let det = self.e1.0 * self.e2.1 - self.e1.1 * self.e2.0;
        ((dx * self.e2.1 - dy * self.e2.0) / det, (self.e1.0 * dy - self.e1.1 * dx) / det)
    }
}

impl Connection for SampledConnection {
    fn dim(&self) -> usize {
        self.mats[0].0.nrows()
    }

    fn omega(&self, x: f64, y: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let (s, t) = self.lattice(x, y);
        let (fs, ft) = (s.floor(), t.floor());
        let (ws, wt) = (s - fs, t - ft);
        let clamp = |v: f64, n: usize| -> usize {
            if self.periodic {
                (v as i64).rem_euclid(n as i64) as usize
            } else {
                (v.max(0.0) as usize).min(n - 2)
            }
        };
        let (i0, j0) = (clamp(fs, self.ni), clamp(ft, self.nj));
        let (ws, wt) = if self.periodic { (ws, wt) } else { (s - i0 as f64, t - j0 as f64) };
        let (i1, j1) = ((i0 + 1) % self.ni, (j0 + 1) % self.nj);
        let at = |i: usize, j: usize| &self.mats[i * self.nj + j];
        let w = [(1.0 - ws) * (1.0 - wt), ws * (1.0 - wt), (1.0 - ws) * wt, ws * wt];
        let c = [at(i0, j0), at(i1, j0), at(i0, j1), at(i1, j1)];
        let mut ox = DMatrix::zeros(self.dim(), self.dim());
        let mut oy = ox.clone();
        for (wk, ck) in w.iter().zip(c) {
            ox += &ck.0 * *wk;
            oy += &ck.1 * *wk;
        }
        (ox, oy)
    }
}

/// Connection data assembled on the nodes of a torus grid.
#[derive(Clone, Debug)]
pub struct ConnectionField {
    pub grid: TorusGrid,
    /// `e0` coupling `sqrt(2 h_1)` per node.
    pub coupling: Vec<f64>,
    /// `omega[j] = (dx part, dy part)` of the rotation form of plane `j + 1`:
    /// `(-u_y/2, u_x/2)`.
    pub omega: Vec<[Vec<f64>; 2]>,
    /// `gamma[j] = (dx block, dy block)` row-major per node.
    pub gamma: Vec<[Vec<[f64; 4]>; 2]>,
}

/// Build the connection of a torus solution with spectral derivatives.
pub fn assemble_connection(sol: &MetricSolution, data: &HiggsData, grid: &TorusGrid) -> Result<ConnectionField> {
    let m = data.m;
    if sol.m() != m || data.len() != grid.len() || sol.u.iter().any(|u| u.len() != grid.len()) {
        return Err(PhlError::Validation("solution, Higgs data and grid have different shapes".into()));
    }
    let spec = Spectral::new(*grid);
    let coupling = sol.u[0].iter().map(|u| (2.0 * u.exp()).sqrt()).collect();
    let omega = sol
        .u
        .iter()
        .map(|u| {
            let ux = spec.dx(u);
            let uy = spec.dy(u);
            [uy.iter().map(|v| -0.5 * v).collect(), ux.iter().map(|v| 0.5 * v).collect()]
        })
        .collect();
    let gamma = (1..=m)
        .map(|j| {
            let mut bx = Vec::with_capacity(grid.len());
            let mut by = Vec::with_capacity(grid.len());
            for k in 0..grid.len() {
                let g = data.gammas[j - 1][k];
                let (r, i) = (g.re, g.im);
                if j < m {
                    let s = ((sol.u[j][k] - sol.u[j - 1][k]) * 0.5).exp();
                    bx.push([s * r, -s * i, s * i, s * r]);
                    by.push([-s * i, -s * r, s * r, -s * i]);
                } else {
                    let s = (-sol.u[m - 1][k]).exp();
                    bx.push([s * r, -s * i, -s * i, -s * r]);
                    by.push([-s * i, -s * r, -s * r, s * i]);
                }
            }
            [bx, by]
        })
        .collect();
    Ok(ConnectionField { grid: *grid, coupling, omega, gamma })
}

impl ConnectionField {
    pub fn m(&self) -> usize {
        self.omega.len()
    }

    /// Full `(Omega_x, Omega_y)` at node `k`.
    pub fn matrices(&self, k: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let m = self.m();
        let n = 2 * m + 1;
        let mut ox = DMatrix::zeros(n, n);
        let mut oy = DMatrix::zeros(n, n);
        let c = self.coupling[k];
        ox[(0, 1)] = c;
        ox[(1, 0)] = c;
        oy[(0, 2)] = c;
        oy[(2, 0)] = c;
        for j in 1..=m {
            let a = u_index(j);
            let (wx, wy) = (self.omega[j - 1][0][k], self.omega[j - 1][1][k]);
            ox[(a, a + 1)] = -wx;
            ox[(a + 1, a)] = wx;
            oy[(a, a + 1)] = -wy;
            oy[(a + 1, a)] = wy;
        }
        for j in 1..=m {
            let a = u_index(j);
            let (bx, by) = (self.gamma[j - 1][0][k], self.gamma[j - 1][1][k]);
            let (r, c) = if j < m { (u_index(j + 1), a) } else { (a, a) };
            for e in 0..4 {
                let (p, q) = (e / 2, e % 2);
                ox[(r + p, c + q)] += bx[e];
                oy[(r + p, c + q)] += by[e];
                if j < m {
                    ox[(c + q, r + p)] += bx[e];
                    oy[(c + q, r + p)] += by[e];
                }
            }
        }
        (ox, oy)
    }

    /// Periodic bilinear interpolation of the node matrices.
    pub fn sampled(&self) -> SampledConnection {
        let g = self.grid;
        let h = g.spacing();
        SampledConnection {
            origin: (0.0, 0.0),
            e1: (h, 0.0),
            e2: (g.modulus.re * h, g.modulus.im * h),
            ni: g.n,
            nj: g.n,
            periodic: true,
            mats: (0..g.len()).map(|k| self.matrices(k)).collect(),
        }
    }
}
