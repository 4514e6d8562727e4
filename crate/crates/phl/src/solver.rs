//! The cyclic Hitchin system on a flat torus.
//!
//! With `u_j = log h_j`, `gamma_0 = 1` and `u_0 = 0` the equations read
//!
//! ```text
//! r_j = Lap(u_j)/4 - |gamma_{j-1}|^2 e^{u_j - u_{j-1}} + |gamma_j|^2 e^{u_{j+1} - u_j}   (j < m)
//! r_m = Lap(u_m)/4 - |gamma_{m-1}|^2 e^{u_m - u_{m-1}} + |gamma_m|^2 e^{-2 u_m}
//! ```
//!
//! Solved by damped inexact Newton; the linear systems use GMRES
//! preconditioned by the Fourier inverse of `Lap/4 + mean reaction Jacobian`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use phl_core::higgs::HiggsData;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PhlError, Result};
use crate::grid::{dot, laplacian, laplacian_symbol, max_abs, Backend, Spectral, TorusGrid};

/// Blow-up guard on `|u_i|`.
pub const BLOWUP: f64 = 50.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSolution {
    /// `u[i]` holds `log h_{i+1}` at every node.
    pub u: Vec<Vec<f64>>,
}

impl MetricSolution {
    pub fn m(&self) -> usize {
        self.u.len()
    }

    pub fn h(&self, i: usize) -> Vec<f64> {
        self.u[i].iter().map(|x| x.exp()).collect()
    }

    pub fn constant(hs: &[f64], len: usize) -> Self {
        Self { u: hs.iter().map(|h| vec![h.ln(); len]).collect() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLog {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub linear_iterations: Vec<usize>,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub backend: Backend,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, backend: Backend::Spectral }
    }
}

fn check_shapes(u: &[Vec<f64>], data: &HiggsData, grid: &TorusGrid) -> Result<()> {
    if u.len() != data.m || data.len() != grid.len() || u.iter().any(|x| x.len() != grid.len()) {
        return Err(PhlError::Validation(format!(
            "shape mismatch: m = {}, {} solution grids, {} gamma samples, {} nodes",
            data.m,
            u.len(),
            data.len(),
            grid.len()
        )));
    }
    Ok(())
}

fn mag2(data: &HiggsData) -> Vec<Vec<f64>> {
    data.gammas.iter().map(|g| g.iter().map(|z| z.norm_sqr()).collect()).collect()
}

/// Reaction terms at one node; `u` and `g2 = |gamma|^2` have length `m`.
fn reaction(u: &[f64], g2: &[f64], out: &mut [f64]) {
    let m = u.len();
    for j in 0..m {
        let prev = if j == 0 { 0.0 } else { u[j - 1] };
        let gprev = if j == 0 { 1.0 } else { g2[j - 1] };
        let down = gprev * (u[j] - prev).exp();
        let up = if j + 1 < m { g2[j] * (u[j + 1] - u[j]).exp() } else { g2[j] * (-2.0 * u[j]).exp() };
        out[j] = -down + up;
    }
}

/// Jacobian of [`reaction`] (tridiagonal, stored dense `m x m`, row-major).
fn reaction_jacobian(u: &[f64], g2: &[f64], out: &mut [f64]) {
    let m = u.len();
    out.iter_mut().for_each(|x| *x = 0.0);
    for j in 0..m {
        let prev = if j == 0 { 0.0 } else { u[j - 1] };
        let gprev = if j == 0 { 1.0 } else { g2[j - 1] };
        let down = gprev * (u[j] - prev).exp();
        out[j * m + j] -= down;
        if j > 0 {
            out[j * m + j - 1] += down;
        }
        if j + 1 < m {
            let up = g2[j] * (u[j + 1] - u[j]).exp();
            out[j * m + j] -= up;
            out[j * m + j + 1] += up;
        } else {
            out[j * m + j] -= 2.0 * g2[j] * (-2.0 * u[j]).exp();
        }
    }
}

fn pointwise<F>(u: &[Vec<f64>], g2: &[Vec<f64>], width: usize, f: F) -> Vec<Vec<f64>>
where
    F: Fn(&[f64], &[f64], &mut [f64]) + Sync,
{
    let m = u.len();
    let len = u[0].len();
    let flat: Vec<f64> = (0..len)
        .into_par_iter()
        .flat_map_iter(|k| {
            let uk: Vec<f64> = (0..m).map(|i| u[i][k]).collect();
            let gk: Vec<f64> = (0..m).map(|i| g2[i][k]).collect();
            let mut out = vec![0.0; width];
            f(&uk, &gk, &mut out);
            out
        })
        .collect();
    (0..width).map(|c| (0..len).map(|k| flat[k * width + c]).collect()).collect()
}

fn residual_raw(spec: &Spectral, backend: Backend, u: &[Vec<f64>], g2: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = u.len();
    let react = pointwise(u, g2, m, reaction);
    u.iter()
        .zip(react)
        .map(|(ui, ri)| {
            let lap = laplacian(spec, backend, ui);
            lap.iter().zip(&ri).map(|(l, r)| 0.25 * l + r).collect()
        })
        .collect()
}

/// Pointwise residuals `r_1..r_m` of the Hitchin system.
pub fn hitchin_residual(
    sol: &MetricSolution,
    data: &HiggsData,
    grid: &TorusGrid,
    backend: Backend,
) -> Result<Vec<Vec<f64>>> {
    check_shapes(&sol.u, data, grid)?;
    let spec = Spectral::new(*grid);
    Ok(residual_raw(&spec, backend, &sol.u, &mag2(data)))
}

/// Largest absolute entry over all residual components.
pub fn residual_norm(r: &[Vec<f64>]) -> f64 {
    r.iter().map(|x| max_abs(x)).fold(0.0, f64::max)
}

/// Constant solution of the system with constant `|gamma_i|`.
///
/// With `t_j = h_j / h_{j-1}` the interior equations force
/// `|gamma_{j-1}|^2 t_j = t_1 = h_1`, and the last one gives
/// `h_1^{2m+1} = |gamma_1 ... gamma_{m-1}|^4 |gamma_m|^2`.
pub fn solve_constant(m: usize, gamma_mags: &[f64]) -> Result<Vec<f64>> {
    if m == 0 || gamma_mags.len() != m {
        return Err(PhlError::Validation(format!("expected {m} gamma magnitudes, got {}", gamma_mags.len())));
    }
    if gamma_mags.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(PhlError::Numerical("no positive constant root: some |gamma_i| vanishes".into()));
    }
    let lq2: f64 = gamma_mags[..m - 1].iter().map(|g| 4.0 * g.ln()).sum::<f64>() + 2.0 * gamma_mags[m - 1].ln();
    let lh1 = lq2 / (2 * m + 1) as f64;
    let mut out = Vec::with_capacity(m);
    let mut lh = lh1;
    out.push(lh.exp());
    for g in &gamma_mags[..m - 1] {
        lh += lh1 - 2.0 * g.ln();
        out.push(lh.exp());
    }
    Ok(out)
}

/// Fourier preconditioner `(Lap/4 + M)^{-1}` with a constant `m x m` block `M`.
struct Preconditioner {
    spec: Spectral,
    /// LU factors per mode.
    blocks: Vec<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    m: usize,
}

impl Preconditioner {
    fn new(spec: &Spectral, backend: Backend, mean_jac: &DMatrix<f64>) -> Result<Self> {
        let grid = spec.grid;
        let n = grid.n;
        let m = mean_jac.nrows();
        let blocks = (0..grid.len())
            .map(|idx| {
                let lam = laplacian_symbol(&grid, backend, idx / n, idx % n);
                let mat = mean_jac + DMatrix::identity(m, m) * (0.25 * lam);
                mat.lu()
            })
            .collect::<Vec<_>>();
        if blocks.iter().any(|lu| !lu.is_invertible()) {
            return Err(PhlError::Numerical("singular preconditioner block".into()));
        }
        Ok(Self { spec: spec.clone(), blocks, m })
    }

    fn apply(&self, r: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let hats: Vec<Vec<Complex64>> = r.iter().map(|x| self.spec.forward(x)).collect();
        let len = hats[0].len();
        let m = self.m;
        let solved: Vec<Vec<Complex64>> = (0..len)
            .into_par_iter()
            .map(|k| {
                let re = DVector::from_iterator(m, (0..m).map(|i| hats[i][k].re));
                let im = DVector::from_iterator(m, (0..m).map(|i| hats[i][k].im));
                let a = self.blocks[k].solve(&re).expect("invertible");
                let b = self.blocks[k].solve(&im).expect("invertible");
                (0..m).map(|i| Complex64::new(a[i], b[i])).collect()
            })
            .collect();
        (0..m).map(|i| self.spec.inverse((0..len).map(|k| solved[k][i]).collect())).collect()
    }
}

fn flatten(v: &[Vec<f64>]) -> Vec<f64> {
    v.concat()
}

fn unflatten(v: &[f64], m: usize) -> Vec<Vec<f64>> {
    let len = v.len() / m;
    (0..m).map(|i| v[i * len..(i + 1) * len].to_vec()).collect()
}

fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Restarted GMRES with right preconditioning. Returns `(x, iterations)`.
fn gmres(
    apply_a: &dyn Fn(&[f64]) -> Vec<f64>,
    apply_p: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    restart: usize,
    max_iter: usize,
) -> (Vec<f64>, usize) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return (x, 0);
    }
    let mut total = 0;
    while total < max_iter {
        let ax = apply_a(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm2(&r);
        if beta <= rel_tol * bnorm {
            break;
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|y| y / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut h = DMatrix::<f64>::zeros(restart + 1, restart);
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            total += 1;
            let zk = apply_p(&v[k]);
            let mut w = apply_a(&zk);
            z.push(zk);
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                h[(i, k)] = hij;
                w.iter_mut().zip(vi).for_each(|(a, b)| *a -= hij * b);
            }
            let wn = norm2(&w);
            h[(k + 1, k)] = wn;
            for i in 0..k {
                let t = cs[i] * h[(i, k)] + sn[i] * h[(i + 1, k)];
                h[(i + 1, k)] = -sn[i] * h[(i, k)] + cs[i] * h[(i + 1, k)];
                h[(i, k)] = t;
            }
            let d = h[(k, k)].hypot(h[(k + 1, k)]);
            cs[k] = h[(k, k)] / d;
            sn[k] = h[(k + 1, k)] / d;
            h[(k, k)] = d;
            h[(k + 1, k)] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() <= rel_tol * bnorm || wn == 0.0 || total >= max_iter {
                break;
            }
            v.push(w.iter().map(|y| y / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[(i, j)] * y[j]).sum();
            y[i] = (g[i] - s) / h[(i, i)];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut().zip(&z[j]).for_each(|(a, b)| *a += yj * b);
        }
        if g[k_used].abs() <= rel_tol * bnorm {
            break;
        }
    }
    (x, total)
}

/// Initial guess: the constant solution for the mean `|gamma_i|`, or zero.
fn initial_guess(data: &HiggsData, len: usize) -> Vec<Vec<f64>> {
    let means: Vec<f64> =
        data.gammas.iter().map(|g| g.iter().map(|z| z.norm()).sum::<f64>() / g.len().max(1) as f64).collect();
    match solve_constant(data.m, &means) {
        Ok(hs) => MetricSolution::constant(&hs, len).u,
        Err(_) => vec![vec![0.0; len]; data.m],
    }
}

/// Damped inexact Newton on `u = log h`.
pub fn solve_pde(data: &HiggsData, grid: &TorusGrid, opts: &SolverOptions) -> Result<(MetricSolution, ConvergenceLog)> {
    let guess = initial_guess(data, grid.len());
    solve_pde_from(data, grid, opts, guess)
}

pub fn solve_pde_from(
    data: &HiggsData,
    grid: &TorusGrid,
    opts: &SolverOptions,
    guess: Vec<Vec<f64>>,
) -> Result<(MetricSolution, ConvergenceLog)> {
    check_shapes(&guess, data, grid)?;
    let m = data.m;
    let spec = Spectral::new(*grid);
    let g2 = mag2(data);
    let backend = opts.backend;
    let mut u = guess;
    let mut log = ConvergenceLog::default();
    let mut r = residual_raw(&spec, backend, &u, &g2);
    let mut rmax = residual_norm(&r);
    log.residual_history.push(rmax);
    for iter in 0..opts.max_iter {
        if rmax < opts.tol {
            log.converged = true;
            break;
        }
        log.iterations = iter + 1;
        let jac = pointwise(&u, &g2, m * m, reaction_jacobian);
        let mut mean = DMatrix::zeros(m, m);
        for (c, col) in jac.iter().enumerate() {
            mean[(c / m, c % m)] = crate::grid::tree_sum(col) / grid.len() as f64;
        }
        let pre = Preconditioner::new(&spec, backend, &mean)?;
        let apply_a = |x: &[f64]| -> Vec<f64> {
            let xs = unflatten(x, m);
            let mut out: Vec<Vec<f64>> =
                xs.iter().map(|xi| laplacian(&spec, backend, xi).iter().map(|l| 0.25 * l).collect()).collect();
            for (c, col) in jac.iter().enumerate() {
                let (i, j) = (c / m, c % m);
                out[i].iter_mut().zip(col.iter().zip(&xs[j])).for_each(|(o, (a, b))| *o += a * b);
            }
            flatten(&out)
        };
        let apply_p = |x: &[f64]| flatten(&pre.apply(&unflatten(x, m)));
        let rhs: Vec<f64> = flatten(&r).iter().map(|x| -x).collect();
        let forcing = (1e-2f64).min(rmax).max(1e-13);
        let (delta, its) = gmres(&apply_a, &apply_p, &rhs, forcing, 40, 400);
        log.linear_iterations.push(its);
        let delta = unflatten(&delta, m);
        let r2 = norm2(&flatten(&r));
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let trial: Vec<Vec<f64>> =
                u.iter().zip(&delta).map(|(ui, di)| ui.iter().zip(di).map(|(a, b)| a + lambda * b).collect()).collect();
            let rt = residual_raw(&spec, backend, &trial, &g2);
            if norm2(&flatten(&rt)) < (1.0 - 1e-4 * lambda) * r2 {
                u = trial;
                r = rt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        if u.iter().any(|ui| max_abs(ui) > BLOWUP) {
            return Err(PhlError::Numerical(format!("blow-up: |u| exceeded {BLOWUP}")));
        }
        rmax = residual_norm(&r);
        log.residual_history.push(rmax);
    }
    if rmax < opts.tol {
        log.converged = true;
    }
    let sol = MetricSolution { u };
    if !log.converged {
        return Err(PhlError::NonConvergence { iterations: log.iterations, residual: rmax });
    }
    Ok((sol, log))
}

/// Pointwise diagnostics of the estimates behind the stability argument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// `min Lap(u_i)/4` per component.
    pub min_dzdzbar_log_h: Vec<f64>,
    /// `max_x ||eta_{j+1}||^2` for `j = 1..m` (`eta_{m+1}` last).
    pub chain_max: Vec<f64>,
    pub chain_min: Vec<f64>,
    /// `||eta_{m+1}||^2 < ... < ||eta_2||^2 < 1` at every node.
    pub strict: bool,
    /// The chain holds with equality somewhere (within `1e-12`).
    pub boundary: bool,
}

/// `||eta_{j+1}||^2 = h_{j+1} |gamma_j|^2 / (h_j h_1)` and
/// `||eta_{m+1}||^2 = |gamma_m|^2 / (h_1 h_m^2)` at one node.
pub fn eta_norms(h: &[f64], g2: &[f64]) -> Vec<f64> {
    let m = h.len();
    let mut out = Vec::with_capacity(m);
    for j in 0..m - 1 {
        out.push(h[j + 1] * g2[j] / (h[j] * h[0]));
    }
    out.push(g2[m - 1] / (h[0] * h[m - 1] * h[m - 1]));
    out
}

pub fn monotonicity_report(
    sol: &MetricSolution,
    data: &HiggsData,
    grid: &TorusGrid,
    backend: Backend,
) -> Result<MonotonicityReport> {
    check_shapes(&sol.u, data, grid)?;
    let m = data.m;
    let spec = Spectral::new(*grid);
    let min_lap = sol
        .u
        .iter()
        .map(|ui| laplacian(&spec, backend, ui).iter().map(|l| 0.25 * l).fold(f64::INFINITY, f64::min))
        .collect();
    let g2 = mag2(data);
    let norms = pointwise(&sol.u, &g2, m, |u, g, out| {
        let h: Vec<f64> = u.iter().map(|x| x.exp()).collect();
        out.copy_from_slice(&eta_norms(&h, g));
    });
    let chain_max = norms.iter().map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    let chain_min = norms.iter().map(|c| c.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let mut strict = true;
    let mut boundary = false;
    for k in 0..grid.len() {
        let mut prev = 1.0;
        for c in &norms {
            let v = c[k];
            if v >= prev {
                strict = false;
            }
            if (v - prev).abs() <= 1e-12 {
                boundary = true;
            }
            prev = v;
        }
    }
    Ok(MonotonicityReport { min_dzdzbar_log_h: min_lap, chain_max, chain_min, strict, boundary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_roots() {
        assert!((solve_constant(1, &[1.0]).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!((solve_constant(1, &[8.0]).unwrap()[0] - 4.0).abs() < 1e-14);
        let h = solve_constant(2, &[1.0, 1.0]).unwrap();
        assert!((h[0] - 1.0).abs() < 1e-15 && (h[1] - 1.0).abs() < 1e-15);
        assert!(solve_constant(2, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn only_h1_term_survives() {
        let g = TorusGrid::square(8).unwrap();
        let data = HiggsData::constant(2, 2, 1, &[Complex64::new(0.0, 0.0); 2], g.len()).unwrap();
        let sol = MetricSolution::constant(&[1.0, 1.0], g.len());
        let r = hitchin_residual(&sol, &data, &g, Backend::Spectral).unwrap();
        assert!(r[0].iter().all(|x| (x + 1.0).abs() < 1e-14));
    }
}
