//! Metric and Higgs fields as local Taylor jets.
//!
//! A [`Background`] gives, around any point `(x, y)`, jets of `u_i = log h_i`
//! and of `gamma_i`. Exact presets solve the Hitchin system in closed form;
//! [`GridBackground`] interpolates a torus solution by its Fourier series.

use num_complex::Complex64;
use phl_core::higgs::HiggsData;
use rayon::prelude::*;

use crate::error::{PhlError, Result};
use crate::grid::{Spectral, TorusGrid};
use crate::jet::{CJet, Jet};
use crate::solver::{solve_constant, MetricSolution};

/// Jets of all fields at one point.
#[derive(Clone, Debug)]
pub struct FieldJets {
    pub u: Vec<Jet>,
    pub gamma: Vec<CJet>,
}

impl FieldJets {
    pub fn m(&self) -> usize {
        self.u.len()
    }

    pub fn h(&self, i: usize) -> f64 {
        self.u[i].value().exp()
    }
}

pub trait Background: Sync + Send {
    fn m(&self) -> usize;

    /// Jets of order `order` centred at `(x, y)`.
    fn jets(&self, x: f64, y: f64, order: usize) -> FieldJets;

    /// Whether `(x, y)` lies in the domain of definition.
    fn contains(&self, _x: f64, _y: f64) -> bool {
        true
    }

    fn h(&self, x: f64, y: f64) -> Vec<f64> {
        let j = self.jets(x, y, 0);
        (0..j.m()).map(|i| j.h(i)).collect()
    }

    fn gamma(&self, x: f64, y: f64) -> Vec<Complex64> {
        self.jets(x, y, 0).gamma.iter().map(|g| g.value()).collect()
    }
}

/// Closed-form local solutions.
#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    /// Constant `gamma_i` with the constant metric.
    Constant { hs: Vec<f64>, gammas: Vec<Complex64> },
    /// `gamma_i = 1` for `i < m` and `gamma_m = c e^{kz}`, with
    /// `u_i = 2i/(2m+1) log|gamma_m|`.
    Exp { m: usize, c: Complex64, k: Complex64 },
    /// Upper half plane, `m = 1`, `gamma = 0`, `h = 1/(2 y^2)`.
    FuchsianM1,
    /// Upper half plane, `m = 2`, `gamma = (1, 0)`, `h = (3/(2y^2), 3/(2y^4))`.
    FuchsianM2,
    /// Upper half plane, `m = 2`, `gamma = (0, c)`, `h = (1/(2y^2), 2|c| y)`.
    Polystable { c: Complex64 },
}

impl Preset {
    pub fn constant(gammas: &[Complex64]) -> Result<Self> {
        let mags: Vec<f64> = gammas.iter().map(|g| g.norm()).collect();
        let hs = solve_constant(gammas.len(), &mags)?;
        Ok(Preset::Constant { hs, gammas: gammas.to_vec() })
    }

    /// Unit data `gamma_i = 1`.
    pub fn unit(m: usize) -> Self {
        Self::constant(&vec![Complex64::new(1.0, 0.0); m]).expect("unit data has a root")
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Constant { .. } => "constant",
            Preset::Exp { .. } => "exp",
            Preset::FuchsianM1 => "fuchsian1",
            Preset::FuchsianM2 => "fuchsian2",
            Preset::Polystable { .. } => "polystable",
        }
    }

    /// A base point inside the domain.
    pub fn base_point(&self) -> (f64, f64) {
        match self {
            Preset::Constant { .. } | Preset::Exp { .. } => (0.0, 0.0),
            _ => (0.0, 1.0),
        }
    }
}

fn cz(v: Complex64, order: usize) -> CJet {
    CJet::constant(v, order)
}

impl Background for Preset {
    fn m(&self) -> usize {
        match self {
            Preset::Constant { hs, .. } => hs.len(),
            Preset::Exp { m, .. } => *m,
            Preset::FuchsianM1 => 1,
            Preset::FuchsianM2 | Preset::Polystable { .. } => 2,
        }
    }

    fn contains(&self, _x: f64, y: f64) -> bool {
        match self {
            Preset::Constant { .. } | Preset::Exp { .. } => true,
            _ => y > 0.0,
        }
    }

    fn jets(&self, x: f64, y: f64, order: usize) -> FieldJets {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let ly = || Jet::var_y(y, order).ln();
        match self {
            Preset::Constant { hs, gammas } => FieldJets {
                u: hs.iter().map(|h| Jet::constant(h.ln(), order)).collect(),
                gamma: gammas.iter().map(|g| cz(*g, order)).collect(),
            },
            Preset::Exp { m, c, k } => {
                let z = CJet::var_z(Complex64::new(x, y), order);
                let kz = z.mul_c(*k);
                let mut gamma = vec![cz(one, order); m - 1];
                gamma.push(kz.exp().mul_c(*c));
                let lq = kz.re.add_scalar(c.norm().ln());
                let u = (1..=*m).map(|i| lq.scale(2.0 * i as f64 / (2 * m + 1) as f64)).collect();
                FieldJets { u, gamma }
            }
            Preset::FuchsianM1 => {
                FieldJets { u: vec![ly().scale(-2.0).add_scalar(-(2.0f64).ln())], gamma: vec![cz(zero, order)] }
            }
            Preset::FuchsianM2 => {
                let l = ly();
                FieldJets {
                    u: vec![l.scale(-2.0).add_scalar(1.5f64.ln()), l.scale(-4.0).add_scalar(1.5f64.ln())],
                    gamma: vec![cz(one, order), cz(zero, order)],
                }
            }
            Preset::Polystable { c } => {
                let l = ly();
                FieldJets {
                    u: vec![l.scale(-2.0).add_scalar(-(2.0f64).ln()), l.add_scalar((2.0 * c.norm()).ln())],
                    gamma: vec![cz(zero, order), cz(*c, order)],
                }
            }
        }
    }
}

/// Spectral interpolation of a torus solution.
#[derive(Clone, Debug)]
pub struct GridBackground {
    grid: TorusGrid,
    /// `(k_x, k_y, coefficient)` per retained mode, for each `u_i`.
    u_modes: Vec<Vec<(f64, f64, Complex64)>>,
    gamma_modes: Vec<Vec<(f64, f64, Complex64)>>,
}

fn modes(spec: &Spectral, f: &[Complex64]) -> Vec<(f64, f64, Complex64)> {
    let grid = spec.grid;
    let n = grid.n;
    let scale = 1.0 / grid.len() as f64;
    let hat = spec.forward_c(f);
    hat.iter()
        .enumerate()
        .filter(|(idx, c)| idx / n != n / 2 && idx % n != n / 2 && c.norm() > 1e-15 * grid.len() as f64)
        .map(|(idx, c)| {
            let (kx, ky) = grid.mode(idx / n, idx % n);
            (kx, ky, c * scale)
        })
        .collect()
}

fn eval_modes(ms: &[(f64, f64, Complex64)], x: f64, y: f64, order: usize) -> CJet {
    let mut fact = vec![1.0; order + 1];
    for k in 1..=order {
        fact[k] = fact[k - 1] * k as f64;
    }
    let i = Complex64::new(0.0, 1.0);
    let coeffs: Vec<Complex64> = (0..=order)
        .flat_map(|t| (0..=t).map(move |b| (t - b, b)))
        .map(|(a, b)| {
            ms.iter()
                .map(|&(kx, ky, c)| {
                    c * Complex64::from_polar(1.0, kx * x + ky * y) * (i * kx).powu(a as u32) * (i * ky).powu(b as u32)
                })
                .sum::<Complex64>()
                / (fact[a] * fact[b])
        })
        .collect();
    let at = |a: usize, b: usize| coeffs[crate::jet::index(a, b)];
    CJet::new(Jet::from_fn(order, |a, b| at(a, b).re), Jet::from_fn(order, |a, b| at(a, b).im))
}

impl GridBackground {
    pub fn new(sol: &MetricSolution, data: &HiggsData, grid: &TorusGrid) -> Result<Self> {
        if sol.m() != data.m || data.len() != grid.len() || sol.u.iter().any(|u| u.len() != grid.len()) {
            return Err(PhlError::Validation("solution, Higgs data and grid have different shapes".into()));
        }
        let spec = Spectral::new(*grid);
        let u_modes = sol
            .u
            .par_iter()
            .map(|u| modes(&spec, &u.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>()))
            .collect();
        let gamma_modes = data.gammas.par_iter().map(|g| modes(&spec, g)).collect();
        Ok(Self { grid: *grid, u_modes, gamma_modes })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }
}

impl Background for GridBackground {
    fn m(&self) -> usize {
        self.u_modes.len()
    }

    fn jets(&self, x: f64, y: f64, order: usize) -> FieldJets {
        FieldJets {
            u: self.u_modes.iter().map(|ms| eval_modes(ms, x, y, order).re).collect(),
            gamma: self.gamma_modes.iter().map(|ms| eval_modes(ms, x, y, order)).collect(),
        }
    }
}

/// Pointwise Hitchin residuals from jets of order 2.
pub fn local_residual(bg: &dyn Background, x: f64, y: f64) -> Vec<f64> {
    let j = bg.jets(x, y, 2);
    let m = j.m();
    let lap = |u: &Jet| 2.0 * (u.coeff(2, 0) + u.coeff(0, 2));
    let g2: Vec<f64> = j.gamma.iter().map(|g| g.value().norm_sqr()).collect();
    let u: Vec<f64> = j.u.iter().map(|u| u.value()).collect();
    (0..m)
        .map(|k| {
            let prev = if k == 0 { 0.0 } else { u[k - 1] };
            let gprev = if k == 0 { 1.0 } else { g2[k - 1] };
            let up = if k + 1 < m { g2[k] * (u[k + 1] - u[k]).exp() } else { g2[k] * (-2.0 * u[k]).exp() };
            0.25 * lap(&j.u[k]) - gprev * (u[k] - prev).exp() + up
        })
        .collect()
}
