//! Cyclic `SL(2m+1, R)` Higgs data: stability windows, moduli dimensions,
//! diagonal gauge equivalence and the holomorphic `(2m+1)`-differential.
//!
//! Grid functions are plain slices of complex samples; the grid itself lives
//! in the solver. Degrees and genus only enter the integer layer.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Cyclic Higgs datum `(m, g, d, gamma_1..gamma_m)` with `mu = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct HiggsData {
    pub m: usize,
    pub genus: i64,
    /// Degree of `L_m^{-1}`.
    pub degree: i64,
    /// `gammas[i]` holds the samples of `gamma_{i+1}`.
    pub gammas: Vec<Vec<Complex64>>,
    pub mu_is_one: bool,
}

impl HiggsData {
    pub fn new(m: usize, genus: i64, degree: i64, gammas: Vec<Vec<Complex64>>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be positive"));
        }
        if gammas.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: gammas.len() });
        }
        let len = gammas[0].len();
        if let Some(g) = gammas.iter().find(|g| g.len() != len) {
            return Err(Error::DimensionMismatch { expected: len, found: g.len() });
        }
        Ok(Self { m, genus, degree, gammas, mu_is_one: true })
    }

    /// Constant data sampled `len` times.
    pub fn constant(m: usize, genus: i64, degree: i64, values: &[Complex64], len: usize) -> Result<Self> {
        Self::new(m, genus, degree, values.iter().map(|&v| alloc::vec![v; len]).collect())
    }

    pub fn len(&self) -> usize {
        self.gammas.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `gamma_i` vanishes at every sample (`i` is 1-based).
    pub fn gamma_is_zero(&self, i: usize) -> bool {
        self.gammas[i - 1].iter().all(|g| g.norm() == 0.0)
    }

    /// The non-vanishing requirement on `gamma_1..gamma_{m-1}`.
    pub fn validate_nonvanishing(&self) -> Result<()> {
        for i in 1..self.m {
            if self.gamma_is_zero(i) {
                return Err(Error::InvalidParameter("gamma_i (i < m) is identically zero"));
            }
        }
        Ok(())
    }

    /// Whether `gamma_1 = ... = gamma_{m-1} = 1` (Hitchin-component preset).
    pub fn is_hitchin_preset(&self, tol: f64) -> bool {
        (0..self.m - 1).all(|i| self.gammas[i].iter().all(|g| (g - Complex64::new(1.0, 0.0)).norm() <= tol))
    }
}

/// Outcome of the polystability lemma for cyclic data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    Stable,
    StrictlyPolystable,
    Unstable,
    Empty,
}

fn check_mg(m: usize, g: i64) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidParameter("m must be at least 2"));
    }
    if g < 2 {
        return Err(Error::InvalidParameter("genus must be at least 2"));
    }
    Ok(())
}

/// Top degree `m (2g - 2)`.
pub fn top_degree(m: usize, g: i64) -> i64 {
    m as i64 * (2 * g - 2)
}

/// Classify `(L, gamma_{m-1}, gamma_m)` with `d = deg L^{-1}`.
///
/// * `d > m(2g-2)`: empty (`gamma_{m-1}` cannot be nonzero).
/// * `gamma_m == 0`: stable iff `0 < d`; otherwise not polystable.
/// * `gamma_m != 0`: stable iff `1 - g <= d`; below that `gamma_m` cannot exist.
pub fn stability_classify(m: usize, g: i64, d: i64, gamma_m_is_zero: bool) -> Result<Stability> {
    check_mg(m, g)?;
    if d > top_degree(m, g) {
        return Ok(Stability::Empty);
    }
    Ok(if gamma_m_is_zero {
        if d > 0 {
            Stability::Stable
        } else {
            Stability::Unstable
        }
    } else if d >= 1 - g {
        Stability::Stable
    } else {
        Stability::Empty
    })
}

/// Classification including the totally geodesic family with
/// `gamma_{m-1} == 0`, `gamma_m != 0` and `1 - g <= d <= 0`, which splits as a
/// direct sum and is strictly polystable.
pub fn stability_classify_full(
    m: usize,
    g: i64,
    d: i64,
    gamma_m_is_zero: bool,
    gamma_m1_is_zero: bool,
) -> Result<Stability> {
    if gamma_m1_is_zero {
        check_mg(m, g)?;
        return Ok(if !gamma_m_is_zero && (1 - g..=0).contains(&d) {
            Stability::StrictlyPolystable
        } else if d > top_degree(m, g) || (!gamma_m_is_zero && d < 1 - g) {
            Stability::Empty
        } else {
            Stability::Unstable
        });
    }
    stability_classify(m, g, d, gamma_m_is_zero)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModuliStatus {
    Empty,
    Stratum,
}

/// Dimensions of the stratum `ML_d(X)_m` (complex dimensions).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuliReport {
    pub status: ModuliStatus,
    /// Rank of the fibre (vector bundle rank, or punctured-fibre dimension for `d <= 0`).
    pub bundle_rank: i64,
    /// Order of the symmetric product in the base.
    pub base_dim: i64,
    pub total_dim: i64,
    pub cover_note: String,
}

/// Moduli dimension arithmetic for `m >= 2`, `g >= 2`.
///
/// * `0 < d <= m(2g-2)`: rank `2d + g - 1` over `S^{m(2g-2)-d}(X)`.
/// * `1 - g <= d <= 0`: fibre `(C^{(2m-1)(g-1)-d} \ 0)/±1` over an
///   `H^1(X, Z_2)`-cover of `S^{2d+2g-2}(X)`.
/// * otherwise empty.
pub fn moduli_dimensions(m: usize, g: i64, d: i64) -> Result<ModuliReport> {
    check_mg(m, g)?;
    let top = top_degree(m, g);
    if d > 0 && d <= top {
        let rank = 2 * d + g - 1;
        let base = top - d;
        let note = if base == 0 {
            String::from("top stratum: the space of holomorphic (2m+1)-differentials")
        } else {
            format!("vector bundle over the symmetric product of order {base}")
        };
        return Ok(ModuliReport {
            status: ModuliStatus::Stratum,
            bundle_rank: rank,
            base_dim: base,
            total_dim: rank + base,
            cover_note: note,
        });
    }
    if d >= 1 - g && d <= 0 {
        let fibre = (2 * m as i64 - 1) * (g - 1) - d;
        let base = 2 * d + 2 * g - 2;
        let sheets = 1u128 << (2 * g) as u32;
        return Ok(ModuliReport {
            status: ModuliStatus::Stratum,
            bundle_rank: fibre,
            base_dim: base,
            total_dim: fibre + base,
            cover_note: format!(
                "fibre (C^{fibre} minus 0)/(+-Id) over a {sheets}-sheeted H^1(X,Z2)-cover of S^{base}(X)"
            ),
        });
    }
    Ok(ModuliReport {
        status: ModuliStatus::Empty,
        bundle_rank: 0,
        base_dim: 0,
        total_dim: 0,
        cover_note: String::from("empty"),
    })
}

/// `dim H^0(K^{2m+1}) = (4m + 1)(g - 1)`.
pub fn top_stratum_dim(m: usize, g: i64) -> i64 {
    (4 * m as i64 + 1) * (g - 1)
}

/// The pointwise differential `q_{2m+1} = (gamma_1 ... gamma_{m-1})^2 gamma_m`.
pub fn q_differential(data: &HiggsData) -> Vec<Complex64> {
    (0..data.len())
        .map(|k| {
            let p: Complex64 = (0..data.m - 1).map(|i| data.gammas[i][k]).product();
            p * p * data.gammas[data.m - 1][k]
        })
        .collect()
}

/// The scalar version of [`q_differential`].
pub fn q_of(gammas: &[Complex64]) -> Complex64 {
    let m = gammas.len();
    let p: Complex64 = gammas[..m - 1].iter().product();
    p * p * gammas[m - 1]
}

/// Find `lambda_2..lambda_m` (with `lambda_1 = 1`) such that
/// `b.gamma_i = lambda_i^{-1} lambda_{i+1} a.gamma_i` and
/// `b.gamma_m = lambda_m^{-2} a.gamma_m` at every sample.
///
/// Returns `[lambda_1, ..., lambda_m]`, or `None` if no constant witness exists.
pub fn gauge_equivalent(a: &HiggsData, b: &HiggsData, tol: f64) -> Option<Vec<Complex64>> {
    if a.m != b.m || a.len() != b.len() {
        return None;
    }
    let m = a.m;
    let mut lambdas = alloc::vec![Complex64::new(1.0, 0.0)];
    for i in 0..m - 1 {
        let ratio = constant_ratio(&a.gammas[i], &b.gammas[i], tol)?;
        let next = lambdas[i] * ratio;
        lambdas.push(next);
    }
    let lm = lambdas[m - 1];
    let scale = (lm * lm).inv();
    let ok =
        a.gammas[m - 1].iter().zip(&b.gammas[m - 1]).all(|(x, y)| (x * scale - y).norm() <= tol * (1.0 + y.norm()));
    ok.then_some(lambdas)
}

fn constant_ratio(a: &[Complex64], b: &[Complex64], tol: f64) -> Option<Complex64> {
    let k = a.iter().position(|x| x.norm() > tol)?;
    let r = b[k] / a[k];
    if r.norm() <= tol {
        return None;
    }
    a.iter().zip(b).all(|(x, y)| (x * r - y).norm() <= tol * (1.0 + y.norm())).then_some(r)
}

/// Apply a diagonal gauge witness to data.
pub fn apply_gauge(a: &HiggsData, lambdas: &[Complex64]) -> HiggsData {
    let m = a.m;
    let mut out = a.clone();
    for i in 0..m - 1 {
        let f = lambdas[i].inv() * lambdas[i + 1];
        out.gammas[i].iter_mut().for_each(|g| *g *= f);
    }
    let f = (lambdas[m - 1] * lambdas[m - 1]).inv();
    out.gammas[m - 1].iter_mut().for_each(|g| *g *= f);
    out
}
