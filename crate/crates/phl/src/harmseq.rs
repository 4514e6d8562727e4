//! The harmonic sequence `phi_{z,1} = sigma_z`, `phi_{z,k+1} = nabla_z phi_{z,k}`
//! and the pairings `eta_{a,b} = q^C(phi_{z,a}, phi_{zbar,b})`.
//!
//! Terms are carried as Taylor jets of frame coordinates `(alpha; beta)`.
//! The flat derivative in frame coordinates is `d + D` with `D` the
//! [`derivative_operator`](crate::immersion::derivative_operator); the
//! Levi-Civita derivative of the quadric drops the normal coordinates
//! `real(e0)` and `tau(e0)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use phl_core::paracomplex::{BcVector, BiComplex, PCMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connection::{JetConnection, JetMatrix};
use crate::error::{PhlError, Result};
use crate::immersion::{ambient, blocks};
use crate::jet::CJet;

/// Default threshold for isotropy, relative to the pairing scale.
pub const ISOTROPY_TOL: f64 = 1e-6;

type CoordJet = Vec<CJet>;

/// Harmonic sequence at one point.
#[derive(Clone, Debug)]
pub struct HarmonicSequence {
    pub point: (f64, f64),
    pub m: usize,
    /// Frame at `point`, used to map coordinates to the ambient space.
    pub frame: PCMatrix,
    /// `phi_{z,1}, ..., phi_{z,K}` as jets of frame coordinates.
    pub terms: Vec<CoordJet>,
    ox: JetMatrix,
    oy: JetMatrix,
    gammas: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dir {
    Z,
    Zbar,
}

/// Entry `(r, c)` of `[[K, S], [S, K]]` as a jet.
fn d_entry(om: &JetMatrix, n: usize, r: usize, c: usize) -> crate::jet::Jet {
    let (i, j) = (r % n, c % n);
    let (a, b) = (om.get(i, j), om.get(j, i));
    if (r < n) == (c < n) {
        (a - b).scale(0.5)
    } else {
        (a + b).scale(0.5)
    }
}

fn apply(om: &JetMatrix, c: &CoordJet) -> CoordJet {
    let n = om.n;
    let order = c[0].order().min(om.get(0, 0).order());
    (0..2 * n)
        .map(|r| {
            let mut acc = CJet::zero(order);
            for (k, ck) in c.iter().enumerate() {
                let e = d_entry(om, n, r, k);
                if e.value() == 0.0 && (0..=e.order()).all(|t| (0..=t).all(|b| e.coeff(t - b, b) == 0.0)) {
                    continue;
                }
                acc = &acc + &ck.mul_r(&e);
            }
            acc
        })
        .collect()
}

/// Tangent projection: zero the normal coordinates.
fn tangent(mut c: CoordJet, n: usize) -> CoordJet {
    let order = c[0].order();
    c[0] = CJet::zero(order);
    c[n] = CJet::zero(order);
    c
}

fn covariant(ox: &JetMatrix, oy: &JetMatrix, c: &CoordJet, dir: Dir, project: bool) -> CoordJet {
    let n = ox.n;
    let dx = apply(ox, c);
    let dy = apply(oy, c);
    let s = match dir {
        Dir::Z => Complex64::new(0.0, -1.0),
        Dir::Zbar => Complex64::new(0.0, 1.0),
    };
    let out: CoordJet = c
        .iter()
        .zip(dx.iter().zip(&dy))
        .map(|(ck, (a, b))| {
            let d = if dir == Dir::Z { ck.dz() } else { ck.dzbar() };
            let order = d.order();
            let conn = (a + &b.mul_c(s)).scale(0.5);
            let conn = CJet::new(conn.re.truncate(order), conn.im.truncate(order));
            &d + &conn
        })
        .collect();
    if project {
        tangent(out, n)
    } else {
        out
    }
}

/// `q` in frame coordinates, complex-bilinear: idempotent parts
/// `(a + b).(a' - b')` and `(a - b).(a' + b')`.
fn pair_jets(u: &CoordJet, w: &CoordJet) -> (CJet, CJet) {
    let n = u.len() / 2;
    let order = u[0].order().min(w[0].order());
    let mut plus = CJet::zero(order);
    let mut minus = CJet::zero(order);
    for i in 0..n {
        let (a, b) = (&u[i], &u[i + n]);
        let (a2, b2) = (&w[i], &w[i + n]);
        plus = &plus + &(&(a + b) * &(a2 - b2));
        minus = &minus + &(&(a - b) * &(a2 + b2));
    }
    (plus, minus)
}

fn value(c: &CoordJet) -> DVector<Complex64> {
    DVector::from_iterator(c.len(), c.iter().map(|x| x.value()))
}

fn para_swap(v: &DVector<Complex64>) -> DVector<Complex64> {
    let n = v.len() / 2;
    DVector::from_fn(2 * n, |k, _| v[(k + n) % (2 * n)])
}

/// Norm of the part of `v` orthogonal to the span of `basis`.
fn residual(v: &DVector<Complex64>, basis: &[DVector<Complex64>]) -> f64 {
    let cols: Vec<_> = basis.iter().filter(|b| b.norm() > 1e-14).cloned().collect();
    if cols.is_empty() {
        return v.norm();
    }
    let a = DMatrix::from_columns(&cols);
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let rank = svd.singular_values.iter().filter(|s| **s > 1e-10 * svd.singular_values.max()).count();
    let u = u.columns(0, rank);
    let proj = u * (u.adjoint() * v);
    (v - proj).norm()
}

/// Build `phi_{z,1}, ..., phi_{z,depth}` at `p`.
pub fn build_sequence(
    conn: &dyn JetConnection,
    frame: &PCMatrix,
    p: (f64, f64),
    depth: usize,
) -> Result<HarmonicSequence> {
    let n = conn.dim();
    let m = (n - 1) / 2;
    if depth == 0 || depth > 2 * m + 2 {
        return Err(PhlError::Validation(format!("depth {depth} outside 1..={}", 2 * m + 2)));
    }
    let order = depth + 1;
    let (ox, oy) = conn.omega_jets(p.0, p.1, order);
    let mut sigma: CoordJet = vec![CJet::zero(order); 2 * n];
    sigma[n] = CJet::constant(Complex64::new(1.0, 0.0), order);
    let mut terms = vec![covariant(&ox, &oy, &sigma, Dir::Z, true)];
    while terms.len() < depth {
        let next = covariant(&ox, &oy, terms.last().expect("nonempty"), Dir::Z, true);
        terms.push(next);
    }
    Ok(HarmonicSequence { point: p, m, frame: frame.clone(), terms, ox, oy, gammas: conn.gammas(p.0, p.1) })
}

fn bicomplex(j: &(CJet, CJet)) -> BiComplex {
    BiComplex::new(j.0.value(), j.1.value())
}

fn bc_norm(z: BiComplex) -> f64 {
    z.plus.norm().max(z.minus.norm())
}

impl HarmonicSequence {
    pub fn depth(&self) -> usize {
        self.terms.len()
    }

    fn n(&self) -> usize {
        2 * self.m + 1
    }

    /// Ambient value of `phi_{z,k}` (1-based).
    pub fn term(&self, k: usize) -> BcVector {
        let v = value(&self.terms[k - 1]);
        let re = DVector::from_iterator(v.len(), v.iter().map(|c| c.re));
        let im = DVector::from_iterator(v.len(), v.iter().map(|c| c.im));
        BcVector::from_parts(&ambient(&self.frame, &re), &ambient(&self.frame, &im))
    }

    /// `eta_{a,b}` (1-based).
    pub fn eta(&self, a: usize, b: usize) -> BiComplex {
        bicomplex(&pair_jets(&self.terms[a - 1], &self.terms[b - 1]))
    }

    /// `q^C(phi_{z,1}, phi_{z,1})`, the induced metric `h_1`.
    pub fn metric(&self) -> BiComplex {
        let c: CoordJet = self.terms[0].iter().map(|x| x.conj()).collect();
        bicomplex(&pair_jets(&self.terms[0], &c))
    }

    /// Table `eta_{a,b}` for `a, b <= depth`, row-major.
    pub fn eta_table(&self) -> Vec<Vec<BiComplex>> {
        let k = self.depth();
        (1..=k).map(|a| (1..=k).map(|b| self.eta(a, b)).collect()).collect()
    }

    /// Largest `g` with `|eta_{a,b}| < tol * scale` for all `a + b <= g`,
    /// where `scale = max(1, max |eta|)`.
    pub fn isotropic_order(&self, tol: f64) -> usize {
        let table = self.eta_table();
        let k = self.depth();
        let scale = table.iter().flatten().map(|z| bc_norm(*z)).fold(1.0, f64::max);
        let mut order = 1;
        for g in 2..=k + 1 {
            let ok = (1..g).all(|a| bc_norm(table[a - 1][g - a - 1]) < tol * scale);
            if !ok {
                break;
            }
            order = g;
        }
        order
    }

    /// `nabla_zbar phi_{z,a}` as a coordinate vector.
    fn dzbar_term(&self, a: usize) -> DVector<Complex64> {
        value(&covariant(&self.ox, &self.oy, &self.terms[a - 1], Dir::Zbar, true))
    }

    /// `phi_{z,j}` and `P phi_{z,j}` for `j < k`.
    fn flag(&self, k: usize) -> Vec<DVector<Complex64>> {
        (1..k)
            .flat_map(|j| {
                let v = value(&self.terms[j - 1]);
                [para_swap(&v), v]
            })
            .collect()
    }

    /// `|nabla_zbar phi_{z,1}|`.
    pub fn harmonicity(&self) -> f64 {
        self.dzbar_term(1).norm()
    }

    /// Part of `nabla_zbar phi_{z,a}` outside `span{phi_{z,j}, P phi_{z,j} : j < a}`.
    pub fn span_defect(&self, a: usize) -> f64 {
        residual(&self.dzbar_term(a), &self.flag(a))
    }

    /// Relative part of `phi_{z,k}` outside `L_k + span{phi_{z,j}, P phi_{z,j} : j < k}`.
    pub fn direction_defect(&self, k: usize) -> f64 {
        let n = self.n();
        let v = value(&self.terms[k - 1]);
        let block = &blocks(self.m)[k];
        let mut basis: Vec<DVector<Complex64>> = block
            .coords(n)
            .into_iter()
            .map(|c| {
                let mut e = DVector::zeros(2 * n);
                e[c] = Complex64::new(1.0, 0.0);
                e
            })
            .collect();
        basis.extend(self.flag(k));
        residual(&v, &basis) / v.norm().max(1e-300)
    }

    /// Part of `phi_{z,k}` outside `span{phi_{z,j}, P phi_{z,j} : j < k}`.
    pub fn flag_defect(&self, k: usize) -> f64 {
        residual(&value(&self.terms[k - 1]), &self.flag(k))
    }

    /// `max |eta_{a,b} - (-1)^{b-1} eta_{2m,1}|` over `a + b = 2m + 1`.
    pub fn alternation_defect(&self) -> f64 {
        let top = 2 * self.m;
        let base = self.eta(top, 1);
        (1..=top)
            .map(|b| {
                let a = top + 1 - b;
                let s = if b % 2 == 1 { 1.0 } else { -1.0 };
                let e = self.eta(a, b);
                let d = BiComplex::new(e.plus - base.plus * s, e.minus - base.minus * s);
                bc_norm(d)
            })
            .fold(0.0, f64::max)
    }

    /// `-(gamma_1 ... gamma_{m-1})^2 gamma_m` at the point.
    pub fn expected_mid(&self) -> Complex64 {
        let m = self.m;
        let p: Complex64 = self.gammas[..m - 1].iter().product();
        -(p * p * self.gammas[m - 1])
    }
}

/// Split a `tau`-valued pairing `c tau` into `(c, real part)`.
fn tau_coefficient(z: BiComplex) -> (Complex64, f64) {
    ((z.plus - z.minus) * 0.5, ((z.plus + z.minus) * 0.5).norm())
}

/// The extracted differential at one point.
///
/// The top pairings are `tau`-valued; `eta_top` and `eta_mid` are their
/// `tau`-coefficients and `real_part` bounds the remaining real component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Differential {
    pub point: (f64, f64),
    /// `eta_{2m,1}`.
    pub eta_top: Complex64,
    /// `|d/dzbar eta_{2m,1}|`.
    pub holomorphy: f64,
    /// `eta_{m+1,m}`.
    pub eta_mid: Complex64,
    pub real_part: f64,
    /// `-(gamma_1 ... gamma_{m-1})^2 gamma_m`.
    pub expected: Complex64,
}

impl Differential {
    /// `|eta_{m+1,m} - expected|`.
    pub fn mid_defect(&self) -> f64 {
        (self.eta_mid - self.expected).norm()
    }
}

/// `eta_{2m,1}`, its holomorphy residual and the middle pairing.
pub fn extract_differential(seq: &HarmonicSequence, tol: f64) -> Result<Differential> {
    let m = seq.m;
    if seq.depth() < 2 * m + 1 {
        return Err(PhlError::Validation(format!("depth {} below 2m+1", seq.depth())));
    }
    let order = seq.isotropic_order(tol);
    if order != 2 * m {
        return Err(PhlError::Validation(format!("isotropic order {order}, expected {}", 2 * m)));
    }
    let top = pair_jets(&seq.terms[2 * m - 1], &seq.terms[0]);
    let holomorphy = top.0.dzbar().value().norm().max(top.1.dzbar().value().norm());
    let (eta_top, r1) = tau_coefficient(bicomplex(&top));
    let (eta_mid, r2) = tau_coefficient(seq.eta(m + 1, m));
    Ok(Differential {
        point: seq.point,
        eta_top,
        holomorphy,
        eta_mid,
        real_part: r1.max(r2),
        expected: seq.expected_mid(),
    })
}

/// Worst-case sequence checks over many points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub points: usize,
    pub depth: usize,
    /// Smallest isotropic order seen.
    pub isotropic_order: usize,
    /// `max |eta_{a,b}|` over `a + b <= 2m`.
    pub isotropy: f64,
    pub alternation: f64,
    pub harmonicity: f64,
    /// Span condition for `a <= 2m`.
    pub span: f64,
    /// Direction check of `phi_{z,k}` for `k <= 2m`.
    pub direction: f64,
    pub holomorphy: f64,
    pub mid_defect: f64,
    /// Real component of the top pairings.
    pub real_part: f64,
    pub differentials: Vec<Differential>,
}

/// Run all sequence checks at the given points and frames.
pub fn sequence_report(
    conn: &dyn JetConnection,
    samples: &[((f64, f64), PCMatrix)],
    depth: usize,
    tol: f64,
) -> Result<SequenceReport> {
    let seqs: Vec<HarmonicSequence> =
        samples.par_iter().map(|(p, f)| build_sequence(conn, f, *p, depth)).collect::<Result<_>>()?;
    let m = (conn.dim() - 1) / 2;
    let mut rep = SequenceReport {
        points: seqs.len(),
        depth,
        isotropic_order: usize::MAX,
        isotropy: 0.0,
        alternation: 0.0,
        harmonicity: 0.0,
        span: 0.0,
        direction: 0.0,
        holomorphy: 0.0,
        mid_defect: 0.0,
        real_part: 0.0,
        differentials: Vec::new(),
    };
    for s in &seqs {
        rep.isotropic_order = rep.isotropic_order.min(s.isotropic_order(tol));
        for a in 1..depth.min(2 * m) {
            for b in 1..=(2 * m - a) {
                rep.isotropy = rep.isotropy.max(bc_norm(s.eta(a, b)));
            }
        }
        rep.harmonicity = rep.harmonicity.max(s.harmonicity());
        for a in 1..=depth.min(2 * m) {
            rep.span = rep.span.max(s.span_defect(a));
            rep.direction = rep.direction.max(s.direction_defect(a));
        }
        if depth >= 2 * m {
            rep.alternation = rep.alternation.max(s.alternation_defect());
        }
        if let Ok(d) = extract_differential(s, tol) {
            rep.holomorphy = rep.holomorphy.max(d.holomorphy);
            rep.mid_defect = rep.mid_defect.max(d.mid_defect());
            rep.real_part = rep.real_part.max(d.real_part);
            rep.differentials.push(d);
        }
    }
    if rep.differentials.len() < seqs.len() {
        rep.holomorphy = f64::INFINITY;
        rep.mid_defect = f64::INFINITY;
    }
    if seqs.is_empty() {
        rep.isotropic_order = 0;
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::Preset;
    use crate::connection::FlatConnection;
    use phl_core::paracomplex::q_bilinear;

    #[test]
    fn coordinate_pairing_matches_ambient() {
        let conn = FlatConnection::new(Preset::unit(2));
        let f = PCMatrix::identity(5);
        let s = build_sequence(&conn, &f, (0.0, 0.0), 4).unwrap();
        for a in 1..=4 {
            for b in 1..=4 {
                let amb = q_bilinear(&s.term(a), &s.term(b)).unwrap();
                let e = s.eta(a, b);
                assert!((amb.plus - e.plus).norm() < 1e-12 && (amb.minus - e.minus).norm() < 1e-12);
            }
        }
    }
}
