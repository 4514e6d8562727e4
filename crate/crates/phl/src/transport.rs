//! Parallel transport `dF = F Omega` of frames in `SU(2m+1, R_tau)`.
//!
//! The `e+` part evolves by `Omega`, the `e-` part by `-Q Omega^t Q`. After each
//! step the `e-` part is re-imposed from the `e+` part and the `e+` part is
//! rescaled to unit determinant.

use nalgebra::DMatrix;
use phl_core::paracomplex::{anti_diag_q, PCMatrix, PcVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connection::Connection;
use crate::error::{PhlError, Result};

/// Largest tolerated SU defect before retraction.
pub const MAX_STEP_DRIFT: f64 = 1e-4;

/// The generator `-Q A^t Q` acting on the `e-` part.
pub fn minus_generator(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(n, n, |i, j| -a[(n - 1 - j, n - 1 - i)])
}

/// `Omega` along the direction `d`.
pub fn directional(conn: &dyn Connection, p: (f64, f64), d: (f64, f64)) -> DMatrix<f64> {
    let (ox, oy) = conn.omega(p.0, p.1);
    ox * d.0 + oy * d.1
}

/// One classical RK4 step of `dF+ = F+ A(t)` along the segment `p + t d`, `t in [0, h]`.
pub fn rk4_plus(conn: &dyn Connection, f: &DMatrix<f64>, p: (f64, f64), d: (f64, f64), h: f64) -> DMatrix<f64> {
    let a = |t: f64| directional(conn, (p.0 + t * d.0, p.1 + t * d.1), d);
    let a0 = a(0.0);
    let am = a(0.5 * h);
    let a1 = a(h);
    let k1 = f * &a0;
    let k2 = (f + &k1 * (0.5 * h)) * &am;
    let k3 = (f + &k2 * (0.5 * h)) * &am;
    let k4 = (f + &k3 * h) * &a1;
    f + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// One RK4 step of both idempotent parts, without retraction.
pub fn rk4_step(conn: &dyn Connection, f: &PCMatrix, p: (f64, f64), d: (f64, f64), h: f64) -> PCMatrix {
    let a = |t: f64| directional(conn, (p.0 + t * d.0, p.1 + t * d.1), d);
    let gens = [a(0.0), a(0.5 * h), a(h)];
    let step = |f: &DMatrix<f64>, g: &[DMatrix<f64>; 3]| {
        let k1 = f * &g[0];
        let k2 = (f + &k1 * (0.5 * h)) * &g[1];
        let k3 = (f + &k2 * (0.5 * h)) * &g[1];
        let k4 = (f + &k3 * h) * &g[2];
        f + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    };
    let mg = [minus_generator(&gens[0]), minus_generator(&gens[1]), minus_generator(&gens[2])];
    PCMatrix::new(step(&f.plus, &gens), step(&f.minus, &mg))
}

/// Drift of a frame: `max(|F- - Q F+^{-t} Q|, |det F+ - 1|)`.
pub fn drift(f: &PCMatrix) -> f64 {
    f.su_defect()
}

/// Rescale `F+` to unit determinant and rebuild `F-` from it.
pub fn retract(f: &PCMatrix) -> Result<PCMatrix> {
    let n = f.size() as f64;
    let det = f.plus.determinant();
    if !(det > 0.0 && det.is_finite()) {
        return Err(PhlError::Numerical(format!("frame left SL: det = {det}")));
    }
    let plus = &f.plus * det.powf(-1.0 / n);
    Ok(PCMatrix::unitary_from_plus(plus)?)
}

/// Frames sampled along a path.
#[derive(Clone, Debug)]
pub struct FrameField {
    pub points: Vec<(f64, f64)>,
    pub frames: Vec<PCMatrix>,
    /// Drift before retraction at each step (zero at the start).
    pub drift: Vec<f64>,
}

impl FrameField {
    pub fn last(&self) -> &PCMatrix {
        self.frames.last().expect("non-empty frame field")
    }

    pub fn sigma(&self) -> Vec<PcVector> {
        self.frames.iter().map(sigma).collect()
    }

    pub fn max_drift(&self) -> f64 {
        self.drift.iter().copied().fold(0.0, f64::max)
    }

    /// Arc length of each sample from the start.
    pub fn arclength(&self) -> Vec<f64> {
        let mut s = 0.0;
        let mut out = vec![0.0];
        for w in self.points.windows(2) {
            s += (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
            out.push(s);
        }
        out
    }
}

/// `sigma = F (e0, -Q e0)`, the image of the timelike base vector.
pub fn sigma(f: &PCMatrix) -> PcVector {
    let n = f.size();
    PcVector::new(f.plus.column(0).into_owned(), -f.minus.column(n - 1).into_owned())
}

/// The image `F (a, Q a)` of a real frame vector.
pub fn frame_vector(f: &PCMatrix, a: &nalgebra::DVector<f64>) -> PcVector {
    let q = anti_diag_q(a.len());
    PcVector::new(&f.plus * a, &f.minus * (q * a))
}

/// `F (a, -Q a)`: the `tau`-image of a real frame vector.
pub fn frame_tau_vector(f: &PCMatrix, a: &nalgebra::DVector<f64>) -> PcVector {
    frame_vector(f, a).tau()
}

/// Transport along a polyline with steps of at most `step`.
pub fn transport_path(conn: &dyn Connection, f0: &PCMatrix, path: &[(f64, f64)], step: f64) -> Result<FrameField> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(PhlError::Validation(format!("transport step must be positive, got {step}")));
    }
    if path.is_empty() {
        return Err(PhlError::Validation("empty path".into()));
    }
    let mut points = vec![path[0]];
    let mut frames = vec![f0.clone()];
    let mut drifts = vec![0.0];
    let mut f = f0.clone();
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = (b.0 - a.0).hypot(b.1 - a.1);
        if len == 0.0 {
            continue;
        }
        let d = ((b.0 - a.0) / len, (b.1 - a.1) / len);
        let k = (len / step).ceil().max(1.0) as usize;
        let h = len / k as f64;
        for s in 0..k {
            let p = (a.0 + s as f64 * h * d.0, a.1 + s as f64 * h * d.1);
            let next = rk4_step(conn, &f, p, d, h);
            let dr = drift(&next);
            if dr > MAX_STEP_DRIFT {
                return Err(PhlError::Numerical(format!(
                    "transport step too large: drift {dr:.3e} > {MAX_STEP_DRIFT:.0e}"
                )));
            }
            f = retract(&next)?;
            points.push((a.0 + (s + 1) as f64 * h * d.0, a.1 + (s + 1) as f64 * h * d.1));
            frames.push(f.clone());
            drifts.push(dr);
        }
    }
    Ok(FrameField { points, frames, drift: drifts })
}

/// Frame at `target` obtained along the straight segment from `base`.
pub fn frame_at(
    conn: &dyn Connection,
    base: (f64, f64),
    f0: &PCMatrix,
    target: (f64, f64),
    step: f64,
) -> Result<PCMatrix> {
    Ok(transport_path(conn, f0, &[base, target], step)?.last().clone())
}

/// Frames on the nodes `origin + i e1 + j e2`, transported along `i` first, then `j`.
#[allow(clippy::too_many_arguments)]
pub fn transport_patch(
    conn: &dyn Connection,
    f0: &PCMatrix,
    origin: (f64, f64),
    e1: (f64, f64),
    e2: (f64, f64),
    ni: usize,
    nj: usize,
    step: f64,
) -> Result<Vec<PCMatrix>> {
    let row: Vec<(f64, f64)> = (0..ni).map(|i| (origin.0 + i as f64 * e1.0, origin.1 + i as f64 * e1.1)).collect();
    let spine = transport_nodes(conn, f0, &row, step)?;
    let cols: Vec<Vec<PCMatrix>> = spine
        .par_iter()
        .zip(row.par_iter())
        .map(|(f, p)| {
            let col: Vec<(f64, f64)> = (0..nj).map(|j| (p.0 + j as f64 * e2.0, p.1 + j as f64 * e2.1)).collect();
            transport_nodes(conn, f, &col, step)
        })
        .collect::<Result<_>>()?;
    Ok((0..ni * nj).map(|k| cols[k / nj][k % nj].clone()).collect())
}

/// Frames at each node of a polyline.
pub fn transport_nodes(conn: &dyn Connection, f0: &PCMatrix, nodes: &[(f64, f64)], step: f64) -> Result<Vec<PCMatrix>> {
    let mut out = vec![f0.clone()];
    let mut f = f0.clone();
    for w in nodes.windows(2) {
        f = transport_path(conn, &f, w, step)?.last().clone();
        out.push(f.clone());
    }
    Ok(out)
}

/// Holonomy `F_loop` of a closed polyline starting at the identity.
pub fn holonomy(conn: &dyn Connection, path: &[(f64, f64)], step: f64) -> Result<PCMatrix> {
    let n = conn.dim();
    Ok(transport_path(conn, &PCMatrix::identity(n), path, step)?.last().clone())
}

/// `|F_loop+ - I|` in the max norm.
pub fn holonomy_defect(f: &PCMatrix) -> f64 {
    let n = f.size();
    (&f.plus - DMatrix::identity(n, n)).amax()
}

/// The square loop of side `side` anticlockwise from `p`.
pub fn square_loop(p: (f64, f64), side: f64) -> Vec<(f64, f64)> {
    vec![p, (p.0 + side, p.1), (p.0 + side, p.1 + side), (p.0, p.1 + side), p]
}

/// Summary of a flatness refinement study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub spacings: Vec<f64>,
    pub defects: Vec<f64>,
    pub order: f64,
}

/// Holonomy defect of the loop `square_loop(p, side)` for a connection
/// sampled on grids of spacing `side / cells` and `side / (2 cells)`, with
/// transport along grid lines at the grid spacing.
pub fn plaquette_order(conn: &dyn Connection, p: (f64, f64), side: f64, cells: usize) -> Result<FlatnessReport> {
    let mut spacings = Vec::new();
    let mut defects = Vec::new();
    for k in [cells, 2 * cells] {
        let h = side / k as f64;
        let sampled = crate::connection::SampledConnection::sample(conn, p, (h, 0.0), (0.0, h), k + 1, k + 1);
        let f = holonomy(&sampled, &square_loop(p, side), h)?;
        spacings.push(h);
        defects.push(holonomy_defect(&f));
    }
    let order = (defects[0] / defects[1]).log2();
    Ok(FlatnessReport { spacings, defects, order })
}
