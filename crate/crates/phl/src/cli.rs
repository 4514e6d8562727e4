//! The `phl` command-line front-end.
//!
//! Exit status: 0 on success, 1 when a checking command finds a failed
//! invariant, 2 on solver non-convergence, 3 on I/O failures and 4 on
//! invalid input.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use phl_core::devmap::{
    anchor_expected, base_frame, dev, dev_vector, gw_membership, halton_samples, injectivity_probe, transversality_det,
    Membership, UTPoint,
};
use phl_core::higgs::{moduli_dimensions, stability_classify_full, ModuliStatus, Stability};
use phl_core::paracomplex::{q_form, PCMatrix};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::background::{Background, GridBackground};
use crate::config::{backend_name, RunConfig};
use crate::connection::FlatConnection;
use crate::error::{PhlError, Result};
use crate::gauss::{expected_eigenvalues, gauss_lift, gauss_report, metric_eigenvalues, symmetric_point, GaussReport};
use crate::grid::TorusGrid;
use crate::harmseq::{sequence_report, SequenceReport, ISOTROPY_TOL};
use crate::immersion::{
    circle_path, frenet_verify, immerse_path, FrenetReport, ImmersionReport, CONFORMAL_TOL, COUPLING_TOL, SUBSPACE_TOL,
};
use crate::io::{read_table, write_json, write_table};
use crate::solver::{solve_pde, MetricSolution};
use crate::transport::{sigma, transport_patch};

#[derive(Debug, Parser)]
#[command(name = "phl", version, about = "Cyclic Higgs bundles and para-complex hyperbolic immersions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (INI).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `report.out`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Print the summary as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Solver tolerance, overriding `solver.tol`.
    #[arg(long, global = true, value_name = "X")]
    pub tol: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true, env = "PHL_THREADS", value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the Hitchin equations on the torus and write `u.csv`.
    Solve,
    /// Run every invariant check on a solved configuration.
    Verify {
        /// Flip one connection entry (negative control).
        #[arg(long)]
        corrupt: bool,
    },
    /// Transport the frame around the test loop and write the immersion samples.
    Immerse {
        #[arg(long)]
        corrupt: bool,
    },
    /// Harmonic sequence pairings and the extracted differential.
    Seq {
        #[arg(long)]
        corrupt: bool,
    },
    /// Gauss map lift and its minimality residuals.
    Gauss {
        #[arg(long)]
        corrupt: bool,
    },
    /// Developing map of the Fuchsian `m = 1` model.
    Devmap {
        /// Check the value of `dev` at the anchor `(p0, 3 pi / 4)`.
        #[arg(long)]
        check_anchor: bool,
        /// Hash `N` quasi-random samples and report flag collisions.
        #[arg(long, value_name = "N")]
        probe_injectivity: Option<usize>,
    },
    /// Dimensions of the moduli stratum for `(m, g, d)`.
    Moduli {
        m: usize,
        g: i64,
        #[arg(allow_hyphen_values = true)]
        d: i64,
    },
}

/// Result of a command: a summary and whether every check held.
#[derive(Debug)]
pub struct Outcome {
    pub summary: Value,
    pub text: String,
    pub ok: bool,
}

/// Parse `args`, run, print, and return the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let json = cli.json;
    match run(cli) {
        Ok(out) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&out.summary).expect("summary serializes"));
            } else {
                print!("{}", out.text);
            }
            if out.ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.threads {
        Some(0) => Err(PhlError::Validation("threads: must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| PhlError::Numerical(format!("thread pool: {e}")))?
            .install(|| dispatch(&cli)),
        None => dispatch(&cli),
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    if let Command::Moduli { m, g, d } = cli.command {
        return cmd_moduli(m, g, d);
    }
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Solve => cmd_solve(&cfg),
        Command::Verify { corrupt } => cmd_verify(&cfg, corrupt),
        Command::Immerse { corrupt } => cmd_immerse(&cfg, corrupt),
        Command::Seq { corrupt } => cmd_seq(&cfg, corrupt),
        Command::Gauss { corrupt } => cmd_gauss(&cfg, corrupt),
        Command::Devmap { check_anchor, probe_injectivity } => cmd_devmap(&cfg, check_anchor, probe_injectivity),
        Command::Moduli { .. } => unreachable!(),
    }
}

pub fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            if !p.is_file() {
                return Err(PhlError::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("config file {} not found", p.display()),
                )));
            }
            RunConfig::load(p)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.report.out = out.clone();
    }
    if let Some(tol) = cli.tol {
        cfg.solver.tol = tol;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn stability_text(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::StrictlyPolystable => "strictly polystable",
        Stability::Unstable => "unstable (not polystable)",
        Stability::Empty => "empty (no such Higgs bundle)",
    }
}

/// Refuse data outside the polystable range.
pub fn check_stability(cfg: &RunConfig, data: &phl_core::higgs::HiggsData) -> Result<Option<Stability>> {
    let h = &cfg.higgs;
    if h.m < 2 {
        return Ok(None);
    }
    let (top_zero, prev_zero) = (data.gamma_is_zero(h.m), data.gamma_is_zero(h.m - 1));
    let s = stability_classify_full(h.m, h.genus, h.degree, top_zero, prev_zero)?;
    if matches!(s, Stability::Unstable | Stability::Empty) {
        return Err(PhlError::Validation(format!(
            "stability: (m, g, d) = ({}, {}, {}) with gamma_{} {} is {}; refusing to solve",
            h.m,
            h.genus,
            h.degree,
            h.m,
            if top_zero { "identically zero" } else { "nonzero" },
            stability_text(s)
        )));
    }
    Ok(Some(s))
}

fn u_header(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("u_{i}")).collect()
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let data = cfg.higgs_data()?;
    let stability = check_stability(cfg, &data)?;
    let (sol, log) = solve_pde(&data, &grid, &cfg.solver_options())?;
    let out = &cfg.report.out;
    let m = sol.m();
    write_table(&out.join("u.csv"), &u_header(m), (0..grid.len()).map(|k| sol.u.iter().map(|u| u[k]).collect()))?;
    let summary = json!({
        "command": "solve",
        "m": m,
        "genus": cfg.higgs.genus,
        "degree": cfg.higgs.degree,
        "stability": stability.map(stability_text),
        "n": grid.n,
        "modulus": [grid.modulus.re, grid.modulus.im],
        "backend": backend_name(cfg.solver.backend),
        "tol": cfg.solver.tol,
        "converged": log.converged,
        "iterations": log.iterations,
        "residual": log.residual_history.last().copied().unwrap_or(0.0),
        "residual_history": log.residual_history,
        "linear_iterations": log.linear_iterations,
        "u_min": sol.u.iter().map(|u| u.iter().copied().fold(f64::INFINITY, f64::min)).collect::<Vec<_>>(),
        "u_max": sol.u.iter().map(|u| u.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect::<Vec<_>>(),
    });
    write_json(&out.join("convergence.json"), &summary)?;
    let text = format!(
        "solve: m = {m}, n = {}, converged after {} Newton steps, residual {:e}\nwrote {}\n",
        grid.n,
        log.iterations,
        summary["residual"].as_f64().unwrap_or(0.0),
        out.join("u.csv").display()
    );
    Ok(Outcome { summary, text, ok: true })
}

/// The solved torus background plus frames on the sample patch.
pub struct Pipeline {
    pub grid: TorusGrid,
    pub conn: FlatConnection<GridBackground>,
    pub samples: Vec<((f64, f64), PCMatrix)>,
}

pub fn load_solution(cfg: &RunConfig, grid: &TorusGrid) -> Result<MetricSolution> {
    let path = cfg.report.out.join("u.csv");
    if !path.is_file() {
        return Err(PhlError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} not found; run `phl solve` first", path.display()),
        )));
    }
    let (header, rows) = read_table(&path)?;
    let m = cfg.higgs.m;
    if header != u_header(m) || rows.len() != grid.len() || rows.iter().any(|r| r.len() != m) {
        return Err(PhlError::Validation(format!(
            "{}: expected {} rows of {m} columns u_1..u_{m} for the configured grid",
            path.display(),
            grid.len()
        )));
    }
    Ok(MetricSolution { u: (0..m).map(|i| rows.iter().map(|r| r[i]).collect()).collect() })
}

pub fn pipeline(cfg: &RunConfig, corrupt: bool) -> Result<Pipeline> {
    let grid = cfg.grid()?;
    let data = cfg.higgs_data()?;
    check_stability(cfg, &data)?;
    let sol = load_solution(cfg, &grid)?;
    let bg = GridBackground::new(&sol, &data, &grid)?;
    let conn = if corrupt { FlatConnection::corrupted(bg) } else { FlatConnection::new(bg) };
    let t = &cfg.transport;
    let (p, s) = (t.patch, t.spacing);
    let frames =
        transport_patch(&conn, &PCMatrix::identity(2 * cfg.higgs.m + 1), (0.0, 0.0), (s, 0.0), (0.0, s), p, p, t.step)?;
    let samples = frames.into_iter().enumerate().map(|(k, f)| (((k / p) as f64 * s, (k % p) as f64 * s), f)).collect();
    Ok(Pipeline { grid, conn, samples })
}

/// One named invariant with its measured value and threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn below(name: &str, value: f64, tolerance: f64) -> Check {
    Check { name: name.into(), value, tolerance, pass: value < tolerance }
}

fn flag(name: &str, value: f64, tolerance: f64, pass: bool) -> Check {
    Check { name: name.into(), value, tolerance, pass }
}

fn frenet_checks(r: &FrenetReport) -> Vec<Check> {
    vec![
        flag("frenet.signature", r.signature_margin, 0.0, r.signature_ok),
        flag("frenet.para_structure", r.p_angle, SUBSPACE_TOL, r.p_ok),
        flag("frenet.omega_on_blocks", r.omega_on_blocks, SUBSPACE_TOL, r.omega_ok),
        flag("frenet.tridiagonal", r.off_tridiagonal, COUPLING_TOL, r.tridiagonal_ok),
        flag("frenet.link_conformality", r.link_conformality, CONFORMAL_TOL, r.conformal_ok),
    ]
}

fn immersion_checks(r: &ImmersionReport) -> Vec<Check> {
    vec![
        below("immersion.sigma_norm", r.sigma_norm, 1e-8),
        below("immersion.conformality", r.conformality, 1e-6),
        below("immersion.induced_metric", r.induced_metric, 1e-5),
        below("immersion.harmonic_tangential", r.harmonic_tangential, 1e-5),
    ]
}

fn sequence_checks(r: &SequenceReport, m: usize) -> Vec<Check> {
    vec![
        flag("harmseq.isotropic_order", r.isotropic_order as f64, (2 * m) as f64, r.isotropic_order == 2 * m),
        below("harmseq.isotropy", r.isotropy, 1e-6),
        below("harmseq.alternation", r.alternation, 1e-6),
        below("harmseq.harmonicity", r.harmonicity, 1e-5),
        below("harmseq.span", r.span, 1e-4),
        below("harmseq.direction", r.direction, 1e-4),
        below("harmseq.holomorphy", r.holomorphy, 1e-5),
        below("harmseq.middle_pairing", r.mid_defect, 1e-5),
    ]
}

fn gauss_checks(r: &GaussReport, eig: f64) -> Vec<Check> {
    vec![
        below("gauss.lift_in_sl", r.det_defect.max(r.partner_defect), 1e-10),
        below("gauss.metric_det", r.metric_det_defect, 1e-10),
        below("gauss.plane", r.plane_angle, 1e-6),
        below("gauss.conformality", r.conformality, 1e-5),
        below("gauss.tension", r.tension, 1e-4),
        below("gauss.eigenvalues", eig, 1e-8),
    ]
}

fn immersion_run(cfg: &RunConfig, p: &Pipeline) -> Result<(crate::transport::FrameField, ImmersionReport)> {
    let t = &cfg.transport;
    let every = ((t.length / t.step) / 100.0).max(1.0) as usize;
    immerse_path(
        &p.conn,
        &PCMatrix::identity(2 * cfg.higgs.m + 1),
        &circle_path((0.0, 0.0), t.length, t.pieces),
        t.step,
        every,
    )
}

/// Stand-in report for a transport that left the group: every residual is infinite.
fn aborted_immersion() -> ImmersionReport {
    let inf = f64::INFINITY;
    ImmersionReport {
        samples: 0,
        length: 0.0,
        sigma_norm: inf,
        conformality: inf,
        induced_metric: inf,
        harmonic: inf,
        harmonic_tangential: inf,
        drift: inf,
        drift_slope: inf,
    }
}

fn base_eigenvalue_defect(p: &Pipeline) -> Result<f64> {
    let (pt, f) = &p.samples[0];
    let h = p.conn.bg.h(pt.0, pt.1);
    let got = metric_eigenvalues(&gauss_lift(f), &h)?;
    Ok(got.iter().zip(expected_eigenvalues(&h)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn checks_text(title: &str, checks: &[Check]) -> String {
    let mut s = format!("{title}\n");
    for c in checks {
        s += &format!(
            "  {:<5} {:<32} {:>12.3e}  (tol {:.0e})\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        );
    }
    s
}

pub fn cmd_verify(cfg: &RunConfig, corrupt: bool) -> Result<Outcome> {
    let p = pipeline(cfg, corrupt)?;
    let m = cfg.higgs.m;
    let frenet = frenet_verify(&p.conn, &p.samples, cfg.transport.step);
    let imm = match immersion_run(cfg, &p) {
        Ok((_, r)) => Some(r),
        Err(PhlError::Numerical(_)) => None,
        Err(e) => return Err(e),
    };
    let seq = sequence_report(&p.conn, &p.samples, 2 * m + 1, ISOTROPY_TOL)?;
    let gauss = gauss_report(&p.conn, &p.samples, cfg.transport.step)?;
    let eig = base_eigenvalue_defect(&p)?;
    let mut checks = frenet_checks(&frenet);
    checks.extend(match &imm {
        Some(r) => immersion_checks(r),
        None => immersion_checks(&aborted_immersion()),
    });
    checks.extend(sequence_checks(&seq, m));
    checks.extend(gauss_checks(&gauss, eig));
    let failed = checks.iter().filter(|c| !c.pass).count();
    let summary = json!({
        "command": "verify",
        "m": m,
        "corrupt": corrupt,
        "points": p.samples.len(),
        "passed": checks.len() - failed,
        "failed": failed,
        "all_pass": failed == 0,
        "checks": checks,
        "frenet": frenet,
        "immersion": imm,
        "harmseq": seq_summary(&seq),
        "gauss": gauss,
    });
    write_json(&cfg.report.out.join("verify.json"), &summary)?;
    let mut text = checks_text(&format!("verify: m = {m}, {} sample points", p.samples.len()), &checks);
    text += &format!("{} passed, {failed} failed\n", checks.len() - failed);
    Ok(Outcome { summary, text, ok: failed == 0 })
}

fn seq_summary(r: &SequenceReport) -> Value {
    let mut v = serde_json::to_value(r).expect("report serializes");
    if let Value::Object(o) = &mut v {
        o.remove("differentials");
    }
    v
}

pub fn cmd_immerse(cfg: &RunConfig, corrupt: bool) -> Result<Outcome> {
    let p = pipeline(cfg, corrupt)?;
    let (field, rep) = immersion_run(cfg, &p)?;
    let arc = field.arclength();
    let rows = field.frames.iter().zip(&field.points).zip(&arc).zip(&field.drift).map(|(((f, pt), s), d)| {
        let q = q_form(&sigma(f), &sigma(f)).expect("dims");
        vec![*s, pt.0, pt.1, q.re, q.im_tau, *d]
    });
    let header: Vec<String> = ["s", "x", "y", "q_sigma_re", "q_sigma_tau", "drift"].map(String::from).to_vec();
    write_table(&cfg.report.out.join("immersion.csv"), &header, rows)?;
    let checks = immersion_checks(&rep);
    let summary = json!({ "command": "immerse", "report": rep, "checks": checks });
    write_json(&cfg.report.out.join("immersion.json"), &summary)?;
    let text = checks_text(&format!("immerse: {} frames, path length {:.6}", field.frames.len(), rep.length), &checks);
    Ok(Outcome { summary, text, ok: true })
}

pub fn cmd_seq(cfg: &RunConfig, corrupt: bool) -> Result<Outcome> {
    let p = pipeline(cfg, corrupt)?;
    let m = cfg.higgs.m;
    let rep = sequence_report(&p.conn, &p.samples, 2 * m + 1, ISOTROPY_TOL)?;
    let header: Vec<String> =
        ["x", "y", "eta_top_re", "eta_top_im", "eta_mid_re", "eta_mid_im", "expected_re", "expected_im", "holomorphy"]
            .map(String::from)
            .to_vec();
    let rows = rep.differentials.iter().map(|d| {
        vec![
            d.point.0,
            d.point.1,
            d.eta_top.re,
            d.eta_top.im,
            d.eta_mid.re,
            d.eta_mid.im,
            d.expected.re,
            d.expected.im,
            d.holomorphy,
        ]
    });
    write_table(&cfg.report.out.join("differential.csv"), &header, rows)?;
    let checks = sequence_checks(&rep, m);
    let summary = json!({ "command": "seq", "m": m, "report": seq_summary(&rep), "checks": checks });
    write_json(&cfg.report.out.join("seq.json"), &summary)?;
    let text = checks_text(&format!("seq: m = {m}, depth {}", rep.depth), &checks);
    Ok(Outcome { summary, text, ok: true })
}

pub fn cmd_gauss(cfg: &RunConfig, corrupt: bool) -> Result<Outcome> {
    let p = pipeline(cfg, corrupt)?;
    let n = 2 * cfg.higgs.m + 1;
    let rep = gauss_report(&p.conn, &p.samples, cfg.transport.step)?;
    let eig = base_eigenvalue_defect(&p)?;
    let mut header = vec!["x".to_string(), "y".to_string()];
    header.extend((0..n * n).map(|k| format!("h_{}_{}", k / n, k % n)));
    let rows = p
        .samples
        .iter()
        .map(|(pt, f)| -> Result<Vec<f64>> {
            let h = symmetric_point(&gauss_lift(f))?.h;
            let mut row = vec![pt.0, pt.1];
            row.extend((0..n * n).map(|k| h[(k / n, k % n)]));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    write_table(&cfg.report.out.join("gauss.csv"), &header, rows)?;
    let checks = gauss_checks(&rep, eig);
    let summary = json!({ "command": "gauss", "report": rep, "eigenvalue_defect": eig, "checks": checks });
    write_json(&cfg.report.out.join("gauss.json"), &summary)?;
    let text =
        checks_text(&format!("gauss: {} sample points, tension order {:.3}", rep.points, rep.tension_order), &checks);
    Ok(Outcome { summary, text, ok: true })
}

fn membership_code(m: Membership) -> f64 {
    match m {
        Membership::Member => 1.0,
        Membership::NonMember => 0.0,
        Membership::Boundary => -1.0,
    }
}

pub fn cmd_devmap(cfg: &RunConfig, check_anchor: bool, probe: Option<usize>) -> Result<Outcome> {
    if cfg.higgs.m != 1 {
        return Err(PhlError::Validation(format!("higgs.m: devmap requires m = 1, got {}", cfg.higgs.m)));
    }
    let (ns, r_max) = (cfg.devmap.samples, cfg.devmap.r_max);
    let rows: Vec<Vec<f64>> = (0..ns * ns * ns)
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>> {
            let (a, b, c) = (k / (ns * ns), (k / ns) % ns, k % ns);
            let r = r_max * (a as f64 + 0.5) / ns as f64;
            let (theta, alpha) = (TAU * b as f64 / ns as f64, TAU * c as f64 / ns as f64);
            let pt = UTPoint::polar(r, theta, alpha);
            let f = dev(&pt)?;
            let twin = dev(&UTPoint::polar(r, theta, alpha + PI))?;
            let mut row: Vec<f64> = pt.p.iter().copied().collect();
            row.push(alpha);
            row.extend(f.line.iter());
            row.extend(f.functional.iter());
            row.push(membership_code(gw_membership(&f)));
            row.push(transversality_det(&pt)?);
            row.push(f.distance(&twin));
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let header: Vec<String> = [
        "p0",
        "p1",
        "p2",
        "alpha",
        "line0",
        "line1",
        "line2",
        "functional0",
        "functional1",
        "functional2",
        "member",
        "det",
    ]
    .map(String::from)
    .to_vec();
    let width = header.len();
    write_table(&cfg.report.out.join("devmap.csv"), &header, rows.iter().map(|r| r[..width].to_vec()))?;
    let count = |code: f64| rows.iter().filter(|r| r[10] == code).count();
    let (members, non_members, boundary) = (count(1.0), count(0.0), count(-1.0));
    let min_det = rows.iter().map(|r| r[11].abs()).fold(f64::INFINITY, f64::min);
    let periodicity = rows.iter().map(|r| r[12]).fold(0.0, f64::max);
    let mut ok = members == rows.len() && min_det > 0.0 && periodicity < 1e-10;
    let mut text = format!(
        "devmap: {} samples, {members} members, {non_members} non-members, {boundary} on the boundary\n  min |det| {:e}, pi-periodicity defect {:e}\n",
        rows.len(),
        min_det,
        periodicity
    );
    let anchor = if check_anchor {
        let (u, v) = base_frame();
        let (plus, minus) = dev_vector(&u, &v, 3.0 * FRAC_PI_4);
        let (ep, em) = anchor_expected();
        let err = (plus - ep).amax().max((minus - em).amax());
        let pass = err < 1e-12;
        ok &= pass;
        text += &format!("  anchor identity {} ({err:e})\n", if pass { "PASS" } else { "FAIL" });
        Some(json!({ "error": err, "pass": pass }))
    } else {
        None
    };
    let injectivity = match probe {
        Some(n) => {
            let rep = injectivity_probe(&halton_samples(n, r_max), 1e-8)?;
            ok &= rep.collisions.is_empty();
            text += &format!(
                "  injectivity probe: {n} samples, {} collisions, {} identified pairs\n",
                rep.collisions.len(),
                rep.identified
            );
            Some(json!({
                "samples": rep.samples,
                "collisions": rep.collisions,
                "identified": rep.identified,
                "duplicates": rep.duplicates,
            }))
        }
        None => None,
    };
    let summary = json!({
        "command": "devmap",
        "samples": rows.len(),
        "r_max": r_max,
        "members": members,
        "non_members": non_members,
        "boundary": boundary,
        "membership_fraction": members as f64 / rows.len() as f64,
        "min_abs_det": min_det,
        "periodicity_defect": periodicity,
        "anchor": anchor,
        "injectivity": injectivity,
    });
    write_json(&cfg.report.out.join("devmap.json"), &summary)?;
    Ok(Outcome { summary, text, ok })
}

pub fn cmd_moduli(m: usize, g: i64, d: i64) -> Result<Outcome> {
    let r = moduli_dimensions(m, g, d)?;
    let empty = r.status == ModuliStatus::Empty;
    let summary = json!({
        "command": "moduli",
        "m": m,
        "g": g,
        "d": d,
        "status": if empty { "empty" } else { "stratum" },
        "bundle_rank": r.bundle_rank,
        "base_dim": r.base_dim,
        "total_dim": r.total_dim,
        "cover_note": r.cover_note,
    });
    let text = if empty {
        format!("moduli (m, g, d) = ({m}, {g}, {d}): empty\n")
    } else {
        format!(
            "moduli (m, g, d) = ({m}, {g}, {d}): rank {}, base {}, total {}\n  {}\n",
            r.bundle_rank, r.base_dim, r.total_dim, r.cover_note
        )
    };
    Ok(Outcome { summary, text, ok: true })
}

/// Write a configuration file next to its outputs.
pub fn write_config(path: &Path, cfg: &RunConfig) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, cfg.to_ini_string())?;
    Ok(())
}
