//! Run configuration in sectioned key-value (INI) form.
//!
//! ```ini
//! [domain]
//! n = 32
//! modulus = 0 1
//!
//! [higgs]
//! m = 2
//! g = 2
//! d = 1
//! gamma1 = 1 0
//! gamma2_file = gamma2.csv
//! perturb = 0
//!
//! [solver]
//! tol = 1e-10
//! max_iter = 50
//! backend = spectral
//!
//! [transport]
//! step = 0.001
//! length = 10
//! pieces = 400
//! patch = 3
//! spacing = 0.2
//!
//! [devmap]
//! samples = 32
//! r_max = 3
//!
//! [report]
//! out = out
//! ```
//!
//! Relative `gammaK_file` paths resolve against the directory of the
//! configuration file. A `gamma` file holds one `re,im` row per grid node,
//! row-major, with an optional header.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ini::Ini;
use num_complex::Complex64;
use phl_core::higgs::HiggsData;

use crate::error::{PhlError, Result};
use crate::grid::{Backend, TorusGrid};
use crate::solver::SolverOptions;

#[derive(Clone, Debug, PartialEq)]
pub struct DomainConfig {
    pub n: usize,
    pub modulus: Complex64,
}

/// One Higgs field: a constant or a per-node file.
#[derive(Clone, Debug, PartialEq)]
pub enum GammaSource {
    Constant(Complex64),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct HiggsConfig {
    pub m: usize,
    pub genus: i64,
    pub degree: i64,
    pub gammas: Vec<GammaSource>,
    /// Relative amplitude of the Fourier perturbation `1 + a cos(2 pi s) cos(2 pi t)`
    /// applied to `gamma_m`, in lattice coordinates `(s, t)`.
    pub perturb: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub backend: Backend,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportConfig {
    pub step: f64,
    /// Circumference of the closed test path.
    pub length: f64,
    pub pieces: usize,
    /// Nodes per side of the sample patch.
    pub patch: usize,
    pub spacing: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DevmapConfig {
    /// Samples per axis of the `(r, theta, alpha)` grid.
    pub samples: usize,
    pub r_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportConfig {
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub higgs: HiggsConfig,
    pub solver: SolverConfig,
    pub transport: TransportConfig,
    pub devmap: DevmapConfig,
    pub report: ReportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            domain: DomainConfig { n: 32, modulus: Complex64::new(0.0, 1.0) },
            higgs: HiggsConfig { m: 2, genus: 2, degree: 1, gammas: vec![GammaSource::Constant(one); 2], perturb: 0.0 },
            solver: SolverConfig { tol: 1e-10, max_iter: 50, backend: Backend::Spectral },
            transport: TransportConfig { step: 1e-3, length: 10.0, pieces: 400, patch: 3, spacing: 0.2 },
            devmap: DevmapConfig { samples: 32, r_max: 3.0 },
            report: ReportConfig { out: PathBuf::from("out") },
        }
    }
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> PhlError {
    PhlError::Validation(format!("{field}: {msg}"))
}

const KEYS: &[(&str, &[&str])] = &[
    ("domain", &["n", "modulus"]),
    ("higgs", &["m", "g", "d", "perturb"]),
    ("solver", &["tol", "max_iter", "backend"]),
    ("transport", &["step", "length", "pieces", "patch", "spacing"]),
    ("devmap", &["samples", "r_max"]),
    ("report", &["out"]),
];

fn is_gamma_key(key: &str) -> bool {
    let digits = key.strip_prefix("gamma").map(|k| k.strip_suffix("_file").unwrap_or(k));
    matches!(digits, Some(d) if !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

struct Raw {
    values: BTreeMap<(String, String), String>,
}

impl Raw {
    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.values.get(&(section.to_string(), key.to_string())).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, section: &str, key: &str, default: T, what: &str) -> Result<T> {
        match self.get(section, key) {
            None => Ok(default),
            Some(s) => {
                s.parse().map_err(|_| invalid(&format!("{section}.{key}"), format!("expected {what}, got '{s}'")))
            }
        }
    }
}

fn parse_complex(field: &str, s: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok()).collect();
    match nums.as_deref() {
        Some([re]) => Ok(Complex64::new(*re, 0.0)),
        Some([re, im]) => Ok(Complex64::new(*re, *im)),
        _ => Err(invalid(field, format!("expected 're' or 're im', got '{s}'"))),
    }
}

fn fmt_complex(z: Complex64) -> String {
    format!("{:?} {:?}", z.re, z.im)
}

fn ensure(cond: bool, field: &str, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(invalid(field, msg))
    }
}

impl RunConfig {
    /// Parse and validate; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| PhlError::Validation(format!("config syntax: {e}")))?;
        let mut raw = Raw { values: BTreeMap::new() };
        for (sec, props) in ini.iter() {
            let Some(sec) = sec else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(invalid(k, "key outside of any section"));
                }
                continue;
            };
            let Some((_, allowed)) = KEYS.iter().find(|(s, _)| *s == sec) else {
                return Err(invalid(sec, "unknown section"));
            };
            for (k, v) in props.iter() {
                if !allowed.contains(&k) && !(sec == "higgs" && is_gamma_key(k)) {
                    return Err(invalid(&format!("{sec}.{k}"), "unknown key"));
                }
                raw.values.insert((sec.to_string(), k.to_string()), v.trim().to_string());
            }
        }
        let d = RunConfig::default();
        let domain = DomainConfig {
            n: raw.parse("domain", "n", d.domain.n, "an integer")?,
            modulus: match raw.get("domain", "modulus") {
                None => d.domain.modulus,
                Some(s) => parse_complex("domain.modulus", s)?,
            },
        };
        let m: usize = raw.parse("higgs", "m", d.higgs.m, "a positive integer")?;
        ensure((1..=8).contains(&m), "higgs.m", "must lie in 1..=8")?;
        let mut gammas = Vec::with_capacity(m);
        for k in 1..=m {
            let (key, fkey) = (format!("gamma{k}"), format!("gamma{k}_file"));
            let src = match (raw.get("higgs", &key), raw.get("higgs", &fkey)) {
                (Some(_), Some(_)) => {
                    return Err(invalid(&format!("higgs.{key}"), format!("conflicts with higgs.{fkey}")))
                }
                (Some(s), None) => GammaSource::Constant(parse_complex(&format!("higgs.{key}"), s)?),
                (None, Some(p)) => GammaSource::File(base.join(p)),
                (None, None) => GammaSource::Constant(Complex64::new(1.0, 0.0)),
            };
            gammas.push(src);
        }
        if let Some(((_, k), _)) = raw.values.iter().find(|((s, k), _)| {
            s == "higgs" && is_gamma_key(k) && {
                let idx: usize = k.trim_start_matches("gamma").trim_end_matches("_file").parse().unwrap_or(0);
                idx == 0 || idx > m
            }
        }) {
            return Err(invalid(&format!("higgs.{k}"), format!("index outside 1..={m}")));
        }
        let higgs = HiggsConfig {
            m,
            genus: raw.parse("higgs", "g", d.higgs.genus, "an integer")?,
            degree: raw.parse("higgs", "d", d.higgs.degree, "an integer")?,
            gammas,
            perturb: raw.parse("higgs", "perturb", d.higgs.perturb, "a number")?,
        };
        let solver = SolverConfig {
            tol: raw.parse("solver", "tol", d.solver.tol, "a number")?,
            max_iter: raw.parse("solver", "max_iter", d.solver.max_iter, "an integer")?,
            backend: match raw.get("solver", "backend") {
                None => d.solver.backend,
                Some(s) => s
                    .parse()
                    .map_err(|_| invalid("solver.backend", format!("expected 'spectral' or 'stencil', got '{s}'")))?,
            },
        };
        let transport = TransportConfig {
            step: raw.parse("transport", "step", d.transport.step, "a number")?,
            length: raw.parse("transport", "length", d.transport.length, "a number")?,
            pieces: raw.parse("transport", "pieces", d.transport.pieces, "an integer")?,
            patch: raw.parse("transport", "patch", d.transport.patch, "an integer")?,
            spacing: raw.parse("transport", "spacing", d.transport.spacing, "a number")?,
        };
        let devmap = DevmapConfig {
            samples: raw.parse("devmap", "samples", d.devmap.samples, "an integer")?,
            r_max: raw.parse("devmap", "r_max", d.devmap.r_max, "a number")?,
        };
        let report = ReportConfig { out: raw.get("report", "out").map_or(d.report.out, |p| base.join(p)) };
        let cfg = RunConfig { domain, higgs, solver, transport, devmap, report };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PhlError::Validation(format!("config {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Range checks on every field.
    pub fn validate(&self) -> Result<()> {
        let n = self.domain.n;
        ensure(n >= 8 && n.is_multiple_of(2) && n <= 4096, "domain.n", "must be even and in 8..=4096")?;
        ensure(
            self.domain.modulus.im > 0.0 && self.domain.modulus.is_finite(),
            "domain.modulus",
            "imaginary part must be positive",
        )?;
        ensure(self.higgs.gammas.len() == self.higgs.m, "higgs.m", "one gamma per index is required")?;
        ensure(self.higgs.genus >= 2, "higgs.g", "genus must be at least 2")?;
        for (k, g) in self.higgs.gammas.iter().enumerate() {
            match g {
                GammaSource::Constant(z) => ensure(z.is_finite(), &format!("higgs.gamma{}", k + 1), "must be finite")?,
                GammaSource::File(p) => ensure(
                    p.is_file(),
                    &format!("higgs.gamma{}_file", k + 1),
                    &format!("no such file {}", p.display()),
                )?,
            }
        }
        ensure(
            self.higgs.perturb.is_finite() && self.higgs.perturb.abs() < 1.0,
            "higgs.perturb",
            "must lie in (-1, 1)",
        )?;
        ensure(self.solver.tol > 0.0 && self.solver.tol.is_finite(), "solver.tol", "must be positive")?;
        ensure((1..=10_000).contains(&self.solver.max_iter), "solver.max_iter", "must lie in 1..=10000")?;
        let t = &self.transport;
        ensure(t.step > 0.0 && t.step <= 0.1, "transport.step", "must lie in (0, 0.1]")?;
        ensure(t.length > 0.0 && t.length.is_finite(), "transport.length", "must be positive")?;
        ensure(t.pieces >= 3, "transport.pieces", "must be at least 3")?;
        ensure((1..=64).contains(&t.patch), "transport.patch", "must lie in 1..=64")?;
        ensure(t.spacing > 0.0 && t.spacing.is_finite(), "transport.spacing", "must be positive")?;
        ensure((1..=512).contains(&self.devmap.samples), "devmap.samples", "must lie in 1..=512")?;
        ensure(self.devmap.r_max > 0.0 && self.devmap.r_max <= 20.0, "devmap.r_max", "must lie in (0, 20]")?;
        Ok(())
    }

    pub fn to_ini(&self) -> Ini {
        let mut ini = Ini::new();
        ini.with_section(Some("domain"))
            .set("n", self.domain.n.to_string())
            .set("modulus", fmt_complex(self.domain.modulus));
        let h = &self.higgs;
        let mut sec = ini.with_section(Some("higgs"));
        sec.set("m", h.m.to_string()).set("g", h.genus.to_string()).set("d", h.degree.to_string());
        for (k, g) in h.gammas.iter().enumerate() {
            match g {
                GammaSource::Constant(z) => sec.set(format!("gamma{}", k + 1), fmt_complex(*z)),
                GammaSource::File(p) => sec.set(format!("gamma{}_file", k + 1), p.display().to_string()),
            };
        }
        sec.set("perturb", format!("{:?}", h.perturb));
        ini.with_section(Some("solver"))
            .set("tol", format!("{:?}", self.solver.tol))
            .set("max_iter", self.solver.max_iter.to_string())
            .set("backend", backend_name(self.solver.backend));
        let t = &self.transport;
        ini.with_section(Some("transport"))
            .set("step", format!("{:?}", t.step))
            .set("length", format!("{:?}", t.length))
            .set("pieces", t.pieces.to_string())
            .set("patch", t.patch.to_string())
            .set("spacing", format!("{:?}", t.spacing));
        ini.with_section(Some("devmap"))
            .set("samples", self.devmap.samples.to_string())
            .set("r_max", format!("{:?}", self.devmap.r_max));
        ini.with_section(Some("report")).set("out", self.report.out.display().to_string());
        ini
    }

    pub fn to_ini_string(&self) -> String {
        let mut buf = Vec::new();
        self.to_ini().write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ini output is utf-8")
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.domain.n, self.domain.modulus)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { tol: self.solver.tol, max_iter: self.solver.max_iter, backend: self.solver.backend }
    }

    /// Sample the Higgs fields on the grid.
    pub fn higgs_data(&self) -> Result<HiggsData> {
        let grid = self.grid()?;
        let len = grid.len();
        let h = &self.higgs;
        let mut gammas = Vec::with_capacity(h.m);
        for (k, src) in h.gammas.iter().enumerate() {
            let mut g = match src {
                GammaSource::Constant(z) => vec![*z; len],
                GammaSource::File(p) => {
                    let g = crate::io::read_complex_csv(p)?;
                    if g.len() != len {
                        return Err(invalid(
                            &format!("higgs.gamma{}_file", k + 1),
                            format!("{} rows, expected {len} (n^2)", g.len()),
                        ));
                    }
                    g
                }
            };
            if k + 1 == h.m && h.perturb != 0.0 {
                let n = grid.n;
                let tau = std::f64::consts::TAU;
                for (idx, z) in g.iter_mut().enumerate() {
                    let (s, t) = ((idx / n) as f64 / n as f64, (idx % n) as f64 / n as f64);
                    *z *= 1.0 + h.perturb * (tau * s).cos() * (tau * t).cos();
                }
            }
            gammas.push(g);
        }
        Ok(HiggsData::new(h.m, h.genus, h.degree, gammas)?)
    }
}

pub fn backend_name(b: Backend) -> &'static str {
    match b {
        Backend::Spectral => "spectral",
        Backend::Stencil => "stencil",
    }
}
