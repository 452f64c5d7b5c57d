//! Experiment drivers behind the `oras` tool: run configuration, the
//! mesh-resolution guard, CSV/JSON table output and one runner per
//! experiment family.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64 as C64;
use num_traits::Zero;
use serde::{Serialize, Serializer};

use crate::assembly::{assemble_global, plane_wave_load, HelmholtzProblem};
use crate::decomp::{build_pou, checkerboard, checkerboard_parts, strip_interfaces, strips, Decomposition};
use crate::error::{Error, Result};
use crate::fespace::build_space;
use crate::impmaps::{canonical_imp_maps, imp_map_norm, CanonicalSetup, MapDirection, StripImpedance};
use crate::mesh::{build_uniform_mesh, snap_resolution, RectDomain};
use crate::oras::{build_preconditioner, oras_gmres, oras_richardson, SolveReport};

/// Largest wavenumber run without `--full`.
pub const DESK_MAX_K: f64 = 40.0;

/// Smallest target mesh size run without `--full`: a quarter of `2π/(10k)`.
pub fn desk_min_h(k: f64) -> f64 {
    2.0 * PI / (10.0 * k) / 4.0
}

pub const RHS_KIND: &str = "f=0; g=(d/dn - ik) exp(ikx) on the outer boundary";
pub const INITIAL_GUESS: &str = "zero";
pub const STRIP_POU: &str = "linear ramp across each overlap";
pub const CHECKERBOARD_POU: &str = "normalised distance to the subdomain interface";

/// Mesh-size rule: either a fixed size or `scale / k`.
#[derive(Clone, Debug, PartialEq)]
pub struct HRule {
    text: String,
    kind: HRuleKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum HRuleKind {
    Fixed(f64),
    PerK(f64),
}

impl HRule {
    pub fn fixed(h: f64) -> Self {
        Self { text: format!("{h}"), kind: HRuleKind::Fixed(h) }
    }

    /// Target mesh size at wavenumber `k`, refined `level` times by halving.
    pub fn eval(&self, k: f64, level: u32) -> f64 {
        let base = match self.kind {
            HRuleKind::Fixed(h) => h,
            HRuleKind::PerK(s) => s / k,
        };
        base / 2f64.powi(level as i32)
    }

    /// Label of the refined rule, e.g. `2pi/10k/2^1`.
    pub fn label(&self, level: u32) -> String {
        if level == 0 {
            self.text.clone()
        } else {
            format!("{}/2^{level}", self.text)
        }
    }
}

fn parse_scalar(s: &str) -> Option<f64> {
    if let Some((b, e)) = s.split_once('^') {
        return Some(parse_scalar(b)?.powf(parse_scalar(e)?));
    }
    if let Some(c) = s.strip_suffix("pi") {
        let c = c.strip_suffix('*').unwrap_or(c);
        return Some(if c.is_empty() { 1.0 } else { c.parse::<f64>().ok()? } * PI);
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

impl FromStr for HRule {
    type Err = Error;

    /// Accepts `0.01`, `80^-1.25`, `1/2k`, `2pi/10k` and further divisors such
    /// as `2pi/10k/4`.
    fn from_str(s: &str) -> Result<Self> {
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
        let bad = || Error::InvalidArgument(format!("cannot parse mesh-size rule {s:?}"));
        let parts: Vec<&str> = text.split('/').collect();
        let kind = match parts.iter().position(|p| p.ends_with('k')) {
            None => {
                let mut v = parse_scalar(parts[0]).ok_or_else(bad)?;
                for d in &parts[1..] {
                    v /= parse_scalar(d).ok_or_else(bad)?;
                }
                HRuleKind::Fixed(v)
            }
            Some(ki) if ki >= 1 => {
                let mut v = parse_scalar(parts[0]).ok_or_else(bad)?;
                for (i, d) in parts.iter().enumerate().skip(1) {
                    let d = if i == ki { d.strip_suffix('k').unwrap() } else { d };
                    v /= if d.is_empty() { 1.0 } else { parse_scalar(d).ok_or_else(bad)? };
                }
                HRuleKind::PerK(v)
            }
            Some(_) => return Err(bad()),
        };
        match kind {
            HRuleKind::Fixed(v) | HRuleKind::PerK(v) if v > 0.0 && v.is_finite() => Ok(Self { text, kind }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for HRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for HRule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

/// Outcome of the resolution guard `h^{2p} k^{2p+1} diam ≤ threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResolutionGuard {
    pub quantity: f64,
    pub threshold: f64,
    pub ok: bool,
}

pub fn guard_mesh_resolution(k: f64, h: f64, p: usize, diam: f64, threshold: f64) -> ResolutionGuard {
    let e = 2 * p as i32;
    let quantity = h.powi(e) * k.powi(e + 1) * diam;
    ResolutionGuard { quantity, threshold, ok: quantity <= threshold }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ImpmapConvergence,
    ImpmapDelta,
    Strips,
    Checkerboard,
    Tnorm,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ImpmapConvergence => "impmap-convergence",
            Experiment::ImpmapDelta => "impmap-delta",
            Experiment::Strips => "strips",
            Experiment::Checkerboard => "checkerboard",
            Experiment::Tnorm => "tnorm",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub k: Vec<f64>,
    pub p: Vec<usize>,
    pub h_rule: HRule,
    /// Each level halves the mesh size given by `h_rule`.
    pub h_levels: Vec<u32>,
    /// Reference mesh size for the convergence experiment.
    pub h_ref_rule: HRule,
    pub n_subdomains: usize,
    pub overlap: f64,
    /// x-extent of the rectangle (canonical or strip domain).
    pub length: f64,
    pub delta: f64,
    pub max_power: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub full: bool,
    pub guard_threshold: f64,
}

impl RunConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let rule = |s: &str| s.parse::<HRule>().expect("built-in rule");
        let base = Self {
            experiment,
            k: vec![10.0],
            p: vec![1],
            h_rule: rule("2pi/10k"),
            h_levels: vec![0],
            h_ref_rule: rule("1/32k"),
            n_subdomains: 8,
            overlap: 0.5,
            length: 1.0,
            delta: 0.25,
            max_power: 16,
            tolerance: 1e-6,
            max_iterations: 200,
            seed: 0,
            full: false,
            guard_threshold: 1.0,
        };
        match experiment {
            Experiment::ImpmapConvergence => Self { h_rule: rule("1/2k"), h_levels: vec![0, 1, 2, 3], ..base },
            Experiment::ImpmapDelta => Self { p: vec![2], h_rule: rule("80^-1.25"), ..base },
            Experiment::Strips => Self { k: vec![20.0, 40.0], length: 16.0 / 3.0, ..base },
            Experiment::Checkerboard => Self { k: vec![40.0], ..base },
            Experiment::Tnorm => Self { k: vec![20.0], length: 16.0 / 3.0, ..base },
        }
    }

    fn desk_skip(&self, k: f64, h: Option<f64>) -> Option<String> {
        if self.full {
            return None;
        }
        if k > DESK_MAX_K {
            return Some(format!("k = {k} exceeds the desk cap k <= {DESK_MAX_K}; pass --full"));
        }
        match h {
            Some(h) if h < desk_min_h(k) * (1.0 - 1e-12) => {
                Some(format!("h = {h} at k = {k} is below the desk cap 2pi/(10k)/4; pass --full"))
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunMeta {
    pub software: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub rhs: &'static str,
    pub initial_guess: &'static str,
    pub partition_of_unity: Option<&'static str>,
    pub warnings: Vec<String>,
    pub skipped: Vec<String>,
    pub seconds: BTreeMap<String, f64>,
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl RunMeta {
    fn new(config: &RunConfig) -> Self {
        Self {
            software: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config: config.clone(),
            rhs: RHS_KIND,
            initial_guess: INITIAL_GUESS,
            partition_of_unity: None,
            warnings: Vec::new(),
            skipped: Vec::new(),
            seconds: BTreeMap::new(),
            extra: BTreeMap::new(),
        }
    }
}

/// A CSV table plus its JSON sidecar. The CSV holds only deterministic
/// quantities; timings live in the sidecar.
#[derive(Clone, Debug)]
pub struct TableOutput {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub meta: RunMeta,
}

impl TableOutput {
    fn new(header: &[&str], meta: RunMeta) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), meta }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `table.csv` and `meta.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("table.csv"), self.csv_string()?)?;
        std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&self.meta)? + "\n")?;
        Ok(())
    }
}

fn s<T: fmt::Display>(v: T) -> String {
    v.to_string()
}

fn check_config(cfg: &RunConfig) -> Result<()> {
    if cfg.k.is_empty() || cfg.p.is_empty() || cfg.h_levels.is_empty() {
        return Err(Error::InvalidArgument("k, p and h-level lists must be non-empty".into()));
    }
    if let Some(k) = cfg.k.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(Error::InvalidArgument(format!("wavenumber must be positive, got {k}")));
    }
    Ok(())
}

fn guard_warning(meta: &mut RunMeta, cfg: &RunConfig, k: f64, h: f64, p: usize, diam: f64) {
    let g = guard_mesh_resolution(k, h, p, diam, cfg.guard_threshold);
    if !g.ok {
        meta.warnings.push(format!(
            "resolution guard: h^2p k^(2p+1) diam = {:.3e} > {} at k = {k}, h = {h:.5e}, p = {p}",
            g.quantity, g.threshold
        ));
    }
}

/// Iteration counts of one preconditioned solve configuration.
#[derive(Clone, Debug, Serialize)]
pub struct IterationCell {
    pub k: f64,
    pub p: usize,
    pub h_target: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub ndof: usize,
    pub n_subdomains: usize,
    pub richardson: SolveReport,
    pub gmres: SolveReport,
    pub setup_seconds: f64,
}

fn solve_counts(
    problem: &HelmholtzProblem,
    decomp: Decomposition,
    h_target: f64,
    tol: f64,
    maxit: usize,
) -> Result<IterationCell> {
    let t = Instant::now();
    let n_subdomains = decomp.len();
    let pou = build_pou(&problem.space, &decomp)?;
    let prec = build_preconditioner(problem, decomp, pou)?;
    let setup_seconds = t.elapsed().as_secs_f64();
    let rhs = plane_wave_load(&problem.space, problem.k);
    let u0 = vec![C64::zero(); problem.ndof()];
    let mesh = &problem.space.mesh;
    Ok(IterationCell {
        k: problem.k,
        p: problem.space.degree,
        h_target,
        h: mesh.dx(),
        nx: mesh.nx,
        ny: mesh.ny,
        ndof: problem.ndof(),
        n_subdomains,
        richardson: oras_richardson(problem, &prec, &rhs, &u0, tol, maxit),
        gmres: oras_gmres(problem, &prec, &rhs, &u0, tol, maxit),
        setup_seconds,
    })
}

/// Strip problem on `[0, length] × [0, 1]` with the grid snapped to the strip ends.
pub fn strip_problem(k: f64, p: usize, h_target: f64, length: f64, n: usize, overlap: f64) -> Result<HelmholtzProblem> {
    let domain = RectDomain::new(length, 1.0)?;
    let (nx, ny) = snap_resolution(domain, h_target, &strip_interfaces(length, n, overlap))?;
    assemble_global(k, build_space(build_uniform_mesh(domain, nx, ny)?, p)?)
}

/// Unit-square problem with the grid snapped to the checkerboard cuts.
pub fn checkerboard_problem(k: f64, p: usize, h_target: f64) -> Result<HelmholtzProblem> {
    let parts = checkerboard_parts(k);
    let cuts: Vec<f64> = (1..parts).map(|i| i as f64 / parts as f64).collect();
    let domain = RectDomain::unit_square();
    let (nx, ny) = snap_resolution(domain, h_target, &cuts)?;
    assemble_global(k, build_space(build_uniform_mesh(domain, nx, ny)?, p)?)
}

#[allow(clippy::too_many_arguments)]
pub fn strip_cell(
    k: f64,
    p: usize,
    h_target: f64,
    length: f64,
    n: usize,
    overlap: f64,
    tol: f64,
    maxit: usize,
) -> Result<IterationCell> {
    let problem = strip_problem(k, p, h_target, length, n, overlap)?;
    let decomp = strips(&problem.space, n, overlap)?;
    solve_counts(&problem, decomp, h_target, tol, maxit)
}

pub fn checkerboard_cell(k: f64, p: usize, h_target: f64, tol: f64, maxit: usize) -> Result<IterationCell> {
    let problem = checkerboard_problem(k, p, h_target)?;
    let decomp = checkerboard(&problem.space, k)?;
    solve_counts(&problem, decomp, h_target, tol, maxit)
}

fn cell_param(cfg: &RunConfig, level: u32, p: usize) -> String {
    match (cfg.h_levels.len() > 1, cfg.p.len() > 1) {
        (true, false) => format!("h={}", cfg.h_rule.label(level)),
        (false, true) => format!("p={p}"),
        _ => format!("h={};p={p}", cfg.h_rule.label(level)),
    }
}

fn iteration_table(cfg: &RunConfig, checker: bool) -> Result<TableOutput> {
    check_config(cfg)?;
    let mut meta = RunMeta::new(cfg);
    meta.partition_of_unity = Some(if checker { CHECKERBOARD_POU } else { STRIP_POU });
    let mut table = TableOutput::new(
        &[
            "k",
            "param",
            "value_richardson",
            "value_gmres",
            "converged_richardson",
            "converged_gmres",
            "h_target",
            "h",
            "p",
            "nx",
            "ny",
            "ndof",
            "n_subdomains",
            "overlap",
            "pou",
            "rhs",
        ],
        meta,
    );
    for &k in &cfg.k {
        for &p in &cfg.p {
            for &level in &cfg.h_levels {
                let h_target = cfg.h_rule.eval(k, level);
                let param = cell_param(cfg, level, p);
                if let Some(why) = cfg.desk_skip(k, Some(h_target)) {
                    table.meta.skipped.push(format!("k={k};{param}: {why}"));
                    continue;
                }
                let t = Instant::now();
                let (cell, overlap, diam) = if checker {
                    let c = checkerboard_cell(k, p, h_target, cfg.tolerance, cfg.max_iterations)?;
                    let radius = 0.25 / checkerboard_parts(k) as f64;
                    (c, radius, RectDomain::unit_square().diameter())
                } else {
                    let c = strip_cell(
                        k,
                        p,
                        h_target,
                        cfg.length,
                        cfg.n_subdomains,
                        cfg.overlap,
                        cfg.tolerance,
                        cfg.max_iterations,
                    )?;
                    (c, cfg.overlap, RectDomain::new(cfg.length, 1.0)?.diameter())
                };
                guard_warning(&mut table.meta, cfg, k, cell.h, p, diam);
                table.meta.seconds.insert(format!("k={k};{param}"), t.elapsed().as_secs_f64());
                table.push(vec![
                    s(k),
                    param,
                    s(cell.richardson.result.iterations),
                    s(cell.gmres.result.iterations),
                    s(cell.richardson.result.converged),
                    s(cell.gmres.result.converged),
                    s(h_target),
                    s(cell.h),
                    s(p),
                    s(cell.nx),
                    s(cell.ny),
                    s(cell.ndof),
                    s(cell.n_subdomains),
                    s(overlap),
                    s(if checker { "distance" } else { "ramp" }),
                    s("plane-wave"),
                ]);
            }
        }
    }
    Ok(table)
}

/// Richardson and GMRES iteration counts on overlapping strips.
pub fn run_strips(cfg: &RunConfig) -> Result<TableOutput> {
    iteration_table(cfg, false)
}

/// Iteration counts on the checkerboard decomposition of the unit square.
pub fn run_checkerboard(cfg: &RunConfig) -> Result<TableOutput> {
    iteration_table(cfg, true)
}

fn map_norms(setup: &CanonicalSetup, deltas: &[f64]) -> Result<[Vec<f64>; 2]> {
    let [mm, pm] = canonical_imp_maps(setup, deltas)?;
    let norms = |maps: Vec<_>| maps.iter().map(imp_map_norm).collect::<Result<Vec<f64>>>();
    Ok([norms(mm)?, norms(pm)?])
}

/// `|‖I^h‖ − ‖I^{h₀}‖|` for both canonical maps along a sequence of meshes.
pub fn run_impmap_convergence(cfg: &RunConfig) -> Result<TableOutput> {
    check_config(cfg)?;
    let mut table = TableOutput::new(
        &["k", "param", "direction", "norm", "norm_ref", "gap", "h_target", "h", "h_ref", "p", "delta", "length"],
        RunMeta::new(cfg),
    );
    let delta = [cfg.delta];
    for &k in &cfg.k {
        if let Some(why) = cfg.desk_skip(k, None) {
            table.meta.skipped.push(format!("k={k}: {why}"));
            continue;
        }
        for &p in &cfg.p {
            let t = Instant::now();
            let reference = CanonicalSetup::snapped(k, p, cfg.length, cfg.h_ref_rule.eval(k, 0), &delta)?;
            let ref_norms = map_norms(&reference, &delta)?;
            table.meta.seconds.insert(format!("k={k};p={p};reference"), t.elapsed().as_secs_f64());
            for &level in &cfg.h_levels {
                let t = Instant::now();
                let h_target = cfg.h_rule.eval(k, level);
                let setup = CanonicalSetup::snapped(k, p, cfg.length, h_target, &delta)?;
                let norms = map_norms(&setup, &delta)?;
                let label = cfg.h_rule.label(level);
                table.meta.seconds.insert(format!("k={k};p={p};h={label}"), t.elapsed().as_secs_f64());
                for dir in [MapDirection::PlusToMinus, MapDirection::MinusToMinus] {
                    let di = dir as usize;
                    let (n, r) = (norms[di][0], ref_norms[di][0]);
                    table.push(vec![
                        s(k),
                        format!("h={label}"),
                        s(dir.label()),
                        s(n),
                        s(r),
                        s((n - r).abs()),
                        s(h_target),
                        s(setup.cell_width()),
                        s(reference.cell_width()),
                        s(p),
                        s(cfg.delta),
                        s(cfg.length),
                    ]);
                }
            }
        }
    }
    Ok(table)
}

/// Labels and values of the output-line distances
/// `h, 2h, 4h, 1/4, 1/2, 3/4, L−4h, L−2h, L−h`.
pub fn delta_grid(length: f64, h: f64) -> Vec<(String, f64)> {
    vec![
        ("h".into(), h),
        ("2h".into(), 2.0 * h),
        ("4h".into(), 4.0 * h),
        ("1/4".into(), 0.25),
        ("1/2".into(), 0.5),
        ("3/4".into(), 0.75),
        ("L-4h".into(), length - 4.0 * h),
        ("L-2h".into(), length - 2.0 * h),
        ("L-h".into(), length - h),
    ]
}

/// Canonical map norms as the output line sweeps across the rectangle.
/// `h` in the δ grid is the snapped cell width.
pub fn run_impmap_delta(cfg: &RunConfig) -> Result<TableOutput> {
    check_config(cfg)?;
    let mut table = TableOutput::new(
        &["k", "param", "direction", "norm", "delta", "h_target", "h", "p", "length"],
        RunMeta::new(cfg),
    );
    for &k in &cfg.k {
        if let Some(why) = cfg.desk_skip(k, None) {
            table.meta.skipped.push(format!("k={k}: {why}"));
            continue;
        }
        for &p in &cfg.p {
            for &level in &cfg.h_levels {
                let t = Instant::now();
                let h_target = cfg.h_rule.eval(k, level);
                let fixed: Vec<f64> = [0.25, 0.5, 0.75].into_iter().filter(|&d| d < cfg.length).collect();
                let h = CanonicalSetup::snapped(k, p, cfg.length, h_target, &fixed)?.cell_width();
                let grid = delta_grid(cfg.length, h);
                let deltas: Vec<f64> = grid.iter().map(|g| g.1).collect();
                let setup = CanonicalSetup::snapped(k, p, cfg.length, h_target, &deltas)?;
                let norms = map_norms(&setup, &deltas)?;
                table.meta.seconds.insert(format!("k={k};p={p};h={}", cfg.h_rule.label(level)), t.elapsed().as_secs_f64());
                for dir in [MapDirection::PlusToMinus, MapDirection::MinusToMinus] {
                    for (i, (label, d)) in grid.iter().enumerate() {
                        table.push(vec![
                            s(k),
                            format!("delta={label}"),
                            s(dir.label()),
                            s(norms[dir as usize][i]),
                            s(d),
                            s(h_target),
                            s(setup.cell_width()),
                            s(p),
                            s(cfg.length),
                        ]);
                    }
                }
            }
        }
    }
    Ok(table)
}

/// `‖Tⁿ‖` in the impedance norm for `n = 1..=max_power` on overlapping strips.
pub fn run_tnorm(cfg: &RunConfig) -> Result<TableOutput> {
    check_config(cfg)?;
    let mut meta = RunMeta::new(cfg);
    meta.partition_of_unity = Some(STRIP_POU);
    let mut table = TableOutput::new(
        &["k", "param", "norm", "contracting", "h_target", "h", "p", "n_subdomains", "overlap", "pou"],
        meta,
    );
    let mut first = BTreeMap::new();
    for &k in &cfg.k {
        for &p in &cfg.p {
            for &level in &cfg.h_levels {
                let h_target = cfg.h_rule.eval(k, level);
                let key = format!("k={k};p={p};h={}", cfg.h_rule.label(level));
                if let Some(why) = cfg.desk_skip(k, Some(h_target)) {
                    table.meta.skipped.push(format!("{key}: {why}"));
                    continue;
                }
                let t = Instant::now();
                let problem = strip_problem(k, p, h_target, cfg.length, cfg.n_subdomains, cfg.overlap)?;
                let decomp = strips(&problem.space, cfg.n_subdomains, cfg.overlap)?;
                let pou = build_pou(&problem.space, &decomp)?;
                let prec = build_preconditioner(&problem, decomp, pou)?;
                let block = StripImpedance::new(&problem, &prec)?.block_operator()?;
                let norms = block.power_norms(cfg.max_power)?;
                table.meta.seconds.insert(key.clone(), t.elapsed().as_secs_f64());
                let contracting = norms.iter().position(|&v| v < 1.0).map(|i| i + 1);
                first.insert(key, serde_json::json!(contracting));
                for (i, v) in norms.iter().enumerate() {
                    table.push(vec![
                        s(k),
                        format!("n={}", i + 1),
                        s(v),
                        s(*v < 1.0),
                        s(h_target),
                        s(problem.space.mesh.dx()),
                        s(p),
                        s(cfg.n_subdomains),
                        s(cfg.overlap),
                        s("ramp"),
                    ]);
                }
            }
        }
    }
    table.meta.extra.insert("first_contracting_power".into(), serde_json::to_value(first)?);
    Ok(table)
}

pub fn run(cfg: &RunConfig) -> Result<TableOutput> {
    match cfg.experiment {
        Experiment::ImpmapConvergence => run_impmap_convergence(cfg),
        Experiment::ImpmapDelta => run_impmap_delta(cfg),
        Experiment::Strips => run_strips(cfg),
        Experiment::Checkerboard => run_checkerboard(cfg),
        Experiment::Tnorm => run_tnorm(cfg),
    }
}
