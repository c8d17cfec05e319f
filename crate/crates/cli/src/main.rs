//! Experiment runner: cell solves, convergence-rate sweeps, excess-decay
//! certificates, and regularity probes, driven by a flat key-value config.
//!
//! Exit codes: 0 when the run and every [assert] in the config pass,
//! 1 when an assertion fails, 2 on a config error, 3 on a solver or output
//! failure. Each failure prints one machine-readable line on stderr. CSV
//! bodies are deterministic for a fixed config and seed; timestamps appear
//! only in the manifest.

mod config;

use clap::{Args, Parser, Subcommand};
use config::{parse_scalar, ExperimentConfig, Kind};
use homog_core::cache::{load_or_solve, write_atomic};
use homog_core::cellproblem::{default_max_iter, CorrectorSet};
use homog_core::coeffs::{coercivity_probe, sample};
use homog_core::excess::{certify_excess_decay, g_halving, ExcessReport};
use homog_core::probes::{
    dyadic_radii, energy_bound_sweep, lipschitz_sweep, reverse_holder_sweep,
    smoothing_constant_rows, ProbeRow,
};
use homog_core::rates::{
    dirichlet_rate_sweep, torus_rate_sweep, DirichletSweep, RateFit, RateReport, TorusSweep,
};
use homog_core::report::{excess_csv, fmt_f64, probes_csv, rates_csv, Manifest};
use homog_core::solvers::exact_kernel_solution_1d;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

const TAU: f64 = 2.0 * std::f64::consts::PI;

#[derive(Parser)]
#[command(name = "homog", version, about = "Periodic homogenization experiment runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the cell problem and report the homogenized tensor
    Cell(RunArgs),
    /// Convergence-rate sweeps against the homogenized limit
    Rates(RunArgs),
    /// Excess-decay certificates for kernel solutions
    Excess(RunArgs),
    /// Large-scale regularity and smoothing probes
    Probes(RunArgs),
    /// Parse and validate a config, then exit
    #[command(name = "validate-config")]
    ValidateConfig(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment config
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding [output] dir
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent sweep units
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Seed override, recorded in the manifest and used by randomized probes
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Config(String),
    Solver(String),
    Io(String),
    Assert(String),
}

impl From<homog_core::Error> for Failure {
    fn from(e: homog_core::Error) -> Self {
        Failure::Solver(e.to_string())
    }
}

impl Failure {
    fn exit(&self) -> (u8, &'static str, &str) {
        match self {
            Failure::Config(r) => (2, "config", r),
            Failure::Solver(r) => (3, "solver", r),
            Failure::Io(r) => (3, "io", r),
            Failure::Assert(r) => (1, "assert", r),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (expected, args) = match &cli.cmd {
        Cmd::Cell(a) => (Some(Kind::Cell), a),
        Cmd::Rates(a) => (Some(Kind::Rates), a),
        Cmd::Excess(a) => (Some(Kind::Excess), a),
        Cmd::Probes(a) => (Some(Kind::Probes), a),
        Cmd::ValidateConfig(a) => (None, a),
    };
    match dispatch(expected, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, kind, reason) = f.exit();
            let reason = reason.replace('\n', "; ").replace('"', "'");
            eprintln!("homog: exit={code} kind={kind} reason=\"{reason}\"");
            ExitCode::from(code)
        }
    }
}

fn dispatch(expected: Option<Kind>, args: &RunArgs) -> Result<(), Failure> {
    let mut cfg = config::load(&args.config).map_err(Failure::Config)?;
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let jobs = args.jobs.max(1);
    let Some(kind) = expected else {
        println!(
            "config ok: kind={} preset={} m={}",
            cfg.kind.name(),
            cfg.preset.key(),
            cfg.m
        );
        return Ok(());
    };
    if cfg.kind != kind {
        return Err(Failure::Config(format!(
            "config kind `{}` does not match subcommand `{}`",
            cfg.kind.name(),
            kind.name()
        )));
    }
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| {
        Failure::Io(format!(
            "cannot create output dir {}: {e}",
            cfg.out_dir.display()
        ))
    })?;
    match kind {
        Kind::Cell => run_cell(&cfg, jobs),
        Kind::Rates => run_rates(&cfg, jobs),
        Kind::Excess => run_excess(&cfg, jobs),
        Kind::Probes => run_probes(&cfg, jobs),
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn manifest_head(cfg: &ExperimentConfig, jobs: usize) -> Manifest {
    let mut man = Manifest::new();
    man.push("run", "kind", cfg.kind.name().to_string());
    man.push("run", "seed", cfg.seed.to_string());
    man.push("run", "jobs", jobs.to_string());
    man.push("run", "cli_version", env!("CARGO_PKG_VERSION").to_string());
    man.push("run", "core_version", homog_core::VERSION.to_string());
    man.push("run", "started_unix", unix_now().to_string());
    for (s, k, v) in &cfg.echo {
        man.push("config", &format!("{s}.{k}"), v.clone());
    }
    man
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    write_atomic(path, text.as_bytes())
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn finish(
    mut man: Manifest,
    t0: Instant,
    out_dir: &Path,
    failures: Vec<String>,
) -> Result<(), Failure> {
    man.push("run", "wall_ms", t0.elapsed().as_millis().to_string());
    man.push("run", "finished_unix", unix_now().to_string());
    write_text(&out_dir.join("manifest.txt"), &man.render())?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assert(failures.join("; ")))
    }
}

fn cache_cert(path: &Path) -> String {
    format!(
        "cell:{}",
        path.file_stem().and_then(|s| s.to_str()).unwrap_or("unknown")
    )
}

fn push_records(man: &mut Manifest, cert: &str, set: &CorrectorSet, hit: bool) {
    let source = if hit { "cache" } else { "solve" };
    man.push("certificates", &format!("{cert}.source"), source.to_string());
    for (i, rec) in set.records.iter().enumerate() {
        man.push(
            "certificates",
            &format!("{cert}.solve{i}"),
            format!(
                "gamma={} j={} adjoint={} iters={} rel_residual={:.3e}",
                rec.gamma, rec.j, rec.adjoint, rec.stats.iters, rec.stats.rel_residual
            ),
        );
    }
}

/// Tracks assertion outcomes; every key's verdict lands in the manifest and
/// failures decide the exit code.
struct Checker<'a> {
    asserts: &'a [(String, String)],
    outcomes: Vec<(String, String)>,
    failures: Vec<String>,
}

impl<'a> Checker<'a> {
    fn new(asserts: &'a [(String, String)]) -> Self {
        Checker {
            asserts,
            outcomes: Vec::new(),
            failures: Vec::new(),
        }
    }

    fn get_f64(&self, key: &str) -> Option<f64> {
        self.asserts
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| parse_scalar(v).expect("validated at parse time"))
    }

    fn get_flag(&self, key: &str) -> Option<bool> {
        self.asserts
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v == "true")
    }

    fn check(&mut self, key: &str, pass: bool, detail: String) {
        if pass {
            self.outcomes.push((key.to_string(), format!("pass ({detail})")));
        } else {
            self.outcomes.push((key.to_string(), format!("FAIL ({detail})")));
            self.failures.push(format!("{key}: {detail}"));
        }
    }

    fn into_failures(self, man: &mut Manifest) -> Vec<String> {
        for (k, v) in self.outcomes {
            man.push("asserts", &k, v);
        }
        self.failures
    }
}

/// Run f(0..n) on up to `jobs` scoped threads; results come back in index
/// order, so the output is independent of scheduling.
fn parallel_map<T, F>(n: usize, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Sync + Fn(usize) -> T,
{
    if jobs <= 1 || n <= 1 {
        return (0..n).map(&f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let done = std::sync::Mutex::new(Vec::with_capacity(n));
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let v = f(i);
                done.lock().unwrap().push((i, v));
            });
        }
    });
    let mut got = done.into_inner().unwrap();
    got.sort_by_key(|(i, _)| *i);
    got.into_iter().map(|(_, v)| v).collect()
}

fn run_cell(cfg: &ExperimentConfig, jobs: usize) -> Result<(), Failure> {
    let t0 = Instant::now();
    let a = sample(&cfg.preset, cfg.m, cfg.n_cell)?;
    let cache_dir = cfg.out_dir.join("cache");
    let (set, cache_path, hit) = load_or_solve(
        &cache_dir,
        &a,
        cfg.tol,
        default_max_iter(a.d, a.ngrid),
        false,
    )?;
    let cert = cache_cert(&cache_path);
    let mut man = manifest_head(cfg, jobs);
    man.push("cell", "preset", cfg.preset.key());
    man.push("cell", "d", a.d.to_string());
    man.push("cell", "m", cfg.m.to_string());
    man.push("cell", "n_cell", cfg.n_cell.to_string());
    man.push(
        "cell",
        "cache_file",
        cache_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    );
    push_records(&mut man, &cert, &set, hit);
    let na = a.nalpha();
    for ai in 0..na {
        for bi in 0..na {
            for i in 0..a.n {
                for j in 0..a.n {
                    man.push(
                        "results",
                        &format!("A_bar[{ai},{bi},{i},{j}]"),
                        fmt_f64(set.a_bar.get(ai, bi, i, j)),
                    );
                }
            }
        }
    }
    let chi_max = set.chi.iter().map(|c| c.max_abs()).fold(0.0, f64::max);
    man.push("results", "chi_max", fmt_f64(chi_max));
    if cfg.coercivity_trials > 0 {
        let mu_hat = coercivity_probe(&a, cfg.coercivity_trials, cfg.seed);
        man.push("results", "coercivity_mu_hat", fmt_f64(mu_hat));
    }
    let mut chk = Checker::new(&cfg.asserts);
    if let Some(v) = chk.get_f64("a_bar_00") {
        let tol = chk.get_f64("a_bar_tol").unwrap_or(1e-6);
        let got = set.a_bar.get(0, 0, 0, 0);
        chk.check(
            "a_bar_00",
            (got - v).abs() <= tol,
            format!("A_bar[0,0,0,0] = {} vs {v} within {tol}", fmt_f64(got)),
        );
    }
    if let Some(v) = chk.get_f64("chi_max_below") {
        chk.check(
            "chi_max_below",
            chi_max < v,
            format!("chi_max = {} vs bound {v}", fmt_f64(chi_max)),
        );
    }
    let failures = chk.into_failures(&mut man);
    finish(man, t0, &cfg.out_dir, failures)
}

fn find_fit<'a>(reports: &'a [RateReport], spec: &str) -> Option<&'a RateFit> {
    let (exp, group) = if let Some(g) = spec.strip_prefix("dirichlet_") {
        ("dirichlet", g)
    } else if let Some(g) = spec.strip_prefix("torus_") {
        ("torus", g)
    } else {
        return None;
    };
    reports
        .iter()
        .find(|r| r.experiment.starts_with(exp))
        .and_then(|r| r.fits.iter().find(|(name, _)| name == group))
        .map(|(_, fit)| fit)
}

fn run_rates(cfg: &ExperimentConfig, jobs: usize) -> Result<(), Failure> {
    let t0 = Instant::now();
    let a = sample(&cfg.preset, cfg.m, cfg.n_cell)?;
    let cache_dir = cfg.out_dir.join("cache");
    let (set, cache_path, hit) = load_or_solve(
        &cache_dir,
        &a,
        cfg.tol,
        default_max_iter(a.d, a.ngrid),
        false,
    )?;
    let cert = cache_cert(&cache_path);

    let tcfg = TorusSweep {
        m: cfg.m,
        eps_list: cfg.eps.clone(),
        n_per_eps: cfg.n_per_eps,
        tol: cfg.tol,
    };
    let mut reports: Vec<RateReport> = Vec::new();
    if a.d == 1 {
        let dcfg = DirichletSweep {
            preset: cfg.preset.clone(),
            m: cfg.m,
            eps_list: cfg.eps.clone(),
            nel_per_eps: cfg.nel_per_eps,
            n_eval: cfg.n_eval,
        };
        let results = parallel_map(2, jobs, |i| -> Result<RateReport, homog_core::Error> {
            if i == 0 {
                dirichlet_rate_sweep(&dcfg, &set, &|x| (TAU * x).sin())
            } else {
                torus_rate_sweep(&tcfg, &a, &set, &|x| (TAU * x[0]).sin())
            }
        });
        for r in results {
            reports.push(r?);
        }
    } else {
        reports.push(torus_rate_sweep(&tcfg, &a, &set, &|x| (TAU * x[0]).sin())?);
    }
    write_text(&cfg.out_dir.join("rates.csv"), &rates_csv(&reports))?;

    let mut man = manifest_head(cfg, jobs);
    push_records(&mut man, &cert, &set, hit);
    for rep in &reports {
        for (group, fit) in &rep.fits {
            let stem = format!("{}.{}", rep.experiment, group);
            man.push("fits", &format!("{stem}.slope"), fmt_f64(fit.slope));
            man.push("fits", &format!("{stem}.r2"), fmt_f64(fit.r2));
            man.push("fits", &format!("{stem}.intercept"), fmt_f64(fit.intercept));
        }
    }
    let mut chk = Checker::new(&cfg.asserts);
    for (key, raw) in &cfg.asserts {
        let bound = parse_scalar(raw).expect("validated at parse time");
        if key == "max_cert" {
            let worst = reports
                .iter()
                .flat_map(|r| &r.rows)
                .map(|row| row.cert.parse::<f64>().unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max);
            chk.check(
                key,
                worst <= bound,
                format!("worst row certificate {worst:.3e} vs bound {bound}"),
            );
        } else if let Some(spec) = key.strip_prefix("min_slope_") {
            match find_fit(&reports, spec) {
                Some(fit) => chk.check(
                    key,
                    fit.slope >= bound,
                    format!("slope {} vs floor {bound}", fmt_f64(fit.slope)),
                ),
                None => chk.check(key, false, "fit group not present in this run".into()),
            }
        } else if let Some(spec) = key.strip_prefix("min_r2_") {
            match find_fit(&reports, spec) {
                Some(fit) => chk.check(
                    key,
                    fit.r2 >= bound,
                    format!("r2 {} vs floor {bound}", fmt_f64(fit.r2)),
                ),
                None => chk.check(key, false, "fit group not present in this run".into()),
            }
        }
    }
    let failures = chk.into_failures(&mut man);
    finish(man, t0, &cfg.out_dir, failures)
}

fn run_excess(cfg: &ExperimentConfig, jobs: usize) -> Result<(), Failure> {
    let t0 = Instant::now();
    let m = cfg.m;
    let mut constants = vec![0.0; 2 * m];
    constants[0] = 1.0;
    let results = parallel_map(
        cfg.eps.len(),
        jobs,
        |i| -> Result<ExcessReport, homog_core::Error> {
            let eps = cfg.eps[i];
            let u = exact_kernel_solution_1d(&cfg.preset, eps, m, &constants, -1.25, 1.25, 64)?;
            let radii = dyadic_radii(eps);
            certify_excess_decay(&|x| u.eval(x, 0), eps, 0.0, m, &radii, &[0.125], 2.0)
        },
    );
    let mut reports = Vec::with_capacity(results.len());
    for r in results {
        reports.push(r?);
    }
    let u0 = |x: f64| x.powi(m as i32 + 1);
    let halving = g_halving(&u0, 0.0, m, &[0.5, 0.25, 0.125, 0.0625], 0.125, 2.0, 4096)?;

    let cert = "kernel_quad:npp=64";
    write_text(&cfg.out_dir.join("excess.csv"), &excess_csv(&reports, cert))?;

    let mut man = manifest_head(cfg, jobs);
    man.push(
        "certificates",
        &format!("{cert}.source"),
        "closed-form kernel solution, 64 quadrature nodes per eps-period".to_string(),
    );
    let mut c_hat_max = 0.0f64;
    for rep in &reports {
        man.push(
            "results",
            &format!("c_hat[eps={}]", fmt_f64(rep.eps)),
            fmt_f64(rep.c_hat),
        );
        if !rep.skipped.is_empty() {
            man.push(
                "results",
                &format!("skipped_radii[eps={}]", fmt_f64(rep.eps)),
                rep.skipped.len().to_string(),
            );
        }
        c_hat_max = c_hat_max.max(rep.c_hat);
    }
    man.push("results", "c_hat_max", fmt_f64(c_hat_max));
    for (i, (r, g_r, g_dr, pass)) in halving.iter().enumerate() {
        man.push(
            "halving",
            &format!("row{i}"),
            format!(
                "r={} g_r={} g_delta_r={} pass={}",
                fmt_f64(*r),
                fmt_f64(*g_r),
                fmt_f64(*g_dr),
                pass
            ),
        );
    }
    let mut chk = Checker::new(&cfg.asserts);
    if chk.get_flag("require_pass") == Some(true) {
        let bad = reports
            .iter()
            .flat_map(|r| &r.rows)
            .filter(|row| !row.pass)
            .count();
        chk.check("require_pass", bad == 0, format!("{bad} failing certificate rows"));
    }
    if chk.get_flag("require_halving") == Some(true) {
        let bad = halving.iter().filter(|(_, _, _, p)| !p).count();
        chk.check("require_halving", bad == 0, format!("{bad} failing halving rows"));
    }
    if let Some(v) = chk.get_f64("max_c_hat") {
        chk.check(
            "max_c_hat",
            c_hat_max <= v,
            format!("c_hat_max = {} vs bound {v}", fmt_f64(c_hat_max)),
        );
    }
    let failures = chk.into_failures(&mut man);
    finish(man, t0, &cfg.out_dir, failures)
}

fn max_over_min(values: &[f64]) -> Option<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &v in values {
        if !v.is_finite() || v <= 0.0 {
            return None;
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo.is_finite() && lo > 0.0 {
        Some(hi / lo)
    } else {
        None
    }
}

fn run_probes(cfg: &ExperimentConfig, jobs: usize) -> Result<(), Failure> {
    let t0 = Instant::now();
    let order = ["lipschitz", "reverse_holder", "smoothing", "energy"];
    let families: Vec<&str> = order
        .iter()
        .copied()
        .filter(|f| cfg.families.iter().any(|g| g == f))
        .collect();
    let results = parallel_map(
        families.len(),
        jobs,
        |i| -> Result<(Vec<ProbeRow>, String), homog_core::Error> {
            match families[i] {
                "lipschitz" => Ok((
                    lipschitz_sweep(&cfg.preset, cfg.m, &cfg.eps)?,
                    "kernel_quad:npp=64".to_string(),
                )),
                "reverse_holder" => Ok((
                    reverse_holder_sweep(&cfg.preset, cfg.m, &cfg.eps, &cfg.ps, cfg.r_holder)?,
                    "kernel_quad:npp=64".to_string(),
                )),
                "smoothing" => {
                    let mut rows = smoothing_constant_rows(cfg.n_smooth, &cfg.eps)?;
                    rows.extend(smoothing_constant_rows(2 * cfg.n_smooth, &cfg.eps)?);
                    Ok((rows, "spectral".to_string()))
                }
                _ => {
                    let a = sample(&cfg.preset, cfg.m, cfg.n_cell)?;
                    Ok((
                        energy_bound_sweep(&a, &cfg.eps, cfg.n_per_eps, cfg.tol)?,
                        format!("krylov:tol={:e}", cfg.tol),
                    ))
                }
            }
        },
    );
    let mut csv = probes_csv(&[], "");
    let mut collected: Vec<(&str, Vec<ProbeRow>, String)> = Vec::new();
    for (fam, res) in families.iter().zip(results) {
        let (rows, cert) = res?;
        let body = probes_csv(&rows, &cert);
        if let Some((_, rest)) = body.split_once('\n') {
            csv.push_str(rest);
        }
        collected.push((fam, rows, cert));
    }
    write_text(&cfg.out_dir.join("probes.csv"), &csv)?;

    let mut man = manifest_head(cfg, jobs);
    for (fam, _, cert) in &collected {
        man.push("certificates", &format!("{fam}.cert"), cert.clone());
    }
    let rows_of = |fam: &str| -> Option<&Vec<ProbeRow>> {
        collected
            .iter()
            .find(|(f, _, _)| *f == fam)
            .map(|(_, rows, _)| rows)
    };

    let lipschitz_ratio = rows_of("lipschitz").and_then(|rows| {
        let sups: Vec<f64> = rows
            .iter()
            .filter(|r| r.probe == "lipschitz_sup")
            .map(|r| r.value)
            .collect();
        max_over_min(&sups)
    });
    if let Some(v) = lipschitz_ratio {
        man.push("results", "lipschitz_sup_ratio", fmt_f64(v));
    }
    let holder_ratio = rows_of("reverse_holder").and_then(|rows| {
        let mut worst: Option<f64> = None;
        for &p in &cfg.ps {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.probe == "reverse_holder" && r.p_or_r == p)
                .map(|r| r.value)
                .collect();
            let ratio = max_over_min(&vals)?;
            worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
        }
        worst
    });
    if let Some(v) = holder_ratio {
        man.push("results", "reverse_holder_ratio", fmt_f64(v));
    }
    let energy_ratio = rows_of("energy").and_then(|rows| {
        let vals: Vec<f64> = rows.iter().map(|r| r.value).collect();
        max_over_min(&vals)
    });
    if let Some(v) = energy_ratio {
        man.push("results", "energy_bound_ratio", fmt_f64(v));
    }
    let smoothing_drift = rows_of("smoothing").and_then(|rows| {
        let mut worst = 0.0f64;
        for row in rows.iter().filter(|r| r.p_or_r == cfg.n_smooth as f64) {
            let fine = rows.iter().find(|r| {
                r.probe == row.probe
                    && r.eps == row.eps
                    && r.p_or_r == 2.0 * cfg.n_smooth as f64
            })?;
            if row.value <= 0.0 {
                return None;
            }
            worst = worst.max((fine.value - row.value).abs() / row.value);
        }
        Some(worst)
    });
    if let Some(v) = smoothing_drift {
        man.push("results", "smoothing_drift", fmt_f64(v));
    }

    let mut chk = Checker::new(&cfg.asserts);
    let ratio_checks: [(&str, Option<f64>); 3] = [
        ("max_ratio_lipschitz", lipschitz_ratio),
        ("max_ratio_reverse_holder", holder_ratio),
        ("max_ratio_energy", energy_ratio),
    ];
    for (key, measured) in ratio_checks {
        if let Some(bound) = chk.get_f64(key) {
            match measured {
                Some(v) => chk.check(
                    key,
                    v <= bound,
                    format!("max/min = {} vs bound {bound}", fmt_f64(v)),
                ),
                None => chk.check(key, false, "probe family not enabled or degenerate".into()),
            }
        }
    }
    if let Some(bound) = chk.get_f64("max_smoothing_drift") {
        match smoothing_drift {
            Some(v) => chk.check(
                "max_smoothing_drift",
                v <= bound,
                format!("relative drift {} vs bound {bound}", fmt_f64(v)),
            ),
            None => chk.check(
                "max_smoothing_drift",
                false,
                "smoothing family not enabled or degenerate".into(),
            ),
        }
    }
    let failures = chk.into_failures(&mut man);
    finish(man, t0, &cfg.out_dir, failures)
}
