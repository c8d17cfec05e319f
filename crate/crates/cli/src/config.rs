//! Flat key-value experiment configuration.
//!
//! Grammar: a line is blank, a comment (# to end of line, anywhere), a
//! [section] header, or a key = value pair inside the current section.
//! Values are scalars (integer, decimal, rational p/q, bool, bare word) or
//! space-separated lists of scalars. Unknown sections, unknown keys, and
//! duplicate keys are rejected so a typo cannot silently disable a check.

use homog_core::coeffs::Preset;
use homog_core::rates::validate_dyadic;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Cell,
    Rates,
    Excess,
    Probes,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Cell => "cell",
            Kind::Rates => "rates",
            Kind::Excess => "excess",
            Kind::Probes => "probes",
        }
    }

    fn parse(s: &str) -> Option<Kind> {
        match s {
            "cell" => Some(Kind::Cell),
            "rates" => Some(Kind::Rates),
            "excess" => Some(Kind::Excess),
            "probes" => Some(Kind::Probes),
            _ => None,
        }
    }
}

/// One experiment, fully determined: preset, operator order, sweep,
/// resolutions, tolerances, output location, and the assertions that decide
/// the exit status.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    pub coercivity_trials: usize,
    pub preset: Preset,
    pub m: usize,
    pub n_cell: usize,
    pub nel_per_eps: usize,
    pub n_eval: usize,
    pub n_per_eps: usize,
    pub n_smooth: usize,
    pub eps: Vec<f64>,
    pub ps: Vec<f64>,
    pub r_holder: f64,
    pub families: Vec<String>,
    pub tol: f64,
    pub out_dir: PathBuf,
    /// (key, raw value) pairs from [assert], in file order.
    pub asserts: Vec<(String, String)>,
    /// Normalized (section, key, value) triples in file order, echoed into
    /// the manifest.
    pub echo: Vec<(String, String, String)>,
}

const SECTIONS: &[&str] = &[
    "experiment",
    "preset",
    "operator",
    "grid",
    "sweep",
    "tolerance",
    "output",
    "assert",
];

const FAMILIES: &[&str] = &["lipschitz", "reverse_holder", "smoothing", "energy"];

/// Scalar: plain f64, or a rational written p/q.
pub fn parse_scalar(s: &str) -> Result<f64, String> {
    if let Some((p, q)) = s.split_once('/') {
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| format!("bad rational numerator in `{s}`"))?;
        let q: f64 = q
            .trim()
            .parse()
            .map_err(|_| format!("bad rational denominator in `{s}`"))?;
        if q == 0.0 {
            return Err(format!("zero denominator in `{s}`"));
        }
        Ok(p / q)
    } else {
        s.parse().map_err(|_| format!("bad number `{s}`"))
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split_whitespace().map(parse_scalar).collect()
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse().map_err(|_| format!("bad integer `{s}`"))
}

struct Pairs {
    triples: Vec<(String, String, String)>,
}

impl Pairs {
    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.triples
            .iter()
            .find(|(s, k, _)| s == section && k == key)
            .map(|(_, _, v)| v.as_str())
    }

    fn section<'a>(&'a self, section: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.triples
            .iter()
            .filter(move |(s, _, _)| s == section)
            .map(|(_, k, v)| (k.as_str(), v.as_str()))
    }
}

fn tokenize(text: &str) -> Result<Pairs, String> {
    let mut triples = Vec::new();
    let mut section = String::new();
    for (lno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let lno = lno + 1;
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or(format!("line {lno}: unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(format!("line {lno}: unknown section [{name}]"));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(format!("line {lno}: expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        if section.is_empty() {
            return Err(format!("line {lno}: key `{key}` before any [section]"));
        }
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(format!("line {lno}: bad key `{key}`"));
        }
        if triples.iter().any(|(s, k, _)| s == &section && k == key) {
            return Err(format!("line {lno}: duplicate key `{key}` in [{section}]"));
        }
        triples.push((section.clone(), key.to_string(), value.to_string()));
    }
    Ok(Pairs { triples })
}

fn check_keys(pairs: &Pairs) -> Result<(), String> {
    let known: &[(&str, &[&str])] = &[
        ("experiment", &["kind", "seed", "coercivity_trials"]),
        (
            "preset",
            &["name", "d", "c", "a0", "a1", "contrast", "width"],
        ),
        ("operator", &["m"]),
        (
            "grid",
            &["n_cell", "nel_per_eps", "n_eval", "n_per_eps", "n_smooth"],
        ),
        ("sweep", &["eps", "ps", "r", "families"]),
        ("tolerance", &["solver"]),
        ("output", &["dir"]),
    ];
    for (section, key, _) in &pairs.triples {
        if section == "assert" {
            continue;
        }
        let allowed = known
            .iter()
            .find(|(s, _)| s == section)
            .map(|(_, keys)| *keys)
            .unwrap_or(&[]);
        if !allowed.contains(&key.as_str()) {
            return Err(format!("unknown key `{key}` in [{section}]"));
        }
    }
    Ok(())
}

fn build_preset(pairs: &Pairs) -> Result<Preset, String> {
    let name = pairs
        .get("preset", "name")
        .ok_or("missing required key `name` in [preset]")?;
    let num = |key: &str| -> Result<f64, String> {
        let v = pairs
            .get("preset", key)
            .ok_or(format!("preset `{name}` needs key `{key}` in [preset]"))?;
        parse_scalar(v)
    };
    let forbid = |keys: &[&str]| -> Result<(), String> {
        for (k, _) in pairs.section("preset") {
            if k != "name" && !keys.contains(&k) {
                return Err(format!("preset `{name}` does not take key `{k}`"));
            }
        }
        Ok(())
    };
    let preset = match name {
        "constant" => {
            forbid(&["d", "c"])?;
            let d = match pairs.get("preset", "d") {
                Some(v) => parse_usize(v)?,
                None => 1,
            };
            Preset::Constant { d, c: num("c")? }
        }
        "cosine_1d" => {
            forbid(&["a0", "a1"])?;
            Preset::Cosine1d {
                a0: num("a0")?,
                a1: num("a1")?,
            }
        }
        "laminate_2d" => {
            forbid(&["a0", "a1"])?;
            Preset::Laminate2d {
                a0: num("a0")?,
                a1: num("a1")?,
            }
        }
        "smoothed_checkerboard_2d" => {
            forbid(&["contrast", "width"])?;
            Preset::SmoothedCheckerboard2d {
                contrast: num("contrast")?,
                width: num("width")?,
            }
        }
        other => return Err(format!("unknown preset `{other}`")),
    };
    preset.validate().map_err(|e| e.to_string())?;
    Ok(preset)
}

fn check_asserts(kind: Kind, asserts: &[(String, String)]) -> Result<(), String> {
    let groups = ["u_minus_u0_L2", "u_minus_u0_W", "w_Hm_semi"];
    for (key, value) in asserts {
        let ok = match kind {
            Kind::Cell => matches!(key.as_str(), "a_bar_00" | "a_bar_tol" | "chi_max_below"),
            Kind::Rates => {
                key == "max_cert"
                    || ["min_slope_", "min_r2_"].iter().any(|prefix| {
                        key.strip_prefix(prefix).is_some_and(|rest| {
                            ["dirichlet_", "torus_"].iter().any(|exp| {
                                rest.strip_prefix(exp)
                                    .is_some_and(|g| groups.contains(&g))
                            })
                        })
                    })
            }
            Kind::Excess => {
                matches!(key.as_str(), "require_pass" | "require_halving" | "max_c_hat")
            }
            Kind::Probes => matches!(
                key.as_str(),
                "max_ratio_lipschitz"
                    | "max_ratio_reverse_holder"
                    | "max_ratio_energy"
                    | "max_smoothing_drift"
            ),
        };
        if !ok {
            return Err(format!(
                "unknown [assert] key `{key}` for kind `{}`",
                kind.name()
            ));
        }
        let boolean = key.starts_with("require_");
        if boolean {
            if value != "true" && value != "false" {
                return Err(format!("[assert] {key} must be true or false, got `{value}`"));
            }
        } else {
            parse_scalar(value).map_err(|e| format!("[assert] {key}: {e}"))?;
        }
    }
    Ok(())
}

/// Parse and validate a config. Every error is a config error (exit 2).
pub fn parse_str(text: &str) -> Result<ExperimentConfig, String> {
    let pairs = tokenize(text)?;
    check_keys(&pairs)?;

    let kind = {
        let raw = pairs
            .get("experiment", "kind")
            .ok_or("missing required key `kind` in [experiment]")?;
        Kind::parse(raw).ok_or(format!(
            "unknown kind `{raw}`; expected cell, rates, excess, or probes"
        ))?
    };
    let seed = match pairs.get("experiment", "seed") {
        Some(v) => v.parse().map_err(|_| format!("bad seed `{v}`"))?,
        None => 0,
    };
    let coercivity_trials = match pairs.get("experiment", "coercivity_trials") {
        Some(v) => parse_usize(v)?,
        None => 0,
    };
    let preset = build_preset(&pairs)?;
    let m = match pairs.get("operator", "m") {
        Some(v) => parse_usize(v)?,
        None => 1,
    };
    if !(1..=2).contains(&m) {
        return Err(format!("operator order m = {m} not supported; use 1 or 2"));
    }

    let grid_key = |key: &str, default: usize| -> Result<usize, String> {
        match pairs.get("grid", key) {
            Some(v) => parse_usize(v),
            None => Ok(default),
        }
    };
    let n_cell = grid_key("n_cell", 64)?;
    if n_cell < 4 || n_cell % 2 != 0 {
        return Err(format!("n_cell = {n_cell} must be even and at least 4"));
    }
    let nel_per_eps = grid_key("nel_per_eps", 64)?.max(1);
    let n_eval = grid_key("n_eval", 1024)?.max(2);
    let n_per_eps = grid_key("n_per_eps", 32)?;
    if n_per_eps < 16 {
        return Err(format!(
            "n_per_eps = {n_per_eps} is below the periodic resolution guard of 16 fine nodes per cell"
        ));
    }
    let n_smooth = grid_key("n_smooth", 256)?;
    if n_smooth < 4 || n_smooth % 2 != 0 {
        return Err(format!("n_smooth = {n_smooth} must be even and at least 4"));
    }

    let eps = match pairs.get("sweep", "eps") {
        Some(v) => parse_list(v)?,
        None => Vec::new(),
    };
    if kind != Kind::Cell && eps.is_empty() {
        return Err(format!("kind `{}` needs a nonempty eps list", kind.name()));
    }
    for &e in &eps {
        let ratio = 1.0 / e;
        if !(e > 0.0) || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(format!("eps = {e} must have integer 1/eps"));
        }
    }
    for pair in eps.windows(2) {
        if (pair[1] - pair[0] / 2.0).abs() > 1e-12 * pair[0] {
            return Err(format!(
                "eps list must decrease dyadically, got {} after {}",
                pair[1], pair[0]
            ));
        }
    }
    if kind == Kind::Rates {
        validate_dyadic(&eps).map_err(|e| e.to_string())?;
    }
    let ps = match pairs.get("sweep", "ps") {
        Some(v) => parse_list(v)?,
        None => vec![3.0, 4.0],
    };
    for &p in &ps {
        if p <= 2.0 {
            return Err(format!("reverse-Hoelder exponent {p} must exceed 2"));
        }
    }
    let r_holder = match pairs.get("sweep", "r") {
        Some(v) => parse_scalar(v)?,
        None => 0.25,
    };
    if !(0.0..=0.5).contains(&r_holder) || r_holder == 0.0 {
        return Err(format!("base radius r = {r_holder} must lie in (0, 1/2]"));
    }
    let families: Vec<String> = match pairs.get("sweep", "families") {
        Some(v) => v.split_whitespace().map(str::to_string).collect(),
        None => vec!["lipschitz".into(), "reverse_holder".into()],
    };
    for f in &families {
        if !FAMILIES.contains(&f.as_str()) {
            return Err(format!(
                "unknown probe family `{f}`; expected one of {FAMILIES:?}"
            ));
        }
    }

    let tol = match pairs.get("tolerance", "solver") {
        Some(v) => parse_scalar(v)?,
        None => 1e-9,
    };
    if !(tol > 0.0) {
        return Err(format!("solver tolerance {tol} must be positive"));
    }

    let out_dir = PathBuf::from(pairs.get("output", "dir").unwrap_or("out"));

    if kind == Kind::Excess && preset.dim() != 1 {
        return Err("excess experiments build 1D kernel solutions; use a 1D preset".into());
    }
    if kind == Kind::Probes
        && preset.dim() != 1
        && families.iter().any(|f| f == "lipschitz" || f == "reverse_holder")
    {
        return Err("lipschitz and reverse_holder probes build 1D kernel solutions; use a 1D preset".into());
    }

    let asserts: Vec<(String, String)> = pairs
        .section("assert")
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    check_asserts(kind, &asserts)?;

    Ok(ExperimentConfig {
        kind,
        seed,
        coercivity_trials,
        preset,
        m,
        n_cell,
        nel_per_eps,
        n_eval,
        n_per_eps,
        n_smooth,
        eps,
        ps,
        r_holder,
        families,
        tol,
        out_dir,
        asserts,
        echo: pairs.triples,
    })
}

/// Read and parse a config file.
pub fn load(path: &std::path::Path) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    parse_str(&text)
}
