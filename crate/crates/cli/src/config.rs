//! Experiment configuration files.
//!
//! A config is a TOML document with optional top-level `recipe` and `seed`
//! keys and one table per parameter block. Unknown keys are rejected. The
//! grammar, defaults and units are documented in `CONFIG.md`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use latticeflux_core::{bath_occupation, Statistics};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    Figure2,
    SizeScan,
    ModeTable,
    JwVerify,
    LadderCtplot,
    SubspaceCheck,
    OracleCompare,
}

impl Recipe {
    pub const ALL: [Recipe; 7] = [
        Recipe::Figure2,
        Recipe::SizeScan,
        Recipe::ModeTable,
        Recipe::JwVerify,
        Recipe::LadderCtplot,
        Recipe::SubspaceCheck,
        Recipe::OracleCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::Figure2 => "figure2",
            Recipe::SizeScan => "size-scan",
            Recipe::ModeTable => "mode-table",
            Recipe::JwVerify => "jw-verify",
            Recipe::LadderCtplot => "ladder-ctplot",
            Recipe::SubspaceCheck => "subspace-check",
            Recipe::OracleCompare => "oracle-compare",
        }
    }

    /// Parameter tables the recipe reads; any other table is an error.
    pub fn sections(self) -> &'static [&'static str] {
        match self {
            Recipe::Figure2 => &["figure2"],
            Recipe::SizeScan => &["lattice", "baths", "scan"],
            Recipe::ModeTable => &["lattice", "baths"],
            Recipe::JwVerify | Recipe::SubspaceCheck => &["ladder"],
            Recipe::LadderCtplot => &["ladder", "dynamics"],
            Recipe::OracleCompare => &["oracle", "baths"],
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Recipe {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Recipe::ALL.into_iter().find(|r| r.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Recipe::ALL.iter().map(|r| r.name()).collect();
            format!("unknown recipe `{s}`; expected one of: {}", names.join(", "))
        })
    }
}

/// One or more problems, each prefixed with the offending key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl ConfigError {
    fn single(msg: impl Into<String>) -> Self {
        Self {
            problems: vec![msg.into()],
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.problems.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Default)]
struct Problems(Vec<String>);

impl Problems {
    fn push(&mut self, key: &str, msg: impl fmt::Display) {
        self.0.push(format!("{key}: {msg}"));
    }

    fn check(&mut self, ok: bool, key: &str, msg: impl fmt::Display) {
        if !ok {
            self.push(key, msg);
        }
    }

    fn positive(&mut self, key: &str, v: f64) {
        self.check(v > 0.0 && v.is_finite(), key, format_args!("must be positive and finite, got {v}"));
    }

    fn non_negative(&mut self, key: &str, v: f64) {
        self.check(v >= 0.0 && v.is_finite(), key, format_args!("must be >= 0 and finite, got {v}"));
    }

    fn finite(&mut self, key: &str, v: f64) {
        self.check(v.is_finite(), key, format_args!("must be finite, got {v}"));
    }

    fn finish(self) -> Result<(), ConfigError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { problems: self.0 })
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure2: Option<Figure2Section>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baths: Option<BathSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<LadderSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Stamp CSV headers with the wall-clock time. Off by default so that
    /// reruns are byte-identical.
    pub timestamp: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Figure2Section {
    pub omega: f64,
    pub g: f64,
    pub gamma: f64,
    pub t_cold: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    /// Chain length for the numeric cross-check; 0 turns it off.
    pub numeric_length: usize,
}

impl Default for Figure2Section {
    fn default() -> Self {
        Self {
            omega: 10.0,
            g: 0.01,
            gamma: 0.01,
            t_cold: 0.001,
            t_min: 1.0,
            t_max: 1e4,
            points: 81,
            numeric_length: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    pub statistics: Statistics,
    pub dims: Vec<usize>,
    pub omega: f64,
    pub couplings: Vec<f64>,
    /// Width of the uniform on-site disorder along the transport axis.
    pub disorder_width: f64,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self {
            statistics: Statistics::Fermion,
            dims: vec![8],
            omega: 1.0,
            couplings: vec![1.0],
            disorder_width: 0.0,
        }
    }
}

/// Either an occupation or a temperature per bath; temperatures are turned
/// into Bose-Einstein occupations at the lattice frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathSection {
    pub gamma_in: f64,
    pub gamma_out: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occ_in: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occ_out: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_in: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_out: Option<f64>,
}

impl Default for BathSection {
    fn default() -> Self {
        Self {
            gamma_in: 1.0,
            gamma_out: 1.0,
            occ_in: None,
            occ_out: None,
            t_in: None,
            t_out: None,
        }
    }
}

impl BathSection {
    pub fn spec(&self) -> latticeflux_core::BathSpec {
        latticeflux_core::BathSpec {
            gamma_in: self.gamma_in,
            gamma_out: self.gamma_out,
            occ_in: self.occ_in.expect("normalized"),
            occ_out: self.occ_out.expect("normalized"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub min_length: usize,
    pub max_length: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            min_length: 2,
            max_length: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    #[default]
    Standard,
    SigmaZ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rungs: Option<Vec<usize>>,
    pub omega: f64,
    pub g_rung: f64,
    pub g_leg: f64,
    pub convention: Convention,
}

impl Default for LadderSection {
    fn default() -> Self {
        Self {
            rungs: None,
            omega: 1.0,
            g_rung: 1.0,
            g_leg: 1.0,
            convention: Convention::Standard,
        }
    }
}

impl LadderSection {
    pub fn rungs(&self) -> &[usize] {
        self.rungs.as_deref().expect("normalized")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    Single,
    #[default]
    TwoExciton,
    ThreeExciton,
    FourExciton,
    Pattern,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expect {
    #[default]
    Ballistic,
    NonBallistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    pub state: InitialState,
    /// Relative phase of the two- and four-exciton states, in units of pi.
    pub phi_over_pi: f64,
    /// Rung letters `S T O I`, centred on the ladder; `state = "pattern"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    pub dt: f64,
    pub t_max: f64,
    pub window: [f64; 2],
    pub expect: Expect,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self {
            state: InitialState::TwoExciton,
            phi_over_pi: 1.0,
            pattern: None,
            dt: 0.01,
            t_max: 6.0,
            window: [0.5, 6.0],
            expect: Expect::Ballistic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub lengths: Vec<usize>,
    pub omega: f64,
    pub g: f64,
    pub boson_length: usize,
    pub n_max: Vec<usize>,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            lengths: vec![2, 3],
            omega: 1.3,
            g: 0.8,
            boson_length: 2,
            n_max: vec![8, 12, 16],
        }
    }
}

/// Largest number of sites for a dense steady-state solve.
pub const MAX_STEADY_SITES: usize = 2000;
/// Largest boson truncation the oracle accepts.
const MAX_N_MAX: usize = 24;

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::single(e.to_string().trim_end().to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        let inner = inner.trim_end();
        if path == "." || path.is_empty() {
            ConfigError::single(inner.to_string())
        } else {
            ConfigError::single(format!("{path}: {inner}"))
        }
    })
}

pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::single(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

/// Picks the recipe from the command line and/or the `recipe` key; they
/// must agree when both are given.
pub fn resolve_recipe(cfg: &ExperimentConfig, requested: Option<Recipe>) -> Result<Recipe, ConfigError> {
    let named = cfg
        .recipe
        .as_deref()
        .map(|s| s.parse::<Recipe>().map_err(|e| ConfigError::single(format!("recipe: {e}"))))
        .transpose()?;
    match (requested, named) {
        (Some(r), Some(n)) if r != n => Err(ConfigError::single(format!(
            "recipe: config is for `{n}` but `{r}` was requested"
        ))),
        (Some(r), _) | (None, Some(r)) => Ok(r),
        (None, None) => Err(ConfigError::single(
            "recipe: missing; set `recipe = \"...\"` or name the recipe on the command line",
        )),
    }
}

fn section_present(cfg: &ExperimentConfig, name: &str) -> bool {
    match name {
        "figure2" => cfg.figure2.is_some(),
        "lattice" => cfg.lattice.is_some(),
        "baths" => cfg.baths.is_some(),
        "scan" => cfg.scan.is_some(),
        "ladder" => cfg.ladder.is_some(),
        "dynamics" => cfg.dynamics.is_some(),
        "oracle" => cfg.oracle.is_some(),
        _ => false,
    }
}

const SECTIONS: [&str; 7] = ["figure2", "lattice", "baths", "scan", "ladder", "dynamics", "oracle"];

/// Fills defaults for `recipe`, resolves temperatures and checks every
/// value. The result has `recipe` and `seed` set and exactly the tables the
/// recipe reads.
pub fn normalize(
    cfg: &ExperimentConfig,
    recipe: Recipe,
    seed_override: Option<u64>,
) -> Result<ExperimentConfig, ConfigError> {
    let mut p = Problems::default();
    for name in SECTIONS {
        if section_present(cfg, name) && !recipe.sections().contains(&name) {
            p.push(name, format_args!("table is not used by recipe `{recipe}`"));
        }
    }
    let uses = |name: &str| recipe.sections().contains(&name);
    let mut out = ExperimentConfig {
        recipe: Some(recipe.name().to_string()),
        seed: Some(seed_override.or(cfg.seed).unwrap_or(0)),
        output: cfg.output.clone(),
        ..Default::default()
    };

    if uses("figure2") {
        let f = cfg.figure2.clone().unwrap_or_default();
        check_figure2(&f, &mut p);
        out.figure2 = Some(f);
    }
    if uses("lattice") {
        let l = cfg.lattice.clone().unwrap_or_default();
        check_lattice(&l, recipe, &mut p);
        out.lattice = Some(l);
    }
    if uses("scan") {
        let s = cfg.scan.clone().unwrap_or_default();
        check_scan(&s, out.lattice.as_ref(), &mut p);
        out.scan = Some(s);
    }
    if uses("oracle") {
        let o = cfg.oracle.clone().unwrap_or_default();
        check_oracle(&o, &mut p);
        out.oracle = Some(o);
    }
    if uses("baths") {
        let omega = match recipe {
            Recipe::OracleCompare => out.oracle.as_ref().map(|o| o.omega),
            _ => out.lattice.as_ref().map(|l| l.omega),
        }
        .unwrap_or(1.0);
        let mut b = cfg.baths.clone().unwrap_or_default();
        resolve_baths(&mut b, omega, &mut p);
        if recipe == Recipe::OracleCompare {
            for (key, v) in [("baths.occ_in", b.occ_in), ("baths.occ_out", b.occ_out)] {
                if let Some(v) = v {
                    p.check(v <= 0.5, key, format_args!("the truncated boson comparison needs occupations <= 0.5, got {v}"));
                }
            }
        }
        out.baths = Some(b);
    }
    if uses("ladder") {
        let mut l = cfg.ladder.clone().unwrap_or_default();
        let default_rungs = match recipe {
            Recipe::JwVerify => vec![2, 3, 4],
            Recipe::SubspaceCheck => vec![3, 4, 5],
            _ => vec![31],
        };
        l.rungs.get_or_insert(default_rungs);
        check_ladder(&l, recipe, &mut p);
        out.ladder = Some(l);
    }
    if uses("dynamics") {
        let d = cfg.dynamics.clone().unwrap_or_default();
        check_dynamics(&d, out.ladder.as_ref(), &mut p);
        out.dynamics = Some(d);
    }
    p.finish()?;
    Ok(out)
}

fn check_figure2(f: &Figure2Section, p: &mut Problems) {
    p.positive("figure2.omega", f.omega);
    p.finite("figure2.g", f.g);
    p.non_negative("figure2.gamma", f.gamma);
    p.positive("figure2.t_cold", f.t_cold);
    p.positive("figure2.t_min", f.t_min);
    p.positive("figure2.t_max", f.t_max);
    p.check(f.t_min < f.t_max, "figure2.t_max", format_args!("must exceed t_min = {}", f.t_min));
    p.check(f.points >= 3, "figure2.points", format_args!("need at least 3 points, got {}", f.points));
    p.check(
        f.numeric_length == 0 || f.numeric_length <= MAX_STEADY_SITES,
        "figure2.numeric_length",
        format_args!("must be 0 (off) or at most {MAX_STEADY_SITES}"),
    );
}

fn check_lattice(l: &LatticeSection, recipe: Recipe, p: &mut Problems) {
    if l.statistics == Statistics::Spin {
        p.push("lattice.statistics", "must be `fermion` or `boson`");
    }
    p.check(!l.dims.is_empty(), "lattice.dims", "must list at least one dimension");
    for (i, &n) in l.dims.iter().enumerate() {
        p.check(n >= 1, &format!("lattice.dims[{i}]"), "must be at least 1");
    }
    p.check(
        l.couplings.len() == l.dims.len(),
        "lattice.couplings",
        format_args!("needs one entry per dimension ({}), got {}", l.dims.len(), l.couplings.len()),
    );
    for (i, &g) in l.couplings.iter().enumerate() {
        p.finite(&format!("lattice.couplings[{i}]"), g);
    }
    p.finite("lattice.omega", l.omega);
    p.non_negative("lattice.disorder_width", l.disorder_width);
    if recipe == Recipe::ModeTable {
        p.check(l.disorder_width == 0.0, "lattice.disorder_width", "mode-table needs a uniform lattice");
        let sites: usize = l.dims.iter().product();
        p.check(
            sites <= MAX_STEADY_SITES,
            "lattice.dims",
            format_args!("{sites} sites exceed the dense limit of {MAX_STEADY_SITES}"),
        );
    }
}

fn check_scan(s: &ScanSection, lattice: Option<&LatticeSection>, p: &mut Problems) {
    p.check(s.min_length >= 1, "scan.min_length", "must be at least 1");
    p.check(
        s.max_length > s.min_length,
        "scan.max_length",
        format_args!("must exceed min_length = {}", s.min_length),
    );
    if let Some(l) = lattice {
        let transverse: usize = l.dims.iter().rev().skip(1).product();
        let sites = transverse * s.max_length;
        p.check(
            sites <= MAX_STEADY_SITES,
            "scan.max_length",
            format_args!("{sites} sites exceed the dense limit of {MAX_STEADY_SITES}"),
        );
    }
}

fn check_oracle(o: &OracleSection, p: &mut Problems) {
    p.check(!o.lengths.is_empty(), "oracle.lengths", "must list at least one chain length");
    for (i, &n) in o.lengths.iter().enumerate() {
        p.check((1..=5).contains(&n), &format!("oracle.lengths[{i}]"), format_args!("must be in 1..=5, got {n}"));
    }
    p.positive("oracle.omega", o.omega);
    p.finite("oracle.g", o.g);
    p.check((1..=3).contains(&o.boson_length), "oracle.boson_length", "must be in 1..=3");
    p.check(o.n_max.len() >= 2, "oracle.n_max", "need at least two cutoffs to judge convergence");
    for (i, &n) in o.n_max.iter().enumerate() {
        p.check((1..=MAX_N_MAX).contains(&n), &format!("oracle.n_max[{i}]"), format_args!("must be in 1..={MAX_N_MAX}"));
    }
    p.check(o.n_max.windows(2).all(|w| w[0] < w[1]), "oracle.n_max", "must be strictly increasing");
}

fn resolve_baths(b: &mut BathSection, omega: f64, p: &mut Problems) {
    p.non_negative("baths.gamma_in", b.gamma_in);
    p.non_negative("baths.gamma_out", b.gamma_out);
    let sides = [
        ("in", b.occ_in, b.t_in, 1.0),
        ("out", b.occ_out, b.t_out, 0.0),
    ];
    let mut resolved = [0.0; 2];
    for (k, (side, occ, t, default)) in sides.into_iter().enumerate() {
        resolved[k] = match (occ, t) {
            (Some(_), Some(_)) => {
                p.push(&format!("baths.t_{side}"), format_args!("give either occ_{side} or t_{side}, not both"));
                default
            }
            (Some(n), None) => {
                p.non_negative(&format!("baths.occ_{side}"), n);
                n
            }
            (None, Some(t)) => match bath_occupation(omega, t) {
                Ok(n) => n,
                Err(e) => {
                    p.push(&format!("baths.t_{side}"), e);
                    default
                }
            },
            (None, None) => default,
        };
    }
    b.occ_in = Some(resolved[0]);
    b.occ_out = Some(resolved[1]);
}

fn check_ladder(l: &LadderSection, recipe: Recipe, p: &mut Problems) {
    let rungs = l.rungs();
    p.check(!rungs.is_empty(), "ladder.rungs", "must list at least one length");
    let (lo, hi) = match recipe {
        Recipe::JwVerify => (1, 7),
        Recipe::SubspaceCheck => (2, 8),
        _ => (2, 32),
    };
    for (i, &r) in rungs.iter().enumerate() {
        p.check(
            (lo..=hi).contains(&r),
            &format!("ladder.rungs[{i}]"),
            format_args!("must be in {lo}..={hi} for `{recipe}`, got {r}"),
        );
    }
    if recipe == Recipe::LadderCtplot {
        p.check(rungs.len() == 1, "ladder.rungs", "ladder-ctplot runs exactly one length");
    }
    p.finite("ladder.omega", l.omega);
    p.finite("ladder.g_rung", l.g_rung);
    p.finite("ladder.g_leg", l.g_leg);
}

/// Rung letters of a pattern string.
pub fn parse_pattern(s: &str) -> Result<Vec<latticeflux_core::dynamics::RungState>, String> {
    use latticeflux_core::dynamics::RungState;
    s.chars()
        .map(|c| match c.to_ascii_uppercase() {
            'S' => Ok(RungState::S),
            'T' => Ok(RungState::T),
            'O' => Ok(RungState::O),
            'I' => Ok(RungState::I),
            other => Err(format!("unknown rung letter `{other}`; use S, T, O or I")),
        })
        .collect()
}

/// Rungs occupied by the centred initial state.
fn state_width(d: &DynamicsSection) -> usize {
    match d.state {
        InitialState::Single => 1,
        InitialState::TwoExciton => 2,
        InitialState::ThreeExciton => 5,
        InitialState::FourExciton => 4,
        InitialState::Pattern => d.pattern.as_deref().map_or(0, |s| s.chars().count()),
    }
}

fn check_dynamics(d: &DynamicsSection, ladder: Option<&LadderSection>, p: &mut Problems) {
    p.positive("dynamics.dt", d.dt);
    p.positive("dynamics.t_max", d.t_max);
    p.check(d.t_max >= 2.0 * d.dt, "dynamics.t_max", "must cover at least two time steps");
    p.finite("dynamics.phi_over_pi", d.phi_over_pi);
    p.check(
        d.window[0] >= 0.0 && d.window[0] < d.window[1],
        "dynamics.window",
        format_args!("must be [start, end] with 0 <= start < end, got {:?}", d.window),
    );
    match (d.state, &d.pattern) {
        (InitialState::Pattern, None) => p.push("dynamics.pattern", "required when state = \"pattern\""),
        (InitialState::Pattern, Some(s)) => match parse_pattern(s) {
            Ok(v) if v.iter().all(|r| r.excitations() == 0) => {
                p.push("dynamics.pattern", "needs at least one excitation")
            }
            Ok(_) => {}
            Err(e) => p.push("dynamics.pattern", e),
        },
        (_, Some(_)) => p.push("dynamics.pattern", "only used with state = \"pattern\""),
        _ => {}
    }
    if let Some(r) = ladder.and_then(|l| l.rungs.as_ref()).and_then(|r| r.first()) {
        let w = state_width(d);
        p.check(
            w + 2 <= *r,
            "ladder.rungs",
            format_args!("{r} rungs leave no empty boundary rung around the {w}-rung initial state"),
        );
    }
}
