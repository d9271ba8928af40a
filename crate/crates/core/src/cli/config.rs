//! Flat `key = value` run configuration.
//!
//! ```text
//! # comment
//! [model]
//! a = 2
//! alpha = 0.5
//! [initial]
//! u = cosine(1, 0.2) + gaussian(3.14, 0.3, 0.1)
//! ```
//!
//! A `[section]` header prefixes the keys that follow it, so the block above
//! sets `model.a`, `model.alpha` and `initial.u`. Fully dotted keys work
//! anywhere. Later assignments win.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eulerian::RhsForm;
use crate::model::{Branch, InitialCondition, ModelParams};
use crate::timestepper::{FormulationKind, Scheme, StepControl};

/// Every recognised key with its default value.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("model.a", "2"),
    ("model.alpha", "0"),
    ("model.kappa", "1"),
    ("model.branch", "right"),
    ("grid.n", "256"),
    ("time.t_final", "1"),
    ("time.dt", "0.001"),
    ("time.scheme", "rk4"),
    ("time.snapshot_every", "0.1"),
    ("control.abs_tol", "1e-8"),
    ("control.rel_tol", "1e-8"),
    ("control.dt_min", "1e-12"),
    ("control.max_ux", "1e6"),
    ("control.resolution_tol", "1e-4"),
    ("run.formulation", "eulerian"),
    ("run.rhs_form", "u_form"),
    ("run.track_flowmap", "false"),
    ("run.seed", "0"),
    ("initial.u", "cosine(1, 0.1)"),
    ("initial.rho", "constant(1)"),
    ("output.dir", "out"),
    ("compare.threshold", "1e-6"),
];

/// Raw assignments, keyed by dotted name, with the source line when known.
#[derive(Debug, Clone, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, (String, Option<usize>)>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                    line,
                    message: format!("unterminated section header `{content}`"),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config { line, message: "empty key".into() });
            }
            let full = if section.is_empty() || key.contains('.') {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if !is_known(&full) {
                return Err(Error::Config { line, message: format!("unknown key `{full}`") });
            }
            map.entries.insert(full, (value.trim().to_string(), Some(line)));
        }
        Ok(map)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !is_known(key) {
            return Err(Error::ConfigField { key: key.into(), message: "unknown key".into() });
        }
        self.entries.insert(key.into(), (value.into(), None));
        Ok(())
    }

    /// Applies `--dotted.key=value` overrides.
    pub fn apply_overrides(&mut self, overrides: &[(String, String)]) -> Result<()> {
        for (k, v) in overrides {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        match self.entries.get(key) {
            Some((v, _)) => v,
            None => default_of(key),
        }
    }

    fn field_error(&self, key: &str, message: String) -> Error {
        match self.entries.get(key) {
            Some((_, Some(line))) => Error::Config { line: *line, message: format!("`{key}`: {message}") },
            _ => Error::ConfigField { key: key.into(), message },
        }
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .parse::<T>()
            .map_err(|e| self.field_error(key, format!("cannot parse `{}`: {e}", self.get(key))))
    }
}

fn is_known(key: &str) -> bool {
    DEFAULTS.iter().any(|(k, _)| *k == key)
}

fn default_of(key: &str) -> &'static str {
    DEFAULTS
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .expect("lookup of an unknown key")
}

/// Splits `--dotted.key=value` arguments off an argument list.
pub fn extract_overrides(args: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for arg in args {
        let dotted = arg
            .strip_prefix("--")
            .and_then(|s| s.split_once('='))
            .filter(|(k, _)| k.contains('.'));
        match dotted {
            Some((k, v)) => overrides.push((k.to_string(), v.to_string())),
            None => rest.push(arg),
        }
    }
    (rest, overrides)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub branch: Branch,
    pub grid_n: usize,
    pub t_final: f64,
    pub control: StepControl,
    pub formulation: FormulationKind,
    pub rhs_form: RhsForm,
    pub track_flowmap: bool,
    pub initial_u: InitialCondition,
    pub initial_rho: InitialCondition,
    pub snapshot_every: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub compare_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_map(&ConfigMap::default(), Path::new(".")).expect("defaults are valid")
    }
}

impl RunConfig {
    /// Reads a config file; relative sample paths resolve against its directory.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut map = ConfigMap::parse(&text)?;
        map.apply_overrides(overrides)?;
        Self::from_map(&map, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn from_map(map: &ConfigMap, base_dir: &Path) -> Result<Self> {
        let params = ModelParams::new(map.parsed("model.a")?, map.parsed("model.alpha")?, map.parsed("model.kappa")?)
            .map_err(|e| Error::ConfigField { key: "model".into(), message: e.to_string() })?;
        let resolution_tol = match map.get("control.resolution_tol") {
            "off" | "none" => None,
            _ => Some(map.parsed("control.resolution_tol")?),
        };
        let control = StepControl {
            scheme: match map.get("time.scheme") {
                "rk4" => Scheme::Rk4,
                "adaptive" => Scheme::Adaptive,
                other => return Err(map.field_error("time.scheme", format!("expected rk4 or adaptive, got `{other}`"))),
            },
            dt: map.parsed("time.dt")?,
            abs_tol: map.parsed("control.abs_tol")?,
            rel_tol: map.parsed("control.rel_tol")?,
            dt_min: map.parsed("control.dt_min")?,
            max_ux: map.parsed("control.max_ux")?,
            resolution_tol,
        };
        control
            .validate()
            .map_err(|e| Error::ConfigField { key: "control".into(), message: e.to_string() })?;
        let formulation = match map.get("run.formulation") {
            "eulerian" => FormulationKind::Eulerian,
            "lagrangian" => FormulationKind::Lagrangian,
            other => {
                return Err(map.field_error(
                    "run.formulation",
                    format!("expected eulerian or lagrangian, got `{other}`"),
                ))
            }
        };
        let rhs_form = match map.get("run.rhs_form") {
            "u_form" => RhsForm::UForm,
            "m_form" => RhsForm::MForm,
            other => return Err(map.field_error("run.rhs_form", format!("expected u_form or m_form, got `{other}`"))),
        };
        let seed: u64 = map.parsed("run.seed")?;
        let initial = |key: &str| {
            InitialCondition::parse_with(map.get(key), seed, &|source| load_samples(base_dir, source))
                .map(|ic| rebase_samples(ic, base_dir))
                .map_err(|e| map.field_error(key, e))
        };
        let config = Self {
            params,
            branch: map.parsed("model.branch")?,
            grid_n: map.parsed("grid.n")?,
            t_final: map.parsed("time.t_final")?,
            control,
            formulation,
            rhs_form,
            track_flowmap: map.parsed("run.track_flowmap")?,
            initial_u: initial("initial.u")?,
            initial_rho: initial("initial.rho")?,
            snapshot_every: map.parsed("time.snapshot_every")?,
            output_dir: PathBuf::from(map.get("output.dir")),
            seed,
            compare_threshold: map.parsed("compare.threshold")?,
        };
        if !(config.t_final > 0.0) {
            return Err(map.field_error("time.t_final", "must be positive".into()));
        }
        if !(config.snapshot_every > 0.0) {
            return Err(map.field_error("time.snapshot_every", "must be positive".into()));
        }
        if config.grid_n < 8 || config.grid_n % 2 != 0 {
            return Err(map.field_error("grid.n", "must be even and at least 8".into()));
        }
        Ok(config)
    }

    /// Flat key/value echo that parses back to the same configuration.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let f = |v: f64| format!("{v:?}");
        let mut out = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            out.insert(k.to_string(), v);
        };
        put("model.a", f(self.params.a));
        put("model.alpha", f(self.params.alpha));
        put("model.kappa", f(self.params.kappa));
        put("model.branch", self.branch.to_string());
        put("grid.n", self.grid_n.to_string());
        put("time.t_final", f(self.t_final));
        put("time.dt", f(self.control.dt));
        put(
            "time.scheme",
            match self.control.scheme {
                Scheme::Rk4 => "rk4",
                Scheme::Adaptive => "adaptive",
            }
            .into(),
        );
        put("time.snapshot_every", f(self.snapshot_every));
        put("control.abs_tol", f(self.control.abs_tol));
        put("control.rel_tol", f(self.control.rel_tol));
        put("control.dt_min", f(self.control.dt_min));
        put("control.max_ux", f(self.control.max_ux));
        put("control.resolution_tol", self.control.resolution_tol.map_or("off".into(), f));
        put(
            "run.formulation",
            match self.formulation {
                FormulationKind::Eulerian => "eulerian",
                FormulationKind::Lagrangian => "lagrangian",
            }
            .into(),
        );
        put(
            "run.rhs_form",
            match self.rhs_form {
                RhsForm::UForm => "u_form",
                RhsForm::MForm => "m_form",
            }
            .into(),
        );
        put("run.track_flowmap", self.track_flowmap.to_string());
        put("run.seed", self.seed.to_string());
        put("initial.u", self.initial_u.to_string());
        put("initial.rho", self.initial_rho.to_string());
        put("output.dir", self.output_dir.display().to_string());
        put("compare.threshold", f(self.compare_threshold));
        out
    }

    /// Renders [`echo`](Self::echo) as a config file.
    pub fn to_config_text(&self) -> String {
        self.echo().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn from_echo(echo: &BTreeMap<String, String>) -> Result<Self> {
        let mut map = ConfigMap::default();
        for (k, v) in echo {
            map.set(k, v)?;
        }
        Self::from_map(&map, Path::new("."))
    }
}

/// Makes sample paths independent of the config location so the echo re-runs.
fn rebase_samples(ic: InitialCondition, base_dir: &Path) -> InitialCondition {
    match ic {
        InitialCondition::Samples { source, values } => InitialCondition::Samples {
            source: base_dir.join(source).display().to_string(),
            values,
        },
        InitialCondition::Sum(terms) => {
            InitialCondition::Sum(terms.into_iter().map(|t| rebase_samples(t, base_dir)).collect())
        }
        other => other,
    }
}

/// Whitespace-separated node values. Relative paths are taken from `base_dir`.
fn load_samples(base_dir: &Path, source: &str) -> std::result::Result<Vec<f64>, String> {
    let path = base_dir.join(source);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("{}: {e}", path.display())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.grid_n, 256);
        assert_eq!(c.control.dt, 1e-3);
        assert_eq!(c.control.max_ux, 1e6);
        assert_eq!(c.formulation, FormulationKind::Eulerian);
    }

    #[test]
    fn sections_and_dotted_keys() {
        let text = "# demo\n[model]\na = 3\nalpha = 0.5 # trailing\n\ngrid.n = 64\n[time]\nscheme = adaptive\n";
        let map = ConfigMap::parse(text).unwrap();
        let c = RunConfig::from_map(&map, Path::new(".")).unwrap();
        assert_eq!(c.params.a, 3.0);
        assert_eq!(c.params.alpha, 0.5);
        assert_eq!(c.grid_n, 64);
        assert_eq!(c.control.scheme, Scheme::Adaptive);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ConfigMap::parse("model.a = 2\nnonsense\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
        let err = ConfigMap::parse("[model]\nbeta = 1\n").unwrap_err();
        assert!(err.to_string().contains("model.beta"));
        let map = ConfigMap::parse("\n\ngrid.n = many\n").unwrap();
        let err = RunConfig::from_map(&map, Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
    }

    #[test]
    fn excluded_parameter_is_reported() {
        let map = ConfigMap::parse("model.a = 1\n").unwrap();
        let err = RunConfig::from_map(&map, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("a = 1 excluded"));
    }

    #[test]
    fn overrides() {
        let args = ["run", "--config", "x.cfg", "--model.a=3", "--plot"].map(String::from).to_vec();
        let (rest, ov) = extract_overrides(args);
        assert_eq!(rest, ["run", "--config", "x.cfg", "--plot"]);
        let mut map = ConfigMap::default();
        map.apply_overrides(&ov).unwrap();
        assert_eq!(map.get("model.a"), "3");
        assert!(map.set("nope.key", "1").is_err());
    }

    #[test]
    fn echo_round_trip() {
        let text = "model.a = 3\nmodel.alpha = 0.1\ninitial.u = random(5, 0.3) + gaussian(1, 0.2, 0.5)\nrun.seed = 9\ncontrol.resolution_tol = off\n";
        let c = RunConfig::from_map(&ConfigMap::parse(text).unwrap(), Path::new(".")).unwrap();
        assert!(c.initial_u.to_string().starts_with("random(5, 0.3, 9)"));
        assert_eq!(c.control.resolution_tol, None);
        let back = RunConfig::from_echo(&c.echo()).unwrap();
        assert_eq!(back, c);
        let reparsed = RunConfig::from_map(&ConfigMap::parse(&c.to_config_text()).unwrap(), Path::new(".")).unwrap();
        assert_eq!(reparsed, c);
    }
}
