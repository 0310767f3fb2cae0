//! Line-oriented `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::evolution::{FieldName, ModelParams, Variant};
use crate::initial::InitialCondition;
use crate::spectral::GridSpec;

/// Source of the initial data for one field, or of the whole state.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Family(InitialCondition),
    /// Resume from a snapshot file holding every field.
    Snapshot(PathBuf),
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub label: String,
    pub variant: Variant,
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    pub box_length: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Initial data of the advecting field (`z` or `w`), or a snapshot.
    pub ic: InitialSpec,
    /// Initial temperature for the Boussinesq variants.
    pub theta_ic: Option<InitialCondition>,
    pub cadence: f64,
    pub profile: bool,
    /// Orders of the profile-error norms written to the series.
    pub profile_p: Vec<u32>,
    /// Terms kept in the vorticity expansion: 1 drops the `∂₁G` term.
    pub profile_order: u32,
    /// Overrides the centre of mass used to place the profile.
    pub profile_center: Option<(f64, f64)>,
    pub fit_window: Option<(f64, f64)>,
    pub snapshot_times: Vec<f64>,
    pub snapshot_final: bool,
    pub output_dir: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "label",
    "variant",
    "alpha",
    "beta",
    "n",
    "box",
    "dt",
    "t_end",
    "cadence",
    "profile",
    "profile_p",
    "profile_order",
    "profile_center",
    "fit_window",
    "snapshot_times",
    "snapshot_final",
    "output_dir",
];

const IC_PARAMS: &[&str] = &["amplitude", "sigma", "center", "seed", "modes", "k_max", "bias", "path"];

fn known_key(key: &str) -> bool {
    if KEYS.contains(&key) || key == "ic" || key == "theta_ic" {
        return true;
    }
    match key.split_once('.') {
        Some(("ic", p)) | Some(("theta_ic", p)) => IC_PARAMS.contains(&p),
        _ => false,
    }
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    last_line: usize,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            last_line = line;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(Error::Config { line, message: "empty key".into() });
            }
            if !known_key(key) {
                return Err(Error::Config { line, message: format!("unknown key `{key}`") });
            }
            if let Some((first, _)) = map.get(key) {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key `{key}` (first set on line {first})"),
                });
            }
            map.insert(key.to_string(), (line, value.to_string()));
        }
        Ok(Self { map, last_line })
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn required(&self, key: &str) -> Result<(usize, &str)> {
        self.raw(key).ok_or_else(|| Error::Config {
            line: self.last_line,
            message: format!("missing required key `{key}`"),
        })
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<(usize, T)>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(|x| Some((line, x)))
                .map_err(|_| Error::Config { line, message: format!("`{key}`: cannot parse `{v}` as a number") }),
        }
    }

    fn required_number<T: std::str::FromStr>(&self, key: &str) -> Result<(usize, T)> {
        self.required(key)?;
        Ok(self.number(key)?.expect("present"))
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, "true")) => Ok(Some(true)),
            Some((_, "false")) => Ok(Some(false)),
            Some((line, v)) => {
                Err(Error::Config { line, message: format!("`{key}` must be `true` or `false`, got `{v}`") })
            }
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<(usize, Vec<T>)>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) if v.is_empty() => Ok(Some((line, Vec::new()))),
            Some((line, v)) => v
                .split(',')
                .map(|s| {
                    s.trim().parse::<T>().map_err(|_| Error::Config {
                        line,
                        message: format!("`{key}`: cannot parse list entry `{}`", s.trim()),
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(|xs| Some((line, xs))),
        }
    }

    fn pair(&self, key: &str) -> Result<Option<(usize, (f64, f64))>> {
        match self.list::<f64>(key)? {
            None => Ok(None),
            Some((line, xs)) if xs.len() == 2 => Ok(Some((line, (xs[0], xs[1])))),
            Some((line, _)) => Err(Error::Config { line, message: format!("`{key}` needs two values `a, b`") }),
        }
    }

    fn initial(&self, prefix: &str) -> Result<Option<(usize, InitialSpec)>> {
        let Some((line, family)) = self.raw(prefix) else {
            if let Some((stray, _)) = self.map.iter().find(|(k, _)| k.starts_with(&format!("{prefix}."))) {
                let (l, _) = self.map[stray];
                return Err(Error::Config { line: l, message: format!("`{stray}` given without `{prefix}`") });
            }
            return Ok(None);
        };
        let key = |p: &str| format!("{prefix}.{p}");
        let allowed: &[&str] = match family {
            "zero" => &[],
            "gaussian" | "dipole" => &["amplitude", "sigma", "center"],
            "random" => &["seed", "modes", "k_max", "sigma", "bias"],
            "snapshot" => &["path"],
            other => {
                return Err(Error::Config {
                    line,
                    message: format!("`{prefix}`: unknown family `{other}` (zero, gaussian, dipole, random, snapshot)"),
                })
            }
        };
        for p in IC_PARAMS {
            if !allowed.contains(p) {
                if let Some((l, _)) = self.raw(&key(p)) {
                    return Err(Error::Config {
                        line: l,
                        message: format!("`{}` does not apply to family `{family}`", key(p)),
                    });
                }
            }
        }
        let f = |p: &str, default: f64| -> Result<f64> { Ok(self.number(&key(p))?.map_or(default, |(_, v)| v)) };
        let center = self.pair(&key("center"))?.map_or((0.0, 0.0), |(_, c)| c);
        let spec = match family {
            "zero" => InitialSpec::Family(InitialCondition::Zero),
            "gaussian" => InitialSpec::Family(InitialCondition::Gaussian {
                amplitude: f("amplitude", 1.0)?,
                sigma: f("sigma", 1.0)?,
                center,
            }),
            "dipole" => InitialSpec::Family(InitialCondition::Dipole {
                amplitude: f("amplitude", 1.0)?,
                sigma: f("sigma", 1.0)?,
                center,
            }),
            "random" => InitialSpec::Family(InitialCondition::Random {
                seed: self.number(&key("seed"))?.map_or(0, |(_, v)| v),
                modes: self.number(&key("modes"))?.map_or(6, |(_, v)| v),
                k_max: f("k_max", 1.5)?,
                sigma: f("sigma", 1.5)?,
                bias: f("bias", 1.0)?,
            }),
            _ => {
                let (_, path) = self.required(&key("path"))?;
                InitialSpec::Snapshot(PathBuf::from(path))
            }
        };
        if let InitialSpec::Family(ic) = &spec {
            ic.validate().map_err(|e| Error::Config { line, message: format!("`{prefix}`: {e}") })?;
        }
        Ok(Some((line, spec)))
    }
}

fn at(line: usize, e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) | Error::InvalidGrid(m) => Error::Config { line, message: m },
        other => other,
    }
}

/// Parses and validates a configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let e = Entries::parse(text)?;
    let (vline, vname) = e.required("variant")?;
    let variant = Variant::from_name(vname)
        .ok_or_else(|| Error::Config { line: vline, message: format!("unknown variant `{vname}`") })?;
    let (aline, alpha) = e.required_number::<f64>("alpha")?;
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::Config { line: aline, message: "alpha must lie in (1,2]".into() });
    }
    let (bline, beta) = match e.number::<f64>("beta")? {
        Some(b) => b,
        None if variant.is_boussinesq() => (vline, 1.0),
        None => e.required_number("beta")?,
    };
    let (nline, n) = e.required_number::<usize>("n")?;
    let (lline, box_length) = e.required_number::<f64>("box")?;
    let grid = GridSpec::new(n, box_length).map_err(|err| at(nline.max(lline), err))?;
    ModelParams::new(variant, alpha, beta, grid).map_err(|err| at(bline, err))?;

    let (dline, dt) = e.required_number::<f64>("dt")?;
    if !(dt > 0.0 && dt <= crate::evolution::MAX_DT) {
        return Err(Error::Config { line: dline, message: "dt must lie in (0, 1]".into() });
    }
    let (tline, t_end) = e.required_number::<f64>("t_end")?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Config { line: tline, message: "t_end must be finite and >= 0".into() });
    }
    let (cline, cadence) = e.number::<f64>("cadence")?.unwrap_or((0, 1.0));
    if !(cadence > 0.0 && cadence.is_finite()) {
        return Err(Error::Config { line: cline, message: "cadence must be positive".into() });
    }

    let (icline, ic) = e.initial("ic")?.ok_or_else(|| Error::Config {
        line: e.last_line,
        message: "missing required key `ic`".into(),
    })?;
    let theta = e.initial("theta_ic")?;
    let theta_ic = match (&ic, theta, variant.is_boussinesq()) {
        (InitialSpec::Snapshot(_), Some((l, _)), _) => {
            return Err(Error::Config { line: l, message: "`theta_ic` conflicts with a snapshot `ic`".into() })
        }
        (_, Some((l, _)), false) => {
            return Err(Error::Config { line: l, message: "`theta_ic` applies only to Boussinesq variants".into() })
        }
        (_, Some((l, InitialSpec::Snapshot(_))), true) => {
            return Err(Error::Config { line: l, message: "`theta_ic` cannot be a snapshot".into() })
        }
        (InitialSpec::Family(_), None, true) => {
            return Err(Error::Config {
                line: icline,
                message: "Boussinesq variants need `theta_ic`".into(),
            })
        }
        (_, Some((_, InitialSpec::Family(f))), true) => Some(f),
        (_, None, _) => None,
    };

    let profile = e.bool("profile")?.unwrap_or(true);
    let profile_p = match e.list::<u32>("profile_p")? {
        None => vec![1, 2],
        Some((line, ps)) => {
            if ps.iter().any(|p| *p != 1 && *p != 2) {
                return Err(Error::Config { line, message: "profile_p entries must be 1 or 2".into() });
            }
            let mut ps = ps;
            ps.sort_unstable();
            ps.dedup();
            ps
        }
    };
    let profile_order = match e.number::<u32>("profile_order")? {
        None => 2,
        Some((_, o @ (1 | 2))) => o,
        Some((line, _)) => return Err(Error::Config { line, message: "profile_order must be 1 or 2".into() }),
    };
    let profile_center = e.pair("profile_center")?.map(|(_, c)| c);
    let fit_window = match e.pair("fit_window")? {
        Some((line, (a, b))) if !(a < b) => {
            return Err(Error::Config { line, message: "fit_window needs t_min < t_max".into() })
        }
        other => other.map(|(_, w)| w),
    };
    let snapshot_times = match e.list::<f64>("snapshot_times")? {
        None => Vec::new(),
        Some((line, ts)) => {
            if ts.iter().any(|t| !t.is_finite()) || ts.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config { line, message: "snapshot_times must be finite and increasing".into() });
            }
            ts
        }
    };
    let snapshot_final = e.bool("snapshot_final")?.unwrap_or(false);
    let output_dir = e.raw("output_dir").map(|(_, v)| PathBuf::from(v));
    let label = e.raw("label").map_or_else(|| variant.name().to_string(), |(_, v)| v.to_string());
    if label.is_empty() || label.contains(['/', '\\']) {
        return Err(Error::Config {
            line: e.raw("label").map_or(0, |(l, _)| l),
            message: "label must be a plain non-empty name".into(),
        });
    }

    Ok(RunConfig {
        label,
        variant,
        alpha,
        beta,
        n,
        box_length,
        dt,
        t_end,
        ic,
        theta_ic,
        cadence,
        profile,
        profile_p,
        profile_order,
        profile_center,
        fit_window,
        snapshot_times,
        snapshot_final,
        output_dir,
    })
}

fn write_ic(out: &mut String, prefix: &str, ic: &InitialCondition) {
    match *ic {
        InitialCondition::Zero => {
            let _ = writeln!(out, "{prefix} = zero");
        }
        InitialCondition::Gaussian { amplitude, sigma, center } | InitialCondition::Dipole { amplitude, sigma, center } => {
            let family = if matches!(ic, InitialCondition::Gaussian { .. }) { "gaussian" } else { "dipole" };
            let _ = writeln!(out, "{prefix} = {family}");
            let _ = writeln!(out, "{prefix}.amplitude = {amplitude:?}");
            let _ = writeln!(out, "{prefix}.sigma = {sigma:?}");
            let _ = writeln!(out, "{prefix}.center = {:?}, {:?}", center.0, center.1);
        }
        InitialCondition::Random { seed, modes, k_max, sigma, bias } => {
            let _ = writeln!(out, "{prefix} = random");
            let _ = writeln!(out, "{prefix}.seed = {seed}");
            let _ = writeln!(out, "{prefix}.modes = {modes}");
            let _ = writeln!(out, "{prefix}.k_max = {k_max:?}");
            let _ = writeln!(out, "{prefix}.sigma = {sigma:?}");
            let _ = writeln!(out, "{prefix}.bias = {bias:?}");
        }
    }
}

impl RunConfig {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.n, self.box_length)
    }

    pub fn model(&self) -> Result<ModelParams> {
        ModelParams::new(self.variant, self.alpha, self.beta, self.grid()?)
    }

    /// Initial conditions per field when the run does not resume from a snapshot.
    pub fn initial_conditions(&self) -> Option<Vec<(FieldName, InitialCondition)>> {
        let InitialSpec::Family(ic) = &self.ic else {
            return None;
        };
        let fields = self.variant.fields();
        let mut out = vec![(fields[0], ic.clone())];
        if let Some(theta) = &self.theta_ic {
            out.push((FieldName::Theta, theta.clone()));
        }
        Some(out)
    }

    /// Canonical text form; `parse_config` of the result reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "label = {}", self.label);
        let _ = writeln!(out, "variant = {}", self.variant.name());
        let _ = writeln!(out, "alpha = {:?}", self.alpha);
        let _ = writeln!(out, "beta = {:?}", self.beta);
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "box = {:?}", self.box_length);
        let _ = writeln!(out, "dt = {:?}", self.dt);
        let _ = writeln!(out, "t_end = {:?}", self.t_end);
        let _ = writeln!(out, "cadence = {:?}", self.cadence);
        match &self.ic {
            InitialSpec::Family(ic) => write_ic(&mut out, "ic", ic),
            InitialSpec::Snapshot(p) => {
                let _ = writeln!(out, "ic = snapshot");
                let _ = writeln!(out, "ic.path = {}", p.display());
            }
        }
        if let Some(theta) = &self.theta_ic {
            write_ic(&mut out, "theta_ic", theta);
        }
        let _ = writeln!(out, "profile = {}", self.profile);
        let ps: Vec<String> = self.profile_p.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "profile_p = {}", ps.join(", "));
        let _ = writeln!(out, "profile_order = {}", self.profile_order);
        if let Some((x, y)) = self.profile_center {
            let _ = writeln!(out, "profile_center = {x:?}, {y:?}");
        }
        if let Some((a, b)) = self.fit_window {
            let _ = writeln!(out, "fit_window = {a:?}, {b:?}");
        }
        let ts: Vec<String> = self.snapshot_times.iter().map(|t| format!("{t:?}")).collect();
        let _ = writeln!(out, "snapshot_times = {}", ts.join(", "));
        let _ = writeln!(out, "snapshot_final = {}", self.snapshot_final);
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(out, "output_dir = {}", dir.display());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
variant = sqg_physical
alpha = 1.5
beta = 1
n = 64
box = 32
dt = 0.05
t_end = 2
ic = gaussian
";

    fn message(text: &str) -> (usize, String) {
        match parse_config(text) {
            Err(Error::Config { line, message }) => (line, message),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.variant, Variant::SqgPhysical);
        assert_eq!(cfg.cadence, 1.0);
        assert_eq!(cfg.profile_p, vec![1, 2]);
        assert_eq!(cfg.label, "sqg_physical");
        assert_eq!(
            cfg.ic,
            InitialSpec::Family(InitialCondition::Gaussian { amplitude: 1.0, sigma: 1.0, center: (0.0, 0.0) })
        );
    }

    #[test]
    fn alpha_out_of_range() {
        let (line, msg) = message(&MINIMAL.replace("alpha = 1.5", "alpha = 2.5"));
        assert_eq!(line, 2);
        assert!(msg.contains("alpha must lie in (1,2]"));
    }

    #[test]
    fn duplicate_and_unknown_keys() {
        let (line, msg) = message(&format!("{MINIMAL}dt = 0.1\n"));
        assert_eq!(line, 9);
        assert!(msg.contains("`dt`"));
        let (line, msg) = message(&format!("{MINIMAL}# note\nspeed = 3\n"));
        assert_eq!(line, 10);
        assert!(msg.contains("unknown key `speed`"));
    }

    #[test]
    fn boussinesq_rules() {
        let base = MINIMAL.replace("sqg_physical", "boussinesq_physical").replace("alpha = 1.5", "alpha = 1.4");
        let (_, msg) = message(&base);
        assert!(msg.contains("theta_ic"));
        let ok = format!("{base}theta_ic = gaussian\ntheta_ic.sigma = 2\n");
        assert_eq!(parse_config(&ok).unwrap().theta_ic.unwrap(), InitialCondition::Gaussian {
            amplitude: 1.0,
            sigma: 2.0,
            center: (0.0, 0.0)
        });
        let (line, msg) = message(&ok.replace("beta = 1", "beta = 0.5"));
        assert_eq!(line, 3);
        assert!(msg.contains("beta = 1"));
        let (_, msg) = message(&format!("{MINIMAL}theta_ic = zero\n"));
        assert!(msg.contains("only to Boussinesq"));
    }

    #[test]
    fn family_parameters_are_checked() {
        let (line, msg) = message(&format!("{MINIMAL}ic.seed = 4\n"));
        assert_eq!(line, 9);
        assert!(msg.contains("does not apply"));
        let (_, msg) = message(&format!("{MINIMAL}ic.sigma = -1\n"));
        assert!(msg.contains("sigma"));
        let (_, msg) = message(&MINIMAL.replace("gaussian", "plume"));
        assert!(msg.contains("unknown family"));
        let (line, _) = message(&MINIMAL.replace("dt = 0.05", "dt = fast"));
        assert_eq!(line, 6);
        assert!(parse_config(&MINIMAL.replace("ic = gaussian", "ic = snapshot")).is_err());
    }

    #[test]
    fn text_form_round_trips() {
        let text = format!(
            "{}cadence = 0.5\nprofile_p = 2\nfit_window = 1, 2\nsnapshot_times = 1, 1.5\nic.center = 0.25, -1\n",
            MINIMAL.replace("gaussian", "dipole")
        );
        let cfg = parse_config(&text).unwrap();
        assert_eq!(parse_config(&cfg.to_text()).unwrap(), cfg);
        let random = parse_config(&format!(
            "{}ic.seed = 9\nic.modes = 3\n",
            MINIMAL.replace("gaussian", "random")
        ))
        .unwrap();
        assert_eq!(parse_config(&random.to_text()).unwrap(), random);
    }

    #[test]
    fn lists_and_booleans() {
        let (_, msg) = message(&format!("{MINIMAL}profile = yes\n"));
        assert!(msg.contains("true"));
        let (_, msg) = message(&format!("{MINIMAL}snapshot_times = 2, 1\n"));
        assert!(msg.contains("increasing"));
        let (_, msg) = message(&format!("{MINIMAL}profile_p = 3\n"));
        assert!(msg.contains("1 or 2"));
    }
}
