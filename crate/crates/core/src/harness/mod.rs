//! Batch front end: configuration, experiment orchestration, CSV output and snapshots.

pub mod config;
pub mod output;
pub mod presets;
pub mod snapshot;

use std::fs;
use std::path::{Path, PathBuf};

use crate::diagnostics::{boussinesq_profiles, sqg_profile, DiagnosticRecord, FitMode};
use crate::error::{Error, Result};
use crate::evolution::{self, lowest_shell_fraction, max_speed, FieldName, ModelParams, SimState};
use crate::spectral::{inverse_transform, ScalarField};

pub use config::{parse_config, InitialSpec, RunConfig};
pub use output::FitRow;
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};

/// Environment variable overriding the output root directory.
pub const OUTPUT_ROOT_VAR: &str = "FQG_OUTPUT_ROOT";

/// Output root: the override variable if set, else the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("."), PathBuf::from)
}

/// Directory receiving the outputs of `cfg` under `root`.
pub fn output_dir(cfg: &RunConfig, root: &Path) -> PathBuf {
    match &cfg.output_dir {
        Some(d) if d.is_absolute() => d.clone(),
        Some(d) => root.join(d),
        None => root.join(&cfg.label),
    }
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub dir: PathBuf,
    /// Series of the advecting field (`z` or `w`).
    pub series: Vec<DiagnosticRecord>,
    /// Temperature series for Boussinesq variants.
    pub theta_series: Option<Vec<DiagnosticRecord>>,
    pub fits: Vec<FitRow>,
    pub final_state: SimState,
}

/// Fixed reference data for placing the asymptotic profiles.
struct ProfileRef {
    /// Centre in physical coordinates at `t = 0`.
    center: (f64, f64),
    /// Masses of the primary field and of `θ` at the start of a physical run.
    mass: f64,
    theta_mass: f64,
}

impl ProfileRef {
    fn new(cfg: &RunConfig, params: &ModelParams, state: &SimState) -> Result<Self> {
        let anchor = if params.variant.is_boussinesq() { FieldName::Theta } else { FieldName::Z };
        let recorded = match &cfg.ic {
            InitialSpec::Snapshot(path) => recorded_center(path),
            InitialSpec::Family(_) => None,
        };
        let center = match cfg.profile_center.or(recorded) {
            Some(c) => c,
            None => {
                if matches!(cfg.ic, InitialSpec::Snapshot(_)) {
                    log::warn!("no recorded profile centre next to the snapshot; using its centre of mass");
                }
                let c = state.physical(anchor)?.center_of_mass();
                if params.variant.is_scaled() {
                    let stretch = (state.time / params.alpha).exp();
                    (c.0 * stretch, c.1 * stretch)
                } else {
                    c
                }
            }
        };
        let primary = params.variant.fields()[0];
        let theta_mass = if params.variant.is_boussinesq() { state.field(FieldName::Theta)?.mass() } else { 0.0 };
        Ok(Self { center, mass: state.field(primary)?.mass(), theta_mass })
    }

    /// Profiles of the primary field and of `θ` at the state's time.
    fn profiles(
        &self,
        cfg: &RunConfig,
        params: &ModelParams,
        state: &SimState,
    ) -> Result<(ScalarField, Option<ScalarField>)> {
        let grid = &params.grid;
        let alpha = params.alpha;
        let (t, center, mass, theta_mass) = if params.variant.is_scaled() {
            // Self-similar frame: the profile keeps unit width and the masses follow the state.
            let shrink = (-state.time / alpha).exp();
            let theta_mass =
                if params.variant.is_boussinesq() { state.field(FieldName::Theta)?.mass() } else { 0.0 };
            let primary = state.field(params.variant.fields()[0])?.mass();
            (0.0, (self.center.0 * shrink, self.center.1 * shrink), primary, theta_mass)
        } else {
            (state.time, self.center, self.mass, self.theta_mass)
        };
        if !params.variant.is_boussinesq() {
            return Ok((sqg_profile(grid, t, mass, alpha, center)?, None));
        }
        let gamma2_w = if cfg.profile_order == 2 { theta_mass } else { 0.0 };
        let (w, _) = boussinesq_profiles(grid, t, mass, gamma2_w, alpha, center)?;
        let (_, theta) = boussinesq_profiles(grid, t, 0.0, theta_mass, alpha, center)?;
        Ok((w, Some(theta)))
    }
}

/// Profile centre recorded in the `meta.txt` beside a snapshot.
fn recorded_center(snapshot: &Path) -> Option<(f64, f64)> {
    let meta = fs::read_to_string(snapshot.parent()?.join("meta.txt")).ok()?;
    let line = meta.lines().find_map(|l| l.strip_prefix("profile_center ="))?;
    let (a, b) = line.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

fn measure(
    cfg: &RunConfig,
    field: &ScalarField,
    profile: Option<&ScalarField>,
    time: f64,
    u_max: f64,
    shell: f64,
) -> Result<DiagnosticRecord> {
    let mut r = DiagnosticRecord::measure(time, field, profile)?;
    if !cfg.profile_p.contains(&1) {
        r.profile_err_l1 = None;
    }
    if !cfg.profile_p.contains(&2) {
        r.profile_err_l2 = None;
    }
    r.u_max = Some(u_max);
    r.low_shell_frac = Some(shell);
    Ok(r)
}

fn initial_state(cfg: &RunConfig, params: &ModelParams) -> Result<SimState> {
    match &cfg.ic {
        InitialSpec::Snapshot(path) => {
            let snap = read_snapshot(path)?;
            if snap.variant != cfg.variant || snap.alpha != cfg.alpha || snap.beta != cfg.beta {
                return Err(Error::InvalidParameter(format!(
                    "snapshot holds {} with alpha={}, beta={}; config asks for {} with alpha={}, beta={}",
                    snap.variant.name(),
                    snap.alpha,
                    snap.beta,
                    cfg.variant.name(),
                    cfg.alpha,
                    cfg.beta
                )));
            }
            if *snap.grid() != params.grid {
                return Err(Error::GridMismatch(format!(
                    "snapshot grid n={}, L={} differs from the configured n={}, L={}",
                    snap.grid().n(),
                    snap.grid().box_length(),
                    cfg.n,
                    cfg.box_length
                )));
            }
            Ok(snap.to_state())
        }
        InitialSpec::Family(_) => {
            let ics = cfg.initial_conditions().expect("family initial data");
            SimState::from_initial(params, 0.0, &ics)
        }
    }
}

fn check_schedule(cfg: &RunConfig, t0: f64) -> Result<()> {
    if cfg.t_end < t0 {
        return Err(Error::InvalidParameter(format!("t_end {} precedes the start time {t0}", cfg.t_end)));
    }
    for &t in &cfg.snapshot_times {
        let k = (t - t0) / cfg.cadence;
        if t <= t0 || t > cfg.t_end || (k - k.round()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "snapshot time {t} must lie in ({t0}, {}] on the observation grid of cadence {}",
                cfg.t_end, cfg.cadence
            )));
        }
    }
    Ok(())
}

fn snapshot_name(t: f64) -> String {
    format!("snapshot_t{t}.frfl")
}

/// Runs `cfg`, writing `meta.txt`, `series.csv`, `fit.csv`, snapshots and, for the
/// Boussinesq variants, `series_theta.csv` into the run's output directory under `root`.
/// On failure the collected rows are still written and a `FAILED` file names the error.
pub fn run_experiment(cfg: &RunConfig, root: &Path) -> Result<Outcome> {
    let params = cfg.model()?;
    let dir = output_dir(cfg, root);
    fs::create_dir_all(&dir)?;
    let failed = dir.join("FAILED");
    if failed.exists() {
        fs::remove_file(&failed)?;
    }
    let initial = initial_state(cfg, &params)?;
    check_schedule(cfg, initial.time)?;
    let reference = ProfileRef::new(cfg, &params, &initial)?;
    let resolved = RunConfig { profile_center: Some(reference.center), ..cfg.clone() };
    fs::write(
        dir.join("meta.txt"),
        format!(
            "fqg {}\nstart_time = {:?}\nfields = {}\n# resolved configuration\n{}",
            env!("CARGO_PKG_VERSION"),
            initial.time,
            params.variant.fields().iter().map(|f| f.name()).collect::<Vec<_>>().join(", "),
            resolved.to_text()
        ),
    )?;

    let mut series = Vec::new();
    let mut theta_series = Vec::new();
    let result = drive(cfg, &params, &reference, &initial, &dir, &mut series, &mut theta_series);
    let boussinesq = params.variant.is_boussinesq();
    let mode = if params.variant.is_scaled() { FitMode::Tau } else { FitMode::Log1pT };
    let write_outputs = || -> Result<Vec<FitRow>> {
        fs::write(dir.join("series.csv"), output::series_csv(&series)?)?;
        let primary = params.variant.fields()[0].name();
        let mut fits = output::fit_series(primary, &series, mode, cfg.fit_window);
        if boussinesq {
            fs::write(dir.join("series_theta.csv"), output::series_csv(&theta_series)?)?;
            fits.extend(output::fit_series("theta", &theta_series, mode, cfg.fit_window));
        }
        fs::write(dir.join("fit.csv"), output::fit_csv(&fits))?;
        Ok(fits)
    };
    let outcome = result.and_then(|final_state| {
        let fits = write_outputs()?;
        Ok(Outcome {
            dir: dir.clone(),
            series: series.clone(),
            theta_series: boussinesq.then(|| theta_series.clone()),
            fits,
            final_state,
        })
    });
    match outcome {
        Ok(o) => Ok(o),
        Err(e) => {
            let _ = fs::write(dir.join("series.csv"), output::series_csv(&series).unwrap_or_default());
            fs::write(&failed, format!("{e}\n"))?;
            Err(e)
        }
    }
}

fn drive(
    cfg: &RunConfig,
    params: &ModelParams,
    reference: &ProfileRef,
    initial: &SimState,
    dir: &Path,
    series: &mut Vec<DiagnosticRecord>,
    theta_series: &mut Vec<DiagnosticRecord>,
) -> Result<SimState> {
    let mut observe = |state: &SimState| -> Result<()> {
        let (profile, theta_profile) = if cfg.profile {
            let (p, tp) = reference.profiles(cfg, params, state)?;
            (Some(p), tp)
        } else {
            (None, None)
        };
        let u_max = max_speed(state, params)?;
        let shell = lowest_shell_fraction(state, params)?;
        let primary = params.variant.fields()[0];
        let f = inverse_transform(state.field(primary)?);
        series.push(measure(cfg, &f, profile.as_ref(), state.time, u_max, shell)?);
        if params.variant.is_boussinesq() {
            let th = inverse_transform(state.field(FieldName::Theta)?);
            theta_series.push(measure(cfg, &th, theta_profile.as_ref(), state.time, u_max, shell)?);
        }
        Ok(())
    };

    let mut stops = cfg.snapshot_times.clone();
    if stops.last().is_none_or(|&t| t < cfg.t_end) {
        stops.push(cfg.t_end);
    }
    let mut state = initial.clone();
    let mut first = true;
    for stop in stops {
        let mut skip = !first;
        let (next, _) = evolution::run(params, &state, stop, cfg.dt, cfg.cadence, |s| {
            if std::mem::take(&mut skip) {
                Ok(())
            } else {
                observe(s)
            }
        })?;
        first = false;
        state = next;
        if cfg.snapshot_times.contains(&stop) {
            let snap = Snapshot::from_state(&state, params.variant, params.alpha, params.beta)?;
            write_snapshot(&dir.join(snapshot_name(stop)), &snap)?;
        }
    }
    if cfg.snapshot_final {
        let snap = Snapshot::from_state(&state, params.variant, params.alpha, params.beta)?;
        write_snapshot(&dir.join("final.frfl"), &snap)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str) -> RunConfig {
        parse_config(&format!(
            "label = t\nvariant = sqg_physical\nalpha = 1.5\nbeta = 1\nn = 32\nbox = 16\ndt = 0.1\nt_end = 2\n\
             cadence = 0.5\nic = random\nic.seed = 3\nic.sigma = 1.5\nic.k_max = 1\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn writes_outputs_and_is_deterministic() {
        let root = tempfile::tempdir().unwrap();
        let cfg = config("snapshot_times = 1\nsnapshot_final = true\n");
        let a = run_experiment(&cfg, root.path()).unwrap();
        let first = fs::read(a.dir.join("series.csv")).unwrap();
        assert_eq!(a.series.len(), 5);
        assert_eq!(a.series.iter().map(|r| r.time).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        for f in ["meta.txt", "fit.csv", "snapshot_t1.frfl", "final.frfl"] {
            assert!(a.dir.join(f).exists(), "{f}");
        }
        assert!(!a.dir.join("FAILED").exists());
        let b = run_experiment(&cfg, root.path()).unwrap();
        assert_eq!(fs::read(b.dir.join("series.csv")).unwrap(), first);
    }

    #[test]
    fn zero_data_rejects_fits() {
        let root = tempfile::tempdir().unwrap();
        let cfg = parse_config(
            "variant = sqg_physical\nalpha = 1.5\nbeta = 1\nn = 16\nbox = 8\ndt = 0.5\nt_end = 12\nic = zero\n",
        )
        .unwrap();
        let o = run_experiment(&cfg, root.path()).unwrap();
        assert!(o.series.iter().all(|r| r.l1 == 0.0 && r.l2 == 0.0 && r.linf == 0.0));
        let fit = fs::read_to_string(o.dir.join("fit.csv")).unwrap();
        assert!(fit.lines().any(|l| l.starts_with("z,l2,") && l.contains("nonpositive values")));
    }

    #[test]
    fn resume_matches_direct_run() {
        let root = tempfile::tempdir().unwrap();
        let direct = run_experiment(&config("snapshot_times = 1\n"), root.path()).unwrap();
        let snap = direct.dir.join("snapshot_t1.frfl");
        let resumed_cfg = parse_config(&format!(
            "label = r\nvariant = sqg_physical\nalpha = 1.5\nbeta = 1\nn = 32\nbox = 16\ndt = 0.1\nt_end = 2\n\
             cadence = 0.5\nic = snapshot\nic.path = {}\n",
            snap.display()
        ))
        .unwrap();
        let resumed = run_experiment(&resumed_cfg, root.path()).unwrap();
        let tail = &direct.series[2..];
        assert_eq!(resumed.series.len(), tail.len());
        for (a, b) in resumed.series.iter().zip(tail) {
            assert_eq!(a.time, b.time);
            assert!((a.l2 - b.l2).abs() <= 1e-12 * b.l2);
            let (pa, pb) = (a.profile_err_l2.unwrap(), b.profile_err_l2.unwrap());
            assert!((pa - pb).abs() <= 1e-12 * pb);
        }
    }

    #[test]
    fn failures_leave_a_sentinel() {
        let root = tempfile::tempdir().unwrap();
        let cfg = config("ic.bias = 400\n");
        let err = run_experiment(&cfg, root.path()).unwrap_err();
        assert!(!err.is_validation());
        let dir = output_dir(&cfg, root.path());
        assert!(fs::read_to_string(dir.join("FAILED")).unwrap().contains("CFL"));
        assert!(dir.join("series.csv").exists());
    }

    #[test]
    fn resume_rejects_mismatched_grid() {
        let root = tempfile::tempdir().unwrap();
        let direct = run_experiment(&config("snapshot_final = true\n"), root.path()).unwrap();
        let cfg = parse_config(&format!(
            "label = r\nvariant = sqg_physical\nalpha = 1.5\nbeta = 1\nn = 64\nbox = 16\ndt = 0.1\nt_end = 3\n\
             ic = snapshot\nic.path = {}\n",
            direct.dir.join("final.frfl").display()
        ))
        .unwrap();
        assert!(matches!(run_experiment(&cfg, root.path()), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn boussinesq_writes_theta_series() {
        let root = tempfile::tempdir().unwrap();
        let cfg = parse_config(
            "variant = boussinesq_physical\nalpha = 1.4\nn = 32\nbox = 16\ndt = 0.1\nt_end = 1\n\
             ic = dipole\ntheta_ic = gaussian\n",
        )
        .unwrap();
        let o = run_experiment(&cfg, root.path()).unwrap();
        assert!(o.dir.join("series_theta.csv").exists());
        let theta = o.theta_series.unwrap();
        assert!((theta[1].mass - theta[0].mass).abs() < 1e-12 * theta[0].mass);
        assert!(o.fits.iter().any(|f| f.field == "theta"));
    }
}
