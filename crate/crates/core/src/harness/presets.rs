//! Frozen run configurations for the acceptance experiments.

use crate::error::{Error, Result};

use super::config::{parse_config, RunConfig};

pub const PREFIX: &str = "acceptance:";

const SQG_DECAY: &str = "\
label = sqg_decay
variant = sqg_physical
alpha = 1.5
beta = 1
n = 512
box = 128
dt = 0.05
t_end = 80
cadence = 1
ic = gaussian
ic.amplitude = 1
ic.sigma = 1
fit_window = 5, 80
";

const SQG_MONOTONE: &str = "\
label = sqg_monotone
variant = sqg_physical
alpha = 1.5
beta = 1
n = 256
box = 64
dt = 0.05
t_end = 50
cadence = 0.05
ic = gaussian
ic.amplitude = 1
ic.sigma = 1
profile = false
fit_window = 5, 50
";

const BOUSSINESQ_DECAY: &str = "\
label = boussinesq_decay
variant = boussinesq_physical
alpha = 1.4
beta = 1
n = 512
box = 128
dt = 0.05
t_end = 80
cadence = 1
ic = dipole
ic.amplitude = 1
ic.sigma = 1
theta_ic = gaussian
theta_ic.amplitude = 1
theta_ic.sigma = 1
fit_window = 5, 80
";

const SQG_SCALED_MASS: &str = "\
label = sqg_scaled_mass
variant = sqg_scaled
alpha = 1.5
beta = 1
n = 128
box = 32
dt = 0.02
t_end = 3
cadence = 0.1
ic = random
ic.seed = 11
ic.modes = 6
ic.k_max = 1.5
ic.sigma = 1.5
ic.bias = 1
fit_window = 1, 3
";

const BOUSSINESQ_SCALED_MASS: &str = "\
label = boussinesq_scaled_mass
variant = boussinesq_scaled
alpha = 1.4
beta = 1
n = 128
box = 32
dt = 0.02
t_end = 3
cadence = 0.1
ic = dipole
ic.amplitude = 1
ic.sigma = 1
theta_ic = gaussian
theta_ic.amplitude = 1
theta_ic.sigma = 1.2
theta_ic.center = 0.5, -0.3
fit_window = 1, 3
";

const LINEAR_SCALED: &str = "\
label = linear_scaled
variant = linear_scaled
alpha = 1.5
beta = 1
n = 256
box = 64
dt = 0.001
t_end = 2
cadence = 0.5
ic = random
ic.seed = 5
ic.modes = 6
ic.k_max = 1.5
ic.sigma = 1.5
ic.bias = 1
profile = false
fit_window = 0.5, 2
";

const DETERMINISM: &str = "\
label = determinism
variant = sqg_physical
alpha = 1.5
beta = 1
n = 64
box = 32
dt = 0.05
t_end = 10
cadence = 0.5
ic = random
ic.seed = 7
ic.modes = 6
ic.k_max = 1.5
ic.sigma = 1.5
ic.bias = 1
snapshot_times = 5
snapshot_final = true
";

const PRESETS: &[(&str, &str)] = &[
    ("sqg_decay", SQG_DECAY),
    ("sqg_decay_box", SQG_DECAY),
    ("sqg_monotone", SQG_MONOTONE),
    ("boussinesq_decay", BOUSSINESQ_DECAY),
    ("sqg_scaled_mass", SQG_SCALED_MASS),
    ("boussinesq_scaled_mass", BOUSSINESQ_SCALED_MASS),
    ("linear_scaled", LINEAR_SCALED),
    ("determinism", DETERMINISM),
];

/// Names accepted by [`preset`], with the `acceptance:` prefix.
pub fn names() -> Vec<String> {
    PRESETS.iter().map(|(n, _)| format!("{PREFIX}{n}")).collect()
}

/// The frozen configuration named `acceptance:<name>`.
pub fn preset(name: &str) -> Result<RunConfig> {
    let short = name
        .strip_prefix(PREFIX)
        .ok_or_else(|| Error::InvalidParameter(format!("preset names start with `{PREFIX}`, got `{name}`")))?;
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == short)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown preset `{name}`; known: {}", names().join(", "))))?;
    let mut cfg = parse_config(text)?;
    if short == "sqg_decay_box" {
        cfg.label = short.to_string();
        cfg.box_length *= 2.0;
    }
    Ok(cfg)
}
