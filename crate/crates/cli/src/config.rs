//! Flat `key = value` experiment configs. Keys mirror the long flag names;
//! later settings override earlier ones.

use ordinal_unloc::bench::{ExperimentConfig, ExperimentKind};
use ordinal_unloc::unfold::DeltaMode;

use crate::CliError;

/// One `key = value` setting and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub key: String,
    pub value: String,
    pub origin: String,
}

pub const KEYS: &[&str] = &[
    "kind",
    "field-side",
    "anchors",
    "targets",
    "sigma",
    "exponent-ranges",
    "calibration-exponent",
    "normalized-variance",
    "propagation-speed",
    "trials",
    "seed",
    "restarts",
    "max-iterations",
    "gradient-tolerance",
    "solver-seed",
    "delta",
];

/// Parses config text; `#` starts a comment. All bad lines are reported.
pub fn parse_settings(text: &str, source: &str) -> Result<Vec<Setting>, CliError> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            errors.push(format!("{source}:{}: expected 'key = value'", n + 1));
            continue;
        };
        let key = k.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            errors.push(format!("{source}:{}: unknown key '{key}'", n + 1));
            continue;
        }
        out.push(Setting {
            key,
            value: v.trim().to_string(),
            origin: format!("{source}:{}", n + 1),
        });
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(CliError::Config(errors.join("\n")))
    }
}

fn number<T: std::str::FromStr>(s: &Setting, text: &str) -> Result<T, CliError> {
    text.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{}: {}: '{}' is not a valid number", s.origin, s.key, text.trim())))
}

fn list<T: std::str::FromStr>(s: &Setting) -> Result<Vec<T>, CliError> {
    s.value.split(',').map(|v| number(s, v)).collect()
}

/// `lo:hi:step` (inclusive) or a comma list.
fn anchor_grid(s: &Setting) -> Result<Vec<usize>, CliError> {
    let parts: Vec<&str> = s.value.split(':').collect();
    match parts.as_slice() {
        [lo, hi, step] => {
            let (lo, hi, step): (usize, usize, usize) = (number(s, lo)?, number(s, hi)?, number(s, step)?);
            if step == 0 || lo > hi {
                return Err(CliError::Config(format!("{}: anchors: empty range '{}'", s.origin, s.value)));
            }
            Ok((lo..=hi).step_by(step).collect())
        }
        [_] => list(s),
        _ => Err(CliError::Config(format!(
            "{}: anchors: expected lo:hi:step or a comma list, got '{}'",
            s.origin, s.value
        ))),
    }
}

fn ranges(s: &Setting) -> Result<Vec<(f64, f64)>, CliError> {
    s.value
        .split(',')
        .map(|r| {
            let (a, b) = r.split_once(':').ok_or_else(|| {
                CliError::Config(format!("{}: {}: expected a:b, got '{}'", s.origin, s.key, r.trim()))
            })?;
            Ok((number(s, a)?, number(s, b)?))
        })
        .collect()
}

/// Kind named by the last `kind` setting, if any.
pub fn kind_of(settings: &[Setting]) -> Result<Option<ExperimentKind>, CliError> {
    match settings.iter().rev().find(|s| s.key == "kind") {
        Some(s) => ExperimentKind::parse(&s.value)
            .map(Some)
            .map_err(|e| CliError::Config(format!("{}: {e}", s.origin))),
        None => Ok(None),
    }
}

/// Applies settings in order onto `base`.
pub fn apply(base: ExperimentConfig, settings: &[Setting]) -> Result<ExperimentConfig, CliError> {
    let mut c = base;
    for s in settings {
        match s.key.as_str() {
            "kind" => {
                c.kind = ExperimentKind::parse(&s.value).map_err(|e| CliError::Config(format!("{}: {e}", s.origin)))?
            }
            "field-side" => c.field_side = number(s, &s.value)?,
            "anchors" => c.anchors = anchor_grid(s)?,
            "targets" => c.targets = number(s, &s.value)?,
            "sigma" => c.sigma = list(s)?,
            "exponent-ranges" => c.exponent_ranges = ranges(s)?,
            "calibration-exponent" => c.calibration_exponent = number(s, &s.value)?,
            "normalized-variance" => c.normalized_variance = list(s)?,
            "propagation-speed" => c.propagation_speed = number(s, &s.value)?,
            "trials" => c.trials = number(s, &s.value)?,
            "seed" => c.seed = number(s, &s.value)?,
            "restarts" => c.solver.restarts = number(s, &s.value)?,
            "max-iterations" => c.solver.max_iterations = number(s, &s.value)?,
            "gradient-tolerance" => c.solver.gradient_tolerance = number(s, &s.value)?,
            "solver-seed" => c.solver.seed = number(s, &s.value)?,
            "delta" => {
                c.solver.delta_mode = match s.value.as_str() {
                    "squared" => DeltaMode::Squared,
                    "raw" => DeltaMode::Raw,
                    other => {
                        return Err(CliError::Config(format!(
                            "{}: delta: expected squared or raw, got '{other}'",
                            s.origin
                        )))
                    }
                }
            }
            other => unreachable!("unchecked key {other}"),
        }
    }
    c.validate()?;
    Ok(c)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// The resolved config in the same flat format; parsing it back reproduces
/// the config exactly.
pub fn render(c: &ExperimentConfig) -> String {
    let delta = match c.solver.delta_mode {
        DeltaMode::Squared => "squared",
        DeltaMode::Raw => "raw",
    };
    let ranges: Vec<String> = c.exponent_ranges.iter().map(|(a, b)| format!("{a}:{b}")).collect();
    [
        ("kind", c.kind.name().to_string()),
        ("field-side", c.field_side.to_string()),
        ("anchors", join(&c.anchors)),
        ("targets", c.targets.to_string()),
        ("sigma", join(&c.sigma)),
        ("exponent-ranges", ranges.join(",")),
        ("calibration-exponent", c.calibration_exponent.to_string()),
        ("normalized-variance", join(&c.normalized_variance)),
        ("propagation-speed", c.propagation_speed.to_string()),
        ("trials", c.trials.to_string()),
        ("seed", c.seed.to_string()),
        ("restarts", c.solver.restarts.to_string()),
        ("max-iterations", c.solver.max_iterations.to_string()),
        ("gradient-tolerance", c.solver.gradient_tolerance.to_string()),
        ("solver-seed", c.solver.seed.to_string()),
        ("delta", delta.to_string()),
    ]
    .iter()
    .map(|(k, v)| format!("{k} = {v}\n"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(text: &str) -> Vec<Setting> {
        parse_settings(text, "t.conf").unwrap()
    }

    #[test]
    fn anchor_range() {
        let c = apply(ExperimentConfig::ordinal_default(), &settings("anchors = 5:20:5")).unwrap();
        assert_eq!(c.anchors, vec![5, 10, 15, 20]);
        let c = apply(ExperimentConfig::ordinal_default(), &settings("anchors = 3,7")).unwrap();
        assert_eq!(c.anchors, vec![3, 7]);
    }

    #[test]
    fn later_settings_win() {
        let c = apply(ExperimentConfig::ordinal_default(), &settings("trials = 5\ntrials = 9 # flag")).unwrap();
        assert_eq!(c.trials, 9);
    }

    #[test]
    fn diagnostics_name_the_line() {
        let err = parse_settings("trials = 3\nbogus = 1\nnot a pair", "x.conf").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("x.conf:2") && msg.contains("x.conf:3"), "{msg}");
        let err = apply(ExperimentConfig::ordinal_default(), &settings("\n\nsigma = 0.1,abc")).unwrap_err();
        assert!(err.to_string().contains("t.conf:3"));
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(matches!(
            apply(ExperimentConfig::ordinal_default(), &settings("trials = 0")),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn render_roundtrip() {
        for kind in [ExperimentKind::OrdinalNoise, ExperimentKind::Rss, ExperimentKind::Toa] {
            let mut c = ExperimentConfig::default_for(kind);
            c.seed = 123456789012345;
            c.exponent_ranges = vec![(2.0, 6.0), (2.5, 3.25)];
            let back = apply(ExperimentConfig::ordinal_default(), &settings(&render(&c))).unwrap();
            assert_eq!(back, c);
        }
    }
}
