//! Flat key-value configuration files.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; blank
//! lines ignored. Values are numbers, booleans, or comma-separated lists.
//! Unknown keys are rejected with the offending line number.
//!
//! Profile keys come in triples `<name>.kind` plus parameters, e.g.
//!
//! ```text
//! n = 256
//! mass.kind = uniform        # uniform | bump
//! mass.min = 0.8
//! mass.max = 1.2
//! beta.kind = cosine         # constant | sine | cosine | bump | tabulated
//! beta.base = 1.0
//! beta.amplitude = 0.25
//! beta.k = 1
//! rbar.kind = sine
//! rbar.amplitude = 0.3
//! rbar.k = 1
//! pbar.kind = cosine
//! pbar.amplitude = 0.3
//! pbar.k = 1
//! hbar = 1.0
//! seed = 20260826
//! n_values = 128, 256, 512, 1024
//! realizations = 8
//! macro_times = 0.25, 0.5
//! test_functions = 1, sin1, cos1, sin2
//! ```

use crate::chain::{ChainSpec, MassLaw, Profile};
use crate::error::{Error, Result};
use crate::experiments::{ExperimentConfig, TestFunction};
use std::collections::BTreeMap;

/// A parsed key → (value, line) map preserving source locations for
/// diagnostics.
#[derive(Debug, Clone, Default)]
pub struct KvFile {
    pub entries: BTreeMap<String, (String, usize)>,
}

pub fn parse_kv(text: &str) -> Result<KvFile> {
    let mut entries = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(format!(
                "line {}: expected 'key = value', got '{}'",
                lineno + 1,
                raw.trim()
            )));
        };
        let key = key.trim().to_string();
        if entries.contains_key(&key) {
            return Err(Error::config(format!("line {}: duplicate key '{key}'", lineno + 1)));
        }
        entries.insert(key, (value.trim().to_string(), lineno + 1));
    }
    Ok(KvFile { entries })
}

impl KvFile {
    fn get(&self, key: &str) -> Option<&(String, usize)> {
        self.entries.get(key)
    }

    fn parse_at<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|_| {
                Error::config(format!("line {line}: key '{key}' has invalid value '{v}'"))
            }),
        }
    }

    fn parse_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| {
                    s.trim().parse::<T>().map_err(|_| {
                        Error::config(format!(
                            "line {line}: key '{key}' has invalid list entry '{}'",
                            s.trim()
                        ))
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    fn profile(&self, name: &str, default: &Profile) -> Result<Profile> {
        let Some((kind, line)) = self.get(&format!("{name}.kind")) else {
            return Ok(default.clone());
        };
        let num = |suffix: &str, fallback: f64| -> Result<f64> {
            Ok(self.parse_at::<f64>(&format!("{name}.{suffix}"))?.unwrap_or(fallback))
        };
        let int = |suffix: &str, fallback: u32| -> Result<u32> {
            Ok(self.parse_at::<u32>(&format!("{name}.{suffix}"))?.unwrap_or(fallback))
        };
        match kind.as_str() {
            "constant" => Ok(Profile::Constant(num("value", 1.0)?)),
            "sine" => Ok(Profile::Sine {
                base: num("base", 0.0)?,
                amplitude: num("amplitude", 1.0)?,
                k: int("k", 1)?,
            }),
            "cosine" => Ok(Profile::Cosine {
                base: num("base", 0.0)?,
                amplitude: num("amplitude", 1.0)?,
                k: int("k", 1)?,
            }),
            "bump" => Ok(Profile::Bump {
                base: num("base", 0.0)?,
                amplitude: num("amplitude", 1.0)?,
                center: num("center", 0.5)?,
                width: num("width", 0.5)?,
            }),
            "tabulated" => {
                let values = self.parse_list::<f64>(&format!("{name}.values"))?.ok_or_else(
                    || Error::config(format!("tabulated profile '{name}' needs {name}.values")),
                )?;
                Ok(Profile::Tabulated(values))
            }
            other => Err(Error::config(format!(
                "line {line}: unknown profile kind '{other}' for '{name}.kind'"
            ))),
        }
    }

    pub fn chain_spec(&self) -> Result<ChainSpec> {
        let default = ChainSpec::default();
        let m_min = self.parse_at::<f64>("mass.min")?.unwrap_or(default.mass_law.m_min);
        let m_max = self.parse_at::<f64>("mass.max")?.unwrap_or(default.mass_law.m_max);
        let mass_law = match self.get("mass.kind").map(|(v, l)| (v.as_str(), *l)) {
            None | Some(("uniform", _)) => MassLaw::uniform(m_min, m_max)?,
            Some(("bump", _)) => MassLaw::bump(m_min, m_max)?,
            Some((other, line)) => {
                return Err(Error::config(format!(
                    "line {line}: unknown mass.kind '{other}' (expected uniform | bump)"
                )))
            }
        };
        let spec = ChainSpec {
            n: self.parse_at::<usize>("n")?.unwrap_or(default.n),
            mass_law,
            beta_profile: self.profile("beta", &default.beta_profile)?,
            pbar_profile: self.profile("pbar", &default.pbar_profile)?,
            rbar_profile: self.profile("rbar", &default.rbar_profile)?,
            hbar: self.parse_at::<f64>("hbar")?.unwrap_or(default.hbar),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn experiment_config(&self) -> Result<ExperimentConfig> {
        let default = ExperimentConfig::default();
        let spec = self.chain_spec()?;
        let test_functions = match self.get("test_functions") {
            None => default.test_functions.clone(),
            Some((v, line)) => v
                .split(',')
                .map(|s| {
                    TestFunction::parse(s).map_err(|e| match e {
                        Error::Config(msg) => Error::config(format!("line {line}: {msg}")),
                        other => other,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let cfg = ExperimentConfig {
            spec,
            n_values: self.parse_list::<usize>("n_values")?.unwrap_or(default.n_values),
            realizations: self
                .parse_at::<usize>("realizations")?
                .unwrap_or(default.realizations),
            macro_times: self.parse_list::<f64>("macro_times")?.unwrap_or(default.macro_times),
            test_functions,
            base_seed: self.parse_at::<u64>("seed")?.unwrap_or(default.base_seed),
            classical: self.parse_at::<bool>("classical")?.unwrap_or(default.classical),
            time_scale_exponent: self
                .parse_at::<f64>("time_scale_exponent")?
                .unwrap_or(default.time_scale_exponent),
            alpha: self.parse_at::<f64>("alpha")?.unwrap_or(default.alpha),
            eta: self.parse_at::<f64>("eta")?.unwrap_or(default.eta),
            k_modes: self.parse_at::<usize>("k_modes")?.unwrap_or(default.k_modes),
            beta_grid: self.parse_at::<usize>("beta_grid")?.unwrap_or(default.beta_grid),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Echo as a plain map (for the run manifest).
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.entries.iter().map(|(k, (v, _))| (k.clone(), v.clone())).collect()
    }
}

/// Serialize a spec back to the flat format (keys in grammar order).
pub fn chain_spec_to_kv(spec: &ChainSpec) -> String {
    let mut out = String::new();
    out.push_str(&format!("n = {}\n", spec.n));
    let kind = match spec.mass_law.kind {
        crate::chain::MassLawKind::Uniform => "uniform",
        crate::chain::MassLawKind::Bump => "bump",
    };
    out.push_str(&format!("mass.kind = {kind}\n"));
    out.push_str(&format!("mass.min = {}\n", spec.mass_law.m_min));
    out.push_str(&format!("mass.max = {}\n", spec.mass_law.m_max));
    for (name, p) in
        [("beta", &spec.beta_profile), ("pbar", &spec.pbar_profile), ("rbar", &spec.rbar_profile)]
    {
        match p {
            Profile::Constant(c) => {
                out.push_str(&format!("{name}.kind = constant\n{name}.value = {c}\n"));
            }
            Profile::Sine { base, amplitude, k } => {
                out.push_str(&format!(
                    "{name}.kind = sine\n{name}.base = {base}\n{name}.amplitude = {amplitude}\n{name}.k = {k}\n"
                ));
            }
            Profile::Cosine { base, amplitude, k } => {
                out.push_str(&format!(
                    "{name}.kind = cosine\n{name}.base = {base}\n{name}.amplitude = {amplitude}\n{name}.k = {k}\n"
                ));
            }
            Profile::Bump { base, amplitude, center, width } => {
                out.push_str(&format!(
                    "{name}.kind = bump\n{name}.base = {base}\n{name}.amplitude = {amplitude}\n{name}.center = {center}\n{name}.width = {width}\n"
                ));
            }
            Profile::Tabulated(values) => {
                let list =
                    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
                out.push_str(&format!("{name}.kind = tabulated\n{name}.values = {list}\n"));
            }
        }
    }
    out.push_str(&format!("hbar = {}\n", spec.hbar));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Profile;

    const SAMPLE: &str = "\
# laboratory default
n = 256
mass.kind = uniform
mass.min = 0.8
mass.max = 1.2
beta.kind = cosine
beta.base = 1.0
beta.amplitude = 0.25
beta.k = 1
pbar.kind = cosine
pbar.base = 0.0
pbar.amplitude = 0.3
pbar.k = 1
rbar.kind = sine
rbar.base = 0.0
rbar.amplitude = 0.3
rbar.k = 1
hbar = 1.0
seed = 42
n_values = 128,256
realizations = 4
macro_times = 0.25,0.5
test_functions = 1,sin1,cos1
";

    #[test]
    fn parses_sample_config() {
        let kv = parse_kv(SAMPLE).unwrap();
        let spec = kv.chain_spec().unwrap();
        assert_eq!(spec.n, 256);
        assert_eq!(spec.beta_profile, Profile::Cosine { base: 1.0, amplitude: 0.25, k: 1 });
        let cfg = kv.experiment_config().unwrap();
        assert_eq!(cfg.n_values, vec![128, 256]);
        assert_eq!(cfg.realizations, 4);
        assert_eq!(cfg.base_seed, 42);
        assert_eq!(cfg.test_functions.len(), 3);
    }

    #[test]
    fn rejects_duplicate_keys_with_line_numbers() {
        let err = parse_kv("n = 4\nn = 5\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(err.contains('n'), "{err}");
    }

    #[test]
    fn rejects_malformed_lines() {
        let err = parse_kv("n 4\n").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn rejects_unknown_profile_kind() {
        let text = "beta.kind = parabola\nbeta.value = 1.0\n";
        let kv = parse_kv(text).unwrap();
        let err = kv.chain_spec().unwrap_err().to_string();
        assert!(err.contains("parabola"), "{err}");
    }

    #[test]
    fn validation_error_names_the_key() {
        let text = "mass.min = -1.0\n";
        let kv = parse_kv(text).unwrap();
        let err = kv.chain_spec().unwrap_err().to_string();
        assert!(err.contains("mass.min"), "{err}");
    }

    #[test]
    fn tabulated_profile_round_trip() {
        let text = "rbar.kind = tabulated\nrbar.values = 0,0.5,0\n";
        let kv = parse_kv(text).unwrap();
        let spec = kv.chain_spec().unwrap();
        assert_eq!(spec.rbar_profile, Profile::Tabulated(vec![0.0, 0.5, 0.0]));
    }

    #[test]
    fn spec_serialization_round_trips() {
        let spec = crate::chain::ChainSpec::default();
        let text = chain_spec_to_kv(&spec);
        let kv = parse_kv(&text).unwrap();
        let back = kv.chain_spec().unwrap();
        assert_eq!(back.n, spec.n);
        assert_eq!(back.beta_profile, spec.beta_profile);
        assert_eq!(back.pbar_profile, spec.pbar_profile);
        assert_eq!(back.rbar_profile, spec.rbar_profile);
        assert_eq!(back.hbar, spec.hbar);
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let kv = parse_kv("# heading\n\nn = 8\n  \n# trailing\n").unwrap();
        assert_eq!(kv.chain_spec().unwrap().n, 8);
    }
}
