//! Layered configuration: command-line flags, then a `key = value` file, then
//! `LANDAU_PREC` (precision only), then built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::CliError;

pub const PREC_ENV: &str = "LANDAU_PREC";

pub const DEFAULT_PREC: u32 = 512;

/// Every key a config file may set.
pub const KNOWN_KEYS: &[&str] = &[
    "command",
    "shape",
    "B",
    "R",
    "q",
    "n",
    "prec",
    "seed",
    "fekete_n",
    "restarts",
    "method",
    "in",
    "window",
    "svg",
    "nmax",
    "compare",
    "suite",
    "seeds",
    "curve_prec",
    "qmax",
    "kmax",
    "format",
    "out",
];

#[derive(Clone, Debug, Default)]
pub struct Layers {
    file: BTreeMap<String, String>,
    env_prec: Option<String>,
}

impl Layers {
    pub fn load(path: Option<&Path>, command: &str) -> Result<Self, CliError> {
        let mut file = BTreeMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            file = parse_config(&text)?;
            if let Some(cmd) = file.remove("command") {
                if cmd != command {
                    return Err(CliError::Usage(format!(
                        "config is for `{cmd}`, not `{command}`"
                    )));
                }
            }
        }
        Ok(Layers {
            file,
            env_prec: std::env::var(PREC_ENV).ok(),
        })
    }

    /// Flag, else file entry, else `default`.
    pub fn get<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.lookup(key, flag)? {
            Some(v) => Ok(v),
            None => Ok(default),
        }
    }

    /// Flag, else file entry; `None` if neither is set.
    pub fn lookup<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key `{key}` = {raw:?}: {e}"))),
            None => Ok(None),
        }
    }

    pub fn require<T>(&self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.lookup(key, flag)?
            .ok_or_else(|| CliError::Usage(format!("missing required setting `{key}` (flag --{key} or config file)")))
    }

    /// Precision: flag, file, `LANDAU_PREC`, then `DEFAULT_PREC`.
    pub fn prec(&self, flag: Option<u32>) -> Result<u32, CliError> {
        if let Some(p) = self.lookup("prec", flag)? {
            return check_prec(p);
        }
        match &self.env_prec {
            Some(raw) => raw
                .trim()
                .parse()
                .map_err(|e| CliError::Usage(format!("{PREC_ENV}={raw:?}: {e}")))
                .and_then(check_prec),
            None => Ok(DEFAULT_PREC),
        }
    }
}

fn check_prec(p: u32) -> Result<u32, CliError> {
    if (16..=1 << 20).contains(&p) {
        Ok(p)
    } else {
        Err(CliError::Usage(format!("precision {p} outside 16..=1048576 bits")))
    }
}

/// `key = value` lines; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Usage(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

/// The resolved settings of a run, in the order they are echoed.
#[derive(Clone, Debug, Default, Serialize)]
pub struct JobConfig {
    pub command: String,
    pub entries: Vec<(String, String)>,
}

impl JobConfig {
    pub fn new(command: &str) -> Self {
        JobConfig {
            command: command.to_string(),
            entries: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// `# key = value` lines; stripping the `# ` prefix gives a config file
    /// that reproduces the run.
    pub fn header(&self) -> String {
        let mut s = format!("# command = {}\n", self.command);
        for (k, v) in &self.entries {
            s.push_str(&format!("# {k} = {v}\n"));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        map.insert("command".into(), self.command.clone().into());
        for (k, v) in &self.entries {
            map.insert(k.clone(), v.clone().into());
        }
        serde_json::Value::Object(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let m = parse_config("# comment\nshape = disk:0,0,1\n\nB=2\n").unwrap();
        assert_eq!(m["shape"], "disk:0,0,1");
        assert_eq!(m["B"], "2");
        assert!(parse_config("bogus = 1").is_err());
        assert!(parse_config("no equals sign").is_err());
    }

    #[test]
    fn flags_beat_file() {
        let layers = Layers {
            file: parse_config("n = 10\nq = 1").unwrap(),
            env_prec: Some("300".into()),
        };
        assert_eq!(layers.get("n", Some(20usize), 5).unwrap(), 20);
        assert_eq!(layers.get("n", None::<usize>, 5).unwrap(), 10);
        assert_eq!(layers.get("seed", None::<u64>, 7).unwrap(), 7);
        assert_eq!(layers.prec(None).unwrap(), 300);
        assert_eq!(layers.prec(Some(128)).unwrap(), 128);
        assert!(layers.get("n", None::<f64>, 1.0).is_ok());
        assert!(layers.get("q", None::<bool>, false).is_err());
    }

    #[test]
    fn header_round_trips() {
        let mut job = JobConfig::new("spectrum");
        job.set("shape", "disk:0,0,1");
        job.set("n", 60);
        let stripped: String = job
            .header()
            .lines()
            .map(|l| l.trim_start_matches("# ").to_string() + "\n")
            .collect();
        let m = parse_config(&stripped).unwrap();
        assert_eq!(m["command"], "spectrum");
        assert_eq!(m["n"], "60");
    }
}
