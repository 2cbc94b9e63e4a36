//! Flat `key = value` experiment configuration.
//!
//! Lines starting with `#` are comments; lists are comma separated. See the
//! README for the full key table.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::preprocess::ColumnSpec;
use super::synth::RegressionSynth;
use crate::error::{Error, Result};
use crate::per_state::{PerStateAdaNormal, PerStateDfeg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Kt,
    ProductKt,
    Ctw,
    MixtureCtw,
    AdditionCtw,
    MixtureKt,
    AdditionKt,
    Ogd,
    Dfeg,
    AdaNormal,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::Kt,
        Algorithm::ProductKt,
        Algorithm::Ctw,
        Algorithm::MixtureCtw,
        Algorithm::AdditionCtw,
        Algorithm::MixtureKt,
        Algorithm::AdditionKt,
        Algorithm::Ogd,
        Algorithm::Dfeg,
        Algorithm::AdaNormal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Kt => "kt",
            Algorithm::ProductKt => "product_kt",
            Algorithm::Ctw => "ctw",
            Algorithm::MixtureCtw => "mixture_ctw",
            Algorithm::AdditionCtw => "addition_ctw",
            Algorithm::MixtureKt => "mixture_kt",
            Algorithm::AdditionKt => "addition_kt",
            Algorithm::Ogd => "ogd",
            Algorithm::Dfeg => "dfeg",
            Algorithm::AdaNormal => "adanormal",
        }
    }

    /// Whether one engine combines all configured quantizer axes.
    pub fn combines_axes(self) -> bool {
        matches!(
            self,
            Algorithm::MixtureCtw | Algorithm::AdditionCtw | Algorithm::MixtureKt | Algorithm::AdditionKt
        )
    }

    pub fn uses_side_info(self) -> bool {
        self != Algorithm::Kt
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    Synthetic { kind: RegressionSynth, rounds: usize },
    Csv {
        path: PathBuf,
        columns: ColumnSpec,
        rounds: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfegParams {
    pub lipschitz: f64,
    pub delta: f64,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaNormalParams {
    pub lipschitz: f64,
    pub a: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub algorithms: Vec<Algorithm>,
    pub depths: Vec<usize>,
    /// Quantizer axes; `None` means every axis.
    pub axes: Option<Vec<usize>>,
    pub w0: f64,
    pub ogd_etas: Vec<f64>,
    pub dfeg: DfegParams,
    pub adanormal: AdaNormalParams,
    pub data: DataSpec,
    pub seed: u64,
    /// Rescale out-of-ball gradients instead of failing.
    pub clip: bool,
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {s:?}")))
        })
        .collect()
}

fn names(v: &str) -> Vec<String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

struct Entries {
    map: HashMap<String, String>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn parse<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<T>()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}"))),
        }
    }
}

/// Default step-size grid for per-state OGD: `10^-3, …, 10^1`.
pub fn default_ogd_etas() -> Vec<f64> {
    vec![0.001, 0.01, 0.1, 1.0, 10.0]
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim().to_string();
            if map.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {k:?}", n + 1)));
            }
        }
        let mut e = Entries { map };

        let name = e.take("name").unwrap_or_else(|| "experiment".to_string());
        let algorithms: Vec<Algorithm> = match e.take("algorithms") {
            Some(v) => names(&v).iter().map(|s| s.parse()).collect::<Result<_>>()?,
            None => return Err(Error::Config("missing key \"algorithms\"".into())),
        };
        let depths = match e.take("depths") {
            Some(v) => list("depths", &v)?,
            None => vec![1],
        };
        let axes = e.take("axes").map(|v| list("axes", &v)).transpose()?;
        let w0 = e.parse("w0", 1.0)?;
        let ogd_etas = match e.take("ogd_etas") {
            Some(v) => list("ogd_etas", &v)?,
            None => default_ogd_etas(),
        };
        let dfeg = DfegParams {
            lipschitz: e.parse("dfeg_l", 1.0)?,
            delta: e.parse("dfeg_delta", 1.0)?,
            a: e.parse("dfeg_a", 1.0)?,
        };
        let ada_l: f64 = e.parse("adanormal_l", 1.0)?;
        let adanormal = AdaNormalParams {
            lipschitz: ada_l,
            a: e.parse("adanormal_a", 3.0 * ada_l * ada_l * PI / 4.0)?,
            eps: e.parse("adanormal_eps", 1.0)?,
        };
        let seed = e.parse("seed", 0u64)?;
        let clip = e.parse("clip", false)?;
        let data_kind = e.take("data").unwrap_or_else(|| "synthetic".to_string());
        let data = match data_kind.as_str() {
            "synthetic" => {
                let rounds = e.parse("rounds", 1000usize)?;
                let dim = e.parse("synthetic_dim", 3usize)?;
                let kind = match e.take("synthetic").as_deref().unwrap_or("iid") {
                    "iid" => RegressionSynth::Iid {
                        dim,
                        noise: e.parse("synthetic_noise", 0.1)?,
                    },
                    "markov_sign" => RegressionSynth::MarkovSign {
                        dim,
                        order: e.parse("synthetic_order", 2usize)?,
                        flip: e.parse("synthetic_flip", 0.9)?,
                    },
                    other => {
                        return Err(Error::Config(format!("unknown synthetic kind {other:?}")))
                    }
                };
                DataSpec::Synthetic { kind, rounds }
            }
            "csv" => {
                let path = e
                    .take("csv_path")
                    .ok_or_else(|| Error::Config("data = csv needs csv_path".into()))?;
                let target = e
                    .take("target")
                    .ok_or_else(|| Error::Config("data = csv needs target".into()))?;
                let columns = ColumnSpec {
                    target,
                    drop: e.take("drop").map(|v| names(&v)).unwrap_or_default(),
                    log1p: e.take("log1p").map(|v| names(&v)).unwrap_or_default(),
                    ln: e.take("ln").map(|v| names(&v)).unwrap_or_default(),
                };
                let rounds = e.take("rounds").map(|v| {
                    v.parse::<usize>()
                        .map_err(|_| Error::Config(format!("rounds: cannot parse {v:?}")))
                });
                DataSpec::Csv {
                    path: PathBuf::from(path),
                    columns,
                    rounds: rounds.transpose()?,
                }
            }
            other => return Err(Error::Config(format!("unknown data source {other:?}"))),
        };
        if let Some(k) = e.map.keys().min() {
            return Err(Error::Config(format!("unknown key {k:?}")));
        }
        let cfg = ExperimentConfig {
            name,
            algorithms,
            depths,
            axes,
            w0,
            ogd_etas,
            dfeg,
            adanormal,
            data,
            seed,
            clip,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms configured".into()));
        }
        if self.depths.is_empty() {
            return Err(Error::Config("no depths configured".into()));
        }
        if let Some(&d) = self.depths.iter().find(|&&d| d > 20) {
            return Err(Error::Config(format!("depth {d} exceeds 20")));
        }
        if let Some(axes) = &self.axes {
            if axes.is_empty() {
                return Err(Error::Config("axes is empty".into()));
            }
        }
        if !(self.w0 > 0.0) || !self.w0.is_finite() {
            return Err(Error::param("w0", format!("must be positive, got {}", self.w0)));
        }
        if self.algorithms.contains(&Algorithm::Ogd) {
            if self.ogd_etas.is_empty() {
                return Err(Error::Config("ogd_etas is empty".into()));
            }
            if let Some(eta) = self.ogd_etas.iter().find(|e| !(**e >= 0.0)) {
                return Err(Error::param("ogd_etas", format!("step size {eta} must be >= 0")));
            }
        }
        if self.algorithms.contains(&Algorithm::Dfeg) {
            let p = &self.dfeg;
            PerStateDfeg::new(1, 1, p.lipschitz, p.delta, p.a)?;
        }
        if self.algorithms.contains(&Algorithm::AdaNormal) {
            let p = &self.adanormal;
            PerStateAdaNormal::new(1, 1, p.lipschitz, p.a, p.eps)?;
        }
        if let DataSpec::Synthetic { kind, rounds } = &self.data {
            if *rounds == 0 {
                return Err(Error::Config("rounds must be positive".into()));
            }
            if kind.dim() < 2 {
                return Err(Error::Config("synthetic_dim must be at least 2".into()));
            }
        }
        Ok(())
    }
}
