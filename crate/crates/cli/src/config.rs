//! Run configuration files.
//!
//! ```text
//! [manifold]
//! dim = 3
//! coords = x, y, z
//!
//! [structure]
//! theta = -y/2, x/2, 1
//! frame = 1, 0, y/2; 0, 1, -x/2
//! metric = orthonormal
//!
//! [sampling]
//! mode = random
//! lower = -1, -1, -1
//! upper = 1, 1, 1
//! count = 100
//! seed = 7
//!
//! [tolerances]
//! rank = 1e-9
//! ```
//!
//! With `metric = gram` a `gram` key gives the Gram matrix rows separated by
//! `;`. Grid sampling takes `counts` (one per axis) instead of `count`/`seed`.

use std::fmt;
use std::path::Path;

use ini::Ini;
use sr_core::sampling::SampleBox;
use sr_core::structure::SRStructure;
use sr_core::Tolerances;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("[{section}] {message}")]
pub struct ConfigError {
    pub section: String,
    pub message: String,
}

fn err(section: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        section: section.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SamplingMode {
    Grid { counts: Vec<usize> },
    Random { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sampling {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub mode: SamplingMode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    Orthonormal,
    Gram(Vec<Vec<String>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub coords: Vec<String>,
    pub theta: Vec<String>,
    pub frame: Vec<Vec<String>>,
    pub metric: MetricSpec,
    pub sampling: Sampling,
    pub tolerances: Tolerances,
}

const SECTIONS: [(&str, &[&str]); 4] = [
    ("manifold", &["dim", "coords"]),
    ("structure", &["theta", "frame", "metric", "gram"]),
    ("sampling", &["mode", "lower", "upper", "counts", "count", "seed"]),
    ("tolerances", &["rank", "cluster", "fd_step", "beta_const", "frame"]),
];

struct Section<'a> {
    name: &'static str,
    props: Option<&'a ini::Properties>,
}

impl<'a> Section<'a> {
    fn get(&self, key: &str) -> Result<Option<&'a str>, ConfigError> {
        let Some(props) = self.props else {
            return Ok(None);
        };
        let mut values = props.get_all(key);
        let first = values.next();
        if values.next().is_some() {
            return Err(err(self.name, format!("duplicate key `{}`", key)));
        }
        Ok(first.map(str::trim).filter(|v| !v.is_empty()))
    }

    fn require(&self, key: &str) -> Result<&'a str, ConfigError> {
        self.get(key)?
            .ok_or_else(|| err(self.name, format!("missing key `{}`", key)))
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.get(key)?
            .map(|v| {
                v.parse()
                    .map_err(|_| err(self.name, format!("`{}` is not a valid number: {}", key, v)))
            })
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str, len: usize) -> Result<Vec<T>, ConfigError> {
        let items = split_list(self.require(key)?);
        if items.len() != len {
            return Err(err(
                self.name,
                format!("`{}` has {} entries, expected {}", key, items.len(), len),
            ));
        }
        items
            .iter()
            .map(|v| {
                v.parse()
                    .map_err(|_| err(self.name, format!("`{}` entry is not a valid number: {}", key, v)))
            })
            .collect()
    }
}

/// Drop `#` comments, whole-line or trailing. Expressions never contain `#`.
fn strip_comments(text: &str) -> String {
    let lines: Vec<&str> = text.lines().map(|l| l.split('#').next().unwrap_or("")).collect();
    lines.join("\n")
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).collect()
}

/// Rows separated by `;`, entries by `,`.
fn split_rows(v: &str) -> Vec<Vec<String>> {
    v.split(';').map(split_list).collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| err("file", format!("cannot read {}: {}", path.display(), e)))?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let ini = Ini::load_from_str(&strip_comments(text)).map_err(|e| err("file", e.to_string()))?;
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(err("file", format!("key `{}` outside any section", k)));
                }
                continue;
            };
            let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| *s == name) else {
                return Err(err(name, "unknown section"));
            };
            if let Some((k, _)) = props.iter().find(|(k, _)| !keys.contains(k)) {
                return Err(err(name, format!("unknown key `{}`", k)));
            }
        }
        let section = |name: &'static str| Section {
            name,
            props: ini.section(Some(name)),
        };
        let manifold = section("manifold");
        let dim: usize = manifold
            .number("dim")?
            .ok_or_else(|| err("manifold", "missing key `dim`"))?;
        if dim < 3 {
            return Err(err("manifold", format!("dim must be at least 3, got {}", dim)));
        }
        let coords = split_list(manifold.require("coords")?);
        if coords.len() != dim {
            return Err(err(
                "manifold",
                format!("`coords` has {} entries, expected {}", coords.len(), dim),
            ));
        }
        for (i, c) in coords.iter().enumerate() {
            if c.is_empty() || coords[..i].contains(c) {
                return Err(err("manifold", format!("invalid or repeated coordinate name `{}`", c)));
            }
        }

        let structure = section("structure");
        let theta = split_list(structure.require("theta")?);
        if theta.len() != dim {
            return Err(err(
                "structure",
                format!("`theta` has {} components, expected {}", theta.len(), dim),
            ));
        }
        let frame = split_rows(structure.require("frame")?);
        if frame.len() != dim - 1 {
            return Err(err(
                "structure",
                format!("`frame` has {} vectors, expected {}", frame.len(), dim - 1),
            ));
        }
        if let Some(j) = frame.iter().position(|v| v.len() != dim) {
            return Err(err(
                "structure",
                format!(
                    "frame vector {} has {} components, expected {}",
                    j + 1,
                    frame[j].len(),
                    dim
                ),
            ));
        }
        let metric = match (
            structure.get("metric")?.unwrap_or("orthonormal"),
            structure.get("gram")?,
        ) {
            ("orthonormal", None) => MetricSpec::Orthonormal,
            ("orthonormal", Some(_)) => return Err(err("structure", "`gram` given with metric = orthonormal")),
            ("gram", None) => return Err(err("structure", "metric = gram needs a `gram` key")),
            ("gram", Some(g)) => {
                let rows = split_rows(g);
                if rows.len() != dim - 1 || rows.iter().any(|r| r.len() != dim - 1) {
                    return Err(err("structure", format!("`gram` must be {0}x{0}", dim - 1)));
                }
                MetricSpec::Gram(rows)
            }
            (other, _) => {
                return Err(err(
                    "structure",
                    format!("metric must be `orthonormal` or `gram`, got `{}`", other),
                ))
            }
        };

        let sampling = section("sampling");
        let lower: Vec<f64> = sampling.list("lower", dim)?;
        let upper: Vec<f64> = sampling.list("upper", dim)?;
        for i in 0..dim {
            if !lower[i].is_finite() || !upper[i].is_finite() || lower[i] >= upper[i] {
                return Err(err(
                    "sampling",
                    format!(
                        "axis {} needs finite bounds with lower < upper, got [{}, {}]",
                        i + 1,
                        lower[i],
                        upper[i]
                    ),
                ));
            }
        }
        let mode = match sampling.require("mode")? {
            "grid" => {
                if sampling.get("seed")?.is_some() || sampling.get("count")?.is_some() {
                    return Err(err("sampling", "grid mode takes `counts`, not `count`/`seed`"));
                }
                let counts: Vec<usize> = sampling.list("counts", dim)?;
                if counts.contains(&0) {
                    return Err(err("sampling", "grid counts must be at least 1"));
                }
                SamplingMode::Grid { counts }
            }
            "random" => {
                if sampling.get("counts")?.is_some() {
                    return Err(err("sampling", "random mode takes `count` and `seed`, not `counts`"));
                }
                let count: usize = sampling
                    .number("count")?
                    .ok_or_else(|| err("sampling", "missing key `count`"))?;
                if count == 0 {
                    return Err(err("sampling", "count must be at least 1"));
                }
                let seed = sampling
                    .number("seed")?
                    .ok_or_else(|| err("sampling", "random mode needs a `seed`"))?;
                SamplingMode::Random { count, seed }
            }
            other => {
                return Err(err(
                    "sampling",
                    format!("mode must be `grid` or `random`, got `{}`", other),
                ))
            }
        };

        let t = section("tolerances");
        let mut tolerances = Tolerances::default();
        for (key, slot) in [
            ("rank", &mut tolerances.rank),
            ("cluster", &mut tolerances.cluster),
            ("fd_step", &mut tolerances.fd_step),
            ("beta_const", &mut tolerances.beta_const),
            ("frame", &mut tolerances.frame),
        ] {
            if let Some(v) = t.number::<f64>(key)? {
                if !(v.is_finite() && v > 0.0) {
                    return Err(err("tolerances", format!("`{}` must be positive and finite", key)));
                }
                *slot = v;
            }
        }

        Ok(RunConfig {
            dim,
            coords,
            theta,
            frame,
            metric,
            sampling: Sampling { lower, upper, mode },
            tolerances,
        })
    }

    pub fn structure(&self) -> Result<SRStructure, ConfigError> {
        fn refs(v: &[String]) -> Vec<&str> {
            v.iter().map(String::as_str).collect()
        }
        let frame: Vec<Vec<&str>> = self.frame.iter().map(|v| refs(v)).collect();
        let gram: Option<Vec<Vec<&str>>> = match &self.metric {
            MetricSpec::Orthonormal => None,
            MetricSpec::Gram(rows) => Some(rows.iter().map(|v| refs(v)).collect()),
        };
        SRStructure::parse(&refs(&self.coords), &refs(&self.theta), &frame, gram.as_deref())
            .map_err(|e| err("structure", e.to_string()))
    }

    pub fn sample_box(&self) -> SampleBox {
        SampleBox::new(self.sampling.lower.clone(), self.sampling.upper.clone()).expect("bounds validated on parse")
    }

    pub fn samples(&self) -> Result<Vec<Vec<f64>>, ConfigError> {
        let b = self.sample_box();
        match &self.sampling.mode {
            SamplingMode::Grid { counts } => b.grid(counts).map_err(|e| err("sampling", e.to_string())),
            SamplingMode::Random { count, seed } => Ok(b.random(*count, *seed)),
        }
    }
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplingMode::Grid { counts } => {
                let c: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
                write!(f, "grid {}", c.join("x"))
            }
            SamplingMode::Random { count, seed } => write!(f, "random {} (seed {})", count, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEISENBERG: &str = "\
[manifold]
dim = 3
coords = x, y, z   # trailing comment

[structure]   # section comment
theta = -y/2, x/2, 1
frame = 1, 0, y/2; 0, 1, -x/2

[sampling]
mode = grid
lower = -1, -1, -1
upper = 1, 1, 1
counts = 2, 2, 1
";

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::parse(HEISENBERG).unwrap();
        assert_eq!(c.coords, ["x", "y", "z"]);
        assert_eq!(c.frame[1], ["0", "1", "-x/2"]);
        assert_eq!(c.metric, MetricSpec::Orthonormal);
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.samples().unwrap().len(), 4);
        assert_eq!(c.structure().unwrap().rank(), 2);
    }

    #[test]
    fn errors_name_the_section() {
        let bad = HEISENBERG.replace("theta = -y/2, x/2, 1", "theta = -y/2, x/2");
        let e = RunConfig::parse(&bad).unwrap_err();
        assert_eq!(e.section, "structure");
        assert!(e.to_string().starts_with("[structure]"));

        let bad = HEISENBERG.replace("mode = grid", "mode = grid\nseed = 3");
        assert_eq!(RunConfig::parse(&bad).unwrap_err().section, "sampling");

        let bad = HEISENBERG.replace("lower = -1, -1, -1", "lower = -1, 2, -1");
        assert_eq!(RunConfig::parse(&bad).unwrap_err().section, "sampling");

        let bad = format!("{}\n[tolerances]\nrank = -1\n", HEISENBERG);
        assert_eq!(RunConfig::parse(&bad).unwrap_err().section, "tolerances");

        let bad = format!("{}\n[extra]\nk = 1\n", HEISENBERG);
        assert_eq!(RunConfig::parse(&bad).unwrap_err().section, "extra");

        let bad = HEISENBERG.replace("dim = 3", "dim = 3\ndim = 4");
        assert!(RunConfig::parse(&bad).unwrap_err().message.contains("duplicate"));
    }

    #[test]
    fn random_mode_needs_seed() {
        let random = HEISENBERG
            .replace("mode = grid", "mode = random")
            .replace("counts = 2, 2, 1", "count = 5");
        assert!(RunConfig::parse(&random).unwrap_err().message.contains("seed"));
        let c = RunConfig::parse(&format!("{}seed = 9\n", random)).unwrap();
        assert_eq!(c.sampling.mode, SamplingMode::Random { count: 5, seed: 9 });
    }

    #[test]
    fn gram_metric() {
        let text = HEISENBERG.replace(
            "frame = 1, 0, y/2; 0, 1, -x/2",
            "frame = 1, 0, y/2; 0, 1, -x/2\nmetric = gram\ngram = 2, 0; 0, 1",
        );
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(
            c.metric,
            MetricSpec::Gram(vec![vec!["2".into(), "0".into()], vec!["0".into(), "1".into()]])
        );
        c.structure().unwrap();
        let bad = text.replace("gram = 2, 0; 0, 1", "gram = 2, 0");
        assert_eq!(RunConfig::parse(&bad).unwrap_err().section, "structure");
    }

    #[test]
    fn bad_expression_is_a_structure_error() {
        let bad = HEISENBERG.replace("theta = -y/2, x/2, 1", "theta = -y/2, w, 1");
        let c = RunConfig::parse(&bad).unwrap();
        assert_eq!(c.structure().unwrap_err().section, "structure");
    }
}
