//! Run configuration: a flat `key = value` file merged with overrides.
//!
//! ```text
//! # comment
//! problem   = hs_circles
//! n         = 256
//! lambda    = 150
//! study     = refine 128,256,512
//! ```
//!
//! Custom Hele-Shaw setups use `problem = hele_shaw` together with
//! `domain`, `slot`, `initial_fluid` and `t`. Shapes are separated by `;`:
//! `circle cx cy r`, `rect x0 y0 x1 y1`, `polygon x1 y1 x2 y2 ...`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::shapes::Shape;

/// Keys accepted in files and overrides.
pub const KEYS: &[&str] = &[
    "problem",
    "n",
    "mu",
    "gamma",
    "lambda",
    "tol",
    "max_outer",
    "tau",
    "lipschitz",
    "max_inner",
    "penalty",
    "guard",
    "t",
    "domain",
    "slot",
    "initial_fluid",
    "out",
    "study",
];

#[derive(Debug, Clone, PartialEq)]
pub enum StudyMode {
    Single,
    Refine(Vec<usize>),
    TimeSweep(Vec<f64>),
}

/// How the penalty weight is chosen when none is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyChoice {
    /// The instance's preset value.
    Preset,
    /// Margin times the discrete lower bound.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomHeleShaw {
    pub lo: f64,
    pub hi: f64,
    pub slot: Vec<Shape>,
    pub initial_fluid: Vec<Shape>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub n: Option<usize>,
    /// `μ`, or `γ₁ = γ₂` for Hele-Shaw.
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub tol: Option<f64>,
    pub max_outer: Option<usize>,
    pub tau: Option<f64>,
    pub lipschitz: Option<f64>,
    pub max_inner: Option<usize>,
    pub penalty: PenaltyChoice,
    pub guard: bool,
    pub t: Option<f64>,
    pub custom: Option<CustomHeleShaw>,
    pub out: PathBuf,
    pub study: StudyMode,
}

impl RunConfig {
    /// Defaults for a named problem.
    pub fn for_problem(id: &str) -> Self {
        RunConfig {
            problem: id.to_string(),
            n: None,
            mu: None,
            lambda: None,
            tol: None,
            max_outer: None,
            tau: None,
            lipschitz: None,
            max_inner: None,
            penalty: PenaltyChoice::Preset,
            guard: true,
            t: None,
            custom: None,
            out: PathBuf::from("out"),
            study: StudyMode::Single,
        }
    }

    /// Reads `path`, applies `overrides` on top, and parses the result.
    pub fn load(path: Option<&Path>, overrides: &BTreeMap<String, String>) -> Result<Self> {
        let mut pairs = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                parse_pairs(&text)?
            }
            None => BTreeMap::new(),
        };
        for (k, v) in overrides {
            check_key(k)?;
            pairs.insert(k.clone(), v.clone());
        }
        Self::from_pairs(&pairs)
    }

    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let problem = pairs
            .get("problem")
            .ok_or_else(|| Error::Config("missing `problem`".into()))?;
        let mut c = RunConfig::for_problem(problem);
        for (key, raw) in pairs {
            let v = raw.trim();
            match key.as_str() {
                "problem" => {}
                "n" => {
                    let n: usize = num(key, v)?;
                    if n < 9 {
                        return Err(Error::Config(format!("n must be at least 9, got {n}")));
                    }
                    c.n = Some(n);
                }
                "mu" | "gamma" => c.mu = Some(positive(key, v)?),
                "lambda" => c.lambda = Some(positive(key, v)?),
                "tol" => c.tol = Some(positive(key, v)?),
                "max_outer" => c.max_outer = Some(num(key, v)?),
                "tau" => c.tau = Some(positive(key, v)?),
                "lipschitz" => c.lipschitz = Some(positive(key, v)?),
                "max_inner" => c.max_inner = Some(num(key, v)?),
                "penalty" => {
                    c.penalty = match v {
                        "preset" => PenaltyChoice::Preset,
                        "auto" => PenaltyChoice::Auto,
                        _ => return Err(Error::Config(format!("penalty must be `preset` or `auto`, got `{v}`"))),
                    }
                }
                "guard" => {
                    c.guard = match v {
                        "on" | "true" => true,
                        "off" | "false" => false,
                        _ => return Err(Error::Config(format!("guard must be on/off, got `{v}`"))),
                    }
                }
                "t" => {
                    let t: f64 = num(key, v)?;
                    if !(t >= 0.0 && t.is_finite()) {
                        return Err(Error::Config(format!("t must be non-negative, got {t}")));
                    }
                    c.t = Some(t);
                }
                "out" => c.out = PathBuf::from(v),
                "study" => c.study = parse_study(v)?,
                "domain" | "slot" | "initial_fluid" => {}
                _ => return Err(Error::Config(format!("unknown key `{key}`"))),
            }
        }
        if c.problem == "hele_shaw" {
            let get = |k: &str| {
                pairs
                    .get(k)
                    .ok_or_else(|| Error::Config(format!("custom Hele-Shaw setup needs `{k}`")))
            };
            let dom: Vec<f64> = get("domain")?
                .split_whitespace()
                .map(|s| num("domain", s))
                .collect::<Result<_>>()?;
            if dom.len() != 2 || dom[0] >= dom[1] {
                return Err(Error::Config("domain must be `lo hi` with lo < hi".into()));
            }
            c.custom = Some(CustomHeleShaw {
                lo: dom[0],
                hi: dom[1],
                slot: parse_shapes(get("slot")?)?,
                initial_fluid: parse_shapes(get("initial_fluid")?)?,
            });
            if c.t.is_none() {
                return Err(Error::Config("custom Hele-Shaw setup needs `t`".into()));
            }
        } else if ["domain", "slot", "initial_fluid"].iter().any(|k| pairs.contains_key(*k)) {
            return Err(Error::Config("domain/slot/initial_fluid only apply to `problem = hele_shaw`".into()));
        }
        Ok(c)
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let k = k.trim();
        check_key(k)?;
        if out.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{k}`", i + 1)));
        }
    }
    Ok(out)
}

/// Parses a `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{s}` is not key=value")))?;
    check_key(k.trim())?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn check_key(k: &str) -> Result<()> {
    if KEYS.contains(&k) {
        Ok(())
    } else {
        Err(Error::Config(format!("unknown key `{k}`")))
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn positive(key: &str, v: &str) -> Result<f64> {
    let x: f64 = num(key, v)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Config(format!("`{key}` must be positive, got {v}")))
    }
}

/// `single`, `refine 128,256,...` or `time-sweep 0.1,0.2,...`.
pub fn parse_study(v: &str) -> Result<StudyMode> {
    let mut parts = v.split_whitespace();
    let mode = parts.next().unwrap_or("");
    let list = parts.collect::<Vec<_>>().join("");
    let items = || list.split(',').filter(|s| !s.is_empty());
    match mode {
        "single" if list.is_empty() => Ok(StudyMode::Single),
        "refine" => {
            let ns: Vec<usize> = items().map(|s| num("study", s)).collect::<Result<_>>()?;
            if ns.is_empty() || ns.iter().any(|&n| n < 9) {
                return Err(Error::Config("refine needs grid sizes of at least 9".into()));
            }
            Ok(StudyMode::Refine(ns))
        }
        "time-sweep" => {
            let ts: Vec<f64> = items().map(|s| num("study", s)).collect::<Result<_>>()?;
            if ts.is_empty() || ts.iter().any(|t| !(*t >= 0.0)) {
                return Err(Error::Config("time-sweep needs non-negative times".into()));
            }
            Ok(StudyMode::TimeSweep(ts))
        }
        _ => Err(Error::Config(format!("unknown study `{v}`"))),
    }
}

/// `circle cx cy r; rect x0 y0 x1 y1; polygon x1 y1 ...`.
pub fn parse_shapes(v: &str) -> Result<Vec<Shape>> {
    let mut out = Vec::new();
    for item in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let mut words = item.split_whitespace();
        let kind = words.next().unwrap_or("");
        let xs: Vec<f64> = words.map(|w| num("shape", w)).collect::<Result<_>>()?;
        let shape = match (kind, xs.len()) {
            ("circle", 3) => Shape::circle([xs[0], xs[1]], xs[2]),
            ("rect", 4) => Shape::rect([xs[0], xs[1]], [xs[2], xs[3]]),
            ("polygon", m) if m >= 6 && m % 2 == 0 => {
                Shape::polygon(xs.chunks(2).map(|c| [c[0], c[1]]).collect())
            }
            _ => return Err(Error::Config(format!("bad shape `{item}`"))),
        };
        out.push(shape.map_err(|e| Error::Config(e.to_string()))?);
    }
    if out.is_empty() {
        return Err(Error::Config("empty shape list".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(s: &str) -> BTreeMap<String, String> {
        parse_pairs(s).unwrap()
    }

    #[test]
    fn parses_file_with_comments() {
        let c = RunConfig::from_pairs(&pairs(
            "# run\nproblem = phi1_1d\nn = 512 # finer\n\nlambda=45\nstudy = refine 256, 512,1024\n",
        ))
        .unwrap();
        assert_eq!(c.problem, "phi1_1d");
        assert_eq!(c.n, Some(512));
        assert_eq!(c.lambda, Some(45.0));
        assert_eq!(c.study, StudyMode::Refine(vec![256, 512, 1024]));
    }

    #[test]
    fn overrides_win() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "problem = phi1_1d\nn = 64\ntol = 1e-5\n").unwrap();
        let mut o = BTreeMap::new();
        o.insert("n".to_string(), "128".to_string());
        let c = RunConfig::load(Some(&path), &o).unwrap();
        assert_eq!(c.n, Some(128));
        assert_eq!(c.tol, Some(1e-5));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_pairs("problem phi1_1d").is_err());
        assert!(parse_pairs("colour = red").is_err());
        assert!(parse_pairs("n = 1\nn = 2").is_err());
        assert!(RunConfig::from_pairs(&pairs("n = 64")).is_err());
        assert!(RunConfig::from_pairs(&pairs("problem = phi1_1d\nn = 5")).is_err());
        assert!(RunConfig::from_pairs(&pairs("problem = phi1_1d\nlambda = -1")).is_err());
        assert!(RunConfig::from_pairs(&pairs("problem = phi1_1d\nstudy = sideways")).is_err());
        assert!(RunConfig::from_pairs(&pairs("problem = phi1_1d\nslot = circle 0 0 1")).is_err());
        assert!(parse_override("n").is_err());
    }

    #[test]
    fn custom_hele_shaw() {
        let c = RunConfig::from_pairs(&pairs(
            "problem = hele_shaw\ndomain = -3 3\nslot = circle 0 0 0.5\n\
             initial_fluid = circle 0 0 1; rect -1.5 -0.2 1.5 0.2\nt = 0.1\nstudy = time-sweep 0.05,0.1",
        ))
        .unwrap();
        let custom = c.custom.unwrap();
        assert_eq!(custom.initial_fluid.len(), 2);
        assert_eq!(c.study, StudyMode::TimeSweep(vec![0.05, 0.1]));
        assert!(RunConfig::from_pairs(&pairs("problem = hele_shaw\ndomain = -3 3\nslot = circle 0 0 1\ninitial_fluid = circle 0 0 2")).is_err());
    }

    #[test]
    fn shape_grammar() {
        let s = parse_shapes("polygon 0 0 1 0 0 1; circle 1 1 0.5").unwrap();
        assert_eq!(s.len(), 2);
        assert!(parse_shapes("polygon 0 0 1").is_err());
        assert!(parse_shapes("circle 0 0 -1").is_err());
        assert!(parse_shapes("").is_err());
    }
}
