use hypowave_core::flow::{Aabb, RegionSpec};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("key `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Flow,
    Beam,
    Wave,
    Sweep,
    Nilpotent,
    Escape,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Flow,
        ExperimentKind::Beam,
        ExperimentKind::Wave,
        ExperimentKind::Sweep,
        ExperimentKind::Nilpotent,
        ExperimentKind::Escape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Flow => "flow",
            ExperimentKind::Beam => "beam",
            ExperimentKind::Wave => "wave",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Nilpotent => "nilpotent",
            ExperimentKind::Escape => "escape",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ExperimentKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown experiment kind `{s}`"))
    }
}

/// Flat `key = value` experiment description; lists are comma separated.
///
/// Keys not meaningful for a kind are ignored by it but still echoed.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Built-in frame name or path to a frame file.
    pub frame: String,
    pub eps: Vec<f64>,
    pub k: Vec<f64>,
    pub t_final: f64,
    /// Time step; a multiple of `ε` for `escape`.
    pub dt: f64,
    /// Grid node counts; empty sizes grids automatically.
    pub grid: Vec<usize>,
    /// Absolute radius for `beam`, multiple of `ε` for `wave` and `sweep`.
    pub cutoff: f64,
    pub omega: Option<RegionSpec>,
    /// Half-width of the column outside `ω` for `wave` and `sweep`, of the box for `beam`.
    pub half_width: f64,
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
    /// Base point for `nilpotent`.
    pub point: Vec<f64>,
    pub order: u32,
    pub ppw: f64,
    pub samples: usize,
    /// Escape horizon `horizon/ε`.
    pub horizon: f64,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            kind,
            frame: "heisenberg".into(),
            eps: vec![0.2],
            k: vec![40.0],
            t_final: 1.0,
            dt: 1e-4,
            grid: Vec::new(),
            cutoff: 1.1,
            omega: None,
            half_width: 0.5,
            x0: vec![0.0, 0.0, 0.0],
            xi0: vec![0.5, 0.0, 2.5],
            point: vec![0.0, 0.0, 0.0],
            order: 8,
            ppw: 10.0,
            samples: 32,
            horizon: 12.0,
            seed: 1,
            jobs: 0,
            out: PathBuf::from(format!("out/{kind}")),
        };
        match kind {
            ExperimentKind::Beam => ExperimentConfig {
                eps: vec![1.0],
                k: vec![40.0, 80.0, 160.0, 320.0],
                cutoff: 2.0,
                half_width: 3.0,
                ..base
            },
            ExperimentKind::Sweep => {
                ExperimentConfig { eps: vec![0.2, 0.1, 0.05], k: vec![40.0, 80.0, 160.0], ..base }
            }
            ExperimentKind::Nilpotent => ExperimentConfig { eps: vec![0.2, 0.1, 0.05, 0.025], ..base },
            ExperimentKind::Escape => ExperimentConfig { eps: vec![0.2, 0.1, 0.05], dt: 0.02, ..base },
            _ => base,
        }
    }

    /// Parses config text on top of the defaults of `kind`.
    ///
    /// A `kind` key, if present, must agree with `kind`.
    pub fn parse(text: &str, kind: ExperimentKind) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::defaults(kind);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, msg: format!("expected `key = value`, got `{line}`") })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |msg: String| ConfigError::Value { key: key.into(), msg };
        match key {
            "kind" => {
                let k: ExperimentKind = value.parse().map_err(bad)?;
                if k != self.kind {
                    return Err(bad(format!("config is for `{k}` but `{}` was requested", self.kind)));
                }
            }
            "frame" => self.frame = value.to_string(),
            "eps" => self.eps = list(value).map_err(bad)?,
            "k" => self.k = list(value).map_err(bad)?,
            "T" => self.t_final = scalar(value).map_err(bad)?,
            "dt" => self.dt = scalar(value).map_err(bad)?,
            "grid" => self.grid = list(value).map_err(bad)?,
            "cutoff" => self.cutoff = scalar(value).map_err(bad)?,
            "omega" => self.omega = parse_region(value).map_err(bad)?,
            "half_width" => self.half_width = scalar(value).map_err(bad)?,
            "x0" => self.x0 = list(value).map_err(bad)?,
            "xi0" => self.xi0 = list(value).map_err(bad)?,
            "point" => self.point = list(value).map_err(bad)?,
            "order" => self.order = scalar(value).map_err(bad)?,
            "ppw" => self.ppw = scalar(value).map_err(bad)?,
            "samples" => self.samples = scalar(value).map_err(bad)?,
            "horizon" => self.horizon = scalar(value).map_err(bad)?,
            "seed" => self.seed = scalar(value).map_err(bad)?,
            "jobs" => self.jobs = scalar(value).map_err(bad)?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(ConfigError::Value { key: key.into(), msg: "unknown key".into() }),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(ConfigError::Invalid(msg.into())) };
        let pos = |v: f64| v > 0.0 && v.is_finite();
        need(self.eps.iter().all(|&e| pos(e)), "eps values must be positive")?;
        need(self.k.iter().all(|&k| pos(k)), "k values must be positive")?;
        need(pos(self.t_final) && pos(self.dt), "T and dt must be positive")?;
        need(pos(self.cutoff) && pos(self.half_width) && pos(self.ppw) && pos(self.horizon), "cutoff, half_width, ppw and horizon must be positive")?;
        need(self.grid.iter().all(|&c| c > 0), "grid counts must be positive")?;
        need([2, 4, 6, 8].contains(&self.order), "order must be 2, 4, 6 or 8")?;
        need(!self.frame.is_empty(), "frame must be named")?;
        match self.kind {
            ExperimentKind::Sweep => {
                need(!self.eps.is_empty() && !self.k.is_empty(), "sweep needs nonempty eps and k lists")?;
                need(self.eps.len() == self.k.len(), "sweep pairs eps and k entrywise; the lists must have equal length")?;
            }
            ExperimentKind::Beam | ExperimentKind::Nilpotent | ExperimentKind::Escape => {
                need(!self.eps.is_empty() && !self.k.is_empty(), "eps and k lists must be nonempty")?;
            }
            ExperimentKind::Wave => need(!self.eps.is_empty() && !self.k.is_empty(), "wave needs eps and k")?,
            ExperimentKind::Flow => need(self.x0.len() == self.xi0.len() && !self.x0.is_empty(), "x0 and xi0 must have equal length")?,
        }
        if self.kind == ExperimentKind::Escape {
            need(self.samples > 0, "samples must be positive")?;
        }
        Ok(())
    }

    /// The config as parseable text, one key per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("kind", self.kind.to_string());
        put("frame", self.frame.clone());
        put("eps", join(&self.eps));
        put("k", join(&self.k));
        put("T", self.t_final.to_string());
        put("dt", self.dt.to_string());
        put("grid", join(&self.grid));
        put("cutoff", self.cutoff.to_string());
        put("omega", self.omega.as_ref().map(format_region).unwrap_or_else(|| "default".into()));
        put("half_width", self.half_width.to_string());
        put("x0", join(&self.x0));
        put("xi0", join(&self.xi0));
        put("point", join(&self.point));
        put("order", self.order.to_string());
        put("ppw", self.ppw.to_string());
        put("samples", self.samples.to_string());
        put("horizon", self.horizon.to_string());
        put("seed", self.seed.to_string());
        put("jobs", self.jobs.to_string());
        put("out", self.out.display().to_string());
        s
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn scalar<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

fn list<T: FromStr>(v: &str) -> Result<Vec<T>, String> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| scalar(s.trim())).collect()
}

/// `everything`, `strip AXIS LO HI`, `strip_complement AXIS LO HI`, or
/// `boxes|box_complement LO.. HI.. [; LO.. HI..]` with `inf` allowed; `default` is none.
pub fn parse_region(v: &str) -> Result<Option<RegionSpec>, String> {
    let mut words = v.split_whitespace();
    let head = words.next().ok_or("empty region")?;
    let rest: Vec<&str> = words.collect();
    let strip = |rest: &[&str]| -> Result<(usize, f64, f64), String> {
        if rest.len() != 3 {
            return Err("strips take AXIS LO HI".into());
        }
        Ok((scalar(rest[0])?, scalar(rest[1])?, scalar(rest[2])?))
    };
    let boxes = |rest: &[&str]| -> Result<Vec<Aabb>, String> {
        let text = rest.join(" ");
        text.split(';')
            .map(|b| {
                let nums: Vec<f64> = b.split_whitespace().map(scalar).collect::<Result<_, _>>()?;
                if nums.is_empty() || !nums.len().is_multiple_of(2) {
                    return Err(format!("box `{b}` needs LO.. HI.. of equal length"));
                }
                let d = nums.len() / 2;
                Ok(Aabb::new(nums[..d].to_vec(), nums[d..].to_vec()))
            })
            .collect()
    };
    Ok(Some(match head {
        "default" if rest.is_empty() => return Ok(None),
        "everything" if rest.is_empty() => RegionSpec::Everything,
        "strip" => {
            let (axis, lo, hi) = strip(&rest)?;
            RegionSpec::Strip { axis, lo, hi }
        }
        "strip_complement" => {
            let (axis, lo, hi) = strip(&rest)?;
            RegionSpec::StripComplement { axis, lo, hi }
        }
        "boxes" => RegionSpec::Boxes(boxes(&rest)?),
        "box_complement" => RegionSpec::BoxComplement(boxes(&rest)?),
        _ => return Err(format!("unknown region `{v}`")),
    }))
}

pub fn format_region(r: &RegionSpec) -> String {
    let boxes = |b: &[Aabb]| {
        b.iter()
            .map(|bx| bx.lo.iter().chain(&bx.hi).map(|v| v.to_string()).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("; ")
    };
    match r {
        RegionSpec::Everything => "everything".into(),
        RegionSpec::Strip { axis, lo, hi } => format!("strip {axis} {lo} {hi}"),
        RegionSpec::StripComplement { axis, lo, hi } => format!("strip_complement {axis} {lo} {hi}"),
        RegionSpec::Boxes(b) => format!("boxes {}", boxes(b)),
        RegionSpec::BoxComplement(b) => format!("box_complement {}", boxes(b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        for kind in ExperimentKind::ALL {
            let c = ExperimentConfig::defaults(kind);
            assert_eq!(ExperimentConfig::parse(&c.to_text(), kind).unwrap(), c);
        }
    }

    #[test]
    fn regions_round_trip() {
        for text in ["everything", "strip 2 0.5 1.5", "strip_complement 2 1.5707963267948966 4.71238898038469", "box_complement -0.5 -0.5 -inf 0.5 0.5 inf", "boxes 0 0 1 1; 2 2 3 3"] {
            let r = parse_region(text).unwrap().unwrap();
            assert_eq!(format_region(&r), text);
        }
        assert!(parse_region("boxes 1 2 3").is_err());
        assert!(parse_region("strip 1 2").is_err());
    }

    #[test]
    fn errors_name_the_problem() {
        let k = ExperimentKind::Sweep;
        assert!(matches!(ExperimentConfig::parse("eps = \n", k), Err(ConfigError::Invalid(_))));
        assert!(matches!(ExperimentConfig::parse("colour = red", k), Err(ConfigError::Value { .. })));
        assert!(matches!(ExperimentConfig::parse("just words", k), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(ExperimentConfig::parse("kind = flow", k), Err(ConfigError::Value { .. })));
        assert!(matches!(ExperimentConfig::parse("eps = 0.2, 0.1\nk = 40", k), Err(ConfigError::Invalid(_))));
        assert!(matches!(ExperimentConfig::parse("eps = -1", ExperimentKind::Flow), Err(ConfigError::Invalid(_))));
    }
}
