//! Flag, environment, and config-file resolution.
//!
//! Precedence: command-line flags, then `VULCAN_OUT_DIR` for the output
//! directory, then the optional TOML config file, then built-in defaults.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use vulcan::domains::collision::Obstacle;
use vulcan::{RewardFunctional, RiskBound, SampleBudget};

/// Domain selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Bandit,
    Gp,
    /// The bundled three-action penalty counterexample.
    Fig2,
}

impl Domain {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "bandit" => Ok(Domain::Bandit),
            "gp" => Ok(Domain::Gp),
            "fig2" => Ok(Domain::Fig2),
            other => bail!("unknown domain '{other}' (expected bandit, gp, or fig2)"),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::Bandit => "bandit",
            Domain::Gp => "gp",
            Domain::Fig2 => "fig2",
        }
    }
}

/// Planner selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Planner {
    Vulcanfs,
    Vulcan,
    Oracle,
    PenaltySweep,
}

impl Planner {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "vulcanfs" => Ok(Planner::Vulcanfs),
            "vulcan" => Ok(Planner::Vulcan),
            "oracle" => Ok(Planner::Oracle),
            "penalty-sweep" => Ok(Planner::PenaltySweep),
            other => bail!(
                "unknown planner '{other}' (expected vulcanfs, vulcan, oracle, or penalty-sweep)"
            ),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Planner::Vulcanfs => "vulcanfs",
            Planner::Vulcan => "vulcan",
            Planner::Oracle => "oracle",
            Planner::PenaltySweep => "penalty-sweep",
        }
    }
}

/// Parses a risk bound spec: `constant:0.01`, `linear:0.002`, or
/// `sataffine:0.4,0.015,0.001`.
pub fn parse_delta(spec: &str) -> Result<RiskBound> {
    let (family, params) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("risk bound '{spec}' must look like family:params"))?;
    let values: Vec<f64> = params
        .split(',')
        .map(|p| p.trim().parse::<f64>().context("bad risk bound parameter"))
        .collect::<Result<_>>()?;
    match (family, values.as_slice()) {
        ("constant", [delta]) => Ok(RiskBound::constant(*delta)),
        ("linear", [alpha]) => Ok(RiskBound::linear(*alpha)),
        ("sataffine", [a, b, c]) => Ok(RiskBound::saturating_affine(*a, *b, *c)),
        _ => bail!("risk bound '{spec}' has the wrong family or parameter count"),
    }
}

/// Renders a risk bound back into the CLI spelling, echoed in records.
pub fn delta_spec(bound: &RiskBound) -> String {
    match bound {
        RiskBound::Constant { delta } => format!("constant:{delta}"),
        RiskBound::Linear { alpha } => format!("linear:{alpha}"),
        RiskBound::SaturatingAffine { a, b, c } => format!("sataffine:{a},{b},{c}"),
    }
}

/// Parses a sampling budget: `samples:50000` or `seconds:2.5`.
pub fn parse_budget(spec: &str) -> Result<SampleBudget> {
    let (mode, value) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("budget '{spec}' must look like samples:N or seconds:S"))?;
    match mode {
        "samples" => Ok(SampleBudget::Samples(value.parse().context("bad sample count")?)),
        "seconds" => {
            let secs: f64 = value.parse().context("bad seconds value")?;
            if secs <= 0.0 {
                bail!("wall-clock budget must be positive");
            }
            Ok(SampleBudget::WallClock(std::time::Duration::from_secs_f64(secs)))
        }
        other => bail!("unknown budget mode '{other}'"),
    }
}

pub fn budget_spec(budget: &SampleBudget) -> String {
    match budget {
        SampleBudget::Samples(n) => format!("samples:{n}"),
        SampleBudget::WallClock(d) => format!("seconds:{}", d.as_secs_f64()),
    }
}

/// Parses an inclusive penalty range `lo:hi:step`.
pub fn parse_m_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        bail!("penalty range '{spec}' must look like lo:hi:step");
    };
    let (lo, hi, step): (f64, f64, f64) = (lo.parse()?, hi.parse()?, step.parse()?);
    if step <= 0.0 || hi < lo {
        bail!("penalty range '{spec}' is empty or has nonpositive step");
    }
    let mut out = Vec::new();
    let mut m = lo;
    while m <= hi + 1e-9 {
        out.push(m);
        m += step;
    }
    Ok(out)
}

pub fn parse_grid(spec: &str) -> Result<(i32, i32)> {
    let (w, h) = spec
        .split_once('x')
        .ok_or_else(|| anyhow!("grid '{spec}' must look like WxH"))?;
    Ok((w.parse()?, h.parse()?))
}

pub fn parse_cell(spec: &str) -> Result<(i32, i32)> {
    let (x, y) = spec
        .split_once(',')
        .ok_or_else(|| anyhow!("cell '{spec}' must look like x,y"))?;
    Ok((x.trim().parse()?, y.trim().parse()?))
}

pub fn parse_obstacle(spec: &str) -> Result<Obstacle> {
    let values: Vec<f64> = spec
        .split(',')
        .map(|p| p.trim().parse::<f64>().context("bad obstacle coordinate"))
        .collect::<Result<_>>()?;
    let [x0, y0, x1, y1] = values.as_slice() else {
        bail!("obstacle '{spec}' must look like xmin,ymin,xmax,ymax");
    };
    if x1 <= x0 || y1 <= y0 {
        bail!("obstacle '{spec}' has no area");
    }
    Ok(Obstacle::new(*x0, *y0, *x1, *y1))
}

/// Optional config file; every field mirrors a flag and flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub domain: Option<String>,
    pub preset: Option<String>,
    pub horizon: Option<usize>,
    pub gamma: Option<f64>,
    pub delta: Option<String>,
    pub f: Option<String>,
    pub planner: Option<String>,
    pub budget: Option<String>,
    pub c: Option<f64>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub grid: Option<String>,
    pub start: Option<String>,
    pub obstacles: Option<Vec<String>>,
    pub m: Option<String>,
    pub out: Option<String>,
}

impl FileConfig {
    pub fn load(path: &PathBuf) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
    }
}

/// Fully resolved run configuration, echoed verbatim into every record.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedRun {
    pub domain: Domain,
    pub planner: Planner,
    pub preset: String,
    pub horizon: usize,
    pub gamma: f64,
    pub delta: String,
    pub f: String,
    pub budget: String,
    pub c: f64,
    pub seed: u64,
    pub replicates: usize,
    pub grid: Option<String>,
    pub start: Option<String>,
    pub obstacles: Option<Vec<String>>,
    pub m: Option<String>,
}

impl ResolvedRun {
    pub fn reward_functional(&self) -> RewardFunctional {
        RewardFunctional::parse(&self.f).expect("validated at resolution time")
    }

    pub fn risk_bound(&self) -> RiskBound {
        parse_delta(&self.delta).expect("validated at resolution time")
    }

    pub fn sample_budget(&self) -> SampleBudget {
        parse_budget(&self.budget).expect("validated at resolution time")
    }
}

/// Resolves the output directory: flag, then env, then config, then default.
pub fn resolve_out_dir(flag: Option<PathBuf>, file: &FileConfig) -> PathBuf {
    flag.or_else(|| std::env::var_os("VULCAN_OUT_DIR").map(PathBuf::from))
        .or_else(|| file.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_specs_round_trip() {
        for spec in ["constant:0.01", "linear:0.002", "sataffine:0.4,0.015,0.001"] {
            let bound = parse_delta(spec).unwrap();
            assert_eq!(delta_spec(&bound), spec);
        }
        assert!(parse_delta("linear").is_err());
        assert!(parse_delta("cubic:1").is_err());
        assert!(parse_delta("sataffine:1,2").is_err());
    }

    #[test]
    fn budget_specs_parse() {
        assert_eq!(
            parse_budget("samples:500").unwrap(),
            SampleBudget::Samples(500)
        );
        assert!(matches!(
            parse_budget("seconds:1.5").unwrap(),
            SampleBudget::WallClock(_)
        ));
        assert!(parse_budget("samples:-3").is_err());
        assert!(parse_budget("minutes:1").is_err());
    }

    #[test]
    fn m_range_is_inclusive() {
        let ms = parse_m_range("0:300:1").unwrap();
        assert_eq!(ms.len(), 301);
        assert_eq!(ms[0], 0.0);
        assert_eq!(ms[300], 300.0);
        assert!(parse_m_range("5:1:1").is_err());
    }

    #[test]
    fn geometry_specs_parse() {
        assert_eq!(parse_grid("6x6").unwrap(), (6, 6));
        assert_eq!(parse_cell("2,3").unwrap(), (2, 3));
        let obstacle = parse_obstacle("1.25,1.25,2.75,4.75").unwrap();
        assert_eq!(obstacle.x_max, 2.75);
        assert!(parse_obstacle("1,2,0,4").is_err());
    }
}
