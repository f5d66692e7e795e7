//! Command-line flags and their application to a scenario.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vring::energy::GainRange;
use vring::stability::boundaries::Plane;
use vring::stability::roots::Rect;
use vring::{Error, Result};

use crate::scenario::{ChainSection, EgoChoice, ScenarioFile};

#[derive(Debug, Parser)]
#[command(
    name = "vring",
    version,
    about = "Mixed-traffic chain simulation, energy sweeps and stability charts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a chain: trajectory CSV plus summary JSON.
    Simulate(Common),
    /// Energy grid over (β, β_B), savings JSON and an optional N sweep.
    Energy(Common),
    /// Stability chart: cell CSV, boundary CSV, summary JSON, optional SVG.
    Chart(Common),
    /// Characteristic roots of the linearized chain inside a rectangle.
    Roots(Common),
    /// Head-to-tail frequency response CSV.
    Freqresp(Common),
    /// Print a bundled scenario in canonical form.
    Scenario {
        #[arg(value_enum)]
        name: Bundled,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Bundled {
    /// 1 lead + 11 human drivers.
    HumanChain,
    /// ACC ego followed by 10 human drivers.
    AccChain,
    /// ATC ego with 10 human drivers behind it.
    AtcChain,
    /// Human chain with a lead that never changes speed.
    ZeroProfile,
    /// TC ego with 10 human drivers, (β, β_B) plane.
    TcChart,
}

impl Bundled {
    pub fn scenario(self) -> ScenarioFile {
        match self {
            Bundled::HumanChain => ScenarioFile::platoon(EgoChoice::Hv, 10),
            Bundled::AccChain => ScenarioFile::platoon(EgoChoice::Acc, 10),
            Bundled::AtcChain => ScenarioFile::platoon(EgoChoice::Atc, 10),
            Bundled::ZeroProfile => {
                let mut s = ScenarioFile::platoon(EgoChoice::Hv, 10);
                s.lead = vring::simulator::LeadProfile::cruise();
                s
            }
            Bundled::TcChart => {
                let mut s = ScenarioFile::platoon(EgoChoice::Tc, 10);
                s.analysis.plane = Plane::BetaBetaB;
                s
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlaneArg {
    BetaAlpha,
    BetaBetab,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "bundled")]
    pub scenario: Option<PathBuf>,
    /// Bundled scenario instead of a file.
    #[arg(long, value_enum)]
    pub bundled: Option<Bundled>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub plane: Option<PlaneArg>,
    /// `start:end:step` for energy grids, `min:max` for chart axes.
    #[arg(long)]
    pub beta_range: Option<String>,
    /// Same format as `--beta-range`.
    #[arg(long)]
    pub betab_range: Option<String>,
    /// Ego α; also the fixed α of the (β, β_B) plane.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// `N`, or `first:last` for the energy savings sweep.
    #[arg(long)]
    pub n_followers: Option<String>,
    /// `N` or `NXxNY` chart cells.
    #[arg(long)]
    pub resolution: Option<String>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    /// `re_min:re_max:im_min:im_max` root-search rectangle.
    #[arg(long, allow_hyphen_values = true)]
    pub rect: Option<String>,
    /// Worker threads; 1 runs sequentially. Defaults to all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also render the chart as SVG.
    #[arg(long)]
    pub svg: bool,
}

fn numbers(text: &str, flag: &str) -> Result<Vec<f64>> {
    text.split(':')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("--{flag}: cannot parse `{p}` as a number")))
        })
        .collect()
}

fn bounds(text: &str, flag: &str) -> Result<(f64, f64)> {
    match numbers(text, flag)?.as_slice() {
        [a, b] | [a, b, _] if b > a => Ok((*a, *b)),
        _ => Err(Error::Config(format!(
            "--{flag}: expected `min:max` with max > min, got `{text}`"
        ))),
    }
}

fn gain_range(text: &str, flag: &str) -> Result<GainRange> {
    match numbers(text, flag)?.as_slice() {
        [a] => Ok(GainRange::single(*a)),
        [start, end, step] => Ok(GainRange {
            start: *start,
            end: *end,
            step: *step,
        }),
        _ => Err(Error::Config(format!(
            "--{flag}: expected `value` or `start:end:step`, got `{text}`"
        ))),
    }
}

/// `N` or `first:last`.
pub fn follower_counts(text: &str) -> Result<Vec<usize>> {
    let parse = |p: &str| {
        p.trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("--n-followers: cannot parse `{p}`")))
    };
    match text.split_once(':') {
        None => Ok(vec![parse(text)?]),
        Some((a, b)) => {
            let (a, b) = (parse(a)?, parse(b)?);
            if b < a {
                return Err(Error::Config("--n-followers: empty range".into()));
            }
            Ok((a..=b).collect())
        }
    }
}

fn resolution(text: &str) -> Result<(usize, usize)> {
    let parse = |p: &str| {
        p.trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("--resolution: cannot parse `{text}`")))
    };
    match text.split_once('x') {
        None => parse(text).map(|n| (n, n)),
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
    }
}

impl Common {
    pub fn load(&self) -> Result<ScenarioFile> {
        match (&self.scenario, self.bundled) {
            (Some(path), _) => ScenarioFile::load(path),
            (None, Some(b)) => Ok(b.scenario()),
            (None, None) => Err(Error::Config(
                "pass --scenario <file> or --bundled <name>".into(),
            )),
        }
    }

    /// Applies the flags of `command` to `s`. Returns the N sweep of the energy command, if any.
    pub fn apply(&self, command: &str, s: &mut ScenarioFile) -> Result<Option<Vec<usize>>> {
        let chart = command == "chart";
        if let Some(p) = self.plane {
            s.analysis.plane = match p {
                PlaneArg::BetaAlpha => Plane::BetaAlpha,
                PlaneArg::BetaBetab => Plane::BetaBetaB,
            };
        }
        if let Some(a) = self.alpha {
            s.analysis.small_alpha = a;
            if let ChainSection::Platoon(p) = &mut s.chain {
                p.gains.alpha = a;
            }
        }
        if let Some(r) = &self.beta_range {
            if chart {
                s.analysis.x_range = Some(bounds(r, "beta-range")?);
            } else {
                s.sweep.beta = gain_range(r, "beta-range")?;
            }
        }
        if let Some(r) = &self.betab_range {
            if chart {
                if s.analysis.plane != Plane::BetaBetaB {
                    return Err(Error::Config(
                        "--betab-range sets the y axis of the beta-betab plane only".into(),
                    ));
                }
                s.analysis.y_range = Some(bounds(r, "betab-range")?);
            } else {
                s.sweep.beta_b = gain_range(r, "betab-range")?;
            }
        }
        if let Some(r) = &self.resolution {
            s.analysis.resolution = resolution(r)?;
        }
        if let Some(w) = self.omega_max {
            s.analysis.omega_max = w;
        }
        if let Some(r) = &self.rect {
            let v = numbers(r, "rect")?;
            let [a, b, c, d] = v.as_slice() else {
                return Err(Error::Config(
                    "--rect: expected `re_min:re_max:im_min:im_max`".into(),
                ));
            };
            s.analysis.roots_rect = Rect::new(*a, *b, *c, *d)?;
        }
        let mut sweep = None;
        if let Some(n) = &self.n_followers {
            let ns = follower_counts(n)?;
            if ns.len() == 1 {
                s.set_followers(ns[0])?;
            } else if command == "energy" {
                sweep = Some(ns);
            } else {
                return Err(Error::Config(
                    "--n-followers ranges are only accepted by `energy`".into(),
                ));
            }
        }
        s.validate()?;
        Ok(sweep)
    }
}
