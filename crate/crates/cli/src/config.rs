use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use efce::games::grid::GridGameSpec;
use efce::solver::{EpsilonMode, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    Jobmarket,
    Poker,
    Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameSelector {
    pub name: GameKind,
    /// Indian poker deck size.
    pub cards: u8,
    /// Grid side length.
    pub side: usize,
    pub payoff_seed: u64,
}

impl Default for GameSelector {
    fn default() -> Self {
        Self {
            name: GameKind::Jobmarket,
            cards: 8,
            side: 3,
            payoff_seed: 0,
        }
    }
}

impl GameSelector {
    pub fn grid_spec(&self) -> GridGameSpec {
        GridGameSpec {
            side: self.side,
            payoff_seed: self.payoff_seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Solve,
    Verify,
    Oracle,
    Bench,
    Moderate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    /// Grid sides to sweep.
    pub sides: Vec<usize>,
    /// Random games per side; payoff seeds start at `first_seed`.
    pub games: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sides: vec![3, 4, 5],
            games: 5,
        }
    }
}

/// Everything one invocation needs. Loaded from TOML, then overridden flag
/// by flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub game: GameSelector,
    pub solver: SolverConfig,
    pub out: PathBuf,
    /// Number of seeds; seed k is `first_seed + k`.
    pub seeds: usize,
    pub first_seed: u64,
    /// Check solve results with the exact oracle when the game is small
    /// enough to enumerate.
    pub verify_with_oracle: bool,
    pub bench: BenchConfig,
    /// Certificate read by `verify` and `moderate`.
    pub certificate: Option<PathBuf>,
    /// Suggestions emitted by `moderate`.
    pub count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            game: GameSelector::default(),
            solver: SolverConfig::default(),
            out: PathBuf::from("results"),
            seeds: 1,
            first_seed: 0,
            verify_with_oracle: true,
            bench: BenchConfig::default(),
            certificate: None,
            count: 10,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|k| self.first_seed + k).collect()
    }

    pub fn validate(&self, mode: Mode) -> CliResult<()> {
        if self.seeds == 0 {
            return Err(CliError::Config("seeds must be at least 1".into()));
        }
        if matches!(mode, Mode::Verify | Mode::Moderate) && self.certificate.is_none() {
            return Err(CliError::Config("this mode needs --certificate".into()));
        }
        if mode == Mode::Bench && (self.bench.sides.is_empty() || self.bench.games == 0) {
            return Err(CliError::Config("bench needs at least one side and one game".into()));
        }
        if self.game.name == GameKind::Grid && self.game.side < 2 {
            return Err(CliError::Config(format!("grid side must be at least 2, got {}", self.game.side)));
        }
        // Writability of the output directory.
        if mode != Mode::Moderate {
            std::fs::create_dir_all(&self.out)
                .map_err(|e| CliError::Config(format!("cannot create {}: {e}", self.out.display())))?;
            let probe = self.out.join(".write-probe");
            std::fs::write(&probe, b"")
                .and_then(|_| std::fs::remove_file(&probe))
                .map_err(|e| CliError::Config(format!("{} is not writable: {e}", self.out.display())))?;
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "efce", version, about = "Approximate extensive-form correlated equilibria of succinct games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the solver once per seed.
    Solve(Flags),
    /// Check a certificate's regret.
    Verify(Flags),
    /// Run exact coordinate descent on an enumerable game.
    Oracle(Flags),
    /// Sweep grid sizes and record time and memory against Γ.
    Bench(Flags),
    /// Print suggestions drawn from a certificate.
    Moderate(Flags),
}

impl Command {
    pub fn mode(&self) -> Mode {
        match self {
            Command::Solve(_) => Mode::Solve,
            Command::Verify(_) => Mode::Verify,
            Command::Oracle(_) => Mode::Oracle,
            Command::Bench(_) => Mode::Bench,
            Command::Moderate(_) => Mode::Moderate,
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Solve(f) | Command::Verify(f) | Command::Oracle(f) | Command::Bench(f) | Command::Moderate(f) => f,
        }
    }
}

#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// TOML file with RunConfig keys; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub game: Option<GameKind>,
    /// Indian poker deck size.
    #[arg(long = "C")]
    pub cards: Option<u8>,
    /// Grid side length.
    #[arg(long = "L")]
    pub side: Option<usize>,
    #[arg(long)]
    pub payoff_seed: Option<u64>,
    /// Payoff direction, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub w: Option<Vec<f64>>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// raw or gamma-scaled.
    #[arg(long)]
    pub epsilon_mode: Option<String>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub first_seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub strict_bounds: bool,
    /// Stop once r* falls below this fraction of its first value.
    #[arg(long)]
    pub stop_relative: Option<f64>,
    #[arg(long)]
    pub certificate: Option<PathBuf>,
    /// Suggestions to print in moderate mode.
    #[arg(long)]
    pub count: Option<usize>,
    /// Grid sides for bench, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sides: Option<Vec<usize>>,
    /// Random games per side for bench.
    #[arg(long)]
    pub games: Option<usize>,
    /// Zero the wall-clock column so convergence files are reproducible.
    #[arg(long)]
    pub no_telemetry: bool,
    #[arg(long)]
    pub no_oracle: bool,
    /// Worker threads for concurrent seeds; 0 picks the core count.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

impl Flags {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        self.apply(&mut config)?;
        Ok(config)
    }

    pub fn apply(&self, c: &mut RunConfig) -> CliResult<()> {
        if let Some(x) = self.game {
            c.game.name = x;
        }
        if let Some(x) = self.cards {
            c.game.cards = x;
        }
        if let Some(x) = self.side {
            c.game.side = x;
        }
        if let Some(x) = self.payoff_seed {
            c.game.payoff_seed = x;
        }
        if let Some(x) = &self.w {
            c.solver.w = x.clone();
        }
        if let Some(x) = self.epsilon {
            c.solver.epsilon = x;
        }
        if let Some(x) = self.delta {
            c.solver.delta = x;
        }
        if let Some(x) = &self.epsilon_mode {
            c.solver.epsilon_mode = parse_epsilon_mode(x)?;
        }
        if let Some(x) = self.max_rounds {
            c.solver.max_rounds = x;
        }
        if let Some(x) = self.seeds {
            c.seeds = x;
        }
        if let Some(x) = self.first_seed {
            c.first_seed = x;
        }
        if let Some(x) = &self.out {
            c.out = x.clone();
        }
        if self.strict_bounds {
            c.solver.strict_bounds = true;
        }
        if let Some(x) = self.stop_relative {
            c.solver.stop_relative = Some(x);
        }
        if let Some(x) = &self.certificate {
            c.certificate = Some(x.clone());
        }
        if let Some(x) = self.count {
            c.count = x;
        }
        if let Some(x) = &self.sides {
            c.bench.sides = x.clone();
        }
        if let Some(x) = self.games {
            c.bench.games = x;
        }
        if self.no_telemetry {
            c.solver.telemetry = false;
        }
        if self.no_oracle {
            c.verify_with_oracle = false;
        }
        Ok(())
    }
}

fn parse_epsilon_mode(s: &str) -> CliResult<EpsilonMode> {
    match s.to_ascii_lowercase().replace('_', "-").as_str() {
        "raw" => Ok(EpsilonMode::Raw),
        "gamma-scaled" | "gamma" => Ok(EpsilonMode::GammaScaled),
        other => Err(CliError::Config(format!("unknown epsilon mode {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "seeds = 4\n[game]\nname = \"grid\"\nside = 4\n[solver]\nepsilon = 0.5\nw = [1.0, 2.0]\n",
        )
        .unwrap();
        let cli = Cli::try_parse_from([
            "efce",
            "solve",
            "--config",
            path.to_str().unwrap(),
            "--L",
            "5",
            "--w",
            "-1,0.5",
            "--epsilon-mode",
            "gamma-scaled",
        ])
        .unwrap();
        let c = cli.command.flags().resolve().unwrap();
        assert_eq!(c.seeds, 4);
        assert_eq!(c.game.name, GameKind::Grid);
        assert_eq!(c.game.side, 5);
        assert_eq!(c.solver.epsilon, 0.5);
        assert_eq!(c.solver.w, vec![-1.0, 0.5]);
        assert_eq!(c.solver.epsilon_mode, EpsilonMode::GammaScaled);
        assert_eq!(c.solver.max_rounds, SolverConfig::default().max_rounds);
    }

    #[test]
    fn poker_deck_flag() {
        let cli = Cli::try_parse_from(["efce", "solve", "--game", "poker", "--C", "5"]).unwrap();
        let c = cli.command.flags().resolve().unwrap();
        assert_eq!((c.game.name, c.game.cards), (GameKind::Poker, 5));
    }

    #[test]
    fn bad_inputs_are_config_errors() {
        let mut c = RunConfig {
            seeds: 0,
            ..RunConfig::default()
        };
        assert!(matches!(c.validate(Mode::Solve), Err(CliError::Config(_))));
        c.seeds = 1;
        assert!(matches!(c.validate(Mode::Verify), Err(CliError::Config(_))));
        assert!(parse_epsilon_mode("loose").is_err());
    }
}
