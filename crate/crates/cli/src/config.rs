//! Experiment configuration in a flat `section.key = value` text format.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is always
//! written, so an emitted file lists every setting in effect.

use std::fmt;
use std::str::FromStr;

use d3c_core::bandit::BanditConfig;
use d3c_core::exact::ExactConfig;
use d3c_core::rl::ReinforceConfig;
use d3c_core::LogitBounds;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("{path}: cannot parse `{value}`")]
    BadValue { path: String, value: String },
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Pd,
    Traffic,
    BraessBatch,
    Game1,
    Game2,
    Election,
    Bilinear,
    Trust,
    Coins,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Pd,
        Experiment::Traffic,
        Experiment::BraessBatch,
        Experiment::Game1,
        Experiment::Game2,
        Experiment::Election,
        Experiment::Bilinear,
        Experiment::Trust,
        Experiment::Coins,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Pd => "pd",
            Experiment::Traffic => "traffic",
            Experiment::BraessBatch => "braess-batch",
            Experiment::Game1 => "game1",
            Experiment::Game2 => "game2",
            Experiment::Election => "election",
            Experiment::Bilinear => "bilinear",
            Experiment::Trust => "trust",
            Experiment::Coins => "coins",
        }
    }

    pub fn is_rl(self) -> bool {
        matches!(self, Experiment::Trust | Experiment::Coins)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    /// Simultaneous gradient descent on own losses; plain REINFORCE for RL.
    GdBaseline,
    D3cExact,
    D3cBandit,
    /// Everyone descends the total loss.
    Cooperative,
}

impl Algo {
    pub const ALL: [Algo; 4] = [Algo::GdBaseline, Algo::D3cExact, Algo::D3cBandit, Algo::Cooperative];

    pub fn name(self) -> &'static str {
        match self {
            Algo::GdBaseline => "gd-baseline",
            Algo::D3cExact => "d3c-exact",
            Algo::D3cBandit => "d3c-bandit",
            Algo::Cooperative => "cooperative",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Algo::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameParams {
    /// Player count (prisoner's dilemma).
    pub n: usize,
    pub c: f64,
    /// Players frozen at the origin (prisoner's dilemma).
    pub m: usize,
    pub kappa: f64,
    pub shortcut: bool,
    /// Required gap between equilibrium and optimum for generated networks.
    pub delta: f64,
    pub w_pd: f64,
    pub kappa_z: f64,
    /// Standard deviation of normal initial strategies.
    pub init_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub algo: Algo,
    pub runs: usize,
    pub steps: usize,
    pub seed: u64,
    pub log_every: usize,
    pub game: GameParams,
    pub exact: ExactConfig,
    pub a0: f64,
    pub bandit: BanditConfig,
    pub reinforce: ReinforceConfig,
}

impl ExperimentConfig {
    /// Defaults for one experiment at desk scale.
    pub fn defaults(experiment: Experiment) -> Self {
        let game = GameParams {
            n: 10,
            c: 1.0,
            m: 0,
            kappa: 0.5,
            shortcut: true,
            delta: 20.0,
            w_pd: 1.0,
            kappa_z: 0.25,
            init_scale: 1.0,
        };
        let exact = ExactConfig {
            dt: 0.01,
            eta_a: 0.1,
            nu: 0.0,
            epsilon: 0.01,
            steps: 4000,
            bounds: LogitBounds::unbounded(),
            log_every: 100,
        };
        let mut cfg = Self {
            experiment,
            algo: if experiment.is_rl() { Algo::D3cBandit } else { Algo::D3cExact },
            runs: 100,
            steps: 4000,
            seed: 0,
            log_every: 100,
            game,
            exact,
            a0: 0.99,
            bandit: BanditConfig::trust(),
            reinforce: ReinforceConfig::default(),
        };
        match experiment {
            Experiment::Pd | Experiment::Traffic | Experiment::BraessBatch => {}
            Experiment::Game1 | Experiment::Game2 => cfg.runs = 20,
            Experiment::Election => {
                cfg.runs = 20;
                cfg.steps = 1000;
                cfg.exact.epsilon = 0.001;
            }
            Experiment::Bilinear => {
                cfg.algo = Algo::Cooperative;
                cfg.runs = 10_000;
                cfg.steps = d3c_core::games::BASIN_STEPS;
                cfg.log_every = cfg.steps;
                cfg.exact.dt = d3c_core::games::BASIN_DT;
            }
            Experiment::Trust => {
                cfg.steps = 2000;
                cfg.log_every = 10;
            }
            Experiment::Coins => {
                cfg.runs = 4;
                cfg.steps = 50;
                cfg.log_every = 1;
                cfg.bandit = BanditConfig::coins();
                cfg.reinforce = ReinforceConfig { policy_lr: 0.01, batch: 1, gamma: 1.0, value_lr: 0.01 };
            }
        }
        cfg.exact.steps = cfg.steps;
        cfg.exact.log_every = cfg.log_every;
        cfg
    }

    /// Every setting as `(key, value)` in a fixed order.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let g = &self.game;
        let e = &self.exact;
        let b = &self.bandit;
        let r = &self.reinforce;
        vec![
            ("experiment", self.experiment.to_string()),
            ("algo", self.algo.to_string()),
            ("runs", self.runs.to_string()),
            ("steps", self.steps.to_string()),
            ("seed", self.seed.to_string()),
            ("log_every", self.log_every.to_string()),
            ("game.n", g.n.to_string()),
            ("game.c", g.c.to_string()),
            ("game.m", g.m.to_string()),
            ("game.kappa", g.kappa.to_string()),
            ("game.shortcut", g.shortcut.to_string()),
            ("game.delta", g.delta.to_string()),
            ("game.w_pd", g.w_pd.to_string()),
            ("game.kappa_z", g.kappa_z.to_string()),
            ("game.init_scale", g.init_scale.to_string()),
            ("exact.dt", e.dt.to_string()),
            ("exact.eta_a", e.eta_a.to_string()),
            ("exact.nu", e.nu.to_string()),
            ("exact.epsilon", e.epsilon.to_string()),
            ("exact.l", e.bounds.l.to_string()),
            ("exact.h", e.bounds.h.to_string()),
            ("exact.a0", self.a0.to_string()),
            ("bandit.eta_a", b.eta_a.to_string()),
            ("bandit.delta", b.delta.to_string()),
            ("bandit.nu", b.nu.to_string()),
            ("bandit.tau_min", b.tau_min.to_string()),
            ("bandit.tau_max", b.tau_max.to_string()),
            ("bandit.a0", b.a0.to_string()),
            ("bandit.epsilon", b.epsilon.to_string()),
            ("bandit.l", b.bounds.l.to_string()),
            ("bandit.h", b.bounds.h.to_string()),
            ("reinforce.policy_lr", r.policy_lr.to_string()),
            ("reinforce.batch", r.batch.to_string()),
            ("reinforce.gamma", r.gamma.to_string()),
            ("reinforce.value_lr", r.value_lr.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.pairs() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// Set one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn p<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
            value.parse().map_err(|_| ConfigError::BadValue { path: key.to_string(), value: value.to_string() })
        }
        let v = value.trim();
        match key {
            "experiment" => self.experiment = p(key, v)?,
            "algo" => self.algo = p(key, v)?,
            "runs" => self.runs = p(key, v)?,
            "steps" => {
                self.steps = p(key, v)?;
                self.exact.steps = self.steps;
            }
            "seed" => self.seed = p(key, v)?,
            "log_every" => {
                self.log_every = p(key, v)?;
                self.exact.log_every = self.log_every;
            }
            "game.n" => self.game.n = p(key, v)?,
            "game.c" => self.game.c = p(key, v)?,
            "game.m" => self.game.m = p(key, v)?,
            "game.kappa" => self.game.kappa = p(key, v)?,
            "game.shortcut" => self.game.shortcut = p(key, v)?,
            "game.delta" => self.game.delta = p(key, v)?,
            "game.w_pd" => self.game.w_pd = p(key, v)?,
            "game.kappa_z" => self.game.kappa_z = p(key, v)?,
            "game.init_scale" => self.game.init_scale = p(key, v)?,
            "exact.dt" => self.exact.dt = p(key, v)?,
            "exact.eta_a" => self.exact.eta_a = p(key, v)?,
            "exact.nu" => self.exact.nu = p(key, v)?,
            "exact.epsilon" => self.exact.epsilon = p(key, v)?,
            "exact.l" => self.exact.bounds.l = p(key, v)?,
            "exact.h" => self.exact.bounds.h = p(key, v)?,
            "exact.a0" => self.a0 = p(key, v)?,
            "bandit.eta_a" => self.bandit.eta_a = p(key, v)?,
            "bandit.delta" => self.bandit.delta = p(key, v)?,
            "bandit.nu" => self.bandit.nu = p(key, v)?,
            "bandit.tau_min" => self.bandit.tau_min = p(key, v)?,
            "bandit.tau_max" => self.bandit.tau_max = p(key, v)?,
            "bandit.a0" => self.bandit.a0 = p(key, v)?,
            "bandit.epsilon" => self.bandit.epsilon = p(key, v)?,
            "bandit.l" => self.bandit.bounds.l = p(key, v)?,
            "bandit.h" => self.bandit.bounds.h = p(key, v)?,
            "reinforce.policy_lr" => self.reinforce.policy_lr = p(key, v)?,
            "reinforce.batch" => self.reinforce.batch = p(key, v)?,
            "reinforce.gamma" => self.reinforce.gamma = p(key, v)?,
            "reinforce.value_lr" => self.reinforce.value_lr = p(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Parse a config file. The experiment's defaults fill any key not given.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        let experiment = entries
            .iter()
            .find(|(k, _)| k == "experiment")
            .ok_or_else(|| ConfigError::Invalid { path: "experiment".into(), reason: "missing".into() })?;
        let experiment: Experiment = experiment
            .1
            .parse()
            .map_err(|_| ConfigError::BadValue { path: "experiment".into(), value: experiment.1.clone() })?;
        let mut cfg = Self::defaults(experiment);
        for (k, v) in &entries {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |path: &str, reason: &str| Err(ConfigError::Invalid { path: path.into(), reason: reason.into() });
        if self.runs < 1 {
            return bad("runs", "must be at least 1");
        }
        if self.log_every < 1 {
            return bad("log_every", "must be at least 1");
        }
        if !(self.exact.dt > 0.0) {
            return bad("exact.dt", "must be positive");
        }
        if !(self.exact.eta_a >= 0.0) || !(self.exact.nu >= 0.0) {
            return bad("exact.eta_a", "step sizes and penalties must be nonnegative");
        }
        if !(self.exact.bounds.l < self.exact.bounds.h) {
            return bad("exact.l", "must be below exact.h");
        }
        if self.experiment == Experiment::Pd && (self.game.n < 2 || !(self.game.c > 0.0)) {
            return bad("game.n", "need n >= 2 and c > 0");
        }
        if self.experiment == Experiment::Pd && self.game.m + 1 >= self.game.n && self.game.m > 0 {
            return bad("game.m", "need m < n - 1");
        }
        if !(0.0..1.0).contains(&self.game.kappa) {
            return bad("game.kappa", "must lie in [0, 1)");
        }
        if self.experiment.is_rl() {
            if let Err(e) = self.bandit.validate() {
                return Err(ConfigError::Invalid { path: "bandit".into(), reason: e.to_string() });
            }
            if self.reinforce.batch < 1 {
                return bad("reinforce.batch", "must be at least 1");
            }
        }
        Ok(())
    }
}
