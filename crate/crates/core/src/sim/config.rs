use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::adversary::PolicyKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Dkg,
    Broadcast,
    Checkpoint { epochs: u32 },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Dkg => "dkg",
            Scenario::Broadcast => "broadcast",
            Scenario::Checkpoint { .. } => "checkpoint",
        }
    }
}

/// Every knob of one simulation run. The seed determines everything else.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub t: usize,
    pub seed: u64,
    /// Expected "deal"/"agree" committee size; the any-trust ratio is derived when absent.
    pub s_expected: Option<u64>,
    /// Expected "check" committee size for the extended broadcast.
    pub c_expected: Option<u64>,
    pub failure_bound: f64,
    /// Replace sortition with seed-chosen committees of exact size (non-protocol test mode).
    pub forced: bool,
    pub adversary: PolicyKind,
    /// Number of nodes the adversary controls; defaults to `t`.
    pub corrupt: Option<usize>,
    pub payload_len: usize,
    pub senders: Option<usize>,
    /// Validator weights for the checkpoint scenario.
    pub weights: Option<Vec<u128>>,
    pub trace: bool,
    /// Adds wall-clock records, which makes reports non-reproducible.
    pub timing: bool,
}

impl SimConfig {
    pub fn new(scenario: Scenario, n: usize, t: usize, seed: u64) -> Self {
        SimConfig {
            scenario,
            n,
            t,
            seed,
            s_expected: Some(20),
            c_expected: None,
            failure_bound: 5e-9,
            forced: true,
            adversary: PolicyKind::Honest,
            corrupt: None,
            payload_len: 1024,
            senders: None,
            weights: None,
            trace: false,
            timing: false,
        }
    }

    pub fn with_adversary(mut self, adversary: PolicyKind) -> Self {
        self.adversary = adversary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.scenario, Scenario::Checkpoint { .. }) && self.n < 2 * self.t + 1 {
            return Err(Error::Config(format!("need n >= 2t+1, got n={}, t={}", self.n, self.t)));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if let Some(c) = self.corrupt {
            if c > self.t {
                return Err(Error::Config(format!("corrupt={c} exceeds t={}", self.t)));
            }
        }
        if !(self.failure_bound > 0.0 && self.failure_bound < 1.0) {
            return Err(Error::Config("failure_bound must lie in (0, 1)".into()));
        }
        if matches!(self.s_expected, Some(0)) || matches!(self.c_expected, Some(0)) {
            return Err(Error::Config("committee sizes must be positive".into()));
        }
        if let Scenario::Checkpoint { epochs: 0 } = self.scenario {
            return Err(Error::Config("epochs must be positive".into()));
        }
        Ok(())
    }

    /// Parses flat `key=value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::new(Scenario::Dkg, 8, 3, 1);
        let mut epochs = None;
        let mut scenario = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Config(format!("line {}: invalid {what} '{value}'", lineno + 1));
            match key {
                "scenario" => scenario = Some(value.to_string()),
                "n" => cfg.n = parse(value).ok_or_else(|| bad("n"))?,
                "t" => cfg.t = parse(value).ok_or_else(|| bad("t"))?,
                "seed" => cfg.seed = parse(value).ok_or_else(|| bad("seed"))?,
                "s_expected" => cfg.s_expected = optional(value).ok_or_else(|| bad("s_expected"))?,
                "c_expected" => cfg.c_expected = optional(value).ok_or_else(|| bad("c_expected"))?,
                "failure_bound" => cfg.failure_bound = parse(value).ok_or_else(|| bad("failure_bound"))?,
                "forced" => cfg.forced = parse(value).ok_or_else(|| bad("forced"))?,
                "adversary" => cfg.adversary = value.parse()?,
                "corrupt" => cfg.corrupt = optional(value).ok_or_else(|| bad("corrupt"))?,
                "payload_len" => cfg.payload_len = parse(value).ok_or_else(|| bad("payload_len"))?,
                "senders" => cfg.senders = optional(value).ok_or_else(|| bad("senders"))?,
                "epochs" => epochs = Some(parse(value).ok_or_else(|| bad("epochs"))?),
                "weights" => {
                    let w = value.split(',').map(|x| x.trim().parse().ok()).collect::<Option<Vec<u128>>>();
                    cfg.weights = Some(w.ok_or_else(|| bad("weights"))?);
                }
                "trace" => cfg.trace = parse(value).ok_or_else(|| bad("trace"))?,
                "timing" => cfg.timing = parse(value).ok_or_else(|| bad("timing"))?,
                other => return Err(Error::Config(format!("line {}: unknown key '{other}'", lineno + 1))),
            }
        }
        cfg.scenario = match (scenario.as_deref().unwrap_or("dkg"), epochs) {
            ("dkg", None) => Scenario::Dkg,
            ("broadcast", None) => Scenario::Broadcast,
            ("checkpoint", e) => Scenario::Checkpoint { epochs: e.unwrap_or(3) },
            (s @ ("dkg" | "broadcast"), Some(_)) => {
                return Err(Error::Config(format!("epochs only applies to checkpoint, not {s}")))
            }
            (other, _) => return Err(Error::Config(format!("unknown scenario '{other}'"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse<T: FromStr>(v: &str) -> Option<T> {
    v.parse().ok()
}

fn optional<T: FromStr>(v: &str) -> Option<Option<T>> {
    if v == "none" {
        Some(None)
    } else {
        parse(v).map(Some)
    }
}

impl fmt::Display for SimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |o: Option<u64>| o.map_or("none".to_string(), |v| v.to_string());
        writeln!(f, "scenario={}", self.scenario.name())?;
        if let Scenario::Checkpoint { epochs } = self.scenario {
            writeln!(f, "epochs={epochs}")?;
        }
        writeln!(f, "n={}\nt={}\nseed={}", self.n, self.t, self.seed)?;
        writeln!(f, "s_expected={}\nc_expected={}", opt(self.s_expected), opt(self.c_expected))?;
        writeln!(f, "failure_bound={}\nforced={}\nadversary={}", self.failure_bound, self.forced, self.adversary)?;
        writeln!(f, "corrupt={}", opt(self.corrupt.map(|c| c as u64)))?;
        writeln!(f, "payload_len={}\nsenders={}", self.payload_len, opt(self.senders.map(|s| s as u64)))?;
        if let Some(w) = &self.weights {
            let w: Vec<String> = w.iter().map(u128::to_string).collect();
            writeln!(f, "weights={}", w.join(","))?;
        }
        write!(f, "trace={}\ntiming={}", self.trace, self.timing)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print_roundtrip() {
        let text = "scenario=checkpoint\nepochs=2\nn=16\nt=7\nseed=9 # comment\nadversary=withhold-multicast:0.4\nweights=3,3,1\nforced=false\n";
        let cfg = SimConfig::parse(text).unwrap();
        assert_eq!(cfg.scenario, Scenario::Checkpoint { epochs: 2 });
        assert_eq!(cfg.adversary, PolicyKind::WithholdMulticast { fraction: 0.4 });
        assert_eq!(cfg.weights, Some(vec![3, 3, 1]));
        assert!(!cfg.forced);
        assert_eq!(SimConfig::parse(&cfg.to_string()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SimConfig::parse("n=4\nt=2\n").is_err());
        assert!(SimConfig::parse("n=x\n").is_err());
        assert!(SimConfig::parse("bogus=1\n").is_err());
        assert!(SimConfig::parse("scenario=dkg\nepochs=2\n").is_err());
        assert!(SimConfig::parse("adversary=nope\n").is_err());
        assert!(SimConfig::parse("n=9\nt=4\ncorrupt=5\n").is_err());
    }
}
