use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dkg::Targets;
use crate::error::{Error, Result};

/// Fraction of receivers reached by `withhold-multicast` when none is given.
pub const DEFAULT_WITHHOLD_FRACTION: f64 = 0.6;

/// A named adversary strategy, applied to every node it corrupts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolicyKind {
    Honest,
    HonestButCorrupt,
    MalformCiphertext,
    MalformTargeted,
    UndecodableShare,
    WrongDegree,
    WithholdMulticast { fraction: f64 },
    DoubleVote,
    ForgeComplaint,
    Silent,
    /// Corrupts honest dealers after round 1 and tries to re-sign with their round-1 keys.
    Adaptive,
    /// Cycles through the static behaviors.
    Mixed,
}

impl PolicyKind {
    /// Every policy, with the default withholding fraction.
    pub const ALL: [PolicyKind; 12] = [
        PolicyKind::Honest,
        PolicyKind::HonestButCorrupt,
        PolicyKind::MalformCiphertext,
        PolicyKind::MalformTargeted,
        PolicyKind::UndecodableShare,
        PolicyKind::WrongDegree,
        PolicyKind::WithholdMulticast { fraction: DEFAULT_WITHHOLD_FRACTION },
        PolicyKind::DoubleVote,
        PolicyKind::ForgeComplaint,
        PolicyKind::Silent,
        PolicyKind::Adaptive,
        PolicyKind::Mixed,
    ];
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PolicyKind::Honest => "honest",
            PolicyKind::HonestButCorrupt => "honest-but-corrupt",
            PolicyKind::MalformCiphertext => "malform-ciphertext",
            PolicyKind::MalformTargeted => "malform-targeted",
            PolicyKind::UndecodableShare => "undecodable-share",
            PolicyKind::WrongDegree => "wrong-degree",
            PolicyKind::WithholdMulticast { fraction } => return write!(f, "withhold-multicast:{fraction}"),
            PolicyKind::DoubleVote => "double-vote",
            PolicyKind::ForgeComplaint => "forge-complaint",
            PolicyKind::Silent => "silent",
            PolicyKind::Adaptive => "adaptive",
            PolicyKind::Mixed => "mixed",
        };
        f.write_str(name)
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let kind = match name {
            "honest" => PolicyKind::Honest,
            "honest-but-corrupt" => PolicyKind::HonestButCorrupt,
            "malform-ciphertext" => PolicyKind::MalformCiphertext,
            "malform-targeted" => PolicyKind::MalformTargeted,
            "undecodable-share" => PolicyKind::UndecodableShare,
            "wrong-degree" => PolicyKind::WrongDegree,
            "withhold-multicast" => {
                let fraction = match arg {
                    Some(a) => a.parse().map_err(|_| Error::Config(format!("bad fraction '{a}'")))?,
                    None => DEFAULT_WITHHOLD_FRACTION,
                };
                if !(0.0..=1.0).contains(&fraction) {
                    return Err(Error::Config(format!("fraction {fraction} outside [0, 1]")));
                }
                return Ok(PolicyKind::WithholdMulticast { fraction });
            }
            "withhold-all" => PolicyKind::WithholdMulticast { fraction: 0.0 },
            "double-vote" => PolicyKind::DoubleVote,
            "forge-complaint" => PolicyKind::ForgeComplaint,
            "silent" => PolicyKind::Silent,
            "adaptive" => PolicyKind::Adaptive,
            "mixed" => PolicyKind::Mixed,
            _ => return Err(Error::Config(format!("unknown adversary policy '{s}'"))),
        };
        match arg {
            Some(_) => Err(Error::Config(format!("policy '{name}' takes no argument"))),
            None => Ok(kind),
        }
    }
}

/// What one corrupted node does. Each scenario interprets it for its own messages.
#[derive(Clone, Debug, PartialEq)]
pub enum Behavior {
    HonestButCorrupt,
    MalformCiphertext(Targets),
    UndecodableShare,
    WrongDegree,
    WithholdMulticast { fraction: f64 },
    DoubleVote,
    ForgeComplaint,
    Silent,
}

impl Behavior {
    /// Whether the node still runs every verification step.
    pub fn verifies(&self) -> bool {
        matches!(self, Behavior::HonestButCorrupt | Behavior::WithholdMulticast { .. })
    }
}

fn mixed(k: usize) -> Behavior {
    match k % 8 {
        0 => Behavior::MalformCiphertext(Targets::All),
        1 => Behavior::WrongDegree,
        2 => Behavior::ForgeComplaint,
        3 => Behavior::DoubleVote,
        4 => Behavior::Silent,
        5 => Behavior::WithholdMulticast { fraction: 0.5 },
        6 => Behavior::UndecodableShare,
        _ => Behavior::HonestButCorrupt,
    }
}

/// The adversary's corrupted set and per-node behavior.
#[derive(Clone, Debug)]
pub struct Adversary {
    kind: PolicyKind,
    budget: usize,
    behaviors: BTreeMap<u32, Behavior>,
    adaptive: BTreeSet<u32>,
}

impl Adversary {
    /// Statically corrupts up to `budget` nodes out of `1..=n`, never touching
    /// `reserved`. Nodes in `priority` are corrupted first.
    pub fn new<R: Rng + ?Sized>(
        kind: PolicyKind,
        n: usize,
        budget: usize,
        priority: &[u32],
        reserved: &BTreeSet<u32>,
        rng: &mut R,
    ) -> Self {
        let mut adv = Adversary { kind, budget, behaviors: BTreeMap::new(), adaptive: BTreeSet::new() };
        if matches!(kind, PolicyKind::Honest | PolicyKind::Adaptive) {
            return adv;
        }
        let mut first: Vec<u32> = priority.iter().copied().filter(|i| !reserved.contains(i)).collect();
        first.shuffle(rng);
        let mut rest: Vec<u32> =
            (1..=n as u32).filter(|i| !reserved.contains(i) && !first.contains(i)).collect();
        rest.shuffle(rng);
        for (k, i) in first.into_iter().chain(rest).take(budget).enumerate() {
            let b = match kind {
                PolicyKind::HonestButCorrupt => Behavior::HonestButCorrupt,
                PolicyKind::MalformCiphertext => Behavior::MalformCiphertext(Targets::All),
                PolicyKind::MalformTargeted => {
                    let mut all: Vec<u32> = (1..=n as u32).collect();
                    all.shuffle(rng);
                    Behavior::MalformCiphertext(Targets::Only(all.into_iter().take((n / 4).max(1)).collect()))
                }
                PolicyKind::UndecodableShare => Behavior::UndecodableShare,
                PolicyKind::WrongDegree => Behavior::WrongDegree,
                PolicyKind::WithholdMulticast { fraction } => Behavior::WithholdMulticast { fraction },
                PolicyKind::DoubleVote => Behavior::DoubleVote,
                PolicyKind::ForgeComplaint => Behavior::ForgeComplaint,
                PolicyKind::Silent => Behavior::Silent,
                PolicyKind::Mixed => mixed(k),
                PolicyKind::Honest | PolicyKind::Adaptive => unreachable!(),
            };
            adv.behaviors.insert(i, b);
        }
        adv
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn behavior(&self, i: u32) -> Option<&Behavior> {
        self.behaviors.get(&i)
    }

    pub fn is_corrupted(&self, i: u32) -> bool {
        self.behaviors.contains_key(&i)
    }

    pub fn corrupted(&self) -> BTreeSet<u32> {
        self.behaviors.keys().copied().collect()
    }

    /// Nodes corrupted after the protocol started.
    pub fn adaptive(&self) -> &BTreeSet<u32> {
        &self.adaptive
    }

    /// Corrupts up to the remaining budget among `candidates`, in a seeded order.
    /// Newly corrupted nodes forge complaints from then on.
    pub fn corrupt_adaptively<R: Rng + ?Sized>(&mut self, candidates: &[u32], rng: &mut R) -> Vec<u32> {
        let mut pool: Vec<u32> = candidates.iter().copied().filter(|i| !self.is_corrupted(*i)).collect();
        pool.shuffle(rng);
        pool.truncate(self.budget.saturating_sub(self.behaviors.len()));
        pool.sort_unstable();
        for &i in &pool {
            self.behaviors.insert(i, Behavior::ForgeComplaint);
            self.adaptive.insert(i);
        }
        pool
    }

    /// The receivers a withholding sender reaches: `ceil(fraction · |others|)` of them.
    pub fn reached<R: Rng + ?Sized>(sender: u32, n: usize, fraction: f64, rng: &mut R) -> BTreeSet<u32> {
        let mut others: Vec<u32> = (1..=n as u32).filter(|&i| i != sender).collect();
        others.shuffle(rng);
        let k = (fraction * others.len() as f64).ceil() as usize;
        others.into_iter().take(k).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn names_roundtrip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.to_string().parse::<PolicyKind>().unwrap(), k);
        }
        assert_eq!("withhold-all".parse::<PolicyKind>().unwrap(), PolicyKind::WithholdMulticast { fraction: 0.0 });
        assert!("silent:1".parse::<PolicyKind>().is_err());
        assert!("withhold-multicast:2".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn corruption_respects_budget_priority_and_reserve() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let reserved = BTreeSet::from([1, 2]);
        let adv = Adversary::new(PolicyKind::Silent, 20, 5, &[1, 3, 4], &reserved, &mut rng);
        let c = adv.corrupted();
        assert_eq!(c.len(), 5);
        assert!(c.is_disjoint(&reserved));
        assert!(c.contains(&3) && c.contains(&4));
        let mut adv = Adversary::new(PolicyKind::Adaptive, 20, 2, &[], &reserved, &mut rng);
        assert!(adv.corrupted().is_empty());
        assert_eq!(adv.corrupt_adaptively(&[5, 6, 7], &mut rng).len(), 2);
        assert!(adv.corrupt_adaptively(&[8], &mut rng).is_empty());
    }

    #[test]
    fn withholding_reaches_the_requested_share() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let r = Adversary::reached(3, 11, 0.6, &mut rng);
        assert_eq!(r.len(), 6);
        assert!(!r.contains(&3));
        assert!(Adversary::reached(3, 11, 0.0, &mut rng).is_empty());
    }
}
