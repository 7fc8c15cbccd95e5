//! Small built-in instances where the exact optimum per memory size is
//! known by construction.

use std::fmt;
use std::str::FromStr;

use crate::model::{Pomdp, PomdpParts};

/// Two states and one observation. `swap` toggles the state, `stay` holds
/// it, and only `stay` in `s1` pays 1. The agent starts in `s0` and can
/// only count steps with its memory.
pub fn gen_clockwork() -> Pomdp {
    Pomdp::new(PomdpParts {
        state_names: vec!["s0".into(), "s1".into()],
        action_names: vec!["stay".into(), "swap".into()],
        observation_names: vec!["o".into()],
        // [(s * |A| + a) * |S| + s']
        transition: vec![
            1.0, 0.0, // s0 stay
            0.0, 1.0, // s0 swap
            0.0, 1.0, // s1 stay
            1.0, 0.0, // s1 swap
        ],
        observation_of: vec![0, 0],
        reward: vec![0.0, 0.0, 1.0, 0.0],
        start_belief: vec![1.0, 0.0],
        discount: 1.0,
    })
    .expect("clockwork is well formed")
}

const SIGNALS: [&str; 2] = ["A", "B"];

/// A corridor of `n` aliased cells between a signal and a decision point.
///
/// State `(g, pos)` has index `g * (n + 2) + pos`, with the absorbing
/// terminal last. Position 0 shows the signal (`oA` / `oB`), positions
/// `1..=n` show `hall`, position `n + 1` shows `end`. `advance` walks
/// right (self-loop at the end and in the terminal); `commitX` moves to
/// the terminal and pays 1 only at the end when `X` matches the signal.
/// The `hall` observation exists only when `n >= 1`.
pub fn gen_signal_corridor(n: usize) -> Pomdp {
    let len = n + 2;
    let ns = 2 * len + 1;
    let terminal = ns - 1;
    let mut observation_names: Vec<String> = vec!["oA".into(), "oB".into()];
    if n >= 1 {
        observation_names.push("hall".into());
    }
    observation_names.push("end".into());
    observation_names.push("term".into());
    let obs = |name: &str| observation_names.iter().position(|o| o == name).unwrap();

    let mut state_names = Vec::with_capacity(ns);
    let mut observation_of = Vec::with_capacity(ns);
    for (g, signal) in SIGNALS.iter().enumerate() {
        for pos in 0..len {
            state_names.push(format!("{signal}{pos}"));
            observation_of.push(match pos {
                0 => g,
                p if p == len - 1 => obs("end"),
                _ => obs("hall"),
            });
        }
    }
    state_names.push("terminal".into());
    observation_of.push(obs("term"));

    let na = 3;
    let mut transition = vec![0.0; ns * na * ns];
    let mut reward = vec![0.0; ns * na];
    let mut set = |s: usize, a: usize, next: usize| transition[(s * na + a) * ns + next] = 1.0;
    for g in 0..2 {
        for pos in 0..len {
            let s = g * len + pos;
            set(s, 0, if pos + 1 < len { s + 1 } else { s });
            set(s, 1, terminal);
            set(s, 2, terminal);
            if pos == len - 1 {
                reward[s * na + 1 + g] = 1.0;
            }
        }
    }
    for a in 0..na {
        set(terminal, a, terminal);
    }
    let mut start_belief = vec![0.0; ns];
    start_belief[0] = 0.5;
    start_belief[len] = 0.5;

    Pomdp::new(PomdpParts {
        state_names,
        action_names: vec!["advance".into(), "commitA".into(), "commitB".into()],
        observation_names,
        transition,
        observation_of,
        reward,
        start_belief,
        discount: 1.0,
    })
    .expect("signal corridor is well formed")
}

/// A generator reference such as `clockwork` or `signal-corridor:3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Clockwork,
    SignalCorridor(usize),
}

impl Generator {
    pub fn build(&self) -> Pomdp {
        match *self {
            Generator::Clockwork => gen_clockwork(),
            Generator::SignalCorridor(n) => gen_signal_corridor(n),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Clockwork => write!(f, "clockwork"),
            Generator::SignalCorridor(n) => write!(f, "signal-corridor:{n}"),
        }
    }
}

impl FromStr for Generator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, param) = match s.split_once(':') {
            Some((name, param)) => (name, Some(param)),
            None => (s, None),
        };
        match (name, param) {
            ("clockwork", None) => Ok(Generator::Clockwork),
            ("signal-corridor", None) => Ok(Generator::SignalCorridor(0)),
            ("signal-corridor", Some(n)) => n
                .parse()
                .map(Generator::SignalCorridor)
                .map_err(|_| format!("bad corridor length `{n}`")),
            _ => Err(format!("unknown generator `{s}` (expected clockwork or signal-corridor[:n])")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_pomdp;

    #[test]
    fn generators_validate() {
        assert!(validate_pomdp(&gen_clockwork()).is_empty());
        for n in 0..4 {
            let p = gen_signal_corridor(n);
            assert!(validate_pomdp(&p).is_empty());
            assert_eq!(p.num_states(), 2 * (n + 2) + 1);
        }
        assert_eq!(gen_signal_corridor(0).num_observations(), 4);
        assert_eq!(gen_signal_corridor(2).num_observations(), 5);
    }

    #[test]
    fn generator_names() {
        assert_eq!("clockwork".parse::<Generator>().unwrap(), Generator::Clockwork);
        assert_eq!("signal-corridor".parse::<Generator>().unwrap(), Generator::SignalCorridor(0));
        assert_eq!("signal-corridor:3".parse::<Generator>().unwrap(), Generator::SignalCorridor(3));
        assert!("maze".parse::<Generator>().is_err());
        assert!("signal-corridor:x".parse::<Generator>().is_err());
        assert_eq!(Generator::SignalCorridor(2).to_string(), "signal-corridor:2");
    }
}
