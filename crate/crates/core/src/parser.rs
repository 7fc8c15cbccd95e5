//! Reader and writer for the Cassandra `.pomdp` text format, restricted to
//! observations that are a deterministic function of the arriving state.
//!
//! Supported declarations:
//!
//! ```text
//! discount: 0.95
//! values: reward | cost
//! states: 4 | states: s0 s1 s2 s3          (same for actions, observations)
//! start: uniform | start: p0 p1 ... | start: s2
//! T: a : s : s' p        T: a : s  <row>        T: a  <matrix> | identity | uniform
//! O: a : s' : o p        O: a : s' <row>        O: a  <matrix> | uniform
//! R: a : s : s' : o v    R: a : s : s' <row>    R: a : s <matrix>
//! ```
//!
//! `*` may replace any action, state or observation reference. Comments
//! start with `#`. Later entries override earlier ones.
//!
//! Rewards `R(a, s, s', o)` are folded into `r[s][a]` by taking the
//! expectation over `s'` with `o = ω(s')`.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;

use crate::model::{Pomdp, PomdpParts};

/// Tolerance applied to probability rows as written in the file.
pub const PARSE_TOLERANCE: f64 = 1e-6;

/// Rows closer to 1 than this are left as written.
const RENORMALIZE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based line, or 0 for whole-file problems.
    pub line: usize,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        if self.line == 0 {
            write!(f, "{sev}: {}", self.message)
        } else {
            write!(f, "line {}: {sev}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseDiagnostics {
    pub items: Vec<Diagnostic>,
}

impl ParseDiagnostics {
    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.items.iter().filter(|d| d.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.items.iter().filter(|d| d.severity == Severity::Warning)
    }

    fn error(&mut self, line: usize, message: impl Into<String>) {
        self.items.push(Diagnostic { line, severity: Severity::Error, message: message.into() });
    }

    fn warning(&mut self, line: usize, message: impl Into<String>) {
        self.items.push(Diagnostic { line, severity: Severity::Warning, message: message.into() });
    }
}

impl fmt::Display for ParseDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.items.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseDiagnostics {}

/// A successfully parsed model plus any warnings.
#[derive(Debug, Clone)]
pub struct ParsedPomdp {
    pub pomdp: Pomdp,
    pub diagnostics: ParseDiagnostics,
}

pub fn parse_pomdp(text: &str) -> Result<ParsedPomdp, ParseDiagnostics> {
    let tokens = tokenize(text);
    let mut parser = Parser::new(&tokens);
    parser.run();
    parser.finish()
}

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    line: usize,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        for word in body.split_whitespace() {
            let mut rest = word;
            while let Some(pos) = rest.find(':') {
                if pos > 0 {
                    out.push(Token { text: &rest[..pos], line });
                }
                out.push(Token { text: ":", line });
                rest = &rest[pos + 1..];
            }
            if !rest.is_empty() {
                out.push(Token { text: rest, line });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    State,
    Action,
    Observation,
}

impl Kind {
    fn label(self) -> &'static str {
        match self {
            Kind::State => "state",
            Kind::Action => "action",
            Kind::Observation => "observation",
        }
    }
}

/// An action, state or observation reference; `None` is the `*` wildcard.
type Ref = Option<usize>;

#[derive(Debug, Clone)]
struct RewardEntry {
    action: Ref,
    state: Ref,
    next: Ref,
    observation: Ref,
    value: f64,
}

#[derive(Debug, Clone)]
enum Start {
    Uniform,
    Probabilities(Vec<f64>),
    State(usize),
}

struct Parser<'t, 'a> {
    tokens: &'t [Token<'a>],
    pos: usize,
    diags: ParseDiagnostics,
    discount: Option<f64>,
    cost: bool,
    names: [Option<Vec<String>>; 3],
    lookup: [HashMap<String, usize>; 3],
    start: Option<(usize, Start)>,
    transition: Vec<f64>,
    obs: Vec<f64>,
    obs_line: Vec<usize>,
    /// Line that last wrote each transition row, indexed `s * |A| + a`.
    trans_line: Vec<usize>,
    rewards: Vec<RewardEntry>,
    tables_ready: bool,
}

/// Skip to the next declaration after a malformed entry.
struct Resync;

type Step<T> = Result<T, Resync>;

impl<'t, 'a> Parser<'t, 'a> {
    fn new(tokens: &'t [Token<'a>]) -> Self {
        Parser {
            tokens,
            pos: 0,
            diags: ParseDiagnostics::default(),
            discount: None,
            cost: false,
            names: [None, None, None],
            lookup: Default::default(),
            start: None,
            transition: Vec::new(),
            obs: Vec::new(),
            obs_line: Vec::new(),
            trans_line: Vec::new(),
            rewards: Vec::new(),
            tables_ready: false,
        }
    }

    fn count(&self, kind: Kind) -> usize {
        self.names[kind as usize].as_ref().map_or(0, Vec::len)
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn line(&self) -> usize {
        self.peek()
            .or_else(|| self.tokens.last())
            .map_or(0, |t| t.line)
    }

    /// A declaration is a word at the start of a line followed by `:`.
    fn at_declaration(&self) -> bool {
        let (Some(t), Some(c)) = (self.tokens.get(self.pos), self.tokens.get(self.pos + 1)) else {
            return false;
        };
        let line_start = self.pos == 0 || self.tokens[self.pos - 1].line != t.line;
        line_start && t.text != ":" && t.text != "*" && c.text == ":"
    }

    fn next_token(&mut self, what: &str) -> Step<&'t Token<'a>> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t)
            }
            None => {
                let line = self.line();
                self.diags.error(line, format!("unexpected end of input, expected {what}"));
                Err(Resync)
            }
        }
    }

    fn expect_colon(&mut self) -> Step<()> {
        let t = self.next_token("`:`")?;
        if t.text == ":" {
            Ok(())
        } else {
            self.diags.error(t.line, format!("expected `:`, found `{}`", t.text));
            Err(Resync)
        }
    }

    fn number(&mut self) -> Step<f64> {
        let t = self.next_token("a number")?;
        match t.text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.diags.error(t.line, format!("expected a number, found `{}`", t.text));
                Err(Resync)
            }
        }
    }

    fn numbers(&mut self, n: usize) -> Step<Vec<f64>> {
        (0..n).map(|_| self.number()).collect()
    }

    fn resolve(&mut self, kind: Kind, allow_wildcard: bool) -> Step<Ref> {
        let t = self.next_token(kind.label())?;
        if t.text == "*" {
            if allow_wildcard {
                return Ok(None);
            }
            self.diags.error(t.line, format!("wildcard not allowed for {}", kind.label()));
            return Err(Resync);
        }
        if let Some(&i) = self.lookup[kind as usize].get(t.text) {
            return Ok(Some(i));
        }
        if let Ok(i) = t.text.parse::<usize>() {
            if i < self.count(kind) {
                return Ok(Some(i));
            }
        }
        self.diags.error(t.line, format!("undeclared {} `{}`", kind.label(), t.text));
        Err(Resync)
    }

    fn run(&mut self) {
        while self.pos < self.tokens.len() {
            if !self.at_declaration() {
                let t = &self.tokens[self.pos];
                self.diags.error(t.line, format!("unknown keyword or stray token `{}`", t.text));
                self.skip_to_declaration();
                continue;
            }
            let tokens = self.tokens;
            let keyword = &tokens[self.pos];
            self.pos += 2;
            let step = match keyword.text {
                "discount" => self.discount_decl(keyword.line),
                "values" => self.values_decl(),
                "states" => self.names_decl(Kind::State, keyword.line),
                "actions" => self.names_decl(Kind::Action, keyword.line),
                "observations" => self.names_decl(Kind::Observation, keyword.line),
                "start" => self.start_decl(keyword.line),
                "T" | "O" | "R" => {
                    if self.prepare_tables(keyword.line) {
                        match keyword.text {
                            "T" => self.transition_entry(),
                            "O" => self.observation_entry(),
                            _ => self.reward_entry(),
                        }
                    } else {
                        Err(Resync)
                    }
                }
                other => {
                    self.diags.error(keyword.line, format!("unknown keyword `{other}`"));
                    Err(Resync)
                }
            };
            if step.is_err() {
                self.skip_to_declaration();
            } else if self.pos < self.tokens.len() && !self.at_declaration() {
                let t = &self.tokens[self.pos];
                self.diags.error(t.line, format!("unexpected token `{}`", t.text));
                self.skip_to_declaration();
            }
        }
    }

    fn skip_to_declaration(&mut self) {
        self.pos += 1;
        while self.pos < self.tokens.len() && !self.at_declaration() {
            self.pos += 1;
        }
    }

    fn discount_decl(&mut self, line: usize) -> Step<()> {
        let d = self.number()?;
        self.discount = Some(d);
        if d != 1.0 {
            self.diags.warning(line, "discount is retained but evaluation uses undiscounted total reward");
        }
        Ok(())
    }

    fn values_decl(&mut self) -> Step<()> {
        let t = self.next_token("`reward` or `cost`")?;
        match t.text {
            "reward" => self.cost = false,
            "cost" => self.cost = true,
            other => {
                self.diags.error(t.line, format!("values must be `reward` or `cost`, found `{other}`"));
                return Err(Resync);
            }
        }
        Ok(())
    }

    fn names_decl(&mut self, kind: Kind, line: usize) -> Step<()> {
        if self.tables_ready {
            self.diags.error(line, format!("{}s declared after model entries", kind.label()));
            return Err(Resync);
        }
        if self.names[kind as usize].is_some() {
            self.diags.error(line, format!("{}s declared twice", kind.label()));
            return Err(Resync);
        }
        let mut words = Vec::new();
        while self.pos < self.tokens.len() && !self.at_declaration() {
            words.push(self.tokens[self.pos].text.to_string());
            self.pos += 1;
        }
        let names: Vec<String> = match words.as_slice() {
            [] => {
                self.diags.error(line, format!("empty {} declaration", kind.label()));
                return Err(Resync);
            }
            [single] if single.parse::<usize>().is_ok() => {
                let n: usize = single.parse().unwrap();
                if n == 0 {
                    self.diags.error(line, format!("need at least one {}", kind.label()));
                    return Err(Resync);
                }
                (0..n).map(|i| i.to_string()).collect()
            }
            _ => words,
        };
        let mut lookup = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if name == "*" || lookup.insert(name.clone(), i).is_some() {
                self.diags.error(line, format!("invalid or duplicate {} name `{name}`", kind.label()));
                return Err(Resync);
            }
        }
        self.lookup[kind as usize] = lookup;
        self.names[kind as usize] = Some(names);
        Ok(())
    }

    fn start_decl(&mut self, line: usize) -> Step<()> {
        let Some(ns) = self.names[Kind::State as usize].as_ref().map(Vec::len) else {
            self.diags.error(line, "`start` before `states`");
            return Err(Resync);
        };
        let mut words = Vec::new();
        while self.pos < self.tokens.len() && !self.at_declaration() {
            words.push(self.tokens[self.pos].clone());
            self.pos += 1;
        }
        let start = match words.as_slice() {
            [w] if w.text == "uniform" => Start::Uniform,
            ws if ws.len() == ns && ws.iter().all(|w| w.text.parse::<f64>().is_ok()) => {
                Start::Probabilities(ws.iter().map(|w| w.text.parse().unwrap()).collect())
            }
            [w] => match self.lookup[Kind::State as usize].get(w.text) {
                Some(&s) => Start::State(s),
                None => {
                    self.diags.error(w.line, format!("undeclared state `{}`", w.text));
                    return Err(Resync);
                }
            },
            ws => {
                self.diags.error(line, format!("start needs {ns} probabilities, found {} tokens", ws.len()));
                return Err(Resync);
            }
        };
        self.start = Some((line, start));
        Ok(())
    }

    fn prepare_tables(&mut self, line: usize) -> bool {
        if self.tables_ready {
            return true;
        }
        let mut ok = true;
        for kind in [Kind::State, Kind::Action, Kind::Observation] {
            if self.names[kind as usize].is_none() {
                self.diags.error(line, format!("missing `{}s` declaration before model entries", kind.label()));
                ok = false;
            }
        }
        if !ok {
            // Report once; later entries are skipped silently.
            self.names.iter_mut().for_each(|n| {
                n.get_or_insert_with(Vec::new);
            });
            self.tables_ready = true;
            return false;
        }
        let (ns, na, no) = (self.count(Kind::State), self.count(Kind::Action), self.count(Kind::Observation));
        self.transition = vec![0.0; na * ns * ns];
        self.obs = vec![0.0; na * ns * no];
        self.obs_line = vec![0; na * ns];
        self.trans_line = vec![0; ns * na];
        self.tables_ready = true;
        true
    }

    fn tables_usable(&self) -> bool {
        self.count(Kind::State) > 0 && self.count(Kind::Action) > 0 && self.count(Kind::Observation) > 0
    }

    fn transition_entry(&mut self) -> Step<()> {
        if !self.tables_usable() {
            return Err(Resync);
        }
        let ns = self.count(Kind::State);
        let line = self.line();
        let a = self.resolve(Kind::Action, true)?;
        if self.peek().is_some_and(|t| t.text == ":") {
            self.pos += 1;
            let s = self.resolve(Kind::State, true)?;
            if self.peek().is_some_and(|t| t.text == ":") {
                self.pos += 1;
                let next = self.resolve(Kind::State, true)?;
                let p = self.number()?;
                self.set_transition(line, a, s, |row| each(next, ns, |n| row[n] = p));
            } else if self.peek().is_some_and(|t| t.text == "uniform") {
                self.pos += 1;
                self.set_transition(line, a, s, |row| row.fill(1.0 / ns as f64));
            } else {
                let values = self.numbers(ns)?;
                self.set_transition(line, a, s, |row| row.copy_from_slice(&values));
            }
        } else {
            let special = self.peek().map(|t| t.text);
            match special {
                Some("identity") => {
                    self.pos += 1;
                    for s in 0..ns {
                        self.set_transition(line, a, Some(s), |row| {
                            row.fill(0.0);
                            row[s] = 1.0;
                        });
                    }
                }
                Some("uniform") => {
                    self.pos += 1;
                    self.set_transition(line, a, None, |row| row.fill(1.0 / ns as f64));
                }
                _ => {
                    let values = self.numbers(ns * ns)?;
                    for s in 0..ns {
                        let slice = &values[s * ns..(s + 1) * ns];
                        self.set_transition(line, a, Some(s), |row| row.copy_from_slice(slice));
                    }
                }
            }
        }
        Ok(())
    }

    fn set_transition(&mut self, line: usize, action: Ref, state: Ref, mut f: impl FnMut(&mut [f64])) {
        let (ns, na) = (self.count(Kind::State), self.count(Kind::Action));
        each(action, na, |a| {
            each(state, ns, |s| {
                self.trans_line[s * na + a] = line;
                let base = (s * na + a) * ns;
                f(&mut self.transition[base..base + ns]);
            })
        });
    }

    fn observation_entry(&mut self) -> Step<()> {
        if !self.tables_usable() {
            return Err(Resync);
        }
        let (ns, no) = (self.count(Kind::State), self.count(Kind::Observation));
        let line = self.line();
        let a = self.resolve(Kind::Action, true)?;
        if self.peek().is_some_and(|t| t.text == ":") {
            self.pos += 1;
            let next = self.resolve(Kind::State, true)?;
            if self.peek().is_some_and(|t| t.text == ":") {
                self.pos += 1;
                let o = self.resolve(Kind::Observation, true)?;
                let p = self.number()?;
                self.set_observation(a, next, line, |row| each(o, no, |o| row[o] = p));
            } else if self.peek().is_some_and(|t| t.text == "uniform") {
                self.pos += 1;
                self.set_observation(a, next, line, |row| row.fill(1.0 / no as f64));
            } else {
                let values = self.numbers(no)?;
                self.set_observation(a, next, line, |row| row.copy_from_slice(&values));
            }
        } else if self.peek().is_some_and(|t| t.text == "uniform") {
            self.pos += 1;
            self.set_observation(a, None, line, |row| row.fill(1.0 / no as f64));
        } else {
            let values = self.numbers(ns * no)?;
            for s in 0..ns {
                let slice = &values[s * no..(s + 1) * no];
                self.set_observation(a, Some(s), line, |row| row.copy_from_slice(slice));
            }
        }
        Ok(())
    }

    fn set_observation(&mut self, action: Ref, next: Ref, line: usize, mut f: impl FnMut(&mut [f64])) {
        let (ns, na, no) = (self.count(Kind::State), self.count(Kind::Action), self.count(Kind::Observation));
        each(action, na, |a| {
            each(next, ns, |s| {
                let row = a * ns + s;
                self.obs_line[row] = line;
                f(&mut self.obs[row * no..(row + 1) * no]);
            })
        });
    }

    fn reward_entry(&mut self) -> Step<()> {
        if !self.tables_usable() {
            return Err(Resync);
        }
        let (ns, no) = (self.count(Kind::State), self.count(Kind::Observation));
        let action = self.resolve(Kind::Action, true)?;
        self.expect_colon()?;
        let state = self.resolve(Kind::State, true)?;
        if self.peek().is_some_and(|t| t.text == ":") {
            self.pos += 1;
            let next = self.resolve(Kind::State, true)?;
            if self.peek().is_some_and(|t| t.text == ":") {
                self.pos += 1;
                let observation = self.resolve(Kind::Observation, true)?;
                let value = self.number()?;
                self.rewards.push(RewardEntry { action, state, next, observation, value });
            } else {
                let values = self.numbers(no)?;
                for (o, value) in values.into_iter().enumerate() {
                    self.rewards.push(RewardEntry { action, state, next, observation: Some(o), value });
                }
            }
        } else {
            let values = self.numbers(ns * no)?;
            for (i, value) in values.into_iter().enumerate() {
                self.rewards.push(RewardEntry {
                    action,
                    state,
                    next: Some(i / no),
                    observation: Some(i % no),
                    value,
                });
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<ParsedPomdp, ParseDiagnostics> {
        for kind in [Kind::State, Kind::Action, Kind::Observation] {
            if self.names[kind as usize].is_none() {
                self.diags.error(0, format!("missing `{}s` declaration", kind.label()));
            }
        }
        if self.diags.has_errors() {
            return Err(self.diags);
        }
        if !self.tables_ready {
            self.prepare_tables(0);
        }
        let (ns, na, no) = (self.count(Kind::State), self.count(Kind::Action), self.count(Kind::Observation));

        for s in 0..ns {
            for a in 0..na {
                let base = (s * na + a) * ns;
                let line = self.trans_line[s * na + a];
                let row = &mut self.transition[base..base + ns];
                let (sn, an) = (&self.names[0].as_ref().unwrap()[s], &self.names[1].as_ref().unwrap()[a]);
                if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    self.diags.error(line, format!("transition ({sn}, {an}) has entry {v} outside [0, 1]"));
                    continue;
                }
                if let Err(sum) = normalize(row) {
                    let message = if line == 0 {
                        format!("no transitions given for action `{an}` from state `{sn}`")
                    } else {
                        format!("transition row for action `{an}` from state `{sn}` sums to {sum}, not 1")
                    };
                    self.diags.error(line, message);
                }
            }
        }

        let observation_of = self.fold_observations(ns, na, no);

        let start_line = self.start.as_ref().map_or(0, |(l, _)| *l);
        let mut start_belief = match self.start.take().map(|(_, s)| s).unwrap_or(Start::Uniform) {
            Start::Uniform => vec![1.0 / ns as f64; ns],
            Start::Probabilities(p) => p,
            Start::State(s) => {
                let mut b = vec![0.0; ns];
                b[s] = 1.0;
                b
            }
        };
        if start_belief.iter().any(|v| !(0.0..=1.0).contains(v)) {
            self.diags.error(start_line, "start belief has entries outside [0, 1]");
        } else if let Err(sum) = normalize(&mut start_belief) {
            self.diags.error(start_line, format!("start belief sums to {sum}, not 1"));
        }

        if self.diags.has_errors() {
            return Err(self.diags);
        }
        let observation_of = observation_of.expect("no observation errors");
        let reward = self.fold_rewards(ns, na, &observation_of);

        let parts = PomdpParts {
            state_names: self.names[0].take().unwrap(),
            action_names: self.names[1].take().unwrap(),
            observation_names: self.names[2].take().unwrap(),
            transition: std::mem::take(&mut self.transition),
            observation_of,
            reward,
            start_belief,
            discount: self.discount.unwrap_or(1.0),
        };
        match Pomdp::new(parts) {
            Ok(pomdp) => Ok(ParsedPomdp { pomdp, diagnostics: self.diags }),
            Err(violations) => {
                for v in violations {
                    self.diags.error(0, v.to_string());
                }
                Err(self.diags)
            }
        }
    }

    fn fold_observations(&mut self, ns: usize, na: usize, no: usize) -> Option<Vec<usize>> {
        const DETERMINISTIC: &str = "observation must be a deterministic function of state";
        let mut out = vec![0; ns];
        let mut ok = true;
        for s in 0..ns {
            let mut seen: Option<usize> = None;
            for a in 0..na {
                let row_index = a * ns + s;
                let line = self.obs_line[row_index];
                if line == 0 {
                    if no == 1 {
                        continue;
                    }
                    let (sn, an) = (&self.names[0].as_ref().unwrap()[s], &self.names[1].as_ref().unwrap()[a]);
                    self.diags.error(0, format!("no observation defined for state `{sn}` under action `{an}`"));
                    ok = false;
                    break;
                }
                let row = &self.obs[row_index * no..(row_index + 1) * no];
                let mut hit = None;
                let mut bad = false;
                for (o, &p) in row.iter().enumerate() {
                    if (p - 1.0).abs() <= PARSE_TOLERANCE {
                        if hit.replace(o).is_some() {
                            bad = true;
                        }
                    } else if p.abs() > PARSE_TOLERANCE {
                        bad = true;
                    }
                }
                let Some(o) = hit.filter(|_| !bad) else {
                    self.diags.error(line, DETERMINISTIC);
                    ok = false;
                    break;
                };
                if seen.is_some_and(|prev| prev != o) {
                    self.diags.error(line, format!("{DETERMINISTIC} (state `{}` differs across actions)", self.names[0].as_ref().unwrap()[s]));
                    ok = false;
                    break;
                }
                seen = Some(o);
            }
            out[s] = seen.unwrap_or(0);
        }
        ok.then_some(out)
    }

    fn fold_rewards(&self, ns: usize, na: usize, observation_of: &[usize]) -> Vec<f64> {
        // Full R(a, s, s') table with o = ω(s').
        let mut full = vec![0.0; na * ns * ns];
        for e in &self.rewards {
            each(e.action, na, |a| {
                each(e.state, ns, |s| {
                    each(e.next, ns, |next| {
                        if e.observation.is_none_or(|o| o == observation_of[next]) {
                            full[(a * ns + s) * ns + next] = e.value;
                        }
                    })
                })
            });
        }
        let sign = if self.cost { -1.0 } else { 1.0 };
        let mut reward = vec![0.0; ns * na];
        for s in 0..ns {
            for a in 0..na {
                let t = &self.transition[(s * na + a) * ns..(s * na + a + 1) * ns];
                let r = &full[(a * ns + s) * ns..(a * ns + s + 1) * ns];
                let mut reached = t.iter().zip(r).filter(|(&p, _)| p > 0.0).map(|(_, &v)| v);
                let first = reached.next().unwrap_or(0.0);
                let value = if reached.all(|v| v == first) {
                    first
                } else {
                    t.iter().zip(r).map(|(p, v)| p * v).sum()
                };
                reward[s * na + a] = sign * value;
            }
        }
        reward
    }
}

fn each(r: Ref, n: usize, mut f: impl FnMut(usize)) {
    match r {
        Some(i) => f(i),
        None => (0..n).for_each(f),
    }
}

/// Renormalizes a row within parse tolerance; returns the sum otherwise.
fn normalize(row: &mut [f64]) -> Result<(), f64> {
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PARSE_TOLERANCE {
        return Err(sum);
    }
    if (sum - 1.0).abs() > RENORMALIZE_SLACK {
        row.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(())
}

/// Writes `p` in an explicit form that [`parse_pomdp`] reads back to
/// identical tables.
pub fn write_pomdp(p: &Pomdp) -> String {
    let mut out = String::new();
    let names = |list: &[String]| -> String {
        let numbered = list.iter().enumerate().all(|(i, n)| *n == i.to_string());
        if numbered {
            list.len().to_string()
        } else {
            list.join(" ")
        }
    };
    let join = |row: &[f64]| row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "discount: {}", p.discount());
    let _ = writeln!(out, "values: reward");
    let _ = writeln!(out, "states: {}", names(p.state_names()));
    let _ = writeln!(out, "actions: {}", names(p.action_names()));
    let _ = writeln!(out, "observations: {}", names(p.observation_names()));
    let _ = writeln!(out, "start: {}", join(p.start_belief()));
    out.push('\n');
    let (ns, na) = (p.num_states(), p.num_actions());
    for a in 0..na {
        for s in 0..ns {
            let _ = writeln!(out, "T: {a} : {s}\n{}", join(p.transition_row(s, a)));
        }
    }
    out.push('\n');
    for s in 0..ns {
        let mut row = vec![0.0; p.num_observations()];
        row[p.observation_of(s)] = 1.0;
        let _ = writeln!(out, "O: * : {s}\n{}", join(&row));
    }
    out.push('\n');
    for a in 0..na {
        for s in 0..ns {
            let _ = writeln!(out, "R: {a} : {s} : * : * {}", p.reward(s, a));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(text: &str) -> Vec<String> {
        parse_pomdp(text).unwrap_err().errors().map(|d| d.message.clone()).collect()
    }

    #[test]
    fn uniform_start_two_states() {
        let text = "states: 2\nactions: 1\nobservations: 1\nstart: uniform\nT: * identity\n";
        let p = parse_pomdp(text).unwrap().pomdp;
        assert_eq!(p.start_belief(), &[0.5, 0.5]);
    }

    #[test]
    fn single_entries() {
        let text = "states: 1\nactions: 1\nobservations: 1\nT: 0 : 0 : 0 1.0\nR: 0 : 0 : 0 : 0 2.0\n";
        let p = parse_pomdp(text).unwrap().pomdp;
        assert_eq!(p.reward(0, 0), 2.0);
        assert_eq!(p.transition(0, 0, 0), 1.0);
    }

    #[test]
    fn stochastic_observation_is_rejected() {
        let text = "states: left right\nactions: listen\nobservations: left right\n\
                    T: * identity\nO: * : 0 : left 0.85\nO: * : 0 : right 0.15\nO: * : 1 : right 1.0\n";
        let errs = errors(text);
        assert!(errs.iter().any(|e| e.contains("deterministic function of state")), "{errs:?}");
        assert!(errors("states: 2\nactions: 1\nobservations: left right\nT: * identity\nO: * : 0 : left 0.85\n")
            .iter()
            .any(|e| e.contains("deterministic")));
    }

    #[test]
    fn action_dependent_observation_is_rejected() {
        let text = "states: 1\nactions: a b\nobservations: x y\nT: * identity\nO: a : 0 : x 1\nO: b : 0 : y 1\n";
        assert!(errors(text)[0].contains("deterministic"));
    }

    #[test]
    fn bad_rows_and_names() {
        let base = "states: 2\nactions: 1\nobservations: 1\n";
        assert!(errors(&format!("{base}T: 0 : 0\n0.5 0.4\nT: 0 : 1\n0 1\n"))[0].contains("sums to"));
        assert!(errors(&format!("{base}T: 0 : zz : 0 1.0\n"))[0].contains("undeclared state"));
        assert!(errors(&format!("{base}frobnicate: 3\n"))[0].contains("unknown keyword"));
        assert!(errors("actions: 1\nobservations: 1\n").iter().any(|e| e.contains("states")));
        assert!(errors("states: 1\nactions: 1\nT: * identity\n").iter().any(|e| e.contains("observations")));
    }

    #[test]
    fn near_one_rows_are_renormalized() {
        let text = "states: 2\nactions: 1\nobservations: 1\nT: 0\n0.5 0.5000004\n0 1\n";
        let p = parse_pomdp(text).unwrap().pomdp;
        let sum: f64 = p.transition_row(0, 0).iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn discount_warns() {
        let text = "discount: 0.95\nstates: 1\nactions: 1\nobservations: 1\nT: * identity\n";
        let parsed = parse_pomdp(text).unwrap();
        assert_eq!(parsed.pomdp.discount(), 0.95);
        assert_eq!(parsed.diagnostics.warnings().count(), 1);
    }

    #[test]
    fn rewards_fold_by_expectation() {
        // From s0 under `go`: half to s0 (obs x), half to s1 (obs y).
        let text = "states: s0 s1\nactions: go\nobservations: x y\n\
                    T: go : s0\n0.5 0.5\nT: go : s1\n0 1\n\
                    O: * : s0 : x 1\nO: * : s1 : y 1\n\
                    R: go : s0 : * : x 4\nR: go : s0 : * : y 2\nR: go : s1 : * : * 1\n\
                    values: cost\n";
        let p = parse_pomdp(text).unwrap().pomdp;
        assert_eq!(p.reward(0, 0), -3.0);
        assert_eq!(p.reward(1, 0), -1.0);
        assert_eq!(p.observation_of(1), 1);
    }

    #[test]
    fn colons_attach_to_tokens() {
        let text = "states:3\nactions: a\nobservations: 1\nstart: 2\nT:a:0:1 1.0\nT:a:1:2 1.0\nT:a:2:2 1.0\n";
        let p = parse_pomdp(text).unwrap().pomdp;
        assert_eq!(p.start_belief(), &[0.0, 0.0, 1.0]);
        assert_eq!(p.transition(1, 0, 2), 1.0);
    }
}
