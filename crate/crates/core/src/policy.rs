//! Free finite-memory policies and their text format.
//!
//! A policy with `k` memory states maps every `(observation, memory)` cell
//! to an `(action, next memory)` decision. Cells are stored in o-major,
//! m-minor order: cell `(o, m)` lives at index `o * k + m`. Execution always
//! starts in memory state 0.
//!
//! Text format v1:
//!
//! ```text
//! fmp 1 <observations> <memory states>
//! <o> <m> <a> <m'>        one line per cell, o-major then m
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Decision {
    pub action: usize,
    pub memory: usize,
}

impl Decision {
    pub const fn new(action: usize, memory: usize) -> Self {
        Decision { action, memory }
    }

    /// Position of this decision in (a-major, m'-minor) order.
    #[inline]
    pub fn pair_index(self, memory_count: usize) -> usize {
        self.action * memory_count + self.memory
    }

    #[inline]
    pub fn from_pair_index(index: usize, memory_count: usize) -> Self {
        Decision::new(index / memory_count, index % memory_count)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteMemoryPolicy {
    num_observations: usize,
    memory_count: usize,
    cells: Vec<Decision>,
}

impl FiniteMemoryPolicy {
    pub fn new(num_observations: usize, memory_count: usize, cells: Vec<Decision>) -> Result<Self> {
        if memory_count == 0 {
            return Err(Error::ZeroMemory);
        }
        let expected = num_observations * memory_count;
        if cells.len() != expected {
            return Err(Error::IndexOutOfRange { index: cells.len(), limit: expected });
        }
        if let Some(d) = cells.iter().find(|d| d.memory >= memory_count) {
            return Err(Error::IndexOutOfRange { index: d.memory, limit: memory_count });
        }
        Ok(FiniteMemoryPolicy { num_observations, memory_count, cells })
    }

    /// Every cell set to the same decision.
    pub fn uniform(num_observations: usize, memory_count: usize, decision: Decision) -> Result<Self> {
        Self::new(
            num_observations,
            memory_count,
            vec![decision; num_observations * memory_count],
        )
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    pub fn memory_count(&self) -> usize {
        self.memory_count
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Decision] {
        &self.cells
    }

    #[inline]
    pub fn cell_index(&self, observation: usize, memory: usize) -> usize {
        observation * self.memory_count + memory
    }

    #[inline]
    pub fn decide(&self, observation: usize, memory: usize) -> Decision {
        self.cells[observation * self.memory_count + memory]
    }

    #[inline]
    pub fn cell(&self, index: usize) -> Decision {
        self.cells[index]
    }

    /// Replaces one cell. Panics if the decision's memory index is out of range.
    pub fn set_cell(&mut self, index: usize, decision: Decision) {
        assert!(decision.memory < self.memory_count);
        self.cells[index] = decision;
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [Decision] {
        &mut self.cells
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.num_observations == other.num_observations && self.memory_count == other.memory_count
    }

    pub fn max_action(&self) -> Option<usize> {
        self.cells.iter().map(|d| d.action).max()
    }

    /// The memoryless policy this one induces on the cross-product POMDP.
    pub fn to_stationary(&self) -> FiniteMemoryPolicy {
        let k = self.memory_count;
        let cells = self
            .cells
            .iter()
            .map(|d| Decision::new(d.action * k + d.memory, 0))
            .collect();
        FiniteMemoryPolicy { num_observations: self.num_observations * k, memory_count: 1, cells }
    }

    /// Renames memory state `m` to `perm[m]` everywhere.
    pub fn relabel_memory(&self, perm: &[usize]) -> Result<FiniteMemoryPolicy> {
        let k = self.memory_count;
        let mut seen = vec![false; k];
        if perm.len() != k {
            return Err(Error::IndexOutOfRange { index: perm.len(), limit: k });
        }
        for &target in perm {
            if target >= k || std::mem::replace(&mut seen[target], true) {
                return Err(Error::Config("memory relabeling is not a permutation".into()));
            }
        }
        let mut cells = self.cells.clone();
        for o in 0..self.num_observations {
            for m in 0..k {
                let d = self.decide(o, m);
                cells[o * k + perm[m]] = Decision::new(d.action, perm[d.memory]);
            }
        }
        Ok(FiniteMemoryPolicy { num_observations: self.num_observations, memory_count: k, cells })
    }

    /// Embeds the policy into `memory_count` memory states; the new cells are
    /// filled with `filler` and are unreachable from memory 0.
    pub fn padded(&self, memory_count: usize, filler: Decision) -> Result<FiniteMemoryPolicy> {
        let k = self.memory_count;
        if memory_count < k || filler.memory >= memory_count {
            return Err(Error::IndexOutOfRange { index: memory_count, limit: k });
        }
        let mut cells = Vec::with_capacity(self.num_observations * memory_count);
        for o in 0..self.num_observations {
            cells.extend_from_slice(&self.cells[o * k..(o + 1) * k]);
            cells.extend(std::iter::repeat_n(filler, memory_count - k));
        }
        Ok(FiniteMemoryPolicy { num_observations: self.num_observations, memory_count, cells })
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for FiniteMemoryPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fmp 1 {} {}", self.num_observations, self.memory_count)?;
        for o in 0..self.num_observations {
            for m in 0..self.memory_count {
                let d = self.decide(o, m);
                writeln!(f, "{o} {m} {} {}", d.action, d.memory)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyParseError {
    #[error("bad header: {0}")]
    Header(String),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("expected {expected} cell lines, found {found}")]
    LineCount { expected: usize, found: usize },
}

impl FromStr for FiniteMemoryPolicy {
    type Err = PolicyParseError;

    fn from_str(text: &str) -> std::result::Result<Self, Self::Err> {
        parse_policy(text)
    }
}

/// Parses the v1 text format. Blank lines and `#` comments are ignored.
pub fn parse_policy(text: &str) -> std::result::Result<FiniteMemoryPolicy, PolicyParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (_, header) = lines
        .next()
        .ok_or_else(|| PolicyParseError::Header("empty input".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (num_observations, memory_count) = match fields.as_slice() {
        ["fmp", "1", o, k] => {
            let o: usize = o.parse().map_err(|_| PolicyParseError::Header(header.into()))?;
            let k: usize = k.parse().map_err(|_| PolicyParseError::Header(header.into()))?;
            if k == 0 {
                return Err(PolicyParseError::Header("memory count must be at least 1".into()));
            }
            (o, k)
        }
        ["fmp", version, ..] if *version != "1" => {
            return Err(PolicyParseError::Header(format!("unsupported version {version}")))
        }
        _ => return Err(PolicyParseError::Header(header.into())),
    };

    let expected = num_observations * memory_count;
    let mut cells: Vec<Option<Decision>> = vec![None; expected];
    let mut found = 0;
    for (line, body) in lines {
        found += 1;
        let nums: Vec<usize> = body
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| PolicyParseError::Line { line, message: format!("not an index: {body}") })?;
        let [o, m, a, next] = nums[..] else {
            return Err(PolicyParseError::Line { line, message: "expected `o m a m'`".into() });
        };
        if o >= num_observations || m >= memory_count || next >= memory_count {
            return Err(PolicyParseError::Line { line, message: format!("index out of range: {body}") });
        }
        let slot = &mut cells[o * memory_count + m];
        if slot.is_some() {
            return Err(PolicyParseError::Line { line, message: format!("duplicate cell ({o}, {m})") });
        }
        *slot = Some(Decision::new(a, next));
    }
    if found != expected {
        return Err(PolicyParseError::LineCount { expected, found });
    }
    let cells = cells.into_iter().map(|c| c.expect("all cells counted")).collect();
    Ok(FiniteMemoryPolicy { num_observations, memory_count, cells })
}
