//! Resource caps shared by every exponential search.
//!
//! A [`Budget`] holds the limits; a [`Meter`] counts consumption against them
//! for one stage. Running out is reported as [`Error::Budget`], never as a
//! silently truncated answer.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Backtracking nodes (search decisions) per stage.
    pub nodes: u64,
    /// Structures enumerated or stored (colours, candidates, oracle inputs).
    pub structures: u64,
    /// Generated clauses.
    pub clauses: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { nodes: 20_000_000, structures: 2_000_000, clauses: 200_000 }
    }
}

impl Budget {
    pub const UNLIMITED: Budget = Budget { nodes: u64::MAX, structures: u64::MAX, clauses: u64::MAX };

    /// Parses `SNPKIT_BUDGET`-style overrides: either a single integer applied
    /// to every cap, or a comma-separated list such as `nodes=1e6,clauses=5000`.
    pub fn parse_override(base: Budget, spec: &str) -> std::result::Result<Budget, String> {
        let spec = spec.trim();
        if let Some(v) = parse_count(spec) {
            return Ok(Budget { nodes: v, structures: v, clauses: v });
        }
        let mut out = base;
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            let v = parse_count(value.trim()).ok_or_else(|| format!("bad count `{value}`"))?;
            match key.trim() {
                "nodes" => out.nodes = v,
                "structures" => out.structures = v,
                "clauses" => out.clauses = v,
                other => return Err(format!("unknown budget key `{other}`")),
            }
        }
        Ok(out)
    }

    pub fn meter(&self, stage: &str) -> Meter {
        Meter { budget: *self, stage: stage.to_string(), nodes: 0, structures: 0, clauses: 0 }
    }
}

fn parse_count(s: &str) -> Option<u64> {
    if let Ok(v) = s.parse::<u64>() {
        return Some(v);
    }
    if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("unlimited") {
        return Some(u64::MAX);
    }
    let f: f64 = s.parse().ok()?;
    (f.is_finite() && f >= 0.0).then_some(if f >= u64::MAX as f64 { u64::MAX } else { f as u64 })
}

#[derive(Debug, Clone)]
pub struct Meter {
    pub budget: Budget,
    pub stage: String,
    pub nodes: u64,
    pub structures: u64,
    pub clauses: u64,
}

impl Meter {
    pub fn node(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget.nodes {
            return Err(self.exceeded("nodes", self.budget.nodes));
        }
        Ok(())
    }

    pub fn nodes(&mut self, k: u64) -> Result<()> {
        self.nodes = self.nodes.saturating_add(k);
        if self.nodes > self.budget.nodes {
            return Err(self.exceeded("nodes", self.budget.nodes));
        }
        Ok(())
    }

    pub fn structure(&mut self) -> Result<()> {
        self.structures += 1;
        if self.structures > self.budget.structures {
            return Err(self.exceeded("structures", self.budget.structures));
        }
        Ok(())
    }

    pub fn clause(&mut self) -> Result<()> {
        self.clauses += 1;
        if self.clauses > self.budget.clauses {
            return Err(self.exceeded("clauses", self.budget.clauses));
        }
        Ok(())
    }

    /// Fails up front when `needed` structures would exceed the cap.
    pub fn reserve_structures(&self, needed: u128) -> Result<()> {
        if needed > self.budget.structures as u128 {
            return Err(self.exceeded("structures", self.budget.structures));
        }
        Ok(())
    }

    pub fn exceeded(&self, resource: &'static str, limit: u64) -> Error {
        Error::Budget { stage: self.stage.clone(), resource, limit }
    }
}
