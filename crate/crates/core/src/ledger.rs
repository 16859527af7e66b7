//! Query accounting for black-box oracles.
//!
//! Every oracle in an instance (or anywhere along a reduction chain) owns a
//! slot in a shared [`OracleTable`]. A [`QueryLedger`] hands out a
//! [`LedgerCtx`] with one atomic counter per slot, so the hot query path is
//! a single relaxed `fetch_add` and counts stay exact under any
//! interleaving of concurrent callers.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OracleKind {
    Preference,
    Covering,
    Utility,
    Coloring,
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OracleKind::Preference => "preference",
            OracleKind::Covering => "covering",
            OracleKind::Utility => "utility",
            OracleKind::Coloring => "coloring",
        };
        f.write_str(s)
    }
}

/// Identity of one oracle: which instance level it belongs to (`scope`),
/// what it answers, and its index within the instance (agent, covering or
/// player number).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OracleId {
    pub scope: Arc<str>,
    pub kind: OracleKind,
    pub index: usize,
}

impl fmt::Display for OracleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}/{}", self.scope, self.kind, self.index)
    }
}

/// Registry of every oracle reachable from an instance. Reductions extend
/// their source's table, so a whole chain shares one table.
#[derive(Debug, Default)]
pub struct OracleTable {
    ids: Mutex<Vec<OracleId>>,
}

impl OracleTable {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    /// Register an oracle, returning its slot.
    pub fn register(&self, id: OracleId) -> usize {
        let mut ids = self.ids.lock().unwrap();
        ids.push(id);
        ids.len() - 1
    }

    pub fn len(&self) -> usize {
        self.ids.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> Vec<OracleId> {
        self.ids.lock().unwrap().clone()
    }
}

struct TableEntry {
    table: Arc<OracleTable>,
    counters: Vec<Arc<AtomicU64>>,
}

/// Per-oracle query counters. Counts never decrease; the total is the sum
/// over oracles.
#[derive(Default)]
pub struct QueryLedger {
    tables: Mutex<HashMap<usize, TableEntry>>,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Resolve counters for every oracle in `table`. Cheap after the first
    /// call; solvers hold the result across their whole query loop.
    pub fn ctx(&self, table: &Arc<OracleTable>) -> LedgerCtx {
        let key = Arc::as_ptr(table) as usize;
        let mut tables = self.tables.lock().unwrap();
        let entry = tables.entry(key).or_insert_with(|| TableEntry {
            table: Arc::clone(table),
            counters: Vec::new(),
        });
        while entry.counters.len() < table.len() {
            entry.counters.push(Arc::new(AtomicU64::new(0)));
        }
        LedgerCtx { counters: entry.counters.clone() }
    }

    /// Snapshot of all registered counters, keyed by oracle id string.
    pub fn snapshot(&self) -> std::collections::BTreeMap<String, u64> {
        let tables = self.tables.lock().unwrap();
        let mut out = std::collections::BTreeMap::new();
        for entry in tables.values() {
            for (id, c) in entry.table.ids().iter().zip(&entry.counters) {
                *out.entry(id.to_string()).or_insert(0) += c.load(Ordering::Relaxed);
            }
        }
        out
    }

    /// Total queries across all oracles.
    pub fn total(&self) -> u64 {
        let tables = self.tables.lock().unwrap();
        tables
            .values()
            .flat_map(|e| e.counters.iter())
            .map(|c| c.load(Ordering::Relaxed))
            .sum()
    }

    /// Queries against one oracle.
    pub fn count(&self, scope: &str, kind: OracleKind, index: usize) -> u64 {
        self.count_matching(|id| &*id.scope == scope && id.kind == kind && id.index == index)
    }

    /// Queries summed over all oracles of one kind within one scope.
    pub fn count_scope_kind(&self, scope: &str, kind: OracleKind) -> u64 {
        self.count_matching(|id| &*id.scope == scope && id.kind == kind)
    }

    fn count_matching(&self, pred: impl Fn(&OracleId) -> bool) -> u64 {
        let tables = self.tables.lock().unwrap();
        let mut total = 0;
        for entry in tables.values() {
            for (id, c) in entry.table.ids().iter().zip(&entry.counters) {
                if pred(id) {
                    total += c.load(Ordering::Relaxed);
                }
            }
        }
        total
    }
}

/// Resolved counters for one oracle table; cloning shares the counters.
#[derive(Clone)]
pub struct LedgerCtx {
    counters: Vec<Arc<AtomicU64>>,
}

impl LedgerCtx {
    #[inline]
    pub fn bump(&self, slot: usize) {
        self.counters[slot].fetch_add(1, Ordering::Relaxed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_are_exact_and_scoped() {
        let table = OracleTable::new();
        let scope: Arc<str> = Arc::from("t");
        let a = table.register(OracleId { scope: scope.clone(), kind: OracleKind::Covering, index: 0 });
        let b = table.register(OracleId { scope: scope.clone(), kind: OracleKind::Covering, index: 1 });
        let ledger = QueryLedger::new();
        let ctx = ledger.ctx(&table);
        for _ in 0..5 {
            ctx.bump(a);
        }
        ctx.bump(b);
        assert_eq!(ledger.count("t", OracleKind::Covering, 0), 5);
        assert_eq!(ledger.count("t", OracleKind::Covering, 1), 1);
        assert_eq!(ledger.count_scope_kind("t", OracleKind::Covering), 6);
        assert_eq!(ledger.total(), 6);
        assert_eq!(ledger.snapshot().get("t:covering/0"), Some(&5));
    }

    #[test]
    fn concurrent_increments_are_lost_update_free() {
        let table = OracleTable::new();
        let scope: Arc<str> = Arc::from("c");
        let slot = table.register(OracleId { scope, kind: OracleKind::Preference, index: 0 });
        let ledger = QueryLedger::new();
        std::thread::scope(|s| {
            for _ in 0..8 {
                let ctx = ledger.ctx(&table);
                s.spawn(move || {
                    for _ in 0..10_000 {
                        ctx.bump(slot);
                    }
                });
            }
        });
        assert_eq!(ledger.total(), 80_000);
    }

    #[test]
    fn two_ledgers_track_independently() {
        let table = OracleTable::new();
        let scope: Arc<str> = Arc::from("x");
        let slot = table.register(OracleId { scope, kind: OracleKind::Utility, index: 2 });
        let l1 = QueryLedger::new();
        let l2 = QueryLedger::new();
        l1.ctx(&table).bump(slot);
        l1.ctx(&table).bump(slot);
        l2.ctx(&table).bump(slot);
        assert_eq!(l1.total(), 2);
        assert_eq!(l2.total(), 1);
    }
}
