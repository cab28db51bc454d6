//! Contraction graphs between generator legs.
//!
//! Every leg `M_{ij'}` carries two index strands. Inside a trace the corner
//! after slot `p` joins the column strand of `p` to the row strand of
//! `p + 1`; a propagator `<M_{ij'} M_{kl'}> ~ d_{il'} d_{kj'}` joins the row
//! strand of one leg to the column strand of the other. Following strands
//! gives the face permutation `phi = next . partner`, acting on legs (each
//! leg standing for its row corner). Its cycles are the closed index loops:
//! loops without uncontracted legs are pure and contribute a factor `N`
//! (or `N_color`), loops through uncontracted legs become the trace words of
//! the resulting generator.

use std::fmt;

use thiserror::Error;

use crate::observables::{Generator, Slot, TraceWord};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RibbonError {
    #[error("leg {0:?} does not exist")]
    UnknownLeg(LegId),
    #[error("leg {0:?} is used by more than one pair")]
    LegReused(LegId),
    #[error("leg {0:?} cannot be paired with itself")]
    SelfPair(LegId),
    #[error("legs {0:?} and {1:?} belong to the same factor of a product")]
    SameFactor(LegId, LegId),
}

/// Position of a leg: factor (A = 0, B = 1, ..), trace within the factor's
/// canonical generator, position within the trace word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LegId {
    pub factor: usize,
    pub trace: usize,
    pub position: usize,
}

impl fmt::Display for LegId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.factor, self.trace, self.position)
    }
}

/// Which pairs of legs may be contracted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairingMode {
    /// Only legs of different factors (normal ordering forbids the rest).
    Product,
    /// Any two distinct legs, including legs of the same trace.
    Transport,
}

/// Flat view of the legs of a list of factors.
#[derive(Debug)]
pub struct LegTable<'a> {
    ids: Vec<LegId>,
    slots: Vec<&'a Slot>,
    next: Vec<usize>,
    prev: Vec<usize>,
    trace_of: Vec<usize>,
    factor_of_trace: Vec<usize>,
}

impl<'a> LegTable<'a> {
    pub fn new(factors: &[&'a Generator]) -> Self {
        let mut table = LegTable {
            ids: Vec::new(),
            slots: Vec::new(),
            next: Vec::new(),
            prev: Vec::new(),
            trace_of: Vec::new(),
            factor_of_trace: Vec::new(),
        };
        for (f, g) in factors.iter().enumerate() {
            for (t, word) in g.traces().iter().enumerate() {
                let global_trace = table.factor_of_trace.len();
                table.factor_of_trace.push(f);
                let start = table.ids.len();
                let n = word.len();
                for (p, slot) in word.slots().iter().enumerate() {
                    table.ids.push(LegId {
                        factor: f,
                        trace: t,
                        position: p,
                    });
                    table.slots.push(slot);
                    table.next.push(start + (p + 1) % n);
                    table.prev.push(start + (p + n - 1) % n);
                    table.trace_of.push(global_trace);
                }
            }
        }
        table
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn trace_count(&self) -> usize {
        self.factor_of_trace.len()
    }

    pub fn legs(&self) -> &[LegId] {
        &self.ids
    }

    pub fn slot(&self, leg: LegId) -> Option<&'a Slot> {
        self.index_of(leg).map(|i| self.slots[i])
    }

    pub(crate) fn slot_at(&self, i: usize) -> &'a Slot {
        self.slots[i]
    }

    pub(crate) fn factor_at(&self, i: usize) -> usize {
        self.ids[i].factor
    }

    fn index_of(&self, leg: LegId) -> Option<usize> {
        self.ids.binary_search(&leg).ok()
    }

    fn allowed(&self, mode: PairingMode, i: usize, j: usize) -> bool {
        i != j && (mode == PairingMode::Transport || self.ids[i].factor != self.ids[j].factor)
    }

    /// Partner array for a public pairing, validating admissibility.
    fn partners(&self, mode: PairingMode, pairing: &Pairing) -> Result<Vec<usize>, RibbonError> {
        let mut partner = vec![NONE; self.len()];
        for &(a, b) in &pairing.pairs {
            let i = self.index_of(a).ok_or(RibbonError::UnknownLeg(a))?;
            let j = self.index_of(b).ok_or(RibbonError::UnknownLeg(b))?;
            if i == j {
                return Err(RibbonError::SelfPair(a));
            }
            if !self.allowed(mode, i, j) {
                return Err(RibbonError::SameFactor(a, b));
            }
            for (x, id) in [(i, a), (j, b)] {
                if partner[x] != NONE {
                    return Err(RibbonError::LegReused(id));
                }
            }
            partner[i] = j;
            partner[j] = i;
        }
        Ok(partner)
    }

    fn pairing_from(&self, partner: &[usize]) -> Pairing {
        let pairs = partner
            .iter()
            .enumerate()
            .filter(|&(i, &j)| j != NONE && i < j)
            .map(|(i, &j)| (self.ids[i], self.ids[j]))
            .collect();
        Pairing { pairs }
    }
}

/// A set of contractions, each pair stored with the smaller leg first.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pairing {
    pairs: Vec<(LegId, LegId)>,
}

impl Pairing {
    pub fn new(pairs: impl IntoIterator<Item = (LegId, LegId)>) -> Self {
        let mut pairs: Vec<_> = pairs
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        pairs.sort();
        Pairing { pairs }
    }

    pub fn pairs(&self) -> &[(LegId, LegId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// One branch of the enumeration tree, fixed by the choice made for the
/// first leg. Partitions are disjoint and together cover every pairing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Partition {
    /// There are no legs; the only pairing is empty.
    Empty,
    /// The first leg stays uncontracted.
    FirstUnpaired,
    /// The first leg is contracted with the leg at this flat index.
    FirstPairedWith(usize),
}

/// Depth-first enumeration of admissible pairings in a fixed order.
///
/// With an eps cap, a branch is abandoned once every completion is known to
/// have exponent `P - I` above the cap. Adding one pair composes the face
/// permutation with a transposition, which changes the number of cycles by
/// one and the number of pure cycles by at most two, so `P - I` drops by at
/// most one per additional pair. The bound `(P - I) - (pairs still possible)`
/// is therefore a valid lower bound for every completion.
pub struct PairingEnumerator<'t, 'a> {
    table: &'t LegTable<'a>,
    mode: PairingMode,
    max_pairs: Option<usize>,
    eps_cap: Option<i32>,
}

/// Outcome of an enumeration run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnumerationStats {
    pub emitted: usize,
    /// Some graph was skipped or some branch pruned because of the eps cap.
    pub truncated: bool,
}

impl<'t, 'a> PairingEnumerator<'t, 'a> {
    pub fn new(table: &'t LegTable<'a>, mode: PairingMode) -> Self {
        PairingEnumerator {
            table,
            mode,
            max_pairs: None,
            eps_cap: None,
        }
    }

    /// Caps the number of contractions per pairing.
    pub fn max_pairs(mut self, limit: Option<usize>) -> Self {
        self.max_pairs = limit;
        self
    }

    /// Skips graphs whose exponent `P - I` exceeds `cap`.
    pub fn eps_cap(mut self, cap: Option<i32>) -> Self {
        self.eps_cap = cap;
        self
    }

    pub fn partitions(&self) -> Vec<Partition> {
        if self.table.is_empty() {
            return vec![Partition::Empty];
        }
        let mut out = vec![Partition::FirstUnpaired];
        if self.max_pairs != Some(0) {
            out.extend(
                (1..self.table.len())
                    .filter(|&j| self.table.allowed(self.mode, 0, j))
                    .map(Partition::FirstPairedWith),
            );
        }
        out
    }

    /// Visits every pairing; `visit` receives the partner array (`usize::MAX`
    /// marks an uncontracted leg) and the number of pairs.
    pub fn for_each(&self, mut visit: impl FnMut(&[usize], usize)) -> EnumerationStats {
        let mut stats = EnumerationStats::default();
        for p in self.partitions() {
            let s = self.for_each_in(p, &mut visit);
            stats.emitted += s.emitted;
            stats.truncated |= s.truncated;
        }
        stats
    }

    pub fn for_each_in(&self, partition: Partition, mut visit: impl FnMut(&[usize], usize)) -> EnumerationStats {
        let mut stats = EnumerationStats::default();
        let mut partner = vec![NONE; self.table.len()];
        match partition {
            Partition::Empty => self.recurse(0, &mut partner, 0, &mut visit, &mut stats),
            Partition::FirstUnpaired => self.recurse(1, &mut partner, 0, &mut visit, &mut stats),
            Partition::FirstPairedWith(j) => {
                partner[0] = j;
                partner[j] = 0;
                self.recurse(1, &mut partner, 1, &mut visit, &mut stats);
            }
        }
        stats
    }

    /// All pairings as [`Pairing`] values, in enumeration order.
    pub fn collect(&self) -> Vec<Pairing> {
        let mut out = Vec::new();
        self.for_each(|partner, _| out.push(self.table.pairing_from(partner)));
        out
    }

    fn recurse(
        &self,
        i: usize,
        partner: &mut Vec<usize>,
        npairs: usize,
        visit: &mut impl FnMut(&[usize], usize),
        stats: &mut EnumerationStats,
    ) {
        let n = self.table.len();
        if let Some(cap) = self.eps_cap {
            let exponent = npairs as i32 - pure_loop_count(self.table, partner) as i32;
            if exponent - self.remaining_pairs(i, partner, npairs) as i32 > cap {
                stats.truncated = true;
                return;
            }
            if i >= n && exponent > cap {
                stats.truncated = true;
                return;
            }
        }
        if i >= n {
            stats.emitted += 1;
            visit(partner, npairs);
            return;
        }
        if partner[i] != NONE {
            self.recurse(i + 1, partner, npairs, visit, stats);
            return;
        }
        self.recurse(i + 1, partner, npairs, visit, stats);
        if self.max_pairs.is_some_and(|m| npairs >= m) {
            return;
        }
        for j in i + 1..n {
            if partner[j] == NONE && self.table.allowed(self.mode, i, j) {
                partner[i] = j;
                partner[j] = i;
                self.recurse(i + 1, partner, npairs + 1, visit, stats);
                partner[i] = NONE;
                partner[j] = NONE;
            }
        }
    }

    /// Upper bound on the pairs that can still be added from leg `i` on.
    fn remaining_pairs(&self, i: usize, partner: &[usize], npairs: usize) -> usize {
        let free = (i..self.table.len()).filter(|&k| partner[k] == NONE);
        let bound = match self.mode {
            PairingMode::Transport => free.count() / 2,
            PairingMode::Product => {
                let (mut a, mut b) = (0, 0);
                for k in free {
                    if self.table.factor_at(k) == 0 {
                        a += 1;
                    } else {
                        b += 1;
                    }
                }
                a.min(b)
            }
        };
        match self.max_pairs {
            Some(m) => bound.min(m.saturating_sub(npairs)),
            None => bound,
        }
    }
}

/// Convenience wrapper: all admissible pairings of the table's legs.
pub fn enumerate_pairings(table: &LegTable<'_>, mode: PairingMode, limit: Option<usize>) -> Vec<Pairing> {
    PairingEnumerator::new(table, mode).max_pairs(limit).collect()
}

/// Cycles of the face permutation; each cycle lists legs whose row corner
/// is visited, in traversal order.
fn face_cycles(table: &LegTable<'_>, partner: &[usize]) -> Vec<Vec<usize>> {
    let n = table.len();
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut e = start;
        loop {
            seen[e] = true;
            cycle.push(e);
            let across = if partner[e] == NONE { e } else { partner[e] };
            e = table.next[across];
            if e == start {
                break;
            }
        }
        cycles.push(cycle);
    }
    cycles
}

fn pure_loop_count(table: &LegTable<'_>, partner: &[usize]) -> usize {
    face_cycles(table, partner)
        .iter()
        .filter(|c| c.iter().all(|&e| partner[e] != NONE))
        .count()
}

/// Color resolved for a pure index loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopColor {
    /// Uncolored mode.
    Plain,
    Color(u8),
    /// Projectors of different colors meet on the loop; the graph vanishes.
    Mixed,
}

/// An index loop passing through uncontracted legs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurrentLoop {
    /// The uncontracted legs in the order the loop visits them.
    pub legs: Vec<LegId>,
    /// The loop of a trace none of whose legs is contracted.
    pub isolated: bool,
}

/// Euler data of one connected component of the capped surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Component {
    pub vertices: usize,
    pub propagators: usize,
    pub faces: usize,
}

impl Component {
    pub fn euler_characteristic(&self) -> i64 {
        self.faces as i64 - self.propagators as i64 + self.vertices as i64
    }

    /// Number of handles `H` with `chi = 2 - 2H`; `None` if `chi` is odd or
    /// above 2 (which would violate orientability).
    pub fn handles(&self) -> Option<u32> {
        let chi = self.euler_characteristic();
        (chi <= 2 && chi % 2 == 0).then(|| ((2 - chi) / 2) as u32)
    }
}

/// Everything derived from a single contraction graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopReport {
    /// `D`: traces with no contracted leg.
    pub isolated_vertices: usize,
    /// `I`: loops with no uncontracted leg.
    pub pure_loops: usize,
    /// Resolved color per pure loop, in traversal order.
    pub pure_loop_colors: Vec<LoopColor>,
    /// All loops through uncontracted legs; `J` of them are not isolated.
    pub current_loops: Vec<CurrentLoop>,
    /// Components of the vertex/propagator graph, isolated traces excluded.
    pub components: Vec<Component>,
    /// `P`.
    pub propagators: usize,
    /// `|a| + |b| + ..`.
    pub total_legs: usize,
    /// `T + S + ..`.
    pub total_traces: usize,
    /// `|c|`.
    pub currents: usize,
    /// Power of `1/N` in half units: `|a|/2 + |b|/2 - I - |c|/2`, doubled.
    pub exponent_half_units: i32,
    /// Number of pure loops of color `k + 1` at index `k`.
    pub s_exponents: Vec<u32>,
    /// A pure loop or a current segment mixes projector colors.
    pub vanishes: bool,
}

impl LoopReport {
    /// `J`: current loops that pass through at least one propagator.
    pub fn joined_current_loops(&self) -> usize {
        self.current_loops.iter().filter(|l| !l.isolated).count()
    }

    pub fn faces(&self) -> usize {
        self.pure_loops + self.joined_current_loops()
    }

    /// The exponent in whole units of eps; half units always cancel since
    /// `|a| + |b| - |c| = 2P`.
    pub fn exponent(&self) -> i32 {
        assert!(self.exponent_half_units % 2 == 0, "odd half-unit exponent");
        self.exponent_half_units / 2
    }

    /// `J + sum_k (2 H_k + V_k - 2)`, the exponent rebuilt from the Euler
    /// data. `None` if some component has no valid genus.
    pub fn exponent_from_genus(&self) -> Option<i64> {
        let mut total = self.joined_current_loops() as i64;
        for c in &self.components {
            total += 2 * c.handles()? as i64 + c.vertices as i64 - 2;
        }
        Some(total)
    }

    pub fn total_handles(&self) -> Option<u32> {
        self.components.iter().map(Component::handles).sum()
    }

    /// Checks the counting identities and Euler's formula; returns a
    /// description of the first violation.
    pub fn check_identities(&self) -> Result<(), String> {
        let faces: usize = self.components.iter().map(|c| c.faces).sum();
        if faces != self.faces() {
            return Err(format!("F = {} but I + J = {}", faces, self.faces()));
        }
        if 2 * self.propagators != self.total_legs - self.currents {
            return Err(format!(
                "2P = {} but |a|+|b|-|c| = {}",
                2 * self.propagators,
                self.total_legs - self.currents
            ));
        }
        let vertices: usize = self.components.iter().map(|c| c.vertices).sum();
        if vertices != self.total_traces - self.isolated_vertices {
            return Err(format!(
                "V = {} but T+S-D = {}",
                vertices,
                self.total_traces - self.isolated_vertices
            ));
        }
        let edges: usize = self.components.iter().map(|c| c.propagators).sum();
        if edges != self.propagators {
            return Err(format!("components hold {edges} of {} propagators", self.propagators));
        }
        for c in &self.components {
            if c.handles().is_none() {
                return Err(format!("component {c:?} has Euler characteristic {}", c.euler_characteristic()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for LoopReport {
    /// Diagnostic dump: loop lists followed by the component table.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "D={} I={} J={} P={} exponent={}{}",
            self.isolated_vertices,
            self.pure_loops,
            self.joined_current_loops(),
            self.propagators,
            self.exponent_half_units as f64 / 2.0,
            if self.vanishes { " (vanishes)" } else { "" }
        )?;
        for (k, l) in self.current_loops.iter().enumerate() {
            let legs: Vec<String> = l.legs.iter().map(LegId::to_string).collect();
            let kind = if l.isolated { "isolated" } else { "current" };
            writeln!(f, "  loop {k} {kind}: {}", legs.join(" "))?;
        }
        for (k, c) in self.pure_loop_colors.iter().enumerate() {
            writeln!(f, "  pure loop {k}: {c:?}")?;
        }
        writeln!(f, "  component  V  P  F  H")?;
        for (k, c) in self.components.iter().enumerate() {
            let h = c.handles().map_or("?".to_string(), |h| h.to_string());
            writeln!(f, "  {k:>9}  {}  {}  {}  {h}", c.vertices, c.propagators, c.faces)?;
        }
        Ok(())
    }
}

/// Traverses the strands of a pairing and classifies the loops.
pub fn analyze(table: &LegTable<'_>, mode: PairingMode, pairing: &Pairing) -> Result<LoopReport, RibbonError> {
    let partner = table.partners(mode, pairing)?;
    Ok(analyze_partners(table, &partner))
}

pub(crate) fn analyze_partners(table: &LegTable<'_>, partner: &[usize]) -> LoopReport {
    let n = table.len();
    let ntraces = table.trace_count();
    let color_of = |leg: usize| table.slots[leg].color;
    // corner color at the row strand of `leg`
    let corner = |leg: usize| color_of(table.prev[leg]);

    let mut contracted_trace = vec![false; ntraces];
    let mut propagators = 0;
    for i in 0..n {
        if partner[i] != NONE {
            contracted_trace[table.trace_of[i]] = true;
            if i < partner[i] {
                propagators += 1;
            }
        }
    }

    // components over traces
    let mut parent: Vec<usize> = (0..ntraces).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        if partner[i] != NONE && i < partner[i] {
            let a = find(&mut parent, table.trace_of[i]);
            let b = find(&mut parent, table.trace_of[partner[i]]);
            parent[a] = b;
        }
    }
    let mut comp_index = vec![NONE; ntraces];
    let mut components: Vec<Component> = Vec::new();
    for t in 0..ntraces {
        if !contracted_trace[t] {
            continue;
        }
        let root = find(&mut parent, t);
        if comp_index[root] == NONE {
            comp_index[root] = components.len();
            components.push(Component {
                vertices: 0,
                propagators: 0,
                faces: 0,
            });
        }
        components[comp_index[root]].vertices += 1;
    }
    let comp_of_trace = |parent: &mut [usize], t: usize| comp_index[find(parent, t)];
    for i in 0..n {
        if partner[i] != NONE && i < partner[i] {
            let c = comp_of_trace(&mut parent, table.trace_of[i]);
            components[c].propagators += 1;
        }
    }

    let mut report = LoopReport {
        isolated_vertices: contracted_trace.iter().filter(|c| !**c).count(),
        pure_loops: 0,
        pure_loop_colors: Vec::new(),
        current_loops: Vec::new(),
        components: Vec::new(),
        propagators,
        total_legs: n,
        total_traces: ntraces,
        currents: partner.iter().filter(|p| **p == NONE).count(),
        exponent_half_units: 0,
        s_exponents: Vec::new(),
        vanishes: false,
    };

    for cycle in face_cycles(table, partner) {
        let trace = table.trace_of[cycle[0]];
        let first_current = cycle.iter().position(|&e| partner[e] == NONE);
        match first_current {
            None => {
                report.pure_loops += 1;
                let first = corner(cycle[0]);
                let color = if cycle.iter().any(|&e| corner(e) != first) {
                    LoopColor::Mixed
                } else {
                    match first {
                        None => LoopColor::Plain,
                        Some(c) => LoopColor::Color(c),
                    }
                };
                match color {
                    LoopColor::Mixed => report.vanishes = true,
                    LoopColor::Color(c) => {
                        let idx = c as usize - 1;
                        if report.s_exponents.len() <= idx {
                            report.s_exponents.resize(idx + 1, 0);
                        }
                        report.s_exponents[idx] += 1;
                    }
                    LoopColor::Plain => {}
                }
                report.pure_loop_colors.push(color);
            }
            Some(start) => {
                let len = cycle.len();
                let mut owner = cycle[start];
                let mut legs = vec![table.ids[owner]];
                for k in 1..=len {
                    let e = cycle[(start + k) % len];
                    if corner(e) != color_of(owner) {
                        report.vanishes = true;
                    }
                    if partner[e] == NONE {
                        owner = e;
                        if k < len {
                            legs.push(table.ids[e]);
                        }
                    }
                }
                report.current_loops.push(CurrentLoop {
                    legs,
                    isolated: !contracted_trace[trace],
                });
            }
        }
        if contracted_trace[trace] {
            let c = comp_of_trace(&mut parent, trace);
            components[c].faces += 1;
        }
    }
    report.components = components;
    report.exponent_half_units = (n - report.currents) as i32 - 2 * report.pure_loops as i32;
    report
}

/// The generator formed by the current loops: one trace per loop, slots in
/// loop order, each slot keeping its own projector color.
pub fn result_generator(table: &LegTable<'_>, report: &LoopReport) -> Generator {
    let words = report
        .current_loops
        .iter()
        .map(|l| {
            TraceWord::new(
                l.legs
                    .iter()
                    .map(|id| table.slot(*id).expect("leg from this table").clone())
                    .collect(),
            )
        })
        .collect();
    Generator::from_words(words)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(words: &[&[&str]]) -> Generator {
        Generator::from_labels(words).unwrap()
    }

    fn leg(factor: usize, trace: usize, position: usize) -> LegId {
        LegId {
            factor,
            trace,
            position,
        }
    }

    #[test]
    fn enumeration_counts() {
        let a = w(&[&["x"]]);
        let b = w(&[&["y"]]);
        let t = LegTable::new(&[&a, &b]);
        assert_eq!(enumerate_pairings(&t, PairingMode::Product, None).len(), 2);

        let a = w(&[&["x1", "x2"]]);
        let b = w(&[&["y1", "y2"]]);
        let t = LegTable::new(&[&a, &b]);
        let all = enumerate_pairings(&t, PairingMode::Product, None);
        assert_eq!(all.len(), 7);
        let by_size: Vec<usize> = (0..3).map(|k| all.iter().filter(|p| p.len() == k).count()).collect();
        assert_eq!(by_size, vec![1, 4, 2]);
        assert_eq!(enumerate_pairings(&t, PairingMode::Product, Some(1)).len(), 5);

        let t = LegTable::new(&[&a]);
        assert_eq!(enumerate_pairings(&t, PairingMode::Transport, None).len(), 2);
    }

    /// Brute force over all subsets of admissible pairs.
    fn brute_force_count(table: &LegTable<'_>, mode: PairingMode) -> usize {
        let n = table.len();
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| table.allowed(mode, i, j))
            .collect();
        (0u64..1 << edges.len())
            .filter(|mask| {
                let mut used = vec![false; n];
                edges.iter().enumerate().all(|(k, &(i, j))| {
                    if mask >> k & 1 == 0 {
                        return true;
                    }
                    let ok = !used[i] && !used[j];
                    used[i] = true;
                    used[j] = true;
                    ok
                })
            })
            .count()
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let a = w(&[&["a1", "a2"], &["a3"]]);
        let b = w(&[&["b1", "b2", "b3"]]);
        let t = LegTable::new(&[&a, &b]);
        let pairings = enumerate_pairings(&t, PairingMode::Product, None);
        assert_eq!(pairings.len(), brute_force_count(&t, PairingMode::Product));
        let mut dedup = pairings.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), pairings.len());

        let c = w(&[&["c1", "c2", "c3"], &["c4", "c5"]]);
        let t = LegTable::new(&[&c]);
        assert_eq!(
            enumerate_pairings(&t, PairingMode::Transport, None).len(),
            brute_force_count(&t, PairingMode::Transport)
        );
    }

    #[test]
    fn partitions_cover_everything_once() {
        let a = w(&[&["a1", "a2", "a3"]]);
        let b = w(&[&["b1", "b2"], &["b3"]]);
        let t = LegTable::new(&[&a, &b]);
        let e = PairingEnumerator::new(&t, PairingMode::Product);
        let mut by_parts = Vec::new();
        for p in e.partitions() {
            e.for_each_in(p, |partner, _| by_parts.push(t.pairing_from(partner)));
        }
        assert_eq!(by_parts, e.collect());
    }

    #[test]
    fn empty_pairing_on_square_factors() {
        let a = w(&[&["a1", "a2", "a3"], &["a4", "a5", "a6"]]);
        let b = w(&[&["b1", "b2", "b3"], &["b4", "b5", "b6"]]);
        let t = LegTable::new(&[&a, &b]);
        let r = analyze(&t, PairingMode::Product, &Pairing::default()).unwrap();
        assert_eq!(r.isolated_vertices, 4);
        assert_eq!(r.pure_loops, 0);
        assert_eq!(r.joined_current_loops(), 0);
        assert!(r.components.is_empty());
        assert_eq!(r.exponent(), 0);
        assert_eq!(result_generator(&t, &r), a.concat(&b));
    }

    #[test]
    fn planar_matching_of_two_quadratic_traces() {
        let a = w(&[&["x1", "x2"]]);
        let b = w(&[&["y1", "y2"]]);
        let t = LegTable::new(&[&a, &b]);
        for pairing in enumerate_pairings(&t, PairingMode::Product, None).into_iter().filter(|p| p.len() == 2) {
            let r = analyze(&t, PairingMode::Product, &pairing).unwrap();
            assert_eq!((r.isolated_vertices, r.pure_loops, r.joined_current_loops()), (0, 2, 0));
            assert_eq!(
                r.components,
                vec![Component {
                    vertices: 2,
                    propagators: 2,
                    faces: 2
                }]
            );
            assert_eq!(r.components[0].handles(), Some(0));
            assert_eq!(r.exponent(), 0);
            assert_eq!(result_generator(&t, &r), Generator::unit());
        }
    }

    #[test]
    fn square_graph() {
        // a1 -- b1, b1 -- a2, a2 -- b2, b2 -- a1 around a square, one
        // uncontracted leg per vertex, oriented so the inner face is closed.
        let a = w(&[&["a1", "a2", "a3"], &["a4", "a5", "a6"]]);
        let b = w(&[&["b1", "b2", "b3"], &["b4", "b5", "b6"]]);
        let t = LegTable::new(&[&a, &b]);
        let found = enumerate_pairings(&t, PairingMode::Product, Some(4))
            .into_iter()
            .filter(|p| p.len() == 4)
            .map(|p| analyze(&t, PairingMode::Product, &p).unwrap())
            .find(|r| {
                r.isolated_vertices == 0
                    && r.pure_loops == 1
                    && r.joined_current_loops() == 1
                    && r.components.len() == 1
                    && r.components[0].handles() == Some(0)
            })
            .expect("square graph present");
        assert_eq!(
            found.components[0],
            Component {
                vertices: 4,
                propagators: 4,
                faces: 2
            }
        );
        assert_eq!(found.exponent(), 3);
        assert_eq!(found.exponent_from_genus(), Some(3));
        let out = result_generator(&t, &found);
        assert_eq!(out.multi_index(), vec![4]);
    }

    #[test]
    fn genus_one_graph() {
        // Tr M^4 . Tr M^4 with the crossed matching x_i -- y_{i+1 mod 4}
        // twisted: x1-y1, x2-y4, x3-y3, x4-y2 has one handle.
        let a = w(&[&["x1", "x2", "x3", "x4"]]);
        let b = w(&[&["y1", "y2", "y3", "y4"]]);
        let t = LegTable::new(&[&a, &b]);
        let mut genus = [0usize; 3];
        for p in enumerate_pairings(&t, PairingMode::Product, None).into_iter().filter(|p| p.len() == 4) {
            let r = analyze(&t, PairingMode::Product, &p).unwrap();
            r.check_identities().unwrap();
            genus[r.total_handles().unwrap() as usize] += 1;
            assert_eq!(Some(r.exponent() as i64), r.exponent_from_genus());
        }
        // <Tr M^4 Tr M^4>_conn = 4 N^4 (planar, cyclic) + 20 N^2 (torus)
        assert_eq!(genus, [4, 20, 0]);
    }

    #[test]
    fn transport_self_contraction() {
        let a = w(&[&["x1", "x2"]]);
        let t = LegTable::new(&[&a]);
        let p = Pairing::new([(leg(0, 0, 0), leg(0, 0, 1))]);
        let r = analyze(&t, PairingMode::Transport, &p).unwrap();
        assert_eq!(r.pure_loops, 2);
        assert_eq!(r.exponent(), -1);
        assert_eq!(r.components[0].vertices, 1);
        assert!(analyze(&t, PairingMode::Product, &p).is_err());
    }

    #[test]
    fn inadmissible_pairings() {
        let a = w(&[&["x1", "x2"]]);
        let b = w(&[&["y1"]]);
        let t = LegTable::new(&[&a, &b]);
        let reuse = Pairing::new([(leg(0, 0, 0), leg(1, 0, 0)), (leg(0, 0, 1), leg(1, 0, 0))]);
        assert!(matches!(
            analyze(&t, PairingMode::Product, &reuse),
            Err(RibbonError::LegReused(_))
        ));
        let unknown = Pairing::new([(leg(0, 0, 0), leg(1, 0, 5))]);
        assert!(matches!(
            analyze(&t, PairingMode::Product, &unknown),
            Err(RibbonError::UnknownLeg(_))
        ));
    }

    #[test]
    fn colored_mixed_loop_vanishes() {
        // Tr(M P1 M P2) against itself
        let a = Generator::new(vec![vec![Slot::colored("x1", 1), Slot::colored("x2", 2)]]).unwrap();
        let b = Generator::new(vec![vec![Slot::colored("y1", 1), Slot::colored("y2", 2)]]).unwrap();
        let t = LegTable::new(&[&a, &b]);
        let full: Vec<LoopReport> = enumerate_pairings(&t, PairingMode::Product, None)
            .into_iter()
            .filter(|p| p.len() == 2)
            .map(|p| analyze(&t, PairingMode::Product, &p).unwrap())
            .collect();
        assert_eq!(full.len(), 2);
        let surviving: Vec<_> = full.iter().filter(|r| !r.vanishes).collect();
        assert_eq!(surviving.len(), 1);
        assert_eq!(surviving[0].s_exponents, vec![1, 1]);
    }

    #[test]
    fn pruning_keeps_low_order_graphs() {
        let a = w(&[&["a1", "a2", "a3"], &["a4"]]);
        let b = w(&[&["b1", "b2"], &["b3", "b4"]]);
        let t = LegTable::new(&[&a, &b]);
        for cap in 0..4 {
            let mut kept = Vec::new();
            let stats = PairingEnumerator::new(&t, PairingMode::Product)
                .eps_cap(Some(cap))
                .for_each(|partner, _| kept.push(t.pairing_from(partner)));
            let expected: Vec<Pairing> = enumerate_pairings(&t, PairingMode::Product, None)
                .into_iter()
                .filter(|p| analyze(&t, PairingMode::Product, p).unwrap().exponent() <= cap)
                .collect();
            assert_eq!(kept, expected, "cap {cap}");
            assert_eq!(stats.emitted, expected.len());
        }
    }

    #[test]
    fn report_dump_lists_loops() {
        let a = w(&[&["x1", "x2"]]);
        let b = w(&[&["y1", "y2"]]);
        let t = LegTable::new(&[&a, &b]);
        let p = Pairing::new([(leg(0, 0, 0), leg(1, 0, 0))]);
        let text = analyze(&t, PairingMode::Product, &p).unwrap().to_string();
        assert!(text.starts_with("D=0 I=0 J=1 P=1"));
        assert!(text.contains("loop 0 current: 1.0.1 0.0.1"), "{text}");
    }
}
