//! Decision procedures for subsequence containment up to isomorphism and
//! order-isomorphism, DS order, and catenated-permutation (formation) checks.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use thiserror::Error;

use crate::patterns::{FamilyKind, PatternError, PatternFamily, DEFAULT_ENUM_CAP};
use crate::seqcore::Sequence;

/// Alphabet bound above which r-subset enumeration for perm/dblperm families
/// is refused.
pub const SUBSET_BOUND: usize = 20;

/// Host sizes above which the containment decision parallelizes its top-level
/// candidate loop.
const PARALLEL_THRESHOLD: usize = 50_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("host alphabet {alphabet} exceeds subset-enumeration bound {bound}")]
    AlphabetTooLarge { alphabet: usize, bound: usize },
    #[error(transparent)]
    Enumeration(#[from] PatternError),
}

/// A witness that a pattern occurs in a host: an injective symbol map plus
/// one strictly increasing host position per pattern occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    pub symbol_map: BTreeMap<u32, u32>,
    pub positions: Vec<usize>,
}

struct Matcher<'a> {
    pat: &'a [u32],
    /// pattern position -> dense pattern symbol id
    pat_dense: Vec<usize>,
    /// dense pattern symbol id -> original value (first-appearance order)
    pat_vals: Vec<u32>,
    /// dense pattern symbol -> occurrence count
    pat_mult: Vec<usize>,
    /// [x][t]: occurrences of dense pattern symbol x at positions ≥ t
    pat_suffix: Vec<Vec<usize>>,
    /// [x][y] (x ≠ y): projection of the pattern onto {x,y}; true = x
    pair_proj: Vec<Vec<Vec<bool>>>,
    /// host position -> dense host symbol id
    host_dense: Vec<usize>,
    /// dense host symbol -> original value (first-appearance order)
    host_vals: Vec<u32>,
    /// dense host symbol -> sorted occurrence positions
    host_occ: Vec<Vec<u32>>,
    order_iso: bool,
}

impl<'a> Matcher<'a> {
    fn new(pattern: &'a Sequence, host: &Sequence, order_iso: bool) -> Self {
        let pat = pattern.symbols();
        let mut pmap: HashMap<u32, usize> = HashMap::new();
        let mut pat_vals = Vec::new();
        let mut pat_dense = Vec::with_capacity(pat.len());
        for &x in pat {
            let id = *pmap.entry(x).or_insert_with(|| {
                pat_vals.push(x);
                pat_vals.len() - 1
            });
            pat_dense.push(id);
        }
        let np = pat_vals.len();
        let mut pat_mult = vec![0usize; np];
        for &d in &pat_dense {
            pat_mult[d] += 1;
        }
        let mut pat_suffix = vec![vec![0usize; pat.len() + 1]; np];
        for t in (0..pat.len()).rev() {
            for x in 0..np {
                pat_suffix[x][t] = pat_suffix[x][t + 1] + usize::from(pat_dense[t] == x);
            }
        }
        let mut pair_proj = vec![vec![Vec::new(); np]; np];
        for x in 0..np {
            for y in 0..np {
                if x != y {
                    pair_proj[x][y] = pat_dense
                        .iter()
                        .filter(|&&d| d == x || d == y)
                        .map(|&d| d == x)
                        .collect();
                }
            }
        }
        let mut hmap: HashMap<u32, usize> = HashMap::new();
        let mut host_vals = Vec::new();
        let mut host_dense = Vec::with_capacity(host.len());
        let mut host_occ: Vec<Vec<u32>> = Vec::new();
        for (p, &x) in host.symbols().iter().enumerate() {
            let id = *hmap.entry(x).or_insert_with(|| {
                host_vals.push(x);
                host_occ.push(Vec::new());
                host_vals.len() - 1
            });
            host_dense.push(id);
            host_occ[id].push(p as u32);
        }
        Matcher {
            pat,
            pat_dense,
            pat_vals,
            pat_mult,
            pat_suffix,
            pair_proj,
            host_dense,
            host_vals,
            host_occ,
            order_iso,
        }
    }

    fn host_syms(&self) -> usize {
        self.host_vals.len()
    }

    /// Necessary condition: the pattern's {x,y} projection must embed in the
    /// host's {h,g} projection (greedy two-pointer scan over occurrence lists).
    fn pair_fits(&self, x: usize, y: usize, h: usize, g: usize) -> bool {
        let tokens = &self.pair_proj[x][y];
        let ho = &self.host_occ[h];
        let go = &self.host_occ[g];
        let (mut i, mut j) = (0usize, 0usize);
        let mut pos = 0u32;
        for &t in tokens {
            if t {
                while i < ho.len() && ho[i] < pos {
                    i += 1;
                }
                if i == ho.len() {
                    return false;
                }
                pos = ho[i] + 1;
                i += 1;
            } else {
                while j < go.len() && go[j] < pos {
                    j += 1;
                }
                if j == go.len() {
                    return false;
                }
                pos = go[j] + 1;
                j += 1;
            }
        }
        true
    }

    fn order_ok(&self, assigned: &[(usize, usize)], x: usize, h: usize) -> bool {
        if !self.order_iso {
            return true;
        }
        let xv = self.pat_vals[x];
        let hv = self.host_vals[h];
        assigned.iter().all(|&(y, g)| {
            let yv = self.pat_vals[y];
            let gv = self.host_vals[g];
            (xv < yv) == (hv < gv)
        })
    }

    /// Greedy leftmost match of the full pattern under a complete symbol map;
    /// complete because earlier matches only leave more room.
    fn full_match(&self, map: &[usize]) -> Option<Vec<usize>> {
        let mut cursors = vec![0usize; self.host_syms()];
        let mut pos = 0u32;
        let mut positions = Vec::with_capacity(self.pat.len());
        for &d in &self.pat_dense {
            let h = map[d];
            let occ = &self.host_occ[h];
            let c = &mut cursors[h];
            while *c < occ.len() && occ[*c] < pos {
                *c += 1;
            }
            if *c == occ.len() {
                return None;
            }
            pos = occ[*c] + 1;
            positions.push(occ[*c] as usize);
            *c += 1;
        }
        Some(positions)
    }

    /// Containment decision: DFS over symbol assignments in first-appearance
    /// order, pruned by multiplicity and pairwise-projection compatibility.
    fn decide(&self) -> bool {
        let np = self.pat_vals.len();
        if self.pat.is_empty() {
            return true;
        }
        if np > self.host_syms() || self.pat.len() > self.host_dense.len() {
            return false;
        }
        let candidate_ok = |assigned: &[(usize, usize)], x: usize, h: usize| -> bool {
            self.host_occ[h].len() >= self.pat_mult[x]
                && !assigned.iter().any(|&(_, g)| g == h)
                && self.order_ok(assigned, x, h)
                && assigned
                    .iter()
                    .all(|&(y, g)| self.pair_fits(x, y, h, g))
        };
        fn rec(
            m: &Matcher<'_>,
            assigned: &mut Vec<(usize, usize)>,
            map: &mut [usize],
            candidate_ok: &dyn Fn(&[(usize, usize)], usize, usize) -> bool,
        ) -> bool {
            let x = assigned.len();
            if x == m.pat_vals.len() {
                return m.full_match(map).is_some();
            }
            for h in 0..m.host_syms() {
                if candidate_ok(assigned, x, h) {
                    assigned.push((x, h));
                    map[x] = h;
                    if rec(m, assigned, map, candidate_ok) {
                        return true;
                    }
                    assigned.pop();
                }
            }
            false
        }
        let work = self.host_dense.len();
        if work >= PARALLEL_THRESHOLD && np >= 2 {
            (0..self.host_syms()).into_par_iter().any(|h| {
                if !candidate_ok(&[], 0, h) {
                    return false;
                }
                let mut assigned = vec![(0usize, h)];
                let mut map = vec![usize::MAX; np];
                map[0] = h;
                rec(self, &mut assigned, &mut map, &candidate_ok)
            })
        } else {
            let mut assigned = Vec::new();
            let mut map = vec![usize::MAX; np];
            rec(self, &mut assigned, &mut map, &candidate_ok)
        }
    }

    /// Lexicographically least witness (in position order).  Positions for
    /// already-mapped symbols advance greedily; branching happens only at the
    /// first occurrence of each pattern symbol, scanning host positions in
    /// increasing order.
    fn witness(&self) -> Option<Embedding> {
        struct St {
            map: Vec<usize>,
            used: Vec<bool>,
            positions: Vec<usize>,
        }
        fn rec(m: &Matcher<'_>, t: usize, pos: u32, st: &mut St) -> bool {
            if t == m.pat.len() {
                return true;
            }
            let x = m.pat_dense[t];
            if st.map[x] != usize::MAX {
                let occ = &m.host_occ[st.map[x]];
                let k = occ.partition_point(|&p| p < pos);
                if k == occ.len() || occ.len() - k < m.pat_suffix[x][t] {
                    return false;
                }
                st.positions.push(occ[k] as usize);
                if rec(m, t + 1, occ[k] + 1, st) {
                    return true;
                }
                st.positions.pop();
                false
            } else {
                let mut tried: Vec<usize> = Vec::new();
                let assigned: Vec<(usize, usize)> = st
                    .map
                    .iter()
                    .enumerate()
                    .filter(|(_, &h)| h != usize::MAX)
                    .map(|(y, &h)| (y, h))
                    .collect();
                for q in (pos as usize)..m.host_dense.len() {
                    let h = m.host_dense[q];
                    if st.used[h] || tried.contains(&h) {
                        continue;
                    }
                    tried.push(h);
                    let rank = m.host_occ[h].partition_point(|&p| (p as usize) < q);
                    if m.host_occ[h].len() - rank < m.pat_suffix[x][t]
                        || !m.order_ok(&assigned, x, h)
                        || !assigned.iter().all(|&(y, g)| m.pair_fits(x, y, h, g))
                    {
                        continue;
                    }
                    st.map[x] = h;
                    st.used[h] = true;
                    st.positions.push(q);
                    if rec(m, t + 1, q as u32 + 1, st) {
                        return true;
                    }
                    st.positions.pop();
                    st.used[h] = false;
                    st.map[x] = usize::MAX;
                }
                false
            }
        }
        let mut st = St {
            map: vec![usize::MAX; self.pat_vals.len()],
            used: vec![false; self.host_syms()],
            positions: Vec::with_capacity(self.pat.len()),
        };
        if !rec(self, 0, 0, &mut st) {
            return None;
        }
        let symbol_map = self
            .pat_vals
            .iter()
            .enumerate()
            .map(|(x, &pv)| (pv, self.host_vals[st.map[x]]))
            .collect();
        Some(Embedding {
            symbol_map,
            positions: st.positions,
        })
    }
}

/// Number of maximal single-symbol blocks in the merged projection of two
/// disjoint, sorted occurrence lists.
fn merged_runs(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j) = (0usize, 0usize);
    let mut runs = 0usize;
    let mut last = 2u8;
    while i < a.len() || j < b.len() {
        let take_a = j == b.len() || (i < a.len() && a[i] < b[j]);
        let cur = u8::from(take_a);
        if cur != last {
            runs += 1;
            last = cur;
        }
        if take_a {
            i += 1;
        } else {
            j += 1;
        }
    }
    runs
}

/// True iff some pair of distinct host symbols alternates in at least
/// `threshold` runs (maximal blocks of the pair's merged projection).
///
/// A pair reaching `threshold` runs must interleave, so each member occurs
/// inside the other's span.  The sweep repeatedly checks and removes symbols
/// whose span in the surviving sequence fits a window, growing the window
/// only when no symbol qualifies; every qualifying pair is examined when its
/// first member is removed.  On hierarchically built sequences almost all
/// spans collapse quickly, giving near-linear behavior.
pub fn has_pair_runs(host: &Sequence, threshold: usize) -> bool {
    if threshold <= 2 {
        return host.alphabet_size() >= 2;
    }
    let occ = host.occurrence_map();
    // A symbol in a t-run pair owns at least ⌊t/2⌋ of the runs.
    let min_mult = threshold / 2;
    let mut cur: Vec<u32> = host
        .symbols()
        .iter()
        .copied()
        .filter(|s| occ[s].len() >= min_mult)
        .collect();
    let runs_reach = |x: u32, y: u32| merged_runs(&occ[&x], &occ[&y]) >= threshold;
    const BRUTE_BOUND: usize = 1500;
    let mut window = 64usize;
    loop {
        let mut first: HashMap<u32, usize> = HashMap::new();
        let mut last: HashMap<u32, usize> = HashMap::new();
        for (p, &x) in cur.iter().enumerate() {
            first.entry(x).or_insert(p);
            last.insert(x, p);
        }
        if first.len() < 2 {
            return false;
        }
        if first.len() <= BRUTE_BOUND {
            let alphabet: Vec<u32> = first.keys().copied().collect();
            for (i, &x) in alphabet.iter().enumerate() {
                for &y in &alphabet[i + 1..] {
                    if runs_reach(x, y) {
                        return true;
                    }
                }
            }
            return false;
        }
        let mut drop: BTreeSet<u32> = BTreeSet::new();
        for (&y, &f) in &first {
            let l = last[&y];
            if l - f + 1 > window {
                continue;
            }
            let mut seen: BTreeSet<u32> = BTreeSet::new();
            for &x in &cur[f..=l] {
                if x != y && seen.insert(x) && runs_reach(x, y) {
                    return true;
                }
            }
            drop.insert(y);
        }
        if drop.is_empty() {
            window = window.saturating_mul(2);
        } else {
            cur.retain(|s| !drop.contains(s));
            // Survivors shrink once their neighbors vanish; restart small so
            // late removals scan narrow windows again.
            window = 64;
        }
    }
}

/// Maximum merged run count over distinct pattern symbol pairs; None when the
/// pattern has fewer than two symbols.
fn max_pattern_pair_runs(pattern: &Sequence) -> Option<usize> {
    let occ = pattern.occurrence_map();
    let syms: Vec<u32> = pattern.alphabet().into_iter().collect();
    let mut best = None;
    for (i, &x) in syms.iter().enumerate() {
        for &y in &syms[i + 1..] {
            let r = merged_runs(&occ[&x], &occ[&y]);
            best = Some(best.map_or(r, |b: usize| b.max(r)));
        }
    }
    best
}

/// Host sizes above which embedding first tries the pair-alternation
/// necessary condition before the backtracking search.
const PAIR_FILTER_THRESHOLD: usize = 10_000;

/// Anchor-edge count beyond which the anchored decision gives up and the
/// backtracking search takes over.
const ANCHOR_EDGE_CAP: usize = 2_000;

/// Survivor-alphabet bound for the anchored all-pairs stage; larger residues
/// are handed back to the backtracking search.
const ANCHOR_SURVIVOR_CAP: usize = 200_000;

/// Largest sweep window before the anchored decision switches from span
/// scanning to the all-pairs stage.
const ANCHOR_WINDOW_MAX: usize = 16_384;

/// Outcome of the anchored pair-projection decision.
enum AnchorOutcome {
    Embeds,
    Avoids,
    Bailed,
}

/// Greedy match of a two-role token word (true = first role) against two
/// sorted occurrence lists, run by run.  Within a run no token of the other
/// role intervenes, so taking consecutive occurrences is optimal.
fn realizes_word(rle: &[(bool, u32)], ho: &[u32], go: &[u32]) -> bool {
    let (mut i, mut j) = (0usize, 0usize);
    let mut pos = 0u32;
    for &(first, len) in rle {
        let (occ, p) = if first { (ho, &mut i) } else { (go, &mut j) };
        let len = len as usize;
        while *p < occ.len() && occ[*p] < pos {
            *p += 1;
        }
        if *p + len > occ.len() {
            return false;
        }
        pos = occ[*p + len - 1] + 1;
        *p += len;
    }
    true
}

fn word_rle(word: &[bool]) -> Vec<(bool, u32)> {
    let mut rle: Vec<(bool, u32)> = Vec::new();
    for &t in word {
        match rle.last_mut() {
            Some((r, n)) if *r == t => *n += 1,
            _ => rle.push((t, 1)),
        }
    }
    rle
}

/// Index thresholds behind the O(1) pair pregate for one role orientation.
///
/// For a symbol playing the role with `total` word tokens: any realization
/// leaves `total - before_first_other` own occurrences after the partner's
/// first occurrence, and places `before_last_other` own occurrences before
/// the partner's last occurrence.
struct GateSpec {
    total: usize,
    after_other_first: usize,
    before_other_last: usize,
}

impl GateSpec {
    fn new(word: &[bool], first_role: bool) -> Self {
        let total = word.iter().filter(|&&t| t == first_role).count();
        let first_other = word.iter().position(|&t| t != first_role).unwrap();
        let before_first_other = word[..first_other]
            .iter()
            .filter(|&&t| t == first_role)
            .count();
        let last_other = word.iter().rposition(|&t| t != first_role).unwrap();
        let before_last_other = word[..last_other]
            .iter()
            .filter(|&&t| t == first_role)
            .count();
        GateSpec {
            total,
            after_other_first: total - before_first_other,
            before_other_last: before_last_other,
        }
    }

    /// [first, mid, tail, last] scalars for one occurrence list, or None when
    /// the multiplicity cannot cover the role at all.
    fn scalars(&self, occ: &[u32]) -> Option<[u32; 4]> {
        let n = occ.len();
        if n < self.total {
            return None;
        }
        Some([
            occ[0],
            occ[n - self.after_other_first],
            occ[self.before_other_last - 1],
            occ[n - 1],
        ])
    }
}

/// Necessary O(1) conditions for (h as first role, g as second role):
/// g keeps enough occurrences after h's first, h keeps enough after g's
/// first, and each side's early quota precedes the other's last occurrence.
#[inline]
fn gate_pass(h: &[u32; 4], g: &[u32; 4]) -> bool {
    g[1] > h[0] && h[1] > g[0] && h[2] < g[3] && g[2] < h[3]
}

/// Exact containment decision for large hosts, anchored on the pattern's
/// most alternating symbol-pair projection.
///
/// Every embedding realizes that projection word on some ordered host pair,
/// so enumerating all realizing pairs and extending each to a full symbol
/// assignment (checking the remaining pair projections, then a full greedy
/// match) decides containment.  Pairs are enumerated by the span sweep of
/// `has_pair_runs` — sound because a word with ≥ 4 runs forces each member
/// inside the other's span — with an all-pairs pass over wide-span
/// survivors, pregated by per-symbol index thresholds.
fn anchor_decide(pattern: &Sequence, host: &Sequence) -> AnchorOutcome {
    let pat = pattern.symbols();
    let mut pmap: HashMap<u32, usize> = HashMap::new();
    let mut pat_dense = Vec::with_capacity(pat.len());
    for &x in pat {
        let next = pmap.len();
        let id = *pmap.entry(x).or_insert(next);
        pat_dense.push(id);
    }
    let np = pmap.len();
    if np < 2 {
        return AnchorOutcome::Bailed;
    }
    let mut pat_mult = vec![0usize; np];
    for &d in &pat_dense {
        pat_mult[d] += 1;
    }
    let pair_word = |x: usize, y: usize| -> Vec<bool> {
        pat_dense
            .iter()
            .filter(|&&d| d == x || d == y)
            .map(|&d| d == x)
            .collect()
    };
    // Anchor on the pair projection with the most runs (longest word breaks
    // ties): the rarer the word, the fewer candidate pairs to extend.
    let mut anchor: Option<(usize, usize, usize, usize)> = None;
    for x in 0..np {
        for y in x + 1..np {
            let w = pair_word(x, y);
            let runs = word_rle(&w).len();
            let key = (runs, w.len());
            if anchor.map_or(true, |(_, _, r, l)| key > (r, l)) {
                anchor = Some((x, y, runs, w.len()));
            }
        }
    }
    let (ax, ay, runs, _) = anchor.unwrap();
    if runs < 4 {
        // Without an a·b·a and a b·a·b the span-sweep completeness argument
        // fails; such low-alternation patterns stay with the backtracker.
        return AnchorOutcome::Bailed;
    }
    let word = pair_word(ax, ay);
    let rle = word_rle(&word);
    let gate_x = GateSpec::new(&word, true);
    let gate_y = GateSpec::new(&word, false);

    let mut hmap: HashMap<u32, usize> = HashMap::new();
    let mut host_vals: Vec<u32> = Vec::new();
    let mut host_occ: Vec<Vec<u32>> = Vec::new();
    let mut host_dense = Vec::with_capacity(host.len());
    for (p, &x) in host.symbols().iter().enumerate() {
        let id = *hmap.entry(x).or_insert_with(|| {
            host_vals.push(x);
            host_occ.push(Vec::new());
            host_vals.len() - 1
        });
        host_dense.push(id as u32);
        host_occ[id].push(p as u32);
    }
    let nh = host_vals.len();
    let min_mult = gate_x.total.min(gate_y.total);

    let mut edges: Vec<(u32, u32)> = Vec::new();
    let push_edge = |edges: &mut Vec<(u32, u32)>, h: u32, g: u32| -> bool {
        edges.push((h, g));
        edges.len() <= ANCHOR_EDGE_CAP
    };

    // Span sweep: repeatedly examine and remove symbols narrow in the
    // surviving sequence, recording every realizing pair they belong to.
    let mut cur: Vec<u32> = host_dense
        .iter()
        .copied()
        .filter(|&id| host_occ[id as usize].len() >= min_mult)
        .collect();
    let mut stamp: Vec<u32> = vec![u32::MAX; nh];
    let mut alive: Vec<bool> = vec![false; nh];
    for &id in &cur {
        alive[id as usize] = true;
    }
    let mut window = 64usize;
    let survivors: Vec<u32> = loop {
        let mut first: Vec<u32> = vec![u32::MAX; nh];
        let mut last: Vec<u32> = vec![0u32; nh];
        for (p, &id) in cur.iter().enumerate() {
            let id = id as usize;
            if first[id] == u32::MAX {
                first[id] = p as u32;
            }
            last[id] = p as u32;
        }
        let present: Vec<u32> = (0..nh as u32)
            .filter(|&id| alive[id as usize] && first[id as usize] != u32::MAX)
            .collect();
        if present.len() <= 1500 || window > ANCHOR_WINDOW_MAX {
            break present;
        }
        let mut dropped = false;
        for &y in &present {
            let (f, l) = (first[y as usize] as usize, last[y as usize] as usize);
            if l - f + 1 > window {
                continue;
            }
            let yo = &host_occ[y as usize];
            for &x in &cur[f..=l] {
                if x == y || stamp[x as usize] == y {
                    continue;
                }
                stamp[x as usize] = y;
                let xo = &host_occ[x as usize];
                if realizes_word(&rle, xo, yo) && !push_edge(&mut edges, x, y) {
                    return AnchorOutcome::Bailed;
                }
                if realizes_word(&rle, yo, xo) && !push_edge(&mut edges, y, x) {
                    return AnchorOutcome::Bailed;
                }
            }
            alive[y as usize] = false;
            dropped = true;
        }
        if dropped {
            cur.retain(|&id| alive[id as usize]);
            // Survivors shrink once their neighbors vanish; restart small so
            // late removals scan narrow windows again.
            window = 64;
        } else {
            window = window.saturating_mul(2);
        }
    };

    if survivors.len() > ANCHOR_SURVIVOR_CAP {
        return AnchorOutcome::Bailed;
    }
    // All-pairs stage over wide-span survivors.
    let xg: Vec<Option<[u32; 4]>> = survivors
        .iter()
        .map(|&id| gate_x.scalars(&host_occ[id as usize]))
        .collect();
    let yg: Vec<Option<[u32; 4]>> = survivors
        .iter()
        .map(|&id| gate_y.scalars(&host_occ[id as usize]))
        .collect();
    for i in 0..survivors.len() {
        let io = &host_occ[survivors[i] as usize];
        for j in i + 1..survivors.len() {
            let jo = &host_occ[survivors[j] as usize];
            if let (Some(hx), Some(gy)) = (&xg[i], &yg[j]) {
                if gate_pass(hx, gy)
                    && realizes_word(&rle, io, jo)
                    && !push_edge(&mut edges, survivors[i], survivors[j])
                {
                    return AnchorOutcome::Bailed;
                }
            }
            if let (Some(hx), Some(gy)) = (&xg[j], &yg[i]) {
                if gate_pass(hx, gy)
                    && realizes_word(&rle, jo, io)
                    && !push_edge(&mut edges, survivors[j], survivors[i])
                {
                    return AnchorOutcome::Bailed;
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    if edges.is_empty() {
        return AnchorOutcome::Avoids;
    }

    // Extend each anchor edge to a full assignment: remaining roles in
    // decreasing multiplicity, candidates screened by every pair projection
    // against the symbols already placed, then an exact greedy match.
    let mut rest: Vec<usize> = (0..np).filter(|&r| r != ax && r != ay).collect();
    rest.sort_by_key(|&r| std::cmp::Reverse(pat_mult[r]));
    let rest_words: Vec<Vec<Vec<(bool, u32)>>> = (0..np)
        .map(|r| {
            (0..np)
                .map(|q| {
                    if r == q {
                        Vec::new()
                    } else {
                        word_rle(&pair_word(r, q))
                    }
                })
                .collect()
        })
        .collect();
    let tuple_matches = |map: &[usize]| -> bool {
        let mut cursors = vec![0usize; np];
        let mut pos = 0u32;
        for &d in &pat_dense {
            let occ = &host_occ[map[d]];
            let c = &mut cursors[d];
            while *c < occ.len() && occ[*c] < pos {
                *c += 1;
            }
            if *c == occ.len() {
                return false;
            }
            pos = occ[*c] + 1;
            *c += 1;
        }
        true
    };
    fn join(
        rest: &[usize],
        idx: usize,
        map: &mut [usize],
        placed: &mut Vec<usize>,
        pat_mult: &[usize],
        host_occ: &[Vec<u32>],
        rest_words: &[Vec<Vec<(bool, u32)>>],
        tuple_matches: &dyn Fn(&[usize]) -> bool,
    ) -> bool {
        if idx == rest.len() {
            return tuple_matches(map);
        }
        let r = rest[idx];
        for h in 0..host_occ.len() {
            if host_occ[h].len() < pat_mult[r] || map.contains(&h) {
                continue;
            }
            let ok = placed.iter().all(|&q| {
                realizes_word(&rest_words[r][q], &host_occ[h], &host_occ[map[q]])
            });
            if !ok {
                continue;
            }
            map[r] = h;
            placed.push(r);
            if join(
                rest,
                idx + 1,
                map,
                placed,
                pat_mult,
                host_occ,
                rest_words,
                tuple_matches,
            ) {
                return true;
            }
            placed.pop();
            map[r] = usize::MAX;
        }
        false
    }
    for &(h, g) in &edges {
        let mut map = vec![usize::MAX; np];
        map[ax] = h as usize;
        map[ay] = g as usize;
        let mut placed = vec![ax, ay];
        if join(
            &rest,
            0,
            &mut map,
            &mut placed,
            &pat_mult,
            &host_occ,
            &rest_words,
            &tuple_matches,
        ) {
            return AnchorOutcome::Embeds;
        }
    }
    AnchorOutcome::Avoids
}

fn embeds_impl(pattern: &Sequence, host: &Sequence, order_iso: bool) -> Option<Embedding> {
    if pattern.is_empty() {
        return Some(Embedding {
            symbol_map: BTreeMap::new(),
            positions: Vec::new(),
        });
    }
    if host.len() >= PAIR_FILTER_THRESHOLD {
        if !order_iso {
            match anchor_decide(pattern, host) {
                AnchorOutcome::Avoids => return None,
                AnchorOutcome::Embeds => {
                    let m = Matcher::new(pattern, host, order_iso);
                    let w = m.witness();
                    debug_assert!(w.is_some(), "anchored decision and witness search disagree");
                    return w;
                }
                AnchorOutcome::Bailed => {}
            }
        }
        // Any embedding maps a pattern pair onto a host pair whose merged
        // projection contains the pattern pair's, so run counts cannot drop.
        if let Some(required) = max_pattern_pair_runs(pattern) {
            if !has_pair_runs(host, required) {
                return None;
            }
        }
    }
    let m = Matcher::new(pattern, host, order_iso);
    if !m.decide() {
        return None;
    }
    let w = m.witness();
    debug_assert!(w.is_some(), "decision and witness search disagree");
    w
}

/// Subsequence containment up to isomorphism (the relation σ ≺ S), returning
/// the lexicographically least witness in position order.
pub fn embeds(pattern: &Sequence, host: &Sequence) -> Option<Embedding> {
    embeds_impl(pattern, host, false)
}

/// As `embeds` but the symbol map must preserve the relative order of ids.
pub fn embeds_order_iso(pattern: &Sequence, host: &Sequence) -> Option<Embedding> {
    embeds_impl(pattern, host, true)
}

/// Maximum f such that project(host, A) contains f catenated permutations of
/// A, by greedy rounds (shortest prefix containing every symbol of A once).
pub fn formation_count(host: &Sequence, a: &BTreeSet<u32>) -> usize {
    if a.is_empty() {
        return 0;
    }
    let mut rounds = 0usize;
    let mut seen: BTreeSet<u32> = BTreeSet::new();
    for &x in host.symbols() {
        if !a.contains(&x) {
            continue;
        }
        seen.insert(x);
        if seen.len() == a.len() {
            rounds += 1;
            seen.clear();
        }
    }
    rounds
}

/// True iff project(host, A) splits into `parts` consecutive segments whose
/// per-symbol quotas are (1, 2, …, 2, 1); greedy leftmost round boundaries.
pub fn dbl_formation_reach(host: &Sequence, a: &BTreeSet<u32>, parts: usize) -> bool {
    assert!(parts >= 2, "dbl_formation_reach needs parts ≥ 2");
    if a.is_empty() {
        return false;
    }
    let mut round = 0usize;
    let mut counts: HashMap<u32, usize> = HashMap::new();
    let mut filled = 0usize;
    let quota = |round: usize| if round == 0 || round + 1 == parts { 1 } else { 2 };
    for &x in host.symbols() {
        if !a.contains(&x) {
            continue;
        }
        let q = quota(round);
        let c = counts.entry(x).or_insert(0);
        if *c < q {
            *c += 1;
            if *c == q {
                filled += 1;
            }
        }
        if filled == a.len() {
            round += 1;
            if round == parts {
                return true;
            }
            counts.clear();
            filled = 0;
        }
    }
    false
}

/// (Longest alternation abab… over any symbol pair) − 2, floored at 0.  The
/// alternation length of a pair equals the number of runs in its projection.
pub fn ds_order(host: &Sequence) -> usize {
    let mut occ: HashMap<u32, Vec<u32>> = HashMap::new();
    for (p, &x) in host.symbols().iter().enumerate() {
        occ.entry(x).or_default().push(p as u32);
    }
    let syms: Vec<u32> = {
        let mut v: Vec<u32> = occ.keys().copied().collect();
        v.sort_unstable();
        v
    };
    let mut best = 0usize;
    for (ai, &a) in syms.iter().enumerate() {
        for &b in &syms[ai + 1..] {
            let (oa, ob) = (&occ[&a], &occ[&b]);
            if oa.len() + ob.len() <= best {
                continue;
            }
            let (mut i, mut j) = (0usize, 0usize);
            let mut runs = 0usize;
            let mut last = 2u8;
            while i < oa.len() || j < ob.len() {
                let take_a = j == ob.len() || (i < oa.len() && oa[i] < ob[j]);
                let cur = u8::from(take_a);
                if cur != last {
                    runs += 1;
                    last = cur;
                }
                if take_a {
                    i += 1;
                } else {
                    j += 1;
                }
            }
            best = best.max(runs);
        }
    }
    best.saturating_sub(2)
}

fn subsets_of_size(items: &[u32], k: usize) -> Vec<BTreeSet<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(items: &[u32], k: usize, start: usize, cur: &mut Vec<u32>, out: &mut Vec<BTreeSet<u32>>) {
        if cur.len() == k {
            out.push(cur.iter().copied().collect());
            return;
        }
        for idx in start..items.len() {
            if items.len() - idx < k - cur.len() {
                break;
            }
            cur.push(items[idx]);
            rec(items, k, idx + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut cur, &mut out);
    out
}

/// True iff no member of the family embeds in the host.  perm and dblperm
/// kinds delegate to the specialized formation checkers over all r-subsets of
/// the host alphabet; other kinds enumerate members.
pub fn avoids_family(host: &Sequence, family: &PatternFamily) -> Result<bool, CheckError> {
    match family.kind() {
        FamilyKind::Singleton | FamilyKind::Explicit | FamilyKind::BinPerm => {
            for member in family.members(DEFAULT_ENUM_CAP)? {
                if embeds(&member, host).is_some() {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        FamilyKind::Perm | FamilyKind::DblPerm => {
            let alphabet: Vec<u32> = host.alphabet().into_iter().collect();
            if alphabet.len() < family.r() {
                return Ok(true);
            }
            if alphabet.len() > SUBSET_BOUND {
                return Err(CheckError::AlphabetTooLarge {
                    alphabet: alphabet.len(),
                    bound: SUBSET_BOUND,
                });
            }
            let hit = |a: &BTreeSet<u32>| match family.kind() {
                FamilyKind::Perm => formation_count(host, a) >= family.parts(),
                _ => {
                    if family.parts() >= 2 {
                        dbl_formation_reach(host, a, family.parts())
                    } else {
                        formation_count(host, a) >= family.parts()
                    }
                }
            };
            Ok(!subsets_of_size(&alphabet, family.r()).iter().any(|a| hit(a)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::{make_family, make_pattern, FamilyKind, PatternKind};
    use crate::seqcore::project;

    fn seq(v: &[u32]) -> Sequence {
        Sequence::new(v.to_vec())
    }

    #[test]
    fn embeds_finds_least_witness() {
        let pat = make_pattern(PatternKind::Alt, 4).unwrap();
        let host = seq(&[1, 2, 3, 1, 3, 2, 3]);
        let w = embeds(&pat, &host).unwrap();
        assert_eq!(w.symbol_map[&1], 1);
        assert_eq!(w.symbol_map[&2], 2);
        assert_eq!(w.positions, vec![0, 1, 3, 5]);
    }

    #[test]
    fn embeds_absent() {
        let pat = make_pattern(PatternKind::Alt, 5).unwrap();
        let host = seq(&[1, 2, 3, 1, 3, 2, 3]);
        assert!(embeds(&pat, &host).is_none());
    }

    #[test]
    fn embeds_identity() {
        let s = seq(&[1, 2, 1, 3, 2]);
        let w = embeds(&s, &s).unwrap();
        assert_eq!(w.positions, vec![0, 1, 2, 3, 4]);
        for (k, v) in &w.symbol_map {
            assert_eq!(k, v);
        }
    }

    #[test]
    fn embeds_validates_witness() {
        let pat = seq(&[1, 2, 2, 1]);
        let host = seq(&[3, 1, 1, 2, 2, 1, 3, 3]);
        let w = embeds(&pat, &host).unwrap();
        assert_eq!(w.positions.len(), pat.len());
        for (t, &p) in w.positions.iter().enumerate() {
            assert_eq!(host.symbols()[p], w.symbol_map[&pat.symbols()[t]]);
        }
        assert!(w.positions.windows(2).all(|ab| ab[0] < ab[1]));
    }

    #[test]
    fn order_iso_footnote_cases() {
        let host = seq(&[5, 6, 7, 8, 5, 6, 7, 8]);
        assert!(embeds_order_iso(&seq(&[2, 1, 2, 1]), &host).is_none());
        let w = embeds_order_iso(&seq(&[1, 2, 1, 2]), &host).unwrap();
        let a = w.symbol_map[&1];
        let b = w.symbol_map[&2];
        assert!(a < b);
        assert!(embeds(&seq(&[2, 1, 2, 1]), &host).is_some());
    }

    #[test]
    fn order_iso_identity_and_implication() {
        let p = seq(&[1, 2, 1]);
        let h = seq(&[3, 1, 3, 1, 3]);
        let w = embeds_order_iso(&p, &h);
        assert!(w.is_some());
        assert!(embeds(&p, &h).is_some());
    }

    #[test]
    fn formation_counting() {
        assert_eq!(formation_count(&seq(&[1, 2, 1, 2]), &[1, 2].into_iter().collect()), 2);
        assert_eq!(formation_count(&seq(&[1, 2, 2, 1]), &[1, 2].into_iter().collect()), 2);
        assert_eq!(formation_count(&seq(&[1, 2, 1, 1]), &[1, 2].into_iter().collect()), 1);
        assert_eq!(formation_count(&Sequence::empty(), &[1].into_iter().collect()), 0);
    }

    #[test]
    fn dbl_formation() {
        let a: BTreeSet<u32> = [1, 2].into_iter().collect();
        assert!(dbl_formation_reach(&seq(&[1, 2, 1, 1, 2, 2, 2, 1]), &a, 3));
        assert!(dbl_formation_reach(&seq(&[1, 2, 2, 1]), &a, 2));
        assert!(!dbl_formation_reach(&seq(&[1, 2, 1, 2]), &a, 3));
    }

    #[test]
    fn ds_order_values() {
        assert_eq!(ds_order(&seq(&[1, 2, 1, 2, 1])), 3);
        assert_eq!(ds_order(&seq(&[1, 2, 3, 1, 3, 2, 3])), 2);
        assert_eq!(ds_order(&seq(&[1, 2])), 0);
        assert_eq!(ds_order(&Sequence::empty()), 0);
    }

    #[test]
    fn ds_order_projection_bound() {
        let s = seq(&[1, 2, 3, 1, 2, 1, 3, 2]);
        let d = ds_order(&s);
        let alpha: Vec<u32> = s.alphabet().into_iter().collect();
        for (i, &a) in alpha.iter().enumerate() {
            for &b in &alpha[i + 1..] {
                let p = project(&s, &[a, b].into_iter().collect());
                assert!(ds_order(&p) <= d);
            }
        }
    }

    #[test]
    fn family_avoidance() {
        let perm23 = make_family(FamilyKind::Perm, 2, 3).unwrap();
        assert!(avoids_family(&seq(&[1, 2, 2, 1]), &perm23).unwrap());
        assert!(!avoids_family(&seq(&[1, 2, 1, 2, 1, 2]), &perm23).unwrap());
        assert!(avoids_family(&Sequence::empty(), &perm23).unwrap());
    }

    #[test]
    fn perm_avoidance_implies_ds_order() {
        for s_ord in 1..=3usize {
            let fam = make_family(FamilyKind::Perm, 2, s_ord + 1).unwrap();
            let host = seq(&[1, 2, 3, 2, 1, 2, 3]);
            if avoids_family(&host, &fam).unwrap() {
                assert!(ds_order(&host) <= s_ord);
            }
        }
    }

    #[test]
    fn binperm_avoidance_enumerates() {
        let bin = make_family(FamilyKind::BinPerm, 2, 3).unwrap();
        assert!(!avoids_family(&seq(&[1, 2, 1, 2, 1, 2]), &bin).unwrap());
        assert!(avoids_family(&seq(&[1, 2, 2, 1]), &bin).unwrap());
    }

    #[test]
    fn subset_bound_signalled() {
        let fam = make_family(FamilyKind::Perm, 2, 3).unwrap();
        let big: Vec<u32> = (1..=21).chain(1..=21).collect();
        match avoids_family(&Sequence::new(big), &fam) {
            Err(CheckError::AlphabetTooLarge { alphabet: 21, bound }) => {
                assert_eq!(bound, SUBSET_BOUND)
            }
            other => panic!("expected alphabet bound error, got {other:?}"),
        }
    }

    #[test]
    fn embeds_monotone_spot_checks() {
        let p = seq(&[1, 2, 1]);
        let h = seq(&[3, 4, 3, 4]);
        let h2 = seq(&[5, 3, 4, 3, 5, 4, 5]);
        assert!(embeds(&p, &h).is_some());
        assert!(embeds(&h, &h2).is_some());
        assert!(embeds(&p, &h2).is_some());
    }
}
