//! Core sequence and blocked-sequence types: canonicalization, sparsity,
//! projection, filtering, greedy parsing, and interval contraction.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::containment;
use crate::patterns::PatternFamily;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeqError {
    #[error("invalid token `{0}` in sequence text")]
    BadToken(String),
    #[error("duplicate symbol {0} within a block")]
    DuplicateInBlock(u32),
    #[error("unbalanced block delimiters in `{0}`")]
    Unbalanced(String),
    #[error("interval {start}..{end} out of range for {blocks} blocks")]
    BadInterval {
        start: usize,
        end: usize,
        blocks: usize,
    },
    #[error("partition does not cover blocks contiguously")]
    BadPartition,
}

/// A finite word over a non-negative integer alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Sequence {
    symbols: Vec<u32>,
}

impl Sequence {
    pub fn new(symbols: Vec<u32>) -> Self {
        Sequence { symbols }
    }

    pub fn empty() -> Self {
        Sequence::default()
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    /// |σ|: total number of occurrences.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// ‖σ‖: number of distinct symbols.
    pub fn alphabet_size(&self) -> usize {
        self.symbols.iter().collect::<BTreeSet<_>>().len()
    }

    /// Σ(σ) as a sorted set.
    pub fn alphabet(&self) -> BTreeSet<u32> {
        self.symbols.iter().copied().collect()
    }

    /// Distinct symbols in order of first appearance.
    pub fn alphabet_by_first_use(&self) -> Vec<u32> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &x in &self.symbols {
            if seen.insert(x) {
                out.push(x);
            }
        }
        out
    }

    pub fn multiplicity(&self, sym: u32) -> usize {
        self.symbols.iter().filter(|&&x| x == sym).count()
    }

    /// Occurrence positions of every symbol, in increasing order.
    pub fn occurrence_map(&self) -> HashMap<u32, Vec<usize>> {
        let mut map: HashMap<u32, Vec<usize>> = HashMap::new();
        for (p, &x) in self.symbols.iter().enumerate() {
            map.entry(x).or_default().push(p);
        }
        map
    }

    pub fn is_canonical(&self) -> bool {
        let mut next = 1u32;
        let mut seen = BTreeSet::new();
        for &x in &self.symbols {
            if seen.insert(x) {
                if x != next {
                    return false;
                }
                next += 1;
            }
        }
        true
    }
}

/// Relabels symbols to 1..alphabet_size in order of first appearance.
pub fn canonical_form(s: &Sequence) -> Sequence {
    let mut map = HashMap::new();
    let mut next = 1u32;
    let mut out = Vec::with_capacity(s.len());
    for &x in s.symbols() {
        let id = *map.entry(x).or_insert_with(|| {
            let id = next;
            next += 1;
            id
        });
        out.push(id);
    }
    Sequence::new(out)
}

/// True iff equal symbols are always ≥ k positions apart.
pub fn is_k_sparse(s: &Sequence, k: usize) -> bool {
    assert!(k >= 1, "sparsity parameter must be ≥ 1");
    let w = s.symbols();
    for i in 0..w.len() {
        for j in (i + 1)..(i + k).min(w.len()) {
            if w[i] == w[j] {
                return false;
            }
        }
    }
    true
}

/// Greedy left-to-right sparsification: drop an occurrence iff it equals one
/// of the k−1 previously retained symbols.
pub fn make_k_sparse(s: &Sequence, k: usize) -> Sequence {
    assert!(k >= 1, "sparsity parameter must be ≥ 1");
    let mut kept: Vec<u32> = Vec::with_capacity(s.len());
    for &x in s.symbols() {
        let lo = kept.len().saturating_sub(k - 1);
        if !kept[lo..].contains(&x) {
            kept.push(x);
        }
    }
    Sequence::new(kept)
}

/// Keeps exactly the occurrences whose symbol lies in `keep`.
pub fn project(s: &Sequence, keep: &BTreeSet<u32>) -> Sequence {
    Sequence::new(
        s.symbols()
            .iter()
            .copied()
            .filter(|x| keep.contains(x))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterPolicy {
    /// Drop the first d occurrences of each symbol.
    DropFirst(usize),
    /// Drop the last d occurrences of each symbol.
    DropLast(usize),
    /// Retain occurrences #1, #(k+1), #(2k+1), … of each symbol.
    KeepEvery(usize),
}

pub fn filter_occurrences(s: &Sequence, policy: FilterPolicy) -> Sequence {
    if let FilterPolicy::KeepEvery(k) = policy {
        assert!(k >= 1, "keep_every stride must be ≥ 1");
    }
    let counts: HashMap<u32, usize> = {
        let mut m = HashMap::new();
        for &x in s.symbols() {
            *m.entry(x).or_insert(0) += 1;
        }
        m
    };
    let mut seen: HashMap<u32, usize> = HashMap::new();
    let mut out = Vec::new();
    for &x in s.symbols() {
        let idx = *seen
            .entry(x)
            .and_modify(|c| *c += 1)
            .or_insert(0);
        let total = counts[&x];
        let keep = match policy {
            FilterPolicy::DropFirst(d) => idx >= d,
            FilterPolicy::DropLast(d) => idx + d < total,
            FilterPolicy::KeepEvery(k) => idx % k == 0,
        };
        if keep {
            out.push(x);
        }
    }
    Sequence::new(out)
}

/// Greedily parses `s` into maximal family-avoiding intervals.  Each entry is
/// an interval plus the separator symbol that broke it (none for the final
/// interval).  Concatenating intervals and separators reconstructs `s`.
pub fn greedy_parse(
    s: &Sequence,
    family: &PatternFamily,
    max_len: Option<usize>,
) -> Result<Vec<(Sequence, Option<u32>)>, containment::CheckError> {
    let mut out = Vec::new();
    let mut cur: Vec<u32> = Vec::new();
    for &x in s.symbols() {
        let over = max_len.is_some_and(|m| cur.len() >= m);
        let breaks = if over {
            true
        } else {
            let mut trial = cur.clone();
            trial.push(x);
            !containment::avoids_family(&Sequence::new(trial), family)?
        };
        if breaks {
            out.push((Sequence::new(std::mem::take(&mut cur)), Some(x)));
        } else {
            cur.push(x);
        }
    }
    if !cur.is_empty() {
        out.push((Sequence::new(cur), None));
    }
    Ok(out)
}

/// A block: distinct symbols, flagged live or dead.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Block {
    pub symbols: Vec<u32>,
    pub live: bool,
}

impl Block {
    pub fn live(symbols: Vec<u32>) -> Result<Self, SeqError> {
        Block::checked(symbols, true)
    }

    pub fn dead(symbols: Vec<u32>) -> Result<Self, SeqError> {
        Block::checked(symbols, false)
    }

    fn checked(symbols: Vec<u32>, live: bool) -> Result<Self, SeqError> {
        let mut seen = BTreeSet::new();
        for &x in &symbols {
            if !seen.insert(x) {
                return Err(SeqError::DuplicateInBlock(x));
            }
        }
        Ok(Block { symbols, live })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// A sequence partitioned into live/dead blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BlockedSequence {
    blocks: Vec<Block>,
}

impl BlockedSequence {
    pub fn new(blocks: Vec<Block>) -> Self {
        BlockedSequence { blocks }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// ⟦σ⟧: number of blocks.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn live_block_count(&self) -> usize {
        self.blocks.iter().filter(|b| b.live).count()
    }

    pub fn flatten(&self) -> Sequence {
        Sequence::new(
            self.blocks
                .iter()
                .flat_map(|b| b.symbols.iter().copied())
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(Block::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn alphabet_size(&self) -> usize {
        self.flatten().alphabet_size()
    }

    /// Relabels symbols to canonical ids by first appearance in flattened order.
    pub fn canonical_form(&self) -> BlockedSequence {
        let mut map = HashMap::new();
        let mut next = 1u32;
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block {
                symbols: b
                    .symbols
                    .iter()
                    .map(|&x| {
                        *map.entry(x).or_insert_with(|| {
                            let id = next;
                            next += 1;
                            id
                        })
                    })
                    .collect(),
                live: b.live,
            })
            .collect();
        BlockedSequence { blocks }
    }
}

/// An inclusive range of block indices (0-based internally).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize, block_count: usize) -> Result<Self, SeqError> {
        if start > end || end >= block_count {
            return Err(SeqError::BadInterval {
                start,
                end,
                blocks: block_count,
            });
        }
        Ok(Interval { start, end })
    }

    pub fn width(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn block_range(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

/// Checks that a partition covers all blocks contiguously, in order.
pub fn validate_partition(partition: &[Interval], block_count: usize) -> Result<(), SeqError> {
    let mut next = 0usize;
    for iv in partition {
        if iv.start != next || iv.end >= block_count {
            return Err(SeqError::BadPartition);
        }
        next = iv.end + 1;
    }
    if next != block_count {
        return Err(SeqError::BadPartition);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContractOrder {
    /// Order symbols of each interval by first occurrence (the default).
    #[default]
    FirstOccurrence,
    /// Order by second occurrence within the interval; symbols occurring once
    /// fall back to their only occurrence.
    SecondOccurrence,
}

/// Contracts each interval of the partition to a single (live) block holding
/// the interval's alphabet in the requested order.
pub fn contract(
    s: &BlockedSequence,
    partition: &[Interval],
    order: ContractOrder,
) -> Result<BlockedSequence, SeqError> {
    validate_partition(partition, s.block_count())?;
    let mut blocks = Vec::with_capacity(partition.len());
    for iv in partition {
        let word: Vec<u32> = s.blocks()[iv.start..=iv.end]
            .iter()
            .flat_map(|b| b.symbols.iter().copied())
            .collect();
        let mut keys: HashMap<u32, usize> = HashMap::new();
        let mut counts: HashMap<u32, usize> = HashMap::new();
        for (p, &x) in word.iter().enumerate() {
            let c = counts.entry(x).or_insert(0);
            *c += 1;
            match order {
                ContractOrder::FirstOccurrence => {
                    keys.entry(x).or_insert(p);
                }
                ContractOrder::SecondOccurrence => {
                    if *c <= 2 {
                        keys.insert(x, p);
                    }
                }
            }
        }
        let mut syms: Vec<u32> = keys.keys().copied().collect();
        syms.sort_by_key(|x| keys[x]);
        blocks.push(Block {
            symbols: syms,
            live: true,
        });
    }
    Ok(BlockedSequence::new(blocks))
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for &x in &self.symbols {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{x}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Sequence {
    type Err = SeqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Vec::new();
        for tok in s.split_whitespace() {
            out.push(
                tok.parse::<u32>()
                    .map_err(|_| SeqError::BadToken(tok.to_string()))?,
            );
        }
        Ok(Sequence::new(out))
    }
}

impl fmt::Display for BlockedSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for b in &self.blocks {
            if !first {
                write!(f, " ")?;
            }
            let (open, close) = if b.live { ('(', ')') } else { ('<', '>') };
            write!(f, "{open}")?;
            let mut inner_first = true;
            for &x in &b.symbols {
                if !inner_first {
                    write!(f, " ")?;
                }
                write!(f, "{x}")?;
                inner_first = false;
            }
            write!(f, "{close}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for BlockedSequence {
    type Err = SeqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut blocks = Vec::new();
        let mut cur: Option<(bool, Vec<u32>)> = None;
        let mut tok = String::new();
        let flush_tok = |cur: &mut Option<(bool, Vec<u32>)>,
                             tok: &mut String|
         -> Result<(), SeqError> {
            if tok.is_empty() {
                return Ok(());
            }
            let v = tok
                .parse::<u32>()
                .map_err(|_| SeqError::BadToken(tok.clone()))?;
            match cur {
                Some((_, syms)) => syms.push(v),
                None => return Err(SeqError::Unbalanced(tok.clone())),
            }
            tok.clear();
            Ok(())
        };
        for c in s.chars() {
            match c {
                '(' | '<' => {
                    if cur.is_some() {
                        return Err(SeqError::Unbalanced(s.to_string()));
                    }
                    cur = Some((c == '(', Vec::new()));
                }
                ')' | '>' => {
                    flush_tok(&mut cur, &mut tok)?;
                    match cur.take() {
                        Some((live, syms)) => {
                            if live != (c == ')') {
                                return Err(SeqError::Unbalanced(s.to_string()));
                            }
                            blocks.push(Block::checked(syms, live)?);
                        }
                        None => return Err(SeqError::Unbalanced(s.to_string())),
                    }
                }
                c if c.is_whitespace() => flush_tok(&mut cur, &mut tok)?,
                c if c.is_ascii_digit() => tok.push(c),
                other => return Err(SeqError::BadToken(other.to_string())),
            }
        }
        if cur.is_some() || !tok.is_empty() {
            return Err(SeqError::Unbalanced(s.to_string()));
        }
        Ok(BlockedSequence::new(blocks))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns;

    fn seq(v: &[u32]) -> Sequence {
        Sequence::new(v.to_vec())
    }

    #[test]
    fn canonical_relabels_by_first_appearance() {
        assert_eq!(canonical_form(&seq(&[2, 1, 2])), seq(&[1, 2, 1]));
        assert_eq!(canonical_form(&seq(&[5, 5, 7])), seq(&[1, 1, 2]));
        let dbl_abcabc = seq(&[1, 2, 2, 3, 3, 1, 1, 2, 2, 3]);
        assert_eq!(canonical_form(&dbl_abcabc), dbl_abcabc);
    }

    #[test]
    fn canonical_is_idempotent() {
        let s = seq(&[9, 4, 9, 4, 2]);
        let c = canonical_form(&s);
        assert!(c.is_canonical());
        assert_eq!(canonical_form(&c), c);
        assert_eq!(c.len(), s.len());
        assert_eq!(c.alphabet_size(), s.alphabet_size());
    }

    #[test]
    fn sparsity_checks() {
        assert!(is_k_sparse(&seq(&[1, 2, 1]), 2));
        assert!(!is_k_sparse(&seq(&[1, 1, 2]), 2));
        assert!(is_k_sparse(&seq(&[1, 2, 3, 1]), 3));
        assert!(is_k_sparse(&Sequence::empty(), 5));
    }

    #[test]
    fn make_sparse_greedy() {
        assert_eq!(make_k_sparse(&seq(&[1, 1, 2, 2]), 2), seq(&[1, 2]));
        assert_eq!(make_k_sparse(&seq(&[1, 2, 1]), 2), seq(&[1, 2, 1]));
        assert_eq!(make_k_sparse(&seq(&[1, 2, 1, 2]), 3), seq(&[1, 2]));
        assert!(is_k_sparse(&make_k_sparse(&seq(&[1, 1, 1, 2, 1, 2, 2]), 3), 3));
    }

    #[test]
    fn projection() {
        let s = seq(&[1, 2, 3, 1, 3]);
        assert_eq!(project(&s, &[1, 3].into_iter().collect()), seq(&[1, 3, 1, 3]));
        assert_eq!(project(&s, &s.alphabet()), s);
        assert_eq!(project(&s, &BTreeSet::new()), Sequence::empty());
    }

    #[test]
    fn project_intersects() {
        let s = seq(&[1, 2, 3, 1, 2, 3, 4]);
        let a: BTreeSet<u32> = [1, 2, 4].into_iter().collect();
        let b: BTreeSet<u32> = [2, 3, 4].into_iter().collect();
        let ab: BTreeSet<u32> = a.intersection(&b).copied().collect();
        assert_eq!(project(&project(&s, &a), &b), project(&s, &ab));
    }

    #[test]
    fn filtering() {
        let s = seq(&[1, 2, 1, 2, 1]);
        let step1 = filter_occurrences(&s, FilterPolicy::DropFirst(1));
        let step2 = filter_occurrences(&step1, FilterPolicy::DropLast(1));
        assert_eq!(step2, seq(&[1]));
        assert_eq!(
            filter_occurrences(&s, FilterPolicy::KeepEvery(2)),
            seq(&[1, 2, 1])
        );
        assert_eq!(filter_occurrences(&s, FilterPolicy::KeepEvery(1)), s);
    }

    #[test]
    fn keep_every_multiplicity() {
        let s = seq(&[1, 1, 1, 1, 1, 2, 2, 2]);
        for k in 1..=4 {
            let f = filter_occurrences(&s, FilterPolicy::KeepEvery(k));
            assert_eq!(f.multiplicity(1), 5usize.div_ceil(k));
            assert_eq!(f.multiplicity(2), 3usize.div_ceil(k));
        }
    }

    #[test]
    fn greedy_parse_alternation() {
        let fam = PatternFamily::singleton(patterns::make_pattern(patterns::PatternKind::Alt, 4).unwrap());
        let parsed = greedy_parse(&seq(&[1, 2, 1, 2, 1]), &fam, None).unwrap();
        assert_eq!(
            parsed,
            vec![(seq(&[1, 2, 1]), Some(2)), (seq(&[1]), None)]
        );
    }

    #[test]
    fn greedy_parse_trivial_cases() {
        let fam = PatternFamily::singleton(patterns::make_pattern(patterns::PatternKind::Alt, 4).unwrap());
        let s = seq(&[1, 2, 3]);
        assert_eq!(greedy_parse(&s, &fam, None).unwrap(), vec![(s, None)]);
        assert_eq!(greedy_parse(&Sequence::empty(), &fam, None).unwrap(), vec![]);
    }

    #[test]
    fn greedy_parse_reconstructs() {
        let fam = PatternFamily::singleton(patterns::make_pattern(patterns::PatternKind::Alt, 4).unwrap());
        let s = seq(&[1, 2, 1, 2, 1, 3, 2, 3, 2, 3]);
        for max in [None, Some(2), Some(3)] {
            let parsed = greedy_parse(&s, &fam, max).unwrap();
            let mut rebuilt = Vec::new();
            for (iv, sep) in &parsed {
                rebuilt.extend_from_slice(iv.symbols());
                if let Some(x) = sep {
                    rebuilt.push(*x);
                }
            }
            assert_eq!(Sequence::new(rebuilt), s);
            if let Some(m) = max {
                assert!(parsed.iter().all(|(iv, _)| iv.len() <= m));
            }
        }
    }

    #[test]
    fn blocked_text_roundtrip() {
        let t: BlockedSequence = "(1 2) <2 1>".parse().unwrap();
        assert_eq!(t.block_count(), 2);
        assert_eq!(t.live_block_count(), 1);
        assert_eq!(t.to_string(), "(1 2) <2 1>");
        assert_eq!(t.flatten(), seq(&[1, 2, 2, 1]));
        assert!("(1 1)".parse::<BlockedSequence>().is_err());
        assert!("(1 2".parse::<BlockedSequence>().is_err());
        assert!("(1 2>".parse::<BlockedSequence>().is_err());
        let empty: BlockedSequence = "( ) ( )".parse().unwrap();
        assert_eq!(empty.block_count(), 2);
        assert!(empty.is_empty());
    }

    #[test]
    fn contraction() {
        let s: BlockedSequence = "(1 2) (1 3) (2 3)".parse().unwrap();
        let singles: Vec<Interval> = (0..3).map(|q| Interval::new(q, q, 3).unwrap()).collect();
        let c = contract(&s, &singles, ContractOrder::FirstOccurrence).unwrap();
        assert_eq!(c.to_string(), "(1 2) (1 3) (2 3)");

        let s2: BlockedSequence = "(1) (2)".parse().unwrap();
        let one = vec![Interval::new(0, 1, 2).unwrap()];
        assert_eq!(
            contract(&s2, &one, ContractOrder::FirstOccurrence).unwrap().to_string(),
            "(1 2)"
        );

        let s3: BlockedSequence = "(2) (1 2) (1)".parse().unwrap();
        let one3 = vec![Interval::new(0, 2, 3).unwrap()];
        assert_eq!(
            contract(&s3, &one3, ContractOrder::FirstOccurrence).unwrap().to_string(),
            "(2 1)"
        );
        // second-occurrence rule: 2 repeats at position 2, 1 repeats at position 4
        assert_eq!(
            contract(&s3, &one3, ContractOrder::SecondOccurrence).unwrap().to_string(),
            "(2 1)"
        );
    }

    #[test]
    fn interval_bounds() {
        assert!(Interval::new(0, 2, 3).is_ok());
        assert!(Interval::new(2, 1, 3).is_err());
        assert!(Interval::new(0, 3, 3).is_err());
    }
}
