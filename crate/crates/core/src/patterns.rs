//! Generators for the named forbidden patterns (alternations, zig-zags,
//! combs) and the catenated-permutation pattern families.

use std::fmt;

use itertools::Itertools;
use thiserror::Error;

use crate::seqcore::{canonical_form, Sequence};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("parameter k must be ≥ 1")]
    ZeroParameter,
    #[error("alt length must be ≥ 2")]
    AltTooShort,
    #[error("family enumeration of {0} members exceeds cap {1}")]
    EnumerationCap(u128, u128),
    #[error("family size overflows the counter")]
    CountOverflow,
    #[error("splice position {0} has no adjacent equal pair")]
    NoAdjacentPair(usize),
    #[error("unrecognized pattern spec `{0}`")]
    BadSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    Alt,
    N,
    M,
    Z,
    C,
    D,
}

/// Builds the zig-zag shapes: an opening ascent 1…(k+1) followed by `runs−1`
/// alternating descents k…1 and ascents 2…(k+1).
fn zigzag(k: u32, runs: usize) -> Sequence {
    let mut out: Vec<u32> = (1..=k + 1).collect();
    for r in 1..runs {
        if r % 2 == 1 {
            out.extend((1..=k).rev());
        } else {
            out.extend(2..=k + 1);
        }
    }
    Sequence::new(out)
}

pub fn make_pattern(kind: PatternKind, k: usize) -> Result<Sequence, PatternError> {
    if k == 0 {
        return Err(PatternError::ZeroParameter);
    }
    let kk = k as u32;
    Ok(match kind {
        PatternKind::Alt => {
            if k < 2 {
                return Err(PatternError::AltTooShort);
            }
            Sequence::new((0..k).map(|p| (p % 2) as u32 + 1).collect())
        }
        PatternKind::N => zigzag(kk, 3),
        PatternKind::M => zigzag(kk, 4),
        PatternKind::Z => zigzag(kk, 5),
        PatternKind::C => {
            // 1 2 … (k+2) 1 (k+2) 2 (k+2) 3 … (k+1) (k+2)
            let top = kk + 2;
            let mut out: Vec<u32> = (1..=top).collect();
            out.push(1);
            for t in 2..=kk + 1 {
                out.push(top);
                out.push(t);
            }
            out.push(top);
            Sequence::new(out)
        }
        PatternKind::D => {
            // 1 2 1 3 1 … 1 (k+2) 1 (k+2) 2 (k+2) 3 … (k+1) (k+2)
            let top = kk + 2;
            let mut out = Vec::new();
            for t in 2..=top {
                out.push(1);
                out.push(t);
            }
            out.push(1);
            for t in 2..=kk + 1 {
                out.push(top);
                out.push(t);
            }
            out.push(top);
            Sequence::new(out)
        }
    })
}

/// alt parameterized by DS order instead of total length.
pub fn alt_for_order(s: usize) -> Result<Sequence, PatternError> {
    make_pattern(PatternKind::Alt, s + 2)
}

/// Doubles every occurrence except the first and last positions.
pub fn dbl(p: &Sequence) -> Sequence {
    let w = p.symbols();
    let mut out = Vec::with_capacity(w.len() * 2);
    for (i, &x) in w.iter().enumerate() {
        out.push(x);
        if i != 0 && i + 1 != w.len() {
            out.push(x);
        }
    }
    Sequence::new(out)
}

/// Splices `inner` between an adjacent equal pair of `outer`: for
/// outer = σ₁ a a σ₂ (the pair at positions pos, pos+1), returns
/// σ₁ a inner′ a σ₂ in canonical form, with inner relabeled disjointly.
pub fn splice(outer: &Sequence, pos: usize, inner: &Sequence) -> Result<Sequence, PatternError> {
    let w = outer.symbols();
    if pos + 1 >= w.len() || w[pos] != w[pos + 1] {
        return Err(PatternError::NoAdjacentPair(pos));
    }
    let offset = w.iter().copied().max().unwrap_or(0) + 1;
    let mut out = w[..=pos].to_vec();
    out.extend(inner.symbols().iter().map(|&x| x + offset));
    out.extend_from_slice(&w[pos + 1..]);
    Ok(canonical_form(&Sequence::new(out)))
}

pub const DEFAULT_ENUM_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Singleton,
    Perm,
    BinPerm,
    DblPerm,
    Explicit,
}

/// A finite set of forbidden patterns, possibly generated lazily.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternFamily {
    kind: FamilyKind,
    r: usize,
    parts: usize,
    explicit: Vec<Sequence>,
}

impl PatternFamily {
    pub fn singleton(p: Sequence) -> Self {
        PatternFamily {
            kind: FamilyKind::Singleton,
            r: p.alphabet_size(),
            parts: 1,
            explicit: vec![p],
        }
    }

    pub fn explicit(ps: Vec<Sequence>) -> Self {
        let r = ps.iter().map(Sequence::alphabet_size).max().unwrap_or(0);
        PatternFamily {
            kind: FamilyKind::Explicit,
            r,
            parts: 1,
            explicit: ps,
        }
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn parts(&self) -> usize {
        self.parts
    }

    pub fn explicit_members(&self) -> &[Sequence] {
        &self.explicit
    }

    /// Number of members, or an error when it overflows the counter.
    pub fn member_count(&self) -> Result<u128, PatternError> {
        let fact = |n: usize| -> Option<u128> {
            (1..=n as u128).try_fold(1u128, |a, b| a.checked_mul(b))
        };
        let pow = |b: u128, e: usize| -> Option<u128> {
            (0..e).try_fold(1u128, |a, _| a.checked_mul(b))
        };
        match self.kind {
            FamilyKind::Singleton | FamilyKind::Explicit => Ok(self.explicit.len() as u128),
            FamilyKind::Perm => fact(self.r)
                .and_then(|f| pow(f, self.parts))
                .ok_or(PatternError::CountOverflow),
            FamilyKind::BinPerm => pow(2, self.parts).ok_or(PatternError::CountOverflow),
            FamilyKind::DblPerm => {
                // first and last segments: r! each; middles: (2r)!/2^r each
                let f = fact(self.r).ok_or(PatternError::CountOverflow)?;
                if self.parts < 2 {
                    return pow(f, self.parts).ok_or(PatternError::CountOverflow);
                }
                let mid = fact(2 * self.r)
                    .and_then(|m| pow(2, self.r).map(|d| m / d))
                    .ok_or(PatternError::CountOverflow)?;
                f.checked_mul(f)
                    .and_then(|ff| pow(mid, self.parts - 2).and_then(|ms| ff.checked_mul(ms)))
                    .ok_or(PatternError::CountOverflow)
            }
        }
    }

    /// Materializes all members in deterministic lexicographic order over
    /// segment choices.  Refuses when the count exceeds `cap`.
    pub fn members(&self, cap: u128) -> Result<Vec<Sequence>, PatternError> {
        let count = self.member_count()?;
        if count > cap {
            return Err(PatternError::EnumerationCap(count, cap));
        }
        match self.kind {
            FamilyKind::Singleton | FamilyKind::Explicit => Ok(self.explicit.clone()),
            FamilyKind::Perm => {
                let perms = all_permutations(self.r);
                Ok(segment_product(&vec![perms; self.parts]))
            }
            FamilyKind::BinPerm => {
                let asc: Vec<u32> = (1..=self.r as u32).collect();
                let desc: Vec<u32> = (1..=self.r as u32).rev().collect();
                let choices = vec![vec![asc, desc]; self.parts];
                Ok(segment_product(&choices))
            }
            FamilyKind::DblPerm => {
                let perms = all_permutations(self.r);
                let mids = multiset_double_permutations(self.r);
                let mut choices = Vec::with_capacity(self.parts);
                for q in 0..self.parts {
                    if q == 0 || q + 1 == self.parts {
                        choices.push(perms.clone());
                    } else {
                        choices.push(mids.clone());
                    }
                }
                Ok(segment_product(&choices))
            }
        }
    }
}

fn all_permutations(r: usize) -> Vec<Vec<u32>> {
    (1..=r as u32).permutations(r).collect()
}

/// All distinct arrangements of the multiset {1,1,2,2,…,r,r} in lex order.
fn multiset_double_permutations(r: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut remaining = vec![2usize; r];
    let mut cur = Vec::with_capacity(2 * r);
    fn rec(remaining: &mut [usize], cur: &mut Vec<u32>, total: usize, out: &mut Vec<Vec<u32>>) {
        if cur.len() == total {
            out.push(cur.clone());
            return;
        }
        for x in 0..remaining.len() {
            if remaining[x] > 0 {
                remaining[x] -= 1;
                cur.push(x as u32 + 1);
                rec(remaining, cur, total, out);
                cur.pop();
                remaining[x] += 1;
            }
        }
    }
    rec(&mut remaining, &mut cur, 2 * r, &mut out);
    out
}

/// Cartesian product of per-segment choices, odometer with the first segment
/// most significant.
fn segment_product(choices: &[Vec<Vec<u32>>]) -> Vec<Sequence> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; choices.len()];
    if choices.iter().any(|c| c.is_empty()) {
        return out;
    }
    loop {
        let mut word = Vec::new();
        for (q, c) in choices.iter().enumerate() {
            word.extend_from_slice(&c[idx[q]]);
        }
        out.push(Sequence::new(word));
        let mut q = choices.len();
        loop {
            if q == 0 {
                return out;
            }
            q -= 1;
            idx[q] += 1;
            if idx[q] < choices[q].len() {
                break;
            }
            idx[q] = 0;
        }
    }
}

pub fn make_family(kind: FamilyKind, r: usize, parts: usize) -> Result<PatternFamily, PatternError> {
    if r == 0 || parts == 0 {
        return Err(PatternError::ZeroParameter);
    }
    match kind {
        FamilyKind::Perm | FamilyKind::BinPerm | FamilyKind::DblPerm => Ok(PatternFamily {
            kind,
            r,
            parts,
            explicit: Vec::new(),
        }),
        _ => Err(PatternError::BadSpec("make_family needs perm/binperm/dblperm".into())),
    }
}

/// A parsed CLI pattern spec: either a single pattern or a family.
#[derive(Debug, Clone)]
pub enum PatternSpec {
    Single(Sequence),
    Family(PatternFamily),
}

impl PatternSpec {
    pub fn to_family(&self) -> PatternFamily {
        match self {
            PatternSpec::Single(p) => PatternFamily::singleton(p.clone()),
            PatternSpec::Family(f) => f.clone(),
        }
    }
}

impl fmt::Display for PatternSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternSpec::Single(p) => write!(f, "{p}"),
            PatternSpec::Family(fam) => write!(f, "{:?}:{}:{}", fam.kind, fam.r, fam.parts),
        }
    }
}

/// Parses `alt:LEN`, `N:k`, `M:k`, `Z:k`, `C:k`, `D:k`, `perm:r:parts`,
/// `binperm:r:parts`, `dblperm:r:parts`, `dbl(<spec>)`, or a literal
/// whitespace-separated sequence.
pub fn parse_spec(text: &str) -> Result<PatternSpec, PatternError> {
    let text = text.trim();
    if let Some(inner) = text.strip_prefix("dbl(").and_then(|t| t.strip_suffix(')')) {
        return match parse_spec(inner)? {
            PatternSpec::Single(p) => Ok(PatternSpec::Single(dbl(&p))),
            PatternSpec::Family(_) => Err(PatternError::BadSpec(text.to_string())),
        };
    }
    let parts: Vec<&str> = text.split(':').collect();
    let parse_num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| PatternError::BadSpec(text.to_string()))
    };
    match parts.as_slice() {
        [kind, k] => {
            let k = parse_num(k)?;
            let kind = match *kind {
                "alt" => PatternKind::Alt,
                "N" => PatternKind::N,
                "M" => PatternKind::M,
                "Z" => PatternKind::Z,
                "C" => PatternKind::C,
                "D" => PatternKind::D,
                _ => return Err(PatternError::BadSpec(text.to_string())),
            };
            Ok(PatternSpec::Single(make_pattern(kind, k)?))
        }
        [kind, r, parts_n] => {
            let fk = match *kind {
                "perm" => FamilyKind::Perm,
                "binperm" => FamilyKind::BinPerm,
                "dblperm" => FamilyKind::DblPerm,
                _ => return Err(PatternError::BadSpec(text.to_string())),
            };
            Ok(PatternSpec::Family(make_family(
                fk,
                parse_num(r)?,
                parse_num(parts_n)?,
            )?))
        }
        _ => {
            let seq: Sequence = text
                .parse()
                .map_err(|_| PatternError::BadSpec(text.to_string()))?;
            if seq.is_empty() {
                return Err(PatternError::BadSpec(text.to_string()));
            }
            Ok(PatternSpec::Single(seq))
        }
    }
}
