//! Interval decomposition of blocked sequences (local/global symbols,
//! first/last/middle classification, contraction), derivation trees built by
//! either the canonical halving schedule or the Ackermann-guided schedule,
//! per-symbol projection trees with their anatomy (wingtips, wings, quills,
//! feathers), and the structural predicates: double-nesting, k-roosts,
//! k-eggs, and k-mature occurrences.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use itertools::Itertools;
use thiserror::Error;

use crate::ackermann::{self, AckError};
use crate::seqcore::{
    contract, validate_partition, Block, BlockedSequence, ContractOrder, Interval, SeqError,
    Sequence,
};

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Ack(#[from] AckError),
    #[error("partition width {0} must be a power of two")]
    BadWidth(usize),
    #[error("derivation trees require at least two blocks")]
    TooFewBlocks,
    #[error("symbol {0} does not occur in the sequence")]
    SymbolAbsent(u32),
    #[error("symbol {symbol} does not occur in block {block}")]
    SymbolNotInBlock { symbol: u32, block: usize },
    #[error("block index {0} out of range")]
    BadBlockIndex(usize),
    #[error("occurrence index {0} out of range")]
    BadOccurrence(usize),
    #[error("k must be ≥ 1")]
    BadK,
    #[error("mark vector has length {got}, sequence has length {want}")]
    BadMarks { got: usize, want: usize },
}

/// Splits `m` blocks into intervals of `width` blocks each; the last interval
/// may be shorter.  `width` must be a power of two.
pub fn uniform_partition(m: usize, width: usize) -> Result<Vec<Interval>, DecomposeError> {
    if width == 0 || !width.is_power_of_two() {
        return Err(DecomposeError::BadWidth(width));
    }
    let mut out = Vec::new();
    let mut start = 0usize;
    while start < m {
        let end = (start + width - 1).min(m - 1);
        out.push(Interval::new(start, end, m)?);
        start = end + 1;
    }
    Ok(out)
}

/// The global occurrences of one interval, split by where the symbol's other
/// occurrences lie: `first` symbols have none before the interval, `last`
/// symbols none after, `middle` symbols both.
#[derive(Debug, Clone)]
pub struct GlobalPart {
    /// Ŝ_q: the interval's blocks projected onto global symbols.
    pub full: BlockedSequence,
    /// Ś_q.
    pub first: Sequence,
    /// S̀_q.
    pub last: Sequence,
    /// S̄_q.
    pub middle: Sequence,
}

/// The full bookkeeping of one interval decomposition.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub partition: Vec<Interval>,
    /// Š_q: each interval's blocks projected onto its local symbols.
    pub locals: Vec<BlockedSequence>,
    /// Š: the whole sequence projected onto local symbols, blocks kept.
    pub local_all: BlockedSequence,
    /// Ŝ: the whole sequence projected onto global symbols, blocks kept.
    pub global: BlockedSequence,
    pub global_parts: Vec<GlobalPart>,
    /// Ŝ′: one block per interval, the interval's global alphabet in
    /// contraction order.
    pub contracted: BlockedSequence,
    pub global_symbols: BTreeSet<u32>,
    /// n̂: number of global symbols.
    pub n_hat: usize,
    /// ň_q: number of local symbols per interval.
    pub n_check: Vec<usize>,
    /// m_q: blocks per interval.
    pub m_q: Vec<usize>,
    /// m̂: number of intervals.
    pub m_hat: usize,
}

/// Decomposes `s` along `partition`, contracting by first occurrence.
pub fn decompose(
    s: &BlockedSequence,
    partition: &[Interval],
) -> Result<Decomposition, DecomposeError> {
    decompose_with_order(s, partition, ContractOrder::FirstOccurrence)
}

/// A symbol is global when it occurs in at least two intervals, local
/// otherwise.  `order` selects how contracted blocks arrange their symbols.
pub fn decompose_with_order(
    s: &BlockedSequence,
    partition: &[Interval],
    order: ContractOrder,
) -> Result<Decomposition, DecomposeError> {
    validate_partition(partition, s.block_count())?;
    let mut interval_of = vec![0usize; s.block_count()];
    for (q, iv) in partition.iter().enumerate() {
        for b in iv.block_range() {
            interval_of[b] = q;
        }
    }
    let mut hit: HashMap<u32, BTreeSet<usize>> = HashMap::new();
    for (b, block) in s.blocks().iter().enumerate() {
        for &x in &block.symbols {
            hit.entry(x).or_default().insert(interval_of[b]);
        }
    }
    let global_symbols: BTreeSet<u32> = hit
        .iter()
        .filter(|(_, ivs)| ivs.len() >= 2)
        .map(|(&x, _)| x)
        .collect();

    let restrict = |block: &Block, keep: &dyn Fn(u32) -> bool| Block {
        symbols: block.symbols.iter().copied().filter(|&x| keep(x)).collect(),
        live: block.live,
    };
    let local_all = BlockedSequence::new(
        s.blocks()
            .iter()
            .map(|b| restrict(b, &|x| !global_symbols.contains(&x)))
            .collect(),
    );
    let global = BlockedSequence::new(
        s.blocks()
            .iter()
            .map(|b| restrict(b, &|x| global_symbols.contains(&x)))
            .collect(),
    );

    let mut locals = Vec::with_capacity(partition.len());
    let mut global_parts = Vec::with_capacity(partition.len());
    let mut n_check = Vec::with_capacity(partition.len());
    let mut m_q = Vec::with_capacity(partition.len());
    for (q, iv) in partition.iter().enumerate() {
        let local_q = BlockedSequence::new(
            local_all.blocks()[iv.start..=iv.end].to_vec(),
        );
        n_check.push(local_q.alphabet_size());
        m_q.push(iv.width());
        let full = BlockedSequence::new(global.blocks()[iv.start..=iv.end].to_vec());
        let word = full.flatten();
        let pick = |class: &dyn Fn(u32) -> bool| {
            Sequence::new(
                word.symbols()
                    .iter()
                    .copied()
                    .filter(|x| class(*x))
                    .collect(),
            )
        };
        let first = pick(&|x| *hit[&x].iter().next().unwrap() == q);
        let last = pick(&|x| *hit[&x].iter().next_back().unwrap() == q);
        let middle = pick(&|x| {
            *hit[&x].iter().next().unwrap() < q && *hit[&x].iter().next_back().unwrap() > q
        });
        locals.push(local_q);
        global_parts.push(GlobalPart {
            full,
            first,
            last,
            middle,
        });
    }

    let contracted = contract(&global, partition, order)?;
    Ok(Decomposition {
        partition: partition.to_vec(),
        locals,
        local_all,
        global,
        global_parts,
        contracted,
        n_hat: global_symbols.len(),
        global_symbols,
        n_check,
        m_q,
        m_hat: partition.len(),
    })
}

pub type NodeId = usize;

#[derive(Debug, Clone)]
pub struct Node {
    pub parent: Option<NodeId>,
    /// Children in left-to-right order.
    pub children: Vec<NodeId>,
    pub block: Option<Block>,
}

/// A symbol's crown and its two heads: the root and the two children of the
/// base-case tree in which the symbol was last contracted away.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolHeads {
    pub crown: NodeId,
    pub left_head: NodeId,
    pub right_head: NodeId,
}

/// A rooted tree of blocks modeling the recursive decomposition of a blocked
/// sequence.  Leaves carry the blocks of the input in left-to-right order;
/// internal non-root nodes carry blocks of contracted intermediate sequences.
#[derive(Debug, Clone)]
pub struct DerivationTree {
    pub nodes: Vec<Node>,
    pub root: NodeId,
    /// Leaves in left-to-right order, matching the input's blocks.
    pub leaves: Vec<NodeId>,
    pub heads: BTreeMap<u32, SymbolHeads>,
}

#[derive(Debug, Clone, Copy)]
enum Schedule {
    Canonical,
    Ackermann { i: u64 },
}

impl Schedule {
    fn width(&self, m: usize) -> Result<usize, DecomposeError> {
        match self {
            Schedule::Canonical => Ok(2),
            Schedule::Ackermann { i } => {
                // Minimal j with m ≤ a_{i,j}; the interval width is a_{i,j−1}.
                let mut j = 1u64;
                while !ackermann::ack(*i, j)?.at_least(m as u64) {
                    j += 1;
                }
                debug_assert!(j >= 2, "m ≤ 2 is handled by the base case");
                let w = ackermann::ack(*i, j - 1)?;
                let w: u64 = w
                    .exact()
                    .expect("width below m is exact")
                    .try_into()
                    .expect("width below m fits u64");
                Ok(w as usize)
            }
        }
    }

    fn global(&self) -> Schedule {
        match self {
            Schedule::Canonical => Schedule::Canonical,
            Schedule::Ackermann { i } => Schedule::Ackermann { i: (*i - 1).max(1) },
        }
    }

    fn local(&self) -> Schedule {
        *self
    }
}

/// Derivation tree with the least-aggressive halving schedule (m̂ = ⌈m/2⌉).
pub fn canonical_tree(s: &BlockedSequence) -> Result<DerivationTree, DecomposeError> {
    build_tree(s, Schedule::Canonical)
}

/// Derivation tree whose partition widths follow the Ackermann schedule for
/// row `i`: width a_{i,j−1} with j minimal such that m ≤ a_{i,j}; the global
/// recursion descends to row i−1 and local recursions stay at row i.
pub fn ackermann_tree(s: &BlockedSequence, i: u64) -> Result<DerivationTree, DecomposeError> {
    if i == 0 {
        return Err(DecomposeError::Ack(AckError::BadIndex));
    }
    build_tree(s, Schedule::Ackermann { i })
}

fn build_tree(s: &BlockedSequence, schedule: Schedule) -> Result<DerivationTree, DecomposeError> {
    if s.block_count() < 2 {
        return Err(DecomposeError::TooFewBlocks);
    }
    let mut nodes = vec![Node {
        parent: None,
        children: Vec::new(),
        block: None,
    }];
    let mut heads = BTreeMap::new();
    let leaves = build_into(&mut nodes, &mut heads, s, 0, schedule)?;
    // Symbols that only ever landed in width-1 intervals never reached a
    // base case; they occur in a single leaf, whose parent serves as crown.
    for &leaf in &leaves {
        if let Some(block) = &nodes[leaf].block {
            for &x in &block.symbols {
                let crown = nodes[leaf].parent.unwrap_or(leaf);
                heads.entry(x).or_insert(SymbolHeads {
                    crown,
                    left_head: leaf,
                    right_head: leaf,
                });
            }
        }
    }
    Ok(DerivationTree {
        nodes,
        root: 0,
        leaves,
        heads,
    })
}

/// Grows the subtree for `s` under the existing node `root` and returns the
/// final leaves left to right.  The caller owns `root`'s block.
fn build_into(
    nodes: &mut Vec<Node>,
    heads: &mut BTreeMap<u32, SymbolHeads>,
    s: &BlockedSequence,
    root: NodeId,
    schedule: Schedule,
) -> Result<Vec<NodeId>, DecomposeError> {
    let m = s.block_count();
    match m {
        0 => Ok(Vec::new()),
        1 => Ok(vec![root]),
        2 => {
            let mut out = Vec::with_capacity(2);
            for b in s.blocks() {
                let id = nodes.len();
                nodes.push(Node {
                    parent: Some(root),
                    children: Vec::new(),
                    block: Some(b.clone()),
                });
                nodes[root].children.push(id);
                out.push(id);
            }
            for a in s.flatten().alphabet() {
                heads.entry(a).or_insert(SymbolHeads {
                    crown: root,
                    left_head: out[0],
                    right_head: out[1],
                });
            }
            Ok(out)
        }
        _ => {
            let width = schedule.width(m)?;
            let partition = uniform_partition(m, width)?;
            let dec = decompose(s, &partition)?;
            let hat_leaves = build_into(nodes, heads, &dec.contracted, root, schedule.global())?;
            debug_assert_eq!(hat_leaves.len(), dec.m_hat);
            let mut final_leaves = Vec::with_capacity(m);
            for (q, &leaf) in hat_leaves.iter().enumerate() {
                let sub = build_into(nodes, heads, &dec.locals[q], leaf, schedule.local())?;
                final_leaves.extend(sub);
            }
            // The deepest frontier of this level carries this level's blocks;
            // intermediate nodes keep the contracted blocks placed above.
            for (&leaf, b) in final_leaves.iter().zip(s.blocks()) {
                nodes[leaf].block = Some(b.clone());
            }
            Ok(final_leaves)
        }
    }
}

impl DerivationTree {
    pub fn depth(&self, v: NodeId) -> usize {
        let mut d = 0;
        let mut cur = v;
        while let Some(p) = self.nodes[cur].parent {
            d += 1;
            cur = p;
        }
        d
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.nodes[v].children.is_empty()
    }

    /// Node ids in preorder (parents before children, left to right).
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            for &c in self.nodes[v].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    fn block_has(&self, v: NodeId, a: u32) -> bool {
        self.nodes[v]
            .block
            .as_ref()
            .is_some_and(|b| b.symbols.contains(&a))
    }

    /// Number of leaves under `v` (inclusive) whose block contains `a`.
    pub fn leaf_descendants_with(&self, v: NodeId, a: u32) -> usize {
        let mut count = 0;
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if self.is_leaf(u) {
                if self.block_has(u, a) {
                    count += 1;
                }
            } else {
                stack.extend(self.nodes[u].children.iter().copied());
            }
        }
        count
    }

    /// DOT rendering with per-node block labels.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph derivation {\n  node [shape=box];\n");
        for (v, node) in self.nodes.iter().enumerate() {
            let label = match &node.block {
                Some(b) => BlockedSequence::new(vec![b.clone()]).to_string(),
                None => "·".to_string(),
            };
            let _ = writeln!(out, "  n{v} [label=\"{v}: {label}\"];");
        }
        for (v, node) in self.nodes.iter().enumerate() {
            for &c in &node.children {
                let _ = writeln!(out, "  n{v} -> n{c};");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// The induced tree T_{|a} on the crown of `a` plus every node whose block
/// contains `a`, with its anatomy.  Node indices are positions in
/// `tree_nodes`; index 0 is the crown.
#[derive(Debug, Clone)]
pub struct ProjectionTree {
    pub symbol: u32,
    /// Projection index → derivation-tree node id.
    pub tree_nodes: Vec<NodeId>,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// lt: leftmost leaf.
    pub left_wingtip: usize,
    /// rt: rightmost leaf.
    pub right_wingtip: usize,
    /// Path left head → left wingtip (empty when degenerate).
    pub left_wing: Vec<usize>,
    /// Path right head → right wingtip (empty when degenerate).
    pub right_wing: Vec<usize>,
    /// Children of left-wing nodes that are off the wing.
    pub dove_quills: Vec<usize>,
    /// Children of right-wing nodes that are off the wing.
    pub hawk_quills: Vec<usize>,
    /// Rightmost leaf descendant of each dove quill.
    pub dove_feathers: Vec<usize>,
    /// Leftmost leaf descendant of each hawk quill.
    pub hawk_feathers: Vec<usize>,
}

/// Builds the projection of the derivation tree onto symbol `a`.
pub fn project_tree(t: &DerivationTree, a: u32) -> Result<ProjectionTree, DecomposeError> {
    let heads = *t
        .heads
        .get(&a)
        .ok_or(DecomposeError::SymbolAbsent(a))?;
    let order = t.preorder();
    let rank: HashMap<NodeId, usize> = order.iter().enumerate().map(|(r, &v)| (v, r)).collect();
    let mut members: Vec<NodeId> = order
        .iter()
        .copied()
        .filter(|&v| v == heads.crown || t.block_has(v, a))
        .collect();
    // The crown is an ancestor of every member, hence first in preorder.
    debug_assert_eq!(members.first(), Some(&heads.crown));
    members.dedup();
    let index: HashMap<NodeId, usize> = members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let in_set: BTreeSet<NodeId> = members.iter().copied().collect();

    let mut parent = vec![None; members.len()];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); members.len()];
    for (i, &v) in members.iter().enumerate().skip(1) {
        let mut anc = t.nodes[v].parent;
        while let Some(u) = anc {
            if in_set.contains(&u) {
                parent[i] = Some(index[&u]);
                children[index[&u]].push(i);
                break;
            }
            anc = t.nodes[u].parent;
        }
    }
    // Children were discovered in preorder, hence already left-to-right.
    for ch in &mut children {
        ch.sort_by_key(|&c| rank[&members[c]]);
    }

    let leaves: Vec<usize> = (0..members.len())
        .filter(|&i| children[i].is_empty())
        .collect();
    debug_assert!(!leaves.is_empty());
    let left_wingtip = *leaves.first().unwrap();
    let right_wingtip = *leaves.last().unwrap();

    let path_down = |top: usize, bottom: usize| -> Option<Vec<usize>> {
        let mut path = vec![bottom];
        let mut cur = bottom;
        while cur != top {
            cur = parent[cur]?;
            path.push(cur);
        }
        path.reverse();
        Some(path)
    };
    let wing = |head: NodeId, tip: usize| -> Vec<usize> {
        match index.get(&head) {
            Some(&h) => path_down(h, tip).unwrap_or_default(),
            None => Vec::new(),
        }
    };
    let left_wing = wing(heads.left_head, left_wingtip);
    let right_wing = wing(heads.right_head, right_wingtip);

    let quills = |wing: &[usize]| -> Vec<usize> {
        let on: BTreeSet<usize> = wing.iter().copied().collect();
        let mut out = Vec::new();
        for &w in wing {
            for &c in &children[w] {
                if !on.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    };
    let dove_quills = quills(&left_wing);
    let hawk_quills = quills(&right_wing);

    let extreme_leaf = |start: usize, rightmost: bool| -> usize {
        let mut cur = start;
        loop {
            let ch = &children[cur];
            if ch.is_empty() {
                return cur;
            }
            cur = if rightmost { *ch.last().unwrap() } else { ch[0] };
        }
    };
    let dove_feathers: Vec<usize> = dove_quills.iter().map(|&q| extreme_leaf(q, true)).collect();
    let hawk_feathers: Vec<usize> = hawk_quills.iter().map(|&q| extreme_leaf(q, false)).collect();

    Ok(ProjectionTree {
        symbol: a,
        tree_nodes: members,
        parent,
        children,
        left_wingtip,
        right_wingtip,
        left_wing,
        right_wing,
        dove_quills,
        hawk_quills,
        dove_feathers,
        hawk_feathers,
    })
}

impl ProjectionTree {
    pub fn len(&self) -> usize {
        self.tree_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree_nodes.is_empty()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.children[i].is_empty()).collect()
    }

    /// Edge-distance from the crown to the deepest node.
    pub fn height(&self) -> usize {
        let mut depth = vec![0usize; self.len()];
        let mut max = 0;
        for i in 1..self.len() {
            depth[i] = depth[self.parent[i].unwrap()] + 1;
            max = max.max(depth[i]);
        }
        max
    }

    /// Whether the given derivation-tree node is a wingtip here.
    pub fn is_wingtip(&self, v: NodeId) -> bool {
        self.tree_nodes[self.left_wingtip] == v || self.tree_nodes[self.right_wingtip] == v
    }

    /// Whether the given derivation-tree node is a dove or hawk feather here.
    pub fn is_feather(&self, v: NodeId) -> bool {
        self.dove_feathers
            .iter()
            .chain(self.hawk_feathers.iter())
            .any(|&f| self.tree_nodes[f] == v)
    }

    /// DOT rendering with anatomy roles as node attributes.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph projection {\n  node [shape=ellipse];\n");
        for i in 0..self.len() {
            let mut roles = Vec::new();
            if i == 0 {
                roles.push("crown");
            }
            if i == self.left_wingtip || i == self.right_wingtip {
                roles.push("wingtip");
            }
            if self.left_wing.contains(&i) || self.right_wing.contains(&i) {
                roles.push("wing");
            }
            if self.dove_quills.contains(&i) || self.hawk_quills.contains(&i) {
                roles.push("quill");
            }
            if self.dove_feathers.contains(&i) {
                roles.push("dove-feather");
            }
            if self.hawk_feathers.contains(&i) {
                roles.push("hawk-feather");
            }
            let label = if roles.is_empty() {
                format!("{}", self.tree_nodes[i])
            } else {
                format!("{} [{}]", self.tree_nodes[i], roles.join(","))
            };
            let _ = writeln!(out, "  p{i} [label=\"{label}\"];");
        }
        for i in 1..self.len() {
            let _ = writeln!(out, "  p{} -> p{i};", self.parent[i].unwrap());
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatherKind {
    Dove,
    Hawk,
}

/// Total feathers of one kind over all symbols of `s`.
pub fn count_feathers(
    s: &BlockedSequence,
    tree: &DerivationTree,
    kind: FeatherKind,
) -> Result<usize, DecomposeError> {
    let mut total = 0;
    for a in s.flatten().alphabet() {
        let p = project_tree(tree, a)?;
        total += match kind {
            FeatherKind::Dove => p.dove_feathers.len(),
            FeatherKind::Hawk => p.hawk_feathers.len(),
        };
    }
    Ok(total)
}

/// True iff `s` contains a b b ⟨block⟩ b b a or b a a ⟨block⟩ a a b around
/// block `block_index`, where ⟨block⟩ is the block containing the displayed
/// a (respectively b).
pub fn double_nested(
    s: &BlockedSequence,
    a: u32,
    b: u32,
    block_index: usize,
) -> Result<bool, DecomposeError> {
    let blocks = s.blocks();
    let block = blocks
        .get(block_index)
        .ok_or(DecomposeError::BadBlockIndex(block_index))?;
    for sym in [a, b] {
        if !block.symbols.contains(&sym) {
            return Err(DecomposeError::SymbolNotInBlock {
                symbol: sym,
                block: block_index,
            });
        }
    }
    let before: Vec<u32> = blocks[..block_index]
        .iter()
        .flat_map(|b| b.symbols.iter().copied())
        .collect();
    let after: Vec<u32> = blocks[block_index + 1..]
        .iter()
        .flat_map(|b| b.symbols.iter().copied())
        .collect();
    let has = |word: &[u32], pat: &[u32]| {
        let mut it = word.iter();
        pat.iter().all(|p| it.any(|x| x == p))
    };
    Ok((has(&before, &[a, b, b]) && has(&after, &[b, b, a]))
        || (has(&before, &[b, a, a]) && has(&after, &[a, a, b])))
}

/// A blocked sequence whose occurrences carry terminal marks.  A terminal
/// occurrence represents exactly one original occurrence; a non-terminal one
/// represents at least two.
#[derive(Debug, Clone)]
pub struct MarkedSequence {
    seq: BlockedSequence,
    /// One flag per flattened occurrence; true = terminal.
    marks: Vec<bool>,
}

impl MarkedSequence {
    pub fn new(seq: BlockedSequence, marks: Vec<bool>) -> Result<Self, DecomposeError> {
        if marks.len() != seq.len() {
            return Err(DecomposeError::BadMarks {
                got: marks.len(),
                want: seq.len(),
            });
        }
        Ok(MarkedSequence { seq, marks })
    }

    /// Marks every occurrence terminal, as in an original (underived) sequence.
    pub fn all_terminal(seq: BlockedSequence) -> Self {
        let marks = vec![true; seq.len()];
        MarkedSequence { seq, marks }
    }

    pub fn sequence(&self) -> &BlockedSequence {
        &self.seq
    }

    pub fn marks(&self) -> &[bool] {
        &self.marks
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// Flattened (symbol, terminal) pairs.
    fn occurrences(&self) -> Vec<(u32, bool)> {
        self.seq
            .flatten()
            .symbols()
            .iter()
            .copied()
            .zip(self.marks.iter().copied())
            .collect()
    }

    /// Flattened start offset of each block.
    fn block_offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.seq.block_count());
        let mut p = 0;
        for b in self.seq.blocks() {
            out.push(p);
            p += b.len();
        }
        out
    }

    /// Block index owning a flattened occurrence.
    fn block_of(&self, occurrence: usize) -> Result<usize, DecomposeError> {
        if occurrence >= self.len() {
            return Err(DecomposeError::BadOccurrence(occurrence));
        }
        let offsets = self.block_offsets();
        Ok(offsets.partition_point(|&o| o <= occurrence) - 1)
    }
}

/// The sequence at tree depth `depth`: blocks of nodes at that depth, plus
/// leaves that stop short of it, left to right.  Occurrence marks follow the
/// derivation tree: an occurrence of `a` at node v is terminal iff exactly
/// one leaf below v carries `a`.
pub fn marked_frontier(tree: &DerivationTree, depth: usize) -> MarkedSequence {
    let mut blocks = Vec::new();
    let mut marks = Vec::new();
    for v in tree.preorder() {
        let d = tree.depth(v);
        let take = d == depth || (tree.is_leaf(v) && d < depth);
        if !take {
            continue;
        }
        if let Some(block) = &tree.nodes[v].block {
            for &x in &block.symbols {
                marks.push(tree.leaf_descendants_with(v, x) == 1);
            }
            blocks.push(block.clone());
        }
    }
    MarkedSequence {
        seq: BlockedSequence::new(blocks),
        marks,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy)]
enum Token {
    Single(u32),
    /// Two terminal occurrences or one non-terminal occurrence.
    Double(u32),
}

/// Earliest position strictly after a completed match of `tok` starting at
/// `from`, or None.
fn advance(occ: &[(u32, bool)], from: usize, tok: Token) -> Option<usize> {
    match tok {
        Token::Single(c) => occ[from..]
            .iter()
            .position(|&(s, _)| s == c)
            .map(|i| from + i + 1),
        Token::Double(c) => {
            let mut terminals = 0;
            for (i, &(s, terminal)) in occ.iter().enumerate().skip(from) {
                if s != c {
                    continue;
                }
                if !terminal {
                    return Some(i + 1);
                }
                terminals += 1;
                if terminals == 2 {
                    return Some(i + 1);
                }
            }
            None
        }
    }
}

fn match_tokens(occ: &[(u32, bool)], tokens: &[Token]) -> Option<usize> {
    let mut p = 0;
    for &tok in tokens {
        p = advance(occ, p, tok)?;
    }
    Some(p)
}

fn singles(syms: impl IntoIterator<Item = u32>) -> Vec<Token> {
    syms.into_iter().map(Token::Single).collect()
}

fn doubles(syms: impl IntoIterator<Item = u32>) -> Vec<Token> {
    syms.into_iter().map(Token::Double).collect()
}

/// Symbols occurring in both occurrence lists.
fn shared_symbols(left: &[(u32, bool)], right: &[(u32, bool)]) -> Vec<u32> {
    let l: BTreeSet<u32> = left.iter().map(|&(s, _)| s).collect();
    let r: BTreeSet<u32> = right.iter().map(|&(s, _)| s).collect();
    l.intersection(&r).copied().collect()
}

/// True iff the interval is a k-roost: for some distinct a_1…a_k, the part
/// before the interval contains a_1 … a_k a_k² … a_1² and the part after
/// contains a_1² … a_k² a_k … a_1, where b² is two terminal b's or one
/// non-terminal b.
pub fn k_roost(
    ms: &MarkedSequence,
    interval: Interval,
    k: usize,
) -> Result<bool, DecomposeError> {
    if k == 0 {
        return Err(DecomposeError::BadK);
    }
    if interval.end >= ms.seq.block_count() {
        return Err(SeqError::BadInterval {
            start: interval.start,
            end: interval.end,
            blocks: ms.seq.block_count(),
        }
        .into());
    }
    let occ = ms.occurrences();
    let offsets = ms.block_offsets();
    let left = &occ[..offsets[interval.start]];
    let right_start = interval
        .end
        .checked_add(1)
        .filter(|&q| q < offsets.len())
        .map_or(occ.len(), |q| offsets[q]);
    let right = &occ[right_start..];
    let candidates = shared_symbols(left, right);
    if candidates.len() < k {
        return Ok(false);
    }
    for tuple in candidates.iter().copied().permutations(k) {
        let mut ltoks = singles(tuple.iter().copied());
        ltoks.extend(doubles(tuple.iter().rev().copied()));
        let mut rtoks = doubles(tuple.iter().copied());
        rtoks.extend(singles(tuple.iter().rev().copied()));
        if match_tokens(left, &ltoks).is_some() && match_tokens(right, &rtoks).is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// True iff the occurrence's block is flanked, for its symbol a_1 and some
/// distinct a_2…a_k, by a_1 a_2 … a_k a_k² … a_2² before and
/// a_2² … a_k² a_k … a_1 after.  Every middle occurrence is a 1-egg.
pub fn k_egg(ms: &MarkedSequence, occurrence: usize, k: usize) -> Result<bool, DecomposeError> {
    if k == 0 {
        return Err(DecomposeError::BadK);
    }
    let block = ms.block_of(occurrence)?;
    let occ = ms.occurrences();
    let offsets = ms.block_offsets();
    let left = &occ[..offsets[block]];
    let right_start = offsets
        .get(block + 1)
        .copied()
        .unwrap_or(occ.len());
    let right = &occ[right_start..];
    let a1 = occ[occurrence].0;
    if k == 1 {
        return Ok(match_tokens(left, &[Token::Single(a1)]).is_some()
            && match_tokens(right, &[Token::Single(a1)]).is_some());
    }
    let candidates: Vec<u32> = shared_symbols(left, right)
        .into_iter()
        .filter(|&s| s != a1)
        .collect();
    if candidates.len() < k - 1 {
        return Ok(false);
    }
    for rest in candidates.iter().copied().permutations(k - 1) {
        let mut ltoks = vec![Token::Single(a1)];
        ltoks.extend(singles(rest.iter().copied()));
        ltoks.extend(doubles(rest.iter().rev().copied()));
        let mut rtoks = doubles(rest.iter().copied());
        rtoks.extend(singles(rest.iter().rev().copied()));
        rtoks.push(Token::Single(a1));
        if match_tokens(left, &ltoks).is_some() && match_tokens(right, &rtoks).is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// True iff the occurrence sits immediately at the given side of some
/// k-roost interval: it completes (Left) or opens (Right) the adjacent a_1²
/// token of the roost display.
pub fn k_mature(
    ms: &MarkedSequence,
    occurrence: usize,
    k: usize,
    side: Side,
) -> Result<bool, DecomposeError> {
    if k == 0 {
        return Err(DecomposeError::BadK);
    }
    if occurrence >= ms.len() {
        return Err(DecomposeError::BadOccurrence(occurrence));
    }
    let occ = ms.occurrences();
    let (a1, terminal) = occ[occurrence];
    let left = &occ[..occurrence];
    let right = &occ[occurrence + 1..];
    let candidates: Vec<u32> = shared_symbols(left, right)
        .into_iter()
        .filter(|&s| s != a1)
        .collect();
    if candidates.len() < k - 1 {
        return Ok(false);
    }
    for rest in candidates.iter().copied().permutations(k - 1) {
        // a_1 a_2 … a_k a_k² … a_2² (shared by both sides' near flank).
        let mut opening = vec![Token::Single(a1)];
        opening.extend(singles(rest.iter().copied()));
        opening.extend(doubles(rest.iter().rev().copied()));
        // a_2² … a_k² a_k … a_1 (shared far flank).
        let mut closing = doubles(rest.iter().copied());
        closing.extend(singles(rest.iter().rev().copied()));
        closing.push(Token::Single(a1));
        let ok = match side {
            Side::Left => {
                // The occurrence finishes the a_1² just before the interval.
                let before = match match_tokens(left, &opening) {
                    Some(p) => !terminal || left[p..].iter().any(|&(s, t)| s == a1 && t),
                    None => false,
                };
                let mut after_toks = vec![Token::Double(a1)];
                after_toks.extend(closing.clone());
                before && match_tokens(right, &after_toks).is_some()
            }
            Side::Right => {
                // The occurrence opens the a_1² just after the interval.
                let mut before_toks = opening.clone();
                before_toks.push(Token::Double(a1));
                let after = if terminal {
                    // Need a second terminal a_1 before the far flank.
                    match right.iter().position(|&(s, t)| s == a1 && t) {
                        Some(p) => match_tokens(&right[p + 1..], &closing).is_some(),
                        None => false,
                    }
                } else {
                    match_tokens(right, &closing).is_some()
                };
                match_tokens(left, &before_toks).is_some() && after
            }
        };
        if ok {
            return Ok(true);
        }
    }
    Ok(false)
}
