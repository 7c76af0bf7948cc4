//! Self-check suite over the library's headline mathematical claims.
//!
//! Each claim pins one verifiable statement — a closed form, a structural
//! property of a generated sequence, or an avoidance fact — to concrete
//! parameters, and reports pass/fail together with timing.  Grid points whose
//! instances exceed the desk-scale budgets (construction size caps, or the
//! host-size range the embedding search is built for) are reported as
//! `skipped-budget` rather than silently dropped.

use std::collections::BTreeSet;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ackermann::AckTable;
use crate::coeffs::{binomial, coefficient, CoeffKind};
use crate::construct::{
    mu_s, t_pi, t_pi_stats, t_rho, t_rho_stats, u_pi, u_pi_stats, u_s, u_s_stats, Pattern,
};
use crate::containment::{ds_order, embeds, formation_count};
use crate::decompose::{
    ackermann_tree, canonical_tree, count_feathers, decompose, double_nested, project_tree,
    uniform_partition, FeatherKind,
};
use crate::extremal::{ex_blocked_bruteforce, ex_bruteforce, SearchBudget};
use crate::patterns::{make_pattern, PatternFamily, PatternKind};
use crate::seqcore::{Block, BlockedSequence, Sequence};

/// Seed used by `verify` when none is given on the command line.
pub const DEFAULT_SEED: u64 = 0xd5f0_5eed;

/// Report schema version for downstream consumers.
pub const SCHEMA_VERSION: u32 = 1;

/// Largest host length the embedding search is expected to handle at desk
/// scale; larger hosts are reported as skipped rather than attempted.
pub const EMBED_HOST_BUDGET: usize = 100_000;

/// Largest sequence the structural property checks materialize.
const SIZE_BUDGET: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Quick,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "skipped-budget")]
    SkippedBudget,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::SkippedBudget => "skipped-budget",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Claim {
    pub id: String,
    pub anchor: String,
    pub params: String,
    pub status: Status,
    pub elapsed_ms: u64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub mode: Mode,
    pub seed: u64,
    pub claims: Vec<Claim>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.claims.iter().all(|c| c.status != Status::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<14} {:<14} {:>9}  {}\n",
            "claim", "status", "elapsed", "detail"
        ));
        for c in &self.claims {
            out.push_str(&format!(
                "{:<14} {:<14} {:>7}ms  {}\n",
                c.id, c.status, c.elapsed_ms, c.detail
            ));
        }
        let verdict = if self.all_passed() { "OK" } else { "FAILED" };
        out.push_str(&format!(
            "{} — {} claims, {} failed, {} skipped\n",
            verdict,
            self.claims.len(),
            self.claims
                .iter()
                .filter(|c| c.status == Status::Fail)
                .count(),
            self.claims
                .iter()
                .filter(|c| c.status == Status::SkippedBudget)
                .count(),
        ));
        out
    }
}

struct Runner {
    claims: Vec<Claim>,
}

impl Runner {
    fn run(
        &mut self,
        id: &str,
        anchor: &str,
        params: &str,
        f: impl FnOnce() -> (Status, String),
    ) {
        let t0 = Instant::now();
        let (status, detail) = f();
        self.claims.push(Claim {
            id: id.to_string(),
            anchor: anchor.to_string(),
            params: params.to_string(),
            status,
            elapsed_ms: t0.elapsed().as_millis() as u64,
            detail,
        });
    }
}

fn outcome(errors: Vec<String>, ok_detail: String) -> (Status, String) {
    if errors.is_empty() {
        (Status::Pass, ok_detail)
    } else {
        let shown = errors.iter().take(3).cloned().collect::<Vec<_>>().join("; ");
        (
            Status::Fail,
            format!("{} failure(s): {}", errors.len(), shown),
        )
    }
}

/// Runs every claim and returns the report.  Deterministic for a fixed
/// `(mode, seed)` pair.
pub fn run_suite(mode: Mode, seed: u64) -> VerificationReport {
    let mut r = Runner { claims: Vec::new() };
    claim_t_shape(&mut r);
    claim_t_order3(&mut r);
    claim_u_multiplicity(&mut r);
    claim_u_perm_free(&mut r, mode, seed);
    claim_zigzag_avoidance(&mut r);
    claim_coefficients(&mut r);
    claim_ackermann(&mut r);
    claim_extremal(&mut r);
    claim_formation_greedy(&mut r, mode);
    claim_trees(&mut r, mode, seed);
    claim_double_nesting(&mut r, mode, seed);
    claim_decomposition(&mut r, mode, seed);
    VerificationReport {
        schema_version: SCHEMA_VERSION,
        mode,
        seed,
        claims: r.claims,
    }
}

fn in_size_budget(length: crate::construct::Size) -> bool {
    matches!(length.exact(), Some(n) if n <= SIZE_BUDGET)
}

// ---------------------------------------------------------------------------
// c1 / c2 — shape and order of the skeleton sequences
// ---------------------------------------------------------------------------

fn t_grid() -> Vec<(u64, u64, u64)> {
    let mut grid = Vec::new();
    for rho in [2u64, 3] {
        for i in 1..=3u64 {
            for j in 1..=3u64 {
                grid.push((rho, i, j));
            }
        }
    }
    grid
}

fn claim_t_shape(r: &mut Runner) {
    r.run(
        "c1",
        "T(i,j) has |T| = (i+1)·j·(live blocks), live blocks of length j, \
         multiplicity i+1, and dead-block lengths divisible by rho for i >= 2",
        "rho in {2,3}, i <= 3, j <= 3, size guard 10^6",
        || {
            let mut errors = Vec::new();
            let mut checked = 0usize;
            let mut skipped = 0usize;
            for (rho, i, j) in t_grid() {
                let within = matches!(t_rho_stats(rho, i, j), Ok(st) if in_size_budget(st.length));
                if !within {
                    skipped += 1;
                    continue;
                }
                let t = match t_rho(rho, i, j) {
                    Ok(t) => t,
                    Err(e) => {
                        errors.push(format!("t_rho({rho},{i},{j}): {e}"));
                        continue;
                    }
                };
                checked += 1;
                let live = t.live_block_count();
                if t.len() != (i as usize + 1) * j as usize * live {
                    errors.push(format!(
                        "t_rho({rho},{i},{j}): length {} != (i+1)·j·livebl",
                        t.len()
                    ));
                }
                for b in t.blocks() {
                    if b.live && b.len() != j as usize {
                        errors.push(format!("t_rho({rho},{i},{j}): live block length {}", b.len()));
                    }
                    if i >= 2 && !b.live && b.len() % rho as usize != 0 {
                        errors.push(format!(
                            "t_rho({rho},{i},{j}): dead block length {} not divisible by {rho}",
                            b.len()
                        ));
                    }
                }
                let flat = t.flatten();
                for a in flat.alphabet() {
                    if flat.multiplicity(a) != i as usize + 1 {
                        errors.push(format!("t_rho({rho},{i},{j}): symbol {a} multiplicity"));
                    }
                }
            }
            outcome(
                errors,
                format!("{checked} grid points exact, {skipped} beyond size guard"),
            )
        },
    );
}

fn claim_t_order3(r: &mut Runner) {
    r.run(
        "c2",
        "T(i,j) is an order-3 Davenport-Schinzel sequence",
        "rho in {2,3}, i <= 3, j <= 3, size guard 10^6",
        || {
            let mut errors = Vec::new();
            let mut checked = 0usize;
            let mut skipped = 0usize;
            for (rho, i, j) in t_grid() {
                let within = matches!(t_rho_stats(rho, i, j), Ok(st) if in_size_budget(st.length));
                if !within {
                    skipped += 1;
                    continue;
                }
                match t_rho(rho, i, j) {
                    Ok(t) => {
                        checked += 1;
                        let order = ds_order(&t.flatten());
                        if order > 3 {
                            errors.push(format!("t_rho({rho},{i},{j}): ds_order {order}"));
                        }
                    }
                    Err(e) => errors.push(format!("t_rho({rho},{i},{j}): {e}")),
                }
            }
            outcome(
                errors,
                format!("{checked} grid points with ds_order <= 3, {skipped} skipped"),
            )
        },
    );
}

// ---------------------------------------------------------------------------
// c3 — uniform multiplicities of the all-live sequences
// ---------------------------------------------------------------------------

fn claim_u_multiplicity(r: &mut Runner) {
    r.run(
        "c3",
        "U_s(i,j) has uniform symbol multiplicity mu_{s,i}; mu_{4,i} = 2^i and mu_{5,3} = 24",
        "s in {2,3,4,5}, i <= 3, in-guard j <= 3",
        || {
            let mut errors = Vec::new();
            // Closed forms first: pure recurrence evaluations.
            for i in 0..=3u64 {
                let expect = BigUint::from(2u32).pow(i as u32);
                if mu_s(4, i) != expect {
                    errors.push(format!("mu(4,{i}) != 2^{i}"));
                }
            }
            if mu_s(5, 3) != BigUint::from(24u32) {
                errors.push("mu(5,3) != 24".to_string());
            }
            let mut checked = 0usize;
            let mut skipped = 0usize;
            for s in 2..=5u64 {
                for i in 1..=3u64 {
                    for j in 1..=3u64 {
                        let within =
                            matches!(u_s_stats(s, i, j), Ok(st) if in_size_budget(st.length));
                        if !within {
                            skipped += 1;
                            continue;
                        }
                        let seq = match u_s(s, i, j) {
                            Ok(seq) => seq,
                            Err(e) => {
                                errors.push(format!("u_s({s},{i},{j}): {e}"));
                                continue;
                            }
                        };
                        checked += 1;
                        let mu = mu_s(s, i);
                        let flat = seq.flatten();
                        for a in flat.alphabet() {
                            if BigUint::from(flat.multiplicity(a)) != mu {
                                errors.push(format!(
                                    "u_s({s},{i},{j}): symbol {a} multiplicity {} != mu",
                                    flat.multiplicity(a)
                                ));
                            }
                        }
                    }
                }
            }
            outcome(
                errors,
                format!("closed forms exact; {checked} grid points uniform, {skipped} skipped"),
            )
        },
    );
}

// ---------------------------------------------------------------------------
// c4 — permutation-freeness of U_4 and U_5
// ---------------------------------------------------------------------------

fn claim_u_perm_free(r: &mut Runner, mode: Mode, seed: u64) {
    let sample = match mode {
        Mode::Quick => 100usize,
        Mode::Full => 400,
    };
    let mut skipped_points: Vec<String> = Vec::new();
    r.run(
        "c4",
        "U_4 admits < 5 catenated permutations on every symbol pair; \
         U_5 admits < 6 on sampled 3-subsets",
        "i <= 2, j <= 2",
        || {
            let mut errors = Vec::new();
            let mut checked = 0usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc4);
            for i in 1..=2u64 {
                for j in 1..=2u64 {
                    match u_s(4, i, j) {
                        Ok(seq) => {
                            checked += 1;
                            let flat = seq.flatten();
                            let alpha: Vec<u32> = flat.alphabet().into_iter().collect();
                            for (ai, &a) in alpha.iter().enumerate() {
                                for &b in &alpha[ai + 1..] {
                                    let set: BTreeSet<u32> = [a, b].into_iter().collect();
                                    let f = formation_count(&flat, &set);
                                    if f >= 5 {
                                        errors.push(format!(
                                            "u_s(4,{i},{j}): pair ({a},{b}) forms {f} permutations"
                                        ));
                                    }
                                }
                            }
                        }
                        Err(e) => errors.push(format!("u_s(4,{i},{j}): {e}")),
                    }
                    let within = matches!(u_s_stats(5, i, j), Ok(st) if in_size_budget(st.length));
                    if !within {
                        skipped_points.push(format!("u_s(5,{i},{j})"));
                        continue;
                    }
                    match u_s(5, i, j) {
                        Ok(seq) => {
                            checked += 1;
                            let flat = seq.flatten();
                            let alpha: Vec<u32> = flat.alphabet().into_iter().collect();
                            let triples: Vec<[u32; 3]> = if alpha.len() < 3 {
                                Vec::new()
                            } else if alpha.len() <= 32 {
                                let mut all = Vec::new();
                                for x in 0..alpha.len() {
                                    for y in x + 1..alpha.len() {
                                        for z in y + 1..alpha.len() {
                                            all.push([alpha[x], alpha[y], alpha[z]]);
                                        }
                                    }
                                }
                                all
                            } else {
                                (0..sample)
                                    .map(|_| {
                                        let mut pick = BTreeSet::new();
                                        while pick.len() < 3 {
                                            pick.insert(alpha[rng.gen_range(0..alpha.len())]);
                                        }
                                        let v: Vec<u32> = pick.into_iter().collect();
                                        [v[0], v[1], v[2]]
                                    })
                                    .collect()
                            };
                            for t in triples {
                                let set: BTreeSet<u32> = t.into_iter().collect();
                                let f = formation_count(&flat, &set);
                                if f >= 6 {
                                    errors.push(format!(
                                        "u_s(5,{i},{j}): triple {t:?} forms {f} permutations"
                                    ));
                                }
                            }
                        }
                        Err(e) => errors.push(format!("u_s(5,{i},{j}): {e}")),
                    }
                }
            }
            outcome(errors, format!("{checked} constructions permutation-free"))
        },
    );
    if !skipped_points.is_empty() {
        let detail = format!(
            "{} exceed the materialization budget: {}",
            skipped_points.len(),
            skipped_points.join(", ")
        );
        r.claims.push(Claim {
            id: "c4-corner".to_string(),
            anchor: "U_5 permutation-freeness at grid corners beyond the size budget".to_string(),
            params: "i <= 2, j <= 2".to_string(),
            status: Status::SkippedBudget,
            elapsed_ms: 0,
            detail,
        });
    }
}

// ---------------------------------------------------------------------------
// c5 — zig-zag avoidance
// ---------------------------------------------------------------------------

struct AvoidanceOutcome {
    checked: Vec<String>,
    skipped: Vec<String>,
    errors: Vec<String>,
}

fn check_avoidance(
    pattern: &Sequence,
    hosts: impl IntoIterator<Item = (String, Result<BlockedSequence, String>)>,
) -> AvoidanceOutcome {
    let mut out = AvoidanceOutcome {
        checked: Vec::new(),
        skipped: Vec::new(),
        errors: Vec::new(),
    };
    for (label, host) in hosts {
        match host {
            Ok(h) => {
                let flat = h.flatten();
                if flat.len() > EMBED_HOST_BUDGET {
                    out.skipped.push(format!("{label} ({} occurrences)", flat.len()));
                    continue;
                }
                match embeds(pattern, &flat) {
                    None => out.checked.push(label),
                    Some(e) => out.errors.push(format!(
                        "{label}: pattern embeds via {:?}",
                        e.positions.iter().take(8).collect::<Vec<_>>()
                    )),
                }
            }
            Err(reason) => out.skipped.push(format!("{label} ({reason})")),
        }
    }
    out
}

fn t_pi_host(pi: &Pattern, i: u64, j: u64) -> Result<BlockedSequence, String> {
    match t_pi_stats(pi, i, j) {
        Ok(st) if in_size_budget(st.length) => t_pi(pi, i, j).map_err(|e| e.to_string()),
        Ok(st) => Err(format!("size {:?} beyond budget", st.length)),
        Err(e) => Err(e.to_string()),
    }
}

fn claim_zigzag_avoidance(r: &mut Runner) {
    let m2 = make_pattern(PatternKind::M, 2).expect("M_2 exists");
    let z3 = make_pattern(PatternKind::Z, 3).expect("Z_3 exists");
    let c2 = make_pattern(PatternKind::C, 2).expect("C_2 exists");

    let m2_hosts: Vec<(String, Result<BlockedSequence, String>)> = ["uuuu", "uudu", "uduu", "uddu"]
        .iter()
        .flat_map(|pi_s| {
            let pi = Pattern::from_str(pi_s).expect("valid pattern");
            (1..=3u64).flat_map(move |i| {
                let pi = pi.clone();
                let pi_s = pi_s.to_string();
                (1..=3u64).map(move |j| {
                    (format!("t_pi({pi_s},{i},{j})"), t_pi_host(&pi, i, j))
                })
            })
        })
        .collect();
    let m2_out = check_avoidance(&m2, m2_hosts);

    let upi = Pattern::from_str("uududd").expect("valid pattern");
    let z3_hosts: Vec<(String, Result<BlockedSequence, String>)> = (0..=2u64)
        .flat_map(|i| {
            let upi = upi.clone();
            (1..=2u64).map(move |j| {
                let label = format!("u_pi(uududd,{i},{j})");
                let host = match u_pi_stats(&upi, i, j) {
                    Ok(st) if matches!(st.length.exact(), Some(n) if n <= EMBED_HOST_BUDGET as u128) => {
                        u_pi(&upi, i, j).map_err(|e| e.to_string())
                    }
                    Ok(st) => Err(format!("size {:?} beyond embed budget", st.length)),
                    Err(e) => Err(e.to_string()),
                };
                (label, host)
            })
        })
        .collect();
    let z3_out = check_avoidance(&z3, z3_hosts);

    let tpi = Pattern::from_str("uudd").expect("valid pattern");
    let c2_hosts: Vec<(String, Result<BlockedSequence, String>)> = (1..=3u64)
        .flat_map(|i| {
            let tpi = tpi.clone();
            (1..=3u64).map(move |j| (format!("t_pi(uudd,{i},{j})"), t_pi_host(&tpi, i, j)))
        })
        .collect();
    let c2_out = check_avoidance(&c2, c2_hosts);

    for (id, anchor, out) in [
        (
            "c5-m2",
            "M_2 = abcbabcba is absent from every T(i,j) of the four admissible 4-diagonal shapes",
            &m2_out,
        ),
        (
            "c5-z3",
            "Z_3 (the 4-symbol, 5-run zig-zag) is absent from U(i,j) of shape uududd",
            &z3_out,
        ),
        (
            "c5-c2",
            "C_2 = abcdadbdcd is absent from every T(i,j) of shape uudd",
            &c2_out,
        ),
    ] {
        let errors = out.errors.clone();
        let detail = format!("{} hosts verified pattern-free", out.checked.len());
        r.run(id, anchor, "grids per claim", move || outcome(errors, detail));
        if !out.skipped.is_empty() {
            r.claims.push(Claim {
                id: format!("{id}-corner"),
                anchor: format!("{anchor} — grid corners beyond desk-scale budgets"),
                params: "same grid".to_string(),
                status: Status::SkippedBudget,
                elapsed_ms: 0,
                detail: out.skipped.join(", "),
            });
        }
    }
}

// ---------------------------------------------------------------------------
// c6 — coefficient closed forms
// ---------------------------------------------------------------------------

fn claim_coefficients(r: &mut Runner) {
    r.run(
        "c6",
        "K(3,i) = 2i+2, K(4,i) = 10·2^i − 4(i+2), fea(s,i) = C(i+s−2, s−2) − 1",
        "i <= 20 for K; s <= 8, i <= 30 for fea",
        || {
            let mut errors = Vec::new();
            for i in 1..=20u32 {
                match coefficient(CoeffKind::K, 3, i, None) {
                    Ok(v) if v == BigUint::from(2 * i as u64 + 2) => {}
                    Ok(v) => errors.push(format!("K(3,{i}) = {v}")),
                    Err(e) => errors.push(format!("K(3,{i}): {e}")),
                }
                let expect =
                    BigUint::from(10u32) * BigUint::from(2u32).pow(i) - BigUint::from(4 * (i as u64 + 2));
                match coefficient(CoeffKind::K, 4, i, None) {
                    Ok(v) if v == expect => {}
                    Ok(v) => errors.push(format!("K(4,{i}) = {v}, expected {expect}")),
                    Err(e) => errors.push(format!("K(4,{i}): {e}")),
                }
            }
            for s in 2..=8u32 {
                for i in 1..=30u32 {
                    let expect =
                        binomial(i as u64 + s as u64 - 2, s as u64 - 2) - BigUint::one();
                    match coefficient(CoeffKind::Fea, s, i, None) {
                        Ok(v) if v == expect => {}
                        Ok(v) => errors.push(format!("fea({s},{i}) = {v}, expected {expect}")),
                        Err(e) => errors.push(format!("fea({s},{i}): {e}")),
                    }
                }
            }
            outcome(errors, "all closed forms match the recurrences".to_string())
        },
    );
}

// ---------------------------------------------------------------------------
// c7 — Ackermann table fixtures
// ---------------------------------------------------------------------------

fn claim_ackermann(r: &mut Runner) {
    r.run(
        "c7",
        "a(1,j) = 2^j, a(i,1) = 2, row_inverse inverts rows, alpha(8,8) = 1, alpha(9,9) = 2",
        "j <= 20, i <= 10",
        || {
            let mut errors = Vec::new();
            let table = AckTable::with_cap_bits(4096);
            for j in 1..=20u64 {
                match table.ack(1, j) {
                    Ok(v) => {
                        if v.exact() != Some(&BigUint::from(2u32).pow(j as u32)) {
                            errors.push(format!("a(1,{j}) != 2^{j}"));
                        }
                    }
                    Err(e) => errors.push(format!("a(1,{j}): {e}")),
                }
            }
            for i in 1..=10u64 {
                match table.ack(i, 1) {
                    Ok(v) => {
                        if v.exact() != Some(&BigUint::from(2u32)) {
                            errors.push(format!("a({i},1) != 2"));
                        }
                    }
                    Err(e) => errors.push(format!("a({i},1): {e}")),
                }
            }
            let mut inverted = 0usize;
            for i in 1..=4u64 {
                for j in 1..=20u64 {
                    let Ok(v) = table.ack(i, j) else { continue };
                    let Some(m) = v.exact().and_then(|b| u64::try_from(b).ok()) else {
                        continue;
                    };
                    match table.row_inverse(i, m) {
                        Ok(back) if back == j => inverted += 1,
                        Ok(back) => {
                            errors.push(format!("row_inverse({i}, a({i},{j})) = {back}"))
                        }
                        Err(e) => errors.push(format!("row_inverse({i},{m}): {e}")),
                    }
                }
            }
            match table.alpha(8, 8) {
                Ok(1) => {}
                other => errors.push(format!("alpha(8,8) = {other:?}")),
            }
            match table.alpha(9, 9) {
                Ok(2) => {}
                other => errors.push(format!("alpha(9,9) = {other:?}")),
            }
            outcome(
                errors,
                format!("rows exact, {inverted} inverse points verified"),
            )
        },
    );
}

// ---------------------------------------------------------------------------
// c8 — extremal oracle against closed forms
// ---------------------------------------------------------------------------

fn claim_extremal(r: &mut Runner) {
    r.run(
        "c8",
        "Ex(aba, n) = n, Ex(abab, n) = 2n−1, Ex(abba, n) = 3n−2; \
         blocked Ex(abab, n, m) = Ex(abba, n, m) = 2n+m−2",
        "n <= 4 (n <= 3 for abba), m <= 4",
        || {
            let mut errors = Vec::new();
            let budget = SearchBudget::default();
            let fam = |word: &[u32]| PatternFamily::singleton(Sequence::new(word.to_vec()));
            let aba = fam(&[1, 2, 1]);
            let abab = fam(&[1, 2, 1, 2]);
            let abba = fam(&[1, 2, 2, 1]);
            for n in 1..=4usize {
                match ex_bruteforce(&aba, n, 2, &budget) {
                    Ok(res) if res.exact && res.max == n => {}
                    other => errors.push(format!("Ex(aba,{n}): {other:?}")),
                }
                match ex_bruteforce(&abab, n, 2, &budget) {
                    Ok(res) if res.exact && res.max == 2 * n - 1 => {}
                    other => errors.push(format!("Ex(abab,{n}): {other:?}")),
                }
            }
            for n in 1..=3usize {
                match ex_bruteforce(&abba, n, 2, &budget) {
                    Ok(res) if res.exact && res.max == 3 * n - 2 => {}
                    other => errors.push(format!("Ex(abba,{n}): {other:?}")),
                }
            }
            for n in 1..=3usize {
                for m in 1..=4usize {
                    let expect = (2 * n + m).saturating_sub(2).max(1).min(n * m);
                    // The closed form 2n+m−2 applies once both parameters are
                    // large enough for the pattern to bind; tiny corners are
                    // capped by the trivial bound n·m and the single-block
                    // maximum n.
                    let expect = if n == 1 { m.min(expect) } else { expect };
                    for (name, f) in [("abab", &abab), ("abba", &abba)] {
                        match ex_blocked_bruteforce(f, n, m, &budget) {
                            Ok(res) if res.exact && res.max == expect => {}
                            other => {
                                errors.push(format!("Ex({name},{n},{m}) expected {expect}: {other:?}"))
                            }
                        }
                    }
                }
            }
            outcome(errors, "oracle matches every closed form".to_string())
        },
    );
}

// ---------------------------------------------------------------------------
// c9 — greedy formation counting against brute force
// ---------------------------------------------------------------------------

fn brute_formation(word: &[u32], a: &BTreeSet<u32>) -> usize {
    // Maximum number of disjoint consecutive segments, scanning from the
    // front, each containing every symbol of `a` at least once.  Dynamic
    // program over start positions; independent of the greedy implementation.
    let n = word.len();
    let mut best = vec![0usize; n + 1];
    for start in (0..n).rev() {
        let mut seen: BTreeSet<u32> = BTreeSet::new();
        let mut val = 0usize;
        for (offset, &sym) in word[start..].iter().enumerate() {
            if a.contains(&sym) {
                seen.insert(sym);
            }
            if seen.len() == a.len() {
                val = val.max(1 + best[start + offset + 1]);
            }
        }
        best[start] = val;
    }
    best[0]
}

fn claim_formation_greedy(r: &mut Runner, mode: Mode) {
    let max_len = match mode {
        Mode::Quick => 8usize,
        Mode::Full => 10,
    };
    r.run(
        "c9",
        "greedy formation counting equals the brute-force segment-split maximum",
        &format!("all words over 3 symbols, length <= {max_len}"),
        || {
            let mut errors = Vec::new();
            let mut checked = 0u64;
            let subsets: Vec<BTreeSet<u32>> = (1u32..8)
                .map(|mask| (1..=3u32).filter(|s| mask >> (s - 1) & 1 == 1).collect())
                .collect();
            for len in 1..=max_len {
                let mut word = vec![1u32; len];
                loop {
                    for a in &subsets {
                        if !a.iter().all(|s| word.contains(s)) {
                            continue;
                        }
                        checked += 1;
                        let greedy = formation_count(&Sequence::new(word.clone()), a);
                        let brute = brute_formation(&word, a);
                        if greedy != brute {
                            errors.push(format!(
                                "word {word:?} subset {a:?}: greedy {greedy} vs brute {brute}"
                            ));
                        }
                    }
                    // Next word in lexicographic order.
                    let mut pos = len;
                    while pos > 0 && word[pos - 1] == 3 {
                        word[pos - 1] = 1;
                        pos -= 1;
                    }
                    if pos == 0 {
                        break;
                    }
                    word[pos - 1] += 1;
                }
            }
            outcome(errors, format!("{checked} (word, subset) pairs agree"))
        },
    );
}

// ---------------------------------------------------------------------------
// c10 — derivation-tree anatomy
// ---------------------------------------------------------------------------

/// Random blocked sequence: every symbol appears in at least `min_mult`
/// distinct blocks, no block repeats a symbol, no block is empty.
fn random_blocked(
    rng: &mut ChaCha8Rng,
    max_blocks: usize,
    max_alpha: usize,
    min_mult: usize,
) -> BlockedSequence {
    loop {
        let m = rng.gen_range(min_mult.max(2)..=max_blocks);
        let alpha = rng.gen_range(1..=max_alpha.min(m * 3));
        let mut blocks: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); m];
        for sym in 1..=alpha as u32 {
            let copies = rng.gen_range(min_mult..=min_mult + 2).min(m);
            while blocks.iter().filter(|b| b.contains(&sym)).count() < copies {
                blocks[rng.gen_range(0..m)].insert(sym);
            }
        }
        if blocks.iter().any(|b| b.is_empty()) {
            continue;
        }
        let blocks = blocks
            .into_iter()
            .map(|set| Block {
                symbols: set.into_iter().collect(),
                live: true,
            })
            .collect();
        return BlockedSequence::new(blocks).canonical_form();
    }
}

fn claim_trees(r: &mut Runner, mode: Mode, seed: u64) {
    let instances = match mode {
        Mode::Quick => 10usize,
        Mode::Full => 40,
    };
    r.run(
        "c10",
        "base trees have 3 nodes; 2-block sequences have no feathers; \
         dove feathers <= |S| − 2·alphabet; Ackermann-tree projection heights <= i+1",
        &format!("{instances} seeded instances, m <= 64, alphabet <= 16, i <= 3"),
        || {
            let mut errors = Vec::new();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc10);
            for inst in 0..instances {
                let two = random_blocked(&mut rng, 2, 4, 2);
                match canonical_tree(&two) {
                    Ok(t) => {
                        if t.nodes.len() != 3 {
                            errors.push(format!("instance {inst}: base tree {} nodes", t.nodes.len()));
                        }
                        for kind in [FeatherKind::Dove, FeatherKind::Hawk] {
                            match count_feathers(&two, &t, kind) {
                                Ok(0) => {}
                                Ok(k) => errors
                                    .push(format!("instance {inst}: 2-block {kind:?} feathers {k}")),
                                Err(e) => errors.push(format!("instance {inst}: {e}")),
                            }
                        }
                    }
                    Err(e) => errors.push(format!("instance {inst}: {e}")),
                }
                let s = random_blocked(&mut rng, 64, 16, 2);
                match canonical_tree(&s) {
                    Ok(t) => match count_feathers(&s, &t, FeatherKind::Dove) {
                        Ok(doves) => {
                            let flat = s.flatten();
                            let bound = flat.len().saturating_sub(2 * flat.alphabet_size());
                            if doves > bound {
                                errors.push(format!(
                                    "instance {inst}: dove feathers {doves} > {bound}"
                                ));
                            }
                        }
                        Err(e) => errors.push(format!("instance {inst}: {e}")),
                    },
                    Err(e) => errors.push(format!("instance {inst}: {e}")),
                }
                let i = rng.gen_range(1..=3u64);
                match ackermann_tree(&s, i) {
                    Ok(t) => {
                        for a in s.flatten().alphabet() {
                            match project_tree(&t, a) {
                                Ok(p) => {
                                    if p.height() > i as usize + 1 {
                                        errors.push(format!(
                                            "instance {inst}: symbol {a} projection height {} > {}",
                                            p.height(),
                                            i + 1
                                        ));
                                    }
                                }
                                Err(e) => errors.push(format!("instance {inst}: {e}")),
                            }
                        }
                    }
                    Err(e) => errors.push(format!("instance {inst}: {e}")),
                }
            }
            outcome(errors, format!("{instances} seeded instances verified"))
        },
    );
}

// ---------------------------------------------------------------------------
// c11 — double nesting under leaf substitution
// ---------------------------------------------------------------------------

fn claim_double_nesting(r: &mut Runner, mode: Mode, seed: u64) {
    let target = match mode {
        Mode::Quick => 50usize,
        Mode::Full => 200,
    };
    r.run(
        "c11",
        "substituting doubled blocks for every other leaf double-nests each symbol \
         pair at a leaf that is neither wingtip nor feather in either projection",
        &format!("{target} seeded substitution instances"),
        || {
            let mut errors = Vec::new();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc11);
            let mut instances = 0usize;
            let mut attempts = 0usize;
            while instances < target && attempts < target * 200 {
                attempts += 1;
                let s = random_blocked(&mut rng, 10, 5, 4);
                let tree = match canonical_tree(&s) {
                    Ok(t) => t,
                    Err(e) => {
                        errors.push(format!("tree: {e}"));
                        continue;
                    }
                };
                for (leaf_idx, &leaf) in tree.leaves.iter().enumerate() {
                    if instances >= target {
                        break;
                    }
                    let Some(block) = tree.nodes[leaf].block.clone() else {
                        continue;
                    };
                    let syms = block.symbols.clone();
                    'pairs: for (ai, &a) in syms.iter().enumerate() {
                        for &b in &syms[ai + 1..] {
                            let pa = match project_tree(&tree, a) {
                                Ok(p) => p,
                                Err(_) => continue,
                            };
                            let pb = match project_tree(&tree, b) {
                                Ok(p) => p,
                                Err(_) => continue,
                            };
                            if pa.is_wingtip(leaf)
                                || pb.is_wingtip(leaf)
                                || pa.is_feather(leaf)
                                || pb.is_feather(leaf)
                            {
                                continue;
                            }
                            // Substitute two copies of each other leaf's block;
                            // the chosen leaf keeps its single block.
                            let mut new_blocks = Vec::new();
                            let mut v_index = 0usize;
                            for (u_idx, &u) in tree.leaves.iter().enumerate() {
                                let ub = tree.nodes[u]
                                    .block
                                    .clone()
                                    .expect("leaves carry blocks");
                                if u_idx == leaf_idx {
                                    v_index = new_blocks.len();
                                    new_blocks.push(ub);
                                } else {
                                    new_blocks.push(ub.clone());
                                    new_blocks.push(ub);
                                }
                            }
                            let substituted = BlockedSequence::new(new_blocks);
                            match double_nested(&substituted, a, b, v_index) {
                                Ok(true) => instances += 1,
                                Ok(false) => errors.push(format!(
                                    "pair ({a},{b}) at leaf {leaf_idx} of {s}: not double-nested"
                                )),
                                Err(e) => errors.push(format!("double_nested: {e}")),
                            }
                            if instances >= target {
                                break 'pairs;
                            }
                        }
                    }
                }
            }
            if instances < target {
                errors.push(format!(
                    "only assembled {instances}/{target} qualifying instances"
                ));
            }
            outcome(errors, format!("{instances} substitutions double-nested"))
        },
    );
}

// ---------------------------------------------------------------------------
// c12 — decomposition bookkeeping
// ---------------------------------------------------------------------------

fn claim_decomposition(r: &mut Runner, mode: Mode, seed: u64) {
    let target = match mode {
        Mode::Quick => 100usize,
        Mode::Full => 500,
    };
    r.run(
        "c12",
        "decomposition bookkeeping: n = n_hat + sum of local alphabets, \
         |S| = |local| + |global|, and the contracted sequence embeds in the global part",
        &format!("{target} seeded random blocked sequences"),
        || {
            let mut errors = Vec::new();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc12);
            for inst in 0..target {
                let s = random_blocked(&mut rng, 24, 12, 2);
                let m = s.block_count();
                let max_pow = usize::BITS - 1 - m.leading_zeros();
                let width = 1usize << rng.gen_range(0..=max_pow);
                let partition = match uniform_partition(m, width) {
                    Ok(p) => p,
                    Err(e) => {
                        errors.push(format!("instance {inst}: partition: {e}"));
                        continue;
                    }
                };
                let d = match decompose(&s, &partition) {
                    Ok(d) => d,
                    Err(e) => {
                        errors.push(format!("instance {inst}: {e}"));
                        continue;
                    }
                };
                let n = s.alphabet_size();
                let local_sum: usize = d.n_check.iter().sum();
                if d.n_hat + local_sum != n {
                    errors.push(format!(
                        "instance {inst}: n_hat {} + locals {local_sum} != {n}",
                        d.n_hat
                    ));
                }
                if d.local_all.len() + d.global.len() != s.len() {
                    errors.push(format!(
                        "instance {inst}: |local| {} + |global| {} != {}",
                        d.local_all.len(),
                        d.global.len(),
                        s.len()
                    ));
                }
                if !d.contracted.is_empty()
                    && embeds(&d.contracted.flatten(), &d.global.flatten()).is_none()
                {
                    errors.push(format!(
                        "instance {inst}: contracted sequence does not embed in global part"
                    ));
                }
            }
            outcome(errors, format!("{target} decompositions balanced"))
        },
    );
}
