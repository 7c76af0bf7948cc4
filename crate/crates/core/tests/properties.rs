//! Randomized property tests for the core sequence operations.

use std::collections::BTreeSet;

use proptest::prelude::*;

use dsforge::containment::{ds_order, embeds, embeds_order_iso};
use dsforge::patterns::PatternFamily;
use dsforge::seqcore::{
    canonical_form, filter_occurrences, greedy_parse, is_k_sparse, make_k_sparse, project,
    FilterPolicy, Sequence,
};

fn word() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(1u32..=5, 0..30)
}

fn subset() -> impl Strategy<Value = BTreeSet<u32>> {
    prop::collection::btree_set(1u32..=5, 0..5)
}

proptest! {
    #[test]
    fn canonical_form_idempotent(w in word()) {
        let s = Sequence::new(w);
        let once = canonical_form(&s);
        prop_assert_eq!(once.len(), s.len());
        prop_assert_eq!(once.alphabet_size(), s.alphabet_size());
        prop_assert!(once.is_canonical());
        prop_assert_eq!(canonical_form(&once), once);
    }

    #[test]
    fn make_k_sparse_output_is_sparse(w in word(), k in 1usize..5) {
        let s = Sequence::new(w);
        let sparse = make_k_sparse(&s, k);
        prop_assert!(is_k_sparse(&sparse, k));
        if is_k_sparse(&s, k) {
            prop_assert_eq!(sparse, s);
        }
    }

    #[test]
    fn projection_composes_by_intersection(w in word(), a in subset(), b in subset()) {
        let s = Sequence::new(w);
        let both: BTreeSet<u32> = a.intersection(&b).copied().collect();
        prop_assert_eq!(project(&project(&s, &a), &b), project(&s, &both));
    }

    #[test]
    fn keep_every_reduces_multiplicity_to_ceiling(w in word(), k in 1usize..5) {
        let s = Sequence::new(w);
        let kept = filter_occurrences(&s, FilterPolicy::KeepEvery(k));
        for a in s.alphabet() {
            let c = s.multiplicity(a);
            prop_assert_eq!(kept.multiplicity(a), c.div_ceil(k));
        }
    }

    #[test]
    fn greedy_parse_reconstructs_input(w in word()) {
        let s = Sequence::new(w.clone());
        let family = PatternFamily::singleton(Sequence::new(vec![1, 2, 1]));
        let parsed = greedy_parse(&s, &family, Some(8)).unwrap();
        let mut rebuilt = Vec::new();
        for (interval, sep) in &parsed {
            rebuilt.extend_from_slice(interval.symbols());
            if let Some(x) = sep {
                rebuilt.push(*x);
            }
        }
        prop_assert_eq!(rebuilt, w);
    }

    #[test]
    fn pair_projection_never_increases_order(w in word()) {
        let s = Sequence::new(w);
        let order = ds_order(&s);
        let alpha: Vec<u32> = s.alphabet().into_iter().collect();
        for (i, &a) in alpha.iter().enumerate() {
            for &b in &alpha[i + 1..] {
                let pair: BTreeSet<u32> = [a, b].into_iter().collect();
                prop_assert!(ds_order(&project(&s, &pair)) <= order);
            }
        }
    }

    #[test]
    fn order_iso_witness_is_also_plain_witness(w in word(), p in prop::collection::vec(1u32..=3, 1..6)) {
        let host = Sequence::new(w);
        let pattern = canonical_form(&Sequence::new(p));
        if embeds_order_iso(&pattern, &host).is_some() {
            prop_assert!(embeds(&pattern, &host).is_some());
        }
    }

    #[test]
    fn embedding_is_monotone_under_extension(w in word(), tail in word(), p in prop::collection::vec(1u32..=3, 1..6)) {
        let pattern = Sequence::new(p);
        let host = Sequence::new(w.clone());
        if embeds(&pattern, &host).is_some() {
            let mut extended = w;
            extended.extend(tail);
            prop_assert!(embeds(&pattern, &Sequence::new(extended)).is_some());
        }
    }
}
