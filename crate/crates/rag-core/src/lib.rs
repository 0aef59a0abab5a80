//! Compiler, validator, provenance engine, and partial-order planner for the
//! Recipe Action-Graph DSL.
//!
//! A `.rag` document compiles to a directed acyclic graph of ingredient
//! roots and Process / Transfer / Plate / Plugin actions. On top of that IR
//! this crate provides:
//!
//! - `lexer` / `parser` / `printer` — the concrete textual surface syntax,
//!   with source-located diagnostics and a canonical pretty-printer;
//! - `lexicon` — the versioned technique registry and normalization tables;
//! - `validate` — the global axioms (acyclicity, type safety, single output,
//!   root rule, transfer shape, environment computability, from-before-to
//!   ordering, interjection sanity, plugin closure);
//! - `provenance` — backward/forward lineage over implicit intermediate
//!   components and environment histories;
//! - `plan` — linearizations, earliest-start schedules with interjection
//!   expansion, contention reports, and a brute-force oracle;
//! - `compose` — plugin import and expansion;
//! - `export` — canonical JSON IR and Graphviz DOT.

pub mod compose;
pub mod diag;
pub mod export;
pub mod ir;
pub mod lexer;
pub mod lexicon;
pub mod parser;
pub mod plan;
pub mod printer;
pub mod provenance;
pub mod span;
pub mod validate;

/// Edit distance used for "did you mean" hints (threshold 2 at call sites).
pub(crate) fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            cur[j + 1] = (prev[j + 1] + 1).min(cur[j] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::levenshtein;

    #[test]
    fn edit_distance_basics() {
        assert_eq!(levenshtein("bacon", "bacon"), 0);
        assert_eq!(levenshtein("bcon", "bacon"), 1);
        assert_eq!(levenshtein("bqqqn", "bacon"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
    }
}
