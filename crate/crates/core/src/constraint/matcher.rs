//! Clause satisfaction counting.
//!
//! A word clause counts occurrences of its lemma among the content lemmas.
//! A phrase clause counts non-overlapping in-order occurrences of its literals
//! in the full lemma sequence, where consecutive literals may be separated by
//! at most `gap` other tokens. Matches are selected greedily by earliest end
//! position, which yields the largest possible set of pairwise disjoint spans.

use super::normalize::NormalizedSequence;
use super::{Clause, ClauseKind, ConstraintSet};

/// Default number of tokens allowed between consecutive phrase literals.
pub const DEFAULT_GAP: usize = 3;

pub fn count_clause(clause: &Clause, seq: &NormalizedSequence, gap: usize) -> usize {
    match clause.kind {
        ClauseKind::Word => {
            let lit = &clause.literals[0];
            seq.content_lemmas.iter().filter(|l| *l == lit).count()
        }
        ClauseKind::Phrase => phrase_spans(&clause.literals, &seq.full_lemmas, gap).len(),
    }
}

/// Inclusive `(start, end)` spans of the greedily selected phrase matches, in
/// increasing order.
pub fn phrase_spans(literals: &[String], tokens: &[String], gap: usize) -> Vec<(usize, usize)> {
    let n = tokens.len();
    let k = literals.len();
    let mut spans = Vec::new();
    if k == 0 || n < k {
        return spans;
    }
    let mut cursor = 0;
    // reach[i][p]: a chain for literals[..=i] starting at or after `cursor`
    // ends at p.
    let mut reach = vec![vec![false; n]; k];
    while cursor < n {
        for row in reach.iter_mut() {
            row.iter_mut().for_each(|r| *r = false);
        }
        for p in cursor..n {
            reach[0][p] = tokens[p] == literals[0];
        }
        for i in 1..k {
            for p in cursor..n {
                if tokens[p] != literals[i] {
                    continue;
                }
                let lo = p.saturating_sub(gap + 1).max(cursor);
                reach[i][p] = (lo..p).any(|q| reach[i - 1][q]);
            }
        }
        let Some(end) = (cursor..n).find(|&p| reach[k - 1][p]) else {
            break;
        };
        let mut pos = end;
        for i in (0..k - 1).rev() {
            let lo = pos.saturating_sub(gap + 1).max(cursor);
            pos = (lo..pos)
                .rev()
                .find(|&q| reach[i][q])
                .expect("chain predecessor exists");
        }
        spans.push((pos, end));
        cursor = end + 1;
    }
    spans
}

/// Per-clause counts for one sequence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClauseCounts {
    /// Indexed by clause id.
    pub per_clause: Vec<usize>,
    /// Total matches against the above-level companion clauses.
    pub above_level: usize,
}

impl ClauseCounts {
    pub fn total(&self) -> usize {
        self.per_clause.iter().sum()
    }

    /// Number of clauses matched at least once.
    pub fn distinct(&self) -> usize {
        self.per_clause.iter().filter(|&&c| c > 0).count()
    }
}

pub fn count_all(set: &ConstraintSet, seq: &NormalizedSequence, gap: usize) -> ClauseCounts {
    ClauseCounts {
        per_clause: set
            .clauses()
            .iter()
            .map(|c| count_clause(c, seq, gap))
            .collect(),
        above_level: set
            .above_level()
            .iter()
            .map(|c| count_clause(c, seq, gap))
            .sum(),
    }
}
