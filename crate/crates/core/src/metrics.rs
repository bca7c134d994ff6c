//! Target-vocabulary frequency and diversity of generated outputs.
//!
//! For outputs `seq_1..seq_n` and a band's clauses `C_1..C_m`:
//!
//! - objective: `Σ_j Σ_k count(C_j, seq_k)`
//! - frequency: objective divided by the total number of surface tokens
//! - diversity: share of clauses matched at least once
//!
//! A phrase match counts once, however many literals it spans. Token totals
//! ignore tokens made only of punctuation.

use std::fmt::Write as _;

use crate::constraint::{count_all, ConstraintSet, NormalizedSequence};
use crate::error::{Error, Result};
use crate::level::Band;

/// Total clause matches over a collection of outputs.
pub fn objective(outputs: &[NormalizedSequence], set: &ConstraintSet, gap: usize) -> u64 {
    outputs
        .iter()
        .map(|s| count_all(set, s, gap).total() as u64)
        .sum()
}

pub fn frequency(outputs: &[NormalizedSequence], set: &ConstraintSet, gap: usize) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::EmptyInput("outputs"));
    }
    let tokens: usize = outputs.iter().map(|s| s.token_count).sum();
    if tokens == 0 {
        return Err(Error::EmptyInput("generated tokens"));
    }
    Ok(objective(outputs, set, gap) as f64 / tokens as f64)
}

pub fn diversity(outputs: &[NormalizedSequence], set: &ConstraintSet, gap: usize) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::EmptyInput("outputs"));
    }
    if set.m() == 0 {
        return Err(Error::EmptyInput("constraint set"));
    }
    Ok(matched_clauses(outputs, set, gap).iter().filter(|&&b| b).count() as f64 / set.m() as f64)
}

/// `true` for every clause matched somewhere in `outputs`.
pub fn matched_clauses(outputs: &[NormalizedSequence], set: &ConstraintSet, gap: usize) -> Vec<bool> {
    let mut hit = vec![false; set.m()];
    for s in outputs {
        for (h, c) in hit.iter_mut().zip(count_all(set, s, gap).per_clause) {
            *h |= c > 0;
        }
    }
    hit
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandScore {
    pub band: Band,
    pub frequency: f64,
    pub diversity: f64,
    pub objective: u64,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<BandScore>,
    pub sequences: usize,
    pub tokens: usize,
}

pub const REPORT_HEADER: &str = "band,frequency,diversity,objective,m,sequences,tokens";

/// Scores the outputs against one constraint set per band, in set order.
pub fn evaluate(outputs: &[NormalizedSequence], sets: &[ConstraintSet], gap: usize) -> Result<EvalReport> {
    let rows = sets
        .iter()
        .map(|set| {
            Ok(BandScore {
                band: set.band(),
                frequency: frequency(outputs, set, gap)?,
                diversity: diversity(outputs, set, gap)?,
                objective: objective(outputs, set, gap),
                m: set.m(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(EvalReport {
        rows,
        sequences: outputs.len(),
        tokens: outputs.iter().map(|s| s.token_count).sum(),
    })
}

impl EvalReport {
    pub fn row(&self, band: Band) -> Option<&BandScore> {
        self.rows.iter().find(|r| r.band == band)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.band, r.frequency, r.diversity, r.objective, r.m, self.sequences, self.tokens
            );
        }
        out
    }

    /// Aligned plain-text table with six-decimal ratios.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<5} {:>10} {:>10} {:>10} {:>6}\n",
            "band", "frequency", "diversity", "objective", "m"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<5} {:>10.6} {:>10.6} {:>10} {:>6}",
                r.band.as_str(),
                r.frequency,
                r.diversity,
                r.objective,
                r.m
            );
        }
        let _ = writeln!(out, "sequences: {}  tokens: {}", self.sequences, self.tokens);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{Clause, Normalizer, DEFAULT_GAP};
    use proptest::prelude::*;

    fn set(band: Band, clauses: &[&str]) -> ConstraintSet {
        let clauses = clauses
            .iter()
            .enumerate()
            .map(|(i, c)| Clause::new(i, c.split(' ').map(String::from).collect()).unwrap())
            .collect();
        ConstraintSet::new(band, clauses, vec![]).unwrap()
    }

    fn seqs(texts: &[&str]) -> Vec<NormalizedSequence> {
        let n = Normalizer::new();
        texts.iter().map(|t| n.normalize(t).unwrap()).collect()
    }

    #[test]
    fn ratio_examples() {
        let s = set(Band::A, &["cat", "dog", "look up", "tree"]);
        assert_eq!(seqs(&["cat , dog ."])[0].token_count, 2);
        let out = seqs(&["the cat saw a dog today", "cat went home now"]);
        assert_eq!(objective(&out, &s, DEFAULT_GAP), 3);
        assert_eq!(frequency(&out, &s, DEFAULT_GAP).unwrap(), 0.3);
        assert_eq!(diversity(&out, &s, DEFAULT_GAP).unwrap(), 0.5);
        let none = seqs(&["nothing here"]);
        assert_eq!(frequency(&none, &s, DEFAULT_GAP).unwrap(), 0.0);
        assert_eq!(objective(&none, &s, DEFAULT_GAP), 0);
        let all = seqs(&["cat dog tree, look it up"]);
        assert_eq!(diversity(&all, &s, DEFAULT_GAP).unwrap(), 1.0);
    }

    #[test]
    fn phrase_counts_once() {
        let s = set(Band::A, &["look up"]);
        let out = seqs(&["look up"]);
        assert_eq!(frequency(&out, &s, DEFAULT_GAP).unwrap(), 0.5);
    }

    #[test]
    fn errors() {
        let s = set(Band::A, &["cat"]);
        assert!(frequency(&[], &s, 3).is_err());
        assert!(frequency(&[NormalizedSequence::default()], &s, 3).is_err());
        let empty = set(Band::A, &[]);
        assert!(diversity(&seqs(&["cat"]), &empty, 3).is_err());
    }

    #[test]
    fn band_a_literals_score_zero_in_band_c() {
        let a = set(Band::A, &["cat", "dog", "look up"]);
        let c = set(Band::C, &["paradigm", "scrutiny", "elaborate on"]);
        let out = seqs(&["cat dog", "look it up dog"]);
        assert!(frequency(&out, &a, 3).unwrap() > 0.0);
        assert_eq!(frequency(&out, &c, 3).unwrap(), 0.0);
    }

    #[test]
    fn report_formats_agree() {
        let sets = [set(Band::A, &["cat"]), set(Band::B, &["journey"]), set(Band::C, &["paradigm"])];
        let r = evaluate(&seqs(&["a cat on a journey", "cat"]), &sets, 3).unwrap();
        assert_eq!(r.rows.len(), 3);
        let csv = r.to_csv();
        let table = r.to_table();
        for (line, row) in csv.lines().skip(1).zip(table.lines().skip(1)) {
            let c: Vec<f64> = line.split(',').skip(1).take(2).map(|v| v.parse().unwrap()).collect();
            let t: Vec<f64> = row.split_whitespace().skip(1).take(2).map(|v| v.parse().unwrap()).collect();
            assert!((c[0] - t[0]).abs() < 5e-7 && (c[1] - t[1]).abs() < 5e-7);
        }
    }

    const WORDS: [&str; 6] = ["cat", "dog", "look", "up", "run", "sun"];

    fn arb_outputs() -> impl Strategy<Value = Vec<Vec<usize>>> {
        prop::collection::vec(prop::collection::vec(0..WORDS.len(), 1..8), 1..6)
    }

    fn to_seqs(raw: &[Vec<usize>]) -> Vec<NormalizedSequence> {
        let n = Normalizer::new().with_lexicon(WORDS);
        raw.iter()
            .map(|r| n.normalize(&r.iter().map(|&i| WORDS[i]).collect::<Vec<_>>().join(" ")).unwrap())
            .collect()
    }

    proptest! {
        #[test]
        fn diversity_matches_membership_oracle(raw in arb_outputs()) {
            let s = set(Band::A, &["cat", "dog", "look up", "sun"]);
            let out = to_seqs(&raw);
            // A clause is hit iff its literals occur in order within the gap.
            let hit = |clause: &[&str]| raw.iter().any(|r| {
                let toks: Vec<&str> = r.iter().map(|&i| WORDS[i]).collect();
                (0..toks.len()).any(|i| {
                    if toks[i] != clause[0] { return false; }
                    let mut pos = i;
                    clause[1..].iter().all(|lit| {
                        match (pos + 1..toks.len().min(pos + 2 + 3)).find(|&j| toks[j] == *lit) {
                            Some(j) => { pos = j; true }
                            None => false,
                        }
                    })
                })
            });
            let expected = [vec!["cat"], vec!["dog"], vec!["look", "up"], vec!["sun"]]
                .iter().filter(|c| hit(c)).count() as f64 / 4.0;
            prop_assert_eq!(diversity(&out, &s, 3).unwrap(), expected);
        }

        #[test]
        fn permutation_invariance_and_monotonicity(raw in arb_outputs(), extra in arb_outputs()) {
            let s = set(Band::A, &["cat", "dog", "look up", "sun"]);
            let out = to_seqs(&raw);
            let mut rev = out.clone();
            rev.reverse();
            prop_assert_eq!(frequency(&out, &s, 3).unwrap(), frequency(&rev, &s, 3).unwrap());
            prop_assert_eq!(diversity(&out, &s, 3).unwrap(), diversity(&rev, &s, 3).unwrap());
            let mut longer = out.clone();
            longer.extend(to_seqs(&extra));
            prop_assert!(diversity(&longer, &s, 3).unwrap() >= diversity(&out, &s, 3).unwrap());
            prop_assert_eq!(objective(&longer, &s, 3), objective(&out, &s, 3) + objective(&to_seqs(&extra), &s, 3));
            let tokens: usize = out.iter().map(|q| q.token_count).sum();
            prop_assert_eq!(objective(&out, &s, 3) as f64, (frequency(&out, &s, 3).unwrap() * tokens as f64).round());
        }
    }
}
