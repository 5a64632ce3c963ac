//! Label-only sequence predictors used as comparison baselines.
//!
//! All of them are deterministic and see only the event labels of a case, so
//! they predict neither durations nor features. Ties between candidate labels
//! resolve to the lexicographically smallest one.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::event_log::{EventLog, END};
use crate::network::Termination;

type Counts = BTreeMap<String, usize>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeqPredictor {
    Markov(Markov),
    Akom(Akom),
    Lz78(Lz78),
    Ppm(Ppm),
}

impl SeqPredictor {
    /// Next label after `prefix`, or `None` when the predictor has nothing to
    /// go on.
    pub fn next(&self, prefix: &[String]) -> Option<String> {
        match self {
            SeqPredictor::Markov(m) => m.next(prefix),
            SeqPredictor::Akom(m) => m.next(prefix),
            SeqPredictor::Lz78(m) => m.next(prefix),
            SeqPredictor::Ppm(m) => m.next(prefix),
        }
    }

    pub fn name(&self) -> String {
        match self {
            SeqPredictor::Markov(_) => "markov".into(),
            SeqPredictor::Akom(m) => format!("akom({})", m.order),
            SeqPredictor::Lz78(_) => "lz78".into(),
            SeqPredictor::Ppm(m) => format!("ppm({})", m.max_order),
        }
    }
}

/// Label sequences of every case, boundary events included when present.
pub fn label_sequences(log: &EventLog) -> Vec<Vec<String>> {
    log.cases.iter().map(|c| c.labels()).collect()
}

fn best(counts: &Counts) -> Option<&String> {
    let mut top: Option<(&String, usize)> = None;
    for (label, &c) in counts {
        if c > 0 && top.is_none_or(|(_, t)| c > t) {
            top = Some((label, c));
        }
    }
    top.map(|(l, _)| l)
}

/// First-order Markov chain over labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Markov {
    successors: BTreeMap<String, Counts>,
}

pub fn markov_fit(sequences: &[Vec<String>]) -> SeqPredictor {
    let mut m = Markov::default();
    for seq in sequences {
        for w in seq.windows(2) {
            *m.successors.entry(w[0].clone()).or_default().entry(w[1].clone()).or_default() += 1;
        }
    }
    SeqPredictor::Markov(m)
}

impl Markov {
    pub fn next(&self, prefix: &[String]) -> Option<String> {
        self.successors.get(prefix.last()?).and_then(best).cloned()
    }
}

/// All-k-order Markov: contexts of length 1..=order, longest match wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Akom {
    order: usize,
    contexts: BTreeMap<Vec<String>, Counts>,
}

/// # Panics
/// If `order` is zero.
pub fn akom_fit(sequences: &[Vec<String>], order: usize) -> SeqPredictor {
    assert!(order >= 1, "AKOM order must be at least 1");
    let mut contexts: BTreeMap<Vec<String>, Counts> = BTreeMap::new();
    for seq in sequences {
        for i in 1..seq.len() {
            for o in 1..=order.min(i) {
                *contexts.entry(seq[i - o..i].to_vec()).or_default().entry(seq[i].clone()).or_default() += 1;
            }
        }
    }
    SeqPredictor::Akom(Akom { order, contexts })
}

impl Akom {
    pub fn next(&self, prefix: &[String]) -> Option<String> {
        (1..=self.order.min(prefix.len()))
            .rev()
            .find_map(|o| self.contexts.get(&prefix[prefix.len() - o..]).and_then(best))
            .cloned()
    }
}

/// LZ78 phrase dictionary. Each phrase remembers which symbols follow its
/// occurrences in the training sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lz78 {
    /// Trie of phrases; node 0 is the empty phrase.
    nodes: Vec<TrieNode>,
    /// Symbol frequencies, START excluded.
    global: Counts,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct TrieNode {
    children: BTreeMap<String, usize>,
    follow: Counts,
}

/// Textbook LZ78 parse: each phrase is the longest known phrase plus one new
/// symbol. A trailing phrase that is already known is kept as is.
pub fn lz78_phrases(seq: &[String]) -> Vec<Vec<String>> {
    let mut known: BTreeSet<Vec<String>> = BTreeSet::new();
    let mut phrases = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for s in seq {
        current.push(s.clone());
        if known.insert(current.clone()) {
            phrases.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        phrases.push(current);
    }
    phrases
}

pub fn lz78_fit(sequences: &[Vec<String>]) -> SeqPredictor {
    let mut nodes = vec![TrieNode::default()];
    let mut global = Counts::new();
    for seq in sequences {
        for phrase in lz78_phrases(seq) {
            let mut at = 0;
            for s in phrase {
                at = match nodes[at].children.get(&s) {
                    Some(&child) => child,
                    None => {
                        nodes.push(TrieNode::default());
                        let child = nodes.len() - 1;
                        nodes[at].children.insert(s, child);
                        child
                    }
                };
            }
        }
        for s in seq.iter().skip(1) {
            *global.entry(s.clone()).or_default() += 1;
        }
    }
    // follow counts: every occurrence of a phrase in the corpus votes for the next symbol
    for seq in sequences {
        for i in 0..seq.len() {
            let mut at = 0;
            for j in i..seq.len() {
                match nodes[at].children.get(&seq[j]) {
                    Some(&child) => at = child,
                    None => break,
                }
                if let Some(next) = seq.get(j + 1) {
                    *nodes[at].follow.entry(next.clone()).or_default() += 1;
                }
            }
        }
    }
    SeqPredictor::Lz78(Lz78 { nodes, global })
}

impl Lz78 {
    fn lookup(&self, phrase: &[String]) -> Option<&TrieNode> {
        let mut at = 0;
        for s in phrase {
            at = *self.nodes[at].children.get(s)?;
        }
        Some(&self.nodes[at])
    }

    pub fn next(&self, prefix: &[String]) -> Option<String> {
        (1..=prefix.len())
            .rev()
            .filter_map(|len| self.lookup(&prefix[prefix.len() - len..]))
            .find_map(|node| best(&node.follow))
            .or_else(|| best(&self.global))
            .cloned()
    }
}

/// Prediction by partial matching with escape method C and exclusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ppm {
    max_order: usize,
    /// Context (length 0..=max_order) to successor counts.
    contexts: BTreeMap<Vec<String>, Counts>,
    alphabet: BTreeSet<String>,
}

/// # Panics
/// If `max_order` is zero.
pub fn ppm_fit(sequences: &[Vec<String>], max_order: usize) -> SeqPredictor {
    assert!(max_order >= 1, "PPM order must be at least 1");
    let mut contexts: BTreeMap<Vec<String>, Counts> = BTreeMap::new();
    let mut alphabet = BTreeSet::new();
    for seq in sequences {
        alphabet.extend(seq.iter().cloned());
        for i in 1..seq.len() {
            for o in 0..=max_order.min(i) {
                *contexts.entry(seq[i - o..i].to_vec()).or_default().entry(seq[i].clone()).or_default() += 1;
            }
        }
    }
    SeqPredictor::Ppm(Ppm { max_order, contexts, alphabet })
}

impl Ppm {
    /// Blended next-symbol distribution. Starting from the longest context,
    /// each order gives `c / (n + d)` to its symbols and escapes with
    /// `d / (n + d)`, where `n` and `d` count occurrences and distinct symbols
    /// not already seen at a higher order. What escapes order 0 is spread
    /// uniformly over the remaining alphabet.
    pub fn distribution(&self, prefix: &[String]) -> BTreeMap<String, f64> {
        let mut dist: BTreeMap<String, f64> = BTreeMap::new();
        let mut excluded: BTreeSet<&str> = BTreeSet::new();
        let mut escape = 1.0;
        for o in (0..=self.max_order.min(prefix.len())).rev() {
            let Some(counts) = self.contexts.get(&prefix[prefix.len() - o..]) else {
                continue;
            };
            let fresh: Vec<(&String, usize)> =
                counts.iter().filter(|(s, _)| !excluded.contains(s.as_str())).map(|(s, &c)| (s, c)).collect();
            let n: usize = fresh.iter().map(|(_, c)| c).sum();
            if n == 0 {
                continue;
            }
            let d = fresh.len() as f64;
            let denom = n as f64 + d;
            for (s, c) in fresh {
                *dist.entry(s.clone()).or_default() += escape * c as f64 / denom;
                excluded.insert(s);
            }
            escape *= d / denom;
        }
        let rest: Vec<&String> = self.alphabet.iter().filter(|s| !excluded.contains(s.as_str())).collect();
        if !rest.is_empty() && !dist.is_empty() {
            let share = escape / rest.len() as f64;
            for s in rest {
                *dist.entry(s.clone()).or_default() += share;
            }
        }
        dist
    }

    pub fn next(&self, prefix: &[String]) -> Option<String> {
        let dist = self.distribution(prefix);
        let mut top: Option<(&String, f64)> = None;
        for (s, &p) in &dist {
            if top.is_none_or(|(_, t)| p > t) {
                top = Some((s, p));
            }
        }
        top.map(|(s, _)| s.clone())
    }
}

/// Appends predictions to `prefix` until END, `cap` non-END predictions, or
/// the predictor gives up (reported as [`Termination::Cap`]).
pub fn complete_sequence(predictor: &SeqPredictor, prefix: &[String], cap: usize) -> (Vec<String>, Termination) {
    let mut seq = prefix.to_vec();
    let mut suffix = Vec::new();
    while suffix.len() < cap {
        let Some(next) = predictor.next(&seq) else {
            break;
        };
        seq.push(next.clone());
        suffix.push(next);
        if seq.last().is_some_and(|l| l == END) {
            return (suffix, Termination::End);
        }
    }
    (suffix, Termination::Cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn markov_trivial_chain() {
        let m = markov_fit(&vec![seq("START A END"); 10]);
        assert_eq!(m.next(&seq("START")).as_deref(), Some("A"));
        assert_eq!(m.next(&seq("START A")).as_deref(), Some("END"));
        assert_eq!(m.next(&seq("Z")), None);
        assert_eq!(m.next(&[]), None);
    }

    #[test]
    fn markov_majority_successor() {
        let mut corpus = vec![seq("A B"); 7];
        corpus.extend(vec![seq("A C"); 3]);
        assert_eq!(markov_fit(&corpus).next(&seq("A")).as_deref(), Some("B"));
    }

    #[test]
    fn markov_ties_are_lexicographic() {
        let m = markov_fit(&[seq("A C"), seq("A B")]);
        assert_eq!(m.next(&seq("A")).as_deref(), Some("B"));
    }

    #[test]
    fn akom_uses_longer_context() {
        // after B alone C wins 3:2, but after "X B" it is always D
        let corpus = [seq("X B D"), seq("X B D"), seq("Y B C"), seq("Y B C"), seq("Y B C")];
        let a = akom_fit(&corpus, 2);
        assert_eq!(a.next(&seq("X B")).as_deref(), Some("D"));
        assert_eq!(a.next(&seq("Y B")).as_deref(), Some("C"));
        assert_eq!(markov_fit(&corpus).next(&seq("X B")).as_deref(), Some("C"));
        // unseen order-2 context backs off to order 1
        assert_eq!(a.next(&seq("Q B")).as_deref(), Some("C"));
        assert_eq!(a.next(&seq("Q")), None);
    }

    #[test]
    fn lz78_parse() {
        let p = lz78_phrases(&seq("A B A B A B"));
        assert_eq!(p, vec![seq("A"), seq("B"), seq("A B"), seq("A B")]);
        let p = lz78_phrases(&seq("A A A A A A"));
        assert_eq!(p, vec![seq("A"), seq("A A"), seq("A A A")]);
    }

    #[test]
    fn lz78_single_symbol_and_fallback() {
        let m = lz78_fit(&[seq("A A A A")]);
        assert_eq!(m.next(&seq("A")).as_deref(), Some("A"));
        assert_eq!(m.next(&seq("Q")).as_deref(), Some("A"));
        let m = lz78_fit(&[seq("START A B"), seq("START B B")]);
        // nothing known about Q: global frequency (B x3) wins, START never counted
        assert_eq!(m.next(&seq("Q")).as_deref(), Some("B"));
    }

    #[test]
    fn ppm_hand_blend() {
        let corpus = [seq("A B"), seq("A B"), seq("A B"), seq("A C")];
        let SeqPredictor::Ppm(p) = ppm_fit(&corpus, 1) else { unreachable!() };
        // order 1 "A": {B:3, C:1}, n=4 d=2 -> B 3/6, C 1/6, escape 2/6
        // order 0 adds nothing new; the escape goes to the unseen symbol A
        let d = p.distribution(&seq("A"));
        assert!((d["B"] - 0.5).abs() < 1e-12);
        assert!((d["C"] - 1.0 / 6.0).abs() < 1e-12);
        assert!((d["A"] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(p.next(&seq("A")).as_deref(), Some("B"));
        // unmatched context "Z": order 0 {B:3, C:1} gives the same blend
        let z = p.distribution(&seq("Z"));
        assert_eq!(z, d);
    }

    #[test]
    fn ppm_deterministic_corpus_and_order0_fallback() {
        let corpus = vec![seq("START A B C END"); 5];
        let p = ppm_fit(&corpus, 3);
        assert_eq!(p.next(&seq("START A")).as_deref(), Some("B"));
        assert_eq!(p.next(&seq("START A B C")).as_deref(), Some("END"));
        // unknown context: order-0 counts are all 5, lexicographic tie break
        assert_eq!(p.next(&seq("Q")).as_deref(), Some("A"));
    }

    #[test]
    fn completion() {
        let end = markov_fit(&[seq("START END")]);
        assert_eq!(complete_sequence(&end, &seq("START"), 10), (seq("END"), Termination::End));
        let cyc = markov_fit(&[seq("A A")]);
        let (s, t) = complete_sequence(&cyc, &seq("A"), 10);
        assert_eq!((s.len(), t), (10, Termination::Cap));
        let chain = markov_fit(&[seq("START A B C END")]);
        assert_eq!(complete_sequence(&chain, &seq("START A"), 10).0, seq("B C END"));
        assert_eq!(complete_sequence(&chain, &seq("Q"), 10), (vec![], Termination::Cap));
    }
}
