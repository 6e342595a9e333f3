//! Generated dependency data for tests and desk-scale experiments.
//!
//! [`random_tree`] and [`random_projective_tree`] produce unlabelled-ish
//! trees for property checks. [`EnglishGenerator`] produces English-like
//! sentences annotated in a Stanford-dependencies style: dots attach to the
//! root token and commas to their left neighbour.

use punctkit::{Document, Sentence, Token};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LABELS: &[&str] = &["amod", "case", "dep", "det", "dobj", "nmod", "nsubj"];
const TAGS: &[&str] = &["ADJ", "ADP", "DET", "NOUN", "PROPN", "VERB"];

fn word_token<R: Rng>(id: usize, head: usize, rng: &mut R) -> Token {
    let deprel = if head == 0 {
        "root"
    } else {
        LABELS.choose(rng).expect("non-empty")
    };
    Token::new(
        id,
        format!("w{}", rng.gen_range(0..50)),
        *TAGS.choose(rng).expect("non-empty"),
        head,
        deprel,
    )
}

/// A uniformly shaped random tree over `n` tokens, possibly non-projective.
pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Sentence {
    assert!(n > 0);
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n + 1];
    for k in 1..n {
        heads[order[k]] = order[rng.gen_range(0..k)];
    }
    Sentence::new((1..=n).map(|id| word_token(id, heads[id], rng)).collect())
}

fn projective_span<R: Rng>(from: usize, to: usize, head: usize, heads: &mut [usize], rng: &mut R) {
    let mut start = from;
    while start <= to {
        let end = rng.gen_range(start..=to);
        let root = rng.gen_range(start..=end);
        heads[root] = head;
        if root > start {
            projective_span(start, root - 1, root, heads, rng);
        }
        if root < end {
            projective_span(root + 1, end, root, heads, rng);
        }
        start = end + 1;
    }
}

/// A random projective tree over `n` tokens. With probability `punct_rate`
/// each leaf other than the root becomes a `,` or `.` labelled `punct`.
pub fn random_projective_tree<R: Rng>(n: usize, punct_rate: f64, rng: &mut R) -> Sentence {
    assert!(n > 0);
    let mut heads = vec![0; n + 1];
    let root = rng.gen_range(1..=n);
    if root > 1 {
        projective_span(1, root - 1, root, &mut heads, rng);
    }
    if root < n {
        projective_span(root + 1, n, root, &mut heads, rng);
    }

    let mut has_children = vec![false; n + 1];
    for &h in &heads[1..] {
        has_children[h] = true;
    }
    let tokens = (1..=n)
        .map(|id| {
            if id != root && !has_children[id] && rng.gen_bool(punct_rate) {
                let form = if rng.gen_bool(0.5) { "," } else { "." };
                Token::punctuation(id, form, heads[id])
            } else {
                word_token(id, heads[id], rng)
            }
        })
        .collect();
    Sentence::new(tokens)
}

/// Every head vector over `n` tokens that forms a valid tree.
pub fn all_trees(n: usize) -> Vec<Sentence> {
    let mut out = Vec::new();
    let mut heads = vec![0; n];
    loop {
        let sentence = Sentence::new(
            heads
                .iter()
                .enumerate()
                .map(|(idx, &h)| Token::new(idx + 1, format!("t{}", idx + 1), "X", h, if h == 0 { "root" } else { "dep" }))
                .collect(),
        );
        if punctkit::validate(&sentence).is_valid() {
            out.push(sentence);
        }
        // Odometer over {0..=n}^n.
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            heads[i] += 1;
            if heads[i] <= n {
                break;
            }
            heads[i] = 0;
            i += 1;
        }
    }
}

const DETS: &[&str] = &["the", "a", "this", "every", "some", "that"];
const ADJS: &[&str] = &[
    "big", "old", "red", "happy", "small", "new", "famous", "quiet", "local", "young", "strange", "green",
];
const NOUNS: &[&str] = &[
    "dog", "man", "woman", "city", "book", "car", "teacher", "company", "river", "song", "house", "child", "letter",
    "market", "garden", "report", "idea", "team", "window", "friend", "doctor", "train", "school", "story",
];
const PROPNS: &[&str] = &[
    "John", "Mary", "Paris", "Alice", "Bob", "London", "Smith", "Sarah", "Peter", "Oslo", "Anna", "Berlin",
];
const TRANSITIVE: &[&str] = &[
    "likes", "sees", "buys", "reads", "finds", "writes", "visits", "wants", "builds", "sells", "knows", "paints",
];
const INTRANSITIVE: &[&str] = &["sleeps", "runs", "arrives", "laughs", "waits", "works", "sings", "leaves"];
const SAYING: &[&str] = &["said", "thinks", "believes", "claims"];
const ADPS: &[&str] = &["in", "on", "with", "near", "from", "under", "about", "after", "for"];
const ADVS: &[&str] = &["yesterday", "today", "quickly", "often", "finally", "again", "later", "still"];
const SENTENCE_ADVS: &[&str] = &["however", "yesterday", "meanwhile", "fortunately", "today", "sadly"];
const NUMS: &[&str] = &["27", "3", "42", "19", "100", "64", "35", "two", "five"];
const CCONJS: &[&str] = &["and", "but", "or"];
const SCONJS: &[&str] = &["because", "although", "when", "while", "if", "since"];

/// Sentence under construction; heads are indices into `tokens`.
#[derive(Default)]
struct Builder {
    tokens: Vec<(String, &'static str, Option<usize>, &'static str)>,
}

impl Builder {
    fn push(&mut self, form: &str, upos: &'static str) -> usize {
        self.tokens.push((form.to_owned(), upos, None, "root"));
        self.tokens.len() - 1
    }

    fn pick<R: Rng>(&mut self, words: &[&str], upos: &'static str, rng: &mut R) -> usize {
        let word = *words.choose(rng).expect("non-empty word list");
        self.push(word, upos)
    }

    fn attach(&mut self, dependent: usize, head: usize, label: &'static str) {
        self.tokens[dependent].2 = Some(head);
        self.tokens[dependent].3 = label;
    }

    /// A comma attached to its left neighbour.
    fn comma(&mut self) -> usize {
        let idx = self.push(",", "PUNCT");
        self.attach(idx, idx - 1, "punct");
        idx
    }

    fn finish(self) -> Sentence {
        Sentence::new(
            self.tokens
                .into_iter()
                .enumerate()
                .map(|(idx, (form, upos, head, deprel))| {
                    let mut t = Token::new(idx + 1, form, upos, head.map_or(0, |h| h + 1), deprel);
                    t.lemma = t.form.to_lowercase();
                    if upos == "PUNCT" {
                        t.xpos = t.form.clone();
                    }
                    t
                })
                .collect(),
        )
    }
}

/// Generates English-like treebanks where commas mark appositions,
/// non-restrictive relative clauses, introductory phrases, clause
/// coordination and list items.
pub struct EnglishGenerator {
    rng: ChaCha8Rng,
}

impl EnglishGenerator {
    pub fn new(seed: u64) -> Self {
        EnglishGenerator {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn noun_phrase(&mut self, b: &mut Builder, allow_pp: bool) -> usize {
        if self.chance(0.3) {
            let first = b.pick(PROPNS, "PROPN", &mut self.rng);
            if self.chance(0.2) {
                let second = b.pick(PROPNS, "PROPN", &mut self.rng);
                b.attach(first, second, "compound");
                return second;
            }
            return first;
        }
        let det = if self.chance(0.85) {
            Some(b.pick(DETS, "DET", &mut self.rng))
        } else {
            None
        };
        let n_adj = [0, 0, 0, 1, 1, 2].choose(&mut self.rng).copied().unwrap_or(0);
        let adjs: Vec<usize> = (0..n_adj).map(|_| b.pick(ADJS, "ADJ", &mut self.rng)).collect();
        let noun = b.pick(NOUNS, "NOUN", &mut self.rng);
        if let Some(det) = det {
            b.attach(det, noun, "det");
        }
        for adj in adjs {
            b.attach(adj, noun, "amod");
        }
        if allow_pp && self.chance(0.2) {
            let pp = self.prep_phrase(b);
            b.attach(pp, noun, "nmod");
        }
        noun
    }

    /// Returns the head noun; the caller attaches it.
    fn prep_phrase(&mut self, b: &mut Builder) -> usize {
        let adp = b.pick(ADPS, "ADP", &mut self.rng);
        let noun = self.noun_phrase(b, false);
        b.attach(adp, noun, "case");
        noun
    }

    /// Object, possibly a coordinated list.
    fn object(&mut self, b: &mut Builder) -> usize {
        let first = self.noun_phrase(b, false);
        if self.chance(0.15) {
            let n_items = if self.chance(0.5) { 2 } else { 3 };
            for item in 1..n_items {
                let last = item == n_items - 1;
                if !last || (n_items > 2 && self.chance(0.5)) {
                    b.comma();
                }
                let cc = if last { Some(b.pick(&["and", "or"], "CCONJ", &mut self.rng)) } else { None };
                let conj = self.noun_phrase(b, false);
                if let Some(cc) = cc {
                    b.attach(cc, conj, "cc");
                }
                b.attach(conj, first, "conj");
            }
        }
        first
    }

    fn subject(&mut self, b: &mut Builder) -> usize {
        let head = self.noun_phrase(b, true);
        let r: f64 = self.rng.gen();
        if r < 0.08 {
            b.comma();
            let num = b.pick(NUMS, "NUM", &mut self.rng);
            b.attach(num, head, "amod");
            b.comma();
        } else if r < 0.16 {
            b.comma();
            let appos = self.noun_phrase(b, false);
            b.attach(appos, head, "appos");
            b.comma();
        } else if r < 0.28 {
            b.comma();
            let rel = b.push(if self.chance(0.7) { "who" } else { "which" }, "PRON");
            let verb = self.verb_phrase(b);
            b.attach(rel, verb, "nsubj");
            b.attach(verb, head, "relcl");
            b.comma();
        } else if r < 0.33 {
            let rel = b.push("that", "PRON");
            let verb = self.verb_phrase(b);
            b.attach(rel, verb, "nsubj");
            b.attach(verb, head, "relcl");
        }
        head
    }

    /// A verb with its complements; the subject is attached by the caller.
    fn verb_phrase(&mut self, b: &mut Builder) -> usize {
        let verb;
        if self.chance(0.6) {
            verb = b.pick(TRANSITIVE, "VERB", &mut self.rng);
            let obj = self.object(b);
            b.attach(obj, verb, "dobj");
            if self.chance(0.3) {
                let pp = self.prep_phrase(b);
                // Genuinely ambiguous attachment.
                if self.chance(0.5) {
                    b.attach(pp, verb, "obl");
                } else {
                    b.attach(pp, obj, "nmod");
                }
            }
        } else {
            verb = b.pick(INTRANSITIVE, "VERB", &mut self.rng);
            if self.chance(0.4) {
                let pp = self.prep_phrase(b);
                b.attach(pp, verb, "obl");
            }
        }
        if self.chance(0.2) {
            let adv = b.pick(ADVS, "ADV", &mut self.rng);
            b.attach(adv, verb, "advmod");
        }
        verb
    }

    fn clause(&mut self, b: &mut Builder) -> usize {
        if self.chance(0.1) {
            let subj = self.subject(b);
            let verb = b.pick(SAYING, "VERB", &mut self.rng);
            b.attach(subj, verb, "nsubj");
            let mark = if self.chance(0.5) { Some(b.push("that", "SCONJ")) } else { None };
            let comp = self.clause(b);
            if let Some(mark) = mark {
                b.attach(mark, comp, "mark");
            }
            b.attach(comp, verb, "ccomp");
            return verb;
        }
        let subj = self.subject(b);
        let verb = self.verb_phrase(b);
        b.attach(subj, verb, "nsubj");
        verb
    }

    pub fn sentence(&mut self) -> Sentence {
        let mut b = Builder::default();

        // Introductory material waiting for the main verb.
        let mut intro: Vec<(usize, &'static str)> = Vec::new();
        let r: f64 = self.rng.gen();
        if r < 0.12 {
            let adv = b.pick(SENTENCE_ADVS, "ADV", &mut self.rng);
            intro.push((adv, "advmod"));
            b.comma();
        } else if r < 0.22 {
            let pp = self.prep_phrase(&mut b);
            intro.push((pp, "obl"));
            b.comma();
        } else if r < 0.32 {
            let mark = b.pick(SCONJS, "SCONJ", &mut self.rng);
            let sub = self.clause(&mut b);
            b.attach(mark, sub, "mark");
            intro.push((sub, "advcl"));
            b.comma();
        }

        let main = self.clause(&mut b);
        for (dep, label) in intro {
            b.attach(dep, main, label);
        }

        let r: f64 = self.rng.gen();
        if r < 0.18 {
            if self.chance(0.85) {
                b.comma();
            }
            let cc = b.pick(CCONJS, "CCONJ", &mut self.rng);
            let conj = self.clause(&mut b);
            b.attach(cc, conj, "cc");
            b.attach(conj, main, "conj");
        } else if r < 0.3 {
            if self.chance(0.5) {
                b.comma();
            }
            let mark = b.pick(SCONJS, "SCONJ", &mut self.rng);
            let sub = self.clause(&mut b);
            b.attach(mark, sub, "mark");
            b.attach(sub, main, "advcl");
        }

        if self.chance(0.95) {
            let dot = b.push(".", "PUNCT");
            b.attach(dot, main, "punct");
        }
        b.finish()
    }

    pub fn document(&mut self, name: &str, n_sentences: usize) -> Document {
        Document::new(name, (0..n_sentences).map(|_| self.sentence()).collect())
    }
}
