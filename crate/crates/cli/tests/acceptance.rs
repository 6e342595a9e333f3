//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criteria 4 to 7 need a treebank. Set `PUNCTKIT_TREEBANK_TRAIN` and
//! `PUNCTKIT_TREEBANK_TEST` to CoNLL-U files to use a real one; otherwise a
//! generated English-like treebank stands in.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use punctkit::conll::to_conll_string;
use punctkit::eval::{attachment_scores, relative_error_increase};
use punctkit::parser::{oracle_transitions, replay};
use punctkit::perturb::{apply_injection, inject_document, strip_document, InjectionSites, PerturbConfig};
use punctkit::tree::{crossing_arc_pairs, is_projective};
use punctkit::{read_conll, validate, Document, PunctClass, Sentence};
use punctkit_cli::{cmd_experiment, read_document, ExperimentReport};
use punctkit_synth::{all_trees, random_projective_tree, random_tree, EnglishGenerator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

/// Table rounding of the published cells.
const TABLE_TOLERANCE: f64 = 0.0015;
const PROPERTY_SENTENCES: usize = 10_000;
const MAX_LENGTH: usize = 40;
const INJECTION_RATES: [(f64, f64); 3] = [(0.01, 0.01), (0.05, 0.05), (0.1, 0.1)];
const CROSSING_TREES: usize = 1_000;
const MIN_TRAIN_SENTENCES: usize = 2_000;
const SYNTH_TRAIN: usize = 2_400;
const SYNTH_TEST: usize = 600;
const INJECTION_SEEDS: usize = 5;
/// Minimum Standard-mode LAS drop on the stripped test set.
const MIN_STRIP_DROP: f64 = 0.01;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn metric_reproduction() -> Outcome {
    // (system, bl, sys, published) for the no-punct and the δ=χ=0.1 columns.
    let cells = [
        ("UUParser no punct", 0.918, 0.869, 0.598),
        ("KGraphs no punct", 0.910, 0.865, 0.500),
        ("MaltParser no punct", 0.858, 0.805, 0.373),
        ("TurboParser no punct", 0.894, 0.852, 0.396),
        ("Stanford no punct", 0.870, 0.816, 0.415),
        ("NoPunct no punct", 0.898, 0.898, 0.000),
        ("dropout no punct", 0.904, 0.847, 0.594),
        ("clip no punct", 0.917, 0.871, 0.554),
        ("UUParser 0.1", 0.918, 0.794, 1.512),
        ("KGraphs 0.1", 0.910, 0.779, 1.456),
        ("MaltParser 0.1", 0.858, 0.675, 1.289),
        ("TurboParser 0.1", 0.894, 0.802, 0.868),
        ("Stanford 0.1", 0.870, 0.688, 1.400),
        ("NoPunct 0.1", 0.898, 0.898, 0.000),
        ("dropout 0.1", 0.904, 0.748, 1.625),
        ("clip 0.1", 0.917, 0.793, 1.494),
    ];
    let mut worst: f64 = 0.0;
    for (name, bl, sys, published) in cells {
        let got = relative_error_increase(bl, sys).map_err(|e| e.to_string())?;
        let diff = (got - published).abs();
        ensure(diff <= TABLE_TOLERANCE, || format!("{}: {:.4} vs published {:.3}", name, got, published))?;
        worst = worst.max(diff);
    }
    Ok(format!("{} cells, max |diff| {:.5}", cells.len(), worst))
}

fn perturbation_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let sentences: Vec<Sentence> = (0..PROPERTY_SENTENCES)
        .map(|_| {
            let n = rng.gen_range(1..=MAX_LENGTH);
            random_projective_tree(n, 0.1, &mut rng)
        })
        .collect();
    let doc = Document::new("generated", sentences);
    let words = doc.n_tokens() as f64;

    let (stripped, _) = strip_document(&doc, PunctClass::DotsAndCommas).map_err(|e| e.to_string())?;
    let mut checked = 0;
    let mut z_scores = Vec::new();
    for (chi, delta) in INJECTION_RATES {
        let seeds = [11, 12, 13];
        let mut injected_total = 0;
        for seed in seeds {
            let config = PerturbConfig::new(chi, delta, PunctClass::DotsAndCommas, seed).unwrap();
            let (injected, logs) = inject_document(&doc, &config).map_err(|e| e.to_string())?;
            injected_total += logs.iter().map(|l| l.injected.len()).sum::<usize>();

            // (a) validity
            for (idx, s) in injected.sentences.iter().chain(&stripped.sentences).enumerate() {
                ensure(validate(s).is_valid(), || format!("(a) invalid output {} at rates ({}, {})", idx, chi, delta))?;
            }
            // (b) strip ∘ inject = strip
            let (restripped, _) = strip_document(&injected, PunctClass::DotsAndCommas).map_err(|e| e.to_string())?;
            for (idx, (a, b)) in restripped.sentences.iter().zip(&stripped.sentences).enumerate() {
                ensure(a == b, || format!("(b) sentence {} differs after strip(inject) at seed {}", idx + 1, seed))?;
            }
            // (d) gold invariance
            for class in [PunctClass::DotsAndCommas, PunctClass::AllPunct] {
                for system in [&injected, &stripped] {
                    let r = attachment_scores(&doc, system, class).map_err(|e| e.to_string())?;
                    ensure(r.uas == 1.0 && r.las == 1.0, || format!("(d) gold LAS {} under {}", r.las, class))?;
                }
            }
            checked += injected.len();
        }
        // (c) binomial count: mean n(χ+δ), variance n(χ(1-χ)+δ(1-δ)) per run.
        let runs = seeds.len() as f64;
        let expected = runs * words * (chi + delta);
        let se = (runs * words * (chi * (1.0 - chi) + delta * (1.0 - delta))).sqrt();
        let z = (injected_total as f64 - expected) / se;
        ensure(z.abs() <= 3.0, || format!("(c) at ({}, {}): {} injected, expected {:.0}, z = {:.2}", chi, delta, injected_total, expected, z))?;
        z_scores.push(format!("{:+.2}", z));
    }
    Ok(format!(
        "{} sentences x {} runs, injected-count z-scores [{}]",
        doc.len(),
        checked / doc.len(),
        z_scores.join(", ")
    ))
}

fn crossing_oracle(sentence: &Sentence) -> BTreeSet<((usize, usize), (usize, usize))> {
    let n = sentence.len();
    let arcs: BTreeSet<(usize, usize)> = sentence.tokens.iter().map(|t| (t.head.min(t.id), t.head.max(t.id))).collect();
    let mut out = BTreeSet::new();
    for i in 0..=n {
        for j in i + 1..=n {
            for k in j + 1..=n {
                for l in k + 1..=n {
                    if arcs.contains(&(i, k)) && arcs.contains(&(j, l)) {
                        out.insert(((i, k), (j, l)));
                    }
                }
            }
        }
    }
    out
}

fn nonprojectivity() -> Outcome {
    let s = Sentence::from_parts(vec![
        ("big", "ADJ", 2, "amod"),
        ("dogs", "NOUN", 3, "nsubj"),
        ("bark", "VERB", 0, "root"),
    ]);
    let mut sites = InjectionSites::none(3);
    sites.dot_after[0] = true;
    let (out, log) = apply_injection(&s, &sites).map_err(|e| e.to_string())?;
    ensure(out.forms() == ["big", ".", "dogs", "bark"], || format!("unexpected forms {:?}", out.forms()))?;
    ensure(log.made_nonprojective, || "\"big . dogs bark\" not flagged non-projective".to_owned())?;

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut disagreements = 0;
    let mut crossing_trees = 0;
    for _ in 0..CROSSING_TREES {
        let n = rng.gen_range(1..=12);
        let tree = random_tree(n, &mut rng);
        let got: BTreeSet<_> = crossing_arc_pairs(&tree)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|(a, b)| {
                let (a, b) = (a.span(), b.span());
                (a.min(b), a.max(b))
            })
            .collect();
        let expected = crossing_oracle(&tree);
        if !expected.is_empty() {
            crossing_trees += 1;
        }
        if got != expected || is_projective(&tree).unwrap() != expected.is_empty() {
            disagreements += 1;
        }
    }
    ensure(disagreements == 0, || format!("{} disagreements with the quadruple oracle", disagreements))?;
    Ok(format!(
        "made_nonprojective = true; {} random trees ({} non-projective), 0 disagreements",
        CROSSING_TREES, crossing_trees
    ))
}

fn replays(sentence: &Sentence) -> Result<(), String> {
    let transitions = oracle_transitions(sentence).map_err(|e| e.to_string())?;
    let mut got = replay(sentence.len(), &transitions).arcs();
    let mut gold: Vec<_> = sentence.tokens.iter().map(|t| (t.head, t.id, t.deprel.clone())).collect();
    got.sort();
    gold.sort();
    ensure(got == gold, || format!("replay differs for heads {:?}", sentence.heads()))
}

fn oracle_soundness(test: &Document) -> Outcome {
    let mut trees = 0;
    for n in 1..=5 {
        for tree in all_trees(n).into_iter().filter(|t| is_projective(t).unwrap()) {
            replays(&tree)?;
            trees += 1;
        }
    }
    let mut corpus = 0;
    for (idx, s) in test.sentences.iter().enumerate() {
        if is_projective(s).map_err(|e| e.to_string())? {
            replays(s).map_err(|e| format!("test sentence {}: {}", idx + 1, e))?;
            corpus += 1;
        }
    }
    Ok(format!(
        "{} enumerated projective trees (n <= 5), {} of {} test sentences",
        trees,
        corpus,
        test.len()
    ))
}

fn manifest(train: &Path, test: &Path, epochs: usize, repeats: usize) -> String {
    let mut text = format!(
        "train = {:?}\ntest = {:?}\nseed = 7\nepochs = {}\nmodes = [\"standard\", \"nopunct\"]\n\
         strip_punct_class = \"dots-commas\"\neval_punct_class = \"all\"\nrepeats = {}\n\n\
         [[condition]]\nname = \"no_punct\"\n",
        train, test, epochs, repeats
    );
    for (chi, delta) in INJECTION_RATES {
        text.push_str(&format!(
            "\n[[condition]]\nname = \"d{}_c{}\"\nchi = {}\ndelta = {}\n",
            delta, chi, chi, delta
        ));
    }
    text
}

fn injection_names() -> Vec<String> {
    INJECTION_RATES.iter().map(|(chi, delta)| format!("d{}_c{}", delta, chi)).collect()
}

fn directional(report: &ExperimentReport, train_sentences: usize) -> Outcome {
    ensure(train_sentences >= MIN_TRAIN_SENTENCES, || {
        format!("only {} training sentences", train_sentences)
    })?;
    let standard = &report.modes["standard"];
    let base = standard.baseline.las;
    let stripped = standard.conditions["no_punct"].las;
    let drop = base - stripped;
    ensure(drop >= MIN_STRIP_DROP, || format!("LAS {:.4} -> {:.4} on stripped text, drop {:.4}", base, stripped, drop))?;

    let injected: Vec<f64> = injection_names().iter().map(|n| standard.conditions[n].las).collect();
    ensure(injected.windows(2).all(|w| w[1] <= w[0]), || {
        format!("injected LAS not monotone: {:?}", injected)
    })?;
    Ok(format!(
        "baseline {:.4}, stripped {:.4} (drop {:.1} points), injected {}",
        base,
        stripped,
        100.0 * drop,
        injected.iter().map(|v| format!("{:.4}", v)).collect::<Vec<_>>().join(" >= ")
    ))
}

fn nopunct_invariance(report: &ExperimentReport) -> Outcome {
    let nopunct = &report.modes["nopunct"];
    let base = nopunct.baseline.las;
    for (name, scores) in &nopunct.conditions {
        ensure(scores.las.to_bits() == base.to_bits(), || {
            format!("{}: LAS {} differs from baseline {}", name, scores.las, base)
        })?;
        ensure(nopunct.rel_err_increase[name] == Some(0.0), || {
            format!("{}: relative error increase {:?}", name, nopunct.rel_err_increase[name])
        })?;
    }
    Ok(format!(
        "LAS {:.4} in all {} conditions, relative error increase 0.0",
        base,
        nopunct.conditions.len() + 1
    ))
}

fn reproducibility(dir: &Path, train: &Path, test: &Path, test_doc: &Document) -> Outcome {
    let small_train = dir.join("small-train.conllu");
    let small_test = dir.join("small-test.conllu");
    let train_doc = read_document(train).map_err(|e| e.to_string())?;
    let take = |doc: &Document, n: usize| Document::new(doc.source_name.clone(), doc.sentences.iter().take(n).cloned().collect());
    fs::write(&small_train, to_conll_string(&take(&train_doc, 400))).map_err(|e| e.to_string())?;
    fs::write(&small_test, to_conll_string(&take(test_doc, 100))).map_err(|e| e.to_string())?;
    let config = dir.join("small.toml");
    fs::write(&config, manifest(&small_train, &small_test, 2, 2)).map_err(|e| e.to_string())?;

    let (a, b) = (dir.join("run-a.json"), dir.join("run-b.json"));
    cmd_experiment(&config, &a).map_err(|e| e.to_string())?;
    cmd_experiment(&config, &b).map_err(|e| e.to_string())?;
    let (a, b) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    ensure(a == b, || "two experiment runs produced different JSON".to_owned())?;

    // A canonical file is one written by the toolkit.
    let original = fs::read_to_string(test).map_err(|e| e.to_string())?;
    let canonical = to_conll_string(&read_conll(original.as_bytes(), "test").map_err(|e| e.to_string())?);
    let again = to_conll_string(&read_conll(canonical.as_bytes(), "test").map_err(|e| e.to_string())?);
    ensure(again == canonical, || "canonical CoNLL round trip is not byte-identical".to_owned())?;
    Ok(format!(
        "experiment JSON identical across runs ({} bytes); CoNLL round trip identical ({} bytes{})",
        a.len(),
        canonical.len(),
        if canonical == original { ", input already canonical" } else { "" }
    ))
}

struct Corpus {
    train: PathBuf,
    test: PathBuf,
    description: String,
}

fn corpus(dir: &Path) -> Corpus {
    match (std::env::var_os("PUNCTKIT_TREEBANK_TRAIN"), std::env::var_os("PUNCTKIT_TREEBANK_TEST")) {
        (Some(train), Some(test)) => Corpus {
            description: format!("treebank {} / {}", Path::new(&train).display(), Path::new(&test).display()),
            train: train.into(),
            test: test.into(),
        },
        _ => {
            let train = dir.join("train.conllu");
            let test = dir.join("test.conllu");
            fs::write(&train, to_conll_string(&EnglishGenerator::new(1).document("train", SYNTH_TRAIN))).unwrap();
            fs::write(&test, to_conll_string(&EnglishGenerator::new(2).document("test", SYNTH_TEST))).unwrap();
            Corpus {
                train,
                test,
                description: format!("generated English-like treebank ({} train / {} test)", SYNTH_TRAIN, SYNTH_TEST),
            }
        }
    }
}

struct Gate {
    failed: usize,
}

impl Gate {
    fn run(&mut self, label: &str, check: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|payload| {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {}", msg))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {}: {} [{:.1}s]", label, detail, secs),
            Err(detail) => {
                self.failed += 1;
                println!("FAIL  {}: {} [{:.1}s]", label, detail, secs);
            }
        }
    }
}

fn main() -> ExitCode {
    let dir = TempDir::new().expect("temporary directory");
    let corpus = corpus(dir.path());
    println!("acceptance corpus: {}", corpus.description);

    let mut gate = Gate { failed: 0 };
    gate.run("1 metric reproduction", metric_reproduction);
    gate.run("2 perturbation properties", perturbation_properties);
    gate.run("3 non-projectivity creation", nonprojectivity);

    let loaded = read_document(&corpus.test).and_then(|test| read_document(&corpus.train).map(|train| (train, test)));
    let (train_doc, test_doc) = match loaded {
        Ok(docs) => docs,
        Err(e) => {
            for label in ["4 oracle soundness", "5 directional replication", "6 NoPunct invariance", "7 reproducibility"] {
                println!("FAIL  {}: {}", label, e);
            }
            return ExitCode::FAILURE;
        }
    };
    gate.run("4 oracle soundness", || oracle_soundness(&test_doc));

    let config = dir.path().join("experiment.toml");
    fs::write(&config, manifest(&corpus.train, &corpus.test, 10, INJECTION_SEEDS)).unwrap();
    let started = Instant::now();
    let report = cmd_experiment(&config, &dir.path().join("report.json"));
    println!("experiment finished in {:.1}s", started.elapsed().as_secs_f64());
    match &report {
        Ok(report) => {
            print!("{}", report.table());
            gate.run("5 directional replication", || directional(report, train_doc.len()));
            gate.run("6 NoPunct invariance", || nopunct_invariance(report));
        }
        Err(e) => {
            gate.run("5 directional replication", || Err(e.to_string()));
            gate.run("6 NoPunct invariance", || Err(e.to_string()));
        }
    }
    gate.run("7 reproducibility", || reproducibility(dir.path(), &corpus.train, &corpus.test, &test_doc));

    if gate.failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", gate.failed);
        ExitCode::FAILURE
    }
}
