//! The five subcommand implementations.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use biqq_core::augment::{augment_corpus, make_attack_set, AugRule, Lexicons, Method};
use biqq_core::checkpoint;
use biqq_core::fairness::IdentityLexicon;
use biqq_core::nn::variants::{gate_weight_count, synth_batch, time_workload, Variant};
use biqq_core::nn::ModelConfig;
use biqq_core::pipeline::dataset::{
    build_examples, encode_examples, filter_short, read_tsv, split_corpus, write_tsv, Example,
};
use biqq_core::pipeline::evaluate::{evaluate, predict_probs};
use biqq_core::pipeline::train::{history_csv, train};
use biqq_core::pipeline::vocab::Vocab;
use biqq_core::seeds::derive_seed;
use biqq_core::CoreError;

use crate::config::Cfg;
use crate::error::{CliError, Result};
use crate::{AttackArgs, AugmentArgs, BenchArgs, EvalArgs, TrainArgs};

fn load_corpus(path: &Path) -> Result<Vec<Example>> {
    let records = read_tsv(path)?;
    Ok(build_examples(&records))
}

fn lexicons_from(dir: Option<&PathBuf>) -> Result<Lexicons> {
    match dir {
        Some(d) => Ok(Lexicons::load_dir(d)?),
        None => Ok(Lexicons::shipped()),
    }
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| CliError::io(path, e))
}

fn make_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn echo_config(cfg: &Cfg) {
    println!("resolved config:");
    for line in cfg.render().lines() {
        println!("  {line}");
    }
}

fn next_example_id(sets: &[&[Example]]) -> usize {
    sets.iter()
        .flat_map(|s| s.iter())
        .map(|e| e.id + 1)
        .max()
        .unwrap_or(0)
}

/// Seeded downsampling of the overrepresented class until the hate
/// fraction is as close to `ratio` as the counts allow.
fn subsample_to_hate_ratio(examples: Vec<Example>, ratio: f64, seed: u64) -> Vec<Example> {
    let n_hate = examples.iter().filter(|e| e.label == 1).count();
    let n_legit = examples.len() - n_hate;
    // Keep counts implied by the target fraction, holding the other class
    // fixed; only ever shrink a class.
    let hate_cap = (ratio / (1.0 - ratio) * n_legit as f64).round() as usize;
    let legit_cap = ((1.0 - ratio) / ratio * n_hate as f64).round() as usize;
    let (label_to_cut, keep) = if n_hate > hate_cap {
        (1u8, hate_cap)
    } else if n_legit > legit_cap {
        (0u8, legit_cap)
    } else {
        return examples;
    };
    let mut cut_idx: Vec<usize> = examples
        .iter()
        .enumerate()
        .filter(|(_, e)| e.label == label_to_cut)
        .map(|(i, _)| i)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "hate-ratio"));
    cut_idx.shuffle(&mut rng);
    let kept: HashSet<usize> = cut_idx.into_iter().take(keep).collect();
    examples
        .into_iter()
        .enumerate()
        .filter(|(i, e)| e.label != label_to_cut || kept.contains(i))
        .map(|(_, e)| e)
        .collect()
}

fn parse_aug_rules(args: &[String], seed: u64) -> Result<Vec<AugRule>> {
    let mut rules = Vec::new();
    for arg in args {
        let parts: Vec<&str> = arg.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Config(format!(
                "--augment expects METHOD:RATE:RATIO, got `{arg}`"
            )));
        }
        let method: Method = parts[0].parse()?;
        let rate: f64 = parts[1].parse().map_err(|_| {
            CliError::Config(format!("--augment `{arg}`: bad rate `{}`", parts[1]))
        })?;
        let ratio: f64 = parts[2].parse().map_err(|_| {
            CliError::Config(format!("--augment `{arg}`: bad ratio `{}`", parts[2]))
        })?;
        rules.push(AugRule::new(method, rate, seed, ratio)?);
    }
    Ok(rules)
}

fn build_vocab(examples: &[Example], min_freq: usize) -> Vocab {
    let lists: Vec<Vec<String>> = examples.iter().map(|e| e.tokens.clone()).collect();
    Vocab::from_corpus(lists.iter().map(Vec::as_slice), min_freq)
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let cfg = Cfg::resolve(
        args.common.config.as_deref(),
        &args.common.set,
        args.common.seed,
    )?;
    echo_config(&cfg);
    let hate_ratio = args.hate_ratio.or(cfg.hate_ratio);
    if let Some(ratio) = hate_ratio {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(CliError::Config(format!(
                "--hate-ratio {ratio} must lie strictly between 0 and 1"
            )));
        }
    }
    let rules = parse_aug_rules(&args.augment, cfg.seed)?;
    make_dir(&args.out)?;
    write_text(&args.out.join("config.resolved"), &cfg.render())?;

    let examples = filter_short(load_corpus(&args.corpus)?);
    if examples.is_empty() {
        return Err(CoreError::EmptyCorpus.into());
    }
    let (mut train_set, mut val_set, mut test_set) = split_corpus(examples, cfg.seed);
    if val_set.is_empty() {
        return Err(CliError::Data(format!(
            "corpus too small to split: {} usable examples leave an empty validation set",
            train_set.len()
        )));
    }
    if let Some(ratio) = hate_ratio {
        let before = train_set.len();
        train_set = subsample_to_hate_ratio(train_set, ratio, cfg.seed);
        println!(
            "hate-ratio {ratio}: training split {} -> {} examples",
            before,
            train_set.len()
        );
    }

    if !rules.is_empty() {
        let lex = lexicons_from(args.lexicons.as_ref())?;
        let next = next_example_id(&[&train_set, &val_set, &test_set]);
        let generated = augment_corpus(&train_set, &rules, &lex, next)?;
        println!(
            "augmentation: {} generated examples from {} rule(s)",
            generated.len(),
            rules.len()
        );
        train_set.extend(generated);
    }

    let vocab = build_vocab(&train_set, cfg.min_freq);
    encode_examples(&mut train_set, &vocab, cfg.max_len);
    encode_examples(&mut val_set, &vocab, cfg.max_len);
    encode_examples(&mut test_set, &vocab, cfg.max_len);

    let identity = match &args.identity {
        Some(path) => {
            let body = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            IdentityLexicon::parse(&body, &path.display().to_string())?
        }
        None => IdentityLexicon::shipped(),
    };

    let model_cfg = cfg.model_config(vocab.len());
    let tc = cfg.train_config();
    println!(
        "training on {} examples ({} validation), vocabulary {} ids",
        train_set.len(),
        val_set.len(),
        vocab.len()
    );
    let out = train(&model_cfg, &tc, &train_set, &val_set, Some(&identity), &vocab)?;

    write_text(&args.out.join("history.csv"), &history_csv(&out.history))?;
    let ckpt_path = args.out.join("best.ckpt");
    checkpoint::save(&ckpt_path, &out.params, &model_cfg, &vocab)?;
    println!(
        "best epoch {} of {} ({} parameter updates); checkpoint {}",
        out.best_epoch,
        out.history.len(),
        out.updates,
        ckpt_path.display()
    );

    let val_metrics = evaluate(&out.params, &model_cfg, &val_set)?;
    println!("validation metrics:\n{}", val_metrics.to_table());
    write_text(&args.out.join("metrics_val.kv"), &val_metrics.to_kv())?;
    if test_set.is_empty() {
        println!("test split is empty; skipping test metrics");
    } else {
        let test_metrics = evaluate(&out.params, &model_cfg, &test_set)?;
        println!("test metrics:\n{}", test_metrics.to_table());
        write_text(&args.out.join("metrics_test.kv"), &test_metrics.to_kv())?;
    }
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let (params, model_cfg, vocab) = checkpoint::load(&args.checkpoint)?;
    println!(
        "checkpoint {}: vocab {} ids, embed {}, hidden {}, layers {}",
        args.checkpoint.display(),
        vocab.len(),
        model_cfg.embed_dim,
        model_cfg.hidden,
        model_cfg.layers
    );
    let mut examples = filter_short(load_corpus(&args.corpus)?);
    if examples.is_empty() {
        return Err(CoreError::EmptyCorpus.into());
    }
    encode_examples(&mut examples, &vocab, args.max_len);
    let metrics = evaluate(&params, &model_cfg, &examples)?;
    println!("{}", metrics.to_table());
    print!("{}", metrics.to_kv());
    if let Some(dir) = &args.out {
        make_dir(dir)?;
        write_text(&dir.join("metrics.kv"), &metrics.to_kv())?;
    }
    Ok(())
}

pub fn cmd_augment(args: &AugmentArgs) -> Result<()> {
    let cfg = Cfg::resolve(
        args.common.config.as_deref(),
        &args.common.set,
        args.common.seed,
    )?;
    echo_config(&cfg);
    let examples = load_corpus(&args.corpus)?;
    let method: Method = args.method.parse()?;
    let rule = AugRule::new(method, args.rate, cfg.seed, args.ratio)?;
    let lex = lexicons_from(args.lexicons.as_ref())?;
    let generated = augment_corpus(&examples, &[rule], &lex, examples.len())?;
    let records: Vec<(u8, String)> = generated
        .iter()
        .map(|e| (e.label, e.tokens.join(" ")))
        .collect();
    make_dir(&args.out)?;
    let path = args.out.join("augmented.tsv");
    write_tsv(&path, &records)?;
    println!(
        "augment method={method} rate={} ratio={} seed={}: {} examples generated from {} sources",
        args.rate,
        args.ratio,
        cfg.seed,
        records.len(),
        examples.len()
    );
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_attack(args: &AttackArgs) -> Result<()> {
    let cfg = Cfg::resolve(
        args.common.config.as_deref(),
        &args.common.set,
        args.common.seed,
    )?;
    echo_config(&cfg);
    let (params, model_cfg, vocab) = checkpoint::load(&args.checkpoint)?;
    let examples = load_corpus(&args.corpus)?;
    let method: Method = args.method.parse()?;
    let rule = AugRule::new(method, args.rate, cfg.seed, 1.0)?;
    let lex = lexicons_from(args.lexicons.as_ref())?;
    let mut attacks = make_attack_set(&examples, &rule, args.n, &lex, examples.len())?;

    let records: Vec<(u8, String)> = attacks
        .iter()
        .map(|e| (e.label, e.tokens.join(" ")))
        .collect();
    match &args.out {
        Some(dir) => {
            make_dir(dir)?;
            let path = dir.join("attacks.tsv");
            write_tsv(&path, &records)?;
            println!("wrote {} attack texts to {}", records.len(), path.display());
        }
        None => {
            for (label, text) in &records {
                println!("{label}\t{text}");
            }
        }
    }

    encode_examples(&mut attacks, &vocab, args.max_len);
    let probs = predict_probs(&params, &model_cfg, &attacks)?;
    let detected = probs.iter().filter(|&&p| p >= 0.5).count();
    // Every attack text is hate-labeled, so every hate call is a true
    // positive and this ratio is the hate-class precision on the set.
    let precision = detected as f64 / probs.len() as f64;
    println!(
        "attack method={method} n={} rate={} seed={}",
        probs.len(),
        args.rate,
        cfg.seed
    );
    println!(
        "hate detection precision: {precision:.4} ({detected}/{} attacks classified as hate)",
        probs.len()
    );
    println!("precision_hate={precision}");
    if let Some(dir) = &args.out {
        write_text(
            &dir.join("attack_report.kv"),
            &format!(
                "method={method}\nn={}\nrate={}\nseed={}\ndetected={detected}\nprecision_hate={precision}\n",
                probs.len(),
                args.rate,
                cfg.seed
            ),
        )?;
    }
    Ok(())
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let cfg = Cfg::resolve(
        args.common.config.as_deref(),
        &args.common.set,
        args.common.seed,
    )?;
    echo_config(&cfg);
    if args.repeats == 0 || args.steps == 0 || args.batch == 0 {
        return Err(CliError::Config(
            "--steps, --batch and --repeats must all be >= 1".into(),
        ));
    }
    let model_cfg: ModelConfig = cfg.model_config(64);
    model_cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let inputs = synth_batch(&model_cfg, args.steps, args.batch, cfg.seed);
    println!(
        "workload: steps={} batch={} repeats={} seed={} embed={} hidden={} layers={} conv_width={}",
        args.steps,
        args.batch,
        args.repeats,
        cfg.seed,
        model_cfg.embed_dim,
        model_cfg.hidden,
        model_cfg.layers,
        model_cfg.conv_width
    );
    // One untimed pass per variant to warm allocators and caches.
    for v in Variant::ALL {
        time_workload(v, &model_cfg, &inputs, cfg.seed, 1)?;
    }
    let mut rows: Vec<(&'static str, usize, Duration)> = Vec::new();
    for v in Variant::ALL {
        let (elapsed, checksum) = time_workload(v, &model_cfg, &inputs, cfg.seed, args.repeats)?;
        debug_assert!(checksum.is_finite());
        rows.push((v.name(), gate_weight_count(v, &model_cfg), elapsed));
    }
    let base = rows
        .iter()
        .find(|(name, _, _)| *name == "BiLSTM")
        .map(|(_, _, d)| d.as_secs_f64())
        .expect("baseline variant present");
    let mut report = String::new();
    report.push_str(&format!(
        "{:<20} {:>12} {:>12} {:>9}\n",
        "variant", "gate weights", "time (ms)", "relative"
    ));
    for (name, weights, elapsed) in &rows {
        report.push_str(&format!(
            "{:<20} {:>12} {:>12.1} {:>8.2}x\n",
            name,
            weights,
            elapsed.as_secs_f64() * 1e3,
            elapsed.as_secs_f64() / base
        ));
    }
    let gw = |v: Variant| gate_weight_count(v, &model_cfg);
    report.push_str(&format!(
        "gate-weight footprint: BiQQLSTM {} vs Bi-Quasi-LSTM {} ({}x), \
         Bi-Quaternion-LSTM {} vs BiLSTM {} ({}x)\n",
        gw(Variant::BiQqLstm),
        gw(Variant::BiQuasiLstm),
        gw(Variant::BiQuasiLstm) / gw(Variant::BiQqLstm),
        gw(Variant::BiQuaternionLstm),
        gw(Variant::BiLstm),
        gw(Variant::BiLstm) / gw(Variant::BiQuaternionLstm),
    ));
    print!("{report}");
    if let Some(dir) = &args.out {
        make_dir(dir)?;
        write_text(&dir.join("bench.txt"), &report)?;
    }
    Ok(())
}
