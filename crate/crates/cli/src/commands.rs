use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use conation_core::evaluator::{evaluate, render_report, synth_benchmark, SynthParams, TestManifest};
use conation_core::features::{extract_features, read_mfcc, read_wav, write_mfcc, ObservationSequence};
use conation_core::recognizer::{recognize, DispatchMap, RecognitionResult, Session};
use conation_core::registry::{load_registry, profile_dir, profiles_root, ModelDocument, ModelRegistry, RegistryError};
use conation_core::trainer::{segmental_kmeans, TrainError, TrainingConfig};

use crate::{Cli, Command, RegistryCommand, TrainingFlags};

/// Runs one subcommand. `Ok(false)` means some per-file work failed and was
/// already reported on stderr.
pub fn run(cli: Cli) -> Result<bool> {
    let profile = cli.profile;
    match cli.command {
        Command::ExtractFeature { wavs, dim, out_dir } => extract_feature(&wavs, dim, out_dir.as_deref()),
        Command::Train { n_states, dim, files, word, training } => {
            train(n_states, dim, &files, word.as_deref(), &profile, training)
        }
        Command::Recognise { files, threshold, interpret, dispatch, allow_empty } => {
            recognise(&files, &profile, threshold, interpret, dispatch.as_deref(), allow_empty)
        }
        Command::Eval { manifest, threshold, format } => {
            let registry = open_registry(&profile)?;
            let manifest = TestManifest::load(&manifest)?;
            let report = evaluate(&manifest, &registry, threshold)?;
            print!("{}", render_report(&report, format.into()));
            Ok(true)
        }
        Command::Synth {
            words,
            n_train,
            n_test,
            seed,
            states,
            dim,
            separation,
            identical_models,
            format,
            training,
        } => {
            let config = training_config(states, dim, training)?;
            let params = SynthParams::new(words, n_train, n_test)
                .with_seed(seed)
                .with_separation(separation)
                .with_identical_models(identical_models);
            let report = synth_benchmark(&params, &config)?;
            print!("{}", render_report(&report, format.into()));
            Ok(true)
        }
        Command::Registry { action: RegistryCommand::List } => {
            let registry = open_registry(&profile)?;
            let mut out = io::stdout().lock();
            for e in registry.entries() {
                writeln!(out, "{}\t{}", e.word, registry.model_path(e).display())?;
            }
            Ok(true)
        }
    }
}

fn training_config(n_states: usize, dim: usize, flags: TrainingFlags) -> Result<TrainingConfig> {
    let config = TrainingConfig::new(n_states, dim)
        .with_max_iterations(flags.max_iterations)
        .with_transition_floor(flags.transition_floor);
    config.validate()?;
    Ok(config)
}

fn profile_root(profile: &str) -> Result<PathBuf> {
    Ok(profile_dir(&profiles_root(), profile)?)
}

fn open_registry(profile: &str) -> Result<ModelRegistry> {
    let root = profile_root(profile)?;
    load_registry(&root).with_context(|| format!("profile '{profile}'"))
}

fn mfcc_path(wav: &Path, out_dir: Option<&Path>) -> PathBuf {
    let out = wav.with_extension("mfcc");
    match (out_dir, out.file_name()) {
        (Some(dir), Some(name)) => dir.join(name),
        _ => out,
    }
}

fn extract_feature(wavs: &[PathBuf], dim: usize, out_dir: Option<&Path>) -> Result<bool> {
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut ok = true;
    let mut out = io::stdout().lock();
    for wav in wavs {
        let target = mfcc_path(wav, out_dir);
        let result = read_wav(wav)
            .and_then(|clip| extract_features(&clip, dim))
            .and_then(|seq| write_mfcc(&seq, &target).map(|()| seq));
        match result {
            Ok(seq) => writeln!(out, "{}\t{}\t{} frames x {}", wav.display(), target.display(), seq.len(), seq.dim())?,
            Err(e) => {
                eprintln!("{}", per_file(wav, &e.to_string()));
                ok = false;
            }
        }
    }
    Ok(ok)
}

fn train(
    n_states: usize,
    dim: usize,
    files: &[PathBuf],
    word: Option<&str>,
    profile: &str,
    flags: TrainingFlags,
) -> Result<bool> {
    let config = training_config(n_states, dim, flags)?;
    if let Some(w) = word {
        conation_core::registry::validate_word(w)?;
    }
    let mut sets: Vec<ObservationSequence> = Vec::with_capacity(files.len());
    for f in files {
        let seq = read_mfcc(f).with_context(|| f.display().to_string())?;
        if seq.dim() != dim {
            bail!("{}: feature dimension is {}, expected {dim}", f.display(), seq.dim());
        }
        sets.push(seq);
    }
    let model = segmental_kmeans(&config, &sets).map_err(|e| match e {
        TrainError::NoAdmissiblePath { set } | TrainError::DimensionMismatch { set, .. } => {
            anyhow::Error::new(e).context(files[set].display().to_string())
        }
        TrainError::TooFewFrames { .. } => anyhow::Error::new(e).context(files[0].display().to_string()),
        other => other.into(),
    })?;

    match word {
        None => {
            let xml = ModelDocument::from_model(&model).to_xml()?;
            io::stdout().lock().write_all(xml.as_bytes())?;
        }
        Some(w) => {
            let root = profile_root(profile)?;
            let mut registry = ModelRegistry::open_or_create(&root)?;
            registry.add_entry(w, &model)?;
            eprintln!("registered '{w}' in profile '{profile}' ({} states, dim {dim})", model.n_states());
        }
    }
    Ok(true)
}

fn recognise(
    files: &[PathBuf],
    profile: &str,
    threshold: Option<f64>,
    interpret: bool,
    dispatch: Option<&Path>,
    allow_empty: bool,
) -> Result<bool> {
    let dispatch = match dispatch {
        Some(p) => DispatchMap::load(p)?,
        None => DispatchMap::with_default_vocabulary(),
    };
    let models = match open_registry(profile) {
        Ok(r) => r.load_models()?,
        Err(e) if allow_empty && is_missing_index(&e) => Vec::new(),
        Err(e) => return Err(e),
    };
    if models.is_empty() && !allow_empty {
        bail!("profile '{profile}' has no registered models (use --allow-empty to reject everything)");
    }

    let mut session = interpret.then(|| Session::new(dispatch));
    let mut ok = true;
    let mut out = io::stdout().lock();
    for f in files {
        let result = read_mfcc(f).map_err(anyhow::Error::from).and_then(|seq| Ok(recognize(&models, &seq, threshold)?));
        let result = match result {
            Ok(r) => r,
            Err(e) => {
                eprintln!("{}", per_file(f, &describe(&e)));
                ok = false;
                continue;
            }
        };
        writeln!(out, "{}", result_line(f, &result))?;
        if let Some(event) = session.as_mut().and_then(|s| s.feed(&result)) {
            writeln!(out, "{}", event.to_json_line())?;
        }
    }
    Ok(ok)
}

fn per_file(path: &Path, msg: &str) -> String {
    let shown = path.display().to_string();
    if msg.starts_with(&shown) {
        msg.to_string()
    } else {
        format!("{shown}: {msg}")
    }
}

fn is_missing_index(e: &anyhow::Error) -> bool {
    matches!(e.downcast_ref::<RegistryError>(), Some(RegistryError::MissingIndex(_)))
}

fn result_line(path: &Path, result: &RecognitionResult) -> String {
    match (result.word(), result.best_score) {
        (Some(w), Some(s)) => format!("{}\t{w}\t{s:.6}", path.display()),
        _ => format!("{}\t<rejected>", path.display()),
    }
}

/// Joins an error chain, skipping causes whose text the previous message
/// already spells out (library errors often embed their source).
pub fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}
