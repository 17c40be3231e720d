use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;

use upcall_core::audio::{load_labeled_clips, read_audio, read_clip_at, read_manifest};
use upcall_core::evaluate::{evaluate_models, score_clips, summary_text, write_report};
use upcall_core::pipeline::{
    analyze, config_from_model, embed_config, featurize_clips, operating_threshold, train_model, ClipAnalysis,
};
use upcall_core::regions::Region;
use upcall_core::synth::{generate, write_dataset, SynthSpec};
use upcall_core::{AudioClip, Label, LabeledClip, Network, PipelineConfig, Spectrogram};

use crate::{Cli, Command, Global, Inputs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<upcall_core::Error> for CliError {
    fn from(e: upcall_core::Error) -> Self {
        use upcall_core::Error as E;
        match e {
            E::Config(_) => CliError::Usage(e.to_string()),
            E::EmptyRegion | E::NonFinite(_) => CliError::Internal(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    if cli.global.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Synth { spec, out } => synth(g, spec.as_deref(), out),
        Command::Featurize { manifest, out } => featurize(&pipeline_config(g)?, manifest, out.as_deref()),
        Command::Detect { input, out } => detect(&pipeline_config(g)?, input, out.as_deref()),
        Command::Train {
            manifest,
            model,
            loss,
            threshold,
        } => train(&pipeline_config(g)?, manifest, model, loss.as_deref(), *threshold, g.force),
        Command::Classify { model, input, out } => classify(g, model, input, out.as_deref()),
        Command::Eval { models, manifest, out } => eval(g, models, manifest, out),
        Command::Render {
            audio,
            stage,
            offset,
            out,
        } => render(&pipeline_config(g)?, audio, stage, *offset, out),
    }
}

/// Defaults, then the config file, then flags. The result goes to stderr so
/// every run records what it used.
fn pipeline_config(g: &Global) -> Result<PipelineConfig> {
    let mut cfg = match &g.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.train.seed = seed;
    }
    if let Some(mode) = g.features {
        cfg.features = mode;
    }
    cfg.validate()?;
    eprint!("# effective configuration\n{}", cfg.to_text());
    Ok(cfg)
}

fn write_output(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, body).map_err(|e| CliError::Data(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Data(format!("cannot write output: {e}"))),
    }
}

fn refuse_overwrite(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(CliError::Usage(format!(
            "{} already exists (use --force to overwrite)",
            path.display()
        )));
    }
    Ok(())
}

fn base_dir(manifest: &Path) -> &Path {
    manifest.parent().unwrap_or(Path::new("."))
}

fn load_manifest_clips(manifest: &Path) -> Result<Vec<LabeledClip>> {
    let m = read_manifest(manifest)?;
    let clips = load_labeled_clips(&m, base_dir(manifest))?;
    if clips.is_empty() {
        return Err(CliError::Data(format!("{} lists no clips", manifest.display())));
    }
    info!("loaded {} clips from {}", clips.len(), manifest.display());
    Ok(clips)
}

fn load_inputs(input: &Inputs) -> Result<Vec<AudioClip>> {
    if let Some(m) = &input.manifest {
        return Ok(load_manifest_clips(m)?.into_iter().map(|lc| lc.clip).collect());
    }
    let mut clips = Vec::new();
    for f in &input.files {
        clips.extend(read_audio(f)?);
    }
    Ok(clips)
}

fn synth(g: &Global, spec_path: Option<&Path>, out: &Path) -> Result<()> {
    let mut spec = match spec_path.or(g.config.as_deref()) {
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| CliError::Data(format!("cannot read {}: {e}", p.display())))?;
            SynthSpec::from_text(&text)?
        }
        None => SynthSpec::default(),
    };
    if let Some(seed) = g.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    eprint!("# effective synth spec\n{}", spec.to_text());

    let occupied = out.exists() && fs::read_dir(out).map(|mut d| d.next().is_some()).unwrap_or(true);
    if occupied && !g.force {
        return Err(CliError::Usage(format!(
            "{} is not empty (use --force to write into it)",
            out.display()
        )));
    }
    let clips = generate(&spec)?;
    let manifest = write_dataset(out, &clips)?;
    let positives = clips.iter().filter(|c| c.label.is_positive()).count();
    let with_clutter = clips.iter().filter(|c| c.distractor.is_some()).count();
    println!(
        "wrote {} clips ({positives} upcall, {} noise, {with_clutter} with distractors) and {}",
        clips.len(),
        clips.len() - positives,
        manifest.display()
    );
    Ok(())
}

fn featurize(cfg: &PipelineConfig, manifest: &Path, out: Option<&Path>) -> Result<()> {
    let clips = load_manifest_clips(manifest)?;
    let mut body = format!("clip,label,{}\n", cfg.features.feature_names().join(","));
    for (lc, f) in clips.iter().zip(featurize_clips(&clips, cfg)) {
        let values: Vec<String> = f?.values.iter().map(|v| v.to_string()).collect();
        body.push_str(&format!("{},{},{}\n", lc.clip.id(), lc.label, values.join(",")));
    }
    write_output(out, &body)
}

const REGION_HEADER: &str = "clip,region,row_min,row_max,col_min,col_max,area_px,perimeter_px,height_hz,width_s,\
orientation_deg,hw_ratio,freq_min_hz,freq_max_hz,axes_ratio,kept,failed_criterion\n";

fn region_row(clip: &str, i: usize, r: &Region, verdict: Option<upcall_core::regions::Criterion>) -> String {
    format!(
        "{clip},{i},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        r.bbox.row_min,
        r.bbox.row_max,
        r.bbox.col_min,
        r.bbox.col_max,
        r.area_px,
        r.perimeter_px,
        r.height_hz,
        r.width_s,
        r.orientation_deg,
        r.height_width_ratio(),
        r.freq_min_hz,
        r.freq_max_hz,
        r.axes_ratio,
        verdict.is_none(),
        verdict.map_or(String::new(), |c| c.to_string())
    )
}

fn analyze_all(clips: &[AudioClip], cfg: &PipelineConfig) -> Vec<upcall_core::Result<ClipAnalysis>> {
    use rayon::prelude::*;
    clips.par_iter().map(|c| analyze(c, cfg)).collect()
}

fn detect(cfg: &PipelineConfig, input: &Inputs, out: Option<&Path>) -> Result<()> {
    let clips = load_inputs(input)?;
    let mut body = String::from(REGION_HEADER);
    for (clip, a) in clips.iter().zip(analyze_all(&clips, cfg)) {
        let a = a?;
        for (i, (r, v)) in a.regions.iter().zip(&a.verdicts).enumerate() {
            body.push_str(&region_row(&clip.id(), i, r, *v));
        }
    }
    write_output(out, &body)
}

fn train(
    cfg: &PipelineConfig,
    manifest: &Path,
    model_path: &Path,
    loss_path: Option<&Path>,
    threshold: Option<f64>,
    force: bool,
) -> Result<()> {
    let loss_path = loss_path.map_or_else(
        || PathBuf::from(format!("{}.loss.csv", model_path.display())),
        Path::to_path_buf,
    );
    refuse_overwrite(model_path, force)?;
    refuse_overwrite(&loss_path, force)?;
    if let Some(t) = threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(CliError::Usage(format!("--threshold must be in [0, 1], got {t}")));
        }
    }
    let clips = load_manifest_clips(manifest)?;
    let mut outcome = train_model(&clips, cfg)?;
    if threshold.is_some() {
        embed_config(&mut outcome.network, cfg, threshold);
    }
    outcome.network.save(model_path)?;
    let mut loss = String::from("epoch,loss\n");
    for (i, l) in outcome.loss_trace.iter().enumerate() {
        loss.push_str(&format!("{},{l}\n", i + 1));
    }
    write_output(Some(&loss_path), &loss)?;
    println!(
        "trained {} on {} clips; final loss {:.6}; wrote {} and {}",
        cfg.features,
        clips.len(),
        outcome.loss_trace.last().copied().unwrap_or(f64::NAN),
        model_path.display(),
        loss_path.display()
    );
    Ok(())
}

/// Loads a model and checks that an explicit `--features` agrees with it.
fn load_model(g: &Global, path: &Path) -> Result<(Network, PipelineConfig)> {
    let net = Network::load(path)?;
    let cfg = config_from_model(&net)?;
    if let Some(mode) = g.features {
        if mode != cfg.features {
            return Err(CliError::Usage(format!(
                "--features {mode} does not match model {} ({}, {} inputs)",
                path.display(),
                cfg.features,
                net.n_inputs()
            )));
        }
    }
    Ok((net, cfg))
}

fn classify(g: &Global, model: &Path, input: &Inputs, out: Option<&Path>) -> Result<()> {
    let (net, cfg) = load_model(g, model)?;
    eprint!("# configuration stored in {}\n{}", model.display(), cfg.to_text());
    let threshold = operating_threshold(&net);
    let clips: Vec<LabeledClip> = load_inputs(input)?
        .into_iter()
        .map(|clip| LabeledClip {
            clip,
            label: Label::Noise,
        })
        .collect();
    let (scores, failures) = score_clips(&net, &clips)?;
    if failures > 0 {
        return Err(CliError::Data(format!("{failures} clips could not be processed")));
    }
    let mut body = String::from("clip_id,score,decision\n");
    for s in scores {
        let decision = if s.score >= threshold { Label::Upcall } else { Label::Noise };
        body.push_str(&format!("{},{},{decision}\n", s.id, s.score));
    }
    write_output(out, &body)
}

fn eval(g: &Global, models: &[PathBuf], manifest: &Path, out: &Path) -> Result<()> {
    let nets = models
        .iter()
        .map(|p| load_model(g, p).map(|(n, _)| n))
        .collect::<Result<Vec<_>>>()?;
    let clips = load_manifest_clips(manifest)?;
    let reports = evaluate_models(&nets, &clips)?;
    write_report(out, &reports)?;
    print!("{}", summary_text(&reports));
    Ok(())
}

const STAGES: [&str; 5] = ["raw", "preprocessed", "binary", "regions", "roi"];

fn render(cfg: &PipelineConfig, audio: &Path, stage: &str, offset: f64, out: &Path) -> Result<()> {
    if !STAGES.contains(&stage) {
        return Err(CliError::Usage(format!(
            "unknown stage `{stage}` (valid stages: {})",
            STAGES.join(", ")
        )));
    }
    let clip = read_clip_at(audio, offset)?;
    let a = analyze(&clip, cfg)?;
    let image: Spectrogram = match stage {
        "raw" => a.raw.clone(),
        "preprocessed" => a.conditioned.clone(),
        "binary" => a.binary.to_spectrogram(&a.conditioned),
        "regions" => {
            let mut v = a.conditioned.values.clone();
            let top = v.iter().copied().fold(0.0f64, f64::max).max(1.0);
            for r in a.kept() {
                for &p in &r.boundary {
                    v[p] = top;
                }
            }
            a.conditioned.with_values(v)
        }
        _ => a.roi.clone(),
    };
    fs::write(out, image.to_pgm()).map_err(|e| CliError::Data(format!("cannot write {}: {e}", out.display())))?;
    println!("wrote {stage} stage of {} to {}", clip.id(), out.display());
    Ok(())
}
