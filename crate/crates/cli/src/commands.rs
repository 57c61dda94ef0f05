//! Pipeline commands. Each consumes and produces file artifacts so stages are
//! independently rerunnable; every stage is resumable through the response
//! cache and finishes by writing its manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use valuelex::elicitation::{
    aggregate_lexicon, extract_terms, judge_filter, run_elicitation, CandidateTerm,
    ElicitationOptions, PromptSet,
};
use valuelex::gateway::{expand_grid, Gateway, Respondent};
use valuelex::judge::filter_prompt;
use valuelex::metrics::{
    join_annotations, parse_annotations_csv, quadratic_weighted_kappa, score_distribution,
    KappaResult, RatingPairs,
};
use valuelex::projective::{
    aggregate, comparative_scores, parse_scores_csv, run_completions, scores_to_csv,
    CompletionRecord, InclinationVector, ScoreRecord, ScoringRubric, StemSet,
};
use valuelex::taxonomy::{
    build_matrix, cluster_terms, factor_analysis, name_clusters, Taxonomy, TaxonomyMeta,
    MFT_JSON, STBHV_JSON,
};
use valuelex::{Error, Result};

use crate::artifacts::{
    completions_to_jsonl, to_pretty_json, FactorDiag, FactorDiagnostics, InclinationsArtifact,
    KappaArtifact, LexiconArtifact, LoadingRow, DIAGNOSTICS_SCHEMA, INCLINATIONS_SCHEMA,
    KAPPA_SCHEMA,
};
use crate::config::RunConfig;
use crate::context::RunContext;
use crate::manifest::{write_artifact, RunManifest};

/// Common result surface: data counts for assertions plus gateway traffic
/// stats, which stay out of the manifest so artifacts remain deterministic.
#[derive(Debug, Clone)]
pub struct CommandOutcome {
    pub manifest_path: PathBuf,
    pub counts: BTreeMap<String, u64>,
    pub warnings: Vec<String>,
    pub provider_calls: u64,
    pub cache_hits: u64,
}

fn fleet_for(config: &RunConfig) -> Result<Vec<Respondent>> {
    expand_grid(&config.fleet.models, &config.fleet.grid)
}

fn prompts_for(config: &RunConfig) -> Result<PromptSet> {
    match &config.elicitation.prompts_path {
        Some(path) => PromptSet::from_file(path),
        None => Ok(PromptSet::bundled()),
    }
}

fn stems_for(config: &RunConfig) -> Result<StemSet> {
    match &config.projective.stems_path {
        Some(path) => StemSet::from_file(path),
        None => Ok(StemSet::bundled()),
    }
}

fn finalize(
    command: &str,
    config: &RunConfig,
    ctx: &RunContext,
    gateway: &Gateway,
    counts: BTreeMap<String, u64>,
    warnings: Vec<String>,
    extra_seeds: BTreeMap<String, u64>,
) -> Result<CommandOutcome> {
    let mut seeds = extra_seeds;
    seeds.insert("master".into(), config.run.seed);
    let mut manifest = RunManifest::new(command, config.snapshot(), seeds);
    manifest.counts = counts.clone();
    manifest.warnings = warnings.clone();
    let manifest_path = manifest.finalize(&ctx.output_dir)?;
    Ok(CommandOutcome {
        manifest_path,
        counts,
        warnings,
        provider_calls: gateway.provider_calls(),
        cache_hits: gateway.cache_hits(),
    })
}

/// Stage 1: run the elicitation prompts over the fleet and distill the
/// candidate value lexicon.
pub fn cmd_elicit(config: &RunConfig, ctx: &RunContext) -> Result<CommandOutcome> {
    let fleet = fleet_for(config)?;
    let prompts = prompts_for(config)?;
    let gateway = ctx.gateway(config)?;
    let run = run_elicitation(
        &gateway,
        &fleet,
        &prompts,
        config.elicitation.repetitions,
        ElicitationOptions {
            failure_threshold: config.elicitation.failure_threshold,
        },
    )?;

    let mut candidates: Vec<CandidateTerm> = Vec::new();
    for (prompt_id, record) in &run.records {
        candidates.extend(extract_terms(record, *prompt_id));
    }
    let raw_words: u64 = candidates.iter().map(|t| t.count as u64).sum();
    let unique: Vec<String> = candidates
        .iter()
        .map(|t| t.surface.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let judge = ctx.judge(&gateway, config);
    let (kept, judge_warning) = judge_filter(&unique, &judge)?;
    let kept_set: BTreeSet<&String> = kept.iter().collect();
    let kept_terms: Vec<CandidateTerm> = candidates
        .iter()
        .filter(|t| kept_set.contains(&t.surface))
        .cloned()
        .collect();
    let lexicon = aggregate_lexicon(&kept_terms);

    write_artifact(
        &ctx.output_dir.join("lexicon.json"),
        to_pretty_json(&LexiconArtifact::new(&lexicon))?,
    )?;

    let mut counts = BTreeMap::new();
    counts.insert("respondents".into(), fleet.len() as u64);
    counts.insert("records".into(), run.records.len() as u64);
    counts.insert("failed_records".into(), run.failed as u64);
    counts.insert("raw_words".into(), raw_words);
    counts.insert("unique_candidates".into(), unique.len() as u64);
    counts.insert("kept_occurrences".into(), lexicon.total_occurrences());
    counts.insert("unique_terms".into(), lexicon.entries.len() as u64);

    let warnings: Vec<String> = judge_warning.into_iter().collect();
    finalize("elicit", config, ctx, &gateway, counts, warnings, BTreeMap::new())
}

/// Stage 2: factor analysis over the lexicon, embedding subclusters, judge
/// naming, correlation layout. Writes the taxonomy and factor diagnostics.
pub fn cmd_build_taxonomy(config: &RunConfig, ctx: &RunContext) -> Result<CommandOutcome> {
    let lexicon = LexiconArtifact::load(&ctx.output_dir.join("lexicon.json"))?;
    let fleet = fleet_for(config)?;
    let matrix = build_matrix(
        &lexicon,
        &fleet,
        config.taxonomy.min_support,
        config.taxonomy.weighting,
    )?;
    let (solution, mut warnings) = factor_analysis(&matrix)?;

    let gateway = ctx.gateway(config)?;
    let assigned: Vec<String> = solution.assignment.keys().cloned().collect();
    let embeddings = gateway.embed(&assigned)?;
    let kmeans_seed = config.run.seed.wrapping_add(1);
    let clusters = cluster_terms(
        &solution,
        &embeddings,
        (config.taxonomy.subcluster_min, config.taxonomy.subcluster_max),
        kmeans_seed,
        config.taxonomy.kmeans_restarts,
    )?;

    let judge = ctx.judge(&gateway, config);
    let mut method = BTreeMap::new();
    method.insert("extraction".into(), "pca".into());
    method.insert("retention".into(), "kaiser".into());
    method.insert("rotation".into(), "varimax".into());
    method.insert(
        "matrix".into(),
        format!("{:?}", config.taxonomy.weighting).to_lowercase(),
    );
    method.insert("subclustering".into(), "kmeans++/silhouette".into());
    if let Some(model) = gateway.embedding_model() {
        method.insert("embedder".into(), model);
    }
    let mut seeds = BTreeMap::new();
    seeds.insert("master".into(), config.run.seed);
    seeds.insert("kmeans".into(), kmeans_seed);
    let meta = TaxonomyMeta {
        id: "llm".into(),
        seeds,
        method,
        provenance: format!("built from lexicon.json at seed {}", config.run.seed),
    };
    let (taxonomy, naming_warnings) = name_clusters(&matrix, &solution, &clusters, &judge, meta)?;
    warnings.extend(naming_warnings);

    write_artifact(&ctx.output_dir.join("taxonomy.json"), to_pretty_json(&taxonomy)?)?;
    let diagnostics = FactorDiagnostics {
        schema: DIAGNOSTICS_SCHEMA.to_string(),
        eigenvalues: solution.eigenvalues.clone(),
        k: solution.k,
        rotation_converged: solution.rotation_converged,
        loadings: solution
            .terms
            .iter()
            .enumerate()
            .map(|(i, term)| LoadingRow {
                term: term.clone(),
                loadings: (0..solution.k).map(|j| solution.loadings[(i, j)]).collect(),
            })
            .collect(),
        dropped_terms: solution.dropped_terms.clone(),
        unassigned_terms: solution.unassigned.clone(),
        factors: clusters
            .factors
            .iter()
            .map(|fc| FactorDiag {
                factor: fc.factor,
                chosen_k: fc.chosen_k,
                silhouette: fc.silhouette,
                inertia: fc.inertia,
                subcluster_sizes: fc.subclusters.iter().map(|s| s.members.len()).collect(),
            })
            .collect(),
    };
    write_artifact(
        &ctx.output_dir.join("factor_diagnostics.json"),
        to_pretty_json(&diagnostics)?,
    )?;

    let mut counts = BTreeMap::new();
    counts.insert("matrix_rows".into(), matrix.respondents.len() as u64);
    counts.insert("matrix_terms".into(), matrix.terms.len() as u64);
    counts.insert("k".into(), taxonomy.dimensions.len() as u64);
    counts.insert("subdimensions".into(), taxonomy.subdim_order.len() as u64);
    counts.insert("unassigned_terms".into(), taxonomy.unassigned_terms.len() as u64);
    let mut extra_seeds = BTreeMap::new();
    extra_seeds.insert("kmeans".into(), kmeans_seed);
    finalize("build-taxonomy", config, ctx, &gateway, counts, warnings, extra_seeds)
}

/// Resolves a taxonomy reference: `builtin:stbhv`, `builtin:mft`, or a path.
pub fn resolve_taxonomy(reference: &str) -> Result<Taxonomy> {
    match reference {
        "builtin:stbhv" => Taxonomy::from_json(STBHV_JSON),
        "builtin:mft" => Taxonomy::from_json(MFT_JSON),
        path => Taxonomy::from_json_file(std::path::Path::new(path)),
    }
}

/// Stage 3: sentence-completion administration, judge scoring under every
/// requested taxonomy, aggregation into inclination vectors and chart data.
pub fn cmd_evaluate(
    config: &RunConfig,
    ctx: &RunContext,
    extra_taxonomies: &[String],
) -> Result<CommandOutcome> {
    let mut taxonomies: Vec<Taxonomy> = Vec::new();
    let built = ctx.output_dir.join("taxonomy.json");
    if built.exists() {
        taxonomies.push(Taxonomy::from_json_file(&built)?);
    }
    for reference in config.taxonomy.comparative.iter().chain(extra_taxonomies) {
        taxonomies.push(resolve_taxonomy(reference)?);
    }
    if taxonomies.is_empty() {
        return Err(Error::Config(
            "no taxonomy available: build one first or pass --taxonomy".into(),
        ));
    }

    let fleet = fleet_for(config)?;
    let stems = stems_for(config)?;
    let gateway = ctx.gateway(config)?;
    let judge = ctx.judge(&gateway, config);

    // Abort before any scoring if the judge is unreachable.
    judge
        .ask(&filter_prompt(&["probe".to_string()]))
        .map_err(|e| match e {
            Error::Transport(msg) => Error::Transport(format!("judge unavailable: {msg}")),
            other => other,
        })?;

    let mut completions: Vec<CompletionRecord> = Vec::new();
    for respondent in &fleet {
        completions.extend(run_completions(&gateway, respondent, &stems, config.projective.m)?);
    }

    let rubric = ScoringRubric::bundled();
    let refs: Vec<&Taxonomy> = taxonomies.iter().collect();
    let (scores, skipped) = comparative_scores(
        &completions,
        &refs,
        config.run.scoring_level,
        &rubric,
        &judge,
    )?;
    let vectors = aggregate(&scores, config.run.group_by);

    write_artifact(
        &ctx.output_dir.join("completions.jsonl"),
        completions_to_jsonl(&completions)?,
    )?;
    write_artifact(&ctx.output_dir.join("scores.csv"), scores_to_csv(&scores)?)?;
    write_artifact(
        &ctx.output_dir.join("inclinations.json"),
        to_pretty_json(&InclinationsArtifact {
            schema: INCLINATIONS_SCHEMA.to_string(),
            group_by: config.run.group_by,
            scoring_level: config.run.scoring_level,
            vectors: vectors.clone(),
        })?,
    )?;
    write_chart_data(ctx, &taxonomies, &vectors)?;

    let mut counts = BTreeMap::new();
    counts.insert("respondents".into(), fleet.len() as u64);
    counts.insert("completions".into(), completions.len() as u64);
    counts.insert("scores".into(), scores.len() as u64);
    counts.insert("skipped_scores".into(), skipped as u64);
    counts.insert("taxonomies".into(), taxonomies.len() as u64);
    finalize("evaluate", config, ctx, &gateway, counts, Vec::new(), BTreeMap::new())
}

/// Bar series (long form) and one radar table (wide form) per taxonomy.
fn write_chart_data(
    ctx: &RunContext,
    taxonomies: &[Taxonomy],
    vectors: &[InclinationVector],
) -> Result<()> {
    let mut bars = String::from("taxonomy_id,group_id,dimension,w,n\n");
    for v in vectors {
        for (dim, w) in &v.weights {
            bars.push_str(&format!(
                "{},{},{},{w},{}\n",
                v.taxonomy_id, v.group_id, dim, v.sample_counts[dim]
            ));
        }
    }
    write_artifact(&ctx.output_dir.join("chart_bars.csv"), bars)?;

    for taxonomy in taxonomies {
        let units = taxonomy.subdimension_names();
        let mut table = String::from("group_id");
        for unit in &units {
            table.push(',');
            table.push_str(unit);
        }
        table.push('\n');
        for v in vectors.iter().filter(|v| v.taxonomy_id == taxonomy.id) {
            table.push_str(&v.group_id);
            for unit in &units {
                table.push(',');
                if let Some(w) = v.weights.get(unit) {
                    table.push_str(&w.to_string());
                }
            }
            table.push('\n');
        }
        write_artifact(
            &ctx.output_dir.join(format!("chart_radar_{}.csv", taxonomy.id)),
            table,
        )?;
    }
    Ok(())
}

pub struct KappaOutcome {
    pub outcome: CommandOutcome,
    pub kappa: KappaResult,
    pub pairs: usize,
}

/// Stage 4: joins judge scores with a human annotation file and reports
/// quadratic weighted kappa.
pub fn cmd_kappa(
    config: &RunConfig,
    ctx: &RunContext,
    scores_path: Option<&std::path::Path>,
    annotations_path: &std::path::Path,
) -> Result<KappaOutcome> {
    let scores_path = scores_path
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| ctx.output_dir.join("scores.csv"));
    let scores: Vec<ScoreRecord> =
        parse_scores_csv(&std::fs::read_to_string(&scores_path)?, "recorded")?;
    let annotations = parse_annotations_csv(&std::fs::read_to_string(annotations_path)?)?;
    let pairs = join_annotations(&scores, &annotations);
    if pairs.is_empty() {
        return Err(Error::NoOverlap(format!(
            "no annotation joins any score record ({} scores, {} annotations)",
            scores.len(),
            annotations.len()
        )));
    }
    let rating_pairs = RatingPairs::new(pairs.clone(), 7)?;
    let kappa = quadratic_weighted_kappa(&rating_pairs)?;

    let gateway = ctx.gateway(config)?;
    write_artifact(
        &ctx.output_dir.join("kappa.json"),
        to_pretty_json(&KappaArtifact {
            schema: KAPPA_SCHEMA.to_string(),
            value: kappa.value,
            degenerate: kappa.degenerate,
            pairs: pairs.len(),
        })?,
    )?;
    let mut counts = BTreeMap::new();
    counts.insert("pairs".into(), pairs.len() as u64);
    counts.insert("scores".into(), scores.len() as u64);
    counts.insert("annotations".into(), annotations.len() as u64);
    let outcome = finalize("kappa", config, ctx, &gateway, counts, Vec::new(), BTreeMap::new())?;
    Ok(KappaOutcome {
        outcome,
        kappa,
        pairs: pairs.len(),
    })
}

/// Stage 5: renders a plain-text report from the evaluation artifacts.
pub fn cmd_report(config: &RunConfig, ctx: &RunContext) -> Result<(CommandOutcome, String)> {
    let inclinations = InclinationsArtifact::load(&ctx.output_dir.join("inclinations.json"))?;
    let scores_path = ctx.output_dir.join("scores.csv");
    let histograms = if scores_path.exists() {
        let scores = parse_scores_csv(&std::fs::read_to_string(&scores_path)?, "recorded")?;
        score_distribution(&scores)
    } else {
        BTreeMap::new()
    };
    let kappa_path = ctx.output_dir.join("kappa.json");
    let kappa: Option<KappaArtifact> = if kappa_path.exists() {
        Some(serde_json::from_str(&std::fs::read_to_string(&kappa_path)?)?)
    } else {
        None
    };

    let mut text = String::new();
    text.push_str(&format!(
        "value inclination report (group by {:?}, scoring level {:?})\n",
        inclinations.group_by, inclinations.scoring_level
    ));
    let mut current_taxonomy = String::new();
    for v in &inclinations.vectors {
        if v.taxonomy_id != current_taxonomy {
            current_taxonomy = v.taxonomy_id.clone();
            text.push_str(&format!("\ntaxonomy: {current_taxonomy}\n"));
            text.push_str(&format!("{:<24} {:<20} {:>8} {:>8}\n", "group", "dimension", "w", "n"));
        }
        for (dim, w) in &v.weights {
            text.push_str(&format!(
                "{:<24} {:<20} {:>8.4} {:>8}\n",
                v.group_id, dim, w, v.sample_counts[dim]
            ));
        }
    }
    if !histograms.is_empty() {
        text.push_str("\nscore distribution (bins 0..6)\n");
        for (dim, hist) in &histograms {
            text.push_str(&format!(
                "{:<24} {:?} mean {:.3} var {:.3}\n",
                dim, hist.bins, hist.mean, hist.variance
            ));
        }
    }
    if let Some(k) = &kappa {
        text.push_str(&format!(
            "\njudge reliability: quadratic weighted kappa = {:.6} over {} pairs{}\n",
            k.value,
            k.pairs,
            if k.degenerate { " (degenerate)" } else { "" }
        ));
    }

    write_artifact(&ctx.output_dir.join("report.txt"), text.clone())?;
    let gateway = ctx.gateway(config)?;
    let mut counts = BTreeMap::new();
    counts.insert("vectors".into(), inclinations.vectors.len() as u64);
    let outcome = finalize("report", config, ctx, &gateway, counts, Vec::new(), BTreeMap::new())?;
    Ok((outcome, text))
}
