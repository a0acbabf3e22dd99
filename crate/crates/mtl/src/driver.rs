//! Batch driver: walk the declared decomposition tree, compute peripheral
//! structures bottom up, verify them, suspend them in the mapping torus,
//! and write deterministic JSON/DOT reports.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{emit_config, JobConfig, SplitDecl};
use crate::error::{Error, Result};
use crate::growth::{classify_element, GrowthClass, GrowthReport};
use crate::json::Json;
use crate::rng::SplitMix64;
use crate::splittings::{
    build_hnn_context, build_product_context, candidate_structure, hnn_peripheral_structure,
    product_peripheral_structure, verify_k_coset, verify_peripheral_structure, HnnContext, KStatus,
    PeripheralStructure, SearchBounds, StructureEntry, VerificationReport,
};
use crate::subgroups::SubgroupGraph;
use crate::suspension::{relhyp_structure, torus_presentation, NodeCase, RelHypStructure};
use crate::words::{random_reduced_word, Metric, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliCommand {
    Growth,
    Peripheral,
    Suspend,
    Verify,
}

impl CliCommand {
    pub fn parse(text: &str) -> Option<CliCommand> {
        match text {
            "growth" => Some(CliCommand::Growth),
            "peripheral" => Some(CliCommand::Peripheral),
            "suspend" => Some(CliCommand::Suspend),
            "verify" => Some(CliCommand::Verify),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub echo_json: bool,
    pub write_dot: bool,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: Vec<String>,
    pub files: Vec<PathBuf>,
    pub json: Vec<(String, String)>,
}

/// One analyzed node of the decomposition tree.
#[derive(Debug)]
pub struct NodeAnalysis {
    pub structure: PeripheralStructure,
    pub node_case: NodeCase,
    pub scott: (usize, usize),
    pub kurosh_rank: usize,
    pub hnn: Option<HnnContext>,
    pub notes: Vec<String>,
}

fn split_support(split: &SplitDecl) -> BTreeSet<usize> {
    match split {
        SplitDecl::Hnn { factor, stable } => {
            let mut s: BTreeSet<usize> = factor.iter().copied().collect();
            s.insert(*stable);
            s
        }
        SplitDecl::Product { left, right } => left.iter().chain(right.iter()).copied().collect(),
    }
}

fn letters_mask(n: usize, letters: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &g in letters {
        mask[g] = true;
    }
    mask
}

/// Recursive analysis: find the declared split covering exactly this
/// node's letters, recurse into its factors, and assemble. A node with no
/// split is a rank-one leaf or falls back to declared candidate
/// subgroups, verified behaviorally.
pub fn analyze(config: &JobConfig, letters: &[usize]) -> Result<NodeAnalysis> {
    let alpha = &config.alpha;
    let n = config.basis.len();
    let bounds = &config.bounds;
    let here: BTreeSet<usize> = letters.iter().copied().collect();
    let split = config.splits.iter().find(|s| split_support(s) == here);

    match split {
        Some(SplitDecl::Hnn { factor, stable }) => {
            let child = analyze(config, factor)?;
            let a0 = match config.a0_override() {
                Some(words)
                    if words
                        .iter()
                        .all(|w| w.supported_by(&letters_mask(n, factor))) =>
                {
                    Some(SubgroupGraph::fold(n, words))
                }
                _ => None,
            };
            let ctx = build_hnn_context(&config.basis, factor, *stable, alpha, a0, bounds)?;
            let structure = hnn_peripheral_structure(&ctx, &child.structure, bounds)?;
            let node_case = NodeCase::Hnn {
                factor: factor.clone(),
                stable: *stable,
                h: ctx.h.clone(),
                a0_trivial: ctx.a0.is_trivial(),
                b0_trivial: ctx.b0.is_trivial(),
                k_found: ctx.k_status.is_found(),
            };
            let mut notes = child.notes;
            notes.push(format!(
                "hnn node on {} letters: A0 rank {}, B0 rank {}, K {}",
                factor.len() + 1,
                ctx.a0.rank(),
                ctx.b0.rank(),
                match &ctx.k_status {
                    KStatus::Found { k0 } => format!("solved at '{}'", config.basis.render(k0)),
                    KStatus::EmptyWithin { radius } => format!("empty within radius {radius}"),
                },
            ));
            Ok(NodeAnalysis {
                structure,
                node_case,
                scott: (1, 1),
                kurosh_rank: 2,
                hnn: Some(ctx),
                notes,
            })
        }
        Some(SplitDecl::Product { left, right }) => {
            let left_child = analyze(config, left)?;
            let right_child = analyze(config, right)?;
            let ctx = build_product_context(&config.basis, left, right, alpha)?;
            let preserved = |s: &PeripheralStructure| {
                s.entries
                    .iter()
                    .any(|e| alpha.image_subgroup(&e.graph) == e.graph)
            };
            let node_case = NodeCase::Product {
                left: left.clone(),
                right: right.clone(),
                left_parabolic: preserved(&left_child.structure),
                right_parabolic: preserved(&right_child.structure),
            };
            let structure = product_peripheral_structure(
                &ctx,
                &left_child.structure,
                &right_child.structure,
                bounds,
            )?;
            let mut notes = left_child.notes;
            notes.extend(right_child.notes);
            notes.push(format!(
                "product node: {} + {} letters",
                left.len(),
                right.len()
            ));
            Ok(NodeAnalysis {
                structure,
                node_case,
                scott: (0, 2),
                kurosh_rank: 2,
                hnn: None,
                notes,
            })
        }
        None if letters.len() == 1 => {
            let graph = SubgroupGraph::fold(n, &[Word::generator(letters[0])]);
            let structure = candidate_structure(alpha, &[(None, graph)], bounds)?;
            let mut structure = structure;
            structure.entries[0].provenance = "rank-one-leaf".into();
            Ok(NodeAnalysis {
                structure,
                node_case: NodeCase::Candidate,
                scott: (1, 0),
                kurosh_rank: 1,
                hnn: None,
                notes: vec![format!("rank-one leaf '{}'", config.basis.name(letters[0]))],
            })
        }
        None => {
            let mask = letters_mask(n, letters);
            let named: Vec<(Option<String>, SubgroupGraph)> = config
                .candidates()
                .into_iter()
                .filter(|(_, words)| words.iter().all(|w| w.supported_by(&mask)))
                .map(|(name, words)| (Some(name), SubgroupGraph::fold(n, &words)))
                .collect();
            if named.is_empty() {
                let hint = if config.splits.is_empty() {
                    ""
                } else {
                    "; a split applies only to the factor whose letters it covers exactly"
                };
                return Err(Error::BoundedFailure(format!(
                    "no declared splitting covers this rank-{} factor and no candidate subgroups were supplied{hint}",
                    letters.len()
                )));
            }
            let structure = candidate_structure(alpha, &named, bounds)?;
            let notes = vec![format!(
                "candidate structure with {} entries on a rank-{} factor",
                structure.entries.len(),
                letters.len()
            )];
            Ok(NodeAnalysis {
                structure,
                node_case: NodeCase::Candidate,
                scott: (letters.len(), 0),
                kurosh_rank: letters.len(),
                hnn: None,
                notes,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// JSON assembly
// ---------------------------------------------------------------------------

fn growth_report_json(config: &JobConfig, report: &GrowthReport) -> Json {
    let b = &config.basis;
    let mut o = Json::obj();
    o.push("element", Json::Str(b.render(&report.sequence.element)));
    o.push(
        "metric",
        Json::Str(report.sequence.metric.label().to_string()),
    );
    o.push("class", Json::Str(report.class.label().to_string()));
    match &report.class {
        GrowthClass::Polynomial { degree, .. } => {
            o.push("degree", Json::Int(*degree as i64));
        }
        GrowthClass::Exponential { rate, .. } => {
            o.push("rate", Json::Float(*rate));
        }
        _ => {}
    }
    o.push("certified", Json::Bool(report.certified));
    o.push("horizon", Json::Int(report.sequence.horizon as i64));
    o.push(
        "values",
        Json::Arr(
            report
                .sequence
                .values
                .iter()
                .map(|&v| Json::Int(v as i64))
                .collect(),
        ),
    );
    o
}

fn bounds_json(bounds: &SearchBounds) -> Json {
    let mut o = Json::obj();
    o.push("horizon", Json::Int(bounds.horizon as i64));
    o.push("radius", Json::Int(bounds.radius as i64));
    o.push("maxExp", Json::Int(bounds.max_exp as i64));
    o.push("maxConj", Json::Int(bounds.max_conj as i64));
    o.push("seed", Json::Int(bounds.seed as i64));
    o
}

fn entry_json(config: &JobConfig, entry: &StructureEntry) -> Json {
    let b = &config.basis;
    let mut o = Json::obj();
    if let Some(name) = &entry.name {
        o.push("name", Json::Str(name.clone()));
    }
    o.push(
        "generators",
        Json::from_strings(entry.graph.generator_words(b)),
    );
    o.push("provenance", Json::Str(entry.provenance.clone()));
    o
}

fn verification_json(config: &JobConfig, report: &VerificationReport) -> Json {
    let b = &config.basis;
    let mut o = Json::obj();
    o.push("passed", Json::Bool(report.passed));
    o.push("malnormal", Json::Bool(report.malnormal_ok));
    if let Some(w) = &report.malnormality.witness {
        let mut wj = Json::obj();
        wj.push(
            "entries",
            Json::Arr(vec![Json::Int(w.i as i64), Json::Int(w.j as i64)]),
        );
        wj.push("conjugator", Json::Str(b.render(&w.conjugator)));
        wj.push("element", Json::Str(b.render(&w.element)));
        o.push("malnormality_witness", wj);
    }
    let growth = report
        .growth_lines
        .iter()
        .map(|line| {
            let mut g = Json::obj();
            g.push("entry", Json::Int(line.entry as i64));
            g.push("generator", Json::Str(b.render(&line.generator)));
            g.push("class", Json::Str(line.class_label.clone()));
            g
        })
        .collect();
    o.push("growth_ok", Json::Bool(report.growth_ok));
    o.push("growth", Json::Arr(growth));
    o.push("twinning_ok", Json::Bool(report.twinning_ok));
    if let Some((i, j, exp, g)) = &report.twinning.violation {
        let mut tj = Json::obj();
        tj.push(
            "entries",
            Json::Arr(vec![Json::Int(*i as i64), Json::Int(*j as i64)]),
        );
        tj.push("exponent", Json::Int(*exp as i64));
        tj.push("conjugator", Json::Str(b.render(g)));
        o.push("twinning_violation", tj);
    }
    let mut cj = Json::obj();
    cj.push(
        "sample_length",
        Json::Int(report.completeness.sample_length as i64),
    );
    cj.push("checked", Json::Int(report.completeness.checked as i64));
    cj.push(
        "skipped_members",
        Json::Int(report.completeness.skipped_members as i64),
    );
    cj.push(
        "failures",
        Json::from_strings(report.completeness.failures.iter().map(|w| b.render(w))),
    );
    o.push("completeness", cj);
    o
}

fn hnn_json(config: &JobConfig, ctx: &HnnContext) -> Json {
    let b = &config.basis;
    let mut o = Json::obj();
    o.push("h", Json::Str(b.render(&ctx.h)));
    o.push("a0", Json::from_strings(ctx.a0.generator_words(b)));
    match ctx.a0_radius {
        Some(r) => o.push("a0_radius", Json::Int(r as i64)),
        None => o.push("a0_radius", Json::Null),
    }
    o.push("b0", Json::from_strings(ctx.b0.generator_words(b)));
    match ctx.b0_radius {
        Some(r) => o.push("b0_radius", Json::Int(r as i64)),
        None => o.push("b0_radius", Json::Null),
    }
    match &ctx.k_status {
        KStatus::Found { k0 } => {
            o.push("k", Json::Str("found".into()));
            o.push("k0", Json::Str(b.render(k0)));
        }
        KStatus::EmptyWithin { radius } => {
            o.push("k", Json::Str("empty-within".into()));
            o.push("k_radius", Json::Int(*radius as i64));
        }
    }
    o
}

fn peripheral_json(
    config: &JobConfig,
    analysis: &NodeAnalysis,
    verification: &VerificationReport,
) -> Json {
    let mut o = Json::obj();
    o.push("case", Json::Str(analysis.node_case.label()));
    o.push(
        "scott",
        Json::Arr(vec![
            Json::Int(analysis.scott.0 as i64),
            Json::Int(analysis.scott.1 as i64),
        ]),
    );
    o.push("kurosh_rank", Json::Int(analysis.kurosh_rank as i64));
    o.push(
        "entries",
        Json::Arr(
            analysis
                .structure
                .entries
                .iter()
                .map(|e| entry_json(config, e))
                .collect(),
        ),
    );
    o.push(
        "malnormal",
        Json::Bool(analysis.structure.malnormality.malnormal),
    );
    o.push("verification", verification_json(config, verification));
    if let Some(ctx) = &analysis.hnn {
        o.push("hnn", hnn_json(config, ctx));
    }
    o.push("notes", Json::from_strings(analysis.notes.iter().cloned()));
    o.push("bounds", bounds_json(&config.bounds));
    o
}

fn suspend_json(config: &JobConfig, relhyp: &RelHypStructure) -> Json {
    let b = &config.basis;
    let mut o = Json::obj();
    let peripherals = relhyp
        .suspensions
        .iter()
        .map(|s| {
            let mut p = Json::obj();
            p.push(
                "subgroup",
                Json::from_strings(s.generators.iter().map(|w| b.render(w))),
            );
            p.push("exponent", Json::Int(s.exponent as i64));
            p.push("stable_tail", Json::Str(b.render(&s.stable_tail)));
            p.push("verified", Json::Bool(s.verified));
            p.push("conjugator", Json::Str(b.render(&s.conjugator)));
            let candidates = s
                .candidates
                .iter()
                .map(|c| {
                    let mut cj = Json::obj();
                    cj.push("tail", Json::Str(b.render(&c.tail)));
                    cj.push("origin", Json::Str(c.origin.to_string()));
                    cj.push("verified", Json::Bool(c.verified));
                    cj
                })
                .collect();
            p.push("candidates", Json::Arr(candidates));
            p
        })
        .collect();
    o.push("peripherals", Json::Arr(peripherals));
    o.push("case", Json::Str(relhyp.case_label.clone()));
    o.push("bounds", bounds_json(&relhyp.bounds));
    o.push(
        "decomposition",
        Json::from_strings(relhyp.decomposition.iter().cloned()),
    );
    if let Some(note) = &relhyp.degenerate {
        o.push("degenerate", Json::Str(note.clone()));
    }
    o
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn write_atomic(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let tmp = dir.join(format!("{name}.tmp"));
    fs::write(&tmp, content).map_err(|e| Error::Io(format!("write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, &path).map_err(|e| Error::Io(format!("rename {}: {e}", path.display())))?;
    Ok(path)
}

struct Emitter<'a> {
    opts: &'a RunOptions,
    files: Vec<PathBuf>,
    json: Vec<(String, String)>,
}

impl<'a> Emitter<'a> {
    fn new(opts: &'a RunOptions) -> Self {
        Emitter {
            opts,
            files: Vec::new(),
            json: Vec::new(),
        }
    }

    fn emit(&mut self, name: &str, content: String) -> Result<()> {
        if let Some(dir) = &self.opts.out_dir {
            self.files.push(write_atomic(dir, name, &content)?);
        }
        self.json.push((name.to_string(), content));
        Ok(())
    }
}

pub fn run(command: CliCommand, config: &JobConfig, opts: &RunOptions) -> Result<RunOutcome> {
    match command {
        CliCommand::Growth => run_growth(config, opts),
        CliCommand::Peripheral => run_peripheral(config, opts),
        CliCommand::Suspend => run_suspend(config, opts),
        CliCommand::Verify => run_verify(config, opts),
    }
}

fn run_growth(config: &JobConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let mut emitter = Emitter::new(opts);
    let mut reports = Vec::new();
    let mut summary = Vec::new();
    for (name, word) in &config.elements {
        let report = classify_element(
            &config.alpha,
            word,
            config.bounds.horizon,
            Metric::Conjugacy,
        );
        summary.push(format!(
            "{name} = {}: {}",
            config.basis.render(word),
            report.class.label()
        ));
        reports.push(growth_report_json(config, &report));
    }
    emitter.emit("growth.json", Json::Arr(reports).render())?;
    Ok(RunOutcome {
        exit_code: 0,
        summary,
        files: emitter.files,
        json: emitter.json,
    })
}

fn top_letters(config: &JobConfig) -> Vec<usize> {
    (0..config.basis.len()).collect()
}

fn analyzed_and_verified(config: &JobConfig) -> Result<(NodeAnalysis, VerificationReport)> {
    let letters = top_letters(config);
    let analysis = analyze(config, &letters)?;
    let verification = verify_peripheral_structure(
        &config.alpha,
        &analysis.structure.entries,
        &letters,
        &config.bounds,
    );
    Ok((analysis, verification))
}

fn run_peripheral(config: &JobConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let mut emitter = Emitter::new(opts);
    let (analysis, verification) = analyzed_and_verified(config)?;
    emitter.emit(
        "peripheral.json",
        peripheral_json(config, &analysis, &verification).render(),
    )?;
    if opts.write_dot {
        for (i, entry) in analysis.structure.entries.iter().enumerate() {
            let name = match &entry.name {
                Some(n) => format!("entry_{n}.dot"),
                None => format!("entry_{i}.dot"),
            };
            emitter.emit(&name, entry.graph.to_dot_named(&config.basis))?;
        }
    }
    let mut summary = vec![format!(
        "peripheral structure: {} entries, case {}",
        analysis.structure.entries.len(),
        analysis.node_case.label()
    )];
    for e in &analysis.structure.entries {
        summary.push(format!(
            "  entry [{}]: <{}>",
            e.provenance,
            e.graph.generator_words(&config.basis).join(", ")
        ));
    }
    summary.push(format!(
        "verification: {}",
        if verification.passed { "pass" } else { "FAIL" }
    ));
    let exit_code = if verification.passed { 0 } else { 1 };
    Ok(RunOutcome {
        exit_code,
        summary,
        files: emitter.files,
        json: emitter.json,
    })
}

fn run_suspend(config: &JobConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let mut emitter = Emitter::new(opts);
    let (analysis, verification) = analyzed_and_verified(config)?;
    if !verification.passed {
        return Err(Error::Verification(
            "peripheral structure failed verification; not suspending".into(),
        ));
    }
    let pres = torus_presentation(&config.alpha)?;
    let relhyp = relhyp_structure(
        &pres,
        &analysis.structure,
        &analysis.node_case,
        &config.bounds,
    )?;
    emitter.emit("suspend.json", suspend_json(config, &relhyp).render())?;
    emitter.emit("decomposition.txt", relhyp.decomposition.join("\n") + "\n")?;
    let mut summary = vec![format!(
        "{} suspensions, case {}",
        relhyp.suspensions.len(),
        relhyp.case_label
    )];
    for s in &relhyp.suspensions {
        summary.push(format!(
            "  <{}> suspended with exponent {} and stable letter t^{} {}",
            s.generators
                .iter()
                .map(|w| config.basis.render(w))
                .collect::<Vec<_>>()
                .join(", "),
            s.exponent,
            s.exponent,
            if s.stable_tail.is_empty() {
                "(empty tail)".to_string()
            } else {
                config.basis.render(&s.stable_tail)
            }
        ));
    }
    let all_verified = relhyp.suspensions.iter().all(|s| s.verified);
    let exit_code = if all_verified { 0 } else { 1 };
    Ok(RunOutcome {
        exit_code,
        summary,
        files: emitter.files,
        json: emitter.json,
    })
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn run_verify(config: &JobConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let mut emitter = Emitter::new(opts);
    let mut checks: Vec<Check> = Vec::new();

    // configuration round trip
    let emitted = emit_config(config);
    let roundtrip = crate::config::parse_config(&emitted)
        .map(|c| emit_config(&c) == emitted)
        .unwrap_or(false);
    checks.push(Check {
        name: "config-roundtrip",
        passed: roundtrip,
        detail: "emit, parse, emit is byte-identical".into(),
    });

    // inverse automorphism composes to the identity
    let inv = config.alpha.invert();
    let inverse_ok = (0..config.basis.len()).all(|g| {
        let x = Word::generator(g);
        config.alpha.apply(&inv.apply(&x)) == x && inv.apply(&config.alpha.apply(&x)) == x
    });
    checks.push(Check {
        name: "automorphism-inverse",
        passed: inverse_ok,
        detail: "inverse verified on every generator".into(),
    });

    // mapping torus relators and normal form soundness
    match torus_presentation(&config.alpha) {
        Ok(pres) => {
            let relators_ok = pres
                .relators()
                .iter()
                .all(|r| pres.normal_form(r) == (0, Word::empty()));
            checks.push(Check {
                name: "torus-relators",
                passed: relators_ok,
                detail: "defining relators reduce to the identity".into(),
            });
            let mut rng = SplitMix64::new(config.bounds.seed);
            let gens: Vec<usize> = (0..pres.extended.len()).collect();
            let mut sound = true;
            for _ in 0..1000 {
                let len = rng.below(21);
                let w = random_reduced_word(&mut rng, &gens, len);
                let (m, tail) = pres.normal_form(&w);
                let diff = w.concat(&pres.t_power_times(m, &tail).inverse());
                if pres.normal_form(&diff) != (0, Word::empty()) {
                    sound = false;
                    break;
                }
            }
            checks.push(Check {
                name: "normal-form-soundness",
                passed: sound,
                detail: "1000 seeded torus words round-trip through t^m w".into(),
            });
        }
        Err(e) => checks.push(Check {
            name: "torus-relators",
            passed: false,
            detail: e.to_string(),
        }),
    }

    // bounded growth certificates re-verify
    let mut cert_ok = true;
    let mut cert_count = 0usize;
    for (_, word) in &config.elements {
        let report = classify_element(
            &config.alpha,
            word,
            config.bounds.horizon,
            Metric::Conjugacy,
        );
        if let Some(cert) = &report.certificate {
            cert_count += 1;
            if !cert.verify(&config.alpha, word) {
                cert_ok = false;
            }
        }
    }
    checks.push(Check {
        name: "bounded-certificates",
        passed: cert_ok,
        detail: format!("{cert_count} orbit certificates re-verified"),
    });

    // structure pipeline
    if !config.splits.is_empty() || !config.candidates().is_empty() {
        match analyzed_and_verified(config) {
            Ok((analysis, verification)) => {
                checks.push(Check {
                    name: "structure-verification",
                    passed: verification.passed,
                    detail: format!(
                        "malnormal {}, growth {}, twinning {}, completeness {} ({} classes, failures: {})",
                        verification.malnormal_ok,
                        verification.growth_ok,
                        verification.twinning_ok,
                        verification.completeness_ok,
                        verification.completeness.checked,
                        verification.completeness.failures.len()
                    ),
                });
                if let Some(ctx) = &analysis.hnn {
                    let coset = verify_k_coset(ctx, config.bounds.radius);
                    checks.push(Check {
                        name: "k-coset",
                        passed: coset.is_ok(),
                        detail: match &coset {
                            Ok(count) => {
                                format!(
                                    "{count} solutions within the radius, all in one coset of A0"
                                )
                            }
                            Err(e) => e.to_string(),
                        },
                    });
                    let image = config.alpha.image_subgroup(&ctx.b0);
                    let twisted = ctx.b0.conjugated(&ctx.h.inverse());
                    checks.push(Check {
                        name: "b0-orientation",
                        passed: image == twisted,
                        detail: "alpha(B0) equals h B0 h^-1 as folded graphs".into(),
                    });
                }
            }
            Err(e) => checks.push(Check {
                name: "structure-verification",
                passed: false,
                detail: e.to_string(),
            }),
        }
    }

    let passed = checks.iter().all(|c| c.passed);
    let mut o = Json::obj();
    o.push(
        "checks",
        Json::Arr(
            checks
                .iter()
                .map(|c| {
                    let mut cj = Json::obj();
                    cj.push("name", Json::Str(c.name.to_string()));
                    cj.push("passed", Json::Bool(c.passed));
                    cj.push("detail", Json::Str(c.detail.clone()));
                    cj
                })
                .collect(),
        ),
    );
    o.push("passed", Json::Bool(passed));
    emitter.emit("verify.json", o.render())?;
    let summary = checks
        .iter()
        .map(|c| {
            format!(
                "{} {}: {}",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.detail
            )
        })
        .collect();
    Ok(RunOutcome {
        exit_code: if passed { 0 } else { 1 },
        summary,
        files: emitter.files,
        json: emitter.json,
    })
}
