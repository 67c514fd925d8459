//! Subcommand implementations.

use std::io::Write as _;
use std::path::Path;

use hhoi::dataio::{
    extract_hhi, extract_hoi, gen_toy_dataset, gen_toy_poses, load_hhoi_jsonl, save_hhoi_jsonl,
    toy_object_mesh, toy_prompt_table, validate_record, PromptTable, ToyScenario,
};
use hhoi::diffusion::{Mode, ScoreExample, ScoreNet, ScoreNetConfig, ScoreTrainConfig};
use hhoi::geometry::{Capsule, Segment, TriangleMesh, Vec3};
use hhoi::metrics::{
    body_pose_fd, contact_distance, distance_fd, penetration_ratio, success_rate, ContactKind,
    DistanceFdVariant, MetricReport,
};
use hhoi::pose_codec::{train_codec as train_codec_impl, CodecParams, CodecTrainConfig};
use hhoi::sampler::{guided_sample, reconstruct_scene, GuidedModels, Scene, SceneRequest};
use hhoi::skeleton::{BodyPose, CapsuleRadii, SkeletonTemplate};

use crate::config::{resolve_config, RunConfig};
use crate::{CliError, CliResult, CommonArgs};

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn load_run_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    resolve_config(common.config.as_deref(), common.preset.as_deref(), common.seed)
        .map_err(CliError::input)
}

fn config_echo(config: &RunConfig) -> serde_json::Value {
    serde_json::json!({
        "artifact_version": VERSION,
        "run": config.echo(),
    })
}

fn meta_entries(config: &RunConfig) -> Vec<(&'static str, serde_json::Value)> {
    vec![
        ("artifact_version", serde_json::json!(VERSION)),
        ("run_config", config.echo()),
    ]
}

fn dataset_poses(path: &Path) -> Result<Vec<BodyPose>, CliError> {
    let records = load_hhoi_jsonl(path)?;
    let mut poses = Vec::new();
    for r in &records {
        for h in &r.humans {
            poses.push(BodyPose::from_flat(&h.pose126)?);
        }
    }
    Ok(poses)
}

fn write_loss_csv(
    path: &Path,
    header: &str,
    rows: impl Iterator<Item = String>,
) -> Result<(), CliError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    Ok(())
}

pub fn train_codec(
    common: &CommonArgs,
    dataset: Option<&Path>,
    synthetic_poses: Option<usize>,
    out: &Path,
) -> CliResult {
    let config = load_run_config(common)?;
    let poses = match (dataset, synthetic_poses) {
        (Some(path), None) => dataset_poses(path)?,
        (None, Some(n)) => gen_toy_poses(n, config.seed),
        (Some(path), Some(n)) => {
            let mut poses = dataset_poses(path)?;
            poses.extend(gen_toy_poses(n, config.seed));
            poses
        }
        (None, None) => {
            return Err(CliError::input(
                "train-codec needs --dataset and/or --synthetic-poses",
            ))
        }
    };
    let train_config = CodecTrainConfig {
        epochs: config.training.codec_epochs,
        batch_size: config.training.batch_size,
        holdout_fraction: config.training.holdout_fraction,
        seed: config.seed,
        threads: config.threads,
    };
    println!(
        "training codec on {} poses ({} epochs, batch {})",
        poses.len(),
        train_config.epochs,
        train_config.batch_size
    );
    let (codec, reports) = train_codec_impl(&poses, &train_config)?;
    codec.save_with_meta(out, &meta_entries(&config))?;
    let csv = out.with_extension("loss.csv");
    write_loss_csv(
        &csv,
        "epoch,train_loss,holdout_loss,learning_rate",
        reports.iter().map(|r| {
            format!(
                "{},{},{},{}",
                r.epoch, r.train_loss, r.holdout_loss, r.learning_rate
            )
        }),
    )?;
    let last = reports.last().expect("at least one epoch");
    println!(
        "wrote {} (final train loss {:.6}, holdout {:.6})",
        out.display(),
        last.train_loss,
        last.holdout_loss
    );
    Ok(())
}

pub fn train_score(
    common: &CommonArgs,
    mode_name: &str,
    dataset: &Path,
    codec_path: &Path,
    prompts: Option<&Path>,
    out: &Path,
) -> CliResult {
    let config = load_run_config(common)?;
    let mode = match mode_name {
        "hoi" => Mode::Hoi,
        "hhi" => Mode::Hhi,
        other => return Err(CliError::input(format!("unknown mode {other:?}"))),
    };
    let codec = CodecParams::load(codec_path)?;
    let table = match prompts {
        Some(path) => PromptTable::load(path)?,
        None => PromptTable::default(),
    };
    let records = load_hhoi_jsonl(dataset)?;
    let mut examples = Vec::new();
    for record in &records {
        match mode {
            Mode::Hoi => {
                for (sample, prompt) in extract_hoi(record, &codec)? {
                    let key = prompt.unwrap_or_default();
                    examples.push(ScoreExample {
                        sample: sample.to_flat(),
                        conds: table.embed_all(&key),
                    });
                }
            }
            Mode::Hhi => {
                for (sample, prompt) in extract_hhi(record, &codec)? {
                    let key = prompt.unwrap_or_default();
                    examples.push(ScoreExample {
                        sample: sample.to_flat(),
                        conds: table.embed_all(&key),
                    });
                }
            }
        }
    }
    if examples.is_empty() {
        return Err(CliError::input(format!(
            "dataset {} produced no {mode_name} samples",
            dataset.display()
        )));
    }
    let net_config = match config.network.score_width.as_str() {
        "toy" => ScoreNetConfig::toy(mode),
        "full" => ScoreNetConfig::new(mode),
        other => return Err(CliError::input(format!("unknown score width {other:?}"))),
    }
    .with_schedule(config.schedule()?);
    let train_config = ScoreTrainConfig {
        epochs: config.training.epochs,
        batch_size: config.training.batch_size,
        seed: config.seed,
        threads: config.threads,
    };
    println!(
        "training {mode_name} score network on {} samples ({} epochs, batch {})",
        examples.len(),
        train_config.epochs,
        train_config.batch_size
    );
    let (net, reports) = hhoi::diffusion::train_score(&examples, net_config, &train_config)?;
    net.save_with_meta(out, &meta_entries(&config))?;
    let csv = out.with_extension("loss.csv");
    write_loss_csv(
        &csv,
        "epoch,loss,learning_rate",
        reports
            .iter()
            .map(|r| format!("{},{},{}", r.epoch, r.loss, r.learning_rate)),
    )?;
    let last = reports.last().expect("at least one epoch");
    println!("wrote {} (final loss {:.6})", out.display(), last.loss);
    Ok(())
}

fn load_radii(path: Option<&Path>) -> Result<CapsuleRadii, CliError> {
    match path {
        None => Ok(CapsuleRadii::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let values: Vec<f64> =
                serde_json::from_str(&text).map_err(|e| CliError::input(e.to_string()))?;
            let arr: [f64; 24] = values
                .try_into()
                .map_err(|_| CliError::input("radii file must hold exactly 24 numbers"))?;
            Ok(CapsuleRadii::new(arr)?)
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn sample(
    common: &CommonArgs,
    request_path: &Path,
    hoi_path: &Path,
    hhi_path: Option<&Path>,
    codec_path: &Path,
    radii_path: Option<&Path>,
    prompts: Option<&Path>,
    out: &Path,
    batch: usize,
) -> CliResult {
    let mut config = load_run_config(common)?;
    let request = SceneRequest::load(request_path)?;
    let graph = request.to_graph();
    graph.validate()?;

    let hoi = ScoreNet::load(hoi_path)?;
    // a single-human request never consults the relation network; permit
    // omitting it in that case
    let hhi = match hhi_path {
        Some(path) => ScoreNet::load(path)?,
        None if request.edges.is_empty() => {
            let mut rng = hhoi::rng::Rng::seed_from(0);
            let mut net = ScoreNet::init(
                ScoreNetConfig::toy(Mode::Hhi).with_schedule(*hoi.schedule()),
                &mut rng,
            );
            let zeros = vec![0.0; net.params_flat().len()];
            net.set_params_flat(&zeros);
            net
        }
        None => {
            return Err(CliError::input(
                "--hhi is required when the request has relation edges",
            ))
        }
    };
    let codec = CodecParams::load(codec_path)?;
    let radii = load_radii(radii_path)?;
    let table = match prompts {
        Some(path) => PromptTable::load(path)?,
        None => PromptTable::default(),
    };
    let models = GuidedModels::new(&hoi, &hhi, &codec, SkeletonTemplate::canonical(), radii)?;

    if let Some(seed) = request.seed {
        if common.seed.is_none() {
            config.seed = seed;
        }
    }
    let guidance = request.config.unwrap_or_else(|| {
        let mut g = config.guidance();
        g.steps = config.guidance.steps;
        g
    });
    let echo = serde_json::json!({
        "artifact_version": VERSION,
        "run": config.echo(),
        "guidance": serde_json::to_value(guidance).expect("serializable"),
        "request": serde_json::to_value(&request).expect("serializable"),
    });

    let run_one = |seed: u64| -> Result<Scene, hhoi::Error> {
        let draft = guided_sample(&graph, &models, &table, &guidance, seed)?;
        reconstruct_scene(
            &draft,
            &graph,
            &models.context,
            &request.object,
            seed,
            echo.clone(),
        )
    };

    let seeds: Vec<u64> = (0..batch as u64).map(|i| config.seed + i).collect();
    let mut results: Vec<(u64, Result<Scene, hhoi::Error>)> = Vec::with_capacity(seeds.len());
    if batch <= 1 || config.threads <= 1 {
        for &seed in &seeds {
            results.push((seed, run_one(seed)));
        }
    } else {
        // independent seeded scenes in parallel, reassembled in seed order
        let chunk = seeds.len().div_ceil(config.threads);
        let mut partials: Vec<Vec<(u64, Result<Scene, hhoi::Error>)>> = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .chunks(chunk)
                .map(|chunk_seeds| {
                    scope.spawn(move || {
                        chunk_seeds
                            .iter()
                            .map(|&s| (s, run_one(s)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                partials.push(h.join().expect("sampler thread panicked"));
            }
        });
        for p in partials {
            results.extend(p);
        }
        results.sort_by_key(|(s, _)| *s);
    }

    let mut failures = Vec::new();
    for (seed, result) in results {
        match result {
            Ok(scene) => {
                let path = if batch <= 1 {
                    out.to_path_buf()
                } else {
                    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("scene");
                    out.with_file_name(format!("{stem}_{seed}.json"))
                };
                scene.save(&path)?;
                let clamped = scene.humans.iter().filter(|h| h.scale_clamped).count();
                if clamped > 0 {
                    eprintln!("warning: seed {seed}: scale clamp applied to {clamped} human(s)");
                }
                println!(
                    "seed {seed}: wrote {} (L_inc {:.3e}, L_col {:.3e})",
                    path.display(),
                    scene.inconsistency_loss,
                    scene.collision_loss
                );
            }
            Err(e) => failures.push((seed, e)),
        }
    }
    if let Some((seed, e)) = failures.into_iter().next() {
        return Err(CliError {
            code: CliError::from(e).code,
            message: format!("seed {seed}: sampling failed"),
        });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    common: &CommonArgs,
    scenes_dir: &Path,
    reference: &Path,
    codec_path: &Path,
    object: Option<&Path>,
    contact: &str,
    variant: &str,
    humans_flag: Option<usize>,
    out: Option<&Path>,
) -> CliResult {
    let config = load_run_config(common)?;
    let codec = CodecParams::load(codec_path)?;

    let mut scene_files: Vec<_> = std::fs::read_dir(scenes_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    scene_files.sort();
    if scene_files.is_empty() {
        return Err(CliError::input(format!(
            "no scene JSON files in {}",
            scenes_dir.display()
        )));
    }
    let scenes: Vec<Scene> = scene_files
        .iter()
        .map(Scene::load)
        .collect::<hhoi::Result<_>>()?;
    let records = load_hhoi_jsonl(reference)?;
    if records.is_empty() {
        return Err(CliError::input("reference dataset is empty"));
    }

    // generated and reference pose sets
    let generated_poses: Vec<BodyPose> = scenes
        .iter()
        .flat_map(|s| s.humans.iter())
        .map(|h| BodyPose::from_flat(&h.pose126))
        .collect::<hhoi::Result<_>>()?;
    let reference_poses: Vec<BodyPose> = records
        .iter()
        .flat_map(|r| r.humans.iter())
        .map(|h| BodyPose::from_flat(&h.pose126))
        .collect::<hhoi::Result<_>>()?;
    let pose_fd = body_pose_fd(&generated_poses, &reference_poses, &codec)?;

    // interpersonal distances, in the object frame on both sides
    let generated_translations: Vec<Vec<Vec3>> = scenes
        .iter()
        .map(|s| {
            s.humans
                .iter()
                .map(|h| Vec3::new(h.translation[0], h.translation[1], h.translation[2]))
                .collect()
        })
        .collect();
    let reference_translations: Vec<Vec<Vec3>> = records
        .iter()
        .map(|r| {
            let rot_inv = r.object.rotation_mat().transpose();
            let t_obj = r.object.translation_vec();
            r.humans
                .iter()
                .map(|h| rot_inv * (h.translation_vec() - t_obj))
                .collect()
        })
        .collect();
    let fd_variant = match variant {
        "vector" => DistanceFdVariant::Vector,
        "norm" => DistanceFdVariant::Norm,
        other => return Err(CliError::input(format!("unknown variant {other:?}"))),
    };
    let (dist_fd, skipped) = distance_fd(&generated_translations, &reference_translations, fd_variant)?;
    if skipped.0 + skipped.1 > 0 {
        eprintln!(
            "notice: skipped single-human scenes: {} generated, {} reference",
            skipped.0, skipped.1
        );
    }

    // physical plausibility over capsule proxies
    let mesh: Option<TriangleMesh> = match object {
        Some(path) => Some(TriangleMesh::load_obj(path)?),
        None => {
            let mesh_rel = &records[0].object.mesh;
            let candidate = reference.parent().unwrap_or(Path::new(".")).join(mesh_rel);
            if candidate.exists() {
                Some(TriangleMesh::load_obj(&candidate)?)
            } else {
                eprintln!(
                    "notice: object mesh {} not found; object metrics skipped",
                    candidate.display()
                );
                None
            }
        }
    };
    let capsule_sets: Vec<Vec<Vec<Capsule>>> = scenes
        .iter()
        .map(|s| {
            s.humans
                .iter()
                .map(|h| {
                    h.capsules24
                        .iter()
                        .map(|c| {
                            Capsule::new(
                                Segment::new(Vec3::from_slice(&c.a), Vec3::from_slice(&c.b)),
                                c.radius,
                            )
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut pen_hh = 0.0;
    let mut pen_ho = Some(0.0);
    for humans in &capsule_sets {
        let report = penetration_ratio(humans, mesh.as_ref());
        pen_hh += report.human_human / capsule_sets.len() as f64;
        pen_ho = match (pen_ho, report.human_object) {
            (Some(acc), Some(v)) => Some(acc + v / capsule_sets.len() as f64),
            _ => None,
        };
    }

    let contact_kind = match contact {
        "none" => None,
        "auto" => {
            if records[0].object.category == "bench" {
                Some(ContactKind::Hip)
            } else {
                Some(ContactKind::Hand)
            }
        }
        other => Some(
            ContactKind::parse(other)
                .ok_or_else(|| CliError::input(format!("unknown contact kind {other:?}")))?,
        ),
    };
    let contact_value = match (&mesh, contact_kind) {
        (Some(m), Some(kind)) => {
            let mut acc = 0.0;
            for humans in &capsule_sets {
                acc += contact_distance(humans, m, kind)? / capsule_sets.len() as f64;
            }
            Some(acc)
        }
        _ => None,
    };

    let n_target = humans_flag.unwrap_or_else(|| scenes[0].humans.len());
    let runs: Vec<Option<Scene>> = scenes.iter().cloned().map(Some).collect();
    let success = success_rate(&runs, n_target);

    let report = MetricReport {
        body_pose_fd: pose_fd,
        distance_fd: dist_fd,
        distance_fd_variant: fd_variant,
        distance_fd_skipped_scenes: skipped,
        penetration: hhoi::metrics::PenetrationReport {
            human_human: pen_hh,
            human_object: pen_ho,
        },
        contact_distance_m: contact_value,
        contact_kind,
        success_rate: success,
        scenes_evaluated: scenes.len(),
        reference_frames: records.len(),
        config: config_echo(&config),
    };
    print!("{}", report.to_text_table());
    if let Some(path) = out {
        std::fs::write(path, serde_json::to_string_pretty(&report).map_err(hhoi::Error::from)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn gen_toy(
    common: &CommonArgs,
    scenario_name: &str,
    frames: usize,
    noise: f64,
    out_dir: &Path,
) -> CliResult {
    let config = load_run_config(common)?;
    let scenario = ToyScenario::parse(scenario_name)
        .ok_or_else(|| CliError::input(format!("unknown scenario {scenario_name:?}")))?;
    if frames == 0 {
        return Err(CliError::input("need at least one frame"));
    }
    std::fs::create_dir_all(out_dir)?;
    let records = gen_toy_dataset(scenario, frames, noise, config.seed)?;
    let jsonl = out_dir.join(format!("{}.jsonl", scenario.name()));
    save_hhoi_jsonl(&jsonl, &records)?;
    let mesh_path = out_dir.join(scenario.mesh_file());
    std::fs::write(&mesh_path, toy_object_mesh(scenario).to_obj_string())?;
    let prompts_path = out_dir.join("prompts.json");
    toy_prompt_table().save(&prompts_path)?;
    println!(
        "wrote {} frames to {} (+ {} and {})",
        frames,
        jsonl.display(),
        mesh_path.display(),
        prompts_path.display()
    );
    Ok(())
}

pub fn validate(_common: &CommonArgs, dataset: &Path) -> CliResult {
    let text = std::fs::read_to_string(dataset)?;
    let mut checked = 0usize;
    let mut failures = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        checked += 1;
        let verdict = serde_json::from_str::<hhoi::dataio::HhoiRecord>(line)
            .map_err(hhoi::Error::from)
            .and_then(|r| validate_record(&r).map(|()| r));
        match verdict {
            Ok(record) => println!(
                "line {}: ok (frame {}, {} humans)",
                lineno + 1,
                record.frame_id,
                record.humans.len()
            ),
            Err(e) => {
                println!("line {}: INVALID: {e}", lineno + 1);
                failures += 1;
            }
        }
    }
    println!("{checked} records checked, {failures} invalid");
    if failures > 0 {
        return Err(CliError::input(format!("{failures} invalid records")));
    }
    Ok(())
}

pub fn fit_radii(
    common: &CommonArgs,
    clouds: &[std::path::PathBuf],
    dataset: Option<&Path>,
    steps: usize,
    samples: usize,
    out: &Path,
) -> CliResult {
    let config = load_run_config(common)?;
    let cloud_points: Vec<Vec<Vec3>> = clouds
        .iter()
        .map(hhoi::skeleton::load_xyz)
        .collect::<hhoi::Result<_>>()?;
    let poses: Vec<BodyPose> = match dataset {
        Some(path) => {
            let records = load_hhoi_jsonl(path)?;
            if records.len() < clouds.len() {
                return Err(CliError::input(format!(
                    "{} clouds but only {} dataset records",
                    clouds.len(),
                    records.len()
                )));
            }
            records
                .iter()
                .take(clouds.len())
                .map(|r| BodyPose::from_flat(&r.humans[0].pose126))
                .collect::<hhoi::Result<_>>()?
        }
        None => vec![BodyPose::identity(); clouds.len()],
    };
    let fit_config = hhoi::skeleton::FitConfig {
        steps,
        surface_samples: samples,
        seed: config.seed,
    };
    let template = SkeletonTemplate::canonical();
    println!(
        "fitting 24 radii against {} cloud(s), {} steps",
        clouds.len(),
        steps
    );
    let radii = hhoi::skeleton::fit_radii(&poses, &cloud_points, &template, &fit_config)?;
    std::fs::write(
        out,
        serde_json::to_string_pretty(&radii.0.to_vec()).map_err(hhoi::Error::from)?,
    )?;
    for (i, r) in radii.0.iter().enumerate() {
        println!("capsule {i:2}: {r:.4} m");
    }
    println!("wrote {}", out.display());
    Ok(())
}
