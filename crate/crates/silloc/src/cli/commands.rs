use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use silloc_core::evalkit::{basin_study, pose_error, recall_report, BasinRow, EvalQuery, PoseError, RecallReport};
use silloc_core::exec::Executor;
use silloc_core::pipeline::{coarse_stage, query_seed, refine_stage, Mode, QueryMasks};
use silloc_core::rasterizer::render_silhouette_with_near;
use silloc_core::rng::derive_key;
use silloc_core::synth::{corrupt_mask, generate_city, generate_queries, make_priors, CorruptionSpec};
use silloc_core::{iou, BinaryMask, CameraIntrinsics, CityModel, Pose};

use super::{Cli, Command};
use crate::dataio::{
    read_city_model, read_mask_file, read_poses, read_records, write_city_model, write_mask_file,
    write_file, write_poses, write_records, write_trace, Outcome, PoseRow, Record, RunConfig, Seeds,
};
use crate::parallel::Pool;

/// Outcome of a command that did not hit a contract or I/O error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Some queries failed; details are in the written records.
    Partial,
}

struct Ctx {
    cfg: RunConfig,
    pool: Pool,
}

impl Ctx {
    fn new(cli: &Cli) -> anyhow::Result<Self> {
        let mut cfg = match &cli.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = cli.seed {
            cfg.seeds = Seeds::all(s);
        }
        let pool = Pool::new(cli.threads).context("building thread pool")?;
        Ok(Ctx { cfg, pool })
    }

    fn path(&self, p: &Path) -> PathBuf {
        self.cfg.resolve(p)
    }

    fn output(&self, name: &str) -> PathBuf {
        self.path(&self.cfg.output).join(name)
    }

    fn fine(&self) -> (u32, u32) {
        (self.cfg.fine_resolution[0], self.cfg.fine_resolution[1])
    }

    fn model(&self) -> anyhow::Result<CityModel> {
        self.cfg.require(&[("model", &self.cfg.model)])?;
        Ok(read_city_model(&self.path(&self.cfg.model))?)
    }

    fn query_masks(&self, id: &str) -> anyhow::Result<QueryMasks> {
        let mask = read_mask_file(&self.cfg.mask_path(id), self.cfg.mask_threshold)?;
        let cfg = self.cfg.pipeline_config(Mode::Full);
        QueryMasks::from_fine(mask, &cfg).with_context(|| format!("mask of query {id}"))
    }
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<Status> {
    let ctx = Ctx::new(cli)?;
    match &cli.command {
        Command::GenScene => gen_scene(&ctx, out),
        Command::Localize {
            no_refine,
            no_select,
            timings,
            traces,
            dump_volumes,
            records,
        } => {
            let mode = match (no_refine, no_select) {
                (true, _) => Mode::NoRefine,
                (_, true) => Mode::NoSelect,
                _ => Mode::Full,
            };
            let opts = LocalizeOptions {
                mode,
                timings: *timings,
                traces: *traces,
                dump_volumes: *dump_volumes,
            };
            let path = records.clone().unwrap_or_else(|| ctx.output("records.csv"));
            localize(&ctx, &opts, &path, out)
        }
        Command::Evaluate { records, truth } => {
            let records = records.clone().unwrap_or_else(|| ctx.output("records.csv"));
            let truth = truth.clone().unwrap_or_else(|| ctx.path(&ctx.cfg.queries));
            evaluate(&ctx, &records, &truth, out)
        }
        Command::Basin { deltas, queries } => basin(&ctx, deltas.as_deref(), *queries, out),
        Command::Overlay { id, pose, records } => {
            let records = records.clone().unwrap_or_else(|| ctx.output("records.csv"));
            overlay(&ctx, id, pose.as_ref(), &records, out)
        }
        Command::Render {
            pose,
            out: target,
            width,
            height,
        } => {
            let (fw, fh) = ctx.fine();
            let (w, h) = (width.unwrap_or(fw), height.unwrap_or(fh));
            if w == 0 || h == 0 {
                bail!("render size must be positive");
            }
            let model = ctx.model()?;
            let k = ctx.cfg.intrinsics()?;
            let mask = render_silhouette_with_near(&model, &k, pose, w, h, ctx.cfg.near);
            write_mask_file(target, &mask)?;
            writeln!(out, "wrote {} ({w}x{h}, {} building pixels)", target.display(), mask.count_ones())?;
            Ok(Status::Ok)
        }
    }
}

fn gen_scene(ctx: &Ctx, out: &mut dyn Write) -> anyhow::Result<Status> {
    let cfg = &ctx.cfg;
    let k = cfg.intrinsics()?;
    let city = generate_city(&cfg.city_spec())?;
    if !city.complete {
        log::warn!("placed {} of {} buildings", city.model.len(), city.requested);
    }
    let model_path = ctx.path(&cfg.model);
    let queries = generate_queries(&city.model, &cfg.query_spec(), &k)?;
    write_city_model(&model_path, &city.model)?;
    writeln!(out, "wrote {} ({} buildings)", model_path.display(), city.model.len())?;

    let gts: Vec<Pose> = queries.iter().map(|q| q.pose).collect();
    let priors = make_priors(&gts, &cfg.prior_spec())?;
    let rows = |poses: &[Pose]| -> Vec<PoseRow> {
        queries
            .iter()
            .zip(poses)
            .map(|(q, p)| PoseRow { id: q.id.clone(), pose: *p })
            .collect()
    };
    let qpath = ctx.path(&cfg.queries);
    write_poses(&qpath, &rows(&gts))?;
    writeln!(out, "wrote {} ({} poses)", qpath.display(), gts.len())?;
    let ppath = ctx.path(&cfg.priors);
    write_poses(&ppath, &rows(&priors))?;
    writeln!(out, "wrote {} ({} poses)", ppath.display(), priors.len())?;

    let (w, h) = ctx.fine();
    let corruption = cfg.corruption_spec();
    let masks: Vec<anyhow::Result<(BinaryMask, f64)>> = ctx.pool.map_indexed(queries.len(), |i| {
        let oracle = render_silhouette_with_near(&city.model, &k, &gts[i], w, h, cfg.near);
        match &corruption {
            None => Ok((oracle, 1.0)),
            Some(spec) => {
                let spec = CorruptionSpec {
                    seed: derive_key(spec.seed, &[i as u64]),
                    ..*spec
                };
                let c = corrupt_mask(&oracle, &spec).with_context(|| format!("corrupting {}", queries[i].id))?;
                Ok((c.mask, c.achieved_iou))
            }
        }
    });
    let mut ious = Vec::with_capacity(masks.len());
    for (q, m) in queries.iter().zip(masks) {
        let (mask, achieved) = m?;
        let path = cfg.mask_path(&q.id);
        write_mask_file(&path, &mask)?;
        log::info!("wrote {} (iou {achieved:.4})", path.display());
        ious.push(achieved);
    }
    let mean = ious.iter().sum::<f64>() / ious.len().max(1) as f64;
    let (lo, hi) = ious.iter().fold((1.0f64, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    writeln!(
        out,
        "wrote {} ({} masks {w}x{h}, iou vs oracle mean {mean:.4} min {lo:.4} max {hi:.4})",
        ctx.path(&cfg.masks).display(),
        ious.len()
    )?;
    Ok(Status::Ok)
}

pub(crate) struct LocalizeOptions {
    pub mode: Mode,
    pub timings: bool,
    pub traces: bool,
    pub dump_volumes: bool,
}

fn localize(ctx: &Ctx, opts: &LocalizeOptions, records_path: &Path, out: &mut dyn Write) -> anyhow::Result<Status> {
    let cfg = &ctx.cfg;
    cfg.require(&[("priors", &cfg.priors), ("masks", &cfg.masks)])?;
    let model = ctx.model()?;
    let k = cfg.intrinsics()?;
    let priors = read_poses(&ctx.path(&cfg.priors))?;
    let masks: Vec<QueryMasks> = priors
        .iter()
        .map(|p| ctx.query_masks(&p.id))
        .collect::<anyhow::Result<_>>()?;
    let pcfg = cfg.pipeline_config(opts.mode);
    pcfg.validate()?;

    let results = ctx.pool.map_indexed(priors.len(), |i| {
        let t0 = Instant::now();
        let coarse = coarse_stage(&masks[i], &priors[i].pose, &model, &k, &pcfg, &ctx.pool)?;
        let t1 = Instant::now();
        let fine = refine_stage(
            &masks[i],
            &coarse.selection.pose,
            &model,
            &k,
            &pcfg,
            query_seed(cfg.seeds.refine, i),
            &ctx.pool,
        )?;
        let t2 = Instant::now();
        let ms = |a: Instant, b: Instant| if opts.timings { (b - a).as_secs_f64() * 1e3 } else { 0.0 };
        let outcome = Outcome {
            coarse: coarse.selection.pose,
            coarse_iou: fine.coarse_fine_score.value,
            final_pose: fine.pose,
            final_iou: fine.score.value,
            ms_coarse: ms(t0, t1),
            ms_refine: ms(t1, t2),
        };
        Ok::<_, silloc_core::Error>((outcome, coarse.volume, fine.trace, coarse.selection.fallback))
    });

    let mut records = Vec::with_capacity(priors.len());
    let mut failed = Vec::new();
    for (p, r) in priors.iter().zip(results) {
        let result = match r {
            Ok((outcome, volume, trace, fallback)) => {
                if fallback {
                    log::warn!("{}: every hypothesis scored zero; kept the prior", p.id);
                }
                if opts.traces {
                    write_trace(&ctx.output(&format!("traces/{}.csv", p.id)), &trace)?;
                }
                if let (true, Some(v)) = (opts.dump_volumes, volume) {
                    write_file(&ctx.output(&format!("volumes/{}.bin", p.id)), &v.to_le_bytes())?;
                }
                Some(outcome)
            }
            Err(e) => {
                log::error!("{}: {e}", p.id);
                failed.push(format!("{},{e}", p.id));
                None
            }
        };
        records.push(Record {
            id: p.id.clone(),
            prior: p.pose,
            result,
        });
    }
    write_records(records_path, &records)?;
    writeln!(
        out,
        "wrote {} ({} queries, {} failed)",
        records_path.display(),
        records.len(),
        failed.len()
    )?;
    if failed.is_empty() {
        Ok(Status::Ok)
    } else {
        let err_path = records_path.with_extension("errors.csv");
        write_file(&err_path, format!("id,error\n{}\n", failed.join("\n")).as_bytes())?;
        writeln!(out, "wrote {}", err_path.display())?;
        Ok(Status::Partial)
    }
}

fn pct(v: f64) -> String {
    format!("{:.2}%", 100.0 * v)
}

/// Aligned text table of a recall report.
pub(crate) fn report_table(r: &RecallReport) -> String {
    let mut rows: Vec<(String, String)> = r
        .recalls
        .iter()
        .map(|&(t, d, v)| (format!("recall ({t}m, {d}°)"), pct(v)))
        .collect();
    rows.push(("median T.e.".into(), format!("{:.3} m", r.median_translation)));
    rows.push(("median R.e.".into(), format!("{:.3}°", r.median_rotation)));
    rows.push(("queries".into(), r.count.to_string()));
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<width$}  {v:>10}\n"))
        .collect()
}

const REPORT_COLUMNS: &str = "queries,recall_2m_2deg,recall_3m_3deg,recall_5m_5deg,median_te_m,median_re_deg";

fn report_csv_fields(r: &RecallReport) -> String {
    let recalls: Vec<String> = r.recalls.iter().map(|x| format!("{:.6}", x.2)).collect();
    format!(
        "{},{},{:.6},{:.6}",
        r.count,
        recalls.join(","),
        r.median_translation,
        r.median_rotation
    )
}

fn evaluate(ctx: &Ctx, records_path: &Path, truth_path: &Path, out: &mut dyn Write) -> anyhow::Result<Status> {
    let records = read_records(records_path)?;
    let truth: BTreeMap<String, Pose> = read_poses(truth_path)?.into_iter().map(|r| (r.id, r.pose)).collect();
    let ids: BTreeMap<&str, &Record> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    let missing_truth: Vec<&str> = ids.keys().filter(|id| !truth.contains_key(**id)).copied().collect();
    let missing_records: Vec<&str> = truth.keys().map(String::as_str).filter(|id| !ids.contains_key(id)).collect();
    if !missing_truth.is_empty() || !missing_records.is_empty() {
        bail!(
            "query ids do not match; without ground truth: [{}]; without records: [{}]",
            missing_truth.join(", "),
            missing_records.join(", ")
        );
    }
    let errors: Vec<PoseError> = records
        .iter()
        .map(|r| match &r.result {
            Some(o) => pose_error(&o.final_pose, &truth[&r.id]),
            None => PoseError::FAILED,
        })
        .collect();
    let report = recall_report(&errors)?;
    write!(out, "{}", report_table(&report))?;
    let path = ctx.output("report.csv");
    write_file(&path, format!("{REPORT_COLUMNS}\n{}\n", report_csv_fields(&report)).as_bytes())?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(Status::Ok)
}

pub(crate) fn basin_csv(rows: &[BasinRow]) -> String {
    let mut s = format!("delta_m,failures,{REPORT_COLUMNS}\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.delta, r.failures, report_csv_fields(&r.report)));
    }
    s
}

fn basin(ctx: &Ctx, deltas: Option<&[f64]>, limit: Option<usize>, out: &mut dyn Write) -> anyhow::Result<Status> {
    let cfg = &ctx.cfg;
    cfg.require(&[("queries", &cfg.queries), ("masks", &cfg.masks)])?;
    let model = ctx.model()?;
    let k = cfg.intrinsics()?;
    let mut gts = read_poses(&ctx.path(&cfg.queries))?;
    if let Some(n) = limit.or(cfg.basin.queries) {
        gts.truncate(n);
    }
    let queries: Vec<EvalQuery> = gts
        .iter()
        .map(|g| Ok(EvalQuery { gt: g.pose, masks: ctx.query_masks(&g.id)? }))
        .collect::<anyhow::Result<_>>()?;
    let deltas = deltas.unwrap_or(&cfg.basin.deltas);
    if deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        bail!("deltas must be finite and >= 0");
    }
    let rows = basin_study(
        &model,
        &k,
        &queries,
        deltas,
        &cfg.pipeline_config(Mode::Full),
        cfg.seeds.prior,
        cfg.seeds.refine,
        &ctx.pool,
    )?;
    for r in &rows {
        writeln!(
            out,
            "delta {:>6} m: {} / {} / {}",
            r.delta,
            pct(r.report.recall(0)),
            pct(r.report.recall(1)),
            pct(r.report.recall(2))
        )?;
    }
    let path = ctx.output("basin.csv");
    write_file(&path, basin_csv(&rows).as_bytes())?;
    writeln!(out, "wrote {}", path.display())?;
    let failed = rows.iter().any(|r| r.failures > 0);
    Ok(if failed { Status::Partial } else { Status::Ok })
}

fn overlay(ctx: &Ctx, id: &str, pose: Option<&Pose>, records_path: &Path, out: &mut dyn Write) -> anyhow::Result<Status> {
    let cfg = &ctx.cfg;
    let pose = match pose {
        Some(p) => *p,
        None => {
            let records = read_records(records_path)?;
            let r = records
                .iter()
                .find(|r| r.id == id)
                .with_context(|| format!("query {id} not in {}", records_path.display()))?;
            r.result
                .as_ref()
                .map(|o| o.final_pose)
                .with_context(|| format!("query {id} has no final pose"))?
        }
    };
    let model = ctx.model()?;
    let k: CameraIntrinsics = cfg.intrinsics()?;
    let query = read_mask_file(&cfg.mask_path(id), cfg.mask_threshold)?;
    let rendered = render_silhouette_with_near(&model, &k, &pose, query.width(), query.height(), cfg.near);
    let xor = query.xor(&rendered)?;
    for (suffix, m) in [("query", &query), ("rendered", &rendered), ("xor", &xor)] {
        let path = ctx.output(&format!("overlay/{id}_{suffix}.pgm"));
        write_mask_file(&path, m)?;
        writeln!(out, "wrote {}", path.display())?;
    }
    let score = iou(&query, &rendered)?;
    writeln!(out, "iou {:.6}, {} differing pixels", score.value, xor.count_ones())?;
    Ok(Status::Ok)
}
