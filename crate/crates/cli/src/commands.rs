use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context};
use mmhash::dataset::{
    export_csv, generate_synthetic, inject_noise, load_dataset, load_noise_mask, read_dataset, read_noise_mask,
    save_dataset, save_noise_mask, Dataset, NoiseMask, Split, SynthConfig,
};
use mmhash::model::{encode_dataset, load_checkpoint, read_checkpoint, save_checkpoint, sign, ModelParams};
use mmhash::retrieval::{
    boxplot_stats, evaluate_model, read_index, save_index, EvalOptions, EvalReport, PrMode, Subset,
};
use mmhash::trainer::{fit, sweep, write_sweep_csv, Setting, SweepData, TrainConfig, Variant};
use serde_json::{json, Map, Value};

use crate::args::*;

/// Why a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration, detected before any output is written.
    Usage(String),
    /// File, format or numeric failure while running.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = Result<Value, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn read_data(path: &Path) -> anyhow::Result<Dataset> {
    load_dataset(path).with_context(|| format!("cannot read dataset {}", path.display()))
}

fn read_params(path: &Path) -> anyhow::Result<ModelParams> {
    load_checkpoint(path).with_context(|| format!("cannot read checkpoint {}", path.display()))
}

fn read_mask(path: &Path, ds: &Dataset) -> anyhow::Result<NoiseMask> {
    let mask = load_noise_mask(path, ds.m).with_context(|| format!("cannot read noise mask {}", path.display()))?;
    if mask.len() != ds.len() {
        return Err(anyhow!(
            "noise mask {} has {} rows but the dataset has {}",
            path.display(),
            mask.len(),
            ds.len()
        ));
    }
    Ok(mask)
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

/// Checks that the checkpoint accepts the dataset's feature widths.
fn check_dims(params: &ModelParams, ds: &Dataset, what: &str) -> anyhow::Result<()> {
    let c = params.config();
    if (c.d_x, c.d_y) != (ds.d_x, ds.d_y) {
        return Err(anyhow!(
            "dimension mismatch: checkpoint expects d_x={} d_y={}, {what} set has d_x={} d_y={}",
            c.d_x,
            c.d_y,
            ds.d_x,
            ds.d_y
        ));
    }
    Ok(())
}

pub fn synth(a: &SynthArgs) -> Outcome {
    let cfg = SynthConfig {
        n: a.n,
        m: a.m,
        d_x: a.dx,
        d_y: a.dy,
        labels_min: a.labels_min,
        labels_max: a.labels_max,
        cluster_spread: a.spread,
    };
    let split = match a.split {
        SplitArg::Train => Split::Train,
        SplitArg::Retrieval => Split::Retrieval,
        SplitArg::Test => Split::Test,
    };
    let ds = generate_synthetic(&cfg, a.seed, split).map_err(|e| usage(e.to_string()))?;
    save_dataset(&ds, &a.out).with_context(|| format!("cannot write {}", a.out.display()))?;
    if let Some(csv) = &a.csv {
        export_csv(&ds, csv).with_context(|| format!("cannot write {}", csv.display()))?;
    }
    Ok(json!({
        "out": a.out,
        "n": ds.len(),
        "m": ds.m,
        "d_x": ds.d_x,
        "d_y": ds.d_y,
        "seeds": { "data": a.seed },
    }))
}

pub fn inject(a: &InjectArgs) -> Outcome {
    if !(0.0..1.0).contains(&a.tau) {
        return Err(usage(format!("--tau must be in [0, 1), got {}", a.tau)));
    }
    let ds = read_data(&a.input)?;
    let seed = a.seed.unwrap_or(ds.seed);
    let (noisy, mask) = inject_noise(&ds, a.tau, seed).context("noise injection failed")?;
    save_dataset(&noisy, &a.out).with_context(|| format!("cannot write {}", a.out.display()))?;
    save_noise_mask(&mask, &a.mask).with_context(|| format!("cannot write {}", a.mask.display()))?;
    let [_, t1, t2, t3] = mask.type_counts();
    Ok(json!({
        "out": a.out,
        "mask": a.mask,
        "n": noisy.len(),
        "corrupted": mask.corrupted_count(),
        "by_type": { "1": t1, "2": t2, "3": t3 },
        "seeds": { "noise": seed },
    }))
}

/// Config file fields, then every flag that was given. Flags win.
pub fn resolve_config(o: &TrainOverrides, fallback_seed: Option<u64>) -> Result<TrainConfig, Failure> {
    let mut v = match &o.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
            serde_json::from_str::<Value>(&text).map_err(|e| usage(format!("config {}: {e}", p.display())))?
        }
        None => json!({}),
    };
    let obj = v
        .as_object_mut()
        .ok_or_else(|| usage("config file must hold a JSON object"))?;
    let mut set = |key: &str, val: Option<Value>| {
        if let Some(val) = val {
            obj.insert(key.into(), val);
        }
    };
    set("seed", o.seed.map(Value::from));
    set("epochs", o.epochs.map(Value::from));
    set("warmup_epochs", o.warmup_epochs.map(Value::from));
    set("tau", o.tau.map(Value::from));
    set("batch_size", o.batch_size.map(Value::from));
    set("lr", o.lr.map(Value::from));
    set(
        "variant",
        o.variant.as_deref().map(|s| Value::from(s.to_ascii_lowercase())),
    );
    set("code_len", o.code_len.map(Value::from));
    set("hidden", o.hidden.map(Value::from));
    set("fusion", o.fusion.map(Value::from));
    set("filter_scope", o.filter_scope.as_deref().map(Value::from));
    set(
        "donor_scope",
        o.donor_cache.map(|c| json!({ "cache": { "capacity": c } })),
    );
    if let Some(seed) = fallback_seed {
        obj.entry("seed").or_insert(Value::from(seed));
    }
    let loss = obj.entry("loss").or_insert_with(|| Value::Object(Map::new()));
    let loss = loss
        .as_object_mut()
        .ok_or_else(|| usage("config field `loss` must be an object"))?;
    for (key, val) in [("alpha", o.alpha), ("beta", o.beta), ("gamma", o.gamma), ("eta", o.eta)] {
        if let Some(val) = val {
            loss.insert(key.into(), Value::from(val));
        }
    }
    let cfg: TrainConfig = serde_json::from_value(v).map_err(|e| usage(format!("invalid training config: {e}")))?;
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

pub fn train(a: &TrainArgs) -> Outcome {
    let cfg = resolve_config(&a.cfg, None)?;
    let ds = read_data(&a.data)?;
    let mask = a.mask.as_deref().map(|p| read_mask(p, &ds)).transpose()?;
    let (params, mut report) = fit(&ds, &cfg, mask.as_ref()).context("training failed")?;
    for e in &report.epochs {
        eprintln!(
            "epoch {:>3} {:?} loss {:.6} flagged {} corrected {} unlabeled {} dropped {}",
            e.epoch, e.phase, e.loss.total, e.flagged, e.corrected, e.unlabeled, e.dropped
        );
    }
    save_checkpoint(&params, &a.ckpt).with_context(|| format!("cannot write {}", a.ckpt.display()))?;
    report.checkpoint = Some(a.ckpt.display().to_string());
    if let Some(p) = &a.report {
        let mut buf = Vec::new();
        report.write_csv(&mut buf).context("cannot format report")?;
        write_file(p, &buf)?;
    }
    if let Some(p) = &a.report_json {
        write_file(
            p,
            serde_json::to_string_pretty(&report)
                .context("cannot format report")?
                .as_bytes(),
        )?;
    }
    Ok(json!({
        "ckpt": a.ckpt,
        "epochs": report.epochs.len(),
        "final": report.last(),
        "config": cfg,
        "seeds": { "train": cfg.seed },
    }))
}

pub fn eval(a: &EvalArgs) -> Outcome {
    let opts = EvalOptions {
        pn: a.pn.clone(),
        pr: if a.pr_ranks.is_empty() {
            PrMode::Radius
        } else {
            PrMode::Rank(a.pr_ranks.clone())
        },
    };
    let params = read_params(&a.ckpt)?;
    let retrieval = read_data(&a.retrieval)?;
    let test = read_data(&a.test)?;
    check_dims(&params, &retrieval, "retrieval")?;
    check_dims(&params, &test, "test")?;
    if retrieval.m != test.m {
        return Err(anyhow!(
            "label width mismatch: retrieval set has m={}, test set has m={}",
            retrieval.m,
            test.m
        )
        .into());
    }
    let (report, index) = evaluate_model(&params, &retrieval, &test, &opts).context("evaluation failed")?;
    type Writer = fn(&EvalReport, &mut Vec<u8>) -> mmhash::Result<()>;
    let outputs: [(&Option<PathBuf>, Writer); 3] = [
        (&a.ap_out, |r, b| r.write_ap_csv(b)),
        (&a.pn_out, |r, b| r.write_pn_csv(b)),
        (&a.pr_out, |r, b| r.write_pr_csv(b)),
    ];
    for (path, write) in outputs {
        if let Some(p) = path {
            let mut buf = Vec::new();
            write(&report, &mut buf).context("cannot format metrics")?;
            write_file(p, &buf)?;
        }
    }
    if let Some(p) = &a.index_out {
        save_index(&index, p).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(json!({
        "map": report.map,
        "queries": test.len(),
        "database": retrieval.len(),
        "code_len": index.code_len(),
        "pn": report.pn,
    }))
}

fn parse_setting(param: SweepParam, raw: &str) -> Result<Setting, Failure> {
    let num = || {
        raw.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("sweep value {raw:?} is not a number")))
    };
    Ok(match param {
        SweepParam::Tau => Setting::Tau(num()?),
        SweepParam::Alpha => Setting::Alpha(num()?),
        SweepParam::Beta => Setting::Beta(num()?),
        SweepParam::Gamma => Setting::Gamma(num()?),
        SweepParam::Eta => Setting::Eta(num()?),
        SweepParam::Variant => Setting::Variant(Variant::from_str(raw.trim()).map_err(|e| usage(e.to_string()))?),
    })
}

pub fn sweep_cmd(a: &SweepArgs) -> Outcome {
    let base = resolve_config(&a.cfg, a.seeds.first().copied())?;
    let grid: Vec<Setting> = a
        .values
        .iter()
        .map(|v| parse_setting(a.param, v))
        .collect::<Result<_, _>>()?;
    for s in &grid {
        let cfg = s.apply(&base);
        cfg.validate()
            .map_err(|e| usage(format!("{} = {}: {e}", s.name(), s.value())))?;
    }
    let train = read_data(&a.data)?;
    let retrieval = read_data(&a.retrieval)?;
    let test = read_data(&a.test)?;
    let data = SweepData {
        train: &train,
        retrieval: &retrieval,
        test: &test,
    };
    let cells = sweep(data, &base, &grid, &a.seeds);
    for c in &cells {
        eprintln!(
            "{}={} seed {}: {}",
            c.setting.name(),
            c.setting.value(),
            c.seed,
            c.map
                .map_or_else(|| c.error.clone().unwrap_or_default(), |m| format!("MAP {m:.4}"))
        );
    }
    let mut buf = Vec::new();
    write_sweep_csv(&cells, &mut buf).context("cannot format sweep")?;
    write_file(&a.out, &buf)?;
    let means: Vec<Value> = grid
        .iter()
        .map(|s| {
            let maps: Vec<f64> = cells.iter().filter(|c| c.setting == *s).filter_map(|c| c.map).collect();
            let mean = (!maps.is_empty()).then(|| maps.iter().sum::<f64>() / maps.len() as f64);
            json!({ "value": s.value(), "mean_map": mean, "ok": maps.len() })
        })
        .collect();
    Ok(json!({
        "out": a.out,
        "param": s_name(a.param),
        "cells": cells.len(),
        "failed": cells.iter().filter(|c| c.error.is_some()).count(),
        "means": means,
        "seeds": { "cells": a.seeds },
    }))
}

fn s_name(p: SweepParam) -> Value {
    serde_json::to_value(p).unwrap_or(Value::Null)
}

pub fn boxplot(a: &BoxplotArgs) -> Outcome {
    let params = read_params(&a.ckpt)?;
    let ds = read_data(&a.data)?;
    check_dims(&params, &ds, "data")?;
    if params.config().categories != ds.m {
        return Err(anyhow!(
            "category mismatch: checkpoint has m={}, data set has m={}",
            params.config().categories,
            ds.m
        )
        .into());
    }
    let mask = a.mask.as_deref().map(|p| read_mask(p, &ds)).transpose()?;
    let mut codes = encode_dataset(&params, &ds).context("encoding failed")?;
    if a.binary {
        codes.mapv_inplace(sign);
    }
    let table =
        boxplot_stats(codes.view(), params.centers.view(), &ds.labels(), mask.as_ref()).context("statistics failed")?;
    for note in &table.omitted {
        eprintln!("omitted: {note}");
    }
    write_file(
        &a.out,
        serde_json::to_string_pretty(&table)
            .context("cannot format table")?
            .as_bytes(),
    )?;
    Ok(json!({
        "out": a.out,
        "groups": table.groups.len(),
        "median_gap_clean": table.median_gap(Subset::Clean),
        "median_gap_noisy": table.median_gap(Subset::Noisy),
    }))
}

pub fn inspect(a: &InspectArgs) -> Outcome {
    let p = &a.file;
    let bytes = fs::read(p).with_context(|| format!("cannot read {}", p.display()))?;
    let ctx = || format!("cannot decode {}", p.display());
    match bytes.get(..4) {
        Some(b"DCMH") => {
            let ds = read_dataset(&bytes).with_context(ctx)?;
            let mean_card = if ds.is_empty() {
                0.0
            } else {
                ds.instances.iter().map(|i| i.label.cardinality()).sum::<usize>() as f64 / ds.len() as f64
            };
            Ok(json!({
                "kind": "dataset", "n": ds.len(), "d_x": ds.d_x, "d_y": ds.d_y, "m": ds.m,
                "seed": ds.seed, "mean_labels": mean_card,
            }))
        }
        Some(b"DCNM") => {
            // record width 1 + m is implied by the body length
            let n = bytes
                .get(8..12)
                .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
                .ok_or_else(|| anyhow!("{}: truncated header", p.display()))?;
            let body = bytes.len() - 12;
            if n == 0 || body % n != 0 || body / n < 2 {
                return Err(anyhow!("{}: cannot infer label width from {body} body bytes", p.display()).into());
            }
            let mask = read_noise_mask(&bytes, body / n - 1).with_context(ctx)?;
            let [clean, t1, t2, t3] = mask.type_counts();
            Ok(json!({
                "kind": "noise_mask", "n": mask.len(), "m": mask.m, "clean": clean,
                "corrupted": mask.corrupted_count(), "by_type": { "1": t1, "2": t2, "3": t3 },
            }))
        }
        Some(b"DCMP") => {
            let params = read_checkpoint(&bytes).with_context(ctx)?;
            Ok(json!({ "kind": "checkpoint", "config": params.config(), "params": params.num_params() }))
        }
        Some(b"DCIX") => {
            let index = read_index(&bytes).with_context(ctx)?;
            Ok(json!({
                "kind": "index", "n": index.len(), "code_len": index.code_len(),
                "m": index.labels().first().map(|l| l.len()),
            }))
        }
        _ => Err(anyhow!("{}: unrecognized file type", p.display()).into()),
    }
}
