use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{fit, TrainConfig, Variant};
use crate::dataset::inject_noise;
use crate::dataset::Dataset;
use crate::retrieval::{evaluate_model, EvalOptions};
use crate::Result;

/// One grid value, applied on top of the base configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "param", content = "value")]
pub enum Setting {
    /// Noise ratio, used both to corrupt the training labels and to filter.
    Tau(f64),
    Alpha(f64),
    Beta(f64),
    Gamma(f64),
    Eta(f64),
    Variant(Variant),
}

impl Setting {
    pub fn name(&self) -> &'static str {
        match self {
            Setting::Tau(_) => "tau",
            Setting::Alpha(_) => "alpha",
            Setting::Beta(_) => "beta",
            Setting::Gamma(_) => "gamma",
            Setting::Eta(_) => "eta",
            Setting::Variant(_) => "variant",
        }
    }

    pub fn value(&self) -> String {
        match self {
            Setting::Tau(v) | Setting::Alpha(v) | Setting::Beta(v) | Setting::Gamma(v) | Setting::Eta(v) => {
                v.to_string()
            }
            Setting::Variant(v) => format!("{v:?}").to_lowercase(),
        }
    }

    pub fn apply(&self, cfg: &TrainConfig) -> TrainConfig {
        let mut c = cfg.clone();
        match *self {
            Setting::Tau(v) => c.tau = v,
            Setting::Alpha(v) => c.loss.alpha = v,
            Setting::Beta(v) => c.loss.beta = v,
            Setting::Gamma(v) => c.loss.gamma = v,
            Setting::Eta(v) => c.loss.eta = v,
            Setting::Variant(v) => c.variant = v,
        }
        c
    }
}

/// Clean training labels plus the evaluation split.
#[derive(Debug, Clone, Copy)]
pub struct SweepData<'a> {
    pub train: &'a Dataset,
    pub retrieval: &'a Dataset,
    pub test: &'a Dataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub setting: Setting,
    pub seed: u64,
    pub map: Option<f64>,
    /// Set when the cell failed; other cells still run.
    pub error: Option<String>,
}

fn run_cell(data: SweepData, base: &TrainConfig, setting: Setting, seed: u64) -> Result<f64> {
    let cfg = TrainConfig {
        seed,
        ..setting.apply(base)
    };
    let (noisy, mask) = inject_noise(data.train, cfg.tau, seed)?;
    let (params, _) = fit(&noisy, &cfg, Some(&mask))?;
    let (report, _) = evaluate_model(&params, data.retrieval, data.test, &EvalOptions::default())?;
    Ok(report.map)
}

/// Trains and evaluates every `(setting, seed)` pair, in grid-major order.
///
/// Each cell corrupts the clean training labels at its own `tau` with its own
/// seed, so cells sharing a seed and `tau` see identical noisy data.
pub fn sweep(data: SweepData, base: &TrainConfig, grid: &[Setting], seeds: &[u64]) -> Vec<SweepCell> {
    let cells: Vec<(Setting, u64)> = grid
        .iter()
        .flat_map(|&s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let run = |&(setting, seed): &(Setting, u64)| {
        let r = run_cell(data, base, setting, seed);
        SweepCell {
            setting,
            seed,
            map: r.as_ref().ok().copied(),
            error: r.err().map(|e| e.to_string()),
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        cells.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    cells.iter().map(run).collect()
}

/// `param,value,seed,map,status`; failed cells carry the error text.
pub fn write_sweep_csv(cells: &[SweepCell], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["param", "value", "seed", "map", "status"])?;
    for c in cells {
        w.write_record([
            c.setting.name().to_string(),
            c.setting.value(),
            c.seed.to_string(),
            c.map.map(|m| format!("{m:.17}")).unwrap_or_default(),
            c.error.clone().unwrap_or_else(|| "ok".into()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Split;
    use crate::dataset::{generate_synthetic, SynthConfig};

    fn split(seed: u64, n: usize, s: Split) -> Dataset {
        let cfg = SynthConfig {
            n,
            m: 4,
            d_x: 8,
            d_y: 6,
            labels_min: 1,
            labels_max: 2,
            cluster_spread: 0.3,
        };
        generate_synthetic(&cfg, seed, s).unwrap()
    }

    #[test]
    fn cells_are_independent_and_failures_recorded() {
        let train = split(1, 60, Split::Train);
        let retrieval = split(1, 40, Split::Retrieval);
        let test = split(1, 10, Split::Test);
        let data = SweepData {
            train: &train,
            retrieval: &retrieval,
            test: &test,
        };
        let base = TrainConfig {
            code_len: 8,
            hidden: 8,
            fusion: 8,
            batch_size: 12,
            ..TrainConfig::new(2, 1, 0.3, 0)
        };
        let grid = [Setting::Tau(0.3), Setting::Tau(1.5), Setting::Tau(0.3)];
        let cells = sweep(data, &base, &grid, &[7]);
        assert_eq!(cells.len(), 3);
        assert_eq!(cells[0].map, cells[2].map);
        assert!(cells[0].map.is_some());
        assert!(cells[1].error.is_some());
        let single = sweep(data, &base, &grid[..1], &[7]);
        assert_eq!(single[0], cells[0]);
        let mut buf = Vec::new();
        write_sweep_csv(&cells, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }
}
