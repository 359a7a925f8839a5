//! Seeded Monte Carlo size and power studies.

use super::model::{replication_rng, DataModel, SimConfig};
use crate::error::{GlhtError, Result};
use crate::stats::{run_glht_with_weights, Triple, STATISTIC_NAMES};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::io::Write;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub label: String,
    pub config: SimConfig,
    /// Rejection rates in percent over successful replications.
    pub rates: Triple<f64>,
    pub rejections: Triple<usize>,
    pub reps_ok: usize,
    pub reps_failed: usize,
    /// Up to five (replication, message) pairs from failed replications.
    pub failures: Vec<(usize, String)>,
    pub mean_d_b: f64,
    pub mean_d_e: f64,
    pub seed: u64,
    pub elapsed_secs: f64,
}

type RepOutcome = std::result::Result<([bool; 3], f64, f64), String>;

fn run_reps(model: &DataModel, cfg: &SimConfig, threads: Option<usize>) -> Result<Vec<RepOutcome>> {
    let spec = cfg.contrast_spec()?;
    let w = model.grid.weights();
    let one = |rep: usize| -> RepOutcome {
        let ds = model.sample(&mut replication_rng(cfg.seed, rep as u64));
        run_glht_with_weights(&ds, &spec, cfg.alpha, &w)
            .map(|r| (r.decisions.as_array(), r.dof.d_b, r.dof.d_e))
            .map_err(|e| e.to_string())
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let work = || (0..cfg.reps).into_par_iter().map(one).collect::<Vec<_>>();
        match threads {
            Some(t) if t > 0 => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| GlhtError::InvalidArgument(format!("cannot start {t} worker threads: {e}")))?;
                Ok(pool.install(work))
            }
            _ => Ok(work()),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok((0..cfg.reps).map(one).collect())
    }
}

pub fn size_power_study(cfg: &SimConfig) -> Result<StudyResult> {
    size_power_study_with(cfg, None)
}

/// Replication `r` draws from ChaCha12 stream `r` of the master seed, so the
/// result does not depend on how replications are scheduled.
pub fn size_power_study_with(cfg: &SimConfig, threads: Option<usize>) -> Result<StudyResult> {
    let model = DataModel::from_config(cfg)?;
    let start = Stopwatch::start();
    let outcomes = run_reps(&model, cfg, threads)?;
    let mut rej = [0usize; 3];
    let (mut ok, mut sum_b, mut sum_e) = (0usize, 0.0, 0.0);
    let mut failures = Vec::new();
    let mut failed = 0;
    for (rep, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok((dec, db, de)) => {
                ok += 1;
                sum_b += db;
                sum_e += de;
                for (r, d) in rej.iter_mut().zip(dec) {
                    *r += d as usize;
                }
            }
            Err(msg) => {
                failed += 1;
                if failures.len() < 5 {
                    failures.push((rep, msg));
                }
            }
        }
    }
    let rate = |x: usize| if ok == 0 { f64::NAN } else { 100.0 * x as f64 / ok as f64 };
    Ok(StudyResult {
        label: cfg.label(),
        config: cfg.clone(),
        rates: Triple { mfw: rate(rej[0]), mflh: rate(rej[1]), mfp: rate(rej[2]) },
        rejections: Triple { mfw: rej[0], mflh: rej[1], mfp: rej[2] },
        reps_ok: ok,
        reps_failed: failed,
        failures,
        mean_d_b: sum_b / ok.max(1) as f64,
        mean_d_e: sum_e / ok.max(1) as f64,
        seed: cfg.seed,
        elapsed_secs: start.secs(),
    })
}

/// Wall-clock timer; reads zero on wasm32, which has no system clock.
struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        Stopwatch(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn secs(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        0.0
    }
}

/// ARE = 100 J⁻¹ Σ |α̂_j − α| / α, all in percent.
pub fn are_metric(alphas: &[f64], alpha_nominal: f64) -> Result<f64> {
    if alphas.is_empty() {
        return Err(GlhtError::InvalidArgument("ARE needs at least one empirical size".into()));
    }
    if !(alpha_nominal > 0.0) {
        return Err(GlhtError::InvalidArgument("nominal level must be positive".into()));
    }
    let sum: f64 = alphas.iter().map(|a| (a - alpha_nominal).abs() / alpha_nominal).sum();
    Ok(100.0 * sum / alphas.len() as f64)
}

/// A list of settings, read either as one config object or as
/// `{"base": {...}, "sweep": {"key": [values, ...], ...}}`. Sweeps expand to
/// the Cartesian product with the first key varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyPlan {
    pub settings: Vec<SimConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    base: Value,
    #[serde(default)]
    sweep: serde_json::Map<String, Value>,
}

impl StudyPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        let bad = |e: String| GlhtError::InvalidArgument(format!("bad simulation config: {e}"));
        let v: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let is_sweep = v.as_object().is_some_and(|o| o.contains_key("base"));
        let settings = if is_sweep {
            let f: SweepFile = serde_json::from_value(v).map_err(|e| bad(e.to_string()))?;
            if !f.base.is_object() {
                return Err(bad("`base` must be an object".into()));
            }
            let mut combos = vec![f.base];
            for (key, vals) in &f.sweep {
                let vals = vals.as_array().ok_or_else(|| bad(format!("sweep `{key}` must be an array")))?;
                if vals.is_empty() {
                    return Err(bad(format!("sweep `{key}` is empty")));
                }
                combos = combos
                    .into_iter()
                    .flat_map(|c| {
                        vals.iter().map(move |x| {
                            let mut c = c.clone();
                            c.as_object_mut().unwrap().insert(key.clone(), x.clone());
                            c
                        })
                    })
                    .collect();
            }
            combos
                .into_iter()
                .map(|c| serde_json::from_value::<SimConfig>(c).map_err(|e| bad(e.to_string())))
                .collect::<Result<Vec<_>>>()?
        } else {
            vec![serde_json::from_value::<SimConfig>(v).map_err(|e| bad(e.to_string()))?]
        };
        for s in &settings {
            s.validate()?;
        }
        Ok(StudyPlan { settings })
    }

    /// Overrides reps and/or seed in every setting.
    pub fn with_overrides(mut self, reps: Option<usize>, seed: Option<u64>) -> Result<Self> {
        for s in &mut self.settings {
            if let Some(r) = reps {
                s.reps = r;
            }
            if let Some(x) = seed {
                s.seed = x;
            }
            s.validate()?;
        }
        Ok(self)
    }
}

/// ARE per statistic over the size settings (δ = 0), when there are at least two.
pub fn are_rows(results: &[StudyResult]) -> Option<Triple<f64>> {
    let sizes: Vec<&StudyResult> = results.iter().filter(|r| r.config.delta == 0.0 && r.reps_ok > 0).collect();
    if sizes.len() < 2 {
        return None;
    }
    let nominal = 100.0 * sizes[0].config.alpha;
    let are = |f: fn(&Triple<f64>) -> f64| are_metric(&sizes.iter().map(|r| f(&r.rates)).collect::<Vec<_>>(), nominal).ok();
    Some(Triple { mfw: are(|t| t.mfw)?, mflh: are(|t| t.mflh)?, mfp: are(|t| t.mfp)? })
}

pub const CSV_HEADER: &str = "kind,setting,model,scenario,rho,n,delta,contrast,statistic,value,reps_ok,reps_failed,seed";

/// One `rate` row per statistic per setting, then `are` rows if applicable.
/// Contains no timing, so equal seeds give byte-identical output.
pub fn write_results_csv<W: Write>(results: &[StudyResult], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for (idx, r) in results.iter().enumerate() {
        let c = &r.config;
        for (name, v) in STATISTIC_NAMES.iter().zip(r.rates.as_array()) {
            writeln!(
                out,
                "rate,{},{},{:?},{},{},{},{},{},{},{},{},{}",
                idx + 1,
                c.model,
                c.scenario,
                c.rho,
                c.n.label(),
                c.delta,
                csv_field(&c.contrast.label()),
                name,
                v,
                r.reps_ok,
                r.reps_failed,
                r.seed
            )?;
        }
    }
    if let Some(are) = are_rows(results) {
        let j = results.iter().filter(|r| r.config.delta == 0.0 && r.reps_ok > 0).count();
        for (name, v) in STATISTIC_NAMES.iter().zip(are.as_array()) {
            writeln!(out, "are,all,,,,,,,{name},{v},{j},,")?;
        }
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
