//! Seeded Monte-Carlo comparison of the structure-selection methods.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dependence::CopulaSample;
use crate::error::{Result, VineError};
use crate::families::Family;
use crate::model::VineModel;
use crate::numeric::t_cdf;
use crate::selection::{select, FittedVine, Method, RTransform, SelectionConfig};
use crate::simulation::{sample_from_vine, sample_vine_spec, VineSpecConfig};

/// One comparison scenario: dimension, sample size, replication count and
/// the shared method configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyScenario {
    pub d: usize,
    pub n: usize,
    pub reps: usize,
    pub methods: Vec<Method>,
    pub alpha: f64,
    pub family_set: Vec<Family>,
    pub positive_only: bool,
    pub indep_test: bool,
    pub r_transform: RTransform,
    pub master_seed: u64,
}

impl StudyScenario {
    pub fn new(d: usize, n: usize, reps: usize, methods: Vec<Method>) -> StudyScenario {
        StudyScenario {
            d,
            n,
            reps,
            methods,
            alpha: 0.6,
            family_set: Family::PARAMETRIC.to_vec(),
            positive_only: false,
            indep_test: false,
            r_transform: RTransform::Rank,
            master_seed: 42,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d < 3 || self.n < 100 || self.reps < 1 || self.methods.is_empty() {
            return Err(VineError::DataDomain(
                "study needs d >= 3, n >= 100, reps >= 1 and at least one method".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(VineError::DataDomain(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn config_for(&self, method: Method) -> SelectionConfig {
        SelectionConfig {
            method,
            alpha: self.alpha,
            r_transform: self.r_transform,
            family_set: self.family_set.clone(),
            indep_test: self.indep_test,
            ..SelectionConfig::default()
        }
    }

    /// Replication RNG: one ChaCha stream per replication index, so results
    /// do not depend on execution order or parallelism.
    pub fn rng_for_rep(&self, rep: usize) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(rep as u64 + 1);
        rng
    }

    pub fn draw_replication(&self, rep: usize) -> Result<(VineModel, CopulaSample)> {
        let mut rng = self.rng_for_rep(rep);
        let spec_cfg = VineSpecConfig {
            family_set: self.family_set.clone(),
            positive_only: self.positive_only,
        };
        let vine = sample_vine_spec(self.d, &mut rng, &spec_cfg)?;
        let data = sample_from_vine(&vine, self.n, &mut rng)?;
        Ok((vine, data))
    }
}

/// Per-replication AIC values and timings, in method order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub aic: Vec<f64>,
    pub seconds: Vec<f64>,
}

/// Aggregate comparison of one method against the Dissmann baseline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_aic: f64,
    /// Percentage of replications with AIC better than or equal to the
    /// baseline (ties within 1e-6).
    pub better_or_equal_pct: f64,
    pub equal_pct: f64,
    /// Mean of (baseline AIC - method AIC) / n.
    pub mean_aic_diff_per_obs: f64,
    /// One-sided t statistic and p-value for that mean being positive.
    pub diff_t_stat: Option<f64>,
    pub diff_p_one_sided: Option<f64>,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    pub d: usize,
    pub n: usize,
    pub reps_requested: usize,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    pub baseline: Method,
    pub records: Vec<RepRecord>,
    /// Failed replications: (index, error message). Excluded from the
    /// aggregates but never silently dropped.
    pub failed: Vec<(usize, String)>,
    pub summaries: Vec<MethodSummary>,
}

impl StudyReport {
    pub fn summary_for(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// The deterministic portion of the report (everything except wall-clock
    /// timings), used to verify seed reproducibility.
    pub fn fingerprint(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&format!("{}:", r.rep));
            for a in &r.aic {
                out.push_str(&format!("{a:.10e},"));
            }
            out.push(';');
        }
        for (rep, _) in &self.failed {
            out.push_str(&format!("F{rep}"));
        }
        out
    }
}

const AIC_TIE_TOL: f64 = 1e-6;

/// Run the full study: per replication draw a random vine and a sample, fit
/// every method, and aggregate win/tie percentages against the baseline.
pub fn run_study(scenario: &StudyScenario) -> Result<StudyReport> {
    scenario.validate()?;
    let baseline = scenario
        .methods
        .iter()
        .copied()
        .find(|&m| m == Method::Dissmann)
        .unwrap_or(scenario.methods[0]);

    let results: Vec<std::result::Result<RepRecord, (usize, String)>> = (0..scenario.reps)
        .into_par_iter()
        .map(|rep| run_replication(scenario, rep).map_err(|e| (rep, e.to_string())))
        .collect();

    let mut records = Vec::with_capacity(scenario.reps);
    let mut failed = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failed.push(f),
        }
    }

    let summaries = summarize(scenario, baseline, &records);
    Ok(StudyReport {
        d: scenario.d,
        n: scenario.n,
        reps_requested: scenario.reps,
        master_seed: scenario.master_seed,
        methods: scenario.methods.clone(),
        baseline,
        records,
        failed,
        summaries,
    })
}

fn run_replication(scenario: &StudyScenario, rep: usize) -> Result<RepRecord> {
    let (_, data) = scenario.draw_replication(rep)?;
    let mut aic = Vec::with_capacity(scenario.methods.len());
    let mut seconds = Vec::with_capacity(scenario.methods.len());
    for &method in &scenario.methods {
        let cfg = scenario.config_for(method);
        let start = std::time::Instant::now();
        let fitted: FittedVine = select(&data, &cfg)?;
        seconds.push(start.elapsed().as_secs_f64());
        aic.push(fitted.aic);
    }
    Ok(RepRecord { rep, aic, seconds })
}

fn summarize(
    scenario: &StudyScenario,
    baseline: Method,
    records: &[RepRecord],
) -> Vec<MethodSummary> {
    let base_idx = scenario
        .methods
        .iter()
        .position(|&m| m == baseline)
        .unwrap_or(0);
    let r = records.len();
    scenario
        .methods
        .iter()
        .enumerate()
        .map(|(mi, &method)| {
            let mut better_or_equal = 0usize;
            let mut equal = 0usize;
            let mut diffs = Vec::with_capacity(r);
            let mut aic_sum = 0.0;
            let mut sec_sum = 0.0;
            for rec in records {
                let a = rec.aic[mi];
                let b = rec.aic[base_idx];
                aic_sum += a;
                sec_sum += rec.seconds[mi];
                if (a - b).abs() <= AIC_TIE_TOL {
                    equal += 1;
                    better_or_equal += 1;
                } else if a < b {
                    better_or_equal += 1;
                }
                diffs.push((b - a) / scenario.n as f64);
            }
            let mean_diff = if r > 0 {
                diffs.iter().sum::<f64>() / r as f64
            } else {
                0.0
            };
            let (t_stat, p_one) = if r >= 2 && mi != base_idx {
                let var = diffs
                    .iter()
                    .map(|d| (d - mean_diff) * (d - mean_diff))
                    .sum::<f64>()
                    / (r as f64 - 1.0);
                if var > 0.0 {
                    let t = mean_diff / (var / r as f64).sqrt();
                    (Some(t), Some(1.0 - t_cdf(t, r as f64 - 1.0)))
                } else {
                    (None, None)
                }
            } else {
                (None, None)
            };
            MethodSummary {
                method,
                mean_aic: if r > 0 { aic_sum / r as f64 } else { f64::NAN },
                better_or_equal_pct: pct(better_or_equal, r),
                equal_pct: pct(equal, r),
                mean_aic_diff_per_obs: mean_diff,
                diff_t_stat: t_stat,
                diff_p_one_sided: p_one,
                mean_seconds: if r > 0 { sec_sum / r as f64 } else { f64::NAN },
            }
        })
        .collect()
}

fn pct(count: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    100.0 * count as f64 / total as f64
}

/// Mean AIC of the scenario's first method across a grid of weighting
/// factors, with the vine and sample shared per replication so the
/// comparison across alphas is paired.
pub fn alpha_sweep(scenario: &StudyScenario, alphas: &[f64]) -> Result<Vec<(f64, f64)>> {
    scenario.validate()?;
    let method = scenario.methods[0];
    let per_rep: Vec<std::result::Result<Vec<f64>, String>> = (0..scenario.reps)
        .into_par_iter()
        .map(|rep| {
            let (_, data) = scenario
                .draw_replication(rep)
                .map_err(|e| e.to_string())?;
            alphas
                .iter()
                .map(|&alpha| {
                    let mut cfg = scenario.config_for(method);
                    cfg.alpha = alpha;
                    select(&data, &cfg).map(|f| f.aic).map_err(|e| e.to_string())
                })
                .collect::<std::result::Result<Vec<f64>, String>>()
        })
        .collect();

    let good: Vec<&Vec<f64>> = per_rep.iter().filter_map(|r| r.as_ref().ok()).collect();
    if good.is_empty() {
        return Err(VineError::Numeric("all sweep replications failed".into()));
    }
    Ok(alphas
        .iter()
        .enumerate()
        .map(|(ai, &alpha)| {
            let mean = good.iter().map(|v| v[ai]).sum::<f64>() / good.len() as f64;
            (alpha, mean)
        })
        .collect())
}
