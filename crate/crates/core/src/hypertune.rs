//! Sequential model-based hyperparameter search.
//!
//! A Tree-structured Parzen Estimator over mixed continuous / integer /
//! categorical domains: after an initial uniform-random phase, past trials
//! are split at the best quartile, per-dimension densities are fitted to the
//! good and bad groups, and the candidate maximizing the good/bad density
//! ratio is evaluated next. A pure random-search mode is available by
//! forcing the random phase to cover every trial.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Quantile separating "good" from "bad" past trials.
const GAMMA: f64 = 0.25;
/// Candidates scored per TPE proposal.
const CANDIDATES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DomainKind {
    Continuous { lo: f64, hi: f64 },
    Integer { lo: i64, hi: i64 },
    Categorical { options: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDomain {
    pub name: String,
    pub kind: DomainKind,
}

impl ParamDomain {
    pub fn continuous(name: &str, lo: f64, hi: f64) -> Self {
        ParamDomain {
            name: name.into(),
            kind: DomainKind::Continuous { lo, hi },
        }
    }

    pub fn integer(name: &str, lo: i64, hi: i64) -> Self {
        ParamDomain {
            name: name.into(),
            kind: DomainKind::Integer { lo, hi },
        }
    }

    pub fn categorical(name: &str, options: &[&str]) -> Self {
        ParamDomain {
            name: name.into(),
            kind: DomainKind::Categorical {
                options: options.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match &self.kind {
            DomainKind::Continuous { lo, hi } => lo < hi,
            DomainKind::Integer { lo, hi } => lo < hi,
            DomainKind::Categorical { options } => !options.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("empty domain for {}", self.name)))
        }
    }
}

/// One hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Str(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Float(v) => Some(*v),
            ParamValue::Int(v) => Some(*v as f64),
            ParamValue::Str(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ParamValue::Int(v) => Some(*v),
            ParamValue::Float(v) => Some(*v as i64),
            ParamValue::Str(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Str(s) => Some(s),
            _ => None,
        }
    }
}

pub type Config = BTreeMap<String, ParamValue>;

/// Outcome of one tuning trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub config: Config,
    pub loss: f64,
    pub wall_time: f64,
    pub eval_count: usize,
}

/// What a tuning objective reports back per trial.
pub struct TrialOutcome {
    pub loss: f64,
    pub eval_count: usize,
}

fn sample_uniform(domain: &ParamDomain, rng: &mut RngStream) -> ParamValue {
    match &domain.kind {
        DomainKind::Continuous { lo, hi } => ParamValue::Float(rng.range(*lo..*hi)),
        DomainKind::Integer { lo, hi } => ParamValue::Int(rng.range(*lo..=*hi)),
        DomainKind::Categorical { options } => {
            ParamValue::Str(rng.choose(options).clone())
        }
    }
}

fn numeric_value(value: &ParamValue) -> f64 {
    value.as_f64().expect("numeric domain holds numeric values")
}

/// Mixture-of-Gaussians log density over the group's observed values.
fn log_gaussian_mixture(x: f64, centers: &[f64], bandwidth: f64) -> f64 {
    let norm = 1.0 / (centers.len() as f64 * bandwidth * (std::f64::consts::TAU).sqrt());
    let sum: f64 = centers
        .iter()
        .map(|&c| (-0.5 * ((x - c) / bandwidth).powi(2)).exp())
        .sum();
    (norm * sum).max(f64::MIN_POSITIVE).ln()
}

/// Smoothed categorical log probability with +1 pseudo-counts.
fn log_categorical(option: &str, group: &[&ParamValue], options: &[String]) -> f64 {
    let count = group
        .iter()
        .filter(|v| v.as_str() == Some(option))
        .count() as f64;
    ((count + 1.0) / (group.len() as f64 + options.len() as f64)).ln()
}

struct Proposal<'d> {
    space: &'d [ParamDomain],
    good: Vec<&'d Config>,
    bad: Vec<&'d Config>,
}

impl<'d> Proposal<'d> {
    fn bandwidth(domain: &ParamDomain, count: usize) -> f64 {
        let width = match &domain.kind {
            DomainKind::Continuous { lo, hi } => hi - lo,
            DomainKind::Integer { lo, hi } => (hi - lo) as f64,
            DomainKind::Categorical { .. } => unreachable!(),
        };
        width / (count.max(1) as f64).sqrt()
    }

    fn clamp(domain: &ParamDomain, raw: f64) -> ParamValue {
        match &domain.kind {
            DomainKind::Continuous { lo, hi } => ParamValue::Float(raw.clamp(*lo, *hi)),
            DomainKind::Integer { lo, hi } => {
                ParamValue::Int((raw.round() as i64).clamp(*lo, *hi))
            }
            DomainKind::Categorical { .. } => unreachable!(),
        }
    }

    /// Draw one candidate from the good-group density.
    fn sample(&self, rng: &mut RngStream) -> Config {
        let mut config = Config::new();
        for domain in self.space {
            let good_values: Vec<&ParamValue> = self
                .good
                .iter()
                .map(|c| c.get(&domain.name).expect("trials cover the space"))
                .collect();
            let value = match &domain.kind {
                DomainKind::Categorical { options } => {
                    // Sample from the smoothed good-group frequencies.
                    let weights: Vec<f64> = options
                        .iter()
                        .map(|o| log_categorical(o, &good_values, options).exp())
                        .collect();
                    ParamValue::Str(options[rng.weighted_index(&weights)].clone())
                }
                _ => {
                    let bw = Self::bandwidth(domain, self.good.len());
                    let center = numeric_value(good_values[rng.range(0..good_values.len())]);
                    Self::clamp(domain, center + rng.normal() * bw)
                }
            };
            config.insert(domain.name.clone(), value);
        }
        config
    }

    /// log l(x) - log g(x), the TPE acquisition score.
    fn score(&self, config: &Config) -> f64 {
        let mut total = 0.0;
        for domain in self.space {
            let value = &config[&domain.name];
            match &domain.kind {
                DomainKind::Categorical { options } => {
                    let good: Vec<&ParamValue> = self
                        .good
                        .iter()
                        .map(|c| &c[&domain.name])
                        .collect();
                    let bad: Vec<&ParamValue> =
                        self.bad.iter().map(|c| &c[&domain.name]).collect();
                    let option = value.as_str().expect("categorical value");
                    total += log_categorical(option, &good, options)
                        - log_categorical(option, &bad, options);
                }
                _ => {
                    let x = numeric_value(value);
                    let good: Vec<f64> = self
                        .good
                        .iter()
                        .map(|c| numeric_value(&c[&domain.name]))
                        .collect();
                    let bad: Vec<f64> = self
                        .bad
                        .iter()
                        .map(|c| numeric_value(&c[&domain.name]))
                        .collect();
                    total += log_gaussian_mixture(x, &good, Self::bandwidth(domain, good.len()))
                        - log_gaussian_mixture(x, &bad, Self::bandwidth(domain, bad.len()));
                }
            }
        }
        total
    }
}

/// Run up to `n_trials` sequential trials (stopping early at `time_limit`)
/// and return the lowest-loss configuration with the full trial log. The
/// first `max(5, n_trials/5)` trials sample uniformly at random; later
/// trials are proposed by the TPE model. A failed objective records loss
/// +inf and the search continues.
pub fn search<F>(
    space: &[ParamDomain],
    mut objective: F,
    n_trials: usize,
    time_limit: Duration,
    seed: u64,
) -> Result<(Config, Vec<TrialRecord>)>
where
    F: FnMut(&Config) -> Result<TrialOutcome>,
{
    if n_trials == 0 {
        return Err(Error::InvalidConfig("n_trials must be >= 1".into()));
    }
    for domain in space {
        domain.validate()?;
    }
    let mut rng = RngStream::new(seed, "hypertune");
    let n_random = (n_trials / 5).max(5);
    let start = Instant::now();
    let mut trials: Vec<TrialRecord> = Vec::with_capacity(n_trials);

    for trial_idx in 0..n_trials {
        if trial_idx > 0 && start.elapsed() > time_limit {
            break;
        }
        let config = if trial_idx < n_random || trials.len() < 2 {
            space
                .iter()
                .map(|d| (d.name.clone(), sample_uniform(d, &mut rng)))
                .collect()
        } else {
            let mut sorted: Vec<&TrialRecord> = trials.iter().collect();
            sorted.sort_by(|a, b| a.loss.total_cmp(&b.loss));
            let n_good = ((sorted.len() as f64 * GAMMA).ceil() as usize)
                .clamp(1, sorted.len() - 1);
            let proposal = Proposal {
                space,
                good: sorted[..n_good].iter().map(|t| &t.config).collect(),
                bad: sorted[n_good..].iter().map(|t| &t.config).collect(),
            };
            let mut best_candidate: Option<(Config, f64)> = None;
            for _ in 0..CANDIDATES {
                let candidate = proposal.sample(&mut rng);
                let score = proposal.score(&candidate);
                if best_candidate.as_ref().map_or(true, |(_, s)| score > *s) {
                    best_candidate = Some((candidate, score));
                }
            }
            best_candidate.expect("at least one candidate").0
        };

        let trial_start = Instant::now();
        let (loss, eval_count) = match objective(&config) {
            Ok(outcome) => (outcome.loss, outcome.eval_count),
            Err(_) => (f64::INFINITY, 0),
        };
        trials.push(TrialRecord {
            config,
            loss,
            wall_time: trial_start.elapsed().as_secs_f64(),
            eval_count,
        });
    }

    let best = trials
        .iter()
        .min_by(|a, b| a.loss.total_cmp(&b.loss))
        .expect("at least one trial ran")
        .config
        .clone();
    Ok((best, trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_space() -> Vec<ParamDomain> {
        vec![ParamDomain::continuous("v", 0.0, 10.0)]
    }

    fn quadratic(config: &Config) -> Result<TrialOutcome> {
        let v = config["v"].as_f64().unwrap();
        Ok(TrialOutcome {
            loss: (v - 3.0).powi(2),
            eval_count: 1,
        })
    }

    #[test]
    fn one_dimensional_quadratic_is_located() {
        let mut hits = 0;
        for seed in 0..10 {
            let (best, trials) = search(
                &quadratic_space(),
                quadratic,
                50,
                Duration::from_secs(60),
                seed,
            )
            .unwrap();
            assert_eq!(trials.len(), 50);
            let v = best["v"].as_f64().unwrap();
            if (v - 3.0).abs() < 0.5 {
                hits += 1;
            }
        }
        assert!(hits >= 9, "only {hits}/10 seeds found the optimum region");
    }

    #[test]
    fn single_trial_returns_its_random_config() {
        let (best, trials) = search(
            &quadratic_space(),
            quadratic,
            1,
            Duration::from_secs(60),
            7,
        )
        .unwrap();
        assert_eq!(trials.len(), 1);
        assert_eq!(best, trials[0].config);
    }

    #[test]
    fn tpe_beats_its_own_random_warmup() {
        let mut wins = 0;
        for seed in 100..110 {
            let (_, trials) = search(
                &quadratic_space(),
                quadratic,
                50,
                Duration::from_secs(60),
                seed,
            )
            .unwrap();
            let warmup_best = trials[..5]
                .iter()
                .map(|t| t.loss)
                .fold(f64::INFINITY, f64::min);
            let overall_best = trials.iter().map(|t| t.loss).fold(f64::INFINITY, f64::min);
            if overall_best < warmup_best {
                wins += 1;
            }
        }
        assert!(wins >= 8, "TPE beat its warmup in only {wins}/10 seeds");
    }

    #[test]
    fn returned_config_has_the_minimum_loss() {
        let (best, trials) = search(
            &quadratic_space(),
            quadratic,
            30,
            Duration::from_secs(60),
            3,
        )
        .unwrap();
        let min = trials.iter().map(|t| t.loss).fold(f64::INFINITY, f64::min);
        let best_loss = (best["v"].as_f64().unwrap() - 3.0).powi(2);
        assert!((best_loss - min).abs() < 1e-12);
    }

    #[test]
    fn proposals_stay_inside_their_domains() {
        let space = vec![
            ParamDomain::continuous("c", -1.0, 1.0),
            ParamDomain::integer("i", 2, 9),
            ParamDomain::categorical("k", &["x", "y", "z"]),
        ];
        let objective = |config: &Config| {
            let c = config["c"].as_f64().unwrap();
            let i = config["i"].as_i64().unwrap();
            assert!((-1.0..=1.0).contains(&c));
            assert!((2..=9).contains(&i));
            assert!(["x", "y", "z"].contains(&config["k"].as_str().unwrap()));
            Ok(TrialOutcome {
                loss: c.abs() + (i as f64 - 4.0).abs(),
                eval_count: 1,
            })
        };
        let (best, trials) = search(&space, objective, 60, Duration::from_secs(60), 5).unwrap();
        assert_eq!(trials.len(), 60);
        assert!(best.contains_key("k"));
    }

    #[test]
    fn failed_trials_record_infinity_and_continue() {
        let mut calls = 0;
        let objective = |config: &Config| {
            calls += 1;
            let v = config["v"].as_f64().unwrap();
            if calls % 3 == 0 {
                Err(Error::InvalidConfig("flaky".into()))
            } else {
                Ok(TrialOutcome {
                    loss: (v - 3.0).powi(2),
                    eval_count: 1,
                })
            }
        };
        let (_, trials) = search(
            &quadratic_space(),
            objective,
            20,
            Duration::from_secs(60),
            11,
        )
        .unwrap();
        assert_eq!(trials.len(), 20);
        assert!(trials.iter().any(|t| t.loss.is_infinite()));
        assert!(trials.iter().any(|t| t.loss.is_finite()));
    }

    #[test]
    fn fixed_seed_reproduces_the_trial_sequence() {
        let run = |seed| {
            search(
                &quadratic_space(),
                quadratic,
                25,
                Duration::from_secs(60),
                seed,
            )
            .unwrap()
            .1
            .iter()
            .map(|t| t.loss)
            .collect::<Vec<f64>>()
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    #[test]
    fn trial_records_round_trip_as_json_lines() {
        let (_, trials) = search(
            &quadratic_space(),
            quadratic,
            5,
            Duration::from_secs(60),
            1,
        )
        .unwrap();
        let lines: Vec<String> = trials
            .iter()
            .map(|t| serde_json::to_string(t).unwrap())
            .collect();
        for (line, original) in lines.iter().zip(&trials) {
            let back: TrialRecord = serde_json::from_str(line).unwrap();
            assert_eq!(back.config, original.config);
            assert_eq!(back.loss, original.loss);
        }
    }
}
