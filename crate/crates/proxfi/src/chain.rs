//! Monte Carlo driver for the proximal sampler (exact-rejection and smoothed
//! RGO variants), the ULA baseline, and the restart wrapper for strongly
//! log-concave targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridDensity;
use crate::grid_oracle::{run_ideal_chain, ChannelTrace};
use crate::inner::ula_chain;
use crate::rgo::{rgo_exact, rgo_smoothed, QueryLedger, SmoothedRgoConfig};
use crate::targets::Potential;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RgoMode {
    ExactRejection,
    Smoothed,
    /// Law-level evolution; handled by the grid oracle, not this driver.
    GridReference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    /// Uniform random iterate: one draw from the averaged measure.
    RandomIterate,
    /// Grid mode only.
    AveragedDensity,
    Final,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Outer step size; `None` picks the mode's default. The smoothed mode
    /// always runs at `1/(2L)`.
    pub h: Option<f64>,
    pub k_iters: usize,
    pub rgo_mode: RgoMode,
    pub smoothed: Option<SmoothedRgoConfig>,
    pub output: OutputMode,
}

impl SamplerConfig {
    /// Effective step size: `1/(2L)` for the smoothed mode, otherwise the
    /// override or the rejection default `1/(2Ld)`.
    pub fn step_size(&self, potential: &Potential) -> Result<f64> {
        let l = potential.smoothness;
        let h = match self.rgo_mode {
            RgoMode::Smoothed => {
                let fixed = 1.0 / (2.0 * l);
                if let Some(h) = self.h {
                    if (h - fixed).abs() > 1e-12 * fixed {
                        return Err(Error::Config(format!(
                            "smoothed mode fixes h = 1/(2L) = {fixed}, got {h}"
                        )));
                    }
                }
                fixed
            }
            _ => self.h.unwrap_or(1.0 / (2.0 * l * potential.dim as f64)),
        };
        if !(h > 0.0) || h * l >= 1.0 {
            return Err(Error::Precondition(format!(
                "chain needs 0 < h < 1/L; got h = {h}, L = {l}"
            )));
        }
        Ok(h)
    }

    pub fn validate(&self, potential: &Potential) -> Result<()> {
        self.step_size(potential)?;
        if self.k_iters == 0 {
            return Err(Error::Config("chain needs K >= 1".into()));
        }
        if self.rgo_mode == RgoMode::Smoothed {
            match &self.smoothed {
                Some(c) => c.validate()?,
                None => {
                    return Err(Error::Config(
                        "smoothed mode needs a smoothed RGO config".into(),
                    ))
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ChainState {
    pub x: Vec<f64>,
    pub k: usize,
    pub counters: QueryLedger,
}

#[derive(Clone, Debug)]
pub struct ChainRun {
    /// X_1 .. X_K.
    pub iterates: Vec<Vec<f64>>,
    pub output: Vec<f64>,
    pub ledger: QueryLedger,
}

/// One Monte Carlo proximal-sampler chain: forward draw `Y ~ N(X, hI)`, then
/// the configured RGO backward draw, K times.
pub fn run_proximal_chain(
    potential: &Potential,
    config: &SamplerConfig,
    x0: Vec<f64>,
    rng: &mut impl Rng,
) -> Result<ChainRun> {
    config.validate(potential)?;
    if x0.len() != potential.dim {
        return Err(Error::DimensionMismatch {
            expected: potential.dim,
            got: x0.len(),
        });
    }
    if config.output == OutputMode::AveragedDensity {
        return Err(Error::Config(
            "averaged-density output needs the grid oracle; use a grid run".into(),
        ));
    }
    let h = config.step_size(potential)?;
    let mut state = ChainState {
        x: x0,
        k: 0,
        counters: QueryLedger::default(),
    };
    let mut iterates = Vec::with_capacity(config.k_iters);
    for _ in 0..config.k_iters {
        let y: Vec<f64> = state
            .x
            .iter()
            .map(|&xi| xi + h.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let x_new = match config.rgo_mode {
            RgoMode::ExactRejection => {
                let (x, stats) = rgo_exact(potential, h, &y, rng)?;
                state.counters += stats.ledger();
                x
            }
            RgoMode::Smoothed => {
                let (x, ledger) =
                    rgo_smoothed(potential, potential.smoothness, &y, config.smoothed.as_ref().unwrap(), rng)?;
                state.counters += ledger;
                x
            }
            RgoMode::GridReference => {
                return Err(Error::Config(
                    "grid_reference mode runs through the grid oracle".into(),
                ))
            }
        };
        state.x = x_new;
        state.k += 1;
        iterates.push(state.x.clone());
    }
    let output = match config.output {
        OutputMode::Final => iterates.last().unwrap().clone(),
        OutputMode::RandomIterate => {
            let j = rng.gen_range(0..config.k_iters);
            iterates[j].clone()
        }
        OutputMode::AveragedDensity => unreachable!(),
    };
    Ok(ChainRun {
        iterates,
        output,
        ledger: state.counters,
    })
}

/// Fans `n_chains` independent chains out across workers; chain `i` uses RNG
/// stream `i` of the base seed, so results are reproducible bitwise
/// regardless of thread count.
pub fn run_many_chains(
    potential: &Potential,
    config: &SamplerConfig,
    init_sampler: impl Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync,
    base_seed: u64,
    n_chains: usize,
) -> Result<Vec<ChainRun>> {
    (0..n_chains)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
            rng.set_stream(i as u64);
            let x0 = init_sampler(&mut rng);
            run_proximal_chain(potential, config, x0, &mut rng)
        })
        .collect()
}

/// ULA baseline chain; returns a uniformly random iterate (a draw from the
/// averaged measure) plus the full trajectory and ledger.
pub fn run_ula_baseline(
    potential: &Potential,
    step: f64,
    k_steps: usize,
    x0: Vec<f64>,
    rng: &mut impl Rng,
) -> Result<ChainRun> {
    let (traj, grads) = ula_chain(potential, step, k_steps, x0, rng)?;
    let j = rng.gen_range(1..=k_steps);
    let output = traj[j].clone();
    Ok(ChainRun {
        iterates: traj[1..].to_vec(),
        output,
        ledger: QueryLedger {
            grad_evals: grads,
            ..Default::default()
        },
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RestartConfig {
    /// Strong log-concavity constant of the target.
    pub alpha: f64,
    /// Bound (or measurement) of the initial KL divergence.
    pub kl0: f64,
    pub epsilon_final: f64,
    /// Initial density override; defaults to `N(mode, 1/L)`.
    pub init: Option<crate::targets::IsotropicGaussian>,
}

impl RestartConfig {
    /// Round accuracies `eps_k^2 = alpha * kl0 / 2^k`.
    pub fn schedule(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let stop = 2.0 * self.alpha * self.epsilon_final * self.epsilon_final;
        let mut k = 0u32;
        loop {
            let eps_sq = self.alpha * self.kl0 / 2f64.powi(k as i32);
            out.push(eps_sq);
            if eps_sq <= stop || k > 200 {
                break;
            }
            k += 1;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::Precondition(format!(
                "restart needs a strongly log-concave target, alpha = {}",
                self.alpha
            )));
        }
        if !(self.kl0 > 0.0) || !(self.epsilon_final > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "restart needs positive kl0 and epsilon_final, got {} and {}",
                self.kl0, self.epsilon_final
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RestartRound {
    pub round: usize,
    pub eps_sq: f64,
    pub k_iters: usize,
    /// KL to the target measured after the round (of the averaged density).
    pub kl_after: f64,
    pub fi_after: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RestartReport {
    pub kl_start: f64,
    pub rounds: Vec<RestartRound>,
    #[serde(skip)]
    pub final_density: GridDensity,
}

/// Grid-reference restart: each round runs the ideal chain until the
/// averaged density's Fisher information is within the round budget, then
/// restarts from that averaged density. Under the target's log-Sobolev
/// inequality the measured KL halves per round.
pub fn run_restart_grid(
    potential: &Potential,
    rho0: &GridDensity,
    restart: &RestartConfig,
    h: f64,
) -> Result<RestartReport> {
    restart.validate()?;
    let l = potential.smoothness;
    if !(h > 0.0) || h * l >= 1.0 {
        return Err(Error::Precondition(format!(
            "restart chain needs 0 < h < 1/L; got h = {h}, L = {l}"
        )));
    }
    let pi = GridDensity::from_potential(rho0.axes.clone(), potential)?;
    let mut rho = rho0.clone();
    rho.normalize();
    let kl_start = crate::divergences::kl_grid(&rho, &pi)?;

    let mut rounds = Vec::new();
    for (round, eps_sq) in restart.schedule().into_iter().enumerate() {
        let kl_now = crate::divergences::kl_grid(&rho, &pi)?;
        // iteration budget from the total-FI guarantee at accuracy eps_sq
        let k_iters = ((kl_now / (h * (1.0 - l * h / 2.0) * eps_sq)).ceil() as usize).max(1);
        let trace: ChannelTrace = run_ideal_chain(&rho, potential, h, k_iters)?;
        rho = trace.averaged_density;
        rounds.push(RestartRound {
            round,
            eps_sq,
            k_iters,
            kl_after: trace.averaged.kl,
            fi_after: trace.averaged.fi,
        });
    }
    Ok(RestartReport {
        kl_start,
        rounds,
        final_density: rho,
    })
}

/// Monte Carlo restart: rounds of the proximal chain with geometrically
/// tightening accuracy, each round consuming the previous round's
/// averaged-measure draw as its start.
pub fn run_restart_mc(
    potential: &Potential,
    config: &SamplerConfig,
    restart: &RestartConfig,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, QueryLedger)> {
    restart.validate()?;
    let l = potential.smoothness;
    let h = config.step_size(potential)?;
    let mode = potential
        .mode_hint
        .clone()
        .ok_or_else(|| Error::Precondition("restart needs a mode hint".into()))?;
    let (init_mean, init_var) = match &restart.init {
        Some(g) => (g.mean.clone(), g.variance),
        None => (mode, 1.0 / l),
    };
    let mut x: Vec<f64> = init_mean
        .iter()
        .map(|&m| m + init_var.sqrt() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut ledger = QueryLedger::default();
    for (round, eps_sq) in restart.schedule().into_iter().enumerate() {
        let kl_bound = restart.kl0 / 2f64.powi(round as i32);
        let k_iters = ((kl_bound / (h * (1.0 - l * h / 2.0) * eps_sq)).ceil() as usize).max(1);
        let round_cfg = SamplerConfig {
            k_iters,
            output: OutputMode::RandomIterate,
            ..config.clone()
        };
        let run = run_proximal_chain(potential, &round_cfg, x, rng)?;
        ledger += run.ledger;
        x = run.output;
    }
    Ok((x, ledger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridAxis;
    use crate::targets::{catalog_entry, make_gaussian, IsotropicGaussian};
    use approx::assert_abs_diff_eq;

    fn exact_config(h: f64, k: usize) -> SamplerConfig {
        SamplerConfig {
            h: Some(h),
            k_iters: k,
            rgo_mode: RgoMode::ExactRejection,
            smoothed: None,
            output: OutputMode::Final,
        }
    }

    #[test]
    fn gaussian_iterate_means_follow_contraction() {
        let p = make_gaussian(vec![0.0], 1.0).unwrap();
        let cfg = exact_config(0.5, 5);
        let n_chains = 20_000;
        let runs = run_many_chains(
            &p,
            &cfg,
            |rng| vec![2.0 + rng.sample::<f64, _>(StandardNormal)],
            101,
            n_chains,
        )
        .unwrap();
        for k in 1..=5usize {
            let mean: f64 = runs.iter().map(|r| r.iterates[k - 1][0]).sum::<f64>()
                / n_chains as f64;
            let expect = 2.0 / 1.5f64.powi(k as i32);
            // iterate variance stays near 1, so SE ~ 1/sqrt(n)
            let se = 1.0 / (n_chains as f64).sqrt();
            assert!(
                (mean - expect).abs() <= 3.0 * se,
                "k = {k}: mean {mean}, expect {expect}"
            );
        }
    }

    #[test]
    fn stationary_start_stays_stationary() {
        let p = make_gaussian(vec![0.0], 1.0).unwrap();
        let cfg = exact_config(0.5, 10);
        let n_chains = 20_000;
        let runs = run_many_chains(
            &p,
            &cfg,
            |rng| vec![rng.sample::<f64, _>(StandardNormal)],
            7,
            n_chains,
        )
        .unwrap();
        let finals: Vec<f64> = runs.iter().map(|r| r.output[0]).collect();
        let mean = finals.iter().sum::<f64>() / n_chains as f64;
        let var = finals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / n_chains as f64;
        assert!(mean.abs() <= 3.0 / (n_chains as f64).sqrt());
        let se_var = (2.0 / n_chains as f64).sqrt();
        assert!((var - 1.0).abs() <= 3.0 * se_var, "var = {var}");
    }

    #[test]
    fn single_step_matches_grid_density() {
        let p = make_gaussian(vec![0.0], 1.0).unwrap();
        let cfg = exact_config(0.5, 1);
        let n_chains = 100_000;
        let runs = run_many_chains(
            &p,
            &cfg,
            |rng| vec![2.0 + rng.sample::<f64, _>(StandardNormal)],
            23,
            n_chains,
        )
        .unwrap();
        let xs: Vec<f64> = runs.iter().map(|r| r.output[0]).collect();
        let axes = vec![GridAxis::new(-10.0, 12.0, 4097).unwrap()];
        let rho0 = GridDensity::gaussian(axes, &[2.0], 1.0).unwrap();
        let trace = run_ideal_chain(&rho0, &p, 0.5, 1).unwrap();
        let ks = trace.final_density.ks_distance(&xs).unwrap();
        assert!(ks < 0.01, "ks = {ks}");
    }

    #[test]
    fn ledger_counts_exact_mode_queries() {
        let p = make_gaussian(vec![0.0], 1.0).unwrap();
        let cfg = exact_config(0.5, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let run = run_proximal_chain(&p, &cfg, vec![1.0], &mut rng).unwrap();
        assert_eq!(run.ledger.prox_calls, 7);
        assert_eq!(run.ledger.grad_evals, 7);
        // one f(x*) per iteration plus one per rejection trial
        assert!(run.ledger.f_evals >= 14);
        assert_eq!(run.iterates.len(), 7);
    }

    #[test]
    fn seeded_determinism() {
        let p = catalog_entry("mixture2(-2,2,1)").unwrap().potential;
        let cfg = SamplerConfig {
            h: None,
            k_iters: 4,
            rgo_mode: RgoMode::ExactRejection,
            smoothed: None,
            output: OutputMode::RandomIterate,
        };
        let a = run_many_chains(&p, &cfg, |_| vec![0.5], 99, 50).unwrap();
        let b = run_many_chains(&p, &cfg, |_| vec![0.5], 99, 50).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.output, rb.output);
            assert_eq!(ra.ledger, rb.ledger);
        }
    }

    #[test]
    fn smoothed_mode_forces_step_size() {
        let p = make_gaussian(vec![0.0], 1.0).unwrap();
        let smoothed = SmoothedRgoConfig {
            delta: 1e-4,
            smoothing_variance: Some(0.0),
            inner: crate::inner::InnerSamplerConfig {
                method: crate::inner::InnerMethod::ExactGaussian,
                step_size: 1.0,
                n_steps: 1,
                burn_in: 0,
            },
        };
        let bad = SamplerConfig {
            h: Some(0.25),
            k_iters: 2,
            rgo_mode: RgoMode::Smoothed,
            smoothed: Some(smoothed.clone()),
            output: OutputMode::Final,
        };
        assert!(bad.validate(&p).is_err());
        let good = SamplerConfig {
            h: None,
            ..bad
        };
        assert_eq!(good.step_size(&p).unwrap(), 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let run = run_proximal_chain(&p, &good, vec![2.0], &mut rng).unwrap();
        assert_eq!(run.ledger.prox_calls, 2);
        assert_eq!(run.ledger.inner_steps, 2);
    }

    #[test]
    fn restart_schedule_worked_values() {
        let cfg = RestartConfig {
            alpha: 1.0,
            kl0: 2.0,
            epsilon_final: 0.25,
            init: None,
        };
        let sched = cfg.schedule();
        assert_abs_diff_eq!(sched[0], 2.0, epsilon = 0.0);
        assert_abs_diff_eq!(sched[1], 1.0, epsilon = 0.0);
        assert_abs_diff_eq!(sched[2], 0.5, epsilon = 0.0);
        // stops once eps_k^2 <= 2 alpha eps_final^2 = 0.125
        assert_abs_diff_eq!(*sched.last().unwrap(), 0.125, epsilon = 0.0);
        assert_eq!(sched.len(), 5);
    }

    #[test]
    fn restart_grid_halves_kl_each_round() {
        let p = make_gaussian(vec![0.0], 1.0).unwrap();
        let axes = vec![GridAxis::new(-10.0, 12.0, 2049).unwrap()];
        // non-stationary start with exactly known KL = mu^2/2 = 2
        let rho0 = GridDensity::gaussian(axes, &[2.0], 1.0).unwrap();
        let cfg = RestartConfig {
            alpha: 1.0,
            kl0: 2.0,
            epsilon_final: 0.35,
            init: None,
        };
        let report = run_restart_grid(&p, &rho0, &cfg, 0.5).unwrap();
        assert_abs_diff_eq!(report.kl_start, 2.0, epsilon = 1e-7);
        let mut bound = cfg.kl0;
        for round in &report.rounds {
            bound /= 2.0;
            assert!(
                round.kl_after <= bound + 1e-6,
                "round {}: kl {} > bound {}",
                round.round,
                round.kl_after,
                bound
            );
            assert!(round.fi_after <= round.eps_sq + 1e-6);
        }
    }

    #[test]
    fn restart_initialization_bound_gaussian() {
        // KL(N(0, 1/L) || N(0, 1/alpha)) <= (d/2) log kappa in closed form
        for (l, alpha) in [(4.0, 1.0), (2.0, 0.5), (10.0, 10.0)] {
            let kappa: f64 = l / alpha;
            let kl = crate::divergences::gaussian_closed_form(
                &IsotropicGaussian::new(vec![0.0], 1.0 / l),
                &IsotropicGaussian::new(vec![0.0], 1.0 / alpha),
                crate::divergences::DivergenceKind::Kl,
            )
            .unwrap();
            assert!(kl <= 0.5 * kappa.ln() + 1e-12, "kl {kl} kappa {kappa}");
        }
    }

    #[test]
    fn restart_mc_runs_and_counts() {
        let p = make_gaussian(vec![0.0], 1.0).unwrap();
        let cfg = exact_config(0.5, 1);
        let restart = RestartConfig {
            alpha: 1.0,
            kl0: 2.0,
            epsilon_final: 0.5,
            init: Some(IsotropicGaussian::new(vec![2.0], 1.0)),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let (x, ledger) = run_restart_mc(&p, &cfg, &restart, &mut rng).unwrap();
        assert_eq!(x.len(), 1);
        assert!(ledger.prox_calls > 0);
        // alpha = 0 is rejected
        let bad = RestartConfig {
            alpha: 0.0,
            ..restart
        };
        assert!(run_restart_mc(&p, &cfg, &bad, &mut rng).is_err());
    }

    #[test]
    fn ula_baseline_ledger_is_one_grad_per_step() {
        let p = make_gaussian(vec![0.0], 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let run = run_ula_baseline(&p, 0.1, 50, vec![0.0], &mut rng).unwrap();
        assert_eq!(run.ledger.grad_evals, 50);
        assert_eq!(run.iterates.len(), 50);
    }
}
