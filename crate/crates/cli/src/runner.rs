//! CLI-facing orchestration: experiment dispatch, bank-file I/O and the
//! self-test report.

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::csvout::{format_float, CsvTable};
use crate::manifest::RunManifest;
use crate::pipelines::{self, ConstantsFile};
use contiflow_core::error::{Error, Result};
use contiflow_core::estimation;
use contiflow_core::gibbs::GibbsParams;
use contiflow_core::glauber::{self, BirthDeathMode, GlauberParams};
use contiflow_core::harmonic::{self, CorrelationSpec, FiniteConfig};
use contiflow_core::kawasaki::KawasakiState;
use contiflow_core::potential::{HopParams, HopRateMode, JumpKernel, PairPotential, relative_energy};
use contiflow_core::testfn::TestFn;
use contiflow_core::torus::Configuration;
use std::fs;
use std::path::Path;

/// Serialize a configuration bank: one line per configuration, flattened
/// coordinates with 17 significant digits, `\n` endings. Reruns with the
/// same (config, seed) are byte-identical.
pub fn render_bank(snaps: &[Configuration]) -> String {
    let mut out = String::new();
    if let Some(first) = snaps.first() {
        out.push_str(&format!(
            "# contiflow configuration bank v1\n# dim={} side={} count={}\n",
            first.torus().dim(),
            format_float(first.torus().side()),
            snaps.len()
        ));
    } else {
        out.push_str("# contiflow configuration bank v1\n# empty\n");
    }
    for cfg in snaps {
        let mut first_coord = true;
        for (_, p) in cfg.iter() {
            for c in p.as_slice() {
                if !first_coord {
                    out.push(' ');
                }
                out.push_str(&format_float(*c));
                first_coord = false;
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Parameter(format!("cannot create {dir:?}: {e}")))?;
    fs::write(dir.join(name), contents)
        .map_err(|e| Error::Parameter(format!("cannot write {name}: {e}")))
}

fn window_fn(window: (f64, f64), height: f64) -> TestFn {
    TestFn::box_indicator(&[window.0], &[window.1], height)
}

/// Dispatch one experiment; returns (csv tables, manifest) without touching
/// the filesystem (the caller writes).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<(String, String)>> {
    let torus = cfg.torus();
    let hash = cfg.params_hash();
    let mut csv = CsvTable::new();
    let table_name = match cfg.experiment {
        ExperimentKind::FreeTwoTime => {
            let f = window_fn(cfg.f_window, 1.0);
            let g = window_fn(cfg.g_window, 1.0);
            let t = cfg.t_final;
            let lim_pairs = pipelines::free_limit_two_time(
                torus, cfg.rho, t, &f, &g, cfg.ensemble, cfg.seed, 1,
            )?;
            let lim = pipelines::cov_estimate(&lim_pairs)?;
            let wrap = pipelines::relocation_wrap_term(torus, cfg.rho, t, &f, &g);
            csv.push("limit_process_cov", hash, lim.value, lim.se, lim.n);
            csv.push("wrap_term", hash, wrap, 0.0, 1);
            for (k, &eps) in cfg.eps.iter().enumerate() {
                let samples = pipelines::free_hop_two_time(
                    torus,
                    cfg.rho,
                    &cfg.kernel,
                    eps,
                    t,
                    &f,
                    &g,
                    cfg.ensemble,
                    cfg.seed,
                    2 + k as u64,
                )?;
                let pairs: Vec<(f64, f64)> =
                    samples.iter().map(|s| (s.f_at_0, s.g_at_t)).collect();
                let cov = pipelines::cov_estimate(&pairs)?;
                csv.push(format!("two_time_cov_eps{eps}"), hash, cov.value, cov.se, cov.n);
                if let JumpKernel::Gaussian { sigma } = cfg.kernel {
                    let oracle = pipelines::free_cov_quadrature_oracle(
                        torus, cfg.rho, sigma, eps, t, &f, &g,
                    )?;
                    csv.push(format!("two_time_cov_oracle_eps{eps}"), hash, oracle, 0.0, 1);
                }
                let counts: Vec<u64> = samples.iter().map(|s| s.count_f_window_at_t).collect();
                let (_, p) = pipelines::window_counts_poisson_ok(
                    &counts,
                    cfg.rho * f.integral(),
                )?;
                csv.push(format!("window_chi2_p_eps{eps}"), hash, p, 0.0, cfg.ensemble);
            }
            "free_two_time.csv"
        }
        ExperimentKind::Theorem1Poisson => {
            let rows = pipelines::dual_ratio_sweep(
                cfg.activity,
                &cfg.potential,
                &cfg.kernel,
                &cfg.eps,
                cfg.mc_draws,
                cfg.seed,
                1,
            )?;
            for r in &rows {
                let part = if r.loss_part { "loss" } else { "gain" };
                csv.push(format!("dual_ratio_{part}_eps{}", r.eps), hash, r.ratio, r.ratio_se, cfg.mc_draws);
                csv.push(format!("dual_gap_{part}_eps{}", r.eps), hash, r.gap, r.ratio_se, cfg.mc_draws);
                csv.push(format!("dual_target_{part}"), hash, r.target, 0.0, 1);
            }
            "dual_ratio_sweep.csv"
        }
        ExperimentKind::Theorem3Generator => {
            let params = GibbsParams::with_defaults(cfg.potential.clone(), cfg.activity, torus);
            let bank = pipelines::gibbs_bank(&params, cfg.ensemble, 64, cfg.seed, 1)?;
            let f = window_fn(cfg.f_window, cfg.f_height.min(-f64::EPSILON));
            let sweep = pipelines::generator_l2_sweep(
                &bank,
                &cfg.potential,
                cfg.activity,
                cfg.u,
                cfg.v,
                &cfg.kernel,
                &cfg.eps,
                &f,
                cfg.mc_draws,
                cfg.seed,
                2,
            )?;
            csv.push("generator_l0_sq", hash, sweep.l0_sq.value, sweep.l0_sq.se, sweep.l0_sq.n);
            csv.push("generator_c0", hash, sweep.c0.value, sweep.c0.se, sweep.c0.n);
            for row in &sweep.rows {
                csv.push(
                    format!("generator_l2_diff_eps{}", row.eps),
                    hash,
                    row.mean_sq_diff.value,
                    row.mean_sq_diff.se,
                    row.mean_sq_diff.n,
                );
            }
            "generator_l2_sweep.csv"
        }
        ExperimentKind::GibbsValidate => {
            let params = GibbsParams::with_defaults(cfg.potential.clone(), cfg.activity, torus);
            let bank = pipelines::gibbs_bank(&params, cfg.ensemble, 64, cfg.seed, 1)?;
            let d = estimation::density(&bank)?;
            csv.push("gibbs_density", hash, d.value, d.se, d.n);
            let window = window_fn(cfg.f_window, 1.0);
            let mut rng = pipelines::stream_for(cfg.seed, 2, 0);
            let phi = cfg.potential.clone();
            let h1 = |x: &[f64], _: &Configuration, _: Option<usize>| window.eval(x);
            let window_e = window.clone();
            let phi_e = phi.clone();
            let h2 = move |x: &[f64], rest: &Configuration, excl: Option<usize>| {
                let w = window_e.eval(x);
                if w == 0.0 {
                    0.0
                } else {
                    let p = rest.torus().wrap(x);
                    w * relative_energy(&phi_e, &p, rest, excl).exp()
                }
            };
            let lo = [cfg.f_window.0];
            let hi = [cfg.f_window.1];
            let r1 = contiflow_core::gibbs::gnz_residual(
                &bank, &phi, cfg.activity, h1, (&lo, &hi), 8, &mut rng,
            )?;
            let r2 = contiflow_core::gibbs::gnz_residual(
                &bank, &phi, cfg.activity, h2, (&lo, &hi), 8, &mut rng,
            )?;
            csv.push("gnz_z_indicator", hash, r1.z_score, 1.0, bank.len());
            csv.push("gnz_z_energy_weighted", hash, r2.z_score, 1.0, bank.len());
            "gibbs_validate.csv"
        }
        ExperimentKind::GlauberStationarity => {
            let params = GibbsParams::with_defaults(cfg.potential.clone(), cfg.activity, torus);
            let bank = pipelines::gibbs_bank(&params, cfg.ensemble.min(2000), 64, cfg.seed, 1)?;
            let constants =
                pipelines::estimate_constants(&bank, &cfg.potential, cfg.activity, cfg.u, cfg.v)?;
            let initials = pipelines::gibbs_bank(&params, 400, 64, cfg.seed, 2)?;
            let rep = pipelines::bd_stationarity(
                &initials,
                &cfg.potential,
                cfg.activity,
                cfg.u,
                cfg.v,
                constants.c_u.value,
                constants.c_v.value,
                cfg.t_final.max(1.0),
                10,
                5,
                (0.5 * cfg.side * 0.2).min(2.0),
                cfg.seed,
                3,
            )?;
            csv.push("stationarity_density", hash, rep.density.value, rep.density.se, rep.density.n);
            csv.push("stationarity_density_z", hash, rep.density_z, 1.0, 400);
            csv.push("stationarity_flux_z", hash, rep.flux_z, 1.0, 400);
            for (b, z) in rep.u2_z.iter().enumerate() {
                csv.push(format!("stationarity_u2_z_bin{b}"), hash, *z, 1.0, 400);
            }
            "glauber_stationarity.csv"
        }
    };
    Ok(vec![(table_name.to_string(), csv.render())])
}

/// `estimate-constants`: Gibbs source when a potential is configured,
/// closed-form Poisson source otherwise. Exit code 3 when any SE exceeds
/// `tolerance` (relative).
pub fn run_estimate_constants(cfg: &ExperimentConfig, tolerance: f64) -> Result<ConstantsFile> {
    let torus = cfg.torus();
    let constants = if cfg.potential.is_zero() {
        // exact free-case constants
        let z = cfg.activity;
        let exact = |v: f64| pipelines::ConstantEstimate { value: v, se: 0.0, n: 1 };
        ConstantsFile {
            schema_version: crate::config::SCHEMA_VERSION,
            u: cfg.u,
            v: cfg.v,
            activity: z,
            c_u: exact(1.0),
            c_v: exact(1.0),
            c_minus: exact(1.0),
            c_plus: exact(z),
            k1: exact(z),
        }
    } else {
        let params = GibbsParams::with_defaults(cfg.potential.clone(), cfg.activity, torus);
        let bank = pipelines::gibbs_bank(&params, cfg.ensemble, 64, cfg.seed, 1)?;
        pipelines::estimate_constants(&bank, &cfg.potential, cfg.activity, cfg.u, cfg.v)?
    };
    for (name, c) in [
        ("c_u", &constants.c_u),
        ("c_v", &constants.c_v),
        ("k1", &constants.k1),
    ] {
        if c.value != 0.0 && c.se / c.value.abs() > tolerance {
            eprintln!("constant {name}: relative SE above tolerance");
            return Err(Error::ToleranceUnmet { se: c.se / c.value.abs(), tol: tolerance });
        }
    }
    Ok(constants)
}

/// `sample-gibbs`: draw a configuration bank.
pub fn run_sample_gibbs(cfg: &ExperimentConfig) -> Result<Vec<Configuration>> {
    let params = GibbsParams::with_defaults(cfg.potential.clone(), cfg.activity, cfg.torus());
    pipelines::gibbs_bank(&params, cfg.ensemble, 64, cfg.seed, 1)
}

/// `simulate-kawasaki`: one snapshot bank per ε plus a density summary.
pub fn run_simulate_kawasaki(
    cfg: &ExperimentConfig,
) -> Result<(Vec<(String, String)>, CsvTable)> {
    let torus = cfg.torus();
    let hash = cfg.params_hash();
    let mut banks = Vec::new();
    let mut csv = CsvTable::new();
    for (k, &eps) in cfg.eps.iter().enumerate() {
        let mode = if cfg.potential.is_zero() {
            HopRateMode::Plain {
                phi_minus: PairPotential::zero(),
                phi_plus: PairPotential::zero(),
            }
        } else {
            HopRateMode::Symmetric {
                u: cfg.u,
                v: cfg.v,
                phi: cfg.potential.clone(),
                activity: cfg.activity,
            }
        };
        let params = HopParams { mode, kernel: cfg.kernel.clone(), eps };
        let per_traj = pipelines::par_trajectories(cfg.ensemble, cfg.seed, 1 + k as u64, |_i, rng| {
            let gamma0 = Configuration::sample_poisson(torus, cfg.rho, cfg.potential.range(), rng)?;
            let mut state = KawasakiState::new(gamma0, params.clone())?;
            state.run(cfg.t_final, &cfg.snap_times, rng)
        })?;
        for (s, &st) in cfg.snap_times.iter().enumerate() {
            let snaps: Vec<Configuration> =
                per_traj.iter().map(|traj| traj[s].clone()).collect();
            let d = estimation::density(&snaps)?;
            csv.push(format!("density_eps{eps}_t{st}"), hash, d.value, d.se, d.n);
        }
        let last: Vec<Configuration> =
            per_traj.into_iter().map(|mut traj| traj.pop().expect("snapshots")).collect();
        banks.push((format!("kawasaki_eps{eps}.bank"), render_bank(&last)));
    }
    Ok((banks, csv))
}

/// `simulate-glauber`: free or interacting mode (interacting takes the
/// constants file produced by `estimate-constants`).
pub fn run_simulate_glauber(
    cfg: &ExperimentConfig,
    mode_name: &str,
    constants: Option<&ConstantsFile>,
) -> Result<(Vec<(String, String)>, CsvTable)> {
    let torus = cfg.torus();
    let hash = cfg.params_hash();
    let mode = match mode_name {
        "free" => BirthDeathMode::Free { intensity: cfg.rho },
        "interacting" => {
            let c = constants.ok_or_else(|| {
                Error::Parameter("interacting mode needs --constants FILE".into())
            })?;
            BirthDeathMode::Interacting {
                potential: cfg.potential.clone(),
                activity: cfg.activity,
                u: c.u,
                v: c.v,
                c_u: c.c_u.value,
                c_v: c.c_v.value,
            }
        }
        other => return Err(Error::Parameter(format!("unknown mode '{other}'"))),
    };
    let params = GlauberParams { mode, torus };
    let init_intensity = match &params.mode {
        BirthDeathMode::Free { intensity } => *intensity,
        BirthDeathMode::Interacting { .. } => cfg.rho,
    };
    let per_traj = pipelines::par_trajectories(cfg.ensemble, cfg.seed, 1, |_i, rng| {
        let gamma0 =
            Configuration::sample_poisson(torus, init_intensity, cfg.potential.range(), rng)?;
        let run = glauber::run_birth_death(gamma0, &params, cfg.t_final, &cfg.snap_times, rng)?;
        Ok(run.snapshots)
    })?;
    let mut csv = CsvTable::new();
    for (s, &st) in cfg.snap_times.iter().enumerate() {
        let snaps: Vec<Configuration> = per_traj.iter().map(|traj| traj[s].clone()).collect();
        let d = estimation::density(&snaps)?;
        csv.push(format!("density_t{st}"), hash, d.value, d.se, d.n);
    }
    let last: Vec<Configuration> =
        per_traj.into_iter().map(|mut t| t.pop().expect("snapshots")).collect();
    let banks = vec![(format!("glauber_{mode_name}.bank"), render_bank(&last))];
    Ok((banks, csv))
}

/// `check-conditions`: admissibility report for the configured setup.
pub fn run_check_conditions(cfg: &ExperimentConfig) -> Result<String> {
    let mut out = String::new();
    let mut rng = pipelines::stream_for(cfg.seed, 0, 0);
    let stab = cfg.potential.check_stability(
        cfg.potential.stability_b(),
        500,
        cfg.side,
        cfg.dim,
        &mut rng,
    );
    out.push_str(&format!(
        "stability (B = {}): {} (worst margin {:.4})\n",
        cfg.potential.stability_b(),
        if stab.holds { "pass" } else { "FAIL" },
        stab.worst_margin
    ));
    if !cfg.potential.is_zero() {
        let low = cfg.potential.check_low_activity(cfg.activity, cfg.dim)?;
        out.push_str(&format!(
            "low activity: {} ({:.6} vs threshold {:.6})\n",
            if low.holds { "pass" } else { "FAIL" },
            low.lhs,
            low.threshold
        ));
        let uv = cfg.potential.check_uv_integrability(cfg.u, cfg.v, cfg.dim)?;
        out.push_str(&format!(
            "(u,v) integrability at ({}, {}): {} (value {:.6})\n",
            cfg.u,
            cfg.v,
            if uv.holds { "pass" } else { "FAIL" },
            uv.value
        ));
    }
    out.push_str(&format!(
        "interaction range {} < L/2 = {}: pass\n",
        cfg.potential.range(),
        0.5 * cfg.side
    ));
    Ok(out)
}

/// `harmonic-selftest`: the exact-identity table, printed.
pub fn run_harmonic_selftest() -> Result<(String, bool)> {
    let mut lines = Vec::new();
    let mut all = true;
    let mut check = |name: &str, ok: bool, detail: String| {
        all &= ok;
        lines.push(format!("{:<44} {}  {}", name, if ok { "pass" } else { "FAIL" }, detail));
    };
    // partition counts
    let mut ok = true;
    for n in 0..=9usize {
        ok &= harmonic::Partitions::new(n)?.count() as u64 == harmonic::bell_number(n);
    }
    check("set partitions match Bell numbers (n <= 9)", ok, String::new());
    // K-transform exponential identity
    let mut rng = pipelines::stream_for(7, 0, 0);
    let mut worst: f64 = 0.0;
    for n in 0..=6usize {
        let gamma = FiniteConfig::new(
            (0..n).map(|i| vec![i as f64]).collect(),
            1,
        )?;
        let vals: Vec<f64> = (0..n).map(|_| rand::Rng::gen::<f64>(&mut rng) - 0.5).collect();
        let lhs = harmonic::k_transform(
            |eta| {
                harmonic::e_lambda(
                    |p| vals[p[0] as usize].exp() - 1.0,
                    eta,
                )
            },
            &gamma,
        )?;
        let rhs: f64 = vals.iter().sum::<f64>().exp();
        worst = worst.max((lhs - rhs).abs());
    }
    check("K e_λ(e^φ−1, ·) = e^{<φ,γ>} (|γ| <= 6)", worst < 1e-11, format!("worst {worst:.2e}"));
    // round trip
    let mut worst: f64 = 0.0;
    for n in 1..=6usize {
        let mut k = vec![0.0; 1 << n];
        k[0] = 1.0;
        for m in 1..(1 << n) {
            k[m] = 0.5 + rand::Rng::gen::<f64>(&mut rng);
        }
        let u = harmonic::correlation_to_ursell(&k)?;
        let back = harmonic::ursell_to_correlation(&u)?;
        for (a, b) in k.iter().zip(&back) {
            worst = worst.max((a - b).abs());
        }
    }
    check("correlation <-> connected roundtrip (n <= 6)", worst < 1e-10, format!("worst {worst:.2e}"));
    // product functional: connected parts vanish
    let z: f64 = 0.6;
    let mut worst: f64 = 0.0;
    for n in 2..=6usize {
        let mut k = vec![0.0; 1 << n];
        for m in 0..(1usize << n) {
            k[m] = z.powi(m.count_ones() as i32);
        }
        let u = harmonic::correlation_to_ursell(&k)?;
        for m in 1..(1usize << n) {
            if m.count_ones() >= 2 {
                worst = worst.max(u[m].abs());
            }
        }
    }
    check("product functional has zero connected parts", worst < 1e-10, format!("worst {worst:.2e}"));
    // closed-form scaling constants
    let phi = PairPotential::square_well(1.0, 0.5)?;
    let spec = CorrelationSpec::Poisson { z: 0.2 };
    let c_m = harmonic::c_minus(&spec, &phi, 1, 1e-11)?;
    let expect = (0.2 * ((-1.0f64).exp() - 1.0)).exp();
    check(
        "c⁻ closed form (square well, z = 0.2)",
        (c_m - expect).abs() < 1e-9,
        format!("{c_m:.9} vs {expect:.9}"),
    );
    let mut table = String::from("harmonic self-test\n");
    for l in lines {
        table.push_str(&l);
        table.push('\n');
    }
    Ok((table, all))
}

/// Write experiment outputs plus the manifest.
pub fn write_all(
    dir: &Path,
    experiment: &str,
    config_hash: u64,
    seed: u64,
    outputs: &[(String, String)],
) -> Result<()> {
    let mut manifest = RunManifest::begin(experiment, config_hash, seed);
    for (name, contents) in outputs {
        write_output(dir, name, contents)?;
        manifest.record_output(name, contents);
    }
    let manifest = manifest.finish();
    write_output(dir, "manifest.json", &manifest.to_json())
}
