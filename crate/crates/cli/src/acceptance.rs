//! The acceptance suite: nine gate criteria, each printing one pass/fail
//! line, every tolerance pinned in code. The suite is deterministic for a
//! fixed seed; the final criterion re-runs every CSV-emitting pipeline and
//! byte-compares the outputs.
//!
//! Test design notes (all thresholds fixed here, none tuned at run time):
//!
//! * Statistical gates are two-sided 3-SE tests with standard errors from
//!   independent trajectories; ensemble sizes are chosen so detectable
//!   effects sit well above the noise floor.
//! * Monotone-trend gates allow Monte Carlo ties at 2 joint SE.
//! * The scaling-limit gates compare against the finite-box limit: the
//!   infinite-volume limit value plus the exactly computable wrap term
//!   (mass that leaves through the periodic boundary mixes into the spatial
//!   average). Both box sides are tested for finite-volume control.

use crate::csvout::CsvTable;
use crate::pipelines::{self, stream_for};
use contiflow_core::error::{Error, Result};
use contiflow_core::estimation::{self, EstimateWithError};
use contiflow_core::gibbs::{self, GibbsParams};
use contiflow_core::glauber::{self, BirthDeathMode, GlauberParams};
use contiflow_core::harmonic::{self, FiniteConfig};
use contiflow_core::potential::{relative_energy, JumpKernel, PairPotential};
use contiflow_core::testfn::TestFn;
use contiflow_core::torus::{Configuration, Torus};
use rand::Rng;

/// Outcome of one criterion.
#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {}: {:<28} {}  ({})",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

#[derive(Debug)]
pub struct SuiteOutput {
    pub results: Vec<CriterionResult>,
    pub csvs: Vec<(String, String)>,
    pub constants_json: String,
}

impl SuiteOutput {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

// pinned experiment constants (the test potential and box of the gates)
const TEST_Z: f64 = 0.2;
const TEST_DEPTH: f64 = 1.0;
const TEST_RANGE: f64 = 0.5;
const GATE_SE: f64 = 3.0;
const TIE_SE: f64 = 2.0;
const CHI2_LEVEL: f64 = 0.01;
/// criterion 7 threshold: final E|L_ε F − L_0 F|² < (0.1)² · E|L_0 F|²
const GENERATOR_L2_REL: f64 = 0.01;

fn test_potential() -> PairPotential {
    PairPotential::square_well(TEST_DEPTH, TEST_RANGE).expect("valid test potential")
}

fn box20() -> Torus {
    Torus::new(1, 20.0).expect("valid torus")
}

struct Ctx {
    seed: u64,
    csvs: Vec<(String, String)>,
    constants_json: String,
}

impl Ctx {
    fn emit(&mut self, name: &str, table: &CsvTable) {
        self.csvs.push((name.to_string(), table.render()));
    }
}

// ---------------------------------------------------------------------------
// criterion 1: exact identities
// ---------------------------------------------------------------------------

fn criterion_1(ctx: &mut Ctx) -> Result<CriterionResult> {
    const TOL: f64 = 1e-10;
    let mut rng = stream_for(ctx.seed, 16, 0);
    let mut worst_k = 0.0f64;
    // K-transform exponential identity on random tables, |γ| ≤ 6
    for rep in 0..25 {
        let n = rep % 7;
        let gamma = FiniteConfig::new(
            (0..n).map(|i| vec![i as f64 + rng.gen::<f64>()]).collect(),
            1,
        )?;
        let vals: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let val_of = |p: &[f64]| {
            gamma
                .points()
                .iter()
                .position(|q| q.as_slice() == p)
                .map(|i| vals[i])
                .expect("point belongs to gamma")
        };
        let lhs = harmonic::k_transform(
            |eta| harmonic::e_lambda(|p| val_of(p).exp() - 1.0, eta),
            &gamma,
        )?;
        let rhs: f64 = vals.iter().sum::<f64>().exp();
        worst_k = worst_k.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    // correlation ↔ connected-function round trip, n ≤ 6
    let mut worst_rt = 0.0f64;
    for n in 1..=6usize {
        let mut k = vec![0.0; 1 << n];
        k[0] = 1.0;
        for m in 1..(1usize << n) {
            k[m] = 0.5 + rng.gen::<f64>();
        }
        let u = harmonic::correlation_to_ursell(&k)?;
        let back = harmonic::ursell_to_correlation(&u)?;
        for (a, b) in k.iter().zip(&back) {
            worst_rt = worst_rt.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    // product correlation functional has no connected part above order 1
    let mut worst_poisson = 0.0f64;
    let z: f64 = 0.7;
    for n in 2..=6usize {
        let mut k = vec![0.0; 1 << n];
        for m in 0..(1usize << n) {
            k[m] = z.powi(m.count_ones() as i32);
        }
        let u = harmonic::correlation_to_ursell(&k)?;
        for m in 1..(1usize << n) {
            if m.count_ones() >= 2 {
                worst_poisson = worst_poisson.max(u[m].abs());
            }
        }
    }
    let mut csv = CsvTable::new();
    csv.push("exact_ktransform_worst_rel_err", ctx.seed, worst_k, 0.0, 25);
    csv.push("exact_roundtrip_worst_rel_err", ctx.seed, worst_rt, 0.0, 6);
    csv.push("exact_poisson_connected_worst_abs", ctx.seed, worst_poisson, 0.0, 5);
    ctx.emit("acceptance_c1_exact.csv", &csv);
    let passed = worst_k <= TOL && worst_rt <= TOL && worst_poisson <= TOL;
    Ok(CriterionResult {
        id: 1,
        name: "exact identity suite",
        passed,
        detail: format!(
            "K-id {worst_k:.2e}, roundtrip {worst_rt:.2e}, connected {worst_poisson:.2e} (tol 1e-10)"
        ),
    })
}

// ---------------------------------------------------------------------------
// criteria 2 and 3: GNZ certification and the C_u identity
// ---------------------------------------------------------------------------

fn shared_gibbs_bank(ctx: &Ctx) -> Result<Vec<Configuration>> {
    let params = GibbsParams::with_defaults(test_potential(), TEST_Z, box20());
    pipelines::gibbs_bank(&params, 10_000, 64, ctx.seed, 32)
}

fn criterion_2(ctx: &mut Ctx, bank: &[Configuration]) -> Result<CriterionResult> {
    let phi = test_potential();
    // low-activity margin of the pinned setup
    let low = phi.check_low_activity(TEST_Z, 1)?;
    let window = TestFn::box_indicator(&[0.0], &[2.0], 1.0);
    let hat = TestFn::hat(&[1.0], 1.0, 1.0);
    let mut rng = stream_for(ctx.seed, 33, 0);
    let h1 = |x: &[f64], _: &Configuration, _: Option<usize>| window.eval(x);
    let phi2 = phi.clone();
    let window2 = window.clone();
    let h2 = move |x: &[f64], rest: &Configuration, excl: Option<usize>| {
        let w = window2.eval(x);
        if w == 0.0 {
            0.0
        } else {
            let p = rest.torus().wrap(x);
            w * relative_energy(&phi2, &p, rest, excl).exp()
        }
    };
    let h3 = |x: &[f64], _: &Configuration, _: Option<usize>| hat.eval(x);
    let r1 = gibbs::gnz_residual(bank, &phi, TEST_Z, h1, (&[0.0], &[2.0]), 8, &mut rng)?;
    let r2 = gibbs::gnz_residual(bank, &phi, TEST_Z, h2, (&[0.0], &[2.0]), 8, &mut rng)?;
    let r3 = gibbs::gnz_residual(bank, &phi, TEST_Z, h3, (&[0.0], &[2.0]), 8, &mut rng)?;
    let mut csv = CsvTable::new();
    for (name, r) in [("indicator", &r1), ("energy_weighted", &r2), ("hat", &r3)] {
        csv.push(format!("gnz_lhs_{name}"), ctx.seed, r.lhs.value, r.lhs.se, r.lhs.n);
        csv.push(format!("gnz_rhs_{name}"), ctx.seed, r.rhs.value, r.rhs.se, r.rhs.n);
        csv.push(format!("gnz_z_{name}"), ctx.seed, r.z_score, 1.0, r.lhs.n);
    }
    ctx.emit("acceptance_c2_gnz.csv", &csv);
    let zs = [r1.z_score, r2.z_score, r3.z_score];
    let passed = low.holds && zs.iter().all(|z| z.abs() < GATE_SE);
    Ok(CriterionResult {
        id: 2,
        name: "GNZ certification",
        passed,
        detail: format!(
            "low-activity {:.4} < {:.4}; |z| = {:.2}, {:.2}, {:.2} (< 3)",
            low.lhs,
            low.threshold,
            zs[0].abs(),
            zs[1].abs(),
            zs[2].abs()
        ),
    })
}

fn criterion_3(ctx: &mut Ctx, bank: &[Configuration]) -> Result<CriterionResult> {
    let phi = test_potential();
    let f = TestFn::box_indicator(&[0.0], &[2.0], 1.0);
    let mut zs = Vec::new();
    let mut csv = CsvTable::new();
    for u in [0.0, 0.5, 1.0] {
        let z_score = harmonic::point_sum_identity_z(bank, &phi, u, &f, TEST_Z)?;
        let lhs = harmonic::weighted_point_sum(bank, &phi, u, &f)?;
        let c_u = harmonic::estimate_c_u(bank, &phi, u)?;
        csv.push(format!("insertion_identity_lhs_u{u}"), ctx.seed, lhs.value, lhs.se, lhs.n);
        csv.push(format!("insertion_identity_cu_u{u}"), ctx.seed, c_u.value, c_u.se, c_u.n);
        csv.push(format!("insertion_identity_z_u{u}"), ctx.seed, z_score, 1.0, lhs.n);
        zs.push(z_score);
    }
    // u = 1 is exact: the C-statistic is ≡ 1 sample by sample
    let c1 = harmonic::estimate_c_u(bank, &phi, 1.0)?;
    let exact_ok = (c1.value - 1.0).abs() < 1e-14 && c1.se < 1e-14;
    ctx.emit("acceptance_c3_identity.csv", &csv);
    let passed = exact_ok && zs.iter().all(|z| z.abs() < GATE_SE);
    Ok(CriterionResult {
        id: 3,
        name: "C_u insertion identity",
        passed,
        detail: format!(
            "|z| = {:.2}, {:.2}, {:.2} (< 3); C_1 = {} exactly",
            zs[0].abs(),
            zs[1].abs(),
            zs[2].abs(),
            c1.value
        ),
    })
}

// ---------------------------------------------------------------------------
// criterion 4: dual-generator ratios converge to c∓
// ---------------------------------------------------------------------------

/// Monotone-decrease check with Monte Carlo ties allowed at 2 joint SE.
fn decreasing_with_ties(gaps: &[(f64, f64)]) -> bool {
    gaps.windows(2).all(|w| {
        let (g0, se0) = w[0];
        let (g1, se1) = w[1];
        g1 <= g0 + TIE_SE * (se0 * se0 + se1 * se1).sqrt()
    })
}

fn criterion_4(ctx: &mut Ctx) -> Result<CriterionResult> {
    // kernel and draw count are a joint design: the ratio bias at the
    // smallest ε is O(ε·a(0)) and must sit below the Monte Carlo band
    let kernel = JumpKernel::UniformBall { radius: 16.0 };
    let mc_n = 512;
    let eps = [1.0, 0.5, 0.25, 0.125];
    let rows =
        pipelines::dual_ratio_sweep(TEST_Z, &test_potential(), &kernel, &eps, mc_n, ctx.seed, 64)?;
    let mut csv = CsvTable::new();
    let mut ok = true;
    let mut final_gaps = [0.0f64; 2];
    for (part_idx, loss) in [true, false].into_iter().enumerate() {
        let part: Vec<_> = rows.iter().filter(|r| r.loss_part == loss).collect();
        let gaps: Vec<(f64, f64)> = part.iter().map(|r| (r.gap, r.ratio_se)).collect();
        let name = if loss { "loss" } else { "gain" };
        for r in &part {
            csv.push(
                format!("dual_ratio_{name}_eps{}", r.eps),
                ctx.seed,
                r.ratio,
                r.ratio_se,
                mc_n,
            );
            csv.push(format!("dual_target_{name}_eps{}", r.eps), ctx.seed, r.target, 0.0, 1);
        }
        let last = part.last().expect("nonempty sweep");
        final_gaps[part_idx] = last.gap / last.ratio_se;
        ok &= decreasing_with_ties(&gaps) && last.gap < GATE_SE * last.ratio_se;
    }
    ctx.emit("acceptance_c4_dual_ratios.csv", &csv);
    Ok(CriterionResult {
        id: 4,
        name: "dual-generator scaling",
        passed: ok,
        detail: format!(
            "final gap/SE: loss {:.2}, gain {:.2} (< 3); trends monotone with 2-SE ties",
            final_gaps[0], final_gaps[1]
        ),
    })
}

// ---------------------------------------------------------------------------
// criterion 5: free-dynamics scaling limit
// ---------------------------------------------------------------------------

fn criterion_5(ctx: &mut Ctx) -> Result<CriterionResult> {
    let kernel = JumpKernel::Gaussian { sigma: 1.0 };
    let rho = 1.0;
    let t: f64 = 1.0;
    let f = TestFn::box_indicator(&[0.0], &[2.0], 1.0);
    let eps = [1.0, 0.5, 0.25, 0.125];
    let n_traj = 10_000;
    let inf_limit = (-t).exp() * rho * f.integral_product(&f).expect("box test fn");
    let mut csv = CsvTable::new();
    let mut ok = true;
    let mut detail = String::new();
    let mut limit_estimates: Vec<EstimateWithError> = Vec::new();
    for (l_idx, side) in [20.0, 40.0].into_iter().enumerate() {
        let torus = Torus::new(1, side)?;
        let wrap = pipelines::relocation_wrap_term(torus, rho, t, &f, &f);
        // limit-process estimate of the infinite-volume value (its own SE
        // enters the joint comparison)
        let lim_pairs = pipelines::free_limit_two_time(
            torus,
            rho,
            t,
            &f,
            &f,
            n_traj,
            ctx.seed,
            88 + l_idx as u64,
        )?;
        let lim = pipelines::cov_estimate(&lim_pairs)?;
        limit_estimates.push(lim);
        let target = lim.value + wrap;
        csv.push(format!("free_cov_limit_process_L{side}"), ctx.seed, lim.value, lim.se, lim.n);
        csv.push(format!("free_cov_wrap_term_L{side}"), ctx.seed, wrap, 0.0, 1);
        let mut gaps: Vec<(f64, f64)> = Vec::new();
        for (e_idx, &e) in eps.iter().enumerate() {
            let stage = 80 + (l_idx * 4 + e_idx) as u64;
            let samples = pipelines::free_hop_two_time(
                torus, rho, &kernel, e, t, &f, &f, n_traj, ctx.seed, stage,
            )?;
            let pairs: Vec<(f64, f64)> = samples.iter().map(|s| (s.f_at_0, s.g_at_t)).collect();
            let cov = pipelines::cov_estimate(&pairs)?;
            let oracle = pipelines::free_cov_quadrature_oracle(torus, rho, 1.0, e, t, &f, &f)?;
            let counts: Vec<u64> = samples.iter().map(|s| s.count_f_window_at_t).collect();
            let (poisson_ok, p_val) =
                pipelines::window_counts_poisson_ok(&counts, rho * f.integral())?;
            csv.push(format!("free_cov_eps{e}_L{side}"), ctx.seed, cov.value, cov.se, cov.n);
            csv.push(format!("free_cov_oracle_eps{e}_L{side}"), ctx.seed, oracle, 0.0, 1);
            csv.push(format!("free_counts_chi2_p_eps{e}_L{side}"), ctx.seed, p_val, 0.0, n_traj);
            // semigroup quadrature oracle must agree with the simulation
            ok &= (cov.value - oracle).abs() < GATE_SE * cov.se;
            // window counts stay Poisson at every ε
            ok &= poisson_ok && p_val > CHI2_LEVEL;
            gaps.push(((cov.value - target).abs(), (cov.se * cov.se + lim.se * lim.se).sqrt()));
        }
        ok &= decreasing_with_ties(&gaps);
        let (final_gap, joint_se) = *gaps.last().expect("nonempty eps");
        ok &= final_gap < GATE_SE * joint_se;
        detail.push_str(&format!("L={side}: final gap/jointSE {:.2}; ", final_gap / joint_se));
    }
    // finite-volume control: both boxes estimate the same limit, and both
    // match the infinite-volume value e^{−t} ρ ∫fg
    let z_lim = limit_estimates[0].z_against(&limit_estimates[1]);
    ok &= z_lim.abs() < GATE_SE;
    for lim in &limit_estimates {
        ok &= (lim.value - inf_limit).abs() < GATE_SE * lim.se;
    }
    detail.push_str(&format!("limit L20 vs L40 z = {z_lim:.2}"));
    ctx.emit("acceptance_c5_free_scaling.csv", &csv);
    Ok(CriterionResult { id: 5, name: "free scaling limit", passed: ok, detail })
}

// ---------------------------------------------------------------------------
// criterion 6: two independent constructions of the free limit agree
// ---------------------------------------------------------------------------

fn criterion_6(ctx: &mut Ctx) -> Result<CriterionResult> {
    let torus = box20();
    let k1 = 1.0;
    let t: f64 = 1.0;
    let f = TestFn::box_indicator(&[0.0], &[2.0], 1.0);
    let n_traj = 8000;
    let ev_pairs = pipelines::free_limit_two_time(torus, k1, t, &f, &f, n_traj, ctx.seed, 96)?;
    let ex_pairs = pipelines::free_exact_two_time(torus, k1, t, &f, &f, n_traj, ctx.seed, 97)?;
    let cov_ev = pipelines::cov_estimate(&ev_pairs)?;
    let cov_ex = pipelines::cov_estimate(&ex_pairs)?;
    // density and pair correlation at time t from fresh runs of both
    let snaps_ev: Vec<Configuration> =
        pipelines::par_trajectories(n_traj, ctx.seed, 98, |_i, rng| {
            let g0 = Configuration::sample_poisson(torus, k1, 0.0, rng)?;
            let params = GlauberParams { mode: BirthDeathMode::Free { intensity: k1 }, torus };
            Ok(glauber::run_birth_death(g0, &params, t, &[t], rng)?.snapshots.remove(0))
        })?;
    let snaps_ex: Vec<Configuration> =
        pipelines::par_trajectories(n_traj, ctx.seed, 99, |_i, rng| {
            let g0 = Configuration::sample_poisson(torus, k1, 0.0, rng)?;
            Ok(glauber::free_exact_sampler(&g0, k1, t, &[t], rng)?.remove(0))
        })?;
    let d_ev = estimation::density(&snaps_ev)?;
    let d_ex = estimation::density(&snaps_ex)?;
    let pc_ev = estimation::pair_correlation(&snaps_ev, 4, 2.0)?;
    let pc_ex = estimation::pair_correlation(&snaps_ex, 4, 2.0)?;
    let mut csv = CsvTable::new();
    csv.push("two_constructions_cov_event_loop", ctx.seed, cov_ev.value, cov_ev.se, cov_ev.n);
    csv.push("two_constructions_cov_direct", ctx.seed, cov_ex.value, cov_ex.se, cov_ex.n);
    csv.push("two_constructions_density_event_loop", ctx.seed, d_ev.value, d_ev.se, d_ev.n);
    csv.push("two_constructions_density_direct", ctx.seed, d_ex.value, d_ex.se, d_ex.n);
    let mut ok = true;
    let z_cov = cov_ev.z_against(&cov_ex);
    let z_d = d_ev.z_against(&d_ex);
    ok &= z_cov.abs() < GATE_SE && z_d.abs() < GATE_SE;
    let mut worst_bin_z = 0.0f64;
    for b in 0..4 {
        let z = pc_ev.k2[b].z_against(&pc_ex.k2[b]);
        worst_bin_z = worst_bin_z.max(z.abs());
        csv.push(
            format!("two_constructions_k2_bin{b}_event_loop"),
            ctx.seed,
            pc_ev.k2[b].value,
            pc_ev.k2[b].se,
            pc_ev.k2[b].n,
        );
        csv.push(
            format!("two_constructions_k2_bin{b}_direct"),
            ctx.seed,
            pc_ex.k2[b].value,
            pc_ex.k2[b].se,
            pc_ex.k2[b].n,
        );
    }
    ok &= worst_bin_z < GATE_SE;
    ctx.emit("acceptance_c6_two_constructions.csv", &csv);
    Ok(CriterionResult {
        id: 6,
        name: "two-construction agreement",
        passed: ok,
        detail: format!(
            "|z|: cov {:.2}, density {:.2}, worst k2 bin {:.2} (< 3)",
            z_cov.abs(),
            z_d.abs(),
            worst_bin_z
        ),
    })
}

// ---------------------------------------------------------------------------
// criterion 7: generator convergence in L²(μ)
// ---------------------------------------------------------------------------

fn criterion_7(ctx: &mut Ctx) -> Result<CriterionResult> {
    // box and kernel sized so the ε = 1/8 jump spread reaches L/2 while the
    // finite-volume floor (∝ 1/L) sits below the 1% relative threshold
    let torus = Torus::new(1, 160.0)?;
    let phi = test_potential();
    let kernel = JumpKernel::Gaussian { sigma: 10.0 };
    let f = TestFn::box_indicator(&[0.0], &[1.0], -1.0);
    let eps = [1.0, 0.5, 0.25, 0.125];
    let params = GibbsParams::with_defaults(phi.clone(), TEST_Z, torus);
    let bank = pipelines::gibbs_bank(&params, 10_000, 64, ctx.seed, 112)?;
    let sweep = pipelines::generator_l2_sweep(
        &bank, &phi, TEST_Z, 0.0, 0.0, &kernel, &eps, &f, 1024, ctx.seed, 113,
    )?;
    let mut csv = CsvTable::new();
    csv.push("generator_l0_sq", ctx.seed, sweep.l0_sq.value, sweep.l0_sq.se, sweep.l0_sq.n);
    csv.push("generator_c0", ctx.seed, sweep.c0.value, sweep.c0.se, sweep.c0.n);
    for row in &sweep.rows {
        csv.push(
            format!("generator_l2_diff_eps{}", row.eps),
            ctx.seed,
            row.mean_sq_diff.value,
            row.mean_sq_diff.se,
            row.mean_sq_diff.n,
        );
    }
    ctx.emit("acceptance_c7_generator_l2.csv", &csv);
    let values: Vec<f64> = sweep.rows.iter().map(|r| r.mean_sq_diff.value).collect();
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let threshold = GENERATOR_L2_REL * sweep.l0_sq.value;
    let last = *values.last().expect("nonempty sweep");
    let passed = decreasing && last < threshold;
    Ok(CriterionResult {
        id: 7,
        name: "generator L2 convergence",
        passed,
        detail: format!(
            "E|diff|² = {} → final {:.2e} < {:.2e} (= 1% of E|L0F|²); decreasing: {decreasing}",
            values.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(", "),
            last,
            threshold
        ),
    })
}

// ---------------------------------------------------------------------------
// criterion 8: interacting limit dynamics is stationary at u ≠ v
// ---------------------------------------------------------------------------

fn criterion_8(ctx: &mut Ctx, bank: &[Configuration]) -> Result<CriterionResult> {
    let phi = test_potential();
    let (u, v) = (0.0, 0.5);
    let constants = pipelines::estimate_constants(bank, &phi, TEST_Z, u, v)?;
    ctx.constants_json = serde_json::to_string_pretty(&constants)
        .map_err(|e| Error::Internal(format!("constants serialize: {e}")))?;
    let n_traj = 400;
    // independent Gibbs initials from a fresh stage
    let params = GibbsParams::with_defaults(phi.clone(), TEST_Z, box20());
    let initials = pipelines::gibbs_bank(&params, n_traj, 64, ctx.seed, 128)?;
    let report = pipelines::bd_stationarity(
        &initials,
        &phi,
        TEST_Z,
        u,
        v,
        constants.c_u.value,
        constants.c_v.value,
        10.0,
        10,
        5,
        2.0,
        ctx.seed,
        129,
    )?;
    let mut csv = CsvTable::new();
    csv.push(
        "stationarity_density",
        ctx.seed,
        report.density.value,
        report.density.se,
        report.density.n,
    );
    csv.push("stationarity_density_z", ctx.seed, report.density_z, 1.0, n_traj);
    csv.push("stationarity_flux_z", ctx.seed, report.flux_z, 1.0, n_traj);
    for (b, z) in report.u2_z.iter().enumerate() {
        csv.push(format!("stationarity_u2_z_bin{b}"), ctx.seed, *z, 1.0, n_traj);
    }
    ctx.emit("acceptance_c8_stationarity.csv", &csv);
    let worst_u2 = report.u2_z.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let passed = report.density_z.abs() < GATE_SE
        && worst_u2 < GATE_SE
        && report.flux_z.abs() < GATE_SE;
    Ok(CriterionResult {
        id: 8,
        name: "limit dynamics stationarity",
        passed,
        detail: format!(
            "|z|: density {:.2}, worst u2 bin {:.2}, flux {:.2} (< 3) at (u,v)=(0,1/2)",
            report.density_z.abs(),
            worst_u2,
            report.flux_z.abs()
        ),
    })
}

// ---------------------------------------------------------------------------
// suite driver and criterion 9 (bit reproducibility)
// ---------------------------------------------------------------------------

fn run_criteria_1_to_8(seed: u64, progress: bool) -> Result<(Vec<CriterionResult>, Ctx)> {
    let mut ctx = Ctx { seed, csvs: Vec::new(), constants_json: String::new() };
    let mut results: Vec<CriterionResult> = Vec::new();
    let push = |r: CriterionResult, results: &mut Vec<CriterionResult>| {
        if progress {
            eprintln!("{}", r.line());
        }
        results.push(r);
    };
    push(criterion_1(&mut ctx)?, &mut results);
    let bank = shared_gibbs_bank(&ctx)?;
    push(criterion_2(&mut ctx, &bank)?, &mut results);
    push(criterion_3(&mut ctx, &bank)?, &mut results);
    push(criterion_4(&mut ctx)?, &mut results);
    push(criterion_5(&mut ctx)?, &mut results);
    push(criterion_6(&mut ctx)?, &mut results);
    push(criterion_7(&mut ctx)?, &mut results);
    push(criterion_8(&mut ctx, &bank)?, &mut results);
    Ok((results, ctx))
}

/// Run the full acceptance suite. The reproducibility criterion re-runs
/// every pipeline a second time with the same seed and byte-compares all
/// emitted CSV tables.
pub fn run_suite(seed: u64, progress: bool) -> Result<SuiteOutput> {
    let t0 = std::time::Instant::now();
    let (mut results, ctx) = run_criteria_1_to_8(seed, progress)?;
    if progress {
        eprintln!("re-running all pipelines for the reproducibility gate…");
    }
    let (_results2, ctx2) = run_criteria_1_to_8(seed, false)?;
    let identical = ctx.csvs.len() == ctx2.csvs.len()
        && ctx.csvs.iter().zip(&ctx2.csvs).all(|((na, ca), (nb, cb))| na == nb && ca == cb)
        && ctx.constants_json == ctx2.constants_json;
    let c9 = CriterionResult {
        id: 9,
        name: "bit reproducibility",
        passed: identical,
        detail: format!(
            "{} CSV tables byte-identical across two full runs (seed {seed}); total {:.1?}",
            ctx.csvs.len(),
            t0.elapsed()
        ),
    };
    if progress {
        eprintln!("{}", c9.line());
    }
    results.push(c9);
    Ok(SuiteOutput { results, csvs: ctx.csvs, constants_json: ctx.constants_json })
}

/// Render the per-criterion report (one pass/fail line each).
pub fn report(results: &[CriterionResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&r.line());
        out.push('\n');
    }
    let all = results.iter().all(|r| r.passed);
    out.push_str(if all { "acceptance suite: ALL PASS\n" } else { "acceptance suite: FAILURES\n" });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinned_setup_is_admissible() {
        let phi = test_potential();
        let low = phi.check_low_activity(TEST_Z, 1).unwrap();
        assert!(low.holds);
        // the documented margin: lhs ≈ 0.126 < (2e)^{-1} ≈ 0.1839
        assert!((low.lhs - 0.12642411176571153).abs() < 1e-9);
        let uv = phi.check_uv_integrability(0.0, 0.5, 1).unwrap();
        assert!(uv.holds);
    }

    #[test]
    fn ties_allowance_logic() {
        assert!(decreasing_with_ties(&[(3.0, 0.1), (2.0, 0.1), (1.0, 0.1)]));
        // small inversion within 2 joint SE is a tie
        assert!(decreasing_with_ties(&[(1.0, 0.1), (1.2, 0.1)]));
        // large inversion is not
        assert!(!decreasing_with_ties(&[(1.0, 0.1), (2.0, 0.1)]));
    }
}
