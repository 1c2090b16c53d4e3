//! The full verification battery: thirteen numbered criteria covering the
//! optimal-flux theorem on even and odd rings, the projected regime, every
//! remark-level claim, the cycle machinery, and the cross-validation
//! properties. Each criterion reports pass/fail with measured values; the
//! same functions back both the `suite` command and the acceptance tests.

use crate::analysis::{
    check_gauge_invariance, free_fermion_energy, random_model, verify_remarks, verify_theorem,
    Extremum, RandomCouplings, ScanSpec, TheoremOutcome, PHI_MATCH_TOL,
};
use crate::basis::enumerate_basis;
use crate::hamiltonian::build_hamiltonian;
use crate::hopgraph::{
    build_graph, check_equivalence_to_all_negative, cycle_fluxes, minimal_cycle_fluxes, psi_value,
};
use crate::model::{hole_particle_map, make_uniform_gauge, Interaction, RingModel};
use crate::solver::{dense_spectrum, ground_state, Method, SolverOpts};
use crate::{circ_dist, mod_2pi, Result, TWO_PI};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: String,
    pub title: String,
    pub pass: bool,
    pub details: Vec<String>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} {}: {} — {}",
            self.id,
            self.title,
            if self.pass { "PASS" } else { "FAIL" },
            self.details.join("; ")
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
    pub all_pass: bool,
}

pub fn format_table(report: &SuiteReport) -> String {
    let mut out = String::new();
    for c in &report.criteria {
        out.push_str(&c.line());
        out.push('\n');
    }
    out.push_str(&format!(
        "suite: {} of {} criteria pass\n",
        report.criteria.iter().filter(|c| c.pass).count(),
        report.criteria.len()
    ));
    out
}

/// Scans in the batch criteria route medium dimensions through the
/// iterative solver; the dense cross-check is criterion 13's job.
fn scan_solver(seed: u64) -> SolverOpts {
    SolverOpts {
        dense_threshold: 64,
        seed,
        ..SolverOpts::default()
    }
}

fn scan_spec(seed: u64) -> ScanSpec {
    ScanSpec {
        solver: scan_solver(seed),
        ..ScanSpec::default()
    }
}

fn default_opts(seed: u64) -> SolverOpts {
    SolverOpts {
        seed,
        ..SolverOpts::default()
    }
}

fn fmt_set(points: &[Extremum]) -> String {
    let phis: Vec<String> = points.iter().map(|e| format!("{:.6}", e.phi)).collect();
    format!("[{}]", phis.join(", "))
}

/// One random-model theorem instance; returns (confirmed, deviation, note).
fn theorem_instance(l: usize, n_e: usize, seed: u64) -> Result<(bool, f64, String)> {
    let model = random_model(l, seed, &RandomCouplings::default())?;
    let sector = model.sector(n_e / 2, n_e - n_e / 2)?;
    let report = verify_theorem(&model, &sector, &scan_spec(seed))?;
    let confirmed = report.outcome == TheoremOutcome::Confirmed;
    let deviation = report
        .measured
        .iter()
        .map(|m| {
            report
                .predicted
                .iter()
                .map(|&p| circ_dist(m.phi, p))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0f64, f64::max);
    let note = format!(
        "L={l} N_e={n_e} seed={seed}: measured {} vs predicted {:?}",
        fmt_set(&report.measured),
        report.predicted
    );
    Ok((confirmed, deviation, note))
}

fn theorem_batch(
    id: &str,
    title: &str,
    lengths: &[usize],
    electron_counts: &[usize],
    seed: u64,
) -> Result<CriterionResult> {
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut total = 0;
    let mut details = Vec::new();
    for &l in lengths {
        for &n_e in electron_counts {
            for s in seed..seed + 5 {
                total += 1;
                let (ok, dev, note) = theorem_instance(l, n_e, s)?;
                worst = worst.max(dev);
                if !ok {
                    pass = false;
                    details.push(note);
                }
            }
        }
    }
    details.insert(
        0,
        format!(
            "{}/{} instances confirmed, worst minimizer deviation {:.2e} rad (tol {PHI_MATCH_TOL:.0e})",
            total - details.len(),
            total,
            worst
        ),
    );
    Ok(CriterionResult {
        id: id.into(),
        title: title.into(),
        pass,
        details,
    })
}

/// Criterion 1: even rings, five seeded random models per (L, N_e), the
/// refined global minimizer set equals {(N_e/2 + 1) pi mod 2 pi}.
pub fn criterion_1(seed: u64) -> Result<CriterionResult> {
    theorem_batch(
        "C1",
        "optimal flux on even rings, random couplings",
        &[4, 6],
        &[2, 4],
        seed,
    )
}

/// Criterion 2: odd rings, minimizer at N_e pi / 2.
pub fn criterion_2(seed: u64) -> Result<CriterionResult> {
    theorem_batch(
        "C2",
        "optimal flux on odd rings, random couplings",
        &[5, 7],
        &[2, 4],
        seed,
    )
}

fn random_projected_model(l: usize, seed: u64) -> Result<RingModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t: Vec<f64> = (0..l).map(|_| rng.gen_range(0.5..=2.0)).collect();
    RingModel::new(
        l,
        [t.clone(), t],
        [vec![0.0; l], vec![0.0; l]],
        vec![Interaction::Infinite; l],
        [vec![0.0; l], vec![0.0; l]],
    )
}

/// Criterion 3: fully projected rings, random bond magnitudes. The check is
/// the claim's content: {0, pi} lie in the minimizer set and tie exactly.
/// The measured set is larger (a 2 pi / N_e lattice); it is reported.
pub fn criterion_3(seed: u64) -> Result<CriterionResult> {
    let mut pass = true;
    let mut details = Vec::new();
    let mut worst_gap = 0.0f64;
    let mut total = 0;
    let mut confirmed = 0;
    for &l in &[5usize, 6] {
        for s in seed..seed + 5 {
            total += 1;
            let model = random_projected_model(l, s)?;
            let sector = model.sector(2, 2)?;
            let report = verify_theorem(&model, &sector, &scan_spec(s))?;
            if report.outcome == TheoremOutcome::Confirmed {
                confirmed += 1;
            } else {
                pass = false;
                details.push(format!(
                    "L={l} seed={s}: {} measured {}",
                    report.details.join(" / "),
                    fmt_set(&report.measured)
                ));
            }
            if let Some(gap) = report.endpoint_gap {
                worst_gap = worst_gap.max(gap);
            }
            if l == 5 && s == seed {
                details.push(format!(
                    "sample measured set L=5: {} (contains 0 and pi; ties within tolerance)",
                    fmt_set(&report.measured)
                ));
            }
        }
    }
    details.insert(
        0,
        format!(
            "{confirmed}/{total} instances: 0 and pi are global minimizers, worst |E(0)-E(pi)| = {worst_gap:.2e} (tol 1e-9)"
        ),
    );
    Ok(CriterionResult {
        id: "C3".into(),
        title: "projected rings minimize at flux 0 and pi".into(),
        pass,
        details,
    })
}

fn remark_criterion(
    id: &str,
    title: &str,
    remark_ids: &[&str],
    seed: u64,
) -> Result<CriterionResult> {
    let ids: Vec<String> = remark_ids.iter().map(|s| s.to_string()).collect();
    let report = verify_remarks(&ids, &default_opts(seed))?;
    let pass = report.all_pass;
    let details = report
        .checks
        .iter()
        .map(|c| {
            format!(
                "[{}] {}: predicted {} measured {}",
                if c.pass { "ok" } else { "FAIL" },
                c.instance,
                c.predicted,
                c.measured
            )
        })
        .collect();
    Ok(CriterionResult {
        id: id.into(),
        title: title.into(),
        pass,
        details,
    })
}

/// Criterion 4: the four-site, three-electron closed-form minimizer sets.
pub fn criterion_4(seed: u64) -> Result<CriterionResult> {
    remark_criterion("C4", "four-site closed-form minimizers", &["3"], seed)
}

/// Criterion 5: projected-sector periodicity in the flux.
pub fn criterion_5(seed: u64) -> Result<CriterionResult> {
    remark_criterion("C5", "projected flux periodicity", &["2"], seed)
}

/// Criterion 6: the optimal flux alternates with S^z on a six-site ring.
pub fn criterion_6(seed: u64) -> Result<CriterionResult> {
    remark_criterion("C6", "optimal flux alternates across S^z sectors", &["1a"], seed)
}

/// Criterion 7: spin ordering at the optimal flux, and its projected
/// degeneracy counterpart.
pub fn criterion_7(seed: u64) -> Result<CriterionResult> {
    remark_criterion("C7", "spin-resolved energy ordering", &["5"], seed)
}

/// Criterion 8: the ferromagnetic flip of the projected eight-site ring.
pub fn criterion_8(seed: u64) -> Result<CriterionResult> {
    remark_criterion("C8", "ground-state spin flip between flux 0 and pi", &["6"], seed)
}

/// Criterion 9: the projection-count threshold. Four projected sites follow
/// the finite-interaction rule. Five projected sites are claimed to move
/// the minimizers to {0, pi}; the measured minimizer is pi alone, with
/// E(0) - E(pi) well above the tie tolerance, so the second clause fails
/// and is reported as measured.
pub fn criterion_9(seed: u64) -> Result<CriterionResult> {
    let mut result = remark_criterion("C9", "projection-count threshold", &["7"], seed)?;
    if !result.pass {
        result.details.push(
            "the five-site clause fails as measured: one unprojected site leaves room for odd-winding exchange circuits, so the endpoint tie breaks"
                .into(),
        );
    }
    Ok(result)
}

/// Criterion 10: free-fermion maximizer sets, cross-checked on the oracle.
pub fn criterion_10(seed: u64) -> Result<CriterionResult> {
    remark_criterion("C10", "flux maximizers at zero interaction", &["8"], seed)
}

/// Criterion 11: the bounded-ratio proxy for the 1/L gap scaling at fixed
/// N_e = 4. The measured products decay like 1/L themselves (the fixed
/// electron number puts the gap at order 1/L^2), so the ratio exceeds the
/// claimed bound and the criterion fails as measured.
pub fn criterion_11(seed: u64) -> Result<CriterionResult> {
    let mut result = remark_criterion("C11", "gap-times-length scaling window", &["9"], seed)?;
    if !result.pass {
        result.details.push(
            "fails as measured: |E(0)-E(phi_opt)| scales as 1/L^2 at fixed electron number, so the product with L still shrinks"
                .into(),
        );
    }
    Ok(result)
}

/// Criterion 12: the cycle machinery on the four-site ring. Fundamental
/// cycles have even length, minimal flux-carrying circuits all carry the
/// accumulated phase psi, the spanning-tree transform lands exactly on the
/// all-negative matrix at flux pi, and full projection doubles the minimal
/// circuit length to 2L.
pub fn criterion_12(seed: u64) -> Result<CriterionResult> {
    let mut pass = true;
    let mut details = Vec::new();
    let opts = default_opts(seed);

    let model = RingModel::uniform(4, 1.0, Interaction::Finite(2.0))?;
    let basis = enumerate_basis(&model.sector(2, 2)?)?;
    let phi = 1.2345;
    let g = build_graph(&model, &make_uniform_gauge(&model, phi), &basis)?;

    let even = g.cycle_basis.iter().all(|c| c.len() % 2 == 0);
    pass &= even;
    details.push(format!(
        "[{}] all {} fundamental cycles have even length",
        if even { "ok" } else { "FAIL" },
        g.cycle_basis.len()
    ));

    let psi = psi_value(phi, 4, 4)?;
    let mut worst = 0.0f64;
    for cf in minimal_cycle_fluxes(&g)? {
        let d = circ_dist(cf.flux, psi).min(circ_dist(cf.flux, TWO_PI - psi));
        worst = worst.max(d);
    }
    let psi_ok = worst <= 1e-10 && !g.minimal_cycles.is_empty();
    pass &= psi_ok;
    details.push(format!(
        "[{}] {} minimal circuits of length {} carry flux psi = {:.6} up to orientation, worst deviation {:.2e} (tol 1e-10)",
        if psi_ok { "ok" } else { "FAIL" },
        g.minimal_cycles.len(),
        g.minimal_cycles.first().map(|c| c.len()).unwrap_or(0),
        psi,
        worst
    ));

    let mut windings_ok = true;
    for cf in cycle_fluxes(&g)? {
        let target = mod_2pi(cf.winding as f64 * psi);
        if circ_dist(cf.flux, target) > 1e-10 {
            windings_ok = false;
        }
    }
    pass &= windings_ok;
    details.push(format!(
        "[{}] every fundamental-cycle flux is its winding number times psi",
        if windings_ok { "ok" } else { "FAIL" }
    ));

    let eq = check_equivalence_to_all_negative(
        &model,
        &make_uniform_gauge(&model, PI),
        &basis,
        &opts,
    )?;
    let eq_ok = eq.equivalent && eq.max_entry_deviation.unwrap_or(1.0) <= 1e-12;
    pass &= eq_ok;
    details.push(format!(
        "[{}] at flux pi the diagonal transform reaches the all-negative matrix, max entry deviation {:.2e} (tol 1e-12)",
        if eq_ok { "ok" } else { "FAIL" },
        eq.max_entry_deviation.unwrap_or(f64::NAN)
    ));

    let projected = RingModel::uniform(4, 1.0, Interaction::Infinite)?;
    let pbasis = enumerate_basis(&projected.sector(1, 1)?)?;
    let pg = build_graph(&projected, &make_uniform_gauge(&projected, 0.9), &pbasis)?;
    let len_ok = pg.minimal_cycles.first().map(|c| c.len()) == Some(8);
    pass &= len_ok;
    details.push(format!(
        "[{}] full projection: minimal flux-carrying circuit length {} = 2L (plain girth stays {})",
        if len_ok { "ok" } else { "FAIL" },
        pg.minimal_cycles.first().map(|c| c.len()).unwrap_or(0),
        pg.girth.unwrap_or(0)
    ));

    Ok(CriterionResult {
        id: "C12".into(),
        title: "hopping-graph cycle structure and gauge transform".into(),
        pass,
        details,
    })
}

/// Criterion 13: cross-validation batteries. Gauge invariance over twenty
/// seeded cases, iterative-versus-dense ground energies, exact matching of
/// the zero-interaction solver against the free-fermion values, and the
/// hole-particle spectral identity.
pub fn criterion_13(seed: u64) -> Result<CriterionResult> {
    let mut pass = true;
    let mut details = Vec::new();

    // Gauge invariance: twenty seeded model/flux cases, three gauges each.
    let mut worst = 0.0f64;
    let mut failures = 0;
    for k in 0..20u64 {
        let l = [4usize, 5, 6, 7][(k % 4) as usize];
        let model = random_model(l, seed + 100 + k, &RandomCouplings::default())?;
        let (n_up, n_down) = match l {
            4 | 5 => (1, 1),
            6 => (2, 1),
            _ => (2, 2),
        };
        let sector = model.sector(n_up, n_down)?;
        let phi = mod_2pi(0.1 + 0.37 * k as f64);
        let report = check_gauge_invariance(&model, &sector, phi, 2, &scan_solver(seed + k))?;
        worst = worst.max(report.max_deviation);
        if !report.pass {
            failures += 1;
        }
    }
    let gauge_ok = failures == 0;
    pass &= gauge_ok;
    details.push(format!(
        "[{}] gauge invariance on 20 cases: worst spread {:.2e} (tol 1e-9)",
        if gauge_ok { "ok" } else { "FAIL" },
        worst
    ));

    // Iterative versus dense ground energies on ten seeded models.
    let mut worst_diff = 0.0f64;
    for k in 0..10u64 {
        let l = [4usize, 5, 6][(k % 3) as usize];
        let model = random_model(l, seed + 200 + k, &RandomCouplings::default())?;
        let sector = model.sector(2, 1)?;
        let basis = enumerate_basis(&sector)?;
        let gauge = make_uniform_gauge(&model, mod_2pi(0.2 + 0.3 * k as f64));
        let h = build_hamiltonian(&model, &gauge, &basis)?;
        let dense = ground_state(&h, 1, &default_opts(seed))?;
        let forced = SolverOpts {
            dense_threshold: 1,
            seed: seed + k,
            ..SolverOpts::default()
        };
        let lanczos = ground_state(&h, 1, &forced)?;
        debug_assert_eq!(lanczos.method, Method::Lanczos);
        worst_diff = worst_diff.max((dense.eigenvalues[0] - lanczos.eigenvalues[0]).abs());
    }
    let solver_ok = worst_diff <= 1e-8;
    pass &= solver_ok;
    details.push(format!(
        "[{}] iterative vs dense ground energy on 10 models: worst |difference| {:.2e} (tol 1e-8)",
        if solver_ok { "ok" } else { "FAIL" },
        worst_diff
    ));

    // Zero-interaction solver against the free-fermion values on a grid.
    let mut worst_oracle = 0.0f64;
    for &(l, n_up, n_down) in &[(4usize, 1usize, 1usize), (5, 2, 1)] {
        let model = RingModel::uniform(l, 1.0, Interaction::Finite(0.0))?;
        let sector = model.sector(n_up, n_down)?;
        let basis = enumerate_basis(&sector)?;
        for k in 0..48 {
            let phi = TWO_PI * k as f64 / 48.0;
            let h = build_hamiltonian(&model, &make_uniform_gauge(&model, phi), &basis)?;
            let ed = ground_state(&h, 1, &default_opts(seed))?.eigenvalues[0];
            let oracle = free_fermion_energy(l, 1.0, phi, n_up, n_down)?;
            worst_oracle = worst_oracle.max((ed - oracle).abs());
        }
    }
    let oracle_ok = worst_oracle <= 1e-10;
    pass &= oracle_ok;
    details.push(format!(
        "[{}] zero-interaction ground energies match the free-fermion values: worst deviation {:.2e} (tol 1e-10)",
        if oracle_ok { "ok" } else { "FAIL" },
        worst_oracle
    ));

    // Hole-particle identity: full spectra match after the scalar shift.
    let mut worst_hp = 0.0f64;
    for (k, &(n_up, n_down)) in [(2usize, 1usize), (1, 1), (2, 2)].iter().enumerate() {
        let base = random_model(4, seed + 300 + k as u64, &RandomCouplings::default())?;
        // Bake a random gauge into the bond phases so the map transforms it.
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 310 + k as u64);
        let phases: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..TWO_PI)).collect();
        let model = RingModel::new(
            4,
            base.hop_magnitude.clone(),
            [phases.clone(), phases],
            base.interaction.clone(),
            base.potential.clone(),
        )?;
        let sector = model.sector(n_up, n_down)?;
        let (mapped, mapped_sector, shift) = hole_particle_map(&model, &sector)?;
        let zero = make_uniform_gauge(&model, 0.0);
        let h = build_hamiltonian(&model, &zero, &enumerate_basis(&sector)?)?;
        let hm = build_hamiltonian(&mapped, &zero, &enumerate_basis(&mapped_sector)?)?;
        let a = dense_spectrum(&h)?;
        let b = dense_spectrum(&hm)?;
        debug_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            worst_hp = worst_hp.max((x - (y + shift.scalar)).abs());
        }
    }
    let hp_ok = worst_hp <= 1e-9;
    pass &= hp_ok;
    details.push(format!(
        "[{}] hole-particle spectra match after the scalar shift on 3 instances: worst deviation {:.2e} (tol 1e-9)",
        if hp_ok { "ok" } else { "FAIL" },
        worst_hp
    ));

    Ok(CriterionResult {
        id: "C13".into(),
        title: "gauge, solver, oracle, and hole-particle cross-checks".into(),
        pass,
        details,
    })
}

/// Run all thirteen criteria with seeds derived from `seed`.
pub fn run_full_suite(seed: u64) -> Result<SuiteReport> {
    let criteria = vec![
        criterion_1(seed)?,
        criterion_2(seed)?,
        criterion_3(seed)?,
        criterion_4(seed)?,
        criterion_5(seed)?,
        criterion_6(seed)?,
        criterion_7(seed)?,
        criterion_8(seed)?,
        criterion_9(seed)?,
        criterion_10(seed)?,
        criterion_11(seed)?,
        criterion_12(seed)?,
        criterion_13(seed)?,
    ];
    let all_pass = criteria.iter().all(|c| c.pass);
    Ok(SuiteReport {
        seed,
        criteria,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem_instance_reports_measured_set() {
        let (ok, dev, note) = theorem_instance(4, 2, 1).unwrap();
        assert!(ok, "{note}");
        assert!(dev < PHI_MATCH_TOL);
        assert!(note.contains("L=4"));
    }

    #[test]
    fn criterion_line_format_is_single_line() {
        let c = CriterionResult {
            id: "C0".into(),
            title: "demo".into(),
            pass: true,
            details: vec!["a".into(), "b".into()],
        };
        assert_eq!(c.line(), "C0 demo: PASS — a; b");
    }

    #[test]
    fn cycle_criterion_passes() {
        let c = criterion_12(7).unwrap();
        assert!(c.pass, "{}", c.line());
    }

    #[test]
    fn projected_instance_ties_endpoints() {
        let model = random_projected_model(5, 3).unwrap();
        assert!(model.is_projected());
        let sector = model.sector(2, 2).unwrap();
        let report = verify_theorem(&model, &sector, &scan_spec(3)).unwrap();
        assert_eq!(report.outcome, TheoremOutcome::Confirmed);
        assert!(report.endpoint_gap.unwrap() <= 1e-9);
    }
}
