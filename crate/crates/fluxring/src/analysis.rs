//! Flux sweeps, minimizer refinement, the free-fermion oracle, and the
//! verification harness for the optimal-flux statements.

use crate::basis::{enumerate_basis, FockBasis};
use crate::hamiltonian::build_hamiltonian;
use crate::model::{
    make_random_gauge, make_single_bond_gauge, make_uniform_gauge, FluxAssignment, Interaction,
    RingModel, Sector,
};
use crate::solver::{
    dense_eigenpairs, ground_state, spin_casimir_spectrum, spin_resolved_energies, SolverOpts,
};
use crate::{circ_dist, mod_2pi, FluxRingError, Result, TWO_PI};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Flux agreement tolerance when comparing located extrema to predictions.
pub const PHI_MATCH_TOL: f64 = 1e-4;
/// Degeneracy tolerance on |E(0) - E(pi)| in the projected regime.
pub const ENDPOINT_TIE_TOL: f64 = 1e-9;
/// Tolerance for matching a Casimir eigenvalue to S(S+1).
pub const SPIN_CONTENT_TOL: f64 = 1e-6;

/// Ground energy of the non-interacting uniform ring: each spin species
/// fills its lowest N single-particle levels 2 t cos((2 pi k + phi) / L).
pub fn free_fermion_energy(
    l: usize,
    t: f64,
    phi: f64,
    n_up: usize,
    n_down: usize,
) -> Result<f64> {
    if n_up > l || n_down > l {
        return Err(FluxRingError::SectorTooLarge {
            n_up,
            n_down,
            ring_len: l,
        });
    }
    let mut levels: Vec<f64> = (0..l)
        .map(|k| 2.0 * t * ((2.0 * PI * k as f64 + phi) / l as f64).cos())
        .collect();
    levels.sort_by(f64::total_cmp);
    let fill = |n: usize| levels[..n].iter().sum::<f64>();
    Ok(fill(n_up) + fill(n_down))
}

/// Optimal flux for even electron number with at most L - N_e/2 projected
/// sites: (N_e/2 + 1) pi on even rings, N_e pi / 2 on odd rings.
pub fn predicted_minimizer(l: usize, n_e: usize) -> f64 {
    if l % 2 == 0 {
        mod_2pi((n_e as f64 / 2.0 + 1.0) * PI)
    } else {
        mod_2pi(n_e as f64 * PI / 2.0)
    }
}

/// Flux maximizing the non-interacting energy: the two ring parities swap
/// roles relative to the minimizer.
pub fn predicted_maximizer(l: usize, n_e: usize) -> f64 {
    if l % 2 == 0 {
        mod_2pi(n_e as f64 * PI / 2.0)
    } else {
        mod_2pi((n_e as f64 / 2.0 + 1.0) * PI)
    }
}

/// Minimizer lattice of the fully projected uniform ring: the fluxes with
/// N_e phi congruent to N_e L pi mod 2 pi. Spacing 2 pi / N_e, with a half
/// step offset exactly when N_e L is odd.
pub fn projected_minimizer_lattice(l: usize, n_e: usize) -> Vec<f64> {
    assert!(n_e >= 1);
    let shift = if (n_e * l) % 2 == 1 {
        PI / n_e as f64
    } else {
        0.0
    };
    (0..n_e)
        .map(|k| mod_2pi(shift + TWO_PI * k as f64 / n_e as f64))
        .collect()
}

/// Minimizer lattice candidate for a projected imbalanced sector. The
/// spacing is set by s = N_e / gcd(N_up, N_down) and the half-step offset
/// appears exactly when s L is odd. Both species must be populated.
pub fn spin_class_lattice(l: usize, n_up: usize, n_down: usize) -> Vec<f64> {
    assert!(n_up >= 1 && n_down >= 1);
    let s = (n_up + n_down) / gcd(n_up, n_down);
    let shift = if (s * l) % 2 == 1 { PI / s as f64 } else { 0.0 };
    (0..s)
        .map(|k| mod_2pi(shift + TWO_PI * k as f64 / s as f64))
        .collect()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// True when `point` lies within `tol` (circularly) of some member of `set`.
pub fn contains_point(set: &[f64], point: f64, tol: f64) -> bool {
    set.iter().any(|&p| circ_dist(p, point) <= tol)
}

/// Every member of `sub` is circularly within `tol` of some member of `sup`.
pub fn circular_subset(sub: &[f64], sup: &[f64], tol: f64) -> bool {
    sub.iter().all(|&p| contains_point(sup, p, tol))
}

/// Mutual containment of two flux sets at the given tolerance.
pub fn circular_set_equal(a: &[f64], b: &[f64], tol: f64) -> bool {
    circular_subset(a, b, tol) && circular_subset(b, a, tol)
}

fn fmt_set(set: &[f64]) -> String {
    let parts: Vec<String> = set.iter().map(|p| format!("{p:.6}")).collect();
    format!("{{{}}}", parts.join(", "))
}

/// Per-bond coupling ranges for seeded random instances.
#[derive(Clone, Copy, Debug)]
pub struct RandomCouplings {
    pub t_range: (f64, f64),
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
}

impl Default for RandomCouplings {
    fn default() -> Self {
        Self {
            t_range: (0.5, 2.0),
            u_range: (0.0, 8.0),
            v_range: (-1.0, 1.0),
        }
    }
}

/// Seeded random ring: spin-independent hop magnitudes, zero reference
/// phases (flux enters through the gauge), finite per-site interactions,
/// and independent per-spin potentials.
pub fn random_model(l: usize, seed: u64, rc: &RandomCouplings) -> Result<RingModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t: Vec<f64> = (0..l)
        .map(|_| rng.gen_range(rc.t_range.0..=rc.t_range.1))
        .collect();
    let u: Vec<Interaction> = (0..l)
        .map(|_| Interaction::Finite(rng.gen_range(rc.u_range.0..=rc.u_range.1)))
        .collect();
    let v_up: Vec<f64> = (0..l)
        .map(|_| rng.gen_range(rc.v_range.0..=rc.v_range.1))
        .collect();
    let v_down: Vec<f64> = (0..l)
        .map(|_| rng.gen_range(rc.v_range.0..=rc.v_range.1))
        .collect();
    RingModel::new(
        l,
        [t.clone(), t],
        [vec![0.0; l], vec![0.0; l]],
        u,
        [v_up, v_down],
    )
}

/// Random ring with the potential shared across spins. Spin-resolved checks
/// need this: the spin Casimir labels levels only when it commutes with H,
/// which an independent per-spin potential breaks.
fn random_su2_model(l: usize, seed: u64, rc: &RandomCouplings) -> Result<RingModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t: Vec<f64> = (0..l)
        .map(|_| rng.gen_range(rc.t_range.0..=rc.t_range.1))
        .collect();
    let u: Vec<Interaction> = (0..l)
        .map(|_| Interaction::Finite(rng.gen_range(rc.u_range.0..=rc.u_range.1)))
        .collect();
    let v: Vec<f64> = (0..l)
        .map(|_| rng.gen_range(rc.v_range.0..=rc.v_range.1))
        .collect();
    RingModel::new(l, [t.clone(), t], [vec![0.0; l], vec![0.0; l]], u, [v.clone(), v])
}

/// Scan controls. The grid defaults to 8 L N_e points on [0, 2 pi).
#[derive(Clone, Debug)]
pub struct ScanSpec {
    pub points: Option<usize>,
    /// Golden-section bracket width at which refinement stops.
    pub refine_tol: f64,
    /// Circular distance under which refined extrema merge.
    pub dedup_tol: f64,
    /// Energy window for keeping globally tied extrema.
    pub tie_tol: f64,
    /// Absolute residual under which a grid shift counts as a period.
    pub period_tol: f64,
    pub solver: SolverOpts,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            points: None,
            refine_tol: 1e-8,
            dedup_tol: 1e-5,
            tie_tol: 1e-12,
            period_tol: 1e-9,
            solver: SolverOpts::default(),
        }
    }
}

/// One located extremum of the flux curve.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Extremum {
    pub phi: f64,
    pub energy: f64,
}

/// Ground energy sampled over one flux period, with refined extrema.
#[derive(Clone, Debug, Serialize)]
pub struct FluxCurve {
    pub grid: Vec<f64>,
    pub energies: Vec<f64>,
    /// Global minimizers after refinement and dedup, ascending in phi.
    pub minimizers: Vec<Extremum>,
    pub maximizers: Vec<Extremum>,
    /// Smallest grid-commensurate period whose shift residual passes.
    pub period_estimate: f64,
    /// Set when max - min over the grid vanishes at working precision;
    /// extrema lists are left empty in that case.
    pub constant_energy: bool,
}

struct Evaluator<'a> {
    model: &'a RingModel,
    basis: FockBasis,
    opts: &'a SolverOpts,
}

impl<'a> Evaluator<'a> {
    fn new(model: &'a RingModel, sector: &Sector, opts: &'a SolverOpts) -> Result<Self> {
        validate_sector(model, sector)?;
        Ok(Self {
            model,
            basis: enumerate_basis(sector)?,
            opts,
        })
    }

    fn energy(&self, phi: f64) -> Result<f64> {
        let gauge = make_uniform_gauge(self.model, mod_2pi(phi));
        let h = build_hamiltonian(self.model, &gauge, &self.basis)?;
        Ok(ground_state(&h, 1, self.opts)?.eigenvalues[0])
    }

    /// Same, but failures carry the offending flux.
    fn energy_at(&self, phi: f64) -> Result<f64> {
        self.energy(phi).map_err(|e| FluxRingError::ScanAborted {
            phi: mod_2pi(phi),
            source: Box::new(e),
        })
    }
}

fn validate_sector(model: &RingModel, sector: &Sector) -> Result<()> {
    if sector.length != model.length || sector.projected_sites != model.projection_mask() {
        return Err(FluxRingError::InvalidConfig(format!(
            "sector (L = {}, projected = {:#b}) does not match the model \
             (L = {}, projected = {:#b})",
            sector.length,
            sector.projected_sites,
            model.length,
            model.projection_mask()
        )));
    }
    Ok(())
}

/// Ground energy of the sector at one flux value, uniform gauge.
pub fn ground_energy_at(
    model: &RingModel,
    sector: &Sector,
    phi: f64,
    opts: &SolverOpts,
) -> Result<f64> {
    Evaluator::new(model, sector, opts)?.energy(phi)
}

const INVPHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimum of f on [a, b]; coordinates may leave [0, 2 pi),
/// the caller's f is responsible for wrapping.
fn golden_min(
    f: &mut impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a) > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Smallest period 2 pi / n (n dividing the grid size) whose cyclic shift
/// residual stays below tol; 2 pi when none does.
fn estimate_period(energies: &[f64], tol: f64) -> f64 {
    let n = energies.len();
    let mut divisors: Vec<usize> = (2..=n).filter(|d| n % d == 0).collect();
    divisors.sort_unstable_by(|a, b| b.cmp(a));
    for d in divisors {
        let shift = n / d;
        let resid = (0..n)
            .map(|i| (energies[i] - energies[(i + shift) % n]).abs())
            .fold(0.0f64, f64::max);
        if resid <= tol {
            return TWO_PI / d as f64;
        }
    }
    TWO_PI
}

/// Locate and refine the global extrema of the sampled curve. `sign` is +1
/// for minima, -1 for maxima (the search runs on sign * E).
fn refine_extrema(
    ev: &Evaluator,
    grid: &[f64],
    energies: &[f64],
    spec: &ScanSpec,
    sign: f64,
) -> Result<Vec<Extremum>> {
    let n = grid.len();
    let spacing = TWO_PI / n as f64;
    let mut f = |phi: f64| ev.energy_at(phi).map(|e| sign * e);
    let mut candidates: Vec<Extremum> = Vec::new();
    for i in 0..n {
        let c = sign * energies[i];
        let prev = sign * energies[(i + n - 1) % n];
        let next = sign * energies[(i + 1) % n];
        if c <= prev && c <= next {
            let (x, fx) = golden_min(&mut f, grid[i] - spacing, grid[i] + spacing, spec.refine_tol)?;
            // The grid sample itself can win when the bracket is flat.
            let (phi, val) = if fx <= c { (x, fx) } else { (grid[i], c) };
            candidates.push(Extremum {
                phi: mod_2pi(phi),
                energy: sign * val,
            });
        }
    }
    // Merge circular clusters, keeping the best representative.
    candidates.sort_by(|a, b| a.phi.total_cmp(&b.phi));
    let mut merged: Vec<Extremum> = Vec::new();
    for cand in candidates {
        match merged
            .iter_mut()
            .find(|m| circ_dist(m.phi, cand.phi) <= spec.dedup_tol)
        {
            Some(m) => {
                if sign * cand.energy < sign * m.energy {
                    *m = cand;
                }
            }
            None => merged.push(cand),
        }
    }
    // Keep only global extrema: within the tie window of both the best grid
    // sample and the best refined value.
    let grid_best = energies
        .iter()
        .map(|&e| sign * e)
        .fold(f64::INFINITY, f64::min);
    let best = merged
        .iter()
        .map(|m| sign * m.energy)
        .fold(f64::INFINITY, f64::min);
    let mut out: Vec<Extremum> = merged
        .into_iter()
        .filter(|m| {
            let v = sign * m.energy;
            v <= grid_best + spec.tie_tol && v <= best + spec.tie_tol * best.abs().max(1.0)
        })
        .collect();
    out.sort_by(|a, b| a.phi.total_cmp(&b.phi));
    Ok(out)
}

/// Sample E(phi) on a uniform grid over [0, 2 pi), refine every global
/// minimizer and maximizer, and estimate the curve period.
pub fn scan_flux(model: &RingModel, sector: &Sector, spec: &ScanSpec) -> Result<FluxCurve> {
    let ev = Evaluator::new(model, sector, &spec.solver)?;
    let n = spec
        .points
        .unwrap_or(8 * model.length * sector.n_e().max(1));
    if n < 4 {
        return Err(FluxRingError::InvalidConfig(format!(
            "flux grid needs at least 4 points, got {n}"
        )));
    }
    let grid: Vec<f64> = (0..n).map(|i| TWO_PI * i as f64 / n as f64).collect();
    let mut energies = Vec::with_capacity(n);
    for &phi in &grid {
        energies.push(ev.energy_at(phi)?);
    }
    let emin = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let emax = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let period_estimate = estimate_period(&energies, spec.period_tol);
    if emax - emin <= 1e-12 * emax.abs().max(1.0) {
        return Ok(FluxCurve {
            grid,
            energies,
            minimizers: Vec::new(),
            maximizers: Vec::new(),
            period_estimate,
            constant_energy: true,
        });
    }
    let minimizers = refine_extrema(&ev, &grid, &energies, spec, 1.0)?;
    let maximizers = refine_extrema(&ev, &grid, &energies, spec, -1.0)?;
    Ok(FluxCurve {
        grid,
        energies,
        minimizers,
        maximizers,
        period_estimate,
        constant_energy: false,
    })
}

/// Ground energies of one sector at equal total flux under the uniform,
/// single-bond, and seeded random gauges.
#[derive(Clone, Debug, Serialize)]
pub struct GaugeReport {
    pub phi: f64,
    pub labels: Vec<String>,
    pub energies: Vec<f64>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compare ground energies across gauge choices with equal total flux.
/// At least two random gauges run besides the uniform and single-bond ones.
pub fn check_gauge_invariance(
    model: &RingModel,
    sector: &Sector,
    phi: f64,
    trials: usize,
    opts: &SolverOpts,
) -> Result<GaugeReport> {
    const GAUGE_TOL: f64 = 1e-9;
    validate_sector(model, sector)?;
    let basis = enumerate_basis(sector)?;
    let solve = |gauge: &FluxAssignment| -> Result<f64> {
        let h = build_hamiltonian(model, gauge, &basis)?;
        Ok(ground_state(&h, 1, opts)?.eigenvalues[0])
    };
    let mut labels = vec!["uniform".to_string(), "single-bond".to_string()];
    let mut energies = vec![
        solve(&make_uniform_gauge(model, phi))?,
        solve(&make_single_bond_gauge(model, phi, 1)?)?,
    ];
    for i in 0..trials.max(2) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(i as u64));
        labels.push(format!("random-{i}"));
        energies.push(solve(&make_random_gauge(model, phi, &mut rng))?);
    }
    let reference = energies[0];
    let max_deviation = energies
        .iter()
        .map(|e| (e - reference).abs())
        .fold(0.0f64, f64::max);
    Ok(GaugeReport {
        phi: mod_2pi(phi),
        labels,
        energies,
        max_deviation,
        tolerance: GAUGE_TOL,
        pass: max_deviation <= GAUGE_TOL,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TheoremOutcome {
    Confirmed,
    Failed,
    /// The curve is flat at working precision; every flux minimizes.
    DegenerateConstant,
}

/// Result of checking the optimal-flux prediction on one instance.
#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    /// Which clause applied, with the projected-site count and threshold.
    pub regime: String,
    /// Predicted minimizers. With `equality` set the measured set must
    /// match exactly; otherwise containment of each point is claimed.
    pub predicted: Vec<f64>,
    pub equality: bool,
    pub measured: Vec<Extremum>,
    /// |E(0) - E(pi)|, evaluated when the projected clause applies.
    pub endpoint_gap: Option<f64>,
    pub outcome: TheoremOutcome,
    pub phi_tolerance: f64,
    pub details: Vec<String>,
    pub curve: FluxCurve,
}

/// Scan the sector and test the optimal-flux prediction that applies to it.
///
/// Even N_e with at most L - N_e/2 projected sites: the minimizer set must
/// equal the single predicted point. Even N_e past that threshold: 0 and pi
/// must both minimize and tie. Odd N_e is covered only on the fully
/// projected ring, where the minimizer lattice is checked exactly.
pub fn verify_theorem(
    model: &RingModel,
    sector: &Sector,
    spec: &ScanSpec,
) -> Result<TheoremReport> {
    validate_sector(model, sector)?;
    let l = model.length;
    let n_e = sector.n_e();
    if n_e == 0 || n_e > l {
        return Err(FluxRingError::InapplicableSector(format!(
            "prediction covers 1 <= N_e <= L, got N_e = {n_e} on L = {l}"
        )));
    }
    let n_inf = model.interaction.iter().filter(|u| u.is_infinite()).count();
    let even = n_e % 2 == 0;
    let projected_regime = if even { n_inf > l - n_e / 2 } else { n_inf == l };
    if !even && !projected_regime {
        return Err(FluxRingError::InapplicableSector(format!(
            "odd N_e = {n_e} with unprojected sites has no predicted minimizer; \
             run a plain scan instead"
        )));
    }
    let curve = scan_flux(model, sector, spec)?;
    let mut details = Vec::new();
    if curve.constant_energy {
        details.push(
            "flux curve is constant at working precision; every flux is a minimizer".to_string(),
        );
        return Ok(TheoremReport {
            regime: format!("degenerate ({n_inf} of {l} sites projected)"),
            predicted: Vec::new(),
            equality: false,
            measured: Vec::new(),
            endpoint_gap: None,
            outcome: TheoremOutcome::DegenerateConstant,
            phi_tolerance: PHI_MATCH_TOL,
            details,
            curve,
        });
    }
    let measured: Vec<f64> = curve.minimizers.iter().map(|m| m.phi).collect();
    let measured_ex = curve.minimizers.clone();

    if !projected_regime {
        let point = predicted_minimizer(l, n_e);
        let ok = circular_set_equal(&measured, &[point], PHI_MATCH_TOL);
        details.push(format!(
            "minimizer set {} vs predicted point {point:.6}",
            fmt_set(&measured)
        ));
        return Ok(TheoremReport {
            regime: format!(
                "finite ({n_inf} of {l} sites projected, threshold {})",
                l - n_e / 2
            ),
            predicted: vec![point],
            equality: true,
            measured: measured_ex,
            endpoint_gap: None,
            outcome: if ok {
                TheoremOutcome::Confirmed
            } else {
                TheoremOutcome::Failed
            },
            phi_tolerance: PHI_MATCH_TOL,
            details,
            curve,
        });
    }

    let ev = Evaluator::new(model, sector, &spec.solver)?;
    let e0 = ev.energy(0.0)?;
    let epi = ev.energy(PI)?;
    let gap = (e0 - epi).abs();

    if even {
        let contained = contains_point(&measured, 0.0, PHI_MATCH_TOL)
            && contains_point(&measured, PI, PHI_MATCH_TOL);
        let tie = gap <= ENDPOINT_TIE_TOL;
        details.push(format!(
            "measured minimizers {}; |E(0) - E(pi)| = {gap:.3e}",
            fmt_set(&measured)
        ));
        if !contained {
            details.push("0 and pi are not both global minimizers".to_string());
        }
        if n_inf == l {
            let uniform_hops = model.hop_magnitude[0]
                .iter()
                .chain(model.hop_magnitude[1].iter())
                .all(|&m| (m - model.hop_magnitude[0][0]).abs() <= 1e-15);
            if uniform_hops {
                let lattice = projected_minimizer_lattice(l, n_e);
                let eq = circular_set_equal(&measured, &lattice, PHI_MATCH_TOL);
                details.push(format!(
                    "fully projected uniform ring: measured set {} the lattice {}",
                    if eq { "matches" } else { "differs from" },
                    fmt_set(&lattice)
                ));
            }
        }
        return Ok(TheoremReport {
            regime: format!(
                "projected ({n_inf} of {l} sites projected, threshold {})",
                l - n_e / 2
            ),
            predicted: vec![0.0, PI],
            equality: false,
            measured: measured_ex,
            endpoint_gap: Some(gap),
            outcome: if contained && tie {
                TheoremOutcome::Confirmed
            } else {
                TheoremOutcome::Failed
            },
            phi_tolerance: PHI_MATCH_TOL,
            details,
            curve,
        });
    }

    // Odd N_e on the fully projected ring: exact lattice.
    let lattice = projected_minimizer_lattice(l, n_e);
    let ok = circular_set_equal(&measured, &lattice, PHI_MATCH_TOL);
    details.push(format!(
        "measured minimizers {} vs lattice {}",
        fmt_set(&measured),
        fmt_set(&lattice)
    ));
    Ok(TheoremReport {
        regime: format!("projected (all {l} sites projected, odd N_e = {n_e})"),
        predicted: lattice,
        equality: true,
        measured: measured_ex,
        endpoint_gap: Some(gap),
        outcome: if ok {
            TheoremOutcome::Confirmed
        } else {
            TheoremOutcome::Failed
        },
        phi_tolerance: PHI_MATCH_TOL,
        details,
        curve,
    })
}

/// Casimir eigenvalues of the ground cluster in the balanced (minimal |S^z|)
/// sector, together with the ground energy. Every total-spin multiplet has a
/// member there, so the cluster's spin content is complete.
pub fn ground_spin_content(
    model: &RingModel,
    phi: f64,
    n_e: usize,
    opts: &SolverOpts,
) -> Result<(f64, Vec<f64>)> {
    let n_up = n_e.div_ceil(2);
    let sector = model.sector(n_up, n_e - n_up)?;
    let basis = enumerate_basis(&sector)?;
    if basis.dim() > opts.dense_threshold {
        return Err(FluxRingError::DenseCapExceeded {
            dim: basis.dim(),
            cap: opts.dense_threshold,
        });
    }
    let gauge = make_uniform_gauge(model, phi);
    let h = build_hamiltonian(model, &gauge, &basis)?;
    let (evs, vecs) = dense_eigenpairs(&h)?;
    let e0 = evs[0];
    let tol = opts.degeneracy_tol_factor * e0.abs().max(1.0);
    let k = evs.iter().take_while(|&&e| e - e0 <= tol).count();
    let casimir = spin_casimir_spectrum(&vecs[..k], &basis)?;
    Ok((e0, casimir))
}

/// The scaling sequence |E(0) - E(phi_opt)| * L from the free-fermion
/// oracle at balanced filling.
pub fn oracle_scaling_products(lengths: &[usize], n_e: usize) -> Result<Vec<f64>> {
    let n_up = n_e / 2;
    let n_down = n_e - n_up;
    lengths
        .iter()
        .map(|&l| {
            let e0 = free_fermion_energy(l, 1.0, 0.0, n_up, n_down)?;
            let eopt = free_fermion_energy(l, 1.0, predicted_minimizer(l, n_e), n_up, n_down)?;
            Ok((e0 - eopt).abs() * l as f64)
        })
        .collect()
}

/// One verified statement about a concrete instance.
#[derive(Clone, Debug, Serialize)]
pub struct RemarkCheck {
    pub id: String,
    pub title: String,
    pub instance: String,
    pub predicted: String,
    pub measured: String,
    /// The numeric tolerance the comparison used.
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RemarksReport {
    pub checks: Vec<RemarkCheck>,
    pub all_pass: bool,
}

/// Check ids accepted by [`verify_remarks`], in report order.
pub const REMARK_IDS: [&str; 9] = ["1a", "1b", "2", "3", "5", "6", "7", "8", "9"];

/// Run the side-statement checks selected by id (all when empty). Each check
/// builds its own pinned instance; failures are reported, never masked.
pub fn verify_remarks(ids: &[String], opts: &SolverOpts) -> Result<RemarksReport> {
    let selected: Vec<&str> = if ids.is_empty() {
        REMARK_IDS.to_vec()
    } else {
        let mut v = Vec::new();
        for id in ids {
            match REMARK_IDS.iter().find(|k| **k == id.as_str()) {
                Some(k) => v.push(*k),
                None => {
                    return Err(FluxRingError::InvalidConfig(format!(
                        "unknown check id {id:?}; valid ids: {}",
                        REMARK_IDS.join(", ")
                    )))
                }
            }
        }
        v
    };
    let mut checks = Vec::new();
    for id in selected {
        match id {
            "1a" => checks.extend(remark_sz_alternation(opts)?),
            "1b" => checks.extend(remark_imbalanced_lattices(opts)?),
            "2" => checks.extend(remark_periodicity(opts)?),
            "3" => checks.extend(remark_four_site_closed_forms(opts)?),
            "5" => checks.extend(remark_spin_ordering(opts)?),
            "6" => checks.extend(remark_ferromagnetic_flip(opts)?),
            "7" => checks.extend(remark_projection_threshold(opts)?),
            "8" => checks.extend(remark_maximizers(opts)?),
            "9" => checks.extend(remark_size_scaling()?),
            _ => unreachable!(),
        }
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(RemarksReport { checks, all_pass })
}

fn scan_spec_with(opts: &SolverOpts) -> ScanSpec {
    ScanSpec {
        solver: opts.clone(),
        ..ScanSpec::default()
    }
}

/// Optimal flux alternates between pi and 0 as |S^z| steps through the
/// sectors of one random ring.
fn remark_sz_alternation(opts: &SolverOpts) -> Result<Vec<RemarkCheck>> {
    let l = 6;
    let n_e = 4;
    let model = random_model(l, opts.seed, &RandomCouplings::default())?;
    let spec = scan_spec_with(opts);
    let mut checks = Vec::new();
    for (n_up, n_down) in [(2usize, 2usize), (3, 1), (4, 0)] {
        let sz = (n_up - n_down) / 2;
        let predicted = mod_2pi((sz as f64 + n_e as f64 / 2.0 + 1.0) * PI);
        let curve = scan_flux(&model, &model.sector(n_up, n_down)?, &spec)?;
        let measured: Vec<f64> = curve.minimizers.iter().map(|m| m.phi).collect();
        let pass = circular_set_equal(&measured, &[predicted], PHI_MATCH_TOL);
        checks.push(RemarkCheck {
            id: "1a".into(),
            title: "optimal flux alternates with |S^z|".into(),
            instance: format!("L = {l}, random couplings (seed {}), sector ({n_up}, {n_down})", opts.seed),
            predicted: format!("minimizer set {{{predicted:.6}}}"),
            measured: format!("minimizer set {}", fmt_set(&measured)),
            tolerance: PHI_MATCH_TOL,
            pass,
        });
    }
    Ok(checks)
}

/// Minimizers of imbalanced fully projected sectors land on the lattice with
/// spacing 2 pi gcd(N_up, N_down) / N_e, half-step shifted when s L is odd.
fn remark_imbalanced_lattices(opts: &SolverOpts) -> Result<Vec<RemarkCheck>> {
    let spec = scan_spec_with(opts);
    let mut checks = Vec::new();
    for (l, n_up, n_down) in [(7usize, 3usize, 2usize), (5, 2, 1), (6, 3, 1)] {
        let model = RingModel::uniform(l, 1.0, Interaction::Infinite)?;
        let lattice = spin_class_lattice(l, n_up, n_down);
        let curve = scan_flux(&model, &model.sector(n_up, n_down)?, &spec)?;
        let measured: Vec<f64> = curve.minimizers.iter().map(|m| m.phi).collect();
        let subset = !measured.is_empty() && circular_subset(&measured, &lattice, PHI_MATCH_TOL);
        let equal = circular_set_equal(&measured, &lattice, PHI_MATCH_TOL);
        checks.push(RemarkCheck {
            id: "1b".into(),
            title: "projected imbalanced minimizer lattice".into(),
            instance: format!("L = {l}, t = 1, fully projected, sector ({n_up}, {n_down})"),
            predicted: format!("minimizers within lattice {}", fmt_set(&lattice)),
            measured: format!(
                "minimizer set {} ({})",
                fmt_set(&measured),
                if equal {
                    "equals the lattice"
                } else {
                    "proper subset"
                }
            ),
            tolerance: PHI_MATCH_TOL,
            pass: subset,
        });
    }
    Ok(checks)
}

/// The projected flux curve repeats with period 2 pi gcd(N_up, N_down) / N_e.
fn remark_periodicity(opts: &SolverOpts) -> Result<Vec<RemarkCheck>> {
    let spec = scan_spec_with(opts);
    let mut checks = Vec::new();
    for (l, n_up, n_down, period_frac) in [(6usize, 2usize, 2usize, 2usize), (7, 3, 2, 5)] {
        let model = RingModel::uniform(l, 1.0, Interaction::Infinite)?;
        let curve = scan_flux(&model, &model.sector(n_up, n_down)?, &spec)?;
        let n = curve.energies.len();
        let shift = n / period_frac;
        let resid = (0..n)
            .map(|i| (curve.energies[i] - curve.energies[(i + shift) % n]).abs())
            .fold(0.0f64, f64::max);
        // The claim is shift symmetry: E(phi + T) = E(phi) for the stated T.
        // The finest period of the curve may be smaller (it is pi/2 for the
        // six-site half-sector), so only the residual at T is tested; the
        // finest measured period is reported alongside.
        let period = TWO_PI / period_frac as f64;
        let pass = resid <= spec.period_tol;
        checks.push(RemarkCheck {
            id: "2".into(),
            title: "flux-curve periodicity".into(),
            instance: format!("L = {l}, t = 1, fully projected, sector ({n_up}, {n_down})"),
            predicted: format!(
                "E(phi + T) = E(phi) for T = 2 pi / {period_frac} = {period:.6}"
            ),
            measured: format!(
                "shift residual {resid:.3e}, finest period {:.6}",
                curve.period_estimate
            ),
            tolerance: spec.period_tol,
            pass,
        });
    }
    Ok(checks)
}

/// Four-site ring with three electrons: closed-form minimizer sets at U = 0
/// and at full projection.
fn remark_four_site_closed_forms(opts: &SolverOpts) -> Result<Vec<RemarkCheck>> {
    let spec = scan_spec_with(opts);
    let golden = 4.0 * (1.0 / 5.0f64.sqrt()).asin();
    let cases = [
        (
            Interaction::Finite(0.0),
            vec![golden, TWO_PI - golden],
            format!("{{4 asin(1/sqrt 5), 2 pi - 4 asin(1/sqrt 5)}} = {{{golden:.6}, {:.6}}}", TWO_PI - golden),
        ),
        (
            Interaction::Infinite,
            vec![0.0, TWO_PI / 3.0, 2.0 * TWO_PI / 3.0],
            "{0, 2 pi/3, 4 pi/3}".to_string(),
        ),
    ];
    let mut checks = Vec::new();
    for (u, predicted, label) in cases {
        let model = RingModel::uniform(4, 1.0, u)?;
        let curve = scan_flux(&model, &model.sector(2, 1)?, &spec)?;
        let measured: Vec<f64> = curve.minimizers.iter().map(|m| m.phi).collect();
        let pass = circular_set_equal(&measured, &predicted, PHI_MATCH_TOL);
        checks.push(RemarkCheck {
            id: "3".into(),
            title: "four-site closed-form minimizers".into(),
            instance: format!(
                "L = 4, t = 1, N_e = 3, U = {}",
                if model.is_projected() { "inf" } else { "0" }
            ),
            predicted: format!("minimizer set {label}"),
            measured: format!("minimizer set {}", fmt_set(&measured)),
            tolerance: PHI_MATCH_TOL,
            pass,
        });
    }
    Ok(checks)
}

/// E(S) ordering at the optimal flux: strict E(0) < E(2) for finite
/// interactions, degenerate at full projection.
fn remark_spin_ordering(opts: &SolverOpts) -> Result<Vec<RemarkCheck>> {
    let mut checks = Vec::new();

    let model = random_su2_model(4, opts.seed.wrapping_add(5), &RandomCouplings::default())?;
    let phi_opt = predicted_minimizer(4, 4);
    let report = spin_resolved_energies(&model, &make_uniform_gauge(&model, phi_opt), 4, opts)?;
    let energy_of = |s_twice: i64| {
        report
            .by_s
            .iter()
            .find(|lvl| lvl.s_twice == s_twice)
            .map(|lvl| lvl.energy)
    };
    let (e0, e2) = (energy_of(0), energy_of(4));
    let margin = match (e0, e2) {
        (Some(a), Some(b)) => b - a,
        _ => f64::NAN,
    };
    checks.push(RemarkCheck {
        id: "5".into(),
        title: "spin ordering at the optimal flux".into(),
        instance: format!(
            "L = 4, N_e = 4, random couplings (seed {}), phi = {phi_opt:.6}",
            opts.seed.wrapping_add(5)
        ),
        predicted: "E(S=0) < E(S=2) with margin > 1e-8".into(),
        measured: format!(
            "E(0) = {:?}, E(1) = {:?}, E(2) = {:?}, margin = {margin:.6}",
            e0,
            energy_of(2),
            e2
        ),
        tolerance: 1e-8,
        pass: margin.is_finite() && margin > 1e-8,
    });

    let model = RingModel::uniform(6, 1.0, Interaction::Infinite)?;
    let report = spin_resolved_energies(&model, &make_uniform_gauge(&model, PI), 4, opts)?;
    let energy_of = |s_twice: i64| {
        report
            .by_s
            .iter()
            .find(|lvl| lvl.s_twice == s_twice)
            .map(|lvl| lvl.energy)
    };
    let gap = match (energy_of(0), energy_of(4)) {
        (Some(a), Some(b)) => (a - b).abs(),
        _ => f64::NAN,
    };
    checks.push(RemarkCheck {
        id: "5".into(),
        title: "spin ordering collapses at full projection".into(),
        instance: "L = 6, t = 1, fully projected, N_e = 4, phi = pi".into(),
        predicted: "|E(S=0) - E(S=2)| <= 1e-9".into(),
        measured: format!("|E(0) - E(2)| = {gap:.3e}"),
        tolerance: 1e-9,
        pass: gap.is_finite() && gap <= 1e-9,
    });
    Ok(checks)
}

/// Spin content of the projected ground space flips between phi = 0 and pi:
/// a singlet with no fully polarized member at 0, a fully polarized member
/// at pi.
fn remark_ferromagnetic_flip(opts: &SolverOpts) -> Result<Vec<RemarkCheck>> {
    let model = RingModel::uniform(8, 1.0, Interaction::Infinite)?;
    let n_e = 6;
    let s_max_casimir = 12.0; // S = 3 for six electrons
    let near = |c: f64, target: f64| (c - target).abs() <= SPIN_CONTENT_TOL;

    let (e0, cas0) = ground_spin_content(&model, 0.0, n_e, opts)?;
    let has_singlet = cas0.iter().any(|&c| near(c, 0.0));
    let has_polarized_at_0 = cas0.iter().any(|&c| near(c, s_max_casimir));
    let (epi, caspi) = ground_spin_content(&model, PI, n_e, opts)?;
    let has_polarized_at_pi = caspi.iter().any(|&c| near(c, s_max_casimir));

    Ok(vec![
        RemarkCheck {
            id: "6".into(),
            title: "no ferromagnetic ground state at phi = 0".into(),
            instance: "L = 8, t = 1, fully projected, N_e = 6, phi = 0".into(),
            predicted: "ground cluster contains S = 0 and not S = 3".into(),
            measured: format!("E = {e0:.9}, Casimir spectrum {}", fmt_set(&cas0)),
            tolerance: SPIN_CONTENT_TOL,
            pass: has_singlet && !has_polarized_at_0,
        },
        RemarkCheck {
            id: "6".into(),
            title: "ferromagnetic ground state at phi = pi".into(),
            instance: "L = 8, t = 1, fully projected, N_e = 6, phi = pi".into(),
            predicted: "ground cluster contains S = 3".into(),
            measured: format!("E = {epi:.9}, Casimir spectrum {}", fmt_set(&caspi)),
            tolerance: SPIN_CONTENT_TOL,
            pass: has_polarized_at_pi,
        },
    ])
}

/// Projection-count threshold: at exactly L - N_e/2 projected sites the
/// finite-interaction point still wins; one site past it the {0, pi}
/// prediction is tested as stated.
fn remark_projection_threshold(opts: &SolverOpts) -> Result<Vec<RemarkCheck>> {
    let l = 6;
    let spec = scan_spec_with(opts);
    let mut checks = Vec::new();
    for n_inf in [4usize, 5] {
        let interaction: Vec<Interaction> = (0..l)
            .map(|x| {
                if x < n_inf {
                    Interaction::Infinite
                } else {
                    Interaction::Finite(3.0)
                }
            })
            .collect();
        let model = RingModel::new(
            l,
            [vec![1.0; l], vec![1.0; l]],
            [vec![0.0; l], vec![0.0; l]],
            interaction,
            [vec![0.0; l], vec![0.0; l]],
        )?;
        let report = verify_theorem(&model, &model.sector(2, 2)?, &spec)?;
        let measured: Vec<f64> = report.measured.iter().map(|m| m.phi).collect();
        checks.push(RemarkCheck {
            id: "7".into(),
            title: "projected-site threshold".into(),
            instance: format!("L = {l}, t = 1, U = 3 on free sites, {n_inf} projected, N_e = 4"),
            predicted: format!(
                "{} ({})",
                if report.equality {
                    format!("minimizer set {}", fmt_set(&report.predicted))
                } else {
                    format!("minimizers contain {}", fmt_set(&report.predicted))
                },
                report.regime
            ),
            measured: format!(
                "minimizer set {}{}",
                fmt_set(&measured),
                report
                    .endpoint_gap
                    .map(|g| format!(", |E(0) - E(pi)| = {g:.3e}"))
                    .unwrap_or_default()
            ),
            tolerance: PHI_MATCH_TOL,
            pass: report.outcome == TheoremOutcome::Confirmed,
        });
    }
    Ok(checks)
}

/// Non-interacting maximizer locations, cross-checked against the oracle.
fn remark_maximizers(opts: &SolverOpts) -> Result<Vec<RemarkCheck>> {
    let spec = scan_spec_with(opts);
    let mut checks = Vec::new();
    for (l, n_up, n_down) in [(4usize, 1usize, 1usize), (4, 2, 2), (5, 1, 1), (5, 2, 2)] {
        let n_e = n_up + n_down;
        let model = RingModel::uniform(l, 1.0, Interaction::Finite(0.0))?;
        let predicted = predicted_maximizer(l, n_e);
        let curve = scan_flux(&model, &model.sector(n_up, n_down)?, &spec)?;
        let measured: Vec<f64> = curve.maximizers.iter().map(|m| m.phi).collect();
        let oracle_dev = curve
            .grid
            .iter()
            .zip(&curve.energies)
            .map(|(&phi, &e)| {
                free_fermion_energy(l, 1.0, phi, n_up, n_down).map(|o| (o - e).abs())
            })
            .try_fold(0.0f64, |acc, r| r.map(|d| acc.max(d)))?;
        let pass =
            circular_set_equal(&measured, &[predicted], PHI_MATCH_TOL) && oracle_dev <= 1e-10;
        checks.push(RemarkCheck {
            id: "8".into(),
            title: "non-interacting maximizer location".into(),
            instance: format!("L = {l}, t = 1, U = 0, sector ({n_up}, {n_down})"),
            predicted: format!("maximizer set {{{predicted:.6}}}, oracle deviation <= 1e-10"),
            measured: format!(
                "maximizer set {}, oracle deviation {oracle_dev:.3e}",
                fmt_set(&measured)
            ),
            tolerance: PHI_MATCH_TOL,
            pass,
        });
    }
    Ok(checks)
}

/// Size scaling of the flux sensitivity at fixed electron number, from the
/// oracle: |E(0) - E(phi_opt)| * L should stay within a factor of two.
fn remark_size_scaling() -> Result<Vec<RemarkCheck>> {
    let lengths = [6usize, 10, 14, 18];
    let products = oracle_scaling_products(&lengths, 4)?;
    let max = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = products.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = max / min;
    let listed: Vec<String> = lengths
        .iter()
        .zip(&products)
        .map(|(l, p)| format!("L = {l}: {p:.6}"))
        .collect();
    Ok(vec![RemarkCheck {
        id: "9".into(),
        title: "flux sensitivity scaling with system size".into(),
        instance: "free-fermion oracle, t = 1, N_e = 4, L in {6, 10, 14, 18}".into(),
        predicted: "|E(0) - E(phi_opt)| * L varies by less than a factor of 2".into(),
        measured: format!("{}; max/min = {ratio:.6}", listed.join(", ")),
        tolerance: 2.0,
        pass: ratio < 2.0,
    }])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Interaction;

    fn fast_spec() -> ScanSpec {
        ScanSpec {
            points: Some(64),
            ..ScanSpec::default()
        }
    }

    #[test]
    fn oracle_matches_pinned_values() {
        assert!((free_fermion_energy(3, 1.0, 0.0, 1, 0).unwrap() + 1.0).abs() < 1e-12);
        let e = free_fermion_energy(4, 1.0, PI, 1, 1).unwrap();
        assert!((e + 2.0 * 2.0f64.sqrt()).abs() < 1e-12);
        let e = free_fermion_energy(5, 1.0, 0.7, 2, 1).unwrap();
        assert!((e - (-4.970652183921333)).abs() < 1e-12);
        let e = free_fermion_energy(6, 1.3, 2.1, 2, 2).unwrap();
        assert!((e - (-8.871289863433265)).abs() < 1e-12);
    }

    #[test]
    fn oracle_rejects_overfilled_species() {
        assert!(free_fermion_energy(4, 1.0, 0.0, 5, 0).is_err());
    }

    #[test]
    fn predicted_extrema_parities() {
        assert!(predicted_minimizer(4, 2).abs() < 1e-12);
        assert!((predicted_minimizer(6, 4) - PI).abs() < 1e-12);
        assert!((predicted_minimizer(5, 2) - PI).abs() < 1e-12);
        assert!(predicted_minimizer(5, 4).abs() < 1e-12);
        assert!((predicted_maximizer(4, 2) - PI).abs() < 1e-12);
        assert!(predicted_maximizer(4, 4).abs() < 1e-12);
        assert!(predicted_maximizer(5, 2).abs() < 1e-12);
        assert!((predicted_maximizer(5, 4) - PI).abs() < 1e-12);
    }

    #[test]
    fn projected_lattice_shift_follows_parity() {
        let lat = projected_minimizer_lattice(6, 4);
        let expect = [0.0, PI / 2.0, PI, 3.0 * PI / 2.0];
        assert!(circular_set_equal(&lat, &expect, 1e-12));
        let lat = projected_minimizer_lattice(5, 3);
        let expect = [PI / 3.0, PI, 5.0 * PI / 3.0];
        assert!(circular_set_equal(&lat, &expect, 1e-12));
        let lat = projected_minimizer_lattice(7, 5);
        assert!(lat.iter().any(|&p| (p - PI / 5.0).abs() < 1e-12));
        assert_eq!(lat.len(), 5);
    }

    #[test]
    fn spin_class_lattice_uses_gcd_spacing() {
        let lat = spin_class_lattice(7, 3, 2);
        let expect: Vec<f64> = (0..5).map(|k| (2 * k + 1) as f64 * PI / 5.0).collect();
        assert!(circular_set_equal(&lat, &expect, 1e-12));
        let lat = spin_class_lattice(6, 3, 1);
        let expect = [0.0, PI / 2.0, PI, 3.0 * PI / 2.0];
        assert!(circular_set_equal(&lat, &expect, 1e-12));
        let lat = spin_class_lattice(5, 2, 1);
        let expect = [PI / 3.0, PI, 5.0 * PI / 3.0];
        assert!(circular_set_equal(&lat, &expect, 1e-12));
    }

    #[test]
    fn set_comparisons_wrap_the_circle() {
        assert!(circular_set_equal(&[1e-9], &[TWO_PI - 1e-9], 1e-6));
        assert!(circular_subset(&[0.0, PI], &[0.0, PI / 2.0, PI], 1e-8));
        assert!(!circular_subset(&[0.0, 1.0], &[0.0], 1e-8));
        assert!(!circular_set_equal(&[0.0], &[0.0, PI], 1e-8));
    }

    #[test]
    fn period_estimator_finds_smallest_commensurate_shift() {
        let n = 16;
        let vals: Vec<f64> = (0..n)
            .map(|i| (2.0 * TWO_PI * i as f64 / n as f64).cos())
            .collect();
        assert!((estimate_period(&vals, 1e-9) - PI).abs() < 1e-12);
        let vals: Vec<f64> = (0..n).map(|i| (TWO_PI * i as f64 / n as f64).cos()).collect();
        assert!((estimate_period(&vals, 1e-9) - TWO_PI).abs() < 1e-12);
    }

    #[test]
    fn golden_section_refines_a_cosine_minimum() {
        let mut f = |x: f64| -> Result<f64> { Ok((x - 1.25).cos()) };
        let (x, fx) = golden_min(&mut f, 3.0, 6.0, 1e-10).unwrap();
        // Position accuracy at a quadratic minimum is limited to about
        // sqrt(machine epsilon) because nearby values compare equal.
        assert!((x - (1.25 + PI)).abs() < 5e-8);
        assert!((fx + 1.0).abs() < 1e-12);
    }

    #[test]
    fn scan_locates_free_fermion_extrema() {
        let model = RingModel::uniform(4, 1.0, Interaction::Finite(0.0)).unwrap();
        let curve = scan_flux(&model, &model.sector(1, 1).unwrap(), &fast_spec()).unwrap();
        assert!(!curve.constant_energy);
        assert_eq!(curve.minimizers.len(), 1);
        assert!(circ_dist(curve.minimizers[0].phi, 0.0) < 1e-6);
        assert!((curve.minimizers[0].energy + 4.0).abs() < 1e-9);
        assert_eq!(curve.maximizers.len(), 1);
        assert!(circ_dist(curve.maximizers[0].phi, PI) < 1e-6);
        assert!((curve.period_estimate - TWO_PI).abs() < 1e-12);
        for (&phi, &e) in curve.grid.iter().zip(&curve.energies) {
            let oracle = free_fermion_energy(4, 1.0, phi, 1, 1).unwrap();
            assert!((oracle - e).abs() < 1e-10);
        }
    }

    #[test]
    fn scan_finds_projected_pair_and_period() {
        let model = RingModel::uniform(4, 1.0, Interaction::Infinite).unwrap();
        let curve = scan_flux(&model, &model.sector(1, 1).unwrap(), &fast_spec()).unwrap();
        let measured: Vec<f64> = curve.minimizers.iter().map(|m| m.phi).collect();
        assert!(circular_set_equal(&measured, &[0.0, PI], 1e-6));
        assert!((curve.period_estimate - PI).abs() < 1e-12);
        let e0 = curve.minimizers[0].energy;
        let e1 = curve.minimizers[1].energy;
        assert!((e0 - e1).abs() < 1e-10);
    }

    #[test]
    fn scan_flags_constant_curve() {
        // Full packing under projection freezes every configuration.
        let model = RingModel::uniform(4, 1.0, Interaction::Infinite).unwrap();
        let curve = scan_flux(&model, &model.sector(2, 2).unwrap(), &fast_spec()).unwrap();
        assert!(curve.constant_energy);
        assert!(curve.minimizers.is_empty() && curve.maximizers.is_empty());
    }

    #[test]
    fn scan_rejects_tiny_grid() {
        let model = RingModel::uniform(4, 1.0, Interaction::Finite(0.0)).unwrap();
        let spec = ScanSpec {
            points: Some(3),
            ..ScanSpec::default()
        };
        assert!(scan_flux(&model, &model.sector(1, 1).unwrap(), &spec).is_err());
    }

    #[test]
    fn scan_rejects_mismatched_sector() {
        let model = RingModel::uniform(4, 1.0, Interaction::Finite(0.0)).unwrap();
        let other = RingModel::uniform(5, 1.0, Interaction::Finite(0.0)).unwrap();
        let sector = other.sector(1, 1).unwrap();
        assert!(scan_flux(&model, &sector, &fast_spec()).is_err());
    }

    #[test]
    fn bracketing_never_beats_refined_minimum() {
        let model = random_model(5, 11, &RandomCouplings::default()).unwrap();
        let curve = scan_flux(&model, &model.sector(1, 1).unwrap(), &fast_spec()).unwrap();
        let grid_min = curve.energies.iter().copied().fold(f64::INFINITY, f64::min);
        for m in &curve.minimizers {
            assert!(m.energy <= grid_min + 1e-12);
        }
    }

    #[test]
    fn gauge_invariance_holds_and_detects_flux_change() {
        let model = random_model(5, 3, &RandomCouplings::default()).unwrap();
        let sector = model.sector(2, 1).unwrap();
        let opts = SolverOpts::default();
        let report = check_gauge_invariance(&model, &sector, 1.1, 3, &opts).unwrap();
        assert!(report.pass, "max deviation {}", report.max_deviation);
        assert_eq!(report.energies.len(), 5);
        // Negative control: a different total flux moves the energy.
        let other = check_gauge_invariance(&model, &sector, 1.4, 2, &opts).unwrap();
        assert!((other.energies[0] - report.energies[0]).abs() > 1e-6);
    }

    #[test]
    fn theorem_confirmed_on_small_random_ring() {
        let model = random_model(4, 2, &RandomCouplings::default()).unwrap();
        let report = verify_theorem(&model, &model.sector(1, 1).unwrap(), &fast_spec()).unwrap();
        assert_eq!(report.outcome, TheoremOutcome::Confirmed);
        assert!(report.equality);
        assert!(report.predicted[0].abs() < 1e-12);
    }

    #[test]
    fn theorem_rejects_odd_unprojected_sector() {
        let model = RingModel::uniform(4, 1.0, Interaction::Finite(2.0)).unwrap();
        let err = verify_theorem(&model, &model.sector(2, 1).unwrap(), &fast_spec());
        assert!(matches!(err, Err(FluxRingError::InapplicableSector(_))));
    }

    #[test]
    fn theorem_reports_constant_curve() {
        let model = RingModel::uniform(4, 1.0, Interaction::Infinite).unwrap();
        let report = verify_theorem(&model, &model.sector(2, 2).unwrap(), &fast_spec()).unwrap();
        assert_eq!(report.outcome, TheoremOutcome::DegenerateConstant);
    }

    #[test]
    fn theorem_checks_projected_pair_on_odd_electron_ring() {
        let model = RingModel::uniform(4, 1.0, Interaction::Infinite).unwrap();
        let report = verify_theorem(&model, &model.sector(2, 1).unwrap(), &fast_spec()).unwrap();
        assert_eq!(report.outcome, TheoremOutcome::Confirmed);
        let expect = [0.0, TWO_PI / 3.0, 2.0 * TWO_PI / 3.0];
        assert!(circular_set_equal(&report.predicted, &expect, 1e-12));
    }

    #[test]
    fn four_site_closed_forms_pass() {
        let report = verify_remarks(&["3".to_string()], &SolverOpts::default()).unwrap();
        assert_eq!(report.checks.len(), 2);
        assert!(report.all_pass, "{:#?}", report.checks);
    }

    #[test]
    fn scaling_products_match_oracle_closed_form() {
        let products = oracle_scaling_products(&[6], 4).unwrap();
        // L = 6: E(0) = -6, E(pi) = -4 sqrt 3.
        let expect = (4.0 * 3.0f64.sqrt() - 6.0) * 6.0;
        assert!((products[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn unknown_remark_id_is_rejected() {
        let err = verify_remarks(&["4".to_string()], &SolverOpts::default());
        assert!(matches!(err, Err(FluxRingError::InvalidConfig(_))));
    }

    #[test]
    fn random_model_is_seed_deterministic() {
        let a = random_model(5, 9, &RandomCouplings::default()).unwrap();
        let b = random_model(5, 9, &RandomCouplings::default()).unwrap();
        assert_eq!(a.hop_magnitude[0], b.hop_magnitude[0]);
        assert_eq!(a.potential[1], b.potential[1]);
        let c = random_model(5, 10, &RandomCouplings::default()).unwrap();
        assert!(a.hop_magnitude[0] != c.hop_magnitude[0]);
    }
}
