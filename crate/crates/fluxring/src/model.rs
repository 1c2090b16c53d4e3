//! Domain types for the ring: couplings, flux gauges, and occupation sectors.
//!
//! Bond `x` connects site `x` to site `x + 1 mod L`, so bond `L - 1` is the
//! wrap-around bond. Phases live in radians; the forward hop `x -> x + 1`
//! carries `e^{+i theta}` (fixed in the Hamiltonian assembly).

use crate::{mod_2pi, FluxRingError, Result, TWO_PI};
use rand::Rng;

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const SPINS: [usize; 2] = [UP, DOWN];

/// On-site coupling between the two spin species. `Infinite` removes doubly
/// occupied configurations at that site from the Hilbert space instead of
/// entering the matrix. Serializes as the plain number or the literal
/// "inf", matching the configuration syntax.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Interaction {
    Finite(f64),
    Infinite,
}

impl serde::Serialize for Interaction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Interaction::Finite(u) => serializer.serialize_f64(*u),
            Interaction::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl Interaction {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Interaction::Infinite)
    }

    /// Finite value, or None for the projected case.
    pub fn finite(&self) -> Option<f64> {
        match self {
            Interaction::Finite(u) => Some(*u),
            Interaction::Infinite => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RingModel {
    pub length: usize,
    /// Per-spin, per-bond hop magnitude, strictly positive.
    pub hop_magnitude: [Vec<f64>; 2],
    /// Per-spin, per-bond reference phase in [0, 2pi). The flux gauge adds on
    /// top of this.
    pub hop_phase: [Vec<f64>; 2],
    pub interaction: Vec<Interaction>,
    /// Per-spin, per-site one-body energy.
    pub potential: [Vec<f64>; 2],
}

impl RingModel {
    pub fn new(
        length: usize,
        hop_magnitude: [Vec<f64>; 2],
        hop_phase: [Vec<f64>; 2],
        interaction: Vec<Interaction>,
        potential: [Vec<f64>; 2],
    ) -> Result<Self> {
        if length < 3 {
            return Err(FluxRingError::RingTooSmall(length));
        }
        if length > 63 {
            return Err(FluxRingError::RingTooLarge(length));
        }
        for arr in hop_magnitude.iter().chain(hop_phase.iter()).chain(potential.iter()) {
            if arr.len() != length {
                return Err(FluxRingError::ArrayLengthMismatch {
                    got: arr.len(),
                    expected: length,
                });
            }
        }
        if interaction.len() != length {
            return Err(FluxRingError::ArrayLengthMismatch {
                got: interaction.len(),
                expected: length,
            });
        }
        for s in SPINS {
            for (b, &m) in hop_magnitude[s].iter().enumerate() {
                if !(m > 0.0) {
                    return Err(FluxRingError::InvalidConfig(format!(
                        "hop magnitude on bond {b} (spin {s}) must be strictly positive, got {m}"
                    )));
                }
            }
        }
        let hop_phase = [
            hop_phase[0].iter().map(|&p| mod_2pi(p)).collect(),
            hop_phase[1].iter().map(|&p| mod_2pi(p)).collect(),
        ];
        Ok(Self {
            length,
            hop_magnitude,
            hop_phase,
            interaction,
            potential,
        })
    }

    /// Spin-independent couplings from per-bond magnitude/phase and per-site
    /// interaction/potential.
    pub fn spin_independent(
        length: usize,
        hop_magnitude: Vec<f64>,
        hop_phase: Vec<f64>,
        interaction: Vec<Interaction>,
        potential: Vec<f64>,
    ) -> Result<Self> {
        Self::new(
            length,
            [hop_magnitude.clone(), hop_magnitude],
            [hop_phase.clone(), hop_phase],
            interaction,
            [potential.clone(), potential],
        )
    }

    /// Uniform |t|, zero reference phase, uniform interaction, zero potential.
    pub fn uniform(length: usize, t: f64, u: Interaction) -> Result<Self> {
        Self::spin_independent(
            length,
            vec![t; length],
            vec![0.0; length],
            vec![u; length],
            vec![0.0; length],
        )
    }

    pub fn is_projected(&self) -> bool {
        self.interaction.iter().any(Interaction::is_infinite)
    }

    /// Bitmask of sites where double occupancy is forbidden.
    pub fn projection_mask(&self) -> u64 {
        let mut mask = 0u64;
        for (x, u) in self.interaction.iter().enumerate() {
            if u.is_infinite() {
                mask |= 1 << x;
            }
        }
        mask
    }

    pub fn spin_dependent_hopping(&self) -> bool {
        self.hop_magnitude[UP] != self.hop_magnitude[DOWN]
            || self.hop_phase[UP] != self.hop_phase[DOWN]
    }

    pub fn sector(&self, n_up: usize, n_down: usize) -> Result<Sector> {
        Sector::new(self.length, n_up, n_down, self.projection_mask())
    }
}

/// Distribution of the total flux over the ring bonds. The spectrum depends
/// only on `total_flux`; the per-bond split is a gauge choice.
#[derive(Clone, Debug)]
pub struct FluxAssignment {
    pub per_bond_phase: Vec<f64>,
    /// Sum of the bond phases reduced to [0, 2pi).
    pub total_flux: f64,
}

impl FluxAssignment {
    fn from_phases(per_bond_phase: Vec<f64>) -> Self {
        let total_flux = mod_2pi(per_bond_phase.iter().sum());
        Self {
            per_bond_phase,
            total_flux,
        }
    }
}

/// Spread the flux evenly: every bond carries phi / L.
pub fn make_uniform_gauge(model: &RingModel, phi: f64) -> FluxAssignment {
    FluxAssignment::from_phases(vec![phi / model.length as f64; model.length])
}

/// Concentrate the whole flux (reduced mod 2pi) on one bond. `bond` is
/// 1-based: bond b connects site b to site b + 1.
pub fn make_single_bond_gauge(model: &RingModel, phi: f64, bond: usize) -> Result<FluxAssignment> {
    if bond < 1 || bond > model.length {
        return Err(FluxRingError::BondOutOfRange {
            bond,
            ring_len: model.length,
        });
    }
    let mut phases = vec![0.0; model.length];
    phases[bond - 1] = mod_2pi(phi);
    Ok(FluxAssignment::from_phases(phases))
}

/// Random bond phases with the given total flux; the last bond absorbs the
/// remainder. Used by the gauge-invariance check.
pub fn make_random_gauge<R: Rng>(model: &RingModel, phi: f64, rng: &mut R) -> FluxAssignment {
    let l = model.length;
    let mut phases: Vec<f64> = (0..l - 1).map(|_| rng.gen_range(0.0..TWO_PI)).collect();
    let partial: f64 = phases.iter().sum();
    phases.push(mod_2pi(phi - partial));
    FluxAssignment::from_phases(phases)
}

/// Fixed-occupancy computation sector. `projected_sites` is a bitmask of the
/// sites where double occupancy is excluded from the basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sector {
    pub length: usize,
    pub n_up: usize,
    pub n_down: usize,
    pub projected_sites: u64,
}

impl Sector {
    pub fn new(length: usize, n_up: usize, n_down: usize, projected_sites: u64) -> Result<Self> {
        if length < 3 {
            return Err(FluxRingError::RingTooSmall(length));
        }
        if length > 63 {
            return Err(FluxRingError::RingTooLarge(length));
        }
        if n_up > length || n_down > length {
            return Err(FluxRingError::SectorTooLarge {
                n_up,
                n_down,
                ring_len: length,
            });
        }
        Ok(Self {
            length,
            n_up,
            n_down,
            projected_sites: projected_sites & ((1u64 << length) - 1),
        })
    }

    pub fn unprojected(length: usize, n_up: usize, n_down: usize) -> Result<Self> {
        Self::new(length, n_up, n_down, 0)
    }

    pub fn n_e(&self) -> usize {
        self.n_up + self.n_down
    }

    /// Twice the z spin, N_up - N_down.
    pub fn s_z_twice(&self) -> i64 {
        self.n_up as i64 - self.n_down as i64
    }

    pub fn fully_projected(&self) -> bool {
        self.projected_sites.count_ones() as usize == self.length
    }
}

/// Scalar offset relating the spectra of the two images of the hole-particle
/// map: original eigenvalue = mapped eigenvalue + `scalar`.
#[derive(Clone, Debug)]
pub struct EnergyShift {
    pub scalar: f64,
    pub description: String,
}

/// Transform the model under the exchange of occupied and empty orbitals.
///
/// Each bond phase maps to pi - theta (the total flux maps to L pi - phi),
/// magnitudes and interactions are unchanged, the potential picks up
/// -v - U per site and spin, and the whole spectrum shifts by
/// sum_x U_x + sum_{x,sigma} v_x^sigma. The sector maps to
/// (L - N_up, L - N_down).
pub fn hole_particle_map(
    model: &RingModel,
    sector: &Sector,
) -> Result<(RingModel, Sector, EnergyShift)> {
    if model.is_projected() {
        return Err(FluxRingError::InapplicableSector(
            "hole-particle map is defined for finite interactions only".into(),
        ));
    }
    if model.spin_dependent_hopping() {
        return Err(FluxRingError::SpinDependentHopping);
    }
    let l = model.length;
    let u_vals: Vec<f64> = model
        .interaction
        .iter()
        .map(|u| u.finite().expect("projection checked above"))
        .collect();

    let new_phase: Vec<f64> = model.hop_phase[UP]
        .iter()
        .map(|&th| mod_2pi(std::f64::consts::PI - th))
        .collect();
    let new_potential: [Vec<f64>; 2] = [
        (0..l).map(|x| -model.potential[UP][x] - u_vals[x]).collect(),
        (0..l).map(|x| -model.potential[DOWN][x] - u_vals[x]).collect(),
    ];
    let scalar: f64 = u_vals.iter().sum::<f64>()
        + model.potential[UP].iter().sum::<f64>()
        + model.potential[DOWN].iter().sum::<f64>();

    let mapped = RingModel::new(
        l,
        [model.hop_magnitude[UP].clone(), model.hop_magnitude[DOWN].clone()],
        [new_phase.clone(), new_phase],
        model.interaction.clone(),
        new_potential,
    )?;
    let mapped_sector = Sector::new(l, l - sector.n_up, l - sector.n_down, 0)?;
    let shift = EnergyShift {
        scalar,
        description: format!(
            "original spectrum = mapped spectrum + {scalar:.12}; flux phi -> L*pi - phi"
        ),
    };
    Ok((mapped, mapped_sector, shift))
}
