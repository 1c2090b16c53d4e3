//! Sector Hamiltonian assembly in compressed sparse row form, plus the
//! all-negative comparison operator.
//!
//! Convention: the term t c+_{x+1,sigma} c_{x,sigma} carries
//! e^{+i theta_bond(x)} with theta the sum of the model reference phase and
//! the gauge phase on that bond; the conjugate term carries e^{-i theta}.
//! Flipping this convention only reflects phi -> -phi.

use crate::basis::{apply_hop, FockBasis, FockState};
use crate::model::{FluxAssignment, RingModel, SPINS, UP};
use crate::{FluxRingError, Result};
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct SparseHermitian {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    /// Off-diagonal values, row-compressed, columns ascending within a row.
    pub values: Vec<Complex64>,
    /// Diagonal, stored separately and always real.
    pub diag: Vec<f64>,
}

impl SparseHermitian {
    pub fn nnz_off_diagonal(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for i in 0..self.dim {
            let mut acc = Complex64::new(self.diag[i], 0.0) * x[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    /// Largest |H_ij - conj(H_ji)| over stored entries; 0 for an exactly
    /// Hermitian matrix.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut map = std::collections::HashMap::with_capacity(self.values.len());
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                map.insert((i, self.col_idx[k]), self.values[k]);
            }
        }
        let mut worst = 0.0f64;
        for (&(i, j), &v) in &map {
            let t = map
                .get(&(j, i))
                .copied()
                .unwrap_or(Complex64::new(0.0, 0.0));
            worst = worst.max((v - t.conj()).norm());
        }
        worst
    }

    /// Residual norm ||H v - e v|| for a normalized vector.
    pub fn residual(&self, e: f64, v: &[Complex64]) -> f64 {
        let mut hv = vec![Complex64::new(0.0, 0.0); self.dim];
        self.matvec(v, &mut hv);
        hv.iter()
            .zip(v)
            .map(|(a, b)| (a - e * b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Total phase on a bond for one spin: model reference phase plus gauge phase.
fn bond_phase(model: &RingModel, gauge: &FluxAssignment, spin: usize, bond: usize) -> f64 {
    model.hop_phase[spin][bond] + gauge.per_bond_phase[bond]
}

/// Hop targets of one occupied site: (to_site, bond, forward).
fn neighbors(l: usize, x: usize) -> [(usize, usize, bool); 2] {
    [
        ((x + 1) % l, x, true),
        ((x + l - 1) % l, (x + l - 1) % l, false),
    ]
}

/// Amplitude of the hop taking |from_state> to sign * |to_state>, moving one
/// `spin` particle from `x` over `bond`.
fn hop_amplitude(
    model: &RingModel,
    gauge: &FluxAssignment,
    spin: usize,
    bond: usize,
    forward: bool,
    sign: i32,
) -> Complex64 {
    let theta = bond_phase(model, gauge, spin, bond);
    let phase = if forward { theta } else { -theta };
    Complex64::from_polar(model.hop_magnitude[spin][bond], phase) * sign as f64
}

fn diagonal_energy(model: &RingModel, st: &FockState) -> f64 {
    let mut e = 0.0;
    let mut doubles = st.double_mask();
    while doubles != 0 {
        let x = doubles.trailing_zeros() as usize;
        doubles &= doubles - 1;
        match model.interaction[x] {
            crate::model::Interaction::Finite(u) => e += u,
            // Projected sites never appear doubly occupied in a valid basis.
            crate::model::Interaction::Infinite => unreachable!("projected double occupancy"),
        }
    }
    for s in SPINS {
        let mask = if s == UP { st.up_mask } else { st.down_mask };
        let mut m = mask;
        while m != 0 {
            let x = m.trailing_zeros() as usize;
            m &= m - 1;
            e += model.potential[s][x];
        }
    }
    e
}

/// Assemble the sector Hamiltonian. Row i holds H_ij = conj(amplitude of the
/// hop i -> j), so the matrix is Hermitian by construction of the two hop
/// directions.
pub fn build_hamiltonian(
    model: &RingModel,
    gauge: &FluxAssignment,
    basis: &FockBasis,
) -> Result<SparseHermitian> {
    if model.length != basis.sector.length {
        return Err(FluxRingError::DimensionMismatch {
            got: basis.sector.length,
            expected: model.length,
        });
    }
    let l = model.length;
    let proj = basis.sector.projected_sites;
    let dim = basis.dim();
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    let mut diag = Vec::with_capacity(dim);
    let mut row: Vec<(usize, Complex64)> = Vec::new();
    row_ptr.push(0);
    for i in 0..dim {
        let st = basis.state(i);
        row.clear();
        for spin in SPINS {
            let mask = if spin == UP { st.up_mask } else { st.down_mask };
            let mut m = mask;
            while m != 0 {
                let x = m.trailing_zeros() as usize;
                m &= m - 1;
                for (to, bond, forward) in neighbors(l, x) {
                    if let Some((new, sign)) = apply_hop(st, spin, x, to, proj) {
                        let j = basis.rank(&new)?;
                        let amp = hop_amplitude(model, gauge, spin, bond, forward, sign);
                        row.push((j, amp.conj()));
                    }
                }
            }
        }
        row.sort_by_key(|&(j, _)| j);
        for &(j, v) in &row {
            col_idx.push(j);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
        diag.push(diagonal_energy(model, &st));
    }
    Ok(SparseHermitian {
        dim,
        row_ptr,
        col_idx,
        values,
        diag,
    })
}

/// Replace every off-diagonal entry by minus its modulus, keeping the
/// diagonal. The result's spectrum lower-bounds the original's ground energy
/// and is independent of the gauge.
pub fn build_all_negative(h: &SparseHermitian) -> SparseHermitian {
    SparseHermitian {
        dim: h.dim,
        row_ptr: h.row_ptr.clone(),
        col_idx: h.col_idx.clone(),
        values: h.values.iter().map(|v| Complex64::new(-v.norm(), 0.0)).collect(),
        diag: h.diag.clone(),
    }
}

/// Single element <x|H|y> without assembling the matrix.
pub fn matrix_element(
    model: &RingModel,
    gauge: &FluxAssignment,
    basis: &FockBasis,
    x: &FockState,
    y: &FockState,
) -> Result<Complex64> {
    basis.rank(x)?;
    basis.rank(y)?;
    if x == y {
        return Ok(Complex64::new(diagonal_energy(model, y), 0.0));
    }
    let l = model.length;
    let proj = basis.sector.projected_sites;
    for spin in SPINS {
        let (xm, ym) = if spin == UP {
            (x.up_mask, y.up_mask)
        } else {
            (x.down_mask, y.down_mask)
        };
        let (xo, yo) = if spin == UP {
            (x.down_mask, y.down_mask)
        } else {
            (x.up_mask, y.up_mask)
        };
        if xo != yo {
            continue;
        }
        let moved = xm ^ ym;
        if moved.count_ones() != 2 {
            continue;
        }
        let from = (ym & moved).trailing_zeros() as usize;
        let to = (xm & moved).trailing_zeros() as usize;
        let (bond, forward) = if to == (from + 1) % l {
            (from, true)
        } else if from == (to + 1) % l {
            (to, false)
        } else {
            continue;
        };
        if let Some((new, sign)) = apply_hop(*y, spin, from, to, proj) {
            debug_assert_eq!(new, *x);
            // <x|H|y> is exactly the amplitude of the hop y -> x.
            return Ok(hop_amplitude(model, gauge, spin, bond, forward, sign));
        }
    }
    Ok(Complex64::new(0.0, 0.0))
}
