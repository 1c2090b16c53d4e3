//! Ordered enumeration of fixed-(N_up, N_down) Fock states with ranking and
//! fermionic hop application.
//!
//! A state is a pair of site bitmasks, one per spin. The canonical creation
//! operator string behind a state is site-ascending with the up operator
//! before the down operator on a doubly occupied site; every sign below is
//! the parity of operators crossed when moving one operator through that
//! string. Enumeration is up-mask major, down-mask minor, both ascending as
//! integers, which makes the order stable across runs and platforms.

use crate::{FluxRingError, Result};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FockState {
    pub up_mask: u64,
    pub down_mask: u64,
}

impl FockState {
    pub fn new(up_mask: u64, down_mask: u64) -> Self {
        Self { up_mask, down_mask }
    }

    pub fn occupied(&self, spin: usize, site: usize) -> bool {
        let mask = if spin == crate::model::UP {
            self.up_mask
        } else {
            self.down_mask
        };
        mask >> site & 1 == 1
    }

    /// Sites carrying both spins.
    pub fn double_mask(&self) -> u64 {
        self.up_mask & self.down_mask
    }
}

/// Creation operators strictly before the slot (site, spin) in the canonical
/// order. Slots are ordered (0,up), (0,down), (1,up), (1,down), ...
fn ops_before(up: u64, down: u64, site: usize, spin: usize) -> u32 {
    let below = (1u64 << site) - 1;
    let mut n = (up & below).count_ones() + (down & below).count_ones();
    if spin == crate::model::DOWN {
        n += (up >> site & 1) as u32;
    }
    n
}

/// Move one particle of `spin` from `from_site` to `to_site`.
///
/// Returns the new state and the fermionic sign, or None when the move
/// annihilates: source empty, target occupied by the same spin, or the target
/// site is in `projected_sites` and would become doubly occupied.
pub fn apply_hop(
    state: FockState,
    spin: usize,
    from_site: usize,
    to_site: usize,
    projected_sites: u64,
) -> Option<(FockState, i32)> {
    let (mine, other) = if spin == crate::model::UP {
        (state.up_mask, state.down_mask)
    } else {
        (state.down_mask, state.up_mask)
    };
    let from_bit = 1u64 << from_site;
    let to_bit = 1u64 << to_site;
    if mine & from_bit == 0 || mine & to_bit != 0 {
        return None;
    }
    if projected_sites & to_bit != 0 && other & to_bit != 0 {
        return None;
    }
    let (up0, down0) = (state.up_mask, state.down_mask);
    let n1 = ops_before(up0, down0, from_site, spin);
    let moved = (mine & !from_bit) | to_bit;
    let (up1, down1) = if spin == crate::model::UP {
        (moved, down0)
    } else {
        (up0, moved)
    };
    // Count insertion crossings with the source operator already removed.
    let n2 = if spin == crate::model::UP {
        ops_before(mine & !from_bit, down0, to_site, spin)
    } else {
        ops_before(up0, mine & !from_bit, to_site, spin)
    };
    let sign = if (n1 + n2) % 2 == 0 { 1 } else { -1 };
    Some((FockState::new(up1, down1), sign))
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut num: u128 = 1;
    for i in 0..k {
        num = num * (n - i) as u128 / (i + 1) as u128;
    }
    num
}

/// Position of a k-subset bitmask in the ascending-integer enumeration of all
/// k-subset masks of an L-set (colexicographic on the support).
fn comb_rank(mask: u64) -> usize {
    let mut rank: u128 = 0;
    let mut m = mask;
    let mut i = 0usize;
    while m != 0 {
        let pos = m.trailing_zeros() as usize;
        rank += binomial(pos, i + 1);
        m &= m - 1;
        i += 1;
    }
    rank as usize
}

fn enumerate_masks(length: usize, k: usize) -> Vec<u64> {
    if k > length {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    let mut out = Vec::with_capacity(binomial(length, k) as usize);
    let limit = 1u64 << length;
    let mut v = (1u64 << k) - 1;
    while v < limit {
        out.push(v);
        // Gosper's hack: next k-bit mask in ascending order.
        let t = v | (v - 1);
        let next = (t + 1) | (((!t & t.wrapping_add(1)) - 1) >> (v.trailing_zeros() + 1));
        if next <= v {
            break;
        }
        v = next;
    }
    out
}

#[derive(Clone, Debug)]
pub struct FockBasis {
    pub sector: crate::model::Sector,
    pub states: Vec<FockState>,
    n_down_masks: usize,
    /// Direct lookup for projected sectors, where the combinadic product
    /// formula no longer indexes the filtered list.
    lookup: Option<HashMap<FockState, usize>>,
}

/// All sector states in up-major, down-minor ascending order, with states
/// doubly occupying a projected site excluded.
pub fn enumerate_basis(sector: &crate::model::Sector) -> Result<FockBasis> {
    let up_masks = enumerate_masks(sector.length, sector.n_up);
    let down_masks = enumerate_masks(sector.length, sector.n_down);
    let projected = sector.projected_sites;
    let mut states = Vec::new();
    for &u in &up_masks {
        for &d in &down_masks {
            if u & d & projected == 0 {
                states.push(FockState::new(u, d));
            }
        }
    }
    if states.is_empty() {
        return Err(FluxRingError::EmptySector);
    }
    let lookup = if projected != 0 {
        Some(
            states
                .iter()
                .enumerate()
                .map(|(i, s)| (*s, i))
                .collect::<HashMap<_, _>>(),
        )
    } else {
        None
    };
    Ok(FockBasis {
        sector: sector.clone(),
        states,
        n_down_masks: down_masks.len(),
        lookup,
    })
}

impl FockBasis {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, index: usize) -> FockState {
        self.states[index]
    }

    pub fn rank(&self, state: &FockState) -> Result<usize> {
        let idx = match &self.lookup {
            Some(map) => map.get(state).copied(),
            None => {
                let i = comb_rank(state.up_mask) * self.n_down_masks + comb_rank(state.down_mask);
                (i < self.states.len() && self.states[i] == *state).then_some(i)
            }
        };
        idx.ok_or_else(|| FluxRingError::StateNotInBasis {
            state: format!("up={:b} down={:b}", state.up_mask, state.down_mask),
        })
    }
}

/// Apply the spin-raising operator sum_x c+_{x,up} c_{x,down} to a vector,
/// writing amplitudes in the (N_up + 1, N_down - 1) basis. Every
/// down-to-up conversion happens at adjacent slots of one site, so the
/// fermionic sign is always +1.
pub fn apply_s_plus(
    vector: &[num_complex::Complex64],
    basis: &FockBasis,
    target: &FockBasis,
) -> Result<Vec<num_complex::Complex64>> {
    if vector.len() != basis.dim() {
        return Err(FluxRingError::DimensionMismatch {
            got: vector.len(),
            expected: basis.dim(),
        });
    }
    let mut out = vec![num_complex::Complex64::new(0.0, 0.0); target.dim()];
    for (i, st) in basis.states.iter().enumerate() {
        let c = vector[i];
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let movable = st.down_mask & !st.up_mask;
        let mut m = movable;
        while m != 0 {
            let x = m.trailing_zeros() as usize;
            m &= m - 1;
            let bit = 1u64 << x;
            let new = FockState::new(st.up_mask | bit, st.down_mask & !bit);
            let j = target.rank(&new)?;
            out[j] += c;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Sector, DOWN, UP};

    #[test]
    fn dims_match_binomial_products() {
        let b = enumerate_basis(&Sector::unprojected(4, 1, 1).unwrap()).unwrap();
        assert_eq!(b.dim(), 16);
        let b = enumerate_basis(&Sector::unprojected(4, 2, 2).unwrap()).unwrap();
        assert_eq!(b.dim(), 36);
        let b = enumerate_basis(&Sector::new(4, 2, 1, 0b1111).unwrap()).unwrap();
        assert_eq!(b.dim(), 12);
    }

    #[test]
    fn projected_dim_equals_brute_force_filter() {
        let full = enumerate_basis(&Sector::unprojected(4, 2, 1).unwrap()).unwrap();
        assert_eq!(full.dim(), 24);
        let kept = full
            .states
            .iter()
            .filter(|s| s.double_mask() == 0)
            .count();
        assert_eq!(kept, 12);
    }

    #[test]
    fn fully_projected_dim_formula() {
        // C(L, N_e) * C(N_e, N_up) placements of singly occupied sites.
        for (l, nu, nd) in [(4usize, 2usize, 2usize), (5, 2, 1), (6, 3, 2)] {
            let b = enumerate_basis(&Sector::new(l, nu, nd, (1 << l) - 1).unwrap()).unwrap();
            let expect = binomial(l, nu + nd) * binomial(nu + nd, nu);
            assert_eq!(b.dim() as u128, expect);
        }
    }

    #[test]
    fn empty_sector_is_an_error() {
        // Four particles on three unprojected... sites fit; force emptiness
        // with full projection and N_e > L.
        let s = Sector::new(3, 2, 2, 0b111).unwrap();
        assert!(matches!(enumerate_basis(&s), Err(FluxRingError::EmptySector)));
    }

    #[test]
    fn enumeration_is_up_major_ascending() {
        let b = enumerate_basis(&Sector::unprojected(4, 2, 1).unwrap()).unwrap();
        for w in b.states.windows(2) {
            let key0 = (w[0].up_mask, w[0].down_mask);
            let key1 = (w[1].up_mask, w[1].down_mask);
            assert!(key0 < key1);
        }
    }

    #[test]
    fn rank_inverts_enumeration() {
        for sector in [
            Sector::unprojected(5, 2, 2).unwrap(),
            Sector::new(5, 2, 1, 0b11111).unwrap(),
            Sector::new(6, 2, 2, 0b001111).unwrap(),
        ] {
            let b = enumerate_basis(&sector).unwrap();
            for i in 0..b.dim() {
                assert_eq!(b.rank(&b.state(i)).unwrap(), i);
            }
        }
    }

    #[test]
    fn rank_rejects_foreign_state() {
        let b = enumerate_basis(&Sector::unprojected(4, 1, 1).unwrap()).unwrap();
        let foreign = FockState::new(0b11, 0b1);
        assert!(b.rank(&foreign).is_err());
    }

    #[test]
    fn hop_sign_on_empty_background() {
        let st = FockState::new(0b0001, 0);
        let (new, sign) = apply_hop(st, UP, 0, 1, 0).unwrap();
        assert_eq!(new.up_mask, 0b0010);
        assert_eq!(sign, 1);
    }

    #[test]
    fn wraparound_hop_crosses_three_operators() {
        // Up at sites {1,2,3}, down at {1}; the up at site 3 hops to site 0
        // crossing up(1), down(1), up(2).
        let st = FockState::new(0b1110, 0b0010);
        let (new, sign) = apply_hop(st, UP, 3, 0, 0).unwrap();
        assert_eq!(new.up_mask, 0b0111);
        assert_eq!(new.down_mask, 0b0010);
        assert_eq!(sign, -1);
    }

    #[test]
    fn pauli_blocking_and_projection_blocking() {
        let st = FockState::new(0b0011, 0b0100);
        assert!(apply_hop(st, UP, 0, 1, 0).is_none());
        // Down hopping onto an up-occupied projected site annihilates.
        assert!(apply_hop(st, DOWN, 2, 1, 0b0010).is_none());
        // Same hop without projection is allowed.
        assert!(apply_hop(st, DOWN, 2, 1, 0).is_some());
    }

    #[test]
    fn hop_and_reverse_hop_give_identity_with_positive_sign() {
        let b = enumerate_basis(&Sector::unprojected(5, 2, 2).unwrap()).unwrap();
        for st in &b.states {
            for spin in [UP, DOWN] {
                for from in 0..5usize {
                    for to in [(from + 1) % 5, (from + 4) % 5] {
                        if let Some((mid, s1)) = apply_hop(*st, spin, from, to, 0) {
                            let (back, s2) = apply_hop(mid, spin, to, from, 0).unwrap();
                            assert_eq!(back, *st);
                            assert_eq!(s1 * s2, 1);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn s_plus_is_sign_free() {
        let sector = Sector::unprojected(4, 1, 2).unwrap();
        let b = enumerate_basis(&sector).unwrap();
        let t = enumerate_basis(&Sector::unprojected(4, 2, 1).unwrap()).unwrap();
        let mut v = vec![num_complex::Complex64::new(0.0, 0.0); b.dim()];
        let src = FockState::new(0b0001, 0b0110);
        v[b.rank(&src).unwrap()] = num_complex::Complex64::new(1.0, 0.0);
        let out = apply_s_plus(&v, &b, &t).unwrap();
        let t1 = t.rank(&FockState::new(0b0011, 0b0100)).unwrap();
        let t2 = t.rank(&FockState::new(0b0101, 0b0010)).unwrap();
        assert_eq!(out[t1], num_complex::Complex64::new(1.0, 0.0));
        assert_eq!(out[t2], num_complex::Complex64::new(1.0, 0.0));
        let total: f64 = out.iter().map(|c| c.norm_sqr()).sum();
        assert_eq!(total, 2.0);
    }
}
