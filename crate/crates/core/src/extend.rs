//! Lifting the binary pair `(Ĥ_X, Ĥ_Z)` to an orthogonal pair `(H_Γ, H_Δ)` over `F_q`.
//!
//! `H_Γ` labels are column-tied: the nonzero of `Ĥ_X` in column `j` and block row
//! `b` carries `γ = α^{λ_{j + b·PL}}`. The exponents `λ` solve a homogeneous system
//! over `Z_{q-1}`. `H_Δ` labels are then found row by row over `F_q`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gf2e::FieldTables;
use crate::protograph::{condition_b_violation, BViolation, ProtoPair};
use crate::zmod::{KernelSampler, SparseRow};

/// Attempts at drawing an all-nonzero `δ` row before giving up.
pub const DELTA_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtendError {
    #[error("no all-nonzero H_Δ row {z_row}: column {column} is forced to zero{}", witness_note(.witness))]
    NoNonzeroSolution { z_row: usize, column: usize, witness: Option<BViolation> },
    #[error("no all-nonzero H_Δ row {z_row} found in {attempts} draws")]
    Unlucky { z_row: usize, attempts: usize },
    #[error("H_Z row {z_row} meets an H_X row in {overlap} columns; every overlap must be 0 or 2{}", witness_note(.witness))]
    IrregularOverlap { z_row: usize, overlap: usize, witness: Option<BViolation> },
    #[error("label vector has length {got}, expected {expected}")]
    LabelLength { got: usize, expected: usize },
}

fn witness_note(w: &Option<BViolation>) -> String {
    match w {
        Some(w) => format!(" (condition (b) fails at {w})"),
        None => String::new(),
    }
}

/// Which system produced `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// The signed half-block form `[-Ĥ_Z^L | Ĥ_Z^R | Ĥ_Z^L | -Ĥ_Z^R] λ = 0`.
    Literal,
    /// One cycle-consistency row per cycle of row overlaps.
    Derived,
    /// `λ = 0` without solving anything.
    Trivial,
}

/// Sparse homogeneous system over `Z_modulus` in `2PL` unknowns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongruenceSystem {
    modulus: u64,
    nvars: usize,
    rows: Vec<SparseRow>,
    kind: SystemKind,
}

impl CongruenceSystem {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut d = vec![0; self.nvars];
                for &(v, c) in r {
                    d[v as usize] = c;
                }
                d
            })
            .collect()
    }

    /// `A λ mod m`, one entry per row.
    pub fn residual(&self, lambda: &[u32]) -> Vec<u64> {
        let m = self.modulus as u128;
        self.rows
            .iter()
            .map(|r| (r.iter().map(|&(v, c)| c as u128 * lambda[v as usize] as u128).sum::<u128>() % m) as u64)
            .collect()
    }

    pub fn is_satisfied(&self, lambda: &[u32]) -> bool {
        self.residual(lambda).iter().all(|&x| x == 0)
    }
}

fn signed(c: i64, m: u64) -> u64 {
    c.rem_euclid(m as i64) as u64
}

/// Assembles `[-Ĥ_Z^L | Ĥ_Z^R | Ĥ_Z^L | -Ĥ_Z^R]` over `Z_{q-1}`.
pub fn build_system(proto: &ProtoPair, q: usize) -> CongruenceSystem {
    let m = (q - 1) as u64;
    let pl = proto.ncols();
    let half = pl / 2;
    let rows = (0..proto.nrows())
        .map(|r| {
            let mut row: SparseRow = Vec::with_capacity(2 * proto.row_weight());
            for &c in proto.hz().row(r) {
                let c = c as usize;
                let sign = if c < half { -1 } else { 1 };
                row.push((c as u32, signed(sign, m)));
                row.push(((c + pl) as u32, signed(-sign, m)));
            }
            row.retain(|e| e.1 != 0);
            row.sort_unstable();
            row
        })
        .collect();
    CongruenceSystem { modulus: m, nvars: 2 * pl, rows, kind: SystemKind::Literal }
}

/// For each `Ĥ_Z` row, walks the cycles of its overlap graph (columns joined by
/// `Ĥ_X` rows meeting it twice) and emits `Σ (λ_{ρ,a_i} - λ_{ρ,a_{i+1}}) = 0` per cycle.
pub fn derived_system(proto: &ProtoPair, q: usize) -> Result<CongruenceSystem, ExtendError> {
    let m = (q - 1) as u64;
    let p = proto.modulus();
    let pl = proto.ncols();
    let hx = proto.hx();
    let var = |x_row: usize, col: usize| (col + (x_row / p) * pl) as u32;
    let mut rows = Vec::new();
    for r in 0..proto.nrows() {
        let support: Vec<usize> = proto.hz().row(r).iter().map(|&c| c as usize).collect();
        // partner[(k, b)] = other column shared with the block-b X row through support[k]
        let mut partner = vec![[usize::MAX; 2]; support.len()];
        for (k, &c) in support.iter().enumerate() {
            for &xr in hx.col(c) {
                let xr = xr as usize;
                let shared: Vec<usize> = hx
                    .row(xr)
                    .iter()
                    .filter_map(|&cc| support.binary_search(&(cc as usize)).ok())
                    .collect();
                if shared.len() != 2 {
                    return Err(ExtendError::IrregularOverlap {
                        z_row: r,
                        overlap: shared.len(),
                        witness: condition_b_violation(proto.arrays()),
                    });
                }
                partner[k][xr / p] = if shared[0] == k { shared[1] } else { shared[0] };
            }
        }
        let mut seen = vec![false; support.len()];
        for start in 0..support.len() {
            if seen[start] {
                continue;
            }
            let mut row: Vec<(u32, i64)> = Vec::new();
            let (mut k, mut b) = (start, 0usize);
            loop {
                seen[k] = true;
                let next = partner[k][b];
                let xr = hx.col(support[k]).iter().map(|&x| x as usize).find(|&x| x / p == b).expect("two rows per column");
                row.push((var(xr, support[k]), 1));
                row.push((var(xr, support[next]), -1));
                k = next;
                b ^= 1;
                if k == start && b == 0 {
                    break;
                }
            }
            row.sort_unstable();
            let mut merged: SparseRow = Vec::new();
            for (v, c) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == v => last.1 = (last.1 + signed(c, m)) % m.max(1),
                    _ => merged.push((v, signed(c, m.max(1)))),
                }
            }
            merged.retain(|e| e.1 != 0);
            if !merged.is_empty() {
                rows.push(merged);
            }
        }
    }
    Ok(CongruenceSystem { modulus: m, nvars: 2 * pl, rows, kind: SystemKind::Derived })
}

/// A uniformly random solution of the echelonized system.
pub fn solve_system(sys: &CongruenceSystem, seed: u64) -> Vec<u32> {
    solve_with(sys, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn solve_with<R: Rng + ?Sized>(sys: &CongruenceSystem, rng: &mut R) -> Vec<u32> {
    let sampler = KernelSampler::new(sys.modulus, sys.nvars, sys.rows.clone());
    sampler.sample(rng).into_iter().map(|x| x as u32).collect()
}

/// `H_Γ` labels on the `Ĥ_X` support.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaLabels {
    proto: ProtoPair,
    lambda: Vec<u32>,
    kind: SystemKind,
}

impl GammaLabels {
    pub fn proto(&self) -> &ProtoPair {
        &self.proto
    }

    pub fn lambda(&self) -> &[u32] {
        &self.lambda
    }

    /// Exponent of `γ` at `(row, col)` of `Ĥ_X`.
    pub fn exponent(&self, row: usize, col: usize) -> u32 {
        self.lambda[col + (row / self.proto.modulus()) * self.proto.ncols()]
    }
}

/// Places `γ = α^λ` on the `Ĥ_X` support by the column-tied rule.
pub fn lift_gamma(proto: &ProtoPair, lambda: Vec<u32>) -> Result<GammaLabels, ExtendError> {
    lift_with_kind(proto, lambda, SystemKind::Literal)
}

fn lift_with_kind(proto: &ProtoPair, lambda: Vec<u32>, kind: SystemKind) -> Result<GammaLabels, ExtendError> {
    let expected = 2 * proto.ncols();
    if lambda.len() != expected {
        return Err(ExtendError::LabelLength { got: lambda.len(), expected });
    }
    Ok(GammaLabels { proto: proto.clone(), lambda, kind })
}

/// The orthogonal `F_q` pair. `delta` holds exponents in `Ĥ_Z` row-major order
/// with columns sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPair {
    proto: ProtoPair,
    lambda: Vec<u32>,
    delta: Vec<u32>,
    kind: SystemKind,
}

impl ExtendedPair {
    pub fn from_parts(proto: ProtoPair, lambda: Vec<u32>, delta: Vec<u32>) -> Result<Self, ExtendError> {
        let expected = 2 * proto.ncols();
        if lambda.len() != expected {
            return Err(ExtendError::LabelLength { got: lambda.len(), expected });
        }
        let nnz = proto.hz().nnz();
        if delta.len() != nnz {
            return Err(ExtendError::LabelLength { got: delta.len(), expected: nnz });
        }
        Ok(Self { proto, lambda, delta, kind: SystemKind::Literal })
    }

    pub fn proto(&self) -> &ProtoPair {
        &self.proto
    }

    pub fn lambda(&self) -> &[u32] {
        &self.lambda
    }

    pub fn delta(&self) -> &[u32] {
        &self.delta
    }

    pub fn system_kind(&self) -> SystemKind {
        self.kind
    }

    pub fn gamma_exponent(&self, row: usize, col: usize) -> u32 {
        self.lambda[col + (row / self.proto.modulus()) * self.proto.ncols()]
    }

    /// `(column, γ exponent)` pairs of an `H_Γ` row.
    pub fn gamma_row(&self, row: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.proto.hx().row(row).iter().map(move |&c| (c as usize, self.gamma_exponent(row, c as usize)))
    }

    /// `(column, δ exponent)` pairs of an `H_Δ` row.
    pub fn delta_row(&self, row: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        let l = self.proto.row_weight();
        self.proto.hz().row(row).iter().zip(&self.delta[row * l..(row + 1) * l]).map(|(&c, &d)| (c as usize, d))
    }

    /// `H_Γ H_Δ^T = 0` over `F_q`, checked on overlapping row pairs.
    pub fn is_orthogonal(&self, field: &FieldTables) -> bool {
        let hx = self.proto.hx();
        let mut acc = vec![0u32; self.proto.nrows()];
        for z in 0..self.proto.nrows() {
            let mut touched = Vec::new();
            for (c, d) in self.delta_row(z) {
                for &x in hx.col(c) {
                    let x = x as usize;
                    if acc[x] == 0 {
                        touched.push(x);
                    }
                    acc[x] ^= field.exp_bits(self.gamma_exponent(x, c) + d);
                }
            }
            let bad = touched.iter().any(|&x| acc[x] != 0);
            touched.iter().for_each(|&x| acc[x] = 0);
            if bad {
                return false;
            }
        }
        true
    }
}

/// Solves `H_Γ H_Δ^T = 0` for nonzero `δ` one `Ĥ_Z` row at a time.
pub fn solve_delta(gamma: &GammaLabels, field: &FieldTables, seed: u64) -> Result<ExtendedPair, ExtendError> {
    solve_delta_with(gamma, field, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn solve_delta_with<R: Rng + ?Sized>(
    gamma: &GammaLabels,
    field: &FieldTables,
    rng: &mut R,
) -> Result<ExtendedPair, ExtendError> {
    let proto = &gamma.proto;
    let hx = proto.hx();
    let q = field.order() as u32;
    let mut delta = Vec::with_capacity(proto.hz().nnz());
    for z in 0..proto.nrows() {
        let support: Vec<usize> = proto.hz().row(z).iter().map(|&c| c as usize).collect();
        let n = support.len();
        let mut x_rows: Vec<usize> = support.iter().flat_map(|&c| hx.col(c).iter().map(|&r| r as usize)).collect();
        x_rows.sort_unstable();
        x_rows.dedup();
        let eqs: Vec<Vec<u32>> = x_rows
            .iter()
            .map(|&xr| {
                let mut row = vec![0u32; n];
                for (k, &c) in support.iter().enumerate() {
                    if hx.get(xr, c) {
                        row[k] = field.exp_bits(gamma.exponent(xr, c));
                    }
                }
                row
            })
            .collect();
        let basis = nullspace(eqs, n, field);
        if let Some(k) = (0..n).find(|&k| basis.iter().all(|v| v[k] == 0)) {
            return Err(ExtendError::NoNonzeroSolution {
                z_row: z,
                column: support[k],
                witness: condition_b_violation(proto.arrays()),
            });
        }
        let mut found = None;
        for _ in 0..DELTA_ATTEMPTS {
            let mut v = vec![0u32; n];
            for b in &basis {
                let coef = rng.gen_range(0..q);
                for (vi, &bi) in v.iter_mut().zip(b) {
                    *vi ^= field.mul_bits(coef, bi);
                }
            }
            if v.iter().all(|&x| x != 0) {
                found = Some(v);
                break;
            }
        }
        let v = found.ok_or(ExtendError::Unlucky { z_row: z, attempts: DELTA_ATTEMPTS })?;
        delta.extend(v.iter().map(|&x| field.log_of(x).expect("nonzero")));
    }
    Ok(ExtendedPair { proto: proto.clone(), lambda: gamma.lambda.clone(), delta, kind: gamma.kind })
}

/// Basis of `{x : E x = 0}` over `F_q` (bit-form entries).
fn nullspace(mut eqs: Vec<Vec<u32>>, n: usize, field: &FieldTables) -> Vec<Vec<u32>> {
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(pr) = (r..eqs.len()).find(|&i| eqs[i][c] != 0) else { continue };
        eqs.swap(r, pr);
        let inv = field.inv_bits(eqs[r][c]);
        for x in eqs[r].iter_mut() {
            *x = field.mul_bits(*x, inv);
        }
        let pivot_row = eqs[r].clone();
        for (i, row) in eqs.iter_mut().enumerate() {
            if i != r && row[c] != 0 {
                let f = row[c];
                for (x, &p) in row.iter_mut().zip(&pivot_row) {
                    *x ^= field.mul_bits(f, p);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (0..n)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![0u32; n];
            v[free] = 1;
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = eqs[i][free];
            }
            v
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExtendOptions {
    /// Use `λ = 0` and `δ = 1`, which reproduces the binary pair inside `F_q`.
    pub trivial: bool,
}

/// Full lift: solve for `λ` with the signed half-block system, confirm it against
/// the cycle-consistency rows, fall back to those rows if needed, then solve `δ`.
/// When some overlap is not exactly two columns there are no cycle rows, and the
/// `δ` solve alone decides.
pub fn extend(proto: &ProtoPair, field: &FieldTables, seed: u64, opts: ExtendOptions) -> Result<ExtendedPair, ExtendError> {
    if opts.trivial {
        return Ok(ExtendedPair {
            proto: proto.clone(),
            lambda: vec![0; 2 * proto.ncols()],
            delta: vec![0; proto.hz().nnz()],
            kind: SystemKind::Trivial,
        });
    }
    let q = field.order();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let literal = build_system(proto, q);
    let mut lambda = solve_with(&literal, &mut rng);
    let mut kind = SystemKind::Literal;
    // irregular overlaps leave only the δ solve as the arbiter
    if let Some(derived) = derived_system(proto, q).ok().filter(|d| !d.is_satisfied(&lambda)) {
        lambda = solve_with(&derived, &mut rng);
        kind = SystemKind::Derived;
    }
    let gamma = lift_with_kind(proto, lambda, kind)?;
    solve_delta_with(&gamma, field, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2e::default_poly;
    use crate::permgrp::Perm;
    use crate::protograph::{assemble, examples, search_arrays, CirculantFamily, PermArrays, SearchParams};

    fn field(e: u32) -> FieldTables {
        FieldTables::new(e, &default_poly(e).unwrap()).unwrap()
    }

    /// Dense `H_Γ H_Δ^T` over `F_q`, entry by entry.
    fn dense_product_is_zero(ext: &ExtendedPair, f: &FieldTables) -> bool {
        let proto = ext.proto();
        let (rows, cols) = (proto.nrows(), proto.ncols());
        let mut hg = vec![vec![0u32; cols]; rows];
        let mut hd = vec![vec![0u32; cols]; rows];
        for r in 0..rows {
            for (c, g) in ext.gamma_row(r) {
                hg[r][c] = f.exp_bits(g);
            }
            for (c, d) in ext.delta_row(r) {
                hd[r][c] = f.exp_bits(d);
            }
        }
        (0..rows).all(|i| {
            (0..rows).all(|j| (0..cols).fold(0, |acc, k| acc ^ f.mul_bits(hg[i][k], hd[j][k])) == 0)
        })
    }

    #[test]
    fn literal_system_shape_and_entries() {
        let proto = assemble(examples::p9_affine());
        let sys = build_system(&proto, 8);
        let dense = sys.to_dense();
        assert_eq!((dense.len(), dense[0].len()), (18, 72));
        assert!(dense.iter().flatten().all(|&x| x == 0 || x == 1 || x == 6));
        // each row touches 2L unknowns
        assert!(sys.rows().iter().all(|r| r.len() == 8));
        // no support in a cell means no entry
        let hz = proto.hz();
        for (r, row) in dense.iter().enumerate() {
            for c in 0..36 {
                if !hz.get(r, c) {
                    assert_eq!((row[c], row[c + 36]), (0, 0));
                }
            }
        }
    }

    #[test]
    fn zero_labels_solve_everything() {
        let proto = assemble(examples::p9_affine());
        let zero = vec![0; 72];
        assert!(build_system(&proto, 256).is_satisfied(&zero));
        assert!(derived_system(&proto, 256).unwrap().is_satisfied(&zero));
    }

    #[test]
    fn solve_system_residual_and_determinism() {
        let proto = assemble(examples::p9_affine());
        let sys = build_system(&proto, 256);
        for seed in 0..20 {
            let l = solve_system(&sys, seed);
            assert!(l.iter().all(|&x| x < 255));
            assert!(sys.is_satisfied(&l));
            assert_eq!(l, solve_system(&sys, seed));
        }
    }

    #[test]
    fn literal_system_agrees_with_derived_on_examples() {
        let searched = search_arrays(&SearchParams::new(128, 8, 12), &CirculantFamily, 2).unwrap();
        for arrays in [examples::p9_affine(), examples::p9_circulant(), searched] {
            let proto = assemble(arrays);
            let lit = build_system(&proto, 256);
            let der = derived_system(&proto, 256).unwrap();
            for seed in 0..10 {
                assert!(der.is_satisfied(&solve_system(&lit, seed)));
                assert!(lit.is_satisfied(&solve_system(&der, seed)));
            }
        }
    }

    #[test]
    fn lift_gamma_is_column_tied() {
        let proto = assemble(examples::p9_affine());
        let lambda: Vec<u32> = (0..72).collect();
        let g = lift_gamma(&proto, lambda).unwrap();
        for r in 0..18 {
            for &c in proto.hx().row(r) {
                let c = c as usize;
                let want = if r < 9 { c } else { c + 36 } as u32;
                assert_eq!(g.exponent(r, c), want);
            }
        }
        assert!(lift_gamma(&proto, vec![0; 71]).is_err());
    }

    #[test]
    fn zero_lambda_accepts_all_ones_delta() {
        let f = field(3);
        let proto = assemble(examples::p9_affine());
        let ext = extend(&proto, &f, 0, ExtendOptions { trivial: true }).unwrap();
        assert!(ext.is_orthogonal(&f));
        assert!(dense_product_is_zero(&ext, &f));
        assert_eq!(ext.system_kind(), SystemKind::Trivial);
    }

    #[test]
    fn random_lift_small_field_matches_dense_oracle() {
        let f = field(3);
        let proto = assemble(examples::p9_affine());
        for seed in 0..10 {
            let ext = extend(&proto, &f, seed, ExtendOptions::default()).unwrap();
            assert!(dense_product_is_zero(&ext, &f));
            assert!(ext.is_orthogonal(&f));
            assert!(ext.delta().iter().all(|&d| d < 7));
        }
    }

    #[test]
    fn end_to_end_p32_l8_e8() {
        let f = field(8);
        let arrays = search_arrays(&SearchParams::new(32, 8, 8), &CirculantFamily, 1).unwrap();
        let proto = assemble(arrays);
        for seed in 0..20 {
            let ext = extend(&proto, &f, seed, ExtendOptions::default()).unwrap();
            assert!(dense_product_is_zero(&ext, &f), "seed {seed}");
        }
    }

    #[test]
    fn solve_delta_is_deterministic() {
        let f = field(8);
        let proto = assemble(examples::p9_circulant());
        let a = extend(&proto, &f, 3, ExtendOptions::default()).unwrap();
        let b = extend(&proto, &f, 3, ExtendOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forced_zero_is_reported() {
        // a Z row whose overlap cycle has inconsistent γ ratios forces δ = 0
        let f = field(3);
        let proto = assemble(examples::p9_circulant());
        let mut lambda = vec![0u32; 72];
        lambda[0] = 1;
        let gamma = lift_gamma(&proto, lambda).unwrap();
        let err = solve_delta(&gamma, &f, 0).unwrap_err();
        assert!(matches!(err, ExtendError::NoNonzeroSolution { .. }), "{err}");
        // exhaustive check on that row: no all-nonzero δ at q = 8
        let ExtendError::NoNonzeroSolution { z_row, .. } = err else { unreachable!() };
        let support: Vec<usize> = proto.hz().row(z_row).iter().map(|&c| c as usize).collect();
        let x_rows: Vec<usize> = (0..18).filter(|&x| support.iter().any(|&c| proto.hx().get(x, c))).collect();
        let mut any = false;
        for code in 0..7u32.pow(4) {
            let d: Vec<u32> = (0..4).map(|k| f.exp_bits(code / 7u32.pow(k) % 7)).collect();
            let ok = x_rows.iter().all(|&x| {
                support.iter().zip(&d).filter(|(&c, _)| proto.hx().get(x, c)).fold(0, |acc, (&c, &dk)| {
                    acc ^ f.mul_bits(f.exp_bits(gamma.exponent(x, c)), dk)
                }) == 0
            });
            any |= ok;
        }
        assert!(!any);
    }

    #[test]
    fn identity_arrays_overlap_irregularly() {
        let id = |p| Perm::identity(p).unwrap();
        let arrays = PermArrays::new(vec![id(9), id(9)], vec![id(9), id(9)]).unwrap();
        let proto = assemble(arrays);
        let err = derived_system(&proto, 256).unwrap_err();
        let ExtendError::IrregularOverlap { witness, .. } = err else { panic!("{err}") };
        assert!(witness.is_some());
    }

    #[test]
    fn identity_arrays_still_extend() {
        // (b) fails, but every overlap has four columns, so all-ones δ already
        // cancels under λ = 0 and random λ leave a two-dimensional δ space
        let id = |p| Perm::identity(p).unwrap();
        let proto = assemble(PermArrays::new(vec![id(9), id(9)], vec![id(9), id(9)]).unwrap());
        assert!(condition_b_violation(proto.arrays()).is_some());
        for e in [2, 3, 8] {
            for seed in 0..3 {
                let ext = extend(&proto, &field(e), seed, ExtendOptions::default()).unwrap();
                assert!(ext.is_orthogonal(&field(e)));
                assert!(ext.delta().iter().all(|&d| (d as usize) < field(e).order() - 1));
            }
        }
    }
}
