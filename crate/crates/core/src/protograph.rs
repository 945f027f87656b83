//! Orthogonal binary protograph pairs built from two arrays of commuting
//! permutations, the three admissibility conditions, girth, and a randomized
//! incremental search for admissible arrays.
//!
//! With `h = L/2`, block row `j ∈ {0, 1}` of `Ĥ_X` holds `F_{c-j}` in left
//! column block `c` and `G_{c-j}` in right column block `h + c`. Block row `k` of
//! `Ĥ_Z` holds `G_{k-c}^T` on the left and `F_{k-c}^T` on the right. All
//! subscripts are taken mod `h`. With this layout block `(j, k)` of
//! `Ĥ_X Ĥ_Z^T` is `Σ_l F_{l-j} G_{k-l} + G_{k-l} F_{l-j}`, which vanishes when
//! every `f_i` commutes with every `g_j`.

use std::fmt;
use std::sync::OnceLock;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::permgrp::{gcd, Perm, PermError};
use crate::registry::Registry;
use crate::sparse::SparseBinary;

/// Column weight of every construction in this crate.
pub const COLUMN_WEIGHT: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtoError {
    #[error("row weight L={0} must be even and at least 4")]
    RowWeight(usize),
    #[error("f has {f} entries and g has {g}; both must have L/2")]
    Lengths { f: usize, g: usize },
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error("girth target {target} must be even and within 4..={max}")]
    GirthTarget { target: usize, max: usize },
    #[error("search exhausted after {restarts} restarts: P={modulus} is likely too small for L={row_weight} at girth {target}")]
    SearchExhausted { restarts: usize, modulus: u64, row_weight: usize, target: usize },
}

/// The permutation arrays `f = (f_0, …, f_{h-1})`, `g = (g_0, …, g_{h-1})` on `Z_P`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermArrays {
    modulus: u64,
    f: Vec<Perm>,
    g: Vec<Perm>,
}

impl PermArrays {
    pub fn new(f: Vec<Perm>, g: Vec<Perm>) -> Result<Self, ProtoError> {
        if f.len() != g.len() {
            return Err(ProtoError::Lengths { f: f.len(), g: g.len() });
        }
        if f.len() < 2 {
            return Err(ProtoError::RowWeight(2 * f.len()));
        }
        let modulus = f[0].modulus();
        for p in f.iter().chain(&g) {
            if p.modulus() != modulus {
                return Err(PermError::ModulusMismatch(modulus, p.modulus()).into());
            }
        }
        Ok(Self { modulus, f, g })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Row weight `L`.
    pub fn row_weight(&self) -> usize {
        2 * self.f.len()
    }

    pub fn column_weight(&self) -> usize {
        COLUMN_WEIGHT
    }

    pub fn f(&self) -> &[Perm] {
        &self.f
    }

    pub fn g(&self) -> &[Perm] {
        &self.g
    }

    fn half(&self) -> usize {
        self.f.len()
    }

    fn as_partial(&self) -> Partial<'_> {
        Partial {
            modulus: self.modulus,
            f: self.f.iter().map(Some).collect(),
            g: self.g.iter().map(Some).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Array {
    F,
    G,
}

/// One `P × P` block of a protograph matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub array: Array,
    pub index: usize,
    pub transposed: bool,
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.array {
            Array::F => 'F',
            Array::G => 'G',
        };
        write!(f, "{name}{}{}", self.index, if self.transposed { "^T" } else { "" })
    }
}

/// A `2 × L` grid of blocks.
pub type BlockGrid = [Vec<Block>; 2];

fn hx_layout(half: usize) -> BlockGrid {
    let row = |j: usize| {
        let idx = |c: usize| (c + half - j) % half;
        (0..half)
            .map(|c| Block { array: Array::F, index: idx(c), transposed: false })
            .chain((0..half).map(|c| Block { array: Array::G, index: idx(c), transposed: false }))
            .collect()
    };
    [row(0), row(1)]
}

fn hz_layout(half: usize) -> BlockGrid {
    let row = |k: usize| {
        let idx = |c: usize| (k + half - c) % half;
        (0..half)
            .map(|c| Block { array: Array::G, index: idx(c), transposed: true })
            .chain((0..half).map(|c| Block { array: Array::F, index: idx(c), transposed: true }))
            .collect()
    };
    [row(0), row(1)]
}

/// Arrays with possibly missing entries, used during the incremental search.
struct Partial<'a> {
    modulus: u64,
    f: Vec<Option<&'a Perm>>,
    g: Vec<Option<&'a Perm>>,
}

impl Partial<'_> {
    fn get(&self, array: Array, idx: usize) -> Option<&Perm> {
        match array {
            Array::F => self.f[idx],
            Array::G => self.g[idx],
        }
    }

    /// Materializes a grid; blocks whose permutation is missing are left empty.
    fn materialize(&self, grid: &BlockGrid) -> SparseBinary {
        let p = self.modulus as usize;
        let l = grid[0].len();
        let mut rows = vec![Vec::with_capacity(l); 2 * p];
        for (j, blocks) in grid.iter().enumerate() {
            for (c, b) in blocks.iter().enumerate() {
                let Some(perm) = self.get(b.array, b.index) else { continue };
                for x in 0..p {
                    let y = perm.apply(x as u64) as usize;
                    if b.transposed {
                        rows[j * p + x].push((c * p + y) as u32);
                    } else {
                        rows[j * p + y].push((c * p + x) as u32);
                    }
                }
            }
        }
        SparseBinary::from_rows(p * l, rows)
    }

    fn condition_a_violation(&self) -> Option<(usize, usize)> {
        for (i, fi) in self.f.iter().enumerate() {
            for (j, gj) in self.g.iter().enumerate() {
                if let (Some(fi), Some(gj)) = (fi, gj) {
                    if !fi.commutes(gj).expect("equal moduli") {
                        return Some((i, j));
                    }
                }
            }
        }
        None
    }

    fn condition_b_violation(&self) -> Option<BViolation> {
        let h = self.f.len();
        let p = self.modulus;
        let mut values: Vec<(u64, usize)> = Vec::with_capacity(h);
        for k in [0i64, 1, -1] {
            // composites f_l ∘ g_{k-l} that are fully present
            let comps: Vec<(usize, &Perm, &Perm)> = (0..h)
                .filter_map(|l| {
                    let gi = (k - l as i64).rem_euclid(h as i64) as usize;
                    Some((l, self.f[l]?, self.g[gi]?))
                })
                .collect();
            if comps.len() < 2 {
                continue;
            }
            for x in 0..p {
                values.clear();
                values.extend(comps.iter().map(|(l, f, g)| (f.apply(g.apply(x)), *l)));
                values.sort_unstable();
                if let Some(w) = values.windows(2).find(|w| w[0].0 == w[1].0) {
                    return Some(BViolation { k, l: w[0].1, l_prime: w[1].1, x, value: w[0].0 });
                }
            }
        }
        None
    }

    fn girth_at_least(&self, target: usize) -> bool {
        let half = self.f.len();
        target <= 4
            || (self.materialize(&hx_layout(half)).girth_at_least(target)
                && self.materialize(&hz_layout(half)).girth_at_least(target))
    }
}

/// A tuple at which `f_l ∘ g_{k-l}(x) = f_{l'} ∘ g_{k-l'}(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BViolation {
    pub k: i64,
    pub l: usize,
    pub l_prime: usize,
    pub x: u64,
    pub value: u64,
}

impl fmt::Display for BViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "k={} l={} l'={} x={}: both composites map to {}",
            self.k, self.l, self.l_prime, self.x, self.value
        )
    }
}

/// Every `f_i` commutes with every `g_j`.
pub fn check_condition_a(arrays: &PermArrays) -> bool {
    condition_a_violation(arrays).is_none()
}

/// First non-commuting pair `(i, j)`, if any.
pub fn condition_a_violation(arrays: &PermArrays) -> Option<(usize, usize)> {
    arrays.as_partial().condition_a_violation()
}

/// For `k ∈ {0, ±1}`, `l ≠ l'` and every `x`, the composites
/// `f_l ∘ g_{k-l}(x)` and `f_{l'} ∘ g_{k-l'}(x)` differ.
pub fn check_condition_b(arrays: &PermArrays) -> bool {
    condition_b_violation(arrays).is_none()
}

pub fn condition_b_violation(arrays: &PermArrays) -> Option<BViolation> {
    arrays.as_partial().condition_b_violation()
}

/// Both Tanner graphs have girth at least `target`.
pub fn check_condition_c(arrays: &PermArrays, target: usize) -> bool {
    arrays.as_partial().girth_at_least(target)
}

/// The assembled pair `(Ĥ_X, Ĥ_Z)`, each `2P × PL`.
#[derive(Debug)]
pub struct ProtoPair {
    arrays: PermArrays,
    hx_blocks: BlockGrid,
    hz_blocks: BlockGrid,
    hx: OnceLock<SparseBinary>,
    hz: OnceLock<SparseBinary>,
}

impl Clone for ProtoPair {
    fn clone(&self) -> Self {
        assemble(self.arrays.clone())
    }
}

impl PartialEq for ProtoPair {
    fn eq(&self, other: &Self) -> bool {
        self.arrays == other.arrays
    }
}

pub fn assemble(arrays: PermArrays) -> ProtoPair {
    let half = arrays.half();
    ProtoPair {
        hx_blocks: hx_layout(half),
        hz_blocks: hz_layout(half),
        arrays,
        hx: OnceLock::new(),
        hz: OnceLock::new(),
    }
}

impl ProtoPair {
    pub fn arrays(&self) -> &PermArrays {
        &self.arrays
    }

    pub fn modulus(&self) -> usize {
        self.arrays.modulus as usize
    }

    pub fn row_weight(&self) -> usize {
        self.arrays.row_weight()
    }

    /// Number of rows `PJ` of either matrix.
    pub fn nrows(&self) -> usize {
        COLUMN_WEIGHT * self.modulus()
    }

    /// Number of columns `PL`.
    pub fn ncols(&self) -> usize {
        self.modulus() * self.row_weight()
    }

    pub fn hx_blocks(&self) -> &BlockGrid {
        &self.hx_blocks
    }

    pub fn hz_blocks(&self) -> &BlockGrid {
        &self.hz_blocks
    }

    pub fn hx(&self) -> &SparseBinary {
        self.hx.get_or_init(|| self.arrays.as_partial().materialize(&self.hx_blocks))
    }

    pub fn hz(&self) -> &SparseBinary {
        self.hz.get_or_init(|| self.arrays.as_partial().materialize(&self.hz_blocks))
    }

    pub fn is_orthogonal(&self) -> bool {
        self.hx().orthogonal_to(self.hz())
    }

    /// The permutation behind a block.
    pub fn block_perm(&self, b: &Block) -> &Perm {
        match b.array {
            Array::F => &self.arrays.f[b.index],
            Array::G => &self.arrays.g[b.index],
        }
    }

    /// Block path `0, h, 1, h + 1, …, h - 1, L - 1` that alternates between the
    /// `f` half and the `g` half. Under commutativity it closes after `L` columns.
    pub fn witness_path(&self) -> Vec<usize> {
        let h = self.row_weight() / 2;
        (0..h).flat_map(|i| [i, h + i]).collect()
    }

    /// Walks [`Self::witness_path`] in `Ĥ_X` from local column `x` of its first block.
    pub fn witness_walk(&self, x: u64) -> WitnessWalk {
        self.walk_block_path(&self.witness_path(), x)
    }

    /// Walks a closed sequence of block columns in `Ĥ_X`, alternating block rows
    /// 0, 1, starting at local column `x` of `path[0]`. Returns the visited nodes.
    pub fn walk_block_path(&self, path: &[usize], x: u64) -> WitnessWalk {
        let p = self.arrays.modulus;
        let mut cur = x;
        let mut steps = Vec::with_capacity(path.len());
        for (i, &c) in path.iter().enumerate() {
            let rb = i % 2;
            let row = self.block_perm(&self.hx_blocks[rb][c]).apply(cur);
            steps.push(((rb as u64 * p + row) as usize, (c as u64 * p + cur) as usize));
            let next_c = path[(i + 1) % path.len()];
            cur = self.block_perm(&self.hx_blocks[rb][next_c]).inverse().apply(row);
        }
        WitnessWalk { steps, end: cur, start: x }
    }
}

/// Result of [`ProtoPair::witness_walk`].
#[derive(Debug, Clone)]
pub struct WitnessWalk {
    /// `(check row, variable column)` for each of the `L` column visits.
    pub steps: Vec<(usize, usize)>,
    pub start: u64,
    pub end: u64,
}

impl WitnessWalk {
    /// The walk returns to its start through distinct nodes, i.e. it is a cycle of length `2L`.
    pub fn is_cycle(&self) -> bool {
        let mut rows: Vec<_> = self.steps.iter().map(|s| s.0).collect();
        let mut cols: Vec<_> = self.steps.iter().map(|s| s.1).collect();
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        self.start == self.end && rows.len() == self.steps.len() && cols.len() == self.steps.len()
    }

    pub fn len(&self) -> usize {
        2 * self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Shortest cycle over both Tanner graphs; `None` when both are forests.
pub fn girth(pair: &ProtoPair) -> Option<usize> {
    match (pair.hx().girth(), pair.hz().girth()) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// Proposes candidate permutations for the incremental search.
pub trait PermFamily: Send + Sync {
    fn name(&self) -> &'static str;

    /// A candidate on `Z_modulus` that commutes with every permutation in `partners`,
    /// or `None` if this draw found none.
    fn propose(&self, modulus: u64, partners: &[&Perm], rng: &mut dyn RngCore) -> Option<Perm>;
}

/// Circulant shifts `x ↦ x + b`.
#[derive(Debug, Default)]
pub struct CirculantFamily;

impl PermFamily for CirculantFamily {
    fn name(&self) -> &'static str {
        "cpm"
    }

    fn propose(&self, modulus: u64, _partners: &[&Perm], rng: &mut dyn RngCore) -> Option<Perm> {
        Perm::cpm(modulus, rng.gen_range(0..modulus)).ok()
    }
}

/// Affine maps `x ↦ ax + b`. The multiplier is drawn first (1 with probability 1/4,
/// otherwise a uniform unit); the offset is drawn among those that commute with all partners.
#[derive(Debug, Default)]
pub struct AffineFamily;

impl PermFamily for AffineFamily {
    fn name(&self) -> &'static str {
        "apm"
    }

    fn propose(&self, modulus: u64, partners: &[&Perm], rng: &mut dyn RngCore) -> Option<Perm> {
        let m = modulus;
        let a = if m <= 2 || rng.gen_bool(0.25) {
            1 % m
        } else {
            loop {
                let a = rng.gen_range(1..m);
                if gcd(a, m) == 1 {
                    break a;
                }
            }
        };
        let coeffs: Vec<(u64, u64)> = partners.iter().filter_map(|p| p.affine_coeffs()).collect();
        if coeffs.len() != partners.len() {
            return None;
        }
        // (a, b) commutes with (a2, b2) iff a·b2 + b ≡ a2·b + b2 (mod m)
        let mulmod = |x: u64, y: u64| (x as u128 * y as u128 % m as u128) as u64;
        let valid: Vec<u64> = (0..m)
            .filter(|&b| coeffs.iter().all(|&(a2, b2)| (mulmod(a, b2) + b) % m == (mulmod(a2, b) + b2) % m))
            .collect();
        if valid.is_empty() {
            return None;
        }
        Perm::apm(m, a, valid[rng.gen_range(0..valid.len())]).ok()
    }
}

pub fn perm_families() -> Registry<dyn PermFamily> {
    let mut r: Registry<dyn PermFamily> = Registry::new("permutation family");
    r.register("cpm", "circulant shifts x + b", || Box::new(CirculantFamily));
    r.register("apm", "affine maps a x + b with gcd(a, P) = 1", || Box::new(AffineFamily));
    r
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchParams {
    pub modulus: u64,
    pub row_weight: usize,
    pub girth_target: usize,
    pub max_restarts: usize,
    /// Rejected candidates tolerated for a single slot before restarting.
    pub max_rejections: usize,
}

impl SearchParams {
    pub fn new(modulus: u64, row_weight: usize, girth_target: usize) -> Self {
        Self { modulus, row_weight, girth_target, max_restarts: 100, max_rejections: 400 }
    }
}

/// Greedy incremental search: slots are filled in the order `f_0, g_0, f_1, g_1, …`,
/// keeping each candidate only if conditions (a), (b) and (c) still hold on the
/// partial arrays; a slot that exhausts its rejection budget triggers a restart.
pub fn search_arrays(params: &SearchParams, family: &dyn PermFamily, seed: u64) -> Result<PermArrays, ProtoError> {
    let l = params.row_weight;
    if l < 4 || !l.is_multiple_of(2) {
        return Err(ProtoError::RowWeight(l));
    }
    if !params.girth_target.is_multiple_of(2) || params.girth_target < 4 || params.girth_target > 2 * l {
        return Err(ProtoError::GirthTarget { target: params.girth_target, max: 2 * l });
    }
    if params.modulus == 0 {
        return Err(PermError::ZeroModulus.into());
    }
    let half = l / 2;
    let m = params.modulus;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    'restart: for _ in 0..params.max_restarts {
        let mut f: Vec<Option<Perm>> = vec![None; half];
        let mut g: Vec<Option<Perm>> = vec![None; half];
        for slot in 0..l {
            let (is_f, idx) = (slot % 2 == 0, slot / 2);
            let mut placed = false;
            for _ in 0..params.max_rejections {
                let partners: Vec<&Perm> = if is_f { g.iter().flatten().collect() } else { f.iter().flatten().collect() };
                let Some(cand) = family.propose(m, &partners, &mut rng) else { continue };
                let ok = {
                    let mut view = Partial {
                        modulus: m,
                        f: f.iter().map(Option::as_ref).collect(),
                        g: g.iter().map(Option::as_ref).collect(),
                    };
                    if is_f {
                        view.f[idx] = Some(&cand);
                    } else {
                        view.g[idx] = Some(&cand);
                    }
                    view.condition_a_violation().is_none()
                        && view.condition_b_violation().is_none()
                        && view.girth_at_least(params.girth_target)
                };
                if ok {
                    if is_f {
                        f[idx] = Some(cand);
                    } else {
                        g[idx] = Some(cand);
                    }
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'restart;
            }
        }
        let f = f.into_iter().map(|p| p.expect("filled")).collect();
        let g = g.into_iter().map(|p| p.expect("filled")).collect();
        return PermArrays::new(f, g);
    }
    Err(ProtoError::SearchExhausted {
        restarts: params.max_restarts,
        modulus: m,
        row_weight: l,
        target: params.girth_target,
    })
}

/// Arrays from the worked examples: `(P, f, g)` in text form.
pub mod examples {
    use super::*;

    fn build(p: u64, f: &[&str], g: &[&str]) -> PermArrays {
        let parse = |s: &&str| Perm::parse_with_modulus(s, p).expect("static example");
        PermArrays::new(f.iter().map(parse).collect(), g.iter().map(parse).collect()).expect("static example")
    }

    /// `P = 9`, `f = (x + 8, 7x + 7)`, `g = (x + 3, x + 6)`.
    pub fn p9_affine() -> PermArrays {
        build(9, &["cpm 8", "apm 7 7"], &["cpm 3", "cpm 6"])
    }

    /// `P = 9`, `f = (x + 1, x + 7)`, `g = (x + 1, x + 5)`.
    pub fn p9_circulant() -> PermArrays {
        build(9, &["cpm 1", "cpm 7"], &["cpm 1", "cpm 5"])
    }

    /// `P = 6300`, `L = 8` affine arrays with girth 16.
    pub fn p6300_affine() -> PermArrays {
        build(
            6300,
            &["apm 1051 2795", "apm 4201 225", "apm 1051 110", "apm 2101 1675"],
            &["apm 5041 1122", "apm 5041 4350", "apm 3781 1686", "apm 2521 2298"],
        )
    }
}
