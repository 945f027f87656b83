//! Check-node and channel-coupling kernels.
//!
//! A check with incoming messages `μ_k` over edge-local indices, forward maps
//! `fwd_k` into the additive group `F_2^e`, and syndrome symbol `σ` sends
//! `ν_k(a) = Σ Π_{k' ≠ k} μ_{k'}(a_{k'})` over configurations with
//! `⊕_{k'} fwd_{k'}(a_{k'}) = σ ⊕ fwd_k(a)`.

use crate::channel::PriorTable;
use crate::registry::Registry;

/// Values below this are lifted to it before normalizing.
pub const FLOOR: f64 = 1e-300;

/// Clamps round-off negatives, applies the floor and rescales to sum 1.
pub fn normalize(v: &mut [f64]) {
    let mut sum = 0.0;
    for x in v.iter_mut() {
        if *x < FLOOR {
            *x = FLOOR;
        }
        sum += *x;
    }
    let inv = 1.0 / sum;
    v.iter_mut().for_each(|x| *x *= inv);
}

/// In-place unnormalized Walsh–Hadamard transform.
pub fn wht(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1;
    if n >= 4 {
        // first two stages fused into one radix-4 pass
        for c in v.chunks_exact_mut(4) {
            let (a, b) = (c[0] + c[1], c[0] - c[1]);
            let (x, y) = (c[2] + c[3], c[2] - c[3]);
            c[0] = a + x;
            c[1] = b + y;
            c[2] = a - x;
            c[3] = b - y;
        }
        h = 4;
    }
    while h < n {
        // split halves so the butterfly loop vectorizes
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

pub trait CheckKernel: Send + Sync {
    fn name(&self) -> &'static str;

    /// `mu` and `out` hold `maps.len()` vectors of length `q`, edge after edge.
    /// `scratch` is reusable working memory.
    fn update(&self, q: usize, mu: &[f64], maps: &[&[u32]], syndrome: u32, out: &mut [f64], scratch: &mut Vec<f64>);
}

/// Transform-domain products with prefix/suffix exclusion, `O(d q log q)`.
#[derive(Debug, Default)]
pub struct WhtKernel;

impl CheckKernel for WhtKernel {
    fn name(&self) -> &'static str {
        "wht"
    }

    fn update(&self, q: usize, mu: &[f64], maps: &[&[u32]], syndrome: u32, out: &mut [f64], scratch: &mut Vec<f64>) {
        let d = maps.len();
        scratch.clear();
        scratch.resize((2 * d + 2) * q, 0.0);
        let (spec, rest) = scratch.split_at_mut(d * q);
        let (suffix, rest) = rest.split_at_mut(d * q);
        let (prefix, tmp) = rest.split_at_mut(q);
        for k in 0..d {
            let s = &mut spec[k * q..(k + 1) * q];
            for (&m, &a) in mu[k * q..(k + 1) * q].iter().zip(maps[k]) {
                s[a as usize] = m;
            }
            wht(s);
        }
        // suffix[k] = Π_{k' > k} spec[k']
        suffix[(d - 1) * q..].fill(1.0);
        for k in (0..d - 1).rev() {
            let (lo, hi) = suffix.split_at_mut((k + 1) * q);
            for ((o, &n), &sp) in lo[k * q..].iter_mut().zip(&hi[..q]).zip(&spec[(k + 1) * q..(k + 2) * q]) {
                *o = n * sp;
            }
        }
        prefix.fill(1.0);
        for k in 0..d {
            for ((t, &p), &sf) in tmp.iter_mut().zip(prefix.iter()).zip(&suffix[k * q..(k + 1) * q]) {
                *t = p * sf;
            }
            wht(tmp);
            // the 1/q of the inverse transform cancels in the normalization
            let o = &mut out[k * q..(k + 1) * q];
            for (slot, &a) in o.iter_mut().zip(maps[k]) {
                *slot = tmp[(syndrome ^ a) as usize];
            }
            normalize(o);
            for (p, &sp) in prefix.iter_mut().zip(&spec[k * q..(k + 1) * q]) {
                *p *= sp;
            }
        }
    }
}

/// XOR convolutions evaluated term by term, `O(d q^2)`.
#[derive(Debug, Default)]
pub struct DirectKernel;

fn xor_convolve(a: &[f64], b: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i ^ j] += x * y;
        }
    }
}

impl CheckKernel for DirectKernel {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn update(&self, q: usize, mu: &[f64], maps: &[&[u32]], syndrome: u32, out: &mut [f64], scratch: &mut Vec<f64>) {
        let d = maps.len();
        scratch.clear();
        scratch.resize((2 * d + 2) * q, 0.0);
        let (rho, rest) = scratch.split_at_mut(d * q);
        let (suffix, rest) = rest.split_at_mut(d * q);
        let (prefix, tmp) = rest.split_at_mut(q);
        for k in 0..d {
            for (a, &m) in mu[k * q..(k + 1) * q].iter().enumerate() {
                rho[k * q + maps[k][a] as usize] = m;
            }
        }
        // delta at 0 is the identity for XOR convolution
        let unit = |v: &mut [f64]| {
            v.fill(0.0);
            v[0] = 1.0;
        };
        unit(&mut suffix[(d - 1) * q..]);
        for k in (0..d - 1).rev() {
            let (lo, hi) = suffix.split_at_mut((k + 1) * q);
            xor_convolve(&hi[..q], &rho[(k + 1) * q..(k + 2) * q], &mut lo[k * q..]);
        }
        unit(prefix);
        for k in 0..d {
            xor_convolve(prefix, &suffix[k * q..(k + 1) * q], tmp);
            let o = &mut out[k * q..(k + 1) * q];
            for (a, slot) in o.iter_mut().enumerate() {
                *slot = tmp[(syndrome ^ maps[k][a]) as usize];
            }
            normalize(o);
            let mut next = vec![0.0; q];
            xor_convolve(prefix, &rho[k * q..(k + 1) * q], &mut next);
            prefix.copy_from_slice(&next);
        }
    }
}

pub fn check_kernels() -> Registry<dyn CheckKernel> {
    let mut r: Registry<dyn CheckKernel> = Registry::new("check kernel");
    r.register("wht", "Walsh-Hadamard products, O(d q log q)", || Box::new(WhtKernel));
    r.register("direct", "explicit XOR convolutions, O(d q^2)", || Box::new(DirectKernel));
    r
}

/// Data shared by coupling kernels: the prior and the bit pattern of each X index.
#[derive(Debug, Clone)]
pub struct CouplingCtx {
    pub q: usize,
    pub e: u32,
    pub p_d: f64,
    /// `table[x_index * q + z_index]`
    pub table: Vec<f64>,
    /// `x_bits[x_index]`; Z indices are their own bit patterns
    pub x_bits: Vec<u32>,
}

impl CouplingCtx {
    pub fn new(prior: &PriorTable, x_bits: Vec<u32>) -> Self {
        Self { q: prior.q(), e: prior.degree(), p_d: prior.p_d(), table: prior.table().to_vec(), x_bits }
    }
}

pub trait CouplingKernel: Send + Sync {
    fn name(&self) -> &'static str;

    /// `κ^X(x) = Σ_z p(x, z) λ^Z(z)`.
    fn to_x(&self, ctx: &CouplingCtx, lam_z: &[f64], out: &mut [f64], scratch: &mut Vec<f64>);

    /// `κ^Z(z) = Σ_x p(x, z) λ^X(x)`.
    fn to_z(&self, ctx: &CouplingCtx, lam_x: &[f64], out: &mut [f64], scratch: &mut Vec<f64>);
}

/// Full `q × q` table lookup.
#[derive(Debug, Default)]
pub struct TableCoupling;

impl CouplingKernel for TableCoupling {
    fn name(&self) -> &'static str {
        "table"
    }

    fn to_x(&self, ctx: &CouplingCtx, lam_z: &[f64], out: &mut [f64], _scratch: &mut Vec<f64>) {
        let q = ctx.q;
        for (x, slot) in out.iter_mut().enumerate() {
            *slot = ctx.table[x * q..(x + 1) * q].iter().zip(lam_z).map(|(p, l)| p * l).sum();
        }
    }

    fn to_z(&self, ctx: &CouplingCtx, lam_x: &[f64], out: &mut [f64], _scratch: &mut Vec<f64>) {
        let q = ctx.q;
        out.fill(0.0);
        for (x, &l) in lam_x.iter().enumerate() {
            for (slot, p) in out.iter_mut().zip(&ctx.table[x * q..(x + 1) * q]) {
                *slot += p * l;
            }
        }
    }
}

/// The prior is a tensor power of one `2 × 2` bit kernel, so the sum factorizes
/// into `e` butterfly passes, `O(q log q)`.
#[derive(Debug, Default)]
pub struct FactorizedCoupling;

fn bit_passes(v: &mut [f64], p_d: f64) {
    let (m00, m01) = (1.0 - p_d, p_d / 3.0);
    let n = v.len();
    let mut h = 1;
    while h < n {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = m00 * x + m01 * y;
                *b = m01 * (x + y);
            }
        }
        h *= 2;
    }
}

impl CouplingKernel for FactorizedCoupling {
    fn name(&self) -> &'static str {
        "factorized"
    }

    fn to_x(&self, ctx: &CouplingCtx, lam_z: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
        scratch.clear();
        scratch.extend_from_slice(lam_z);
        bit_passes(scratch, ctx.p_d);
        for (slot, &xb) in out.iter_mut().zip(&ctx.x_bits) {
            *slot = scratch[xb as usize];
        }
    }

    fn to_z(&self, ctx: &CouplingCtx, lam_x: &[f64], out: &mut [f64], _scratch: &mut Vec<f64>) {
        for (&l, &xb) in lam_x.iter().zip(&ctx.x_bits) {
            out[xb as usize] = l;
        }
        bit_passes(out, ctx.p_d);
    }
}

pub fn coupling_kernels() -> Registry<dyn CouplingKernel> {
    let mut r: Registry<dyn CouplingKernel> = Registry::new("coupling kernel");
    r.register("factorized", "per-bit butterflies, O(q log q)", || Box::new(FactorizedCoupling));
    r.register("table", "full q x q prior table, O(q^2)", || Box::new(TableCoupling));
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2e::{default_poly, FieldTables};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// The sum over all neighbor configurations, term by term.
    fn brute(q: usize, mu: &[f64], maps: &[&[u32]], syndrome: u32) -> Vec<f64> {
        let d = maps.len();
        let mut out = vec![0.0; d * q];
        let total = q.pow(d as u32);
        for code in 0..total {
            let cfg: Vec<usize> = (0..d).map(|k| code / q.pow(k as u32) % q).collect();
            let s = cfg.iter().enumerate().fold(0u32, |acc, (k, &a)| acc ^ maps[k][a]);
            if s != syndrome {
                continue;
            }
            for k in 0..d {
                let p: f64 = (0..d).filter(|&kk| kk != k).map(|kk| mu[kk * q + cfg[kk]]).product();
                out[k * q + cfg[k]] += p;
            }
        }
        for k in 0..d {
            normalize(&mut out[k * q..(k + 1) * q]);
        }
        out
    }

    fn random_case(rng: &mut ChaCha8Rng, f: &FieldTables, d: usize) -> (Vec<f64>, Vec<Vec<u32>>, u32) {
        let q = f.order();
        let mut mu: Vec<f64> = (0..d * q).map(|_| rng.gen::<f64>()).collect();
        for k in 0..d {
            normalize(&mut mu[k * q..(k + 1) * q]);
        }
        let maps = (0..d)
            .map(|_| {
                let label = f.exp_bits(rng.gen_range(0..q as u32 - 1));
                (0..q as u32).map(|a| f.mul_bits(label, a)).collect()
            })
            .collect();
        (mu, maps, rng.gen_range(0..q as u32))
    }

    #[test]
    fn kernels_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for e in [2u32, 3, 4] {
            let f = FieldTables::new(e, &default_poly(e).unwrap()).unwrap();
            let q = f.order();
            for d in [3usize, 4] {
                for _ in 0..20 {
                    let (mu, maps, syn) = random_case(&mut rng, &f, d);
                    let refs: Vec<&[u32]> = maps.iter().map(Vec::as_slice).collect();
                    let want = brute(q, &mu, &refs, syn);
                    for kernel in [&WhtKernel as &dyn CheckKernel, &DirectKernel] {
                        let mut out = vec![0.0; d * q];
                        kernel.update(q, &mu, &refs, syn, &mut out, &mut Vec::new());
                        let dev = out.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                        assert!(dev <= 1e-10, "{} e={e} d={d} dev={dev}", kernel.name());
                    }
                }
            }
        }
    }

    #[test]
    fn degree_two_relabels() {
        let f = FieldTables::new(3, &default_poly(3).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (mu, maps, _) = random_case(&mut rng, &f, 2);
        let refs: Vec<&[u32]> = maps.iter().map(Vec::as_slice).collect();
        let mut out = vec![0.0; 16];
        WhtKernel.update(8, &mu, &refs, 0, &mut out, &mut Vec::new());
        // δ_0 a = δ_1 b forces b = fwd_1^{-1}(fwd_0(a))
        for a in 0..8 {
            let b = (0..8).find(|&b| maps[1][b] == maps[0][a]).unwrap();
            assert!((out[a] - mu[8 + b]).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_in_uniform_out() {
        let f = FieldTables::new(4, &default_poly(4).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (_, maps, syn) = random_case(&mut rng, &f, 4);
        let refs: Vec<&[u32]> = maps.iter().map(Vec::as_slice).collect();
        let mu = vec![1.0 / 16.0; 64];
        let mut out = vec![0.0; 64];
        WhtKernel.update(16, &mu, &refs, syn, &mut out, &mut Vec::new());
        assert!(out.iter().all(|&x| (x - 1.0 / 16.0).abs() < 1e-14));
    }

    #[test]
    fn couplings_agree() {
        let f = FieldTables::new(4, &default_poly(4).unwrap()).unwrap();
        let prior = PriorTable::field(0.2, &f).unwrap();
        let ctx = CouplingCtx::new(&prior, (0..16).map(|x| f.w_of_bits(x)).collect());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lam: Vec<f64> = (0..16).map(|_| rng.gen()).collect();
        for dir in 0..2 {
            let mut a = vec![0.0; 16];
            let mut b = vec![0.0; 16];
            let mut s = Vec::new();
            if dir == 0 {
                TableCoupling.to_x(&ctx, &lam, &mut a, &mut s);
                FactorizedCoupling.to_x(&ctx, &lam, &mut b, &mut s);
            } else {
                TableCoupling.to_z(&ctx, &lam, &mut a, &mut s);
                FactorizedCoupling.to_z(&ctx, &lam, &mut b, &mut s);
            }
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn point_mass_picks_prior_column() {
        let f = FieldTables::new(3, &default_poly(3).unwrap()).unwrap();
        let prior = PriorTable::field(0.1, &f).unwrap();
        let ctx = CouplingCtx::new(&prior, (0..8).map(|x| f.w_of_bits(x)).collect());
        let mut lam = vec![0.0; 8];
        lam[5] = 1.0;
        let mut out = vec![0.0; 8];
        FactorizedCoupling.to_x(&ctx, &lam, &mut out, &mut Vec::new());
        for xi in 0..8 {
            assert!((out[xi] - prior.get(xi, 5)).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_prior_gives_uniform_coupling() {
        // p_D = 3/4 makes every (x, z) pair equally likely
        let prior = PriorTable::bits(0.75, 3).unwrap();
        let ctx = CouplingCtx::new(&prior, (0..8).collect());
        let lam: Vec<f64> = (1..=8).map(f64::from).collect();
        let mut out = vec![0.0; 8];
        TableCoupling.to_x(&ctx, &lam, &mut out, &mut Vec::new());
        normalize(&mut out);
        assert!(out.iter().all(|&x| (x - 0.125).abs() < 1e-15));
    }
}
