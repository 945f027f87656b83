//! Homogeneous linear congruences over `Z_m` for composite `m`.
//!
//! Elimination never divides by a non-unit. Rows with a unit coefficient are
//! eliminated sparsely first; whatever is left is brought to Howell form with
//! unimodular 2×2 row transforms built from the extended gcd, so each pivot
//! equation `d·x ≡ r` is solvable whenever the later variables satisfy their own rows.

use rand::Rng;

use crate::permgrp::{gcd, mod_inverse};

#[inline]
fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

/// Extended gcd on non-negative integers: `(g, s, t)` with `s a + t b = g`.
fn xgcd(a: u64, b: u64) -> (u64, i128, i128) {
    let (mut r0, mut r1) = (a as i128, b as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 as u64, s0, t0)
}

fn to_mod(x: i128, m: u64) -> u64 {
    x.rem_euclid(m as i128) as u64
}

/// A unit `u` with `u·x ≡ gcd(x, m) (mod m)`, for `0 < x < m`.
fn normalizing_unit(x: u64, m: u64) -> u64 {
    let d = gcd(x, m);
    let mp = m / d;
    let u0 = mod_inverse((x / d) % mp, mp).expect("coprime after dividing out the gcd");
    (0..d)
        .map(|k| u0 + k * mp)
        .find(|&u| gcd(u, m) == 1)
        .expect("a unit lift always exists")
}

/// One row of a Howell form: `pivot` is the first nonzero column, holding `d | m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HowellRow {
    pub pivot: usize,
    pub d: u64,
    pub row: Vec<u64>,
}

/// Howell form of the row span of a dense matrix over `Z_m`.
pub fn howell_form(rows: &[Vec<u64>], ncols: usize, m: u64) -> Vec<HowellRow> {
    let mut a: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|&x| x % m).collect()).collect();
    let mut out_rows = 0usize;
    let mut pivots = Vec::new();
    for c in 0..ncols {
        if out_rows >= a.len() {
            break;
        }
        let r = out_rows;
        for i in r + 1..a.len() {
            let b = a[i][c];
            if b == 0 {
                continue;
            }
            let x = a[r][c];
            if x == 0 {
                a.swap(r, i);
                continue;
            }
            let (g, s, t) = xgcd(x, b);
            let (s, t) = (to_mod(s, m), to_mod(t, m));
            let (u, v) = (to_mod(-((b / g) as i128), m), (x / g) % m);
            let (lo, hi) = a.split_at_mut(i);
            let (ri, rr) = (&mut hi[0], &mut lo[r]);
            for (p, q) in rr.iter_mut().zip(ri.iter_mut()) {
                let (np, nq) = ((mulmod(s, *p, m) + mulmod(t, *q, m)) % m, (mulmod(u, *p, m) + mulmod(v, *q, m)) % m);
                *p = np;
                *q = nq;
            }
        }
        let x = a[r][c];
        if x == 0 {
            continue;
        }
        let unit = normalizing_unit(x, m);
        for p in a[r].iter_mut() {
            *p = mulmod(*p, unit, m);
        }
        let d = a[r][c];
        let pivot_row = a[r].clone();
        for k in 0..r {
            let f = a[k][c] / d;
            if f != 0 {
                for (p, &q) in a[k].iter_mut().zip(&pivot_row) {
                    *p = (*p + m - mulmod(f, q, m)) % m;
                }
            }
        }
        if d != 1 {
            let ann: Vec<u64> = pivot_row.iter().map(|&q| mulmod(m / d, q, m)).collect();
            if ann.iter().any(|&q| q != 0) {
                a.push(ann);
            }
        }
        pivots.push((c, d));
        out_rows += 1;
    }
    a.truncate(out_rows);
    a.into_iter()
        .zip(pivots)
        .map(|(row, (pivot, d))| HowellRow { pivot, d, row })
        .collect()
}

/// Sparse row: sorted `(variable, coefficient)` pairs with nonzero coefficients.
pub type SparseRow = Vec<(u32, u64)>;

/// `a + k·b` over `Z_m`.
fn axpy(a: &SparseRow, k: u64, b: &SparseRow, m: u64) -> SparseRow {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i].0 < b[j].0);
        let take_b = i >= a.len() || (j < b.len() && b[j].0 < a[i].0);
        let (v, c) = if take_a {
            i += 1;
            (a[i - 1].0, a[i - 1].1)
        } else if take_b {
            j += 1;
            (b[j - 1].0, mulmod(k, b[j - 1].1, m))
        } else {
            i += 1;
            j += 1;
            (a[i - 1].0, (a[i - 1].1 + mulmod(k, b[j - 1].1, m)) % m)
        };
        if c != 0 {
            out.push((v, c));
        }
    }
    out
}

/// Samples uniformly from the solution module of `A x ≡ 0 (mod m)`.
#[derive(Debug, Clone)]
pub struct KernelSampler {
    modulus: u64,
    nvars: usize,
    /// `x_p = Σ c·x_v`, applied in reverse order
    unit_steps: Vec<(u32, SparseRow)>,
    /// dense column -> variable
    howell_vars: Vec<u32>,
    howell: Vec<HowellRow>,
}

impl KernelSampler {
    pub fn new(modulus: u64, nvars: usize, rows: Vec<SparseRow>) -> Self {
        let m = modulus;
        let mut rows: Vec<SparseRow> = rows
            .into_iter()
            .map(|mut r| {
                r.iter_mut().for_each(|e| e.1 %= m.max(1));
                r.retain(|e| e.1 != 0);
                r.sort_unstable();
                r
            })
            .collect();
        let mut occ: Vec<Vec<u32>> = vec![Vec::new(); nvars];
        for (i, r) in rows.iter().enumerate() {
            for &(v, _) in r {
                occ[v as usize].push(i as u32);
            }
        }
        let mut finished = vec![false; rows.len()];
        let mut unit_steps = Vec::new();
        if m > 1 {
            let mut progress = true;
            while progress {
                progress = false;
                for i in 0..rows.len() {
                    if finished[i] || rows[i].is_empty() {
                        continue;
                    }
                    let Some(&(p, u)) = rows[i]
                        .iter()
                        .filter(|e| gcd(e.1, m) == 1)
                        .min_by_key(|e| occ[e.0 as usize].len())
                    else {
                        continue;
                    };
                    progress = true;
                    finished[i] = true;
                    let pivot_row = std::mem::take(&mut rows[i]);
                    let uinv = mod_inverse(u, m).expect("unit");
                    let mut users = std::mem::take(&mut occ[p as usize]);
                    users.sort_unstable();
                    users.dedup();
                    for &j in &users {
                        let j = j as usize;
                        if finished[j] {
                            continue;
                        }
                        let Ok(pos) = rows[j].binary_search_by_key(&p, |e| e.0) else { continue };
                        let k = (m - mulmod(rows[j][pos].1, uinv, m)) % m;
                        let before: Vec<u32> = rows[j].iter().map(|e| e.0).collect();
                        rows[j] = axpy(&rows[j], k, &pivot_row, m);
                        for &(v, _) in &rows[j] {
                            if before.binary_search(&v).is_err() {
                                occ[v as usize].push(j as u32);
                            }
                        }
                    }
                    let neg = (m - uinv) % m;
                    let expr: SparseRow = pivot_row
                        .iter()
                        .filter(|e| e.0 != p)
                        .map(|&(v, c)| (v, mulmod(neg, c, m)))
                        .collect();
                    unit_steps.push((p, expr));
                }
            }
        }
        let rest: Vec<&SparseRow> =
            rows.iter().zip(&finished).filter(|(r, f)| !**f && !r.is_empty()).map(|(r, _)| r).collect();
        let mut howell_vars: Vec<u32> = rest.iter().flat_map(|r| r.iter().map(|e| e.0)).collect();
        howell_vars.sort_unstable();
        howell_vars.dedup();
        let dense: Vec<Vec<u64>> = rest
            .iter()
            .map(|r| {
                let mut d = vec![0u64; howell_vars.len()];
                for &(v, c) in r.iter() {
                    d[howell_vars.binary_search(&v).expect("collected")] = c;
                }
                d
            })
            .collect();
        let howell = if m > 1 { howell_form(&dense, howell_vars.len(), m) } else { Vec::new() };
        Self { modulus, nvars, unit_steps, howell_vars, howell }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Number of variables that are sampled freely.
    pub fn free_count(&self) -> usize {
        self.nvars - self.unit_steps.len() - self.howell.len()
    }

    /// Divisors `d` of the Howell pivots; each contributes `d` choices.
    pub fn torsion(&self) -> Vec<u64> {
        self.howell.iter().map(|r| r.d).collect()
    }

    /// `m^free · Π d`, when it fits.
    pub fn solution_count(&self) -> Option<u128> {
        let mut n: u128 = 1;
        for _ in 0..self.free_count() {
            n = n.checked_mul(self.modulus as u128)?;
        }
        for d in self.torsion() {
            n = n.checked_mul(d as u128)?;
        }
        Some(n)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        let m = self.modulus;
        if m <= 1 {
            return vec![0; self.nvars];
        }
        let mut x: Vec<u64> = (0..self.nvars).map(|_| rng.gen_range(0..m)).collect();
        for hr in self.howell.iter().rev() {
            let mut r = 0u64;
            for (c, &a) in hr.row.iter().enumerate().skip(hr.pivot + 1) {
                r = (r + mulmod(a, x[self.howell_vars[c] as usize], m)) % m;
            }
            let r = (m - r) % m;
            assert_eq!(r % hr.d, 0, "Howell pivot equation must be solvable");
            let step = m / hr.d;
            x[self.howell_vars[hr.pivot] as usize] = r / hr.d + step * rng.gen_range(0..hr.d);
        }
        for (p, expr) in self.unit_steps.iter().rev() {
            x[*p as usize] = expr.iter().fold(0, |acc, &(v, c)| (acc + mulmod(c, x[v as usize], m)) % m);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn residual_zero(rows: &[SparseRow], x: &[u64], m: u64) -> bool {
        rows.iter().all(|r| r.iter().fold(0, |acc, &(v, c)| (acc + mulmod(c % m, x[v as usize], m)) % m) == 0)
    }

    fn brute_count(rows: &[SparseRow], n: usize, m: u64) -> u128 {
        let mut x = vec![0u64; n];
        let mut count = 0;
        loop {
            if residual_zero(rows, &x, m) {
                count += 1;
            }
            let mut i = 0;
            while i < n {
                x[i] += 1;
                if x[i] < m {
                    break;
                }
                x[i] = 0;
                i += 1;
            }
            if i == n {
                return count;
            }
        }
    }

    fn random_system(rng: &mut ChaCha8Rng, m: u64, n: usize, nrows: usize) -> Vec<SparseRow> {
        (0..nrows)
            .map(|_| (0..n as u32).filter_map(|v| rng.gen_bool(0.6).then(|| (v, rng.gen_range(0..m)))).collect())
            .collect()
    }

    #[test]
    fn howell_pivots_divide_modulus() {
        let rows = vec![vec![4, 6], vec![2, 8]];
        for r in howell_form(&rows, 2, 12) {
            assert_eq!(12 % r.d, 0);
            assert_eq!(r.row[r.pivot], r.d);
        }
    }

    #[test]
    fn solution_count_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &m in &[2u64, 6, 12, 15, 8] {
            for _ in 0..40 {
                let n = rng.gen_range(1..=4);
                let k = rng.gen_range(1..=4);
                let rows = random_system(&mut rng, m, n, k);
                let s = KernelSampler::new(m, n, rows.clone());
                assert_eq!(s.solution_count().unwrap(), brute_count(&rows, n, m), "m={m} rows={rows:?}");
            }
        }
    }

    #[test]
    fn samples_satisfy_original_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for &m in &[255u64, 63, 12] {
            for _ in 0..20 {
                let rows = random_system(&mut rng, m, 12, 7);
                let s = KernelSampler::new(m, 12, rows.clone());
                for _ in 0..100 {
                    assert!(residual_zero(&rows, &s.sample(&mut rng), m));
                }
            }
        }
    }

    #[test]
    fn sampling_is_uniform_on_a_torsion_system() {
        // 2x ≡ 0 (mod 4) has solutions {0, 2}
        let s = KernelSampler::new(4, 1, vec![vec![(0, 2)]]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut hits = [0usize; 4];
        for _ in 0..4000 {
            hits[s.sample(&mut rng)[0] as usize] += 1;
        }
        assert_eq!(hits[1] + hits[3], 0);
        assert!((hits[0] as i64 - 2000).abs() < 200);
    }

    #[test]
    fn trivial_modulus() {
        let s = KernelSampler::new(1, 3, vec![vec![(0, 1)]]);
        assert_eq!(s.sample(&mut ChaCha8Rng::seed_from_u64(0)), vec![0, 0, 0]);
    }
}
