//! Binary CSS pair `(H_X, H_Z)` obtained by replacing each `F_q` label with an
//! `e × e` companion block: `A(γ)` in `H_X` and `A^T(δ)` in `H_Z`.
//!
//! Matrices are kept in block-label form. Bit vectors over the `n = ePL` qubits are
//! handled as `PL` segments of `e` bits; bit `k` of segment `j` is qubit `je + k`.

use thiserror::Error;

use crate::extend::ExtendedPair;
use crate::gf2e::{BitMatrixE, FieldElem, FieldTables, Side};
use crate::protograph::COLUMN_WEIGHT;
use crate::sparse::SparseBinary;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BinImageError {
    #[error("label exponent {exponent} is outside Z_{modulus}")]
    LabelRange { exponent: u32, modulus: usize },
    #[error("{what} has {got} segments, expected {expected}")]
    Length { what: &'static str, got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeParams {
    pub e: u32,
    pub q: usize,
    pub j: usize,
    pub l: usize,
    pub p: usize,
    pub poly: String,
}

impl CodeParams {
    /// `1 - 2J/L`.
    pub fn rate(&self) -> f64 {
        1.0 - (2 * self.j) as f64 / self.l as f64
    }

    /// Physical qubits `ePL`.
    pub fn n(&self) -> usize {
        self.e as usize * self.p * self.l
    }
}

/// The binary CSS code with its `F_q` labels.
#[derive(Debug, Clone)]
pub struct CssCode {
    params: CodeParams,
    field: FieldTables,
    ext: ExtendedPair,
    /// `A(α^i)` for `i < q - 1`
    plain: Vec<BitMatrixE>,
    /// `A^T(α^i)` for `i < q - 1`
    transposed: Vec<BitMatrixE>,
}

/// Builds the block-label binary pair from an orthogonal `F_q` pair.
pub fn expand(ext: ExtendedPair, field: &FieldTables) -> Result<CssCode, BinImageError> {
    let m = field.order() - 1;
    if let Some(&bad) = ext.lambda().iter().chain(ext.delta()).find(|&&x| x as usize >= m.max(1)) {
        return Err(BinImageError::LabelRange { exponent: bad, modulus: m });
    }
    let proto = ext.proto();
    let params = CodeParams {
        e: field.degree(),
        q: field.order(),
        j: COLUMN_WEIGHT,
        l: proto.row_weight(),
        p: proto.modulus(),
        poly: field.poly_string(),
    };
    let plain = (0..m as u32).map(|i| field.companion(FieldElem::Pow(i), Side::Plain)).collect();
    let transposed = (0..m as u32).map(|i| field.companion(FieldElem::Pow(i), Side::Transposed)).collect();
    Ok(CssCode { params, field: field.clone(), ext, plain, transposed })
}

impl CssCode {
    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn field(&self) -> &FieldTables {
        &self.field
    }

    pub fn extended(&self) -> &ExtendedPair {
        &self.ext
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn rate(&self) -> f64 {
        self.params.rate()
    }

    /// Segments per error vector, `N = PL`.
    pub fn segments(&self) -> usize {
        self.ext.proto().ncols()
    }

    /// Block rows per matrix, `M = PJ`.
    pub fn block_rows(&self) -> usize {
        self.ext.proto().nrows()
    }

    /// `A(γ)` for an exponent.
    pub fn plain_block(&self, exponent: u32) -> &BitMatrixE {
        &self.plain[exponent as usize]
    }

    /// `A^T(δ)` for an exponent.
    pub fn transposed_block(&self, exponent: u32) -> &BitMatrixE {
        &self.transposed[exponent as usize]
    }

    /// `H_Z x` per block row: `s_i = Σ_j A^T(δ_ij) x_j`.
    pub fn syndrome_s(&self, x: &[u32]) -> Result<Vec<u32>, BinImageError> {
        self.check_len("x", x)?;
        Ok((0..self.block_rows())
            .map(|i| self.ext.delta_row(i).fold(0, |acc, (c, d)| acc ^ self.transposed[d as usize].mul_vec(x[c])))
            .collect())
    }

    /// `H_X z` per block row: `t_i = Σ_j A(γ_ij) z_j`.
    pub fn syndrome_t(&self, z: &[u32]) -> Result<Vec<u32>, BinImageError> {
        self.check_len("z", z)?;
        Ok((0..self.block_rows())
            .map(|i| self.ext.gamma_row(i).fold(0, |acc, (c, g)| acc ^ self.plain[g as usize].mul_vec(z[c])))
            .collect())
    }

    /// `(s, t) = (H_Z x, H_X z)`.
    pub fn syndromes(&self, x: &[u32], z: &[u32]) -> Result<(Vec<u32>, Vec<u32>), BinImageError> {
        Ok((self.syndrome_s(x)?, self.syndrome_t(z)?))
    }

    fn check_len(&self, what: &'static str, v: &[u32]) -> Result<(), BinImageError> {
        if v.len() != self.segments() {
            return Err(BinImageError::Length { what, got: v.len(), expected: self.segments() });
        }
        Ok(())
    }

    /// Columns of binary row `r` of `H_X`.
    pub fn hx_row(&self, r: usize) -> Vec<usize> {
        let e = self.params.e as usize;
        let (i, k) = (r / e, r % e);
        let mut cols: Vec<usize> = self
            .ext
            .gamma_row(i)
            .flat_map(|(c, g)| {
                let row = self.plain[g as usize].rows()[k];
                (0..e).filter(move |b| row >> b & 1 == 1).map(move |b| c * e + b)
            })
            .collect();
        cols.sort_unstable();
        cols
    }

    /// Columns of binary row `r` of `H_Z`.
    pub fn hz_row(&self, r: usize) -> Vec<usize> {
        let e = self.params.e as usize;
        let (i, k) = (r / e, r % e);
        let mut cols: Vec<usize> = self
            .ext
            .delta_row(i)
            .flat_map(|(c, d)| {
                let row = self.transposed[d as usize].rows()[k];
                (0..e).filter(move |b| row >> b & 1 == 1).map(move |b| c * e + b)
            })
            .collect();
        cols.sort_unstable();
        cols
    }

    pub fn hx_sparse(&self) -> SparseBinary {
        let rows = (0..self.block_rows() * self.params.e as usize)
            .map(|r| self.hx_row(r).into_iter().map(|c| c as u32).collect())
            .collect();
        SparseBinary::from_rows(self.n(), rows)
    }

    pub fn hz_sparse(&self) -> SparseBinary {
        let rows = (0..self.block_rows() * self.params.e as usize)
            .map(|r| self.hz_row(r).into_iter().map(|c| c as u32).collect())
            .collect();
        SparseBinary::from_rows(self.n(), rows)
    }

    /// Entry `(r, c)` of `H_X` by applying the companion block to a unit vector.
    pub fn hx_bit(&self, r: usize, c: usize) -> bool {
        let e = self.params.e as usize;
        let (i, k, j, b) = (r / e, r % e, c / e, c % e);
        if !self.ext.proto().hx().get(i, j) {
            return false;
        }
        let g = self.ext.gamma_exponent(i, j);
        self.field.companion(FieldElem::Pow(g), Side::Plain).mul_vec(1 << b) >> k & 1 == 1
    }

    /// Entry `(r, c)` of `H_Z`, likewise.
    pub fn hz_bit(&self, r: usize, c: usize) -> bool {
        let e = self.params.e as usize;
        let (i, k, j, b) = (r / e, r % e, c / e, c % e);
        let Some((_, d)) = self.ext.delta_row(i).find(|&(cc, _)| cc == j) else { return false };
        self.field.companion(FieldElem::Pow(d), Side::Transposed).mul_vec(1 << b) >> k & 1 == 1
    }
}

/// `H_X H_Z^T = 0` over `F_2`, block by block with explicit binary products.
pub fn verify_orthogonal(code: &CssCode) -> bool {
    let proto = code.ext.proto();
    let e = code.params.e;
    let hx = proto.hx();
    for z in 0..proto.nrows() {
        let mut acc: Vec<Option<BitMatrixE>> = vec![None; proto.nrows()];
        for (c, d) in code.ext.delta_row(z) {
            let right = code.transposed[d as usize].transpose();
            for &x in hx.col(c) {
                let x = x as usize;
                let prod = code.plain[code.ext.gamma_exponent(x, c) as usize].mul(&right);
                let slot = acc[x].get_or_insert_with(|| BitMatrixE::zero(e));
                *slot = slot.add(&prod);
            }
        }
        if acc.iter().flatten().any(|m| !m.is_zero()) {
            return false;
        }
    }
    true
}

/// Packs a bit vector (one byte per bit) into `e`-bit segments.
pub fn pack_segments(bits: &[u8], e: u32) -> Vec<u32> {
    bits.chunks(e as usize)
        .map(|ch| ch.iter().enumerate().fold(0, |acc, (k, &b)| acc | ((b & 1) as u32) << k))
        .collect()
}

/// Inverse of [`pack_segments`].
pub fn unpack_segments(segs: &[u32], e: u32) -> Vec<u8> {
    segs.iter().flat_map(|&s| (0..e).map(move |k| (s >> k & 1) as u8)).collect()
}

/// Hex string of a bit vector: nibbles are most-significant-bit first, i.e. the
/// first bit is the `8` of the first digit; the tail is padded with zeros.
pub fn bits_to_hex(bits: &[u8]) -> String {
    bits.chunks(4)
        .map(|ch| {
            let v = ch.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | ((b & 1) as u32) << (3 - i));
            char::from_digit(v, 16).expect("nibble")
        })
        .collect()
}

/// Parses [`bits_to_hex`] output back into `len` bits. Padding bits must be zero.
pub fn hex_to_bits(hex: &str, len: usize) -> Result<Vec<u8>, String> {
    let hex = hex.trim();
    if hex.len() != len.div_ceil(4) {
        return Err(format!("expected {} hex digits for {len} bits, got {}", len.div_ceil(4), hex.len()));
    }
    let mut bits = Vec::with_capacity(hex.len() * 4);
    for ch in hex.chars() {
        let v = ch.to_digit(16).ok_or_else(|| format!("invalid hex digit {ch:?}"))?;
        bits.extend((0..4).map(|i| (v >> (3 - i) & 1) as u8));
    }
    if bits[len..].iter().any(|&b| b != 0) {
        return Err("nonzero padding bits".into());
    }
    bits.truncate(len);
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extend::{extend, ExtendOptions};
    use crate::gf2e::default_poly;
    use crate::protograph::{assemble, examples};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn code(e: u32, seed: u64, trivial: bool) -> CssCode {
        let f = FieldTables::new(e, &default_poly(e).unwrap()).unwrap();
        let proto = assemble(examples::p9_affine());
        let ext = extend(&proto, &f, seed, ExtendOptions { trivial }).unwrap();
        expand(ext, &f).unwrap()
    }

    #[test]
    fn expansion_is_orthogonal() {
        for seed in 0..5 {
            let c = code(3, seed, false);
            assert!(verify_orthogonal(&c));
            assert!(c.hx_sparse().orthogonal_to(&c.hz_sparse()));
            assert_eq!((c.hx_sparse().nrows(), c.n()), (54, 108));
        }
        assert!(verify_orthogonal(&code(3, 0, true)));
    }

    #[test]
    fn degree_one_field_reproduces_binary_pair() {
        let c = code(1, 0, false);
        let proto = c.extended().proto();
        assert_eq!(&c.hx_sparse(), proto.hx());
        assert_eq!(&c.hz_sparse(), proto.hz());
    }

    #[test]
    fn corrupted_block_breaks_orthogonality() {
        let c = code(3, 1, false);
        let mut delta = c.extended().delta().to_vec();
        delta[0] = (delta[0] + 1) % 7;
        let ext = ExtendedPair::from_parts(c.extended().proto().clone(), c.extended().lambda().to_vec(), delta).unwrap();
        let bad = expand(ext, c.field()).unwrap();
        assert!(!verify_orthogonal(&bad));
    }

    #[test]
    fn rows_agree_with_probes() {
        let c = code(3, 2, false);
        let (hx, hz) = (c.hx_sparse(), c.hz_sparse());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let (r, col) = (rng.gen_range(0..54), rng.gen_range(0..108));
            assert_eq!(hx.get(r, col), c.hx_bit(r, col));
            assert_eq!(hz.get(r, col), c.hz_bit(r, col));
        }
        // probes concentrated on the support
        for r in 0..54 {
            for &col in hx.row(r) {
                assert!(c.hx_bit(r, col as usize));
            }
        }
    }

    #[test]
    fn syndromes_match_sparse_products() {
        let c = code(3, 3, false);
        let (hx, hz) = (c.hx_sparse(), c.hz_sparse());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x: Vec<u8> = (0..108).map(|_| rng.gen_range(0..2)).collect();
            let z: Vec<u8> = (0..108).map(|_| rng.gen_range(0..2)).collect();
            let (s, t) = c.syndromes(&pack_segments(&x, 3), &pack_segments(&z, 3)).unwrap();
            let dot = |row: &[u32], v: &[u8]| row.iter().fold(0, |a, &col| a ^ v[col as usize]);
            let s_ref: Vec<u8> = (0..54).map(|r| dot(hz.row(r), &x)).collect();
            let t_ref: Vec<u8> = (0..54).map(|r| dot(hx.row(r), &z)).collect();
            assert_eq!(unpack_segments(&s, 3), s_ref);
            assert_eq!(unpack_segments(&t, 3), t_ref);
        }
        assert!(c.syndrome_s(&[0; 3]).is_err());
    }

    #[test]
    fn rates() {
        let mk = |l| CodeParams { e: 8, q: 256, j: 2, l, p: 32, poly: String::new() };
        assert_eq!(mk(8).rate(), 0.5);
        assert_eq!(mk(10).rate(), 0.6);
        assert_eq!(mk(16).rate(), 0.75);
        assert_eq!(mk(8).n(), 2048);
    }

    #[test]
    fn hex_round_trip() {
        let bits = vec![1, 0, 1, 1, 0, 0, 0, 1, 1];
        let h = bits_to_hex(&bits);
        assert_eq!(h, "b18");
        assert_eq!(hex_to_bits(&h, 9).unwrap(), bits);
        assert!(hex_to_bits("b19", 9).is_err());
        assert!(hex_to_bits("b1", 9).is_err());
    }
}
