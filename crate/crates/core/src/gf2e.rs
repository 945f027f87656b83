//! Arithmetic in GF(2^e) with log/antilog tables, companion matrices and the
//! two binary vector maps `v` (polynomial basis) and `w` (first column of the
//! transposed companion power).
//!
//! Elements travel in two encodings. [`FieldElem`] is the log-domain form
//! (`Zero` or `Pow(i)` meaning `α^i`). The *bit* form is the polynomial-basis
//! pattern `v(γ)` packed into a `u32`, bit `k` holding the coefficient of
//! `α^k`; field addition is XOR on bit forms.

use std::fmt;

use thiserror::Error;

/// Largest supported extension degree.
pub const MAX_DEGREE: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("extension degree {0} outside 1..={MAX_DEGREE}")]
    Degree(u32),
    #[error("polynomial has {got} coefficients, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("polynomial must have a_0 = a_e = 1")]
    EndCoefficients,
    #[error("polynomial is reducible, divisible by {factor}")]
    Reducible { factor: String },
    #[error("polynomial is not primitive: x has order {order}, expected {expected}")]
    NotPrimitive { order: usize, expected: usize },
    #[error("cannot parse polynomial bit string {0:?}")]
    Parse(String),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
}

/// A field element in log form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldElem {
    Zero,
    /// `α^i`, `i` reduced modulo `q - 1`.
    Pow(u32),
}

impl FieldElem {
    pub fn is_zero(self) -> bool {
        matches!(self, FieldElem::Zero)
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldElem::Zero => write!(f, "0"),
            FieldElem::Pow(i) => write!(f, "a^{i}"),
        }
    }
}

/// Which companion map to apply: `A(γ)` or `A^T(γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plain,
    Transposed,
}

/// Which binary vector representation to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VecRepr {
    V,
    W,
}

/// An `e × e` binary matrix. Row `r` is packed in `rows[r]`, bit `c` = entry `(r, c)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitMatrixE {
    e: u32,
    rows: Vec<u32>,
}

impl BitMatrixE {
    pub fn zero(e: u32) -> Self {
        Self { e, rows: vec![0; e as usize] }
    }

    pub fn identity(e: u32) -> Self {
        Self { e, rows: (0..e).map(|r| 1u32 << r).collect() }
    }

    /// Builds a matrix from `e` packed rows.
    pub fn from_rows(e: u32, rows: Vec<u32>) -> Self {
        assert_eq!(rows.len(), e as usize, "row count must equal e");
        let mask = low_mask(e);
        assert!(rows.iter().all(|r| r & !mask == 0), "row wider than e bits");
        Self { e, rows }
    }

    pub fn dim(&self) -> u32 {
        self.e
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r] >> c & 1 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![0u32; self.e as usize];
        for (r, &row) in self.rows.iter().enumerate() {
            for (c, out) in rows.iter_mut().enumerate() {
                *out |= (row >> c & 1) << r;
            }
        }
        Self { e: self.e, rows }
    }

    /// Matrix-vector product over F_2; `v` packs the column vector, bit `k` = entry `k`.
    pub fn mul_vec(&self, v: u32) -> u32 {
        self.rows
            .iter()
            .enumerate()
            .fold(0, |acc, (r, &row)| acc | (((row & v).count_ones() & 1) << r))
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.e, other.e);
        // row r of the product is the XOR of other's rows selected by self's row r
        let rows = self
            .rows
            .iter()
            .map(|&row| {
                other
                    .rows
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| row >> k & 1 == 1)
                    .fold(0, |acc, (_, &o)| acc ^ o)
            })
            .collect();
        Self { e: self.e, rows }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.e, other.e);
        let rows = self.rows.iter().zip(&other.rows).map(|(a, b)| a ^ b).collect();
        Self { e: self.e, rows }
    }

    /// First column as a packed vector.
    pub fn first_column(&self) -> u32 {
        self.rows.iter().enumerate().fold(0, |acc, (r, &row)| acc | ((row & 1) << r))
    }
}

impl fmt::Display for BitMatrixE {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &row) in self.rows.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            for c in 0..self.e {
                write!(f, "{}", row >> c & 1)?;
            }
        }
        Ok(())
    }
}

fn low_mask(e: u32) -> u32 {
    if e >= 32 {
        u32::MAX
    } else {
        (1u32 << e) - 1
    }
}

/// Parses a low-degree-first coefficient string, e.g. `"1011"` for `1 + x^2 + x^3`.
///
/// For the degree-8 polynomial `1 + x^2 + x^3 + x^4 + x^8` the string is `101110001`.
pub fn parse_poly(s: &str) -> Result<Vec<u8>, FieldError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(FieldError::Parse(s.to_string()));
    }
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(FieldError::Parse(s.to_string())),
        })
        .collect()
}

/// Inverse of [`parse_poly`].
pub fn poly_to_string(coeffs: &[u8]) -> String {
    coeffs.iter().map(|&c| if c != 0 { '1' } else { '0' }).collect()
}

/// A known primitive polynomial for each supported degree, low-degree first.
pub fn default_poly(e: u32) -> Option<Vec<u8>> {
    let s = match e {
        1 => "11",
        2 => "111",
        3 => "1101",
        4 => "11001",
        5 => "101001",
        6 => "1100001",
        7 => "11000001",
        8 => "101110001",
        9 => "1000100001",
        10 => "10010000001",
        11 => "101000000001",
        12 => "1100101000001",
        13 => "11011000000001",
        14 => "110000100010001",
        15 => "1100000000000001",
        16 => "11010000000010001",
        _ => return None,
    };
    Some(parse_poly(s).expect("static table"))
}

fn poly_bits(coeffs: &[u8]) -> u32 {
    coeffs.iter().enumerate().fold(0, |acc, (k, &c)| acc | (u32::from(c & 1) << k))
}

fn degree_of(p: u32) -> u32 {
    31 - p.leading_zeros()
}

fn poly_rem(mut a: u32, d: u32) -> u32 {
    let dd = degree_of(d);
    while a != 0 && degree_of(a) >= dd {
        a ^= d << (degree_of(a) - dd);
    }
    a
}

/// Smallest nontrivial divisor of degree at most `deg/2`, if any.
fn find_factor(p: u32) -> Option<u32> {
    let deg = degree_of(p);
    (2u32..(1 << (deg / 2 + 1))).find(|&d| degree_of(d) >= 1 && poly_rem(p, d) == 0)
}

/// Immutable tables for GF(2^e) with primitive element `α = x`.
#[derive(Debug, Clone)]
pub struct FieldTables {
    e: u32,
    q: usize,
    poly: Vec<u8>,
    /// bit form -> exponent; entry 0 is unused
    log: Vec<u32>,
    /// exponent -> bit form, length q - 1
    antilog: Vec<u32>,
    /// v bits -> w bits
    w_of: Vec<u32>,
    /// w bits -> v bits
    w_inv: Vec<u32>,
}

impl FieldTables {
    /// Builds the field from `a_0 … a_e` (low degree first).
    pub fn new(e: u32, poly: &[u8]) -> Result<Self, FieldError> {
        if e == 0 || e > MAX_DEGREE {
            return Err(FieldError::Degree(e));
        }
        if poly.len() != e as usize + 1 {
            return Err(FieldError::Length { got: poly.len(), expected: e as usize + 1 });
        }
        if poly[0] & 1 == 0 || poly[e as usize] & 1 == 0 {
            return Err(FieldError::EndCoefficients);
        }
        let q = 1usize << e;
        let full = poly_bits(poly);
        let mut antilog = Vec::with_capacity(q - 1);
        let mut log = vec![u32::MAX; q];
        let mut cur = 1u32;
        let mut order = 0usize;
        loop {
            if log[cur as usize] != u32::MAX {
                break;
            }
            log[cur as usize] = order as u32;
            antilog.push(cur);
            order += 1;
            cur = times_x(cur, e, full);
        }
        if order != q - 1 || cur != 1 {
            if let Some(d) = find_factor(full) {
                let bits = (0..=degree_of(d)).map(|k| (d >> k & 1) as u8).collect::<Vec<_>>();
                return Err(FieldError::Reducible { factor: poly_to_string(&bits) });
            }
            return Err(FieldError::NotPrimitive { order, expected: q - 1 });
        }

        let mut tables = Self {
            e,
            q,
            poly: poly.iter().map(|c| c & 1).collect(),
            log,
            antilog,
            w_of: Vec::new(),
            w_inv: Vec::new(),
        };
        // w(γ) bit c = entry (0, c) of A(γ) = bit 0 of v(γ α^c)
        let mut w_of = vec![0u32; q];
        for (g, slot) in w_of.iter_mut().enumerate() {
            let mut acc = 0;
            let mut prod = g as u32;
            for c in 0..e {
                acc |= (prod & 1) << c;
                prod = times_x(prod, e, full);
            }
            *slot = acc;
        }
        let mut w_inv = vec![0u32; q];
        for (g, &w) in w_of.iter().enumerate() {
            w_inv[w as usize] = g as u32;
        }
        tables.w_of = w_of;
        tables.w_inv = w_inv;
        Ok(tables)
    }

    /// Builds the field from a low-degree-first coefficient string.
    pub fn from_str_poly(e: u32, poly: &str) -> Result<Self, FieldError> {
        Self::new(e, &parse_poly(poly)?)
    }

    pub fn degree(&self) -> u32 {
        self.e
    }

    pub fn order(&self) -> usize {
        self.q
    }

    pub fn poly(&self) -> &[u8] {
        &self.poly
    }

    pub fn poly_string(&self) -> String {
        poly_to_string(&self.poly)
    }

    /// `α^i` with `i` reduced modulo `q - 1`.
    pub fn alpha_pow(&self, i: i64) -> FieldElem {
        FieldElem::Pow(i.rem_euclid(self.q as i64 - 1) as u32)
    }

    pub fn to_bits(&self, x: FieldElem) -> u32 {
        match x {
            FieldElem::Zero => 0,
            FieldElem::Pow(i) => self.antilog[i as usize % (self.q - 1)],
        }
    }

    pub fn from_bits(&self, bits: u32) -> FieldElem {
        assert!((bits as usize) < self.q, "bit pattern wider than e");
        if bits == 0 {
            FieldElem::Zero
        } else {
            FieldElem::Pow(self.log[bits as usize])
        }
    }

    /// Exponent of a nonzero bit-form element.
    pub fn log_of(&self, bits: u32) -> Option<u32> {
        (bits != 0).then(|| self.log[bits as usize])
    }

    pub fn exp_bits(&self, i: u32) -> u32 {
        self.antilog[i as usize % (self.q - 1)]
    }

    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.from_bits(self.to_bits(a) ^ self.to_bits(b))
    }

    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        match (a, b) {
            (FieldElem::Pow(i), FieldElem::Pow(j)) => {
                FieldElem::Pow(((i as u64 + j as u64) % (self.q as u64 - 1)) as u32)
            }
            _ => FieldElem::Zero,
        }
    }

    pub fn inv(&self, a: FieldElem) -> Result<FieldElem, FieldError> {
        match a {
            FieldElem::Zero => Err(FieldError::ZeroInverse),
            FieldElem::Pow(i) => Ok(self.alpha_pow(-(i as i64))),
        }
    }

    pub fn pow(&self, a: FieldElem, k: u64) -> FieldElem {
        match a {
            FieldElem::Zero if k == 0 => FieldElem::Pow(0),
            FieldElem::Zero => FieldElem::Zero,
            FieldElem::Pow(i) => {
                FieldElem::Pow(((i as u128 * k as u128) % (self.q as u128 - 1)) as u32)
            }
        }
    }

    /// Product of two bit-form elements.
    #[inline]
    pub fn mul_bits(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let s = self.log[a as usize] as usize + self.log[b as usize] as usize;
        self.antilog[s % (self.q - 1)]
    }

    /// Inverse of a nonzero bit-form element.
    pub fn inv_bits(&self, a: u32) -> u32 {
        assert!(a != 0, "zero has no inverse");
        let l = self.log[a as usize] as usize;
        self.antilog[(self.q - 1 - l) % (self.q - 1)]
    }

    /// `A(x)` or `A^T(x)`. Column `c` of `A(x)` is `v(x α^c)`.
    pub fn companion(&self, x: FieldElem, side: Side) -> BitMatrixE {
        let g = self.to_bits(x);
        let mut rows = vec![0u32; self.e as usize];
        let mut col = g;
        for c in 0..self.e {
            for (r, row) in rows.iter_mut().enumerate() {
                *row |= (col >> r & 1) << c;
            }
            col = self.mul_bits(col, self.exp_bits(1));
        }
        let plain = BitMatrixE { e: self.e, rows };
        match side {
            Side::Plain => plain,
            Side::Transposed => plain.transpose(),
        }
    }

    /// `v(x)` or `w(x)` packed into the low `e` bits.
    pub fn vec_repr(&self, x: FieldElem, repr: VecRepr) -> u32 {
        let g = self.to_bits(x);
        match repr {
            VecRepr::V => g,
            VecRepr::W => self.w_of[g as usize],
        }
    }

    /// `w` applied to a bit-form element.
    #[inline]
    pub fn w_of_bits(&self, g: u32) -> u32 {
        self.w_of[g as usize]
    }

    /// Bit-form element whose `w` image is `w`.
    #[inline]
    pub fn from_w_bits(&self, w: u32) -> u32 {
        self.w_inv[w as usize]
    }
}

#[inline]
fn times_x(cur: u32, e: u32, full_poly: u32) -> u32 {
    let next = cur << 1;
    if next >> e & 1 == 1 {
        next ^ full_poly
    } else {
        next
    }
}
