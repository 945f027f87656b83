//! Permutations of `Z_P` in general, circulant (`x + b`) and affine (`ax + b`) form.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermError {
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("point {x} outside Z_{modulus}")]
    OutOfRange { x: u64, modulus: u64 },
    #[error("moduli differ: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("affine multiplier {a} is not a unit modulo {modulus}")]
    NotUnit { a: u64, modulus: u64 },
    #[error("image table is not a bijection on Z_{0}")]
    NotBijective(u64),
    #[error("cannot parse permutation {0:?}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PermKind {
    General(Vec<u64>),
    Cpm { b: u64 },
    Apm { a: u64, b: u64 },
}

/// A bijection of `{0, …, P-1}`. Its matrix `F` has a one at `(f(c), c)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Perm {
    modulus: u64,
    kind: PermKind,
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `a` modulo `m`, when it exists.
pub(crate) fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quo = old_r / r;
        (old_r, r) = (r, old_r - quo * r);
        (old_s, s) = (s, old_s - quo * s);
    }
    (old_r == 1).then(|| old_s.rem_euclid(m as i128) as u64)
}

#[inline]
fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

impl Perm {
    pub fn identity(modulus: u64) -> Result<Self, PermError> {
        Self::cpm(modulus, 0)
    }

    pub fn cpm(modulus: u64, b: u64) -> Result<Self, PermError> {
        if modulus == 0 {
            return Err(PermError::ZeroModulus);
        }
        Ok(Self { modulus, kind: PermKind::Cpm { b: b % modulus } })
    }

    pub fn apm(modulus: u64, a: u64, b: u64) -> Result<Self, PermError> {
        if modulus == 0 {
            return Err(PermError::ZeroModulus);
        }
        let a = a % modulus;
        if gcd(a, modulus) != 1 && modulus != 1 {
            return Err(PermError::NotUnit { a, modulus });
        }
        Ok(Self { modulus, kind: PermKind::Apm { a, b: b % modulus } })
    }

    pub fn general(image: Vec<u64>) -> Result<Self, PermError> {
        let modulus = image.len() as u64;
        if modulus == 0 {
            return Err(PermError::ZeroModulus);
        }
        let mut seen = vec![false; image.len()];
        for &y in &image {
            if y >= modulus || std::mem::replace(&mut seen[y as usize], true) {
                return Err(PermError::NotBijective(modulus));
            }
        }
        Ok(Self { modulus, kind: PermKind::General(image) })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn kind(&self) -> &PermKind {
        &self.kind
    }

    /// `(a, b)` when the permutation is affine (a circulant is affine with `a = 1`).
    pub fn affine_coeffs(&self) -> Option<(u64, u64)> {
        match self.kind {
            PermKind::Cpm { b } => Some((1 % self.modulus, b)),
            PermKind::Apm { a, b } => Some((a, b)),
            PermKind::General(_) => None,
        }
    }

    pub fn eval(&self, x: u64) -> Result<u64, PermError> {
        if x >= self.modulus {
            return Err(PermError::OutOfRange { x, modulus: self.modulus });
        }
        Ok(self.apply(x))
    }

    /// Unchecked evaluation; `x` must lie in `Z_P`.
    #[inline]
    pub fn apply(&self, x: u64) -> u64 {
        match &self.kind {
            PermKind::Cpm { b } => (x + b) % self.modulus,
            PermKind::Apm { a, b } => (mulmod(*a, x, self.modulus) + b) % self.modulus,
            PermKind::General(img) => img[x as usize],
        }
    }

    /// Image table `[p(0), …, p(P-1)]`.
    pub fn table(&self) -> Vec<u64> {
        (0..self.modulus).map(|x| self.apply(x)).collect()
    }

    /// `self ∘ other`, i.e. `x ↦ self(other(x))`.
    pub fn compose(&self, other: &Perm) -> Result<Perm, PermError> {
        if self.modulus != other.modulus {
            return Err(PermError::ModulusMismatch(self.modulus, other.modulus));
        }
        let m = self.modulus;
        let kind = match (&self.kind, &other.kind) {
            (PermKind::Cpm { b: b1 }, PermKind::Cpm { b: b2 }) => PermKind::Cpm { b: (b1 + b2) % m },
            _ => match (self.affine_coeffs(), other.affine_coeffs()) {
                (Some((a1, b1)), Some((a2, b2))) => {
                    PermKind::Apm { a: mulmod(a1, a2, m), b: (mulmod(a1, b2, m) + b1) % m }
                }
                _ => PermKind::General((0..m).map(|x| self.apply(other.apply(x))).collect()),
            },
        };
        Ok(Perm { modulus: m, kind })
    }

    pub fn inverse(&self) -> Perm {
        let m = self.modulus;
        let kind = match &self.kind {
            PermKind::Cpm { b } => PermKind::Cpm { b: (m - b) % m },
            PermKind::Apm { a, b } => {
                let ai = mod_inverse(*a, m).expect("apm multiplier is a unit");
                PermKind::Apm { a: ai, b: mulmod(ai, (m - b) % m, m) }
            }
            PermKind::General(img) => {
                let mut inv = vec![0; img.len()];
                for (x, &y) in img.iter().enumerate() {
                    inv[y as usize] = x as u64;
                }
                PermKind::General(inv)
            }
        };
        Perm { modulus: m, kind }
    }

    /// Exhaustive check of `self(other(x)) == other(self(x))` over all of `Z_P`.
    pub fn commutes(&self, other: &Perm) -> Result<bool, PermError> {
        if self.modulus != other.modulus {
            return Err(PermError::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok((0..self.modulus).all(|x| self.apply(other.apply(x)) == other.apply(self.apply(x))))
    }

    /// Pointwise equality of the two maps.
    pub fn same_map(&self, other: &Perm) -> bool {
        self.modulus == other.modulus && (0..self.modulus).all(|x| self.apply(x) == other.apply(x))
    }

    pub fn is_identity(&self) -> bool {
        (0..self.modulus).all(|x| self.apply(x) == x)
    }

    /// Parses the text form with the given modulus (`cpm b`, `apm a b`, `gen i0 … i(P-1)`).
    pub fn parse_with_modulus(s: &str, modulus: u64) -> Result<Perm, PermError> {
        let p: Perm = s.parse()?;
        match p.kind {
            PermKind::Cpm { b } => Perm::cpm(modulus, b),
            PermKind::Apm { a, b } => Perm::apm(modulus, a, b),
            PermKind::General(_) if p.modulus == modulus => Ok(p),
            PermKind::General(_) => Err(PermError::ModulusMismatch(p.modulus, modulus)),
        }
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PermKind::Cpm { b } => write!(f, "cpm {b}"),
            PermKind::Apm { a, b } => write!(f, "apm {a} {b}"),
            PermKind::General(img) => {
                write!(f, "gen")?;
                for y in img {
                    write!(f, " {y}")?;
                }
                Ok(())
            }
        }
    }
}

/// Parsing without a modulus keeps coefficients unreduced and uses `u64::MAX`
/// as a placeholder modulus for `cpm`/`apm`; use [`Perm::parse_with_modulus`].
impl FromStr for Perm {
    type Err = PermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PermError::Parse(s.to_string());
        let mut it = s.split_whitespace();
        let tag = it.next().ok_or_else(bad)?;
        let nums = it.map(|t| t.parse::<u64>().map_err(|_| bad())).collect::<Result<Vec<_>, _>>()?;
        match (tag, nums.as_slice()) {
            ("cpm", [b]) => Ok(Perm { modulus: u64::MAX, kind: PermKind::Cpm { b: *b } }),
            ("apm", [a, b]) => Ok(Perm { modulus: u64::MAX, kind: PermKind::Apm { a: *a, b: *b } }),
            ("gen", img) if !img.is_empty() => Perm::general(img.to_vec()),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eval_examples() {
        assert_eq!(Perm::cpm(9, 3).unwrap().eval(8).unwrap(), 2);
        assert_eq!(Perm::apm(9, 7, 7).unwrap().eval(1).unwrap(), 5);
        assert_eq!(Perm::identity(5).unwrap().eval(4).unwrap(), 4);
        assert_eq!(
            Perm::cpm(9, 3).unwrap().eval(9),
            Err(PermError::OutOfRange { x: 9, modulus: 9 })
        );
    }

    #[test]
    fn compose_examples() {
        let c3 = Perm::cpm(9, 3).unwrap();
        let c6 = Perm::cpm(9, 6).unwrap();
        assert!(c3.compose(&c6).unwrap().is_identity());
        let a77 = Perm::apm(9, 7, 7).unwrap();
        let got = a77.compose(&c3).unwrap();
        assert_eq!(got.kind(), &PermKind::Apm { a: 7, b: 1 });
        // pointwise oracle
        for x in 0..9 {
            assert_eq!(got.apply(x), (7 * ((x + 3) % 9) + 7) % 9);
        }
        let c8 = Perm::cpm(9, 8).unwrap();
        assert_eq!(c8.compose(&c8).unwrap().kind(), &PermKind::Cpm { b: 7 });
        assert_eq!(
            c8.compose(&Perm::cpm(5, 1).unwrap()),
            Err(PermError::ModulusMismatch(9, 5))
        );
    }

    #[test]
    fn commutes_examples() {
        let c3 = Perm::cpm(9, 3).unwrap();
        assert!(c3.commutes(&Perm::cpm(9, 6).unwrap()).unwrap());
        assert!(Perm::apm(9, 7, 7).unwrap().commutes(&c3).unwrap());
        assert!(!Perm::apm(5, 2, 0).unwrap().commutes(&Perm::apm(5, 1, 1).unwrap()).unwrap());
    }

    #[test]
    fn rejects_non_units_and_non_bijections() {
        assert_eq!(Perm::apm(9, 3, 0), Err(PermError::NotUnit { a: 3, modulus: 9 }));
        assert_eq!(Perm::general(vec![0, 0, 1]), Err(PermError::NotBijective(3)));
        // a single point is fine
        assert!(Perm::apm(1, 0, 0).unwrap().is_identity());
    }

    #[test]
    fn text_form_round_trips() {
        for p in [
            Perm::cpm(9, 8).unwrap(),
            Perm::apm(6300, 1051, 2795).unwrap(),
            Perm::general(vec![2, 0, 1]).unwrap(),
        ] {
            let back = Perm::parse_with_modulus(&p.to_string(), p.modulus()).unwrap();
            assert_eq!(back, p);
        }
        assert!(Perm::parse_with_modulus("apm 3 1", 9).is_err());
        assert!("cpm".parse::<Perm>().is_err());
    }

    fn random_perm(m: u64, rng: &mut impl rand::Rng) -> Perm {
        match rng.gen_range(0..3) {
            0 => Perm::cpm(m, rng.gen_range(0..m)).unwrap(),
            1 => loop {
                let a = rng.gen_range(1..m.max(2));
                if gcd(a, m) == 1 {
                    break Perm::apm(m, a, rng.gen_range(0..m)).unwrap();
                }
            },
            _ => {
                let mut img: Vec<u64> = (0..m).collect();
                for i in (1..img.len()).rev() {
                    img.swap(i, rng.gen_range(0..=i));
                }
                Perm::general(img).unwrap()
            }
        }
    }

    #[test]
    fn inverse_composes_to_identity() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for m in [9u64, 32, 6300] {
            for _ in 0..500 {
                let p = random_perm(m, &mut rng);
                assert!(p.compose(&p.inverse()).unwrap().is_identity(), "{p}");
                assert!(p.inverse().compose(&p).unwrap().is_identity(), "{p}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn affine_closure_matches_pointwise(m in 2u64..200, a1 in 1u64..200, b1 in 0u64..200, a2 in 1u64..200, b2 in 0u64..200) {
            let unit = |mut a: u64| { a %= m; while gcd(a, m) != 1 { a = (a + 1) % m; } a };
            let (a1, a2) = (unit(a1), unit(a2));
            let p1 = Perm::apm(m, a1, b1).unwrap();
            let p2 = Perm::apm(m, a2, b2).unwrap();
            let c = p1.compose(&p2).unwrap();
            let is_affine = matches!(c.kind(), PermKind::Apm { .. });
            prop_assert!(is_affine);
            for x in 0..m {
                prop_assert_eq!(c.apply(x), p1.apply(p2.apply(x)));
            }
        }
    }

    #[test]
    fn circulants_always_commute() {
        for m in 1..=64u64 {
            for b1 in 0..m {
                for b2 in (0..m).step_by(5) {
                    assert!(Perm::cpm(m, b1).unwrap().commutes(&Perm::cpm(m, b2).unwrap()).unwrap());
                }
            }
        }
    }
}
