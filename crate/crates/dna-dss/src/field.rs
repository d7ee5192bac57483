//! Exact arithmetic and linear algebra over GF(q), q = p^e a prime power up to 2^16.
//!
//! Prime fields use plain modular arithmetic. Extension fields encode an element
//! as the base-p value of its coefficient vector and multiply through log/antilog
//! tables built once at construction, so encoder and analyzer hot loops get O(1)
//! multiplication. Fields are immutable after construction and safe to share
//! across threads; all operations are pure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported field order.
pub const MAX_ORDER: u64 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("field order {0} exceeds 2^16")]
    OrderTooLarge(u64),
    #[error("modulus polynomial is reducible over GF({p})")]
    ReducibleModulus { p: u64 },
    #[error("modulus must be a monic degree-{expected} polynomial with coefficients in [0, {p}), got {got:?}")]
    BadModulus { expected: u32, p: u64, got: Vec<u64> },
    #[error("no default modulus for GF({p}^{e}); supply one explicitly")]
    NoDefaultModulus { p: u64, e: u32 },
    #[error("degree must be at least 1")]
    ZeroDegree,
    #[error("element value {0} out of range for field of order {1}")]
    ElementOutOfRange(u64, u32),
    #[error("matrix data length {len} does not match {rows}x{cols}")]
    DimensionMismatch { len: usize, rows: usize, cols: usize },
}

/// A field element in canonical reduced form: an integer in [0, q) encoding the
/// coefficient vector in base p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fe(pub u16);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Default moduli: the lexicographically smallest monic irreducible polynomial of
/// each degree (smallest base-p value of the non-leading coefficients), for
/// p in {2, 3, 5, 7} and every degree with p^e <= 2^16, e <= 8. Coefficients are
/// ascending, leading coefficient included.
const DEFAULT_MODULI: &[(u64, u32, &[u64])] = &[
    (2, 2, &[1, 1, 1]),
    (2, 3, &[1, 1, 0, 1]),
    (2, 4, &[1, 1, 0, 0, 1]),
    (2, 5, &[1, 0, 1, 0, 0, 1]),
    (2, 6, &[1, 1, 0, 0, 0, 0, 1]),
    (2, 7, &[1, 1, 0, 0, 0, 0, 0, 1]),
    (2, 8, &[1, 1, 0, 1, 1, 0, 0, 0, 1]),
    (3, 2, &[1, 0, 1]),
    (3, 3, &[1, 2, 0, 1]),
    (3, 4, &[2, 1, 0, 0, 1]),
    (3, 5, &[1, 2, 0, 0, 0, 1]),
    (3, 6, &[2, 1, 0, 0, 0, 0, 1]),
    (3, 7, &[2, 0, 1, 0, 0, 0, 0, 1]),
    (3, 8, &[2, 0, 1, 0, 0, 0, 0, 0, 1]),
    (5, 2, &[2, 0, 1]),
    (5, 3, &[1, 1, 0, 1]),
    (5, 4, &[2, 0, 0, 0, 1]),
    (5, 5, &[1, 4, 0, 0, 0, 1]),
    (5, 6, &[2, 1, 0, 0, 0, 0, 1]),
    (7, 2, &[1, 0, 1]),
    (7, 3, &[2, 0, 0, 1]),
    (7, 4, &[1, 1, 0, 0, 1]),
    (7, 5, &[3, 1, 0, 0, 0, 1]),
];

/// Field description as it appears in code-spec files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u64,
    pub e: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<u64>>,
}

/// GF(p^e) with all derived tables. Construct with [`FiniteField::new`].
#[derive(Debug)]
pub struct FiniteField {
    p: u32,
    e: u32,
    q: u32,
    /// Modulus coefficients, ascending, length e+1, monic. Empty for e = 1.
    modulus: Vec<u16>,
    /// exp[i] = g^i for i in 0..2(q-1), so products of two logs index directly.
    exp: Vec<u16>,
    /// log[x] for x in 1..q; log[0] is a sentinel and never read.
    log: Vec<u16>,
    /// A fixed primitive element: the table generator for e > 1, the smallest
    /// primitive root mod p for e = 1.
    generator: u16,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Remainder of `num / den` over GF(p); both ascending coefficient vectors,
/// `den` monic.
fn poly_rem(num: &[u16], den: &[u16], p: u32) -> Vec<u16> {
    let mut num: Vec<u16> = num.to_vec();
    while let Some(&lead) = num.last() {
        if lead == 0 {
            num.pop();
            continue;
        }
        if num.len() < den.len() {
            break;
        }
        let shift = num.len() - den.len();
        let c = u32::from(lead);
        for (i, &dc) in den.iter().enumerate() {
            let cur = u32::from(num[shift + i]);
            num[shift + i] = ((cur + p * p - c * u32::from(dc)) % p) as u16;
        }
    }
    num
}

fn poly_is_zero(poly: &[u16]) -> bool {
    poly.iter().all(|&c| c == 0)
}

/// Irreducibility over GF(p) by trial division with every monic polynomial of
/// degree 1..=e/2 (a reducible degree-e polynomial has a factor in that range).
fn is_irreducible(modulus: &[u16], p: u32, e: u32) -> bool {
    for d in 1..=e / 2 {
        let mut den = vec![0u16; d as usize + 1];
        den[d as usize] = 1;
        for v in 0..u64::from(p).pow(d) {
            let mut x = v;
            for c in den.iter_mut().take(d as usize) {
                *c = (x % u64::from(p)) as u16;
                x /= u64::from(p);
            }
            if poly_is_zero(&poly_rem(modulus, &den, p)) {
                return false;
            }
        }
    }
    true
}

impl FiniteField {
    /// Build GF(p^e). For e > 1 the modulus must be a monic irreducible
    /// polynomial of degree e (ascending coefficients); when omitted, the
    /// default from the shipped table is used.
    pub fn new(p: u64, e: u32, modulus: Option<&[u64]>) -> Result<FiniteField, FieldError> {
        if e == 0 {
            return Err(FieldError::ZeroDegree);
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        let q = p.checked_pow(e).ok_or(FieldError::OrderTooLarge(u64::MAX))?;
        if q > MAX_ORDER {
            return Err(FieldError::OrderTooLarge(q));
        }
        let (p32, q32) = (p as u32, q as u32);

        if e == 1 {
            let field = FiniteField {
                p: p32,
                e,
                q: q32,
                modulus: Vec::new(),
                exp: Vec::new(),
                log: Vec::new(),
                generator: prime_primitive_root(p32),
            };
            field.debug_axiom_spot_check();
            return Ok(field);
        }

        let coeffs: Vec<u64> = match modulus {
            Some(m) => m.to_vec(),
            None => DEFAULT_MODULI
                .iter()
                .find(|&&(tp, te, _)| tp == p && te == e)
                .map(|&(_, _, m)| m.to_vec())
                .ok_or(FieldError::NoDefaultModulus { p, e })?,
        };
        if coeffs.len() != e as usize + 1
            || coeffs.last() != Some(&1)
            || coeffs.iter().any(|&c| c >= p)
        {
            return Err(FieldError::BadModulus {
                expected: e,
                p,
                got: coeffs,
            });
        }
        let modulus: Vec<u16> = coeffs.iter().map(|&c| c as u16).collect();
        if !is_irreducible(&modulus, p32, e) {
            return Err(FieldError::ReducibleModulus { p });
        }

        let mut field = FiniteField {
            p: p32,
            e,
            q: q32,
            modulus,
            exp: Vec::new(),
            log: Vec::new(),
            generator: 0,
        };
        field.build_log_tables();
        field.debug_axiom_spot_check();
        Ok(field)
    }

    pub fn from_spec(spec: &FieldSpec) -> Result<FiniteField, FieldError> {
        FiniteField::new(spec.p, spec.e, spec.modulus.as_deref())
    }

    pub fn spec(&self) -> FieldSpec {
        FieldSpec {
            p: u64::from(self.p),
            e: self.e,
            modulus: if self.e > 1 {
                Some(self.modulus.iter().map(|&c| u64::from(c)).collect())
            } else {
                None
            },
        }
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.e
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    /// The fixed primitive element used for evaluation-point sequences.
    pub fn primitive_element(&self) -> Fe {
        Fe(self.generator)
    }

    pub fn element(&self, value: u64) -> Result<Fe, FieldError> {
        if value < u64::from(self.q) {
            Ok(Fe(value as u16))
        } else {
            Err(FieldError::ElementOutOfRange(value, self.q))
        }
    }

    /// Same (p, e, modulus) defines the same field.
    pub fn same_field(&self, other: &FiniteField) -> bool {
        self.p == other.p && self.e == other.e && self.modulus == other.modulus
    }

    /// Slow polynomial multiplication, used to bootstrap the log tables.
    fn poly_mul(&self, a: u16, b: u16) -> u16 {
        let e = self.e as usize;
        let (mut da, mut db) = ([0u32; 17], [0u32; 17]);
        let mut prod = [0u32; 33];
        let (mut x, mut y) = (u32::from(a), u32::from(b));
        for i in 0..e {
            da[i] = x % self.p;
            db[i] = y % self.p;
            x /= self.p;
            y /= self.p;
        }
        for i in 0..e {
            if da[i] == 0 {
                continue;
            }
            for j in 0..e {
                prod[i + j] = (prod[i + j] + da[i] * db[j]) % self.p;
            }
        }
        // reduce mod modulus, high degree first
        for d in (e..2 * e - 1).rev() {
            let c = prod[d];
            if c == 0 {
                continue;
            }
            prod[d] = 0;
            // x^d = x^{d-e} * x^e = -sum_i m_i x^{d-e+i}
            for (i, &mc) in self.modulus.iter().enumerate().take(e) {
                let t = d - e + i;
                prod[t] = (prod[t] + c * (self.p - u32::from(mc))) % self.p;
            }
        }
        let mut out = 0u32;
        for i in (0..e).rev() {
            out = out * self.p + prod[i];
        }
        out as u16
    }

    fn build_log_tables(&mut self) {
        let q = self.q as usize;
        // smallest element (by canonical value) whose multiplicative order is q-1
        'candidates: for g in 2..self.q {
            let mut exp = Vec::with_capacity(2 * (q - 1));
            let mut log = vec![0u16; q];
            let mut cur: u16 = 1;
            for i in 0..(q - 1) {
                if cur == 1 && i > 0 {
                    continue 'candidates; // order divides i < q-1
                }
                exp.push(cur);
                log[cur as usize] = i as u16;
                cur = self.poly_mul(cur, g as u16);
            }
            if cur != 1 {
                continue;
            }
            exp.extend_from_within(..);
            self.exp = exp;
            self.log = log;
            self.generator = g as u16;
            return;
        }
        unreachable!("GF(p^e) with irreducible modulus always has a primitive element");
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        if self.e == 1 {
            return Fe(((u32::from(a.0) + u32::from(b.0)) % self.p) as u16);
        }
        if self.p == 2 {
            return Fe(a.0 ^ b.0);
        }
        self.digitwise(a, b, |x, y| (x + y) % self.p)
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        if self.e == 1 {
            return Fe(((u32::from(a.0) + self.p - u32::from(b.0)) % self.p) as u16);
        }
        if self.p == 2 {
            return Fe(a.0 ^ b.0);
        }
        self.digitwise(a, b, |x, y| (x + self.p - y) % self.p)
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        self.sub(Fe::ZERO, a)
    }

    #[inline]
    fn digitwise(&self, a: Fe, b: Fe, f: impl Fn(u32, u32) -> u32) -> Fe {
        let (mut x, mut y) = (u32::from(a.0), u32::from(b.0));
        let mut out = 0u32;
        let mut scale = 1u32;
        for _ in 0..self.e {
            out += f(x % self.p, y % self.p) * scale;
            scale *= self.p;
            x /= self.p;
            y /= self.p;
        }
        Fe(out as u16)
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a.0 == 0 || b.0 == 0 {
            return Fe::ZERO;
        }
        if self.e == 1 {
            return Fe(((u32::from(a.0) * u32::from(b.0)) % self.p) as u16);
        }
        let idx = usize::from(self.log[a.0 as usize]) + usize::from(self.log[b.0 as usize]);
        Fe(self.exp[idx])
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self, a: Fe) -> Fe {
        assert!(!a.is_zero(), "inverse of zero");
        if self.e == 1 {
            return self.pow(a, u64::from(self.p) - 2);
        }
        let l = usize::from(self.log[a.0 as usize]);
        Fe(self.exp[(self.q as usize - 1 - l) % (self.q as usize - 1)])
    }

    pub fn div(&self, a: Fe, b: Fe) -> Fe {
        self.mul(a, self.inv(b))
    }

    pub fn pow(&self, a: Fe, mut k: u64) -> Fe {
        let mut base = a;
        let mut acc = Fe::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    /// Construction-time sanity pass over a few sampled triples (debug builds).
    fn debug_axiom_spot_check(&self) {
        if !cfg!(debug_assertions) {
            return;
        }
        let mut state = 0x9e3779b97f4a7c15u64 ^ u64::from(self.q);
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            Fe((state % u64::from(self.q)) as u16)
        };
        for _ in 0..32 {
            let (a, b, c) = (next(), next(), next());
            debug_assert_eq!(self.add(self.add(a, b), c), self.add(a, self.add(b, c)));
            debug_assert_eq!(self.mul(self.mul(a, b), c), self.mul(a, self.mul(b, c)));
            debug_assert_eq!(
                self.mul(a, self.add(b, c)),
                self.add(self.mul(a, b), self.mul(a, c))
            );
            debug_assert_eq!(self.add(a, self.neg(a)), Fe::ZERO);
            if !a.is_zero() {
                debug_assert_eq!(self.mul(a, self.inv(a)), Fe::ONE);
            }
        }
    }
}

fn prime_primitive_root(p: u32) -> u16 {
    if p == 2 {
        return 1;
    }
    let order = u64::from(p) - 1;
    let mut factors = Vec::new();
    let mut m = order;
    let mut d = 2u64;
    while d * d <= m {
        if m % d == 0 {
            factors.push(d);
            while m % d == 0 {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    'g: for g in 2..p {
        for &f in &factors {
            if pow_mod(u64::from(g), order / f, u64::from(p)) == 1 {
                continue 'g;
            }
        }
        return g as u16;
    }
    unreachable!("every prime field has a primitive root")
}

fn pow_mod(mut base: u64, mut k: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while k > 0 {
        if k & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        k >>= 1;
    }
    acc
}

/// Dense row-major matrix over a finite field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Fe>,
}

impl FieldMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Fe>) -> Result<FieldMatrix, FieldError> {
        if data.len() != rows * cols {
            return Err(FieldError::DimensionMismatch {
                len: data.len(),
                rows,
                cols,
            });
        }
        Ok(FieldMatrix { rows, cols, data })
    }

    pub fn zero(rows: usize, cols: usize) -> FieldMatrix {
        FieldMatrix {
            rows,
            cols,
            data: vec![Fe::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> FieldMatrix {
        let mut m = FieldMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, Fe::ONE);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Fe {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Fe) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[Fe] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Fe] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Result of Gaussian elimination: reduced rows plus pivot bookkeeping.
struct Echelon {
    reduced: FieldMatrix,
    rhs: Vec<Fe>,
    pivot_cols: Vec<usize>,
    consistent: bool,
}

impl FiniteField {
    /// Row-reduce `a` (and the optional right-hand side alongside it) to reduced
    /// row echelon form. Exact arithmetic, first-nonzero pivoting.
    fn eliminate(&self, a: &FieldMatrix, rhs: Option<&[Fe]>) -> Echelon {
        let mut m = a.clone();
        let mut r: Vec<Fe> = rhs.map(|v| v.to_vec()).unwrap_or_default();
        let mut pivot_cols = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            let Some(pr) = (row..m.rows).find(|&i| !m.get(i, col).is_zero()) else {
                continue;
            };
            if pr != row {
                for c in 0..m.cols {
                    let (x, y) = (m.get(row, c), m.get(pr, c));
                    m.set(row, c, y);
                    m.set(pr, c, x);
                }
                if !r.is_empty() {
                    r.swap(row, pr);
                }
            }
            let inv = self.inv(m.get(row, col));
            for c in col..m.cols {
                m.set(row, c, self.mul(m.get(row, c), inv));
            }
            if !r.is_empty() {
                r[row] = self.mul(r[row], inv);
            }
            for i in 0..m.rows {
                if i == row {
                    continue;
                }
                let f = m.get(i, col);
                if f.is_zero() {
                    continue;
                }
                for c in col..m.cols {
                    let v = self.sub(m.get(i, c), self.mul(f, m.get(row, c)));
                    m.set(i, c, v);
                }
                if !r.is_empty() {
                    r[i] = self.sub(r[i], self.mul(f, r[row]));
                }
            }
            pivot_cols.push(col);
            row += 1;
            if row == m.rows {
                break;
            }
        }
        let consistent = r.is_empty() || (row..m.rows).all(|i| r[i].is_zero());
        Echelon {
            reduced: m,
            rhs: r,
            pivot_cols,
            consistent,
        }
    }

    /// Rank of `a` together with a basis of its right null space: every returned
    /// vector v satisfies A v = 0, and rank + kernel dimension = cols.
    pub fn rank_and_kernel(&self, a: &FieldMatrix) -> (usize, Vec<Vec<Fe>>) {
        let ech = self.eliminate(a, None);
        let rank = ech.pivot_cols.len();
        let mut kernel = Vec::with_capacity(a.cols - rank);
        let mut is_pivot = vec![false; a.cols];
        for &c in &ech.pivot_cols {
            is_pivot[c] = true;
        }
        for free in (0..a.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![Fe::ZERO; a.cols];
            v[free] = Fe::ONE;
            for (row, &pc) in ech.pivot_cols.iter().enumerate() {
                v[pc] = self.neg(ech.reduced.get(row, free));
            }
            debug_assert!((0..a.rows).all(|r| {
                let mut acc = Fe::ZERO;
                for c in 0..a.cols {
                    acc = self.add(acc, self.mul(a.get(r, c), v[c]));
                }
                acc.is_zero()
            }));
            kernel.push(v);
        }
        (rank, kernel)
    }

    pub fn rank(&self, a: &FieldMatrix) -> usize {
        self.eliminate(a, None).pivot_cols.len()
    }

    /// Solve A x = rhs. Returns a particular solution and a kernel basis, or
    /// `None` when the system is inconsistent.
    pub fn solve(&self, a: &FieldMatrix, rhs: &[Fe]) -> Option<(Vec<Fe>, Vec<Vec<Fe>>)> {
        assert_eq!(a.rows, rhs.len(), "rhs length must match row count");
        let ech = self.eliminate(a, Some(rhs));
        if !ech.consistent {
            return None;
        }
        let mut x = vec![Fe::ZERO; a.cols];
        for (row, &pc) in ech.pivot_cols.iter().enumerate() {
            x[pc] = ech.rhs[row];
        }
        let (_, kernel) = self.rank_and_kernel(a);
        Some((x, kernel))
    }

    /// Row vector times matrix, the encoder path: v (1 x rows) * m (rows x cols).
    pub fn row_times_matrix(&self, v: &[Fe], m: &FieldMatrix) -> Vec<Fe> {
        assert_eq!(v.len(), m.rows, "vector length must match matrix rows");
        let mut out = vec![Fe::ZERO; m.cols];
        for (r, &vr) in v.iter().enumerate() {
            if vr.is_zero() {
                continue;
            }
            for c in 0..m.cols {
                out[c] = self.add(out[c], self.mul(vr, m.get(r, c)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf3_arithmetic() {
        let f = FiniteField::new(3, 1, None).unwrap();
        assert_eq!(f.add(Fe(2), Fe(2)), Fe(1));
        assert_eq!(f.mul(Fe(2), Fe(2)), Fe(1));
    }

    #[test]
    fn gf4_x_squared_is_x_plus_one() {
        // x^2 + x + 1: the element x has encoding 2, x+1 has encoding 3
        let f = FiniteField::new(2, 2, Some(&[1, 1, 1])).unwrap();
        assert_eq!(f.mul(Fe(2), Fe(2)), Fe(3));
    }

    #[test]
    fn four_is_not_prime() {
        assert_eq!(
            FiniteField::new(4, 1, None).unwrap_err(),
            FieldError::NotPrime(4)
        );
    }

    #[test]
    fn order_cap() {
        assert!(matches!(
            FiniteField::new(2, 17, Some(&[1; 18])).unwrap_err(),
            FieldError::OrderTooLarge(_)
        ));
    }

    #[test]
    fn reducible_modulus_rejected() {
        // x^2 + 1 = (x+1)^2 over GF(2)
        assert_eq!(
            FiniteField::new(2, 2, Some(&[1, 0, 1])).unwrap_err(),
            FieldError::ReducibleModulus { p: 2 }
        );
    }

    #[test]
    fn default_modulus_missing_outside_table() {
        assert!(matches!(
            FiniteField::new(2, 9, None).unwrap_err(),
            FieldError::NoDefaultModulus { p: 2, e: 9 }
        ));
    }

    fn axioms_exhaustive(f: &FiniteField) {
        let q = f.order() as u16;
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    let (a, b, c) = (Fe(a), Fe(b), Fe(c));
                    assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                }
                let (a, b) = (Fe(a), Fe(b));
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
            }
            let a = Fe(a);
            assert_eq!(f.add(a, f.neg(a)), Fe::ZERO);
            if !a.is_zero() {
                assert_eq!(f.mul(a, f.inv(a)), Fe::ONE);
            }
        }
    }

    #[test]
    fn axioms_small_fields_exhaustive() {
        for (p, e) in [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2), (13, 1), (2, 4)] {
            axioms_exhaustive(&FiniteField::new(p, e, None).unwrap());
        }
    }

    #[test]
    fn axioms_large_fields_sampled() {
        let mut state = 0xdeadbeefcafef00du64;
        let mut next = |q: u32| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            Fe((state % u64::from(q)) as u16)
        };
        for (p, e) in [(2u64, 8u32), (2, 16), (3, 5), (5, 4), (7, 3), (251, 1), (65521, 1)] {
            // x^16 + x^5 + x^3 + x + 1, the smallest irreducible of degree 16;
            // outside the default table so it is passed explicitly
            let modulus_16 = [1u64, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1];
            let f = if (p, e) == (2, 16) {
                FiniteField::new(2, 16, Some(&modulus_16)).unwrap()
            } else {
                FiniteField::new(p, e, None).unwrap()
            };
            let q = f.order();
            for _ in 0..10_000 {
                let (a, b, c) = (next(q), next(q), next(q));
                assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                assert_eq!(f.add(a, f.neg(a)), Fe::ZERO);
                if !a.is_zero() {
                    assert_eq!(f.mul(a, f.inv(a)), Fe::ONE);
                }
            }
        }
    }

    #[test]
    fn default_moduli_are_smallest_irreducible() {
        // regenerate the shipped table by ascending search with the same
        // irreducibility test
        for &(p, e, expected) in DEFAULT_MODULI {
            let mut found = None;
            'search: for v in 0..u64::from(p as u32).pow(e) {
                let mut coeffs = vec![0u16; e as usize + 1];
                let mut x = v;
                for c in coeffs.iter_mut().take(e as usize) {
                    *c = (x % p) as u16;
                    x /= p;
                }
                coeffs[e as usize] = 1;
                if is_irreducible(&coeffs, p as u32, e) {
                    found = Some(coeffs);
                    break 'search;
                }
            }
            let found = found.expect("an irreducible polynomial exists for every degree");
            let expected: Vec<u16> = expected.iter().map(|&c| c as u16).collect();
            assert_eq!(found, expected, "default modulus mismatch for GF({p}^{e})");
        }
    }

    #[test]
    fn rank_kernel_identity() {
        let f = FiniteField::new(3, 1, None).unwrap();
        let (rank, kernel) = f.rank_and_kernel(&FieldMatrix::identity(3));
        assert_eq!(rank, 3);
        assert!(kernel.is_empty());
    }

    #[test]
    fn rank_kernel_zero_matrix() {
        let f = FiniteField::new(3, 1, None).unwrap();
        let (rank, kernel) = f.rank_and_kernel(&FieldMatrix::zero(2, 2));
        assert_eq!(rank, 0);
        assert_eq!(kernel.len(), 2);
    }

    #[test]
    fn rank_kernel_rank_one() {
        // [[1,2],[2,4]] over GF(5): rank 1, kernel spanned by (2, -1) = (2, 4)
        let f = FiniteField::new(5, 1, None).unwrap();
        let a = FieldMatrix::new(2, 2, vec![Fe(1), Fe(2), Fe(2), Fe(4)]).unwrap();
        let (rank, kernel) = f.rank_and_kernel(&a);
        assert_eq!(rank, 1);
        assert_eq!(kernel.len(), 1);
        let v = &kernel[0];
        // up to scaling: v must be a nonzero multiple of (2, 4)
        assert!(!v[0].is_zero() || !v[1].is_zero());
        let (x, y) = (v[0], v[1]);
        assert_eq!(f.mul(x, Fe(4)), f.mul(y, Fe(2)), "kernel not collinear with (2,4)");
    }

    /// Brute-force null space: all q^cols vectors.
    fn kernel_by_enumeration(f: &FiniteField, a: &FieldMatrix) -> Vec<Vec<Fe>> {
        let q = u64::from(f.order());
        let cols = a.cols();
        let mut out = Vec::new();
        for idx in 0..q.pow(cols as u32) {
            let mut v = Vec::with_capacity(cols);
            let mut x = idx;
            for _ in 0..cols {
                v.push(Fe((x % q) as u16));
                x /= q;
            }
            let ok = (0..a.rows()).all(|r| {
                let mut acc = Fe::ZERO;
                for c in 0..cols {
                    acc = f.add(acc, f.mul(a.get(r, c), v[c]));
                }
                acc.is_zero()
            });
            if ok {
                out.push(v);
            }
        }
        out
    }

    #[test]
    fn kernel_matches_enumeration() {
        let mut state = 0x1234_5678_9abc_def0u64;
        let mut next = |q: u32| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            Fe((state % u64::from(q)) as u16)
        };
        for (p, e, rows, cols) in [
            (2u64, 1u32, 3usize, 4usize),
            (3, 1, 3, 3),
            (5, 1, 2, 4),
            (2, 2, 3, 3),
            (7, 1, 4, 2),
        ] {
            let f = FiniteField::new(p, e, None).unwrap();
            for _ in 0..20 {
                let data: Vec<Fe> = (0..rows * cols).map(|_| next(f.order())).collect();
                let a = FieldMatrix::new(rows, cols, data).unwrap();
                let (rank, kernel) = f.rank_and_kernel(&a);
                assert_eq!(rank + kernel.len(), cols);
                let all = kernel_by_enumeration(&f, &a);
                assert_eq!(
                    all.len() as u64,
                    u64::from(f.order()).pow(kernel.len() as u32),
                    "kernel dimension disagrees with enumeration"
                );
                for v in &kernel {
                    assert!(all.contains(v));
                }
                // basis independence: rank of the stacked basis equals its size
                if !kernel.is_empty() {
                    let k = kernel.len();
                    let stacked =
                        FieldMatrix::new(k, cols, kernel.iter().flatten().copied().collect())
                            .unwrap();
                    assert_eq!(f.rank(&stacked), k);
                }
            }
        }
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let f = FiniteField::new(3, 1, None).unwrap();
        // x + y = 1, 2x + 2y = 2: consistent, one pivot
        let a = FieldMatrix::new(2, 2, vec![Fe(1), Fe(1), Fe(2), Fe(2)]).unwrap();
        let (x, kernel) = f.solve(&a, &[Fe(1), Fe(2)]).unwrap();
        assert_eq!(f.add(x[0], x[1]), Fe(1));
        assert_eq!(kernel.len(), 1);
        // x + y = 1, 2x + 2y = 0: inconsistent
        assert!(f.solve(&a, &[Fe(1), Fe(0)]).is_none());
    }
}
