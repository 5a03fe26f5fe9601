//! Integer polynomials: characteristic polynomials, exact division,
//! cyclotomic polynomials and factorization of small degree.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::intmat::IntMatrix;

/// Coefficients in ascending order; the last one is nonzero (or the
/// polynomial is empty, meaning zero).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntPoly(pub Vec<BigInt>);

impl IntPoly {
    pub fn from_i64(c: &[i64]) -> Self {
        let mut p = IntPoly(c.iter().map(|&v| BigInt::from(v)).collect());
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeff(&self, i: usize) -> BigInt {
        self.0.get(i).cloned().unwrap_or_default()
    }

    pub fn mul(&self, other: &IntPoly) -> IntPoly {
        if self.is_zero() || other.is_zero() {
            return IntPoly(vec![]);
        }
        let mut c = vec![BigInt::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        let mut p = IntPoly(c);
        p.trim();
        p
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        self.0.iter().rev().fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    /// Quotient and remainder by a monic divisor.
    pub fn divrem_monic(&self, g: &IntPoly) -> (IntPoly, IntPoly) {
        assert!(g.0.last().is_some_and(|c| c.is_one()), "divisor must be monic");
        let dg = g.degree();
        let mut r = self.0.clone();
        if r.len() <= dg {
            return (IntPoly(vec![]), self.clone());
        }
        let mut q = vec![BigInt::zero(); r.len() - dg];
        for i in (0..q.len()).rev() {
            let c = r[i + dg].clone();
            if !c.is_zero() {
                for (j, gj) in g.0.iter().enumerate() {
                    r[i + j] -= &c * gj;
                }
            }
            q[i] = c;
        }
        let mut q = IntPoly(q);
        q.trim();
        let mut r = IntPoly(r);
        r.trim();
        (q, r)
    }

    pub fn divides(&self, f: &IntPoly) -> bool {
        f.divrem_monic(self).1.is_zero()
    }

    pub fn l2_norm(&self) -> f64 {
        self.0
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::INFINITY).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Characteristic polynomial `det(x I - A)` and the Faddeev-LeVerrier
/// matrix `M_d`, which satisfies `A M_d = -c_0 I`.
pub fn charpoly(a: &IntMatrix) -> (IntPoly, IntMatrix) {
    let d = a.dim();
    let mut c = vec![BigInt::zero(); d + 1];
    c[d] = BigInt::one();
    let mut m = IntMatrix::identity(d).scale(&BigInt::zero());
    for k in 1..=d {
        m = a.mul(&m).add_scaled_identity(&c[d - k + 1]);
        let t = a.mul(&m).trace();
        c[d - k] = -(t / BigInt::from(k as u64));
    }
    let mut p = IntPoly(c);
    p.trim();
    (p, m)
}

/// The m-th cyclotomic polynomial.
pub fn cyclotomic(m: u64) -> IntPoly {
    let mut num = vec![BigInt::zero(); m as usize + 1];
    num[0] = BigInt::from(-1);
    num[m as usize] = BigInt::one();
    let mut p = IntPoly(num);
    for d in 1..m {
        if m.is_multiple_of(d) {
            p = p.divrem_monic(&cyclotomic(d)).0;
        }
    }
    p
}

pub fn euler_phi(m: u64) -> u64 {
    let mut n = m;
    let mut result = m;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Orders `m` of roots of unity that can be eigenvalues of a `d x d`
/// integer matrix, i.e. those with `phi(m) <= d`.
pub fn cyclotomic_orders(d: usize) -> Vec<u64> {
    // phi(m) >= sqrt(m / 2), so m <= 2 d^2
    (1..=(2 * d * d + 2) as u64).filter(|&m| euler_phi(m) <= d as u64).collect()
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    let small = n.to_u64().expect("constant term too large for trial factorization");
    let mut out = Vec::new();
    let mut i = 1u64;
    while i * i <= small {
        if small.is_multiple_of(i) {
            out.push(BigInt::from(i));
            if i * i != small {
                out.push(BigInt::from(small / i));
            }
        }
        i += 1;
    }
    out.sort();
    out.iter().flat_map(|v| [v.clone(), -v.clone()]).collect()
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// A monic factor of degree `m`, searched over coefficient vectors inside
/// the Landau-Mignotte box `|g_i| <= C(m, i) ||f||_2`.
fn find_factor(f: &IntPoly, m: usize) -> Option<IntPoly> {
    let norm = f.l2_norm();
    let f0 = f.coeff(0);
    if f0.is_zero() {
        return (m == 1).then(|| IntPoly::from_i64(&[0, 1]));
    }
    let one = BigInt::one();
    let f1 = f.eval(&one);
    let fm1 = f.eval(&-one.clone());
    let bounds: Vec<i64> = (0..=m).map(|i| (binom(m, i) * norm).floor() as i64).collect();
    let mut g = vec![BigInt::zero(); m + 1];
    g[m] = BigInt::one();
    for c0 in divisors(&f0) {
        g[0] = c0;
        if search(f, &mut g, 1, m, &bounds, &f1, &fm1) {
            return Some(IntPoly(g));
        }
    }
    None
}

fn search(
    f: &IntPoly,
    g: &mut Vec<BigInt>,
    i: usize,
    m: usize,
    bounds: &[i64],
    f1: &BigInt,
    fm1: &BigInt,
) -> bool {
    if i == m {
        let cand = IntPoly(g.clone());
        let one = BigInt::one();
        for (x, fx) in [(one.clone(), f1), (-one, fm1)] {
            let gx = cand.eval(&x);
            if !fx.is_zero() && (gx.is_zero() || !fx.is_multiple_of(&gx)) {
                return false;
            }
        }
        return cand.divides(f);
    }
    for c in -bounds[i]..=bounds[i] {
        g[i] = BigInt::from(c);
        if search(f, g, i + 1, m, bounds, f1, fm1) {
            return true;
        }
    }
    false
}

/// Irreducible factors over the rationals with multiplicities, for monic
/// polynomials of degree at most 6.
pub fn factor_small(f: &IntPoly) -> Option<Vec<(IntPoly, usize)>> {
    if f.degree() > 6 || f.is_zero() || !f.0.last().unwrap().is_one() {
        return None;
    }
    let mut rest = f.clone();
    let mut out: Vec<(IntPoly, usize)> = Vec::new();
    'outer: while rest.degree() > 0 {
        for m in 1..=rest.degree() / 2 {
            if let Some(g) = find_factor(&rest, m) {
                let mut mult = 0;
                while g.divides(&rest) {
                    rest = rest.divrem_monic(&g).0;
                    mult += 1;
                }
                out.push((g, mult));
                continue 'outer;
            }
        }
        // no factor of degree <= deg/2: irreducible
        match out.iter_mut().find(|(g, _)| *g == rest) {
            Some(entry) => entry.1 += 1,
            None => out.push((rest.clone(), 1)),
        }
        break;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c)
    }

    #[test]
    fn charpoly_of_cat_map() {
        let a = IntMatrix::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap();
        let (cp, m) = charpoly(&a);
        assert_eq!(cp, p(&[1, -3, 1]));
        // A M = -c_0 I, so M = -A^{-1}
        let prod = a.mul(&m);
        assert_eq!(prod, IntMatrix::identity(2).scale(&BigInt::from(-1)));
    }

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(cyclotomic(1), p(&[-1, 1]));
        assert_eq!(cyclotomic(2), p(&[1, 1]));
        assert_eq!(cyclotomic(4), p(&[1, 0, 1]));
        assert_eq!(cyclotomic(6), p(&[1, -1, 1]));
        assert_eq!(cyclotomic(12), p(&[1, 0, -1, 0, 1]));
        assert_eq!(cyclotomic_orders(2), vec![1, 2, 3, 4, 6]);
    }

    #[test]
    fn factorization_examples() {
        assert_eq!(factor_small(&p(&[1, -3, 1])).unwrap(), vec![(p(&[1, -3, 1]), 1)]);
        // (x - 1)^2
        assert_eq!(factor_small(&p(&[1, -2, 1])).unwrap(), vec![(p(&[-1, 1]), 2)]);
        // (x^2 - 3x + 1)(x^2 + 1)(x + 2)
        let f = p(&[1, -3, 1]).mul(&p(&[1, 0, 1])).mul(&p(&[2, 1]));
        let mut got = factor_small(&f).unwrap();
        got.sort_by_key(|(g, _)| (g.degree(), g.0.clone()));
        assert_eq!(got, vec![(p(&[2, 1]), 1), (p(&[1, -3, 1]), 1), (p(&[1, 0, 1]), 1)]);
        // irreducible sextic x^6 - x - 1
        assert_eq!(factor_small(&p(&[-1, -1, 0, 0, 0, 0, 1])).unwrap().len(), 1);
        // product of two irreducible cubics
        let f = p(&[-1, -1, 0, 1]).mul(&p(&[-1, -3, 0, 1]));
        let got = factor_small(&f).unwrap();
        assert_eq!(got.len(), 2, "{got:?}");
    }
}
