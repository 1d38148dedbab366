//! Integer feasibility of `Ax = b` through a column-style Hermite normal
//! form `AU = H` with `U` unimodular.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use super::lp::{Checked, Overflow};

pub(crate) trait IntOps: Clone + std::fmt::Debug + PartialEq {
    fn zero() -> Self;
    fn from_i(v: i64) -> Self;
    fn from_big(v: &BigInt) -> Checked<Self>;
    fn to_big(&self) -> BigInt;
    fn is_zero(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn add(&self, o: &Self) -> Checked<Self>;
    fn sub(&self, o: &Self) -> Checked<Self>;
    fn mul(&self, o: &Self) -> Checked<Self>;
    fn div_floor(&self, o: &Self) -> Checked<Self>;
    fn divides(&self, o: &Self) -> bool;
}

impl IntOps for i128 {
    fn zero() -> Self {
        0
    }
    fn from_i(v: i64) -> Self {
        v as i128
    }
    fn from_big(v: &BigInt) -> Checked<Self> {
        v.to_i128().filter(|&x| x != i128::MIN).ok_or(Overflow)
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn is_neg(&self) -> bool {
        *self < 0
    }
    fn add(&self, o: &Self) -> Checked<Self> {
        self.checked_add(*o).filter(|&x| x != i128::MIN).ok_or(Overflow)
    }
    fn sub(&self, o: &Self) -> Checked<Self> {
        self.checked_sub(*o).filter(|&x| x != i128::MIN).ok_or(Overflow)
    }
    fn mul(&self, o: &Self) -> Checked<Self> {
        self.checked_mul(*o).filter(|&x| x != i128::MIN).ok_or(Overflow)
    }
    fn div_floor(&self, o: &Self) -> Checked<Self> {
        Ok(Integer::div_floor(self, o))
    }
    fn divides(&self, o: &Self) -> bool {
        o % self == 0
    }
}

impl IntOps for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_i(v: i64) -> Self {
        BigInt::from(v)
    }
    fn from_big(v: &BigInt) -> Checked<Self> {
        Ok(v.clone())
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_neg(&self) -> bool {
        Signed::is_negative(self)
    }
    fn add(&self, o: &Self) -> Checked<Self> {
        Ok(self + o)
    }
    fn sub(&self, o: &Self) -> Checked<Self> {
        Ok(self - o)
    }
    fn mul(&self, o: &Self) -> Checked<Self> {
        Ok(self * o)
    }
    fn div_floor(&self, o: &Self) -> Checked<Self> {
        Ok(Integer::div_floor(self, o))
    }
    fn divides(&self, o: &Self) -> bool {
        Zero::is_zero(&(o % self))
    }
}

/// `(g, x, y)` with `a x + b y = g = gcd(a, b) ≥ 0`.
fn ext_gcd<T: IntOps>(a: &T, b: &T) -> Checked<(T, T, T)> {
    let (mut r0, mut r1) = (a.clone(), b.clone());
    let (mut s0, mut s1) = (T::from_i(1), T::zero());
    let (mut t0, mut t1) = (T::zero(), T::from_i(1));
    while !r1.is_zero() {
        let q = r0.div_floor(&r1)?;
        let r2 = r0.sub(&q.mul(&r1)?)?;
        let s2 = s0.sub(&q.mul(&s1)?)?;
        let t2 = t0.sub(&q.mul(&t1)?)?;
        (r0, r1, s0, s1, t0, t1) = (r1, r2, s1, s2, t1, t2);
    }
    if r0.is_neg() {
        let m1 = T::from_i(-1);
        return Ok((r0.mul(&m1)?, s0.mul(&m1)?, t0.mul(&m1)?));
    }
    Ok((r0, s0, t0))
}

/// Column-major matrix `h` (columns of `A`) together with `u`, updated by the
/// same column operations.
struct ColumnForm<T> {
    h: Vec<Vec<T>>,
    u: Vec<Vec<T>>,
}

impl<T: IntOps> ColumnForm<T> {
    /// `(col_c, col_j) ← (p col_c + q col_j, r col_c + s col_j)`.
    fn combine(&mut self, c: usize, j: usize, p: &T, q: &T, r: &T, s: &T) -> Checked<()> {
        for mat in [&mut self.h, &mut self.u] {
            for i in 0..mat[c].len() {
                let (x, y) = (mat[c][i].clone(), mat[j][i].clone());
                if x.is_zero() && y.is_zero() {
                    continue;
                }
                mat[c][i] = p.mul(&x)?.add(&q.mul(&y)?)?;
                mat[j][i] = r.mul(&x)?.add(&s.mul(&y)?)?;
            }
        }
        Ok(())
    }

    fn negate(&mut self, c: usize) -> Checked<()> {
        let m1 = T::from_i(-1);
        for mat in [&mut self.h, &mut self.u] {
            for v in mat[c].iter_mut() {
                *v = v.mul(&m1)?;
            }
        }
        Ok(())
    }

    /// `col_j ← col_j - q col_c`.
    fn axpy(&mut self, j: usize, c: usize, q: &T) -> Checked<()> {
        for mat in [&mut self.h, &mut self.u] {
            for i in 0..mat[c].len() {
                if !mat[c][i].is_zero() {
                    mat[j][i] = mat[j][i].sub(&q.mul(&mat[c][i])?)?;
                }
            }
        }
        Ok(())
    }
}

/// Integer solution of `Ax = b`, where `a` is given by rows.
pub(crate) fn solve<T: IntOps>(a: &[Vec<BigInt>], b: &[BigInt], n: usize) -> Checked<Option<Vec<BigInt>>> {
    let m = a.len();
    let mut form = ColumnForm {
        h: (0..n)
            .map(|j| a.iter().map(|row| T::from_big(&row[j])).collect::<Checked<Vec<T>>>())
            .collect::<Checked<Vec<_>>>()?,
        u: (0..n)
            .map(|j| (0..n).map(|i| T::from_i(i64::from(i == j))).collect())
            .collect(),
    };
    let zero = T::zero();
    // pivot column of each row, if any
    let mut pivots: Vec<Option<usize>> = vec![None; m];
    let mut next = 0usize;
    for r in 0..m {
        if next == n {
            break;
        }
        for j in next + 1..n {
            if form.h[j][r].is_zero() {
                continue;
            }
            let (x, y) = (form.h[next][r].clone(), form.h[j][r].clone());
            let (g, s, t) = ext_gcd(&x, &y)?;
            let xg = x.div_floor(&g)?;
            let yg = y.div_floor(&g)?;
            form.combine(next, j, &s, &t, &zero.sub(&yg)?, &xg)?;
        }
        if form.h[next][r].is_zero() {
            continue;
        }
        if form.h[next][r].is_neg() {
            form.negate(next)?;
        }
        let g = form.h[next][r].clone();
        for j in 0..next {
            let q = form.h[j][r].div_floor(&g)?;
            if !q.is_zero() {
                form.axpy(j, next, &q)?;
            }
        }
        pivots[r] = Some(next);
        next += 1;
    }
    let mut y = vec![T::zero(); n];
    for r in 0..m {
        let mut s = T::zero();
        for j in 0..n {
            if !y[j].is_zero() && !form.h[j][r].is_zero() {
                s = s.add(&form.h[j][r].mul(&y[j])?)?;
            }
        }
        let rest = T::from_big(&b[r])?.sub(&s)?;
        match pivots[r] {
            Some(c) => {
                let p = &form.h[c][r];
                if !p.divides(&rest) {
                    return Ok(None);
                }
                y[c] = rest.div_floor(p)?;
            }
            None if !rest.is_zero() => return Ok(None),
            None => {}
        }
    }
    let mut x = vec![T::zero(); n];
    for (j, yj) in y.iter().enumerate() {
        if yj.is_zero() {
            continue;
        }
        for i in 0..n {
            if !form.u[j][i].is_zero() {
                x[i] = x[i].add(&form.u[j][i].mul(yj)?)?;
            }
        }
    }
    Ok(Some(x.iter().map(T::to_big).collect()))
}
