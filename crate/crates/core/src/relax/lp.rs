//! Dense two-phase simplex over exact rationals with Bland's rule.
//!
//! Everything is generic over [`Exact`]; callers first run with checked
//! `Ratio<i128>` and redo the computation over `BigRational` on overflow.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

#[derive(Debug)]
pub(crate) struct Overflow;

pub(crate) type Checked<T> = std::result::Result<T, Overflow>;

pub(crate) trait Exact: Clone + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_big(r: &BigRational) -> Checked<Self>;
    fn to_big(&self) -> BigRational;
    fn is_zero(&self) -> bool;
    fn is_pos(&self) -> bool;
    fn add(&self, o: &Self) -> Checked<Self>;
    fn sub(&self, o: &Self) -> Checked<Self>;
    fn mul(&self, o: &Self) -> Checked<Self>;
    fn div(&self, o: &Self) -> Checked<Self>;
    fn neg(&self) -> Self;
    fn lt(&self, o: &Self) -> bool;
}

impl Exact for Ratio<i128> {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_big(r: &BigRational) -> Checked<Self> {
        match (r.numer().to_i128(), r.denom().to_i128()) {
            // keep headroom so negation never overflows
            (Some(n), Some(d)) if n > i128::MIN => Ok(Ratio::new(n, d)),
            _ => Err(Overflow),
        }
    }
    fn to_big(&self) -> BigRational {
        BigRational::new(BigInt::from(*self.numer()), BigInt::from(*self.denom()))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn add(&self, o: &Self) -> Checked<Self> {
        self.checked_add(o).ok_or(Overflow)
    }
    fn sub(&self, o: &Self) -> Checked<Self> {
        self.checked_sub(o).ok_or(Overflow)
    }
    fn mul(&self, o: &Self) -> Checked<Self> {
        self.checked_mul(o).ok_or(Overflow)
    }
    fn div(&self, o: &Self) -> Checked<Self> {
        self.checked_div(o).ok_or(Overflow)
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
}

impl Exact for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_big(r: &BigRational) -> Checked<Self> {
        Ok(r.clone())
    }
    fn to_big(&self) -> BigRational {
        self.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
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
    fn div(&self, o: &Self) -> Checked<Self> {
        Ok(self / o)
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
}

/// Sparse equality row `Σ coeff·x = rhs`.
pub(crate) type SparseRow = (Vec<(usize, BigRational)>, BigRational);

pub(crate) enum MaxOutcome<F> {
    Optimal(F),
    /// a feasible point with the objective strictly larger than at the
    /// current vertex
    Unbounded(Vec<F>),
}

/// Tableau in canonical form: `rows[i]` is `B⁻¹A` row `i`, `basis[i]` the
/// basic column of row `i`.
pub(crate) struct Simplex<F> {
    rows: Vec<Vec<F>>,
    rhs: Vec<F>,
    basis: Vec<usize>,
    ncols: usize,
    cost: Vec<F>,
    value: F,
}

impl<F: Exact> Simplex<F> {
    /// Phase 1 on `{x ≥ 0 : Ax = b}` with `ncols` variables. `None` if
    /// infeasible; otherwise the tableau sits at a feasible basis with
    /// artificials removed and redundant rows dropped.
    pub(crate) fn phase_one(eqs: &[SparseRow], ncols: usize) -> Checked<Option<Self>> {
        let m = eqs.len();
        let total = ncols + m;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for (i, (coeffs, b)) in eqs.iter().enumerate() {
            let flip = b.is_negative();
            let mut row = vec![F::zero(); total];
            for (j, c) in coeffs {
                let v = F::from_big(c)?;
                row[*j] = row[*j].add(&if flip { v.neg() } else { v })?;
            }
            row[ncols + i] = F::one();
            rows.push(row);
            let b = F::from_big(b)?;
            rhs.push(if flip { b.neg() } else { b });
        }
        // maximize -Σ artificials
        let mut cost = vec![F::zero(); total];
        let mut value = F::zero();
        for i in 0..m {
            for j in 0..ncols {
                if !rows[i][j].is_zero() {
                    cost[j] = cost[j].add(&rows[i][j])?;
                }
            }
            value = value.sub(&rhs[i])?;
        }
        let mut s = Simplex {
            rows,
            rhs,
            basis: (ncols..total).collect(),
            ncols: total,
            cost,
            value,
        };
        if let MaxOutcome::Unbounded(_) = s.run()? {
            unreachable!("phase 1 objective is bounded by 0");
        }
        if !s.value.is_zero() {
            return Ok(None);
        }
        // drive artificials out of the basis
        let mut r = 0;
        while r < s.rows.len() {
            if s.basis[r] >= ncols {
                match (0..ncols).find(|&j| !s.rows[r][j].is_zero()) {
                    Some(j) => s.pivot(r, j)?,
                    None => {
                        s.rows.remove(r);
                        s.rhs.remove(r);
                        s.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        for row in &mut s.rows {
            row.truncate(ncols);
        }
        s.ncols = ncols;
        s.cost = vec![F::zero(); ncols];
        s.value = F::zero();
        Ok(Some(s))
    }

    fn pivot(&mut self, r: usize, c: usize) -> Checked<()> {
        let p = self.rows[r][c].clone();
        let mut nz = Vec::new();
        for j in 0..self.ncols {
            if !self.rows[r][j].is_zero() {
                self.rows[r][j] = self.rows[r][j].div(&p)?;
                nz.push(j);
            }
        }
        self.rhs[r] = self.rhs[r].div(&p)?;
        let prow: Vec<(usize, F)> = nz.iter().map(|&j| (j, self.rows[r][j].clone())).collect();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for (j, v) in &prow {
                self.rows[i][*j] = self.rows[i][*j].sub(&f.mul(v)?)?;
            }
            self.rhs[i] = self.rhs[i].sub(&f.mul(&prhs)?)?;
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for (j, v) in &prow {
                self.cost[*j] = self.cost[*j].sub(&f.mul(v)?)?;
            }
            self.value = self.value.add(&f.mul(&prhs)?)?;
        }
        self.basis[r] = c;
        Ok(())
    }

    fn run(&mut self) -> Checked<MaxOutcome<F>> {
        loop {
            // Bland: lowest-index improving column, then lowest basic index on ties
            let Some(c) = (0..self.ncols).find(|&j| self.cost[j].is_pos()) else {
                return Ok(MaxOutcome::Optimal(self.value.clone()));
            };
            let mut best: Option<(usize, F)> = None;
            for i in 0..self.rows.len() {
                if !self.rows[i][c].is_pos() {
                    continue;
                }
                let ratio = self.rhs[i].div(&self.rows[i][c])?;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio.lt(br) || (!br.lt(&ratio) && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c)?,
                None => {
                    let mut p = self.point();
                    p[c] = p[c].add(&F::one())?;
                    for i in 0..self.rows.len() {
                        let b = self.basis[i];
                        p[b] = p[b].sub(&self.rows[i][c])?;
                    }
                    return Ok(MaxOutcome::Unbounded(p));
                }
            }
        }
    }

    /// Maximizes `c·x` starting from the current basis.
    pub(crate) fn maximize(&mut self, c: &[F]) -> Checked<MaxOutcome<F>> {
        let mut cost = c.to_vec();
        let mut value = F::zero();
        for i in 0..self.rows.len() {
            let cb = &c[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for j in 0..self.ncols {
                if !self.rows[i][j].is_zero() {
                    cost[j] = cost[j].sub(&cb.mul(&self.rows[i][j])?)?;
                }
            }
            value = value.add(&cb.mul(&self.rhs[i])?)?;
        }
        self.cost = cost;
        self.value = value;
        self.run()
    }

    pub(crate) fn point(&self) -> Vec<F> {
        let mut p = vec![F::zero(); self.ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            p[b] = self.rhs[i].clone();
        }
        p
    }
}

/// Turns `x ≤ u` bounds into equality rows with fresh slacks, except where
/// a row with nonnegative coefficients already implies the bound.
pub(crate) fn with_bound_rows(
    eqs: &[SparseRow],
    nvars: usize,
    upper: &[Option<BigRational>],
) -> (Vec<SparseRow>, usize) {
    let mut implied: Vec<Option<BigRational>> = vec![None; nvars];
    for (coeffs, b) in eqs {
        let sign = if coeffs.iter().all(|(_, c)| !c.is_negative()) && !b.is_negative() {
            <BigRational as One>::one()
        } else if coeffs.iter().all(|(_, c)| !c.is_positive()) && !b.is_positive() {
            -<BigRational as One>::one()
        } else {
            continue;
        };
        for (j, c) in coeffs {
            if Zero::is_zero(c) {
                continue;
            }
            let bound = (b * &sign) / (c * &sign);
            if implied[*j].as_ref().map_or(true, |cur| &bound < cur) {
                implied[*j] = Some(bound);
            }
        }
    }
    let mut out = eqs.to_vec();
    let mut ncols = nvars;
    for (j, u) in upper.iter().enumerate() {
        let Some(u) = u else { continue };
        if implied[j].as_ref().is_some_and(|imp| imp <= u) {
            continue;
        }
        out.push((
            vec![(j, <BigRational as One>::one()), (ncols, <BigRational as One>::one())],
            u.clone(),
        ));
        ncols += 1;
    }
    (out, ncols)
}

pub(crate) fn feasible_point<F: Exact>(
    eqs: &[SparseRow],
    ncols: usize,
) -> Checked<Option<Vec<BigRational>>> {
    Ok(Simplex::<F>::phase_one(eqs, ncols)?.map(|s| s.point().iter().map(F::to_big).collect()))
}

/// Point positive on exactly the coordinates not identically zero over the
/// polyhedron: one phase-1 vertex plus one maximizer per coordinate not yet
/// seen positive, averaged.
pub(crate) fn interior_point<F: Exact>(
    eqs: &[SparseRow],
    ncols: usize,
) -> Checked<Option<Vec<BigRational>>> {
    let Some(mut s) = Simplex::<F>::phase_one(eqs, ncols)? else {
        return Ok(None);
    };
    let mut points = vec![s.point()];
    let mut seen: Vec<bool> = points[0].iter().map(F::is_pos).collect();
    for v in 0..ncols {
        if seen[v] {
            continue;
        }
        let mut c = vec![F::zero(); ncols];
        c[v] = F::one();
        let p = match s.maximize(&c)? {
            MaxOutcome::Optimal(val) if val.is_pos() => s.point(),
            MaxOutcome::Optimal(_) => continue,
            MaxOutcome::Unbounded(p) => p,
        };
        for (j, x) in p.iter().enumerate() {
            seen[j] |= x.is_pos();
        }
        points.push(p);
    }
    let count = BigRational::from_integer(BigInt::from(points.len()));
    let mut avg = vec![<BigRational as Zero>::zero(); ncols];
    for p in &points {
        for (a, x) in avg.iter_mut().zip(p) {
            *a += x.to_big();
        }
    }
    Ok(Some(avg.into_iter().map(|a| a / &count).collect()))
}

/// Runs `f` with checked `i128` rationals, falling back to big rationals.
pub(crate) fn with_fallback<T>(
    fast: impl FnOnce() -> Checked<T>,
    slow: impl FnOnce() -> Checked<T>,
) -> T {
    fast().or_else(|_| slow()).expect("big rationals do not overflow")
}
