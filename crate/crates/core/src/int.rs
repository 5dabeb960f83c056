//! Exact integer vectors and matrices, extended integers for bounds, and the
//! bimatrix with its explicit n-fold product.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision signed integer.
pub type Int = BigInt;

/// Dense integer vector.
pub type IntVec = Vec<Int>;

/// Default column limit for [`nfold_product`].
pub const MATERIALIZE_COLUMNS: u64 = 10_000;

pub fn int(v: i64) -> Int {
    Int::from(v)
}

pub fn ivec(v: &[i64]) -> IntVec {
    v.iter().map(|&x| Int::from(x)).collect()
}

pub fn zeros(n: usize) -> IntVec {
    vec![Int::zero(); n]
}

pub fn is_zero_vec(v: &[Int]) -> bool {
    v.iter().all(Zero::is_zero)
}

fn check_len(a: usize, b: usize, ctx: &str) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(alloc::format!("{ctx}: {a} vs {b}")));
    }
    Ok(())
}

pub fn dot(w: &[Int], x: &[Int]) -> Result<Int> {
    check_len(w.len(), x.len(), "dot")?;
    Ok(w.iter().zip(x).map(|(a, b)| a * b).sum())
}

pub fn add(a: &[Int], b: &[Int]) -> Result<IntVec> {
    check_len(a.len(), b.len(), "add")?;
    Ok(a.iter().zip(b).map(|(x, y)| x + y).collect())
}

pub fn sub(a: &[Int], b: &[Int]) -> Result<IntVec> {
    check_len(a.len(), b.len(), "sub")?;
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

pub fn scale(c: &Int, a: &[Int]) -> IntVec {
    a.iter().map(|x| c * x).collect()
}

/// `acc += c * a`, in place.
pub fn axpy(acc: &mut [Int], c: &Int, a: &[Int]) {
    debug_assert_eq!(acc.len(), a.len());
    for (t, x) in acc.iter_mut().zip(a) {
        *t += c * x;
    }
}

pub fn neg(a: &[Int]) -> IntVec {
    a.iter().map(|x| -x).collect()
}

pub fn norm1(a: &[Int]) -> Int {
    a.iter().map(|x| x.abs()).sum()
}

pub fn norm2_sq(a: &[Int]) -> Int {
    a.iter().map(|x| x * x).sum()
}

/// True iff every coordinate of `x` lies in `[l_j, u_j]`.
pub fn in_box(x: &[Int], l: &[ExtInt], u: &[ExtInt]) -> Result<bool> {
    check_len(x.len(), l.len(), "in_box lower")?;
    check_len(x.len(), u.len(), "in_box upper")?;
    Ok(x.iter().zip(l).zip(u).all(|((v, lo), hi)| lo.le_int(v) && hi.ge_int(v)))
}

/// An integer or one of the two infinities.
///
/// The derived order puts `NegInf` below every finite value and `PosInf`
/// above it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtInt {
    NegInf,
    Finite(Int),
    PosInf,
}

impl ExtInt {
    pub fn finite(v: i64) -> Self {
        ExtInt::Finite(Int::from(v))
    }

    pub fn as_finite(&self) -> Option<&Int> {
        match self {
            ExtInt::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtInt::Finite(_))
    }

    /// `self <= v`.
    pub fn le_int(&self, v: &Int) -> bool {
        match self {
            ExtInt::NegInf => true,
            ExtInt::Finite(a) => a <= v,
            ExtInt::PosInf => false,
        }
    }

    /// `self >= v`.
    pub fn ge_int(&self, v: &Int) -> bool {
        match self {
            ExtInt::NegInf => false,
            ExtInt::Finite(a) => a >= v,
            ExtInt::PosInf => true,
        }
    }

    /// Finite plus infinite keeps the infinity.
    pub fn add_int(&self, v: &Int) -> ExtInt {
        match self {
            ExtInt::Finite(a) => ExtInt::Finite(a + v),
            other => other.clone(),
        }
    }

    /// Difference of two extended integers; `inf - inf` of equal sign is refused.
    pub fn checked_sub(&self, other: &ExtInt) -> Result<ExtInt> {
        use ExtInt::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Ok(Finite(a - b)),
            (PosInf, PosInf) | (NegInf, NegInf) => {
                Err(Error::Internal("difference of equal infinities".into()))
            }
            (PosInf, _) | (_, NegInf) => Ok(PosInf),
            (NegInf, _) | (_, PosInf) => Ok(NegInf),
        }
    }
}

impl From<Int> for ExtInt {
    fn from(v: Int) -> Self {
        ExtInt::Finite(v)
    }
}

impl fmt::Display for ExtInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtInt::NegInf => f.write_str("-inf"),
            ExtInt::Finite(v) => write!(f, "{v}"),
            ExtInt::PosInf => f.write_str("inf"),
        }
    }
}

impl FromStr for ExtInt {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "+inf" => Ok(ExtInt::PosInf),
            "-inf" => Ok(ExtInt::NegInf),
            t => t
                .parse::<Int>()
                .map(ExtInt::Finite)
                .map_err(|_| Error::InvalidInstance(alloc::format!("not an integer or infinity: {s:?}"))),
        }
    }
}

/// Row-major dense integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Int>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Int>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(alloc::format!(
                "matrix storage {} for {rows}x{cols}",
                data.len()
            )));
        }
        Ok(IntMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![Int::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Int::one();
        }
        m
    }

    /// Build from row vectors. `cols` is needed when there are no rows.
    pub fn from_rows(rows: &[IntVec], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Dimension(alloc::format!("row {i} has {} entries, expected {cols}", r.len())));
            }
            data.extend(r.iter().cloned());
        }
        Ok(IntMatrix { rows: rows.len(), cols, data })
    }

    pub fn from_i64(rows: &[&[i64]], cols: usize) -> Result<Self> {
        let rows: Vec<IntVec> = rows.iter().map(|r| ivec(r)).collect();
        Self::from_rows(&rows, cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Int {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Int) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Int] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<IntVec> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> IntVec {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn matvec(&self, x: &[Int]) -> Result<IntVec> {
        check_len(self.cols, x.len(), "matvec")?;
        Ok((0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect())
    }

    /// Horizontal concatenation.
    pub fn hstack(blocks: &[&IntMatrix]) -> Result<IntMatrix> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::Dimension("hstack row counts differ".into()));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for b in blocks {
                data.extend(b.row(i).iter().cloned());
            }
        }
        Ok(IntMatrix { rows, cols, data })
    }

    /// Vertical concatenation.
    pub fn vstack(blocks: &[&IntMatrix]) -> Result<IntMatrix> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(Error::Dimension("vstack column counts differ".into()));
        }
        let mut data = Vec::new();
        for b in blocks {
            data.extend(b.data.iter().cloned());
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        Ok(IntMatrix { rows, cols, data })
    }

    /// Largest absolute entry, 0 for an empty matrix.
    pub fn max_abs(&self) -> Int {
        self.data.iter().map(|x| x.abs()).max().unwrap_or_else(Int::zero)
    }
}

pub fn matvec(m: &IntMatrix, x: &[Int]) -> Result<IntVec> {
    m.matvec(x)
}

/// An `(r, s) x d` bimatrix: `A1` couples all bricks, `A2` constrains each brick.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bimatrix {
    a1: IntMatrix,
    a2: IntMatrix,
}

impl Bimatrix {
    pub fn new(a1: IntMatrix, a2: IntMatrix) -> Result<Self> {
        if a1.cols() != a2.cols() {
            return Err(Error::Dimension(alloc::format!(
                "A1 has {} columns, A2 has {}",
                a1.cols(),
                a2.cols()
            )));
        }
        if a1.cols() == 0 {
            return Err(Error::Dimension("bimatrix needs at least one column".into()));
        }
        Ok(Bimatrix { a1, a2 })
    }

    pub fn a1(&self) -> &IntMatrix {
        &self.a1
    }

    pub fn a2(&self) -> &IntMatrix {
        &self.a2
    }

    pub fn r(&self) -> usize {
        self.a1.rows()
    }

    pub fn s(&self) -> usize {
        self.a2.rows()
    }

    pub fn d(&self) -> usize {
        self.a1.cols()
    }
}

/// The `(r + s n) x (d n)` matrix with `A1` repeated along the top and `A2`
/// on the block diagonal.
pub fn nfold_product(a: &Bimatrix, n: usize) -> Result<IntMatrix> {
    nfold_product_limited(a, n, MATERIALIZE_COLUMNS)
}

pub fn nfold_product_limited(a: &Bimatrix, n: usize, max_columns: u64) -> Result<IntMatrix> {
    if n == 0 {
        return Err(Error::Dimension("n-fold product needs n >= 1".into()));
    }
    let (r, s, d) = (a.r(), a.s(), a.d());
    if (d as u64).saturating_mul(n as u64) > max_columns {
        return Err(Error::TooLarge { what: "n-fold product columns", limit: max_columns });
    }
    let mut m = IntMatrix::zeros(r + s * n, d * n);
    for blk in 0..n {
        for i in 0..r {
            for j in 0..d {
                m.set(i, blk * d + j, a.a1.get(i, j).clone());
            }
        }
        for i in 0..s {
            for j in 0..d {
                m.set(r + blk * s + i, blk * d + j, a.a2.get(i, j).clone());
            }
        }
    }
    Ok(m)
}

/// Unimodular row reduction of `[M | I]`.
///
/// Returns the echelon form `E = U M` (pivot columns strictly increasing),
/// the rank and the unimodular `U` as rows.
struct Echelon {
    e: Vec<IntVec>,
    u: Vec<IntVec>,
    pivots: Vec<usize>,
}

fn echelon(m: &IntMatrix) -> Echelon {
    let n = m.rows();
    let mut e: Vec<IntVec> = m.row_vecs();
    let mut u: Vec<IntVec> = (0..n)
        .map(|i| {
            let mut r = zeros(n);
            r[i] = Int::one();
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut prow = 0;
    for c in 0..m.cols() {
        if prow == n {
            break;
        }
        loop {
            // smallest nonzero magnitude in column c at or below prow
            let best = (prow..n)
                .filter(|&i| !e[i][c].is_zero())
                .min_by(|&a, &b| e[a][c].abs().cmp(&e[b][c].abs()));
            let Some(bi) = best else { break };
            e.swap(prow, bi);
            u.swap(prow, bi);
            let mut done = true;
            for i in prow + 1..n {
                if e[i][c].is_zero() {
                    continue;
                }
                let q = e[i][c].div_floor(&e[prow][c]);
                let (ep, up) = (e[prow].clone(), u[prow].clone());
                axpy(&mut e[i], &-&q, &ep);
                axpy(&mut u[i], &-&q, &up);
                if !e[i][c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if prow < n && !e[prow][c].is_zero() {
            if e[prow][c].is_negative() {
                e[prow] = neg(&e[prow]);
                u[prow] = neg(&u[prow]);
            }
            pivots.push(c);
            prow += 1;
        }
    }
    Echelon { e, u, pivots }
}

/// Pairwise size reduction: repeatedly subtract one basis vector from another
/// while that shrinks the squared norm.
fn size_reduce(basis: &mut [IntVec]) {
    let mut changed = true;
    let mut rounds = 0;
    while changed && rounds < 64 {
        changed = false;
        rounds += 1;
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                if i == j {
                    continue;
                }
                let nj = norm2_sq(&basis[j]);
                if nj.is_zero() {
                    continue;
                }
                let ip: Int = basis[i].iter().zip(&basis[j]).map(|(a, b)| a * b).sum();
                // nearest integer to ip / nj
                let q: Int = (&ip * Int::from(2) + &nj).div_floor(&(&nj * Int::from(2)));
                if !q.is_zero() {
                    let bj = basis[j].clone();
                    let cand: IntVec = basis[i].iter().zip(&bj).map(|(a, b)| a - &q * b).collect();
                    if norm2_sq(&cand) < norm2_sq(&basis[i]) {
                        basis[i] = cand;
                        changed = true;
                    }
                }
            }
        }
    }
}

/// A basis of the integer lattice `{x in Z^n : B x = 0}`.
pub fn kernel_basis(b: &IntMatrix) -> Vec<IntVec> {
    let ech = echelon(&b.transpose());
    let rank = ech.pivots.len();
    let mut basis: Vec<IntVec> = ech.u[rank..].to_vec();
    size_reduce(&mut basis);
    basis
}

/// Row echelon form of a lattice basis (rows): returns the nonzero echelon
/// rows, which generate the same lattice, and their pivot columns.
pub fn lattice_echelon(basis: &[IntVec], n: usize) -> Result<(Vec<IntVec>, Vec<usize>)> {
    let m = IntMatrix::from_rows(basis, n)?;
    let ech = echelon(&m);
    let rank = ech.pivots.len();
    Ok((ech.e[..rank].to_vec(), ech.pivots))
}

/// Rank of an integer matrix.
pub fn rank(b: &IntMatrix) -> usize {
    echelon(b).pivots.len()
}

/// All integer solutions of `A x = rhs`: a particular solution plus a kernel
/// lattice basis, or `None` if there is no integer solution.
pub fn solve_integer(a: &IntMatrix, rhs: &[Int]) -> Result<Option<(IntVec, Vec<IntVec>)>> {
    check_len(a.rows(), rhs.len(), "solve_integer")?;
    let n = a.cols();
    let ech = echelon(&a.transpose());
    let rank = ech.pivots.len();
    // A U^T y = E^T y = rhs
    let mut y = zeros(rank);
    for i in 0..rank {
        let p = ech.pivots[i];
        let mut acc = rhs[p].clone();
        for k in 0..i {
            acc -= &ech.e[k][p] * &y[k];
        }
        let (q, r) = acc.div_rem(&ech.e[i][p]);
        if !r.is_zero() {
            return Ok(None);
        }
        y[i] = q;
    }
    for j in 0..a.rows() {
        let v: Int = (0..rank).map(|i| &ech.e[i][j] * &y[i]).sum();
        if v != rhs[j] {
            return Ok(None);
        }
    }
    let mut x = zeros(n);
    for i in 0..rank {
        axpy(&mut x, &y[i], &ech.u[i]);
    }
    let mut basis: Vec<IntVec> = ech.u[rank..].to_vec();
    size_reduce(&mut basis);
    Ok(Some((x, basis)))
}

/// Lexicographic comparison helper for integer slices.
pub fn lex_cmp(a: &[Int], b: &[Int]) -> Ordering {
    a.cmp(b)
}

/// Render a vector as `[a, b, c]`.
pub fn fmt_vec(v: &[Int]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    alloc::format!("[{}]", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_of_scalar_bimatrix() {
        let a = Bimatrix::new(IntMatrix::from_i64(&[&[1]], 1).unwrap(), IntMatrix::from_i64(&[&[1]], 1).unwrap())
            .unwrap();
        let m = nfold_product(&a, 2).unwrap();
        assert_eq!(m, IntMatrix::from_i64(&[&[1, 1], &[1, 0], &[0, 1]], 2).unwrap());
    }

    #[test]
    fn product_n1_is_stack() {
        let a1 = IntMatrix::from_i64(&[&[1, 2, 3]], 3).unwrap();
        let a2 = IntMatrix::from_i64(&[&[4, 5, 6], &[7, 8, 9]], 3).unwrap();
        let a = Bimatrix::new(a1.clone(), a2.clone()).unwrap();
        assert_eq!(nfold_product(&a, 1).unwrap(), IntMatrix::vstack(&[&a1, &a2]).unwrap());
    }

    #[test]
    fn product_of_sum_difference_bimatrix() {
        let a = Bimatrix::new(IntMatrix::from_i64(&[&[1, 1]], 2).unwrap(), IntMatrix::from_i64(&[&[1, -1]], 2).unwrap())
            .unwrap();
        let m = nfold_product(&a, 2).unwrap();
        let want = IntMatrix::from_i64(&[&[1, 1, 1, 1], &[1, -1, 0, 0], &[0, 0, 1, -1]], 4).unwrap();
        assert_eq!(m, want);
    }

    #[test]
    fn product_refuses_huge() {
        let a = Bimatrix::new(IntMatrix::from_i64(&[&[1]], 1).unwrap(), IntMatrix::from_i64(&[&[1]], 1).unwrap())
            .unwrap();
        assert!(matches!(nfold_product(&a, 10_001), Err(Error::TooLarge { .. })));
        assert!(nfold_product(&a, 10_000).is_ok());
    }

    #[test]
    fn basic_ops() {
        let id = IntMatrix::identity(2);
        assert_eq!(id.matvec(&ivec(&[3, -5])).unwrap(), ivec(&[3, -5]));
        assert_eq!(dot(&ivec(&[1, 2]), &ivec(&[2, -1])).unwrap(), int(0));
        let l = [ExtInt::finite(0), ExtInt::NegInf];
        let u = [ExtInt::finite(0), ExtInt::PosInf];
        assert!(in_box(&ivec(&[0, 7]), &l, &u).unwrap());
        assert!(!in_box(&ivec(&[1, 7]), &l, &u).unwrap());
        assert!(dot(&ivec(&[1]), &ivec(&[1, 2])).is_err());
    }

    #[test]
    fn ext_order_and_arith() {
        assert!(ExtInt::NegInf < ExtInt::finite(-1_000_000));
        assert!(ExtInt::finite(5) < ExtInt::PosInf);
        assert_eq!(ExtInt::PosInf.add_int(&int(-3)), ExtInt::PosInf);
        assert!(ExtInt::PosInf.checked_sub(&ExtInt::PosInf).is_err());
        assert_eq!(ExtInt::PosInf.checked_sub(&ExtInt::finite(2)).unwrap(), ExtInt::PosInf);
        assert_eq!("-inf".parse::<ExtInt>().unwrap(), ExtInt::NegInf);
        assert_eq!("12".parse::<ExtInt>().unwrap(), ExtInt::finite(12));
        assert!("x".parse::<ExtInt>().is_err());
    }

    #[test]
    fn kernel_of_incidence() {
        let b = IntMatrix::from_i64(&[&[1, 1, 0, 0], &[0, 0, 1, 1], &[1, 0, 1, 0], &[0, 1, 0, 1]], 4).unwrap();
        let k = kernel_basis(&b);
        assert_eq!(k.len(), 1);
        assert!(is_zero_vec(&b.matvec(&k[0]).unwrap()));
        assert_eq!(norm1(&k[0]), int(4));
    }

    #[test]
    fn integer_solve() {
        let a = IntMatrix::from_i64(&[&[2, 4]], 2).unwrap();
        assert!(solve_integer(&a, &ivec(&[3])).unwrap().is_none());
        let (x, k) = solve_integer(&a, &ivec(&[6])).unwrap().unwrap();
        assert_eq!(a.matvec(&x).unwrap(), ivec(&[6]));
        assert_eq!(k.len(), 1);
    }
}
