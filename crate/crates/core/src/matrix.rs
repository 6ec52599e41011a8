//! Dense square matrices over exact rationals.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{parse_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    dimension: usize,
    entries: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::DomainError("matrix dimension must be at least 1".into()));
        }
        Ok(RationalMatrix {
            dimension,
            entries: vec![Rational::zero(); dimension * dimension],
        })
    }

    pub fn identity(dimension: usize) -> Result<Self> {
        let mut m = Self::zeros(dimension)?;
        for i in 0..dimension {
            m[(i, i)] = Rational::one();
        }
        Ok(m)
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let dimension = rows.len();
        if dimension == 0 {
            return Err(Error::DomainError("matrix dimension must be at least 1".into()));
        }
        let mut entries = Vec::with_capacity(dimension * dimension);
        for row in rows {
            if row.len() != dimension {
                return Err(Error::DimensionError {
                    left: dimension,
                    right: row.len(),
                });
            }
            entries.extend(row);
        }
        Ok(RationalMatrix { dimension, entries })
    }

    pub fn from_fn(dimension: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Result<Self> {
        let mut m = Self::zeros(dimension)?;
        for i in 0..dimension {
            for j in 0..dimension {
                m[(i, j)] = f(i, j);
            }
        }
        Ok(m)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.entries[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Rational]> {
        self.entries.chunks(self.dimension)
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn transpose(&self) -> Self {
        let n = self.dimension;
        let mut t = self.clone();
        for i in 0..n {
            for j in 0..n {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.dimension;
        (0..n).all(|i| (i + 1..n).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn is_identity(&self) -> bool {
        let n = self.dimension;
        (0..n).all(|i| {
            (0..n).all(|j| {
                let v = &self[(i, j)];
                if i == j {
                    v.is_one()
                } else {
                    v.is_zero()
                }
            })
        })
    }

    pub fn multiply(&self, other: &RationalMatrix) -> Result<RationalMatrix> {
        let n = self.dimension;
        if other.dimension != n {
            return Err(Error::DimensionError {
                left: n,
                right: other.dimension,
            });
        }
        let mut product = RationalMatrix::zeros(n)?;
        for i in 0..n {
            for k in 0..n {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        product[(i, j)] += a * b;
                    }
                }
            }
        }
        Ok(product)
    }

    /// Gauss-Jordan inversion. The pivot for each column is the first
    /// nonzero entry at or below the current row. On failure the error
    /// carries the rank reached by full elimination.
    pub fn invert(&self) -> Result<RationalMatrix> {
        let n = self.dimension;
        let mut work = self.clone();
        let mut inverse = RationalMatrix::identity(n)?;
        let rank = eliminate(&mut work, Some(&mut inverse));
        if rank < n {
            return Err(Error::SingularError { dimension: n, rank });
        }
        Ok(inverse)
    }

    pub fn rank(&self) -> usize {
        eliminate(&mut self.clone(), None)
    }

    pub fn determinant(&self) -> Rational {
        let n = self.dimension;
        let mut work = self.clone();
        let mut det = Rational::one();
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| !work[(r, col)].is_zero()) else {
                return Rational::zero();
            };
            if pivot != col {
                work.swap_rows(pivot, col);
                det = -det;
            }
            let p = work[(col, col)].clone();
            det *= &p;
            for r in col + 1..n {
                if work[(r, col)].is_zero() {
                    continue;
                }
                let factor = &work[(r, col)] / &p;
                for c in col..n {
                    let delta = &factor * &work[(col, c)];
                    work[(r, c)] -= delta;
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let n = self.dimension;
        for c in 0..n {
            self.entries.swap(a * n + c, b * n + c);
        }
    }

    /// Deletes row and column `index`; `None` for a 1x1 matrix.
    pub fn minor(&self, index: usize) -> Option<RationalMatrix> {
        let n = self.dimension;
        if n == 1 {
            return None;
        }
        let keep: Vec<usize> = (0..n).filter(|&i| i != index).collect();
        RationalMatrix::from_fn(n - 1, |i, j| self[(keep[i], keep[j])].clone()).ok()
    }

    /// Reads the comma-separated text format: one row per line, `#` starts a
    /// comment, blank lines are skipped.
    pub fn parse(text: &str) -> Result<RationalMatrix> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let row = content
                .split(',')
                .enumerate()
                .map(|(col, cell)| {
                    parse_rational(cell).map_err(|e| Error::SyntaxError {
                        line: lineno + 1,
                        column: col + 1,
                        message: e.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((lineno + 1, row));
        }
        let dimension = rows.len();
        if dimension == 0 {
            return Err(Error::SchemaError("matrix text has no rows".into()));
        }
        if let Some((line, row)) = rows.iter().find(|(_, row)| row.len() != dimension) {
            return Err(Error::SchemaError(format!(
                "line {line}: row has {} entries but the matrix has {dimension} rows",
                row.len()
            )));
        }
        RationalMatrix::from_rows(rows.into_iter().map(|(_, row)| row).collect())
    }
}

/// Reduces `work` to reduced row echelon form, mirroring each row operation
/// on `shadow`. Returns the rank.
fn eliminate(work: &mut RationalMatrix, mut shadow: Option<&mut RationalMatrix>) -> usize {
    let n = work.dimension;
    let mut rank = 0;
    for col in 0..n {
        let Some(pivot) = (rank..n).find(|&r| !work[(r, col)].is_zero()) else {
            continue;
        };
        work.swap_rows(pivot, rank);
        if let Some(s) = shadow.as_deref_mut() {
            s.swap_rows(pivot, rank);
        }
        let inv = work[(rank, col)].recip();
        for c in 0..n {
            work[(rank, c)] *= &inv;
            if let Some(s) = shadow.as_deref_mut() {
                s[(rank, c)] *= &inv;
            }
        }
        for r in 0..n {
            if r == rank || work[(r, col)].is_zero() {
                continue;
            }
            let factor = work[(r, col)].clone();
            for c in 0..n {
                let delta = &factor * &work[(rank, c)];
                work[(r, c)] -= delta;
                if let Some(s) = shadow.as_deref_mut() {
                    let delta = &factor * &s[(rank, c)];
                    s[(r, c)] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

impl Index<(usize, usize)> for RationalMatrix {
    type Output = Rational;

    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        assert!(i < self.dimension && j < self.dimension, "index out of range");
        &self.entries[i * self.dimension + j]
    }
}

impl IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        assert!(i < self.dimension && j < self.dimension, "index out of range");
        &mut self.entries[i * self.dimension + j]
    }
}

/// Writes the comma-separated text format read by [`RationalMatrix::parse`].
impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(f, "{}", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Adjacency matrix of the complete graph on `n` nodes.
pub fn k_matrix(n: usize) -> Result<RationalMatrix> {
    if n < 2 {
        return Err(Error::DomainError(format!("complete graph needs n >= 2, got {n}")));
    }
    RationalMatrix::from_fn(n, |i, j| if i == j { Rational::zero() } else { Rational::one() })
}

/// Closed-form inverse of [`k_matrix`]: `1/(n-1)` off the diagonal and
/// `-(n-2)/(n-1)` on it.
pub fn k_inverse_closed_form(n: usize) -> Result<RationalMatrix> {
    if n < 2 {
        return Err(Error::DomainError(format!("complete graph needs n >= 2, got {n}")));
    }
    let denom = Rational::from_integer((n as i64 - 1).into());
    let off = denom.recip();
    let diag = -Rational::from_integer((n as i64 - 2).into()) / &denom;
    RationalMatrix::from_fn(n, |i, j| if i == j { diag.clone() } else { off.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn m(rows: &[&[i64]]) -> RationalMatrix {
        RationalMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn k2_squared_is_identity() {
        let k2 = k_matrix(2).unwrap();
        assert_eq!(k2, m(&[&[0, 1], &[1, 0]]));
        assert!(k2.multiply(&k2).unwrap().is_identity());
        assert!(!k2.is_identity());
    }

    #[test]
    fn k_matrix_shapes() {
        assert!(k_matrix(1).is_err());
        let k3 = k_matrix(3).unwrap();
        assert_eq!(k3, m(&[&[0, 1, 1], &[1, 0, 1], &[1, 1, 0]]));
        let k4 = k_matrix(4).unwrap();
        for row in k4.rows() {
            assert_eq!(row.iter().sum::<Rational>(), int(3));
        }
    }

    #[test]
    fn closed_form_small_cases() {
        assert_eq!(k_inverse_closed_form(2).unwrap(), k_matrix(2).unwrap());
        let k4i = k_inverse_closed_form(4).unwrap();
        assert_eq!(k4i[(0, 1)], ratio(1, 3));
        assert_eq!(k4i[(2, 2)], ratio(-2, 3));
        assert!(k_inverse_closed_form(0).is_err());
        let product = k_matrix(7).unwrap().multiply(&k_inverse_closed_form(7).unwrap()).unwrap();
        assert!(product.is_identity());
    }

    #[test]
    fn zero_matrix_is_singular_rank_zero() {
        let z = RationalMatrix::zeros(3).unwrap();
        assert_eq!(z.invert(), Err(Error::SingularError { dimension: 3, rank: 0 }));
    }

    #[test]
    fn singular_error_reports_rank() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[0, 1, 1]]);
        assert_eq!(a.invert(), Err(Error::SingularError { dimension: 3, rank: 2 }));
        assert_eq!(a.rank(), 2);
        assert!(a.determinant().is_zero());
    }

    #[test]
    fn identity_inverts_to_itself() {
        let i5 = RationalMatrix::identity(5).unwrap();
        assert!(i5.is_identity());
        assert_eq!(i5.invert().unwrap(), i5);
    }

    #[test]
    fn known_integer_inverse() {
        // inverse of [[1,2,3],[0,1,4],[5,6,0]] is [[-24,18,5],[20,-15,-4],[-5,4,1]]
        let a = m(&[&[1, 2, 3], &[0, 1, 4], &[5, 6, 0]]);
        let expected = m(&[&[-24, 18, 5], &[20, -15, -4], &[-5, 4, 1]]);
        assert_eq!(a.invert().unwrap(), expected);
        assert_eq!(a.determinant(), int(1));
    }

    #[test]
    fn pivot_needs_row_swap() {
        let a = m(&[&[0, 1], &[1, 0]]);
        assert_eq!(a.invert().unwrap(), a);
        assert_eq!(a.determinant(), int(-1));
    }

    #[test]
    fn multiply_dimension_mismatch() {
        let a = RationalMatrix::identity(2).unwrap();
        let b = RationalMatrix::identity(3).unwrap();
        assert_eq!(a.multiply(&b), Err(Error::DimensionError { left: 2, right: 3 }));
    }

    #[test]
    fn text_format_round_trip() {
        let text = "# comment\n1, 3/2\n0.5, -2\n";
        let a = RationalMatrix::parse(text).unwrap();
        assert_eq!(a[(1, 0)], ratio(1, 2));
        assert_eq!(a.to_string(), "1, 3/2\n1/2, -2\n");
        assert_eq!(RationalMatrix::parse(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn text_format_errors() {
        assert!(matches!(RationalMatrix::parse("1, 2\n3"), Err(Error::SchemaError(_))));
        assert!(matches!(
            RationalMatrix::parse("1, x\n3, 4"),
            Err(Error::SyntaxError { line: 1, column: 2, .. })
        ));
        assert!(matches!(RationalMatrix::parse("\n# nothing\n"), Err(Error::SchemaError(_))));
    }

    #[test]
    fn minor_drops_row_and_column() {
        let a = m(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]);
        assert_eq!(a.minor(1).unwrap(), m(&[&[1, 3], &[7, 9]]));
        assert!(RationalMatrix::identity(1).unwrap().minor(0).is_none());
    }
}
