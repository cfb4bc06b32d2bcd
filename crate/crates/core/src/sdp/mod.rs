//! Dense semidefinite programs over real symmetric or complex Hermitian
//! matrices:
//!
//! ```text
//! maximize    Re Tr(C X)
//! subject to  Re Tr(A_i X) =  b_i
//!             Re Tr(B_j X) >= c_j
//!             X PSD
//! ```
//!
//! Solved by a primal-dual interior-point method with Nesterov-Todd
//! scaling and Mehrotra correction; an ADMM iteration takes over when the
//! interior-point method stalls.

mod admm;
mod ipm;

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Field;
use crate::C64;

/// Hermitian constraint matrix, stored sparsely when that pays off.
#[derive(Debug, Clone, PartialEq)]
pub enum SymMat<T: Field> {
    /// Nonzero entries `(row, col, value)`; both triangles are listed.
    Sparse { dim: usize, entries: Vec<(usize, usize, T)> },
    Dense(DMatrix<T>),
}

impl<T: Field> SymMat<T> {
    /// `e_i e_i^T`.
    pub fn unit(dim: usize, i: usize) -> Self {
        SymMat::Sparse {
            dim,
            entries: vec![(i, i, T::one())],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SymMat::Sparse { dim, .. } => *dim,
            SymMat::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        match self {
            SymMat::Dense(m) => m.clone(),
            SymMat::Sparse { dim, entries } => {
                let mut m = DMatrix::zeros(*dim, *dim);
                for &(r, c, v) in entries {
                    m[(r, c)] += v;
                }
                m
            }
        }
    }

    /// `Re Tr(A X)`.
    pub fn inner(&self, x: &DMatrix<T>) -> f64 {
        match self {
            SymMat::Sparse { entries, .. } => entries.iter().map(|&(r, c, v)| (v * x[(c, r)]).real()).sum(),
            SymMat::Dense(a) => crate::linalg::trace_re(a, x),
        }
    }

    /// `M += y A`.
    pub fn add_to(&self, m: &mut DMatrix<T>, y: f64) {
        match self {
            SymMat::Sparse { entries, .. } => {
                for &(r, c, v) in entries {
                    m[(r, c)] += v.scale(y);
                }
            }
            SymMat::Dense(a) => *m += a.scale(y),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::domain(format!("constraint dimension {} differs from {n}", self.dim())));
        }
        match self {
            SymMat::Sparse { entries, .. } => {
                for &(r, c, _) in entries {
                    if r >= n || c >= n {
                        return Err(Error::domain(format!("entry ({r}, {c}) outside {n}x{n}")));
                    }
                }
                check_hermitian(&self.to_dense())
            }
            SymMat::Dense(m) => check_hermitian(m),
        }
    }
}

fn check_hermitian<T: Field>(m: &DMatrix<T>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::domain("matrix is not square"));
    }
    let scale = m.iter().map(|z| z.modulus()).fold(0.0, f64::max).max(1e-300);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            if !z.is_finite() {
                return Err(Error::domain("matrix has non-finite entries"));
            }
            if (z - m[(c, r)].conjugate()).modulus() > 1e-10 * scale {
                return Err(Error::domain(format!("matrix is not Hermitian at ({r}, {c})")));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint<T: Field> {
    pub a: SymMat<T>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem<T: Field> {
    pub dim: usize,
    pub objective: DMatrix<T>,
    /// `Re Tr(A X) = b`.
    pub eq: Vec<LinearConstraint<T>>,
    /// `Re Tr(A X) >= b`.
    pub ineq: Vec<LinearConstraint<T>>,
}

impl<T: Field> SdpProblem<T> {
    pub fn new(objective: DMatrix<T>) -> Self {
        SdpProblem {
            dim: objective.nrows(),
            objective,
            eq: Vec::new(),
            ineq: Vec::new(),
        }
    }

    pub fn eq(mut self, a: SymMat<T>, b: f64) -> Self {
        self.eq.push(LinearConstraint { a, b });
        self
    }

    pub fn ge(mut self, a: SymMat<T>, b: f64) -> Self {
        self.ineq.push(LinearConstraint { a, b });
        self
    }

    /// Adds `X_ii = 1` for every `i`.
    pub fn unit_diagonal(mut self) -> Self {
        for i in 0..self.dim {
            self.eq.push(LinearConstraint {
                a: SymMat::unit(self.dim, i),
                b: 1.0,
            });
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::domain("empty problem"));
        }
        if self.objective.nrows() != self.dim {
            return Err(Error::domain("objective dimension mismatch"));
        }
        check_hermitian(&self.objective)?;
        for c in self.eq.iter().chain(&self.ineq) {
            c.a.check(self.dim)?;
            if !c.b.is_finite() {
                return Err(Error::domain("non-finite right-hand side"));
            }
        }
        Ok(())
    }

    /// Primal objective `Re Tr(C X)`.
    pub fn value(&self, x: &DMatrix<T>) -> f64 {
        crate::linalg::trace_re(&self.objective, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIter,
    NumericalError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpMethod {
    InteriorPoint,
    Admm,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResiduals {
    /// `||b - A(X)|| / (1 + ||b||)`, slack included.
    pub primal: f64,
    /// `||C - Z - A*(y)|| / (1 + ||C||)`.
    pub dual: f64,
    /// `|p - d| / (1 + |p|)`.
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution<T: Field> {
    pub x: DMatrix<T>,
    /// `Re Tr(C X)`.
    pub objective: f64,
    /// Upper bound on the optimum from the dual iterate.
    pub dual_bound: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub residuals: KktResiduals,
    pub method: SdpMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub admm_fallback: bool,
    pub admm_max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            tol: 1e-7,
            max_iter: 200,
            admm_fallback: true,
            admm_max_iter: 20_000,
        }
    }
}

/// Solve with the interior-point method, falling back to ADMM on
/// stalls. Malformed problems are rejected; everything else is reported
/// through the status.
pub fn solve<T: Field>(p: &SdpProblem<T>, opts: &SdpOptions) -> Result<SdpSolution<T>> {
    p.validate()?;
    let sol = ipm::solve(p, opts);
    if opts.admm_fallback && matches!(sol.status, SdpStatus::MaxIter | SdpStatus::NumericalError) {
        let alt = admm::solve(p, opts);
        if alt.status == SdpStatus::Optimal || alt.residuals.primal < sol.residuals.primal {
            return Ok(alt);
        }
    }
    Ok(sol)
}

/// Same problem over real symmetric matrices of twice the size, using
/// `X -> [[Re X, -Im X], [Im X, Re X]]`. The embedding doubles every
/// trace, so all matrices are halved to keep values and duals unchanged.
pub fn real_embed(p: &SdpProblem<C64>) -> SdpProblem<f64> {
    let emb = |m: &DMatrix<C64>| embed_matrix(m).scale(0.5);
    let con = |c: &LinearConstraint<C64>| LinearConstraint {
        a: match &c.a {
            SymMat::Dense(m) => SymMat::Dense(emb(m)),
            SymMat::Sparse { dim, entries } => {
                let n = *dim;
                let mut e = Vec::with_capacity(entries.len() * 4);
                for &(r, col, v) in entries {
                    let (re, im) = (0.5 * v.re, 0.5 * v.im);
                    for (rr, cc, val) in [(r, col, re), (r + n, col + n, re), (r + n, col, im), (r, col + n, -im)] {
                        if val != 0.0 {
                            e.push((rr, cc, val));
                        }
                    }
                }
                SymMat::Sparse { dim: 2 * n, entries: e }
            }
        },
        b: c.b,
    };
    SdpProblem {
        dim: 2 * p.dim,
        objective: emb(&p.objective),
        eq: p.eq.iter().map(con).collect(),
        ineq: p.ineq.iter().map(con).collect(),
    }
}

pub fn embed_matrix(m: &DMatrix<C64>) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = m[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`embed_matrix`], averaging the redundant blocks.
pub fn unembed_matrix(x: &DMatrix<f64>) -> DMatrix<C64> {
    let n = x.nrows() / 2;
    DMatrix::from_fn(n, n, |r, c| {
        C64::new(
            0.5 * (x[(r, c)] + x[(r + n, c + n)]),
            0.5 * (x[(r + n, c)] - x[(r, c + n)]),
        )
    })
}

/// Solve a complex problem through its real embedding.
pub fn solve_embedded(p: &SdpProblem<C64>, opts: &SdpOptions) -> Result<SdpSolution<C64>> {
    p.validate()?;
    let s = solve(&real_embed(p), opts)?;
    let x = crate::linalg::hermitize(&unembed_matrix(&s.x));
    Ok(SdpSolution {
        objective: p.value(&x),
        x,
        dual_bound: s.dual_bound,
        status: s.status,
        iterations: s.iterations,
        residuals: s.residuals,
        method: s.method,
    })
}

// Plain-text dump format:
//
//   sdp <dim>
//   objective
//   <dim rows of `re:im` pairs separated by spaces>
//   eq <b>            (or `ge <b>`)
//   <dim rows>
//   ...
//
// Every matrix is written densely.

fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<C64>) -> Result<()> {
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:e}:{:e}", m[(r, c)].re, m[(r, c)].im)).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn dump<W: Write>(p: &SdpProblem<C64>, mut w: W) -> Result<()> {
    writeln!(w, "sdp {}", p.dim)?;
    writeln!(w, "objective")?;
    write_matrix(&mut w, &p.objective)?;
    for (tag, list) in [("eq", &p.eq), ("ge", &p.ineq)] {
        for c in list {
            writeln!(w, "{tag} {:e}", c.b)?;
            write_matrix(&mut w, &c.a.to_dense())?;
        }
    }
    Ok(())
}

pub fn load<R: BufRead>(r: R) -> Result<SdpProblem<C64>> {
    let lines: Vec<String> = r.lines().collect::<std::result::Result<_, _>>()?;
    let mut it = lines.iter().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let perr = |i: usize, m: &str| Error::Parse(format!("line {}: {m}", i + 1));
    let (i, head) = it.next().ok_or_else(|| Error::Parse("empty dump".into()))?;
    let dim: usize = head
        .strip_prefix("sdp ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| perr(i, "expected `sdp <dim>`"))?;
    let read_matrix = |it: &mut dyn Iterator<Item = (usize, &String)>| -> Result<DMatrix<C64>> {
        let mut m = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            let (i, line) = it.next().ok_or_else(|| Error::Parse("truncated matrix".into()))?;
            let cells: Vec<&str> = line.split_whitespace().collect();
            if cells.len() != dim {
                return Err(perr(i, "wrong number of columns"));
            }
            for (c, cell) in cells.iter().enumerate() {
                let (re, im) = cell.split_once(':').ok_or_else(|| perr(i, "expected re:im"))?;
                m[(r, c)] = C64::new(
                    re.parse().map_err(|_| perr(i, "bad number"))?,
                    im.parse().map_err(|_| perr(i, "bad number"))?,
                );
            }
        }
        Ok(m)
    };
    let (i, tag) = it.next().ok_or_else(|| Error::Parse("missing objective".into()))?;
    if tag.trim() != "objective" {
        return Err(perr(i, "expected `objective`"));
    }
    let mut p = SdpProblem::new(read_matrix(&mut it)?);
    while let Some((i, line)) = it.next() {
        let (tag, b) = line.trim().split_once(' ').ok_or_else(|| perr(i, "expected `eq <b>` or `ge <b>`"))?;
        let b: f64 = b.trim().parse().map_err(|_| perr(i, "bad right-hand side"))?;
        let a = SymMat::Dense(read_matrix(&mut it)?);
        match tag {
            "eq" => p = p.eq(a, b),
            "ge" => p = p.ge(a, b),
            _ => return Err(perr(i, "expected `eq` or `ge`")),
        }
    }
    p.validate()?;
    Ok(p)
}
