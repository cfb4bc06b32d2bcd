use nalgebra::{Cholesky, DMatrix, DVector};

use super::{KktResiduals, SdpMethod, SdpOptions, SdpProblem, SdpSolution, SdpStatus, SymMat};
use crate::linalg::{frob, hermitize, min_eig, trace_re, Field};

/// Equality rows first, then inequality rows with their surplus slacks
/// `Re Tr(A X) - s = b`, `s >= 0`.
pub(super) struct Ops<'a, T: Field> {
    pub cons: Vec<&'a SymMat<T>>,
    pub b: DVector<f64>,
    pub m_eq: usize,
    pub n: usize,
}

impl<'a, T: Field> Ops<'a, T> {
    pub fn new(p: &'a SdpProblem<T>) -> Self {
        let cons: Vec<&SymMat<T>> = p.eq.iter().chain(&p.ineq).map(|c| &c.a).collect();
        let b = DVector::from_iterator(cons.len(), p.eq.iter().chain(&p.ineq).map(|c| c.b));
        Ops {
            cons,
            b,
            m_eq: p.eq.len(),
            n: p.dim,
        }
    }

    pub fn m(&self) -> usize {
        self.cons.len()
    }

    pub fn a(&self, x: &DMatrix<T>) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.cons.iter().map(|c| c.inner(x)))
    }

    pub fn at(&self, y: &DVector<f64>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (c, &yi) in self.cons.iter().zip(y.iter()) {
            c.add_to(&mut out, yi);
        }
        out
    }

    /// `M_ij = Re Tr(A_i W A_j W)`.
    pub fn schur(&self, w: &DMatrix<T>) -> DMatrix<f64> {
        let m = self.m();
        let wd: Vec<Option<DMatrix<T>>> = self
            .cons
            .iter()
            .map(|c| match c {
                SymMat::Dense(a) => Some(w * a * w),
                SymMat::Sparse { .. } => None,
            })
            .collect();
        let mut out = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = match (&wd[i], &wd[j], self.cons[i], self.cons[j]) {
                    (Some(g), _, _, other) | (_, Some(g), other, _) => other.inner(g),
                    (None, None, SymMat::Sparse { entries: e, .. }, SymMat::Sparse { entries: f, .. }) => {
                        let mut s = 0.0;
                        for &(p, q, a) in e {
                            for &(r, t, b) in f {
                                s += (a * w[(q, r)] * b * w[(t, p)]).real();
                            }
                        }
                        s
                    }
                    _ => unreachable!(),
                };
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }
}

/// Largest `a` with `X + a dX` PSD, or infinity.
pub(super) fn max_step<T: Field>(x: &DMatrix<T>, dx: &DMatrix<T>) -> f64 {
    let Some(ch) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = ch.l();
    let Some(y) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(y2) = l.solve_lower_triangular(&y.adjoint()) else {
        return 0.0;
    };
    let lmin = min_eig(&y2);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn lp_step(s: &DVector<f64>, ds: &DVector<f64>) -> f64 {
    s.iter()
        .zip(ds.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&v, &d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

struct Dir<T: Field> {
    dx: DMatrix<T>,
    dy: DVector<f64>,
    dz: DMatrix<T>,
    ds: DVector<f64>,
    dt: DVector<f64>,
}

pub(super) fn solve<T: Field>(p: &SdpProblem<T>, o: &SdpOptions) -> SdpSolution<T> {
    let ops = Ops::new(p);
    let n = p.dim;
    let m = ops.m();
    let m_eq = ops.m_eq;
    let np = m - m_eq;
    let c: DMatrix<T> = -&p.objective;
    let b = &ops.b;
    let b_norm = b.norm();
    let c_norm = frob(&c);

    let mut a_max = 0.0f64;
    let mut ratio_max = 0.0f64;
    for (k, con) in ops.cons.iter().enumerate() {
        let an = frob(&con.to_dense());
        a_max = a_max.max(an);
        ratio_max = ratio_max.max((1.0 + b[k].abs()) / (1.0 + an));
    }
    let sn = (n as f64).sqrt();
    let xi = 10f64.max(sn).max(n as f64 * ratio_max);
    let eta = 10f64.max(sn).max(a_max).max(c_norm);

    let mut x = DMatrix::<T>::identity(n, n).scale(xi);
    let mut z = DMatrix::<T>::identity(n, n).scale(eta);
    let mut y = DVector::<f64>::zeros(m);
    let mut s = DVector::<f64>::from_element(np, xi);
    let mut t = DVector::<f64>::from_element(np, eta);
    let deg = (n + np) as f64;
    let tau = 0.98;

    let mut status = SdpStatus::MaxIter;
    let mut res = KktResiduals::default();
    let mut iters = 0;

    for it in 0..=o.max_iter {
        iters = it;
        // residuals of the minimisation form
        let mut rp = b - ops.a(&x);
        for k in 0..np {
            rp[m_eq + k] += s[k];
        }
        let aty = ops.at(&y);
        let rd = &c - &z - &aty;
        let rd_lp = DVector::from_fn(np, |k, _| -t[k] + y[m_eq + k]);
        let pobj = trace_re(&c, &x);
        let dobj = b.dot(&y);
        res = KktResiduals {
            primal: rp.norm() / (1.0 + b_norm),
            dual: (frob(&rd).powi(2) + rd_lp.norm_squared()).sqrt() / (1.0 + c_norm),
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs()),
        };
        if res.primal <= o.tol && res.dual <= o.tol && res.gap <= o.tol {
            status = SdpStatus::Optimal;
            break;
        }
        if dobj > 0.0 {
            let lp = DVector::from_fn(np, |k, _| t[k] - y[m_eq + k]).norm();
            if (frob(&(&aty + &z)) + lp) / dobj < 1e-8 {
                status = SdpStatus::Infeasible;
                break;
            }
        }
        if it == o.max_iter {
            break;
        }

        let mu = (trace_re(&x, &z) + s.dot(&t)) / deg;

        // Nesterov-Todd scaling W = G G^H with G^-1 X G^-H = G^H Z G = diag(lam).
        let (Some(cx), Some(cz)) = (Cholesky::new(x.clone()), Cholesky::new(z.clone())) else {
            status = SdpStatus::NumericalError;
            break;
        };
        let lx = cx.l();
        let lz = cz.l();
        let svd = (lz.adjoint() * &lx).svd(false, true);
        let Some(v_t) = svd.v_t else {
            status = SdpStatus::NumericalError;
            break;
        };
        let lam: Vec<f64> = svd.singular_values.iter().copied().collect();
        if lam.iter().any(|&l| !(l > 0.0)) {
            status = SdpStatus::NumericalError;
            break;
        }
        let v = v_t.adjoint();
        let mut g = &lx * &v;
        for (j, &l) in lam.iter().enumerate() {
            let f = 1.0 / l.sqrt();
            g.column_mut(j).iter_mut().for_each(|e| *e = e.scale(f));
        }
        let Some(lx_inv) = lx.solve_lower_triangular(&DMatrix::identity(n, n)) else {
            status = SdpStatus::NumericalError;
            break;
        };
        let mut g_inv = &v_t * lx_inv;
        for (i, &l) in lam.iter().enumerate() {
            let f = l.sqrt();
            g_inv.row_mut(i).iter_mut().for_each(|e| *e = e.scale(f));
        }
        let w = hermitize(&(&g * g.adjoint()));
        let d = DVector::from_fn(np, |k, _| s[k] / t[k]);

        let mut mm = ops.schur(&w);
        for k in 0..np {
            mm[(m_eq + k, m_eq + k)] += d[k];
        }
        let chol_m = match Cholesky::new(mm.clone()) {
            Some(ch) => ch,
            None => {
                let reg = 1e-12 * (1.0 + mm.trace().abs() / m.max(1) as f64);
                match Cholesky::new(mm + DMatrix::identity(m, m) * reg) {
                    Some(ch) => ch,
                    None => {
                        status = SdpStatus::NumericalError;
                        break;
                    }
                }
            }
        };
        let wrdw = &w * &rd * &w;

        let direction = |rc: &DMatrix<T>, r_lp: &DVector<f64>| -> Dir<T> {
            let mut rhs = &rp - ops.a(&(rc - &wrdw));
            for k in 0..np {
                rhs[m_eq + k] += r_lp[k] - d[k] * rd_lp[k];
            }
            let dy = chol_m.solve(&rhs);
            let dz = hermitize(&(&rd - ops.at(&dy)));
            let dx = hermitize(&(rc - &w * &dz * &w));
            let dt = DVector::from_fn(np, |k, _| rd_lp[k] + dy[m_eq + k]);
            let ds = DVector::from_fn(np, |k, _| r_lp[k] - d[k] * dt[k]);
            Dir { dx, dy, dz, ds, dt }
        };
        let steps = |dir: &Dir<T>| -> (f64, f64) {
            let ap = (tau * max_step(&x, &dir.dx)).min(tau * lp_step(&s, &dir.ds)).min(1.0);
            let ad = (tau * max_step(&z, &dir.dz)).min(tau * lp_step(&t, &dir.dt)).min(1.0);
            (ap, ad)
        };

        // predictor
        let aff = direction(&(-&x), &(-&s));
        let (ap, ad) = steps(&aff);
        let xa = &x + aff.dx.scale(ap);
        let za = &z + aff.dz.scale(ad);
        let mu_aff = (trace_re(&xa, &za) + (&s + &aff.ds * ap).dot(&(&t + &aff.dt * ad))) / deg;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector in the scaled space
        let dxt = &g_inv * &aff.dx * g_inv.adjoint();
        let dzt = g.adjoint() * &aff.dz * &g;
        let q = (&dxt * &dzt + &dzt * &dxt).scale(0.5);
        let smu = sigma * mu;
        let sc = DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { T::from_real(smu - lam[i] * lam[i]) } else { T::zero() };
            (diag - q[(i, j)]).scale(2.0 / (lam[i] + lam[j]))
        });
        let rc = hermitize(&(&g * sc * g.adjoint()));
        let r_lp = DVector::from_fn(np, |k, _| (smu - s[k] * t[k] - aff.ds[k] * aff.dt[k]) / t[k]);
        let dir = direction(&rc, &r_lp);
        let (ap, ad) = steps(&dir);
        if ap < 1e-14 && ad < 1e-14 {
            status = SdpStatus::NumericalError;
            break;
        }
        x = hermitize(&(&x + dir.dx.scale(ap)));
        s += &dir.ds * ap;
        y += &dir.dy * ad;
        z = hermitize(&(&z + dir.dz.scale(ad)));
        t += &dir.dt * ad;
    }

    SdpSolution {
        objective: p.value(&x),
        dual_bound: -b.dot(&y),
        x,
        status,
        iterations: iters,
        residuals: res,
        method: SdpMethod::InteriorPoint,
    }
}
