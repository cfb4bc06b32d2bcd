use nalgebra::{Cholesky, DMatrix, DVector};

use super::ipm::Ops;
use super::{KktResiduals, SdpMethod, SdpOptions, SdpProblem, SdpSolution, SdpStatus};
use crate::linalg::{frob, hermitize, psd_part, trace_re, Field};

/// Alternating-direction augmented Lagrangian on the dual. Slow but
/// hard to derail; used only when the interior-point method gives up.
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

    let mut gram = ops.schur(&DMatrix::identity(n, n));
    for k in 0..np {
        gram[(m_eq + k, m_eq + k)] += 1.0;
    }
    let fail = |x: DMatrix<T>| SdpSolution {
        objective: p.value(&x),
        dual_bound: f64::INFINITY,
        x,
        status: SdpStatus::NumericalError,
        iterations: 0,
        residuals: KktResiduals {
            primal: f64::INFINITY,
            dual: f64::INFINITY,
            gap: f64::INFINITY,
        },
        method: SdpMethod::Admm,
    };
    let Some(chol) = Cholesky::new(gram) else {
        return fail(DMatrix::identity(n, n));
    };
    let ac = ops.a(&c);

    let mut x = DMatrix::<T>::identity(n, n);
    let mut s = DVector::<f64>::from_element(np, 1.0);
    let mut z = DMatrix::<T>::zeros(n, n);
    let mut t = DVector::<f64>::zeros(np);
    let mut y = DVector::<f64>::zeros(m);
    let mut mu = 1.0;
    let mut res = KktResiduals::default();
    let mut status = SdpStatus::MaxIter;
    let mut iters = 0;

    for it in 1..=o.admm_max_iter {
        iters = it;
        let mut ax = ops.a(&x);
        let mut az = ops.a(&z);
        for k in 0..np {
            ax[m_eq + k] -= s[k];
            az[m_eq + k] -= t[k];
        }
        y = chol.solve(&((b - &ax) * mu - az + &ac));
        let v = hermitize(&(&c - ops.at(&y) - x.scale(mu)));
        let v_lp = DVector::from_fn(np, |k, _| y[m_eq + k] - mu * s[k]);
        z = psd_part(&v);
        t = v_lp.map(|e| e.max(0.0));
        x = (&z - &v).scale(1.0 / mu);
        s = (&t - &v_lp) / mu;

        if it % 10 == 0 {
            let mut rp = b - ops.a(&x);
            for k in 0..np {
                rp[m_eq + k] += s[k];
            }
            let rd = &c - &z - ops.at(&y);
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
            if it % 50 == 0 {
                let r = res.primal / res.dual.max(1e-300);
                if r > 10.0 {
                    mu *= 0.5;
                } else if r < 0.1 {
                    mu *= 2.0;
                }
            }
        }
    }
    SdpSolution {
        objective: p.value(&x),
        dual_bound: -b.dot(&y),
        x,
        status,
        iterations: iters,
        residuals: res,
        method: SdpMethod::Admm,
    }
}
