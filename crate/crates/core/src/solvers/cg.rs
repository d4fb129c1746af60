//! Conjugate gradients for symmetric positive definite systems: the
//! standard preconditioned form, the Chronopoulos-Gear single-reduction
//! form and the pipelined form.
//!
//! Without a preconditioner `u = r`, `m = w` and `q = s`; those vectors are
//! then not stored and their accessors alias the plain ones.

use super::{
    finished_step, Checkpoint, Engine, Event, KrylovSolver, SolverVariant, StepOutcome,
    StepReport, StepScalars, VectorAccess,
};
use crate::error::{BreakdownKind, Result};
use crate::kernels::update2;
use crate::Scalar;

/// Fields and accessors shared by the three CG forms.
struct CgCore<'a, T: Scalar> {
    eng: Engine<'a, T>,
    x: Vec<T>,
    r: Vec<T>,
    u: Vec<T>,
    p: Vec<T>,
    s: Vec<T>,
    alpha: T,
    /// `(r_i, u_i)`.
    gamma: T,
    iteration: usize,
    rnorm: f64,
    converged: bool,
    breakdown: Option<(BreakdownKind, usize)>,
    setup_events: Vec<Event>,
}

impl<'a, T: Scalar> CgCore<'a, T> {
    fn new(mut eng: Engine<'a, T>, x0: &[T], ev: &mut Vec<Event>) -> Result<Self> {
        let n = eng.n();
        let r = eng.initial_residual(x0, ev)?;
        let mut u = Vec::new();
        if eng.variant.preconditioned {
            u = vec![T::zero(); n];
            eng.precond(&r, &mut u, ev)?;
        }
        Ok(CgCore {
            x: x0.to_vec(),
            r,
            u,
            p: vec![T::zero(); n],
            s: vec![T::zero(); n],
            alpha: T::zero(),
            gamma: T::zero(),
            iteration: 0,
            rnorm: 0.0,
            converged: false,
            breakdown: None,
            setup_events: Vec::new(),
            eng,
        })
    }

    fn pre(&self) -> bool {
        self.eng.variant.preconditioned
    }

    fn u(&self) -> &[T] {
        if self.pre() {
            &self.u
        } else {
            &self.r
        }
    }

    /// Fixes the reference norm from `(r0, r0)` after the setup reduction.
    fn set_reference(&mut self, rr: &T, ev: Vec<Event>) {
        self.eng.set_reference(rr);
        self.rnorm = self.eng.r0_norm;
        self.converged = self.eng.converged(self.rnorm);
        self.setup_events = ev;
    }

    fn vector(&self, name: &str) -> Option<&[T]> {
        let v: &[T] = match name {
            "x" => &self.x,
            "r" => &self.r,
            "u" => self.u(),
            "p" => &self.p,
            "s" => &self.s,
            _ => return None,
        };
        Some(v)
    }

    fn report(&self, events: Vec<Event>, alpha: T, beta: Option<T>, outcome: StepOutcome) -> StepReport<T> {
        StepReport {
            iteration: self.iteration - 1,
            events,
            replacement_events: Vec::new(),
            replaced: false,
            residual_norm: self.rnorm,
            scalars: Some(StepScalars {
                alpha,
                omega: None,
                beta,
            }),
            outcome,
        }
    }

    fn fail(&mut self, kind: BreakdownKind, iteration: usize) -> crate::Error {
        self.breakdown = Some((kind, iteration));
        self.eng.breakdown(kind, iteration)
    }
}

macro_rules! delegate_solver {
    ($ty:ident) => {
        impl<T: Scalar> VectorAccess<T> for $ty<'_, T> {
            fn vector(&self, name: &str) -> Option<&[T]> {
                self.extra(name).or_else(|| self.c.vector(name))
            }
        }

        impl<T: Scalar> KrylovSolver<T> for $ty<'_, T> {
            fn variant(&self) -> SolverVariant {
                self.c.eng.variant
            }

            fn iteration(&self) -> usize {
                self.c.iteration
            }

            fn x(&self) -> &[T] {
                &self.c.x
            }

            fn initial_residual_norm(&self) -> f64 {
                self.c.eng.r0_norm
            }

            fn residual_norm(&self) -> f64 {
                self.c.rnorm
            }

            fn is_converged(&self) -> bool {
                self.c.converged
            }

            fn breakdown(&self) -> Option<(BreakdownKind, usize)> {
                self.c.breakdown
            }

            fn setup_events(&self) -> &[Event] {
                &self.c.setup_events
            }

            fn step_with(
                &mut self,
                _hook: &mut dyn FnMut(Checkpoint, &dyn VectorAccess<T>),
            ) -> Result<StepReport<T>> {
                let c = &self.c;
                if let Some(done) =
                    finished_step(&c.eng, c.iteration, c.converged, c.breakdown, c.rnorm)
                {
                    return done;
                }
                self.advance()
            }
        }
    };
}

/// Preconditioned CG with two reductions per iteration.
pub struct StandardCg<'a, T: Scalar> {
    c: CgCore<'a, T>,
}

impl<'a, T: Scalar> StandardCg<'a, T> {
    pub(crate) fn new(eng: Engine<'a, T>, x0: &[T]) -> Result<Self> {
        let mut ev = Vec::new();
        let mut c = CgCore::new(eng, x0, &mut ev)?;
        ev.push(Event::Glred {
            dots: 2,
            overlapped: false,
        });
        let gamma = c.eng.dot(&c.r, c.u());
        let rr = c.eng.dot(&c.r, &c.r);
        c.p = c.u().to_vec();
        c.gamma = gamma;
        c.set_reference(&rr, ev);
        Ok(StandardCg { c })
    }

    fn extra(&self, _name: &str) -> Option<&[T]> {
        None
    }

    fn advance(&mut self) -> Result<StepReport<T>> {
        let c = &mut self.c;
        let i = c.iteration;
        let pre = c.pre();
        let mut ev = Vec::new();
        c.eng.spmv(&c.p, &mut c.s, &mut ev)?;
        ev.push(Event::Glred {
            dots: 1,
            overlapped: false,
        });
        let sp = c.eng.dot(&c.s, &c.p);
        if c.eng.tiny(&sp) {
            return Err(c.fail(BreakdownKind::Curvature, i));
        }
        let alpha = c.gamma.clone() / sp;
        let a = &alpha;
        update2(&mut c.x, &c.p, |x, p| *x = x.clone() + a.clone() * p.clone());
        ev.push(Event::Axpy);
        update2(&mut c.r, &c.s, |r, s| *r = r.clone() - a.clone() * s.clone());
        ev.push(Event::Axpy);
        if pre {
            c.eng.precond(&c.r, &mut c.u, &mut ev)?;
        }
        ev.push(Event::Glred {
            dots: 2,
            overlapped: false,
        });
        let gamma = c.eng.dot(&c.r, c.u());
        let rr = c.eng.dot(&c.r, &c.r);
        c.iteration += 1;
        c.rnorm = rr.to_f64().sqrt();
        if c.eng.converged(c.rnorm) {
            c.converged = true;
            return Ok(c.report(ev, alpha, None, StepOutcome::Converged));
        }
        if c.eng.tiny(&c.gamma) || c.eng.tiny(&gamma) {
            c.breakdown = Some((BreakdownKind::Gamma, i));
            return Ok(c.report(ev, alpha, None, StepOutcome::Breakdown(BreakdownKind::Gamma)));
        }
        let beta = gamma.clone() / c.gamma.clone();
        c.gamma = gamma;
        let b = &beta;
        let u: &[T] = if pre { &c.u } else { &c.r };
        update2(&mut c.p, u, |p, u| *p = u.clone() + b.clone() * p.clone());
        ev.push(Event::Axpy);
        Ok(c.report(ev, alpha, Some(beta), StepOutcome::Advanced))
    }
}

delegate_solver!(StandardCg);

/// Chronopoulos-Gear CG: one reduction per iteration, not overlapped.
pub struct ChronoGearCg<'a, T: Scalar> {
    c: CgCore<'a, T>,
    w: Vec<T>,
    beta: T,
}

impl<'a, T: Scalar> ChronoGearCg<'a, T> {
    pub(crate) fn new(eng: Engine<'a, T>, x0: &[T]) -> Result<Self> {
        let mut ev = Vec::new();
        let mut c = CgCore::new(eng, x0, &mut ev)?;
        let mut w = vec![T::zero(); c.eng.n()];
        c.eng.spmv(c.u(), &mut w, &mut ev)?;
        ev.push(Event::Glred {
            dots: 3,
            overlapped: false,
        });
        let gamma = c.eng.dot(&c.r, c.u());
        let delta = c.eng.dot(&w, c.u());
        let rr = c.eng.dot(&c.r, &c.r);
        c.set_reference(&rr, ev);
        if !c.converged {
            if c.eng.tiny(&delta) {
                c.breakdown = Some((BreakdownKind::Curvature, 0));
            } else {
                c.alpha = gamma.clone() / delta;
            }
        }
        c.gamma = gamma;
        Ok(ChronoGearCg {
            c,
            w,
            beta: T::zero(),
        })
    }

    fn extra(&self, name: &str) -> Option<&[T]> {
        (name == "w").then_some(&self.w[..])
    }

    fn advance(&mut self) -> Result<StepReport<T>> {
        let c = &mut self.c;
        let i = c.iteration;
        let pre = c.pre();
        let mut ev = Vec::new();
        let (alpha, b) = (c.alpha.clone(), &self.beta);
        {
            let u: &[T] = if pre { &c.u } else { &c.r };
            update2(&mut c.p, u, |p, u| *p = u.clone() + b.clone() * p.clone());
        }
        ev.push(Event::Axpy);
        update2(&mut c.s, &self.w, |s, w| *s = w.clone() + b.clone() * s.clone());
        ev.push(Event::Axpy);
        let a = &alpha;
        update2(&mut c.x, &c.p, |x, p| *x = x.clone() + a.clone() * p.clone());
        ev.push(Event::Axpy);
        update2(&mut c.r, &c.s, |r, s| *r = r.clone() - a.clone() * s.clone());
        ev.push(Event::Axpy);
        if pre {
            c.eng.precond(&c.r, &mut c.u, &mut ev)?;
        }
        let u: &[T] = if pre { &c.u } else { &c.r };
        c.eng.spmv(u, &mut self.w, &mut ev)?;
        ev.push(Event::Glred {
            dots: 3,
            overlapped: false,
        });
        let gamma = c.eng.dot(&c.r, u);
        let delta = c.eng.dot(&self.w, u);
        let rr = c.eng.dot(&c.r, &c.r);
        c.iteration += 1;
        c.rnorm = rr.to_f64().sqrt();
        if c.eng.converged(c.rnorm) {
            c.converged = true;
            return Ok(c.report(ev, alpha, None, StepOutcome::Converged));
        }
        match cg_scalars(&c.eng, &gamma, &c.gamma, &delta, &alpha) {
            Ok((beta, next)) => {
                c.gamma = gamma;
                c.alpha = next;
                self.beta = beta.clone();
                Ok(c.report(ev, alpha, Some(beta), StepOutcome::Advanced))
            }
            Err(kind) => {
                c.breakdown = Some((kind, i));
                Ok(c.report(ev, alpha, None, StepOutcome::Breakdown(kind)))
            }
        }
    }
}

delegate_solver!(ChronoGearCg);

/// `beta_{i+1} = gamma_{i+1}/gamma_i` and
/// `alpha_{i+1} = (delta/gamma_{i+1} - beta_{i+1}/alpha_i)^{-1}`.
fn cg_scalars<T: Scalar>(
    eng: &Engine<'_, T>,
    gamma: &T,
    gamma_prev: &T,
    delta: &T,
    alpha_prev: &T,
) -> std::result::Result<(T, T), BreakdownKind> {
    if eng.tiny(gamma) || eng.tiny(gamma_prev) || eng.tiny(alpha_prev) {
        return Err(BreakdownKind::Gamma);
    }
    let beta = gamma.clone() / gamma_prev.clone();
    let inv = delta.clone() / gamma.clone() - beta.clone() / alpha_prev.clone();
    if eng.tiny(&inv) {
        return Err(BreakdownKind::Curvature);
    }
    Ok((beta, T::one() / inv))
}

/// Pipelined CG. The iteration is rotated so that each step ends with the
/// overlapped reduction for the next one; the setup phase runs the first
/// window.
pub struct PipelinedCg<'a, T: Scalar> {
    c: CgCore<'a, T>,
    w: Vec<T>,
    m: Vec<T>,
    n: Vec<T>,
    z: Vec<T>,
    q: Vec<T>,
    delta: T,
    gamma_prev: T,
}

impl<'a, T: Scalar> PipelinedCg<'a, T> {
    pub(crate) fn new(eng: Engine<'a, T>, x0: &[T]) -> Result<Self> {
        let mut ev = Vec::new();
        let c = CgCore::new(eng, x0, &mut ev)?;
        let dim = c.eng.n();
        let pre = c.pre();
        let hat = || if pre { vec![T::zero(); dim] } else { Vec::new() };
        let mut w = vec![T::zero(); dim];
        c.eng.spmv(c.u(), &mut w, &mut ev)?;
        let mut s = PipelinedCg {
            w,
            m: hat(),
            n: vec![T::zero(); dim],
            z: vec![T::zero(); dim],
            q: hat(),
            delta: T::zero(),
            gamma_prev: T::zero(),
            c,
        };
        let (gamma, delta, rr) = s.window(&mut ev)?;
        s.c.set_reference(&rr, ev);
        s.c.gamma = gamma;
        s.delta = delta;
        Ok(s)
    }

    /// `gamma = (r,u)`, `delta = (w,u)`, `(r,r)` overlapped with
    /// `m = M^{-1} w`, `n = A m`.
    fn window(&mut self, ev: &mut Vec<Event>) -> Result<(T, T, T)> {
        let pre = self.c.pre();
        let e = &self.c.eng;
        let r: &[T] = &self.c.r;
        let u: &[T] = if pre { &self.c.u } else { r };
        let w: &[T] = &self.w;
        let (m, n) = (&mut self.m, &mut self.n);
        e.window(
            3,
            || (e.dot(r, u), e.dot(w, u), e.dot(r, r)),
            |cev| {
                if pre {
                    e.precond(w, m, cev)?;
                    e.spmv(m, n, cev)
                } else {
                    e.spmv(w, n, cev)
                }
            },
            ev,
        )
    }

    fn extra(&self, name: &str) -> Option<&[T]> {
        let pre = self.c.pre();
        let v: &[T] = match name {
            "w" => &self.w,
            "n" => &self.n,
            "z" => &self.z,
            "m" if pre => &self.m,
            "q" if pre => &self.q,
            "m" => &self.w,
            "q" => &self.c.s,
            _ => return None,
        };
        Some(v)
    }

    fn advance(&mut self) -> Result<StepReport<T>> {
        let i = self.c.iteration;
        let pre = self.c.pre();
        let (beta, alpha) = if i > 0 {
            let c = &self.c;
            match cg_scalars(&c.eng, &c.gamma, &self.gamma_prev, &self.delta, &c.alpha) {
                Ok(v) => v,
                Err(kind) => return Err(self.c.fail(kind, i)),
            }
        } else {
            if self.c.eng.tiny(&self.delta) {
                return Err(self.c.fail(BreakdownKind::Curvature, i));
            }
            (T::zero(), self.c.gamma.clone() / self.delta.clone())
        };
        self.c.alpha = alpha.clone();

        let mut ev = Vec::new();
        let (a, b) = (&alpha, &beta);
        let c = &mut self.c;
        update2(&mut self.z, &self.n, |z, n| *z = n.clone() + b.clone() * z.clone());
        ev.push(Event::Axpy);
        if pre {
            update2(&mut self.q, &self.m, |q, m| *q = m.clone() + b.clone() * q.clone());
            ev.push(Event::Axpy);
        }
        update2(&mut c.s, &self.w, |s, w| *s = w.clone() + b.clone() * s.clone());
        ev.push(Event::Axpy);
        {
            let u: &[T] = if pre { &c.u } else { &c.r };
            update2(&mut c.p, u, |p, u| *p = u.clone() + b.clone() * p.clone());
        }
        ev.push(Event::Axpy);
        update2(&mut c.x, &c.p, |x, p| *x = x.clone() + a.clone() * p.clone());
        ev.push(Event::Axpy);
        update2(&mut c.r, &c.s, |r, s| *r = r.clone() - a.clone() * s.clone());
        ev.push(Event::Axpy);
        if pre {
            update2(&mut c.u, &self.q, |u, q| *u = u.clone() - a.clone() * q.clone());
            ev.push(Event::Axpy);
        }
        update2(&mut self.w, &self.z, |w, z| *w = w.clone() - a.clone() * z.clone());
        ev.push(Event::Axpy);

        let (gamma, delta, rr) = self.window(&mut ev)?;
        let c = &mut self.c;
        c.iteration += 1;
        c.rnorm = rr.to_f64().sqrt();
        self.gamma_prev = std::mem::replace(&mut c.gamma, gamma);
        self.delta = delta;
        let outcome = if c.eng.converged(c.rnorm) {
            c.converged = true;
            StepOutcome::Converged
        } else {
            StepOutcome::Advanced
        };
        let beta = (i > 0).then_some(beta);
        Ok(c.report(ev, alpha, beta, outcome))
    }
}

delegate_solver!(PipelinedCg);
