//! BiCGStab with merged reductions: the communication-avoiding form and the
//! pipelined form (optionally with residual replacement), each with or
//! without right preconditioning.
//!
//! Without a preconditioner every hatted vector coincides with its plain
//! counterpart, so only the plain one is stored and the hatted accessors
//! alias it.

use super::{
    compute_alpha_merged, finished_step, Checkpoint, Engine, Event, KrylovSolver, MergedDots,
    SolverVariant, StepOutcome, StepReport, StepScalars, VectorAccess,
};
use crate::error::{BreakdownKind, Result};
use crate::kernels::{self, update2, update3, update4};
use crate::solvers::Form;
use crate::Scalar;

pub struct MergedBicgstab<'a, T: Scalar> {
    eng: Engine<'a, T>,
    pipelined: bool,
    pre: bool,
    x: Vec<T>,
    r0: Vec<T>,
    r: Vec<T>,
    w: Vec<T>,
    /// `p_hat` (equal to `p` without preconditioner).
    p: Vec<T>,
    s: Vec<T>,
    z: Vec<T>,
    q: Vec<T>,
    y: Vec<T>,
    t: Vec<T>,
    v: Vec<T>,
    r_hat: Vec<T>,
    w_hat: Vec<T>,
    s_hat: Vec<T>,
    z_hat: Vec<T>,
    q_hat: Vec<T>,
    alpha: T,
    beta: T,
    omega: T,
    /// `(r0, r_i)`.
    rho: T,
    iteration: usize,
    rnorm: f64,
    converged: bool,
    breakdown: Option<(BreakdownKind, usize)>,
    setup_events: Vec<Event>,
    /// Events of a replacement whose residual half already ran.
    pending: Option<Vec<Event>>,
}

impl<'a, T: Scalar> MergedBicgstab<'a, T> {
    pub(crate) fn new(mut eng: Engine<'a, T>, x0: &[T]) -> Result<Self> {
        let n = eng.n();
        let pipelined = matches!(eng.variant.form, Form::Pipelined | Form::PipelinedRr);
        let pre = eng.variant.preconditioned;
        let zeros = || vec![T::zero(); n];
        let hat = || if pre { vec![T::zero(); n] } else { Vec::new() };
        let aux = || if pipelined { vec![T::zero(); n] } else { Vec::new() };

        let mut ev = Vec::new();
        let r = eng.initial_residual(x0, &mut ev)?;
        let mut r_hat = hat();
        let mut w = zeros();
        let mut w_hat = if pre && pipelined { zeros() } else { Vec::new() };
        let mut t = aux();
        if pre {
            eng.precond(&r, &mut r_hat, &mut ev)?;
            eng.spmv(&r_hat, &mut w, &mut ev)?;
        } else {
            eng.spmv(&r, &mut w, &mut ev)?;
        }

        let (rho, r0_w) = if pipelined {
            if pre {
                eng.precond(&w, &mut w_hat, &mut ev)?;
            }
            let wh: &[T] = if pre { &w_hat } else { &w };
            let (e, (r, w)) = (&eng, (&r, &w));
            e.window(
                2,
                || (e.dot(r, r), e.dot(r, w)),
                |cev| e.spmv(wh, &mut t, cev),
                &mut ev,
            )?
        } else {
            ev.push(Event::Glred {
                dots: 2,
                overlapped: false,
            });
            (eng.dot(&r, &r), eng.dot(&r, &w))
        };
        eng.set_reference(&rho);

        let mut state = MergedBicgstab {
            pipelined,
            pre,
            x: x0.to_vec(),
            r0: r.clone(),
            r,
            w,
            p: zeros(),
            s: zeros(),
            z: zeros(),
            q: zeros(),
            y: zeros(),
            t,
            v: aux(),
            r_hat,
            w_hat,
            s_hat: hat(),
            z_hat: if pre && pipelined { zeros() } else { Vec::new() },
            q_hat: hat(),
            alpha: T::zero(),
            beta: T::zero(),
            omega: T::zero(),
            rnorm: eng.r0_norm,
            converged: eng.converged(eng.r0_norm),
            rho,
            iteration: 0,
            breakdown: None,
            setup_events: ev,
            pending: None,
            eng,
        };
        if !state.converged {
            if state.eng.tiny(&r0_w) {
                state.breakdown = Some((BreakdownKind::Alpha, 0));
            } else {
                state.alpha = state.rho.clone() / r0_w;
            }
        }
        Ok(state)
    }

    /// Whether iteration `i` starts with a residual replacement.
    fn replacement_due(&self, i: usize) -> bool {
        if self.eng.variant.form != Form::PipelinedRr {
            return false;
        }
        let k = self.eng.cfg.replacement_period.unwrap_or(usize::MAX);
        i > 0 && i.is_multiple_of(k)
    }

    // A replacement for iteration i resets r_i, r_hat_i, w_i before the
    // reduction window that closes iteration i-1, so that the overlapped
    // w_hat_i = M^{-1} w_i and t_i = A w_hat_i are formed from the reset
    // w_i. The reset of s_i, s_hat_i, z_i follows the direction recurrences
    // of iteration i, ahead of v_i = A z_hat_i.

    /// `r = b - A x`, `r_hat = M^{-1} r`, `w = A r_hat`.
    fn replace_residual(&mut self, ev: &mut Vec<Event>) -> Result<()> {
        let eng = &self.eng;
        kernels::spmv_into(eng.a, &self.x, &mut self.r)?;
        ev.push(Event::Spmv);
        update2(&mut self.r, eng.b, |ri, bi| *ri = bi.clone() - ri.clone());
        ev.push(Event::Axpy);
        if self.pre {
            eng.precond(&self.r, &mut self.r_hat, ev)?;
            eng.spmv(&self.r_hat, &mut self.w, ev)
        } else {
            eng.spmv(&self.r, &mut self.w, ev)
        }
    }

    /// `s = A p_hat`, `s_hat = M^{-1} s`, `z = A s_hat`.
    fn replace_directions(&mut self, ev: &mut Vec<Event>) -> Result<()> {
        let eng = &self.eng;
        eng.spmv(&self.p, &mut self.s, ev)?;
        if self.pre {
            eng.precond(&self.s, &mut self.s_hat, ev)?;
            eng.spmv(&self.s_hat, &mut self.z, ev)
        } else {
            eng.spmv(&self.s, &mut self.z, ev)
        }
    }

    fn fail(&mut self, kind: BreakdownKind, ev: Vec<Event>, rev: Vec<Event>, replaced: bool) -> StepReport<T> {
        let it = self.iteration - 1;
        self.breakdown = Some((kind, it));
        StepReport {
            iteration: it,
            events: ev,
            replacement_events: rev,
            replaced,
            residual_norm: self.rnorm,
            scalars: Some(StepScalars {
                alpha: self.alpha.clone(),
                omega: Some(self.omega.clone()),
                beta: None,
            }),
            outcome: StepOutcome::Breakdown(kind),
        }
    }
}

impl<T: Scalar> VectorAccess<T> for MergedBicgstab<'_, T> {
    fn vector(&self, name: &str) -> Option<&[T]> {
        let v: &[T] = match name {
            "x" => &self.x,
            "r0" => &self.r0,
            "r" => &self.r,
            "w" => &self.w,
            "p" if !self.pre => &self.p,
            "p_hat" => &self.p,
            "s" => &self.s,
            "z" => &self.z,
            "q" => &self.q,
            "y" => &self.y,
            "t" if self.pipelined => &self.t,
            "v" if self.pipelined => &self.v,
            "r_hat" => if self.pre { &self.r_hat } else { &self.r },
            "s_hat" => if self.pre { &self.s_hat } else { &self.s },
            "q_hat" => if self.pre { &self.q_hat } else { &self.q },
            "w_hat" if self.pipelined => if self.pre { &self.w_hat } else { &self.w },
            "z_hat" if self.pipelined => if self.pre { &self.z_hat } else { &self.z },
            _ => return None,
        };
        Some(v)
    }
}

impl<T: Scalar> KrylovSolver<T> for MergedBicgstab<'_, T> {
    fn variant(&self) -> SolverVariant {
        self.eng.variant
    }

    fn iteration(&self) -> usize {
        self.iteration
    }

    fn x(&self) -> &[T] {
        &self.x
    }

    fn initial_residual_norm(&self) -> f64 {
        self.eng.r0_norm
    }

    fn residual_norm(&self) -> f64 {
        self.rnorm
    }

    fn is_converged(&self) -> bool {
        self.converged
    }

    fn breakdown(&self) -> Option<(BreakdownKind, usize)> {
        self.breakdown
    }

    fn setup_events(&self) -> &[Event] {
        &self.setup_events
    }

    fn step_with(
        &mut self,
        hook: &mut dyn FnMut(Checkpoint, &dyn VectorAccess<T>),
    ) -> Result<StepReport<T>> {
        if let Some(done) =
            finished_step(&self.eng, self.iteration, self.converged, self.breakdown, self.rnorm)
        {
            return done;
        }
        let i = self.iteration;
        let mut ev = Vec::new();
        let (alpha, beta, omega_prev) = (self.alpha.clone(), self.beta.clone(), self.omega.clone());
        let pre = self.pre;

        // Direction recurrences; beta = 0 at i = 0 makes them copies.
        {
            let (b, o) = (&beta, &omega_prev);
            let rh: &[T] = if pre { &self.r_hat } else { &self.r };
            let sh: &[T] = if pre { &self.s_hat } else { &self.s };
            update3(&mut self.p, rh, sh, |p, r, s| {
                *p = r.clone() + b.clone() * (p.clone() - o.clone() * s.clone())
            });
            ev.push(Event::Axpy);
            update3(&mut self.s, &self.w, &self.z, |s, w, z| {
                *s = w.clone() + b.clone() * (s.clone() - o.clone() * z.clone())
            });
            ev.push(Event::Axpy);
        }
        if self.pipelined {
            let (b, o) = (&beta, &omega_prev);
            if pre {
                update3(&mut self.s_hat, &self.w_hat, &self.z_hat, |sh, wh, zh| {
                    *sh = wh.clone() + b.clone() * (sh.clone() - o.clone() * zh.clone())
                });
                ev.push(Event::Axpy);
            }
            update3(&mut self.z, &self.t, &self.v, |z, t, v| {
                *z = t.clone() + b.clone() * (z.clone() - o.clone() * v.clone())
            });
            ev.push(Event::Axpy);
        } else if pre {
            self.eng.precond(&self.s, &mut self.s_hat, &mut ev)?;
            self.eng.spmv(&self.s_hat, &mut self.z, &mut ev)?;
        } else {
            self.eng.spmv(&self.s, &mut self.z, &mut ev)?;
        }

        let mut rev = Vec::new();
        let replaced = match self.pending.take() {
            Some(first) => {
                rev = first;
                self.replace_directions(&mut rev)?;
                hook(Checkpoint::AfterReplacement, &*self);
                true
            }
            None => false,
        };

        let a = &alpha;
        update3(&mut self.q, &self.r, &self.s, |q, r, s| *q = r.clone() - a.clone() * s.clone());
        ev.push(Event::Axpy);
        if pre {
            update3(&mut self.q_hat, &self.r_hat, &self.s_hat, |q, r, s| {
                *q = r.clone() - a.clone() * s.clone()
            });
            ev.push(Event::Axpy);
        }
        update3(&mut self.y, &self.w, &self.z, |y, w, z| *y = w.clone() - a.clone() * z.clone());
        ev.push(Event::Axpy);

        let (qy, yy) = if self.pipelined {
            let Self {
                eng, q, y, z, z_hat, v, ..
            } = self;
            let e = &*eng;
            let (q, y) = (&*q, &*y);
            e.window(
                2,
                || (e.dot(q, y), e.dot(y, y)),
                |cev| {
                    if pre {
                        e.precond(z, z_hat, cev)?;
                        e.spmv(z_hat, v, cev)
                    } else {
                        e.spmv(z, v, cev)
                    }
                },
                &mut ev,
            )?
        } else {
            ev.push(Event::Glred {
                dots: 2,
                overlapped: false,
            });
            (self.eng.dot(&self.q, &self.y), self.eng.dot(&self.y, &self.y))
        };

        let yy_tiny = self.eng.tiny(&yy);
        let omega = if yy_tiny { T::zero() } else { qy / yy };
        self.omega = omega.clone();
        let o = &omega;

        {
            let ph: &[T] = &self.p;
            let qh: &[T] = if pre { &self.q_hat } else { &self.q };
            update3(&mut self.x, ph, qh, |x, p, q| {
                *x = x.clone() + a.clone() * p.clone() + o.clone() * q.clone()
            });
            ev.push(Event::Axpy);
        }
        update3(&mut self.r, &self.q, &self.y, |r, q, y| *r = q.clone() - o.clone() * y.clone());
        ev.push(Event::Axpy);
        if self.pipelined {
            if pre {
                update4(&mut self.r_hat, &self.q_hat, &self.w_hat, &self.z_hat, |r, q, w, z| {
                    *r = q.clone() - o.clone() * (w.clone() - a.clone() * z.clone())
                });
                ev.push(Event::Axpy);
            }
            let w_src: &[T] = &self.y;
            update4(&mut self.w, w_src, &self.t, &self.v, |w, y, t, v| {
                *w = y.clone() - o.clone() * (t.clone() - a.clone() * v.clone())
            });
            ev.push(Event::Axpy);
        } else if pre {
            self.eng.precond(&self.r, &mut self.r_hat, &mut ev)?;
            self.eng.spmv(&self.r_hat, &mut self.w, &mut ev)?;
        } else {
            self.eng.spmv(&self.r, &mut self.w, &mut ev)?;
        }

        let mut next_rev = Vec::new();
        if self.replacement_due(i + 1) {
            self.replace_residual(&mut next_rev)?;
        }

        let (r0_r, r0_w, r0_s, r0_z, rr) = {
            let e = &self.eng;
            let (r0, r, w, s, z) = (&self.r0, &self.r, &self.w, &self.s, &self.z);
            let dots = || {
                (
                    e.dot(r0, r),
                    e.dot(r0, w),
                    e.dot(r0, s),
                    e.dot(r0, z),
                    e.dot(r, r),
                )
            };
            if self.pipelined {
                let (w_hat, t) = (&mut self.w_hat, &mut self.t);
                e.window(
                    5,
                    dots,
                    |cev| {
                        if pre {
                            e.precond(w, w_hat, cev)?;
                            e.spmv(w_hat, t, cev)
                        } else {
                            e.spmv(w, t, cev)
                        }
                    },
                    &mut ev,
                )?
            } else {
                ev.push(Event::Glred {
                    dots: 5,
                    overlapped: false,
                });
                dots()
            }
        };

        self.iteration += 1;
        self.rnorm = rr.to_f64().sqrt();
        if self.eng.converged(self.rnorm) {
            // A started replacement is abandoned; its cost stays on record.
            rev.append(&mut next_rev);
            self.converged = true;
            return Ok(StepReport {
                iteration: i,
                events: ev,
                replacement_events: rev,
                replaced,
                residual_norm: self.rnorm,
                scalars: Some(StepScalars {
                    alpha,
                    omega: Some(omega),
                    beta: None,
                }),
                outcome: StepOutcome::Converged,
            });
        }
        if !next_rev.is_empty() {
            self.pending = Some(next_rev);
        }
        if yy_tiny {
            return Ok(self.fail(BreakdownKind::Omega, ev, rev, replaced));
        }
        if self.eng.tiny(&omega) {
            return Ok(self.fail(BreakdownKind::Stagnation, ev, rev, replaced));
        }
        if self.eng.tiny(&self.rho) || self.eng.tiny(&r0_r) {
            return Ok(self.fail(BreakdownKind::Rho, ev, rev, replaced));
        }

        let beta_new = (alpha.clone() / omega.clone()) * (r0_r.clone() / self.rho.clone());
        let merged = MergedDots {
            r0_r: r0_r.clone(),
            r0_w,
            r0_s,
            r0_z,
        };
        let next = compute_alpha_merged(
            &merged,
            &beta_new,
            &omega,
            self.eng.variant.alpha_formula,
            self.eng.threshold,
        );
        self.beta = beta_new.clone();
        self.rho = r0_r;
        match next {
            Ok(next) => self.alpha = next,
            Err(kind) => return Ok(self.fail(kind, ev, rev, replaced)),
        }
        Ok(StepReport {
            iteration: i,
            events: ev,
            replacement_events: rev,
            replaced,
            residual_norm: self.rnorm,
            scalars: Some(StepScalars {
                alpha,
                omega: Some(omega),
                beta: Some(beta_new),
            }),
            outcome: StepOutcome::Advanced,
        })
    }
}
