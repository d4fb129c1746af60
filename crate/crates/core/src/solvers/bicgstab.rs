//! Standard BiCGStab, optionally right-preconditioned.

use super::{
    finished_step, Checkpoint, Engine, Event, KrylovSolver, SolverVariant, StepOutcome,
    StepReport, StepScalars, VectorAccess,
};
use crate::error::{BreakdownKind, Result};
use crate::kernels::update3;
use crate::Scalar;

pub struct StandardBicgstab<'a, T: Scalar> {
    eng: Engine<'a, T>,
    x: Vec<T>,
    r0: Vec<T>,
    r: Vec<T>,
    p: Vec<T>,
    p_hat: Vec<T>,
    s: Vec<T>,
    q: Vec<T>,
    q_hat: Vec<T>,
    y: Vec<T>,
    /// `(r0, r_i)`.
    rho: T,
    iteration: usize,
    rnorm: f64,
    converged: bool,
    breakdown: Option<(BreakdownKind, usize)>,
    setup_events: Vec<Event>,
}

impl<'a, T: Scalar> StandardBicgstab<'a, T> {
    pub(crate) fn new(mut eng: Engine<'a, T>, x0: &[T]) -> Result<Self> {
        let n = eng.n();
        let pre = eng.variant.preconditioned;
        let hat = || if pre { vec![T::zero(); n] } else { Vec::new() };
        let mut ev = Vec::new();
        let r = eng.initial_residual(x0, &mut ev)?;
        ev.push(Event::Glred {
            dots: 1,
            overlapped: false,
        });
        let rho = eng.dot(&r, &r);
        eng.set_reference(&rho);
        Ok(StandardBicgstab {
            x: x0.to_vec(),
            r0: r.clone(),
            p: r.clone(),
            r,
            p_hat: hat(),
            s: vec![T::zero(); n],
            q: vec![T::zero(); n],
            q_hat: hat(),
            y: vec![T::zero(); n],
            rho,
            iteration: 0,
            rnorm: eng.r0_norm,
            converged: eng.converged(eng.r0_norm),
            breakdown: None,
            setup_events: ev,
            eng,
        })
    }

    fn report(
        &self,
        events: Vec<Event>,
        scalars: StepScalars<T>,
        outcome: StepOutcome,
    ) -> StepReport<T> {
        StepReport {
            iteration: self.iteration - 1,
            events,
            replacement_events: Vec::new(),
            replaced: false,
            residual_norm: self.rnorm,
            scalars: Some(scalars),
            outcome,
        }
    }
}

impl<T: Scalar> VectorAccess<T> for StandardBicgstab<'_, T> {
    fn vector(&self, name: &str) -> Option<&[T]> {
        let pre = self.eng.variant.preconditioned;
        let v: &[T] = match name {
            "x" => &self.x,
            "r0" => &self.r0,
            "r" => &self.r,
            "p" => &self.p,
            "s" => &self.s,
            "q" => &self.q,
            "y" => &self.y,
            "p_hat" if pre => &self.p_hat,
            "q_hat" if pre => &self.q_hat,
            "p_hat" => &self.p,
            "q_hat" => &self.q,
            _ => return None,
        };
        Some(v)
    }
}

impl<T: Scalar> KrylovSolver<T> for StandardBicgstab<'_, T> {
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
        _hook: &mut dyn FnMut(Checkpoint, &dyn VectorAccess<T>),
    ) -> Result<StepReport<T>> {
        if let Some(done) =
            finished_step(&self.eng, self.iteration, self.converged, self.breakdown, self.rnorm)
        {
            return done;
        }
        let i = self.iteration;
        let pre = self.eng.variant.preconditioned;
        let mut ev = Vec::new();

        if pre {
            self.eng.precond(&self.p, &mut self.p_hat, &mut ev)?;
        }
        let ph: &[T] = if pre { &self.p_hat } else { &self.p };
        self.eng.spmv(ph, &mut self.s, &mut ev)?;
        ev.push(Event::Glred {
            dots: 1,
            overlapped: false,
        });
        let r0_s = self.eng.dot(&self.r0, &self.s);
        if self.eng.tiny(&r0_s) {
            self.breakdown = Some((BreakdownKind::Alpha, i));
            return Err(self.eng.breakdown(BreakdownKind::Alpha, i));
        }
        let alpha = self.rho.clone() / r0_s;
        let a = &alpha;
        update3(&mut self.q, &self.r, &self.s, |q, r, s| *q = r.clone() - a.clone() * s.clone());
        ev.push(Event::Axpy);

        if pre {
            self.eng.precond(&self.q, &mut self.q_hat, &mut ev)?;
        }
        let qh: &[T] = if pre { &self.q_hat } else { &self.q };
        self.eng.spmv(qh, &mut self.y, &mut ev)?;
        ev.push(Event::Glred {
            dots: 2,
            overlapped: false,
        });
        let qy = self.eng.dot(&self.q, &self.y);
        let yy = self.eng.dot(&self.y, &self.y);
        let yy_tiny = self.eng.tiny(&yy);
        let omega = if yy_tiny { T::zero() } else { qy / yy };
        let o = &omega;

        let ph: &[T] = if pre { &self.p_hat } else { &self.p };
        update3(&mut self.x, ph, qh, |x, p, q| {
            *x = x.clone() + a.clone() * p.clone() + o.clone() * q.clone()
        });
        ev.push(Event::Axpy);
        update3(&mut self.r, &self.q, &self.y, |r, q, y| *r = q.clone() - o.clone() * y.clone());
        ev.push(Event::Axpy);

        ev.push(Event::Glred {
            dots: 2,
            overlapped: false,
        });
        let r0_r = self.eng.dot(&self.r0, &self.r);
        let rr = self.eng.dot(&self.r, &self.r);
        self.iteration += 1;
        self.rnorm = rr.to_f64().sqrt();

        let scalars = |beta| StepScalars {
            alpha: alpha.clone(),
            omega: Some(omega.clone()),
            beta,
        };
        if self.eng.converged(self.rnorm) {
            self.converged = true;
            return Ok(self.report(ev, scalars(None), StepOutcome::Converged));
        }
        let kind = if yy_tiny {
            Some(BreakdownKind::Omega)
        } else if self.eng.tiny(&omega) {
            Some(BreakdownKind::Stagnation)
        } else if self.eng.tiny(&r0_r) {
            Some(BreakdownKind::Rho)
        } else {
            None
        };
        if let Some(kind) = kind {
            self.breakdown = Some((kind, i));
            return Ok(self.report(ev, scalars(None), StepOutcome::Breakdown(kind)));
        }

        let beta = (alpha.clone() / omega.clone()) * (r0_r.clone() / self.rho.clone());
        self.rho = r0_r;
        let b = &beta;
        update3(&mut self.p, &self.r, &self.s, |p, r, s| {
            *p = r.clone() + b.clone() * (p.clone() - o.clone() * s.clone())
        });
        ev.push(Event::Axpy);
        Ok(self.report(ev, scalars(Some(beta.clone())), StepOutcome::Advanced))
    }
}
