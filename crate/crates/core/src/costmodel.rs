//! Per-iteration cost accounting for the unpreconditioned BiCGStab family
//! and a simple strong-scaling predictor.
//!
//! Counts follow the usual convention: GLRED phases and SPMVs per
//! iteration, flops of AXPYs and dot products in units of `N`, and the
//! number of length-`N` vectors kept in memory.

use std::fmt;
use std::io::Write;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum Method {
    Bicgstab,
    /// Improved BiCGStab (single reduction, no overlap).
    Ibicgstab,
    PBicgstab,
    /// Two non-overlapped reductions. Not part of the reference table; its
    /// time follows from the reduction count alone.
    CaBicgstab,
    /// s-step communication-avoiding BiCGStab.
    SStep { s: u32 },
}

impl Method {
    /// The four methods of the reference table, with the given `s`.
    pub fn table(s: u32) -> [Method; 4] {
        [
            Method::Bicgstab,
            Method::Ibicgstab,
            Method::PBicgstab,
            Method::SStep { s },
        ]
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::Bicgstab => "BiCGStab",
            Method::Ibicgstab => "IBiCGStab",
            Method::PBicgstab => "p-BiCGStab",
            Method::CaBicgstab => "CA-BiCGStab",
            Method::SStep { .. } => "s-step CA-BiCGStab",
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            Method::SStep { s: 0 } => Err(Error::InvalidArgument("s-step method needs s >= 1".into())),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `a * s + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affine {
    pub a: u64,
    pub b: u64,
}

impl Affine {
    pub const fn constant(b: u64) -> Self {
        Affine { a: 0, b }
    }

    pub fn eval(&self, s: u64) -> u64 {
        self.a * s + self.b
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a, self.b) {
            (0, b) => write!(f, "{b}"),
            (a, 0) => write!(f, "{a}s"),
            (a, b) => write!(f, "{a}s+{b}"),
        }
    }
}

/// Symbolic iteration time over `(t_glred, t_spmv)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TimeFormula {
    /// `glred * t_g + spmv * t_s`.
    Sum { glred: Ratio<u64>, spmv: u64 },
    /// `phases * max(t_g, t_s)`.
    OverlappedMax { phases: u64 },
}

impl TimeFormula {
    pub fn eval(&self, t_glred: f64, t_spmv: f64) -> f64 {
        match *self {
            TimeFormula::Sum { glred, spmv } => {
                ratio_f64(glred) * t_glred + spmv as f64 * t_spmv
            }
            TimeFormula::OverlappedMax { phases } => phases as f64 * t_glred.max(t_spmv),
        }
    }
}

impl fmt::Display for TimeFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TimeFormula::Sum { glred, spmv } => {
                if *glred.denom() == 1 {
                    write!(f, "{} GLRED + {spmv} SPMV", glred.numer())
                } else {
                    write!(f, "{}/{} GLRED + {spmv} SPMV", glred.numer(), glred.denom())
                }
            }
            TimeFormula::OverlappedMax { phases } => write!(f, "{phases} max(GLRED, SPMV)"),
        }
    }
}

fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostSpec {
    pub method: Method,
    pub glred_per_iter: Ratio<u64>,
    pub spmv_per_iter: u64,
    /// SPMVs run inside reduction windows.
    pub spmv_overlapped: bool,
    pub flops: Affine,
    pub memory: Affine,
    pub time: TimeFormula,
}

impl CostSpec {
    pub fn of(method: Method) -> Result<Self> {
        method.check()?;
        let spec = |glred: Ratio<u64>, spmv, overlapped, flops, memory, time| CostSpec {
            method,
            glred_per_iter: glred,
            spmv_per_iter: spmv,
            spmv_overlapped: overlapped,
            flops,
            memory,
            time,
        };
        let int = Ratio::from_integer;
        Ok(match method {
            Method::Bicgstab => spec(
                int(3),
                2,
                false,
                Affine::constant(20),
                Affine::constant(7),
                TimeFormula::Sum { glred: int(3), spmv: 2 },
            ),
            Method::Ibicgstab => spec(
                int(1),
                2,
                false,
                Affine::constant(30),
                Affine::constant(10),
                TimeFormula::Sum { glred: int(1), spmv: 2 },
            ),
            Method::PBicgstab => spec(
                int(2),
                2,
                true,
                Affine::constant(38),
                Affine::constant(11),
                TimeFormula::OverlappedMax { phases: 2 },
            ),
            Method::CaBicgstab => spec(
                int(2),
                2,
                false,
                Affine::constant(28),
                Affine::constant(10),
                TimeFormula::Sum { glred: int(2), spmv: 2 },
            ),
            Method::SStep { s } => {
                let inv = Ratio::new(1, u64::from(s));
                spec(
                    inv,
                    4,
                    false,
                    Affine { a: 32, b: 45 },
                    Affine { a: 4, b: 5 },
                    TimeFormula::Sum { glred: inv, spmv: 4 },
                )
            }
        })
    }

    /// Table cell for the SPMV column; `*` marks overlap.
    pub fn spmv_cell(&self) -> String {
        if self.spmv_overlapped {
            format!("{}*", self.spmv_per_iter)
        } else {
            self.spmv_per_iter.to_string()
        }
    }

    pub fn glred_cell(&self) -> String {
        match self.method {
            Method::SStep { .. } => "1/s".into(),
            _ => self.glred_per_iter.to_string(),
        }
    }
}

/// Per-iteration time of `method` given the duration of one GLRED and one
/// SPMV.
pub fn iteration_time(method: Method, t_glred: f64, t_spmv: f64) -> Result<f64> {
    if !(t_glred >= 0.0 && t_spmv >= 0.0) {
        return Err(Error::InvalidArgument("times must be non-negative".into()));
    }
    Ok(CostSpec::of(method)?.time.eval(t_glred, t_spmv))
}

/// Flops of AXPYs and dot products per iteration, in units of `N`.
pub fn flops_per_iteration(method: Method) -> Result<u64> {
    let spec = CostSpec::of(method)?;
    Ok(spec.flops.eval(s_of(method)))
}

/// Vectors of length `N` kept in memory.
pub fn memory_vectors(method: Method) -> Result<u64> {
    let spec = CostSpec::of(method)?;
    Ok(spec.memory.eval(s_of(method)))
}

fn s_of(method: Method) -> u64 {
    match method {
        Method::SStep { s } => u64::from(s),
        _ => 0,
    }
}

/// `t_glred(P) = c_lat log2(P)`, `t_spmv(P) = c_flop nnz / P + c_halo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineModel {
    pub c_lat: f64,
    pub c_flop: f64,
    pub c_halo: f64,
    pub nnz: u64,
}

impl MachineModel {
    pub fn new(c_lat: f64, c_flop: f64, c_halo: f64, nnz: u64) -> Result<Self> {
        if !(c_lat >= 0.0 && c_flop >= 0.0 && c_halo >= 0.0) {
            return Err(Error::InvalidArgument(
                "machine parameters must be non-negative".into(),
            ));
        }
        Ok(MachineModel {
            c_lat,
            c_flop,
            c_halo,
            nnz,
        })
    }

    /// Model with `c_halo = 0` and `c_flop` chosen so that
    /// `t_glred(p_equal) = t_spmv(p_equal)`.
    pub fn calibrated(nnz: u64, p_equal: u32, c_lat: f64) -> Result<Self> {
        if p_equal < 2 || nnz == 0 {
            return Err(Error::InvalidArgument(
                "calibration needs p_equal >= 2 and nnz > 0".into(),
            ));
        }
        let p = f64::from(p_equal);
        Self::new(c_lat, c_lat * p.log2() * p / nnz as f64, 0.0, nnz)
    }

    pub fn t_glred(&self, p: u32) -> f64 {
        self.c_lat * f64::from(p.max(1)).log2()
    }

    pub fn t_spmv(&self, p: u32) -> f64 {
        self.c_flop * self.nnz as f64 / f64::from(p.max(1)) + self.c_halo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub p: u32,
    pub time: f64,
    /// BiCGStab time on one process divided by `time`.
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCurve {
    pub method: Method,
    pub points: Vec<ScalingPoint>,
    /// Last `P` before BiCGStab's predicted time first increases, i.e. where
    /// BiCGStab stops scaling. `None` if it keeps improving over the list.
    pub crossover: Option<u32>,
}

/// Predicted time for `n_iters` iterations at every process count.
pub fn scaling_curve(
    method: Method,
    machine: &MachineModel,
    p_list: &[u32],
    n_iters: u64,
) -> Result<ScalingCurve> {
    if p_list.is_empty() {
        return Err(Error::InvalidArgument("empty process list".into()));
    }
    if p_list.windows(2).any(|w| w[0] >= w[1]) || p_list[0] == 0 {
        return Err(Error::InvalidArgument(
            "process counts must be positive and increasing".into(),
        ));
    }
    let n = n_iters as f64;
    let base = n * iteration_time(Method::Bicgstab, machine.t_glred(1), machine.t_spmv(1))?;
    let mut points = Vec::with_capacity(p_list.len());
    let mut crossover = None;
    let mut prev: Option<(u32, f64)> = None;
    for &p in p_list {
        let (g, s) = (machine.t_glred(p), machine.t_spmv(p));
        let time = n * iteration_time(method, g, s)?;
        points.push(ScalingPoint {
            p,
            time,
            speedup: base / time,
        });
        let t_ref = iteration_time(Method::Bicgstab, g, s)?;
        if let Some((p_prev, t_prev)) = prev {
            if crossover.is_none() && t_ref > t_prev {
                crossover = Some(p_prev);
            }
        }
        prev = Some((p, t_ref));
    }
    Ok(ScalingCurve {
        method,
        points,
        crossover,
    })
}

/// Per-iteration speedup of `method` over BiCGStab at each `P`.
pub fn relative_speedup(method: Method, machine: &MachineModel, p_list: &[u32]) -> Result<Vec<(u32, f64)>> {
    p_list
        .iter()
        .map(|&p| {
            let (g, s) = (machine.t_glred(p), machine.t_spmv(p));
            Ok((
                p,
                iteration_time(Method::Bicgstab, g, s)? / iteration_time(method, g, s)?,
            ))
        })
        .collect()
}

/// Writes `P,time,speedup` rows.
pub fn write_scaling_csv<W: Write>(curve: &ScalingCurve, mut out: W) -> Result<()> {
    writeln!(out, "P,time,speedup")?;
    for pt in &curve.points {
        writeln!(out, "{},{:.16e},{:.16e}", pt.p, pt.time, pt.speedup)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_table_cells() {
        let rows: Vec<_> = Method::table(2)
            .iter()
            .map(|m| {
                let c = CostSpec::of(*m).unwrap();
                (c.glred_cell(), c.spmv_cell(), c.flops.to_string(), c.memory.to_string(), c.time.to_string())
            })
            .collect();
        let expect = [
            ("3", "2", "20", "7", "3 GLRED + 2 SPMV"),
            ("1", "2", "30", "10", "1 GLRED + 2 SPMV"),
            ("2", "2*", "38", "11", "2 max(GLRED, SPMV)"),
            ("1/s", "4", "32s+45", "4s+5", "1/2 GLRED + 4 SPMV"),
        ];
        for (got, want) in rows.iter().zip(expect) {
            assert_eq!(
                (got.0.as_str(), got.1.as_str(), got.2.as_str(), got.3.as_str(), got.4.as_str()),
                want
            );
        }
    }

    #[test]
    fn formula_examples() {
        assert_eq!(iteration_time(Method::Bicgstab, 1.0, 1.0).unwrap(), 5.0);
        assert_eq!(iteration_time(Method::PBicgstab, 1.0, 1.0).unwrap(), 2.0);
        assert_eq!(iteration_time(Method::Ibicgstab, 1.0, 1.0).unwrap(), 3.0);
        assert_eq!(iteration_time(Method::SStep { s: 4 }, 1.0, 1.0).unwrap(), 4.25);
        assert_eq!(
            iteration_time(Method::Bicgstab, 0.0, 0.7).unwrap(),
            iteration_time(Method::PBicgstab, 0.0, 0.7).unwrap()
        );
        assert_eq!(flops_per_iteration(Method::SStep { s: 1 }).unwrap(), 77);
        assert_eq!(memory_vectors(Method::SStep { s: 2 }).unwrap(), 13);
        assert!(iteration_time(Method::SStep { s: 0 }, 1.0, 1.0).is_err());
        assert!(iteration_time(Method::Bicgstab, -1.0, 1.0).is_err());
    }

    #[test]
    fn free_communication_ties_everywhere() {
        let m = MachineModel::new(0.0, 1e-9, 1e-6, 1_000_000).unwrap();
        let ps: Vec<u32> = (1..=64).collect();
        let b = scaling_curve(Method::Bicgstab, &m, &ps, 10).unwrap();
        let p = scaling_curve(Method::PBicgstab, &m, &ps, 10).unwrap();
        for (x, y) in b.points.iter().zip(&p.points) {
            assert_eq!(x.time, y.time);
        }
        assert_eq!(p.crossover, None);
    }

    #[test]
    fn crossover_is_where_bicgstab_time_turns_up() {
        // t(P) = 3 c log2 P + 2 c_flop nnz / P is smallest near
        // P* = 2 c_flop nnz ln 2 / (3 c).
        let m = MachineModel::new(1.0, 3.0 / (2.0 * std::f64::consts::LN_2), 0.0, 16).unwrap();
        let ps: Vec<u32> = (1..=64).collect();
        let c = scaling_curve(Method::PBicgstab, &m, &ps, 1).unwrap();
        assert_eq!(c.crossover, Some(16));
        let times: Vec<f64> = ps
            .iter()
            .map(|&p| iteration_time(Method::Bicgstab, m.t_glred(p), m.t_spmv(p)).unwrap())
            .collect();
        assert!(times[..16].windows(2).all(|w| w[1] < w[0]));
        assert!(times[16..].windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn calibrated_model_reaches_bound_at_equal_point() {
        let m = MachineModel::calibrated(4_996_000, 20, 1.0).unwrap();
        assert!((m.t_glred(20) - m.t_spmv(20)).abs() <= 1e-12 * m.t_glred(20));
        let sp = relative_speedup(Method::PBicgstab, &m, &[20]).unwrap();
        assert!((sp[0].1 - 2.5).abs() < 1e-12);
    }

    #[test]
    fn scaling_curve_rejects_bad_lists() {
        let m = MachineModel::calibrated(100, 4, 1.0).unwrap();
        assert!(scaling_curve(Method::Bicgstab, &m, &[], 1).is_err());
        assert!(scaling_curve(Method::Bicgstab, &m, &[2, 2], 1).is_err());
        assert!(scaling_curve(Method::Bicgstab, &m, &[0, 1], 1).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let m = MachineModel::calibrated(100, 4, 1.0).unwrap();
        let c = scaling_curve(Method::PBicgstab, &m, &[1, 2, 4], 3).unwrap();
        let mut buf = Vec::new();
        write_scaling_csv(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("P,time,speedup\n1,"));
    }

    proptest! {
        #[test]
        fn time_monotone_in_both_arguments(
            g in 0.0f64..10.0, s in 0.0f64..10.0, dg in 0.0f64..5.0, ds in 0.0f64..5.0, k in 1u32..8
        ) {
            for m in [Method::Bicgstab, Method::Ibicgstab, Method::PBicgstab, Method::CaBicgstab, Method::SStep { s: k }] {
                let t = iteration_time(m, g, s).unwrap();
                prop_assert!(iteration_time(m, g + dg, s).unwrap() >= t);
                prop_assert!(iteration_time(m, g, s + ds).unwrap() >= t);
            }
        }

        #[test]
        fn pipelining_dominance(g in 0.0f64..10.0, s in 0.0f64..10.0) {
            let p = iteration_time(Method::PBicgstab, g, s).unwrap();
            let ca = iteration_time(Method::CaBicgstab, g, s).unwrap();
            let b = iteration_time(Method::Bicgstab, g, s).unwrap();
            prop_assert_eq!(ca, 2.0 * g + 2.0 * s);
            prop_assert!(p <= ca && ca <= b);
        }

        #[test]
        fn latency_bound_speedup_in_range(s in 1e-6f64..10.0, extra in 0.0f64..10.0) {
            let g = s + extra;
            let sp = iteration_time(Method::Bicgstab, g, s).unwrap()
                / iteration_time(Method::PBicgstab, g, s).unwrap();
            let expect = (3.0 * g + 2.0 * s) / (2.0 * g);
            prop_assert!((sp - expect).abs() <= 1e-12 * expect);
            prop_assert!(sp > 1.0 && sp <= 2.5 + 1e-12);
        }
    }
}
