//! Relaxed Jacobi sweeps and SRJ cycles with residual bookkeeping.
//!
//! Each iteration is `x <- x + w D^{-1} (b - A x)`. The residual computed
//! after an update is both the recorded norm and the input to the next
//! update, so one sweep costs a single sparse product.

use std::fmt;

use crate::amplification::Scheme;
use crate::error::{Error, Result};
use crate::sparse::{jacobi_split, norm2, residual_into, CsrMatrix};

#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialGuess {
    #[default]
    Ones,
    Zeros,
    Vector(Vec<f64>),
}

impl InitialGuess {
    fn materialize(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            InitialGuess::Ones => Ok(vec![1.0; n]),
            InitialGuess::Zeros => Ok(vec![0.0; n]),
            InitialGuess::Vector(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: v.len(),
                    });
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Absolute bound on `||b - A x||_2`.
    pub tolerance: f64,
    pub max_cycles: usize,
    pub initial_guess: InitialGuess,
    /// Cycles without a 1% improvement (measured from the latest residual
    /// peak) before the run is declared stagnated.
    pub stagnation_window: usize,
    /// Cycle-end residual growth over the initial residual that counts as
    /// divergence.
    pub divergence_factor: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tolerance: 1e-6,
            max_cycles: 100_000,
            initial_guess: InitialGuess::Ones,
            stagnation_window: 10,
            divergence_factor: 1e30,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_cycles == 0 {
            return Err(Error::InvalidArgument("max_cycles must be at least 1".into()));
        }
        if self.stagnation_window < 2 {
            return Err(Error::InvalidArgument("stagnation window must be at least 2 cycles".into()));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(Error::InvalidArgument("divergence factor must exceed 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    Stagnated,
    Diverged,
    BudgetExhausted,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::Stagnated => "stagnated",
            SolveStatus::Diverged => "diverged",
            SolveStatus::BudgetExhausted => "budget_exhausted",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceHistory {
    /// `residuals[0]` is the initial residual, then one entry per iteration.
    pub residuals: Vec<f64>,
    /// Factor applied at iteration `k` is `omegas[k - 1]`.
    pub omegas: Vec<f64>,
    /// Iteration counts at which full cycles ended.
    pub cycle_boundaries: Vec<usize>,
    pub status: SolveStatus,
    /// Cycles started, including a final partial one.
    pub cycles_used: usize,
}

impl ConvergenceHistory {
    pub fn iterations(&self) -> usize {
        self.residuals.len() - 1
    }

    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().expect("history holds the initial residual")
    }

    /// Cycle index (0-based) that iteration `k >= 1` belongs to.
    pub fn cycle_of(&self, k: usize, m: usize) -> usize {
        (k - 1) / m
    }

    /// CSV with columns `iteration,cycle,omega_applied,residual_l2`. Row 0 is
    /// the initial state with an empty omega.
    pub fn to_csv(&self, m: usize, metadata: &[(&str, String)]) -> String {
        let mut out = String::new();
        for (k, v) in metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str("iteration,cycle,omega_applied,residual_l2\n");
        out.push_str(&format!("0,0,,{:e}\n", self.residuals[0]));
        for k in 1..self.residuals.len() {
            out.push_str(&format!(
                "{k},{},{:e},{:e}\n",
                self.cycle_of(k, m) + 1,
                self.omegas[k - 1],
                self.residuals[k]
            ));
        }
        out
    }
}

/// One relaxed Jacobi update `x + w D^{-1} (b - A x)`.
pub fn relaxed_step(a: &CsrMatrix, inv_diag: &[f64], x: &[f64], b: &[f64], omega: f64) -> Result<Vec<f64>> {
    if inv_diag.len() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: a.n_rows(),
            found: inv_diag.len(),
        });
    }
    let mut r = vec![0.0; a.n_rows()];
    residual_into(a, x, b, &mut r)?;
    Ok(x.iter()
        .zip(&r)
        .zip(inv_diag)
        .map(|((xi, ri), di)| xi + omega * di * ri)
        .collect())
}

/// Stagnation and divergence tracking on cycle-end residuals.
///
/// Large factors make the residual climb for many cycles before the small
/// factors pull it back down, so the improvement reference restarts at each
/// new residual peak instead of at the overall best.
struct CycleMonitor {
    initial: f64,
    peak: f64,
    reference: f64,
    quiet_cycles: usize,
    window: usize,
    divergence_factor: f64,
}

impl CycleMonitor {
    fn new(initial: f64, cfg: &SolveConfig) -> Self {
        CycleMonitor {
            initial,
            peak: initial,
            reference: initial,
            quiet_cycles: 0,
            window: cfg.stagnation_window,
            divergence_factor: cfg.divergence_factor,
        }
    }

    fn end_cycle(&mut self, r: f64) -> Option<SolveStatus> {
        if !r.is_finite() || r > self.divergence_factor * self.initial {
            return Some(SolveStatus::Diverged);
        }
        if r > self.peak {
            self.peak = r;
            self.reference = r;
            self.quiet_cycles = 0;
        } else if r < 0.99 * self.reference {
            self.reference = r;
            self.quiet_cycles = 0;
        } else {
            self.quiet_cycles += 1;
            if self.quiet_cycles >= self.window {
                return Some(SolveStatus::Stagnated);
            }
        }
        None
    }
}

/// Apply `scheme` cycle after cycle until a stopping rule fires.
pub fn run_srj(a: &CsrMatrix, b: &[f64], scheme: &Scheme, cfg: &SolveConfig) -> Result<(Vec<f64>, ConvergenceHistory)> {
    run_cycles(a, b, scheme.factors(), cfg)
}

/// Unrelaxed Jacobi: a one-step cycle with `w = 1`.
pub fn run_jacobi(a: &CsrMatrix, b: &[f64], cfg: &SolveConfig) -> Result<(Vec<f64>, ConvergenceHistory)> {
    run_cycles(a, b, &[1.0], cfg)
}

fn run_cycles(a: &CsrMatrix, b: &[f64], factors: &[f64], cfg: &SolveConfig) -> Result<(Vec<f64>, ConvergenceHistory)> {
    cfg.validate()?;
    if factors.is_empty() {
        return Err(Error::Empty("relaxation factors"));
    }
    let inv = jacobi_split(a)?;
    let n = a.n_rows();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let mut x = cfg.initial_guess.materialize(n)?;
    let mut r = vec![0.0; n];
    residual_into(a, &x, b, &mut r)?;
    let r0 = norm2(&r);

    let mut hist = ConvergenceHistory {
        residuals: vec![r0],
        omegas: Vec::new(),
        cycle_boundaries: Vec::new(),
        status: SolveStatus::BudgetExhausted,
        cycles_used: 0,
    };
    if !r0.is_finite() {
        hist.status = SolveStatus::Diverged;
        return Ok((x, hist));
    }
    if r0 <= cfg.tolerance {
        hist.status = SolveStatus::Converged;
        return Ok((x, hist));
    }

    let mut monitor = CycleMonitor::new(r0, cfg);
    for _ in 0..cfg.max_cycles {
        hist.cycles_used += 1;
        for &w in factors {
            for i in 0..n {
                x[i] += w * inv[i] * r[i];
            }
            residual_into(a, &x, b, &mut r)?;
            let rn = norm2(&r);
            hist.residuals.push(rn);
            hist.omegas.push(w);
            if rn <= cfg.tolerance {
                hist.status = SolveStatus::Converged;
                if hist.iterations() % factors.len() == 0 {
                    hist.cycle_boundaries.push(hist.iterations());
                }
                return Ok((x, hist));
            }
            if !rn.is_finite() {
                hist.status = SolveStatus::Diverged;
                return Ok((x, hist));
            }
        }
        hist.cycle_boundaries.push(hist.iterations());
        if let Some(status) = monitor.end_cycle(hist.final_residual()) {
            hist.status = status;
            return Ok((x, hist));
        }
    }
    Ok((x, hist))
}

/// Asymptotic per-cycle contraction of the homogeneous iteration (`b = 0`).
///
/// The iterate is renormalized after every cycle so the measurement never
/// reaches the rounding floor; the result is the geometric mean of the
/// residual ratios over the last `tail` of `cycles` cycles.
pub fn measured_contraction(a: &CsrMatrix, scheme: &Scheme, cycles: usize, tail: usize) -> Result<f64> {
    if tail == 0 || tail > cycles {
        return Err(Error::InvalidArgument(format!("tail {tail} must be in 1..={cycles}")));
    }
    let inv = jacobi_split(a)?;
    let n = a.n_rows();
    let zero = vec![0.0; n];
    let mut e = vec![1.0; n];
    let mut r = vec![0.0; n];
    residual_into(a, &e, &zero, &mut r)?;
    let mut prev = norm2(&r);
    let mut log_sum = 0.0;
    for c in 0..cycles {
        for &w in scheme.factors() {
            for i in 0..n {
                e[i] += w * inv[i] * r[i];
            }
            residual_into(a, &e, &zero, &mut r)?;
        }
        let cur = norm2(&r);
        if c + tail >= cycles {
            log_sum += (cur / prev).ln();
        }
        for v in e.iter_mut() {
            *v /= cur;
        }
        for v in r.iter_mut() {
            *v /= cur;
        }
        prev = 1.0;
    }
    Ok((log_sum / tail as f64).exp())
}
