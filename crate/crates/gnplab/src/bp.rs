//! The binomial branching process: survival solving, simulation, duality.
//!
//! One process has offspring distribution Bi(n, p). When the offspring mean
//! np exceeds 1 it survives forever with probability rho, the unique root in
//! (0, 1] of 1 - rho = (1 - p*rho)^n. Conditioned on dying out, it is
//! distributed exactly as the same process run at the smaller parameter
//! pi = p(1 - rho)/(1 - p*rho); that subcritical mirror process is called
//! the dual here. Simulations censor at configurable size and width caps so
//! a surviving run halts after a bounded amount of work, and censored runs
//! can be classified as survivors with a quantified misclassification bound.

use crate::error::{Error, Result};
use crate::rng::{sample_binomial, Substream};
use serde::Serialize;

pub const DEFAULT_RHO_TOL: f64 = 1e-12;

/// Offspring parameters: each individual has Bi(n, p) children.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BpParams {
    pub n: u64,
    pub p: f64,
}

impl BpParams {
    pub fn new(n: u64, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::ParamDomain("offspring trials must be positive".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ParamDomain(format!(
                "offspring probability must lie in [0, 1], got {p}"
            )));
        }
        Ok(BpParams { n, p })
    }

    /// Offspring mean np.
    pub fn mean(&self) -> f64 {
        self.n as f64 * self.p
    }
}

/// Survival probability and the derived dual quantities.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SurvivalSolution {
    /// Probability the process survives forever; 0 when np <= 1.
    pub rho: f64,
    /// Offspring probability of the dual (conditioned-on-extinction) process.
    pub pi: f64,
    /// Dual offspring mean, n*pi; below 1 whenever rho > 0.
    pub dual_mean: f64,
    /// Expected total progeny of the dual process, 1/(1 - n*pi).
    pub dual_expected_size: f64,
    /// Fixed-point defect |1 - rho - (1 - p*rho)^n| at the returned rho.
    pub residual: f64,
}

/// Fixed-point defect g(rho) = 1 - rho - (1 - p*rho)^n, evaluated through
/// expm1/ln_1p so that the two nearly equal terms never cancel through 1.0.
fn survival_defect(params: &BpParams, rho: f64) -> f64 {
    -rho - f64::exp_m1(params.n as f64 * f64::ln_1p(-params.p * rho))
}

/// Solves for the survival probability by bisection.
///
/// For np > 1 the defect is positive just right of zero and non-positive at
/// one, and crosses exactly once, so plain bisection on [1e-300, 1] cannot
/// miss. The returned rho is within `tol` of the root and the verification
/// residual is recorded in the solution.
pub fn solve_survival(params: &BpParams, tol: f64) -> Result<SurvivalSolution> {
    if !(tol > 0.0 && tol < 0.1) {
        return Err(Error::ParamDomain(format!(
            "survival tolerance must lie in (0, 0.1), got {tol}"
        )));
    }
    let mean = params.mean();
    let rho = if mean <= 1.0 {
        0.0
    } else {
        let mut lo = 1e-300;
        let mut hi = 1.0;
        if survival_defect(params, lo) <= 0.0 {
            return Err(Error::ParamDomain(format!(
                "no bracket for survival root at n={} p={}",
                params.n, params.p
            )));
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if survival_defect(params, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let denom = 1.0 - params.p * rho;
    let pi = if denom > 0.0 {
        params.p * (1.0 - rho) / denom
    } else {
        0.0
    };
    let dual_mean = params.n as f64 * pi;
    let dual_expected_size = if dual_mean < 1.0 {
        1.0 / (1.0 - dual_mean)
    } else {
        f64::INFINITY
    };
    Ok(SurvivalSolution {
        rho,
        pi,
        dual_mean,
        dual_expected_size,
        residual: survival_defect(params, rho).abs(),
    })
}

/// Expected total progeny of a subcritical process with the given offspring
/// mean: the geometric series 1 + m + m^2 + ... = 1/(1 - m).
pub fn expected_total_size_subcritical(mean: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&mean) {
        return Err(Error::ParamDomain(format!(
            "subcritical total size needs offspring mean in [0, 1), got {mean}"
        )));
    }
    Ok(1.0 / (1.0 - mean))
}

/// Censoring thresholds for simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BpCaps {
    /// Halt once this many individuals have been born in total.
    pub size_cap: u64,
    /// Halt once a single generation reaches this many individuals.
    pub width_cap: u64,
}

impl BpCaps {
    pub fn new(size_cap: u64, width_cap: u64) -> Result<Self> {
        if size_cap == 0 || width_cap == 0 {
            return Err(Error::ParamDomain("caps must be positive".into()));
        }
        Ok(BpCaps { size_cap, width_cap })
    }

    pub const UNCAPPED: BpCaps = BpCaps {
        size_cap: u64::MAX,
        width_cap: u64::MAX,
    };
}

/// Caps that keep a supercritical run's misclassification probability at or
/// below about e^-20: a dying run is very unlikely to reach width 20/rho, and
/// even less likely to accumulate 20/rho^2 individuals first.
pub fn default_caps(solution: &SurvivalSolution) -> Result<BpCaps> {
    if solution.rho <= 0.0 {
        return Err(Error::ParamDomain(
            "default caps need a supercritical solution (rho > 0)".into(),
        ));
    }
    BpCaps::new(
        (20.0 / (solution.rho * solution.rho)).ceil() as u64,
        (20.0 / solution.rho).ceil() as u64,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BpStatus {
    /// The process died; totals are exact.
    Extinct,
    /// Halted because total progeny reached the size cap.
    CensoredSize,
    /// Halted because one generation reached the width cap.
    CensoredWidth,
}

/// State of a simulated process at halt.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BpOutcome {
    pub status: BpStatus,
    /// Individuals born up to the halt, root included.
    pub total_size: u64,
    /// Largest generation size seen, a partially built one included.
    pub width: u64,
    /// Index of the last nonempty generation (the root is generation 0).
    pub generations: u64,
    /// Unexplored individuals at halt: zero iff extinct. A censored run can
    /// be resumed from them.
    pub pending: u64,
    /// The caps this run was subject to, recorded for classification.
    pub size_cap: u64,
    pub width_cap: u64,
}

/// Core generation loop shared by fresh runs and resumed runs.
///
/// Each unexplored individual draws its Bi(n, p) offspring one parent at a
/// time; the size cap is checked after each parent's draw, then the width
/// cap. That fixed order makes censored totals reproducible and keeps the
/// law of the halt state identical across every code path that simulates
/// this process.
fn run_generations(
    params: &BpParams,
    caps: BpCaps,
    frontier0: u64,
    total0: u64,
    width0: u64,
    generations0: u64,
    rng: &mut Substream,
) -> Result<BpOutcome> {
    let mut frontier = frontier0;
    let mut total = total0;
    let mut width = width0;
    let mut generations = generations0;
    if total >= caps.size_cap {
        return Ok(BpOutcome {
            status: BpStatus::CensoredSize,
            total_size: total,
            width,
            generations,
            pending: frontier,
            size_cap: caps.size_cap,
            width_cap: caps.width_cap,
        });
    }
    while frontier > 0 {
        let mut next: u64 = 0;
        for parent in 0..frontier {
            let children = sample_binomial(params.n, params.p, rng)?;
            next += children;
            total += children;
            if children > 0 && total >= caps.size_cap {
                return Ok(BpOutcome {
                    status: BpStatus::CensoredSize,
                    total_size: total,
                    width: width.max(next),
                    generations: generations + 1,
                    pending: (frontier - parent - 1) + next,
                    size_cap: caps.size_cap,
                    width_cap: caps.width_cap,
                });
            }
            if next >= caps.width_cap {
                return Ok(BpOutcome {
                    status: BpStatus::CensoredWidth,
                    total_size: total,
                    width: width.max(next),
                    generations: generations + 1,
                    pending: (frontier - parent - 1) + next,
                    size_cap: caps.size_cap,
                    width_cap: caps.width_cap,
                });
            }
        }
        if next > 0 {
            generations += 1;
            width = width.max(next);
        }
        frontier = next;
    }
    Ok(BpOutcome {
        status: BpStatus::Extinct,
        total_size: total,
        width,
        generations,
        pending: 0,
        size_cap: caps.size_cap,
        width_cap: caps.width_cap,
    })
}

/// Simulates one process from a single root until extinction or a cap.
/// Memory use is constant: only the frontier count is kept, never the tree.
pub fn simulate_bp(params: &BpParams, caps: BpCaps, rng: &mut Substream) -> Result<BpOutcome> {
    run_generations(params, caps, 1, 1, 1, 0, rng)
}

/// Continues a censored run from its pending individuals under fresh caps.
/// Generation bookkeeping restarts (resumed pending individuals may span two
/// real generations), so only status, totals, and width growth are
/// meaningful to the caller.
pub fn resume_bp(
    params: &BpParams,
    outcome: &BpOutcome,
    caps: BpCaps,
    rng: &mut Substream,
) -> Result<BpOutcome> {
    if outcome.pending == 0 {
        return Err(Error::ParamDomain("cannot resume an extinct run".into()));
    }
    run_generations(
        params,
        caps,
        outcome.pending,
        outcome.total_size,
        outcome.width,
        outcome.generations,
        rng,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SurvivalVerdict {
    Survived,
    Died,
}

/// A censored-run classification with its error bound.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Classification {
    pub verdict: SurvivalVerdict,
    /// Upper bound on P(the process actually dies | we report Survived).
    pub misclassification_bound: f64,
}

/// Minimum cap exponent used by [`classify_survival`]; caps must make the
/// misclassification bound at most e^-20.
pub const CLASSIFY_MIN_EXPONENT: f64 = 20.0;

/// Interprets a halted run as died/survived.
///
/// Extinct runs died, censored runs are declared survivors. A run that dies
/// despite spanning width W has probability at most (1 - rho)^W, so the
/// width cap must satisfy rho * width_cap >= 20. A size-capped run dies with
/// probability roughly exp(-rho^2 * size/2), so a size cap with
/// rho^2 * size_cap >= 40 is accepted on its own as well.
pub fn classify_survival(
    outcome: &BpOutcome,
    solution: &SurvivalSolution,
) -> Result<Classification> {
    if solution.rho <= 0.0 {
        return Err(Error::ParamDomain(
            "classification needs a supercritical solution (rho > 0)".into(),
        ));
    }
    let rho = solution.rho;
    let width_exponent = rho * outcome.width_cap as f64;
    let size_exponent = rho * rho * outcome.size_cap as f64 / 2.0;
    if width_exponent < CLASSIFY_MIN_EXPONENT && size_exponent < CLASSIFY_MIN_EXPONENT {
        return Err(Error::ParamDomain(format!(
            "caps too small to classify: need width_cap >= {} or size_cap >= {}",
            (CLASSIFY_MIN_EXPONENT / rho).ceil() as u64,
            (2.0 * CLASSIFY_MIN_EXPONENT / (rho * rho)).ceil() as u64,
        )));
    }
    let mut bound = f64::INFINITY;
    if width_exponent >= CLASSIFY_MIN_EXPONENT {
        bound = bound.min((1.0 - rho).powf(outcome.width_cap as f64));
    }
    if size_exponent >= CLASSIFY_MIN_EXPONENT {
        bound = bound.min((-size_exponent).exp());
    }
    Ok(Classification {
        verdict: match outcome.status {
            BpStatus::Extinct => SurvivalVerdict::Died,
            BpStatus::CensoredSize | BpStatus::CensoredWidth => SurvivalVerdict::Survived,
        },
        misclassification_bound: bound,
    })
}

/// Simulates the dual process directly: same trial count n, offspring
/// probability pi. Requires a supercritical solution so the dual is a
/// genuine conditioning target.
pub fn sample_dual_direct(
    params: &BpParams,
    solution: &SurvivalSolution,
    caps: BpCaps,
    rng: &mut Substream,
) -> Result<BpOutcome> {
    if solution.rho <= 0.0 {
        return Err(Error::ParamDomain(
            "dual sampling needs a supercritical solution (rho > 0)".into(),
        ));
    }
    let dual = BpParams::new(params.n, solution.pi)?;
    simulate_bp(&dual, caps, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::stats;

    /// Independent root for n = 2: with x = 1 - rho the fixed point becomes
    /// 9x^2 - 10x + 1 = 0 at p = 3/4, solved by the quadratic formula.
    fn quadratic_rho_n2_p075() -> f64 {
        let (a, b, c) = (9.0f64, -10.0, 1.0);
        let x = (-b - (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
        1.0 - x
    }

    #[test]
    fn closed_form_survival_two_trials() {
        let params = BpParams::new(2, 0.75).unwrap();
        let sol = solve_survival(&params, DEFAULT_RHO_TOL).unwrap();
        let reference = quadratic_rho_n2_p075();
        assert!((reference - 8.0 / 9.0).abs() < 1e-14);
        assert!((sol.rho - reference).abs() < 1e-10, "rho = {}", sol.rho);
        assert!((sol.pi - 0.25).abs() < 1e-10, "pi = {}", sol.pi);
        assert!((sol.dual_mean - 0.5).abs() < 1e-10);
        assert!((sol.dual_expected_size - 2.0).abs() < 1e-9);
        assert!(sol.residual <= DEFAULT_RHO_TOL);
    }

    #[test]
    fn subcritical_solution_is_degenerate() {
        let params = BpParams::new(5, 0.1).unwrap();
        let sol = solve_survival(&params, DEFAULT_RHO_TOL).unwrap();
        assert_eq!(sol.rho, 0.0);
        assert_eq!(sol.pi, 0.1);
        assert!((sol.dual_mean - 0.5).abs() < 1e-15);
        assert!((sol.dual_expected_size - 2.0).abs() < 1e-12);
    }

    #[test]
    fn barely_supercritical_rho_is_about_twice_eps() {
        let params = BpParams::new(1_000_000, 1.01e-6).unwrap();
        let sol = solve_survival(&params, DEFAULT_RHO_TOL).unwrap();
        let ratio = sol.rho / 0.02;
        assert!(
            (ratio - 1.0).abs() < 0.05,
            "rho = {} should be within 5% of 0.02",
            sol.rho
        );
    }

    #[test]
    fn residual_stays_within_tolerance_across_regimes() {
        for (n, p) in [
            (2u64, 0.75),
            (10, 0.2),
            (100, 0.02),
            (1_000, 0.0015),
            (1_000_000, 1.05e-6),
            (10_000_000, 1.5e-7),
        ] {
            let params = BpParams::new(n, p).unwrap();
            let sol = solve_survival(&params, DEFAULT_RHO_TOL).unwrap();
            assert!(
                sol.residual <= DEFAULT_RHO_TOL,
                "residual {} at n={n} p={p}",
                sol.residual
            );
        }
    }

    #[test]
    fn duality_is_an_involution_fixed_point() {
        // Solving at the dual parameter must return the dual parameter
        // untouched: the conditioned process is already subcritical.
        let params = BpParams::new(2, 0.75).unwrap();
        let sol = solve_survival(&params, DEFAULT_RHO_TOL).unwrap();
        let dual_params = BpParams::new(2, sol.pi).unwrap();
        let dual_sol = solve_survival(&dual_params, DEFAULT_RHO_TOL).unwrap();
        assert_eq!(dual_sol.rho, 0.0);
        assert_eq!(dual_sol.pi, sol.pi);
    }

    #[test]
    fn expected_total_size_formula() {
        assert!((expected_total_size_subcritical(0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!((expected_total_size_subcritical(0.9).unwrap() - 10.0).abs() < 1e-12);
        assert!(expected_total_size_subcritical(1.0).is_err());
        assert!(expected_total_size_subcritical(-0.1).is_err());
        // The geometric series behind the formula: partial sums approach 10.
        let mut partial = 0.0;
        for k in 0..600 {
            partial += 0.9f64.powi(k);
        }
        assert!((partial - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_process_dies_at_the_root() {
        let params = BpParams::new(10, 0.0).unwrap();
        let caps = BpCaps::new(100, 100).unwrap();
        let mut rng = Substream::new(7, 0, "bp");
        let out = simulate_bp(&params, caps, &mut rng).unwrap();
        assert_eq!(out.status, BpStatus::Extinct);
        assert_eq!(out.total_size, 1);
        assert_eq!(out.width, 1);
        assert_eq!(out.generations, 0);
        assert_eq!(out.pending, 0);
    }

    #[test]
    fn deterministic_chain_censors_at_exact_size() {
        let params = BpParams::new(1, 1.0).unwrap();
        let caps = BpCaps::new(100, 100).unwrap();
        let mut rng = Substream::new(8, 0, "bp");
        let out = simulate_bp(&params, caps, &mut rng).unwrap();
        assert_eq!(out.status, BpStatus::CensoredSize);
        assert_eq!(out.total_size, 100);
        assert_eq!(out.width, 1);
        assert!(out.generations < out.total_size);
    }

    #[test]
    fn extinct_runs_have_consistent_bookkeeping() {
        let params = BpParams::new(3, 0.2).unwrap();
        let caps = BpCaps::new(10_000, 10_000).unwrap();
        let mut rng = Substream::new(9, 0, "bp");
        for _ in 0..2000 {
            let out = simulate_bp(&params, caps, &mut rng).unwrap();
            if out.status == BpStatus::Extinct {
                assert!(out.generations < out.total_size);
                assert!(out.width < out.total_size.max(2));
                assert_eq!(out.pending, 0);
            } else {
                assert!(out.pending > 0);
            }
        }
    }

    #[test]
    fn subcritical_singleton_mass() {
        // P(total = 1) = (1 - p)^2 = 9/16 at n = 2, p = 1/4; every run dies.
        let params = BpParams::new(2, 0.25).unwrap();
        let caps = BpCaps::new(1_000_000, 1_000_000).unwrap();
        let mut rng = Substream::new(10, 0, "bp-mass");
        let runs = 1_000_000u64;
        let mut singletons = 0u64;
        for _ in 0..runs {
            let out = simulate_bp(&params, caps, &mut rng).unwrap();
            assert_eq!(out.status, BpStatus::Extinct);
            if out.total_size == 1 {
                singletons += 1;
            }
        }
        let freq = singletons as f64 / runs as f64;
        assert!(
            (freq - 0.5625).abs() <= 0.002,
            "P(total = 1) estimate {freq} strays from 9/16"
        );
    }

    #[test]
    fn simulated_sizes_match_exhaustive_enumeration() {
        // Laws at fanout 3 against the brute-force tree walk, truncated at 12.
        for (p, seed) in [(0.2, 21u64), (0.4, 22)] {
            let dist = oracle::bp_size_distribution(3, p, 12).unwrap();
            let params = BpParams::new(3, p).unwrap();
            let caps = BpCaps::new(13, u64::MAX).unwrap();
            let mut rng = Substream::new(seed, 0, "bp-law");
            let mut observed = vec![0u64; 13];
            let runs = 200_000;
            for _ in 0..runs {
                let out = simulate_bp(&params, caps, &mut rng).unwrap();
                if out.status == BpStatus::Extinct && out.total_size <= 12 {
                    observed[out.total_size as usize - 1] += 1;
                } else {
                    observed[12] += 1;
                }
            }
            let res = stats::chi2_goodness_of_fit(&observed, &dist.cells()).unwrap();
            assert!(
                res.p_value > 0.01,
                "p = {} at offspring prob {p}",
                res.p_value
            );
        }
    }

    #[test]
    fn classify_respects_cap_preconditions() {
        let params = BpParams::new(2, 0.75).unwrap();
        let sol = solve_survival(&params, DEFAULT_RHO_TOL).unwrap();
        let caps = default_caps(&sol).unwrap();
        // rho = 8/9: width cap 23, size cap 26.
        assert_eq!(caps.width_cap, 23);
        assert_eq!(caps.size_cap, 26);
        let mut rng = Substream::new(11, 0, "bp-classify");
        let out = simulate_bp(&params, caps, &mut rng).unwrap();
        let c = classify_survival(&out, &sol).unwrap();
        assert!(c.misclassification_bound <= (-20.0f64).exp());
        match out.status {
            BpStatus::Extinct => assert_eq!(c.verdict, SurvivalVerdict::Died),
            _ => assert_eq!(c.verdict, SurvivalVerdict::Survived),
        }

        // Too-small caps must refuse and name usable minimums.
        let tiny = simulate_bp(&params, BpCaps::new(4, 4).unwrap(), &mut rng).unwrap();
        let err = classify_survival(&tiny, &sol).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("width_cap >= 23"), "message: {msg}");
        assert!(msg.contains("size_cap >= 51"), "message: {msg}");
    }

    #[test]
    fn dual_direct_requires_supercritical_input() {
        let params = BpParams::new(5, 0.1).unwrap();
        let sol = solve_survival(&params, DEFAULT_RHO_TOL).unwrap();
        let caps = BpCaps::new(100, 100).unwrap();
        let mut rng = Substream::new(12, 0, "bp-dual");
        assert!(sample_dual_direct(&params, &sol, caps, &mut rng).is_err());
    }

    #[test]
    fn resume_continues_a_censored_run() {
        let params = BpParams::new(1, 1.0).unwrap();
        let mut rng = Substream::new(13, 0, "bp-resume");
        let first = simulate_bp(&params, BpCaps::new(10, 100).unwrap(), &mut rng).unwrap();
        assert_eq!(first.status, BpStatus::CensoredSize);
        assert_eq!(first.pending, 1);
        let second = resume_bp(&params, &first, BpCaps::new(25, 100).unwrap(), &mut rng).unwrap();
        assert_eq!(second.status, BpStatus::CensoredSize);
        assert_eq!(second.total_size, 25);
        let extinct = simulate_bp(
            &BpParams::new(10, 0.0).unwrap(),
            BpCaps::new(10, 10).unwrap(),
            &mut rng,
        )
        .unwrap();
        assert!(resume_bp(&params, &extinct, BpCaps::UNCAPPED, &mut rng).is_err());
    }
}
