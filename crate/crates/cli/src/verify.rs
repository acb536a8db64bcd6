//! `verify` subcommand: prints one PASS/FAIL line per check.

use crate::EXIT_USAGE;
use clap::{Args, ValueEnum};
use gapforge_core::commutant::{mc_local_moment, PairAmbient, SiteKind};
use gapforge_core::exact::exact_gap;
use gapforge_core::numeric::{auto_method, dense_gap, iterative_gap, Method, SolverConfig};
use gapforge_core::verify::{
    b2_is_b1_squared, even_block_support, one_switch_action, sector_bounds, switch_monotonicity, two_switch_action,
};
use gapforge_core::{Boundary, CircuitSpec, GroupKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Lemmas,
    Stencils,
    Mc,
    SquareLaw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Grid {
    /// d ∈ {2,3,5}, m ∈ {1,2}, η ∈ {4,…,40}.
    Default,
    /// d ∈ {2,3}, m = 1, η ≤ 12.
    Quick,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    /// Chain length for the exhaustive checks.
    #[arg(long, default_value_t = 8)]
    eta: u32,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 20_240_601)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Grid::Quick)]
    grid: Grid,
}

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures += 1;
        }
    }

    fn error(&mut self, name: &str, e: impl std::fmt::Display) {
        self.check(name, false, format!("error: {e}"));
    }
}

fn lemmas(r: &mut Report, eta: u32) {
    for b in [Boundary::Open, Boundary::Closed] {
        let spec = match CircuitSpec::new(GroupKind::Unitary, b, 2, 1, eta) {
            Ok(s) => s,
            Err(e) => return r.error("lemmas", e),
        };
        match even_block_support(&spec) {
            Ok(s) => r.check(&format!("even-block support ({b}, η={eta})"), s.holds(0.0), format!("{} words", s.words)),
            Err(e) => r.error("even-block support", e),
        }
        match switch_monotonicity(&spec) {
            Ok(s) => r.check(
                &format!("switch monotonicity ({b}, η={eta})"),
                s.holds(1e-13),
                format!("max leak {:.1e}", s.max_violation),
            ),
            Err(e) => r.error("switch monotonicity", e),
        }
        match sector_bounds(&spec) {
            Ok(list) => {
                let worst = list.iter().map(|s| s.spectral_radius - s.bound).fold(f64::NEG_INFINITY, f64::max);
                r.check(
                    &format!("sector bounds ({b}, η={eta})"),
                    worst <= 1e-12,
                    format!("{} sectors, worst margin {worst:.3e}", list.len()),
                );
            }
            Err(e) => r.error("sector bounds", e),
        }
    }
    let eta = (eta as usize).max(6);
    match b2_is_b1_squared(2, 1, eta) {
        Ok(ok) => r.check(&format!("B2 = B1^2 exactly (η={eta})"), ok, "rational arithmetic".into()),
        Err(e) => r.error("B2 = B1^2", e),
    }
}

fn stencils(r: &mut Report) {
    let close = |got: Option<&f64>, want: f64| got.is_some_and(|g| (g - want).abs() <= 1e-13);
    match CircuitSpec::new(GroupKind::Unitary, Boundary::Open, 2, 1, 8).and_then(|s| one_switch_action(&s, 4)) {
        Ok(a) => r.check(
            "one-switch stencil (1,2,1)",
            close(a.get(&2), 1.0) && close(a.get(&4), 2.0) && close(a.get(&6), 1.0) && a.len() == 3,
            format!("{a:?}"),
        ),
        Err(e) => r.error("one-switch stencil", e),
    }
    match CircuitSpec::new(GroupKind::Unitary, Boundary::Closed, 2, 1, 12) {
        Ok(spec) => {
            match two_switch_action(&spec, 6) {
                Ok(a) => r.check(
                    "two-switch stencil (1,4,6,4,1)",
                    [(2, 1.0), (4, 4.0), (6, 6.0), (8, 4.0), (10, 1.0)].iter().all(|&(k, v)| close(a.get(&k), v)),
                    format!("{a:?}"),
                ),
                Err(e) => r.error("two-switch stencil", e),
            }
            match two_switch_action(&spec, 2) {
                Ok(a) => r.check(
                    "two-switch edge stencil (33/4,5,4,1)",
                    [(0, 33.0 / 4.0), (2, 5.0), (4, 4.0), (6, 1.0)].iter().all(|&(k, v)| close(a.get(&k), v)),
                    format!("{a:?}"),
                ),
                Err(e) => r.error("two-switch edge stencil", e),
            }
        }
        Err(e) => r.error("stencils", e),
    }
}

fn monte_carlo(r: &mut Report, samples: usize, seed: u64) {
    let cases = [
        (GroupKind::Unitary, SiteKind::plain(2)),
        (GroupKind::Orthogonal, SiteKind::orthogonal(2)),
    ];
    for (g, site) in cases {
        match mc_local_moment(g, &PairAmbient::uniform(site), samples, seed) {
            Ok(est) => r.check(
                &format!("Monte Carlo {g} moment ({} entries, {samples} samples)", est.mean.len()),
                est.within(3.0, 1e-12),
                format!("worst deviation {:.2} σ", est.worst_sigma(1e-12)),
            ),
            Err(e) => r.error("Monte Carlo", e),
        }
    }
}

fn square_law(r: &mut Report, grid: Grid) {
    let (ds, ms, eta_max): (&[u64], &[u32], u32) = match grid {
        Grid::Default => (&[2, 3, 5], &[1, 2], 40),
        Grid::Quick => (&[2, 3], &[1], 12),
    };
    let cfg = SolverConfig {
        tolerance: 1e-8,
        relative: true,
        ..Default::default()
    };
    let mut formula_worst = 0.0f64;
    let mut numeric_worst = 0.0f64;
    let mut failed = Vec::new();
    for &d in ds {
        for &m in ms {
            for eta in (4..=eta_max).step_by(2) {
                let n = eta * m;
                let f = (exact_gap(d, m, n, Boundary::Open), exact_gap(d, m, n, Boundary::Closed));
                if let (Ok(o), Ok(c)) = f {
                    formula_worst = formula_worst.max((c.lambda - o.lambda * o.lambda).abs());
                }
                let solve = |b| -> Result<f64, String> {
                    let spec = CircuitSpec::new(GroupKind::Unitary, b, d, m, n).map_err(|e| e.to_string())?;
                    let res = match auto_method(&spec, cfg.dense_cap).map_err(|e| e.to_string())? {
                        Method::Dense => dense_gap(&spec, &cfg),
                        _ => iterative_gap(&spec, &cfg),
                    };
                    res.map(|g| g.lambda).map_err(|e| e.to_string())
                };
                match (solve(Boundary::Open), solve(Boundary::Closed)) {
                    (Ok(o), Ok(c)) => numeric_worst = numeric_worst.max((c - o * o).abs()),
                    (Err(e), _) | (_, Err(e)) => failed.push(format!("d={d} m={m} n={n}: {e}")),
                }
            }
        }
    }
    r.check("square law (formula)", formula_worst <= 1e-14, format!("max deviation {formula_worst:.2e}"));
    r.check(
        "square law (numeric)",
        numeric_worst <= 1e-10 && failed.is_empty(),
        format!("max deviation {numeric_worst:.2e}; failures {failed:?}"),
    );
}

pub fn run(args: VerifyArgs) -> u8 {
    if args.eta < 4 || !args.eta.is_multiple_of(2) || args.eta > 12 {
        eprintln!("error: --eta must be even and within 4..=12");
        return EXIT_USAGE;
    }
    let mut r = Report { failures: 0 };
    let all = args.suite == Suite::All;
    if all || args.suite == Suite::Lemmas {
        lemmas(&mut r, args.eta);
    }
    if all || args.suite == Suite::Stencils {
        stencils(&mut r);
    }
    if all || args.suite == Suite::Mc {
        monte_carlo(&mut r, args.samples, args.seed);
    }
    if all || args.suite == Suite::SquareLaw {
        square_law(&mut r, args.grid);
    }
    println!("{} failure(s)", r.failures);
    u8::from(r.failures > 0)
}
