//! `depth` subcommand.

use crate::parse::{int_list, parsed_list};
use crate::EXIT_USAGE;
use clap::Args;
use gapforge_core::exact::{design_depth, gate_count_compare, hunter_jones_depth};
use gapforge_core::io::fmt17;
use gapforge_core::Boundary;
use std::io::Write;
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct DepthArgs {
    #[arg(long, default_value_t = 2)]
    d: u64,
    #[arg(long, default_value_t = 1)]
    m: u32,
    /// Qudit counts: list and/or `start:stop:step` ranges.
    #[arg(long, default_value = "1000")]
    n: String,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value = "open,closed")]
    boundary: String,
    /// Compare total gate counts of single-qudit sites against `m ≈ log₂ n` sites
    /// (`1,log`); qubits only.
    #[arg(long)]
    compare_m: Option<String>,
    /// Exponent of the per-gate cost `m^p`.
    #[arg(long, default_value_t = 2)]
    cost_exponent: u32,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn table(args: &DepthArgs, ns: &[u32], boundaries: &[Boundary]) -> Result<Vec<Vec<String>>, String> {
    let mut rows = vec![[
        "d", "m", "n", "boundary", "epsilon", "l_min", "bound", "coefficient", "prior_l_min", "prior_coefficient",
    ]
    .map(String::from)
    .to_vec()];
    for &n in ns {
        for &b in boundaries {
            let ours = design_depth(args.d, args.m, n, b, args.eps).map_err(|e| e.to_string())?;
            let prior = hunter_jones_depth(n, args.d, args.eps).map_err(|e| e.to_string())?;
            rows.push(vec![
                args.d.to_string(),
                args.m.to_string(),
                n.to_string(),
                b.to_string(),
                fmt17(args.eps),
                ours.l_min.to_string(),
                fmt17(ours.bound),
                fmt17(ours.coefficient),
                prior.l_min.to_string(),
                fmt17(prior.coefficient),
            ]);
        }
    }
    Ok(rows)
}

fn compare(args: &DepthArgs, ns: &[u32], boundaries: &[Boundary]) -> Result<Vec<Vec<String>>, String> {
    let mut rows = vec![["n", "boundary", "m_log", "gates_m1", "gates_mlog", "ratio"].map(String::from).to_vec()];
    for &n in ns {
        for &b in boundaries {
            let c = gate_count_compare(n as u64, args.eps, args.cost_exponent, b).map_err(|e| e.to_string())?;
            rows.push(vec![
                n.to_string(),
                b.to_string(),
                c.m_log.to_string(),
                fmt17(c.n_m1),
                fmt17(c.n_mlog),
                fmt17(c.ratio),
            ]);
        }
    }
    Ok(rows)
}

pub fn run(args: DepthArgs) -> u8 {
    if !(args.eps > 0.0 && args.eps < 1.0) {
        eprintln!("error: --eps must lie in (0, 1)");
        return EXIT_USAGE;
    }
    let (ns, boundaries) = match (int_list(&args.n), parsed_list::<Boundary>(&args.boundary)) {
        (Ok(n), Ok(b)) => (n, b),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let rows = match &args.compare_m {
        Some(spec) if spec.replace(' ', "") == "1,log" => compare(&args, &ns, &boundaries),
        Some(other) => Err(format!("--compare-m accepts only '1,log', got '{other}'")),
        None => table(&args, &ns, &boundaries),
    };
    let rows = match rows {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let write = |out: &mut dyn Write| -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    };
    let res = match &args.output {
        Some(p) => std::fs::File::create(p).map_err(csv::Error::from).and_then(|mut f| write(&mut f)),
        None => write(&mut std::io::stdout().lock()),
    };
    match res {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
