use std::io::Write;

use shapemix_core::basis::{density_eval, linspace, uniform_location_grid};
use shapemix_core::cubic_newton::fit_unimodal;
use shapemix_core::{kw, minimize, BasisSpec, MixtureProblem, ShapeConstraint, SolveResult, Status};

use crate::args::{BasisArgs, BasisFamily, BenchArgs, ConstraintChoice, DensityArgs, FitArgs, KwCertArgs, SynthArgs};
use crate::error::CliError;
use crate::io::{self, Column};
use crate::synth::{self, Profile, Stream};

/// Exit code for a run that hit the outer iteration cap.
pub const EXIT_ITERATION_CAP: i32 = 2;

/// Gaussian density grids extend this many `σ` past the outermost location.
const GAUSSIAN_GRID_MARGIN: f64 = 4.0;

/// Catalog comparisons above this many multiply-adds per trial are skipped.
const BENCH_CATALOG_LIMIT: usize = 50_000_000;

pub fn synth(args: &SynthArgs) -> Result<i32, CliError> {
    let profile: Profile = args.profile.parse()?;
    if args.n == 0 {
        return Err(CliError::usage("N must be at least 1"));
    }
    let xs = synth::sample(profile, args.n, args.seed);
    let mut out = io::create(args.output.as_deref())?;
    io::write_numbers(&mut out, &xs)?;
    out.flush()?;
    Ok(0)
}

fn build_basis(args: &BasisArgs, samples: Option<&[f64]>, m_hint: Option<usize>) -> Result<BasisSpec, CliError> {
    if let (Some(m), Some(h)) = (args.m, m_hint) {
        if m != h {
            return Err(CliError::usage(format!("--M {m} disagrees with the {h} weights given")));
        }
    }
    let m = args.m.or(m_hint);
    match args.basis {
        BasisFamily::Bernstein => {
            if args.atoms.is_some() {
                return Err(CliError::usage("--atoms applies to the gaussian basis only"));
            }
            let m = m.ok_or_else(|| CliError::usage("--M is required"))?;
            Ok(BasisSpec::bernstein(m)?)
        }
        BasisFamily::Gaussian => {
            let sigma = args.sigma.ok_or_else(|| CliError::usage("--sigma is required for the gaussian basis"))?;
            let locations = match &args.atoms {
                Some(path) => io::read_numbers(path)?,
                None => {
                    let m = m.ok_or_else(|| CliError::usage("--M or --atoms is required"))?;
                    let samples =
                        samples.ok_or_else(|| CliError::usage("--input or --atoms is required to place locations"))?;
                    uniform_location_grid(samples, m)?
                }
            };
            if let Some(m) = m {
                if locations.len() != m {
                    return Err(CliError::usage(format!("{} atoms given but M = {m}", locations.len())));
                }
            }
            Ok(BasisSpec::gaussian(locations, sigma)?)
        }
    }
}

fn summary(r: &SolveResult) -> String {
    format!("{} {:?} {:?} {}", r.trace.status.as_str(), r.f, r.fw_gap, r.trace.outer_iters())
}

pub fn fit(args: &FitArgs) -> Result<i32, CliError> {
    let choice = ConstraintChoice::parse(&args.constraint)?;
    let samples = io::read_samples(&args.input.input, args.input.column().as_ref(), args.input.normalize)?;
    let basis = build_basis(&args.basis, Some(&samples), None)?;
    let problem = MixtureProblem::from_basis(basis, &samples)?;
    let config = args.solver.config();
    let reference = match &args.reference_f {
        Some(path) => Some(*io::read_numbers(path)?.first().ok_or_else(|| CliError::parse(path, 0, "no value found"))?),
        None => None,
    };

    let (result, mode) = match choice {
        ConstraintChoice::Fixed(shape) => {
            let c = ShapeConstraint::new(shape, problem.m())?;
            (minimize(&problem, &c, &config, None)?, None)
        }
        ConstraintChoice::Unimodal => {
            let u = fit_unimodal(&problem, &config)?;
            (u.result, Some(u.k_star))
        }
    };

    let mut out = io::create(Some(&args.output))?;
    io::write_weights(&mut out, result.w.as_slice())?;
    out.flush()?;
    if let Some(path) = &args.trace {
        let mut t = io::create(Some(path))?;
        io::write_trace(&mut t, &result.trace)?;
        t.flush()?;
    }

    println!("{}", summary(&result));
    if let Some(k) = mode {
        println!("mode {k}");
    }
    if let Some(f_star) = reference {
        println!("relative_error {:?}", (result.f - f_star) / f_star.abs().max(1.0));
    }
    Ok(if result.trace.status == Status::IterationCapped { EXIT_ITERATION_CAP } else { 0 })
}

pub fn density(args: &DensityArgs) -> Result<i32, CliError> {
    let w = io::read_weights(&args.weights)?;
    let samples = match &args.input {
        Some(path) => Some(io::read_samples(path, args.column.as_deref().map(Column::parse).as_ref(), args.normalize)?),
        None => None,
    };
    let basis = build_basis(&args.basis, samples.as_deref(), Some(w.len()))?;
    if args.grid == 0 {
        return Err(CliError::usage("--grid must be at least 1"));
    }
    let (grid, scale) = match &basis {
        BasisSpec::Bernstein { .. } => (linspace(0.0, 1.0, args.grid), 1.0),
        BasisSpec::GaussianLocation { locations, sigma } => {
            let pad = GAUSSIAN_GRID_MARGIN * sigma;
            let lo = locations[0] - pad;
            let hi = locations[locations.len() - 1] + pad;
            // kernels are unnormalized standard-normal pdfs of (x - μ)/σ
            (linspace(lo, hi, args.grid), 1.0 / sigma)
        }
    };
    let mut d = density_eval(&basis, &w, &grid)?;
    d.iter_mut().for_each(|x| *x *= scale);
    let mut out = io::create(args.output.as_deref())?;
    io::write_density(&mut out, &grid, &d)?;
    out.flush()?;
    Ok(0)
}

pub fn kw_cert(args: &KwCertArgs) -> Result<i32, CliError> {
    let samples = io::read_samples(&args.input.input, args.input.column().as_ref(), args.input.normalize)?;
    let atoms = match (&args.atoms, args.m) {
        (Some(path), _) => io::read_numbers(path)?,
        (None, Some(m)) => uniform_location_grid(&samples, m)?,
        (None, None) => return Err(CliError::usage("--atoms or --M is required")),
    };
    kw::check_bracketing(&samples, &atoms)?;
    let problem = MixtureProblem::from_basis(BasisSpec::gaussian(atoms, 1.0)?, &samples)?;
    let w = match &args.weights {
        Some(path) => {
            let w = io::read_weights(path)?;
            if w.len() != problem.m() {
                return Err(CliError::usage(format!("{} weights for {} atoms", w.len(), problem.m())));
            }
            w
        }
        None => minimize(&problem, &ShapeConstraint::simplex(problem.m()), &args.solver.config(), None)?.w,
    };
    let cert = kw::certify(&problem, w.as_slice())?;
    let mut out = io::create(args.output.as_deref())?;
    io::write_certificate(&mut out, &cert)?;
    out.flush()?;
    Ok(0)
}

pub fn bench_oracle(args: &BenchArgs) -> Result<i32, CliError> {
    let shape = match ConstraintChoice::parse(&args.family)? {
        ConstraintChoice::Fixed(s) => s,
        ConstraintChoice::Unimodal => return Err(CliError::usage("bench-oracle needs a fixed family")),
    };
    let c = ShapeConstraint::new(shape, args.m)?;
    let mut stream = Stream::new(args.seed);
    let ids = c.catalog_ids();
    let compare = ids.len().saturating_mul(args.m) <= BENCH_CATALOG_LIMIT;
    let mut max_disc = 0.0f64;
    let mut max_ops = 0u64;
    let mut g = vec![0.0; args.m];
    for _ in 0..args.trials {
        g.iter_mut().for_each(|x| *x = stream.gaussian());
        let (_, value, ops) = c.lp_oracle_counted(&g)?;
        max_ops = max_ops.max(ops);
        if compare {
            let mut best = f64::INFINITY;
            for id in &ids {
                best = best.min(c.vertex_dot(*id, &g)?);
            }
            max_disc = max_disc.max((value - best).abs());
        }
    }
    let name = match shape {
        shapemix_core::Shape::UnimodalFixed(k) => format!("unimodal-fixed {k}"),
        s => s.name().to_string(),
    };
    println!("family {name} M {} trials {} catalog {}", args.m, args.trials, ids.len());
    if compare {
        println!("max_discrepancy {max_disc:?}");
    } else {
        println!("max_discrepancy skipped (catalog too large)");
    }
    println!("ops {max_ops} ops_per_M {:?}", max_ops as f64 / args.m as f64);
    if let shapemix_core::Shape::UnimodalFixed(k) = shape {
        let windows = k as u64 * (args.m - k + 1) as u64;
        println!("windows {windows} ops_per_window {:?}", max_ops as f64 / windows as f64);
    }
    Ok(0)
}
