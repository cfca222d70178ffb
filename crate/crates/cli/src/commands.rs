use num_complex::Complex64;
use pasdfs::fock::{pasdfs_oracle, OracleMoments};
use pasdfs::husimi::{find_zeros, q_grid, Window};
use pasdfs::moments::MAX_MOMENT_ORDER;
use pasdfs::phase::{phase_distribution, phase_fluctuation_u, FluctuationReport};
use pasdfs::witnesses::{self, WitnessReport, MAX_ORDER};
use pasdfs::{pasdfs_amplitudes, Criterion, Error, FockAmplitudes, Health, MomentCache, MomentSource, StateSpec};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{
    AlphaSweep, Format, PhaseArgs, QfuncArgs, SelfcheckArgs, Single, StateArgs, SweepArgs, SweepCriterion,
};
use crate::output::{json_num, json_opt, json_text, num, opt_num};
use crate::{CliError, Outcome};

const SWEEP_SCHEMA: &str = "pasdfs-sweep";
const SCHEMA_VERSION: u32 = 1;
const ORACLE_TOL: f64 = 1e-9;
const MAX_KLYSHKO_Z: usize = 400;

fn with_jobs<T: Send>(jobs: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None => Ok(work()),
        Some(0) => Err(CliError::Usage("jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(work))
            .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}"))),
    }
}

fn error_tag(e: &Error) -> &'static str {
    match e {
        Error::Annihilated { .. } => "annihilated",
        Error::Truncation { .. } => "truncation",
        Error::Domain(_) => "domain",
        Error::Capacity { .. } => "capacity",
        Error::Parameter(_) => "parameter",
    }
}

fn spec_grid(k: &[usize], q: &[usize], n: &[usize]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::with_capacity(k.len() * q.len() * n.len());
    for &k in k {
        for &q in q {
            for &n in n {
                out.push((k, q, n));
            }
        }
    }
    out
}

fn check_spec_limits(grid: &[(usize, usize, usize)]) -> Result<(), CliError> {
    for &(k, q, n) in grid {
        StateSpec::new(k, q, n, Complex64::default())
            .validate()
            .map_err(CliError::from)?;
    }
    Ok(())
}

/// The argument handed to the core for a user-facing order.
fn core_argument(c: SweepCriterion, order: usize) -> Result<usize, CliError> {
    let bad = |why: &str| CliError::Usage(format!("order {order} is not valid for {}: {why}", c.name()));
    match c {
        SweepCriterion::Witness(Criterion::Antibunching | Criterion::Hosps) => {
            if (1..MAX_ORDER).contains(&order) {
                Ok(order + 1)
            } else {
                Err(bad(&format!("expected 1..={}", MAX_ORDER - 1)))
            }
        }
        SweepCriterion::Witness(Criterion::HongMandel) => {
            if (2..=MAX_MOMENT_ORDER).contains(&order) && order.is_multiple_of(2) {
                Ok(order)
            } else {
                Err(bad(&format!("expected an even order in 2..={MAX_MOMENT_ORDER}")))
            }
        }
        SweepCriterion::Witness(Criterion::Klyshko) => {
            if order <= MAX_KLYSHKO_Z {
                Ok(order)
            } else {
                Err(bad(&format!("expected z <= {MAX_KLYSHKO_Z}")))
            }
        }
        _ => Ok(0),
    }
}

fn default_order(c: SweepCriterion) -> usize {
    match c {
        SweepCriterion::Witness(Criterion::Antibunching | Criterion::Hosps) => 1,
        SweepCriterion::Witness(Criterion::HongMandel) => 2,
        _ => 0,
    }
}

fn takes_order(c: SweepCriterion) -> bool {
    matches!(
        c,
        SweepCriterion::Witness(
            Criterion::Antibunching | Criterion::Hosps | Criterion::HongMandel | Criterion::Klyshko
        )
    )
}

#[derive(Debug, Clone, Copy)]
struct Column {
    criterion: SweepCriterion,
    order: usize,
    argument: usize,
}

#[derive(Debug, Clone)]
struct SweepRow {
    k: usize,
    q: usize,
    n: usize,
    alpha_abs: f64,
    alpha_arg: f64,
    criterion: &'static str,
    order: usize,
    value: Option<f64>,
    nonclassical: Option<bool>,
    health: Health,
    oracle_delta: Option<f64>,
    error: Option<&'static str>,
}

impl SweepRow {
    fn csv(&self) -> String {
        let flag = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            self.k,
            self.q,
            self.n,
            num(self.alpha_abs),
            num(self.alpha_arg),
            self.criterion,
            self.order,
            self.value.map(num).unwrap_or_else(|| "nan".into()),
            flag(self.nonclassical),
            self.health.labels(),
            opt_num(self.oracle_delta),
            self.error.unwrap_or_default(),
        )
    }

    fn json(&self) -> Value {
        json!({
            "k": self.k,
            "q": self.q,
            "n": self.n,
            "alpha_abs": json_num(self.alpha_abs),
            "alpha_arg": json_num(self.alpha_arg),
            "criterion": self.criterion,
            "order": self.order,
            "value": json_opt(self.value),
            "nonclassical": self.nonclassical,
            "health": self.health.labels(),
            "oracle_delta": json_opt(self.oracle_delta),
            "error": self.error,
        })
    }
}

/// A witness or fluctuation value reduced to what a row records.
fn measure<S: MomentSource + ?Sized>(src: &S, col: Column) -> Result<(Option<f64>, Option<bool>, Health), Error> {
    match col.criterion {
        SweepCriterion::Witness(c) => {
            let r: WitnessReport = witnesses::evaluate(src, c, col.argument)?;
            let value = (!r.value.is_nan()).then_some(r.value);
            let verdict = (!r.health.denominator_small).then_some(r.nonclassical);
            Ok((value, verdict, r.health))
        }
        SweepCriterion::PhaseFluctuation => {
            let r: FluctuationReport = phase_fluctuation_u(src);
            Ok((r.u, r.below_coherent(), r.health))
        }
    }
}

fn sweep_point(
    spec: StateSpec,
    eps: f64,
    columns: &[Column],
    oracle_check: bool,
    alpha_abs: f64,
    alpha_arg: f64,
) -> Vec<SweepRow> {
    let base = |col: &Column| SweepRow {
        k: spec.k,
        q: spec.q,
        n: spec.n,
        alpha_abs,
        alpha_arg,
        criterion: col.criterion.name(),
        order: col.order,
        value: None,
        nonclassical: None,
        health: Health::default(),
        oracle_delta: None,
        error: None,
    };
    let psi = match pasdfs_amplitudes(&spec, eps) {
        Ok(psi) => psi,
        Err(e) => {
            return columns
                .iter()
                .map(|c| SweepRow {
                    error: Some(error_tag(&e)),
                    ..base(c)
                })
                .collect();
        }
    };
    let oracle_state = oracle_check.then(|| pasdfs_oracle(&spec));
    let cache = MomentCache::new(&psi);
    columns
        .iter()
        .map(|col| {
            let row = base(col);
            let (value, nonclassical, health) = match measure(&cache, *col) {
                Ok(m) => m,
                Err(e) => {
                    return SweepRow {
                        error: Some(error_tag(&e)),
                        ..row
                    }
                }
            };
            let oracle_delta = match &oracle_state {
                Some(Ok(slow)) => match measure(&OracleMoments::new(slow), *col) {
                    Ok((Some(b), _, _)) => value.map(|a| (a - b).abs() / (1.0 + b.abs())),
                    _ => None,
                },
                Some(Err(_)) => Some(f64::INFINITY),
                None => None,
            };
            SweepRow {
                value,
                nonclassical,
                health,
                oracle_delta,
                ..row
            }
        })
        .collect()
}

pub fn sweep(args: &SweepArgs) -> Result<Outcome, CliError> {
    args.alpha.validate()?;
    let grid = spec_grid(&args.k, &args.q, &args.n);
    check_spec_limits(&grid)?;
    let mut columns = Vec::new();
    for choice in &args.criterion {
        let c = choice.criterion;
        let orders: Vec<usize> = if !takes_order(c) {
            vec![0]
        } else if !choice.orders.is_empty() {
            choice.orders.clone()
        } else if args.order.is_empty() {
            vec![default_order(c)]
        } else {
            args.order.clone()
        };
        for order in orders {
            columns.push(Column {
                criterion: c,
                order,
                argument: core_argument(c, order)?,
            });
        }
    }
    let moduli = args.alpha.moduli();
    let theta = args.alpha.theta;
    let points: Vec<(StateSpec, f64)> = grid
        .iter()
        .flat_map(|&(k, q, n)| moduli.iter().map(move |&r| (StateSpec::polar(k, q, n, r, theta), r)))
        .collect();
    let eps = args.common.eps;
    let rows: Vec<SweepRow> = with_jobs(args.jobs, || {
        points
            .par_iter()
            .map(|&(spec, r)| sweep_point(spec, eps, &columns, args.oracle_check, r, theta))
            .collect::<Vec<_>>()
    })?
    .into_iter()
    .flatten()
    .collect();

    let text = match args.common.format {
        Format::Csv => {
            let mut s = format!("# {SWEEP_SCHEMA} v{SCHEMA_VERSION}\n");
            s.push_str("k,q,n,alpha_abs,alpha_arg,criterion,order,value,nonclassical,health,oracle_delta,error\n");
            for r in &rows {
                s.push_str(&r.csv());
            }
            s
        }
        Format::Json => json_text(&json!({
            "schema": SWEEP_SCHEMA,
            "version": SCHEMA_VERSION,
            "rows": rows.iter().map(SweepRow::json).collect::<Vec<_>>(),
        })),
    };

    let hard_failure = rows
        .iter()
        .any(|r| matches!(r.error, Some(tag) if tag != "annihilated"));
    let mismatch = rows
        .iter()
        .any(|r| r.oracle_delta.is_some_and(|d| d.is_nan() || d > ORACLE_TOL));
    let mut outcome = Outcome::ok(text);
    if hard_failure {
        outcome.code = 2;
        outcome.note = Some("some sweep points failed numerically; see the error column".into());
    } else if mismatch {
        outcome.code = 3;
        outcome.note = Some(format!("oracle_delta above {ORACLE_TOL:e} in at least one row"));
    }
    Ok(outcome)
}

fn single_spec(s: &Single) -> Result<StateSpec, CliError> {
    let spec = StateSpec::polar(s.k, s.q, s.n, s.alpha, s.theta);
    spec.validate()?;
    Ok(spec)
}

fn build(s: &Single, eps: f64) -> Result<(StateSpec, FockAmplitudes), CliError> {
    let spec = single_spec(s)?;
    let psi = pasdfs_amplitudes(&spec, eps)?;
    Ok((spec, psi))
}

fn spec_comment(s: &Single) -> String {
    format!(
        "# k={} q={} n={} alpha_abs={} alpha_arg={}\n",
        s.k,
        s.q,
        s.n,
        num(s.alpha),
        num(s.theta)
    )
}

fn spec_json(s: &Single) -> Value {
    json!({"k": s.k, "q": s.q, "n": s.n, "alpha_abs": json_num(s.alpha), "alpha_arg": json_num(s.theta)})
}

pub fn state(args: &StateArgs) -> Result<Outcome, CliError> {
    let (_, psi) = build(&args.spec, args.common.eps)?;
    let residual = (psi.norm_sqr() - 1.0).abs();
    let text = match args.common.format {
        Format::Csv => {
            let mut s = format!("# pasdfs-state v{SCHEMA_VERSION}\n");
            s.push_str(&spec_comment(&args.spec));
            s.push_str(&format!(
                "# normalization_residual={} truncation_eps={} terms={}\n",
                num(residual),
                num(psi.truncation_eps()),
                psi.len()
            ));
            s.push_str("photon,re,im,probability\n");
            for (w, c) in psi.iter() {
                s.push_str(&format!("{w},{},{},{}\n", num(c.re), num(c.im), num(c.norm_sqr())));
            }
            s
        }
        Format::Json => json_text(&json!({
            "schema": "pasdfs-state",
            "version": SCHEMA_VERSION,
            "spec": spec_json(&args.spec),
            "normalization_residual": json_num(residual),
            "truncation_eps": json_num(psi.truncation_eps()),
            "terms": psi.len(),
            "amplitudes": psi.iter().map(|(w, c)| json!({
                "photon": w,
                "re": json_num(c.re),
                "im": json_num(c.im),
                "probability": json_num(c.norm_sqr()),
            })).collect::<Vec<_>>(),
        })),
    };
    Ok(Outcome::ok(text))
}

pub fn phase(args: &PhaseArgs) -> Result<Outcome, CliError> {
    let (_, psi) = build(&args.spec, args.common.eps)?;
    let dist = phase_distribution(&psi, args.grid_points)?;
    let f = phase_fluctuation_u(&psi);
    let text = match args.common.format {
        Format::Csv => {
            let mut s = format!("# pasdfs-phase v{SCHEMA_VERSION}\n");
            s.push_str(&spec_comment(&args.spec));
            s.push_str(&format!(
                "# grid_points={} integral={} u={} s_s={} q={} health={}\n",
                dist.len(),
                num(dist.integral()),
                opt_num(f.u),
                num(f.s_s),
                opt_num(f.q_param),
                f.health.labels()
            ));
            s.push_str("theta,p\n");
            for (t, p) in dist.pairs() {
                s.push_str(&format!("{},{}\n", num(t), num(p)));
            }
            s
        }
        Format::Json => json_text(&json!({
            "schema": "pasdfs-phase",
            "version": SCHEMA_VERSION,
            "spec": spec_json(&args.spec),
            "integral": json_num(dist.integral()),
            "u": json_opt(f.u),
            "s_s": json_num(f.s_s),
            "q": json_opt(f.q_param),
            "health": f.health.labels(),
            "theta": dist.thetas().iter().map(|t| json_num(*t)).collect::<Vec<_>>(),
            "p": dist.values().iter().map(|p| json_num(*p)).collect::<Vec<_>>(),
        })),
    };
    Ok(Outcome::ok(text))
}

fn parse_window(s: &str) -> Result<Window, CliError> {
    if s == "auto" {
        return Ok(Window::Auto);
    }
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            CliError::Usage(format!(
                "window '{s}' is neither 'auto' nor four comma-separated numbers"
            ))
        })?;
    match parts[..] {
        [r0, r1, i0, i1] => Ok(Window::Explicit {
            re: (r0, r1),
            im: (i0, i1),
        }),
        _ => Err(CliError::Usage(format!("window '{s}' needs exactly four numbers"))),
    }
}

pub fn qfunc(args: &QfuncArgs) -> Result<Outcome, CliError> {
    let window = parse_window(&args.window)?;
    let (_, psi) = build(&args.spec, args.common.eps)?;
    let grid = q_grid(&psi, window, args.nx, args.ny)?;
    let zeros = find_zeros(&psi, &grid);
    let (angle, major, minor) = grid.principal_axis();
    let (re, im) = (grid.re_range(), grid.im_range());
    let text = match args.common.format {
        Format::Csv => {
            let mut s = format!("# pasdfs-qfunc v{SCHEMA_VERSION}\n");
            s.push_str(&spec_comment(&args.spec));
            s.push_str(&format!(
                "# nx={} ny={} re_min={} re_max={} im_min={} im_max={} mass={} widened={} mass_warning={}\n",
                args.nx,
                args.ny,
                num(re.0),
                num(re.1),
                num(im.0),
                num(im.1),
                num(grid.mass()),
                grid.widened(),
                grid.mass_warning()
            ));
            s.push_str(&format!(
                "# peak={} axis_angle={} axis_major_var={} axis_minor_var={} zeros={}\n",
                num(grid.peak()),
                num(angle),
                num(major),
                num(minor),
                zeros.len()
            ));
            for z in &zeros {
                s.push_str(&format!(
                    "# zero re={} im={} q={}\n",
                    num(z.beta.re),
                    num(z.beta.im),
                    num(z.value)
                ));
            }
            s.push_str("re,im,q\n");
            for (x, y, q) in grid.triplets() {
                s.push_str(&format!("{},{},{}\n", num(x), num(y), num(q)));
            }
            s
        }
        Format::Json => json_text(&json!({
            "schema": "pasdfs-qfunc",
            "version": SCHEMA_VERSION,
            "spec": spec_json(&args.spec),
            "nx": args.nx,
            "ny": args.ny,
            "re_range": [json_num(re.0), json_num(re.1)],
            "im_range": [json_num(im.0), json_num(im.1)],
            "mass": json_num(grid.mass()),
            "widened": grid.widened(),
            "mass_warning": grid.mass_warning(),
            "peak": json_num(grid.peak()),
            "axis": {"angle": json_num(angle), "major_var": json_num(major), "minor_var": json_num(minor)},
            "zeros": zeros.iter().map(|z| json!({
                "re": json_num(z.beta.re), "im": json_num(z.beta.im), "q": json_num(z.value)
            })).collect::<Vec<_>>(),
            "q": grid.values().iter().map(|v| json_num(*v)).collect::<Vec<_>>(),
        })),
    };
    let mut outcome = Outcome::ok(text);
    if grid.mass_warning() {
        outcome.note = Some(format!(
            "Q window holds only {:.4} of the mass after widening",
            grid.mass()
        ));
    }
    Ok(outcome)
}

#[derive(Debug, Clone)]
struct CheckRow {
    spec: StateSpec,
    alpha_abs: f64,
    amplitude: f64,
    moment: f64,
    witness: f64,
    status: &'static str,
}

fn rel(a: f64, b: f64) -> f64 {
    if a.is_nan() && b.is_nan() {
        0.0
    } else {
        (a - b).abs() / (1.0 + b.abs())
    }
}

fn check_point(spec: StateSpec, alpha_abs: f64, eps: f64, tol: f64) -> CheckRow {
    let mut row = CheckRow {
        spec,
        alpha_abs,
        amplitude: 0.0,
        moment: 0.0,
        witness: 0.0,
        status: "ok",
    };
    let (fast, slow) = match (pasdfs_amplitudes(&spec, eps), pasdfs_oracle(&spec)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(Error::Annihilated { .. }), Err(Error::Annihilated { .. })) => {
            row.status = "annihilated";
            return row;
        }
        _ => {
            row.status = "mismatch";
            row.amplitude = f64::INFINITY;
            return row;
        }
    };
    row.amplitude = fast.max_abs_diff(&slow);
    let cache = MomentCache::new(&fast);
    let oracle = OracleMoments::new(&slow);
    for t in 0..=4 {
        for j in 0..=4 {
            let (a, b) = (cache.moment_tj(t, j), oracle.moment_tj(t, j));
            row.moment = row.moment.max((a - b).norm() / (1.0 + b.norm()));
        }
    }
    let cases = [
        (Criterion::Antibunching, 2),
        (Criterion::Hosps, 2),
        (Criterion::HongMandel, 2),
        (Criterion::Klyshko, 0),
        (Criterion::Klyshko, 1),
        (Criterion::AgarwalTara, 0),
        (Criterion::Vogel, 0),
    ];
    for (c, arg) in cases {
        match (
            witnesses::evaluate(&cache, c, arg),
            witnesses::evaluate(&oracle, c, arg),
        ) {
            (Ok(a), Ok(b)) if a.health.denominator_small || b.health.denominator_small => {}
            (Ok(a), Ok(b)) => row.witness = row.witness.max(rel(a.value, b.value)),
            _ => row.witness = f64::INFINITY,
        }
    }
    let worst = row.amplitude.max(row.moment).max(row.witness);
    if worst.is_nan() || worst > tol {
        row.status = "mismatch";
    }
    row
}

pub fn selfcheck(args: &SelfcheckArgs) -> Result<Outcome, CliError> {
    let sweep: AlphaSweep = args.sweep();
    sweep.validate()?;
    let grid = spec_grid(&args.k, &args.q, &args.n);
    check_spec_limits(&grid)?;
    let moduli = sweep.moduli();
    let points: Vec<(StateSpec, f64)> = grid
        .iter()
        .flat_map(|&(k, q, n)| {
            moduli
                .iter()
                .map(move |&r| (StateSpec::polar(k, q, n, r, args.theta), r))
        })
        .collect();
    let (eps, tol) = (args.common.eps, args.tol);
    let rows: Vec<CheckRow> = with_jobs(args.jobs, || {
        points
            .par_iter()
            .map(|&(spec, r)| check_point(spec, r, eps, tol))
            .collect()
    })?;
    let failures = rows.iter().filter(|r| r.status == "mismatch").count();
    let text = match args.common.format {
        Format::Csv => {
            let mut s = format!(
                "# pasdfs-selfcheck v{SCHEMA_VERSION}\n# tol={} failures={failures}\n",
                num(tol)
            );
            s.push_str("k,q,n,alpha_abs,alpha_arg,amplitude_delta,moment_delta,witness_delta,status\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.spec.k,
                    r.spec.q,
                    r.spec.n,
                    num(r.alpha_abs),
                    num(args.theta),
                    num(r.amplitude),
                    num(r.moment),
                    num(r.witness),
                    r.status
                ));
            }
            s
        }
        Format::Json => json_text(&json!({
            "schema": "pasdfs-selfcheck",
            "version": SCHEMA_VERSION,
            "tol": json_num(tol),
            "failures": failures,
            "rows": rows.iter().map(|r| json!({
                "k": r.spec.k, "q": r.spec.q, "n": r.spec.n,
                "alpha_abs": json_num(r.alpha_abs), "alpha_arg": json_num(args.theta),
                "amplitude_delta": json_num(r.amplitude),
                "moment_delta": json_num(r.moment),
                "witness_delta": json_num(r.witness),
                "status": r.status,
            })).collect::<Vec<_>>(),
        })),
    };
    let mut outcome = Outcome::ok(text);
    if failures > 0 {
        outcome.code = 3;
        outcome.note = Some(format!(
            "{failures} of {} points differ from the oracle by more than {tol:e}",
            rows.len()
        ));
    }
    Ok(outcome)
}
