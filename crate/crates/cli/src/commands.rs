//! The six subcommands. Each builds a [`Document`] and collects tolerance
//! breaches; the caller writes the document before reporting a breach.

use std::f64::consts::PI;

use bose_genfun_core::fockoracle::{
    bch_check, bogoliubov_action_defect, depletion_distribution, distribution_central_moments, fock_modes,
    mgf_oracle, quasi_free_vector,
};
use bose_genfun_core::genfun::{cumulants, fourth_moment_report, log_mgf, log_mgf_closed, mgf_derivative_check};
use bose_genfun_core::observable::{certified_domain, log_mgf_general};
use bose_genfun_core::scattering::{a16pi, solve_scattering};
use bose_genfun_core::tails::{chernoff_bound_with, nonconcentration_witness, quadratic_bound_report};
use bose_genfun_core::{
    CMat, Error as CoreError, FockSpace, GeneralOptions, Lattice, ObservableKernel, PotentialSpec, SolveMethod,
    SolveOptions, SpectrumKernel, TailOptions,
};

use crate::config::{ObservableSpec, RunConfig, DEFAULT_SIGMA_MULTIPLES};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Document, Table};

/// Largest lattice accepted by the `observable` command.
pub const OBSERVABLE_MODE_CAP: usize = 1024;
/// Fraction of an open domain that out-of-range grid points are clipped to.
pub const CLIP_FRACTION: f64 = 0.99;
/// Fraction of the certified domain used when comparing against the oracle.
pub const ORACLE_OBSERVABLE_FRACTION: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Scattering,
    Genfun,
    Moments,
    Tails,
    Observable,
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Scattering => "scattering",
            Command::Genfun => "genfun",
            Command::Moments => "moments",
            Command::Tails => "tails",
            Command::Observable => "observable",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug)]
pub struct Report {
    pub document: Document,
    pub breaches: Vec<String>,
}

struct Run<'a> {
    cfg: &'a RunConfig,
    doc: Document,
    breaches: Vec<String>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a RunConfig, cmd: Command) -> Self {
        let mut doc = Document::default();
        doc.meta("tool", concat!("bose-genfun ", env!("CARGO_PKG_VERSION")));
        doc.meta("command", cmd.name());
        doc.meta("config_sha256", cfg.hash());
        doc.meta("convention", convention_name(cfg));
        doc.meta("cutoff_m", cfg.cutoff_m);
        doc.meta("seed", cfg.seed());
        doc.meta("kernel_form", enum_name(&cfg.kernel_form));
        Self { cfg, doc, breaches: Vec::new() }
    }

    fn check(&mut self, what: impl FnOnce() -> String, value: f64, tol: f64) -> bool {
        let ok = value <= tol;
        if !ok {
            self.breaches.push(format!("{}: {value:e} > {tol:e}", what()));
        }
        ok
    }

    fn finish(mut self) -> Report {
        for b in &self.breaches {
            self.doc.warn(format!("tolerance breach: {b}"));
        }
        self.doc.meta("status", if self.breaches.is_empty() { "ok" } else { "tolerance_breach" });
        Report { document: self.doc, breaches: self.breaches }
    }

    /// Grid points inside `(−bound, bound)`. Points outside are moved to
    /// `±fraction·bound` with a warning, or rejected when clipping is off.
    fn grid(&mut self, bound: f64, fraction: f64, label: &str) -> CliResult<Vec<f64>> {
        let points = self.cfg.lambda_grid.points();
        if !bound.is_finite() {
            return Ok(points);
        }
        let limit = fraction * bound;
        let outside = |x: f64| if fraction < 1.0 { x.abs() > limit } else { x.abs() >= bound };
        let n_out = points.iter().filter(|&&x| outside(x)).count();
        if n_out == 0 {
            return Ok(points);
        }
        if !self.cfg.lambda_grid.clip {
            let worst = points.iter().cloned().find(|&x| outside(x)).unwrap_or(f64::NAN);
            return Err(CliError::Domain(format!(
                "lambda = {worst} outside the {label} (|lambda| < {limit}) and clipping is disabled"
            )));
        }
        let clip_at = if fraction < 1.0 { limit } else { CLIP_FRACTION * bound };
        self.doc.warn(format!("{n_out} lambda points outside the {label} clipped to +-{clip_at:.16e}"));
        Ok(points.into_iter().map(|x| if outside(x) { x.signum() * clip_at } else { x }).collect())
    }
}

fn convention_name(cfg: &RunConfig) -> &'static str {
    match cfg.convention {
        bose_genfun_core::Convention::Paper => "paper",
        bose_genfun_core::Convention::Standard => "standard",
    }
}

fn enum_name<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|x| x.as_str().map(String::from)).unwrap_or_default()
}

pub fn build_kernel(cfg: &RunConfig) -> CliResult<SpectrumKernel> {
    let a = a16pi(&cfg.potential, cfg.convention)?;
    let lattice = Lattice::cube(cfg.cutoff_m)?;
    Ok(SpectrumKernel::build(lattice, a)?)
}

fn kernel_meta(run: &mut Run, k: &SpectrumKernel) {
    run.doc.meta("a16pi", Cell::from(k.a16pi().unwrap_or(f64::NAN)).render());
    run.doc.meta("modes", k.len());
    run.doc.meta("lambda0", Cell::from(k.lambda0()).render());
}

pub fn execute(cmd: Command, cfg: &RunConfig) -> CliResult<Report> {
    match cmd {
        Command::Scattering => cmd_scattering(cfg),
        Command::Genfun => cmd_genfun(cfg),
        Command::Moments => cmd_moments(cfg),
        Command::Tails => cmd_tails(cfg),
        Command::Observable => cmd_observable(cfg),
        Command::Oracle => cmd_oracle(cfg),
    }
}

pub fn cmd_scattering(cfg: &RunConfig) -> CliResult<Report> {
    let mut run = Run::new(cfg, Command::Scattering);
    let pot = &cfg.potential;
    pot.validate()?;
    let (a_std, a_paper, residual, n_grid, r_max) = match *pot {
        PotentialSpec::Direct { a } => (a, a, 0.0, 0, f64::NAN),
        PotentialSpec::Zero => (0.0, 0.0, 0.0, 0, f64::NAN),
        _ => {
            let r_max = cfg.scattering.r_max_factor * pot.support_radius();
            let sol = solve_scattering(pot, r_max, cfg.scattering.n_grid)?;
            (sol.a_std, sol.a_paper, sol.residual, sol.n_grid, r_max)
        }
    };
    let chosen = match cfg.convention {
        bose_genfun_core::Convention::Paper => a_paper,
        bose_genfun_core::Convention::Standard => a_std,
    };
    let mut t = Table::new("scattering", &["a_std", "a_paper", "a_chosen", "a16pi", "residual", "n_grid", "r_max"]);
    t.push(vec![
        a_std.into(),
        a_paper.into(),
        chosen.into(),
        (16.0 * PI * chosen).into(),
        residual.into(),
        n_grid.into(),
        r_max.into(),
    ]);
    run.doc.tables.push(t);
    Ok(run.finish())
}

pub fn cmd_genfun(cfg: &RunConfig) -> CliResult<Report> {
    let mut run = Run::new(cfg, Command::Genfun);
    let k = build_kernel(cfg)?;
    kernel_meta(&mut run, &k);
    let grid = run.grid(k.lambda0(), 1.0, "domain (-lambda0, lambda0)")?;
    let mut t = Table::new(
        "genfun",
        &["lambda", "lambda_quadrature", "lambda_closed", "abs_diff", "exp_lambda", "quadrature_error"],
    );
    for lambda in grid {
        let q = log_mgf(&k, lambda, &cfg.quadrature)?;
        let c = log_mgf_closed(&k, lambda)?;
        let diff = (q.value - c.value).abs();
        run.check(|| format!("genfun at lambda = {lambda}"), diff, cfg.tolerances.genfun);
        t.push(vec![lambda.into(), q.value.into(), c.value.into(), diff.into(), c.value.exp().into(), q.error_estimate.into()]);
    }
    run.doc.tables.push(t);
    Ok(run.finish())
}

pub fn cmd_moments(cfg: &RunConfig) -> CliResult<Report> {
    let mut run = Run::new(cfg, Command::Moments);
    let k = build_kernel(cfg)?;
    kernel_meta(&mut run, &k);
    let set = cumulants(&k, 4)?;
    let fourth = fourth_moment_report(&k)?;
    let mut t = Table::new("moments", &["quantity", "value"]);
    let mut row = |name: &str, v: Cell| t.push(vec![name.into(), v]);
    row("mu", k.depletion_mean().into());
    row("sigma2", k.depletion_variance().into());
    for j in 1..=4 {
        row(&format!("cumulant_{j}"), set.kappa(j).into());
    }
    row("central_3", set.central(3).into());
    row("central_4", set.central(4).into());
    row("central_4_reduced_form", fourth.reduced_form.into());
    row("central_4_printed_form", fourth.printed_form.into());
    row("central_4_discrepancy", fourth.discrepancy.into());
    row("central_4_flagged", fourth.flagged.into());
    let mut fd_rows = Vec::new();
    if k.lambda0() > 0.0 {
        for j in 1..=2 {
            let fd = mgf_derivative_check(&k, 0.0, j)?;
            let exact = set.moment(j);
            let rel = (fd - exact).abs() / exact.abs().max(f64::MIN_POSITIVE);
            let rel = if exact == 0.0 && fd == 0.0 { 0.0 } else { rel };
            fd_rows.push((j, fd, rel));
        }
    }
    for &(j, fd, rel) in &fd_rows {
        row(&format!("moment_{j}_finite_difference"), fd.into());
        row(&format!("moment_{j}_relative_gap"), rel.into());
    }
    if fourth.flagged {
        run.doc.warn("closed-form fourth central moment differs from the cumulant value");
    }
    for (j, _, rel) in fd_rows {
        run.check(|| format!("finite-difference moment {j}"), rel, cfg.tolerances.moments_fd);
    }
    run.doc.tables.push(t);
    Ok(run.finish())
}

pub fn cmd_tails(cfg: &RunConfig) -> CliResult<Report> {
    let mut run = Run::new(cfg, Command::Tails);
    let k = build_kernel(cfg)?;
    kernel_meta(&mut run, &k);
    let mu = k.depletion_mean();
    let sigma = k.depletion_variance().sqrt();
    let thresholds: Vec<(f64, f64)> = if cfg.tails.thresholds.is_empty() {
        DEFAULT_SIGMA_MULTIPLES.iter().map(|&m| (mu + m * sigma, m)).collect()
    } else {
        cfg.tails
            .thresholds
            .iter()
            .map(|&n| (n, if sigma > 0.0 { (n - mu) / sigma } else { f64::NAN }))
            .collect()
    };
    let opts = TailOptions { form: cfg.tails.form, ..TailOptions::default() };
    run.doc.meta("exponent_form", enum_name(&cfg.tails.form));
    let mut t = Table::new(
        "bounds",
        &[
            "n",
            "sigma_multiple",
            "lambda_star",
            "exponent",
            "bound",
            "binding",
            "quadratic_lambda_star",
            "quadratic_exponent",
            "quadratic_bound",
            "quadratic_clipped",
        ],
    );
    for (n, multiple) in thresholds {
        let c = chernoff_bound_with(&k, n, &opts)?;
        let mut row = vec![
            n.into(),
            multiple.into(),
            c.lambda_star.into(),
            c.exponent.into(),
            c.bound.into(),
            enum_name(&c.binding).into(),
        ];
        if n >= mu {
            let q = quadratic_bound_report(&k, n)?;
            row.extend([q.lambda_star.into(), q.exponent.into(), q.bound.into(), q.clipped.into()]);
        } else {
            row.extend([f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), Cell::Text(String::new())]);
        }
        t.push(row);
    }
    run.doc.tables.push(t);
    if k.depletion_variance() > 0.0 {
        let fourth = cumulants(&k, 4)?.central(4);
        let w = nonconcentration_witness(&k, fourth)?;
        let mut wt = Table::new("witness", &["n", "m", "epsilon", "second_moment", "fourth_moment", "printed_fourth_moment"]);
        wt.push(vec![
            w.n.into(),
            w.m.into(),
            w.epsilon.into(),
            w.second_moment.into(),
            w.fourth_moment.into(),
            w.printed_fourth_moment.into(),
        ]);
        run.doc.tables.push(wt);
    } else {
        run.doc.warn("sigma^2 = 0, no non-concentration witness");
    }
    Ok(run.finish())
}

/// Observable on `lattice` as configured; `None` when none is configured.
fn build_observable(cfg: &RunConfig, lattice: &Lattice) -> CliResult<Option<ObservableKernel>> {
    Ok(match &cfg.observable {
        ObservableSpec::None => None,
        ObservableSpec::Identity => Some(ObservableKernel::identity(lattice)),
        ObservableSpec::Csv { path } => {
            let f = std::fs::File::open(path)
                .map_err(|e| CliError::Config(format!("cannot open observable {}: {e}", path.display())))?;
            Some(ObservableKernel::from_csv(lattice, std::io::BufReader::new(f))?)
        }
        ObservableSpec::Random { seed, pairs } => {
            Some(ObservableKernel::random(lattice, *seed, (*pairs).min(lattice.pairs().len()))?)
        }
    })
}

fn solve_options(cfg: &RunConfig) -> SolveOptions {
    SolveOptions { form: cfg.kernel_form, ..SolveOptions::default() }
}

pub fn cmd_observable(cfg: &RunConfig) -> CliResult<Report> {
    let mut run = Run::new(cfg, Command::Observable);
    let k = build_kernel(cfg)?;
    kernel_meta(&mut run, &k);
    if k.len() > OBSERVABLE_MODE_CAP {
        return Err(CliError::Config(format!(
            "observable solver supports at most {OBSERVABLE_MODE_CAP} modes, lattice has {}",
            k.len()
        )));
    }
    let obs = build_observable(cfg, k.lattice())?
        .ok_or_else(|| CliError::Config("observable command needs an observable".into()))?;
    let solve = solve_options(cfg);
    let domain = certified_domain(&k, &obs, &solve)?;
    run.doc.meta("certified_domain", Cell::from(domain).render());
    let grid = run.grid(domain, CLIP_FRACTION, "certified domain")?;
    let opts = GeneralOptions { solve, method: SolveMethod::Neumann, domain: Some(domain) };
    let identity = matches!(cfg.observable, ObservableSpec::Identity);
    let mut t = Table::new(
        "observable",
        &[
            "lambda",
            "value",
            "imag",
            "mean",
            "domain",
            "quadrature_error",
            "nodes",
            "max_residual",
            "max_symmetry_residual",
            "max_norm_bound",
            "reference",
            "reference_diff",
        ],
    );
    let mut worst_sym = 0.0f64;
    for lambda in grid {
        let s = log_mgf_general(&k, &obs, lambda, &cfg.quadrature, &opts)?;
        run.check(|| format!("fixed-point residual at lambda = {lambda}"), s.max_residual, cfg.tolerances.solver_residual);
        let (reference, diff) = if identity {
            let r = log_mgf_closed(&k, lambda)?.value;
            let d = (s.value - r).abs();
            run.check(|| format!("identity observable against genfun at lambda = {lambda}"), d, cfg.tolerances.genfun);
            (r, d)
        } else {
            (f64::NAN, f64::NAN)
        };
        worst_sym = worst_sym.max(s.max_symmetry_residual);
        t.push(vec![
            lambda.into(),
            s.value.into(),
            s.imag.into(),
            s.mean.into(),
            s.domain.into(),
            s.error_estimate.into(),
            s.nodes.into(),
            s.max_residual.into(),
            s.max_symmetry_residual.into(),
            s.max_norm_bound.into(),
            reference.into(),
            diff.into(),
        ]);
    }
    if worst_sym > cfg.tolerances.solver_residual {
        run.doc.warn(format!("pointwise symmetry residual reaches {worst_sym:e} (reported, not enforced)"));
    }
    run.doc.tables.push(t);
    Ok(run.finish())
}

/// Lattice made of the `pairs` pairs of `k` with the largest `|ν|`, and the
/// kernel on it carrying the same angles.
pub fn oracle_kernel(k: &SpectrumKernel, pairs: usize) -> CliResult<SpectrumKernel> {
    let lat = k.lattice();
    if pairs == 0 || pairs > bose_genfun_core::fockoracle::MAX_PAIRS || pairs > lat.pairs().len() {
        return Err(CliError::Config(format!(
            "oracle pairs must be between 1 and {}",
            bose_genfun_core::fockoracle::MAX_PAIRS.min(lat.pairs().len())
        )));
    }
    let mut order: Vec<usize> = (0..lat.pairs().len()).collect();
    order.sort_by(|&x, &y| {
        let (nx, ny) = (k.nu()[lat.pairs()[x].0].abs(), k.nu()[lat.pairs()[y].0].abs());
        ny.total_cmp(&nx).then(x.cmp(&y))
    });
    let reps: Vec<_> = order[..pairs].iter().map(|&i| lat.vectors()[lat.pairs()[i].0]).collect();
    let sub = Lattice::from_pair_representatives(&reps)?;
    let nus: Vec<f64> = sub
        .pairs()
        .iter()
        .map(|&(i, _)| k.nu()[lat.index_of(sub.vectors()[i]).expect("sub-lattice vector in lattice")])
        .collect();
    Ok(SpectrumKernel::from_pair_nu(sub, &nus)?)
}

pub fn cmd_oracle(cfg: &RunConfig) -> CliResult<Report> {
    let mut run = Run::new(cfg, Command::Oracle);
    let spec = cfg.oracle.ok_or_else(|| CliError::Config("oracle command needs an oracle section".into()))?;
    let main = build_kernel(cfg)?;
    kernel_meta(&mut run, &main);
    let k = oracle_kernel(&main, spec.pairs)?;
    let lat = k.lattice().clone();
    let modes = fock_modes(&lat, spec.pairs)?;
    let nus = k.nu_by_pair();
    let space = FockSpace::build(spec.pairs, spec.n_max)?;
    let defect_space = FockSpace::build(1, spec.defects_n_max)?;
    run.doc.meta("oracle_pairs", spec.pairs);
    run.doc.meta("oracle_n_max", spec.n_max);
    run.doc.meta("oracle_defects_n_max", spec.defects_n_max);
    run.doc.meta("oracle_dim", space.dim());
    let vecs: Vec<String> = modes.iter().map(|&m| format!("{:?}", lat.vectors()[m])).collect();
    run.doc.meta("oracle_modes", vecs.join(" "));
    let nu_txt: Vec<String> = nus.iter().map(|&x| Cell::from(x).render()).collect();
    run.doc.meta("oracle_nu", nu_txt.join(" "));
    let tol = cfg.tolerances;

    let grid = run.grid(k.lambda0(), 1.0, "domain (-lambda0, lambda0)")?;
    let ident = CMat::identity(modes.len(), modes.len());
    let mut t = Table::new(
        "mgf",
        &["lambda", "oracle_log", "closed", "quadrature", "abs_diff", "quadrature_abs_diff", "truncation"],
    );
    for lambda in grid {
        let closed = log_mgf_closed(&k, lambda)?.value;
        let quad = log_mgf(&k, lambda, &cfg.quadrature)?.value;
        match mgf_oracle(&space, &nus, &ident, lambda) {
            Ok(v) => {
                let o = v.value.ln();
                let (d, dq) = ((o - closed).abs(), (o - quad).abs());
                run.check(|| format!("oracle mgf at lambda = {lambda}"), d.max(dq), tol.oracle_mgf);
                t.push(vec![lambda.into(), o.into(), closed.into(), quad.into(), d.into(), dq.into(), v.truncation.into()]);
            }
            Err(CoreError::Truncation { estimate, threshold }) => {
                run.breaches.push(format!("oracle truncation at lambda = {lambda}: {estimate:e} > {threshold:e}"));
                let nan = f64::NAN;
                t.push(vec![lambda.into(), nan.into(), closed.into(), quad.into(), nan.into(), nan.into(), estimate.into()]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    run.doc.tables.push(t);

    let set = cumulants(&k, 4)?;
    let fourth = fourth_moment_report(&k)?;
    let mut mt = Table::new("moments", &["quantity", "oracle", "cumulants", "abs_diff"]);
    match depletion_distribution(&nus, spec.n_max) {
        Ok(law) => {
            let central = distribution_central_moments(&law, 4);
            let mean = bose_genfun_core::fockoracle::distribution_moments(&law, 1)[1];
            let rows = [
                ("mean", mean, set.kappa(1)),
                ("central_2", central[2], set.central(2)),
                ("central_3", central[3], set.central(3)),
                ("central_4", central[4], set.central(4)),
            ];
            for (name, o, c) in rows {
                let d = (o - c).abs();
                run.check(|| format!("oracle {name}"), d, tol.oracle_mgf * c.abs().max(1.0));
                mt.push(vec![name.into(), o.into(), c.into(), d.into()]);
            }
        }
        Err(CoreError::Truncation { estimate, threshold }) => {
            run.breaches.push(format!("oracle law truncation: {estimate:e} > {threshold:e}"));
        }
        Err(e) => return Err(e.into()),
    }
    mt.push(vec![
        "central_4_printed_form".into(),
        f64::NAN.into(),
        fourth.printed_form.into(),
        fourth.discrepancy.abs().into(),
    ]);
    run.doc.tables.push(mt);

    let obs = build_observable(cfg, &lat)?;
    if let Some(o) = &obs {
        let solve = solve_options(cfg);
        let domain = certified_domain(&k, o, &solve)?;
        run.doc.meta("certified_domain", Cell::from(domain).render());
        let grid = run.grid(domain, ORACLE_OBSERVABLE_FRACTION, "oracle comparison range")?;
        let small = o.restrict(&modes);
        let neumann = GeneralOptions { solve, method: SolveMethod::Neumann, domain: Some(domain) };
        let dense = GeneralOptions { method: SolveMethod::Dense, ..neumann };
        let mut ot = Table::new(
            "observable_mgf",
            &["lambda", "oracle_log", "neumann", "dense", "abs_diff", "dense_abs_diff", "oracle_imag", "truncation", "max_residual"],
        );
        for lambda in grid {
            let sn = log_mgf_general(&k, o, lambda, &cfg.quadrature, &neumann)?;
            let sd = log_mgf_general(&k, o, lambda, &cfg.quadrature, &dense)?;
            let dd = (sn.value - sd.value).abs();
            run.check(|| format!("neumann against dense at lambda = {lambda}"), dd, tol.solver_residual);
            match mgf_oracle(&space, &nus, &small, lambda) {
                Ok(v) => {
                    let ol = v.value.ln();
                    let d = (ol - sn.value).abs();
                    run.check(|| format!("oracle observable at lambda = {lambda}"), d, tol.oracle_observable);
                    ot.push(vec![
                        lambda.into(),
                        ol.into(),
                        sn.value.into(),
                        sd.value.into(),
                        d.into(),
                        dd.into(),
                        v.imag.into(),
                        v.truncation.into(),
                        sn.max_residual.into(),
                    ]);
                }
                Err(CoreError::Truncation { estimate, threshold }) => {
                    run.breaches.push(format!("oracle truncation at lambda = {lambda}: {estimate:e} > {threshold:e}"));
                    let nan = f64::NAN;
                    ot.push(vec![
                        lambda.into(),
                        nan.into(),
                        sn.value.into(),
                        sd.value.into(),
                        nan.into(),
                        dd.into(),
                        nan.into(),
                        estimate.into(),
                        sn.max_residual.into(),
                    ]);
                }
                Err(e) => return Err(e.into()),
            }
        }
        run.doc.tables.push(ot);
    }

    // Both identities act pair by pair, so each pair is checked on its own
    // one-pair space with the block of O on that pair.
    let bch_o = match &obs {
        Some(o) => o.matrix().clone(),
        None => ObservableKernel::random(&lat, cfg.seed(), spec.pairs)?.matrix().clone(),
    };
    let mut dt = Table::new("defects", &["check", "mode", "value", "tolerance", "pass"]);
    for (pair, &nu) in nus.iter().enumerate() {
        let block = unit_block(restrict_matrix(&bch_o, &modes[2 * pair..2 * pair + 2]));
        for local in 0..2 {
            let mode = 2 * pair + local;
            let d = bch_check(&defect_space, &block, local)?;
            let ok = run.check(|| format!("bch defect on mode {mode}"), d, tol.bch);
            dt.push(vec!["bch".into(), mode.into(), d.into(), tol.bch.into(), ok.into()]);
        }
        for local in 0..2 {
            let mode = 2 * pair + local;
            let d = bogoliubov_action_defect(&defect_space, &[nu], local)?;
            let ok = run.check(|| format!("bogoliubov action defect on mode {mode}"), d, tol.bogoliubov);
            dt.push(vec!["bogoliubov_action".into(), mode.into(), d.into(), tol.bogoliubov.into(), ok.into()]);
        }
    }
    let qf = quasi_free_vector(&space, &nus)?;
    let norm_gap = (qf.vector.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs();
    let ok = run.check(|| "quasi-free vector normalization".into(), norm_gap, tol.oracle_mgf);
    dt.push(vec!["normalization".into(), Cell::Text(String::new()), norm_gap.into(), tol.oracle_mgf.into(), ok.into()]);
    dt.push(vec!["truncation".into(), Cell::Text(String::new()), qf.truncation.into(), f64::NAN.into(), true.into()]);
    run.doc.tables.push(dt);
    Ok(run.finish())
}

/// Rescales a Hermitian block to spectral norm at most 1.
fn unit_block(m: CMat) -> CMat {
    let norm = m.singular_values().iter().fold(0.0f64, |a, &b| a.max(b));
    if norm > 1.0 {
        m * bose_genfun_core::linalg::c64(1.0 / norm, 0.0)
    } else {
        m
    }
}

fn restrict_matrix(m: &CMat, modes: &[usize]) -> CMat {
    CMat::from_fn(modes.len(), modes.len(), |i, j| m[(modes[i], modes[j])])
}
