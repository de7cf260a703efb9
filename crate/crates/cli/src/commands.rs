use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use multiwell::continuation::{median_singular_value, Termination};
use multiwell::dynamics::IntegrateOptions;
use multiwell::io::{
    format_number, write_bif_table, write_branch, write_eigenfunctions, write_events_json, write_solutions,
    write_spectrum, write_table, write_trajectory, EigenfunctionTable,
};
use multiwell::lattice::square_adjacency;
use multiwell::linear1d::{
    compare_lemma2, dirichlet_ground_state, hopping_beta_formula, nwell_spectrum_direct, project_onto_wells,
    Well1D,
};
use multiwell::stationary::{newton_solve_with, symmetric_folds, NewtonOptions};
use multiwell::{
    build_graph_coupling, build_line_coupling, closed_form_spectrum, continue_branch, detect_folds,
    detect_pitchfork_and_classify, diagonalize_symmetric, enumerate_solutions, ground_state_bifurcation_table,
    sweep_symmetric, AmplitudeSolution64, BifurcationEvent, Branch64, Error, ModeState64, ModelParams64,
    NModeSystem64, Result, SeedStrategy, StepControl, SymmetricFamily,
};
use rayon::prelude::*;

use crate::config::{CouplingKind, InitialState, RunConfig};

/// Shared context of one invocation: resolved config and output directory.
pub struct Run {
    pub config: RunConfig,
    pub out: PathBuf,
    command: &'static str,
}

impl Run {
    pub fn new(config: RunConfig, command: &'static str) -> Result<Self> {
        let out = config.output_path.clone();
        std::fs::create_dir_all(&out)?;
        Ok(Self { config, out, command })
    }

    fn comments(&self) -> Vec<String> {
        vec![format!("multiwell {}", self.command), format!("config-sha256: {}", self.config.digest())]
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    fn finish(&self, files: &[String]) {
        for f in files {
            eprintln!("wrote {}", self.out.join(f).display());
        }
    }
}

fn flush(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

pub fn spectrum(run: &Run) -> Result<()> {
    let m = &run.config.model;
    let params = m.params()?;
    let mut w = run.create("spectrum.csv")?;
    match run.config.spectrum.coupling {
        CouplingKind::Line => {
            let closed = closed_form_spectrum(&params)?;
            let numeric = diagonalize_symmetric(&build_line_coupling(&params)?)?;
            write_spectrum(&mut w, &run.comments(), &closed, &numeric)?;
        }
        CouplingKind::Graph => {
            let adj = run.config.spectrum.adjacency.clone().unwrap_or_else(square_adjacency);
            let basis = diagonalize_symmetric(&build_graph_coupling(&adj, &params)?)?;
            let n = basis.n();
            let header: Vec<String> = ["j".to_string(), "mu_numeric".to_string()]
                .into_iter()
                .chain((1..=n).map(|k| format!("alpha_{k}")))
                .collect();
            let rows: Vec<Vec<String>> = (0..n)
                .map(|j| {
                    let mut r = vec![(j + 1).to_string(), format_number(basis.mu[j])];
                    r.extend(basis.mode(j).iter().map(|v| format_number(*v)));
                    r
                })
                .collect();
            write_table(&mut w, &run.comments(), &header, &rows)?;
        }
    }
    flush(w)?;
    run.finish(&["spectrum.csv".into()]);
    Ok(())
}

/// Clamps `q` this far from 0, 1/4 and 1/2 where the family is singular.
const Q_MARGIN: f64 = 1e-4;

fn q_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo + Q_MARGIN, hi - Q_MARGIN);
    (0..points).map(|i| a + (b - a) * i as f64 / (points - 1) as f64).collect()
}

/// Named branch files and fold rows of one `(sigma, family)` job.
type SweepOutput = (Vec<(String, Branch64)>, Vec<Vec<String>>);

pub fn stationary_sweep(run: &Run) -> Result<()> {
    let cfg = &run.config.sweep;
    if cfg.points < 2 {
        return Err(Error::Parameter(format!("sweep needs at least 2 points, got {}", cfg.points)));
    }
    let halves = [("lower", q_grid(0.0, 0.25, cfg.points)), ("upper", q_grid(0.25, 0.5, cfg.points))];
    let jobs: Vec<(f64, SymmetricFamily)> =
        cfg.sigmas.iter().flat_map(|&s| SymmetricFamily::all().into_iter().map(move |f| (s, f))).collect();

    let results: Vec<Result<SweepOutput>> = jobs
        .par_iter()
        .map(|&(sigma, fam)| {
            let mut branches = Vec::new();
            for (side, grid) in &halves {
                let b = sweep_symmetric(grid, sigma, fam)?;
                branches.push((format!("sweep_s{}_f{}{}_{side}.csv", format_number(sigma), fam.j, fam.l), b));
            }
            let folds = symmetric_folds(sigma, fam)?
                .into_iter()
                .map(|f| {
                    vec![
                        format_number(sigma),
                        fam.label(),
                        format_number(f.q),
                        format_number(f.eta),
                        format_number(f.omega),
                    ]
                })
                .collect();
            Ok((branches, folds))
        })
        .collect();

    let mut files = Vec::new();
    let mut fold_rows = Vec::new();
    for r in results {
        let (branches, folds) = r?;
        for (name, b) in branches {
            let mut w = run.create(&name)?;
            write_branch(&mut w, &run.comments(), &b)?;
            flush(w)?;
            files.push(name);
        }
        fold_rows.extend(folds);
    }
    let header: Vec<String> = ["sigma", "family", "q", "eta", "Omega"].iter().map(|s| s.to_string()).collect();
    let mut w = run.create("folds.csv")?;
    write_table(&mut w, &run.comments(), &header, &fold_rows)?;
    flush(w)?;
    files.push("folds.csv".into());
    run.finish(&files);
    Ok(())
}

/// Linear mode `j` (0-based) at `eta = 0`, polished by Newton.
fn linear_seed(n: usize, sigma: f64, j: usize) -> Result<AmplitudeSolution64> {
    let basis = closed_form_spectrum(&ModelParams64::reduced(n, sigma, 0.0)?)?;
    let guess = AmplitudeSolution64::guess(basis.mode(j).to_vec(), basis.mu[j], 0.0, sigma);
    // interior nodes of a linear mode are legitimate here
    let opts = NewtonOptions { check_admissible: false, ..NewtonOptions::default() };
    newton_solve_with(&guess, &opts)
}

fn analyze(mut branch: Branch64, label: String) -> Branch64 {
    branch.family_label = label.clone();
    let mut events = detect_folds(&branch);
    events.extend(detect_pitchfork_and_classify(&branch));
    events.sort_by(|a, b| a.eta_c.total_cmp(&b.eta_c));
    for e in events.iter_mut() {
        e.family_label = label.clone();
    }
    branch.events = events;
    branch
}

fn termination_notes(b: &Branch64) -> Vec<String> {
    let mut notes = vec![format!("family: {}", b.family_label)];
    for t in &b.termination {
        if let Termination::StepTooSmall { eta, reason } = t {
            notes.push(format!("truncated near eta = {}: {reason}", format_number(*eta)));
        }
    }
    notes.push(format!("median singular value: {}", format_number(median_singular_value(b))));
    notes
}

pub fn branches(run: &Run) -> Result<()> {
    let m = &run.config.model;
    let cfg = &run.config.branches;
    if m.n < 2 {
        return Err(Error::Parameter(format!("well count N must be >= 2, got {}", m.n)));
    }
    let modes: Vec<usize> = if cfg.modes.is_empty() { (1..=m.n).collect() } else { cfg.modes.clone() };
    if let Some(bad) = modes.iter().find(|&&j| j == 0 || j > m.n) {
        return Err(Error::Parameter(format!("mode {bad} outside 1..={}", m.n)));
    }
    let control = StepControl { max_eta_step: cfg.max_eta_step, direction: run.config.branch_direction(), ..StepControl::default() };
    let range = (cfg.eta_min, cfg.eta_max);
    if !(range.0 <= 0.0 && 0.0 <= range.1) {
        return Err(Error::Parameter("branch range must contain eta = 0".into()));
    }

    let traced: Vec<Result<Vec<(String, Branch64)>>> = modes
        .par_iter()
        .map(|&j| {
            let seed = linear_seed(m.n, m.sigma, j - 1)?;
            let main = analyze(continue_branch(&seed, range, &control)?, format!("linear mode {j}"));
            let mut out = vec![(format!("branch_mode{j}.csv"), main.clone())];
            if cfg.follow_pitchforks {
                let forks: Vec<&BifurcationEvent<f64>> =
                    main.events.iter().filter(|e| e.kind == multiwell::EventKind::Pitchfork).collect();
                for (k, e) in forks.into_iter().enumerate() {
                    let label = format!("asymmetric from mode {j} at eta {}", format_number(e.eta_c));
                    // an emanating branch that fails to continue is reported, not fatal
                    match continue_branch(&e.seed, range, &control) {
                        Ok(b) => {
                            let mut b = analyze(b, label);
                            b.events.retain(|ev| ev.kind == multiwell::EventKind::Fold);
                            out.push((format!("branch_mode{j}_pf{}.csv", k + 1), b));
                        }
                        Err(err) => eprintln!("warning: {label}: {err}"),
                    }
                }
            }
            Ok(out)
        })
        .collect();

    let mut files = Vec::new();
    let mut events = Vec::new();
    for r in traced {
        for (name, b) in r? {
            let mut comments = run.comments();
            comments.extend(termination_notes(&b));
            let mut w = run.create(&name)?;
            write_branch(&mut w, &comments, &b)?;
            flush(w)?;
            events.extend(b.events.iter().cloned());
            files.push(name);
        }
    }
    let mut w = run.create("events.json")?;
    write_events_json(&mut w, &events)?;
    flush(w)?;
    files.push("events.json".into());
    run.finish(&files);
    Ok(())
}

pub fn census(run: &Run) -> Result<()> {
    let m = &run.config.model;
    let c = &run.config.census;
    let strategy = SeedStrategy {
        linear_continuation: c.linear_continuation,
        anticontinuum: c.anticontinuum,
        symmetric_family: c.symmetric_family,
        random_starts: c.random_starts,
        seed: run.config.seed,
        sign_filter: c.sign_filter.clone(),
    };
    let census = enumerate_solutions(m.eta, m.sigma, m.n, &strategy)?;
    let mut comments = run.comments();
    comments.push(format!("solutions: {}", census.solutions.len()));
    for warning in &census.warnings {
        eprintln!("warning: {warning}");
        comments.push(format!("warning: {warning}"));
    }
    let mut w = run.create("census.csv")?;
    write_solutions(&mut w, &comments, &census.solutions)?;
    flush(w)?;
    run.finish(&["census.csv".into()]);
    Ok(())
}

pub fn bif_table(run: &Run) -> Result<()> {
    let rows = ground_state_bifurcation_table(&run.config.bif_table.n_list, run.config.model.sigma)?;
    let mut w = run.create("bif_table.csv")?;
    write_bif_table(&mut w, &run.comments(), &rows)?;
    flush(w)?;
    run.finish(&["bif_table.csv".into()]);
    Ok(())
}

fn initial_state(run: &Run, system: &NModeSystem64) -> Result<ModeState64> {
    let n = system.n();
    match &run.config.evolve.initial {
        InitialState::Mode(j) => {
            if *j == 0 || *j > n {
                return Err(Error::Parameter(format!("initial mode {j} outside 1..={n}")));
            }
            ModeState64::from_real_normalized(system.basis().mode(j - 1))
        }
        InitialState::Site(k) => {
            if *k == 0 || *k > n {
                return Err(Error::Parameter(format!("initial site {k} outside 1..={n}")));
            }
            let mut a = vec![0.0; n];
            a[k - 1] = 1.0;
            ModeState64::from_real_normalized(&a)
        }
        InitialState::Amplitudes(z) => {
            if z.len() != n {
                return Err(Error::Parameter(format!("{} initial amplitudes for N = {n}", z.len())));
            }
            let norm = z.iter().map(|[re, im]| re * re + im * im).sum::<f64>().sqrt();
            if !norm.is_finite() || norm <= 0.0 {
                return Err(Error::Parameter("initial amplitudes must have finite nonzero norm".into()));
            }
            let d = z.iter().map(|[re, im]| num_complex(*re / norm, *im / norm)).collect();
            Ok(ModeState64::new(d, 0.0))
        }
    }
}

fn num_complex(re: f64, im: f64) -> multiwell::dynamics::Complex<f64> {
    multiwell::dynamics::Complex::new(re, im)
}

pub fn evolve(run: &Run) -> Result<()> {
    let e = &run.config.evolve;
    let system = NModeSystem64::line(run.config.model.params()?)?;
    let initial = initial_state(run, &system)?;
    let traj = system.integrate(&initial, e.t_end, e.dt, IntegrateOptions { stride: e.stride, order: e.order })?;
    let mut comments = run.comments();
    comments.push(format!("max norm drift: {}", format_number(traj.report.max_norm_drift)));
    comments.push(format!("max energy drift: {}", format_number(traj.report.max_energy_drift)));
    let mut w = run.create("trajectory.csv")?;
    write_trajectory(&mut w, &comments, &traj)?;
    flush(w)?;
    run.finish(&["trajectory.csv".into()]);
    Ok(())
}

pub fn linear1d(run: &Run) -> Result<()> {
    let c = &run.config.linear1d;
    let well = Well1D::new(c.depth, c.radius, c.spacing)?;
    let ground = dirichlet_ground_state(&well, c.hbar, well.default_half_width(1), c.n_points)?;
    let hop = hopping_beta_formula(&ground, c.spacing, c.hbar)?;
    let mut notes: Vec<String> = ground.warnings.clone();
    if hop.raw < 0.0 {
        notes.push(format!("raw overlap integral {} is negative; using its magnitude", format_number(hop.raw)));
    }

    let per_n: Vec<Result<_>> = c
        .wells
        .par_iter()
        .map(|&n| {
            let spec = nwell_spectrum_direct(&well, n, c.hbar, well.default_half_width(n), c.n_points)?;
            let fit = compare_lemma2(&spec)?;
            let proj = project_onto_wells(&spec, &ground);
            let closed = closed_form_spectrum(&ModelParams64::reduced(n, 1.0, 0.0)?)?;
            let mut proj_err = 0.0f64;
            for j in 0..n {
                for k in 0..n {
                    proj_err = proj_err.max((proj[(j, k)] - closed.modes[(j, k)]).abs());
                }
            }
            Ok((n, spec, fit, proj_err))
        })
        .collect();

    let mut files = Vec::new();
    let mut rows = Vec::new();
    for r in per_n {
        let (n, spec, fit, proj_err) = r?;
        let x = spec.grid.nodes();
        let table = EigenfunctionTable {
            potential: x.iter().map(|&xi| well.chain_potential(n, xi)).collect(),
            x,
            psi: spec.eigenfunctions.clone(),
        };
        let mut comments = run.comments();
        comments.extend(fit.warnings.iter().map(|w| format!("warning: {w}")));
        let name = format!("eigenfunctions_N{n}.csv");
        let mut w = run.create(&name)?;
        write_eigenfunctions(&mut w, &comments, &table)?;
        flush(w)?;
        files.push(name);
        rows.push(vec![
            n.to_string(),
            format_number(ground.lambda_d),
            format_number(well.harmonic_ground_level(c.hbar)),
            format_number(hop.beta),
            format_number(fit.lambda_d_fit),
            format_number(fit.beta_fit),
            format_number(fit.residual),
            format_number(spec.width()),
            fit.separated.to_string(),
            format_number(proj_err),
            format_number(ground.grid_shift),
        ]);
    }
    let header: Vec<String> = [
        "N",
        "lambda_d",
        "lambda_d_harmonic",
        "beta_formula",
        "lambda_d_fit",
        "beta_fit",
        "fit_residual",
        "cluster_width",
        "separated",
        "projection_error",
        "grid_shift",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut comments = run.comments();
    comments.extend(notes);
    let mut w = run.create("linear1d_summary.csv")?;
    write_table(&mut w, &comments, &header, &rows)?;
    flush(w)?;
    files.push("linear1d_summary.csv".into());
    run.finish(&files);
    Ok(())
}
