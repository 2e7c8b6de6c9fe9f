use std::sync::Arc;

use serde::Serialize;
use waveguide_spectra::cross_section::{
    assemble_neumann_forms, build_mesh, coupling_constants, coupling_matrices, solve_transverse_modes,
    CouplingConstants, TransverseModeSet,
};
use waveguide_spectra::effective_1d::{assemble_interval_operator, spectrum_1d};
use waveguide_spectra::floquet::{
    assemble_fiber, band_structure_with, bands_and_gaps_with, borg_diagnostic, gap_asymptotics,
    scaled_gap_study, BandOptions, BandStructure, GapReport,
};
use waveguide_spectra::full_waveguide::{
    convergence_study, fiber_convergence_study, gap_persistence_check, validate_change_of_variables,
    ConvergenceReport, FullModelConfig, ModelInputs, Persistence,
};
use waveguide_spectra::twist::{
    effective_potential, make_twist, w_potential, Domain, SampledPotential, TwistProfile, UniformGrid,
};

use crate::config::{Resolved, Task};
use crate::output::{Artifact, Table};
use crate::Failure;

type Out = Result<Vec<Artifact>, Failure>;

/// Runs the task and returns its report files, without touching the disk.
pub fn execute(r: &Resolved) -> Out {
    match r.task {
        Task::Modes => modes(r),
        Task::Coupling => coupling(r),
        Task::Potential => potential(r),
        Task::Spectrum1d => spectrum(r),
        Task::Bands => bands(r),
        Task::Gaps => gaps(r),
        Task::GapAsymptotics => asymptotics(r),
        Task::Converge => converge(r),
        Task::FiberConverge => fiber_converge(r),
        Task::Persistence => persistence(r),
        Task::Validate => validate(r),
    }
}

fn section(r: &Resolved, count: usize) -> Result<TransverseModeSet, Failure> {
    let forms = assemble_neumann_forms(build_mesh(&r.geometry, r.h)?)?;
    Ok(solve_transverse_modes(Arc::new(forms), count, r.degeneracy_tol)?)
}

fn profile(r: &Resolved) -> Result<TwistProfile, Failure> {
    let spec = r
        .twist
        .as_ref()
        .ok_or_else(|| Failure::config("task needs a twist".into()))?;
    Ok(make_twist(spec)?)
}

fn grid(r: &Resolved, p: &TwistProfile) -> Result<UniformGrid, Failure> {
    Ok(match p.domain() {
        Domain::Periodic { period } => UniformGrid::periodic(period, r.nodes)?,
        Domain::Interval { a, b } => UniformGrid::interval(a, b, r.nodes)?,
    })
}

struct Effective {
    profile: TwistProfile,
    constants: CouplingConstants,
    v: SampledPotential,
}

fn effective(r: &Resolved) -> Result<Effective, Failure> {
    let modes = section(r, (r.n + 1).max(2))?;
    let constants = coupling_constants(&modes, r.n, r.allow_degenerate)?;
    let profile = profile(r)?;
    let v = effective_potential(&profile, constants.c1, constants.c2, &grid(r, &profile)?)?;
    Ok(Effective {
        profile,
        constants,
        v,
    })
}

fn modes(r: &Resolved) -> Out {
    let modes = section(r, r.cutoff)?;
    let mut t = Table::new("modes", &["n", "lambda", "degenerate"]);
    for n in 1..=modes.len() {
        t.push(vec![n.into(), modes.lambda(n).into(), modes.is_degenerate(n).into()]);
    }
    Ok(vec![Artifact::table(&t, r.format)])
}

fn coupling(r: &Resolved) -> Out {
    let modes = section(r, r.cutoff)?;
    let c = coupling_constants(&modes, r.n, r.allow_degenerate)?;
    let mut t = Table::new("coupling", &["n", "c1", "c2", "c2_boundary"]);
    t.push(vec![c.n.into(), c.c1.into(), c.c2.into(), c.c2_boundary.into()]);
    let d = coupling_matrices(&modes, r.cutoff)?;
    let mut m = Table::new("coupling_matrices", &["m", "k", "a", "b", "boundary_gram"]);
    for (i, &mi) in d.modes.iter().enumerate() {
        for (k, &mk) in d.modes.iter().enumerate() {
            m.push(vec![
                mi.into(),
                mk.into(),
                d.a[i][k].into(),
                d.b[i][k].into(),
                d.boundary_gram[i][k].into(),
            ]);
        }
    }
    Ok(vec![Artifact::table(&t, r.format), Artifact::table(&m, r.format)])
}

fn potential(r: &Resolved) -> Out {
    let e = effective(r)?;
    let w = w_potential(&e.profile, e.constants.c1, &e.v.grid)?;
    let mut t = Table::new("potential", &["s", "v", "w"]);
    for (i, s) in e.v.grid.points().into_iter().enumerate() {
        t.push(vec![s.into(), e.v.values[i].into(), w.values[i].into()]);
    }
    Ok(vec![Artifact::table(&t, r.format)])
}

fn spectrum(r: &Resolved) -> Out {
    let e = effective(r)?;
    let op = assemble_interval_operator(&e.v, &e.profile, e.constants.c2, r.nodes)?;
    let s = spectrum_1d(&op, r.jmax)?;
    let mut t = Table::new("spectrum", &["j", "mu"]);
    for (j, mu) in s.values.iter().enumerate() {
        t.push(vec![(j + 1).into(), (*mu).into()]);
    }
    Ok(vec![Artifact::table(&t, r.format)])
}

fn band_run(r: &Resolved, v: &SampledPotential, jmax: usize) -> Result<(BandStructure, GapReport), Failure> {
    let bs = band_structure_with(
        v,
        &BandOptions {
            theta_count: r.theta_count,
            jmax,
            nodes: None,
        },
    )?;
    let report = bands_and_gaps_with(&bs, r.gap_tol);
    Ok((bs, report))
}

fn gap_table(report: &GapReport) -> Table {
    let mut t = Table::new("gaps", &["j", "lower", "upper", "width"]);
    for g in report.open_gaps() {
        t.push(vec![g.j.into(), g.lower.into(), g.upper.into(), g.width.into()]);
    }
    t
}

#[derive(Serialize)]
struct BandDiagnostics<'a> {
    symmetry_defect: f64,
    violations: &'a [String],
    warnings: &'a [String],
    spreads: Vec<f64>,
    constant_bands: Vec<usize>,
    max_band_overlap: f64,
}

fn bands(r: &Resolved) -> Out {
    let e = effective(r)?;
    let (bs, report) = band_run(r, &e.v, r.jmax)?;
    let mut t = Table::new("bands", &["theta", "j", "k"]);
    for (ti, &theta) in bs.thetas.iter().enumerate() {
        for j in 0..bs.jmax {
            t.push(vec![theta.into(), (j + 1).into(), bs.k[j][ti].into()]);
        }
    }
    let diag = BandDiagnostics {
        symmetry_defect: bs.symmetry_defect,
        violations: &bs.violations,
        warnings: &bs.warnings,
        spreads: bs.spreads(),
        constant_bands: waveguide_spectra::floquet::constant_bands(&bs, 1e-8),
        max_band_overlap: report.max_overlap(),
    };
    Ok(vec![
        Artifact::table(&t, r.format),
        Artifact::table(&gap_table(&report), r.format),
        Artifact::json("band_diagnostics", &diag),
    ])
}

fn gaps(r: &Resolved) -> Out {
    let e = effective(r)?;
    let j = r.gap_index.unwrap_or(1);
    let jmax = r.jmax.max(j + 1);
    let (_, report) = band_run(r, &e.v, jmax)?;
    let borg = borg_diagnostic(&e.v, r.borg_tol, jmax)?;
    let study = scaled_gap_study(&e.profile, e.constants.c1, e.constants.c2, &r.gammas, j, jmax)?;
    let mut s = Table::new(
        "scaled",
        &["gamma", "lower", "upper", "width", "width_s", "endpoint_difference", "predicted_s_width"],
    );
    for row in &study.rows {
        s.push(vec![
            row.gamma.into(),
            row.gap_t.lower.into(),
            row.gap_t.upper.into(),
            row.gap_t.width.into(),
            row.gap_s.width.into(),
            row.endpoint_difference.into(),
            row.predicted_s_width.into(),
        ]);
    }
    Ok(vec![
        Artifact::table(&gap_table(&report), r.format),
        Artifact::table(&s, r.format),
        Artifact::json("borg", &borg),
    ])
}

fn asymptotics(r: &Resolved) -> Out {
    let e = effective(r)?;
    let w = w_potential(&e.profile, e.constants.c1, &e.v.grid)?;
    let a = gap_asymptotics(&w, r.gap_index.unwrap_or(1), &r.betas)?;
    let mut t = Table::new("asymptotics", &["beta", "delta", "predicted"]);
    for (b, d) in a.betas.iter().zip(&a.deltas) {
        t.push(vec![(*b).into(), (*d).into(), (a.predicted_slope * b).into()]);
    }
    Ok(vec![Artifact::table(&t, r.format), Artifact::json("asymptotics_fit", &a)])
}

fn converge_table(name: &'static str, rep: &ConvergenceReport) -> Table {
    let mut t = Table::new(name, &["epsilon", "j", "shifted_value", "oracle", "abs_err"]);
    for (e, &eps) in rep.epsilons.iter().enumerate() {
        for (j, &x) in rep.shifted[e].iter().enumerate() {
            t.push(vec![eps.into(), (j + 1).into(), x.into(), rep.oracle[j].into(), rep.abs_errors[e][j].into()]);
        }
    }
    t
}

fn full_inputs(r: &Resolved) -> Result<(TransverseModeSet, waveguide_spectra::cross_section::CouplingData), Failure> {
    let modes = section(r, r.cutoff)?;
    let coupling = coupling_matrices(&modes, r.cutoff)?;
    Ok((modes, coupling))
}

fn full_config(r: &Resolved, base: FullModelConfig) -> FullModelConfig {
    FullModelConfig {
        allow_degenerate: r.allow_degenerate,
        ..base.with_cutoff(r.cutoff).with_nodes(r.nodes)
    }
}

fn converge(r: &Resolved) -> Out {
    let e = effective(r)?;
    let op = assemble_interval_operator(&e.v, &e.profile, e.constants.c2, r.nodes)?;
    let oracle = spectrum_1d(&op, r.jmax)?;
    let (a, b) = e.profile.extent();
    let (modes, coupling) = full_inputs(r)?;
    let cfg = full_config(r, FullModelConfig::interval(r.n, r.epsilons[0], a, b));
    let inputs = ModelInputs {
        modes: &modes,
        coupling: &coupling,
        profile: &e.profile,
    };
    let rep = convergence_study(&cfg, inputs, &r.epsilons, &oracle, r.jmax)?;
    Ok(vec![
        Artifact::table(&converge_table("converge", &rep), r.format),
        Artifact::json("converge_summary", &rep),
    ])
}

fn fiber_converge(r: &Resolved) -> Out {
    let e = effective(r)?;
    let period = e.profile.period().expect("checked periodic");
    let oracle = assemble_fiber(&e.v, r.theta, r.nodes)?.eigenvalues(r.jmax)?;
    let (modes, coupling) = full_inputs(r)?;
    let cfg = full_config(r, FullModelConfig::fiber(r.n, r.epsilons[0], r.theta, period));
    let inputs = ModelInputs {
        modes: &modes,
        coupling: &coupling,
        profile: &e.profile,
    };
    let rep = fiber_convergence_study(&cfg, inputs, &r.epsilons, &oracle, r.jmax)?;
    Ok(vec![
        Artifact::table(&converge_table("fiber_converge", &rep), r.format),
        Artifact::json("fiber_converge_summary", &rep),
    ])
}

fn persistence(r: &Resolved) -> Out {
    let e = effective(r)?;
    let period = e.profile.period().expect("checked periodic");
    let jmax = r.jmax.max(r.gap_index.map_or(2, |j| j + 1));
    let (_, report) = band_run(r, &e.v, jmax)?;
    let gap = match r.gap_index {
        Some(j) => report.gaps[j - 1],
        None => match report.open_gaps().next() {
            Some(g) => *g,
            None => report.gaps[0],
        },
    };
    let (modes, coupling) = full_inputs(r)?;
    let cfg = full_config(r, FullModelConfig::fiber(r.n, r.epsilons[0], 0.0, period));
    let inputs = ModelInputs {
        modes: &modes,
        coupling: &coupling,
        profile: &e.profile,
    };
    let runs: Vec<Persistence> = r
        .epsilons
        .iter()
        .map(|&eps| gap_persistence_check(&cfg, inputs, eps, &gap, r.theta_count))
        .collect::<Result<_, _>>()?;
    let mut t = Table::new("persistence", &["epsilon", "j", "margin", "half_gap"]);
    for p in &runs {
        if let Persistence::Checked {
            j,
            epsilon,
            margin,
            half_gap,
        } = *p
        {
            t.push(vec![epsilon.into(), j.into(), margin.into(), half_gap.into()]);
        }
    }
    Ok(vec![Artifact::table(&t, r.format), Artifact::json("persistence_summary", &runs)])
}

fn validate(r: &Resolved) -> Out {
    let p = profile(r)?;
    let mesh = build_mesh(&r.geometry, r.h)?;
    let (a, b) = p.extent();
    let count = r.sample_points;
    let stride = (mesh.vertices.len() / count).max(1);
    let points: Vec<(f64, [f64; 2])> = (0..count)
        .map(|i| {
            let s = a + (i as f64 + 0.5) / count as f64 * (b - a);
            (s, mesh.vertices[(i * stride) % mesh.vertices.len()])
        })
        .collect();
    let rep = validate_change_of_variables(&p, r.epsilon, &points);
    Ok(vec![Artifact::json("validate", &rep)])
}
