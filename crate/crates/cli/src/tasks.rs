use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::DVector;
use rayon::prelude::*;
use serde_json::{json, Value};
use vibronic_core::analytic::{self, ModeKind};
use vibronic_core::bopes::{self, BoSurface};
use vibronic_core::fock::{self, FockOptions};
use vibronic_core::{
    build_molecule, graph_classify, DetuningRule, Error, ModeSelection, Molecule, PotentialModel, Preset, SolveReport,
};

use crate::config::{RunConfig, Task, WignerMode};
use crate::csv::{num, Csv};

const UNSTABLE: &str = "unstable";
const NA: &str = "NA";

pub struct Run {
    pub config: RunConfig,
    pub task: Task,
    pub out: PathBuf,
    pub modes: ModeSelection,
}

/// Files written and task-specific summary for the manifest.
struct Outcome {
    files: Vec<String>,
    summary: Value,
}

pub fn run(r: &Run) -> Result<()> {
    fs::create_dir_all(&r.out).with_context(|| format!("creating {}", r.out.display()))?;
    let outcome = match r.task {
        Task::Graph => graph(r)?,
        Task::GsScanXi | Task::GsScanKappa | Task::GsScanOmega => scan(r)?,
        Task::Wigner => wigner(r)?,
        Task::BopesScan => bopes_scan(r)?,
        Task::Compare => compare(r)?,
    };
    let base = molecule(&r.config, r.modes, None, None)?;
    let critical = analytic::critical_points(base.params.omega, base.couplings.nu).ok();
    let mut resolved = r.config.clone();
    resolved.task = Some(r.task);
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "task": r.task.name(),
        "mode_selection": r.modes,
        "config": resolved,
        "resolved": {
            "params": base.params,
            "couplings": base.couplings,
            "critical_points": critical,
            "nodes": base.graph.len(),
            "modes": base.basis.dim(),
        },
        "outputs": outcome.files,
        "summary": outcome.summary,
    });
    write(
        &r.out,
        "manifest.json",
        &(serde_json::to_string_pretty(&manifest)? + "\n"),
    )?;
    Ok(())
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<String> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(name.to_string())
}

/// Molecule for the config with optional coupling and Rabi overrides.
fn molecule(
    cfg: &RunConfig,
    modes: ModeSelection,
    couplings: Option<(f64, f64)>,
    rabi: Option<f64>,
) -> Result<Molecule> {
    let potential = match (couplings, &cfg.potential) {
        (None, p) => p.clone(),
        (Some((kappa, xi)), PotentialModel::Explicit { nu, v_d, .. }) => PotentialModel::Explicit {
            kappa,
            xi,
            nu: *nu,
            v_d: *v_d,
        },
        (Some(_), _) => bail!("coupling scans need an explicit potential"),
    };
    let mut params = cfg.physical()?;
    if let Some(r) = rabi {
        params = params.with_rabi(r);
    }
    let (geometry, policy) = cfg.geometry()?;
    Ok(build_molecule(
        geometry,
        &potential,
        params,
        cfg.detuning()?,
        &cfg.seed()?,
        policy,
        modes,
    )?)
}

fn graph(r: &Run) -> Result<Outcome> {
    let m = molecule(&r.config, r.modes, None, None)?;
    let topology = graph_classify(&m.graph);
    let files = vec![
        write(&r.out, "graph_edges.txt", &m.graph.edge_list())?,
        write(
            &r.out,
            "graph_nodes.json",
            &(serde_json::to_string_pretty(&m.graph.node_table())? + "\n"),
        )?,
        write(
            &r.out,
            "modes.json",
            &(serde_json::to_string_pretty(&m.forms_json())? + "\n"),
        )?,
    ];
    Ok(Outcome {
        files,
        summary: json!({ "topology": topology, "edges": m.graph.edges().len() }),
    })
}

/// Ground-state solve of one parameter point.
struct Point {
    report: SolveReport,
    /// Mean reduced coordinates of the ground state at the final cutoff.
    mean: Option<DVector<f64>>,
}

fn solve_point(cfg: &RunConfig, m: &Molecule) -> Result<Point> {
    let model = m.model();
    let s = &cfg.solver;
    let max_cutoff = s.max_cutoff_for(model.modes());
    if model.modes() == 0 {
        let opts = FockOptions {
            cutoff: 2,
            frame: s.frame,
            max_dim: s.max_dim,
        };
        let (_, g) = fock::solve_model(&model, &opts, s.eig_tol)?;
        return Ok(Point {
            report: SolveReport {
                energy: g.energy,
                cutoff: 2,
                converged: true,
                energy_history: vec![(2, g.energy)],
            },
            mean: Some(DVector::zeros(0)),
        });
    }
    if m.params.rabi == 0.0 {
        // Without hopping the blocks decouple and each separates into
        // independent normal modes.
        let mut winner = 0;
        let report = fock::converge_cutoff(
            |c| {
                let (e, node) = fock::decoupled_ground_energy(&model, c, s.frame)?;
                winner = node;
                Ok(e)
            },
            s.e_tol,
            s.max_cutoff_for(1),
        )?;
        let mean = fock::decoupled_block(&model.forms[winner], model.omega, model.x0, report.cutoff, s.frame)
            .map(|b| b.mean)
            .ok();
        return Ok(Point { report, mean });
    }
    let report = fock::converge_model(&model, s.frame, s.e_tol, max_cutoff, s.max_dim)?;
    let opts = FockOptions {
        cutoff: report.cutoff,
        frame: s.frame,
        max_dim: s.max_dim,
    };
    let mean = fock::solve_model(&model, &opts, s.eig_tol)
        .ok()
        .and_then(|(op, g)| op.mean_coordinates(&g.vector).ok());
    Ok(Point { report, mean })
}

/// Closed-form ground energy, available at zero Rabi frequency for the
/// presets at single facilitation. `Err` marks an unstable point.
fn analytic_energy(cfg: &RunConfig, m: &Molecule) -> Option<std::result::Result<f64, Error>> {
    if m.params.rabi != 0.0 || cfg.detuning().ok()? != DetuningRule::Facilitation(1.0) {
        return None;
    }
    let c = &m.couplings;
    let omega = m.params.omega;
    Some(match cfg.preset()? {
        Preset::Dumbbell => analytic::dumbbell_ground_energy(c.kappa, c.xi, omega),
        Preset::Triangle => analytic::triangle_ground_energy(c.kappa, c.xi, omega, c.nu),
        Preset::Tetrahedron => analytic::tetrahedron_ground_energy(c.kappa, c.xi, omega, c.nu),
    })
}

fn bo_starts(cfg: &RunConfig, dim: usize) -> usize {
    cfg.bopes.starts.unwrap_or_else(|| bopes::default_starts(dim).min(256))
}

fn max_atom_displacement(m: &Molecule, mean: &DVector<f64>) -> f64 {
    m.atom_displacements(mean).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn energy_cell(v: Option<std::result::Result<f64, Error>>) -> String {
    match v {
        None => NA.into(),
        Some(Ok(e)) => num(e),
        Some(Err(_)) => UNSTABLE.into(),
    }
}

struct Row {
    parameter: f64,
    numeric: Result<Point>,
    analytic: Option<std::result::Result<f64, Error>>,
    bo: Result<bopes::MinimaReport>,
}

fn evaluate(cfg: &RunConfig, m: &Molecule, parameter: f64) -> Row {
    let surface = BoSurface::from_molecule(m);
    Row {
        parameter,
        numeric: solve_point(cfg, m),
        analytic: analytic_energy(cfg, m),
        bo: bopes::minimize_bo(&surface, bo_starts(cfg, surface.dim())).map_err(Into::into),
    }
}

fn bo_cell(bo: &Result<bopes::MinimaReport>) -> String {
    match bo {
        Ok(r) if !r.unbounded => num(r.global_energy),
        Ok(_) => UNSTABLE.into(),
        Err(_) => NA.into(),
    }
}

fn scan(r: &Run) -> Result<Outcome> {
    let cfg = &r.config;
    let Some(range) = cfg.scan else {
        bail!("task {} needs a scan range", r.task.name())
    };
    let base = molecule(cfg, r.modes, None, None)?;
    let (kappa0, xi0) = (base.couplings.kappa, base.couplings.xi);
    let crit = analytic::critical_points(base.params.omega, base.couplings.nu)?;
    let (column, scale) = match r.task {
        Task::GsScanXi => ("xi", if range.relative { crit.xi_c } else { 1.0 }),
        Task::GsScanKappa => ("kappa", if range.relative { crit.kappa_c } else { 1.0 }),
        _ => ("Omega", 1.0),
    };
    let values: Vec<f64> = range.values().iter().map(|v| v * scale).collect();
    let rows: Vec<Row> = values
        .par_iter()
        .map(|&v| {
            let m = match r.task {
                Task::GsScanXi => molecule(cfg, r.modes, Some((kappa0, v)), None),
                Task::GsScanKappa => molecule(cfg, r.modes, Some((v, xi0)), None),
                _ => molecule(cfg, r.modes, None, Some(v)),
            };
            match m {
                Ok(m) => evaluate(cfg, &m, v),
                Err(e) => Row {
                    parameter: v,
                    numeric: Err(anyhow::anyhow!("{e:#}")),
                    analytic: None,
                    bo: Err(e),
                },
            }
        })
        .collect();

    let mut csv = Csv::new(&[column, "E_numeric", "E_analytic", "E_BO", "cutoff", "converged"]);
    let mut unconverged = 0;
    for row in &rows {
        let p = match &row.numeric {
            Ok(p) => p,
            Err(e) => bail!("{} = {}: {e:#}", column, row.parameter),
        };
        if !p.report.converged {
            unconverged += 1;
        }
        csv.row(vec![
            num(row.parameter),
            num(p.report.energy),
            energy_cell(row.analytic.clone()),
            bo_cell(&row.bo),
            p.report.cutoff.to_string(),
            p.report.converged.to_string(),
        ]);
    }
    let name = format!("{}.csv", r.task.name().replace('-', "_"));
    Ok(Outcome {
        files: vec![write(&r.out, &name, &csv.finish())?],
        summary: json!({ "rows": rows.len(), "unconverged_rows": unconverged }),
    })
}

fn wigner(r: &Run) -> Result<Outcome> {
    let m = molecule(&r.config, r.modes, None, None)?;
    let c = m.couplings;
    let omega = m.params.omega;
    let spec = &r.config.wigner;
    let (kind, centre) = match spec.mode {
        WignerMode::Perpendicular => (ModeKind::Perpendicular, 0.0),
        WignerMode::Parallel => (
            ModeKind::Parallel,
            analytic::parallel_displacement(c.kappa, c.xi, omega)?,
        ),
    };
    let xi_eff = analytic::xi_eff(kind, c.kappa, c.xi, c.nu);
    let b = analytic::bogoliubov_w(omega, xi_eff);
    if !b.exists {
        bail!(
            "no squeezed ground state: effective curvature {xi_eff} is beyond the critical value {}",
            -omega / 4.0
        );
    }
    let (wp, wm) = analytic::wigner_widths(b.w)?;
    // W ∝ exp(−w̄ α²) has standard deviation 1/√(2w̄) along each axis.
    let half = |width: f64| spec.extent.unwrap_or(6.0 / (2.0 * width).sqrt());
    let n = spec.points;
    let axis = |half: f64| -> (Vec<f64>, f64) {
        let h = 2.0 * half / (n - 1) as f64;
        ((0..n).map(|i| -half + h * i as f64).collect(), h)
    };
    let (re_axis, hr) = axis(half(wp));
    let (im_axis, hi) = axis(half(wm));
    let mut csv = Csv::new(&["alpha_R", "alpha_I", "W"]);
    let mut total = 0.0;
    for &re in &re_axis {
        for &im in &im_axis {
            let a = centre + re;
            let w = analytic::wigner_displaced(b.w, (centre, 0.0), a, im)?;
            total += w;
            csv.row(vec![num(a), num(im), num(w)]);
        }
    }
    let norm = total * hr * hi;
    let body = csv.finish() + &format!("# normalization,{}\n", num(norm));
    Ok(Outcome {
        files: vec![write(&r.out, "wigner.csv", &body)?],
        summary: json!({
            "mode": spec.mode,
            "xi_eff": xi_eff,
            "w": b.w,
            "omega_tilde": b.omega_tilde,
            "width_plus": wp,
            "width_minus": wm,
            "centre": centre,
            "normalization": norm,
        }),
    })
}

fn bopes_scan(r: &Run) -> Result<Outcome> {
    let cfg = &r.config;
    let Some(range) = cfg.scan else {
        bail!("task bopes-scan needs a scan range of Rabi frequencies")
    };
    if range.samples < 32 {
        bail!("bopes-scan needs at least 32 samples, got {}", range.samples);
    }
    let base = molecule(cfg, r.modes, None, None)?;
    let surface = BoSurface::from_molecule(&base);
    let starts = bo_starts(cfg, surface.dim());
    let bo = bopes::transition_scan(&surface, range.start, range.stop, range.samples, starts)?;
    let quantum: Vec<Option<Point>> = if cfg.bopes.quantum {
        bo.rabi
            .par_iter()
            .map(|&o| {
                molecule(cfg, r.modes, None, Some(o))
                    .and_then(|m| solve_point(cfg, &m))
                    .map(Some)
            })
            .collect::<Result<_>>()?
    } else {
        bo.rabi.iter().map(|_| None).collect()
    };
    let mut csv = Csv::new(&[
        "Omega",
        "E_BO",
        "E_quantum",
        "E_analytic",
        "degeneracy",
        "cutoff",
        "converged",
    ]);
    for (i, &o) in bo.rabi.iter().enumerate() {
        let m = molecule(cfg, r.modes, None, Some(o))?;
        let (eq, cutoff, conv) = match &quantum[i] {
            Some(p) => (
                num(p.report.energy),
                p.report.cutoff.to_string(),
                p.report.converged.to_string(),
            ),
            None => (NA.into(), NA.into(), NA.into()),
        };
        csv.row(vec![
            num(o),
            num(bo.energy[i]),
            eq,
            energy_cell(analytic_energy(cfg, &m)),
            bo.degeneracy[i].to_string(),
            cutoff,
            conv,
        ]);
    }
    let q_energy: Vec<f64> = quantum.iter().flatten().map(|p| p.report.energy).collect();
    let sd_bo = bopes::max_second_difference(&bo.energy).map(|x| x.1);
    let sd_q = (q_energy.len() == bo.rabi.len())
        .then(|| bopes::max_second_difference(&q_energy).map(|x| x.1))
        .flatten();
    Ok(Outcome {
        files: vec![write(&r.out, "bopes_scan.csv", &csv.finish())?],
        summary: json!({
            "kink": bo.kink,
            "max_second_difference_bo": sd_bo,
            "max_second_difference_quantum": sd_q,
        }),
    })
}

fn compare(r: &Run) -> Result<Outcome> {
    let cfg = &r.config;
    let m = molecule(cfg, r.modes, None, None)?;
    let row = evaluate(cfg, &m, m.params.rabi);
    let p = row.numeric?;
    let c = m.couplings;
    let correction = analytic::quantum_correction(c.kappa, c.xi, m.params.omega, c.nu);
    let bo = row.bo.as_ref().ok().filter(|b| !b.unbounded).map(|b| b.global_energy);
    let mut csv = Csv::new(&[
        "Omega",
        "E_numeric",
        "E_analytic",
        "E_BO",
        "E_numeric_minus_BO",
        "correction_analytic",
        "max_atom_displacement",
        "cutoff",
        "converged",
    ]);
    csv.row(vec![
        num(m.params.rabi),
        num(p.report.energy),
        energy_cell(row.analytic.clone()),
        bo_cell(&row.bo),
        bo.map_or(NA.into(), |b| num(p.report.energy - b)),
        match correction {
            Ok(v) if m.params.rabi == 0.0 && r.config.preset() == Some(Preset::Triangle) => num(v),
            Err(_) => UNSTABLE.into(),
            _ => NA.into(),
        },
        p.mean.as_ref().map_or(NA.into(), |q| num(max_atom_displacement(&m, q))),
        p.report.cutoff.to_string(),
        p.report.converged.to_string(),
    ]);
    Ok(Outcome {
        files: vec![write(&r.out, "compare.csv", &csv.finish())?],
        summary: json!({
            "energy_history": p.report.energy_history,
            "bo_minima": row.bo.ok().map(|b| b.minima),
        }),
    })
}
