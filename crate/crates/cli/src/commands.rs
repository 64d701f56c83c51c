use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use majorant_core::dist::{
    asymptotic_rate, entropy_variance, irreversibility_parameter, resource_content,
    resource_variance, shannon_entropy,
};
use majorant_core::experiments::{ExperimentRegistry, SweepContext};
use majorant_core::grid::format_float;
use majorant_core::solver::Direction;
use majorant_core::svg::{self, ColorScale};
use majorant_core::{
    AtomDist, Error, MaskReason, ProbVec, ResourceTheory, SolverRegistry, SweepGrid,
};

use crate::config::{base_dir, dist_arg, read_json, ConvertConfig, Format, RunConfig};
use crate::{ConvertArgs, Failure, StatsArgs, SweepArgs};

type Outcome = std::result::Result<(), Failure>;

/// Ordered name/value pairs printed as aligned text, one CSV record or a JSON object.
struct Report(Vec<(&'static str, serde_json::Value)>);

impl Report {
    fn render(&self, format: Format) -> String {
        let text = |v: &serde_json::Value| match v {
            serde_json::Value::Number(n) => n.as_f64().map_or(n.to_string(), format_float),
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        match format {
            Format::Text => {
                let width = self.0.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                self.0
                    .iter()
                    .map(|(k, v)| format!("{k:<width$}  {}\n", text(v)))
                    .collect()
            }
            Format::Csv => {
                let keys: Vec<_> = self.0.iter().map(|(k, _)| *k).collect();
                let vals: Vec<_> = self.0.iter().map(|(_, v)| text(v)).collect();
                format!("{}\n{}\n", keys.join(","), vals.join(","))
            }
            Format::Json => {
                let map: serde_json::Map<_, _> = self
                    .0
                    .iter()
                    .map(|(k, v)| (k.to_string(), v.clone()))
                    .collect();
                let mut s = serde_json::to_string_pretty(&map).unwrap_or_default();
                s.push('\n');
                s
            }
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Outcome {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load(arg: &str) -> Result<Vec<f64>, Error> {
    dist_arg(arg)?.entries(None)
}

fn prob_vec(probs: Vec<f64>, gibbs: Option<Vec<f64>>) -> Result<ProbVec, Error> {
    match gibbs {
        Some(g) => ProbVec::with_gibbs(probs, g),
        None => ProbVec::new(probs),
    }
}

pub fn stats(args: &StatsArgs) -> Outcome {
    let gibbs = args.gibbs.as_deref().map(load).transpose()?;
    let theory: ResourceTheory = match &args.theory {
        Some(t) => t.parse()?,
        None if gibbs.is_some() => ResourceTheory::Thermodynamic,
        None => ResourceTheory::Entanglement,
    };
    let p = prob_vec(load(&args.dist)?, gibbs.clone())?;

    let mut rows = vec![
        ("theory", theory.name().into()),
        ("dim", p.dim().into()),
        ("H", shannon_entropy(&p).into()),
        ("V", entropy_variance(&p).into()),
    ];
    if theory.uses_gibbs() {
        rows.push(("D", resource_content(&p, theory)?.into()));
        rows.push(("V_rel", resource_variance(&p, theory)?.into()));
    }
    if let Some(other) = &args.against {
        let q = prob_vec(load(other)?, gibbs)?;
        rows.push(("rate_inf", asymptotic_rate(&p, &q, theory)?.into()));
        rows.push(("nu", irreversibility_parameter(&p, &q, theory)?.into()));
    }
    emit(&Report(rows).render(args.format), args.out.as_deref())
}

fn convert_config(args: &ConvertArgs) -> Result<(ConvertConfig, Option<PathBuf>), Error> {
    let (mut cfg, base) = match &args.config {
        Some(path) => (read_json::<ConvertConfig>(path)?, Some(base_dir(path))),
        None => {
            let need = |v: &Option<String>, what: &str| {
                v.as_deref().map(dist_arg).transpose()?.ok_or_else(|| {
                    Error::InvalidParameter(format!("--{what} is required without --config"))
                })
            };
            let cfg = ConvertConfig {
                initial: need(&args.initial, "initial")?,
                target: need(&args.target, "target")?,
                gibbs: None,
                n: 1,
                m: None,
                direction: Direction::default(),
                solver: None,
            };
            (cfg, None)
        }
    };
    if args.config.is_some() {
        if let Some(i) = &args.initial {
            cfg.initial = dist_arg(i)?;
        }
        if let Some(t) = &args.target {
            cfg.target = dist_arg(t)?;
        }
    }
    if let Some(g) = &args.gibbs {
        cfg.gibbs = Some(dist_arg(g)?);
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if args.m.is_some() {
        cfg.m = args.m;
    }
    if let Some(d) = &args.direction {
        cfg.direction = d.parse()?;
    }
    if args.solver.is_some() {
        cfg.solver = args.solver.clone();
    }
    Ok((cfg, base))
}

pub fn convert(args: &ConvertArgs) -> Outcome {
    let (cfg, base) = convert_config(args)?;
    let base = base.as_deref();
    let gibbs = cfg.gibbs.as_ref().map(|g| g.entries(base)).transpose()?;
    let p = prob_vec(cfg.initial.entries(base)?, gibbs.clone())?;
    let q = prob_vec(cfg.target.entries(base)?, gibbs)?;
    let m = cfg.m.unwrap_or(cfg.n);
    if cfg.n == 0 || m == 0 {
        return Err(Error::InvalidParameter("copy numbers must be positive".into()).into());
    }
    let solver =
        SolverRegistry::default().get(cfg.solver.as_deref().unwrap_or("lorenz-envelope"))?;
    let initial = AtomDist::iid_power(&p, cfg.n)?;
    let target = AtomDist::iid_power(&q, m)?;
    let result = solver.solve_in(&initial, &target, cfg.direction)?;

    let rows = vec![
        ("solver", solver.name().into()),
        ("direction", cfg.direction.name().into()),
        ("n", cfg.n.into()),
        ("m", m.into()),
        ("fidelity", result.fidelity.into()),
        ("infidelity", result.infidelity.into()),
        ("feasible_exact", result.feasible_exact.into()),
        ("mass_outside_target", result.mass_outside_target.into()),
        ("atoms", result.final_state.len().into()),
    ];
    print!("{}", Report(rows).render(args.format));
    if let Some(path) = &args.out {
        let mut csv = String::from("log_p,log_g,log_mult,mass,gibbs_mass\n");
        for a in result.final_state.atoms() {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                format_float(a.log_p),
                format_float(a.log_g),
                format_float(a.log_mult),
                format_float(a.log_mass().exp()),
                format_float(a.log_gibbs_mass().exp()),
            );
        }
        std::fs::write(path, csv)?;
    }
    Ok(())
}

fn cancel_flag() -> Arc<AtomicBool> {
    let flag = Arc::new(AtomicBool::new(false));
    let handler = flag.clone();
    if let Err(e) = ctrlc::set_handler(move || handler.store(true, Ordering::Relaxed)) {
        log::warn!("cannot install interrupt handler: {e}");
    }
    flag
}

/// `<stem>.<ext>`, keeping any directory and dropping a `.csv`/`.json`/`.svg` suffix.
fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let known = matches!(
        stem.extension().and_then(|e| e.to_str()),
        Some("csv" | "json" | "svg")
    );
    let base = if known {
        stem.with_extension("")
    } else {
        stem.to_path_buf()
    };
    let mut name = base.into_os_string();
    name.push(".");
    name.push(ext);
    name.into()
}

fn write_grid(grid: &SweepGrid, cfg: &RunConfig) -> Outcome {
    let out = &cfg.output;
    match &out.path {
        Some(stem) => {
            if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(with_ext(stem, "csv"), grid.to_csv())?;
            std::fs::write(with_ext(stem, "json"), grid.to_json()? + "\n")?;
            if out.svg {
                let scale = if out.log_scale {
                    ColorScale::Log
                } else {
                    ColorScale::Linear
                };
                std::fs::write(with_ext(stem, "svg"), svg::render(grid, scale))?;
            }
        }
        None => match out.format.unwrap_or(Format::Csv) {
            Format::Json => println!("{}", grid.to_json()?),
            _ => print!("{}", grid.to_csv()),
        },
    }
    Ok(())
}

fn run_config(name: &str, args: &SweepArgs) -> Result<(RunConfig, Option<PathBuf>), Error> {
    let (mut cfg, base) = match &args.config {
        Some(path) => (read_json::<RunConfig>(path)?, Some(base_dir(path))),
        None => (RunConfig::default(), None),
    };
    if let Some(exp) = &cfg.experiment {
        if exp != name {
            return Err(Error::InvalidParameter(format!(
                "config is for `{exp}`, not `{name}`"
            )));
        }
    }
    if args.out.is_some() {
        cfg.output.path = args.out.clone();
    }
    if args.format.is_some() {
        cfg.output.format = args.format;
    }
    cfg.output.svg |= args.svg;
    cfg.output.log_scale |= args.log_scale;
    if args.jobs.is_some() {
        cfg.jobs = args.jobs;
    }
    if args.solver.is_some() {
        cfg.solver = args.solver.clone();
    }
    if args.max_masked.is_some() {
        cfg.max_masked = args.max_masked;
    }
    if cfg.output.svg && cfg.output.path.is_none() {
        return Err(Error::InvalidParameter("--svg needs --out".into()));
    }
    if cfg.output.format == Some(Format::Text) {
        return Err(Error::InvalidParameter(
            "sweeps are written as csv or json".into(),
        ));
    }
    if cfg.jobs == Some(0) {
        return Err(Error::InvalidParameter("--jobs must be positive".into()));
    }
    if let Some(limit) = cfg.max_masked {
        if !(0.0..=1.0).contains(&limit) {
            return Err(Error::InvalidParameter(format!(
                "--max-masked {limit} outside [0, 1]"
            )));
        }
    }
    Ok((cfg, base))
}

pub fn sweep(name: &str, args: &SweepArgs) -> Outcome {
    let (cfg, base) = run_config(name, args)?;
    let experiment = ExperimentRegistry::default().get(name)?;
    let solver =
        SolverRegistry::default().get(cfg.solver.as_deref().unwrap_or("lorenz-envelope"))?;
    let mut ctx = SweepContext::new(solver, cfg.jobs)?.with_cancel_flag(cancel_flag());
    if let Some(dir) = base {
        ctx = ctx.with_base_dir(dir);
    }
    let grid = experiment.run(&cfg.params, &ctx)?;
    write_grid(&grid, &cfg)?;

    if grid.mask.contains(&Some(MaskReason::Cancelled)) {
        return Err(Failure::Interrupted);
    }
    let fraction = grid.failure_fraction();
    match cfg.max_masked {
        Some(limit) if fraction > limit => Err(Failure::Masked { fraction, limit }),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_names() {
        assert_eq!(
            with_ext(Path::new("out/fig"), "csv"),
            PathBuf::from("out/fig.csv")
        );
        assert_eq!(
            with_ext(Path::new("out/fig.json"), "svg"),
            PathBuf::from("out/fig.svg")
        );
        assert_eq!(with_ext(Path::new("a.b"), "csv"), PathBuf::from("a.b.csv"));
    }

    #[test]
    fn report_formats() {
        let r = Report(vec![("H", 1.0.into()), ("theory", "entanglement".into())]);
        assert_eq!(r.render(Format::Csv), "H,theory\n1,entanglement\n");
        assert_eq!(r.render(Format::Text), "H       1\ntheory  entanglement\n");
    }
}
