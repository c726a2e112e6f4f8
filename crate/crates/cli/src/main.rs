// SPDX-License-Identifier: Apache-2.0

//! `qflow`: GDSII design to foundry package.
//!
//! Exit status: 0 clean, 1 the run finished but a check failed (reports are
//! still written), 2 the run could not be carried out.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qflow_core::chipgen::{generate_chip, inject_defect, ChipRecipe, ChipSpec, Topology};
use qflow_core::drc::{render_svg, render_text, DrcOptions};
use qflow_core::flow::{self, FlowConfig};
use qflow_core::gds::{parse_gds, write_gds, Layout};
use qflow_core::mdp::write_trap;
use qflow_core::pdk::{builtin, load_pdk_file, Pdk, RuleId};
use qflow_core::waferplan::{self, WaferSpec};

#[derive(Parser, Debug)]
#[command(name = "qflow", version, about = "Superconducting chip layout to wafer-ready mask data")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args, Debug, Clone)]
struct Opts {
    /// PDK document (JSON); overrides --deck.
    #[arg(long, global = true)]
    pdk: Option<PathBuf>,
    /// Built-in rule deck: qeda or cmc.
    #[arg(long, global = true, default_value = "qeda")]
    deck: String,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Report formats.
    #[arg(long, global = true, value_enum, value_delimiter = ',', default_values_t = [Format::Json, Format::Text])]
    format: Vec<Format>,
    /// Export even if checks fail; the reason is recorded in the manifest.
    #[arg(long, global = true)]
    waiver: Option<String>,
    #[arg(long, global = true, default_value_t = 300.0)]
    wafer_diameter_mm: f64,
    #[arg(long, global = true, default_value_t = 5.0)]
    edge_exclusion_mm: f64,
    #[arg(long, global = true, default_value_t = 0.2)]
    scribe_mm: f64,
    /// Die size for wafer planning as WxH in mm; defaults to the chip outline.
    #[arg(long, global = true, value_parser = parse_wxh)]
    die_mm: Option<[f64; 2]>,
    /// Generator seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Generator settings as key=value: qubits, topology, name, seed, die_um (WxH),
    /// recipe (file), spec (file), inject (rule id, adds one known violation).
    #[arg(long, global = true, num_args = 1.., value_name = "KEY=VALUE")]
    gen: Vec<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Svg,
}

#[derive(Args, Debug, Clone)]
struct Input {
    /// Layout to process; defaults to layout.gds in the output directory.
    layout: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a chip layout.
    Gen,
    /// Design rule check.
    Drc(Input),
    /// Process step plan and registration budgets.
    Map(Input),
    /// Wafer plan and wafer layout.
    Plan(Input),
    /// Fracture to trapezoids, reticles and job deck.
    Fracture(Input),
    /// Tape-out readiness checks.
    Tapeout(Input),
    /// Foundry package.
    Export(Input),
    /// All stages in order.
    Pipeline(Input),
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Gen => "gen",
            Cmd::Drc(_) => "drc",
            Cmd::Map(_) => "map",
            Cmd::Plan(_) => "plan",
            Cmd::Fracture(_) => "fracture",
            Cmd::Tapeout(_) => "tapeout",
            Cmd::Export(_) => "export",
            Cmd::Pipeline(_) => "pipeline",
        }
    }
}

/// Outcome of a run that completed.
#[derive(Debug, Default)]
struct Verdict {
    failures: Vec<String>,
}

impl Verdict {
    fn fail(&mut self, msg: impl Into<String>) {
        self.failures.push(msg.into());
    }

    fn merge(&mut self, other: Verdict) {
        self.failures.extend(other.failures);
    }
}

fn parse_wxh(s: &str) -> Result<[f64; 2], String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    let (w, h) = (p(w)?, p(h)?);
    if !(w > 0.0 && h > 0.0) {
        return Err(format!("die size must be positive, got {s:?}"));
    }
    Ok([w, h])
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let name = cli.cmd.name();
    match run(&cli) {
        Ok(v) if v.failures.is_empty() => {
            eprintln!("qflow {name}: pass");
            ExitCode::SUCCESS
        }
        Ok(v) => {
            eprintln!("qflow {name}: FAIL: {}", v.failures.join("; "));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("qflow {name}: error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<Verdict> {
    let o = &cli.opts;
    let pdk = load(o)?;
    for w in &pdk.warnings {
        log::warn!("pdk: {w}");
    }
    match &cli.cmd {
        Cmd::Gen => gen(o, &pdk),
        Cmd::Drc(i) => drc(o, &pdk, &read_layout(o, i)?),
        Cmd::Map(i) => map(o, &pdk, &read_layout(o, i)?),
        Cmd::Plan(i) => plan(o, &pdk, &read_layout(o, i)?),
        Cmd::Fracture(i) => fracture(o, &pdk, &read_layout(o, i)?),
        Cmd::Tapeout(i) => tapeout(o, &pdk, &read_layout(o, i)?),
        Cmd::Export(i) => export(o, &pdk, &read_layout(o, i)?),
        Cmd::Pipeline(i) => {
            let mut v = Verdict::default();
            let layout = if i.layout.is_some() && o.gen.is_empty() {
                let l = read_layout(o, i)?;
                write(&o.out, "layout.gds", &write_gds(&l)?)?;
                l
            } else {
                v.merge(gen(o, &pdk)?);
                read_layout(o, &Input { layout: None })?
            };
            v.merge(drc(o, &pdk, &layout)?);
            v.merge(map(o, &pdk, &layout)?);
            v.merge(plan(o, &pdk, &layout)?);
            v.merge(fracture(o, &pdk, &layout)?);
            v.merge(tapeout(o, &pdk, &layout)?);
            v.merge(export(o, &pdk, &layout)?);
            Ok(v)
        }
    }
}

fn load(o: &Opts) -> Result<Pdk> {
    match &o.pdk {
        Some(p) => load_pdk_file(p).with_context(|| format!("loading PDK {}", p.display())),
        None => builtin(&o.deck).ok_or_else(|| anyhow!("unknown deck {:?} (expected qeda or cmc)", o.deck)),
    }
}

fn config(o: &Opts) -> FlowConfig {
    FlowConfig {
        wafer: WaferSpec { diameter_mm: o.wafer_diameter_mm, edge_exclusion_mm: o.edge_exclusion_mm },
        scribe_mm: o.scribe_mm,
        die_mm: o.die_mm,
        drc: DrcOptions::default(),
    }
}

fn read_layout(o: &Opts, i: &Input) -> Result<Layout> {
    let path = i.layout.clone().unwrap_or_else(|| o.out.join("layout.gds"));
    let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    parse_gds(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn write(dir: &Path, name: &str, data: &[u8]) -> Result<()> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(&path, data).with_context(|| format!("writing {}", path.display()))
}

fn json<T: serde::Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn chip_spec(o: &Opts) -> Result<(ChipSpec, Option<RuleId>)> {
    let mut spec = ChipSpec::default();
    let mut recipe: Option<ChipRecipe> = None;
    let mut inject = None;
    for kv in &o.gen {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("--gen expects key=value, got {kv:?}"))?;
        match k {
            "spec" => {
                let text = fs::read_to_string(v).with_context(|| format!("reading {v}"))?;
                spec = ChipSpec::from_json(&text)?;
            }
            "qubits" => spec.qubits = v.parse().with_context(|| format!("qubits={v}"))?,
            "topology" => {
                spec.topology = match v {
                    "diamond" => Topology::Diamond,
                    "grid" => Topology::Grid,
                    _ => bail!("topology must be diamond or grid, got {v:?}"),
                }
            }
            "name" => spec.name = v.to_string(),
            "seed" => spec.seed = v.parse().with_context(|| format!("seed={v}"))?,
            "die_um" => spec.die_um = Some(parse_wxh(v).map_err(|e| anyhow!(e))?),
            "recipe" => {
                let text = fs::read_to_string(v).with_context(|| format!("reading {v}"))?;
                recipe = Some(serde_json::from_str(&text).with_context(|| format!("parsing recipe {v}"))?);
            }
            "inject" => {
                inject = Some(
                    RuleId::ALL
                        .into_iter()
                        .find(|r| format!("{r:?}").eq_ignore_ascii_case(v))
                        .ok_or_else(|| anyhow!("inject expects a rule id R1..R9, got {v:?}"))?,
                )
            }
            _ => bail!("unknown --gen key {k:?}"),
        }
    }
    if let Some(r) = recipe {
        spec.recipe = r;
    }
    if let Some(s) = o.seed {
        spec.seed = s;
    }
    if spec.topology == Topology::Grid && spec.name == ChipSpec::default().name {
        spec.name = format!("QCHIP_{}Q", spec.qubits);
    }
    Ok((spec, inject))
}

fn gen(o: &Opts, pdk: &Pdk) -> Result<Verdict> {
    let (spec, inject) = chip_spec(o)?;
    let chip = generate_chip(&spec, pdk)?;
    let layout = match inject {
        Some(rule) => inject_defect(&chip.layout, rule, &pdk.rules)?,
        None => chip.layout,
    };
    write(&o.out, "layout.gds", &write_gds(&layout)?)?;
    let census = serde_json::json!({
        "spec": spec,
        "components": chip.census.0,
        "total": chip.census.total(),
        "die_um": [chip.die.width() as f64 / 1e3, chip.die.height() as f64 / 1e3],
        "resonators": chip.resonators,
        "injected": inject,
    });
    write(&o.out, "census.json", &json(&census)?)?;
    log::info!("generated {} with {} components", spec.name, chip.census.total());
    Ok(Verdict::default())
}

fn drc(o: &Opts, pdk: &Pdk, layout: &Layout) -> Result<Verdict> {
    let flat = flow::flatten_layout(layout)?;
    let report = flow::verify(&flat, pdk, &config(o));
    if o.format.contains(&Format::Json) {
        write(&o.out, "drc_report.json", report.to_json().as_bytes())?;
    }
    if o.format.contains(&Format::Text) {
        write(&o.out, "drc_report.txt", render_text(&report).as_bytes())?;
    }
    if o.format.contains(&Format::Svg) {
        write(&o.out, "drc_report.svg", render_svg(&flat, &report).as_bytes())?;
    }
    let mut v = Verdict::default();
    if !report.violations.is_empty() {
        v.fail(format!("{} DRC violation(s)", report.violations.len()));
    }
    for e in &report.errors {
        v.fail(format!("DRC: {e}"));
    }
    Ok(v)
}

fn map(o: &Opts, pdk: &Pdk, layout: &Layout) -> Result<Verdict> {
    let flat = flow::flatten_layout(layout)?;
    let plan = flow::map(&flat, pdk)?;
    write(&o.out, "step_plan.csv", plan.to_csv()?.as_bytes())?;
    let reg = flow::registration(&flat, pdk);
    write(&o.out, "registration.json", &json(&reg)?)?;
    let mut v = Verdict::default();
    for b in reg.budgets.iter().filter(|b| !b.feasible) {
        v.fail(format!("registration budget for {:?} is infeasible (o_min {} nm)", b.layer_pair, b.o_min_nm));
    }
    if !reg.findings.is_empty() {
        v.fail(format!("{} overlap(s) below the registration budget", reg.findings.len()));
    }
    Ok(v)
}

fn plan(o: &Opts, pdk: &Pdk, layout: &Layout) -> Result<Verdict> {
    let flat = flow::flatten_layout(layout)?;
    let (plan, wafer) = flow::plan(layout, &flat, pdk, &config(o))?;
    write(&o.out, "wafer_plan.json", plan.to_json().as_bytes())?;
    write(&o.out, "wafer.gds", &write_gds(&wafer)?)?;
    if o.format.contains(&Format::Svg) {
        write(&o.out, "wafer.svg", waferplan::render_svg(&plan).as_bytes())?;
    }
    let mut v = Verdict::default();
    if plan.die_count == 0 {
        v.fail("no die fits on the wafer");
    }
    Ok(v)
}

fn fracture(o: &Opts, pdk: &Pdk, layout: &Layout) -> Result<Verdict> {
    let flat = flow::flatten_layout(layout)?;
    let sets = flow::fracture(&flat, pdk)?;
    let (plan, _) = flow::plan(layout, &flat, pdk, &config(o))?;
    let (reticles, deck) = flow::reticles_and_deck(&flat, pdk, &sets, &plan)?;
    for s in &sets {
        write(&o.out, &format!("mask/{}", s.file_name()), write_trap(s).as_bytes())?;
    }
    write(&o.out, "reticles.json", &json(&reticles)?)?;
    write(&o.out, "jobdeck.json", deck.to_json().as_bytes())?;
    Ok(Verdict::default())
}

fn tapeout(o: &Opts, pdk: &Pdk, layout: &Layout) -> Result<Verdict> {
    let report = qflow_core::mdp::tapeout_check(layout, &pdk.rules);
    if o.format.contains(&Format::Json) {
        write(&o.out, "tapeout_report.json", report.to_json().as_bytes())?;
    }
    if o.format.contains(&Format::Text) {
        write(&o.out, "tapeout_report.txt", report.render_text().as_bytes())?;
    }
    let mut v = Verdict::default();
    for c in report.failed() {
        v.fail(format!("{} {} failed", c.id, c.name));
    }
    Ok(v)
}

fn export(o: &Opts, pdk: &Pdk, layout: &Layout) -> Result<Verdict> {
    let outputs = flow::run_stages(layout, pdk, &config(o))?;
    let mut v = Verdict::default();
    if !outputs.clean() && o.waiver.is_none() {
        v.fail("package withheld: DRC or tape-out checks failed and no waiver was given");
        return Ok(v);
    }
    let manifest = flow::export(layout, &outputs, &o.out.join("package"), o.waiver.as_deref())?;
    log::info!("package written with {} files", manifest.files.len());
    Ok(v)
}
