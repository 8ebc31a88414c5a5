use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crm_core::angmom::HalfInt;
use crm_core::basis::{build_block, Parity, SymmetryBlock};
use crm_core::dynamics::{diagonalize, propagate_series, TimeGrid, Wavepacket};
use crm_core::hamiltonian::build_hamiltonian;
use crm_core::molecule::{
    quadrupole_ratio_report, FieldPoint, MoleculeSpec, RatioReport, QUADRUPOLE_RATIO_BAND,
};
use crm_core::observables::{format_value, Observable, TimeSeries};
use crm_core::pulse::{default_n_kick, initial_state, kick_amplitudes, KickResult};
use crm_core::Real;

use crate::args::{EvolveArgs, KickArgs, LevelsArgs, Precision, SpinArgs, SweepArgs, ValidateArgs};
use crate::output::{
    resolve, write_atomic, BlockRecord, CliError, CliResult, GridRecord, MoleculeSnapshot,
    PulseRecord, RunManifest,
};

/// Settings shared by every subcommand.
pub struct Context {
    pub spec: MoleculeSpec,
    pub source: String,
    pub n_max: u32,
    pub out_dir: PathBuf,
    pub precision: Precision,
}

impl Context {
    fn manifest(&self, command: &str) -> RunManifest {
        let snapshot = MoleculeSnapshot {
            source: self.source.clone(),
            name: self.spec.name.clone(),
            toml: self.spec.to_toml_string(),
        };
        RunManifest::new(command, snapshot, self.n_max, self.precision.name())
    }

    fn out_path(&self, path: &Path) -> PathBuf {
        resolve(&self.out_dir, path)
    }
}

fn field(gauss: f64, flag: &str) -> CliResult<FieldPoint> {
    FieldPoint::new(gauss).map_err(|e| CliError::from(e).for_flag(flag))
}

fn block_record(block: &SymmetryBlock) -> BlockRecord {
    BlockRecord {
        m_f: block.m_f().to_string(),
        parity: block.parity().to_string(),
        dim: block.dim(),
    }
}

/// `-I1` for nucleus 1, the smallest non-negative projection for nucleus 2.
fn default_spins(spec: &MoleculeSpec) -> (HalfInt, HalfInt) {
    let (i1, i2) = spec.spins();
    (-i1, HalfInt::from_twice(i2.twice() % 2))
}

fn initial_spins(spec: &MoleculeSpec, args: &SpinArgs) -> CliResult<(HalfInt, HalfInt)> {
    let (i1, i2) = spec.spins();
    let (d1, d2) = default_spins(spec);
    let m1 = args.m_i1.unwrap_or(d1);
    let m2 = args.m_i2.unwrap_or(d2);
    for (m, i, flag) in [(m1, i1, "--m-i1"), (m2, i2, "--m-i2")] {
        if !i.admits(m) {
            return Err(CliError::usage(format!(
                "{flag}: {m} is not a projection of spin {i}"
            )));
        }
    }
    Ok((m1, m2))
}

fn parse_observables(list: &str) -> CliResult<Vec<Observable>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let o: Observable = item
            .parse()
            .map_err(|e| CliError::from(e).for_flag("--observables"))?;
        if !out.contains(&o) {
            out.push(o);
        }
    }
    if out.is_empty() {
        return Err(CliError::usage("--observables: no observable selected"));
    }
    Ok(out)
}

fn parse_fields(list: &str) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let b: f64 = item
            .parse()
            .map_err(|_| CliError::usage(format!("--B-list: `{item}` is not a number")))?;
        field(b, "--B-list")?;
        out.push(b);
    }
    if out.is_empty() {
        return Err(CliError::usage(
            "--B-list: the list of field strengths is empty",
        ));
    }
    Ok(out)
}

fn build_grid(period_us: f64, record: &GridRecord) -> CliResult<TimeGrid> {
    let grid = match record {
        GridRecord::Window {
            start_tr,
            length_tr,
            samples,
        } => TimeGrid::window(period_us, *start_tr, *length_tr, *samples),
        GridRecord::Log {
            first_tr,
            last_tr,
            samples,
        } => TimeGrid::log_spaced(period_us, *first_tr, *last_tr, *samples),
        GridRecord::List { times_tr } => TimeGrid::from_tr(period_us, times_tr.clone()),
    };
    Ok(grid?)
}

fn seconds(since: Instant) -> f64 {
    since.elapsed().as_secs_f64()
}

fn csv_line(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let cells: Vec<String> = cells.into_iter().collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

/// Writes `text` to `--out` with a manifest beside it, or to stdout.
fn deliver(
    ctx: &Context,
    out: Option<&Path>,
    text: &str,
    mut manifest: RunManifest,
) -> CliResult<()> {
    match out {
        Some(path) => {
            let path = ctx.out_path(path);
            manifest.emit(&path, text.as_bytes())?;
            let m = manifest.write_beside(&path)?;
            println!("wrote {} and {}", path.display(), m.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn eigenvalues<T: Real>(
    spec: &MoleculeSpec,
    block: &Arc<SymmetryBlock>,
    field: FieldPoint,
    dump: Option<&Path>,
) -> CliResult<Vec<f64>> {
    let h = build_hamiltonian::<T>(spec, block, field)?;
    if let Some(path) = dump {
        h.write_dump(path)?;
    }
    let eig = diagonalize(&h)?;
    Ok(eig.eigenvalues().iter().map(|e| e.as_f64()).collect())
}

pub fn levels(ctx: &Context, args: &LevelsArgs) -> CliResult<()> {
    let field = field(args.b_gauss, "--B-gauss")?;
    let m_f = args.m_f.unwrap_or_else(|| {
        let (m1, m2) = default_spins(&ctx.spec);
        m1 + m2
    });
    let parity = Parity::from(args.parity);
    let block = build_block(&ctx.spec, ctx.n_max, m_f, parity)
        .map_err(|e| CliError::from(e).for_flag("--m-f"))?;
    if block.is_empty() {
        return Err(CliError::usage(format!(
            "--m-f: block M_F = {m_f}, {parity} parity has no states at N_max = {}",
            ctx.n_max
        )));
    }
    let block = Arc::new(block);
    let dump = args.dump_hamiltonian.as_deref().map(|p| ctx.out_path(p));
    let start = Instant::now();
    let energies = match ctx.precision {
        Precision::F64 => eigenvalues::<f64>(&ctx.spec, &block, field, dump.as_deref())?,
        Precision::F32 => eigenvalues::<f32>(&ctx.spec, &block, field, dump.as_deref())?,
    };

    let mut text = String::from("index,energy_MHz\n");
    for (i, e) in energies.iter().enumerate() {
        csv_line(&mut text, [i.to_string(), format_value(*e)]);
    }
    let mut manifest = ctx.manifest("levels");
    manifest.fields_gauss.push(args.b_gauss);
    manifest.blocks.push(block_record(&block));
    manifest
        .timings_s
        .insert("diagonalize".into(), seconds(start));
    deliver(ctx, args.out.as_deref(), &text, manifest)
}

fn kick_table<T: Real>(p: f64, n_kick: u32) -> CliResult<String> {
    let kick = kick_amplitudes::<T>(p, n_kick)?;
    let mut text = String::from("N,re_d,im_d,abs_d_sq\n");
    for (n, d) in kick.iter() {
        let (re, im) = (d.re.as_f64(), d.im.as_f64());
        csv_line(
            &mut text,
            [
                n.to_string(),
                format_value(re),
                format_value(im),
                format_value(re * re + im * im),
            ],
        );
    }
    Ok(text)
}

pub fn kick(ctx: &Context, args: &KickArgs) -> CliResult<()> {
    let n_kick = args.n_kick.unwrap_or_else(|| default_n_kick(ctx.n_max));
    let text = match ctx.precision {
        Precision::F64 => kick_table::<f64>(args.p, n_kick),
        Precision::F32 => kick_table::<f32>(args.p, n_kick),
    }
    .map_err(|e| e.for_flag("--P"))?;
    let mut manifest = ctx.manifest("kick");
    manifest.pulse = Some(PulseRecord {
        strength: args.p,
        n_kick,
        leakage: 0.0,
        m_i1: String::new(),
        m_i2: String::new(),
    });
    deliver(ctx, args.out.as_deref(), &text, manifest)
}

/// Everything needed to propagate one kicked state at several fields.
struct Protocol<'a> {
    spec: &'a MoleculeSpec,
    n_max: u32,
    strength: f64,
    spins: (HalfInt, HalfInt),
    grid: &'a TimeGrid,
    observers: &'a [Observable],
}

struct Run {
    series: Vec<TimeSeries>,
    pulse: PulseRecord,
    block: BlockRecord,
    timings: Vec<(String, f64)>,
}

fn run_protocol<T: Real>(
    proto: &Protocol<'_>,
    fields: &[FieldPoint],
    dump: Option<&Path>,
) -> CliResult<Run> {
    let mut timings = Vec::new();
    let start = Instant::now();
    let kick: KickResult<T> = kick_amplitudes(proto.strength, default_n_kick(proto.n_max))?;
    let (m1, m2) = proto.spins;
    let block = Arc::new(build_block(proto.spec, proto.n_max, m1 + m2, Parity::Even)?);
    // fails fast on leakage before the expensive diagonalization
    let psi0 = initial_state(&block, &kick, m1, m2)?;
    let leakage = kick.leakage.max(kick.truncate(proto.n_max).leakage);
    timings.push(("kick".to_owned(), seconds(start)));

    let multi = fields.len() > 1;
    let mut series = Vec::with_capacity(fields.len());
    for &field in fields {
        let tag = |stage: &str| {
            if multi {
                format!("B={}/{stage}", field.gauss())
            } else {
                stage.to_owned()
            }
        };
        let start = Instant::now();
        let h = build_hamiltonian::<T>(proto.spec, &block, field)?;
        if let Some(path) = dump {
            h.write_dump(path)?;
        }
        timings.push((tag("hamiltonian"), seconds(start)));
        let start = Instant::now();
        let eig = Arc::new(diagonalize(&h)?);
        timings.push((tag("diagonalize"), seconds(start)));
        let start = Instant::now();
        let wp = Wavepacket::from_state(eig, &psi0)?;
        series.push(propagate_series(&wp, proto.grid, proto.observers));
        timings.push((tag("propagate"), seconds(start)));
    }
    Ok(Run {
        series,
        pulse: PulseRecord {
            strength: proto.strength,
            n_kick: kick.n_kick,
            leakage,
            m_i1: m1.to_string(),
            m_i2: m2.to_string(),
        },
        block: block_record(&block),
        timings,
    })
}

fn dispatch(
    ctx: &Context,
    proto: &Protocol<'_>,
    fields: &[FieldPoint],
    dump: Option<&Path>,
) -> CliResult<Run> {
    let run = match ctx.precision {
        Precision::F64 => run_protocol::<f64>(proto, fields, dump),
        Precision::F32 => run_protocol::<f32>(proto, fields, dump),
    }?;
    if let Some(bad) = run.series.iter().find(|s| !s.is_consistent()) {
        return Err(CliError {
            code: crate::output::EXIT_NUMERICAL,
            message: format!("non-finite observable in a series of {} samples", bad.len()),
        });
    }
    Ok(run)
}

fn record_run(
    manifest: &mut RunManifest,
    run: &Run,
    grid: GridRecord,
    period_us: f64,
    observers: &[Observable],
) {
    manifest.pulse = Some(run.pulse.clone());
    manifest.blocks.push(run.block.clone());
    manifest.grid = Some(grid);
    manifest.rotational_period_us = Some(period_us);
    manifest.observables = observers.iter().map(|o| o.to_string()).collect();
    manifest.timings_s.extend(run.timings.iter().cloned());
}

pub fn evolve(ctx: &Context, args: &EvolveArgs) -> CliResult<()> {
    let observers = parse_observables(&args.observables)?;
    let spins = initial_spins(&ctx.spec, &args.spins)?;
    let field = field(args.b_gauss, "--B-gauss")?;
    let record = match &args.times_tr {
        Some(times) => GridRecord::List {
            times_tr: times.clone(),
        },
        None if args.log_spaced => GridRecord::Log {
            first_tr: args.window_start_tr,
            last_tr: args.window_start_tr + args.window_length_tr,
            samples: args.samples,
        },
        None => GridRecord::Window {
            start_tr: args.window_start_tr,
            length_tr: args.window_length_tr,
            samples: args.samples,
        },
    };
    let period = ctx.spec.rotational_period_us();
    let grid = build_grid(period, &record)?;
    let proto = Protocol {
        spec: &ctx.spec,
        n_max: ctx.n_max,
        strength: args.p,
        spins,
        grid: &grid,
        observers: &observers,
    };
    let dump = args.dump_hamiltonian.as_deref().map(|p| ctx.out_path(p));
    let run = dispatch(ctx, &proto, &[field], dump.as_deref())?;

    let mut csv = Vec::new();
    run.series[0]
        .write_csv(&mut csv)
        .expect("writing to memory");
    let mut manifest = ctx.manifest("evolve");
    manifest.fields_gauss.push(args.b_gauss);
    record_run(&mut manifest, &run, record, period, &observers);
    let path = ctx.out_path(&args.out);
    manifest.emit(&path, &csv)?;
    let m = manifest.write_beside(&path)?;
    println!(
        "wrote {} ({} samples) and {}",
        path.display(),
        grid.len(),
        m.display()
    );
    Ok(())
}

pub fn sweep_field(ctx: &Context, args: &SweepArgs) -> CliResult<()> {
    let gauss = parse_fields(&args.b_list)?;
    let fields = gauss
        .iter()
        .map(|&b| field(b, "--B-list"))
        .collect::<CliResult<Vec<_>>>()?;
    let observers = parse_observables(&args.observables)?;
    let spins = initial_spins(&ctx.spec, &args.spins)?;
    let record = match &args.probe_times_tr {
        Some(times) => GridRecord::List {
            times_tr: times.clone(),
        },
        None => GridRecord::Log {
            first_tr: args.probe_first_tr,
            last_tr: args.probe_last_tr,
            samples: args.probe_samples,
        },
    };
    let period = ctx.spec.rotational_period_us();
    let grid = build_grid(period, &record)?;
    let proto = Protocol {
        spec: &ctx.spec,
        n_max: ctx.n_max,
        strength: args.p,
        spins,
        grid: &grid,
        observers: &observers,
    };
    let run = dispatch(ctx, &proto, &fields, None)?;

    let mut text = String::new();
    let header = run.series[0].columns();
    csv_line(
        &mut text,
        std::iter::once("B_gauss".to_owned()).chain(header.iter().map(|(n, _)| n.clone())),
    );
    for (b, series) in gauss.iter().zip(&run.series) {
        let cols = series.columns();
        for row in 0..series.len() {
            csv_line(
                &mut text,
                std::iter::once(format_value(*b))
                    .chain(cols.iter().map(|(_, c)| format_value(c[row]))),
            );
        }
    }
    let mut manifest = ctx.manifest("sweep-field");
    manifest.fields_gauss = gauss;
    record_run(&mut manifest, &run, record, period, &observers);
    let path = ctx.out_path(&args.out);
    manifest.emit(&path, text.as_bytes())?;
    let m = manifest.write_beside(&path)?;
    println!(
        "wrote {} ({} rows) and {}",
        path.display(),
        run.series.len() * grid.len(),
        m.display()
    );
    Ok(())
}

fn describe(spec: &MoleculeSpec, out: &mut String) -> bool {
    let (i1, i2) = spec.spins();
    let _ = writeln!(
        out,
        "{}: B_e = {} MHz, spins {i1} and {i2}, bath dimension {}, t_R = {:.6e} us",
        spec.name,
        spec.b_e,
        spec.bath_dimension(),
        spec.rotational_period_us()
    );
    let (lo, hi) = QUADRUPOLE_RATIO_BAND;
    match quadrupole_ratio_report(spec) {
        RatioReport::NotApplicable => {
            let _ = writeln!(
                out,
                "{}: no quadrupole on nucleus 2, ratio check not applicable",
                spec.name
            );
            true
        }
        RatioReport::Pass { ratio } => {
            let _ = writeln!(
                out,
                "{}: |eqQ2|/B_e = {ratio:.4e} inside [{lo:e}, {hi:e}]",
                spec.name
            );
            true
        }
        RatioReport::Flagged { ratio } => {
            let _ = writeln!(
                out,
                "{}: FLAGGED |eqQ2|/B_e = {ratio:.4e} outside [{lo:e}, {hi:e}]",
                spec.name
            );
            false
        }
    }
}

pub fn validate(ctx: &Context, args: &ValidateArgs) -> CliResult<()> {
    let specs = if args.all {
        MoleculeSpec::preset_names()
            .map(MoleculeSpec::preset)
            .collect::<crm_core::Result<Vec<_>>>()?
    } else {
        vec![ctx.spec.clone()]
    };
    let mut text = String::new();
    let mut flagged = Vec::new();
    for spec in &specs {
        if !describe(spec, &mut text) {
            flagged.push(spec.name.clone());
        }
    }
    print!("{text}");
    if args.strict && !flagged.is_empty() {
        return Err(CliError::usage(format!(
            "ratio diagnostic flagged: {}",
            flagged.join(", ")
        )));
    }
    Ok(())
}

/// Writes an arbitrary artifact atomically, resolved against --out-dir.
pub fn write_artifact(ctx: &Context, path: &Path, bytes: &[u8]) -> CliResult<PathBuf> {
    let path = ctx.out_path(path);
    write_atomic(&path, bytes)?;
    Ok(path)
}
