use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use som_atlas::analysis::{
    assignments_to_csv, classify, cluster_stats, component_planes, kmeans_codebook,
    plane_correlation, KMeansParams,
};
use som_atlas::ingest::{extract_pulse_features, parse_csv, CsvOptions, ParsedCsv, PulseCurve};
use som_atlas::render::{render_cluster_map, render_plane, RenderOptions};
use som_atlas::som::train;
use som_atlas::{HexGrid, SomModel, TrainingSchedule};

use crate::args::{
    ClassifyArgs, ClusterArgs, CorrelateArgs, CsvArgs, FeaturesArgs, PlanesArgs, RenderArgs,
    TrainArgs,
};
use crate::error::{CliError, CliResult};

/// Write `contents` to a temporary file next to `path`, then rename it into
/// place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn load_model(path: &Path) -> CliResult<SomModel> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Data(format!("{}: model file is not UTF-8", path.display())))?;
    SomModel::from_text(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn csv_options(args: &CsvArgs) -> CliResult<CsvOptions> {
    Ok(CsvOptions {
        delimiter: delimiter(args.delimiter)?,
        has_header: !args.no_header,
        drop_bad_rows: args.drop_bad_rows,
    })
}

fn delimiter(c: char) -> CliResult<u8> {
    if c.is_ascii() {
        Ok(c as u8)
    } else {
        Err(CliError::Usage(format!("delimiter {c:?} is not a single ASCII character")))
    }
}

fn load_csv(path: &Path, options: CsvOptions) -> CliResult<ParsedCsv> {
    let bytes = read_bytes(path)?;
    let parsed = parse_csv(bytes.as_slice(), options).map_err(|e| {
        CliError::Data(format!("{}: {e}", path.display()))
    })?;
    for d in &parsed.dropped {
        eprintln!("{}: dropped {}", path.display(), d.reason);
    }
    Ok(parsed)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn render_options(args: &RenderArgs) -> RenderOptions {
    RenderOptions::new(args.format, args.radius)
}

/// A seed that differs between runs; printed with the configuration so the
/// run can be reproduced.
fn fresh_seed() -> u64 {
    use std::hash::{BuildHasher, Hasher};
    let mut h = std::collections::hash_map::RandomState::new().build_hasher();
    if let Ok(d) = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH) {
        h.write_u128(d.as_nanos());
    }
    h.finish()
}

/// Attribute names reduced to `[a-z0-9_]` for use in file names.
pub fn sanitize(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let trimmed = out.trim_matches('_');
    if trimmed.is_empty() {
        "attr".to_string()
    } else {
        trimmed.to_string()
    }
}

pub fn train_cmd(args: &TrainArgs) -> CliResult<()> {
    let grid = HexGrid::new(args.width, args.height)?;
    let schedule = TrainingSchedule {
        epochs: args.epochs,
        alpha0: args.alpha0,
        alpha_end: args.alpha_end,
        sigma0: args.sigma0.unwrap_or(TrainingSchedule::for_grid(&grid).sigma0),
        shuffle: !args.no_shuffle,
        seed: if args.random_seed { fresh_seed() } else { args.seed },
    };
    schedule.validate()?;
    let options = csv_options(&args.csv)?;
    println!(
        "config: command=train input={} output={} grid={}x{} epochs={} alpha0={} alpha_end={} sigma0={} shuffle={} seed={} time_counter={} delimiter={:?} header={} drop_bad_rows={}",
        args.input.display(),
        args.output.display(),
        grid.width(),
        grid.height(),
        schedule.epochs,
        schedule.alpha0,
        schedule.alpha_end,
        schedule.sigma0,
        schedule.shuffle,
        schedule.seed,
        args.time_counter.map(|p| p.to_string()).unwrap_or_else(|| "none".into()),
        args.csv.delimiter,
        options.has_header,
        options.drop_bad_rows,
    );

    let start = Instant::now();
    let parsed = load_csv(&args.input, options)?;
    let mut table = parsed.table;
    if let Some(period) = args.time_counter {
        table = table.append_time_counter(period)?;
    }
    let normalized = table
        .normalize()
        .map_err(|e| CliError::core(&args.input, e))?;
    let initial = SomModel::init_codebook(grid, normalized.dim(), schedule.seed)?
        .quantization_error(&normalized)?;
    let model = train(&normalized, grid, &schedule)?;
    let final_qe = model.quantization_error(&normalized)?;
    write_atomic(&args.output, model.to_text()?.as_bytes())?;

    println!("rows: {} (dropped {})", table.n_rows(), parsed.dropped.len());
    println!("dims: {}", table.dim());
    for a in table.schema().iter().filter(|a| a.quasi_constant) {
        println!("quasi-constant: {}", a.name);
    }
    println!("quantization error: initial {initial:.6} final {final_qe:.6}");
    println!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    println!("model written to {}", args.output.display());
    Ok(())
}

pub fn planes_cmd(args: &PlanesArgs) -> CliResult<()> {
    println!(
        "config: command=planes model={} output_dir={} format={} radius={}",
        args.model.display(),
        args.output_dir.display(),
        args.render.format.extension(),
        args.render.radius
    );
    let model = load_model(&args.model)?;
    ensure_dir(&args.output_dir)?;
    let mut opts = render_options(&args.render);
    for plane in component_planes(&model) {
        let attr = &model.schema()[plane.attribute];
        opts.caption = Some(format!("{} min={} max={}", attr.name, attr.raw_min, attr.raw_max));
        let bytes = render_plane(&plane, model.grid(), &opts)?;
        let path = args.output_dir.join(format!(
            "plane_{}_{}.{}",
            plane.attribute,
            sanitize(&attr.name),
            args.render.format.extension()
        ));
        write_atomic(&path, &bytes)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn classify_cmd(args: &ClassifyArgs) -> CliResult<()> {
    let options = csv_options(&args.csv)?;
    println!(
        "config: command=classify model={} input={} output={} delimiter={:?} header={} drop_bad_rows={}",
        args.model.display(),
        args.input.display(),
        args.output.display(),
        args.csv.delimiter,
        options.has_header,
        options.drop_bad_rows
    );
    let model = load_model(&args.model)?;
    let table = load_csv(&args.input, options)?.table;
    let assignments = classify(&model, &table).map_err(|e| CliError::core(&args.input, e))?;
    write_atomic(&args.output, assignments_to_csv(&assignments, None).as_bytes())?;
    let clamped = assignments.iter().filter(|a| a.clamped).count();
    let mean = assignments.iter().map(|a| a.distance).sum::<f64>() / assignments.len().max(1) as f64;
    println!("rows: {} (clamped {clamped})", assignments.len());
    println!("mean bmu distance: {mean:.6}");
    Ok(())
}

pub fn cluster_cmd(args: &ClusterArgs) -> CliResult<()> {
    let params = KMeansParams {
        k: args.k,
        seed: if args.random_seed { fresh_seed() } else { args.kmeans_seed },
        max_iters: args.max_iters,
        restarts: args.restarts,
    };
    let options = csv_options(&args.csv)?;
    println!(
        "config: command=cluster model={} input={} output_dir={} k={} kmeans_seed={} max_iters={} restarts={} format={} radius={} delimiter={:?} header={} drop_bad_rows={}",
        args.model.display(),
        args.input.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "none".into()),
        args.output_dir.display(),
        params.k,
        params.seed,
        params.max_iters,
        params.restarts,
        args.render.format.extension(),
        args.render.radius,
        args.csv.delimiter,
        options.has_header,
        options.drop_bad_rows
    );
    let model = load_model(&args.model)?;
    let mut clusters = kmeans_codebook(&model, &params)?;
    ensure_dir(&args.output_dir)?;
    let out = |name: &str| -> PathBuf { args.output_dir.join(name) };

    let map = render_cluster_map(&clusters.neuron_labels, model.grid(), &render_options(&args.render))?;
    write_atomic(&out(&format!("cluster_map.{}", args.render.format.extension())), &map)?;
    write_atomic(&out("neuron_clusters.csv"), clusters.labels_to_csv().as_bytes())?;

    if let Some(input) = &args.input {
        let table = load_csv(input, options)?.table;
        let assignments = classify(&model, &table).map_err(|e| CliError::core(input, e))?;
        clusters = cluster_stats(&clusters, &assignments, &table, &model)
            .map_err(|e| CliError::core(input, e))?;
        write_atomic(
            &out("assignments.csv"),
            assignments_to_csv(&assignments, Some(&clusters)).as_bytes(),
        )?;
        let stats = clusters.stats_to_csv().expect("stats were just computed");
        write_atomic(&out("stats.csv"), stats.as_bytes())?;
    }

    println!("k: {} inertia: {:.6} iterations: {}", clusters.k, clusters.inertia, clusters.iterations);
    println!("neurons per cluster: {:?}", clusters.sizes());
    if let Some(stats) = &clusters.stats {
        let rows: Vec<usize> = stats.iter().map(|s| s.rows).collect();
        println!("rows per cluster: {rows:?}");
    }
    println!("outputs written to {}", args.output_dir.display());
    Ok(())
}

pub fn correlate_cmd(args: &CorrelateArgs) -> CliResult<()> {
    println!(
        "config: command=correlate model={} output={} threshold={}",
        args.model.display(),
        args.output.display(),
        args.threshold
    );
    let model = load_model(&args.model)?;
    let report = plane_correlation(&model)?;
    write_atomic(&args.output, report.to_csv().as_bytes())?;
    for (i, j, r) in report.correlated_pairs(args.threshold) {
        let kind = if r < 0.0 { "inversely correlated" } else { "correlated" };
        println!("{kind}: {:?} ~ {:?} r={r:.4}", report.names[i], report.names[j]);
    }
    Ok(())
}

pub fn features_cmd(args: &FeaturesArgs) -> CliResult<()> {
    println!(
        "config: command=features inputs={} t_open={} t_close={} regen_duration={} output={} delimiter={:?}",
        args.inputs.len(),
        args.t_open,
        args.t_close,
        args.regen_duration,
        args.output.display(),
        args.delimiter
    );
    let options = CsvOptions {
        delimiter: delimiter(args.delimiter)?,
        ..CsvOptions::default()
    };
    let mut out = String::from("p_start,p_min,pulse_area,regen_area\n");
    for path in &args.inputs {
        let table = load_csv(path, options)?.table;
        if table.dim() != 2 {
            return Err(CliError::Data(format!(
                "{}: expected 2 columns (time, pressure), found {}",
                path.display(),
                table.dim()
            )));
        }
        let samples: Vec<(f64, f64)> = table.rows().map(|r| (r[0], r[1])).collect();
        let curve = PulseCurve::new(&samples, args.t_open, args.t_close, args.regen_duration)
            .map_err(|e| CliError::core(path, e))?;
        let f = extract_pulse_features(&curve);
        out.push_str(&format!("{},{},{},{}\n", f.p_start, f.p_min, f.pulse_area, f.regen_area));
        println!(
            "{}: p_start={} p_min={} pulse_area={} regen_area={}",
            path.display(),
            f.p_start,
            f.p_min,
            f.pulse_area,
            f.regen_area
        );
    }
    write_atomic(&args.output, out.as_bytes())?;
    Ok(())
}
