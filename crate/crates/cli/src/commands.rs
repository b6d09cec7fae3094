use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use seal::attacks::{known_io_attack, naive_inference, Alignment, AttackReport};
use seal::io::{read_csv_path, write_csv_path, CsvBlockWriter, CsvRowReader, CsvSchema};
use seal::laplace::{entropy_seed, substream, Purpose};
use seal::perturbation::window_bounds;
use seal::utility::{epsilon_sweep, knn_accuracy, window_sweep};
use seal::{ClassPolicy, Dataset, PerturbationConfig, Perturber, StreamPerturber, MIN_WINDOW};

use crate::args::{BenchArgs, CsvArgs, EvaluateArgs, PerturbArgs, StreamArgs, SweepArgs};
use crate::Failure;

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn check_epsilon(eps: f64, flag: &str) -> Result<f64, Failure> {
    if eps.is_finite() && eps > 0.0 {
        Ok(eps)
    } else {
        Err(usage(format!("{flag} {eps}: must be a finite number > 0")))
    }
}

fn check_window(ws: i64, flag: &str) -> Result<usize, Failure> {
    if ws >= MIN_WINDOW as i64 {
        Ok(ws as usize)
    } else {
        Err(usage(format!("{flag} {ws}: must be at least {MIN_WINDOW}")))
    }
}

fn schema(a: &CsvArgs) -> Result<CsvSchema, Failure> {
    let delimiter = match a.delimiter.as_str() {
        "\\t" | "tab" => b'\t',
        d if d.len() == 1 => d.as_bytes()[0],
        d => return Err(usage(format!("--delimiter {d:?}: must be a single ASCII character"))),
    };
    let class_policy = match a.class_column.to_ascii_lowercase().as_str() {
        "auto" => ClassPolicy::Auto,
        "last" => ClassPolicy::LastColumn,
        "none" => ClassPolicy::None,
        n => match n.parse::<usize>() {
            Ok(i) if i >= 1 => ClassPolicy::Index(i - 1),
            _ => {
                return Err(usage(format!(
                    "--class-column {n:?}: expected auto, last, none or a 1-based column number"
                )))
            }
        },
    };
    if !(1..=17).contains(&a.precision) {
        return Err(usage(format!("--precision {}: must be between 1 and 17", a.precision)));
    }
    Ok(CsvSchema {
        delimiter,
        has_header: !a.no_header,
        class_policy,
        precision: a.precision,
    })
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = entropy_seed();
        eprintln!("seal: no --seed given, using seed {s}");
        s
    })
}

fn read_input(path: &Path, schema: &CsvSchema) -> Result<Dataset, Failure> {
    read_csv_path(path, schema).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn perturb(a: PerturbArgs) -> Outcome {
    let epsilon = check_epsilon(a.epsilon, "--epsilon")?;
    let window_size = check_window(a.window_size, "--window-size")?;
    let schema = schema(&a.csv)?;
    let seed = resolve_seed(a.seed);

    let data = read_input(&a.input, &schema)?;
    let start = Instant::now();
    let engine = Perturber::new(PerturbationConfig::new(epsilon, window_size).with_seed(seed))?;
    let released = engine.perturb_dataset(&data)?;
    let elapsed = start.elapsed().as_secs_f64();
    write_csv_path(&released, &schema, &a.output)
        .map_err(|e| usage(format!("{}: {e}", a.output.display())))?;

    println!("rows={}", released.rows());
    println!("attributes={}", released.cols());
    println!("windows={}", window_bounds(data.rows(), window_size).len());
    println!("seed={seed}");
    println!("wall_time_s={elapsed:.6}");
    println!("rows_per_sec={:.0}", released.rows() as f64 / elapsed.max(1e-12));
    Ok(())
}

enum BlockSink {
    Stdout(CsvBlockWriter<BufWriter<io::Stdout>>),
    Directory { dir: PathBuf, schema: CsvSchema, next: usize },
    File { writer: CsvBlockWriter<BufWriter<File>>, tmp: tempfile::TempPath, target: PathBuf },
}

impl BlockSink {
    fn open(target: &str, schema: &CsvSchema) -> Result<Self, Failure> {
        if target == "-" {
            return Ok(BlockSink::Stdout(CsvBlockWriter::new(
                BufWriter::new(io::stdout()),
                schema.clone(),
            )));
        }
        let path = PathBuf::from(target);
        if target.ends_with('/') || path.is_dir() {
            fs::create_dir_all(&path).map_err(|e| usage(format!("{target}: {e}")))?;
            return Ok(BlockSink::Directory { dir: path, schema: schema.clone(), next: 0 });
        }
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| usage(format!("{target}: {e}")))?;
        let (file, tmp) = tmp.into_parts();
        Ok(BlockSink::File {
            writer: CsvBlockWriter::new(BufWriter::new(file), schema.clone()),
            tmp,
            target: path,
        })
    }

    fn write(&mut self, block: &Dataset) -> Outcome {
        match self {
            BlockSink::Stdout(w) => {
                w.write_block(block)?;
                w.flush()?;
            }
            BlockSink::Directory { dir, schema, next } => {
                *next += 1;
                let path = dir.join(format!("block-{next:06}.csv"));
                write_csv_path(block, schema, &path)
                    .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            }
            BlockSink::File { writer, .. } => writer.write_block(block)?,
        }
        Ok(())
    }

    fn finish(self) -> Outcome {
        if let BlockSink::File { writer, tmp, target } = self {
            let mut out = writer.into_inner()?;
            out.flush()?;
            tmp.persist(&target)
                .map_err(|e| usage(format!("{}: {}", target.display(), e.error)))?;
        }
        Ok(())
    }
}

pub fn stream(a: StreamArgs) -> Outcome {
    let epsilon = check_epsilon(a.epsilon, "--epsilon")?;
    let window_size = check_window(a.window_size, "--window-size")?;
    if a.threshold < 1 {
        return Err(usage(format!("--threshold {}: must be at least 1", a.threshold)));
    }
    let schema = schema(&a.csv)?;
    let seed = resolve_seed(a.seed);

    let input: Box<dyn Read> = if a.input == "-" {
        Box::new(io::stdin().lock())
    } else {
        let f = File::open(&a.input).map_err(|e| usage(format!("{}: {e}", a.input)))?;
        Box::new(BufReader::new(f))
    };
    let mut reader = CsvRowReader::new(input, schema.clone())?;
    let config = PerturbationConfig::new(epsilon, window_size)
        .with_threshold(a.threshold)
        .with_seed(seed);
    let mut engine = StreamPerturber::new(config)?;
    let mut sink = BlockSink::open(&a.output, &schema)?;

    let start = Instant::now();
    let (mut blocks, mut released) = (0usize, 0usize);
    let mut emit = |sink: &mut BlockSink, block: Dataset| -> Outcome {
        sink.write(&block)?;
        blocks += 1;
        released += block.rows();
        eprintln!("seal: released block {blocks} ({} rows)", block.rows());
        Ok(())
    };
    while let Some(chunk) = reader.next_chunk(window_size)? {
        for block in engine.ingest(&chunk)? {
            emit(&mut sink, block)?;
        }
    }
    let mut refused = 0;
    match engine.flush() {
        Ok(Some(block)) => emit(&mut sink, block)?,
        Ok(None) => {}
        Err(seal::Error::BelowMinimum { rows }) if blocks > 0 => {
            eprintln!("seal: warning: withheld the last {rows} rows, too few to perturb on their own");
            refused = rows;
        }
        Err(e) => return Err(e.into()),
    }
    sink.finish()?;

    let elapsed = start.elapsed().as_secs_f64();
    eprintln!("rows_read={}", reader.rows_read());
    eprintln!("rows_released={released}");
    eprintln!("rows_withheld={refused}");
    eprintln!("blocks={blocks}");
    eprintln!("seed={seed}");
    eprintln!("wall_time_s={elapsed:.6}");
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Outcome {
    let mut attacks: Vec<String> = a.attacks.iter().map(|s| s.trim().to_ascii_lowercase()).collect();
    if attacks.is_empty() && !a.knn {
        attacks = vec!["ni".into(), "io".into()];
    }
    if let Some(bad) = attacks.iter().find(|s| !matches!(s.as_str(), "ni" | "io")) {
        return Err(usage(format!("--attacks: unknown attack {bad:?} (expected ni, io)")));
    }
    let run_io = attacks.iter().any(|s| s == "io");
    if run_io && !(a.known_fraction > 0.0 && a.known_fraction <= 1.0) {
        return Err(usage(format!("--known-fraction {}: must be in (0, 1]", a.known_fraction)));
    }
    if a.knn && a.folds < 2 {
        return Err(usage(format!("--folds {}: must be at least 2", a.folds)));
    }
    let schema = schema(&a.csv)?;
    let seed = resolve_seed(a.seed);

    let original = read_input(&a.original, &schema)?;
    let perturbed = read_input(&a.perturbed, &schema)?;
    if (original.rows(), original.cols()) != (perturbed.rows(), perturbed.cols()) {
        return Err(usage(format!(
            "shape mismatch: original is {}x{}, perturbed is {}x{}",
            original.rows(),
            original.cols(),
            perturbed.rows(),
            perturbed.cols()
        )));
    }

    let mut report = AttackReport::default();
    if attacks.iter().any(|s| s == "ni") {
        report.naive_inference = Some(naive_inference(&original, &perturbed, Alignment::Positional)?);
    }
    if run_io {
        let mut rng = substream(seed, Purpose::Sampling, 0, 0);
        report.known_io = Some(known_io_attack(
            &original,
            &perturbed,
            a.known_fraction,
            Alignment::Positional,
            &mut rng,
        )?);
        report.known_fraction = Some(a.known_fraction);
    }

    println!("rows={}", original.rows());
    println!("attributes={}", original.cols());
    for (k, v) in report.to_key_values() {
        println!("{k}={v}");
    }
    if a.knn {
        let fold_seed = substream(seed, Purpose::Sampling, 1, 0);
        let before = knn_accuracy(&original, a.folds, &mut fold_seed.clone())?;
        let after = knn_accuracy(&perturbed, a.folds, &mut fold_seed.clone())?;
        println!("classifier={}", before.classifier);
        println!("folds={}", a.folds);
        println!("accuracy_original={:.6}", before.accuracy);
        println!("accuracy_perturbed={:.6}", after.accuracy);
    }
    println!("seed={seed}");

    if let Some(path) = &a.csv_out {
        let mut body = String::from("attribute,ni_std,io_std\n");
        for j in 0..original.cols() {
            let cell = |s: &Option<seal::AttackSummary>| {
                s.as_ref().map_or(String::new(), |s| format!("{:.6}", s.per_attribute[j]))
            };
            let name = original
                .column_names()
                .map_or_else(|| format!("attr{}", j + 1), |n| n[j].clone());
            body.push_str(&format!("{name},{},{}\n", cell(&report.naive_inference), cell(&report.known_io)));
        }
        write_atomic(path, body.as_bytes())?;
    }
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Outcome {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .map_err(|e| usage(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn sweep(a: SweepArgs) -> Outcome {
    let by_epsilon = match (a.epsilons.is_empty(), a.window_sizes.is_empty()) {
        (false, true) => true,
        (true, false) => false,
        _ => return Err(usage("give exactly one of --epsilons or --window-sizes")),
    };
    for &e in &a.epsilons {
        check_epsilon(e, "--epsilons")?;
    }
    for &ws in &a.window_sizes {
        check_window(ws as i64, "--window-sizes")?;
    }
    check_epsilon(a.epsilon, "--epsilon")?;
    if let Some(ws) = a.window_size {
        check_window(ws as i64, "--window-size")?;
    }
    if a.folds < 2 {
        return Err(usage(format!("--folds {}: must be at least 2", a.folds)));
    }
    let schema = schema(&a.csv)?;
    let seed = resolve_seed(a.seed);

    let data = read_input(&a.input, &schema)?;
    let template = PerturbationConfig::new(a.epsilon, a.window_size.unwrap_or(data.rows()));
    let mut rng = substream(seed, Purpose::Sampling, 0, 0);
    let report = if by_epsilon {
        epsilon_sweep(&data, &template, &a.epsilons, a.folds, &mut rng)?
    } else {
        window_sweep(&data, &template, &a.window_sizes, a.folds, &mut rng)?
    };

    let name = if by_epsilon { "epsilon" } else { "window_size" };
    println!("{name:>12}  {:>10}", "accuracy");
    println!("{:>12}  {:>10.4}", "original", report.accuracy);
    for p in &report.sweep {
        println!("{:>12}  {:>10.4}", p.parameter, p.accuracy);
    }
    eprintln!("seal: {} {}-fold, seed {seed}", report.classifier, report.folds);

    if let Some(path) = &a.csv_out {
        let mut body = format!("{name},accuracy\n");
        for p in &report.sweep {
            body.push_str(&format!("{},{:.6}\n", p.parameter, p.accuracy));
        }
        write_atomic(path, body.as_bytes())?;
    }
    Ok(())
}

pub fn bench(a: BenchArgs) -> Outcome {
    if a.rows < MIN_WINDOW {
        return Err(usage(format!("--rows {}: must be at least {MIN_WINDOW}", a.rows)));
    }
    if a.attrs == 0 {
        return Err(usage("--attrs 0: must be at least 1"));
    }
    check_window(a.window_size as i64, "--window-size")?;
    if a.repeats == 0 {
        return Err(usage("--repeats 0: must be at least 1"));
    }
    let r = seal::bench::run(a.rows, a.attrs, a.window_size, a.repeats, a.seed)?;
    println!("window_size={}", r.window_size);
    for (tag, t) in [("base", r.base), ("double_rows", r.double_rows), ("double_attrs", r.double_attrs)] {
        println!(
            "{tag}: rows={} attrs={} seconds={:.6} rows_per_sec={:.0}",
            t.rows,
            t.attrs,
            t.seconds,
            t.rows_per_sec()
        );
    }
    println!("row_ratio={:.3}", r.row_ratio());
    println!("attr_ratio={:.3}", r.attr_ratio());
    Ok(())
}
