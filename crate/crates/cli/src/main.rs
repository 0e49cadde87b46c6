use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use evblob::analytics::{range_estimate, TtcSampler};
use evblob::assoc::TrackId;
use evblob::bench::{run_bench, DEFAULT_SIZES};
use evblob::config::{KeyValues, RunConfig};
use evblob::io::{
    read_gyro, read_tracks, ttc_row, write_events, write_gyro, write_truth, CsvOut, EventReader, Metadata, RANGE_HEADER, TTC_HEADER,
};
use evblob::par::Parallelism;
use evblob::pipeline::{run_track, Sinks};
use evblob::synth::{self, scenarios, Scenario};

#[derive(Parser)]
#[command(name = "evblob", version, about = "Event-camera blob tracker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic event stream with gyro and ground truth.
    Synth(SynthArgs),
    /// Track blobs in an event file.
    Track(TrackArgs),
    /// Inverse time-to-contact for configured track pairs.
    Ttc(DerivedArgs),
    /// Range to configured targets of known diameter.
    Range(DerivedArgs),
    /// Measure tracking throughput over growing stream sizes.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Override a configuration value (repeatable), e.g. --set n_buffer=16
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    gyro: Option<PathBuf>,
    /// flicker or non_flicker
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args)]
struct DerivedArgs {
    #[command(flatten)]
    common: Common,
    /// Track CSV written by `track`
    #[arg(long, conflicts_with = "events")]
    tracks: Option<PathBuf>,
    /// Run the tracker on this event file first
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long, requires = "events")]
    gyro: Option<PathBuf>,
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES)]
    sizes: Vec<u64>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// sequential or rayon (chunk generation only; tracking is sequential)
    #[arg(long, default_value = "rayon")]
    parallelism: Parallelism,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Synth(a) => synth_cmd(a),
        Command::Track(a) => track_cmd(a),
        Command::Ttc(a) => derived_cmd(a, Derived::Ttc),
        Command::Range(a) => derived_cmd(a, Derived::Range),
        Command::Bench(a) => bench_cmd(a),
    }
}

fn layered(common: &Common, extra: &[String]) -> Result<KeyValues> {
    let base = match &common.config {
        Some(p) => KeyValues::from_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => KeyValues::default(),
    };
    let cli = KeyValues::from_pairs(common.overrides.iter().chain(extra))?;
    Ok(base.overlay(&cli))
}

fn out_file(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn synth_scenario(kv: &KeyValues) -> Result<(Scenario, Metadata)> {
    const KNOWN: [&str; 6] = ["synth.scenario", "synth.duration", "synth.rate", "synth.background", "synth.seed", "synth.parallelism"];
    if let Some(k) = kv.keys().find(|k| k.starts_with("synth.") && !KNOWN.contains(k)) {
        bail!("unknown key '{k}'");
    }
    let name = kv.get("synth.scenario").unwrap_or("spinning").to_string();
    let seed: u64 = kv.parsed("synth.seed")?.unwrap_or(1);
    let duration: Option<f64> = kv.parsed("synth.duration")?;
    let rate: Option<f64> = kv.parsed("synth.rate")?;
    let background: Option<f64> = kv.parsed("synth.background")?;

    let scenario = match name.as_str() {
        "spinning" => {
            let mut p = scenarios::SpinningParams::default();
            p.duration = duration.unwrap_or(p.duration);
            p.rate = rate.unwrap_or(p.rate);
            if let Some(bg) = background {
                p.background_fraction = bg / p.rate;
            }
            scenarios::spinning_scenario(&p, seed)?
        }
        "shake" => {
            let mut p = scenarios::ShakeParams::default();
            p.duration = duration.unwrap_or(p.duration);
            p.rate = rate.unwrap_or(p.rate);
            p.background_rate = background.unwrap_or(p.background_rate);
            scenarios::shake_scenario(&p, seed)?
        }
        "taillight" => {
            let mut p = scenarios::TaillightParams::default();
            p.duration = duration.unwrap_or(p.duration);
            p.rate = rate.unwrap_or(p.rate);
            p.background_rate = background.unwrap_or(p.background_rate);
            scenarios::taillight_scenario(&p, seed)?
        }
        "approach" => {
            let mut p = scenarios::ApproachParams::default();
            p.duration = duration.unwrap_or(p.duration);
            p.rate = rate.unwrap_or(p.rate);
            p.background_rate = background.unwrap_or(p.background_rate);
            scenarios::approach_scenario(&p, seed)?
        }
        "edge" => {
            let mut p = scenarios::EdgeParams::default();
            p.duration = duration.unwrap_or(p.duration);
            p.rate = rate.unwrap_or(p.rate);
            p.background_rate = background.unwrap_or(p.background_rate);
            scenarios::edge_scenario(&p, seed)?
        }
        other => bail!("unknown scenario '{other}' (spinning, shake, taillight, approach, edge)"),
    };
    let meta = vec![
        ("synth.scenario".to_string(), name),
        ("synth.seed".to_string(), seed.to_string()),
        ("synth.duration".to_string(), scenario.duration.to_string()),
        ("synth.background".to_string(), scenario.background_rate.to_string()),
        ("width".to_string(), scenario.width.to_string()),
        ("height".to_string(), scenario.height.to_string()),
    ];
    Ok((scenario, meta))
}

fn synth_cmd(a: SynthArgs) -> Result<()> {
    let seed_override: Vec<String> = a.seed.map(|s| format!("synth.seed={s}")).into_iter().collect();
    let kv = layered(&a.common, &seed_override)?;
    let (scenario, meta) = synth_scenario(&kv)?;
    let par = kv.parsed::<Parallelism>("synth.parallelism")?.unwrap_or_default();
    let out = synth::generate(&scenario, par)?;

    let dir = &a.common.out_dir;
    fs::create_dir_all(dir)?;
    write_events(out_file(dir, "events.csv")?, &meta, &out.events)?;
    write_gyro(out_file(dir, "gyro.csv")?, &meta, &out.gyro)?;
    for (i, trace) in out.truth.iter().enumerate() {
        let name = if i == 0 { "truth.csv".to_string() } else { format!("truth_{i}.csv") };
        let mut m = meta.clone();
        m.push(("target".into(), i.to_string()));
        write_truth(out_file(dir, &name)?, &m, trace)?;
    }
    println!(
        "wrote {} events, {} gyro samples, {} truth trace(s) to {}",
        out.events.len(),
        out.gyro.len(),
        out.truth.len(),
        dir.display()
    );
    Ok(())
}

fn run_config(common: &Common, mode: &Option<String>) -> Result<RunConfig> {
    let extra: Vec<String> = mode.iter().map(|m| format!("mode={m}")).collect();
    Ok(RunConfig::from_kv(&layered(common, &extra)?)?)
}

fn track_into(common: &Common, config: &RunConfig, events: &Path, gyro: Option<&Path>) -> Result<()> {
    let gyro_samples = match gyro {
        Some(p) => read_gyro(p).with_context(|| format!("reading {}", p.display()))?,
        None => Vec::new(),
    };
    let reader = EventReader::open(events, config.tracker.out_of_order).with_context(|| format!("opening {}", events.display()))?;
    let mut extra: Metadata = vec![("events".into(), events.display().to_string())];
    if let Some(g) = gyro {
        extra.push(("gyro".into(), g.display().to_string()));
    }
    let dir = &common.out_dir;
    fs::create_dir_all(dir)?;
    let sinks = Sinks {
        tracks: out_file(dir, "tracks.csv")?,
        summary: out_file(dir, "summary.csv")?,
        ttc: if config.ttc_pairs.is_empty() { None } else { Some(out_file(dir, "ttc.csv")?) },
        range: if config.range_targets.is_empty() { None } else { Some(out_file(dir, "range.csv")?) },
    };
    let s = run_track(config, reader, gyro_samples, &extra, sinks)?;
    let c = s.counters;
    println!(
        "events {} matched {} unmatched {} dropped {} rejected {} ttc {} -> {}",
        c.events,
        c.matched,
        c.unmatched,
        c.dropped_out_of_order,
        c.rejected_updates,
        s.ttc_samples,
        dir.display()
    );
    Ok(())
}

fn track_cmd(a: TrackArgs) -> Result<()> {
    let config = run_config(&a.common, &a.mode)?;
    track_into(&a.common, &config, &a.events, a.gyro.as_deref())
}

enum Derived {
    Ttc,
    Range,
}

fn derived_cmd(a: DerivedArgs, what: Derived) -> Result<()> {
    let config = run_config(&a.common, &a.mode)?;
    match what {
        Derived::Ttc if config.ttc_pairs.is_empty() => bail!("no ttc_pair configured"),
        Derived::Range if config.range_targets.is_empty() => bail!("no range_target configured"),
        _ => {}
    }
    if let Some(events) = &a.events {
        return track_into(&a.common, &config, events, a.gyro.as_deref());
    }
    let Some(tracks) = &a.tracks else {
        bail!("either --tracks or --events is required");
    };
    let rows = read_tracks(tracks).with_context(|| format!("reading {}", tracks.display()))?;
    let mut meta = config.to_metadata();
    meta.push(("tracks".into(), tracks.display().to_string()));
    let dir = &a.common.out_dir;
    fs::create_dir_all(dir)?;
    match what {
        Derived::Ttc => {
            let mut out = CsvOut::new(out_file(dir, "ttc.csv")?, &meta, &TTC_HEADER)?;
            let mut samplers: Vec<TtcSampler> = config
                .ttc_pairs
                .iter()
                .map(|&(l, r)| TtcSampler::new(TrackId(l), TrackId(r), config.ttc_threshold))
                .collect();
            let mut n = 0u64;
            for row in &rows {
                for s in samplers.iter_mut() {
                    if let Some(sample) = s.push_state(row.t, TrackId(row.id), row.state) {
                        out.row(ttc_row(s.left.0, s.right.0, &sample))?;
                        n += 1;
                    }
                }
            }
            out.finish()?;
            println!("wrote {n} ttc samples to {}", dir.join("ttc.csv").display());
        }
        Derived::Range => {
            let mut out = CsvOut::new(out_file(dir, "range.csv")?, &meta, &RANGE_HEADER)?;
            let mut n = 0u64;
            for row in &rows {
                for t in config.range_targets.iter().filter(|t| t.id == row.id) {
                    let r = range_estimate(&row.state, t.diameter_m, &config.tracker.intrinsics)?;
                    out.row([row.t.to_string(), row.id.to_string(), r.to_string()])?;
                    n += 1;
                }
            }
            out.finish()?;
            println!("wrote {n} range samples to {}", dir.join("range.csv").display());
        }
    }
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    let report = run_bench(&a.sizes, a.seed, a.parallelism)?;
    for p in &report.points {
        println!(
            "N={:>10}  {:>9.3} s  {:>12.0} ev/s  matched {}",
            p.events,
            p.elapsed.as_secs_f64(),
            p.events_per_sec(),
            p.matched
        );
    }
    println!("scaling exponent {:.3}", report.exponent);
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir)?;
        let meta = vec![
            ("seed".to_string(), a.seed.to_string()),
            ("exponent".to_string(), report.exponent.to_string()),
        ];
        let mut out = CsvOut::new(out_file(dir, "bench.csv")?, &meta, &["events", "seconds", "events_per_sec", "matched"])?;
        for p in &report.points {
            out.row([
                p.events.to_string(),
                p.elapsed.as_secs_f64().to_string(),
                p.events_per_sec().to_string(),
                p.matched.to_string(),
            ])?;
        }
        out.finish()?;
    }
    if !(0.9..=1.1).contains(&report.exponent) && report.points.len() > 1 {
        eprintln!("warning: scaling exponent {:.3} outside [0.9, 1.1]", report.exponent);
    }
    Ok(())
}
