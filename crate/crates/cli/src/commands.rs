use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::UdpSocket;
use std::path::Path;

use anyhow::{Context, Result};
use sslkit::formats::{self, RadioRecord, VisionRecord};
use sslkit::radio;
use sslkit::simworld::{sweep, PassExperiment};
use sslkit::tactics::assign_roles;
use sslkit::tracker::{Tracker, WorldSnapshot};
use sslkit::{intercept_heatmap, Execution, FieldGeometry, InterceptSetup, Vec2};

use crate::files::{self, AssignScenario, InterceptScenario};
use crate::{CodecDirection, HeatFormat, HeatmapArgs, Origin, PassrateArgs, TrackArgs, Units};

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn setup(exp: &PassExperiment, field: FieldGeometry) -> InterceptSetup {
    InterceptSetup {
        limits: exp.sim.limits,
        ball: exp.sim.ball_model,
        params: exp.intercept,
        field,
    }
}

pub fn heatmap(args: &HeatmapArgs, exp: &PassExperiment, out: Option<&str>) -> Result<()> {
    let field = FieldGeometry::new(
        args.field_length.unwrap_or(exp.sim.field.length),
        args.field_width.unwrap_or(exp.sim.field.width),
    )?;
    let scale = match args.units {
        Units::Mm => 1.0,
        Units::Cm => 10.0,
    };
    let given = Vec2::new(args.ball_x, args.ball_y) * scale;
    let ball_p = match args.origin {
        Origin::Corner => field.from_corner(given),
        Origin::Center => given,
    };
    let ball_v = match args.ball_speed {
        Some(speed) => Vec2::from_angle(args.ball_heading.to_radians()) * speed,
        None => Vec2::new(args.ball_vx.unwrap_or(0.0), args.ball_vy.unwrap_or(0.0)),
    };
    let (nx, ny) = args.grid;
    let map = intercept_heatmap(
        ball_p,
        ball_v,
        nx,
        ny,
        &setup(exp, field),
        execution(args.sequential),
    )
    .context("heat map")?;

    let (format, path) = match out {
        None => (args.format.unwrap_or(HeatFormat::Csv), None),
        Some("csv") => (HeatFormat::Csv, None),
        Some("pgm") => (HeatFormat::Pgm, None),
        Some(p) => {
            let by_ext = if p.ends_with(".pgm") {
                HeatFormat::Pgm
            } else {
                HeatFormat::Csv
            };
            (args.format.unwrap_or(by_ext), Some(Path::new(p)))
        }
    };
    let bytes = match format {
        HeatFormat::Csv => map.to_csv().into_bytes(),
        HeatFormat::Pgm => map.to_pgm(),
    };
    files::emit(path, &bytes)?;

    if let Some((i, best)) = map
        .cells
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.t_best.total_cmp(&b.1.t_best))
    {
        let c = map.cell_center(i % nx, i / nx);
        eprintln!(
            "ball ({:.0}, {:.0}) mm centered, v ({:.0}, {:.0}) mm/s; fastest cell ({:.0}, {:.0}) mm: {:.3} s",
            ball_p.x, ball_p.y, ball_v.x, ball_v.y, c.x, c.y, best.t_best
        );
    }
    Ok(())
}

pub fn intercept(scenario: &Path, exp: &PassExperiment, out: Option<&str>) -> Result<()> {
    let sc: InterceptScenario = files::load(scenario)?;
    let res = setup(exp, exp.sim.field)
        .intercept(
            sc.ball.position,
            sc.ball.velocity,
            sc.robot.position,
            sc.robot.velocity,
        )
        .context("interception")?;
    let mut text = serde_json::to_string_pretty(&res)?;
    text.push('\n');
    files::emit(out.map(Path::new), text.as_bytes())
}

pub fn passrate(args: &PassrateArgs, exp: &PassExperiment, out: Option<&str>) -> Result<()> {
    let points = sweep(
        exp,
        args.sweep,
        &args.values,
        args.trials,
        execution(args.sequential),
    );
    let mut csv = format!("{},success_rate,trials\n", args.sweep.name());
    for p in points {
        csv.push_str(&format!("{},{:.4},{}\n", p.value, p.success_rate, args.trials));
    }
    files::emit(out.map(Path::new), csv.as_bytes())
}

fn write_snapshot(w: &mut dyn Write, snap: WorldSnapshot, valid_only: bool) -> Result<()> {
    let mut snap = snap;
    if valid_only {
        snap.objects.retain(|o| o.valid);
    }
    serde_json::to_writer(&mut *w, &snap)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn track(args: &TrackArgs, exp: &PassExperiment, out: Option<&str>) -> Result<()> {
    let mut tracker = Tracker::new(exp.tracker);
    if let Some(path) = &args.cameras {
        let cams = formats::parse_cameras(&files::read(path)?)
            .with_context(|| format!("malformed file {}", path.display()))?;
        for cam in cams {
            tracker = tracker.with_camera(cam);
        }
    }
    let mut w: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot write {p}"))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };

    if let Some(path) = &args.frames {
        let frames = formats::parse_vision_log(&files::read(path)?)
            .with_context(|| format!("malformed file {}", path.display()))?;
        for tick in formats::group_ticks(frames) {
            if let Err(e) = tracker.ingest_tick(&tick) {
                eprintln!("skipping tick at t={}: {e}", tick[0].t);
                continue;
            }
            write_snapshot(&mut w, tracker.snapshot(), args.valid_only)?;
        }
    } else if let Some(port) = args.udp {
        let socket = UdpSocket::bind((args.bind.as_str(), port))
            .with_context(|| format!("cannot bind {}:{port}", args.bind))?;
        let mut buf = vec![0u8; 65536];
        let mut seen = 0;
        while args.max_frames.is_none_or(|m| seen < m) {
            let (n, from) = socket.recv_from(&mut buf)?;
            seen += 1;
            let rec: VisionRecord = match serde_json::from_slice(&buf[..n]) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("dropping datagram from {from}: {e}");
                    continue;
                }
            };
            if let Err(e) = tracker.ingest_frame(&rec.to_frame()) {
                eprintln!("dropping datagram from {from}: {e}");
                continue;
            }
            write_snapshot(&mut w, tracker.snapshot(), args.valid_only)?;
            w.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn codec(direction: CodecDirection, input: &Path, out: Option<&str>) -> Result<()> {
    let text = files::read(input)?;
    let malformed = || format!("malformed file {}", input.display());
    let output = match direction {
        CodecDirection::Encode => {
            let rec: RadioRecord = serde_json::from_str(&text).with_context(malformed)?;
            let packet = rec.to_packet().with_context(malformed)?;
            let bytes = radio::encode(&packet).with_context(malformed)?;
            formats::to_hex(&bytes) + "\n"
        }
        CodecDirection::Decode => {
            let bytes = formats::parse_hex(&text).with_context(malformed)?;
            let packet = radio::decode(&bytes).with_context(malformed)?;
            serde_json::to_string_pretty(&RadioRecord::from(&packet))? + "\n"
        }
    };
    files::emit(out.map(Path::new), output.as_bytes())
}

pub fn assign(scenario: &Path, exp: &PassExperiment, out: Option<&str>) -> Result<()> {
    let sc: AssignScenario = files::load(scenario)?;
    let robots: Vec<(Vec2, Vec2)> = sc.robots.iter().map(|b| (b.position, b.velocity)).collect();
    let a = assign_roles(&robots, &sc.targets, &setup(exp, exp.sim.field), sc.mode)
        .context("role assignment")?;
    let mut table = String::from("robot,target,cost\n");
    for (robot, &target) in a.targets.iter().enumerate() {
        table.push_str(&format!("{robot},{target},{:.6}\n", a.costs[robot][target]));
    }
    table.push_str(&format!("total,,{:.6}\n", a.total));
    files::emit(out.map(Path::new), table.as_bytes())
}
