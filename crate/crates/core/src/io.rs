//! CSV loaders and writers.
//!
//! | file | header |
//! |------|--------|
//! | network | `edge_id,tail,head,length_m,speed_limit_kmh` (limit blank if unknown) |
//! | schedule | `day_class,start_hhmm,end_hhmm,tag` |
//! | trips | `trip_id,seq,edge_id,day_class,enter_hhmmss,exit_hhmmss` |
//! | costs | `trip_id,cost` |
//! | weights | `edge_id,tag,cost_per_meter,annotated_flag` |
//!
//! Loaders report every violating row rather than stopping at the first.
//! Floats are written in shortest round-trip form, so writing and loading a
//! value gives back the same bits.

use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use crate::error::{Diagnostic, DiagnosticKind, Error, Result};
use crate::graph::{CostVector, DayClass, Edge, RoadGraph, TagRule, TagSchedule};
use crate::pagerank::{DegreeStats, PageRankHistogram, PageRankVector};
use crate::synth::{minutes_from_seconds, SyntheticData};
use crate::trips::{LinkRecord, Trip, TripSet};

pub const NETWORK_HEADER: [&str; 5] = ["edge_id", "tail", "head", "length_m", "speed_limit_kmh"];
pub const SCHEDULE_HEADER: [&str; 4] = ["day_class", "start_hhmm", "end_hhmm", "tag"];
pub const TRIPS_HEADER: [&str; 6] = [
    "trip_id",
    "seq",
    "edge_id",
    "day_class",
    "enter_hhmmss",
    "exit_hhmmss",
];
pub const COSTS_HEADER: [&str; 2] = ["trip_id", "cost"];
pub const WEIGHTS_HEADER: [&str; 4] = ["edge_id", "tag", "cost_per_meter", "annotated_flag"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Validation(vec![Diagnostic {
            file: path.to_path_buf(),
            line: 0,
            kind: DiagnosticKind::MalformedRow,
            reason: format!("{other:?}"),
        }]),
    }
}

/// Collects diagnostics for one file.
struct Problems {
    file: PathBuf,
    list: Vec<Diagnostic>,
}

impl Problems {
    fn new(file: &Path) -> Self {
        Problems {
            file: file.to_path_buf(),
            list: Vec::new(),
        }
    }

    fn push(&mut self, line: usize, kind: DiagnosticKind, reason: impl Into<String>) {
        self.list.push(Diagnostic {
            file: self.file.clone(),
            line,
            kind,
            reason: reason.into(),
        });
    }

    fn finish(self) -> Result<()> {
        if self.list.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(self.list))
        }
    }
}

/// Reads a headed CSV, checking the header, and returns `(line, fields)`
/// for every row with the expected field count.
fn read_rows(path: &Path, header: &[&str], problems: &mut Problems) -> Result<Vec<(usize, Vec<String>)>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let found: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        problems.push(
            1,
            DiagnosticKind::MalformedRow,
            format!("expected header {:?}, found {:?}", header.join(","), found.join(",")),
        );
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != header.len() {
            problems.push(
                line,
                DiagnosticKind::MalformedRow,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            );
            continue;
        }
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

/// `HHMM` or `HH:MM` to minutes; `2400` is allowed as an end of day.
pub fn parse_hhmm(s: &str) -> Option<u32> {
    let (h, m) = match s.split_once(':') {
        Some((h, m)) => (h, m),
        None if s.len() == 4 => s.split_at(2),
        None => return None,
    };
    let (h, m): (u32, u32) = (h.parse().ok()?, m.parse().ok()?);
    (m < 60 && h * 60 + m <= 1440).then_some(h * 60 + m)
}

pub fn format_hhmm(minutes: u32) -> String {
    format!("{:02}{:02}", minutes / 60, minutes % 60)
}

/// `HH:MM:SS` to seconds from midnight; `24:00:00` is the latest value.
pub fn parse_hhmmss(s: &str) -> Option<u32> {
    let mut it = s.split(':');
    let h: u32 = it.next()?.parse().ok()?;
    let m: u32 = it.next()?.parse().ok()?;
    let sec: u32 = it.next()?.parse().ok()?;
    if it.next().is_some() || m >= 60 || sec >= 60 {
        return None;
    }
    let total = h * 3600 + m * 60 + sec;
    (total <= 86_400).then_some(total)
}

pub fn format_hhmmss(seconds: u32) -> String {
    format!(
        "{:02}:{:02}:{:02}",
        seconds / 3600,
        (seconds / 60) % 60,
        seconds % 60
    )
}

pub fn load_schedule(path: &Path) -> Result<TagSchedule> {
    let mut problems = Problems::new(path);
    let rows = read_rows(path, &SCHEDULE_HEADER, &mut problems)?;
    let mut tags: Vec<String> = Vec::new();
    let mut rules = Vec::new();
    for (line, f) in rows {
        let day = f[0].parse::<DayClass>();
        let (start, end) = (parse_hhmm(&f[1]), parse_hhmm(&f[2]));
        match (day, start, end) {
            (Ok(day), Some(start), Some(end)) => {
                if f[3].is_empty() {
                    problems.push(line, DiagnosticKind::MalformedRow, "empty tag name");
                    continue;
                }
                if start >= end {
                    problems.push(
                        line,
                        DiagnosticKind::ScheduleNotPartition,
                        format!("empty interval {}-{}", f[1], f[2]),
                    );
                    continue;
                }
                let tag = match tags.iter().position(|t| *t == f[3]) {
                    Some(i) => i,
                    None => {
                        tags.push(f[3].clone());
                        tags.len() - 1
                    }
                };
                rules.push(TagRule {
                    day,
                    start,
                    end,
                    tag,
                });
            }
            _ => problems.push(
                line,
                DiagnosticKind::MalformedRow,
                format!("cannot parse schedule row {:?}", f.join(",")),
            ),
        }
    }
    problems.finish()?;
    TagSchedule::new(tags, rules).map_err(|e| {
        Error::Validation(vec![Diagnostic {
            file: path.to_path_buf(),
            line: 0,
            kind: DiagnosticKind::ScheduleNotPartition,
            reason: e.to_string(),
        }])
    })
}

pub fn load_network(path: &Path, schedule: TagSchedule) -> Result<RoadGraph> {
    let mut problems = Problems::new(path);
    let rows = read_rows(path, &NETWORK_HEADER, &mut problems)?;
    let mut vertices: Vec<String> = Vec::new();
    let mut vertex_ids: HashMap<String, usize> = HashMap::new();
    let mut edge_lines: HashMap<String, usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut vertex = |name: &str| -> usize {
        *vertex_ids.entry(name.to_string()).or_insert_with(|| {
            vertices.push(name.to_string());
            vertices.len() - 1
        })
    };
    for (line, f) in rows {
        if f[0].is_empty() || f[1].is_empty() || f[2].is_empty() {
            problems.push(line, DiagnosticKind::MalformedRow, "empty identifier");
            continue;
        }
        if let Some(first) = edge_lines.get(&f[0]) {
            problems.push(
                line,
                DiagnosticKind::Duplicate,
                format!("edge {} already defined on line {first}", f[0]),
            );
            continue;
        }
        let Ok(length) = f[3].parse::<f64>() else {
            problems.push(line, DiagnosticKind::MalformedRow, format!("bad length {:?}", f[3]));
            continue;
        };
        if !(length > 0.0 && length.is_finite()) {
            problems.push(line, DiagnosticKind::InvalidValue, format!("length {length} must be positive"));
            continue;
        }
        let speed_limit = if f[4].is_empty() {
            None
        } else {
            match f[4].parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Some(v),
                Ok(v) => {
                    problems.push(line, DiagnosticKind::InvalidValue, format!("speed limit {v} must be positive"));
                    continue;
                }
                Err(_) => {
                    problems.push(line, DiagnosticKind::MalformedRow, format!("bad speed limit {:?}", f[4]));
                    continue;
                }
            }
        };
        if f[1] == f[2] {
            problems.push(line, DiagnosticKind::InvalidValue, format!("edge {} is a self loop", f[0]));
            continue;
        }
        edge_lines.insert(f[0].clone(), line);
        edges.push(Edge {
            id: f[0].clone(),
            tail: vertex(&f[1]),
            head: vertex(&f[2]),
            length,
            speed_limit,
        });
    }
    problems.finish()?;
    RoadGraph::new(vertices, edges, schedule)
}

/// Loads trips and their costs. Trips keep the order of first appearance in
/// the trips file; records are ordered by `seq`.
pub fn load_trips(trips_path: &Path, costs_path: &Path, graph: &RoadGraph) -> Result<TripSet> {
    let mut cost_problems = Problems::new(costs_path);
    let cost_rows = read_rows(costs_path, &COSTS_HEADER, &mut cost_problems)?;
    let mut costs: HashMap<String, (f64, usize)> = HashMap::new();
    for (line, f) in cost_rows {
        let cost = match f[1].parse::<f64>() {
            Ok(c) if c >= 0.0 && c.is_finite() => c,
            Ok(c) => {
                cost_problems.push(line, DiagnosticKind::InvalidValue, format!("cost {c} must be non-negative"));
                continue;
            }
            Err(_) => {
                cost_problems.push(line, DiagnosticKind::MalformedRow, format!("bad cost {:?}", f[1]));
                continue;
            }
        };
        if let Some((_, first)) = costs.get(&f[0]) {
            cost_problems.push(
                line,
                DiagnosticKind::Duplicate,
                format!("trip {} already has a cost on line {first}", f[0]),
            );
            continue;
        }
        costs.insert(f[0].clone(), (cost, line));
    }

    let mut problems = Problems::new(trips_path);
    let rows = read_rows(trips_path, &TRIPS_HEADER, &mut problems)?;
    let mut order: Vec<String> = Vec::new();
    // trip id -> (seq, line, record)
    let mut grouped: HashMap<String, Vec<(u64, usize, LinkRecord)>> = HashMap::new();
    for (line, f) in rows {
        let Ok(seq) = f[1].parse::<u64>() else {
            problems.push(line, DiagnosticKind::MalformedRow, format!("bad seq {:?}", f[1]));
            continue;
        };
        let Some(edge) = graph.edge_index(&f[2]) else {
            problems.push(line, DiagnosticKind::DanglingReference, format!("unknown edge_id {:?}", f[2]));
            continue;
        };
        let Ok(day) = f[3].parse::<DayClass>() else {
            problems.push(line, DiagnosticKind::MalformedRow, format!("bad day_class {:?}", f[3]));
            continue;
        };
        let (Some(enter), Some(exit)) = (parse_hhmmss(&f[4]), parse_hhmmss(&f[5])) else {
            problems.push(
                line,
                DiagnosticKind::MalformedRow,
                format!("bad timestamps {:?}, {:?}", f[4], f[5]),
            );
            continue;
        };
        if exit <= enter {
            problems.push(
                line,
                DiagnosticKind::NonMonotoneTime,
                format!("exit {} is not after enter {}", f[5], f[4]),
            );
            continue;
        }
        let rec = LinkRecord {
            edge,
            day,
            enter: minutes_from_seconds(enter),
            exit: minutes_from_seconds(exit),
        };
        let list = grouped.entry(f[0].clone()).or_insert_with(|| {
            order.push(f[0].clone());
            Vec::new()
        });
        list.push((seq, line, rec));
    }

    let mut trips = Vec::with_capacity(order.len());
    for id in &order {
        let mut recs = grouped.remove(id).unwrap_or_default();
        recs.sort_by_key(|r| r.0);
        let mut ok = true;
        for w in recs.windows(2) {
            let ((s0, _, r0), (s1, l1, r1)) = (&w[0], &w[1]);
            if s0 == s1 {
                problems.push(*l1, DiagnosticKind::Duplicate, format!("trip {id} repeats seq {s1}"));
                ok = false;
            } else if r0.day != r1.day || r0.exit > r1.enter {
                problems.push(
                    *l1,
                    DiagnosticKind::NonMonotoneTime,
                    format!("trip {id} record {s1} starts before record {s0} ends"),
                );
                ok = false;
            }
        }
        let Some(&(cost, _)) = costs.get(id) else {
            let line = recs.first().map_or(0, |r| r.1);
            problems.push(line, DiagnosticKind::MissingCost, format!("trip {id} has no cost"));
            continue;
        };
        if ok {
            trips.push(Trip {
                id: id.clone(),
                records: recs.into_iter().map(|r| r.2).collect(),
                cost,
            });
        }
    }
    let mut orphans: Vec<(usize, &String)> = costs
        .iter()
        .filter(|(id, _)| !order.contains(id))
        .map(|(id, &(_, line))| (line, id))
        .collect();
    orphans.sort();
    for (line, id) in orphans {
        cost_problems.push(line, DiagnosticKind::MissingCost, format!("cost for trip {id} which has no records"));
    }
    let mut all = problems.list;
    all.extend(cost_problems.list);
    if !all.is_empty() {
        return Err(Error::Validation(all));
    }
    TripSet::new(graph, trips)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub network: PathBuf,
    pub schedule: PathBuf,
    pub trips: PathBuf,
    pub costs: PathBuf,
}

impl DatasetPaths {
    /// The file names `synth` writes into a directory.
    pub fn in_dir(dir: &Path) -> Self {
        DatasetPaths {
            network: dir.join("network.csv"),
            schedule: dir.join("schedule.csv"),
            trips: dir.join("trips.csv"),
            costs: dir.join("costs.csv"),
        }
    }
}

pub fn load_dataset(paths: &DatasetPaths) -> Result<(RoadGraph, TripSet)> {
    let schedule = load_schedule(&paths.schedule)?;
    let graph = load_network(&paths.network, schedule)?;
    let trips = load_trips(&paths.trips, &paths.costs, &graph)?;
    Ok((graph, trips))
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_all<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_schedule(path: &Path, schedule: &TagSchedule) -> Result<()> {
    write_all(
        path,
        &SCHEDULE_HEADER,
        schedule.rules().iter().map(|r| {
            [
                r.day.as_str().to_string(),
                format_hhmm(r.start),
                format_hhmm(r.end),
                schedule.tag_name(r.tag).to_string(),
            ]
        }),
    )
}

pub fn write_network(path: &Path, graph: &RoadGraph) -> Result<()> {
    let v = graph.vertices();
    write_all(
        path,
        &NETWORK_HEADER,
        graph.edges().iter().map(|e| {
            [
                e.id.clone(),
                v[e.tail].clone(),
                v[e.head].clone(),
                e.length.to_string(),
                e.speed_limit.map_or(String::new(), |s| s.to_string()),
            ]
        }),
    )
}

fn seconds_of(minutes: f64) -> u32 {
    (minutes * 60.0).round() as u32
}

/// Writes trips and costs. Timestamps are rounded to whole seconds.
pub fn write_trips(trips_path: &Path, costs_path: &Path, trips: &TripSet, graph: &RoadGraph) -> Result<()> {
    write_all(
        trips_path,
        &TRIPS_HEADER,
        trips.iter().flat_map(|t| {
            t.records.iter().enumerate().map(move |(i, r)| {
                [
                    t.id.clone(),
                    i.to_string(),
                    graph.edge(r.edge).id.clone(),
                    r.day.as_str().to_string(),
                    format_hhmmss(seconds_of(r.enter)),
                    format_hhmmss(seconds_of(r.exit)),
                ]
            })
        }),
    )?;
    write_all(
        costs_path,
        &COSTS_HEADER,
        trips.iter().map(|t| [t.id.clone(), t.cost.to_string()]),
    )
}

pub fn write_weights(path: &Path, graph: &RoadGraph, d: &CostVector, annotated: &[bool]) -> Result<()> {
    let layout = graph.layout();
    if d.layout() != layout || annotated.len() != layout.len() {
        return Err(Error::contract("weights do not match the graph layout"));
    }
    let schedule = graph.schedule();
    write_all(
        path,
        &WEIGHTS_HEADER,
        (0..graph.num_edges()).flat_map(|e| {
            (0..graph.num_tags()).map(move |k| {
                [
                    graph.edge(e).id.clone(),
                    schedule.tag_name(k).to_string(),
                    d.get(e, k).to_string(),
                    u8::from(annotated[layout.index(e, k)]).to_string(),
                ]
            })
        }),
    )
}

/// Loads a weights file; every `(edge, tag)` pair must appear exactly once.
pub fn load_weights(path: &Path, graph: &RoadGraph) -> Result<(CostVector, Vec<bool>)> {
    let mut problems = Problems::new(path);
    let rows = read_rows(path, &WEIGHTS_HEADER, &mut problems)?;
    let layout = graph.layout();
    let mut d = CostVector::zeros(layout);
    let mut flags = vec![false; layout.len()];
    let mut seen = vec![false; layout.len()];
    for (line, f) in rows {
        let Some(e) = graph.edge_index(&f[0]) else {
            problems.push(line, DiagnosticKind::DanglingReference, format!("unknown edge_id {:?}", f[0]));
            continue;
        };
        let Some(k) = graph.schedule().tag_index(&f[1]) else {
            problems.push(line, DiagnosticKind::DanglingReference, format!("unknown tag {:?}", f[1]));
            continue;
        };
        let (Ok(v), Ok(flag)) = (f[2].parse::<f64>(), f[3].parse::<u8>()) else {
            problems.push(line, DiagnosticKind::MalformedRow, format!("bad weight row {:?}", f.join(",")));
            continue;
        };
        let i = layout.index(e, k);
        if seen[i] {
            problems.push(line, DiagnosticKind::Duplicate, format!("repeated entry {},{}", f[0], f[1]));
            continue;
        }
        seen[i] = true;
        d.values_mut()[i] = v;
        flags[i] = flag != 0;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        let (e, k) = layout.split(i);
        problems.push(
            0,
            DiagnosticKind::MissingCost,
            format!(
                "no weight for edge {} tag {}",
                graph.edge(e).id,
                graph.schedule().tag_name(k)
            ),
        );
    }
    problems.finish()?;
    Ok((d, flags))
}

pub fn write_histogram(path: &Path, hist: &PageRankHistogram) -> Result<()> {
    write_all(
        path,
        &["bucket", "percentage"],
        hist.percentages
            .iter()
            .enumerate()
            .map(|(b, p)| [(b + 1).to_string(), p.to_string()]),
    )
}

/// One row per dual vertex, named by its primal edge id.
pub fn write_pagerank(path: &Path, graph: &RoadGraph, pr: &PageRankVector) -> Result<()> {
    write_all(
        path,
        &["dual_vertex_id", "pagerank"],
        pr.values
            .iter()
            .enumerate()
            .map(|(u, v)| [graph.edge(u).id.clone(), v.to_string()]),
    )
}

/// Single-row summary: vertices, edges, max in/out degree, average degree.
pub fn write_degree_stats(path: &Path, stats: &DegreeStats) -> Result<()> {
    write_all(
        path,
        &["vertices", "edges", "max_in_degree", "max_out_degree", "avg_degree"],
        [[
            stats.vertices.to_string(),
            stats.edges.to_string(),
            stats.max_in.to_string(),
            stats.max_out.to_string(),
            stats.avg_degree.to_string(),
        ]],
    )
}

/// Percentage of dual vertices per in- and out-degree.
pub fn write_degree_histogram(path: &Path, stats: &DegreeStats) -> Result<()> {
    let n = stats.in_hist.len().max(stats.out_hist.len());
    write_all(
        path,
        &["degree", "in_percentage", "out_percentage"],
        (0..n).map(|d| {
            [
                d.to_string(),
                stats.in_hist.get(d).copied().unwrap_or(0.0).to_string(),
                stats.out_hist.get(d).copied().unwrap_or(0.0).to_string(),
            ]
        }),
    )
}

/// Writes a generated dataset plus `truth.csv` (ground truth in the weights
/// format, every entry flagged) into `dir`.
pub fn write_synthetic(dir: &Path, data: &SyntheticData) -> Result<DatasetPaths> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let paths = DatasetPaths::in_dir(dir);
    write_schedule(&paths.schedule, data.graph.schedule())?;
    write_network(&paths.network, &data.graph)?;
    write_trips(&paths.trips, &paths.costs, &data.trips, &data.graph)?;
    let all = vec![true; data.graph.layout().len()];
    write_weights(&dir.join("truth.csv"), &data.graph, &data.truth, &all)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_parsing() {
        assert_eq!(parse_hhmm("0700"), Some(420));
        assert_eq!(parse_hhmm("07:00"), Some(420));
        assert_eq!(parse_hhmm("2400"), Some(1440));
        assert_eq!(parse_hhmm("2401"), None);
        assert_eq!(parse_hhmm("0760"), None);
        assert_eq!(parse_hhmm("700"), None);
        assert_eq!(parse_hhmmss("06:50:00"), Some(6 * 3600 + 50 * 60));
        assert_eq!(parse_hhmmss("24:00:00"), Some(86_400));
        assert_eq!(parse_hhmmss("24:00:01"), None);
        assert_eq!(parse_hhmmss("12:00"), None);
        assert_eq!(format_hhmmss(25_261), "07:01:01");
        assert_eq!(format_hhmm(1440), "2400");
    }
}
