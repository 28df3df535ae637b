//! CSV emission for runs, optimizations and comparisons.
//!
//! Floats use fixed precision so identical runs give identical bytes.

use crate::engine::{EventLog, MetricsReport};
use crate::gaopt::{Chromosome, GenerationStats, LinkGraph, RoutingOutcome};
use crate::netmodel::{Commodity, NodeId};
use crate::sentinel::Detector;

fn write_rows(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn detector_header() -> Vec<String> {
    Detector::ALL
        .iter()
        .flat_map(|d| ["tp", "fp", "fn"].map(|s| format!("{}_{s}", d.label())))
        .collect()
}

fn detector_cells(r: &MetricsReport) -> Vec<String> {
    Detector::ALL
        .iter()
        .flat_map(|&d| {
            let c = r.detector(d);
            [c.tp, c.fp, c.fn_].map(|v| v.to_string())
        })
        .collect()
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// One header row and one data row.
pub fn summary_csv(r: &MetricsReport) -> String {
    let mut header = strings(&[
        "delivery_ratio",
        "data_sent",
        "data_delivered",
        "data_dropped",
        "in_flight",
        "control_msgs",
        "blacklist_events",
    ]);
    header.extend(detector_header());
    header.extend(strings(&[
        "max_link_utilization",
        "route_discoveries",
        "linkcheck_indeterminate",
    ]));
    let mut row = vec![
        f6(r.delivery_ratio()),
        r.data_sent.to_string(),
        r.data_delivered.to_string(),
        r.data_dropped.to_string(),
        r.in_flight.to_string(),
        r.control_msgs.to_string(),
        r.blacklist_events.to_string(),
    ];
    row.extend(detector_cells(r));
    row.extend([
        f6(r.max_link_utilization),
        r.route_discoveries.to_string(),
        r.linkcheck_indeterminate.to_string(),
    ]);
    write_rows(&header, &[row])
}

pub fn steps_csv(r: &MetricsReport) -> String {
    let header = strings(&[
        "step",
        "data_sent",
        "data_delivered",
        "data_dropped",
        "in_flight",
        "control_msgs",
        "blacklist_events",
        "accusations",
        "route_discoveries",
        "link_utilization",
    ]);
    let rows: Vec<Vec<String>> = r
        .steps
        .iter()
        .map(|s| {
            vec![
                s.step.to_string(),
                s.data_sent.to_string(),
                s.data_delivered.to_string(),
                s.data_dropped.to_string(),
                s.in_flight.to_string(),
                s.control_msgs.to_string(),
                s.blacklist_events.to_string(),
                s.accusations.to_string(),
                s.route_discoveries.to_string(),
                f6(s.link_utilization),
            ]
        })
        .collect();
    write_rows(&header, &rows)
}

pub fn events_log(log: &EventLog) -> String {
    log.render()
}

/// One row per arm of an attack evaluation.
pub fn comparison_csv(arms: &[(&str, &MetricsReport)]) -> String {
    let mut header = strings(&[
        "defense",
        "delivery_ratio",
        "data_sent",
        "data_delivered",
        "data_dropped",
        "blacklist_events",
        "route_discoveries",
    ]);
    header.extend(detector_header());
    let rows: Vec<Vec<String>> = arms
        .iter()
        .map(|(label, r)| {
            let mut row = vec![
                label.to_string(),
                f6(r.delivery_ratio()),
                r.data_sent.to_string(),
                r.data_delivered.to_string(),
                r.data_dropped.to_string(),
                r.blacklist_events.to_string(),
                r.route_discoveries.to_string(),
            ];
            row.extend(detector_cells(r));
            row
        })
        .collect();
    write_rows(&header, &rows)
}

pub fn weights_csv(graph: &LinkGraph, chrom: &Chromosome) -> String {
    let header = strings(&["node_a", "node_b", "capacity", "weight"]);
    let rows: Vec<Vec<String>> = graph
        .links()
        .iter()
        .zip(&chrom.weights)
        .map(|(l, w)| {
            vec![
                l.key.lo().to_string(),
                l.key.hi().to_string(),
                f6(l.capacity),
                w.to_string(),
            ]
        })
        .collect();
    write_rows(&header, &rows)
}

pub fn history_csv(history: &[GenerationStats]) -> String {
    let header = strings(&["generation", "best_fitness", "mean_fitness", "l1_best", "l2_best"]);
    let rows: Vec<Vec<String>> = history
        .iter()
        .map(|g| {
            vec![
                g.generation.to_string(),
                format!("{:.12}", g.best_fitness),
                format!("{:.12}", g.mean_fitness),
                f6(g.l1_best),
                f6(g.l2_best),
            ]
        })
        .collect();
    write_rows(&header, &rows)
}

/// Path as dash-joined ids, or `-` when absent.
pub fn format_path(p: Option<&[NodeId]>) -> String {
    match p {
        Some(p) => p.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("-"),
        None => "-".to_string(),
    }
}

pub fn paths_csv(commodities: &[Commodity], outcome: &RoutingOutcome) -> String {
    let header = strings(&["commodity", "src", "dst", "demand", "primary", "backup"]);
    let rows: Vec<Vec<String>> = commodities
        .iter()
        .enumerate()
        .map(|(i, c)| {
            vec![
                c.cluster.to_string(),
                c.src.to_string(),
                c.dst.to_string(),
                f6(c.demand),
                format_path(outcome.primary[i].as_deref()),
                format_path(outcome.backup[i].as_deref()),
            ]
        })
        .collect();
    write_rows(&header, &rows)
}

/// Render CSV text as an aligned table. A single-row file is shown
/// transposed as `key  value` lines.
pub fn table(csv_text: &str) -> Result<String, csv::Error> {
    let mut rd = csv::Reader::from_reader(csv_text.as_bytes());
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let rows: Vec<Vec<String>> = rd
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()?;
    let mut out = String::new();
    if rows.len() == 1 {
        let w = header.iter().map(String::len).max().unwrap_or(0);
        for (k, v) in header.iter().zip(&rows[0]) {
            out.push_str(&format!("{k:<w$}  {v}\n"));
        }
        return Ok(out);
    }
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for r in &rows {
        for (i, c) in r.iter().enumerate() {
            if i < widths.len() {
                widths[i] = widths[i].max(c.len());
            }
        }
    }
    for line in std::iter::once(&header).chain(&rows) {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_row() {
        let s = summary_csv(&MetricsReport::default());
        let mut lines = s.lines();
        assert!(lines.next().unwrap().starts_with("delivery_ratio,data_sent"));
        assert!(lines.next().unwrap().starts_with("0.000000,0,0,0,0,0,0,0"));
        assert!(!s.contains('\r'));
    }

    #[test]
    fn table_transposes_single_row() {
        let t = table("a,bb\n1,2\n").unwrap();
        assert_eq!(t, "a   1\nbb  2\n");
    }

    #[test]
    fn path_format() {
        assert_eq!(format_path(Some(&[NodeId(1), NodeId(2)])), "1-2");
        assert_eq!(format_path(None), "-");
    }
}
