//! Projection of DNA relabel decisions onto 96-well plate coordinates and
//! classification of mechanistic error patterns.
//!
//! Each fixable decision is a displacement arrow from the well where a
//! sample belonged to the well where it was found. Two-well cycles are
//! exact swaps; longer closed cycles are rotations; maximal series of
//! consecutive wells displaced by a constant offset of one or two positions
//! in fill order are shift runs, the signature of single-channel pipetting
//! errors. Duplicate verdicts become duplicate fills, unfixable verdicts
//! orphans.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::WellOrder;
use crate::error::{Error, Result};
use crate::types::{PlateAssignment, PlateLayout, RelabelDecision, Verdict, Well};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PlateFindingKind {
    ExactSwap,
    /// A closed rotation of three or more wells, or an open displacement
    /// chain (including cross-plate moves).
    Cycle,
    ShiftRun { offset: i32, length: usize },
    DuplicateFill,
    Orphan,
}

/// A well reference in a finding; `order_index` is the position in the
/// configured fill order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WellRef {
    pub plate: String,
    pub well: String,
    #[serde(skip)]
    pub order_index: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PlateFinding {
    #[serde(flatten)]
    pub kind: PlateFindingKind,
    /// Wells involved, in traversal order.
    pub wells: Vec<WellRef>,
    /// Sample labels involved, aligned with the displacement order.
    pub samples: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PlateFindings {
    pub findings: Vec<PlateFinding>,
    pub warnings: Vec<String>,
}

fn order_index(well: Well, order: WellOrder) -> usize {
    match order {
        WellOrder::ColumnMajor => well.column_major_index(),
        WellOrder::RowMajor => well.row_major_index(),
    }
}

fn well_ref(assign: &PlateAssignment, order: WellOrder) -> WellRef {
    WellRef {
        plate: assign.plate_id.clone(),
        well: assign.well.to_string(),
        order_index: order_index(assign.well, order),
    }
}

/// Plate assignments grouped by plate, each plate's wells in fill order.
pub fn wells_in_order(
    layout: &PlateLayout,
    order: WellOrder,
) -> BTreeMap<String, Vec<PlateAssignment>> {
    let mut plates: BTreeMap<String, Vec<PlateAssignment>> = BTreeMap::new();
    for entry in layout.entries() {
        plates
            .entry(entry.plate_id.clone())
            .or_default()
            .push(entry.clone());
    }
    for wells in plates.values_mut() {
        wells.sort_by_key(|e| order_index(e.well, order));
    }
    plates
}

#[derive(Clone, Debug)]
struct Edge {
    /// The displaced sample (the decision's inferred true label).
    sample: String,
    from: WellRef,
    to: WellRef,
}

impl Edge {
    fn same_plate_offset(&self) -> Option<i32> {
        if self.from.plate == self.to.plate {
            Some(self.to.order_index as i32 - self.from.order_index as i32)
        } else {
            None
        }
    }
}

fn node_key(w: &WellRef) -> String {
    format!("{}:{}", w.plate, w.well)
}

/// Classifies the displacement graph of a set of DNA decisions.
///
/// Every fixable decision with plate metadata lands in exactly one finding;
/// duplicate verdicts produce duplicate fills and unfixable verdicts
/// orphans. Wells receiving more than one displaced sample are reported as
/// warnings.
pub fn detect_patterns(
    decisions: &[RelabelDecision],
    layout: &PlateLayout,
    order: WellOrder,
) -> PlateFindings {
    let mut findings = Vec::new();
    let mut warnings = Vec::new();
    let mut edges: Vec<Edge> = Vec::new();

    for d in decisions {
        match d.verdict {
            Verdict::Fixable => {
                let true_sample = d.new_label.as_deref().expect("fixable carries a label");
                let actual = layout.position_of(&d.sample_id);
                let intended = layout.position_of(true_sample);
                match (intended, actual) {
                    (Some(intended), Some(actual)) => edges.push(Edge {
                        sample: true_sample.to_string(),
                        from: well_ref(intended, order),
                        to: well_ref(actual, order),
                    }),
                    _ => warnings.push(format!(
                        "no plate position for decision '{}' -> '{}'",
                        d.sample_id, true_sample
                    )),
                }
            }
            Verdict::Duplicate => {
                let retained = d.new_label.as_deref().expect("duplicate names the retained");
                let dup_well = layout.position_of(&d.sample_id);
                let retained_well = layout.position_of(retained);
                match (retained_well, dup_well) {
                    (Some(r), Some(w)) => findings.push(PlateFinding {
                        kind: PlateFindingKind::DuplicateFill,
                        wells: vec![well_ref(r, order), well_ref(w, order)],
                        samples: vec![retained.to_string(), d.sample_id.clone()],
                    }),
                    _ => warnings.push(format!(
                        "no plate position for duplicate '{}' of '{}'",
                        d.sample_id, retained
                    )),
                }
            }
            Verdict::Unfixable => match layout.position_of(&d.sample_id) {
                Some(w) => findings.push(PlateFinding {
                    kind: PlateFindingKind::Orphan,
                    wells: vec![well_ref(w, order)],
                    samples: vec![d.sample_id.clone()],
                }),
                None => warnings.push(format!(
                    "no plate position for unfixable sample '{}'",
                    d.sample_id
                )),
            },
            Verdict::Correct | Verdict::Unverifiable => {}
        }
    }

    // In-degree check: one arriving sample per well.
    let mut in_degree: BTreeMap<String, usize> = BTreeMap::new();
    for e in &edges {
        *in_degree.entry(node_key(&e.to)).or_insert(0) += 1;
    }
    for (well, n) in in_degree.iter().filter(|(_, &n)| n > 1) {
        warnings.push(format!("well {well} receives {n} displaced samples"));
    }

    // Connected components over the displacement edges.
    let mut node_ids: BTreeMap<String, usize> = BTreeMap::new();
    for e in &edges {
        let n = node_ids.len();
        node_ids.entry(node_key(&e.from)).or_insert(n);
        let n = node_ids.len();
        node_ids.entry(node_key(&e.to)).or_insert(n);
    }
    let mut dsu: Vec<usize> = (0..node_ids.len()).collect();
    fn root(dsu: &mut [usize], mut i: usize) -> usize {
        while dsu[i] != i {
            dsu[i] = dsu[dsu[i]];
            i = dsu[i];
        }
        i
    }
    for e in &edges {
        let a = root(&mut dsu, node_ids[&node_key(&e.from)]);
        let b = root(&mut dsu, node_ids[&node_key(&e.to)]);
        dsu[a] = b;
    }
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (idx, e) in edges.iter().enumerate() {
        let r = root(&mut dsu, node_ids[&node_key(&e.from)]);
        components.entry(r).or_default().push(idx);
    }

    let mut component_findings: Vec<PlateFinding> = Vec::new();
    for edge_ids in components.values() {
        classify_component(&edges, edge_ids, &mut component_findings);
    }
    findings.extend(component_findings);

    findings.sort_by(|a, b| {
        let key = |f: &PlateFinding| {
            (
                f.wells
                    .first()
                    .map(|w| (w.plate.clone(), w.order_index))
                    .unwrap_or_default(),
                format!("{:?}", f.kind),
            )
        };
        key(a).cmp(&key(b))
    });

    PlateFindings { findings, warnings }
}

fn classify_component(edges: &[Edge], edge_ids: &[usize], out: &mut Vec<PlateFinding>) {
    // Closed cycle: every involved node has exactly one outgoing and one
    // incoming edge.
    let mut out_deg: BTreeMap<String, usize> = BTreeMap::new();
    let mut in_deg: BTreeMap<String, usize> = BTreeMap::new();
    let mut nodes: BTreeSet<String> = BTreeSet::new();
    for &i in edge_ids {
        let e = &edges[i];
        *out_deg.entry(node_key(&e.from)).or_insert(0) += 1;
        *in_deg.entry(node_key(&e.to)).or_insert(0) += 1;
        nodes.insert(node_key(&e.from));
        nodes.insert(node_key(&e.to));
    }
    let closed = nodes.len() == edge_ids.len()
        && nodes
            .iter()
            .all(|n| out_deg.get(n) == Some(&1) && in_deg.get(n) == Some(&1));

    if closed {
        // Walk the cycle from its lexicographically smallest node.
        let start = nodes.iter().next().expect("cycle has nodes").clone();
        let by_from: BTreeMap<String, usize> = edge_ids
            .iter()
            .map(|&i| (node_key(&edges[i].from), i))
            .collect();
        let mut wells = Vec::new();
        let mut samples = Vec::new();
        let mut cur = start.clone();
        loop {
            let e = &edges[by_from[&cur]];
            wells.push(e.from.clone());
            samples.push(e.sample.clone());
            cur = node_key(&e.to);
            if cur == start {
                break;
            }
        }
        let kind = if edge_ids.len() == 2 {
            PlateFindingKind::ExactSwap
        } else {
            PlateFindingKind::Cycle
        };
        out.push(PlateFinding {
            kind,
            wells,
            samples,
        });
        return;
    }

    // Open component: peel off maximal same-offset runs of consecutive
    // wells, then report the remaining edges as chains.
    let mut ordered: Vec<usize> = edge_ids.to_vec();
    ordered.sort_by_key(|&i| (edges[i].from.plate.clone(), edges[i].from.order_index));

    let mut consumed: BTreeSet<usize> = BTreeSet::new();
    let mut run: Vec<usize> = Vec::new();
    let flush = |run: &mut Vec<usize>, out: &mut Vec<PlateFinding>, consumed: &mut BTreeSet<usize>| {
        if run.len() >= 2 {
            let offset = edges[run[0]].same_plate_offset().expect("run edges share a plate");
            let mut wells: Vec<WellRef> = run.iter().map(|&i| edges[i].from.clone()).collect();
            wells.push(edges[*run.last().expect("run not empty")].to.clone());
            out.push(PlateFinding {
                kind: PlateFindingKind::ShiftRun {
                    offset,
                    length: run.len(),
                },
                wells,
                samples: run.iter().map(|&i| edges[i].sample.clone()).collect(),
            });
            consumed.extend(run.iter().copied());
        }
        run.clear();
    };
    for &i in &ordered {
        let e = &edges[i];
        let eligible = matches!(e.same_plate_offset(), Some(1 | -1 | 2 | -2));
        if !eligible {
            flush(&mut run, out, &mut consumed);
            continue;
        }
        let continues = run.last().is_some_and(|&prev| {
            let p = &edges[prev];
            p.from.plate == e.from.plate
                && e.from.order_index == p.from.order_index + 1
                && p.same_plate_offset() == e.same_plate_offset()
        });
        if !continues {
            flush(&mut run, out, &mut consumed);
        }
        run.push(i);
    }
    flush(&mut run, out, &mut consumed);

    // Remaining edges: walk chains from their sources.
    let leftover: Vec<usize> = ordered
        .iter()
        .copied()
        .filter(|i| !consumed.contains(i))
        .collect();
    if leftover.is_empty() {
        return;
    }
    let mut by_from: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut has_in: BTreeSet<String> = BTreeSet::new();
    for &i in &leftover {
        by_from.entry(node_key(&edges[i].from)).or_default().push(i);
        has_in.insert(node_key(&edges[i].to));
    }
    let mut visited: BTreeSet<usize> = BTreeSet::new();
    let mut starts: Vec<usize> = leftover
        .iter()
        .copied()
        .filter(|&i| !has_in.contains(&node_key(&edges[i].from)))
        .collect();
    starts.extend(leftover.iter().copied()); // fallback for odd shapes
    for start in starts {
        if visited.contains(&start) {
            continue;
        }
        let mut wells = vec![edges[start].from.clone()];
        let mut samples = Vec::new();
        let mut cur = start;
        loop {
            visited.insert(cur);
            wells.push(edges[cur].to.clone());
            samples.push(edges[cur].sample.clone());
            let next = by_from
                .get(&node_key(&edges[cur].to))
                .and_then(|cands| cands.iter().find(|i| !visited.contains(i)));
            match next {
                Some(&n) => cur = n,
                None => break,
            }
        }
        out.push(PlateFinding {
            kind: PlateFindingKind::Cycle,
            wells,
            samples,
        });
    }
}

// ---------------------------------------------------------------------------
// SVG plate diagrams
// ---------------------------------------------------------------------------

const CELL: f64 = 40.0;
const MARGIN: f64 = 60.0;

fn well_center(well: Well) -> (f64, f64) {
    (
        MARGIN + (well.col() as f64 + 0.5) * CELL,
        MARGIN + (well.row() as f64 + 0.5) * CELL,
    )
}

/// Writes one deterministic SVG per plate showing dots for correct wells,
/// arrows for displacements, and markers for duplicates, orphans, and
/// unverifiable wells. Returns the written paths.
pub fn emit_plate_diagram(
    findings: &PlateFindings,
    decisions: &[RelabelDecision],
    layout: &PlateLayout,
    order: WellOrder,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let verdict_of: BTreeMap<&str, Verdict> = decisions
        .iter()
        .map(|d| (d.sample_id.as_str(), d.verdict))
        .collect();

    let mut written = Vec::new();
    for (plate_id, wells) in wells_in_order(layout, order) {
        let mut svg = String::new();
        let width = MARGIN * 2.0 + 12.0 * CELL;
        let height = MARGIN * 2.0 + 8.0 * CELL + 120.0;
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
        );
        let _ = writeln!(
            svg,
            r#"<defs><marker id="arrow" markerWidth="8" markerHeight="8" refX="7" refY="4" orient="auto"><path d="M0,0 L8,4 L0,8 z" fill="rgb(52,101,164)"/></marker></defs>"#
        );
        let _ = writeln!(
            svg,
            r#"<rect width="{width}" height="{height}" fill="white"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="30" font-family="sans-serif" font-size="18" text-anchor="middle">plate {}</text>"#,
            width / 2.0,
            plate_id
        );

        // Grid outline and axis labels.
        for r in 0..8u8 {
            let y = MARGIN + (r as f64 + 0.5) * CELL;
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
                MARGIN - 20.0,
                y,
                (b'A' + r) as char
            );
        }
        for c in 0..12u8 {
            let x = MARGIN + (c as f64 + 0.5) * CELL;
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{:02}</text>"#,
                x,
                MARGIN - 15.0,
                c + 1
            );
        }
        for r in 0..8u8 {
            for c in 0..12u8 {
                let x = MARGIN + c as f64 * CELL;
                let y = MARGIN + r as f64 * CELL;
                let _ = writeln!(
                    svg,
                    r#"<rect x="{x:.1}" y="{y:.1}" width="{CELL}" height="{CELL}" fill="none" stroke="rgb(221,221,221)"/>"#
                );
            }
        }

        // Well glyphs by verdict.
        for assign in &wells {
            let (x, y) = well_center(assign.well);
            match verdict_of.get(assign.sample_id.as_str()) {
                Some(Verdict::Correct) => {
                    let _ = writeln!(
                        svg,
                        r#"<circle cx="{x:.1}" cy="{y:.1}" r="4" fill="black"/>"#
                    );
                }
                Some(Verdict::Unverifiable) => {
                    let _ = writeln!(
                        svg,
                        r#"<circle cx="{x:.1}" cy="{y:.1}" r="4" fill="rgb(153,153,153)"/>"#
                    );
                }
                Some(Verdict::Unfixable) => {
                    let _ = writeln!(
                        svg,
                        r#"<path d="M{:.1},{:.1} L{:.1},{:.1} L{:.1},{:.1} z" fill="rgb(255,127,0)"/>"#,
                        x - 6.0,
                        y + 5.0,
                        x + 6.0,
                        y + 5.0,
                        x,
                        y - 7.0
                    );
                }
                Some(Verdict::Duplicate) => {
                    let _ = writeln!(
                        svg,
                        r#"<circle cx="{x:.1}" cy="{y:.1}" r="7" fill="none" stroke="rgb(255,105,180)" stroke-width="2.5"/>"#
                    );
                }
                Some(Verdict::Fixable) => {
                    // Covered by an incoming arrow below.
                }
                None => {
                    let _ = writeln!(
                        svg,
                        r#"<circle cx="{x:.1}" cy="{y:.1}" r="6" fill="none" stroke="rgb(187,187,187)"/>"#
                    );
                }
            }
        }

        // Displacement arrows from the findings.
        for finding in &findings.findings {
            let pairs: Vec<(&WellRef, &WellRef)> = match &finding.kind {
                PlateFindingKind::ExactSwap
                | PlateFindingKind::Cycle
                | PlateFindingKind::ShiftRun { .. } => finding
                    .wells
                    .windows(2)
                    .map(|w| (&w[0], &w[1]))
                    .collect(),
                PlateFindingKind::DuplicateFill => {
                    vec![(&finding.wells[0], &finding.wells[1])]
                }
                PlateFindingKind::Orphan => Vec::new(),
            };
            // Closed cycles wrap around.
            if matches!(
                finding.kind,
                PlateFindingKind::ExactSwap | PlateFindingKind::Cycle
            ) && finding.wells.len() == finding.samples.len()
                && finding.wells.len() >= 2
            {
                // wells has one entry per edge for closed cycles.
            }
            for (from, to) in pairs {
                let color = if matches!(finding.kind, PlateFindingKind::DuplicateFill) {
                    "rgb(255,105,180)"
                } else {
                    "rgb(52,101,164)"
                };
                match (from.plate == plate_id, to.plate == plate_id) {
                    (true, true) => {
                        let (x1, y1) = well_center(Well::parse(&from.well).expect("valid well"));
                        let (x2, y2) = well_center(Well::parse(&to.well).expect("valid well"));
                        let _ = writeln!(
                            svg,
                            r#"<line x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}" stroke="{color}" stroke-width="1.5" marker-end="url(#arrow)"/>"#
                        );
                    }
                    (false, true) => {
                        // Arrives from another plate.
                        let (x2, y2) = well_center(Well::parse(&to.well).expect("valid well"));
                        let _ = writeln!(
                            svg,
                            r#"<path d="M{:.1},{:.1} L{:.1},{:.1} L{:.1},{:.1} z" fill="rgb(117,80,123)"/>"#,
                            x2 - 6.0,
                            y2 - 5.0,
                            x2 + 6.0,
                            y2 - 5.0,
                            x2,
                            y2 + 7.0
                        );
                    }
                    _ => {}
                }
            }
            // Closed cycles need the wrap-around arrow.
            if matches!(
                finding.kind,
                PlateFindingKind::ExactSwap | PlateFindingKind::Cycle
            ) && finding.wells.len() == finding.samples.len()
            {
                if let (Some(last), Some(first)) = (finding.wells.last(), finding.wells.first()) {
                    if last.plate == plate_id && first.plate == plate_id {
                        let (x1, y1) = well_center(Well::parse(&last.well).expect("valid well"));
                        let (x2, y2) = well_center(Well::parse(&first.well).expect("valid well"));
                        let _ = writeln!(
                            svg,
                            r#"<line x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}" stroke="rgb(52,101,164)" stroke-width="1.5" marker-end="url(#arrow)"/>"#
                        );
                    }
                }
            }
        }

        // Legend.
        let ly = MARGIN + 8.0 * CELL + 30.0;
        let legend = [
            ("black dot: correct sample", "black"),
            ("gray dot: cannot be verified", "rgb(153,153,153)"),
            ("arrow: from intended to actual well", "rgb(52,101,164)"),
            ("pink circle: duplicate fill", "rgb(255,105,180)"),
            ("orange triangle: unknown origin", "rgb(255,127,0)"),
            ("purple triangle: arrived from another plate", "rgb(117,80,123)"),
        ];
        for (i, (text, color)) in legend.iter().enumerate() {
            let y = ly + i as f64 * 16.0;
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.1}" cy="{y:.1}" r="4" fill="{color}"/>"#,
                MARGIN
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{text}</text>"#,
                MARGIN + 12.0,
                y + 4.0
            );
        }
        let _ = writeln!(svg, "</svg>");

        let path = dir.join(format!("plate_{plate_id}.svg"));
        std::fs::write(&path, svg.as_bytes()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
