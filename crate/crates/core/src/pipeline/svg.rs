//! SVG renderings of a score table. Output is a pure function of the table: panels,
//! axes and colour bounds derive from the records alone and every number is printed
//! with a fixed precision.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::embedding::{Checkpoint, Correctness, Language, Modality};
use crate::error::{Error, Result};

use super::table::{CellKey, ScoreTable, Status};

const VIRIDIS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

const LINE_COLOURS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn colour(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

struct Axes {
    languages: Vec<Language>,
    panels: Vec<(Modality, Correctness)>,
    layers: Vec<u32>,
    checkpoints: Vec<Checkpoint>,
}

impl Axes {
    fn of(table: &ScoreTable) -> Axes {
        let mut languages = BTreeSet::new();
        let mut panels = BTreeSet::new();
        let mut layers = BTreeSet::new();
        let mut checkpoints = BTreeSet::new();
        for r in &table.records {
            languages.insert(r.language);
            panels.insert((r.modality, r.correctness));
            layers.insert(r.layer);
            checkpoints.insert(r.checkpoint);
        }
        Axes {
            languages: languages.into_iter().collect(),
            panels: panels.into_iter().collect(),
            layers: layers.into_iter().collect(),
            checkpoints: checkpoints.into_iter().collect(),
        }
    }

    fn has_panel(&self, table: &ScoreTable, language: Language, panel: (Modality, Correctness)) -> bool {
        table
            .records
            .iter()
            .any(|r| r.language == language && (r.modality, r.correctness) == panel)
    }
}

fn score_bounds<'a>(values: impl Iterator<Item = &'a f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, &v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

const HATCH_DEFS: &str = concat!(
    r##"<pattern id="hatch-missing" patternUnits="userSpaceOnUse" width="6" height="6" patternTransform="rotate(45)">"##,
    r##"<rect width="6" height="6" fill="#ffffff"/><line x1="0" y1="0" x2="0" y2="6" stroke="#777777" stroke-width="2"/></pattern>"##,
    r##"<pattern id="hatch-degenerate" patternUnits="userSpaceOnUse" width="6" height="6">"##,
    r##"<rect width="6" height="6" fill="#ffffff"/><path d="M0,0 L6,6 M6,0 L0,6" stroke="#b22222" stroke-width="1"/></pattern>"##,
);

const CELL_W: usize = 30;
const CELL_H: usize = 22;
const PANEL_LEFT: usize = 56;
const PANEL_TOP: usize = 42;
const PANEL_BOTTOM: usize = 40;
const PANEL_GAP: usize = 24;
const LEGEND_W: usize = 190;

/// Layers on X, checkpoints on Y (pre-trained at the top), one panel per language and
/// input setting, one colour scale shared by all panels.
pub(crate) fn heatmap(table: &ScoreTable) -> String {
    let axes = Axes::of(table);
    let bounds = score_bounds(table.records.iter().filter_map(|r| r.rs.as_ref()));
    let (lo, hi) = bounds.unwrap_or((0.0, 1.0));
    let scale = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };

    let panel_w = PANEL_LEFT + axes.layers.len() * CELL_W + PANEL_GAP;
    let panel_h = PANEL_TOP + axes.checkpoints.len() * CELL_H + PANEL_BOTTOM;
    let width = axes.panels.len() * panel_w + LEGEND_W;
    let height = (axes.languages.len() * panel_h).max(220) + 20;

    let has = |s: Status| table.records.iter().any(|r| r.status == s);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, "<defs>{HATCH_DEFS}");
    let _ = write!(out, r#"<linearGradient id="scale" x1="0" y1="1" x2="0" y2="0">"#);
    for (i, _) in VIRIDIS.iter().enumerate() {
        let t = i as f64 / (VIRIDIS.len() - 1) as f64;
        let _ = write!(out, r#"<stop offset="{t:.2}" stop-color="{}"/>"#, colour(t));
    }
    let _ = writeln!(out, "</linearGradient></defs>");
    let _ = writeln!(out, r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##);
    let _ = writeln!(out, r#"<desc>config {}</desc>"#, table.config_fingerprint);

    for (row, &language) in axes.languages.iter().enumerate() {
        for (col, &(modality, correctness)) in axes.panels.iter().enumerate() {
            if !axes.has_panel(table, language, (modality, correctness)) {
                continue;
            }
            let x0 = col * panel_w + PANEL_LEFT;
            let y0 = row * panel_h + PANEL_TOP;
            let _ = writeln!(
                out,
                r#"<g class="panel" data-language="{language}" data-modality="{modality}" data-correctness="{correctness}">"#
            );
            let _ = writeln!(
                out,
                r#"<text x="{x0}" y="{}" font-size="12" font-weight="bold">{language} / {modality} / {correctness}</text>"#,
                y0 - 24
            );
            for (ci, &checkpoint) in axes.checkpoints.iter().enumerate() {
                let y = y0 + ci * CELL_H;
                let _ = writeln!(
                    out,
                    r#"<text x="{}" y="{}" text-anchor="end">{checkpoint}</text>"#,
                    x0 - 6,
                    y + CELL_H / 2 + 4
                );
                for (li, &layer) in axes.layers.iter().enumerate() {
                    let key = CellKey { language, layer, checkpoint, modality, correctness };
                    let Some(r) = table.get(&key) else { continue };
                    let x = x0 + li * CELL_W;
                    let (class, fill, title) = match (r.status, r.rs) {
                        (Status::Ok, Some(rs)) => ("cell ok", colour(scale(rs)), format!("rs = {rs:.4}")),
                        (Status::Degenerate, _) => {
                            ("cell degenerate", "url(#hatch-degenerate)".to_string(), "degenerate".to_string())
                        }
                        _ => ("cell missing-input", "url(#hatch-missing)".to_string(), "missing input".to_string()),
                    };
                    let _ = writeln!(
                        out,
                        r##"<rect class="{class}" data-layer="{layer}" data-checkpoint="{checkpoint}" x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{fill}" stroke="#ffffff" stroke-width="1"><title>layer {layer}, {checkpoint}: {title}</title></rect>"##
                    );
                }
            }
            let base = y0 + axes.checkpoints.len() * CELL_H;
            for (li, &layer) in axes.layers.iter().enumerate() {
                let _ = writeln!(
                    out,
                    r#"<text x="{}" y="{}" text-anchor="middle">{layer}</text>"#,
                    x0 + li * CELL_W + CELL_W / 2,
                    base + 14
                );
            }
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="middle">layer</text></g>"#,
                x0 + axes.layers.len() * CELL_W / 2,
                base + 30
            );
        }
    }

    let lx = axes.panels.len() * panel_w + 10;
    let ly = PANEL_TOP;
    let _ = writeln!(out, r#"<g class="legend">"#);
    let _ = writeln!(out, r#"<text x="{lx}" y="{}" font-weight="bold">RS score</text>"#, ly - 10);
    let _ = writeln!(
        out,
        r##"<rect x="{lx}" y="{ly}" width="16" height="120" fill="url(#scale)" stroke="#333333"/>"##
    );
    match bounds {
        Some(_) => {
            let _ = writeln!(out, r#"<text class="bound-max" x="{}" y="{}">max {hi:.4}</text>"#, lx + 22, ly + 10);
            let _ = writeln!(out, r#"<text class="bound-min" x="{}" y="{}">min {lo:.4}</text>"#, lx + 22, ly + 120);
        }
        None => {
            let _ = writeln!(out, r#"<text x="{}" y="{}">no scored cells</text>"#, lx + 22, ly + 60);
        }
    }
    let mut sy = ly + 140;
    for (status, pattern, label) in [
        (Status::MissingInput, "hatch-missing", "missing input"),
        (Status::Degenerate, "hatch-degenerate", "degenerate data"),
    ] {
        if has(status) {
            let _ = writeln!(
                out,
                r##"<rect class="legend-{}" x="{lx}" y="{sy}" width="16" height="16" fill="url(#{pattern})" stroke="#333333"/><text x="{}" y="{}">{label}</text>"##,
                status.as_str(),
                lx + 22,
                sy + 12
            );
            sy += 24;
        }
    }
    let _ = writeln!(out, "</g>\n</svg>");
    out
}

const LC_W: f64 = 330.0;
const LC_H: f64 = 230.0;
const LC_LEFT: f64 = 52.0;
const LC_RIGHT: f64 = 14.0;
const LC_TOP: f64 = 34.0;
const LC_BOTTOM: f64 = 42.0;

/// RS against checkpoint, one line per selected layer, one panel per language and input
/// setting. Cells without a score break the line.
pub(crate) fn linechart(table: &ScoreTable, line_layers: &[u32]) -> Result<String> {
    let axes = Axes::of(table);
    let mut layers: Vec<u32> = Vec::new();
    for &l in line_layers {
        if axes.layers.contains(&l) && !layers.contains(&l) {
            layers.push(l);
        }
    }
    if layers.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "none of the layers {line_layers:?} appear in the table (it has {:?})",
            axes.layers
        )));
    }
    let bounds = score_bounds(
        table
            .records
            .iter()
            .filter(|r| layers.contains(&r.layer))
            .filter_map(|r| r.rs.as_ref()),
    );
    let (mut lo, mut hi) = bounds.unwrap_or((0.0, 1.0));
    if hi - lo < 1e-9 {
        lo -= 0.05;
        hi += 0.05;
    }
    let pad = (hi - lo) * 0.05;
    let (lo, hi) = (lo - pad, hi + pad);

    let plot_w = LC_W - LC_LEFT - LC_RIGHT;
    let plot_h = LC_H - LC_TOP - LC_BOTTOM;
    let n_ck = axes.checkpoints.len();
    let xpos = |i: usize| if n_ck > 1 { plot_w * i as f64 / (n_ck - 1) as f64 } else { plot_w / 2.0 };
    let ypos = |v: f64| plot_h * (hi - v) / (hi - lo);

    let width = axes.panels.len() as f64 * LC_W + 120.0;
    let height = (axes.languages.len() as f64 * LC_H).max(40.0 + 20.0 * layers.len() as f64) + 10.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r##"<rect width="{width:.0}" height="{height:.0}" fill="#ffffff"/>"##);
    let _ = writeln!(out, r#"<desc>config {}</desc>"#, table.config_fingerprint);

    for (row, &language) in axes.languages.iter().enumerate() {
        for (col, &(modality, correctness)) in axes.panels.iter().enumerate() {
            if !axes.has_panel(table, language, (modality, correctness)) {
                continue;
            }
            let ox = col as f64 * LC_W + LC_LEFT;
            let oy = row as f64 * LC_H + LC_TOP;
            let _ = writeln!(
                out,
                r#"<g class="panel" data-language="{language}" data-modality="{modality}" data-correctness="{correctness}" transform="translate({ox:.1},{oy:.1})">"#
            );
            let _ = writeln!(
                out,
                r#"<text x="0" y="-14" font-size="12" font-weight="bold">{language} / {modality} / {correctness}</text>"#
            );
            let _ = writeln!(
                out,
                r##"<rect x="0" y="0" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#999999"/>"##
            );
            for k in 0..=4 {
                let v = lo + (hi - lo) * k as f64 / 4.0;
                let y = ypos(v);
                let _ = writeln!(
                    out,
                    r##"<line x1="0" y1="{y:.1}" x2="{plot_w:.1}" y2="{y:.1}" stroke="#eeeeee"/><text x="-4" y="{:.1}" text-anchor="end">{v:.3}</text>"##,
                    y + 4.0
                );
            }
            for (i, ck) in axes.checkpoints.iter().enumerate() {
                let _ = writeln!(
                    out,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{ck}</text>"#,
                    xpos(i),
                    plot_h + 14.0
                );
            }
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">checkpoint</text>"#,
                plot_w / 2.0,
                plot_h + 32.0
            );
            for (li, &layer) in layers.iter().enumerate() {
                let stroke = LINE_COLOURS[li % LINE_COLOURS.len()];
                let points: Vec<Option<(f64, f64)>> = axes
                    .checkpoints
                    .iter()
                    .enumerate()
                    .map(|(i, &checkpoint)| {
                        let key = CellKey { language, layer, checkpoint, modality, correctness };
                        table.get(&key).and_then(|r| r.rs).map(|rs| (xpos(i), ypos(rs)))
                    })
                    .collect();
                for segment in points.split(Option::is_none).filter(|s| s.len() > 1) {
                    let coords: Vec<String> = segment
                        .iter()
                        .flatten()
                        .map(|(x, y)| format!("{x:.1},{y:.1}"))
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline class="series" data-layer="{layer}" points="{}" fill="none" stroke="{stroke}" stroke-width="2"/>"#,
                        coords.join(" ")
                    );
                }
                for (x, y) in points.iter().flatten() {
                    let _ = writeln!(
                        out,
                        r#"<circle class="point" data-layer="{layer}" cx="{x:.1}" cy="{y:.1}" r="3" fill="{stroke}"/>"#
                    );
                }
            }
            let _ = writeln!(out, "</g>");
        }
    }

    let lx = axes.panels.len() as f64 * LC_W + 10.0;
    let _ = writeln!(out, r#"<g class="legend"><text x="{lx:.1}" y="{LC_TOP:.1}" font-weight="bold">layer</text>"#);
    for (li, &layer) in layers.iter().enumerate() {
        let y = LC_TOP + 18.0 * (li + 1) as f64;
        let stroke = LINE_COLOURS[li % LINE_COLOURS.len()];
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{stroke}" stroke-width="2"/><text x="{:.1}" y="{y:.1}">layer {layer}</text>"#,
            y - 4.0,
            lx + 20.0,
            y - 4.0,
            lx + 26.0
        );
    }
    let _ = writeln!(out, "</g>\n</svg>");
    Ok(out)
}
