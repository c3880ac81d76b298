//! Output writers: time-series CSV, legacy-VTK snapshots, self-contained
//! SVG line plots and the per-run file set. File layouts are documented
//! in `docs/io.md`.

use crate::config::{config_echo, ConfigFile};
use crate::diagnostics::{detect_blowup, BlowupVerdict};
use crate::error::Result;
use crate::field::Field;
use crate::mesh::Mesh;
use crate::stepper::RunOutput;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Legacy ASCII VTK unstructured grid with one `CELL_DATA` scalar array
/// per named field. Cells are emitted as lines, pixels or voxels.
pub fn vtk_unstructured(mesh: &Mesh, fields: &[(&str, &Field)], title: &str) -> String {
    let dim = mesh.dim();
    let spacing = mesh.spacing();
    let corners_per_cell = 1usize << dim;

    // Corner offsets in VTK corner order (x fastest): line (-,+),
    // pixel (--, +-, -+, ++), voxel likewise with z slowest.
    let mut points: Vec<[f64; 3]> = Vec::new();
    let mut point_ids: BTreeMap<[i64; 3], usize> = BTreeMap::new();
    let mut cell_points: Vec<Vec<usize>> = Vec::with_capacity(mesh.n_cells());
    for cell in mesh.cells() {
        let mut ids = Vec::with_capacity(corners_per_cell);
        for corner in 0..corners_per_cell {
            let mut coord = [0.0f64; 3];
            let mut key = [0i64; 3];
            for a in 0..3 {
                if a < dim {
                    let sign = if corner >> a & 1 == 1 { 0.5 } else { -0.5 };
                    coord[a] = cell.center[a] + sign * spacing[a];
                    // Corners sit on a lattice of pitch spacing[a]; keys
                    // quantized at half-pitch resolution dedupe shared
                    // corners robustly.
                    key[a] = (coord[a] / (0.5 * spacing[a])).round() as i64;
                } else {
                    coord[a] = 0.0;
                    key[a] = 0;
                }
            }
            let id = *point_ids.entry(key).or_insert_with(|| {
                points.push(coord);
                points.len() - 1
            });
            ids.push(id);
        }
        cell_points.push(ids);
    }

    let cell_type = match dim {
        1 => 3,  // VTK_LINE
        2 => 8,  // VTK_PIXEL
        _ => 11, // VTK_VOXEL
    };

    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str(title);
    out.push('\n');
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", points.len());
    for p in &points {
        let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", p[0], p[1], p[2]);
    }
    let total = mesh.n_cells() * (corners_per_cell + 1);
    let _ = writeln!(out, "CELLS {} {}", mesh.n_cells(), total);
    for ids in &cell_points {
        let _ = write!(out, "{}", ids.len());
        for id in ids {
            let _ = write!(out, " {id}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "CELL_TYPES {}", mesh.n_cells());
    for _ in 0..mesh.n_cells() {
        let _ = writeln!(out, "{cell_type}");
    }
    let _ = writeln!(out, "CELL_DATA {}", mesh.n_cells());
    for (name, field) in fields {
        let _ = writeln!(out, "SCALARS {name} double 1");
        out.push_str("LOOKUP_TABLE default\n");
        for v in field.values() {
            let _ = writeln!(out, "{v:.17e}");
        }
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

const SVG_PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
];

/// Self-contained SVG line plot (no external references). With `log_y`
/// the vertical axis is log10 with decade ticks; nonpositive samples
/// are skipped there.
pub fn svg_line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
    log_y: bool,
) -> String {
    let (width, height) = (800.0, 560.0);
    let (ml, mr, mt, mb) = (80.0, 170.0, 50.0, 60.0);
    let (pw, ph) = (width - ml - mr, height - mt - mb);

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (_, pts) in series {
        for &(x, y) in pts {
            if log_y && y <= 0.0 {
                continue;
            }
            xs.push(x);
            ys.push(if log_y { y.log10() } else { y });
        }
    }
    let (x0, x1) = match (xs.iter().cloned().reduce(f64::min), xs.iter().cloned().reduce(f64::max))
    {
        (Some(a), Some(b)) if b > a => (a, b),
        (Some(a), _) => (a - 0.5, a + 0.5),
        _ => (0.0, 1.0),
    };
    let (y0, y1) = match (ys.iter().cloned().reduce(f64::min), ys.iter().cloned().reduce(f64::max))
    {
        (Some(a), Some(b)) if b > a => (a, b),
        (Some(a), _) => (a - 0.5, a + 0.5),
        _ => (0.0, 1.0),
    };

    let sx = move |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = move |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(out, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"28\" font-family=\"sans-serif\" font-size=\"18\" \
         text-anchor=\"middle\">{}</text>",
        ml + pw / 2.0,
        xml_escape(title)
    );

    // Axes.
    let _ = writeln!(
        out,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        mt + ph,
        ml + pw,
        mt + ph
    );
    let _ = writeln!(
        out,
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>",
        mt + ph
    );

    // X ticks: six linear divisions.
    for i in 0..=5 {
        let x = x0 + (x1 - x0) * i as f64 / 5.0;
        let px = sx(x);
        let _ = writeln!(
            out,
            "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"black\"/>",
            mt + ph,
            mt + ph + 6.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{px}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{:.3e}</text>",
            mt + ph + 20.0,
            x
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">{}</text>",
        ml + pw / 2.0,
        mt + ph + 44.0,
        xml_escape(x_label)
    );

    // Y ticks: decades when logarithmic, six divisions otherwise.
    if log_y {
        let lo = y0.floor() as i64;
        let hi = y1.ceil() as i64;
        let stride = (((hi - lo) as f64 / 8.0).ceil() as i64).max(1);
        let mut d = lo;
        while d <= hi {
            let py = sy(d as f64);
            if py >= mt - 1.0 && py <= mt + ph + 1.0 {
                let _ = writeln!(
                    out,
                    "<line x1=\"{}\" y1=\"{py}\" x2=\"{ml}\" y2=\"{py}\" stroke=\"black\"/>",
                    ml - 6.0
                );
                let _ = writeln!(
                    out,
                    "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
                     text-anchor=\"end\">1e{d}</text>",
                    ml - 10.0,
                    py + 4.0
                );
            }
            d += stride;
        }
    } else {
        for i in 0..=5 {
            let y = y0 + (y1 - y0) * i as f64 / 5.0;
            let py = sy(y);
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{py}\" x2=\"{ml}\" y2=\"{py}\" stroke=\"black\"/>",
                ml - 6.0
            );
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
                 text-anchor=\"end\">{y:.3e}</text>",
                ml - 10.0,
                py + 4.0
            );
        }
    }
    let _ = writeln!(
        out,
        "<text x=\"20\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{}</text>",
        mt + ph / 2.0,
        mt + ph / 2.0,
        xml_escape(y_label)
    );

    // Curves.
    for (si, (label, pts)) in series.iter().enumerate() {
        let color = SVG_PALETTE[si % SVG_PALETTE.len()];
        let mut path = String::new();
        for &(x, y) in pts {
            if log_y && y <= 0.0 {
                continue;
            }
            let yy = if log_y { y.log10() } else { y };
            if path.is_empty() {
                let _ = write!(path, "M {:.3} {:.3}", sx(x), sy(yy));
            } else {
                let _ = write!(path, " L {:.3} {:.3}", sx(x), sy(yy));
            }
        }
        if !path.is_empty() {
            let _ = writeln!(
                out,
                "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>"
            );
        }
        // Legend entry.
        let ly = mt + 14.0 + 20.0 * si as f64;
        let lx = ml + pw + 12.0;
        let _ = writeln!(
            out,
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>",
            lx + 24.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            lx + 30.0,
            ly + 4.0,
            xml_escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Writes the standard per-run file set into `dir`:
/// `series.csv`, `runlog.csv`, `verdict.txt`, `maxu.svg`, `config.echo`,
/// `run.log` and `snapshot_<step>.vtk` at the configured cadence.
/// Returns the verdict for callers that aggregate.
pub fn write_run_outputs(
    dir: &Path,
    cfg: &ConfigFile,
    output: &RunOutput,
) -> Result<BlowupVerdict> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("series.csv"), output.series.to_csv())?;
    fs::write(dir.join("runlog.csv"), output.step_log_csv())?;
    fs::write(dir.join("config.echo"), config_echo(cfg))?;

    let verdict = detect_blowup(&output.series, &output.termination, &cfg.run.detector);
    fs::write(
        dir.join("verdict.txt"),
        verdict.to_key_value_block(&cfg.run.detector),
    )?;

    let curve: Vec<(f64, f64)> = output
        .series
        .rows()
        .iter()
        .map(|r| (r.t, r.max_u))
        .collect();
    fs::write(
        dir.join("maxu.svg"),
        svg_line_plot(
            "max u over time",
            "t",
            "max u",
            &[("max u".to_string(), curve)],
            true,
        ),
    )?;

    for (step, field) in &output.snapshots {
        let name = format!("snapshot_{step:06}.vtk");
        fs::write(
            dir.join(name),
            vtk_unstructured(&output.mesh, &[("u", field)], "cell density"),
        )?;
    }

    let mut log = String::new();
    log.push_str(&output.mesh.summary());
    log.push('\n');
    log.push_str(&format!("termination = {:?}\n", output.termination));
    log.push_str(&verdict.to_key_value_block(&cfg.run.detector));
    fs::write(dir.join("run.log"), log)?;

    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_ball_mesh, build_box_mesh};

    /// Minimal XML well-formedness probe: tags balance and nest.
    fn assert_well_formed_xml(text: &str) {
        let mut stack: Vec<String> = Vec::new();
        let mut rest = text;
        while let Some(start) = rest.find('<') {
            let end = rest[start..].find('>').expect("unclosed tag") + start;
            let tag = &rest[start + 1..end];
            rest = &rest[end + 1..];
            if tag.starts_with('?') || tag.starts_with('!') || tag.ends_with('/') {
                continue;
            }
            if let Some(name) = tag.strip_prefix('/') {
                assert_eq!(stack.pop().as_deref(), Some(name), "mismatched closing tag");
            } else {
                let name = tag.split_whitespace().next().unwrap().to_string();
                stack.push(name);
            }
        }
        assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    }

    #[test]
    fn vtk_output_has_consistent_counts() {
        for mesh in [
            build_box_mesh(1, &[1.0], &[4]).unwrap(),
            build_box_mesh(2, &[1.0, 2.0], &[3, 5]).unwrap(),
            build_ball_mesh(3, 1.0, 0.22).unwrap(),
        ] {
            let u = Field::from_fn(&mesh, |c| c[0] + 1.0);
            let text = vtk_unstructured(&mesh, &[("u", &u)], "test");
            assert!(text.starts_with("# vtk DataFile Version 3.0"));
            assert!(text.contains("DATASET UNSTRUCTURED_GRID"));
            assert!(text.contains(&format!("CELL_DATA {}", mesh.n_cells())));
            // Distinct corners: a voxel grid of n cells per axis has at
            // most prod(n_a + 1) corners; dedup must kick in.
            let points_line = text
                .lines()
                .find(|l| l.starts_with("POINTS"))
                .expect("points header");
            let n_points: usize = points_line.split_whitespace().nth(1).unwrap().parse().unwrap();
            let corners = 1 << mesh.dim();
            assert!(n_points < mesh.n_cells() * corners, "no corner sharing");
            let data_values = text
                .lines()
                .skip_while(|l| !l.starts_with("LOOKUP_TABLE"))
                .skip(1)
                .count();
            assert_eq!(data_values, mesh.n_cells());
        }
    }

    #[test]
    fn vtk_shared_corner_count_matches_box_lattice() {
        let mesh = build_box_mesh(2, &[1.0, 1.0], &[4, 4]).unwrap();
        let u = Field::zeros(&mesh);
        let text = vtk_unstructured(&mesh, &[("u", &u)], "t");
        let points_line = text.lines().find(|l| l.starts_with("POINTS")).unwrap();
        let n_points: usize = points_line.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert_eq!(n_points, 25); // (4+1)^2 lattice corners
    }

    #[test]
    fn svg_is_self_contained_and_well_formed() {
        let series = vec![
            (
                "c=0".to_string(),
                (0..40).map(|i| (i as f64 * 1e-4, 500.0 * (1.1f64).powi(i))).collect(),
            ),
            (
                "c=1e-3 & friends <test>".to_string(),
                (0..40).map(|i| (i as f64 * 1e-4, 450.0 + i as f64)).collect(),
            ),
        ];
        let svg = svg_line_plot("max u", "t", "max u", &series, true);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("href"));
        assert!(svg.contains("&amp;"));
        assert_well_formed_xml(&svg);
    }

    #[test]
    fn svg_handles_degenerate_input() {
        let svg = svg_line_plot("empty", "t", "y", &[], false);
        assert_well_formed_xml(&svg);
        let single = vec![("one".to_string(), vec![(1.0, 2.0)])];
        let svg = svg_line_plot("single", "t", "y", &single, true);
        assert_well_formed_xml(&svg);
    }
}
