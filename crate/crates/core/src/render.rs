//! Hexagonal heatmaps of component planes and cluster maps.
//!
//! Output is a pure function of its inputs: SVG coordinates use fixed
//! six-digit formatting and elements are emitted in linear-index order.

use std::fmt::Write as _;

use crate::analysis::ComponentPlane;
use crate::error::{Error, Result};
use crate::hexgrid::HexGrid;

pub type Rgb = (u8, u8, u8);

/// One anchor of the heat colormap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorStop {
    pub t: f64,
    pub rgb: Rgb,
}

/// Black at the low end, red at the midpoint, yellow at the high end.
pub const HEAT_STOPS: [ColorStop; 3] = [
    ColorStop { t: 0.0, rgb: (0, 0, 0) },
    ColorStop { t: 0.5, rgb: (255, 0, 0) },
    ColorStop { t: 1.0, rgb: (255, 255, 0) },
];

/// Categorical colors for cluster maps; cycles for more than 12 clusters.
pub const CLUSTER_PALETTE: [Rgb; 12] = [
    (0xa6, 0xce, 0xe3),
    (0x1f, 0x78, 0xb4),
    (0xb2, 0xdf, 0x8a),
    (0x33, 0xa0, 0x2c),
    (0xfb, 0x9a, 0x99),
    (0xe3, 0x1a, 0x1c),
    (0xfd, 0xbf, 0x6f),
    (0xff, 0x7f, 0x00),
    (0xca, 0xb2, 0xd6),
    (0x6a, 0x3d, 0x9a),
    (0xff, 0xff, 0x99),
    (0xb1, 0x59, 0x28),
];

const BACKGROUND: Rgb = (255, 255, 255);

/// Map a normalized value to the heat colormap. Values outside `[0, 1]` are
/// clamped.
pub fn colormap(t: f64) -> Result<Rgb> {
    if t.is_nan() {
        return Err(Error::InvalidArgument("cannot color NaN".into()));
    }
    if !(0.0..=1.0).contains(&t) {
        log::warn!("colormap input {t} clamped to [0, 1]");
    }
    let t = t.clamp(0.0, 1.0);
    // f64::round rounds half away from zero
    Ok(if t <= 0.5 {
        ((510.0 * t).round() as u8, 0, 0)
    } else {
        (255, (510.0 * (t - 0.5)).round() as u8, 0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImageFormat {
    Svg,
    Ppm,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Svg => "svg",
            ImageFormat::Ppm => "ppm",
        }
    }
}

impl std::str::FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svg" => Ok(ImageFormat::Svg),
            "ppm" => Ok(ImageFormat::Ppm),
            other => Err(Error::InvalidArgument(format!("unknown image format {other:?}"))),
        }
    }
}

/// Geometry and encoding options shared by all renderers.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub format: ImageFormat,
    /// Hexagon circumradius in pixels.
    pub cell_radius: f64,
    /// Written as an XML comment at the top of SVG output.
    pub caption: Option<String>,
}

impl RenderOptions {
    pub fn new(format: ImageFormat, cell_radius: f64) -> Self {
        RenderOptions {
            format,
            cell_radius,
            caption: None,
        }
    }
}

/// Pointy-top hexagon layout for an odd-r grid.
struct Layout {
    grid: HexGrid,
    radius: f64,
}

impl Layout {
    fn new(grid: HexGrid, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::out_of_range("cell radius", radius, "> 0"));
        }
        Ok(Layout { grid, radius })
    }

    fn cell_width(&self) -> f64 {
        3f64.sqrt() * self.radius
    }

    fn size(&self) -> (f64, f64) {
        let shift = if self.grid.height() > 1 { 0.5 } else { 0.0 };
        let w = self.cell_width() * (self.grid.width() as f64 + shift);
        let h = self.radius * (1.5 * (self.grid.height() - 1) as f64 + 2.0);
        (w, h)
    }

    fn center(&self, idx: usize) -> (f64, f64) {
        let row = idx / self.grid.width();
        let col = idx % self.grid.width();
        let shift = if row % 2 == 1 { 0.5 } else { 0.0 };
        let x = self.cell_width() * (col as f64 + 0.5 + shift);
        let y = self.radius * (1.0 + 1.5 * row as f64);
        (x, y)
    }

    /// Vertices clockwise from the top.
    fn corners(&self, idx: usize) -> [(f64, f64); 6] {
        let (cx, cy) = self.center(idx);
        let (dx, r) = (self.cell_width() / 2.0, self.radius);
        [
            (cx, cy - r),
            (cx + dx, cy - r / 2.0),
            (cx + dx, cy + r / 2.0),
            (cx, cy + r),
            (cx - dx, cy + r / 2.0),
            (cx - dx, cy - r / 2.0),
        ]
    }
}

fn render_cells(grid: &HexGrid, fills: &[Rgb], opts: &RenderOptions) -> Result<Vec<u8>> {
    let layout = Layout::new(*grid, opts.cell_radius)?;
    Ok(match opts.format {
        ImageFormat::Svg => render_svg(&layout, fills, opts.caption.as_deref()).into_bytes(),
        ImageFormat::Ppm => render_ppm(&layout, fills).into_bytes(),
    })
}

fn render_svg(layout: &Layout, fills: &[Rgb], caption: Option<&str>) -> String {
    let (w, h) = layout.size();
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w:.6}\" height=\"{h:.6}\" viewBox=\"0 0 {w:.6} {h:.6}\">"
    )
    .unwrap();
    if let Some(c) = caption {
        // "--" may not appear inside an XML comment
        writeln!(out, "<!-- {} -->", c.replace("--", "- -")).unwrap();
    }
    for (idx, &(r, g, b)) in fills.iter().enumerate() {
        out.push_str("<polygon points=\"");
        for (i, (x, y)) in layout.corners(idx).iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{x:.6},{y:.6}").unwrap();
        }
        writeln!(out, "\" fill=\"rgb({r},{g},{b})\"/>").unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Rasterize each hexagon by filling the pixels of its bounding box whose
/// centres fall inside it. Cells are drawn in index order; uncovered pixels
/// stay white.
fn render_ppm(layout: &Layout, fills: &[Rgb]) -> String {
    let (w, h) = layout.size();
    let (width, height) = (w.ceil() as usize, h.ceil() as usize);
    let mut pixels = vec![BACKGROUND; width * height];
    for (idx, &color) in fills.iter().enumerate() {
        let corners = layout.corners(idx);
        let (min_x, max_x, min_y, max_y) = corners.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        let y0 = min_y.floor().max(0.0) as usize;
        let y1 = (max_y.ceil() as usize).min(height);
        let x0 = min_x.floor().max(0.0) as usize;
        let x1 = (max_x.ceil() as usize).min(width);
        for py in y0..y1 {
            for px in x0..x1 {
                if inside(&corners, px as f64 + 0.5, py as f64 + 0.5) {
                    pixels[py * width + px] = color;
                }
            }
        }
    }
    let mut out = format!("P3\n{width} {height}\n255\n");
    for row in pixels.chunks_exact(width) {
        let line: Vec<String> = row.iter().map(|(r, g, b)| format!("{r} {g} {b}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Point-in-convex-polygon for clockwise (in screen space) vertices.
fn inside(poly: &[(f64, f64); 6], x: f64, y: f64) -> bool {
    (0..6).all(|i| {
        let (ax, ay) = poly[i];
        let (bx, by) = poly[(i + 1) % 6];
        (bx - ax) * (y - ay) - (by - ay) * (x - ax) >= 0.0
    })
}

/// Heatmap of one component plane.
pub fn render_plane(plane: &ComponentPlane, grid: &HexGrid, opts: &RenderOptions) -> Result<Vec<u8>> {
    if plane.width != grid.width() || plane.height != grid.height() || plane.values.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            actual: plane.values.len(),
        });
    }
    let fills = plane
        .values
        .iter()
        .map(|&v| colormap(v))
        .collect::<Result<Vec<_>>>()?;
    render_cells(grid, &fills, opts)
}

/// Categorical map of neuron cluster labels.
pub fn render_cluster_map(labels: &[usize], grid: &HexGrid, opts: &RenderOptions) -> Result<Vec<u8>> {
    if labels.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            actual: labels.len(),
        });
    }
    let fills: Vec<Rgb> = labels
        .iter()
        .map(|&l| CLUSTER_PALETTE[l % CLUSTER_PALETTE.len()])
        .collect();
    render_cells(grid, &fills, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn plane(width: usize, height: usize, values: Vec<f64>) -> ComponentPlane {
        ComponentPlane {
            attribute: 0,
            width,
            height,
            values,
        }
    }

    fn svg(bytes: &[u8]) -> String {
        String::from_utf8(bytes.to_vec()).unwrap()
    }

    fn fills(svg: &str) -> Vec<String> {
        svg.lines()
            .filter_map(|l| l.split("fill=\"").nth(1))
            .map(|f| f.trim_end_matches("\"/>").to_string())
            .collect()
    }

    #[test]
    fn colormap_anchors() {
        assert_eq!(colormap(0.0).unwrap(), (0, 0, 0));
        assert_eq!(colormap(0.5).unwrap(), (255, 0, 0));
        assert_eq!(colormap(1.0).unwrap(), (255, 255, 0));
        assert_eq!(colormap(0.75).unwrap(), (255, 128, 0));
        assert_eq!(colormap(1.0 / 3.0).unwrap(), (170, 0, 0));
        assert_eq!(colormap(2.0 / 3.0).unwrap(), (255, 85, 0));
        for s in HEAT_STOPS {
            assert_eq!(colormap(s.t).unwrap(), s.rgb);
        }
    }

    #[test]
    fn colormap_clamps_and_rejects_nan() {
        assert_eq!(colormap(-0.2).unwrap(), (0, 0, 0));
        assert_eq!(colormap(1.7).unwrap(), (255, 255, 0));
        assert!(colormap(f64::NAN).is_err());
    }

    #[test]
    fn colormap_monotone() {
        let mut prev = (0u8, 0u8);
        for i in 0..=1000 {
            let (r, g, b) = colormap(i as f64 / 1000.0).unwrap();
            assert_eq!(b, 0);
            assert!((r, g) >= prev);
            prev = (r, g);
        }
    }

    #[test]
    fn single_yellow_hexagon() {
        let g = HexGrid::new(1, 1).unwrap();
        let out = svg(&render_plane(&plane(1, 1, vec![1.0]), &g, &RenderOptions::new(ImageFormat::Svg, 10.0)).unwrap());
        assert_eq!(fills(&out), vec!["rgb(255,255,0)"]);
        assert_eq!(out.matches("<polygon").count(), 1);
        assert!(out.contains("points=\"8.660254,0.000000 17.320508,5.000000 17.320508,15.000000 8.660254,20.000000 0.000000,15.000000 0.000000,5.000000\""));
    }

    #[test]
    fn two_by_two_plane_fills() {
        let g = HexGrid::new(2, 2).unwrap();
        let p = plane(2, 2, vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
        let out = svg(&render_plane(&p, &g, &RenderOptions::new(ImageFormat::Svg, 5.0)).unwrap());
        assert_eq!(
            fills(&out),
            vec!["rgb(0,0,0)", "rgb(170,0,0)", "rgb(255,85,0)", "rgb(255,255,0)"]
        );
    }

    #[test]
    fn rendering_is_deterministic() {
        let g = HexGrid::new(7, 5).unwrap();
        let p = plane(7, 5, (0..35).map(|i| i as f64 / 34.0).collect());
        for format in [ImageFormat::Svg, ImageFormat::Ppm] {
            let opts = RenderOptions::new(format, 6.0);
            assert_eq!(render_plane(&p, &g, &opts).unwrap(), render_plane(&p, &g, &opts).unwrap());
        }
        let out = svg(&render_plane(&p, &g, &RenderOptions::new(ImageFormat::Svg, 6.0)).unwrap());
        assert_eq!(out.matches("<polygon").count(), 35);
    }

    #[test]
    fn caption_is_a_safe_comment() {
        let g = HexGrid::new(1, 1).unwrap();
        let mut opts = RenderOptions::new(ImageFormat::Svg, 4.0);
        opts.caption = Some("p min=1 max=12 --x".into());
        let out = svg(&render_plane(&plane(1, 1, vec![0.0]), &g, &opts).unwrap());
        assert!(out.contains("<!-- p min=1 max=12 - -x -->"));
    }

    #[test]
    fn shape_mismatch() {
        let g = HexGrid::new(2, 2).unwrap();
        let opts = RenderOptions::new(ImageFormat::Svg, 4.0);
        assert!(render_plane(&plane(2, 1, vec![0.0, 1.0]), &g, &opts).is_err());
        assert!(render_cluster_map(&[0, 1, 2], &g, &opts).is_err());
        assert!(render_plane(&plane(2, 2, vec![0.0; 4]), &g, &RenderOptions::new(ImageFormat::Svg, 0.0)).is_err());
    }

    #[test]
    fn cluster_map_colors() {
        let g = HexGrid::new(4, 4).unwrap();
        let opts = RenderOptions::new(ImageFormat::Svg, 4.0);
        let one = svg(&render_cluster_map(&[0; 16], &g, &opts).unwrap());
        assert_eq!(fills(&one).iter().collect::<BTreeSet<_>>().len(), 1);
        let labels: Vec<usize> = (0..16).map(|i| i % 3).collect();
        let three = render_cluster_map(&labels, &g, &opts).unwrap();
        assert_eq!(three, render_cluster_map(&labels, &g, &opts).unwrap());
        assert_eq!(fills(&svg(&three)).iter().collect::<BTreeSet<_>>().len(), 3);
        // palette cycles
        let wrapped = svg(&render_cluster_map(&[12; 16], &g, &opts).unwrap());
        assert_eq!(fills(&wrapped)[0], "rgb(166,206,227)");
    }

    #[test]
    fn ppm_layout() {
        let g = HexGrid::new(2, 2).unwrap();
        let p = plane(2, 2, vec![0.0, 1.0, 0.5, 1.0]);
        let out = svg(&render_plane(&p, &g, &RenderOptions::new(ImageFormat::Ppm, 10.0)).unwrap());
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("P3"));
        // width = sqrt(3) * 10 * 2.5 = 43.3 -> 44; height = 10 * 3.5 = 35
        assert_eq!(lines.next(), Some("44 35"));
        assert_eq!(lines.next(), Some("255"));
        let rows: Vec<Vec<u8>> = lines
            .map(|l| l.split(' ').map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 35);
        assert!(rows.iter().all(|r| r.len() == 44 * 3));
        let px = |x: usize, y: usize| (rows[y][3 * x], rows[y][3 * x + 1], rows[y][3 * x + 2]);
        // centres of the four cells
        assert_eq!(px(8, 10), (0, 0, 0));
        assert_eq!(px(25, 10), (255, 255, 0));
        assert_eq!(px(17, 25), (255, 0, 0));
        assert_eq!(px(34, 25), (255, 255, 0));
        // top-left corner is background
        assert_eq!(px(0, 0), (255, 255, 255));
    }
}
