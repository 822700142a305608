//! Offline stand-ins for the two rating judges.

use std::path::Path;
use std::sync::OnceLock;

use image::GrayImage;
use regex::Regex;

use crate::model::{Layout, Theme};

/// A pixel counts as ink when its luma differs from the background by more than this.
const INK_DELTA: i16 = 24;
/// Cells narrower or shorter than this many pixels are hard to read.
const SMALL_CELL_PX: u32 = 260;

/// Measurements the visual-clarity score is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClarityMeasures {
    /// Share of the canvas outside the bounding box of all ink.
    pub blank_fraction: f64,
    /// Share of pixels that are ink.
    pub ink_fraction: f64,
    /// Share of pixels on a strong horizontal or vertical luma edge.
    pub edge_density: f64,
    /// Share of layout cells with almost no ink.
    pub empty_cells: f64,
    /// Smallest cell side in pixels.
    pub min_cell_px: u32,
}

fn background(img: &GrayImage) -> u8 {
    let mut hist = [0u64; 256];
    for p in img.pixels() {
        hist[p.0[0] as usize] += 1;
    }
    (0..256).max_by_key(|&i| (hist[i], i)).unwrap_or(255) as u8
}

pub fn measure_clarity(img: &GrayImage, layout: Layout) -> ClarityMeasures {
    let (w, h) = img.dimensions();
    let bg = background(img) as i16;
    let ink = |x: u32, y: u32| (img.get_pixel(x, y).0[0] as i16 - bg).abs() > INK_DELTA;
    let (mut x0, mut y0, mut x1, mut y1) = (w, h, 0u32, 0u32);
    let mut ink_count = 0u64;
    let mut edges = 0u64;
    let cells = layout.cells();
    let mut cell_ink = vec![0u64; cells];
    let (cw, ch) = ((w / layout.cols).max(1), (h / layout.rows).max(1));
    for y in 0..h {
        for x in 0..w {
            let v = img.get_pixel(x, y).0[0] as i16;
            if x + 1 < w && y + 1 < h {
                let dx = (img.get_pixel(x + 1, y).0[0] as i16 - v).abs();
                let dy = (img.get_pixel(x, y + 1).0[0] as i16 - v).abs();
                if dx.max(dy) > 48 {
                    edges += 1;
                }
            }
            if ink(x, y) {
                ink_count += 1;
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
                let (c, r) = ((x / cw).min(layout.cols - 1), (y / ch).min(layout.rows - 1));
                cell_ink[(r * layout.cols + c) as usize] += 1;
            }
        }
    }
    let total = (w as f64) * (h as f64);
    let bbox = if ink_count == 0 { 0.0 } else { ((x1 - x0 + 1) as f64) * ((y1 - y0 + 1) as f64) };
    let cell_px = (cw as f64) * (ch as f64);
    let empty = cell_ink.iter().filter(|&&c| (c as f64) / cell_px < 0.01).count();
    ClarityMeasures {
        blank_fraction: 1.0 - bbox / total,
        ink_fraction: ink_count as f64 / total,
        edge_density: edges as f64 / total,
        empty_cells: empty as f64 / cells as f64,
        min_cell_px: cw.min(ch),
    }
}

/// Maps measurements to a 1–5 score with a one-line reason.
pub fn clarity_score(m: &ClarityMeasures) -> (i64, String) {
    let mut score = 5i64;
    let mut reasons = Vec::new();
    if m.ink_fraction < 0.02 {
        score -= 1;
        reasons.push("very little drawn content");
    }
    if m.ink_fraction > 0.30 {
        score -= 1;
        reasons.push("dense ink");
    }
    if m.edge_density > 0.12 {
        score -= 1;
        reasons.push("cluttered edges");
    }
    if m.empty_cells > 0.0 {
        score -= 2;
        reasons.push("empty subplot area");
    }
    if m.min_cell_px < SMALL_CELL_PX {
        score -= 1;
        reasons.push("cramped subplots");
    }
    if m.blank_fraction > 0.7 {
        score = score.min(2);
        reasons.push("mostly blank canvas");
    } else if m.blank_fraction > 0.4 {
        score = score.min(3);
        reasons.push("large blank margins");
    }
    let score = score.clamp(1, 5);
    let reason = if reasons.is_empty() { "legible, balanced and uncluttered".to_string() } else { reasons.join("; ") };
    (score, reason)
}

pub fn visual_clarity_heuristic(path: &Path, layout: Layout) -> Result<(i64, String), String> {
    let img = image::open(path).map_err(|e| format!("{}: {e}", path.display()))?.to_luma8();
    Ok(clarity_score(&measure_clarity(&img, layout)))
}

fn cell_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^-\s*\[(cell \d+|overall)\]\s*(.*)$").expect("valid regex"))
}

/// True when `text` contains one of the theme's marker tokens as whole words.
pub fn mentions_theme(theme: Theme, text: &str) -> bool {
    let lower = text.to_lowercase();
    theme.marker_tokens().iter().any(|t| {
        let pat = format!(r"\b{}\b", regex::escape(t));
        Regex::new(&pat).map(|re| re.is_match(&lower)).unwrap_or(false)
    })
}

/// Scores the share of subplots whose text is on theme.
pub fn semantic_heuristic(theme: Theme, figure_text: &str) -> (i64, String) {
    let cells: Vec<&str> = figure_text
        .lines()
        .filter_map(|l| cell_line().captures(l.trim()))
        .filter(|c| c[1].starts_with("cell"))
        .map(|c| c.get(2).map(|m| m.as_str()).unwrap_or(""))
        .collect();
    if cells.is_empty() {
        return (1, "no readable text".into());
    }
    let hits = cells.iter().filter(|t| mentions_theme(theme, t)).count();
    let f = hits as f64 / cells.len() as f64;
    let score = if f >= 1.0 {
        5
    } else if f >= 0.75 {
        4
    } else if f >= 0.5 {
        3
    } else if f > 0.0 {
        2
    } else {
        1
    };
    (score, format!("{hits} of {} subplots are about {theme}", cells.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Luma;

    #[test]
    fn blank_canvas_scores_low() {
        // A small drawing in one corner: 80% of the canvas is blank.
        let mut img = GrayImage::from_pixel(1000, 600, Luma([255]));
        for y in 0..200 {
            for x in 0..300 {
                if (x + y) % 7 == 0 {
                    img.put_pixel(x, y, Luma([20]));
                }
            }
        }
        let m = measure_clarity(&img, Layout::SINGLE);
        assert!(m.blank_fraction >= 0.8);
        assert!(clarity_score(&m).0 <= 2);
    }

    #[test]
    fn semantic_bands() {
        let on = "- [cell 1] Crop Yield by Year / Year / Crop Yield (t/ha)";
        let off = "- [cell 2] Gallery Attendance / Year / Visitors";
        assert_eq!(semantic_heuristic(Theme::Agriculture, on).0, 5);
        assert_eq!(semantic_heuristic(Theme::Agriculture, off).0, 1);
        assert_eq!(semantic_heuristic(Theme::Agriculture, &format!("{on}\n{off}")).0, 3);
        assert_eq!(semantic_heuristic(Theme::Agriculture, "").0, 1);
    }

    #[test]
    fn tokens_match_whole_words() {
        assert!(mentions_theme(Theme::Agriculture, "Farm output"));
        assert!(!mentions_theme(Theme::Agriculture, "Farmhouse paintings"));
    }
}
