//! Minimal standalone SVG line plots; no display or font dependencies beyond
//! generic sans-serif. Output is deterministic byte-for-byte.

use std::fmt::Write as _;

pub struct Curve {
    pub label: String,
    pub color: &'static str,
    pub dash: Option<&'static str>,
    pub points: Vec<(f64, f64)>,
}

pub struct Plot {
    pub title: String,
    pub comment_lines: Vec<String>,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Shaded vertical band (e.g. the interval where two curves coincide).
    pub band: Option<(f64, f64, String)>,
    pub curves: Vec<Curve>,
    pub annotation: String,
}

const W: f64 = 960.0;
const H: f64 = 480.0;
const ML: f64 = 60.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 45.0;

impl Plot {
    fn sx(&self, x: f64) -> f64 {
        ML + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * (W - ML - MR)
    }

    fn sy(&self, y: f64) -> f64 {
        H - MB - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * (H - MT - MB)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
        );
        for line in &self.comment_lines {
            let _ = writeln!(s, "<!-- {} -->", line.replace("--", "- -"));
        }
        let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");

        if let Some((a, b, label)) = &self.band {
            let x0 = self.sx(*a);
            let x1 = self.sx(*b);
            let _ = writeln!(
                s,
                "<rect x=\"{x0:.2}\" y=\"{MT}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#e8f0fe\"/>",
                x1 - x0,
                H - MT - MB
            );
            let _ = writeln!(
                s,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#3c5a99\" text-anchor=\"middle\">{label}</text>",
                0.5 * (x0 + x1),
                MT + 18.0
            );
        }

        // axes
        let _ = writeln!(
            s,
            "<line x1=\"{ML}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#444\" stroke-width=\"1\"/>",
            self.sy(0.0),
            W - MR,
            self.sy(0.0)
        );
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{MT}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#444\" stroke-width=\"1\"/>",
            self.sx(0.0),
            self.sx(0.0),
            H - MB
        );
        // integer x ticks
        let mut xt = self.x_range.0.ceil();
        while xt <= self.x_range.1 {
            let px = self.sx(xt);
            let py = self.sy(0.0);
            let _ = writeln!(
                s,
                "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#444\"/>",
                py - 3.0,
                py + 3.0
            );
            let _ = writeln!(
                s,
                "<text x=\"{px:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\" text-anchor=\"middle\">{xt}</text>",
                py + 16.0
            );
            xt += 1.0;
        }
        // quarter y ticks
        for yt in [-0.25, 0.25] {
            let px = self.sx(0.0);
            let py = self.sy(yt);
            let _ = writeln!(
                s,
                "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"#444\"/>",
                px - 3.0,
                px + 3.0
            );
            let _ = writeln!(
                s,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\" text-anchor=\"end\">{yt}</text>",
                px - 6.0,
                py + 4.0
            );
        }

        for c in &self.curves {
            let mut path = String::new();
            for (i, (x, y)) in c.points.iter().enumerate() {
                let _ = write!(
                    path,
                    "{}{:.3},{:.3}",
                    if i == 0 { "M" } else { " L" },
                    self.sx(*x),
                    self.sy(*y)
                );
            }
            let dash = c
                .dash
                .map(|d| format!(" stroke-dasharray=\"{d}\""))
                .unwrap_or_default();
            let _ = writeln!(
                s,
                "<path d=\"{path}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"{dash}/>",
                c.color
            );
        }

        // legend
        for (i, c) in self.curves.iter().enumerate() {
            let y = MT + 14.0 + 18.0 * i as f64;
            let dash = c
                .dash
                .map(|d| format!(" stroke-dasharray=\"{d}\""))
                .unwrap_or_default();
            let _ = writeln!(
                s,
                "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{}\" stroke-width=\"1.8\"{dash}/>",
                W - 190.0,
                W - 150.0,
                c.color
            );
            let _ = writeln!(
                s,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#222\">{}</text>",
                W - 142.0,
                y + 4.0,
                c.label
            );
        }

        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" fill=\"#111\" text-anchor=\"middle\">{}</text>",
            0.5 * W,
            self.title
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#555\" text-anchor=\"middle\">{}</text>",
            0.5 * W,
            H - 10.0,
            self.annotation
        );
        s.push_str("</svg>\n");
        s
    }
}
