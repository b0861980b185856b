//! Dependency-free SVG charts: a correlation heatmap and cumulative-return
//! line charts. Pure string builders over their inputs, with fixed decimal
//! formatting everywhere, so the same data always yields the same bytes.

use sharpefolio_core::backtest::PortfolioTrack;
use sharpefolio_core::matrix::Matrix;

// ---------------------------------------------------------------------------
// Shared bits
// ---------------------------------------------------------------------------

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

fn xml_escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(ch),
        }
    }
    out
}

fn svg_open(width: f64, height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\">\n\
         <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n"
    )
}

// ---------------------------------------------------------------------------
// Correlation heatmap
// ---------------------------------------------------------------------------

/// Blue (-1) through white (0) to red (+1).
fn heat_color(value: f64) -> String {
    let v = value.clamp(-1.0, 1.0);
    let fade = (255.0 * (1.0 - v.abs())).round() as u8;
    if v >= 0.0 {
        format!("#ff{fade:02x}{fade:02x}")
    } else {
        format!("#{fade:02x}{fade:02x}ff")
    }
}

pub fn correlation_heatmap_svg(tickers: &[String], correlation: &Matrix) -> String {
    let n = tickers.len();
    let cell = 44.0;
    let left = 90.0;
    let top = 70.0;
    let width = left + cell * n as f64 + 30.0;
    let height = top + cell * n as f64 + 30.0;

    let mut svg = svg_open(width, height);
    svg.push_str(&format!(
        "<text x=\"{left}\" y=\"28\" font-size=\"16\" fill=\"#222222\">Log-return correlation</text>\n"
    ));
    for (j, ticker) in tickers.iter().enumerate() {
        let x = left + cell * (j as f64 + 0.5);
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"#222222\" \
             text-anchor=\"middle\">{}</text>\n",
            top - 8.0,
            xml_escape(ticker)
        ));
    }
    for (i, ticker) in tickers.iter().enumerate() {
        let y = top + cell * (i as f64 + 0.5) + 4.0;
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{y:.2}\" font-size=\"11\" fill=\"#222222\" \
             text-anchor=\"end\">{}</text>\n",
            left - 8.0,
            xml_escape(ticker)
        ));
        for j in 0..n {
            let value = correlation.get(i, j);
            let x = left + cell * j as f64;
            let y = top + cell * i as f64;
            svg.push_str(&format!(
                "<rect class=\"cell\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cell}\" height=\"{cell}\" \
                 fill=\"{}\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>\n",
                heat_color(value)
            ));
            let tx = x + cell / 2.0;
            let ty = y + cell / 2.0 + 4.0;
            let ink = if value.abs() > 0.6 { "#ffffff" } else { "#222222" };
            svg.push_str(&format!(
                "<text x=\"{tx:.2}\" y=\"{ty:.2}\" font-size=\"10\" fill=\"{ink}\" \
                 text-anchor=\"middle\">{value:.2}</text>\n"
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

// ---------------------------------------------------------------------------
// Cumulative-return lines
// ---------------------------------------------------------------------------

/// Line chart of cumulative returns, exactly one polyline per track.
/// Benchmark tracks (label starting with `benchmark`) are dashed.
pub fn tracks_svg(title: &str, tracks: &[&PortfolioTrack]) -> String {
    let width = 920.0;
    let height = 520.0;
    let (left, right, top, bottom) = (80.0, width - 220.0, 60.0, height - 50.0);

    let mut lo = 0.0_f64;
    let mut hi = 0.0_f64;
    let mut max_len = 1;
    for track in tracks {
        for &v in &track.cumulative {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        max_len = max_len.max(track.cumulative.len());
    }
    let span = (hi - lo).max(1e-9);
    let x_of = |i: usize| -> f64 {
        if max_len <= 1 {
            (left + right) / 2.0
        } else {
            left + (right - left) * i as f64 / (max_len - 1) as f64
        }
    };
    let y_of = |v: f64| -> f64 { bottom - (bottom - top) * (v - lo) / span };

    let mut svg = svg_open(width, height);
    svg.push_str(&format!(
        "<text x=\"{left}\" y=\"30\" font-size=\"16\" fill=\"#222222\">{}</text>\n",
        xml_escape(title)
    ));

    // frame, zero line, and y-axis ticks are lines, not polylines, so the
    // polyline count equals the track count
    svg.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{bottom}\" stroke=\"#444444\"/>\n\
         <line x1=\"{left}\" y1=\"{bottom}\" x2=\"{right}\" y2=\"{bottom}\" stroke=\"#444444\"/>\n"
    ));
    for (value, label) in [(lo, format!("{:.1}%", lo * 100.0)), (hi, format!("{:.1}%", hi * 100.0))] {
        let y = y_of(value);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{left}\" y2=\"{y:.2}\" stroke=\"#444444\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"#222222\" \
             text-anchor=\"end\">{label}</text>\n",
            left - 5.0,
            left - 9.0,
            y + 4.0
        ));
    }
    if lo < 0.0 && hi > 0.0 {
        let y = y_of(0.0);
        svg.push_str(&format!(
            "<line x1=\"{left}\" y1=\"{y:.2}\" x2=\"{right}\" y2=\"{y:.2}\" \
             stroke=\"#bbbbbb\" stroke-dasharray=\"3 3\"/>\n"
        ));
    }
    if let Some(track) = tracks.iter().max_by_key(|t| t.dates.len()) {
        if let (Some(first), Some(last)) = (track.dates.first(), track.dates.last()) {
            svg.push_str(&format!(
                "<text x=\"{left}\" y=\"{:.2}\" font-size=\"11\" fill=\"#222222\">{first}</text>\n\
                 <text x=\"{right}\" y=\"{:.2}\" font-size=\"11\" fill=\"#222222\" \
                 text-anchor=\"end\">{last}</text>\n",
                bottom + 20.0,
                bottom + 20.0
            ));
        }
    }

    for (t, track) in tracks.iter().enumerate() {
        let benchmark = track.label.starts_with("benchmark");
        let color = if track.label == "benchmark" {
            "#222222"
        } else {
            PALETTE[t % PALETTE.len()]
        };
        let dash = if benchmark { " stroke-dasharray=\"6 4\"" } else { "" };
        let mut points = String::new();
        for (i, &v) in track.cumulative.iter().enumerate() {
            if i > 0 {
                points.push(' ');
            }
            points.push_str(&format!("{:.2},{:.2}", x_of(i), y_of(v)));
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"{dash} \
             points=\"{points}\"/>\n"
        ));

        // legend swatch and label
        let ly = top + 18.0 * t as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" \
             stroke=\"{color}\" stroke-width=\"3\"{dash}/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#222222\">{}</text>\n",
            right + 12.0,
            right + 40.0,
            right + 46.0,
            ly + 4.0,
            xml_escape(&track.label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

// ---------------------------------------------------------------------------
