//! Minimal static SVG emission for study reports: line charts and grouped
//! bar charts with plain axes and a text legend. No styling beyond what a
//! report figure needs.

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_ticks(min: f64, max: f64, target: usize) -> Vec<f64> {
    if !(max > min) {
        return vec![min];
    }
    let raw = (max - min) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(mag * 10.0);
    let start = (min / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = start;
    while t <= max + step * 1e-9 {
        ticks.push(t);
        t += step;
    }
    ticks
}

/// A polyline chart: one series per entry, shared x axis.
pub struct LineChart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    /// (series name, points)
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

impl LineChart<'_> {
    pub fn render(&self) -> String {
        let points: Vec<(f64, f64)> = self.series.iter().flat_map(|s| s.1.iter().copied()).collect();
        let (x0, x1) = bounds(points.iter().map(|p| p.0));
        let (mut y0, mut y1) = bounds(points.iter().map(|p| p.1));
        if y1 - y0 < 1e-9 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0).max(1e-12) * pw;
        let sy = |y: f64| MARGIN_TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut out = header(self.title);
        out.push_str(&axes(self.x_label, self.y_label));
        for t in nice_ticks(x0, x1, 6) {
            let x = sx(t);
            out.push_str(&format!(
                "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#ccc\"/>\n\
                 <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{t}</text>\n",
                MARGIN_TOP,
                MARGIN_TOP + ph,
                MARGIN_TOP + ph + 18.0
            ));
        }
        for t in nice_ticks(y0, y1, 6) {
            let y = sy(t);
            out.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ccc\"/>\n\
                 <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{t:.1}</text>\n",
                MARGIN_LEFT,
                MARGIN_LEFT + pw,
                MARGIN_LEFT - 8.0,
                y + 4.0
            ));
        }
        for (i, (name, pts)) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
            out.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                path.join(" ")
            ));
            for &(x, y) in pts {
                out.push_str(&format!(
                    "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
                    sx(x),
                    sy(y)
                ));
            }
            let ly = MARGIN_TOP + 16.0 * i as f64;
            out.push_str(&format!(
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n\
                 <text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
                WIDTH - MARGIN_RIGHT + 16.0,
                ly,
                WIDTH - MARGIN_RIGHT + 34.0,
                ly + 10.0,
                escape(name)
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

/// A grouped bar chart: one group per label, one bar per series.
pub struct BarChart<'a> {
    pub title: &'a str,
    pub y_label: &'a str,
    pub series_names: Vec<String>,
    /// (group label, one value per series)
    pub groups: Vec<(String, Vec<f64>)>,
}

impl BarChart<'_> {
    pub fn render(&self) -> String {
        let max = self
            .groups
            .iter()
            .flat_map(|g| g.1.iter().copied())
            .fold(0.0f64, f64::max)
            .max(1.0);
        let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let group_w = pw / self.groups.len().max(1) as f64;
        let bar_w = group_w * 0.8 / self.series_names.len().max(1) as f64;

        let mut out = header(self.title);
        out.push_str(&axes("", self.y_label));
        for t in nice_ticks(0.0, max, 6) {
            let y = MARGIN_TOP + ph - t / max * ph;
            out.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ccc\"/>\n\
                 <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{t:.0}</text>\n",
                MARGIN_LEFT,
                MARGIN_LEFT + pw,
                MARGIN_LEFT - 8.0,
                y + 4.0
            ));
        }
        for (gi, (label, values)) in self.groups.iter().enumerate() {
            let gx = MARGIN_LEFT + gi as f64 * group_w + group_w * 0.1;
            for (si, &v) in values.iter().enumerate() {
                let color = PALETTE[si % PALETTE.len()];
                let h = v / max * ph;
                out.push_str(&format!(
                    "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"{color}\"/>\n",
                    gx + si as f64 * bar_w,
                    MARGIN_TOP + ph - h,
                    bar_w * 0.92,
                    h
                ));
            }
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
                gx + group_w * 0.4,
                MARGIN_TOP + ph + 18.0,
                escape(label)
            ));
        }
        for (si, name) in self.series_names.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            let ly = MARGIN_TOP + 16.0 * si as f64;
            out.push_str(&format!(
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n\
                 <text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
                WIDTH - MARGIN_RIGHT + 16.0,
                ly,
                WIDTH - MARGIN_RIGHT + 34.0,
                ly + 10.0,
                escape(name)
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn axes(x_label: &str, y_label: &str) -> String {
    let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    format!(
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{cx}\" y=\"{by}\" text-anchor=\"middle\">{xl}</text>\n\
         <text x=\"18\" y=\"{cy}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {cy})\">{yl}</text>\n",
        l = MARGIN_LEFT,
        r = MARGIN_LEFT + pw,
        t = MARGIN_TOP,
        b = MARGIN_TOP + ph,
        cx = MARGIN_LEFT + pw / 2.0,
        by = HEIGHT - 16.0,
        cy = MARGIN_TOP + ph / 2.0,
        xl = escape(x_label),
        yl = escape(y_label),
    )
}
