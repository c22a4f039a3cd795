//! Self-contained SVG log-log plots of scaling sweeps, plus a gnuplot script.

use std::fmt::Write as _;

use semiclass::analysis::{format_p, ScalingReport};

const W: f64 = 640.0;
const H: f64 = 440.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 150.0, 30.0, 50.0); // left, right, top, bottom
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, h: f64) -> f64 {
        let t = (h.log10() - self.x.0) / (self.x.1 - self.x.0);
        MARGIN.0 + t * (W - MARGIN.0 - MARGIN.1)
    }

    fn py(&self, v: f64) -> f64 {
        let t = (v.log10() - self.y.0) / (self.y.1 - self.y.0);
        H - MARGIN.3 - t * (H - MARGIN.2 - MARGIN.3)
    }
}

/// A line through the geometric centre of the data with slope `-exponent`.
fn anchored(h: &[f64], v: &[f64], exponent: f64) -> impl Fn(f64) -> f64 {
    let m = h.len() as f64;
    let lh = h.iter().map(|x| x.ln()).sum::<f64>() / m;
    let lv = v.iter().map(|x| x.ln()).sum::<f64>() / m;
    move |x: f64| (lv - exponent * (x.ln() - lh)).exp()
}

fn series(rep: &ScalingReport, p: f64) -> (Vec<f64>, Vec<f64>) {
    rep.rows.iter().filter(|r| r.p == p).map(|r| (r.h, r.norm)).unzip()
}

pub fn scaling_svg(rep: &ScalingReport) -> String {
    let hs: Vec<f64> = rep.rows.iter().map(|r| r.h).collect();
    let vs: Vec<f64> = rep.rows.iter().map(|r| r.norm).collect();
    let lo = |xs: &[f64]| xs.iter().copied().fold(f64::INFINITY, f64::min).log10();
    let hi = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max).log10();
    let pad = |a: f64, b: f64| if b - a < 1e-9 { (a - 0.5, b + 0.5) } else { (a - 0.08 * (b - a), b + 0.08 * (b - a)) };
    let ax = Axes { x: pad(lo(&hs), hi(&hs)), y: pad(lo(&vs), hi(&vs)) };

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN.0, W - MARGIN.1, MARGIN.2, H - MARGIN.3);
    let _ = writeln!(s, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y1 - y0);
    for e in (ax.x.0.ceil() as i32)..=(ax.x.1.floor() as i32) {
        let x = ax.px(10f64.powi(e));
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, y1 - 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#, y1 + 16.0);
    }
    for e in (ax.y.0.ceil() as i32)..=(ax.y.1.floor() as i32) {
        let y = ax.py(10f64.powi(e));
        let _ = writeln!(s, r#"<line x1="{x0}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#, x0 + 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#, x0 - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">h</text>"#, (x0 + x1) / 2.0, H - 10.0);
    let _ = writeln!(s, r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">ground-state L^p norm</text>"#, (y0 + y1) / 2.0, (y0 + y1) / 2.0);
    let _ = writeln!(s, r#"<text x="{x0}" y="18">{}</text>"#, escape(&rep.operator_desc));

    let (hmin, hmax) = (10f64.powf(ax.x.0), 10f64.powf(ax.x.1));
    let clip = format!(r#"<clipPath id="plot"><rect x="{x0}" y="{y0}" width="{}" height="{}"/></clipPath>"#, x1 - x0, y1 - y0);
    let _ = writeln!(s, "{clip}");
    for (i, fit) in rep.fits.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let (h, v) = series(rep, fit.p);
        let theory = anchored(&h, &v, fit.theoretical);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" clip-path="url(#plot)"/>"#,
            ax.px(hmin),
            ax.py(theory(hmin)),
            ax.px(hmax),
            ax.py(theory(hmax))
        );
        if let Some(k) = fit.ktz_reference {
            let ktz = anchored(&h, &v, k);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-dasharray="6,4" clip-path="url(#plot)"/>"#,
                ax.px(hmin),
                ax.py(ktz(hmin)),
                ax.px(hmax),
                ax.py(ktz(hmax))
            );
        }
        for (x, y) in h.iter().zip(&v) {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#, ax.px(*x), ax.py(*y));
        }
        let ly = y0 + 16.0 + 34.0 * i as f64;
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{ly:.2}" r="3.5" fill="{color}"/>"#, x1 + 16.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">p = {}</text>"#, x1 + 26.0, ly + 4.0, format_p(fit.p));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="10">fit {:.3}, theory {:.3}</text>"#, x1 + 26.0, ly + 18.0, fit.fitted, fit.theoretical);
    }
    let ly = y0 + 16.0 + 34.0 * rep.fits.len() as f64;
    let _ = writeln!(s, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="black"/>"#, x1 + 8.0, x1 + 28.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="10">theoretical slope</text>"#, x1 + 32.0, ly + 4.0);
    let _ = writeln!(s, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-dasharray="6,4"/>"#, x1 + 8.0, ly + 16.0, x1 + 28.0, ly + 16.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="10">KTZ reference</text>"#, x1 + 32.0, ly + 20.0);
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A gnuplot script plotting `scaling.csv` (same directory) on log-log axes.
pub fn gnuplot_script(rep: &ScalingReport) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset logscale xy\nset key outside right\nset xlabel 'h'\nset ylabel 'L^p norm'\n");
    s.push_str("set terminal svg size 640,440\nset output 'scaling_gnuplot.svg'\n");
    let mut plots = Vec::new();
    for (i, fit) in rep.fits.iter().enumerate() {
        let (h, v) = series(rep, fit.p);
        let line = anchored(&h, &v, fit.theoretical);
        let a = line(1.0);
        let tag = format_p(fit.p);
        let col = "strcol(2)";
        plots.push(format!(
            "'scaling.csv' every ::1 using 1:({col} eq '{tag}' ? $3 : 1/0) with points pt 7 lc {} title 'p = {tag}'",
            i + 1
        ));
        plots.push(format!("{a:e}*x**(-{}) with lines lc {} notitle", fit.theoretical, i + 1));
        if let Some(k) = fit.ktz_reference {
            let b = anchored(&h, &v, k)(1.0);
            plots.push(format!("{b:e}*x**(-{k}) with lines dt 2 lc {} notitle", i + 1));
        }
    }
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}
